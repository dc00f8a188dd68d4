//! Real symmetric tridiagonal eigenproblems.
//!
//! Each parity block of the collective Hamiltonian is tridiagonal, so the
//! low end of its spectrum is found by Sturm-sequence bisection and the
//! matching eigenvector by inverse iteration. Both are O(n) per step.

use crate::error::{Error, Result};

const MAX_BISECTION_STEPS: usize = 512;
const MAX_INVERSE_STEPS: usize = 12;

/// Symmetric tridiagonal matrix stored as its diagonal and first
/// off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidParams("empty tridiagonal matrix".into()));
        }
        if off.len() + 1 != diag.len() {
            return Err(Error::InvalidParams(format!(
                "off-diagonal length {} does not match dimension {}",
                off.len(),
                diag.len()
            )));
        }
        if diag.iter().chain(off.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite matrix entry".into()));
        }
        Ok(Self { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.diag
            .iter()
            .chain(self.off.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, v)| d * v).collect();
        for i in 0..n - 1 {
            y[i] += self.off[i] * x[i + 1];
            y[i + 1] += self.off[i] * x[i];
        }
        y
    }

    fn pivmin(&self) -> f64 {
        let e2 = self.off.iter().fold(1.0_f64, |m, v| m.max(v * v));
        f64::MIN_POSITIVE * e2
    }

    /// Number of eigenvalues strictly below `x` (Sturm count of the LDL^T
    /// factorisation of `T - xI`).
    pub fn count_below(&self, x: f64) -> usize {
        let pivmin = self.pivmin();
        let mut count = 0;
        let mut d = self.diag[0] - x;
        if d.abs() < pivmin {
            d = -pivmin;
        }
        if d < 0.0 {
            count += 1;
        }
        for i in 1..self.dim() {
            let e = self.off[i - 1];
            d = self.diag[i] - x - e * e / d;
            if d.abs() < pivmin {
                d = -pivmin;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `index`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, index: usize) -> Result<f64> {
        let n = self.dim();
        if index >= n {
            return Err(Error::InvalidParams(format!(
                "eigenvalue index {index} out of range for dimension {n}"
            )));
        }
        let (g_lo, g_hi) = self.gershgorin();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let slack = 2.0 * f64::EPSILON * scale * n as f64 + self.pivmin();
        let mut lo = g_lo - slack;
        let mut hi = g_hi + slack;
        let atol = f64::EPSILON * scale;
        for _ in 0..MAX_BISECTION_STEPS {
            let width = hi - lo;
            let tol = atol.max(2.0 * f64::EPSILON * lo.abs().max(hi.abs()));
            if width <= tol {
                return Ok(0.5 * (lo + hi));
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return Ok(mid);
            }
            if self.count_below(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Err(Error::NoConvergence(format!(
            "bisection for eigenvalue {index} stalled in [{lo}, {hi}]"
        )))
    }

    /// The `count` lowest eigenvalues, sorted ascending.
    pub fn lowest(&self, count: usize) -> Result<Vec<f64>> {
        (0..count.min(self.dim()))
            .map(|j| self.eigenvalue(j))
            .collect()
    }

    /// The full spectrum, sorted ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.lowest(self.dim())
    }

    /// Unit eigenvector for the eigenvalue `lambda` by inverse iteration.
    ///
    /// Returns the vector, its Rayleigh quotient and the residual
    /// `||T v - rq v||_2`.
    pub fn eigenvector(&self, lambda: f64) -> Result<Eigenpair> {
        let n = self.dim();
        if n == 1 {
            return Ok(Eigenpair {
                value: self.diag[0],
                vector: vec![1.0],
                residual: 0.0,
            });
        }
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let tol = 64.0 * f64::EPSILON * scale * (n as f64).sqrt();
        let lu = ShiftedLu::factor(self, lambda, scale);

        // Deterministic start vector with no reflection symmetry.
        let mut x: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_749_895).fract())
            .collect();
        normalize(&mut x);

        let mut best: Option<Eigenpair> = None;
        for _ in 0..MAX_INVERSE_STEPS {
            lu.solve(&mut x);
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NoConvergence(format!(
                    "inverse iteration overflowed near lambda = {lambda}"
                )));
            }
            normalize(&mut x);
            let tx = self.apply(&x);
            let rq: f64 = tx.iter().zip(&x).map(|(a, b)| a * b).sum();
            let residual = tx
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - rq * b).powi(2))
                .sum::<f64>()
                .sqrt();
            let better = best.as_ref().is_none_or(|b| residual < b.residual);
            if better {
                best = Some(Eigenpair {
                    value: rq,
                    vector: x.clone(),
                    residual,
                });
            }
            if residual <= tol {
                break;
            }
        }
        let pair = best.expect("at least one inverse iteration step");
        if pair.residual > 1e3 * tol {
            return Err(Error::NoConvergence(format!(
                "inverse iteration residual {} near lambda = {lambda}",
                pair.residual
            )));
        }
        Ok(pair)
    }
}

/// An eigenvalue with its unit eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
}

/// LU factorisation of `T - shift*I` with partial pivoting.
struct ShiftedLu {
    d: Vec<f64>,
    dl: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn factor(t: &SymTridiagonal, shift: f64, scale: f64) -> Self {
        let n = t.dim();
        let tiny = f64::EPSILON * scale;
        let mut d: Vec<f64> = t.diag.iter().map(|v| v - shift).collect();
        let mut dl = t.off.clone();
        let mut du = t.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        Self {
            d,
            dl,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                let t = b[i];
                b[i] = b[i + 1];
                b[i + 1] = t - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn dense(t: &SymTridiagonal) -> DMatrix<f64> {
        let n = t.dim();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                t.diag[i]
            } else if i + 1 == j {
                t.off[i]
            } else if j + 1 == i {
                t.off[j]
            } else {
                0.0
            }
        })
    }

    #[test]
    fn matches_dense_spectrum() {
        let diag: Vec<f64> = (0..40).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let off: Vec<f64> = (0..39).map(|i| 0.3 + ((i * 3) % 5) as f64 * 0.4).collect();
        let t = SymTridiagonal::new(diag, off).unwrap();
        let mut reference = dense(&t).symmetric_eigenvalues().as_slice().to_vec();
        reference.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ours = t.eigenvalues().unwrap();
        for (a, b) in ours.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!(ours.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eigenvector_of_lowest() {
        // Discrete Laplacian: lowest eigenvalue 2 - 2cos(pi/(n+1)).
        let n = 25;
        let t = SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1]).unwrap();
        let lam = t.eigenvalue(0).unwrap();
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((lam - exact).abs() < 1e-13);
        let pair = t.eigenvector(lam).unwrap();
        assert!(pair.residual < 1e-12);
        let mut expected: Vec<f64> = (0..n)
            .map(|i| ((i as f64 + 1.0) * std::f64::consts::PI / (n as f64 + 1.0)).sin())
            .collect();
        normalize(&mut expected);
        let overlap: f64 = expected.iter().zip(&pair.vector).map(|(a, b)| a * b).sum();
        assert!((overlap.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reducible_matrix() {
        // Zero coupling: eigenvalues are the diagonal, including repeats.
        let t = SymTridiagonal::new(vec![3.0, -1.0, 3.0, 0.5], vec![0.0; 3]).unwrap();
        let ev = t.eigenvalues().unwrap();
        for (a, b) in ev.iter().zip([-1.0, 0.5, 3.0, 3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        let pair = t.eigenvector(-1.0).unwrap();
        assert!((pair.vector[1].abs() - 1.0).abs() < 1e-14);
        assert!(pair.residual < 1e-14);
    }

    #[test]
    fn zero_eigenvalue_terminates() {
        let t = SymTridiagonal::new(vec![0.0, 0.0], vec![1.0]).unwrap();
        let lam = t.lowest(2).unwrap();
        assert!((lam[0] + 1.0).abs() < 1e-15 && (lam[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(SymTridiagonal::new(vec![], vec![]).is_err());
        assert!(SymTridiagonal::new(vec![1.0, 2.0], vec![]).is_err());
        assert!(SymTridiagonal::new(vec![f64::NAN], vec![]).is_err());
    }
}
