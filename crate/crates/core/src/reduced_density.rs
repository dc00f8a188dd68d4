//! Reduced density matrices of k-spin blocks of a symmetric pure state.
//!
//! Splitting `N = k + L`, every Dicke state factorises as
//!
//! ```text
//! |N, n> = sum_l c(n, l) |L, l> (x) |k, n - l>,
//! c(n, l)^2 = C(L, l) C(k, n - l) / C(N, n)
//! ```
//!
//! so `rho_k = F F^T` with `F[a][l] = P_{a+l} c(a+l, l)`. The squared
//! coefficients never exceed one, and they are formed in log space so the
//! binomials themselves (up to C(500, 250) ~ 1e149) are never materialised.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::symmetric_subspace::DickeVector;

const TABLE_LEN: usize = 4096;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // Kahan-compensated running sum of ln i.
        let mut table = Vec::with_capacity(TABLE_LEN);
        let mut sum = 0.0_f64;
        let mut comp = 0.0_f64;
        table.push(0.0);
        for i in 1..TABLE_LEN {
            let y = (i as f64).ln() - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            table.push(sum);
        }
        table
    })
}

/// `ln n!`, tabulated below 4096 and from the Stirling series above.
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) < TABLE_LEN {
        return ln_factorial_table()[n as usize];
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// `ln C(n, r)`; negative infinity when `r < 0` or `r > n` (the coefficient
/// is zero).
pub fn log_binomial(n: u64, r: i64) -> f64 {
    if r < 0 || r as u64 > n {
        return f64::NEG_INFINITY;
    }
    let r = r as u64;
    if r == 0 || r == n {
        return 0.0;
    }
    ln_factorial(n) - ln_factorial(r) - ln_factorial(n - r)
}

/// Density matrix of a k-spin block in the block's Dicke basis `|k, j>`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDensity {
    pub block_size: usize,
    pub matrix: DMatrix<f64>,
}

impl ReducedDensity {
    pub const PSD_TOLERANCE: f64 = 1e-10;

    /// Wraps an explicit matrix (must be square and symmetric).
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidParams("density matrix must be square".into()));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite density matrix entry".into()));
        }
        let n = matrix.nrows();
        for i in 0..n {
            for j in 0..i {
                if matrix[(i, j)] != matrix[(j, i)] {
                    return Err(Error::InvalidParams(
                        "density matrix is not symmetric".into(),
                    ));
                }
            }
        }
        Ok(Self {
            block_size: n - 1,
            matrix,
        })
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        Self::from_matrix(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(
            entries,
        )))
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Eigenvalues, ascending. States of definite parity give a matrix with
    /// no even/odd cross terms; the two sectors are then diagonalised
    /// separately.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.matrix.nrows();
        let decoupled = (0..n).all(|i| (0..n).all(|j| (i + j) % 2 == 0 || self.matrix[(i, j)] == 0.0));
        let mut values = if decoupled && n > 2 {
            let mut out = Vec::with_capacity(n);
            for start in 0..2 {
                let idx: Vec<usize> = (start..n).step_by(2).collect();
                let block = DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.matrix[(idx[r], idx[c])]);
                out.extend(block.symmetric_eigenvalues().iter().copied());
            }
            out
        } else {
            self.matrix.symmetric_eigenvalues().iter().copied().collect()
        };
        values.sort_by(|a, b| a.total_cmp(b));
        values
    }
}

/// Reduced density matrix of any `k` spins, `1 <= k <= N`.
pub fn reduce(state: &DickeVector, k: usize) -> Result<ReducedDensity> {
    let n = state.n_spins();
    if k == 0 || k > n {
        return Err(Error::BlockOutOfRange { k, n });
    }
    let norm_sq: f64 = state.amplitudes().iter().map(|v| v * v).sum();
    if (norm_sq - 1.0).abs() > DickeVector::NORM_TOLERANCE {
        return Err(Error::NotNormalized { norm_sq });
    }
    Ok(reduce_block(state, k))
}

/// Same as [`reduce`] but also accepts `k = 0` (the trivial 1x1 block).
pub(crate) fn reduce_block(state: &DickeVector, k: usize) -> ReducedDensity {
    let n = state.n_spins();
    let rest = n - k;
    let amps = state.amplitudes();

    let lb_rest: Vec<f64> = (0..=rest).map(|l| log_binomial(rest as u64, l as i64)).collect();
    let lb_block: Vec<f64> = (0..=k).map(|a| log_binomial(k as u64, a as i64)).collect();
    let lb_full: Vec<f64> = (0..=n).map(|m| log_binomial(n as u64, m as i64)).collect();

    // factor[a * (rest + 1) + l] = P_{a+l} c(a+l, l)
    let width = rest + 1;
    let mut factor = vec![0.0; (k + 1) * width];
    for a in 0..=k {
        for l in 0..=rest {
            let p = amps[a + l];
            if p != 0.0 {
                let log_c = 0.5 * (lb_rest[l] + lb_block[a] - lb_full[a + l]);
                factor[a * width + l] = p * log_c.exp();
            }
        }
    }

    let mut matrix = DMatrix::zeros(k + 1, k + 1);
    for a in 0..=k {
        let row_a = &factor[a * width..(a + 1) * width];
        for b in a..=k {
            let row_b = &factor[b * width..(b + 1) * width];
            let v: f64 = row_a.iter().zip(row_b).map(|(x, y)| x * y).sum();
            matrix[(a, b)] = v;
            matrix[(b, a)] = v;
        }
    }
    ReducedDensity {
        block_size: k,
        matrix,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_binomials() {
        assert!((log_binomial(4, 2) - 6f64.ln()).abs() < 1e-15);
        for n in 0..50 {
            assert_eq!(log_binomial(n, 0), 0.0);
            assert_eq!(log_binomial(n, n as i64), 0.0);
        }
        assert_eq!(log_binomial(5, -1), f64::NEG_INFINITY);
        assert_eq!(log_binomial(5, 6), f64::NEG_INFINITY);
        // ln C(60, 30) against the exact integer 118264581564861424.
        assert!((log_binomial(60, 30) - 118_264_581_564_861_424f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn stirling_branch_is_continuous() {
        let below = ln_factorial(TABLE_LEN as u64 - 1) + (TABLE_LEN as f64).ln();
        let above = ln_factorial(TABLE_LEN as u64);
        assert!((below - above).abs() / above < 1e-14);
    }

    #[test]
    fn ghz_two_spin_block() {
        let rho = reduce(&DickeVector::ghz(4).unwrap(), 2).unwrap();
        let expected = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 0.0, 0.5]));
        assert!((rho.matrix - expected).abs().max() < 1e-15);
    }

    #[test]
    fn single_excitation_single_spin() {
        let rho = reduce(&DickeVector::dicke(2, 1).unwrap(), 1).unwrap();
        assert!((rho.matrix[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((rho.matrix[(1, 1)] - 0.5).abs() < 1e-15);
        assert_eq!(rho.matrix[(0, 1)], 0.0);
    }

    #[test]
    fn full_block_is_projector() {
        let state = DickeVector::normalized((0..9).map(|i| (i as f64 * 0.7).cos()).collect()).unwrap();
        let rho = reduce(&state, 8).unwrap();
        let ev = rho.eigenvalues();
        assert!((ev[8] - 1.0).abs() < 1e-10);
        assert!(ev[..8].iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn range_checks() {
        let state = DickeVector::ghz(3).unwrap();
        assert!(matches!(reduce(&state, 0), Err(Error::BlockOutOfRange { .. })));
        assert!(matches!(reduce(&state, 4), Err(Error::BlockOutOfRange { .. })));
    }

    #[test]
    fn large_n_stays_finite() {
        let n = 500;
        let amps: Vec<f64> = (0..=n).map(|i| (-((i as f64 - 250.0) / 30.0).powi(2)).exp()).collect();
        let state = DickeVector::normalized(amps).unwrap();
        let rho = reduce(&state, 250).unwrap();
        assert!(rho.matrix.iter().all(|v| v.is_finite()));
        assert!((rho.trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn from_matrix_rejects_asymmetry() {
        let m = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.0, 0.5]);
        assert!(ReducedDensity::from_matrix(m).is_err());
    }
}
