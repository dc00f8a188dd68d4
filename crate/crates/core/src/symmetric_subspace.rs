//! The LMG Hamiltonian restricted to the permutation-symmetric (Dicke)
//! subspace and its ground state.
//!
//! Collective operators are half-sums of Paulis, `J_a = (1/2) sum_i s_a^i`,
//! so the maximal spin is `J = N/2` and the Dicke state with `n_e`
//! excitations has `M = n_e - N/2`. In this convention
//!
//! ```text
//! H = -(l/N)(1+g)(J^2 - Jz^2 - N/2) - 2 h Jz - (l/2N)(1-g)(J+^2 + J-^2)
//! ```
//!
//! equals the Pauli-sum form exactly, with no additive constant. `J+^2`
//! changes `n_e` by two, so the matrix splits into an even and an odd
//! tridiagonal block.

use crate::error::{Error, Result};
use crate::tridiagonal::SymTridiagonal;

/// Control parameters of the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub n_spins: usize,
    pub gamma: f64,
    pub field: f64,
    pub coupling: f64,
}

impl ModelParams {
    /// Parameters with unit coupling.
    pub fn new(n_spins: usize, gamma: f64, field: f64) -> Result<Self> {
        Self::with_coupling(n_spins, gamma, field, 1.0)
    }

    pub fn with_coupling(n_spins: usize, gamma: f64, field: f64, coupling: f64) -> Result<Self> {
        let params = Self {
            n_spins,
            gamma,
            field,
            coupling,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_spins < 2 {
            return Err(Error::InvalidParams(format!(
                "need at least two spins, got N = {}",
                self.n_spins
            )));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidParams(format!(
                "anisotropy gamma = {} outside [0, 1]",
                self.gamma
            )));
        }
        if !self.field.is_finite() || self.field < 0.0 {
            return Err(Error::InvalidParams(format!(
                "field h = {} must be finite and non-negative",
                self.field
            )));
        }
        if !self.coupling.is_finite() || self.coupling <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "coupling lambda = {} must be finite and positive",
                self.coupling
            )));
        }
        Ok(())
    }

    /// Same model at a different field.
    pub fn at_field(&self, field: f64) -> Result<Self> {
        Self::with_coupling(self.n_spins, self.gamma, field, self.coupling)
    }
}

/// Parity of the excitation number `n_e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n_e: usize) -> Self {
        if n_e.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    fn offset(self) -> usize {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

impl std::str::FromStr for Parity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "even" => Ok(Parity::Even),
            "odd" => Ok(Parity::Odd),
            other => Err(Error::InvalidParams(format!("unknown parity `{other}`"))),
        }
    }
}

/// The Hamiltonian in the Dicke basis `|N, n_e>`, `n_e = 0..=N`.
///
/// Only `<n_e|H|n_e>` and `<n_e+2|H|n_e>` are nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedHamiltonian {
    pub n_spins: usize,
    pub diagonal: Vec<f64>,
    /// `second_offdiagonal[n_e]` couples `n_e` and `n_e + 2`.
    pub second_offdiagonal: Vec<f64>,
}

impl BandedHamiltonian {
    pub fn dim(&self) -> usize {
        self.n_spins + 1
    }

    pub fn max_abs(&self) -> f64 {
        self.diagonal
            .iter()
            .chain(self.second_offdiagonal.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Entry `<row|H|col>`.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        if row == col {
            self.diagonal[row]
        } else if row + 2 == col {
            self.second_offdiagonal[row]
        } else if col + 2 == row {
            self.second_offdiagonal[col]
        } else {
            0.0
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.diagonal.iter().zip(x).map(|(d, v)| d * v).collect();
        for (i, &e) in self.second_offdiagonal.iter().enumerate() {
            y[i] += e * x[i + 2];
            y[i + 2] += e * x[i];
        }
        y
    }

    /// Basis indices belonging to one parity sector.
    pub fn block_indices(&self, parity: Parity) -> Vec<usize> {
        (parity.offset()..self.dim()).step_by(2).collect()
    }

    /// The tridiagonal block acting on one parity sector, or `None` if the
    /// sector is empty.
    pub fn parity_block(&self, parity: Parity) -> Option<SymTridiagonal> {
        let idx = self.block_indices(parity);
        if idx.is_empty() {
            return None;
        }
        let diag = idx.iter().map(|&i| self.diagonal[i]).collect();
        let off = idx
            .iter()
            .take(idx.len() - 1)
            .map(|&i| self.second_offdiagonal[i])
            .collect();
        SymTridiagonal::new(diag, off).ok()
    }
}

/// `sqrt(J(J+1) - M(M+1))`, the matrix element of `J+` from `M` to `M+1`.
fn raising(j: f64, m: f64) -> f64 {
    (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

pub fn build_hamiltonian(params: &ModelParams) -> Result<BandedHamiltonian> {
    params.validate()?;
    let n = params.n_spins;
    let nf = n as f64;
    let j = nf / 2.0;
    let lam = params.coupling;
    let g = params.gamma;
    let h = params.field;

    let diagonal = (0..=n)
        .map(|ne| {
            let m = ne as f64 - j;
            -(lam / nf) * (1.0 + g) * (j * (j + 1.0) - m * m - nf / 2.0) - 2.0 * h * m
        })
        .collect();
    let second_offdiagonal = (0..n.saturating_sub(1))
        .map(|ne| {
            let m = ne as f64 - j;
            -(lam / (2.0 * nf)) * (1.0 - g) * raising(j, m) * raising(j, m + 1.0)
        })
        .collect();
    Ok(BandedHamiltonian {
        n_spins: n,
        diagonal,
        second_offdiagonal,
    })
}

/// Amplitudes `P_{n_e}` of a real permutation-symmetric pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeVector {
    n_spins: usize,
    amplitudes: Vec<f64>,
}

impl DickeVector {
    pub const NORM_TOLERANCE: f64 = 1e-12;

    pub fn new(amplitudes: Vec<f64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::InvalidParams(
                "a Dicke vector needs at least N = 1".into(),
            ));
        }
        if amplitudes.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite amplitude".into()));
        }
        let norm_sq: f64 = amplitudes.iter().map(|v| v * v).sum();
        if (norm_sq - 1.0).abs() > Self::NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self {
            n_spins: amplitudes.len() - 1,
            amplitudes,
        })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(mut amplitudes: Vec<f64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized {
                norm_sq: norm * norm,
            });
        }
        amplitudes.iter_mut().for_each(|v| *v /= norm);
        Self::new(amplitudes)
    }

    /// The Dicke state `|N, n_e>`.
    pub fn dicke(n_spins: usize, n_e: usize) -> Result<Self> {
        if n_e > n_spins {
            return Err(Error::InvalidParams(format!(
                "n_e = {n_e} exceeds N = {n_spins}"
            )));
        }
        let mut amps = vec![0.0; n_spins + 1];
        amps[n_e] = 1.0;
        Self::new(amps)
    }

    /// `(|0...0> + |1...1>)/sqrt(2)`.
    pub fn ghz(n_spins: usize) -> Result<Self> {
        let mut amps = vec![0.0; n_spins + 1];
        amps[0] = std::f64::consts::FRAC_1_SQRT_2;
        amps[n_spins] = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(amps)
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<f64> {
        self.amplitudes
    }
}

/// Ground state of the model at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub params: ModelParams,
    pub energy: f64,
    pub vector: DickeVector,
    pub parity: Parity,
    pub eigensolve_residual: f64,
}

/// Relative gap below which the even and odd block minima count as
/// degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;

/// Lowest and next-lowest level of each parity block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLevels {
    pub even: Vec<f64>,
    pub odd: Vec<f64>,
}

/// Lowest two levels in each parity block.
pub fn block_levels(ham: &BandedHamiltonian) -> Result<BlockLevels> {
    let levels = |p| -> Result<Vec<f64>> {
        match ham.parity_block(p) {
            Some(block) => block.lowest(2),
            None => Ok(Vec::new()),
        }
    };
    Ok(BlockLevels {
        even: levels(Parity::Even)?,
        odd: levels(Parity::Odd)?,
    })
}

pub fn ground_state(params: &ModelParams) -> Result<GroundState> {
    let ham = build_hamiltonian(params)?;
    let scale = ham.max_abs().max(f64::MIN_POSITIVE);

    let even = ham
        .parity_block(Parity::Even)
        .ok_or_else(|| Error::NoConvergence("empty even block".into()))?;
    let odd = ham.parity_block(Parity::Odd);

    let e_even = even.eigenvalue(0)?;
    let e_odd = match &odd {
        Some(block) => Some(block.eigenvalue(0)?),
        None => None,
    };

    let (parity, block, lambda) = match (&odd, e_odd) {
        (Some(odd_block), Some(eo)) => {
            let tie = DEGENERACY_TOLERANCE * scale.max(e_even.abs().max(eo.abs()));
            if eo < e_even - tie {
                (Parity::Odd, odd_block, eo)
            } else {
                (Parity::Even, &even, e_even)
            }
        }
        _ => (Parity::Even, &even, e_even),
    };

    let pair = block.eigenvector(lambda)?;
    let mut amplitudes = vec![0.0; ham.dim()];
    for (slot, value) in ham.block_indices(parity).into_iter().zip(&pair.vector) {
        amplitudes[slot] = *value;
    }
    fix_sign(&mut amplitudes);

    let hv = ham.apply(&amplitudes);
    let residual = hv
        .iter()
        .zip(&amplitudes)
        .map(|(a, b)| (a - pair.value * b).powi(2))
        .sum::<f64>()
        .sqrt();
    let bound = 1e-9 * scale * ham.dim() as f64;
    if residual > bound {
        return Err(Error::NoConvergence(format!(
            "ground-state residual {residual:e} exceeds {bound:e}"
        )));
    }

    Ok(GroundState {
        params: *params,
        energy: pair.value,
        vector: DickeVector::normalized(amplitudes)?,
        parity,
        eigensolve_residual: residual,
    })
}

/// Makes the largest-magnitude amplitude positive (first one on ties).
fn fix_sign(amplitudes: &mut [f64]) {
    let mut best = 0;
    for (i, v) in amplitudes.iter().enumerate() {
        if v.abs() > amplitudes[best].abs() {
            best = i;
        }
    }
    if amplitudes[best] < 0.0 {
        amplitudes.iter_mut().for_each(|v| *v = -*v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn two_spin_matrix_elements() {
        let h = build_hamiltonian(&ModelParams::new(2, 0.5, 0.0).unwrap()).unwrap();
        assert!(close(h.diagonal[0], 0.0, 1e-15));
        assert!(close(h.diagonal[1], -0.75, 1e-15));
        assert!(close(h.diagonal[2], 0.0, 1e-15));
        assert_eq!(h.second_offdiagonal.len(), 1);
        assert!(close(h.second_offdiagonal[0], -0.25, 1e-15));
    }

    #[test]
    fn isotropic_has_no_pair_hopping() {
        for field in [0.0, 0.7, 3.0] {
            let h = build_hamiltonian(&ModelParams::new(2, 1.0, field).unwrap()).unwrap();
            assert!(h.second_offdiagonal.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn validation() {
        assert!(ModelParams::new(1, 0.5, 0.0).is_err());
        assert!(ModelParams::new(4, -0.1, 0.0).is_err());
        assert!(ModelParams::new(4, 1.1, 0.0).is_err());
        assert!(ModelParams::new(4, 0.5, -1.0).is_err());
        assert!(ModelParams::new(4, 0.5, f64::NAN).is_err());
        assert!(ModelParams::with_coupling(4, 0.5, 1.0, 0.0).is_err());
        assert!(ModelParams::new(2, 0.0, 0.0).is_ok());
    }

    #[test]
    fn two_spin_ground_state_is_single_excitation() {
        let gs = ground_state(&ModelParams::new(2, 0.5, 0.0).unwrap()).unwrap();
        assert!(close(gs.energy, -0.75, 1e-14));
        assert_eq!(gs.parity, Parity::Odd);
        assert_eq!(gs.vector.amplitudes(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn strong_field_polarizes() {
        let gs = ground_state(&ModelParams::new(2, 0.5, 2.0).unwrap()).unwrap();
        assert!(gs.vector.amplitudes()[2] > 0.99);
    }

    #[test]
    fn parity_blocks_decouple() {
        let h = build_hamiltonian(&ModelParams::new(9, 0.3, 0.8).unwrap()).unwrap();
        for r in 0..h.dim() {
            for c in 0..h.dim() {
                if (r + c) % 2 == 1 {
                    assert_eq!(h.entry(r, c), 0.0);
                }
            }
        }
    }

    #[test]
    fn block_solve_matches_dense() {
        for &(n, g, f) in &[(7, 0.5, 0.4), (12, 0.0, 1.0), (20, 0.9, 1.7), (31, 0.5, 0.0)] {
            let params = ModelParams::new(n, g, f).unwrap();
            let h = build_hamiltonian(&params).unwrap();
            let dense = DMatrix::from_fn(h.dim(), h.dim(), |r, c| h.entry(r, c));
            let e0 = dense
                .symmetric_eigenvalues()
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            let gs = ground_state(&params).unwrap();
            assert!(close(gs.energy, e0, 1e-11), "{n} {g} {f}: {} vs {e0}", gs.energy);
        }
    }

    #[test]
    fn ground_state_has_definite_parity_and_sign() {
        let gs = ground_state(&ModelParams::new(40, 0.5, 0.6).unwrap()).unwrap();
        let wrong = match gs.parity {
            Parity::Even => 1,
            Parity::Odd => 0,
        };
        assert!(gs.vector.amplitudes().iter().skip(wrong).step_by(2).all(|&v| v == 0.0));
        let max = gs
            .vector
            .amplitudes()
            .iter()
            .cloned()
            .fold(0.0_f64, |m, v| if v.abs() > m.abs() { v } else { m });
        assert!(max > 0.0);
    }

    #[test]
    fn degenerate_tie_goes_to_even() {
        // gamma = 0, h = 0: |M_x = +-N/2> are exactly degenerate.
        let gs = ground_state(&ModelParams::new(5, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(gs.parity, Parity::Even);
        // gamma = 1, h = 0.5, N = 2: n_e = 1 and n_e = 2 have equal energy.
        let gs = ground_state(&ModelParams::new(2, 1.0, 0.5).unwrap()).unwrap();
        assert_eq!(gs.parity, Parity::Even);
    }

    #[test]
    fn deterministic() {
        let p = ModelParams::new(101, 0.5, 0.93).unwrap();
        assert_eq!(ground_state(&p).unwrap(), ground_state(&p).unwrap());
    }

    #[test]
    fn dicke_vector_checks() {
        assert!(DickeVector::new(vec![1.0, 1.0]).is_err());
        assert!(DickeVector::new(vec![1.0]).is_err());
        assert!(DickeVector::normalized(vec![0.0, 0.0]).is_err());
        let v = DickeVector::normalized(vec![3.0, 4.0]).unwrap();
        assert!(close(v.amplitudes()[0], 0.6, 1e-15));
        assert_eq!(DickeVector::ghz(4).unwrap().n_spins(), 4);
    }
}
