//! Entropies and the genuine-multipartite-correlation hierarchy.
//!
//! For a permutation-symmetric state the closest product of clusters with
//! at most k spins is `floor(N/k)` copies of `rho_k` times one remainder
//! block, so
//!
//! ```text
//! S^{k->N} = floor(N/k) S(rho_k) + [N mod k != 0] S(rho_{N mod k}) - S(rho_N)
//! S^k      = S^{k-1->N} - S^{k->N}
//! ```
//!
//! All entropies are in bits.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::reduced_density::{reduce_block, ReducedDensity};
use crate::symmetric_subspace::DickeVector;

pub const TRACE_TOLERANCE: f64 = 1e-8;
pub const SUM_RULE_TOLERANCE: f64 = 1e-8;
pub const NEGATIVITY_TOLERANCE: f64 = 1e-9;

/// Shannon entropy (bits) of a spectrum, with `0 log 0 = 0` and
/// eigenvalues in `[-1e-10, 0)` clamped to zero.
pub fn spectrum_entropy(eigenvalues: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &v in eigenvalues {
        if v < -ReducedDensity::PSD_TOLERANCE {
            return Err(Error::NotPositive { value: v });
        }
        if v > 0.0 {
            s -= v * v.log2();
        }
    }
    Ok(s.max(0.0))
}

pub fn von_neumann_entropy(rho: &ReducedDensity) -> Result<f64> {
    let trace = rho.trace();
    if (trace - 1.0).abs() > TRACE_TOLERANCE || trace.is_nan() {
        return Err(Error::BadTrace { trace });
    }
    spectrum_entropy(&rho.eigenvalues())
}

/// Lazily evaluated `S(rho_k)` for one state, `k = 0..=N`.
///
/// A pure state and its complement share their nonzero spectrum, so
/// `S(rho_k)` is evaluated on whichever of the k-block and the
/// (N-k)-block is smaller. `S(rho_N)` therefore comes from the 1x1 Gram
/// matrix `[sum P^2]` rather than being set to zero.
#[derive(Debug)]
pub struct BlockEntropies<'a> {
    state: &'a DickeVector,
    slots: Vec<OnceLock<f64>>,
}

impl<'a> BlockEntropies<'a> {
    pub fn new(state: &'a DickeVector) -> Self {
        Self {
            state,
            slots: (0..=state.n_spins()).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn n_spins(&self) -> usize {
        self.state.n_spins()
    }

    pub fn get(&self, k: usize) -> Result<f64> {
        let n = self.n_spins();
        if k > n {
            return Err(Error::BlockOutOfRange { k, n });
        }
        if let Some(v) = self.slots[k].get() {
            return Ok(*v);
        }
        let side = k.min(n - k);
        let value = von_neumann_entropy(&reduce_block(self.state, side))?;
        let _ = self.slots[k].set(value);
        Ok(value)
    }

    /// Fills every slot, in parallel over k.
    pub fn fill_all(&self) -> Result<()> {
        (0..=self.n_spins())
            .into_par_iter()
            .try_for_each(|k| self.get(k).map(|_| ()))
    }

    /// `S^{k->N}`, `1 <= k <= N`.
    pub fn above_k(&self, k: usize) -> Result<f64> {
        let n = self.n_spins();
        if k == 0 || k > n {
            return Err(Error::BlockOutOfRange { k, n });
        }
        let rem = n % k;
        let mut s = (n / k) as f64 * self.get(k)?;
        if rem != 0 {
            s += self.get(rem)?;
        }
        Ok(s - self.get(n)?)
    }

    /// Total correlations `S^{1->N} = N S(rho_1) - S(rho_N)`.
    pub fn total(&self) -> Result<f64> {
        self.above_k(1)
    }

    /// Genuine k-partite correlations, `2 <= k <= N`.
    pub fn genuine(&self, k: usize) -> Result<f64> {
        let n = self.n_spins();
        if k < 2 || k > n {
            return Err(Error::BlockOutOfRange { k, n });
        }
        Ok(self.above_k(k - 1)? - self.above_k(k)?)
    }

    /// `S^1` is read as the total correlations; `k >= 2` is genuine.
    pub fn order(&self, k: usize) -> Result<f64> {
        if k == 1 {
            self.total()
        } else {
            self.genuine(k)
        }
    }
}

pub fn correlations_above_k(state: &DickeVector, k: usize) -> Result<f64> {
    BlockEntropies::new(state).above_k(k)
}

pub fn genuine_k(state: &DickeVector, k: usize) -> Result<f64> {
    BlockEntropies::new(state).genuine(k)
}

/// Every `S^{k->N}` and `S^k` of one state.
#[derive(Debug, Clone, PartialEq)]
pub struct GmcSpectrum {
    pub n_spins: usize,
    /// `S^{1->N}`.
    pub total: f64,
    /// `above_k[k - 1] = S^{k->N}`, `k = 1..=N`.
    pub above_k: Vec<f64>,
    /// `genuine[k - 2] = S^k`, `k = 2..=N`.
    pub genuine: Vec<f64>,
}

impl GmcSpectrum {
    pub fn above(&self, k: usize) -> f64 {
        self.above_k[k - 1]
    }

    pub fn genuine(&self, k: usize) -> f64 {
        self.genuine[k - 2]
    }

    /// `S^k` with roundoff negatives in `[-1e-9, 0)` shown as zero.
    pub fn genuine_display(&self, k: usize) -> f64 {
        let v = self.genuine(k);
        if (-NEGATIVITY_TOLERANCE..0.0).contains(&v) {
            0.0
        } else {
            v
        }
    }
}

pub fn gmc_spectrum(state: &DickeVector) -> Result<GmcSpectrum> {
    let entropies = BlockEntropies::new(state);
    entropies.fill_all()?;
    spectrum_from(&entropies)
}

pub fn spectrum_from(entropies: &BlockEntropies<'_>) -> Result<GmcSpectrum> {
    let n = entropies.n_spins();
    let above_k = (1..=n)
        .map(|k| entropies.above_k(k))
        .collect::<Result<Vec<_>>>()?;
    let genuine: Vec<f64> = above_k.windows(2).map(|w| w[0] - w[1]).collect();
    let total = above_k[0];

    let sum: f64 = genuine.iter().sum();
    if (sum - total).abs() > SUM_RULE_TOLERANCE {
        return Err(Error::SumRule { total, sum });
    }
    for (i, &g) in genuine.iter().enumerate() {
        if g < -NEGATIVITY_TOLERANCE {
            log::warn!("negative genuine correlation S^{} = {g:e} for N = {n}", i + 2);
        }
    }
    Ok(GmcSpectrum {
        n_spins: n,
        total,
        above_k,
        genuine,
    })
}
