//! Full 2^N Hilbert-space reference.
//!
//! Builds the Pauli-sum Hamiltonian directly, diagonalises it densely and
//! evaluates correlations from explicit partial traces over qubit blocks.
//! Nothing here uses the Dicke basis or binomial coefficients, so it can
//! check the collective-basis path end to end. Only meant for small N.
//!
//! Qubit `i` is bit `i` of the basis index; a set bit is an excitation with
//! `sigma_z = +1`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::gmc_measures::spectrum_entropy;
use crate::symmetric_subspace::{DickeVector, ModelParams};

/// Largest N for which the Hamiltonian is assembled.
pub const MAX_SPINS: usize = 12;
/// Largest N for which correlations are evaluated.
pub const MAX_GMC_SPINS: usize = 10;

/// Relative window inside which low levels are treated as one degenerate
/// manifold.
const DEGENERACY_WINDOW: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    pub n_spins: usize,
    pub amplitudes: Vec<f64>,
    pub energy: f64,
}

fn check_size(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        Err(Error::TooLarge { n, cap })
    } else {
        Ok(())
    }
}

/// `-(l/N) sum_{i<j} (X_i X_j + g Y_i Y_j) - h sum_i Z_i` as a dense matrix.
pub fn full_hamiltonian(params: &ModelParams) -> Result<DMatrix<f64>> {
    params.validate()?;
    let n = params.n_spins;
    check_size(n, MAX_SPINS)?;
    let dim = 1usize << n;
    let pref = params.coupling / n as f64;
    let mut h = DMatrix::zeros(dim, dim);
    for x in 0..dim {
        let excited = x.count_ones() as f64;
        h[(x, x)] = -params.field * (2.0 * excited - n as f64);
        for i in 0..n {
            for j in (i + 1)..n {
                let y = x ^ (1 << i) ^ (1 << j);
                let same = ((x >> i) & 1) == ((x >> j) & 1);
                // Y_i Y_j flips both spins with a phase -1 on |00>, |11>.
                let yy = if same { -1.0 } else { 1.0 };
                h[(y, x)] += -pref * (1.0 + params.gamma * yy);
            }
        }
    }
    Ok(h)
}

fn even_weight(v: &[f64]) -> f64 {
    v.iter()
        .enumerate()
        .filter(|(x, _)| x.count_ones() % 2 == 0)
        .map(|(_, a)| a * a)
        .sum()
}

fn project_parity(v: &[f64], even: bool) -> Vec<f64> {
    v.iter()
        .enumerate()
        .map(|(x, a)| if (x.count_ones() % 2 == 0) == even { *a } else { 0.0 })
        .collect()
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= norm);
}

/// Ground state of the full Hamiltonian.
///
/// When the lowest levels are degenerate the manifold is projected onto
/// even excitation parity (the collective solver's tie-break); the
/// largest-magnitude amplitude is made positive.
pub fn full_ground_state(params: &ModelParams) -> Result<FullState> {
    let h = full_hamiltonian(params)?;
    let scale = h.amax().max(1.0);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let e0 = eig.eigenvalues[order[0]];
    let manifold: Vec<Vec<f64>> = order
        .iter()
        .take_while(|&&i| eig.eigenvalues[i] - e0 <= DEGENERACY_WINDOW * scale)
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();

    let mut best = manifold[0].clone();
    if manifold.len() > 1 {
        let (idx, weight) = manifold
            .iter()
            .enumerate()
            .map(|(i, v)| (i, even_weight(v)))
            .fold((0, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        best = project_parity(&manifold[idx], weight > 1e-6);
        normalize(&mut best);
    }
    let mut top = 0;
    for (i, a) in best.iter().enumerate() {
        if a.abs() > best[top].abs() {
            top = i;
        }
    }
    if best[top] < 0.0 {
        best.iter_mut().for_each(|a| *a = -*a);
    }
    Ok(FullState {
        n_spins: params.n_spins,
        amplitudes: best,
        energy: e0,
    })
}

/// Lowest eigenvalue of the full Hamiltonian.
pub fn full_ground_energy(params: &ModelParams) -> Result<f64> {
    let h = full_hamiltonian(params)?;
    Ok(h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min))
}

/// Writes a symmetric state out in the computational basis.
pub fn embed(state: &DickeVector) -> Result<Vec<f64>> {
    let n = state.n_spins();
    check_size(n, MAX_SPINS)?;
    // Dicke weights 1/sqrt(C(N, n_e)) from Pascal's triangle.
    let mut row = vec![1.0_f64];
    for _ in 0..n {
        let mut next = vec![1.0; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    Ok((0..1usize << n)
        .map(|x| {
            let ne = x.count_ones() as usize;
            state.amplitudes()[ne] / row[ne].sqrt()
        })
        .collect())
}

/// Explicit partial trace onto the qubits in `keep` (in that order).
pub fn partial_trace(amplitudes: &[f64], n: usize, keep: &[usize]) -> DMatrix<f64> {
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let psi = bipartition(amplitudes, keep, &traced);
    &psi * psi.transpose()
}

/// Amplitudes reshaped to a `2^|a| x 2^|b|` matrix.
fn bipartition(amplitudes: &[f64], a: &[usize], b: &[usize]) -> DMatrix<f64> {
    let scatter = |bits: usize, qubits: &[usize]| {
        qubits
            .iter()
            .enumerate()
            .fold(0usize, |x, (pos, &q)| x | (((bits >> pos) & 1) << q))
    };
    DMatrix::from_fn(1 << a.len(), 1 << b.len(), |r, c| {
        amplitudes[scatter(r, a) | scatter(c, b)]
    })
}

/// Entropy (bits) of the qubit block `block`, from whichever of the block
/// and its complement has the smaller explicit partial trace.
pub fn block_entropy(amplitudes: &[f64], n: usize, block: &[usize]) -> Result<f64> {
    let rest: Vec<usize> = (0..n).filter(|q| !block.contains(q)).collect();
    let (keep, traced) = if block.len() <= rest.len() {
        (block, rest.as_slice())
    } else {
        (rest.as_slice(), block)
    };
    let psi = bipartition(amplitudes, keep, traced);
    let rho = &psi * psi.transpose();
    spectrum_entropy(rho.symmetric_eigenvalues().as_slice())
}

/// Contiguous clusters `{0..k}, {k..2k}, ...` plus the remainder.
pub fn contiguous_blocks(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0..n)
        .collect::<Vec<_>>()
        .chunks(k)
        .map(|c| c.to_vec())
        .collect()
}

/// `S^{k->N}` of an arbitrary real pure state from a given clustering.
pub fn above_k_for_blocks(amplitudes: &[f64], n: usize, blocks: &[Vec<usize>]) -> Result<f64> {
    let all: Vec<usize> = (0..n).collect();
    let mut s = -block_entropy(amplitudes, n, &all)?;
    for b in blocks {
        s += block_entropy(amplitudes, n, b)?;
    }
    Ok(s)
}

/// `S^{k->N}` from explicit partial traces over contiguous clusters.
pub fn oracle_above_k(amplitudes: &[f64], n: usize, k: usize) -> Result<f64> {
    check_size(n, MAX_GMC_SPINS)?;
    if k == 0 || k > n {
        return Err(Error::BlockOutOfRange { k, n });
    }
    above_k_for_blocks(amplitudes, n, &contiguous_blocks(n, k))
}

/// Correlation hierarchy of a full state: `above[k-1] = S^{k->N}` for
/// `k = 1..=N`.
pub fn oracle_above_all(amplitudes: &[f64], n: usize) -> Result<Vec<f64>> {
    (1..=n).map(|k| oracle_above_k(amplitudes, n, k)).collect()
}

/// `S^k` of the model's ground state (`k = 1` gives the total
/// correlations), entirely through the full Hilbert space.
pub fn oracle_gmc(params: &ModelParams, k: usize) -> Result<f64> {
    let n = params.n_spins;
    check_size(n, MAX_GMC_SPINS)?;
    if k == 0 || k > n {
        return Err(Error::BlockOutOfRange { k, n });
    }
    let gs = full_ground_state(params)?;
    genuine_from_state(&gs.amplitudes, n, k)
}

pub fn genuine_from_state(amplitudes: &[f64], n: usize, k: usize) -> Result<f64> {
    if k == 1 {
        oracle_above_k(amplitudes, n, 1)
    } else {
        Ok(oracle_above_k(amplitudes, n, k - 1)? - oracle_above_k(amplitudes, n, k)?)
    }
}
