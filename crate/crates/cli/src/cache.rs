//! On-disk ground-state cache.
//!
//! One text file per solve. The file name carries the parameters in fixed
//! decimal form plus a hash of their exact bit patterns and the solver tag,
//! so distinct keys never share a file. Layout:
//!
//! ```text
//! lmg-gmc ground state
//! solver = tridiagonal-bisection/1
//! n_spins = 2
//! gamma = 5.0000000000000000e-1
//! field = 0.0000000000000000e0
//! coupling = 1.0000000000000000e0
//! energy = -7.5000000000000000e-1
//! parity = even
//! residual = 0.0000000000000000e0
//! checksum = sha256:<hex of every other line>
//! amplitudes = 3
//! 0.0000000000000000e0
//! 1.0000000000000000e0
//! 0.0000000000000000e0
//! ```
//!
//! Every float is written with 17 significant digits and reads back to the
//! same bits.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use lmg_gmc::criticality_scan::{DirectSolver, GroundStateSolver};
use lmg_gmc::{DickeVector, GroundState, ModelParams, Parity};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Bumped whenever the solver can produce different bits for the same key.
pub const SOLVER_TAG: &str = "tridiagonal-bisection/1";

const MAGIC: &str = "lmg-gmc ground state";

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn sha256_hex(lines: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for line in lines {
        hasher.update(line.as_bytes());
        hasher.update(b"\n");
    }
    hex(&hasher.finalize())
}

/// Canonical bit pattern; folds `-0.0` into `0.0`.
fn bits(v: f64) -> u64 {
    (v + 0.0).to_bits()
}

/// File name for a parameter point.
pub fn cache_file_name(params: &ModelParams) -> String {
    let key = format!(
        "{SOLVER_TAG}|{}|{:016x}|{:016x}|{:016x}",
        params.n_spins,
        bits(params.gamma),
        bits(params.field),
        bits(params.coupling)
    );
    let digest = sha256_hex(&[&key]);
    format!(
        "n{}_g{:.6}_h{:.6}_l{:.6}_{}.gs",
        params.n_spins,
        params.gamma + 0.0,
        params.field + 0.0,
        params.coupling + 0.0,
        &digest[..16]
    )
}

/// Serialises a ground state into the record format above.
pub fn encode_record(gs: &GroundState) -> String {
    let mut lines = vec![
        MAGIC.to_string(),
        format!("solver = {SOLVER_TAG}"),
        format!("n_spins = {}", gs.params.n_spins),
        format!("gamma = {}", format_float(gs.params.gamma)),
        format!("field = {}", format_float(gs.params.field)),
        format!("coupling = {}", format_float(gs.params.coupling)),
        format!("energy = {}", format_float(gs.energy)),
        format!("parity = {}", gs.parity.as_str()),
        format!("residual = {}", format_float(gs.eigensolve_residual)),
        format!("amplitudes = {}", gs.vector.amplitudes().len()),
    ];
    lines.extend(gs.vector.amplitudes().iter().map(|&a| format_float(a)));
    let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
    let checksum = format!("checksum = sha256:{}", sha256_hex(&refs));
    lines.insert(9, checksum);
    let mut text = lines.join("\n");
    text.push('\n');
    text
}

fn malformed(message: impl Into<String>) -> CliError {
    CliError::Malformed {
        what: "ground-state record",
        message: message.into(),
    }
}

/// Parses and verifies a record. Any deviation from the layout, a checksum
/// mismatch or a non-normalised vector is an error.
pub fn decode_record(text: &str) -> Result<GroundState> {
    let body = text
        .strip_suffix('\n')
        .ok_or_else(|| malformed("missing final newline"))?;
    let mut lines: Vec<&str> = body.split('\n').collect();
    if lines.len() < 11 {
        return Err(malformed("truncated header"));
    }
    let checksum_line = lines.remove(9);
    let expected = checksum_line
        .strip_prefix("checksum = sha256:")
        .ok_or_else(|| malformed("missing checksum"))?;
    if sha256_hex(&lines) != expected {
        return Err(malformed("checksum mismatch"));
    }
    if lines[0] != MAGIC {
        return Err(malformed("bad magic line"));
    }

    let field = |i: usize, key: &str| -> Result<&str> {
        lines[i]
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(" = "))
            .ok_or_else(|| malformed(format!("expected `{key}` on line {}", i + 1)))
    };
    let float = |i: usize, key: &str| -> Result<f64> {
        field(i, key)?
            .parse()
            .map_err(|_| malformed(format!("bad number for `{key}`")))
    };

    if field(1, "solver")? != SOLVER_TAG {
        return Err(malformed("record from another solver version"));
    }
    let n_spins: usize = field(2, "n_spins")?
        .parse()
        .map_err(|_| malformed("bad n_spins"))?;
    let params = ModelParams::with_coupling(
        n_spins,
        float(3, "gamma")?,
        float(4, "field")?,
        float(5, "coupling")?,
    )
    .map_err(|e| malformed(e.to_string()))?;
    let energy = float(6, "energy")?;
    let parity: Parity = field(7, "parity")?
        .parse()
        .map_err(|_| malformed("bad parity"))?;
    let residual = float(8, "residual")?;
    if !energy.is_finite() || !(residual.is_finite() && residual >= 0.0) {
        return Err(malformed("energy or residual out of range"));
    }
    let count: usize = field(9, "amplitudes")?
        .parse()
        .map_err(|_| malformed("bad amplitude count"))?;
    if count != n_spins + 1 || lines.len() != 10 + count {
        return Err(malformed("amplitude count does not match N + 1"));
    }
    let amplitudes = lines[10..]
        .iter()
        .map(|l| l.parse::<f64>().map_err(|_| malformed("bad amplitude")))
        .collect::<Result<Vec<_>>>()?;
    let vector = DickeVector::new(amplitudes).map_err(|e| malformed(e.to_string()))?;
    Ok(GroundState {
        params,
        energy,
        vector,
        parity,
        eigensolve_residual: residual,
    })
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory and an atomic rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(contents)
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| CliError::io(tmp.path(), e))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        std::fs::set_permissions(tmp.path(), std::fs::Permissions::from_mode(0o644))
            .map_err(|e| CliError::io(tmp.path(), e))?;
    }
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Serves solves from the cache directory, falling back to `inner` and
/// storing the result. Unreadable or corrupt entries are recomputed and
/// overwritten.
#[derive(Debug)]
pub struct CachedSolver<S = DirectSolver> {
    dir: PathBuf,
    inner: S,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl CachedSolver<DirectSolver> {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        Self::with_solver(dir, DirectSolver)
    }
}

impl<S: GroundStateSolver> CachedSolver<S> {
    pub fn with_solver(dir: impl Into<PathBuf>, inner: S) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Self {
            dir,
            inner,
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, params: &ModelParams) -> PathBuf {
        self.dir.join(cache_file_name(params))
    }

    /// (hits, misses) so far.
    pub fn stats(&self) -> (usize, usize) {
        (
            self.hits.load(Ordering::Relaxed),
            self.misses.load(Ordering::Relaxed),
        )
    }

    fn lookup(&self, path: &Path, params: &ModelParams) -> Option<GroundState> {
        let text = std::fs::read_to_string(path).ok()?;
        match decode_record(&text) {
            Ok(gs) if gs.params == *params => Some(gs),
            Ok(_) => {
                log::warn!("{}: parameters do not match the key, recomputing", path.display());
                None
            }
            Err(e) => {
                log::warn!("{}: {e}, recomputing", path.display());
                None
            }
        }
    }
}

impl<S: GroundStateSolver> GroundStateSolver for CachedSolver<S> {
    fn solve(&self, params: &ModelParams) -> lmg_gmc::Result<GroundState> {
        let path = self.path_for(params);
        if let Some(gs) = self.lookup(&path, params) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(gs);
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let gs = self.inner.solve(params)?;
        if let Err(e) = write_atomic(&path, encode_record(&gs).as_bytes()) {
            log::warn!("cache write failed: {e}");
        }
        Ok(gs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lmg_gmc::ground_state;

    #[test]
    fn round_trip_is_exact() {
        for (n, h) in [(2, 0.0), (17, 0.93), (60, 1.4)] {
            let gs = ground_state(&ModelParams::new(n, 0.5, h).unwrap()).unwrap();
            assert_eq!(decode_record(&encode_record(&gs)).unwrap(), gs);
        }
    }

    #[test]
    fn two_spin_record() {
        let gs = ground_state(&ModelParams::new(2, 0.5, 0.0).unwrap()).unwrap();
        let text = encode_record(&gs);
        assert!(text.starts_with("lmg-gmc ground state\nsolver = "));
        assert!(text.contains("\nenergy = -7.5000000000000000e-1\n"));
        assert!(text.ends_with("amplitudes = 3\n0.0000000000000000e0\n1.0000000000000000e0\n0.0000000000000000e0\n"));
    }

    #[test]
    fn tampering_is_detected() {
        let gs = ground_state(&ModelParams::new(6, 0.5, 0.7).unwrap()).unwrap();
        let text = encode_record(&gs);
        let flipped = text.replacen("energy = -", "energy = +", 1);
        assert!(decode_record(&flipped).is_err());
        assert!(decode_record(&text[..text.len() - 5]).is_err());
        assert!(decode_record("").is_err());
    }

    #[test]
    fn names_separate_nearby_keys() {
        let a = ModelParams::new(10, 0.5, 0.1).unwrap();
        let b = ModelParams::new(10, 0.5, 0.1 + 1e-15).unwrap();
        assert_ne!(cache_file_name(&a), cache_file_name(&b));
        assert!(cache_file_name(&a).starts_with("n10_g0.500000_h0.100000_l1.000000_"));
        let z = ModelParams::new(10, 0.5, -0.0).unwrap();
        assert_eq!(cache_file_name(&z), cache_file_name(&ModelParams::new(10, 0.5, 0.0).unwrap()));
    }
}
