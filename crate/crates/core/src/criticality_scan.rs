//! Field sweeps, derivative minima and finite-size scaling.
//!
//! For each system size the correlation `S^k(h)` is sampled on a uniform
//! field grid, differentiated numerically, and the field `h_min` where the
//! derivative is most negative is located. The values `S^k(h_min)` across
//! sizes are then fitted to `A N^alpha` by least squares in log-log space.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gmc_measures::BlockEntropies;
use crate::symmetric_subspace::{ground_state, GroundState, ModelParams};

/// Something that produces ground states; lets callers put a cache in
/// front of the eigensolver.
pub trait GroundStateSolver: Sync {
    fn solve(&self, params: &ModelParams) -> Result<GroundState>;
}

/// Solves every request from scratch.
#[derive(Debug, Clone, Copy, Default)]
pub struct DirectSolver;

impl GroundStateSolver for DirectSolver {
    fn solve(&self, params: &ModelParams) -> Result<GroundState> {
        ground_state(params)
    }
}

/// Which correlation order to follow as N changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OrderSpec {
    /// A fixed order; `Fixed(1)` is the total correlation.
    Fixed(usize),
    /// The order `N / m`.
    Fraction(usize),
}

impl OrderSpec {
    /// The concrete order for `n` spins.
    pub fn resolve(&self, n: usize) -> Result<usize> {
        let k = match *self {
            OrderSpec::Fixed(k) => k,
            OrderSpec::Fraction(m) => {
                if m == 0 || !n.is_multiple_of(m) {
                    return Err(Error::BlockOutOfRange { k: 0, n });
                }
                n / m
            }
        };
        if k == 0 || k > n {
            return Err(Error::BlockOutOfRange { k, n });
        }
        Ok(k)
    }

    /// Column label used in curve files.
    pub fn label(&self) -> String {
        match *self {
            OrderSpec::Fixed(1) => "S_total".to_string(),
            OrderSpec::Fixed(k) => format!("S_k{k}"),
            OrderSpec::Fraction(1) => "S_kN".to_string(),
            OrderSpec::Fraction(m) => format!("S_kN/{m}"),
        }
    }
}

impl fmt::Display for OrderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            OrderSpec::Fixed(k) => write!(f, "{k}"),
            OrderSpec::Fraction(1) => write!(f, "N"),
            OrderSpec::Fraction(m) => write!(f, "N/{m}"),
        }
    }
}

impl FromStr for OrderSpec {
    type Err = Error;

    /// Accepts `3`, `N`, `N/2`, `N/4`, ... (whitespace-tolerant).
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::InvalidParams(format!("invalid order `{s}`"));
        if let Some(rest) = t.strip_prefix('N') {
            let rest = rest.trim();
            if rest.is_empty() {
                return Ok(OrderSpec::Fraction(1));
            }
            let m: usize = rest
                .strip_prefix('/')
                .ok_or_else(bad)?
                .trim()
                .parse()
                .map_err(|_| bad())?;
            if m == 0 {
                return Err(bad());
            }
            return Ok(OrderSpec::Fraction(m));
        }
        let k: usize = t.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        Ok(OrderSpec::Fixed(k))
    }
}

/// Uniform grid `start + i * step`, `i = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl UniformGrid {
    /// Grid from `start` to `stop` inclusive; `stop` must sit on the grid.
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(Error::InvalidGrid("non-finite bounds".into()));
        }
        if step <= 0.0 || stop < start {
            return Err(Error::InvalidGrid(format!(
                "need start <= stop and step > 0, got {start}:{stop}:{step}"
            )));
        }
        let intervals = (stop - start) / step;
        let rounded = intervals.round();
        if (intervals - rounded).abs() > 1e-9 * rounded.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "({stop} - {start}) is not a multiple of {step}"
            )));
        }
        if rounded > 1e7 {
            return Err(Error::InvalidGrid("too many grid points".into()));
        }
        Ok(Self {
            start,
            step,
            len: rounded as usize + 1,
        })
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.point(i)).collect()
    }

    pub fn stop(&self) -> f64 {
        self.point(self.len - 1)
    }
}

/// `S^k(h)` on a field grid for fixed N, gamma, coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurve {
    /// Resolved order; 1 is the total correlation.
    pub k: usize,
    pub template: ModelParams,
    pub h_grid: Vec<f64>,
    pub step: f64,
    pub values: Vec<f64>,
    /// Filled by [`differentiate`]; empty before.
    pub derivative: Vec<f64>,
}

/// Sweeps the field and evaluates each order in `orders` at every point.
pub fn sweep(template: &ModelParams, orders: &[usize], grid: &UniformGrid) -> Result<Vec<SweepCurve>> {
    sweep_with(&DirectSolver, template, orders, grid)
}

/// [`sweep`] with a caller-supplied solver. One ground state per field
/// value is shared by all orders.
pub fn sweep_with<S: GroundStateSolver>(
    solver: &S,
    template: &ModelParams,
    orders: &[usize],
    grid: &UniformGrid,
) -> Result<Vec<SweepCurve>> {
    template.validate()?;
    if orders.is_empty() {
        return Err(Error::InvalidParams("no correlation orders requested".into()));
    }
    let n = template.n_spins;
    for &k in orders {
        if k == 0 || k > n {
            return Err(Error::BlockOutOfRange { k, n });
        }
    }
    if grid.start < 0.0 || grid.stop() > 2.0 + 1e-12 {
        return Err(Error::InvalidGrid(format!(
            "field range [{}, {}] leaves [0, 2]",
            grid.start,
            grid.stop()
        )));
    }

    let h_grid = grid.points();
    let rows: Vec<Vec<f64>> = h_grid
        .par_iter()
        .map(|&h| {
            evaluate_orders(solver, template, h, orders).map_err(|e| Error::AtField {
                field: h,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    Ok(orders
        .iter()
        .enumerate()
        .map(|(j, &k)| SweepCurve {
            k,
            template: *template,
            h_grid: h_grid.clone(),
            step: grid.step,
            values: rows.iter().map(|r| r[j]).collect(),
            derivative: Vec::new(),
        })
        .collect())
}

fn evaluate_orders<S: GroundStateSolver>(
    solver: &S,
    template: &ModelParams,
    h: f64,
    orders: &[usize],
) -> Result<Vec<f64>> {
    let gs = solver.solve(&template.at_field(h)?)?;
    let entropies = BlockEntropies::new(&gs.vector);
    orders.iter().map(|&k| entropies.order(k)).collect()
}

/// Central differences inside, second-order one-sided differences at the
/// ends.
pub fn differentiate(curve: &SweepCurve) -> Result<SweepCurve> {
    let v = &curve.values;
    let m = v.len();
    if m < 3 || curve.h_grid.len() != m {
        return Err(Error::InsufficientData(format!(
            "need at least 3 grid points to differentiate, got {m}"
        )));
    }
    let dh = curve.step;
    let mut d = vec![0.0; m];
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dh);
    for i in 1..m - 1 {
        d[i] = (v[i + 1] - v[i - 1]) / (2.0 * dh);
    }
    d[m - 1] = (3.0 * v[m - 1] - 4.0 * v[m - 2] + v[m - 3]) / (2.0 * dh);
    let mut out = curve.clone();
    out.derivative = d;
    Ok(out)
}

/// Location of the most negative derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeMinimum {
    pub h_min: f64,
    /// Derivative value at the refined minimum.
    pub depth: f64,
    /// `S^k` at `h_min`: interpolated by [`locate_h_min`], evaluated
    /// directly by [`minima_at_size`].
    pub s_at_min: f64,
    /// The minimum was a flat run of equal samples.
    pub tie: bool,
}

/// Grid argmin of the derivative refined by a parabola through its two
/// neighbours.
pub fn locate_h_min(curve: &SweepCurve) -> Result<DerivativeMinimum> {
    let d = &curve.derivative;
    if d.len() != curve.values.len() || d.len() < 3 {
        return Err(Error::InsufficientData(
            "curve has no derivative; call differentiate first".into(),
        ));
    }
    let mut first = 0;
    for (j, &v) in d.iter().enumerate() {
        if v < d[first] {
            first = j;
        }
    }
    let mut last = first;
    while last + 1 < d.len() && d[last + 1] == d[first] {
        last += 1;
    }
    if first == 0 || last == d.len() - 1 {
        return Err(Error::BoundaryMinimum {
            field: curve.h_grid[if first == 0 { 0 } else { last }],
        });
    }
    // A flat run of equal minima is reported at its midpoint.
    let tie = last > first;
    let i = (first + last) / 2;
    let (dl, dc, dr) = (d[i - 1], d[i], d[i + 1]);
    let curvature = dl - 2.0 * dc + dr;
    let offset = if tie {
        0.5 * ((first + last) % 2) as f64
    } else if curvature <= 0.0 {
        0.0
    } else {
        (0.5 * (dl - dr) / curvature).clamp(-0.5, 0.5)
    };
    let depth = if tie { dc } else { dc - 0.25 * (dl - dr) * offset };

    let v = &curve.values;
    let (vl, vc, vr) = (v[i - 1], v[i], v[i + 1]);
    let s_at_min = vc + 0.5 * offset * (vr - vl) + 0.5 * offset * offset * (vr - 2.0 * vc + vl);

    Ok(DerivativeMinimum {
        h_min: curve.h_grid[i] + offset * curve.step,
        depth,
        s_at_min,
        tie,
    })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// System sizes `N <= n_max` for which the order is free of the remainder
/// ladder: `N mod k = N mod (k-1) = 0` for fixed `k >= 2`, even N for the
/// total correlation, `N mod 2m = 0` for `k = N/m`.
pub fn admissible_sizes(spec: OrderSpec, n_max: usize) -> Result<Vec<usize>> {
    if n_max < 12 {
        return Err(Error::InsufficientData(format!(
            "n_max = {n_max} is below the minimum of 12"
        )));
    }
    let stride = match spec {
        OrderSpec::Fixed(0) | OrderSpec::Fraction(0) => {
            return Err(Error::InvalidParams(format!("invalid order {spec:?}")))
        }
        OrderSpec::Fixed(1) => 2,
        OrderSpec::Fixed(k) => k * (k - 1) / gcd(k, k - 1),
        OrderSpec::Fraction(m) => 2 * m,
    };
    let sizes: Vec<usize> = (1..)
        .map(|i| i * stride)
        .take_while(|&n| n <= n_max)
        .filter(|&n| n >= 2)
        .collect();
    if sizes.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no admissible sizes for k = {spec} up to N = {n_max}"
        )));
    }
    Ok(sizes)
}

/// Ordinary least squares `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    /// Sum of squared residuals.
    pub ssr: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::InsufficientData(format!("{n} points for a line fit")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx.is_nan() || sxx <= 0.0 {
        return Err(Error::InsufficientData("abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let (slope_stderr, intercept_stderr) = if n > 2 {
        let sigma2 = ssr / (nf - 2.0);
        let sumx2: f64 = x.iter().map(|v| v * v).sum();
        ((sigma2 / sxx).sqrt(), (sigma2 * sumx2 / (nf * sxx)).sqrt())
    } else {
        (0.0, 0.0)
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr,
        intercept_stderr,
        ssr,
    })
}

/// `S = A N^alpha` fitted in log-log space.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub prefactor: f64,
    pub alpha_stderr: f64,
    /// Sizes that entered the fit (positive values only).
    pub sizes: Vec<usize>,
}

pub const MIN_FIT_POINTS: usize = 4;

pub fn fss_fit(points: &[(usize, f64)]) -> Result<PowerLawFit> {
    let kept: Vec<(usize, f64)> = points
        .iter()
        .copied()
        .filter(|&(n, s)| {
            let ok = s > 0.0 && s.is_finite() && n > 0;
            if !ok {
                log::warn!("dropping N = {n} from the power-law fit: S = {s}");
            }
            ok
        })
        .collect();
    if kept.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} usable points, need {MIN_FIT_POINTS}",
            kept.len()
        )));
    }
    let x: Vec<f64> = kept.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let y: Vec<f64> = kept.iter().map(|&(_, s)| s.ln()).collect();
    let line = linear_fit(&x, &y)?;
    Ok(PowerLawFit {
        alpha: line.slope,
        prefactor: line.intercept.exp(),
        alpha_stderr: line.slope_stderr,
        sizes: kept.iter().map(|&(n, _)| n).collect(),
    })
}

/// One extrapolation of `h_min(N)` to infinite size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendFit {
    /// Extrapolated `h_min` as N goes to infinity.
    pub limit: f64,
    /// `c` in `h_c - c N^-e`, or `b` in `a + b / ln N`.
    pub amplitude: f64,
    /// `e` for the power-law form; absent for the inverse-log form.
    pub exponent: Option<f64>,
    pub rms_residual: f64,
}

/// A trend fit or the reason it could not be made.
#[derive(Debug, Clone, PartialEq)]
pub enum TrendOutcome {
    Fit(TrendFit),
    Degenerate(String),
}

impl TrendOutcome {
    pub fn fit(&self) -> Option<&TrendFit> {
        match self {
            TrendOutcome::Fit(f) => Some(f),
            TrendOutcome::Degenerate(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HminTrend {
    /// `h_min = h_c - c N^-e`.
    pub power_law: TrendOutcome,
    /// `h_min = a + b / ln N`.
    pub inverse_log: TrendOutcome,
}

const EXPONENT_RANGE: (f64, f64) = (0.02, 4.0);

fn profile_power_law(x_n: &[f64], h: &[f64], e: f64) -> Option<LinearFit> {
    let x: Vec<f64> = x_n.iter().map(|n| n.powf(-e)).collect();
    linear_fit(&x, h).ok()
}

fn fit_power_trend(sizes: &[f64], h: &[f64]) -> TrendOutcome {
    let ssr_at = |e: f64| profile_power_law(sizes, h, e).map_or(f64::INFINITY, |f| f.ssr);

    // Coarse log-spaced scan, then golden-section inside the best bracket.
    let steps = 400;
    let (lo, hi) = (EXPONENT_RANGE.0.ln(), EXPONENT_RANGE.1.ln());
    let grid: Vec<f64> = (0..=steps)
        .map(|i| (lo + (hi - lo) * i as f64 / steps as f64).exp())
        .collect();
    let ssr: Vec<f64> = grid.iter().map(|&e| ssr_at(e)).collect();
    let mut best = 0;
    for (i, &s) in ssr.iter().enumerate() {
        if s < ssr[best] {
            best = i;
        }
    }
    if !ssr[best].is_finite() {
        return TrendOutcome::Degenerate("power-law trend: singular design".into());
    }
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(steps)];
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        if b - a < 1e-13 {
            break;
        }
        let c = b - ratio * (b - a);
        let d = a + ratio * (b - a);
        if ssr_at(c) <= ssr_at(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let e = 0.5 * (a + b);
    let e = if ssr_at(e) <= ssr[best] { e } else { grid[best] };
    match profile_power_law(sizes, h, e) {
        Some(line) => {
            let rms = (line.ssr / h.len() as f64).sqrt();
            let pinned = e <= EXPONENT_RANGE.0 * 1.0001 || e >= EXPONENT_RANGE.1 * 0.9999;
            if pinned && line.slope.abs() > 1e-12 {
                log::warn!("power-law trend exponent {e} pinned at the search boundary");
            }
            TrendOutcome::Fit(TrendFit {
                limit: line.intercept,
                amplitude: -line.slope,
                exponent: Some(e),
                rms_residual: rms,
            })
        }
        None => TrendOutcome::Degenerate("power-law trend: singular design".into()),
    }
}

fn fit_inverse_log_trend(sizes: &[f64], h: &[f64]) -> TrendOutcome {
    let x: Vec<f64> = sizes.iter().map(|n| 1.0 / n.ln()).collect();
    match linear_fit(&x, h) {
        Ok(line) => TrendOutcome::Fit(TrendFit {
            limit: line.intercept,
            amplitude: line.slope,
            exponent: None,
            rms_residual: (line.ssr / h.len() as f64).sqrt(),
        }),
        Err(e) => TrendOutcome::Degenerate(format!("inverse-log trend: {e}")),
    }
}

/// Extrapolates `h_min(N)` with both candidate forms.
pub fn h_min_trend(sizes: &[usize], h_min: &[f64]) -> Result<HminTrend> {
    if sizes.len() != h_min.len() {
        return Err(Error::InsufficientData("sizes and h_min differ in length".into()));
    }
    if sizes.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} sizes for the h_min trend, need {MIN_FIT_POINTS}",
            sizes.len()
        )));
    }
    if sizes.iter().any(|&n| n < 2) {
        return Err(Error::InvalidParams("trend sizes must be at least 2".into()));
    }
    let nf: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    Ok(HminTrend {
        power_law: fit_power_trend(&nf, h_min),
        inverse_log: fit_inverse_log_trend(&nf, h_min),
    })
}

/// Settings of a finite-size-scaling run.
#[derive(Debug, Clone, PartialEq)]
pub struct FssConfig {
    pub gamma: f64,
    pub coupling: f64,
    pub grid: UniformGrid,
    pub n_max: usize,
    /// Sizes below this are left out of the fit.
    pub drop_below: usize,
    /// Subdivision of the grid step used for a short re-sweep around each
    /// coarse minimum; 1 disables the local pass.
    pub refine: usize,
}

impl FssConfig {
    pub const DEFAULT_DROP_BELOW: usize = 24;
    pub const DEFAULT_REFINE: usize = 40;

    pub fn new(n_max: usize) -> Self {
        Self {
            gamma: 0.5,
            coupling: 1.0,
            grid: UniformGrid::new(0.5, 1.2, 0.005).expect("default grid"),
            n_max,
            drop_below: Self::DEFAULT_DROP_BELOW,
            refine: Self::DEFAULT_REFINE,
        }
    }
}

/// Finite-size-scaling result for one order.
#[derive(Debug, Clone, PartialEq)]
pub struct FssFit {
    pub k_spec: OrderSpec,
    pub sizes: Vec<usize>,
    pub h_min_values: Vec<f64>,
    pub correlation_at_min: Vec<f64>,
    pub alpha: f64,
    pub prefactor: f64,
    pub alpha_stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FssResult {
    pub fit: FssFit,
    pub trend: HminTrend,
    pub minima: Vec<DerivativeMinimum>,
}

/// Derivative minima of several orders at one size, sharing the coarse
/// sweep. With `config.refine > 1` each minimum is then re-located on a
/// short window swept `refine` times more finely, shifted until the
/// minimum is interior. `s_at_min` is a fresh evaluation at `h_min`.
pub fn minima_at_size<S: GroundStateSolver>(
    solver: &S,
    n: usize,
    specs: &[OrderSpec],
    config: &FssConfig,
) -> Result<Vec<DerivativeMinimum>> {
    let template = ModelParams::with_coupling(n, config.gamma, config.grid.start, config.coupling)?;
    let orders = specs
        .iter()
        .map(|s| s.resolve(n))
        .collect::<Result<Vec<_>>>()?;
    let curves = sweep_with(solver, &template, &orders, &config.grid)?;
    curves
        .iter()
        .zip(&orders)
        .map(|(c, &k)| {
            let coarse = locate_h_min(&differentiate(c)?)?;
            let mut found = if config.refine > 1 {
                refine_minimum(solver, &template, k, coarse.h_min, config)?
            } else {
                coarse
            };
            found.s_at_min = evaluate_orders(solver, &template, found.h_min, &[k])?[0];
            Ok(found)
        })
        .collect()
}

const MAX_WINDOW_SHIFTS: usize = 8;
const WINDOW_HALF_WIDTH: usize = 6;

fn refine_minimum<S: GroundStateSolver>(
    solver: &S,
    template: &ModelParams,
    k: usize,
    guess: f64,
    config: &FssConfig,
) -> Result<DerivativeMinimum> {
    let fine = config.grid.step / config.refine as f64;
    let mut center = guess;
    for _ in 0..=MAX_WINDOW_SHIFTS {
        let window = UniformGrid {
            start: (center - WINDOW_HALF_WIDTH as f64 * fine).max(0.0),
            step: fine,
            len: 2 * WINDOW_HALF_WIDTH + 1,
        };
        let curve = &sweep_with(solver, template, &[k], &window)?[0];
        match locate_h_min(&differentiate(curve)?) {
            Ok(m) => return Ok(m),
            Err(Error::BoundaryMinimum { field }) => center = field,
            Err(e) => return Err(e),
        }
    }
    Err(Error::BoundaryMinimum { field: center })
}

/// Runs the whole pipeline for each order: admissible sizes, sweeps,
/// derivative minima, power-law fit and h_min trend. Sizes common to
/// several orders are swept once.
pub fn run_fss<S: GroundStateSolver>(
    solver: &S,
    specs: &[OrderSpec],
    config: &FssConfig,
) -> Result<Vec<FssResult>> {
    let mut per_spec: Vec<Vec<usize>> = Vec::with_capacity(specs.len());
    for &spec in specs {
        let sizes: Vec<usize> = admissible_sizes(spec, config.n_max)?
            .into_iter()
            .filter(|&n| n >= config.drop_below)
            .collect();
        if sizes.len() < MIN_FIT_POINTS {
            return Err(Error::InsufficientData(format!(
                "k = {spec}: {} admissible sizes in [{}, {}], need {MIN_FIT_POINTS}",
                sizes.len(),
                config.drop_below,
                config.n_max
            )));
        }
        per_spec.push(sizes);
    }
    let mut all_sizes: Vec<usize> = per_spec.iter().flatten().copied().collect();
    all_sizes.sort_unstable();
    all_sizes.dedup();

    let mut minima: Vec<Vec<DerivativeMinimum>> = vec![Vec::new(); specs.len()];
    for &n in &all_sizes {
        let active: Vec<usize> = (0..specs.len())
            .filter(|&i| per_spec[i].binary_search(&n).is_ok())
            .collect();
        let active_specs: Vec<OrderSpec> = active.iter().map(|&i| specs[i]).collect();
        let found = minima_at_size(solver, n, &active_specs, config)?;
        for (&i, m) in active.iter().zip(found) {
            minima[i].push(m);
        }
        log::debug!("N = {n} done");
    }

    specs
        .iter()
        .zip(per_spec)
        .zip(minima)
        .map(|((&spec, sizes), mins)| {
            let points: Vec<(usize, f64)> = sizes
                .iter()
                .zip(&mins)
                .map(|(&n, m)| (n, m.s_at_min))
                .collect();
            let power = fss_fit(&points)?;
            let h_min_values: Vec<f64> = mins.iter().map(|m| m.h_min).collect();
            let trend = h_min_trend(&sizes, &h_min_values)?;
            Ok(FssResult {
                fit: FssFit {
                    k_spec: spec,
                    correlation_at_min: mins.iter().map(|m| m.s_at_min).collect(),
                    sizes,
                    h_min_values,
                    alpha: power.alpha,
                    prefactor: power.prefactor,
                    alpha_stderr: power.alpha_stderr,
                },
                trend,
                minima: mins,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(values: impl Fn(f64) -> f64, grid: &UniformGrid) -> SweepCurve {
        let h = grid.points();
        SweepCurve {
            k: 1,
            template: ModelParams::new(4, 0.5, 0.0).unwrap(),
            values: h.iter().map(|&x| values(x)).collect(),
            h_grid: h,
            step: grid.step,
            derivative: Vec::new(),
        }
    }

    #[test]
    fn order_spec_parsing() {
        assert_eq!("3".parse::<OrderSpec>().unwrap(), OrderSpec::Fixed(3));
        assert_eq!("N".parse::<OrderSpec>().unwrap(), OrderSpec::Fraction(1));
        assert_eq!(" N/4 ".parse::<OrderSpec>().unwrap(), OrderSpec::Fraction(4));
        for bad in ["0", "N/0", "N/", "x", "", "-2", "N2"] {
            assert!(bad.parse::<OrderSpec>().is_err(), "{bad}");
        }
        assert_eq!(OrderSpec::Fraction(2).to_string(), "N/2");
        assert_eq!(OrderSpec::Fraction(2).resolve(200).unwrap(), 100);
        assert!(OrderSpec::Fraction(4).resolve(6).is_err());
        assert!(OrderSpec::Fixed(7).resolve(6).is_err());
    }

    #[test]
    fn grid_construction() {
        let g = UniformGrid::new(0.0, 2.0, 0.005).unwrap();
        assert_eq!(g.len, 401);
        assert!((g.stop() - 2.0).abs() < 1e-12);
        assert!(UniformGrid::new(0.0, 1.0, 0.3).is_err());
        assert!(UniformGrid::new(1.0, 0.0, 0.1).is_err());
        assert!(UniformGrid::new(0.0, 1.0, 0.0).is_err());
        let pts = g.points();
        for w in pts.windows(2) {
            assert!(((w[1] - w[0]) - 0.005).abs() < 1e-12 * 0.005 * 401.0);
        }
    }

    #[test]
    fn derivative_of_quadratic_is_exact() {
        let grid = UniformGrid::new(-0.0, 1.5, 0.05).unwrap();
        let d = differentiate(&synthetic(|h| h * h, &grid)).unwrap();
        for (h, dv) in d.h_grid.iter().zip(&d.derivative) {
            assert!((dv - 2.0 * h).abs() < 1e-12, "{h}: {dv}");
        }
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let grid = UniformGrid::new(0.0, 1.0, 0.1).unwrap();
        let d = differentiate(&synthetic(|_| 3.5, &grid)).unwrap();
        assert!(d.derivative.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn short_grid_rejected() {
        let grid = UniformGrid::new(0.0, 0.1, 0.1).unwrap();
        assert!(differentiate(&synthetic(|h| h, &grid)).is_err());
    }

    #[test]
    fn parabolic_minimum() {
        let grid = UniformGrid::new(0.5, 1.2, 0.014).unwrap();
        let mut c = synthetic(|_| 0.0, &grid);
        c.derivative = c.h_grid.iter().map(|&h| (h - 0.9).powi(2) - 1.0).collect();
        let m = locate_h_min(&c).unwrap();
        assert!((m.h_min - 0.9).abs() < 1e-12);
        assert!((m.depth + 1.0).abs() < 1e-12);
        assert!(!m.tie);
    }

    #[test]
    fn triple_tie_returns_midpoint() {
        let grid = UniformGrid::new(0.0, 1.0, 0.1).unwrap();
        let mut c = synthetic(|h| h, &grid);
        c.derivative = vec![0.0, 0.0, 0.0, -1.0, -1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let m = locate_h_min(&c).unwrap();
        assert!(m.tie);
        assert!((m.h_min - 0.4).abs() < 1e-12);
    }

    #[test]
    fn boundary_minimum_rejected() {
        let grid = UniformGrid::new(0.0, 1.0, 0.1).unwrap();
        let mut c = synthetic(|h| h, &grid);
        c.derivative = c.h_grid.iter().map(|&h| -h).collect();
        assert!(matches!(locate_h_min(&c), Err(Error::BoundaryMinimum { .. })));
        c.derivative.clear();
        assert!(locate_h_min(&c).is_err());
    }

    #[test]
    fn admissible_examples() {
        assert_eq!(
            admissible_sizes(OrderSpec::Fixed(2), 20).unwrap(),
            vec![2, 4, 6, 8, 10, 12, 14, 16, 18, 20]
        );
        assert_eq!(
            admissible_sizes(OrderSpec::Fixed(3), 36).unwrap(),
            vec![6, 12, 18, 24, 30, 36]
        );
        assert_eq!(
            admissible_sizes(OrderSpec::Fixed(4), 48).unwrap(),
            vec![12, 24, 36, 48]
        );
        assert_eq!(admissible_sizes(OrderSpec::Fixed(1), 12).unwrap().len(), 6);
        assert_eq!(
            admissible_sizes(OrderSpec::Fraction(4), 40).unwrap(),
            vec![8, 16, 24, 32, 40]
        );
        assert!(admissible_sizes(OrderSpec::Fixed(2), 11).is_err());
        assert!(admissible_sizes(OrderSpec::Fixed(13), 20).is_err());
    }

    #[test]
    fn exact_power_law() {
        let pts: Vec<(usize, f64)> = [24, 48, 96, 192, 384]
            .iter()
            .map(|&n| (n, 3.0 * (n as f64).powf(0.5)))
            .collect();
        let fit = fss_fit(&pts).unwrap();
        assert!((fit.alpha - 0.5).abs() < 1e-12);
        assert!((fit.prefactor - 3.0).abs() < 1e-11);
        assert!(fit.alpha_stderr < 1e-9);
    }

    #[test]
    fn fit_drops_nonpositive_and_needs_four() {
        let pts = vec![(10, 1.0), (20, 2.0), (30, 0.0), (40, -1.0), (50, 5.0)];
        assert!(matches!(fss_fit(&pts), Err(Error::InsufficientData(_))));
        let pts = vec![(10, 1.0), (20, 2.0), (30, 0.0), (40, 4.0), (50, 5.0)];
        assert_eq!(fss_fit(&pts).unwrap().sizes, vec![10, 20, 40, 50]);
    }

    #[test]
    fn power_trend_recovers_synthetic() {
        let sizes: Vec<usize> = (1..=20).map(|i| 12 * i).collect();
        let h: Vec<f64> = sizes.iter().map(|&n| 1.0 - 2.0 * (n as f64).powf(-0.7)).collect();
        let trend = h_min_trend(&sizes, &h).unwrap();
        let p = trend.power_law.fit().unwrap();
        assert!((p.limit - 1.0).abs() < 1e-8, "{p:?}");
        assert!((p.exponent.unwrap() - 0.7).abs() < 1e-7);
        assert!((p.amplitude - 2.0).abs() < 1e-6);
        assert!(trend.inverse_log.fit().is_some());
    }

    #[test]
    fn constant_trend() {
        let sizes = vec![24, 48, 72, 96, 120];
        let h = vec![0.97; 5];
        let trend = h_min_trend(&sizes, &h).unwrap();
        for fit in [trend.power_law.fit().unwrap(), trend.inverse_log.fit().unwrap()] {
            assert!((fit.limit - 0.97).abs() < 1e-12);
            assert!(fit.amplitude.abs() < 1e-12);
        }
    }

    #[test]
    fn trend_needs_distinct_sizes() {
        let trend = h_min_trend(&[24, 24, 24, 24], &[0.9, 0.91, 0.92, 0.93]).unwrap();
        assert!(matches!(trend.power_law, TrendOutcome::Degenerate(_)));
        assert!(matches!(trend.inverse_log, TrendOutcome::Degenerate(_)));
        assert!(h_min_trend(&[24, 48], &[0.9, 0.95]).is_err());
    }

    #[test]
    fn sweep_smoke() {
        let template = ModelParams::new(4, 0.5, 0.0).unwrap();
        let grid = UniformGrid::new(0.0, 2.0, 1.0).unwrap();
        let curves = sweep(&template, &[2], &grid).unwrap();
        assert_eq!(curves.len(), 1);
        assert_eq!(curves[0].values.len(), 3);
        assert!(curves[0].values.iter().all(|v| v.is_finite() && *v >= -1e-9));
    }

    #[test]
    fn sweep_rejects_bad_requests() {
        let template = ModelParams::new(4, 0.5, 0.0).unwrap();
        let grid = UniformGrid::new(0.0, 2.0, 1.0).unwrap();
        assert!(sweep(&template, &[], &grid).is_err());
        assert!(sweep(&template, &[5], &grid).is_err());
        let wide = UniformGrid::new(0.0, 3.0, 1.0).unwrap();
        assert!(sweep(&template, &[2], &wide).is_err());
    }

    #[test]
    fn symmetric_phase_decay() {
        let template = ModelParams::new(12, 0.5, 0.0).unwrap();
        let grid = UniformGrid::new(1.0, 2.0, 1.0).unwrap();
        for k in 1..=12 {
            let c = &sweep(&template, &[k], &grid).unwrap()[0];
            assert!(c.values[1] < c.values[0], "k = {k}: {:?}", c.values);
        }
    }
}
