use std::sync::atomic::{AtomicUsize, Ordering};

use lmg_gmc::criticality_scan::{
    admissible_sizes, differentiate, locate_h_min, minima_at_size, run_fss, sweep,
    DirectSolver, FssConfig, GroundStateSolver, OrderSpec, UniformGrid,
};
use lmg_gmc::{ground_state, Error, GroundState, ModelParams, Result};

struct Counting(AtomicUsize);

impl GroundStateSolver for Counting {
    fn solve(&self, params: &ModelParams) -> Result<GroundState> {
        self.0.fetch_add(1, Ordering::Relaxed);
        ground_state(params)
    }
}

fn coarse_h_min(n: usize, k: usize, step: f64) -> f64 {
    let template = ModelParams::new(n, 0.5, 0.5).unwrap();
    let grid = UniformGrid::new(0.5, 1.2, step).unwrap();
    let curve = &sweep(&template, &[k], &grid).unwrap()[0];
    locate_h_min(&differentiate(curve).unwrap()).unwrap().h_min
}

#[test]
fn halving_the_step_moves_h_min_less_than_half_a_step() {
    for (n, k) in [(48, 1), (48, 2), (60, 3)] {
        let a = coarse_h_min(n, k, 0.01);
        let b = coarse_h_min(n, k, 0.005);
        assert!((a - b).abs() < 0.005, "N = {n} k = {k}: {a} vs {b}");
    }
}

#[test]
fn refined_minimum_lies_near_coarse_one() {
    let mut config = FssConfig::new(60);
    let refined = minima_at_size(&DirectSolver, 60, &[OrderSpec::Fixed(2)], &config).unwrap()[0];
    config.refine = 1;
    let coarse = minima_at_size(&DirectSolver, 60, &[OrderSpec::Fixed(2)], &config).unwrap()[0];
    assert!((refined.h_min - coarse.h_min).abs() < config.grid.step);
    assert!(refined.depth <= coarse.depth + 1e-3 * coarse.depth.abs());

    let direct = ground_state(&ModelParams::new(60, 0.5, refined.h_min).unwrap()).unwrap();
    let s = lmg_gmc::BlockEntropies::new(&direct.vector).order(2).unwrap();
    assert_eq!(s, refined.s_at_min);
}

#[test]
fn per_spin_correlation_vanishes_for_whole_system_order() {
    let mut config = FssConfig::new(120);
    config.refine = 4;
    let result = &run_fss(&DirectSolver, &[OrderSpec::Fraction(1)], &config).unwrap()[0];
    let per_spin: Vec<f64> = result
        .fit
        .sizes
        .iter()
        .zip(&result.fit.correlation_at_min)
        .map(|(&n, s)| s / n as f64)
        .collect();
    assert!(per_spin.windows(2).all(|w| w[1] < w[0]), "{per_spin:?}");
    assert!(result.fit.alpha < 0.0);
}

#[test]
fn custom_solver_gives_identical_results() {
    let mut config = FssConfig::new(72);
    config.refine = 4;
    let specs = [OrderSpec::Fixed(1), OrderSpec::Fixed(2), OrderSpec::Fraction(1)];
    let counting = Counting(AtomicUsize::new(0));
    let a = run_fss(&counting, &specs, &config).unwrap();
    let b = run_fss(&DirectSolver, &specs, &config).unwrap();
    assert_eq!(a, b);
    // Shared sizes are swept once: 141 coarse fields per size at most.
    let sizes = admissible_sizes(OrderSpec::Fixed(1), 72).unwrap();
    let fit_sizes = sizes.iter().filter(|&&n| n >= 24).count();
    let coarse = fit_sizes * config.grid.len;
    let calls = counting.0.load(Ordering::Relaxed);
    assert!(calls >= coarse && calls < 2 * coarse, "{calls} solves");
}

#[test]
fn too_few_sizes_is_reported() {
    let config = FssConfig::new(60);
    let err = run_fss(&DirectSolver, &[OrderSpec::Fixed(5)], &config).unwrap_err();
    assert!(matches!(err, Error::InsufficientData(_)));
}

#[test]
fn minimum_outside_window_is_rejected() {
    let template = ModelParams::new(40, 0.5, 0.0).unwrap();
    let grid = UniformGrid::new(1.3, 2.0, 0.01).unwrap();
    let curve = &sweep(&template, &[2], &grid).unwrap()[0];
    let err = locate_h_min(&differentiate(curve).unwrap()).unwrap_err();
    assert!(matches!(err, Error::BoundaryMinimum { .. }));
}

#[test]
fn field_range_beyond_two_is_rejected() {
    let template = ModelParams::new(10, 0.5, 0.0).unwrap();
    let grid = UniformGrid::new(1.5, 2.5, 0.5).unwrap();
    assert!(matches!(
        sweep(&template, &[2], &grid),
        Err(Error::InvalidGrid(_))
    ));
}
