use std::io::Write;
use std::path::PathBuf;

use lmg_gmc::criticality_scan::{
    differentiate, run_fss, sweep_with, DirectSolver, FssConfig, GroundStateSolver, OrderSpec,
    UniformGrid,
};
use lmg_gmc::gmc_measures::spectrum_from;
use lmg_gmc::oracle::{
    full_ground_energy, full_ground_state, oracle_above_all, MAX_GMC_SPINS, MAX_SPINS,
};
use lmg_gmc::{BlockEntropies, GroundState, ModelParams};

use crate::cache::{encode_record, write_atomic, CachedSolver};
use crate::cli::{Cli, Command, ModelArgs, OutputArgs};
use crate::config::{pick, ConfigFile, RunConfig, CACHE_DIR_ENV};
use crate::error::{CliError, Result};
use crate::parse::{parse_field, parse_h_range, parse_orders};
use crate::plot::{Chart, Series};
use crate::report::FssReport;
use crate::table::{write_table, ColumnKind, Table};

const DEFAULT_FSS_GRID: (f64, f64, f64) = (0.5, 1.2, 0.005);
const ORACLE_GAMMAS: [f64; 3] = [0.0, 0.5, 1.0];
const ORACLE_FIELDS: [f64; 5] = [0.0, 0.5, 1.0, 1.5, 2.0];
const ORACLE_ENERGY_TOLERANCE: f64 = 1e-9;
const ORACLE_GMC_TOLERANCE: f64 = 1e-8;

/// The solver a run uses.
pub enum Solver {
    Direct(DirectSolver),
    Cached(CachedSolver),
}

impl GroundStateSolver for Solver {
    fn solve(&self, params: &ModelParams) -> lmg_gmc::Result<GroundState> {
        match self {
            Solver::Direct(s) => s.solve(params),
            Solver::Cached(s) => s.solve(params),
        }
    }
}

impl Solver {
    pub fn from_config(config: &RunConfig) -> Result<Self> {
        Ok(match &config.cache_dir {
            Some(dir) => Solver::Cached(CachedSolver::new(dir)?),
            None => Solver::Direct(DirectSolver),
        })
    }

    fn log_stats(&self) {
        if let Solver::Cached(c) = self {
            let (hits, misses) = c.stats();
            log::info!("cache {}: {hits} hits, {misses} misses", c.dir().display());
        }
    }
}

fn model_fields(model: &ModelArgs, file: &ConfigFile, config: &mut RunConfig) -> Result<()> {
    if let Some(g) = pick(model.gamma, file, "gamma")? {
        config.gamma = g;
    }
    if let Some(l) = pick(model.lambda, file, "lambda")? {
        config.coupling = l;
    }
    Ok(())
}

fn output_fields(output: &OutputArgs, file: &ConfigFile, config: &mut RunConfig) -> Result<()> {
    config.out = pick(output.out.clone(), file, "out")?;
    config.plot = pick(output.plot.clone(), file, "plot")?;
    Ok(())
}

fn h_string(flag: &Option<String>, file: &ConfigFile) -> Option<String> {
    flag.clone().or_else(|| file.raw("h").map(str::to_string))
}

/// Merges flags over the config file over defaults. The cache directory
/// comes from `--cache-dir`, then the environment, then the file.
pub fn resolve(cli: &Cli, env_cache_dir: Option<PathBuf>) -> Result<RunConfig> {
    let file = match &cli.global.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let mut config = RunConfig::default();

    if cli.global.no_cache {
        config.cache_dir = None;
    } else if let Some(dir) = cli
        .global
        .cache_dir
        .clone()
        .or(env_cache_dir)
        .or(file.get::<PathBuf>("cache_dir")?)
    {
        config.cache_dir = Some(dir);
    }
    config.jobs = pick(cli.global.jobs, &file, "jobs")?;
    if config.jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }

    match &cli.command {
        Command::Solve { n, h, model, out } => {
            config.n_spins = pick(*n, &file, "n")?;
            config.field = h_string(h, &file).as_deref().map(parse_field).transpose()?;
            model_fields(model, &file, &mut config)?;
            config.out = pick(out.clone(), &file, "out")?;
        }
        Command::Sweep {
            n, h, k, model, output, ..
        } => {
            config.n_spins = pick(*n, &file, "n")?;
            config.h_range = h_string(h, &file).as_deref().map(parse_h_range).transpose()?;
            if let Some(list) = k.clone().or_else(|| file.raw("k").map(str::to_string)) {
                config.orders = parse_orders(&list)?;
            }
            model_fields(model, &file, &mut config)?;
            output_fields(output, &file, &mut config)?;
        }
        Command::Spectrum {
            n, h, model, output, ..
        } => {
            config.n_spins = pick(*n, &file, "n")?;
            config.field = h_string(h, &file).as_deref().map(parse_field).transpose()?;
            model_fields(model, &file, &mut config)?;
            output_fields(output, &file, &mut config)?;
        }
        Command::Fss {
            k,
            max_n,
            h,
            drop_below,
            refine,
            model,
            output,
        } => {
            if let Some(list) = k.clone().or_else(|| file.raw("k").map(str::to_string)) {
                config.orders = parse_orders(&list)?;
            }
            config.max_n = pick(*max_n, &file, "max_n")?;
            config.h_range = Some(match h_string(h, &file) {
                Some(s) => parse_h_range(&s)?,
                None => {
                    let (a, b, s) = DEFAULT_FSS_GRID;
                    UniformGrid::new(a, b, s)?
                }
            });
            if let Some(d) = pick(*drop_below, &file, "drop_below")? {
                config.drop_below = d;
            }
            if let Some(r) = pick(*refine, &file, "refine")? {
                if r == 0 {
                    return Err(CliError::Usage("--refine must be at least 1".into()));
                }
                config.refine = r;
            }
            model_fields(model, &file, &mut config)?;
            output_fields(output, &file, &mut config)?;
        }
        Command::OracleCheck { .. } => {
            config.cache_dir = None;
        }
    }
    if let Some(n) = config.n_spins {
        ModelParams::with_coupling(n, config.gamma, config.field.unwrap_or(0.0), config.coupling)?;
    }
    Ok(config)
}

/// Runs a parsed command line. Primary output goes to `stdout` unless
/// `--out` names a file.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let env_dir = std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from);
    let config = resolve(cli, env_dir)?;
    let mut buf: Vec<u8> = Vec::new();
    let outcome = match config.jobs {
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
            pool.install(|| execute(cli, &config, &mut buf))
        }
        None => execute(cli, &config, &mut buf),
    };
    stdout
        .write_all(&buf)
        .and_then(|_| stdout.flush())
        .map_err(|e| CliError::io("<stdout>", e))?;
    outcome
}

fn execute(cli: &Cli, config: &RunConfig, stdout: &mut Vec<u8>) -> Result<()> {
    match &cli.command {
        Command::Solve { .. } => cmd_solve(config, stdout),
        Command::Sweep { derivative, .. } => cmd_sweep(config, *derivative, stdout),
        Command::Spectrum { divisors_only, .. } => cmd_spectrum(config, *divisors_only, stdout),
        Command::Fss { .. } => cmd_fss(config, stdout),
        Command::OracleCheck {
            max_n,
            energies_only,
            perturb,
        } => cmd_oracle_check(*max_n, *energies_only, perturb.unwrap_or(0.0), stdout),
    }
}

fn emit(out: &Option<PathBuf>, bytes: &[u8], stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, bytes),
        None => stdout
            .write_all(bytes)
            .and_then(|_| stdout.flush())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn emit_plot(path: &Option<PathBuf>, chart: Chart) -> Result<()> {
    if let Some(path) = path {
        write_atomic(path, chart.render().as_bytes())?;
    }
    Ok(())
}

fn model_at(config: &RunConfig, field: f64) -> Result<ModelParams> {
    Ok(ModelParams::with_coupling(
        config.require_n()?,
        config.gamma,
        field,
        config.coupling,
    )?)
}

pub fn cmd_solve(config: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let params = model_at(config, config.require_field()?)?;
    let solver = Solver::from_config(config)?;
    let gs = solver.solve(&params)?;
    solver.log_stats();
    emit(&config.out, encode_record(&gs).as_bytes(), stdout)
}

fn order_label(k: usize) -> String {
    if k == 1 {
        "S_total".into()
    } else {
        format!("S_k{k}")
    }
}

pub fn cmd_sweep(config: &RunConfig, derivative: bool, stdout: &mut dyn Write) -> Result<()> {
    let grid = config.require_range()?;
    let template = model_at(config, grid.start)?;
    let n = template.n_spins;
    let mut orders: Vec<usize> = Vec::new();
    for spec in config.require_orders()? {
        let k = spec.resolve(n)?;
        if !orders.contains(&k) {
            orders.push(k);
        }
    }
    let solver = Solver::from_config(config)?;
    let mut curves = sweep_with(&solver, &template, &orders, &grid)?;
    solver.log_stats();
    if derivative {
        curves = curves.iter().map(differentiate).collect::<lmg_gmc::Result<_>>()?;
    }

    let mut headers = vec!["h".to_string()];
    headers.extend(orders.iter().map(|&k| order_label(k)));
    if derivative {
        headers.extend(orders.iter().map(|&k| format!("d{}/dh", order_label(k))));
    }
    let mut table = Table::new(headers.clone(), vec![ColumnKind::Real; headers.len()]);
    for (i, &h) in curves[0].h_grid.iter().enumerate() {
        let mut row = vec![h];
        row.extend(curves.iter().map(|c| c.values[i]));
        if derivative {
            row.extend(curves.iter().map(|c| c.derivative[i]));
        }
        table.rows.push(row);
    }
    let mut buf = Vec::new();
    write_table(&mut buf, &table)?;
    emit(&config.out, &buf, stdout)?;

    emit_plot(
        &config.plot,
        Chart {
            title: format!("N = {n}, gamma = {}", config.gamma),
            x_label: "h".into(),
            y_label: "correlation (bits)".into(),
            series: curves
                .iter()
                .map(|c| {
                    Series::line(
                        order_label(c.k),
                        c.h_grid.iter().copied().zip(c.values.iter().copied()).collect(),
                    )
                })
                .collect(),
        },
    )
}

pub fn cmd_spectrum(config: &RunConfig, divisors_only: bool, stdout: &mut dyn Write) -> Result<()> {
    let params = model_at(config, config.require_field()?)?;
    let n = params.n_spins;
    let solver = Solver::from_config(config)?;
    let gs = solver.solve(&params)?;
    solver.log_stats();
    let entropies = BlockEntropies::new(&gs.vector);
    entropies.fill_all()?;
    let spectrum = spectrum_from(&entropies)?;

    let ks: Vec<usize> = (1..=n).filter(|k| !divisors_only || n % k == 0).collect();
    let mut table = Table::new(
        vec!["k".into(), "S_above".into(), "S_genuine".into()],
        vec![ColumnKind::Integer, ColumnKind::Real, ColumnKind::Real],
    );
    for &k in &ks {
        let genuine = if k == 1 { spectrum.total } else { spectrum.genuine(k) };
        table.rows.push(vec![k as f64, spectrum.above(k), genuine]);
    }
    let mut buf = Vec::new();
    write_table(&mut buf, &table)?;
    emit(&config.out, &buf, stdout)?;

    let above: Vec<(f64, f64)> = ks.iter().map(|&k| (k as f64, spectrum.above(k))).collect();
    emit_plot(
        &config.plot,
        Chart {
            title: format!("N = {n}, h = {}", params.field),
            x_label: "block size k".into(),
            y_label: "S^(k->N) (bits)".into(),
            series: vec![if divisors_only {
                Series::line("k divides N", above)
            } else {
                Series::scatter("all k", above)
            }],
        },
    )
}

pub fn cmd_fss(config: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let specs: Vec<OrderSpec> = config.require_orders()?.to_vec();
    let n_max = config
        .max_n
        .ok_or_else(|| CliError::Usage("missing --max-n".into()))?;
    let fss = FssConfig {
        gamma: config.gamma,
        coupling: config.coupling,
        grid: config.require_range()?,
        n_max,
        drop_below: config.drop_below,
        refine: config.refine,
    };
    let solver = Solver::from_config(config)?;
    let results = run_fss(&solver, &specs, &fss)?;
    solver.log_stats();

    let reports: Vec<FssReport> = results.iter().map(FssReport::from).collect();
    let mut json = if reports.len() == 1 {
        serde_json::to_string_pretty(&reports[0])
    } else {
        serde_json::to_string_pretty(&reports)
    }
    .map_err(|e| CliError::Malformed {
        what: "JSON report",
        message: e.to_string(),
    })?;
    json.push('\n');
    emit(&config.out, json.as_bytes(), stdout)?;

    let mut series = Vec::new();
    for r in &results {
        let points: Vec<(f64, f64)> = r
            .fit
            .sizes
            .iter()
            .zip(&r.fit.correlation_at_min)
            .map(|(&n, &s)| ((n as f64).ln(), s.ln()))
            .collect();
        let fitted = points
            .iter()
            .map(|&(x, _)| (x, r.fit.prefactor.ln() + r.fit.alpha * x))
            .collect();
        series.push(Series::scatter(format!("k = {}", r.fit.k_spec), points));
        series.push(Series::line(format!("alpha = {:.3}", r.fit.alpha), fitted));
    }
    emit_plot(
        &config.plot,
        Chart {
            title: format!("gamma = {}", config.gamma),
            x_label: "ln N".into(),
            y_label: "ln S(h_min)".into(),
            series,
        },
    )
}

pub fn cmd_oracle_check(
    max_n: usize,
    energies_only: bool,
    perturb: f64,
    stdout: &mut dyn Write,
) -> Result<()> {
    let cap = if energies_only { MAX_SPINS } else { MAX_GMC_SPINS };
    if max_n > cap {
        return Err(CliError::Usage(format!(
            "--max-n {max_n} exceeds the oracle cap of {cap}{}",
            if energies_only { "" } else { " with correlations enabled" }
        )));
    }
    if max_n < 2 {
        return Err(CliError::Usage("--max-n must be at least 2".into()));
    }
    let mut lines = Vec::new();
    let mut points = 0;
    let mut mismatches = 0;
    for n in 2..=max_n {
        for gamma in ORACLE_GAMMAS {
            for h in ORACLE_FIELDS {
                points += 1;
                let params = ModelParams::new(n, gamma, h)?;
                let banded = DirectSolver.solve(&params)?;
                let energy = banded.energy + if energies_only { perturb } else { 0.0 };
                let reference = if energies_only {
                    full_ground_energy(&params)?
                } else {
                    full_ground_state(&params)?.energy
                };
                if (energy - reference).abs() > ORACLE_ENERGY_TOLERANCE {
                    mismatches += 1;
                    lines.push(format!(
                        "mismatch N={n} gamma={gamma} h={h} energy: {energy:e} vs {reference:e}"
                    ));
                }
                if energies_only {
                    continue;
                }
                let full = full_ground_state(&params)?;
                let spectrum = spectrum_from(&BlockEntropies::new(&banded.vector))?;
                let above = oracle_above_all(&full.amplitudes, n)?;
                for k in 1..=n {
                    let ours = spectrum.above(k) + perturb;
                    if (ours - above[k - 1]).abs() > ORACLE_GMC_TOLERANCE {
                        mismatches += 1;
                        lines.push(format!(
                            "mismatch N={n} gamma={gamma} h={h} k={k} S_above: {ours:e} vs {:e}",
                            above[k - 1]
                        ));
                    }
                }
            }
        }
    }
    lines.push(format!(
        "oracle check: {points} points up to N = {max_n}, {mismatches} mismatches"
    ));
    let mut text = lines.join("\n");
    text.push('\n');
    emit(&None, text.as_bytes(), stdout)?;
    if mismatches > 0 {
        return Err(CliError::OracleMismatch(mismatches));
    }
    Ok(())
}
