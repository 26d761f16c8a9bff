//! One experiment per command. Realizations run on a worker pool and are
//! reduced in index order, so outputs do not depend on the worker count.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use wickspde::linfield::{
    heat_convolution, integrated_heat_constant, jump_continuity, renorm_constants, stationary_convolution,
    wave_convolution, ConvolutionKind, StochasticConvolution,
};
use wickspde::pathint::{grid_with_jumps, sample_mode_noise};
use wickspde::seeds::{derive_seed, label_key};
use wickspde::solver::{mild_residual, solve, InitialData, SolutionPath, WickData};
use wickspde::spectral::SpectralField;
use wickspde::subordinator::{sample_subordinator, stieltjes_integral, SubordinatorPath};
use wickspde::wick::{covariance_diagnostic, hermite, CauchySample};

use crate::config::{Command, ExperimentConfig, ModeData};
use crate::error::CliError;
use crate::report::{Cell, RunOutput, Table};

/// Seed of realization `index`, stream `what`, under the command's key.
pub fn realization_seed(cfg: &ExperimentConfig, index: u64, what: &str) -> u64 {
    derive_seed(cfg.seed, &[label_key(cfg.command.name()), index, label_key(what)])
}

fn context(cfg: &ExperimentConfig) -> impl Fn(wickspde::Error) -> CliError + '_ {
    move |source| CliError::Experiment { command: cfg.command.name(), source }
}

/// Run `f` over `0..n` on `workers` threads, results in index order.
fn ordered_map<T: Send>(
    workers: usize,
    n: usize,
    f: impl Fn(usize) -> wickspde::Result<T> + Sync + Send,
) -> Result<wickspde::Result<Vec<T>>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Pool(e.to_string()))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, f64::NAN);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn sample_path(cfg: &ExperimentConfig, index: u64) -> wickspde::Result<SubordinatorPath> {
    sample_subordinator(&cfg.subordinator.spec(), cfg.field.horizon, realization_seed(cfg, index, "path"))
}

/// `f(x) = Σ a_l e^{il·x}` at one point.
fn point_value(f: &SpectralField, x: [f64; 2]) -> f64 {
    f.iter().map(|(l, a)| (a * Complex64::from_polar(1.0, l[0] as f64 * x[0] + l[1] as f64 * x[1])).re).sum()
}

pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<RunOutput, CliError> {
    cfg.validate()?;
    match cfg.command {
        Command::Isometry => isometry(cfg, workers),
        Command::Covariance => covariance(cfg, workers),
        Command::WickConvergence => wick_convergence(cfg, workers),
        Command::RenormDivergence => renorm_divergence(cfg),
        Command::JumpContinuity => jump_continuity_check(cfg, workers),
        Command::SolveHeat | Command::SolveWave => solve_ensemble(cfg, workers),
        Command::StationaryCheck => stationary_check(cfg, workers),
    }
}

/// `E[X_l X_{l'}] = δ_{l,−l'} ∫ f_l f_{l'} dL` for the heat kernels
/// `f_l(s) = e^{−(T−s)|l|²}` at `l = (1,0)`, `l' = (−1,0)` and `(0,1)`.
fn isometry(cfg: &ExperimentConfig, workers: usize) -> Result<RunOutput, CliError> {
    let err = context(cfg);
    let t = cfg.field.horizon;
    let path = sample_path(cfg, 0).map_err(&err)?;
    let grid = grid_with_jumps(&path, t, cfg.field.time_cells, &[]);
    let rows = ordered_map(workers, cfg.wick.ensemble, |s| {
        let noise = sample_mode_noise(&path, 1, &grid, realization_seed(cfg, s as u64, "noise"))?;
        let f = heat_convolution(&noise, &[t])?.values()[0].clone();
        let (a, b, c) = (f.coeff([1, 0]) * (2.0 * PI), f.coeff([0, 1]) * (2.0 * PI), f.coeff([-1, 0]) * (2.0 * PI));
        Ok([(a * c).re, (a * b).re, (a * b).im])
    })?
    .map_err(&err)?;
    let exact = stieltjes_integral(|s| (-2.0 * (t - s)).exp(), &path, 0.0, t).map_err(&err)?;
    let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<_>>();
    let (same, same_se) = mean_se(&col(0));
    let (re, re_se) = mean_se(&col(1));
    let (im, im_se) = mean_se(&col(2));
    let z = |m: f64, se: f64, target: f64| (m - target).abs() / se;
    let zs = [z(same, same_se, exact), z(re, re_se, 0.0), z(im, im_se, 0.0)];
    let pass = zs.iter().all(|&v| v <= cfg.wick.n_se);
    let mut table = Table::new("isometry", &["sample", "same_mode", "cross_re", "cross_im"]);
    for (s, r) in rows.iter().enumerate() {
        table.push(vec![s.into(), r[0].into(), r[1].into(), r[2].into()]);
    }
    let mut metrics = Map::new();
    metrics.insert("integral_f_squared_dl".into(), json!(exact));
    metrics.insert("same_mode_mean".into(), json!(same));
    metrics.insert("same_mode_se".into(), json!(same_se));
    metrics.insert("cross_mean".into(), json!([re, im]));
    metrics.insert("cross_se".into(), json!([re_se, im_se]));
    metrics.insert("z_scores".into(), json!(zs));
    metrics.insert("jumps".into(), json!(path.jumps().len()));
    Ok(RunOutput { metrics, pass, tables: vec![table] })
}

fn convolution(kind: ConvolutionKind, noise: &wickspde::pathint::ModeNoise, times: &[f64]) -> wickspde::Result<StochasticConvolution> {
    match kind {
        ConvolutionKind::Wave => wave_convolution(noise, times),
        _ => heat_convolution(noise, times),
    }
}

/// `E[X^{⋄k}(s,x) X^{⋄m}(t,y)]` against `k! δ_{km} E[X(s,x)X(t,y)]^k` on a
/// fixed clock path.
fn covariance(cfg: &ExperimentConfig, workers: usize) -> Result<RunOutput, CliError> {
    let err = context(cfg);
    let kind: ConvolutionKind = cfg.field.kind.into();
    let n = cfg.field.cutoffs[0];
    let times = &cfg.field.times;
    let path = sample_path(cfg, 0).map_err(&err)?;
    let grid = grid_with_jumps(&path, cfg.field.horizon, cfg.field.time_cells, times);
    let consts = renorm_constants(kind, &path, n, times).map_err(&err)?;
    let [x, y] = cfg.wick.points;
    let values = ordered_map(workers, cfg.wick.ensemble, |s| {
        let noise = sample_mode_noise(&path, n, &grid, realization_seed(cfg, s as u64, "noise"))?;
        let conv = convolution(kind, &noise, times)?;
        Ok((point_value(&conv.values()[0], x), point_value(&conv.values()[1], y)))
    })?
    .map_err(&err)?;
    let xs: Vec<f64> = values.iter().map(|v| v.0).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.1).collect();
    let mut table = Table::new("covariance", &["k", "m", "samples", "estimate", "estimate_se", "predicted", "z_score"]);
    let mut pass = true;
    let mut worst: f64 = 0.0;
    for k in 1..=cfg.wick.order {
        let wx: Vec<f64> = xs.iter().map(|&v| hermite(k, v, consts.values[0])).collect();
        for m in 1..=cfg.wick.order {
            let wy: Vec<f64> = ys.iter().map(|&v| hermite(m, v, consts.values[1])).collect();
            let rec = covariance_diagnostic(&xs, &ys, &wx, &wy, k, m).map_err(&err)?;
            pass &= rec.within(cfg.wick.n_se);
            worst = worst.max(rec.z_score());
            table.push(vec![
                k.into(),
                m.into(),
                rec.samples.into(),
                rec.estimate.into(),
                rec.estimate_se.into(),
                rec.predicted.into(),
                rec.z_score().into(),
            ]);
        }
    }
    let mut metrics = Map::new();
    metrics.insert("renorm_constants".into(), json!(consts.values));
    metrics.insert("worst_z_score".into(), json!(worst));
    Ok(RunOutput { metrics, pass, tables: vec![table] })
}

fn wick_convergence(cfg: &ExperimentConfig, workers: usize) -> Result<RunOutput, CliError> {
    let err = context(cfg);
    let study = cfg.cauchy_study();
    let samples: Vec<CauchySample> =
        ordered_map(workers, study.ensemble, |i| study.run_sample(i))?.map_err(&err)?;
    let report = study.report(&samples);
    let mut table = Table::new("wick_convergence", &["kind", "k", "N", "sample", "norm_value"]);
    for (i, &n) in report.cutoffs.iter().enumerate() {
        for (s, &v) in report.values[i].iter().enumerate() {
            table.push(vec![report.kind.into(), report.order.into(), n.into(), s.into(), v.into()]);
        }
    }
    let mut metrics = Map::new();
    metrics.insert("means".into(), json!(report.means));
    metrics.insert("standard_errors".into(), json!(report.standard_errors));
    metrics.insert("slope".into(), json!(report.slope));
    metrics.insert("jumps".into(), json!(samples.iter().map(|s| s.jumps).collect::<Vec<_>>()));
    let pass = report.strictly_decreasing();
    Ok(RunOutput { metrics, pass, tables: vec![table] })
}

/// `I(N) = ∫_0^T c_N(t) dt` for `L(t) = t` by summing every lattice mode.
pub fn integrated_constant_by_lattice(cutoff: usize, horizon: f64) -> f64 {
    let r = cutoff as i64;
    let mut s = 0.0;
    for a in -r..=r {
        for b in -r..=r {
            let l2 = (a * a + b * b) as f64;
            if l2 > (r * r) as f64 {
                continue;
            }
            s += if l2 == 0.0 {
                horizon * horizon / 2.0
            } else {
                horizon / (2.0 * l2) + (-2.0 * horizon * l2).exp_m1() / (4.0 * l2 * l2)
            };
        }
    }
    s / (4.0 * PI * PI)
}

fn renorm_divergence(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let t = cfg.field.horizon;
    let mut table = Table::new("renorm_divergence", &["N", "I_N", "I_2N", "increment", "oracle_increment"]);
    let mut incr = Vec::new();
    let mut pass = true;
    for &n in &cfg.field.cutoffs {
        let (a, b) = (integrated_heat_constant(n, t), integrated_heat_constant(2 * n, t));
        let oracle = integrated_constant_by_lattice(2 * n, t) - integrated_constant_by_lattice(n, t);
        pass &= ((b - a) - oracle).abs() <= 0.1 * oracle.abs();
        incr.push(b - a);
        table.push(vec![n.into(), a.into(), b.into(), (b - a).into(), oracle.into()]);
    }
    let (lo, hi) = incr.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
    pass &= hi <= 1.1 * lo;
    let mut metrics = Map::new();
    metrics.insert("increments".into(), json!(incr));
    metrics.insert("limit".into(), json!(t * 2f64.ln() / (4.0 * PI)));
    metrics.insert("spread".into(), json!(hi / lo));
    Ok(RunOutput { metrics, pass, tables: vec![table] })
}

fn jump_continuity_check(cfg: &ExperimentConfig, workers: usize) -> Result<RunOutput, CliError> {
    let err = context(cfg);
    let n = *cfg.field.cutoffs.last().unwrap();
    let rows = ordered_map(workers, cfg.wick.ensemble, |s| {
        let path = sample_path(cfg, s as u64)?;
        let grid = grid_with_jumps(&path, cfg.field.horizon, cfg.field.time_cells, &[]);
        let noise = sample_mode_noise(&path, n, &grid, realization_seed(cfg, s as u64, "noise"))?;
        jump_continuity(&noise)
    })?
    .map_err(&err)?;
    const TOL: f64 = 1e-12;
    let mut table = Table::new("jump_continuity", &["sample", "jumps", "max_wave_increment", "max_heat_jump_error"]);
    for (s, r) in rows.iter().enumerate() {
        table.push(vec![s.into(), r.jumps.into(), r.max_wave_increment.into(), r.max_heat_jump_error.into()]);
    }
    let wave = rows.iter().map(|r| r.max_wave_increment).fold(0.0, f64::max);
    let heat = rows.iter().map(|r| r.max_heat_jump_error).fold(0.0, f64::max);
    let mut metrics = Map::new();
    metrics.insert("jumps".into(), json!(rows.iter().map(|r| r.jumps).sum::<usize>()));
    metrics.insert("max_wave_increment".into(), json!(wave));
    metrics.insert("max_heat_jump_error".into(), json!(heat));
    metrics.insert("tolerance".into(), json!(TOL));
    Ok(RunOutput { metrics, pass: wave <= TOL && heat <= TOL, tables: vec![table] })
}

fn mode_data(m: usize, d: &ModeData) -> wickspde::Result<SpectralField> {
    if d.amplitude == 0.0 {
        return Ok(SpectralField::zeros(m));
    }
    SpectralField::mode_pair(m, d.mode, Complex64::new(d.amplitude, 0.0))
}

struct SolveRow {
    solution: SolutionPath,
    residual: Option<f64>,
}

fn solve_ensemble(cfg: &ExperimentConfig, workers: usize) -> Result<RunOutput, CliError> {
    let err = context(cfg);
    let kind: ConvolutionKind = cfg.field.kind.into();
    let k = cfg.wick.order;
    let cutoffs = &cfg.field.cutoffs;
    let top = *cutoffs.last().unwrap();
    let per_sample = ordered_map(workers, cfg.wick.ensemble, |s| {
        let path = sample_path(cfg, s as u64)?;
        let mesh = grid_with_jumps(&path, cfg.field.horizon, cfg.solver.data_cells, &[]);
        let noise = sample_mode_noise(&path, top, &mesh, realization_seed(cfg, s as u64, "noise"))?;
        let full = convolution(kind, &noise, &[])?;
        cutoffs
            .iter()
            .map(|&n| {
                let conv = full.project_modes(n);
                let data = if cfg.solver.renormalized {
                    let c = renorm_constants(kind, &path, n, conv.times())?;
                    WickData::renormalized(&conv, &c, k)?
                } else {
                    WickData::naive(&conv, k)?
                };
                let scfg = cfg.solve_config(n);
                let m = scfg.cutoff;
                let init = InitialData {
                    u0: mode_data(m, &cfg.solver.u0)?,
                    u1: (kind == ConvolutionKind::Wave).then(|| mode_data(m, &cfg.solver.u1)).transpose()?,
                };
                let mut solution = solve(&data, &init, &scfg)?;
                let residual = if scfg.record_steps && !solution.blowup {
                    Some(mild_residual(&solution, &data, &init, &scfg)?)
                } else {
                    None
                };
                solution.steps = None;
                Ok(SolveRow { solution, residual })
            })
            .collect::<wickspde::Result<Vec<_>>>()
    })?
    .map_err(&err)?;

    let mut table = Table::new(
        cfg.command.name().replace('-', "_").as_str(),
        &["N", "M", "sample", "blowup", "exit_time", "sup_monitored", "final_monitored", "lgamma", "max_picard", "halvings", "residual"],
    );
    let mut pass = true;
    let mut medians = Vec::new();
    let mut blowups = Vec::new();
    for (i, &n) in cutoffs.iter().enumerate() {
        let mut sups = Vec::new();
        let mut count = 0usize;
        for (s, rows) in per_sample.iter().enumerate() {
            let r = &rows[i];
            let sol = &r.solution;
            sups.push(sol.sup_monitored());
            count += usize::from(sol.blowup);
            if let Some(res) = r.residual {
                pass &= res <= cfg.solver.residual_tol;
            }
            table.push(vec![
                n.into(),
                cfg.solver_cutoff(n).into(),
                s.into(),
                sol.blowup.into(),
                sol.exit_time.into(),
                sol.sup_monitored().into(),
                sol.monitored.last().copied().unwrap_or(f64::NAN).into(),
                sol.lgamma.unwrap_or(f64::NAN).into(),
                (sol.picard_iterations.iter().copied().max().unwrap_or(0) as usize).into(),
                sol.halvings.into(),
                r.residual.map_or(Cell::Text(String::new()), Cell::Float),
            ]);
        }
        medians.push(median(&sups));
        blowups.push(count);
    }
    let mut metrics = Map::new();
    metrics.insert("cutoffs".into(), json!(cutoffs));
    metrics.insert("median_sup_monitored".into(), json!(medians));
    metrics.insert("blowups".into(), json!(blowups));
    metrics.insert("renormalized".into(), Value::Bool(cfg.solver.renormalized));
    Ok(RunOutput { metrics, pass, tables: vec![table] })
}

fn stationary_check(cfg: &ExperimentConfig, workers: usize) -> Result<RunOutput, CliError> {
    let err = context(cfg);
    let kind: ConvolutionKind = cfg.field.kind.into();
    let spec = cfg.subordinator.spec();
    let n = cfg.field.cutoffs[0];
    let times = &cfg.field.times;
    let runs = ordered_map(workers, cfg.wick.ensemble, |s| {
        let run = stationary_convolution(kind, &spec, n, times, cfg.field.past_horizon, realization_seed(cfg, s as u64, "stationary"))?;
        let energy: Vec<f64> =
            run.convolution.values().iter().map(|f| f.iter().map(|(_, a)| a.norm_sqr()).sum()).collect();
        Ok((energy, run.truncation_bias_bound, run.log_moment))
    })?
    .map_err(&err)?;
    let mut table = Table::new("stationary_check", &["sample", "t", "second_moment"]);
    for (s, (e, _, _)) in runs.iter().enumerate() {
        for (t, v) in times.iter().zip(e) {
            table.push(vec![s.into(), (*t).into(), (*v).into()]);
        }
    }
    let last = times.len() - 1;
    let diffs: Vec<f64> = runs.iter().map(|(e, _, _)| e[0] - e[last]).collect();
    let (d, d_se) = mean_se(&diffs);
    let means: Vec<f64> = (0..times.len()).map(|j| mean_se(&runs.iter().map(|r| r.0[j]).collect::<Vec<_>>()).0).collect();
    let pass = (d.abs() <= cfg.wick.n_se * d_se) || (d == 0.0);
    let mut metrics = Map::new();
    metrics.insert("second_moments".into(), json!(means));
    metrics.insert("difference".into(), json!(d));
    metrics.insert("difference_se".into(), json!(d_se));
    metrics.insert("log_moment".into(), json!(runs.first().map(|r| r.2)));
    metrics.insert("truncation_bias_bound".into(), json!(runs.first().map(|r| r.1)));
    Ok(RunOutput { metrics, pass, tables: vec![table] })
}
