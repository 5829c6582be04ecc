//! The four experiment drivers behind the subcommands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::{EstimatorKind, RunConfig, SolverKind};
use super::table::{num, write_csv, ResultRow, ResultTable};
use crate::drift::{DriftSpec, ModelId};
use crate::error::{Error, Result};
use crate::grid::{make_grid, sample_brownian, SeedSpec};
use crate::localtime::{local_time_integral, DerivativeFrame, Representation};
use crate::payoff::{Payoff, PayoffKind, WeightFunction};
use crate::sensitivity::{finite_difference_delta, mollified_convergence_study, DeltaOptions, DeltaSetup};
use crate::solver::{direct_particle_solve, moment_diagnostics, picard_solve, SolveResult};
use crate::stats::{log_log_slope, mean_and_se, variance_about, EstimatorResult};

/// Files written by a command and whether its checks passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub table: ResultTable,
    pub passed: bool,
}

struct Recorder<'a> {
    cfg: &'a RunConfig,
    hash: String,
    table: ResultTable,
}

impl<'a> Recorder<'a> {
    fn new(cfg: &'a RunConfig) -> Result<Self> {
        Ok(Self {
            cfg,
            hash: cfg.hash()?,
            table: ResultTable::default(),
        })
    }

    fn push(&mut self, quantity: impl Into<String>, estimate: f64, std_error: f64, particles: usize, started: Instant) {
        self.table.rows.push(ResultRow {
            quantity: quantity.into(),
            estimate,
            std_error,
            particles,
            steps: self.cfg.steps,
            seed: self.cfg.seed,
            config_hash: self.hash.clone(),
            wall_time: started.elapsed().as_secs_f64(),
        });
    }

    fn push_estimate(&mut self, quantity: impl Into<String>, e: &EstimatorResult, started: Instant) {
        self.push(quantity, e.estimate, e.std_error, e.samples, started);
    }
}

fn status(ok: bool) -> String {
    if ok { "PASS" } else { "FAIL" }.to_string()
}

fn solve(kind: SolverKind, spec: &DriftSpec, cfg: &RunConfig) -> Result<SolveResult> {
    let grid = cfg.grid()?;
    match kind {
        SolverKind::Picard => picard_solve(spec, cfg.x, &grid, cfg.particles, &cfg.picard.to_config(), cfg.seed_spec()),
        SolverKind::Direct => direct_particle_solve(spec, cfg.x, &grid, cfg.particles, cfg.seed_spec()),
    }
}

fn method_name(kind: SolverKind) -> &'static str {
    match kind {
        SolverKind::Picard => "picard",
        SolverKind::Direct => "direct",
    }
}

/// Per-node mean, variance and quantiles; Picard residual history; moment
/// diagnostics.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    std::fs::create_dir_all(out)?;
    let spec = cfg.model.build();
    let mut rec = Recorder::new(cfg)?;
    let mut files = Vec::new();
    let mut node_rows = Vec::new();
    let mut moment_rows = Vec::new();
    let mut residual_rows = Vec::new();
    for &kind in &cfg.simulate.methods {
        let started = Instant::now();
        let name = method_name(kind);
        let res = solve(kind, &spec, cfg)?;
        let grid = *res.grid();
        for k in 0..grid.len() {
            let col = res.ensemble.column(k);
            let (mean, se) = mean_and_se(col);
            let var = variance_about(col, mean);
            let mut row = vec![name.to_string(), k.to_string(), num(grid.time(k)), num(mean), num(se), num(var)];
            row.extend(cfg.simulate.quantiles.iter().map(|&q| num(res.flow.at(k).quantile(q))));
            node_rows.push(row);
        }
        for (j, r) in res.residuals.iter().enumerate() {
            residual_rows.push(vec![name.to_string(), (j + 1).to_string(), num(*r)]);
        }
        let report = moment_diagnostics(&spec, &res, cfg.simulate.moment_p)?;
        for (k, m) in report.moments.iter().enumerate() {
            moment_rows.push(vec![name.to_string(), k.to_string(), num(grid.time(k)), num(*m)]);
        }
        let terminal = res.ensemble.terminal();
        let (mean, se) = mean_and_se(terminal);
        rec.push(format!("{name}.mean_T"), mean, se, cfg.particles, started);
        rec.push(format!("{name}.variance_T"), variance_about(terminal, mean), 0.0, cfg.particles, started);
        rec.push(format!("{name}.iterations"), res.iterations as f64, 0.0, cfg.particles, started);
        rec.push(format!("{name}.final_residual"), res.final_residual(), 0.0, cfg.particles, started);
        rec.push(format!("{name}.max_moment"), report.max_moment, 0.0, cfg.particles, started);
        rec.push(format!("{name}.envelope_violations"), report.envelope_violations as f64, 0.0, cfg.particles, started);
        rec.push(format!("{name}.growth_violations"), report.growth_violations as f64, 0.0, cfg.particles, started);
        rec.push(format!("{name}.moment_flagged"), f64::from(u8::from(report.flagged)), 0.0, cfg.particles, started);
        if report.flagged {
            eprintln!("warning: {name}: moment diagnostics flagged the run");
        }
    }
    let mut header = vec!["method".to_string(), "node".into(), "time".into(), "mean".into(), "mean_se".into(), "variance".into()];
    header.extend(cfg.simulate.quantiles.iter().map(|q| format!("q{q}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    files.push(write_csv(&out.join("simulate_nodes.csv"), &header, &node_rows)?);
    files.push(write_csv(&out.join("simulate_residuals.csv"), &["method", "iteration", "residual"], &residual_rows)?);
    files.push(write_csv(&out.join("simulate_moments.csv"), &["method", "node", "time", "moment"], &moment_rows)?);
    files.extend(rec.table.write(out, "simulate")?);
    Ok(Outcome {
        files,
        table: rec.table,
        passed: true,
    })
}

fn agreement_rows(estimates: &[(&'static str, EstimatorResult)]) -> (Vec<Vec<String>>, bool) {
    let mut rows = Vec::new();
    let mut all = true;
    for (i, (a, ea)) in estimates.iter().enumerate() {
        for (b, eb) in &estimates[i + 1..] {
            let combined = (ea.std_error.powi(2) + eb.std_error.powi(2)).sqrt();
            let ok = ea.agrees_with(eb, 3.0, 0.0);
            all &= ok;
            rows.push(vec![a.to_string(), b.to_string(), num(ea.estimate - eb.estimate), num(combined), status(ok)]);
        }
    }
    (rows, all)
}

/// Runs the configured delta estimators and a pairwise agreement table.
pub fn cmd_delta(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    std::fs::create_dir_all(out)?;
    let spec = cfg.model.build();
    let grid = cfg.grid()?;
    let phi: Payoff = cfg.delta.payoff.clone().into();
    let mut rec = Recorder::new(cfg)?;
    let needs_setup = cfg
        .delta
        .estimators
        .iter()
        .any(|e| matches!(e, EstimatorKind::Bel | EstimatorKind::Pathwise));
    let started = Instant::now();
    let setup = if needs_setup {
        Some(DeltaSetup::prepare(&spec, cfg.x, &grid, cfg.particles, cfg.seed_spec(), cfg.delta_options())?)
    } else {
        None
    };
    let mut estimates = Vec::new();
    for &kind in &cfg.delta.estimators {
        let t0 = Instant::now();
        let est = match kind {
            EstimatorKind::Bel => setup.as_ref().expect("prepared").bel(&phi, cfg.delta.weight)?,
            EstimatorKind::Pathwise => setup.as_ref().expect("prepared").pathwise(&phi)?,
            EstimatorKind::Fd => finite_difference_delta(
                &spec,
                cfg.x,
                cfg.delta.fd_bump,
                &grid,
                cfg.particles,
                cfg.seed_spec(),
                &phi,
                &cfg.picard.to_config(),
            )?,
        };
        if est.heavy_tail {
            eprintln!("warning: {} standard error {} exceeds the ceiling", kind.name(), est.std_error);
        }
        let base = if kind == EstimatorKind::Fd { t0 } else { started };
        rec.push_estimate(format!("delta.{}", kind.name()), &est, base);
        if let Some((sn, sn_se)) = est.self_normalized {
            rec.push(format!("delta.{}.self_normalized", kind.name()), sn, sn_se, est.samples, base);
        }
        estimates.push((kind.name(), est));
    }
    let (rows, passed) = agreement_rows(&estimates);
    let mut files = vec![write_csv(
        &out.join("delta_agreement.csv"),
        &["left", "right", "difference", "combined_se", "status"],
        &rows,
    )?];
    files.extend(rec.table.write(out, "delta")?);
    Ok(Outcome {
        files,
        table: rec.table,
        passed,
    })
}

/// RMS pathwise error of the local-time integral of `sin` against
/// `-∫ cos(B_u) du` (trapezoid), over `[0, T]`.
pub fn local_time_oracle_error(x: f64, horizon: f64, steps: usize, paths: usize, seed: SeedSpec) -> Result<f64> {
    let grid = make_grid(horizon, steps)?;
    let b = sample_brownian(&grid, paths, x, seed)?;
    let lti = local_time_integral(&|_, y: f64| y.sin(), &b, 0, steps)?;
    let dt = grid.dt();
    let mut quad = vec![0.0; paths];
    for k in 0..steps {
        let (c0, c1) = (b.column(k), b.column(k + 1));
        for i in 0..paths {
            quad[i] += 0.5 * (c0[i].cos() + c1[i].cos()) * dt;
        }
    }
    let sq: Vec<f64> = lti.value.iter().zip(&quad).map(|(v, q)| (v + q).powi(2)).collect();
    Ok(crate::stats::mean(&sq).sqrt())
}

/// Error-versus-parameter sweeps: mollification level, time step, particle
/// count.
pub fn cmd_convergence(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    std::fs::create_dir_all(out)?;
    let spec = cfg.model.build();
    let grid = cfg.grid()?;
    let picard = cfg.picard.to_config();
    let mut rec = Recorder::new(cfg)?;
    let mut files = Vec::new();
    let mut fits = Vec::new();
    let mut passed = true;

    if !cfg.convergence.mollifiers.is_empty() {
        let started = Instant::now();
        let study = mollified_convergence_study(&spec, cfg.x, &grid, cfg.particles, cfg.seed_spec(), &cfg.convergence.mollifiers, &picard)?;
        let rows: Vec<Vec<String>> = study
            .rows
            .iter()
            .map(|r| vec![r.n.to_string(), num(r.mean_square.estimate), num(r.mean_square.std_error), num(r.kantorovich)])
            .collect();
        files.push(write_csv(
            &out.join("convergence_mollification.csv"),
            &["n", "mean_square", "std_error", "kantorovich"],
            &rows,
        )?);
        for r in &study.rows {
            rec.push_estimate(format!("mollification.n{}", r.n), &r.mean_square, started);
        }
        passed &= study.monotone;
        fits.push(vec!["mollification_rate".into(), num(study.rate), "nan".into(), "nan".into(), status(study.monotone)]);
    }

    if cfg.convergence.step_list.len() >= 2 {
        let mut rows = Vec::new();
        let (mut dts, mut errs) = (Vec::new(), Vec::new());
        for &m in &cfg.convergence.step_list {
            let err = local_time_oracle_error(cfg.x, cfg.horizon, m, cfg.convergence.oracle_paths, cfg.seed_spec())?;
            let dt = cfg.horizon / m as f64;
            rows.push(vec![m.to_string(), num(dt), num(err)]);
            dts.push(dt);
            errs.push(err);
        }
        files.push(write_csv(&out.join("convergence_timestep.csv"), &["steps", "dt", "rms_error"], &rows)?);
        let slope = log_log_slope(&dts, &errs);
        let ok = (slope - 0.5).abs() <= 0.15;
        passed &= ok;
        fits.push(vec!["local_time_error_vs_dt".into(), num(slope), num(0.5), num(0.15), status(ok)]);
    }

    if cfg.convergence.particle_list.len() >= 2 {
        let mut rows = Vec::new();
        let (mut ns, mut ses) = (Vec::new(), Vec::new());
        for &n in &cfg.convergence.particle_list {
            let started = Instant::now();
            let res = picard_solve(&spec, cfg.x, &grid, n, &picard, cfg.seed_spec())?;
            let (mean, se) = mean_and_se(res.ensemble.terminal());
            rows.push(vec![n.to_string(), num(mean), num(se)]);
            rec.push(format!("mean_T.n{n}"), mean, se, n, started);
            ns.push(n as f64);
            ses.push(se);
        }
        files.push(write_csv(&out.join("convergence_particles.csv"), &["particles", "mean", "std_error"], &rows)?);
        let slope = log_log_slope(&ns, &ses);
        let ok = (slope + 0.5).abs() <= 0.1;
        passed &= ok;
        fits.push(vec!["std_error_vs_particles".into(), num(slope), num(-0.5), num(0.1), status(ok)]);
    }

    files.push(write_csv(
        &out.join("convergence_fits.csv"),
        &["study", "slope", "target", "tolerance", "status"],
        &fits,
    )?);
    files.extend(rec.table.write(out, "convergence")?);
    Ok(Outcome {
        files,
        table: rec.table,
        passed,
    })
}

/// Built-in oracle checks at the configured sizes; `passed` is false when
/// any check fails.
pub fn cmd_selfcheck(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    std::fs::create_dir_all(out)?;
    let grid = cfg.grid()?;
    let n = cfg.particles;
    let seed = cfg.seed_spec();
    let picard = cfg.picard.to_config();
    let dt = grid.dt();
    let horizon = grid.horizon();
    let mut rec = Recorder::new(cfg)?;
    let mut rows = Vec::new();
    let mut passed = true;
    let mut check = |rows: &mut Vec<Vec<String>>, name: &str, value: f64, target: f64, tol: f64| {
        let ok = (value - target).abs() <= tol;
        passed &= ok;
        rows.push(vec![name.to_string(), num(value), num(target), num(tol), status(ok)]);
    };

    let started = Instant::now();
    let zero = picard_solve(&ModelId::Zero.build(), cfg.x, &grid, n, &picard, seed)?;
    let (m, se) = mean_and_se(zero.ensemble.terminal());
    check(&mut rows, "zero_drift.mean_T", m, cfg.x, 3.0 * se);
    let v = variance_about(zero.ensemble.terminal(), m);
    check(&mut rows, "zero_drift.variance_T", v, horizon, 3.0 * horizon * (2.0 / n as f64).sqrt());
    rec.push("zero_drift.mean_T", m, se, n, started);

    let (theta, kappa) = (1.0, 0.5);
    let ou = ModelId::Ou { theta, kappa }.build();
    let started = Instant::now();
    let setup = DeltaSetup::prepare(&ou, cfg.x, &grid, n, seed, DeltaOptions { picard: picard.clone(), ..DeltaOptions::default() })?;
    let (m, se) = mean_and_se(setup.result().ensemble.terminal());
    let mean_target = cfg.x * ((kappa - theta) * horizon).exp();
    // Euler bias of the linear mean is below Δ |x| T (κ - θ)².
    let bias = dt * cfg.x.abs() * horizon * (kappa - theta).powi(2);
    check(&mut rows, "ou.mean_T", m, mean_target, 3.0 * se + bias);
    rec.push("ou.mean_T", m, se, n, started);

    let delta_target = ((kappa - theta) * horizon).exp();
    let id: Payoff = PayoffKind::Identity.into();
    let bel = setup.bel(&id, WeightFunction::Uniform)?;
    let front = setup.bel(&id, WeightFunction::FrontLoaded)?;
    let pw = setup.pathwise(&id)?;
    let fd = finite_difference_delta(&ou, cfg.x, 1e-2, &grid, n, seed, &id, &picard)?;
    let slack = dt * horizon * (kappa - theta).powi(2);
    for (name, e) in [("ou.delta.bel", &bel), ("ou.delta.bel_front_loaded", &front), ("ou.delta.pathwise", &pw), ("ou.delta.fd", &fd)] {
        check(&mut rows, name, e.estimate, delta_target, 3.0 * e.std_error + slack);
        rec.push_estimate(name, e, started);
    }
    let flat = setup.bel(&PayoffKind::Constant { value: 1.0 }.into(), WeightFunction::Uniform)?;
    check(&mut rows, "ou.delta.constant_payoff", flat.estimate, 0.0, 3.0 * flat.std_error);

    let frame = DerivativeFrame::new(&ou, setup.result(), Representation::Girsanov)?;
    let (s, u, t) = (0, grid.steps() / 2, grid.steps());
    let (st, su, ut) = (frame.malliavin(s, t)?, frame.malliavin(s, u)?, frame.malliavin(u, t)?);
    let cocycle = st
        .iter()
        .zip(su.iter().zip(&ut))
        .map(|(a, (b, c))| (a - b * c).abs() / a)
        .fold(0.0f64, f64::max);
    check(&mut rows, "malliavin.cocycle_max_rel", cocycle, 0.0, 1e-12);
    let positive = st.iter().all(|&d| d > 0.0);
    check(&mut rows, "malliavin.positive", f64::from(u8::from(positive)), 1.0, 0.0);

    let mut files = vec![write_csv(
        &out.join("selfcheck.csv"),
        &["check", "value", "target", "tolerance", "status"],
        &rows,
    )?];
    files.extend(rec.table.write(out, "selfcheck_results")?);
    Ok(Outcome {
        files,
        table: rec.table,
        passed,
    })
}

/// Maps a library error to the process exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidArgument { .. } | Error::MissingDerivative(_) | Error::MissingDecomposition(_) => 2,
        e if e.is_numerical() => 3,
        _ => 1,
    }
}
