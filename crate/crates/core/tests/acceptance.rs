//! Acceptance suite: one PASS/FAIL line per criterion.

use std::time::Instant;

use mfsde::cli::{execute, local_time_oracle_error, Command, RunConfig};
use mfsde::drift::{DriftSpec, ModelId};
use mfsde::girsanov::{doleans_weights, reweighted_expectation};
use mfsde::grid::{make_grid, sample_brownian, SeedSpec};
use mfsde::localtime::{check_chain_identity, DerivativeFrame, Representation};
use mfsde::measures::flow_distance;
use mfsde::payoff::{Payoff, PayoffKind, WeightFunction};
use mfsde::sensitivity::{
    finite_difference_delta, law_derivative, mollified_convergence_study, DeltaOptions, DeltaSetup,
};
use mfsde::solver::{direct_particle_solve, picard_solve, InitialFlow, PicardConfig};
use mfsde::stats::{log_log_slope, EstimatorResult};

type Outcome = Result<(bool, String), String>;

const THETA: f64 = 1.0;
const KAPPA: f64 = 0.5;

fn ou() -> DriftSpec {
    ModelId::Ou { theta: THETA, kappa: KAPPA }.build()
}

fn irregular() -> DriftSpec {
    ModelId::Irregular {
        alpha: 0.5,
        theta: 1.0,
        kappa: 0.5,
    }
    .build()
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// `m' = (κ - θ) m`, `m(0) = 1`, by RK4 with `steps` sub-steps.
fn mean_ode_rk4(horizon: f64, steps: usize) -> f64 {
    let f = |m: f64| (KAPPA - THETA) * m;
    let h = horizon / steps as f64;
    let mut m = 1.0;
    for _ in 0..steps {
        let k1 = f(m);
        let k2 = f(m + h / 2.0 * k1);
        let k3 = f(m + h / 2.0 * k2);
        let k4 = f(m + h * k3);
        m += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    m
}

fn fmt(e: &EstimatorResult) -> String {
    format!("{:.5}±{:.5}", e.estimate, e.std_error)
}

fn c1_ou_oracle() -> Outcome {
    let oracle = (KAPPA - THETA).exp();
    let brute = mean_ode_rk4(1.0, 10_000);
    let g = make_grid(1.0, 200).map_err(err)?;
    let started = Instant::now();
    let res = picard_solve(&ou(), 1.0, &g, 100_000, &PicardConfig::default(), SeedSpec::new(2024)).map_err(err)?;
    let secs = started.elapsed().as_secs_f64();
    let est = EstimatorResult::from_samples(res.ensemble.terminal(), 2024);
    let ok = (brute - oracle).abs() < 1e-12 && est.within(oracle, 3.0, 0.0) && secs < 30.0;
    Ok((ok, format!("E[X_T] = {} vs {oracle:.5} (sub-stepped ODE {brute:.12}), {secs:.1}s", fmt(&est))))
}

fn c2_c3_ou_deltas() -> Result<(Outcome, EstimatorResult, EstimatorResult), String> {
    let g = make_grid(1.0, 200).map_err(err)?;
    let seed = SeedSpec::new(77);
    let id: Payoff = PayoffKind::Identity.into();
    let target = (KAPPA - THETA).exp();
    let setup = DeltaSetup::prepare(&ou(), 1.0, &g, 100_000, seed, DeltaOptions::default()).map_err(err)?;
    let bel = setup.bel(&id, WeightFunction::Uniform).map_err(err)?;
    let front = setup.bel(&id, WeightFunction::FrontLoaded).map_err(err)?;
    let pw = setup.pathwise(&id).map_err(err)?;
    drop(setup);
    let h = 1e-2;
    let fd = finite_difference_delta(&ou(), 1.0, h, &g, 100_000, seed, &id, &PicardConfig::default()).map_err(err)?;
    let ok = bel.within(target, 3.0, 0.0) && pw.agrees_with(&bel, 3.0, h * h) && fd.agrees_with(&bel, 3.0, h * h);
    let detail = format!("bel {} pathwise {} fd {} target {target:.5}", fmt(&bel), fmt(&pw), fmt(&fd));
    Ok((Ok((ok, detail)), bel, front))
}

fn c3_invariance(ou_uniform: &EstimatorResult, ou_front: &EstimatorResult) -> Outcome {
    let g = make_grid(1.0, 100).map_err(err)?;
    let call: Payoff = PayoffKind::Call { strike: 0.0 }.into();
    let setup = DeltaSetup::prepare(&irregular(), 0.5, &g, 100_000, SeedSpec::new(78), DeltaOptions::default()).map_err(err)?;
    let uni = setup.bel(&call, WeightFunction::Uniform).map_err(err)?;
    let front = setup.bel(&call, WeightFunction::FrontLoaded).map_err(err)?;
    let ok = ou_uniform.agrees_with(ou_front, 3.0, 0.0) && uni.agrees_with(&front, 3.0, 0.0);
    Ok((
        ok,
        format!(
            "OU uniform {} front-loaded {}; irregular max(y,0) uniform {} front-loaded {}",
            fmt(ou_uniform),
            fmt(ou_front),
            fmt(&uni),
            fmt(&front)
        ),
    ))
}

fn c4_local_time_slope() -> Outcome {
    let steps = [100usize, 200, 400, 800];
    let mut errs = Vec::new();
    for &m in &steps {
        errs.push(local_time_oracle_error(0.0, 1.0, m, 1000, SeedSpec::new(4)).map_err(err)?);
    }
    let dts: Vec<f64> = steps.iter().map(|&m| 1.0 / m as f64).collect();
    let slope = log_log_slope(&dts, &errs);
    let ok = (slope - 0.5).abs() <= 0.15;
    Ok((ok, format!("slope {slope:.3}, RMS errors {errs:.4?}")))
}

fn c5_cocycle() -> Outcome {
    let g = make_grid(1.0, 100).map_err(err)?;
    let mut worst = 0.0f64;
    let mut positive = true;
    for id in ModelId::library() {
        let spec = id.build();
        let res = picard_solve(&spec, 0.5, &g, 10_000, &PicardConfig::default(), SeedSpec::new(5)).map_err(err)?;
        for repr in [Representation::Girsanov, Representation::Strong] {
            let frame = DerivativeFrame::new(&spec, &res, repr).map_err(err)?;
            for (s, u, t) in [(0, 50, 100), (10, 11, 90), (30, 70, 70)] {
                let st = frame.malliavin(s, t).map_err(err)?;
                let su = frame.malliavin(s, u).map_err(err)?;
                let ut = frame.malliavin(u, t).map_err(err)?;
                for i in 0..st.len() {
                    positive &= st[i] > 0.0 && su[i] > 0.0 && ut[i] > 0.0;
                    worst = worst.max((st[i] - ut[i] * su[i]).abs() / st[i]);
                }
            }
        }
    }
    Ok((positive && worst <= 1e-12, format!("max relative cocycle defect {worst:.2e}, all positive: {positive}")))
}

fn c6_chain_identity() -> Outcome {
    let g = make_grid(1.0, 400).map_err(err)?;
    let seed = SeedSpec::new(6);
    let cfg = PicardConfig::default();
    let res = picard_solve(&ou(), 1.0, &g, 10_000, &cfg, seed).map_err(err)?;
    let dxb = law_derivative(&ou(), 1.0, 2e-2, &g, 10_000, &cfg, seed).map_err(err)?;
    let rep = check_chain_identity(&ou(), &res, &dxb, 40, 200, 400).map_err(err)?;
    let bound = 5.0 * g.dt().sqrt();
    Ok((rep.rms <= bound, format!("RMS residual {:.3e} (sub-spans {:.3e}, {:.3e}) vs bound {bound:.3e}", rep.rms, rep.rms_su, rep.rms_ut)))
}

fn c7_girsanov_triangle() -> Outcome {
    let m = 100;
    let n = 100_000;
    let g = make_grid(1.0, m).map_err(err)?;
    let cfg = PicardConfig::default();
    // Allowance for the flow error of the frozen-flow estimators.
    let allowance = cfg.tolerance + g.dt();
    let mut ok = true;
    let mut detail = Vec::new();
    for (label, spec) in [("b", ou()), ("d", irregular())] {
        let picard = picard_solve(&spec, 0.5, &g, n, &cfg, SeedSpec::new(71)).map_err(err)?;
        let direct = direct_particle_solve(&spec, 0.5, &g, n, SeedSpec::new(72)).map_err(err)?;
        let paths = sample_brownian(&g, n, 0.5, SeedSpec::new(73)).map_err(err)?;
        let w = doleans_weights(&spec, &picard.flow, &paths).map_err(err)?;
        let wm = EstimatorResult::from_samples(&w.values, 73);
        ok &= wm.within(1.0, 3.0, 0.0);
        detail.push(format!("({label}) E[w] {}", fmt(&wm)));
        for kind in [PayoffKind::Identity, PayoffKind::Call { strike: 0.0 }] {
            let phi: Payoff = kind.into();
            let plug = |xs: &[f64]| EstimatorResult::from_samples(&xs.iter().map(|&y| phi.eval(y)).collect::<Vec<_>>(), 0);
            let (p, d) = (plug(picard.ensemble.terminal()), plug(direct.ensemble.terminal()));
            let r = reweighted_expectation(&spec, &picard.flow, &paths, &phi, 73).map_err(err)?;
            let agree = r.agrees_with(&p, 3.0, allowance) && r.agrees_with(&d, 3.0, allowance) && p.agrees_with(&d, 3.0, allowance);
            ok &= agree;
            detail.push(format!("({label}) {}: reweighted {} picard {} direct {}", phi.label(), fmt(&r), fmt(&p), fmt(&d)));
        }
    }
    Ok((ok, detail.join("; ")))
}

fn c8_uniqueness() -> Outcome {
    let g = make_grid(1.0, 100).map_err(err)?;
    let tol = 1e-3;
    let mut worst = 0.0f64;
    let mut names = Vec::new();
    for id in ModelId::library() {
        let spec = id.build();
        if spec.regularity().law_lipschitz.is_none() {
            continue;
        }
        let solve = |initial| {
            let cfg = PicardConfig {
                tolerance: tol,
                max_iterations: 50,
                initial,
            };
            picard_solve(&spec, 0.5, &g, 20_000, &cfg, SeedSpec::new(8))
        };
        let a = solve(InitialFlow::DiracAtX).map_err(err)?;
        let b = solve(InitialFlow::BrownianLaw).map_err(err)?;
        worst = worst.max(flow_distance(&a.flow, &b.flow).map_err(err)?);
        names.push(spec.label().to_string());
    }
    Ok((worst <= 2.0 * tol, format!("max sup-K {worst:.2e} over {}", names.join(", "))))
}

fn c9_mollification() -> Outcome {
    let g = make_grid(1.0, 100).map_err(err)?;
    let r = mollified_convergence_study(&irregular(), 0.0, &g, 100_000, SeedSpec::new(9), &[4, 16, 64, 256], &PicardConfig::default())
        .map_err(err)?;
    let values: Vec<String> = r.rows.iter().map(|row| format!("n={}: {}", row.n, fmt(&row.mean_square))).collect();
    Ok((r.monotone, format!("{}; fitted rate {:.3}", values.join(", "), r.rate)))
}

fn c10_determinism() -> Outcome {
    let max = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let text = r#"
x = 1.0
horizon = 1.0
steps = 50
particles = 4000
seed = 10
[model]
name = "irregular"
alpha = 0.5
theta = 1.0
kappa = 0.5
[simulate]
methods = ["picard", "direct"]
[delta]
estimators = ["bel", "pathwise", "fd"]
[delta.payoff]
kind = "call"
strike = 0.0
"#;
    let cfg = RunConfig::from_toml(text).map_err(err)?;
    let root = tempfile::tempdir().map_err(err)?;
    let mut reference: Option<Vec<(String, Vec<u8>)>> = None;
    let mut identical = true;
    for workers in [1, 2, max] {
        let dir = root.path().join(format!("w{workers}"));
        let mut files = Vec::new();
        for cmd in [Command::Simulate, Command::Delta] {
            let out = execute(cmd, &cfg, &dir, Some(workers)).map_err(err)?;
            for f in out.files {
                let name = f.file_name().unwrap().to_string_lossy().to_string();
                if !name.ends_with("_timings.csv") {
                    files.push((name, std::fs::read(&f).map_err(err)?));
                }
            }
        }
        match &reference {
            None => reference = Some(files),
            Some(r) => identical &= *r == files,
        }
    }
    let ns = [2_000usize, 4_000, 8_000, 16_000, 32_000];
    let g = make_grid(1.0, 50).map_err(err)?;
    let mut ses = Vec::new();
    for &n in &ns {
        let res = picard_solve(&ou(), 1.0, &g, n, &PicardConfig::default(), SeedSpec::new(n as u64)).map_err(err)?;
        ses.push(EstimatorResult::from_samples(res.ensemble.terminal(), 0).std_error);
    }
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let slope = log_log_slope(&xs, &ses);
    let ok = identical && (slope + 0.5).abs() <= 0.1;
    Ok((ok, format!("byte-identical across workers {{1, 2, {max}}}: {identical}; SE slope {slope:.3}")))
}

fn report(id: usize, outcome: Outcome, started: Instant, failures: &mut usize) {
    let secs = started.elapsed().as_secs_f64();
    match outcome {
        Ok((true, detail)) => println!("criterion {id:>2} PASS ({secs:.1}s): {detail}"),
        Ok((false, detail)) => {
            *failures += 1;
            println!("criterion {id:>2} FAIL ({secs:.1}s): {detail}");
        }
        Err(e) => {
            *failures += 1;
            println!("criterion {id:>2} FAIL ({secs:.1}s): error: {e}");
        }
    }
}

fn main() {
    // `cargo test -- --list` and filters from other targets should not run the suite.
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        return;
    }
    let mut failures = 0;
    let t = Instant::now();
    report(1, c1_ou_oracle(), t, &mut failures);
    let t = Instant::now();
    let (ou_uniform, ou_front) = match c2_c3_ou_deltas() {
        Ok((outcome, uni, front)) => {
            report(2, outcome, t, &mut failures);
            (Some(uni), Some(front))
        }
        Err(e) => {
            report(2, Err(e), t, &mut failures);
            (None, None)
        }
    };
    let t = Instant::now();
    let c3 = match (&ou_uniform, &ou_front) {
        (Some(u), Some(f)) => c3_invariance(u, f),
        _ => Err("OU deltas unavailable".into()),
    };
    report(3, c3, t, &mut failures);
    let t = Instant::now();
    report(4, c4_local_time_slope(), t, &mut failures);
    let t = Instant::now();
    report(5, c5_cocycle(), t, &mut failures);
    let t = Instant::now();
    report(6, c6_chain_identity(), t, &mut failures);
    let t = Instant::now();
    report(7, c7_girsanov_triangle(), t, &mut failures);
    let t = Instant::now();
    report(8, c8_uniqueness(), t, &mut failures);
    let t = Instant::now();
    report(9, c9_mollification(), t, &mut failures);
    let t = Instant::now();
    report(10, c10_determinism(), t, &mut failures);
    println!("acceptance: {} of 10 criteria passed", 10 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
