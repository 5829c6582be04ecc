//! Solution laws: Euler-Maruyama under a frozen measure flow, Picard
//! iteration on flows, and the interacting-particle scheme.

use rayon::prelude::*;

use crate::drift::{DriftSpec, LawSummary};
use crate::error::{Error, Result};
use crate::grid::{Increments, PathEnsemble, PathKind, SeedSpec, TimeGrid, PARTICLE_CHUNK};
use crate::measures::{flow_distance, mean_and_moment, MeasureFlow};
use crate::stats::pairwise_sum;

/// States beyond `BLOW_UP_FACTOR * (1 + |x|)` abort the run.
pub const BLOW_UP_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialFlow {
    /// `μ_t = δ_x` for all t.
    DiracAtX,
    /// Empirical law of `x + B_t` under the run's own increments.
    BrownianLaw,
    User(MeasureFlow),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardConfig {
    /// Stopping threshold on `sup_t K(μ^{j+1}_t, μ^j_t)`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub initial: InitialFlow,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-3,
            max_iterations: 50,
            initial: InitialFlow::DiracAtX,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::invalid("tolerance", "must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Picard,
    Direct,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub method: Method,
    /// Solution paths.
    pub ensemble: PathEnsemble,
    /// Empirical law of `ensemble` at every node.
    pub flow: MeasureFlow,
    /// Flow frozen in the drift during the final Euler pass (Picard only;
    /// for the particle scheme it coincides with `flow`).
    driving_flow: Option<MeasureFlow>,
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub seed: SeedSpec,
    /// `max_k E|X_{t_k}|²` of the empirical flow.
    pub max_second_moment: f64,
}

impl SolveResult {
    pub fn grid(&self) -> &TimeGrid {
        self.ensemble.grid()
    }

    pub fn initial(&self) -> f64 {
        self.ensemble.initial()
    }

    pub fn particles(&self) -> usize {
        self.ensemble.particles()
    }

    pub fn driving_flow(&self) -> &MeasureFlow {
        self.driving_flow.as_ref().unwrap_or(&self.flow)
    }

    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }

    /// Increments that drove the run, regenerated from the seed.
    pub fn increments(&self) -> Result<Increments> {
        Increments::generate(self.grid(), self.particles(), self.seed)
    }
}

pub(crate) fn flow_summaries(spec: &DriftSpec, flow: &MeasureFlow) -> Vec<LawSummary> {
    let grid = *flow.grid();
    (0..grid.len())
        .into_par_iter()
        .map(|k| spec.summarize(grid.time(k), flow.at(k)))
        .collect()
}

fn blow_up_bound(x: f64) -> f64 {
    BLOW_UP_FACTOR * (1.0 + x.abs())
}

/// One explicit Euler step for all particles, `next = cur + b Δ + ΔB`.
#[allow(clippy::too_many_arguments)]
fn euler_step(
    spec: &DriftSpec,
    t: f64,
    dt: f64,
    law: &LawSummary,
    cur: &[f64],
    dbs: &[f64],
    next: &mut [f64],
    bound: f64,
) -> std::result::Result<(), (usize, f64)> {
    next.par_chunks_mut(PARTICLE_CHUNK)
        .zip(cur.par_chunks(PARTICLE_CHUNK))
        .zip(dbs.par_chunks(PARTICLE_CHUNK))
        .enumerate()
        .map(|(c, ((out, xs), dbs))| {
            let mut first_bad = None;
            for (j, ((o, &xv), &db)) in out.iter_mut().zip(xs).zip(dbs).enumerate() {
                let v = xv + spec.eval(t, xv, law) * dt + db;
                if first_bad.is_none() && !(v.abs() <= bound) {
                    first_bad = Some((c * PARTICLE_CHUNK + j, v));
                }
                *o = v;
            }
            first_bad
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .next()
        .map_or(Ok(()), Err)
}

/// Euler pass where the law fed to the drift at node `k` is `law_at(k, column_k)`.
fn euler_pass<F>(spec: &DriftSpec, x: f64, inc: &Increments, mut law_at: F) -> Result<PathEnsemble>
where
    F: FnMut(usize, &[f64]) -> LawSummary,
{
    let grid = *inc.grid();
    let n = inc.particles();
    let dt = grid.dt();
    let bound = blow_up_bound(x);
    let mut values = vec![0.0; n * grid.len()];
    values[..n].fill(x);
    for k in 0..grid.steps() {
        let (done, rest) = values.split_at_mut((k + 1) * n);
        let cur = &done[k * n..];
        let law = law_at(k, cur);
        euler_step(spec, grid.time(k), dt, &law, cur, inc.step(k), &mut rest[..n], bound).map_err(
            |(particle, value)| Error::BlowUp {
                particle,
                node: k + 1,
                value,
                bound,
            },
        )?;
    }
    Ok(PathEnsemble::from_raw(PathKind::Solution, grid, x, n, values))
}

fn check_inputs(x: f64, n: usize) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::invalid("x", "initial condition must be finite"));
    }
    if n == 0 {
        return Err(Error::invalid("particles", "must be at least 1"));
    }
    Ok(())
}

fn frozen_pass(spec: &DriftSpec, flow: &MeasureFlow, x: f64, inc: &Increments) -> Result<PathEnsemble> {
    inc.grid().ensure_same(flow.grid())?;
    let summaries = flow_summaries(spec, flow);
    euler_pass(spec, x, inc, |k, _| summaries[k].clone())
}

/// Euler-Maruyama for `dX = b(t, X, μ_t) dt + dB` with the flow held fixed.
pub fn euler_under_flow(
    spec: &DriftSpec,
    flow: &MeasureFlow,
    x: f64,
    grid: &TimeGrid,
    n: usize,
    seed: SeedSpec,
) -> Result<PathEnsemble> {
    check_inputs(x, n)?;
    grid.ensure_same(flow.grid())?;
    let inc = Increments::generate(grid, n, seed)?;
    frozen_pass(spec, flow, x, &inc)
}

fn max_second_moment(flow: &MeasureFlow) -> f64 {
    flow.measures()
        .iter()
        .map(|m| mean_and_moment(m, 2.0).map(|(_, m2)| m2).unwrap_or(f64::NAN))
        .fold(0.0, f64::max)
}

/// Fixed-point iteration `μ^{j+1} = Law(X^{μ^j})` on measure flows, with the
/// same Brownian increments in every iteration.
///
/// Stops when the sup-Kantorovich residual drops below the tolerance. A drift
/// that ignores its law argument makes the map constant, so one pass is exact.
pub fn picard_solve(
    spec: &DriftSpec,
    x: f64,
    grid: &TimeGrid,
    n: usize,
    cfg: &PicardConfig,
    seed: SeedSpec,
) -> Result<SolveResult> {
    check_inputs(x, n)?;
    cfg.validate()?;
    let inc = Increments::generate(grid, n, seed)?;
    let mut driving = match &cfg.initial {
        InitialFlow::DiracAtX => MeasureFlow::dirac(*grid, x, 1)?,
        InitialFlow::BrownianLaw => MeasureFlow::from_ensemble(&PathEnsemble::brownian_from(&inc, x))?,
        InitialFlow::User(flow) => {
            grid.ensure_same(flow.grid())?;
            flow.clone()
        }
    };
    let mut residuals = Vec::new();
    for iteration in 1..=cfg.max_iterations {
        let ensemble = frozen_pass(spec, &driving, x, &inc)?;
        let flow = MeasureFlow::from_ensemble(&ensemble)?;
        let residual = if spec.is_law_free() {
            0.0
        } else {
            flow_distance(&flow, &driving)?
        };
        residuals.push(residual);
        if residual < cfg.tolerance {
            return Ok(SolveResult {
                method: Method::Picard,
                max_second_moment: max_second_moment(&flow),
                ensemble,
                flow,
                driving_flow: Some(driving),
                iterations: iteration,
                residuals,
                seed,
            });
        }
        driving = flow;
    }
    Err(Error::NotConverged { residuals })
}

/// Interacting-particle scheme: the drift at step k sees the current
/// empirical law of the particles.
pub fn direct_particle_solve(spec: &DriftSpec, x: f64, grid: &TimeGrid, n: usize, seed: SeedSpec) -> Result<SolveResult> {
    check_inputs(x, n)?;
    if n < 2 {
        return Err(Error::invalid("particles", "the particle scheme needs at least 2"));
    }
    let inc = Increments::generate(grid, n, seed)?;
    let ensemble = euler_pass(spec, x, &inc, |k, column| spec.summarize_atoms(grid.time(k), column))?;
    let flow = MeasureFlow::from_ensemble(&ensemble)?;
    Ok(SolveResult {
        method: Method::Direct,
        max_second_moment: max_second_moment(&flow),
        ensemble,
        flow,
        driving_flow: None,
        iterations: 1,
        residuals: Vec::new(),
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub p: f64,
    /// `E|X_{t_k}|^p` per node.
    pub moments: Vec<f64>,
    pub max_moment: f64,
    /// Particles whose path leaves the linear-growth envelope.
    pub envelope_violations: usize,
    /// `(particle, node)` pairs where `|b| > C (1 + |X| + K(μ, δ_0))`.
    pub growth_violations: usize,
    pub flagged: bool,
}

/// Empirical p-th moments per node, and an audit of the pathwise envelope
/// `|X_{t_k}| ≤ (|x| + sup|B - x| + C T (1 + sup_j E|X_{t_j}|)) e^{CT}`,
/// which every Euler path obeys when `|b| ≤ C (1 + |y| + K(μ, δ_0))` holds,
/// and of that growth bound itself along the simulated states.
pub fn moment_diagnostics(spec: &DriftSpec, result: &SolveResult, p: f64) -> Result<MomentReport> {
    let moments = result
        .flow
        .measures()
        .iter()
        .map(|m| mean_and_moment(m, p).map(|(_, mp)| mp))
        .collect::<Result<Vec<_>>>()?;
    let max_moment = moments.iter().copied().fold(0.0, f64::max);

    let growth = spec.regularity().growth;
    let grid = *result.grid();
    let x = result.initial();
    let n = result.particles();
    let driving = result.driving_flow();
    let first_moments: Vec<f64> = driving
        .measures()
        .iter()
        .map(|m| pairwise_sum(&m.atoms().iter().map(|a| a.abs()).collect::<Vec<_>>()) / m.len() as f64)
        .collect();
    let growth_violations = if growth.is_finite() {
        let summaries = flow_summaries(spec, driving);
        (0..grid.steps())
            .map(|k| {
                let t = grid.time(k);
                result
                    .ensemble
                    .column(k)
                    .iter()
                    .filter(|&&y| {
                        let bound = growth * (1.0 + y.abs() + first_moments[k]);
                        spec.eval(t, y, &summaries[k]).abs() > bound * (1.0 + 1e-9) + 1e-12
                    })
                    .count()
            })
            .sum()
    } else {
        0
    };
    let envelope_violations = if growth.is_finite() {
        let first_moment = first_moments.iter().copied().fold(0.0, f64::max);
        let ct = growth * grid.horizon();
        let inc = result.increments()?;
        let mut sup_b = vec![0.0_f64; n];
        let mut b = vec![0.0_f64; n];
        let mut sup_x = result.ensemble.column(0).iter().map(|v| v.abs()).collect::<Vec<_>>();
        for k in 0..grid.steps() {
            for ((bi, si), db) in b.iter_mut().zip(sup_b.iter_mut()).zip(inc.step(k)) {
                *bi += db;
                *si = si.max(bi.abs());
            }
            for (s, v) in sup_x.iter_mut().zip(result.ensemble.column(k + 1)) {
                *s = s.max(v.abs());
            }
        }
        sup_x
            .iter()
            .zip(&sup_b)
            .filter(|(sx, sb)| {
                let envelope = (x.abs() + **sb + ct * (1.0 + first_moment)) * ct.exp();
                **sx > envelope * (1.0 + 1e-9)
            })
            .count()
    } else {
        0
    };
    Ok(MomentReport {
        p,
        moments,
        max_moment,
        envelope_violations,
        growth_violations,
        flagged: envelope_violations > 0 || growth_violations > 0,
    })
}
