//! Local-time-space integrals `∫_s^t ∫_R f(u, y) L(du, dy)` along a reference
//! path ensemble, computed from the forward/backward Itô decomposition with
//! the time-reversed path `B̂_u = B_{T-u}`, and the Malliavin derivative and
//! first variation built on them.
//!
//! With `ΔW = ΔB̂ + (B̂_u - x)/(T - u) Δ` on reversed nodes, each step
//! `[t_k, t_{k+1}]` contributes
//!
//! ```text
//! forward    f(t_k, B_k) (B_{k+1} - B_k)
//! backward   f(t_{k+1}, B_{k+1}) ((B_k - B_{k+1}) + r_k)
//! correction -f(t_{k+1}, B_{k+1}) r_k,      r_k = (B_{k+1} - x) Δ / t_{k+1}
//! ```
//!
//! Left points on the reversed filtration sit at `T - u = t_{k+1} ≥ Δ`, so
//! the `1/(T - u)` factor is never evaluated at the singular endpoint.

use std::borrow::Cow;

use rayon::prelude::*;

use crate::drift::{DriftSpec, LawSummary};
use crate::error::{Error, Result};
use crate::girsanov::doleans_weights;
use crate::grid::{PathEnsemble, TimeGrid, PARTICLE_CHUNK};
use crate::sensitivity::LawDerivativeEvaluator;
use crate::solver::{flow_summaries, SolveResult};
use crate::stats::pairwise_sum;

/// Largest admissible `|exponent|` before `exp` leaves a safe range.
pub const EXPONENT_LIMIT: f64 = 700.0;

/// Per-particle integral and its three decomposition terms.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeIntegralResult {
    pub s: usize,
    pub t: usize,
    pub forward: Vec<f64>,
    pub backward: Vec<f64>,
    pub correction: Vec<f64>,
    /// `forward + backward + correction`, elementwise.
    pub value: Vec<f64>,
}

#[inline]
fn step_terms(f0: f64, f1: f64, y0: f64, y1: f64, x: f64, t1: f64, dt: f64) -> (f64, f64, f64) {
    let r = (y1 - x) * dt / t1;
    (f0 * (y1 - y0), f1 * ((y0 - y1) + r), -(f1 * r))
}

fn check_span(grid: &TimeGrid, s: usize, t: usize) -> Result<()> {
    grid.check_node(s)?;
    grid.check_node(t)?;
    if s > t {
        return Err(Error::invalid("s", format!("start node {s} exceeds end node {t}")));
    }
    Ok(())
}

fn eval_column<F>(f: &F, k: usize, col: &[f64]) -> Vec<f64>
where
    F: Fn(usize, f64) -> f64 + Sync,
{
    let mut out = vec![0.0; col.len()];
    out.par_chunks_mut(PARTICLE_CHUNK)
        .zip(col.par_chunks(PARTICLE_CHUNK))
        .for_each(|(o, c)| {
            for (o, &y) in o.iter_mut().zip(c) {
                *o = f(k, y);
            }
        });
    out
}

/// `∫_s^t ∫ f(u, y) L^{paths}(du, dy)` for every particle; `f` is called
/// with a grid node index and a state.
pub fn local_time_integral<F>(f: &F, paths: &PathEnsemble, s: usize, t: usize) -> Result<LocalTimeIntegralResult>
where
    F: Fn(usize, f64) -> f64 + Sync,
{
    let grid = *paths.grid();
    check_span(&grid, s, t)?;
    let n = paths.particles();
    let x = paths.initial();
    let dt = grid.dt();
    let mut forward = vec![0.0; n];
    let mut backward = vec![0.0; n];
    let mut correction = vec![0.0; n];
    let mut f_cur = eval_column(f, s, paths.column(s));
    for k in s..t {
        let f_next = eval_column(f, k + 1, paths.column(k + 1));
        let (y0, y1) = (paths.column(k), paths.column(k + 1));
        let t1 = grid.time(k + 1);
        forward
            .par_chunks_mut(PARTICLE_CHUNK)
            .zip(backward.par_chunks_mut(PARTICLE_CHUNK))
            .zip(correction.par_chunks_mut(PARTICLE_CHUNK))
            .enumerate()
            .for_each(|(c, ((fw, bw), co))| {
                let base = c * PARTICLE_CHUNK;
                for j in 0..fw.len() {
                    let i = base + j;
                    let (a, b, d) = step_terms(f_cur[i], f_next[i], y0[i], y1[i], x, t1, dt);
                    fw[j] += a;
                    bw[j] += b;
                    co[j] += d;
                }
            });
        f_cur = f_next;
    }
    let value: Vec<f64> = (0..n).map(|i| forward[i] + backward[i] + correction[i]).collect();
    if let Some(i) = value.iter().position(|v| !v.is_finite()) {
        return Err(Error::non_finite(format!("local-time integral of particle {i}")));
    }
    Ok(LocalTimeIntegralResult {
        s,
        t,
        forward,
        backward,
        correction,
        value,
    })
}

/// Probability space on which derivative functionals are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    /// Brownian paths `B^x` from the solver's own increments, reweighted by
    /// the Doléans density of the driving flow.
    #[default]
    Girsanov,
    /// The solver's Euler paths with unit weights.
    Strong,
}

/// Reference paths, weights and frozen law summaries for one solved run.
#[derive(Debug, Clone)]
pub struct DerivativeFrame<'a> {
    representation: Representation,
    spec: DriftSpec,
    paths: Cow<'a, PathEnsemble>,
    weights: Vec<f64>,
    summaries: Vec<LawSummary>,
}

impl<'a> DerivativeFrame<'a> {
    pub fn new(spec: &DriftSpec, result: &'a SolveResult, representation: Representation) -> Result<Self> {
        let flow = result.driving_flow();
        let summaries = flow_summaries(spec, flow);
        let n = result.particles();
        let (paths, weights) = match representation {
            Representation::Strong => (Cow::Borrowed(&result.ensemble), vec![1.0; n]),
            Representation::Girsanov => {
                let paths = PathEnsemble::brownian_from(&result.increments()?, result.initial());
                let w = doleans_weights(spec, flow, &paths)?;
                (Cow::Owned(paths), w.values)
            }
        };
        Ok(Self {
            representation,
            spec: spec.clone(),
            paths,
            weights,
            summaries,
        })
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn paths(&self) -> &PathEnsemble {
        &self.paths
    }

    pub fn grid(&self) -> &TimeGrid {
        self.paths.grid()
    }

    /// Per-path weights (all ones for the strong representation).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn spec(&self) -> &DriftSpec {
        &self.spec
    }

    /// `b(t_k, y, μ_k)` under the frozen flow.
    pub fn drift(&self, k: usize, y: f64) -> f64 {
        self.spec.eval(self.grid().time(k), y, &self.summaries[k])
    }

    /// `∫_s^t ∫ b L(du, dy)` along the reference paths.
    pub fn drift_integral(&self, s: usize, t: usize) -> Result<LocalTimeIntegralResult> {
        local_time_integral(&|k, y| self.drift(k, y), &self.paths, s, t)
    }

    /// `D_s X_t = exp(-∫_s^t ∫ b L(du, dy))` per path.
    pub fn malliavin(&self, s: usize, t: usize) -> Result<Vec<f64>> {
        let lti = self.drift_integral(s, t)?;
        lti.value
            .iter()
            .map(|&e| {
                if e.abs() > EXPONENT_LIMIT {
                    Err(Error::ExponentOverflow { exponent: -e, node: t })
                } else {
                    Ok((-e).exp())
                }
            })
            .collect()
    }

    /// Single-step exponents `e_k` with `D_{t_k} X_{t_{k+1}} = exp(-e_k)`.
    pub fn step_exponents(&self, k: usize) -> Vec<f64> {
        let grid = *self.grid();
        let (y0, y1) = (self.paths.column(k), self.paths.column(k + 1));
        let (x, t1, dt) = (self.paths.initial(), grid.time(k + 1), grid.dt());
        let mut out = vec![0.0; y0.len()];
        out.par_chunks_mut(PARTICLE_CHUNK).enumerate().for_each(|(c, o)| {
            let base = c * PARTICLE_CHUNK;
            for (j, e) in o.iter_mut().enumerate() {
                let i = base + j;
                let (a, b, d) = step_terms(self.drift(k, y0[i]), self.drift(k + 1, y1[i]), y0[i], y1[i], x, t1, dt);
                *e = a + b + d;
            }
        });
        out
    }

    /// Increments `ΔY - b Δ` of the Brownian motion that drives the
    /// reference paths under their weighted measure.
    pub fn noise(&self, k: usize) -> Vec<f64> {
        let dt = self.grid().dt();
        let (y0, y1) = (self.paths.column(k), self.paths.column(k + 1));
        y0.iter().zip(y1).map(|(&a, &b)| (b - a) - self.drift(k, a) * dt).collect()
    }

    /// Weighted root mean square of per-path values.
    pub fn weighted_rms(&self, values: &[f64]) -> f64 {
        let num: Vec<f64> = self.weights.iter().zip(values).map(|(w, v)| w * v * v).collect();
        (pairwise_sum(&num) / pairwise_sum(&self.weights)).sqrt()
    }

    /// `∂_x X_{t_k}` for all nodes through the one-step recursion
    /// `F_{k+1} = exp(-e_k) (F_k + ∂_x b(t_k, Y_k) Δ)`, `F_0 = 1`.
    pub fn first_variation(&self, dxb: &LawDerivativeEvaluator) -> Result<FirstVariation> {
        let grid = *self.grid();
        let n = self.paths.particles();
        let dt = grid.dt();
        let mut values = Vec::with_capacity(n * grid.len());
        values.resize(n, 1.0);
        for k in 0..grid.steps() {
            let e = self.step_exponents(k);
            let col = self.paths.column(k);
            let base = k * n;
            for i in 0..n {
                if e[i].abs() > EXPONENT_LIMIT {
                    return Err(Error::ExponentOverflow { exponent: -e[i], node: k + 1 });
                }
                let g = dxb.eval(k, col[i]);
                let next = (-e[i]).exp() * (values[base + i] + g * dt);
                values.push(next);
            }
            if let Some(i) = values[base + n..].iter().position(|v| !v.is_finite()) {
                return Err(Error::non_finite(format!("first variation of path {i} at node {}", k + 1)));
            }
        }
        Ok(FirstVariation { grid, n, values })
    }
}

/// `∂_x X_{t_k}` per path, node-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstVariation {
    grid: TimeGrid,
    n: usize,
    values: Vec<f64>,
}

impl FirstVariation {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn particles(&self) -> usize {
        self.n
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.values[k * self.n..(k + 1) * self.n]
    }

    pub fn terminal(&self) -> &[f64] {
        self.column(self.grid.steps())
    }
}

/// `D_s X_t` on the default representation.
pub fn malliavin_derivative(spec: &DriftSpec, result: &SolveResult, s: usize, t: usize) -> Result<Vec<f64>> {
    DerivativeFrame::new(spec, result, Representation::default())?.malliavin(s, t)
}

/// `∂_x X_t` on the default representation.
pub fn first_variation(spec: &DriftSpec, result: &SolveResult, dxb: &LawDerivativeEvaluator) -> Result<FirstVariation> {
    DerivativeFrame::new(spec, result, Representation::default())?.first_variation(dxb)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainIdentityReport {
    pub s: usize,
    pub u: usize,
    pub t: usize,
    /// Residual of the identity on `[s, t]` per path.
    pub residuals: Vec<f64>,
    /// Weighted RMS over `[s, t]`, `[s, u]` and `[u, t]`.
    pub rms: f64,
    pub rms_su: f64,
    pub rms_ut: f64,
    pub max_abs: f64,
}

/// Residuals of `∂_x X_t = D_s X_t ∂_x X_s + ∫_s^t D_r X_t ∂_x b(r, X_r) dr`,
/// with the Malliavin factors computed directly as local-time integrals and
/// the `dr` integral by the trapezoid rule.
pub fn check_chain_identity(
    spec: &DriftSpec,
    result: &SolveResult,
    dxb: &LawDerivativeEvaluator,
    s: usize,
    u: usize,
    t: usize,
) -> Result<ChainIdentityReport> {
    let frame = DerivativeFrame::new(spec, result, Representation::default())?;
    check_chain_identity_in(&frame, dxb, s, u, t)
}

pub fn check_chain_identity_in(
    frame: &DerivativeFrame<'_>,
    dxb: &LawDerivativeEvaluator,
    s: usize,
    u: usize,
    t: usize,
) -> Result<ChainIdentityReport> {
    let grid = *frame.grid();
    check_span(&grid, s, u)?;
    check_span(&grid, u, t)?;
    let fv = frame.first_variation(dxb)?;
    let n = frame.paths().particles();
    let dt = grid.dt();
    let exponents: Vec<Vec<f64>> = (s..t).map(|k| frame.step_exponents(k)).collect();
    let g: Vec<Vec<f64>> = (s..=t)
        .map(|k| frame.paths().column(k).iter().map(|&y| dxb.eval(k, y)).collect())
        .collect();
    let span = |a: usize, b: usize| -> Result<Vec<f64>> {
        // Walk back from b: D_{t_k} X_{t_b} = exp(-Σ_{j=k}^{b-1} e_j).
        let mut cum = vec![0.0; n];
        let mut integral = vec![0.0; n];
        let mut later: Vec<f64> = g[b - s].clone();
        for k in (a..b).rev() {
            for i in 0..n {
                cum[i] += exponents[k - s][i];
                if cum[i].abs() > EXPONENT_LIMIT {
                    return Err(Error::ExponentOverflow { exponent: -cum[i], node: b });
                }
                let cur = (-cum[i]).exp() * g[k - s][i];
                integral[i] += 0.5 * (later[i] + cur) * dt;
                later[i] = cur;
            }
        }
        let (fa, fb) = (fv.column(a), fv.column(b));
        Ok((0..n).map(|i| fb[i] - ((-cum[i]).exp() * fa[i] + integral[i])).collect())
    };
    let residuals = span(s, t)?;
    let rms = frame.weighted_rms(&residuals);
    let rms_su = frame.weighted_rms(&span(s, u)?);
    let rms_ut = frame.weighted_rms(&span(u, t)?);
    let max_abs = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(ChainIdentityReport {
        s,
        u,
        t,
        residuals,
        rms,
        rms_su,
        rms_ut,
        max_abs,
    })
}
