//! Doléans-Dade weights `E(∫ b(s, B^x_s, μ_s) dB_s)` along Brownian paths and
//! the estimators built on them.

use rayon::prelude::*;

use crate::drift::DriftSpec;
use crate::error::{Error, Result};
use crate::grid::{PathEnsemble, PathKind, PARTICLE_CHUNK};
use crate::measures::{MeasureFlow, WeightedMeasure};
use crate::payoff::Payoff;
use crate::solver::flow_summaries;
use crate::stats::{pairwise_sum, EstimatorResult};

/// Strictly positive per-path density weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub values: Vec<f64>,
    /// Label of the drift that produced the weights.
    pub drift: String,
}

impl WeightVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_paths(flow: &MeasureFlow, paths: &PathEnsemble) -> Result<()> {
    if paths.kind() != PathKind::Brownian {
        return Err(Error::invalid("paths", "reweighting needs Brownian paths"));
    }
    paths.grid().ensure_same(flow.grid())
}

/// Log-weights `Σ_k b_k ΔB_k - ½ Σ_k b_k² Δ` with left-point drift values.
pub(crate) fn log_weights(spec: &DriftSpec, flow: &MeasureFlow, paths: &PathEnsemble) -> Vec<f64> {
    let grid = *paths.grid();
    let n = paths.particles();
    let dt = grid.dt();
    let summaries = flow_summaries(spec, flow);
    let mut logw = vec![0.0; n];
    for (k, law) in summaries.iter().enumerate().take(grid.steps()) {
        let t = grid.time(k);
        let cur = paths.column(k);
        let next = paths.column(k + 1);
        logw.par_chunks_mut(PARTICLE_CHUNK)
            .zip(cur.par_chunks(PARTICLE_CHUNK))
            .zip(next.par_chunks(PARTICLE_CHUNK))
            .for_each(|((lw, c), nx)| {
                for ((l, &y), &y1) in lw.iter_mut().zip(c).zip(nx) {
                    let b = spec.eval(t, y, law);
                    *l += b * (y1 - y) - 0.5 * b * b * dt;
                }
            });
    }
    logw
}

pub fn doleans_weights(spec: &DriftSpec, flow: &MeasureFlow, paths: &PathEnsemble) -> Result<WeightVector> {
    check_paths(flow, paths)?;
    let values: Vec<f64> = log_weights(spec, flow, paths).into_iter().map(f64::exp).collect();
    if let Some(i) = values.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::non_finite(format!("Doléans weight of path {i}")));
    }
    Ok(WeightVector {
        values,
        drift: spec.label().to_string(),
    })
}

/// Raw estimate `mean(w_i g_i)`, plus the self-normalized
/// `Σ w_i g_i / Σ w_i` with its delta-method standard error.
pub(crate) fn weighted_estimate(weights: &[f64], values: &[f64], seed: u64) -> EstimatorResult {
    let products: Vec<f64> = weights.iter().zip(values).map(|(w, g)| w * g).collect();
    let mut raw = EstimatorResult::from_samples(&products, seed);
    let wsum = pairwise_sum(weights);
    let sn = pairwise_sum(&products) / wsum;
    let resid: Vec<f64> = weights.iter().zip(values).map(|(w, g)| (w * (g - sn)).powi(2)).collect();
    raw.self_normalized = Some((sn, pairwise_sum(&resid).sqrt() / wsum));
    raw
}

/// `E_Q[Φ(B^x_T) E(∫ b dB)]`, the law of the solution under the frozen flow
/// obtained by change of measure.
pub fn reweighted_expectation(
    spec: &DriftSpec,
    flow: &MeasureFlow,
    paths: &PathEnsemble,
    phi: &Payoff,
    seed: u64,
) -> Result<EstimatorResult> {
    let w = doleans_weights(spec, flow, paths)?;
    let payoffs: Vec<f64> = paths.terminal().iter().map(|&y| phi.eval(y)).collect();
    if payoffs.iter().any(|v| !v.is_finite()) {
        return Err(Error::non_finite(format!("payoff `{}`", phi.label())));
    }
    Ok(weighted_estimate(&w.values, &payoffs, seed))
}

/// Empirical `E[w^{1+ε}]`; finite and stable values indicate the reweighting
/// has usable variance.
pub fn epsilon_moment_probe(
    spec: &DriftSpec,
    flow: &MeasureFlow,
    paths: &PathEnsemble,
    eps: f64,
    seed: u64,
) -> Result<EstimatorResult> {
    if !(eps > 0.0) {
        return Err(Error::invalid("eps", "must be positive"));
    }
    check_paths(flow, paths)?;
    let powered: Vec<f64> = log_weights(spec, flow, paths)
        .into_iter()
        .map(|l| ((1.0 + eps) * l).exp())
        .collect();
    Ok(EstimatorResult::from_samples(&powered, seed))
}

/// Weighted empirical law of the paths at node `k`.
pub fn weighted_law_at(paths: &PathEnsemble, weights: &WeightVector, k: usize) -> Result<WeightedMeasure> {
    paths.grid().check_node(k)?;
    WeightedMeasure::new(paths.column(k), &weights.values)
}
