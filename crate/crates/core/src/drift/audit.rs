//! Randomized audit of declared regularity constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::DriftSpec;
use crate::error::{Error, Result};
use crate::grid::SeedSpec;
use crate::measures::{kantorovich, EmpiricalMeasure};

const ATOMS_PER_MEASURE: usize = 24;
const RELATIVE_SLACK: f64 = 1e-9;
const ABSOLUTE_SLACK: f64 = 1e-12;

/// Worst ratios observed while sampling `(t, y, μ, ν)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub samples: usize,
    /// `max |b| / (1 + |y| + K(μ, δ_0))`, compared with the growth constant.
    pub growth_ratio: f64,
    /// `max |b(μ) - b(ν)| / K(μ, ν)`, compared with the law-Lipschitz constant.
    pub law_ratio: f64,
    /// `max |b̂|`, compared with the declared bound.
    pub bounded_sup: f64,
    /// `max |b - (b̂ + b̃)|`.
    pub decomposition_residual: f64,
    /// `max |b(μ) - b(ν)|² / θ(K(μ,ν)²)`, compared with 1.
    pub modulus_ratio: f64,
    pub violations: Vec<String>,
}

impl RegularityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn exceeds(observed: f64, declared: f64) -> bool {
    observed > declared * (1.0 + RELATIVE_SLACK) + ABSOLUTE_SLACK
}

/// Samples `samples` configurations with `t ∈ [0, horizon]` and reports the
/// worst observed ratio for every declared constant.
///
/// Half of the measure pairs are translates of each other, which makes the
/// law-Lipschitz bound tight for mean-type drifts.
pub fn check_regularity(spec: &DriftSpec, samples: usize, horizon: f64, seed: SeedSpec) -> Result<RegularityReport> {
    if samples == 0 {
        return Err(Error::invalid("samples", "must be at least 1"));
    }
    if !(horizon > 0.0) {
        return Err(Error::invalid("horizon", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.derive(0xA0D1).master);
    let reg = *spec.regularity();
    let model = spec.model();
    let mut report = RegularityReport {
        samples,
        growth_ratio: 0.0,
        law_ratio: 0.0,
        bounded_sup: 0.0,
        decomposition_residual: 0.0,
        modulus_ratio: 0.0,
        violations: Vec::new(),
    };

    for _ in 0..samples {
        let t = rng.gen_range(0.0..=horizon);
        let y = 3.0 * standard_normal(&mut rng);
        let center = 2.0 * standard_normal(&mut rng);
        let scale = rng.gen_range(0.05..2.0);
        let mu_atoms: Vec<f64> = (0..ATOMS_PER_MEASURE)
            .map(|_| center + scale * standard_normal(&mut rng))
            .collect();
        let mu = EmpiricalMeasure::new(mu_atoms)?;
        let nu = if rng.gen_bool(0.5) {
            mu.translate(standard_normal(&mut rng))
        } else {
            let c = 2.0 * standard_normal(&mut rng);
            let s = rng.gen_range(0.05..2.0);
            EmpiricalMeasure::new((0..ATOMS_PER_MEASURE).map(|_| c + s * standard_normal(&mut rng)).collect())?
        };

        let law_mu = spec.summarize(t, &mu);
        let law_nu = spec.summarize(t, &nu);
        let b_mu = spec.eval(t, y, &law_mu);
        let b_nu = spec.eval(t, y, &law_nu);
        if !(b_mu.is_finite() && b_nu.is_finite()) {
            return Err(Error::non_finite(format!("drift `{}` during audit", spec.label())));
        }

        let first_moment = mu.atoms().iter().map(|a| a.abs()).sum::<f64>() / mu.len() as f64;
        report.growth_ratio = report.growth_ratio.max(b_mu.abs() / (1.0 + y.abs() + first_moment));

        let k = kantorovich(&mu, &nu);
        let diff = (b_mu - b_nu).abs();
        if k > 0.0 {
            report.law_ratio = report.law_ratio.max(diff / k);
        }
        if let Some(theta) = reg.modulus {
            let bound = theta.eval(k * k);
            let ratio = if diff == 0.0 {
                0.0
            } else if bound > 0.0 {
                diff * diff / bound
            } else {
                f64::INFINITY
            };
            report.modulus_ratio = report.modulus_ratio.max(ratio);
        }

        if model.decomposable() {
            if let (Some(bh), Some(bt)) = (model.bounded_part(t, y, &law_mu), model.lipschitz_part(t, y, &law_mu)) {
                report.bounded_sup = report.bounded_sup.max(bh.abs());
                report.decomposition_residual = report.decomposition_residual.max((b_mu - bh - bt).abs());
            }
        }
    }

    if exceeds(report.growth_ratio, reg.growth) {
        report.violations.push(format!(
            "linear growth: observed {:.6} > declared {}",
            report.growth_ratio, reg.growth
        ));
    }
    if let Some(c) = reg.law_lipschitz {
        if exceeds(report.law_ratio, c) {
            report
                .violations
                .push(format!("law Lipschitz: observed {:.6} > declared {c}", report.law_ratio));
        }
    }
    if let Some(c) = reg.bounded_sup {
        if exceeds(report.bounded_sup, c) {
            report
                .violations
                .push(format!("bounded part: observed {:.6} > declared {c}", report.bounded_sup));
        }
    }
    if report.decomposition_residual > 1e-12 {
        report.violations.push(format!(
            "decomposition residual {:e} exceeds 1e-12",
            report.decomposition_residual
        ));
    }
    if exceeds(report.modulus_ratio, 1.0) {
        report.violations.push(format!(
            "modulus of continuity: observed ratio {:.6} > 1",
            report.modulus_ratio
        ));
    }
    Ok(report)
}
