//! Estimators of `∂_x E[Φ(X_T^x)]`: the Bismut-Elworthy-Li weight, the
//! pathwise derivative, and central finite differences, plus the law
//! derivative `∂_x b(s, y, P_{X_s^x})` they need.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::drift::{mollify, DriftSpec, LawSummary};
use crate::error::{Error, Result};
use crate::girsanov::weighted_estimate;
use crate::grid::{SeedSpec, TimeGrid};
use crate::localtime::{DerivativeFrame, Representation, EXPONENT_LIMIT};
use crate::measures::kantorovich;
use crate::payoff::{Payoff, WeightFunction};
use crate::solver::{flow_summaries, picard_solve, PicardConfig, SolveResult};
use crate::stats::{log_log_slope, EstimatorResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    BumpEstimated,
}

type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Source {
    Zero,
    Analytic(SpaceTimeFn),
    Bump {
        spec: DriftSpec,
        h: f64,
        plus: Vec<LawSummary>,
        minus: Vec<LawSummary>,
    },
}

/// `∂_x b(t_k, y, P_{X_{t_k}^x})` on grid nodes, re-evaluated at any `y`.
#[derive(Clone)]
pub struct LawDerivativeEvaluator {
    grid: TimeGrid,
    provenance: Provenance,
    source: Source,
}

impl fmt::Debug for LawDerivativeEvaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = match &self.source {
            Source::Bump { h, .. } => Some(*h),
            _ => None,
        };
        f.debug_struct("LawDerivativeEvaluator")
            .field("provenance", &self.provenance)
            .field("h", &h)
            .finish()
    }
}

impl LawDerivativeEvaluator {
    /// Identically zero (drifts without law dependence).
    pub fn zero(grid: TimeGrid) -> Self {
        Self {
            grid,
            provenance: Provenance::Analytic,
            source: Source::Zero,
        }
    }

    /// From a closed form `(t, y) ↦ ∂_x b`.
    pub fn analytic(grid: TimeGrid, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            grid,
            provenance: Provenance::Analytic,
            source: Source::Analytic(Arc::new(f)),
        }
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Bump size, for bump-estimated evaluators.
    pub fn bump(&self) -> Option<f64> {
        match &self.source {
            Source::Bump { h, .. } => Some(*h),
            _ => None,
        }
    }

    pub fn eval(&self, k: usize, y: f64) -> f64 {
        match &self.source {
            Source::Zero => 0.0,
            Source::Analytic(f) => f(self.grid.time(k), y),
            Source::Bump { spec, h, plus, minus } => {
                let t = self.grid.time(k);
                (spec.eval(t, y, &plus[k]) - spec.eval(t, y, &minus[k])) / (2.0 * h)
            }
        }
    }

    /// Evaluation at an arbitrary time, snapped to the nearest node.
    pub fn eval_at(&self, t: f64, y: f64) -> f64 {
        let k = (t / self.grid.dt()).round().clamp(0.0, self.grid.steps() as f64) as usize;
        self.eval(k, y)
    }
}

pub fn default_bump(x: f64) -> f64 {
    1e-2 * (1.0 + x.abs())
}

/// Central difference of the drift between the Picard flows started at
/// `x ± h`, both driven by the same seed.
pub fn law_derivative(
    spec: &DriftSpec,
    x: f64,
    h: f64,
    grid: &TimeGrid,
    n: usize,
    picard: &PicardConfig,
    seed: SeedSpec,
) -> Result<LawDerivativeEvaluator> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("h", "bump size must be positive"));
    }
    if spec.is_law_free() {
        return Ok(LawDerivativeEvaluator::zero(*grid));
    }
    let summaries = |start: f64| -> Result<Vec<LawSummary>> {
        let res = picard_solve(spec, start, grid, n, picard, seed)?;
        Ok(flow_summaries(spec, &res.flow))
    };
    let plus = summaries(x + h)?;
    let minus = summaries(x - h)?;
    Ok(LawDerivativeEvaluator {
        grid: *grid,
        provenance: Provenance::BumpEstimated,
        source: Source::Bump {
            spec: spec.clone(),
            h,
            plus,
            minus,
        },
    })
}

/// Knobs shared by the delta estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeltaOptions {
    pub weight: WeightFunction,
    pub representation: Representation,
    /// Bump for the law derivative; `None` means `1e-2 (1 + |x|)`.
    pub law_bump: Option<f64>,
    /// Particles for the bumped solves; `None` reuses `N`.
    pub law_particles: Option<usize>,
    /// Standard errors above this are flagged as heavy-tailed.
    pub se_ceiling: f64,
    #[serde(skip)]
    pub picard: PicardConfig,
}

impl Default for DeltaOptions {
    fn default() -> Self {
        Self {
            weight: WeightFunction::Uniform,
            representation: Representation::Girsanov,
            law_bump: None,
            law_particles: None,
            se_ceiling: 1.0,
            picard: PicardConfig::default(),
        }
    }
}

/// A solved run plus its law derivative, shared by the estimators.
#[derive(Debug, Clone)]
pub struct DeltaSetup {
    spec: DriftSpec,
    result: SolveResult,
    dxb: LawDerivativeEvaluator,
    options: DeltaOptions,
}

/// Per-path weights of the BEL estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct BelWeights {
    /// Change-of-measure weight of each reference path.
    pub density: Vec<f64>,
    /// `Σ_k [a(t_k) ∂_x X_{t_k} + ∂_x b(t_k, X_{t_k}) A(t_k)] ΔW_k`.
    pub malliavin: Vec<f64>,
    /// Reference terminal values.
    pub terminal: Vec<f64>,
}

impl BelWeights {
    /// `E[π²]` of the Malliavin weight under the solution's law.
    pub fn second_moment(&self, seed: u64) -> EstimatorResult {
        let v: Vec<f64> = self.density.iter().zip(&self.malliavin).map(|(w, m)| w * m * m).collect();
        EstimatorResult::from_samples(&v, seed)
    }
}

impl DeltaSetup {
    pub fn prepare(spec: &DriftSpec, x: f64, grid: &TimeGrid, n: usize, seed: SeedSpec, options: DeltaOptions) -> Result<Self> {
        options.picard.validate()?;
        let result = picard_solve(spec, x, grid, n, &options.picard, seed)?;
        let h = options.law_bump.unwrap_or_else(|| default_bump(x));
        let dxb = law_derivative(spec, x, h, grid, options.law_particles.unwrap_or(n), &options.picard, seed)?;
        Ok(Self::from_parts(spec, result, dxb, options))
    }

    pub fn from_parts(spec: &DriftSpec, result: SolveResult, dxb: LawDerivativeEvaluator, options: DeltaOptions) -> Self {
        Self {
            spec: spec.clone(),
            result,
            dxb,
            options,
        }
    }

    pub fn result(&self) -> &SolveResult {
        &self.result
    }

    pub fn law_derivative(&self) -> &LawDerivativeEvaluator {
        &self.dxb
    }

    pub fn options(&self) -> &DeltaOptions {
        &self.options
    }

    fn frame(&self) -> Result<DerivativeFrame<'_>> {
        DerivativeFrame::new(&self.spec, &self.result, self.options.representation)
    }

    /// Runs the first-variation recursion, calling `visit(k, F_k, g_k)` for
    /// each step before advancing, and returns `F_M`.
    fn sweep(&self, frame: &DerivativeFrame<'_>, mut visit: impl FnMut(usize, &[f64], &[f64])) -> Result<Vec<f64>> {
        let grid = *frame.grid();
        let n = frame.paths().particles();
        let dt = grid.dt();
        let mut fv = vec![1.0; n];
        for k in 0..grid.steps() {
            let g: Vec<f64> = frame.paths().column(k).iter().map(|&y| self.dxb.eval(k, y)).collect();
            visit(k, &fv, &g);
            let e = frame.step_exponents(k);
            for i in 0..n {
                if e[i].abs() > EXPONENT_LIMIT {
                    return Err(Error::ExponentOverflow { exponent: -e[i], node: k + 1 });
                }
                fv[i] = (-e[i]).exp() * (fv[i] + g[i] * dt);
            }
        }
        if let Some(i) = fv.iter().position(|v| !v.is_finite()) {
            return Err(Error::non_finite(format!("first variation of path {i}")));
        }
        Ok(fv)
    }

    pub fn bel_weights(&self, a: WeightFunction) -> Result<BelWeights> {
        let frame = self.frame()?;
        let grid = *frame.grid();
        let horizon = grid.horizon();
        let n = frame.paths().particles();
        let mut pi = vec![0.0; n];
        self.sweep(&frame, |k, fv, g| {
            let t = grid.time(k);
            let (ak, big_a) = (a.eval(t, horizon), a.primitive(t, horizon));
            let dw = frame.noise(k);
            for i in 0..n {
                pi[i] += (ak * fv[i] + g[i] * big_a) * dw[i];
            }
        })?;
        Ok(BelWeights {
            density: frame.weights().to_vec(),
            malliavin: pi,
            terminal: frame.paths().terminal().to_vec(),
        })
    }

    fn finish(&self, density: &[f64], values: &[f64]) -> EstimatorResult {
        let seed = self.result.seed.master;
        let est = match self.options.representation {
            Representation::Strong => EstimatorResult::from_samples(values, seed),
            Representation::Girsanov => weighted_estimate(density, values, seed),
        };
        est.flag_ceiling(self.options.se_ceiling)
    }

    /// `E[Φ(X_T) Σ_k (a ∂_x X + ∂_x b A) ΔB_k]`.
    pub fn bel(&self, phi: &Payoff, a: WeightFunction) -> Result<EstimatorResult> {
        phi.check_growth(self.result.grid().horizon(), 1.0)?;
        let w = self.bel_weights(a)?;
        let values: Vec<f64> = w.terminal.iter().zip(&w.malliavin).map(|(&y, m)| phi.eval(y) * m).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::non_finite(format!("payoff `{}` on the reference paths", phi.label())));
        }
        Ok(self.finish(&w.density, &values))
    }

    /// `E[Φ'(X_T) ∂_x X_T]`.
    pub fn pathwise(&self, phi: &Payoff) -> Result<EstimatorResult> {
        if !phi.has_derivative() {
            return Err(Error::MissingDerivative(phi.label().to_string()));
        }
        let frame = self.frame()?;
        let fv = self.sweep(&frame, |_, _, _| {})?;
        let values = frame
            .paths()
            .terminal()
            .iter()
            .zip(&fv)
            .map(|(&y, f)| Ok(phi.derivative(y)? * f))
            .collect::<Result<Vec<f64>>>()?;
        Ok(self.finish(frame.weights(), &values))
    }
}

#[allow(clippy::too_many_arguments)]
pub fn bel_delta(
    spec: &DriftSpec,
    x: f64,
    grid: &TimeGrid,
    n: usize,
    seed: SeedSpec,
    phi: &Payoff,
    a: WeightFunction,
    options: &DeltaOptions,
) -> Result<EstimatorResult> {
    DeltaSetup::prepare(spec, x, grid, n, seed, options.clone())?.bel(phi, a)
}

pub fn pathwise_delta(
    spec: &DriftSpec,
    x: f64,
    grid: &TimeGrid,
    n: usize,
    seed: SeedSpec,
    phi: &Payoff,
    options: &DeltaOptions,
) -> Result<EstimatorResult> {
    if !phi.has_derivative() {
        return Err(Error::MissingDerivative(phi.label().to_string()));
    }
    DeltaSetup::prepare(spec, x, grid, n, seed, options.clone())?.pathwise(phi)
}

/// `[Ê Φ(X_T^{x+h}) - Ê Φ(X_T^{x-h})] / 2h` with common random numbers.
#[allow(clippy::too_many_arguments)]
pub fn finite_difference_delta(
    spec: &DriftSpec,
    x: f64,
    h: f64,
    grid: &TimeGrid,
    n: usize,
    seed: SeedSpec,
    phi: &Payoff,
    picard: &PicardConfig,
) -> Result<EstimatorResult> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("h", "bump size must be positive"));
    }
    let up = picard_solve(spec, x + h, grid, n, picard, seed)?;
    let down = picard_solve(spec, x - h, grid, n, picard, seed)?;
    let diffs: Vec<f64> = up
        .ensemble
        .terminal()
        .iter()
        .zip(down.ensemble.terminal())
        .map(|(&a, &b)| (phi.eval(a) - phi.eval(b)) / (2.0 * h))
        .collect();
    if diffs.iter().any(|v| !v.is_finite()) {
        return Err(Error::non_finite(format!("payoff `{}`", phi.label())));
    }
    Ok(EstimatorResult::from_samples(&diffs, seed.master))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MollificationRow {
    pub n: u32,
    /// `Ê|X_T^n - X_T|²` with its standard error.
    pub mean_square: EstimatorResult,
    /// `K(law^n_T, law_T)`.
    pub kantorovich: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MollificationReport {
    pub rows: Vec<MollificationRow>,
    /// Nonincreasing in `n` up to three combined standard errors.
    pub monotone: bool,
    /// Slope of `log Ê|X^n - X|²` against `log(1/n)`.
    pub rate: f64,
}

/// Solves with `mollify(spec, n)` for each `n` under common random numbers
/// and compares terminal values with the unmollified run.
pub fn mollified_convergence_study(
    spec: &DriftSpec,
    x: f64,
    grid: &TimeGrid,
    particles: usize,
    seed: SeedSpec,
    n_list: &[u32],
    picard: &PicardConfig,
) -> Result<MollificationReport> {
    if n_list.is_empty() {
        return Err(Error::invalid("n_list", "needs at least one mollification level"));
    }
    let reference = picard_solve(spec, x, grid, particles, picard, seed)?;
    let target = reference.ensemble.terminal();
    let law = reference.flow.at(grid.steps());
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let smooth = mollify(spec, n)?;
        let res = picard_solve(&smooth, x, grid, particles, picard, seed)?;
        let sq: Vec<f64> = res.ensemble.terminal().iter().zip(target).map(|(a, b)| (a - b).powi(2)).collect();
        rows.push(MollificationRow {
            n,
            mean_square: EstimatorResult::from_samples(&sq, seed.master),
            kantorovich: kantorovich(res.flow.at(grid.steps()), law),
        });
    }
    let monotone = rows
        .windows(2)
        .all(|w| w[1].mean_square.estimate <= w[0].mean_square.estimate + 3.0 * (w[0].mean_square.std_error.powi(2) + w[1].mean_square.std_error.powi(2)).sqrt());
    let positive: Vec<&MollificationRow> = rows.iter().filter(|r| r.mean_square.estimate > 0.0).collect();
    let rate = if positive.len() >= 2 {
        let inv: Vec<f64> = positive.iter().map(|r| 1.0 / r.n as f64).collect();
        let ms: Vec<f64> = positive.iter().map(|r| r.mean_square.estimate).collect();
        log_log_slope(&inv, &ms)
    } else {
        f64::NAN
    };
    Ok(MollificationReport { rows, monotone, rate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::{Functional, ModelId};
    use crate::grid::make_grid;
    use crate::payoff::PayoffKind;

    const THETA: f64 = 1.0;
    const KAPPA: f64 = 0.5;

    fn ou() -> DriftSpec {
        ModelId::Ou { theta: THETA, kappa: KAPPA }.build()
    }

    fn setup(spec: &DriftSpec, m: usize, n: usize, seed: u64, representation: Representation) -> DeltaSetup {
        let g = make_grid(1.0, m).unwrap();
        let options = DeltaOptions {
            representation,
            ..DeltaOptions::default()
        };
        DeltaSetup::prepare(spec, 1.0, &g, n, SeedSpec::new(seed), options).unwrap()
    }

    /// RK4 for `m' = -θm + κ(m² + v)`, `p' = -θp + 2κmp` with
    /// `v(t) = (1 - e^{-2θt}) / 2θ`; returns `(m, p)` on the grid.
    fn square_functional_oracle(x: f64, grid: &TimeGrid) -> Vec<(f64, f64)> {
        let rhs = |t: f64, m: f64, p: f64| {
            let v = (1.0 - (-2.0 * THETA * t).exp()) / (2.0 * THETA);
            (-THETA * m + KAPPA * (m * m + v), -THETA * p + 2.0 * KAPPA * m * p)
        };
        let sub = 20;
        let h = grid.dt() / sub as f64;
        let (mut t, mut m, mut p) = (0.0, x, 1.0);
        let mut out = vec![(m, p)];
        for _ in 0..grid.steps() {
            for _ in 0..sub {
                let k1 = rhs(t, m, p);
                let k2 = rhs(t + h / 2.0, m + h / 2.0 * k1.0, p + h / 2.0 * k1.1);
                let k3 = rhs(t + h / 2.0, m + h / 2.0 * k2.0, p + h / 2.0 * k2.1);
                let k4 = rhs(t + h, m + h * k3.0, p + h * k3.1);
                m += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
                p += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
                t += h;
            }
            out.push((m, p));
        }
        out
    }

    #[test]
    fn law_derivative_examples() {
        let g = make_grid(1.0, 100).unwrap();
        let cfg = PicardConfig::default();
        let seed = SeedSpec::new(11);
        let free = law_derivative(&ModelId::Constant { value: 1.0 }.build(), 1.0, 0.01, &g, 100, &cfg, seed).unwrap();
        assert_eq!(free.eval(50, 0.3), 0.0);
        assert!(law_derivative(&ou(), 1.0, 0.0, &g, 100, &cfg, seed).is_err());

        let d = law_derivative(&ou(), 1.0, default_bump(1.0), &g, 20_000, &cfg, seed).unwrap();
        assert_eq!(d.provenance(), Provenance::BumpEstimated);
        assert!((d.eval(100, -2.0) - KAPPA * (-0.5f64).exp()).abs() < 5e-3, "{}", d.eval(100, 0.0));
        assert_eq!(d.eval_at(0.996, 0.0), d.eval(100, 0.0));

        let sq = ModelId::Expectation {
            theta: THETA,
            kappa: KAPPA,
            functional: Functional::Square,
        }
        .build();
        let d = law_derivative(&sq, 1.0, default_bump(1.0), &g, 20_000, &cfg, seed).unwrap();
        let oracle = square_functional_oracle(1.0, &g);
        for k in [25, 50, 100] {
            let (m, p) = oracle[k];
            let target = 2.0 * KAPPA * m * p;
            assert!((d.eval(k, 0.4) - target).abs() < 0.03 * target.abs().max(0.1), "k={k} {} vs {target}", d.eval(k, 0.4));
        }
    }

    #[test]
    fn zero_drift_examples() {
        let zero = ModelId::Zero.build();
        let s = setup(&zero, 20, 20_000, 12, Representation::Girsanov);
        let id: Payoff = PayoffKind::Identity.into();
        let bel = s.bel(&id, WeightFunction::Uniform).unwrap();
        assert!(bel.within(1.0, 3.0, 0.0), "{bel:?}");
        let flat = s.bel(&PayoffKind::Constant { value: 2.0 }.into(), WeightFunction::Uniform).unwrap();
        assert!(flat.within(0.0, 3.0, 0.0), "{flat:?}");
        let pw = s.pathwise(&id).unwrap();
        assert_eq!((pw.estimate, pw.std_error), (1.0, 0.0));
        let g = make_grid(1.0, 20).unwrap();
        let fd = finite_difference_delta(&zero, 1.0, 0.01, &g, 1000, SeedSpec::new(12), &id, &PicardConfig::default()).unwrap();
        assert!((fd.estimate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ou_estimators_agree_with_closed_form() {
        let target = (KAPPA - THETA).exp();
        let id: Payoff = PayoffKind::Identity.into();
        let g = make_grid(1.0, 100).unwrap();
        // Euler bias at M = 100 is below 3e-3.
        let slack = 3e-3;
        for repr in [Representation::Girsanov, Representation::Strong] {
            let s = setup(&ou(), 100, 20_000, 13, repr);
            let uni = s.bel(&id, WeightFunction::Uniform).unwrap();
            let front = s.bel(&id, WeightFunction::FrontLoaded).unwrap();
            let pw = s.pathwise(&id).unwrap();
            assert!(uni.within(target, 3.0, slack), "{repr:?} {uni:?}");
            assert!(front.within(target, 3.0, slack), "{repr:?} {front:?}");
            assert!(uni.agrees_with(&front, 3.0, 0.0));
            assert!(pw.within(target, 3.0, slack), "{repr:?} {pw:?}");
            let sq = s.pathwise(&PayoffKind::Square.into()).unwrap();
            assert!(sq.within(2.0 * (-1.0f64).exp(), 3.0, 2.0 * slack), "{repr:?} {sq:?}");
        }
        let fd = finite_difference_delta(&ou(), 1.0, 1e-2, &g, 20_000, SeedSpec::new(13), &id, &PicardConfig::default()).unwrap();
        assert!(fd.within(target, 3.0, slack), "{fd:?}");
    }

    #[test]
    fn bel_weight_moment_is_stable() {
        let spec = ModelId::Irregular {
            alpha: 0.5,
            theta: 1.0,
            kappa: 0.5,
        }
        .build();
        let m: Vec<EstimatorResult> = [10_000, 20_000]
            .iter()
            .map(|&n| setup(&spec, 50, n, 14 + n as u64, Representation::Girsanov).bel_weights(WeightFunction::Uniform).unwrap().second_moment(0))
            .collect();
        assert!(m.iter().all(|e| e.estimate.is_finite() && e.estimate > 0.0));
        assert!(m[0].agrees_with(&m[1], 4.0, 0.0), "{m:?}");
    }

    #[test]
    fn flags_and_errors() {
        let s = setup(&ou(), 10, 500, 15, Representation::Strong);
        let digital: Payoff = PayoffKind::Digital { strike: 1.0 }.into();
        assert!(matches!(s.pathwise(&digital), Err(Error::MissingDerivative(_))));
        assert!(s.bel(&digital, WeightFunction::Uniform).is_ok());
        let untagged = Payoff::custom("u", |y| y, None, false);
        assert!(s.bel(&untagged, WeightFunction::Uniform).is_err());
        let tight = DeltaSetup::from_parts(
            &ou(),
            s.result().clone(),
            s.law_derivative().clone(),
            DeltaOptions {
                se_ceiling: 1e-9,
                representation: Representation::Strong,
                ..DeltaOptions::default()
            },
        );
        assert!(tight.bel(&PayoffKind::Identity.into(), WeightFunction::Uniform).unwrap().heavy_tail);
        assert!(!s.bel(&PayoffKind::Identity.into(), WeightFunction::Uniform).unwrap().heavy_tail);
    }

    #[test]
    fn mollification_study() {
        let g = make_grid(1.0, 50).unwrap();
        let cfg = PicardConfig::default();
        let flat = ModelId::Irregular {
            alpha: 0.0,
            theta: 1.0,
            kappa: 0.5,
        }
        .build();
        let r = mollified_convergence_study(&flat, 0.0, &g, 2000, SeedSpec::new(16), &[4, 16], &cfg).unwrap();
        assert!(r.rows.iter().all(|row| row.mean_square.estimate == 0.0 && row.kantorovich == 0.0));

        let irregular = ModelId::Irregular {
            alpha: 0.5,
            theta: 1.0,
            kappa: 0.5,
        }
        .build();
        let r = mollified_convergence_study(&irregular, 0.0, &g, 10_000, SeedSpec::new(16), &[4, 16, 64], &cfg).unwrap();
        assert!(r.monotone, "{r:?}");
        assert!(r.rate.is_finite());
        let rough = DriftSpec::from_fn("rough", |_, y, _| -y, crate::drift::Regularity::lipschitz(1.0, 0.0, None));
        assert!(mollified_convergence_study(&rough, 0.0, &g, 100, SeedSpec::new(16), &[4], &cfg).is_err());
    }
}
