//! Drift coefficients `b(t, y, μ)`.
//!
//! A drift consumes the law argument only through a finite summary computed
//! once per time slice ([`DriftModel::summarize`]), so evaluating it for every
//! particle costs O(1) per particle.

mod audit;
pub mod kernel;
mod models;

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::EmpiricalMeasure;
use crate::stats::pairwise_sum;

pub use audit::{check_regularity, RegularityReport};
pub use models::{
    ConstantDrift, ConvolutionDrift, ExpectationDrift, Functional, IrregularDrift, MeanFieldOu, ModelId, ZeroDrift,
};

/// Finite summary of the law argument (means of test functions and similar).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LawSummary(pub Vec<f64>);

impl Deref for LawSummary {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl LawSummary {
    pub fn none() -> Self {
        Self(Vec::new())
    }

    /// Mean of `f` over the atoms.
    pub fn integral(atoms: &[f64], f: impl Fn(f64) -> f64) -> f64 {
        let vals: Vec<f64> = atoms.iter().map(|&a| f(a)).collect();
        pairwise_sum(&vals) / atoms.len() as f64
    }
}

/// A drift coefficient. Implementations must be pure; they are called
/// concurrently from many workers.
pub trait DriftModel: Send + Sync + fmt::Debug {
    fn summarize(&self, t: f64, atoms: &[f64]) -> LawSummary;

    fn eval(&self, t: f64, y: f64, law: &LawSummary) -> f64;

    /// Whether `bounded_part` / `lipschitz_part` are provided.
    fn decomposable(&self) -> bool {
        false
    }

    /// Bounded measurable part `b̂`.
    fn bounded_part(&self, _t: f64, _y: f64, _law: &LawSummary) -> Option<f64> {
        None
    }

    /// Part `b̃` that is Lipschitz in space.
    fn lipschitz_part(&self, _t: f64, _y: f64, _law: &LawSummary) -> Option<f64> {
        None
    }

    /// `∂_y b`, where it exists classically.
    fn space_derivative(&self, _t: f64, _y: f64, _law: &LawSummary) -> Option<f64> {
        None
    }

    /// `b̂` convolved in space with the bump kernel of the given bandwidth.
    fn smoothed_bounded_part(&self, t: f64, y: f64, law: &LawSummary, bandwidth: f64) -> Option<f64> {
        self.bounded_part(t, y, law)?;
        Some(kernel::smooth(
            |z| self.bounded_part(t, z, law).unwrap_or(0.0),
            y,
            bandwidth,
        ))
    }
}

/// Modulus of continuity `θ` in the law argument:
/// `|b(t,y,μ) - b(t,y,ν)|² ≤ θ(K(μ,ν)²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Modulus {
    /// `θ(r) = scale · r`, the Lipschitz case.
    Linear { scale: f64 },
}

impl Modulus {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Modulus::Linear { scale } => scale * r,
        }
    }
}

/// Declared regularity constants of a drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularity {
    /// `C` in `|b| ≤ C (1 + |y| + K(μ, δ_0))`; infinite when there is none.
    pub growth: f64,
    /// `C` in `|b(t,y,μ) - b(t,y,ν)| ≤ C K(μ,ν)`.
    pub law_lipschitz: Option<f64>,
    /// `sup |b̂|` for decomposable drifts.
    pub bounded_sup: Option<f64>,
    pub modulus: Option<Modulus>,
}

impl Regularity {
    /// Lipschitz-in-law drift with the matching linear modulus.
    pub fn lipschitz(growth: f64, law_lipschitz: f64, bounded_sup: Option<f64>) -> Self {
        Self {
            growth,
            law_lipschitz: Some(law_lipschitz),
            bounded_sup,
            modulus: Some(Modulus::Linear {
                scale: law_lipschitz * law_lipschitz,
            }),
        }
    }
}

/// A drift together with its regularity metadata.
#[derive(Clone)]
pub struct DriftSpec {
    label: String,
    model: Arc<dyn DriftModel>,
    regularity: Regularity,
}

impl fmt::Debug for DriftSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DriftSpec")
            .field("label", &self.label)
            .field("regularity", &self.regularity)
            .finish()
    }
}

impl DriftSpec {
    pub fn new(label: impl Into<String>, model: impl DriftModel + 'static, regularity: Regularity) -> Self {
        Self {
            label: label.into(),
            model: Arc::new(model),
            regularity,
        }
    }

    /// Drift given as `f(t, y, mean(μ))`, without decomposition metadata.
    pub fn from_fn(
        label: impl Into<String>,
        f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        regularity: Regularity,
    ) -> Self {
        Self::new(label, FnDrift(Box::new(f)), regularity)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn regularity(&self) -> &Regularity {
        &self.regularity
    }

    pub fn model(&self) -> &dyn DriftModel {
        self.model.as_ref()
    }

    pub fn is_decomposable(&self) -> bool {
        self.model.decomposable()
    }

    /// True when `b` does not depend on its law argument at all.
    pub fn is_law_free(&self) -> bool {
        self.regularity.law_lipschitz == Some(0.0)
    }

    pub fn summarize(&self, t: f64, mu: &EmpiricalMeasure) -> LawSummary {
        self.model.summarize(t, mu.atoms())
    }

    pub fn summarize_atoms(&self, t: f64, atoms: &[f64]) -> LawSummary {
        self.model.summarize(t, atoms)
    }

    #[inline]
    pub fn eval(&self, t: f64, y: f64, law: &LawSummary) -> f64 {
        self.model.eval(t, y, law)
    }

    /// Copy with different declared constants (used to audit misdeclarations).
    pub fn with_regularity(&self, regularity: Regularity) -> Self {
        Self {
            regularity,
            ..self.clone()
        }
    }
}

/// Drift value at `(t, y, μ)`.
pub fn eval_drift(spec: &DriftSpec, t: f64, y: f64, mu: &EmpiricalMeasure) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid("t", format!("time must be finite and non-negative, got {t}")));
    }
    let law = spec.summarize(t, mu);
    let v = spec.eval(t, y, &law);
    if !v.is_finite() {
        return Err(Error::non_finite(format!("drift `{}` at t={t}, y={y}", spec.label)));
    }
    Ok(v)
}

struct FnDrift(Box<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>);

impl fmt::Debug for FnDrift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnDrift")
    }
}

impl DriftModel for FnDrift {
    fn summarize(&self, _t: f64, atoms: &[f64]) -> LawSummary {
        LawSummary(vec![LawSummary::integral(atoms, |a| a)])
    }

    fn eval(&self, t: f64, y: f64, law: &LawSummary) -> f64 {
        (self.0)(t, y, law[0])
    }
}

/// `b̂ * ρ_{1/n}` in space plus the untouched `b̃`.
#[derive(Debug)]
struct Mollified {
    inner: Arc<dyn DriftModel>,
    bandwidth: f64,
}

impl DriftModel for Mollified {
    fn summarize(&self, t: f64, atoms: &[f64]) -> LawSummary {
        self.inner.summarize(t, atoms)
    }

    fn eval(&self, t: f64, y: f64, law: &LawSummary) -> f64 {
        let smooth = self.inner.smoothed_bounded_part(t, y, law, self.bandwidth).unwrap_or(0.0);
        smooth + self.inner.lipschitz_part(t, y, law).unwrap_or(0.0)
    }

    fn decomposable(&self) -> bool {
        true
    }

    fn bounded_part(&self, t: f64, y: f64, law: &LawSummary) -> Option<f64> {
        self.inner.smoothed_bounded_part(t, y, law, self.bandwidth)
    }

    fn lipschitz_part(&self, t: f64, y: f64, law: &LawSummary) -> Option<f64> {
        self.inner.lipschitz_part(t, y, law)
    }
}

/// Approximating drift `b_n`: the bounded part smoothed in space with the
/// bump kernel at bandwidth `1/n`.
///
/// Convolution with a probability kernel cannot increase the sup norm, and
/// the law argument is untouched, so the declared constants carry over.
pub fn mollify(spec: &DriftSpec, n: u32) -> Result<DriftSpec> {
    if n == 0 {
        return Err(Error::invalid("n", "mollification index must be positive"));
    }
    if !spec.is_decomposable() {
        return Err(Error::MissingDecomposition(spec.label.clone()));
    }
    Ok(DriftSpec {
        label: format!("mollified({}, n={n})", spec.label),
        model: Arc::new(Mollified {
            inner: spec.model.clone(),
            bandwidth: 1.0 / n as f64,
        }),
        regularity: spec.regularity,
    })
}
