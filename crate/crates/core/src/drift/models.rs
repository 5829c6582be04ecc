//! Built-in drift library.

use serde::{Deserialize, Serialize};

use super::{kernel, DriftModel, DriftSpec, LawSummary, Regularity};

#[derive(Debug, Clone, Copy)]
pub struct ZeroDrift;

impl DriftModel for ZeroDrift {
    fn summarize(&self, _t: f64, _atoms: &[f64]) -> LawSummary {
        LawSummary::none()
    }
    fn eval(&self, _t: f64, _y: f64, _law: &LawSummary) -> f64 {
        0.0
    }
    fn decomposable(&self) -> bool {
        true
    }
    fn bounded_part(&self, _t: f64, _y: f64, _law: &LawSummary) -> Option<f64> {
        Some(0.0)
    }
    fn lipschitz_part(&self, _t: f64, _y: f64, _law: &LawSummary) -> Option<f64> {
        Some(0.0)
    }
    fn space_derivative(&self, _t: f64, _y: f64, _law: &LawSummary) -> Option<f64> {
        Some(0.0)
    }
}

/// `b ≡ c`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantDrift {
    pub value: f64,
}

impl DriftModel for ConstantDrift {
    fn summarize(&self, _t: f64, _atoms: &[f64]) -> LawSummary {
        LawSummary::none()
    }
    fn eval(&self, _t: f64, _y: f64, _law: &LawSummary) -> f64 {
        self.value
    }
    fn decomposable(&self) -> bool {
        true
    }
    fn bounded_part(&self, _t: f64, _y: f64, _law: &LawSummary) -> Option<f64> {
        Some(self.value)
    }
    fn lipschitz_part(&self, _t: f64, _y: f64, _law: &LawSummary) -> Option<f64> {
        Some(0.0)
    }
    fn space_derivative(&self, _t: f64, _y: f64, _law: &LawSummary) -> Option<f64> {
        Some(0.0)
    }
    fn smoothed_bounded_part(&self, _t: f64, _y: f64, _law: &LawSummary, _bandwidth: f64) -> Option<f64> {
        Some(self.value)
    }
}

/// Linear mean-field Ornstein-Uhlenbeck drift `-θ y + κ E[μ]`.
#[derive(Debug, Clone, Copy)]
pub struct MeanFieldOu {
    pub theta: f64,
    pub kappa: f64,
}

impl DriftModel for MeanFieldOu {
    fn summarize(&self, _t: f64, atoms: &[f64]) -> LawSummary {
        LawSummary(vec![LawSummary::integral(atoms, |a| a)])
    }
    fn eval(&self, _t: f64, y: f64, law: &LawSummary) -> f64 {
        -self.theta * y + self.kappa * law[0]
    }
    fn decomposable(&self) -> bool {
        true
    }
    fn bounded_part(&self, _t: f64, _y: f64, _law: &LawSummary) -> Option<f64> {
        Some(0.0)
    }
    fn lipschitz_part(&self, t: f64, y: f64, law: &LawSummary) -> Option<f64> {
        Some(self.eval(t, y, law))
    }
    fn space_derivative(&self, _t: f64, _y: f64, _law: &LawSummary) -> Option<f64> {
        Some(-self.theta)
    }
}

/// Convolution drift `∫ A sin(y - z) μ(dz)`.
#[derive(Debug, Clone, Copy)]
pub struct ConvolutionDrift {
    pub amplitude: f64,
}

impl DriftModel for ConvolutionDrift {
    fn summarize(&self, _t: f64, atoms: &[f64]) -> LawSummary {
        LawSummary(vec![
            LawSummary::integral(atoms, f64::cos),
            LawSummary::integral(atoms, f64::sin),
        ])
    }
    fn eval(&self, _t: f64, y: f64, law: &LawSummary) -> f64 {
        // sin(y - z) = sin y cos z - cos y sin z
        let (s, c) = y.sin_cos();
        self.amplitude * (s * law[0] - c * law[1])
    }
    fn decomposable(&self) -> bool {
        true
    }
    fn bounded_part(&self, _t: f64, _y: f64, _law: &LawSummary) -> Option<f64> {
        Some(0.0)
    }
    fn lipschitz_part(&self, t: f64, y: f64, law: &LawSummary) -> Option<f64> {
        Some(self.eval(t, y, law))
    }
    fn space_derivative(&self, _t: f64, y: f64, law: &LawSummary) -> Option<f64> {
        let (s, c) = y.sin_cos();
        Some(self.amplitude * (c * law[0] + s * law[1]))
    }
}

/// `α sign(y) - θ y + κ E[μ]`: a bounded discontinuous part on top of the
/// mean-field OU drift.
#[derive(Debug, Clone, Copy)]
pub struct IrregularDrift {
    pub alpha: f64,
    pub theta: f64,
    pub kappa: f64,
}

fn sign(y: f64) -> f64 {
    if y > 0.0 {
        1.0
    } else if y < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl DriftModel for IrregularDrift {
    fn summarize(&self, _t: f64, atoms: &[f64]) -> LawSummary {
        LawSummary(vec![LawSummary::integral(atoms, |a| a)])
    }
    fn eval(&self, _t: f64, y: f64, law: &LawSummary) -> f64 {
        self.alpha * sign(y) - self.theta * y + self.kappa * law[0]
    }
    fn decomposable(&self) -> bool {
        true
    }
    fn bounded_part(&self, _t: f64, y: f64, _law: &LawSummary) -> Option<f64> {
        Some(self.alpha * sign(y))
    }
    fn lipschitz_part(&self, _t: f64, y: f64, law: &LawSummary) -> Option<f64> {
        Some(-self.theta * y + self.kappa * law[0])
    }
    fn smoothed_bounded_part(&self, _t: f64, y: f64, _law: &LawSummary, bandwidth: f64) -> Option<f64> {
        Some(self.alpha * kernel::smoothed_sign(y, bandwidth))
    }
}

/// Test function `φ` of an expectation-functional drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Functional {
    Identity,
    Square,
    Sine,
    Tanh,
}

impl Functional {
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            Functional::Identity => y,
            Functional::Square => y * y,
            Functional::Sine => y.sin(),
            Functional::Tanh => y.tanh(),
        }
    }

    /// Global Lipschitz constant, if any.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            Functional::Square => None,
            _ => Some(1.0),
        }
    }
}

/// `b̄(t, y, E[φ(X_t)])` with `b̄(t, y, r) = -θ y + κ r`.
#[derive(Debug, Clone, Copy)]
pub struct ExpectationDrift {
    pub theta: f64,
    pub kappa: f64,
    pub functional: Functional,
}

impl DriftModel for ExpectationDrift {
    fn summarize(&self, _t: f64, atoms: &[f64]) -> LawSummary {
        let phi = self.functional;
        LawSummary(vec![LawSummary::integral(atoms, |a| phi.eval(a))])
    }
    fn eval(&self, _t: f64, y: f64, law: &LawSummary) -> f64 {
        -self.theta * y + self.kappa * law[0]
    }
    fn decomposable(&self) -> bool {
        true
    }
    fn bounded_part(&self, _t: f64, _y: f64, _law: &LawSummary) -> Option<f64> {
        Some(0.0)
    }
    fn lipschitz_part(&self, t: f64, y: f64, law: &LawSummary) -> Option<f64> {
        Some(self.eval(t, y, law))
    }
    fn space_derivative(&self, _t: f64, _y: f64, _law: &LawSummary) -> Option<f64> {
        Some(-self.theta)
    }
}

/// Built-in model selector, as written in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelId {
    Zero,
    Constant { value: f64 },
    Ou { theta: f64, kappa: f64 },
    Convolution { amplitude: f64 },
    Irregular { alpha: f64, theta: f64, kappa: f64 },
    Expectation { theta: f64, kappa: f64, functional: Functional },
}

impl ModelId {
    pub fn build(&self) -> DriftSpec {
        match *self {
            ModelId::Zero => DriftSpec::new("zero", ZeroDrift, Regularity::lipschitz(0.0, 0.0, Some(0.0))),
            ModelId::Constant { value } => DriftSpec::new(
                format!("constant(c={value})"),
                ConstantDrift { value },
                Regularity::lipschitz(value.abs(), 0.0, Some(value.abs())),
            ),
            ModelId::Ou { theta, kappa } => DriftSpec::new(
                format!("ou(theta={theta}, kappa={kappa})"),
                MeanFieldOu { theta, kappa },
                Regularity::lipschitz(theta.abs().max(kappa.abs()), kappa.abs(), Some(0.0)),
            ),
            ModelId::Convolution { amplitude } => DriftSpec::new(
                format!("convolution(amplitude={amplitude})"),
                ConvolutionDrift { amplitude },
                Regularity::lipschitz(amplitude.abs(), amplitude.abs(), Some(0.0)),
            ),
            ModelId::Irregular { alpha, theta, kappa } => DriftSpec::new(
                format!("irregular(alpha={alpha}, theta={theta}, kappa={kappa})"),
                IrregularDrift { alpha, theta, kappa },
                Regularity::lipschitz(
                    alpha.abs() + theta.abs().max(kappa.abs()),
                    kappa.abs(),
                    Some(alpha.abs()),
                ),
            ),
            ModelId::Expectation {
                theta,
                kappa,
                functional,
            } => {
                let label = format!("expectation(theta={theta}, kappa={kappa}, phi={functional:?})");
                let model = ExpectationDrift {
                    theta,
                    kappa,
                    functional,
                };
                let regularity = match functional.lipschitz() {
                    // φ(0) = 0 for every built-in, so |E φ| ≤ L E|X| = L K(μ, δ_0).
                    Some(l) => Regularity::lipschitz(theta.abs().max(kappa.abs() * l), kappa.abs() * l, Some(0.0)),
                    None => Regularity {
                        growth: f64::INFINITY,
                        law_lipschitz: None,
                        bounded_sup: Some(0.0),
                        modulus: None,
                    },
                };
                DriftSpec::new(label, model, regularity)
            }
        }
    }

    /// Every built-in model with moderate default parameters.
    pub fn library() -> Vec<ModelId> {
        vec![
            ModelId::Zero,
            ModelId::Constant { value: 0.5 },
            ModelId::Ou { theta: 1.0, kappa: 0.5 },
            ModelId::Convolution { amplitude: 1.0 },
            ModelId::Irregular {
                alpha: 0.5,
                theta: 1.0,
                kappa: 0.5,
            },
            ModelId::Expectation {
                theta: 1.0,
                kappa: 0.5,
                functional: Functional::Sine,
            },
        ]
    }
}
