//! Payoff functions `Φ` and their integrability check against
//! `ω_T(y) = exp(-y² / 4T)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Built-in payoffs, as written in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PayoffKind {
    Identity,
    Square,
    /// `max(y - strike, 0)`.
    Call { strike: f64 },
    Constant { value: f64 },
    /// `1{y > strike}`.
    Digital { strike: f64 },
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Inner {
    Builtin(PayoffKind),
    Custom { f: RealFn, df: Option<RealFn> },
}

#[derive(Clone)]
pub struct Payoff {
    label: String,
    inner: Inner,
    /// Declared membership in `L^{2p}(R; ω_T)`.
    weighted_lp: bool,
}

impl fmt::Debug for Payoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Payoff({})", self.label)
    }
}

impl From<PayoffKind> for Payoff {
    fn from(kind: PayoffKind) -> Self {
        Self {
            label: format!("{kind:?}"),
            inner: Inner::Builtin(kind),
            weighted_lp: true,
        }
    }
}

impl Payoff {
    pub fn custom(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: Option<RealFn>,
        weighted_lp: bool,
    ) -> Self {
        Self {
            label: label.into(),
            inner: Inner::Custom {
                f: Arc::new(f),
                df: derivative,
            },
            weighted_lp,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, y: f64) -> f64 {
        match &self.inner {
            Inner::Builtin(kind) => match *kind {
                PayoffKind::Identity => y,
                PayoffKind::Square => y * y,
                PayoffKind::Call { strike } => (y - strike).max(0.0),
                PayoffKind::Constant { value } => value,
                PayoffKind::Digital { strike } => {
                    if y > strike {
                        1.0
                    } else {
                        0.0
                    }
                }
            },
            Inner::Custom { f, .. } => f(y),
        }
    }

    pub fn has_derivative(&self) -> bool {
        match &self.inner {
            Inner::Builtin(PayoffKind::Digital { .. }) => false,
            Inner::Builtin(_) => true,
            Inner::Custom { df, .. } => df.is_some(),
        }
    }

    /// `Φ'(y)` (a.e. derivative for the call).
    pub fn derivative(&self, y: f64) -> Result<f64> {
        let v = match &self.inner {
            Inner::Builtin(kind) => match *kind {
                PayoffKind::Identity => 1.0,
                PayoffKind::Square => 2.0 * y,
                PayoffKind::Call { strike } => {
                    if y > strike {
                        1.0
                    } else {
                        0.0
                    }
                }
                PayoffKind::Constant { .. } => 0.0,
                PayoffKind::Digital { .. } => return Err(Error::MissingDerivative(self.label.clone())),
            },
            Inner::Custom { df: Some(df), .. } => df(y),
            Inner::Custom { df: None, .. } => return Err(Error::MissingDerivative(self.label.clone())),
        };
        Ok(v)
    }

    /// Verifies the declared `L^{2p}(R; ω_T)` tag: `∫ |Φ|^{2p} ω_T` is
    /// computed on `[-L, L]` and `[-2L, 2L]` with `L = 12 √(2T)` and must be
    /// finite and stable under the widening.
    pub fn check_growth(&self, horizon: f64, p: f64) -> Result<f64> {
        if !self.weighted_lp {
            return Err(Error::invalid(
                "payoff",
                format!("`{}` is not declared square integrable against ω_T", self.label),
            ));
        }
        let integrand = |y: f64| self.eval(y).abs().powf(2.0 * p) * (-(y * y) / (4.0 * horizon)).exp();
        let half_width = 12.0 * (2.0 * horizon).sqrt();
        let narrow = simpson(&integrand, -half_width, half_width, 8192);
        let wide = simpson(&integrand, -2.0 * half_width, 2.0 * half_width, 16384);
        if !(narrow.is_finite() && wide.is_finite()) || (wide - narrow).abs() > 1e-6 * wide.abs().max(1e-300) {
            return Err(Error::invalid(
                "payoff",
                format!(
                    "`{}` fails the L^{}(ω_T) check ({narrow:e} vs {wide:e})",
                    self.label,
                    2.0 * p
                ),
            ));
        }
        Ok(wide)
    }
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for j in 1..panels {
        acc += if j % 2 == 1 { 4.0 } else { 2.0 } * f(a + j as f64 * h);
    }
    acc * h / 3.0
}

/// Weight function `a` on `[0, T]` with `∫ a = 1`, and its primitive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightFunction {
    /// `a ≡ 1/T`.
    Uniform,
    /// `a(s) = 2 (T - s) / T²`.
    FrontLoaded,
}

impl WeightFunction {
    pub fn eval(&self, s: f64, horizon: f64) -> f64 {
        match self {
            WeightFunction::Uniform => 1.0 / horizon,
            WeightFunction::FrontLoaded => 2.0 * (horizon - s) / (horizon * horizon),
        }
    }

    /// `A(t) = ∫_0^t a(u) du`, in closed form.
    pub fn primitive(&self, t: f64, horizon: f64) -> f64 {
        match self {
            WeightFunction::Uniform => t / horizon,
            WeightFunction::FrontLoaded => (2.0 * horizon * t - t * t) / (horizon * horizon),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn builtin_values() {
        let call: Payoff = PayoffKind::Call { strike: 0.0 }.into();
        assert_eq!(call.eval(-1.0), 0.0);
        assert_eq!(call.eval(2.0), 2.0);
        assert_eq!(call.derivative(2.0).unwrap(), 1.0);
        let digital: Payoff = PayoffKind::Digital { strike: 0.5 }.into();
        assert!(matches!(digital.derivative(1.0), Err(Error::MissingDerivative(_))));
    }

    #[test]
    fn growth_tags() {
        for kind in [
            PayoffKind::Identity,
            PayoffKind::Square,
            PayoffKind::Call { strike: 0.0 },
            PayoffKind::Digital { strike: 0.0 },
        ] {
            Payoff::from(kind).check_growth(1.0, 2.0).unwrap();
        }
        // ∫ y² ω_1(y) dy = 2√π · 2 = 4√π for p = 1.
        let v = Payoff::from(PayoffKind::Identity).check_growth(1.0, 1.0).unwrap();
        assert!((v - 4.0 * std::f64::consts::PI.sqrt()).abs() < 1e-8);
        let explosive = Payoff::custom("exp(y^2)", |y| (y * y).exp(), None, true);
        assert!(explosive.check_growth(1.0, 1.0).is_err());
        let untagged = Payoff::custom("y", |y| y, None, false);
        assert!(untagged.check_growth(1.0, 1.0).is_err());
    }

    #[test]
    fn weight_functions_integrate_to_one_on_grid() {
        for a in [WeightFunction::Uniform, WeightFunction::FrontLoaded] {
            for (t, m) in [(1.0, 200), (2.5, 7)] {
                let g = make_grid(t, m).unwrap();
                let nodes = g.nodes();
                let trap: f64 = nodes
                    .windows(2)
                    .map(|w| 0.5 * (a.eval(w[0], t) + a.eval(w[1], t)) * (w[1] - w[0]))
                    .sum();
                assert!((trap - 1.0).abs() < 1e-10);
                assert!((a.primitive(t, t) - 1.0).abs() < 1e-15);
                assert_eq!(a.primitive(0.0, t), 0.0);
            }
        }
    }
}
