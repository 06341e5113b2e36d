//! KPP reaction terms `f` together with `f'`, `κ = f'(0)` and the primitive
//! `G = ∫ du/f` that drives the reduced dynamics `u̇ = f(u)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    /// `r u (1 − u)`
    Logistic { rate: f64 },
    /// `r u (1 − u)(1 + a u)`, KPP for `0 ≤ a ≤ 1`
    Cubic { rate: f64, a: f64 },
    Custom { f: ScalarFn, fprime: ScalarFn },
    /// `f ≡ 0`; pure fractional diffusion.
    Inert,
}

/// Serializable description of a built-in model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ReactionSpec {
    Logistic { rate: f64 },
    Cubic { rate: f64, a: f64 },
}

impl ReactionSpec {
    pub fn build(&self) -> Result<ReactionModel> {
        match *self {
            ReactionSpec::Logistic { rate } => ReactionModel::logistic_with_rate(rate),
            ReactionSpec::Cubic { rate, a } => ReactionModel::cubic(rate, a),
        }
    }
}

/// A KPP nonlinearity: `f(0) = f(1) = 0`, `f > 0` on `(0,1)` and
/// `f'(y) < f(y)/y`.
///
/// `G` is anchored at `G(1/2) = 0`. For non-logistic models it is computed by
/// quadrature of `1/f − 1/(κu) − 1/(κ₁(1−u))` (bounded), with the two
/// logarithms added back in closed form; `κ₁ = −f'(1)` must be positive.
#[derive(Clone)]
pub struct ReactionModel {
    name: String,
    kind: Kind,
    kappa: f64,
    kappa_one: f64,
    // lim_{u→0} G(u) − ln(u)/κ
    g_zero: f64,
}

impl fmt::Debug for ReactionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReactionModel")
            .field("name", &self.name)
            .field("kappa", &self.kappa)
            .finish()
    }
}

impl ReactionModel {
    pub fn logistic() -> Self {
        Self::logistic_with_rate(1.0).expect("unit rate is valid")
    }

    pub fn logistic_with_rate(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("logistic rate must be positive, got {rate}")));
        }
        Ok(Self {
            name: "logistic".into(),
            kind: Kind::Logistic { rate },
            kappa: rate,
            kappa_one: rate,
            g_zero: 0.0,
        })
    }

    /// `f ≡ 0`. Not a KPP model: it exists to drive the pure linear flow.
    pub fn inert() -> Self {
        Self {
            name: "inert".into(),
            kind: Kind::Inert,
            kappa: 0.0,
            kappa_one: 0.0,
            g_zero: 0.0,
        }
    }

    pub fn cubic(rate: f64, a: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) || !(0.0..=1.0).contains(&a) {
            return Err(Error::InvalidParameter(format!(
                "cubic model needs rate > 0 and 0 <= a <= 1, got rate = {rate}, a = {a}"
            )));
        }
        Self::finish("cubic".into(), Kind::Cubic { rate, a })
    }

    /// A user-supplied nonlinearity. Checked against the KPP conditions on a
    /// sample of `(0,1)`.
    pub fn custom(
        name: &str,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        fprime: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::finish(
            name.into(),
            Kind::Custom {
                f: Arc::new(f),
                fprime: Arc::new(fprime),
            },
        )
    }

    fn finish(name: String, kind: Kind) -> Result<Self> {
        let mut model = Self {
            name,
            kind,
            kappa: 0.0,
            kappa_one: 0.0,
            g_zero: 0.0,
        };
        model.kappa = model.fprime(0.0);
        model.kappa_one = -model.fprime(1.0);
        model.validate()?;
        if model.kappa_one <= 0.0 {
            return Err(Error::NotKpp {
                name: model.name,
                detail: "f'(1) must be negative for the primitive G to be computed".into(),
            });
        }
        // G(u) - ln(u)/κ → ln(2)/κ - ln(2)/κ₁ + ∫_{1/2}^0 (regular part)
        let r0 = model.regular_integral(0.0)?;
        model.g_zero = std::f64::consts::LN_2 * (1.0 / model.kappa - 1.0 / model.kappa_one) + r0;
        Ok(model)
    }

    /// Checks the KPP conditions at 999 interior samples.
    pub fn validate(&self) -> Result<()> {
        let err = |detail: String| Error::NotKpp {
            name: self.name.clone(),
            detail,
        };
        if self.f(0.0).abs() > 1e-14 || self.f(1.0).abs() > 1e-14 {
            return Err(err("f(0) and f(1) must vanish".into()));
        }
        if !(self.kappa > 0.0) {
            return Err(err(format!("kappa = f'(0) must be positive, got {}", self.kappa)));
        }
        for i in 1..1000 {
            let y = i as f64 / 1000.0;
            let fy = self.f(y);
            if !(fy > 0.0) {
                return Err(err(format!("f({y}) = {fy} is not positive")));
            }
            if !(self.fprime(y) < fy / y + 1e-12) {
                return Err(err(format!("f'({y}) >= f({y})/{y}")));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn spec(&self) -> Option<ReactionSpec> {
        match self.kind {
            Kind::Logistic { rate } => Some(ReactionSpec::Logistic { rate }),
            Kind::Cubic { rate, a } => Some(ReactionSpec::Cubic { rate, a }),
            Kind::Custom { .. } | Kind::Inert => None,
        }
    }

    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Logistic { rate } => rate * u * (1.0 - u),
            Kind::Cubic { rate, a } => rate * u * (1.0 - u) * (1.0 + a * u),
            Kind::Custom { f, .. } => f(u),
            Kind::Inert => 0.0,
        }
    }

    pub fn fprime(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Logistic { rate } => rate * (1.0 - 2.0 * u),
            Kind::Cubic { rate, a } => rate * ((1.0 - 2.0 * u) * (1.0 + a * u) + a * u * (1.0 - u)),
            Kind::Custom { fprime, .. } => fprime(u),
            Kind::Inert => 0.0,
        }
    }

    fn regular_integral(&self, u: f64) -> Result<f64> {
        let (k0, k1) = (self.kappa, self.kappa_one);
        let reg = |v: f64| {
            if v <= 0.0 || v >= 1.0 {
                return 0.0;
            }
            1.0 / self.f(v) - 1.0 / (k0 * v) - 1.0 / (k1 * (1.0 - v))
        };
        integrate(reg, 0.5, u, 1e-14, 1e-13, 2000)
            .map(|e| e.value)
            .map_err(|detail| Error::Degenerate(format!("primitive of 1/f at u = {u}: {detail}")))
    }

    /// `G(u) = ∫_{1/2}^u dv / f(v)` for `u ∈ (0,1)`.
    pub fn g(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::InvalidParameter(format!("G is defined on (0,1), got {u}")));
        }
        match self.kind {
            Kind::Logistic { rate } => Ok((u / (1.0 - u)).ln() / rate),
            Kind::Inert => Err(Error::NotKpp {
                name: self.name.clone(),
                detail: "G is undefined for f = 0".into(),
            }),
            _ => {
                let logs = (2.0 * u).ln() / self.kappa - (2.0 * (1.0 - u)).ln() / self.kappa_one;
                Ok(logs + self.regular_integral(u)?)
            }
        }
    }

    /// `lim_{u→0} (G(u) − ln(u)/κ)`.
    pub fn g_zero(&self) -> f64 {
        self.g_zero
    }

    /// Solves `G(u) = y` for `u ∈ (0,1)`.
    pub fn g_inverse(&self, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::InvalidParameter(format!("G⁻¹ of non-finite {y}")));
        }
        if let Kind::Logistic { rate } = self.kind {
            // u/(1-u) = e^{rate y}
            let z = rate * y;
            return Ok(if z >= 0.0 {
                1.0 / (1.0 + (-z).exp())
            } else {
                let e = z.exp();
                e / (1.0 + e)
            });
        }
        // Newton in logit space, z = ln(u/(1-u)), safeguarded by bisection.
        let to_u = |z: f64| 1.0 / (1.0 + (-z).exp());
        let (mut lo, mut hi) = (-745.0f64, 37.0f64);
        let mut z = (self.kappa * y).clamp(lo, hi);
        for _ in 0..200 {
            let u = to_u(z);
            if u <= 0.0 || u >= 1.0 {
                z = 0.5 * (lo + hi);
                continue;
            }
            let resid = self.g(u)? - y;
            if resid > 0.0 {
                hi = z;
            } else {
                lo = z;
            }
            // dG/dz = (1/f)·u(1-u)
            let slope = u * (1.0 - u) / self.f(u);
            let mut next = z - resid / slope;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - z).abs() < 1e-15 * (1.0 + z.abs()) {
                return Ok(to_u(next));
            }
            z = next;
        }
        Ok(to_u(z))
    }
}
