//! Time integration of `∂t u + Λ^α u = f(u)`.
//!
//! The linear part is diagonal in Fourier space and integrated exactly; the
//! reaction is explicit. With `c = |k|^α` and step `h`:
//!
//! * ETD1: `û ← e^{−ch} û + φ₁ N̂(u)`, `φ₁ = (1 − e^{−ch})/c`
//! * ETDRK2: `â = e^{−ch} û + φ₁ N̂(u)`, then
//!   `û ← â + φ₂ (N̂(a) − N̂(u))`, `φ₂ = (e^{−ch} − 1 + ch)/(c²h)`
//!
//! At `c = 0` the coefficients take their limits `φ₁ = h`, `φ₂ = h/2`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reaction::ReactionModel;
use crate::spectral::{Field, Grid, SpectralOperator};

/// Tolerance of the discrete comparison principle on `[0, 1]`.
pub const COMPARISON_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Scheme {
    Etd1,
    Etdrk2,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ETD1" => Ok(Scheme::Etd1),
            "ETDRK2" => Ok(Scheme::Etdrk2),
            other => Err(Error::InvalidParameter(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: Scheme,
    /// 2/3-rule truncation of the reaction spectrum.
    pub dealias: bool,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            scheme: Scheme::Etdrk2,
            dealias: false,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self, reaction: &ReactionModel) -> Result<()> {
        let limit = if reaction.kappa() > 0.0 {
            0.5 / reaction.kappa()
        } else {
            f64::INFINITY
        };
        if !(self.dt > 0.0 && self.dt <= limit) {
            return Err(Error::InvalidParameter(format!(
                "dt must lie in (0, 0.5/kappa] = (0, {limit}], got {}",
                self.dt
            )));
        }
        Ok(())
    }
}

/// `(1 − e^{−z})/z`.
pub fn phi1(z: f64) -> f64 {
    if z < 1e-4 {
        1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0
    } else {
        -(-z).exp_m1() / z
    }
}

/// `(e^{−z} − 1 + z)/z²`.
pub fn phi2(z: f64) -> f64 {
    if z < 0.1 {
        // Σ (−z)^j / (j+2)!
        let mut term = 0.5;
        let mut acc = 0.0;
        for j in 0..12 {
            acc += term;
            term *= -z / (j as f64 + 3.0);
        }
        acc
    } else {
        ((-z).exp_m1() + z) / (z * z)
    }
}

/// The evolving solution together with its operator and reaction.
#[derive(Clone, Debug)]
pub struct SimulationState {
    pub field: Field,
    pub op: Arc<SpectralOperator>,
    pub reaction: ReactionModel,
    pub step_count: u64,
    /// `λ = κ/(d + α)`.
    pub lambda: f64,
}

impl SimulationState {
    pub fn new(field: Field, op: Arc<SpectralOperator>, reaction: ReactionModel) -> Result<Self> {
        if field.grid() != op.grid() {
            return Err(Error::GridMismatch);
        }
        let lambda = spreading_exponent(&reaction, op.grid().dim(), op.alpha());
        Ok(Self {
            field,
            op,
            reaction,
            step_count: 0,
            lambda,
        })
    }

    pub fn time(&self) -> f64 {
        self.field.time()
    }
}

/// `λ = κ/(d + α)`.
pub fn spreading_exponent(reaction: &ReactionModel, dim: usize, alpha: f64) -> f64 {
    reaction.kappa() / (dim as f64 + alpha)
}

/// Precomputed ETD coefficients for one operator and one step size.
pub struct EtdIntegrator {
    cfg: StepperConfig,
    op: Arc<SpectralOperator>,
    decay: Vec<f64>,
    phi1: Vec<f64>,
    phi2: Vec<f64>,
    keep: Option<Vec<bool>>,
}

impl EtdIntegrator {
    pub fn new(op: Arc<SpectralOperator>, cfg: StepperConfig, reaction: &ReactionModel) -> Result<Self> {
        cfg.validate(reaction)?;
        let h = cfg.dt;
        let mult = op.frac_multiplier();
        let decay = mult.iter().map(|c| (-c * h).exp()).collect();
        let phi1 = mult.iter().map(|c| h * phi1(c * h)).collect();
        let phi2 = mult.iter().map(|c| h * phi2(c * h)).collect();
        let keep = cfg
            .dealias
            .then(|| (0..op.grid().len()).map(|k| op.dealias_keep(k)).collect());
        Ok(Self {
            cfg,
            op,
            decay,
            phi1,
            phi2,
            keep,
        })
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    fn reaction_spectrum(&self, reaction: &ReactionModel, values: &[f64]) -> Vec<Complex64> {
        let nonlin: Vec<f64> = values.iter().map(|&u| reaction.f(u)).collect();
        let mut spec = self.op.forward(&nonlin);
        if let Some(keep) = &self.keep {
            for (c, &k) in spec.iter_mut().zip(keep) {
                if !k {
                    *c = Complex64::default();
                }
            }
        }
        spec
    }

    /// One step; fails with [`Error::Diverged`] if the result is not finite.
    pub fn step(&self, state: &SimulationState) -> Result<SimulationState> {
        if !Arc::ptr_eq(&self.op, &state.op) && self.op.grid() != state.op.grid() {
            return Err(Error::GridMismatch);
        }
        let u = state.field.values();
        let u_hat = self.op.forward(u);
        let n_u = self.reaction_spectrum(&state.reaction, u);
        let mut a_hat: Vec<Complex64> = (0..u_hat.len())
            .map(|k| u_hat[k] * self.decay[k] + n_u[k] * self.phi1[k])
            .collect();
        let next_hat = match self.cfg.scheme {
            Scheme::Etd1 => a_hat,
            Scheme::Etdrk2 => {
                let a = self.op.inverse(a_hat.clone());
                let n_a = self.reaction_spectrum(&state.reaction, &a);
                for k in 0..a_hat.len() {
                    a_hat[k] += (n_a[k] - n_u[k]) * self.phi2[k];
                }
                a_hat
            }
        };
        let values = self.op.inverse(next_hat);
        let step_count = state.step_count + 1;
        let time = state.time() + self.cfg.dt;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                step: step_count,
                time,
                last_good: Box::new(state.field.clone()),
            });
        }
        Ok(SimulationState {
            field: Field::from_raw(*state.field.grid(), values, time),
            op: Arc::clone(&state.op),
            reaction: state.reaction.clone(),
            step_count,
            lambda: state.lambda,
        })
    }
}

/// Single step with freshly computed coefficients.
pub fn step(state: &SimulationState, cfg: &StepperConfig) -> Result<SimulationState> {
    EtdIntegrator::new(Arc::clone(&state.op), *cfg, &state.reaction)?.step(state)
}

/// Front-containment rule: the run halts once `u ≥ level` somewhere at
/// distance `≥ radius` from `center`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Containment {
    pub level: f64,
    pub radius: f64,
    pub center: [f64; 2],
}

impl Containment {
    /// The default rule: level 0.01 may not reach `L/4`.
    pub fn for_grid(grid: &Grid, center: [f64; 2]) -> Self {
        Self {
            level: 0.01,
            radius: 0.25 * grid.length(),
            center,
        }
    }

    pub fn breached(&self, field: &Field) -> bool {
        let grid = field.grid();
        field
            .values()
            .iter()
            .enumerate()
            .any(|(k, &u)| u >= self.level && grid.distance(k, self.center) >= self.radius)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EndTime,
    Containment,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub t_end: f64,
    /// Observer cadence in time units; `None` observes only the first and
    /// last states.
    pub sample_every: Option<f64>,
    pub containment: Option<Containment>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub state: SimulationState,
    pub stop_reason: StopReason,
}

/// Steps `state` up to `t_end`, calling `observer` on the initial state, at
/// every cadence multiple, and on the final state.
pub fn run(
    state: SimulationState,
    integrator: &EtdIntegrator,
    opts: &RunOptions,
    observer: &mut dyn FnMut(&SimulationState) -> Result<()>,
) -> Result<RunOutcome> {
    let dt = integrator.config().dt;
    let remaining = opts.t_end - state.time();
    let n_steps = if remaining <= 0.0 {
        0
    } else {
        (remaining / dt - 1e-9).ceil() as u64
    };
    let every = opts
        .sample_every
        .map(|c| ((c / dt).round() as u64).max(1))
        .unwrap_or(u64::MAX);

    observer(&state)?;
    if let Some(c) = &opts.containment {
        if c.breached(&state.field) {
            return Ok(RunOutcome {
                state,
                stop_reason: StopReason::Containment,
            });
        }
    }
    let mut current = state;
    let mut last_observed = 0;
    for i in 1..=n_steps {
        let next = integrator.step(&current)?;
        if let Some(c) = &opts.containment {
            if c.breached(&next.field) {
                if last_observed != i - 1 {
                    observer(&current)?;
                }
                return Ok(RunOutcome {
                    state: current,
                    stop_reason: StopReason::Containment,
                });
            }
        }
        current = next;
        if i % every == 0 || i == n_steps {
            observer(&current)?;
            last_observed = i;
        }
    }
    Ok(RunOutcome {
        state: current,
        stop_reason: StopReason::EndTime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn setup(alpha: f64, reaction: ReactionModel, init: impl Fn(f64) -> f64) -> SimulationState {
        let grid = Grid::new(1, 32, 2.0 * PI).unwrap();
        let op = Arc::new(SpectralOperator::new(grid, alpha).unwrap());
        let field = Field::from_fn(grid, 0.0, |x| init(x[0])).unwrap();
        SimulationState::new(field, op, reaction).unwrap()
    }

    #[test]
    fn phi_functions_are_continuous() {
        for &z in &[1e-5, 1e-4, 0.05, 0.1, 0.2] {
            let below = phi1(z * (1.0 - 1e-9));
            assert!((phi1(z) - below).abs() < 1e-9);
            let below = phi2(z * (1.0 - 1e-9));
            assert!((phi2(z) - below).abs() < 1e-9);
        }
        assert_eq!(phi1(0.0), 1.0);
        assert_eq!(phi2(0.0), 0.5);
    }

    #[test]
    fn linear_flow_is_exact() {
        let s = setup(1.0, ReactionModel::inert(), |x| (3.0 * x).cos());
        let cfg = StepperConfig {
            dt: 0.37,
            ..Default::default()
        };
        let next = step(&s, &cfg).unwrap();
        let factor = (-3.0f64 * 0.37).exp();
        for (a, b) in next.field.values().iter().zip(s.field.values()) {
            assert!((a - factor * b).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let s = setup(1.3, ReactionModel::logistic(), |_| 0.0);
        let cfg = StepperConfig::default();
        let s = step(&step(&s, &cfg).unwrap(), &cfg).unwrap();
        assert!(s.field.values().iter().all(|&v| v == 0.0));
        assert!((s.time() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn dt_limit_is_enforced() {
        let s = setup(1.0, ReactionModel::logistic(), |_| 0.1);
        let cfg = StepperConfig {
            dt: 0.6,
            ..Default::default()
        };
        assert!(step(&s, &cfg).is_err());
    }

    #[test]
    fn lambda_matches_dimension_and_alpha() {
        let s = setup(1.0, ReactionModel::logistic(), |_| 0.5);
        assert!((s.lambda - 0.5).abs() < 1e-15);
    }

    #[test]
    fn run_to_zero_returns_input() {
        let s = setup(1.0, ReactionModel::logistic(), |x| 0.2 + 0.1 * x.cos());
        let integ = EtdIntegrator::new(Arc::clone(&s.op), StepperConfig::default(), &s.reaction).unwrap();
        let opts = RunOptions {
            t_end: 0.0,
            sample_every: None,
            containment: None,
        };
        let before = s.field.clone();
        let out = run(s, &integ, &opts, &mut |_| Ok(())).unwrap();
        assert_eq!(out.state.field, before);
        assert_eq!(out.stop_reason, StopReason::EndTime);
    }
}
