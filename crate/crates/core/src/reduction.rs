//! Large-time reduction: algebraic tail of the solution, level radii
//! predicted by `u̇ = f(u)` from that tail, and the steady radial family in
//! invariant coordinates `ξ = x e^{−λt}`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::diagnostics::DEFAULT_U_FLOOR;
use crate::error::{Error, Result};
use crate::fit::{fit_line, fit_power_law};
use crate::reaction::ReactionModel;
use crate::spectral::Field;

/// `u(x, t_ref) ≈ k_t |x|^{−exponent}` on an annulus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub k_t: f64,
    pub exponent: f64,
    /// Constant refit with the exponent pinned to `d + α`.
    pub k_pinned: f64,
    pub t_ref: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
    pub samples: usize,
}

/// Pooled log-log fit over grid points with `r_lo ≤ |x − center| ≤ r_hi`.
pub fn fit_tail_constant(field: &Field, alpha: f64, window: (f64, f64), center: [f64; 2]) -> Result<TailFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && lo < hi) {
        return Err(Error::InvalidParameter(format!("bad tail window [{lo}, {hi}]")));
    }
    let grid = field.grid();
    let (mut rs, mut us) = (Vec::new(), Vec::new());
    for (k, &u) in field.values().iter().enumerate() {
        let r = grid.distance(k, center);
        if r < lo || r > hi {
            continue;
        }
        if u <= DEFAULT_U_FLOOR {
            return Err(Error::NonPositive { at: r, value: u });
        }
        rs.push(r);
        us.push(u);
    }
    let line = fit_power_law(&rs, &us, lo, hi, 8)?;
    let pinned = grid.dim() as f64 + alpha;
    let log_k = rs.iter().zip(&us).map(|(r, u)| u.ln() + pinned * r.ln()).sum::<f64>() / rs.len() as f64;
    Ok(TailFit {
        k_t: line.intercept.exp(),
        exponent: -line.slope,
        k_pinned: log_k.exp(),
        t_ref: field.time(),
        window,
        r_squared: line.r_squared,
        samples: line.samples,
    })
}

/// `q_h` at time `t` predicted by running `u̇ = f(u)` pointwise from the tail
/// `u(x, t_ref) = k |x|^{−(d+α)}`: the radius solves
/// `G(h) − G(u(x, t_ref)) = t − t_ref`.
pub fn ode_level_prediction(
    reaction: &ReactionModel,
    tail: &TailFit,
    h: f64,
    alpha: f64,
    dim: usize,
    t: f64,
) -> Result<f64> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::InvalidParameter(format!("level must lie in (0,1), got {h}")));
    }
    if !(tail.k_pinned > 0.0) {
        return Err(Error::InvalidParameter("tail constant must be positive".into()));
    }
    let exponent = dim as f64 + alpha;
    let start = reaction.g_inverse(reaction.g(h)? - (t - tail.t_ref))?;
    if !(start > 0.0) {
        return Err(Error::Degenerate(format!("starting value underflows for t = {t}")));
    }
    let radius = (tail.k_pinned / start).powf(1.0 / exponent);
    let lambda = reaction.kappa() / exponent;
    Ok(radius * (-lambda * t).exp())
}

/// `t → ∞` limit of [`ode_level_prediction`], from `G(u) ≈ ln u/κ + g₀`.
pub fn ode_level_limit(reaction: &ReactionModel, tail: &TailFit, h: f64, alpha: f64, dim: usize) -> Result<f64> {
    let exponent = dim as f64 + alpha;
    let kappa = reaction.kappa();
    let log_q = (tail.k_pinned.ln() - kappa * (reaction.g(h)? - reaction.g_zero() + tail.t_ref)) / exponent;
    Ok(log_q.exp())
}

/// Radial solution of `λ r u′ = −f(u)` with `r^{d+α} u → τ`:
/// `G(u_τ(r)) = ln τ/κ + g₀ − ln(r)/λ`.
#[derive(Clone, Debug)]
pub struct SteadyFamily {
    reaction: ReactionModel,
    lambda: f64,
}

impl SteadyFamily {
    pub fn new(reaction: ReactionModel, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !(reaction.kappa() > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "steady family needs λ > 0 and κ > 0, got λ = {lambda}, κ = {}",
                reaction.kappa()
            )));
        }
        Ok(Self { reaction, lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eval(&self, tau: f64, r: f64) -> Result<f64> {
        if !(tau > 0.0 && r > 0.0) {
            return Err(Error::InvalidParameter(format!("need τ > 0 and r > 0, got {tau}, {r}")));
        }
        let y = tau.ln() / self.reaction.kappa() + self.reaction.g_zero() - r.ln() / self.lambda;
        let u = self.reaction.g_inverse(y)?;
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Degenerate(format!("u_τ({r}) = {u} left (0,1) for τ = {tau}")));
        }
        Ok(u)
    }

    /// `τ` for which `u_τ(r) = u`.
    pub fn tau_through(&self, r: f64, u: f64) -> Result<f64> {
        let kappa = self.reaction.kappa();
        Ok((kappa * (self.reaction.g(u)? - self.reaction.g_zero() + r.ln() / self.lambda)).exp())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyProfile {
    pub tau: f64,
    pub lambda: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn solve_steady_profile(reaction: &ReactionModel, lambda: f64, tau: f64, radii: &[f64]) -> Result<SteadyProfile> {
    let family = SteadyFamily::new(reaction.clone(), lambda)?;
    let values = radii.iter().map(|&r| family.eval(tau, r)).collect::<Result<Vec<_>>>()?;
    Ok(SteadyProfile {
        tau,
        lambda,
        radii: radii.to_vec(),
        values,
    })
}

/// `max |λ r u′ + f(u)|` over `radii`, with `u′` from a fourth-order central
/// difference of the family.
pub fn collocation_residual(family: &SteadyFamily, reaction: &ReactionModel, tau: f64, radii: &[f64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &r in radii {
        let h = 1e-3 * r;
        let u = |x: f64| family.eval(tau, x);
        let du = (u(r - 2.0 * h)? - 8.0 * u(r - h)? + 8.0 * u(r + h)? - u(r + 2.0 * h)?) / (12.0 * h);
        worst = worst.max((family.lambda * r * du + reaction.f(u(r)?)).abs());
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyConvergence {
    pub tau: f64,
    /// Annulus `β ≤ |ξ| ≤ 2β`.
    pub beta: f64,
    /// `(t, sup |u − u_τ|)` over the annulus.
    pub distances: Vec<(f64, f64)>,
    /// Best `τ` fitted separately at each snapshot.
    pub tau_series: Vec<(f64, f64)>,
}

struct AnnulusSample {
    xi: f64,
    u: f64,
}

fn annulus(field: &Field, lambda: f64, beta: f64, center: [f64; 2], containment: f64) -> Result<Vec<AnnulusSample>> {
    let t = field.time();
    let stretch = (lambda * t).exp();
    if 2.0 * beta * stretch > containment {
        return Err(Error::InvalidParameter(format!(
            "annulus reaches |x| = {} at t = {t}, beyond the containment radius {containment}",
            2.0 * beta * stretch
        )));
    }
    let grid = field.grid();
    let out: Vec<AnnulusSample> = field
        .values()
        .iter()
        .enumerate()
        .filter_map(|(k, &u)| {
            let xi = grid.distance(k, center) / stretch;
            (xi >= beta && xi <= 2.0 * beta).then_some(AnnulusSample { xi, u })
        })
        .collect();
    if out.is_empty() {
        return Err(Error::Degenerate(format!("no grid points in the annulus at t = {t}")));
    }
    Ok(out)
}

fn sup_distance(family: &SteadyFamily, tau: f64, pts: &[AnnulusSample]) -> Result<f64> {
    let mut worst = 0.0f64;
    for p in pts {
        worst = worst.max((p.u - family.eval(tau, p.xi)?).abs());
    }
    Ok(worst)
}

/// Minimizes the sup distance over `ln τ` by golden section. Since `u_τ` is
/// pointwise increasing in `τ`, the objective is quasi-convex.
fn best_tau(family: &SteadyFamily, pts: &[AnnulusSample]) -> Result<f64> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        if p.u > 0.0 && p.u < 1.0 {
            let l = family.tau_through(p.xi, p.u)?.ln();
            lo = lo.min(l);
            hi = hi.max(l);
        }
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Degenerate("solution leaves (0,1) on the whole annulus".into()));
    }
    if hi - lo < 1e-14 {
        return Ok(lo.exp());
    }
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let obj = |l: f64| sup_distance(family, l.exp(), pts);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (obj(c)?, obj(d)?);
    for _ in 0..120 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = obj(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = obj(d)?;
        }
        if b - a < 1e-12 {
            break;
        }
    }
    Ok((0.5 * (a + b)).exp())
}

/// Sup distance of each snapshot to the `u_τ` fitted on the last one, over
/// the invariant annulus `β ≤ |ξ| ≤ 2β`.
pub fn steady_convergence_check(
    snapshots: &[Field],
    family: &SteadyFamily,
    beta: f64,
    center: [f64; 2],
    containment: f64,
) -> Result<SteadyConvergence> {
    if snapshots.is_empty() {
        return Err(Error::InvalidParameter("no snapshots to compare".into()));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("annulus radius must be positive, got {beta}")));
    }
    let lambda = family.lambda();
    let per_snapshot = snapshots
        .iter()
        .map(|f| annulus(f, lambda, beta, center, containment))
        .collect::<Result<Vec<_>>>()?;
    let final_pts = per_snapshot.last().expect("nonempty");
    let tau = best_tau(family, final_pts)?;
    let mut distances = Vec::new();
    let mut tau_series = Vec::new();
    for (f, pts) in snapshots.iter().zip(&per_snapshot) {
        distances.push((f.time(), sup_distance(family, tau, pts)?));
        tau_series.push((f.time(), best_tau(family, pts)?));
    }
    Ok(SteadyConvergence {
        tau,
        beta,
        distances,
        tau_series,
    })
}

/// Least-squares slope of `ln distance` against `t`; negative means decay.
pub fn distance_trend(distances: &[(f64, f64)]) -> Result<f64> {
    let ts: Vec<f64> = distances.iter().map(|p| p.0).collect();
    let ls: Vec<f64> = distances.iter().map(|p| p.1.max(f64::MIN_POSITIVE).ln()).collect();
    Ok(fit_line(&ts, &ls)?.slope)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelComparison {
    pub h: f64,
    pub q_h_measured: f64,
    pub q_h_predicted: f64,
    pub rel_err: f64,
}

impl LevelComparison {
    pub fn new(h: f64, measured: f64, predicted: f64) -> Self {
        Self {
            h,
            q_h_measured: measured,
            q_h_predicted: predicted,
            rel_err: (predicted - measured).abs() / measured.abs(),
        }
    }
}

/// `h,q_h_measured,q_h_predicted,rel_err`
pub fn write_comparison_csv<W: Write>(rows: &[LevelComparison], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["h", "q_h_measured", "q_h_predicted", "rel_err"])?;
    for r in rows {
        w.write_record(&[
            format!("{}", r.h),
            format!("{:e}", r.q_h_measured),
            format!("{:e}", r.q_h_predicted),
            format!("{:e}", r.rel_err),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `r,u`
pub fn write_profile_csv<W: Write>(profile: &SteadyProfile, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r", "u"])?;
    for (r, u) in profile.radii.iter().zip(&profile.values) {
        w.write_record(&[format!("{r:e}"), format!("{u:e}")])?;
    }
    w.flush()?;
    Ok(())
}
