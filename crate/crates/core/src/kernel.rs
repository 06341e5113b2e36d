//! The α-stable heat kernel `ρ_α(x,t) = F⁻¹(e^{−t|ξ|^α})` and its tail.
//!
//! Radially, `ρ` is a one-dimensional oscillatory integral:
//!
//! * 1D: `(1/π) ∫₀^∞ cos(rs) e^{−t s^α} ds`
//! * 2D: `(1/2π) ∫₀^∞ s J₀(rs) e^{−t s^α} ds`
//!
//! The head up to the first zero of the oscillating factor is integrated
//! adaptively (it holds the `s^α` cusp at the origin). The remainder is split
//! at consecutive zeros into sign-alternating pieces; their partial sums are
//! extrapolated with Wynn's epsilon algorithm unless the envelope has already
//! died out.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::{j0, j0_zero};
use crate::error::{Error, Result};
use crate::fit::{fit_power_law, LineFit};
use crate::quadrature::{integrate, wynn_epsilon, Estimate};

/// Declared absolute tolerance of a kernel evaluation.
pub const KERNEL_ABS_TOL: f64 = 1e-10;
/// Relative tolerance, which governs far in the tail where values drop
/// below the absolute tolerance.
pub const KERNEL_REL_TOL: f64 = 1e-9;

const MAX_PIECES: usize = 200_000;
const WINDOW: usize = 24;

fn check_args(alpha: f64, dim: usize) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::InvalidParameter(format!(
            "kernel alpha must lie in (0,2), got {alpha}"
        )));
    }
    if dim != 1 && dim != 2 {
        return Err(Error::InvalidParameter(format!("kernel dim must be 1 or 2, got {dim}")));
    }
    Ok(())
}

/// `ρ_α(r, t)` for a radius `r ≥ 0` and time `t > 0`.
pub fn kernel_value(alpha: f64, dim: usize, r: f64, t: f64) -> Result<Estimate> {
    check_args(alpha, dim)?;
    if !(r >= 0.0) || !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("need r >= 0 and t > 0, got r = {r}, t = {t}")));
    }
    let fail = |detail: String| Error::Quadrature { r, detail };
    let decay = move |s: f64| (-t * s.powf(alpha)).exp();
    // e^{-t s^α} < 1e-20 beyond this point
    let s_cut = (46.0 / t).powf(1.0 / alpha);
    let norm = if dim == 1 { 1.0 / PI } else { 0.5 / PI };

    if r == 0.0 {
        let est = if dim == 1 {
            integrate(decay, 0.0, s_cut, 1e-3 * KERNEL_ABS_TOL, 1e-13, 4000)
        } else {
            integrate(move |s| s * decay(s), 0.0, s_cut, 1e-3 * KERNEL_ABS_TOL, 1e-13, 4000)
        }
        .map_err(fail)?;
        return Ok(Estimate {
            value: norm * est.value,
            abs_err: norm * est.abs_err,
        });
    }

    let integrand = move |s: f64| {
        if dim == 1 {
            (r * s).cos() * decay(s)
        } else {
            s * j0(r * s) * decay(s)
        }
    };
    // zeros of the oscillating factor, in s
    let node = move |k: usize| {
        if dim == 1 {
            (k as f64 - 0.5) * PI / r
        } else {
            j0_zero(k) / r
        }
    };
    // bound on |integrand| past s
    let envelope = move |s: f64| {
        if dim == 1 {
            decay(s)
        } else {
            s * decay(s) * (2.0 / (PI * r * s)).sqrt().min(1.0)
        }
    };

    let piece_tol = 1e-4 * KERNEL_ABS_TOL;
    let head = integrate(integrand, 0.0, node(1), piece_tol, 1e-13, 4000).map_err(fail)?;
    let mut sum = head.value;
    let mut quad_err = head.abs_err;
    let mut sums = vec![sum];
    let mut magnitude = head.value.abs();
    let mut last_extrapolated: Option<f64> = None;
    let mut lo = node(1);
    for k in 1..=MAX_PIECES {
        let hi = node(k + 1);
        let piece = integrate(integrand, lo, hi, piece_tol, 1e-13, 400).map_err(fail)?;
        sum += piece.value;
        quad_err += piece.abs_err;
        magnitude = magnitude.max(piece.value.abs());
        sums.push(sum);
        lo = hi;

        let tol = KERNEL_ABS_TOL.min(KERNEL_REL_TOL * sum.abs());
        let roundoff = 64.0 * f64::EPSILON * magnitude;
        let target = tol.max(roundoff);

        // direct convergence: whatever is left is below target
        let remainder = envelope(hi) * (hi - node(k)) * 4.0;
        if remainder < 1e-2 * target || hi > s_cut {
            return Ok(Estimate {
                value: norm * sum,
                abs_err: norm * (quad_err + remainder + roundoff),
            });
        }

        if sums.len() >= 8 && k % 2 == 0 {
            let window = &sums[sums.len().saturating_sub(WINDOW)..];
            let est = wynn_epsilon(window);
            if let Some(prev) = last_extrapolated {
                let diff = (est - prev).abs();
                if diff < 0.1 * target {
                    return Ok(Estimate {
                        value: norm * est,
                        abs_err: norm * (quad_err + diff + roundoff),
                    });
                }
            }
            last_extrapolated = Some(est);
        }
    }
    Err(fail(format!("no convergence after {MAX_PIECES} half-periods")))
}

/// Radial samples of the `t = 1` kernel profile `p_α`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelProfile {
    pub alpha: f64,
    pub dim: usize,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub abs_err: Vec<f64>,
    /// Fitted `c_α` over the outer decade of the sampled range.
    pub tail_constant: f64,
    /// Fitted tail exponent over the same window.
    pub tail_exponent: f64,
}

/// Tail power law `p(r) ≈ constant · r^{−exponent}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailLaw {
    pub exponent: f64,
    pub constant: f64,
    pub r_squared: f64,
}

impl From<LineFit> for TailLaw {
    fn from(f: LineFit) -> Self {
        Self {
            exponent: -f.slope,
            constant: f.intercept.exp(),
            r_squared: f.r_squared,
        }
    }
}

/// Samples `p_α` at `n_samples` log-spaced radii in `[r_max·1e-5, r_max]`
/// (at least from 1e-3 when `r_max` is large).
pub fn eval_kernel_profile(alpha: f64, dim: usize, r_max: f64, n_samples: usize) -> Result<KernelProfile> {
    check_args(alpha, dim)?;
    if !(r_max > 0.0) || n_samples < 2 {
        return Err(Error::InvalidParameter(format!(
            "need r_max > 0 and n_samples >= 2, got {r_max}, {n_samples}"
        )));
    }
    let r_min = (r_max * 1e-5).min(1e-3);
    let ratio = (r_max / r_min).ln() / (n_samples - 1) as f64;
    let radii: Vec<f64> = (0..n_samples)
        .map(|i| {
            if i + 1 == n_samples {
                r_max
            } else {
                r_min * (ratio * i as f64).exp()
            }
        })
        .collect();
    let estimates = radii
        .par_iter()
        .map(|&r| kernel_value(alpha, dim, r, 1.0))
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = estimates.iter().map(|e| e.value).collect();
    let abs_err = estimates.iter().map(|e| e.abs_err).collect();
    let mut profile = KernelProfile {
        alpha,
        dim,
        radii,
        values,
        abs_err,
        tail_constant: f64::NAN,
        tail_exponent: f64::NAN,
    };
    if let Ok(tail) = fit_tail(&profile, 0.1 * r_max, r_max) {
        profile.tail_constant = tail.constant;
        profile.tail_exponent = tail.exponent;
    }
    Ok(profile)
}

/// Least-squares fit of `log p` against `log r` on `[r_lo, r_hi]`.
pub fn fit_tail(profile: &KernelProfile, r_lo: f64, r_hi: f64) -> Result<TailLaw> {
    if !(r_lo < r_hi) {
        return Err(Error::InvalidParameter(format!("empty tail window [{r_lo}, {r_hi}]")));
    }
    Ok(fit_power_law(&profile.radii, &profile.values, r_lo, r_hi, 8)?.into())
}

/// Tail exponent of `|f'(r)|` on `[r_lo, r_hi]` from a fourth-order central
/// difference whose step scales with `r`, sampled at `n` log-spaced radii.
pub fn gradient_tail_exponent(
    f: impl Fn(f64) -> Result<f64> + Sync,
    r_lo: f64,
    r_hi: f64,
    n: usize,
) -> Result<TailLaw> {
    if !(r_lo > 0.0 && r_lo < r_hi) {
        return Err(Error::InvalidParameter(format!("bad window [{r_lo}, {r_hi}]")));
    }
    if n < 8 {
        return Err(Error::TooFewSamples { need: 8, got: n });
    }
    let ratio = (r_hi / r_lo).ln() / (n - 1) as f64;
    let radii: Vec<f64> = (0..n).map(|i| r_lo * (ratio * i as f64).exp()).collect();
    let slopes = radii
        .par_iter()
        .map(|&r| {
            let h = 1e-2 * r;
            let d = (-f(r + 2.0 * h)? + 8.0 * f(r + h)? - 8.0 * f(r - h)? + f(r - 2.0 * h)?) / (12.0 * h);
            Ok(d.abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(fit_power_law(&radii, &slopes, r_lo, r_hi, 8)?.into())
}

/// Tail exponent of `|∇p_α|` over `window`, expected to be `d + α + 1`.
pub fn kernel_gradient_tail(alpha: f64, dim: usize, window: (f64, f64)) -> Result<f64> {
    check_args(alpha, dim)?;
    let law = gradient_tail_exponent(|r| Ok(kernel_value(alpha, dim, r, 1.0)?.value), window.0, window.1, 24)?;
    Ok(law.exponent)
}

impl KernelProfile {
    /// Total mass: trapezoid rule in `log r` over the samples, plus the
    /// innermost disc at the first sample value and the fitted power-law tail
    /// beyond the last radius.
    pub fn total_mass(&self) -> f64 {
        let d = self.dim as i32;
        let measure = if self.dim == 1 { 2.0 } else { 2.0 * PI };
        // integrand in log r: measure · r^d · p(r)
        let g: Vec<f64> = self
            .radii
            .iter()
            .zip(&self.values)
            .map(|(r, p)| measure * r.powi(d) * p)
            .collect();
        let mut mass = 0.0;
        for i in 1..g.len() {
            mass += 0.5 * (g[i] + g[i - 1]) * (self.radii[i] / self.radii[i - 1]).ln();
        }
        let r0 = self.radii[0];
        mass += measure * self.values[0] * r0.powi(d) / f64::from(d);
        let r_end = *self.radii.last().unwrap();
        let excess = self.tail_exponent - f64::from(d);
        if excess > 0.0 {
            mass += measure * self.tail_constant * r_end.powf(-excess) / excess;
        }
        mass
    }

    /// Writes `r,p,abs_err_estimate` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "p", "abs_err_estimate"])?;
        for i in 0..self.radii.len() {
            w.write_record(&[
                format!("{:e}", self.radii[i]),
                format!("{:e}", self.values[i]),
                format!("{:e}", self.abs_err[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
