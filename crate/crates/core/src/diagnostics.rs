//! Comparative derivative ratios along a run and exponential rate fits.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::reaction::ReactionModel;
use crate::spectral::{Field, SpectralOperator};

/// Points with `u ≤ DEFAULT_U_FLOOR` are excluded from the suprema.
pub const DEFAULT_U_FLOOR: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `sup |∇u|/u`
    pub grad_ratio: f64,
    /// `sup |∇²u|_F/u`
    pub hess_ratio: f64,
    /// `sup |Λ^α u|/u`
    pub fraclap_ratio: f64,
    /// Range of `u·(1 + e^{−κt}|x|^{d+α})` over the mask.
    pub band_min: f64,
    pub band_max: f64,
    /// Number of grid points with `u > u_floor`.
    pub unmasked: usize,
}

pub fn measure(
    field: &Field,
    op: &SpectralOperator,
    reaction: &ReactionModel,
    u_floor: f64,
) -> Result<DiagnosticsRecord> {
    measure_about(field, op, reaction, u_floor, [0.0, 0.0])
}

/// As [`measure`], with `|x|` in the band taken from `center`.
pub fn measure_about(
    field: &Field,
    op: &SpectralOperator,
    reaction: &ReactionModel,
    u_floor: f64,
    center: [f64; 2],
) -> Result<DiagnosticsRecord> {
    if !(u_floor > 0.0) {
        return Err(Error::InvalidParameter(format!("u_floor must be positive, got {u_floor}")));
    }
    let norms = op.derivative_norms(field)?;
    let grid = field.grid();
    let t = field.time();
    let exponent = grid.dim() as f64 + op.alpha();
    let damping = (-reaction.kappa() * t).exp();

    let mut rec = DiagnosticsRecord {
        t,
        grad_ratio: 0.0,
        hess_ratio: 0.0,
        fraclap_ratio: 0.0,
        band_min: f64::INFINITY,
        band_max: 0.0,
        unmasked: 0,
    };
    for (k, &u) in field.values().iter().enumerate() {
        if u <= u_floor {
            continue;
        }
        rec.unmasked += 1;
        rec.grad_ratio = rec.grad_ratio.max(norms.grad[k] / u);
        rec.hess_ratio = rec.hess_ratio.max(norms.hess[k] / u);
        rec.fraclap_ratio = rec.fraclap_ratio.max(norms.frac[k].abs() / u);
        let r = grid.distance(k, center);
        let band = u * (1.0 + damping * r.powf(exponent));
        rec.band_min = rec.band_min.min(band);
        rec.band_max = rec.band_max.max(band);
    }
    if rec.unmasked == 0 {
        return Err(Error::Degenerate(format!(
            "u <= {u_floor} everywhere at t = {t}"
        )));
    }
    Ok(rec)
}

/// Log-linear fit of a positive time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Per unit time. For decay fits a positive rate means decay; for growth
    /// fits (spreading) a positive rate means growth.
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

fn fit_log_series(series: &[(f64, f64)], window: (f64, f64)) -> Result<(f64, RateFit)> {
    let (t0, t1) = window;
    if !(t0 < t1) {
        return Err(Error::InvalidParameter(format!("empty window [{t0}, {t1}]")));
    }
    let (mut ts, mut logs) = (Vec::new(), Vec::new());
    for &(t, v) in series {
        if t < t0 || t > t1 {
            continue;
        }
        if !(v > 0.0) {
            return Err(Error::NonPositive { at: t, value: v });
        }
        ts.push(t);
        logs.push(v.ln());
    }
    if ts.len() < 8 {
        return Err(Error::TooFewSamples { need: 8, got: ts.len() });
    }
    let line = fit_line(&ts, &logs)?;
    Ok((
        line.slope,
        RateFit {
            rate: 0.0,
            intercept: line.intercept,
            r_squared: line.r_squared,
            window,
            samples: line.samples,
        },
    ))
}

/// Fits `v ≈ e^{intercept − rate·t}` on `window`; `rate > 0` is decay.
pub fn fit_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
    let (slope, mut fit) = fit_log_series(series, window)?;
    fit.rate = -slope;
    Ok(fit)
}

/// Fits `v ≈ e^{intercept + rate·t}` on `window`; `rate > 0` is growth.
pub fn fit_growth(series: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
    let (slope, mut fit) = fit_log_series(series, window)?;
    fit.rate = slope;
    Ok(fit)
}

pub fn write_diagnostics_csv<W: Write>(records: &[DiagnosticsRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "grad_ratio", "hess_ratio", "fraclap_ratio", "band_min", "band_max"])?;
    for r in records {
        w.write_record(&[
            format!("{}", r.t),
            format!("{:e}", r.grad_ratio),
            format!("{:e}", r.hess_ratio),
            format!("{:e}", r.fraclap_ratio),
            format!("{:e}", r.band_min),
            format!("{:e}", r.band_max),
        ])?;
    }
    w.flush()?;
    Ok(())
}
