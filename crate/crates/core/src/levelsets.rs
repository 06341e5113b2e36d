//! Radial extraction of level sets `{u = h}` and the normalized radius
//! `q_h = r_mean e^{−λt}`.
//!
//! Rays are cast from a center and sampled every quarter cell with periodic
//! (bi)linear interpolation; the front on each ray is its outermost crossing.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{fit_growth, RateFit};
use crate::error::{Error, Result};
use crate::spectral::{Field, Grid};

pub const DEFAULT_RAYS: usize = 360;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSetSample {
    pub h: f64,
    pub t: f64,
    /// `(θ, r)` per ray; in 1D the rays are `θ = 0` (right) and `θ = π` (left).
    pub rays: Vec<(f64, f64)>,
    pub r_min: f64,
    pub r_max: f64,
    pub r_mean: f64,
    /// `r_mean e^{−λt}`
    pub q_h: f64,
    /// `r_max / r_min`
    pub oscillation: f64,
}

/// Periodic linear (1D) or bilinear (2D) interpolation of grid samples.
pub fn interpolate(field: &Field, x: [f64; 2]) -> f64 {
    let grid = field.grid();
    let n = grid.n();
    let h = grid.spacing();
    let locate = |c: f64| {
        let s = (c + 0.5 * grid.length()) / h;
        let i = s.floor();
        let frac = s - i;
        let i = (i as i64).rem_euclid(n as i64) as usize;
        (i, (i + 1) % n, frac)
    };
    let v = field.values();
    let (i0, i1, fx) = locate(x[0]);
    if grid.dim() == 1 {
        return v[i0] * (1.0 - fx) + v[i1] * fx;
    }
    let (j0, j1, fy) = locate(x[1]);
    let at = |i: usize, j: usize| v[i * n + j];
    (1.0 - fx) * ((1.0 - fy) * at(i0, j0) + fy * at(i0, j1)) + fx * ((1.0 - fy) * at(i1, j0) + fy * at(i1, j1))
}

/// Center of mass of `u` (unwrapped coordinates).
pub fn centroid(field: &Field) -> [f64; 2] {
    let grid = field.grid();
    let (mut m, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for (k, &u) in field.values().iter().enumerate() {
        let w = u.max(0.0);
        let p = grid.point(k);
        m += w;
        cx += w * p[0];
        cy += w * p[1];
    }
    if m > 0.0 {
        [cx / m, cy / m]
    } else {
        [0.0, 0.0]
    }
}

fn ray_angles(grid: &Grid, n_rays: usize) -> Vec<f64> {
    if grid.dim() == 1 {
        vec![0.0, PI]
    } else {
        (0..n_rays).map(|i| 2.0 * PI * i as f64 / n_rays as f64).collect()
    }
}

fn ray_crossing(field: &Field, h: f64, center: [f64; 2], theta: f64) -> std::result::Result<f64, String> {
    let grid = field.grid();
    let step = 0.25 * grid.spacing();
    let reach = 0.5 * grid.length();
    let count = (reach / step).floor() as usize;
    let (c, s) = (theta.cos(), theta.sin());
    let sample = |j: usize| {
        let r = j as f64 * step;
        interpolate(field, [center[0] + r * c, center[1] + r * s])
    };
    if sample(count) >= h {
        return Err(format!("front beyond the domain on ray θ = {theta:.4}"));
    }
    // scan inward from the edge for the outermost sample at or above h
    let mut outer = sample(count);
    for j in (0..count).rev() {
        let inner = sample(j);
        if inner >= h {
            let frac = (inner - h) / (inner - outer);
            return Ok((j as f64 + frac) * step);
        }
        outer = inner;
    }
    Err(format!("no crossing on ray θ = {theta:.4}"))
}

/// Level set `{u = h}` of `field` seen from `center`.
pub fn extract_level_set(field: &Field, h: f64, center: [f64; 2], n_rays: usize, lambda: f64) -> Result<LevelSetSample> {
    let err = |detail: String| Error::LevelSet { h, detail };
    if !(h > 0.0 && h < 1.0) {
        return Err(err("level must lie in (0,1)".into()));
    }
    let (lo, hi) = (field.min(), field.max());
    if !(h > lo && h < hi) {
        return Err(err(format!("level outside the range ({lo}, {hi}) of u")));
    }
    let grid = field.grid();
    if grid.dim() == 2 && n_rays < 3 {
        return Err(err(format!("need at least 3 rays, got {n_rays}")));
    }
    let half = 0.5 * grid.length();
    if center.iter().take(grid.dim()).any(|c| c.abs() >= half) {
        return Err(err(format!("center {center:?} outside the grid")));
    }

    let mut rays = Vec::new();
    for theta in ray_angles(grid, n_rays) {
        let r = ray_crossing(field, h, center, theta).map_err(err)?;
        rays.push((theta, r));
    }
    let r_min = rays.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let r_max = rays.iter().map(|p| p.1).fold(0.0, f64::max);
    let r_mean = rays.iter().map(|p| p.1).sum::<f64>() / rays.len() as f64;
    if !(r_min > 0.0) {
        return Err(err("level set passes through the center".into()));
    }
    let t = field.time();
    Ok(LevelSetSample {
        h,
        t,
        rays,
        r_min,
        r_max,
        r_mean,
        q_h: r_mean * (-lambda * t).exp(),
        oscillation: r_max / r_min,
    })
}

/// Exponential growth rate of `r_mean(t)` over `window`.
pub fn spreading_rate(samples: &[LevelSetSample], window: (f64, f64)) -> Result<RateFit> {
    let series: Vec<(f64, f64)> = samples.iter().map(|s| (s.t, s.r_mean)).collect();
    fit_growth(&series, window)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryPoint {
    pub h: f64,
    pub t: f64,
    pub oscillation: f64,
    pub q_h: f64,
}

/// Per-level time series of oscillation and `q_h`, ordered by level then time.
pub fn symmetrization_series(samples: &[LevelSetSample]) -> Vec<SymmetryPoint> {
    let mut groups: BTreeMap<u64, Vec<SymmetryPoint>> = BTreeMap::new();
    for s in samples {
        groups.entry(s.h.to_bits()).or_default().push(SymmetryPoint {
            h: s.h,
            t: s.t,
            oscillation: s.oscillation,
            q_h: s.q_h,
        });
    }
    let mut out: Vec<SymmetryPoint> = groups
        .into_values()
        .flat_map(|mut g| {
            g.sort_by(|a, b| a.t.total_cmp(&b.t));
            g
        })
        .collect();
    out.sort_by(|a, b| a.h.total_cmp(&b.h).then(a.t.total_cmp(&b.t)));
    out
}

/// `h,t,r_min,r_max,r_mean,oscillation,q_h`
pub fn write_levelset_csv<W: Write>(samples: &[LevelSetSample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["h", "t", "r_min", "r_max", "r_mean", "oscillation", "q_h"])?;
    for s in samples {
        w.write_record(&[
            format!("{}", s.h),
            format!("{}", s.t),
            format!("{:e}", s.r_min),
            format!("{:e}", s.r_max),
            format!("{:e}", s.r_mean),
            format!("{:e}", s.oscillation),
            format!("{:e}", s.q_h),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `theta,r` per ray, for plotting one front.
pub fn write_polyline_csv<W: Write>(sample: &LevelSetSample, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta", "r"])?;
    for (theta, r) in &sample.rays {
        w.write_record(&[format!("{theta}"), format!("{r:e}")])?;
    }
    w.flush()?;
    Ok(())
}
