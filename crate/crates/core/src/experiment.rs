//! Experiment orchestration: a run writes snapshots and inline series, an
//! analysis replays the measurements from snapshots, and a report turns the
//! analysis into per-criterion verdicts.
//!
//! Layout of a run directory:
//!
//! ```text
//! config.json        manifest.json      diagnostics.csv    levelsets.csv
//! snapshots/snap_NNNNN.bin
//! analysis/{analysis.json, diagnostics.csv, levelsets.csv, qh_comparison.csv,
//!           symmetrization.csv, steady_distance.csv, steady_profile.csv}
//! report/{verdict.json, series.csv}
//! ```

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{AnalysisConfig, ExperimentConfig};
use crate::datum::make_initial_datum;
use crate::diagnostics::{fit_rate, measure_about, write_diagnostics_csv, DiagnosticsRecord, RateFit};
use crate::dynamics::{run, Containment, EtdIntegrator, RunOptions, SimulationState, StopReason};
use crate::error::{Error, Result};
use crate::levelsets::{
    centroid, extract_level_set, spreading_rate, symmetrization_series, write_levelset_csv, LevelSetSample,
    DEFAULT_RAYS,
};
use crate::reaction::{ReactionModel, ReactionSpec};
use crate::reduction::{
    collocation_residual, fit_tail_constant, ode_level_prediction, solve_steady_profile, steady_convergence_check,
    write_comparison_csv, write_profile_csv, LevelComparison, SteadyConvergence, SteadyFamily, TailFit,
};
use crate::snapshot::{list_snapshots, read_snapshot, snapshot_name, write_snapshot};
use crate::spectral::{Field, SpectralOperator};

pub const SNAPSHOT_DIR: &str = "snapshots";
pub const ANALYSIS_DIR: &str = "analysis";
pub const REPORT_DIR: &str = "report";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub file: String,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRate {
    pub h: f64,
    pub rate: Option<f64>,
    pub r_squared: Option<f64>,
}

/// Rates fitted on the inline series over the default window.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InlineRates {
    pub window: Option<(f64, f64)>,
    pub spreading: Vec<LevelRate>,
    pub grad_decay: Option<f64>,
    pub hess_decay: Option<f64>,
    pub fraclap_decay: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub config: ExperimentConfig,
    /// False when the run aborted; outputs up to the failure are kept.
    pub complete: bool,
    pub error: Option<String>,
    pub stop_reason: Option<StopReason>,
    pub t_stop: f64,
    pub steps: u64,
    pub center: [f64; 2],
    pub kappa: f64,
    pub lambda: f64,
    pub snapshots: Vec<SnapshotEntry>,
    pub diagnostics_samples: usize,
    pub levelset_samples: usize,
    /// Level/time pairs for which no level set could be extracted.
    pub levelset_gaps: usize,
    pub rates: InlineRates,
    pub wall_time_s: f64,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn create_csv(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// Datum with seeded multiplicative noise of relative size `perturbation`.
pub fn initial_field(cfg: &ExperimentConfig) -> Result<Field> {
    let grid = cfg.grid()?;
    let clean = make_initial_datum(&grid, &cfg.datum)?;
    if cfg.perturbation == 0.0 {
        return Ok(clean);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let values = clean
        .values()
        .iter()
        .map(|&u| (u * (1.0 + cfg.perturbation * rng.random_range(-1.0..1.0))).clamp(0.0, 1.0))
        .collect();
    Field::new(grid, values, 0.0)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn default_window(t_last: f64, requested: Option<(f64, f64)>) -> (f64, f64) {
    match requested {
        Some((t0, t1)) => (t0, t1.min(t_last)),
        None => (t_last / 3.0, t_last),
    }
}

fn inline_rates(records: &[DiagnosticsRecord], sets: &[LevelSetSample], levels: &[f64], window: (f64, f64)) -> InlineRates {
    let (t0, t1) = window;
    if !(t0 < t1) {
        return InlineRates::default();
    }
    let late = (t0 + (t1 - t0) / 3.0, t1);
    let decay = |pick: fn(&DiagnosticsRecord) -> f64| {
        let series: Vec<(f64, f64)> = records.iter().map(|r| (r.t, pick(r))).collect();
        fit_rate(&series, late).ok().map(|f| f.rate)
    };
    InlineRates {
        window: Some(window),
        spreading: levels
            .iter()
            .map(|&h| {
                let own: Vec<LevelSetSample> = sets.iter().filter(|s| s.h == h).cloned().collect();
                let fit = spreading_rate(&own, window).ok();
                LevelRate {
                    h,
                    rate: fit.map(|f| f.rate),
                    r_squared: fit.map(|f| f.r_squared),
                }
            })
            .collect(),
        grad_decay: decay(|r| r.grad_ratio),
        hess_decay: decay(|r| r.hess_ratio),
        fraclap_decay: decay(|r| r.fraclap_ratio),
    }
}

/// Runs the simulation described by `cfg`, writing everything under `out`.
///
/// On failure the partial outputs and a manifest with `complete = false`
/// are written before the error is returned; a divergence also dumps the
/// last finite state to `diverged.bin`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    let clock = Instant::now();
    let snap_dir = out.join(SNAPSHOT_DIR);
    fs::create_dir_all(&snap_dir)?;
    write_json(&out.join("config.json"), cfg)?;

    let grid = cfg.grid()?;
    let op = Arc::new(SpectralOperator::new(grid, cfg.alpha)?);
    let reaction = cfg.reaction.build()?;
    let u0 = initial_field(cfg)?;
    let center = centroid(&u0);
    let state = SimulationState::new(u0, Arc::clone(&op), reaction.clone())?;
    let lambda = state.lambda;
    let integrator = EtdIntegrator::new(Arc::clone(&op), cfg.stepper(), &reaction)?;

    let steps_of = |t: f64| ((t / cfg.dt).round() as u64).max(1);
    let k_diag = steps_of(cfg.diagnostics_cadence);
    let k_snap = steps_of(cfg.snapshot_cadence);
    let k_ref = steps_of(cfg.analysis.t_ref);
    let k_pred = steps_of(cfg.analysis.prediction_t_ref.unwrap_or(cfg.analysis.t_ref));
    let k_obs = gcd(gcd(gcd(k_diag, k_snap), k_ref), k_pred);
    let opts = RunOptions {
        t_end: cfg.t_end,
        sample_every: Some(k_obs as f64 * cfg.dt),
        containment: cfg.containment.then(|| Containment::for_grid(&grid, center)),
    };

    let mut records = Vec::new();
    let mut sets = Vec::new();
    let mut gaps = 0usize;
    let mut snapshots = Vec::new();
    let mut last_diag = None;
    let mut last_snap = None;

    let mut record = |s: &SimulationState, force: bool| -> Result<()> {
        let step = s.step_count;
        if (step % k_diag == 0 || force) && last_diag != Some(step) {
            last_diag = Some(step);
            records.push(measure_about(&s.field, &op, &reaction, cfg.analysis.u_floor, center)?);
            for &h in &cfg.levels {
                match extract_level_set(&s.field, h, center, cfg.rays, lambda) {
                    Ok(sample) => sets.push(sample),
                    Err(_) => gaps += 1,
                }
            }
        }
        if (step % k_snap == 0 || step == k_ref || step == k_pred || force) && last_snap != Some(step) {
            last_snap = Some(step);
            let file = snapshot_name(snapshots.len());
            write_snapshot(&snap_dir.join(&file), &s.field, cfg.alpha, reaction.kappa())?;
            snapshots.push(SnapshotEntry { file, t: s.time() });
        }
        Ok(())
    };

    let outcome = run(state, &integrator, &opts, &mut |s| record(s, false));
    let (complete, error, stop_reason, t_stop, steps) = match outcome {
        Ok(o) => {
            record(&o.state, true)?;
            (true, None, Some(o.stop_reason), o.state.time(), o.state.step_count)
        }
        Err(e) => {
            let (t, step) = match &e {
                Error::Diverged { step, time, last_good } => {
                    write_snapshot(&out.join("diverged.bin"), last_good, cfg.alpha, reaction.kappa())?;
                    (*time, *step)
                }
                _ => (f64::NAN, 0),
            };
            (false, Some(e.to_string()), None, t, step)
        }
    };
    drop(record);

    write_diagnostics_csv(&records, create_csv(&out.join("diagnostics.csv"))?)?;
    write_levelset_csv(&sets, create_csv(&out.join("levelsets.csv"))?)?;
    let t_last = records.last().map_or(0.0, |r| r.t);
    let rates = inline_rates(&records, &sets, &cfg.levels, default_window(t_last, cfg.analysis.window));

    let manifest = Manifest {
        name: cfg.name.clone(),
        config: cfg.clone(),
        complete,
        error: error.clone(),
        stop_reason,
        t_stop,
        steps,
        center,
        kappa: reaction.kappa(),
        lambda,
        snapshots,
        diagnostics_samples: records.len(),
        levelset_samples: sets.len(),
        levelset_gaps: gaps,
        rates,
        wall_time_s: clock.elapsed().as_secs_f64(),
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    match error {
        None => Ok(manifest),
        Some(_) => Err(Error::Degenerate(format!(
            "run aborted: {}",
            manifest.error.as_deref().unwrap_or("unknown")
        ))),
    }
}

#[derive(Clone, Debug, Default)]
pub struct AnalyzeOptions {
    /// Overrides the configured levels.
    pub levels: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub rate: f64,
    pub r_squared: f64,
    pub samples: usize,
    pub window: (f64, f64),
}

impl From<RateFit> for Fit {
    fn from(f: RateFit) -> Self {
        Self {
            rate: f.rate,
            r_squared: f.r_squared,
            samples: f.samples,
            window: f.window,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelAnalysis {
    pub h: f64,
    pub spreading: Option<Fit>,
    /// `max |q_h(t)/q_h(t_end) − 1|` over the last third of the window.
    pub q_h_deviation: Option<f64>,
    pub q_h_final: Option<f64>,
    pub oscillation_initial: Option<f64>,
    pub oscillation_final: Option<f64>,
    /// Three-sample moving average strictly decreasing over the last half.
    pub oscillation_decreasing: Option<bool>,
    pub comparison: Option<LevelComparison>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyAnalysis {
    pub check: SteadyConvergence,
    /// Distance at the start and end of the last half of the window.
    pub distance_mid: f64,
    pub distance_end: f64,
    /// Three-sample moving average strictly decreasing over the last half.
    pub decreasing: bool,
    pub collocation_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub name: String,
    pub dim: usize,
    pub n: usize,
    pub length: f64,
    pub alpha: f64,
    pub kappa: f64,
    pub lambda: f64,
    pub radially_symmetric_datum: bool,
    pub center: [f64; 2],
    pub t_last: f64,
    pub window: (f64, f64),
    pub snapshots: usize,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub grad_decay: Option<Fit>,
    pub hess_decay: Option<Fit>,
    pub fraclap_decay: Option<Fit>,
    /// `max band_max / min band_min` over the window.
    pub band_ratio: Option<f64>,
    pub levels: Vec<LevelAnalysis>,
    pub level_sets: Vec<LevelSetSample>,
    pub tail: Option<TailFit>,
    /// Tail whose constant feeds the ODE prediction.
    pub prediction_tail: Option<TailFit>,
    pub steady: Option<SteadyAnalysis>,
    /// Failures of individual measurements, in the order encountered.
    pub notes: Vec<String>,
}

fn smoothed_strictly_decreasing(values: &[f64]) -> Option<bool> {
    if values.len() < 4 {
        return None;
    }
    let avg: Vec<f64> = values.windows(3).map(|w| (w[0] + w[1] + w[2]) / 3.0).collect();
    Some(avg.windows(2).all(|w| w[1] < w[0]))
}

fn snapshot_location(dir: &Path) -> PathBuf {
    let nested = dir.join(SNAPSHOT_DIR);
    if nested.is_dir() {
        nested
    } else {
        dir.to_path_buf()
    }
}

/// Replays diagnostics, level sets and the reduction checks on the
/// snapshots of a run directory (or a bare snapshot directory).
pub fn analyze_run(dir: &Path, opts: &AnalyzeOptions) -> Result<AnalysisReport> {
    let paths = list_snapshots(&snapshot_location(dir))?;
    let config: Option<ExperimentConfig> = {
        let p = dir.join("config.json");
        if p.is_file() {
            Some(read_json(&p)?)
        } else {
            None
        }
    };

    let mut fields = Vec::with_capacity(paths.len());
    let mut header0 = None;
    for p in &paths {
        let (h, f) = read_snapshot(p)?;
        let h0 = *header0.get_or_insert(h);
        if (h.dim, h.n_per_axis, h.length, h.alpha) != (h0.dim, h0.n_per_axis, h0.length, h0.alpha) {
            return Err(Error::Snapshot {
                path: p.clone(),
                detail: "grid or alpha differs from the first snapshot".into(),
            });
        }
        fields.push(f);
    }
    fields.sort_by(|a, b| a.time().total_cmp(&b.time()));
    let header = header0.expect("at least one snapshot");
    let grid = *fields[0].grid();
    let alpha = header.alpha;

    let reaction = match &config {
        Some(c) => c.reaction.build()?,
        None => ReactionSpec::Logistic { rate: header.kappa }.build()?,
    };
    let analysis = config.as_ref().map(|c| c.analysis.clone()).unwrap_or_default();
    let levels = opts
        .levels
        .clone()
        .or_else(|| config.as_ref().map(|c| c.levels.clone()))
        .unwrap_or_else(|| vec![0.5]);
    let rays = config.as_ref().map_or(DEFAULT_RAYS, |c| c.rays);
    let radially_symmetric_datum = config.as_ref().is_some_and(|c| {
        matches!(
            c.datum,
            crate::datum::InitialDatum::Gaussian { .. } | crate::datum::InitialDatum::Bump { .. }
        ) && c.perturbation == 0.0
    });
    let name = config.as_ref().map_or_else(|| "run".to_string(), |c| c.name.clone());

    let op = SpectralOperator::new(grid, alpha)?;
    let lambda = reaction.kappa() / (grid.dim() as f64 + alpha);
    let center = centroid(&fields[0]);
    let t_last = fields.last().unwrap().time();
    let window = default_window(t_last, analysis.window);
    let (t0, t1) = window;
    let late = (t0 + (t1 - t0) / 3.0, t1);
    let in_window = |t: f64| t >= t0 - 1e-9 && t <= t1 + 1e-9;
    let mut notes = Vec::new();

    let mut diagnostics = Vec::new();
    for f in &fields {
        match measure_about(f, &op, &reaction, analysis.u_floor, center) {
            Ok(r) => diagnostics.push(r),
            Err(e) => notes.push(format!("diagnostics at t = {}: {e}", f.time())),
        }
    }
    let mut fit_note = |what: &str, r: Result<RateFit>| match r {
        Ok(f) => Some(Fit::from(f)),
        Err(e) => {
            notes.push(format!("{what}: {e}"));
            None
        }
    };
    let series = |pick: fn(&DiagnosticsRecord) -> f64| -> Vec<(f64, f64)> {
        diagnostics.iter().map(|r| (r.t, pick(r))).collect()
    };
    let grad_decay = fit_note("grad_ratio fit", fit_rate(&series(|r| r.grad_ratio), late));
    let hess_decay = fit_note("hess_ratio fit", fit_rate(&series(|r| r.hess_ratio), late));
    let fraclap_decay = fit_note("fraclap_ratio fit", fit_rate(&series(|r| r.fraclap_ratio), late));
    let band: Vec<&DiagnosticsRecord> = diagnostics.iter().filter(|r| in_window(r.t)).collect();
    let band_ratio = (!band.is_empty()).then(|| {
        let hi = band.iter().map(|r| r.band_max).fold(0.0, f64::max);
        let lo = band.iter().map(|r| r.band_min).fold(f64::INFINITY, f64::min);
        hi / lo
    });

    let mut level_sets = Vec::new();
    for f in &fields {
        for &h in &levels {
            match extract_level_set(f, h, center, rays, lambda) {
                Ok(s) => level_sets.push(s),
                Err(e) => notes.push(format!("level set at t = {}: {e}", f.time())),
            }
        }
    }

    let tail_window = analysis
        .tail_window
        .unwrap_or((grid.length() / 128.0, grid.length() / 16.0));
    let mut tail_at = |t_ref: f64| {
        let nearest = fields
            .iter()
            .min_by(|a, b| (a.time() - t_ref).abs().total_cmp(&(b.time() - t_ref).abs()))
            .unwrap();
        match fit_tail_constant(nearest, alpha, tail_window, center) {
            Ok(t) => Some(t),
            Err(e) => {
                notes.push(format!("tail fit at t = {}: {e}", nearest.time()));
                None
            }
        }
    };
    let tail = tail_at(analysis.t_ref);
    let prediction_tail = match analysis.prediction_t_ref {
        Some(tp) => tail_at(tp),
        None => tail,
    };

    let mut level_reports = Vec::new();
    for &h in &levels {
        let own: Vec<&LevelSetSample> = level_sets.iter().filter(|s| s.h == h).collect();
        let owned: Vec<LevelSetSample> = own.iter().map(|s| (*s).clone()).collect();
        let spreading = match spreading_rate(&owned, window) {
            Ok(f) => Some(Fit::from(f)),
            Err(e) => {
                notes.push(format!("spreading rate h = {h}: {e}"));
                None
            }
        };
        let windowed: Vec<&&LevelSetSample> = own.iter().filter(|s| in_window(s.t)).collect();
        let last = windowed.last().map(|s| (**s).clone());
        let q_h_final = last.as_ref().map(|s| s.q_h);
        let q_h_deviation = last.as_ref().map(|end| {
            windowed
                .iter()
                .filter(|s| s.t >= t1 - (t1 - t0) / 3.0 - 1e-9)
                .map(|s| (s.q_h / end.q_h - 1.0).abs())
                .fold(0.0, f64::max)
        });
        let half: Vec<f64> = windowed
            .iter()
            .filter(|s| s.t >= 0.5 * (t0 + t1) - 1e-9)
            .map(|s| s.oscillation)
            .collect();
        let comparison = match (&prediction_tail, &last) {
            (Some(tail), Some(end)) => match ode_level_prediction(&reaction, tail, h, alpha, grid.dim(), end.t) {
                Ok(pred) => Some(LevelComparison::new(h, end.q_h, pred)),
                Err(e) => {
                    notes.push(format!("ODE prediction h = {h}: {e}"));
                    None
                }
            },
            _ => None,
        };
        level_reports.push(LevelAnalysis {
            h,
            spreading,
            q_h_deviation,
            q_h_final,
            oscillation_initial: own.first().map(|s| s.oscillation),
            oscillation_final: last.as_ref().map(|s| s.oscillation),
            oscillation_decreasing: smoothed_strictly_decreasing(&half),
            comparison,
        });
    }

    let steady = steady_analysis(&fields, &reaction, lambda, &level_reports, &analysis, window, center)
        .map_err(|e| notes.push(format!("steady profile: {e}")))
        .ok();

    Ok(AnalysisReport {
        name,
        dim: grid.dim(),
        n: grid.n(),
        length: grid.length(),
        alpha,
        kappa: reaction.kappa(),
        lambda,
        radially_symmetric_datum,
        center,
        t_last,
        window,
        snapshots: fields.len(),
        diagnostics,
        grad_decay,
        hess_decay,
        fraclap_decay,
        band_ratio,
        levels: level_reports,
        level_sets,
        tail,
        prediction_tail,
        steady,
        notes,
    })
}

/// Level whose final `q_h` sets the default annulus `β = q_h/4`: 1/2 when
/// tracked, otherwise the middle one. The annulus then sits behind the
/// front, where `f′(u) < 0` damps the mass arriving from periodic images.
fn reference_level(levels: &[LevelAnalysis]) -> Option<&LevelAnalysis> {
    levels
        .iter()
        .find(|l| l.h == 0.5)
        .or_else(|| levels.get(levels.len() / 2))
}

fn steady_analysis(
    fields: &[Field],
    reaction: &ReactionModel,
    lambda: f64,
    levels: &[LevelAnalysis],
    analysis: &AnalysisConfig,
    window: (f64, f64),
    center: [f64; 2],
) -> Result<SteadyAnalysis> {
    let beta = match analysis.beta {
        Some(b) => b,
        None => {
            let q = reference_level(levels)
                .and_then(|l| l.q_h_final)
                .ok_or_else(|| Error::Degenerate("no level set to size the annulus".into()))?;
            0.25 * q
        }
    };
    let (t0, t1) = window;
    let grid = *fields[0].grid();
    // the annulus must span a few cells before it is compared
    let resolved = |t: f64| beta * (lambda * t).exp() >= 4.0 * grid.spacing();
    let snaps: Vec<Field> = fields
        .iter()
        .filter(|f| f.time() >= t0 - 1e-9 && f.time() <= t1 + 1e-9 && resolved(f.time()))
        .cloned()
        .collect();
    let family = SteadyFamily::new(reaction.clone(), lambda)?;
    let check = steady_convergence_check(&snaps, &family, beta, center, 0.25 * grid.length())?;
    let mid = 0.5 * (t0 + t1);
    let half: Vec<(f64, f64)> = check.distances.iter().copied().filter(|d| d.0 >= mid - 1e-9).collect();
    let (first, last) = match (half.first(), half.last()) {
        (Some(a), Some(b)) => (a.1, b.1),
        _ => return Err(Error::TooFewSamples { need: 2, got: half.len() }),
    };
    let values: Vec<f64> = half.iter().map(|d| d.1).collect();
    let radii: Vec<f64> = (0..=40).map(|i| beta * 10f64.powf(-1.0 + i as f64 / 20.0)).collect();
    let residual = collocation_residual(&family, reaction, check.tau, &radii)?;
    Ok(SteadyAnalysis {
        distance_mid: first,
        distance_end: last,
        decreasing: smoothed_strictly_decreasing(&values).unwrap_or(false) && last < first,
        collocation_residual: residual,
        check,
    })
}

/// Runs [`analyze_run`] and writes its tables under `dir/analysis`.
pub fn analyze_and_write(dir: &Path, opts: &AnalyzeOptions) -> Result<AnalysisReport> {
    let report = analyze_run(dir, opts)?;
    let out = dir.join(ANALYSIS_DIR);
    fs::create_dir_all(&out)?;
    write_json(&out.join("analysis.json"), &report)?;
    write_diagnostics_csv(&report.diagnostics, create_csv(&out.join("diagnostics.csv"))?)?;
    write_levelset_csv(&report.level_sets, create_csv(&out.join("levelsets.csv"))?)?;
    let comparisons: Vec<LevelComparison> = report.levels.iter().filter_map(|l| l.comparison).collect();
    write_comparison_csv(&comparisons, create_csv(&out.join("qh_comparison.csv"))?)?;

    let mut w = csv::Writer::from_writer(create_csv(&out.join("symmetrization.csv"))?);
    w.write_record(["h", "t", "oscillation", "q_h"])?;
    for p in symmetrization_series(&report.level_sets) {
        w.write_record(&[
            format!("{}", p.h),
            format!("{}", p.t),
            format!("{:e}", p.oscillation),
            format!("{:e}", p.q_h),
        ])?;
    }
    w.flush()?;

    if let Some(s) = &report.steady {
        let mut w = csv::Writer::from_writer(create_csv(&out.join("steady_distance.csv"))?);
        w.write_record(["t", "sup_distance", "tau_fit"])?;
        for (d, tau) in s.check.distances.iter().zip(&s.check.tau_series) {
            w.write_record(&[format!("{}", d.0), format!("{:e}", d.1), format!("{:e}", tau.1)])?;
        }
        w.flush()?;
        let beta = s.check.beta;
        let radii: Vec<f64> = (0..=80).map(|i| beta * 10f64.powf(-2.0 + i as f64 / 20.0)).collect();
        let reaction = ReactionSpec::Logistic { rate: report.kappa };
        let model = match fs::read_to_string(dir.join("config.json")) {
            Ok(text) => serde_json::from_str::<ExperimentConfig>(&text)?.reaction.build()?,
            Err(_) => reaction.build()?,
        };
        let profile = solve_steady_profile(&model, report.lambda, s.check.tau, &radii)?;
        write_profile_csv(&profile, create_csv(&out.join("steady_profile.csv"))?)?;
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub id: String,
    pub criterion: u32,
    pub description: String,
    pub measured: Option<f64>,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn verdict(id: &str, criterion: u32, description: &str, measured: Option<f64>, target: f64, tolerance: f64, pass: impl Fn(f64) -> bool) -> Verdict {
    Verdict {
        id: id.into(),
        criterion,
        description: description.into(),
        measured,
        target,
        tolerance,
        pass: measured.is_some_and(pass),
    }
}

/// Verdicts for the criteria that apply to a single simulation run.
pub fn run_verdicts(a: &AnalysisReport) -> Vec<Verdict> {
    let mut out = Vec::new();
    let lambda = a.lambda;
    let reference = reference_level(&a.levels);
    let spreading = reference.and_then(|l| l.spreading.as_ref()).map(|f| f.rate);
    out.push(verdict(
        "spreading_rate",
        if a.dim == 1 { 1 } else { 2 },
        "level-set growth rate relative to kappa/(d+alpha)",
        spreading,
        lambda,
        0.1,
        |r| (r / lambda - 1.0).abs() <= 0.1,
    ));
    let decay_ok = |f: &Option<Fit>| f.as_ref().map(|f| (f.rate, f.r_squared));
    for (id, crit, desc, fit) in [
        ("grad_decay", 4, "decay rate of sup |grad u|/u (r^2 > 0.9 required)", &a.grad_decay),
        ("hess_decay", 4, "decay rate of sup |hess u|/u (r^2 > 0.9 required)", &a.hess_decay),
        ("fraclap_decay", 5, "decay rate of sup |frac lap u|/u (r^2 > 0.9 required)", &a.fraclap_decay),
    ] {
        let pair = decay_ok(fit);
        let mut v = verdict(id, crit, desc, pair.map(|p| p.0), 0.0, 0.0, |r| r > 0.0);
        v.pass = pair.is_some_and(|(r, r2)| r > 0.0 && r2 > 0.9);
        out.push(v);
    }
    out.push(verdict(
        "bounds_band",
        6,
        "max/min of u(1 + e^{-kappa t}|x|^{d+alpha}) over the window",
        a.band_ratio,
        1e3,
        0.0,
        |r| r <= 1e3,
    ));
    if !a.radially_symmetric_datum && a.dim == 2 {
        let l = reference;
        let ratio = l.and_then(|l| Some(l.oscillation_final? / l.oscillation_initial?));
        let mut v = verdict(
            "symmetrization",
            7,
            "final/initial oscillation of the h = 1/2 level set (smoothed decrease over last half required)",
            ratio,
            0.5,
            0.0,
            |r| r <= 0.5,
        );
        v.pass &= l.and_then(|l| l.oscillation_decreasing).unwrap_or(false);
        out.push(v);
    }
    out.push(verdict(
        "level_convergence",
        8,
        "max |q_h(t)/q_h(t_end) - 1| over the last third of the window",
        reference.and_then(|l| l.q_h_deviation),
        0.0,
        0.1,
        |d| d <= 0.1,
    ));
    let expected = a.dim as f64 + a.alpha;
    out.push(verdict(
        "tail_exponent",
        9,
        "tail exponent of u(., t_ref) relative to d+alpha",
        a.tail.map(|t| t.exponent),
        expected,
        0.05,
        |e| (e / expected - 1.0).abs() <= 0.05,
    ));
    out.push(verdict(
        "ode_reduction",
        10,
        "relative error of the ODE-predicted q_h",
        reference.and_then(|l| l.comparison).map(|c| c.rel_err),
        0.0,
        0.15,
        |e| e <= 0.15,
    ));
    let mut v = verdict(
        "steady_convergence",
        13,
        "end/mid sup distance to the fitted steady profile (smoothed decrease and residual <= 1e-8 required)",
        a.steady.as_ref().map(|s| s.distance_end / s.distance_mid),
        1.0,
        0.0,
        |r| r < 1.0,
    );
    v.pass &= a
        .steady
        .as_ref()
        .is_some_and(|s| s.decreasing && s.collocation_residual <= 1e-8);
    out.push(v);
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictFile {
    pub run: String,
    pub all_pass: bool,
    pub criteria: Vec<Verdict>,
}

/// Writes `report/verdict.json` and the long-format `report/series.csv`,
/// analyzing first when `analysis/analysis.json` is absent. Output depends
/// only on the analysis, so repeated calls are byte-identical.
pub fn report_run(dir: &Path) -> Result<VerdictFile> {
    let analysis_path = dir.join(ANALYSIS_DIR).join("analysis.json");
    let analysis: AnalysisReport = if analysis_path.is_file() {
        read_json(&analysis_path)?
    } else {
        analyze_and_write(dir, &AnalyzeOptions::default())?
    };
    let criteria = run_verdicts(&analysis);
    let file = VerdictFile {
        run: analysis.name.clone(),
        all_pass: criteria.iter().all(|v| v.pass),
        criteria,
    };
    let out = dir.join(REPORT_DIR);
    fs::create_dir_all(&out)?;
    write_json(&out.join("verdict.json"), &file)?;

    let mut w = csv::Writer::from_writer(create_csv(&out.join("series.csv"))?);
    w.write_record(["series", "h", "t", "value"])?;
    let mut row = |series: &str, h: Option<f64>, t: f64, v: f64| {
        w.write_record(&[
            series.to_string(),
            h.map(|h| format!("{h}")).unwrap_or_default(),
            format!("{t}"),
            format!("{v:e}"),
        ])
    };
    for r in &analysis.diagnostics {
        row("grad_ratio", None, r.t, r.grad_ratio)?;
        row("hess_ratio", None, r.t, r.hess_ratio)?;
        row("fraclap_ratio", None, r.t, r.fraclap_ratio)?;
        row("band_ratio", None, r.t, r.band_max / r.band_min)?;
    }
    for s in &analysis.level_sets {
        row("r_mean", Some(s.h), s.t, s.r_mean)?;
        row("q_h", Some(s.h), s.t, s.q_h)?;
        row("oscillation", Some(s.h), s.t, s.oscillation)?;
    }
    if let Some(s) = &analysis.steady {
        for &(t, d) in &s.check.distances {
            row("steady_distance", None, t, d)?;
        }
    }
    drop(row);
    w.flush()?;
    Ok(file)
}
