//! End-to-end acceptance suite. Runs the reference configurations in
//! `configs/`, then checks every criterion at its stated tolerance and prints
//! one line per criterion.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use fkpp::config::ExperimentConfig;
use fkpp::dynamics::{run, EtdIntegrator, RunOptions, Scheme, SimulationState, StepperConfig};
use fkpp::experiment::{analyze_and_write, run_experiment, AnalysisReport, AnalyzeOptions, LevelAnalysis};
use fkpp::kernel::{eval_kernel_profile, kernel_gradient_tail};
use fkpp::reaction::ReactionModel;
use fkpp::snapshot::{read_snapshot, write_snapshot};
use fkpp::{Field, Grid, SpectralOperator};

struct Outcome {
    id: &'static str,
    detail: String,
    pass: bool,
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn simulate(name: &str, scratch: &Path) -> AnalysisReport {
    let cfg = ExperimentConfig::from_path(&config_path(name)).expect("config parses");
    let out = scratch.join(&cfg.name);
    let start = Instant::now();
    let m = run_experiment(&cfg, &out).expect("run completes");
    let a = analyze_and_write(&out, &AnalyzeOptions::default()).expect("analysis completes");
    eprintln!(
        "  {}: stopped at t = {:.2} ({:?}), {:.1} s",
        cfg.name,
        m.t_stop,
        m.stop_reason,
        start.elapsed().as_secs_f64()
    );
    a
}

fn half_level(a: &AnalysisReport) -> &LevelAnalysis {
    a.levels.iter().find(|l| l.h == 0.5).expect("h = 0.5 is analyzed")
}

fn spreading(a: &AnalysisReport) -> Option<f64> {
    half_level(a).spreading.as_ref().map(|f| f.rate)
}

fn rate_check(id: &'static str, a: &AnalysisReport, expected: f64) -> Outcome {
    let rate = spreading(a);
    Outcome {
        id,
        detail: format!("rate {rate:?} vs {expected:.4} (10%)"),
        pass: rate.is_some_and(|r| (r / expected - 1.0).abs() <= 0.1),
    }
}

fn decay_check(a: &AnalysisReport) -> (Outcome, Outcome) {
    let describe = |f: &Option<fkpp::experiment::Fit>| match f {
        Some(f) => (format!("rate {:.4}, r² {:.4}", f.rate, f.r_squared), f.rate > 0.0 && f.r_squared > 0.9),
        None => ("no fit".to_string(), false),
    };
    let (g, g_ok) = describe(&a.grad_decay);
    let (h, h_ok) = describe(&a.hess_decay);
    let (f, f_ok) = describe(&a.fraclap_decay);
    (
        Outcome {
            id: "4  gradient decay",
            detail: format!("grad {g}; hess {h}"),
            pass: g_ok && h_ok,
        },
        Outcome {
            id: "5  fractional-Laplacian decay",
            detail: f,
            pass: f_ok,
        },
    )
}

fn cauchy(dim: usize, r: f64) -> f64 {
    if dim == 1 {
        1.0 / (PI * (1.0 + r * r))
    } else {
        0.5 / PI * (1.0 + r * r).powf(-1.5)
    }
}

fn kernel_check() -> Outcome {
    let mut worst_tail: f64 = 0.0;
    let mut worst_grad: f64 = 0.0;
    let mut worst_closed: f64 = 0.0;
    for &alpha in &[0.5, 1.0, 1.5] {
        for &dim in &[1usize, 2] {
            let expected = dim as f64 + alpha;
            let p = eval_kernel_profile(alpha, dim, 1e4, 200).expect("kernel profile");
            worst_tail = worst_tail.max((p.tail_exponent / expected - 1.0).abs());
            let g = kernel_gradient_tail(alpha, dim, (1e3, 4e3)).expect("gradient tail");
            worst_grad = worst_grad.max((g / (expected + 1.0) - 1.0).abs());
        }
    }
    for &dim in &[1usize, 2] {
        let p = eval_kernel_profile(1.0, dim, 50.0, 120).expect("kernel profile");
        for (r, v) in p.radii.iter().zip(&p.values) {
            worst_closed = worst_closed.max((v / cauchy(dim, *r) - 1.0).abs());
        }
    }
    Outcome {
        id: "11 heat kernel",
        detail: format!(
            "tail rel err {worst_tail:.2e} (2%), gradient rel err {worst_grad:.2e} (2%), closed form {worst_closed:.2e} (1e-3)"
        ),
        pass: worst_tail <= 0.02 && worst_grad <= 0.02 && worst_closed < 1e-3,
    }
}

fn plane_wave_error() -> f64 {
    let mut worst: f64 = 0.0;
    for &dim in &[1usize, 2] {
        let grid = Grid::new(dim, 32, 2.0 * PI).unwrap();
        for &alpha in &[0.5, 1.0, 1.5] {
            let op = SpectralOperator::new(grid, alpha).unwrap();
            for &(a, b) in &[(1i64, 0i64), (5, 3), (-9, 2), (15, -15)] {
                let b = if dim == 1 { 0 } else { b };
                let (ka, kb) = (a as f64, b as f64);
                let scale = ka.hypot(kb).powf(alpha);
                let u = Field::from_fn(grid, 0.0, |x| (ka * x[0] + kb * x[1]).sin()).unwrap();
                let lu = op.apply_frac_laplacian(&u).unwrap();
                for (l, v) in lu.values().iter().zip(u.values()) {
                    worst = worst.max((l - scale * v).abs() / scale);
                }
            }
        }
    }
    worst
}

fn richardson_ratio() -> f64 {
    let grid = Grid::new(1, 256, 64.0).unwrap();
    let op = Arc::new(SpectralOperator::new(grid, 1.0).unwrap());
    let solve = |dt: f64| {
        let field = Field::from_fn(grid, 0.0, |x| 0.6 * (-x[0] * x[0] / 16.0).exp()).unwrap();
        let s = SimulationState::new(field, Arc::clone(&op), ReactionModel::logistic()).unwrap();
        let cfg = StepperConfig {
            dt,
            scheme: Scheme::Etdrk2,
            dealias: false,
        };
        let integ = EtdIntegrator::new(Arc::clone(&op), cfg, &s.reaction).unwrap();
        let opts = RunOptions {
            t_end: 2.0,
            sample_every: None,
            containment: None,
        };
        run(s, &integ, &opts, &mut |_| Ok(())).unwrap().state.field
    };
    let (a, b, c) = (solve(0.1), solve(0.05), solve(0.025));
    let diff = |x: &Field, y: &Field| {
        x.values().iter().zip(y.values()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
    };
    diff(&a, &b) / diff(&b, &c)
}

fn snapshot_bit_exact(scratch: &Path) -> bool {
    let grid = Grid::new(2, 32, 17.0).unwrap();
    let u = Field::from_fn(grid, 1.0 / 3.0, |x| (x[0] * 0.7).sin() * (x[1] * 1.3).cos() / 7.0).unwrap();
    let path = scratch.join("roundtrip.bin");
    write_snapshot(&path, &u, 0.7, 1.0).unwrap();
    let (h, back) = read_snapshot(&path).unwrap();
    h.alpha.to_bits() == 0.7f64.to_bits()
        && back.time().to_bits() == u.time().to_bits()
        && u.values().iter().zip(back.values()).all(|(a, b)| a.to_bits() == b.to_bits())
}

fn kato_worst() -> f64 {
    let g1 = Grid::new(1, 512, 64.0).unwrap();
    let g2 = Grid::new(2, 256, 32.0).unwrap();
    let fields = [
        Field::from_fn(g1, 0.0, |x| x[0].sin() * (-x[0] * x[0] / 50.0).exp()).unwrap(),
        Field::from_fn(g1, 0.0, |x| (0.7 * x[0]).cos() * (-x[0] * x[0] / 20.0).exp() - 0.1).unwrap(),
        Field::from_fn(g1, 0.0, |x| x[0] * (-x[0] * x[0] / 8.0).exp()).unwrap(),
        Field::from_fn(g2, 0.0, |x| x[0].sin() * (-(x[0] * x[0] + x[1] * x[1]) / 4.0).exp()).unwrap(),
        Field::from_fn(g2, 0.0, |x| (0.5 * (x[0] - 1.5)).sin() * (-((x[0] - 1.5).powi(2) + x[1] * x[1]) / 4.0).exp())
            .unwrap(),
    ];
    let mut worst = f64::NEG_INFINITY;
    for &alpha in &[0.5, 1.0, 1.5] {
        for u in &fields {
            let op = SpectralOperator::new(*u.grid(), alpha).unwrap();
            let abs = Field::new(*u.grid(), u.values().iter().map(|v| v.abs()).collect(), 0.0).unwrap();
            let l_abs = op.apply_frac_laplacian(&abs).unwrap();
            let l_u = op.apply_frac_laplacian(u).unwrap();
            let norm = u.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for k in 0..u.values().len() {
                let v = u.values()[k];
                if v.abs() > 1e-8 {
                    worst = worst.max((l_abs.values()[k] - v.signum() * l_u.values()[k]) / norm);
                }
            }
        }
    }
    worst
}

fn spectral_check(scratch: &Path) -> Outcome {
    let pw = plane_wave_error();
    let ratio = richardson_ratio();
    let exact = snapshot_bit_exact(scratch);
    let kato = kato_worst();
    Outcome {
        id: "12 spectral exactness",
        detail: format!(
            "plane waves {pw:.1e} (1e-12), ETDRK2 ratio {ratio:.3} ([3.4, 4.6]), snapshot bit-exact {exact}, Kato excess {kato:.1e} (1e-6)"
        ),
        pass: pw <= 1e-12 && (3.4..=4.6).contains(&ratio) && exact && kato <= 1e-6,
    }
}

fn main() -> ExitCode {
    let scratch = tempfile::tempdir().expect("scratch directory");
    let scratch = scratch.path();
    let mut results = Vec::new();

    eprintln!("running reference configurations");
    let line = simulate("line_alpha_1.toml", scratch);
    let line_slow = simulate("line_alpha_0p5.toml", scratch);
    let line_fast = simulate("line_alpha_1p5.toml", scratch);
    let plane = simulate("plane_gaussian.toml", scratch);
    let cross = simulate("plane_cross.toml", scratch);

    results.push(rate_check("1  spreading rate, 1D", &line, 0.5));
    results.push(rate_check("2  spreading rate, 2D", &plane, 1.0 / 3.0));
    let slow = rate_check("3a α = 0.5", &line_slow, 1.0 / 1.5);
    let fast = rate_check("3b α = 1.5", &line_fast, 1.0 / 2.5);
    results.push(Outcome {
        id: "3  alpha dependence",
        detail: format!("α = 0.5: {}; α = 1.5: {}", slow.detail, fast.detail),
        pass: slow.pass && fast.pass,
    });

    let (grad, frac) = decay_check(&line);
    results.push(grad);
    results.push(frac);

    results.push(Outcome {
        id: "6  bounds band",
        detail: format!("max/min {:?} (1e3)", line.band_ratio),
        pass: line.band_ratio.is_some_and(|b| b <= 1e3),
    });

    let c = half_level(&cross);
    let ratio = c.oscillation_final.zip(c.oscillation_initial).map(|(f, i)| f / i);
    results.push(Outcome {
        id: "7  symmetrization",
        detail: format!(
            "oscillation {:?} -> {:?}, ratio {ratio:?} (0.5), decreasing {:?}",
            c.oscillation_initial, c.oscillation_final, c.oscillation_decreasing
        ),
        pass: ratio.is_some_and(|r| r <= 0.5) && c.oscillation_decreasing == Some(true),
    });

    let dev = half_level(&line).q_h_deviation;
    results.push(Outcome {
        id: "8  level-set convergence",
        detail: format!("max |q(t)/q(end) - 1| {dev:?} (0.1)"),
        pass: dev.is_some_and(|d| d <= 0.1),
    });

    let tail_err = |a: &AnalysisReport| a.tail.map(|t| (t.exponent / (a.dim as f64 + a.alpha) - 1.0).abs());
    let (e1, e2) = (tail_err(&line), tail_err(&plane));
    results.push(Outcome {
        id: "9  tail law",
        detail: format!(
            "1D exponent {:?}, 2D exponent {:?} (5%)",
            line.tail.map(|t| t.exponent),
            plane.tail.map(|t| t.exponent)
        ),
        pass: e1.is_some_and(|e| e <= 0.05) && e2.is_some_and(|e| e <= 0.05),
    });

    let cmp = half_level(&line).comparison;
    results.push(Outcome {
        id: "10 ODE reduction",
        detail: match cmp {
            Some(c) => format!(
                "q measured {:.4}, predicted {:.4}, rel err {:.4} (0.15)",
                c.q_h_measured, c.q_h_predicted, c.rel_err
            ),
            None => "no prediction".into(),
        },
        pass: cmp.is_some_and(|c| c.rel_err <= 0.15),
    });

    eprintln!("evaluating heat kernels");
    results.push(kernel_check());
    results.push(spectral_check(scratch));

    let steady = line.steady.as_ref();
    results.push(Outcome {
        id: "13 steady-profile convergence",
        detail: match steady {
            Some(s) => format!(
                "distance mid {:.3e} -> end {:.3e}, decreasing {}, residual {:.1e} (1e-8)",
                s.distance_mid, s.distance_end, s.decreasing, s.collocation_residual
            ),
            None => "no steady analysis".into(),
        },
        pass: steady.is_some_and(|s| s.decreasing && s.distance_end < s.distance_mid && s.collocation_residual <= 1e-8),
    });

    let mut failed = 0;
    for r in &results {
        println!("[{}] {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.id, r.detail);
        failed += usize::from(!r.pass);
    }
    println!("acceptance: {} of {} criteria pass", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
