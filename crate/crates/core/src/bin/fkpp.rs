use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use fkpp::config::{resolve_output, ExperimentConfig, OUTPUT_ROOT_ENV};
use fkpp::experiment::{analyze_and_write, report_run, run_experiment, AnalyzeOptions};
use fkpp::kernel::{eval_kernel_profile, fit_tail, kernel_gradient_tail, TailLaw};

#[derive(Parser)]
#[command(name = "fkpp", version, about = "Fractional Fisher-KPP simulations and diagnostics")]
struct Cli {
    /// Root for relative output directories.
    #[arg(long, global = true, env = OUTPUT_ROOT_ENV)]
    output_root: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Analyze and report right after the run.
        #[arg(long)]
        analyze: bool,
    },
    /// Tabulate the stable heat-kernel profile at t = 1 and fit its tail.
    Kernel {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 1000.0)]
        r_max: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Tail window lower edge; defaults to r_max/10.
        #[arg(long)]
        tail_lo: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute diagnostics, level sets and reductions from snapshots.
    Analyze {
        dir: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        levels: Option<Vec<f64>>,
    },
    /// Write per-criterion verdicts and a long-format series table.
    Report { dir: PathBuf },
}

#[derive(Serialize)]
struct KernelReport {
    alpha: f64,
    dim: usize,
    expected_exponent: f64,
    tail: TailLaw,
    tail_window: (f64, f64),
    gradient_exponent: f64,
    gradient_window: (f64, f64),
    mass: f64,
}

fn kernel_command(alpha: f64, dim: usize, r_max: f64, samples: usize, tail_lo: Option<f64>, out: &Path) -> fkpp::Result<()> {
    let profile = eval_kernel_profile(alpha, dim, r_max, samples)?;
    let window = (tail_lo.unwrap_or(0.1 * r_max), r_max);
    let tail = fit_tail(&profile, window.0, window.1)?;
    let gradient_window = (window.0, window.0 * 4.0);
    let report = KernelReport {
        alpha,
        dim,
        expected_exponent: dim as f64 + alpha,
        tail,
        tail_window: window,
        gradient_exponent: kernel_gradient_tail(alpha, dim, gradient_window)?,
        gradient_window,
        mass: profile.total_mass(),
    };
    fs::create_dir_all(out)?;
    profile.write_csv(BufWriter::new(fs::File::create(out.join("kernel.csv"))?))?;
    fs::write(out.join("kernel_tail.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    println!(
        "alpha = {alpha}, dim = {dim}: tail exponent {:.4} (expected {}), gradient exponent {:.4}",
        report.tail.exponent, report.expected_exponent, report.gradient_exponent
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let root = cli.output_root.clone();
    let result = match cli.command {
        Command::Run { config, analyze } => ExperimentConfig::from_path(&config).and_then(|cfg| {
            let out = resolve_output(&cfg.output_dir, root);
            let m = run_experiment(&cfg, &out)?;
            println!(
                "{}: stopped at t = {} ({:?}) after {} steps; outputs in {}",
                m.name,
                m.t_stop,
                m.stop_reason,
                m.steps,
                out.display()
            );
            if analyze {
                analyze_and_write(&out, &AnalyzeOptions::default())?;
                let v = report_run(&out)?;
                println!("all criteria pass: {}", v.all_pass);
            }
            Ok(())
        }),
        Command::Kernel {
            alpha,
            dim,
            r_max,
            samples,
            tail_lo,
            out,
        } => {
            let out = resolve_output(&out.unwrap_or_else(|| PathBuf::from(format!("kernel_a{alpha}_d{dim}"))), root);
            kernel_command(alpha, dim, r_max, samples, tail_lo, &out)
        }
        Command::Analyze { dir, levels } => analyze_and_write(&dir, &AnalyzeOptions { levels }).map(|a| {
            for n in &a.notes {
                eprintln!("note: {n}");
            }
            println!("analyzed {} snapshots up to t = {}", a.snapshots, a.t_last);
        }),
        Command::Report { dir } => report_run(&dir).map(|v| {
            for c in &v.criteria {
                println!(
                    "[{}] {} ({}): measured {}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.id,
                    c.criterion,
                    c.measured.map_or("n/a".to_string(), |m| format!("{m:.6}"))
                );
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
