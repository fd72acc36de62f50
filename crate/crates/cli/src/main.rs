use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use zo_core::estimators::{bias_probe, EstimatorConfig, Perturbation};
use zo_core::geometry::Domain;
use zo_core::harness::{
    dominance_check, emit_plots, fit_rate, lipschitz_diff_moment_check, lower_bound_value, run_point,
    run_sweep, sandwich_report, workers_from_env, write_csv, LowerBoundKind, LowerBoundQuery, SweepConfig,
    XField,
};
use zo_core::harness::sweep::read_csv_file;
use zo_core::problems::make_smooth_quadratic;
use zo_core::smoothing::{moment_diagnostics, SmoothingDistribution, SmoothingKind};
use zo_core::{Result, ZoError};

#[derive(Parser)]
#[command(name = "zo", version, about = "Zero-order stochastic mirror descent experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one grid point of a config and print the run record as JSON.
    Run {
        config: PathBuf,
        /// Grid point index, in (d, T, m, alpha) nesting order.
        #[arg(long, default_value_t = 0)]
        point: usize,
        #[arg(long, default_value_t = 0)]
        replication: usize,
    },
    /// Run the full grid and write the CSV.
    Sweep {
        config: PathBuf,
        /// Output path; overrides `output` in the config. `-` for stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Worker threads; defaults to ZO_WORKERS, then 1.
        #[arg(short, long)]
        workers: Option<usize>,
    },
    /// Monte-Carlo checks of the smoothing and estimator lemmas.
    #[command(subcommand)]
    Diagnose(Diagnose),
    /// Fit the log-log slope of mean gap against T or d.
    Fit {
        csv: PathBuf,
        #[arg(long, default_value = "T")]
        x: XField,
    },
    /// Minimax lower-bound reference value.
    Bound {
        #[arg(long, default_value = "l2")]
        kind: LowerBoundKind,
        #[arg(long)]
        d: usize,
        #[arg(long = "T")]
        t: u64,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, default_value_t = 1.0)]
        l: f64,
        #[arg(long, default_value_t = 1)]
        m: usize,
    },
    /// Lower bound / measured gap / upper bound on the Gaussian linear instance.
    Sandwich {
        config: PathBuf,
        #[arg(short, long)]
        workers: Option<usize>,
    },
    /// Write gnuplot scripts for a sweep CSV.
    Plots {
        csv: PathBuf,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Mc {
    #[arg(long, default_value_t = 1_000_000)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Subcommand)]
enum Diagnose {
    /// Empirical E‖Z‖^k and covariance against the closed forms.
    Moments {
        #[arg(long, value_parser = parse_kind)]
        dist: SmoothingKind,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 2)]
        k: u32,
        #[command(flatten)]
        mc: Mc,
    },
    /// Stochastic dominance of ‖Z₁ + uZ₂‖ over ‖Z₁‖.
    Dominance {
        #[arg(long, value_parser = parse_kind)]
        dist1: SmoothingKind,
        #[arg(long, value_parser = parse_kind)]
        dist2: SmoothingKind,
        #[arg(long)]
        u: f64,
        #[arg(long)]
        d: usize,
        #[command(flatten)]
        mc: Mc,
    },
    /// Normalised moments of |‖Z₁ + uZ₂‖ − ‖Z₁‖| over a u × d grid.
    Lipschitz {
        #[arg(long, default_value_t = 2)]
        k: u32,
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.1,0.02")]
        u: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "4,16,64")]
        d: Vec<usize>,
        #[command(flatten)]
        mc: Mc,
    },
    /// Estimator bias and second moment on ½‖θ‖₂² at θ = e₁.
    Bias {
        #[arg(long, value_parser = parse_kind, default_value = "sphere")]
        dist: SmoothingKind,
        /// Outer distribution; selects the double-smoothed estimator.
        #[arg(long, value_parser = parse_kind)]
        dist2: Option<SmoothingKind>,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        u: f64,
        /// Second smoothing radius for the double-smoothed estimator.
        #[arg(long)]
        u2: Option<f64>,
        #[command(flatten)]
        mc: Mc,
    },
}

fn parse_kind(s: &str) -> std::result::Result<SmoothingKind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown distribution {s:?}; use gaussian, ball, sphere or hypercube"))
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(v).map_err(|e| ZoError::Data(e.to_string()))?;
    println!("{s}");
    Ok(())
}

fn workers(flag: Option<usize>) -> Result<usize> {
    match flag {
        Some(0) => Err(ZoError::Config("--workers must be at least 1".into())),
        Some(n) => Ok(n),
        None => workers_from_env(),
    }
}

fn diagnose(cmd: Diagnose) -> Result<()> {
    match cmd {
        Diagnose::Moments { dist, d, k, mc } => {
            let z = SmoothingDistribution::new(dist, d)?;
            print_json(&moment_diagnostics(&z, k, mc.n, mc.seed)?)
        }
        Diagnose::Dominance { dist1, dist2, u, d, mc } => {
            print_json(&dominance_check(dist1, dist2, u, d, mc.n, mc.seed)?)
        }
        Diagnose::Lipschitz { k, u, d, mc } => print_json(&lipschitz_diff_moment_check(k, &u, &d, mc.n, mc.seed)?),
        Diagnose::Bias { dist, dist2, d, u, u2, mc } => {
            let dom = Domain::l2(2.0, d)?;
            let problem = make_smooth_quadratic(vec![0.0; d], 0.0, dom)?;
            let mut theta = vec![0.0; d];
            theta[0] = 1.0;
            let (est, pert) = match dist2 {
                Some(dist2) => {
                    let u2 = u2.ok_or_else(|| ZoError::Config("--dist2 needs --u2".into()))?;
                    (EstimatorConfig::DoubleSmoothed { dist1: dist, dist2 }, Perturbation::Double(u, u2))
                }
                None => (EstimatorConfig::TwoPoint { dist }, Perturbation::Single(u)),
            };
            print_json(&bias_probe(&problem, &est, &theta, pert, mc.n, mc.seed)?)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Run { config, point, replication } => {
            let cfg = SweepConfig::load(&config)?;
            let points = cfg.grid_points();
            let p = points.get(point).ok_or_else(|| {
                ZoError::Config(format!("--point {point} out of range; the grid has {} points", points.len()))
            })?;
            if replication >= cfg.replications {
                return Err(ZoError::Config(format!(
                    "--replication {replication} out of range; the config has {}",
                    cfg.replications
                )));
            }
            print_json(&run_point(&cfg, p, replication)?)
        }
        Cmd::Sweep { config, output, workers: w } => {
            let cfg = SweepConfig::load(&config)?;
            let rows = run_sweep(&cfg, workers(w)?)?;
            match output.or_else(|| cfg.output.clone()) {
                Some(p) if p.as_os_str() != "-" => {
                    let f = std::fs::File::create(&p)?;
                    write_csv(&rows, std::io::BufWriter::new(f))?;
                    log::info!("wrote {} rows to {}", rows.len(), p.display());
                }
                _ => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    write_csv(&rows, &mut lock)?;
                    lock.flush()?;
                }
            }
            Ok(())
        }
        Cmd::Diagnose(d) => diagnose(d),
        Cmd::Fit { csv, x } => print_json(&fit_rate(&read_csv_file(&csv)?, x)?),
        Cmd::Bound { kind, d, t, q, r, l, m } => {
            let v = lower_bound_value(&LowerBoundQuery { bound: kind, d, t, q, r, l, m })?;
            println!("{v:e}");
            Ok(())
        }
        Cmd::Sandwich { config, workers: w } => {
            let cfg = SweepConfig::load(&config)?;
            print_json(&sandwich_report(&cfg, workers(w)?)?)
        }
        Cmd::Plots { csv, out } => {
            for p in emit_plots(&csv, &out)? {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
