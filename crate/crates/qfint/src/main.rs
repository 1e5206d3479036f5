use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use qfint::apps::FeasBackend;
use qfint::cli::{
    self, AlphaSpec, BuildPotentialOpts, EdgeSource, FeasibilityOpts, IntegrateOpts, OracleAction,
    OracleOpts,
};
use qfint::model::Mode;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "qfint",
    version,
    about = "Deterministic Gaussian averages of products of quadratic forms",
    after_help = "Exit codes: 0 ok, 1 usage, 2 admissibility failure, 3 bad input, \
4 budget exceeded, 5 oracle guard, 6 normalization violation."
)]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Bound ½‖Q_k‖ ≤ γ′/r with r the locality parameter.
    Local,
    /// Bound ½‖Q_k‖ ≤ γ′/max{m, n}.
    Uniform,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Local => Mode::Local,
            ModeArg::Uniform => Mode::Uniform,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    /// Certified interpolation (requires admissibility).
    Interp,
    /// Exact finite evaluation (m ≤ 6).
    Oracle,
    /// Seeded Monte Carlo.
    Mc,
}

#[derive(Subcommand)]
enum Cmd {
    /// Certified estimate of the Gaussian average of ∏(1 + q_k).
    Integrate {
        /// Instance file (JSON triplet format).
        #[arg(long)]
        instance: PathBuf,
        /// Target relative error in (0, 1).
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        /// Constant γ′ in (0, γ ≈ 0.1516).
        #[arg(long = "gamma-prime", default_value_t = 0.05)]
        gamma_prime: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Local)]
        mode: ModeArg,
        /// Cap on enumerated collections before giving up.
        #[arg(long = "max-collections", default_value_t = 100_000_000)]
        max_collections: u64,
        /// Worker threads (default: QFINT_THREADS or all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Exact evaluation, Monte Carlo, or zero scans for tiny instances.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        /// Evaluate p(ω) at the complex point RE + IM·i (m ≤ 6).
        #[arg(long, num_args = 2, value_names = ["RE", "IM"], allow_negative_numbers = true)]
        omega: Option<Vec<f64>>,
        /// Monte Carlo estimate of p(1) with this many samples.
        #[arg(long)]
        mc: Option<u64>,
        /// Seed for --mc.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Scan min |p(ω)| over the polar grid of the given RADIUS and GRID.
        #[arg(long = "zero-scan", num_args = 2, value_names = ["RADIUS", "GRID"])]
        zero_scan: Option<Vec<String>>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Write an instance file for a mollified log-potential point system.
    BuildPotential {
        /// Point dimension.
        #[arg(long)]
        d: usize,
        /// Number of points.
        #[arg(long)]
        points: usize,
        /// "complete" or a path to an edge list (1-based "i j" lines).
        #[arg(long)]
        edges: String,
        /// Pair strength: a number, or "auto" for the admissibility maximum.
        #[arg(long)]
        alpha: String,
        /// Write the instance here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "gamma-prime", default_value_t = 0.05)]
        gamma_prime: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Local)]
        mode: ModeArg,
    },
    /// Feasibility score for a normalized system q_k(x) = 1.
    Feasibility {
        #[arg(long)]
        instance: PathBuf,
        /// Scaling applied to the forms before integrating.
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[arg(long = "gamma-prime", default_value_t = 0.05)]
        gamma_prime: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Local)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = BackendArg::Interp)]
        backend: BackendArg,
        /// Samples for --backend mc.
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        /// Seed for --backend mc.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn configure_threads(flag: Option<usize>) {
    let from_env = || {
        std::env::var("QFINT_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
    };
    if let Some(t) = flag.or_else(from_env) {
        if t >= 1 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
        }
    }
}

fn usage_error(msg: &str) -> i32 {
    eprintln!("error: {msg}");
    cli::EXIT_USAGE
}

fn run(cmd: Cmd) -> i32 {
    match cmd {
        Cmd::Integrate {
            instance,
            epsilon,
            gamma_prime,
            mode,
            max_collections,
            threads,
        } => {
            configure_threads(threads);
            cli::cmd_integrate(&IntegrateOpts {
                instance,
                epsilon,
                gamma_prime,
                mode: mode.into(),
                max_collections,
            })
        }
        Cmd::Oracle {
            instance,
            omega,
            mc,
            seed,
            zero_scan,
            threads,
        } => {
            configure_threads(threads);
            let chosen = usize::from(omega.is_some())
                + usize::from(mc.is_some())
                + usize::from(zero_scan.is_some());
            if chosen != 1 {
                return usage_error(
                    "oracle needs exactly one of --omega RE IM, --mc SAMPLES, --zero-scan RADIUS GRID",
                );
            }
            let action = if let Some(parts) = omega {
                OracleAction::Value {
                    re: parts[0],
                    im: parts[1],
                }
            } else if let Some(samples) = mc {
                if samples < 2 {
                    return usage_error("--mc needs at least 2 samples");
                }
                OracleAction::Mc { samples, seed }
            } else {
                let parts = zero_scan.unwrap();
                let radius = match parts[0].parse::<f64>() {
                    Ok(r) => r,
                    Err(e) => return usage_error(&format!("bad RADIUS: {e}")),
                };
                let grid = match parts[1].parse::<usize>() {
                    Ok(g) => g,
                    Err(e) => return usage_error(&format!("bad GRID: {e}")),
                };
                OracleAction::ZeroScan { radius, grid }
            };
            cli::cmd_oracle(&OracleOpts { instance, action })
        }
        Cmd::BuildPotential {
            d,
            points,
            edges,
            alpha,
            out,
            gamma_prime,
            mode,
        } => {
            let edges = if edges == "complete" {
                EdgeSource::Complete
            } else {
                EdgeSource::File(PathBuf::from(edges))
            };
            let alpha = if alpha == "auto" {
                AlphaSpec::Auto
            } else {
                match alpha.parse::<f64>() {
                    Ok(a) => AlphaSpec::Value(a),
                    Err(e) => return usage_error(&format!("bad --alpha: {e}")),
                }
            };
            cli::cmd_build_potential(&BuildPotentialOpts {
                d,
                points,
                edges,
                alpha,
                out,
                gamma_prime,
                mode: mode.into(),
            })
        }
        Cmd::Feasibility {
            instance,
            alpha,
            epsilon,
            gamma_prime,
            mode,
            backend,
            samples,
            seed,
            threads,
        } => {
            configure_threads(threads);
            if matches!(backend, BackendArg::Mc) && samples < 2 {
                return usage_error("--samples must be at least 2");
            }
            let backend = match backend {
                BackendArg::Interp => FeasBackend::Interp,
                BackendArg::Oracle => FeasBackend::Oracle,
                BackendArg::Mc => FeasBackend::Mc { samples, seed },
            };
            cli::cmd_feasibility(&FeasibilityOpts {
                instance,
                alpha,
                epsilon,
                gamma_prime,
                mode: mode.into(),
                backend,
            })
        }
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => cli::EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    ExitCode::from(run(args.cmd) as u8)
}
