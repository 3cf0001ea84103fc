use std::path::PathBuf;
use std::process::ExitCode;

use bvdisp::counterexample::quasimode::BlowupConfig;
use bvdisp::estimates::calibration::FlatCalibration;
use bvdisp::estimates::sweep::FamilySpec;
use bvdisp::estimates::Estimate;
use bvdisp_cli::config::*;
use bvdisp_cli::{error_record, run};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Worker-count override for the parallel pool.
const WORKERS_ENV: &str = "BVDISP_WORKERS";

#[derive(Parser)]
#[command(name = "bvdisp", version, about = "Dispersive estimates for Schrodinger equations with BV coefficients")]
struct Cli {
    /// Seed for every randomized component.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the CSV table here instead of stdout.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Write the JSON report (with provenance) here.
    #[arg(long, global = true)]
    json: Option<PathBuf>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CoeffArg {
    /// Coefficient file (JSON with `type`, the coefficient fields and `m`); constant 1 if absent.
    #[arg(long)]
    coeff: Option<PathBuf>,
}

impl CoeffArg {
    fn spec(&self) -> CoefficientSpec {
        match &self.coeff {
            Some(path) => CoefficientSpec::File { path: path.clone() },
            None => CoefficientSpec::default(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Smoothing,
    Maximal,
    Strichartz,
    Inhomogeneous,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Uniformity,
    Control,
}

#[derive(Subcommand)]
enum Command {
    /// Certified resolvent quotients over a list of τ.
    Resolvent {
        #[command(flatten)]
        coeff: CoeffArg,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        tau: Vec<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Crank-Nicolson evolution of a wave packet.
    Evolve {
        #[command(flatten)]
        coeff: CoeffArg,
        #[arg(long, default_value_t = 1.0)]
        t_max: f64,
        #[arg(long, default_value_t = 11)]
        n_t: usize,
        #[arg(long)]
        substeps: Option<usize>,
        /// Binary field output (a JSON sidecar is written next to it).
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// One estimate quotient, compared with the flat calibration when one exists.
    Estimate {
        #[command(flatten)]
        coeff: CoeffArg,
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        s: f64,
        #[arg(long, default_value_t = 8.0)]
        p: f64,
        /// Use `inf` for q = ∞.
        #[arg(long, default_value_t = 4.0)]
        q: f64,
        /// Besov-valued Strichartz norm.
        #[arg(long, conflicts_with = "lebesgue")]
        besov: bool,
        /// Plain Lebesgue Strichartz norm (the default).
        #[arg(long)]
        lebesgue: bool,
    },
    /// Heat-kernel Gaussian fits and off-diagonal projector decay.
    Heatlp {
        #[command(flatten)]
        coeff: CoeffArg,
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.1,1")]
        times: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        probe_band: i32,
    },
    /// Hill profile, singular metric, quasimodes and the blow-up table.
    Counterexample {
        #[arg(long, default_value_t = bvdisp::counterexample::DEFAULT_DELTA)]
        delta: f64,
        #[arg(long, default_value_t = 10)]
        n_max: usize,
        /// Also run the blow-up evolution up to this scale.
        #[arg(long)]
        blowup_k_max: Option<usize>,
    },
    /// Quotients over a seeded coefficient family.
    Sweep {
        #[arg(long, value_enum, default_value = "uniformity")]
        family: Family,
        #[arg(long, value_enum, default_value = "smoothing")]
        kind: Kind,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        s: f64,
    },
    /// Run the acceptance criteria; exits nonzero on any failure.
    Accept {
        #[arg(long)]
        quick: bool,
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
    /// Run a configuration file (TOML or JSON).
    Run { config: PathBuf },
    /// Recompute the flat calibration file.
    Calibrate { out: PathBuf },
}

fn homogeneous(kind: Kind, s: f64, p: f64, q: f64, besov: bool) -> EstimateSpec {
    let estimate = match kind {
        Kind::Smoothing => Estimate::Smoothing { s },
        Kind::Maximal => Estimate::Maximal { s },
        Kind::Strichartz => Estimate::Strichartz { p, q, besov },
        Kind::Inhomogeneous => return EstimateSpec::Inhomogeneous,
    };
    EstimateSpec::Homogeneous { estimate }
}

fn build_config(cli: &Cli) -> bvdisp::Result<Option<ExperimentConfig>> {
    let experiment = match &cli.command {
        Command::Run { config } => {
            let mut c = ExperimentConfig::load(config)?;
            if cli.csv.is_some() {
                c.output.csv = cli.csv.clone();
            }
            if cli.json.is_some() {
                c.output.json = cli.json.clone();
            }
            return Ok(Some(c));
        }
        Command::Calibrate { .. } => return Ok(None),
        Command::Resolvent { coeff, tau, epsilon } => {
            let mut job = ResolventJob { coefficient: coeff.spec(), epsilon: *epsilon, ..ResolventJob::default() };
            if !tau.is_empty() {
                job.taus = tau.clone();
            }
            Experiment::Resolvent(job)
        }
        Command::Evolve { coeff, t_max, n_t, substeps, .. } => Experiment::Evolve(EvolveJob {
            coefficient: coeff.spec(),
            t_max: *t_max,
            n_t: *n_t,
            substeps: *substeps,
            ..EvolveJob::default()
        }),
        Command::Estimate { coeff, kind, s, p, q, besov, .. } => Experiment::Estimate(EstimateJob {
            coefficient: coeff.spec(),
            estimate: homogeneous(*kind, *s, *p, *q, *besov),
            packet: Default::default(),
            gaussian: Default::default(),
            source: Default::default(),
        }),
        Command::Heatlp { coeff, times, probe_band } => Experiment::Heatlp(HeatJob {
            coefficient: coeff.spec(),
            times: times.clone(),
            probe_band: *probe_band,
            ..HeatJob::default()
        }),
        Command::Counterexample { delta, n_max, blowup_k_max } => Experiment::Counterexample(CounterexampleJob {
            delta: *delta,
            n_max: *n_max,
            blowup: blowup_k_max.map(|k| BlowupConfig { k_max: k, ..BlowupConfig::default() }),
            ..CounterexampleJob::default()
        }),
        Command::Sweep { family, kind, s } => {
            let estimate = match homogeneous(*kind, *s, 8.0, 4.0, false) {
                EstimateSpec::Homogeneous { estimate } => estimate,
                EstimateSpec::Inhomogeneous => {
                    return Err(bvdisp::Error::Config("sweeps take a homogeneous estimate".into()));
                }
            };
            let family = match family {
                Family::Uniformity => FamilySpec::uniformity(),
                Family::Control => FamilySpec::control(),
            };
            Experiment::Sweep(SweepJob { family: FamilySpec { seed: family.seed.wrapping_add(cli.seed), ..family }, estimate, packet: Default::default() })
        }
        Command::Accept { quick, only } => Experiment::Accept(AcceptJob { quick: *quick, only: only.clone() }),
    };
    let mut config = ExperimentConfig::new(experiment);
    config.seed = cli.seed;
    config.output = OutputPaths {
        csv: cli.csv.clone(),
        json: cli.json.clone(),
        field: match &cli.command {
            Command::Evolve { field, .. } => field.clone(),
            _ => None,
        },
    };
    Ok(Some(config))
}

fn fail(e: &bvdisp::Error) -> ExitCode {
    eprintln!("{}", error_record(e));
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    if let Command::Calibrate { out } = &cli.command {
        return match FlatCalibration::compute().and_then(|c| c.save(out)) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(&e),
        };
    }
    let config = match build_config(&cli) {
        Ok(Some(c)) => c,
        Ok(None) => return ExitCode::SUCCESS,
        Err(e) => return fail(&e),
    };
    if cli.print_config {
        return match config.to_toml() {
            Ok(t) => {
                print!("{t}");
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        };
    }
    match run(&config) {
        Ok(out) => {
            if let Some(t) = &out.summary {
                eprint!("{t}");
            }
            if config.output.csv.is_none() {
                print!("{}", out.csv);
            }
            eprintln!("config sha256 {}", out.provenance.config_sha256);
            if out.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => fail(&e),
    }
}
