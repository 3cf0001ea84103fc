//! Experiment configuration: one serializable record per run, read from TOML or JSON.

use std::path::{Path, PathBuf};

use bvdisp::coefficients::{step_family_on, Coefficient, CoefficientFile, StepCoefficient};
use bvdisp::counterexample::quasimode::BlowupConfig;
use bvdisp::estimates::canonical::{GaussianProblem, PacketProblem, SourceProblem};
use bvdisp::estimates::sweep::FamilySpec;
use bvdisp::estimates::Estimate;
use bvdisp::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputPaths,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    /// Binary space-time field (evolve only).
    pub field: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
pub enum Experiment {
    Resolvent(ResolventJob),
    Evolve(EvolveJob),
    Estimate(EstimateJob),
    Heatlp(HeatJob),
    Counterexample(CounterexampleJob),
    Sweep(SweepJob),
    Accept(AcceptJob),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Resolvent(_) => "resolvent",
            Experiment::Evolve(_) => "evolve",
            Experiment::Estimate(_) => "estimate",
            Experiment::Heatlp(_) => "heatlp",
            Experiment::Counterexample(_) => "counterexample",
            Experiment::Sweep(_) => "sweep",
            Experiment::Accept(_) => "accept",
        }
    }
}

/// Where the coefficient comes from. `family` draws from the seeded step family using the run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "from", rename_all = "lowercase")]
pub enum CoefficientSpec {
    Constant { value: f64 },
    Inline { coefficient: Coefficient },
    File { path: PathBuf },
    Family { n_jumps: usize, tv: f64, m: f64, lo: f64, hi: f64 },
}

impl Default for CoefficientSpec {
    fn default() -> Self {
        CoefficientSpec::Constant { value: 1.0 }
    }
}

impl CoefficientSpec {
    pub fn resolve(&self, seed: u64) -> Result<Coefficient> {
        let c = match self {
            CoefficientSpec::Constant { value } => Coefficient::Step(StepCoefficient::constant(*value)?),
            CoefficientSpec::Inline { coefficient } => coefficient.clone(),
            CoefficientSpec::File { path } => CoefficientFile::load(path)?.coefficient,
            CoefficientSpec::Family { n_jumps, tv, m, lo, hi } => {
                Coefficient::Step(step_family_on(*n_jumps, *tv, *m, seed, *lo, *hi)?)
            }
        };
        c.validate()?;
        Ok(c)
    }

    pub fn resolve_step(&self, seed: u64) -> Result<StepCoefficient> {
        match self.resolve(seed)? {
            Coefficient::Step(s) => Ok(s),
            Coefficient::Sampled(_) => Err(Error::Config("this subcommand needs a step coefficient".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventJob {
    #[serde(default)]
    pub coefficient: CoefficientSpec,
    pub taus: Vec<f64>,
    /// Absorption; defaults to the per-τ rule when absent.
    pub epsilon: Option<f64>,
    pub grid: GridSpec,
    pub source_center: f64,
    pub source_width: f64,
}

impl Default for ResolventJob {
    fn default() -> Self {
        Self {
            coefficient: CoefficientSpec::default(),
            taus: vec![-100.0, -1.0, -0.01, 0.01, 1.0, 100.0],
            epsilon: None,
            grid: GridSpec { lo: -10.0, hi: 10.0, n: 4001 },
            source_center: 0.0,
            source_width: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveJob {
    #[serde(default)]
    pub coefficient: CoefficientSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub periodic: bool,
    pub center: f64,
    pub xi0: f64,
    pub width: f64,
    pub t_max: f64,
    pub n_t: usize,
    pub substeps: Option<usize>,
}

impl Default for EvolveJob {
    fn default() -> Self {
        Self {
            coefficient: CoefficientSpec::default(),
            grid: GridSpec { lo: -16.0, hi: 16.0, n: 512 },
            periodic: false,
            center: -5.0,
            xi0: 3.0,
            width: 0.8,
            t_max: 1.0,
            n_t: 11,
            substeps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EstimateSpec {
    Homogeneous { estimate: Estimate },
    Inhomogeneous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateJob {
    #[serde(default)]
    pub coefficient: CoefficientSpec,
    pub estimate: EstimateSpec,
    /// Packet problem for smoothing and maximal quotients.
    #[serde(default)]
    pub packet: PacketProblem,
    /// Gaussian problem for Strichartz quotients.
    #[serde(default)]
    pub gaussian: GaussianProblem,
    #[serde(default)]
    pub source: SourceProblem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatJob {
    #[serde(default)]
    pub coefficient: CoefficientSpec,
    pub grid: GridSpec,
    pub times: Vec<f64>,
    /// Probe band for the off-diagonal table; bands `k - 3 ..= k + 4` are projected.
    pub probe_band: i32,
}

impl Default for HeatJob {
    fn default() -> Self {
        Self {
            coefficient: CoefficientSpec::default(),
            grid: GridSpec { lo: -20.0, hi: 20.0, n: 1024 },
            times: vec![0.01, 0.1, 1.0],
            probe_band: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleJob {
    pub delta: f64,
    pub n_max: usize,
    pub quasimode_k: (usize, usize),
    pub blowup: Option<BlowupConfig>,
}

impl Default for CounterexampleJob {
    fn default() -> Self {
        Self { delta: bvdisp::counterexample::DEFAULT_DELTA, n_max: 10, quasimode_k: (3, 8), blowup: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepJob {
    pub family: FamilySpec,
    pub estimate: Estimate,
    #[serde(default)]
    pub packet: PacketProblem,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptJob {
    #[serde(default)]
    pub quick: bool,
    /// Criterion numbers to run; empty means all.
    #[serde(default)]
    pub only: Vec<u8>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self { seed: 0, output: OutputPaths::default(), experiment }
    }

    /// TOML for `.toml` files, JSON otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))
        } else {
            Ok(serde_json::from_str(&text)?)
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}
