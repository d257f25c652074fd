use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Which experiment `run` dispatches to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Simulate,
    Returns,
    MassProfile,
    Occupation,
    SdCheck,
    CounterexampleMass,
    CounterexampleEmpirical,
    Lyapunov,
    DriftEval,
    DriftCheck,
    Equidistribute,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Simulate => "simulate",
            Kind::Returns => "returns",
            Kind::MassProfile => "mass-profile",
            Kind::Occupation => "occupation",
            Kind::SdCheck => "sd-check",
            Kind::CounterexampleMass => "counterexample-mass",
            Kind::CounterexampleEmpirical => "counterexample-empirical",
            Kind::Lyapunov => "lyapunov",
            Kind::DriftEval => "drift-eval",
            Kind::DriftCheck => "drift-check",
            Kind::Equidistribute => "equidistribute",
        }
    }
}

/// State space the chain experiments run on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// `x -> max(0, x + Z)` on the integers.
    Reflected,
    /// `x -> x + shift` on the reals.
    Translation,
    /// The matrix walk on lattices with `f = f_A`.
    Lattice,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainSection {
    pub model: Model,
    /// Atoms of the increment law `Z`.
    pub increments: Vec<f64>,
    /// Weights of `increments`; empty means uniform.
    pub weights: Vec<f64>,
    pub shift: f64,
    pub x0: f64,
    /// `K = {f <= r0}`.
    pub r0: f64,
    pub steps: usize,
    /// Atoms of the uniform laws `Z_0` (inside `K`) and `Z_1` (outside).
    pub z0: Vec<f64>,
    /// Empty means the increment law of the model.
    pub z1: Vec<f64>,
}

impl Default for ChainSection {
    fn default() -> Self {
        Self {
            model: Model::Reflected,
            increments: vec![-2.0, 1.0],
            weights: Vec::new(),
            shift: -1.0,
            x0: 20.0,
            r0: 1.0,
            steps: 1000,
            z0: vec![1.0],
            z1: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub trials: usize,
    pub horizon: usize,
    /// Times for tail and mass profiles.
    pub n: Vec<usize>,
    /// Levels `R`.
    pub r: Vec<f64>,
    /// Probe states; empty means `[x0]` (or `[r0]` inside `K`).
    pub probes: Vec<f64>,
    pub alpha: f64,
    /// Normal quantile for reported bands.
    pub z: f64,
    pub confidence: f64,
    pub max_window: usize,
    /// Relative slack of the Foster bound.
    pub slack: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            trials: 10_000,
            horizon: 1000,
            n: (1..=20).map(|k| 10 * k).collect(),
            r: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
            probes: Vec::new(),
            alpha: 0.05,
            z: 3.0,
            confidence: 0.99,
            max_window: 500,
            slack: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSection {
    pub levels: usize,
    pub first_jump: u64,
    pub growth: u64,
    pub min_confidence: f64,
    pub trials: usize,
    pub r: f64,
    pub demo_trials: usize,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self { levels: 3, first_jump: 1, growth: 10, min_confidence: 0.99, trials: 10_000, r: 10.0, demo_trials: 100_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmpiricalSection {
    pub epsilon: f64,
    pub r: f64,
    pub horizon: usize,
    pub trials: usize,
    /// The run passes when at least this share of trajectories is detected.
    pub min_found: f64,
}

impl Default for EmpiricalSection {
    fn default() -> Self {
        Self { epsilon: 0.5, r: 2.0, horizon: 100_000, trials: 100, min_found: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalkSection {
    pub d: usize,
    /// Shear of the elementary unipotents.
    pub s: f64,
    /// Measure file (blocks of rows and `weight=` lines); overrides `d`, `s`.
    pub measure: Option<PathBuf>,
    /// Starting lattice file; default `Z^d`.
    pub x0: Option<PathBuf>,
    /// `lambda^(i)`; estimated when empty.
    pub exponents: Vec<f64>,
    pub lyapunov_steps: usize,
    pub lyapunov_trials: usize,
    pub steps: usize,
    pub r: Vec<f64>,
}

impl Default for WalkSection {
    fn default() -> Self {
        Self {
            d: 2,
            s: 2f64.powf(0.25),
            measure: None,
            x0: None,
            exponents: Vec::new(),
            lyapunov_steps: 20_000,
            lyapunov_trials: 16,
            steps: 100_000,
            r: vec![0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftSection {
    pub a: f64,
    pub a0: f64,
    pub n: usize,
    /// Decrease rate; `None` is half the smallest exponent.
    pub lambda: Option<f64>,
    pub lattices: usize,
    pub trials: usize,
    /// Depth range of sampled high lattices.
    pub t_min: f64,
    pub t_max: f64,
    pub min_fraction: f64,
    pub m: usize,
    pub variation_samples: usize,
}

impl Default for DriftSection {
    fn default() -> Self {
        Self {
            a: 1.0,
            a0: 40.0,
            n: 50,
            lambda: None,
            lattices: 200,
            trials: 500,
            t_min: 7.0,
            t_max: 12.0,
            min_fraction: 0.9,
            m: 5,
            variation_samples: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquidistributionSection {
    pub steps: usize,
    pub trials: usize,
    pub radius: f64,
    pub tolerance: f64,
}

impl Default for EquidistributionSection {
    fn default() -> Self {
        Self { steps: 100_000, trials: 10, radius: 1.0, tolerance: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<Kind>,
    pub seed: u64,
    /// Output directory; `--out` takes precedence. Not part of the hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub chain: ChainSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub empirical: EmpiricalSection,
    #[serde(default)]
    pub walk: WalkSection,
    #[serde(default)]
    pub drift: DriftSection,
    #[serde(default)]
    pub equidistribution: EquidistributionSection,
}

impl ExperimentConfig {
    /// Defaults for every section.
    pub fn with_seed(seed: u64) -> Self {
        Self {
            kind: None,
            seed,
            out: None,
            chain: ChainSection::default(),
            grid: GridSection::default(),
            schedule: ScheduleSection::default(),
            empirical: EmpiricalSection::default(),
            walk: WalkSection::default(),
            drift: DriftSection::default(),
            equidistribution: EquidistributionSection::default(),
        }
    }

    /// Parse, with `seed_override` replacing (or supplying) the seed.
    pub fn parse_with(text: &str, seed_override: Option<u64>) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| config_error(text, &e))?;
        if let Some(seed) = seed_override {
            let seed = i64::try_from(seed).map_err(|_| Error::Config { line: None, message: "seed exceeds 2^63 - 1".into() })?;
            table.insert("seed".into(), toml::Value::Integer(seed));
        }
        if !table.contains_key("seed") {
            return Err(Error::Config { line: Some(text.lines().count().max(1)), message: "missing key `seed`".into() });
        }
        let cfg: Self = table.try_into().map_err(|e: toml::de::Error| {
            // spans refer to the re-serialised table, so locate the key in the source
            let line = e.message().split('`').nth(1).and_then(|key| key_line(text, key));
            Error::Config { line, message: e.message().trim().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config { line: None, message: format!("cannot read {}: {e}", path.display()) })?;
        Self::parse_with(&text, seed_override)
    }

    pub fn render(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// SHA-256 of the rendered config without `out`, hex.
    pub fn hash(&self) -> String {
        let canonical = Self { out: None, ..self.clone() };
        Sha256::digest(canonical.render().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    fn validate(&self) -> Result<()> {
        for path in [&self.walk.measure, &self.walk.x0].into_iter().flatten() {
            if !path.exists() {
                return Err(Error::Config { line: None, message: format!("file not found: {}", path.display()) });
            }
        }
        let probability = |name: &str, v: f64, closed: bool| {
            if v > 0.0 && (v < 1.0 || closed && v == 1.0) {
                Ok(())
            } else {
                Err(Error::Config { line: None, message: format!("{name} must lie in (0,1), got {v}") })
            }
        };
        probability("grid.alpha", self.grid.alpha, false)?;
        probability("grid.confidence", self.grid.confidence, false)?;
        probability("empirical.epsilon", self.empirical.epsilon, true)?;
        if self.grid.trials == 0 || self.grid.n.is_empty() || self.grid.r.is_empty() {
            return Err(Error::Config { line: None, message: "grid needs trials >= 1 and non-empty n and r".into() });
        }
        Ok(())
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse_with(s, None)
    }
}

fn config_error(text: &str, e: &toml::de::Error) -> Error {
    let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
    Error::Config { line, message: e.message().trim().to_string() }
}

/// First line assigning `key`, or the header of section `key`.
fn key_line(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim();
        l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
            || l.trim_start_matches('[').trim_end_matches(']') == key
    })
    .map(|i| i + 1)
}
