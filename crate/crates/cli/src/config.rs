use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use birdcall::enhance::{MabeConfig, Method};
use birdcall::signal::BandSpec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the seed fallback variable.
pub const SEED_ENV: &str = "BIOBENCH_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodSelection {
    One(Method),
    All,
}

impl MethodSelection {
    pub fn methods(self) -> Vec<Method> {
        match self {
            MethodSelection::One(m) => vec![m],
            MethodSelection::All => Method::ALL.to_vec(),
        }
    }
}

impl FromStr for MethodSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(MethodSelection::All);
        }
        s.parse::<Method>()
            .map(MethodSelection::One)
            .map_err(|e| Error::usage(e.to_string()))
    }
}

impl fmt::Display for MethodSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodSelection::One(m) => write!(f, "{m}"),
            MethodSelection::All => f.write_str("all"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MetricId {
    SnrImprovement,
    Isd,
    Jsd,
    Ndb,
    Frechet,
}

impl MetricId {
    pub fn id(self) -> &'static str {
        match self {
            MetricId::SnrImprovement => "snr_improvement",
            MetricId::Isd => "isd",
            MetricId::Jsd => "jsd",
            MetricId::Ndb => "ndb",
            MetricId::Frechet => "frechet",
        }
    }
}

impl FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "snr_improvement" | "snr" => Ok(MetricId::SnrImprovement),
            "isd" => Ok(MetricId::Isd),
            "jsd" => Ok(MetricId::Jsd),
            "ndb" => Ok(MetricId::Ndb),
            "frechet" | "fad" => Ok(MetricId::Frechet),
            _ => Err(Error::usage(format!(
                "unknown metric '{s}' (known: snr_improvement, isd, jsd, ndb, frechet)"
            ))),
        }
    }
}

/// MABE overrides as they appear in a config file; absent fields keep their
/// defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MabeSettings {
    pub bands: Option<Vec<[f64; 2]>>,
    pub weight_floor: Option<f64>,
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    pub snr_lo_db: Option<f64>,
    pub snr_hi_db: Option<f64>,
    pub noise_win_s: Option<f64>,
    pub noise_hop_s: Option<f64>,
    pub spectral_floor_beta: Option<f64>,
    pub normalize_ceiling: Option<f64>,
}

impl MabeSettings {
    pub fn apply(&self, mut cfg: MabeConfig) -> MabeConfig {
        if let Some(b) = &self.bands {
            cfg.bands = b.iter().map(|[lo, hi]| BandSpec::new(*lo, *hi)).collect();
        }
        let fields = [
            (self.weight_floor, &mut cfg.weight_floor),
            (self.alpha_min, &mut cfg.alpha_min),
            (self.alpha_max, &mut cfg.alpha_max),
            (self.snr_lo_db, &mut cfg.snr_lo_db),
            (self.snr_hi_db, &mut cfg.snr_hi_db),
            (self.noise_win_s, &mut cfg.noise_win_s),
            (self.noise_hop_s, &mut cfg.noise_hop_s),
            (self.spectral_floor_beta, &mut cfg.spectral_floor_beta),
            (self.normalize_ceiling, &mut cfg.normalize_ceiling),
        ];
        for (v, slot) in fields {
            if let Some(v) = v {
                *slot = v;
            }
        }
        cfg
    }
}

/// JSON config document. Every field is optional; command-line flags
/// override it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub input_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub method: Option<String>,
    pub mabe: Option<MabeSettings>,
    pub metrics: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    pub method: MethodSelection,
    pub mabe: MabeConfig,
    pub metrics: Vec<MetricId>,
    pub seed: u64,
    pub jobs: usize,
}

impl RunConfig {
    pub fn new(input_dir: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            input_dir: input_dir.into(),
            output_dir: output_dir.into(),
            method: MethodSelection::All,
            mabe: MabeConfig::default(),
            metrics: vec![MetricId::SnrImprovement, MetricId::Isd],
            seed: 0,
            jobs: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.jobs == 0 {
            return Err(Error::usage("jobs must be at least 1"));
        }
        let canon = |p: &Path| p.canonicalize().unwrap_or_else(|_| p.to_path_buf());
        if canon(&self.input_dir) == canon(&self.output_dir) {
            return Err(Error::usage("input and output directories must differ"));
        }
        Ok(())
    }
}

/// Seed precedence: flag, then config file, then `BIOBENCH_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::usage(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

pub fn parse_metrics(ids: &[String]) -> Result<Vec<MetricId>> {
    let mut out: Vec<MetricId> = ids
        .iter()
        .flat_map(|s| s.split(','))
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse())
        .collect::<Result<_>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}
