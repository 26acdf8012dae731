use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use randwalk::cocycles::CocycleKind;
use randwalk::estimators::DEFAULT_BURNIN;
use randwalk::martcouple::{DrivenMartingale, Mode};
use randwalk::measures::AtomicMeasure;
use randwalk::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Simulate,
    Lyapunov,
    Sigma,
    CltRate,
    Asip,
    Contraction,
    Fiber,
    FukNagaev,
    CocycleCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Simulate,
        Experiment::Lyapunov,
        Experiment::Sigma,
        Experiment::CltRate,
        Experiment::Asip,
        Experiment::Contraction,
        Experiment::Fiber,
        Experiment::FukNagaev,
        Experiment::CocycleCheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Lyapunov => "lyapunov",
            Experiment::Sigma => "sigma",
            Experiment::CltRate => "clt_rate",
            Experiment::Asip => "asip",
            Experiment::Contraction => "contraction",
            Experiment::Fiber => "fiber",
            Experiment::FukNagaev => "fuk_nagaev",
            Experiment::CocycleCheck => "cocycle_check",
        }
    }

    /// Whether the experiment walks on a group measure (as opposed to a
    /// driven martingale).
    pub fn uses_measure(self) -> bool {
        !matches!(self, Experiment::Asip | Experiment::FukNagaev)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| config_err("experiment", format!("unknown experiment '{s}'")))
    }
}

pub(crate) fn config_err(field: &str, message: impl Into<String>) -> Error {
    Error::Config { field: field.to_string(), message: message.into() }
}

fn default_cocycle() -> CocycleKind {
    CocycleKind::Norm
}
fn default_replicates() -> usize {
    100
}
fn default_p() -> f64 {
    3.0
}
fn default_mode() -> Mode {
    Mode::L1
}
fn default_burnin() -> usize {
    DEFAULT_BURNIN
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// One named experiment. JSON field names mirror the command line flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub measure: Option<PathBuf>,
    /// Path to a chain-driven martingale, or `rademacher` / `two_regime`.
    #[serde(default)]
    pub martingale: Option<String>,
    #[serde(default = "default_cocycle")]
    pub cocycle: CocycleKind,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_burnin")]
    pub burnin: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Worker threads; `None` uses the global pool.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            measure: None,
            martingale: None,
            cocycle: default_cocycle(),
            n: Vec::new(),
            replicates: default_replicates(),
            seed: 0,
            p: default_p(),
            mode: default_mode(),
            burnin: default_burnin(),
            out: default_out(),
            workers: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_err("config", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Field-level checks that need no file access beyond existence.
    pub fn validate(&self) -> Result<()> {
        if self.n.is_empty() && self.experiment != Experiment::CocycleCheck {
            return Err(config_err("n", "grid must not be empty"));
        }
        if self.n.iter().any(|&n| n == 0) {
            return Err(config_err("n", "grid values must be positive"));
        }
        if self.n.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_err("n", "grid must be strictly increasing"));
        }
        if self.replicates == 0 {
            return Err(config_err("replicates", "must be at least 1"));
        }
        if !(self.p > 2.0 && self.p <= 3.0) {
            return Err(config_err("p", format!("{} is outside (2, 3]", self.p)));
        }
        if self.workers == Some(0) {
            return Err(config_err("workers", "must be at least 1"));
        }
        if self.experiment.uses_measure() {
            match &self.measure {
                None => return Err(config_err("measure", "required for this experiment")),
                Some(p) if !p.is_file() => {
                    return Err(config_err("measure", format!("file not found: {}", p.display())))
                }
                _ => {}
            }
        }
        if let Some(m) = &self.martingale {
            if !matches!(m.as_str(), "rademacher" | "two_regime") && !Path::new(m).is_file() {
                return Err(config_err("martingale", format!("file not found: {m}")));
            }
        }
        match self.experiment {
            Experiment::Asip if self.n.iter().any(|&n| n < 4) => {
                Err(config_err("n", "coupling needs n >= 4"))
            }
            Experiment::Contraction if self.cocycle == CocycleKind::Cartan => {
                Err(config_err("cocycle", "contraction needs a space: norm or iwasawa"))
            }
            _ => Ok(()),
        }
    }

    pub fn load_measure(&self) -> Result<AtomicMeasure> {
        let path = self.measure.as_ref().ok_or_else(|| config_err("measure", "required for this experiment"))?;
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err("measure", format!("cannot read {}: {e}", path.display())))?;
        AtomicMeasure::parse(&text).map_err(|e| config_err("measure", format!("{}: {e}", path.display())))
    }

    pub fn load_martingale(&self) -> Result<DrivenMartingale> {
        match self.martingale.as_deref() {
            None | Some("rademacher") => Ok(DrivenMartingale::rademacher()),
            Some("two_regime") => Ok(DrivenMartingale::two_regime()),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| config_err("martingale", format!("cannot read {path}: {e}")))?;
                DrivenMartingale::parse(&text).map_err(|e| config_err("martingale", format!("{path}: {e}")))
            }
        }
    }

    /// Name shared by every output file of this run.
    pub fn stem(&self) -> String {
        format!("{}_{}", self.experiment, self.seed)
    }
}

/// Parses `64,128,2^10` into a grid.
pub fn parse_grid(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            let v = match t.split_once('^') {
                Some((b, e)) => b
                    .parse::<usize>()
                    .ok()
                    .zip(e.parse::<u32>().ok())
                    .and_then(|(b, e)| b.checked_pow(e)),
                None => t.parse().ok(),
            };
            v.ok_or_else(|| config_err("n", format!("cannot parse '{t}'")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("64, 2^8,1000").unwrap(), vec![64, 256, 1000]);
        assert!(parse_grid("1,x").is_err());
    }

    #[test]
    fn json_defaults_and_unknown_fields() {
        let c = ExperimentConfig::from_json(r#"{"experiment": "asip", "n": [1024]}"#).unwrap();
        assert_eq!(c.p, 3.0);
        assert_eq!(c.mode, Mode::L1);
        assert!(ExperimentConfig::from_json(r#"{"experiment": "asip", "bogus": 1}"#).is_err());
    }

    #[test]
    fn validation_names_fields() {
        let mut c = ExperimentConfig::new(Experiment::Lyapunov);
        c.n = vec![10, 10];
        c.measure = Some("/nonexistent/m.json".into());
        assert!(matches!(c.validate(), Err(Error::Config { field, .. }) if field == "n"));
        c.n = vec![10, 20];
        match c.validate() {
            Err(Error::Config { field, message }) => {
                assert_eq!(field, "measure");
                assert!(message.contains("/nonexistent/m.json"));
            }
            other => panic!("{other:?}"),
        }
    }
}
