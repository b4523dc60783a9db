use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::detection::MdbVariant;
use crate::policies::{DEFAULT_BETA, DEFAULT_CONFIDENCE};
use crate::regret::{RegretKind, DEFAULT_CHECKPOINTS};

/// Stationary algorithm usable on its own or as a black box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseAlgorithm {
    Ws,
    Wss,
    Btw,
    Btwr,
}

impl BaseAlgorithm {
    fn as_str(self) -> &'static str {
        match self {
            Self::Ws => "ws",
            Self::Wss => "wss",
            Self::Btw => "btw",
            Self::Btwr => "btwr",
        }
    }
}

/// `btw | btwr | ws | wss | mdb:<base> | detect:<base>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlgorithmKind {
    Plain(BaseAlgorithm),
    Mdb(BaseAlgorithm),
    Detect(BaseAlgorithm),
}

impl FromStr for BaseAlgorithm {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ws" => Ok(Self::Ws),
            "wss" => Ok(Self::Wss),
            "btw" => Ok(Self::Btw),
            "btwr" => Ok(Self::Btwr),
            other => Err(ExperimentError::UnknownAlgorithm(other.to_string())),
        }
    }
}

impl FromStr for AlgorithmKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || ExperimentError::UnknownAlgorithm(s.to_string());
        match s.split_once(':') {
            None => Ok(Self::Plain(s.parse().map_err(|_| unknown())?)),
            Some(("mdb", base)) => Ok(Self::Mdb(base.parse().map_err(|_| unknown())?)),
            Some(("detect", base)) => Ok(Self::Detect(base.parse().map_err(|_| unknown())?)),
            Some(_) => Err(unknown()),
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Plain(b) => f.write_str(b.as_str()),
            Self::Mdb(b) => write!(f, "mdb:{}", b.as_str()),
            Self::Detect(b) => write!(f, "detect:{}", b.as_str()),
        }
    }
}

/// How DETECT picks its running-phase length `T̃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RunningPhase {
    Fixed(u64),
    Rule(RunningPhaseRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunningPhaseRule {
    /// `⌈√T⌉`.
    Sqrt,
    /// The BtW identification formula at `p_min = 1/2 + Δ`.
    BtwBound,
    /// The WS identification formula at `p_min = 1/2 + Δ`.
    WsBound,
}

impl Default for RunningPhase {
    fn default() -> Self {
        Self::Rule(RunningPhaseRule::Sqrt)
    }
}

/// Optional per-algorithm overrides; anything left out is derived from the
/// experiment-level values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmParams {
    /// Gap `Δ` fed to the BtWR round length (defaults to the config's).
    pub gap: Option<f64>,
    /// Confidence `δ` in the BtWR round length (default `1/e`).
    pub confidence: Option<f64>,
    /// WSS exploitation factor (default 1.05).
    pub beta: Option<f64>,
    /// Window length for MDB/DETECT.
    pub window: Option<usize>,
    /// Alarm threshold for MDB/DETECT.
    pub threshold: Option<f64>,
    /// MDB exploration rate.
    pub gamma: Option<f64>,
    /// Log term used to derive MDB's constants.
    pub mdb_variant: Option<MdbVariant>,
    /// Change magnitude the detectors are tuned for (default: `delta_change`).
    pub change: Option<f64>,
    /// DETECT running-phase length.
    pub running_phase: Option<RunningPhase>,
}

impl AlgorithmParams {
    pub fn confidence(&self) -> f64 {
        self.confidence.unwrap_or(DEFAULT_CONFIDENCE)
    }

    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or(DEFAULT_BETA)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub name: String,
    /// Column label in outputs; defaults to `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default)]
    pub params: AlgorithmParams,
}

impl AlgorithmSpec {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            label: None,
            params: AlgorithmParams::default(),
        }
    }

    pub fn with_params(name: &str, params: AlgorithmParams) -> Self {
        Self {
            params,
            ..Self::new(name)
        }
    }

    pub fn kind(&self) -> Result<AlgorithmKind, ExperimentError> {
        self.name.parse()
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.name)
    }
}

/// Instance family to sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// Random matrices with a guaranteed winner change at every changepoint.
    #[default]
    Random,
    /// The hard family used for the weak-regret lower bound.
    LowerBound,
}

/// One or several regret kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RegretKinds {
    One(RegretKind),
    Many(Vec<RegretKind>),
}

impl RegretKinds {
    pub fn to_vec(&self) -> Vec<RegretKind> {
        match self {
            Self::One(k) => vec![*k],
            Self::Many(ks) => ks.clone(),
        }
    }
}

fn default_kinds() -> RegretKinds {
    RegretKinds::One(RegretKind::BINARY_WEAK)
}
fn default_instances() -> usize {
    500
}
fn default_groups() -> usize {
    10
}
fn default_checkpoints() -> usize {
    DEFAULT_CHECKPOINTS
}
fn default_gap() -> f64 {
    0.1
}
fn default_change() -> f64 {
    0.6
}
fn default_output() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "T")]
    pub horizon: u64,
    #[serde(rename = "M")]
    pub segments: usize,
    /// Minimal gap `Δ`.
    #[serde(default = "default_gap")]
    pub delta_cap: f64,
    /// Change `δ` applied to the outgoing winner at each changepoint.
    #[serde(default = "default_change")]
    pub delta_change: f64,
    #[serde(default = "default_kinds", alias = "regret_kinds")]
    pub regret_kind: RegretKinds,
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "default_groups")]
    pub groups: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub generator: Generator,
    /// Lower-bound family gap; defaults to `√(M(K−1)/T)/12`.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Every instance reuses the seed of instance 0.
    #[serde(default)]
    pub fixed_instance: bool,
    pub algorithms: Vec<AlgorithmSpec>,
}

impl ExperimentConfig {
    /// Defaults for everything except the problem size and algorithms.
    pub fn new(k: usize, horizon: u64, segments: usize, algorithms: Vec<AlgorithmSpec>) -> Self {
        Self {
            k,
            horizon,
            segments,
            delta_cap: default_gap(),
            delta_change: default_change(),
            regret_kind: default_kinds(),
            instances: default_instances(),
            groups: default_groups(),
            seed: 0,
            checkpoints: default_checkpoints(),
            output: default_output(),
            generator: Generator::Random,
            epsilon: None,
            fixed_instance: false,
            algorithms,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn regret_kinds(&self) -> Vec<RegretKind> {
        self.regret_kind.to_vec()
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let invalid = |msg: String| Err(ExperimentError::InvalidConfig(msg));
        if self.k < 2 {
            return invalid(format!("K = {} must be >= 2", self.k));
        }
        if self.horizon < 1 {
            return invalid("T must be >= 1".into());
        }
        if self.segments < 1 || self.segments as u64 > self.horizon {
            return invalid(format!("M = {} must lie in 1..=T", self.segments));
        }
        if self.instances == 0 || self.groups == 0 {
            return invalid("instances and groups must be positive".into());
        }
        if !self.instances.is_multiple_of(self.groups) {
            return invalid(format!(
                "instances ({}) must be divisible by groups ({})",
                self.instances, self.groups
            ));
        }
        if self.checkpoints == 0 {
            return invalid("checkpoints must be positive".into());
        }
        if self.regret_kinds().is_empty() {
            return invalid("at least one regret kind is required".into());
        }
        if self.algorithms.is_empty() {
            return invalid("at least one algorithm is required".into());
        }
        match self.generator {
            Generator::Random => {
                if !(self.delta_cap > 0.0 && self.delta_cap < 0.5) {
                    return invalid(format!("delta_cap = {} outside (0, 1/2)", self.delta_cap));
                }
                if self.segments > 1 {
                    if self.k < 2 {
                        return invalid("a winner change needs K >= 2".into());
                    }
                    if self.delta_change < 0.5 + self.delta_cap - 1e-12 || self.delta_change > 1.0 {
                        return invalid(format!(
                            "generator feasibility: delta_change ({}) must satisfy \
                             1/2 + delta_cap ({}) <= delta_change <= 1 so that the new \
                             winner beats the old one by at least 1/2 + delta_cap",
                            self.delta_change,
                            0.5 + self.delta_cap
                        ));
                    }
                }
            }
            Generator::LowerBound => {
                if self.k < 2 {
                    return invalid("lower-bound family needs K >= 2".into());
                }
                if !self.horizon.is_multiple_of(self.segments as u64) {
                    return invalid(format!(
                        "lower-bound family needs T ({}) divisible by M ({})",
                        self.horizon, self.segments
                    ));
                }
                let eps = self.lower_bound_epsilon();
                if !(eps > 0.0 && eps < 0.25) {
                    return invalid(format!("epsilon {eps} outside (0, 1/4)"));
                }
            }
        }
        let mut labels = std::collections::HashSet::new();
        for spec in &self.algorithms {
            let kind = spec.kind()?;
            if !labels.insert(spec.label().to_string()) {
                return invalid(format!("duplicate algorithm label `{}`", spec.label()));
            }
            if let AlgorithmKind::Mdb(_) = kind {
                if self.k < 3 && spec.params.window.is_none() {
                    return invalid("MDB's derived constants need K >= 3".into());
                }
            }
            let p = &spec.params;
            if let Some(g) = p.gap {
                if !(g > 0.0 && g <= 0.5) {
                    return invalid(format!("{}: gap {g} outside (0, 1/2]", spec.label()));
                }
            }
            if let Some(w) = p.window {
                if w < 2 || w % 2 != 0 {
                    return invalid(format!(
                        "{}: window {w} must be even and >= 2",
                        spec.label()
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn lower_bound_epsilon(&self) -> f64 {
        self.epsilon.unwrap_or_else(|| {
            crate::bounds::lower_bound_epsilon(self.k, self.segments, self.horizon)
        })
    }

    /// Applies `key=value` from a sweep.
    pub fn set_value(&mut self, key: &str, value: &str) -> Result<(), ExperimentError> {
        let bad = || ExperimentError::InvalidConfig(format!("cannot set {key} = {value}"));
        let num: f64 = value.trim().parse().map_err(|_| bad())?;
        let int = || -> Result<u64, ExperimentError> {
            if num >= 0.0 && num.fract() == 0.0 {
                Ok(num as u64)
            } else {
                Err(bad())
            }
        };
        match key {
            "K" => self.k = int()? as usize,
            "T" => self.horizon = int()?,
            "M" => self.segments = int()? as usize,
            "delta_cap" => self.delta_cap = num,
            "delta_change" => self.delta_change = num,
            "instances" => self.instances = int()? as usize,
            "groups" => self.groups = int()? as usize,
            "seed" => self.seed = int()?,
            "epsilon" => self.epsilon = Some(num),
            _ => {
                return Err(ExperimentError::InvalidConfig(format!(
                    "unknown sweep key `{key}`"
                )))
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
K = 5
T = 10000
M = 4
delta_cap = 0.1
delta_change = 0.6
regret_kind = "binary_weak"
instances = 20
groups = 10
seed = 7

[[algorithms]]
name = "btwr"

[[algorithms]]
name = "detect:ws"
params = { running_phase = 300 }

[[algorithms]]
name = "mdb:wss"
label = "mdb"
params = { beta = 1.1, running_phase = "sqrt" }
"#;

    #[test]
    fn parses_a_config_file() {
        let cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.k, 5);
        assert_eq!(cfg.regret_kinds(), vec![RegretKind::BINARY_WEAK]);
        assert_eq!(
            cfg.algorithms[1].params.running_phase,
            Some(RunningPhase::Fixed(300))
        );
        assert_eq!(cfg.algorithms[2].label(), "mdb");
        assert_eq!(
            cfg.algorithms[2].kind().unwrap(),
            AlgorithmKind::Mdb(BaseAlgorithm::Wss)
        );
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn algorithm_names() {
        for name in ["btw", "btwr", "ws", "wss", "mdb:ws", "detect:btw"] {
            assert_eq!(name.parse::<AlgorithmKind>().unwrap().to_string(), name);
        }
        for name in ["rucb", "mdb:", "detect:rmed", "foo:ws"] {
            assert!(matches!(
                name.parse::<AlgorithmKind>(),
                Err(ExperimentError::UnknownAlgorithm(_))
            ));
        }
    }

    #[test]
    fn feasibility_rule() {
        let mut cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        cfg.delta_change = 0.55;
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("generator feasibility"), "{err}");
        cfg.segments = 1;
        cfg.validate().unwrap();
    }

    #[test]
    fn structural_checks() {
        let base = ExperimentConfig::from_toml(SAMPLE).unwrap();
        let mut c = base.clone();
        c.instances = 25;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.algorithms.push(AlgorithmSpec::new("rucb"));
        assert!(matches!(
            c.validate(),
            Err(ExperimentError::UnknownAlgorithm(_))
        ));
        let mut c = base.clone();
        c.algorithms.push(AlgorithmSpec::new("btwr"));
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.generator = Generator::LowerBound;
        c.horizon = 10_001;
        assert!(c.validate().is_err());
        assert!(
            ExperimentConfig::from_toml("K = 3\nT = 10\nM = 1\nbogus = 1\nalgorithms = []")
                .is_err()
        );
    }

    #[test]
    fn sweep_values() {
        let mut cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        cfg.set_value("T", "1e5").unwrap();
        assert_eq!(cfg.horizon, 100_000);
        cfg.set_value("delta_cap", "0.2").unwrap();
        assert_eq!(cfg.delta_cap, 0.2);
        assert!(cfg.set_value("T", "1.5").is_err());
        assert!(cfg.set_value("nope", "1").is_err());
    }
}
