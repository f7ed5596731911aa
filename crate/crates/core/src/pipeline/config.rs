//! Experiment configuration and its `key = value` text form.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::Technique;
use crate::cfr::log_spaced;
use crate::efg::Player;
use crate::gadget::PriorKind;
use crate::games::{GameSpec, Selector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {0}: expected `key = value`")]
    Syntax(usize),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{0}`: `{1}`")]
    Value(String, String),
    #[error("missing `{0}`")]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum BlueprintSource {
    /// Average CFR+ profiles at increasing iteration counts.
    CfrCheckpoints { iterations: Vec<usize> },
    /// Independent Dirichlet(1) draws at every infoset.
    Dirichlet { count: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolverKind {
    Lp,
    Cfr { iterations: usize },
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverKind::Lp => f.write_str("lp"),
            SolverKind::Cfr { iterations } => write!(f, "cfr+{iterations}"),
        }
    }
}

impl FromStr for SolverKind {
    type Err = ConfigError;

    /// `lp`, `cfr` / `cfr+` (5000 iterations) or `cfr+<iterations>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        if t == "lp" {
            return Ok(SolverKind::Lp);
        }
        let rest = t
            .strip_prefix("cfr+")
            .or_else(|| t.strip_prefix("cfr"))
            .ok_or_else(|| ConfigError::Value("solver".into(), s.to_string()))?;
        let iterations = if rest.is_empty() {
            DEFAULT_ITERS
        } else {
            rest.parse()
                .map_err(|_| ConfigError::Value("solver".into(), s.to_string()))?
        };
        Ok(SolverKind::Cfr { iterations })
    }
}

pub const DEFAULT_ITERS: usize = 5000;
pub const DEFAULT_EPSILON: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub game: GameSpec,
    pub blueprints: BlueprintSource,
    pub selector: Selector,
    pub techniques: Vec<Technique>,
    pub priors: Vec<PriorKind>,
    pub solver: SolverKind,
    pub epsilon: f64,
    pub resolver: Player,
    /// Record wall time; off keeps the CSV byte-identical across runs.
    pub timing: bool,
    /// Also evaluate each subgame overwritten on its own.
    pub per_subgame: bool,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(game: GameSpec) -> Self {
        ExperimentConfig {
            game,
            blueprints: BlueprintSource::Dirichlet { count: 1, seed: 0 },
            selector: Selector::Depth(1),
            techniques: vec![Technique::Resolve],
            priors: PriorKind::ALL.to_vec(),
            solver: SolverKind::Lp,
            epsilon: DEFAULT_EPSILON,
            resolver: Player::P1,
            timing: false,
            per_subgame: false,
            out: None,
        }
    }

    /// Builds a configuration from `(key, value)` pairs; later pairs win.
    ///
    /// Keys: `game`, `blueprints` (`dirichlet` | `cfr-checkpoints`), `count`,
    /// `seed`, `checkpoints` (comma list), `max-iteration`, `depth`,
    /// `selector`, `technique`, `prior` (comma lists), `solver`, `iters`,
    /// `eps`, `resolver`, `timing`, `per-subgame`, `out`.
    pub fn from_pairs<'a>(
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, ConfigError> {
        let mut game = None;
        let mut source = String::from("dirichlet");
        let mut count = None;
        let mut seed = 0u64;
        let mut checkpoints: Option<Vec<usize>> = None;
        let mut max_iteration = 1usize << 14;
        let mut selector = Selector::Depth(1);
        let mut techniques = vec![Technique::Resolve];
        let mut priors = PriorKind::ALL.to_vec();
        let mut solver = String::from("lp");
        let mut iters = DEFAULT_ITERS;
        let mut epsilon = DEFAULT_EPSILON;
        let mut resolver = Player::P1;
        let mut timing = false;
        let mut per_subgame = false;
        let mut out = None;
        for (key, value) in pairs {
            let bad = || ConfigError::Value(key.to_string(), value.to_string());
            let value = value.trim();
            match key.trim().replace('_', "-").as_str() {
                "game" => game = Some(value.parse::<GameSpec>().map_err(|_| bad())?),
                "blueprints" => source = value.to_ascii_lowercase(),
                "count" => count = Some(value.parse().map_err(|_| bad())?),
                "seed" => seed = value.parse().map_err(|_| bad())?,
                "checkpoints" => checkpoints = Some(parse_list(value).map_err(|_| bad())?),
                "max-iteration" => max_iteration = value.parse().map_err(|_| bad())?,
                "depth" => selector = Selector::Depth(value.parse().map_err(|_| bad())?),
                "selector" => selector = value.parse().map_err(|_| bad())?,
                "technique" | "techniques" => techniques = parse_list(value)?,
                "prior" | "priors" => priors = parse_list(value).map_err(|_| bad())?,
                "solver" => solver = value.to_string(),
                "iters" => iters = value.parse().map_err(|_| bad())?,
                "eps" | "epsilon" => epsilon = value.parse().map_err(|_| bad())?,
                "resolver" => {
                    resolver = match value {
                        "1" => Player::P1,
                        "2" => Player::P2,
                        _ => return Err(bad()),
                    }
                }
                "timing" => timing = value.parse().map_err(|_| bad())?,
                "per-subgame" => per_subgame = value.parse().map_err(|_| bad())?,
                "out" => out = Some(PathBuf::from(value)),
                other => return Err(ConfigError::UnknownKey(other.to_string())),
            }
        }
        let blueprints = match source.as_str() {
            "dirichlet" => BlueprintSource::Dirichlet {
                count: count.unwrap_or(1),
                seed,
            },
            "cfr-checkpoints" | "cfr" => BlueprintSource::CfrCheckpoints {
                iterations: checkpoints
                    .unwrap_or_else(|| log_spaced(count.unwrap_or(25), max_iteration)),
            },
            other => return Err(ConfigError::Value("blueprints".into(), other.to_string())),
        };
        // `iters` applies unless the solver names its own count (`cfr+N`)
        let solver = match solver.trim().to_ascii_lowercase().as_str() {
            "cfr" | "cfr+" => SolverKind::Cfr { iterations: iters },
            other => other.parse()?,
        };
        let config = ExperimentConfig {
            game: game.ok_or(ConfigError::Missing("game"))?,
            blueprints,
            selector,
            techniques,
            priors,
            solver,
            epsilon,
            resolver,
            timing,
            per_subgame,
            out,
        };
        config.validate()?;
        Ok(config)
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax(i + 1))?;
            pairs.push((k.trim(), v.trim()));
        }
        Self::from_pairs(pairs)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.techniques.is_empty() {
            return Err(ConfigError::Invalid(
                "at least one technique is required".into(),
            ));
        }
        if self.techniques.iter().any(|t| t.uses_prior()) && self.priors.is_empty() {
            return Err(ConfigError::Invalid(
                "at least one prior is required".into(),
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(ConfigError::Invalid(format!(
                "epsilon {} outside (0, 1)",
                self.epsilon
            )));
        }
        if let SolverKind::Cfr { iterations: 0 } = self.solver {
            return Err(ConfigError::Invalid(
                "solver iterations must be positive".into(),
            ));
        }
        match &self.blueprints {
            BlueprintSource::Dirichlet { count: 0, .. } => Err(ConfigError::Invalid(
                "blueprint count must be positive".into(),
            )),
            BlueprintSource::CfrCheckpoints { iterations }
                if iterations.is_empty()
                    || iterations[0] == 0
                    || iterations.windows(2).any(|w| w[0] >= w[1]) =>
            {
                Err(ConfigError::Invalid(
                    "checkpoints must be positive and increasing".into(),
                ))
            }
            _ => Ok(()),
        }
    }
}

fn parse_list<T: FromStr>(value: &str) -> Result<Vec<T>, T::Err> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}
