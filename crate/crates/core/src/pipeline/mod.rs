//! Experiment driver: blueprints, per-subgame solving, recombination and
//! exploitability accounting.

mod audit;
mod config;
mod stats;

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use log::{info, warn};

pub use audit::{safety_audit, theorem_sides, AuditEntry, AuditReport, TheoremSides};
pub use config::{BlueprintSource, ConfigError, ExperimentConfig, SolverKind};
pub use stats::{diff_csv, paired_ttest, unsafe_vs_blueprintprior_diff, DiffRow, TTest};

use crate::cfr::{cfr_checkpoint_blueprints, run_cfr, CfrConfig};
use crate::efg::{Game, Player};
use crate::gadget::{
    blueprint_cbvs, build_maxmargin, build_resolving, build_unsafe, combine_solution,
    extract_subgame, make_prior, subgame_infosets, GadgetError, GadgetGame, PriorKind, SubgameSpec,
    DEFAULT_CLIP,
};
use crate::games::{enumerate_subgames, CatalogError};
use crate::sqf::{refine_to_ggse, solve_continuation, Schedule, SolveError};
use crate::strategy::{
    best_response_table, combine, dirichlet_blueprint, exploitability, BehavioralStrategy,
    StrategyError, StrategyProfile,
};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Cfr(#[from] crate::cfr::CfrError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Other(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Technique {
    Unsafe,
    Resolve,
    MaxMargin,
    OptimalContinuation,
}

impl Technique {
    pub const ALL: [Technique; 4] = [
        Technique::Unsafe,
        Technique::Resolve,
        Technique::MaxMargin,
        Technique::OptimalContinuation,
    ];

    /// Whether the technique solves a gadget with auxiliary infosets.
    pub fn uses_prior(self) -> bool {
        matches!(self, Technique::Resolve | Technique::MaxMargin)
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Technique::Unsafe => "unsafe",
            Technique::Resolve => "resolve",
            Technique::MaxMargin => "maxmargin",
            Technique::OptimalContinuation => "optimal-continuation",
        })
    }
}

impl FromStr for Technique {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "unsafe" => Ok(Technique::Unsafe),
            "resolve" | "resolving" => Ok(Technique::Resolve),
            "maxmargin" | "max-margin" => Ok(Technique::MaxMargin),
            "optimal-continuation" | "continuation" => Ok(Technique::OptimalContinuation),
            _ => Err(ConfigError::Value("technique".into(), s.to_string())),
        }
    }
}

/// A blueprint profile with its identifier.
#[derive(Clone, Debug)]
pub struct Blueprint {
    pub id: String,
    pub profile: StrategyProfile,
}

/// Generates the blueprints of a configuration.
pub fn make_blueprints(
    game: &Game,
    source: &BlueprintSource,
) -> Result<Vec<Blueprint>, PipelineError> {
    Ok(match source {
        BlueprintSource::Dirichlet { count, seed } => (0..*count)
            .map(|i| {
                let base = seed.wrapping_mul(1_000_003).wrapping_add(2 * i as u64);
                Blueprint {
                    id: format!("dir-{seed}-{i}"),
                    profile: StrategyProfile::new(
                        dirichlet_blueprint(game, Player::P1, base),
                        dirichlet_blueprint(game, Player::P2, base + 1),
                    ),
                }
            })
            .collect(),
        BlueprintSource::CfrCheckpoints { iterations } => {
            let cfg = CfrConfig {
                iterations: *iterations.last().unwrap_or(&1),
                trace: false,
                ..CfrConfig::default()
            };
            cfr_checkpoint_blueprints(game, iterations, &cfg)?
                .into_iter()
                .map(|(it, profile)| Blueprint {
                    id: format!("cfr-{it}"),
                    profile,
                })
                .collect()
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub game: String,
    pub blueprint_id: String,
    pub blueprint_expl: f64,
    pub technique: Technique,
    pub prior: PriorKind,
    pub solver: String,
    /// Subgames actually re-solved (unreachable ones keep the blueprint).
    pub subgames: usize,
    pub combined_expl: f64,
    pub wall_ms: u128,
    /// Largest in-gadget exploitability (CFR) or refinement gap (LP).
    pub gadget_expl: f64,
    /// Exploitability with only one subgame overwritten, per subgame.
    pub per_subgame: Vec<f64>,
    /// Max-margin rows: largest opponent gain in the resolving gadget
    /// against the max-margin solutions (NaN for other techniques).
    pub resolving_gain: f64,
    pub error: Option<String>,
}

pub const CSV_HEADER: &str =
    "game,blueprint_id,blueprint_expl,technique,prior,solver,subgames,combined_expl,wall_ms";

/// Rows as CSV in canonical order (blueprint, technique, prior).
pub fn rows_csv(rows: &[ResultRow]) -> String {
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.blueprint_id, a.technique, a.prior as u8).cmp(&(
            &b.blueprint_id,
            b.technique,
            b.prior as u8,
        ))
    });
    let mut out = format!("{CSV_HEADER}\n");
    for r in sorted {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.game,
            r.blueprint_id,
            r.blueprint_expl,
            r.technique,
            r.prior,
            r.solver,
            r.subgames,
            r.combined_expl,
            r.wall_ms
        )
        .unwrap();
    }
    out
}

/// Parses rows written by [`rows_csv`].
pub fn parse_rows(text: &str) -> Result<Vec<ResultRow>, PipelineError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(PipelineError::Other(format!(
                "line {}: expected 9 fields",
                i + 1
            )));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| PipelineError::Other(format!("line {}: bad number `{s}`", i + 1)))
        };
        rows.push(ResultRow {
            game: f[0].to_string(),
            blueprint_id: f[1].to_string(),
            blueprint_expl: num(f[2])?,
            technique: f[3].parse()?,
            prior: f[4].parse()?,
            solver: f[5].to_string(),
            subgames: f[6]
                .parse()
                .map_err(|_| PipelineError::Other(format!("line {}: bad count", i + 1)))?,
            combined_expl: num(f[7])?,
            wall_ms: f[8].parse().unwrap_or(0),
            gadget_expl: 0.0,
            per_subgame: Vec::new(),
            resolving_gain: f64::NAN,
            error: None,
        });
    }
    Ok(rows)
}

/// One solved gadget.
#[derive(Clone, Debug)]
pub struct SubgameSolution {
    /// Resolver strategy on the original subgame infosets.
    pub strategy: BehavioralStrategy,
    /// (subgame label, original label) pairs for [`combine`].
    pub mapping: Vec<(String, String)>,
    /// Resolver strategy on every gadget infoset.
    pub gadget_strategy: BehavioralStrategy,
    /// CFR: nash-conv of the gadget average; LP: refinement value gap.
    pub gap: f64,
}

/// Per-blueprint, per-public-state data shared across techniques.
struct Prepared {
    spec: SubgameSpec,
    resolving: Option<GadgetGame>,
    maxmargin: Option<GadgetGame>,
}

/// Solves a gadget with the given prior; `spec` is needed for the blueprint
/// prior only.
pub fn solve_gadget(
    gadget: &GadgetGame,
    spec: Option<&SubgameSpec>,
    prior: PriorKind,
    solver: &SolverKind,
    epsilon: f64,
) -> Result<SubgameSolution, PipelineError> {
    let prior = make_prior(prior, gadget, spec, DEFAULT_CLIP)?;
    let (strategy, gap) = match solver {
        SolverKind::Lp => {
            let r = refine_to_ggse(
                gadget,
                prior.as_ref(),
                Schedule::starting_at(epsilon.max(1e-9)),
            )?;
            (r.strategy, r.value - r.strategy_value)
        }
        SolverKind::Cfr { iterations } => {
            let mut cfg = CfrConfig {
                iterations: *iterations,
                trace: false,
                ..CfrConfig::default()
            };
            if let Some(p) = prior {
                cfg = cfg.with_prior(p, epsilon);
            }
            let res = run_cfr(&gadget.game, &cfg)?;
            let table = res.average.table(&gadget.game)?;
            let e = crate::strategy::nash_conv(&gadget.game, &table);
            (res.average.get(gadget.resolver).clone(), e)
        }
    };
    let (sub, mapping) = crate::gadget::extract_solution(gadget, &strategy)?;
    Ok(SubgameSolution {
        strategy: sub,
        mapping,
        gadget_strategy: strategy,
        gap,
    })
}

/// Runs every (blueprint, technique, prior) cell of the configuration.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>, PipelineError> {
    let game = config.game.build()?;
    let publics = enumerate_subgames(&game, config.game, config.selector)?;
    let blueprints = make_blueprints(&game, &config.blueprints)?;
    let mut rows = Vec::new();
    for bp in &blueprints {
        rows.extend(run_blueprint(config, &game, &publics, bp)?);
    }
    Ok(rows)
}

/// The rows of one blueprint.
pub fn run_blueprint(
    config: &ExperimentConfig,
    game: &Game,
    publics: &[String],
    bp: &Blueprint,
) -> Result<Vec<ResultRow>, PipelineError> {
    let resolver = config.resolver;
    let bp_strategy = bp.profile.get(resolver);
    let blueprint_expl = exploitability(game, bp_strategy)?;
    info!(
        "{} {}: blueprint exploitability {blueprint_expl}",
        config.game, bp.id
    );
    let needs_gadgets = config.techniques.iter().any(|t| t.uses_prior());
    let mut prepared = Vec::new();
    for ps in publics {
        match extract_subgame(game, ps, &bp.profile, resolver) {
            Ok(spec) => {
                let (resolving, maxmargin) = if needs_gadgets {
                    let cbvs = blueprint_cbvs(game, bp_strategy, &spec)?;
                    (
                        Some(build_resolving(game, &spec, &cbvs)?),
                        Some(build_maxmargin(game, &spec, &cbvs)?),
                    )
                } else {
                    (None, None)
                };
                prepared.push(Prepared {
                    spec,
                    resolving,
                    maxmargin,
                });
            }
            Err(GadgetError::Unreachable(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    let mut rows = Vec::new();
    for &technique in &config.techniques {
        let priors: Vec<PriorKind> = if technique.uses_prior() {
            config.priors.clone()
        } else {
            vec![PriorKind::None]
        };
        for prior in priors {
            let start = Instant::now();
            let solver = if technique == Technique::OptimalContinuation {
                SolverKind::Lp
            } else {
                config.solver.clone()
            };
            let outcome = run_cell(
                config,
                game,
                &prepared,
                bp_strategy,
                technique,
                prior,
                &solver,
            );
            let wall_ms = if config.timing {
                start.elapsed().as_millis()
            } else {
                0
            };
            let row = match outcome {
                Ok(Cell {
                    combined,
                    count,
                    gap,
                    per_subgame,
                    resolving_gain,
                }) => ResultRow {
                    game: config.game.to_string(),
                    blueprint_id: bp.id.clone(),
                    blueprint_expl,
                    technique,
                    prior,
                    solver: solver.to_string(),
                    subgames: count,
                    combined_expl: combined,
                    wall_ms,
                    gadget_expl: gap,
                    per_subgame,
                    resolving_gain,
                    error: None,
                },
                Err(e) => {
                    warn!("{} {} {technique}/{prior}: {e}", config.game, bp.id);
                    ResultRow {
                        game: config.game.to_string(),
                        blueprint_id: bp.id.clone(),
                        blueprint_expl,
                        technique,
                        prior,
                        solver: solver.to_string(),
                        subgames: 0,
                        combined_expl: f64::NAN,
                        wall_ms,
                        gadget_expl: f64::NAN,
                        per_subgame: Vec::new(),
                        resolving_gain: f64::NAN,
                        error: Some(e.to_string()),
                    }
                }
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

struct Cell {
    combined: f64,
    count: usize,
    gap: f64,
    per_subgame: Vec<f64>,
    resolving_gain: f64,
}

fn run_cell(
    config: &ExperimentConfig,
    game: &Game,
    prepared: &[Prepared],
    bp_strategy: &BehavioralStrategy,
    technique: Technique,
    prior: PriorKind,
    solver: &SolverKind,
) -> Result<Cell, PipelineError> {
    let resolver = config.resolver;
    if technique == Technique::OptimalContinuation {
        let labels: Vec<&str> = prepared
            .iter()
            .map(|p| p.spec.public_state.as_str())
            .collect();
        let (cont, _) = solve_continuation(game, bp_strategy, &labels, resolver)?;
        let roots: Vec<_> = prepared
            .iter()
            .flat_map(|p| p.spec.roots.iter().copied())
            .collect();
        let mapping: Vec<(String, String)> = subgame_infosets(game, &roots, resolver)
            .into_iter()
            .map(|l| (l.clone(), l))
            .collect();
        let combined = combine(bp_strategy, &cont, &mapping)?;
        return Ok(Cell {
            combined: exploitability(game, &combined)?,
            count: prepared.len(),
            gap: 0.0,
            per_subgame: Vec::new(),
            resolving_gain: f64::NAN,
        });
    }
    let mut combined = bp_strategy.clone();
    let mut gap: f64 = 0.0;
    let mut per_subgame = Vec::new();
    let mut resolving_gain = if technique == Technique::MaxMargin {
        0.0
    } else {
        f64::NAN
    };
    for p in prepared {
        let sol = match technique {
            Technique::Unsafe => {
                let g = build_unsafe(game, &p.spec)?;
                solve_gadget(&g, Some(&p.spec), PriorKind::None, solver, config.epsilon)?
            }
            Technique::Resolve => solve_gadget(
                p.resolving.as_ref().expect("prepared"),
                Some(&p.spec),
                prior,
                solver,
                config.epsilon,
            )?,
            Technique::MaxMargin => solve_gadget(
                p.maxmargin.as_ref().expect("prepared"),
                Some(&p.spec),
                prior,
                solver,
                config.epsilon,
            )?,
            Technique::OptimalContinuation => unreachable!("handled above"),
        };
        gap = gap.max(sol.gap);
        if technique == Technique::MaxMargin {
            let r = p.resolving.as_ref().expect("prepared");
            resolving_gain = resolving_gain.max(gadget_gain(r, &sol.strategy)?);
        }
        if config.per_subgame {
            let single = combine(bp_strategy, &sol.strategy, &sol.mapping)?;
            per_subgame.push(exploitability(game, &single)?);
        }
        combined = combine(&combined, &sol.strategy, &sol.mapping)?;
    }
    Ok(Cell {
        combined: exploitability(game, &combined)?,
        count: prepared.len(),
        gap,
        per_subgame,
        resolving_gain,
    })
}

/// Full-game strategy after re-solving one subgame with a gadget solution.
pub fn combined_after(
    blueprint: &BehavioralStrategy,
    gadget: &GadgetGame,
    gadget_strategy: &BehavioralStrategy,
) -> Result<BehavioralStrategy, PipelineError> {
    Ok(combine_solution(blueprint, gadget, gadget_strategy)?)
}

/// Best-response gain of the opponent in a gadget against a resolver strategy
/// given on the gadget's (or original, identical) infoset labels.
pub fn gadget_gain(
    gadget: &GadgetGame,
    resolver_strategy: &BehavioralStrategy,
) -> Result<f64, PipelineError> {
    let g = &gadget.game;
    let value = crate::strategy::game_value(g)?;
    let mut s = BehavioralStrategy::new(gadget.resolver);
    for i in g.player_infosets(gadget.resolver) {
        let l = &g.infoset(i).label;
        let p = resolver_strategy
            .get(l)
            .ok_or_else(|| StrategyError::Missing(l.clone()))?;
        s.set(l.clone(), p.to_vec());
    }
    let table = StrategyProfile::one_sided_table(g, &s)?;
    let br = best_response_table(g, &table, gadget.opponent()).value;
    Ok(gadget.resolver.sign() * (value - br))
}

/// Groups rows by (technique, prior) keeping blueprint order.
pub fn by_cell(rows: &[ResultRow]) -> BTreeMap<(Technique, String), Vec<&ResultRow>> {
    let mut out: BTreeMap<(Technique, String), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        out.entry((r.technique, r.prior.to_string()))
            .or_default()
            .push(r);
    }
    out
}

#[cfg(test)]
mod tests;
