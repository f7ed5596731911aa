//! Game catalog: the worked-example fixtures and the benchmark games.

mod fixtures;
mod goofspiel;
mod leduc;
mod liars_dice;

use std::fmt;
use std::str::FromStr;

pub use fixtures::*;
pub use goofspiel::goofspiel;
pub use leduc::leduc;
pub use liars_dice::{bid_holds, bids, is_raise, liars_dice, Bid};

use crate::efg::{Game, NodeId, NodeKind, Player};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CatalogError {
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("unknown game `{0}`")]
    Unknown(String),
    #[error("{0}")]
    Selector(String),
}

/// A named, parameterized game of the catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GameSpec {
    Fig1,
    EquilibriaExample,
    SeqRps,
    MaxmarginWorse,
    Goofspiel(u32),
    Leduc,
    LiarsDice(u32, u32),
}

impl GameSpec {
    pub fn build(self) -> Result<Game, CatalogError> {
        Ok(match self {
            GameSpec::Fig1 => fig1_game(),
            GameSpec::EquilibriaExample => equilibria_example(),
            GameSpec::SeqRps => seq_rps(),
            GameSpec::MaxmarginWorse => maxmargin_worse(),
            GameSpec::Goofspiel(n) => goofspiel(n)?,
            GameSpec::Leduc => leduc(),
            GameSpec::LiarsDice(d, s) => liars_dice(d, s)?,
        })
    }

    /// Strategic decisions that make up one move round.
    pub fn decisions_per_round(self) -> usize {
        match self {
            GameSpec::Goofspiel(_) => 2,
            _ => 1,
        }
    }

    /// Whether the game is symmetric, so that its value is 0.
    pub fn is_symmetric(self) -> bool {
        matches!(self, GameSpec::Goofspiel(_) | GameSpec::SeqRps)
    }

    pub fn fixtures() -> [GameSpec; 4] {
        [
            GameSpec::Fig1,
            GameSpec::EquilibriaExample,
            GameSpec::SeqRps,
            GameSpec::MaxmarginWorse,
        ]
    }
}

impl fmt::Display for GameSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameSpec::Fig1 => write!(f, "fig1"),
            GameSpec::EquilibriaExample => write!(f, "equilibria_example"),
            GameSpec::SeqRps => write!(f, "seq_rps"),
            GameSpec::MaxmarginWorse => write!(f, "maxmargin_worse"),
            GameSpec::Goofspiel(n) => write!(f, "goofspiel-{n}"),
            GameSpec::Leduc => write!(f, "leduc"),
            GameSpec::LiarsDice(d, s) => write!(f, "liars-dice-{d}-{s}"),
        }
    }
}

impl FromStr for GameSpec {
    type Err = CatalogError;

    /// Accepts `fig1`, `equilibria_example`, `seq_rps`, `maxmargin_worse`,
    /// `goofspiel-<n>`, `leduc` and `liars-dice-<dice>-<sides>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || CatalogError::Unknown(s.to_string());
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Ok(match norm.as_str() {
            "fig1" => GameSpec::Fig1,
            "equilibria-example" => GameSpec::EquilibriaExample,
            "seq-rps" => GameSpec::SeqRps,
            "maxmargin-worse" => GameSpec::MaxmarginWorse,
            "leduc" => GameSpec::Leduc,
            other => {
                if let Some(n) = other.strip_prefix("goofspiel-") {
                    GameSpec::Goofspiel(n.parse().map_err(|_| unknown())?)
                } else if let Some(rest) = other.strip_prefix("liars-dice-") {
                    let (d, k) = rest.split_once('-').ok_or_else(unknown)?;
                    GameSpec::LiarsDice(
                        d.parse().map_err(|_| unknown())?,
                        k.parse().map_err(|_| unknown())?,
                    )
                } else {
                    return Err(unknown());
                }
            }
        })
    }
}

/// Which public states to re-solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selector {
    /// Public states reached after `d` complete move rounds.
    Depth(usize),
    /// Leduc public states right after the board card is dealt.
    LeducFlop,
}

impl FromStr for Selector {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "leduc-flop" | "flop" => Ok(Selector::LeducFlop),
            d => d
                .parse()
                .map(Selector::Depth)
                .map_err(|_| CatalogError::Selector(format!("bad subgame selector `{s}`"))),
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::Depth(d) => write!(f, "{d}"),
            Selector::LeducFlop => write!(f, "leduc-flop"),
        }
    }
}

/// Number of strategic decisions on the root path of every node.
fn decision_counts(game: &Game) -> Vec<usize> {
    let mut count = vec![0usize; game.num_nodes()];
    for id in 1..game.num_nodes() {
        let (p, _) = game.parent(id).expect("non-root has parent");
        count[id] = count[p] + usize::from(matches!(game.node(p), NodeKind::Decision { .. }));
    }
    count
}

/// Labels of the public states picked by `selector`, in node order.
pub fn enumerate_subgames(
    game: &Game,
    spec: GameSpec,
    selector: Selector,
) -> Result<Vec<String>, CatalogError> {
    let out: Vec<String> = match selector {
        Selector::Depth(d) => {
            let target = d * spec.decisions_per_round();
            let counts = decision_counts(game);
            game.public_states()
                .iter()
                .filter(|ps| ps.nodes.iter().all(|&n| counts[n] == target))
                .filter(|ps| {
                    // a round starts with the first mover of the round
                    spec.decisions_per_round() == 1
                        || ps.nodes.iter().all(|&n| {
                            matches!(
                                game.node(n),
                                NodeKind::Decision {
                                    player: Player::P1,
                                    ..
                                }
                            )
                        })
                })
                .map(|ps| ps.label.clone())
                .collect()
        }
        Selector::LeducFlop => {
            if spec != GameSpec::Leduc {
                return Err(CatalogError::Selector(
                    "leduc-flop selector requires leduc".into(),
                ));
            }
            game.public_states()
                .iter()
                .filter(|ps| ps.label.starts_with("L2:") && ps.label.ends_with(':'))
                .map(|ps| ps.label.clone())
                .collect()
        }
    };
    if out.is_empty() {
        return Err(CatalogError::Selector(format!(
            "selector {selector} picks no public state"
        )));
    }
    Ok(out)
}

/// Root histories of a public state (helper for callers holding a label).
pub fn public_state_nodes(game: &Game, label: &str) -> Option<Vec<NodeId>> {
    game.public_state(label).map(|p| p.nodes.clone())
}
