//! Behavioral strategies and their evaluation.

mod eval;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

pub use eval::*;

use crate::efg::{Game, Player};

/// Tolerance on the total mass of a strategy distribution.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StrategyError {
    #[error("no distribution for infoset `{0}`")]
    Missing(String),
    #[error("infoset `{0}` is not an infoset of {1} in this game")]
    Foreign(String, Player),
    #[error("infoset `{label}`: {message}")]
    Distribution { label: String, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("mapping {0}")]
    Mapping(String),
}

/// Per-infoset action distributions of one player, keyed by infoset label.
/// Probabilities follow the action order of the infoset in its game.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct BehavioralStrategy {
    pub player: Option<Player>,
    table: BTreeMap<String, Vec<f64>>,
}

impl BehavioralStrategy {
    pub fn new(player: Player) -> Self {
        BehavioralStrategy {
            player: Some(player),
            table: BTreeMap::new(),
        }
    }

    pub fn player(&self) -> Player {
        self.player.expect("strategy has an owner")
    }

    /// Uniform distribution at every infoset of `player`.
    pub fn uniform(game: &Game, player: Player) -> Self {
        Self::from_fn(game, player, |n| vec![1.0 / n as f64; n])
    }

    /// Builds a strategy from a per-infoset function of the action count.
    pub fn from_fn(game: &Game, player: Player, mut f: impl FnMut(usize) -> Vec<f64>) -> Self {
        let mut s = Self::new(player);
        for i in game.player_infosets(player) {
            let info = game.infoset(i);
            s.table.insert(info.label.clone(), f(info.actions.len()));
        }
        s
    }

    /// Pure strategy choosing the named action wherever it exists, and the
    /// first action elsewhere.
    pub fn pure(game: &Game, player: Player, action: &str) -> Self {
        let mut s = Self::new(player);
        for i in game.player_infosets(player) {
            let info = game.infoset(i);
            let k = info.actions.iter().position(|a| a == action).unwrap_or(0);
            let mut p = vec![0.0; info.actions.len()];
            p[k] = 1.0;
            s.table.insert(info.label.clone(), p);
        }
        s
    }

    pub fn get(&self, label: &str) -> Option<&[f64]> {
        self.table.get(label).map(|v| v.as_slice())
    }

    pub fn set(&mut self, label: impl Into<String>, probs: Vec<f64>) {
        self.table.insert(label.into(), probs);
    }

    pub fn remove(&mut self, label: &str) -> Option<Vec<f64>> {
        self.table.remove(label)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.table.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Probability of `action` at `label` in `game`.
    pub fn prob(&self, game: &Game, label: &str, action: &str) -> Option<f64> {
        let idx = game.infoset_index(self.player(), label)?;
        let k = game.infoset(idx).actions.iter().position(|a| a == action)?;
        self.get(label).map(|p| p[k])
    }

    /// Checks that the domain is exactly `player`'s infosets in `game` and
    /// every distribution is valid.
    pub fn check(&self, game: &Game) -> Result<(), StrategyError> {
        let player = self.player();
        for i in game.player_infosets(player) {
            let info = game.infoset(i);
            let p = self
                .get(&info.label)
                .ok_or_else(|| StrategyError::Missing(info.label.clone()))?;
            check_distribution(&info.label, p, info.actions.len())?;
        }
        for (label, _) in self.iter() {
            if game.infoset_index(player, label).is_none() {
                return Err(StrategyError::Foreign(label.to_string(), player));
            }
        }
        Ok(())
    }

    /// Restriction to the infosets of `player` present in `game`.
    pub fn restrict_to(&self, game: &Game) -> BehavioralStrategy {
        let mut s = Self::new(self.player());
        for i in game.player_infosets(self.player()) {
            let label = &game.infoset(i).label;
            if let Some(p) = self.get(label) {
                s.set(label.clone(), p.to_vec());
            }
        }
        s
    }

    /// Text form: one line per infoset, `<label> <action>:<prob> ...`.
    pub fn to_text(&self, game: &Game) -> String {
        let mut out = String::new();
        for i in game.player_infosets(self.player()) {
            let info = game.infoset(i);
            if let Some(p) = self.get(&info.label) {
                write!(out, "{}", info.label).unwrap();
                for (a, x) in info.actions.iter().zip(p) {
                    write!(out, " {a}:{x}").unwrap();
                }
                out.push('\n');
            }
        }
        out
    }

    /// Parses the text form against `game`; the result passes [`Self::check`].
    pub fn from_text(game: &Game, player: Player, text: &str) -> Result<Self, StrategyError> {
        let mut s = Self::new(player);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut toks = content.split_whitespace();
            let label = toks.next().expect("nonempty line");
            let idx = game
                .infoset_index(player, label)
                .ok_or_else(|| StrategyError::Foreign(label.to_string(), player))?;
            let actions = &game.infoset(idx).actions;
            let mut probs = vec![f64::NAN; actions.len()];
            for tok in toks {
                let (a, x) = tok.rsplit_once(':').ok_or_else(|| StrategyError::Parse {
                    line,
                    message: format!("expected `action:prob`, got `{tok}`"),
                })?;
                let k =
                    actions
                        .iter()
                        .position(|b| b == a)
                        .ok_or_else(|| StrategyError::Parse {
                            line,
                            message: format!("unknown action `{a}` at `{label}`"),
                        })?;
                probs[k] = x.parse().map_err(|_| StrategyError::Parse {
                    line,
                    message: format!("malformed probability `{x}`"),
                })?;
            }
            if probs.iter().any(|p| p.is_nan()) {
                return Err(StrategyError::Parse {
                    line,
                    message: format!("missing actions at `{label}`"),
                });
            }
            s.set(label, probs);
        }
        s.check(game)?;
        Ok(s)
    }
}

fn check_distribution(label: &str, p: &[f64], n: usize) -> Result<(), StrategyError> {
    let bad = |message: String| StrategyError::Distribution {
        label: label.to_string(),
        message,
    };
    if p.len() != n {
        return Err(bad(format!("{} probabilities for {n} actions", p.len())));
    }
    if p.iter()
        .any(|&x| !(x >= -DISTRIBUTION_TOLERANCE) || !x.is_finite())
    {
        return Err(bad("negative or non-finite probability".into()));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        return Err(bad(format!("mass {total}")));
    }
    Ok(())
}

/// Strategies of both players on one game.
#[derive(Clone, Debug, PartialEq)]
pub struct StrategyProfile {
    pub p1: BehavioralStrategy,
    pub p2: BehavioralStrategy,
}

impl StrategyProfile {
    pub fn new(p1: BehavioralStrategy, p2: BehavioralStrategy) -> Self {
        StrategyProfile { p1, p2 }
    }

    pub fn uniform(game: &Game) -> Self {
        Self::new(
            BehavioralStrategy::uniform(game, Player::P1),
            BehavioralStrategy::uniform(game, Player::P2),
        )
    }

    pub fn get(&self, player: Player) -> &BehavioralStrategy {
        match player {
            Player::P1 => &self.p1,
            Player::P2 => &self.p2,
            Player::Chance => panic!("chance has no strategy"),
        }
    }

    pub fn get_mut(&mut self, player: Player) -> &mut BehavioralStrategy {
        match player {
            Player::P1 => &mut self.p1,
            Player::P2 => &mut self.p2,
            Player::Chance => panic!("chance has no strategy"),
        }
    }

    /// Dense per-infoset table in game infoset order.
    pub fn table(&self, game: &Game) -> Result<Vec<Vec<f64>>, StrategyError> {
        game.infosets()
            .iter()
            .map(|info| {
                self.get(info.player)
                    .get(&info.label)
                    .map(|p| p.to_vec())
                    .ok_or_else(|| StrategyError::Missing(info.label.clone()))
            })
            .collect()
    }

    /// Dense table where one player's strategy is given and the other is
    /// filled with uniform placeholders.
    pub fn one_sided_table(
        game: &Game,
        s: &BehavioralStrategy,
    ) -> Result<Vec<Vec<f64>>, StrategyError> {
        game.infosets()
            .iter()
            .map(|info| {
                if info.player == s.player() {
                    s.get(&info.label)
                        .map(|p| p.to_vec())
                        .ok_or_else(|| StrategyError::Missing(info.label.clone()))
                } else {
                    Ok(vec![1.0 / info.actions.len() as f64; info.actions.len()])
                }
            })
            .collect()
    }

    pub fn from_table(game: &Game, table: &[Vec<f64>]) -> Self {
        let mut p = Self::new(
            BehavioralStrategy::new(Player::P1),
            BehavioralStrategy::new(Player::P2),
        );
        for (info, probs) in game.infosets().iter().zip(table) {
            p.get_mut(info.player)
                .set(info.label.clone(), probs.clone());
        }
        p
    }
}

/// Extracts one player's strategy from a dense table.
pub fn strategy_from_table(game: &Game, player: Player, table: &[Vec<f64>]) -> BehavioralStrategy {
    let mut s = BehavioralStrategy::new(player);
    for i in game.player_infosets(player) {
        s.set(game.infoset(i).label.clone(), table[i].clone());
    }
    s
}

/// Overwrites `blueprint` with `subgame` on the infosets listed in `mapping`
/// (pairs of subgame label, original label).
pub fn combine(
    blueprint: &BehavioralStrategy,
    subgame: &BehavioralStrategy,
    mapping: &[(String, String)],
) -> Result<BehavioralStrategy, StrategyError> {
    let mut out = blueprint.clone();
    let mut targets = std::collections::HashSet::new();
    for (from, to) in mapping {
        if !targets.insert(to) {
            return Err(StrategyError::Mapping(format!("overlap on `{to}`")));
        }
        let p = subgame.get(from).ok_or_else(|| {
            StrategyError::Mapping(format!("gap: no subgame strategy for `{from}`"))
        })?;
        let old = blueprint
            .get(to)
            .ok_or_else(|| StrategyError::Mapping(format!("`{to}` is not in the blueprint")))?;
        if old.len() != p.len() {
            return Err(StrategyError::Mapping(format!(
                "action count differs at `{to}`"
            )));
        }
        out.set(to.clone(), p.to_vec());
    }
    Ok(out)
}

/// Random strategy with every infoset distribution drawn from Dirichlet(1, …, 1)
/// as normalized unit-exponential draws from a ChaCha8 stream seeded by `seed`.
pub fn dirichlet_blueprint(game: &Game, player: Player, seed: u64) -> BehavioralStrategy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BehavioralStrategy::from_fn(game, player, |n| dirichlet_sample(&mut rng, n))
}

pub(crate) fn dirichlet_sample(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 {
        draws.iter().map(|d| d / total).collect()
    } else {
        vec![1.0 / n as f64; n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{fig1_game, seq_rps};

    #[test]
    fn text_round_trip() {
        let g = fig1_game();
        let mut s = BehavioralStrategy::new(Player::P1);
        s.set("s1", vec![0.5, 0.5, 0.0]);
        let text = s.to_text(&g);
        assert_eq!(text, "s1 F:0.5 H:0.5 T:0\n");
        assert_eq!(
            BehavioralStrategy::from_text(&g, Player::P1, &text).unwrap(),
            s
        );
    }

    #[test]
    fn check_rejects_bad_mass() {
        let g = fig1_game();
        let mut s = BehavioralStrategy::new(Player::P1);
        s.set("s1", vec![0.5, 0.6, 0.0]);
        assert!(matches!(
            s.check(&g),
            Err(StrategyError::Distribution { .. })
        ));
        s.set("s1", vec![0.5, 0.5, 0.0]);
        s.set("nope", vec![1.0]);
        assert!(matches!(s.check(&g), Err(StrategyError::Foreign(..))));
    }

    #[test]
    fn combine_overwrites_only_mapped() {
        let g = seq_rps();
        let blue = BehavioralStrategy::pure(&g, Player::P1, "R");
        let sub = BehavioralStrategy::uniform(&g, Player::P1);
        let map = vec![("s1".to_string(), "s1".to_string())];
        let c = combine(&blue, &sub, &map).unwrap();
        assert_eq!(c.get("s1").unwrap(), &[1.0 / 3.0; 3]);
        assert!(combine(&blue, &sub, &[("x".into(), "s1".into())]).is_err());
        let twice = vec![map[0].clone(), map[0].clone()];
        assert!(combine(&blue, &sub, &twice).is_err());
    }

    #[test]
    fn dirichlet_is_deterministic_and_normalized() {
        let g = seq_rps();
        let a = dirichlet_blueprint(&g, Player::P1, 7);
        assert_eq!(a, dirichlet_blueprint(&g, Player::P1, 7));
        assert_ne!(a, dirichlet_blueprint(&g, Player::P1, 8));
        a.check(&g).unwrap();
    }
}
