use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use super::{BehavioralStrategy, StrategyError, StrategyProfile};
use crate::efg::{Game, NodeId, NodeKind, Player};

/// Denominators below this count as zero in counterfactual values.
pub const ZERO_REACH: f64 = 1e-15;

/// Reach factors `(chance, P1, P2)` of a node; their product is the reach
/// probability.
pub type Reach = [f64; 3];

fn factor_index(p: Player) -> usize {
    match p {
        Player::Chance => 0,
        Player::P1 => 1,
        Player::P2 => 2,
    }
}

/// Reach factors of every node under a dense profile table.
pub fn reach_all(game: &Game, table: &[Vec<f64>]) -> Vec<Reach> {
    let mut r = vec![[1.0; 3]; game.num_nodes()];
    for id in 0..game.num_nodes() {
        let here = r[id];
        match game.node(id) {
            NodeKind::Chance { outcomes } => {
                for &(c, p) in outcomes {
                    r[c] = here;
                    r[c][0] *= p;
                }
            }
            NodeKind::Decision {
                player, actions, ..
            } => {
                let s = &table[game.node_infoset(id).expect("decision has infoset")];
                let f = factor_index(*player);
                for (k, (_, c)) in actions.iter().enumerate() {
                    r[*c] = here;
                    r[*c][f] *= s[k];
                }
            }
            NodeKind::Terminal { .. } => {}
        }
    }
    r
}

/// Reach factors of a single node.
pub fn reach(game: &Game, profile: &StrategyProfile, node: NodeId) -> Result<Reach, StrategyError> {
    if node >= game.num_nodes() {
        return Err(StrategyError::Mapping(format!("unknown node {node}")));
    }
    let table = profile.table(game)?;
    let mut out = [1.0; 3];
    let mut cur = node;
    while let Some((p, k)) = game.parent(cur) {
        match game.node(p) {
            NodeKind::Chance { outcomes } => out[0] *= outcomes[k].1,
            NodeKind::Decision { player, .. } => {
                out[factor_index(*player)] *= table[game.node_infoset(p).expect("infoset")][k];
            }
            NodeKind::Terminal { .. } => unreachable!("terminal has no children"),
        }
        cur = p;
    }
    Ok(out)
}

/// Expected P1 utility of the subtree below each node.
pub fn node_values(game: &Game, table: &[Vec<f64>]) -> Vec<f64> {
    let mut v = vec![0.0; game.num_nodes()];
    for id in (0..game.num_nodes()).rev() {
        v[id] = match game.node(id) {
            NodeKind::Terminal { utility } => *utility,
            NodeKind::Chance { outcomes } => outcomes.iter().map(|&(c, p)| p * v[c]).sum(),
            NodeKind::Decision { actions, .. } => {
                let s = &table[game.node_infoset(id).expect("infoset")];
                actions.iter().zip(s).map(|((_, c), p)| p * v[*c]).sum()
            }
        };
    }
    v
}

/// Expected P1 utility of a profile.
pub fn expected_utility(game: &Game, profile: &StrategyProfile) -> Result<f64, StrategyError> {
    let table = profile.table(game)?;
    Ok(node_values(game, &table)[game.root()])
}

/// Counterfactual values of a list of infosets, in P1 utility units.
#[derive(Clone, Debug, PartialEq)]
pub struct CbvReport {
    /// Owner of the reported infosets.
    pub owner: Player,
    pub values: Vec<(String, f64)>,
}

impl CbvReport {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.values
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, v)| *v)
    }
}

/// `Σ P₋ⱼ(h)·v(h) / Σ P₋ⱼ(h)` for each group of histories owned by `owner`,
/// with 0 when the denominator vanishes.
pub fn counterfactual_from(
    reach: &[Reach],
    values: &[f64],
    owner: Player,
    group: &[NodeId],
) -> f64 {
    let other = factor_index(owner.opponent());
    let mut num = 0.0;
    let mut den = 0.0;
    for &h in group {
        let w = reach[h][0] * reach[h][other];
        num += w * values[h];
        den += w;
    }
    if den < ZERO_REACH {
        0.0
    } else {
        num / den
    }
}

/// Counterfactual values of `owner`'s infosets (given as labelled history
/// groups) under `profile`.
pub fn counterfactual_values(
    game: &Game,
    profile: &StrategyProfile,
    owner: Player,
    infosets: &[(String, Vec<NodeId>)],
) -> Result<CbvReport, StrategyError> {
    let table = profile.table(game)?;
    let reach = reach_all(game, &table);
    let values = node_values(game, &table);
    Ok(CbvReport {
        owner,
        values: infosets
            .iter()
            .map(|(l, g)| (l.clone(), counterfactual_from(&reach, &values, owner, g)))
            .collect(),
    })
}

/// Outcome of a best-response computation.
#[derive(Clone, Debug)]
pub struct BestResponse {
    pub responder: Player,
    /// Chosen action per game infoset index (`usize::MAX` for the fixed player).
    pub choice: Vec<usize>,
    /// Expected P1 utility below each node with the responder best-responding.
    pub node_values: Vec<f64>,
    /// P1 utility of the full game.
    pub value: f64,
    /// Infosets where several actions attained the maximum.
    pub ties: Vec<usize>,
}

impl BestResponse {
    pub fn strategy(&self, game: &Game) -> BehavioralStrategy {
        let mut s = BehavioralStrategy::new(self.responder);
        for i in game.player_infosets(self.responder) {
            let mut p = vec![0.0; game.infoset(i).actions.len()];
            p[self.choice[i]] = 1.0;
            s.set(game.infoset(i).label.clone(), p);
        }
        s
    }

    /// Fills the responder's entries of a dense table with the pure response.
    pub fn write_into(&self, game: &Game, table: &mut [Vec<f64>]) {
        for i in game.player_infosets(self.responder) {
            table[i].iter_mut().for_each(|x| *x = 0.0);
            table[i][self.choice[i]] = 1.0;
        }
    }
}

struct BrSearch<'a> {
    game: &'a Game,
    table: &'a [Vec<f64>],
    responder: Player,
    weight: Vec<f64>,
    values: Vec<Option<f64>>,
    choice: Vec<usize>,
    ties: Vec<usize>,
}

impl BrSearch<'_> {
    fn value(&mut self, h: NodeId) -> f64 {
        if let Some(v) = self.values[h] {
            return v;
        }
        let v = match self.game.node(h) {
            NodeKind::Terminal { utility } => *utility,
            NodeKind::Chance { outcomes } => outcomes.iter().map(|&(c, p)| p * self.value(c)).sum(),
            NodeKind::Decision {
                player, actions, ..
            } => {
                let s = self.game.node_infoset(h).expect("infoset");
                if *player == self.responder {
                    self.decide(s);
                    self.value(actions[self.choice[s]].1)
                } else {
                    let probs = &self.table[s];
                    let mut acc = 0.0;
                    for (k, (_, c)) in actions.iter().enumerate() {
                        if probs[k] != 0.0 {
                            acc += probs[k] * self.value(*c);
                        }
                    }
                    acc
                }
            }
        };
        self.values[h] = Some(v);
        v
    }

    fn decide(&mut self, s: usize) {
        if self.choice[s] != usize::MAX {
            return;
        }
        let info = self.game.infoset(s);
        let sign = self.responder.sign();
        let mut q = vec![0.0; info.actions.len()];
        for &h in &info.members.clone() {
            let w = self.weight[h];
            let NodeKind::Decision { actions, .. } = self.game.node(h) else {
                unreachable!()
            };
            for (k, (_, c)) in actions.clone().iter().enumerate() {
                let v = self.value(*c);
                q[k] += w * sign * v;
            }
        }
        let best = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-12 * best.abs().max(1.0);
        let k = q.iter().position(|&x| x >= best - tol).expect("nonempty");
        if q.iter().filter(|&&x| x >= best - tol).count() > 1 {
            self.ties.push(s);
        }
        self.choice[s] = k;
    }
}

/// Best response of `responder` against the other player's entries of `table`.
/// Ties resolve to the lowest action index.
pub fn best_response_table(game: &Game, table: &[Vec<f64>], responder: Player) -> BestResponse {
    let reach = reach_all(game, table);
    let other = factor_index(responder.opponent());
    let weight: Vec<f64> = reach.iter().map(|r| r[0] * r[other]).collect();
    let mut search = BrSearch {
        game,
        table,
        responder,
        weight,
        values: vec![None; game.num_nodes()],
        choice: vec![usize::MAX; game.infosets().len()],
        ties: Vec::new(),
    };
    for i in game.player_infosets(responder) {
        search.decide(i);
    }
    let value = search.value(game.root());
    // values of subtrees never visited (zero-probability branches of the fixed player)
    for id in 0..game.num_nodes() {
        search.value(id);
    }
    BestResponse {
        responder,
        choice: search.choice,
        node_values: search
            .values
            .into_iter()
            .map(|v| v.expect("evaluated"))
            .collect(),
        value,
        ties: search.ties,
    }
}

/// Best response against `fixed`; returns the pure response and its P1 value.
pub fn best_response(
    game: &Game,
    fixed: &BehavioralStrategy,
    responder: Player,
) -> Result<(BehavioralStrategy, f64), StrategyError> {
    let table = StrategyProfile::one_sided_table(game, fixed)?;
    let br = best_response_table(game, &table, responder);
    Ok((br.strategy(game), br.value))
}

/// P1 utility when the opponent of `strategy`'s owner best-responds.
pub fn br_value(game: &Game, strategy: &BehavioralStrategy) -> Result<f64, StrategyError> {
    let table = StrategyProfile::one_sided_table(game, strategy)?;
    Ok(best_response_table(game, &table, strategy.player().opponent()).value)
}

/// Sum of both players' exploitabilities; independent of the game value.
pub fn nash_conv(game: &Game, table: &[Vec<f64>]) -> f64 {
    let up = best_response_table(game, table, Player::P1).value;
    let down = best_response_table(game, table, Player::P2).value;
    up - down
}

/// Exploitability given a known game value.
pub fn exploitability_with_value(br_value: f64, player: Player, game_value: f64) -> f64 {
    match player {
        Player::P1 => game_value - br_value,
        _ => br_value - game_value,
    }
}

/// Best-response gain over the game value: `u₋ᵢ(πᵢ, BR) − u₋ᵢ(π*)`.
pub fn exploitability(
    game: &Game,
    strategy: &BehavioralStrategy,
) -> Result<f64, crate::sqf::SolveError> {
    let v = game_value(game)?;
    let w = br_value(game, strategy)?;
    Ok(exploitability_with_value(w, strategy.player(), v))
}

fn value_cache() -> &'static Mutex<HashMap<(String, u64), f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(String, u64), f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Equilibrium value for P1, computed once per game (name and content hash).
pub fn game_value(game: &Game) -> Result<f64, crate::sqf::SolveError> {
    let key = (game.name().to_string(), game.content_hash());
    if let Some(v) = value_cache().lock().expect("cache lock").get(&key) {
        return Ok(*v);
    }
    let v = crate::sqf::equilibrium_value(game)?;
    value_cache().lock().expect("cache lock").insert(key, v);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::*;
    use approx::assert_abs_diff_eq;

    fn fig1_blueprint(g: &Game) -> BehavioralStrategy {
        let mut s = BehavioralStrategy::new(Player::P1);
        s.set("s1", vec![0.5, 0.5, 0.0]);
        s.check(g).unwrap();
        s
    }

    #[test]
    fn reach_of_root_and_child() {
        let g = fig1_game();
        let p = StrategyProfile::uniform(&g);
        assert_eq!(reach(&g, &p, 0).unwrap(), [1.0, 1.0, 1.0]);
        assert_eq!(reach(&g, &p, 1).unwrap(), [1.0, 1.0, 0.5]);
    }

    #[test]
    fn fig1_expected_utility() {
        let g = fig1_game();
        let mut p = StrategyProfile::uniform(&g);
        p.p1.set("s1", vec![0.0, 0.5, 0.5]);
        assert_abs_diff_eq!(expected_utility(&g, &p).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn fig1_best_response_and_cbvs() {
        let g = fig1_game();
        let blue = fig1_blueprint(&g);
        let (br, v) = best_response(&g, &blue, Player::P2).unwrap();
        assert_abs_diff_eq!(v, -0.5, epsilon = 1e-15);
        assert_eq!(br.get("s2").unwrap(), &[0.0, 1.0]);
        let prof = StrategyProfile::new(blue, br);
        let ps = g.public_state("p1").unwrap();
        let groups: Vec<(String, Vec<NodeId>)> = ps
            .player_infosets(Player::P2)
            .iter()
            .cloned()
            .zip(ps.player_members(Player::P2).iter().cloned())
            .collect();
        let rep = counterfactual_values(&g, &prof, Player::P2, &groups).unwrap();
        assert_abs_diff_eq!(rep.get("s2.H").unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.get("s2.T").unwrap(), -0.5, epsilon = 1e-15);
    }

    #[test]
    fn tie_goes_to_lowest_index() {
        let g = fig1_game();
        let mut s = BehavioralStrategy::new(Player::P1);
        s.set("s1", vec![0.0, 0.5, 0.5]);
        let table = StrategyProfile::one_sided_table(&g, &s).unwrap();
        let br = best_response_table(&g, &table, Player::P2);
        assert_eq!(br.choice[g.infoset_index(Player::P2, "s2").unwrap()], 0);
        assert_eq!(br.ties.len(), 1);
        assert_abs_diff_eq!(br.value, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn zero_denominator_gives_zero() {
        let reach = vec![[1.0, 0.0, 0.0]; 2];
        assert_eq!(
            counterfactual_from(&reach, &[5.0, 5.0], Player::P1, &[0, 1]),
            0.0
        );
    }
}
