use std::collections::HashMap;

use crate::efg::{Game, NodeKind, Player, PLAYERS};
use crate::strategy::BehavioralStrategy;

/// Sequences of one player: the empty sequence (index 0) followed by one
/// sequence per (infoset, action) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PlayerSequences {
    pub count: usize,
    /// Game infoset indices owned by this player, in game order.
    pub infosets: Vec<usize>,
    /// Parent sequence of each local infoset.
    pub parent: Vec<usize>,
    /// Sequence index of the first action of each local infoset.
    pub first: Vec<usize>,
    /// Game infoset index → local infoset index.
    local: HashMap<usize, usize>,
}

impl PlayerSequences {
    pub fn local(&self, game_infoset: usize) -> Option<usize> {
        self.local.get(&game_infoset).copied()
    }

    /// Sequence of playing action `a` at game infoset `s`.
    pub fn seq(&self, game_infoset: usize, a: usize) -> usize {
        self.first[self.local[&game_infoset]] + a
    }

    /// Number of rows of the realization constraints (root + one per infoset).
    pub fn rows(&self) -> usize {
        1 + self.infosets.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceIndex {
    pub players: [PlayerSequences; 2],
    /// Per node, the sequence of each player leading to it.
    pub node_seq: Vec<[usize; 2]>,
}

/// Sequence-form payoff data: `A[σ₁][σ₂] = Σ P_c(z)·u₁(z)` over terminals
/// consistent with both sequences, stored sparsely.
#[derive(Clone, Debug, PartialEq)]
pub struct SqfMatrices {
    pub a: Vec<(usize, usize, f64)>,
    pub rows: [usize; 2],
    pub cols: [usize; 2],
}

impl SequenceIndex {
    pub fn new(game: &Game) -> Self {
        let mut players: Vec<PlayerSequences> = Vec::new();
        for p in PLAYERS {
            let mut ps = PlayerSequences {
                count: 1,
                infosets: Vec::new(),
                parent: Vec::new(),
                first: Vec::new(),
                local: HashMap::new(),
            };
            for s in game.player_infosets(p) {
                ps.local.insert(s, ps.infosets.len());
                ps.infosets.push(s);
                ps.first.push(ps.count);
                ps.parent.push(usize::MAX);
                ps.count += game.infoset(s).actions.len();
            }
            players.push(ps);
        }
        let mut players: [PlayerSequences; 2] = [players.remove(0), players.remove(0)];
        let mut node_seq = vec![[0usize; 2]; game.num_nodes()];
        for id in 0..game.num_nodes() {
            let here = node_seq[id];
            match game.node(id) {
                NodeKind::Chance { outcomes } => {
                    for &(c, _) in outcomes {
                        node_seq[c] = here;
                    }
                }
                NodeKind::Decision {
                    player, actions, ..
                } => {
                    let s = game.node_infoset(id).expect("infoset");
                    let pi = player.index();
                    let ps = &mut players[pi];
                    let l = ps.local[&s];
                    ps.parent[l] = here[pi];
                    for (k, (_, c)) in actions.iter().enumerate() {
                        node_seq[*c] = here;
                        node_seq[*c][pi] = ps.first[l] + k;
                    }
                }
                NodeKind::Terminal { .. } => {}
            }
        }
        SequenceIndex { players, node_seq }
    }

    pub fn of(&self, p: Player) -> &PlayerSequences {
        &self.players[p.index()]
    }

    /// Realization plan of a behavioral strategy.
    pub fn realization(&self, game: &Game, s: &BehavioralStrategy) -> Vec<f64> {
        let ps = self.of(s.player());
        let mut x = vec![0.0; ps.count];
        x[0] = 1.0;
        // parents precede children in game infoset order only if discovered in
        // DFS order, which is how infosets are indexed
        for (l, &gs) in ps.infosets.iter().enumerate() {
            let probs = s
                .get(&game.infoset(gs).label)
                .expect("strategy covers infoset");
            let base = x[ps.parent[l]];
            for (k, p) in probs.iter().enumerate() {
                x[ps.first[l] + k] = base * p;
            }
        }
        x
    }

    /// Behavioral strategy of a realization plan; zero-reach infosets become
    /// uniform.
    pub fn behavioral(&self, game: &Game, player: Player, x: &[f64]) -> BehavioralStrategy {
        let ps = self.of(player);
        let mut s = BehavioralStrategy::new(player);
        for (l, &gs) in ps.infosets.iter().enumerate() {
            let n = game.infoset(gs).actions.len();
            let vals: Vec<f64> = (0..n).map(|k| x[ps.first[l] + k].max(0.0)).collect();
            let total: f64 = vals.iter().sum();
            let probs = if total > 1e-300 && x[ps.parent[l]] > 0.0 {
                vals.iter().map(|v| v / total).collect()
            } else {
                vec![1.0 / n as f64; n]
            };
            s.set(game.infoset(gs).label.clone(), probs);
        }
        s
    }

    pub fn matrices(&self, game: &Game) -> SqfMatrices {
        let mut chance = vec![1.0; game.num_nodes()];
        let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
        for id in 0..game.num_nodes() {
            match game.node(id) {
                NodeKind::Chance { outcomes } => {
                    for &(c, p) in outcomes {
                        chance[c] = chance[id] * p;
                    }
                }
                NodeKind::Decision { actions, .. } => {
                    for (_, c) in actions {
                        chance[*c] = chance[id];
                    }
                }
                NodeKind::Terminal { utility } => {
                    let [s1, s2] = self.node_seq[id];
                    *acc.entry((s1, s2)).or_insert(0.0) += chance[id] * utility;
                }
            }
        }
        let mut a: Vec<(usize, usize, f64)> =
            acc.into_iter().map(|((i, j), v)| (i, j, v)).collect();
        a.sort_by_key(|x| (x.0, x.1));
        SqfMatrices {
            a,
            rows: [self.players[0].rows(), self.players[1].rows()],
            cols: [self.players[0].count, self.players[1].count],
        }
    }

    /// Entries `(row, col, value)` of the realization constraint matrix `F`
    /// of `player`; the right-hand side is the unit vector on row 0.
    pub fn constraints(&self, player: Player) -> Vec<(usize, usize, f64)> {
        let ps = self.of(player);
        let mut f = vec![(0, 0, 1.0)];
        for l in 0..ps.infosets.len() {
            f.push((l + 1, ps.parent[l], -1.0));
            let n = if l + 1 < ps.infosets.len() {
                ps.first[l + 1] - ps.first[l]
            } else {
                ps.count - ps.first[l]
            };
            for k in 0..n {
                f.push((l + 1, ps.first[l] + k, 1.0));
            }
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::fig1_game;

    #[test]
    fn fig1_dimensions() {
        let g = fig1_game();
        let idx = SequenceIndex::new(&g);
        assert_eq!(idx.of(Player::P1).count, 4);
        assert_eq!(idx.of(Player::P2).count, 3);
        assert_eq!(idx.of(Player::P1).rows(), 2);
        let m = idx.matrices(&g);
        assert_eq!(m.cols, [4, 3]);
        // P1 F (seq 1) against P2 H (seq 1) pays -1
        assert!(m.a.contains(&(1, 1, -1.0)));
    }

    #[test]
    fn uniform_realization_satisfies_constraints() {
        let g = fig1_game();
        let idx = SequenceIndex::new(&g);
        let s = BehavioralStrategy::uniform(&g, Player::P1);
        let x = idx.realization(&g, &s);
        let mut lhs = vec![0.0; idx.of(Player::P1).rows()];
        for (r, c, v) in idx.constraints(Player::P1) {
            lhs[r] += v * x[c];
        }
        assert!((lhs[0] - 1.0).abs() < 1e-15 && lhs[1].abs() < 1e-15);
    }
}
