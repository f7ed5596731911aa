//! Liar's dice with one die per player. Bids `(count, face)` are ordered
//! lexicographically and must strictly increase; the highest face is wild.
//! P1 bids first; afterwards a player may raise the bid or call. A call
//! settles the standing bid for ±1.

use crate::efg::{Game, NodeId, NodeTable, Player};

use super::CatalogError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Bid {
    pub count: u32,
    pub face: u32,
}

impl Bid {
    fn label(self) -> String {
        format!("{}x{}", self.count, self.face)
    }
}

/// All bids for `dice` dice per player and `sides` faces, in increasing order.
pub fn bids(dice: u32, sides: u32) -> Vec<Bid> {
    let mut out = Vec::new();
    for count in 1..=2 * dice {
        for face in 1..=sides {
            out.push(Bid { count, face });
        }
    }
    out
}

/// Whether `next` may follow `standing`.
pub fn is_raise(standing: Bid, next: Bid) -> bool {
    next > standing
}

/// Whether `bid` holds for the rolled dice, with `sides` wild.
pub fn bid_holds(rolls: &[u32], bid: Bid, sides: u32) -> bool {
    let n = rolls
        .iter()
        .filter(|&&r| r == bid.face || r == sides)
        .count() as u32;
    n >= bid.count
}

struct Builder {
    sides: u32,
    all: Vec<Bid>,
    t: NodeTable,
}

impl Builder {
    /// `last` is the index in `all` of the standing bid.
    fn node(&mut self, rolls: [u32; 2], history: &mut Vec<usize>) -> NodeId {
        let p = history.len() % 2;
        let public: String = {
            let h: Vec<String> = history.iter().map(|&i| self.all[i].label()).collect();
            format!("d:{}", h.join(","))
        };
        let infoset = format!("{}:{}:{}", p + 1, rolls[p], public);
        let view = format!("{}v:{}:{}", 2 - p, rolls[1 - p], public);
        let first = history.last().map_or(0, |&i| i + 1);
        let mut actions = Vec::new();
        if let Some(&last) = history.last() {
            let bidder_wins = bid_holds(&rolls, self.all[last], self.sides);
            // the bidder is the player who is not acting now
            let bidder_is_p1 = p == 1;
            let u = if bidder_wins == bidder_is_p1 {
                1.0
            } else {
                -1.0
            };
            actions.push(("call".to_string(), self.t.terminal(u)));
        }
        for i in first..self.all.len() {
            history.push(i);
            let child = self.node(rolls, history);
            history.pop();
            actions.push((self.all[i].label(), child));
        }
        self.t
            .decision(Player::from_index(p), infoset, public, Some(view), actions)
    }
}

/// Liar's dice with `dice = 1` die per player and `sides ≤ 4` faces.
pub fn liars_dice(dice: u32, sides: u32) -> Result<Game, CatalogError> {
    if dice != 1 || !(2..=4).contains(&sides) {
        return Err(CatalogError::OutOfRange(format!(
            "liar's dice supports 1 die and 2..=4 sides, got {dice},{sides}"
        )));
    }
    let mut b = Builder {
        sides,
        all: bids(dice, sides),
        t: NodeTable::new(format!("liars-dice-{dice}-{sides}")),
    };
    let p = 1.0 / sides as f64;
    let mut outer = Vec::new();
    for r1 in 1..=sides {
        let mut inner = Vec::new();
        for r2 in 1..=sides {
            inner.push((b.node([r1, r2], &mut Vec::new()), p));
        }
        outer.push((b.t.chance(inner), p));
    }
    let root = b.t.chance(outer);
    b.t.root = Some(root);
    Ok(Game::from_table(b.t).expect("generated liar's dice is valid"))
}
