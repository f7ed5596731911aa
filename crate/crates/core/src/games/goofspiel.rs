//! Imperfect-information Goofspiel with a fixed descending prize deck.
//!
//! Each round both players secretly bid one card from their hands; P1's bid is
//! placed first and P2 bids without seeing it. The higher bid wins the prize
//! value, equal bids discard it. Players only learn whether they won, lost or
//! drew each round. The last round is forced and resolved without decisions.

use crate::efg::{Game, NodeId, NodeTable, Player};

use super::CatalogError;

struct Builder {
    n: u32,
    t: NodeTable,
}

#[derive(Clone)]
struct State {
    hands: [Vec<u32>; 2],
    bids: [String; 2],
    outcomes: String,
    score: f64,
}

impl Builder {
    fn prize(&self, round: usize) -> f64 {
        (self.n - round as u32) as f64
    }

    fn settle(&self, s: &mut State, round: usize, b1: u32, b2: u32) {
        let (o, delta) = match b1.cmp(&b2) {
            std::cmp::Ordering::Greater => ('W', self.prize(round)),
            std::cmp::Ordering::Less => ('L', -self.prize(round)),
            std::cmp::Ordering::Equal => ('D', 0.0),
        };
        s.outcomes.push(o);
        s.score += delta;
        s.bids[0].push(char::from_digit(b1, 10).expect("single digit"));
        s.bids[1].push(char::from_digit(b2, 10).expect("single digit"));
        s.hands[0].retain(|&c| c != b1);
        s.hands[1].retain(|&c| c != b2);
    }

    fn round(&mut self, s: State, round: usize) -> NodeId {
        if s.hands[0].len() == 1 {
            let mut s = s;
            let (b1, b2) = (s.hands[0][0], s.hands[1][0]);
            self.settle(&mut s, round, b1, b2);
            return self.t.terminal(s.score);
        }
        let public1 = format!("g{}:{}:1", round + 1, s.outcomes);
        let public2 = format!("g{}:{}:2", round + 1, s.outcomes);
        let mut p1_actions = Vec::new();
        for &b1 in &s.hands[0].clone() {
            let mut p2_actions = Vec::new();
            for &b2 in &s.hands[1] {
                let mut next = s.clone();
                self.settle(&mut next, round, b1, b2);
                let child = self.round(next, round + 1);
                p2_actions.push((b2.to_string(), child));
            }
            let infoset = format!("2:{}:{}", s.bids[1], s.outcomes);
            let view = format!("1v:{}{}:{}", s.bids[0], b1, s.outcomes);
            let node =
                self.t
                    .decision(Player::P2, infoset, public2.clone(), Some(view), p2_actions);
            p1_actions.push((b1.to_string(), node));
        }
        let infoset = format!("1:{}:{}", s.bids[0], s.outcomes);
        let view = format!("2v:{}:{}", s.bids[1], s.outcomes);
        self.t
            .decision(Player::P1, infoset, public1, Some(view), p1_actions)
    }
}

/// Goofspiel with `n` cards per suit, `3 ≤ n ≤ 5`.
pub fn goofspiel(n: u32) -> Result<Game, CatalogError> {
    if !(3..=5).contains(&n) {
        return Err(CatalogError::OutOfRange(format!(
            "goofspiel needs 3 <= n <= 5, got {n}"
        )));
    }
    let mut b = Builder {
        n,
        t: NodeTable::new(format!("goofspiel-{n}")),
    };
    let hand: Vec<u32> = (1..=n).rev().collect();
    let s = State {
        hands: [hand.clone(), hand],
        bids: [String::new(), String::new()],
        outcomes: String::new(),
        score: 0.0,
    };
    let root = b.round(s, 0);
    b.t.root = Some(root);
    Ok(Game::from_table(b.t).expect("generated goofspiel is valid"))
}
