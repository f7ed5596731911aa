//! Leduc hold'em: six cards (J, Q, K in two suits), one private card each, one
//! public board card, two betting rounds with raise sizes 2 and 4, at most two
//! raises per round, ante 1. P1 acts first in both rounds.

use crate::efg::{Game, NodeId, NodeTable, Player};

const CARDS: [&str; 6] = ["J1", "J2", "Q1", "Q2", "K1", "K2"];
const RAISE: [f64; 2] = [2.0, 4.0];
const MAX_RAISES: usize = 2;

fn rank(card: usize) -> usize {
    card / 2
}

fn rank_name(card: usize) -> char {
    ['J', 'Q', 'K'][rank(card)]
}

struct Builder {
    t: NodeTable,
}

#[derive(Clone)]
struct State {
    cards: [usize; 2],
    board: Option<usize>,
    /// Chips each player has put in, ante included.
    committed: [f64; 2],
    round: usize,
    /// Betting history of finished rounds joined with the current one.
    history: String,
    current: String,
    raises: usize,
}

impl State {
    fn public(&self) -> String {
        match self.board {
            None => format!("L1:{}", self.current),
            Some(b) => format!("L2:{}:{}:{}", self.history, CARDS[b], self.current),
        }
    }

    fn facing_bet(&self) -> bool {
        self.committed[0] != self.committed[1]
    }

    fn to_act(&self) -> usize {
        self.current.len() % 2
    }
}

/// Showdown utility for P1.
fn showdown(s: &State) -> f64 {
    let board = s.board.expect("showdown after board");
    let strength = |c: usize| if rank(c) == rank(board) { 10 } else { rank(c) };
    let (a, b) = (strength(s.cards[0]), strength(s.cards[1]));
    let pot = s.committed[1];
    match a.cmp(&b) {
        std::cmp::Ordering::Greater => pot,
        std::cmp::Ordering::Less => -pot,
        std::cmp::Ordering::Equal => 0.0,
    }
}

impl Builder {
    fn betting(&mut self, s: State) -> NodeId {
        let p = s.to_act();
        let player = Player::from_index(p);
        let other = 1 - p;
        let public = s.public();
        let infoset = format!("{}:{}:{}", p + 1, rank_name(s.cards[p]), public);
        let view = format!("{}v:{}:{}", other + 1, rank_name(s.cards[other]), public);
        let mut actions = Vec::new();
        if s.facing_bet() {
            // fold: the folder forfeits what it has committed
            let u = if p == 0 {
                -s.committed[0]
            } else {
                s.committed[1]
            };
            actions.push(("f".to_string(), self.t.terminal(u)));
            let mut call = s.clone();
            call.committed[p] = call.committed[other];
            call.current.push('c');
            let child = self.end_round(call);
            actions.push(("c".to_string(), child));
        } else {
            let mut check = s.clone();
            check.current.push('c');
            let child = if check.current.len() >= 2 {
                self.end_round(check)
            } else {
                self.betting(check)
            };
            actions.push(("c".to_string(), child));
        }
        if s.raises < MAX_RAISES {
            let mut raise = s.clone();
            raise.committed[p] = raise.committed[other] + RAISE[s.round];
            raise.raises += 1;
            raise.current.push('r');
            let child = self.betting(raise);
            actions.push(("r".to_string(), child));
        }
        self.t
            .decision(player, infoset, public, Some(view), actions)
    }

    fn end_round(&mut self, s: State) -> NodeId {
        if s.round == 1 {
            return self.t.terminal(showdown(&s));
        }
        let remaining: Vec<usize> = (0..6).filter(|c| !s.cards.contains(c)).collect();
        let p = 1.0 / remaining.len() as f64;
        let outcomes = remaining
            .into_iter()
            .map(|b| {
                let mut next = s.clone();
                next.board = Some(b);
                next.round = 1;
                next.history = s.current.clone();
                next.current.clear();
                next.raises = 0;
                (self.betting(next), p)
            })
            .collect();
        self.t.chance(outcomes)
    }
}

pub fn leduc() -> Game {
    let mut b = Builder {
        t: NodeTable::new("leduc"),
    };
    let mut deals = Vec::new();
    for c1 in 0..6 {
        let mut inner = Vec::new();
        for c2 in (0..6).filter(|&c| c != c1) {
            let s = State {
                cards: [c1, c2],
                board: None,
                committed: [1.0, 1.0],
                round: 0,
                history: String::new(),
                current: String::new(),
                raises: 0,
            };
            inner.push((b.betting(s), 0.2));
        }
        deals.push((b.t.chance(inner), 1.0 / 6.0));
    }
    let root = b.t.chance(deals);
    b.t.root = Some(root);
    Game::from_table(b.t).expect("generated leduc is valid")
}
