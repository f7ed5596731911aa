//! Small hand-built games and their gadgets.
//!
//! The gadget constructors hard-code their payoffs by hand so they can serve
//! as golden files for the gadget builders.

use crate::efg::{Game, NodeId, NodeTable, Player};

fn pairs(names: &[&str], children: &[NodeId]) -> Vec<(String, NodeId)> {
    names
        .iter()
        .map(|s| s.to_string())
        .zip(children.iter().copied())
        .collect()
}

fn build(t: NodeTable) -> Game {
    Game::from_table(t).expect("fixture is valid")
}

/// Adds a P1 decision with one terminal per action.
fn p1_leaf(
    t: &mut NodeTable,
    infoset: &str,
    public: &str,
    view: &str,
    actions: &[&str],
    payoffs: &[f64],
) -> NodeId {
    let kids: Vec<NodeId> = payoffs.iter().map(|&u| t.terminal(u)).collect();
    t.decision(
        Player::P1,
        infoset,
        public,
        Some(view.to_string()),
        pairs(actions, &kids),
    )
}

/// Gadget root: a chance node over `entries`, or the single entry itself.
fn entry(t: &mut NodeTable, entries: Vec<(NodeId, f64)>) -> NodeId {
    if entries.len() == 1 {
        entries[0].0
    } else {
        t.chance(entries)
    }
}

/// Adds a resolving-gadget auxiliary decision of `opponent`.
fn aux(
    t: &mut NodeTable,
    opponent: Player,
    label: &str,
    public: &str,
    cbv: f64,
    sub: NodeId,
) -> NodeId {
    let term = t.terminal(cbv);
    t.decision(
        opponent,
        label,
        public,
        None,
        pairs(&["T", "C"], &[term, sub]),
    )
}

const FIG1_P1: [&str; 3] = ["F", "H", "T"];

/// Opponent (P2) chooses H or T; P1 then picks F, H or T without observing it.
pub fn fig1_game() -> Game {
    let mut t = NodeTable::new("fig1");
    let h = p1_leaf(&mut t, "s1", "p1", "s2.H", &FIG1_P1, &[-1.0, 1.0, 0.0]);
    let tt = p1_leaf(&mut t, "s1", "p1", "s2.T", &FIG1_P1, &[-1.0, 0.0, 1.0]);
    let root = t.decision(Player::P2, "s2", "p0", None, pairs(&["H", "T"], &[h, tt]));
    t.root = Some(root);
    build(t)
}

/// Resolving gadget of [`fig1_game`] for the blueprint F/H/T = 0.5/0.5/0.
pub fn fig1_resolving() -> Game {
    let mut t = NodeTable::new("fig1");
    let h = p1_leaf(&mut t, "s1", "p1", "s2.H", &FIG1_P1, &[-1.0, 1.0, 0.0]);
    let a = aux(&mut t, Player::P2, "G:s2.H", "G:p1", 0.0, h);
    let tt = p1_leaf(&mut t, "s1", "p1", "s2.T", &FIG1_P1, &[-1.0, 0.0, 1.0]);
    let b = aux(&mut t, Player::P2, "G:s2.T", "G:p1", -0.5, tt);
    let root = entry(&mut t, vec![(a, 0.5), (b, 0.5)]);
    t.root = Some(root);
    build(t)
}

/// Max-margin gadget of [`fig1_game`] for the blueprint F/H/T = 0.5/0.5/0.
pub fn fig1_maxmargin() -> Game {
    let mut t = NodeTable::new("fig1");
    let h = p1_leaf(&mut t, "s1", "p1", "s2.H", &FIG1_P1, &[-1.0, 1.0, 0.0]);
    let tt = p1_leaf(&mut t, "s1", "p1", "s2.T", &FIG1_P1, &[-0.5, 0.5, 1.5]);
    let root = t.decision(
        Player::P2,
        "G:p1",
        "G:p1",
        None,
        pairs(&["s2.H", "s2.T"], &[h, tt]),
    );
    t.root = Some(root);
    build(t)
}

/// Payoffs indexed by (P1 action, P2 action) in the order HH, HT, TH, TT.
type Table = [f64; 4];

/// Chance picks one of three states; P1 tells state 1 apart from states 2/3;
/// P2 tells states 1/2 apart from state 3 but never sees P1's action.
fn three_state_node(t: &mut NodeTable, p1: &str, view: &str, p2: &str, payoffs: Table) -> NodeId {
    let mut p2_nodes = Vec::new();
    for k in 0..2 {
        let kids = [t.terminal(payoffs[2 * k]), t.terminal(payoffs[2 * k + 1])];
        let v = format!("{p1}.{}", if k == 0 { "H" } else { "T" });
        p2_nodes.push(t.decision(Player::P2, p2, "p2", Some(v), pairs(&["H", "T"], &kids)));
    }
    t.decision(
        Player::P1,
        p1,
        "p1",
        Some(view.to_string()),
        pairs(&["H", "T"], &p2_nodes),
    )
}

const STATES: [(&str, &str, &str); 3] = [
    ("s1.1", "s2.1", "s2.1"),
    ("s1.2", "s2.1", "s2.1"),
    ("s1.2", "s2.2", "s2.2"),
];

fn three_state_game(name: &str, tables: [Table; 3]) -> Game {
    let mut t = NodeTable::new(name);
    let mut kids = Vec::new();
    for (k, (p1, view, p2)) in STATES.iter().enumerate() {
        kids.push((
            three_state_node(&mut t, p1, &format!("v{view}"), p2, tables[k]),
            1.0 / 3.0,
        ));
    }
    let root = t.chance(kids);
    t.root = Some(root);
    build(t)
}

fn three_state_resolving(name: &str, tables: [Table; 3], cbv: [f64; 3]) -> Game {
    let mut t = NodeTable::new(name);
    let mut kids = Vec::new();
    for (k, (p1, view, p2)) in STATES.iter().enumerate() {
        let sub = three_state_node(&mut t, p1, &format!("v{view}"), p2, tables[k]);
        let a = aux(
            &mut t,
            Player::P2,
            &format!("G:v{view}"),
            "G:p1",
            cbv[k],
            sub,
        );
        kids.push((a, 1.0 / 3.0));
    }
    let root = t.chance(kids);
    t.root = Some(root);
    build(t)
}

/// `shifted` holds the already-shifted payoff tables.
fn three_state_maxmargin(name: &str, shifted: [Table; 3]) -> Game {
    let mut t = NodeTable::new(name);
    let l = three_state_node(&mut t, "s1.1", "vs2.1", "s2.1", shifted[0]);
    let m = three_state_node(&mut t, "s1.2", "vs2.1", "s2.1", shifted[1]);
    let left = t.chance(vec![(l, 0.5), (m, 0.5)]);
    let r = three_state_node(&mut t, "s1.2", "vs2.2", "s2.2", shifted[2]);
    let root = t.decision(
        Player::P2,
        "G:p1",
        "G:p1",
        None,
        pairs(&["vs2.1", "vs2.2"], &[left, r]),
    );
    t.root = Some(root);
    build(t)
}

const EQ_TABLES: [Table; 3] = [
    [2.0, 1.0, 0.0, 2.0],
    [1.0, 0.0, 0.0, 1.0],
    [1.0, 0.0, 0.0, 1.0],
];

/// Three-state game whose blueprint and equilibrium are both resolving-gadget
/// equilibria yet differ in full-game exploitability.
pub fn equilibria_example() -> Game {
    three_state_game("equilibria_example", EQ_TABLES)
}

/// Resolving gadget of [`equilibria_example`] for the blueprint
/// P1(s1.1, H) = 0, P1(s1.2, H) = 1/2.
pub fn equilibria_example_resolving() -> Game {
    three_state_resolving("equilibria_example", EQ_TABLES, [0.25, 0.25, 0.5])
}

/// Max-margin gadget of [`equilibria_example`] for the same blueprint.
pub fn equilibria_example_maxmargin() -> Game {
    three_state_maxmargin(
        "equilibria_example",
        [
            [1.75, 0.75, -0.25, 1.75],
            [0.75, -0.25, -0.25, 0.75],
            [0.5, -0.5, -0.5, 0.5],
        ],
    )
}

const MW_TABLES: [Table; 3] = [
    [2.0, 0.0, 0.0, 1.0],
    [1.0, 0.0, 0.0, 3.0],
    [1.0, 0.0, 0.0, 1.0],
];

/// Three-state game where every max-margin solution is more exploitable than
/// the resolving-gadget refinement.
pub fn maxmargin_worse() -> Game {
    three_state_game("maxmargin_worse", MW_TABLES)
}

/// Resolving gadget of [`maxmargin_worse`] for the blueprint
/// P1(s1.1, H) = 0, P1(s1.2, H) = 1/4.
pub fn maxmargin_worse_resolving() -> Game {
    three_state_resolving("maxmargin_worse", MW_TABLES, [0.125, 0.125, 0.25])
}

/// Max-margin gadget of [`maxmargin_worse`] for the same blueprint.
pub fn maxmargin_worse_maxmargin() -> Game {
    three_state_maxmargin(
        "maxmargin_worse",
        [
            [1.875, -0.125, -0.125, 0.875],
            [0.875, -0.125, -0.125, 2.875],
            [0.75, -0.25, -0.25, 0.75],
        ],
    )
}

const RPS: [&str; 3] = ["R", "P", "S"];
const RPS_PAYOFFS: [[f64; 3]; 3] = [[0.0, 1.0, -1.0], [-1.0, 0.0, 1.0], [1.0, -1.0, 0.0]];

/// Rock-paper-scissors where P2 moves first and P1 answers without seeing it.
pub fn seq_rps() -> Game {
    let mut t = NodeTable::new("seq_rps");
    let kids: Vec<NodeId> = (0..3)
        .map(|k| {
            p1_leaf(
                &mut t,
                "s1",
                "p1",
                &format!("s2.{}", RPS[k]),
                &RPS,
                &RPS_PAYOFFS[k],
            )
        })
        .collect();
    let root = t.decision(Player::P2, "s2", "p0", None, pairs(&RPS, &kids));
    t.root = Some(root);
    build(t)
}

/// Resolving gadget of [`seq_rps`] for the blueprint "always R".
pub fn seq_rps_resolving() -> Game {
    let mut t = NodeTable::new("seq_rps");
    let cbv = [0.0, -1.0, 1.0];
    let mut kids = Vec::new();
    for k in 0..3 {
        let view = format!("s2.{}", RPS[k]);
        let sub = p1_leaf(&mut t, "s1", "p1", &view, &RPS, &RPS_PAYOFFS[k]);
        kids.push((
            aux(
                &mut t,
                Player::P2,
                &format!("G:{view}"),
                "G:p1",
                cbv[k],
                sub,
            ),
            1.0 / 3.0,
        ));
    }
    let root = t.chance(kids);
    t.root = Some(root);
    build(t)
}

/// Max-margin gadget of [`seq_rps`] for the blueprint "always R".
pub fn seq_rps_maxmargin() -> Game {
    let mut t = NodeTable::new("seq_rps");
    let shifted = [[0.0, 1.0, -1.0], [0.0, 1.0, 2.0], [0.0, -2.0, -1.0]];
    let kids: Vec<NodeId> = (0..3)
        .map(|k| {
            p1_leaf(
                &mut t,
                "s1",
                "p1",
                &format!("s2.{}", RPS[k]),
                &RPS,
                &shifted[k],
            )
        })
        .collect();
    let actions: Vec<String> = RPS.iter().map(|a| format!("s2.{a}")).collect();
    let names: Vec<&str> = actions.iter().map(|s| s.as_str()).collect();
    let root = t.decision(Player::P2, "G:p1", "G:p1", None, pairs(&names, &kids));
    t.root = Some(root);
    build(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efg::NodeKind;

    #[test]
    fn fig1_has_nine_nodes() {
        let g = fig1_game();
        assert_eq!(g.num_nodes(), 9);
        assert_eq!(g.node_counts(), (2, 1, 0, 6));
    }

    #[test]
    fn fig1_payoffs_after_h() {
        let g = fig1_game();
        let NodeKind::Decision { actions, .. } = g.node(1) else {
            panic!()
        };
        let u: Vec<f64> = actions
            .iter()
            .map(|(_, c)| match g.node(*c) {
                NodeKind::Terminal { utility } => *utility,
                _ => panic!(),
            })
            .collect();
        assert_eq!(u, vec![-1.0, 1.0, 0.0]);
    }

    #[test]
    fn fixtures_validate() {
        for g in [
            fig1_game(),
            fig1_resolving(),
            fig1_maxmargin(),
            equilibria_example(),
            equilibria_example_resolving(),
            equilibria_example_maxmargin(),
            maxmargin_worse(),
            maxmargin_worse_resolving(),
            maxmargin_worse_maxmargin(),
            seq_rps(),
            seq_rps_resolving(),
            seq_rps_maxmargin(),
        ] {
            assert!(g.num_nodes() > 0);
        }
    }

    #[test]
    fn equilibria_example_augmented_views() {
        let g = equilibria_example();
        let ps = g.public_state("p1").unwrap();
        assert_eq!(ps.player_infosets(Player::P1), ["s1.1", "s1.2"]);
        assert_eq!(ps.player_infosets(Player::P2), ["vs2.1", "vs2.2"]);
        assert_eq!(ps.player_members(Player::P2)[0].len(), 2);
    }
}
