use std::collections::{HashMap, HashSet};
use std::fmt;

use super::{NodeId, NodeKind, NodeTable, Player, CHANCE_TOLERANCE, PLAYERS};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// The node table is not a rooted tree.
    Structural,
    /// The tree violates a game invariant (chance mass, perfect recall, ...).
    Semantic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
    /// Offending node ids, infoset or public-state labels.
    pub labels: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn structural(&self) -> impl Iterator<Item = &Violation> {
        self.violations
            .iter()
            .filter(|v| v.kind == ViolationKind::Structural)
    }

    pub fn semantic(&self) -> impl Iterator<Item = &Violation> {
        self.violations
            .iter()
            .filter(|v| v.kind == ViolationKind::Semantic)
    }

    /// Whether any violation message contains `needle`.
    pub fn mentions(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.message.contains(needle))
    }

    fn push(&mut self, kind: ViolationKind, message: String, labels: Vec<String>) {
        self.violations.push(Violation {
            kind,
            message,
            labels,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            let kind = match v.kind {
                ViolationKind::Structural => "structural",
                ViolationKind::Semantic => "semantic",
            };
            write!(f, "{kind}: {}", v.message)?;
            if !v.labels.is_empty() {
                write!(f, " [{}]", v.labels.join(", "))?;
            }
        }
        Ok(())
    }
}

/// Checks a node table against every game invariant. Semantic checks run only
/// when the table is structurally a rooted tree.
pub fn validate(table: &NodeTable) -> ValidationReport {
    use ViolationKind::*;
    let mut report = ValidationReport::default();

    let mut by_id: HashMap<NodeId, &NodeKind> = HashMap::new();
    for (id, kind) in &table.nodes {
        if by_id.insert(*id, kind).is_some() {
            report.push(
                Structural,
                format!("duplicate node id {id}"),
                vec![id.to_string()],
            );
        }
    }
    let Some(root) = table.root else {
        report.push(Structural, "missing root".into(), vec![]);
        return report;
    };
    if !by_id.contains_key(&root) {
        report.push(
            Structural,
            format!("root {root} is not a node"),
            vec![root.to_string()],
        );
        return report;
    }
    let mut parent: HashMap<NodeId, NodeId> = HashMap::new();
    let mut ids: Vec<NodeId> = by_id.keys().copied().collect();
    ids.sort_unstable();
    for &id in &ids {
        for c in by_id[&id].children() {
            if !by_id.contains_key(&c) {
                report.push(
                    Structural,
                    format!("node {id} references unknown node {c}"),
                    vec![id.to_string(), c.to_string()],
                );
            } else if c == root {
                report.push(
                    Structural,
                    format!("root {root} has parent {id}"),
                    vec![id.to_string()],
                );
            } else if let Some(p) = parent.insert(c, id) {
                report.push(
                    Structural,
                    format!("node {c} has multiple parents ({p}, {id})"),
                    vec![c.to_string()],
                );
            }
        }
    }
    if !report.is_valid() {
        return report;
    }
    let mut seen = HashSet::new();
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        if seen.insert(id) {
            stack.extend(by_id[&id].children());
        }
    }
    let unreachable: Vec<String> = ids
        .iter()
        .filter(|i| !seen.contains(i))
        .map(|i| i.to_string())
        .collect();
    if !unreachable.is_empty() {
        report.push(
            Structural,
            "nodes unreachable from root".into(),
            unreachable,
        );
        return report;
    }

    semantic_checks(table, root, &by_id, &mut report);
    report
}

type Sequence = Vec<(String, String)>;

fn semantic_checks(
    table: &NodeTable,
    root: NodeId,
    by_id: &HashMap<NodeId, &NodeKind>,
    report: &mut ValidationReport,
) {
    use ViolationKind::Semantic;

    for (id, kind) in &table.nodes {
        match kind {
            NodeKind::Chance { outcomes } => {
                if outcomes.is_empty() {
                    report.push(
                        Semantic,
                        format!("chance node {id} has no outcomes"),
                        vec![id.to_string()],
                    );
                    continue;
                }
                let mass: f64 = outcomes.iter().map(|&(_, p)| p).sum();
                if outcomes.iter().any(|&(_, p)| !(p > 0.0) || !p.is_finite()) {
                    report.push(
                        Semantic,
                        format!("chance node {id} has a nonpositive probability"),
                        vec![id.to_string()],
                    );
                }
                if !((mass - 1.0).abs() <= CHANCE_TOLERANCE) {
                    report.push(
                        Semantic,
                        format!("chance mass {mass} at node {id}"),
                        vec![id.to_string()],
                    );
                }
            }
            NodeKind::Decision {
                player, actions, ..
            } => {
                if *player == Player::Chance {
                    report.push(
                        Semantic,
                        format!("decision node {id} owned by chance"),
                        vec![id.to_string()],
                    );
                }
                if actions.is_empty() {
                    report.push(
                        Semantic,
                        format!("decision node {id} has no actions"),
                        vec![id.to_string()],
                    );
                }
                let mut names = HashSet::new();
                for (a, _) in actions {
                    if !names.insert(a) {
                        report.push(
                            Semantic,
                            format!("duplicate action {a} at node {id}"),
                            vec![id.to_string()],
                        );
                    }
                }
            }
            NodeKind::Terminal { utility } => {
                if !utility.is_finite() {
                    report.push(
                        Semantic,
                        format!("terminal {id} has non-finite utility"),
                        vec![id.to_string()],
                    );
                }
            }
        }
    }

    // per-node sequences of both players and ancestor sets for public states
    struct Info {
        seqs: [Sequence; 2],
        ancestors_public: Vec<String>,
    }
    let mut info: HashMap<NodeId, Info> = HashMap::new();
    let mut stack = vec![(
        root,
        Info {
            seqs: [Vec::new(), Vec::new()],
            ancestors_public: Vec::new(),
        },
    )];
    while let Some((id, here)) = stack.pop() {
        match by_id[&id] {
            NodeKind::Chance { outcomes } => {
                for &(c, _) in outcomes {
                    stack.push((
                        c,
                        Info {
                            seqs: here.seqs.clone(),
                            ancestors_public: here.ancestors_public.clone(),
                        },
                    ));
                }
            }
            NodeKind::Decision {
                player,
                infoset,
                public,
                actions,
                ..
            } if *player != Player::Chance => {
                for (a, c) in actions {
                    let mut seqs = here.seqs.clone();
                    seqs[player.index()].push((infoset.clone(), a.clone()));
                    let mut anc = here.ancestors_public.clone();
                    anc.push(public.clone());
                    stack.push((
                        *c,
                        Info {
                            seqs,
                            ancestors_public: anc,
                        },
                    ));
                }
            }
            _ => {}
        }
        info.insert(id, here);
    }

    let mut ordered: Vec<(&NodeId, &NodeKind)> = table.nodes.iter().map(|(i, k)| (i, k)).collect();
    ordered.sort_by_key(|(i, _)| **i);

    let mut infosets: HashMap<(Player, &str), (NodeId, &Vec<(String, NodeId)>, &str)> =
        HashMap::new();
    let mut views: HashMap<(Player, &str), (NodeId, &str)> = HashMap::new();
    for (id, kind) in ordered {
        let NodeKind::Decision {
            player,
            infoset,
            public,
            view,
            actions,
        } = kind
        else {
            continue;
        };
        if *player == Player::Chance {
            continue;
        }
        let node_info = &info[id];
        if node_info.ancestors_public.iter().any(|p| p == public) {
            report.push(
                Semantic,
                format!("public state {public} contains node {id} and one of its ancestors"),
                vec![public.clone(), id.to_string()],
            );
        }
        match infosets.get(&(*player, infoset.as_str())) {
            None => {
                infosets.insert((*player, infoset.as_str()), (*id, actions, public.as_str()));
            }
            Some(&(first, first_actions, first_public)) => {
                let names = |v: &Vec<(String, NodeId)>| {
                    v.iter().map(|(a, _)| a.clone()).collect::<Vec<_>>()
                };
                if names(first_actions) != names(actions) {
                    report.push(
                        Semantic,
                        format!("action mismatch in infoset {infoset} (nodes {first} and {id})"),
                        vec![infoset.clone()],
                    );
                }
                if first_public != public {
                    report.push(
                        Semantic,
                        format!(
                            "infoset {infoset} spans public states {first_public} and {public}"
                        ),
                        vec![infoset.clone()],
                    );
                }
                if info[&first].seqs[player.index()] != node_info.seqs[player.index()] {
                    report.push(
                        Semantic,
                        format!(
                            "perfect recall violated in infoset {infoset} (nodes {first} and {id})"
                        ),
                        vec![infoset.clone()],
                    );
                }
            }
        }
        if let Some(v) = view {
            let viewer = player.opponent();
            match views.get(&(viewer, v.as_str())) {
                None => {
                    views.insert((viewer, v.as_str()), (*id, public.as_str()));
                }
                Some(&(first, first_public)) => {
                    if first_public != public {
                        report.push(
                            Semantic,
                            format!("view {v} spans public states {first_public} and {public}"),
                            vec![v.clone()],
                        );
                    }
                    if info[&first].seqs[viewer.index()] != node_info.seqs[viewer.index()] {
                        report.push(
                            Semantic,
                            format!("perfect recall violated in view {v} (nodes {first} and {id})"),
                            vec![v.clone()],
                        );
                    }
                }
            }
        }
    }
    for p in PLAYERS {
        for (key, &(node, _)) in views.iter().filter(|((q, _), _)| *q == p) {
            if infosets.contains_key(key) {
                report.push(
                    Semantic,
                    format!("view {} reuses an infoset label of {p}", key.1),
                    vec![key.1.to_string(), node.to_string()],
                );
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matching() -> NodeTable {
        let mut t = NodeTable::new("m");
        let a = t.terminal(1.0);
        let b = t.terminal(-1.0);
        let c = t.terminal(-1.0);
        let d = t.terminal(1.0);
        let l = t.decision(
            Player::P2,
            "s2",
            "p2",
            None,
            vec![("h".into(), a), ("t".into(), b)],
        );
        let r = t.decision(
            Player::P2,
            "s2",
            "p2",
            None,
            vec![("h".into(), c), ("t".into(), d)],
        );
        let root = t.decision(
            Player::P1,
            "s1",
            "p1",
            None,
            vec![("h".into(), l), ("t".into(), r)],
        );
        t.root = Some(root);
        t
    }

    #[test]
    fn valid_table_has_no_violations() {
        assert!(validate(&matching()).is_valid());
    }

    #[test]
    fn dangling_and_duplicate_ids_are_structural() {
        let mut t = matching();
        t.nodes.push((0, NodeKind::Terminal { utility: 0.0 }));
        if let NodeKind::Decision { actions, .. } = &mut t.nodes[4].1 {
            actions[0].1 = 99;
        }
        let r = validate(&t);
        assert!(r.structural().count() >= 2);
        assert!(r.mentions("duplicate node id 0"));
        assert!(r.mentions("unknown node 99"));
    }

    #[test]
    fn missing_root() {
        let mut t = matching();
        t.root = None;
        assert!(validate(&t).mentions("missing root"));
    }

    #[test]
    fn perfect_recall_violation() {
        let mut t = matching();
        // P1 forgets its own first move
        let mut u = NodeTable::new("pr");
        let x = u.terminal(0.0);
        let y = u.terminal(0.0);
        let z = u.terminal(0.0);
        let w = u.terminal(0.0);
        let l = u.decision(
            Player::P1,
            "again",
            "q",
            None,
            vec![("a".into(), x), ("b".into(), y)],
        );
        let r = u.decision(
            Player::P1,
            "again",
            "q",
            None,
            vec![("a".into(), z), ("b".into(), w)],
        );
        let root = u.decision(
            Player::P1,
            "first",
            "p",
            None,
            vec![("a".into(), l), ("b".into(), r)],
        );
        u.root = Some(root);
        let rep = validate(&u);
        assert!(rep.mentions("perfect recall"), "{rep}");
        t.root = Some(6);
        assert!(validate(&t).is_valid());
    }

    #[test]
    fn public_state_with_ancestor_pair() {
        let mut u = NodeTable::new("anc");
        let x = u.terminal(0.0);
        let y = u.terminal(0.0);
        let c = u.decision(Player::P2, "b", "same", None, vec![("a".into(), x)]);
        let root = u.decision(
            Player::P1,
            "a",
            "same",
            None,
            vec![("a".into(), c), ("b".into(), y)],
        );
        u.root = Some(root);
        assert!(validate(&u).mentions("ancestors"));
    }
}
