use std::collections::HashMap;

use super::{InfoSet, NodeId, NodeKind, Player, PLAYERS};

/// A public state together with the information sets (or augmented
/// information sets, for a player not acting there) each player holds in it.
#[derive(Clone, Debug, PartialEq)]
pub struct PublicStateInfo {
    pub label: String,
    /// Histories of the public state, in node order.
    pub nodes: Vec<NodeId>,
    /// Per player, the labels of that player's (augmented) infosets here.
    pub infosets: [Vec<String>; 2],
    /// Per player, the member histories of each entry of `infosets`.
    pub members: [Vec<Vec<NodeId>>; 2],
}

impl PublicStateInfo {
    pub(super) fn new(label: String, nodes: Vec<NodeId>, views: &[Option<[String; 2]>]) -> Self {
        let mut infosets: [Vec<String>; 2] = [Vec::new(), Vec::new()];
        let mut members: [Vec<Vec<NodeId>>; 2] = [Vec::new(), Vec::new()];
        for p in 0..2 {
            let mut index: HashMap<&str, usize> = HashMap::new();
            for &n in &nodes {
                let v = &views[n].as_ref().expect("decision node")[p];
                let k = *index.entry(v.as_str()).or_insert_with(|| {
                    infosets[p].push(v.clone());
                    members[p].push(Vec::new());
                    infosets[p].len() - 1
                });
                members[p][k].push(n);
            }
        }
        PublicStateInfo {
            label,
            nodes,
            infosets,
            members,
        }
    }

    /// Labels of `player`'s (augmented) infosets in this public state.
    pub fn player_infosets(&self, player: Player) -> &[String] {
        &self.infosets[player.index()]
    }

    /// Member histories of `player`'s (augmented) infosets, aligned with
    /// [`Self::player_infosets`].
    pub fn player_members(&self, player: Player) -> &[Vec<NodeId>] {
        &self.members[player.index()]
    }
}

/// Computes, for every decision node, the (augmented) infoset label of both
/// players. The acting player's label is its infoset. For the other player an
/// explicit `view` is used when present; otherwise histories of the public
/// state are grouped by the first infosets of that player below them, and
/// histories without any such infoset stay on their own.
pub(super) fn derive_views(
    nodes: &[NodeKind],
    node_infoset: &[Option<usize>],
    infosets: &[InfoSet],
    public_nodes: &[(String, Vec<NodeId>)],
) -> Vec<Option<[String; 2]>> {
    let n = nodes.len();
    let mut out: Vec<Option<[String; 2]>> = vec![None; n];
    for (label, members) in public_nodes {
        for viewer in PLAYERS {
            let passive: Vec<NodeId> = members
                .iter()
                .copied()
                .filter(|&m| match &nodes[m] {
                    NodeKind::Decision { player, view, .. } => *player != viewer && view.is_none(),
                    _ => false,
                })
                .collect();
            let derived = group_by_first_infosets(nodes, node_infoset, viewer, &passive);
            let mut derived_label: HashMap<NodeId, String> = HashMap::new();
            for (k, class) in derived.iter().enumerate() {
                for &m in class {
                    derived_label.insert(m, format!("{label}~{}:{k}", viewer.number()));
                }
            }
            for &m in members {
                let NodeKind::Decision { player, view, .. } = &nodes[m] else {
                    continue;
                };
                let v = if *player == viewer {
                    infosets[node_infoset[m].expect("decision node has infoset")]
                        .label
                        .clone()
                } else if let Some(v) = view {
                    v.clone()
                } else {
                    derived_label[&m].clone()
                };
                let slot = out[m].get_or_insert_with(|| [String::new(), String::new()]);
                slot[viewer.index()] = v;
            }
        }
    }
    out
}

fn group_by_first_infosets(
    nodes: &[NodeKind],
    node_infoset: &[Option<usize>],
    viewer: Player,
    roots: &[NodeId],
) -> Vec<Vec<NodeId>> {
    // union-find over roots, joined through shared infosets of the viewer
    let mut uf: Vec<usize> = (0..roots.len()).collect();
    fn find(uf: &mut [usize], mut i: usize) -> usize {
        while uf[i] != i {
            uf[i] = uf[uf[i]];
            i = uf[i];
        }
        i
    }
    let mut owner: HashMap<usize, usize> = HashMap::new();
    for (r, &root) in roots.iter().enumerate() {
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            if let NodeKind::Decision { player, .. } = &nodes[id] {
                if *player == viewer {
                    let s = node_infoset[id].expect("decision node has infoset");
                    match owner.get(&s) {
                        Some(&other) => {
                            let (a, b) = (find(&mut uf, r), find(&mut uf, other));
                            uf[a.max(b)] = a.min(b);
                        }
                        None => {
                            owner.insert(s, r);
                        }
                    }
                    continue;
                }
            }
            stack.extend(nodes[id].children());
        }
    }
    let mut classes: Vec<Vec<NodeId>> = Vec::new();
    let mut class_of: HashMap<usize, usize> = HashMap::new();
    for (r, &root) in roots.iter().enumerate() {
        let rep = find(&mut uf, r);
        let k = *class_of.entry(rep).or_insert_with(|| {
            classes.push(Vec::new());
            classes.len() - 1
        });
        classes[k].push(root);
    }
    classes
}
