//! Finite two-player zero-sum extensive-form games with chance, perfect
//! recall, information sets and public states.
//!
//! A [`Game`] is built from a [`NodeTable`] (an unordered list of nodes with
//! arbitrary integer ids). Construction validates the table, renumbers the
//! nodes densely in depth-first order (root = 0) and indexes information sets,
//! public states and the per-player views used by subgame construction.

mod public;
mod text;
mod validate;

use std::collections::HashMap;
use std::fmt;

pub use public::PublicStateInfo;
pub use text::{parse_gadget_header, parse_game, serialize_game, GadgetHeader, ParseError};
pub(crate) use text::{parse_table, serialize_with_header};
pub use validate::{validate, ValidationReport, Violation, ViolationKind};

/// Dense node identifier. After construction, ids follow depth-first order.
pub type NodeId = usize;

/// Tolerance on the total outgoing chance mass of a node.
pub const CHANCE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    P1,
    P2,
    Chance,
}

impl Player {
    /// The other strategic player. Chance has no opponent.
    pub fn opponent(self) -> Player {
        match self {
            Player::P1 => Player::P2,
            Player::P2 => Player::P1,
            Player::Chance => Player::Chance,
        }
    }

    /// 0 for P1, 1 for P2. Panics on chance.
    pub fn index(self) -> usize {
        match self {
            Player::P1 => 0,
            Player::P2 => 1,
            Player::Chance => panic!("chance has no player index"),
        }
    }

    pub fn from_index(i: usize) -> Player {
        match i {
            0 => Player::P1,
            1 => Player::P2,
            _ => panic!("player index out of range: {i}"),
        }
    }

    /// Multiplier turning a P1 utility into this player's utility.
    pub fn sign(self) -> f64 {
        match self {
            Player::P2 => -1.0,
            _ => 1.0,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Player::P1 => 1,
            Player::P2 => 2,
            Player::Chance => 0,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::P1 => write!(f, "P1"),
            Player::P2 => write!(f, "P2"),
            Player::Chance => write!(f, "chance"),
        }
    }
}

pub const PLAYERS: [Player; 2] = [Player::P1, Player::P2];

/// Node payload. Child references are node ids of the enclosing table/game.
#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    Chance {
        outcomes: Vec<(NodeId, f64)>,
    },
    Decision {
        player: Player,
        infoset: String,
        public: String,
        /// Augmented information set of the non-acting player at this history.
        /// Derived from the tree when absent.
        view: Option<String>,
        actions: Vec<(String, NodeId)>,
    },
    Terminal {
        /// Utility of P1. P2 receives the negation.
        utility: f64,
    },
}

impl NodeKind {
    pub fn children(&self) -> Vec<NodeId> {
        match self {
            NodeKind::Chance { outcomes } => outcomes.iter().map(|&(c, _)| c).collect(),
            NodeKind::Decision { actions, .. } => actions.iter().map(|(_, c)| *c).collect(),
            NodeKind::Terminal { .. } => Vec::new(),
        }
    }

    pub fn decision(player: Player, infoset: impl Into<String>, public: impl Into<String>) -> Self {
        NodeKind::Decision {
            player,
            infoset: infoset.into(),
            public: public.into(),
            view: None,
            actions: Vec::new(),
        }
    }

    fn map_children(&mut self, f: impl Fn(NodeId) -> NodeId) {
        match self {
            NodeKind::Chance { outcomes } => outcomes.iter_mut().for_each(|(c, _)| *c = f(*c)),
            NodeKind::Decision { actions, .. } => actions.iter_mut().for_each(|(_, c)| *c = f(*c)),
            NodeKind::Terminal { .. } => {}
        }
    }
}

/// Unvalidated node list as produced by a parser or a constructor.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NodeTable {
    pub name: String,
    pub root: Option<NodeId>,
    pub nodes: Vec<(NodeId, NodeKind)>,
}

impl NodeTable {
    pub fn new(name: impl Into<String>) -> Self {
        NodeTable {
            name: name.into(),
            root: None,
            nodes: Vec::new(),
        }
    }

    /// Appends a node with the next free id and returns that id.
    pub fn push(&mut self, kind: NodeKind) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push((id, kind));
        if self.root.is_none() {
            self.root = Some(id);
        }
        id
    }

    pub fn terminal(&mut self, utility: f64) -> NodeId {
        self.push(NodeKind::Terminal { utility })
    }

    pub fn chance(&mut self, outcomes: Vec<(NodeId, f64)>) -> NodeId {
        self.push(NodeKind::Chance { outcomes })
    }

    pub fn decision(
        &mut self,
        player: Player,
        infoset: impl Into<String>,
        public: impl Into<String>,
        view: Option<String>,
        actions: Vec<(String, NodeId)>,
    ) -> NodeId {
        self.push(NodeKind::Decision {
            player,
            infoset: infoset.into(),
            public: public.into(),
            view,
            actions,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InfoSet {
    pub label: String,
    pub player: Player,
    pub members: Vec<NodeId>,
    pub actions: Vec<String>,
    pub public: String,
}

#[derive(Debug, thiserror::Error)]
pub enum GameError {
    #[error("invalid game: {0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown public state `{0}`")]
    UnknownPublicState(String),
    #[error("unknown information set `{1}` of {0}")]
    UnknownInfoset(Player, String),
}

/// A validated, immutable game tree.
#[derive(Clone, Debug)]
pub struct Game {
    name: String,
    nodes: Vec<NodeKind>,
    parent: Vec<Option<(NodeId, usize)>>,
    depth: Vec<usize>,
    infosets: Vec<InfoSet>,
    infoset_lookup: HashMap<(Player, String), usize>,
    node_infoset: Vec<Option<usize>>,
    /// Per decision node, the augmented information set label of each player.
    views: Vec<Option<[String; 2]>>,
    public_states: Vec<PublicStateInfo>,
    public_lookup: HashMap<String, usize>,
    node_public: Vec<Option<usize>>,
}

impl PartialEq for Game {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.nodes == other.nodes
    }
}

impl Game {
    /// Validates and canonicalizes a node table.
    pub fn from_table(table: NodeTable) -> Result<Game, GameError> {
        let report = validate(&table);
        if !report.is_valid() {
            return Err(GameError::Invalid(report));
        }
        Ok(Self::build_unchecked(table))
    }

    fn build_unchecked(table: NodeTable) -> Game {
        let root = table.root.expect("validated table has a root");
        let by_id: HashMap<NodeId, &NodeKind> =
            table.nodes.iter().map(|(id, k)| (*id, k)).collect();

        // depth-first renumbering
        let mut order = Vec::with_capacity(table.nodes.len());
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            order.push(id);
            let children = by_id[&id].children();
            stack.extend(children.into_iter().rev());
        }
        let remap: HashMap<NodeId, NodeId> = order
            .iter()
            .enumerate()
            .map(|(new, &old)| (old, new))
            .collect();
        let nodes: Vec<NodeKind> = order
            .iter()
            .map(|old| {
                let mut kind = by_id[old].clone();
                kind.map_children(|c| remap[&c]);
                kind
            })
            .collect();

        let n = nodes.len();
        let mut parent = vec![None; n];
        let mut depth = vec![0usize; n];
        for id in 0..n {
            for (k, c) in nodes[id].children().into_iter().enumerate() {
                parent[c] = Some((id, k));
                depth[c] = depth[id] + 1;
            }
        }

        let mut infosets: Vec<InfoSet> = Vec::new();
        let mut infoset_lookup = HashMap::new();
        let mut node_infoset = vec![None; n];
        let mut public_lookup: HashMap<String, usize> = HashMap::new();
        let mut public_nodes: Vec<(String, Vec<NodeId>)> = Vec::new();
        let mut node_public = vec![None; n];
        for (id, kind) in nodes.iter().enumerate() {
            if let NodeKind::Decision {
                player,
                infoset,
                public,
                actions,
                ..
            } = kind
            {
                let key = (*player, infoset.clone());
                let idx = *infoset_lookup.entry(key).or_insert_with(|| {
                    infosets.push(InfoSet {
                        label: infoset.clone(),
                        player: *player,
                        members: Vec::new(),
                        actions: actions.iter().map(|(a, _)| a.clone()).collect(),
                        public: public.clone(),
                    });
                    infosets.len() - 1
                });
                infosets[idx].members.push(id);
                node_infoset[id] = Some(idx);
                let p = *public_lookup.entry(public.clone()).or_insert_with(|| {
                    public_nodes.push((public.clone(), Vec::new()));
                    public_nodes.len() - 1
                });
                public_nodes[p].1.push(id);
                node_public[id] = Some(p);
            }
        }

        let views = public::derive_views(&nodes, &node_infoset, &infosets, &public_nodes);
        let public_states = public_nodes
            .into_iter()
            .map(|(label, members)| PublicStateInfo::new(label, members, &views))
            .collect();

        Game {
            name: table.name,
            nodes,
            parent,
            depth,
            infosets,
            infoset_lookup,
            node_infoset,
            views,
            public_states,
            public_lookup,
            node_public,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> &NodeKind {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[NodeKind] {
        &self.nodes
    }

    pub fn parent(&self, id: NodeId) -> Option<(NodeId, usize)> {
        self.parent[id]
    }

    pub fn depth(&self, id: NodeId) -> usize {
        self.depth[id]
    }

    pub fn infosets(&self) -> &[InfoSet] {
        &self.infosets
    }

    pub fn infoset(&self, idx: usize) -> &InfoSet {
        &self.infosets[idx]
    }

    pub fn infoset_index(&self, player: Player, label: &str) -> Option<usize> {
        self.infoset_lookup
            .get(&(player, label.to_string()))
            .copied()
    }

    pub fn node_infoset(&self, id: NodeId) -> Option<usize> {
        self.node_infoset[id]
    }

    /// Indices of the information sets owned by `player`, in construction order.
    pub fn player_infosets(&self, player: Player) -> impl Iterator<Item = usize> + '_ {
        self.infosets
            .iter()
            .enumerate()
            .filter(move |(_, s)| s.player == player)
            .map(|(i, _)| i)
    }

    /// Augmented information set label of `player` at decision node `id`.
    pub fn view(&self, id: NodeId, player: Player) -> Option<&str> {
        self.views[id].as_ref().map(|v| v[player.index()].as_str())
    }

    pub fn public_states(&self) -> &[PublicStateInfo] {
        &self.public_states
    }

    pub fn public_state(&self, label: &str) -> Option<&PublicStateInfo> {
        self.public_lookup
            .get(label)
            .map(|&i| &self.public_states[i])
    }

    pub fn node_public_state(&self, id: NodeId) -> Option<&PublicStateInfo> {
        self.node_public[id].map(|i| &self.public_states[i])
    }

    /// Whether `ancestor` lies on the root path of `node` (inclusive).
    pub fn is_ancestor(&self, ancestor: NodeId, node: NodeId) -> bool {
        let mut cur = Some(node);
        while let Some(c) = cur {
            if c == ancestor {
                return true;
            }
            if c < ancestor {
                return false;
            }
            cur = self.parent[c].map(|(p, _)| p);
        }
        false
    }

    /// Nodes on the root path of `node`, root first, excluding `node`.
    pub fn path(&self, node: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut cur = self.parent[node].map(|(p, _)| p);
        while let Some(c) = cur {
            out.push(c);
            cur = self.parent[c].map(|(p, _)| p);
        }
        out.reverse();
        out
    }

    /// One past the last node id of the subtree rooted at `node`.
    pub fn subtree_end(&self, node: NodeId) -> NodeId {
        let mut end = node + 1;
        while end < self.nodes.len() && self.depth[end] > self.depth[node] {
            end += 1;
        }
        end
    }

    pub fn terminals(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.nodes.iter().enumerate().filter_map(|(i, k)| match k {
            NodeKind::Terminal { utility } => Some((i, *utility)),
            _ => None,
        })
    }

    /// Returns a copy with every terminal utility passed through `f`.
    pub fn map_utilities(&self, f: impl Fn(f64) -> f64) -> Game {
        let mut g = self.clone();
        for k in g.nodes.iter_mut() {
            if let NodeKind::Terminal { utility } = k {
                *utility = f(*utility);
            }
        }
        g
    }

    /// The node table of this game with canonical ids, suitable for editing.
    pub fn to_table(&self) -> NodeTable {
        NodeTable {
            name: self.name.clone(),
            root: Some(0),
            nodes: self.nodes.iter().cloned().enumerate().collect(),
        }
    }

    /// Counts of (decision nodes of P1, decision nodes of P2, chance, terminal).
    pub fn node_counts(&self) -> (usize, usize, usize, usize) {
        let mut c = (0, 0, 0, 0);
        for k in &self.nodes {
            match k {
                NodeKind::Decision {
                    player: Player::P1, ..
                } => c.0 += 1,
                NodeKind::Decision { .. } => c.1 += 1,
                NodeKind::Chance { .. } => c.2 += 1,
                NodeKind::Terminal { .. } => c.3 += 1,
            }
        }
        c
    }

    /// Hash of the canonical serialization; stable within one build.
    pub fn content_hash(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        serialize_game(self).hash(&mut h);
        h.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> NodeTable {
        let mut t = NodeTable::new("tiny");
        t.nodes.push((
            10,
            NodeKind::Chance {
                outcomes: vec![(20, 0.5), (30, 0.5)],
            },
        ));
        t.nodes.push((
            20,
            NodeKind::Decision {
                player: Player::P1,
                infoset: "a".into(),
                public: "p".into(),
                view: None,
                actions: vec![("x".into(), 40), ("y".into(), 41)],
            },
        ));
        t.nodes.push((
            30,
            NodeKind::Decision {
                player: Player::P1,
                infoset: "a".into(),
                public: "p".into(),
                view: None,
                actions: vec![("x".into(), 42), ("y".into(), 43)],
            },
        ));
        for (id, u) in [(40, 1.0), (41, -1.0), (42, 0.0), (43, 2.0)] {
            t.nodes.push((id, NodeKind::Terminal { utility: u }));
        }
        t.root = Some(10);
        t
    }

    #[test]
    fn renumbers_depth_first() {
        let g = Game::from_table(tiny()).unwrap();
        assert_eq!(g.num_nodes(), 7);
        assert!(matches!(g.node(0), NodeKind::Chance { .. }));
        assert_eq!(g.node(1).children(), vec![2, 3]);
        assert_eq!(g.node(4).children(), vec![5, 6]);
        assert_eq!(g.parent(5), Some((4, 0)));
        assert_eq!(g.subtree_end(1), 4);
        assert_eq!(g.path(6), vec![0, 4]);
        assert!(g.is_ancestor(0, 6));
        assert!(!g.is_ancestor(1, 6));
    }

    #[test]
    fn indexes_infosets_and_public_states() {
        let g = Game::from_table(tiny()).unwrap();
        assert_eq!(g.infosets().len(), 1);
        assert_eq!(g.infoset(0).members, vec![1, 4]);
        let ps = g.public_state("p").unwrap();
        assert_eq!(ps.nodes, vec![1, 4]);
        assert_eq!(ps.infosets[0], vec!["a".to_string()]);
        // P2 never acts, so each history is its own view
        assert_eq!(ps.infosets[1].len(), 2);
    }

    #[test]
    fn opponent_and_sign() {
        assert_eq!(Player::P1.opponent(), Player::P2);
        assert_eq!(Player::P2.sign(), -1.0);
        assert_eq!(Player::from_index(1), Player::P2);
    }
}
