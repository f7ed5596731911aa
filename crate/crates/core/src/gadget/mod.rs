//! Subgame extraction and gadget construction.
//!
//! A subgame is rooted at every history of one public state. The resolving
//! gadget lets the opponent terminate at each of its root infosets for the
//! blueprint's counterfactual best-response value; the max-margin gadget lets
//! it pick a root infoset and pays utilities shifted by that value. Entry
//! chance is proportional to the resolver-and-chance reach of each history
//! and is normalized, with the normalization constant recorded.

mod prior;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use log::debug;

pub use prior::{clipped, make_prior, Prior, PriorKind, DEFAULT_CLIP};

use crate::efg::{
    parse_table, serialize_with_header, GadgetHeader, Game, GameError, NodeId, NodeKind, NodeTable,
    Player,
};
use crate::strategy::{
    best_response_table, combine, counterfactual_from, node_values, reach_all, BehavioralStrategy,
    CbvReport, StrategyError, StrategyProfile,
};

/// Prefix of gadget-only labels.
pub const GADGET_PREFIX: &str = "G:";
/// Actions of a resolving-gadget auxiliary infoset.
pub const TERMINATE: &str = "T";
pub const CONTINUE: &str = "C";

#[derive(Debug, thiserror::Error)]
pub enum GadgetError {
    #[error("unknown public state `{0}`")]
    UnknownPublicState(String),
    #[error("unreachable subgame: public state `{0}` has zero resolver-and-chance mass")]
    Unreachable(String),
    #[error("public state `{0}` contains a non-decision history")]
    RootKind(String),
    #[error("back-map gap: {0}")]
    BackMap(String),
    #[error("bad gadget header: {0}")]
    Header(String),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GadgetKind {
    Resolving,
    MaxMargin,
    Unsafe,
}

impl GadgetKind {
    pub const ALL: [GadgetKind; 3] = [
        GadgetKind::Resolving,
        GadgetKind::MaxMargin,
        GadgetKind::Unsafe,
    ];
}

impl fmt::Display for GadgetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GadgetKind::Resolving => "resolving",
            GadgetKind::MaxMargin => "maxmargin",
            GadgetKind::Unsafe => "unsafe",
        })
    }
}

impl FromStr for GadgetKind {
    type Err = GadgetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s
            .trim()
            .to_ascii_lowercase()
            .replace(['-', '_'], "")
            .as_str()
        {
            "resolving" => Ok(GadgetKind::Resolving),
            "maxmargin" => Ok(GadgetKind::MaxMargin),
            "unsafe" => Ok(GadgetKind::Unsafe),
            _ => Err(GadgetError::Header(format!("unknown gadget kind `{s}`"))),
        }
    }
}

/// An opponent infoset at the root of the subgame with its root histories.
#[derive(Clone, Debug, PartialEq)]
pub struct RootInfoset {
    pub label: String,
    /// Indices into [`SubgameSpec::roots`].
    pub histories: Vec<usize>,
    /// Opponent's own blueprint reach of the infoset.
    pub opponent_reach: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubgameSpec {
    pub resolver: Player,
    pub public_state: String,
    pub roots: Vec<NodeId>,
    /// Resolver-and-chance reach of each root under the blueprint.
    pub weights: Vec<f64>,
    /// Reach of each root including the opponent, for unsafe solving.
    pub full_weights: Vec<f64>,
    pub opponent_roots: Vec<RootInfoset>,
    pub blueprint: StrategyProfile,
}

impl SubgameSpec {
    pub fn opponent(&self) -> Player {
        self.resolver.opponent()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Collects the root histories of `public_state` and their entry weights.
pub fn extract_subgame(
    game: &Game,
    public_state: &str,
    blueprint: &StrategyProfile,
    resolver: Player,
) -> Result<SubgameSpec, GadgetError> {
    let ps = game
        .public_state(public_state)
        .ok_or_else(|| GadgetError::UnknownPublicState(public_state.to_string()))?;
    let table = blueprint.table(game)?;
    let reach = reach_all(game, &table);
    let opp = resolver.opponent();
    let (ri, oi) = (resolver.index() + 1, opp.index() + 1);
    let roots = ps.nodes.clone();
    let mut weights = Vec::with_capacity(roots.len());
    let mut full_weights = Vec::with_capacity(roots.len());
    let mut opponent_roots: Vec<RootInfoset> = Vec::new();
    for (k, &h) in roots.iter().enumerate() {
        let r = reach[h];
        weights.push(r[0] * r[ri]);
        full_weights.push(r[0] * r[ri] * r[oi]);
        let label = game
            .view(h, opp)
            .ok_or_else(|| GadgetError::RootKind(public_state.to_string()))?;
        match opponent_roots.iter_mut().find(|s| s.label == label) {
            Some(s) => s.histories.push(k),
            None => opponent_roots.push(RootInfoset {
                label: label.to_string(),
                histories: vec![k],
                opponent_reach: r[oi],
            }),
        }
    }
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(GadgetError::Unreachable(public_state.to_string()));
    }
    Ok(SubgameSpec {
        resolver,
        public_state: public_state.to_string(),
        roots,
        weights,
        full_weights,
        opponent_roots,
        blueprint: blueprint.clone(),
    })
}

/// Counterfactual best-response values of the opponent's root infosets: the
/// opponent best-responds to the resolver's blueprint in the full game, and
/// each value is normalized by the infoset's resolver-and-chance reach. P1
/// utility units.
pub fn blueprint_cbvs(
    game: &Game,
    blueprint: &BehavioralStrategy,
    spec: &SubgameSpec,
) -> Result<CbvReport, GadgetError> {
    let mut table = StrategyProfile::one_sided_table(game, blueprint)?;
    let br = best_response_table(game, &table, spec.opponent());
    br.write_into(game, &mut table);
    Ok(root_values(game, &table, spec))
}

/// Counterfactual values of the opponent's root infosets under a full table.
fn root_values(game: &Game, table: &[Vec<f64>], spec: &SubgameSpec) -> CbvReport {
    let reach = reach_all(game, table);
    let values = node_values(game, table);
    CbvReport {
        owner: spec.opponent(),
        values: spec
            .opponent_roots
            .iter()
            .map(|s| {
                let group: Vec<NodeId> = s.histories.iter().map(|&k| spec.roots[k]).collect();
                (
                    s.label.clone(),
                    counterfactual_from(&reach, &values, spec.opponent(), &group),
                )
            })
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GadgetGame {
    pub game: Game,
    pub kind: GadgetKind,
    pub resolver: Player,
    /// Opponent infoset labels present in the gadget but not in the subgame.
    pub aux_infosets: Vec<String>,
    /// Gadget infoset label → original infoset label, for the resolver.
    pub back_map: BTreeMap<String, String>,
    /// Opponent root infoset → blueprint counterfactual best-response value.
    pub cbvs: Vec<(String, f64)>,
    /// Total entry mass divided out when normalizing the entry chance.
    pub entry_mass: f64,
    /// Aux action → opponent root infoset it stands for, per aux infoset.
    pub aux_targets: BTreeMap<String, Vec<Option<String>>>,
}

/// Copies the subtree of `node`, mapping terminal utilities through `shift`.
fn copy_subtree(t: &mut NodeTable, game: &Game, node: NodeId, shift: f64) -> NodeId {
    let kind = match game.node(node) {
        NodeKind::Terminal { utility } => NodeKind::Terminal {
            utility: utility - shift,
        },
        NodeKind::Chance { outcomes } => NodeKind::Chance {
            outcomes: outcomes
                .iter()
                .map(|&(c, p)| (copy_subtree(t, game, c, shift), p))
                .collect(),
        },
        NodeKind::Decision {
            player,
            infoset,
            public,
            view,
            actions,
        } => NodeKind::Decision {
            player: *player,
            infoset: infoset.clone(),
            public: public.clone(),
            view: view.clone(),
            actions: actions
                .iter()
                .map(|(a, c)| (a.clone(), copy_subtree(t, game, *c, shift)))
                .collect(),
        },
    };
    t.push(kind)
}

/// Root chance over `entries`, or the entry itself when there is only one.
fn entry_node(t: &mut NodeTable, entries: Vec<(NodeId, f64)>) -> NodeId {
    if entries.len() == 1 {
        entries[0].0
    } else {
        t.chance(entries)
    }
}

/// Labels of `player`'s infosets below the given roots (roots included).
pub fn subgame_infosets(game: &Game, roots: &[NodeId], player: Player) -> Vec<String> {
    let mut out = std::collections::BTreeSet::new();
    for &r in roots {
        for id in r..game.subtree_end(r) {
            if let NodeKind::Decision {
                player: p, infoset, ..
            } = game.node(id)
            {
                if *p == player {
                    out.insert(infoset.clone());
                }
            }
        }
    }
    out.into_iter().collect()
}

fn subgame_back_map(game: &Game, spec: &SubgameSpec) -> BTreeMap<String, String> {
    subgame_infosets(game, &spec.roots, spec.resolver)
        .into_iter()
        .map(|l| (l.clone(), l))
        .collect()
}

fn finish(t: NodeTable) -> Result<Game, GadgetError> {
    Ok(Game::from_table(t)?)
}

/// Resolving gadget: per root history an opponent node with Terminate (pays
/// the blueprint value of its root infoset) and Continue (enters the subgame).
pub fn build_resolving(
    game: &Game,
    spec: &SubgameSpec,
    cbvs: &CbvReport,
) -> Result<GadgetGame, GadgetError> {
    let opp = spec.opponent();
    let public = format!("{GADGET_PREFIX}{}", spec.public_state);
    let total = spec.total_weight();
    let mut t = NodeTable::new(game.name());
    let mut entries = Vec::new();
    let mut aux = Vec::new();
    let mut kept = Vec::new();
    for s in &spec.opponent_roots {
        let cbv = cbvs.get(&s.label).unwrap_or(0.0);
        let label = format!("{GADGET_PREFIX}{}", s.label);
        let mut used = false;
        for &k in &s.histories {
            let w = spec.weights[k];
            if w <= 0.0 {
                continue;
            }
            let sub = copy_subtree(&mut t, game, spec.roots[k], 0.0);
            let term = t.terminal(cbv);
            let node = t.decision(
                opp,
                label.clone(),
                public.clone(),
                None,
                vec![(TERMINATE.to_string(), term), (CONTINUE.to_string(), sub)],
            );
            entries.push((node, w / total));
            used = true;
        }
        if used {
            aux.push(label);
            kept.push((s.label.clone(), cbv));
        } else {
            debug!(
                "resolving gadget: root infoset {} has zero entry mass",
                s.label
            );
        }
    }
    let root = entry_node(&mut t, entries);
    t.root = Some(root);
    let targets = spec
        .opponent_roots
        .iter()
        .filter(|s| aux.contains(&format!("{GADGET_PREFIX}{}", s.label)))
        .map(|s| {
            (
                format!("{GADGET_PREFIX}{}", s.label),
                vec![None, Some(s.label.clone())],
            )
        })
        .collect();
    Ok(GadgetGame {
        game: finish(t)?,
        kind: GadgetKind::Resolving,
        resolver: spec.resolver,
        aux_infosets: aux,
        back_map: subgame_back_map(game, spec),
        cbvs: kept,
        entry_mass: total,
        aux_targets: targets,
    })
}

/// Max-margin gadget: the opponent picks a root infoset, chance picks one of
/// its histories, and utilities below are shifted by the infoset's value.
/// Root infosets with zero entry mass cannot be entered and are left out.
pub fn build_maxmargin(
    game: &Game,
    spec: &SubgameSpec,
    cbvs: &CbvReport,
) -> Result<GadgetGame, GadgetError> {
    let opp = spec.opponent();
    let label = format!("{GADGET_PREFIX}{}", spec.public_state);
    let mut t = NodeTable::new(game.name());
    let mut actions = Vec::new();
    let mut kept = Vec::new();
    for s in &spec.opponent_roots {
        let mass: f64 = s.histories.iter().map(|&k| spec.weights[k]).sum();
        if mass <= 0.0 {
            debug!(
                "max-margin gadget: dropping root infoset {} with zero entry mass",
                s.label
            );
            continue;
        }
        let cbv = cbvs.get(&s.label).unwrap_or(0.0);
        let mut entries = Vec::new();
        for &k in &s.histories {
            let w = spec.weights[k];
            if w > 0.0 {
                let sub = copy_subtree(&mut t, game, spec.roots[k], cbv);
                entries.push((sub, w / mass));
            }
        }
        let node = entry_node(&mut t, entries);
        actions.push((s.label.clone(), node));
        kept.push((s.label.clone(), cbv));
    }
    let targets = vec![(
        label.clone(),
        actions.iter().map(|(a, _)| Some(a.clone())).collect(),
    )]
    .into_iter()
    .collect();
    let root = t.decision(opp, label.clone(), label.clone(), None, actions);
    t.root = Some(root);
    Ok(GadgetGame {
        game: finish(t)?,
        kind: GadgetKind::MaxMargin,
        resolver: spec.resolver,
        aux_infosets: vec![label],
        back_map: subgame_back_map(game, spec),
        cbvs: kept,
        entry_mass: spec.total_weight(),
        aux_targets: targets,
    })
}

/// Unsafe subgame: entry chance proportional to the full blueprint reach.
pub fn build_unsafe(game: &Game, spec: &SubgameSpec) -> Result<GadgetGame, GadgetError> {
    let total: f64 = spec.full_weights.iter().sum();
    if total <= 0.0 {
        return Err(GadgetError::Unreachable(spec.public_state.clone()));
    }
    let mut t = NodeTable::new(game.name());
    let mut entries = Vec::new();
    for (k, &r) in spec.roots.iter().enumerate() {
        let w = spec.full_weights[k];
        if w > 0.0 {
            entries.push((copy_subtree(&mut t, game, r, 0.0), w / total));
        }
    }
    let root = entry_node(&mut t, entries);
    t.root = Some(root);
    Ok(GadgetGame {
        game: finish(t)?,
        kind: GadgetKind::Unsafe,
        resolver: spec.resolver,
        aux_infosets: Vec::new(),
        back_map: subgame_back_map(game, spec),
        cbvs: Vec::new(),
        entry_mass: total,
        aux_targets: BTreeMap::new(),
    })
}

/// Builds the gadget of the given kind, computing blueprint values as needed.
pub fn build_gadget(
    game: &Game,
    spec: &SubgameSpec,
    kind: GadgetKind,
) -> Result<GadgetGame, GadgetError> {
    let resolver_bp = spec.blueprint.get(spec.resolver);
    match kind {
        GadgetKind::Unsafe => build_unsafe(game, spec),
        GadgetKind::Resolving => {
            build_resolving(game, spec, &blueprint_cbvs(game, resolver_bp, spec)?)
        }
        GadgetKind::MaxMargin => {
            build_maxmargin(game, spec, &blueprint_cbvs(game, resolver_bp, spec)?)
        }
    }
}

impl GadgetGame {
    pub fn opponent(&self) -> Player {
        self.resolver.opponent()
    }

    /// Game infoset indices of the auxiliary infosets.
    pub fn aux_indices(&self) -> Vec<usize> {
        self.aux_infosets
            .iter()
            .filter_map(|l| self.game.infoset_index(self.opponent(), l))
            .collect()
    }

    pub fn header(&self) -> GadgetHeader {
        GadgetHeader {
            kind: self.kind.to_string(),
            resolver: self.resolver.number(),
            aux_infosets: self.aux_infosets.clone(),
        }
    }

    pub fn to_text(&self) -> String {
        serialize_with_header(&self.game, Some(&self.header()))
    }

    /// Parses a serialized gadget. Metadata not carried by the text (values,
    /// entry mass) is recovered where the tree determines it.
    pub fn from_text(text: &str) -> Result<GadgetGame, GadgetError> {
        let (table, header) = parse_table(text).map_err(GameError::Parse)?;
        let header = header.ok_or_else(|| GadgetError::Header("missing `gadget` line".into()))?;
        let kind: GadgetKind = header.kind.parse()?;
        let resolver = Player::from_index(usize::from(header.resolver) - 1);
        let game = Game::from_table(table)?;
        let mut back_map = BTreeMap::new();
        for s in game.player_infosets(resolver) {
            let l = &game.infoset(s).label;
            back_map.insert(l.clone(), l.clone());
        }
        let mut cbvs = Vec::new();
        let mut aux_targets = BTreeMap::new();
        for a in &header.aux_infosets {
            let s = game
                .infoset_index(resolver.opponent(), a)
                .ok_or_else(|| GadgetError::Header(format!("aux infoset `{a}` not in game")))?;
            let info = game.infoset(s);
            let targets: Vec<Option<String>> = match kind {
                GadgetKind::Resolving => {
                    let target = a.strip_prefix(GADGET_PREFIX).unwrap_or(a).to_string();
                    if let NodeKind::Terminal { utility } =
                        game.node(game.node(info.members[0]).children()[0])
                    {
                        cbvs.push((target.clone(), *utility));
                    }
                    vec![None, Some(target)]
                }
                _ => info.actions.iter().map(|x| Some(x.clone())).collect(),
            };
            aux_targets.insert(a.clone(), targets);
        }
        Ok(GadgetGame {
            game,
            kind,
            resolver,
            aux_infosets: header.aux_infosets,
            back_map,
            cbvs,
            entry_mass: 1.0,
            aux_targets,
        })
    }

    /// Opponent sequences carrying the tremble `l(aux, a) = prior(a)`.
    pub fn tremble(&self, prior: &Prior) -> Vec<(usize, f64)> {
        let index = crate::sqf::SequenceIndex::new(&self.game);
        let ps = index.of(self.opponent());
        let mut out = Vec::new();
        for label in &self.aux_infosets {
            let Some(s) = self.game.infoset_index(self.opponent(), label) else {
                continue;
            };
            if let Some(d) = prior.get(label) {
                for (k, &p) in d.iter().enumerate() {
                    out.push((ps.seq(s, k), p));
                }
            }
        }
        out
    }
}

/// The resolver's gadget strategy restricted to subgame infosets, relabelled
/// through the back-map; returns it with the (original, gadget) label pairs.
pub fn extract_solution(
    gadget: &GadgetGame,
    strategy: &BehavioralStrategy,
) -> Result<(BehavioralStrategy, Vec<(String, String)>), GadgetError> {
    if strategy.player() != gadget.resolver {
        return Err(GadgetError::BackMap(
            "strategy does not belong to the resolver".into(),
        ));
    }
    let mut out = BehavioralStrategy::new(gadget.resolver);
    let mut mapping = Vec::new();
    for (g, o) in &gadget.back_map {
        let p = strategy
            .get(g)
            .ok_or_else(|| GadgetError::BackMap(format!("no strategy for `{g}`")))?;
        out.set(o.clone(), p.to_vec());
        mapping.push((o.clone(), o.clone()));
    }
    Ok((out, mapping))
}

/// Full-game resolver strategy: blueprint outside the subgame, `subgame`
/// inside.
pub fn combine_solution(
    blueprint: &BehavioralStrategy,
    gadget: &GadgetGame,
    gadget_strategy: &BehavioralStrategy,
) -> Result<BehavioralStrategy, GadgetError> {
    let (sub, mapping) = extract_solution(gadget, gadget_strategy)?;
    Ok(combine(blueprint, &sub, &mapping)?)
}

/// Per root infoset, the opponent's counterfactual best-response value
/// against `combined` minus the blueprint value, in the resolver's favour.
pub fn margins(
    game: &Game,
    spec: &SubgameSpec,
    combined: &BehavioralStrategy,
    cbvs: &CbvReport,
) -> Result<Vec<(String, f64)>, GadgetError> {
    let mut table = StrategyProfile::one_sided_table(game, combined)?;
    let br = best_response_table(game, &table, spec.opponent());
    br.write_into(game, &mut table);
    let now = root_values(game, &table, spec);
    let sign = spec.resolver.sign();
    Ok(now
        .values
        .into_iter()
        .filter_map(|(l, v)| cbvs.get(&l).map(|c| (l, sign * (v - c))))
        .collect())
}

#[cfg(test)]
mod tests;
