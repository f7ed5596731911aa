use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::{GadgetError, GadgetGame, SubgameSpec};

/// Smallest unnormalized weight of an auxiliary action under the blueprint prior.
pub const DEFAULT_CLIP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PriorKind {
    None,
    Uniform,
    Blueprint,
}

impl PriorKind {
    pub const ALL: [PriorKind; 3] = [PriorKind::None, PriorKind::Uniform, PriorKind::Blueprint];
}

impl fmt::Display for PriorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PriorKind::None => "none",
            PriorKind::Uniform => "uniform",
            PriorKind::Blueprint => "blueprint",
        })
    }
}

impl FromStr for PriorKind {
    type Err = GadgetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(PriorKind::None),
            "uniform" => Ok(PriorKind::Uniform),
            "blueprint" => Ok(PriorKind::Blueprint),
            _ => Err(GadgetError::Header(format!("unknown prior `{s}`"))),
        }
    }
}

/// Strictly positive distributions over the actions of auxiliary infosets.
#[derive(Clone, Debug, PartialEq)]
pub struct Prior {
    pub kind: PriorKind,
    pub dists: BTreeMap<String, Vec<f64>>,
}

impl Prior {
    pub fn get(&self, aux_label: &str) -> Option<&[f64]> {
        self.dists.get(aux_label).map(Vec::as_slice)
    }

    /// Uniform distribution on every auxiliary infoset.
    pub fn uniform(gadget: &GadgetGame) -> Prior {
        let dists = gadget
            .aux_indices()
            .into_iter()
            .map(|s| {
                let info = gadget.game.infoset(s);
                let n = info.actions.len();
                (info.label.clone(), vec![1.0 / n as f64; n])
            })
            .collect();
        Prior {
            kind: PriorKind::Uniform,
            dists,
        }
    }

    /// Whether every distribution is strictly positive and sums to 1.
    pub fn is_valid(&self) -> bool {
        self.dists
            .values()
            .all(|d| d.iter().all(|&p| p > 0.0) && (d.iter().sum::<f64>() - 1.0).abs() <= 1e-9)
    }
}

/// Prior of the requested kind. The blueprint prior weighs each action that
/// enters the subgame at opponent root infoset `s` by the opponent's own
/// blueprint reach of `s`, clipped below at `clip`; Terminate actions get
/// `clip`. Weights are normalized per auxiliary infoset after clipping.
pub fn make_prior(
    kind: PriorKind,
    gadget: &GadgetGame,
    spec: Option<&SubgameSpec>,
    clip: f64,
) -> Result<Option<Prior>, GadgetError> {
    match kind {
        PriorKind::None => Ok(None),
        PriorKind::Uniform => Ok(Some(Prior::uniform(gadget))),
        PriorKind::Blueprint => {
            let spec = spec.ok_or_else(|| {
                GadgetError::Header("blueprint prior needs the subgame spec".into())
            })?;
            let reach_of = |label: &str| {
                spec.opponent_roots
                    .iter()
                    .find(|s| s.label == label)
                    .map_or(0.0, |s| s.opponent_reach)
            };
            let mut dists = BTreeMap::new();
            for (aux, targets) in &gadget.aux_targets {
                let raw: Vec<f64> = targets
                    .iter()
                    .map(|t| match t {
                        Some(l) => reach_of(l).max(clip),
                        None => clip,
                    })
                    .collect();
                dists.insert(aux.clone(), normalize(&raw));
            }
            Ok(Some(Prior { kind, dists }))
        }
    }
}

/// Clip-then-normalize of raw weights.
pub fn clipped(raw: &[f64], clip: f64) -> Vec<f64> {
    normalize(&raw.iter().map(|r| r.max(clip)).collect::<Vec<_>>())
}

fn normalize(w: &[f64]) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}
