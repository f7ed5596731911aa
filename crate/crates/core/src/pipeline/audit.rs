//! Checks of the safety inequality: the resolver's best-response utility
//! gain from overwriting one subgame is bounded below by the opponent-reach
//! weighted change of counterfactual best-response values at the subgame root.

use std::fmt::Write as _;

use super::{solve_gadget, Blueprint, ExperimentConfig, PipelineError, Technique};
use crate::efg::{Game, NodeId};
use crate::gadget::{
    blueprint_cbvs, build_gadget, extract_subgame, margins, GadgetError, GadgetKind, SubgameSpec,
};
use crate::strategy::{
    best_response_table, br_value, combine, reach_all, BehavioralStrategy, StrategyProfile,
};

/// Both sides of the inequality, in the resolver's utility.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoremSides {
    /// `u(π, BR(π)) − u(π̄, BR(π̄))`.
    pub lhs: f64,
    /// `Σ_s P^{BR(π)}_opp(s) · (CBV_π(s) − CBV_π̄(s))` with unnormalized values.
    pub rhs: f64,
    /// Smallest per-infoset margin; the inequality's premise holds when ≥ 0.
    pub min_margin: f64,
}

impl TheoremSides {
    pub fn slack(&self) -> f64 {
        self.lhs - self.rhs
    }
}

/// Evaluates both sides for `combined`, which equals `blueprint` outside the
/// subgame of `spec`.
pub fn theorem_sides(
    game: &Game,
    spec: &SubgameSpec,
    blueprint: &BehavioralStrategy,
    combined: &BehavioralStrategy,
) -> Result<TheoremSides, GadgetError> {
    let sign = spec.resolver.sign();
    let lhs = sign * (br_value(game, combined)? - br_value(game, blueprint)?);
    let cbvs = blueprint_cbvs(game, blueprint, spec)?;
    let margin = margins(game, spec, combined, &cbvs)?;

    let mut table = StrategyProfile::one_sided_table(game, combined)?;
    best_response_table(game, &table, spec.opponent()).write_into(game, &mut table);
    let reach = reach_all(game, &table);
    let (ri, oi) = (spec.resolver.index() + 1, spec.opponent().index() + 1);
    let mut rhs = 0.0;
    for root in &spec.opponent_roots {
        let nodes: Vec<NodeId> = root.histories.iter().map(|&k| spec.roots[k]).collect();
        let opp_reach = reach[nodes[0]][oi];
        let mass: f64 = nodes.iter().map(|&h| reach[h][0] * reach[h][ri]).sum();
        let m = margin
            .iter()
            .find(|(l, _)| *l == root.label)
            .map(|(_, v)| *v)
            .unwrap_or(0.0);
        rhs += opp_reach * mass * m;
    }
    let min_margin = margin.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
    Ok(TheoremSides {
        lhs,
        rhs,
        min_margin,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditEntry {
    pub blueprint_id: String,
    pub public_state: String,
    pub technique: Technique,
    pub prior: String,
    pub sides: TheoremSides,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AuditReport {
    pub entries: Vec<AuditEntry>,
}

impl AuditReport {
    pub fn min_slack(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.sides.slack())
            .fold(f64::INFINITY, f64::min)
    }

    /// Entries whose slack is below `-tol`.
    pub fn violations(&self, tol: f64) -> Vec<&AuditEntry> {
        self.entries
            .iter()
            .filter(|e| e.sides.slack() < -tol)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("blueprint_id,public_state,technique,prior,lhs,rhs,slack,min_margin\n");
        for e in &self.entries {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                e.blueprint_id,
                e.public_state,
                e.technique,
                e.prior,
                e.sides.lhs,
                e.sides.rhs,
                e.sides.slack(),
                e.sides.min_margin
            )
            .unwrap();
        }
        out
    }
}

/// Solves every selected subgame of every blueprint with each configured
/// gadget technique and prior, overwriting one subgame at a time, and records
/// both sides of the inequality.
pub fn safety_audit(
    config: &ExperimentConfig,
    game: &Game,
    publics: &[String],
    blueprints: &[Blueprint],
) -> Result<AuditReport, PipelineError> {
    let mut report = AuditReport::default();
    for bp in blueprints {
        let bp_strategy = bp.profile.get(config.resolver);
        for ps in publics {
            let spec = match extract_subgame(game, ps, &bp.profile, config.resolver) {
                Ok(s) => s,
                Err(GadgetError::Unreachable(_)) => continue,
                Err(e) => return Err(e.into()),
            };
            for &technique in &config.techniques {
                let (kind, priors) = match technique {
                    Technique::Resolve => (GadgetKind::Resolving, config.priors.clone()),
                    Technique::MaxMargin => (GadgetKind::MaxMargin, config.priors.clone()),
                    Technique::Unsafe => (GadgetKind::Unsafe, vec![crate::gadget::PriorKind::None]),
                    Technique::OptimalContinuation => continue,
                };
                let gadget = build_gadget(game, &spec, kind)?;
                for prior in priors {
                    let sol =
                        solve_gadget(&gadget, Some(&spec), prior, &config.solver, config.epsilon)?;
                    let combined = combine(bp_strategy, &sol.strategy, &sol.mapping)?;
                    report.entries.push(AuditEntry {
                        blueprint_id: bp.id.clone(),
                        public_state: ps.clone(),
                        technique,
                        prior: prior.to_string(),
                        sides: theorem_sides(game, &spec, bp_strategy, &combined)?,
                    });
                }
            }
        }
    }
    Ok(report)
}
