//! Full-traversal CFR and CFR+ with a perturbation basis at auxiliary
//! infosets.
//!
//! At an infoset with prior `p` and tremble `ε` the player acts with
//! `σ' = Bσ = (1 − ε)σ + ε·p`, where `σ` comes from regret matching. Regrets
//! are kept in the unperturbed space: the regret of basis column `b` is
//! `(Bᵀq)_b − σ'·q` for counterfactual action values `q`. The average strategy
//! accumulates `σ'`.

use std::fmt::Write as _;

use log::debug;

use crate::efg::{Game, NodeKind, Player};
use crate::gadget::Prior;
use crate::strategy::{nash_conv, StrategyProfile};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CfrError {
    #[error("epsilon must lie in [0, 1), got {0}")]
    Epsilon(f64),
    #[error("epsilon > 0 requires a prior")]
    MissingPrior,
    #[error("prior for `{0}` has {1} entries, infoset has {2} actions")]
    PriorShape(String, usize, usize),
    #[error("iterations must be at least 1")]
    NoIterations,
    #[error("checkpoint iterations must be strictly increasing")]
    Checkpoints,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CfrConfig {
    pub iterations: usize,
    /// Regret-matching+ with linear averaging.
    pub plus: bool,
    pub alternating: bool,
    pub epsilon: f64,
    pub prior: Option<Prior>,
    /// Iterations at which the trace is recorded; empty selects powers of two
    /// plus the final iteration.
    pub checkpoints: Vec<usize>,
    /// Whether to compute exploitability at checkpoints.
    pub trace: bool,
}

impl Default for CfrConfig {
    fn default() -> Self {
        CfrConfig {
            iterations: 5000,
            plus: true,
            alternating: true,
            epsilon: 0.0,
            prior: None,
            checkpoints: Vec::new(),
            trace: true,
        }
    }
}

impl CfrConfig {
    pub fn cfr_plus(iterations: usize) -> Self {
        CfrConfig {
            iterations,
            ..Self::default()
        }
    }

    /// Simultaneous-update CFR with uniform averaging.
    pub fn vanilla(iterations: usize) -> Self {
        CfrConfig {
            iterations,
            plus: false,
            alternating: false,
            ..Self::default()
        }
    }

    pub fn with_prior(mut self, prior: Prior, epsilon: f64) -> Self {
        self.prior = Some(prior);
        self.epsilon = epsilon;
        self
    }

    fn checkpoint_list(&self) -> Vec<usize> {
        if !self.checkpoints.is_empty() {
            return self
                .checkpoints
                .iter()
                .copied()
                .filter(|&c| c <= self.iterations)
                .collect();
        }
        let mut out = Vec::new();
        let mut c = 1;
        while c < self.iterations {
            out.push(c);
            c *= 2;
        }
        out.push(self.iterations);
        out
    }
}

/// `B = (1 − ε)I + εP` with every column of `P` equal to `prior`, row-major.
pub fn basis_for(prior: &[f64], epsilon: f64) -> Result<Vec<Vec<f64>>, CfrError> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(CfrError::Epsilon(epsilon));
    }
    let n = prior.len();
    Ok((0..n)
        .map(|r| {
            (0..n)
                .map(|c| epsilon * prior[r] + if r == c { 1.0 - epsilon } else { 0.0 })
                .collect()
        })
        .collect())
}

/// Positive parts of `regrets`, normalized; uniform when none is positive.
pub fn regret_matching(regrets: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; regrets.len()];
    regret_matching_into(regrets, &mut out);
    out
}

fn regret_matching_into(regrets: &[f64], out: &mut [f64]) {
    let total: f64 = regrets.iter().map(|r| r.max(0.0)).sum();
    if total > 0.0 {
        for (o, r) in out.iter_mut().zip(regrets) {
            *o = r.max(0.0) / total;
        }
    } else {
        let u = 1.0 / regrets.len() as f64;
        out.iter_mut().for_each(|o| *o = u);
    }
}

/// Adds `delta` to `regrets`, clamping at zero.
pub fn regret_matching_plus(regrets: &mut [f64], delta: &[f64]) {
    for (r, d) in regrets.iter_mut().zip(delta) {
        *r = (*r + d).max(0.0);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CfrState {
    pub regrets: Vec<Vec<f64>>,
    pub cumulative: Vec<Vec<f64>>,
    pub iteration: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePoint {
    pub iteration: usize,
    /// Sum of both players' best-response gains against the average profile.
    pub exploitability: f64,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub average: StrategyProfile,
    pub trace: Vec<TracePoint>,
    pub exploitability: f64,
    pub iterations: usize,
}

/// `iteration,exploitability` CSV of a trace.
pub fn trace_csv(trace: &[TracePoint]) -> String {
    let mut out = String::from("iteration,exploitability\n");
    for p in trace {
        writeln!(out, "{},{}", p.iteration, p.exploitability).unwrap();
    }
    out
}

enum Flat {
    Terminal(f64),
    Chance(Vec<(usize, f64)>),
    Decision {
        player: usize,
        infoset: usize,
        children: Vec<usize>,
    },
}

/// A CFR run over a game, advanced one iteration at a time.
pub struct Cfr<'a> {
    game: &'a Game,
    plus: bool,
    alternating: bool,
    epsilon: f64,
    nodes: Vec<Flat>,
    /// Prior per infoset, for perturbed infosets.
    priors: Vec<Option<Vec<f64>>>,
    infoset_player: Vec<usize>,
    pub state: CfrState,
    current: Vec<Vec<f64>>,
    reach: Vec<[f64; 2]>,
    values: Vec<f64>,
    q: Vec<Vec<f64>>,
    own_reach: Vec<f64>,
}

impl<'a> Cfr<'a> {
    pub fn new(game: &'a Game, config: &CfrConfig) -> Result<Self, CfrError> {
        if !(0.0..1.0).contains(&config.epsilon) {
            return Err(CfrError::Epsilon(config.epsilon));
        }
        if config.epsilon > 0.0 && config.prior.is_none() {
            return Err(CfrError::MissingPrior);
        }
        let nodes = game
            .nodes()
            .iter()
            .enumerate()
            .map(|(id, k)| match k {
                NodeKind::Terminal { utility } => Flat::Terminal(*utility),
                NodeKind::Chance { outcomes } => Flat::Chance(outcomes.clone()),
                NodeKind::Decision {
                    player, actions, ..
                } => Flat::Decision {
                    player: player.index(),
                    infoset: game.node_infoset(id).expect("decision has infoset"),
                    children: actions.iter().map(|(_, c)| *c).collect(),
                },
            })
            .collect();
        let n = game.infosets().len();
        let mut priors = vec![None; n];
        if let Some(prior) = &config.prior {
            for (label, dist) in &prior.dists {
                let found = game
                    .infosets()
                    .iter()
                    .position(|s| &s.label == label && s.player != Player::Chance);
                if let Some(s) = found {
                    let k = game.infoset(s).actions.len();
                    if dist.len() != k {
                        return Err(CfrError::PriorShape(label.clone(), dist.len(), k));
                    }
                    priors[s] = Some(dist.clone());
                }
            }
        }
        let sizes: Vec<usize> = game.infosets().iter().map(|s| s.actions.len()).collect();
        let zeros = |_: ()| sizes.iter().map(|&k| vec![0.0; k]).collect::<Vec<_>>();
        Ok(Cfr {
            game,
            plus: config.plus,
            alternating: config.alternating,
            epsilon: config.epsilon,
            nodes,
            priors,
            infoset_player: game.infosets().iter().map(|s| s.player.index()).collect(),
            state: CfrState {
                regrets: zeros(()),
                cumulative: zeros(()),
                iteration: 0,
            },
            current: zeros(()),
            reach: vec![[0.0; 2]; game.num_nodes()],
            values: vec![0.0; game.num_nodes()],
            q: zeros(()),
            own_reach: vec![0.0; n],
        })
    }

    /// Recomputes the (perturbed) current strategy of `player`.
    fn refresh(&mut self, player: usize) {
        for s in 0..self.current.len() {
            if self.infoset_player[s] != player {
                continue;
            }
            regret_matching_into(&self.state.regrets[s], &mut self.current[s]);
            if let Some(p) = &self.priors[s] {
                let e = self.epsilon;
                for (c, pa) in self.current[s].iter_mut().zip(p) {
                    *c = (1.0 - e) * *c + e * pa;
                }
            }
        }
    }

    /// Counterfactual action values of `player` under the current profile.
    fn traverse(&mut self, player: usize) {
        let root = self.game.root();
        self.reach[root] = [1.0, 1.0];
        for h in 0..self.nodes.len() {
            let [opp, own] = self.reach[h];
            match &self.nodes[h] {
                Flat::Terminal(_) => {}
                Flat::Chance(out) => {
                    for &(c, p) in out {
                        self.reach[c] = [opp * p, own];
                    }
                }
                Flat::Decision {
                    player: p,
                    infoset,
                    children,
                } => {
                    let sigma = &self.current[*infoset];
                    for (k, &c) in children.iter().enumerate() {
                        self.reach[c] = if *p == player {
                            [opp, own * sigma[k]]
                        } else {
                            [opp * sigma[k], own]
                        };
                    }
                }
            }
        }
        for q in self.q.iter_mut() {
            q.iter_mut().for_each(|x| *x = 0.0);
        }
        let sign = if player == 0 { 1.0 } else { -1.0 };
        for h in (0..self.nodes.len()).rev() {
            self.values[h] = match &self.nodes[h] {
                Flat::Terminal(u) => *u,
                Flat::Chance(out) => out.iter().map(|&(c, p)| p * self.values[c]).sum(),
                Flat::Decision {
                    player: p,
                    infoset,
                    children,
                } => {
                    let sigma = &self.current[*infoset];
                    if *p == player {
                        let w = self.reach[h][0];
                        let q = &mut self.q[*infoset];
                        for (k, &c) in children.iter().enumerate() {
                            q[k] += w * sign * self.values[c];
                        }
                        self.own_reach[*infoset] = self.reach[h][1];
                    }
                    children
                        .iter()
                        .zip(sigma)
                        .map(|(&c, s)| s * self.values[c])
                        .sum()
                }
            };
        }
    }

    fn update(&mut self, player: usize, weight: f64) {
        let mut delta = Vec::new();
        for s in 0..self.q.len() {
            if self.infoset_player[s] != player {
                continue;
            }
            let q = &self.q[s];
            let sigma = &self.current[s];
            let v: f64 = q.iter().zip(sigma).map(|(a, b)| a * b).sum();
            delta.clear();
            match &self.priors[s] {
                Some(p) => {
                    let e = self.epsilon;
                    let pq: f64 = p.iter().zip(q).map(|(a, b)| a * b).sum();
                    delta.extend(q.iter().map(|&qb| (1.0 - e) * qb + e * pq - v));
                }
                None => delta.extend(q.iter().map(|&qb| qb - v)),
            }
            let r = &mut self.state.regrets[s];
            if self.plus {
                regret_matching_plus(r, &delta);
            } else {
                r.iter_mut().zip(&delta).for_each(|(x, d)| *x += d);
            }
            let w = weight * self.own_reach[s];
            for (c, x) in self.state.cumulative[s].iter_mut().zip(sigma) {
                *c += w * x;
            }
        }
    }

    /// One iteration (both players).
    pub fn step(&mut self) {
        self.state.iteration += 1;
        let t = self.state.iteration as f64;
        let weight = if self.plus { t } else { 1.0 };
        if self.alternating {
            for p in 0..2 {
                self.refresh(0);
                self.refresh(1);
                self.traverse(p);
                self.update(p, weight);
            }
        } else {
            self.refresh(0);
            self.refresh(1);
            self.traverse(0);
            let q0 = self.q.clone();
            let r0 = self.own_reach.clone();
            self.traverse(1);
            let q1 = std::mem::replace(&mut self.q, q0);
            let r1 = std::mem::replace(&mut self.own_reach, r0);
            self.update(0, weight);
            self.q = q1;
            self.own_reach = r1;
            self.update(1, weight);
        }
    }

    /// Normalized cumulative strategy; unreached infosets are uniform.
    pub fn average_table(&self) -> Vec<Vec<f64>> {
        self.state
            .cumulative
            .iter()
            .map(|c| {
                let total: f64 = c.iter().sum();
                if total > 0.0 {
                    c.iter().map(|x| x / total).collect()
                } else {
                    vec![1.0 / c.len() as f64; c.len()]
                }
            })
            .collect()
    }

    pub fn average(&self) -> StrategyProfile {
        StrategyProfile::from_table(self.game, &self.average_table())
    }

    pub fn exploitability(&self) -> f64 {
        nash_conv(self.game, &self.average_table())
    }
}

/// Runs CFR for `config.iterations` iterations, recording the trace.
pub fn run_cfr(game: &Game, config: &CfrConfig) -> Result<SolveResult, CfrError> {
    if config.iterations == 0 {
        return Err(CfrError::NoIterations);
    }
    let mut cfr = Cfr::new(game, config)?;
    let checkpoints = config.checkpoint_list();
    let mut trace = Vec::new();
    let mut next = 0;
    for _ in 0..config.iterations {
        cfr.step();
        if config.trace && next < checkpoints.len() && checkpoints[next] == cfr.state.iteration {
            let e = cfr.exploitability();
            debug!(
                "{} cfr iteration {}: exploitability {e:e}",
                game.name(),
                cfr.state.iteration
            );
            trace.push(TracePoint {
                iteration: cfr.state.iteration,
                exploitability: e,
            });
            next += 1;
        }
    }
    let exploitability = trace
        .last()
        .filter(|p| p.iteration == config.iterations)
        .map(|p| p.exploitability)
        .unwrap_or_else(|| cfr.exploitability());
    Ok(SolveResult {
        average: cfr.average(),
        trace,
        exploitability,
        iterations: config.iterations,
    })
}

/// Snapshots of the average profile at each listed iteration.
pub fn cfr_checkpoint_blueprints(
    game: &Game,
    iterations: &[usize],
    config: &CfrConfig,
) -> Result<Vec<(usize, StrategyProfile)>, CfrError> {
    if iterations.windows(2).any(|w| w[0] >= w[1]) || iterations.first() == Some(&0) {
        return Err(CfrError::Checkpoints);
    }
    let mut cfr = Cfr::new(game, config)?;
    let mut out = Vec::with_capacity(iterations.len());
    for &target in iterations {
        while cfr.state.iteration < target {
            cfr.step();
        }
        out.push((target, cfr.average()));
    }
    Ok(out)
}

/// `count` distinct, increasing, roughly log-spaced iterations in `[1, max]`.
pub fn log_spaced(count: usize, max: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(count);
    if count == 0 || max == 0 {
        return out;
    }
    let lmax = (max as f64).ln();
    for k in 0..count {
        let f = if count == 1 {
            1.0
        } else {
            k as f64 / (count - 1) as f64
        };
        let mut v = (f * lmax).exp().round() as usize;
        v = v.clamp(1, max);
        if let Some(&last) = out.last() {
            v = v.max(last + 1);
        }
        out.push(v);
    }
    // pushing past `max` only happens when count > max
    out.retain(|&v| v <= max);
    out
}
