use std::collections::HashSet;

use log::{debug, warn};

use super::lp::{
    sparse_solve, LpError, LpProblem, LpSolution, LpStatus, Relation, Simplex, SimplexOptions,
};
use super::sequence::{SequenceIndex, SqfMatrices};
use crate::efg::{Game, GameError, NodeId, Player};
use crate::gadget::{GadgetGame, Prior};
use crate::strategy::{best_response_table, BehavioralStrategy, StrategyError, StrategyProfile};

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("linear program is {0:?}")]
    Status(LpStatus),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("{0}")]
    Other(String),
}

/// Optimal (or last) solution of a sequence-form program.
#[derive(Clone, Debug, PartialEq)]
pub struct SqfSolution {
    /// Realization plan of the maximizer.
    pub x: Vec<f64>,
    /// Dual values over the opponent's realization constraints.
    pub v: Vec<f64>,
    /// Objective of the program that was solved.
    pub objective: f64,
    pub status: LpStatus,
    pub pivots: usize,
}

impl SqfSolution {
    /// `f₀ᵀv`, the unperturbed objective at this point.
    pub fn unperturbed_objective(&self) -> f64 {
        self.v[0]
    }
}

/// The program `max f_oᵀv s.t. F_m x = f_m, A_mᵀx − F_oᵀv ≥ 0, x ≥ 0` for
/// maximizer `m` and opponent `o`, kept in a tableau so that objectives can be
/// swapped without rebuilding.
pub struct SqfProgram {
    pub maximizer: Player,
    pub index: SequenceIndex,
    /// Payoff entries `(σ_m, τ_o, value)` in maximizer utility.
    pub payoff: Vec<(usize, usize, f64)>,
    n_x: usize,
    n_v: usize,
    problem: LpProblem<f64>,
    /// Dense tableau, kept for warm starts; `None` once the sparse backend
    /// has taken over.
    simplex: Option<Simplex<f64>>,
    solved: bool,
}

/// Which simplex implementation a program uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    /// Dense tableau with warm starts.
    Dense,
    /// Sparse revised simplex, solved cold for every objective.
    Sparse,
    /// Dense for small programs, sparse otherwise or when the dense solver
    /// stalls.
    Auto,
}

/// Largest `rows + columns` handled densely under [`Backend::Auto`].
pub const DENSE_LIMIT: usize = 300;

impl std::fmt::Debug for SqfProgram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SqfProgram")
            .field("maximizer", &self.maximizer)
            .field("n_x", &self.n_x)
            .field("n_v", &self.n_v)
            .finish()
    }
}

/// Entries of the payoff matrix oriented for `maximizer`.
fn oriented(m: &SqfMatrices, maximizer: Player) -> Vec<(usize, usize, f64)> {
    match maximizer {
        Player::P1 => m.a.clone(),
        _ => m.a.iter().map(|&(i, j, v)| (j, i, -v)).collect(),
    }
}

/// Builds the linear program of a game for `maximizer`. `fixed` lists
/// maximizer sequences whose realization is pinned to a value.
pub fn build_program(
    game: &Game,
    maximizer: Player,
    fixed: &[(usize, f64)],
) -> (LpProblem<f64>, SequenceIndex, Vec<(usize, usize, f64)>) {
    let index = SequenceIndex::new(game);
    let mats = index.matrices(game);
    let payoff = oriented(&mats, maximizer);
    let opp = maximizer.opponent();
    let n_x = index.of(maximizer).count;
    let n_v = index.of(opp).rows();
    let mut lp = LpProblem::new(n_x + n_v);
    for r in 0..n_v {
        lp.set_free(n_x + r);
    }
    lp.objective[n_x] = 1.0;
    // F_m x = f_m
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); index.of(maximizer).rows()];
    for (r, c, v) in index.constraints(maximizer) {
        rows[r].push((c, v));
    }
    for (r, coeffs) in rows.into_iter().enumerate() {
        lp.add_row(coeffs, Relation::Eq, if r == 0 { 1.0 } else { 0.0 });
    }
    // A_mᵀx − F_oᵀv ≥ 0, one row per opponent sequence
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); index.of(opp).count];
    for &(s, t, v) in &payoff {
        cols[t].push((s, v));
    }
    for (r, c, v) in index.constraints(opp) {
        cols[c].push((n_x + r, -v));
    }
    for coeffs in cols {
        lp.add_row(coeffs, Relation::Ge, 0.0);
    }
    for &(s, val) in fixed {
        lp.add_row(vec![(s, 1.0)], Relation::Eq, val);
    }
    (lp, index, payoff)
}

impl SqfProgram {
    pub fn new(game: &Game, maximizer: Player) -> Self {
        Self::with_fixed(game, maximizer, &[])
    }

    pub fn with_fixed(game: &Game, maximizer: Player, fixed: &[(usize, f64)]) -> Self {
        Self::with_backend(game, maximizer, fixed, Backend::Auto)
    }

    pub fn with_backend(
        game: &Game,
        maximizer: Player,
        fixed: &[(usize, f64)],
        backend: Backend,
    ) -> Self {
        let (lp, index, payoff) = build_program(game, maximizer, fixed);
        let n_x = index.of(maximizer).count;
        let n_v = index.of(maximizer.opponent()).rows();
        debug!(
            "sequence-form program for {}: {} x, {} v, {} rows",
            game.name(),
            n_x,
            n_v,
            lp.rows.len()
        );
        let dense = match backend {
            Backend::Dense => true,
            Backend::Sparse => false,
            Backend::Auto => lp.num_vars + lp.rows.len() <= DENSE_LIMIT,
        };
        let simplex = dense.then(|| Simplex::new(&lp, SimplexOptions::default()));
        SqfProgram {
            maximizer,
            index,
            payoff,
            n_x,
            n_v,
            problem: lp,
            simplex,
            solved: false,
        }
    }

    pub fn is_dense(&self) -> bool {
        self.simplex.is_some()
    }

    /// Solves for `objective`, warm-starting the dense tableau when possible.
    fn run(&mut self, objective: Vec<f64>) -> Result<LpSolution<f64>, SolveError> {
        if let Some(simplex) = self.simplex.as_mut() {
            let res = if self.solved {
                simplex.reoptimize(&objective)
            } else {
                simplex.solve().and_then(|first| {
                    if objective == self.problem.objective {
                        Ok(first)
                    } else {
                        simplex.reoptimize(&objective)
                    }
                })
            };
            match res {
                Ok(sol) => {
                    self.solved = sol.status == LpStatus::Optimal;
                    return Ok(sol);
                }
                Err(LpError::IterationCap { .. }) => {
                    warn!("dense simplex stalled; switching to the sparse backend");
                    self.simplex = None;
                }
                Err(e) => return Err(e.into()),
            }
        }
        self.problem.objective = objective;
        let sol = sparse_solve(&self.problem)?;
        self.solved = sol.status == LpStatus::Optimal;
        Ok(sol)
    }

    fn split(&self, sol: LpSolution<f64>) -> SqfSolution {
        SqfSolution {
            x: sol.x[..self.n_x].to_vec(),
            v: sol.x[self.n_x..].to_vec(),
            objective: sol.objective,
            status: sol.status,
            pivots: sol.pivots,
        }
    }

    /// Solves the unperturbed program.
    pub fn solve(&mut self) -> Result<SqfSolution, SolveError> {
        let mut obj = vec![0.0; self.n_x + self.n_v];
        obj[self.n_x] = 1.0;
        let sol = self.run(obj)?;
        if sol.status != LpStatus::Optimal {
            return Err(SolveError::Status(sol.status));
        }
        Ok(self.split(sol))
    }

    /// Solves with the objective perturbed by a tremble `l` over opponent
    /// sequences: `(f_o − ε F_o l)ᵀv + ε (A_m l)ᵀx`.
    pub fn solve_perturbed(
        &mut self,
        tremble: &[(usize, f64)],
        eps: f64,
    ) -> Result<SqfSolution, SolveError> {
        let obj = self.perturbed_objective(tremble, eps);
        let sol = self.run(obj)?;
        if sol.status != LpStatus::Optimal {
            return Err(SolveError::Status(sol.status));
        }
        Ok(self.split(sol))
    }

    pub fn perturbed_objective(&self, tremble: &[(usize, f64)], eps: f64) -> Vec<f64> {
        let opp = self.maximizer.opponent();
        let mut l = vec![0.0; self.index.of(opp).count];
        for &(t, w) in tremble {
            l[t] += w;
        }
        let mut obj = vec![0.0; self.n_x + self.n_v];
        obj[self.n_x] = 1.0;
        for (r, c, v) in self.index.constraints(opp) {
            obj[self.n_x + r] -= eps * v * l[c];
        }
        for &(s, t, v) in &self.payoff {
            obj[s] += eps * v * l[t];
        }
        obj
    }

    /// Value the opponent's best response leaves to a maximizer realization
    /// plan, computed directly in sequence form.
    pub fn guaranteed_value(&self, x: &[f64]) -> f64 {
        let opp = self.index.of(self.maximizer.opponent());
        let mut w = vec![0.0; opp.count];
        for &(s, t, v) in &self.payoff {
            w[t] += v * x[s];
        }
        let mut below = vec![0.0; opp.count];
        for l in (0..opp.infosets.len()).rev() {
            let end = if l + 1 < opp.infosets.len() {
                opp.first[l + 1]
            } else {
                opp.count
            };
            let best = (opp.first[l]..end)
                .map(|t| w[t] + below[t])
                .fold(f64::INFINITY, f64::min);
            below[opp.parent[l]] += best;
        }
        w[0] + below[0]
    }

    pub fn behavioral(&self, game: &Game, x: &[f64]) -> BehavioralStrategy {
        self.index.behavioral(game, self.maximizer, x)
    }
}

/// Equilibrium strategy of `maximizer` and the maximizer's game value.
pub fn solve_nash(game: &Game, maximizer: Player) -> Result<(BehavioralStrategy, f64), SolveError> {
    let mut prog = SqfProgram::new(game, maximizer);
    let sol = prog.solve()?;
    Ok((prog.behavioral(game, &sol.x), sol.objective))
}

/// Equilibrium value for P1.
pub fn equilibrium_value(game: &Game) -> Result<f64, SolveError> {
    solve_nash(game, Player::P1).map(|(_, v)| v)
}

/// ε-refinement schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule {
    pub eps0: f64,
    pub factor: f64,
    pub eps_min: f64,
    /// Tolerance of the two optimality-at-zero tests.
    pub tol: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            eps0: 1e-2,
            factor: 0.1,
            eps_min: 1e-9,
            tol: 1e-9,
        }
    }
}

impl Schedule {
    pub fn starting_at(eps0: f64) -> Self {
        Schedule {
            eps0,
            ..Self::default()
        }
    }

    pub fn epsilons(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut e = self.eps0;
        while e >= self.eps_min * (1.0 - 1e-12) {
            out.push(e);
            e *= self.factor;
        }
        out
    }
}

/// Result of the ε-refinement loop.
#[derive(Clone, Debug)]
pub struct Refinement {
    pub strategy: BehavioralStrategy,
    pub x: Vec<f64>,
    /// ε of the returned solution.
    pub epsilon: f64,
    /// Whether both optimality-at-zero tests passed.
    pub converged: bool,
    /// Optimal unperturbed value (maximizer units).
    pub value: f64,
    /// Unperturbed value of the returned strategy.
    pub strategy_value: f64,
    pub pivots: usize,
}

/// Solves the perturbed program for a decreasing ε sequence until the
/// solution is also optimal for ε = 0. An empty tremble returns the plain
/// equilibrium.
pub fn refine(
    game: &Game,
    maximizer: Player,
    tremble: &[(usize, f64)],
    schedule: Schedule,
) -> Result<Refinement, SolveError> {
    let mut prog = SqfProgram::new(game, maximizer);
    let base = prog.solve()?;
    let value = base.objective;
    let mut pivots = base.pivots;
    if tremble.is_empty() {
        return Ok(Refinement {
            strategy: prog.behavioral(game, &base.x),
            strategy_value: prog.guaranteed_value(&base.x),
            x: base.x,
            epsilon: 0.0,
            converged: true,
            value,
            pivots,
        });
    }
    let mut last = None;
    for eps in schedule.epsilons() {
        let sol = prog.solve_perturbed(tremble, eps)?;
        pivots += sol.pivots;
        let seq_value = prog.guaranteed_value(&sol.x);
        let strategy = prog.behavioral(game, &sol.x);
        // second test: best-response gain through the game tree
        let table = StrategyProfile::one_sided_table(game, &strategy)?;
        let br = best_response_table(game, &table, maximizer.opponent());
        let tree_value = br.value * maximizer.sign();
        let ok = (seq_value - value).abs() <= schedule.tol && value - tree_value <= schedule.tol;
        debug!("refine eps={eps:e}: sequence value {seq_value}, tree value {tree_value}, optimum {value}");
        let r = Refinement {
            strategy,
            x: sol.x,
            epsilon: eps,
            converged: ok,
            value,
            strategy_value: seq_value,
            pivots,
        };
        if ok {
            return Ok(r);
        }
        last = Some(r);
    }
    let r = last.ok_or_else(|| SolveError::Other("empty refinement schedule".into()))?;
    warn!(
        "{}: refinement reached eps_min without an exact optimum (gap {:e})",
        game.name(),
        value - r.strategy_value
    );
    Ok(r)
}

/// Solves the perturbed program of a gadget for one ε.
pub fn solve_perturbed(
    gadget: &GadgetGame,
    prior: &Prior,
    eps: f64,
) -> Result<(BehavioralStrategy, SqfSolution), SolveError> {
    let mut prog = SqfProgram::new(&gadget.game, gadget.resolver);
    let sol = prog.solve_perturbed(&gadget.tremble(prior), eps)?;
    Ok((prog.behavioral(&gadget.game, &sol.x), sol))
}

/// Gadget-game sequential equilibrium strategy of the resolver by ε-refinement;
/// without a prior this is a plain gadget equilibrium.
pub fn refine_to_ggse(
    gadget: &GadgetGame,
    prior: Option<&Prior>,
    schedule: Schedule,
) -> Result<Refinement, SolveError> {
    let tremble = prior.map(|p| gadget.tremble(p)).unwrap_or_default();
    refine(&gadget.game, gadget.resolver, &tremble, schedule)
}

/// Resolver infosets containing a history that strictly precedes one of
/// `roots`.
pub fn preceding_infosets(game: &Game, roots: &[NodeId], player: Player) -> Vec<usize> {
    let mut marked = vec![false; game.num_nodes()];
    for &r in roots {
        let mut cur = game.parent(r).map(|(p, _)| p);
        while let Some(c) = cur {
            if marked[c] {
                break;
            }
            marked[c] = true;
            cur = game.parent(c).map(|(p, _)| p);
        }
    }
    let mut out: Vec<usize> = game
        .player_infosets(player)
        .filter(|&s| game.infoset(s).members.iter().any(|&h| marked[h]))
        .collect();
    out.sort_unstable();
    out
}

/// Best full-game strategy of `resolver` whose realization is pinned to the
/// blueprint on every infoset preceding the given public states. Returns the
/// strategy and the resolver's guaranteed value.
pub fn solve_continuation(
    game: &Game,
    blueprint: &BehavioralStrategy,
    public_states: &[&str],
    resolver: Player,
) -> Result<(BehavioralStrategy, f64), SolveError> {
    let mut roots = Vec::new();
    for label in public_states {
        let ps = game
            .public_state(label)
            .ok_or_else(|| GameError::UnknownPublicState(label.to_string()))?;
        roots.extend(ps.nodes.iter().copied());
    }
    let frozen = preceding_infosets(game, &roots, resolver);
    let index = SequenceIndex::new(game);
    let x_bar = index.realization(game, blueprint);
    let ps = index.of(resolver);
    let mut fixed = Vec::new();
    let mut seen = HashSet::new();
    for s in frozen {
        let n = game.infoset(s).actions.len();
        for k in 0..n {
            let q = ps.seq(s, k);
            if seen.insert(q) {
                fixed.push((q, x_bar[q]));
            }
        }
    }
    let mut prog = SqfProgram::with_fixed(game, resolver, &fixed);
    let sol = prog.solve()?;
    let mut strategy = prog.behavioral(game, &sol.x);
    // keep the blueprint where the plan leaves infosets unreached
    for s in game.player_infosets(resolver) {
        let l = ps.local(s).expect("own infoset");
        if sol.x[ps.parent[l]] <= 0.0 {
            let label = &game.infoset(s).label;
            strategy.set(
                label.clone(),
                blueprint
                    .get(label)
                    .expect("blueprint covers game")
                    .to_vec(),
            );
        }
    }
    Ok((strategy, sol.objective))
}
