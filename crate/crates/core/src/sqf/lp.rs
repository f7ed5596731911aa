//! Dense-tableau primal simplex.
//!
//! Problems are stated as `maximize cᵀx` subject to rows `aᵀx (≤|=|≥) b` with
//! each variable either nonnegative or free. Free variables are split into a
//! difference of two nonnegative columns. Rows that cannot start with a slack
//! in the basis receive an artificial variable that phase one drives out.
//!
//! Pricing is Dantzig's largest reduced cost; after a streak of degenerate
//! pivots the solver switches to Bland's rule until progress resumes. A solved
//! tableau can be reoptimized for a new objective, starting from the previous
//! optimal basis.

use std::fmt::{self, Write as _};

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row<T> {
    pub coeffs: Vec<(usize, T)>,
    pub relation: Relation,
    pub rhs: T,
}

/// A linear program over `num_vars` variables, maximizing `objective`.
#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem<T> {
    pub num_vars: usize,
    pub objective: Vec<T>,
    pub free: Vec<bool>,
    pub rows: Vec<Row<T>>,
}

impl<T: Scalar> LpProblem<T> {
    pub fn new(num_vars: usize) -> Self {
        LpProblem {
            num_vars,
            objective: vec![T::zero(); num_vars],
            free: vec![false; num_vars],
            rows: Vec::new(),
        }
    }

    pub fn set_free(&mut self, var: usize) {
        self.free[var] = true;
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, T)>, relation: Relation, rhs: T) {
        debug_assert!(coeffs.iter().all(|&(j, _)| j < self.num_vars));
        self.rows.push(Row {
            coeffs,
            relation,
            rhs,
        });
    }

    /// Plain-text standard form `min cᵀx, Ax = b, x ≥ 0` (after splitting free
    /// variables and adding slacks), for cross-checking with external solvers.
    pub fn dump_standard_form(&self) -> String {
        let sf = StandardForm::new(self);
        let mut out = String::new();
        writeln!(out, "# standard form: min c^T x, A x = b, x >= 0").unwrap();
        writeln!(out, "vars {}", sf.num_cols).unwrap();
        writeln!(out, "rows {}", sf.rows.len()).unwrap();
        writeln!(out, "c").unwrap();
        let c: Vec<String> = (0..sf.num_cols)
            .map(|j| format!("{}", -sf.cost[j]))
            .collect();
        writeln!(out, "{}", c.join(" ")).unwrap();
        writeln!(out, "A").unwrap();
        for (coeffs, _, _) in &sf.rows {
            let r: Vec<String> = coeffs.iter().map(|(j, v)| format!("{j}:{v}")).collect();
            writeln!(out, "{}", r.join(" ")).unwrap();
        }
        writeln!(out, "b").unwrap();
        let b: Vec<String> = sf.rows.iter().map(|(_, rhs, _)| format!("{rhs}")).collect();
        writeln!(out, "{}", b.join(" ")).unwrap();
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    /// Values of the original variables (meaningful when optimal).
    pub x: Vec<T>,
    pub objective: T,
    pub pivots: usize,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("simplex iteration cap {cap} reached in phase {phase} ({rows} rows, {cols} columns)")]
    IterationCap {
        cap: usize,
        phase: u8,
        rows: usize,
        cols: usize,
    },
    #[error("objective has {got} coefficients, expected {expected}")]
    ObjectiveLength { got: usize, expected: usize },
    #[error("reoptimize called before a successful solve")]
    NotSolved,
    #[error("sparse backend failed: {0}")]
    Backend(String),
}

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions<T> {
    /// Reduced-cost threshold for entering columns.
    pub optimality_tol: T,
    /// Smallest admissible pivot magnitude.
    pub pivot_tol: T,
    /// Phase-one objective threshold for declaring infeasibility.
    pub feasibility_tol: T,
    /// Degenerate pivots in a row before switching to Bland's rule.
    pub bland_after: usize,
    /// Pivot cap; 0 selects a size-based default.
    pub max_pivots: usize,
}

impl<T: Scalar> Default for SimplexOptions<T> {
    fn default() -> Self {
        let tol = T::default_tolerance();
        SimplexOptions {
            optimality_tol: tol,
            pivot_tol: tol,
            feasibility_tol: tol * T::of(10.0),
            bland_after: 50,
            max_pivots: 0,
        }
    }
}

/// Column bookkeeping shared by the tableau and the dump.
struct StandardForm<T> {
    num_cols: usize,
    /// Column of the positive and (for free variables) negative part.
    var_cols: Vec<(usize, Option<usize>)>,
    cost: Vec<T>,
    /// (coefficients, rhs ≥ 0, initial basic column if a slack can start basic)
    rows: Vec<(Vec<(usize, T)>, T, Option<usize>)>,
}

impl<T: Scalar> StandardForm<T> {
    fn new(p: &LpProblem<T>) -> Self {
        let mut num_cols = 0;
        let mut var_cols = Vec::with_capacity(p.num_vars);
        for j in 0..p.num_vars {
            let pos = num_cols;
            num_cols += 1;
            let neg = if p.free[j] {
                num_cols += 1;
                Some(pos + 1)
            } else {
                None
            };
            var_cols.push((pos, neg));
        }
        let mut cost = vec![T::zero(); num_cols];
        for j in 0..p.num_vars {
            let (pos, neg) = var_cols[j];
            cost[pos] = p.objective[j];
            if let Some(n) = neg {
                cost[n] = -p.objective[j];
            }
        }
        let mut rows = Vec::with_capacity(p.rows.len());
        for row in &p.rows {
            let mut coeffs: Vec<(usize, T)> = Vec::with_capacity(row.coeffs.len() * 2 + 1);
            for &(j, v) in &row.coeffs {
                let (pos, neg) = var_cols[j];
                coeffs.push((pos, v));
                if let Some(n) = neg {
                    coeffs.push((n, -v));
                }
            }
            let mut rhs = row.rhs;
            let mut rel = row.relation;
            if rhs < T::zero() {
                rhs = -rhs;
                coeffs.iter_mut().for_each(|(_, v)| *v = -*v);
                rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            if rhs == T::zero() && rel == Relation::Ge {
                coeffs.iter_mut().for_each(|(_, v)| *v = -*v);
                rel = Relation::Le;
            }
            let basic = match rel {
                Relation::Le => {
                    coeffs.push((num_cols, T::one()));
                    num_cols += 1;
                    Some(num_cols - 1)
                }
                Relation::Ge => {
                    coeffs.push((num_cols, -T::one()));
                    num_cols += 1;
                    None
                }
                Relation::Eq => None,
            };
            rows.push((coeffs, rhs, basic));
        }
        cost.resize(num_cols, T::zero());
        StandardForm {
            num_cols,
            var_cols,
            cost,
            rows,
        }
    }
}

/// A simplex tableau that keeps its basis between solves.
pub struct Simplex<T> {
    opts: SimplexOptions<T>,
    m: usize,
    /// Structural plus slack columns; artificials follow.
    n_real: usize,
    n: usize,
    width: usize,
    tab: Vec<T>,
    basis: Vec<usize>,
    red: Vec<T>,
    cost: Vec<T>,
    var_cols: Vec<(usize, Option<usize>)>,
    num_vars: usize,
    solved: bool,
    pivots: usize,
}

impl<T: Scalar> fmt::Debug for Simplex<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Simplex")
            .field("rows", &self.m)
            .field("cols", &self.n)
            .field("pivots", &self.pivots)
            .finish()
    }
}

impl<T: Scalar> Simplex<T> {
    pub fn new(problem: &LpProblem<T>, opts: SimplexOptions<T>) -> Self {
        let sf = StandardForm::new(problem);
        let m = sf.rows.len();
        let n_real = sf.num_cols;
        let n_art = sf.rows.iter().filter(|r| r.2.is_none()).count();
        let n = n_real + n_art;
        let width = n + 1;
        let mut tab = vec![T::zero(); m * width];
        let mut basis = Vec::with_capacity(m);
        let mut next_art = n_real;
        for (i, (coeffs, rhs, basic)) in sf.rows.iter().enumerate() {
            let row = &mut tab[i * width..(i + 1) * width];
            for &(j, v) in coeffs {
                row[j] = row[j] + v;
            }
            row[n] = *rhs;
            match basic {
                Some(b) => basis.push(*b),
                None => {
                    row[next_art] = T::one();
                    basis.push(next_art);
                    next_art += 1;
                }
            }
        }
        let mut cost = sf.cost;
        cost.resize(n, T::zero());
        let mut red = cost.clone();
        red.resize(width, T::zero());
        Simplex {
            opts,
            m,
            n_real,
            n,
            width,
            tab,
            basis,
            red,
            cost,
            var_cols: sf.var_cols,
            num_vars: problem.num_vars,
            solved: false,
            pivots: 0,
        }
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    /// Solves from scratch (phase one, then phase two).
    pub fn solve(&mut self) -> Result<LpSolution<T>, LpError> {
        self.pivots = 0;
        // phase one: maximize -Σ artificials
        let mut phase1 = vec![T::zero(); self.n];
        for c in phase1.iter_mut().skip(self.n_real) {
            *c = -T::one();
        }
        self.price(&phase1);
        let cap = self.cap();
        self.iterate(self.n, 1, cap)?;
        let infeasibility = -self.objective_value();
        if infeasibility > self.opts.feasibility_tol {
            self.solved = false;
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![T::zero(); self.num_vars],
                objective: T::zero(),
                pivots: self.pivots,
            });
        }
        self.drive_out_artificials();
        let cost = self.cost.clone();
        self.phase_two(&cost, cap)
    }

    /// Replaces the objective and reoptimizes from the current basis.
    pub fn reoptimize(&mut self, objective: &[T]) -> Result<LpSolution<T>, LpError> {
        if !self.solved {
            return Err(LpError::NotSolved);
        }
        if objective.len() != self.num_vars {
            return Err(LpError::ObjectiveLength {
                got: objective.len(),
                expected: self.num_vars,
            });
        }
        let mut full = vec![T::zero(); self.n];
        for (j, &(pos, neg)) in self.var_cols.iter().enumerate() {
            full[pos] = objective[j];
            if let Some(n) = neg {
                full[n] = -objective[j];
            }
        }
        self.pivots = 0;
        let cap = self.cap();
        self.phase_two(&full, cap)
    }

    fn phase_two(&mut self, cost: &[T], cap: usize) -> Result<LpSolution<T>, LpError> {
        self.price(cost);
        let unbounded = !self.iterate(self.n_real, 2, cap)?;
        self.solved = !unbounded;
        let x = self.extract();
        Ok(LpSolution {
            status: if unbounded {
                LpStatus::Unbounded
            } else {
                LpStatus::Optimal
            },
            x,
            objective: self.objective_value(),
            pivots: self.pivots,
        })
    }

    fn cap(&self) -> usize {
        if self.opts.max_pivots > 0 {
            self.opts.max_pivots
        } else {
            50 * (self.m + self.n) + 1000
        }
    }

    fn objective_value(&self) -> T {
        -self.red[self.n]
    }

    /// Sets reduced costs `c_j − c_Bᵀ B⁻¹A_j` for the current basis.
    fn price(&mut self, cost: &[T]) {
        let w = self.width;
        self.red.clear();
        self.red.extend_from_slice(cost);
        self.red.resize(w, T::zero());
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != T::zero() {
                let row = &self.tab[i * w..(i + 1) * w];
                for (r, &a) in self.red.iter_mut().zip(row) {
                    if a != T::zero() {
                        *r = *r - cb * a;
                    }
                }
            }
        }
        for &b in &self.basis {
            self.red[b] = T::zero();
        }
    }

    /// Runs simplex pivots over columns `< limit`. Returns false on unboundedness.
    fn iterate(&mut self, limit: usize, phase: u8, cap: usize) -> Result<bool, LpError> {
        let tol = self.opts.optimality_tol;
        let mut degenerate = 0usize;
        loop {
            let bland = degenerate >= self.opts.bland_after;
            let entering = if bland {
                (0..limit).find(|&j| self.red[j] > tol)
            } else {
                let mut best = None;
                let mut best_val = tol;
                for j in 0..limit {
                    if self.red[j] > best_val {
                        best_val = self.red[j];
                        best = Some(j);
                    }
                }
                best
            };
            let Some(q) = entering else {
                return Ok(true);
            };
            let Some((r, ratio)) = self.ratio_test(q, bland) else {
                return Ok(false);
            };
            if ratio <= self.opts.pivot_tol {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, q);
            self.pivots += 1;
            if self.pivots > cap {
                return Err(LpError::IterationCap {
                    cap,
                    phase,
                    rows: self.m,
                    cols: self.n,
                });
            }
        }
    }

    fn ratio_test(&self, q: usize, bland: bool) -> Option<(usize, T)> {
        let w = self.width;
        let mut best: Option<(usize, T, T)> = None;
        let eps = self.opts.pivot_tol;
        for i in 0..self.m {
            let a = self.tab[i * w + q];
            if a > eps {
                let b = self.tab[i * w + self.n].max(T::zero());
                let ratio = b / a;
                let better = match best {
                    None => true,
                    Some((bi, br, ba)) => {
                        if ratio < br - eps * T::of(1e-3) {
                            true
                        } else if ratio <= br + eps * T::of(1e-3) {
                            if bland {
                                self.basis[i] < self.basis[bi]
                            } else {
                                a > ba
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    best = Some((i, ratio, a));
                }
            }
        }
        best.map(|(i, r, _)| (i, r))
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width;
        let zap = T::epsilon() * T::of(64.0);
        let inv = T::one() / self.tab[r * w + q];
        let mut nz: Vec<(usize, T)> = Vec::new();
        {
            let row = &mut self.tab[r * w..(r + 1) * w];
            for (j, v) in row.iter_mut().enumerate() {
                if *v != T::zero() {
                    *v = *v * inv;
                    if v.abs() < zap {
                        *v = T::zero();
                    } else {
                        nz.push((j, *v));
                    }
                }
            }
            row[q] = T::one();
        }
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.tab[i * w + q];
            if f == T::zero() {
                continue;
            }
            let row = &mut self.tab[i * w..(i + 1) * w];
            for &(j, v) in &nz {
                let x = row[j] - f * v;
                row[j] = if x.abs() < zap { T::zero() } else { x };
            }
            row[q] = T::zero();
        }
        let f = self.red[q];
        if f != T::zero() {
            for &(j, v) in &nz {
                self.red[j] = self.red[j] - f * v;
            }
            self.red[q] = T::zero();
        }
        self.basis[r] = q;
    }

    /// Pivots basic artificials (at zero level) out of the basis where possible.
    /// Rows with no eligible column are redundant and keep their artificial.
    fn drive_out_artificials(&mut self) {
        let w = self.width;
        for i in 0..self.m {
            if self.basis[i] < self.n_real {
                continue;
            }
            let row = &self.tab[i * w..(i + 1) * w];
            let mut best: Option<(usize, T)> = None;
            for (j, &a) in row.iter().enumerate().take(self.n_real) {
                if a.abs() > self.opts.pivot_tol && best.is_none_or(|(_, b)| a.abs() > b) {
                    best = Some((j, a.abs()));
                }
            }
            if let Some((j, _)) = best {
                self.pivot(i, j);
                self.pivots += 1;
            }
        }
        // artificial columns never re-enter; clear them so they cannot pollute pricing
        for i in 0..self.m {
            for j in self.n_real..self.n {
                if self.basis[i] != j {
                    self.tab[i * w + j] = T::zero();
                }
            }
        }
    }

    fn extract(&self) -> Vec<T> {
        let w = self.width;
        let mut col = vec![T::zero(); self.n];
        for (i, &b) in self.basis.iter().enumerate() {
            col[b] = self.tab[i * w + self.n];
        }
        self.var_cols
            .iter()
            .map(|&(pos, neg)| col[pos] - neg.map_or(T::zero(), |n| col[n]))
            .collect()
    }
}

/// Convenience wrapper: build a tableau and solve once.
pub fn lp_solve<T: Scalar>(problem: &LpProblem<T>) -> Result<LpSolution<T>, LpError> {
    Simplex::new(problem, SimplexOptions::default()).solve()
}

/// Solves with the sparse revised-simplex backend (`microlp`), used for
/// programs too large for a dense tableau.
pub fn sparse_solve(problem: &LpProblem<f64>) -> Result<LpSolution<f64>, LpError> {
    use microlp::{ComparisonOp, OptimizationDirection, Problem};
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = (0..problem.num_vars)
        .map(|j| {
            let lo = if problem.free[j] {
                f64::NEG_INFINITY
            } else {
                0.0
            };
            p.add_var(problem.objective[j], (lo, f64::INFINITY))
        })
        .collect();
    for row in &problem.rows {
        let op = match row.relation {
            Relation::Le => ComparisonOp::Le,
            Relation::Eq => ComparisonOp::Eq,
            Relation::Ge => ComparisonOp::Ge,
        };
        let terms: Vec<_> = row.coeffs.iter().map(|&(j, a)| (vars[j], a)).collect();
        p.add_constraint(terms, op, row.rhs);
    }
    let status = |s: LpStatus| LpSolution {
        status: s,
        x: vec![0.0; problem.num_vars],
        objective: 0.0,
        pivots: 0,
    };
    match p.solve() {
        Ok(outcome) => {
            let sol = outcome
                .into_solution()
                .map_err(|_| LpError::Backend("interrupted".into()))?;
            let x: Vec<f64> = vars.iter().map(|&v| sol.var_value_raw(v)).collect();
            let objective = x.iter().zip(&problem.objective).map(|(a, b)| a * b).sum();
            Ok(LpSolution {
                status: LpStatus::Optimal,
                x,
                objective,
                pivots: 0,
            })
        }
        Err(microlp::Error::Infeasible) => Ok(status(LpStatus::Infeasible)),
        Err(microlp::Error::Unbounded) => Ok(status(LpStatus::Unbounded)),
        Err(e) => Err(LpError::Backend(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_variable_bound() {
        let mut p = LpProblem::<f64>::new(1);
        p.objective[0] = 1.0;
        p.add_row(vec![(0, 1.0)], Relation::Le, 1.0);
        let s = lp_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_abs_diff_eq!(s.objective, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.x[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn textbook_problem() {
        // max 3x + 5y; x ≤ 4; 2y ≤ 12; 3x + 2y ≤ 18 → (2, 6), 36
        let mut p = LpProblem::<f64>::new(2);
        p.objective = vec![3.0, 5.0];
        p.add_row(vec![(0, 1.0)], Relation::Le, 4.0);
        p.add_row(vec![(1, 2.0)], Relation::Le, 12.0);
        p.add_row(vec![(0, 3.0), (1, 2.0)], Relation::Le, 18.0);
        let s = lp_solve(&p).unwrap();
        assert_abs_diff_eq!(s.objective, 36.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.x[0], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.x[1], 6.0, epsilon = 1e-9);
    }

    #[test]
    fn equality_free_and_ge_rows() {
        // max -x - y + z; x + y = 2; z free; z ≤ x - 1; x ≥ 0.5
        let mut p = LpProblem::<f64>::new(3);
        p.objective = vec![-1.0, -1.0, 1.0];
        p.set_free(2);
        p.add_row(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 2.0);
        p.add_row(vec![(2, 1.0), (0, -1.0)], Relation::Le, -1.0);
        p.add_row(vec![(0, 1.0)], Relation::Ge, 0.5);
        let s = lp_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_abs_diff_eq!(s.objective, -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.x[0], 2.0, epsilon = 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut p = LpProblem::<f64>::new(1);
        p.add_row(vec![(0, 1.0)], Relation::Ge, 2.0);
        p.add_row(vec![(0, 1.0)], Relation::Le, 1.0);
        assert_eq!(lp_solve(&p).unwrap().status, LpStatus::Infeasible);
        let mut q = LpProblem::<f64>::new(1);
        q.objective[0] = 1.0;
        q.add_row(vec![(0, 1.0)], Relation::Ge, 1.0);
        assert_eq!(lp_solve(&q).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn reoptimize_matches_cold_solve() {
        let mut p = LpProblem::<f64>::new(2);
        p.objective = vec![3.0, 5.0];
        p.add_row(vec![(0, 1.0)], Relation::Le, 4.0);
        p.add_row(vec![(1, 2.0)], Relation::Le, 12.0);
        p.add_row(vec![(0, 3.0), (1, 2.0)], Relation::Le, 18.0);
        let mut s = Simplex::new(&p, SimplexOptions::default());
        s.solve().unwrap();
        let warm = s.reoptimize(&[5.0, 1.0]).unwrap();
        p.objective = vec![5.0, 1.0];
        let cold = lp_solve(&p).unwrap();
        assert_abs_diff_eq!(warm.objective, cold.objective, epsilon = 1e-9);
        assert_abs_diff_eq!(warm.objective, 23.0, epsilon = 1e-9);
    }

    #[test]
    fn redundant_equalities() {
        let mut p = LpProblem::<f64>::new(2);
        p.objective = vec![1.0, 2.0];
        p.add_row(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0);
        p.add_row(vec![(0, 2.0), (1, 2.0)], Relation::Eq, 2.0);
        let s = lp_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_abs_diff_eq!(s.objective, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn single_precision() {
        let mut p = LpProblem::<f32>::new(2);
        p.objective = vec![3.0, 5.0];
        p.add_row(vec![(0, 1.0)], Relation::Le, 4.0);
        p.add_row(vec![(1, 2.0)], Relation::Le, 12.0);
        p.add_row(vec![(0, 3.0), (1, 2.0)], Relation::Le, 18.0);
        let s = lp_solve(&p).unwrap();
        assert!((s.objective - 36.0).abs() < 1e-4);
    }

    #[test]
    fn dump_lists_blocks() {
        let mut p = LpProblem::<f64>::new(1);
        p.objective[0] = 1.0;
        p.add_row(vec![(0, 1.0)], Relation::Le, 1.0);
        let d = p.dump_standard_form();
        assert!(d.contains("vars 2"));
        assert!(d.contains("\nA\n0:1 1:1\n"));
    }
}
