//! Paired t-tests and the unsafe vs. blueprint-prior difference table.

use std::fmt::Write as _;

use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{PipelineError, ResultRow, Technique};
use crate::gadget::PriorKind;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TTest {
    pub t: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub n: usize,
    /// The differences have zero variance; `p` is 0 for a nonzero mean
    /// difference and 1 otherwise.
    pub degenerate: bool,
    /// Mean of `a − b`; negative favours `a` when lower is better.
    pub mean_diff: f64,
}

/// Paired two-sided Student t-test on `a[k] − b[k]`.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<TTest, PipelineError> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(PipelineError::Other(format!(
            "paired t-test needs equal lengths of at least 2, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if sd <= 1e-15 * mean.abs().max(1.0) {
        let nonzero = mean.abs() > 1e-15;
        return Ok(TTest {
            t: if nonzero {
                mean.signum() * f64::INFINITY
            } else {
                0.0
            },
            p: if nonzero { 0.0 } else { 1.0 },
            n,
            degenerate: true,
            mean_diff: mean,
        });
    }
    let t = mean / (sd / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .map_err(|e| PipelineError::Other(e.to_string()))?;
    let p = (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0);
    Ok(TTest {
        t,
        p,
        n,
        degenerate: false,
        mean_diff: mean,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiffRow {
    pub game: String,
    pub blueprint_id: String,
    pub blueprint_expl: f64,
    pub unsafe_expl: f64,
    pub resolve_expl: f64,
}

impl DiffRow {
    pub fn unsafe_minus_blueprint(&self) -> f64 {
        self.unsafe_expl - self.blueprint_expl
    }

    pub fn resolve_minus_blueprint(&self) -> f64 {
        self.resolve_expl - self.blueprint_expl
    }

    pub fn unsafe_minus_resolve(&self) -> f64 {
        self.unsafe_expl - self.resolve_expl
    }
}

/// Pairs each blueprint's unsafe row with its resolve + blueprint-prior row,
/// sorted by ascending blueprint exploitability.
pub fn unsafe_vs_blueprintprior_diff(rows: &[ResultRow]) -> Result<Vec<DiffRow>, PipelineError> {
    let mut keys: Vec<(&str, &str, f64)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|k| k.0 == r.game && k.1 == r.blueprint_id) {
            keys.push((&r.game, &r.blueprint_id, r.blueprint_expl));
        }
    }
    let find = |game: &str, id: &str, technique: Technique, prior: PriorKind| {
        rows.iter()
            .find(|r| {
                r.game == game
                    && r.blueprint_id == id
                    && r.technique == technique
                    && r.prior == prior
            })
            .map(|r| r.combined_expl)
            .ok_or_else(|| {
                PipelineError::Other(format!(
                    "{game} {id}: no {technique} row with prior {prior}"
                ))
            })
    };
    let mut out = Vec::with_capacity(keys.len());
    for (game, id, expl) in keys {
        out.push(DiffRow {
            game: game.to_string(),
            blueprint_id: id.to_string(),
            blueprint_expl: expl,
            unsafe_expl: find(game, id, Technique::Unsafe, PriorKind::None)?,
            resolve_expl: find(game, id, Technique::Resolve, PriorKind::Blueprint)?,
        });
    }
    if out.is_empty() {
        return Err(PipelineError::Other("no result rows".into()));
    }
    out.sort_by(|a, b| {
        a.blueprint_expl
            .total_cmp(&b.blueprint_expl)
            .then_with(|| (&a.game, &a.blueprint_id).cmp(&(&b.game, &b.blueprint_id)))
    });
    Ok(out)
}

pub fn diff_csv(rows: &[DiffRow]) -> String {
    let mut out = String::from(
        "game,blueprint_id,blueprint_expl,unsafe_expl,resolve_blueprint_expl,unsafe_minus_blueprint,resolve_minus_blueprint,unsafe_minus_resolve\n",
    );
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.game,
            r.blueprint_id,
            r.blueprint_expl,
            r.unsafe_expl,
            r.resolve_expl,
            r.unsafe_minus_blueprint(),
            r.resolve_minus_blueprint(),
            r.unsafe_minus_resolve()
        )
        .unwrap();
    }
    out
}
