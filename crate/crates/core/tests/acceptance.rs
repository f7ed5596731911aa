//! Acceptance checks: one PASS/FAIL line per criterion.

use std::time::{Duration, Instant};

use ggse::cfr::{run_cfr, Cfr, CfrConfig};
use ggse::gadget::{
    blueprint_cbvs, build_gadget, extract_subgame, make_prior, GadgetGame, GadgetKind, Prior,
    PriorKind, SubgameSpec, DEFAULT_CLIP,
};
use ggse::games::*;
use ggse::pipeline::{
    diff_csv, gadget_gain, make_blueprints, paired_ttest, rows_csv, run_experiment, solve_gadget,
    unsafe_vs_blueprintprior_diff, BlueprintSource, ExperimentConfig, ResultRow, SolverKind,
    Technique,
};
use ggse::sqf::{equilibrium_value, refine_to_ggse, solve_continuation, solve_nash, Schedule};
use ggse::strategy::{
    combine, expected_utility, exploitability, BehavioralStrategy, StrategyProfile,
};
use ggse::{Game, Player};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(what: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    check((got - want).abs() <= tol, || {
        format!("{what} = {got}, expected {want} ± {tol:e}")
    })
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn strategy(player: Player, entries: &[(&str, &[f64])]) -> BehavioralStrategy {
    let mut s = BehavioralStrategy::new(player);
    for (l, p) in entries {
        s.set(*l, p.to_vec());
    }
    s
}

fn profile(g: &Game, p1: &[(&str, &[f64])]) -> StrategyProfile {
    let mut p = StrategyProfile::uniform(g);
    for (l, d) in p1 {
        p.get_mut(Player::P1).set(*l, d.to_vec());
    }
    p
}

fn fig1_blueprint(g: &Game) -> StrategyProfile {
    profile(g, &[("s1", &[0.5, 0.5, 0.0])])
}

fn fig5_blueprint(g: &Game) -> StrategyProfile {
    profile(g, &[("s1.1", &[0.0, 1.0]), ("s1.2", &[0.5, 0.5])])
}

fn mw_blueprint(g: &Game) -> StrategyProfile {
    profile(g, &[("s1.1", &[0.0, 1.0]), ("s1.2", &[0.25, 0.75])])
}

fn rock_blueprint(g: &Game) -> StrategyProfile {
    profile(g, &[("s1", &[1.0, 0.0, 0.0])])
}

fn spec_at(g: &Game, bp: &StrategyProfile, public: &str) -> Result<SubgameSpec, String> {
    extract_subgame(g, public, bp, Player::P1).map_err(e)
}

fn cbv_pair(g: &Game, bp: &StrategyProfile, spec: &SubgameSpec) -> Result<Vec<f64>, String> {
    Ok(blueprint_cbvs(g, bp.get(Player::P1), spec)
        .map_err(e)?
        .values
        .into_iter()
        .map(|(_, v)| v)
        .collect())
}

fn criterion_1() -> Outcome {
    let tol = 1e-9;
    let g = fig1_game();
    let bp = fig1_blueprint(&g);
    let spec = spec_at(&g, &bp, "p1")?;
    let c = cbv_pair(&g, &bp, &spec)?;
    close("fig1 CBV(H)", c[0], 0.0, tol)?;
    close("fig1 CBV(T)", c[1], -0.5, tol)?;

    let mm = build_gadget(&g, &spec, GadgetKind::MaxMargin).map_err(e)?;
    let (s, v) = solve_nash(&mm.game, Player::P1).map_err(e)?;
    let p = s.get("s1").ok_or("no s1")?;
    for (k, want) in [0.0, 0.75, 0.25].into_iter().enumerate() {
        close(&format!("fig1 max-margin NE[{k}]"), p[k], want, tol)?;
    }
    close("fig1 max-margin value", v, 0.75, tol)?;
    // uniqueness: the only grid strategy attaining the value is the LP one
    let n = 200;
    let mut optimal = Vec::new();
    for a in 0..=n {
        for b in 0..=n - a {
            let d = [
                a as f64 / n as f64,
                b as f64 / n as f64,
                (n - a - b) as f64 / n as f64,
            ];
            let gain = gadget_gain(&mm, &strategy(Player::P1, &[("s1", &d)])).map_err(e)?;
            if gain <= tol {
                optimal.push((a, b));
            }
        }
    }
    check(optimal == vec![(0, 150)], || {
        format!("grid optima {optimal:?}")
    })?;

    let g = equilibria_example();
    let bp = fig5_blueprint(&g);
    close(
        "three-state value",
        equilibrium_value(&g).map_err(e)?,
        7.0 / 9.0,
        tol,
    )?;
    close(
        "three-state blueprint exploitability",
        exploitability(&g, bp.get(Player::P1)).map_err(e)?,
        4.0 / 9.0,
        tol,
    )?;
    let c = cbv_pair(&g, &bp, &spec_at(&g, &bp, "p1")?)?;
    close("three-state CBV 1", c[0], 0.25, tol)?;
    close("three-state CBV 2", c[1], 0.5, tol)?;

    let g = maxmargin_worse();
    let bp = mw_blueprint(&g);
    let spec = spec_at(&g, &bp, "p1")?;
    let c = cbv_pair(&g, &bp, &spec)?;
    close("maxmargin_worse CBV 1", c[0], 0.125, tol)?;
    close("maxmargin_worse CBV 2", c[1], 0.25, tol)?;
    let mm = build_gadget(&g, &spec, GadgetKind::MaxMargin).map_err(e)?;
    let (s, _) = solve_nash(&mm.game, Player::P1).map_err(e)?;
    close(
        "maxmargin_worse pi(s1.2, H)",
        s.get("s1.2").ok_or("no s1.2")?[0],
        0.5,
        tol,
    )?;
    Ok("fig1, three-state and maxmargin_worse values exact; fig1 max-margin NE unique on a 1/200 grid".into())
}

fn criterion_2() -> Outcome {
    let g = fig1_game();
    let bp = fig1_blueprint(&g);
    let spec = spec_at(&g, &bp, "p1")?;
    let gadget = build_gadget(&g, &spec, GadgetKind::Resolving).map_err(e)?;
    let gain = gadget_gain(&gadget, bp.get(Player::P1)).map_err(e)?;
    check(gain <= 1e-9, || format!("blueprint gadget gain {gain}"))?;
    let prior = Prior::uniform(&gadget);
    let r = refine_to_ggse(&gadget, Some(&prior), Schedule::default()).map_err(e)?;
    let f_lp = r.strategy.get("s1").ok_or("no s1")?[0];
    check(r.converged && f_lp <= 1e-9, || {
        format!("LP refinement sigma(F) = {f_lp}, converged {}", r.converged)
    })?;
    let res = run_cfr(
        &gadget.game,
        &CfrConfig::cfr_plus(5000).with_prior(prior, 1e-3),
    )
    .map_err(e)?;
    let f_cfr = res.average.get(Player::P1).get("s1").ok_or("no s1")?[0];
    check(f_cfr <= 1e-3, || format!("CFR+ sigma(F) = {f_cfr}"))?;
    Ok(format!(
        "blueprint gain {gain:.1e}; GGSE sigma(F): LP {f_lp:.1e} (eps {:.0e}), CFR+ {f_cfr:.1e}",
        r.epsilon
    ))
}

fn criterion_3() -> Outcome {
    let g = seq_rps();
    let bp = rock_blueprint(&g);
    let spec = spec_at(&g, &bp, "p1")?;
    let blueprint = bp.get(Player::P1);
    for kind in [GadgetKind::Resolving, GadgetKind::MaxMargin] {
        let gadget = build_gadget(&g, &spec, kind).map_err(e)?;
        for prior in PriorKind::ALL {
            let sol =
                solve_gadget(&gadget, Some(&spec), prior, &SolverKind::Lp, 1e-3).map_err(e)?;
            let r = sol.strategy.get("s1").ok_or("no s1")?[0];
            check(r >= 1.0 - 1e-6, || format!("{kind}/{prior}: P(R) = {r}"))?;
            let combined = combine(blueprint, &sol.strategy, &sol.mapping).map_err(e)?;
            close(
                &format!("{kind}/{prior} combined exploitability"),
                exploitability(&g, &combined).map_err(e)?,
                1.0,
                1e-6,
            )?;
        }
    }
    let (cont, _) = solve_continuation(&g, blueprint, &["p1"], Player::P1).map_err(e)?;
    let x = exploitability(&g, &cont).map_err(e)?;
    check(x <= 1e-6, || {
        format!("optimal continuation exploitability {x}")
    })?;
    Ok(format!(
        "both gadgets stay on R under every prior (exploitability 1); continuation {x:.1e}"
    ))
}

fn criterion_4() -> Outcome {
    let g = maxmargin_worse();
    let bp = mw_blueprint(&g);
    let spec = spec_at(&g, &bp, "p1")?;
    let resolving = build_gadget(&g, &spec, GadgetKind::Resolving).map_err(e)?;
    let maxmargin = build_gadget(&g, &spec, GadgetKind::MaxMargin).map_err(e)?;
    let (ne, _) = solve_nash(&g, Player::P1).map_err(e)?;
    let gr = gadget_gain(&resolving, &ne).map_err(e)?;
    let gm = gadget_gain(&maxmargin, &ne).map_err(e)?;
    check(gr <= 1e-9, || {
        format!("NE fails the resolving test: gain {gr}")
    })?;
    check(gm > 1e-6, || {
        format!("NE passes the max-margin test: gain {gm}")
    })?;

    let sol = solve_gadget(
        &resolving,
        Some(&spec),
        PriorKind::Blueprint,
        &SolverKind::Lp,
        1e-3,
    )
    .map_err(e)?;
    let blueprint = bp.get(Player::P1);
    let resolved = exploitability(
        &g,
        &combine(blueprint, &sol.strategy, &sol.mapping).map_err(e)?,
    )
    .map_err(e)?;

    // every max-margin optimum on a grid, plus the LP ones under each prior
    let n = 300;
    let mut best_mm = f64::INFINITY;
    let mut found = 0;
    for a in 0..=n {
        for b in 0..=n {
            let (pa, pb) = (a as f64 / n as f64, b as f64 / n as f64);
            let s = strategy(
                Player::P1,
                &[("s1.1", &[pa, 1.0 - pa]), ("s1.2", &[pb, 1.0 - pb])],
            );
            if gadget_gain(&maxmargin, &s).map_err(e)? <= 1e-9 {
                found += 1;
                best_mm = best_mm.min(exploitability(&g, &s).map_err(e)?);
            }
        }
    }
    for prior in PriorKind::ALL {
        let s = solve_gadget(&maxmargin, Some(&spec), prior, &SolverKind::Lp, 1e-3).map_err(e)?;
        let x = exploitability(&g, &combine(blueprint, &s.strategy, &s.mapping).map_err(e)?)
            .map_err(e)?;
        best_mm = best_mm.min(x);
    }
    check(found > 0, || "no max-margin optimum on the grid".into())?;
    check(best_mm - resolved >= 0.01, || {
        format!("resolving GGSE {resolved} vs best max-margin {best_mm}: margin below 0.01")
    })?;
    Ok(format!(
        "NE gains: resolving {gr:.1e}, max-margin {gm}; resolving GGSE {resolved:.2e} < best of {found} max-margin optima {best_mm:.4}"
    ))
}

fn sweep_config(game: GameSpec) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(game);
    c.blueprints = BlueprintSource::Dirichlet { count: 20, seed: 0 };
    c.techniques = vec![Technique::Unsafe, Technique::Resolve, Technique::MaxMargin];
    c
}

const SWEEP_GAMES: [GameSpec; 2] = [GameSpec::Goofspiel(5), GameSpec::LiarsDice(1, 4)];

fn criterion_5(rows: &[ResultRow]) -> Outcome {
    let mut checked = 0;
    let mut worst = f64::NEG_INFINITY;
    for r in rows.iter().filter(|r| r.technique != Technique::Unsafe) {
        if let Some(err) = &r.error {
            return Err(format!(
                "{} {} {}/{}: {err}",
                r.game, r.blueprint_id, r.technique, r.prior
            ));
        }
        let excess = r.combined_expl - r.blueprint_expl;
        worst = worst.max(excess);
        check(excess <= 1e-6 && r.combined_expl >= -1e-9, || {
            format!(
                "{} {} {}/{}: combined {} > blueprint {}",
                r.game, r.blueprint_id, r.technique, r.prior, r.combined_expl, r.blueprint_expl
            )
        })?;
        checked += 1;
    }
    check(checked == 2 * 20 * 2 * 3, || {
        format!("expected 240 safe rows, got {checked}")
    })?;
    Ok(format!(
        "{checked} resolving/max-margin rows, max(combined - blueprint) = {worst:.2e}"
    ))
}

fn criterion_6() -> Outcome {
    let mut games: Vec<(String, Game)> = Vec::new();
    let fixtures: [(Game, StrategyProfile); 4] = {
        let (a, b, c, d) = (
            fig1_game(),
            equilibria_example(),
            seq_rps(),
            maxmargin_worse(),
        );
        let (pa, pb, pc, pd) = (
            fig1_blueprint(&a),
            fig5_blueprint(&b),
            rock_blueprint(&c),
            mw_blueprint(&d),
        );
        [(a, pa), (b, pb), (c, pc), (d, pd)]
    };
    for (g, bp) in &fixtures {
        games.push((g.name().to_string(), g.clone()));
        let spec = spec_at(g, bp, "p1")?;
        for kind in [
            GadgetKind::Resolving,
            GadgetKind::MaxMargin,
            GadgetKind::Unsafe,
        ] {
            games.push((
                format!("{} {kind}", g.name()),
                build_gadget(g, &spec, kind).map_err(e)?.game,
            ));
        }
    }
    for gs in SWEEP_GAMES {
        let g = gs.build().map_err(e)?;
        let bp = make_blueprints(&g, &BlueprintSource::Dirichlet { count: 1, seed: 0 })
            .map_err(e)?
            .remove(0);
        for ps in enumerate_subgames(&g, gs, Selector::Depth(1)).map_err(e)? {
            let spec = spec_at(&g, &bp.profile, &ps)?;
            for kind in [
                GadgetKind::Resolving,
                GadgetKind::MaxMargin,
                GadgetKind::Unsafe,
            ] {
                let gadget = build_gadget(&g, &spec, kind).map_err(e)?;
                games.push((format!("{gs} {ps} {kind}"), gadget.game));
            }
        }
    }
    let mut worst: f64 = 0.0;
    for (name, g) in &games {
        let lp = equilibrium_value(g).map_err(e)?;
        let cfg = CfrConfig {
            trace: false,
            ..CfrConfig::cfr_plus(5000)
        };
        let avg = run_cfr(g, &cfg).map_err(e)?.average;
        let cfr = expected_utility(g, &avg).map_err(e)?;
        worst = worst.max((lp - cfr).abs());
        close(&format!("{name}: CFR+ value"), cfr, lp, 1e-3)?;
    }
    Ok(format!(
        "{} games and gadgets, max |LP - CFR+| = {worst:.2e}",
        games.len()
    ))
}

fn criterion_7(rows: &[ResultRow]) -> Outcome {
    let mm: Vec<&ResultRow> = rows
        .iter()
        .filter(|r| r.technique == Technique::MaxMargin)
        .collect();
    let worst = mm
        .iter()
        .map(|r| r.resolving_gain)
        .fold(f64::NEG_INFINITY, f64::max);
    for r in &mm {
        check(r.resolving_gain <= 1e-6, || {
            format!(
                "{} {} {}: resolving gain {}",
                r.game, r.blueprint_id, r.prior, r.resolving_gain
            )
        })?;
    }
    check(mm.len() == 120, || {
        format!("expected 120 max-margin rows, got {}", mm.len())
    })?;
    Ok(format!(
        "{} max-margin rows (all subgames each), worst resolving-gadget gain {worst:.2e}",
        mm.len()
    ))
}

fn criterion_8() -> Outcome {
    let g = equilibria_example();
    let bp = fig5_blueprint(&g);
    let spec = spec_at(&g, &bp, "p1")?;
    let gadget: GadgetGame = build_gadget(&g, &spec, GadgetKind::Resolving).map_err(e)?;
    let mut priors = vec![Prior::uniform(&gadget)];
    priors.extend(make_prior(PriorKind::Blueprint, &gadget, Some(&spec), DEFAULT_CLIP).map_err(e)?);
    for base in [CfrConfig::vanilla(1000), CfrConfig::cfr_plus(1000)] {
        for prior in &priors {
            let mut plain = Cfr::new(&gadget.game, &base).map_err(e)?;
            let mut perturbed =
                Cfr::new(&gadget.game, &base.clone().with_prior(prior.clone(), 0.0)).map_err(e)?;
            for _ in 0..1000 {
                plain.step();
                perturbed.step();
            }
            check(plain.state == perturbed.state, || {
                format!("{} prior, plus={}: tables differ", prior.kind, base.plus)
            })?;
        }
    }
    Ok("regret and average tables bit-identical after 1000 iterations (vanilla and CFR+, two priors)".into())
}

fn criterion_9() -> Outcome {
    let mut c = ExperimentConfig::parse(
        "game = leduc\nblueprints = cfr-checkpoints\ncount = 25\nselector = leduc-flop\n\
         technique = resolve\nprior = none, blueprint\nsolver = cfr\niters = 5000\neps = 1e-3\n",
    )
    .map_err(e)?;
    c.timing = false;
    let rows = run_experiment(&c).map_err(e)?;
    write_artifact("leduc_flop.csv", &rows_csv(&rows));
    let col = |p: PriorKind| -> Vec<f64> {
        let mut v: Vec<&ResultRow> = rows.iter().filter(|r| r.prior == p).collect();
        v.sort_by(|a, b| a.blueprint_id.cmp(&b.blueprint_id));
        v.iter().map(|r| r.combined_expl).collect()
    };
    let (none, bp) = (col(PriorKind::None), col(PriorKind::Blueprint));
    check(none.len() == 25 && bp.len() == 25, || {
        format!("rows: {} / {}", none.len(), bp.len())
    })?;
    check(none.iter().chain(&bp).all(|x| x.is_finite()), || {
        "non-finite exploitability".into()
    })?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (m_none, m_bp) = (mean(&none), mean(&bp));
    let reduction = 1.0 - m_bp / m_none;
    let t = paired_ttest(&bp, &none).map_err(e)?;
    let blueprint_mean = mean(
        &rows
            .iter()
            .filter(|r| r.prior == PriorKind::None)
            .map(|r| r.blueprint_expl)
            .collect::<Vec<_>>(),
    );
    let detail = format!(
        "mean blueprint {blueprint_mean:.4}, resolve/none {m_none:.4}, resolve/blueprint {m_bp:.4} ({:.1}% lower, paired t {:.2}, p {:.2e})",
        100.0 * reduction,
        t.t,
        t.p
    );
    check(m_bp <= 0.75 * m_none, || detail.clone())?;
    Ok(detail)
}

fn criterion_10(rows: &[ResultRow]) -> Outcome {
    let mut unsafe_worse = Vec::new();
    let mut closest = f64::NEG_INFINITY;
    let mut text = String::new();
    for gs in SWEEP_GAMES {
        let name = gs.to_string();
        let own: Vec<ResultRow> = rows.iter().filter(|r| r.game == name).cloned().collect();
        let diff = unsafe_vs_blueprintprior_diff(&own).map_err(e)?;
        for d in &diff {
            check(d.resolve_minus_blueprint() <= 1e-6, || {
                format!(
                    "{name} {}: resolve+blueprint prior exceeds blueprint by {}",
                    d.blueprint_id,
                    d.resolve_minus_blueprint()
                )
            })?;
            closest = closest.max(d.unsafe_minus_blueprint());
            if d.unsafe_minus_blueprint() > 1e-6 {
                unsafe_worse.push(format!("{name} {}", d.blueprint_id));
            }
        }
        text.push_str(&diff_csv(&diff));
    }
    let path = write_artifact("unsafe_vs_blueprint_prior.csv", &text);
    if unsafe_worse.is_empty() {
        Ok(format!(
            "degraded: unsafe never exceeded the blueprint (max unsafe - blueprint {closest:.3}); safety half holds; table at {path}"
        ))
    } else {
        Ok(format!(
            "resolve+blueprint prior never above blueprint; unsafe above it on {} blueprint(s), e.g. {}; table at {path}",
            unsafe_worse.len(),
            unsafe_worse[0]
        ))
    }
}

fn write_artifact(name: &str, text: &str) -> String {
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let _ = std::fs::create_dir_all(&dir);
    let path = dir.join(name);
    let _ = std::fs::write(&path, text);
    path.display().to_string()
}

struct Report {
    failures: usize,
}

impl Report {
    fn run(&mut self, id: u32, budget: Duration, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if took > budget => {
                Err(format!("{msg}; took {took:.1?} over the {budget:?} budget"))
            }
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS criterion {id}: {msg} [{took:.2?}]"),
            Err(msg) => {
                self.failures += 1;
                println!("FAIL criterion {id}: {msg} [{took:.2?}]");
            }
        }
    }
}

fn main() {
    let secs = Duration::from_secs;
    let mut report = Report { failures: 0 };
    report.run(1, secs(1), criterion_1);
    report.run(2, secs(5), criterion_2);
    report.run(3, secs(2), criterion_3);
    report.run(4, secs(5), criterion_4);

    let start = Instant::now();
    let sweep: Result<Vec<ResultRow>, String> = SWEEP_GAMES
        .iter()
        .map(|&g| run_experiment(&sweep_config(g)).map_err(e))
        .collect::<Result<Vec<_>, _>>()
        .map(|v| v.concat());
    let sweep_time = start.elapsed();
    if let Ok(rows) = &sweep {
        write_artifact("sweep.csv", &rows_csv(rows));
    }
    report.run(5, secs(600).saturating_sub(sweep_time), || {
        sweep
            .as_deref()
            .map_err(Clone::clone)
            .and_then(|rows| criterion_5(rows).map(|m| format!("{m}; sweep {sweep_time:.1?}")))
    });
    report.run(6, secs(120), criterion_6);
    report.run(7, secs(600), || {
        sweep.as_deref().map_err(Clone::clone).and_then(criterion_7)
    });
    report.run(8, secs(5), criterion_8);
    report.run(9, secs(3600), criterion_9);
    report.run(10, secs(600), || {
        sweep
            .as_deref()
            .map_err(Clone::clone)
            .and_then(criterion_10)
    });
    if report.failures > 0 {
        println!("{} criteria failed", report.failures);
        std::process::exit(1);
    }
}
