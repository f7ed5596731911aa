use super::*;
use crate::games::*;
use crate::sqf::solve_nash;
use approx::assert_abs_diff_eq;

fn config(game: GameSpec, text: &str) -> ExperimentConfig {
    ExperimentConfig::parse(&format!("game = {game}\n{text}")).unwrap()
}

fn three_state_blueprint(g: &Game) -> Blueprint {
    let mut p = StrategyProfile::uniform(g);
    p.get_mut(Player::P1).set("s1.1", vec![0.0, 1.0]);
    p.get_mut(Player::P1).set("s1.2", vec![0.5, 0.5]);
    Blueprint {
        id: "fixed".into(),
        profile: p,
    }
}

#[test]
fn config_parsing() {
    let c = config(
        GameSpec::Goofspiel(5),
        "blueprints = dirichlet\ncount = 3\nseed = 7 # comment\ntechnique = resolve, unsafe\nprior = blueprint\nsolver = cfr\niters = 200\neps = 0.01\n",
    );
    assert_eq!(
        c.blueprints,
        BlueprintSource::Dirichlet { count: 3, seed: 7 }
    );
    assert_eq!(c.techniques, vec![Technique::Resolve, Technique::Unsafe]);
    assert_eq!(c.priors, vec![PriorKind::Blueprint]);
    assert_eq!(c.solver, SolverKind::Cfr { iterations: 200 });
    assert_eq!(c.epsilon, 0.01);
    let c = config(
        GameSpec::Leduc,
        "blueprints = cfr-checkpoints\nselector = leduc-flop\n",
    );
    let BlueprintSource::CfrCheckpoints { iterations } = &c.blueprints else {
        panic!("checkpoints expected")
    };
    assert_eq!(iterations.len(), 25);
    assert_eq!(*iterations.last().unwrap(), 1 << 14);
    assert_eq!(
        "cfr+300".parse::<SolverKind>().unwrap(),
        SolverKind::Cfr { iterations: 300 }
    );

    assert!(ExperimentConfig::parse("depth = 1").is_err());
    assert!(ExperimentConfig::parse("game = fig1\ntechnique =").is_err());
    assert!(ExperimentConfig::parse("game = fig1\nsolver = cfr+0").is_err());
    assert!(ExperimentConfig::parse("game = fig1\nbogus = 1").is_err());
    assert!(ExperimentConfig::parse("game = fig1\nno equals sign").is_err());
}

#[test]
fn row_contract_and_csv_round_trip() {
    let c = config(
        GameSpec::SeqRps,
        "technique = unsafe, resolve\nprior = uniform\n",
    );
    let rows = run_experiment(&c).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.subgames == 1 && r.error.is_none()));
    let csv = rows_csv(&rows);
    assert!(csv.starts_with(CSV_HEADER));
    let back = parse_rows(&csv).unwrap();
    assert_eq!(rows_csv(&back), csv);
}

#[test]
fn identical_configs_give_identical_csv() {
    let c = config(
        GameSpec::EquilibriaExample,
        "depth = 0\ncount = 3\nseed = 11\ntechnique = resolve, maxmargin, unsafe, optimal-continuation\n",
    );
    let a = rows_csv(&run_experiment(&c).unwrap());
    let b = rows_csv(&run_experiment(&c).unwrap());
    assert_eq!(a, b);
    // unsafe and optimal continuation have no prior; the others have three
    assert_eq!(a.lines().count(), 1 + 3 * (3 + 3 + 1 + 1));
}

#[test]
fn resolving_never_hurts_with_lp() {
    for game in [GameSpec::EquilibriaExample, GameSpec::MaxmarginWorse] {
        let c = config(
            game,
            "depth = 0\ncount = 6\nseed = 3\ntechnique = resolve, maxmargin\n",
        );
        for r in run_experiment(&c).unwrap() {
            assert!(r.combined_expl >= -1e-9);
            assert!(r.combined_expl <= r.blueprint_expl + 1e-6, "{r:?}");
        }
    }
}

#[test]
fn optimal_continuation_fixes_always_rock() {
    let g = seq_rps();
    let mut p = StrategyProfile::uniform(&g);
    p.get_mut(Player::P1).set("s1", vec![1.0, 0.0, 0.0]);
    let bp = Blueprint {
        id: "rock".into(),
        profile: p,
    };
    let c = config(
        GameSpec::SeqRps,
        "technique = optimal-continuation, resolve\nprior = blueprint\n",
    );
    let rows = run_blueprint(&c, &g, &["p1".to_string()], &bp).unwrap();
    assert_abs_diff_eq!(rows[0].blueprint_expl, 1.0, epsilon = 1e-9);
    let oc = rows
        .iter()
        .find(|r| r.technique == Technique::OptimalContinuation)
        .unwrap();
    assert_abs_diff_eq!(oc.combined_expl, 0.0, epsilon = 1e-9);
    let rs = rows
        .iter()
        .find(|r| r.technique == Technique::Resolve)
        .unwrap();
    assert_abs_diff_eq!(rs.combined_expl, 1.0, epsilon = 1e-6);
}

#[test]
fn audit_sides_on_three_state_game() {
    let g = equilibria_example();
    let bp = three_state_blueprint(&g);
    let spec = extract_subgame(&g, "p1", &bp.profile, Player::P1).unwrap();
    let blueprint = bp.profile.get(Player::P1);
    let (ne, _) = solve_nash(&g, Player::P1).unwrap();
    let sides = theorem_sides(&g, &spec, blueprint, &ne).unwrap();
    assert_abs_diff_eq!(sides.lhs, 4.0 / 9.0, epsilon = 1e-9);
    assert!(sides.rhs <= sides.lhs + 1e-9);
    let zero = theorem_sides(&g, &spec, blueprint, blueprint).unwrap();
    assert_abs_diff_eq!(zero.lhs, 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(zero.rhs, 0.0, epsilon = 1e-12);

    let c = config(
        GameSpec::EquilibriaExample,
        "depth = 0\ntechnique = resolve, maxmargin, unsafe\n",
    );
    let report = safety_audit(&c, &g, &["p1".to_string()], &[bp]).unwrap();
    assert_eq!(report.entries.len(), 7);
    assert!(report.violations(1e-6).is_empty(), "{}", report.to_csv());
}

#[test]
fn maxmargin_solution_passes_resolving_test() {
    let g = maxmargin_worse();
    let mut p = StrategyProfile::uniform(&g);
    p.get_mut(Player::P1).set("s1.1", vec![0.0, 1.0]);
    p.get_mut(Player::P1).set("s1.2", vec![0.25, 0.75]);
    let spec = extract_subgame(&g, "p1", &p, Player::P1).unwrap();
    let cbvs = blueprint_cbvs(&g, p.get(Player::P1), &spec).unwrap();
    let r = build_resolving(&g, &spec, &cbvs).unwrap();
    let m = build_maxmargin(&g, &spec, &cbvs).unwrap();
    let sol = solve_gadget(&m, Some(&spec), PriorKind::None, &SolverKind::Lp, 1e-3).unwrap();
    assert!(gadget_gain(&r, &sol.strategy).unwrap() <= 1e-6);
    // the blueprint itself is also a resolving equilibrium
    assert!(gadget_gain(&r, p.get(Player::P1)).unwrap() <= 1e-9);
}

#[test]
fn ttest_examples() {
    let a: Vec<f64> = (0..25).map(|k| k as f64 * 0.1).collect();
    let t = paired_ttest(&a, &a).unwrap();
    assert!(t.degenerate);
    assert_eq!(t.p, 1.0);
    let b: Vec<f64> = a.iter().map(|x| x - 1.0).collect();
    let t = paired_ttest(&a, &b).unwrap();
    assert!(t.degenerate && t.p == 0.0 && t.mean_diff > 0.0);
    // non-constant shift around +1
    let c: Vec<f64> = a
        .iter()
        .enumerate()
        .map(|(k, x)| x - 1.0 + 0.01 * (k % 3) as f64)
        .collect();
    let t = paired_ttest(&a, &c).unwrap();
    assert!(!t.degenerate && t.p < 1e-6 && t.t > 0.0);
    assert!(paired_ttest(&[1.0], &[2.0]).is_err());
    assert!(paired_ttest(&[1.0, 2.0], &[2.0]).is_err());
}

#[test]
fn ttest_matches_reference_value() {
    // d = [1, 2, 3, 4]: mean 2.5, sd 1.2910, t = 3.8730, df 3, p = 0.030466
    let t = paired_ttest(&[1.0, 2.0, 3.0, 4.0], &[0.0; 4]).unwrap();
    assert_abs_diff_eq!(t.t, 3.872983346207417, epsilon = 1e-12);
    assert_abs_diff_eq!(t.p, 0.030466, epsilon = 1e-5);
}

fn row(id: &str, bp: f64, technique: Technique, prior: PriorKind, combined: f64) -> ResultRow {
    ResultRow {
        game: "g".into(),
        blueprint_id: id.into(),
        blueprint_expl: bp,
        technique,
        prior,
        solver: "lp".into(),
        subgames: 1,
        combined_expl: combined,
        wall_ms: 0,
        gadget_expl: 0.0,
        per_subgame: Vec::new(),
        resolving_gain: f64::NAN,
        error: None,
    }
}

#[test]
fn diff_table() {
    let rows = vec![
        row("b", 0.9, Technique::Unsafe, PriorKind::None, 0.5),
        row("b", 0.9, Technique::Resolve, PriorKind::Blueprint, 0.5),
        row("a", 0.3, Technique::Unsafe, PriorKind::None, 0.4),
        row("a", 0.3, Technique::Resolve, PriorKind::Blueprint, 0.2),
    ];
    let d = unsafe_vs_blueprintprior_diff(&rows).unwrap();
    assert_eq!(d[0].blueprint_id, "a");
    assert_eq!(d[1].unsafe_minus_resolve(), 0.0);
    assert_abs_diff_eq!(d[0].unsafe_minus_blueprint(), 0.1, epsilon = 1e-12);
    assert_eq!(diff_csv(&d).lines().count(), 3);
    assert!(unsafe_vs_blueprintprior_diff(&rows[..3]).is_err());
}
