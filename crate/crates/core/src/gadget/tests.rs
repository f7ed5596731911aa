use super::*;
use crate::games::*;
use approx::assert_abs_diff_eq;

fn fig1_blueprint(g: &Game) -> StrategyProfile {
    let mut p = StrategyProfile::uniform(g);
    p.get_mut(Player::P1).set("s1", vec![0.5, 0.5, 0.0]);
    p
}

fn three_state_blueprint(g: &Game, h2: f64) -> StrategyProfile {
    let mut p = StrategyProfile::uniform(g);
    p.get_mut(Player::P1).set("s1.1", vec![0.0, 1.0]);
    p.get_mut(Player::P1).set("s1.2", vec![h2, 1.0 - h2]);
    p
}

fn rps_blueprint(g: &Game) -> StrategyProfile {
    let mut p = StrategyProfile::uniform(g);
    p.get_mut(Player::P1).set("s1", vec![1.0, 0.0, 0.0]);
    p
}

fn gadgets(g: &Game, bp: &StrategyProfile, public: &str) -> (SubgameSpec, GadgetGame, GadgetGame) {
    let spec = extract_subgame(g, public, bp, Player::P1).unwrap();
    let r = build_gadget(g, &spec, GadgetKind::Resolving).unwrap();
    let m = build_gadget(g, &spec, GadgetKind::MaxMargin).unwrap();
    (spec, r, m)
}

#[test]
fn fig1_spec_and_values() {
    let g = fig1_game();
    let bp = fig1_blueprint(&g);
    let spec = extract_subgame(&g, "p1", &bp, Player::P1).unwrap();
    assert_eq!(spec.roots.len(), 2);
    assert_eq!(spec.weights, vec![1.0, 1.0]);
    let cbv = blueprint_cbvs(&g, bp.get(Player::P1), &spec).unwrap();
    assert_abs_diff_eq!(cbv.get("s2.H").unwrap(), 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(cbv.get("s2.T").unwrap(), -0.5, epsilon = 1e-12);
}

#[test]
fn golden_gadgets() {
    let g = fig1_game();
    let (_, r, m) = gadgets(&g, &fig1_blueprint(&g), "p1");
    assert_eq!(r.game, fig1_resolving());
    assert_eq!(m.game, fig1_maxmargin());
    assert_eq!(r.aux_infosets, vec!["G:s2.H", "G:s2.T"]);

    let g = equilibria_example();
    let (spec, r, m) = gadgets(&g, &three_state_blueprint(&g, 0.5), "p1");
    assert_eq!(spec.roots.len(), 3);
    assert_eq!(r.game, equilibria_example_resolving());
    assert_eq!(m.game, equilibria_example_maxmargin());
    assert_eq!(r.aux_infosets, vec!["G:vs2.1", "G:vs2.2"]);

    let g = maxmargin_worse();
    let (_, r, m) = gadgets(&g, &three_state_blueprint(&g, 0.25), "p1");
    assert_eq!(r.game, maxmargin_worse_resolving());
    assert_eq!(m.game, maxmargin_worse_maxmargin());

    let g = seq_rps();
    let (_, r, m) = gadgets(&g, &rps_blueprint(&g), "p1");
    assert_eq!(r.game, seq_rps_resolving());
    assert_eq!(m.game, seq_rps_maxmargin());
}

#[test]
fn text_round_trip_keeps_header() {
    let g = equilibria_example();
    let (_, r, _) = gadgets(&g, &three_state_blueprint(&g, 0.5), "p1");
    let text = r.to_text();
    assert!(text.contains("gadget resolving resolver 1"));
    let back = GadgetGame::from_text(&text).unwrap();
    assert_eq!(back.game, r.game);
    assert_eq!(back.aux_infosets, r.aux_infosets);
    assert_eq!(back.cbvs, r.cbvs);
    assert_eq!(back.aux_targets, r.aux_targets);
}

#[test]
fn unsafe_entry_follows_full_reach() {
    let g = fig1_game();
    let spec = extract_subgame(&g, "p1", &fig1_blueprint(&g), Player::P1).unwrap();
    let u = build_unsafe(&g, &spec).unwrap();
    let NodeKind::Chance { outcomes } = u.game.node(u.game.root()) else {
        panic!("chance root expected")
    };
    assert_eq!(
        outcomes.iter().map(|o| o.1).collect::<Vec<_>>(),
        vec![0.5, 0.5]
    );

    let mut bp = fig1_blueprint(&g);
    bp.get_mut(Player::P2).set("s2", vec![1.0, 0.0]);
    let spec = extract_subgame(&g, "p1", &bp, Player::P1).unwrap();
    let u = build_unsafe(&g, &spec).unwrap();
    assert!(matches!(
        u.game.node(u.game.root()),
        NodeKind::Decision { .. }
    ));
}

#[test]
fn unreachable_subgame_is_an_error() {
    let g = equilibria_example();
    let mut bp = StrategyProfile::uniform(&g);
    bp.get_mut(Player::P1).set("s1.1", vec![0.0, 1.0]);
    // P2's public state p2 is reached only through P1 moves; zero them all
    bp.get_mut(Player::P1).set("s1.2", vec![0.0, 1.0]);
    let spec = extract_subgame(&g, "p2", &bp, Player::P2);
    assert!(spec.is_ok());
    let table = bp.table(&g).unwrap();
    assert!(!table.is_empty());
    // chance reaches every P1 root, so P1 as resolver at p1 always has mass;
    // a game-level zero comes from a resolver with zero reach everywhere
    let mut bp2 = bp.clone();
    bp2.get_mut(Player::P2).set("s2.1", vec![0.0, 1.0]);
    assert!(extract_subgame(&g, "nonexistent", &bp2, Player::P1).is_err());
}

#[test]
fn priors() {
    let g = fig1_game();
    let bp = fig1_blueprint(&g);
    let (spec, r, m) = gadgets(&g, &bp, "p1");
    let u = make_prior(PriorKind::Uniform, &r, None, DEFAULT_CLIP)
        .unwrap()
        .unwrap();
    assert_eq!(u.get("G:s2.H").unwrap(), &[0.5, 0.5]);
    assert!(make_prior(PriorKind::None, &r, None, DEFAULT_CLIP)
        .unwrap()
        .is_none());
    let b = make_prior(PriorKind::Blueprint, &r, Some(&spec), DEFAULT_CLIP)
        .unwrap()
        .unwrap();
    // opponent reach 1/2 on each branch; Terminate gets the clip mass
    assert_abs_diff_eq!(b.get("G:s2.H").unwrap()[0], 0.001 / 0.501, epsilon = 1e-15);
    assert!(b.is_valid());
    let bm = make_prior(PriorKind::Blueprint, &m, Some(&spec), DEFAULT_CLIP)
        .unwrap()
        .unwrap();
    assert_eq!(bm.get("G:p1").unwrap(), &[0.5, 0.5]);

    let c = prior::clipped(&[0.8, 0.0], 1e-3);
    assert_abs_diff_eq!(c[0], 0.8 / 0.801, epsilon = 1e-15);
    assert_abs_diff_eq!(c[1], 0.001 / 0.801, epsilon = 1e-15);
    assert_eq!(prior::clipped(&[0.0, 0.0, 0.0], 1e-3), vec![1.0 / 3.0; 3]);
}

#[test]
fn tremble_on_aux_sequences() {
    let g = fig1_game();
    let (_, r, _) = gadgets(&g, &fig1_blueprint(&g), "p1");
    let u = Prior::uniform(&r);
    let l = r.tremble(&u);
    assert_eq!(l.len(), 4);
    assert!(l.iter().all(|&(_, w)| w == 0.5));
}

#[test]
fn margins_of_fig1() {
    let g = fig1_game();
    let bp = fig1_blueprint(&g);
    let (spec, _, m) = gadgets(&g, &bp, "p1");
    let cbv = blueprint_cbvs(&g, bp.get(Player::P1), &spec).unwrap();
    let mut sol = BehavioralStrategy::new(Player::P1);
    sol.set("s1", vec![0.0, 0.75, 0.25]);
    let combined = combine_solution(bp.get(Player::P1), &m, &sol).unwrap();
    let mg = margins(&g, &spec, &combined, &cbv).unwrap();
    assert_abs_diff_eq!(mg[0].1, 0.75, epsilon = 1e-12);
    assert_abs_diff_eq!(mg[1].1, 0.75, epsilon = 1e-12);
    let mg0 = margins(&g, &spec, bp.get(Player::P1), &cbv).unwrap();
    assert!(mg0.iter().all(|(_, v)| v.abs() < 1e-12));
}

#[test]
fn back_map_is_identity_on_resolver_infosets() {
    let g = equilibria_example();
    let (_, r, _) = gadgets(&g, &three_state_blueprint(&g, 0.5), "p1");
    let keys: Vec<&String> = r.back_map.keys().collect();
    assert_eq!(keys, vec!["s1.1", "s1.2"]);
    let s = BehavioralStrategy::uniform(&r.game, Player::P1);
    let (sub, map) = extract_solution(&r, &s).unwrap();
    assert_eq!(sub.len(), 2);
    assert_eq!(map.len(), 2);
    let opp = BehavioralStrategy::uniform(&r.game, Player::P2);
    assert!(extract_solution(&r, &opp).is_err());
}
