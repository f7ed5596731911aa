use std::path::PathBuf;
use std::process::{Command, Output};

fn ggse(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_ggse"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "ggse {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(args: &[&str]) -> String {
    String::from_utf8(ggse(args).stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"))
        .join("cli")
        .join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn subgames_of_goofspiel() {
    let text = stdout(&["subgames", "--game", "goofspiel-5", "--depth", "1"]);
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn experiment_is_deterministic_and_feeds_diff_and_ttest() {
    let dir = scratch("experiment");
    let config = dir.join("run.cfg");
    std::fs::write(
        &config,
        "game = equilibria_example\ndepth = 0\nblueprints = dirichlet\ncount = 4\nseed = 5\n\
         technique = unsafe, resolve\nprior = none, blueprint\n",
    )
    .unwrap();
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    for out in [&a, &b] {
        ggse(&[
            "experiment",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.starts_with(
        "game,blueprint_id,blueprint_expl,technique,prior,solver,subgames,combined_expl,wall_ms\n"
    ));
    assert_eq!(text.lines().count(), 1 + 4 * 3);

    let diff = stdout(&["diff", "--input", a.to_str().unwrap()]);
    assert_eq!(diff.lines().count(), 5);
    let t = stdout(&[
        "ttest",
        "--input",
        a.to_str().unwrap(),
        "--a",
        "resolve/blueprint",
        "--b",
        "resolve/none",
    ]);
    assert!(t.starts_with("n,mean_diff,t,p,degenerate\n4,"));
}

#[test]
fn flags_override_config_file() {
    let dir = scratch("override");
    let config = dir.join("run.cfg");
    std::fs::write(
        &config,
        "game = seq_rps\ntechnique = resolve\nprior = none\n",
    )
    .unwrap();
    let text = stdout(&[
        "experiment",
        "--config",
        config.to_str().unwrap(),
        "--prior",
        "uniform,blueprint",
    ]);
    assert_eq!(text.lines().count(), 3);
    assert!(text.contains(",resolve,uniform,") && text.contains(",resolve,blueprint,"));
}

#[test]
fn gadget_files_solve_from_disk() {
    let dir = scratch("gadgets");
    ggse(&[
        "subgames",
        "--game",
        "liars-dice-1-3",
        "--depth",
        "1",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with("-resolving.efg"))
        .collect();
    files.sort();
    assert!(!files.is_empty());
    let strategy = stdout(&[
        "solve",
        "--gadget",
        files[0].to_str().unwrap(),
        "--prior",
        "uniform",
    ]);
    assert!(!strategy.trim().is_empty());
    let cfr = stdout(&[
        "solve",
        "--gadget",
        files[0].to_str().unwrap(),
        "--solver",
        "cfr+200",
    ]);
    assert_eq!(strategy.lines().count(), cfr.lines().count());
}

#[test]
fn audit_and_blueprints() {
    let dir = scratch("audit");
    let audit = stdout(&[
        "audit",
        "--game",
        "maxmargin_worse",
        "--depth",
        "0",
        "--count",
        "3",
        "--technique",
        "resolve,maxmargin",
    ]);
    assert_eq!(audit.lines().count(), 1 + 3 * 2 * 3);
    let listing = stdout(&[
        "blueprints",
        "--game",
        "fig1",
        "--count",
        "2",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(listing.lines().count(), 3);
    assert!(dir.join("dir-0-1.p2.txt").exists());
}

#[test]
fn bad_input_is_reported() {
    let out = Command::new(env!("CARGO_BIN_EXE_ggse"))
        .args(["experiment", "--game", "chess"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
