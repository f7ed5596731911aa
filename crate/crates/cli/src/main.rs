use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use ggse::gadget::{build_gadget, extract_subgame, GadgetGame, GadgetKind, PriorKind};
use ggse::games::enumerate_subgames;
use ggse::pipeline::{
    diff_csv, make_blueprints, paired_ttest, parse_rows, rows_csv, run_experiment, safety_audit,
    solve_gadget, unsafe_vs_blueprintprior_diff, ExperimentConfig, ResultRow, SolverKind,
    Technique,
};
use ggse::strategy::exploitability;
use ggse::Player;

#[derive(Parser)]
#[command(name = "ggse", version, about = "Safe subgame solving experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate blueprints and write them as strategy files.
    Blueprints(Common),
    /// List the public states picked by the subgame selector; with `--out`,
    /// also write the gadgets of the first blueprint there.
    Subgames(Common),
    /// Solve a serialized gadget game, or one blueprint's subgames.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Gadget file written by a previous run.
        #[arg(long)]
        gadget: Option<PathBuf>,
    },
    /// Run the configured experiment and write the result CSV.
    Experiment(Common),
    /// Evaluate both sides of the safety inequality per subgame.
    Audit(Common),
    /// Paired t-test between two (technique, prior) columns of a result CSV.
    Ttest {
        #[arg(long)]
        input: PathBuf,
        /// `technique/prior`, e.g. `resolve/blueprint`.
        #[arg(long, default_value = "resolve/blueprint")]
        a: String,
        #[arg(long, default_value = "resolve/none")]
        b: String,
    },
    /// Per-blueprint unsafe vs. resolve+blueprint-prior differences.
    Diff {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Flags shared by the experiment-style subcommands; each maps onto a
/// config-file key and overrides it.
#[derive(Args, Default)]
struct Common {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    game: Option<String>,
    #[arg(long)]
    depth: Option<String>,
    /// `leduc-flop` or a depth.
    #[arg(long)]
    selector: Option<String>,
    /// Comma list of unsafe, resolve, maxmargin, optimal-continuation.
    #[arg(long)]
    technique: Option<String>,
    /// Comma list of none, uniform, blueprint.
    #[arg(long)]
    prior: Option<String>,
    /// `lp` or `cfr`.
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    iters: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// `dirichlet` or `cfr-checkpoints`.
    #[arg(long)]
    blueprints: Option<String>,
    #[arg(long)]
    count: Option<String>,
    #[arg(long)]
    resolver: Option<String>,
    /// Record wall time per row (makes the CSV run-dependent).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let file = match &self.config {
            Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
            None => String::new(),
        };
        let mut text = file;
        let flags = [
            ("game", &self.game),
            ("depth", &self.depth),
            ("selector", &self.selector),
            ("technique", &self.technique),
            ("prior", &self.prior),
            ("solver", &self.solver),
            ("iters", &self.iters),
            ("eps", &self.eps),
            ("seed", &self.seed),
            ("blueprints", &self.blueprints),
            ("count", &self.count),
            ("resolver", &self.resolver),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                text.push_str(&format!("\n{k} = {v}"));
            }
        }
        if self.timing {
            text.push_str("\ntiming = true");
        }
        if let Some(o) = &self.out {
            text.push_str(&format!("\nout = {}", o.display()));
        }
        Ok(ExperimentConfig::parse(&text)?)
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
            info!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn column<'a>(rows: &'a [ResultRow], spec: &str) -> Result<Vec<&'a ResultRow>> {
    let (t, p) = spec.split_once('/').unwrap_or((spec, "none"));
    let technique: Technique = t.parse()?;
    let prior: PriorKind = p.parse()?;
    let mut col: Vec<&ResultRow> = rows
        .iter()
        .filter(|r| r.technique == technique && r.prior == prior)
        .collect();
    col.sort_by(|a, b| (&a.game, &a.blueprint_id).cmp(&(&b.game, &b.blueprint_id)));
    if col.is_empty() {
        bail!("no rows for {spec}");
    }
    Ok(col)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Blueprints(common) => {
            let c = common.config()?;
            let game = c.game.build()?;
            let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("blueprints"));
            fs::create_dir_all(&dir)?;
            println!("blueprint_id,p1_expl,p2_expl");
            for bp in make_blueprints(&game, &c.blueprints)? {
                for player in [Player::P1, Player::P2] {
                    let path = dir.join(format!("{}.p{}.txt", bp.id, player.number()));
                    fs::write(&path, bp.profile.get(player).to_text(&game))?;
                }
                println!(
                    "{},{},{}",
                    bp.id,
                    exploitability(&game, bp.profile.get(Player::P1))?,
                    exploitability(&game, bp.profile.get(Player::P2))?
                );
            }
        }
        Command::Subgames(common) => {
            let c = common.config()?;
            let game = c.game.build()?;
            let labels = enumerate_subgames(&game, c.game, c.selector)?;
            for label in &labels {
                println!("{label}");
            }
            if let Some(dir) = &c.out {
                fs::create_dir_all(dir)?;
                let bp = make_blueprints(&game, &c.blueprints)?.remove(0);
                for (k, label) in labels.iter().enumerate() {
                    let spec = match extract_subgame(&game, label, &bp.profile, c.resolver) {
                        Ok(s) => s,
                        Err(e) => {
                            log::warn!("{label}: {e}");
                            continue;
                        }
                    };
                    for kind in [
                        GadgetKind::Resolving,
                        GadgetKind::MaxMargin,
                        GadgetKind::Unsafe,
                    ] {
                        let g = build_gadget(&game, &spec, kind)?;
                        fs::write(dir.join(format!("{}-{k}-{kind}.efg", bp.id)), g.to_text())?;
                    }
                }
            }
        }
        Command::Solve { common, gadget } => match gadget {
            Some(path) => {
                let text = fs::read_to_string(&path)?;
                let g = GadgetGame::from_text(&text)?;
                let prior: PriorKind = common.prior.as_deref().unwrap_or("none").parse()?;
                let solver: SolverKind = common.solver.as_deref().unwrap_or("lp").parse()?;
                let eps = common
                    .eps
                    .as_deref()
                    .map(str::parse)
                    .transpose()?
                    .unwrap_or(1e-3);
                let sol = solve_gadget(&g, None, prior, &solver, eps)?;
                info!("gap {}", sol.gap);
                emit(common.out.as_deref(), &sol.gadget_strategy.to_text(&g.game))?;
            }
            None => {
                let mut c = common.config()?;
                c.per_subgame = true;
                let out = c.out.clone();
                let rows = run_experiment(&c)?;
                let mut text = rows_csv(&rows);
                text.push_str("\n# per-subgame exploitability (one subgame overwritten)\n");
                for r in &rows {
                    let cells: Vec<String> = r.per_subgame.iter().map(f64::to_string).collect();
                    text.push_str(&format!(
                        "# {} {}/{}: {}\n",
                        r.blueprint_id,
                        r.technique,
                        r.prior,
                        cells.join(" ")
                    ));
                }
                emit(out.as_deref(), &text)?;
            }
        },
        Command::Experiment(common) => {
            let c = common.config()?;
            let rows = run_experiment(&c)?;
            for r in rows.iter().filter(|r| r.error.is_some()) {
                log::warn!(
                    "{} {}/{}: {}",
                    r.blueprint_id,
                    r.technique,
                    r.prior,
                    r.error.as_deref().unwrap_or("")
                );
            }
            emit(c.out.as_deref(), &rows_csv(&rows))?;
        }
        Command::Audit(common) => {
            let c = common.config()?;
            let game = c.game.build()?;
            let publics = enumerate_subgames(&game, c.game, c.selector)?;
            let blueprints = make_blueprints(&game, &c.blueprints)?;
            let report = safety_audit(&c, &game, &publics, &blueprints)?;
            let bad = report.violations(1e-6).len();
            info!(
                "{} entries, min slack {}, {bad} below -1e-6",
                report.entries.len(),
                report.min_slack()
            );
            emit(c.out.as_deref(), &report.to_csv())?;
            if bad > 0 {
                bail!("{bad} audit entries violate the bound");
            }
        }
        Command::Ttest { input, a, b } => {
            let rows = parse_rows(&fs::read_to_string(&input)?)?;
            let ca = column(&rows, &a)?;
            let cb = column(&rows, &b)?;
            if ca
                .iter()
                .map(|r| &r.blueprint_id)
                .ne(cb.iter().map(|r| &r.blueprint_id))
            {
                bail!("{a} and {b} cover different blueprints");
            }
            let xa: Vec<f64> = ca.iter().map(|r| r.combined_expl).collect();
            let xb: Vec<f64> = cb.iter().map(|r| r.combined_expl).collect();
            let t = paired_ttest(&xa, &xb)?;
            println!("n,mean_diff,t,p,degenerate");
            println!("{},{},{},{},{}", t.n, t.mean_diff, t.t, t.p, t.degenerate);
        }
        Command::Diff { input, out } => {
            let rows = parse_rows(&fs::read_to_string(&input)?)?;
            emit(
                out.as_deref(),
                &diff_csv(&unsafe_vs_blueprintprior_diff(&rows)?),
            )?;
        }
    }
    Ok(())
}
