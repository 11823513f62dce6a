//! Command-line front end: `run`, `tournament` and `topo`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::config::ConfigFile;
use crate::engine::SimulationOutcome;
use crate::model::NodeId;
use crate::observation::DIAGNOSTICS_HEADER;
use crate::seed::derive_seed;
use crate::tournament::{prepare, run_tournament, RankTable, TournamentSpec};

#[derive(Debug, Parser)]
#[command(
    name = "maniac",
    version,
    about = "Auction-based packet forwarding simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Play one game and write its event log and balances.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Also write per-round observer diagnostics to profiles.csv.
        #[arg(long)]
        profiles: bool,
    },
    /// Play the batch described by the [tournament] section.
    Tournament {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Print the topology's edge list.
    Topo {
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, short)]
    pub config: PathBuf,
    /// Game seed for `run` and `topo`, master seed for `tournament`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short, default_value = "out")]
    pub out: PathBuf,
    /// `dotted.key=value`, applied in order after the file is read.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl CommonArgs {
    fn load(&self) -> Result<ConfigFile> {
        let mut overrides = self.overrides.clone();
        if let Some(s) = self.seed {
            overrides.push(format!("game.seed={s}"));
        }
        ConfigFile::load(&self.config, &overrides)
            .with_context(|| format!("invalid config {}", self.config.display()))
    }
}

/// Writes through a temporary file so a reader never sees a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn run_summary(out: &SimulationOutcome) -> String {
    let mut names: Vec<&str> = Vec::new();
    for n in &out.strategy_names {
        if !names.contains(n) {
            names.push(n);
        }
    }
    let mut s = String::new();
    writeln!(
        s,
        "{} rounds, {} packets: {} delivered, {} dropped",
        out.rounds,
        out.records.len(),
        out.delivered_total(),
        out.dropped_total()
    )
    .unwrap();
    writeln!(
        s,
        "{:<12} {:>5} {:>10} {:>9} {:>8} {:>8}",
        "strategy", "nodes", "balance", "delivered", "dropped", "fines"
    )
    .unwrap();
    for name in names {
        let idx: Vec<usize> = (0..out.balances.len())
            .filter(|&i| out.strategy_names[i] == name)
            .collect();
        let sum = |f: &dyn Fn(usize) -> i64| idx.iter().map(|&i| f(i)).sum::<i64>();
        writeln!(
            s,
            "{:<12} {:>5} {:>10} {:>9} {:>8} {:>8}",
            name,
            idx.len(),
            sum(&|i| out.balances[i].get()),
            sum(&|i| out.stats[i].delivered as i64),
            sum(&|i| out.stats[i].dropped as i64),
            sum(&|i| out.stats[i].fines_paid.get()),
        )
        .unwrap();
    }
    s
}

pub fn cmd_run(common: &CommonArgs, profiles: bool) -> Result<String> {
    let config = common.load()?;
    let cell = config.cell("run", false);
    let mut sim = prepare(&cell, config.game.seed).map_err(anyhow::Error::msg)?;
    let mut diag = String::new();
    if profiles {
        diag.push_str(DIAGNOSTICS_HEADER);
        diag.push('\n');
    }
    while sim.step_round() {
        if profiles {
            for i in 0..sim.graph().node_count() {
                sim.profiles(NodeId(i as u32)).diagnostics_rows(
                    sim.round(),
                    NodeId(i as u32),
                    &mut diag,
                );
            }
        }
    }
    let outcome = sim.finish();
    std::fs::create_dir_all(&common.out)
        .with_context(|| format!("creating {}", common.out.display()))?;
    write_atomic(&common.out.join("events.csv"), &outcome.event_log())?;
    write_atomic(&common.out.join("balances.csv"), &outcome.balances_csv())?;
    if profiles {
        write_atomic(&common.out.join("profiles.csv"), &diag)?;
    }
    Ok(run_summary(&outcome))
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Plays cell by cell so each finished cell's CSV is on disk before the
/// next one starts.
fn play_cells(spec: &TournamentSpec, dir: &Path, suffix: &str) -> Result<RankTable> {
    let mut table = RankTable::default();
    for cell in &spec.cells {
        let one = TournamentSpec {
            cells: vec![cell.clone()],
            ..spec.clone()
        };
        let t = run_tournament(&one);
        write_atomic(
            &dir.join(format!("{}{suffix}.csv", file_stem(&cell.name))),
            &t.to_csv(),
        )?;
        table.cells.extend(t.cells);
    }
    Ok(table)
}

pub fn cmd_tournament(common: &CommonArgs) -> Result<String> {
    let config = common.load()?;
    let mut spec = config.tournament_spec()?;
    if let Some(s) = common.seed {
        spec.master_seed = s;
    }
    let cells_dir = common.out.join("cells");
    std::fs::create_dir_all(&cells_dir)
        .with_context(|| format!("creating {}", cells_dir.display()))?;
    let sweep = config.tournament.as_ref().and_then(|t| t.sweep.clone());
    let mut summary = String::new();
    match sweep {
        None => {
            let table = play_cells(&spec, &cells_dir, "")?;
            write_atomic(&common.out.join("rank_table.csv"), &table.to_csv())?;
            summary.push_str(&table.summary());
        }
        Some(sw) => {
            let axis = sw.axis.as_str();
            let mut combined = String::new();
            for &v in &sw.values {
                let mut at = spec.clone();
                for c in &mut at.cells {
                    sw.axis.apply(&mut c.game, v);
                    c.game.validate().with_context(|| format!("{axis} = {v}"))?;
                }
                let table = play_cells(&at, &cells_dir, &format!("_{axis}_{v}"))?;
                write_atomic(
                    &common.out.join(format!("rank_{axis}_{v}.csv")),
                    &table.to_csv(),
                )?;
                if combined.is_empty() {
                    writeln!(combined, "{axis},{}", table.csv_header()).unwrap();
                }
                table.csv_rows(&format!("{v},"), &mut combined);
                writeln!(summary, "# {axis} = {v}").unwrap();
                summary.push_str(&table.summary());
            }
            write_atomic(&common.out.join("rank_table.csv"), &combined)?;
        }
    }
    Ok(summary)
}

pub fn cmd_topo(common: &CommonArgs) -> Result<String> {
    let config = common.load()?;
    let graph = config
        .topology
        .build(derive_seed(config.game.seed, "topology", 0))
        .map_err(anyhow::Error::msg)?;
    Ok(graph.to_edge_list())
}

/// Runs a parsed command and returns what it prints on success.
pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Run { common, profiles } => cmd_run(common, *profiles),
        Command::Tournament { common } => cmd_tournament(common),
        Command::Topo { common } => cmd_topo(common),
    }
}
