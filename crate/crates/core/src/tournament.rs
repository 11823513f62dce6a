//! Multi-seed, multi-configuration batches with per-strategy aggregation
//! and rank distributions.
//!
//! Run seeds are derived from the master seed, the cell *name* and the
//! seed index, so a cell produces the same numbers wherever it sits in the
//! batch and can be re-run on its own.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{GameConfig, NodeSetup, Simulation, SimulationOutcome};
use crate::model::Money;
use crate::seed::derive_seed;
use crate::topology::{generate, TopologyGraph, TopologyKind};

#[derive(Debug, Clone, PartialEq)]
pub enum TopologySpec {
    Generated {
        kind: TopologyKind,
        gateways: Vec<u32>,
    },
    Fixed(TopologyGraph),
}

impl TopologySpec {
    pub fn node_count(&self) -> usize {
        match self {
            TopologySpec::Generated { kind, .. } => kind.node_count(),
            TopologySpec::Fixed(g) => g.node_count(),
        }
    }

    pub fn build(&self, seed: u64) -> Result<TopologyGraph, String> {
        match self {
            TopologySpec::Generated { kind, gateways } => {
                generate(kind, gateways, seed).map_err(|e| e.to_string())
            }
            TopologySpec::Fixed(g) => Ok(g.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StrategyMix {
    /// One setup per node, in node order.
    Fixed(Vec<NodeSetup>),
    /// Setups with multiplicities, dealt to nodes in a per-run shuffled order.
    Shuffled(Vec<(NodeSetup, usize)>),
}

impl StrategyMix {
    pub fn assign(&self, seed: u64) -> Vec<NodeSetup> {
        match self {
            StrategyMix::Fixed(v) => v.clone(),
            StrategyMix::Shuffled(parts) => {
                let mut v: Vec<NodeSetup> = parts
                    .iter()
                    .flat_map(|(s, k)| std::iter::repeat_n(s.clone(), *k))
                    .collect();
                v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                v
            }
        }
    }

    /// Strategy labels in first-appearance order.
    pub fn labels(&self) -> Vec<&'static str> {
        let names: Vec<&'static str> = match self {
            StrategyMix::Fixed(v) => v.iter().map(|s| s.strategy.name()).collect(),
            StrategyMix::Shuffled(p) => p.iter().map(|(s, _)| s.strategy.name()).collect(),
        };
        let mut out = Vec::new();
        for n in names {
            if !out.contains(&n) {
                out.push(n);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub name: String,
    pub game: GameConfig,
    pub topology: TopologySpec,
    pub mix: StrategyMix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TournamentSpec {
    pub cells: Vec<Cell>,
    pub seeds_per_cell: usize,
    pub master_seed: u64,
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyRow {
    pub strategy: &'static str,
    /// Mean over seeds of the strategy's per-node mean balance.
    pub mean_balance: f64,
    pub mean_delivered: f64,
    pub mean_fines: f64,
    /// `rank_counts[r]` = seeds in which the strategy placed `r + 1`.
    pub rank_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub cell: String,
    pub rows: Vec<StrategyRow>,
    /// Per successful seed, per strategy (row order): mean node balance.
    pub seed_balances: Vec<Vec<f64>>,
    pub mean_total_delivered: f64,
    pub mean_total_dropped: f64,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankTable {
    pub cells: Vec<CellResult>,
}

/// Competition ranking by descending score: ties share the better rank.
pub fn competition_rank(scores: &[f64]) -> Vec<usize> {
    scores
        .iter()
        .map(|s| 1 + scores.iter().filter(|o| *o > s).count())
        .collect()
}

/// Builds the simulation a cell plays under one run seed.
pub fn prepare(cell: &Cell, run_seed: u64) -> Result<Simulation, String> {
    let graph = cell.topology.build(derive_seed(run_seed, "topology", 0))?;
    let assignment = cell.mix.assign(derive_seed(run_seed, "assignment", 0));
    let game = GameConfig {
        seed: run_seed,
        ..cell.game.clone()
    };
    Simulation::new(game, graph, assignment).map_err(|e| e.to_string())
}

pub fn run_seed(
    cell: &Cell,
    master_seed: u64,
    seed_index: usize,
) -> Result<SimulationOutcome, String> {
    Ok(prepare(
        cell,
        derive_seed(master_seed, &cell.name, seed_index as u64),
    )?
    .run())
}

struct SeedSummary {
    balances: Vec<f64>,
    delivered: Vec<f64>,
    fines: Vec<f64>,
    total_delivered: u64,
    total_dropped: u64,
}

fn summarize(labels: &[&'static str], out: &SimulationOutcome) -> SeedSummary {
    let k = labels.len();
    let (mut bal, mut del, mut fin, mut count) =
        (vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0usize; k]);
    for (i, name) in out.strategy_names.iter().enumerate() {
        let j = labels
            .iter()
            .position(|l| l == name)
            .expect("label of assigned strategy");
        bal[j] += out.balances[i].get() as f64;
        del[j] += out.stats[i].delivered as f64;
        fin[j] += out.stats[i].fines_paid.get() as f64;
        count[j] += 1;
    }
    let mean = |v: Vec<f64>| {
        v.iter()
            .zip(&count)
            .map(|(x, &c)| if c == 0 { 0.0 } else { x / c as f64 })
            .collect()
    };
    SeedSummary {
        balances: mean(bal),
        delivered: mean(del),
        fines: mean(fin),
        total_delivered: out.delivered_total(),
        total_dropped: out.dropped_total(),
    }
}

fn aggregate(cell: &Cell, runs: Vec<Result<SeedSummary, String>>) -> CellResult {
    let labels = cell.mix.labels();
    let k = labels.len();
    let mut rows: Vec<StrategyRow> = labels
        .iter()
        .map(|&strategy| StrategyRow {
            strategy,
            mean_balance: 0.0,
            mean_delivered: 0.0,
            mean_fines: 0.0,
            rank_counts: vec![0; k],
        })
        .collect();
    let mut seed_balances = Vec::new();
    let mut failures = Vec::new();
    let (mut tot_del, mut tot_drop) = (0.0, 0.0);
    for (i, run) in runs.into_iter().enumerate() {
        match run {
            Ok(s) => {
                for (j, r) in competition_rank(&s.balances).into_iter().enumerate() {
                    rows[j].rank_counts[r - 1] += 1;
                    rows[j].mean_balance += s.balances[j];
                    rows[j].mean_delivered += s.delivered[j];
                    rows[j].mean_fines += s.fines[j];
                }
                tot_del += s.total_delivered as f64;
                tot_drop += s.total_dropped as f64;
                seed_balances.push(s.balances);
            }
            Err(e) => failures.push(format!("seed {i}: {e}")),
        }
    }
    let ok = seed_balances.len();
    if ok > 0 {
        for r in &mut rows {
            r.mean_balance /= ok as f64;
            r.mean_delivered /= ok as f64;
            r.mean_fines /= ok as f64;
        }
        tot_del /= ok as f64;
        tot_drop /= ok as f64;
    }
    CellResult {
        cell: cell.name.clone(),
        rows,
        seed_balances,
        mean_total_delivered: tot_del,
        mean_total_dropped: tot_drop,
        failures,
    }
}

pub fn run_tournament(spec: &TournamentSpec) -> RankTable {
    let jobs: Vec<(usize, usize)> = (0..spec.cells.len())
        .flat_map(|c| (0..spec.seeds_per_cell.max(1)).map(move |s| (c, s)))
        .collect();
    let job = |&(c, s): &(usize, usize)| {
        let cell = &spec.cells[c];
        run_seed(cell, spec.master_seed, s).map(|out| summarize(&cell.mix.labels(), &out))
    };
    let results: Vec<Result<SeedSummary, String>> = if spec.parallel {
        jobs.par_iter().map(job).collect()
    } else {
        jobs.iter().map(job).collect()
    };
    let mut results = results.into_iter();
    let per = spec.seeds_per_cell.max(1);
    RankTable {
        cells: spec
            .cells
            .iter()
            .map(|cell| aggregate(cell, results.by_ref().take(per).collect()))
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Fine,
    Ttl,
    Churn,
}

impl SweepAxis {
    pub fn apply(self, game: &mut GameConfig, value: f64) {
        match self {
            SweepAxis::Fine => game.fine = Money(value as i64),
            SweepAxis::Ttl => game.ttl = value as u32,
            SweepAxis::Churn => game.churn = value,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Fine => "fine",
            SweepAxis::Ttl => "ttl",
            SweepAxis::Churn => "churn",
        }
    }
}

/// One table per value. The cell keeps its name, so every value is played
/// on the same seeds, topologies and destinations.
pub fn sweep(
    axis: SweepAxis,
    values: &[f64],
    base: &Cell,
    seeds_per_cell: usize,
    master_seed: u64,
    parallel: bool,
) -> Vec<(f64, RankTable)> {
    values
        .iter()
        .map(|&v| {
            let mut cell = base.clone();
            axis.apply(&mut cell.game, v);
            let spec = TournamentSpec {
                cells: vec![cell],
                seeds_per_cell,
                master_seed,
                parallel,
            };
            (v, run_tournament(&spec))
        })
        .collect()
}

impl RankTable {
    pub fn cell(&self, name: &str) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.cell == name)
    }

    fn rank_columns(&self) -> usize {
        self.cells.iter().map(|c| c.rows.len()).max().unwrap_or(0)
    }

    pub fn csv_header(&self) -> String {
        let mut h = String::from("cell,strategy,mean_balance,mean_delivered,mean_fines");
        for r in 1..=self.rank_columns() {
            write!(h, ",rank_{r}_count").unwrap();
        }
        h
    }

    pub fn csv_rows(&self, prefix: &str, out: &mut String) {
        let cols = self.rank_columns();
        for c in &self.cells {
            for r in &c.rows {
                write!(
                    out,
                    "{prefix}{},{},{:.3},{:.3},{:.3}",
                    c.cell, r.strategy, r.mean_balance, r.mean_delivered, r.mean_fines
                )
                .unwrap();
                for i in 0..cols {
                    write!(out, ",{}", r.rank_counts.get(i).copied().unwrap_or(0)).unwrap();
                }
                out.push('\n');
            }
        }
    }

    /// `cell,strategy,mean_balance,mean_delivered,mean_fines,rank_1_count,...`
    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        self.csv_rows("", &mut out);
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.cells {
            let runs = c.seed_balances.len();
            writeln!(
                out,
                "== {} ({} runs, {:.1} delivered / {:.1} dropped per run) ==",
                c.cell, runs, c.mean_total_delivered, c.mean_total_dropped
            )
            .unwrap();
            writeln!(
                out,
                "{:<12} {:>12} {:>10} {:>10}  ranks",
                "strategy", "balance", "delivered", "fines"
            )
            .unwrap();
            let mut rows: Vec<&StrategyRow> = c.rows.iter().collect();
            rows.sort_by(|a, b| b.mean_balance.total_cmp(&a.mean_balance));
            for r in rows {
                let ranks: Vec<String> = r.rank_counts.iter().map(usize::to_string).collect();
                writeln!(
                    out,
                    "{:<12} {:>12.1} {:>10.2} {:>10.1}  [{}]",
                    r.strategy,
                    r.mean_balance,
                    r.mean_delivered,
                    r.mean_fines,
                    ranks.join(" ")
                )
                .unwrap();
            }
            for f in &c.failures {
                writeln!(out, "  failed: {f}").unwrap();
            }
        }
        out
    }
}
