//! TOML experiment files.
//!
//! ```toml
//! [game]
//! budget = 100
//! fine = 200
//! ttl = 8
//! observation = "global"        # or { khop = 2 }
//!
//! [topology]
//! kind = "geometric"            # ring | line | grid | geometric, or file = "graph.txt"
//! n = 20
//! radius = 0.35
//! gateways = [0, 1]
//!
//! [[strategy]]
//! nodes = "0-9"                 # 3, [1, 4], "0-3,7"
//! name = "wolfpack"
//! pack = 1
//! params = { drop_rate_cap = 0.4 }
//!
//! [tournament]
//! seeds = 20
//! sweep = { axis = "fine", values = [0, 100, 200] }
//! cell = [{ name = "small-fine", overrides = ["game.fine=50"] }]
//! ```
//!
//! Overrides are `dotted.path=value`; the value is read as a TOML literal,
//! and as a plain string when it does not parse as one.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::engine::{GameConfig, NodeSetup};
use crate::strategies::StrategySpec;
use crate::topology::{TopologyGraph, TopologyKind};
use crate::tournament::{Cell, StrategyMix, SweepAxis, TopologySpec, TournamentSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Syntax(String),
    #[error("bad override {0:?}: {1}")]
    Override(String, String),
    #[error("[{section}]: {reason}")]
    Field { section: String, reason: String },
    #[error("node {0} has no strategy assigned")]
    Unassigned(u32),
    #[error("node {0} is assigned more than once")]
    Duplicate(u32),
    #[error("node {node} in a [[strategy]] block is outside the {count}-node topology")]
    OutOfRange { node: u32, count: usize },
}

fn field(section: &str, reason: impl ToString) -> ConfigError {
    ConfigError::Field {
        section: section.to_string(),
        reason: reason.to_string(),
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum NodeSelector {
    One(u32),
    Text(String),
    List(Vec<u32>),
}

impl NodeSelector {
    fn expand(&self) -> Result<Vec<u32>, String> {
        match self {
            NodeSelector::One(n) => Ok(vec![*n]),
            NodeSelector::List(v) => Ok(v.clone()),
            NodeSelector::Text(t) => {
                let mut out = Vec::new();
                for part in t.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                    let num = |s: &str| {
                        s.trim()
                            .parse::<u32>()
                            .map_err(|_| format!("bad node range {part:?}"))
                    };
                    match part.split_once('-') {
                        Some((a, b)) => {
                            let (a, b) = (num(a)?, num(b)?);
                            if a > b {
                                return Err(format!("empty node range {part:?}"));
                            }
                            out.extend(a..=b);
                        }
                        None => out.push(num(part)?),
                    }
                }
                Ok(out)
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StrategyBlock {
    nodes: NodeSelector,
    name: String,
    #[serde(default)]
    pack: Option<u32>,
    #[serde(default)]
    params: toml::Table,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSection {
    pub name: String,
    #[serde(default)]
    pub overrides: Vec<String>,
}

fn default_seeds() -> usize {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TournamentSection {
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    /// Defaults to `game.seed`.
    #[serde(default)]
    pub master_seed: Option<u64>,
    #[serde(default = "default_true")]
    pub parallel: bool,
    /// Deal the `[[strategy]]` counts to nodes in a fresh order each run.
    #[serde(default)]
    pub shuffle: bool,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub cell: Vec<CellSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    game: GameConfig,
    topology: toml::Table,
    #[serde(default)]
    strategy: Vec<StrategyBlock>,
    #[serde(default)]
    tournament: Option<TournamentSection>,
}

/// A fully resolved experiment file.
#[derive(Debug, Clone)]
pub struct ConfigFile {
    pub game: GameConfig,
    pub topology: TopologySpec,
    /// Per-node setups in node order.
    pub assignment: Vec<NodeSetup>,
    pub tournament: Option<TournamentSection>,
    doc: toml::Table,
    base_dir: PathBuf,
}

/// Sets `path` (dotted) in `doc` to `value`, creating tables on the way.
pub fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let bad = |m: &str| ConfigError::Override(spec.to_string(), m.to_string());
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| bad("expected key=value"))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(bad("empty key"));
    }
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let (last, parents) = keys.split_last().expect("non-empty path");
    let mut table = doc;
    for k in parents {
        let entry = table
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| bad(&format!("{k} is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

fn resolve_topology(table: &toml::Table, base_dir: &Path) -> Result<TopologySpec, ConfigError> {
    let mut table = table.clone();
    let gateways: Option<Vec<u32>> = match table.remove("gateways") {
        Some(v) => Some(v.try_into().map_err(|e: toml::de::Error| {
            field("topology", format!("gateways: {}", e.message()))
        })?),
        None => None,
    };
    if let Some(file) = table.remove("file") {
        if let Some(extra) = table.keys().next() {
            return Err(field(
                "topology",
                format!("`{extra}` cannot be combined with `file`"),
            ));
        }
        let rel = file
            .as_str()
            .ok_or_else(|| field("topology", "file must be a string"))?;
        let path = base_dir.join(rel);
        let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Io {
            path: path.clone(),
            source,
        })?;
        let mut g = TopologyGraph::from_edge_list(&text).map_err(|e| field("topology", e))?;
        if let Some(gw) = gateways {
            g.set_gateways(&gw).map_err(|e| field("topology", e))?;
        }
        return Ok(TopologySpec::Fixed(g));
    }
    let kind: TopologyKind = table
        .try_into()
        .map_err(|e: toml::de::Error| field("topology", e.message()))?;
    Ok(TopologySpec::Generated {
        kind,
        gateways: gateways.unwrap_or_else(|| vec![0]),
    })
}

fn resolve_assignment(
    blocks: &[StrategyBlock],
    count: usize,
) -> Result<Vec<NodeSetup>, ConfigError> {
    let mut slots: Vec<Option<NodeSetup>> = vec![None; count];
    for (i, b) in blocks.iter().enumerate() {
        let section = format!("strategy #{}", i + 1);
        let strategy =
            StrategySpec::from_name(&b.name, b.params.clone()).map_err(|e| field(&section, e))?;
        let setup = NodeSetup {
            strategy,
            pack: b.pack,
        };
        for node in b.nodes.expand().map_err(|e| field(&section, e))? {
            let slot = slots
                .get_mut(node as usize)
                .ok_or(ConfigError::OutOfRange { node, count })?;
            if slot.is_some() {
                return Err(ConfigError::Duplicate(node));
            }
            *slot = Some(setup.clone());
        }
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.ok_or(ConfigError::Unassigned(i as u32)))
        .collect()
}

impl ConfigFile {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base, overrides)
    }

    /// `base_dir` anchors relative topology file paths.
    pub fn parse(text: &str, base_dir: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        // A first pass over the untouched text keeps line numbers in errors.
        toml::from_str::<RawConfig>(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        Self::from_doc(doc, base_dir)
    }

    fn from_doc(doc: toml::Table, base_dir: &Path) -> Result<Self, ConfigError> {
        let raw: RawConfig = doc
            .clone()
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        raw.game.validate().map_err(|e| field("game", e))?;
        let topology = resolve_topology(&raw.topology, base_dir)?;
        let assignment = resolve_assignment(&raw.strategy, topology.node_count())?;
        if let Some(t) = &raw.tournament {
            if t.seeds < 1 {
                return Err(field("tournament", "seeds must be at least 1"));
            }
            if let Some(s) = &t.sweep {
                if s.values.is_empty() {
                    return Err(field("tournament", "sweep values must not be empty"));
                }
            }
            let mut names: Vec<&str> = t.cell.iter().map(|c| c.name.as_str()).collect();
            names.sort_unstable();
            if names.windows(2).any(|w| w[0] == w[1]) {
                return Err(field("tournament", "cell names must be unique"));
            }
        }
        Ok(ConfigFile {
            game: raw.game,
            topology,
            assignment,
            tournament: raw.tournament,
            doc,
            base_dir: base_dir.to_path_buf(),
        })
    }

    /// The file as a single tournament cell.
    pub fn cell(&self, name: &str, shuffle: bool) -> Cell {
        let mix = if shuffle {
            let mut parts: Vec<(NodeSetup, usize)> = Vec::new();
            for s in &self.assignment {
                match parts.iter_mut().find(|(p, _)| p == s) {
                    Some((_, k)) => *k += 1,
                    None => parts.push((s.clone(), 1)),
                }
            }
            StrategyMix::Shuffled(parts)
        } else {
            StrategyMix::Fixed(self.assignment.clone())
        };
        Cell {
            name: name.to_string(),
            game: self.game.clone(),
            topology: self.topology.clone(),
            mix,
        }
    }

    /// Tournament batch described by the `[tournament]` section; a file
    /// without cells yields a single cell named `base`.
    pub fn tournament_spec(&self) -> Result<TournamentSpec, ConfigError> {
        let t = self
            .tournament
            .clone()
            .ok_or_else(|| field("tournament", "section missing"))?;
        let cells = if t.cell.is_empty() {
            vec![self.cell("base", t.shuffle)]
        } else {
            t.cell
                .iter()
                .map(|c| {
                    let mut doc = self.doc.clone();
                    for o in &c.overrides {
                        apply_override(&mut doc, o)?;
                    }
                    Ok(ConfigFile::from_doc(doc, &self.base_dir)?.cell(&c.name, t.shuffle))
                })
                .collect::<Result<_, ConfigError>>()?
        };
        Ok(TournamentSpec {
            cells,
            seeds_per_cell: t.seeds,
            master_seed: t.master_seed.unwrap_or(self.game.seed),
            parallel: t.parallel,
        })
    }
}
