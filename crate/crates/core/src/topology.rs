//! Network graphs, shortest-hop queries, restricted k-hop views and churn.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::NodeId;

const GEOMETRIC_ATTEMPTS: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("a graph needs at least 2 nodes, got {0}")]
    TooSmall(usize),
    #[error("gateway set is empty")]
    NoGateway,
    #[error("gateway {0} is not a node of the graph")]
    BadGateway(u32),
    #[error("edge {0}-{1} is invalid (self-loop or out of range)")]
    BadEdge(u32, u32),
    #[error("radius {radius} gave no connected graph in {attempts} attempts")]
    Disconnected { radius: f64, attempts: usize },
    #[error("graph is not connected")]
    NotConnected,
    #[error("edge list parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Graph families the generator knows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TopologyKind {
    Ring { n: usize },
    Line { n: usize },
    Grid { rows: usize, cols: usize },
    Geometric { n: usize, radius: f64 },
}

impl TopologyKind {
    pub fn node_count(&self) -> usize {
        match *self {
            TopologyKind::Ring { n }
            | TopologyKind::Line { n }
            | TopologyKind::Geometric { n, .. } => n,
            TopologyKind::Grid { rows, cols } => rows * cols,
        }
    }
}

/// Simple undirected graph plus the set of nodes adjacent to the backbone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopologyGraph {
    adj: Vec<BTreeSet<u32>>,
    gateways: BTreeSet<u32>,
}

impl TopologyGraph {
    pub fn from_edges(
        n: usize,
        edges: &[(u32, u32)],
        gateways: &[u32],
    ) -> Result<Self, TopologyError> {
        if n < 2 {
            return Err(TopologyError::TooSmall(n));
        }
        let mut adj = vec![BTreeSet::new(); n];
        for &(u, v) in edges {
            if u == v || u as usize >= n || v as usize >= n {
                return Err(TopologyError::BadEdge(u, v));
            }
            adj[u as usize].insert(v);
            adj[v as usize].insert(u);
        }
        let mut g = TopologyGraph {
            adj,
            gateways: BTreeSet::new(),
        };
        g.set_gateways(gateways)?;
        Ok(g)
    }

    pub fn set_gateways(&mut self, gateways: &[u32]) -> Result<(), TopologyError> {
        if gateways.is_empty() {
            return Err(TopologyError::NoGateway);
        }
        if let Some(&bad) = gateways.iter().find(|&&g| g as usize >= self.adj.len()) {
            return Err(TopologyError::BadGateway(bad));
        }
        self.gateways = gateways.iter().copied().collect();
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.adj.len() as u32).map(NodeId)
    }

    pub fn gateways(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.gateways.iter().map(|&g| NodeId(g))
    }

    pub fn is_gateway(&self, v: NodeId) -> bool {
        self.gateways.contains(&v.0)
    }

    /// Neighbours of `v`; the backbone's neighbours are the gateways.
    pub fn neighbors(&self, v: NodeId) -> Vec<NodeId> {
        if v.is_backbone() {
            self.gateways().collect()
        } else {
            self.adj[v.index()].iter().map(|&u| NodeId(u)).collect()
        }
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v.index()].len()
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        match (a.is_backbone(), b.is_backbone()) {
            (true, true) => false,
            (true, false) => self.is_gateway(b),
            (false, true) => self.is_gateway(a),
            (false, false) => self.adj[a.index()].contains(&b.0),
        }
    }

    /// Sorted edge list with `u < v`.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| {
                ns.iter()
                    .filter(move |&&v| v > u as u32)
                    .map(move |&v| (u as u32, v))
            })
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        bfs(&self.adj, 0).iter().all(Option::is_some)
    }

    /// Shortest-hop distance; `None` when unreachable. Either end may be the backbone.
    pub fn hop_distance(&self, a: NodeId, b: NodeId) -> Option<u32> {
        HopTable::new(self).get(a, b)
    }

    pub fn diameter(&self) -> Option<u32> {
        let t = HopTable::new(self);
        let mut best = 0;
        for a in self.nodes() {
            for b in self.nodes() {
                best = best.max(t.get(a, b)?);
            }
        }
        Some(best)
    }

    /// Edge-list text: `n <count>`, one `u v` per edge, `gateways <ids...>`.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n {}\n", self.node_count());
        for (u, v) in self.edges() {
            writeln!(out, "{u} {v}").unwrap();
        }
        let gws: Vec<String> = self.gateways.iter().map(u32::to_string).collect();
        writeln!(out, "gateways {}", gws.join(" ")).unwrap();
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self, TopologyError> {
        let parse_err = |line: usize, reason: &str| TopologyError::Parse {
            line,
            reason: reason.to_string(),
        };
        let mut n = None;
        let mut edges = Vec::new();
        let mut gateways = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let head = parts.next().unwrap();
            match head {
                "n" => {
                    let count = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| parse_err(i + 1, "bad node count"))?;
                    n = Some(count);
                }
                "gateways" => {
                    let ids: Result<Vec<u32>, _> = parts.map(str::parse).collect();
                    gateways = Some(ids.map_err(|_| parse_err(i + 1, "bad gateway id"))?);
                }
                _ => {
                    let u = head.parse().map_err(|_| parse_err(i + 1, "bad edge"))?;
                    let v = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| parse_err(i + 1, "bad edge"))?;
                    edges.push((u, v));
                }
            }
        }
        let n = n.ok_or_else(|| parse_err(0, "missing `n` line"))?;
        let gateways = gateways.ok_or_else(|| parse_err(0, "missing `gateways` line"))?;
        TopologyGraph::from_edges(n, &edges, &gateways)
    }
}

fn bfs(adj: &[BTreeSet<u32>], src: usize) -> Vec<Option<u32>> {
    let mut dist = vec![None; adj.len()];
    dist[src] = Some(0);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        let d = dist[u].unwrap();
        for &v in &adj[u] {
            if dist[v as usize].is_none() {
                dist[v as usize] = Some(d + 1);
                queue.push_back(v as usize);
            }
        }
    }
    dist
}

/// All-pairs hop distances, with the backbone as an extra virtual node
/// adjacent to every gateway.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopTable {
    n: usize,
    dist: Vec<Option<u32>>,
}

impl HopTable {
    pub fn new(g: &TopologyGraph) -> Self {
        Self::build(&g.adj, &g.gateways)
    }

    fn build(adj: &[BTreeSet<u32>], gateways: &BTreeSet<u32>) -> Self {
        let n = adj.len();
        let m = n + 1;
        let mut dist = vec![None; m * m];
        for s in 0..n {
            for (t, d) in bfs(adj, s).into_iter().enumerate() {
                dist[s * m + t] = d;
            }
        }
        // backbone row/column
        for t in 0..n {
            let d = gateways
                .iter()
                .filter_map(|&g| dist[g as usize * m + t])
                .min()
                .map(|d| d + 1);
            dist[n * m + t] = d;
            dist[t * m + n] = d;
        }
        dist[n * m + n] = Some(0);
        HopTable { n, dist }
    }

    fn slot(&self, v: NodeId) -> usize {
        if v.is_backbone() {
            self.n
        } else {
            v.index()
        }
    }

    pub fn get(&self, a: NodeId, b: NodeId) -> Option<u32> {
        if !a.is_backbone() && a.index() >= self.n || !b.is_backbone() && b.index() >= self.n {
            return None;
        }
        self.dist[self.slot(a) * (self.n + 1) + self.slot(b)]
    }
}

/// What one node knows about the topology: every edge with at least one
/// endpoint within `radius - 1` hops of the owner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeView {
    pub owner: NodeId,
    /// `None` means the whole graph is known.
    pub radius: Option<u32>,
    adj: Vec<BTreeSet<u32>>,
    table: HopTable,
}

impl NodeView {
    pub fn full(g: &TopologyGraph, owner: NodeId) -> Self {
        NodeView {
            owner,
            radius: None,
            adj: g.adj.clone(),
            table: HopTable::new(g),
        }
    }

    pub fn edges(&self) -> Vec<(u32, u32)> {
        TopologyGraph {
            adj: self.adj.clone(),
            gateways: BTreeSet::new(),
        }
        .edges()
    }

    pub fn knows_edge(&self, a: NodeId, b: NodeId) -> bool {
        !a.is_backbone()
            && !b.is_backbone()
            && self.adj.get(a.index()).is_some_and(|ns| ns.contains(&b.0))
    }

    /// Neighbours of `v` as far as this view knows.
    pub fn neighbors(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adj
            .get(v.index())
            .into_iter()
            .flatten()
            .map(|&u| NodeId(u))
    }

    /// Hop distance over known edges only.
    pub fn distance(&self, a: NodeId, b: NodeId) -> Option<u32> {
        if a.is_backbone() || b.is_backbone() {
            return None;
        }
        self.table.get(a, b)
    }
}

/// Restricts `g` to what `owner` sees with view radius `k` (k ≥ 1).
pub fn view_of(g: &TopologyGraph, owner: NodeId, k: u32) -> NodeView {
    let k = k.max(1);
    let from_owner = bfs(&g.adj, owner.index());
    let near = |v: u32| from_owner[v as usize].is_some_and(|d| d < k);
    let mut adj = vec![BTreeSet::new(); g.node_count()];
    for (u, v) in g.edges() {
        if near(u) || near(v) {
            adj[u as usize].insert(v);
            adj[v as usize].insert(u);
        }
    }
    let table = HopTable::build(&adj, &BTreeSet::new());
    NodeView {
        owner,
        radius: Some(k),
        adj,
        table,
    }
}

/// Generates a connected graph of the given family. Only the geometric
/// family consumes randomness.
pub fn generate(
    kind: &TopologyKind,
    gateways: &[u32],
    seed: u64,
) -> Result<TopologyGraph, TopologyError> {
    let n = kind.node_count();
    if n < 2 {
        return Err(TopologyError::TooSmall(n));
    }
    let edges: Vec<(u32, u32)> = match *kind {
        TopologyKind::Line { n } => (1..n as u32).map(|i| (i - 1, i)).collect(),
        TopologyKind::Ring { n } => {
            let mut e: Vec<_> = (1..n as u32).map(|i| (i - 1, i)).collect();
            if n > 2 {
                e.push((n as u32 - 1, 0));
            }
            e
        }
        TopologyKind::Grid { rows, cols } => {
            let mut e = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    let id = (r * cols + c) as u32;
                    if c + 1 < cols {
                        e.push((id, id + 1));
                    }
                    if r + 1 < rows {
                        e.push((id, id + cols as u32));
                    }
                }
            }
            e
        }
        TopologyKind::Geometric { n, radius } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut found = None;
            for _ in 0..GEOMETRIC_ATTEMPTS {
                let pts: Vec<(f64, f64)> = (0..n)
                    .map(|_| (rng.gen::<f64>(), rng.gen::<f64>()))
                    .collect();
                let mut e = Vec::new();
                for i in 0..n {
                    for j in i + 1..n {
                        let (dx, dy) = (pts[i].0 - pts[j].0, pts[i].1 - pts[j].1);
                        if dx * dx + dy * dy <= radius * radius {
                            e.push((i as u32, j as u32));
                        }
                    }
                }
                let g = TopologyGraph::from_edges(n, &e, &[0])?;
                if g.is_connected() {
                    found = Some(e);
                    break;
                }
            }
            found.ok_or(TopologyError::Disconnected {
                radius,
                attempts: GEOMETRIC_ATTEMPTS,
            })?
        }
    };
    let g = TopologyGraph::from_edges(n, &edges, gateways)?;
    if !g.is_connected() {
        return Err(TopologyError::NotConnected);
    }
    Ok(g)
}

/// Toggles each pair of non-gateway nodes with probability `p`, in
/// canonical pair order. Removals that would disconnect the graph are
/// reverted; pairs touching a gateway are never changed.
pub fn churn(g: &TopologyGraph, p: f64, seed: u64) -> TopologyGraph {
    let p = p.clamp(0.0, 1.0);
    let mut out = g.clone();
    if p == 0.0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.node_count() as u32;
    for u in 0..n {
        for v in u + 1..n {
            let flip = rng.gen_bool(p);
            if !flip || g.gateways.contains(&u) || g.gateways.contains(&v) {
                continue;
            }
            if out.adj[u as usize].remove(&v) {
                out.adj[v as usize].remove(&u);
                if !out.is_connected() {
                    out.adj[u as usize].insert(v);
                    out.adj[v as usize].insert(u);
                }
            } else {
                out.adj[u as usize].insert(v);
                out.adj[v as usize].insert(u);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ring(n: usize) -> TopologyGraph {
        generate(&TopologyKind::Ring { n }, &[0], 0).unwrap()
    }

    /// Independent reference: Floyd–Warshall over the raw edge list.
    fn floyd(n: usize, edges: &[(u32, u32)]) -> Vec<Vec<Option<u32>>> {
        let mut d = vec![vec![None; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = Some(0);
        }
        for &(u, v) in edges {
            d[u as usize][v as usize] = Some(1);
            d[v as usize][u as usize] = Some(1);
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                        if d[i][j].is_none_or(|c| a + b < c) {
                            d[i][j] = Some(a + b);
                        }
                    }
                }
            }
        }
        d
    }

    #[test]
    fn ring_has_degree_two() {
        let g = ring(4);
        assert_eq!(g.edges().len(), 4);
        assert!(g.nodes().all(|v| g.degree(v) == 2));
    }

    #[test]
    fn grid_degrees() {
        let g = generate(&TopologyKind::Grid { rows: 3, cols: 3 }, &[0], 0).unwrap();
        assert_eq!(g.degree(NodeId(0)), 2);
        assert_eq!(g.degree(NodeId(8)), 2);
        assert_eq!(g.degree(NodeId(4)), 4);
        assert_eq!(g.degree(NodeId(1)), 3);
    }

    #[test]
    fn geometric_is_reproducible() {
        let kind = TopologyKind::Geometric { n: 20, radius: 0.4 };
        let a = generate(&kind, &[0], 7).unwrap();
        let b = generate(&kind, &[0], 7).unwrap();
        assert_eq!(a.edges(), b.edges());
        assert!(a.is_connected());
    }

    #[test]
    fn geometric_tiny_radius_fails() {
        let kind = TopologyKind::Geometric {
            n: 20,
            radius: 0.01,
        };
        assert!(matches!(
            generate(&kind, &[0], 1),
            Err(TopologyError::Disconnected { .. })
        ));
    }

    #[test]
    fn distances() {
        let g = ring(6);
        assert_eq!(g.hop_distance(NodeId(0), NodeId(3)), Some(3));
        assert_eq!(g.hop_distance(NodeId(2), NodeId(2)), Some(0));
        let grid = generate(&TopologyKind::Grid { rows: 3, cols: 3 }, &[0], 0).unwrap();
        let reference = floyd(9, &grid.edges());
        assert_eq!(reference[0][8], Some(4));
        assert_eq!(grid.hop_distance(NodeId(0), NodeId(8)), Some(4));
        // backbone sits one hop outside gateway 0
        assert_eq!(grid.hop_distance(NodeId::BACKBONE, NodeId(8)), Some(5));
        assert_eq!(
            grid.hop_distance(NodeId::BACKBONE, NodeId::BACKBONE),
            Some(0)
        );
    }

    #[test]
    fn disconnected_is_unreachable() {
        let g = TopologyGraph::from_edges(4, &[(0, 1), (2, 3)], &[0]).unwrap();
        assert_eq!(g.hop_distance(NodeId(0), NodeId(3)), None);
        assert!(!g.is_connected());
    }

    #[test]
    fn views_on_ring() {
        let g = ring(6);
        assert_eq!(view_of(&g, NodeId(0), 1).edges(), vec![(0, 1), (0, 5)]);
        assert_eq!(
            view_of(&g, NodeId(0), 2).edges(),
            vec![(0, 1), (0, 5), (1, 2), (4, 5)]
        );
        assert_eq!(view_of(&g, NodeId(0), 6).edges(), g.edges());
    }

    #[test]
    fn view_distance_uses_known_edges_only() {
        let g = ring(6);
        let v = view_of(&g, NodeId(0), 1);
        assert_eq!(v.distance(NodeId(0), NodeId(1)), Some(1));
        assert_eq!(v.distance(NodeId(0), NodeId(3)), None);
        assert_eq!(
            NodeView::full(&g, NodeId(0)).distance(NodeId(0), NodeId(3)),
            Some(3)
        );
    }

    #[test]
    fn churn_zero_is_identity() {
        let g = generate(&TopologyKind::Geometric { n: 15, radius: 0.5 }, &[0, 1], 3).unwrap();
        assert_eq!(churn(&g, 0.0, 9), g);
    }

    #[test]
    fn churn_full_is_reproducible_and_keeps_gateway_edges() {
        let all: Vec<(u32, u32)> = (0..8u32)
            .flat_map(|u| (u + 1..8).map(move |v| (u, v)))
            .collect();
        let g = TopologyGraph::from_edges(8, &all, &[0]).unwrap();
        let a = churn(&g, 1.0, 11);
        let b = churn(&g, 1.0, 11);
        assert_eq!(a, b);
        assert!(a.is_connected());
        for v in 1..8 {
            assert!(a.has_edge(NodeId(0), NodeId(v)));
        }
    }

    #[test]
    fn edge_list_round_trip() {
        let g = generate(&TopologyKind::Grid { rows: 2, cols: 3 }, &[0, 2], 0).unwrap();
        let text = g.to_edge_list();
        assert!(text.starts_with("n 6\n0 1\n"));
        assert!(text.ends_with("gateways 0 2\n"));
        assert_eq!(TopologyGraph::from_edge_list(&text).unwrap(), g);
        assert!(TopologyGraph::from_edge_list("n 3\n0 1\n").is_err());
        assert!(TopologyGraph::from_edge_list("n 3\n0 0\ngateways 0\n").is_err());
    }

    fn arb_graph() -> impl Strategy<Value = TopologyGraph> {
        (3usize..14, any::<u64>(), 0.25f64..0.7)
            .prop_filter_map("disconnected", |(n, seed, radius)| {
                generate(&TopologyKind::Geometric { n, radius }, &[0], seed).ok()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn distances_match_reference_and_are_metric(g in arb_graph()) {
            let n = g.node_count();
            let reference = floyd(n, &g.edges());
            let t = HopTable::new(&g);
            for a in 0..n as u32 {
                for b in 0..n as u32 {
                    let dab = t.get(NodeId(a), NodeId(b));
                    prop_assert_eq!(dab, reference[a as usize][b as usize]);
                    prop_assert_eq!(dab, t.get(NodeId(b), NodeId(a)));
                    for c in 0..n as u32 {
                        let (x, y, z) = (dab.unwrap(), t.get(NodeId(b), NodeId(c)).unwrap(), t.get(NodeId(a), NodeId(c)).unwrap());
                        prop_assert!(z <= x + y);
                    }
                }
            }
        }

        #[test]
        fn views_are_monotone_in_radius(g in arb_graph(), owner in 0u32..3, k in 1u32..5) {
            let small: BTreeSet<_> = view_of(&g, NodeId(owner), k).edges().into_iter().collect();
            let large: BTreeSet<_> = view_of(&g, NodeId(owner), k + 1).edges().into_iter().collect();
            prop_assert!(small.is_subset(&large));
            // an edge whose endpoints both sit at the diameter needs one extra hop of radius
            let diam = g.diameter().unwrap();
            prop_assert_eq!(view_of(&g, NodeId(owner), diam + 1).edges(), g.edges());
        }

        #[test]
        fn churn_is_reproducible_and_connected(g in arb_graph(), p in 0.0f64..1.0, seed in any::<u64>()) {
            let a = churn(&g, p, seed);
            prop_assert_eq!(a.edges(), churn(&g, p, seed).edges());
            prop_assert!(a.is_connected());
            for gw in g.gateways() {
                prop_assert_eq!(a.neighbors(gw), g.neighbors(gw));
            }
        }
    }
}
