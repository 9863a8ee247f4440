//! Undirected node networks, closed neighbourhoods and the row-stochastic
//! weight tables used by the incremental (`c`) and spatial (`a`) updates.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand_core::RngCore;

use crate::error::{Error, Result};

/// 1-based node identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    /// Zero-based position of the node in per-node vectors.
    pub fn index(self) -> usize {
        self.0 - 1
    }

    pub fn from_index(i: usize) -> Self {
        NodeId(i + 1)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Undirected simple graph on nodes `1..=M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    // open neighbour lists, zero-based, sorted
    adjacent: Vec<Vec<usize>>,
}

impl Network {
    /// Builds a network from unordered pairs. Repeated pairs (in either
    /// orientation) collapse to one edge; self-loops are rejected.
    pub fn new(node_count: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::param("node_count", "must be positive"));
        }
        let mut sets = vec![BTreeSet::new(); node_count];
        for (a, b) in edges {
            for id in [a, b] {
                if id.0 == 0 || id.0 > node_count {
                    return Err(Error::InvalidNode {
                        node: id,
                        count: node_count,
                    });
                }
            }
            if a == b {
                return Err(Error::param("edges", format!("self-loop at node {a}")));
            }
            sets[a.index()].insert(b.index());
            sets[b.index()].insert(a.index());
        }
        Ok(Network {
            adjacent: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    pub fn edgeless(node_count: usize) -> Self {
        Network {
            adjacent: vec![Vec::new(); node_count.max(1)],
        }
    }

    pub fn path(node_count: usize) -> Self {
        let m = node_count.max(1);
        Self::new(m, (1..m).map(|i| (NodeId(i), NodeId(i + 1)))).expect("valid path")
    }

    pub fn ring(node_count: usize) -> Self {
        let m = node_count.max(1);
        let closing = (m > 2).then_some((NodeId(m), NodeId(1)));
        Self::new(m, (1..m).map(|i| (NodeId(i), NodeId(i + 1))).chain(closing)).expect("valid ring")
    }

    pub fn complete(node_count: usize) -> Self {
        let m = node_count.max(1);
        let edges = (1..=m).flat_map(|i| ((i + 1)..=m).map(move |j| (NodeId(i), NodeId(j))));
        Self::new(m, edges).expect("valid complete graph")
    }

    pub fn node_count(&self) -> usize {
        self.adjacent.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (1..=self.node_count()).map(NodeId)
    }

    /// Unordered edges with `a < b`, ascending.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.adjacent
            .iter()
            .enumerate()
            .flat_map(|(i, adj)| {
                adj.iter()
                    .filter(move |&&j| j > i)
                    .map(move |&j| (NodeId::from_index(i), NodeId::from_index(j)))
            })
            .collect()
    }

    pub fn check_node(&self, k: NodeId) -> Result<()> {
        if k.0 == 0 || k.0 > self.node_count() {
            Err(Error::InvalidNode {
                node: k,
                count: self.node_count(),
            })
        } else {
            Ok(())
        }
    }

    /// Number of adjacent nodes, excluding `k` itself.
    pub fn degree(&self, k: NodeId) -> Result<usize> {
        self.check_node(k)?;
        Ok(self.adjacent[k.index()].len())
    }

    pub fn are_adjacent(&self, a: NodeId, b: NodeId) -> bool {
        a.0 >= 1
            && a.0 <= self.node_count()
            && self.adjacent[a.index()].binary_search(&b.index()).is_ok()
    }

    /// `{k} ∪ {l : (k, l) adjacent}`, ascending.
    pub fn closed_neighbourhood(&self, k: NodeId) -> Result<Vec<NodeId>> {
        self.check_node(k)?;
        let adj = &self.adjacent[k.index()];
        let mut out = Vec::with_capacity(adj.len() + 1);
        let mut inserted = false;
        for &j in adj {
            if !inserted && j > k.index() {
                out.push(k);
                inserted = true;
            }
            out.push(NodeId::from_index(j));
        }
        if !inserted {
            out.push(k);
        }
        Ok(out)
    }

    /// `card(N_k)`.
    pub fn closed_degree(&self, k: NodeId) -> Result<usize> {
        Ok(self.degree(k)? + 1)
    }

    pub fn is_connected(&self) -> bool {
        let m = self.node_count();
        let mut seen = vec![false; m];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &j in &self.adjacent[i] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == m
    }
}

/// Per-node convex weights over the closed neighbourhood: row `k` holds
/// `(l, w_{l,k})` for every `l ∈ N_k`, ascending in `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighbourWeights {
    rows: Vec<Vec<(NodeId, f64)>>,
}

/// Tolerance on row sums when weights are supplied from outside.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

impl NeighbourWeights {
    /// Validates support (exactly `N_k`), non-negativity and unit row sums.
    pub fn from_rows(net: &Network, rows: Vec<Vec<(NodeId, f64)>>) -> Result<Self> {
        if rows.len() != net.node_count() {
            return Err(Error::param(
                "weights",
                format!("{} rows for {} nodes", rows.len(), net.node_count()),
            ));
        }
        let mut sorted = Vec::with_capacity(rows.len());
        for (i, mut row) in rows.into_iter().enumerate() {
            let k = NodeId::from_index(i);
            row.sort_by_key(|&(l, _)| l);
            let nbhd = net.closed_neighbourhood(k)?;
            if row.len() != nbhd.len() || row.iter().zip(&nbhd).any(|(&(l, _), &m)| l != m) {
                return Err(Error::param(
                    "weights",
                    format!("row {k} is not supported exactly on its closed neighbourhood"),
                ));
            }
            if let Some(&(l, w)) = row.iter().find(|(_, w)| !(*w >= 0.0 && *w <= 1.0)) {
                return Err(Error::param("weights", format!("w[{l},{k}] = {w} outside [0, 1]")));
            }
            let sum: f64 = row.iter().map(|(_, w)| w).sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidWeights { node: k, sum });
            }
            sorted.push(row);
        }
        Ok(NeighbourWeights { rows: sorted })
    }

    /// Weight 1 on the node itself (no cooperation).
    pub fn self_indicator(net: &Network) -> Self {
        NeighbourWeights {
            rows: net
                .nodes()
                .map(|k| {
                    net.closed_neighbourhood(k)
                        .expect("node in range")
                        .into_iter()
                        .map(|l| (l, if l == k { 1.0 } else { 0.0 }))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, k: NodeId) -> &[(NodeId, f64)] {
        &self.rows[k.index()]
    }

    /// `w_{l,k}`, or `None` when `l ∉ N_k`.
    pub fn weight(&self, l: NodeId, k: NodeId) -> Option<f64> {
        let row = self.rows.get(k.index())?;
        row.binary_search_by_key(&l, |&(m, _)| m).ok().map(|i| row[i].1)
    }

    pub fn rows(&self) -> impl Iterator<Item = (NodeId, &[(NodeId, f64)])> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| (NodeId::from_index(i), r.as_slice()))
    }

    /// True when every row is supported on the matching closed neighbourhood.
    pub fn matches(&self, net: &Network) -> bool {
        self.rows.len() == net.node_count()
            && net.nodes().all(|k| {
                let nb = net.closed_neighbourhood(k).expect("node in range");
                let row = self.row(k);
                row.len() == nb.len() && row.iter().zip(&nb).all(|(&(l, _), &m)| l == m)
            })
    }
}

/// `w_{l,k} = 1 / card(N_k)`.
pub fn uniform_weights(net: &Network) -> NeighbourWeights {
    build_rows(net, |_, nb| {
        let w = 1.0 / nb.len() as f64;
        nb.iter().map(|&l| (l, w)).collect()
    })
}

/// Metropolis rule on open degrees `d`: `1 / (1 + max(d_k, d_l))` for each
/// neighbour, remainder on the diagonal.
pub fn metropolis_weights(net: &Network) -> NeighbourWeights {
    build_rows(net, |k, nb| {
        let dk = net.adjacent[k.index()].len();
        let mut off = 0.0;
        let mut row: Vec<(NodeId, f64)> = nb
            .iter()
            .map(|&l| {
                if l == k {
                    (l, 0.0)
                } else {
                    let dl = net.adjacent[l.index()].len();
                    let w = 1.0 / (1 + dk.max(dl)) as f64;
                    off += w;
                    (l, w)
                }
            })
            .collect();
        let own = row.iter_mut().find(|(l, _)| *l == k).expect("k in N_k");
        own.1 = 1.0 - off;
        row
    })
}

/// `w_{l,k} = card(N_l) / Σ_{m∈N_k} card(N_m)`.
pub fn relative_degree_weights(net: &Network) -> NeighbourWeights {
    build_rows(net, |_, nb| {
        normalized(nb.iter().map(|&l| (l, (net.adjacent[l.index()].len() + 1) as f64)))
    })
}

/// `w_{l,k} ∝ card(N_l) / σ_l²` over `l ∈ N_k`.
pub fn relative_degree_variance_weights(net: &Network, noise_vars: &[f64]) -> Result<NeighbourWeights> {
    if noise_vars.len() != net.node_count() {
        return Err(Error::param(
            "noise_vars",
            format!("{} variances for {} nodes", noise_vars.len(), net.node_count()),
        ));
    }
    if let Some((i, v)) = noise_vars.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::param(
            "noise_vars",
            format!("variance of node {} is {v}, must be positive", i + 1),
        ));
    }
    Ok(build_rows(net, |_, nb| {
        normalized(
            nb.iter()
                .map(|&l| (l, (net.adjacent[l.index()].len() + 1) as f64 / noise_vars[l.index()])),
        )
    }))
}

fn normalized(raw: impl Iterator<Item = (NodeId, f64)>) -> Vec<(NodeId, f64)> {
    let raw: Vec<_> = raw.collect();
    let total: f64 = raw.iter().map(|(_, w)| w).sum();
    raw.into_iter().map(|(l, w)| (l, w / total)).collect()
}

fn build_rows(net: &Network, mut f: impl FnMut(NodeId, &[NodeId]) -> Vec<(NodeId, f64)>) -> NeighbourWeights {
    NeighbourWeights {
        rows: net
            .nodes()
            .map(|k| {
                let nb = net.closed_neighbourhood(k).expect("node in range");
                f(k, &nb)
            })
            .collect(),
    }
}

/// Named weighting rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightStrategy {
    Uniform,
    Metropolis,
    RelativeDegree,
    RelativeDegreeVariance,
}

impl WeightStrategy {
    pub const ALL: [WeightStrategy; 4] = [
        WeightStrategy::Uniform,
        WeightStrategy::Metropolis,
        WeightStrategy::RelativeDegree,
        WeightStrategy::RelativeDegreeVariance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WeightStrategy::Uniform => "uniform",
            WeightStrategy::Metropolis => "metropolis",
            WeightStrategy::RelativeDegree => "relative-degree",
            WeightStrategy::RelativeDegreeVariance => "relative-degree-variance",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    /// Materializes the table. Only the variance-aware rule reads
    /// `noise_vars`, and it requires them.
    pub fn weights(self, net: &Network, noise_vars: Option<&[f64]>) -> Result<NeighbourWeights> {
        match self {
            WeightStrategy::Uniform => Ok(uniform_weights(net)),
            WeightStrategy::Metropolis => Ok(metropolis_weights(net)),
            WeightStrategy::RelativeDegree => Ok(relative_degree_weights(net)),
            WeightStrategy::RelativeDegreeVariance => {
                let vars = noise_vars.ok_or_else(|| Error::param("noise_vars", "required by relative-degree-variance"))?;
                relative_degree_variance_weights(net, vars)
            }
        }
    }
}

impl fmt::Display for WeightStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Redraw budget for connected random geometric graphs.
pub const MAX_GEOMETRIC_ATTEMPTS: usize = 100;

/// How to build a [`Network`].
#[derive(Debug, Clone, PartialEq)]
pub enum TopologySpec {
    EdgeList { nodes: usize, edges: Vec<(NodeId, NodeId)> },
    Ring { nodes: usize },
    Path { nodes: usize },
    FullyConnected { nodes: usize },
    /// Points uniform in the unit square, linked when within `radius`.
    RandomGeometric { nodes: usize, radius: f64 },
}

impl TopologySpec {
    pub fn node_count(&self) -> usize {
        match *self {
            TopologySpec::EdgeList { nodes, .. }
            | TopologySpec::Ring { nodes }
            | TopologySpec::Path { nodes }
            | TopologySpec::FullyConnected { nodes }
            | TopologySpec::RandomGeometric { nodes, .. } => nodes,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            TopologySpec::EdgeList { .. } => "edge-list",
            TopologySpec::Ring { .. } => "ring",
            TopologySpec::Path { .. } => "path",
            TopologySpec::FullyConnected { .. } => "fully-connected",
            TopologySpec::RandomGeometric { .. } => "random-geometric",
        }
    }

    /// Builds the network. Only the random geometric kind draws from `rng`;
    /// it redraws until connected, up to [`MAX_GEOMETRIC_ATTEMPTS`] times.
    pub fn build<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<Network> {
        let nodes = self.node_count();
        if nodes == 0 {
            return Err(Error::param("nodes", "must be positive"));
        }
        match self {
            TopologySpec::EdgeList { edges, .. } => Network::new(nodes, edges.iter().copied()),
            TopologySpec::Ring { .. } => Ok(Network::ring(nodes)),
            TopologySpec::Path { .. } => Ok(Network::path(nodes)),
            TopologySpec::FullyConnected { .. } => Ok(Network::complete(nodes)),
            &TopologySpec::RandomGeometric { radius, .. } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(Error::param("radius", format!("{radius} must be positive")));
                }
                for _ in 0..MAX_GEOMETRIC_ATTEMPTS {
                    let net = random_geometric(nodes, radius, rng);
                    if net.is_connected() {
                        return Ok(net);
                    }
                }
                Err(Error::Disconnected {
                    attempts: MAX_GEOMETRIC_ATTEMPTS,
                })
            }
        }
    }
}

fn random_geometric<R: RngCore + ?Sized>(nodes: usize, radius: f64, rng: &mut R) -> Network {
    let pts: Vec<(f64, f64)> = (0..nodes).map(|_| (unit_f64(rng), unit_f64(rng))).collect();
    let r2 = radius * radius;
    let mut edges = Vec::new();
    for i in 0..nodes {
        for j in (i + 1)..nodes {
            let (dx, dy) = (pts[i].0 - pts[j].0, pts[i].1 - pts[j].1);
            if dx * dx + dy * dy <= r2 {
                edges.push((NodeId::from_index(i), NodeId::from_index(j)));
            }
        }
    }
    Network::new(nodes, edges).expect("generated edges are valid")
}

/// Uniform draw in `[0, 1)` with 53 random bits.
fn unit_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
