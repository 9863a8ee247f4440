//! Per-node diffusion estimator and the two-phase network step.
//!
//! A step first lets every node absorb the weighted observations of its
//! closed neighbourhood (incremental phase), then lets every node combine the
//! results of its neighbours (spatial phase). Each phase reads only the
//! snapshot produced by the previous one, so node order never matters.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Phase, Result};
use crate::graph::{NeighbourWeights, Network, NodeId, ROW_SUM_TOLERANCE};
use crate::linalg::Matrix;
use crate::nig::{NigCForm, NigVForm, Observation};

/// What a node combines in the spatial phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpatialMode {
    /// Convex combination of neighbours' point estimates. Statistics are
    /// left untouched.
    #[default]
    EstimateCombination,
    /// Convex combination of neighbours' `(V, ν)`, reused as the next prior.
    /// A heuristic stand-in for the exact KL-optimal merge.
    StatisticAveraging,
    Off,
}

impl SpatialMode {
    pub const ALL: [SpatialMode; 3] = [
        SpatialMode::EstimateCombination,
        SpatialMode::StatisticAveraging,
        SpatialMode::Off,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpatialMode::EstimateCombination => "estimate-combination",
            SpatialMode::StatisticAveraging => "statistic-averaging",
            SpatialMode::Off => "off",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }
}

/// Whose data a node absorbs in the incremental phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IncrementalMode {
    #[default]
    Neighbourhood,
    /// Own observation only, with weight 1.
    SelfOnly,
}

impl IncrementalMode {
    pub fn name(self) -> &'static str {
        match self {
            IncrementalMode::Neighbourhood => "neighbourhood",
            IncrementalMode::SelfOnly => "self-only",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [IncrementalMode::Neighbourhood, IncrementalMode::SelfOnly]
            .into_iter()
            .find(|m| m.name() == name)
    }
}

/// Which statistic supplies the post-incremental point estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EstimateSource {
    /// Solve `V_ψ θ = V_yψ`.
    #[default]
    Information,
    /// Read `θ̂` and `Λ / ν` from the mirrored C-form (needs a mirror).
    Covariance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionConfig {
    pub incremental_weights: NeighbourWeights,
    pub spatial_weights: NeighbourWeights,
    pub spatial_mode: SpatialMode,
    pub incremental_mode: IncrementalMode,
    pub estimate_source: EstimateSource,
}

impl DiffusionConfig {
    /// Neighbourhood data, estimate combination, V-form estimates.
    pub fn new(incremental_weights: NeighbourWeights, spatial_weights: NeighbourWeights) -> Self {
        DiffusionConfig {
            incremental_weights,
            spatial_weights,
            spatial_mode: SpatialMode::default(),
            incremental_mode: IncrementalMode::default(),
            estimate_source: EstimateSource::default(),
        }
    }

    /// Each node on its own: singleton data, no spatial phase.
    pub fn noncooperative(net: &Network) -> Self {
        let own = NeighbourWeights::self_indicator(net);
        DiffusionConfig {
            incremental_weights: own.clone(),
            spatial_weights: own,
            spatial_mode: SpatialMode::Off,
            incremental_mode: IncrementalMode::SelfOnly,
            estimate_source: EstimateSource::default(),
        }
    }

    pub fn with_spatial_mode(mut self, mode: SpatialMode) -> Self {
        self.spatial_mode = mode;
        self
    }

    pub fn with_incremental_mode(mut self, mode: IncrementalMode) -> Self {
        self.incremental_mode = mode;
        self
    }

    pub fn with_estimate_source(mut self, source: EstimateSource) -> Self {
        self.estimate_source = source;
        self
    }

    pub fn validate(&self, net: &Network) -> Result<()> {
        if !self.incremental_weights.matches(net) {
            return Err(Error::param("incremental_weights", "table does not match the network"));
        }
        if !self.spatial_weights.matches(net) {
            return Err(Error::param("spatial_weights", "table does not match the network"));
        }
        Ok(())
    }
}

/// A node's statistics and current estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub id: NodeId,
    /// Canonical statistics.
    pub stats: NigVForm,
    /// Reparameterized copy, updated by rank-one steps alongside `stats`.
    pub mirror: Option<NigCForm>,
    pub theta_hat: Vec<f64>,
    pub sigma2_hat: f64,
}

impl NodeState {
    pub fn new(id: NodeId, prior: NigVForm, mirrored: bool) -> Result<Self> {
        let mirror = if mirrored { Some(prior.reparameterize()?) } else { None };
        let theta_hat = prior.point_estimate_theta()?;
        let sigma2_hat = prior.estimate_noise_variance()?;
        Ok(NodeState {
            id,
            stats: prior,
            mirror,
            theta_hat,
            sigma2_hat,
        })
    }

    /// One state per network node, all starting from `prior`.
    pub fn uniform(net: &Network, prior: &NigVForm, mirrored: bool) -> Result<Vec<Self>> {
        net.nodes().map(|k| NodeState::new(k, prior.clone(), mirrored)).collect()
    }

    fn refresh_estimates(&mut self, source: EstimateSource) -> Result<()> {
        match source {
            EstimateSource::Information => {
                self.theta_hat = self.stats.point_estimate_theta()?;
                self.sigma2_hat = self.stats.estimate_noise_variance()?;
            }
            EstimateSource::Covariance => {
                let cf = self
                    .mirror
                    .as_ref()
                    .ok_or_else(|| Error::param("estimate_source", "covariance estimates need a mirrored C-form"))?;
                self.theta_hat = cf.theta_hat().to_vec();
                self.sigma2_hat = cf.estimate_noise_variance()?;
            }
        }
        Ok(())
    }
}

/// Point estimate sent to neighbours in the spatial phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateMsg<'a> {
    pub from: NodeId,
    pub theta_hat: &'a [f64],
    pub sigma2_hat: f64,
}

impl<'a> From<&'a NodeState> for EstimateMsg<'a> {
    fn from(s: &'a NodeState) -> Self {
        EstimateMsg {
            from: s.id,
            theta_hat: &s.theta_hat,
            sigma2_hat: s.sigma2_hat,
        }
    }
}

fn check_row(node: NodeId, row: &[(NodeId, f64)]) -> Result<()> {
    let sum: f64 = row.iter().map(|(_, w)| w).sum();
    if !((sum - 1.0).abs() <= ROW_SUM_TOLERANCE) {
        return Err(Error::InvalidWeights { node, sum });
    }
    Ok(())
}

fn lookup<T>(node: NodeId, items: &[(NodeId, T)], l: NodeId) -> Result<&T> {
    items
        .iter()
        .find(|(m, _)| *m == l)
        .map(|(_, t)| t)
        .ok_or(Error::IncompleteNeighbourhood { node, missing: l })
}

/// Absorbs `Σ_l c_{l,k} [y_l; ψ_l][y_l; ψ_l]ᵀ` into the node's statistics,
/// in ascending `l`, and advances `ν` by one.
///
/// The point estimate is recomputed from the updated V-form. When a C-form
/// mirror is present it receives the same sequence of weighted rank-one
/// updates.
pub fn incremental_update(
    node: &NodeState,
    data: &[(NodeId, &Observation)],
    c_row: &[(NodeId, f64)],
) -> Result<NodeState> {
    incremental_update_with(node, data, c_row, EstimateSource::Information)
}

pub fn incremental_update_with(
    node: &NodeState,
    data: &[(NodeId, &Observation)],
    c_row: &[(NodeId, f64)],
    source: EstimateSource,
) -> Result<NodeState> {
    check_row(node.id, c_row)?;
    let mut next = node.clone();
    for &(l, c) in c_row {
        let obs = lookup(node.id, data, l)?;
        next.stats.absorb(obs, c)?;
        if let Some(cf) = next.mirror.as_mut() {
            cf.absorb(obs, c)?;
        }
    }
    next.stats.set_nu(node.stats.nu() + 1.0);
    if let Some(cf) = next.mirror.as_mut() {
        cf.set_nu(node.stats.nu() + 1.0);
    }
    next.refresh_estimates(source)?;
    Ok(next)
}

/// Replaces the node's point estimates by the `a`-weighted combination of
/// its neighbours'. Statistics are not modified.
pub fn spatial_update(node: &NodeState, estimates: &[EstimateMsg<'_>], a_row: &[(NodeId, f64)]) -> Result<NodeState> {
    check_row(node.id, a_row)?;
    let n = node.theta_hat.len();
    let mut theta = alloc::vec![0.0; n];
    let mut sigma2 = 0.0;
    for &(l, a) in a_row {
        let msg = estimates
            .iter()
            .find(|m| m.from == l)
            .ok_or(Error::IncompleteNeighbourhood { node: node.id, missing: l })?;
        if msg.theta_hat.len() != n {
            return Err(Error::InvalidObservation {
                expected: n,
                found: msg.theta_hat.len(),
            });
        }
        for (t, x) in theta.iter_mut().zip(msg.theta_hat) {
            *t += a * x;
        }
        sigma2 += a * msg.sigma2_hat;
    }
    let mut next = node.clone();
    next.theta_hat = theta;
    next.sigma2_hat = sigma2;
    Ok(next)
}

/// Replaces the node's `(V, ν)` by the `a`-weighted average of its
/// neighbours' and refreshes estimates and mirror from the result.
pub fn spatial_statistic_average(
    node: &NodeState,
    stats: &[(NodeId, &NigVForm)],
    a_row: &[(NodeId, f64)],
) -> Result<NodeState> {
    spatial_statistic_average_with(node, stats, a_row, EstimateSource::Information)
}

pub fn spatial_statistic_average_with(
    node: &NodeState,
    stats: &[(NodeId, &NigVForm)],
    a_row: &[(NodeId, f64)],
    source: EstimateSource,
) -> Result<NodeState> {
    check_row(node.id, a_row)?;
    let size = node.stats.v().rows();
    let mut v = Matrix::zeros(size, size);
    let mut nu = 0.0;
    for &(l, a) in a_row {
        let s = lookup(node.id, stats, l)?;
        if s.v().rows() != size {
            return Err(Error::InvalidStatistics(format!(
                "neighbour {l} has statistics of order {}, expected {}",
                s.order(),
                size - 1
            )));
        }
        v.add_scaled(a, s.v());
        nu += a * s.nu();
    }
    v.symmetrize();
    let mut next = node.clone();
    next.stats = NigVForm::from_parts(v, nu)?;
    if next.mirror.is_some() {
        next.mirror = Some(next.stats.reparameterize()?);
    }
    next.refresh_estimates(source)?;
    Ok(next)
}

fn annotate(node: NodeId, phase: Phase) -> impl FnOnce(Error) -> Error {
    move |e| Error::Node {
        node,
        phase,
        source: Box::new(e),
    }
}

fn check_step(states: &[NodeState], net: &Network, cfg: &DiffusionConfig, step_data: &[Observation]) -> Result<()> {
    let m = net.node_count();
    if states.len() != m {
        return Err(Error::param("states", format!("{} states for {m} nodes", states.len())));
    }
    if step_data.len() != m {
        return Err(Error::param("step_data", format!("{} observations for {m} nodes", step_data.len())));
    }
    if let Some((i, s)) = states.iter().enumerate().find(|(i, s)| s.id != NodeId::from_index(*i)) {
        return Err(Error::param("states", format!("state at position {i} belongs to node {}", s.id)));
    }
    cfg.validate(net)
}

/// Incremental phase for node `k`, reading only `states` and `step_data`.
pub fn incremental_phase(
    k: NodeId,
    states: &[NodeState],
    net: &Network,
    cfg: &DiffusionConfig,
    step_data: &[Observation],
) -> Result<NodeState> {
    let node = &states[k.index()];
    let result = match cfg.incremental_mode {
        IncrementalMode::SelfOnly => {
            incremental_update_with(node, &[(k, &step_data[k.index()])], &[(k, 1.0)], cfg.estimate_source)
        }
        IncrementalMode::Neighbourhood => {
            let data: Vec<(NodeId, &Observation)> = net
                .closed_neighbourhood(k)?
                .into_iter()
                .map(|l| (l, &step_data[l.index()]))
                .collect();
            incremental_update_with(node, &data, cfg.incremental_weights.row(k), cfg.estimate_source)
        }
    };
    result.map_err(annotate(k, Phase::Incremental))
}

/// Spatial phase for node `k`, reading only the incremental-phase snapshot.
pub fn spatial_phase(k: NodeId, snapshot: &[NodeState], net: &Network, cfg: &DiffusionConfig) -> Result<NodeState> {
    let node = &snapshot[k.index()];
    let nbhd = net.closed_neighbourhood(k)?;
    let a_row = cfg.spatial_weights.row(k);
    let result = match cfg.spatial_mode {
        SpatialMode::Off => Ok(node.clone()),
        SpatialMode::EstimateCombination => {
            let msgs: Vec<EstimateMsg<'_>> = nbhd.iter().map(|l| EstimateMsg::from(&snapshot[l.index()])).collect();
            spatial_update(node, &msgs, a_row)
        }
        SpatialMode::StatisticAveraging => {
            let stats: Vec<(NodeId, &NigVForm)> = nbhd.iter().map(|&l| (l, &snapshot[l.index()].stats)).collect();
            spatial_statistic_average_with(node, &stats, a_row, cfg.estimate_source)
        }
    };
    result.map_err(annotate(k, Phase::Spatial))
}

/// Runs the incremental phase for every node.
pub fn incremental_sweep(
    states: &[NodeState],
    net: &Network,
    cfg: &DiffusionConfig,
    step_data: &[Observation],
) -> Result<Vec<NodeState>> {
    check_step(states, net, cfg, step_data)?;
    net.nodes().map(|k| incremental_phase(k, states, net, cfg, step_data)).collect()
}

/// Runs the spatial phase for every node over an incremental snapshot.
pub fn spatial_sweep(snapshot: &[NodeState], net: &Network, cfg: &DiffusionConfig) -> Result<Vec<NodeState>> {
    net.nodes().map(|k| spatial_phase(k, snapshot, net, cfg)).collect()
}

/// One full time step: incremental phase for all nodes, barrier, spatial
/// phase for all nodes.
pub fn network_step(
    states: &[NodeState],
    net: &Network,
    cfg: &DiffusionConfig,
    step_data: &[Observation],
) -> Result<Vec<NodeState>> {
    let snapshot = incremental_sweep(states, net, cfg, step_data)?;
    spatial_sweep(&snapshot, net, cfg)
}
