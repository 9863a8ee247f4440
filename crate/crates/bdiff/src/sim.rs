//! Seeded synthetic scenarios, the comparison pipelines and error metrics.

use std::fmt;

use bdiff_core::diffusion::{
    incremental_phase, spatial_phase, DiffusionConfig, EstimateSource, IncrementalMode, NodeState, SpatialMode,
};
use bdiff_core::graph::{Network, NodeId, TopologySpec, WeightStrategy};
use bdiff_core::nig::{NigVForm, Observation};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{ConfigError, Result};
use crate::rng::{substream, Purpose};

pub const DEFAULT_PRIOR_EPS: f64 = 1e-3;

/// A comparison pipeline; the name is its CSV label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pipeline {
    Centralized,
    Diffusion,
    Incremental,
    Noncooperative,
}

impl Pipeline {
    /// Alphabetical, which is also the CSV sort order.
    pub const ALL: [Pipeline; 4] = [
        Pipeline::Centralized,
        Pipeline::Diffusion,
        Pipeline::Incremental,
        Pipeline::Noncooperative,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Centralized => "centralized",
            Pipeline::Diffusion => "diffusion",
            Pipeline::Incremental => "incremental",
            Pipeline::Noncooperative => "noncooperative",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-phase node scheduling. Both produce bit-identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Sequential,
    Parallel,
}

/// A complete, validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub theta_true: Vec<f64>,
    /// Per-node noise standard deviation `σ_k`.
    pub noise_std: Vec<f64>,
    pub topology: TopologySpec,
    pub incremental_weights: WeightStrategy,
    pub spatial_weights: WeightStrategy,
    pub spatial_mode: SpatialMode,
    pub incremental_mode: IncrementalMode,
    pub estimate_source: EstimateSource,
    pub steps: usize,
    pub seed: u64,
    pub prior_eps: f64,
    pub prior_nu: f64,
    pub pipelines: Vec<Pipeline>,
}

impl Scenario {
    /// Defaults for everything except the data-generating essentials.
    pub fn new(topology: TopologySpec, theta_true: Vec<f64>, noise_std: f64, steps: usize, seed: u64) -> Self {
        let nodes = topology.node_count();
        let n = theta_true.len();
        Scenario {
            theta_true,
            noise_std: vec![noise_std; nodes],
            topology,
            incremental_weights: WeightStrategy::Metropolis,
            spatial_weights: WeightStrategy::Metropolis,
            spatial_mode: SpatialMode::EstimateCombination,
            incremental_mode: IncrementalMode::Neighbourhood,
            estimate_source: EstimateSource::Information,
            steps,
            seed,
            prior_eps: DEFAULT_PRIOR_EPS,
            prior_nu: (n + 2) as f64,
            pipelines: Pipeline::ALL.to_vec(),
        }
    }

    pub fn order(&self) -> usize {
        self.theta_true.len()
    }

    pub fn node_count(&self) -> usize {
        self.topology.node_count()
    }

    pub fn validate(&self) -> std::result::Result<(), ConfigError> {
        let m = self.node_count();
        if m == 0 {
            return Err(ConfigError::invalid("nodes", "must be at least 1"));
        }
        if self.theta_true.is_empty() {
            return Err(ConfigError::invalid("theta_true", "model order n must be at least 1"));
        }
        if self.theta_true.iter().any(|x| !x.is_finite()) {
            return Err(ConfigError::invalid("theta_true", "entries must be finite"));
        }
        if self.noise_std.len() != m {
            return Err(ConfigError::invalid(
                "noise_std",
                format!("{} values for {m} nodes", self.noise_std.len()),
            ));
        }
        if let Some((i, s)) = self.noise_std.iter().enumerate().find(|(_, s)| !(**s > 0.0 && s.is_finite())) {
            return Err(ConfigError::invalid(
                "noise_std",
                format!("sigma of node {} is {s}; every sigma must be > 0", i + 1),
            ));
        }
        if self.steps == 0 {
            return Err(ConfigError::invalid("steps", "T must be at least 1"));
        }
        if !(self.prior_eps > 0.0 && self.prior_eps.is_finite()) {
            return Err(ConfigError::invalid("prior_eps", "must be > 0"));
        }
        if !(self.prior_nu > 0.0 && self.prior_nu.is_finite()) {
            return Err(ConfigError::invalid("prior_nu", "must be > 0"));
        }
        if self.pipelines.is_empty() {
            return Err(ConfigError::invalid("pipelines", "select at least one pipeline"));
        }
        if let TopologySpec::RandomGeometric { radius, .. } = self.topology {
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(ConfigError::invalid("topology.radius", "must be > 0"));
            }
        }
        Ok(())
    }

    pub fn noise_vars(&self) -> Vec<f64> {
        self.noise_std.iter().map(|s| s * s).collect()
    }

    pub fn prior(&self) -> Result<NigVForm> {
        Ok(NigVForm::init(self.order(), self.prior_eps, self.prior_nu)?)
    }

    pub fn build_network(&self) -> Result<Network> {
        let mut rng = substream(self.seed, Purpose::Topology, 0, 0);
        Ok(self.topology.build(&mut rng)?)
    }

    /// Materializes the diffusion configuration on `net`.
    pub fn diffusion_config(&self, net: &Network) -> Result<DiffusionConfig> {
        let vars = self.noise_vars();
        let c = self.incremental_weights.weights(net, Some(&vars))?;
        let a = self.spatial_weights.weights(net, Some(&vars))?;
        Ok(DiffusionConfig::new(c, a)
            .with_spatial_mode(self.spatial_mode)
            .with_incremental_mode(self.incremental_mode)
            .with_estimate_source(self.estimate_source))
    }

    fn mirrored(&self) -> bool {
        self.estimate_source == EstimateSource::Covariance
    }
}

/// Observations of every node at step `t`: `ψ ~ N(0, I)`, `ε ~ N(0, σ_k²)`,
/// `y = ψᵀθ + ε`. Depends only on `(seed, t, k)`.
pub fn generate_step_data(sc: &Scenario, t: usize) -> Vec<Observation> {
    (0..sc.node_count())
        .map(|i| {
            let node = (i + 1) as u64;
            let mut reg = substream(sc.seed, Purpose::Regressor, node, t as u64);
            let psi: Vec<f64> = (0..sc.order()).map(|_| reg.sample(StandardNormal)).collect();
            let mut noise = substream(sc.seed, Purpose::Noise, node, t as u64);
            let eps: f64 = noise.sample(StandardNormal);
            let y = psi.iter().zip(&sc.theta_true).map(|(p, th)| p * th).sum::<f64>() + sc.noise_std[i] * eps;
            Observation::new(y, psi)
        })
        .collect()
}

/// Metrics of one pipeline at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub t: usize,
    pub pipeline: Pipeline,
    /// `‖θ̂_k − θ‖²`, indexed by node.
    pub sq_error: Vec<f64>,
    /// Mean of `sq_error`.
    pub msd: f64,
    pub sigma2_hat: Vec<f64>,
}

impl MetricsRow {
    pub fn from_estimates<'a>(
        t: usize,
        pipeline: Pipeline,
        estimates: impl IntoIterator<Item = (&'a [f64], f64)>,
        theta_true: &[f64],
    ) -> Self {
        let (sq_error, sigma2_hat): (Vec<f64>, Vec<f64>) = estimates
            .into_iter()
            .map(|(th, s2)| (squared_error(th, theta_true), s2))
            .unzip();
        let msd = mean(&sq_error);
        MetricsRow {
            t,
            pipeline,
            sq_error,
            msd,
            sigma2_hat,
        }
    }

    fn from_states(t: usize, pipeline: Pipeline, states: &[NodeState], theta_true: &[f64]) -> Self {
        Self::from_estimates(
            t,
            pipeline,
            states.iter().map(|s| (s.theta_hat.as_slice(), s.sigma2_hat)),
            theta_true,
        )
    }
}

pub fn squared_error(estimate: &[f64], truth: &[f64]) -> f64 {
    estimate.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Network mean-square deviation `(1/M) Σ_k ‖θ̂_k − θ‖²`.
pub fn compute_msd<'a>(estimates: impl IntoIterator<Item = &'a [f64]>, theta_true: &[f64]) -> f64 {
    let errs: Vec<f64> = estimates.into_iter().map(|e| squared_error(e, theta_true)).collect();
    mean(&errs)
}

fn sweep<F>(m: usize, exec: Execution, f: F) -> bdiff_core::Result<Vec<NodeState>>
where
    F: Fn(NodeId) -> bdiff_core::Result<NodeState> + Sync + Send,
{
    match exec {
        Execution::Sequential => (1..=m).map(NodeId).map(&f).collect(),
        Execution::Parallel => (1..=m).into_par_iter().map(NodeId).map(&f).collect(),
    }
}

/// Final node states of a pipeline, kept for state dumps.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    pub rows: Vec<MetricsRow>,
    pub final_stats: Vec<NigVForm>,
}

fn run_network(
    sc: &Scenario,
    net: &Network,
    cfg: &DiffusionConfig,
    exec: Execution,
    incremental_label: Option<Pipeline>,
    spatial_label: Option<Pipeline>,
) -> Result<PipelineRun> {
    cfg.validate(net)?;
    let m = net.node_count();
    let mut states = NodeState::uniform(net, &sc.prior()?, sc.mirrored())?;
    let mut rows = Vec::new();
    for t in 1..=sc.steps {
        let data = generate_step_data(sc, t);
        let mid = sweep(m, exec, |k| incremental_phase(k, &states, net, cfg, &data))?;
        if let Some(label) = incremental_label {
            rows.push(MetricsRow::from_states(t, label, &mid, &sc.theta_true));
        }
        states = sweep(m, exec, |k| spatial_phase(k, &mid, net, cfg))?;
        if let Some(label) = spatial_label {
            rows.push(MetricsRow::from_states(t, label, &states, &sc.theta_true));
        }
    }
    Ok(PipelineRun {
        rows,
        final_stats: states.into_iter().map(|s| s.stats).collect(),
    })
}

/// Every node estimates from its own data only.
pub fn run_noncooperative(sc: &Scenario, exec: Execution) -> Result<PipelineRun> {
    let net = sc.build_network()?;
    let cfg = DiffusionConfig::noncooperative(&net).with_estimate_source(sc.estimate_source);
    run_network(sc, &net, &cfg, exec, None, Some(Pipeline::Noncooperative))
}

/// Full two-phase diffusion. Rows are labelled `incremental` after the data
/// phase and `diffusion` after the spatial phase.
pub fn run_diffusion(sc: &Scenario, exec: Execution) -> Result<PipelineRun> {
    let net = sc.build_network()?;
    let cfg = sc.diffusion_config(&net)?;
    run_network(sc, &net, &cfg, exec, Some(Pipeline::Incremental), Some(Pipeline::Diffusion))
}

/// One estimator fed every node's observation with unit weight each step;
/// its estimate is reported for all nodes.
pub fn run_centralized(sc: &Scenario) -> Result<PipelineRun> {
    let m = sc.node_count();
    let mut stats = sc.prior()?;
    let mut rows = Vec::with_capacity(sc.steps);
    for t in 1..=sc.steps {
        for obs in generate_step_data(sc, t) {
            stats = stats.bayes_update(&obs)?;
        }
        let theta = stats.point_estimate_theta()?;
        let s2 = stats.estimate_noise_variance()?;
        rows.push(MetricsRow::from_estimates(
            t,
            Pipeline::Centralized,
            std::iter::repeat_n((theta.as_slice(), s2), m),
            &sc.theta_true,
        ));
    }
    Ok(PipelineRun {
        rows,
        final_stats: vec![stats],
    })
}

/// Everything a scenario run produces.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutput {
    /// Sorted by `(t, pipeline)`.
    pub rows: Vec<MetricsRow>,
    pub final_stats: Vec<(Pipeline, Vec<NigVForm>)>,
}

impl RunOutput {
    pub fn rows_for(&self, p: Pipeline) -> impl Iterator<Item = &MetricsRow> {
        self.rows.iter().filter(move |r| r.pipeline == p)
    }

    pub fn final_row(&self, p: Pipeline) -> Option<&MetricsRow> {
        self.rows_for(p).last()
    }
}

/// Runs the scenario's selected pipelines.
pub fn run_scenario(sc: &Scenario, exec: Execution) -> Result<RunOutput> {
    sc.validate()?;
    let wants = |p| sc.pipelines.contains(&p);
    let mut out = RunOutput::default();
    let mut absorb = |run: PipelineRun, stats_label: Pipeline| {
        out.rows.extend(run.rows.into_iter().filter(|r| wants(r.pipeline)));
        out.final_stats.push((stats_label, run.final_stats));
    };
    if wants(Pipeline::Centralized) {
        absorb(run_centralized(sc)?, Pipeline::Centralized);
    }
    if wants(Pipeline::Diffusion) || wants(Pipeline::Incremental) {
        let label = if wants(Pipeline::Diffusion) {
            Pipeline::Diffusion
        } else {
            Pipeline::Incremental
        };
        absorb(run_diffusion(sc, exec)?, label);
    }
    if wants(Pipeline::Noncooperative) {
        absorb(run_noncooperative(sc, exec)?, Pipeline::Noncooperative);
    }
    out.rows.sort_by_key(|r| (r.t, r.pipeline));
    Ok(out)
}
