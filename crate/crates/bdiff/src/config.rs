//! Scenario files.
//!
//! TOML with top-level scenario keys, a `[topology]` table, an optional
//! `[weights]` table, an optional `[run]` table and per-node overrides under
//! `[node.<id>]`:
//!
//! ```toml
//! nodes = 20
//! theta_true = [0.3, -0.7]
//! noise_std = 0.1
//! steps = 500
//! seed = 42
//!
//! [topology]
//! kind = "random-geometric"
//! radius = 0.3
//!
//! [weights]
//! incremental = "metropolis"
//! spatial = "metropolis"
//!
//! [node.3]
//! noise_std = 0.5
//! ```
//!
//! Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bdiff_core::diffusion::{EstimateSource, IncrementalMode, SpatialMode};
use bdiff_core::graph::{NodeId, TopologySpec, WeightStrategy};
use serde::{Deserialize, Serialize};

use crate::edgelist::parse_edge_list;
use crate::error::{ConfigError, Error, Result};
use crate::sim::{Pipeline, Scenario, DEFAULT_PRIOR_EPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    nodes: usize,
    theta_true: Vec<f64>,
    noise_std: NoiseStd,
    steps: usize,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pipelines: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spatial_mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    incremental_mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    estimator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prior_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prior_nu: Option<f64>,
    topology: TopologyFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<WeightsFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    run: Option<RunFile>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    node: BTreeMap<String, NodeOverride>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum NoiseStd {
    Shared(f64),
    PerNode(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyFile {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    incremental: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spatial: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunFile {
    #[serde(default)]
    out: Option<String>,
    #[serde(default)]
    seeds: Option<usize>,
    #[serde(default)]
    sequential: Option<bool>,
    #[serde(default)]
    dump_state: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeOverride {
    #[serde(default)]
    noise_std: Option<f64>,
}

/// How to execute a scenario. Command-line flags override file values.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunConfig {
    pub scenario_path: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    /// Number of consecutive seeds, starting at the scenario seed.
    pub seeds: usize,
    pub sequential: bool,
    pub dump_state: bool,
}

fn pick<T: Copy>(field: &str, value: Option<&str>, default: T, lookup: impl Fn(&str) -> Option<T>, names: &[&str]) -> std::result::Result<T, ConfigError> {
    match value {
        None => Ok(default),
        Some(v) => lookup(v).ok_or_else(|| {
            ConfigError::invalid(field, format!("unknown value `{v}`; expected one of {}", names.join(", ")))
        }),
    }
}

fn estimator_from_name(name: &str) -> Option<EstimateSource> {
    match name {
        "information" => Some(EstimateSource::Information),
        "covariance" => Some(EstimateSource::Covariance),
        _ => None,
    }
}

fn estimator_name(source: EstimateSource) -> &'static str {
    match source {
        EstimateSource::Information => "information",
        EstimateSource::Covariance => "covariance",
    }
}

/// Parses and validates a scenario. `base_dir` resolves a relative
/// `edges_file`.
pub fn parse_config(text: &str, base_dir: Option<&Path>) -> Result<(Scenario, RunConfig)> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.message().to_string()))?;
    let m = file.nodes;
    if m == 0 {
        return Err(ConfigError::invalid("nodes", "must be at least 1").into());
    }

    let topo = &file.topology;
    let reject = |key: &str, value_present: bool| -> std::result::Result<(), ConfigError> {
        if value_present {
            Err(ConfigError::invalid(
                format!("topology.{key}"),
                format!("not accepted by kind `{}`", topo.kind),
            ))
        } else {
            Ok(())
        }
    };
    let topology = match topo.kind.as_str() {
        "ring" | "path" | "fully-connected" => {
            reject("radius", topo.radius.is_some())?;
            reject("edges", topo.edges.is_some())?;
            reject("edges_file", topo.edges_file.is_some())?;
            match topo.kind.as_str() {
                "ring" => TopologySpec::Ring { nodes: m },
                "path" => TopologySpec::Path { nodes: m },
                _ => TopologySpec::FullyConnected { nodes: m },
            }
        }
        "random-geometric" => {
            reject("edges", topo.edges.is_some())?;
            reject("edges_file", topo.edges_file.is_some())?;
            let radius = topo
                .radius
                .ok_or_else(|| ConfigError::invalid("topology.radius", "required for random-geometric"))?;
            TopologySpec::RandomGeometric { nodes: m, radius }
        }
        "edge-list" => {
            reject("radius", topo.radius.is_some())?;
            let edges = match (&topo.edges, &topo.edges_file) {
                (Some(e), None) => e
                    .iter()
                    .map(|&[a, b]| (NodeId(a), NodeId(b)))
                    .collect::<Vec<_>>(),
                (None, Some(path)) => {
                    let p = base_dir.map_or_else(|| PathBuf::from(path), |d| d.join(path));
                    let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                    parse_edge_list(&text)?
                }
                _ => {
                    return Err(ConfigError::invalid(
                        "topology.edges",
                        "edge-list needs exactly one of `edges` or `edges_file`",
                    )
                    .into())
                }
            };
            if let Some((a, b)) = edges.iter().find(|(a, b)| a == b || a.0 > m || b.0 > m || a.0 == 0 || b.0 == 0) {
                return Err(ConfigError::invalid(
                    "topology.edges",
                    format!("edge ({a}, {b}) is a self-loop or leaves nodes 1..={m}"),
                )
                .into());
            }
            TopologySpec::EdgeList { nodes: m, edges }
        }
        other => {
            return Err(ConfigError::invalid(
                "topology.kind",
                format!("unknown kind `{other}`; expected one of edge-list, ring, path, fully-connected, random-geometric"),
            )
            .into())
        }
    };

    let mut noise_std = match &file.noise_std {
        NoiseStd::Shared(s) => vec![*s; m],
        NoiseStd::PerNode(v) => v.clone(),
    };
    if noise_std.len() != m {
        return Err(ConfigError::invalid("noise_std", format!("{} values for {m} nodes", noise_std.len())).into());
    }
    for (key, ov) in &file.node {
        let id: usize = key
            .parse()
            .ok()
            .filter(|&k| (1..=m).contains(&k))
            .ok_or_else(|| ConfigError::invalid(format!("node.{key}"), format!("not a node id in 1..={m}")))?;
        if let Some(s) = ov.noise_std {
            noise_std[id - 1] = s;
        }
    }

    let strategy_names: Vec<&str> = WeightStrategy::ALL.iter().map(|s| s.name()).collect();
    let weights = file.weights.as_ref();
    let incremental_weights = pick(
        "weights.incremental",
        weights.and_then(|w| w.incremental.as_deref()),
        WeightStrategy::Metropolis,
        WeightStrategy::from_name,
        &strategy_names,
    )?;
    let spatial_weights = pick(
        "weights.spatial",
        weights.and_then(|w| w.spatial.as_deref()),
        WeightStrategy::Metropolis,
        WeightStrategy::from_name,
        &strategy_names,
    )?;
    let spatial_mode = pick(
        "spatial_mode",
        file.spatial_mode.as_deref(),
        SpatialMode::EstimateCombination,
        SpatialMode::from_name,
        &["estimate-combination", "statistic-averaging", "off"],
    )?;
    let incremental_mode = pick(
        "incremental_mode",
        file.incremental_mode.as_deref(),
        IncrementalMode::Neighbourhood,
        IncrementalMode::from_name,
        &["neighbourhood", "self-only"],
    )?;
    let estimate_source = pick(
        "estimator",
        file.estimator.as_deref(),
        EstimateSource::Information,
        estimator_from_name,
        &["information", "covariance"],
    )?;
    let pipelines = match &file.pipelines {
        None => Pipeline::ALL.to_vec(),
        Some(names) => {
            let all: Vec<&str> = Pipeline::ALL.iter().map(|p| p.name()).collect();
            let mut out = Vec::new();
            for n in names {
                let p = pick("pipelines", Some(n), Pipeline::Diffusion, Pipeline::from_name, &all)?;
                if !out.contains(&p) {
                    out.push(p);
                }
            }
            out.sort();
            out
        }
    };

    let order = file.theta_true.len();
    let scenario = Scenario {
        theta_true: file.theta_true.clone(),
        noise_std,
        topology,
        incremental_weights,
        spatial_weights,
        spatial_mode,
        incremental_mode,
        estimate_source,
        steps: file.steps,
        seed: file.seed,
        prior_eps: file.prior_eps.unwrap_or(DEFAULT_PRIOR_EPS),
        prior_nu: file.prior_nu.unwrap_or((order + 2) as f64),
        pipelines,
    };
    scenario.validate()?;

    let run = file.run.clone().unwrap_or(RunFile {
        out: None,
        seeds: None,
        sequential: None,
        dump_state: None,
    });
    let seeds = run.seeds.unwrap_or(1);
    if seeds == 0 {
        return Err(ConfigError::invalid("run.seeds", "batch size must be at least 1").into());
    }
    let run_config = RunConfig {
        scenario_path: None,
        out_dir: run.out.map(|o| base_dir.map_or_else(|| PathBuf::from(&o), |d| d.join(&o))),
        seeds,
        sequential: run.sequential.unwrap_or(false),
        dump_state: run.dump_state.unwrap_or(false),
    };
    Ok((scenario, run_config))
}

/// Reads and parses a scenario file.
pub fn load_config(path: &Path) -> Result<(Scenario, RunConfig)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (scenario, mut run) = parse_config(&text, path.parent())?;
    run.scenario_path = Some(path.to_path_buf());
    Ok((scenario, run))
}

/// Writes a scenario back as TOML. Edge lists are inlined.
pub fn serialize_scenario(sc: &Scenario) -> Result<String> {
    let (kind, radius, edges) = match &sc.topology {
        TopologySpec::RandomGeometric { radius, .. } => ("random-geometric", Some(*radius), None),
        TopologySpec::EdgeList { edges, .. } => ("edge-list", None, Some(edges.iter().map(|(a, b)| [a.0, b.0]).collect())),
        other => (other.kind(), None, None),
    };
    let noise_std = match sc.noise_std.first() {
        Some(&s) if sc.noise_std.iter().all(|&x| x == s) => NoiseStd::Shared(s),
        _ => NoiseStd::PerNode(sc.noise_std.clone()),
    };
    let file = ConfigFile {
        nodes: sc.node_count(),
        theta_true: sc.theta_true.clone(),
        noise_std,
        steps: sc.steps,
        seed: sc.seed,
        pipelines: Some(sc.pipelines.iter().map(|p| p.name().to_string()).collect()),
        spatial_mode: Some(sc.spatial_mode.name().into()),
        incremental_mode: Some(sc.incremental_mode.name().into()),
        estimator: Some(estimator_name(sc.estimate_source).into()),
        prior_eps: Some(sc.prior_eps),
        prior_nu: Some(sc.prior_nu),
        topology: TopologyFile {
            kind: kind.into(),
            radius,
            edges,
            edges_file: None,
        },
        weights: Some(WeightsFile {
            incremental: Some(sc.incremental_weights.name().into()),
            spatial: Some(sc.spatial_weights.name().into()),
        }),
        run: None,
        node: BTreeMap::new(),
    };
    toml::to_string(&file).map_err(|e| ConfigError::invalid("scenario", e.to_string()).into())
}
