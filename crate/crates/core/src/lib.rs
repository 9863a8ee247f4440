//! Dynamic Bayesian diffusion estimation of a Gaussian linear regression
//! model over an ad-hoc network.
//!
//! Every node `k` keeps normal-inverse-gamma sufficient statistics for the
//! shared regression parameters. At each time step it first absorbs the
//! weighted observations of its closed neighbourhood (incremental update) and
//! then convexly combines its neighbours' point estimates (spatial update).
//!
//! The crate is `no_std` and only needs `alloc`. Simulation, file formats and
//! the command line live in the `bdiff` companion crate.
//!
//! ```
//! use bdiff_core::graph::{Network, WeightStrategy};
//! use bdiff_core::diffusion::{network_step, DiffusionConfig, NodeState};
//! use bdiff_core::nig::{NigVForm, Observation};
//!
//! let net = Network::path(3);
//! let c = WeightStrategy::Metropolis.weights(&net, None).unwrap();
//! let cfg = DiffusionConfig::new(c.clone(), c);
//! let prior = NigVForm::init(1, 1e-3, 3.0).unwrap();
//! let mut states = NodeState::uniform(&net, &prior, false).unwrap();
//! let data = vec![Observation::new(1.0, vec![1.0]); 3];
//! states = network_step(&states, &net, &cfg, &data).unwrap();
//! assert!((states[0].theta_hat[0] - 1.0).abs() < 1e-3);
//! ```

#![no_std]
// `!(x > y)` style checks also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod diffusion;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod nig;

pub use error::{Error, Result};
