//! Joint RB sensing, access and computation placement for machine-type
//! devices in sliced cellular networks with edge computing.
//!
//! The crate is organized bottom-up:
//!
//! * [`model`]: topology, channel gains, coordinator election, link rates
//! * [`cost`]: per-slot execution time, energy and weighted cost
//! * [`pomdp`]: actions, RB occupancy chains, sensing errors, belief updates
//! * [`solver`]: finite-horizon value iteration, exact oracle, baselines
//! * [`sim`]: frame simulator and parameter sweeps
//! * [`config`], [`scenario`], [`io`]: configuration, scenario generation, CSV output

pub mod config;
pub mod cost;
pub mod error;
pub mod io;
pub mod model;
pub mod pomdp;
pub mod rng;
pub mod scenario;
pub mod sim;
pub mod solver;

pub use cost::{AccessMode, ComputingTask, CostParams, CostWeights, Placement, SlotCosts};
pub use error::{Error, Result};
pub use model::{ChannelGains, MtcDevice, Position, PropagationModel, RbState, VirtualNetwork};
pub use pomdp::{AccessTarget, Belief, CompositeAction, ComputeNode, Observation, RbProcess};
pub use solver::{Policy, PolicyKind, PomdpModel, SolverConfig, SolverMode, ValueFunction};
