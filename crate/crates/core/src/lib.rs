//! Stochastic fluid model of two Markov-modulated traffic flows that share a
//! common link.
//!
//! The crate covers the merge junction (links 1 and 2 feeding link 3) and the
//! merge-diverge network (link 3 discharging into links 4 and 5):
//!
//! * [`model`]: inflow chains, network parameters and the flow functions.
//! * [`simulator`]: exact event-driven simulation of the piecewise-deterministic
//!   queue dynamics, trajectory statistics and Monte Carlo stability estimates.
//! * [`stability`]: closed-form stabilizing and destabilizing priority sets and
//!   the region sweep over the common-link capacity.
//! * [`lyapunov`]: quadratic drift certificates and numerical drift checks.
//!
//! The crate is `no_std` and only needs an allocator. File formats and the
//! command-line driver live in the `sharedlink` crate.
//!
//! Units throughout: time in hours, queues in vehicles, flows in veh/hr.

#![no_std]
// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
pub mod lyapunov;
pub mod model;
pub mod simulator;
pub mod stability;

pub use error::{Error, Result};
pub use model::{
    DivergeParams, DivergeRule, FlowOptions, FlowVector, InflowChain, MergeParams, Mode, Network, NetworkState,
    PriorityVector, ProductChain, Topology,
};
