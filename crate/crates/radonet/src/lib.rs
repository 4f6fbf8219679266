//! Simulation library for a linear preferential-attachment growth process.
//!
//! A growing graph gains one vertex per time step; the newcomer connects to
//! each existing vertex `u` independently with probability `lambda * d_u(t) / t`,
//! where `d_u(t)` is the current degree of `u`. The library provides
//!
//! * an exact graph representation with optional adjacency storage
//!   ([`graph`]),
//! * the random growth engine plus an exact rational one-step distribution
//!   oracle ([`process`], [`oracle`]),
//! * the single-vertex urn reduction and its Beta limit-law CDF ([`urn`],
//!   [`special`]),
//! * trackers for the degree-fraction and edge-density martingales
//!   ([`martingale`]),
//! * witness search for extension requests on finite snapshots ([`rado`]),
//! * a small self-contained statistics toolkit ([`stats`]), and
//! * the experiment orchestration behind the `radonet` CLI ([`config`],
//!   [`experiment`]).

pub mod config;
pub mod experiment;
pub mod graph;
pub mod martingale;
pub mod oracle;
pub mod process;
pub mod rado;
pub mod rng;
pub mod special;
pub mod stats;
pub mod urn;
