//! Constrained stochastic indoor-scene synthesis with an embodied task layer.
//!
//! The pipeline runs in four stages:
//!
//! 1. **Scene definition** ([`cdf`]): a JSON document declares the required
//!    objects, their spatial relations and optionally a household task.
//! 2. **Scene generation** ([`relations`], [`cssg`]): relations are resolved
//!    into a placement order, every object is drawn from a score field
//!    `P(p) ∝ exp(-s_p)` built from explicit and implicit relations, layer by
//!    layer (furniture, small objects, decorations).
//! 3. **Task sampling** ([`tasking`]): household tasks are instantiated from
//!    seven templates and decomposed into navigation and interaction subgoals.
//! 4. **Task execution** ([`world`], [`tasking`]): an oracle planner navigates
//!    with Dijkstra over an occupancy grid and drives the world transition
//!    table, recording trajectories that [`instruct`] annotates with language.
//!
//! [`eval`] scores scenes by oracle task success and reachability, [`render`]
//! draws top views and scene graphs, and [`pipeline`] wires everything into
//! the reproducible batch commands used by the `roomsynth` binary.

pub mod catalog;
pub mod cdf;
pub mod config;
pub mod cssg;
pub mod eval;
pub mod geometry;
pub mod instruct;
pub mod par;
pub mod pipeline;
pub mod relations;
pub mod render;
pub mod tasking;
pub mod util;
pub mod world;

pub use config::Config;
pub use par::Exec;

/// Version stamped into scene provenance and manifests.
pub const GENERATOR_VERSION: &str = concat!("roomsynth/", env!("CARGO_PKG_VERSION"));
