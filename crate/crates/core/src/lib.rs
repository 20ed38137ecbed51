//! Decentralized 3D coverage, search and formation building for mobile sensor swarms.
//!
//! Agents place themselves on a space-filling lattice seeded by consensus, spread
//! over it to cover a region or a shape, search it for static or moving targets,
//! or assemble into a flying formation with a sliding-mode guidance law.

pub mod consensus;
pub mod coverage;
pub mod error;
pub mod formation;
pub mod geometry;
pub mod harness;
pub mod network;
pub mod rng;
pub mod search;
pub mod trace;

pub use error::{Error, Result};
pub use geometry::{LatticeKind, LatticeSpec, Region, Vec3, VertexKey};
