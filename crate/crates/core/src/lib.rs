//! Numerical engine for Γ-martingales and reflected backward SDEs on
//! simply connected planar polygons.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of immutable inputs; file formats, the expression grammar and the
//! command line live in the `gamma-bsde` companion crate.
//!
//! Layering, bottom up:
//!
//! * [`domain`]: the closed polygon, membership, Euclidean projection and
//!   normal cones;
//! * [`geodesic`]: exact shortest paths (funnel algorithm over an ear-clipping
//!   triangulation) and the visibility-graph oracle, `Ψ`, log maps and
//!   rotation angles;
//! * [`frechet`]: barycenters of finite measures with first-order
//!   certificates;
//! * [`transport`]: the reflected ODE step (projected Euler);
//! * [`lattice`]: recombining random-walk approximation of Brownian motion;
//! * [`scheme`]: the backward recursion alternating conditional barycenters
//!   and drift transport;
//! * [`bsde`]: Picard iteration for `z`-dependent generators;
//! * [`verify`] and [`audit`]: executable property checks.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod audit;
pub mod bsde;
pub mod domain;
pub mod error;
pub mod exec;
pub mod frechet;
pub mod geodesic;
pub mod lattice;
mod math;
pub mod scheme;
pub mod transport;
mod triangulate;
pub mod vec2;
pub mod verify;

#[cfg(test)]
pub(crate) mod fixtures;

pub use domain::{ConeKind, Domain, Membership, NormalCone};
pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use frechet::{frechet_gradient, frechet_mean, DiscreteMeasure, MeanCertificate};
pub use geodesic::{geodesic, geodesic_oracle, log_map, psi, rotation_angle, GeodesicPath};
pub use bsde::{solve_bsde, BsdeOptions, BsdeSolution, FnGenerator, Generator};
pub use lattice::{build_lattice, conditional_measure, node_expectation, Lattice, LatticeMode, NodeField, NodeId};
pub use scheme::{solve_exogenous, solve_state_dependent, NodeCtx, SchemeOptions, SchemeResult, ZMatrix};
pub use transport::{reflect_transport, TransportResult};
pub use vec2::{Point, Vec2};
pub use verify::{CheckReport, TestFunction};
