//! Iterative visuo-tactile 3D shape reconstruction.
//!
//! A deformable ellipsoid template is fitted to accumulating surface
//! evidence points ("attractors") gathered from a simulated single-view
//! visual prior and sequential tactile probes. Each iteration refits the
//! template globally, bends it locally through a radial-basis
//! interpolant, repropagates per-vertex uncertainty, and picks the next
//! touch so that total uncertainty and the risk of contact failure both
//! shrink.
//!
//! Module map:
//! - [`mesh`] — triangle meshes, projections, intersections, geodesics,
//!   sampling, chamfer distance, procedural shapes.
//! - [`io`] — ASCII OBJ/PLY readers and writers.
//! - [`sensing`] — attractors, the tactile sensor model, the visual prior.
//! - [`template_fit`] — global ellipsoid estimation by gradient descent.
//! - [`local_deform`] — displacement interpolation and vertex updates.
//! - [`uncertainty`] — per-vertex uncertainty propagation.
//! - [`exploration`] — next-contact selection strategies.
//! - [`session`] — the simulated reconstruction loop, metrics, comparisons.

pub mod error;
pub mod exploration;
pub mod io;
pub mod local_deform;
pub mod mesh;
pub mod sensing;
pub mod session;
pub mod template_fit;
pub mod uncertainty;

pub use error::{Error, Result};
