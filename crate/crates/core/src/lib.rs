//! Simulation engine for Karlin stable set-indexed random fields.
//!
//! A field `Y(t)` on a finite lattice is approximated as a compound-Poisson
//! sum of large jumps, each weighted by an odd-occupancy vector, plus a scaled
//! Gaussian field standing in for the small jumps. Four index geometries are
//! supported: the half line, the unit square of rectangles, the planar
//! Lévy–Chentsov family and hemispheres on the unit sphere.
//!
//! Module map:
//!
//! - [`rng`]: seeded, splittable random streams.
//! - [`stats`]: the Sibuya law, stable constants and jump laws.
//! - [`geometry`]: measure spaces, index sets and their measures.
//! - [`occupancy`]: odd-occupancy samplers (generic and lattice fast paths).
//! - [`largejump`]: the compound-Poisson large-jump field.
//! - [`smalljump`]: Gaussian kernels and backends for the small-jump part.
//! - [`assembler`]: ε selection, the α < 1 policy, pin-down and final assembly.
//! - [`verify`]: Monte Carlo checks with machine-readable reports.

pub mod assembler;
pub mod error;
pub mod field;
pub mod geometry;
pub mod largejump;
pub mod occupancy;
pub mod rng;
pub mod smalljump;
pub mod stats;
pub mod verify;

pub use error::{KarlinError, Result};
pub use field::{Component, FieldGrid};
pub use geometry::{Geometry, Point};
pub use rng::RngStream;
