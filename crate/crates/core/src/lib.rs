//! Helium-atom scattering from a CO adsorbate on a flat Pt(111) surface.
//!
//! Three model levels share one potential description: specular rays on a
//! hard wall ([`fermatian`], [`hardwall`]), classical trajectories on the
//! Morse + Lennard-Jones surface ([`newtonian`]), and 2D wave-packet
//! propagation ([`tdse`]) with Bohmian trajectories synthesized from the
//! propagated field ([`bohmian`]).

pub mod bohmian;
pub mod constants;
pub mod error;
pub mod fermatian;
pub mod hardwall;
pub mod newtonian;
pub mod potential;
pub mod spectrum;
pub mod tdse;

pub use constants::PhysicalConstants;
pub use error::{Error, Result};
pub use potential::{InteractionModel, ModelVariant};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
