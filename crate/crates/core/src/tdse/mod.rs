//! Wave-packet propagation on a 2D grid and diffraction analysis of the result.

mod grid;
mod initial;
mod propagator;
mod smatrix;
mod spectral;
mod wavefield;

pub use grid::{Grid2D, MIN_EXTENT};
pub use initial::{build_initial_state, InitialStateSpec, SUPPORT_TOLERANCE};
pub use propagator::{
    propagate, sample_potential, stability_bound, AbsorberSpec, PropagationConfig, Propagator, SnapshotSchedule,
    SnapshotWriter,
};
pub use smatrix::{
    extract_smatrix, reflection_coefficient, remove_plane_wave_contribution, SMatrixEntry, SMatrixRow, SMatrixSetup,
};
pub use spectral::Spectral;
pub use wavefield::{WaveField, SNAPSHOT_HEADER_LEN, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
