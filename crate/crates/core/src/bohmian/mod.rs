//! Bohmian trajectories synthesized from propagated wave fields.

mod ensemble;
mod field;
mod trajectory;
mod vortex;

pub use ensemble::{
    ensemble_density_check, sample_born_quantiles, sample_born_random, sample_uniform, DensityCheck, MIN_ENSEMBLE,
};
pub use field::{velocity_at, FramePair, GuidanceField, LocalField, VelocityField, NODE_THRESHOLD};
pub use trajectory::{
    default_trap_height, integrate_bohmian, min_pairwise_separation, same_time_crossings, seed_lines, Crossing, BohmianConfig, BohmianRun,
    BohmianTrajectory, EventRecord, PropagationSchedule, SeedPoint, SEED_LINE_OFFSETS,
};
pub use vortex::{circulation, detect_vortices, detect_vortices_in, Region, VortexNode, VortexOptions, VortexReport};
