//! Deterministic synthetic GNSS scenarios.

mod rng;
mod scenario;
mod sky;
mod walker;

pub use rng::{keyed_stream, Purpose};
pub use scenario::{
    simulate, synthesize_epoch, EpochOutcome, Location, ScenarioConfig, SimulationOutput, SkippedEpoch,
};
pub use sky::{random_sky_epoch, SkyEpochSpec};
pub use walker::{
    inertial_to_ecef, propagate_constellation, propagate_inertial, visible_satellites, WalkerSpec,
    MU_EARTH, OMEGA_EARTH,
};
