//! Measurements on simulated trajectories.

pub mod duhamel;
pub mod front;
pub mod monitors;
pub mod persistence;

pub use duhamel::{duhamel_v_oracle, heat_semigroup, DensityHistory};
pub use front::{fit_speed, front_position, FrontDirection, FrontSample, FrontTrace, SpeedFit};
pub use monitors::{
    envelope_check, exterior_supremum, interior_infimum, measured_bound, supersolution_residual, w_functional, Envelope,
    EnvelopeReport, EnvelopeShape, ExteriorSup, Geometry, QuadraticSign,
};
pub use persistence::{persistence_check, persistence_check_states, PersistenceOptions, PersistenceReport};
