//! Mixing-time estimation, the coupling constructions and the hitting,
//! crossing and drift experiments on the magnetization chains.

mod couple;
mod crossing;
mod drift;
mod hitting;
mod law;
mod mixing;

pub use couple::{couple_supercritical, couple_two_dim, isolated_reserve, CouplingOutcome};
pub use crossing::{
    crossing_experiment, crossing_run, shoot_frequency, CrossingOutcome, CrossingRecord,
};
pub use drift::{
    critical_drift, level_crossing, one_step_moments, subcritical_contraction,
    supercritical_contraction, window_drift, ContractionRecord, DriftRecord, OneStepMoments,
};
pub use hitting::{hitting_experiment, HittingConfig, HittingKind, HittingSummary};
pub use law::{
    exact_stationary, maximal_coupling, tv_to_law, tv_to_stationary, LatticeLaw, StationaryLaw,
};
pub use mixing::{mixing_time, MixingEstimate, MixingSettings};
