//! Binaural spatialization: HRIR sets, localisation cues, the per-source
//! spatializer and IIR approximations for the high-performance mode.

pub mod cues;
pub mod hrir;
pub mod iir_fit;
pub mod spatializer;
pub mod synthetic;

pub use cues::{
    air_absorption_cutoff, distance_gain, itd_delays, near_field_ild_gains, DistanceModel, DistanceModelError, IldGains,
    ItdDelays,
};
pub use hrir::{direction_file_name, Direction, HrirError, HrirSet};
pub use iir_fit::{fit_iir_approximation, DirectionFit, EarFit, FitError, FitWarning, IirFitSet, PeakSection};
pub use spatializer::{SourcePose, SpatialMode, SpatializerError, SpatializerState};
pub use synthetic::spherical_head_set;
