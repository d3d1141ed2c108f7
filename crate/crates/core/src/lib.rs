//! Simulation and analysis of a passive reflective intelligent surface (RIS)
//! fed from its near field by a small active multi-antenna feeder (AMAF).
//!
//! The pipeline is: build the feeder-to-RIS propagation matrix
//! ([`channel`]), decompose it into eigenmodes and form beam designs
//! ([`eigenmodes`]), evaluate far-field patterns and their metrics
//! ([`farfield`]), pick the feeder distance and sweep RIS sizes
//! ([`optimizer`]), and compare power consumption against a conventional
//! phased array ([`power`]).
//!
//! Lengths are in half wavelengths and angles in degrees throughout.

pub mod arrays;
pub mod channel;
pub mod eigenmodes;
pub mod error;
pub mod farfield;
pub mod optimizer;
pub mod power;
pub mod report;

pub use arrays::{element_gain, rayleigh_distance, steering_vector, ElementPattern, LinearArray};
pub use channel::{build_channel, free_space_coupling, PropagationMatrix, Scene};
pub use eigenmodes::{
    custom_design, decompose, decompose_with, design1_pencil, design2_flattop, design3_monopulse,
    steer, BeamDesign, EigenDecomposition, PhaseConvention,
};
pub use error::{Error, Result};
pub use farfield::{
    evaluate_excitation, evaluate_pattern, monopulse_curve, pattern_metrics, ris_gain,
    FarFieldPattern, MonopulseCurve, PatternMetrics,
};
pub use optimizer::{
    find_optimal_distance, peak_count, sweep_sizes, DistanceScan, ScanOptions, SweepRow,
};
pub use power::{
    budget_chain, compare_architectures, dc_power_w, fspl_db, per_pa_power, required_tx_power_dbm,
    Architecture, ArchitectureComparison, LinkBudget, PATechnology,
};
