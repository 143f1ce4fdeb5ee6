//! Pilot-wave layer: guidance field, quantum potential, equilibrium
//! sampling, trajectory transport and ensemble statistics.

pub mod analysis;
pub mod conditional;
pub mod ensemble;
pub mod fields;
pub mod integrate;
pub mod sampling;

pub use analysis::{
    band_transitions, equivariance_check, fringe_occupancy, positive_fraction, sorted_order_inversions,
};
pub use conditional::{conditional_wavefunction, entangle, supporting_branch, ConditionalSlice};
pub use ensemble::{sample_equilibrium, Termination, Trajectory, TrajectoryEnsemble};
pub use fields::{
    probability_current, quantum_force, quantum_potential, velocity_field, velocity_field_with, QuantumPotentialField,
    VelocityField,
};
pub use integrate::{integrate_trajectories, interpolate, trajectory_stops, IntegratorConfig};
pub use sampling::{ks_critical_value, ks_statistic, trajectory_rng, CellCdf, DensitySampler};
