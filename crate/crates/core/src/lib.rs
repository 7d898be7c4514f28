//! Dynamic snake (active contour) model as a dissipative dynamical system:
//! potential fields, discrete contour energies, a convexity certificate for
//! the potential, semi-implicit evolution, modal equilibrium analysis, and
//! a Hamiltonian capture-region test.

pub mod contour;
pub mod convexity;
pub mod dynamics;
pub mod error;
pub mod potential;
pub mod spectral;

pub use contour::{
    elastic_energy, energy_gradient, external_force, field_energy, hessian_ep, total_energy,
    Contour, SnakeParams, StiffnessSet, Topology,
};
pub use convexity::{
    certify, default_grid_step, elastic_hessian_bound, field_block_eigenvalues, lambda_max_b1,
    lambda_min_b1, suggest_weights, ConvexityReport,
};
pub use dynamics::{
    assemble_system, condition_diagnostics, evolve, mean_field_energy, steady_state_met,
    steady_support_met, step, ConditionDiagnostics, EvolveError, EvolveOutcome, StepperState,
    StopCriterion, StopReason, StopSpec, SystemMatrices, Trace, TraceRecord,
};
pub use error::{Result, SnakeError};
pub use potential::{
    edge_potential, load_pgm, polar_quantities, region_min_a, write_pgm, FieldSample, GridField,
    Point, PolarFrame, Region, RegionScan, RegionShape, ScalarField,
};
pub use spectral::{
    capture_certificate, classify_equilibrium, dissipation_rate, equilibrium_residual,
    generalized_modes, grad_h_at, hamiltonian, hessian_h, jacobian_dx, modal_sigmas,
    verify_capture, CaptureReport, CaptureVerification, EquilibriumClassification,
    EquilibriumLabel, HamiltonianEval, ModalRate, ModalSpectrum, NON_HYPERBOLIC_TOL,
};
