//! Simulation and closed-form analysis of mean-field Winfree oscillator
//! ensembles:
//!
//! - [`model`]: the vector field, the simplified `P_beta`/`sin` family, and
//!   reproducible frequency / initial-condition generation;
//! - [`integrator`]: fixed-step RK4 with mean-crossing event detection;
//! - [`observables`]: mean, dispersion, order parameters, sync verdict;
//! - [`theory`]: critical coupling, the synchronization-hypothesis
//!   integral, dispersion curves and certified parameter domains;
//! - [`locking`]: the return map to the `mean = 0` section, fixed-point
//!   search and the periodic deviations of the locked solution.

pub mod error;
pub mod integrator;
pub mod locking;
pub mod model;
pub mod observables;
pub mod quad;
pub mod theory;

pub use error::{IntegratorError, LockingError, ModelError, ObservablesError, QuadError, TheoryError};
pub use integrator::{
    integrate, integrate_field, integrate_until_mean, integrate_with, IntegratorConfig, Method,
    Trajectory,
};
pub use locking::{
    extract_psi, find_locked_solution, poincare_map, return_time_bounds, Acceleration,
    LockedSolution, LockingOptions, PsiSamples,
};
pub use model::{
    make_frequencies, make_initial_conditions, vector_field, vector_field_into, EnsembleParams,
    EnsembleState, FrequencyScheme, ModelSpec, SimplifiedModel, SupNorms,
};
pub use observables::{
    mean_dispersion, order_d, order_r, sync_verdict, Observables, SyncVerdict,
    DEFAULT_SYNC_THRESHOLD,
};
pub use theory::{
    alpha_term, beta_kappa, capacity_d, certify_domain, gain_l, h_integral, in_invariant_set,
    kappa_star, DispersionCurve, DomainCertificate, KappaStar, TheoryConstants,
};
