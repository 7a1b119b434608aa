//! Error types for the core crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("ensemble must contain at least one oscillator")]
    EmptyEnsemble,
    #[error("state has {state} phases but params describe {params} oscillators")]
    DimensionMismatch { state: usize, params: usize },
    #[error("phase offset beta={0} outside [0, pi]")]
    BetaOutOfRange(f64),
    #[error("coupling strength kappa={0} must be finite and >= 0")]
    InvalidKappa(f64),
    #[error("spectrum half-width gamma={0} must lie in [0, 1)")]
    InvalidGamma(f64),
    #[error("natural frequency omega[{index}]={value} outside [1-gamma, 1+gamma] = [{low}, {high}]")]
    FrequencyOutOfRange {
        index: usize,
        value: f64,
        low: f64,
        high: f64,
    },
    #[error("initial-condition interval is empty: low={low} > high={high}")]
    EmptyInterval { low: f64, high: f64 },
    #[error("{quantity} is not 2pi-periodic: |f(x+2pi)-f(x)| = {defect:e} at x={x}")]
    NotPeriodic {
        quantity: &'static str,
        x: f64,
        defect: f64,
    },
    #[error("{quantity} disagrees with finite differences: |analytic-numeric| = {defect:e} at x={x}")]
    DerivativeMismatch {
        quantity: &'static str,
        x: f64,
        defect: f64,
    },
    #[error("declared sup-norm {declared} for {quantity} is below observed grid maximum {observed}")]
    SupNormTooSmall {
        quantity: &'static str,
        declared: f64,
        observed: f64,
    },
}

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("quadrature did not stabilize: refinement changed the result by {estimate:e} > {tolerance:e}")]
    ToleranceNotMet { estimate: f64, tolerance: f64 },
}

#[derive(Debug, Error)]
pub enum IntegratorError {
    #[error("step size {0} must be finite and positive")]
    InvalidStep(f64),
    #[error("event tolerance {0} must be finite and positive")]
    InvalidEventTolerance(f64),
    #[error("record_every must be >= 1")]
    InvalidRecordStride,
    #[error("t_end={t_end} must exceed the initial time {t0}")]
    EmptyTimeSpan { t0: f64, t_end: f64 },
    #[error("non-finite state detected at t={t} (component {index})")]
    NonFiniteState { t: f64, index: usize },
    #[error("mean {mu0} already at or past the target {target}")]
    MeanAlreadyPast { mu0: f64, target: f64 },
    #[error("mean did not reach {target} before t_max={t_max} (last mean {mu_last})")]
    MeanCrossingTimeout {
        target: f64,
        t_max: f64,
        mu_last: f64,
    },
    #[error("mean is decreasing persistently (fell to {mu} at t={t}, started at {mu0})")]
    MeanDecreasing { t: f64, mu: f64, mu0: f64 },
    #[error("event localization stalled: |mean - target| = {defect:e} > tolerance {tolerance:e}")]
    EventToleranceNotMet { defect: f64, tolerance: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum ObservablesError {
    #[error("observables require at least one phase")]
    EmptyEnsemble,
}

#[derive(Debug, Error)]
pub enum TheoryError {
    #[error("parameter {name}={value} outside its admissible range {range}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("kappa={kappa} not inside (0, kappa_star) with kappa_star={kappa_star}")]
    KappaOutOfRange { kappa: f64, kappa_star: f64 },
    #[error("denominator 1 - kappa P(s) R(s) = {value} is not positive at s={s}")]
    DenominatorNotPositive { s: f64, value: f64 },
    #[error("synchronization hypothesis fails: period integral of beta_kappa = {integral:e} is not positive")]
    H3Violated { integral: f64 },
    #[error("source term alpha={0} must be positive")]
    NonPositiveAlpha(f64),
    #[error("period integral of the coefficient = {integral:e} is not positive; no positive periodic solution")]
    CoefficientIntegralNotPositive { integral: f64 },
    #[error("velocity margin condition fails: 1 - gamma - C~ kappa D - kappa/kappa_star = {value}")]
    Condition8Violated { value: f64 },
    #[error("certificate inconsistency: {detail}")]
    CertificateInconsistent { detail: String },
    #[error("certificate does not establish membership (in_u = false); invariant set undefined")]
    NotCertified,
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Observables(#[from] ObservablesError),
}

#[derive(Debug, Error)]
pub enum LockingError {
    #[error("state is not on the section: mean = {mu:e} exceeds tolerance {tolerance:e}")]
    NotOnSection { mu: f64, tolerance: f64 },
    #[error("no locked solution found: {iterations} map iterations left residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("converged map fixed point fails the full-period flow check: residual {residual:e} > {tolerance:e}")]
    FlowResidualTooLarge { residual: f64, tolerance: f64 },
    #[error("return time {theta} violates the certified bounds ({lower}, {upper})")]
    ReturnTimeOutOfBounds { theta: f64, lower: f64, upper: f64 },
    #[error("trajectory does not close over one period: max defect {defect:e} > {tolerance:e}")]
    TrajectoryNotClosed { defect: f64, tolerance: f64 },
    #[error("trajectory must contain at least two samples")]
    TrajectoryTooShort,
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Observables(#[from] ObservablesError),
}
