//! Error types shared across the guidance toolkit.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Position vector with zero radius handed to a central-field evaluation.
    #[error("gravity undefined at zero radius")]
    ZeroRadius,

    /// Spherical frame is singular at the poles (cos(phi) = 0).
    #[error("spherical frame singular at pole: phi = {phi} rad")]
    PoleSingularity { phi: f64 },

    /// Trajectory dipped below the surface guard band before any event fired.
    #[error("surface impact at t = {t:.3} s, altitude {altitude:.1} m")]
    Impact { t: f64, altitude: f64 },

    /// Integration span ran out without triggering the requested event.
    #[error("no event triggered within span of {span:.3} s")]
    NoEvent { span: f64 },

    /// Linear mass law drove the mass to or below its floor.
    #[error("infeasible burn: mass {mass:.1} kg at or below floor {floor:.1} kg")]
    InfeasibleBurn { mass: f64, floor: f64 },

    /// Newton iteration did not reach the residual tolerance.
    #[error("Newton solver did not converge in {iterations} iterations (last residual {last_residual:.3e})")]
    NewtonNonConvergence {
        iterations: usize,
        last_residual: f64,
        residual_history: Vec<f64>,
    },

    /// Finite-difference Jacobian lost rank.
    #[error("singular Jacobian in Newton solve at iteration {iteration}")]
    SingularJacobian { iteration: usize },

    /// Requested initial along-track angle needs a thrust outside engine bounds.
    #[error("theta0 unreachable: required total thrust {required_thrust:.1} N outside [{min:.1}, {max:.1}] N")]
    UnreachableTheta0 {
        required_thrust: f64,
        min: f64,
        max: f64,
    },

    /// Pitch-up slew axis undefined (initial and target directions parallel).
    #[error("pitch-up axis undefined: directions antiparallel")]
    UndefinedAxis,

    /// Pitch-up thrust ramp hit the configured floor before the slew ended.
    #[error("pitch-up thrust ramp hit floor {floor:.1} N at t = {t:.2} s into slew")]
    ThrustFloor { t: f64, floor: f64 },

    /// Cubic guidance needs a strictly positive time of flight.
    #[error("non-positive time of flight: {tf:.3} s")]
    NonPositiveTof { tf: f64 },

    /// Divert displacement request exceeds the configured lateral bound.
    #[error("divert shift {shift:.1} m exceeds bound {bound:.1} m at {gate}")]
    DivertBound {
        gate: &'static str,
        shift: f64,
        bound: f64,
    },

    /// Handover state violated a waypoint gate precondition.
    #[error("{gate} gate failure: {detail}")]
    GateFailure { gate: &'static str, detail: String },

    /// A mission phase solver failed during end-to-end assembly.
    #[error("assembly failed in phase '{phase}': {source}")]
    AssemblyPhase {
        phase: &'static str,
        #[source]
        source: Box<Error>,
    },

    /// Target is beyond the propellant available at the given thrust level.
    #[error("target unreachable: requires {required_dv:.1} m/s, capability {available_dv:.1} m/s")]
    DeltaVInfeasible { required_dv: f64, available_dv: f64 },

    /// No feasible candidate in a tuning or optimization search.
    #[error("no feasible solution: {detail}")]
    NoFeasibleSolution { detail: String },

    /// Input failed a domain precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Wraps an error with the mission phase it occurred in.
    pub fn in_phase(self, phase: &'static str) -> Error {
        Error::AssemblyPhase {
            phase,
            source: Box::new(self),
        }
    }
}
