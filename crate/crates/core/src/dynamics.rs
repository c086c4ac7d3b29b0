//! Thrusted equations of motion in spherical and Cartesian form, engine
//! model, and the linear mass-flow law.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moon::{gravity_accel, local_frame, CartesianState, MoonConstants, SphericalState};

/// Main engine stack parameters.
///
/// Three engines burn from descent start to the low gate, two from there to
/// touchdown. `t1` always denotes the summed thrust of the two outer engines,
/// `t2` the center engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineModel {
    /// Specific impulse [s]
    pub isp: f64,
    /// Per-engine maximum thrust [N]
    pub t_engine_max: f64,
    /// Per-engine minimum throttled thrust [N]
    pub t_engine_min: f64,
    /// Per-engine throttle rate limit [N/s]
    pub throttle_rate_max: f64,
    /// Engines burning from descent start to the low gate
    pub n_engines_phase1: u32,
    /// Engines burning from the low gate to touchdown
    pub n_engines_phase3: u32,
}

impl Default for EngineModel {
    fn default() -> Self {
        Self {
            isp: 330.0,
            t_engine_max: 6000.0,
            t_engine_min: 3000.0,
            throttle_rate_max: 200.0,
            n_engines_phase1: 3,
            n_engines_phase3: 2,
        }
    }
}

impl EngineModel {
    pub fn validate(&self) -> Result<()> {
        if self.isp <= 0.0 {
            return Err(Error::InvalidInput("isp must be positive".into()));
        }
        if !(0.0 < self.t_engine_min && self.t_engine_min <= self.t_engine_max) {
            return Err(Error::InvalidInput(
                "engine thrust bounds must satisfy 0 < min <= max".into(),
            ));
        }
        Ok(())
    }

    /// Exhaust velocity Isp*g0 [m/s].
    pub fn exhaust_velocity(&self, g0: f64) -> f64 {
        self.isp * g0
    }

    /// Mass flow rate for a total thrust level [kg/s].
    pub fn mass_flow(&self, thrust_total: f64, g0: f64) -> f64 {
        thrust_total / self.exhaust_velocity(g0)
    }

    /// Total stack thrust bounds with all first-phase engines on [N].
    pub fn total_max(&self) -> f64 {
        f64::from(self.n_engines_phase1) * self.t_engine_max
    }

    pub fn total_min(&self) -> f64 {
        f64::from(self.n_engines_phase1) * self.t_engine_min
    }

    /// Outer-pair thrust bounds (the two engines that burn to touchdown) [N].
    pub fn t1_max(&self) -> f64 {
        f64::from(self.n_engines_phase3) * self.t_engine_max
    }

    pub fn t1_min(&self) -> f64 {
        f64::from(self.n_engines_phase3) * self.t_engine_min
    }

    /// Outer-pair throttle rate limit [N/s].
    pub fn t1_rate_max(&self) -> f64 {
        f64::from(self.n_engines_phase3) * self.throttle_rate_max
    }

    /// Whole-stack throttle rate limit with all engines ramping together [N/s].
    pub fn stack_rate_max(&self) -> f64 {
        f64::from(self.n_engines_phase1) * self.throttle_rate_max
    }
}

/// Thrust magnitude split plus steering direction in `(e_r, e_phi, e_theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThrustCommand {
    /// Combined outer-pair thrust [N]
    pub t1: f64,
    /// Center-engine thrust [N]
    pub t2: f64,
    /// Unit steering direction in the local frame
    pub u: Vector3<f64>,
}

impl ThrustCommand {
    /// Command from thrust levels and a (not necessarily unit) direction.
    pub fn new(t1: f64, t2: f64, direction: Vector3<f64>) -> Self {
        let n = direction.norm();
        let u = if n > 0.0 {
            direction / n
        } else {
            Vector3::new(1.0, 0.0, 0.0)
        };
        Self { t1, t2, u }
    }

    /// Command from azimuth/elevation angles: `u_r = cos(a)cos(b)`,
    /// `u_phi = sin(a)`, `u_theta = cos(a)sin(b)`.
    pub fn from_angles(t1: f64, t2: f64, alpha: f64, beta: f64) -> Self {
        let u = Vector3::new(
            alpha.cos() * beta.cos(),
            alpha.sin(),
            alpha.cos() * beta.sin(),
        );
        Self { t1, t2, u }
    }

    pub fn coast() -> Self {
        Self::new(0.0, 0.0, Vector3::new(1.0, 0.0, 0.0))
    }

    /// Total thrust magnitude [N].
    pub fn total(&self) -> f64 {
        self.t1 + self.t2
    }

    /// Out-of-plane steering angle [rad].
    pub fn alpha(&self) -> f64 {
        self.u.y.asin()
    }

    /// In-plane steering angle from `e_r` toward `e_theta` [rad].
    pub fn beta(&self) -> f64 {
        self.u.z.atan2(self.u.x)
    }

    /// Elevation of the thrust vector above the local horizontal [deg];
    /// 90 deg points along `+e_r`.
    pub fn pitch_deg(&self) -> f64 {
        self.u.x.clamp(-1.0, 1.0).asin().to_degrees()
    }
}

/// Gravity field used by the propagator and guidance solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GravityModel {
    /// Keplerian central field -mu/r^2.
    Kepler,
    /// Uniform field given as a constant inertial-frame vector [m/s^2].
    Uniform(Vector3<f64>),
}

impl GravityModel {
    /// Gravity components in the local `(e_r, e_phi, e_theta)` frame.
    pub fn local_components(
        &self,
        r: f64,
        phi: f64,
        theta: f64,
        constants: &MoonConstants,
    ) -> (f64, f64, f64) {
        match self {
            GravityModel::Kepler => (-constants.mu / (r * r), 0.0, 0.0),
            GravityModel::Uniform(g) => {
                let (e_r, e_phi, e_theta) = local_frame(phi, theta);
                (g.dot(&e_r), g.dot(&e_phi), g.dot(&e_theta))
            }
        }
    }
}

/// Right-hand side of the spherical equations of motion.
///
/// Returns `d/dt [r, phi, theta, v_r, v_phi, v_theta, m]`.
pub fn eom_spherical(
    s: &SphericalState,
    cmd: &ThrustCommand,
    engine: &EngineModel,
    constants: &MoonConstants,
    gravity: &GravityModel,
) -> Result<[f64; 7]> {
    if s.r <= 0.0 {
        return Err(Error::ZeroRadius);
    }
    let cos_phi = s.phi.cos();
    if cos_phi.abs() < 1e-9 {
        return Err(Error::PoleSingularity { phi: s.phi });
    }
    let tan_phi = s.phi.tan();
    let total = cmd.total();
    let a_thrust = total / s.m;
    let (g_r, g_phi, g_theta) = gravity.local_components(s.r, s.phi, s.theta, constants);
    Ok([
        s.v_r,
        s.v_phi / s.r,
        s.v_theta / (s.r * cos_phi),
        (s.v_phi * s.v_phi + s.v_theta * s.v_theta) / s.r + g_r + a_thrust * cmd.u.x,
        -s.v_phi * s.v_r / s.r - s.v_theta * s.v_theta * tan_phi / s.r + g_phi + a_thrust * cmd.u.y,
        -s.v_theta * s.v_r / s.r + s.v_phi * s.v_theta * tan_phi / s.r + g_theta + a_thrust * cmd.u.z,
        -total / engine.exhaust_velocity(constants.g0),
    ])
}

/// Interpretation of the commanded acceleration in Cartesian dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccelMode {
    /// Command is total acceleration: gravity already included.
    Total,
    /// Command is thrust-specific acceleration: gravity added here.
    ThrustSpecific,
}

/// Right-hand side of the Cartesian double integrator.
pub fn eom_cartesian(
    s: &CartesianState,
    accel_cmd: &Vector3<f64>,
    constants: &MoonConstants,
    mode: AccelMode,
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let v_dot = match mode {
        AccelMode::Total => *accel_cmd,
        AccelMode::ThrustSpecific => accel_cmd + gravity_accel(&s.position, constants)?,
    };
    Ok((s.velocity, v_dot))
}

/// Linear mass law `m(t) = m0 - T/(g0*Isp) * dt` for a constant total thrust.
pub fn mass_linear(
    m0: f64,
    thrust_total: f64,
    isp: f64,
    g0: f64,
    dt: f64,
    floor: Option<f64>,
) -> Result<f64> {
    let m = m0 - thrust_total / (isp * g0) * dt;
    let floor = floor.unwrap_or(0.0);
    if m <= floor {
        return Err(Error::InfeasibleBurn { mass: m, floor });
    }
    Ok(m)
}
