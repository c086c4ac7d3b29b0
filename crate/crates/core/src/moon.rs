//! Physical constants, the landing-site frame, and spherical/Cartesian conversions.
//!
//! Positions are referred to the center of the Moon. The landing site sits at
//! `phi = 0`, `theta = 90 deg`, so the inertial `+Z` axis is the landing-site
//! vertical and downrange distance is measured along decreasing `theta` as
//! `r_moon * (pi/2 - theta)`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gravitational and reference constants for the Moon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MoonConstants {
    /// Gravitational parameter [m^3/s^2]
    pub mu: f64,
    /// Mean lunar radius [m]
    pub r_moon: f64,
    /// Standard gravity used for Isp conversion [m/s^2]
    pub g0: f64,
}

impl Default for MoonConstants {
    fn default() -> Self {
        Self {
            mu: 4.9028e12,
            r_moon: 1_737_400.0,
            g0: 9.80665,
        }
    }
}

impl MoonConstants {
    /// Gravitational acceleration magnitude at the mean surface [m/s^2].
    pub fn surface_gravity(&self) -> f64 {
        self.mu / (self.r_moon * self.r_moon)
    }

    /// Checks positivity and the sanity band on surface gravity.
    pub fn validate(&self) -> Result<()> {
        if self.mu <= 0.0 || self.r_moon <= 0.0 || self.g0 <= 0.0 {
            return Err(Error::InvalidInput(
                "moon constants must be strictly positive".into(),
            ));
        }
        let g = self.surface_gravity();
        if !(1.5..=1.8).contains(&g) {
            return Err(Error::InvalidInput(format!(
                "surface gravity {g:.4} m/s^2 outside sanity band [1.5, 1.8]"
            )));
        }
        Ok(())
    }
}

/// Full lander state in the landing-site spherical frame.
///
/// `v_r`, `v_phi`, `v_theta` are projections of the inertial velocity onto
/// the local `(e_r, e_phi, e_theta)` triad.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalState {
    /// Time [s]
    pub t: f64,
    /// Radial distance from the Moon center [m]
    pub r: f64,
    /// Out-of-plane angle [rad]
    pub phi: f64,
    /// Along-track angle [rad]; the landing site is at pi/2
    pub theta: f64,
    /// Radial velocity [m/s]
    pub v_r: f64,
    /// Out-of-plane velocity [m/s]
    pub v_phi: f64,
    /// Along-track velocity [m/s]
    pub v_theta: f64,
    /// Mass [kg]
    pub m: f64,
}

impl SphericalState {
    /// Altitude above the mean surface [m].
    pub fn altitude(&self, constants: &MoonConstants) -> f64 {
        self.r - constants.r_moon
    }

    /// Downrange position, positive uprange of the landing site [m].
    pub fn downrange(&self, constants: &MoonConstants) -> f64 {
        constants.r_moon * (FRAC_PI_2 - self.theta)
    }

    /// Inertial speed [m/s].
    pub fn speed(&self) -> f64 {
        (self.v_r * self.v_r + self.v_phi * self.v_phi + self.v_theta * self.v_theta).sqrt()
    }

    /// Horizontal (non-radial) speed [m/s].
    pub fn horizontal_speed(&self) -> f64 {
        self.v_phi.hypot(self.v_theta)
    }

    /// Velocity as a local-frame vector `(v_r, v_phi, v_theta)`.
    pub fn velocity_local(&self) -> Vector3<f64> {
        Vector3::new(self.v_r, self.v_phi, self.v_theta)
    }
}

/// Lander state in the inertial frame aligned with the landing site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianState {
    /// Time [s]
    pub t: f64,
    /// Position from the Moon center [m]
    pub position: Vector3<f64>,
    /// Inertial velocity [m/s]
    pub velocity: Vector3<f64>,
    /// Mass [kg]
    pub m: f64,
}

/// Local orthonormal triad `(e_r, e_phi, e_theta)` at angles `(phi, theta)`.
pub fn local_frame(phi: f64, theta: f64) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    let e_r = Vector3::new(cp * ct, sp, cp * st);
    let e_phi = Vector3::new(-sp * ct, cp, -sp * st);
    let e_theta = Vector3::new(-st, 0.0, ct);
    (e_r, e_phi, e_theta)
}

/// Central-field gravitational acceleration at `position` (from the Moon center).
pub fn gravity_accel(position: &Vector3<f64>, constants: &MoonConstants) -> Result<Vector3<f64>> {
    let r = position.norm();
    if r <= 0.0 {
        return Err(Error::ZeroRadius);
    }
    Ok(-position * (constants.mu / (r * r * r)))
}

/// Converts a spherical state to the inertial Cartesian frame.
pub fn spherical_to_cartesian(s: &SphericalState) -> CartesianState {
    let (e_r, e_phi, e_theta) = local_frame(s.phi, s.theta);
    CartesianState {
        t: s.t,
        position: e_r * s.r,
        velocity: e_r * s.v_r + e_phi * s.v_phi + e_theta * s.v_theta,
        m: s.m,
    }
}

/// Converts an inertial Cartesian state back to spherical coordinates.
///
/// Fails near the poles where the along-track angle degenerates.
pub fn cartesian_to_spherical(c: &CartesianState) -> Result<SphericalState> {
    let r = c.position.norm();
    if r <= 0.0 {
        return Err(Error::ZeroRadius);
    }
    let phi = (c.position.y / r).asin();
    if phi.cos().abs() < 1e-9 {
        return Err(Error::PoleSingularity { phi });
    }
    let theta = c.position.z.atan2(c.position.x);
    let (e_r, e_phi, e_theta) = local_frame(phi, theta);
    Ok(SphericalState {
        t: c.t,
        r,
        phi,
        theta,
        v_r: c.velocity.dot(&e_r),
        v_phi: c.velocity.dot(&e_phi),
        v_theta: c.velocity.dot(&e_theta),
        m: c.m,
    })
}

/// State at the periselene of an elliptic orbit with the given altitudes.
///
/// The state is planar (`phi = v_phi = v_r = 0`) with `theta = 0` as the
/// along-track placeholder; the braking-burn solver reports the actual start
/// angle.
pub fn periselene_state(
    peri_alt: f64,
    apo_alt: f64,
    mass: f64,
    constants: &MoonConstants,
) -> Result<SphericalState> {
    if peri_alt < 0.0 || apo_alt < peri_alt {
        return Err(Error::InvalidInput(format!(
            "invalid orbit altitudes: peri {peri_alt} m, apo {apo_alt} m"
        )));
    }
    let r_p = constants.r_moon + peri_alt;
    let r_a = constants.r_moon + apo_alt;
    let sma = 0.5 * (r_p + r_a);
    let v = (constants.mu * (2.0 / r_p - 1.0 / sma)).sqrt();
    Ok(SphericalState {
        t: 0.0,
        r: r_p,
        phi: 0.0,
        theta: 0.0,
        v_r: 0.0,
        v_phi: 0.0,
        v_theta: v,
        m: mass,
    })
}

/// Orbital period of an ellipse with the given apsis altitudes [s].
pub fn orbital_period(peri_alt: f64, apo_alt: f64, constants: &MoonConstants) -> f64 {
    let sma = constants.r_moon + 0.5 * (peri_alt + apo_alt);
    std::f64::consts::TAU * (sma.powi(3) / constants.mu).sqrt()
}
