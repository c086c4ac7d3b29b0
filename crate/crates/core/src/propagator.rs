//! Fixed-step Runge-Kutta propagation of the spherical dynamics with
//! event-based termination.

use crate::dynamics::{eom_spherical, EngineModel, GravityModel, ThrustCommand};
use crate::error::{Error, Result};
use crate::moon::{MoonConstants, SphericalState};

/// Steering command as a function of time and current state.
pub trait SteeringLaw {
    fn command(&self, t: f64, state: &SphericalState) -> ThrustCommand;
}

impl<F> SteeringLaw for F
where
    F: Fn(f64, &SphericalState) -> ThrustCommand,
{
    fn command(&self, t: f64, state: &SphericalState) -> ThrustCommand {
        self(t, state)
    }
}

/// Crossing direction filter for scalar event functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossing {
    Rising,
    Falling,
    Any,
}

/// Terminating conditions recognized by the propagator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    /// Absolute time reached [s].
    TimeReached { t: f64 },
    /// Altitude above the mean surface crosses a target [m].
    AltitudeCrossing { altitude: f64, direction: Crossing },
    /// Commanded pitch angle crosses a target [deg].
    PitchAngleReached { pitch_deg: f64, direction: Crossing },
    /// Along-track angle crosses a target [rad].
    ThetaCrossing { theta: f64, direction: Crossing },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventSpec {
    pub kind: EventKind,
    /// Bisection tolerance on the event time [s].
    pub tolerance: f64,
}

impl EventSpec {
    pub fn new(kind: EventKind) -> Self {
        Self {
            kind,
            tolerance: 1e-6,
        }
    }

    fn value(&self, t: f64, state: &SphericalState, cmd: &ThrustCommand, c: &MoonConstants) -> f64 {
        match self.kind {
            EventKind::TimeReached { t: target } => t - target,
            EventKind::AltitudeCrossing { altitude, .. } => state.altitude(c) - altitude,
            EventKind::PitchAngleReached { pitch_deg, .. } => cmd.pitch_deg() - pitch_deg,
            EventKind::ThetaCrossing { theta, .. } => state.theta - theta,
        }
    }

    fn direction(&self) -> Crossing {
        match self.kind {
            EventKind::TimeReached { .. } => Crossing::Rising,
            EventKind::AltitudeCrossing { direction, .. }
            | EventKind::PitchAngleReached { direction, .. }
            | EventKind::ThetaCrossing { direction, .. } => direction,
        }
    }

    fn crossed(&self, g_prev: f64, g_new: f64) -> bool {
        match self.direction() {
            Crossing::Rising => g_prev < 0.0 && g_new >= 0.0,
            Crossing::Falling => g_prev > 0.0 && g_new <= 0.0,
            Crossing::Any => (g_prev < 0.0 && g_new >= 0.0) || (g_prev > 0.0 && g_new <= 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy)]
pub struct PropagationOptions {
    /// Integration step [s].
    pub step: f64,
    pub direction: Direction,
    /// Abort with an impact error when the trajectory dips below the
    /// surface guard band (altitude < -100 m). Disabled inside shooting
    /// solvers whose intermediate iterates may be wild.
    pub surface_guard: bool,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            step: 0.1,
            direction: Direction::Forward,
            surface_guard: true,
        }
    }
}

/// One propagated sample: state plus the command active at that instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub state: SphericalState,
    pub cmd: ThrustCommand,
}

/// Time-ordered propagation output.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn first(&self) -> &TrajectorySample {
        self.samples.first().expect("empty trajectory")
    }

    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("empty trajectory")
    }

    pub fn duration(&self) -> f64 {
        self.last().state.t - self.first().state.t
    }

    /// Mass consumed between the first and last sample [kg].
    pub fn propellant_used(&self) -> f64 {
        self.first().state.m - self.last().state.m
    }

    /// Appends another leg, dropping its first sample when it duplicates the
    /// current endpoint in time.
    pub fn append(&mut self, other: Trajectory) {
        let mut iter = other.samples.into_iter();
        if let (Some(last), Some(first)) = (self.samples.last(), iter.as_slice().first()) {
            if (first.state.t - last.state.t).abs() < 1e-9 {
                iter.next();
            }
        }
        self.samples.extend(iter);
    }

    /// Angular rate of the commanded thrust direction between consecutive
    /// samples [deg/s], reported at the left sample of each pair.
    pub fn pitch_rate_series(&self) -> Vec<(f64, f64)> {
        self.samples
            .windows(2)
            .filter_map(|w| {
                let dt = w[1].state.t - w[0].state.t;
                if dt.abs() < 1e-9 {
                    return None;
                }
                let dot = w[0].cmd.u.dot(&w[1].cmd.u).clamp(-1.0, 1.0);
                Some((w[0].state.t, dot.acos().to_degrees() / dt.abs()))
            })
            .collect()
    }

    /// Sample-to-sample throttle rates `(t, |dT1/dt|, |dT2/dt|, |dTtot/dt|)` [N/s].
    pub fn throttle_rate_series(&self) -> Vec<(f64, f64, f64, f64)> {
        self.samples
            .windows(2)
            .filter_map(|w| {
                let dt = w[1].state.t - w[0].state.t;
                if dt.abs() < 1e-9 {
                    return None;
                }
                let d1 = (w[1].cmd.t1 - w[0].cmd.t1) / dt;
                let d2 = (w[1].cmd.t2 - w[0].cmd.t2) / dt;
                let dtot = (w[1].cmd.total() - w[0].cmd.total()) / dt;
                Some((w[0].state.t, d1.abs(), d2.abs(), dtot.abs()))
            })
            .collect()
    }

    /// Checks monotone time and non-increasing mass on forward trajectories.
    pub fn validate(&self) -> Result<()> {
        for w in self.samples.windows(2) {
            if w[1].state.t < w[0].state.t {
                return Err(Error::InvalidInput("non-monotone sample times".into()));
            }
            if w[1].state.m > w[0].state.m + 1e-9 {
                return Err(Error::InvalidInput("mass increased along trajectory".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    SpanExhausted,
    Event { index: usize, t: f64 },
}

#[derive(Debug, Clone)]
pub struct Propagation {
    pub trajectory: Trajectory,
    pub termination: Termination,
}

fn state_to_vec(s: &SphericalState) -> [f64; 7] {
    [s.r, s.phi, s.theta, s.v_r, s.v_phi, s.v_theta, s.m]
}

fn vec_to_state(t: f64, y: &[f64; 7]) -> SphericalState {
    SphericalState {
        t,
        r: y[0],
        phi: y[1],
        theta: y[2],
        v_r: y[3],
        v_phi: y[4],
        v_theta: y[5],
        m: y[6],
    }
}

fn axpy(y: &[f64; 7], k: &[f64; 7], h: f64) -> [f64; 7] {
    let mut out = [0.0; 7];
    for i in 0..7 {
        out[i] = y[i] + h * k[i];
    }
    out
}

/// One classical RK4 step of size `h` (signed).
fn rk4_step(
    t: f64,
    y: &[f64; 7],
    h: f64,
    steering: &dyn SteeringLaw,
    engine: &EngineModel,
    constants: &MoonConstants,
    gravity: &GravityModel,
) -> Result<[f64; 7]> {
    let eval = |t: f64, y: &[f64; 7]| -> Result<[f64; 7]> {
        let s = vec_to_state(t, y);
        let cmd = steering.command(t, &s);
        eom_spherical(&s, &cmd, engine, constants, gravity)
    };
    let k1 = eval(t, y)?;
    let k2 = eval(t + 0.5 * h, &axpy(y, &k1, 0.5 * h))?;
    let k3 = eval(t + 0.5 * h, &axpy(y, &k2, 0.5 * h))?;
    let k4 = eval(t + h, &axpy(y, &k3, h))?;
    let mut out = [0.0; 7];
    for i in 0..7 {
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

/// Propagates `initial` under `steering` for up to `span` seconds.
///
/// Integration uses fixed-step classical RK4 with an exact partial final
/// step; events are located by bisection of the step to their tolerance.
pub fn propagate(
    initial: &SphericalState,
    steering: &dyn SteeringLaw,
    span: f64,
    events: &[EventSpec],
    engine: &EngineModel,
    constants: &MoonConstants,
    gravity: &GravityModel,
    options: &PropagationOptions,
) -> Result<Propagation> {
    if options.step <= 0.0 {
        return Err(Error::InvalidInput("step must be positive".into()));
    }
    if span < 0.0 {
        return Err(Error::InvalidInput("span must be non-negative".into()));
    }
    let sign = match options.direction {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    };
    let t_end = initial.t + sign * span;

    let mut t = initial.t;
    let mut y = state_to_vec(initial);
    let mut cmd = steering.command(t, initial);
    let mut g_prev: Vec<f64> = events
        .iter()
        .map(|e| e.value(t, initial, &cmd, constants))
        .collect();

    let mut trajectory = Trajectory {
        samples: vec![TrajectorySample {
            state: *initial,
            cmd,
        }],
    };

    while (t_end - t) * sign > 1e-12 {
        let h = sign * options.step.min((t_end - t) * sign);
        let y_new = rk4_step(t, &y, h, steering, engine, constants, gravity)?;
        let t_new = t + h;
        let s_new = vec_to_state(t_new, &y_new);
        let cmd_new = steering.command(t_new, &s_new);

        // event scan across this step
        let mut hit: Option<(usize, f64)> = None; // (event index, fraction h_hit)
        for (i, ev) in events.iter().enumerate() {
            let g_new = ev.value(t_new, &s_new, &cmd_new, constants);
            if ev.crossed(g_prev[i], g_new) {
                let h_hit = bisect_event(
                    t, &y, h, ev, g_prev[i], steering, engine, constants, gravity,
                )?;
                match hit {
                    Some((_, best)) if best.abs() <= h_hit.abs() => {}
                    _ => hit = Some((i, h_hit)),
                }
            }
        }

        if let Some((index, h_hit)) = hit {
            let y_hit = rk4_step(t, &y, h_hit, steering, engine, constants, gravity)?;
            let t_hit = t + h_hit;
            let s_hit = vec_to_state(t_hit, &y_hit);
            let cmd_hit = steering.command(t_hit, &s_hit);
            trajectory.samples.push(TrajectorySample {
                state: s_hit,
                cmd: cmd_hit,
            });
            return Ok(Propagation {
                trajectory,
                termination: Termination::Event { index, t: t_hit },
            });
        }

        if options.surface_guard {
            let alt = s_new.altitude(constants);
            if alt < -100.0 {
                return Err(Error::Impact {
                    t: t_new,
                    altitude: alt,
                });
            }
        }

        for (i, ev) in events.iter().enumerate() {
            g_prev[i] = ev.value(t_new, &s_new, &cmd_new, constants);
        }
        t = t_new;
        y = y_new;
        cmd = cmd_new;
        trajectory.samples.push(TrajectorySample {
            state: s_new,
            cmd,
        });
    }

    Ok(Propagation {
        trajectory,
        termination: Termination::SpanExhausted,
    })
}

/// Propagates and requires an event; exhausting the span is an error.
pub fn propagate_to_event(
    initial: &SphericalState,
    steering: &dyn SteeringLaw,
    span: f64,
    events: &[EventSpec],
    engine: &EngineModel,
    constants: &MoonConstants,
    gravity: &GravityModel,
    options: &PropagationOptions,
) -> Result<Propagation> {
    let p = propagate(
        initial, steering, span, events, engine, constants, gravity, options,
    )?;
    match p.termination {
        Termination::Event { .. } => Ok(p),
        Termination::SpanExhausted => Err(Error::NoEvent { span }),
    }
}

/// Bisects the sub-step length at which the event function crosses zero.
#[allow(clippy::too_many_arguments)]
fn bisect_event(
    t: f64,
    y: &[f64; 7],
    h: f64,
    ev: &EventSpec,
    g_lo: f64,
    steering: &dyn SteeringLaw,
    engine: &EngineModel,
    constants: &MoonConstants,
    gravity: &GravityModel,
) -> Result<f64> {
    let mut lo = 0.0_f64;
    let mut hi = h;
    let mut g_lo = g_lo;
    while (hi - lo).abs() > ev.tolerance {
        let mid = 0.5 * (lo + hi);
        let y_mid = rk4_step(t, y, mid, steering, engine, constants, gravity)?;
        let s_mid = vec_to_state(t + mid, &y_mid);
        let cmd_mid = steering.command(t + mid, &s_mid);
        let g_mid = ev.value(t + mid, &s_mid, &cmd_mid, constants);
        if ev.crossed(g_lo, g_mid) {
            hi = mid;
        } else {
            lo = mid;
            g_lo = g_mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moon::{orbital_period, periselene_state};
    use approx::assert_relative_eq;
    use nalgebra::Vector3;

    fn coast() -> impl SteeringLaw {
        |_t: f64, _s: &SphericalState| ThrustCommand::coast()
    }

    #[test]
    fn kepler_orbit_closes_after_one_period() {
        let c = MoonConstants::default();
        let e = EngineModel::default();
        let s0 = periselene_state(30_000.0, 100_000.0, 7000.0, &c).unwrap();
        // period from the hand Kepler formula: 2*pi*sqrt(a^3/mu)
        let period = orbital_period(30_000.0, 100_000.0, &c);
        assert!((period - 6866.6).abs() < 1.0, "period = {period}");
        let p = propagate(
            &s0,
            &coast(),
            period,
            &[],
            &e,
            &c,
            &GravityModel::Kepler,
            &PropagationOptions::default(),
        )
        .unwrap();
        let sf = p.trajectory.last().state;
        assert_relative_eq!(sf.r, s0.r, max_relative = 1e-6);
        assert_relative_eq!(sf.v_theta, s0.v_theta, max_relative = 1e-6);
        assert!(sf.v_r.abs() / s0.v_theta < 1e-6);
        assert!((sf.theta - s0.theta).abs() < 1e-6);
    }

    #[test]
    fn forward_then_backward_recovers_initial_state() {
        let c = MoonConstants::default();
        let e = EngineModel::default();
        let s0 = periselene_state(30_000.0, 100_000.0, 7000.0, &c).unwrap();
        let law = |_t: f64, _s: &SphericalState| {
            ThrustCommand::new(12_000.0, 6_000.0, Vector3::new(0.1, 0.0, -1.0))
        };
        let fwd = propagate(
            &s0,
            &law,
            60.0,
            &[],
            &e,
            &c,
            &GravityModel::Kepler,
            &PropagationOptions::default(),
        )
        .unwrap();
        let back = propagate(
            &fwd.trajectory.last().state,
            &law,
            60.0,
            &[],
            &e,
            &c,
            &GravityModel::Kepler,
            &PropagationOptions {
                direction: Direction::Backward,
                ..Default::default()
            },
        )
        .unwrap();
        let s_back = back.trajectory.last().state;
        assert_relative_eq!(s_back.r, s0.r, max_relative = 1e-9);
        assert_relative_eq!(s_back.v_theta, s0.v_theta, max_relative = 1e-9);
        assert_relative_eq!(s_back.m, s0.m, max_relative = 1e-9);
        assert!((s_back.v_r - s0.v_r).abs() < 1e-6);
    }

    #[test]
    fn altitude_event_on_descending_arc() {
        let c = MoonConstants::default();
        let e = EngineModel::default();
        // gentle retrograde braking from low periselene forces descent
        let s0 = periselene_state(2_000.0, 2_000.0, 7000.0, &c).unwrap();
        let law = |_t: f64, _s: &SphericalState| {
            ThrustCommand::new(12_000.0, 6_000.0, Vector3::new(0.0, 0.0, -1.0))
        };
        let p = propagate_to_event(
            &s0,
            &law,
            600.0,
            &[EventSpec::new(EventKind::AltitudeCrossing {
                altitude: 500.0,
                direction: Crossing::Falling,
            })],
            &e,
            &c,
            &GravityModel::Kepler,
            &PropagationOptions::default(),
        )
        .unwrap();
        let alt = p.trajectory.last().state.altitude(&c);
        assert!((alt - 500.0).abs() < 1e-3, "altitude at event = {alt}");
        assert!(matches!(p.termination, Termination::Event { index: 0, .. }));
    }

    #[test]
    fn event_location_consistent_across_step_sizes() {
        let c = MoonConstants::default();
        let e = EngineModel::default();
        let s0 = periselene_state(2_000.0, 2_000.0, 7000.0, &c).unwrap();
        let law = |_t: f64, _s: &SphericalState| {
            ThrustCommand::new(12_000.0, 6_000.0, Vector3::new(0.0, 0.0, -1.0))
        };
        let ev = [EventSpec::new(EventKind::AltitudeCrossing {
            altitude: 500.0,
            direction: Crossing::Falling,
        })];
        let mut times = vec![];
        for step in [0.5, 0.25, 0.1, 0.05] {
            let p = propagate_to_event(
                &s0,
                &law,
                600.0,
                &ev,
                &e,
                &c,
                &GravityModel::Kepler,
                &PropagationOptions {
                    step,
                    ..Default::default()
                },
            )
            .unwrap();
            match p.termination {
                Termination::Event { t, .. } => times.push(t),
                _ => unreachable!(),
            }
        }
        for t in &times[1..] {
            assert!((t - times[0]).abs() < 1e-3, "event times {times:?}");
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let c = MoonConstants::default();
        let e = EngineModel::default();
        let s0 = periselene_state(30_000.0, 100_000.0, 7000.0, &c).unwrap();
        let law = |t: f64, _s: &SphericalState| {
            ThrustCommand::new(12_000.0, 6_000.0, Vector3::new(0.2 + 1e-3 * t, 0.0, -1.0))
        };
        let run = |step: f64| {
            let p = propagate(
                &s0,
                &law,
                120.0,
                &[],
                &e,
                &c,
                &GravityModel::Kepler,
                &PropagationOptions {
                    step,
                    ..Default::default()
                },
            )
            .unwrap();
            p.trajectory.last().state
        };
        let reference = run(0.0125);
        let err = |s: &SphericalState| {
            ((s.r - reference.r) / reference.r).abs()
                + ((s.v_theta - reference.v_theta) / reference.v_theta).abs()
                + (s.v_r - reference.v_r).abs() / reference.v_theta.abs()
        };
        let e1 = err(&run(0.8));
        let e2 = err(&run(0.4));
        assert!(
            e1 / e2 >= 8.0,
            "convergence ratio {:.2} below 4th order floor",
            e1 / e2
        );
    }

    #[test]
    fn energy_and_momentum_conserved_unpowered() {
        let c = MoonConstants::default();
        let e = EngineModel::default();
        let s0 = periselene_state(30_000.0, 100_000.0, 7000.0, &c).unwrap();
        let p = propagate(
            &s0,
            &coast(),
            600.0,
            &[],
            &e,
            &c,
            &GravityModel::Kepler,
            &PropagationOptions::default(),
        )
        .unwrap();
        let energy = |s: &SphericalState| 0.5 * s.speed().powi(2) - c.mu / s.r;
        let ang_mom = |s: &SphericalState| s.r * s.v_theta.hypot(s.v_phi);
        let (e0, h0) = (energy(&s0), ang_mom(&s0));
        for sample in &p.trajectory.samples {
            assert_relative_eq!(energy(&sample.state), e0, max_relative = 1e-9);
            assert_relative_eq!(ang_mom(&sample.state), h0, max_relative = 1e-9);
        }
    }

    #[test]
    fn no_event_is_reported_not_fatal() {
        let c = MoonConstants::default();
        let e = EngineModel::default();
        let s0 = periselene_state(30_000.0, 100_000.0, 7000.0, &c).unwrap();
        let p = propagate(
            &s0,
            &coast(),
            10.0,
            &[EventSpec::new(EventKind::AltitudeCrossing {
                altitude: 10.0,
                direction: Crossing::Falling,
            })],
            &e,
            &c,
            &GravityModel::Kepler,
            &PropagationOptions::default(),
        )
        .unwrap();
        assert_eq!(p.termination, Termination::SpanExhausted);
        assert!(matches!(
            propagate_to_event(
                &s0,
                &coast(),
                10.0,
                &[EventSpec::new(EventKind::AltitudeCrossing {
                    altitude: 10.0,
                    direction: Crossing::Falling,
                })],
                &e,
                &c,
                &GravityModel::Kepler,
                &PropagationOptions::default(),
            ),
            Err(Error::NoEvent { .. })
        ));
    }
}
