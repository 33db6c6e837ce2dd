//! Fixed-step integrators for the model vector fields and conservation
//! drift reports along trajectories.
//!
//! Two deliberate omissions: no adaptive stepping, so drift is attributable
//! to scheme order rather than controller behavior, and no re-projection
//! onto invariant leaves, so conservation quality measures the dynamics
//! rather than masking errors.

use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::phase::PhasePoint;
use crate::poisson::{IntegralClass, IntegralFamily};

/// Fixed-point tolerance of the implicit midpoint solve (max norm of the
/// iteration increment).
pub const MIDPOINT_TOLERANCE: f64 = 1e-13;
/// Iteration cap of the midpoint solve.
pub const MIDPOINT_MAX_ITERATIONS: usize = 50;
/// Relative-drift denominators are floored at this value.
pub const DRIFT_DENOMINATOR_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4,
    ImplicitMidpoint,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::Rk4 => "rk4",
            Method::ImplicitMidpoint => "implicit_midpoint",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        Ok(match tag {
            "rk4" => Method::Rk4,
            "implicit_midpoint" => Method::ImplicitMidpoint,
            other => return Err(Error::Input(format!("unknown integrator \"{other}\""))),
        })
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.tag())
    }
}

/// One step of the chosen scheme. `t` is the current time, used only to
/// annotate solver failures. The step size may be negative (reverse run).
pub fn step(
    method: Method,
    spec: &ModelSpec,
    x: &PhasePoint,
    dt: f64,
    t: f64,
) -> Result<PhasePoint> {
    match method {
        Method::Rk4 => Ok(rk4_step(spec, x, dt)),
        Method::ImplicitMidpoint => midpoint_step(spec, x, dt, t),
    }
}

/// The classical four-stage scheme.
pub fn rk4_step(spec: &ModelSpec, x: &PhasePoint, dt: f64) -> PhasePoint {
    let k1 = spec.vector_field(x);
    let k2 = spec.vector_field(&x.add_scaled(0.5 * dt, &k1));
    let k3 = spec.vector_field(&x.add_scaled(0.5 * dt, &k2));
    let k4 = spec.vector_field(&x.add_scaled(dt, &k3));
    x.add_scaled(dt / 6.0, &k1)
        .add_scaled(dt / 3.0, &k2)
        .add_scaled(dt / 3.0, &k3)
        .add_scaled(dt / 6.0, &k4)
}

/// Solves y = x + dt f((x+y)/2) by fixed-point iteration from an explicit
/// Euler predictor.
pub fn midpoint_step(spec: &ModelSpec, x: &PhasePoint, dt: f64, t: f64) -> Result<PhasePoint> {
    let mut y = x.add_scaled(dt, &spec.vector_field(x));
    let mut increment = f64::INFINITY;
    for _ in 0..MIDPOINT_MAX_ITERATIONS {
        let mid = x.add_scaled(1.0, &y).scale(0.5);
        let next = x.add_scaled(dt, &spec.vector_field(&mid));
        increment = next.add_scaled(-1.0, &y).max_abs();
        y = next;
        if increment <= MIDPOINT_TOLERANCE {
            return Ok(y);
        }
    }
    Err(Error::MidpointDiverged {
        iterations: MIDPOINT_MAX_ITERATIONS,
        t,
        dt,
        increment,
    })
}

/// A uniformly sampled solution: point k sits at time k dt.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub points: Vec<PhasePoint>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn time(&self, idx: usize) -> f64 {
        idx as f64 * self.dt
    }

    pub fn last(&self) -> &PhasePoint {
        self.points.last().expect("a trajectory holds its start")
    }
}

/// Integrate over [0, t_final] with ceil(t_final/dt) steps. Deterministic
/// given its inputs.
pub fn simulate(
    method: Method,
    spec: &ModelSpec,
    x0: &PhasePoint,
    dt: f64,
    t_final: f64,
) -> Result<Trajectory> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::Input("step size must be positive".into()));
    }
    if t_final < dt {
        return Err(Error::Input("total time must cover at least one step".into()));
    }
    let steps = (t_final / dt).ceil() as usize;
    let mut points = Vec::with_capacity(steps + 1);
    points.push(x0.clone());
    let mut x = x0.clone();
    for k in 0..steps {
        x = step(method, spec, &x, dt, k as f64 * dt)?;
        points.push(x.clone());
    }
    Ok(Trajectory { dt, points })
}

/// Conservation summary of one monitored function along a trajectory.
#[derive(Debug, Clone)]
pub struct DriftRow {
    pub label: String,
    pub class: IntegralClass,
    pub initial: f64,
    pub max_relative_drift: f64,
}

/// Max relative deviation of each family member from its initial value,
/// with denominator max(|initial|, floor).
pub fn drift_report(traj: &Trajectory, fam: &IntegralFamily) -> Vec<DriftRow> {
    let initial = fam.eval_all(&traj.points[0]);
    let mut worst = vec![0.0f64; fam.len()];
    for p in traj.points.iter().skip(1) {
        let values = fam.eval_all(p);
        for (i, v) in values.iter().enumerate() {
            let denom = initial[i].abs().max(DRIFT_DENOMINATOR_FLOOR);
            worst[i] = worst[i].max((v - initial[i]).abs() / denom);
        }
    }
    fam.meta()
        .into_iter()
        .zip(initial)
        .zip(worst)
        .map(|((m, initial), max_relative_drift)| DriftRow {
            label: m.label.clone(),
            class: m.class,
            initial,
            max_relative_drift,
        })
        .collect()
}
