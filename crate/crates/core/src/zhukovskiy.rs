//! Rolling-cone geometry of three-dimensional gyrostats.
//!
//! Zhukovskiy's classical construction reads the motion of a free gyrostat
//! off the MacCullagh ellipsoid X²/A + Y²/B + Z²/C = 1/m of a transformed
//! body of mass m.  The momentum ray meets the ellipsoid at a pole N whose
//! tangent plane is normal to the angular velocity, and the feet, axis
//! intercepts and angles of that plane turn the conserved quantities into
//! incidence statements: the plane stays at a fixed distance from the
//! origin, the pole stays on a fixed sphere around the rotor point, and
//! the momentum axis and its orthogonal companion sweep a pair of cones
//! that roll over each other with sliding.
//!
//! [`zh_state`] evaluates the full record at one instant, [`zh_verify`]
//! returns the identity residuals, and [`zh_trace`] follows a trajectory
//! and summarizes how well the point invariants are conserved.

use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::models::{Family, Inertia, ModelSpec};
use crate::skew::vee3;
use nalgebra::Vector3;

/// Relative threshold below which a configuration counts as degenerate:
/// the momentum axis parallel to the tangent plane (no axis intercept) or
/// parallel to the angular velocity (the cone collapses to its axis).
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

/// Relative-drift denominators are floored at this value so that integrals
/// starting at zero do not divide by zero.
const DRIFT_DENOMINATOR_FLOOR: f64 = 1e-8;

/// One-instant record of the rolling-cone construction.
///
/// Points are position vectors from the fixed point O of the body.  The
/// two `Option` points and the two rates are absent exactly when the flag
/// that makes them meaningless is set.
#[derive(Clone, Debug)]
pub struct ZhGeometry {
    /// Kinetic energy ⟨M, Ω⟩ / 2 of the transformed body.
    pub h: f64,
    /// Norm of the total angular momentum K = M + L.
    pub k: f64,
    /// Mass of the transformed body; it only rescales the ellipsoid.
    pub m: f64,
    /// Pole N: intersection of the ray through M with the ellipsoid.
    pub pole: Vector3<f64>,
    /// Foot S of the perpendicular from O onto the tangent plane at N.
    pub foot: Vector3<f64>,
    /// Rotor point −L/√(2mh); the pole stays on a fixed sphere around it.
    pub rotor_point: Vector3<f64>,
    /// Axis intercept: where the momentum axis meets the tangent plane.
    pub axis_point: Option<Vector3<f64>>,
    /// Companion point F of the tangent plane, on the line through the
    /// axis intercept and the foot, with OF orthogonal to the momentum.
    pub far_point: Option<Vector3<f64>>,
    /// Distance p = |OS| from O to the tangent plane.
    pub p: f64,
    /// Distance r = |ON| from O to the pole.
    pub r: f64,
    /// Angle at O between the foot and the axis intercept; zero when the
    /// cone degenerates, a right angle when the intercept is missing.
    pub alpha: f64,
    /// Sliding rate θ = √(2h/m) / |O axis_point|.
    pub theta: Option<f64>,
    /// Rolling rate θ′ = √(2h/m) / |OF|; zero when the cone degenerates.
    pub theta_prime: Option<f64>,
    /// Cone-normal direction (2h + ⟨L, Ω⟩) K − |K|² Ω, parallel to OF.
    pub cone_normal: Vector3<f64>,
    /// The momentum and the angular velocity are parallel: the axis
    /// intercept coincides with the foot and F escapes to infinity.
    pub degenerate_cone: bool,
    /// The momentum is parallel to the tangent plane: no axis intercept.
    pub momentum_in_plane: bool,
}

impl ZhGeometry {
    /// True when either degeneracy flag is set.
    pub fn is_flagged(&self) -> bool {
        self.degenerate_cone || self.momentum_in_plane
    }

    /// Total angular momentum vector, reconstructed from the stored
    /// points: K = (N − rotor point) · √(2mh).
    pub fn momentum(&self) -> Vector3<f64> {
        (self.pole - self.rotor_point) * (2.0 * self.m * self.h).sqrt()
    }
}

/// Evaluates the rolling-cone record for one state of a gyrostat with
/// principal inertia `inertia = (A, B, C)`, gyroscopic momentum `rotor`,
/// transformed-body mass `m` and angular velocity `omega`.
pub fn zh_state(
    inertia: &Vector3<f64>,
    rotor: &Vector3<f64>,
    m: f64,
    omega: &Vector3<f64>,
) -> Result<ZhGeometry> {
    if !(inertia.iter().all(|a| *a > 0.0) && m > 0.0) {
        return Err(Error::Input(
            "principal inertia entries and the mass must be positive".into(),
        ));
    }
    let momentum = inertia.component_mul(omega);
    if omega.norm() == 0.0 {
        return Err(Error::Input("the angular velocity must be nonzero".into()));
    }
    let h = 0.5 * momentum.dot(omega);
    // M = IΩ with positive inertia, so h > 0 whenever Ω ≠ 0.
    let scale = (2.0 * m * h).sqrt();
    let pole = momentum / scale;
    // Half the ellipsoid gradient at the pole; equals Ω/√(2mh), which is
    // the classical statement that Ω is normal to the ellipsoid at N.
    let grad = pole.component_div(inertia);
    let foot = grad / (m * grad.norm_squared());
    let p = foot.norm();
    let r = pole.norm();
    let k_vec = momentum + rotor;
    let k = k_vec.norm();
    let rotor_point = -rotor / scale;
    let cone_normal = (2.0 * h + rotor.dot(omega)) * k_vec - k * k * omega;

    let plane_pairing = grad.dot(&k_vec);
    let momentum_in_plane = plane_pairing.abs() <= DEGENERACY_TOLERANCE * grad.norm() * k;
    let degenerate_cone = !momentum_in_plane
        && k_vec.cross(omega).norm() <= DEGENERACY_TOLERANCE * k * omega.norm();

    let rate_scale = (2.0 * h / m).sqrt();
    let (axis_point, far_point, alpha, theta, theta_prime) = if momentum_in_plane {
        (None, None, std::f64::consts::FRAC_PI_2, None, None)
    } else {
        let axis = k_vec / (m * plane_pairing);
        let theta = rate_scale / axis.norm();
        if degenerate_cone {
            (Some(axis), None, 0.0, Some(theta), Some(0.0))
        } else {
            let cos_alpha = (foot.dot(&axis) / (p * axis.norm())).clamp(-1.0, 1.0);
            // F sits on the line through the axis intercept and the foot,
            // at the unique point orthogonal to the momentum.
            let s = k_vec.dot(&axis) / k_vec.dot(&(axis - foot));
            let far = axis + s * (foot - axis);
            let theta_prime = rate_scale / far.norm();
            (
                Some(axis),
                Some(far),
                cos_alpha.acos(),
                Some(theta),
                Some(theta_prime),
            )
        }
    };

    Ok(ZhGeometry {
        h,
        k,
        m,
        pole,
        foot,
        rotor_point,
        axis_point,
        far_point,
        p,
        r,
        alpha,
        theta,
        theta_prime,
        cone_normal,
        degenerate_cone,
        momentum_in_plane,
    })
}

/// One identity residual; `value` is `None` when a degeneracy flag made
/// the identity inapplicable at this state.
#[derive(Clone, Debug)]
pub struct ZhResidual {
    pub name: &'static str,
    pub value: Option<f64>,
}

/// Residuals of the defining identities of the construction, evaluated
/// from a record plus the momentum and angular velocity it came from:
/// the plane distance times the speed, the sphere radius around the rotor
/// point, the right angle at O, the foot on the hypotenuse, the two rate
/// formulas, and the companion point direction.  All vanish to rounding
/// for non-degenerate states; flagged rows are skipped.
pub fn zh_verify(
    geom: &ZhGeometry,
    k_vec: &Vector3<f64>,
    omega: &Vector3<f64>,
) -> Vec<ZhResidual> {
    let rate_scale = (2.0 * geom.h / geom.m).sqrt();
    let sphere_scale = (2.0 * geom.m * geom.h).sqrt();
    let speed = omega.norm();

    let plane_distance_speed = Some((geom.p * speed - rate_scale).abs());
    // Checked against the supplied momentum, not the stored norm.
    let momentum_sphere =
        Some(((geom.rotor_point - geom.pole).norm() * sphere_scale - k_vec.norm()).abs());
    let right_angle = match (&geom.far_point, &geom.axis_point) {
        (Some(far), Some(axis)) => Some(far.dot(axis).abs()),
        _ => None,
    };
    let foot_on_hypotenuse = match (&geom.far_point, &geom.axis_point) {
        (Some(far), Some(axis)) => {
            Some((geom.foot - axis).cross(&(far - axis)).norm())
        }
        _ => None,
    };
    let sliding_rate = geom
        .theta
        .map(|theta| (theta - speed * geom.alpha.cos()).abs());
    let rolling_rate = geom
        .theta_prime
        .map(|theta| (theta - speed * geom.alpha.sin()).abs());
    let cone_axis = geom
        .far_point
        .as_ref()
        .map(|far| far.cross(&geom.cone_normal).norm() / (far.norm() * geom.cone_normal.norm()));

    vec![
        ZhResidual { name: "plane_distance_speed", value: plane_distance_speed },
        ZhResidual { name: "momentum_sphere", value: momentum_sphere },
        ZhResidual { name: "right_angle", value: right_angle },
        ZhResidual { name: "foot_on_hypotenuse", value: foot_on_hypotenuse },
        ZhResidual { name: "sliding_rate", value: sliding_rate },
        ZhResidual { name: "rolling_rate", value: rolling_rate },
        ZhResidual { name: "cone_axis", value: cone_axis },
    ]
}

/// Per-sample geometry along a trajectory, with the conservation summary
/// for the quantities the construction promises are constant.
#[derive(Clone, Debug)]
pub struct ZhTrace {
    pub times: Vec<f64>,
    pub samples: Vec<ZhGeometry>,
    /// Max relative drift of the kinetic energy h.
    pub h_drift: f64,
    /// Max relative drift of the momentum norm k.
    pub k_drift: f64,
    /// Max relative drift of the sphere radius |rotor point − pole|.
    pub radius_drift: f64,
    /// Fraction of samples with a degeneracy flag set.
    pub flagged_fraction: f64,
}

/// Evaluates the construction along a trajectory of a triaxial free
/// gyrostat (the only family whose momentum is fixed in space, which is
/// what makes the plane and sphere of the construction stationary).
pub fn zh_trace(spec: &ModelSpec, traj: &Trajectory, m: f64) -> Result<ZhTrace> {
    if spec.family() != Family::Classical3Euler {
        return Err(Error::Model(
            "the rolling-cone trace requires a classical3 euler gyrostat".into(),
        ));
    }
    let inertia = match spec.inertia() {
        Inertia::Principal3(i) => Vector3::new(i[0], i[1], i[2]),
        Inertia::MassTensor(_) => {
            return Err(Error::Model("the trace needs a principal inertia".into()))
        }
    };
    let l = spec
        .rotor_vec3()
        .expect("classical3 specs carry an axis-vector rotor");
    let rotor = Vector3::new(l[0], l[1], l[2]);

    let mut times = Vec::with_capacity(traj.len());
    let mut samples = Vec::with_capacity(traj.len());
    let mut flagged = 0usize;
    for (idx, x) in traj.points.iter().enumerate() {
        let w = vee3(&spec.omega(x))?;
        let omega = Vector3::new(w[0], w[1], w[2]);
        let geom = zh_state(&inertia, &rotor, m, &omega)?;
        if geom.is_flagged() {
            flagged += 1;
        }
        times.push(traj.time(idx));
        samples.push(geom);
    }

    let drift = |value: &dyn Fn(&ZhGeometry) -> f64| -> f64 {
        let first = value(&samples[0]);
        let denom = first.abs().max(DRIFT_DENOMINATOR_FLOOR);
        samples
            .iter()
            .map(|g| (value(g) - first).abs() / denom)
            .fold(0.0, f64::max)
    };
    let h_drift = drift(&|g: &ZhGeometry| g.h);
    let k_drift = drift(&|g: &ZhGeometry| g.k);
    let radius_drift = drift(&|g: &ZhGeometry| (g.rotor_point - g.pole).norm());
    let flagged_fraction = flagged as f64 / samples.len() as f64;

    Ok(ZhTrace {
        times,
        samples,
        h_drift,
        k_drift,
        radius_drift,
        flagged_fraction,
    })
}

/// Header of the per-sample CSV emitted for plotting.
pub fn csv_header() -> String {
    "t,h,k,N_x,N_y,N_z,S_x,S_y,S_z,p,K_x,K_y,K_z,F_x,F_y,F_z,alpha,theta,theta_prime,flags"
        .to_string()
}

/// One CSV row matching [`csv_header`]; absent points and rates print as
/// `nan`, and the flags column lists the set flags or `-`.
pub fn csv_row(t: f64, geom: &ZhGeometry) -> String {
    fn num(v: f64) -> String {
        format!("{v:.16e}")
    }
    fn opt(v: Option<f64>) -> String {
        v.map_or_else(|| "nan".to_string(), num)
    }
    fn point(v: &Option<Vector3<f64>>, i: usize) -> String {
        opt(v.as_ref().map(|p| p[i]))
    }
    let flags = match (geom.degenerate_cone, geom.momentum_in_plane) {
        (false, false) => "-".to_string(),
        (true, false) => "degenerate_cone".to_string(),
        (false, true) => "momentum_in_plane".to_string(),
        (true, true) => "degenerate_cone;momentum_in_plane".to_string(),
    };
    let cols = [
        num(t),
        num(geom.h),
        num(geom.k),
        num(geom.pole[0]),
        num(geom.pole[1]),
        num(geom.pole[2]),
        num(geom.foot[0]),
        num(geom.foot[1]),
        num(geom.foot[2]),
        num(geom.p),
        point(&geom.axis_point, 0),
        point(&geom.axis_point, 1),
        point(&geom.axis_point, 2),
        point(&geom.far_point, 0),
        point(&geom.far_point, 1),
        point(&geom.far_point, 2),
        num(geom.alpha),
        opt(geom.theta),
        opt(geom.theta_prime),
        flags,
    ];
    cols.join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::{simulate, Method};
    use crate::models::ModelSpec;
    use crate::phase::{PhasePoint, Representation};
    use crate::skew::hat3;
    use nalgebra::DVector;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn max_residual(rows: &[ZhResidual]) -> f64 {
        rows.iter().filter_map(|r| r.value).fold(0.0, f64::max)
    }

    /// Draws a state away from both degeneracies so that the identity
    /// residuals are not amplified by a nearly-collapsed triangle.
    fn random_state(rng: &mut ChaCha8Rng) -> (Vector3<f64>, Vector3<f64>, f64, Vector3<f64>) {
        loop {
            let inertia: Vector3<f64> = Vector3::from_fn(|_, _| rng.random_range(0.5..2.5));
            let rotor: Vector3<f64> = Vector3::from_fn(|_, _| rng.random_range(-0.5..0.5));
            let m = rng.random_range(0.5..2.0);
            let omega: Vector3<f64> = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            if omega.norm() < 0.3 {
                continue;
            }
            let momentum = inertia.component_mul(&omega);
            let k_vec = momentum + rotor;
            let k = k_vec.norm();
            if k < 0.3 {
                continue;
            }
            let sine = k_vec.cross(&omega).norm() / (k * omega.norm());
            let pairing = k_vec.dot(&omega).abs() / (k * omega.norm());
            if sine < 0.05 || pairing < 0.05 {
                continue;
            }
            return (inertia, rotor, m, omega);
        }
    }

    #[test]
    fn spherical_rotation_degenerates_to_the_axis() {
        let inertia = Vector3::new(1.0, 1.0, 1.0);
        let geom = zh_state(&inertia, &Vector3::zeros(), 1.0, &Vector3::new(0.0, 0.0, 2.0))
            .unwrap();
        assert!(geom.degenerate_cone);
        assert!(!geom.momentum_in_plane);
        assert!((geom.pole - Vector3::new(0.0, 0.0, 1.0)).norm() <= 1e-15);
        assert!((geom.foot - geom.pole).norm() <= 1e-15);
        assert!((geom.p - 1.0).abs() <= 1e-15);
        assert_eq!(geom.rotor_point, Vector3::zeros());
        assert_eq!(geom.theta_prime, Some(0.0));
        assert_eq!(geom.alpha, 0.0);
        // p |Ω| = √(2h/m) and |rotor point − pole| √(2mh) = k, both exact here.
        let k_vec = geom.momentum();
        let rows = zh_verify(&geom, &k_vec, &Vector3::new(0.0, 0.0, 2.0));
        for row in &rows {
            match row.name {
                "plane_distance_speed" | "momentum_sphere" | "sliding_rate" | "rolling_rate" => {
                    assert!(row.value.expect(row.name) <= 1e-14, "{}", row.name);
                }
                _ => assert!(row.value.is_none(), "{} should be skipped", row.name),
            }
        }
    }

    #[test]
    fn triaxial_gyrostat_record_satisfies_the_definitions() {
        let inertia = Vector3::new(2.0, 1.0, 1.0);
        let rotor = Vector3::new(0.0, 0.0, 0.3);
        let omega = Vector3::new(1.0, 1.0, 0.0);
        let geom = zh_state(&inertia, &rotor, 1.0, &omega).unwrap();
        assert!(!geom.is_flagged());

        // The pole is on the ellipsoid and the foot is in the tangent plane.
        let on_ellipsoid: f64 = (0..3)
            .map(|i| geom.pole[i] * geom.pole[i] / inertia[i])
            .sum::<f64>()
            - 1.0 / geom.m;
        assert!(on_ellipsoid.abs() <= 1e-12);
        let grad = geom.pole.component_div(&inertia);
        assert!((grad.dot(&geom.foot) - 1.0 / geom.m).abs() <= 1e-12);
        assert!((grad.dot(geom.axis_point.as_ref().unwrap()) - 1.0 / geom.m).abs() <= 1e-12);
        assert!((grad.dot(geom.far_point.as_ref().unwrap()) - 1.0 / geom.m).abs() <= 1e-12);

        let k_vec = inertia.component_mul(&omega) + rotor;
        assert!(k_vec.dot(geom.far_point.as_ref().unwrap()).abs() <= 1e-12);
        assert!((geom.p * omega.norm() - (2.0 * geom.h / geom.m).sqrt()).abs() <= 1e-12);
        assert!(max_residual(&zh_verify(&geom, &k_vec, &omega)) <= 1e-12);
    }

    #[test]
    fn identities_hold_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(701);
        for _ in 0..200 {
            let (inertia, rotor, m, omega) = random_state(&mut rng);
            let geom = zh_state(&inertia, &rotor, m, &omega).unwrap();
            assert!(!geom.is_flagged());
            let k_vec = inertia.component_mul(&omega) + rotor;
            let rows = zh_verify(&geom, &k_vec, &omega);
            assert_eq!(rows.len(), 7);
            assert!(rows.iter().all(|r| r.value.is_some()));
            assert!(max_residual(&rows) <= 1e-10);
        }
    }

    #[test]
    fn momentum_in_the_tangent_plane_is_flagged() {
        // I = (1,2,2), Ω = e₁ gives ⟨Ω, M⟩ = 1; the rotor cancels it.
        let inertia = Vector3::new(1.0, 2.0, 2.0);
        let rotor = Vector3::new(-1.0, 0.5, 0.0);
        let geom = zh_state(&inertia, &rotor, 1.0, &Vector3::new(1.0, 0.0, 0.0)).unwrap();
        assert!(geom.momentum_in_plane);
        assert!(!geom.degenerate_cone);
        assert!(geom.axis_point.is_none());
        assert!(geom.far_point.is_none());
        assert!(geom.theta.is_none());
        assert_eq!(geom.alpha, std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn rates_are_homogeneous_in_the_velocity() {
        let mut rng = ChaCha8Rng::seed_from_u64(702);
        for _ in 0..50 {
            let (inertia, rotor, m, omega) = random_state(&mut rng);
            let c = rng.random_range(0.3..3.0);

            // Without a rotor the rates are degree-one homogeneous in Ω.
            let free = zh_state(&inertia, &Vector3::zeros(), m, &omega).unwrap();
            let scaled = zh_state(&inertia, &Vector3::zeros(), m, &(omega * c)).unwrap();
            let theta = free.theta.unwrap();
            assert!((scaled.theta.unwrap() - c * theta).abs() <= 1e-12 * (1.0 + c * theta));

            // With a rotor the same law needs the rotor scaled along.
            let base = zh_state(&inertia, &rotor, m, &omega).unwrap();
            let joint = zh_state(&inertia, &(rotor * c), m, &(omega * c)).unwrap();
            let theta = base.theta.unwrap();
            let prime = base.theta_prime.unwrap();
            assert!((joint.theta.unwrap() - c * theta).abs() <= 1e-12 * (1.0 + c * theta));
            assert!(
                (joint.theta_prime.unwrap() - c * prime).abs() <= 1e-12 * (1.0 + c * prime)
            );
        }
    }

    #[test]
    fn trace_conserves_the_plane_and_sphere_data() {
        let spec = crate::samples::euler3(Representation::Magnetic);
        let m0 = hat3(&DVector::from_column_slice(&[0.7, -0.4, 0.5])).unwrap();
        let x0 =
            PhasePoint::e_n(m0, DVector::from_column_slice(&[0.0, 0.6, 0.8])).unwrap();
        let traj = simulate(Method::Rk4, &spec, &x0, 1e-3, 2.0).unwrap();
        let trace = zh_trace(&spec, &traj, 1.0).unwrap();
        assert_eq!(trace.samples.len(), traj.len());
        assert!(trace.h_drift <= 1e-9, "h drift {}", trace.h_drift);
        assert!(trace.k_drift <= 1e-9, "k drift {}", trace.k_drift);
        assert!(trace.radius_drift <= 1e-9, "radius drift {}", trace.radius_drift);
        assert_eq!(trace.flagged_fraction, 0.0);
    }

    #[test]
    fn zero_rotor_pins_the_rotor_point_at_the_origin() {
        let spec = ModelSpec::classical3(
            Family::Classical3Euler,
            DVector::from_column_slice(&[1.0, 2.0, 3.0]),
            DVector::zeros(3),
            DVector::zeros(3),
            Representation::Magnetic,
        )
        .unwrap();
        let m0 = hat3(&DVector::from_column_slice(&[0.6, 0.2, -0.5])).unwrap();
        let x0 =
            PhasePoint::e_n(m0, DVector::from_column_slice(&[1.0, 0.0, 0.0])).unwrap();
        let traj = simulate(Method::Rk4, &spec, &x0, 1e-2, 1.0).unwrap();
        let trace = zh_trace(&spec, &traj, 1.0).unwrap();
        for g in &trace.samples {
            assert_eq!(g.rotor_point, Vector3::zeros());
        }
    }

    #[test]
    fn trace_rejects_other_families() {
        let spec = crate::samples::lagrange3(Representation::Magnetic);
        let x0 = PhasePoint::zero(crate::phase::ModelKind::SoSo, 3);
        let traj = Trajectory { dt: 1e-2, points: vec![x0] };
        assert!(zh_trace(&spec, &traj, 1.0).is_err());
    }

    #[test]
    fn csv_rows_match_the_header_width() {
        let inertia = Vector3::new(2.0, 1.0, 1.0);
        let geom = zh_state(
            &inertia,
            &Vector3::new(0.0, 0.0, 0.3),
            1.0,
            &Vector3::new(1.0, 1.0, 0.0),
        )
        .unwrap();
        let header = csv_header();
        let row = csv_row(0.25, &geom);
        assert_eq!(header.split(',').count(), row.split(',').count());
        assert!(row.ends_with(",-"));

        let spherical =
            zh_state(&inertia.map(|_| 1.0), &Vector3::zeros(), 1.0, &Vector3::z()).unwrap();
        let row = csv_row(0.0, &spherical);
        assert!(row.contains("nan"));
        assert!(row.ends_with("degenerate_cone"));
    }
}
