//! Cross-module properties: the spectral family against a brute-force
//! word-count oracle, isospectrality of the polynomial pairs along
//! trajectories, equivalence of the two momentum representations at the
//! trajectory level, and parameter-space sweeps of the structural
//! identities.

use gyrostat_core::diagnostics::random_points;
use gyrostat_core::integrate::{simulate, Method};
use gyrostat_core::lax::{build_lax, lax_residual, spectral_invariants};
use gyrostat_core::models::{Family, ModelSpec};
use gyrostat_core::phase::{ModelKind, PhasePoint, Representation};
use gyrostat_core::samples;
use gyrostat_core::skew::SkewMatrix;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// A lambda-coefficient whose trace cancels structurally must vanish at
/// unit scale up to accumulated rounding.
const TOL_VANISHING: f64 = 1e-11;
/// Kept coefficients against the family values, after the word-count
/// normalization is undone.
const TOL_KEPT: f64 = 1e-10;
/// Singular values of the polynomial pair along a trajectory.
const TOL_ISOSPECTRAL: f64 = 1e-10;
/// Pointwise distance between the shifted trajectory and the trajectory
/// of the shifted start.
const TOL_CONJUGACY: f64 = 1e-12;

fn polynomial_coefficients(spec: &ModelSpec, x: &PhasePoint) -> Vec<DMatrix<f64>> {
    let (lax, _) = build_lax(spec, x).unwrap();
    (0..=lax.degree()).map(|d| lax.coeff(d).clone()).collect()
}

fn convolve(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    let size = a[0].nrows();
    let mut out = vec![DMatrix::zeros(size, size); a.len() + b.len() - 1];
    for (i, p) in a.iter().enumerate() {
        for (j, q) in b.iter().enumerate() {
            out[i + j] += p * q;
        }
    }
    out
}

/// Number of length-m words of total degree j, by brute enumeration.
fn word_count_oracle(degrees: &[usize], m: usize) -> Vec<f64> {
    let top = degrees.iter().max().copied().unwrap() * m;
    let mut counts = vec![0.0; top + 1];
    for word in 0..degrees.len().pow(m as u32) {
        let mut rest = word;
        let mut degree = 0;
        for _ in 0..m {
            degree += degrees[rest % degrees.len()];
            rest /= degrees.len();
        }
        counts[degree] += 1.0;
    }
    counts
}

/// The lambda-powers the spectral family is expected to keep, written out
/// independently of the library's own table: the vector models and the
/// free body keep the even powers below the constant top coefficient,
/// the matrix-pair tops keep everything below the top.
fn expected_kept_powers(family: Family, k: usize) -> Vec<usize> {
    match family {
        Family::BelyaevEN => (0..=4 * k - 2).step_by(2).collect(),
        Family::ManakovGyro => (0..=2 * k - 2).step_by(2).collect(),
        _ => (0..=4 * k - 1).collect(),
    }
}

fn spectral_test_specs() -> Vec<ModelSpec> {
    let r = Representation::Magnetic;
    vec![
        samples::lagrange(5, r),
        samples::bitop(r),
        samples::totally_symmetric(4, r),
        samples::belyaev(4, r),
        samples::belyaev(5, r),
        samples::manakov(&[2, 2], r),
        samples::manakov(&[2, 2, 2], r),
    ]
}

/// Every lambda-coefficient of tr(P^{2k}) is accounted for: the kept ones
/// equal the family members times their word count, the top one is the
/// same constant at every point, and all remaining ones vanish
/// identically. A coefficient that were wrongly excluded would show up
/// here as a point-dependent non-vanishing trace.
#[test]
fn excluded_spectral_coefficients_are_structural() {
    for (s, spec) in spectral_test_specs().iter().enumerate() {
        let fam = spectral_invariants(spec).unwrap();
        let labels = fam.labels();
        let kind = spec.kind();
        let kmax = match kind {
            ModelKind::SoSo | ModelKind::SoN => spec.n() / 2,
            ModelKind::EN => spec.n().div_ceil(2),
        };
        let degrees: &[usize] = match kind {
            ModelKind::SoSo | ModelKind::EN => &[0, 1, 2],
            ModelKind::SoN => &[0, 1],
        };
        let points = random_points(kind, spec.n(), 4, 2101 + s as u64);
        let mut top_values: Vec<Vec<f64>> = vec![Vec::new(); kmax + 1];
        for x in &points {
            let p = polynomial_coefficients(spec, x);
            let values = fam.eval_all(x);
            let square = convolve(&p, &p);
            let mut even = square.clone();
            let mut member = 0usize;
            for k in 1..=kmax {
                if k > 1 {
                    even = convolve(&even, &square);
                }
                let counts = word_count_oracle(degrees, 2 * k);
                let kept = expected_kept_powers(spec.family(), k);
                let top = degrees.iter().max().unwrap() * 2 * k;
                for (j, coeff) in even.iter().enumerate() {
                    let trace = coeff.trace();
                    if kept.contains(&j) {
                        assert_eq!(
                            labels[member],
                            format!("tr(P^{}) l^{}", 2 * k, j),
                            "{} n={}: member order",
                            spec.family(),
                            spec.n()
                        );
                        let v = values[member];
                        assert!(
                            (trace / counts[j] - v).abs() <= TOL_KEPT * (1.0 + v.abs()),
                            "{} n={} k={} l^{}: trace {:.6e} vs member {:.6e}",
                            spec.family(),
                            spec.n(),
                            k,
                            j,
                            trace / counts[j],
                            v
                        );
                        member += 1;
                    } else if j == top {
                        top_values[k].push(trace);
                    } else {
                        assert!(
                            trace.abs() <= TOL_VANISHING,
                            "{} n={} k={} l^{}: dropped coefficient has trace {:.3e}",
                            spec.family(),
                            spec.n(),
                            k,
                            j,
                            trace
                        );
                    }
                }
            }
            assert_eq!(member, labels.len());
        }
        for (k, tops) in top_values.iter().enumerate() {
            if tops.is_empty() {
                continue;
            }
            let spread = tops.iter().fold(0.0f64, |m, v| m.max((v - tops[0]).abs()));
            let scale = 1.0 + tops[0].abs();
            assert!(
                spread <= 1e-12 * scale,
                "{} n={} k={}: top coefficient varies across points by {spread:.3e}",
                spec.family(),
                spec.n(),
                k
            );
        }
    }
}

/// Power-sum traces of the evaluated matrix, which determine its spectrum
/// as a multiset without an eigenvalue ordering.
fn power_traces(m: &DMatrix<f64>) -> Vec<f64> {
    let mut power = m.clone();
    let mut out = Vec::with_capacity(m.nrows());
    for _ in 0..m.nrows() {
        out.push(power.trace());
        power = &power * m;
    }
    out
}

/// The polynomial pair evaluated at a fixed spectral parameter keeps its
/// whole spectrum along the flow, including the odd power sums the trace
/// family never looks at. The matrix is not normal for the free body, so
/// the comparison goes through power traces rather than singular values.
#[test]
fn lax_matrices_are_isospectral_along_trajectories() {
    let r = Representation::Magnetic;
    let specs = vec![
        samples::lagrange(5, r),
        samples::bitop(r),
        samples::totally_symmetric(4, r),
        samples::belyaev(4, r),
        samples::manakov(&[2, 2, 2], r),
    ];
    for (s, spec) in specs.iter().enumerate() {
        let x0 = random_points(spec.kind(), spec.n(), 1, 2201 + s as u64)
            .pop()
            .unwrap();
        let traj = simulate(Method::Rk4, spec, &x0, 1e-3, 1.0).unwrap();
        for &lambda in &[0.7, 1.3] {
            let (lax0, _) = build_lax(spec, &x0).unwrap();
            let reference = power_traces(&lax0.eval(lambda));
            let scale = 1.0 + reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for x in traj.points.iter().step_by(200) {
                let (lax, _) = build_lax(spec, x).unwrap();
                let traces = power_traces(&lax.eval(lambda));
                let worst = reference
                    .iter()
                    .zip(&traces)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(
                    worst <= TOL_ISOSPECTRAL * scale,
                    "{} n={} lambda {lambda}: power trace moved by {worst:.3e}",
                    spec.family(),
                    spec.n()
                );
            }
        }
    }
}

/// Adding the rotor to the momentum maps solutions of the shifted
/// equations onto solutions of the unshifted ones, so integrating and
/// shifting commute to rounding accuracy.
#[test]
fn representation_conversion_intertwines_the_flows() {
    let r = Representation::Magnetic;
    let specs = vec![
        samples::lagrange(4, r),
        samples::bitop(r),
        samples::totally_symmetric(4, r),
        samples::belyaev(3, r),
        samples::manakov(&[2, 2], r),
    ];
    for (s, spec) in specs.iter().enumerate() {
        let standard = spec.with_representation(Representation::Standard);
        let x0 = random_points(spec.kind(), spec.n(), 1, 2301 + s as u64)
            .pop()
            .unwrap();
        let y0 = spec.convert(&x0, Representation::Standard);
        let shifted = simulate(Method::Rk4, spec, &x0, 1e-3, 1.0).unwrap();
        let plain = simulate(Method::Rk4, &standard, &y0, 1e-3, 1.0).unwrap();
        for (x, y) in shifted.points.iter().zip(&plain.points).step_by(100) {
            let mapped = spec.convert(x, Representation::Standard);
            let diff = mapped.add_scaled(-1.0, y);
            assert!(
                diff.max_abs() <= TOL_CONJUGACY,
                "{} n={}: trajectories separate by {:.3e}",
                spec.family(),
                spec.n(),
                diff.max_abs()
            );
        }
    }
}

fn dyadic(lo: i32, hi: i32) -> impl Strategy<Value = f64> {
    (lo..=hi).prop_map(|i| i as f64 / 64.0)
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        // Integration tests have no source root for regression files.
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    /// The polynomial pair identity is a theorem over the whole parameter
    /// space, not just the bundled instances: any block rotor, field
    /// strength, and inertia pair must keep the residual at rounding
    /// level.
    #[test]
    fn lax_identity_holds_across_the_rotor_parameters(
        a1 in dyadic(16, 128),
        gap in dyadic(1, 64),
        c in dyadic(16, 128),
        a in dyadic(-64, 64),
        b in dyadic(-64, 64),
        seed in any::<u64>(),
    ) {
        // The two inertia block values must stay distinct or the symmetry
        // grows and the spec is rejected.
        let a2 = a1 + gap;
        let chi = SkewMatrix::from_triples(4, &[(0, 1, c)]).unwrap();
        let rotor = SkewMatrix::from_triples(4, &[(0, 1, a), (2, 3, b)]).unwrap();
        let spec = ModelSpec::lagrange_so_so(
            4, a1, a2, chi, rotor, Representation::Magnetic,
        ).unwrap();
        let x = random_points(spec.kind(), 4, 1, seed).pop().unwrap();
        let residual = lax_residual(&spec, &x).unwrap();
        prop_assert!(residual <= 1e-11, "residual {residual:.3e}");
    }

    /// The free gyrostat conserves the squared total momentum for every
    /// inertia triple and every rotor, not just the bundled instance.
    #[test]
    fn free_gyrostat_conserves_the_quartic_for_any_rotor(
        i1 in dyadic(32, 192),
        i2 in dyadic(32, 192),
        i3 in dyadic(32, 192),
        l1 in dyadic(-64, 64),
        l2 in dyadic(-64, 64),
        l3 in dyadic(-64, 64),
        seed in any::<u64>(),
    ) {
        let spec = ModelSpec::classical3(
            Family::Classical3Euler,
            DVector::from_column_slice(&[i1, i2, i3]),
            DVector::zeros(3),
            DVector::from_column_slice(&[l1, l2, l3]),
            Representation::Magnetic,
        ).unwrap();
        let x0 = random_points(ModelKind::EN, 3, 1, seed).pop().unwrap();
        let traj = simulate(Method::Rk4, &spec, &x0, 1e-3, 0.1).unwrap();
        let f = spec.classical3_integral_field().unwrap();
        let start = f.eval(&x0);
        let end = f.eval(traj.points.last().unwrap());
        prop_assert!(
            (end - start).abs() <= 1e-9 * (1.0 + start.abs()),
            "quartic drifted from {start:.6e} to {end:.6e}"
        );
    }
}
