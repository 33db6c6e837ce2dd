//! Ready-made model instances with generic parameter choices, shared by the
//! test suite and the bundled configuration files.
//!
//! Values are dyadic rationals so constructions are exactly representable,
//! and coupling coefficients vary across entries so no accidental extra
//! symmetry sneaks in.

use crate::models::{Family, ModelSpec};
use crate::phase::Representation;
use crate::skew::SkewMatrix;
use nalgebra::DVector;

/// Block-symmetric body with a rotor in the block subalgebra.
pub fn lagrange(n: usize, repr: Representation) -> ModelSpec {
    let mut triples = vec![(0usize, 1usize, 0.75)];
    for p in 2..n {
        for q in (p + 1)..n {
            triples.push((p, q, 0.5 + ((p + 2 * q) % 5) as f64 / 16.0));
        }
    }
    ModelSpec::lagrange_so_so(
        n,
        0.75,
        1.25,
        SkewMatrix::from_triples(n, &[(0, 1, 0.5)]).unwrap(),
        SkewMatrix::from_triples(n, &triples).unwrap(),
        repr,
    )
    .unwrap()
}

/// Four-dimensional body with fields in both planes.
pub fn bitop(repr: Representation) -> ModelSpec {
    ModelSpec::bitop(
        0.75,
        1.25,
        SkewMatrix::from_triples(4, &[(0, 1, 0.5), (2, 3, 0.375)]).unwrap(),
        SkewMatrix::from_triples(4, &[(0, 1, 0.75), (2, 3, 0.5625)]).unwrap(),
        repr,
    )
    .unwrap()
}

/// Fully symmetric body; the field matrix is regular (distinct plane rates
/// plus one off-plane coupling) and the rotor is a polynomial in it.
pub fn totally_symmetric(n: usize, repr: Representation) -> ModelSpec {
    let mut triples = Vec::new();
    for i in 0..(n / 2) {
        triples.push((2 * i, 2 * i + 1, 0.5 + i as f64 / 4.0));
    }
    triples.push((0, n - 1, 0.125));
    let chi = SkewMatrix::from_triples(n, &triples).unwrap();
    let c3 = chi.as_matrix() * chi.as_matrix() * chi.as_matrix();
    let l = chi.scale(0.5).add_scaled(0.25, &SkewMatrix::skew_part(&c3));
    ModelSpec::totally_symmetric(n, 0.75, chi, l, repr).unwrap()
}

/// Axially symmetric body on the vector phase space, rotor filling the
/// stabilizer of the axis.
pub fn belyaev(n: usize, repr: Representation) -> ModelSpec {
    let mut chi = DVector::zeros(n);
    chi[n - 1] = 0.5;
    let mut triples = Vec::new();
    for p in 0..(n - 1) {
        for q in (p + 1)..(n - 1) {
            triples.push((p, q, 0.25 + ((2 * p + q) % 7) as f64 / 32.0));
        }
    }
    ModelSpec::belyaev_e_n(
        n,
        0.75,
        1.25,
        chi,
        SkewMatrix::from_triples(n, &triples).unwrap(),
        repr,
    )
    .unwrap()
}

/// Free body with block mass diagonal `blocks` (value 1 + b/4 on block b)
/// and a rotor of in-block plane spins.
pub fn manakov(blocks: &[usize], repr: Representation) -> ModelSpec {
    let n: usize = blocks.iter().sum();
    let mut j = DVector::zeros(n);
    let mut triples = Vec::new();
    let mut start = 0;
    for (b, &len) in blocks.iter().enumerate() {
        for i in 0..len {
            j[start + i] = 1.0 + b as f64 / 4.0;
        }
        if len >= 2 {
            triples.push((start, start + 1, 0.375 + b as f64 / 16.0));
        }
        start += len;
    }
    ModelSpec::manakov_gyro(j, SkewMatrix::from_triples(n, &triples).unwrap(), repr).unwrap()
}

/// Triaxial free gyrostat.
pub fn euler3(repr: Representation) -> ModelSpec {
    ModelSpec::classical3(
        Family::Classical3Euler,
        DVector::from_column_slice(&[1.0, 2.0, 3.0]),
        DVector::zeros(3),
        DVector::from_column_slice(&[0.25, 0.5, -0.75]),
        repr,
    )
    .unwrap()
}

/// Symmetric heavy top with rotor along the symmetry axis.
pub fn lagrange3(repr: Representation) -> ModelSpec {
    ModelSpec::classical3(
        Family::Classical3Lagrange,
        DVector::from_column_slice(&[2.0, 2.0, 1.0]),
        DVector::from_column_slice(&[0.0, 0.0, 1.5]),
        DVector::from_column_slice(&[0.0, 0.0, 0.25]),
        repr,
    )
    .unwrap()
}

/// The 1:1:1/2 top with center of mass on the first axis and a third-axis
/// rotor.
pub fn kowalevski3(repr: Representation) -> ModelSpec {
    ModelSpec::classical3(
        Family::Classical3Kowalevski,
        DVector::from_column_slice(&[1.0, 1.0, 0.5]),
        DVector::from_column_slice(&[1.25, 0.0, 0.0]),
        DVector::from_column_slice(&[0.0, 0.0, 0.375]),
        repr,
    )
    .unwrap()
}

/// One generic instance of every matrix-space family, mid-range sizes.
pub fn matrix_specs(repr: Representation) -> Vec<ModelSpec> {
    vec![
        lagrange(3, repr),
        lagrange(5, repr),
        bitop(repr),
        totally_symmetric(5, repr),
        belyaev(4, repr),
        belyaev(5, repr),
        manakov(&[2, 2], repr),
    ]
}
