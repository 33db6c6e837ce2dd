//! Polynomial Lax pairs for the integrable families, the residual of the
//! Lax identity along the flow, and the spectral and argument-shift
//! first-integral families with analytic gradients.
//!
//! The heavy-top pairs are quadratic in the spectral parameter; the free
//! body with a rotor has a linear pair whose lambda-coefficients are
//! symmetric rather than skew, so polynomials here carry general square
//! matrices. The vector phase space embeds into skew matrices one size up:
//! a skew matrix occupies the leading block, a vector the last column (and
//! its negative the last row).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::models::{Family, Inertia, ModelSpec};
use crate::phase::{Field, ModelKind, PhasePoint, Representation};
use crate::poisson::{trace_gradient, FieldMeta, IntegralClass, IntegralFamily, ScalarField};
use crate::skew::{pair, SkewMatrix};
use nalgebra::{DMatrix, DVector};

/// Shared closure producing the matrix coefficients of a polynomial pencil
/// at a phase point, ordered by ascending power.
type CoefficientBuilder = Arc<dyn Fn(&PhasePoint) -> Vec<DMatrix<f64>> + Send + Sync>;

/// A matrix polynomial in the spectral parameter.
#[derive(Debug, Clone)]
pub struct LaxPolynomial {
    coeffs: Vec<DMatrix<f64>>,
}

impl LaxPolynomial {
    pub fn new(coeffs: Vec<DMatrix<f64>>) -> Self {
        assert!(!coeffs.is_empty(), "a polynomial needs coefficients");
        let size = coeffs[0].nrows();
        for c in &coeffs {
            assert!(
                c.nrows() == size && c.ncols() == size,
                "coefficients must be square and equal-sized"
            );
        }
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn size(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn coeff(&self, k: usize) -> &DMatrix<f64> {
        &self.coeffs[k]
    }

    pub fn eval(&self, lambda: f64) -> DMatrix<f64> {
        let mut acc = self.coeffs.last().unwrap().clone();
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc * lambda + c;
        }
        acc
    }

    /// The commutator [self, other], by exact coefficient convolution.
    pub fn commutator(&self, other: &LaxPolynomial) -> LaxPolynomial {
        let n = self.size();
        assert_eq!(n, other.size(), "size mismatch");
        let mut out = vec![DMatrix::zeros(n, n); self.degree() + other.degree() + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b - b * a;
            }
        }
        LaxPolynomial::new(out)
    }

    /// Max Frobenius norm over lambda-coefficients of self - other; the
    /// shorter polynomial is padded with zeros.
    pub fn max_coeff_distance(&self, other: &LaxPolynomial) -> f64 {
        let n = self.size();
        assert_eq!(n, other.size(), "size mismatch");
        let zero = DMatrix::zeros(n, n);
        let degree = self.degree().max(other.degree());
        (0..=degree)
            .map(|k| {
                let a = self.coeffs.get(k).unwrap_or(&zero);
                let b = other.coeffs.get(k).unwrap_or(&zero);
                (a - b).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Embed a skew matrix into the leading block of a skew matrix one larger.
pub fn hat_block(xi: &SkewMatrix) -> SkewMatrix {
    let n = xi.n();
    SkewMatrix::from_upper_fn(n + 1, |i, j| if j < n { xi.entry(i, j) } else { 0.0 })
}

/// Embed a vector as the last column / negated last row of a skew matrix.
pub fn hat_border(eta: &DVector<f64>) -> SkewMatrix {
    let n = eta.len();
    SkewMatrix::from_upper_fn(n + 1, |i, j| if j == n { eta[i] } else { 0.0 })
}

/// The scalar multiplying chi in the quadratic lambda-coefficient: the sum
/// of the two block masses, or twice the single mass when there is one.
fn chi_coefficient(spec: &ModelSpec) -> f64 {
    let values = spec.pattern().expect("Lax family has a pattern").values();
    match values.len() {
        1 => 2.0 * values[0],
        _ => values[0] + values[1],
    }
}

/// Total momentum (body + rotor) regardless of representation.
pub fn total_momentum(spec: &ModelSpec, x: &PhasePoint) -> SkewMatrix {
    match spec.representation() {
        Representation::Magnetic => x.momentum.add_scaled(1.0, spec.rotor()),
        Representation::Standard => x.momentum.clone(),
    }
}

fn mass_diagonal(spec: &ModelSpec) -> DVector<f64> {
    match spec.inertia() {
        Inertia::MassTensor(j) => j.clone(),
        Inertia::Principal3(_) => unreachable!("Lax families carry a mass tensor"),
    }
}

/// The family's Lax pair (L(lambda), A(lambda)) at the phase point x.
///
/// Heavy tops on the matrix phase space: L = field + lambda (total
/// momentum) + lambda^2 c chi, A = Omega + lambda chi, with c from
/// `chi_coefficient`. The vector phase space uses the same shape after
/// embedding into skew matrices one size up. The free body with a rotor:
/// L = total momentum + lambda J^2, A = Omega + lambda J.
pub fn build_lax(spec: &ModelSpec, x: &PhasePoint) -> Result<(LaxPolynomial, LaxPolynomial)> {
    let total = total_momentum(spec, x);
    let omega = spec.omega(x);
    match spec.family() {
        Family::LagrangeSoSo | Family::Bitop | Family::TotallySymmetric => {
            let chi = spec.chi().as_so().unwrap();
            let gamma = x
                .field
                .as_so()
                .ok_or_else(|| Error::Dimension("expected a matrix companion field".into()))?;
            let c = chi_coefficient(spec);
            let l_poly = LaxPolynomial::new(vec![
                gamma.as_matrix().clone(),
                total.as_matrix().clone(),
                chi.scale(c).as_matrix().clone(),
            ]);
            let a_poly =
                LaxPolynomial::new(vec![omega.as_matrix().clone(), chi.as_matrix().clone()]);
            Ok((l_poly, a_poly))
        }
        Family::BelyaevEN => {
            let chi = spec.chi().as_euclid().unwrap();
            let gamma = x
                .field
                .as_euclid()
                .ok_or_else(|| Error::Dimension("expected a vector companion field".into()))?;
            let c = chi_coefficient(spec);
            let l_poly = LaxPolynomial::new(vec![
                hat_border(gamma).as_matrix().clone(),
                hat_block(&total).as_matrix().clone(),
                hat_border(&(chi * c)).as_matrix().clone(),
            ]);
            let a_poly = LaxPolynomial::new(vec![
                hat_block(&omega).as_matrix().clone(),
                hat_border(chi).as_matrix().clone(),
            ]);
            Ok((l_poly, a_poly))
        }
        Family::ManakovGyro => {
            let j = mass_diagonal(spec);
            let l_poly = LaxPolynomial::new(vec![
                total.as_matrix().clone(),
                DMatrix::from_diagonal(&j.map(|v| v * v)),
            ]);
            let a_poly = LaxPolynomial::new(vec![
                omega.as_matrix().clone(),
                DMatrix::from_diagonal(&j),
            ]);
            Ok((l_poly, a_poly))
        }
        other => Err(Error::Model(format!("{other} has no polynomial Lax pair"))),
    }
}

/// Max Frobenius norm over lambda-coefficients of d/dt L(lambda) -
/// [L(lambda), A(lambda)] along the equations of motion. The momentum-slot
/// derivative equals the derivative of the total momentum in both
/// representations (the rotor is constant); constant coefficients
/// differentiate to zero.
pub fn lax_residual(spec: &ModelSpec, x: &PhasePoint) -> Result<f64> {
    let (l_poly, a_poly) = build_lax(spec, x)?;
    let xdot = spec.vector_field(x);
    let size = l_poly.size();
    let zero = DMatrix::zeros(size, size);
    let dl = match spec.kind() {
        ModelKind::SoSo => LaxPolynomial::new(vec![
            xdot.field.as_so().unwrap().as_matrix().clone(),
            xdot.momentum.as_matrix().clone(),
            zero,
        ]),
        ModelKind::EN => LaxPolynomial::new(vec![
            hat_border(xdot.field.as_euclid().unwrap()).as_matrix().clone(),
            hat_block(&xdot.momentum).as_matrix().clone(),
            zero,
        ]),
        ModelKind::SoN => {
            LaxPolynomial::new(vec![xdot.momentum.as_matrix().clone(), zero])
        }
    };
    Ok(dl.max_coeff_distance(&l_poly.commutator(&a_poly)))
}

/// Coefficient-wise product of matrix polynomials.
fn poly_mul(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    let n = a[0].nrows();
    let mut out = vec![DMatrix::zeros(n, n); a.len() + b.len() - 1];
    for (i, p) in a.iter().enumerate() {
        for (j, q) in b.iter().enumerate() {
            out[i + j] += p * q;
        }
    }
    out
}

fn coeff_or_zero<'a>(p: &'a [DMatrix<f64>], j: usize, zero: &'a DMatrix<f64>) -> &'a DMatrix<f64> {
    p.get(j).unwrap_or(zero)
}

/// The lambda-powers kept from tr(P(lambda)^{2k}) for each family.
///
/// The top coefficient is constant (pure chi or mass term) and dropped.
/// On the embedded vector phase space every odd coefficient vanishes
/// identically: conjugating by diag(1..1, -1) fixes the momentum block and
/// flips the border, so traces of words with an odd border count are zero,
/// and the lambda-parity matches the border parity. For the free body the
/// same transpose-reversal argument kills odd powers of lambda (odd word
/// reversals pick up the sign of the skew factor count).
fn spectral_kept(family: Family, k: usize) -> Vec<usize> {
    match family {
        Family::LagrangeSoSo | Family::Bitop | Family::TotallySymmetric => (0..4 * k).collect(),
        Family::BelyaevEN => (0..(4 * k - 1)).step_by(2).collect(),
        Family::ManakovGyro => (0..(2 * k - 1)).step_by(2).collect(),
        _ => Vec::new(),
    }
}

/// Number of length-m letter orderings contributing to each lambda power,
/// for letters of the given lambda-degrees: the coefficients of
/// (sum x^d)^m. Trace coefficients are sums of this many word traces, so
/// dividing by the count keeps every family member at the scale of a
/// single word.
fn word_counts(degrees: &[usize], m: usize) -> Vec<f64> {
    let top = degrees.iter().max().copied().unwrap_or(0);
    let mut counts = vec![0.0; top * m + 1];
    counts[0] = 1.0;
    let mut len = 1;
    for _ in 0..m {
        let mut next = vec![0.0; len + top];
        for (j, c) in counts[..len].iter().enumerate() {
            for &d in degrees {
                next[j + d] += c;
            }
        }
        counts = next;
        len += top;
    }
    counts
}

/// Spectral first integrals: the non-constant lambda-coefficients of
/// tr(P(lambda)^{2k}), with P the rotor-free Lax matrix written in the
/// total momentum K, each divided by its word-count multiplicity so the
/// members stay at unit magnitude across degrees. In the shifted
/// representation the family is precomposed with K = M + rotor.
pub fn spectral_invariants(spec: &ModelSpec) -> Result<IntegralFamily> {
    let family = spec.family();
    let kind = spec.kind();
    let n = spec.n();
    if !matches!(
        family,
        Family::LagrangeSoSo
            | Family::Bitop
            | Family::TotallySymmetric
            | Family::BelyaevEN
            | Family::ManakovGyro
    ) {
        return Err(Error::Model(format!("{family} has no spectral family")));
    }
    let kmax = match kind {
        ModelKind::SoSo | ModelKind::SoN => n / 2,
        ModelKind::EN => n.div_ceil(2),
    };

    // P(lambda) coefficients from a standard-representation point.
    let builder: CoefficientBuilder = match kind {
        ModelKind::SoSo => {
            let chi = spec.chi().as_so().unwrap().scale(chi_coefficient(spec));
            Arc::new(move |x: &PhasePoint| {
                vec![
                    x.field.as_so().unwrap().as_matrix().clone(),
                    x.momentum.as_matrix().clone(),
                    chi.as_matrix().clone(),
                ]
            })
        }
        ModelKind::EN => {
            let chi = hat_border(&(spec.chi().as_euclid().unwrap() * chi_coefficient(spec)));
            Arc::new(move |x: &PhasePoint| {
                vec![
                    hat_border(x.field.as_euclid().unwrap()).as_matrix().clone(),
                    hat_block(&x.momentum).as_matrix().clone(),
                    chi.as_matrix().clone(),
                ]
            })
        }
        ModelKind::SoN => {
            let j2 = DMatrix::from_diagonal(&mass_diagonal(spec).map(|v| v * v));
            Arc::new(move |x: &PhasePoint| vec![x.momentum.as_matrix().clone(), j2.clone()])
        }
    };

    let letter_degrees: &[usize] = match kind {
        ModelKind::SoSo | ModelKind::EN => &[0, 1, 2],
        ModelKind::SoN => &[0, 1],
    };
    let mut kept: Vec<(usize, usize, f64)> = Vec::new();
    let mut meta = Vec::new();
    for k in 1..=kmax {
        let counts = word_counts(letter_degrees, 2 * k);
        for j in spectral_kept(family, k) {
            kept.push((k, j, counts[j]));
            meta.push(FieldMeta {
                label: format!("tr(P^{}) l^{}", 2 * k, j),
                class: IntegralClass::Spectral,
            });
        }
    }

    let kept_eval = kept.clone();
    let b_eval = builder.clone();
    let eval = move |x: &PhasePoint| {
        let p = b_eval(x);
        let square = poly_mul(&p, &p);
        let mut even = square.clone();
        let mut values = Vec::with_capacity(kept_eval.len());
        let mut current_k = 1;
        for &(k, j, w) in &kept_eval {
            while current_k < k {
                even = poly_mul(&even, &square);
                current_k += 1;
            }
            values.push(even[j].trace() / w);
        }
        values
    };

    let kept_grad = kept;
    let grad = move |x: &PhasePoint| {
        let p = builder(x);
        let size = p[0].nrows();
        let zero = DMatrix::zeros(size, size);
        let square = poly_mul(&p, &p);
        // odd powers P^{2k-1}
        let mut odd = p.clone();
        let mut out = Vec::with_capacity(kept_grad.len());
        let mut current_k = 1;
        for &(k, j, w) in &kept_grad {
            while current_k < k {
                odd = poly_mul(&odd, &square);
                current_k += 1;
            }
            let s = 2.0 * k as f64 / w;
            // d tr(P^{2k}) = 2k tr(P^{2k-1} dP). For the heavy tops dP
            // carries the field at lambda^0 and the momentum at lambda^1;
            // for the free body the momentum sits at lambda^0.
            let q0 = coeff_or_zero(&odd, j, &zero);
            let q1 = if j == 0 {
                &zero
            } else {
                coeff_or_zero(&odd, j - 1, &zero)
            };
            let tangent = match kind {
                ModelKind::SoSo => PhasePoint {
                    momentum: trace_gradient(q1).scale(s),
                    field: Field::So(trace_gradient(q0).scale(s)),
                },
                ModelKind::EN => {
                    let block = SkewMatrix::from_upper_fn(size - 1, |a, b| {
                        q1[(b, a)] - q1[(a, b)]
                    });
                    let border = DVector::from_fn(size - 1, |i, _| {
                        s * (q0[(size - 1, i)] - q0[(i, size - 1)])
                    });
                    PhasePoint {
                        momentum: block.scale(s),
                        field: Field::Euclid(border),
                    }
                }
                ModelKind::SoN => PhasePoint {
                    momentum: trace_gradient(q0).scale(s),
                    field: Field::Absent,
                },
            };
            out.push(tangent);
        }
        out
    };

    let mut fam = IntegralFamily::from_group(meta, eval, grad);
    fam.notes.push(
        "constant and identically-zero lambda-coefficients excluded by structure".into(),
    );
    fam.notes
        .push("coefficients divided by their word-count multiplicity".into());
    Ok(match spec.representation() {
        Representation::Standard => fam,
        Representation::Magnetic => fam.shift_momentum(spec.rotor()),
    })
}

fn noether_label(b: &SkewMatrix, idx: usize) -> String {
    let n = b.n();
    let mut entries = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if b.entry(i, j) != 0.0 {
                entries.push((i, j, b.entry(i, j)));
            }
        }
    }
    if entries.len() == 1 && entries[0].2 == 1.0 {
        format!("K[{},{}]", entries[0].0 + 1, entries[0].1 + 1)
    } else {
        format!("K_h[{}]", idx + 1)
    }
}

/// Linear coordinates on the symmetry subalgebra plus, for heavy tops with
/// a nonzero rotor, the lambda-coefficients of tr((K_h + lambda inv(I)
/// rotor)^{2i}), scaled by word-count multiplicity like the spectral
/// family. Constant top coefficients are dropped. The free body and
/// rotor-free specs get the linear coordinates alone.
pub fn shift_integrals(spec: &ModelSpec) -> IntegralFamily {
    let basis = spec.symmetry_basis();
    let mut fam = IntegralFamily::empty();
    if basis.is_empty() {
        fam.notes
            .push("symmetry subalgebra is zero; family is empty".into());
        return fam;
    }
    let n = spec.n();
    let kind = spec.kind();
    for (idx, b) in basis.iter().enumerate() {
        let mut point = PhasePoint::zero(kind, n);
        point.momentum = b.clone();
        fam.push_field(ScalarField::linear(
            noether_label(b, idx),
            IntegralClass::Noether,
            point,
        ));
    }

    let with_shift = spec.family() != Family::ManakovGyro && !spec.rotor().is_zero();
    if with_shift {
        let b_mat = spec.rotor_velocity();
        let basis = basis.clone();
        let basis2 = basis.clone();
        let project = move |k: &SkewMatrix, basis: &[SkewMatrix]| {
            let mut acc = SkewMatrix::zeros(k.n());
            for b in basis {
                acc = acc.add_scaled(pair(b, k), b);
            }
            acc
        };
        let imax = n / 2;
        let mut kept: Vec<(usize, usize, f64)> = Vec::new();
        let mut meta = Vec::new();
        for i in 1..=imax {
            let counts = word_counts(&[0, 1], 2 * i);
            for (j, &count) in counts.iter().enumerate().take(2 * i) {
                kept.push((i, j, count));
                meta.push(FieldMeta {
                    label: format!("tr(Q^{}) l^{}", 2 * i, j),
                    class: IntegralClass::Shift,
                });
            }
        }
        let kept_eval = kept.clone();
        let b1 = b_mat.clone();
        let project1 = project;
        let eval = move |x: &PhasePoint| {
            let kh = project1(&x.momentum, &basis);
            let p = vec![kh.as_matrix().clone(), b1.as_matrix().clone()];
            let square = poly_mul(&p, &p);
            let mut even = square.clone();
            let mut values = Vec::with_capacity(kept_eval.len());
            let mut current_i = 1;
            for &(i, j, w) in &kept_eval {
                while current_i < i {
                    even = poly_mul(&even, &square);
                    current_i += 1;
                }
                values.push(even[j].trace() / w);
            }
            values
        };
        let grad = move |x: &PhasePoint| {
            let kh = project(&x.momentum, &basis2);
            let p = vec![kh.as_matrix().clone(), b_mat.as_matrix().clone()];
            let size = p[0].nrows();
            let zero = DMatrix::zeros(size, size);
            let square = poly_mul(&p, &p);
            let mut odd = p.clone();
            let mut out = Vec::with_capacity(kept.len());
            let mut current_i = 1;
            for &(i, j, w) in &kept {
                while current_i < i {
                    odd = poly_mul(&odd, &square);
                    current_i += 1;
                }
                // d tr(P^{2i}) = 2i tr(P^{2i-1} pr_h(dK)); the projection
                // is self-adjoint for the pairing.
                let q = coeff_or_zero(&odd, j, &zero);
                let g = project(&trace_gradient(q).scale(2.0 * i as f64 / w), &basis2);
                let mut tangent = PhasePoint::zero(kind, size);
                tangent.momentum = g;
                out.push(tangent);
            }
            out
        };
        fam.append(IntegralFamily::from_group(meta, eval, grad));
        fam.notes
            .push("constant top coefficients tr((inv(I) rotor)^{2i}) excluded".into());
    } else {
        fam.notes
            .push("no rotor shift: linear symmetry coordinates only".into());
    }
    match spec.representation() {
        Representation::Standard => fam,
        Representation::Magnetic => fam.shift_momentum(spec.rotor()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poisson;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dvec(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn lagrange(n: usize, repr: Representation) -> ModelSpec {
        crate::samples::lagrange(n, repr)
    }

    fn bitop(repr: Representation) -> ModelSpec {
        crate::samples::bitop(repr)
    }

    fn tot_sym(n: usize, repr: Representation) -> ModelSpec {
        crate::samples::totally_symmetric(n, repr)
    }

    fn belyaev(n: usize, repr: Representation) -> ModelSpec {
        crate::samples::belyaev(n, repr)
    }

    fn manakov(repr: Representation) -> ModelSpec {
        crate::samples::manakov(&[2, 2], repr)
    }

    fn all_specs(repr: Representation) -> Vec<ModelSpec> {
        vec![
            lagrange(3, repr),
            lagrange(5, repr),
            bitop(repr),
            tot_sym(5, repr),
            belyaev(4, repr),
            belyaev(5, repr),
            manakov(repr),
        ]
    }

    #[test]
    fn hatted_embeddings_have_the_block_shapes() {
        let xi = SkewMatrix::from_triples(3, &[(0, 1, 2.0), (1, 2, -1.0)]).unwrap();
        let h = hat_block(&xi);
        assert_eq!(h.n(), 4);
        assert_eq!(h.entry(0, 1), 2.0);
        assert_eq!(h.entry(1, 2), -1.0);
        for i in 0..4 {
            assert_eq!(h.entry(i, 3), 0.0);
        }
        let eta = dvec(&[1.0, -2.0, 3.0]);
        let b = hat_border(&eta);
        assert_eq!(b.entry(0, 3), 1.0);
        assert_eq!(b.entry(3, 1), 2.0);
        assert_eq!(b.entry(2, 3), 3.0);
        assert_eq!(b.entry(0, 1), 0.0);
    }

    #[test]
    fn polynomial_eval_and_commutator() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let p = LaxPolynomial::new(vec![a.clone(), b.clone()]);
        let at2 = p.eval(2.0);
        assert_eq!(at2, &a + &b * 2.0);
        let q = LaxPolynomial::new(vec![b.clone()]);
        let c = p.commutator(&q);
        assert_eq!(c.degree(), 1);
        assert_eq!(c.coeff(0), &(&a * &b - &b * &a));
        assert_eq!(c.coeff(1).norm(), 0.0);
    }

    #[test]
    fn lax_identity_residual_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for repr in [Representation::Magnetic, Representation::Standard] {
            for spec in all_specs(repr) {
                for _ in 0..10 {
                    let x = PhasePoint::random(spec.kind(), spec.n(), &mut rng);
                    let r = lax_residual(&spec, &x).unwrap();
                    assert!(
                        r <= 1e-12,
                        "{} ({repr}): residual {r:.3e}",
                        spec.family()
                    );
                }
            }
        }
    }

    #[test]
    fn broken_rotor_is_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let spec = lagrange(4, Representation::Magnetic);
        let bad = spec.with_rotor_unchecked(
            spec.rotor().add_scaled(0.3, &SkewMatrix::basis(4, 0, 2)),
        );
        let mut hits = 0;
        for _ in 0..20 {
            let x = PhasePoint::random(bad.kind(), bad.n(), &mut rng);
            if lax_residual(&bad, &x).unwrap() > 1e-3 {
                hits += 1;
            }
        }
        assert!(hits >= 18, "violation detected at only {hits}/20 points");
    }

    #[test]
    fn free_body_mass_identity() {
        // [J^2, Omega] + [M, J] = 0 when M carries the symmetric product
        // of J and Omega.
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let j = dvec(&[1.0, 2.0, 3.0, 4.0]);
        let j_mat = DMatrix::from_diagonal(&j);
        let j2 = DMatrix::from_diagonal(&j.map(|v| v * v));
        for _ in 0..10 {
            let w = PhasePoint::random(ModelKind::SoN, 4, &mut rng).momentum;
            let m = crate::models::mass_tensor_apply(&j, &w);
            let w = w.as_matrix();
            let m = m.as_matrix();
            let r = (&j2 * w - w * &j2) + (m * &j_mat - &j_mat * m);
            assert!(r.norm() <= 1e-13);
        }
    }

    #[test]
    fn classical_families_have_no_lax_pair() {
        let spec = ModelSpec::classical3(
            Family::Classical3Euler,
            dvec(&[1.0, 2.0, 3.0]),
            dvec(&[0.0; 3]),
            dvec(&[0.0; 3]),
            Representation::Magnetic,
        )
        .unwrap();
        let x = PhasePoint::zero(ModelKind::EN, 3);
        assert!(build_lax(&spec, &x).is_err());
        assert!(spectral_invariants(&spec).is_err());
    }

    #[test]
    fn spectral_example_free_body() {
        let spec = ModelSpec::manakov_gyro(
            dvec(&[1.0, 2.0, 3.0]),
            SkewMatrix::zeros(3),
            Representation::Standard,
        )
        .unwrap();
        let fam = spectral_invariants(&spec).unwrap();
        assert_eq!(fam.labels(), vec!["tr(P^2) l^0"]);
        let x = PhasePoint::so_n(SkewMatrix::basis(3, 0, 1));
        assert_eq!(fam.eval_all(&x), vec![-2.0]);
    }

    #[test]
    fn spectral_counts() {
        // heavy matrix tops keep j = 0..4k-1, the embedded vector top only
        // even j <= 4k-2, the free body only even j <= 2k-2
        assert_eq!(
            spectral_invariants(&lagrange(4, Representation::Standard))
                .unwrap()
                .len(),
            4 + 8
        );
        assert_eq!(
            spectral_invariants(&belyaev(4, Representation::Standard))
                .unwrap()
                .len(),
            2 + 4
        );
        assert_eq!(
            spectral_invariants(&manakov(Representation::Standard))
                .unwrap()
                .len(),
            1 + 2
        );
    }

    #[test]
    fn spectral_low_coefficients_match_casimirs() {
        // On the matrix phase space the lambda^0 and lambda^1 coefficients
        // of tr(P^{2k}) are the Casimirs tr(G^{2k}) and 2k tr(K G^{2k-1});
        // the word counts there are 1 and 2k, so the family members equal
        // the Casimirs themselves.
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let spec = lagrange(5, Representation::Standard);
        let fam = spectral_invariants(&spec).unwrap();
        let cas = poisson::casimirs(ModelKind::SoSo, 5);
        let labels = fam.labels();
        for _ in 0..5 {
            let x = PhasePoint::random_dyadic(ModelKind::SoSo, 5, &mut rng);
            let values = fam.eval_all(&x);
            let cvalues = cas.eval_all(&x);
            let clabels = cas.labels();
            for k in 1..=2usize {
                let i0 = labels
                    .iter()
                    .position(|l| l == &format!("tr(P^{}) l^0", 2 * k))
                    .unwrap();
                let ic = clabels
                    .iter()
                    .position(|l| l == &format!("tr(G^{})", 2 * k))
                    .unwrap();
                assert!((values[i0] - cvalues[ic]).abs() <= 1e-12);
                let i1 = labels
                    .iter()
                    .position(|l| l == &format!("tr(P^{}) l^1", 2 * k))
                    .unwrap();
                let iq = clabels
                    .iter()
                    .position(|l| l == &format!("tr(K G^{})", 2 * k - 1))
                    .unwrap();
                assert!((values[i1] - cvalues[iq]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn spectral_conserved_along_the_flow() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        for repr in [Representation::Magnetic, Representation::Standard] {
            for spec in all_specs(repr) {
                let fam = spectral_invariants(&spec).unwrap();
                for _ in 0..5 {
                    let x = PhasePoint::random(spec.kind(), spec.n(), &mut rng);
                    let xdot = spec.vector_field(&x);
                    for (g, label) in fam.grad_all(&x).iter().zip(fam.labels()) {
                        let d = g.inner(&xdot);
                        assert!(
                            d.abs() <= 1e-10,
                            "{} ({repr}): {label} derivative {d:.3e}",
                            spec.family()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn spectral_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        for spec in [
            lagrange(4, Representation::Standard),
            belyaev(4, Representation::Magnetic),
            manakov(Representation::Magnetic),
        ] {
            let fam = spectral_invariants(&spec).unwrap();
            let x = PhasePoint::random(spec.kind(), spec.n(), &mut rng);
            let err = poisson::gradient_probe_error(&fam, &x, &mut rng);
            assert!(err <= 1e-6, "{}: probe error {err:.3e}", spec.family());
        }
    }

    #[test]
    fn spectral_members_are_not_identically_zero() {
        // guards the structural drop rules from over- or under-cutting
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for spec in all_specs(Representation::Standard) {
            let fam = spectral_invariants(&spec).unwrap();
            let mut max_grad = vec![0.0f64; fam.len()];
            for _ in 0..5 {
                let x = PhasePoint::random(spec.kind(), spec.n(), &mut rng);
                for (i, g) in fam.grad_all(&x).iter().enumerate() {
                    max_grad[i] = max_grad[i].max(g.max_abs());
                }
            }
            for (i, m) in max_grad.iter().enumerate() {
                assert!(
                    *m > 1e-8,
                    "{}: member {} has an identically zero gradient",
                    spec.family(),
                    fam.labels()[i]
                );
            }
        }
    }

    #[test]
    fn momentum_block_projection_flows_by_the_rotor_velocity() {
        // d/dt pr_h(K) = [inv(I) rotor, pr_h(K)] along the motion
        let mut rng = ChaCha8Rng::seed_from_u64(48);
        for spec in [
            lagrange(5, Representation::Standard),
            belyaev(5, Representation::Standard),
            bitop(Representation::Magnetic),
        ] {
            let b = spec.rotor_velocity();
            for _ in 0..5 {
                let x = PhasePoint::random(spec.kind(), spec.n(), &mut rng);
                let xdot = spec.vector_field(&x);
                let total = total_momentum(&spec, &x);
                let lhs = spec.project_symmetry(&xdot.momentum);
                let rhs = crate::skew::commutator(&b, &spec.project_symmetry(&total));
                assert!(
                    lhs.add_scaled(-1.0, &rhs).max_abs() <= 1e-12,
                    "{}: block of the momentum derivative mismatch",
                    spec.family()
                );
            }
        }
    }

    #[test]
    fn shift_and_linear_conservation() {
        let mut rng = ChaCha8Rng::seed_from_u64(49);
        for spec in all_specs(Representation::Magnetic) {
            let fam = shift_integrals(&spec);
            let meta: Vec<_> = fam.meta().into_iter().cloned().collect();
            for _ in 0..5 {
                let x = PhasePoint::random(spec.kind(), spec.n(), &mut rng);
                let xdot = spec.vector_field(&x);
                for (g, m) in fam.grad_all(&x).iter().zip(&meta) {
                    let d = g.inner(&xdot);
                    let conserved = match m.class {
                        IntegralClass::Shift => true,
                        IntegralClass::Noether => spec.symmetry_is_abelian(),
                        _ => unreachable!(),
                    };
                    if conserved {
                        assert!(
                            d.abs() <= 1e-10,
                            "{}: {} derivative {d:.3e}",
                            spec.family(),
                            m.label
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn linear_coordinates_drift_for_noncommutative_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let spec = belyaev(5, Representation::Standard);
        assert!(!spec.symmetry_is_abelian());
        let fam = shift_integrals(&spec);
        let noether = fam.indices_where(|m| m.class == IntegralClass::Noether);
        let x = PhasePoint::random(spec.kind(), spec.n(), &mut rng);
        let xdot = spec.vector_field(&x);
        let grads = fam.grad_all(&x);
        let max_drift = noether
            .iter()
            .map(|&i| grads[i].inner(&xdot).abs())
            .fold(0.0, f64::max);
        assert!(
            max_drift > 1e-3,
            "expected visible drift of linear coordinates, got {max_drift:.3e}"
        );
    }

    #[test]
    fn shift_example_values() {
        let spec = lagrange(4, Representation::Standard);
        let fam = shift_integrals(&spec);
        let labels = fam.labels();
        // pattern (2,2): noether coordinates K[1,2], K[3,4], then the
        // shifted traces for i = 1, 2
        assert!(labels.contains(&"K[1,2]".to_string()));
        assert!(labels.contains(&"K[3,4]".to_string()));
        let x = PhasePoint::so_so(
            SkewMatrix::from_triples(4, &[(0, 1, 0.5), (2, 3, -0.25), (0, 2, 1.0)]).unwrap(),
            SkewMatrix::zeros(4),
        )
        .unwrap();
        let values = fam.eval_all(&x);
        let i12 = labels.iter().position(|l| l == "K[1,2]").unwrap();
        assert_eq!(values[i12], 0.5);
        // tr(Q^2) l^0 = tr(K_h^2) = -2 (0.5^2 + 0.25^2)
        let i0 = labels.iter().position(|l| l == "tr(Q^2) l^0").unwrap();
        assert!((values[i0] - (-2.0 * (0.25 + 0.0625))).abs() <= 1e-15);
    }

    #[test]
    fn shift_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for spec in [
            lagrange(5, Representation::Magnetic),
            belyaev(5, Representation::Standard),
            tot_sym(5, Representation::Magnetic),
        ] {
            let fam = shift_integrals(&spec);
            let x = PhasePoint::random(spec.kind(), spec.n(), &mut rng);
            let err = poisson::gradient_probe_error(&fam, &x, &mut rng);
            assert!(err <= 1e-6, "{}: probe error {err:.3e}", spec.family());
        }
    }

    #[test]
    fn rotor_free_specs_get_linear_coordinates_only() {
        let spec = ModelSpec::lagrange_so_so(
            4,
            1.0,
            2.0,
            SkewMatrix::from_triples(4, &[(0, 1, 1.0)]).unwrap(),
            SkewMatrix::zeros(4),
            Representation::Standard,
        )
        .unwrap();
        let fam = shift_integrals(&spec);
        assert!(fam
            .meta()
            .iter()
            .all(|m| m.class == IntegralClass::Noether));
        let manakov = manakov(Representation::Magnetic);
        let fam = shift_integrals(&manakov);
        assert!(fam
            .meta()
            .iter()
            .all(|m| m.class == IntegralClass::Noether));
        assert_eq!(fam.len(), 2);
    }
}
