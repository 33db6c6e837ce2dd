//! Poisson brackets on the three phase spaces, scalar fields with analytic
//! gradients, and the Casimir families of the standard structures.
//!
//! Brackets are evaluated in gradient form. With the pairing of `skew` and
//! gradients taken with respect to it:
//!
//! - momentum + skew companion:
//!   {F,G} = -<M+L, [dF_M, dG_M]> - <G, [dF_M, dG_f] + [dF_f, dG_M]>
//! - momentum + vector companion:
//!   {F,G} = -<M+L, [dF_M, dG_M]> - <G, dF_M dG_f - dG_M dF_f>
//! - momentum alone: the first term only.
//!
//! L is the constant rotor shift; L = 0 gives the standard bracket in total
//! momentum variables. The gradient form is certified against the coordinate
//! structure relations by exhaustive exact tests, not trusted.

use crate::error::{Error, Result};
use crate::phase::{Field, ModelKind, PhasePoint, Tangent};
use crate::skew::{commutator, pair, wedge, SkewMatrix};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// What a scalar function means to the integrability bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegralClass {
    Casimir,
    Noether,
    Spectral,
    Shift,
    Hamiltonian,
}

impl std::fmt::Display for IntegralClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            IntegralClass::Casimir => "casimir",
            IntegralClass::Noether => "noether",
            IntegralClass::Spectral => "spectral",
            IntegralClass::Shift => "shift",
            IntegralClass::Hamiltonian => "hamiltonian",
        };
        write!(f, "{s}")
    }
}

type EvalFn = Arc<dyn Fn(&PhasePoint) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&PhasePoint) -> Tangent + Send + Sync>;
type BatchEvalFn = Arc<dyn Fn(&PhasePoint) -> Vec<f64> + Send + Sync>;
type BatchGradFn = Arc<dyn Fn(&PhasePoint) -> Vec<Tangent> + Send + Sync>;

/// A scalar function on a phase space with its gradient.
///
/// The gradient convention: dF[v] = <grad F, v> with the flat inner product
/// of `PhasePoint::inner`, so gradient coordinates are plain partial
/// derivatives with respect to `PhasePoint::to_coords`.
#[derive(Clone)]
pub struct ScalarField {
    pub label: String,
    pub class: IntegralClass,
    eval: EvalFn,
    grad: GradFn,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ScalarField({}, {})", self.label, self.class)
    }
}

impl ScalarField {
    pub fn new(
        label: impl Into<String>,
        class: IntegralClass,
        eval: impl Fn(&PhasePoint) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&PhasePoint) -> Tangent + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            class,
            eval: Arc::new(eval),
            grad: Arc::new(grad),
        }
    }

    /// Build from an evaluation map alone; the gradient falls back to
    /// central finite differences with step 1e-6 * (1 + |x|), accurate to
    /// roughly 1e-8 at unit scale. Shipped integrals use analytic gradients;
    /// this is for user-supplied functions.
    pub fn with_fd_gradient(
        label: impl Into<String>,
        class: IntegralClass,
        eval: impl Fn(&PhasePoint) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let eval = Arc::new(eval);
        let eval_for_grad = eval.clone();
        let grad = move |x: &PhasePoint| -> Tangent {
            let h = 1e-6 * (1.0 + x.norm());
            let d = x.dim();
            let mut coords = vec![0.0; d];
            for (idx, c) in coords.iter_mut().enumerate() {
                let e = PhasePoint::basis_coord(x.kind(), x.n(), idx);
                let plus = eval_for_grad(&x.add_scaled(h, &e));
                let minus = eval_for_grad(&x.add_scaled(-h, &e));
                *c = (plus - minus) / (2.0 * h);
            }
            PhasePoint::from_coords(x.kind(), x.n(), &coords).unwrap()
        };
        Self {
            label: label.into(),
            class,
            eval: Arc::new(move |x| eval(x)),
            grad: Arc::new(grad),
        }
    }

    /// The linear function x -> <b, x>, whose gradient is the constant b.
    pub fn linear(label: impl Into<String>, class: IntegralClass, b: PhasePoint) -> Self {
        let b_eval = b.clone();
        Self::new(
            label,
            class,
            move |x| b_eval.inner(x),
            move |_| b.clone(),
        )
    }

    /// The signed momentum coordinate x -> momentum[i, j], defined for any
    /// i != j (the (j, i) coordinate is its negative).
    pub fn momentum_entry(kind: ModelKind, n: usize, i: usize, j: usize) -> Self {
        let mut b = PhasePoint::zero(kind, n);
        b.momentum = SkewMatrix::basis(n, i, j);
        Self::linear(format!("M[{},{}]", i + 1, j + 1), IntegralClass::Noether, b)
    }

    /// The signed skew-companion coordinate x -> field[i, j].
    pub fn field_entry_so(n: usize, i: usize, j: usize) -> Self {
        let b = PhasePoint {
            momentum: SkewMatrix::zeros(n),
            field: Field::So(SkewMatrix::basis(n, i, j)),
        };
        Self::linear(format!("G[{},{}]", i + 1, j + 1), IntegralClass::Noether, b)
    }

    /// The vector-companion coordinate x -> field[k].
    pub fn field_entry_vec(n: usize, k: usize) -> Self {
        let b = PhasePoint {
            momentum: SkewMatrix::zeros(n),
            field: Field::Euclid(DVector::from_fn(n, |r, _| if r == k { 1.0 } else { 0.0 })),
        };
        Self::linear(format!("G[{}]", k + 1), IntegralClass::Noether, b)
    }

    /// Pointwise product, with the Leibniz gradient.
    pub fn product(f: &ScalarField, g: &ScalarField) -> Self {
        let (fe, fg) = (f.eval.clone(), f.grad.clone());
        let (ge, gg) = (g.eval.clone(), g.grad.clone());
        let (fe2, ge2) = (f.eval.clone(), g.eval.clone());
        Self {
            label: format!("({})*({})", f.label, g.label),
            class: f.class,
            eval: Arc::new(move |x| fe(x) * ge(x)),
            grad: Arc::new(move |x| {
                let gfx = fg(x);
                let ggx = gg(x);
                gfx.scale(ge2(x)).add_scaled(fe2(x), &ggx)
            }),
        }
    }

    /// Precompose with the momentum shift x -> (momentum + l, field).
    /// The shift is constant, so gradients pull back unchanged.
    pub fn shift_momentum(&self, l: &SkewMatrix) -> Self {
        let shift = |x: &PhasePoint, l: &SkewMatrix| PhasePoint {
            momentum: x.momentum.add_scaled(1.0, l),
            field: x.field.clone(),
        };
        let (e, g) = (self.eval.clone(), self.grad.clone());
        let (l1, l2) = (l.clone(), l.clone());
        Self {
            label: self.label.clone(),
            class: self.class,
            eval: Arc::new(move |x| e(&shift(x, &l1))),
            grad: Arc::new(move |x| g(&shift(x, &l2))),
        }
    }

    pub fn eval(&self, x: &PhasePoint) -> f64 {
        (self.eval)(x)
    }

    pub fn grad(&self, x: &PhasePoint) -> Tangent {
        (self.grad)(x)
    }
}

/// Label and class of one member of an `IntegralFamily`.
#[derive(Debug, Clone)]
pub struct FieldMeta {
    pub label: String,
    pub class: IntegralClass,
}

struct Group {
    meta: Vec<FieldMeta>,
    eval: BatchEvalFn,
    grad: BatchGradFn,
}

/// An ordered, labeled list of scalar functions sharing a phase space.
///
/// Members are stored in groups with batched evaluation so that families
/// whose members share expensive intermediates (matrix powers, polynomial
/// convolutions) compute them once per point.
pub struct IntegralFamily {
    groups: Vec<Group>,
    /// Human-readable construction notes (e.g. members dropped as constant).
    pub notes: Vec<String>,
}

impl IntegralFamily {
    pub fn empty() -> Self {
        Self {
            groups: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// One batched group. `eval` and `grad` must return exactly
    /// `meta.len()` entries, in order.
    pub fn from_group(
        meta: Vec<FieldMeta>,
        eval: impl Fn(&PhasePoint) -> Vec<f64> + Send + Sync + 'static,
        grad: impl Fn(&PhasePoint) -> Vec<Tangent> + Send + Sync + 'static,
    ) -> Self {
        Self {
            groups: vec![Group {
                meta,
                eval: Arc::new(eval),
                grad: Arc::new(grad),
            }],
            notes: Vec::new(),
        }
    }

    pub fn from_fields(fields: Vec<ScalarField>) -> Self {
        let mut fam = Self::empty();
        for f in fields {
            fam.push_field(f);
        }
        fam
    }

    pub fn push_field(&mut self, f: ScalarField) {
        let meta = vec![FieldMeta {
            label: f.label.clone(),
            class: f.class,
        }];
        let (e, g) = (f.eval, f.grad);
        self.groups.push(Group {
            meta,
            eval: Arc::new(move |x| vec![e(x)]),
            grad: Arc::new(move |x| vec![g(x)]),
        });
    }

    pub fn append(&mut self, mut other: IntegralFamily) {
        self.groups.append(&mut other.groups);
        self.notes.append(&mut other.notes);
    }

    pub fn len(&self) -> usize {
        self.groups.iter().map(|g| g.meta.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn meta(&self) -> Vec<&FieldMeta> {
        self.groups.iter().flat_map(|g| g.meta.iter()).collect()
    }

    pub fn labels(&self) -> Vec<String> {
        self.meta().iter().map(|m| m.label.clone()).collect()
    }

    /// All values at x, in family order.
    pub fn eval_all(&self, x: &PhasePoint) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for g in &self.groups {
            let vals = (g.eval)(x);
            debug_assert_eq!(vals.len(), g.meta.len());
            out.extend(vals);
        }
        out
    }

    /// All gradients at x, in family order.
    pub fn grad_all(&self, x: &PhasePoint) -> Vec<Tangent> {
        let mut out = Vec::with_capacity(self.len());
        for g in &self.groups {
            let grads = (g.grad)(x);
            debug_assert_eq!(grads.len(), g.meta.len());
            out.extend(grads);
        }
        out
    }

    /// Indices of members whose metadata satisfies the predicate.
    pub fn indices_where(&self, pred: impl Fn(&FieldMeta) -> bool) -> Vec<usize> {
        self.meta()
            .iter()
            .enumerate()
            .filter(|(_, m)| pred(m))
            .map(|(i, _)| i)
            .collect()
    }

    /// Materialize member `idx` as a standalone field. Evaluates its whole
    /// group per call; fine outside hot loops.
    pub fn field(&self, idx: usize) -> ScalarField {
        let mut base = 0;
        for g in &self.groups {
            if idx < base + g.meta.len() {
                let local = idx - base;
                let (e, gr) = (g.eval.clone(), g.grad.clone());
                return ScalarField {
                    label: g.meta[local].label.clone(),
                    class: g.meta[local].class,
                    eval: Arc::new(move |x| e(x)[local]),
                    grad: Arc::new(move |x| {
                        let mut all = gr(x);
                        all.swap_remove(local)
                    }),
                };
            }
            base += g.meta.len();
        }
        panic!("field index {idx} out of range for family of {}", self.len());
    }

    /// Precompose every member with the momentum shift (identity Jacobian).
    pub fn shift_momentum(&self, l: &SkewMatrix) -> IntegralFamily {
        let groups = self
            .groups
            .iter()
            .map(|g| {
                let (e, gr) = (g.eval.clone(), g.grad.clone());
                let (l1, l2) = (l.clone(), l.clone());
                Group {
                    meta: g.meta.clone(),
                    eval: Arc::new(move |x: &PhasePoint| {
                        e(&PhasePoint {
                            momentum: x.momentum.add_scaled(1.0, &l1),
                            field: x.field.clone(),
                        })
                    }),
                    grad: Arc::new(move |x: &PhasePoint| {
                        gr(&PhasePoint {
                            momentum: x.momentum.add_scaled(1.0, &l2),
                            field: x.field.clone(),
                        })
                    }),
                }
            })
            .collect();
        IntegralFamily {
            groups,
            notes: self.notes.clone(),
        }
    }
}

/// Gradient of a momentum- or companion-matrix function from its trace
/// factor: when dF[delta] = tr(Q delta) over skew delta, the gradient with
/// respect to the pairing is Q^T - Q (upper triangle).
pub fn trace_gradient(q: &DMatrix<f64>) -> SkewMatrix {
    SkewMatrix::from_upper_fn(q.nrows(), |i, j| q[(j, i)] - q[(i, j)])
}

/// Largest relative disagreement between a family's analytic directional
/// derivatives and central finite differences, over 10 random directions.
/// A testing oracle: the analytic gradients are the implementation under
/// test, the probe is the check.
pub fn gradient_probe_error(
    fam: &IntegralFamily,
    x: &PhasePoint,
    rng: &mut impl rand::Rng,
) -> f64 {
    let grads = fam.grad_all(x);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let dir = PhasePoint::random(x.kind(), x.n(), rng);
        let plus = fam.eval_all(&x.add_scaled(h, &dir));
        let minus = fam.eval_all(&x.add_scaled(-h, &dir));
        for (i, g) in grads.iter().enumerate() {
            let fd = (plus[i] - minus[i]) / (2.0 * h);
            let an = g.inner(&dir);
            let scale = 1.0f64.max(fd.abs());
            worst = worst.max((fd - an).abs() / scale);
        }
    }
    worst
}

/// A Poisson bracket: phase-space layout plus the constant rotor shift.
/// Zero shift is the standard bracket in total-momentum variables.
pub struct Bracket {
    kind: ModelKind,
    n: usize,
    shift: SkewMatrix,
}

impl Bracket {
    pub fn standard(kind: ModelKind, n: usize) -> Self {
        Self {
            kind,
            n,
            shift: SkewMatrix::zeros(n),
        }
    }

    pub fn magnetic(kind: ModelKind, n: usize, shift: SkewMatrix) -> Result<Self> {
        if shift.n() != n {
            return Err(Error::Dimension(format!(
                "rotor shift is {} x {} but the phase space needs {n} x {n}",
                shift.n(),
                shift.n()
            )));
        }
        Ok(Self { kind, n, shift })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shift(&self) -> &SkewMatrix {
        &self.shift
    }

    fn check_point(&self, x: &PhasePoint) {
        assert_eq!(x.kind(), self.kind, "phase point layout mismatch");
        assert_eq!(x.n(), self.n, "phase point dimension mismatch");
    }

    /// {F,G}(x) from precomputed gradients.
    pub fn eval_grads(&self, x: &PhasePoint, gf: &Tangent, gg: &Tangent) -> f64 {
        self.check_point(x);
        let shifted = x.momentum.add_scaled(1.0, &self.shift);
        let momentum_term = -pair(&shifted, &commutator(&gf.momentum, &gg.momentum));
        match (&x.field, &gf.field, &gg.field) {
            (Field::So(gamma), Field::So(bf), Field::So(bg)) => {
                let mixed = commutator(&gf.momentum, bg).add_scaled(1.0, &commutator(bf, &gg.momentum));
                momentum_term - pair(gamma, &mixed)
            }
            (Field::Euclid(gamma), Field::Euclid(bf), Field::Euclid(bg)) => {
                let mixed = gf.momentum.as_matrix() * bg - gg.momentum.as_matrix() * bf;
                momentum_term - gamma.dot(&mixed)
            }
            (Field::Absent, Field::Absent, Field::Absent) => momentum_term,
            _ => panic!("field kind mismatch in bracket"),
        }
    }

    pub fn eval(&self, f: &ScalarField, g: &ScalarField, x: &PhasePoint) -> f64 {
        self.eval_grads(x, &f.grad(x), &g.grad(x))
    }

    /// The Hamiltonian vector field in closed form, from the gradient of H:
    /// with W = dH_momentum and c = dH_field,
    ///
    /// - skew companion:   M' = [M+L, W] + [G, c],   G' = [G, W]
    /// - vector companion: M' = [M+L, W] + c ^ G,    G' = -W G
    /// - momentum alone:   M' = [M+L, W]
    pub fn hamiltonian_field_from_grad(&self, x: &PhasePoint, gh: &Tangent) -> Tangent {
        self.check_point(x);
        let shifted = x.momentum.add_scaled(1.0, &self.shift);
        let omega = &gh.momentum;
        let mdot = commutator(&shifted, omega);
        match (&x.field, &gh.field) {
            (Field::So(gamma), Field::So(chi)) => PhasePoint {
                momentum: mdot.add_scaled(1.0, &commutator(gamma, chi)),
                field: Field::So(commutator(gamma, omega)),
            },
            (Field::Euclid(gamma), Field::Euclid(chi)) => PhasePoint {
                momentum: mdot.add_scaled(1.0, &wedge(chi, gamma)),
                field: Field::Euclid(-(omega.as_matrix() * gamma)),
            },
            (Field::Absent, Field::Absent) => PhasePoint {
                momentum: mdot,
                field: Field::Absent,
            },
            _ => panic!("field kind mismatch in hamiltonian field"),
        }
    }

    pub fn hamiltonian_field(&self, h: &ScalarField, x: &PhasePoint) -> Tangent {
        self.hamiltonian_field_from_grad(x, &h.grad(x))
    }

    /// The Hamiltonian vector field assembled coordinate by coordinate as
    /// {coordinate, H}. Mathematically identical to the closed form; kept
    /// as an independent route for cross-validation.
    pub fn hamiltonian_field_via_coordinates(&self, h: &ScalarField, x: &PhasePoint) -> Tangent {
        self.check_point(x);
        let gh = h.grad(x);
        let d = x.dim();
        let mut coords = vec![0.0; d];
        for (idx, c) in coords.iter_mut().enumerate() {
            let e = PhasePoint::basis_coord(self.kind, self.n, idx);
            *c = self.eval_grads(x, &e, &gh);
        }
        PhasePoint::from_coords(self.kind, self.n, &coords).unwrap()
    }

    /// Bracket of two affine functions <a1,M> + <b1,field> + const and
    /// <a2,M> + <b2,field> + const, which is again affine; returns its
    /// (momentum part, field part, constant). Used to build exact nested
    /// brackets for associativity-style identities.
    pub fn affine_bracket(
        &self,
        a1: &SkewMatrix,
        b1: &Field,
        a2: &SkewMatrix,
        b2: &Field,
    ) -> (SkewMatrix, Field, f64) {
        let ca = commutator(a1, a2);
        let constant = -pair(&self.shift, &ca);
        let a = ca.scale(-1.0);
        let b = match (b1, b2) {
            (Field::So(b1), Field::So(b2)) => {
                Field::So(commutator(a1, b2).add_scaled(1.0, &commutator(b1, a2)).scale(-1.0))
            }
            (Field::Euclid(b1), Field::Euclid(b2)) => {
                Field::Euclid(-(a1.as_matrix() * b2 - a2.as_matrix() * b1))
            }
            (Field::Absent, Field::Absent) => Field::Absent,
            _ => panic!("field kind mismatch in affine bracket"),
        };
        (a, b, constant)
    }
}

/// Casimirs of the standard bracket, as functions of total momentum K and
/// the companion field.
///
/// - skew companion: tr(G^{2k}) and tr(K G^{2k-1}), k = 1..floor(n/2)
/// - vector companion: sums of bordered principal minors of even order
///   (see `bordered_minor_sum`), k = 1..floor((n+1)/2)
/// - momentum alone: tr(K^{2k}), k = 1..floor(n/2)
///
/// For the shifted bracket in body-momentum variables, precompose with
/// `IntegralFamily::shift_momentum`.
pub fn casimirs(kind: ModelKind, n: usize) -> IntegralFamily {
    match kind {
        ModelKind::SoSo => casimirs_so_so(n),
        ModelKind::EN => casimirs_e_n(n),
        ModelKind::SoN => casimirs_so_n(n),
    }
}

fn casimirs_so_so(n: usize) -> IntegralFamily {
    let kmax = n / 2;
    let mut meta = Vec::new();
    for k in 1..=kmax {
        meta.push(FieldMeta {
            label: format!("tr(G^{})", 2 * k),
            class: IntegralClass::Casimir,
        });
        meta.push(FieldMeta {
            label: format!("tr(K G^{})", 2 * k - 1),
            class: IntegralClass::Casimir,
        });
    }
    let eval = move |x: &PhasePoint| -> Vec<f64> {
        let gamma = x.field.as_so().expect("skew companion").as_matrix();
        let k_mat = x.momentum.as_matrix();
        let pows = matrix_powers(gamma, 2 * kmax);
        let mut out = Vec::with_capacity(2 * kmax);
        for k in 1..=kmax {
            out.push(pows[2 * k].trace());
            out.push((k_mat * &pows[2 * k - 1]).trace());
        }
        out
    };
    let grad = move |x: &PhasePoint| -> Vec<Tangent> {
        let gamma = x.field.as_so().expect("skew companion").as_matrix();
        let k_mat = x.momentum.as_matrix();
        let n = x.n();
        let pows = matrix_powers(gamma, 2 * kmax);
        let mut out = Vec::with_capacity(2 * kmax);
        for k in 1..=kmax {
            // tr(G^{2k}): dF[d] = 2k tr(G^{2k-1} d), gradient in the field slot.
            out.push(PhasePoint {
                momentum: SkewMatrix::zeros(n),
                field: Field::So(trace_gradient(&(2.0 * k as f64 * &pows[2 * k - 1]))),
            });
            // tr(K G^{2k-1}): momentum factor G^{2k-1}; field factor the
            // cyclic sum over insertion positions.
            let mut q = DMatrix::zeros(n, n);
            for r in 0..(2 * k - 1) {
                q += &pows[2 * k - 2 - r] * k_mat * &pows[r];
            }
            out.push(PhasePoint {
                momentum: trace_gradient(&pows[2 * k - 1]),
                field: Field::So(trace_gradient(&q)),
            });
        }
        out
    };
    IntegralFamily::from_group(meta, eval, grad)
}

fn casimirs_so_n(n: usize) -> IntegralFamily {
    let kmax = n / 2;
    let meta = (1..=kmax)
        .map(|k| FieldMeta {
            label: format!("tr(K^{})", 2 * k),
            class: IntegralClass::Casimir,
        })
        .collect();
    let eval = move |x: &PhasePoint| -> Vec<f64> {
        let pows = matrix_powers(x.momentum.as_matrix(), 2 * kmax);
        (1..=kmax).map(|k| pows[2 * k].trace()).collect()
    };
    let grad = move |x: &PhasePoint| -> Vec<Tangent> {
        let pows = matrix_powers(x.momentum.as_matrix(), 2 * kmax);
        (1..=kmax)
            .map(|k| PhasePoint {
                momentum: trace_gradient(&(2.0 * k as f64 * &pows[2 * k - 1])),
                field: Field::Absent,
            })
            .collect()
    };
    IntegralFamily::from_group(meta, eval, grad)
}

fn casimirs_e_n(n: usize) -> IntegralFamily {
    let kmax = n.div_ceil(2);
    let meta = (1..=kmax)
        .map(|k| FieldMeta {
            label: format!("minor_sum{}", 2 * k),
            class: IntegralClass::Casimir,
        })
        .collect();
    let eval = move |x: &PhasePoint| -> Vec<f64> {
        let gamma = x.field.as_euclid().expect("vector companion");
        let hat = border_with_field(&x.momentum, gamma);
        (1..=kmax)
            .map(|k| bordered_minor_sum(&hat, n, 2 * k))
            .collect()
    };
    let grad = move |x: &PhasePoint| -> Vec<Tangent> {
        let gamma = x.field.as_euclid().expect("vector companion");
        let hat = border_with_field(&x.momentum, gamma);
        (1..=kmax)
            .map(|k| bordered_minor_sum_gradient(&hat, n, 2 * k))
            .collect()
    };
    IntegralFamily::from_group(meta, eval, grad)
}

/// Powers a^0..a^{max} (a^0 = identity).
fn matrix_powers(a: &DMatrix<f64>, max: usize) -> Vec<DMatrix<f64>> {
    let n = a.nrows();
    let mut pows = Vec::with_capacity(max + 1);
    pows.push(DMatrix::identity(n, n));
    for r in 1..=max {
        pows.push(&pows[r - 1] * a);
    }
    pows
}

/// The (n+1) x (n+1) matrix with the momentum in the leading block, the
/// companion vector as the last column, and its negative as the last row.
pub fn border_with_field(k: &SkewMatrix, gamma: &DVector<f64>) -> DMatrix<f64> {
    let n = k.n();
    assert_eq!(gamma.len(), n, "companion vector length mismatch");
    DMatrix::from_fn(n + 1, n + 1, |i, j| {
        if i < n && j < n {
            k.entry(i, j)
        } else if j == n && i < n {
            gamma[i]
        } else if i == n && j < n {
            -gamma[j]
        } else {
            0.0
        }
    })
}

/// Lexicographic m-element subsets of 0..n.
fn combinations(n: usize, m: usize) -> Vec<Vec<usize>> {
    if m > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..m).collect();
    loop {
        out.push(cur.clone());
        // advance to the next combination
        let mut i = m;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] != i + n - m {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        cur[i] += 1;
        for j in (i + 1)..m {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Determinant by cofactor expansion for small matrices (deterministic and
/// exact on exactly-representable inputs); LU beyond size 8.
fn det_small(a: &DMatrix<f64>) -> f64 {
    let m = a.nrows();
    match m {
        0 => 1.0,
        1 => a[(0, 0)],
        2 => a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)],
        3..=8 => {
            let mut acc = 0.0;
            let mut sign = 1.0;
            for c in 0..m {
                if a[(0, c)] != 0.0 {
                    acc += sign * a[(0, c)] * det_small(&strike(a, 0, c));
                }
                sign = -sign;
            }
            acc
        }
        _ => a.clone().determinant(),
    }
}

/// Copy with row r and column c removed.
fn strike(a: &DMatrix<f64>, r: usize, c: usize) -> DMatrix<f64> {
    let m = a.nrows();
    DMatrix::from_fn(m - 1, m - 1, |i, j| {
        a[(i + if i >= r { 1 } else { 0 }, j + if j >= c { 1 } else { 0 })]
    })
}

/// Sum over index sets S of size order-1 within 0..n of the principal
/// `order`-minor of `hat` on S plus the border index n. `hat` must be the
/// (n+1)-bordered matrix of `border_with_field`.
pub fn bordered_minor_sum(hat: &DMatrix<f64>, n: usize, order: usize) -> f64 {
    let mut acc = 0.0;
    for s in combinations(n, order - 1) {
        let mut idx = s;
        idx.push(n);
        let sub = DMatrix::from_fn(order, order, |i, j| hat[(idx[i], idx[j])]);
        acc += det_small(&sub);
    }
    acc
}

/// Gradient of `bordered_minor_sum` with respect to (momentum, field),
/// assembled from cofactors of each minor.
fn bordered_minor_sum_gradient(hat: &DMatrix<f64>, n: usize, order: usize) -> Tangent {
    // Accumulate d(sum)/d(hat entries) over all minors; hat entries then map
    // to the phase-point coordinates: (i,j) and (j,i) both carry K_ij (with
    // opposite signs), and the border column/row carries the field.
    let mut dhat = DMatrix::<f64>::zeros(n + 1, n + 1);
    for s in combinations(n, order - 1) {
        let mut idx = s;
        idx.push(n);
        let sub = DMatrix::from_fn(order, order, |i, j| hat[(idx[i], idx[j])]);
        for p in 0..order {
            for q in 0..order {
                let sign = if (p + q) % 2 == 0 { 1.0 } else { -1.0 };
                let cof = sign * det_small(&strike(&sub, p, q));
                dhat[(idx[p], idx[q])] += cof;
            }
        }
    }
    let momentum = SkewMatrix::from_upper_fn(n, |i, j| dhat[(i, j)] - dhat[(j, i)]);
    let field = DVector::from_fn(n, |i, _| dhat[(i, n)] - dhat[(n, i)]);
    PhasePoint {
        momentum,
        field: Field::Euclid(field),
    }
}
