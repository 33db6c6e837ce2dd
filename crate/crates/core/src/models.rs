//! The catalog of integrable model families: mass tensors, rotor data,
//! Hamiltonians, closed-form equations of motion, structural validation,
//! and the three classical three-dimensional fourth integrals.
//!
//! Every family's Hamiltonian is the kinetic form (1/2)<momentum, W> plus a
//! linear potential in the companion field; what varies is the phase-space
//! layout, the mass-tensor block pattern, the allowed support of the field
//! coefficient chi, and where the rotor momentum L may live.

use crate::error::{Error, Result};
use crate::phase::{Field, ModelKind, PhasePoint, Representation, Tangent};
use crate::poisson::{self, Bracket, IntegralClass, IntegralFamily, ScalarField};
use crate::skew::{commutator, hat3, pair, project, vee3, SkewMatrix, SymmetryPattern};
use nalgebra::DVector;

/// Model family tags. The string forms double as config-file identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    LagrangeSoSo,
    Bitop,
    TotallySymmetric,
    BelyaevEN,
    ManakovGyro,
    Classical3Euler,
    Classical3Lagrange,
    Classical3Kowalevski,
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::LagrangeSoSo => "lagrange_so_so",
            Family::Bitop => "bitop",
            Family::TotallySymmetric => "totally_symmetric",
            Family::BelyaevEN => "belyaev_e_n",
            Family::ManakovGyro => "manakov_gyro",
            Family::Classical3Euler => "classical3_euler",
            Family::Classical3Lagrange => "classical3_lagrange",
            Family::Classical3Kowalevski => "classical3_kowalevski",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        Ok(match tag {
            "lagrange_so_so" => Family::LagrangeSoSo,
            "bitop" => Family::Bitop,
            "totally_symmetric" => Family::TotallySymmetric,
            "belyaev_e_n" => Family::BelyaevEN,
            "manakov_gyro" => Family::ManakovGyro,
            "classical3_euler" => Family::Classical3Euler,
            "classical3_lagrange" => Family::Classical3Lagrange,
            "classical3_kowalevski" => Family::Classical3Kowalevski,
            other => return Err(Error::Input(format!("unknown family \"{other}\""))),
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Family::LagrangeSoSo | Family::Bitop | Family::TotallySymmetric => ModelKind::SoSo,
            Family::BelyaevEN
            | Family::Classical3Euler
            | Family::Classical3Lagrange
            | Family::Classical3Kowalevski => ModelKind::EN,
            Family::ManakovGyro => ModelKind::SoN,
        }
    }

    pub fn is_classical3(&self) -> bool {
        matches!(
            self,
            Family::Classical3Euler | Family::Classical3Lagrange | Family::Classical3Kowalevski
        )
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.tag())
    }
}

/// How momenta map to angular velocities.
#[derive(Debug, Clone)]
pub enum Inertia {
    /// Diagonal mass tensor acting entrywise: momentum[i,j] = (J_i + J_j) w[i,j].
    MassTensor(DVector<f64>),
    /// Classical principal inertia acting on axis vectors: momentum = I w,
    /// conjugated through the three-dimensional dictionary.
    Principal3(DVector<f64>),
}

impl Inertia {
    pub fn apply(&self, w: &SkewMatrix) -> SkewMatrix {
        match self {
            Inertia::MassTensor(j) => mass_tensor_apply(j, w),
            Inertia::Principal3(i) => {
                let v = vee3(w).expect("three-dimensional inertia");
                hat3(&v.component_mul(i)).unwrap()
            }
        }
    }

    pub fn invert(&self, m: &SkewMatrix) -> SkewMatrix {
        match self {
            Inertia::MassTensor(j) => mass_tensor_invert(j, m),
            Inertia::Principal3(i) => {
                let v = vee3(m).expect("three-dimensional inertia");
                hat3(&v.component_div(i)).unwrap()
            }
        }
    }
}

/// momentum[i,j] = (J_i + J_j) w[i,j].
pub fn mass_tensor_apply(j: &DVector<f64>, w: &SkewMatrix) -> SkewMatrix {
    assert_eq!(j.len(), w.n(), "mass tensor dimension mismatch");
    SkewMatrix::from_upper_fn(w.n(), |a, b| (j[a] + j[b]) * w.entry(a, b))
}

/// Exact inverse of `mass_tensor_apply`: w[i,j] = momentum[i,j] / (J_i + J_j).
pub fn mass_tensor_invert(j: &DVector<f64>, m: &SkewMatrix) -> SkewMatrix {
    assert_eq!(j.len(), m.n(), "mass tensor dimension mismatch");
    SkewMatrix::from_upper_fn(m.n(), |a, b| m.entry(a, b) / (j[a] + j[b]))
}

/// A validated model: family, dimension, inertia, field coefficient chi,
/// rotor momentum L, and the representation of the momentum slot.
#[derive(Clone)]
pub struct ModelSpec {
    family: Family,
    n: usize,
    inertia: Inertia,
    /// Block pattern of the mass tensor; absent for the classical models.
    pattern: Option<SymmetryPattern>,
    chi: Field,
    l_mat: SkewMatrix,
    /// The rotor momentum as an axis vector, for the classical models.
    l_vec3: Option<DVector<f64>>,
    representation: Representation,
}

impl std::fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "ModelSpec({}, n={}, {})",
            self.family, self.n, self.representation
        )
    }
}

impl ModelSpec {
    /// Rotationally symmetric heavy body: mass tensor blocks (2, n-2) with
    /// values (alpha1, alpha2), field coefficient supported on the leading
    /// plane, rotor inside the block subalgebra.
    pub fn lagrange_so_so(
        n: usize,
        alpha1: f64,
        alpha2: f64,
        chi: SkewMatrix,
        l: SkewMatrix,
        representation: Representation,
    ) -> Result<Self> {
        if n < 3 {
            return Err(Error::Model("this family needs n >= 3".into()));
        }
        let pattern = SymmetryPattern::new(vec![2, n - 2], vec![alpha1, alpha2])?;
        Self::finish(
            Family::LagrangeSoSo,
            n,
            Inertia::MassTensor(pattern.diagonal()),
            Some(pattern),
            Field::So(chi),
            l,
            None,
            representation,
        )
    }

    /// Doubly symmetric four-dimensional heavy body: blocks (2, 2), field
    /// coefficient supported on both block planes.
    pub fn bitop(
        alpha1: f64,
        alpha2: f64,
        chi: SkewMatrix,
        l: SkewMatrix,
        representation: Representation,
    ) -> Result<Self> {
        let pattern = SymmetryPattern::new(vec![2, 2], vec![alpha1, alpha2])?;
        Self::finish(
            Family::Bitop,
            4,
            Inertia::MassTensor(pattern.diagonal()),
            Some(pattern),
            Field::So(chi),
            l,
            None,
            representation,
        )
    }

    /// Fully symmetric heavy body: scalar mass tensor, arbitrary skew field
    /// coefficient, rotor commuting with it.
    pub fn totally_symmetric(
        n: usize,
        alpha1: f64,
        chi: SkewMatrix,
        l: SkewMatrix,
        representation: Representation,
    ) -> Result<Self> {
        if n < 3 {
            return Err(Error::Model("this family needs n >= 3".into()));
        }
        let pattern = SymmetryPattern::new(vec![n], vec![alpha1])?;
        Self::finish(
            Family::TotallySymmetric,
            n,
            Inertia::MassTensor(pattern.diagonal()),
            Some(pattern),
            Field::So(chi),
            l,
            None,
            representation,
        )
    }

    /// Heavy body on the vector phase space: blocks (n-1, 1), field
    /// coefficient along the last axis, rotor inside the leading block.
    pub fn belyaev_e_n(
        n: usize,
        alpha1: f64,
        alpha2: f64,
        chi: DVector<f64>,
        l: SkewMatrix,
        representation: Representation,
    ) -> Result<Self> {
        if n < 3 {
            return Err(Error::Model("this family needs n >= 3".into()));
        }
        let pattern = SymmetryPattern::new(vec![n - 1, 1], vec![alpha1, alpha2])?;
        Self::finish(
            Family::BelyaevEN,
            n,
            Inertia::MassTensor(pattern.diagonal()),
            Some(pattern),
            Field::Euclid(chi),
            l,
            None,
            representation,
        )
    }

    /// Free body with a rotor: block-diagonal mass tensor, no field, rotor
    /// commuting with the mass tensor.
    pub fn manakov_gyro(
        j: DVector<f64>,
        l: SkewMatrix,
        representation: Representation,
    ) -> Result<Self> {
        let n = j.len();
        if n < 3 {
            return Err(Error::Model("this family needs n >= 3".into()));
        }
        let diag: Vec<f64> = j.iter().copied().collect();
        let pattern = SymmetryPattern::from_diagonal(&diag)?;
        Self::finish(
            Family::ManakovGyro,
            n,
            Inertia::MassTensor(j),
            Some(pattern),
            Field::Absent,
            l,
            None,
            representation,
        )
    }

    /// The classical three-dimensional cases, with vector inertia, field
    /// coefficient, and rotor momentum. Stored on the vector phase space
    /// with momentum as a skew matrix; `vee3` recovers the axis form.
    pub fn classical3(
        family: Family,
        inertia: DVector<f64>,
        chi: DVector<f64>,
        l: DVector<f64>,
        representation: Representation,
    ) -> Result<Self> {
        if !family.is_classical3() {
            return Err(Error::Model(format!("{family} is not a classical model")));
        }
        if inertia.len() != 3 || chi.len() != 3 || l.len() != 3 {
            return Err(Error::Model("classical models need three-vectors".into()));
        }
        let l_mat = hat3(&l)?;
        Self::finish(
            family,
            3,
            Inertia::Principal3(inertia),
            None,
            Field::Euclid(chi),
            l_mat,
            Some(l),
            representation,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        family: Family,
        n: usize,
        inertia: Inertia,
        pattern: Option<SymmetryPattern>,
        chi: Field,
        l_mat: SkewMatrix,
        l_vec3: Option<DVector<f64>>,
        representation: Representation,
    ) -> Result<Self> {
        let spec = Self {
            family,
            n,
            inertia,
            pattern,
            chi,
            l_mat,
            l_vec3,
            representation,
        };
        let violations = spec.validate();
        if violations.is_empty() {
            Ok(spec)
        } else {
            Err(Error::InvalidModel(violations))
        }
    }

    /// Replace the rotor momentum without validation. For sensitivity
    /// probes that deliberately break structural hypotheses; everything
    /// else must go through the validated constructors.
    pub fn with_rotor_unchecked(&self, l: SkewMatrix) -> Self {
        let mut spec = self.clone();
        spec.l_mat = l;
        spec.l_vec3 = None;
        spec
    }

    /// Same model, other momentum representation.
    pub fn with_representation(&self, representation: Representation) -> Self {
        let mut spec = self.clone();
        spec.representation = representation;
        spec
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> ModelKind {
        self.family.kind()
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn inertia(&self) -> &Inertia {
        &self.inertia
    }

    pub fn pattern(&self) -> Option<&SymmetryPattern> {
        self.pattern.as_ref()
    }

    pub fn chi(&self) -> &Field {
        &self.chi
    }

    pub fn rotor(&self) -> &SkewMatrix {
        &self.l_mat
    }

    pub fn rotor_vec3(&self) -> Option<&DVector<f64>> {
        self.l_vec3.as_ref()
    }

    /// Structural checks; an empty list means the spec is sound. Exact
    /// zero is required for exactly-representable conditions (support
    /// patterns); commutator conditions on general data use 1e-12.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        match &self.inertia {
            Inertia::MassTensor(j) => {
                if j.iter().any(|&v| v <= 0.0) {
                    out.push("mass tensor entries must be positive".into());
                }
                if j.len() != self.n {
                    out.push("mass tensor size must match n".into());
                }
            }
            Inertia::Principal3(i) => {
                if i.iter().any(|&v| v <= 0.0) {
                    out.push("inertia entries must be positive".into());
                }
            }
        }
        if self.l_mat.n() != self.n {
            out.push("rotor momentum must be n x n".into());
        }
        match (&self.chi, self.kind()) {
            (Field::So(c), ModelKind::SoSo) => {
                if c.n() != self.n {
                    out.push("field coefficient must be n x n".into());
                }
            }
            (Field::Euclid(c), ModelKind::EN) => {
                if c.len() != self.n {
                    out.push("field coefficient must have length n".into());
                }
            }
            (Field::Absent, ModelKind::SoN) => {}
            _ => out.push("field coefficient shape does not match the phase space".into()),
        }
        if !out.is_empty() {
            return out;
        }

        match self.family {
            Family::LagrangeSoSo => {
                self.check_chi_support(&[(0, 1)], &mut out);
                self.check_rotor_in_blocks(&mut out);
            }
            Family::Bitop => {
                if self.n != 4 {
                    out.push("this family requires n = 4".into());
                }
                self.check_chi_support(&[(0, 1), (2, 3)], &mut out);
                self.check_rotor_in_blocks(&mut out);
            }
            Family::TotallySymmetric => {
                let chi = self.chi.as_so().unwrap();
                let c = commutator(&self.l_mat, chi);
                if c.max_abs() > 1e-12 {
                    out.push(format!(
                        "rotor momentum must commute with the field coefficient \
                         (|[L, chi]| = {:.3e})",
                        c.max_abs()
                    ));
                }
            }
            Family::BelyaevEN => {
                let chi = self.chi.as_euclid().unwrap();
                if chi.iter().take(self.n - 1).any(|&v| v != 0.0) {
                    out.push("field coefficient must lie along the last axis".into());
                }
                self.check_rotor_in_blocks(&mut out);
            }
            Family::ManakovGyro => {
                self.check_rotor_in_blocks(&mut out);
            }
            Family::Classical3Euler => {
                let chi = self.chi.as_euclid().unwrap();
                if chi.iter().any(|&v| v != 0.0) {
                    out.push("the free case requires a zero field coefficient".into());
                }
            }
            Family::Classical3Lagrange => {
                let i = match &self.inertia {
                    Inertia::Principal3(i) => i,
                    _ => unreachable!(),
                };
                if i[0] != i[1] {
                    out.push("the first two inertia moments must coincide".into());
                }
                let chi = self.chi.as_euclid().unwrap();
                if chi[0] != 0.0 || chi[1] != 0.0 {
                    out.push("field coefficient must lie along the symmetry axis".into());
                }
                if let Some(l) = &self.l_vec3 {
                    if l[0] != 0.0 || l[1] != 0.0 {
                        out.push("rotor momentum must lie along the symmetry axis".into());
                    }
                }
            }
            Family::Classical3Kowalevski => {
                let i = match &self.inertia {
                    Inertia::Principal3(i) => i,
                    _ => unreachable!(),
                };
                if !(i[0] == 1.0 && i[1] == 1.0 && i[2] == 0.5) {
                    out.push("inertia must be diag(1, 1, 1/2)".into());
                }
                let chi = self.chi.as_euclid().unwrap();
                if chi[1] != 0.0 || chi[2] != 0.0 {
                    out.push("field coefficient must lie along the first axis".into());
                }
                if let Some(l) = &self.l_vec3 {
                    if l[0] != 0.0 || l[1] != 0.0 {
                        out.push("rotor momentum must lie along the third axis".into());
                    }
                }
            }
        }
        out
    }

    fn check_chi_support(&self, allowed: &[(usize, usize)], out: &mut Vec<String>) {
        let chi = self.chi.as_so().unwrap();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if chi.entry(i, j) != 0.0 && !allowed.contains(&(i, j)) {
                    out.push(format!(
                        "field coefficient entry ({}, {}) must be zero for this family",
                        i + 1,
                        j + 1
                    ));
                }
            }
        }
    }

    fn check_rotor_in_blocks(&self, out: &mut Vec<String>) {
        let pattern = self.pattern.as_ref().expect("pattern family");
        let inside = project(pattern, &self.l_mat);
        if self.l_mat.add_scaled(-1.0, &inside).max_abs() != 0.0 {
            out.push("rotor momentum must vanish outside the mass-tensor blocks".into());
        }
    }

    /// The angular velocity at x: the inertia inverse of the body momentum,
    /// which is the momentum slot itself (shifted representation) or total
    /// momentum minus rotor (standard representation).
    pub fn omega(&self, x: &PhasePoint) -> SkewMatrix {
        let body = match self.representation {
            Representation::Magnetic => x.momentum.clone(),
            Representation::Standard => x.momentum.add_scaled(-1.0, &self.l_mat),
        };
        self.inertia.invert(&body)
    }

    /// The bracket this spec's equations are Hamiltonian for.
    pub fn bracket(&self) -> Bracket {
        match self.representation {
            Representation::Magnetic => {
                Bracket::magnetic(self.kind(), self.n, self.l_mat.clone()).unwrap()
            }
            Representation::Standard => Bracket::standard(self.kind(), self.n),
        }
    }

    /// The standard bracket on this phase space (rotor shift zero),
    /// regardless of representation.
    pub fn standard_bracket(&self) -> Bracket {
        Bracket::standard(self.kind(), self.n)
    }

    /// Convert a phase point between representations (total = body + rotor).
    pub fn convert(&self, x: &PhasePoint, to: Representation) -> PhasePoint {
        if self.representation == to {
            return x.clone();
        }
        let sign = match to {
            Representation::Standard => 1.0,
            Representation::Magnetic => -1.0,
        };
        PhasePoint {
            momentum: x.momentum.add_scaled(sign, &self.l_mat),
            field: x.field.clone(),
        }
    }

    /// The energy as a scalar field with analytic gradient. In the shifted
    /// representation H = (1/2)<M, inv(I) M> + <chi, field>; in standard
    /// variables H = (1/2)<K, inv(I) K> - <K, inv(I) L> + <chi, field>.
    /// The two differ by the constant (1/2)<L, inv(I) L> under K = M + L.
    pub fn hamiltonian(&self) -> ScalarField {
        let inertia = self.inertia.clone();
        let chi = self.chi.clone();
        let representation = self.representation;
        let l = self.l_mat.clone();
        let inertia2 = inertia.clone();
        let chi2 = chi.clone();
        let l2 = l.clone();
        ScalarField::new(
            "energy",
            IntegralClass::Hamiltonian,
            move |x: &PhasePoint| {
                let body = match representation {
                    Representation::Magnetic => x.momentum.clone(),
                    Representation::Standard => x.momentum.add_scaled(-1.0, &l),
                };
                let w = inertia.invert(&body);
                let kinetic = match representation {
                    Representation::Magnetic => 0.5 * pair(&x.momentum, &w),
                    // (1/2)<K, inv(I) K> - <K, inv(I) L>, assembled as
                    // (1/2)<K, inv(I)(K-L)> - (1/2)<K, inv(I) L>.
                    Representation::Standard => {
                        let il = inertia.invert(&l);
                        0.5 * pair(&x.momentum, &w) - 0.5 * pair(&x.momentum, &il)
                    }
                };
                let potential = match (&chi, &x.field) {
                    (Field::So(c), Field::So(g)) => pair(c, g),
                    (Field::Euclid(c), Field::Euclid(g)) => c.dot(g),
                    (Field::Absent, Field::Absent) => 0.0,
                    _ => panic!("field kind mismatch"),
                };
                kinetic + potential
            },
            move |x: &PhasePoint| {
                let body = match representation {
                    Representation::Magnetic => x.momentum.clone(),
                    Representation::Standard => x.momentum.add_scaled(-1.0, &l2),
                };
                PhasePoint {
                    momentum: inertia2.invert(&body),
                    field: chi2.clone(),
                }
            },
        )
    }

    /// The closed-form right-hand side of the equations of motion.
    pub fn vector_field(&self, x: &PhasePoint) -> Tangent {
        let gh = PhasePoint {
            momentum: self.omega(x),
            field: self.chi.clone(),
        };
        self.bracket().hamiltonian_field_from_grad(x, &gh)
    }

    /// Casimirs of this spec's bracket (precomposed with the momentum
    /// shift in the shifted representation).
    pub fn casimirs(&self) -> IntegralFamily {
        let fam = poisson::casimirs(self.kind(), self.n);
        match self.representation {
            Representation::Standard => fam,
            Representation::Magnetic => fam.shift_momentum(&self.l_mat),
        }
    }

    /// Orthonormal basis of the symmetry subalgebra: within-block wedges
    /// for block mass tensors, orthonormalized odd powers of the field
    /// coefficient for the fully symmetric family, empty for classical
    /// models.
    pub fn symmetry_basis(&self) -> Vec<SkewMatrix> {
        match self.family {
            Family::TotallySymmetric => {
                let chi = self.chi.as_so().unwrap();
                odd_power_basis(chi)
            }
            Family::Classical3Euler | Family::Classical3Lagrange | Family::Classical3Kowalevski => {
                Vec::new()
            }
            _ => {
                let pattern = self.pattern.as_ref().unwrap();
                let mut out = Vec::new();
                for range in pattern.block_ranges() {
                    for i in range.clone() {
                        for j in (i + 1)..range.end {
                            out.push(SkewMatrix::basis(self.n, i, j));
                        }
                    }
                }
                out
            }
        }
    }

    /// Whether the symmetry subalgebra is commutative (all its basis
    /// commutators vanish). Block algebras are commutative exactly when
    /// every block has at most two indices; the odd-power algebra of the
    /// fully symmetric family always is.
    pub fn symmetry_is_abelian(&self) -> bool {
        match self.family {
            Family::TotallySymmetric => true,
            Family::Classical3Euler | Family::Classical3Lagrange | Family::Classical3Kowalevski => {
                true
            }
            _ => {
                let pattern = self.pattern.as_ref().unwrap();
                pattern.lengths().iter().all(|&l| l <= 2)
            }
        }
    }

    /// Orthogonal projection onto the symmetry subalgebra.
    pub fn project_symmetry(&self, k: &SkewMatrix) -> SkewMatrix {
        match self.family {
            Family::TotallySymmetric => {
                let mut acc = SkewMatrix::zeros(self.n);
                for b in self.symmetry_basis() {
                    acc = acc.add_scaled(pair(&b, k), &b);
                }
                acc
            }
            _ => {
                let pattern = self.pattern.as_ref().expect("pattern family");
                project(pattern, k)
            }
        }
    }

    /// inv(I) applied to the rotor momentum; within the symmetry blocks the
    /// inverse is entrywise, so the result stays in the subalgebra.
    pub fn rotor_velocity(&self) -> SkewMatrix {
        self.inertia.invert(&self.l_mat)
    }

    /// The family's fourth integral for the classical three-dimensional
    /// cases, as a function on this spec's phase space.
    pub fn classical3_integral(&self, x: &PhasePoint) -> Result<f64> {
        let m = vee3(&x.momentum)?;
        let gamma = x
            .field
            .as_euclid()
            .ok_or_else(|| Error::Model("classical integral needs the vector phase space".into()))?;
        // The formulas are in body-momentum components.
        let m = match self.representation {
            Representation::Magnetic => m,
            Representation::Standard => m - self.l_vec3.as_ref().unwrap(),
        };
        match self.family {
            Family::Classical3Euler => {
                let l = self.l_vec3.as_ref().unwrap();
                let total = &m + l;
                Ok(total.dot(&total))
            }
            Family::Classical3Lagrange => Ok(m[2]),
            Family::Classical3Kowalevski => {
                let chi1 = self.chi.as_euclid().unwrap()[0];
                let eta = self.l_vec3.as_ref().unwrap()[2];
                let a = m[0] * m[0] - m[1] * m[1] - 2.0 * chi1 * gamma[0];
                let b = 2.0 * m[0] * m[1] - 2.0 * chi1 * gamma[1];
                let tail = m[2] * (m[0] * m[0] + m[1] * m[1])
                    + 2.0 * eta * m[2] * m[2]
                    + 2.0 * chi1 * eta * gamma[0]
                    - 2.0 * chi1 * m[0] * gamma[2];
                Ok(a * a + b * b + 8.0 * eta * tail)
            }
            _ => Err(Error::Model(format!(
                "{} has no classical fourth integral",
                self.family
            ))),
        }
    }

    /// The fourth integral as a monitorable scalar field.
    pub fn classical3_integral_field(&self) -> Result<ScalarField> {
        if !self.family.is_classical3() {
            return Err(Error::Model(format!(
                "{} has no classical fourth integral",
                self.family
            )));
        }
        let spec = self.clone();
        Ok(ScalarField::with_fd_gradient(
            "fourth_integral",
            IntegralClass::Spectral,
            move |x| spec.classical3_integral(x).expect("validated spec"),
        ))
    }
}

/// Gram-Schmidt over the pairing on the odd matrix powers c, c^3, ...,
/// c^{2 floor(n/2) - 1}; near-dependent powers (non-regular c) are dropped.
fn odd_power_basis(chi: &SkewMatrix) -> Vec<SkewMatrix> {
    let n = chi.n();
    let chi2 = chi.as_matrix() * chi.as_matrix();
    let mut out: Vec<SkewMatrix> = Vec::new();
    let mut power = chi.as_matrix().clone();
    for _ in 0..(n / 2) {
        let candidate = SkewMatrix::skew_part(&power);
        let scale = pair(&candidate, &candidate).sqrt();
        let mut v = candidate;
        for b in &out {
            v = v.add_scaled(-pair(b, &v), b);
        }
        let norm = pair(&v, &v).sqrt();
        if norm > 1e-10 * scale.max(1.0) {
            out.push(v.scale(1.0 / norm));
        }
        power = &power * &chi2;
    }
    out
}
