//! Phase points for the three model layouts: momentum with a skew companion,
//! momentum with a vector companion, and momentum alone.
//!
//! A `PhasePoint` doubles as a tangent vector and as a gradient container,
//! since all three live in the same linear space. The flat coordinate order
//! (momentum upper triangle, then field coordinates) is fixed here and is
//! what finite-difference probes and rank computations rely on.

use crate::error::{Error, Result};
use crate::skew::{pair, SkewMatrix};
use nalgebra::DVector;
use rand::Rng;

/// Which phase space a model lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Momentum plus a skew companion of the same dimension.
    SoSo,
    /// Momentum plus a direction vector.
    EN,
    /// Momentum alone.
    SoN,
}

/// Whether the momentum slot stores the body momentum M (bracket carries the
/// rotor shift) or the total momentum K = M + L (standard bracket).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Magnetic,
    Standard,
}

impl std::fmt::Display for Representation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Representation::Magnetic => write!(f, "magnetic"),
            Representation::Standard => write!(f, "standard"),
        }
    }
}

/// The companion variable carried next to the momentum.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    So(SkewMatrix),
    Euclid(DVector<f64>),
    Absent,
}

impl Field {
    pub fn kind(&self) -> ModelKind {
        match self {
            Field::So(_) => ModelKind::SoSo,
            Field::Euclid(_) => ModelKind::EN,
            Field::Absent => ModelKind::SoN,
        }
    }

    pub fn zero_like(&self) -> Field {
        match self {
            Field::So(g) => Field::So(SkewMatrix::zeros(g.n())),
            Field::Euclid(g) => Field::Euclid(DVector::zeros(g.len())),
            Field::Absent => Field::Absent,
        }
    }

    pub fn add_scaled(&self, c: f64, other: &Field) -> Field {
        match (self, other) {
            (Field::So(a), Field::So(b)) => Field::So(a.add_scaled(c, b)),
            (Field::Euclid(a), Field::Euclid(b)) => Field::Euclid(a + c * b),
            (Field::Absent, Field::Absent) => Field::Absent,
            _ => panic!("field kind mismatch in add_scaled"),
        }
    }

    pub fn scale(&self, c: f64) -> Field {
        match self {
            Field::So(a) => Field::So(a.scale(c)),
            Field::Euclid(a) => Field::Euclid(c * a),
            Field::Absent => Field::Absent,
        }
    }

    /// Inner product matching the flat coordinates: skew pairing or dot.
    pub fn inner(&self, other: &Field) -> f64 {
        match (self, other) {
            (Field::So(a), Field::So(b)) => pair(a, b),
            (Field::Euclid(a), Field::Euclid(b)) => a.dot(b),
            (Field::Absent, Field::Absent) => 0.0,
            _ => panic!("field kind mismatch in inner"),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            Field::So(a) => a.max_abs(),
            Field::Euclid(a) => a.iter().fold(0.0f64, |m, &v| m.max(v.abs())),
            Field::Absent => 0.0,
        }
    }

    /// The skew companion, when this field holds one.
    pub fn as_so(&self) -> Option<&SkewMatrix> {
        match self {
            Field::So(g) => Some(g),
            _ => None,
        }
    }

    /// The vector companion, when this field holds one.
    pub fn as_euclid(&self) -> Option<&DVector<f64>> {
        match self {
            Field::Euclid(g) => Some(g),
            _ => None,
        }
    }
}

/// A point of the phase space: momentum plus companion field.
///
/// Also used for tangent vectors (time derivatives) and for gradients of
/// scalar functions, which share the same linear structure.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub momentum: SkewMatrix,
    pub field: Field,
}

/// Time derivatives and gradients share the phase point's shape.
pub type Tangent = PhasePoint;

impl PhasePoint {
    pub fn so_so(momentum: SkewMatrix, gamma: SkewMatrix) -> Result<Self> {
        if momentum.n() != gamma.n() {
            return Err(Error::Dimension(format!(
                "momentum is {} x {} but companion is {} x {}",
                momentum.n(),
                momentum.n(),
                gamma.n(),
                gamma.n()
            )));
        }
        Ok(Self {
            momentum,
            field: Field::So(gamma),
        })
    }

    pub fn e_n(momentum: SkewMatrix, gamma: DVector<f64>) -> Result<Self> {
        if momentum.n() != gamma.len() {
            return Err(Error::Dimension(format!(
                "momentum is {} x {} but companion vector has length {}",
                momentum.n(),
                momentum.n(),
                gamma.len()
            )));
        }
        Ok(Self {
            momentum,
            field: Field::Euclid(gamma),
        })
    }

    pub fn so_n(momentum: SkewMatrix) -> Self {
        Self {
            momentum,
            field: Field::Absent,
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.field.kind()
    }

    pub fn n(&self) -> usize {
        self.momentum.n()
    }

    pub fn zero(kind: ModelKind, n: usize) -> Self {
        let momentum = SkewMatrix::zeros(n);
        let field = match kind {
            ModelKind::SoSo => Field::So(SkewMatrix::zeros(n)),
            ModelKind::EN => Field::Euclid(DVector::zeros(n)),
            ModelKind::SoN => Field::Absent,
        };
        Self { momentum, field }
    }

    pub fn zero_like(&self) -> Self {
        Self {
            momentum: SkewMatrix::zeros(self.n()),
            field: self.field.zero_like(),
        }
    }

    pub fn add_scaled(&self, c: f64, other: &Self) -> Self {
        Self {
            momentum: self.momentum.add_scaled(c, &other.momentum),
            field: self.field.add_scaled(c, &other.field),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            momentum: self.momentum.scale(c),
            field: self.field.scale(c),
        }
    }

    /// Inner product matching the flat coordinates.
    pub fn inner(&self, other: &Self) -> f64 {
        pair(&self.momentum, &other.momentum) + self.field.inner(&other.field)
    }

    pub fn max_abs(&self) -> f64 {
        self.momentum.max_abs().max(self.field.max_abs())
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// Number of flat coordinates for a given layout.
    pub fn coord_count(kind: ModelKind, n: usize) -> usize {
        let m = SkewMatrix::coord_count(n);
        match kind {
            ModelKind::SoSo => 2 * m,
            ModelKind::EN => m + n,
            ModelKind::SoN => m,
        }
    }

    pub fn dim(&self) -> usize {
        Self::coord_count(self.kind(), self.n())
    }

    /// Flat coordinates: momentum upper triangle (row-major), then field.
    pub fn to_coords(&self) -> Vec<f64> {
        let mut out = self.momentum.upper_triangle();
        match &self.field {
            Field::So(g) => out.extend(g.upper_triangle()),
            Field::Euclid(g) => out.extend(g.iter().copied()),
            Field::Absent => {}
        }
        out
    }

    pub fn from_coords(kind: ModelKind, n: usize, coords: &[f64]) -> Result<Self> {
        let expected = Self::coord_count(kind, n);
        if coords.len() != expected {
            return Err(Error::Dimension(format!(
                "expected {expected} coordinates, got {}",
                coords.len()
            )));
        }
        let m = SkewMatrix::coord_count(n);
        let mut it = coords[..m].iter().copied();
        let momentum = SkewMatrix::from_upper_fn(n, |_, _| it.next().unwrap());
        let field = match kind {
            ModelKind::SoSo => {
                let mut it = coords[m..].iter().copied();
                Field::So(SkewMatrix::from_upper_fn(n, |_, _| it.next().unwrap()))
            }
            ModelKind::EN => Field::Euclid(DVector::from_column_slice(&coords[m..])),
            ModelKind::SoN => Field::Absent,
        };
        Ok(Self { momentum, field })
    }

    /// The unit tangent along flat coordinate `idx`.
    pub fn basis_coord(kind: ModelKind, n: usize, idx: usize) -> Self {
        let mut coords = vec![0.0; Self::coord_count(kind, n)];
        coords[idx] = 1.0;
        Self::from_coords(kind, n, &coords).unwrap()
    }

    /// Entrywise uniform sample in [-1, 1].
    pub fn random(kind: ModelKind, n: usize, rng: &mut impl Rng) -> Self {
        let count = Self::coord_count(kind, n);
        let coords: Vec<f64> = (0..count).map(|_| rng.random_range(-1.0..1.0)).collect();
        Self::from_coords(kind, n, &coords).unwrap()
    }

    /// Entrywise sample on the dyadic grid k/64, k in [-64, 64]: exactly
    /// representable, so small polynomial expressions evaluate without
    /// rounding and structure tests can assert bitwise equality.
    pub fn random_dyadic(kind: ModelKind, n: usize, rng: &mut impl Rng) -> Self {
        let count = Self::coord_count(kind, n);
        let coords: Vec<f64> = (0..count)
            .map(|_| rng.random_range(-64i32..=64) as f64 / 64.0)
            .collect();
        Self::from_coords(kind, n, &coords).unwrap()
    }
}
