//! Dense skew-symmetric matrices and the operations the rest of the crate is
//! built on: wedge products, commutators, the invariant pairing, block
//! projections, and the three-dimensional hat/vee dictionary.
//!
//! Skew symmetry is exact by construction: every constructor writes the
//! strict upper triangle and mirrors it, so `m[(i,j)] == -m[(j,i)]` holds
//! bitwise, not just up to rounding.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector, Vector3};

/// A skew-symmetric n x n matrix with exact (bitwise) antisymmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix {
    m: DMatrix<f64>,
}

impl SkewMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            m: DMatrix::zeros(n, n),
        }
    }

    /// Build from a function evaluated on the strict upper triangle (i < j);
    /// the lower triangle is the mirrored negative.
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = -v;
            }
        }
        Self { m }
    }

    /// Build from sparse `(i, j, value)` triples with 0-based indices.
    /// Each pair may appear once; `(i, j, v)` with i > j is normalized.
    pub fn from_triples(n: usize, triples: &[(usize, usize, f64)]) -> Result<Self> {
        let mut m = DMatrix::zeros(n, n);
        let mut seen = vec![false; n * n];
        for &(i, j, v) in triples {
            if i >= n || j >= n {
                return Err(Error::Dimension(format!(
                    "entry ({i}, {j}) out of range for n = {n}"
                )));
            }
            if i == j {
                return Err(Error::Input(format!("diagonal entry ({i}, {i}) must be zero")));
            }
            let (a, b, v) = if i < j { (i, j, v) } else { (j, i, -v) };
            if seen[a * n + b] {
                return Err(Error::Input(format!("duplicate entry ({a}, {b})")));
            }
            seen[a * n + b] = true;
            m[(a, b)] = v;
            m[(b, a)] = -v;
        }
        Ok(Self { m })
    }

    /// The skew part (A - A^T)/2, mirrored exactly.
    pub fn skew_part(a: &DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "skew_part needs a square matrix");
        Self::from_upper_fn(a.nrows(), |i, j| (a[(i, j)] - a[(j, i)]) / 2.0)
    }

    /// Basis bivector E_i ^ E_j = wedge(e_i, e_j): +1 at (i, j), -1 at (j, i).
    pub fn basis(n: usize, i: usize, j: usize) -> Self {
        assert!(i < n && j < n && i != j, "basis indices out of range");
        Self::from_upper_fn(n, |a, b| {
            if (a, b) == (i, j) {
                1.0
            } else if (a, b) == (j, i) {
                -1.0
            } else {
                0.0
            }
        })
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn is_zero(&self) -> bool {
        self.m.iter().all(|&v| v == 0.0)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.m.norm()
    }

    /// Entrywise max absolute value.
    pub fn max_abs(&self) -> f64 {
        self.m.iter().fold(0.0, |acc, &v| acc.max(v.abs()))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_upper_fn(self.n(), |i, j| c * self.m[(i, j)])
    }

    /// self + c * other, dimension-checked.
    pub fn add_scaled(&self, c: f64, other: &SkewMatrix) -> Self {
        assert_eq!(self.n(), other.n(), "dimension mismatch in add_scaled");
        Self::from_upper_fn(self.n(), |i, j| self.m[(i, j)] + c * other.m[(i, j)])
    }

    /// Strict upper triangle in row-major order: the canonical coordinates.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(self.m[(i, j)]);
            }
        }
        out
    }

    /// Number of independent coordinates, n(n-1)/2.
    pub fn coord_count(n: usize) -> usize {
        n * (n - 1) / 2
    }
}

impl std::ops::Add for &SkewMatrix {
    type Output = SkewMatrix;
    fn add(self, rhs: &SkewMatrix) -> SkewMatrix {
        self.add_scaled(1.0, rhs)
    }
}

impl std::ops::Sub for &SkewMatrix {
    type Output = SkewMatrix;
    fn sub(self, rhs: &SkewMatrix) -> SkewMatrix {
        self.add_scaled(-1.0, rhs)
    }
}

impl std::ops::Neg for &SkewMatrix {
    type Output = SkewMatrix;
    fn neg(self) -> SkewMatrix {
        self.scale(-1.0)
    }
}

/// Wedge of two vectors: (u ^ v)_ij = u_i v_j - u_j v_i.
///
/// Note the orientation this fixes in three dimensions:
/// `wedge(e1, e2) == -hat3(e3)`, equivalently `u ^ v == hat3(v x u)`.
pub fn wedge(u: &DVector<f64>, v: &DVector<f64>) -> SkewMatrix {
    assert_eq!(u.len(), v.len(), "wedge needs equal-length vectors");
    SkewMatrix::from_upper_fn(u.len(), |i, j| u[i] * v[j] - u[j] * v[i])
}

/// Matrix commutator [a, b] = ab - ba, skew by construction.
pub fn commutator(a: &SkewMatrix, b: &SkewMatrix) -> SkewMatrix {
    assert_eq!(a.n(), b.n(), "dimension mismatch in commutator");
    let p = a.as_matrix() * b.as_matrix();
    // (ab)_ji == (ba)_ij holds exactly for skew inputs, so mirroring the
    // upper triangle of ab - ba loses nothing.
    SkewMatrix::from_upper_fn(a.n(), |i, j| p[(i, j)] - p[(j, i)])
}

/// Invariant pairing <a, b> = -1/2 tr(ab) = sum_{i<j} a_ij b_ij.
///
/// Positive definite on skew matrices; unit basis bivectors are orthonormal.
pub fn pair(a: &SkewMatrix, b: &SkewMatrix) -> f64 {
    assert_eq!(a.n(), b.n(), "dimension mismatch in pairing");
    let n = a.n();
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            acc += a.entry(i, j) * b.entry(i, j);
        }
    }
    acc
}

/// A block-diagonal symmetry pattern: consecutive index blocks with pairwise
/// distinct per-block values. Encodes both mass tensors J = diag(a_1 Id_{l_1},
/// ..., a_p Id_{l_p}) and the subalgebra so(l_1) + ... + so(l_p) they fix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryPattern {
    lengths: Vec<usize>,
    values: Vec<f64>,
}

impl SymmetryPattern {
    pub fn new(lengths: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if lengths.is_empty() || lengths.len() != values.len() {
            return Err(Error::Input(
                "pattern needs matching, non-empty block lengths and values".into(),
            ));
        }
        if lengths.contains(&0) {
            return Err(Error::Input("pattern block lengths must be positive".into()));
        }
        for a in 0..values.len() {
            for b in (a + 1)..values.len() {
                if values[a] == values[b] {
                    return Err(Error::Input(format!(
                        "pattern block values must be pairwise distinct (blocks {a} and {b} share {})",
                        values[a]
                    )));
                }
            }
        }
        Ok(Self { lengths, values })
    }

    /// Group a full diagonal into maximal runs of equal values.
    /// Fails if equal values reappear in separate runs (blocks must be contiguous).
    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::Input("empty diagonal".into()));
        }
        let mut lengths = Vec::new();
        let mut values = Vec::new();
        for &v in diag {
            if values.last() == Some(&v) {
                *lengths.last_mut().unwrap() += 1;
            } else {
                values.push(v);
                lengths.push(1);
            }
        }
        Self::new(lengths, values)
    }

    pub fn n(&self) -> usize {
        self.lengths.iter().sum()
    }

    pub fn block_count(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Index of the block containing coordinate i.
    pub fn block_of(&self, i: usize) -> usize {
        let mut acc = 0;
        for (b, &l) in self.lengths.iter().enumerate() {
            acc += l;
            if i < acc {
                return b;
            }
        }
        panic!("index {i} out of range for pattern of size {}", self.n());
    }

    /// The diagonal value at coordinate i.
    pub fn value_of(&self, i: usize) -> f64 {
        self.values[self.block_of(i)]
    }

    /// Expand to the full diagonal vector.
    pub fn diagonal(&self) -> DVector<f64> {
        let n = self.n();
        DVector::from_fn(n, |i, _| self.value_of(i))
    }

    /// Whether coordinates i and j lie in the same block.
    pub fn same_block(&self, i: usize, j: usize) -> bool {
        self.block_of(i) == self.block_of(j)
    }

    /// Half-open index ranges of the blocks.
    pub fn block_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::with_capacity(self.lengths.len());
        let mut start = 0;
        for &l in &self.lengths {
            out.push(start..start + l);
            start += l;
        }
        out
    }
}

/// Orthogonal projection onto the block subalgebra: zero outside the
/// diagonal blocks, identity inside. Idempotent and self-adjoint for `pair`.
pub fn project(pattern: &SymmetryPattern, x: &SkewMatrix) -> SkewMatrix {
    assert_eq!(pattern.n(), x.n(), "pattern size must match matrix size");
    SkewMatrix::from_upper_fn(x.n(), |i, j| {
        if pattern.same_block(i, j) {
            x.entry(i, j)
        } else {
            0.0
        }
    })
}

/// hat3(v) is the unique skew matrix with hat3(v) * x = v x (cross product).
pub fn hat3(v: &DVector<f64>) -> Result<SkewMatrix> {
    if v.len() != 3 {
        return Err(Error::Dimension(format!(
            "hat3 needs a 3-vector, got length {}",
            v.len()
        )));
    }
    Ok(hat3_fixed(&Vector3::new(v[0], v[1], v[2])))
}

pub(crate) fn hat3_fixed(v: &Vector3<f64>) -> SkewMatrix {
    SkewMatrix::from_upper_fn(3, |i, j| match (i, j) {
        (0, 1) => -v[2],
        (0, 2) => v[1],
        (1, 2) => -v[0],
        _ => unreachable!(),
    })
}

/// Inverse of hat3; errors on any size other than 3 x 3.
pub fn vee3(x: &SkewMatrix) -> Result<DVector<f64>> {
    if x.n() != 3 {
        return Err(Error::Dimension(format!(
            "vee3 needs a 3 x 3 matrix, got {0} x {0}",
            x.n()
        )));
    }
    Ok(DVector::from_column_slice(&[
        -x.entry(1, 2),
        x.entry(0, 2),
        -x.entry(0, 1),
    ]))
}
