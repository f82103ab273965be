//! Exact integer and rational linear algebra in rank 2 and 3.
//!
//! Everything downstream (multiplicities, support forms, barycentric
//! coordinates, Hilbert bases) reduces to the handful of primitives in this
//! module. All scalars are arbitrary precision; there is no floating point
//! anywhere in the crate.

use num_bigint::BigInt;
use num_integer::Integer as _;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::fmt;
use thiserror::Error;

/// Arbitrary-precision signed integer used for all lattice coordinates.
pub type Int = BigInt;
/// Exact fraction of two [`Int`]s, always kept in lowest terms with a
/// positive denominator.
pub type Rat = BigRational;

/// Convenience constructor for an [`Int`] from a machine integer.
pub fn int(v: i64) -> Int {
    Int::from(v)
}

/// Convenience constructor for an exact fraction `n/d`.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(Int::from(n), Int::from(d))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("unsupported dimension {0} (only 1, 2 and 3 are handled)")]
    UnsupportedDimension(usize),
    #[error("inconsistent row length: expected {expected}, got {got}")]
    RaggedRows { expected: usize, got: usize },
    #[error("zero vector cannot be primitivized")]
    ZeroVector,
    #[error("matrix is singular")]
    Singular,
    #[error("matrix does not have full rank {0}")]
    RankDeficient(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// An integer vector in a rank-2 or rank-3 lattice.
///
/// Comparison is lexicographic on the coordinates, which is the canonical
/// order used everywhere a deterministic ordering is needed.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticeVector {
    coords: Vec<Int>,
}

impl fmt::Debug for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl LatticeVector {
    pub fn new(coords: Vec<Int>) -> Self {
        Self { coords }
    }

    pub fn from_i64(coords: &[i64]) -> Self {
        Self {
            coords: coords.iter().map(|&c| Int::from(c)).collect(),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            coords: vec![Int::zero(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Int] {
        &self.coords
    }

    pub fn get(&self, i: usize) -> &Int {
        &self.coords[i]
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    /// Positive gcd of all coordinates; zero only for the zero vector.
    pub fn content(&self) -> Int {
        self.coords
            .iter()
            .fold(Int::zero(), |acc, c| acc.gcd(c))
    }

    /// `true` once the coordinates have gcd 1.
    pub fn is_primitive(&self) -> bool {
        self.content().is_one()
    }

    pub fn dot(&self, other: &Self) -> Int {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Cross product of two rank-3 vectors.
    pub fn cross(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), 3);
        assert_eq!(other.dim(), 3);
        let (a, b) = (&self.coords, &other.coords);
        Self::new(vec![
            &a[1] * &b[2] - &a[2] * &b[1],
            &a[2] * &b[0] - &a[0] * &b[2],
            &a[0] * &b[1] - &a[1] * &b[0],
        ])
    }

    pub fn neg(&self) -> Self {
        Self::new(self.coords.iter().map(|c| -c).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Self::new(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Self::new(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn scale(&self, k: &Int) -> Self {
        Self::new(self.coords.iter().map(|c| c * k).collect())
    }
}

/// Divide a nonzero vector by the gcd of its coordinates.
///
/// The direction is preserved: the gcd is taken positive.
pub fn primitivize(v: &LatticeVector) -> Result<LatticeVector, LinalgError> {
    if v.is_zero() {
        return Err(LinalgError::ZeroVector);
    }
    let g = v.content();
    if g.is_one() {
        return Ok(v.clone());
    }
    Ok(LatticeVector::new(
        v.coords.iter().map(|c| c / &g).collect(),
    ))
}

/// A small dense integer matrix, stored as a list of rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    rows: Vec<LatticeVector>,
}

impl IntMatrix {
    pub fn from_rows(rows: Vec<LatticeVector>) -> Result<Self, LinalgError> {
        if let Some(first) = rows.first() {
            let expected = first.dim();
            for r in &rows {
                if r.dim() != expected {
                    return Err(LinalgError::RaggedRows {
                        expected,
                        got: r.dim(),
                    });
                }
            }
        }
        Ok(Self { rows })
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        Self {
            rows: rows.iter().map(|r| LatticeVector::from_i64(r)).collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| {
                let mut c = vec![Int::zero(); n];
                c[i] = Int::one();
                LatticeVector::new(c)
            })
            .collect();
        Self { rows }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.rows.first().map_or(0, LatticeVector::dim)
    }

    pub fn rows(&self) -> &[LatticeVector] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &LatticeVector {
        &self.rows[i]
    }

    pub fn entry(&self, i: usize, j: usize) -> &Int {
        self.rows[i].get(j)
    }

    /// Matrix-vector product over the integers.
    pub fn mul_vec(&self, v: &LatticeVector) -> LatticeVector {
        LatticeVector::new(self.rows.iter().map(|r| r.dot(v)).collect())
    }
}

/// Exact determinant by direct cofactor expansion (n <= 3).
pub fn determinant(m: &IntMatrix) -> Result<Int, LinalgError> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(LinalgError::NonSquare {
            rows: n,
            cols: m.ncols(),
        });
    }
    let e = |i: usize, j: usize| m.entry(i, j);
    match n {
        1 => Ok(e(0, 0).clone()),
        2 => Ok(e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0)),
        3 => {
            let m00 = e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1);
            let m01 = e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0);
            let m02 = e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0);
            Ok(e(0, 0) * m00 - e(0, 1) * m01 + e(0, 2) * m02)
        }
        _ => Err(LinalgError::UnsupportedDimension(n)),
    }
}

/// Adjugate matrix, so that `m * adjugate(m) = det(m) * I` (n <= 3).
pub fn adjugate(m: &IntMatrix) -> Result<IntMatrix, LinalgError> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(LinalgError::NonSquare {
            rows: n,
            cols: m.ncols(),
        });
    }
    let e = |i: usize, j: usize| m.entry(i, j);
    let rows = match n {
        1 => vec![LatticeVector::new(vec![Int::one()])],
        2 => vec![
            LatticeVector::new(vec![e(1, 1).clone(), -e(0, 1)]),
            LatticeVector::new(vec![-e(1, 0), e(0, 0).clone()]),
        ],
        3 => {
            // adj[i][j] = cofactor(j, i)
            let cof = |i: usize, j: usize| -> Int {
                let r: Vec<usize> = (0..3).filter(|&k| k != i).collect();
                let c: Vec<usize> = (0..3).filter(|&k| k != j).collect();
                let minor = e(r[0], c[0]) * e(r[1], c[1]) - e(r[0], c[1]) * e(r[1], c[0]);
                if (i + j) % 2 == 0 {
                    minor
                } else {
                    -minor
                }
            };
            (0..3)
                .map(|i| LatticeVector::new((0..3).map(|j| cof(j, i)).collect()))
                .collect()
        }
        _ => return Err(LinalgError::UnsupportedDimension(n)),
    };
    Ok(IntMatrix { rows })
}

/// Exact solution of `m * x = rhs` for square invertible `m`.
pub fn solve_rational(m: &IntMatrix, rhs: &[Rat]) -> Result<Vec<Rat>, LinalgError> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(LinalgError::NonSquare {
            rows: n,
            cols: m.ncols(),
        });
    }
    if rhs.len() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "rhs has length {}, expected {n}",
            rhs.len()
        )));
    }
    let det = determinant(m)?;
    if det.is_zero() {
        return Err(LinalgError::Singular);
    }
    let adj = adjugate(m)?;
    let det = Rat::from_integer(det);
    // x = adj(m) * rhs / det
    let x = (0..n)
        .map(|i| {
            let num: Rat = (0..n)
                .map(|j| Rat::from_integer(adj.entry(i, j).clone()) * &rhs[j])
                .sum();
            num / &det
        })
        .collect();
    Ok(x)
}

/// Gcd of all `k x k` minors of a `k x n` matrix of rank `k`.
///
/// This is the index of the sublattice spanned by the rows inside its
/// saturation, i.e. the multiplicity of the face they span.
pub fn maximal_minor_gcd(m: &IntMatrix) -> Result<Int, LinalgError> {
    let k = m.nrows();
    let n = m.ncols();
    if k == 0 || k > n || k > 3 {
        return Err(LinalgError::DimensionMismatch(format!(
            "expected a k x n matrix with 0 < k <= n <= 3, got {k} x {n}"
        )));
    }
    let mut g = Int::zero();
    for cols in column_subsets(n, k) {
        let sub = IntMatrix {
            rows: m
                .rows
                .iter()
                .map(|r| LatticeVector::new(cols.iter().map(|&c| r.get(c).clone()).collect()))
                .collect(),
        };
        g = g.gcd(&determinant(&sub)?);
    }
    if g.is_zero() {
        return Err(LinalgError::RankDeficient(k));
    }
    Ok(g)
}

fn column_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn go(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..n {
            current.push(i);
            go(i + 1, n, k, current, out);
            current.pop();
        }
    }
    go(0, n, k, &mut current, &mut out);
    out
}
