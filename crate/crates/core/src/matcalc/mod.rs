//! Finite Hermitian matrices: spectral functional calculus, compressions to
//! the range of a projection, Schur complements and seeded random instances.

mod random;

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::funexpr::{FunctionExpr, Interval};

pub use random::{rand_hermitian, rand_ordered_pair, rand_projection, rand_unitary, trial_rng, MAX_PAIR_ATTEMPTS};

pub type C64 = Complex<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("columns are not orthonormal (deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("rank {rank} is not in 1..={n}")]
    InvalidRank { rank: usize, n: usize },
    #[error("eigenvalue {eigenvalue} lies outside {domain}")]
    SpectrumOutsideDomain { eigenvalue: f64, domain: Interval },
    #[error("scalar evaluation failed: {0}")]
    Eval(String),
    #[error("complementary block is not safely invertible (min eigenvalue {min_eig:e})")]
    SingularBlock { min_eig: f64 },
    #[error("no admissible ordered pair after {attempts} attempts")]
    RetryExhausted { attempts: usize },
}

/// Ascending eigenvalues with the matching orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

/// Complex Hermitian matrix, stored so that `m[i][j] == conj(m[j][i])` exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(DMatrix<C64>);

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl HermitianMatrix {
    /// Accepts matrices that are Hermitian up to rounding and mirrors the upper
    /// triangle onto the lower one.
    pub fn new(m: DMatrix<C64>) -> Result<Self, MatError> {
        if m.nrows() != m.ncols() {
            return Err(MatError::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        let deviation = max_abs(&(&m - m.adjoint()));
        if deviation > 1e-10 * (1.0 + max_abs(&m)) {
            return Err(MatError::NotHermitian { deviation });
        }
        Ok(Self::symmetrized(m))
    }

    fn symmetrized(mut m: DMatrix<C64>) -> Self {
        let n = m.nrows();
        for i in 0..n {
            m[(i, i)].im = 0.0;
            for j in i + 1..n {
                m[(j, i)] = m[(i, j)].conj();
            }
        }
        HermitianMatrix(m)
    }

    pub fn from_real(rows: &[Vec<f64>]) -> Result<Self, MatError> {
        let n = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(MatError::NotSquare { rows: n, cols: r.len() });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j], 0.0)))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        HermitianMatrix(DMatrix::from_fn(n, n, |i, j| if i == j { C64::new(values[i], 0.0) } else { C64::new(0.0, 0.0) }))
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix(DMatrix::zeros(n, n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    /// All off-diagonal entries are exactly zero.
    pub fn is_diagonal(&self) -> bool {
        let n = self.n();
        (0..n).all(|i| (0..n).all(|j| i == j || self.0[(i, j)] == C64::new(0.0, 0.0)))
    }

    pub fn eigen(&self) -> Eigen {
        let se = self.0.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..self.n()).collect();
        order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
        let values = order.iter().map(|&k| se.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(self.n(), self.n(), |i, j| se.eigenvectors[(i, order[j])]);
        Eigen { values, vectors }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigen().values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Operator norm, `max |λ|`.
    pub fn norm(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `U·diag(values)·U*`
    pub fn from_spectrum(vectors: &DMatrix<C64>, values: &[f64]) -> Self {
        let d = DMatrix::from_diagonal(&DVector::from_iterator(values.len(), values.iter().map(|v| C64::new(*v, 0.0))));
        Self::symmetrized(vectors * d * vectors.adjoint())
    }

    /// `U·self·U*`
    pub fn conjugate(&self, u: &DMatrix<C64>) -> Self {
        Self::symmetrized(u * &self.0 * u.adjoint())
    }

    pub fn add(&self, o: &Self) -> Self {
        HermitianMatrix(&self.0 + &o.0)
    }

    pub fn sub(&self, o: &Self) -> Self {
        HermitianMatrix(&self.0 - &o.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianMatrix(&self.0 * C64::new(s, 0.0))
    }

    /// Inverse through the spectral decomposition; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        let e = self.eigen();
        if e.values.iter().any(|v| *v == 0.0) {
            return None;
        }
        let inv: Vec<f64> = e.values.iter().map(|v| 1.0 / v).collect();
        Some(Self::from_spectrum(&e.vectors, &inv))
    }

    /// Largest entrywise deviation from `o`.
    pub fn max_diff(&self, o: &Self) -> f64 {
        max_abs(&(&self.0 - &o.0))
    }
}

impl Serialize for HermitianMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        matrix_rows(&self.0).serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let m = matrix_from_rows(Vec::<Vec<[f64; 2]>>::deserialize(d)?).map_err(serde::de::Error::custom)?;
        HermitianMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

fn matrix_rows(m: &DMatrix<C64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

fn matrix_from_rows(rows: Vec<Vec<[f64; 2]>>) -> Result<DMatrix<C64>, MatError> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if let Some(bad) = rows.iter().find(|row| row.len() != c) {
        return Err(MatError::DimensionMismatch(c, bad.len()));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

/// Orthogonal projection given by an orthonormal basis of its range.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    basis: DMatrix<C64>,
}

impl Projection {
    pub fn new(basis: DMatrix<C64>) -> Result<Self, MatError> {
        let k = basis.ncols();
        if k == 0 || k > basis.nrows() {
            return Err(MatError::InvalidRank { rank: k, n: basis.nrows() });
        }
        let gram = basis.adjoint() * &basis;
        let deviation = max_abs(&(gram - DMatrix::<C64>::identity(k, k)));
        if deviation > 1e-10 {
            return Err(MatError::NotOrthonormal { deviation });
        }
        Ok(Projection { basis })
    }

    /// Projection onto the span of the listed standard basis vectors.
    pub fn coordinate(n: usize, idx: &[usize]) -> Result<Self, MatError> {
        let mut basis = DMatrix::zeros(n, idx.len());
        for (col, &i) in idx.iter().enumerate() {
            if i >= n {
                return Err(MatError::DimensionMismatch(n, i));
            }
            basis[(i, col)] = C64::new(1.0, 0.0);
        }
        Self::new(basis)
    }

    pub fn n(&self) -> usize {
        self.basis.nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<C64> {
        &self.basis
    }

    /// The n×n matrix `V·V*`.
    pub fn matrix(&self) -> HermitianMatrix {
        HermitianMatrix::symmetrized(&self.basis * self.basis.adjoint())
    }

    /// Inflate a rank×rank matrix to `V·M·V*`.
    pub fn embed(&self, m: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix::symmetrized(&self.basis * &m.0 * self.basis.adjoint())
    }

    /// Projection onto the orthogonal complement, `None` when `p = 1`.
    pub fn complement(&self) -> Option<Projection> {
        let n = self.n();
        if self.rank() == n {
            return None;
        }
        let q = HermitianMatrix::identity(n).sub(&self.matrix());
        let e = q.eigen();
        let cols: Vec<usize> = (0..n).filter(|&j| e.values[j] > 0.5).collect();
        let basis = DMatrix::from_fn(n, cols.len(), |i, j| e.vectors[(i, cols[j])]);
        Projection::new(basis).ok()
    }
}

impl Serialize for Projection {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        matrix_rows(&self.basis).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Projection {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let m = matrix_from_rows(Vec::<Vec<[f64; 2]>>::deserialize(d)?).map_err(serde::de::Error::custom)?;
        Projection::new(m).map_err(serde::de::Error::custom)
    }
}

/// `f(h)` through the spectral decomposition of `h`.
///
/// Eigenvalues within `1e-12·(1 + ‖h‖)` of a closed endpoint are snapped onto
/// it; anything else outside the domain is an error.
pub fn apply_fn(f: &FunctionExpr, h: &HermitianMatrix) -> Result<HermitianMatrix, MatError> {
    // Diagonal input: evaluate entrywise, bypassing the eigensolver's rounding.
    if h.is_diagonal() {
        let d: Vec<f64> = (0..h.n()).map(|i| h.get(i, i).re).collect();
        return Ok(HermitianMatrix::diagonal(&map_spectrum(f, &d)?));
    }
    let e = h.eigen();
    Ok(HermitianMatrix::from_spectrum(&e.vectors, &map_spectrum(f, &e.values)?))
}

fn map_spectrum(f: &FunctionExpr, values: &[f64]) -> Result<Vec<f64>, MatError> {
    let domain = f.domain();
    let slack = 1e-12 * (1.0 + values.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let mut mapped = Vec::with_capacity(values.len());
    for &lam in values {
        let x = if domain.contains(lam) {
            lam
        } else if domain.lo_closed() && lam < domain.lo() && domain.lo() - lam <= slack {
            domain.lo()
        } else if domain.hi_closed() && lam > domain.hi() && lam - domain.hi() <= slack {
            domain.hi()
        } else {
            return Err(MatError::SpectrumOutsideDomain { eigenvalue: lam, domain });
        };
        mapped.push(f.eval_real(x).map_err(|err| MatError::Eval(err.to_string()))?);
    }
    Ok(mapped)
}

pub fn psd_min_eig(m: &HermitianMatrix) -> f64 {
    m.min_eigenvalue()
}

/// `min_eig ≥ −tol·(1 + ‖m‖)`
pub fn is_psd(m: &HermitianMatrix, tol: f64) -> bool {
    let e = m.eigenvalues();
    let norm = e.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    e.first().map_or(true, |&v| v >= -tol * (1.0 + norm))
}

/// The corner `V*·h·V` of `h` on the range of `p`.
pub fn compress(h: &HermitianMatrix, p: &Projection) -> Result<HermitianMatrix, MatError> {
    if h.n() != p.n() {
        return Err(MatError::DimensionMismatch(h.n(), p.n()));
    }
    Ok(HermitianMatrix::symmetrized(p.basis.adjoint() * &h.0 * &p.basis))
}

/// `a − b*·c⁻¹·b` on the range of `p`, where `a`, `b`, `c` are the blocks of
/// `k` relative to `p` and its complement.
pub fn schur_complement(k: &HermitianMatrix, p: &Projection) -> Result<HermitianMatrix, MatError> {
    let a = compress(k, p)?;
    let Some(q) = p.complement() else {
        return Ok(a);
    };
    let c = compress(k, &q)?;
    let ce = c.eigen();
    let min_eig = ce.values[0];
    if min_eig <= 1e-10 * (1.0 + k.norm()) {
        return Err(MatError::SingularBlock { min_eig });
    }
    let b = q.basis.adjoint() * &k.0 * &p.basis;
    let inv: Vec<f64> = ce.values.iter().map(|v| 1.0 / v).collect();
    let c_inv = HermitianMatrix::from_spectrum(&ce.vectors, &inv);
    let correction = b.adjoint() * &c_inv.0 * &b;
    Ok(HermitianMatrix::symmetrized(&a.0 - correction))
}
