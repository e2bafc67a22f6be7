//! The individual matrix inequalities. Each gap function returns the smallest
//! eigenvalue of the matrix that must be positive semidefinite, together with
//! the operand scale used by the relative tolerance rule.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use super::ClassifyError;
use crate::funexpr::FunctionExpr;
use crate::matcalc::{apply_fn, compress, HermitianMatrix, Projection};

/// Smallest eigenvalue of a gap matrix plus the norm it should be measured
/// against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gap {
    pub min_eig: f64,
    pub scale: f64,
}

impl Gap {
    /// `min_eig ≥ −tol·(1 + scale)`
    pub fn passes(&self, tol: f64) -> bool {
        self.min_eig >= -tol * (1.0 + self.scale)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// `h1 ≤ h2 ⟹ f(h1) ≤ f(h2)`
    Monotone,
    /// `f(t·h1 + (1−t)·h2) ≤ t·f(h1) + (1−t)·f(h2)`
    Jensen,
    /// `f(corner of h) ≤ corner of f(h)`
    Davis,
    /// `embed(f(corner of h)) ≤ f(h)`
    Strong,
    /// Divided-difference matrix at finitely many nodes.
    Loewner,
    /// `Im f(z) ≥ 0` on the upper half-plane.
    HalfPlane,
}

pub fn monotone_gap(f: &FunctionExpr, h1: &HermitianMatrix, h2: &HermitianMatrix) -> Result<Gap, ClassifyError> {
    let (a, b) = (apply_fn(f, h1)?, apply_fn(f, h2)?);
    let d = b.sub(&a);
    Ok(Gap { min_eig: d.min_eigenvalue(), scale: a.norm().max(b.norm()) })
}

pub fn jensen_gap(f: &FunctionExpr, h1: &HermitianMatrix, h2: &HermitianMatrix, t: f64) -> Result<Gap, ClassifyError> {
    let (a, b) = (apply_fn(f, h1)?, apply_fn(f, h2)?);
    let mid = apply_fn(f, &h1.scale(t).add(&h2.scale(1.0 - t)))?;
    let d = a.scale(t).add(&b.scale(1.0 - t)).sub(&mid);
    Ok(Gap { min_eig: d.min_eigenvalue(), scale: a.norm().max(b.norm()).max(mid.norm()) })
}

/// Corner reading of `p·f(php)·p ≤ p·f(h)·p`.
pub fn davis_gap(f: &FunctionExpr, h: &HermitianMatrix, p: &Projection) -> Result<Gap, ClassifyError> {
    let fh = apply_fn(f, h)?;
    let lhs = apply_fn(f, &compress(h, p)?)?;
    let rhs = compress(&fh, p)?;
    let d = rhs.sub(&lhs);
    Ok(Gap { min_eig: d.min_eigenvalue(), scale: fh.norm().max(lhs.norm()) })
}

/// Corner reading of `p·f(php)·p ≤ f(h)`.
pub fn strong_gap(f: &FunctionExpr, h: &HermitianMatrix, p: &Projection) -> Result<Gap, ClassifyError> {
    let fh = apply_fn(f, h)?;
    let corner = apply_fn(f, &compress(h, p)?)?;
    let d = fh.sub(&p.embed(&corner));
    Ok(Gap { min_eig: d.min_eigenvalue(), scale: fh.norm().max(corner.norm()) })
}

/// Divided differences `(f(xi) − f(xj))/(xi − xj)` with `f′(xi)` on the
/// diagonal.
pub fn loewner_matrix(f: &FunctionExpr, nodes: &[f64]) -> Result<HermitianMatrix, ClassifyError> {
    for (i, a) in nodes.iter().enumerate() {
        if nodes[..i].contains(a) {
            return Err(ClassifyError::DuplicateNodes(*a));
        }
        if !f.domain().is_interior(*a) {
            return Err(ClassifyError::NodeOutsideDomain(*a));
        }
    }
    let vals = nodes.iter().map(|&x| f.eval_real(x)).collect::<Result<Vec<_>, _>>()?;
    let ders = nodes.iter().map(|&x| f.eval_deriv(x)).collect::<Result<Vec<_>, _>>()?;
    let n = nodes.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { ders[i] } else { (vals[i] - vals[j]) / (nodes[i] - nodes[j]) })
                .collect()
        })
        .collect();
    Ok(HermitianMatrix::from_real(&rows)?)
}

pub fn loewner_gap(f: &FunctionExpr, nodes: &[f64]) -> Result<Gap, ClassifyError> {
    let l = loewner_matrix(f, nodes)?;
    Ok(Gap { min_eig: l.min_eigenvalue(), scale: l.norm() })
}

/// `Im f(z)`; the half-plane rule uses an absolute floor, so the scale is 0.
pub fn halfplane_gap(f: &FunctionExpr, z: [f64; 2]) -> Result<Gap, ClassifyError> {
    let v = f.eval_complex(Complex::new(z[0], z[1]))?;
    if !v.im.is_finite() {
        return Err(ClassifyError::Eval(format!("non-finite value at {}+{}i", z[0], z[1])));
    }
    Ok(Gap { min_eig: v.im, scale: 0.0 })
}

/// Data of a violated inequality, sufficient to recompute it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub criterion: Criterion,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h1: Option<HermitianMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h2: Option<HermitianMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<HermitianMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Projection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<[f64; 2]>,
    pub min_eig: f64,
}

impl Witness {
    pub(crate) fn bare(criterion: Criterion, min_eig: f64) -> Self {
        Witness { criterion, h1: None, h2: None, h: None, p: None, t: None, nodes: None, z: None, min_eig }
    }

    /// Recompute the violated inequality for `f`.
    pub fn replay(&self, f: &FunctionExpr) -> Result<Gap, ClassifyError> {
        let need = |name: &'static str| ClassifyError::IncompleteWitness(name);
        match self.criterion {
            Criterion::Monotone => {
                monotone_gap(f, self.h1.as_ref().ok_or(need("h1"))?, self.h2.as_ref().ok_or(need("h2"))?)
            }
            Criterion::Jensen => jensen_gap(
                f,
                self.h1.as_ref().ok_or(need("h1"))?,
                self.h2.as_ref().ok_or(need("h2"))?,
                self.t.ok_or(need("t"))?,
            ),
            Criterion::Davis => davis_gap(f, self.h.as_ref().ok_or(need("h"))?, self.p.as_ref().ok_or(need("p"))?),
            Criterion::Strong => strong_gap(f, self.h.as_ref().ok_or(need("h"))?, self.p.as_ref().ok_or(need("p"))?),
            Criterion::Loewner => loewner_gap(f, self.nodes.as_deref().ok_or(need("nodes"))?),
            Criterion::HalfPlane => halfplane_gap(f, self.z.ok_or(need("z"))?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn real(rows: &[&[f64]]) -> HermitianMatrix {
        HermitianMatrix::from_real(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn square_is_not_monotone() {
        let sq = FunctionExpr::power(2.0);
        let g = monotone_gap(&sq, &real(&[&[1.0, 1.0], &[1.0, 1.0]]), &real(&[&[2.0, 1.0], &[1.0, 1.0]])).unwrap();
        // f(h2) − f(h1) = [[3,1],[1,0]]
        assert_relative_eq!(g.min_eig, 1.5 - 13f64.sqrt() / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn cube_violates_davis() {
        let p = Projection::coordinate(2, &[0]).unwrap();
        let g = davis_gap(&FunctionExpr::power(3.0), &real(&[&[-0.5, 0.5], &[0.5, 0.5]]), &p).unwrap();
        assert_relative_eq!(g.min_eig, -0.125, epsilon = 1e-14);
    }

    #[test]
    fn strong_examples() {
        let h = real(&[&[1.0, 0.9], &[0.9, 1.0]]);
        let p = Projection::coordinate(2, &[0]).unwrap();
        let recip = strong_gap(&FunctionExpr::reciprocal(), &h, &p).unwrap();
        assert!(recip.min_eig.abs() < 1e-10);
        let id = strong_gap(&FunctionExpr::identity(), &h, &p).unwrap();
        // [[0, 0.9], [0.9, 1]]
        assert_relative_eq!(id.min_eig, 0.5 - (0.25f64 + 0.81).sqrt(), epsilon = 1e-14);
        let one = strong_gap(&FunctionExpr::constant(1.0), &h, &p).unwrap();
        assert!(one.min_eig.abs() < 1e-15);
    }

    #[test]
    fn loewner_examples() {
        let id = loewner_matrix(&FunctionExpr::identity(), &[0.5, 1.0, 3.0]).unwrap();
        assert!(id.max_diff(&real(&[&[1.0; 3], &[1.0; 3], &[1.0; 3]])) < 1e-15);
        let sq = loewner_gap(&FunctionExpr::power(2.0), &[1.0, 2.0]).unwrap();
        assert_relative_eq!(sq.min_eig, 3.0 - 10f64.sqrt(), epsilon = 1e-14);
        let neg_inv = crate::transforms::neg_reciprocal(&FunctionExpr::identity().restrict(crate::funexpr::Interval::positive()).unwrap()).unwrap();
        let l = loewner_matrix(&neg_inv, &[1.0, 2.0]).unwrap();
        assert!(l.max_diff(&real(&[&[1.0, 0.5], &[0.5, 0.25]])) < 1e-14);
        assert!(l.min_eigenvalue().abs() < 1e-15);
        assert!(matches!(loewner_matrix(&FunctionExpr::identity(), &[1.0, 1.0]), Err(ClassifyError::DuplicateNodes(_))));
    }

    #[test]
    fn halfplane_square() {
        let g = halfplane_gap(&FunctionExpr::power(2.0), [-1.0, 1.0]).unwrap();
        assert_relative_eq!(g.min_eig, -2.0, epsilon = 1e-15);
    }
}
