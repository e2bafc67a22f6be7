//! Atom weights from boundary values of the holomorphic extension.
//!
//! For a Cauchy term `w/(r − z)` the imaginary part at `t + iε` is the
//! Poisson kernel `w·ε/((t − r)² + ε²)`, whose integral over a window around
//! `r` tends to `π·w` as `ε → 0`.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use super::MeasureError;
use crate::funexpr::FunctionExpr;

const ABS_TOL: f64 = 1e-10;
const MAX_DEPTH: u32 = 60;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonRecovery {
    /// `(ε, weight estimate)` in the order of the input list.
    pub per_eps: Vec<(f64, f64)>,
    /// Two-point Richardson extrapolation over the two smallest `ε`.
    pub weight: f64,
}

fn simpson<F>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64, MeasureError>
where
    F: Fn(f64) -> Result<f64, MeasureError>,
{
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let h = b - a;
    let left = h / 12.0 * (fa + 4.0 * flm + fm);
    let right = h / 12.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(MeasureError::QuadratureFailure(format!("no convergence on [{a}, {b}]")));
    }
    Ok(simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
        + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
}

fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64, MeasureError>
where
    F: Fn(f64) -> Result<f64, MeasureError>,
{
    let (fa, fb) = (f(a)?, f(b)?);
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

/// Estimate the mass of the atom at `r` from `Im f(t + iε)` over `window`.
///
/// Atoms right of the domain contribute `w/(r − z)` and left ones `w/(z − r)`,
/// so the sign is chosen from the side of `r`.
pub fn recover_atom_weight(
    f: &FunctionExpr,
    r: f64,
    window: (f64, f64),
    eps_list: &[f64],
) -> Result<PoissonRecovery, MeasureError> {
    let (lo, hi) = window;
    if eps_list.len() < 2 || eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(MeasureError::QuadratureFailure("need at least two positive ε".into()));
    }
    if !(lo < r && r < hi) {
        return Err(MeasureError::QuadratureFailure(format!("window ({lo}, {hi}) does not contain {r}")));
    }
    let max_eps = eps_list.iter().cloned().fold(0.0, f64::max);
    let gap = (r - lo).min(hi - r);
    if gap < 10.0 * max_eps {
        return Err(MeasureError::WindowContainsPole { r, gap });
    }
    let sign = if r <= f.domain().lo() { -1.0 } else { 1.0 };

    let mut per_eps = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let g = |t: f64| {
            f.eval_complex(Complex::new(t, eps))
                .map(|v| sign * v.im / std::f64::consts::PI)
                .map_err(|e| MeasureError::QuadratureFailure(e.to_string()))
        };
        let w = adaptive_simpson(&g, lo, r, ABS_TOL / 2.0)? + adaptive_simpson(&g, r, hi, ABS_TOL / 2.0)?;
        per_eps.push((eps, w));
    }
    let mut sorted = per_eps.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let ((e1, w1), (e2, w2)) = (sorted[0], sorted[1]);
    let weight = (e2 * w1 - e1 * w2) / (e2 - e1);
    Ok(PoissonRecovery { per_eps, weight })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funexpr::Interval;
    use crate::measures::{Atom, DiscreteMeasure, SocRep};

    const EPS: [f64; 3] = [1e-2, 1e-3, 1e-4];

    fn soc(atoms: &[(f64, f64)]) -> FunctionExpr {
        let mu = DiscreteMeasure::new(atoms.iter().map(|&(r, w)| Atom::new(r, w)).collect()).unwrap();
        FunctionExpr::measure_soc(SocRep::new(0.0, mu, DiscreteMeasure::empty(), Interval::open(0.0, 1.0)).unwrap())
    }

    #[test]
    fn single_atom_closed_form() {
        let rec = recover_atom_weight(&soc(&[(2.0, 1.0)]), 2.0, (1.5, 2.5), &EPS).unwrap();
        for &(eps, w) in &rec.per_eps {
            let exact = 2.0 / std::f64::consts::PI * (0.5 / eps).atan();
            assert!((w - exact).abs() < 1e-8, "{eps}: {w} vs {exact}");
        }
        assert!((rec.weight - 1.0).abs() < 1e-2);
        let errs: Vec<f64> = rec.per_eps.iter().map(|(_, w)| (w - 1.0).abs()).collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2]);
    }

    #[test]
    fn second_atom() {
        let rec = recover_atom_weight(&soc(&[(2.0, 1.0), (5.0, 3.0)]), 5.0, (4.0, 6.0), &EPS).unwrap();
        assert!((rec.weight - 3.0).abs() < 3e-2);
    }

    #[test]
    fn constant_has_no_mass() {
        let rec = recover_atom_weight(&FunctionExpr::constant(5.0), 1.0, (0.0, 2.0), &EPS).unwrap();
        assert_eq!(rec.weight, 0.0);
    }

    #[test]
    fn left_atom_sign() {
        let mu = DiscreteMeasure::new(vec![Atom::new(-1.0, 2.0)]).unwrap();
        let f = FunctionExpr::measure_soc(SocRep::new(0.0, DiscreteMeasure::empty(), mu, Interval::positive()).unwrap());
        let rec = recover_atom_weight(&f, -1.0, (-1.5, -0.5), &EPS).unwrap();
        assert!((rec.weight - 2.0).abs() < 2e-2);
    }

    #[test]
    fn window_too_close() {
        assert!(matches!(
            recover_atom_weight(&soc(&[(2.0, 1.0)]), 2.0, (1.95, 2.5), &EPS),
            Err(MeasureError::WindowContainsPole { .. })
        ));
    }
}
