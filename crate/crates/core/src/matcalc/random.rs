use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{HermitianMatrix, MatError, Projection, C64};
use crate::funexpr::Interval;

pub const MAX_PAIR_ATTEMPTS: usize = 100;

/// Generator for trial `index` under `seed`: one ChaCha stream per trial, so
/// trials can run in any order.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases
/// of `R`'s diagonal moved into `Q`.
pub fn rand_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let g = DMatrix::from_fn(n, n, |_, _| gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Sampling bounds: the window of `interval`, pulled in by `1e-6` of its width
/// at excluded endpoints.
fn sampling_bounds(interval: &Interval, window_len: f64) -> (f64, f64) {
    let w = interval.window(window_len);
    let pad = 1e-6 * w.width();
    let lo = if w.lo_closed() { w.lo() } else { w.lo() + pad };
    let hi = if w.hi_closed() { w.hi() } else { w.hi() - pad };
    (lo, hi)
}

/// Random Hermitian matrix with spectrum drawn uniformly inside `interval`
/// (clipped to a window of length `window_len` when unbounded).
pub fn rand_hermitian<R: Rng + ?Sized>(interval: &Interval, n: usize, window_len: f64, rng: &mut R) -> HermitianMatrix {
    let (lo, hi) = sampling_bounds(interval, window_len);
    let values: Vec<f64> = (0..n).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect();
    if n == 1 {
        return HermitianMatrix::diagonal(&values);
    }
    let u = rand_unitary(n, rng);
    HermitianMatrix::from_spectrum(&u, &values)
}

/// `(h1, h2)` with `h1 ≤ h2`, both spectra inside `interval`:
/// `h1 = h2 − s·g·g*` with `s` small enough to keep `λ_min(h1)` above the
/// sampling floor.
pub fn rand_ordered_pair<R: Rng + ?Sized>(
    interval: &Interval,
    n: usize,
    window_len: f64,
    rng: &mut R,
) -> Result<(HermitianMatrix, HermitianMatrix), MatError> {
    let (floor, _) = sampling_bounds(interval, window_len);
    for _ in 0..MAX_PAIR_ATTEMPTS {
        let h2 = rand_hermitian(interval, n, window_len, rng);
        let g = DVector::from_fn(n, |_, _| gaussian(rng));
        let room = h2.min_eigenvalue() - floor;
        let g2 = g.norm_squared();
        if !(room >= 0.0) || g2 == 0.0 {
            continue;
        }
        let s = rng.random::<f64>() * room / g2;
        let update = HermitianMatrix::new(&g * g.adjoint() * C64::new(s, 0.0))?;
        let h1 = h2.sub(&update);
        if h1.eigenvalues().iter().all(|v| interval.contains(*v)) {
            return Ok((h1, h2));
        }
    }
    Err(MatError::RetryExhausted { attempts: MAX_PAIR_ATTEMPTS })
}

/// Haar-random rank-`k` projection in dimension `n`.
pub fn rand_projection<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Projection, MatError> {
    if k == 0 || k > n {
        return Err(MatError::InvalidRank { rank: k, n });
    }
    if k == n {
        return Projection::coordinate(n, &(0..n).collect::<Vec<_>>());
    }
    let u = rand_unitary(n, rng);
    Projection::new(u.columns(0, k).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcalc::psd_min_eig;

    #[test]
    fn deterministic_given_seed() {
        let i = Interval::open(0.0, 1.0);
        let a = rand_hermitian(&i, 2, 20.0, &mut trial_rng(42, 0));
        let b = rand_hermitian(&i, 2, 20.0, &mut trial_rng(42, 0));
        assert_eq!(a, b);
        assert_ne!(a, rand_hermitian(&i, 2, 20.0, &mut trial_rng(42, 1)));
    }

    #[test]
    fn spectrum_inside_interval() {
        let i = Interval::open(0.0, 1.0);
        let h = rand_hermitian(&i, 4, 20.0, &mut trial_rng(7, 0));
        assert!(h.eigenvalues().iter().all(|v| 0.0 < *v && *v < 1.0));
        let narrow = Interval::closed(2.0, 2.0 + 1e-9);
        let h = rand_hermitian(&narrow, 1, 20.0, &mut trial_rng(1, 0));
        assert!(narrow.contains(h.get(0, 0).re));
    }

    #[test]
    fn ordered_pairs() {
        let i = Interval::open(0.0, 3.0);
        let mut rng = trial_rng(1, 0);
        for _ in 0..50 {
            let (h1, h2) = rand_ordered_pair(&i, 2, 20.0, &mut rng).unwrap();
            assert!(psd_min_eig(&h2.sub(&h1)) >= -1e-14);
            assert!(h1.eigenvalues().iter().chain(&h2.eigenvalues()).all(|v| i.contains(*v)));
        }
    }

    #[test]
    fn unitary_is_unitary() {
        let u = rand_unitary(5, &mut trial_rng(9, 3));
        let err = (u.adjoint() * &u - DMatrix::<C64>::identity(5, 5)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-13);
    }

    #[test]
    fn projections() {
        let full = rand_projection(3, 3, &mut trial_rng(0, 0)).unwrap();
        assert_eq!(full.matrix(), HermitianMatrix::identity(3));
        let p = rand_projection(2, 1, &mut trial_rng(3, 0)).unwrap();
        let m = p.matrix();
        let sq = HermitianMatrix::new(m.matrix() * m.matrix()).unwrap();
        assert!(sq.max_diff(&m) < 1e-12);
        let p = rand_projection(5, 2, &mut trial_rng(5, 0)).unwrap();
        let tr: f64 = (0..5).map(|i| p.matrix().get(i, i).re).sum();
        assert!((tr - 2.0).abs() < 1e-12);
        assert!(rand_projection(2, 3, &mut trial_rng(0, 0)).is_err());
    }
}
