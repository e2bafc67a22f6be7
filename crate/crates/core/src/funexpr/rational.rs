//! Exact rational functions over ℚ, used to track the degree of rational
//! pipeline stages and to detect identically-zero stages without rounding.
//!
//! Floating-point coefficients are converted exactly (every finite `f64` is a
//! dyadic rational), so cancellations happen exactly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use super::{FunctionExpr, NodeKind};
use crate::measures::DiscreteMeasure;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RationalError {
    #[error("node `{0}` is not a rational function")]
    NotRational(&'static str),
    #[error("non-finite coefficient {0}")]
    NonFinite(f64),
    #[error("pole at {0} where a finite value was required")]
    Pole(f64),
}

type Q = BigRational;

fn q(x: f64) -> Result<Q, RationalError> {
    BigRational::from_float(x).ok_or(RationalError::NonFinite(x))
}

/// Polynomial with coefficients in increasing degree; no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Poly(Vec<Q>);

impl Poly {
    fn new(mut c: Vec<Q>) -> Self {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        Poly(c)
    }

    fn zero() -> Self {
        Poly(Vec::new())
    }

    fn constant(c: Q) -> Self {
        Poly::new(vec![c])
    }

    /// `x − a`
    fn linear_root(a: Q) -> Self {
        Poly::new(vec![-a, Q::one()])
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree, with the zero polynomial reported as 0.
    fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    fn lead(&self) -> Q {
        self.0.last().cloned().unwrap_or_else(Q::zero)
    }

    fn add(&self, o: &Poly) -> Poly {
        let n = self.0.len().max(o.0.len());
        let z = Q::zero();
        Poly::new(
            (0..n)
                .map(|i| self.0.get(i).unwrap_or(&z) + o.0.get(i).unwrap_or(&z))
                .collect(),
        )
    }

    fn neg(&self) -> Poly {
        Poly(self.0.iter().map(|c| -c).collect())
    }

    fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.neg())
    }

    fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut c = vec![Q::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly::new(c)
    }

    fn scale(&self, s: &Q) -> Poly {
        Poly::new(self.0.iter().map(|c| c * s).collect())
    }

    fn pow(&self, n: usize) -> Poly {
        let mut acc = Poly::constant(Q::one());
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    fn eval(&self, x: &Q) -> Q {
        self.0.iter().rev().fold(Q::zero(), |acc, c| acc * x + c)
    }

    /// Euclidean division.
    fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        let mut rem = self.0.clone();
        let dl = d.lead();
        let dd = d.degree();
        if self.0.len() < d.0.len() {
            return (Poly::zero(), self.clone());
        }
        let mut quot = vec![Q::zero(); self.0.len() - d.0.len() + 1];
        for k in (0..quot.len()).rev() {
            let coef = &rem[k + dd] / &dl;
            for (j, dc) in d.0.iter().enumerate() {
                rem[k + j] -= &coef * dc;
            }
            quot[k] = coef;
        }
        rem.truncate(dd);
        (Poly::new(quot), Poly::new(rem))
    }

    fn monic(&self) -> Poly {
        if self.is_zero() {
            return self.clone();
        }
        let l = self.lead();
        Poly::new(self.0.iter().map(|c| c / &l).collect())
    }

    fn gcd(&self, o: &Poly) -> Poly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }
}

/// Reduced rational function `num/den` with monic denominator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalFunction {
    num: Poly,
    den: Poly,
}

impl RationalFunction {
    fn from_polys(num: Poly, den: Poly) -> Result<Self, RationalError> {
        if den.is_zero() {
            return Err(RationalError::Pole(f64::NAN));
        }
        if num.is_zero() {
            return Ok(RationalFunction { num, den: Poly::constant(Q::one()) });
        }
        let g = num.gcd(&den);
        let (num, _) = num.div_rem(&g);
        let (den, _) = den.div_rem(&g);
        let l = den.lead();
        Ok(RationalFunction { num: num.scale(&l.recip()), den: den.scale(&l.recip()) })
    }

    pub fn constant(c: f64) -> Result<Self, RationalError> {
        Self::from_polys(Poly::constant(q(c)?), Poly::constant(Q::one()))
    }

    /// From coefficient lists in increasing degree.
    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self, RationalError> {
        let n = num.iter().map(|&c| q(c)).collect::<Result<Vec<_>, _>>()?;
        let d = den.iter().map(|&c| q(c)).collect::<Result<Vec<_>, _>>()?;
        Self::from_polys(Poly::new(n), Poly::new(d))
    }

    /// `max(deg num, deg den)` after cancellation; the zero function has degree 0.
    pub fn degree(&self) -> usize {
        self.num.degree().max(self.den.degree())
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn numerator_degree(&self) -> usize {
        self.num.degree()
    }

    pub fn denominator_degree(&self) -> usize {
        self.den.degree()
    }

    fn eval_q(&self, x: &Q) -> Option<Q> {
        let d = self.den.eval(x);
        if d.is_zero() {
            None
        } else {
            Some(self.num.eval(x) / d)
        }
    }

    /// Exact value at `x` rounded to `f64`, or `None` at a pole.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let x = q(x).ok()?;
        self.eval_q(&x).and_then(|v| v.to_f64())
    }

    pub fn add(&self, o: &Self) -> Result<Self, RationalError> {
        Self::from_polys(
            self.num.mul(&o.den).add(&o.num.mul(&self.den)),
            self.den.mul(&o.den),
        )
    }

    pub fn mul(&self, o: &Self) -> Result<Self, RationalError> {
        Self::from_polys(self.num.mul(&o.num), self.den.mul(&o.den))
    }

    pub fn neg(&self) -> Self {
        RationalFunction { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn recip(&self) -> Result<Self, RationalError> {
        Self::from_polys(self.den.clone(), self.num.clone())
    }

    fn add_const(&self, c: &Q) -> Result<Self, RationalError> {
        Self::from_polys(self.num.add(&self.den.scale(c)), self.den.clone())
    }

    /// `(f(x) − f(x0)) / (x − x0)`, exactly.
    pub fn diff_quotient(&self, x0: f64) -> Result<Self, RationalError> {
        let a = q(x0)?;
        let center = self.eval_q(&a).ok_or(RationalError::Pole(x0))?;
        let shifted = self.num.sub(&self.den.scale(&center));
        let (quot, rem) = shifted.div_rem(&Poly::linear_root(a));
        debug_assert!(rem.is_zero());
        Self::from_polys(quot, self.den.clone())
    }

    /// `f(x)·(x − x0) + c`
    pub fn mul_linear(&self, x0: f64, c: f64) -> Result<Self, RationalError> {
        let lin = Poly::linear_root(q(x0)?);
        Self::from_polys(self.num.mul(&lin), self.den.clone())?.add_const(&q(c)?)
    }

    /// `self ∘ inner`
    pub fn compose(&self, inner: &Self) -> Result<Self, RationalError> {
        let d = self.degree();
        // homogenise: p(P/Q) = Σ p_i P^i Q^(d-i) / Q^d
        let hom = |p: &Poly| {
            let mut acc = Poly::zero();
            for (i, c) in p.0.iter().enumerate() {
                let term = inner.num.pow(i).mul(&inner.den.pow(d - i)).scale(c);
                acc = acc.add(&term);
            }
            acc
        };
        Self::from_polys(hom(&self.num), hom(&self.den))
    }

    /// Numerator and denominator coefficients (increasing degree) as `f64`.
    pub fn coefficients(&self) -> (Vec<f64>, Vec<f64>) {
        let conv = |p: &Poly| p.0.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect();
        (conv(&self.num), conv(&self.den))
    }
}

fn int_power(n: i64) -> Result<RationalFunction, RationalError> {
    let x = Poly::new(vec![Q::zero(), Q::one()]);
    let p = x.pow(n.unsigned_abs() as usize);
    let one = Poly::constant(Q::one());
    if n >= 0 {
        RationalFunction::from_polys(p, one)
    } else {
        RationalFunction::from_polys(one, p)
    }
}

/// `Σ w / (r − x)` over the atoms.
fn stieltjes(mu: &DiscreteMeasure, sign: i32) -> Result<RationalFunction, RationalError> {
    let mut acc = RationalFunction::constant(0.0)?;
    for atom in mu.atoms() {
        let r = q(atom.r)?;
        let w = q(atom.w)?;
        // w / (r − x) = −w / (x − r)
        let term = RationalFunction::from_polys(
            Poly::constant(-w * BigRational::from_integer(BigInt::from(sign))),
            Poly::linear_root(r),
        )?;
        acc = acc.add(&term)?;
    }
    Ok(acc)
}

/// Exact rational form of an expression tree, when every node is rational.
pub fn to_rational(f: &FunctionExpr) -> Result<RationalFunction, RationalError> {
    match f.kind() {
        NodeKind::Constant(c) => RationalFunction::constant(*c),
        NodeKind::Affine { a, b } => RationalFunction::from_coeffs(&[*b, *a], &[1.0]),
        NodeKind::Power(alpha) => {
            if alpha.fract() == 0.0 && alpha.abs() <= 64.0 {
                int_power(*alpha as i64)
            } else {
                Err(RationalError::NotRational("power"))
            }
        }
        NodeKind::Reciprocal => int_power(-1),
        NodeKind::Catalog(e) => Err(RationalError::NotRational(e.name())),
        NodeKind::Quotient { num, den } => RationalFunction::from_coeffs(num, den),
        NodeKind::DiffQuot { child, x0, .. } => to_rational(child)?.diff_quotient(*x0),
        NodeKind::NegRecip { child, .. } => Ok(to_rational(child)?.recip()?.neg()),
        NodeKind::MulLinear { child, x0, c } => to_rational(child)?.mul_linear(*x0, *c),
        NodeKind::Compose { outer, inner } => to_rational(outer)?.compose(&to_rational(inner)?),
        NodeKind::MeasureOm(rep) => {
            // a x + b + Σ w/(r − x) − Σ w/(r − x0)
            let linear = RationalFunction::from_coeffs(&[rep.b(), rep.a()], &[1.0])?;
            let s = stieltjes(rep.mu(), 1)?;
            let at_x0 = s.eval_q(&q(rep.x0())?).ok_or(RationalError::Pole(rep.x0()))?;
            linear.add(&s)?.add_const(&-at_x0)
        }
        NodeKind::MeasureSoc(rep) => {
            let plus = stieltjes(rep.mu_plus(), 1)?;
            let minus = stieltjes(rep.mu_minus(), -1)?;
            plus.add(&minus)?.add_const(&q(rep.a())?)
        }
        NodeKind::MeasureOc(rep) => {
            // each integrand is ±1/(r − x) minus its first-order Taylor polynomial at x0
            let x0 = q(rep.x0())?;
            let mut acc = RationalFunction::from_coeffs(&[rep.c(), rep.b(), rep.a()], &[1.0])?;
            for (mu, sign) in [(rep.mu_plus(), 1i32), (rep.mu_minus(), -1i32)] {
                for atom in mu.atoms() {
                    let r = q(atom.r)?;
                    let w = q(atom.w)? * BigRational::from_integer(BigInt::from(sign));
                    let d = &r - &x0;
                    let base = RationalFunction::from_polys(Poly::constant(-w.clone()), Poly::linear_root(r))?;
                    let taylor = Poly::new(vec![
                        &w / &d - &w * &x0 / (&d * &d),
                        &w / (&d * &d),
                    ]);
                    acc = acc.add(&base)?.add(&RationalFunction::from_polys(taylor.neg(), Poly::constant(Q::one()))?)?;
                }
            }
            Ok(acc)
        }
        NodeKind::Restrict(child) | NodeKind::Closure { child, .. } => to_rational(child),
    }
}
