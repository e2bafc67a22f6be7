//! Scalar functions on real intervals as immutable expression trees.
//!
//! Every function that flows through the transforms and pipelines is a
//! [`FunctionExpr`]. Trees are cheap to clone (shared nodes) and can be
//! evaluated on reals, on the upper half-plane through their holomorphic
//! extension, and differentiated to any order through Taylor jets.

mod catalog;
mod interval;
pub(crate) mod jet;
pub mod rational;
mod spec;

use std::fmt;
use std::sync::Arc;

use nalgebra::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::{OcRep, OmRep, SocRep};
use jet::Jet;

pub use catalog::CatalogFn;
pub use interval::{Interval, DEFAULT_WINDOW_LEN};
pub use spec::FunctionSpec;

/// Number of grid points used by sign scans and zero detection.
pub const SCAN_POINTS: usize = 1001;

/// Values at or below this magnitude count as zero in grid-based zero detection.
pub const ZERO_THRESHOLD: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("{x} is outside the domain {domain}")]
    Domain { x: f64, domain: Interval },
    #[error("negative base {base} for non-integer power {alpha}")]
    Branch { base: f64, alpha: f64 },
    #[error("node `{0}` has no holomorphic extension")]
    UnsupportedNode(&'static str),
    #[error("node `{0}` has no symbolic derivative rule")]
    NoSymbolicRule(&'static str),
    #[error("evaluation at {x} produced a non-finite value")]
    NonFinite { x: f64 },
    #[error("{x} is not an interior point of {domain}")]
    NotInterior { x: f64, domain: Interval },
    #[error("derived domain is empty")]
    EmptyDomain,
    #[error("invalid interval: {0}")]
    InvalidInterval(String),
    #[error("{requested} is not contained in {available}")]
    DomainMismatch { requested: Interval, available: Interval },
    #[error("denominator vanishes or changes sign near {x}")]
    Pole { x: f64 },
    #[error("complex evaluation requires Im z > 0, got Im z = {im}")]
    NotUpperHalfPlane { im: f64 },
    #[error("invalid measure representation: {0}")]
    Measure(String),
    #[error("transform failed: {0}")]
    Transform(String),
}

/// Which sign a function is expected to keep when it is fed to a reciprocal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    fn factor(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }
}

/// Result of a grid sign scan.
#[derive(Clone, Debug, PartialEq)]
pub enum ScanOutcome {
    /// Strict sign held at every grid point and endpoint limit.
    Ok,
    /// The function vanished (to [`ZERO_THRESHOLD`]) at every grid point.
    Zero,
    Violation { x: f64, value: f64 },
    EvalFailure(String),
}

#[derive(Clone, Debug)]
pub enum NodeKind {
    Constant(f64),
    Affine { a: f64, b: f64 },
    Power(f64),
    Reciprocal,
    Catalog(CatalogFn),
    /// Coefficients in increasing degree.
    Quotient { num: Vec<f64>, den: Vec<f64> },
    /// `(f(x) − f(x0)) / (x − x0)`; `center` caches `f(x0)` (or its endpoint limit).
    DiffQuot { child: FunctionExpr, x0: f64, center: f64 },
    /// `−1/f`. `valid` records whether the sign scan of the child succeeded.
    NegRecip { child: FunctionExpr, sign: Sign, valid: bool },
    /// `f(x)·(x − x0) + c`
    MulLinear { child: FunctionExpr, x0: f64, c: f64 },
    Compose { outer: FunctionExpr, inner: FunctionExpr },
    MeasureOm(OmRep),
    MeasureOc(OcRep),
    MeasureSoc(SocRep),
    Restrict(FunctionExpr),
    /// Child extended by its finite limits at otherwise excluded endpoints.
    Closure { child: FunctionExpr, lo_limit: Option<f64>, hi_limit: Option<f64> },
}

#[derive(Debug)]
struct Node {
    kind: NodeKind,
    domain: Interval,
}

/// Immutable expression tree for a real function on an interval.
#[derive(Clone, Debug)]
pub struct FunctionExpr(Arc<Node>);

fn is_integer(a: f64) -> bool {
    a.fract() == 0.0 && a.abs() < 1e9
}

fn power_domain(alpha: f64) -> Interval {
    if is_integer(alpha) {
        if alpha >= 0.0 {
            Interval::real_line()
        } else {
            Interval::positive()
        }
    } else if alpha > 0.0 {
        Interval::nonnegative()
    } else {
        Interval::positive()
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn horner_c(coeffs: &[f64], z: Complex<f64>) -> Complex<f64> {
    coeffs
        .iter()
        .rev()
        .fold(Complex::new(0.0, 0.0), |acc, c| acc * z + c)
}

fn horner_jet(coeffs: &[f64], u: &Jet) -> Jet {
    coeffs
        .iter()
        .rev()
        .fold(Jet::constant(0.0, u.order()), |acc, c| acc.mul(u).add_const(*c))
}

/// `(f(x) − f(x0))/(x − x0)` summed from the Taylor series of `f` at `x0`,
/// which avoids the cancellation of the plain quotient close to the center.
/// `None` when `x` is not close or the series has not visibly converged.
fn quotient_series(f: &FunctionExpr, x0: f64, x: f64) -> Option<f64> {
    const ORDER: usize = 12;
    let h = x - x0;
    if h.abs() > 1e-2 * (1.0 + x0.abs()) {
        return None;
    }
    let t = f.taylor(x0, ORDER).ok()?;
    if !t.iter().all(|c| c.is_finite()) {
        return None;
    }
    let v = horner(&t[1..], h);
    let tail = (t[ORDER] * h.powi(ORDER as i32 - 1)).abs() + (t[ORDER - 1] * h.powi(ORDER as i32 - 2)).abs();
    (v.is_finite() && tail <= 1e-17 * v.abs()).then_some(v)
}

impl FunctionExpr {
    fn from_parts(kind: NodeKind, domain: Interval) -> Self {
        FunctionExpr(Arc::new(Node { kind, domain }))
    }

    pub fn constant(c: f64) -> Self {
        Self::from_parts(NodeKind::Constant(c), Interval::real_line())
    }

    pub fn identity() -> Self {
        Self::affine(1.0, 0.0)
    }

    /// `a·x + b`
    pub fn affine(a: f64, b: f64) -> Self {
        Self::from_parts(NodeKind::Affine { a, b }, Interval::real_line())
    }

    /// `x^alpha` on its natural domain: the whole line for non-negative integer
    /// exponents, `[0, ∞)` for other positive exponents and `(0, ∞)` otherwise.
    pub fn power(alpha: f64) -> Self {
        Self::from_parts(NodeKind::Power(alpha), power_domain(alpha))
    }

    /// `1/x` on `(0, ∞)`; restrict to `(−∞, 0)` for the other branch.
    pub fn reciprocal() -> Self {
        Self::from_parts(NodeKind::Reciprocal, Interval::positive())
    }

    /// `1/x` on an interval that stays on one side of zero.
    pub fn reciprocal_on(domain: Interval) -> Result<Self, ExprError> {
        if domain.contains(0.0) || (domain.lo() < 0.0 && domain.hi() > 0.0) {
            return Err(ExprError::Pole { x: 0.0 });
        }
        Ok(Self::from_parts(NodeKind::Reciprocal, domain))
    }

    pub fn catalog(entry: CatalogFn) -> Self {
        Self::from_parts(NodeKind::Catalog(entry), entry.natural_domain())
    }

    /// Rational function `num(x)/den(x)` with coefficients in increasing degree.
    /// The denominator must keep a strict sign on the domain.
    pub fn quotient(num: Vec<f64>, den: Vec<f64>, domain: Interval) -> Result<Self, ExprError> {
        if den.iter().all(|c| *c == 0.0) {
            return Err(ExprError::Pole { x: f64::NAN });
        }
        let mut sign = 0.0;
        let mut pts = domain.grid(SCAN_POINTS);
        for b in [domain.lo(), domain.hi()] {
            if domain.contains(b) {
                pts.push(b);
            }
        }
        for x in pts {
            let d = horner(&den, x);
            if d == 0.0 || (sign != 0.0 && d.signum() != sign) {
                return Err(ExprError::Pole { x });
            }
            sign = d.signum();
        }
        Ok(Self::from_parts(NodeKind::Quotient { num, den }, domain))
    }

    pub fn measure_om(rep: OmRep) -> Self {
        let d = *rep.interval();
        Self::from_parts(NodeKind::MeasureOm(rep), d)
    }

    pub fn measure_oc(rep: OcRep) -> Self {
        let d = *rep.interval();
        Self::from_parts(NodeKind::MeasureOc(rep), d)
    }

    pub fn measure_soc(rep: SocRep) -> Self {
        let d = *rep.interval();
        Self::from_parts(NodeKind::MeasureSoc(rep), d)
    }

    /// `outer ∘ inner` on the domain of `inner`, with no check that the range of
    /// `inner` fits the domain of `outer`.
    pub fn compose_unchecked(outer: &FunctionExpr, inner: &FunctionExpr) -> Self {
        Self::from_parts(
            NodeKind::Compose { outer: outer.clone(), inner: inner.clone() },
            inner.domain(),
        )
    }

    /// Restrict to a sub-interval. Leaves are rebuilt with the new domain.
    pub fn restrict(&self, domain: Interval) -> Result<Self, ExprError> {
        let available = self.domain();
        if !available.contains_interval(&domain) {
            return Err(ExprError::DomainMismatch { requested: domain, available });
        }
        let kind = match &self.0.kind {
            k @ (NodeKind::Constant(_)
            | NodeKind::Affine { .. }
            | NodeKind::Power(_)
            | NodeKind::Reciprocal
            | NodeKind::Catalog(_)
            | NodeKind::Quotient { .. }) => k.clone(),
            NodeKind::Restrict(child) => NodeKind::Restrict(child.clone()),
            _ => NodeKind::Restrict(self.clone()),
        };
        Ok(Self::from_parts(kind, domain))
    }

    pub(crate) fn diff_quot_node(child: &FunctionExpr, x0: f64, center: f64, domain: Interval) -> Self {
        Self::from_parts(NodeKind::DiffQuot { child: child.clone(), x0, center }, domain)
    }

    pub(crate) fn mul_linear_node(child: &FunctionExpr, x0: f64, c: f64) -> Self {
        Self::from_parts(NodeKind::MulLinear { child: child.clone(), x0, c }, child.domain())
    }

    /// `−1/f` with the sign scan of `f` recorded on the node. Invalid nodes are
    /// still evaluable; use `transforms::neg_reciprocal` for a checked build.
    pub fn neg_recip_flagged(child: &FunctionExpr, sign: Sign) -> (Self, ScanOutcome) {
        let scan = child.sign_scan(sign);
        let valid = scan == ScanOutcome::Ok;
        let node = Self::from_parts(
            NodeKind::NegRecip { child: child.clone(), sign, valid },
            child.domain(),
        );
        (node, scan)
    }

    /// Close every finite excluded endpoint at which the function has a finite
    /// limit. Returns `self` unchanged when there is none.
    pub fn closure_extended(&self) -> Self {
        let d = self.domain();
        let lo_limit = if d.excludes_endpoint(d.lo()) { self.endpoint_limit(d.lo()) } else { None };
        let hi_limit = if d.excludes_endpoint(d.hi()) { self.endpoint_limit(d.hi()) } else { None };
        if lo_limit.is_none() && hi_limit.is_none() {
            return self.clone();
        }
        let domain = d
            .with_closed_ends(d.lo_closed() || lo_limit.is_some(), d.hi_closed() || hi_limit.is_some())
            .expect("finite endpoints");
        Self::from_parts(NodeKind::Closure { child: self.clone(), lo_limit, hi_limit }, domain)
    }

    pub fn kind(&self) -> &NodeKind {
        &self.0.kind
    }

    pub fn domain(&self) -> Interval {
        self.0.domain
    }

    /// Value at `x`, which must lie in the domain.
    pub fn eval_real(&self, x: f64) -> Result<f64, ExprError> {
        let domain = self.domain();
        if !domain.contains(x) {
            return Err(ExprError::Domain { x, domain });
        }
        let v = self.value(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::NonFinite { x })
        }
    }

    fn check_closure(&self, x: f64) -> Result<(), ExprError> {
        let domain = self.domain();
        if domain.closure_contains(x) {
            Ok(())
        } else {
            Err(ExprError::Domain { x, domain })
        }
    }

    /// Formula value, tolerant of excluded endpoints (used for limits).
    pub(crate) fn value(&self, x: f64) -> Result<f64, ExprError> {
        match &self.0.kind {
            NodeKind::Constant(c) => {
                self.check_closure(x)?;
                Ok(*c)
            }
            NodeKind::Affine { a, b } => {
                self.check_closure(x)?;
                Ok(a * x + b)
            }
            NodeKind::Power(alpha) => {
                self.check_closure(x)?;
                if is_integer(*alpha) {
                    Ok(x.powi(*alpha as i32))
                } else if x < 0.0 {
                    Err(ExprError::Branch { base: x, alpha: *alpha })
                } else {
                    Ok(x.powf(*alpha))
                }
            }
            NodeKind::Reciprocal => {
                self.check_closure(x)?;
                Ok(1.0 / x)
            }
            NodeKind::Catalog(e) => {
                self.check_closure(x)?;
                Ok(e.value(x))
            }
            NodeKind::Quotient { num, den } => {
                self.check_closure(x)?;
                Ok(horner(num, x) / horner(den, x))
            }
            NodeKind::DiffQuot { child, x0, center } => {
                if x == *x0 {
                    child.derivative(x)
                } else if let Some(v) = quotient_series(child, *x0, x) {
                    Ok(v)
                } else {
                    Ok((child.value(x)? - center) / (x - x0))
                }
            }
            NodeKind::NegRecip { child, .. } => Ok(-1.0 / child.value(x)?),
            NodeKind::MulLinear { child, x0, c } => Ok(child.value(x)? * (x - x0) + c),
            NodeKind::Compose { outer, inner } => outer.value(inner.value(x)?),
            NodeKind::MeasureOm(rep) => {
                self.check_closure(x)?;
                Ok(rep.formula(x))
            }
            NodeKind::MeasureOc(rep) => {
                self.check_closure(x)?;
                Ok(rep.formula(x))
            }
            NodeKind::MeasureSoc(rep) => {
                self.check_closure(x)?;
                Ok(rep.formula(x))
            }
            NodeKind::Restrict(child) => {
                self.check_closure(x)?;
                child.value(x)
            }
            NodeKind::Closure { child, lo_limit, hi_limit } => {
                let d = self.domain();
                match (x == d.lo(), x == d.hi(), lo_limit, hi_limit) {
                    (true, _, Some(v), _) => Ok(*v),
                    (_, true, _, Some(v)) => Ok(*v),
                    _ => child.value(x),
                }
            }
        }
    }

    /// First derivative with the central-difference fallback, no interior check.
    fn derivative(&self, x: f64) -> Result<f64, ExprError> {
        match self.taylor(x, 1) {
            Ok(t) => Ok(t[1]),
            Err(ExprError::NoSymbolicRule(_)) => self.central_difference(x),
            Err(e) => Err(e),
        }
    }

    /// Fourth-order central difference with step `1e-5·(1 + |x|)`.
    pub fn central_difference(&self, x: f64) -> Result<f64, ExprError> {
        let h = 1e-5 * (1.0 + x.abs());
        let f = |t: f64| self.eval_real(t);
        Ok((-f(x + 2.0 * h)? + 8.0 * f(x + h)? - 8.0 * f(x - h)? + f(x - 2.0 * h)?) / (12.0 * h))
    }

    /// `f′(x)` at an interior point.
    pub fn eval_deriv(&self, x: f64) -> Result<f64, ExprError> {
        let domain = self.domain();
        if !domain.is_interior(x) {
            return Err(ExprError::NotInterior { x, domain });
        }
        let d = self.derivative(x)?;
        if d.is_finite() {
            Ok(d)
        } else {
            Err(ExprError::NonFinite { x })
        }
    }

    /// Taylor coefficients `f^(k)(x)/k!` for `k = 0..=order`.
    pub fn taylor(&self, x: f64, order: usize) -> Result<Vec<f64>, ExprError> {
        Ok(self.jet(&Jet::variable(x, order))?.0)
    }

    pub(crate) fn jet(&self, u: &Jet) -> Result<Jet, ExprError> {
        let x = u.value();
        let order = u.order();
        match &self.0.kind {
            NodeKind::Constant(c) => {
                self.check_closure(x)?;
                Ok(Jet::constant(*c, order))
            }
            NodeKind::Affine { a, b } => {
                self.check_closure(x)?;
                Ok(u.scale(*a).add_const(*b))
            }
            NodeKind::Power(alpha) => {
                self.check_closure(x)?;
                if is_integer(*alpha) {
                    Ok(u.powi(*alpha as i32))
                } else if x < 0.0 {
                    Err(ExprError::Branch { base: x, alpha: *alpha })
                } else if order == 0 {
                    Ok(Jet::constant(x.powf(*alpha), 0))
                } else {
                    Ok(u.powf(*alpha))
                }
            }
            NodeKind::Reciprocal => {
                self.check_closure(x)?;
                Ok(u.recip())
            }
            NodeKind::Catalog(e) => {
                self.check_closure(x)?;
                e.jet(u)
            }
            NodeKind::Quotient { num, den } => {
                self.check_closure(x)?;
                Ok(horner_jet(num, u).div(&horner_jet(den, u)))
            }
            NodeKind::DiffQuot { child, x0, center } => {
                if x == *x0 {
                    let t = child.taylor(*x0, order + 1)?;
                    Ok(u.compose_series(&t[1..]))
                } else {
                    Ok(child.jet(u)?.add_const(-center).div(&u.add_const(-x0)))
                }
            }
            NodeKind::NegRecip { child, .. } => Ok(child.jet(u)?.recip().scale(-1.0)),
            NodeKind::MulLinear { child, x0, c } => {
                Ok(child.jet(u)?.mul(&u.add_const(-x0)).add_const(*c))
            }
            NodeKind::Compose { outer, inner } => outer.jet(&inner.jet(u)?),
            NodeKind::MeasureOm(rep) => {
                self.check_closure(x)?;
                Ok(rep.formula_jet(u))
            }
            NodeKind::MeasureOc(rep) => {
                self.check_closure(x)?;
                Ok(rep.formula_jet(u))
            }
            NodeKind::MeasureSoc(rep) => {
                self.check_closure(x)?;
                Ok(rep.formula_jet(u))
            }
            NodeKind::Restrict(child) => {
                self.check_closure(x)?;
                child.jet(u)
            }
            NodeKind::Closure { child, lo_limit, hi_limit } => {
                let d = self.domain();
                if order == 0 {
                    return Ok(Jet::constant(self.value(x)?, 0));
                }
                if (x == d.lo() && lo_limit.is_some()) || (x == d.hi() && hi_limit.is_some()) {
                    // one-sided derivatives of the child at an excluded endpoint
                    let j = child.jet(u)?;
                    if j.is_finite() {
                        return Ok(j);
                    }
                    return Err(ExprError::NonFinite { x });
                }
                child.jet(u)
            }
        }
    }

    /// Value of the holomorphic extension at `z` with `Im z > 0`.
    pub fn eval_complex(&self, z: Complex<f64>) -> Result<Complex<f64>, ExprError> {
        if !(z.im > 0.0) {
            return Err(ExprError::NotUpperHalfPlane { im: z.im });
        }
        self.complex(z)
    }

    fn complex(&self, z: Complex<f64>) -> Result<Complex<f64>, ExprError> {
        let one = Complex::new(1.0, 0.0);
        Ok(match &self.0.kind {
            NodeKind::Constant(c) => Complex::new(*c, 0.0),
            NodeKind::Affine { a, b } => z * *a + *b,
            NodeKind::Power(alpha) => {
                if is_integer(*alpha) {
                    z.powi(*alpha as i32)
                } else {
                    // principal branch exp(α·Log z)
                    (z.ln() * *alpha).exp()
                }
            }
            NodeKind::Reciprocal => one / z,
            NodeKind::Catalog(e) => e.complex(z)?,
            NodeKind::Quotient { num, den } => horner_c(num, z) / horner_c(den, z),
            NodeKind::DiffQuot { child, x0, center } => (child.complex(z)? - *center) / (z - *x0),
            NodeKind::NegRecip { child, .. } => -one / child.complex(z)?,
            NodeKind::MulLinear { child, x0, c } => child.complex(z)? * (z - *x0) + *c,
            NodeKind::Compose { outer, inner } => outer.complex(inner.complex(z)?)?,
            NodeKind::MeasureOm(rep) => rep.formula_complex(z),
            NodeKind::MeasureOc(rep) => rep.formula_complex(z),
            NodeKind::MeasureSoc(rep) => rep.formula_complex(z),
            NodeKind::Restrict(child) | NodeKind::Closure { child, .. } => child.complex(z)?,
        })
    }

    /// Finite limit at an endpoint of the domain, if one exists.
    ///
    /// Closed endpoints return the value. At an excluded endpoint the formula
    /// value there is accepted when five approach points converge towards it;
    /// otherwise the approach values themselves must settle.
    pub fn endpoint_limit(&self, b: f64) -> Option<f64> {
        let d = self.domain();
        if !d.is_endpoint(b) {
            return None;
        }
        if d.contains(b) {
            return self.eval_real(b).ok();
        }
        let inward = if b == d.lo() { 1.0 } else { -1.0 };
        let w = d.width().min(1.0);
        let vals: Vec<f64> = (1..=5)
            .map(|k| self.eval_real(b + inward * w * 10f64.powi(-(k + 2))).ok())
            .collect::<Option<Vec<f64>>>()?;
        match self.value(b).ok().filter(|v| v.is_finite()) {
            Some(v) => {
                let scale = 1.0 + v.abs();
                let devs: Vec<f64> = vals.iter().map(|y| (y - v).abs()).collect();
                let shrinking = devs.windows(2).all(|p| p[1] <= p[0] + 1e-12 * scale);
                (shrinking && devs[4] <= 1e-2 * scale).then_some(v)
            }
            None => {
                let last = vals[4];
                let d: Vec<f64> = vals.windows(2).map(|p| p[1] - p[0]).collect();
                let shrinking = d.windows(2).all(|p| p[1].abs() <= p[0].abs() + 1e-15 * (1.0 + last.abs()));
                if shrinking && d[3].abs() <= 1e-8 * (1.0 + last.abs()) {
                    return Some(last);
                }
                // Power-law approach (e.g. like √h): the steps shrink by a steady
                // ratio, so Aitken's extrapolation recovers the limit.
                let ratios: Vec<f64> = d.windows(2).map(|p| p[1] / p[0]).collect();
                let steady = ratios.iter().all(|q| *q > 0.0 && *q <= 0.9)
                    && ratios.iter().cloned().fold(0.0, f64::max) <= 1.5 * ratios.iter().cloned().fold(1.0, f64::min);
                if !steady {
                    return None;
                }
                // Extrapolate from a deeper run of approach points; two Aitken
                // rounds remove the two leading powers of the expansion.
                let deep: Vec<f64> = (8..=12)
                    .map(|k| self.eval_real(b + inward * w * 10f64.powi(-k)).ok().filter(|v| v.is_finite()))
                    .collect::<Option<Vec<f64>>>()?;
                let aitken = |v: &[f64]| -> Vec<f64> {
                    v.windows(3)
                        .map(|t| {
                            let (d0, d1) = (t[1] - t[0], t[2] - t[1]);
                            if d1 == d0 { t[2] } else { t[2] - d1 * d1 / (d1 - d0) }
                        })
                        .collect()
                };
                let first = aitken(&deep);
                let lim = aitken(&first)[0];
                let settled = (lim - first[2]).abs() <= (first[2] - first[1]).abs() + 1e-15 * (1.0 + lim.abs());
                (lim.is_finite() && settled && (lim - last).abs() <= 1e-2 * (1.0 + lim.abs())).then_some(lim)
            }
        }
    }

    /// Scan the domain grid (plus finite-endpoint limits) for the expected strict
    /// sign.
    pub fn sign_scan(&self, sign: Sign) -> ScanOutcome {
        let d = self.domain();
        let grid = d.grid(SCAN_POINTS);
        let mut values = Vec::with_capacity(grid.len());
        for &x in &grid {
            match self.eval_real(x) {
                Ok(v) => values.push(v),
                Err(e) => return ScanOutcome::EvalFailure(e.to_string()),
            }
        }
        if values.iter().all(|v| v.abs() <= ZERO_THRESHOLD) {
            return ScanOutcome::Zero;
        }
        for (&x, &v) in grid.iter().zip(&values) {
            if !(sign.factor() * v > 0.0) {
                return ScanOutcome::Violation { x, value: v };
            }
        }
        for b in [d.lo(), d.hi()] {
            if d.excludes_endpoint(b) {
                if let Some(v) = self.endpoint_limit(b) {
                    // the limit may touch zero at an excluded endpoint
                    if sign.factor() * v < 0.0 {
                        return ScanOutcome::Violation { x: b, value: v };
                    }
                }
            }
        }
        ScanOutcome::Ok
    }

    /// True when the function vanishes at every scan-grid point.
    pub fn is_zero_on_grid(&self) -> bool {
        self.domain()
            .grid(SCAN_POINTS)
            .iter()
            .all(|&x| matches!(self.eval_real(x), Ok(v) if v.abs() <= ZERO_THRESHOLD))
    }

    /// Short human-readable formula.
    pub fn describe(&self) -> String {
        match &self.0.kind {
            NodeKind::Constant(c) => format!("{c}"),
            NodeKind::Affine { a, b } => {
                if *a == 1.0 && *b == 0.0 {
                    "x".into()
                } else {
                    format!("{a}*x + {b}")
                }
            }
            NodeKind::Power(alpha) => format!("x^{alpha}"),
            NodeKind::Reciprocal => "1/x".into(),
            NodeKind::Catalog(e) => match e {
                CatalogFn::PowerDifference { alpha } => format!("x^{alpha} - (2-x)^{alpha}"),
                other => format!("{}(x)", other.name()),
            },
            NodeKind::Quotient { num, den } => format!("poly{num:?}/poly{den:?}"),
            NodeKind::DiffQuot { child, x0, .. } => format!("dq[{}; x0={x0}]", child.describe()),
            NodeKind::NegRecip { child, .. } => format!("-1/({})", child.describe()),
            NodeKind::MulLinear { child, x0, c } => format!("({})*(x - {x0}) + {c}", child.describe()),
            NodeKind::Compose { outer, inner } => format!("({}) o ({})", outer.describe(), inner.describe()),
            NodeKind::MeasureOm(_) => "om-rep".into(),
            NodeKind::MeasureOc(_) => "oc-rep".into(),
            NodeKind::MeasureSoc(_) => "soc-rep".into(),
            NodeKind::Restrict(child) | NodeKind::Closure { child, .. } => child.describe(),
        }
    }
}

impl fmt::Display for FunctionExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} on {}", self.describe(), self.domain())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::{diff_quotient, neg_reciprocal};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_evaluates_to_argument() {
        assert_eq!(FunctionExpr::affine(1.0, 0.0).eval_real(3.5).unwrap(), 3.5);
    }

    #[test]
    fn diffquot_center_is_derivative() {
        let g = diff_quotient(&FunctionExpr::power(0.5), 1.0).unwrap();
        assert_relative_eq!(g.eval_real(1.0).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn main_cycle_f3_at_four() {
        let f1 = diff_quotient(&FunctionExpr::power(0.5), 1.0).unwrap();
        let f2 = neg_reciprocal(&f1).unwrap();
        let f3 = diff_quotient(&f2, 0.0).unwrap();
        let closed = (4f64.powf(-0.5) - 1.0) / (4f64.powf(0.5) - 1.0);
        assert_relative_eq!(closed, -0.5);
        assert_relative_eq!(f3.eval_real(4.0).unwrap(), -0.5, epsilon = 1e-15);
    }

    #[test]
    fn domain_errors() {
        let f = FunctionExpr::power(0.5);
        assert!(matches!(f.eval_real(-1.0), Err(ExprError::Domain { .. })));
        let g = FunctionExpr::power(0.5).restrict(Interval::closed(0.0, 2.0)).unwrap();
        assert!(matches!(g.eval_real(3.0), Err(ExprError::Domain { .. })));
        // a Power node reached with a negative base through composition
        let inner = FunctionExpr::affine(1.0, -5.0).restrict(Interval::open(0.0, 1.0)).unwrap();
        let h = FunctionExpr::compose_unchecked(&FunctionExpr::power(0.5), &inner);
        assert!(h.eval_real(0.5).is_err());
    }

    #[test]
    fn branch_error_on_negative_base() {
        let p = FunctionExpr::from_parts(NodeKind::Power(0.5), Interval::real_line());
        assert!(matches!(p.eval_real(-2.0), Err(ExprError::Branch { .. })));
    }

    #[test]
    fn complex_examples() {
        let z = Complex::new(1.0, 2.0);
        assert_eq!(FunctionExpr::identity().eval_complex(z).unwrap(), z);
        let sq = FunctionExpr::power(2.0).eval_complex(Complex::new(-1.0, 1.0)).unwrap();
        assert_relative_eq!(sq.im, -2.0, epsilon = 1e-15);
        assert_relative_eq!(sq.re, 0.0, epsilon = 1e-15);
        assert!(matches!(
            FunctionExpr::catalog(CatalogFn::Abs).eval_complex(z),
            Err(ExprError::UnsupportedNode("abs"))
        ));
        assert!(FunctionExpr::identity().eval_complex(Complex::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn derivative_examples() {
        assert_relative_eq!(FunctionExpr::power(2.0).eval_deriv(3.0).unwrap(), 6.0);
        assert_relative_eq!(FunctionExpr::power(0.5).eval_deriv(4.0).unwrap(), 0.25);
        let neg_x = neg_reciprocal(&FunctionExpr::reciprocal()).unwrap();
        assert_relative_eq!(neg_x.eval_deriv(7.0).unwrap(), -1.0, epsilon = 1e-14);
        assert!(matches!(
            FunctionExpr::power(0.5).eval_deriv(0.0),
            Err(ExprError::NotInterior { .. })
        ));
        // |x| has no symbolic rule and falls back to central differences
        let abs = FunctionExpr::catalog(CatalogFn::Abs);
        assert_relative_eq!(abs.eval_deriv(-2.0).unwrap(), -1.0, epsilon = 1e-9);
    }

    #[test]
    fn domain_of_examples() {
        let g = diff_quotient(&FunctionExpr::power(0.5), 1.0).unwrap();
        assert_eq!(g.domain(), Interval::nonnegative());
        let h = diff_quotient(&FunctionExpr::power(0.5).restrict(Interval::closed(0.0, 2.0)).unwrap(), 0.0).unwrap();
        assert_eq!(h.domain(), Interval::new(0.0, 2.0, false, true).unwrap());
        let c = FunctionExpr::constant(1.0).restrict(Interval::open(-1.0, 1.0)).unwrap();
        let n = neg_reciprocal(&c).unwrap();
        assert_eq!(n.domain(), Interval::open(-1.0, 1.0));
    }

    #[test]
    fn quotient_rejects_pole() {
        assert!(FunctionExpr::quotient(vec![1.0], vec![-1.0, 1.0], Interval::open(0.0, 2.0)).is_err());
        let q = FunctionExpr::quotient(vec![1.0, 2.0], vec![1.0, 1.0], Interval::positive()).unwrap();
        assert_relative_eq!(q.eval_real(1.0).unwrap(), 1.5);
    }

    #[test]
    fn endpoint_limits() {
        let f = FunctionExpr::power(0.5).restrict(Interval::positive()).unwrap();
        assert_eq!(f.endpoint_limit(0.0), Some(0.0));
        assert_eq!(FunctionExpr::reciprocal().endpoint_limit(0.0), None);
        // x * (1/x): formula gives NaN at 0 but the limit is 1
        let g = crate::transforms::mul_linear(&FunctionExpr::reciprocal(), 0.0, 0.0).unwrap();
        assert_eq!(g.endpoint_limit(0.0), Some(1.0));
    }

    fn sample_interior(d: &Interval, rng: &mut ChaCha8Rng) -> f64 {
        let w = d.window(DEFAULT_WINDOW_LEN);
        let (a, b) = (w.lo(), w.hi());
        let pad = 0.05 * (b - a);
        rng.random_range(a + pad..b - pad)
    }

    #[test]
    fn symbolic_derivatives_match_central_differences() {
        use crate::measures::{Atom, DiscreteMeasure};
        let soc = SocRep::new(
            0.5,
            DiscreteMeasure::new(vec![Atom::new(3.0, 1.0)]).unwrap(),
            DiscreteMeasure::new(vec![Atom::new(-1.0, 2.0)]).unwrap(),
            Interval::open(0.0, 2.0),
        )
        .unwrap();
        let sqrt = FunctionExpr::power(0.5);
        let f1 = diff_quotient(&sqrt, 1.0).unwrap();
        let cases = vec![
            FunctionExpr::affine(2.0, -1.0),
            FunctionExpr::power(3.0),
            FunctionExpr::power(0.5),
            FunctionExpr::power(-1.5),
            FunctionExpr::reciprocal(),
            FunctionExpr::catalog(CatalogFn::Log),
            FunctionExpr::catalog(CatalogFn::XLogX),
            FunctionExpr::catalog(CatalogFn::Exp).restrict(Interval::open(-3.0, 3.0)).unwrap(),
            FunctionExpr::catalog(CatalogFn::Tan).restrict(Interval::open(-1.2, 1.2)).unwrap(),
            FunctionExpr::catalog(CatalogFn::PowerDifference { alpha: 0.5 }),
            FunctionExpr::quotient(vec![1.0, 2.0], vec![1.0, 1.0], Interval::positive()).unwrap(),
            f1.clone(),
            neg_reciprocal(&f1).unwrap(),
            crate::transforms::mul_linear(&sqrt, 1.0, -3.0).unwrap(),
            FunctionExpr::compose_unchecked(&FunctionExpr::catalog(CatalogFn::Log), &f1),
            FunctionExpr::measure_soc(soc),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for f in &cases {
            let d = f.domain();
            for _ in 0..100 {
                let x = sample_interior(&d, &mut rng);
                let sym = f.eval_deriv(x).unwrap();
                let fd = f.central_difference(x).unwrap();
                assert!(
                    (sym - fd).abs() <= 1e-6 * (1.0 + sym.abs()),
                    "{f} at {x}: {sym} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn complex_limit_approaches_real_values() {
        let f1 = diff_quotient(&FunctionExpr::power(0.5), 1.0).unwrap();
        let cases = vec![
            FunctionExpr::power(0.5),
            FunctionExpr::catalog(CatalogFn::Log),
            f1.clone(),
            neg_reciprocal(&f1).unwrap(),
            FunctionExpr::catalog(CatalogFn::PowerDifference { alpha: 0.5 }),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for f in &cases {
            for _ in 0..20 {
                let x = sample_interior(&f.domain(), &mut rng);
                let fx = f.eval_real(x).unwrap();
                let gaps: Vec<f64> = [1e-2, 1e-4, 1e-6]
                    .iter()
                    .map(|&e| (f.eval_complex(Complex::new(x, e)).unwrap() - fx).norm())
                    .collect();
                assert!(gaps[0] >= gaps[1] && gaps[1] >= gaps[2], "{f} at {x}: {gaps:?}");
                assert!(gaps[2] < 1e-4 * (1.0 + fx.abs()));
            }
        }
    }

    #[test]
    fn diffquot_continuous_at_center() {
        for (f, x0) in [
            (FunctionExpr::power(0.5), 1.0),
            (FunctionExpr::catalog(CatalogFn::Log), 2.0),
            (FunctionExpr::catalog(CatalogFn::Exp), 0.3),
        ] {
            let g = diff_quotient(&f, x0).unwrap();
            let at = g.eval_real(x0).unwrap();
            let d = f.eval_deriv(x0).unwrap();
            for x in [x0 - 1e-7, x0 + 1e-7] {
                assert!((g.eval_real(x).unwrap() - at).abs() < 1e-5 * (1.0 + d.abs()));
            }
        }
    }

    #[test]
    fn second_order_taylor_through_nested_centers() {
        // g = dq(sqrt, 1) = 1/(sqrt(x)+1); g'(1) = -1/8
        let g = diff_quotient(&FunctionExpr::power(0.5), 1.0).unwrap();
        assert_relative_eq!(g.eval_deriv(1.0).unwrap(), -0.125, epsilon = 1e-14);
        let h = diff_quotient(&g, 1.0).unwrap();
        // h(1) = g'(1)
        assert_relative_eq!(h.eval_real(1.0).unwrap(), -0.125, epsilon = 1e-14);
    }
}
