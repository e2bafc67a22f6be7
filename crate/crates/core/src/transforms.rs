//! Function-to-function constructions: difference quotients, negative
//! reciprocals, multiplication by a linear factor with a shift, and
//! composition with hypothesis checks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{check_convex, check_loewner, check_monotone, check_strong, Certificate, CertifyConfig};
use crate::funexpr::{ExprError, FunctionExpr, Interval, ScanOutcome, Sign, SCAN_POINTS};

/// Grid size used to confirm a shift choice.
pub const REFINED_SCAN_POINTS: usize = 4001;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("{x0} is not in the closure of {domain}")]
    OutsideClosure { x0: f64, domain: Interval },
    #[error("no finite limit at the excluded endpoint {x0}")]
    NoFiniteLimit { x0: f64 },
    #[error("function is not positive: value {value} at {x}")]
    NotPositive { x: f64, value: f64 },
    #[error("function is not negative: value {value} at {x}")]
    NotNegative { x: f64, value: f64 },
    #[error("function vanishes identically")]
    ZeroFunction,
    #[error("function is unbounded: {0}; restrict it to a smaller interval")]
    Unbounded(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("evaluation failed: {0}")]
    Eval(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// `(f(x) − f(x0)) / (x − x0)`.
///
/// At an interior `x0` the domain is unchanged and the value there is
/// `f′(x0)`. A closed endpoint `x0` is removed from the domain; at an excluded
/// endpoint `f` must have a finite limit, which is used as `f(x0)`.
pub fn diff_quotient(f: &FunctionExpr, x0: f64) -> Result<FunctionExpr, TransformError> {
    let d = f.domain();
    if !d.closure_contains(x0) {
        return Err(TransformError::OutsideClosure { x0, domain: d });
    }
    let (center, domain) = if d.contains(x0) {
        let c = f.eval_real(x0)?;
        let dom = if d.is_interior(x0) { d } else { d.without_point(x0)? };
        (c, dom)
    } else {
        (f.endpoint_limit(x0).ok_or(TransformError::NoFiniteLimit { x0 })?, d)
    };
    Ok(FunctionExpr::diff_quot_node(f, x0, center, domain))
}

fn scan_error(scan: ScanOutcome, sign: Sign) -> TransformError {
    match scan {
        ScanOutcome::Zero => TransformError::ZeroFunction,
        ScanOutcome::Violation { x, value } => match sign {
            Sign::Positive => TransformError::NotPositive { x, value },
            Sign::Negative => TransformError::NotNegative { x, value },
        },
        ScanOutcome::EvalFailure(msg) => TransformError::Eval(msg),
        ScanOutcome::Ok => unreachable!("successful scans are not errors"),
    }
}

/// `−1/f` for a function that is strictly positive on its domain.
pub fn neg_reciprocal(f: &FunctionExpr) -> Result<FunctionExpr, TransformError> {
    let (node, scan) = FunctionExpr::neg_recip_flagged(f, Sign::Positive);
    match scan {
        ScanOutcome::Ok => Ok(node),
        other => Err(scan_error(other, Sign::Positive)),
    }
}

/// `−1/f` for a strictly negative function; inverts [`neg_reciprocal`].
pub fn neg_reciprocal_of_negative(f: &FunctionExpr) -> Result<FunctionExpr, TransformError> {
    let (node, scan) = FunctionExpr::neg_recip_flagged(f, Sign::Negative);
    match scan {
        ScanOutcome::Ok => Ok(node),
        other => Err(scan_error(other, Sign::Negative)),
    }
}

/// `f(x)·(x − x0) + c`
pub fn mul_linear(f: &FunctionExpr, x0: f64, c: f64) -> Result<FunctionExpr, TransformError> {
    let d = f.domain();
    if !d.closure_contains(x0) || !c.is_finite() {
        return Err(TransformError::OutsideClosure { x0, domain: d });
    }
    Ok(FunctionExpr::mul_linear_node(f, x0, c))
}

fn product_values(f: &FunctionExpr, x0: f64, interval: &Interval, points: usize) -> Result<Vec<f64>, TransformError> {
    let mut vals = Vec::with_capacity(points + 2);
    for x in interval.grid(points) {
        vals.push(f.eval_real(x)? * (x - x0));
    }
    for b in [interval.lo(), interval.hi()] {
        if interval.excludes_endpoint(b) {
            let lim = f.endpoint_limit(b).ok_or_else(|| TransformError::Unbounded(format!("no finite limit at {b}")))?;
            vals.push(lim * (b - x0));
        }
    }
    Ok(vals)
}

/// A shift `c` that makes `f(x)·(x − x0) + c` negative on `interval`:
/// `c = −sup − max(1, 0.1·range)`, with the supremum estimated on a grid and
/// confirmed on a four times finer one.
pub fn choose_shift(f: &FunctionExpr, x0: f64, interval: &Interval) -> Result<f64, TransformError> {
    if !interval.is_bounded() {
        return Err(TransformError::Unbounded(format!("{interval} is unbounded")));
    }
    let g = f.restrict(*interval)?;
    let coarse = product_values(&g, x0, interval, SCAN_POINTS)?;
    let fine = product_values(&g, x0, interval, REFINED_SCAN_POINTS)?;
    let sup = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let inf = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
    let (s1, s2) = (sup(&coarse), sup(&fine));
    if !s2.is_finite() || (s2 - s1).abs() > 0.1 * s1.abs().max(1.0) {
        return Err(TransformError::Unbounded(format!("grid supremum moved from {s1} to {s2}")));
    }
    let range = s2.max(s1) - inf(&fine).min(inf(&coarse));
    let margin = (0.1 * range).max(1.0);
    Ok(-s2.max(s1) - margin)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComposeMode {
    /// `φ(0) ≥ 0` with `0` in the domain of `φ`: the composite is strongly
    /// operator convex.
    Strong,
    /// `0` in the domain of `φ` or its left endpoint: the composite is
    /// operator convex.
    Convex,
}

#[derive(Clone, Debug)]
pub struct CheckedComposition {
    pub expr: FunctionExpr,
    pub mode: ComposeMode,
    /// Certificates of the hypotheses: φ monotone, φ Loewner, f strong.
    pub hypotheses: Vec<Certificate>,
    /// Certificate of the promised class of the composite.
    pub certificate: Certificate,
}

/// `φ ∘ f` for an operator monotone `φ` and a strongly operator convex `f`,
/// after checking every hypothesis numerically.
pub fn compose_checked(
    phi: &FunctionExpr,
    f: &FunctionExpr,
    mode: ComposeMode,
    cfg: &CertifyConfig,
) -> Result<CheckedComposition, TransformError> {
    let j = phi.domain();
    let d = f.domain();
    for x in d.grid(SCAN_POINTS) {
        let v = f.eval_real(x)?;
        if !j.contains(v) {
            return Err(TransformError::HypothesisViolated(format!("range of f: f({x}) = {v} is outside {j}")));
        }
    }
    for b in [d.lo(), d.hi()] {
        if d.excludes_endpoint(b) {
            if let Some(v) = f.endpoint_limit(b) {
                if !j.closure_contains(v) {
                    return Err(TransformError::HypothesisViolated(format!(
                        "range of f: limit {v} at {b} is outside {j}"
                    )));
                }
            }
        }
    }
    match mode {
        ComposeMode::Strong => {
            if !j.contains(0.0) {
                return Err(TransformError::HypothesisViolated(format!("0 is not in the domain {j} of phi")));
            }
            let v = phi.eval_real(0.0)?;
            if v < 0.0 {
                return Err(TransformError::HypothesisViolated(format!("phi(0) = {v} is negative")));
            }
        }
        ComposeMode::Convex => {
            if !j.contains(0.0) {
                if j.lo() != 0.0 {
                    return Err(TransformError::HypothesisViolated(format!(
                        "0 is neither in the domain {j} of phi nor its left endpoint"
                    )));
                }
                if phi.endpoint_limit(0.0).is_none() {
                    return Err(TransformError::HypothesisViolated("phi has no finite limit at 0".into()));
                }
            }
        }
    }
    let mono = check_monotone(phi, &j, cfg);
    let loew = check_loewner(phi, &j, cfg);
    for c in [&mono, &loew] {
        if !c.passed() {
            return Err(TransformError::HypothesisViolated(format!(
                "phi is not operator monotone ({:?} {:?})",
                c.property, c.verdict
            )));
        }
    }
    let strong = check_strong(f, &d, cfg);
    if !strong.passed() {
        return Err(TransformError::HypothesisViolated(format!(
            "f is not strongly operator convex ({:?})",
            strong.verdict
        )));
    }
    let expr = FunctionExpr::compose_unchecked(phi, f);
    let certificate = match mode {
        ComposeMode::Strong => check_strong(&expr, &d, cfg),
        ComposeMode::Convex => check_convex(&expr, &d, cfg),
    };
    Ok(CheckedComposition { expr, mode, hypotheses: vec![mono, loew, strong], certificate })
}
