//! JSON description format for expression trees.
//!
//! ```json
//! {"kind": "diffquot", "x0": 1.0,
//!  "child": {"kind": "power", "params": {"alpha": 0.5}}}
//! ```
//!
//! Leaves take an optional `domain` interval object; transform nodes carry
//! their parameters next to `child`.

use serde::{Deserialize, Serialize};

use super::{CatalogFn, ExprError, FunctionExpr, Interval, NodeKind, Sign};
use crate::measures::MeasureJson;
use crate::transforms;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantParams {
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineParams {
    pub a: f64,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerParams {
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotientParams {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Constant {
        params: ConstantParams,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<Interval>,
    },
    Identity {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<Interval>,
    },
    Affine {
        params: AffineParams,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<Interval>,
    },
    Power {
        params: PowerParams,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<Interval>,
    },
    Reciprocal {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<Interval>,
    },
    Catalog {
        params: CatalogFn,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<Interval>,
    },
    Quotient {
        params: QuotientParams,
        domain: Interval,
    },
    #[serde(rename = "diffquot")]
    DiffQuot {
        x0: f64,
        child: Box<FunctionSpec>,
    },
    #[serde(rename = "negrecip")]
    NegRecip {
        #[serde(default = "positive")]
        sign: Sign,
        child: Box<FunctionSpec>,
    },
    #[serde(rename = "mullinear")]
    MulLinear {
        x0: f64,
        c: f64,
        child: Box<FunctionSpec>,
    },
    Compose {
        outer: Box<FunctionSpec>,
        inner: Box<FunctionSpec>,
    },
    MeasureOm {
        rep: MeasureJson,
    },
    MeasureOc {
        rep: MeasureJson,
    },
    MeasureSoc {
        rep: MeasureJson,
    },
    Restrict {
        domain: Interval,
        child: Box<FunctionSpec>,
    },
    Closure {
        child: Box<FunctionSpec>,
    },
}

fn positive() -> Sign {
    Sign::Positive
}

fn with_domain(f: FunctionExpr, domain: &Option<Interval>) -> Result<FunctionExpr, ExprError> {
    match domain {
        Some(d) => f.restrict(*d),
        None => Ok(f),
    }
}

impl FunctionSpec {
    /// Build the expression tree. Transform nodes are validated like their
    /// library constructors, except that a reciprocal whose sign scan fails is
    /// still built (and flagged invalid) so that it can be analysed.
    pub fn build(&self) -> Result<FunctionExpr, ExprError> {
        Ok(match self {
            FunctionSpec::Constant { params, domain } => {
                with_domain(FunctionExpr::constant(params.value), domain)?
            }
            FunctionSpec::Identity { domain } => with_domain(FunctionExpr::identity(), domain)?,
            FunctionSpec::Affine { params, domain } => {
                with_domain(FunctionExpr::affine(params.a, params.b), domain)?
            }
            FunctionSpec::Power { params, domain } => {
                with_domain(FunctionExpr::power(params.alpha), domain)?
            }
            FunctionSpec::Reciprocal { domain } => match domain {
                Some(d) => FunctionExpr::reciprocal_on(*d)?,
                None => FunctionExpr::reciprocal(),
            },
            FunctionSpec::Catalog { params, domain } => {
                with_domain(FunctionExpr::catalog(*params), domain)?
            }
            FunctionSpec::Quotient { params, domain } => {
                FunctionExpr::quotient(params.num.clone(), params.den.clone(), *domain)?
            }
            FunctionSpec::DiffQuot { x0, child } => {
                transforms::diff_quotient(&child.build()?, *x0).map_err(|e| ExprError::Transform(e.to_string()))?
            }
            FunctionSpec::NegRecip { sign, child } => FunctionExpr::neg_recip_flagged(&child.build()?, *sign).0,
            FunctionSpec::MulLinear { x0, c, child } => {
                transforms::mul_linear(&child.build()?, *x0, *c).map_err(|e| ExprError::Transform(e.to_string()))?
            }
            FunctionSpec::Compose { outer, inner } => {
                FunctionExpr::compose_unchecked(&outer.build()?, &inner.build()?)
            }
            FunctionSpec::MeasureOm { rep } => {
                FunctionExpr::measure_om(rep.to_om().map_err(|e| ExprError::Measure(e.to_string()))?)
            }
            FunctionSpec::MeasureOc { rep } => {
                FunctionExpr::measure_oc(rep.to_oc().map_err(|e| ExprError::Measure(e.to_string()))?)
            }
            FunctionSpec::MeasureSoc { rep } => {
                FunctionExpr::measure_soc(rep.to_soc().map_err(|e| ExprError::Measure(e.to_string()))?)
            }
            FunctionSpec::Restrict { domain, child } => child.build()?.restrict(*domain)?,
            FunctionSpec::Closure { child } => child.build()?.closure_extended(),
        })
    }
}

impl From<&FunctionExpr> for FunctionSpec {
    fn from(f: &FunctionExpr) -> Self {
        let dom = Some(f.domain());
        let child = |c: &FunctionExpr| Box::new(FunctionSpec::from(c));
        match f.kind() {
            NodeKind::Constant(c) => FunctionSpec::Constant { params: ConstantParams { value: *c }, domain: dom },
            NodeKind::Affine { a, b } => {
                FunctionSpec::Affine { params: AffineParams { a: *a, b: *b }, domain: dom }
            }
            NodeKind::Power(alpha) => FunctionSpec::Power { params: PowerParams { alpha: *alpha }, domain: dom },
            NodeKind::Reciprocal => FunctionSpec::Reciprocal { domain: dom },
            NodeKind::Catalog(e) => FunctionSpec::Catalog { params: *e, domain: dom },
            NodeKind::Quotient { num, den } => FunctionSpec::Quotient {
                params: QuotientParams { num: num.clone(), den: den.clone() },
                domain: f.domain(),
            },
            NodeKind::DiffQuot { child: c, x0, .. } => FunctionSpec::DiffQuot { x0: *x0, child: child(c) },
            NodeKind::NegRecip { child: c, sign, .. } => FunctionSpec::NegRecip { sign: *sign, child: child(c) },
            NodeKind::MulLinear { child: c, x0, c: shift } => {
                FunctionSpec::MulLinear { x0: *x0, c: *shift, child: child(c) }
            }
            NodeKind::Compose { outer, inner } => FunctionSpec::Compose { outer: child(outer), inner: child(inner) },
            NodeKind::MeasureOm(rep) => FunctionSpec::MeasureOm { rep: MeasureJson::from(rep) },
            NodeKind::MeasureOc(rep) => FunctionSpec::MeasureOc { rep: MeasureJson::from(rep) },
            NodeKind::MeasureSoc(rep) => FunctionSpec::MeasureSoc { rep: MeasureJson::from(rep) },
            NodeKind::Restrict(c) => FunctionSpec::Restrict { domain: f.domain(), child: child(c) },
            NodeKind::Closure { child: c, .. } => FunctionSpec::Closure { child: child(c) },
        }
    }
}

impl Serialize for FunctionExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        FunctionSpec::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for FunctionExpr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        FunctionSpec::deserialize(d)?.build().map_err(serde::de::Error::custom)
    }
}
