use std::f64::consts::FRAC_PI_2;

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use super::jet::Jet;
use super::{ExprError, Interval};

/// Fixed closed forms that are not built from the other node kinds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum CatalogFn {
    /// `ln x` on `(0, ∞)`
    Log,
    /// `x ln x` on `[0, ∞)`
    #[serde(rename = "xlogx")]
    XLogX,
    /// `e^x`
    Exp,
    /// `tan x` on `(-π/2, π/2)`
    Tan,
    /// `|x|`. Has neither a symbolic derivative nor a holomorphic extension.
    Abs,
    /// `x^α − (2 − x)^α` on `[0, 2]`
    PowerDifference { alpha: f64 },
}

impl CatalogFn {
    pub fn name(&self) -> &'static str {
        match self {
            CatalogFn::Log => "log",
            CatalogFn::XLogX => "xlogx",
            CatalogFn::Exp => "exp",
            CatalogFn::Tan => "tan",
            CatalogFn::Abs => "abs",
            CatalogFn::PowerDifference { .. } => "power_difference",
        }
    }

    pub fn natural_domain(&self) -> Interval {
        match self {
            CatalogFn::Log => Interval::positive(),
            CatalogFn::XLogX => Interval::nonnegative(),
            CatalogFn::Exp | CatalogFn::Abs => Interval::real_line(),
            CatalogFn::Tan => Interval::open(-FRAC_PI_2, FRAC_PI_2),
            CatalogFn::PowerDifference { .. } => Interval::closed(0.0, 2.0),
        }
    }

    pub(crate) fn value(&self, x: f64) -> f64 {
        match *self {
            CatalogFn::Log => x.ln(),
            CatalogFn::XLogX => {
                if x == 0.0 {
                    0.0
                } else {
                    x * x.ln()
                }
            }
            CatalogFn::Exp => x.exp(),
            CatalogFn::Tan => x.tan(),
            CatalogFn::Abs => x.abs(),
            CatalogFn::PowerDifference { alpha } => x.powf(alpha) - (2.0 - x).powf(alpha),
        }
    }

    pub(crate) fn jet(&self, u: &Jet) -> Result<Jet, ExprError> {
        if u.order() == 0 {
            return Ok(Jet::constant(self.value(u.value()), 0));
        }
        Ok(match *self {
            CatalogFn::Log => u.ln(),
            CatalogFn::XLogX => u.mul(&u.ln()),
            CatalogFn::Exp => u.exp(),
            CatalogFn::Tan => u.tan(),
            CatalogFn::Abs => return Err(ExprError::NoSymbolicRule(self.name())),
            CatalogFn::PowerDifference { alpha } => {
                let other = u.scale(-1.0).add_const(2.0);
                u.powf(alpha).sub(&other.powf(alpha))
            }
        })
    }

    pub(crate) fn complex(&self, z: Complex<f64>) -> Result<Complex<f64>, ExprError> {
        Ok(match *self {
            CatalogFn::Log => z.ln(),
            CatalogFn::XLogX => z * z.ln(),
            CatalogFn::Exp => z.exp(),
            CatalogFn::Tan => z.tan(),
            CatalogFn::Abs => return Err(ExprError::UnsupportedNode(self.name())),
            CatalogFn::PowerDifference { alpha } => {
                z.powf(alpha) - (Complex::new(2.0, 0.0) - z).powf(alpha)
            }
        })
    }
}
