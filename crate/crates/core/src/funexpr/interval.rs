use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ExprError;

/// Default length of the finite window used when an unbounded interval has to
/// be sampled.
pub const DEFAULT_WINDOW_LEN: f64 = 20.0;

/// A non-degenerate real interval, possibly unbounded on either side.
///
/// Closed flags are only meaningful for finite endpoints; an infinite endpoint
/// is always open.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
    lo_closed: bool,
    hi_closed: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Result<Self, ExprError> {
        if lo.is_nan() || hi.is_nan() {
            return Err(ExprError::InvalidInterval("NaN endpoint".into()));
        }
        if !(lo < hi) {
            return Err(ExprError::InvalidInterval(format!(
                "degenerate interval with lo = {lo}, hi = {hi}"
            )));
        }
        if lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(ExprError::InvalidInterval("endpoint on the wrong side".into()));
        }
        if (lo_closed && !lo.is_finite()) || (hi_closed && !hi.is_finite()) {
            return Err(ExprError::InvalidInterval(
                "an infinite endpoint cannot be closed".into(),
            ));
        }
        Ok(Self { lo, hi, lo_closed, hi_closed })
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, false, false).expect("valid open interval")
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, true, true).expect("valid closed interval")
    }

    pub fn real_line() -> Self {
        Self::open(f64::NEG_INFINITY, f64::INFINITY)
    }

    /// `(0, ∞)`
    pub fn positive() -> Self {
        Self::open(0.0, f64::INFINITY)
    }

    /// `[0, ∞)`
    pub fn nonnegative() -> Self {
        Self::new(0.0, f64::INFINITY, true, false).expect("valid interval")
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn lo_closed(&self) -> bool {
        self.lo_closed
    }

    pub fn hi_closed(&self) -> bool {
        self.hi_closed
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lo < x || (self.lo_closed && x == self.lo))
            && (x < self.hi || (self.hi_closed && x == self.hi))
    }

    pub fn closure_contains(&self, x: f64) -> bool {
        x.is_finite() && self.lo <= x && x <= self.hi
    }

    pub fn is_interior(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    /// True when `x` is a finite endpoint, whether or not it is included.
    pub fn is_endpoint(&self, x: f64) -> bool {
        x.is_finite() && (x == self.lo || x == self.hi)
    }

    /// True when `x` is a finite endpoint that does not belong to the interval.
    pub fn excludes_endpoint(&self, x: f64) -> bool {
        self.is_endpoint(x) && !self.contains(x)
    }

    /// `other ⊆ self`
    pub fn contains_interval(&self, other: &Interval) -> bool {
        let lo_ok = self.lo < other.lo || (self.lo == other.lo && (self.lo_closed || !other.lo_closed));
        let hi_ok = other.hi < self.hi || (self.hi == other.hi && (self.hi_closed || !other.hi_closed));
        lo_ok && hi_ok
    }

    /// The interval with `x` removed. Only endpoints can be removed; an interior
    /// point leaves the interval unchanged (removable singularities are handled by
    /// the caller).
    pub fn without_point(&self, x: f64) -> Result<Self, ExprError> {
        let mut out = *self;
        if x == self.lo {
            out.lo_closed = false;
        }
        if x == self.hi {
            out.hi_closed = false;
        }
        Ok(out)
    }

    pub fn with_closed_ends(&self, lo_closed: bool, hi_closed: bool) -> Result<Self, ExprError> {
        Self::new(self.lo, self.hi, lo_closed, hi_closed)
    }

    /// A bounded sub-interval for sampling: the interval itself when bounded,
    /// otherwise a window of length `len` anchored at the finite end (or centred
    /// at 0 for the whole line).
    pub fn window(&self, len: f64) -> Interval {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => *self,
            (true, false) => Interval::new(self.lo, self.lo + len, self.lo_closed, true).unwrap(),
            (false, true) => Interval::new(self.hi - len, self.hi, true, self.hi_closed).unwrap(),
            (false, false) => Interval::closed(-len / 2.0, len / 2.0),
        }
    }

    /// Finite bounds of [`Interval::window`] pulled inwards by `rel` times the
    /// window width at both ends.
    pub fn shrunk_bounds(&self, len: f64, rel: f64) -> (f64, f64) {
        let w = self.window(len);
        let d = rel * w.width();
        (w.lo + d, w.hi - d)
    }

    /// Scan grid of `n` points inside the interval.
    ///
    /// Bounded intervals get a uniform grid with excluded endpoints dropped.
    /// Unbounded directions are covered with offsets log-spaced over
    /// `[1e-6, 1e6]` so that both the neighbourhood of a finite endpoint and the
    /// far field are visited.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let n = n.max(2);
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => {
                let extra = (!self.lo_closed) as usize + (!self.hi_closed) as usize;
                let m = n + extra;
                let mut pts: Vec<f64> = (0..m)
                    .map(|k| {
                        let t = k as f64 / (m - 1) as f64;
                        if k == m - 1 {
                            self.hi
                        } else {
                            self.lo + t * (self.hi - self.lo)
                        }
                    })
                    .collect();
                if !self.hi_closed {
                    pts.pop();
                }
                if !self.lo_closed {
                    pts.remove(0);
                }
                pts
            }
            (true, false) => {
                let mut pts: Vec<f64> = log_offsets(n).into_iter().map(|s| self.lo + s).collect();
                if self.lo_closed {
                    pts[0] = self.lo;
                }
                pts
            }
            (false, true) => {
                let mut pts: Vec<f64> = log_offsets(n).into_iter().map(|s| self.hi - s).rev().collect();
                if self.hi_closed {
                    let last = pts.len() - 1;
                    pts[last] = self.hi;
                }
                pts
            }
            (false, false) => {
                let half = log_offsets(n / 2);
                let mut pts: Vec<f64> = half.iter().rev().map(|s| -s).collect();
                pts.push(0.0);
                pts.extend(half.iter().copied());
                pts
            }
        }
    }
}

fn log_offsets(n: usize) -> Vec<f64> {
    let n = n.max(2);
    let (a, b) = (-6.0f64, 6.0f64);
    (0..n)
        .map(|k| 10f64.powf(a + (b - a) * k as f64 / (n - 1) as f64))
        .collect()
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_closed { '[' } else { '(' };
        let r = if self.hi_closed { ']' } else { ')' };
        let show = |x: f64| {
            if x == f64::INFINITY {
                "inf".to_string()
            } else if x == f64::NEG_INFINITY {
                "-inf".to_string()
            } else {
                format!("{x}")
            }
        };
        write!(f, "{l}{}, {}{r}", show(self.lo), show(self.hi))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EndpointJson {
    Number(f64),
    Text(String),
}

impl EndpointJson {
    fn from_value(x: f64) -> Self {
        if x == f64::INFINITY {
            EndpointJson::Text("inf".into())
        } else if x == f64::NEG_INFINITY {
            EndpointJson::Text("-inf".into())
        } else {
            EndpointJson::Number(x)
        }
    }

    fn value(&self) -> Result<f64, String> {
        match self {
            EndpointJson::Number(x) => Ok(*x),
            EndpointJson::Text(s) => match s.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(format!("unknown endpoint sentinel {other:?}")),
            },
        }
    }
}

#[derive(Serialize, Deserialize)]
struct IntervalJson {
    lo: EndpointJson,
    hi: EndpointJson,
    #[serde(default)]
    lo_closed: bool,
    #[serde(default)]
    hi_closed: bool,
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        IntervalJson {
            lo: EndpointJson::from_value(self.lo),
            hi: EndpointJson::from_value(self.hi),
            lo_closed: self.lo_closed,
            hi_closed: self.hi_closed,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = IntervalJson::deserialize(d)?;
        let lo = raw.lo.value().map_err(serde::de::Error::custom)?;
        let hi = raw.hi.value().map_err(serde::de::Error::custom)?;
        Interval::new(lo, hi, raw.lo_closed, raw.hi_closed).map_err(serde::de::Error::custom)
    }
}
