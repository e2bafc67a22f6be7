//! Finite atomic measures and the three integral representations built on
//! Cauchy transforms: operator monotone ([`OmRep`]), operator convex
//! ([`OcRep`]) and strongly operator convex ([`SocRep`]).

mod poisson;

use nalgebra::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::funexpr::jet::Jet;
use crate::funexpr::Interval;

pub use poisson::{recover_atom_weight, PoissonRecovery};

type C64 = Complex<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("atom at {r} has negative weight {w}")]
    NegativeWeight { r: f64, w: f64 },
    #[error("atom data must be finite, got ({r}, {w})")]
    NonFinite { r: f64, w: f64 },
    #[error("two atoms share the location {r}")]
    DuplicateAtom { r: f64 },
    #[error("atom at {r} lies inside the interval {interval}")]
    AtomInsideInterval { r: f64, interval: Interval },
    #[error("atom at {r} is on the wrong side of {interval}")]
    WrongSide { r: f64, interval: Interval },
    #[error("linear coefficient must be non-negative, got {0}")]
    NegativeLeading(f64),
    #[error("center {x0} is not admissible for {interval}")]
    BadCenter { x0: f64, interval: Interval },
    #[error("{x} is outside the domain {interval}")]
    Domain { x: f64, interval: Interval },
    #[error("an atom sits at the center {x0}")]
    AtomAtX0 { x0: f64 },
    #[error("{b} is not a finite excluded endpoint of {interval}")]
    NotEndpoint { b: f64, interval: Interval },
    #[error("atom at {r} is not positive")]
    NegativeAtom { r: f64 },
    #[error("square substitution needs an empty left measure")]
    NonzeroMuMinus,
    #[error("square substitution needs a zero quadratic coefficient, got {0}")]
    NonzeroQuadratic(f64),
    #[error("square substitution needs the center at 0, got {0}")]
    CenterNotZero(f64),
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("window boundary lies within {gap} of the atom at {r}")]
    WindowContainsPole { r: f64, gap: f64 },
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
}

/// A point mass `w·δ_r`. Serialized as `[r, w]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64)", into = "(f64, f64)")]
pub struct Atom {
    pub r: f64,
    pub w: f64,
}

impl Atom {
    pub fn new(r: f64, w: f64) -> Self {
        Atom { r, w }
    }
}

impl From<(f64, f64)> for Atom {
    fn from((r, w): (f64, f64)) -> Self {
        Atom { r, w }
    }
}

impl From<Atom> for (f64, f64) {
    fn from(a: Atom) -> Self {
        (a.r, a.w)
    }
}

/// Finite positive measure, atoms sorted by location.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
}

impl DiscreteMeasure {
    pub fn new(mut atoms: Vec<Atom>) -> Result<Self, MeasureError> {
        for a in &atoms {
            if !a.r.is_finite() || !a.w.is_finite() {
                return Err(MeasureError::NonFinite { r: a.r, w: a.w });
            }
            if a.w < 0.0 {
                return Err(MeasureError::NegativeWeight { r: a.r, w: a.w });
            }
        }
        atoms.sort_by(|a, b| a.r.total_cmp(&b.r));
        if let Some(p) = atoms.windows(2).find(|p| p[0].r == p[1].r) {
            return Err(MeasureError::DuplicateAtom { r: p[0].r });
        }
        Ok(DiscreteMeasure { atoms })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.w).sum()
    }

    /// Weight of the atom at exactly `r`, or 0.
    pub fn mass_at(&self, r: f64) -> f64 {
        self.atoms.iter().find(|a| a.r == r).map_or(0.0, |a| a.w)
    }
}

fn check_outside(mu: &DiscreteMeasure, interval: &Interval) -> Result<(), MeasureError> {
    match mu.atoms.iter().find(|a| interval.contains(a.r)) {
        Some(a) => Err(MeasureError::AtomInsideInterval { r: a.r, interval: *interval }),
        None => Ok(()),
    }
}

fn check_right(mu: &DiscreteMeasure, interval: &Interval) -> Result<(), MeasureError> {
    check_outside(mu, interval)?;
    match mu.atoms.iter().find(|a| a.r < interval.hi()) {
        Some(a) => Err(MeasureError::WrongSide { r: a.r, interval: *interval }),
        None => Ok(()),
    }
}

fn check_left(mu: &DiscreteMeasure, interval: &Interval) -> Result<(), MeasureError> {
    check_outside(mu, interval)?;
    match mu.atoms.iter().find(|a| a.r > interval.lo()) {
        Some(a) => Err(MeasureError::WrongSide { r: a.r, interval: *interval }),
        None => Ok(()),
    }
}

fn check_leading(a: f64) -> Result<(), MeasureError> {
    if a >= 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(MeasureError::NegativeLeading(a))
    }
}

fn check_domain(x: f64, interval: &Interval) -> Result<(), MeasureError> {
    if interval.contains(x) {
        Ok(())
    } else {
        Err(MeasureError::Domain { x, interval: *interval })
    }
}

/// `1/(r − u)` as a jet.
fn cauchy_jet(r: f64, u: &Jet) -> Jet {
    u.scale(-1.0).add_const(r).recip()
}

/// `f(x) = a·x + b + Σ w·(1/(r − x) − 1/(r − x0))`
#[derive(Clone, Debug, PartialEq)]
pub struct OmRep {
    a: f64,
    b: f64,
    x0: f64,
    mu: DiscreteMeasure,
    interval: Interval,
}

impl OmRep {
    pub fn new(a: f64, b: f64, x0: f64, mu: DiscreteMeasure, interval: Interval) -> Result<Self, MeasureError> {
        check_leading(a)?;
        if !interval.contains(x0) {
            return Err(MeasureError::BadCenter { x0, interval });
        }
        check_outside(&mu, &interval)?;
        Ok(OmRep { a, b, x0, mu, interval })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn mu(&self) -> &DiscreteMeasure {
        &self.mu
    }
    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    pub fn eval(&self, x: f64) -> Result<f64, MeasureError> {
        check_domain(x, &self.interval)?;
        Ok(self.formula(x))
    }

    pub(crate) fn formula(&self, x: f64) -> f64 {
        let s: f64 = self.mu.atoms.iter().map(|m| m.w * (1.0 / (m.r - x) - 1.0 / (m.r - self.x0))).sum();
        self.a * x + self.b + s
    }

    pub(crate) fn formula_complex(&self, z: C64) -> C64 {
        let one = C64::new(1.0, 0.0);
        let s: C64 = self
            .mu
            .atoms
            .iter()
            .map(|m| (one / (m.r - z) - 1.0 / (m.r - self.x0)) * m.w)
            .sum();
        z * self.a + self.b + s
    }

    pub(crate) fn formula_jet(&self, u: &Jet) -> Jet {
        let mut acc = u.scale(self.a).add_const(self.b);
        for m in &self.mu.atoms {
            acc = acc.add(&cauchy_jet(m.r, u).add_const(-1.0 / (m.r - self.x0)).scale(m.w));
        }
        acc
    }
}

/// `f(x) = a·x² + b·x + c + Σ₊ w·(x−x0)²/((r−x)(r−x0)²) + Σ₋ w·(x−x0)²/((x−r)(x0−r)²)`
#[derive(Clone, Debug, PartialEq)]
pub struct OcRep {
    a: f64,
    b: f64,
    c: f64,
    x0: f64,
    mu_plus: DiscreteMeasure,
    mu_minus: DiscreteMeasure,
    interval: Interval,
}

impl OcRep {
    pub fn new(
        a: f64,
        b: f64,
        c: f64,
        x0: f64,
        mu_plus: DiscreteMeasure,
        mu_minus: DiscreteMeasure,
        interval: Interval,
    ) -> Result<Self, MeasureError> {
        check_leading(a)?;
        if !interval.is_interior(x0) {
            return Err(MeasureError::BadCenter { x0, interval });
        }
        check_right(&mu_plus, &interval)?;
        check_left(&mu_minus, &interval)?;
        Ok(OcRep { a, b, c, x0, mu_plus, mu_minus, interval })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn mu_plus(&self) -> &DiscreteMeasure {
        &self.mu_plus
    }
    pub fn mu_minus(&self) -> &DiscreteMeasure {
        &self.mu_minus
    }
    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    pub fn eval(&self, x: f64) -> Result<f64, MeasureError> {
        check_domain(x, &self.interval)?;
        Ok(self.formula(x))
    }

    pub(crate) fn formula(&self, x: f64) -> f64 {
        let d2 = (x - self.x0).powi(2);
        let plus: f64 = self.mu_plus.atoms.iter().map(|m| m.w * d2 / ((m.r - x) * (m.r - self.x0).powi(2))).sum();
        let minus: f64 = self.mu_minus.atoms.iter().map(|m| m.w * d2 / ((x - m.r) * (self.x0 - m.r).powi(2))).sum();
        self.a * x * x + self.b * x + self.c + plus + minus
    }

    pub(crate) fn formula_complex(&self, z: C64) -> C64 {
        let d2 = (z - self.x0).powi(2);
        let plus: C64 = self.mu_plus.atoms.iter().map(|m| d2 * m.w / ((m.r - z) * (m.r - self.x0).powi(2))).sum();
        let minus: C64 = self.mu_minus.atoms.iter().map(|m| d2 * m.w / ((z - m.r) * (self.x0 - m.r).powi(2))).sum();
        z * z * self.a + z * self.b + self.c + plus + minus
    }

    pub(crate) fn formula_jet(&self, u: &Jet) -> Jet {
        let d = u.add_const(-self.x0);
        let d2 = d.mul(&d);
        let mut acc = u.mul(u).scale(self.a).add(&u.scale(self.b)).add_const(self.c);
        for m in &self.mu_plus.atoms {
            let t = d2.mul(&cauchy_jet(m.r, u)).scale(m.w / (m.r - self.x0).powi(2));
            acc = acc.add(&t);
        }
        for m in &self.mu_minus.atoms {
            let t = d2.mul(&cauchy_jet(m.r, u)).scale(-m.w / (self.x0 - m.r).powi(2));
            acc = acc.add(&t);
        }
        acc
    }
}

/// `f(x) = a + Σ₊ w/(r − x) + Σ₋ w/(x − r)`
#[derive(Clone, Debug, PartialEq)]
pub struct SocRep {
    a: f64,
    mu_plus: DiscreteMeasure,
    mu_minus: DiscreteMeasure,
    interval: Interval,
}

impl SocRep {
    pub fn new(
        a: f64,
        mu_plus: DiscreteMeasure,
        mu_minus: DiscreteMeasure,
        interval: Interval,
    ) -> Result<Self, MeasureError> {
        check_leading(a)?;
        check_right(&mu_plus, &interval)?;
        check_left(&mu_minus, &interval)?;
        Ok(SocRep { a, mu_plus, mu_minus, interval })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn mu_plus(&self) -> &DiscreteMeasure {
        &self.mu_plus
    }
    pub fn mu_minus(&self) -> &DiscreteMeasure {
        &self.mu_minus
    }
    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    pub fn eval(&self, x: f64) -> Result<f64, MeasureError> {
        check_domain(x, &self.interval)?;
        Ok(self.formula(x))
    }

    pub(crate) fn formula(&self, x: f64) -> f64 {
        let plus: f64 = self.mu_plus.atoms.iter().map(|m| m.w / (m.r - x)).sum();
        let minus: f64 = self.mu_minus.atoms.iter().map(|m| m.w / (x - m.r)).sum();
        self.a + plus + minus
    }

    pub(crate) fn formula_complex(&self, z: C64) -> C64 {
        let plus: C64 = self.mu_plus.atoms.iter().map(|m| C64::new(m.w, 0.0) / (m.r - z)).sum();
        let minus: C64 = self.mu_minus.atoms.iter().map(|m| C64::new(m.w, 0.0) / (z - m.r)).sum();
        plus + minus + self.a
    }

    pub(crate) fn formula_jet(&self, u: &Jet) -> Jet {
        let mut acc = Jet::constant(self.a, u.order());
        for m in &self.mu_plus.atoms {
            acc = acc.add(&cauchy_jet(m.r, u).scale(m.w));
        }
        for m in &self.mu_minus.atoms {
            acc = acc.add(&cauchy_jet(m.r, u).scale(-m.w));
        }
        acc
    }
}

/// Difference quotient of an operator monotone representation at `x0`,
/// as a strongly operator convex representation: every atom is reweighted
/// by `1/|x0 − r|` and lands on the side of the interval it came from.
pub fn om_to_soc(rep: &OmRep, x0: f64) -> Result<SocRep, MeasureError> {
    let interval = *rep.interval();
    if !interval.closure_contains(x0) || !x0.is_finite() {
        return Err(MeasureError::BadCenter { x0, interval });
    }
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for m in rep.mu().atoms() {
        if m.r == x0 {
            return Err(MeasureError::AtomAtX0 { x0 });
        }
        let atom = Atom::new(m.r, m.w / (x0 - m.r).abs());
        if m.r >= interval.hi() {
            plus.push(atom);
        } else {
            minus.push(atom);
        }
    }
    let domain = interval.without_point(x0).map_err(|_| MeasureError::BadCenter { x0, interval })?;
    SocRep::new(rep.a(), DiscreteMeasure::new(plus)?, DiscreteMeasure::new(minus)?, domain)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointSide {
    Left,
    Right,
}

/// `f̃(x) = (x − b)·g(x)` for a strongly operator convex `g`, extended to the
/// excluded endpoint `b`, together with the mass `delta` of `g` at `b`.
#[derive(Clone, Debug, PartialEq)]
pub struct EndpointExtension {
    pub b: f64,
    pub delta: f64,
    pub side: EndpointSide,
    /// `f̃(b)`: `−delta` at a right endpoint, `+delta` at a left one.
    pub value_at_b: f64,
    /// `f̃` as an operator monotone representation centered at `b`, on the
    /// interval closed at `b`.
    pub extended: OmRep,
    source: SocRep,
}

impl EndpointExtension {
    /// `(f̃(x) − f̃(b)) / (x − b)`
    pub fn lhs(&self, x: f64) -> Result<f64, MeasureError> {
        Ok((self.extended.eval(x)? - self.value_at_b) / (x - self.b))
    }

    /// `g(x) − delta/|b − x|`
    pub fn rhs(&self, x: f64) -> Result<f64, MeasureError> {
        Ok(self.source.eval(x)? - self.delta / (self.b - x).abs())
    }

    pub fn residual(&self, x: f64) -> Result<f64, MeasureError> {
        Ok((self.lhs(x)? - self.rhs(x)?).abs())
    }
}

pub fn extend_at_endpoint(rep: &SocRep, b: f64) -> Result<EndpointExtension, MeasureError> {
    let interval = *rep.interval();
    if !b.is_finite() || !interval.excludes_endpoint(b) {
        return Err(MeasureError::NotEndpoint { b, interval });
    }
    let side = if b == interval.hi() { EndpointSide::Right } else { EndpointSide::Left };
    let delta = match side {
        EndpointSide::Right => rep.mu_plus().mass_at(b),
        EndpointSide::Left => rep.mu_minus().mass_at(b),
    };
    let value_at_b = match side {
        EndpointSide::Right => -delta,
        EndpointSide::Left => delta,
    };
    let atoms: Vec<Atom> = rep
        .mu_plus()
        .atoms()
        .iter()
        .chain(rep.mu_minus().atoms())
        .filter(|m| m.r != b)
        .map(|m| Atom::new(m.r, m.w * (m.r - b).abs()))
        .collect();
    let closed = match side {
        EndpointSide::Right => interval.with_closed_ends(interval.lo_closed(), true),
        EndpointSide::Left => interval.with_closed_ends(true, interval.hi_closed()),
    }
    .map_err(|_| MeasureError::NotEndpoint { b, interval })?;
    let extended = OmRep::new(rep.a(), value_at_b - rep.a() * b, b, DiscreteMeasure::new(atoms)?, closed)?;
    Ok(EndpointExtension { b, delta, side, value_at_b, extended, source: rep.clone() })
}

/// `g(x) = φ(x²)` for an operator convex `φ` centered at 0 with no left mass,
/// written with the symmetric measure `ν` on both sides of the new interval.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareSubstitution {
    /// Coefficient of `x²`.
    pub quadratic: f64,
    pub constant: f64,
    pub nu_plus: DiscreteMeasure,
    pub nu_minus: DiscreteMeasure,
    pub interval: Interval,
}

impl SquareSubstitution {
    /// As an operator convex representation centered at 0; requires a
    /// non-negative quadratic coefficient.
    pub fn to_oc_rep(&self) -> Result<OcRep, MeasureError> {
        OcRep::new(
            self.quadratic,
            0.0,
            self.constant,
            0.0,
            self.nu_plus.clone(),
            self.nu_minus.clone(),
            self.interval,
        )
    }

    pub fn eval(&self, x: f64) -> Result<f64, MeasureError> {
        check_domain(x, &self.interval)?;
        let x2 = x * x;
        let plus: f64 = self.nu_plus.atoms().iter().map(|m| m.w * x2 / ((m.r - x) * m.r * m.r)).sum();
        let minus: f64 = self.nu_minus.atoms().iter().map(|m| m.w * x2 / ((x - m.r) * m.r * m.r)).sum();
        Ok(self.quadratic * x2 + self.constant + plus + minus)
    }
}

pub fn substitute_square(phi: &OcRep) -> Result<SquareSubstitution, MeasureError> {
    if phi.x0() != 0.0 {
        return Err(MeasureError::CenterNotZero(phi.x0()));
    }
    if !phi.mu_minus().is_empty() {
        return Err(MeasureError::NonzeroMuMinus);
    }
    if phi.a() != 0.0 {
        return Err(MeasureError::NonzeroQuadratic(phi.a()));
    }
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    let mut shift = 0.0;
    for m in phi.mu_plus().atoms() {
        if m.r <= 0.0 {
            return Err(MeasureError::NegativeAtom { r: m.r });
        }
        let s = m.r.sqrt();
        plus.push(Atom::new(s, m.w / (2.0 * s)));
        minus.push(Atom::new(-s, m.w / (2.0 * s)));
        shift += m.w / (m.r * m.r);
    }
    let d = phi.interval();
    let root = d.hi().sqrt();
    let interval = Interval::new(-root, root, d.hi_closed(), d.hi_closed())
        .map_err(|_| MeasureError::BadCenter { x0: 0.0, interval: *d })?;
    Ok(SquareSubstitution {
        quadratic: phi.b() - shift,
        constant: phi.c(),
        nu_plus: DiscreteMeasure::new(plus)?,
        nu_minus: DiscreteMeasure::new(minus)?,
        interval,
    })
}

/// Wire format shared by the three representations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureJson {
    #[serde(default)]
    pub a: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(default)]
    pub atoms_plus: Vec<Atom>,
    #[serde(default)]
    pub atoms_minus: Vec<Atom>,
    pub interval: Interval,
}

impl MeasureJson {
    /// Both atom lists form the single measure of the monotone representation.
    pub fn to_om(&self) -> Result<OmRep, MeasureError> {
        let atoms = self.atoms_plus.iter().chain(&self.atoms_minus).copied().collect();
        OmRep::new(
            self.a,
            self.b.ok_or(MeasureError::MissingField("b"))?,
            self.x0.ok_or(MeasureError::MissingField("x0"))?,
            DiscreteMeasure::new(atoms)?,
            self.interval,
        )
    }

    pub fn to_oc(&self) -> Result<OcRep, MeasureError> {
        OcRep::new(
            self.a,
            self.b.ok_or(MeasureError::MissingField("b"))?,
            self.c.ok_or(MeasureError::MissingField("c"))?,
            self.x0.ok_or(MeasureError::MissingField("x0"))?,
            DiscreteMeasure::new(self.atoms_plus.clone())?,
            DiscreteMeasure::new(self.atoms_minus.clone())?,
            self.interval,
        )
    }

    pub fn to_soc(&self) -> Result<SocRep, MeasureError> {
        SocRep::new(
            self.a,
            DiscreteMeasure::new(self.atoms_plus.clone())?,
            DiscreteMeasure::new(self.atoms_minus.clone())?,
            self.interval,
        )
    }
}

impl From<&OmRep> for MeasureJson {
    fn from(rep: &OmRep) -> Self {
        let (plus, minus) = rep.mu().atoms().iter().partition(|m| m.r >= rep.interval().hi());
        MeasureJson {
            a: rep.a(),
            b: Some(rep.b()),
            c: None,
            x0: Some(rep.x0()),
            atoms_plus: plus,
            atoms_minus: minus,
            interval: *rep.interval(),
        }
    }
}

impl From<&OcRep> for MeasureJson {
    fn from(rep: &OcRep) -> Self {
        MeasureJson {
            a: rep.a(),
            b: Some(rep.b()),
            c: Some(rep.c()),
            x0: Some(rep.x0()),
            atoms_plus: rep.mu_plus().atoms().to_vec(),
            atoms_minus: rep.mu_minus().atoms().to_vec(),
            interval: *rep.interval(),
        }
    }
}

impl From<&SocRep> for MeasureJson {
    fn from(rep: &SocRep) -> Self {
        MeasureJson {
            a: rep.a(),
            b: None,
            c: None,
            x0: None,
            atoms_plus: rep.mu_plus().atoms().to_vec(),
            atoms_minus: rep.mu_minus().atoms().to_vec(),
            interval: *rep.interval(),
        }
    }
}
