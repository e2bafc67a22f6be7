//! Randomized and deterministic certifiers for the three function classes.
//!
//! A pass is statistical: it records the trial budget and seed so that any
//! run can be reproduced exactly. A fail always carries a witness that can be
//! replayed against the function.

mod criteria;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::funexpr::{ExprError, FunctionExpr, Interval, ScanOutcome, Sign, DEFAULT_WINDOW_LEN};
use crate::matcalc::{rand_hermitian, rand_ordered_pair, rand_projection, trial_rng, HermitianMatrix, MatError};

pub use criteria::{
    davis_gap, halfplane_gap, jensen_gap, loewner_gap, loewner_matrix, monotone_gap, strong_gap, Criterion, Gap,
    Witness,
};

/// Absolute floor for `Im f(z)` in the half-plane test.
pub const HALFPLANE_FLOOR: f64 = -1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("node {0} appears more than once")]
    DuplicateNodes(f64),
    #[error("node {0} is not interior to the domain")]
    NodeOutsideDomain(f64),
    #[error("witness is missing `{0}`")]
    IncompleteWitness(&'static str),
    #[error("{0}")]
    Eval(String),
    #[error(transparent)]
    Matrix(#[from] MatError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Property {
    #[serde(rename = "OM")]
    Om,
    #[serde(rename = "OC")]
    Oc,
    #[serde(rename = "SOC")]
    Soc,
    HalfPlane,
    LoewnerOrderN,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneGrid {
    pub re_points: usize,
    pub im_points: usize,
    pub im_min: f64,
    pub im_max: f64,
    /// Real-part range; defaults to the domain window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub re_range: Option<(f64, f64)>,
    /// Additional sample points `[re, im]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra: Vec<[f64; 2]>,
}

impl Default for HalfPlaneGrid {
    fn default() -> Self {
        HalfPlaneGrid { re_points: 50, im_points: 50, im_min: 1e-3, im_max: 10.0, re_range: None, extra: Vec::new() }
    }
}

impl HalfPlaneGrid {
    pub fn points(&self, domain: &Interval, window_len: f64) -> Vec<[f64; 2]> {
        let (lo, hi) = self.re_range.unwrap_or_else(|| {
            let w = domain.window(window_len);
            (w.lo(), w.hi())
        });
        let res: Vec<f64> = (0..self.re_points)
            .map(|k| if self.re_points == 1 { 0.5 * (lo + hi) } else { lo + (hi - lo) * k as f64 / (self.re_points - 1) as f64 })
            .collect();
        let (a, b) = (self.im_min.ln(), self.im_max.ln());
        let ims: Vec<f64> = (0..self.im_points)
            .map(|k| if self.im_points == 1 { self.im_min } else { (a + (b - a) * k as f64 / (self.im_points - 1) as f64).exp() })
            .collect();
        let mut pts: Vec<[f64; 2]> = ims.iter().flat_map(|&y| res.iter().map(move |&x| [x, y])).collect();
        pts.extend(self.extra.iter().copied());
        pts
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CertifyConfig {
    pub trials: usize,
    pub dims: Vec<usize>,
    /// Relative tolerance: a gap passes when `min_eig ≥ −tol·(1 + scale)`.
    pub tol: f64,
    pub seed: u64,
    /// Random `t` values per Jensen trial, on top of `t = 1/2`.
    pub t_samples: usize,
    pub loewner_sets: usize,
    pub loewner_sizes: (usize, usize),
    /// Fraction of the window trimmed at each end before drawing nodes.
    pub loewner_shrink: f64,
    pub halfplane: HalfPlaneGrid,
    /// Sampling window length for unbounded intervals.
    pub window_len: f64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            trials: 300,
            dims: (2..=8).collect(),
            tol: 1e-9,
            seed: 0,
            t_samples: 8,
            loewner_sets: 64,
            loewner_sizes: (2, 8),
            loewner_shrink: 0.01,
            halfplane: HalfPlaneGrid::default(),
            window_len: DEFAULT_WINDOW_LEN,
        }
    }
}

impl CertifyConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_dims(mut self, dims: impl IntoIterator<Item = usize>) -> Self {
        self.dims = dims.into_iter().collect();
        self
    }

    fn validate(&self) -> Result<(), String> {
        if self.trials == 0 {
            return Err("trials must be at least 1".into());
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err("dims must be a nonempty list of positive sizes".into());
        }
        Ok(())
    }

    fn pick_dim(&self, rng: &mut ChaCha8Rng) -> usize {
        self.dims[rng.random_range(0..self.dims.len())]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub property: Property,
    pub verdict: Verdict,
    pub trials: usize,
    pub tolerance: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
    /// Certificate of `−1/f` for operator convexity, attached by the strong test.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_check: Option<Box<Certificate>>,
}

impl Certificate {
    fn new(property: Property, cfg: &CertifyConfig, trials: usize) -> Self {
        Certificate {
            property,
            verdict: Verdict::Pass,
            trials,
            tolerance: cfg.tol,
            seed: cfg.seed,
            witness: None,
            diagnostic: None,
            cross_check: None,
        }
    }

    fn inconclusive(property: Property, cfg: &CertifyConfig, diagnostic: String) -> Self {
        let mut c = Self::new(property, cfg, 0);
        c.verdict = Verdict::Inconclusive;
        c.diagnostic = Some(diagnostic);
        c
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }
}

enum Trial {
    Pass,
    Fail(Witness),
    Error(String),
}

impl Trial {
    fn from_gap(g: Result<Gap, ClassifyError>, tol: f64, witness: impl FnOnce(f64) -> Witness) -> Self {
        match g {
            Ok(g) if g.passes(tol) => Trial::Pass,
            Ok(g) => Trial::Fail(witness(g.min_eig)),
            Err(e) => Trial::Error(e.to_string()),
        }
    }
}

/// Run `count` independent trials in parallel and keep the first non-pass by
/// index, so the outcome does not depend on scheduling.
fn run_trials<F>(property: Property, cfg: &CertifyConfig, count: usize, trial: F) -> Certificate
where
    F: Fn(&mut ChaCha8Rng) -> Trial + Sync,
{
    let outcomes: Vec<Trial> = (0..count)
        .into_par_iter()
        .map(|i| trial(&mut trial_rng(cfg.seed, i as u64)))
        .collect();
    let mut cert = Certificate::new(property, cfg, count);
    for (i, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Trial::Pass => {}
            Trial::Fail(w) => {
                cert.verdict = Verdict::Fail;
                cert.trials = i + 1;
                cert.witness = Some(w);
                return cert;
            }
            Trial::Error(msg) => {
                cert.verdict = Verdict::Inconclusive;
                cert.trials = i + 1;
                cert.diagnostic = Some(format!("trial {i}: {msg}"));
                return cert;
            }
        }
    }
    cert
}

fn precheck(property: Property, f: &FunctionExpr, interval: &Interval, cfg: &CertifyConfig) -> Option<Certificate> {
    if let Err(msg) = cfg.validate() {
        return Some(Certificate::inconclusive(property, cfg, msg));
    }
    if !f.domain().contains_interval(interval) {
        return Some(Certificate::inconclusive(
            property,
            cfg,
            format!("{interval} is not contained in the domain {}", f.domain()),
        ));
    }
    None
}

/// Operator monotonicity on `interval` through random ordered pairs.
pub fn check_monotone(f: &FunctionExpr, interval: &Interval, cfg: &CertifyConfig) -> Certificate {
    if let Some(c) = precheck(Property::Om, f, interval, cfg) {
        return c;
    }
    run_trials(Property::Om, cfg, cfg.trials, |rng| {
        let n = cfg.pick_dim(rng);
        let (h1, h2) = match rand_ordered_pair(interval, n, cfg.window_len, rng) {
            Ok(pair) => pair,
            Err(e) => return Trial::Error(e.to_string()),
        };
        Trial::from_gap(monotone_gap(f, &h1, &h2), cfg.tol, |min_eig| Witness {
            h1: Some(h1.clone()),
            h2: Some(h2.clone()),
            ..Witness::bare(Criterion::Monotone, min_eig)
        })
    })
}

fn random_rank(n: usize, rng: &mut ChaCha8Rng) -> usize {
    if n <= 1 {
        1
    } else {
        rng.random_range(1..n)
    }
}

/// Operator convexity: the Jensen inequality at `t = 1/2` and random `t`, and
/// the compression inequality for a random projection, in every trial.
pub fn check_convex(f: &FunctionExpr, interval: &Interval, cfg: &CertifyConfig) -> Certificate {
    if let Some(c) = precheck(Property::Oc, f, interval, cfg) {
        return c;
    }
    run_trials(Property::Oc, cfg, cfg.trials, |rng| {
        let n = cfg.pick_dim(rng);
        let h1 = rand_hermitian(interval, n, cfg.window_len, rng);
        let h2 = rand_hermitian(interval, n, cfg.window_len, rng);
        let ts: Vec<f64> = std::iter::once(0.5).chain((0..cfg.t_samples).map(|_| rng.random::<f64>())).collect();
        for t in ts {
            let outcome = Trial::from_gap(jensen_gap(f, &h1, &h2, t), cfg.tol, |min_eig| Witness {
                h1: Some(h1.clone()),
                h2: Some(h2.clone()),
                t: Some(t),
                ..Witness::bare(Criterion::Jensen, min_eig)
            });
            if !matches!(outcome, Trial::Pass) {
                return outcome;
            }
        }
        let h = rand_hermitian(interval, n, cfg.window_len, rng);
        let p = match rand_projection(n, random_rank(n, rng), rng) {
            Ok(p) => p,
            Err(e) => return Trial::Error(e.to_string()),
        };
        Trial::from_gap(davis_gap(f, &h, &p), cfg.tol, |min_eig| Witness {
            h: Some(h.clone()),
            p: Some(p.clone()),
            ..Witness::bare(Criterion::Davis, min_eig)
        })
    })
}

fn strong_trials(f: &FunctionExpr, interval: &Interval, cfg: &CertifyConfig) -> Certificate {
    run_trials(Property::Soc, cfg, cfg.trials, |rng| {
        let n = cfg.pick_dim(rng);
        let h = rand_hermitian(interval, n, cfg.window_len, rng);
        let p = match rand_projection(n, random_rank(n, rng), rng) {
            Ok(p) => p,
            Err(e) => return Trial::Error(e.to_string()),
        };
        Trial::from_gap(strong_gap(f, &h, &p), cfg.tol, |min_eig| Witness {
            h: Some(h.clone()),
            p: Some(p.clone()),
            ..Witness::bare(Criterion::Strong, min_eig)
        })
    })
}

/// Strong operator convexity on `interval`.
///
/// When `f` is positive on the interval, `−1/f` is certified for operator
/// convexity as well; if the two verdicts disagree the result is
/// inconclusive and both reports are kept.
pub fn check_strong(f: &FunctionExpr, interval: &Interval, cfg: &CertifyConfig) -> Certificate {
    if let Some(c) = precheck(Property::Soc, f, interval, cfg) {
        return c;
    }
    let mut cert = strong_trials(f, interval, cfg);
    if cert.verdict == Verdict::Inconclusive {
        return cert;
    }
    let Ok(restricted) = f.restrict(*interval) else {
        return cert;
    };
    if restricted.sign_scan(Sign::Positive) != ScanOutcome::Ok {
        return cert;
    }
    let (neg_recip, _) = FunctionExpr::neg_recip_flagged(&restricted, Sign::Positive);
    let cross = check_convex(&neg_recip, interval, cfg);
    if cross.verdict != cert.verdict {
        cert.diagnostic = Some(format!(
            "strong test says {:?} but -1/f convexity test says {:?}",
            cert.verdict, cross.verdict
        ));
        cert.verdict = Verdict::Inconclusive;
    }
    cert.cross_check = Some(Box::new(cross));
    cert
}

/// Loewner matrix at the given nodes and its smallest eigenvalue.
pub fn check_loewner_order_n(f: &FunctionExpr, nodes: &[f64]) -> Result<(HermitianMatrix, f64), ClassifyError> {
    let l = loewner_matrix(f, nodes)?;
    let m = l.min_eigenvalue();
    Ok((l, m))
}

/// Loewner matrices at `cfg.loewner_sets` random node sets inside a trimmed
/// window of `interval`.
pub fn check_loewner(f: &FunctionExpr, interval: &Interval, cfg: &CertifyConfig) -> Certificate {
    if let Some(c) = precheck(Property::LoewnerOrderN, f, interval, cfg) {
        return c;
    }
    let (lo, hi) = interval.shrunk_bounds(cfg.window_len, cfg.loewner_shrink);
    let (smin, smax) = cfg.loewner_sizes;
    // a separate stream family from the matrix trials
    let lcfg = CertifyConfig { seed: cfg.seed ^ 0x4c4f_4557_4e45_5200, ..cfg.clone() };
    let mut cert = run_trials(Property::LoewnerOrderN, &lcfg, cfg.loewner_sets, |rng| {
        let size = rng.random_range(smin.max(1)..=smax.max(smin.max(1)));
        let mut nodes: Vec<f64> = (0..size).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect();
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        Trial::from_gap(loewner_gap(f, &nodes), cfg.tol, |min_eig| Witness {
            nodes: Some(nodes.clone()),
            ..Witness::bare(Criterion::Loewner, min_eig)
        })
    });
    cert.seed = cfg.seed;
    cert
}

/// `Im f(z) ≥ −1e−10` on the configured grid of the upper half-plane.
/// On failure the witness is the point with the most negative value.
pub fn check_halfplane(f: &FunctionExpr, cfg: &CertifyConfig) -> Certificate {
    let pts = cfg.halfplane.points(&f.domain(), cfg.window_len);
    let mut cert = Certificate::new(Property::HalfPlane, cfg, pts.len());
    cert.tolerance = -HALFPLANE_FLOOR;
    let mut worst: Option<([f64; 2], f64)> = None;
    for z in pts {
        match halfplane_gap(f, z) {
            Ok(g) => {
                if worst.is_none_or(|(_, v)| g.min_eig < v) {
                    worst = Some((z, g.min_eig));
                }
            }
            Err(e) => {
                cert.verdict = Verdict::Inconclusive;
                cert.diagnostic = Some(format!("at {}+{}i: {e}", z[0], z[1]));
                return cert;
            }
        }
    }
    if let Some((z, v)) = worst {
        if v < HALFPLANE_FLOOR {
            cert.verdict = Verdict::Fail;
            cert.witness = Some(Witness { z: Some(z), ..Witness::bare(Criterion::HalfPlane, v) });
        }
    }
    cert
}

/// Certifier for a class label.
pub fn certify(property: Property, f: &FunctionExpr, interval: &Interval, cfg: &CertifyConfig) -> Certificate {
    match property {
        Property::Om => check_monotone(f, interval, cfg),
        Property::Oc => check_convex(f, interval, cfg),
        Property::Soc => check_strong(f, interval, cfg),
        Property::HalfPlane => check_halfplane(f, cfg),
        Property::LoewnerOrderN => check_loewner(f, interval, cfg),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub om: Certificate,
    pub oc: Certificate,
    pub soc: Certificate,
    pub halfplane: Certificate,
    pub loewner: Certificate,
    pub inconsistencies: Vec<String>,
}

impl Classification {
    pub fn certificates(&self) -> [&Certificate; 5] {
        [&self.om, &self.oc, &self.soc, &self.halfplane, &self.loewner]
    }
}

/// All certifiers, plus the expected implications between their verdicts:
/// a strong pass should come with a convex pass, and a monotone pass with a
/// Loewner pass.
pub fn classify_all(f: &FunctionExpr, interval: &Interval, cfg: &CertifyConfig) -> Classification {
    let om = check_monotone(f, interval, cfg);
    let oc = check_convex(f, interval, cfg);
    let soc = check_strong(f, interval, cfg);
    let halfplane = check_halfplane(f, cfg);
    let loewner = check_loewner(f, interval, cfg);
    let mut inconsistencies = Vec::new();
    if soc.passed() && oc.failed() {
        inconsistencies.push("SOC passed but OC failed".to_string());
    }
    if om.passed() && loewner.failed() {
        inconsistencies.push("OM passed but a Loewner matrix is not positive semidefinite".to_string());
    }
    Classification { om, oc, soc, halfplane, loewner, inconsistencies }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funexpr::CatalogFn;

    fn quick() -> CertifyConfig {
        CertifyConfig::default().with_trials(120).with_dims(2..=5)
    }

    #[test]
    fn identity_is_monotone() {
        let c = check_monotone(&FunctionExpr::identity(), &Interval::open(-1.0, 4.0), &quick());
        assert!(c.passed(), "{c:?}");
        assert_eq!(c.trials, 120);
    }

    #[test]
    fn square_is_not_monotone_and_witness_replays() {
        let f = FunctionExpr::power(2.0);
        let c = check_monotone(&f, &Interval::open(0.0, 3.0), &quick());
        assert!(c.failed());
        let w = c.witness.unwrap();
        assert!(w.min_eig < -c.tolerance);
        assert!((w.replay(&f).unwrap().min_eig - w.min_eig).abs() < 1e-10);
        let back: Witness = serde_json::from_str(&serde_json::to_string(&w).unwrap()).unwrap();
        assert!((back.replay(&f).unwrap().min_eig - w.min_eig).abs() < 1e-10);
    }

    #[test]
    fn convexity_examples() {
        let cfg = quick();
        let i = Interval::open(-1.0, 1.0);
        assert!(check_convex(&FunctionExpr::affine(-2.0, 1.0), &i, &cfg).passed());
        assert!(check_convex(&FunctionExpr::power(2.0), &i, &cfg).passed());
        let cube = check_convex(&FunctionExpr::power(3.0), &i, &cfg);
        assert!(cube.failed());
    }

    #[test]
    fn strong_examples() {
        let cfg = quick();
        let recip = check_strong(&FunctionExpr::reciprocal(), &Interval::open(0.1, 10.0), &cfg);
        assert!(recip.passed(), "{recip:?}");
        assert!(recip.cross_check.as_ref().unwrap().passed());
        assert!(check_strong(&FunctionExpr::identity(), &Interval::open(0.0, 2.0), &cfg).failed());
        assert!(check_strong(&FunctionExpr::constant(1.0), &Interval::open(-3.0, 3.0), &cfg).passed());
    }

    #[test]
    fn halfplane_examples() {
        let cfg = CertifyConfig::default();
        assert!(check_halfplane(&FunctionExpr::identity(), &cfg).passed());
        let mut cfg = CertifyConfig::default();
        cfg.halfplane = HalfPlaneGrid { re_points: 1, im_points: 1, im_min: 1.0, im_max: 1.0, re_range: Some((-1.0, -1.0)), extra: vec![] };
        let c = check_halfplane(&FunctionExpr::power(2.0), &cfg);
        assert!(c.failed());
        assert_eq!(c.witness.as_ref().unwrap().z, Some([-1.0, 1.0]));
        assert_eq!(c.witness.unwrap().min_eig, -2.0);
        let abs = check_halfplane(&FunctionExpr::catalog(CatalogFn::Abs), &CertifyConfig::default());
        assert_eq!(abs.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn classify_examples() {
        let cfg = quick();
        let zero = classify_all(&FunctionExpr::constant(0.0), &Interval::open(0.0, 1.0), &cfg);
        assert!(zero.om.passed() && zero.oc.passed() && zero.soc.passed());
        let sqrt = classify_all(&FunctionExpr::power(0.5), &Interval::open(0.0, 4.0), &cfg);
        assert!(sqrt.om.passed() && sqrt.oc.failed() && sqrt.soc.failed(), "{sqrt:?}");
        let recip = classify_all(&FunctionExpr::reciprocal(), &Interval::open(0.0, 10.0), &cfg);
        assert!(recip.om.failed() && recip.soc.passed(), "{recip:?}");
        assert!(recip.inconsistencies.is_empty());
    }

    #[test]
    fn outside_domain_is_inconclusive() {
        let c = check_monotone(&FunctionExpr::power(0.5), &Interval::open(-1.0, 1.0), &quick());
        assert_eq!(c.verdict, Verdict::Inconclusive);
    }
}
