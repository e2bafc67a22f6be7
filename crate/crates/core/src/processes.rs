//! The iterative pipelines built from the transforms.
//!
//! * [`main_cycle`]: difference quotient, negative reciprocal, difference
//!   quotient, repeated; stage classes cycle OM → SOC → OC → OM.
//! * [`star_process`]: difference quotients only; classes alternate OM / SOC.
//! * [`backward_process`]: multiply by a linear factor and shift, negative
//!   reciprocal, multiply again; classes cycle OC → SOC → OM going down.
//!
//! When more stages are requested than points supplied, the point sequence is
//! reused cyclically.

use serde::{Deserialize, Serialize};

use crate::classify::{certify, Certificate, CertifyConfig, Property};
use crate::funexpr::rational::{to_rational, RationalError};
use crate::funexpr::{FunctionExpr, Sign, ScanOutcome};
use crate::transforms::{choose_shift, diff_quotient, mul_linear, neg_reciprocal, neg_reciprocal_of_negative, TransformError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    Main,
    Star,
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    TerminatedZero,
    TerminatedRational,
    Completed,
    Error,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Stage {
    /// Position in the sequence; negative for the backward process.
    pub index: i64,
    pub label: Property,
    pub expr: FunctionExpr,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub certificates: Vec<Certificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rational_degree: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineRun {
    pub kind: ProcessKind,
    pub stages: Vec<Stage>,
    /// Points actually consumed, in order.
    pub points: Vec<f64>,
    /// Shifts actually used (backward process only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shifts: Vec<f64>,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inconsistencies: Vec<String>,
}

impl PipelineRun {
    pub fn stage(&self, index: i64) -> Option<&Stage> {
        self.stages.iter().find(|s| s.index == index)
    }

    pub fn last(&self) -> &Stage {
        self.stages.last().expect("a run always holds the starting function")
    }
}

#[derive(Clone, Debug, Default)]
pub struct PipelineOptions {
    /// Certify every stage with the checker of its class.
    pub certify: bool,
    pub config: CertifyConfig,
}

impl PipelineOptions {
    pub fn uncertified() -> Self {
        PipelineOptions { certify: false, config: CertifyConfig::default() }
    }

    pub fn certified(config: CertifyConfig) -> Self {
        PipelineOptions { certify: true, config }
    }
}

/// `max(deg numerator, deg denominator)` after cancelling common factors.
pub fn rational_degree(f: &FunctionExpr) -> Result<usize, RationalError> {
    Ok(to_rational(f)?.degree())
}

struct Runner {
    run: PipelineRun,
    opts: PipelineOptions,
    points: Vec<f64>,
    next_point: usize,
}

impl Runner {
    fn new(kind: ProcessKind, points: &[f64], opts: PipelineOptions) -> Self {
        Runner {
            run: PipelineRun {
                kind,
                stages: Vec::new(),
                points: Vec::new(),
                shifts: Vec::new(),
                status: RunStatus::Running,
                error: None,
                inconsistencies: Vec::new(),
            },
            opts,
            points: points.to_vec(),
            next_point: 0,
        }
    }

    /// Next point, cycling. Rejects taking the same endpoint of the current
    /// domain twice in a row.
    fn take_point(&mut self, f: &FunctionExpr) -> Result<f64, String> {
        if self.points.is_empty() {
            return Err("no points supplied".into());
        }
        let x = self.points[self.next_point % self.points.len()];
        self.next_point += 1;
        if let Some(&prev) = self.run.points.last() {
            let prev_stage_domain = self.run.stages.iter().rev().nth(1).map(|s| s.expr.domain());
            let was_endpoint = prev_stage_domain.is_some_and(|d| d.is_endpoint(prev)) || f.domain().is_endpoint(prev);
            if x == prev && was_endpoint {
                return Err(format!("endpoint {x} used at two consecutive transitions"));
            }
        }
        self.run.points.push(x);
        Ok(x)
    }

    fn push(&mut self, index: i64, label: Property, expr: FunctionExpr) {
        let rational_degree = to_rational(&expr).ok().map(|r| r.degree());
        let mut certificates = Vec::new();
        if self.opts.certify {
            let cert = certify(label, &expr, &expr.domain(), &self.opts.config);
            if !cert.passed() {
                self.run.inconsistencies.push(format!(
                    "stage {index} ({label:?}) certification returned {:?}",
                    cert.verdict
                ));
            }
            certificates.push(cert);
        }
        self.run.stages.push(Stage { index, label, expr, certificates, rational_degree });
    }

    fn fail(mut self, msg: String) -> PipelineRun {
        self.run.status = RunStatus::Error;
        self.run.error = Some(msg);
        self.run
    }

    fn finish(mut self, status: RunStatus) -> PipelineRun {
        self.run.status = status;
        self.run
    }

    /// The starting function must itself pass the monotone test.
    fn start(&mut self, f0: &FunctionExpr) -> Result<(), String> {
        self.push(0, Property::Om, f0.clone());
        if self.opts.certify && !self.run.stages[0].certificates[0].passed() {
            self.run.inconsistencies.clear();
            return Err("the starting function did not pass the operator monotone test".into());
        }
        Ok(())
    }
}

fn is_zero(f: &FunctionExpr) -> bool {
    match to_rational(f) {
        Ok(r) => r.is_zero(),
        Err(_) => f.is_zero_on_grid(),
    }
}

fn main_label(step: usize) -> Property {
    match step % 3 {
        1 => Property::Soc,
        2 => Property::Oc,
        _ => Property::Om,
    }
}

fn terr(e: TransformError) -> String {
    e.to_string()
}

/// Run the main cycle for `steps` stages after `f0`.
///
/// Stops early with `terminated_zero` when a stage `f_{3n+1}` vanishes, or with
/// `terminated_rational` when in addition `f0` is rational and the preceding
/// `f_{3n}` is a nonzero constant, which is where the degree decrement ends.
pub fn main_cycle(f0: &FunctionExpr, points: &[f64], steps: usize, opts: PipelineOptions) -> PipelineRun {
    let mut r = Runner::new(ProcessKind::Main, points, opts);
    if let Err(e) = r.start(f0) {
        return r.fail(e);
    }
    let f0_rational = to_rational(f0).is_ok();
    let mut f = f0.clone();
    for step in 1..=steps {
        let next = if step % 3 == 2 {
            neg_reciprocal(&f).map(|g| g.closure_extended()).map_err(terr)
        } else {
            match r.take_point(&f) {
                Ok(x) => diff_quotient(&f, x).map_err(terr),
                Err(e) => Err(e),
            }
        };
        let g = match next {
            Ok(g) => g,
            Err(e) => return r.fail(format!("stage {step}: {e}")),
        };
        r.push(step as i64, main_label(step), g.clone());
        if step % 3 == 1 && is_zero(&g) {
            let prev = &r.run.stages[step - 1];
            let nonzero_constant = prev.rational_degree == Some(0) && !is_zero(&prev.expr);
            let status = if f0_rational && nonzero_constant && step > 1 {
                RunStatus::TerminatedRational
            } else {
                RunStatus::TerminatedZero
            };
            return r.finish(status);
        }
        f = g;
    }
    r.finish(RunStatus::Completed)
}

/// Repeated difference quotients; odd stages are SOC and even stages OM.
/// Zero stages do not stop the run.
pub fn star_process(f0: &FunctionExpr, points: &[f64], steps: usize, opts: PipelineOptions) -> PipelineRun {
    let mut r = Runner::new(ProcessKind::Star, points, opts);
    if let Err(e) = r.start(f0) {
        return r.fail(e);
    }
    let mut f = f0.clone();
    for step in 1..=steps {
        let g = match r.take_point(&f).and_then(|x| diff_quotient(&f, x).map_err(terr)) {
            Ok(g) => g,
            Err(e) => return r.fail(format!("stage {step}: {e}")),
        };
        let label = if step % 2 == 1 { Property::Soc } else { Property::Om };
        r.push(step as i64, label, g.clone());
        f = g;
    }
    r.finish(RunStatus::Completed)
}

fn backward_label(step: usize) -> Property {
    match step % 3 {
        1 => Property::Oc,
        2 => Property::Soc,
        _ => Property::Om,
    }
}

/// Run the first process backwards from `f0`:
/// `f₋₁ = f0·(x − x0) + c0` (made negative), `f₋₂ = −1/f₋₁`,
/// `f₋₃ = f₋₂·(x − x1) + c1`, and so on.
///
/// A missing shift at an OC stage is chosen with [`choose_shift`]; at an OM
/// stage it defaults to 0.
pub fn backward_process(
    f0: &FunctionExpr,
    points: &[f64],
    shifts: &[Option<f64>],
    steps: usize,
    opts: PipelineOptions,
) -> PipelineRun {
    let mut r = Runner::new(ProcessKind::Backward, points, opts);
    if let Err(e) = r.start(f0) {
        return r.fail(e);
    }
    let mut f = f0.clone();
    let mut linear_steps = 0usize;
    for step in 1..=steps {
        let next: Result<FunctionExpr, String> = if step % 3 == 2 {
            neg_reciprocal_of_negative(&f).map_err(terr)
        } else {
            let x = match r.take_point(&f) {
                Ok(x) => x,
                Err(e) => return r.fail(format!("stage -{step}: {e}")),
            };
            let given = shifts.get(linear_steps).copied().flatten();
            linear_steps += 1;
            let c = match (given, step % 3 == 1) {
                (Some(c), _) => Ok(c),
                (None, true) => choose_shift(&f, x, &f.domain()).map_err(terr),
                (None, false) => Ok(0.0),
            };
            match c {
                Err(e) => Err(e),
                Ok(c) => {
                    r.run.shifts.push(c);
                    mul_linear(&f, x, c).map_err(terr).and_then(|g| {
                        if step % 3 == 1 {
                            match g.sign_scan(Sign::Negative) {
                                ScanOutcome::Ok => Ok(g),
                                ScanOutcome::Violation { x, value } => {
                                    Err(TransformError::NotNegative { x, value }.to_string())
                                }
                                ScanOutcome::Zero => Err(TransformError::ZeroFunction.to_string()),
                                ScanOutcome::EvalFailure(m) => Err(m),
                            }
                        } else {
                            Ok(g)
                        }
                    })
                }
            }
        };
        let g = match next {
            Ok(g) => g,
            Err(e) => return r.fail(format!("stage -{step}: {e}")),
        };
        r.push(-(step as i64), backward_label(step), g.clone());
        f = g;
    }
    r.finish(RunStatus::Completed)
}
