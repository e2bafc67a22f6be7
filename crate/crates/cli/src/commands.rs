use std::path::{Path, PathBuf};

use loewner::classify::{Classification, Verdict};
use loewner::funexpr::Sign;
use loewner::measures::{om_to_soc, recover_atom_weight, Atom, MeasureJson, PoissonRecovery};
use loewner::processes::{backward_process, main_cycle, star_process, PipelineOptions, ProcessKind, RunStatus};
use loewner::{classify_all, Certificate, CertifyConfig, FunctionExpr, Interval, PipelineRun};
use serde::{Deserialize, Serialize};

use crate::artifacts::{num, write_json, Csv};
use crate::runspec::{MeasureKind, MeasureSpec, ReportSpec, RunSpec, SampleSpec};
use crate::Failure;

/// Agreement required between a replayed witness and its recorded value.
pub const REPLAY_TOL: f64 = 1e-10;

#[derive(Serialize, Deserialize)]
pub struct ClassifyArtifact {
    pub function: FunctionExpr,
    pub interval: Interval,
    pub config: CertifyConfig,
    pub classification: Classification,
}

fn sample_points(domain: &Interval, samples: &SampleSpec, window_len: f64) -> Vec<f64> {
    let w = samples.window.unwrap_or_else(|| domain.window(window_len));
    w.grid(samples.count).into_iter().filter(|x| domain.contains(*x)).collect()
}

fn eval(f: &FunctionExpr, x: f64) -> Result<f64, Failure> {
    f.eval_real(x).map_err(|e| Failure::Eval(format!("{f} at {x}: {e}")))
}

/// `Ok(true)` when the run is internally consistent.
pub fn classify(spec: &RunSpec, out: &Path) -> Result<bool, Failure> {
    let f = spec.function.as_ref().ok_or_else(|| Failure::Validation("classify needs a `function`".into()))?;
    let interval = spec.interval.unwrap_or_else(|| f.domain());
    if !f.domain().contains_interval(&interval) {
        return Err(Failure::Validation(format!("interval {interval} is not inside the domain {}", f.domain())));
    }
    let mut csv = Csv::new(&["x", "value"]);
    for x in sample_points(&interval, &spec.samples, spec.config.window_len) {
        csv.row(&[num(x), num(eval(f, x)?)]);
    }
    let classification = classify_all(f, &interval, &spec.config);
    let consistent = classification.inconsistencies.is_empty();
    let artifact =
        ClassifyArtifact { function: f.clone(), interval, config: spec.config.clone(), classification };
    write_json(out, "certificates.json", &artifact)?;
    csv.write(out, "samples.csv")?;
    Ok(consistent)
}

pub fn pipeline(spec: &RunSpec, out: &Path) -> Result<bool, Failure> {
    let p = spec.pipeline.as_ref().ok_or_else(|| Failure::Validation("pipeline needs a `pipeline` section".into()))?;
    let opts = PipelineOptions { certify: p.certify, config: spec.config.clone() };
    let run: PipelineRun = match p.process {
        ProcessKind::Main => main_cycle(&p.f0, &p.points, p.steps, opts),
        ProcessKind::Star => star_process(&p.f0, &p.points, p.steps, opts),
        ProcessKind::Backward => backward_process(&p.f0, &p.points, &p.shifts, p.steps, opts),
    };
    let mut csv = Csv::new(&["x", "value", "stage"]);
    for stage in &run.stages {
        for x in sample_points(&stage.expr.domain(), &spec.samples, spec.config.window_len) {
            csv.row(&[num(x), num(eval(&stage.expr, x)?), stage.index.to_string()]);
        }
    }
    write_json(out, "pipeline.json", &run)?;
    csv.write(out, "stages.csv")?;
    if run.status == RunStatus::Error {
        return Err(Failure::Stage(run.error.clone().unwrap_or_default()));
    }
    Ok(run.inconsistencies.is_empty())
}

#[derive(Serialize)]
struct RoundTrip {
    center: f64,
    points: usize,
    max_residual: f64,
}

#[derive(Serialize)]
struct AtomRecovery {
    r: f64,
    expected: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    recovery: Option<PoissonRecovery>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct MeasureArtifact<'a> {
    kind: MeasureKind,
    rep: &'a MeasureJson,
    round_trip: Vec<RoundTrip>,
    /// Function whose boundary values were integrated.
    poisson_source: FunctionExpr,
    poisson: Vec<AtomRecovery>,
}

fn default_centers(interval: &Interval, window_len: f64) -> Vec<f64> {
    let (lo, hi) = interval.shrunk_bounds(window_len, 0.1);
    (0..5).map(|k| lo + (hi - lo) * k as f64 / 4.0).collect()
}

/// Half-width of the recovery window around `r`: at most 1, and at most half
/// the distance to any other atom.
fn halfwidth(r: f64, atoms: &[f64]) -> f64 {
    atoms.iter().filter(|s| **s != r).map(|s| 0.5 * (s - r).abs()).fold(1.0, f64::min)
}

pub fn measure(spec: &RunSpec, out: &Path) -> Result<bool, Failure> {
    let m: &MeasureSpec =
        spec.measure.as_ref().ok_or_else(|| Failure::Validation("measure needs a `measure` section".into()))?;
    let invalid = |e: loewner::measures::MeasureError| Failure::Validation(e.to_string());
    let interval = m.rep.interval;
    let mut csv = Csv::new(&["x", "value", "center", "residual"]);
    let mut round_trip = Vec::new();
    // (source of boundary values, atoms with expected weights)
    let (f, source, expected): (FunctionExpr, FunctionExpr, Vec<Atom>) = match m.kind {
        MeasureKind::Om => {
            let rep = m.rep.to_om().map_err(invalid)?;
            let f = FunctionExpr::measure_om(rep.clone());
            let centers = m.centers.clone().unwrap_or_else(|| default_centers(&interval, spec.config.window_len));
            for &x0 in &centers {
                let soc = om_to_soc(&rep, x0).map_err(invalid)?;
                let base = rep.eval(x0).map_err(invalid)?;
                let mut worst: f64 = 0.0;
                let mut count = 0;
                for x in sample_points(&interval, &spec.samples, spec.config.window_len) {
                    if x == x0 {
                        continue;
                    }
                    let v = soc.eval(x).map_err(|e| Failure::Eval(e.to_string()))?;
                    let dq = (rep.eval(x).map_err(|e| Failure::Eval(e.to_string()))? - base) / (x - x0);
                    let res = (v - dq).abs() / (1.0 + v.abs());
                    worst = worst.max(res);
                    count += 1;
                    csv.row(&[num(x), num(v), num(x0), num(res)]);
                }
                round_trip.push(RoundTrip { center: x0, points: count, max_residual: worst });
            }
            let x0 = rep.x0();
            let soc = om_to_soc(&rep, x0).map_err(invalid)?;
            let expected = rep.mu().atoms().iter().map(|a| Atom::new(a.r, a.w / (a.r - x0).abs())).collect();
            (f, FunctionExpr::measure_soc(soc), expected)
        }
        MeasureKind::Oc => {
            let rep = m.rep.to_oc().map_err(invalid)?;
            let atoms = rep.mu_plus().atoms().iter().chain(rep.mu_minus().atoms()).copied().collect();
            let f = FunctionExpr::measure_oc(rep);
            (f.clone(), f, atoms)
        }
        MeasureKind::Soc => {
            let rep = m.rep.to_soc().map_err(invalid)?;
            let atoms = rep.mu_plus().atoms().iter().chain(rep.mu_minus().atoms()).copied().collect();
            let f = FunctionExpr::measure_soc(rep);
            (f.clone(), f, atoms)
        }
    };
    if m.kind != MeasureKind::Om {
        for x in sample_points(&interval, &spec.samples, spec.config.window_len) {
            csv.row(&[num(x), num(eval(&f, x)?), String::new(), String::new()]);
        }
    }
    let locations: Vec<f64> = expected.iter().map(|a| a.r).collect();
    let poisson = expected
        .iter()
        .map(|a| {
            let h = halfwidth(a.r, &locations);
            match recover_atom_weight(&source, a.r, (a.r - h, a.r + h), &m.eps) {
                Ok(rec) => AtomRecovery { r: a.r, expected: a.w, recovery: Some(rec), error: None },
                Err(e) => AtomRecovery { r: a.r, expected: a.w, recovery: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    let artifact = MeasureArtifact { kind: m.kind, rep: &m.rep, round_trip, poisson_source: source, poisson };
    write_json(out, "measure.json", &artifact)?;
    csv.write(out, "measure.csv")?;
    Ok(true)
}

#[derive(Serialize)]
struct ReportRow {
    source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    stage: Option<i64>,
    function: String,
    om: Option<Verdict>,
    oc: Option<Verdict>,
    soc: Option<Verdict>,
    halfplane: Option<Verdict>,
    loewner: Option<Verdict>,
}

impl ReportRow {
    fn new(source: &str, stage: Option<i64>, f: &FunctionExpr) -> Self {
        ReportRow {
            source: source.to_string(),
            stage,
            function: f.to_string(),
            om: None,
            oc: None,
            soc: None,
            halfplane: None,
            loewner: None,
        }
    }

    fn set(&mut self, cert: &Certificate) {
        use loewner::Property::*;
        let slot = match cert.property {
            Om => &mut self.om,
            Oc => &mut self.oc,
            Soc => &mut self.soc,
            HalfPlane => &mut self.halfplane,
            LoewnerOrderN => &mut self.loewner,
        };
        *slot = Some(cert.verdict);
    }
}

#[derive(Default, Serialize)]
struct Replay {
    checked: usize,
    mismatches: Vec<String>,
}

impl Replay {
    /// Recompute every failing witness in `cert` (and its cross-check).
    fn certificate(&mut self, source: &str, f: &FunctionExpr, interval: &Interval, cert: &Certificate) {
        if let (Verdict::Fail, Some(w)) = (cert.verdict, &cert.witness) {
            self.checked += 1;
            match w.replay(f) {
                Ok(gap) if (gap.min_eig - w.min_eig).abs() <= REPLAY_TOL => {}
                Ok(gap) => self.mismatches.push(format!(
                    "{source}: {:?} witness recorded {} but replays to {}",
                    cert.property, w.min_eig, gap.min_eig
                )),
                Err(e) => self.mismatches.push(format!("{source}: {:?} witness does not replay: {e}", cert.property)),
            }
        }
        if let Some(cross) = &cert.cross_check {
            match f.restrict(*interval) {
                Ok(g) => {
                    let (neg, _) = FunctionExpr::neg_recip_flagged(&g, Sign::Positive);
                    self.certificate(source, &neg, interval, cross);
                }
                Err(e) => self.mismatches.push(format!("{source}: cannot rebuild cross-check function: {e}")),
            }
        }
    }
}

#[derive(Serialize)]
struct Report {
    rows: Vec<ReportRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    replay: Option<Replay>,
}

fn artifact_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            for name in ["certificates.json", "pipeline.json"] {
                let p = input.join(name);
                if p.is_file() {
                    files.push(p);
                }
            }
        } else if input.is_file() {
            files.push(input.clone());
        } else {
            return Err(Failure::Validation(format!("report input {} does not exist", input.display())));
        }
    }
    Ok(files)
}

fn read_artifact<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    crate::runspec::parse_as(&text).map_err(|e| match e {
        Failure::Parse(m) => Failure::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// `spec_dir` anchors relative inputs; with no inputs the output directory is
/// summarized.
pub fn report(spec: Option<&ReportSpec>, spec_dir: &Path, out: &Path, replay: bool) -> Result<bool, Failure> {
    let inputs: Vec<PathBuf> = match spec {
        Some(s) if !s.inputs.is_empty() => s.inputs.iter().map(|p| spec_dir.join(p)).collect(),
        _ => vec![out.to_path_buf()],
    };
    let mut rows = Vec::new();
    let mut rep = Replay::default();
    for path in artifact_files(&inputs)? {
        let source = path.display().to_string();
        let is_pipeline = path.file_name().is_some_and(|n| n == "pipeline.json");
        if is_pipeline {
            let run: PipelineRun = read_artifact(&path)?;
            for stage in &run.stages {
                let mut row = ReportRow::new(&source, Some(stage.index), &stage.expr);
                for c in &stage.certificates {
                    row.set(c);
                    rep.certificate(&source, &stage.expr, &stage.expr.domain(), c);
                }
                rows.push(row);
            }
        } else {
            let a: ClassifyArtifact = read_artifact(&path)?;
            let mut row = ReportRow::new(&source, None, &a.function);
            for c in a.classification.certificates() {
                row.set(c);
                rep.certificate(&source, &a.function, &a.interval, c);
            }
            rows.push(row);
        }
    }
    let consistent = rep.mismatches.is_empty() || !replay;
    let report = Report { rows, replay: replay.then_some(rep) };
    write_json(out, "report.json", &report)?;
    Ok(consistent)
}
