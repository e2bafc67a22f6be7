use std::path::{Path, PathBuf};

use loewner::measures::MeasureJson;
use loewner::processes::ProcessKind;
use loewner::{CertifyConfig, FunctionExpr, Interval};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Classify,
    Pipeline,
    Measure,
    Report,
}

/// One invocation's inputs. Only the section matching the command is read.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub command: Option<Command>,
    pub function: Option<FunctionExpr>,
    /// Interval to certify on; the function's domain when absent.
    pub interval: Option<Interval>,
    #[serde(default)]
    pub config: CertifyConfig,
    #[serde(default)]
    pub samples: SampleSpec,
    pub pipeline: Option<PipelineSpec>,
    pub measure: Option<MeasureSpec>,
    pub report: Option<ReportSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSpec {
    pub count: usize,
    /// Sampling window; each function's domain (clipped) when absent.
    pub window: Option<Interval>,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec { count: 201, window: None }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSpec {
    pub process: ProcessKind,
    pub f0: FunctionExpr,
    pub points: Vec<f64>,
    #[serde(default)]
    pub shifts: Vec<Option<f64>>,
    pub steps: usize,
    #[serde(default = "yes")]
    pub certify: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    Om,
    Oc,
    Soc,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub kind: MeasureKind,
    pub rep: MeasureJson,
    /// Centers for the difference-quotient round trip (OM only); five interior
    /// points of the interval when absent.
    pub centers: Option<Vec<f64>>,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
}

fn default_eps() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4]
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSpec {
    /// Artifact directories or files, relative to the run file.
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
}

/// Byte offset of a 1-based (line, column) position.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let before: usize = text.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    (before + column.saturating_sub(1)).min(text.len())
}

pub fn parse(text: &str) -> Result<RunSpec, Failure> {
    parse_as(text)
}

/// JSON parse whose error names the byte offset of the failure.
pub fn parse_as<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| {
        let offset = byte_offset(text, e.line(), e.column());
        Failure::Parse(format!("byte offset {offset} (line {}, column {}): {e}", e.line(), e.column()))
    })
}

pub fn load(path: &Path) -> Result<RunSpec, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}
