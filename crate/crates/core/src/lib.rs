//! Construct and numerically certify operator monotone, operator convex and
//! strongly operator convex functions on real intervals.
//!
//! Functions are symbolic expression trees ([`FunctionExpr`]) that can be
//! evaluated on reals, complex numbers and Hermitian matrices. The
//! [`classify`] module runs randomized matrix tests and returns replayable
//! certificates; [`transforms`] and [`processes`] move functions between the
//! three classes; [`measures`] works with the integral representations.

pub mod classify;
pub mod funexpr;
pub mod matcalc;
pub mod measures;
pub mod processes;
pub mod transforms;

pub use classify::{certify, classify_all, Certificate, CertifyConfig, Property, Verdict};
pub use funexpr::{CatalogFn, FunctionExpr, FunctionSpec, Interval};
pub use matcalc::{HermitianMatrix, Projection};
pub use processes::{backward_process, main_cycle, star_process, PipelineOptions, PipelineRun, RunStatus};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/functions.md")]
    mod functions {}
    #[doc = include_str!("../../../book/src/matrices.md")]
    mod matrices {}
    #[doc = include_str!("../../../book/src/certificates.md")]
    mod certificates {}
    #[doc = include_str!("../../../book/src/transforms.md")]
    mod transforms {}
    #[doc = include_str!("../../../book/src/pipelines.md")]
    mod pipelines {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
