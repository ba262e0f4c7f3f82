//! The example gallery: nonconvex problems built at configurable scale from
//! seeded generators, solved with the penalty convex-concave procedure.
//!
//! Where the source problems leave instance data unspecified (radii,
//! obstacle layouts, endpoint states), each example documents the seeded
//! distribution it draws from; everything is a deterministic function of
//! `(seed, params)`.

pub mod boolean_ls;
pub mod circle_packing;
pub mod collision_avoidance;
pub mod filter_design;
pub mod path_planning;
pub mod phase_retrieval;
pub mod sparse_recovery;
pub mod sparse_singular_vectors;

use dccp::ccp::CcpParams;
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::report::RunReport;

/// Name, scale parameters, data seed, and algorithm overrides for one run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExampleSpec {
    pub name: String,
    pub seed: u64,
    /// Scale parameters with example-specific keys (see `dccp list`).
    pub params: BTreeMap<String, f64>,
    pub ccp: CcpParams,
}

impl ExampleSpec {
    pub fn new(name: &str, seed: u64, params: &[(&str, f64)]) -> ExampleSpec {
        let mut ccp = CcpParams::default();
        ccp.rng_seed = seed;
        ExampleSpec {
            name: name.to_string(),
            seed,
            params: params.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            ccp,
        }
    }

    pub fn param(&self, key: &str) -> f64 {
        *self
            .params
            .get(key)
            .unwrap_or_else(|| panic!("example {} has no parameter `{key}`", self.name))
    }

    pub fn param_usize(&self, key: &str) -> usize {
        let v = self.param(key);
        assert!(v >= 0.0 && v.fract() == 0.0, "parameter `{key}` must be a nonnegative integer");
        v as usize
    }

    pub fn set_param(&mut self, key: &str, value: f64) {
        self.params.insert(key.to_string(), value);
    }

    /// RNG for instance data; independent of the CCP initialization streams.
    pub fn data_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(u64::MAX); // keep clear of restart streams
        rng
    }
}

/// Output of one example run: the report plus an optional figure.
pub struct RunOutput {
    pub report: RunReport,
    pub svg: Option<String>,
}

#[derive(Debug, Error)]
pub enum ExampleError {
    #[error("unknown example `{0}`; see `dccp list`")]
    Unknown(String),
    #[error("example `{example}` cannot emit format `{format}`: {reason}")]
    UnsupportedFormat { example: String, format: String, reason: String },
    #[error("solve failed: {0}")]
    Solve(#[from] dccp::ccp::CcpError),
}

pub const EXAMPLE_NAMES: [&str; 8] = [
    "circle-packing",
    "boolean-ls",
    "path-planning",
    "collision-avoidance",
    "sparse-recovery",
    "phase-retrieval",
    "filter-design",
    "sparse-singular-vectors",
];

/// Default specs for every example, in stable order.
pub fn list_examples() -> Vec<ExampleSpec> {
    EXAMPLE_NAMES.iter().map(|n| default_spec(n).expect("registered")).collect()
}

pub fn default_spec(name: &str) -> Result<ExampleSpec, ExampleError> {
    Ok(match name {
        "circle-packing" => circle_packing::default_spec(),
        "boolean-ls" => boolean_ls::default_spec(),
        "path-planning" => path_planning::default_spec(),
        "collision-avoidance" => collision_avoidance::default_spec(),
        "sparse-recovery" => sparse_recovery::default_spec(),
        "phase-retrieval" => phase_retrieval::default_spec(),
        "filter-design" => filter_design::default_spec(),
        "sparse-singular-vectors" => sparse_singular_vectors::default_spec(),
        other => return Err(ExampleError::Unknown(other.to_string())),
    })
}

/// Build and solve the named example; deterministic given the spec.
pub fn run_example(spec: &ExampleSpec) -> Result<RunOutput, ExampleError> {
    match spec.name.as_str() {
        "circle-packing" => circle_packing::run(spec),
        "boolean-ls" => boolean_ls::run(spec),
        "path-planning" => path_planning::run(spec),
        "collision-avoidance" => collision_avoidance::run(spec),
        "sparse-recovery" => sparse_recovery::run(spec),
        "phase-retrieval" => phase_retrieval::run(spec),
        "filter-design" => filter_design::run(spec),
        "sparse-singular-vectors" => sparse_singular_vectors::run(spec),
        other => Err(ExampleError::Unknown(other.to_string())),
    }
}

/// Build the problem only (used by verification and the acceptance tests).
pub fn build_problem(spec: &ExampleSpec) -> Result<dccp::transform::Problem, ExampleError> {
    Ok(match spec.name.as_str() {
        "circle-packing" => circle_packing::build(spec).problem,
        "boolean-ls" => boolean_ls::build(spec).problem,
        "path-planning" => path_planning::build(spec).problem,
        "collision-avoidance" => collision_avoidance::build(spec).problem,
        "sparse-recovery" => sparse_recovery::build(spec).problem,
        "phase-retrieval" => phase_retrieval::build(spec).problem,
        "filter-design" => filter_design::build(spec).problem,
        "sparse-singular-vectors" => sparse_singular_vectors::build(spec).problem,
        other => return Err(ExampleError::Unknown(other.to_string())),
    })
}

pub(crate) fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}
