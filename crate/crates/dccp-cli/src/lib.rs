//! Example gallery and reporting facilities for the `dccp` CLI.
//!
//! Each example builds a nonconvex problem at configurable scale from a
//! seeded generator, runs the penalty convex-concave procedure, and reports
//! recomputed feasibility and example-specific metrics. The JSON schema is
//! documented in `docs/report-schema.md`.

pub mod examples;
pub mod report;
pub mod svg;
pub mod sweep;

/// Output format selector shared by the CLI and `report::emit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
}
