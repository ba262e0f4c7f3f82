//! Parameter sweeps: the experimental protocol behind the BER curve, the
//! sparsity path, and the recovery-probability grid. Each sweep point runs
//! one or more seeded instances and averages their metrics.

use crate::examples::{run_example, ExampleError, ExampleSpec};
use crate::svg::curve_plot;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: String,
    pub start: f64,
    pub step: f64,
    pub stop: f64,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("bad sweep `{0}`, expected <param>=<start>:<step>:<stop>")]
    Parse(String),
    #[error(transparent)]
    Example(#[from] ExampleError),
}

impl SweepSpec {
    pub fn parse(s: &str) -> Result<SweepSpec, SweepError> {
        let err = || SweepError::Parse(s.to_string());
        let (param, rest) = s.split_once('=').ok_or_else(err)?;
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(err());
        }
        let nums: Vec<f64> =
            parts.iter().map(|p| p.parse().map_err(|_| err())).collect::<Result<_, _>>()?;
        if nums[1] <= 0.0 || nums[2] < nums[0] {
            return Err(err());
        }
        Ok(SweepSpec { param: param.to_string(), start: nums[0], step: nums[1], stop: nums[2] })
    }

    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut v = self.start;
        while v <= self.stop + 1e-9 {
            out.push(v);
            v += self.step;
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    /// Metric means across instances (includes `objective` and the fraction
    /// of converged runs as `converged`).
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub example: String,
    pub param: String,
    pub instances: usize,
    pub base: ExampleSpec,
    pub points: Vec<SweepPoint>,
}

/// Run the sweep; points and instances execute in parallel, outputs are
/// ordered by parameter value regardless of completion order.
pub fn run_sweep(
    base: &ExampleSpec,
    sweep: &SweepSpec,
    instances: usize,
) -> Result<SweepReport, SweepError> {
    let values = sweep.values();
    let jobs: Vec<(usize, f64, u64)> = values
        .iter()
        .enumerate()
        .flat_map(|(i, &v)| (0..instances).map(move |k| (i, v, k as u64)))
        .collect();

    let results: Vec<(usize, Result<BTreeMap<String, f64>, ExampleError>)> = jobs
        .par_iter()
        .map(|&(i, v, inst)| {
            let mut spec = base.clone();
            spec.set_param(&sweep.param, v);
            spec.seed = base.seed.wrapping_add(inst);
            spec.ccp.rng_seed = spec.seed;
            let out = run_example(&spec).map(|o| {
                let mut m = o.report.metrics.clone();
                if let Some(obj) = o.report.final_objective {
                    m.insert("objective".into(), obj);
                }
                m.insert("converged".into(), f64::from(o.report.status == "converged"));
                m
            });
            (i, out)
        })
        .collect();

    let mut points: Vec<SweepPoint> =
        values.iter().map(|&v| SweepPoint { value: v, metrics: BTreeMap::new() }).collect();
    let mut counts: Vec<BTreeMap<String, usize>> = vec![BTreeMap::new(); values.len()];
    for (i, res) in results {
        let metrics = res?;
        for (k, v) in metrics {
            if v.is_finite() {
                *points[i].metrics.entry(k.clone()).or_insert(0.0) += v;
                *counts[i].entry(k).or_insert(0) += 1;
            }
        }
    }
    for (point, count) in points.iter_mut().zip(&counts) {
        for (k, v) in point.metrics.iter_mut() {
            *v /= count[k] as f64;
        }
    }

    Ok(SweepReport {
        example: base.name.clone(),
        param: sweep.param.clone(),
        instances,
        base: base.clone(),
        points,
    })
}

impl SweepReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// One row per sweep value with all aggregated metrics as columns.
    pub fn to_csv(&self) -> String {
        let mut keys: Vec<String> = Vec::new();
        for p in &self.points {
            for k in p.metrics.keys() {
                if !keys.contains(k) {
                    keys.push(k.clone());
                }
            }
        }
        keys.sort();
        let mut out = format!("{},{}\n", self.param, keys.join(","));
        for p in &self.points {
            let cells: Vec<String> = keys
                .iter()
                .map(|k| p.metrics.get(k).map_or(String::new(), |v| format!("{v}")))
                .collect();
            out.push_str(&format!("{},{}\n", p.value, cells.join(",")));
        }
        out
    }

    /// Curve of the example's headline metrics versus the swept parameter.
    pub fn to_svg(&self) -> String {
        let metric_sets: &[&str] = match self.example.as_str() {
            "boolean-ls" => &["bit_error_rate"],
            "sparse-recovery" => &["sqrt_success", "l1_success"],
            "sparse-singular-vectors" => &["sigma", "cardinality"],
            _ => &["objective"],
        };
        let colors = ["#1f77b4", "#d62728", "#2ca02c"];
        let series: Vec<(&str, &str, Vec<(f64, f64)>)> = metric_sets
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| {
                let pts: Vec<(f64, f64)> = self
                    .points
                    .iter()
                    .filter_map(|p| p.metrics.get(m).map(|&v| (p.value, v)))
                    .collect();
                (!pts.is_empty()).then_some((m, colors[i % colors.len()], pts))
            })
            .collect();
        curve_plot(
            &format!("{} vs {}", self.example, self.param),
            &series,
            &[],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sweep_spec() {
        let s = SweepSpec::parse("snr=1:2:17").unwrap();
        assert_eq!(s.param, "snr");
        assert_eq!(s.values().len(), 9);
        assert!(SweepSpec::parse("snr=1:0:17").is_err());
        assert!(SweepSpec::parse("bogus").is_err());
    }
}
