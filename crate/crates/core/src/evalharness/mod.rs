//! Benchmark records, batch runs and the aggregate statistics computed
//! over them.

mod batch;
mod sampling;
mod single_step;

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::molgraph::CanonicalKey;
use crate::retrostar::{SearchResult, Termination, Timing};
use crate::routes::{route_stats, Route};
use crate::scalar::Scalar;

pub use batch::{read_results, read_targets, run_batch, BatchError, BatchOptions, BatchSummary};
pub use sampling::{extract_prior_rank, sample_indices, subsample_stats, PriorRank, PriorRankReport, SubsampleReport};
pub use single_step::{single_step_top_n, SingleStepReport};

/// Routes kept in a record unless configured otherwise.
pub const RECORD_ROUTE_CAP: usize = 50;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no records to aggregate")]
    Empty,
    #[error("sample size {size} is outside 1..={population}")]
    SampleSize { size: usize, population: usize },
    #[error("repetitions must be at least 1")]
    Repetitions,
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Outcome of one target in a benchmark run; one JSON line in a results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    /// Canonical key, or the raw input when it could not be parsed.
    pub target: String,
    /// The target line as given.
    pub smiles: String,
    pub solved: bool,
    pub n_solved_routes: usize,
    pub model_calls: usize,
    pub iterations: usize,
    #[serde(default)]
    pub model_errors: usize,
    pub termination: Termination,
    #[serde(default)]
    pub best_cost: Option<f64>,
    #[serde(flatten)]
    pub timing: Timing,
    #[serde(default)]
    pub error: Option<String>,
    /// Best routes first, at most the configured cap.
    #[serde(with = "route_list", default)]
    pub routes: Vec<Route>,
}

mod route_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::routes::Route;

    pub fn serialize<S: Serializer>(routes: &[Route], s: S) -> Result<S::Ok, S::Error> {
        routes.iter().map(Route::to_json_value).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Route>, D::Error> {
        Vec::<serde_json::Value>::deserialize(d)?
            .into_iter()
            .map(|v| Route::from_json_value(v).map_err(serde::de::Error::custom))
            .collect()
    }
}

impl BenchmarkRecord {
    pub fn from_result<S: Scalar>(smiles: &str, result: &SearchResult<S>, route_cap: usize) -> Self {
        BenchmarkRecord {
            target: result.target.as_str().to_owned(),
            smiles: smiles.to_owned(),
            solved: result.solved,
            n_solved_routes: result.routes.len(),
            model_calls: result.model_calls,
            iterations: result.iterations,
            model_errors: result.model_errors,
            termination: result.termination,
            best_cost: result.best_cost().map(|c| c.to_f64()),
            timing: result.timing,
            error: result.error.clone(),
            routes: result.routes.iter().take(route_cap).map(|r| r.route.clone()).collect(),
        }
    }

    /// Record for a target that could not be searched at all.
    pub fn failed(target: &str, smiles: &str, termination: Termination, error: String) -> Self {
        BenchmarkRecord {
            target: target.to_owned(),
            smiles: smiles.to_owned(),
            solved: false,
            n_solved_routes: 0,
            model_calls: 0,
            iterations: 0,
            model_errors: 0,
            termination,
            best_cost: None,
            timing: Timing::default(),
            error: Some(error),
            routes: Vec::new(),
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }

    pub fn wall_time_s(&self) -> f64 {
        self.timing.wall_time_s
    }
}

/// Aggregate statistics over a set of records. Means run over every
/// record, solved or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_targets: usize,
    pub n_solved: usize,
    pub success_rate: f64,
    pub mean_solved_routes: f64,
    /// Search plus route extraction.
    pub mean_search_time_s: f64,
    pub mean_model_calls: f64,
    pub mean_iterations: f64,
}

impl MetricsReport {
    /// (name, value) of every averaged metric, in report order.
    pub fn metrics(&self) -> [(&'static str, f64); 5] {
        [
            ("success_rate", self.success_rate),
            ("mean_solved_routes", self.mean_solved_routes),
            ("mean_search_time_s", self.mean_search_time_s),
            ("mean_model_calls", self.mean_model_calls),
            ("mean_iterations", self.mean_iterations),
        ]
    }
}

pub fn aggregate_metrics(records: &[BenchmarkRecord]) -> Result<MetricsReport, EvalError> {
    aggregate_refs(records.iter())
}

pub(crate) fn aggregate_refs<'a>(records: impl Iterator<Item = &'a BenchmarkRecord>) -> Result<MetricsReport, EvalError> {
    let (mut n, mut solved) = (0usize, 0usize);
    let (mut routes, mut time, mut calls, mut iters) = (0.0, 0.0, 0.0, 0.0);
    for r in records {
        n += 1;
        solved += r.solved as usize;
        routes += r.n_solved_routes as f64;
        time += r.wall_time_s();
        calls += r.model_calls as f64;
        iters += r.iterations as f64;
    }
    if n == 0 {
        return Err(EvalError::Empty);
    }
    let nf = n as f64;
    Ok(MetricsReport {
        n_targets: n,
        n_solved: solved,
        success_rate: 100.0 * solved as f64 / nf,
        mean_solved_routes: routes / nf,
        mean_search_time_s: time / nf,
        mean_model_calls: calls / nf,
        mean_iterations: iters / nf,
    })
}

/// Top routes of every parsable record, keyed by target, for accuracy
/// evaluation against gold routes.
pub fn predicted_routes(records: &[BenchmarkRecord]) -> HashMap<CanonicalKey, Vec<Route>> {
    records
        .iter()
        .filter(|r| r.termination != Termination::Error)
        .map(|r| (CanonicalKey::from_trusted(&r.target), r.routes.clone()))
        .collect()
}

/// Distributions of route shape over the top `top_n` routes of each record.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RouteStatsReport {
    pub n_routes: usize,
    pub n_targets_with_routes: usize,
    /// value -> number of routes
    pub depth_histogram: BTreeMap<usize, usize>,
    pub building_block_histogram: BTreeMap<usize, usize>,
    /// reactants per reaction -> number of reactions
    pub reactants_histogram: BTreeMap<usize, usize>,
    pub mean_depth: f64,
    pub mean_building_blocks: f64,
}

pub fn route_statistics(records: &[BenchmarkRecord], top_n: usize) -> RouteStatsReport {
    let mut rep = RouteStatsReport::default();
    let (mut depth, mut bbs) = (0usize, 0usize);
    for rec in records {
        if !rec.routes.is_empty() && top_n > 0 {
            rep.n_targets_with_routes += 1;
        }
        for route in rec.routes.iter().take(top_n) {
            let s = route_stats(route);
            rep.n_routes += 1;
            depth += s.max_depth;
            bbs += s.n_building_blocks;
            *rep.depth_histogram.entry(s.max_depth).or_default() += 1;
            *rep.building_block_histogram.entry(s.n_building_blocks).or_default() += 1;
            for k in s.reactants_per_reaction {
                *rep.reactants_histogram.entry(k).or_default() += 1;
            }
        }
    }
    if rep.n_routes > 0 {
        rep.mean_depth = depth as f64 / rep.n_routes as f64;
        rep.mean_building_blocks = bbs as f64 / rep.n_routes as f64;
    }
    rep
}

/// Parse records from JSON lines; blank lines are skipped.
pub fn parse_records<R: BufRead>(reader: R) -> Result<Vec<BenchmarkRecord>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| EvalError::Record { line: i + 1, message: e.to_string() })?;
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn record(solved_routes: usize, time: f64, calls: usize) -> BenchmarkRecord {
        BenchmarkRecord {
            target: "CCO".into(),
            smiles: "OCC".into(),
            solved: solved_routes > 0,
            n_solved_routes: solved_routes,
            model_calls: calls,
            iterations: calls,
            model_errors: 0,
            termination: Termination::Iterations,
            best_cost: None,
            timing: Timing { wall_time_s: time, search_time_s: time, extraction_time_s: 0.0 },
            error: None,
            routes: Vec::new(),
        }
    }

    #[test]
    fn four_of_ten_solved() {
        let recs: Vec<_> = (0..10).map(|i| record(usize::from(i < 4), 1.0, 5)).collect();
        let m = aggregate_metrics(&recs).unwrap();
        assert_eq!(m.success_rate, 40.0);
        assert_eq!((m.n_targets, m.n_solved), (10, 4));
    }

    #[test]
    fn means_include_unsolved() {
        let recs = [record(2, 1.0, 1), record(0, 2.0, 2), record(4, 3.0, 6)];
        let m = aggregate_metrics(&recs).unwrap();
        assert_eq!(m.mean_solved_routes, 2.0);
        assert_eq!(m.mean_model_calls, 3.0);
        assert_eq!(aggregate_metrics(&[record(1, 7.5, 1)]).unwrap().mean_search_time_s, 7.5);
        assert!(matches!(aggregate_metrics(&[]), Err(EvalError::Empty)));
    }

    #[test]
    fn record_json_round_trip() {
        let mut r = record(1, 0.25, 3);
        r.routes.push(Route::from_json(r#"{"type":"mol","smiles":"CCO","in_stock":true}"#).unwrap());
        let line = r.to_line();
        assert!(line.contains("\"wall_time_s\":0.25"));
        assert!(line.contains("\"termination\":\"iterations\""));
        let back = parse_records(line.as_bytes()).unwrap();
        assert_eq!(back, vec![r]);
    }
}
