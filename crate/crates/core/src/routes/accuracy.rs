use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{route_hash, Route};
use crate::molgraph::CanonicalKey;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopNAccuracy {
    pub n: usize,
    pub hits: usize,
    pub total: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub n_targets: usize,
    pub route_accuracy: Vec<TopNAccuracy>,
    pub building_block_accuracy: Vec<TopNAccuracy>,
}

impl AccuracyReport {
    pub fn evaluate(predicted: &HashMap<CanonicalKey, Vec<Route>>, gold: &[Route], ns: &[usize]) -> Self {
        let report = AccuracyReport {
            n_targets: gold.len(),
            route_accuracy: route_accuracy(predicted, gold, ns),
            building_block_accuracy: building_block_accuracy(predicted, gold, ns),
        };
        debug_assert!(report.building_blocks_dominate());
        report
    }

    /// An exact route match implies a leaf-set match, so this always holds.
    pub fn building_blocks_dominate(&self) -> bool {
        self.route_accuracy
            .iter()
            .zip(&self.building_block_accuracy)
            .all(|(r, b)| r.n == b.n && b.hits >= r.hits)
    }
}

/// 0-based rank of the first predicted route matching each gold route.
fn first_hits<K: PartialEq>(
    predicted: &HashMap<CanonicalKey, Vec<Route>>,
    gold: &[Route],
    key: impl Fn(&Route) -> K,
) -> Vec<Option<usize>> {
    gold.iter()
        .map(|g| {
            let want = key(g);
            predicted.get(g.target()).and_then(|routes| routes.iter().position(|r| key(r) == want))
        })
        .collect()
}

fn tabulate(first: &[Option<usize>], ns: &[usize]) -> Vec<TopNAccuracy> {
    let total = first.len();
    ns.iter()
        .map(|&n| {
            let hits = first.iter().filter(|f| f.is_some_and(|r| r < n)).count();
            let percent = if total == 0 { 0.0 } else { 100.0 * hits as f64 / total as f64 };
            TopNAccuracy { n, hits, total, percent }
        })
        .collect()
}

/// Fraction of gold routes reproduced exactly (same route hash) within the
/// top n predictions for their target. Targets without predictions miss.
pub fn route_accuracy(predicted: &HashMap<CanonicalKey, Vec<Route>>, gold: &[Route], ns: &[usize]) -> Vec<TopNAccuracy> {
    tabulate(&first_hits(predicted, gold, route_hash), ns)
}

/// Fraction of gold routes whose set of leaf molecules equals the leaf set
/// of some top-n prediction.
pub fn building_block_accuracy(
    predicted: &HashMap<CanonicalKey, Vec<Route>>,
    gold: &[Route],
    ns: &[usize],
) -> Vec<TopNAccuracy> {
    tabulate(&first_hits(predicted, gold, Route::leaf_set), ns)
}
