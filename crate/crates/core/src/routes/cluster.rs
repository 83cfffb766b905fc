use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ted::{normalized_ted, FingerprintTable};
use super::Route;
use crate::fingerprint::{butina_cluster, Clustering};

/// A route tagged with the model that produced it.
#[derive(Debug, Clone)]
pub struct LabeledRoute {
    pub label: String,
    pub route: Route,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteClustering {
    /// Model label of every clustered route, by index.
    pub labels: Vec<String>,
    #[serde(flatten)]
    pub clustering: Clustering,
}

impl RouteClustering {
    /// Distinct model labels in each cluster.
    pub fn cluster_label_sets(&self) -> Vec<BTreeSet<&str>> {
        self.clustering
            .clusters
            .iter()
            .map(|c| c.members.iter().map(|&m| self.labels[m].as_str()).collect())
            .collect()
    }
}

/// Butina clustering of one target's routes on normalized tree edit distance.
pub fn cluster_routes(routes: &[LabeledRoute], cutoff: f64) -> RouteClustering {
    let mut table = FingerprintTable::default();
    let trees: Vec<_> = routes.iter().map(|r| table.tree(&r.route)).collect();
    let n = routes.len();
    let dist: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| if j > i { normalized_ted(&table, &trees[i], &trees[j]).1 } else { 0.0 }).collect())
        .collect();
    let clustering = butina_cluster(n, |i, j| if i < j { dist[i][j] } else { dist[j][i] }, cutoff);
    RouteClustering { labels: routes.iter().map(|r| r.label.clone()).collect(), clustering }
}

/// For every non-empty combination of model labels, the number of clusters
/// whose label set is exactly that combination. Keys join sorted labels with
/// `+`.
pub fn cluster_overlap_counts(clusterings: &[RouteClustering]) -> BTreeMap<String, usize> {
    let models: Vec<&str> = clusterings
        .iter()
        .flat_map(|c| c.labels.iter().map(String::as_str))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut counts = BTreeMap::new();
    if models.len() <= 16 {
        for mask in 1u32..(1 << models.len()) {
            let name: Vec<&str> = (0..models.len()).filter(|b| mask & (1 << b) != 0).map(|b| models[b]).collect();
            counts.insert(name.join("+"), 0);
        }
    }
    for c in clusterings {
        for set in c.cluster_label_sets() {
            let name: Vec<&str> = set.into_iter().collect();
            *counts.entry(name.join("+")).or_insert(0) += 1;
        }
    }
    counts
}
