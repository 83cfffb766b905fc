//! Seeded subsampling. The generator is ChaCha8 seeded through
//! `SeedableRng::seed_from_u64`; indices are drawn by a partial
//! Fisher–Yates shuffle where position `i` swaps with
//! `i + uniform_below(n - i)`, and `uniform_below(m)` takes the next `u64`
//! and rejects values at or above the largest multiple of `m` before
//! reducing modulo `m`. Every step is fixed, so a seed gives the same
//! sample on any platform.

use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{aggregate_refs, BenchmarkRecord, EvalError};

fn uniform_below(rng: &mut ChaCha8Rng, m: u64) -> u64 {
    debug_assert!(m > 0);
    let zone = u64::MAX - u64::MAX % m;
    loop {
        let x = rng.next_u64();
        if x < zone {
            return x % m;
        }
    }
}

/// Draw `s` distinct indices from `0..n`, in draw order.
fn draw(rng: &mut ChaCha8Rng, perm: &mut [usize], s: usize) {
    let n = perm.len();
    for i in 0..s {
        let j = i + uniform_below(rng, (n - i) as u64) as usize;
        perm.swap(i, j);
    }
}

/// `s` distinct indices from `0..n` without replacement, ascending.
pub fn sample_indices(n: usize, s: usize, seed: u64) -> Vec<usize> {
    let s = s.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    draw(&mut rng, &mut perm, s);
    let mut out = perm[..s].to_vec();
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation over repetitions.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleReport {
    pub population: usize,
    pub size: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub metrics: BTreeMap<String, MeanStd>,
}

/// Metrics over `repetitions` samples of `size` records drawn without
/// replacement, summarized as mean and population std per metric.
pub fn subsample_stats(
    records: &[BenchmarkRecord],
    size: usize,
    repetitions: usize,
    seed: u64,
) -> Result<SubsampleReport, EvalError> {
    let n = records.len();
    if size == 0 || size > n {
        return Err(EvalError::SampleSize { size, population: n });
    }
    if repetitions == 0 {
        return Err(EvalError::Repetitions);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    // Welford: identical inputs give exactly zero spread
    let mut acc: Vec<(&'static str, f64, f64)> = Vec::new();
    for rep in 0..repetitions {
        draw(&mut rng, &mut perm, size);
        let mut idx = perm[..size].to_vec();
        // fixed summation order, so equal samples give equal metrics
        idx.sort_unstable();
        let m = aggregate_refs(idx.iter().map(|&i| &records[i]))?;
        let k = (rep + 1) as f64;
        for (j, (name, x)) in m.metrics().into_iter().enumerate() {
            if rep == 0 {
                acc.push((name, x, 0.0));
            } else {
                let (_, mean, m2) = &mut acc[j];
                let delta = x - *mean;
                *mean += delta / k;
                *m2 += delta * (x - *mean);
            }
        }
    }
    let metrics = acc
        .into_iter()
        .map(|(name, mean, m2)| (name.to_owned(), MeanStd { mean, std: (m2 / repetitions as f64).sqrt() }))
        .collect();
    Ok(SubsampleReport { population: n, size, repetitions, seed, metrics })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorRank {
    pub prior: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorRankReport {
    pub top_n_routes: usize,
    /// Reactions found before sampling.
    pub total: usize,
    /// Reactions without prior or rank metadata.
    pub skipped: usize,
    pub pairs: Vec<PriorRank>,
}

/// (prior, rank) of every reaction in each record's top routes, optionally
/// reduced to a seeded sample of `sample` pairs kept in walk order.
pub fn extract_prior_rank(
    records: &[BenchmarkRecord],
    top_n_routes: usize,
    sample: Option<usize>,
    seed: u64,
) -> PriorRankReport {
    let mut pairs = Vec::new();
    let mut skipped = 0;
    for rec in records {
        for route in rec.routes.iter().take(top_n_routes) {
            for rx in route.reactions() {
                match (rx.prior, rx.rank) {
                    (Some(prior), Some(rank)) => pairs.push(PriorRank { prior, rank }),
                    _ => skipped += 1,
                }
            }
        }
    }
    let total = pairs.len();
    if let Some(s) = sample {
        if s < total {
            pairs = sample_indices(total, s, seed).into_iter().map(|i| pairs[i]).collect();
        }
    }
    PriorRankReport { top_n_routes, total, skipped, pairs }
}
