//! Circular (Morgan-style) fingerprints, Tanimoto similarity and Butina
//! sphere-exclusion clustering.
//!
//! # Hash
//!
//! Fingerprints are reproducible across versions because the hash is fixed:
//!
//! ```text
//! mix(x)        = splitmix64 finalizer:
//!                 x ^= x >> 30; x *= 0xbf58476d1ce4e5b9;
//!                 x ^= x >> 27; x *= 0x94d049bb133111eb; x ^= x >> 31
//! combine(h, v) = mix(h ^ (v + 0x9e3779b97f4a7c15 + (h << 6) + (h >> 2)))
//! ```
//!
//! An atom's radius-0 identifier folds `combine` over
//! `(atomic number, charge, heavy degree, bracket H count, aromatic, in ring)`
//! starting from 0. At layer `r` the identifier becomes
//! `combine(combine(r, previous), (bond code, neighbor id))` over neighbors
//! sorted by `(bond code, neighbor id)`. Every identifier of every layer sets
//! bit `id & (nbits - 1)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::molgraph::MolGraph;
use crate::scalar::Scalar;

pub const DEFAULT_RADIUS: usize = 2;
pub const DEFAULT_NBITS: usize = 1024;
/// Distance cutoff (1 − Tanimoto) used for molecule clustering.
pub const DEFAULT_MOLECULE_CUTOFF: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FingerprintError {
    #[error("fingerprint width {0} is not a power of two >= 64")]
    InvalidWidth(usize),
    #[error("fingerprint widths differ: {0} vs {1}")]
    WidthMismatch(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    words: Vec<u64>,
    nbits: usize,
    nbits_set: usize,
}

impl Fingerprint {
    pub fn new(nbits: usize) -> Result<Self, FingerprintError> {
        if nbits < 64 || !nbits.is_power_of_two() {
            return Err(FingerprintError::InvalidWidth(nbits));
        }
        Ok(Fingerprint { words: vec![0; nbits / 64], nbits, nbits_set: 0 })
    }

    pub fn from_bits(nbits: usize, bits: impl IntoIterator<Item = usize>) -> Result<Self, FingerprintError> {
        let mut fp = Fingerprint::new(nbits)?;
        for b in bits {
            fp.set(b);
        }
        Ok(fp)
    }

    /// Set bit `bit % nbits`.
    pub fn set(&mut self, bit: usize) {
        let bit = bit & (self.nbits - 1);
        let (w, m) = (bit / 64, 1u64 << (bit % 64));
        if self.words[w] & m == 0 {
            self.words[w] |= m;
            self.nbits_set += 1;
        }
    }

    pub fn get(&self, bit: usize) -> bool {
        bit < self.nbits && self.words[bit / 64] & (1u64 << (bit % 64)) != 0
    }

    pub fn nbits(&self) -> usize {
        self.nbits
    }

    pub fn count_ones(&self) -> usize {
        self.nbits_set
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nbits).filter(|&b| self.get(b))
    }

    pub fn is_subset_of(&self, other: &Fingerprint) -> bool {
        self.nbits == other.nbits && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }
}

fn mix(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58476d1ce4e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

fn combine(h: u64, v: u64) -> u64 {
    mix(h ^ v.wrapping_add(0x9e3779b97f4a7c15).wrapping_add(h << 6).wrapping_add(h >> 2))
}

/// Atoms that sit on at least one cycle (incident to a non-bridge bond).
pub fn ring_atoms(mol: &MolGraph) -> Vec<bool> {
    let n = mol.atom_count();
    let adj = mol.adjacency();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut bridge = vec![false; mol.bond_count()];
    let mut timer = 0;
    for start in 0..n {
        if disc[start] != usize::MAX {
            continue;
        }
        // (atom, bond used to enter, next adjacency index)
        let mut stack: Vec<(usize, usize, usize)> = vec![(start, usize::MAX, 0)];
        disc[start] = timer;
        low[start] = timer;
        timer += 1;
        while let Some(&mut (u, via, ref mut next)) = stack.last_mut() {
            if *next < adj[u].len() {
                let (v, bond) = adj[u][*next];
                *next += 1;
                if bond == via {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = timer;
                    low[v] = timer;
                    timer += 1;
                    stack.push((v, bond, 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        bridge[via] = true;
                    }
                }
            }
        }
    }
    let mut in_ring = vec![false; n];
    for (i, b) in mol.bonds.iter().enumerate() {
        if !bridge[i] {
            in_ring[b.a] = true;
            in_ring[b.b] = true;
        }
    }
    in_ring
}

pub fn morgan_fingerprint(mol: &MolGraph, radius: usize, nbits: usize) -> Result<Fingerprint, FingerprintError> {
    let mut fp = Fingerprint::new(nbits)?;
    let adj = mol.adjacency();
    let in_ring = ring_atoms(mol);
    let mut ids: Vec<u64> = mol
        .atoms
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let heavy = adj[i].iter().filter(|&&(j, _)| mol.atoms[j].element != "H").count();
            [
                a.atomic_number() as u64,
                a.charge as i64 as u64,
                heavy as u64,
                a.hydrogens as u64,
                a.aromatic as u64,
                in_ring[i] as u64,
            ]
            .into_iter()
            .fold(0, combine)
        })
        .collect();
    for &id in &ids {
        fp.set((id & (nbits as u64 - 1)) as usize);
    }
    let mut env: Vec<(u64, u64)> = Vec::new();
    for layer in 1..=radius {
        let next: Vec<u64> = (0..ids.len())
            .map(|i| {
                env.clear();
                env.extend(adj[i].iter().map(|&(j, b)| (mol.bonds[b].order.code() as u64, ids[j])));
                env.sort_unstable();
                let mut h = combine(layer as u64, ids[i]);
                for &(code, nid) in &env {
                    h = combine(combine(h, code), nid);
                }
                h
            })
            .collect();
        ids = next;
        for &id in &ids {
            fp.set((id & (nbits as u64 - 1)) as usize);
        }
    }
    Ok(fp)
}

/// |a ∩ b| / |a ∪ b|, and 1.0 when both are empty.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, FingerprintError> {
    if a.nbits != b.nbits {
        return Err(FingerprintError::WidthMismatch(a.nbits, b.nbits));
    }
    let inter: u32 = a.words.iter().zip(&b.words).map(|(x, y)| (x & y).count_ones()).sum();
    let union = a.nbits_set + b.nbits_set - inter as usize;
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub centroid: usize,
    /// All members including the centroid, ascending.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Clustering {
    pub clusters: Vec<Cluster>,
}

impl Clustering {
    /// Cluster index for every item.
    pub fn assignments(&self, n: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n];
        for (c, cluster) in self.clusters.iter().enumerate() {
            for &m in &cluster.members {
                if m < n {
                    out[m] = Some(c);
                }
            }
        }
        out
    }
}

/// Butina clustering over `n` items with a symmetric distance; neighbors are
/// items at distance `<= cutoff`.
pub fn butina_cluster<S, F>(n: usize, distance: F, cutoff: S) -> Clustering
where
    S: Scalar,
    F: Fn(usize, usize) -> S,
{
    let mut neighbors = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if distance(i, j) <= cutoff {
                neighbors[i].push(j);
                neighbors[j].push(i);
            }
        }
    }
    butina_from_neighbors(neighbors)
}

/// Sphere exclusion over precomputed neighbor lists: repeatedly take the
/// unassigned item with the most unassigned neighbors (lowest index on ties)
/// and claim it together with its unassigned neighbors.
pub fn butina_from_neighbors(neighbors: Vec<Vec<usize>>) -> Clustering {
    let n = neighbors.len();
    let mut count: Vec<usize> = neighbors.iter().map(Vec::len).collect();
    let mut assigned = vec![false; n];
    let mut remaining = n;
    let mut clusters = Vec::new();
    while remaining > 0 {
        let mut centroid = usize::MAX;
        for i in 0..n {
            if !assigned[i] && (centroid == usize::MAX || count[i] > count[centroid]) {
                centroid = i;
            }
        }
        let mut members = vec![centroid];
        members.extend(neighbors[centroid].iter().copied().filter(|&j| !assigned[j]));
        for &m in &members {
            assigned[m] = true;
        }
        for &m in &members {
            for &k in &neighbors[m] {
                count[k] -= 1;
            }
        }
        remaining -= members.len();
        members.sort_unstable();
        clusters.push(Cluster { centroid, members });
    }
    Clustering { clusters }
}

/// Cluster fingerprints with distance 1 − Tanimoto. Pairwise distances are
/// computed in parallel; the sphere exclusion itself is sequential.
pub fn cluster_fingerprints(fps: &[Fingerprint], cutoff: f64) -> Result<Clustering, FingerprintError> {
    if let Some(first) = fps.first() {
        if let Some(bad) = fps.iter().find(|f| f.nbits != first.nbits) {
            return Err(FingerprintError::WidthMismatch(first.nbits, bad.nbits));
        }
    }
    let n = fps.len();
    let upper: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .filter(|&j| 1.0 - tanimoto(&fps[i], &fps[j]).expect("widths checked") <= cutoff)
                .collect()
        })
        .collect();
    let mut neighbors = vec![Vec::new(); n];
    for (i, js) in upper.into_iter().enumerate() {
        for j in js {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
    }
    for v in neighbors.iter_mut() {
        v.sort_unstable();
    }
    Ok(butina_from_neighbors(neighbors))
}
