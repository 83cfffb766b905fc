// Shared fixtures: random reaction networks and brute-force oracles.

#![allow(dead_code)]

pub mod oracles;

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use retroplan::molgraph::{key_of, CanonicalKey};
use retroplan::predictor::TablePredictor;
use retroplan::retrostar::{MolState, SearchConfig, SearchTree};
use retroplan::routes::{internal_hash, leaf_hash};
use retroplan::scalar::{Fixed, Scalar};
use retroplan::stock::Stock;

/// Linear alkane with `n` carbons: a cheap supply of distinct molecules.
pub fn alkane(n: usize) -> String {
    "C".repeat(n)
}

pub fn key(s: &str) -> CanonicalKey {
    key_of(s).unwrap()
}

pub struct Network {
    pub tsv: String,
    pub table: TablePredictor,
    pub stock: Stock,
    pub target: String,
    pub n_molecules: usize,
}

/// Random network over at most `max_mols` molecules with up to
/// `max_rxns` recorded reactions per product. Molecule 1 is the target.
pub fn random_network(rng: &mut ChaCha8Rng, max_mols: usize, max_rxns: usize) -> Network {
    let n = rng.gen_range(3..=max_mols);
    let mut rows = String::new();
    let mut stock = Vec::new();
    for m in 1..=n {
        if m > 1 && rng.gen_bool(0.35) {
            stock.push(alkane(m));
            continue;
        }
        let n_rxns = rng.gen_range(0..=max_rxns);
        for _ in 0..n_rxns {
            let n_reactants = rng.gen_range(1..=3);
            let reactants: Vec<String> = (0..n_reactants)
                .map(|_| loop {
                    let r = rng.gen_range(1..=n);
                    if r != m {
                        break alkane(r);
                    }
                })
                .collect();
            let count = rng.gen_range(1..=9);
            rows.push_str(&format!("{}\t{}\t{}\n", alkane(m), reactants.join("."), count));
        }
    }
    if rows.is_empty() {
        rows.push_str(&format!("{}\t{}\t1\n", alkane(1), alkane(2)));
    }
    let table = TablePredictor::from_reader(rows.as_bytes()).unwrap();
    Network {
        tsv: rows,
        table,
        stock: Stock::from_lines(&stock, "network").unwrap(),
        target: alkane(1),
        n_molecules: n,
    }
}

/// One brute-force route: (hash, total cost, reaction count, leaf set).
#[derive(Debug, Clone)]
pub struct BruteRoute {
    pub hash: String,
    pub cost: Fixed,
    pub n_reactions: usize,
    pub leaves: BTreeSet<CanonicalKey>,
}

/// Every acyclic route from `target` down to stock within `max_depth`
/// reactions, following the same top-k predictions the search sees.
/// `None` when more than `limit` routes exist.
pub fn brute_force_routes(net: &Network, config: &SearchConfig, limit: usize) -> Option<Vec<BruteRoute>> {
    fn go(
        net: &Network,
        config: &SearchConfig,
        m: &CanonicalKey,
        depth: usize,
        path: &mut Vec<CanonicalKey>,
        limit: usize,
    ) -> Option<Vec<BruteRoute>> {
        if net.stock.contains(m) {
            return Some(vec![BruteRoute {
                hash: leaf_hash(m),
                cost: Fixed::from_raw(0),
                n_reactions: 0,
                leaves: BTreeSet::from([m.clone()]),
            }]);
        }
        if depth >= config.max_depth {
            return Some(Vec::new());
        }
        path.push(m.clone());
        let mut out = Vec::new();
        for p in net.table.lookup(m).iter().take(config.top_k) {
            if p.reactants.iter().any(|r| path.contains(r)) {
                continue;
            }
            let cost = <Fixed as Scalar>::neg_ln_prior(p.prior, config.epsilon);
            let mut partial: Vec<(Vec<String>, Fixed, usize, BTreeSet<CanonicalKey>)> =
                vec![(Vec::new(), cost, 1, BTreeSet::new())];
            for r in &p.reactants {
                let sub = go(net, config, r, depth + 1, path, limit)?;
                let mut next = Vec::new();
                for (hs, c, n, leaves) in &partial {
                    for s in &sub {
                        let mut hs = hs.clone();
                        hs.push(s.hash.clone());
                        let mut l = leaves.clone();
                        l.extend(s.leaves.iter().cloned());
                        next.push((hs, *c + s.cost, n + s.n_reactions, l));
                    }
                }
                if next.len() > limit {
                    path.pop();
                    return None;
                }
                partial = next;
            }
            for (mut hs, c, n, leaves) in partial {
                out.push(BruteRoute { hash: internal_hash(m, &mut hs), cost: c, n_reactions: n, leaves });
            }
            if out.len() > limit {
                path.pop();
                return None;
            }
        }
        path.pop();
        Some(out)
    }
    let mut routes = go(net, config, &key(&net.target), 0, &mut Vec::new(), limit)?;
    let mut seen = std::collections::HashSet::new();
    routes.retain(|r| seen.insert(r.hash.clone()));
    Some(routes)
}

/// Frontier choice by enumerating every partial solution tree of the root:
/// each expanded molecule picks one reaction, all reactants are included.
/// Returns the node with minimal best-containing-tree cost, ties by
/// (depth, id), or None when every such cost is infinite.
pub fn brute_force_selection(tree: &SearchTree<Fixed>) -> Option<(usize, Fixed)> {
    // (cost, frontier nodes contained)
    fn psts(tree: &SearchTree<Fixed>, m: usize) -> Vec<(Fixed, Vec<usize>)> {
        let node = &tree.mols[m];
        match node.state {
            MolState::Frontier => vec![(Fixed::from_raw(0), vec![m])],
            MolState::StockLeaf => vec![(Fixed::from_raw(0), vec![])],
            MolState::Dead => vec![(Fixed::INFINITY, vec![])],
            MolState::Expanded => {
                let mut out = Vec::new();
                for &r in &node.reactions {
                    let rx = &tree.rxns[r];
                    let mut acc = vec![(rx.cost, Vec::new())];
                    for &c in &rx.children {
                        let sub = psts(tree, c);
                        let mut next = Vec::new();
                        for (cost, f) in &acc {
                            for (sc, sf) in &sub {
                                let mut f = f.clone();
                                f.extend(sf);
                                next.push((cost.sat_add(*sc), f));
                            }
                        }
                        acc = next;
                    }
                    out.extend(acc);
                }
                out
            }
        }
    }
    let mut best: HashMap<usize, Fixed> = HashMap::new();
    for (cost, frontier) in psts(tree, 0) {
        for f in frontier {
            let e = best.entry(f).or_insert(Fixed::INFINITY);
            if cost < *e {
                *e = cost;
            }
        }
    }
    let mut cands: Vec<(Fixed, usize, usize)> = best
        .into_iter()
        .filter(|(_, c)| c.is_finite())
        .map(|(m, c)| (c, tree.mols[m].depth, m))
        .collect();
    cands.sort();
    cands.first().map(|&(c, _, m)| (m, c))
}
