use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::sync::Arc;

use super::tree::{MolId, MolState, RxnId, SearchTree};
use crate::routes::{internal_hash, leaf_hash, Route, RouteMol, RouteRxn};
use crate::scalar::Scalar;

/// A solved route with its total cost (sum of reaction costs).
#[derive(Debug, Clone)]
pub struct ScoredRoute<S> {
    pub route: Route,
    pub cost: S,
    pub n_reactions: usize,
    pub hash: String,
}

enum Built {
    Leaf(MolId),
    Made { mol: MolId, rxn: RxnId, children: Vec<Arc<Built>> },
}

struct Entry<S> {
    cost: S,
    n_reactions: usize,
    hash: String,
    node: Arc<Built>,
}

fn entry_order<S: Scalar>(a: &Entry<S>, b: &Entry<S>) -> Ordering {
    a.cost
        .total_cmp_cost(&b.cost)
        .then(a.n_reactions.cmp(&b.n_reactions))
        .then_with(|| a.hash.cmp(&b.hash))
}

/// Candidate combination of child routes, ordered cheapest first.
struct Combo<S> {
    cost: S,
    n_reactions: usize,
    idx: Vec<usize>,
}

impl<S: Scalar> PartialEq for Combo<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<S: Scalar> Eq for Combo<S> {}
impl<S: Scalar> PartialOrd for Combo<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<S: Scalar> Ord for Combo<S> {
    // reversed so BinaryHeap pops the cheapest
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp_cost(&self.cost)
            .then(other.n_reactions.cmp(&self.n_reactions))
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

/// Enumerate solved routes of the root best-first, deduplicated by route
/// hash, at most `cap`, ranked by (cost, reaction count, hash).
pub fn extract_routes<S: Scalar>(tree: &SearchTree<S>, cap: usize) -> Vec<ScoredRoute<S>> {
    if !tree.is_solved() || cap == 0 {
        return Vec::new();
    }
    let n = tree.mols.len();
    let mut lists: Vec<Vec<Entry<S>>> = (0..n).map(|_| Vec::new()).collect();
    // children always have larger ids than their parents
    for m in (0..n).rev() {
        let node = &tree.mols[m];
        if !node.solved {
            continue;
        }
        let list = match node.state {
            MolState::StockLeaf => vec![Entry {
                cost: S::zero(),
                n_reactions: 0,
                hash: leaf_hash(&node.key),
                node: Arc::new(Built::Leaf(m)),
            }],
            MolState::Expanded => {
                let mut all = Vec::new();
                for &r in &node.reactions {
                    if tree.rxns[r].solved {
                        all.extend(reaction_routes(tree, m, r, &lists, cap));
                    }
                }
                all.sort_by(entry_order);
                let mut seen = HashSet::new();
                all.retain(|e| seen.insert(e.hash.clone()));
                all.truncate(cap);
                all
            }
            MolState::Frontier | MolState::Dead => unreachable!("solved molecules are leaves or expanded"),
        };
        lists[m] = list;
    }
    std::mem::take(&mut lists[0])
        .into_iter()
        .map(|e| ScoredRoute { route: Route { root: build(tree, &e.node) }, cost: e.cost, n_reactions: e.n_reactions, hash: e.hash })
        .collect()
}

fn reaction_routes<S: Scalar>(
    tree: &SearchTree<S>,
    m: MolId,
    r: RxnId,
    lists: &[Vec<Entry<S>>],
    cap: usize,
) -> Vec<Entry<S>> {
    let rx = &tree.rxns[r];
    let kids: Vec<&Vec<Entry<S>>> = rx.children.iter().map(|&c| &lists[c]).collect();
    let combo = |idx: Vec<usize>| {
        let mut cost = rx.cost;
        let mut n_reactions = 1;
        for (l, &i) in kids.iter().zip(&idx) {
            cost = cost.sat_add(l[i].cost);
            n_reactions += l[i].n_reactions;
        }
        Combo { cost, n_reactions, idx }
    };
    let mut heap = BinaryHeap::new();
    let mut queued: HashSet<Vec<usize>> = HashSet::new();
    let start = vec![0; kids.len()];
    queued.insert(start.clone());
    heap.push(combo(start));
    let mut out = Vec::new();
    let mut hashes = HashSet::new();
    while let Some(c) = heap.pop() {
        let mut child_hashes: Vec<String> = kids.iter().zip(&c.idx).map(|(l, &i)| l[i].hash.clone()).collect();
        let hash = internal_hash(&tree.mols[m].key, &mut child_hashes);
        if hashes.insert(hash.clone()) {
            let children = kids.iter().zip(&c.idx).map(|(l, &i)| Arc::clone(&l[i].node)).collect();
            out.push(Entry {
                cost: c.cost,
                n_reactions: c.n_reactions,
                hash,
                node: Arc::new(Built::Made { mol: m, rxn: r, children }),
            });
            if out.len() >= cap {
                break;
            }
        }
        for k in 0..c.idx.len() {
            if c.idx[k] + 1 < kids[k].len() {
                let mut next = c.idx.clone();
                next[k] += 1;
                if queued.insert(next.clone()) {
                    heap.push(combo(next));
                }
            }
        }
    }
    out
}

fn build<S: Scalar>(tree: &SearchTree<S>, b: &Built) -> RouteMol {
    match b {
        Built::Leaf(m) => RouteMol::leaf(tree.mols[*m].key.clone(), true),
        Built::Made { mol, rxn, children } => {
            let rx = &tree.rxns[*rxn];
            RouteMol {
                key: tree.mols[*mol].key.clone(),
                in_stock: false,
                reaction: Some(RouteRxn {
                    prior: Some(rx.prior),
                    rank: Some(rx.rank),
                    children: children.iter().map(|c| build(tree, c)).collect(),
                }),
            }
        }
    }
}
