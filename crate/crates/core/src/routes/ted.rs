use std::collections::HashMap;

use super::{route_hash, Route, RouteMol};
use crate::fingerprint::{morgan_fingerprint, tanimoto, Fingerprint, DEFAULT_NBITS, DEFAULT_RADIUS};
use crate::molgraph::CanonicalKey;
use crate::scalar::Scalar;

/// Edit costs for [`zhang_shasha`].
pub trait TedCosts<L, S> {
    fn insert(&self, b: &L) -> S;
    fn delete(&self, a: &L) -> S;
    fn substitute(&self, a: &L, b: &L) -> S;
}

/// Ordered tree in postorder with the bookkeeping Zhang–Shasha needs.
#[derive(Debug, Clone)]
pub struct OrderedTree<L> {
    labels: Vec<L>,
    /// leftmost leaf descendant of each node (postorder index)
    lmld: Vec<usize>,
    keyroots: Vec<usize>,
}

impl<L> OrderedTree<L> {
    pub fn build<T>(root: &T, label: impl Fn(&T) -> L, children: impl Fn(&T) -> &[T]) -> Self {
        fn walk<T, L>(
            node: &T,
            label: &impl Fn(&T) -> L,
            children: &impl Fn(&T) -> &[T],
            labels: &mut Vec<L>,
            lmld: &mut Vec<usize>,
        ) -> usize {
            let mut first_leaf = None;
            for c in children(node) {
                let l = walk(c, label, children, labels, lmld);
                first_leaf.get_or_insert(l);
            }
            let idx = labels.len();
            labels.push(label(node));
            lmld.push(first_leaf.unwrap_or(idx));
            lmld[idx]
        }
        let mut labels = Vec::new();
        let mut lmld = Vec::new();
        walk(root, &label, &children, &mut labels, &mut lmld);
        let n = labels.len();
        let mut seen = vec![false; n];
        let mut keyroots = Vec::new();
        for i in (0..n).rev() {
            if !seen[lmld[i]] {
                seen[lmld[i]] = true;
                keyroots.push(i);
            }
        }
        keyroots.reverse();
        OrderedTree { labels, lmld, keyroots }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Labels in postorder.
    pub fn labels(&self) -> &[L] {
        &self.labels
    }
}

fn min3<S: Scalar>(a: S, b: S, c: S) -> S {
    let m = if b < a { b } else { a };
    if c < m {
        c
    } else {
        m
    }
}

/// Exact ordered tree edit distance.
pub fn zhang_shasha<L, S: Scalar>(a: &OrderedTree<L>, b: &OrderedTree<L>, costs: &impl TedCosts<L, S>) -> S {
    let (n, m) = (a.len(), b.len());
    if n == 0 {
        return b.labels.iter().fold(S::zero(), |acc, l| acc + costs.insert(l));
    }
    if m == 0 {
        return a.labels.iter().fold(S::zero(), |acc, l| acc + costs.delete(l));
    }
    let mut td = vec![vec![S::zero(); m]; n];
    // forest distance, offset by one so index 0 is the empty forest
    let mut fd = vec![vec![S::zero(); m + 1]; n + 1];
    for &i in &a.keyroots {
        for &j in &b.keyroots {
            let (li, lj) = (a.lmld[i], b.lmld[j]);
            fd[li][lj] = S::zero();
            for di in li..=i {
                fd[di + 1][lj] = fd[di][lj] + costs.delete(&a.labels[di]);
            }
            for dj in lj..=j {
                fd[li][dj + 1] = fd[li][dj] + costs.insert(&b.labels[dj]);
            }
            for di in li..=i {
                for dj in lj..=j {
                    let del = fd[di][dj + 1] + costs.delete(&a.labels[di]);
                    let ins = fd[di + 1][dj] + costs.insert(&b.labels[dj]);
                    if a.lmld[di] == li && b.lmld[dj] == lj {
                        let sub = fd[di][dj] + costs.substitute(&a.labels[di], &b.labels[dj]);
                        let v = min3(del, ins, sub);
                        fd[di + 1][dj + 1] = v;
                        td[di][dj] = v;
                    } else {
                        let sub = fd[a.lmld[di]][b.lmld[dj]] + td[di][dj];
                        fd[di + 1][dj + 1] = min3(del, ins, sub);
                    }
                }
            }
        }
    }
    td[n - 1][m - 1]
}

/// Molecule-only view of a route: reaction nodes collapsed, reactants
/// ordered by canonical key (subtree hash on ties).
#[derive(Debug, Clone, PartialEq)]
pub struct MolTree {
    pub key: CanonicalKey,
    pub children: Vec<MolTree>,
}

impl MolTree {
    pub fn from_route(route: &Route) -> Self {
        fn conv(m: &RouteMol) -> (MolTree, String) {
            let mut kids: Vec<(MolTree, String)> = match &m.reaction {
                None => Vec::new(),
                Some(r) => r.children.iter().map(conv).collect(),
            };
            kids.sort_by(|a, b| a.0.key.cmp(&b.0.key).then_with(|| a.1.cmp(&b.1)));
            let hash = route_hash(&Route { root: m.clone() });
            (MolTree { key: m.key.clone(), children: kids.into_iter().map(|k| k.0).collect() }, hash)
        }
        conv(&route.root).0
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(MolTree::size).sum::<usize>()
    }
}

/// Unit insert/delete, substitution 1 − Tanimoto of indexed fingerprints.
pub(crate) struct TanimotoCosts<'a> {
    pub fps: &'a [Fingerprint],
}

impl TedCosts<usize, f64> for TanimotoCosts<'_> {
    fn insert(&self, _: &usize) -> f64 {
        1.0
    }
    fn delete(&self, _: &usize) -> f64 {
        1.0
    }
    fn substitute(&self, a: &usize, b: &usize) -> f64 {
        if a == b {
            return 0.0;
        }
        1.0 - tanimoto(&self.fps[*a], &self.fps[*b]).expect("same width")
    }
}

/// Fingerprints for every molecule seen, indexed for TED labels.
#[derive(Default)]
pub(crate) struct FingerprintTable {
    index: HashMap<CanonicalKey, usize>,
    pub fps: Vec<Fingerprint>,
}

impl FingerprintTable {
    pub fn id(&mut self, key: &CanonicalKey) -> usize {
        if let Some(&i) = self.index.get(key) {
            return i;
        }
        let fp = morgan_fingerprint(&key.to_graph(), DEFAULT_RADIUS, DEFAULT_NBITS).expect("default width is valid");
        self.fps.push(fp);
        self.index.insert(key.clone(), self.fps.len() - 1);
        self.fps.len() - 1
    }

    pub fn tree(&mut self, route: &Route) -> OrderedTree<usize> {
        let t = MolTree::from_route(route);
        let mut ids = HashMap::new();
        collect_keys(&t, &mut |k| {
            ids.entry(k.clone()).or_insert_with(|| self.id(k));
        });
        OrderedTree::build(&t, |n| ids[&n.key], |n| &n.children)
    }
}

fn collect_keys(t: &MolTree, f: &mut impl FnMut(&CanonicalKey)) {
    f(&t.key);
    for c in &t.children {
        collect_keys(c, f);
    }
}

pub(crate) fn normalized_ted(table: &FingerprintTable, a: &OrderedTree<usize>, b: &OrderedTree<usize>) -> (f64, f64) {
    let raw = zhang_shasha(a, b, &TanimotoCosts { fps: &table.fps });
    (raw, raw / (a.len() + b.len()) as f64)
}

/// Tree edit distance between two routes: (raw, raw / total node count).
pub fn route_ted(a: &Route, b: &Route) -> (f64, f64) {
    let mut table = FingerprintTable::default();
    let ta = table.tree(a);
    let tb = table.tree(b);
    normalized_ted(&table, &ta, &tb)
}
