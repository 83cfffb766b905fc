// Independent reference implementations for route comparison and clustering.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use retroplan::fingerprint::{morgan_fingerprint, tanimoto, Fingerprint, DEFAULT_NBITS, DEFAULT_RADIUS};
use retroplan::molgraph::{key_of, CanonicalKey};
use retroplan::routes::{route_hash, Route, RouteMol, RouteRxn};

pub const POOL: &[&str] = &[
    "CCO", "CC(=O)O", "c1ccccc1", "Cc1ccccc1", "CC(=O)OCC", "CCN", "NC(=O)c1ccccc1", "O=C(O)c1ccccc1", "CCCl",
    "OCCO", "C1CCNCC1", "CC(C)O", "Brc1ccccc1", "CC#N",
];

pub fn key(s: &str) -> CanonicalKey {
    key_of(s).unwrap()
}

#[derive(Debug, Clone)]
pub enum Shape {
    Leaf(usize),
    Node(usize, Vec<Shape>),
}

/// Random shape with at most `max_nodes` molecules.
pub fn random_shape(rng: &mut ChaCha8Rng, max_nodes: usize) -> Shape {
    fn grow(rng: &mut ChaCha8Rng, budget: &mut usize, depth: usize) -> Shape {
        let k = rng.gen_range(0..POOL.len());
        *budget -= 1;
        if *budget == 0 || depth >= 3 || rng.gen_bool(0.45) {
            return Shape::Leaf(k);
        }
        let n = rng.gen_range(1..=3).min(*budget);
        let mut kids = Vec::new();
        for _ in 0..n {
            if *budget == 0 {
                break;
            }
            kids.push(grow(rng, budget, depth + 1));
        }
        Shape::Node(k, kids)
    }
    let mut budget = max_nodes;
    grow(rng, &mut budget, 0)
}

/// Keys repeating an ancestor are bumped to the next free pool entry, so
/// every generated route is acyclic.
pub fn to_route(s: &Shape) -> Route {
    fn mol(s: &Shape, path: &mut Vec<usize>) -> RouteMol {
        let (Shape::Leaf(k) | Shape::Node(k, _)) = s;
        let mut k = *k;
        while path.contains(&k) {
            k = (k + 1) % POOL.len();
        }
        match s {
            Shape::Leaf(_) => RouteMol::leaf(key(POOL[k]), true),
            Shape::Node(_, c) => {
                path.push(k);
                let children = c.iter().map(|c| mol(c, path)).collect();
                path.pop();
                RouteMol {
                    key: key(POOL[k]),
                    in_stock: false,
                    reaction: Some(RouteRxn { prior: Some(0.5), rank: Some(1), children }),
                }
            }
        }
    }
    Route { root: mol(s, &mut Vec::new()) }
}

#[derive(Clone)]
pub struct T {
    key: CanonicalKey,
    kids: Vec<T>,
}

fn ordered(m: &RouteMol) -> T {
    let mut kids: Vec<(String, String, T)> = match &m.reaction {
        None => vec![],
        Some(r) => r
            .children
            .iter()
            .map(|c| (c.key.as_str().to_string(), route_hash(&Route { root: c.clone() }), ordered(c)))
            .collect(),
    };
    kids.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    T { key: m.key.clone(), kids: kids.into_iter().map(|k| k.2).collect() }
}

fn size(t: &T) -> usize {
    1 + t.kids.iter().map(size).sum::<usize>()
}

fn sig(f: &[T]) -> String {
    fn one(t: &T, out: &mut String) {
        out.push('(');
        out.push_str(t.key.as_str());
        for k in &t.kids {
            one(k, out);
        }
        out.push(')');
    }
    let mut s = String::new();
    for t in f {
        one(t, &mut s);
    }
    s
}

struct Oracle {
    memo: HashMap<(String, String), f64>,
    fps: HashMap<CanonicalKey, Fingerprint>,
}

impl Oracle {
    fn sub(&mut self, a: &CanonicalKey, b: &CanonicalKey) -> f64 {
        if a == b {
            return 0.0;
        }
        let mut fp = |k: &CanonicalKey| {
            self.fps
                .entry(k.clone())
                .or_insert_with(|| morgan_fingerprint(&k.to_graph(), DEFAULT_RADIUS, DEFAULT_NBITS).unwrap())
                .clone()
        };
        let (fa, fb) = (fp(a), fp(b));
        1.0 - tanimoto(&fa, &fb).unwrap()
    }

    /// Edit distance between ordered forests, peeling the rightmost roots.
    fn dist(&mut self, f: &[T], g: &[T]) -> f64 {
        if f.is_empty() && g.is_empty() {
            return 0.0;
        }
        let k = (sig(f), sig(g));
        if let Some(&d) = self.memo.get(&k) {
            return d;
        }
        let mut best = f64::INFINITY;
        if let Some((v, rest)) = f.split_last() {
            let mut f2 = rest.to_vec();
            f2.extend(v.kids.iter().cloned());
            best = best.min(self.dist(&f2, g) + 1.0);
        }
        if let Some((w, rest)) = g.split_last() {
            let mut g2 = rest.to_vec();
            g2.extend(w.kids.iter().cloned());
            best = best.min(self.dist(f, &g2) + 1.0);
        }
        if let (Some((v, fr)), Some((w, gr))) = (f.split_last(), g.split_last()) {
            let s = self.sub(&v.key, &w.key);
            best = best.min(self.dist(&v.kids, &w.kids) + self.dist(fr, gr) + s);
        }
        self.memo.insert(k, best);
        best
    }
}

pub fn oracle_ted(a: &Route, b: &Route) -> (f64, f64) {
    let (ta, tb) = (ordered(&a.root), ordered(&b.root));
    let mut o = Oracle { memo: HashMap::new(), fps: HashMap::new() };
    let raw = o.dist(std::slice::from_ref(&ta), std::slice::from_ref(&tb));
    (raw, raw / (size(&ta) + size(&tb)) as f64)
}

/// Sphere exclusion recomputing neighbor counts from scratch at every step.
pub fn butina_reference(d: &[Vec<f64>], cutoff: f64) -> Vec<(usize, Vec<usize>)> {
    let n = d.len();
    let mut assigned = vec![false; n];
    let mut out = Vec::new();
    while assigned.iter().any(|a| !a) {
        let near = |i: usize, assigned: &[bool]| -> Vec<usize> {
            (0..n).filter(|&j| j != i && !assigned[j] && d[i][j] <= cutoff).collect()
        };
        let mut best: Option<(usize, usize)> = None;
        for i in (0..n).filter(|&i| !assigned[i]) {
            let c = near(i, &assigned).len();
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((i, c));
            }
        }
        let (centroid, _) = best.unwrap();
        let mut members = near(centroid, &assigned);
        members.push(centroid);
        members.sort();
        for &m in &members {
            assigned[m] = true;
        }
        out.push((centroid, members));
    }
    out
}

