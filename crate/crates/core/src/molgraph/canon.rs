//! Canonical atom labeling.
//!
//! Ranks start from local atom invariants and are refined by neighbor ranks
//! until the partition is stable. Remaining ties are broken by trying each
//! member of the first tied class, refining again, and keeping the labeling
//! whose graph encoding is lexicographically smallest. Automorphisms found
//! along the way prune equivalent choices.

use super::{BondDir, Csr, MolGraph, Neighbor};

/// Leaf budget for the tie-break search. Only reached by very large, highly
/// symmetric graphs.
const MAX_LEAVES: usize = 20_000;

pub(crate) struct Labeling {
    /// `label[atom]`, a permutation of `0..n`.
    pub label: Vec<usize>,
}

struct Ctx<'a> {
    g: &'a MolGraph,
    /// (neighbor, bond order code)
    adj: Csr<(usize, u8)>,
}

pub(crate) fn canonical_labeling(g: &MolGraph) -> Labeling {
    let n = g.atoms.len();
    if n == 0 {
        return Labeling { label: Vec::new() };
    }
    let adj = g.csr(|j, bond| {
        let b = &g.bonds[bond];
        (j, b.order.code() + if b.dir.is_some() { 8 } else { 0 })
    });
    let ctx = Ctx { g, adj };

    let inv: Vec<[i64; 8]> = g
        .atoms
        .iter()
        .enumerate()
        .map(|(i, a)| {
            [
                a.atomic_number() as i64,
                a.aromatic as i64,
                a.charge as i64,
                ctx.adj.row(i).len() as i64,
                a.hydrogens as i64,
                a.isotope.map_or(-1, |v| v as i64),
                a.bracket as i64,
                a.chirality.is_some() as i64,
            ]
        })
        .collect();
    let mut ranks = dense_ranks(&inv);
    refine(&ctx, &mut ranks);

    let mut search = Search { best: None, autos: Vec::new(), leaves: 0 };
    search.descend(&ctx, ranks, &mut Vec::new());
    let (_, label) = search.best.expect("at least one leaf");
    Labeling { label }
}

fn dense_ranks<T: Ord>(keys: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut ranks = vec![0; keys.len()];
    let mut r = 0;
    for w in 0..idx.len() {
        if w > 0 && keys[idx[w]] != keys[idx[w - 1]] {
            r += 1;
        }
        ranks[idx[w]] = r;
    }
    ranks
}

fn class_count(ranks: &[usize]) -> usize {
    ranks.iter().max().map_or(0, |m| m + 1)
}

fn refine(ctx: &Ctx<'_>, ranks: &mut Vec<usize>) {
    let n = ranks.len();
    let mut classes = class_count(ranks);
    // neighbor signatures packed as (rank << 8 | bond code), flat per atom
    let mut buf: Vec<u64> = Vec::new();
    let mut off = vec![0usize; n + 1];
    let mut idx: Vec<usize> = (0..n).collect();
    while classes < n {
        buf.clear();
        for i in 0..n {
            off[i] = buf.len();
            buf.extend(ctx.adj.row(i).iter().map(|&(j, c)| ((ranks[j] as u64) << 8) | c as u64));
            buf[off[i]..].sort_unstable();
        }
        off[n] = buf.len();
        let sig = |a: usize| &buf[off[a]..off[a + 1]];
        idx.sort_unstable_by(|&a, &b| ranks[a].cmp(&ranks[b]).then_with(|| sig(a).cmp(sig(b))));
        let mut next = vec![0usize; n];
        let mut r = 0;
        for w in 1..n {
            let (a, b) = (idx[w - 1], idx[w]);
            if ranks[a] != ranks[b] || sig(a) != sig(b) {
                r += 1;
            }
            next[b] = r;
        }
        *ranks = next;
        if r + 1 == classes {
            break;
        }
        classes = r + 1;
    }
}

struct Search {
    best: Option<(Vec<i64>, Vec<usize>)>,
    autos: Vec<Vec<usize>>,
    leaves: usize,
}

impl Search {
    fn descend(&mut self, ctx: &Ctx<'_>, ranks: Vec<usize>, prefix: &mut Vec<usize>) {
        let n = ranks.len();
        if class_count(&ranks) == n {
            self.leaf(ctx, ranks);
            return;
        }
        // first tied class by rank value
        let mut size = vec![0usize; n];
        for &r in &ranks {
            size[r] += 1;
        }
        let target = (0..n).find(|&r| size[r] > 1).expect("a tied class");
        let cell: Vec<usize> = (0..n).filter(|&i| ranks[i] == target).collect();

        let mut tried: Vec<usize> = Vec::new();
        for &v in &cell {
            if self.leaves >= MAX_LEAVES && self.best.is_some() {
                return;
            }
            if !tried.is_empty() && self.equivalent_to_tried(v, &tried, prefix) {
                continue;
            }
            tried.push(v);
            let keys: Vec<(usize, bool)> = (0..n).map(|i| (ranks[i], i != v)).collect();
            let mut next = dense_ranks(&keys);
            refine(ctx, &mut next);
            prefix.push(v);
            self.descend(ctx, next, prefix);
            prefix.pop();
        }
    }

    /// Is `v` in the orbit of an already tried vertex under the automorphisms
    /// found so far that fix `prefix` pointwise?
    fn equivalent_to_tried(&self, v: usize, tried: &[usize], prefix: &[usize]) -> bool {
        let gens: Vec<&Vec<usize>> = self
            .autos
            .iter()
            .filter(|g| prefix.iter().all(|&p| g[p] == p))
            .collect();
        if gens.is_empty() {
            return false;
        }
        let n = gens[0].len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for g in gens {
            for (i, &j) in g.iter().enumerate() {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
        let rv = find(&mut parent, v);
        tried.iter().any(|&t| find(&mut parent, t) == rv)
    }

    fn leaf(&mut self, ctx: &Ctx<'_>, label: Vec<usize>) {
        self.leaves += 1;
        let enc = encode(ctx.g, &label);
        match &self.best {
            None => self.best = Some((enc, label)),
            Some((best_enc, best_label)) => match enc.cmp(best_enc) {
                std::cmp::Ordering::Less => self.best = Some((enc, label)),
                std::cmp::Ordering::Equal => {
                    // atom i here plays the role of the best-labeled atom with the same label
                    let mut inv = vec![0; label.len()];
                    for (atom, &l) in best_label.iter().enumerate() {
                        inv[l] = atom;
                    }
                    let auto: Vec<usize> = label.iter().map(|&l| inv[l]).collect();
                    if auto.iter().enumerate().any(|(i, &j)| i != j) {
                        self.autos.push(auto);
                    }
                }
                std::cmp::Ordering::Greater => {}
            },
        }
    }
}

/// Chirality of `atom` re-expressed against neighbors sorted by `label`.
/// Returns 0 for none, 1 for `@`, 2 for `@@`.
pub(crate) fn chirality_code(g: &MolGraph, atom: usize, label: &[usize]) -> i64 {
    let Some(ch) = &g.atoms[atom].chirality else {
        return 0;
    };
    let key = |n: &Neighbor| match n {
        Neighbor::ImplicitH => -1i64,
        Neighbor::Atom(i) => label[*i] as i64,
    };
    let keys: Vec<i64> = ch.order.iter().map(key).collect();
    let clockwise = ch.clockwise ^ odd_permutation(&keys);
    if clockwise {
        2
    } else {
        1
    }
}

/// Parity of the permutation that sorts `keys` (distinct values).
pub(crate) fn odd_permutation(keys: &[i64]) -> bool {
    let mut inversions = 0usize;
    for i in 0..keys.len() {
        for j in i + 1..keys.len() {
            if keys[i] > keys[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 1
}

fn encode(g: &MolGraph, label: &[usize]) -> Vec<i64> {
    let n = label.len();
    let mut by_label = vec![0usize; n];
    for (atom, &l) in label.iter().enumerate() {
        by_label[l] = atom;
    }
    let mut enc = Vec::with_capacity(n * 8 + g.bonds.len() * 4);
    for &atom in &by_label {
        let a = &g.atoms[atom];
        enc.extend_from_slice(&[
            a.atomic_number() as i64,
            a.aromatic as i64,
            a.charge as i64,
            a.hydrogens as i64,
            a.isotope.map_or(-1, |v| v as i64),
            a.bracket as i64,
            chirality_code(g, atom, label),
        ]);
    }
    let mut bonds: Vec<[i64; 4]> = g
        .bonds
        .iter()
        .map(|b| {
            let (la, lb) = (label[b.a], label[b.b]);
            let dir = b.dir.map(|d| if la > lb { d.flipped() } else { d });
            let dir_code = match dir {
                None => 0,
                Some(BondDir::Up) => 1,
                Some(BondDir::Down) => 2,
            };
            [la.min(lb) as i64, la.max(lb) as i64, b.order.code() as i64, dir_code]
        })
        .collect();
    bonds.sort_unstable();
    for b in bonds {
        enc.extend_from_slice(&b);
    }
    enc
}
