use super::canon::{canonical_labeling, odd_permutation};
use super::elements;
use super::{Atom, BondDir, BondOrder, Csr, MolGraph, Neighbor};

/// Canonical SMILES: depth-first from the lowest-labeled atom of each
/// component, neighbors visited in label order, components sorted as strings.
pub(crate) fn write_canonical(g: &MolGraph) -> String {
    let label = canonical_labeling(g).label;
    let n = g.atoms.len();
    let mut adj = g.csr(|j, bond| (j, bond));
    for i in 0..n {
        adj.row_mut(i).sort_unstable_by_key(|&(j, _)| label[j]);
    }

    let mut by_label: Vec<usize> = vec![0; n];
    for (atom, &l) in label.iter().enumerate() {
        by_label[l] = atom;
    }

    let mut w = ComponentWriter {
        g,
        parent: vec![None; n],
        children: vec![Vec::new(); n],
        rings: vec![Vec::new(); n],
        visited: vec![false; n],
        bond_seen: vec![false; g.bonds.len()],
        open_digit: vec![None; g.bonds.len()],
        scratch: Vec::new(),
    };
    let mut parts = Vec::new();
    for &root in &by_label {
        if w.visited[root] {
            continue;
        }
        w.walk(&adj, root);
        parts.push(w.write(root));
    }
    if parts.len() == 1 {
        return parts.pop().unwrap_or_default();
    }
    parts.sort();
    parts.join(".")
}

struct ComponentWriter<'a> {
    g: &'a MolGraph,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<(usize, usize)>>,
    /// ring closure bonds per atom: (partner, bond, is opening)
    rings: Vec<Vec<(usize, usize, bool)>>,
    visited: Vec<bool>,
    bond_seen: Vec<bool>,
    open_digit: Vec<Option<usize>>,
    scratch: Vec<usize>,
}

impl ComponentWriter<'_> {
    /// Iterative DFS that mirrors the recursive visiting order.
    fn walk(&mut self, adj: &Csr<(usize, usize)>, root: usize) {
        self.visited[root] = true;
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(&mut (u, ref mut next)) = stack.last_mut() {
            let row = adj.row(u);
            if *next >= row.len() {
                stack.pop();
                continue;
            }
            let (v, bond) = row[*next];
            *next += 1;
            if self.bond_seen[bond] {
                continue;
            }
            self.bond_seen[bond] = true;
            if self.visited[v] {
                // v was reached earlier: it opens, u closes
                self.rings[v].push((u, bond, true));
                self.rings[u].push((v, bond, false));
            } else {
                self.visited[v] = true;
                self.parent[v] = Some(u);
                self.children[u].push((v, bond));
                stack.push((v, 0));
            }
        }
    }

    fn write(&mut self, root: usize) -> String {
        let mut out = String::new();
        let mut in_use = [false; 100];
        let mut stack: Vec<Frame> = vec![Frame::Atom(root)];
        while let Some(frame) = stack.pop() {
            match frame {
                Frame::Close => out.push(')'),
                Frame::Open => out.push('('),
                Frame::Bond(from, bond) => self.bond_symbol(&mut out, from, bond),
                Frame::Atom(u) => {
                    self.atom_with_rings(&mut out, u, &mut in_use);
                    let kids = &self.children[u];
                    // push in reverse so the first child is written first
                    for (k, &(v, bond)) in kids.iter().enumerate().rev() {
                        let last = k + 1 == kids.len();
                        if !last {
                            stack.push(Frame::Close);
                        }
                        stack.push(Frame::Atom(v));
                        stack.push(Frame::Bond(u, bond));
                        if !last {
                            stack.push(Frame::Open);
                        }
                    }
                }
            }
        }
        out
    }

    fn atom_with_rings(&mut self, out: &mut String, u: usize, in_use: &mut [bool; 100]) {
        // ring digits: closings first, then openings, in label order of partner
        let clockwise = self.g.atoms[u].chirality.as_ref().map(|_| {
            let mut order: Vec<Neighbor> = Vec::new();
            if let Some(p) = self.parent[u] {
                order.push(Neighbor::Atom(p));
            }
            if self.g.atoms[u].hydrogens > 0 {
                order.push(Neighbor::ImplicitH);
            }
            order.extend(self.rings[u].iter().filter(|r| !r.2).map(|r| Neighbor::Atom(r.0)));
            order.extend(self.rings[u].iter().filter(|r| r.2).map(|r| Neighbor::Atom(r.0)));
            order.extend(self.children[u].iter().map(|&(v, _)| Neighbor::Atom(v)));
            self.written_clockwise(u, &order)
        });
        write_atom(out, &self.g.atoms[u], clockwise.flatten());

        self.scratch.clear();
        for &(_, bond, opening) in &self.rings[u] {
            if !opening {
                let d = self.open_digit[bond].take().expect("ring opened before closing");
                push_digit(out, d);
                self.scratch.push(d);
            }
        }
        for &(_, bond, opening) in &self.rings[u] {
            if opening {
                let d = (1..in_use.len()).find(|&d| !in_use[d]).expect("fewer than 100 open rings");
                in_use[d] = true;
                self.open_digit[bond] = Some(d);
                self.bond_symbol(out, u, bond);
                push_digit(out, d);
            }
        }
        for &d in &self.scratch {
            in_use[d] = false;
        }
    }

    /// Chirality of `u` expressed against the written neighbor order.
    fn written_clockwise(&self, u: usize, written: &[Neighbor]) -> Option<bool> {
        let ch = self.g.atoms[u].chirality.as_ref()?;
        let pos = |n: &Neighbor| written.iter().position(|w| w == n).map_or(i64::MAX, |p| p as i64);
        let keys: Vec<i64> = ch.order.iter().map(pos).collect();
        Some(ch.clockwise ^ odd_permutation(&keys))
    }

    fn bond_symbol(&self, out: &mut String, from: usize, bond: usize) {
        let b = &self.g.bonds[bond];
        let both_aromatic = self.g.atoms[b.a].aromatic && self.g.atoms[b.b].aromatic;
        if let Some(dir) = b.dir {
            let dir = if b.a == from { dir } else { dir.flipped() };
            out.push(match dir {
                BondDir::Up => '/',
                BondDir::Down => '\\',
            });
            return;
        }
        match b.order {
            BondOrder::Single if both_aromatic => out.push('-'),
            BondOrder::Single => {}
            BondOrder::Double => out.push('='),
            BondOrder::Triple => out.push('#'),
            BondOrder::Aromatic if both_aromatic => {}
            BondOrder::Aromatic => out.push(':'),
        }
    }
}

enum Frame {
    Atom(usize),
    Bond(usize, usize),
    Open,
    Close,
}

fn push_digit(out: &mut String, d: usize) {
    if d < 10 {
        out.push((b'0' + d as u8) as char);
    } else {
        out.push('%');
        out.push((b'0' + (d / 10) as u8) as char);
        out.push((b'0' + (d % 10) as u8) as char);
    }
}

fn write_atom(out: &mut String, a: &Atom, clockwise: Option<bool>) {
    let symbol = |out: &mut String| {
        if a.aromatic {
            out.push_str(&a.element.to_ascii_lowercase());
        } else {
            out.push_str(a.element);
        }
    };
    if !a.bracket && elements::organic_subset(a.element, a.aromatic) {
        symbol(out);
        return;
    }
    out.push('[');
    if let Some(iso) = a.isotope {
        out.push_str(&iso.to_string());
    }
    symbol(out);
    match clockwise {
        Some(true) => out.push_str("@@"),
        Some(false) => out.push('@'),
        None => {}
    }
    match a.hydrogens {
        0 => {}
        1 => out.push('H'),
        h => {
            out.push('H');
            out.push_str(&h.to_string());
        }
    }
    match a.charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        c if c > 0 => out.push_str(&format!("+{c}")),
        c => out.push_str(&format!("-{}", -c)),
    }
    out.push(']');
}
