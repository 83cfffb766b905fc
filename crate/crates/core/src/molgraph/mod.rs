//! Molecular graphs parsed from SMILES and their canonical identity.
//!
//! There is no valence model and no aromaticity perception: lowercase atoms
//! form their own atom class and only hydrogens written inside brackets are
//! stored. Two spellings name the same molecule exactly when their graphs are
//! isomorphic with identical atom and bond annotations.

mod canon;
mod elements;
mod parse;
mod write;

use std::borrow::Borrow;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use parse::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    pub(crate) fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }
}

/// Directional single-bond annotation (`/` or `\`), read from `a` to `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BondDir {
    Up,
    Down,
}

impl BondDir {
    pub fn flipped(self) -> BondDir {
        match self {
            BondDir::Up => BondDir::Down,
            BondDir::Down => BondDir::Up,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    pub dir: Option<BondDir>,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

/// Neighbor slot in a tetrahedral chirality specification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Neighbor {
    Atom(usize),
    ImplicitH,
}

/// `@` (anticlockwise) or `@@` (clockwise) relative to `order`, the neighbor
/// sequence as it appeared in the source string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chirality {
    pub clockwise: bool,
    pub order: Vec<Neighbor>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub element: &'static str,
    pub charge: i8,
    pub hydrogens: u8,
    pub aromatic: bool,
    pub isotope: Option<u16>,
    /// Written as a bracket atom. `[C]` and `C` are different atoms here.
    pub bracket: bool,
    pub chirality: Option<Chirality>,
}

impl Atom {
    pub(crate) fn atomic_number(&self) -> u8 {
        elements::atomic_number(self.element)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MolGraph {
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
    pub components: usize,
}

impl MolGraph {
    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn charge_sum(&self) -> i32 {
        self.atoms.iter().map(|a| a.charge as i32).sum()
    }

    /// Adjacency lists of `(neighbor, bond index)`.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.atoms.len()];
        for (i, b) in self.bonds.iter().enumerate() {
            adj[b.a].push((b.b, i));
            adj[b.b].push((b.a, i));
        }
        adj
    }

    /// Same as [`adjacency`](Self::adjacency) in one flat allocation.
    pub(crate) fn csr<T: Copy>(&self, f: impl Fn(usize, usize) -> T) -> Csr<T> {
        let n = self.atoms.len();
        let mut start = vec![0usize; n + 1];
        for b in &self.bonds {
            start[b.a + 1] += 1;
            start[b.b + 1] += 1;
        }
        for i in 0..n {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut items = Vec::with_capacity(2 * self.bonds.len());
        if let Some(b) = self.bonds.first() {
            items.resize(2 * self.bonds.len(), f(b.b, 0));
        }
        for (i, b) in self.bonds.iter().enumerate() {
            items[fill[b.a]] = f(b.b, i);
            fill[b.a] += 1;
            items[fill[b.b]] = f(b.a, i);
            fill[b.b] += 1;
        }
        Csr { start, items }
    }

    /// Component index of every atom, numbered in order of first atom.
    pub fn component_ids(&self) -> Vec<usize> {
        let n = self.atoms.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for b in &self.bonds {
            let (ra, rb) = (find(&mut parent, b.a), find(&mut parent, b.b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut ids = vec![usize::MAX; n];
        let mut root_id = vec![usize::MAX; n];
        let mut next = 0;
        for (i, id) in ids.iter_mut().enumerate() {
            let r = find(&mut parent, i);
            if root_id[r] == usize::MAX {
                root_id[r] = next;
                next += 1;
            }
            *id = root_id[r];
        }
        ids
    }

    /// Renumber atoms: atom `i` becomes atom `perm[i]`.
    ///
    /// Panics if `perm` is not a permutation of `0..atom_count()`.
    pub fn permuted(&self, perm: &[usize]) -> MolGraph {
        assert_eq!(perm.len(), self.atoms.len(), "permutation length mismatch");
        let mut slots: Vec<Option<Atom>> = vec![None; self.atoms.len()];
        for (old, atom) in self.atoms.iter().enumerate() {
            let mut atom = atom.clone();
            if let Some(ch) = atom.chirality.as_mut() {
                for n in ch.order.iter_mut() {
                    if let Neighbor::Atom(i) = n {
                        *i = perm[*i];
                    }
                }
            }
            assert!(slots[perm[old]].is_none(), "not a permutation");
            slots[perm[old]] = Some(atom);
        }
        let atoms = slots.into_iter().map(|a| a.expect("not a permutation")).collect();
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond { a: perm[b.a], b: perm[b.b], order: b.order, dir: b.dir })
            .collect();
        MolGraph { atoms, bonds, components: self.components }
    }

    /// Split into one graph per connected component, in order of first atom.
    pub fn split_components(&self) -> Vec<MolGraph> {
        if self.components <= 1 {
            return vec![self.clone()];
        }
        let ids = self.component_ids();
        let mut local = vec![0usize; self.atoms.len()];
        let mut parts: Vec<MolGraph> = (0..self.components)
            .map(|_| MolGraph { atoms: Vec::new(), bonds: Vec::new(), components: 1 })
            .collect();
        for (i, atom) in self.atoms.iter().enumerate() {
            let part = &mut parts[ids[i]];
            local[i] = part.atoms.len();
            part.atoms.push(atom.clone());
        }
        for part_atoms in parts.iter_mut() {
            for atom in part_atoms.atoms.iter_mut() {
                if let Some(ch) = atom.chirality.as_mut() {
                    for n in ch.order.iter_mut() {
                        if let Neighbor::Atom(j) = n {
                            *j = local[*j];
                        }
                    }
                }
            }
        }
        for b in &self.bonds {
            parts[ids[b.a]].bonds.push(Bond { a: local[b.a], b: local[b.b], order: b.order, dir: b.dir });
        }
        parts
    }

    pub fn canonical_key(&self) -> CanonicalKey {
        CanonicalKey::from_canonical(write::write_canonical(self))
    }

    pub fn to_canonical_smiles(&self) -> String {
        write::write_canonical(self)
    }
}

impl FromStr for MolGraph {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_smiles(s)
    }
}

pub fn parse_smiles(text: &str) -> Result<MolGraph, ParseError> {
    parse::parse_bytes(text.as_bytes())
}

/// Parse arbitrary bytes; never panics.
pub fn parse_smiles_bytes(bytes: &[u8]) -> Result<MolGraph, ParseError> {
    parse::parse_bytes(bytes)
}

pub fn canonical_key(mol: &MolGraph) -> CanonicalKey {
    mol.canonical_key()
}

pub fn write_canonical_smiles(mol: &MolGraph) -> String {
    mol.to_canonical_smiles()
}

/// Parse and canonicalize in one step.
pub fn key_of(smiles: &str) -> Result<CanonicalKey, ParseError> {
    Ok(parse_smiles(smiles)?.canonical_key())
}

/// Flat adjacency lists: row `i` holds the entries for atom `i`.
pub(crate) struct Csr<T> {
    start: Vec<usize>,
    items: Vec<T>,
}

impl<T> Csr<T> {
    pub(crate) fn row(&self, i: usize) -> &[T] {
        &self.items[self.start[i]..self.start[i + 1]]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.items[self.start[i]..self.start[i + 1]]
    }
}

/// Order-invariant molecule identity: the canonical SMILES string.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey(Arc<str>);

impl CanonicalKey {
    fn from_canonical(s: String) -> Self {
        CanonicalKey(Arc::from(s))
    }

    /// Wrap a string that is already canonical, e.g. read back from a file
    /// this crate wrote. No parsing or validation happens.
    pub fn from_trusted(s: &str) -> Self {
        CanonicalKey(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn to_graph(&self) -> MolGraph {
        parse_smiles(&self.0).expect("canonical keys are valid SMILES")
    }
}

impl fmt::Debug for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for CanonicalKey {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl Serialize for CanonicalKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for CanonicalKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(CanonicalKey(Arc::from(s)))
    }
}
