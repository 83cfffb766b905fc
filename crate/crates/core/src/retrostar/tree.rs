use crate::molgraph::CanonicalKey;
use crate::scalar::Scalar;

pub type MolId = usize;
pub type RxnId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MolState {
    Frontier,
    Expanded,
    StockLeaf,
    Dead,
}

#[derive(Debug, Clone)]
pub struct MolNode<S> {
    pub key: CanonicalKey,
    pub depth: usize,
    pub state: MolState,
    pub value: S,
    pub solved: bool,
    pub parent: Option<RxnId>,
    pub reactions: Vec<RxnId>,
}

#[derive(Debug, Clone)]
pub struct RxnNode<S> {
    pub prior: f64,
    pub rank: usize,
    pub cost: S,
    /// cost + Σ V(children)
    pub value: S,
    pub solved: bool,
    pub parent: MolId,
    pub children: Vec<MolId>,
}

/// AND/OR search tree. Molecule ids follow insertion order; the root is 0.
#[derive(Debug, Clone)]
pub struct SearchTree<S> {
    pub mols: Vec<MolNode<S>>,
    pub rxns: Vec<RxnNode<S>>,
}

impl<S: Scalar> SearchTree<S> {
    pub fn new(root: CanonicalKey, in_stock: bool) -> Self {
        let state = if in_stock { MolState::StockLeaf } else { MolState::Frontier };
        let mut t = SearchTree { mols: Vec::new(), rxns: Vec::new() };
        t.push_mol(root, 0, state, None);
        t
    }

    pub fn root(&self) -> &MolNode<S> {
        &self.mols[0]
    }

    pub fn is_solved(&self) -> bool {
        self.mols[0].solved
    }

    pub(crate) fn push_mol(&mut self, key: CanonicalKey, depth: usize, state: MolState, parent: Option<RxnId>) -> MolId {
        let value = if state == MolState::Dead { S::infinity() } else { S::zero() };
        self.mols.push(MolNode {
            key,
            depth,
            state,
            value,
            solved: state == MolState::StockLeaf,
            parent,
            reactions: Vec::new(),
        });
        self.mols.len() - 1
    }

    pub(crate) fn push_rxn(&mut self, parent: MolId, prior: f64, rank: usize, cost: S) -> RxnId {
        self.rxns.push(RxnNode { prior, rank, cost, value: cost, solved: false, parent, children: Vec::new() });
        let id = self.rxns.len() - 1;
        self.mols[parent].reactions.push(id);
        id
    }

    /// Molecules on the path from `m` up to the root, including `m`.
    pub fn ancestors(&self, m: MolId) -> Vec<&CanonicalKey> {
        let mut out = vec![&self.mols[m].key];
        let mut cur = m;
        while let Some(r) = self.mols[cur].parent {
            cur = self.rxns[r].parent;
            out.push(&self.mols[cur].key);
        }
        out
    }

    fn rxn_value(&self, r: RxnId) -> (S, bool) {
        let rx = &self.rxns[r];
        let mut v = rx.cost;
        let mut solved = true;
        for &c in &rx.children {
            v = v.sat_add(self.mols[c].value);
            solved &= self.mols[c].solved;
        }
        (v, solved)
    }

    fn mol_value(&self, m: MolId) -> (S, bool) {
        let node = &self.mols[m];
        match node.state {
            MolState::Frontier => (S::zero(), false),
            MolState::StockLeaf => (S::zero(), true),
            MolState::Dead => (S::infinity(), false),
            MolState::Expanded => {
                let mut best = S::infinity();
                let mut solved = false;
                for &r in &node.reactions {
                    let v = self.rxns[r].value;
                    if v < best {
                        best = v;
                    }
                    solved |= self.rxns[r].solved;
                }
                (best, solved)
            }
        }
    }

    pub(crate) fn refresh_rxn(&mut self, r: RxnId) {
        let (v, s) = self.rxn_value(r);
        self.rxns[r].value = v;
        self.rxns[r].solved = s;
    }

    /// Recompute values and solved flags from `m` up to the root.
    pub(crate) fn update_upwards(&mut self, m: MolId) {
        let mut cur = m;
        loop {
            let (v, s) = self.mol_value(cur);
            self.mols[cur].value = v;
            self.mols[cur].solved = s;
            let Some(r) = self.mols[cur].parent else { break };
            self.refresh_rxn(r);
            cur = self.rxns[r].parent;
        }
    }

    /// Priority of every frontier molecule: the cost of the cheapest partial
    /// solution tree of the root that contains it. Computed top-down as
    /// A(child) = A(parent) + cost(r) + Σ V(siblings); a frontier node's own
    /// value is 0. Non-frontier entries are `None`.
    pub fn priorities(&self) -> Vec<Option<S>> {
        let mut acc: Vec<S> = vec![S::zero(); self.mols.len()];
        let mut out = vec![None; self.mols.len()];
        // ids increase from parent to child, so one forward sweep is top-down
        for m in 0..self.mols.len() {
            let node = &self.mols[m];
            match node.state {
                MolState::Frontier => out[m] = Some(acc[m]),
                MolState::Expanded => {
                    for &r in &node.reactions {
                        let rx = &self.rxns[r];
                        for &c in &rx.children {
                            let mut a = acc[m].sat_add(rx.cost);
                            for &s in &rx.children {
                                if s != c {
                                    a = a.sat_add(self.mols[s].value);
                                }
                            }
                            acc[c] = a;
                        }
                    }
                }
                MolState::StockLeaf | MolState::Dead => {}
            }
        }
        out
    }

    /// Frontier molecule with the lowest finite priority; ties go to the
    /// shallower node, then the earlier one.
    pub fn select(&self) -> Option<(MolId, S)> {
        let mut best: Option<(MolId, S)> = None;
        for (m, p) in self.priorities().into_iter().enumerate() {
            let Some(p) = p else { continue };
            if !p.is_finite() {
                continue;
            }
            let better = match best {
                None => true,
                Some((b, bp)) => p < bp || (p == bp && self.mols[m].depth < self.mols[b].depth),
            };
            if better {
                best = Some((m, p));
            }
        }
        best
    }

    /// Check every structural and value invariant; the message names the
    /// first violation.
    pub fn audit(&self, max_depth: usize) -> Result<(), String> {
        for (m, node) in self.mols.iter().enumerate() {
            if node.depth > max_depth {
                return Err(format!("mol {m} at depth {} beyond {max_depth}", node.depth));
            }
            let (v, s) = self.mol_value(m);
            if v != node.value || s != node.solved {
                return Err(format!("mol {m}: stored ({}, {}) expected ({v}, {s})", node.value, node.solved));
            }
            if node.state != MolState::Expanded && !node.reactions.is_empty() {
                return Err(format!("mol {m} has reactions but is {:?}", node.state));
            }
            if node.state == MolState::Expanded && node.reactions.is_empty() {
                return Err(format!("mol {m} expanded without reactions"));
            }
            if node.state == MolState::Frontier && node.depth >= max_depth {
                return Err(format!("frontier mol {m} at depth limit"));
            }
            if let Some(r) = node.parent {
                let p = self.rxns[r].parent;
                if self.mols[p].depth + 1 != node.depth {
                    return Err(format!("mol {m} depth does not follow its parent"));
                }
                if self.ancestors(p).contains(&&node.key) {
                    return Err(format!("mol {m} repeats an ancestor"));
                }
            }
        }
        for (r, rx) in self.rxns.iter().enumerate() {
            let (v, s) = self.rxn_value(r);
            if v != rx.value || s != rx.solved {
                return Err(format!("rxn {r}: stored ({}, {}) expected ({v}, {s})", rx.value, rx.solved));
            }
            if rx.cost < S::zero() {
                return Err(format!("rxn {r} has negative cost"));
            }
        }
        Ok(())
    }
}
