//! Synthesis routes: representation, interchange format, identity hashing,
//! gold-standard metrics, statistics, tree edit distance and clustering.

mod accuracy;
mod cluster;
mod ted;

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::molgraph::{key_of, CanonicalKey, ParseError};

pub use accuracy::{building_block_accuracy, route_accuracy, AccuracyReport, TopNAccuracy};
pub use cluster::{cluster_overlap_counts, cluster_routes, LabeledRoute, RouteClustering};
pub use ted::{route_ted, zhang_shasha, MolTree, OrderedTree, TedCosts};

/// Default top-n axis for accuracy reports.
pub const DEFAULT_TOP_N: [usize; 5] = [1, 3, 5, 10, 50];
/// Default normalized-TED cutoff for route clustering.
pub const DEFAULT_ROUTE_CUTOFF: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct RouteMol {
    pub key: CanonicalKey,
    pub in_stock: bool,
    pub reaction: Option<RouteRxn>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteRxn {
    pub prior: Option<f64>,
    pub rank: Option<usize>,
    pub children: Vec<RouteMol>,
}

/// A synthesis tree rooted at the target molecule.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub root: RouteMol,
}

#[derive(Debug, thiserror::Error)]
pub enum RouteError {
    #[error("invalid route JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("route schema violation: {0}")]
    Schema(String),
    #[error("unparsable SMILES '{smiles}' in route: {source}")]
    Smiles {
        smiles: String,
        #[source]
        source: ParseError,
    },
    #[error("molecule {0} repeats along a root-to-leaf path")]
    Cycle(CanonicalKey),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteStats {
    /// Longest root-to-leaf path, in reactions.
    pub max_depth: usize,
    /// Distinct leaf molecules.
    pub n_building_blocks: usize,
    pub reactants_per_reaction: Vec<usize>,
}

impl RouteMol {
    pub fn leaf(key: CanonicalKey, in_stock: bool) -> Self {
        RouteMol { key, in_stock, reaction: None }
    }

    pub fn is_leaf(&self) -> bool {
        self.reaction.is_none()
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a RouteMol)) {
        f(self);
        if let Some(r) = &self.reaction {
            for c in &r.children {
                c.visit(f);
            }
        }
    }
}

impl Route {
    pub fn target(&self) -> &CanonicalKey {
        &self.root.key
    }

    /// A route is complete when every leaf is in stock.
    pub fn is_complete(&self) -> bool {
        let mut ok = true;
        self.root.visit(&mut |m| ok &= !m.is_leaf() || m.in_stock);
        ok
    }

    /// Molecule nodes, preorder.
    pub fn molecules(&self) -> Vec<&RouteMol> {
        let mut out = Vec::new();
        self.root.visit(&mut |m| out.push(m));
        out
    }

    pub fn n_molecules(&self) -> usize {
        self.molecules().len()
    }

    /// Reactions in preorder (parent before children, reactants left to right).
    pub fn reactions(&self) -> Vec<&RouteRxn> {
        let mut out = Vec::new();
        self.root.visit(&mut |m| out.extend(m.reaction.as_ref()));
        out
    }

    pub fn n_reactions(&self) -> usize {
        self.reactions().len()
    }

    pub fn leaf_set(&self) -> BTreeSet<CanonicalKey> {
        let mut out = BTreeSet::new();
        self.root.visit(&mut |m| {
            if m.is_leaf() {
                out.insert(m.key.clone());
            }
        });
        out
    }

    pub fn hash(&self) -> String {
        route_hash(self)
    }

    pub fn stats(&self) -> RouteStats {
        route_stats(self)
    }

    /// Check the structural invariants: reactions have reactants and no
    /// molecule repeats along a root-to-leaf path.
    pub fn validate(&self) -> Result<(), RouteError> {
        fn walk<'a>(m: &'a RouteMol, path: &mut Vec<&'a CanonicalKey>) -> Result<(), RouteError> {
            if path.contains(&&m.key) {
                return Err(RouteError::Cycle(m.key.clone()));
            }
            if let Some(r) = &m.reaction {
                if r.children.is_empty() {
                    return Err(RouteError::Schema(format!("reaction producing {} has no reactants", m.key)));
                }
                path.push(&m.key);
                for c in &r.children {
                    walk(c, path)?;
                }
                path.pop();
            }
            Ok(())
        }
        walk(&self.root, &mut Vec::new())
    }

    pub fn from_json(text: &str) -> Result<Route, RouteError> {
        let node: JsonNode = serde_json::from_str(text)?;
        Route::from_value(node)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_value()).expect("route serializes")
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self.to_value()).expect("route serializes")
    }

    pub fn from_json_value(v: serde_json::Value) -> Result<Route, RouteError> {
        Route::from_value(serde_json::from_value(v)?)
    }

    fn from_value(node: JsonNode) -> Result<Route, RouteError> {
        let route = Route { root: mol_from_json(node)? };
        route.validate()?;
        Ok(route)
    }

    fn to_value(&self) -> JsonNode {
        mol_to_json(&self.root)
    }
}

/// Parse a JSON array of routes.
pub fn parse_route_file(text: &str) -> Result<Vec<Route>, RouteError> {
    let nodes: Vec<JsonNode> = serde_json::from_str(text)?;
    nodes.into_iter().map(Route::from_value).collect()
}

pub fn routes_to_json(routes: &[Route]) -> String {
    let nodes: Vec<JsonNode> = routes.iter().map(Route::to_value).collect();
    serde_json::to_string(&nodes).expect("routes serialize")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum JsonNode {
    Mol {
        smiles: String,
        #[serde(default)]
        in_stock: bool,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        children: Vec<JsonNode>,
    },
    Reaction {
        #[serde(default)]
        metadata: JsonMetadata,
        #[serde(default)]
        children: Vec<JsonNode>,
    },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct JsonMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prior: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rank: Option<usize>,
}

fn mol_from_json(node: JsonNode) -> Result<RouteMol, RouteError> {
    let JsonNode::Mol { smiles, in_stock, children } = node else {
        return Err(RouteError::Schema("expected a mol node".into()));
    };
    let key = key_of(&smiles).map_err(|source| RouteError::Smiles { smiles: smiles.clone(), source })?;
    if children.len() > 1 {
        return Err(RouteError::Schema(format!("mol {smiles} has {} reaction children", children.len())));
    }
    let reaction = match children.into_iter().next() {
        None => None,
        Some(JsonNode::Reaction { metadata, children }) => {
            if children.is_empty() {
                return Err(RouteError::Schema(format!("reaction producing {smiles} has no reactants")));
            }
            let children = children.into_iter().map(mol_from_json).collect::<Result<_, _>>()?;
            Some(RouteRxn { prior: metadata.prior, rank: metadata.rank, children })
        }
        Some(JsonNode::Mol { .. }) => {
            return Err(RouteError::Schema(format!("mol {smiles} has a mol child")));
        }
    };
    Ok(RouteMol { key, in_stock, reaction })
}

fn mol_to_json(m: &RouteMol) -> JsonNode {
    let children = match &m.reaction {
        None => Vec::new(),
        Some(r) => vec![JsonNode::Reaction {
            metadata: JsonMetadata { prior: r.prior, rank: r.rank },
            children: r.children.iter().map(mol_to_json).collect(),
        }],
    };
    JsonNode::Mol { smiles: m.key.as_str().to_owned(), in_stock: m.in_stock, children }
}

/// Hash of a leaf molecule: SHA-256 over `leaf\0<key>`, hex encoded.
pub fn leaf_hash(key: &CanonicalKey) -> String {
    let mut h = Sha256::new();
    h.update(b"leaf\0");
    h.update(key.as_str().as_bytes());
    hex(&h.finalize())
}

/// Hash of a molecule made by one reaction: SHA-256 over
/// `mol\0<key>` followed by `\0<child hash>` for each child hash in sorted
/// order, hex encoded.
pub fn internal_hash(key: &CanonicalKey, child_hashes: &mut [String]) -> String {
    child_hashes.sort_unstable();
    let mut h = Sha256::new();
    h.update(b"mol\0");
    h.update(key.as_str().as_bytes());
    for c in child_hashes.iter() {
        h.update(b"\0");
        h.update(c.as_bytes());
    }
    hex(&h.finalize())
}

fn hex(bytes: &[u8]) -> String {
    use std::fmt::Write;
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Topology hash: molecule keys and tree shape only. Priors, ranks and stock
/// flags do not contribute.
pub fn route_hash(route: &Route) -> String {
    fn mol(m: &RouteMol) -> String {
        match &m.reaction {
            None => leaf_hash(&m.key),
            Some(r) => {
                let mut kids: Vec<String> = r.children.iter().map(mol).collect();
                internal_hash(&m.key, &mut kids)
            }
        }
    }
    mol(&route.root)
}

pub fn route_stats(route: &Route) -> RouteStats {
    fn depth(m: &RouteMol) -> usize {
        m.reaction.as_ref().map_or(0, |r| 1 + r.children.iter().map(depth).max().unwrap_or(0))
    }
    RouteStats {
        max_depth: depth(&route.root),
        n_building_blocks: route.leaf_set().len(),
        reactants_per_reaction: route.reactions().iter().map(|r| r.children.len()).collect(),
    }
}

/// Keep the first route of every leaf set, preserving order.
pub fn dedupe_by_leaf_set(routes: Vec<Route>) -> Vec<Route> {
    let mut seen = HashSet::new();
    routes.into_iter().filter(|r| seen.insert(r.leaf_set())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn k(s: &str) -> CanonicalKey {
        key_of(s).unwrap()
    }

    fn one_step(prior: f64, a: &str, b: &str) -> Route {
        Route {
            root: RouteMol {
                key: k("CC(=O)OCC"),
                in_stock: false,
                reaction: Some(RouteRxn {
                    prior: Some(prior),
                    rank: Some(1),
                    children: vec![RouteMol::leaf(k(a), true), RouteMol::leaf(k(b), true)],
                }),
            },
        }
    }

    #[test]
    fn single_node_route() {
        let r = Route::from_json(r#"{"type":"mol","smiles":"CCO","in_stock":true}"#).unwrap();
        assert_eq!(r.stats(), RouteStats { max_depth: 0, n_building_blocks: 1, reactants_per_reaction: vec![] });
        assert!(r.is_complete());
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"type":"mol","smiles":"CCOC(C)=O","in_stock":false,"children":[{"type":"reaction","metadata":{"prior":0.42,"rank":1,"template":"x"},"children":[{"type":"mol","smiles":"OCC","in_stock":true},{"type":"mol","smiles":"CC(=O)O","in_stock":true}]}]}"#;
        let r = Route::from_json(text).unwrap();
        assert_eq!(r.n_reactions(), 1);
        assert_eq!(r.leaf_set().len(), 2);
        assert_eq!(r.reactions()[0].prior, Some(0.42));
        let back = Route::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.stats().reactants_per_reaction, vec![2]);
    }

    #[test]
    fn cycles_and_schema_errors() {
        let cyc = r#"{"type":"mol","smiles":"CCO","children":[{"type":"reaction","children":[{"type":"mol","smiles":"OCC","in_stock":true}]}]}"#;
        assert!(matches!(Route::from_json(cyc), Err(RouteError::Cycle(_))));
        let two = r#"{"type":"mol","smiles":"CCO","children":[{"type":"reaction","children":[{"type":"mol","smiles":"C"}]},{"type":"reaction","children":[{"type":"mol","smiles":"O"}]}]}"#;
        assert!(matches!(Route::from_json(two), Err(RouteError::Schema(_))));
        let empty = r#"{"type":"mol","smiles":"CCO","children":[{"type":"reaction","children":[]}]}"#;
        assert!(matches!(Route::from_json(empty), Err(RouteError::Schema(_))));
        assert!(matches!(Route::from_json(r#"{"type":"mol","smiles":"C("}"#), Err(RouteError::Smiles { .. })));
        assert!(matches!(Route::from_json(r#"{"type":"reaction","children":[]}"#), Err(RouteError::Schema(_))));
    }

    #[test]
    fn hash_ignores_order_and_priors() {
        let a = one_step(0.9, "CCO", "CC(=O)O");
        let b = one_step(0.1, "CC(O)=O", "OCC");
        assert_eq!(route_hash(&a), route_hash(&b));
        let c = one_step(0.9, "CCO", "CC(=O)Cl");
        assert_ne!(route_hash(&a), route_hash(&c));
    }

    #[test]
    fn hash_distinguishes_leaf_from_intermediate() {
        let leaf = Route { root: RouteMol::leaf(k("CCO"), true) };
        let made = Route {
            root: RouteMol {
                key: k("CCO"),
                in_stock: true,
                reaction: Some(RouteRxn { prior: None, rank: None, children: vec![RouteMol::leaf(k("C=C"), true)] }),
            },
        };
        assert_ne!(route_hash(&leaf), route_hash(&made));
    }

    #[test]
    fn building_blocks_are_distinct_leaves() {
        let r = one_step(0.5, "CCO", "CCO");
        assert_eq!(r.stats().n_building_blocks, 1);
        assert_eq!(r.stats().reactants_per_reaction, vec![2]);
    }

    #[test]
    fn leaf_set_dedupe_keeps_first() {
        let a = one_step(0.9, "CCO", "CC(=O)O");
        let b = one_step(0.1, "CCO", "CC(=O)O");
        let c = one_step(0.1, "CCO", "CC(=O)Cl");
        let kept = dedupe_by_leaf_set(vec![a.clone(), b, c.clone()]);
        assert_eq!(kept, vec![a, c]);
    }
}
