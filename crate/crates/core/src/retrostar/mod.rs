//! Best-first AND/OR tree search guided by single-step priors.
//!
//! Reaction cost is −ln(prior), unexpanded molecules are valued at 0, and
//! each iteration expands the frontier molecule that belongs to the cheapest
//! partial solution tree. The search keeps going after the first solution
//! until it runs out of iterations, time, or expandable molecules.

mod extract;
mod tree;

use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::molgraph::{key_of, CanonicalKey, ParseError};
use crate::predictor::{Predictor, PredictorError};
use crate::routes::Route;
use crate::scalar::Scalar;
use crate::stock::Stock;

pub use extract::{extract_routes, ScoredRoute};
pub use tree::{MolId, MolNode, MolState, RxnId, RxnNode, SearchTree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub iteration_limit: usize,
    pub time_limit_s: f64,
    pub top_k: usize,
    pub max_depth: usize,
    pub epsilon: f64,
    pub route_cap: usize,
    /// Keep only the best route per distinct leaf set.
    pub dedupe_leaf_sets: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            iteration_limit: 200,
            time_limit_s: 28_800.0,
            top_k: 50,
            max_depth: 7,
            epsilon: 1e-10,
            route_cap: 5000,
            dedupe_leaf_sets: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid config JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl SearchConfig {
    /// Defaults for the PaRoutes benchmark: routes up to 10 reactions long.
    pub fn paroutes() -> Self {
        SearchConfig { max_depth: 10, ..Self::default() }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let c: SearchConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_owned()));
        if self.iteration_limit < 1 {
            return bad("iteration_limit must be at least 1");
        }
        if self.time_limit_s.is_nan() || self.time_limit_s <= 0.0 {
            return bad("time_limit_s must be positive");
        }
        if self.top_k < 1 {
            return bad("top_k must be at least 1");
        }
        if self.max_depth < 1 {
            return bad("max_depth must be at least 1");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon must lie in (0, 1)");
        }
        if self.route_cap < 1 {
            return bad("route_cap must be at least 1");
        }
        Ok(())
    }

    pub fn time_limit(&self) -> Duration {
        Duration::try_from_secs_f64(self.time_limit_s).unwrap_or(Duration::MAX)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Iterations,
    Time,
    Exhausted,
    TransportError,
    /// Target not searched at all (unparsable input).
    Error,
}

/// Source of elapsed time, replaceable in tests.
pub trait Clock {
    fn elapsed(&mut self) -> Duration;
}

pub struct WallClock(Instant);

impl WallClock {
    pub fn start() -> Self {
        WallClock(Instant::now())
    }
}

impl Clock for WallClock {
    fn elapsed(&mut self) -> Duration {
        self.0.elapsed()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Search plus route extraction.
    pub wall_time_s: f64,
    pub search_time_s: f64,
    pub extraction_time_s: f64,
}

/// Raw outcome of the tree search, before route extraction.
#[derive(Debug, Clone)]
pub struct SearchRun<S> {
    pub tree: SearchTree<S>,
    pub iterations: usize,
    pub model_calls: usize,
    /// Expansions where the model answered with an error for the molecule.
    pub model_errors: usize,
    pub termination: Termination,
    pub transport_error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SearchResult<S> {
    pub target: CanonicalKey,
    pub solved: bool,
    pub routes: Vec<ScoredRoute<S>>,
    pub iterations: usize,
    pub model_calls: usize,
    pub model_errors: usize,
    pub termination: Termination,
    pub timing: Timing,
    pub error: Option<String>,
    pub tree_molecules: usize,
}

impl<S: Scalar> SearchResult<S> {
    pub fn best_cost(&self) -> Option<S> {
        self.routes.first().map(|r| r.cost)
    }

    pub fn route_list(&self) -> Vec<Route> {
        self.routes.iter().map(|r| r.route.clone()).collect()
    }
}

/// Expand frontier molecule `m`: fetch predictions, drop reactions that
/// would revisit an ancestor, and attach the rest. Returns the number of
/// reactions attached.
pub fn expand<S: Scalar, P: Predictor + ?Sized>(
    tree: &mut SearchTree<S>,
    m: MolId,
    predictor: &mut P,
    stock: &Stock,
    config: &SearchConfig,
) -> Result<usize, PredictorError> {
    debug_assert_eq!(tree.mols[m].state, MolState::Frontier);
    let key = tree.mols[m].key.clone();
    let predictions = match predictor.predict(&key, config.top_k) {
        Ok(p) => p,
        Err(PredictorError::Remote(e)) => {
            tree.mols[m].state = MolState::Dead;
            tree.update_upwards(m);
            return Err(PredictorError::Remote(e));
        }
        Err(e) => return Err(e),
    };
    let ancestors: Vec<CanonicalKey> = tree.ancestors(m).into_iter().cloned().collect();
    let depth = tree.mols[m].depth + 1;
    let mut attached = 0;
    for p in predictions.iter().take(config.top_k) {
        if p.reactants.iter().any(|r| ancestors.contains(r)) {
            continue;
        }
        let cost = S::neg_ln_prior(p.prior, config.epsilon);
        let r = tree.push_rxn(m, p.prior, p.rank, cost);
        for reactant in &p.reactants {
            let state = if stock.contains(reactant) {
                MolState::StockLeaf
            } else if depth >= config.max_depth {
                MolState::Dead
            } else {
                MolState::Frontier
            };
            let c = tree.push_mol(reactant.clone(), depth, state, Some(r));
            tree.rxns[r].children.push(c);
        }
        attached += 1;
    }
    tree.mols[m].state = if attached == 0 { MolState::Dead } else { MolState::Expanded };
    // refresh the new reactions before propagating upwards
    for r in tree.mols[m].reactions.clone() {
        tree.refresh_rxn(r);
    }
    tree.update_upwards(m);
    Ok(attached)
}

/// Run the search loop on an already canonical target.
pub fn run_search<S: Scalar, P: Predictor + ?Sized>(
    target: CanonicalKey,
    predictor: &mut P,
    stock: &Stock,
    config: &SearchConfig,
    clock: &mut dyn Clock,
) -> SearchRun<S> {
    let in_stock = stock.contains(&target);
    let mut tree = SearchTree::new(target, in_stock);
    let (mut iterations, mut model_errors) = (0, 0);
    let mut transport_error = None;
    let time_limit = config.time_limit();
    let termination = loop {
        let Some((m, _)) = tree.select() else {
            break Termination::Exhausted;
        };
        if iterations >= config.iteration_limit {
            break Termination::Iterations;
        }
        if clock.elapsed() >= time_limit {
            break Termination::Time;
        }
        iterations += 1;
        match expand(&mut tree, m, predictor, stock, config) {
            Ok(_) => {}
            Err(PredictorError::Remote(_)) => model_errors += 1,
            Err(e) => {
                transport_error = Some(e.to_string());
                break Termination::TransportError;
            }
        }
        debug_assert_eq!(tree.audit(config.max_depth), Ok(()));
    };
    // every iteration is exactly one predictor invocation
    SearchRun { tree, iterations, model_calls: iterations, model_errors, termination, transport_error }
}

/// Plan routes for `target`: search, then extract and rank solved routes.
pub fn search<S: Scalar, P: Predictor + ?Sized>(
    target: &str,
    predictor: &mut P,
    stock: &Stock,
    config: &SearchConfig,
) -> Result<SearchResult<S>, ParseError> {
    search_with_clock(target, predictor, stock, config, &mut WallClock::start())
}

pub fn search_with_clock<S: Scalar, P: Predictor + ?Sized>(
    target: &str,
    predictor: &mut P,
    stock: &Stock,
    config: &SearchConfig,
    clock: &mut dyn Clock,
) -> Result<SearchResult<S>, ParseError> {
    let start = Instant::now();
    let key = key_of(target)?;
    let run = run_search::<S, P>(key.clone(), predictor, stock, config, clock);
    let searched = start.elapsed();
    let mut routes = extract_routes(&run.tree, config.route_cap);
    if config.dedupe_leaf_sets {
        let mut seen = std::collections::HashSet::new();
        routes.retain(|r| seen.insert(r.route.leaf_set()));
    }
    let total = start.elapsed();
    Ok(SearchResult {
        target: key,
        solved: !routes.is_empty(),
        routes,
        iterations: run.iterations,
        model_calls: run.model_calls,
        model_errors: run.model_errors,
        termination: run.termination,
        timing: Timing {
            wall_time_s: total.as_secs_f64(),
            search_time_s: searched.as_secs_f64(),
            extraction_time_s: (total - searched).as_secs_f64(),
        },
        error: run.transport_error,
        tree_molecules: run.tree.mols.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::TablePredictor;
    use crate::scalar::Fixed;

    fn table(rows: &str) -> TablePredictor {
        TablePredictor::from_reader(rows.as_bytes()).unwrap()
    }

    fn stock(keys: &[&str]) -> Stock {
        Stock::from_lines(keys, "test").unwrap()
    }

    #[test]
    fn config_defaults() {
        let c = SearchConfig::default();
        assert_eq!((c.iteration_limit, c.time_limit_s, c.top_k, c.max_depth), (200, 28800.0, 50, 7));
        assert_eq!((c.epsilon, c.route_cap), (1e-10, 5000));
        assert_eq!(SearchConfig::paroutes().max_depth, 10);
        let parsed = SearchConfig::from_json(r#"{"iteration_limit":200,"time_limit_s":28800,"top_k":50,"max_depth":7,"epsilon":1e-10,"route_cap":5000}"#).unwrap();
        assert_eq!(parsed, c);
        assert!(SearchConfig::from_json(r#"{"top_k":0}"#).is_err());
        assert!(SearchConfig::from_json(r#"{"epsilon":1.0}"#).is_err());
        assert!(SearchConfig::from_json(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn target_in_stock() {
        let mut t = table("CCCC\tCC.CC\n");
        let r = search::<f64, _>("CCO", &mut t, &stock(&["OCC"]), &SearchConfig::default()).unwrap();
        assert!(r.solved);
        assert_eq!((r.model_calls, r.iterations, r.routes.len()), (0, 0, 1));
        assert_eq!(r.routes[0].route.n_reactions(), 0);
    }

    #[test]
    fn forced_chain() {
        let mut t = table("CCCCCC\tCCCCC\nCCCCC\tCCCC\n");
        let s = stock(&["CCCC"]);
        let r = search::<f64, _>("CCCCCC", &mut t, &s, &SearchConfig::default()).unwrap();
        assert!(r.solved);
        assert_eq!(r.iterations, 2);
        assert_eq!(r.termination, Termination::Exhausted);
        assert_eq!(r.best_cost(), Some(0.0));

        let one = SearchConfig { iteration_limit: 1, ..SearchConfig::default() };
        let r = search::<f64, _>("CCCCCC", &mut t, &s, &one).unwrap();
        assert!(!r.solved);
        assert_eq!(r.termination, Termination::Iterations);
    }

    #[test]
    fn single_surviving_route() {
        let mut t = table("CCCCCC\tCCCCC\t9\nCCCCCC\tCCCC\t1\n");
        let r = search::<f64, _>("CCCCCC", &mut t, &stock(&["CCCC"]), &SearchConfig::default()).unwrap();
        assert!(r.solved);
        assert_eq!(r.routes.len(), 1);
        assert!((r.best_cost().unwrap() - 10f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn cycle_guard_kills_identity_only_node() {
        // the table drops exact identity rows, so feed the search directly
        struct Loop;
        impl Predictor for Loop {
            fn predict(&mut self, p: &CanonicalKey, _: usize) -> Result<Vec<crate::predictor::Prediction>, PredictorError> {
                Ok(vec![crate::predictor::Prediction { reactants: vec![p.clone()], prior: 1.0, rank: 1 }])
            }
        }
        let r = search::<Fixed, _>("CCO", &mut Loop, &stock(&[]), &SearchConfig::default()).unwrap();
        assert!(!r.solved);
        assert_eq!((r.model_calls, r.termination), (1, Termination::Exhausted));
    }

    #[test]
    fn two_routes_ranked_by_prior() {
        let mut t = table("CCCCCC\tCCC.CCC\t6\nCCCCCC\tCC.CCCC\t4\n");
        let r = search::<f64, _>("CCCCCC", &mut t, &stock(&["CC", "CCC", "CCCC"]), &SearchConfig::default()).unwrap();
        assert_eq!(r.routes.len(), 2);
        assert_eq!(r.routes[0].route.reactions()[0].prior, Some(0.6));
        assert_eq!(r.routes[1].route.reactions()[0].prior, Some(0.4));
    }

    #[test]
    fn top_k_caps_children() {
        let rows: String = (1..=60).map(|i| format!("CCCCCC\tC{}\n", "C".repeat(i % 5) + &"N".repeat(i))).collect();
        let mut t = table(&rows);
        let cfg = SearchConfig { iteration_limit: 1, ..SearchConfig::default() };
        let key = key_of("CCCCCC").unwrap();
        let run = run_search::<f64, _>(key, &mut t, &stock(&[]), &cfg, &mut WallClock::start());
        assert_eq!(run.tree.mols[0].reactions.len(), 50);
    }

    #[test]
    fn time_limit_checked_before_each_iteration() {
        struct Ticks(u64);
        impl Clock for Ticks {
            fn elapsed(&mut self) -> Duration {
                self.0 += 1;
                Duration::from_secs(self.0)
            }
        }
        let mut t = table("CCCCCC\tCCCCC\nCCCCC\tCCCC\nCCCC\tCCC\n");
        let cfg = SearchConfig { time_limit_s: 2.5, ..SearchConfig::default() };
        let run = run_search::<f64, _>(key_of("CCCCCC").unwrap(), &mut t, &stock(&["CCC"]), &cfg, &mut Ticks(0));
        assert_eq!((run.iterations, run.termination), (2, Termination::Time));
    }

    #[test]
    fn depth_limit_marks_dead() {
        let mut t = table("CCCCCC\tCCCCC\nCCCCC\tCCCC\n");
        let cfg = SearchConfig { max_depth: 1, ..SearchConfig::default() };
        let r = search::<f64, _>("CCCCCC", &mut t, &stock(&["CCCC"]), &cfg).unwrap();
        assert!(!r.solved);
        assert_eq!(r.model_calls, 1);
    }
}
