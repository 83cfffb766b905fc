//! Single-step retrosynthesis models.
//!
//! Every model sits behind [`Predictor`]: given a product it returns ranked
//! reactant multisets with their prior probabilities. Two implementations
//! ship here: an in-process frequency table ([`TablePredictor`]) and a client
//! for out-of-process models speaking line-delimited JSON
//! ([`ExternalPredictor`]).

mod external;
mod table;
pub mod wire;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::molgraph::{parse_smiles, CanonicalKey};

pub use external::{spawn_external, ExternalPredictor};
pub use table::{TableError, TablePredictor};

pub const DEFAULT_TOP_K: usize = 50;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(600);

/// One predicted disconnection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Sorted multiset of reactant keys.
    pub reactants: Vec<CanonicalKey>,
    pub prior: f64,
    pub rank: usize,
}

impl Prediction {
    pub(crate) fn multiset_label(reactants: &[CanonicalKey]) -> String {
        reactants.iter().map(CanonicalKey::as_str).collect::<Vec<_>>().join(".")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PredictorError {
    #[error("failed to start predictor: {0}")]
    Spawn(#[source] std::io::Error),
    #[error("predictor i/o failure: {0}")]
    Io(#[source] std::io::Error),
    #[error("predictor did not answer within {0:?}")]
    Timeout(Duration),
    #[error("predictor process exited")]
    Exited,
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("predictor reported an error: {0}")]
    Remote(String),
    #[error("predictor handle has failed earlier: {0}")]
    Failed(String),
}

pub trait Predictor {
    /// At most `top_k` predictions for `product`, normalized and ranked.
    fn predict(&mut self, product: &CanonicalKey, top_k: usize) -> Result<Vec<Prediction>, PredictorError>;

    /// Upper bound on `top_k` advertised by the model, if any.
    fn max_top_k(&self) -> Option<usize> {
        None
    }

    /// A failed handle answers every further request with an error and
    /// should be replaced.
    fn is_failed(&self) -> bool {
        false
    }
}

impl<P: Predictor + ?Sized> Predictor for Box<P> {
    fn predict(&mut self, product: &CanonicalKey, top_k: usize) -> Result<Vec<Prediction>, PredictorError> {
        (**self).predict(product, top_k)
    }
    fn max_top_k(&self) -> Option<usize> {
        (**self).max_top_k()
    }
    fn is_failed(&self) -> bool {
        (**self).is_failed()
    }
}

/// Counts of entries dropped by [`normalize_predictions`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizeStats {
    pub unparsable: usize,
    pub empty: usize,
    pub bad_prior: usize,
    pub identity_loop: usize,
    pub duplicate: usize,
}

/// Canonical reactant multiset for a list of reactant SMILES. Dot-joined
/// entries contribute one reactant per fragment.
pub fn reactant_multiset<S: AsRef<str>>(reactants: &[S]) -> Option<Vec<CanonicalKey>> {
    let mut keys = Vec::new();
    for r in reactants {
        let g = parse_smiles(r.as_ref()).ok()?;
        keys.extend(g.split_components().iter().map(|c| c.canonical_key()));
    }
    keys.sort();
    Some(keys)
}

/// Clean raw model output for `product`: drop unparsable or empty reactant
/// sets, priors outside (0, 1], and sets containing the product itself; keep
/// the highest prior per reactant multiset; rank by prior descending, then by
/// reactant label.
pub fn normalize_predictions<S: AsRef<str>>(
    product: &CanonicalKey,
    raw: impl IntoIterator<Item = (Vec<S>, f64)>,
) -> (Vec<Prediction>, NormalizeStats) {
    let mut stats = NormalizeStats::default();
    let mut best: HashMap<Vec<CanonicalKey>, f64> = HashMap::new();
    for (reactants, prior) in raw {
        let Some(keys) = reactant_multiset(&reactants) else {
            stats.unparsable += 1;
            continue;
        };
        if keys.is_empty() {
            stats.empty += 1;
            continue;
        }
        if !(prior > 0.0 && prior <= 1.0) {
            stats.bad_prior += 1;
            continue;
        }
        if keys.contains(product) {
            stats.identity_loop += 1;
            continue;
        }
        match best.get_mut(&keys) {
            Some(p) => {
                stats.duplicate += 1;
                if prior > *p {
                    *p = prior;
                }
            }
            None => {
                best.insert(keys, prior);
            }
        }
    }
    (rank_predictions(best.into_iter().collect()), stats)
}

pub(crate) fn rank_predictions(entries: Vec<(Vec<CanonicalKey>, f64)>) -> Vec<Prediction> {
    let mut labeled: Vec<(String, Vec<CanonicalKey>, f64)> = entries
        .into_iter()
        .map(|(k, p)| (Prediction::multiset_label(&k), k, p))
        .collect();
    labeled.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
    labeled
        .into_iter()
        .enumerate()
        .map(|(i, (_, reactants, prior))| Prediction { reactants, prior, rank: i + 1 })
        .collect()
}

/// How to obtain predictor handles. Each worker opens its own handle.
#[derive(Debug, Clone)]
pub enum PredictorSpec {
    Table { path: PathBuf, table: Arc<TablePredictor> },
    External { command: String, timeout: Duration },
}

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("predictor must be 'table:<path>' or 'cmd:<command>', got '{0}'")]
    Syntax(String),
    #[error(transparent)]
    Table(#[from] TableError),
}

impl PredictorSpec {
    /// Parse `table:<path>` (loads the table now) or `cmd:<command>`.
    pub fn from_uri(uri: &str, timeout: Duration) -> Result<Self, SpecError> {
        if let Some(path) = uri.strip_prefix("table:") {
            let path = PathBuf::from(path);
            let table = Arc::new(TablePredictor::from_path(&path)?);
            Ok(PredictorSpec::Table { path, table })
        } else if let Some(cmd) = uri.strip_prefix("cmd:") {
            if cmd.trim().is_empty() {
                return Err(SpecError::Syntax(uri.to_owned()));
            }
            Ok(PredictorSpec::External { command: cmd.to_owned(), timeout })
        } else {
            Err(SpecError::Syntax(uri.to_owned()))
        }
    }

    pub fn open(&self) -> Result<Box<dyn Predictor>, PredictorError> {
        match self {
            PredictorSpec::Table { table, .. } => Ok(Box::new(Arc::clone(table))),
            PredictorSpec::External { command, timeout } => Ok(Box::new(spawn_external(command, *timeout)?)),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            PredictorSpec::Table { path, .. } => format!("table:{}", path.display()),
            PredictorSpec::External { command, .. } => format!("cmd:{command}"),
        }
    }
}
