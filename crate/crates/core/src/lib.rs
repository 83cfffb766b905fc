//! Multi-step retrosynthesis planning with a best-first AND/OR search, plus
//! the tooling to benchmark it: single-step predictor plumbing, route
//! comparison and clustering, and aggregate metrics over batch runs.
//!
//! Numeric code is generic over [`scalar::Scalar`]; the aliases below fix
//! it to `f64`, which is what the batch harness and the CLI use.

pub mod evalharness;
pub mod fingerprint;
pub mod molgraph;
pub mod predictor;
pub mod retrostar;
pub mod routes;
pub mod scalar;
pub mod stock;

pub use molgraph::{key_of, CanonicalKey, MolGraph};
pub use predictor::{Prediction, Predictor, PredictorSpec};
pub use retrostar::SearchConfig;
pub use routes::Route;
pub use scalar::Fixed;
pub use stock::Stock;

pub type SearchTree = retrostar::SearchTree<f64>;
pub type SearchResult = retrostar::SearchResult<f64>;
pub type ScoredRoute = retrostar::ScoredRoute<f64>;
/// Exact variant: costs are integers in units of 1e-9, so sums are exact.
pub type ExactSearchResult = retrostar::SearchResult<Fixed>;
