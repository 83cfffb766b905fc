use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

use super::{rank_predictions, reactant_multiset, Prediction, Predictor, PredictorError};
use crate::molgraph::{key_of, CanonicalKey};

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("cannot read reaction table: {0}")]
    Io(#[from] std::io::Error),
    #[error("reaction table row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("reaction table has no usable rows")]
    Empty,
}

/// Template-free frequency model: every product maps to the reactant sets
/// recorded for it, with prior = count / total count for that product.
#[derive(Debug, Clone, Default)]
pub struct TablePredictor {
    table: HashMap<CanonicalKey, Vec<Prediction>>,
    rows: usize,
}

impl TablePredictor {
    /// Rows are `product<TAB>reactants[<TAB>count]`, reactants dot-separated,
    /// count a positive integer defaulting to 1. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, TableError> {
        let mut counts: HashMap<CanonicalKey, HashMap<Vec<CanonicalKey>, u64>> = HashMap::new();
        let mut totals: HashMap<CanonicalKey, u64> = HashMap::new();
        let mut rows = 0;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let row = i + 1;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: String| TableError::Row { row, message };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 2 || cols.len() > 3 {
                return Err(bad(format!("expected 2 or 3 tab-separated columns, found {}", cols.len())));
            }
            let product = key_of(cols[0].trim()).map_err(|e| bad(format!("product: {e}")))?;
            let reactants = reactant_multiset(&[cols[1].trim()])
                .filter(|r| !r.is_empty())
                .ok_or_else(|| bad("unparsable reactants".into()))?;
            let count = match cols.get(2) {
                Some(c) => c
                    .trim()
                    .parse::<u64>()
                    .ok()
                    .filter(|&c| c >= 1)
                    .ok_or_else(|| bad(format!("count must be a positive integer, got '{c}'")))?,
                None => 1,
            };
            *totals.entry(product.clone()).or_default() += count;
            *counts.entry(product).or_default().entry(reactants).or_default() += count;
            rows += 1;
        }
        if rows == 0 {
            return Err(TableError::Empty);
        }
        let table = counts
            .into_iter()
            .map(|(product, sets)| {
                let total = totals[&product] as f64;
                let entries = sets
                    .into_iter()
                    .filter(|(r, _)| !r.contains(&product))
                    .map(|(r, c)| (r, c as f64 / total))
                    .collect();
                (product, rank_predictions(entries))
            })
            .collect();
        Ok(TablePredictor { table, rows })
    }

    pub fn from_path(path: &Path) -> Result<Self, TableError> {
        Self::from_reader(BufReader::new(File::open(path)?))
    }

    /// Full ranked list for `product`, empty when unknown.
    pub fn lookup(&self, product: &CanonicalKey) -> &[Prediction] {
        self.table.get(product).map_or(&[], Vec::as_slice)
    }

    pub fn products(&self) -> impl Iterator<Item = &CanonicalKey> {
        self.table.keys()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
}

impl Predictor for TablePredictor {
    fn predict(&mut self, product: &CanonicalKey, top_k: usize) -> Result<Vec<Prediction>, PredictorError> {
        Ok(self.lookup(product).iter().take(top_k).cloned().collect())
    }
}

impl Predictor for Arc<TablePredictor> {
    fn predict(&mut self, product: &CanonicalKey, top_k: usize) -> Result<Vec<Prediction>, PredictorError> {
        Ok(self.lookup(product).iter().take(top_k).cloned().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(s: &str) -> CanonicalKey {
        key_of(s).unwrap()
    }

    #[test]
    fn priors_are_relative_frequencies() {
        let text = "CCOC(C)=O\tCCO.CC(=O)O\t3\nCCOC(C)=O\tCC(=O)Cl.OCC\nCCOC(C)=O\tOCC.OC(C)=O\n\n";
        let t = TablePredictor::from_reader(text.as_bytes()).unwrap();
        let preds = t.lookup(&k("CC(=O)OCC"));
        assert_eq!(preds.len(), 2);
        assert_eq!(preds[0].prior, 0.8);
        assert_eq!(preds[0].reactants, vec![k("CC(=O)O"), k("CCO")]);
        assert_eq!(preds[1].prior, 0.2);
        assert_eq!(preds[1].rank, 2);
        assert_eq!(t.rows(), 3);
    }

    #[test]
    fn identity_rows_are_dropped_without_renormalizing() {
        let text = "CCO\tCCO.O\nCCO\tCC.O\n";
        let t = TablePredictor::from_reader(text.as_bytes()).unwrap();
        let preds = t.lookup(&k("CCO"));
        assert_eq!(preds.len(), 1);
        assert_eq!(preds[0].prior, 0.5);
    }

    #[test]
    fn bad_rows_report_their_number() {
        let text = "CCO\tCC.O\nC(\tCC\n";
        match TablePredictor::from_reader(text.as_bytes()) {
            Err(TableError::Row { row: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            TablePredictor::from_reader("CCO\tCC\t0\n".as_bytes()),
            Err(TableError::Row { row: 1, .. })
        ));
        assert!(matches!(TablePredictor::from_reader("\n\n".as_bytes()), Err(TableError::Empty)));
    }

    #[test]
    fn predict_truncates_to_top_k() {
        let text = "CCCC\tCC.CC\t5\nCCCC\tC.CCC\t4\nCCCC\tCCCl.C\t1\n";
        let mut t = TablePredictor::from_reader(text.as_bytes()).unwrap();
        let got = t.predict(&k("CCCC"), 2).unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(got[1].reactants, vec![k("C"), k("CCC")]);
        assert!(t.predict(&k("N"), 5).unwrap().is_empty());
    }
}
