use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::molgraph::key_of;
use crate::predictor::{reactant_multiset, Predictor, PredictorError};
use crate::routes::TopNAccuracy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleStepReport {
    pub n_reactions: usize,
    /// Rows skipped because a product or reactant did not parse.
    pub unparsable: usize,
    /// Products the model answered with an error; counted as misses.
    pub model_errors: usize,
    pub accuracy: Vec<TopNAccuracy>,
}

/// Top-n accuracy of a predictor on test reactions in the reaction-file
/// format: a row hits at n when its gold reactant multiset is among the
/// first n predictions for its product.
pub fn single_step_top_n<R: BufRead>(
    predictor: &mut dyn Predictor,
    reactions: R,
    ns: &[usize],
) -> Result<SingleStepReport, PredictorError> {
    let max_n = ns.iter().copied().max().unwrap_or(0).max(1);
    let (mut unparsable, mut model_errors) = (0, 0);
    let mut first_hit: Vec<Option<usize>> = Vec::new();
    for line in reactions.lines() {
        let line = line.map_err(PredictorError::Io)?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let parsed = match cols.as_slice() {
            [p, r] | [p, r, _] => key_of(p.trim()).ok().zip(reactant_multiset(&[r.trim()])),
            _ => None,
        };
        let Some((product, gold)) = parsed else {
            unparsable += 1;
            continue;
        };
        let predictions = match predictor.predict(&product, max_n) {
            Ok(p) => p,
            Err(PredictorError::Remote(_)) => {
                model_errors += 1;
                first_hit.push(None);
                continue;
            }
            Err(e) => return Err(e),
        };
        first_hit.push(predictions.iter().take(max_n).position(|p| p.reactants == gold));
    }
    let total = first_hit.len();
    let accuracy = ns
        .iter()
        .map(|&n| {
            let hits = first_hit.iter().filter(|h| h.is_some_and(|r| r < n)).count();
            let percent = if total == 0 { 0.0 } else { 100.0 * hits as f64 / total as f64 };
            TopNAccuracy { n, hits, total, percent }
        })
        .collect();
    Ok(SingleStepReport { n_reactions: total, unparsable, model_errors, accuracy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::TablePredictor;

    const ROWS: &str = "CCCO\tCCC.O\t5\nCCCO\tCC.CO\t3\nCCCO\tC.CCO\t2\n";

    #[test]
    fn rank_three_hits_from_three() {
        let mut t = TablePredictor::from_reader(ROWS.as_bytes()).unwrap();
        let rep = single_step_top_n(&mut t, "CCCO\tCCO.C\n".as_bytes(), &[1, 2, 3, 50]).unwrap();
        let hits: Vec<usize> = rep.accuracy.iter().map(|a| a.hits).collect();
        assert_eq!(hits, vec![0, 0, 1, 1]);
    }

    #[test]
    fn self_recall_and_misses() {
        let mut t = TablePredictor::from_reader(ROWS.as_bytes()).unwrap();
        let test = format!("{ROWS}CCCC\tCC.CC\nnot a row\nC1CC\tCC\n");
        let rep = single_step_top_n(&mut t, test.as_bytes(), &[1, 50]).unwrap();
        assert_eq!((rep.n_reactions, rep.unparsable), (4, 2));
        assert_eq!(rep.accuracy[1].hits, 3);
        assert_eq!(rep.accuracy[0].hits, 1);
    }
}
