//! Purchasable building blocks: an exact set of canonical keys.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::molgraph::{key_of, CanonicalKey};

#[derive(Debug, thiserror::Error)]
pub enum StockError {
    #[error("cannot read stock file: {0}")]
    Io(#[from] std::io::Error),
    #[error("{unparsable} of {lines} stock lines failed to parse; is this a SMILES file?")]
    MostlyUnparsable { unparsable: usize, lines: usize },
}

#[derive(Debug, Clone, Default)]
pub struct Stock {
    keys: HashSet<CanonicalKey>,
    label: String,
    lines: usize,
    unparsable: usize,
}

impl Stock {
    pub fn from_keys(keys: impl IntoIterator<Item = CanonicalKey>, label: impl Into<String>) -> Self {
        let keys: HashSet<_> = keys.into_iter().collect();
        Stock { lines: keys.len(), keys, label: label.into(), unparsable: 0 }
    }

    /// Canonicalize one SMILES per line. Only the first whitespace-separated
    /// token counts, so `SMILES id` files work; blank lines are ignored.
    pub fn from_lines<I, S>(lines: I, label: impl Into<String>) -> Result<Self, StockError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let tokens: Vec<String> = lines
            .into_iter()
            .filter_map(|l| l.as_ref().split_whitespace().next().map(str::to_owned))
            .collect();
        Self::from_tokens(tokens, label.into())
    }

    fn from_tokens(tokens: Vec<String>, label: String) -> Result<Self, StockError> {
        let lines = tokens.len();
        let parsed: Vec<Option<CanonicalKey>> = tokens.par_iter().map(|t| key_of(t).ok()).collect();
        let unparsable = parsed.iter().filter(|k| k.is_none()).count();
        if unparsable * 2 > lines {
            return Err(StockError::MostlyUnparsable { unparsable, lines });
        }
        let keys: HashSet<CanonicalKey> = parsed.into_iter().flatten().collect();
        Ok(Stock { keys, label, lines, unparsable })
    }

    pub fn contains(&self, key: &CanonicalKey) -> bool {
        self.keys.contains(key)
    }

    pub fn contains_str(&self, key: &str) -> bool {
        self.keys.contains(key)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Non-blank lines read.
    pub fn lines_read(&self) -> usize {
        self.lines
    }

    pub fn unparsable(&self) -> usize {
        self.unparsable
    }

    pub fn keys(&self) -> impl Iterator<Item = &CanonicalKey> {
        self.keys.iter()
    }
}

/// Load a stock file, gzip-compressed when the name ends in `.gz`. `limit`
/// caps the number of non-blank lines read.
pub fn load_stock(path: &Path, limit: Option<usize>) -> Result<Stock, StockError> {
    let file = File::open(path)?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(flate2::read::MultiGzDecoder::new(file))
    } else {
        Box::new(file)
    };
    let mut tokens = Vec::new();
    for line in BufReader::with_capacity(1 << 16, reader).lines() {
        if limit.is_some_and(|l| tokens.len() >= l) {
            break;
        }
        let line = line?;
        if let Some(t) = line.split_whitespace().next() {
            tokens.push(t.to_owned());
        }
    }
    Stock::from_tokens(tokens, path.display().to_string())
}

/// Write keys one per line in sorted order.
pub fn write_stock<'a, W: Write>(out: W, keys: impl IntoIterator<Item = &'a CanonicalKey>) -> std::io::Result<()> {
    let mut keys: Vec<&CanonicalKey> = keys.into_iter().collect();
    keys.sort();
    keys.dedup();
    let mut out = std::io::BufWriter::new(out);
    for k in keys {
        writeln!(out, "{k}")?;
    }
    out.flush()
}
