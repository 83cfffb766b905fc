//! Messages exchanged with external predictors, one JSON object per line.
//!
//! The adapter speaks first with `hello`, then answers every `predict` with
//! either `predictions` or `error` carrying the same id.

use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Hello {
        version: u32,
        max_top_k: usize,
    },
    Predict {
        id: u64,
        smiles: String,
        top_k: usize,
    },
    Predictions {
        id: u64,
        results: Vec<WireResult>,
    },
    Error {
        #[serde(default)]
        id: Option<u64>,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireResult {
    pub reactants: Vec<String>,
    pub prob: f64,
}

impl Message {
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("message serializes");
        s.push('\n');
        s
    }

    pub fn from_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line.trim_end())
    }
}
