//! Structured verdicts with witnesses and a trace of sub-checks.

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Outcome of a checker. A failing verdict always carries a witness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub verdict: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<String>,
}

impl CheckReport {
    pub fn pass() -> Self {
        CheckReport { verdict: true, witness: None, trace: Vec::new() }
    }

    pub fn fail(witness: Value) -> Self {
        CheckReport { verdict: false, witness: Some(witness), trace: Vec::new() }
    }

    pub fn note(mut self, line: impl Into<String>) -> Self {
        self.trace.push(line.into());
        self
    }

    /// Merge a sub-check: trace lines are kept, the first failure wins.
    pub fn absorb(&mut self, label: &str, sub: CheckReport) {
        for line in &sub.trace {
            self.trace.push(format!("{label}: {line}"));
        }
        self.trace.push(format!("{label}: {}", if sub.verdict { "ok" } else { "FAIL" }));
        if !sub.verdict && self.verdict {
            self.verdict = false;
            self.witness = sub.witness;
        }
    }
}
