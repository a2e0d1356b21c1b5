//! Report types. Everything here is deterministic given the seed; wall-clock
//! times live in [`Timings`] and are written to a separate file.

use serde::Serialize;

/// One checked inequality: `observed` is the worst value seen and
/// `tolerance` the bound it was held to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub tolerance: String,
    pub observed: f64,
    pub passed: bool,
}

impl Assertion {
    pub fn at_most(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Assertion {
            name: name.into(),
            tolerance: format!("<= {bound:e}"),
            observed,
            passed: observed <= bound,
        }
    }

    pub fn at_least(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Assertion {
            name: name.into(),
            tolerance: format!(">= {bound:e}"),
            observed,
            passed: observed >= bound,
        }
    }

    pub fn within(name: impl Into<String>, observed: f64, lo: f64, hi: f64) -> Self {
        Assertion {
            name: name.into(),
            tolerance: format!("in [{lo}, {hi}]"),
            observed,
            passed: (lo..=hi).contains(&observed),
        }
    }

    /// `observed` must equal zero (violation counts).
    pub fn none(name: impl Into<String>, count: usize) -> Self {
        Assertion { name: name.into(), tolerance: "= 0".into(), observed: count as f64, passed: count == 0 }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Assertion { name: name.into(), tolerance: "holds".into(), observed: ok as u8 as f64, passed: ok }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub id: String,
    pub title: String,
    pub assertions: Vec<Assertion>,
    /// Diagnostics that are reported but not asserted.
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(id: &str, title: &str) -> Self {
        CheckReport { id: id.into(), title: title.into(), assertions: Vec::new(), notes: Vec::new() }
    }

    pub fn push(&mut self, a: Assertion) {
        self.assertions.push(a);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn passed(&self) -> bool {
        !self.assertions.is_empty() && self.assertions.iter().all(|a| a.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| !a.passed)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timings {
    pub stages: Vec<Stage>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stage {
    pub name: String,
    pub seconds: f64,
}

impl Timings {
    pub fn record(&mut self, name: impl Into<String>, seconds: f64) {
        self.stages.push(Stage { name: name.into(), seconds });
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.stages.iter().find(|s| s.name == name).map(|s| s.seconds)
    }

    pub fn total(&self) -> f64 {
        self.stages.iter().map(|s| s.seconds).sum()
    }
}
