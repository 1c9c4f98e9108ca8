//! Check records shared by every verification routine.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// One verified relation: a computed `value`, an optional `reference`, the
/// residual between them and the tolerance it was held to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check_id: String,
    pub anchor: String,
    pub inputs: Map<String, Value>,
    pub value: f64,
    pub reference: Option<f64>,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

impl CheckRecord {
    pub fn new(check_id: impl Into<String>, anchor: impl Into<String>) -> Self {
        Self {
            check_id: check_id.into(),
            anchor: anchor.into(),
            inputs: Map::new(),
            value: 0.0,
            reference: None,
            residual: 0.0,
            tol: 0.0,
            pass: true,
        }
    }

    pub fn input(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.inputs.insert(key.to_string(), v.into());
        self
    }

    pub fn value(mut self, v: f64) -> Self {
        self.value = v;
        self
    }

    pub fn reference(mut self, r: f64) -> Self {
        self.reference = Some(r);
        self
    }

    /// Sets residual and tolerance; passes iff the residual is finite and `<= tol`.
    pub fn within(mut self, residual: f64, tol: f64) -> Self {
        self.residual = residual;
        self.tol = tol;
        self.pass = residual.is_finite() && residual <= tol;
        self
    }

    /// Records a boolean condition. `margin` is reported as the residual.
    pub fn holds(mut self, ok: bool, margin: f64) -> Self {
        self.residual = if margin.is_finite() { margin } else { f64::MAX };
        self.tol = 0.0;
        self.pass = ok;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub name: String,
    pub records: Vec<CheckRecord>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl IdentityReport {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), records: Vec::new(), notes: Vec::new(), pass: true }
    }

    pub fn push(&mut self, r: CheckRecord) {
        self.pass &= r.pass;
        self.records.push(r);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn get(&self, id: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.check_id == id)
    }

    pub fn max_residual(&self, prefix: &str) -> f64 {
        self.records
            .iter()
            .filter(|r| r.check_id.starts_with(prefix))
            .map(|r| r.residual)
            .fold(0.0, f64::max)
    }

    pub fn extend(&mut self, other: IdentityReport) {
        for r in other.records {
            self.push(r);
        }
        self.notes.extend(other.notes);
    }
}
