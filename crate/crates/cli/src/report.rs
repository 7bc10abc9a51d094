//! Analysis reports: a JSON document plus a human-readable rendering.

use delos_core::field::{DiffField, FieldElement};
use delos_core::ore::{render_row, DiffOperator, OperatorMatrix};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

/// Bumped in the major part on breaking changes to the report layout.
pub const SCHEMA_VERSION: &str = "1.0";

pub fn digest(input: &str) -> String {
    Sha256::digest(input.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug)]
pub struct Report {
    pub workflow: String,
    pub input_digest: String,
    pub results: Map<String, Value>,
    pub decisions: Map<String, Value>,
    pub text: Vec<String>,
    /// Set by workflows that decide parametrizability.
    pub parametrizable: Option<bool>,
    pub elapsed_ms: u128,
}

impl Report {
    pub fn new(workflow: &str, input: &str) -> Self {
        let mut decisions = Map::new();
        decisions.insert("indices".into(), json!("0-based internally, 1-based in text"));
        decisions.insert("term_order".into(), json!("graded reverse lexicographic, d1 largest; position over term for modules"));
        Report {
            workflow: workflow.to_string(),
            input_digest: digest(input),
            results: Map::new(),
            decisions,
            text: Vec::new(),
            parametrizable: None,
            elapsed_ms: 0,
        }
    }

    pub fn set(&mut self, key: &str, v: Value) {
        self.results.insert(key.to_string(), v);
    }

    pub fn decide(&mut self, key: &str, v: Value) {
        self.decisions.insert(key.to_string(), v);
    }

    pub fn line(&mut self, s: impl Into<String>) {
        self.text.push(s.into());
    }

    /// Record a matrix in both renderings.
    pub fn matrix(&mut self, key: &str, title: &str, m: &OperatorMatrix) {
        self.set(key, matrix_json(m));
        self.text.extend(matrix_text(title, m));
    }

    /// The full report; `timing` is the only field that varies between runs.
    pub fn to_json(&self, timing: bool) -> Value {
        let mut out = Map::new();
        out.insert("schema_version".into(), json!(SCHEMA_VERSION));
        out.insert("tool".into(), json!({"name": "delos", "version": env!("CARGO_PKG_VERSION")}));
        out.insert("workflow".into(), json!(self.workflow));
        out.insert("input_digest".into(), json!(format!("sha256:{}", self.input_digest)));
        out.insert("results".into(), Value::Object(self.results.clone()));
        out.insert("decisions".into(), Value::Object(self.decisions.clone()));
        if timing {
            out.insert("timing_ms".into(), json!(self.elapsed_ms as u64));
        }
        Value::Object(out)
    }

    pub fn render_text(&self) -> String {
        let mut s = format!("delos {} (input sha256:{})\n", self.workflow, &self.input_digest[..16]);
        for l in &self.text {
            s.push_str(l);
            s.push('\n');
        }
        s
    }
}

pub fn matrix_json(m: &OperatorMatrix) -> Value {
    let rows: Vec<Value> = (0..m.rows()).map(|i| json!({"label": m.row_labels[i], "expr": m.render_row(i)})).collect();
    json!({
        "rows": m.rows(),
        "cols": m.cols(),
        "order": m.order(),
        "unknowns": m.col_labels,
        "equations": rows,
    })
}

pub fn matrix_text(title: &str, m: &OperatorMatrix) -> Vec<String> {
    let mut out = vec![format!("{title} ({} x {}, order {}):", m.rows(), m.cols(), m.order().max(0))];
    let w = m.row_labels.iter().map(|l| l.len()).max().unwrap_or(0);
    for i in 0..m.rows() {
        out.push(format!("  {:>w$}: {}", m.row_labels[i], m.render_row(i)));
    }
    out
}

pub fn row_string(field: &DiffField, row: &[DiffOperator], unknowns: &[String]) -> String {
    render_row(field, row, unknowns)
}

pub fn elements(field: &DiffField, v: &[FieldElement]) -> Value {
    Value::Array(v.iter().map(|x| json!(field.render(x))).collect())
}

pub fn square(field: &DiffField, m: &[Vec<FieldElement>]) -> Value {
    Value::Array(m.iter().map(|r| elements(field, r)).collect())
}
