//! Report assembly: JSON with 17 significant digits and a plain-text summary.

use std::fmt::Write as _;

use serde_json::{Map, Number, Value};
use sfoliate::report::ConventionLedger;

/// One result line. Rows without a tolerance are informational and never
/// affect the verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub max_abs: f64,
    pub mean_abs: f64,
    pub tol: Option<f64>,
    /// Signed quantity for informational rows.
    pub value: Option<f64>,
}

impl Row {
    pub fn check(name: impl Into<String>, max_abs: f64, mean_abs: f64, tol: f64) -> Self {
        Row {
            name: name.into(),
            max_abs,
            mean_abs,
            tol: Some(tol),
            value: None,
        }
    }

    pub fn info(name: impl Into<String>, max_abs: f64, mean_abs: f64) -> Self {
        Row {
            name: name.into(),
            max_abs,
            mean_abs,
            tol: None,
            value: None,
        }
    }

    pub fn value(name: impl Into<String>, value: f64) -> Self {
        Row {
            name: name.into(),
            max_abs: value.abs(),
            mean_abs: value.abs(),
            tol: None,
            value: Some(value),
        }
    }

    /// NaN never passes.
    pub fn pass(&self) -> Option<bool> {
        self.tol.map(|t| self.max_abs < t)
    }
}

/// Running max and mean of absolute values.
#[derive(Debug, Clone, Copy, Default)]
pub struct Stat {
    max: f64,
    total: f64,
    count: usize,
}

impl Stat {
    pub fn push(&mut self, v: f64) {
        let v = v.abs();
        self.max = if v.is_nan() || self.max.is_nan() {
            f64::NAN
        } else {
            self.max.max(v)
        };
        self.total += v;
        self.count += 1;
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.total / self.count as f64
        }
    }

    pub fn check(&self, name: impl Into<String>, tol: f64) -> Row {
        Row::check(name, self.max(), self.mean(), tol)
    }

    pub fn info(&self, name: impl Into<String>) -> Row {
        Row::info(name, self.max(), self.mean())
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub subcommand: &'static str,
    pub descriptor: String,
    pub seed: u64,
    pub config: Map<String, Value>,
    pub rows: Vec<Row>,
    pub notes: Vec<String>,
    /// Extra top-level payload, e.g. the catalog listing.
    pub extra: Option<(&'static str, Value)>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass() != Some(false))
    }

    pub fn verdict(&self) -> &'static str {
        if self.passed() {
            "pass"
        } else {
            "fail"
        }
    }

    pub fn to_json(&self) -> Value {
        let mut conventions = Map::new();
        for (k, v) in ConventionLedger::default().entries() {
            conventions.insert(k.into(), Value::String(v));
        }
        let mut meta = Map::new();
        meta.insert("tool".into(), "sfoliate".into());
        meta.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        meta.insert("subcommand".into(), self.subcommand.into());
        meta.insert("conventions".into(), Value::Object(conventions));
        meta.insert("descriptor".into(), self.descriptor.clone().into());
        meta.insert("seed".into(), self.seed.into());
        meta.insert(
            "notes".into(),
            Value::Array(self.notes.iter().cloned().map(Value::String).collect()),
        );
        let results = self
            .rows
            .iter()
            .map(|r| {
                let mut o = Map::new();
                o.insert("name".into(), r.name.clone().into());
                o.insert("max_abs".into(), number(r.max_abs));
                o.insert("mean_abs".into(), number(r.mean_abs));
                o.insert("tol".into(), r.tol.map_or(Value::Null, number));
                o.insert("pass".into(), r.pass().map_or(Value::Null, Value::Bool));
                if let Some(v) = r.value {
                    o.insert("value".into(), number(v));
                }
                Value::Object(o)
            })
            .collect();
        let mut top = Map::new();
        top.insert("meta".into(), Value::Object(meta));
        top.insert("config".into(), Value::Object(self.config.clone()));
        top.insert("results".into(), Value::Array(results));
        top.insert("verdict".into(), self.verdict().into());
        if let Some((k, v)) = &self.extra {
            top.insert((*k).into(), v.clone());
        }
        Value::Object(top)
    }

    pub fn json_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("serializable report");
        s.push('\n');
        s
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "sfoliate {} on {} (seed {})",
            self.subcommand, self.descriptor, self.seed
        );
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
        for r in &self.rows {
            let tag = match r.pass() {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "info",
            };
            let _ = match (r.tol, r.value) {
                (Some(t), _) => writeln!(
                    s,
                    "  {tag}  {:width$}  max {:.3e}  mean {:.3e}  tol {:.1e}",
                    r.name, r.max_abs, r.mean_abs, t
                ),
                (None, Some(v)) => writeln!(s, "  {tag}  {:width$}  {v:.10}", r.name),
                (None, None) => writeln!(
                    s,
                    "  {tag}  {:width$}  max {:.3e}  mean {:.3e}",
                    r.name, r.max_abs, r.mean_abs
                ),
            };
        }
        for n in &self.notes {
            let _ = writeln!(s, "  note: {n}");
        }
        let _ = writeln!(s, "verdict: {}", self.verdict());
        s
    }
}

/// Finite values as 17 significant digits; non-finite values as `null`.
pub fn number(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(
            format!("{x:.16e}")
                .parse::<Number>()
                .expect("scientific notation is valid JSON"),
        )
    } else {
        Value::Null
    }
}
