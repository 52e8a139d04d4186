//! Named residuals and their sample-aggregated reports.

use crate::chart_core::calculus::EXTERIOR_DERIVATIVE_FACTOR;

/// Ordered map from identity name to a non-negative residual at one point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResidualMap {
    entries: Vec<(&'static str, f64)>,
}

impl ResidualMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: &'static str, value: f64) {
        debug_assert!(self.get(name).is_none(), "duplicate residual `{name}`");
        self.entries.push((name, value));
    }

    pub fn extend(&mut self, other: ResidualMap) {
        for (n, v) in other.entries {
            self.push(n, v);
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|&(_, v)| v)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.iter().map(|&(n, _)| n)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest residual; NaN propagates as +∞.
    pub fn max(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(_, v)| if v.is_nan() { f64::INFINITY } else { v })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportEntry {
    pub name: String,
    pub max_abs: f64,
    pub mean_abs: f64,
    pub samples: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// Sign and factor choices in force for every computed quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct ConventionLedger {
    pub curvature: &'static str,
    pub ricci: &'static str,
    pub exterior_derivative_factor: f64,
    pub divergence: &'static str,
    pub laplacian: &'static str,
    pub rough_laplacian: &'static str,
    pub test_fields: &'static str,
}

impl Default for ConventionLedger {
    fn default() -> Self {
        ConventionLedger {
            curvature: "R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z",
            ricci: "Ric(X,Y) = tr(Z ↦ R(Z,X)Y)",
            exterior_derivative_factor: EXTERIOR_DERIVATIVE_FACTOR,
            divergence: "(Div T)(X) = Σ_a ⟨(∇_{E_a} T)X, E_a⟩",
            laplacian: "Δf = −tr Hess f",
            rough_laplacian: "∇*∇V = −Σ_a (∇_{E_a}∇_{E_a}V − ∇_{∇_{E_a}E_a}V); Ricci/rough-Laplacian identity uses the pairing interpretation −⟨∇*∇ξ_i, X⟩",
            test_fields: "X ranges over coordinate fields, the Reeb fields and 3 random constant fields per sample",
        }
    }
}

impl ConventionLedger {
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("curvature_sign", self.curvature.to_string()),
            ("ricci", self.ricci.to_string()),
            (
                "d_eta_factor",
                format!("{}", self.exterior_derivative_factor),
            ),
            ("divergence", self.divergence.to_string()),
            ("laplacian_sign", self.laplacian.to_string()),
            ("rough_laplacian", self.rough_laplacian.to_string()),
            ("test_fields", self.test_fields.to_string()),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub structure: String,
    pub seed: u64,
    pub samples: usize,
    pub conventions: ConventionLedger,
    pub entries: Vec<ReportEntry>,
    pub warnings: Vec<String>,
}

impl ResidualReport {
    /// Aggregates per-sample maps, in sample order, into one report.
    ///
    /// Every map must carry the same names in the same order.
    pub fn aggregate(
        structure: String,
        seed: u64,
        per_sample: &[ResidualMap],
        tolerance: impl Fn(&str) -> f64,
    ) -> Self {
        let samples = per_sample.len();
        let entries = match per_sample.first() {
            None => Vec::new(),
            Some(first) => first
                .names()
                .enumerate()
                .map(|(k, name)| {
                    let mut max_abs = 0.0f64;
                    let mut total = 0.0;
                    for map in per_sample {
                        let (n, v) = map.entries[k];
                        assert_eq!(n, name, "residual maps disagree on order");
                        let v = v.abs();
                        max_abs = if v.is_nan() { f64::NAN } else { max_abs.max(v) };
                        total += v;
                    }
                    let tol = tolerance(name);
                    ReportEntry {
                        name: name.to_string(),
                        max_abs,
                        mean_abs: total / samples as f64,
                        samples,
                        tolerance: tol,
                        pass: max_abs < tol,
                    }
                })
                .collect(),
        };
        ResidualReport {
            structure,
            seed,
            samples,
            conventions: ConventionLedger::default(),
            entries,
            warnings: Vec::new(),
        }
    }

    pub fn entry(&self, name: &str) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn all_pass(&self) -> bool {
        !self.entries.is_empty() && self.entries.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(a: f64, b: f64) -> ResidualMap {
        let mut m = ResidualMap::new();
        m.push("a", a);
        m.push("b", b);
        m
    }

    #[test]
    fn aggregate_max_mean_and_pass() {
        let r =
            ResidualReport::aggregate("s".into(), 1, &[map(1e-9, 0.5), map(3e-9, 0.1)], |_| 1e-8);
        let a = r.entry("a").unwrap();
        assert_eq!(a.max_abs, 3e-9);
        assert!((a.mean_abs - 2e-9).abs() < 1e-20);
        assert!(a.pass);
        assert!(!r.entry("b").unwrap().pass);
        assert!(!r.all_pass());
        assert_eq!(r.failures().count(), 1);
    }

    #[test]
    fn nan_never_passes() {
        let r = ResidualReport::aggregate("s".into(), 1, &[map(f64::NAN, 0.0)], |_| 1.0);
        assert!(!r.entry("a").unwrap().pass);
    }
}
