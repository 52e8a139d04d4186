use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::chart::Point;
use super::jet::{Jet, MAX_ORDER};
use crate::error::{GeometryError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Scalar,
    Vector,
    OneForm,
    /// `(1,1)` tensor, components `T^i_j` stored row-major (row = output index).
    Endomorphism,
    /// Components `g_ij`, row-major.
    Metric,
}

impl FieldKind {
    pub fn components(self, dim: usize) -> usize {
        match self {
            FieldKind::Scalar => 1,
            FieldKind::Vector | FieldKind::OneForm => dim,
            FieldKind::Endomorphism | FieldKind::Metric => dim * dim,
        }
    }
}

pub type FieldFn = dyn Fn(&[Jet]) -> Result<Vec<Jet>> + Send + Sync;

/// A smooth field on a chart, written once as a function over jets so that
/// values and exact partial derivatives come from the same code.
#[derive(Clone)]
pub struct Field {
    kind: FieldKind,
    dim: usize,
    f: Arc<FieldFn>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("kind", &self.kind)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl Field {
    pub fn new(
        kind: FieldKind,
        dim: usize,
        f: impl Fn(&[Jet]) -> Result<Vec<Jet>> + Send + Sync + 'static,
    ) -> Self {
        Field {
            kind,
            dim,
            f: Arc::new(f),
        }
    }

    /// Like [`Field::new`] for closures that cannot fail.
    pub fn from_fn(
        kind: FieldKind,
        dim: usize,
        f: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    ) -> Self {
        Field::new(kind, dim, move |x| Ok(f(x)))
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Evaluates on already-seeded coordinate jets.
    pub fn apply(&self, coords: &[Jet]) -> Result<Vec<Jet>> {
        if coords.len() != self.dim {
            return Err(GeometryError::DimensionMismatch(format!(
                "field on dimension {} evaluated with {} coordinates",
                self.dim,
                coords.len()
            )));
        }
        let out = (self.f)(coords)?;
        let expected = self.kind.components(self.dim);
        if out.len() != expected {
            return Err(GeometryError::DimensionMismatch(format!(
                "{:?} field returned {} components, expected {expected}",
                self.kind,
                out.len()
            )));
        }
        Ok(out)
    }

    /// All partial derivatives of the components up to `order` at `pt`.
    pub fn jet(&self, pt: &Point, order: usize) -> Result<Vec<Jet>> {
        if order > MAX_ORDER {
            return Err(GeometryError::InvalidParameter(format!(
                "jet order {order} exceeds {MAX_ORDER}"
            )));
        }
        self.apply(&Jet::seed(pt.coords(), order))
    }

    pub fn eval(&self, pt: &Point) -> Result<Vec<f64>> {
        Ok(self.jet(pt, 0)?.iter().map(Jet::value).collect())
    }

    pub fn eval_matrix(&self, pt: &Point) -> Result<DMatrix<f64>> {
        let v = self.eval(pt)?;
        Ok(DMatrix::from_row_slice(self.dim, self.dim, &v))
    }

    pub fn eval_vector(&self, pt: &Point) -> Result<DVector<f64>> {
        Ok(DVector::from_vec(self.eval(pt)?))
    }

    /// Checks the metric invariants (symmetry, positive definiteness) at `pt`.
    pub fn check_metric(&self, pt: &Point) -> Result<()> {
        if self.kind != FieldKind::Metric {
            return Err(GeometryError::InvalidParameter(format!(
                "{:?} field used as a metric",
                self.kind
            )));
        }
        let g = self.eval_matrix(pt)?;
        let asym = (&g - g.transpose()).amax();
        if asym > 1e-12 * g.amax().max(1.0) {
            return Err(GeometryError::InvalidParameter(format!(
                "metric not symmetric at {:?} (|g - gᵀ| = {asym:e})",
                pt.coords()
            )));
        }
        let min_eig = g.symmetric_eigenvalues().min();
        if !(min_eig > 0.0) {
            return Err(GeometryError::DegenerateMetric {
                point: pt.coords().to_vec(),
                pivot: min_eig,
            });
        }
        Ok(())
    }

    // Frequently used constructors.

    pub fn constant(kind: FieldKind, dim: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), kind.components(dim));
        Field::from_fn(kind, dim, move |x| {
            values.iter().map(|&v| x[0].lift(v)).collect()
        })
    }

    pub fn euclidean_metric(dim: usize) -> Self {
        let mut id = vec![0.0; dim * dim];
        for i in 0..dim {
            id[i * dim + i] = 1.0;
        }
        Field::constant(FieldKind::Metric, dim, id)
    }

    /// The coordinate vector field `∂_i`.
    pub fn coordinate_vector(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Field::constant(FieldKind::Vector, dim, v)
    }

    /// The position field `Σ x^i ∂_i`.
    pub fn position(dim: usize) -> Self {
        Field::from_fn(FieldKind::Vector, dim, |x| x.to_vec())
    }

    /// `c · X`.
    pub fn scaled(&self, c: f64) -> Self {
        let inner = self.clone();
        Field::new(self.kind, self.dim, move |x| {
            Ok(inner.apply(x)?.into_iter().map(|j| j * c).collect())
        })
    }

    /// `Σ c_k X_k` over fields of one kind.
    pub fn linear_combination(fields: &[Field], coeffs: &[f64]) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| GeometryError::InvalidParameter("empty linear combination".into()))?;
        if fields.len() != coeffs.len()
            || fields
                .iter()
                .any(|f| f.kind != first.kind || f.dim != first.dim)
        {
            return Err(GeometryError::DimensionMismatch(
                "linear combination of incompatible fields".into(),
            ));
        }
        let (kind, dim) = (first.kind, first.dim);
        let fields = fields.to_vec();
        let coeffs = coeffs.to_vec();
        Ok(Field::new(kind, dim, move |x| {
            let mut acc: Option<Vec<Jet>> = None;
            for (f, &c) in fields.iter().zip(&coeffs) {
                let v = f.apply(x)?;
                acc = Some(match acc {
                    None => v.into_iter().map(|j| j * c).collect(),
                    Some(a) => a.into_iter().zip(v).map(|(a, b)| a + b * c).collect(),
                });
            }
            Ok(acc.expect("non-empty"))
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_zero_jet_equals_eval() {
        let f = Field::from_fn(FieldKind::Scalar, 2, |x| vec![x[0].sin() * &x[1]]);
        let pt = Point::new(vec![0.4, 1.3]);
        let v = f.eval(&pt).unwrap()[0];
        let j = f.jet(&pt, 3).unwrap();
        assert_eq!(j[0].value(), v);
    }

    #[test]
    fn wrong_component_count_is_reported() {
        let f = Field::from_fn(FieldKind::Vector, 2, |x| vec![x[0].clone()]);
        assert!(matches!(
            f.eval(&Point::new(vec![0.0, 0.0])),
            Err(GeometryError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn metric_check_rejects_indefinite() {
        let g = Field::constant(FieldKind::Metric, 2, vec![1.0, 0.0, 0.0, -1.0]);
        assert!(g.check_metric(&Point::new(vec![0.0, 0.0])).is_err());
        assert!(Field::euclidean_metric(2)
            .check_metric(&Point::new(vec![0.0, 0.0]))
            .is_ok());
    }
}
