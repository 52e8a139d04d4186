//! Levi-Civita connection and curvature of a metric at one point, carried as
//! jets so that covariant derivatives can be iterated.
//!
//! Conventions:
//! - `Γ^k_{ij} = ½ g^{kl}(∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij})`
//! - `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_{[X,Y]}Z`, stored as `R^l_{kij}` with
//!   `R(∂_i,∂_j)∂_k = R^l_{kij} ∂_l`
//! - `Ric(X,Y) = tr(Z ↦ R(Z,X)Y)`, so the round sphere has positive Ricci.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use super::chart::Point;
use super::field::{Field, FieldKind};
use super::jet::Jet;
use super::tensor::{Slot, Tensor};
use crate::error::{GeometryError, Result};

/// Relative threshold below which a Gram–Schmidt candidate counts as dependent.
const FRAME_DEPENDENCE: f64 = 1e-10;

pub struct Geometry {
    point: Point,
    g: Tensor,
    ginv: Tensor,
    gamma: Tensor,
    riemann: OnceLock<Tensor>,
    ricci: OnceLock<Tensor>,
    scalar: OnceLock<Jet>,
}

impl Geometry {
    /// Expands `g` to `order` at `pt`. Curvature needs `order >= 2`.
    pub fn new(g: &Field, pt: &Point, order: usize) -> Result<Self> {
        if g.kind() != FieldKind::Metric {
            return Err(GeometryError::InvalidParameter(format!(
                "{:?} field used as a metric",
                g.kind()
            )));
        }
        if order == 0 {
            return Err(GeometryError::InsufficientOrder {
                what: "Levi-Civita connection",
                needed: 1,
                available: 0,
            });
        }
        let comps = g.jet(pt, order)?;
        Geometry::from_metric_jets(g.dim(), comps, pt.clone())
    }

    pub fn from_metric_jets(dim: usize, comps: Vec<Jet>, point: Point) -> Result<Self> {
        let g = Tensor::from_field(FieldKind::Metric, dim, comps)?;
        let gv = g.matrix();
        if gv.clone().cholesky().is_none() {
            return Err(GeometryError::DegenerateMetric {
                point: point.coords().to_vec(),
                pivot: gv.symmetric_eigenvalues().min(),
            });
        }
        let ginv = invert(&g, &point)?;
        let dg = g.partial();
        let m = dim;
        // Γ_{lij} = ½(∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij})
        let lowered = Tensor::from_fn(m, vec![Slot::Down; 3], |ix| {
            let (l, i, j) = (ix[0], ix[1], ix[2]);
            (dg.at(&[i, j, l]) + dg.at(&[j, i, l]) - dg.at(&[l, i, j])) * 0.5
        });
        let gamma = Tensor::from_fn(m, vec![Slot::Up, Slot::Down, Slot::Down], |ix| {
            let (k, i, j) = (ix[0], ix[1], ix[2]);
            sum((0..m).map(|l| ginv.at(&[k, l]) * lowered.at(&[l, i, j])))
        });
        Ok(Geometry {
            point,
            g,
            ginv,
            gamma,
            riemann: OnceLock::new(),
            ricci: OnceLock::new(),
            scalar: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn point(&self) -> &Point {
        &self.point
    }

    /// Jet order of the metric expansion.
    pub fn order(&self) -> usize {
        self.g.order()
    }

    pub fn metric(&self) -> &Tensor {
        &self.g
    }

    pub fn inverse_metric(&self) -> &Tensor {
        &self.ginv
    }

    /// `Γ^k_{ij}`, slots `[Up, Down, Down]`.
    pub fn christoffel(&self) -> &Tensor {
        &self.gamma
    }

    pub fn metric_value(&self) -> DMatrix<f64> {
        self.g.matrix()
    }

    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        (u.transpose() * self.metric_value() * v)[(0, 0)]
    }

    fn require(&self, needed: usize, what: &'static str) -> Result<()> {
        if self.order() < needed {
            return Err(GeometryError::InsufficientOrder {
                what,
                needed,
                available: self.order(),
            });
        }
        Ok(())
    }

    /// `∇T` with the derivative index prepended as a `Down` slot.
    pub fn nabla(&self, t: &Tensor) -> Tensor {
        let m = self.dim();
        let d = t.partial();
        let mut slots = vec![Slot::Down];
        slots.extend_from_slice(t.slots());
        Tensor::from_fn(m, slots, |ix| {
            let a = ix[0];
            let rest = &ix[1..];
            let mut acc = d.at(ix).clone();
            let mut idx = rest.to_vec();
            for (s, slot) in t.slots().iter().enumerate() {
                let orig = rest[s];
                for l in 0..m {
                    idx[s] = l;
                    match slot {
                        Slot::Up => acc += &(self.gamma.at(&[orig, a, l]) * t.at(&idx)),
                        Slot::Down => acc -= &(self.gamma.at(&[l, a, orig]) * t.at(&idx)),
                    }
                }
                idx[s] = orig;
            }
            acc
        })
    }

    /// `R^l_{kij}`, slots `[Up, Down, Down, Down]`. Needs order ≥ 2.
    pub fn riemann(&self) -> Result<&Tensor> {
        self.require(2, "Riemann tensor")?;
        Ok(self.riemann.get_or_init(|| {
            let m = self.dim();
            let dgamma = self.gamma.partial(); // [a, k, i, j] = ∂_a Γ^k_{ij}
            let gamma = &self.gamma;
            Tensor::from_fn(
                m,
                vec![Slot::Up, Slot::Down, Slot::Down, Slot::Down],
                |ix| {
                    let (l, k, i, j) = (ix[0], ix[1], ix[2], ix[3]);
                    let mut acc = dgamma.at(&[i, l, j, k]) - dgamma.at(&[j, l, i, k]);
                    for q in 0..m {
                        acc += &(gamma.at(&[l, i, q]) * gamma.at(&[q, j, k]));
                        acc -= &(gamma.at(&[l, j, q]) * gamma.at(&[q, i, k]));
                    }
                    acc
                },
            )
        }))
    }

    /// `Ric_{jk}`, slots `[Down, Down]`. Needs order ≥ 2.
    pub fn ricci(&self) -> Result<&Tensor> {
        let r = self.riemann()?;
        Ok(self.ricci.get_or_init(|| {
            let m = self.dim();
            Tensor::from_fn(m, vec![Slot::Down, Slot::Down], |ix| {
                sum((0..m).map(|i| r.at(&[i, ix[1], i, ix[0]]).clone()))
            })
        }))
    }

    pub fn scalar_curvature(&self) -> Result<&Jet> {
        let ric = self.ricci()?;
        Ok(self.scalar.get_or_init(|| {
            let m = self.dim();
            sum(super::tensor::multi_indices(m, 2).map(|ix| self.ginv.at(&ix) * ric.at(&ix)))
        }))
    }

    /// Raises the (single) `Down` slot of a one-form.
    pub fn raise(&self, omega: &Tensor) -> Tensor {
        assert_eq!(omega.slots(), [Slot::Down]);
        let m = self.dim();
        Tensor::from_fn(m, vec![Slot::Up], |ix| {
            sum((0..m).map(|l| self.ginv.at(&[ix[0], l]) * omega.at(&[l])))
        })
    }

    /// Lowers a vector to a one-form.
    pub fn lower(&self, v: &Tensor) -> Tensor {
        assert_eq!(v.slots(), [Slot::Up]);
        let m = self.dim();
        Tensor::from_fn(m, vec![Slot::Down], |ix| {
            sum((0..m).map(|l| self.g.at(&[ix[0], l]) * v.at(&[l])))
        })
    }

    /// `g(U, V)` as a jet.
    pub fn inner_jet(&self, u: &Tensor, v: &Tensor) -> Jet {
        let m = self.dim();
        sum(super::tensor::multi_indices(m, 2)
            .map(|ix| self.g.at(&ix) * u.at(&[ix[0]]) * v.at(&[ix[1]])))
    }

    /// Ricci as an endomorphism `Ric^i_j = g^{ik} Ric_{kj}`.
    pub fn ricci_endomorphism(&self) -> Result<Tensor> {
        let ric = self.ricci()?;
        let m = self.dim();
        Ok(Tensor::from_fn(m, vec![Slot::Up, Slot::Down], |ix| {
            sum((0..m).map(|k| self.ginv.at(&[ix[0], k]) * ric.at(&[k, ix[1]])))
        }))
    }

    /// g-orthonormal frame from Gram–Schmidt, `seeds` first, then the
    /// coordinate frame; nearly dependent candidates are skipped.
    pub fn orthonormal_frame(&self, seeds: &[DVector<f64>]) -> Vec<DVector<f64>> {
        orthonormal_frame(&self.metric_value(), seeds)
    }
}

pub fn orthonormal_frame(g: &DMatrix<f64>, seeds: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let m = g.nrows();
    let inner = |u: &DVector<f64>, v: &DVector<f64>| (u.transpose() * g * v)[(0, 0)];
    let mut frame: Vec<DVector<f64>> = Vec::with_capacity(m);
    let candidates = seeds
        .iter()
        .cloned()
        .chain((0..m).map(|i| DVector::from_fn(m, |k, _| if k == i { 1.0 } else { 0.0 })));
    for c in candidates {
        if frame.len() == m {
            break;
        }
        let scale = inner(&c, &c).sqrt();
        let mut v = c;
        for _ in 0..2 {
            for e in &frame {
                let proj = inner(&v, e);
                v -= e * proj;
            }
        }
        let norm = inner(&v, &v).sqrt();
        if norm > FRAME_DEPENDENCE * scale.max(1.0) {
            frame.push(v / norm);
        }
    }
    frame
}

pub(crate) fn sum(it: impl Iterator<Item = Jet>) -> Jet {
    it.reduce(|a, b| a + b).expect("non-empty sum")
}

/// Gauss–Jordan inverse of a positive-definite jet matrix.
pub(crate) fn invert(g: &Tensor, point: &Point) -> Result<Tensor> {
    let m = g.dim();
    let mut a: Vec<Vec<Jet>> = (0..m)
        .map(|i| (0..m).map(|j| g.at(&[i, j]).clone()).collect())
        .collect();
    let one = g.at(&[0, 0]).lift(1.0);
    let zero = one.lift(0.0);
    let mut inv: Vec<Vec<Jet>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| if i == j { one.clone() } else { zero.clone() })
                .collect()
        })
        .collect();
    let scale = g.max_abs().max(f64::MIN_POSITIVE);
    for col in 0..m {
        let pivot = a[col][col].clone();
        if !(pivot.value() > 1e-14 * scale) {
            return Err(GeometryError::DegenerateMetric {
                point: point.coords().to_vec(),
                pivot: pivot.value(),
            });
        }
        let r = pivot.recip();
        for j in 0..m {
            a[col][j] = &a[col][j] * &r;
            inv[col][j] = &inv[col][j] * &r;
        }
        for row in 0..m {
            if row == col || a[row][col].coeffs().iter().all(|&c| c == 0.0) {
                continue;
            }
            let factor = a[row][col].clone();
            for j in 0..m {
                let da = &factor * &a[col][j];
                let di = &factor * &inv[col][j];
                a[row][j] -= &da;
                inv[row][j] -= &di;
            }
        }
    }
    let comps = inv.into_iter().flatten().collect();
    Tensor::new(m, vec![Slot::Up, Slot::Up], comps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polar_plane() -> Field {
        // g = dr² + r² dθ²
        Field::from_fn(FieldKind::Metric, 2, |x| {
            let z = x[0].zero_like();
            vec![z.lift(1.0), z.clone(), z, x[0].square()]
        })
    }

    #[test]
    fn inverse_metric_jets_are_exact() {
        let g = polar_plane();
        let geo = Geometry::new(&g, &Point::new(vec![2.0, 0.3]), 3).unwrap();
        let ginv = geo.inverse_metric();
        // g^{θθ} = r^{-2}: derivative −2 r^{-3}, second 6 r^{-4}
        assert!((ginv.value_at(&[1, 1]) - 0.25).abs() < 1e-15);
        assert!((ginv.at(&[1, 1]).derivative(&[0]) + 0.25).abs() < 1e-15);
        assert!((ginv.at(&[1, 1]).derivative(&[0, 0]) - 6.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn flat_polar_curvature_vanishes() {
        let g = polar_plane();
        let geo = Geometry::new(&g, &Point::new(vec![1.5, 0.3]), 2).unwrap();
        // Γ^r_{θθ} = −r, Γ^θ_{rθ} = 1/r
        assert!((geo.christoffel().value_at(&[0, 1, 1]) + 1.5).abs() < 1e-14);
        assert!((geo.christoffel().value_at(&[1, 0, 1]) - 1.0 / 1.5).abs() < 1e-14);
        assert!(geo.riemann().unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn curvature_requires_second_order() {
        let g = polar_plane();
        let geo = Geometry::new(&g, &Point::new(vec![1.5, 0.3]), 1).unwrap();
        assert!(matches!(
            geo.riemann(),
            Err(GeometryError::InsufficientOrder { .. })
        ));
    }

    #[test]
    fn singular_metric_is_rejected() {
        let g = polar_plane();
        let err = Geometry::new(&g, &Point::new(vec![0.0, 0.3]), 1)
            .err()
            .unwrap();
        assert!(matches!(err, GeometryError::DegenerateMetric { .. }));
    }

    #[test]
    fn frame_is_orthonormal_and_seeded() {
        let g = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 1.5]);
        let seed = DVector::from_vec(vec![0.0, 1.0, 1.0]);
        let frame = orthonormal_frame(&g, &[seed.clone()]);
        assert_eq!(frame.len(), 3);
        for (i, a) in frame.iter().enumerate() {
            for (j, b) in frame.iter().enumerate() {
                let ip = (a.transpose() * &g * b)[(0, 0)];
                assert!((ip - if i == j { 1.0 } else { 0.0 }).abs() < 1e-13);
            }
        }
        let n = (seed.transpose() * &g * &seed)[(0, 0)].sqrt();
        assert!((&frame[0] - seed / n).amax() < 1e-14);
    }
}
