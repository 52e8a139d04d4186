//! Point-level differential operators on a chart.

use nalgebra::{DMatrix, DVector};

use super::calculus;
use super::chart::{Chart, Point};
use super::field::{Field, FieldKind};
use super::geometry::{sum, Geometry};
use super::tensor::{contract_first, Slot, Tensor};
use crate::error::{GeometryError, Result};

/// `Γ^k_{ij}` values at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureData {
    pub christoffel: Christoffel,
    /// `R^l_{kij}`, flattened row-major over `(l, k, i, j)`.
    pub riemann: Vec<f64>,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
}

impl CurvatureData {
    pub fn riemann(&self, l: usize, k: usize, i: usize, j: usize) -> f64 {
        let m = self.christoffel.dim;
        self.riemann[((l * m + k) * m + i) * m + j]
    }

    /// Largest first-Bianchi defect `R^l_{kij} + R^l_{ijk} + R^l_{jki}`.
    pub fn bianchi_defect(&self) -> f64 {
        let m = self.christoffel.dim;
        let mut worst = 0.0f64;
        for l in 0..m {
            for k in 0..m {
                for i in 0..m {
                    for j in 0..m {
                        let s = self.riemann(l, k, i, j)
                            + self.riemann(l, i, j, k)
                            + self.riemann(l, j, k, i);
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }
}

fn metric_geometry(chart: &Chart, g: &Field, pt: &Point, order: usize) -> Result<Geometry> {
    chart.check_point(pt)?;
    if g.dim() != chart.dim() {
        return Err(GeometryError::DimensionMismatch(format!(
            "metric of dimension {} on a chart of dimension {}",
            g.dim(),
            chart.dim()
        )));
    }
    Geometry::new(g, pt, order)
}

fn field_tensor(t: &Field, pt: &Point, order: usize) -> Result<Tensor> {
    Tensor::from_field(t.kind(), t.dim(), t.jet(pt, order)?)
}

pub fn christoffel(chart: &Chart, g: &Field, pt: &Point) -> Result<Christoffel> {
    let geo = metric_geometry(chart, g, pt, 1)?;
    Ok(Christoffel {
        dim: chart.dim(),
        data: geo.christoffel().values(),
    })
}

pub fn curvature(chart: &Chart, g: &Field, pt: &Point) -> Result<CurvatureData> {
    let geo = metric_geometry(chart, g, pt, 2)?;
    Ok(curvature_from(&geo)?)
}

pub fn curvature_from(geo: &Geometry) -> Result<CurvatureData> {
    Ok(CurvatureData {
        christoffel: Christoffel {
            dim: geo.dim(),
            data: geo.christoffel().values(),
        },
        riemann: geo.riemann()?.values(),
        ricci: geo.ricci()?.matrix(),
        scalar: geo.scalar_curvature()?.value(),
    })
}

/// `⟨R(u,v)v, u⟩` from a prepared geometry (no normalisation).
pub fn curvature_operator_pairing(
    geo: &Geometry,
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<f64> {
    let r = geo.riemann()?;
    let g = geo.metric_value();
    let m = geo.dim();
    let mut rvv = DVector::zeros(m);
    for l in 0..m {
        let mut acc = 0.0;
        for k in 0..m {
            for i in 0..m {
                for j in 0..m {
                    acc += r.value_at(&[l, k, i, j]) * u[i] * v[j] * v[k];
                }
            }
        }
        rvv[l] = acc;
    }
    Ok((rvv.transpose() * g * u)[(0, 0)])
}

pub fn sectional_from(geo: &Geometry, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
    let (uu, vv, uv) = (geo.inner(u, u), geo.inner(v, v), geo.inner(u, v));
    let area2 = uu * vv - uv * uv;
    if !(area2 > 1e-14 * uu * vv) {
        return Err(GeometryError::DegeneratePlane { area2 });
    }
    Ok(curvature_operator_pairing(geo, u, v)? / area2)
}

pub fn sectional(
    chart: &Chart,
    g: &Field,
    pt: &Point,
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<f64> {
    let geo = metric_geometry(chart, g, pt, 2)?;
    sectional_from(&geo, u, v)
}

/// Lie derivative of a metric, endomorphism or vector field along `x`.
pub fn lie_derivative(x: &Field, t: &Field, pt: &Point) -> Result<Vec<f64>> {
    if x.kind() != FieldKind::Vector {
        return Err(GeometryError::InvalidParameter(
            "Lie derivative needs a vector field direction".into(),
        ));
    }
    let xt = field_tensor(x, pt, 1)?;
    let tt = field_tensor(t, pt, 1)?;
    let out = match t.kind() {
        FieldKind::Metric => calculus::lie_derivative_bilinear(&xt, &tt),
        FieldKind::Endomorphism => calculus::lie_derivative_endomorphism(&xt, &tt),
        FieldKind::Vector => calculus::lie_bracket(&xt, &tt),
        other => {
            return Err(GeometryError::InvalidParameter(format!(
                "Lie derivative of a {other:?} field is not supported"
            )))
        }
    };
    Ok(out.values())
}

/// `∇_direction T` for vector, one-form or endomorphism fields.
pub fn covariant_derivative(
    chart: &Chart,
    g: &Field,
    t: &Field,
    direction: &DVector<f64>,
    pt: &Point,
) -> Result<Vec<f64>> {
    if !matches!(
        t.kind(),
        FieldKind::Vector | FieldKind::OneForm | FieldKind::Endomorphism
    ) {
        return Err(GeometryError::InvalidParameter(format!(
            "covariant derivative of a {:?} field is not supported",
            t.kind()
        )));
    }
    let geo = metric_geometry(chart, g, pt, 1)?;
    let tt = field_tensor(t, pt, 1)?;
    Ok(contract_first(&geo.nabla(&tt), direction).values())
}

/// `Hess f = ∇df` as a tensor from a prepared geometry.
pub fn hessian_tensor(geo: &Geometry, f: &Tensor) -> Tensor {
    geo.nabla(&calculus::differential(f))
}

/// Frame trace `Σ_a B(E_a, E_a)` of a bilinear form given by values.
pub fn frame_trace(frame: &[DVector<f64>], b: &DMatrix<f64>) -> f64 {
    frame.iter().map(|e| (e.transpose() * b * e)[(0, 0)]).sum()
}

/// Hessian and the positive-spectrum Laplacian `Δf = −tr_g Hess f`.
pub fn hessian_laplacian(
    chart: &Chart,
    g: &Field,
    f: &Field,
    pt: &Point,
) -> Result<(DMatrix<f64>, f64)> {
    if f.kind() != FieldKind::Scalar {
        return Err(GeometryError::InvalidParameter(
            "Hessian of a non-scalar field".into(),
        ));
    }
    let geo = metric_geometry(chart, g, pt, 1)?;
    let ft = field_tensor(f, pt, 2)?;
    let hess = hessian_tensor(&geo, &ft).matrix();
    let frame = geo.orthonormal_frame(&[]);
    let lap = -frame_trace(&frame, &hess);
    Ok((hess, lap))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Divergence {
    Scalar(f64),
    /// Components `(Div T)(∂_j)`.
    OneForm(DVector<f64>),
}

/// `Σ_a ⟨∇_{E_a} X, E_a⟩` from `∇X` values (`[a][k]`).
pub fn vector_divergence(geo: &Geometry, frame: &[DVector<f64>], nabla_x: &Tensor) -> f64 {
    let g = geo.metric_value();
    let a = nabla_x.matrix(); // rows: derivative index
    frame
        .iter()
        .map(|e| {
            let dx = a.transpose() * e; // ∇_E X
            (dx.transpose() * &g * e)[(0, 0)]
        })
        .sum()
}

/// `(Div T)(X) = Σ_a ⟨(∇_{E_a} T) X, E_a⟩` from `∇T` (`[a][i][j]`).
pub fn endomorphism_divergence(
    geo: &Geometry,
    frame: &[DVector<f64>],
    nabla_t: &Tensor,
) -> DVector<f64> {
    let m = geo.dim();
    let g = geo.metric_value();
    let mut out = DVector::zeros(m);
    for e in frame {
        let d = contract_first(nabla_t, e).matrix(); // (∇_E T)^i_j
        let ge = &g * e;
        out += d.transpose() * ge;
    }
    out
}

pub fn divergence(chart: &Chart, g: &Field, t: &Field, pt: &Point) -> Result<Divergence> {
    let geo = metric_geometry(chart, g, pt, 1)?;
    let tt = field_tensor(t, pt, 1)?;
    let frame = geo.orthonormal_frame(&[]);
    match t.kind() {
        FieldKind::Vector => Ok(Divergence::Scalar(vector_divergence(
            &geo,
            &frame,
            &geo.nabla(&tt),
        ))),
        FieldKind::Endomorphism => Ok(Divergence::OneForm(endomorphism_divergence(
            &geo,
            &frame,
            &geo.nabla(&tt),
        ))),
        other => Err(GeometryError::InvalidParameter(format!(
            "divergence of a {other:?} field is not supported"
        ))),
    }
}

/// `dω` of a one-form field; antisymmetric matrix `(dω)_{ij}`.
pub fn exterior_derivative(omega: &Field, pt: &Point) -> Result<DMatrix<f64>> {
    if omega.kind() != FieldKind::OneForm {
        return Err(GeometryError::InvalidParameter(
            "exterior derivative expects a one-form field".into(),
        ));
    }
    let w = field_tensor(omega, pt, 1)?;
    Ok(calculus::exterior_derivative_one_form(&w).matrix())
}

/// `∇*∇V = −Σ_a (∇²V)(E_a, E_a)` from a prepared geometry.
pub fn rough_laplacian_from(geo: &Geometry, frame: &[DVector<f64>], v: &Tensor) -> DVector<f64> {
    let nn = geo.nabla(&geo.nabla(v)); // [a][b][k]
    let m = geo.dim();
    let mut out = DVector::zeros(m);
    for e in frame {
        let first = contract_first(&nn, e); // [b][k]
        let second = contract_first(&first, e); // [k]
        out -= second.vector();
    }
    debug_assert_eq!(out.len(), m);
    out
}

pub fn rough_laplacian_vector(
    chart: &Chart,
    g: &Field,
    v: &Field,
    pt: &Point,
) -> Result<DVector<f64>> {
    if v.kind() != FieldKind::Vector {
        return Err(GeometryError::InvalidParameter(
            "rough Laplacian expects a vector field".into(),
        ));
    }
    let geo = metric_geometry(chart, g, pt, 2)?;
    let vt = field_tensor(v, pt, 2)?;
    Ok(rough_laplacian_from(&geo, &geo.orthonormal_frame(&[]), &vt))
}

/// Trace of a `(1,1)` tensor by plain index contraction.
pub fn trace_jet(t: &Tensor) -> super::jet::Jet {
    assert_eq!(t.slots(), [Slot::Up, Slot::Down]);
    sum((0..t.dim()).map(|i| t.at(&[i, i]).clone()))
}
