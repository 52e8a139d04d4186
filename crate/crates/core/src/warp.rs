//! Vertical warping along the characteristic foliation, the canonical
//! variation, and leafwise curvature of the foliation.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::chart_core::geometry::invert;
use crate::chart_core::ops::{curvature_operator_pairing, sectional_from};
use crate::chart_core::tensor::{contract_first, Slot};
use crate::chart_core::{Chart, Field, FieldKind, Geometry, Jet, Point, Sampler, Tensor};
use crate::error::{GeometryError, Result};
use crate::structure::{vertical_projector, AlmostSStructure};

/// Largest `|ξ_i w|` accepted for a warp function.
pub const BASIC_TOLERANCE: f64 = 1e-10;
/// Second-fundamental-form norm above which leafwise values are untrusted.
pub const TOTALLY_GEODESIC_TOLERANCE: f64 = 1e-8;

/// Vertical frame `ξ_1..ξ_p` on a chart; the horizontal bundle is its
/// g-orthogonal complement for whichever metric is in use.
#[derive(Debug, Clone)]
pub struct VerticalSplitting {
    chart: Chart,
    vertical: Vec<Field>,
}

impl VerticalSplitting {
    pub fn new(chart: Chart, vertical: Vec<Field>) -> Result<Self> {
        if vertical.is_empty() {
            return Err(GeometryError::InvalidParameter(
                "a splitting needs at least one vertical field".into(),
            ));
        }
        if vertical
            .iter()
            .any(|f| f.kind() != FieldKind::Vector || f.dim() != chart.dim())
        {
            return Err(GeometryError::DimensionMismatch(
                "vertical fields must be vector fields on the chart".into(),
            ));
        }
        Ok(VerticalSplitting { chart, vertical })
    }

    pub fn from_structure(s: &AlmostSStructure) -> Self {
        VerticalSplitting {
            chart: s.chart().clone(),
            vertical: s.xi().to_vec(),
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn vertical(&self) -> &[Field] {
        &self.vertical
    }

    pub fn vertical_values(&self, pt: &Point) -> Result<Vec<DVector<f64>>> {
        self.vertical.iter().map(|f| f.eval_vector(pt)).collect()
    }

    /// `(P_h, P_v)` for the metric `g` at `pt`.
    pub fn projectors(
        &self,
        g: &Field,
        pt: &Point,
    ) -> Result<(nalgebra::DMatrix<f64>, nalgebra::DMatrix<f64>)> {
        let gv = g.eval_matrix(pt)?;
        let pv = vertical_projector(&gv, &self.vertical_values(pt)?);
        let m = gv.nrows();
        Ok((nalgebra::DMatrix::identity(m, m) - &pv, pv))
    }
}

/// Jets of the vertical block `g(P_v ·, P_v ·)`, i.e.
/// `V_{ab} = Σ g(∂_a, ξ_i) G^{ij} g(ξ_j, ∂_b)` with `G` the Gram matrix of `ξ`.
fn vertical_block(g: &[Jet], xi: &[Vec<Jet>], coords: &[Jet]) -> Result<Vec<Jet>> {
    let m = coords.len();
    let p = xi.len();
    let zero = coords[0].zero_like();
    let sum = |it: &mut dyn Iterator<Item = Jet>| it.fold(zero.clone(), |a, b| a + b);
    // u[i][a] = g(ξ_i, ∂_a)
    let u: Vec<Vec<Jet>> = xi
        .iter()
        .map(|x| {
            (0..m)
                .map(|a| sum(&mut (0..m).map(|k| &g[a * m + k] * &x[k])))
                .collect()
        })
        .collect();
    let gram: Vec<Jet> = (0..p)
        .flat_map(|i| (0..p).map(move |j| (i, j)))
        .map(|(i, j)| sum(&mut (0..m).map(|a| &xi[i][a] * &u[j][a])))
        .collect();
    let gram = Tensor::new(p, vec![Slot::Down, Slot::Down], gram)?;
    let point = Point::new(coords.iter().map(Jet::value).collect());
    let ginv = invert(&gram, &point)?;
    Ok((0..m)
        .flat_map(|a| (0..m).map(move |b| (a, b)))
        .map(|(a, b)| {
            sum(&mut (0..p)
                .flat_map(|i| (0..p).map(move |j| (i, j)))
                .map(|(i, j)| &u[i][a] * ginv.at(&[i, j]) * &u[j][b]))
        })
        .collect())
}

/// `g_w = g + (e^{2w} − 1) g(P_v ·, P_v ·)` with no basic check on `w`.
pub fn vertical_warp_unchecked(
    g: &Field,
    splitting: &VerticalSplitting,
    w: &Field,
) -> Result<Field> {
    let m = splitting.chart.dim();
    if g.kind() != FieldKind::Metric || g.dim() != m {
        return Err(GeometryError::DimensionMismatch(
            "warp needs a metric on the splitting's chart".into(),
        ));
    }
    if w.kind() != FieldKind::Scalar || w.dim() != m {
        return Err(GeometryError::DimensionMismatch(
            "warp function must be a scalar field on the splitting's chart".into(),
        ));
    }
    let (g, w) = (g.clone(), w.clone());
    let vertical = splitting.vertical.clone();
    Ok(Field::new(FieldKind::Metric, m, move |c: &[Jet]| {
        let gj = g.apply(c)?;
        let xi = vertical
            .iter()
            .map(|f| f.apply(c))
            .collect::<Result<Vec<_>>>()?;
        let scale = (w.apply(c)?[0].clone() * 2.0).exp() - 1.0;
        let v = vertical_block(&gj, &xi, c)?;
        Ok(gj
            .into_iter()
            .zip(v)
            .map(|(gab, vab)| gab + &scale * vab)
            .collect())
    }))
}

/// Vertical warp by a basic function; `w` is rejected when `|ξ_i w|`
/// exceeds [`BASIC_TOLERANCE`] on the default sample set.
pub fn vertical_warp(g: &Field, splitting: &VerticalSplitting, w: &Field) -> Result<Field> {
    let defect = basic_defect_along(
        w,
        &splitting.chart,
        &splitting.vertical,
        &Sampler::default(),
    )?;
    if !(defect < BASIC_TOLERANCE) {
        return Err(GeometryError::NonBasic { defect });
    }
    vertical_warp_unchecked(g, splitting, w)
}

/// Vertical block scaled by `t²`, horizontal block unchanged.
pub fn canonical_variation(g: &Field, splitting: &VerticalSplitting, t: f64) -> Result<Field> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(GeometryError::InvalidParameter(format!(
            "canonical variation needs t > 0, got {t}"
        )));
    }
    let m = splitting.chart.dim();
    let w = Field::constant(FieldKind::Scalar, m, vec![t.ln()]);
    vertical_warp_unchecked(g, splitting, &w)
}

/// `max |ξ_i f|` over the samples and the vertical fields.
pub fn basic_defect_along(
    f: &Field,
    chart: &Chart,
    vertical: &[Field],
    sampler: &Sampler,
) -> Result<f64> {
    if f.kind() != FieldKind::Scalar || f.dim() != chart.dim() {
        return Err(GeometryError::DimensionMismatch(
            "basic defect needs a scalar field on the chart".into(),
        ));
    }
    let per_sample = sampler
        .points(chart)
        .par_iter()
        .map(|pt| -> Result<f64> {
            let grad = f.jet(pt, 1)?[0].gradient();
            vertical.iter().try_fold(0.0f64, |worst, x| {
                let xv = x.eval(pt)?;
                let d: f64 = xv.iter().zip(&grad).map(|(a, b)| a * b).sum();
                Ok(worst.max(d.abs()))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_sample.into_iter().fold(0.0, f64::max))
}

pub fn basic_defect(f: &Field, s: &AlmostSStructure, sampler: &Sampler) -> Result<f64> {
    basic_defect_along(f, s.chart(), s.xi(), sampler)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeafSample {
    pub point: Vec<f64>,
    /// `K(ξ_i, ξ_j)` for `i < j`.
    pub sectional: Vec<((usize, usize), f64)>,
    /// `Ric_F(u, u)` for unit `u` along each `ξ_i` and along `ξ̄`.
    pub leaf_ricci: Vec<f64>,
    /// `max_{i,j} |P_h ∇_{ξ_i} ξ_j|`.
    pub second_fundamental: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeafCurvatureReport {
    pub samples: Vec<LeafSample>,
    pub max_sectional: f64,
    pub max_leaf_ricci: f64,
    pub max_second_fundamental: f64,
    /// False when the leaves are not totally geodesic at some sample, so the
    /// ambient curvature does not give the leafwise one.
    pub trusted: bool,
}

fn leaf_sample(g: &Field, vertical: &[Field], pt: &Point) -> Result<LeafSample> {
    let geo = Geometry::new(g, pt, 2)?;
    let m = geo.dim();
    let xi_t = vertical
        .iter()
        .map(|f| Tensor::from_field(FieldKind::Vector, m, f.jet(pt, 1)?))
        .collect::<Result<Vec<_>>>()?;
    let xi: Vec<DVector<f64>> = xi_t.iter().map(Tensor::vector).collect();
    let gv = geo.metric_value();
    let pv = vertical_projector(&gv, &xi);
    let ph = nalgebra::DMatrix::identity(m, m) - &pv;

    let mut second_fundamental = 0.0f64;
    for x in &xi {
        for y in &xi_t {
            let d = ph.clone() * contract_first(&geo.nabla(y), x).vector();
            second_fundamental = second_fundamental.max(geo.inner(&d, &d).sqrt());
        }
    }

    let p = xi.len();
    let mut sectional = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            sectional.push(((i, j), sectional_from(&geo, &xi[i], &xi[j])?));
        }
    }

    let leaf_frame: Vec<DVector<f64>> = geo.orthonormal_frame(&xi).into_iter().take(p).collect();
    let xi_bar = xi.iter().fold(DVector::zeros(m), |a, x| a + x);
    let mut leaf_ricci = Vec::with_capacity(p + 1);
    for u in xi.iter().chain(std::iter::once(&xi_bar)) {
        let u = u / geo.inner(u, u).sqrt();
        let mut ric = 0.0;
        for e in &leaf_frame {
            ric += curvature_operator_pairing(&geo, e, &u)?;
        }
        leaf_ricci.push(ric);
    }
    Ok(LeafSample {
        point: pt.coords().to_vec(),
        sectional,
        leaf_ricci,
        second_fundamental,
    })
}

/// Leafwise curvature of the foliation spanned by `splitting` under `g`.
pub fn leaf_curvature_report_for(
    g: &Field,
    splitting: &VerticalSplitting,
    sampler: &Sampler,
) -> Result<LeafCurvatureReport> {
    let samples = sampler
        .points(&splitting.chart)
        .par_iter()
        .map(|pt| leaf_sample(g, &splitting.vertical, pt))
        .collect::<Result<Vec<_>>>()?;
    let fold = |f: &dyn Fn(&LeafSample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
    let max_sectional = fold(&|s| s.sectional.iter().map(|(_, k)| k.abs()).fold(0.0, f64::max));
    let max_leaf_ricci = fold(&|s| s.leaf_ricci.iter().map(|r| r.abs()).fold(0.0, f64::max));
    let max_second_fundamental = fold(&|s| s.second_fundamental);
    Ok(LeafCurvatureReport {
        trusted: max_second_fundamental < TOTALLY_GEODESIC_TOLERANCE,
        samples,
        max_sectional,
        max_leaf_ricci,
        max_second_fundamental,
    })
}

pub fn leaf_curvature_report(
    s: &AlmostSStructure,
    sampler: &Sampler,
) -> Result<LeafCurvatureReport> {
    leaf_curvature_report_for(s.metric(), &VerticalSplitting::from_structure(s), sampler)
}

/// Extreme generalized eigenvalues of `Ric` against `g` at one point.
pub fn ricci_extremes_at(g: &Field, pt: &Point) -> Result<(f64, f64)> {
    let geo = Geometry::new(g, pt, 2)?;
    let ric = geo.ricci()?.matrix();
    let chol = geo
        .metric_value()
        .cholesky()
        .ok_or_else(|| GeometryError::DegenerateMetric {
            point: pt.coords().to_vec(),
            pivot: 0.0,
        })?;
    let linv = chol
        .l()
        .try_inverse()
        .expect("Cholesky factor is invertible");
    let sym = &linv * ric * linv.transpose();
    let sym = (&sym + sym.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    Ok((eig.min(), eig.max()))
}

/// Global `(min, max)` of `Ric(u,u)/|u|²` over the sample set.
pub fn ricci_range(chart: &Chart, g: &Field, sampler: &Sampler) -> Result<(f64, f64)> {
    let per_sample = sampler
        .points(chart)
        .par_iter()
        .map(|pt| ricci_extremes_at(g, pt))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_sample
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
            (lo.min(a), hi.max(b))
        }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{flat_chart, flat_torus_degenerate, round_sphere, standard_s_structure};
    use crate::chart_core::curvature;

    fn splitting(n: usize, p: usize) -> (AlmostSStructure, VerticalSplitting) {
        let s = standard_s_structure(n, p, false).unwrap();
        let sp = VerticalSplitting::from_structure(&s);
        (s, sp)
    }

    #[test]
    fn zero_warp_is_identity() {
        let (s, sp) = splitting(1, 2);
        let zero = Field::constant(FieldKind::Scalar, 4, vec![0.0]);
        let gw = vertical_warp(s.metric(), &sp, &zero).unwrap();
        for pt in Sampler::new(10, 1).points(s.chart()) {
            let d = gw.eval_matrix(&pt).unwrap() - s.metric().eval_matrix(&pt).unwrap();
            assert!(d.amax() < 1e-12);
        }
    }

    #[test]
    fn warp_keeps_splitting_orthogonal() {
        let (s, sp) = splitting(2, 2);
        let w = Field::from_fn(FieldKind::Scalar, 6, |c| {
            vec![c[0].sin() * 0.1 + &c[3] * 0.2]
        });
        let gw = vertical_warp(s.metric(), &sp, &w).unwrap();
        for pt in Sampler::new(10, 2).points(s.chart()) {
            let (ph, pv) = sp.projectors(s.metric(), &pt).unwrap();
            let cross = ph.transpose() * gw.eval_matrix(&pt).unwrap() * pv;
            assert!(cross.amax() < 1e-12);
            gw.check_metric(&pt).unwrap();
        }
    }

    #[test]
    fn non_basic_warp_rejected() {
        let (s, sp) = splitting(1, 1);
        let w = Field::from_fn(FieldKind::Scalar, 3, |c| vec![c[2].clone()]);
        match vertical_warp(s.metric(), &sp, &w) {
            Err(GeometryError::NonBasic { defect }) => assert!((defect - 1.0).abs() < 1e-12),
            other => panic!("expected NonBasic, got {other:?}"),
        }
    }

    #[test]
    fn canonical_variation_rejects_nonpositive_t() {
        let (s, sp) = splitting(1, 1);
        assert!(canonical_variation(s.metric(), &sp, 0.0).is_err());
        assert!(canonical_variation(s.metric(), &sp, -1.0).is_err());
        let same = canonical_variation(s.metric(), &sp, 1.0).unwrap();
        let pt = s.chart().point(&[0.1, 0.2, 0.3]).unwrap();
        let d = same.eval_matrix(&pt).unwrap() - s.metric().eval_matrix(&pt).unwrap();
        assert!(d.amax() < 1e-15);
    }

    #[test]
    fn basic_defect_examples() {
        let s = standard_s_structure(1, 2, false).unwrap();
        let sampler = Sampler::new(20, 3);
        let horizontal = Field::from_fn(FieldKind::Scalar, 4, |c| vec![c[0].sin() * &c[1]]);
        assert!(basic_defect(&horizontal, &s, &sampler).unwrap() < 1e-10);
        let z1 = Field::from_fn(FieldKind::Scalar, 4, |c| vec![c[2].clone()]);
        assert!(basic_defect(&z1, &s, &sampler).unwrap() > 0.5);
        let c = Field::constant(FieldKind::Scalar, 4, vec![3.0]);
        assert_eq!(basic_defect(&c, &s, &sampler).unwrap(), 0.0);
    }

    #[test]
    fn leaves_of_standard_structure_flat_and_totally_geodesic() {
        let s = standard_s_structure(1, 2, false).unwrap();
        let r = leaf_curvature_report(&s, &Sampler::new(20, 42)).unwrap();
        assert!(r.trusted);
        assert!(
            r.max_sectional < 1e-8 && r.max_leaf_ricci < 1e-8 && r.max_second_fundamental < 1e-8
        );
        let one = standard_s_structure(1, 1, false).unwrap();
        let r = leaf_curvature_report(&one, &Sampler::new(5, 42)).unwrap();
        assert!(r.samples.iter().all(|s| s.sectional.is_empty()));
        assert!(r.max_second_fundamental < 1e-8);
        let t = flat_torus_degenerate(3).unwrap();
        let r = leaf_curvature_report(&t, &Sampler::new(5, 42)).unwrap();
        assert_eq!(
            (r.max_sectional, r.max_leaf_ricci, r.max_second_fundamental),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn ricci_range_oracles() {
        let (c, g) = flat_chart(3).unwrap();
        assert_eq!(
            ricci_range(&c, &g, &Sampler::new(5, 1)).unwrap(),
            (0.0, 0.0)
        );
        for (m, k) in [(2, 1.0), (3, 2.0)] {
            let (c, g) = round_sphere(m, 1.0).unwrap();
            let (lo, hi) = ricci_range(&c, &g, &Sampler::new(20, 1)).unwrap();
            assert!((lo - k).abs() < 1e-9 && (hi - k).abs() < 1e-9, "{lo} {hi}");
        }
    }

    #[test]
    fn horizontal_warp_changes_ricci() {
        let (s, sp) = splitting(1, 1);
        let w = Field::from_fn(FieldKind::Scalar, 3, |c| vec![c[0].sin() * 0.1]);
        let gw = vertical_warp(s.metric(), &sp, &w).unwrap();
        let mut worst = 0.0f64;
        for pt in Sampler::new(20, 42).points(s.chart()) {
            let a = curvature(s.chart(), s.metric(), &pt).unwrap().ricci;
            let b = curvature(s.chart(), &gw, &pt).unwrap().ricci;
            worst = worst.max((a - b).amax());
        }
        assert!(worst > 1e-3, "{worst}");
    }
}
