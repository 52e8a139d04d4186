//! Almost S-structures `(φ, ξ_i, η^i, g)` and the tensors derived from them.

use nalgebra::{DMatrix, DVector};

use crate::chart_core::calculus::{
    exterior_derivative_one_form, exterior_derivative_two_form, lie_bracket,
    lie_derivative_endomorphism,
};
use crate::chart_core::geometry::sum;
use crate::chart_core::ops::vector_divergence;
use crate::chart_core::tensor::{apply, Slot};
use crate::chart_core::{Chart, Field, FieldKind, Geometry, Point, Tensor};
use crate::error::{GeometryError, Result};
use crate::report::ResidualMap;

/// Singular values of `φ` below this count as the kernel.
pub const RANK_KERNEL_THRESHOLD: f64 = 1e-9;
/// Singular values of `φ` above this count as the image.
pub const RANK_IMAGE_THRESHOLD: f64 = 0.1;

/// Names of the axiom residuals, in report order.
pub const AXIOM_NAMES: [&str; 11] = [
    "reeb_unit_length",
    "eta_metric_dual",
    "phi_squared",
    "d_eta_equals_sasaki_form",
    "phi_kills_reeb",
    "eta_after_phi",
    "phi_rank",
    "phi_skew",
    "metric_compatibility",
    "phi_cubed_plus_phi",
    "reeb_commutators",
];

#[derive(Debug, Clone)]
pub struct AlmostSStructure {
    name: String,
    chart: Chart,
    g: Field,
    phi: Field,
    xi: Vec<Field>,
    eta: Vec<Field>,
    n: usize,
    p: usize,
}

/// Assembles a structure after checking shapes only; the axioms are checked
/// separately by [`axiom_residuals`].
pub fn build_structure(
    chart: Chart,
    g: Field,
    phi: Field,
    xi: Vec<Field>,
    eta: Vec<Field>,
    n: usize,
    p: usize,
) -> Result<AlmostSStructure> {
    let dim = chart.dim();
    if p == 0 {
        return Err(GeometryError::InvalidParameter("p must be positive".into()));
    }
    if 2 * n + p != dim {
        return Err(GeometryError::DimensionMismatch(format!(
            "2n + p = {} but the chart has dimension {dim}",
            2 * n + p
        )));
    }
    if xi.len() != p || eta.len() != p {
        return Err(GeometryError::DimensionMismatch(format!(
            "expected {p} Reeb fields and contact forms, got {} and {}",
            xi.len(),
            eta.len()
        )));
    }
    let check = |f: &Field, kind: FieldKind, what: &str| -> Result<()> {
        if f.kind() != kind || f.dim() != dim {
            return Err(GeometryError::DimensionMismatch(format!(
                "{what}: expected a {kind:?} field on dimension {dim}, got {:?} on {}",
                f.kind(),
                f.dim()
            )));
        }
        Ok(())
    };
    check(&g, FieldKind::Metric, "metric")?;
    check(&phi, FieldKind::Endomorphism, "phi")?;
    for f in &xi {
        check(f, FieldKind::Vector, "Reeb field")?;
    }
    for f in &eta {
        check(f, FieldKind::OneForm, "contact form")?;
    }
    Ok(AlmostSStructure {
        name: "custom".into(),
        chart,
        g,
        phi,
        xi,
        eta,
        n,
        p,
    })
}

impl AlmostSStructure {
    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn metric(&self) -> &Field {
        &self.g
    }

    pub fn phi(&self) -> &Field {
        &self.phi
    }

    pub fn xi(&self) -> &[Field] {
        &self.xi
    }

    pub fn eta(&self) -> &[Field] {
        &self.eta
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn descriptor(&self) -> String {
        let periodic = if self.chart.periodic().iter().any(|&b| b) {
            ", periodic"
        } else {
            ""
        };
        format!("{} (n={}, p={}{periodic})", self.name, self.n, self.p)
    }

    /// Replaces the metric, keeping every other tensor.
    pub fn with_metric(&self, g: Field) -> Result<Self> {
        build_structure(
            self.chart.clone(),
            g,
            self.phi.clone(),
            self.xi.clone(),
            self.eta.clone(),
            self.n,
            self.p,
        )
        .map(|s| s.with_name(self.name.clone()))
    }

    /// Replaces the contact forms, keeping every other tensor.
    pub fn with_eta(&self, eta: Vec<Field>) -> Result<Self> {
        build_structure(
            self.chart.clone(),
            self.g.clone(),
            self.phi.clone(),
            self.xi.clone(),
            eta,
            self.n,
            self.p,
        )
        .map(|s| s.with_name(self.name.clone()))
    }

    pub fn at(&self, pt: &Point, order: usize) -> Result<StructureAt<'_>> {
        StructureAt::new(self, pt, order)
    }
}

/// All structure tensors expanded as jets at one point.
pub struct StructureAt<'a> {
    pub structure: &'a AlmostSStructure,
    pub geo: Geometry,
    pub phi: Tensor,
    pub xi: Vec<Tensor>,
    pub eta: Vec<Tensor>,
}

impl<'a> StructureAt<'a> {
    pub fn new(s: &'a AlmostSStructure, pt: &Point, order: usize) -> Result<Self> {
        s.chart.check_point(pt)?;
        let geo = Geometry::new(&s.g, pt, order)?;
        let dim = s.dim();
        let phi = Tensor::from_field(FieldKind::Endomorphism, dim, s.phi.jet(pt, order)?)?;
        let xi =
            s.xi.iter()
                .map(|f| Tensor::from_field(FieldKind::Vector, dim, f.jet(pt, order)?))
                .collect::<Result<Vec<_>>>()?;
        let eta = s
            .eta
            .iter()
            .map(|f| Tensor::from_field(FieldKind::OneForm, dim, f.jet(pt, order)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(StructureAt {
            structure: s,
            geo,
            phi,
            xi,
            eta,
        })
    }

    pub fn dim(&self) -> usize {
        self.geo.dim()
    }

    pub fn n(&self) -> usize {
        self.structure.n
    }

    pub fn p(&self) -> usize {
        self.structure.p
    }

    pub fn g(&self) -> DMatrix<f64> {
        self.geo.metric_value()
    }

    pub fn phi_matrix(&self) -> DMatrix<f64> {
        self.phi.matrix()
    }

    pub fn xi_vectors(&self) -> Vec<DVector<f64>> {
        self.xi.iter().map(Tensor::vector).collect()
    }

    pub fn eta_covectors(&self) -> Vec<DVector<f64>> {
        self.eta.iter().map(Tensor::vector).collect()
    }

    pub fn xi_bar(&self) -> DVector<f64> {
        self.xi_vectors()
            .iter()
            .fold(DVector::zeros(self.dim()), |a, x| a + x)
    }

    pub fn eta_bar(&self) -> DVector<f64> {
        self.eta_covectors()
            .iter()
            .fold(DVector::zeros(self.dim()), |a, x| a + x)
    }

    /// Orthonormal frame whose first `p` members span `span(ξ_i)`.
    pub fn frame(&self) -> Vec<DVector<f64>> {
        self.geo.orthonormal_frame(&self.xi_vectors())
    }

    /// `h_i = ½ L_{ξ_i} φ` as a jet tensor, one order below the structure.
    pub fn h(&self, i: usize) -> Tensor {
        lie_derivative_endomorphism(&self.xi[i], &self.phi).scale(0.5)
    }

    /// Sasaki form `F_{ij} = g_{ik} φ^k_j`.
    pub fn sasaki_form(&self) -> Tensor {
        let m = self.dim();
        let g = self.geo.metric();
        Tensor::from_fn(m, vec![Slot::Down, Slot::Down], |ix| {
            sum((0..m).map(|k| g.at(&[ix[0], k]) * self.phi.at(&[k, ix[1]])))
        })
    }

    pub fn d_eta(&self, i: usize) -> Tensor {
        exterior_derivative_one_form(&self.eta[i])
    }

    /// Projector onto `span(ξ_i)`, g-orthogonal.
    pub fn vertical_projector(&self) -> DMatrix<f64> {
        vertical_projector(&self.g(), &self.xi_vectors())
    }
}

/// g-orthogonal projector onto the span of `vertical`.
pub fn vertical_projector(g: &DMatrix<f64>, vertical: &[DVector<f64>]) -> DMatrix<f64> {
    let m = g.nrows();
    if vertical.is_empty() {
        return DMatrix::zeros(m, m);
    }
    let v = DMatrix::from_columns(vertical);
    let gram = v.transpose() * g * &v;
    let gram_inv = gram
        .try_inverse()
        .unwrap_or_else(|| DMatrix::zeros(vertical.len(), vertical.len()));
    &v * gram_inv * v.transpose() * g
}

fn matrix_max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Matrix of `φ` in a g-orthonormal frame.
fn phi_in_frame(at: &StructureAt<'_>) -> DMatrix<f64> {
    let e = DMatrix::from_columns(&at.frame());
    e.transpose() * at.g() * at.phi_matrix() * e
}

/// Rank defect of `φ`: zero iff exactly `p` singular values lie below
/// [`RANK_KERNEL_THRESHOLD`] and the other `2n` above [`RANK_IMAGE_THRESHOLD`].
pub fn phi_rank_defect(at: &StructureAt<'_>) -> f64 {
    let sv = phi_in_frame(at).singular_values();
    let kernel = sv.iter().filter(|&&s| s < RANK_KERNEL_THRESHOLD).count();
    let image = sv.iter().filter(|&&s| s > RANK_IMAGE_THRESHOLD).count();
    let (n, p) = (at.n(), at.p());
    (kernel.abs_diff(p) + image.abs_diff(2 * n)) as f64
}

pub fn phi_singular_values(at: &StructureAt<'_>) -> Vec<f64> {
    let mut sv: Vec<f64> = phi_in_frame(at).singular_values().iter().copied().collect();
    sv.sort_by(f64::total_cmp);
    sv
}

/// Defining relations and their algebraic consequences at one point.
pub fn axiom_residuals(s: &AlmostSStructure, pt: &Point) -> Result<ResidualMap> {
    let at = s.at(pt, 1)?;
    Ok(axiom_residuals_at(&at))
}

pub fn axiom_residuals_at(at: &StructureAt<'_>) -> ResidualMap {
    let m = at.dim();
    let g = at.g();
    let phi = at.phi_matrix();
    let xi = at.xi_vectors();
    let eta = at.eta_covectors();
    let id = DMatrix::<f64>::identity(m, m);
    let eta_xi = xi
        .iter()
        .zip(&eta)
        .fold(DMatrix::zeros(m, m), |acc, (x, e)| acc + x * e.transpose());
    let eta_eta = eta
        .iter()
        .fold(DMatrix::zeros(m, m), |acc, e| acc + e * e.transpose());
    let sasaki = at.sasaki_form().matrix();

    let mut r = ResidualMap::new();
    r.push(
        "reeb_unit_length",
        xi.iter()
            .map(|x| ((x.transpose() * &g * x)[(0, 0)].sqrt() - 1.0).abs())
            .fold(0.0, f64::max),
    );
    r.push(
        "eta_metric_dual",
        xi.iter()
            .zip(&eta)
            .map(|(x, e)| (e - &g * x).amax())
            .fold(0.0, f64::max),
    );
    r.push(
        "phi_squared",
        matrix_max_abs(&(&phi * &phi + &id - &eta_xi)),
    );
    r.push(
        "d_eta_equals_sasaki_form",
        (0..at.p())
            .map(|i| matrix_max_abs(&(at.d_eta(i).matrix() - &sasaki)))
            .fold(0.0, f64::max),
    );
    r.push(
        "phi_kills_reeb",
        xi.iter().map(|x| (&phi * x).amax()).fold(0.0, f64::max),
    );
    r.push(
        "eta_after_phi",
        eta.iter()
            .map(|e| (e.transpose() * &phi).amax())
            .fold(0.0, f64::max),
    );
    r.push("phi_rank", phi_rank_defect(at));
    r.push(
        "phi_skew",
        matrix_max_abs(&(&g * &phi + phi.transpose() * &g)),
    );
    r.push(
        "metric_compatibility",
        matrix_max_abs(&(phi.transpose() * &g * &phi - &g + &eta_eta)),
    );
    r.push(
        "phi_cubed_plus_phi",
        matrix_max_abs(&(&phi * &phi * &phi + &phi)),
    );
    let mut comm = 0.0f64;
    for i in 0..at.p() {
        for j in (i + 1)..at.p() {
            comm = comm.max(lie_bracket(&at.xi[i], &at.xi[j]).max_abs());
        }
    }
    r.push("reeb_commutators", comm);
    debug_assert!(r.names().eq(AXIOM_NAMES.iter().copied()));
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct SasakiForm {
    /// `F_{ij} = g(∂_i, φ ∂_j)`.
    pub form: DMatrix<f64>,
    /// Largest component of `dF`.
    pub d_form_max: f64,
}

pub fn sasaki_form(s: &AlmostSStructure, pt: &Point) -> Result<SasakiForm> {
    let at = s.at(pt, 1)?;
    Ok(sasaki_form_at(&at))
}

pub fn sasaki_form_at(at: &StructureAt<'_>) -> SasakiForm {
    let f = at.sasaki_form();
    SasakiForm {
        form: f.matrix(),
        d_form_max: exterior_derivative_two_form(&f).max_abs(),
    }
}

fn vector_tensor(field: &Field, pt: &Point, order: usize) -> Result<Tensor> {
    Tensor::from_field(FieldKind::Vector, field.dim(), field.jet(pt, order)?)
}

/// `N_φ(X,Y) = φ²[X,Y] + [φX,φY] − φ[φX,Y] − φ[X,φY]` on jet vectors.
pub fn nijenhuis_at(at: &StructureAt<'_>, x: &Tensor, y: &Tensor) -> DVector<f64> {
    let phi = at.phi_matrix();
    let px = apply(&at.phi, x);
    let py = apply(&at.phi, y);
    let xy = lie_bracket(x, y).vector();
    let pxpy = lie_bracket(&px, &py).vector();
    let pxy = lie_bracket(&px, y).vector();
    let xpy = lie_bracket(x, &py).vector();
    &phi * &phi * xy + pxpy - &phi * pxy - &phi * xpy
}

/// `N_φ(X,Y) + 2 Σ dη^i(X,Y) ξ_i`.
pub fn normality_defect_at(at: &StructureAt<'_>, x: &Tensor, y: &Tensor) -> DVector<f64> {
    let mut out = nijenhuis_at(at, x, y);
    let (xv, yv) = (x.vector(), y.vector());
    for (i, xi) in at.xi_vectors().iter().enumerate() {
        let d = at.d_eta(i).matrix();
        let val = (xv.transpose() * d * &yv)[(0, 0)];
        out += xi * (2.0 * val);
    }
    out
}

pub fn nijenhuis(s: &AlmostSStructure, x: &Field, y: &Field, pt: &Point) -> Result<DVector<f64>> {
    let at = s.at(pt, 1)?;
    Ok(nijenhuis_at(
        &at,
        &vector_tensor(x, pt, 1)?,
        &vector_tensor(y, pt, 1)?,
    ))
}

pub fn normality_defect(
    s: &AlmostSStructure,
    x: &Field,
    y: &Field,
    pt: &Point,
) -> Result<DVector<f64>> {
    let at = s.at(pt, 1)?;
    Ok(normality_defect_at(
        &at,
        &vector_tensor(x, pt, 1)?,
        &vector_tensor(y, pt, 1)?,
    ))
}

/// Largest normality defect over all pairs of coordinate fields.
pub fn normality_defect_coordinates(at: &StructureAt<'_>) -> f64 {
    let m = at.dim();
    let template = at.phi.at(&[0, 0]);
    let coord = |a: usize| {
        Tensor::from_fn(m, vec![Slot::Up], |ix| {
            template.lift(if ix[0] == a { 1.0 } else { 0.0 })
        })
    };
    let mut worst = 0.0f64;
    for a in 0..m {
        for b in (a + 1)..m {
            worst = worst.max(normality_defect_at(at, &coord(a), &coord(b)).amax());
        }
    }
    worst
}

pub fn h_operator(s: &AlmostSStructure, i: usize, pt: &Point) -> Result<DMatrix<f64>> {
    if i >= s.p() {
        return Err(GeometryError::InvalidParameter(format!(
            "h index {i} out of range for p = {}",
            s.p()
        )));
    }
    Ok(s.at(pt, 1)?.h(i).matrix())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanCurvature {
    /// Mean curvature vector of `D = φ(TM)`.
    pub h: DVector<f64>,
    /// `⟨H, ξ_α⟩` computed over a frame of `D`.
    pub h_components: Vec<f64>,
    /// `Div ξ_α` over a full frame.
    pub div_xi: Vec<f64>,
}

pub fn mean_curvature_h(s: &AlmostSStructure, pt: &Point) -> Result<MeanCurvature> {
    let at = s.at(pt, 1)?;
    Ok(mean_curvature_at(&at))
}

pub fn mean_curvature_at(at: &StructureAt<'_>) -> MeanCurvature {
    let frame = at.frame();
    let horizontal = &frame[at.p()..];
    let xi = at.xi_vectors();
    let mut h = DVector::zeros(at.dim());
    let mut h_components = Vec::with_capacity(at.p());
    let mut div_xi = Vec::with_capacity(at.p());
    for (a, xi_t) in at.xi.iter().enumerate() {
        let nabla_xi = at.geo.nabla(xi_t);
        // ⟨∇_E E, ξ⟩ = −⟨E, ∇_E ξ⟩ for E ⟂ ξ
        let partial = vector_divergence(&at.geo, horizontal, &nabla_xi);
        let component = -partial;
        h += &xi[a] * component;
        h_components.push(component);
        div_xi.push(vector_divergence(&at.geo, &frame, &nabla_xi));
    }
    MeanCurvature {
        h,
        h_components,
        div_xi,
    }
}

/// Tensors derived from the structure at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureDerived {
    pub sasaki: DMatrix<f64>,
    pub h: Vec<DMatrix<f64>>,
    pub projector_d: DMatrix<f64>,
    pub projector_vertical: DMatrix<f64>,
    pub xi_bar: DVector<f64>,
    pub eta_bar: DVector<f64>,
    /// `ξ̄_i = ξ_i − ξ_1` for `i ≥ 2` (index 0 here is `ξ̄_2`).
    pub xi_bar_differences: Vec<DVector<f64>>,
    pub mean_curvature: DVector<f64>,
}

pub fn derived(s: &AlmostSStructure, pt: &Point) -> Result<StructureDerived> {
    let at = s.at(pt, 1)?;
    let pv = at.vertical_projector();
    let m = at.dim();
    let xi = at.xi_vectors();
    Ok(StructureDerived {
        sasaki: at.sasaki_form().matrix(),
        h: (0..at.p()).map(|i| at.h(i).matrix()).collect(),
        projector_d: DMatrix::identity(m, m) - &pv,
        projector_vertical: pv,
        xi_bar: at.xi_bar(),
        eta_bar: at.eta_bar(),
        xi_bar_differences: xi.iter().skip(1).map(|x| x - &xi[0]).collect(),
        mean_curvature: mean_curvature_at(&at).h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{flat_torus_degenerate, standard_s_structure};
    use crate::chart_core::Sampler;

    #[test]
    fn build_rejects_bad_shapes() {
        let s = standard_s_structure(1, 1, false).unwrap();
        let err = build_structure(
            s.chart().clone(),
            s.metric().clone(),
            s.phi().clone(),
            vec![],
            s.eta().to_vec(),
            1,
            1,
        );
        assert!(matches!(err, Err(GeometryError::DimensionMismatch(_))));
        let err = build_structure(
            s.chart().clone(),
            s.metric().clone(),
            s.phi().clone(),
            s.xi().to_vec(),
            s.eta().to_vec(),
            2,
            1,
        );
        assert!(err.is_err());
    }

    #[test]
    fn standard_structure_dimension() {
        let s = standard_s_structure(2, 2, false).unwrap();
        assert_eq!(s.dim(), 6);
    }

    #[test]
    fn torus_axioms_degenerate_exactly() {
        let s = flat_torus_degenerate(2).unwrap();
        for pt in Sampler::new(10, 1).points(s.chart()) {
            let r = axiom_residuals(&s, &pt).unwrap();
            assert!(r.max() <= 1e-12, "{r:?}");
        }
    }

    #[test]
    fn scaled_eta_breaks_phi_squared() {
        let s = standard_s_structure(1, 1, false).unwrap();
        let mut eta = s.eta().to_vec();
        eta[0] = eta[0].scaled(2.0);
        let bad = s.with_eta(eta).unwrap();
        let worst = Sampler::new(20, 3)
            .points(bad.chart())
            .iter()
            .map(|pt| {
                axiom_residuals(&bad, pt)
                    .unwrap()
                    .get("phi_squared")
                    .unwrap()
            })
            .fold(0.0, f64::max);
        assert!(worst >= 0.5, "{worst}");
    }

    #[test]
    fn sasaki_form_on_d_and_reeb() {
        let s = standard_s_structure(1, 1, false).unwrap();
        let pt = s.chart().point(&[0.2, -0.4, 1.0]).unwrap();
        let at = s.at(&pt, 1).unwrap();
        let sf = sasaki_form_at(&at);
        assert!(sf.d_form_max < 1e-9);
        let g = at.g();
        let phi = at.phi_matrix();
        // unit E in D
        let frame = at.frame();
        let e = &frame[1];
        let val = (e.transpose() * &sf.form * (&phi * e))[(0, 0)];
        assert!((val + 1.0).abs() < 1e-12, "{val}");
        let xi = &at.xi_vectors()[0];
        assert!((xi.transpose() * &sf.form).amax() < 1e-14);
        let _ = g;
    }

    #[test]
    fn nijenhuis_antisymmetric_and_torus_trivial() {
        let s = standard_s_structure(1, 2, false).unwrap();
        let pt = s.chart().point(&[0.3, 0.1, 0.5, 0.7]).unwrap();
        let x = Field::position(4);
        assert!(nijenhuis(&s, &x, &x, &pt).unwrap().amax() < 1e-14);
        let t = flat_torus_degenerate(2).unwrap();
        let pt = t.chart().point(&[1.0, 2.0]).unwrap();
        let (a, b) = (
            Field::coordinate_vector(2, 0),
            Field::coordinate_vector(2, 1),
        );
        assert_eq!(normality_defect(&t, &a, &b, &pt).unwrap().amax(), 0.0);
    }

    #[test]
    fn h_vanishes_on_catalog() {
        let s = standard_s_structure(1, 1, false).unwrap();
        let pt = s.chart().point(&[0.2, -0.4, 1.0]).unwrap();
        assert!(h_operator(&s, 0, &pt).unwrap().amax() < 1e-8);
        let t = flat_torus_degenerate(3).unwrap();
        let pt = t.chart().point(&[0.2, 0.4, 1.0]).unwrap();
        assert_eq!(h_operator(&t, 1, &pt).unwrap().amax(), 0.0);
    }

    #[test]
    fn mean_curvature_vanishes() {
        let s = standard_s_structure(2, 2, false).unwrap();
        for pt in Sampler::new(5, 9).points(s.chart()) {
            let mc = mean_curvature_h(&s, &pt).unwrap();
            assert!(mc.h.amax() < 1e-8);
            assert!(mc.div_xi.iter().all(|d| d.abs() < 1e-8));
        }
    }

    #[test]
    fn projectors_split_tangent_space() {
        let s = standard_s_structure(1, 2, false).unwrap();
        let pt = s.chart().point(&[0.3, 0.1, 0.5, 0.7]).unwrap();
        let d = derived(&s, &pt).unwrap();
        let at = s.at(&pt, 1).unwrap();
        let g = at.g();
        let id = DMatrix::<f64>::identity(4, 4);
        assert!((&d.projector_d + &d.projector_vertical - &id).amax() < 1e-14);
        assert!((&d.projector_d * &d.projector_d - &d.projector_d).amax() < 1e-12);
        assert!(
            (&d.projector_vertical * &d.projector_vertical - &d.projector_vertical).amax() < 1e-12
        );
        assert!((d.projector_d.transpose() * &g * &d.projector_vertical).amax() < 1e-9);
    }
}
