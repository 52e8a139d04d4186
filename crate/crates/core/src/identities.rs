//! Sampled certification of the tensor identities of almost S-structures.
//!
//! Each identity is evaluated as left side minus right side, with both sides
//! produced by separate code paths: curvature comes from the metric jets,
//! the right-hand sides from the structure tensors directly.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::chart_core::ops::{endomorphism_divergence, rough_laplacian_from};
use crate::chart_core::tensor::{compose, contract_first};
use crate::chart_core::{Point, Sampler};
use crate::error::Result;
use crate::report::{ResidualMap, ResidualReport};
use crate::structure::{
    axiom_residuals_at, mean_curvature_at, normality_defect_coordinates, sasaki_form_at,
    AlmostSStructure, StructureAt,
};

/// Default tolerance on the defining relations.
pub const AXIOM_TOLERANCE: f64 = 1e-8;
/// Default tolerance on derived identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-7;
/// Random constant-coefficient test fields drawn per sample.
pub const RANDOM_TEST_FIELDS: usize = 3;

pub const H_IDENTITY_NAMES: [&str; 8] = [
    "h_annihilates_reeb",
    "reeb_covariant_derivative",
    "phi_parallel_along_reeb",
    "h_anticommutes_phi",
    "h_trace",
    "phi_h_trace",
    "reeb_geodesic",
    "h_self_adjoint",
];

pub const DIVERGENCE_IDENTITY_NAMES: [&str; 6] = [
    "nabla_phi_formula",
    "div_phi",
    "ricci_reeb_rough_laplacian_pairing",
    "div_h_phi",
    "div_xi",
    "mean_curvature",
];

pub const CLOSURE_NAMES: [&str; 2] = ["sasaki_closed", "normality_defect"];

/// Residuals at one point, with a warning when the defining relations fail
/// there (the residuals are computed regardless).
#[derive(Debug, Clone, PartialEq)]
pub struct CheckedResiduals {
    pub residuals: ResidualMap,
    pub axiom_max: f64,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub axioms: f64,
    pub identities: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            axioms: AXIOM_TOLERANCE,
            identities: IDENTITY_TOLERANCE,
        }
    }
}

impl Tolerances {
    pub fn uniform(tol: f64) -> Self {
        Tolerances {
            axioms: tol,
            identities: tol,
        }
    }

    pub fn for_name(&self, name: &str) -> f64 {
        if crate::structure::AXIOM_NAMES.contains(&name) {
            self.axioms
        } else {
            self.identities
        }
    }
}

/// Coordinate fields followed by the Reeb fields.
pub fn standard_test_vectors(at: &StructureAt<'_>) -> Vec<DVector<f64>> {
    let m = at.dim();
    let mut out: Vec<DVector<f64>> = (0..m)
        .map(|a| {
            let mut e = DVector::zeros(m);
            e[a] = 1.0;
            e
        })
        .collect();
    out.extend(at.xi_vectors());
    out
}

/// Standard test vectors plus `count` random constant fields with
/// components uniform in `[−1, 1]`.
pub fn test_vectors_with_random(
    at: &StructureAt<'_>,
    rng: &mut impl Rng,
    count: usize,
) -> Vec<DVector<f64>> {
    let m = at.dim();
    let mut out = standard_test_vectors(at);
    for _ in 0..count {
        out.push(DVector::from_fn(m, |_, _| rng.gen_range(-1.0..=1.0)));
    }
    out
}

fn max_over<T>(items: impl IntoIterator<Item = T>, f: impl Fn(T) -> f64) -> f64 {
    items.into_iter().map(f).fold(
        0.0,
        |a: f64, b| {
            if b.is_nan() {
                f64::NAN
            } else {
                a.max(b)
            }
        },
    )
}

fn axiom_check(at: &StructureAt<'_>, tol: f64) -> (f64, Option<String>) {
    let axioms = axiom_residuals_at(at);
    let worst = axioms.max();
    let warning = (worst >= tol).then(|| {
        let failing: Vec<&str> = axioms.iter().filter(|&(_, v)| !(v < tol)).map(|(n, _)| n).collect();
        format!(
            "structure axioms fail at {:?} (max residual {worst:.3e}; {}); identity residuals are not certified there",
            at.geo.point().coords(),
            failing.join(", ")
        )
    });
    (worst, warning)
}

/// Residuals of the identities satisfied by `h_i = ½ L_{ξ_i} φ`.
pub fn h_identity_residuals_at(at: &StructureAt<'_>, vectors: &[DVector<f64>]) -> ResidualMap {
    let p = at.p();
    let g = at.g();
    let phi = at.phi_matrix();
    let xi = at.xi_vectors();
    let h: Vec<DMatrix<f64>> = (0..p).map(|i| at.h(i).matrix()).collect();
    let nabla_xi: Vec<_> = at.xi.iter().map(|x| at.geo.nabla(x)).collect();
    let nabla_phi = at.geo.nabla(&at.phi);

    let mut r = ResidualMap::new();
    r.push(
        "h_annihilates_reeb",
        max_over(&h, |hi| max_over(&xi, |x| (hi * x).amax())),
    );
    r.push(
        "reeb_covariant_derivative",
        max_over(0..p, |i| {
            max_over(vectors, |x| {
                let lhs = contract_first(&nabla_xi[i], x).vector();
                (lhs + &phi * x + &phi * &h[i] * x).amax()
            })
        }),
    );
    r.push(
        "phi_parallel_along_reeb",
        max_over(&xi, |x| contract_first(&nabla_phi, x).max_abs()),
    );
    r.push(
        "h_anticommutes_phi",
        max_over(&h, |hi| (hi * &phi + &phi * hi).amax()),
    );
    r.push("h_trace", max_over(&h, |hi| hi.trace().abs()));
    r.push("phi_h_trace", max_over(&h, |hi| (&phi * hi).trace().abs()));
    r.push(
        "reeb_geodesic",
        max_over(0..p, |i| {
            max_over(0..p, |j| contract_first(&nabla_xi[j], &xi[i]).max_abs())
        }),
    );
    r.push(
        "h_self_adjoint",
        max_over(&h, |hi| (&g * hi - hi.transpose() * &g).amax()),
    );
    debug_assert!(r.names().eq(H_IDENTITY_NAMES.iter().copied()));
    r
}

/// Residuals of the divergence and curvature identities. Needs order ≥ 2.
pub fn divergence_identity_residuals_at(
    at: &StructureAt<'_>,
    vectors: &[DVector<f64>],
) -> Result<ResidualMap> {
    let n = at.n() as f64;
    let p = at.p();
    let g = at.g();
    let phi = at.phi_matrix();
    let phi2 = &phi * &phi;
    let xi = at.xi_vectors();
    let xi_bar = at.xi_bar();
    let eta_bar = at.eta_bar();
    let frame = at.frame();
    let ricci = at.geo.ricci()?.matrix();
    let nabla_phi = at.geo.nabla(&at.phi);

    let mut r = ResidualMap::new();
    r.push(
        "nabla_phi_formula",
        max_over(vectors, |x| {
            let dphi = contract_first(&nabla_phi, x).matrix();
            let px = &phi * x;
            max_over(vectors, |y| {
                let py = &phi * y;
                let lhs = &dphi * y;
                let rhs =
                    &xi_bar * (px.transpose() * &g * &py)[(0, 0)] + &phi2 * x * eta_bar.dot(y);
                (lhs - rhs).amax()
            })
        }),
    );
    let div_phi = endomorphism_divergence(&at.geo, &frame, &nabla_phi);
    r.push("div_phi", (div_phi + &eta_bar * (2.0 * n)).amax());

    let rough: Vec<DVector<f64>> = at
        .xi
        .iter()
        .map(|x| rough_laplacian_from(&at.geo, &frame, x))
        .collect();
    r.push(
        "ricci_reeb_rough_laplacian_pairing",
        max_over(0..p, |i| {
            max_over(vectors, |x| {
                let ric = (xi[i].transpose() * &ricci * x)[(0, 0)];
                let pairing = (rough[i].transpose() * &g * x)[(0, 0)];
                (ric + pairing - 2.0 * n * eta_bar.dot(x)).abs()
            })
        }),
    );
    r.push(
        "div_h_phi",
        max_over(0..p, |i| {
            let h_phi = compose(&at.h(i), &at.phi);
            let div = endomorphism_divergence(&at.geo, &frame, &at.geo.nabla(&h_phi));
            max_over(vectors, |x| {
                let ric = (xi[i].transpose() * &ricci * x)[(0, 0)];
                (div.dot(x) - ric + 2.0 * n * eta_bar.dot(x)).abs()
            })
        }),
    );
    let mc = mean_curvature_at(at);
    r.push("div_xi", max_over(&mc.div_xi, |d| d.abs()));
    r.push("mean_curvature", mc.h.amax());
    debug_assert!(r.names().eq(DIVERGENCE_IDENTITY_NAMES.iter().copied()));
    Ok(r)
}

/// h-identities at `pt`, with coordinate and Reeb test fields.
pub fn h_identity_residuals(s: &AlmostSStructure, pt: &Point) -> Result<CheckedResiduals> {
    let at = s.at(pt, 2)?;
    let (axiom_max, warning) = axiom_check(&at, AXIOM_TOLERANCE);
    let residuals = h_identity_residuals_at(&at, &standard_test_vectors(&at));
    Ok(CheckedResiduals {
        residuals,
        axiom_max,
        warning,
    })
}

/// Divergence identities at `pt`, with coordinate and Reeb test fields.
pub fn divergence_identity_residuals(s: &AlmostSStructure, pt: &Point) -> Result<CheckedResiduals> {
    let at = s.at(pt, 2)?;
    let (axiom_max, warning) = axiom_check(&at, AXIOM_TOLERANCE);
    let residuals = divergence_identity_residuals_at(&at, &standard_test_vectors(&at))?;
    Ok(CheckedResiduals {
        residuals,
        axiom_max,
        warning,
    })
}

/// Every residual of the suite at one sample, in report order.
fn sample_residuals(s: &AlmostSStructure, pt: &Point, rng: &mut impl Rng) -> Result<ResidualMap> {
    let at = s.at(pt, 2)?;
    let vectors = test_vectors_with_random(&at, rng, RANDOM_TEST_FIELDS);
    let mut r = axiom_residuals_at(&at);
    r.extend(h_identity_residuals_at(&at, &vectors));
    r.extend(divergence_identity_residuals_at(&at, &vectors)?);
    r.push("sasaki_closed", sasaki_form_at(&at).d_form_max);
    r.push("normality_defect", normality_defect_coordinates(&at));
    Ok(r)
}

/// Runs the whole identity suite over the sample set.
///
/// Samples are evaluated in parallel and reduced in sample order, so the
/// report depends only on the structure, seed and sample count.
pub fn run_suite(
    s: &AlmostSStructure,
    sampler: &Sampler,
    tolerances: &Tolerances,
) -> Result<ResidualReport> {
    let points = sampler.points(s.chart());
    let maps = points
        .par_iter()
        .enumerate()
        .map(|(i, pt)| sample_residuals(s, pt, &mut sampler.sample_rng(i)))
        .collect::<Result<Vec<_>>>()?;
    let mut report = ResidualReport::aggregate(s.descriptor(), sampler.seed, &maps, |n| {
        tolerances.for_name(n)
    });
    let axiom_fail: Vec<String> = report
        .entries
        .iter()
        .filter(|e| crate::structure::AXIOM_NAMES.contains(&e.name.as_str()) && !e.pass)
        .map(|e| format!("{} ({:.3e})", e.name, e.max_abs))
        .collect();
    if !axiom_fail.is_empty() {
        report.warnings.push(format!(
            "structure axioms fail: {}; identity residuals are not certified",
            axiom_fail.join(", ")
        ));
    }
    Ok(report)
}
