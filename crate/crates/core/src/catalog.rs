//! Built-in model spaces with known curvature and structure properties.
//!
//! The standard structure lives on `ℝ^{2n+p}` with coordinates
//! `(x¹..xⁿ, y¹..yⁿ, z¹..z^p)`:
//!
//! ```text
//! η^α = dz^α − Σ_i y^i dx^i          ξ_α = ∂_{z^α}
//! g   = ½ Σ_i (dx^i² + dy^i²) + Σ_α η^α ⊗ η^α
//! φ(∂_{x^i}) = −∂_{y^i}               φ(∂_{y^i}) = ∂_{x^i} + y^i Σ_α ∂_{z^α}
//! ```
//!
//! With the exterior-derivative factor ½ this gives `dη^α(X,Y) = g(X, φY)`
//! exactly and `N_φ + 2 Σ dη^α ⊗ ξ_α = 0`.

use std::f64::consts::PI;

use crate::chart_core::{Chart, Field, FieldKind, Jet};
use crate::error::{GeometryError, Result};
use crate::structure::{build_structure, AlmostSStructure};

/// Horizontal metric weight `½` and the η-correction coefficient `1`.
const HORIZONTAL_WEIGHT: f64 = 0.5;
const STANDARD_XY_HALF_WIDTH: f64 = 1.0;
const POLE_MARGIN: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub parameters: &'static str,
    pub expected: &'static [&'static str],
}

pub fn entries() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "standard-s",
            parameters: "n >= 1, p >= 1, periodic",
            expected: &[
                "all structure axioms",
                "normal (S-manifold), h_i = 0",
                "Ric(ξ_i, ξ_j) = 2n",
                "leaves flat and totally geodesic",
            ],
        },
        CatalogEntry {
            name: "flat-torus",
            parameters: "p >= 1 (n = 0)",
            expected: &["all axioms degenerate to 0 = 0", "flat"],
        },
        CatalogEntry {
            name: "sphere",
            parameters: "m in {2, 3}, radius r > 0",
            expected: &["Ric = (m − 1) g / r²", "s = m(m − 1) / r²"],
        },
        CatalogEntry {
            name: "flat",
            parameters: "m >= 1",
            expected: &["all curvature 0"],
        },
    ]
}

fn names(n: usize, p: usize) -> Vec<String> {
    (1..=n)
        .map(|i| format!("x{i}"))
        .chain((1..=n).map(|i| format!("y{i}")))
        .chain((1..=p).map(|a| format!("z{a}")))
        .collect()
}

/// The standard normal almost S-structure on `ℝ^{2n+p}`.
///
/// `periodic` wraps every coordinate of the box; the fields are periodic in
/// `z` only, so samples stay in the interior.
pub fn standard_s_structure(n: usize, p: usize, periodic: bool) -> Result<AlmostSStructure> {
    if n == 0 || p == 0 {
        return Err(GeometryError::InvalidParameter(format!(
            "standard structure needs n >= 1 and p >= 1 (got n={n}, p={p})"
        )));
    }
    let dim = 2 * n + p;
    let bounds = (0..2 * n)
        .map(|_| (-STANDARD_XY_HALF_WIDTH, STANDARD_XY_HALF_WIDTH))
        .chain((0..p).map(|_| (0.0, 2.0 * PI)))
        .collect();
    let chart = Chart::new(bounds, vec![periodic; dim], names(n, p))?;
    let (x, y, z) = (0, n, 2 * n);

    let g = Field::from_fn(FieldKind::Metric, dim, move |c: &[Jet]| {
        let zero = c[0].zero_like();
        let mut out = vec![zero.clone(); dim * dim];
        for i in 0..n {
            for j in 0..n {
                let mut v = &c[y + i] * &c[y + j] * (p as f64);
                if i == j {
                    v = v + HORIZONTAL_WEIGHT;
                }
                out[(x + i) * dim + x + j] = v;
            }
            out[(y + i) * dim + y + i] = zero.lift(HORIZONTAL_WEIGHT);
            for a in 0..p {
                out[(x + i) * dim + z + a] = -&c[y + i];
                out[(z + a) * dim + x + i] = -&c[y + i];
            }
        }
        for a in 0..p {
            out[(z + a) * dim + z + a] = zero.lift(1.0);
        }
        out
    });

    let phi = Field::from_fn(FieldKind::Endomorphism, dim, move |c: &[Jet]| {
        let zero = c[0].zero_like();
        let mut out = vec![zero.clone(); dim * dim];
        for i in 0..n {
            // column x_i: −∂_{y_i}
            out[(y + i) * dim + x + i] = zero.lift(-1.0);
            // column y_i: ∂_{x_i} + y_i Σ ∂_z
            out[(x + i) * dim + y + i] = zero.lift(1.0);
            for a in 0..p {
                out[(z + a) * dim + y + i] = c[y + i].clone();
            }
        }
        out
    });

    let xi = (0..p)
        .map(|a| Field::coordinate_vector(dim, z + a))
        .collect();
    let eta = (0..p)
        .map(|a| {
            Field::from_fn(FieldKind::OneForm, dim, move |c: &[Jet]| {
                let zero = c[0].zero_like();
                let mut out = vec![zero.clone(); dim];
                for i in 0..n {
                    out[x + i] = -&c[y + i];
                }
                out[z + a] = zero.lift(1.0);
                out
            })
        })
        .collect();
    Ok(build_structure(chart, g, phi, xi, eta, n, p)?.with_name("standard-s"))
}

/// Flat `p`-torus with `φ = 0`, `ξ_i = ∂_{z_i}`, `η^i = dz_i`.
pub fn flat_torus_degenerate(p: usize) -> Result<AlmostSStructure> {
    if p == 0 {
        return Err(GeometryError::InvalidParameter("p must be positive".into()));
    }
    let chart = Chart::new(vec![(0.0, 2.0 * PI); p], vec![true; p], names(0, p))?;
    let phi = Field::constant(FieldKind::Endomorphism, p, vec![0.0; p * p]);
    let xi = (0..p).map(|a| Field::coordinate_vector(p, a)).collect();
    let eta = (0..p)
        .map(|a| {
            let mut v = vec![0.0; p];
            v[a] = 1.0;
            Field::constant(FieldKind::OneForm, p, v)
        })
        .collect();
    Ok(
        build_structure(chart, Field::euclidean_metric(p), phi, xi, eta, 0, p)?
            .with_name("flat-torus"),
    )
}

/// Round sphere of radius `r` in polar-type coordinates away from the poles.
///
/// `m = 2`: `r²(dθ² + sin²θ dφ²)`; `m = 3`: `r²(dχ² + sin²χ(dθ² + sin²θ dφ²))`.
pub fn round_sphere(m: usize, r: f64) -> Result<(Chart, Field)> {
    if !(r > 0.0) {
        return Err(GeometryError::InvalidParameter(format!(
            "sphere radius must be positive, got {r}"
        )));
    }
    let polar = (POLE_MARGIN, PI - POLE_MARGIN);
    let r2 = r * r;
    match m {
        2 => {
            let chart = Chart::new(
                vec![polar, (0.0, 2.0 * PI)],
                vec![false, true],
                vec!["theta".into(), "phi".into()],
            )?;
            let g = Field::from_fn(FieldKind::Metric, 2, move |c: &[Jet]| {
                let zero = c[0].zero_like();
                vec![zero.lift(r2), zero.clone(), zero, c[0].sin().square() * r2]
            });
            Ok((chart, g))
        }
        3 => {
            let chart = Chart::new(
                vec![polar, polar, (0.0, 2.0 * PI)],
                vec![false, false, true],
                vec!["chi".into(), "theta".into(), "phi".into()],
            )?;
            let g = Field::from_fn(FieldKind::Metric, 3, move |c: &[Jet]| {
                let zero = c[0].zero_like();
                let s1 = c[0].sin().square() * r2;
                let s2 = &s1 * c[1].sin().square();
                let mut out = vec![zero.clone(); 9];
                out[0] = zero.lift(r2);
                out[4] = s1;
                out[8] = s2;
                out
            });
            Ok((chart, g))
        }
        _ => Err(GeometryError::InvalidParameter(format!(
            "round sphere supports m in {{2, 3}}, got {m}"
        ))),
    }
}

/// Euclidean `ℝ^m` on the box `[−1, 1]^m`.
pub fn flat_chart(m: usize) -> Result<(Chart, Field)> {
    if m == 0 {
        return Err(GeometryError::InvalidParameter(
            "dimension must be positive".into(),
        ));
    }
    Ok((Chart::cube(m, -1.0, 1.0)?, Field::euclidean_metric(m)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart_core::{curvature, Sampler};
    use crate::structure::axiom_residuals;

    #[test]
    fn invalid_parameters_rejected() {
        assert!(standard_s_structure(0, 1, false).is_err());
        assert!(standard_s_structure(1, 0, false).is_err());
        assert!(flat_torus_degenerate(0).is_err());
        assert!(round_sphere(4, 1.0).is_err());
        assert!(round_sphere(2, 0.0).is_err());
        assert!(flat_chart(0).is_err());
    }

    #[test]
    fn standard_structures_satisfy_axioms() {
        for (n, p) in [(1, 1), (1, 2), (2, 2), (2, 1)] {
            let s = standard_s_structure(n, p, false).unwrap();
            for pt in Sampler::new(20, 5).points(s.chart()) {
                let r = axiom_residuals(&s, &pt).unwrap();
                assert!(r.max() < 1e-8, "(n={n}, p={p}) {r:?}");
            }
        }
    }

    #[test]
    fn sphere_scalar_curvature_closed_form() {
        for (m, r, s) in [(2, 1.0, 2.0), (2, 2.0, 0.5), (3, 1.0, 6.0)] {
            let (chart, g) = round_sphere(m, r).unwrap();
            for pt in Sampler::new(10, 2).points(&chart) {
                let c = curvature(&chart, &g, &pt).unwrap();
                assert!((c.scalar - s).abs() < 1e-9, "m={m} r={r}: {}", c.scalar);
            }
        }
    }

    #[test]
    fn flat_four_space_has_no_curvature() {
        let (chart, g) = flat_chart(4).unwrap();
        let pt = chart.point(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let c = curvature(&chart, &g, &pt).unwrap();
        assert!(c.riemann.iter().all(|&v| v == 0.0));
        assert_eq!(c.scalar, 0.0);
    }

    #[test]
    fn periodic_flag_wraps_all_coordinates() {
        let s = standard_s_structure(1, 1, true).unwrap();
        assert!(s.chart().periodic().iter().all(|&b| b));
        assert!(flat_torus_degenerate(2)
            .unwrap()
            .chart()
            .periodic()
            .iter()
            .all(|&b| b));
    }
}
