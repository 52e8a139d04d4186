//! Ricci-soliton and Einstein residuals, least-squares soliton fitting over
//! parametrized families, and the mechanism checks for the non-existence
//! results on almost S-manifolds.
//!
//! The canonical ("dynamic") form is `½ L_X g + Ric + λ g = 0`. The gradient
//! form `Ric + Hess f = λ g` carries the opposite sign of `λ` relative to
//! substituting `X = ∇f` into the dynamic form; both are exposed by name.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chart_core::calculus::{differential, lie_derivative_bilinear};
use crate::chart_core::ops::{frame_trace, hessian_tensor};
use crate::chart_core::tensor::contract_first;
use crate::chart_core::{Chart, Field, FieldKind, Geometry, Jet, Point, Sampler, Tensor};
use crate::error::{GeometryError, Result};
use crate::structure::AlmostSStructure;

/// Fitted `|λ|` below this is reported as steady.
pub const STEADY_TOLERANCE: f64 = 1e-9;
pub const MAX_FIT_PARAMETERS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolitonClass {
    Shrinking,
    Steady,
    Expanding,
}

impl fmt::Display for SolitonClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolitonClass::Shrinking => "shrinking",
            SolitonClass::Steady => "steady",
            SolitonClass::Expanding => "expanding",
        })
    }
}

/// `λ > 0` shrinking, `λ = 0` steady, `λ < 0` expanding.
pub fn classify(lambda: f64) -> SolitonClass {
    classify_with_tolerance(lambda, 0.0)
}

pub fn classify_with_tolerance(lambda: f64, tol: f64) -> SolitonClass {
    if lambda > tol {
        SolitonClass::Shrinking
    } else if lambda < -tol {
        SolitonClass::Expanding
    } else {
        SolitonClass::Steady
    }
}

fn geometry(chart: &Chart, g: &Field, pt: &Point) -> Result<Geometry> {
    chart.check_point(pt)?;
    Geometry::new(g, pt, 2)
}

fn field_tensor(f: &Field, pt: &Point, order: usize) -> Result<Tensor> {
    Tensor::from_field(f.kind(), f.dim(), f.jet(pt, order)?)
}

fn half_lie_metric(geo: &Geometry, x: &Field, pt: &Point) -> Result<DMatrix<f64>> {
    if x.kind() != FieldKind::Vector {
        return Err(GeometryError::InvalidParameter(
            "soliton potential must be a vector field".into(),
        ));
    }
    Ok(lie_derivative_bilinear(&field_tensor(x, pt, 1)?, geo.metric()).matrix() * 0.5)
}

fn hessian_values(geo: &Geometry, f: &Field, pt: &Point) -> Result<DMatrix<f64>> {
    if f.kind() != FieldKind::Scalar {
        return Err(GeometryError::InvalidParameter(
            "soliton potential function must be scalar".into(),
        ));
    }
    let ft = Tensor::scalar(f.jet(pt, 2)?.remove(0), f.dim());
    Ok(hessian_tensor(geo, &ft).matrix())
}

/// Dynamic form `½ L_X g + Ric + λ g`.
pub fn soliton_residual(
    chart: &Chart,
    g: &Field,
    x: &Field,
    lambda: f64,
    pt: &Point,
) -> Result<DMatrix<f64>> {
    let geo = geometry(chart, g, pt)?;
    Ok(half_lie_metric(&geo, x, pt)? + geo.ricci()?.matrix() + geo.metric_value() * lambda)
}

/// Gradient form `Ric + Hess f − λ g`.
pub fn gradient_soliton_residual(
    chart: &Chart,
    g: &Field,
    f: &Field,
    lambda: f64,
    pt: &Point,
) -> Result<DMatrix<f64>> {
    let geo = geometry(chart, g, pt)?;
    Ok(geo.ricci()?.matrix() + hessian_values(&geo, f, pt)? - geo.metric_value() * lambda)
}

/// `Ric − λ g`.
pub fn einstein_residual(
    chart: &Chart,
    g: &Field,
    lambda: f64,
    pt: &Point,
) -> Result<DMatrix<f64>> {
    let geo = geometry(chart, g, pt)?;
    Ok(geo.ricci()?.matrix() - geo.metric_value() * lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearForm {
    /// `½ L_X g + Ric + λ g` with `X = X_0 + Σ c_k X_k`.
    Dynamic,
    /// `Ric + Hess f − λ g` with `f = f_0 + Σ c_k f_k`.
    Gradient,
}

pub type MetricBuilder = dyn Fn(&[f64]) -> Result<Field> + Send + Sync;

/// A soliton ansatz with `k` real parameters; `λ` is always appended as the
/// last fitted parameter.
#[derive(Clone)]
pub enum Family {
    Linear {
        form: LinearForm,
        chart: Chart,
        g: Field,
        fixed: Option<Field>,
        basis: Vec<Field>,
    },
    /// Metric `g(c)` with `X = 0`, dynamic form.
    Metric {
        chart: Chart,
        parameters: usize,
        build: Arc<MetricBuilder>,
    },
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Linear {
                form, basis, fixed, ..
            } => f
                .debug_struct("Linear")
                .field("form", form)
                .field("fixed", &fixed.is_some())
                .field("basis", &basis.len())
                .finish(),
            Family::Metric { parameters, .. } => f
                .debug_struct("Metric")
                .field("parameters", parameters)
                .finish(),
        }
    }
}

impl Family {
    pub fn vector(chart: Chart, g: Field, fixed: Option<Field>, basis: Vec<Field>) -> Self {
        Family::Linear {
            form: LinearForm::Dynamic,
            chart,
            g,
            fixed,
            basis,
        }
    }

    pub fn gradient(chart: Chart, g: Field, fixed: Option<Field>, basis: Vec<Field>) -> Self {
        Family::Linear {
            form: LinearForm::Gradient,
            chart,
            g,
            fixed,
            basis,
        }
    }

    pub fn metric(
        chart: Chart,
        parameters: usize,
        build: impl Fn(&[f64]) -> Result<Field> + Send + Sync + 'static,
    ) -> Self {
        Family::Metric {
            chart,
            parameters,
            build: Arc::new(build),
        }
    }

    /// Number of family coefficients, excluding `λ`.
    pub fn parameters(&self) -> usize {
        match self {
            Family::Linear { basis, .. } => basis.len(),
            Family::Metric { parameters, .. } => *parameters,
        }
    }

    pub fn chart(&self) -> &Chart {
        match self {
            Family::Linear { chart, .. } | Family::Metric { chart, .. } => chart,
        }
    }

    fn prepare(&self, sampler: &Sampler) -> Result<Prepared<'_>> {
        let points = sampler.points(self.chart());
        match self {
            Family::Linear {
                form,
                chart,
                g,
                fixed,
                basis,
            } => {
                let term = |geo: &Geometry, f: &Field, pt: &Point| match form {
                    LinearForm::Dynamic => half_lie_metric(geo, f, pt),
                    LinearForm::Gradient => hessian_values(geo, f, pt),
                };
                let per_sample = points
                    .par_iter()
                    .map(|pt| -> Result<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>)> {
                        let geo = geometry(chart, g, pt)?;
                        let mut base = geo.ricci()?.matrix();
                        if let Some(f0) = fixed {
                            base += term(&geo, f0, pt)?;
                        }
                        let sign = match form {
                            LinearForm::Dynamic => 1.0,
                            LinearForm::Gradient => -1.0,
                        };
                        let lam = geo.metric_value() * sign;
                        let cols = basis
                            .iter()
                            .map(|f| Ok(term(&geo, f, pt)?.as_slice().to_vec()))
                            .collect::<Result<Vec<_>>>()?;
                        Ok((base.as_slice().to_vec(), lam.as_slice().to_vec(), cols))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let mut base = Vec::new();
                let mut lambda = Vec::new();
                let mut cols = vec![Vec::new(); basis.len()];
                for (b, l, c) in per_sample {
                    base.extend(b);
                    lambda.extend(l);
                    for (dst, src) in cols.iter_mut().zip(c) {
                        dst.extend(src);
                    }
                }
                Ok(Prepared::Linear { base, lambda, cols })
            }
            Family::Metric { chart, build, .. } => Ok(Prepared::Metric {
                chart,
                build,
                points,
            }),
        }
    }
}

/// Sample-set evaluation of a family's residual vector.
enum Prepared<'a> {
    Linear {
        base: Vec<f64>,
        lambda: Vec<f64>,
        cols: Vec<Vec<f64>>,
    },
    Metric {
        chart: &'a Chart,
        build: &'a Arc<MetricBuilder>,
        points: Vec<Point>,
    },
}

impl Prepared<'_> {
    /// Residual components over all samples for `theta = (c, λ)`.
    fn residuals(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let (c, lam) = theta.split_at(theta.len() - 1);
        let lam = lam[0];
        match self {
            Prepared::Linear { base, lambda, cols } => Ok((0..base.len())
                .map(|i| {
                    base[i]
                        + lam * lambda[i]
                        + cols.iter().zip(c).map(|(col, ck)| ck * col[i]).sum::<f64>()
                })
                .collect()),
            Prepared::Metric {
                chart,
                build,
                points,
            } => {
                let g = build(c)?;
                let blocks = points
                    .par_iter()
                    .map(|pt| {
                        let geo = geometry(chart, &g, pt)?;
                        let r = geo.ricci()?.matrix() + geo.metric_value() * lam;
                        Ok(r.as_slice().to_vec())
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(blocks.concat())
            }
        }
    }
}

fn mean_square(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>() / r.len().max(1) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    pub starts: usize,
    /// Initial `(c, λ)` for the first start.
    pub initial: Vec<f64>,
    /// Further starts perturb `initial` uniformly within this radius.
    pub start_radius: f64,
    pub seed: u64,
    pub initial_damping: f64,
    /// Stop once the mean-square residual falls below this.
    pub objective_tolerance: f64,
    /// Stop once an accepted step changes `θ` by less than this (relative).
    pub step_tolerance: f64,
}

impl OptimizerConfig {
    pub fn new(initial: Vec<f64>) -> Self {
        OptimizerConfig {
            max_iterations: 500,
            starts: 5,
            initial,
            start_radius: 1.0,
            seed: 42,
            initial_damping: 1e-3,
            objective_tolerance: 1e-28,
            step_tolerance: 1e-13,
        }
    }

    /// Starting points: `initial`, then seeded perturbations of it.
    pub fn start_points(&self) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = vec![self.initial.clone()];
        for _ in 1..self.starts {
            out.push(
                self.initial
                    .iter()
                    .map(|v| v + rng.gen_range(-self.start_radius..=self.start_radius))
                    .collect(),
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub theta: Vec<f64>,
    pub objective: f64,
    pub damping: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolitonFitResult {
    pub coefficients: Vec<f64>,
    pub lambda: f64,
    /// Root-mean-square of the residual components over the sample set.
    pub residual_norm: f64,
    pub classification: SolitonClass,
    pub converged: bool,
    /// Index into [`OptimizerConfig::start_points`] of the reported run.
    pub start: usize,
    /// Terminal residual norm of every start.
    pub start_norms: Vec<f64>,
    pub log: Vec<IterationRecord>,
}

struct Run {
    theta: Vec<f64>,
    objective: f64,
    converged: bool,
    log: Vec<IterationRecord>,
}

fn levenberg_marquardt(prep: &Prepared<'_>, start: Vec<f64>, cfg: &OptimizerConfig) -> Result<Run> {
    let k = start.len();
    let finite = |r: &[f64], theta: &[f64], iteration: usize| {
        if r.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(GeometryError::NonFinite {
                params: theta.to_vec(),
                iteration,
            })
        }
    };
    let mut theta = start;
    let mut r = prep.residuals(&theta)?;
    finite(&r, &theta, 0)?;
    let mut objective = mean_square(&r);
    let mut mu = cfg.initial_damping;
    let mut log = vec![IterationRecord {
        iteration: 0,
        theta: theta.clone(),
        objective,
        damping: mu,
        accepted: true,
    }];
    let n = r.len();
    let mut converged = objective < cfg.objective_tolerance;
    let mut iteration = 0;
    while !converged && iteration < cfg.max_iterations {
        iteration += 1;
        let mut jac = DMatrix::zeros(n, k);
        for j in 0..k {
            let h = 1e-7 * theta[j].abs().max(1.0);
            let mut shifted = theta.clone();
            shifted[j] += h;
            let rj = prep.residuals(&shifted)?;
            finite(&rj, &shifted, iteration)?;
            for i in 0..n {
                jac[(i, j)] = (rj[i] - r[i]) / h;
            }
        }
        let rv = DVector::from_column_slice(&r);
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &rv;
        let scale = jtj.diagonal().amax().max(1e-300);
        let system = &jtj + DMatrix::identity(k, k) * (mu * scale);
        let step = match system.clone().cholesky() {
            Some(ch) => -ch.solve(&jtr),
            None => {
                mu *= 2.0;
                log.push(IterationRecord {
                    iteration,
                    theta: theta.clone(),
                    objective,
                    damping: mu,
                    accepted: false,
                });
                continue;
            }
        };
        let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let rt = prep.residuals(&trial)?;
        finite(&rt, &trial, iteration)?;
        let trial_objective = mean_square(&rt);
        let accepted = trial_objective < objective;
        if accepted {
            let rel = step.amax() / theta.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let gain = objective - trial_objective;
            theta = trial;
            r = rt;
            objective = trial_objective;
            mu /= 3.0;
            converged = objective < cfg.objective_tolerance
                || rel < cfg.step_tolerance
                || gain <= 1e-15 * objective;
        } else {
            mu *= 2.0;
            // damping this large means no descent direction is left
            converged = mu * scale > 1e30 * (1.0 + jtr.amax());
        }
        log.push(IterationRecord {
            iteration,
            theta: theta.clone(),
            objective,
            damping: mu,
            accepted,
        });
    }
    Ok(Run {
        theta,
        objective,
        converged,
        log,
    })
}

/// Damped least-squares fit of `(c, λ)` minimizing the mean-square residual
/// over the sample set, from every start in the configuration.
pub fn fit_soliton(
    family: &Family,
    sampler: &Sampler,
    cfg: &OptimizerConfig,
) -> Result<SolitonFitResult> {
    let k = family.parameters() + 1;
    if k > MAX_FIT_PARAMETERS {
        return Err(GeometryError::InvalidParameter(format!(
            "{k} fit parameters exceed the limit of {MAX_FIT_PARAMETERS}"
        )));
    }
    if cfg.initial.len() != k {
        return Err(GeometryError::DimensionMismatch(format!(
            "initial guess has {} entries, family needs {k} (coefficients then λ)",
            cfg.initial.len()
        )));
    }
    if cfg.starts == 0 {
        return Err(GeometryError::InvalidParameter(
            "at least one start is needed".into(),
        ));
    }
    let prep = family.prepare(sampler)?;
    let runs = cfg
        .start_points()
        .into_iter()
        .map(|s| levenberg_marquardt(&prep, s, cfg))
        .collect::<Result<Vec<_>>>()?;
    let start_norms: Vec<f64> = runs.iter().map(|r| r.objective.sqrt()).collect();
    let (best, run) = runs
        .into_iter()
        .enumerate()
        .min_by(|a, b| a.1.objective.total_cmp(&b.1.objective))
        .expect("at least one start");
    let lambda = *run.theta.last().expect("λ is always fitted");
    Ok(SolitonFitResult {
        coefficients: run.theta[..k - 1].to_vec(),
        lambda,
        residual_norm: run.objective.sqrt(),
        classification: classify_with_tolerance(lambda, STEADY_TOLERANCE),
        converged: run.converged,
        start: best,
        start_norms,
        log: run.log,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    /// Best `(c, λ)` on the grid.
    pub theta: Vec<f64>,
    pub residual_norm: f64,
    pub cells: usize,
}

/// Exhaustive evaluation on a tensor grid with `points` nodes per axis over
/// `ranges` (one range per coefficient, then one for `λ`).
pub fn grid_search(
    family: &Family,
    sampler: &Sampler,
    ranges: &[(f64, f64)],
    points: usize,
) -> Result<GridSearchResult> {
    let k = family.parameters() + 1;
    if ranges.len() != k || points < 2 {
        return Err(GeometryError::InvalidParameter(format!(
            "grid search needs {k} ranges and at least 2 points per axis"
        )));
    }
    let prep = family.prepare(sampler)?;
    let cells = points.pow(k as u32);
    let node = |cell: usize| -> Vec<f64> {
        let mut rest = cell;
        ranges
            .iter()
            .map(|&(lo, hi)| {
                let i = rest % points;
                rest /= points;
                lo + (hi - lo) * i as f64 / (points - 1) as f64
            })
            .collect()
    };
    let values = (0..cells)
        .into_par_iter()
        .map(|cell| Ok((cell, mean_square(&prep.residuals(&node(cell))?))))
        .collect::<Result<Vec<_>>>()?;
    let (cell, best) = values
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .expect("non-empty grid");
    Ok(GridSearchResult {
        theta: node(cell),
        residual_norm: best.sqrt(),
        cells,
    })
}

pub const CHAIN_NAMES: [&str; 7] = [
    "soliton_defect",
    "trace_consistency",
    "differentiated_contraction",
    "reeb_substitution",
    "laplacian_potential",
    "summed_laplacian_printed",
    "summed_laplacian_gradient_variant",
];

/// Name of the chain entry that must vanish for every `(u, λ)`.
pub const UNCONDITIONAL_CHAIN_ENTRY: &str = "trace_consistency";

#[derive(Debug, Clone, PartialEq)]
pub struct ChainEntry {
    pub name: &'static str,
    pub max_abs: f64,
    pub mean_abs: f64,
}

/// Left-minus-right residuals along the argument that a soliton with
/// potential `X = u^i ξ_i` is Einstein. Only `trace_consistency` holds
/// unconditionally; the later entries are consequences of a vanishing
/// `soliton_defect` and are reported next to it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport {
    pub entries: Vec<ChainEntry>,
    pub lambda: f64,
    pub samples: usize,
    /// Largest `‖h_V‖² = u^i u^j tr(h_i h_j)` over the samples.
    pub h_v_squared: f64,
}

impl ChainReport {
    pub fn entry(&self, name: &str) -> Option<&ChainEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

fn grad_dot(j: &Jet, v: &DVector<f64>) -> f64 {
    j.gradient().iter().zip(v.iter()).map(|(a, b)| a * b).sum()
}

fn chain_sample(
    s: &AlmostSStructure,
    u: &[Field],
    lambda: f64,
    pt: &Point,
) -> Result<([f64; 7], f64)> {
    let at = s.at(pt, 3)?;
    let (m, n, p) = (at.dim(), at.n() as f64, at.p());
    let geo = &at.geo;
    let g = at.g();
    let ginv = geo.inverse_metric().matrix();
    let phi = at.phi_matrix();
    let xi = at.xi_vectors();
    let eta = at.eta_covectors();
    let frame = at.frame();
    let ricci = geo.ricci()?;
    let ric = ricci.matrix();
    let scalar = geo.scalar_curvature()?.clone();
    let h: Vec<DMatrix<f64>> = (0..p).map(|i| at.h(i).matrix()).collect();
    let norm = |v: &DVector<f64>| (v.transpose() * &g * v)[(0, 0)].sqrt();

    let uj: Vec<Jet> = u
        .iter()
        .map(|f| Ok(f.jet(pt, 3)?.remove(0)))
        .collect::<Result<_>>()?;
    let ut: Vec<Tensor> = uj.iter().map(|j| Tensor::scalar(j.clone(), m)).collect();
    let du: Vec<DVector<f64>> = ut.iter().map(|t| differential(t).vector()).collect();
    let grad: Vec<DVector<f64>> = du.iter().map(|d| &ginv * d).collect();
    let laplacian = |t: &Tensor| -frame_trace(&frame, &hessian_tensor(geo, t).matrix());
    let lap_u: Vec<f64> = ut.iter().map(laplacian).collect();
    let uval: Vec<f64> = uj.iter().map(Jet::value).collect();
    let tr_hh = |i: usize, j: usize| (&h[i] * &h[j]).trace();

    // soliton defect T(Y) as an endomorphism
    let mut t = (&ginv * &ric) * 2.0 + DMatrix::identity(m, m) * (2.0 * lambda);
    for i in 0..p {
        t += &xi[i] * du[i].transpose() + &grad[i] * (&g * &xi[i]).transpose();
        t += &h[i] * &phi * (2.0 * uval[i]);
    }
    let defect = frame.iter().map(|e| norm(&(&t * e))).fold(0.0, f64::max);

    let trace_t: f64 = frame
        .iter()
        .map(|e| (e.transpose() * &g * (&t * e))[(0, 0)])
        .sum();
    let xi_u: f64 = (0..p).map(|i| du[i].dot(&xi[i])).sum();
    let trace = (trace_t - 2.0 * (xi_u + scalar.value() + (2.0 * n + p as f64) * lambda)).abs();

    let nabla_xi: Vec<Tensor> = at.xi.iter().map(|x| geo.nabla(x)).collect();
    let second: Vec<DMatrix<f64>> = uj
        .iter()
        .map(|j| DMatrix::from_fn(m, m, |a, b| j.derivative(&[a, b])))
        .collect();
    let mut contraction = 0.0f64;
    for y in &frame {
        let mut v = 0.0;
        for i in 0..p {
            v += (xi[i].transpose() * &second[i] * y)[(0, 0)];
            let d = contract_first(&nabla_xi[i], &grad[i]).vector();
            v += (d.transpose() * &g * y)[(0, 0)];
            v -= eta[i].dot(y) * lap_u[i];
            v += 2.0 * du[i].dot(&(&h[i] * &phi * y));
            let ric_y_xi = (y.transpose() * &ric * &xi[i])[(0, 0)];
            v += 2.0 * uval[i] * (ric_y_xi - 2.0 * n * eta[i].dot(y));
        }
        contraction = contraction.max(v.abs());
    }

    let mut substitution = 0.0f64;
    let mut potential = 0.0f64;
    for j in 0..p {
        let mut v = 0.0;
        for i in 0..p {
            // ξ_j(u^i) as a jet, then differentiated along ξ_i
            let inner = (0..m)
                .map(|b| at.xi[j].at(&[b]) * uj[i].partial(b))
                .reduce(|a, c| a + c)
                .expect("dim > 0");
            v += grad_dot(&inner, &xi[i]);
        }
        let coupling: f64 = (0..p).map(|i| uval[i] * tr_hh(i, j)).sum();
        v += -lap_u[j] - 2.0 * coupling + grad_dot(&scalar, &xi[j]);
        substitution = substitution.max(v.abs());
        potential = potential.max((lap_u[j] + 2.0 * coupling).abs());
    }

    let sum_sq = uj
        .iter()
        .map(Jet::square)
        .reduce(|a, b| a + b)
        .unwrap_or_else(|| uj[0].zero_like());
    let lap_sum_sq = laplacian(&Tensor::scalar(sum_sq, m));
    let h_v: f64 = (0..p)
        .flat_map(|i| (0..p).map(move |j| (i, j)))
        .map(|(i, j)| uval[i] * uval[j] * tr_hh(i, j))
        .sum();
    let nabla_h_sq: f64 = (0..p)
        .map(|j| {
            let nh = geo.nabla(&at.h(j));
            frame
                .iter()
                .map(|ea| {
                    let d = contract_first(&nh, ea).matrix();
                    frame.iter().map(|eb| norm(&(&d * eb)).powi(2)).sum::<f64>()
                })
                .sum::<f64>()
        })
        .sum();
    let grad_sq: f64 = grad.iter().map(|v| norm(v).powi(2)).sum();
    let printed = (lap_sum_sq + 2.0 * nabla_h_sq + 4.0 * h_v).abs();
    let variant = (lap_sum_sq + 2.0 * grad_sq + 4.0 * h_v).abs();

    Ok((
        [
            defect,
            trace,
            contraction,
            substitution,
            potential,
            printed,
            variant,
        ],
        h_v.abs(),
    ))
}

/// Evaluates the chain for the potential `X = u^i ξ_i` and constant `λ`.
pub fn reeb_potential_chain(
    s: &AlmostSStructure,
    u: &[Field],
    lambda: f64,
    sampler: &Sampler,
) -> Result<ChainReport> {
    if u.len() != s.p() {
        return Err(GeometryError::DimensionMismatch(format!(
            "{} potential functions for p = {}",
            u.len(),
            s.p()
        )));
    }
    if u.iter()
        .any(|f| f.kind() != FieldKind::Scalar || f.dim() != s.dim())
    {
        return Err(GeometryError::DimensionMismatch(
            "potential functions must be scalar fields on the chart".into(),
        ));
    }
    let per_sample = sampler
        .points(s.chart())
        .par_iter()
        .map(|pt| chain_sample(s, u, lambda, pt))
        .collect::<Result<Vec<_>>>()?;
    let count = per_sample.len();
    let entries = CHAIN_NAMES
        .iter()
        .enumerate()
        .map(|(k, &name)| ChainEntry {
            name,
            max_abs: per_sample.iter().map(|(v, _)| v[k]).fold(0.0, f64::max),
            mean_abs: per_sample.iter().map(|(v, _)| v[k]).sum::<f64>() / count.max(1) as f64,
        })
        .collect();
    Ok(ChainReport {
        entries,
        lambda,
        samples: count,
        h_v_squared: per_sample.iter().map(|(_, h)| *h).fold(0.0, f64::max),
    })
}

/// Numeric inputs of the argument that no compact almost S-manifold is
/// Einstein.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub samples: usize,
    /// `n = 0`: `dη̄ = 0` and `F = 0`, so the argument has nothing to contradict.
    pub degenerate: bool,
    /// `max ‖∇_X ξ̄_i‖` over coordinate `X`, `i ≥ 2`.
    pub max_nabla_xi_bar: f64,
    /// `max |Ric(ξ̄_i, ξ̄_i)|`.
    pub max_ricci_xi_bar: f64,
    /// `min |ξ̄_i|²`.
    pub min_xi_bar_norm_sq: f64,
    /// Largest `|λ|` allowed by `λ |ξ̄_i|² = Ric(ξ̄_i, ξ̄_i)`.
    pub forced_lambda_bound: f64,
    /// Minimum over samples of the Frobenius norm of `dη̄`.
    pub min_d_eta_bar: f64,
    pub max_d_eta_bar_minus_pf: f64,
    /// `max |Ric(ξ_i, ξ_j) − 2n|`.
    pub max_reeb_ricci_defect: f64,
}

struct WitnessSample {
    nabla: f64,
    ricci: f64,
    norm_sq: f64,
    d_eta: f64,
    d_eta_defect: f64,
    reeb_ricci: f64,
}

pub fn einstein_witness(s: &AlmostSStructure, sampler: &Sampler) -> Result<WitnessReport> {
    let p = s.p();
    if p < 2 {
        return Err(GeometryError::NotApplicable(format!(
            "needs at least two Reeb fields, structure has p = {p}"
        )));
    }
    let n = s.n() as f64;
    let per_sample = sampler
        .points(s.chart())
        .par_iter()
        .map(|pt| -> Result<WitnessSample> {
            let at = s.at(pt, 2)?;
            let m = at.dim();
            let g = at.g();
            let ric = at.geo.ricci()?.matrix();
            let xi = at.xi_vectors();
            let sasaki = at.sasaki_form().matrix();
            let d_eta_bar = (0..p)
                .map(|i| at.d_eta(i).matrix())
                .fold(DMatrix::zeros(m, m), |a, d| a + d);
            let mut out = WitnessSample {
                nabla: 0.0,
                ricci: 0.0,
                norm_sq: f64::INFINITY,
                d_eta: d_eta_bar.norm(),
                d_eta_defect: (&d_eta_bar - &sasaki * p as f64).amax(),
                reeb_ricci: 0.0,
            };
            for i in 0..p {
                for j in 0..p {
                    let r = (xi[i].transpose() * &ric * &xi[j])[(0, 0)];
                    out.reeb_ricci = out.reeb_ricci.max((r - 2.0 * n).abs());
                }
            }
            for i in 1..p {
                let bar_t = at.xi[i].sub(&at.xi[0]);
                let bar = bar_t.vector();
                let nabla = at.geo.nabla(&bar_t);
                for a in 0..m {
                    let d = nabla.matrix().row(a).transpose();
                    out.nabla = out.nabla.max((d.transpose() * &g * &d)[(0, 0)].sqrt());
                }
                out.ricci = out.ricci.max((bar.transpose() * &ric * &bar)[(0, 0)].abs());
                out.norm_sq = out.norm_sq.min((bar.transpose() * &g * &bar)[(0, 0)]);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let max = |f: &dyn Fn(&WitnessSample) -> f64| per_sample.iter().map(f).fold(0.0, f64::max);
    let min =
        |f: &dyn Fn(&WitnessSample) -> f64| per_sample.iter().map(f).fold(f64::INFINITY, f64::min);
    let max_ricci_xi_bar = max(&|w| w.ricci);
    let min_xi_bar_norm_sq = min(&|w| w.norm_sq);
    Ok(WitnessReport {
        samples: per_sample.len(),
        degenerate: s.n() == 0,
        max_nabla_xi_bar: max(&|w| w.nabla),
        max_ricci_xi_bar,
        min_xi_bar_norm_sq,
        forced_lambda_bound: max_ricci_xi_bar / min_xi_bar_norm_sq,
        min_d_eta_bar: min(&|w| w.d_eta),
        max_d_eta_bar_minus_pf: max(&|w| w.d_eta_defect),
        max_reeb_ricci_defect: max(&|w| w.reeb_ricci),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{flat_chart, flat_torus_degenerate, round_sphere, standard_s_structure};

    #[test]
    fn classification_follows_sign() {
        assert_eq!(classify(0.0), SolitonClass::Steady);
        assert_eq!(classify(0.3), SolitonClass::Shrinking);
        assert_eq!(classify(-2.0), SolitonClass::Expanding);
        assert_eq!(
            classify_with_tolerance(1e-12, STEADY_TOLERANCE),
            SolitonClass::Steady
        );
    }

    #[test]
    fn flat_radial_field_is_a_soliton() {
        let (c, g) = flat_chart(3).unwrap();
        let x = Field::position(3).scaled(0.5);
        let pt = c.point(&[0.2, -0.4, 0.7]).unwrap();
        assert!(soliton_residual(&c, &g, &x, -0.5, &pt).unwrap().amax() < 1e-14);
        let zero = Field::constant(FieldKind::Vector, 3, vec![0.0; 3]);
        assert_eq!(
            soliton_residual(&c, &g, &zero, 0.0, &pt).unwrap().amax(),
            0.0
        );
    }

    #[test]
    fn residual_is_affine_in_lambda() {
        let s = standard_s_structure(1, 1, false).unwrap();
        let pt = s.chart().point(&[0.3, 0.1, 2.0]).unwrap();
        let x = Field::position(3);
        let a = soliton_residual(s.chart(), s.metric(), &x, 0.7, &pt).unwrap();
        let b = soliton_residual(s.chart(), s.metric(), &x, -0.2, &pt).unwrap();
        let g = s.metric().eval_matrix(&pt).unwrap();
        assert!((a - b - g * 0.9).amax() < 1e-14);
    }

    #[test]
    fn sphere_is_einstein_in_both_forms() {
        let (c, g) = round_sphere(2, 1.0).unwrap();
        let zero = Field::constant(FieldKind::Vector, 2, vec![0.0; 2]);
        let one = Field::constant(FieldKind::Scalar, 2, vec![1.0]);
        for pt in Sampler::new(10, 3).points(&c) {
            assert!(soliton_residual(&c, &g, &zero, -1.0, &pt).unwrap().amax() < 1e-9);
            assert!(
                gradient_soliton_residual(&c, &g, &one, 1.0, &pt)
                    .unwrap()
                    .amax()
                    < 1e-9
            );
            assert!(einstein_residual(&c, &g, 1.0, &pt).unwrap().amax() < 1e-9);
        }
    }

    #[test]
    fn gaussian_profile() {
        let (c, g) = flat_chart(3).unwrap();
        let f = Field::from_fn(FieldKind::Scalar, 3, |x| {
            vec![(x[0].square() + x[1].square() + x[2].square()) * 0.25]
        });
        let pt = c.point(&[0.5, -0.1, 0.3]).unwrap();
        assert!(
            gradient_soliton_residual(&c, &g, &f, 0.5, &pt)
                .unwrap()
                .amax()
                < 1e-14
        );
    }

    #[test]
    fn fit_flat_radial_family() {
        let (c, g) = flat_chart(3).unwrap();
        let fam = Family::vector(c, g, None, vec![Field::position(3)]);
        let fit = fit_soliton(
            &fam,
            &Sampler::new(20, 42),
            &OptimizerConfig::new(vec![0.0, 0.3]),
        )
        .unwrap();
        assert!(fit.residual_norm < 1e-10, "{fit:?}");
        assert!((fit.lambda + fit.coefficients[0]).abs() < 1e-6);
        let accepted: Vec<f64> = fit
            .log
            .iter()
            .filter(|r| r.accepted)
            .map(|r| r.objective)
            .collect();
        assert!(accepted.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn fit_sphere_lambda() {
        let (c, g) = round_sphere(2, 1.0).unwrap();
        let fam = Family::vector(c, g, None, vec![]);
        let fit = fit_soliton(
            &fam,
            &Sampler::new(20, 42),
            &OptimizerConfig::new(vec![0.0]),
        )
        .unwrap();
        assert!((fit.lambda + 1.0).abs() < 1e-6, "{}", fit.lambda);
        assert_eq!(fit.classification, SolitonClass::Expanding);
    }

    #[test]
    fn metric_family_finds_radius() {
        // r² (dθ² + sin²θ dφ²) is Einstein with λ = −1/r² in the dynamic form
        let (c, _) = round_sphere(2, 1.0).unwrap();
        let fam = Family::metric(c, 0, |_| Ok(round_sphere(2, 2.0)?.1));
        let fit = fit_soliton(
            &fam,
            &Sampler::new(10, 42),
            &OptimizerConfig::new(vec![0.0]),
        )
        .unwrap();
        assert!((fit.lambda + 0.25).abs() < 1e-6, "{}", fit.lambda);
    }

    #[test]
    fn grid_search_on_flat_family() {
        let (c, g) = flat_chart(2).unwrap();
        let fam = Family::vector(c, g, None, vec![Field::position(2)]);
        let r = grid_search(&fam, &Sampler::new(5, 1), &[(-1.0, 1.0), (-1.0, 1.0)], 5).unwrap();
        assert_eq!(r.cells, 25);
        assert!(r.residual_norm < 1e-12);
        assert!((r.theta[0] + r.theta[1]).abs() < 1e-12);
    }

    #[test]
    fn chain_trace_consistency_and_trivial_entries() {
        let s = standard_s_structure(1, 1, false).unwrap();
        let sampler = Sampler::new(5, 42);
        let zero = Field::constant(FieldKind::Scalar, 3, vec![0.0]);
        let r = reeb_potential_chain(&s, &[zero], 0.0, &sampler).unwrap();
        assert!(r.entry("trace_consistency").unwrap().max_abs < 1e-9);
        assert_eq!(r.entry("laplacian_potential").unwrap().max_abs, 0.0);
        let u = Field::from_fn(FieldKind::Scalar, 3, |x| {
            vec![x[0].sin() * &x[1] + x[2].cos()]
        });
        let r = reeb_potential_chain(&s, &[u], 0.37, &sampler).unwrap();
        assert!(r.entry("trace_consistency").unwrap().max_abs < 1e-7);
        assert!(r.entry("soliton_defect").unwrap().max_abs > 0.1);
    }

    #[test]
    fn witness_on_standard_and_degenerate_structures() {
        let s = standard_s_structure(2, 2, false).unwrap();
        let w = einstein_witness(&s, &Sampler::new(10, 42)).unwrap();
        assert!(w.max_nabla_xi_bar < 1e-8);
        assert!(w.max_ricci_xi_bar < 1e-7);
        assert!(w.max_d_eta_bar_minus_pf < 1e-8 && w.min_d_eta_bar > 0.1);
        assert!(w.max_reeb_ricci_defect < 1e-6);
        assert!(!w.degenerate);
        let one = standard_s_structure(1, 1, false).unwrap();
        assert!(matches!(
            einstein_witness(&one, &Sampler::new(2, 1)),
            Err(GeometryError::NotApplicable(_))
        ));
        let t = einstein_witness(&flat_torus_degenerate(2).unwrap(), &Sampler::new(3, 1)).unwrap();
        assert!(t.degenerate);
        assert_eq!(t.min_d_eta_bar, 0.0);
    }

    mod properties {
        use super::*;
        use crate::chart_core::Tensor;
        use proptest::prelude::*;

        fn point(s: &AlmostSStructure, u: &[f64]) -> Point {
            let coords: Vec<f64> = s
                .chart()
                .bounds()
                .iter()
                .zip(u)
                .map(|(&(lo, hi), t)| lo + (hi - lo) * (0.05 + 0.9 * t))
                .collect();
            s.chart().point(&coords).unwrap()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn residual_affine_in_lambda(
                a in -2.0..2.0f64, b in -2.0..2.0f64, u in prop::collection::vec(0.0..1.0f64, 3)
            ) {
                let s = standard_s_structure(1, 1, false).unwrap();
                let pt = point(&s, &u);
                let x = Field::position(3).scaled(0.3);
                let ra = soliton_residual(s.chart(), s.metric(), &x, a, &pt).unwrap();
                let rb = soliton_residual(s.chart(), s.metric(), &x, b, &pt).unwrap();
                let g = s.metric().eval_matrix(&pt).unwrap();
                prop_assert!((ra - rb - g * (a - b)).amax() < 1e-12);
            }

            #[test]
            fn hessian_is_half_lie_derivative_of_gradient(
                c in prop::collection::vec(-1.0..1.0f64, 4), u in prop::collection::vec(0.0..1.0f64, 3)
            ) {
                let s = standard_s_structure(1, 1, false).unwrap();
                let pt = point(&s, &u);
                let geo = Geometry::new(s.metric(), &pt, 3).unwrap();
                let seed = Jet::seed(pt.coords(), 3);
                let f = (seed[0].sin() * c[0] + &seed[1] * &seed[2] * c[1]
                    + seed[2].cos() * c[2] + seed[0].square() * c[3]).truncate(3);
                let ft = Tensor::scalar(f, 3);
                let grad = geo.raise(&differential(&ft));
                let lie = lie_derivative_bilinear(&grad, geo.metric()).matrix() * 0.5;
                let hess = hessian_tensor(&geo, &ft).matrix();
                prop_assert!((lie - hess).amax() < 1e-10);
            }

            #[test]
            fn chain_trace_consistency_for_any_potential(
                c in prop::collection::vec(-1.0..1.0f64, 6), lambda in -3.0..3.0f64
            ) {
                let s = standard_s_structure(1, 2, false).unwrap();
                let u: Vec<Field> = (0..2)
                    .map(|i| {
                        let (a, b, k) = (c[3 * i], c[3 * i + 1], c[3 * i + 2]);
                        Field::from_fn(FieldKind::Scalar, 4, move |x| {
                            vec![x[0].sin() * a + &x[1] * &x[2 + i] * b + x[3].cos() * k]
                        })
                    })
                    .collect();
                let r = reeb_potential_chain(&s, &u, lambda, &Sampler::new(3, 9)).unwrap();
                prop_assert!(r.entry(UNCONDITIONAL_CHAIN_ENTRY).unwrap().max_abs < 1e-7);
            }
        }
    }
}
