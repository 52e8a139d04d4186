use serde_json::{Map, Value};
use sfoliate::catalog::{
    self, flat_chart, flat_torus_degenerate, round_sphere, standard_s_structure,
};
use sfoliate::chart_core::ops::{curvature_from, sectional_from};
use sfoliate::chart_core::{Chart, Field, Geometry};
use sfoliate::expr::parse_field;
use sfoliate::identities::{run_suite, Tolerances};
use sfoliate::soliton::{
    einstein_witness, fit_soliton, grid_search, reeb_potential_chain, Family, OptimizerConfig,
    CHAIN_NAMES, UNCONDITIONAL_CHAIN_ENTRY,
};
use sfoliate::structure::AlmostSStructure;
use sfoliate::warp::{
    basic_defect, canonical_variation, ricci_extremes_at, vertical_warp_unchecked,
    VerticalSplitting, BASIC_TOLERANCE,
};
use sfoliate::GeometryError;

use crate::args::{Command, FamilyName, Options, StructureName};
use crate::output::{number, Report, Row, Stat};

const CURVATURE_TOLERANCE: f64 = 1e-7;
const CROSS_BLOCK_TOLERANCE: f64 = 1e-12;
const FIT_TOLERANCE: f64 = 1e-8;
const GRID_RANGE: (f64, f64) = (-2.0, 2.0);
const VARIATION_PARAMETERS: [f64; 3] = [1.0, 0.5, 0.25];

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags or a structure the subcommand cannot use; exit code 2.
    Usage(String),
    /// Evaluation failed; exit code 1.
    Failure(String),
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::InvalidParameter(_)
            | GeometryError::NotApplicable(_)
            | GeometryError::DimensionMismatch(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// The selected model: an almost S-structure, or a bare metric with a
/// closed-form curvature oracle.
enum Target {
    Structure(AlmostSStructure),
    Sphere {
        chart: Chart,
        g: Field,
        m: usize,
        r: f64,
    },
    Flat {
        chart: Chart,
        g: Field,
        m: usize,
    },
}

impl Target {
    fn chart(&self) -> &Chart {
        match self {
            Target::Structure(s) => s.chart(),
            Target::Sphere { chart, .. } | Target::Flat { chart, .. } => chart,
        }
    }

    fn metric(&self) -> &Field {
        match self {
            Target::Structure(s) => s.metric(),
            Target::Sphere { g, .. } | Target::Flat { g, .. } => g,
        }
    }

    fn descriptor(&self) -> String {
        match self {
            Target::Structure(s) => s.descriptor(),
            Target::Sphere { m, r, .. } => format!("sphere (m={m}, r={r})"),
            Target::Flat { m, .. } => format!("flat (m={m})"),
        }
    }
}

fn target(o: &Options) -> CliResult<Target> {
    let unused = |flag: &str, set: bool| {
        if set {
            Err(CliError::Usage(format!(
                "--{flag} does not apply to --structure {}",
                o.structure.name()
            )))
        } else {
            Ok(())
        }
    };
    match o.structure {
        StructureName::StandardS => {
            unused("m", o.m.is_some())?;
            unused("radius", o.radius.is_some())?;
            Ok(Target::Structure(standard_s_structure(
                o.n.unwrap_or(1),
                o.p.unwrap_or(1),
                o.periodic,
            )?))
        }
        StructureName::FlatTorus => {
            unused("m", o.m.is_some())?;
            unused("radius", o.radius.is_some())?;
            if o.n.is_some_and(|n| n != 0) {
                return Err(CliError::Usage("flat-torus has n = 0".into()));
            }
            Ok(Target::Structure(flat_torus_degenerate(o.p.unwrap_or(1))?))
        }
        StructureName::Sphere => {
            unused("n", o.n.is_some())?;
            unused("p", o.p.is_some())?;
            let (m, r) = (o.m.unwrap_or(2), o.radius.unwrap_or(1.0));
            let (chart, g) = round_sphere(m, r)?;
            Ok(Target::Sphere { chart, g, m, r })
        }
        StructureName::Flat => {
            unused("n", o.n.is_some())?;
            unused("p", o.p.is_some())?;
            unused("radius", o.radius.is_some())?;
            let m = o.m.unwrap_or(3);
            let (chart, g) = flat_chart(m)?;
            Ok(Target::Flat { chart, g, m })
        }
    }
}

fn structure(o: &Options, command: Command) -> CliResult<AlmostSStructure> {
    match target(o)? {
        Target::Structure(s) => Ok(s),
        _ => Err(CliError::Usage(format!(
            "`{}` needs an almost S-structure (standard-s or flat-torus), not {}",
            command.name(),
            o.structure.name()
        ))),
    }
}

fn field(text: &str, chart: &Chart) -> CliResult<Field> {
    parse_field(text, chart).map_err(|e| CliError::Usage(format!("`{text}`: {e}")))
}

pub fn config_json(command: Command, o: &Options) -> Map<String, Value> {
    let opt_usize = |v: Option<usize>| v.map_or(Value::Null, Value::from);
    let mut c = Map::new();
    c.insert("subcommand".into(), command.name().into());
    c.insert("structure".into(), o.structure.name().into());
    c.insert("n".into(), opt_usize(o.n));
    c.insert("p".into(), opt_usize(o.p));
    c.insert("m".into(), opt_usize(o.m));
    c.insert("radius".into(), o.radius.map_or(Value::Null, number));
    c.insert("periodic".into(), o.periodic.into());
    c.insert("samples".into(), o.samples.into());
    c.insert("seed".into(), o.seed.into());
    c.insert("tol".into(), o.tol.map_or(Value::Null, number));
    c.insert("order".into(), o.order.into());
    c.insert(
        "warp_fn".into(),
        o.warp_fn.clone().map_or(Value::Null, Value::from),
    );
    c.insert(
        "potential_fn".into(),
        Value::Array(o.potential_fn.iter().cloned().map(Value::from).collect()),
    );
    c.insert("lambda".into(), number(o.lambda));
    c.insert(
        "family".into(),
        o.family.map_or(Value::Null, |f| f.name().into()),
    );
    c.insert("grid".into(), opt_usize(o.grid));
    c.insert("format".into(), "json".into());
    c
}

pub fn execute(command: Command, o: &Options) -> CliResult<Report> {
    if o.samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    if let Some(t) = o.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Usage(format!("--tol must be positive, got {t}")));
        }
    }
    let mut report = match command {
        Command::Verify => verify(o)?,
        Command::Curvature => curvature(o)?,
        Command::Warp => warp(o)?,
        Command::SolitonFit => soliton_fit(o)?,
        Command::Chain => chain(o)?,
        Command::Witness => witness(o)?,
        Command::Catalog => catalog_listing(),
    };
    report.config = config_json(command, o);
    report.seed = o.seed;
    Ok(report)
}

fn report(subcommand: &'static str, descriptor: String) -> Report {
    Report {
        subcommand,
        descriptor,
        seed: 0,
        config: Map::new(),
        rows: Vec::new(),
        notes: Vec::new(),
        extra: None,
    }
}

fn verify(o: &Options) -> CliResult<Report> {
    let s = structure(o, Command::Verify)?;
    let tolerances = o.tol.map_or_else(Tolerances::default, Tolerances::uniform);
    let suite = run_suite(&s, &o.sampler(), &tolerances)?;
    let mut r = report("verify", s.descriptor());
    r.rows = suite
        .entries
        .iter()
        .map(|e| Row::check(e.name.clone(), e.max_abs, e.mean_abs, e.tolerance))
        .collect();
    r.notes = suite.warnings;
    Ok(r)
}

fn curvature(o: &Options) -> CliResult<Report> {
    let t = target(o)?;
    let (chart, g) = (t.chart(), t.metric());
    let m = chart.dim();
    let tol = o.tol_or(CURVATURE_TOLERANCE);
    let mut symmetry = Stat::default();
    let mut bianchi = Stat::default();
    let mut scalar = Stat::default();
    let mut sectional = Stat::default();
    let mut oracle = Stat::default();
    let mut contracted = Stat::default();
    let (mut ric_min, mut ric_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for pt in o.sampler().points(chart) {
        let geo = Geometry::new(g, &pt, o.order as usize)?;
        let data = curvature_from(&geo)?;
        symmetry.push((&data.ricci - data.ricci.transpose()).amax());
        bianchi.push(data.bianchi_defect());
        scalar.push(data.scalar);
        for i in 0..m {
            for j in i + 1..m {
                let e =
                    |k: usize| nalgebra::DVector::from_fn(m, |a, _| f64::from(u8::from(a == k)));
                sectional.push(sectional_from(&geo, &e(i), &e(j))?);
            }
        }
        let (lo, hi) = ricci_extremes_at(g, &pt)?;
        ric_min = ric_min.min(lo);
        ric_max = ric_max.max(hi);
        match &t {
            Target::Structure(s) => {
                let n2 = 2.0 * s.n() as f64;
                let xi: Vec<_> = s
                    .xi()
                    .iter()
                    .map(|f| f.eval_vector(&pt))
                    .collect::<Result<_, _>>()?;
                for a in &xi {
                    for b in &xi {
                        oracle.push((a.transpose() * &data.ricci * b)[(0, 0)] - n2);
                    }
                }
            }
            Target::Sphere { m, r, .. } => {
                let k = (*m as f64 - 1.0) / (r * r);
                oracle.push((&data.ricci - geo.metric_value() * k).amax());
                oracle.push(data.scalar - *m as f64 * k);
            }
            Target::Flat { .. } => {
                oracle.push(data.riemann.iter().fold(0.0, |a: f64, v| a.max(v.abs())))
            }
        }
        if o.order == 3 {
            // div Ric = ½ ds
            let nabla_ric = geo.nabla(geo.ricci()?);
            let ginv = geo.inverse_metric().matrix();
            let ds = geo.scalar_curvature()?.gradient();
            for k in 0..m {
                let mut div = 0.0;
                for i in 0..m {
                    for j in 0..m {
                        div += ginv[(i, j)] * nabla_ric.value_at(&[i, j, k]);
                    }
                }
                contracted.push(div - 0.5 * ds[k]);
            }
        }
    }
    let mut r = report("curvature", t.descriptor());
    r.rows.push(symmetry.check("ricci_symmetry", tol));
    r.rows.push(bianchi.check("first_bianchi", tol));
    let oracle_name = match &t {
        Target::Structure(_) => "reeb_ricci_oracle",
        Target::Sphere { .. } => "constant_curvature_oracle",
        Target::Flat { .. } => "flat_oracle",
    };
    r.rows.push(oracle.check(oracle_name, tol));
    if o.order == 3 {
        r.rows.push(contracted.check("contracted_bianchi", tol));
    }
    r.rows.push(scalar.info("scalar_curvature"));
    r.rows.push(sectional.info("sectional_coordinate_planes"));
    r.rows.push(Row::value("ricci_min", ric_min));
    r.rows.push(Row::value("ricci_max", ric_max));
    Ok(r)
}

fn ricci_range_rows(
    r: &mut Report,
    label: &str,
    chart: &Chart,
    g: &Field,
    o: &Options,
) -> CliResult<()> {
    let (lo, hi) = sfoliate::warp::ricci_range(chart, g, &o.sampler())?;
    r.rows.push(Row::value(format!("ricci_min[{label}]"), lo));
    r.rows.push(Row::value(format!("ricci_max[{label}]"), hi));
    Ok(())
}

fn warp(o: &Options) -> CliResult<Report> {
    let s = structure(o, Command::Warp)?;
    let split = VerticalSplitting::from_structure(&s);
    let sampler = o.sampler();
    let mut r = report("warp", s.descriptor());
    ricci_range_rows(&mut r, "base", s.chart(), s.metric(), o)?;
    match &o.warp_fn {
        Some(text) => {
            let w = field(text, s.chart())?;
            let defect = basic_defect(&w, &s, &sampler)?;
            r.rows.push(Row::check(
                "basic_defect",
                defect,
                defect,
                o.tol_or(BASIC_TOLERANCE),
            ));
            if !(defect < BASIC_TOLERANCE) {
                r.notes.push(format!(
                    "warp function is not basic (defect {defect:.3e}); warp rejected"
                ));
                return Ok(r);
            }
            let gw = vertical_warp_unchecked(s.metric(), &split, &w)?;
            let mut cross = Stat::default();
            let mut change = Stat::default();
            for pt in sampler.points(s.chart()) {
                let (ph, pv) = split.projectors(s.metric(), &pt)?;
                cross.push((ph.transpose() * gw.eval_matrix(&pt)? * pv).amax());
                let a = curvature_from(&Geometry::new(&gw, &pt, 2)?)?;
                let b = curvature_from(&Geometry::new(s.metric(), &pt, 2)?)?;
                change.push((a.ricci - b.ricci).amax());
            }
            r.rows
                .push(cross.check("cross_block", o.tol_or(CROSS_BLOCK_TOLERANCE)));
            r.rows.push(change.info("ricci_change"));
            ricci_range_rows(&mut r, "warped", s.chart(), &gw, o)?;
        }
        None => {
            let mut identity = Stat::default();
            let same = canonical_variation(s.metric(), &split, 1.0)?;
            for pt in sampler.points(s.chart()) {
                identity.push((same.eval_matrix(&pt)? - s.metric().eval_matrix(&pt)?).amax());
            }
            r.rows
                .push(identity.check("variation_identity", o.tol_or(CROSS_BLOCK_TOLERANCE)));
            for t in VARIATION_PARAMETERS {
                let gt = canonical_variation(s.metric(), &split, t)?;
                ricci_range_rows(&mut r, &format!("t={t}"), s.chart(), &gt, o)?;
            }
        }
    }
    Ok(r)
}

fn soliton_fit(o: &Options) -> CliResult<Report> {
    let name = o
        .family
        .ok_or_else(|| CliError::Usage("soliton-fit needs --family".into()))?;
    let t = target(o)?;
    let (chart, g) = (t.chart().clone(), t.metric().clone());
    let m = chart.dim();
    let mut potential = None;
    let family = match name {
        FamilyName::Reeb => match &t {
            Target::Structure(s) => Family::vector(chart.clone(), g, None, s.xi().to_vec()),
            _ => {
                return Err(CliError::Usage(
                    "the reeb family needs an almost S-structure".into(),
                ))
            }
        },
        FamilyName::Radial => Family::vector(chart.clone(), g, None, vec![Field::position(m)]),
        FamilyName::Zero => Family::vector(chart.clone(), g, None, vec![]),
        FamilyName::Potential => {
            let text = match o.potential_fn.as_slice() {
                [text] => text,
                _ => {
                    return Err(CliError::Usage(
                        "the potential family needs one --potential-fn".into(),
                    ))
                }
            };
            let f = field(text, &chart)?;
            potential = Some(f.clone());
            Family::gradient(chart.clone(), g, Some(f), vec![])
        }
    };
    let k = family.parameters() + 1;
    let mut cfg = OptimizerConfig::new(vec![0.0; k]);
    cfg.seed = o.seed;
    let sampler = o.sampler();
    let fit = fit_soliton(&family, &sampler, &cfg)?;
    let mut r = report(
        "soliton-fit",
        format!("{} with {} family", t.descriptor(), name.name()),
    );
    r.rows.push(Row::check(
        "soliton_residual_rms",
        fit.residual_norm,
        fit.residual_norm,
        o.tol_or(FIT_TOLERANCE),
    ));
    r.rows.push(Row::value("lambda", fit.lambda));
    for (i, c) in fit.coefficients.iter().enumerate() {
        r.rows
            .push(Row::value(format!("coefficient[{}]", i + 1), *c));
    }
    r.notes.push(format!(
        "classification: {} (form: {})",
        fit.classification,
        if name == FamilyName::Potential {
            "gradient"
        } else {
            "dynamic"
        }
    ));
    r.notes.push(format!(
        "{} after {} iterations from start {}",
        if fit.converged {
            "converged"
        } else {
            "not converged"
        },
        fit.log.last().map_or(0, |l| l.iteration),
        fit.start
    ));
    if let Some(points) = o.grid {
        let grid = grid_search(&family, &sampler, &vec![GRID_RANGE; k], points)?;
        r.rows.push(Row::value("grid_best_rms", grid.residual_norm));
        r.rows.push(Row::value(
            "grid_best_lambda",
            *grid.theta.last().expect("λ axis"),
        ));
        r.notes.push(format!(
            "grid search over {} cells in [-2, 2]^{k}",
            grid.cells
        ));
    }
    if let (Some(f), Target::Structure(s)) = (potential, &t) {
        let defect = basic_defect(&f, s, &sampler)?;
        r.rows
            .push(Row::info("potential_basic_defect", defect, defect));
    }
    Ok(r)
}

fn chain(o: &Options) -> CliResult<Report> {
    let s = structure(o, Command::Chain)?;
    let p = s.p();
    let texts: Vec<String> = match o.potential_fn.len() {
        0 => vec!["0".into(); p],
        1 => vec![o.potential_fn[0].clone(); p],
        k if k == p => o.potential_fn.clone(),
        k => {
            return Err(CliError::Usage(format!(
                "chain needs 1 or {p} --potential-fn values, got {k}"
            )))
        }
    };
    let u = texts
        .iter()
        .map(|t| field(t, s.chart()))
        .collect::<CliResult<Vec<_>>>()?;
    let chain = reeb_potential_chain(&s, &u, o.lambda, &o.sampler())?;
    let mut r = report("chain", s.descriptor());
    for name in CHAIN_NAMES {
        let e = chain.entry(name).expect("every chain entry is reported");
        r.rows.push(if name == UNCONDITIONAL_CHAIN_ENTRY {
            Row::check(name, e.max_abs, e.mean_abs, o.tol_or(1e-7))
        } else {
            Row::info(name, e.max_abs, e.mean_abs)
        });
    }
    r.rows.push(Row::value("h_v_squared", chain.h_v_squared));
    r.notes.push(
        "only trace_consistency holds for every potential; later entries are consequences of a vanishing soliton_defect"
            .into(),
    );
    Ok(r)
}

fn witness(o: &Options) -> CliResult<Report> {
    let s = structure(o, Command::Witness)?;
    let w = einstein_witness(&s, &o.sampler())?;
    let mut r = report("witness", s.descriptor());
    r.rows.push(Row::check(
        "nabla_xi_bar",
        w.max_nabla_xi_bar,
        w.max_nabla_xi_bar,
        o.tol_or(1e-8),
    ));
    r.rows.push(Row::check(
        "ricci_xi_bar",
        w.max_ricci_xi_bar,
        w.max_ricci_xi_bar,
        o.tol_or(1e-7),
    ));
    r.rows.push(Row::check(
        "d_eta_bar_minus_pf",
        w.max_d_eta_bar_minus_pf,
        w.max_d_eta_bar_minus_pf,
        o.tol_or(1e-8),
    ));
    r.rows.push(Row::check(
        "reeb_ricci_defect",
        w.max_reeb_ricci_defect,
        w.max_reeb_ricci_defect,
        o.tol_or(1e-6),
    ));
    r.rows.push(Row::value("min_d_eta_bar", w.min_d_eta_bar));
    r.rows
        .push(Row::value("min_xi_bar_norm_sq", w.min_xi_bar_norm_sq));
    r.rows
        .push(Row::value("forced_lambda_bound", w.forced_lambda_bound));
    if w.degenerate {
        r.notes
            .push("n = 0: dη̄ and F vanish, nothing to contradict".into());
    }
    Ok(r)
}

fn catalog_listing() -> Report {
    let mut r = report("catalog", "built-in models".into());
    let entries = catalog::entries()
        .into_iter()
        .map(|e| {
            let mut o = Map::new();
            o.insert("name".into(), e.name.into());
            o.insert("parameters".into(), e.parameters.into());
            o.insert(
                "expected".into(),
                Value::Array(e.expected.iter().map(|s| Value::from(*s)).collect()),
            );
            Value::Object(o)
        })
        .collect();
    for e in catalog::entries() {
        r.notes.push(format!(
            "{}: {} ({})",
            e.name,
            e.expected.join("; "),
            e.parameters
        ));
    }
    r.extra = Some(("catalog", Value::Array(entries)));
    r
}
