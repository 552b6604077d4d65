//! One function per subcommand: decode `[experiment]`, compute, write outputs.

use std::path::{Path, PathBuf};

use harnacklab_core::contact::{basic_measure_estimate, basic_slope, contact_map_check, contact_set_measure, ParameterSet};
use harnacklab_core::covering::{dilate_measures, verify_cover, vitali_subcover, CylinderFamily, FamilyMember};
use harnacklab_core::harnack::{
    barrier_sample_check, density_check, find_barrier_params, find_propagation_constants, harnack_ratios,
    level_set_decay, propagation_samples, waiting_time_scan, weak_harnack_ratio, BarrierScanConfig, HarnackConfig,
    LogGrid, MeasurementReport, WaitingTimeConfig,
};
use harnacklab_core::scaling::intrinsic_rescale;
use harnacklab_core::solutions::{pointwise_residual, AnalyticSolution, BarrierSpec, ExampleSpec};
use harnacklab_core::solver::{
    convergence_study, evolve, Boundary, ConvergenceSetup, SolverConfig, DEFAULT_CFL_SAFETY,
};
use harnacklab_core::{Error, Grid, ScalarField, Slice, SpatialGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{ExperimentConfig, GridConfig};
use crate::output::{num, Output};
use crate::CliError;

/// 1000 cylinders in `[-1, 1]^3` with `theta = 1/2`, `p = 3`.
const BUNDLED_FAMILY: &str = include_str!("../fixtures/cover_family.json");

pub struct Context {
    pub config: ExperimentConfig,
    /// Seed after applying `--seed`.
    pub seed: u64,
    pub seed_from_cli: bool,
    /// Directory of the config file; relative paths inside it resolve here.
    pub config_dir: PathBuf,
}

/// Outcome of a run whose outputs were written.
pub enum Verdict {
    Passed,
    Failed(String),
}

fn verdict(passed: bool, what: impl FnOnce() -> String) -> Verdict {
    if passed {
        Verdict::Passed
    } else {
        Verdict::Failed(what())
    }
}

fn cfl_default() -> f64 {
    DEFAULT_CFL_SAFETY
}

/// Samples `sol` on one time level, keeping the first evaluation error.
fn sample_slice(sol: &dyn AnalyticSolution, space: SpatialGrid, t: f64) -> Result<Slice, CliError> {
    let mut err: Option<Error> = None;
    let slice = Slice::from_fn(space, t, |x| match sol.value(x, t) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            0.0
        }
    })?;
    match err {
        Some(e) => Err(e.into()),
        None => Ok(slice),
    }
}

fn sampled_field(ctx: &Context, grid: &GridConfig) -> Result<ScalarField, CliError> {
    let params = ctx.config.params()?;
    let sol = ctx.config.solution()?.build(&params)?;
    Ok(sol.sample(&grid.grid()?)?)
}

fn point_columns(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn header(cols: &[String]) -> Vec<&str> {
    cols.iter().map(String::as_str).collect()
}

// ---------------------------------------------------------------- catalog-eval

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct CatalogEval {
    /// Also write the field as CSV.
    csv: bool,
    /// Evaluate the pointwise residual against `[operator]` at every node.
    residual: bool,
}

pub fn catalog_eval(ctx: &Context, out: &mut Output) -> Result<Verdict, CliError> {
    let exp: CatalogEval = ctx.config.experiment()?;
    let params = ctx.config.params()?;
    let grid = ctx.config.grid()?.grid()?;
    let sol = ctx.config.solution()?.build(&params)?;
    let field = out.stage("sample", || sol.sample(&grid))?;
    out.field("field.bin", &field)?;
    if exp.csv {
        out.field_csv("field.csv", &field)?;
    }
    let mut summary = json!({
        "nodes": field.values().len(),
        "min": field.min(),
        "max": field.max(),
    });
    if exp.residual {
        let spec = ctx.config.operator()?;
        let (mut worst, mut evaluated, mut skipped) = (0.0f64, 0usize, 0usize);
        out.stage("residual", || -> Result<(), CliError> {
            let space = grid.space();
            let mut x = vec![0.0; space.dim()];
            for j in 0..grid.n_time() {
                for flat in 0..space.len() {
                    space.point_into(flat, &mut x);
                    match pointwise_residual(&sol, &x, grid.time(j), &spec) {
                        Ok(r) => {
                            worst = worst.max(r.abs());
                            evaluated += 1;
                        }
                        Err(e) if e.is_validation() => skipped += 1,
                        Err(e) => return Err(e.into()),
                    }
                }
            }
            Ok(())
        })?;
        summary["residual"] = json!({ "max_abs": worst, "evaluated": evaluated, "skipped_non_smooth": skipped });
    }
    out.json("summary.json", &summary)?;
    Ok(Verdict::Passed)
}

// ---------------------------------------------------------------------- solve

#[derive(Debug, Default, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum BoundaryChoice {
    #[default]
    Clamp,
    /// Edge values from `[solution]` at the output times.
    Exact,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Solve {
    cfl_safety: f64,
    boundary: BoundaryChoice,
    /// Report the error against `[solution]` at the final time.
    compare: bool,
    csv: bool,
}

impl Default for Solve {
    fn default() -> Self {
        Self { cfl_safety: cfl_default(), boundary: BoundaryChoice::Clamp, compare: false, csv: false }
    }
}

/// Interior max-norm difference between the last slices of two fields.
fn final_error(a: &ScalarField, b: &ScalarField) -> f64 {
    let space = a.grid().space();
    let j = a.grid().n_time() - 1;
    (0..space.len())
        .filter(|&flat| !space.is_boundary(flat))
        .map(|flat| (a.at(j, flat) - b.at(j, flat)).abs())
        .fold(0.0, f64::max)
}

pub fn solve(ctx: &Context, out: &mut Output) -> Result<Verdict, CliError> {
    let exp: Solve = ctx.config.experiment()?;
    let params = ctx.config.params()?;
    let gc = ctx.config.grid()?;
    let n_out = gc.n_out()?;
    let space = gc.space()?;
    let sol = ctx.config.solution()?.build(&params)?;
    let spec = ctx.config.operator()?;
    let needs_exact = exp.boundary == BoundaryChoice::Exact || exp.compare;
    let exact = if needs_exact {
        let dt_out = (gc.t_end - gc.t_start) / (n_out - 1) as f64;
        let grid = Grid::from_counts(space.clone(), gc.t_start, dt_out, n_out)?;
        Some(out.stage("sample", || sol.sample(&grid))?)
    } else {
        None
    };
    let initial = match &exact {
        Some(u) => u.slice_owned(0),
        None => sample_slice(sol.as_ref(), space, gc.t_start)?,
    };
    let boundary = match (exp.boundary, &exact) {
        (BoundaryChoice::Exact, Some(u)) => Boundary::DirichletFromField(u.clone()),
        _ => Boundary::ClampLastValue,
    };
    let cfg = SolverConfig::new(spec, exp.cfl_safety, boundary)?;
    let run = out.stage("evolve", || evolve(&initial, &cfg, gc.t_end, n_out))?;
    out.field("field.bin", &run.field)?;
    if exp.csv {
        out.field_csv("field.csv", &run.field)?;
    }
    out.csv(
        "steps.csv",
        &["step", "t", "dt", "max_abs_gradient", "residual_norm", "min_value", "max_value"],
        run.reports.iter().map(|r| {
            vec![
                r.step.to_string(),
                num(r.t),
                num(r.dt),
                num(r.max_abs_gradient),
                num(r.residual_norm),
                num(r.min_value),
                num(r.max_value),
            ]
        }),
    )?;
    let mut summary = json!({
        "steps": run.reports.len(),
        "substeps_per_output": run.substeps,
        "restarts": run.restarts,
        "min": run.field.min(),
        "max": run.field.max(),
        "t_end": run.field.grid().t_end(),
    });
    if let (true, Some(u)) = (exp.compare, &exact) {
        summary["final_error_linf"] = json!(final_error(&run.field, u));
    }
    out.json("summary.json", &summary)?;
    Ok(Verdict::Passed)
}

// -------------------------------------------------------------- verify-barrier

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyBarrier {
    q: f64,
    alpha: f64,
    #[serde(default = "default_barrier_samples")]
    samples: usize,
    /// Required `-residual / scale` at every sample.
    #[serde(default)]
    margin: f64,
}

fn default_barrier_samples() -> usize {
    100_000
}

pub fn verify_barrier(ctx: &Context, out: &mut Output) -> Result<Verdict, CliError> {
    let exp: VerifyBarrier = ctx.config.experiment()?;
    let params = ctx.config.params()?;
    let spec = BarrierSpec::new(params, exp.q, exp.alpha)?;
    let report = out.stage("sample", || barrier_sample_check(&spec, exp.samples, ctx.seed, exp.margin))?;
    out.json(
        "report.json",
        &json!({
            "q": exp.q,
            "alpha": exp.alpha,
            "beta": spec.beta(),
            "seed": ctx.seed,
            "margin": exp.margin,
            "check": report,
        }),
    )?;
    let ok = report.passed && report.strictly_negative;
    Ok(verdict(ok, || {
        format!(
            "barrier residual is not negative enough: worst residual/scale {} at x = {:?}, t = {}",
            report.worst.relative(),
            report.worst.x,
            report.worst.t
        )
    }))
}

// -------------------------------------------------------------- verify-example

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyExample {
    c0: f64,
    k: u64,
    #[serde(default = "default_example_samples")]
    samples: usize,
    #[serde(default = "default_example_tol")]
    tol: f64,
    /// Write every sampled point to `residuals.csv`.
    #[serde(default)]
    csv: bool,
}

fn default_example_samples() -> usize {
    10_000
}

fn default_example_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Copy, Serialize)]
struct ExamplePoint {
    x: f64,
    t: f64,
    residual: f64,
    scale: f64,
}

impl ExamplePoint {
    fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual.abs() / self.scale
        } else {
            self.residual.abs()
        }
    }
}

pub fn verify_example(ctx: &Context, out: &mut Output) -> Result<Verdict, CliError> {
    let exp: VerifyExample = ctx.config.experiment()?;
    let params = ctx.config.params()?;
    let spec = ExampleSpec::new(&params, exp.c0, exp.k)?;
    let points = out.stage("sample", || -> Result<Vec<ExamplePoint>, CliError> {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let mut points = Vec::with_capacity(exp.samples);
        while points.len() < exp.samples {
            let x: f64 = rng.random_range(-1.0..1.0);
            let t: f64 = rng.random_range(-1.0 / exp.c0..1.0);
            if x == 0.0 || t == spec.t_k() {
                continue;
            }
            let (residual, scale) = spec.residual_parts(x, t)?;
            points.push(ExamplePoint { x, t, residual, scale });
        }
        Ok(points)
    })?;
    let worst = points
        .iter()
        .copied()
        .reduce(|a, b| if b.relative() > a.relative() { b } else { a })
        .ok_or_else(|| CliError::Validation("[experiment]: samples must be positive".into()))?;
    if exp.csv {
        out.csv(
            "residuals.csv",
            &["x", "t", "residual", "scale"],
            points.iter().map(|p| vec![num(p.x), num(p.t), num(p.residual), num(p.scale)]),
        )?;
    }
    let passed = worst.relative() <= exp.tol;
    out.json(
        "report.json",
        &json!({
            "c0": exp.c0,
            "k": exp.k,
            "t_k": spec.t_k(),
            "blow_up_value": spec.blow_up_value(),
            "normalized_at_origin": spec.normalized_at_origin(),
            "samples": points.len(),
            "seed": ctx.seed,
            "max_relative_residual": worst.relative(),
            "worst": worst,
            "tol": exp.tol,
            "passed": passed,
        }),
    )?;
    Ok(verdict(passed, || {
        format!("relative residual {} exceeds {} at x = {}, t = {}", worst.relative(), exp.tol, worst.x, worst.t)
    }))
}

// -------------------------------------------------------------- verify-scaling

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyScaling {
    r: f64,
    m: f64,
    #[serde(default = "default_scaling_tol")]
    tol: f64,
    #[serde(default = "cfl_default")]
    cfl_safety: f64,
}

fn default_scaling_tol() -> f64 {
    1e-10
}

/// Evolves then rescales, and rescales then evolves with the rescaled
/// operator, and compares the two fields node by node.
pub fn verify_scaling(ctx: &Context, out: &mut Output) -> Result<Verdict, CliError> {
    let exp: VerifyScaling = ctx.config.experiment()?;
    let params = ctx.config.params()?;
    let gc = ctx.config.grid()?;
    let n_out = gc.n_out()?;
    let sol = ctx.config.solution()?.build(&params)?;
    let cfg = SolverConfig::new(ctx.config.operator()?, exp.cfl_safety, Boundary::ClampLastValue)?;
    let initial = sample_slice(sol.as_ref(), gc.space()?, gc.t_start)?;
    let run = out.stage("evolve", || evolve(&initial, &cfg, gc.t_end, n_out))?;
    let expected = intrinsic_rescale(&run.field, exp.r, exp.m, &params)?;
    let scaled_cfg = cfg.rescaled(exp.r, exp.m)?;
    let rerun = out.stage("evolve_rescaled", || {
        evolve(&expected.slice_owned(0), &scaled_cfg, expected.grid().t_end(), n_out)
    })?;
    let defect = rerun
        .field
        .values()
        .iter()
        .zip(expected.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let passed = defect <= exp.tol;
    out.json(
        "report.json",
        &json!({
            "r": exp.r,
            "m": exp.m,
            "max_nodal_defect": defect,
            "substeps": [run.substeps, rerun.substeps],
            "tol": exp.tol,
            "passed": passed,
        }),
    )?;
    Ok(verdict(passed, || format!("evolve and rescale differ by {defect} > {}", exp.tol)))
}

// --------------------------------------------------------------------- contact

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Contact {
    /// Use the standard vertex set and slope `16^p`; otherwise `y_radius`,
    /// `s_lo`, `s_hi` and `a` are required.
    #[serde(default)]
    basic: bool,
    a: Option<f64>,
    y_radius: Option<f64>,
    s_lo: Option<f64>,
    s_hi: Option<f64>,
    #[serde(default = "default_per_axis")]
    per_axis: usize,
    #[serde(default = "default_n_s")]
    n_s: usize,
    #[serde(default = "default_dilation")]
    dilation: usize,
    /// Also measure `{u < 4}` on the unit backward cylinder.
    #[serde(default)]
    measure_estimate: bool,
}

fn default_per_axis() -> usize {
    8
}

fn default_n_s() -> usize {
    4
}

fn default_dilation() -> usize {
    1
}

fn required(v: Option<f64>, name: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Validation(format!("[experiment]: `{name}` is required unless basic = true")))
}

pub fn contact(ctx: &Context, out: &mut Output) -> Result<Verdict, CliError> {
    let exp: Contact = ctx.config.experiment()?;
    let params = ctx.config.params()?;
    let u = out.stage("sample", || sampled_field(ctx, ctx.config.grid()?))?;
    let (set, a) = if exp.basic {
        (ParameterSet::basic(&params, exp.per_axis, exp.n_s)?, exp.a.unwrap_or_else(|| basic_slope(&params)))
    } else {
        let set = ParameterSet::boxed(
            params.n(),
            required(exp.y_radius, "y_radius")?,
            (required(exp.s_lo, "s_lo")?, required(exp.s_hi, "s_hi")?),
            exp.per_axis,
            exp.n_s,
        )?;
        (set, required(exp.a, "a")?)
    };
    let measure = out.stage("contact", || contact_set_measure(&u, &set, a, exp.dilation, &params))?;
    let n = params.n();
    let mut cols = point_columns("y", n);
    cols.push("s".into());
    cols.push("touched".into());
    cols.extend(point_columns("x", n));
    cols.extend(["t", "value", "gap", "tolerance", "map_dy", "map_ds"].map(String::from));
    let (mut max_dy, mut max_ds) = (0.0f64, 0.0f64);
    let mut rows = Vec::with_capacity(measure.records.len());
    for rec in &measure.records {
        let mut row: Vec<String> = rec.y.iter().map(|v| num(*v)).collect();
        row.push(num(rec.s));
        row.push(rec.touched.to_string());
        if rec.touched {
            let map = contact_map_check(rec, a, &params)?;
            if map.reliable {
                max_dy = max_dy.max(map.dy);
                max_ds = max_ds.max(map.ds);
            }
            row.extend(rec.x.iter().map(|v| num(*v)));
            row.extend([num(rec.t), num(rec.value), num(rec.gap), num(rec.tolerance), num(map.dy), num(map.ds)]);
        } else {
            row.extend(std::iter::repeat_n(String::new(), n));
            row.extend([String::new(), String::new(), num(rec.gap), num(rec.tolerance), String::new(), String::new()]);
        }
        rows.push(row);
    }
    out.csv("contacts.csv", &header(&cols), rows)?;
    let mut report = json!({
        "a": a,
        "parameters": set.len(),
        "parameter_measure": set.measure(),
        "gamma_measure": measure.gamma_measure,
        "e_measure": measure.e_measure,
        "ratio": measure.ratio,
        "touched": measure.touched,
        "untouched": measure.untouched,
        "dilation": measure.dilation,
        "map_max_dy": max_dy,
        "map_max_ds": max_ds,
    });
    if exp.measure_estimate {
        report["low_set_measure"] = json!(basic_measure_estimate(&u, &params)?);
    }
    out.json("report.json", &report)?;
    Ok(Verdict::Passed)
}

// ----------------------------------------------------------------------- cover

#[derive(Debug, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
enum Cover {
    /// The fixture shipped with the binary.
    Bundled,
    /// JSON `{"theta": .., "p": .., "members": [{"x": [..], "t": .., "rho": ..}]}`.
    File { path: PathBuf },
    /// Independent families drawn from the run seed.
    Random {
        #[serde(default = "one")]
        families: usize,
        #[serde(default = "default_family_size")]
        size: usize,
        #[serde(default = "two")]
        n: usize,
        #[serde(default = "half")]
        theta: f64,
        #[serde(default = "three")]
        p: f64,
    },
}

fn one() -> usize {
    1
}
fn two() -> usize {
    2
}
fn half() -> f64 {
    0.5
}
fn three() -> f64 {
    3.0
}
fn default_family_size() -> usize {
    1000
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyFile {
    theta: f64,
    p: f64,
    members: Vec<FamilyMember>,
}

fn parse_family(text: &str, origin: &str) -> Result<CylinderFamily, CliError> {
    let file: FamilyFile =
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("{origin}: {e}")))?;
    Ok(CylinderFamily::new(file.members, file.theta, file.p)?)
}

fn resolve(dir: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_owned()
    } else {
        dir.join(path)
    }
}

pub fn cover(ctx: &Context, out: &mut Output) -> Result<Verdict, CliError> {
    let exp: Cover = if ctx.config.experiment.is_empty() { Cover::Bundled } else { ctx.config.experiment()? };
    let families = match &exp {
        Cover::Bundled => vec![parse_family(BUNDLED_FAMILY, "bundled family")?],
        Cover::File { path } => {
            let path = resolve(&ctx.config_dir, path);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            vec![parse_family(&text, &path.display().to_string())?]
        }
        Cover::Random { families, size, n, theta, p } => {
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            (0..*families)
                .map(|_| CylinderFamily::random(&mut rng, *size, *n, *theta, *p))
                .collect::<Result<_, _>>()?
        }
    };
    let selections: Vec<Vec<usize>> = out.stage("select", || families.iter().map(vitali_subcover).collect());
    let reports = out.stage("verify", || {
        families.iter().zip(&selections).map(|(f, s)| verify_cover(f, s)).collect::<Result<Vec<_>, _>>()
    })?;
    let n = families.first().and_then(|f| f.items().first()).map_or(0, |c| c.x.len());
    let mut cols = vec!["family".to_owned(), "index".to_owned()];
    cols.extend(point_columns("x", n));
    cols.extend(["t", "rho"].map(String::from));
    let rows = families.iter().zip(&selections).enumerate().flat_map(|(k, (f, sel))| {
        sel.iter().map(move |&i| {
            let c = &f.items()[i];
            let mut row = vec![k.to_string(), i.to_string()];
            row.extend(c.x.iter().map(|v| num(*v)));
            row.extend([num(c.t), num(c.rho)]);
            row
        })
    });
    out.csv("selected.csv", &header(&cols), rows)?;
    let summary: Vec<_> = families
        .iter()
        .zip(&selections)
        .zip(&reports)
        .map(|((f, sel), rep)| {
            let (dilated, plain) = dilate_measures(f, sel);
            json!({
                "size": f.len(),
                "theta": f.theta(),
                "p": f.p(),
                "selected": sel.len(),
                "disjoint": rep.disjoint,
                "covered": rep.covered,
                "overlapping": rep.overlapping,
                "uncovered": rep.uncovered,
                "selected_measure": plain,
                "dilated_measure": dilated,
            })
        })
        .collect();
    let failed = reports.iter().filter(|r| !r.passed()).count();
    out.json("report.json", &json!({ "families": summary, "failed": failed }))?;
    Ok(verdict(failed == 0, || format!("{failed} of {} families failed the cover check", families.len())))
}

// ------------------------------------------------------------ harnack measure

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Measure {
    x0: Vec<f64>,
    t0: f64,
    rho: f64,
    #[serde(default = "yes")]
    weak: bool,
    #[serde(default = "yes")]
    intrinsic: bool,
    /// Repeat on a grid with half the spacing in space and time.
    #[serde(default)]
    refine: bool,
    #[serde(default)]
    harnack: HarnackConfig,
}

fn yes() -> bool {
    true
}

fn measure_once(
    ctx: &Context,
    exp: &Measure,
    gc: &GridConfig,
) -> Result<(MeasurementReport, serde_json::Value), CliError> {
    let params = ctx.config.params()?;
    let u = sampled_field(ctx, gc)?;
    let mut report = MeasurementReport::new("harnack", Some(u.grid()));
    let mut detail = json!({});
    if exp.weak {
        let w = weak_harnack_ratio(&u, &exp.x0, exp.t0, exp.rho, &exp.harnack, &params)?;
        report.record("weak_ratio", w.ratio).record("weak_theta", w.theta);
        detail["weak"] = serde_json::to_value(&w).expect("plain data");
    }
    if exp.intrinsic {
        let h = harnack_ratios(&u, &exp.x0, exp.t0, exp.rho, &exp.harnack, &params)?;
        report
            .record("sup_ratio", h.sup_ratio)
            .record("inf_ratio", h.inf_ratio)
            .record("theta1", h.theta1)
            .record("theta2", h.theta2);
        detail["intrinsic"] = serde_json::to_value(&h).expect("plain data");
    }
    Ok((report, detail))
}

pub fn harnack_measure(ctx: &Context, out: &mut Output) -> Result<Verdict, CliError> {
    let exp: Measure = ctx.config.experiment()?;
    let gc = ctx.config.grid()?;
    let (mut report, detail) = out.stage("measure", || measure_once(ctx, &exp, gc))?;
    if exp.refine {
        let fine = GridConfig { dx: gc.dx / 2.0, dt: gc.dt / 2.0, ..gc.clone() };
        let (fine_report, _) = out.stage("measure_refined", || measure_once(ctx, &exp, &fine))?;
        report.attach_refinement(&fine_report);
    }
    out.json("report.json", &json!({ "measurement": report, "detail": detail }))?;
    Ok(Verdict::Passed)
}

// -------------------------------------------------------- harnack propagation

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Propagation {
    /// Defaults to the largest `u(0, 0)` over the family.
    m0: Option<f64>,
    #[serde(default = "default_stride")]
    stride: usize,
    #[serde(default = "one")]
    t_stride: usize,
    #[serde(default = "default_radius")]
    radius: f64,
    #[serde(default = "default_l0_grid")]
    l0_grid: LogGrid,
}

fn default_stride() -> usize {
    8
}

fn default_radius() -> f64 {
    1.0 / 32.0
}

fn default_l0_grid() -> LogGrid {
    LogGrid { lo: 1.0, hi: 8.0, steps: 31 }
}

pub fn harnack_propagation(ctx: &Context, out: &mut Output) -> Result<Verdict, CliError> {
    let exp: Propagation = ctx.config.experiment()?;
    let params = ctx.config.params()?;
    let grid = ctx.config.grid()?.grid()?;
    let members = match (&ctx.config.family, &ctx.config.solution) {
        (Some(f), _) if !f.is_empty() => f.clone(),
        (_, Some(s)) => vec![s.clone()],
        _ => return Err(CliError::Validation("propagation needs [[family]] entries or a [solution]".into())),
    };
    let family = out.stage("sample", || {
        members.iter().map(|c| Ok(c.build(&params)?.sample(&grid)?)).collect::<Result<Vec<_>, CliError>>()
    })?;
    let m0 = match exp.m0 {
        Some(m0) => m0,
        None => {
            let origin = vec![0.0; grid.dim()];
            family.iter().map(|u| u.value_at(&origin, 0.0)).collect::<Result<Vec<_>, _>>()?.into_iter().fold(0.0, f64::max)
        }
    };
    let samples = propagation_samples(&grid, exp.stride, exp.t_stride);
    let constants =
        out.stage("search", || find_propagation_constants(&family, m0, &samples, exp.radius, &exp.l0_grid))?;
    out.json(
        "report.json",
        &json!({ "members": family.len(), "samples": samples.len(), "radius": exp.radius, "constants": constants }),
    )?;
    Ok(Verdict::Passed)
}

// -------------------------------------------------------------- harnack decay

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Decay {
    /// Defaults to `u(0, 0)`.
    m0: Option<f64>,
    #[serde(default = "default_level_factor")]
    l: f64,
    #[serde(default = "default_k_max")]
    k_max: u32,
    /// Also run the density check `|{u >= L1 m0}|` when set.
    l1: Option<f64>,
}

fn default_level_factor() -> f64 {
    2.0
}

fn default_k_max() -> u32 {
    4
}

pub fn harnack_decay(ctx: &Context, out: &mut Output) -> Result<Verdict, CliError> {
    let exp: Decay = ctx.config.experiment()?;
    let params = ctx.config.params()?;
    let u = out.stage("sample", || sampled_field(ctx, ctx.config.grid()?))?;
    let m0 = match exp.m0 {
        Some(m0) => m0,
        None => u.value_at(&vec![0.0; params.n()], 0.0)?,
    };
    let table = out.stage("decay", || level_set_decay(&u, m0, exp.l, exp.k_max, &params))?;
    out.csv(
        "decay.csv",
        &["k", "threshold", "measure", "fit_residual"],
        table.rows.iter().map(|r| {
            vec![r.k.to_string(), num(r.threshold), num(r.measure), r.fit_residual.map(num).unwrap_or_default()]
        }),
    )?;
    let density = exp.l1.map(|l1| density_check(&u, m0, l1, &params)).transpose()?;
    out.json("report.json", &json!({ "m0": m0, "l": exp.l, "decay": table, "density": density }))?;
    Ok(Verdict::Passed)
}

// ------------------------------------------------------- harnack barrier-scan

pub fn harnack_barrier_scan(ctx: &Context, out: &mut Output) -> Result<Verdict, CliError> {
    let mut exp: BarrierScanConfig = ctx.config.experiment()?;
    if ctx.seed_from_cli || !ctx.config.experiment.contains_key("seed") {
        exp.seed = ctx.seed;
    }
    let params = ctx.config.params()?;
    let scan = out.stage("scan", || find_barrier_params(&params, &exp))?;
    out.csv("feasible.csv", &["q", "alpha"], scan.feasible.iter().map(|(q, a)| vec![num(*q), num(*a)]))?;
    out.json("report.json", &json!({ "config": exp, "scan": scan }))?;
    Ok(Verdict::Passed)
}

// ------------------------------------------------------- harnack waiting-time

pub fn harnack_waiting_time(ctx: &Context, out: &mut Output) -> Result<Verdict, CliError> {
    let exp: WaitingTimeConfig = ctx.config.experiment()?;
    let params = ctx.config.params()?;
    let table = out.stage("scan", || waiting_time_scan(&params, &exp))?;
    let unit = 8f64.powf(params.p());
    out.csv(
        "waiting.csv",
        &["c0", "theta1", "bound", "blow_up_value", "theta1_c0_over_8p"],
        table.rows.iter().map(|r| {
            vec![num(r.c0), num(r.theta1), num(r.bound), num(r.blow_up_value), num(r.theta1 * r.c0 / unit)]
        }),
    )?;
    out.json("report.json", &json!({ "config": exp, "table": table }))?;
    Ok(Verdict::Passed)
}

// ----------------------------------------------------------------- convergence

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Convergence {
    /// Defaults to the origin.
    center: Option<Vec<f64>>,
    half_width: f64,
    coarse_dx: f64,
    #[serde(default = "default_levels")]
    levels: usize,
    t_start: f64,
    t_end: f64,
    #[serde(default = "default_convergence_n_out")]
    n_out: usize,
    #[serde(default = "cfl_default")]
    cfl_safety: f64,
    /// Measure the error only where `|x - center| < mask_radius`.
    mask_radius: Option<f64>,
    /// Fail unless both norms decrease under every refinement.
    #[serde(default)]
    require_monotone: bool,
}

fn default_levels() -> usize {
    3
}

fn default_convergence_n_out() -> usize {
    3
}

pub fn convergence(ctx: &Context, out: &mut Output) -> Result<Verdict, CliError> {
    let exp: Convergence = ctx.config.experiment()?;
    let params = ctx.config.params()?;
    let exact = ctx.config.solution()?.build(&params)?;
    let center = exp.center.clone().unwrap_or_else(|| vec![0.0; params.n()]);
    let mask_center = center.clone();
    let mask = exp.mask_radius.map(|r| {
        move |x: &[f64], _t: f64| x.iter().zip(&mask_center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < r * r
    });
    let setup = ConvergenceSetup {
        exact: exact.as_ref(),
        spec: ctx.config.operator()?,
        center,
        half_width: exp.half_width,
        coarse_dx: exp.coarse_dx,
        levels: exp.levels,
        t_start: exp.t_start,
        t_end: exp.t_end,
        n_out: exp.n_out,
        cfl_safety: exp.cfl_safety,
        mask: mask.as_ref().map(|m| m as _),
    };
    let table = out.stage("study", || convergence_study(&setup))?;
    out.csv(
        "convergence.csv",
        &["dx", "linf", "l1", "substeps"],
        table.rows.iter().map(|r| vec![num(r.dx), num(r.linf), num(r.l1), r.substeps.to_string()]),
    )?;
    let rows: Vec<_> = table
        .rows
        .iter()
        .map(|r| json!({ "dx": r.dx, "linf": r.linf, "l1": r.l1, "substeps": r.substeps }))
        .collect();
    let orders: Vec<_> = table.orders.iter().map(|(a, b)| json!({ "linf": a, "l1": b })).collect();
    out.json("report.json", &json!({ "rows": rows, "orders": orders, "monotone": table.monotone }))?;
    Ok(verdict(table.monotone || !exp.require_monotone, || "errors do not decrease monotonically".into()))
}
