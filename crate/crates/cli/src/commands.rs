use overlapkit::ensemble::{mc_rescaled_overlaps, Dims, MatrixSpec, McConfig, Selection, Target, TargetEstimate};
use overlapkit::overlap::{
    invert_bulk, invert_kernel_u, mp_kernel_overlaps, mp_overlap_triple, BulkGuard, GeneralModel, InitialOverlapTables,
    KernelCase, KernelOverlaps, OverlapTriple,
};
use overlapkit::sde::{burgers_validate, z_grid};
use overlapkit::spectral::{
    mp_density, mp_density_peak, mp_edges, mp_hilbert, plemelj_boundary, quantile, BoundaryOptions, BoundaryValue,
    EpsSchedule, ImplicitSolver, MpSpec, ShapeRatios,
};
use overlapkit::Error;

use crate::args::{
    BurgersArgs, CompareArgs, DensityArgs, MatrixArgs, McArgs, Mode, RatioArgs, SimulateArgs, Spectrum, TheoryArgs,
};
use crate::output::{Cell, Table};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

/// `(x, y)` for quantile-grid points, `None` for `--at` points.
type GridFractions = Option<(f64, f64)>;

const DEFAULT_MC_ROWS: usize = 300;
const DEFAULT_SDE_ROWS: usize = 444;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn ratios(a: &RatioArgs) -> Result<ShapeRatios> {
    Ok(ShapeRatios::new(a.q, a.alpha, a.beta, a.t)?)
}

fn matrix_spec(m: &MatrixArgs, dims: Dims) -> Result<MatrixSpec> {
    Ok(match (&m.a_file, &m.a_diag) {
        (Some(path), _) => MatrixSpec::from_file(path, dims)?,
        (None, Some(diag)) => MatrixSpec::diagonal(diag.clone(), dims)?,
        (None, None) => MatrixSpec::zero(dims),
    })
}

/// Sizes from `--M` and the ratios, the matrix spec, and the ratios those
/// sizes realise.
fn finite_setup(r: &ShapeRatios, m: &MatrixArgs, default_rows: usize) -> Result<(MatrixSpec, ShapeRatios)> {
    let dims = Dims::from_ratios(m.rows.unwrap_or(default_rows), r)?;
    let spec = matrix_spec(m, dims)?;
    Ok((spec, dims.ratios(r.t)?))
}

fn general_model(r: &ShapeRatios, m: &MatrixArgs) -> Result<GeneralModel> {
    if !m.has_matrix() {
        return Ok(GeneralModel::null(*r)?);
    }
    let rows = m.rows.ok_or_else(|| usage("an initial matrix needs --M"))?;
    let (spec, realised) = finite_setup(r, m, rows)?;
    let tables = InitialOverlapTables::from_spec(&spec)?;
    Ok(GeneralModel::from_tables(realised, &tables)?)
}

fn require_mode_for_matrix(mode: Mode, m: &MatrixArgs) -> Result<()> {
    if mode == Mode::Mp && m.has_matrix() {
        return Err(usage("an initial matrix needs --mode general"));
    }
    Ok(())
}

fn schedule(factors: &[f64], scale: f64) -> Result<EpsSchedule> {
    Ok(EpsSchedule::relative(factors, scale)?)
}

fn fractions(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi < 1.0 && lo <= hi) || count == 0 {
        return Err(usage(format!("fraction range [{lo}, {hi}] with {count} points is not inside (0, 1)")));
    }
    if count == 1 {
        return Ok(vec![0.5 * (lo + hi)]);
    }
    Ok((0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect())
}

fn check_fractions(xs: &[f64]) -> Result<()> {
    match xs.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
        Some(x) => Err(usage(format!("target fraction {x} is not inside (0, 1)"))),
        None => Ok(()),
    }
}

fn interior(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|k| lo + (hi - lo) * k as f64 / (count + 1) as f64).collect()
}

fn header(table: &mut Table, command: &str, config: &impl std::fmt::Debug) {
    table.meta("overlapkit", env!("CARGO_PKG_VERSION"));
    table.meta("command", command);
    table.meta("config", format!("{config:?}"));
}

fn spectra(which: Spectrum) -> Vec<(&'static str, bool)> {
    match which {
        Spectrum::Full => vec![("full", true)],
        Spectrum::Truncated => vec![("truncated", false)],
        Spectrum::Both => vec![("full", true), ("truncated", false)],
    }
}

pub fn density(a: &DensityArgs) -> Result<Table> {
    require_mode_for_matrix(a.mode, &a.matrix)?;
    let r = ratios(&a.ratios)?;
    let mut table = Table::new(&["spectrum", "lambda", "rho", "hilbert"]);
    header(&mut table, "density", a);
    if a.grid == 0 {
        return Err(usage("--grid must be positive"));
    }
    let range = a.range;
    if let Some((lo, hi)) = range {
        if !(lo < hi) {
            return Err(usage(format!("--range {lo},{hi} is empty")));
        }
    }
    match a.mode {
        Mode::Mp => {
            if a.eps_schedule.is_some() {
                return Err(usage("--eps-schedule applies to --mode general"));
            }
            for (name, full) in spectra(a.spectrum) {
                let spec = if full { r.rho_spec()? } else { r.rhot_spec()? };
                let (lo, hi) = mp_edges(&spec);
                let (glo, ghi) = range.unwrap_or((lo, hi));
                let mut points = interior(glo, ghi, a.grid);
                if a.edges {
                    points.insert(0, lo);
                    points.push(hi);
                }
                for lam in points {
                    table.push(vec![
                        name.into(),
                        lam.into(),
                        mp_density(&spec, lam).into(),
                        Cell::opt(mp_hilbert(&spec, lam).ok()),
                    ]);
                }
            }
        }
        Mode::General => {
            if a.edges {
                return Err(usage("--edges applies to --mode mp"));
            }
            let model = general_model(&r, &a.matrix)?;
            let t = model_ratios(&model).t;
            for (name, full) in spectra(a.spectrum) {
                let solver = if full { model.full_solver() } else { model.tilde_solver() };
                let scale = solver.scale(t);
                let (glo, ghi) = range.unwrap_or((0.0, scale));
                let sched = a.eps_schedule.as_ref().map(|f| schedule(f, scale)).transpose()?;
                for lam in interior(glo, ghi, a.grid) {
                    let bv = boundary(solver, lam, t, sched.as_ref())?;
                    table.push(vec![name.into(), lam.into(), bv.density.into(), bv.hilbert.into()]);
                }
            }
        }
    }
    Ok(table)
}

fn model_ratios(model: &GeneralModel) -> ShapeRatios {
    use overlapkit::overlap::ResolventEvaluator;
    *model.ratios()
}

fn boundary(
    solver: &ImplicitSolver<overlapkit::spectral::AtomSpectrum>,
    lam: f64,
    t: f64,
    sched: Option<&EpsSchedule>,
) -> Result<BoundaryValue> {
    Ok(match sched {
        Some(s) => plemelj_boundary(|z, tt| solver.solve(z, tt), lam, t, s, &BoundaryOptions::default())?,
        None => solver.boundary_value(lam, t)?,
    })
}

/// Row-level outcome: errors that only affect one evaluation point become a
/// status string with null values; anything else aborts.
fn row_status<T>(res: overlapkit::Result<T>) -> Result<std::result::Result<T, String>> {
    match res {
        Ok(v) => Ok(Ok(v)),
        Err(e @ Error::EdgeProximity { .. }) => Ok(Err(format!("edge: {e}"))),
        Err(e @ Error::Domain(_)) => Ok(Err(format!("domain: {e}"))),
        Err(e) => Err(e.into()),
    }
}

struct Evaluated {
    rho: f64,
    rhot: f64,
    triple: std::result::Result<OverlapTriple, String>,
    kernel: Option<KernelOverlaps>,
}

/// Theory at given points, shared by `theory` and `compare`.
enum Theory {
    Mp { r: ShapeRatios, rho: MpSpec, rhot: MpSpec, guard: BulkGuard },
    General { model: Box<GeneralModel>, eps: Option<Vec<f64>> },
}

impl Theory {
    fn mp(r: ShapeRatios) -> Result<Self> {
        let (rho, rhot) = (r.rho_spec()?, r.rhot_spec()?);
        let guard =
            BulkGuard::fraction_of_peak(BulkGuard::DEFAULT_FRACTION, mp_density_peak(&rho).1, mp_density_peak(&rhot).1);
        Ok(Theory::Mp { r, rho, rhot, guard })
    }

    fn ratios(&self) -> ShapeRatios {
        match self {
            Theory::Mp { r, .. } => *r,
            Theory::General { model, .. } => model_ratios(model),
        }
    }

    /// `(μ(x), λ(y))`.
    fn quantiles(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        Ok(match self {
            Theory::Mp { rho, rhot, .. } => (quantile(rhot, x), quantile(rho, y)),
            Theory::General { model, .. } => (model.quantile_tilde(x)?, model.quantile(y)?),
        })
    }

    fn evaluate(&self, mu: f64, lam: f64, kernel: bool) -> Result<Evaluated> {
        match self {
            Theory::Mp { r, rho, rhot, guard } => {
                let (d, dt) = (mp_density(rho, lam), mp_density(rhot, mu));
                let triple = row_status(guard.check(d, dt).and_then(|_| mp_overlap_triple(r, mu, lam)))?;
                let kernel = kernel.then(|| mp_kernel_overlaps(r, mu, lam)).transpose()?;
                Ok(Evaluated { rho: d, rhot: dt, triple, kernel })
            }
            Theory::General { model, eps } => {
                let t = model_ratios(model).t;
                let bv = model.boundary(lam)?;
                let bvt = model.boundary_tilde(mu)?;
                let guard = model.bulk_guard()?;
                let sched = eps.as_ref().map(|f| schedule(f, model.full_solver().scale(t))).transpose()?;
                let triple = row_status(match &sched {
                    Some(s) => invert_bulk(model.as_ref(), mu, lam, bv.density, bvt.density, &guard, s),
                    None => guard
                        .check(bv.density, bvt.density)
                        .and_then(|_| model.overlap_triple_from_boundary(mu, lam, &bv, &bvt)),
                })?;
                let kernel = if !kernel {
                    None
                } else if let Some(s) = &sched {
                    let u = |case| invert_kernel_u(model.as_ref(), case, s);
                    Some(KernelOverlaps {
                        u1_of_lambda: u(KernelCase::U1 { lam, rho: bv.density })?,
                        u2_of_mu: u(KernelCase::U2 { mu, rhot: bvt.density })?,
                        u3: u(KernelCase::U3)?,
                    })
                } else {
                    row_status(model.kernel_overlaps(mu, lam))?.ok()
                };
                Ok(Evaluated { rho: bv.density, rhot: bvt.density, triple, kernel })
            }
        }
    }
}

fn theory_for(mode: Mode, r: ShapeRatios, m: &MatrixArgs, eps: Option<Vec<f64>>) -> Result<Theory> {
    match mode {
        Mode::Mp => {
            require_mode_for_matrix(mode, m)?;
            if eps.is_some() {
                return Err(usage("--eps-schedule applies to --mode general"));
            }
            Theory::mp(r)
        }
        Mode::General => Ok(Theory::General { model: Box::new(general_model(&r, m)?), eps }),
    }
}

pub fn theory(a: &TheoryArgs) -> Result<Table> {
    let r = ratios(&a.ratios)?;
    if !(r.t > 0.0) {
        return Err(usage("overlap limits need --t > 0"));
    }
    let th = theory_for(a.mode, r, &a.matrix, a.eps_schedule.clone())?;
    check_fractions(&a.targets)?;
    let ys = if a.grid == 0 && !a.at.is_empty() { Vec::new() } else { fractions(a.y_range.0, a.y_range.1, a.grid)? };

    let mut columns = vec!["x", "y", "mu", "lambda", "rho", "rhot", "vbar", "ubar", "wbar"];
    if a.kernel {
        columns.extend(["u1", "u2", "u3"]);
    }
    columns.push("status");
    let mut table = Table::new(&columns);
    header(&mut table, "theory", a);
    let realised = th.ratios();
    table.meta("ratios", format!("q={} alpha={} beta={} t={}", realised.q, realised.alpha, realised.beta, realised.t));

    let mut points: Vec<(GridFractions, f64, f64)> = Vec::new();
    for &x in &a.targets {
        for &y in &ys {
            let (mu, lam) = th.quantiles(x, y)?;
            points.push((Some((x, y)), mu, lam));
        }
    }
    for &(mu, lam) in &a.at {
        points.push((None, mu, lam));
    }
    for (xy, mu, lam) in points {
        let ev = th.evaluate(mu, lam, a.kernel)?;
        let mut row = vec![
            Cell::opt(xy.map(|p| p.0)),
            Cell::opt(xy.map(|p| p.1)),
            mu.into(),
            lam.into(),
            ev.rho.into(),
            ev.rhot.into(),
        ];
        let (values, status) = match &ev.triple {
            Ok(o) => ([Cell::num(o.vbar), Cell::num(o.ubar), Cell::num(o.wbar)], "ok".to_string()),
            Err(s) => ([Cell::Null, Cell::Null, Cell::Null], s.clone()),
        };
        row.extend(values);
        if a.kernel {
            let k = ev.kernel.as_ref();
            row.extend([
                Cell::opt(k.map(|k| k.u1_of_lambda)),
                Cell::opt(k.map(|k| k.u2_of_mu)),
                Cell::opt(k.map(|k| k.u3)),
            ]);
        }
        row.push(Cell::Text(status));
        table.push(row);
    }
    Ok(table)
}

struct McRun {
    spec: MatrixSpec,
    theory: Option<Theory>,
    /// `(μ(x), λ(y))` per target under eigenvalue-matched selection.
    refs: Option<Vec<(f64, f64)>>,
    est: Vec<TargetEstimate>,
}

fn default_mode(m: &MatrixArgs) -> Mode {
    if m.has_matrix() {
        Mode::General
    } else {
        Mode::Mp
    }
}

/// Runs the trials; builds the theory when `mode` is given or when
/// `--matched` needs reference eigenvalues.
fn run_mc(a: &McArgs, mode: Option<Mode>) -> Result<McRun> {
    let r = ratios(&a.ratios)?;
    let (spec, realised) = finite_setup(&r, &a.matrix, DEFAULT_MC_ROWS)?;
    check_fractions(&a.targets)?;
    let ys = fractions(a.y_range.0, a.y_range.1, a.grid)?;
    let targets = a
        .targets
        .iter()
        .flat_map(|&x| ys.iter().map(move |&y| Target::new(x, y)))
        .collect::<overlapkit::Result<Vec<_>>>()?;
    let theory = match mode.or(a.matched.then(|| default_mode(&a.matrix))) {
        Some(mode) => {
            if !(realised.t > 0.0) {
                return Err(usage("overlap limits need --t > 0"));
            }
            Some(theory_for(mode, realised, &a.matrix, None)?)
        }
        None => None,
    };
    let mut config = McConfig::new(a.trials, a.seed).with_window(a.window);
    let refs = match (&theory, a.matched) {
        (Some(th), true) => Some(targets.iter().map(|tg| th.quantiles(tg.x, tg.y)).collect::<Result<Vec<_>>>()?),
        _ => None,
    };
    if let Some(refs) = &refs {
        config.selection = Selection::EigenvalueMatched(refs.clone());
    }
    let est = mc_rescaled_overlaps(&spec, r.t, &targets, &config)?;
    Ok(McRun { spec, theory, refs, est })
}

fn selection_meta(table: &mut Table, a: &McArgs) {
    table.meta("selection", if a.matched { "eigenvalue-matched" } else { "fixed-index" });
}

fn dims_meta(table: &mut Table, spec: &MatrixSpec) {
    let d = spec.dims;
    table.meta("dims", format!("M={} N={} m={} n={}", d.rows, d.cols, d.sub_rows, d.sub_cols));
}

pub fn simulate(a: &SimulateArgs) -> Result<Table> {
    let McRun { spec, est, .. } = run_mc(&a.mc, None)?;
    let mut table = Table::new(&["x", "y", "i", "j", "v", "v_se", "u", "u_se", "w", "w_se"]);
    header(&mut table, "simulate", a);
    table.meta("seed", a.mc.seed);
    dims_meta(&mut table, &spec);
    selection_meta(&mut table, &a.mc);
    for e in est {
        table.push(vec![
            e.target.x.into(),
            e.target.y.into(),
            e.row.into(),
            e.col.into(),
            e.v.value.into(),
            e.v.stderr.into(),
            e.u.value.into(),
            e.u.stderr.into(),
            e.w.value.into(),
            e.w.stderr.into(),
        ]);
    }
    Ok(table)
}

/// Monte Carlo against theory evaluated at `μ((i − ½)/n)`, `λ((j − ½)/N)`,
/// or at the reference eigenvalues under `--matched`. Returns the table and
/// the fraction of channel-points within 3 standard errors.
pub fn compare(a: &CompareArgs) -> Result<(Table, f64)> {
    let McRun { spec, theory, refs, est } = run_mc(&a.mc, Some(a.mode.unwrap_or(default_mode(&a.mc.matrix))))?;
    let th = theory.expect("theory requested");
    let Dims { cols: big_n, sub_cols: n, .. } = spec.dims;

    let mut table = Table::new(&[
        "x", "y", "i", "j", "lambda", "mu", "v_theory", "v_mc", "v_se", "u_theory", "u_mc", "u_se", "w_theory", "w_mc",
        "w_se", "within", "status",
    ]);
    header(&mut table, "compare", a);
    table.meta("seed", a.mc.seed);
    dims_meta(&mut table, &spec);
    selection_meta(&mut table, &a.mc);
    let (mut hits, mut total) = (0usize, 0usize);
    for (k, e) in est.into_iter().enumerate() {
        let (mu, lam) = match &refs {
            Some(refs) => refs[k],
            None => th.quantiles((e.row as f64 - 0.5) / n as f64, (e.col as f64 - 0.5) / big_n as f64)?,
        };
        let ev = th.evaluate(mu, lam, false)?;
        let mut row: Vec<Cell> =
            vec![e.target.x.into(), e.target.y.into(), e.row.into(), e.col.into(), lam.into(), mu.into()];
        let mut within = 0usize;
        let status = match &ev.triple {
            Ok(o) => {
                for (th_val, est) in [(o.vbar, e.v), (o.ubar, e.u), (o.wbar, e.w)] {
                    if (est.value - th_val).abs() <= 3.0 * est.stderr {
                        within += 1;
                    }
                    row.extend([th_val.into(), est.value.into(), est.stderr.into()]);
                }
                hits += within;
                total += 3;
                "ok".to_string()
            }
            Err(s) => {
                for est in [e.v, e.u, e.w] {
                    row.extend([Cell::Null, est.value.into(), est.stderr.into()]);
                }
                s.clone()
            }
        };
        row.push(if ev.triple.is_ok() { within.into() } else { Cell::Null });
        row.push(Cell::Text(status));
        table.push(row);
    }
    let fraction = if total == 0 { 0.0 } else { hits as f64 / total as f64 };
    table.meta("within_3se", format!("{hits}/{total}"));
    Ok((table, fraction))
}

pub fn burgers_check(a: &BurgersArgs) -> Result<Table> {
    let r = ratios(&a.ratios)?;
    let (spec, _) = finite_setup(&r, &a.matrix, DEFAULT_SDE_ROWS)?;
    let (lo, hi) = a.z_range;
    if a.grid == 0 || !(lo <= hi) {
        return Err(usage("z grid is empty"));
    }
    let grid = z_grid(lo, hi, a.z_imag, a.grid);
    let rep = burgers_validate(&spec, r.t, a.steps, &grid, a.seed)?;
    let mut table = Table::new(&[
        "re",
        "im",
        "theory_re",
        "theory_im",
        "sde_re",
        "sde_im",
        "direct_re",
        "direct_im",
        "sde_dev",
        "direct_dev",
        "residual",
    ]);
    header(&mut table, "burgers-check", a);
    table.meta("seed", a.seed);
    dims_meta(&mut table, &spec);
    table.meta("ks_statistic", crate::output::format_float(rep.ks_statistic));
    table.meta("max_deviation", crate::output::format_float(rep.max_deviation()));
    table.meta("max_residual", crate::output::format_float(rep.max_residual()));
    for p in &rep.points {
        table.push(vec![
            p.z.re.into(),
            p.z.im.into(),
            p.theory.re.into(),
            p.theory.im.into(),
            p.sde.re.into(),
            p.sde.im.into(),
            p.direct.re.into(),
            p.direct.im.into(),
            p.sde_deviation().into(),
            p.direct_deviation().into(),
            p.residual.into(),
        ]);
    }
    Ok(table)
}
