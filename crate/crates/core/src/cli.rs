//! Command-line front end. Data goes to the output stream as CSV (or JSON),
//! diagnostics to the error stream.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::domain::{build_disk, BoundaryPerturbation, Domain2D, DomainSpec};
use crate::error::{Error, Result};
use crate::field::{Conductivity, Poly2};
use crate::greenop::{
    neumann_series_helmholtz, neumann_series_schrodinger, KernelOperator, QuadratureMesh, DEFAULT_MESH,
};
use crate::harness::{emit_plot, emit_report, run_convergence, run_oracle_suite, OracleRow, ReportFormat, Scenario};
use crate::keyvalue::parse_point;
use crate::solver::{GreenCache, GreenSolver, DEFAULT_H};
use crate::variation::{
    beltrami_delta_grad, beltrami_delta_lap, growth_dgdt_with, hadamard_delta_weighted_at, hadamard_delta_with,
    sign_convention_adapter, GreenBackend, VariationResult,
};
use crate::Point;

pub const THREADS_ENV: &str = "GREENPERTURB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "greenperturb", version, about = "Green functions of planar domains and their first variations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate g(z, w): closed form on disks, grid solve otherwise.
    Green(GreenArgs),
    /// Hadamard variation under the boundary motion ζ → ζ + εp(ζ)n(ζ).
    Hadamard(HadamardArgs),
    /// Neumann series for the Green function of Δ − a, with a direct solve.
    Helmholtz(HelmholtzArgs),
    /// Neumann series for the Green function of Δ − εp, with a direct solve.
    Schrodinger(SchrodingerArgs),
    /// Variation under Δ → ∇·(1 + εp)∇, gradient or Laplacian form.
    Beltrami(BeltramiArgs),
    /// dg/dt(z, 0) for Laplacian (or elliptic) growth from a source at 0.
    Growth(GrowthArgs),
    /// Run a convergence study from a scenario file; writes a report and an SVG plot.
    Converge(ConvergeArgs),
    /// Run the closed-form oracle suite; exit 0 iff every check passes.
    Selftest,
}

fn point_arg(s: &str) -> std::result::Result<Point, String> {
    parse_point(s).ok_or_else(|| format!("'{s}' is not a point (examples: 0.5, -0.2i, 0.3-0.4i)"))
}

fn poly_arg(s: &str) -> std::result::Result<Poly2, String> {
    Poly2::parse(s).ok_or_else(|| format!("'{s}' is not a polynomial (format 'c:i:j, ...' for c·x^i·y^j)"))
}

#[derive(Debug, Args)]
pub struct DomainArgs {
    /// Domain spec file (key = value lines: kind, radius, rho_a0/rho_cos/rho_sin, p_a0/p_cos/p_sin).
    #[arg(long, value_name = "FILE", conflicts_with = "disk")]
    pub domain: Option<PathBuf>,
    /// Disk radius (length units); the unit disk is used when neither --disk nor --domain is given.
    #[arg(long, value_name = "R")]
    pub disk: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Grid spacing for numerical Green functions (length units).
    #[arg(long, default_value_t = DEFAULT_H)]
    pub h: f64,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    /// Evaluation point(s) z; repeat the flag for several.
    #[arg(long = "z", value_name = "POINT", required = true, value_parser = point_arg, allow_hyphen_values = true)]
    pub z: Vec<Point>,
    /// Pole(s) w; either one (shared by every z) or one per z.
    #[arg(long = "w", value_name = "POINT", required = true, value_parser = point_arg, allow_hyphen_values = true)]
    pub w: Vec<Point>,
}

#[derive(Debug, Args)]
pub struct GreenArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub pairs: PairArgs,
    /// Use the grid solver even on disks.
    #[arg(long)]
    pub numeric: bool,
}

#[derive(Debug, Args)]
pub struct HadamardArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub pairs: PairArgs,
    /// Constant normal speed p (dimensionless, > 0); the domain file's p_* keys are used otherwise, then p ≡ 1.
    #[arg(long, value_name = "P")]
    pub p: Option<f64>,
    /// Boundary quadrature nodes.
    #[arg(long, default_value_t = 2048)]
    pub n: usize,
    /// Conductivity λ as a polynomial 'c:i:j, ...'; gives the weighted variation.
    #[arg(long, value_name = "POLY", value_parser = poly_arg, conflicts_with = "alt")]
    pub weight: Option<Poly2>,
    /// Report the variation for the g = −ln|z − w| + O(1) convention.
    #[arg(long)]
    pub alt: bool,
}

#[derive(Debug, Args)]
pub struct SeriesArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Probe point(s) z; repeat the flag for several.
    #[arg(long = "z", value_name = "POINT", required = true, value_parser = point_arg, allow_hyphen_values = true)]
    pub z: Vec<Point>,
    /// Pole w.
    #[arg(long, value_name = "POINT", default_value = "0", value_parser = point_arg, allow_hyphen_values = true)]
    pub w: Point,
    /// Maximum number of series terms.
    #[arg(long, default_value_t = 40)]
    pub terms: usize,
    /// Stop when the sup-norm of a term over the probes drops below this.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Radial nodes of the disk quadrature mesh.
    #[arg(long, default_value_t = DEFAULT_MESH.0)]
    pub mesh_s: usize,
    /// Angular nodes of the disk quadrature mesh.
    #[arg(long, default_value_t = DEFAULT_MESH.1)]
    pub mesh_theta: usize,
}

#[derive(Debug, Args)]
pub struct HelmholtzArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    /// Constant potential a (inverse length squared); |a|·‖T‖ must stay below 0.9.
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
}

#[derive(Debug, Args)]
pub struct SchrodingerArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    /// Potential profile p as a polynomial 'c:i:j, ...'.
    #[arg(long, value_name = "POLY", value_parser = poly_arg, default_value = "1:2:0, 1:0:2")]
    pub field: Poly2,
    /// Strength ε of the potential εp.
    #[arg(long, allow_hyphen_values = true)]
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BeltramiForm {
    Grad,
    Lap,
}

#[derive(Debug, Args)]
pub struct BeltramiArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub pairs: PairArgs,
    /// Conductivity perturbation p in λ = 1 + εp, as a polynomial 'c:i:j, ...'.
    #[arg(long, value_name = "POLY", value_parser = poly_arg, default_value = "1:2:0, 1:0:2")]
    pub field: Poly2,
    /// Gradient (area integral of ∇g·∇g) or Laplacian (Δp) form.
    #[arg(long, value_enum, default_value_t = BeltramiForm::Grad)]
    pub form: BeltramiForm,
    /// Radial nodes of the area quadrature mesh.
    #[arg(long, default_value_t = DEFAULT_MESH.0)]
    pub mesh_s: usize,
    /// Angular nodes of the area quadrature mesh.
    #[arg(long, default_value_t = DEFAULT_MESH.1)]
    pub mesh_theta: usize,
}

#[derive(Debug, Args)]
pub struct GrowthArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Evaluation point(s) z; repeat the flag for several.
    #[arg(long = "z", value_name = "POINT", required = true, value_parser = point_arg, allow_hyphen_values = true)]
    pub z: Vec<Point>,
    /// Conductivity λ for elliptic growth, as a polynomial 'c:i:j, ...'.
    #[arg(long, value_name = "POLY", value_parser = poly_arg)]
    pub lambda: Option<Poly2>,
    /// Boundary quadrature nodes.
    #[arg(long, default_value_t = 2048)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    /// Scenario file: domain keys plus perturbation, epsilons, probe_z, probe_w, h, n, mesh_s, mesh_theta, field, threshold, id.
    #[arg(long, value_name = "FILE")]
    pub scenario: PathBuf,
    /// Report path; defaults to <scenario stem>_report.<format> next to the scenario file.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// SVG plot path; defaults to <scenario stem>_report.svg next to the scenario file.
    #[arg(long, value_name = "FILE")]
    pub plot: Option<PathBuf>,
    /// Report format.
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    pub format: String,
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn load_domain(args: &DomainArgs) -> Result<DomainSpec> {
    match (&args.domain, args.disk) {
        (Some(path), _) => DomainSpec::parse(&read_file(path)?),
        (None, r) => Ok(DomainSpec { domain: build_disk(r.unwrap_or(1.0))?, perturbation: None }),
    }
}

fn check_h(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("--h must be positive, got {h}")))
    }
}

fn check_n(n: usize) -> Result<()> {
    if n >= 16 {
        Ok(())
    } else {
        Err(Error::invalid(format!("--n must be at least 16, got {n}")))
    }
}

fn check_inside(d: &Domain2D, pts: &[Point], margin: Option<f64>) -> Result<()> {
    for &p in pts {
        if !d.contains(p) {
            return Err(Error::OutsideDomain { point: p, detail: "command-line point".into() });
        }
        if let Some(m) = margin {
            if d.boundary_distance(p) < m {
                return Err(Error::OutsideDomain {
                    point: p,
                    detail: format!("closer than {m:.3e} to the boundary at this grid spacing"),
                });
            }
        }
    }
    Ok(())
}

fn pairs(args: &PairArgs) -> Result<Vec<(Point, Point)>> {
    match args.w.len() {
        1 => Ok(args.z.iter().map(|&z| (z, args.w[0])).collect()),
        n if n == args.z.len() => Ok(args.z.iter().copied().zip(args.w.iter().copied()).collect()),
        n => Err(Error::invalid(format!("{} z values but {n} w values (give one w or one per z)", args.z.len()))),
    }
}

/// Numeric margins: poles need 4h, evaluation points 2h.
fn check_pairs(d: &Domain2D, pairs: &[(Point, Point)], h: Option<f64>) -> Result<()> {
    let zs: Vec<Point> = pairs.iter().map(|p| p.0).collect();
    let ws: Vec<Point> = pairs.iter().map(|p| p.1).collect();
    check_inside(d, &zs, h.map(|h| 2.0 * h))?;
    check_inside(d, &ws, h.map(|h| 4.0 * h))
}

fn write_variations(out: &mut dyn Write, rows: &[VariationResult]) -> Result<()> {
    let mut text = format!("{}\n", VariationResult::CSV_HEADER);
    for r in rows {
        text.push_str(&r.csv_row());
        text.push('\n');
    }
    emit(out, &text)
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|source| Error::Io { path: PathBuf::from("<stdout>"), source })
}

fn cmd_green(a: &GreenArgs, out: &mut dyn Write) -> Result<()> {
    check_h(a.grid.h)?;
    let spec = load_domain(&a.domain)?;
    let d = &spec.domain;
    let pairs = pairs(&a.pairs)?;
    let numeric = a.numeric || d.disk_radius().is_none();
    check_pairs(d, &pairs, numeric.then_some(a.grid.h))?;
    let backend =
        if numeric { GreenBackend::numeric(d, a.grid.h)? } else { GreenBackend::for_domain(d, a.grid.h)? };
    let label = if numeric { "numeric" } else { "analytic" };
    let mut text = String::from("z_re,z_im,w_re,w_im,g,backend\n");
    for (z, w) in pairs {
        let g = backend.green(z, w)?;
        text.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{label}\n", z.re, z.im, w.re, w.im, g));
    }
    emit(out, &text)
}

fn cmd_hadamard(a: &HadamardArgs, out: &mut dyn Write) -> Result<()> {
    check_h(a.grid.h)?;
    check_n(a.n)?;
    let spec = load_domain(&a.domain)?;
    let d = &spec.domain;
    let p = match (a.p, spec.perturbation) {
        (Some(_), Some(_)) => return Err(Error::invalid("--p conflicts with p_* keys in the domain file")),
        (Some(c), None) => BoundaryPerturbation::constant(c)?,
        (None, Some(p)) => p,
        (None, None) => BoundaryPerturbation::constant(1.0)?,
    };
    let pairs = pairs(&a.pairs)?;
    let lambda = a.weight.as_ref().map(|l| Conductivity::new(l.clone(), d)).transpose()?;
    let needs_grid = d.disk_radius().is_none() || lambda.as_ref().is_some_and(|l| l.as_constant().is_none());
    check_pairs(d, &pairs, needs_grid.then_some(a.grid.h))?;
    let mut rows = Vec::with_capacity(pairs.len());
    match &lambda {
        Some(l) => {
            for (z, w) in pairs {
                rows.push(hadamard_delta_weighted_at(d, l, &p, z, w, a.n, a.grid.h)?);
            }
        }
        None => {
            let backend = GreenBackend::for_domain(d, a.grid.h)?;
            for (z, w) in pairs {
                let v = hadamard_delta_with(&backend, &p, z, w, a.n)?;
                rows.push(if a.alt { sign_convention_adapter(v)? } else { v });
            }
        }
    }
    write_variations(out, &rows)
}

fn series_operator(d: &Domain2D, a: &SeriesArgs) -> Result<KernelOperator> {
    match d.disk_radius() {
        Some(_) => KernelOperator::disk(d, a.mesh_s, a.mesh_theta),
        None => KernelOperator::grid(d, a.grid.h),
    }
}

fn series_common(a: &SeriesArgs) -> Result<DomainSpec> {
    check_h(a.grid.h)?;
    if a.terms == 0 {
        return Err(Error::invalid("--terms must be at least 1"));
    }
    if !(a.tol.is_finite() && a.tol > 0.0) {
        return Err(Error::invalid("--tol must be positive"));
    }
    let spec = load_domain(&a.domain)?;
    check_inside(&spec.domain, &a.z, Some(2.0 * a.grid.h))?;
    check_inside(&spec.domain, &[a.w], Some(4.0 * a.grid.h))?;
    Ok(spec)
}

fn write_series(
    out: &mut dyn Write,
    w: Point,
    probes: &[Point],
    series: &crate::greenop::SeriesResult,
    direct: &GreenCache,
) -> Result<()> {
    let g = direct.get(w)?;
    let mut text = String::from("z_re,z_im,w_re,w_im,series,direct,abs_diff,terms,residual_bound\n");
    for (k, z) in probes.iter().enumerate() {
        let s = series.values[k];
        let dv = g.value(*z)?;
        text.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}\n",
            z.re,
            z.im,
            w.re,
            w.im,
            s,
            dv,
            (s - dv).abs(),
            series.terms_used(),
            series.residual_bound
        ));
    }
    emit(out, &text)
}

fn cmd_helmholtz(a: &HelmholtzArgs, out: &mut dyn Write) -> Result<()> {
    let s = &a.series;
    let spec = series_common(s)?;
    let d = &spec.domain;
    let op = series_operator(d, s)?;
    let series = neumann_series_helmholtz(&op, a.a, s.w, &s.z, s.terms, s.tol)?;
    let aa = a.a;
    let direct = GreenCache::new(GreenSolver::laplace(d, s.grid.h)?.with_potential(&move |_| aa)?);
    write_series(out, s.w, &s.z, &series, &direct)
}

fn cmd_schrodinger(a: &SchrodingerArgs, out: &mut dyn Write) -> Result<()> {
    let s = &a.series;
    let spec = series_common(s)?;
    let d = &spec.domain;
    let op = series_operator(d, s)?;
    let p = a.field.clone();
    let series = neumann_series_schrodinger(&op, &|x| p.eval(x), a.eps, s.w, &s.z, s.terms, s.tol)?;
    let (p, eps) = (a.field.clone(), a.eps);
    let direct = GreenCache::new(GreenSolver::laplace(d, s.grid.h)?.with_potential(&move |x| eps * p.eval(x))?);
    write_series(out, s.w, &s.z, &series, &direct)
}

fn cmd_beltrami(a: &BeltramiArgs, out: &mut dyn Write) -> Result<()> {
    check_h(a.grid.h)?;
    let spec = load_domain(&a.domain)?;
    let d = &spec.domain;
    let pairs = pairs(&a.pairs)?;
    let numeric = d.disk_radius().is_none();
    check_pairs(d, &pairs, numeric.then_some(a.grid.h))?;
    let backend = GreenBackend::for_domain(d, a.grid.h)?;
    let mut rows = Vec::with_capacity(pairs.len());
    match a.form {
        BeltramiForm::Grad => {
            let mesh = QuadratureMesh::polar(d, a.mesh_s, a.mesh_theta)?;
            for (z, w) in pairs {
                rows.push(beltrami_delta_grad(&backend, &a.field, z, w, &mesh)?);
            }
        }
        BeltramiForm::Lap => {
            let op = match d.disk_radius() {
                Some(_) => KernelOperator::disk(d, a.mesh_s, a.mesh_theta)?,
                None => KernelOperator::grid(d, a.grid.h)?,
            };
            for (z, w) in pairs {
                rows.push(beltrami_delta_lap(&backend, &op, &a.field, z, w)?);
            }
        }
    }
    write_variations(out, &rows)
}

fn cmd_growth(a: &GrowthArgs, out: &mut dyn Write) -> Result<()> {
    check_h(a.grid.h)?;
    check_n(a.n)?;
    let spec = load_domain(&a.domain)?;
    let d = &spec.domain;
    let lambda = a.lambda.as_ref().map(|l| Conductivity::new(l.clone(), d)).transpose()?;
    let elliptic = lambda.as_ref().filter(|l| l.as_constant() != Some(1.0));
    let numeric = d.disk_radius().is_none() || elliptic.is_some();
    check_inside(d, &a.z, numeric.then_some(2.0 * a.grid.h))?;
    let backend = match elliptic {
        Some(l) => GreenBackend::conductivity(d, l, a.grid.h)?,
        None => GreenBackend::for_domain(d, a.grid.h)?,
    };
    let rows = a.z.iter().map(|&z| growth_dgdt_with(&backend, lambda.as_ref(), z, a.n)).collect::<Result<Vec<_>>>()?;
    write_variations(out, &rows)
}

fn default_sibling(scenario: &Path, suffix: &str) -> PathBuf {
    let stem = scenario.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scenario".into());
    scenario.with_file_name(format!("{stem}_report.{suffix}"))
}

fn cmd_converge(a: &ConvergeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let format: ReportFormat = a.format.parse()?;
    let scenario = Scenario::parse(&read_file(&a.scenario)?)?;
    let report_path = a.output.clone().unwrap_or_else(|| default_sibling(&a.scenario, &a.format));
    let plot_path = a.plot.clone().unwrap_or_else(|| default_sibling(&a.scenario, "svg"));
    let report = run_convergence(&scenario)?;
    emit_report(&report, format, &report_path)?;
    emit_plot(&report, &plot_path)?;
    let _ = writeln!(err, "report: {}\nplot: {}", report_path.display(), plot_path.display());
    emit(
        out,
        &format!(
            "scenario_id,slope,slope_without_largest,threshold,flag\n{},{:.16e},{:.16e},{},{}\n",
            report.scenario_id,
            report.slope,
            report.slope_without_largest,
            report.threshold,
            report.flag.as_str()
        ),
    )
}

/// Runs the oracle suite; `Ok(false)` when a check fails.
fn cmd_selftest(out: &mut dyn Write, err: &mut dyn Write) -> Result<bool> {
    let rows = run_oracle_suite();
    let mut text = format!("{}\n", OracleRow::CSV_HEADER);
    for r in &rows {
        text.push_str(&r.csv_row());
        text.push('\n');
        if let Some(note) = &r.note {
            let _ = writeln!(err, "{}: {note}", r.id);
        }
    }
    emit(out, &text)?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    let _ = writeln!(err, "{} checks, {failed} failed", rows.len());
    Ok(failed == 0)
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("{THREADS_ENV} must be a non-negative integer, got '{raw}'")))?;
    if n > 0 {
        // a pool may already exist when embedded in tests; keep it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                1
            } else {
                let _ = out.write_all(text.as_bytes());
                0
            };
        }
    };
    if let Err(e) = configure_threads() {
        let _ = writeln!(err, "error: {e}");
        return 1;
    }
    // data is buffered so that a failing command leaves the output stream empty
    let mut buf: Vec<u8> = Vec::new();
    let result = match &cli.command {
        Command::Green(a) => cmd_green(a, &mut buf),
        Command::Hadamard(a) => cmd_hadamard(a, &mut buf),
        Command::Helmholtz(a) => cmd_helmholtz(a, &mut buf),
        Command::Schrodinger(a) => cmd_schrodinger(a, &mut buf),
        Command::Beltrami(a) => cmd_beltrami(a, &mut buf),
        Command::Growth(a) => cmd_growth(a, &mut buf),
        Command::Converge(a) => cmd_converge(a, &mut buf, err),
        Command::Selftest => match cmd_selftest(&mut buf, err) {
            Ok(true) => Ok(()),
            Ok(false) => {
                let _ = out.write_all(&buf);
                return 2;
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => match out.write_all(&buf).and_then(|_| out.flush()) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(err, "error: writing output: {e}");
                1
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("greenperturb").chain(args.iter().copied());
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn green_on_unit_disk() {
        let (code, out, _) = run_capture(&["green", "--disk", "1", "--z", "0", "--w", "0.5"]);
        assert_eq!(code, 0);
        let row = out.lines().nth(1).unwrap();
        let g: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
        assert!((g - 0.5f64.ln() / std::f64::consts::TAU).abs() < 1e-12);
        assert!((g + 0.1103178).abs() < 1e-7);
    }

    #[test]
    fn usage_errors_exit_one_with_empty_output() {
        for args in [
            vec!["green", "--bogus"],
            vec!["green", "--z", "0"],
            vec!["green", "--z", "2", "--w", "0"],
            vec!["green", "--z", "0", "--w", "0.5", "--h", "-1"],
            vec!["hadamard", "--z", "0", "--w", "0", "--p", "-1"],
            vec!["frobnicate"],
        ] {
            let (code, out, err) = run_capture(&args);
            assert_eq!(code, 1, "{args:?}: {err}");
            assert!(out.is_empty(), "{args:?}");
            assert!(!err.is_empty());
        }
    }

    #[test]
    fn resonance_exits_two() {
        let (code, out, err) = run_capture(&["helmholtz", "--a", "-8", "--z", "0.3", "--h", "0.0625"]);
        assert_eq!(code, 2, "{err}");
        assert!(out.is_empty());
    }

    #[test]
    fn help_goes_to_stdout() {
        let (code, out, _) = run_capture(&["hadamard", "--help"]);
        assert_eq!(code, 0);
        for flag in ["--z", "--w", "--n", "--p", "--h", "--disk", "--domain", "--weight", "--alt"] {
            assert!(out.contains(flag), "{flag}");
        }
        assert!(out.contains("[default: 2048]"));
    }

    #[test]
    fn hadamard_rows_and_alt() {
        let (code, out, _) = run_capture(&["hadamard", "--z", "0", "--w", "0"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().next().unwrap(), VariationResult::CSV_HEADER);
        let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
        assert!((row[4].parse::<f64>().unwrap() + 1.0 / std::f64::consts::TAU).abs() < 1e-9);
        assert_eq!(row[5], "hadamard");
        assert_eq!(row[6], "2048");
        let (_, out, _) = run_capture(&["hadamard", "--z", "0", "--w", "0", "--alt"]);
        let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
        assert!((row[4].parse::<f64>().unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(row[5], "hadamard_alt");
    }
}
