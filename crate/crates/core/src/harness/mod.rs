//! Convergence studies that measure the `o(ε)` remainder of each first-order
//! formula, the closed-form oracle suite, and report/plot output.

mod oracle;
mod report;

use rayon::prelude::*;
use serde::Serialize;

use crate::disk::{beltrami_disk_delta, beltrami_disk_delta_origin, green_disk};
use crate::domain::{perturb, BoundaryPerturbation, Domain2D, DomainSpec};
use crate::error::{Error, Result};
use crate::field::{Conductivity, Poly2};
use crate::greenop::{grid_t_green, KernelOperator};
use crate::keyvalue::{parse_point, KeyValues};
use crate::solver::{GreenCache, GreenSolver, DEFAULT_H};
use crate::variation::{beltrami_delta_lap, hadamard_delta_with, GreenBackend, DIAGONAL_EXCLUSION};
use crate::Point;

pub use oracle::{run_oracle_suite, OracleRow};
pub use report::{emit_plot, emit_report, parse_report_csv, render_csv, render_json, render_svg, CsvRecord, ReportFormat};

pub const DEFAULT_EPSILONS: [f64; 4] = [0.04, 0.02, 0.01, 0.005];
pub const DEFAULT_BOUNDARY_NODES: usize = 2048;

/// Relative change of the smallest-ε error under `h → h/2` above which a
/// numeric study is reported as discretization-limited.
pub const FLOOR_GUARD: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Hadamard,
    Helmholtz,
    Schrodinger,
    Beltrami,
}

impl ScenarioKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::Hadamard => "hadamard",
            ScenarioKind::Helmholtz => "helmholtz",
            ScenarioKind::Schrodinger => "schrodinger",
            ScenarioKind::Beltrami => "beltrami",
        }
    }
}

/// What is perturbed, with `ε` the schedule parameter.
#[derive(Debug, Clone)]
pub enum Perturbation {
    /// Boundary moved to `ζ + εp(ζ)n(ζ)`.
    Hadamard(BoundaryPerturbation),
    /// `Δ → Δ − ε`.
    Helmholtz,
    /// `Δ → Δ − εp`.
    Schrodinger(Poly2),
    /// `Δ → ∇·(1 + εp)∇`.
    Beltrami(Poly2),
}

impl Perturbation {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            Perturbation::Hadamard(_) => ScenarioKind::Hadamard,
            Perturbation::Helmholtz => ScenarioKind::Helmholtz,
            Perturbation::Schrodinger(_) => ScenarioKind::Schrodinger,
            Perturbation::Beltrami(_) => ScenarioKind::Beltrami,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub domain: Domain2D,
    pub perturbation: Perturbation,
    /// `(z, w)` pairs; the error is the maximum over them.
    pub probes: Vec<(Point, Point)>,
    /// Strictly decreasing, at least three entries.
    pub epsilons: Vec<f64>,
    pub h: f64,
    /// Boundary nodes for Hadamard quadrature.
    pub boundary_nodes: usize,
    /// Polar mesh for area integrals on disks.
    pub mesh: (usize, usize),
    /// Overrides the default slope threshold.
    pub threshold: Option<f64>,
}

impl Scenario {
    pub fn new(id: impl Into<String>, domain: Domain2D, perturbation: Perturbation, probes: Vec<(Point, Point)>) -> Self {
        Scenario {
            id: id.into(),
            domain,
            perturbation,
            probes,
            epsilons: DEFAULT_EPSILONS.to_vec(),
            h: DEFAULT_H,
            boundary_nodes: DEFAULT_BOUNDARY_NODES,
            mesh: crate::greenop::DEFAULT_MESH,
            threshold: None,
        }
    }

    pub fn kind(&self) -> ScenarioKind {
        self.perturbation.kind()
    }

    /// Whether the perturbed Green function is known in closed form: a disk
    /// whose radius grows uniformly.
    pub fn is_analytic(&self) -> bool {
        match &self.perturbation {
            Perturbation::Hadamard(p) => self.domain.disk_radius().is_some() && p.series().is_constant(),
            _ => false,
        }
    }

    pub fn default_threshold(&self) -> f64 {
        match self.kind() {
            ScenarioKind::Hadamard if self.is_analytic() => 1.9,
            ScenarioKind::Hadamard => 1.5,
            ScenarioKind::Helmholtz | ScenarioKind::Schrodinger => 1.9,
            ScenarioKind::Beltrami => 1.8,
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold.unwrap_or_else(|| self.default_threshold())
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilons.len() < 3 {
            return Err(Error::invalid(format!("ε schedule needs at least 3 entries, got {}", self.epsilons.len())));
        }
        if self.epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::invalid("ε values must be positive and finite"));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invalid("ε schedule must be strictly decreasing"));
        }
        if self.id.is_empty() || self.id.contains([',', '"', '\n', '\r']) {
            return Err(Error::invalid(format!("scenario id '{}' must be non-empty without commas or quotes", self.id)));
        }
        if self.probes.is_empty() {
            return Err(Error::invalid("scenario has no probes"));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::invalid(format!("grid spacing h = {} must be positive", self.h)));
        }
        if self.boundary_nodes < 16 {
            return Err(Error::invalid("boundary quadrature needs at least 16 nodes"));
        }
        if let Some(t) = self.threshold {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::invalid("slope threshold must be positive"));
            }
        }
        let numeric = !self.is_analytic();
        for (k, &(z, w)) in self.probes.iter().enumerate() {
            for (name, x, margin) in [("z", z, 2.0), ("w", w, 4.0)] {
                if !self.domain.contains(x) {
                    return Err(Error::OutsideDomain { point: x, detail: format!("probe {k} ({name})") });
                }
                let dist = self.domain.boundary_distance(x);
                if numeric && dist < margin * self.h {
                    return Err(Error::OutsideDomain {
                        point: x,
                        detail: format!("probe {k} ({name}) is {dist:.3e} from the boundary, needs {margin}h"),
                    });
                }
            }
            let min_sep = match self.kind() {
                ScenarioKind::Beltrami => DIAGONAL_EXCLUSION,
                _ => 0.0,
            };
            if (z - w).norm() <= min_sep {
                return Err(Error::invalid(format!("probe {k} has z = w (or |z − w| below {min_sep})")));
            }
        }
        match &self.perturbation {
            Perturbation::Beltrami(p) => {
                // positivity of 1 + εp for the largest ε
                Conductivity::new(p.one_plus(self.epsilons[0]), &self.domain)?;
            }
            Perturbation::Schrodinger(_) | Perturbation::Helmholtz | Perturbation::Hadamard(_) => {}
        }
        Ok(())
    }

    /// Reads a scenario file: the domain keys plus
    /// `id`, `perturbation`, `epsilons`, `probe_z`, `probe_w`, `h`, `n`,
    /// `mesh_s`, `mesh_theta`, `field`, `threshold`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KeyValues::parse(text)?;
        let spec = DomainSpec::from_keys(&mut kv)?;
        let id = kv.take_str("id").unwrap_or_else(|| "scenario".to_string());
        let kind = kv
            .take_str("perturbation")
            .ok_or_else(|| Error::Parse { line: 0, message: "missing 'perturbation'".into() })?;
        let field = match kv.take_str("field") {
            None => None,
            Some(s) => Some(
                Poly2::parse(&s).ok_or_else(|| Error::Parse { line: 0, message: format!("invalid field '{s}'") })?,
            ),
        };
        let perturbation = match kind.as_str() {
            "hadamard" => {
                if field.is_some() {
                    return Err(Error::Parse { line: 0, message: "'field' is not used by hadamard scenarios".into() });
                }
                let p = match spec.perturbation.clone() {
                    Some(p) => p,
                    None => BoundaryPerturbation::constant(1.0)?,
                };
                Perturbation::Hadamard(p)
            }
            "helmholtz" => {
                if field.is_some() {
                    return Err(Error::Parse { line: 0, message: "'field' is not used by helmholtz scenarios".into() });
                }
                Perturbation::Helmholtz
            }
            "schrodinger" => Perturbation::Schrodinger(field.unwrap_or_else(Poly2::radius_squared)),
            "beltrami" => Perturbation::Beltrami(field.unwrap_or_else(Poly2::radius_squared)),
            other => {
                return Err(Error::Parse { line: 0, message: format!("unknown perturbation '{other}'") });
            }
        };
        if spec.perturbation.is_some() && !matches!(perturbation, Perturbation::Hadamard(_)) {
            return Err(Error::Parse { line: 0, message: "p_* keys apply to hadamard scenarios only".into() });
        }
        let zs = kv.take_list("probe_z", parse_point)?;
        let ws = kv.take_list("probe_w", parse_point)?;
        let probes = match (zs, ws) {
            (Some(zs), Some(ws)) if zs.len() == ws.len() => zs.into_iter().zip(ws).collect(),
            (Some(_), Some(_)) => {
                return Err(Error::Parse { line: 0, message: "probe_z and probe_w differ in length".into() });
            }
            _ => return Err(Error::Parse { line: 0, message: "probe_z and probe_w are required".into() }),
        };
        let mut s = Scenario::new(id, spec.domain, perturbation, probes);
        if let Some(e) = kv.take_f64_list("epsilons")? {
            s.epsilons = e;
        }
        if let Some(h) = kv.take_f64("h")? {
            s.h = h;
        }
        if let Some(n) = kv.take_usize("n")? {
            s.boundary_nodes = n;
        }
        let mesh_s = kv.take_usize("mesh_s")?;
        let mesh_theta = kv.take_usize("mesh_theta")?;
        s.mesh = (mesh_s.unwrap_or(s.mesh.0), mesh_theta.unwrap_or(s.mesh.1));
        s.threshold = kv.take_f64("threshold")?;
        kv.finish()?;
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult {
    pub probe_index: usize,
    pub z: [f64; 2],
    pub w: [f64; 2],
    pub direct_value: f64,
    pub predicted_value: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    /// Maximum of `abs_error` over the probes.
    pub error: f64,
    pub probes: Vec<ProbeResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFlag {
    Pass,
    Fail,
    DiscretizationLimited,
}

impl ReportFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReportFlag::Pass => "pass",
            ReportFlag::Fail => "fail",
            ReportFlag::DiscretizationLimited => "discretization-limited",
        }
    }
}

/// Smallest-ε error at `h` and `h/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FloorCheck {
    pub h: f64,
    pub error_h: f64,
    pub error_half_h: f64,
    pub relative_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub scenario_id: String,
    pub kind: ScenarioKind,
    pub analytic: bool,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log error` against `log ε`.
    pub slope: f64,
    /// RMS residual of that fit.
    pub slope_residual: f64,
    /// Slope with the largest-ε row left out.
    pub slope_without_largest: f64,
    pub threshold: f64,
    pub floor_check: Option<FloorCheck>,
    pub flag: ReportFlag,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.flag == ReportFlag::Pass
    }
}

/// Least-squares line through `(ln x, ln y)`: slope, intercept, RMS residual.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid("slope fit needs at least two points"));
    }
    if ys.iter().any(|y| !(y.is_finite() && *y > 0.0)) {
        return Err(Error::invalid("slope fit needs positive finite errors"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok((slope, intercept, (rss / n).sqrt()))
}

/// Unperturbed values `g(z, w)` and variations `δg(z, w)` at the probes.
struct Baseline {
    g: Vec<f64>,
    delta: Vec<f64>,
}

/// Direct and predicted values for one ε at grid spacing `h`.
fn evaluate_row(s: &Scenario, base: &Baseline, eps: f64, h: f64) -> Result<Vec<(f64, f64)>> {
    let predicted = |k: usize| base.g[k] + eps * base.delta[k];
    let direct: Vec<f64> = match &s.perturbation {
        Perturbation::Hadamard(p) => {
            if s.is_analytic() {
                let r = s.domain.disk_radius().expect("analytic scenarios are disks") + eps * p.series().a0();
                s.probes.iter().map(|&(z, w)| green_disk(r, z, w)).collect::<Result<_>>()?
            } else {
                let moved = perturb(&s.domain, p, eps)?;
                let cache = GreenCache::new(GreenSolver::laplace(&moved, h)?);
                s.probes.iter().map(|&(z, w)| cache.get(w)?.value(z)).collect::<Result<_>>()?
            }
        }
        Perturbation::Helmholtz => {
            let solver = GreenSolver::laplace(&s.domain, h)?.with_potential(&|_| eps)?;
            let cache = GreenCache::new(solver);
            s.probes.iter().map(|&(z, w)| cache.get(w)?.value(z)).collect::<Result<_>>()?
        }
        Perturbation::Schrodinger(p) => {
            let p = p.clone();
            let solver = GreenSolver::laplace(&s.domain, h)?.with_potential(&move |x| eps * p.eval(x))?;
            let cache = GreenCache::new(solver);
            s.probes.iter().map(|&(z, w)| cache.get(w)?.value(z)).collect::<Result<_>>()?
        }
        Perturbation::Beltrami(p) => {
            let lambda = Conductivity::new(p.one_plus(eps), &s.domain)?;
            let cache = GreenCache::new(GreenSolver::laplace(&s.domain, h)?.with_conductivity(&lambda)?);
            s.probes.iter().map(|&(z, w)| cache.get(w)?.value(z)).collect::<Result<_>>()?
        }
    };
    Ok(direct.into_iter().enumerate().map(|(k, d)| (d, predicted(k))).collect())
}

/// `g` and `δg` at the probes; numeric `g` is taken on the same grid as the
/// perturbed solve so that the discretization error largely cancels.
fn baseline(s: &Scenario, h: f64) -> Result<Baseline> {
    let n = s.probes.len();
    let mut g = Vec::with_capacity(n);
    let mut delta = Vec::with_capacity(n);
    match &s.perturbation {
        Perturbation::Hadamard(p) => {
            let backend = GreenBackend::for_domain(&s.domain, h)?;
            let plain = if s.is_analytic() { None } else { Some(GreenCache::new(GreenSolver::laplace(&s.domain, h)?)) };
            for &(z, w) in &s.probes {
                g.push(match &plain {
                    None => backend.green(z, w)?,
                    Some(cache) => cache.get(w)?.value(z)?,
                });
                delta.push(hadamard_delta_with(&backend, p, z, w, s.boundary_nodes)?.value);
            }
        }
        Perturbation::Helmholtz | Perturbation::Schrodinger(_) => {
            // T on the same grid: the prediction is the first term of the
            // discrete Neumann series.
            let op = KernelOperator::grid(&s.domain, h)?;
            let mult: Box<dyn Fn(Point) -> f64 + Sync> = match &s.perturbation {
                Perturbation::Schrodinger(p) => {
                    let p = p.clone();
                    Box::new(move |x| p.eval(x))
                }
                _ => Box::new(|_| 1.0),
            };
            let solver = op.grid_solver().expect("grid backend");
            for &(z, w) in &s.probes {
                g.push(solver.laplace_green(w)?.value(z)?);
                delta.push(grid_t_green(&op, &*mult, w)?.eval_cubic(z)?.0);
            }
        }
        Perturbation::Beltrami(p) => {
            let solver = GreenSolver::laplace(&s.domain, h)?;
            let scale = p.as_radius_squared_multiple().filter(|_| s.domain.disk_radius() == Some(1.0));
            let lap = match scale {
                Some(_) => None,
                None => {
                    let backend = GreenBackend::for_domain(&s.domain, h)?;
                    let op = match s.domain.disk_radius() {
                        Some(_) => KernelOperator::disk(&s.domain, s.mesh.0, s.mesh.1)?,
                        None => KernelOperator::grid(&s.domain, h)?,
                    };
                    Some((backend, op))
                }
            };
            for &(z, w) in &s.probes {
                g.push(solver.laplace_green(w)?.value(z)?);
                let d = match (scale, &lap) {
                    (Some(c), _) if w == Point::new(0.0, 0.0) => c * beltrami_disk_delta_origin(z)?,
                    (Some(c), _) if z == Point::new(0.0, 0.0) => c * beltrami_disk_delta_origin(w)?,
                    (Some(c), _) => c * beltrami_disk_delta(z, w)?,
                    (None, Some((backend, op))) => beltrami_delta_lap(backend, op, p, z, w)?.value,
                    (None, None) => unreachable!("either a closed form or a quadrature backend"),
                };
                delta.push(d);
            }
        }
    }
    Ok(Baseline { g, delta })
}

fn max_error(values: &[(f64, f64)]) -> f64 {
    values.iter().map(|(d, p)| (d - p).abs()).fold(0.0, f64::max)
}

/// Runs the ε schedule (rows in parallel), fits the slope and, for numeric
/// studies, reruns the smallest ε at `h/2` as a discretization-floor guard.
pub fn run_convergence(s: &Scenario) -> Result<ConvergenceReport> {
    s.validate()?;
    let base = baseline(s, s.h)?;
    let values: Vec<Vec<(f64, f64)>> = s
        .epsilons
        .par_iter()
        .map(|&eps| {
            evaluate_row(s, &base, eps, s.h).map_err(|e| Error::AtEpsilon { epsilon: eps, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    let rows: Vec<ConvergenceRow> = s
        .epsilons
        .iter()
        .zip(&values)
        .map(|(&epsilon, vals)| ConvergenceRow {
            epsilon,
            error: max_error(vals),
            probes: vals
                .iter()
                .enumerate()
                .map(|(k, &(direct_value, predicted_value))| {
                    let (z, w) = s.probes[k];
                    ProbeResult {
                        probe_index: k,
                        z: [z.re, z.im],
                        w: [w.re, w.im],
                        direct_value,
                        predicted_value,
                        abs_error: (direct_value - predicted_value).abs(),
                    }
                })
                .collect(),
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let (slope, _, slope_residual) = fit_loglog(&xs, &ys)?;
    let (slope_without_largest, _, _) = fit_loglog(&xs[1..], &ys[1..])?;

    let floor_check = if s.is_analytic() {
        None
    } else {
        let half = s.h / 2.0;
        let eps = *s.epsilons.last().expect("validated schedule");
        let fine = max_error(&evaluate_row(s, &baseline(s, half)?, eps, half)?);
        let coarse = *ys.last().expect("validated schedule");
        Some(FloorCheck { h: s.h, error_h: coarse, error_half_h: fine, relative_change: (fine - coarse).abs() / coarse })
    };
    let threshold = s.threshold();
    let flag = match floor_check {
        Some(f) if f.relative_change > FLOOR_GUARD => ReportFlag::DiscretizationLimited,
        _ if slope >= threshold => ReportFlag::Pass,
        _ => ReportFlag::Fail,
    };
    Ok(ConvergenceReport {
        scenario_id: s.id.clone(),
        kind: s.kind(),
        analytic: s.is_analytic(),
        rows,
        slope,
        slope_residual,
        slope_without_largest,
        threshold,
        floor_check,
        flag,
    })
}
