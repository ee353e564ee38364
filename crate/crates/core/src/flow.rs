//! Descent of the squared-mean-curvature energy `E = ∫ H² dA` over normal
//! displacements, and the constant-angle probe run on its end point.
//!
//! The full mode displaces a fixed base surface along the base normal by a
//! field interpolated (periodic bicubic spline) from a coarse control grid; the
//! energy gradient with respect to the control values is taken by symmetric
//! differences. The r-only mode restricts to the product tori.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambient::C2;
use crate::calculus::{gaussian_curvature_intrinsic, mean_curvature, MetricField};
use crate::catalog::{self, CatalogEntry};
use crate::error::{GeomError, Result};
use crate::grid::{Axis, Field, GridSpec, ScalarField};
use crate::surface::{contact_angle_field_from, oriented_normal, tangent_field, Gauge, SurfaceGrid};

pub const ARMIJO: f64 = 1e-4;
/// Halvings tried before a line search gives up.
pub const MAX_HALVINGS: usize = 60;
pub const MAX_CONTROL: usize = 16;

fn quadrature(spec: &GridSpec, density: &ScalarField) -> f64 {
    let mut total = 0.0;
    for ((i, j), d) in density.rows() {
        if d.is_finite() {
            total += d * spec.u.weight(i) * spec.v.weight(j);
        }
    }
    total
}

/// `Σ √det g · Δu Δv`.
pub fn area(grid: &SurfaceGrid) -> Result<f64> {
    let metric = MetricField::from_tangents(&tangent_field(grid)?);
    Ok(quadrature(&grid.spec, &metric.sqrt_det()))
}

/// Energy, `max |H|` and the `H` field of one surface.
#[derive(Debug, Clone)]
pub struct EnergyState {
    pub energy: f64,
    pub max_h: f64,
    pub mean_curvature: ScalarField,
}

pub fn energy_state(grid: &SurfaceGrid) -> Result<EnergyState> {
    let tangents = tangent_field(grid)?;
    let metric = MetricField::from_tangents(&tangents);
    let h = mean_curvature(grid, &tangents, &metric);
    let density = h.zip_map(&metric.sqrt_det(), |h, w| h * h * w);
    let max_h = h.iter().filter(|x| x.is_finite()).fold(0.0_f64, |m, x| m.max(x.abs()));
    Ok(EnergyState { energy: quadrature(&grid.spec, &density), max_h, mean_curvature: h })
}

/// `Σ H² √det g · Δu Δv`.
pub fn willmore_energy(grid: &SurfaceGrid) -> Result<f64> {
    Ok(energy_state(grid)?.energy)
}

/// Closed form of the energy on the product torus of radius angle `r`.
pub fn r_torus_energy(r: f64) -> f64 {
    let (s, c) = r.sin_cos();
    let h = 0.5 * (r.tan() - 1.0 / r.tan());
    4.0 * std::f64::consts::PI.powi(2) * s * c * h * h
}

fn normals(grid: &SurfaceGrid) -> Result<Field<C2>> {
    let t = tangent_field(grid)?;
    let (nu, nv) = (grid.spec.u.n, grid.spec.v.n);
    Ok(Field::from_fn(nu, nv, |i, j| {
        let (xu, xv) = t.at(i, j);
        oriented_normal(*grid.points().get(i, j), xu, xv)
    }))
}

fn displaced(grid: &SurfaceGrid, normal: &Field<C2>, psi: &ScalarField, step: f64) -> Result<SurfaceGrid> {
    let shift = normal.zip_map(psi, |&n, &p| n * (step * p));
    let points = grid.points().zip_map(&shift, |&z, &d| (z + d).normalized());
    let moved = SurfaceGrid::from_points(grid.spec, grid.label.clone(), points)?;
    match tangent_field(&moved) {
        Ok(_) => Ok(moved),
        Err(GeomError::DegenerateParametrization { node, gram }) => Err(GeomError::StepTooLarge { node, gram }),
        Err(e) => Err(e),
    }
}

/// Moves every node along its unit normal by `step · ψ` and renormalizes
/// onto S³.
pub fn flow_step(grid: &SurfaceGrid, psi: &ScalarField, step: f64) -> Result<SurfaceGrid> {
    assert_eq!(psi.shape(), (grid.spec.u.n, grid.spec.v.n), "displacement does not match grid");
    displaced(grid, &normals(grid)?, psi, step)
}

/// Cardinal functions of periodic cubic-spline interpolation: `w[i][a]` is
/// the weight of control value `a` at grid node `i`. The spline is C², so
/// curvature of the displaced surface has no jumps at the knots.
fn spline_basis(axis: &Axis, m: usize) -> Vec<Vec<f64>> {
    // knot second derivatives M solve (M[a-1] + 4 M[a] + M[a+1]) = 6 (y[a-1] - 2 y[a] + y[a+1]) (unit knot spacing)
    let mut a = vec![vec![0.0; m]; m];
    for k in 0..m {
        a[k][k] = 4.0;
        a[k][(k + 1) % m] += 1.0;
        a[k][(k + m - 1) % m] += 1.0;
    }
    let inv = invert(a);
    // second[k][c]: M at knot k for a unit value at control c
    let second: Vec<Vec<f64>> = (0..m)
        .map(|k| {
            (0..m)
                .map(|c| {
                    (0..m)
                        .map(|l| {
                            let d = if l == c { -2.0 } else { 0.0 }
                                + if (l + m - 1) % m == c { 1.0 } else { 0.0 }
                                + if (l + 1) % m == c { 1.0 } else { 0.0 };
                            inv[k][l] * 6.0 * d
                        })
                        .sum()
                })
                .collect()
        })
        .collect();
    let period = axis.end - axis.start;
    (0..axis.n)
        .map(|i| {
            let s = (axis.coord(i) - axis.start) / period * m as f64;
            let k = (s.floor() as usize).min(m - 1);
            let t = s - k as f64;
            let k1 = (k + 1) % m;
            let mut row = vec![0.0; m];
            row[k] += 1.0 - t;
            row[k1] += t;
            let (ck, ck1) = (((1.0 - t).powi(3) - (1.0 - t)) / 6.0, (t.powi(3) - t) / 6.0);
            for c in 0..m {
                row[c] += ck * second[k][c] + ck1 * second[k1][c];
            }
            row
        })
        .collect()
}

fn invert(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).expect("non-empty");
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        for j in 0..n {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for j in 0..n {
                        a[r][j] -= f * a[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    inv
}

/// Maps `m × m` control values to a displacement field on a periodic grid.
#[derive(Debug, Clone)]
pub struct ControlGrid {
    pub m: usize,
    wu: Vec<Vec<f64>>,
    wv: Vec<Vec<f64>>,
}

impl ControlGrid {
    pub fn new(spec: &GridSpec, m: usize) -> Result<Self> {
        if !spec.is_doubly_periodic() {
            return Err(GeomError::NotPeriodic("control grid needs a doubly periodic surface".into()));
        }
        if !(4..=MAX_CONTROL).contains(&m) {
            return Err(GeomError::InvalidGrid(format!("control resolution {m} outside 4..={MAX_CONTROL}")));
        }
        Ok(ControlGrid { m, wu: spline_basis(&spec.u, m), wv: spline_basis(&spec.v, m) })
    }

    pub fn len(&self) -> usize {
        self.m * self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn field(&self, c: &[f64]) -> ScalarField {
        let m = self.m;
        // contract along v first: t[a][j] = Σ_b c[a][b] wv[j][b]
        let t: Vec<Vec<f64>> = (0..m)
            .map(|a| self.wv.iter().map(|row| (0..m).map(|b| c[a * m + b] * row[b]).sum()).collect())
            .collect();
        Field::from_fn(self.wu.len(), self.wv.len(), |i, j| (0..m).map(|a| self.wu[i][a] * t[a][j]).sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    FixedStep,
    #[default]
    Backtracking,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Full,
    ROnly,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Full => "full",
            Mode::ROnly => "r-only",
        })
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full" => Ok(Mode::Full),
            "r-only" | "r_only" => Ok(Mode::ROnly),
            other => Err(format!("unknown mode {other:?} (expected full|r-only)")),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::FixedStep => "fixed-step",
            Variant::Backtracking => "backtracking",
        })
    }
}

impl FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fixed-step" | "fixed" => Ok(Variant::FixedStep),
            "backtracking" => Ok(Variant::Backtracking),
            other => Err(format!("unknown descent variant {other:?} (expected fixed-step|backtracking)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub surface: String,
    pub params: Vec<(String, f64)>,
    pub nu: usize,
    pub nv: usize,
    /// Initial (backtracking) or constant (fixed-step) step length.
    pub step: f64,
    pub max_iterations: usize,
    /// Stop once `max |H|` falls below this.
    pub tol: f64,
    pub variant: Variant,
    pub mode: Mode,
    /// Control grid resolution per axis in full mode.
    pub control: usize,
    /// Difference step for the energy gradient.
    pub fd_step: f64,
    /// r-only mode also requires `|dE/dr|` below this.
    pub grad_tol: f64,
    pub beta_tol: f64,
    pub k_tol: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            surface: "clifford".into(),
            params: Vec::new(),
            nu: 32,
            nv: 32,
            step: 1.0,
            max_iterations: 500,
            tol: 1e-3,
            variant: Variant::Backtracking,
            mode: Mode::Full,
            control: 8,
            fd_step: 1e-5,
            grad_tol: 1e-10,
            beta_tol: 5e-3,
            k_tol: 5e-3,
        }
    }
}

impl FlowConfig {
    fn validate(&self) -> Result<()> {
        let bad = |name: &str, message: &str| {
            Err(GeomError::InvalidParameter { name: name.to_string(), message: message.to_string() })
        };
        if !(self.step > 0.0 && self.step.is_finite()) {
            return bad("step", "must be positive");
        }
        if !(self.tol > 0.0) {
            return bad("tol", "must be positive");
        }
        if !(self.fd_step > 0.0) {
            return bad("fd_step", "must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaStats {
    pub max: f64,
    pub min: f64,
    pub mean: f64,
    pub spread: f64,
    pub max_abs: f64,
}

impl BetaStats {
    fn of(beta: &ScalarField) -> Self {
        let vals: Vec<f64> = beta.iter().copied().filter(|b| b.is_finite()).collect();
        if vals.is_empty() {
            return BetaStats { max: f64::NAN, min: f64::NAN, mean: f64::NAN, spread: f64::NAN, max_abs: f64::NAN };
        }
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let max_abs = vals.iter().fold(0.0_f64, |m, b| m.max(b.abs()));
        BetaStats { max, min, mean: vals.iter().sum::<f64>() / vals.len() as f64, spread: max - min, max_abs }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub energy: f64,
    pub max_h: f64,
    /// `max |β|` on the current surface.
    pub beta_deviation: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "not applicable",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub verdict: Verdict,
    pub beta_spread: f64,
    pub k_max_abs: f64,
    pub max_h: f64,
    pub beta_tol: f64,
    pub k_tol: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub format_version: u32,
    pub config: FlowConfig,
    pub surface: String,
    pub converged: bool,
    pub stop_reason: String,
    /// Accepted steps.
    pub iterations: usize,
    pub energy_initial: f64,
    pub energy_final: f64,
    /// Energy before the first step and after each accepted step.
    pub energies: Vec<f64>,
    pub max_h_final: f64,
    pub beta: BetaStats,
    pub k_max_abs_final: f64,
    /// Final radius angle in r-only mode.
    pub r_final: Option<f64>,
    pub gradient_norm_final: f64,
    pub probe: ProbeResult,
    pub trace: Vec<TraceRow>,
}

impl FlowReport {
    pub fn trace_csv(&self) -> String {
        use crate::samples::fmt_float;
        let mut out = String::from("iteration,energy,max_h,beta_deviation,step\n");
        for r in &self.trace {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.iteration,
                fmt_float(r.energy),
                fmt_float(r.max_h),
                fmt_float(r.beta_deviation),
                fmt_float(r.step)
            ));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct FlowOutcome {
    pub report: FlowReport,
    pub grid: SurfaceGrid,
}

/// Contact-angle statistics and `max |K|` of a surface.
pub fn surface_stats(grid: &SurfaceGrid) -> Result<(BetaStats, f64)> {
    let tangents = tangent_field(grid)?;
    let metric = MetricField::from_tangents(&tangents);
    let k = gaussian_curvature_intrinsic(&grid.spec, &metric)?;
    let k_max = k.iter().filter(|x| x.is_finite()).fold(0.0_f64, |m, x| m.max(x.abs()));
    let beta = match contact_angle_field_from(grid, tangents, Gauge::AlongU) {
        Ok(f) => BetaStats::of(&f.beta),
        Err(_) => BetaStats::of(&Field::filled(1, 1, f64::NAN)),
    };
    Ok((beta, k_max))
}

/// The constant-angle implication on a surface: if `β` is constant (spread
/// below `beta_tol`) the surface must be flat (`|K| < k_tol`).
pub fn probe_surface(converged: bool, grid: &SurfaceGrid, beta_tol: f64, k_tol: f64) -> Result<ProbeResult> {
    let (beta, k_max) = surface_stats(grid)?;
    let max_h = energy_state(grid)?.max_h;
    let (verdict, message) = if !converged {
        (Verdict::Inconclusive, "flow did not converge".to_string())
    } else if !(beta.spread < beta_tol) {
        (Verdict::NotApplicable, format!("beta non-constant: spread {:.3e} >= {beta_tol:.1e}", beta.spread))
    } else if k_max < k_tol {
        (Verdict::Pass, format!("beta spread {:.3e} < {beta_tol:.1e} and |K| {k_max:.3e} < {k_tol:.1e}", beta.spread))
    } else {
        (Verdict::Fail, format!("beta spread {:.3e} < {beta_tol:.1e} but |K| {k_max:.3e} >= {k_tol:.1e}", beta.spread))
    };
    Ok(ProbeResult { verdict, beta_spread: beta.spread, k_max_abs: k_max, max_h, beta_tol, k_tol, message })
}

pub fn theorem_probe(report: &FlowReport, grid: &SurfaceGrid) -> Result<ProbeResult> {
    probe_surface(report.converged, grid, report.config.beta_tol, report.config.k_tol)
}

/// Parametrized family being optimized.
trait Family: Sync {
    fn surface(&self, x: &[f64]) -> Result<SurfaceGrid>;
    /// Energy, or `+∞` where the parameters leave the admissible set.
    fn energy(&self, x: &[f64]) -> f64 {
        match self.surface(x).and_then(|g| energy_state(&g)) {
            Ok(s) => s.energy,
            Err(_) => f64::INFINITY,
        }
    }
}

struct NormalFamily {
    base: SurfaceGrid,
    normal: Field<C2>,
    control: ControlGrid,
}

impl Family for NormalFamily {
    fn surface(&self, x: &[f64]) -> Result<SurfaceGrid> {
        displaced(&self.base, &self.normal, &self.control.field(x), 1.0)
    }
}

struct TorusFamily {
    nu: usize,
    nv: usize,
}

impl Family for TorusFamily {
    fn surface(&self, x: &[f64]) -> Result<SurfaceGrid> {
        catalog::r_torus(x[0])?.sample(self.nu, self.nv)
    }
}

fn gradient(family: &dyn Family, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .into_par_iter()
        .map(|k| {
            let mut plus = x.to_vec();
            let mut minus = x.to_vec();
            plus[k] += h;
            minus[k] -= h;
            (family.energy(&plus) - family.energy(&minus)) / (2.0 * h)
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(x: &[f64], alpha: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + alpha * b).collect()
}

/// Runs the descent described by `config` and probes the final surface.
pub fn descend(config: &FlowConfig) -> Result<FlowOutcome> {
    config.validate()?;
    let entry = catalog::by_name(&config.surface, &config.params)?;
    let (family, x0): (Box<dyn Family>, Vec<f64>) = match config.mode {
        Mode::Full => {
            let base = entry.sample(config.nu, config.nv)?;
            if !base.spec.is_doubly_periodic() {
                return Err(GeomError::NotPeriodic(entry.label()));
            }
            let control = ControlGrid::new(&base.spec, config.control)?;
            let normal = normals(&base)?;
            let dim = control.len();
            (Box::new(NormalFamily { base, normal, control }), vec![0.0; dim])
        }
        Mode::ROnly => {
            let r = r_only_start(&entry)?;
            (Box::new(TorusFamily { nu: config.nu, nv: config.nv }), vec![r])
        }
    };
    run(config, &entry, family.as_ref(), x0)
}

fn r_only_start(entry: &CatalogEntry) -> Result<f64> {
    match entry.torus_radius() {
        Some(r) if entry.param("eps").is_none() => Ok(r),
        _ => Err(GeomError::UnsupportedMode(entry.label())),
    }
}

fn run(config: &FlowConfig, entry: &CatalogEntry, family: &dyn Family, x0: Vec<f64>) -> Result<FlowOutcome> {
    let r_only = config.mode == Mode::ROnly;
    let mut x = x0;
    let mut grid = family.surface(&x)?;
    let mut state = energy_state(&grid)?;
    let mut grad = gradient(family, &x, config.fd_step);
    let mut trace = Vec::new();
    let beta_dev = |g: &SurfaceGrid| surface_stats(g).map(|(b, _)| b.max_abs).unwrap_or(f64::NAN);
    trace.push(TraceRow { iteration: 0, energy: state.energy, max_h: state.max_h, beta_deviation: beta_dev(&grid), step: 0.0 });
    let mut energies = vec![state.energy];
    let done = |state: &EnergyState, grad: &[f64]| {
        state.max_h < config.tol && (!r_only || dot(grad, grad).sqrt() < config.grad_tol)
    };

    let mut converged = done(&state, &grad);
    let mut stop_reason = if converged { "tolerance reached".to_string() } else { String::new() };
    let mut iterations = 0;
    let mut alpha_prev = config.step;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    while !converged && iterations < config.max_iterations {
        let g2 = dot(&grad, &grad);
        if !(g2 > 0.0) || !g2.is_finite() {
            stop_reason = "vanishing gradient".into();
            break;
        }
        let direction: Vec<f64> = grad.iter().map(|g| -g).collect();
        // Barzilai-Borwein length from the last accepted step
        let mut alpha = match (&prev, config.variant) {
            (Some((s, y)), Variant::Backtracking) => {
                let sy = dot(s, y);
                if sy > 0.0 { dot(s, s) / sy } else { alpha_prev }
            }
            _ => alpha_prev,
        };
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = axpy(&x, alpha, &direction);
            let e = family.energy(&trial);
            let ok = match config.variant {
                Variant::Backtracking => e <= state.energy - ARMIJO * alpha * g2,
                Variant::FixedStep => e.is_finite(),
            };
            if ok {
                accepted = Some(trial);
                break;
            }
            alpha *= 0.5;
        }
        let Some(trial) = accepted else {
            stop_reason = "line search failed".into();
            break;
        };
        let new_grad = gradient(family, &trial, config.fd_step);
        prev = Some((
            trial.iter().zip(&x).map(|(a, b)| a - b).collect(),
            new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect(),
        ));
        x = trial;
        grad = new_grad;
        alpha_prev = alpha;
        grid = family.surface(&x)?;
        state = energy_state(&grid)?;
        iterations += 1;
        energies.push(state.energy);
        trace.push(TraceRow { iteration: iterations, energy: state.energy, max_h: state.max_h, beta_deviation: beta_dev(&grid), step: alpha });
        converged = done(&state, &grad);
        if converged {
            stop_reason = "tolerance reached".into();
        }
    }
    if !converged && stop_reason.is_empty() {
        stop_reason = "iteration limit".into();
    }

    let (beta, k_max) = surface_stats(&grid)?;
    let probe = probe_surface(converged, &grid, config.beta_tol, config.k_tol)?;
    let report = FlowReport {
        format_version: 1,
        config: config.clone(),
        surface: entry.label(),
        converged,
        stop_reason,
        iterations,
        energy_initial: energies[0],
        energy_final: state.energy,
        energies,
        max_h_final: state.max_h,
        beta,
        k_max_abs_final: k_max,
        r_final: r_only.then(|| x[0]),
        gradient_norm_final: dot(&grad, &grad).sqrt(),
        probe,
        trace,
    };
    Ok(FlowOutcome { report, grid })
}

/// Minimizer of the closed-form torus energy on `[lo, hi]` by golden-section
/// search.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

/// Radius angle of the minimal product torus.
pub const CLIFFORD_R: f64 = FRAC_PI_4;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{clifford, geodesic_sphere, perturb, r_torus};
    use std::f64::consts::PI;

    #[test]
    fn areas_match_product_metric() {
        let grid = clifford().sample(32, 32).unwrap();
        assert!((area(&grid).unwrap() - 2.0 * PI * PI).abs() < 1e-6);
        for r in [0.4, 0.6, 1.0] {
            let grid = r_torus(r).unwrap().sample(32, 32).unwrap();
            let exact = 4.0 * PI * PI * r.sin() * r.cos();
            assert!((area(&grid).unwrap() - exact).abs() < 1e-6);
        }
        let tiny = clifford().sample(8, 8).unwrap();
        assert!(area(&tiny).unwrap() > 0.0);
    }

    #[test]
    fn energy_matches_closed_form_on_tori() {
        assert!(willmore_energy(&clifford().sample(32, 32).unwrap()).unwrap() < 1e-10);
        for k in 0..10 {
            let r = 0.3 + 0.1 * k as f64;
            let e = willmore_energy(&r_torus(r).unwrap().sample(64, 64).unwrap()).unwrap();
            assert!((e - r_torus_energy(r)).abs() < 1e-6, "r = {r}: {e} vs {}", r_torus_energy(r));
        }
        let r_star = golden_section_min(r_torus_energy, 0.3, 1.2, 1e-10);
        assert!((r_star - FRAC_PI_4).abs() < 1e-6);
    }

    #[test]
    fn perturbed_clifford_has_positive_energy() {
        let p = perturb(&clifford(), (1, 1), 0.05).unwrap();
        assert!(willmore_energy(&p.sample(32, 32).unwrap()).unwrap() > 0.0);
        let q = perturb(&clifford(), (2, 1), 0.05).unwrap();
        assert!(willmore_energy(&q.sample(32, 32).unwrap()).unwrap() > 1e-4);
    }

    #[test]
    fn zero_displacement_is_identity() {
        let grid = clifford().sample(16, 16).unwrap();
        let moved = flow_step(&grid, &Field::filled(16, 16, 0.0), 1.0).unwrap();
        for (a, b) in grid.points().iter().zip(moved.points().iter()) {
            assert!((*a - *b).norm() < 1e-15);
        }
    }

    #[test]
    fn constant_displacement_moves_along_torus_family() {
        // the oriented normal of the Clifford torus points towards decreasing r
        let grid = clifford().sample(16, 16).unwrap();
        let c = 1e-3;
        let moved = flow_step(&grid, &Field::filled(16, 16, 1.0), c).unwrap();
        for p in moved.points().iter() {
            let r = p.z2().norm().atan2(p.z1().norm());
            assert!((r - (FRAC_PI_4 - c)).abs() < 1e-8, "{r}");
        }
    }

    #[test]
    fn oversized_step_is_rejected() {
        let grid = clifford().sample(16, 16).unwrap();
        let psi = Field::filled(16, 16, 1.0);
        // a unit shift along the normal collapses the torus onto a circle
        assert!(matches!(flow_step(&grid, &psi, 1.0), Err(GeomError::StepTooLarge { .. })));
    }

    #[test]
    fn unit_sphere_invariant_after_steps() {
        let grid = clifford().sample(16, 16).unwrap();
        let psi = Field::from_fn(16, 16, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.01);
        let moved = flow_step(&grid, &psi, 0.5).unwrap();
        assert!(moved.points().iter().all(|p| (p.norm() - 1.0).abs() < 1e-14));
        assert_eq!(moved.spec, grid.spec);
    }

    #[test]
    fn control_grid_reproduces_control_values() {
        let spec = clifford().grid_with(32, 32).unwrap();
        let ctrl = ControlGrid::new(&spec, 8).unwrap();
        let c: Vec<f64> = (0..64).map(|k| (k as f64 * 0.37).sin()).collect();
        let f = ctrl.field(&c);
        for a in 0..8 {
            for b in 0..8 {
                assert!((f.get(4 * a, 4 * b) - c[a * 8 + b]).abs() < 1e-14);
            }
        }
        let ones = ctrl.field(&[1.0; 64]);
        assert!(ones.iter().all(|x| (x - 1.0).abs() < 1e-14));
        assert!(ControlGrid::new(&spec, 32).is_err());
        assert!(ControlGrid::new(&geodesic_sphere().grid, 8).is_err());
    }

    #[test]
    fn r_only_descent_finds_clifford() {
        let config = FlowConfig {
            surface: "rtorus".into(),
            params: vec![("r".into(), FRAC_PI_4 + 0.1)],
            mode: Mode::ROnly,
            ..FlowConfig::default()
        };
        let out = descend(&config).unwrap();
        let r = out.report.r_final.unwrap();
        assert!(out.report.converged, "{:?}", out.report.stop_reason);
        assert!((r - FRAC_PI_4).abs() < 1e-6, "{r}");
        assert!(out.report.energy_final < 1e-12);
        for w in out.report.energies.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn starting_at_clifford_converges_immediately() {
        let out = descend(&FlowConfig::default()).unwrap();
        assert!(out.report.converged);
        assert_eq!(out.report.iterations, 0);
        assert_eq!(out.report.probe.verdict, Verdict::Pass);
    }

    #[test]
    fn zero_iterations_is_not_converged() {
        let config = FlowConfig {
            params: vec![("eps".into(), 0.05), ("m".into(), 2.0)],
            max_iterations: 0,
            ..FlowConfig::default()
        };
        let out = descend(&config).unwrap();
        assert!(!out.report.converged);
        assert_eq!(out.report.probe.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn probe_on_sphere_is_not_applicable() {
        let grid = geodesic_sphere().sample(32, 32).unwrap();
        let p = probe_surface(true, &grid, 5e-3, 5e-3).unwrap();
        assert_eq!(p.verdict, Verdict::NotApplicable);
        assert!(p.k_max_abs > 0.9);
    }

    #[test]
    fn r_only_needs_a_torus() {
        let config = FlowConfig { surface: "geodesic_sphere".into(), mode: Mode::ROnly, ..FlowConfig::default() };
        assert!(matches!(descend(&config), Err(GeomError::UnsupportedMode(_))));
        let bad = FlowConfig { step: 0.0, ..FlowConfig::default() };
        assert!(descend(&bad).is_err());
    }
}
