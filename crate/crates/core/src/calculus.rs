//! Discrete operators in the adapted frame and the curvature identities
//! that minimal surfaces in S³ satisfy.
//!
//! All derivatives use the grid stencils from [`crate::stencil`]. Masked
//! nodes carry NaN frames, so any value whose stencil touches one comes out
//! non-finite and is excluded (and counted) by the identity checks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ambient::C2;
use crate::error::{GeomError, Result};
use crate::grid::{Field, GridSpec, ScalarField, Topology};
use crate::stencil::{Differ, FIRST_WIDTH};
use crate::surface::{
    contact_angle_field_from, oriented_normal, tangent_field, FrameGrid, Gauge, SurfaceGrid, TangentField,
};

/// Smallest admissible `det g`.
pub const METRIC_DET_MIN: f64 = 1e-12;
/// Default half-width of the excluded band around `β = π/2 (mod π)`.
pub const DEFAULT_BAND: f64 = 1e-3;
/// Minimum observed refinement order for a passing identity.
pub const MIN_ORDER: f64 = 1.7;
/// Residuals below this at every level are resolved to round-off; the
/// refinement order is not meaningful there.
pub const RESOLVED_FLOOR: f64 = 1e-9;

/// First fundamental form `[[E, F], [F, G]]` at one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric2 {
    pub e: f64,
    pub f: f64,
    pub g: f64,
}

impl Metric2 {
    pub fn from_tangents(xu: C2, xv: C2) -> Self {
        Metric2 { e: xu.dot(xu), f: xu.dot(xv), g: xv.dot(xv) }
    }

    pub fn det(&self) -> f64 {
        self.e * self.g - self.f * self.f
    }

    /// `(g^uu, g^uv, g^vv)`.
    pub fn inverse(&self) -> (f64, f64, f64) {
        let d = self.det();
        (self.g / d, -self.f / d, self.e / d)
    }

    /// Coordinates `(a, b)` of a tangent vector `w = a Xu + b Xv`.
    pub fn coords_of(&self, xu: C2, xv: C2, w: C2) -> (f64, f64) {
        let (iuu, iuv, ivv) = self.inverse();
        let (pu, pv) = (w.dot(xu), w.dot(xv));
        (iuu * pu + iuv * pv, iuv * pu + ivv * pv)
    }
}

#[derive(Debug, Clone)]
pub struct MetricField {
    pub g: Field<Metric2>,
}

impl MetricField {
    pub fn from_tangents(t: &TangentField) -> Self {
        MetricField { g: t.xu.zip_map(&t.xv, |&a, &b| Metric2::from_tangents(a, b)) }
    }

    pub fn det(&self) -> ScalarField {
        self.g.map(Metric2::det)
    }

    pub fn sqrt_det(&self) -> ScalarField {
        self.g.map(|m| m.det().max(0.0).sqrt())
    }

    pub fn inverse(&self) -> Field<(f64, f64, f64)> {
        self.g.map(Metric2::inverse)
    }

    fn check(&self) -> Result<()> {
        for ((i, j), m) in self.g.rows() {
            let d = m.det();
            if !(d > METRIC_DET_MIN) {
                return Err(GeomError::DegenerateMetric { node: (i, j), det: d });
            }
        }
        Ok(())
    }
}

pub fn first_fundamental_form(grid: &SurfaceGrid) -> Result<MetricField> {
    Ok(MetricField::from_tangents(&tangent_field(grid)?))
}

/// Shape operator in the orthonormal frame `(e1, e2)`,
/// `S[i][j] = -<∇_{e_i} e3, e_j>` (Weingarten sign, `S = -d e3`).
#[derive(Debug, Clone)]
pub struct ShapeOperatorField {
    pub s: Field<[[f64; 2]; 2]>,
    pub mean: ScalarField,
    pub det: ScalarField,
}

fn directional<T: crate::grid::Lin>(du: &Field<T>, dv: &Field<T>, coeffs: &Field<(f64, f64)>) -> Field<T> {
    let (nu, nv) = coeffs.shape();
    Field::from_fn(nu, nv, |i, j| {
        let (a, b) = *coeffs.get(i, j);
        *du.get(i, j) * a + *dv.get(i, j) * b
    })
}

fn frame_coeffs(metric: &MetricField, tangents: &TangentField, e: &Field<C2>) -> Field<(f64, f64)> {
    let (nu, nv) = e.shape();
    Field::from_fn(nu, nv, |i, j| {
        let (xu, xv) = tangents.at(i, j);
        metric.g.get(i, j).coords_of(xu, xv, *e.get(i, j))
    })
}

pub fn shape_operator(spec: &GridSpec, frames: &FrameGrid, metric: &MetricField) -> ShapeOperatorField {
    let d = Differ::new(spec);
    let (e1, e2, e3) = (frames.e1(), frames.e2(), frames.e3());
    let (du, dv) = (d.du(&e3), d.dv(&e3));
    let c1 = frame_coeffs(metric, &frames.tangents, &e1);
    let c2 = frame_coeffs(metric, &frames.tangents, &e2);
    let d1 = directional(&du, &dv, &c1);
    let d2 = directional(&du, &dv, &c2);
    let (nu, nv) = e1.shape();
    let s = Field::from_fn(nu, nv, |i, j| {
        let (a, b) = (*e1.get(i, j), *e2.get(i, j));
        let (x, y) = (*d1.get(i, j), *d2.get(i, j));
        [[-x.dot(a), -x.dot(b)], [-y.dot(a), -y.dot(b)]]
    });
    let mean = s.map(|m| 0.5 * (m[0][0] + m[1][1]));
    let det = s.map(|m| m[0][0] * m[1][1] - m[0][1] * m[1][0]);
    ShapeOperatorField { s, mean, det }
}

/// Mean curvature from the oriented normal alone; needs no contact frame.
pub fn mean_curvature(grid: &SurfaceGrid, tangents: &TangentField, metric: &MetricField) -> ScalarField {
    let (nu, nv) = (grid.spec.u.n, grid.spec.v.n);
    let normal = Field::from_fn(nu, nv, |i, j| {
        let (xu, xv) = tangents.at(i, j);
        oriented_normal(*grid.points().get(i, j), xu, xv)
    });
    let d = Differ::new(&grid.spec);
    let (nu_d, nv_d) = (d.du(&normal), d.dv(&normal));
    Field::from_fn(nu, nv, |i, j| {
        let (xu, xv) = tangents.at(i, j);
        let (a, b) = (*nu_d.get(i, j), *nv_d.get(i, j));
        let (luu, luv, lvv) = (-a.dot(xu), -0.5 * (a.dot(xv) + b.dot(xu)), -b.dot(xv));
        let (iuu, iuv, ivv) = metric.g.get(i, j).inverse();
        0.5 * (iuu * luu + 2.0 * iuv * luv + ivv * lvv)
    })
}

/// Gaussian curvature from the metric alone (Brioschi formula).
pub fn gaussian_curvature_intrinsic(spec: &GridSpec, metric: &MetricField) -> Result<ScalarField> {
    metric.check()?;
    let d = Differ::new(spec);
    let e = metric.g.map(|m| m.e);
    let f = metric.g.map(|m| m.f);
    let g = metric.g.map(|m| m.g);
    let (eu, ev, fu, fv, gu, gv) = (d.du(&e), d.dv(&e), d.du(&f), d.dv(&f), d.du(&g), d.dv(&g));
    let (evv, guu, fuv) = (d.dvv(&e), d.duu(&g), d.duv(&f));
    let (nu, nv) = e.shape();
    Ok(Field::from_fn(nu, nv, |i, j| {
        let at = |x: &ScalarField| *x.get(i, j);
        let (ee, ff, gg) = (at(&e), at(&f), at(&g));
        let m1 = [
            [-0.5 * at(&evv) + at(&fuv) - 0.5 * at(&guu), 0.5 * at(&eu), at(&fu) - 0.5 * at(&ev)],
            [at(&fv) - 0.5 * at(&gu), ee, ff],
            [0.5 * at(&gv), ff, gg],
        ];
        let m2 = [[0.0, 0.5 * at(&ev), 0.5 * at(&gu)], [0.5 * at(&ev), ee, ff], [0.5 * at(&gu), ff, gg]];
        let det = ee * gg - ff * ff;
        (det3(m1) - det3(m2)) / (det * det)
    }))
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Gauss equation in S³: `K = 1 + det S`.
pub fn gaussian_curvature_extrinsic(shape: &ShapeOperatorField) -> ScalarField {
    shape.det.map(|d| 1.0 + d)
}

/// `(β1, β2) = (dβ(e1), dβ(e2))` for a scalar field.
#[derive(Debug, Clone)]
pub struct FrameGradient {
    pub b1: ScalarField,
    pub b2: ScalarField,
}

impl FrameGradient {
    pub fn norm(&self) -> ScalarField {
        self.b1.zip_map(&self.b2, |a, b| (a * a + b * b).sqrt())
    }
}

pub fn frame_gradient(spec: &GridSpec, field: &ScalarField, frames: &FrameGrid, metric: &MetricField) -> FrameGradient {
    let d = Differ::new(spec);
    let (fu, fv) = (d.du(field), d.dv(field));
    let c1 = frame_coeffs(metric, &frames.tangents, &frames.e1());
    let c2 = frame_coeffs(metric, &frames.tangents, &frames.e2());
    FrameGradient { b1: directional(&fu, &fv, &c1), b2: directional(&fu, &fv, &c2) }
}

/// `Δf = (1/√g) ∂_i(√g g^{ij} ∂_j f)` by nested first-derivative stencils.
pub fn laplace_beltrami(spec: &GridSpec, field: &ScalarField, metric: &MetricField) -> Result<ScalarField> {
    let required = 2 * FIRST_WIDTH;
    for (name, axis) in [("u", &spec.u), ("v", &spec.v)] {
        if axis.topology == Topology::Chart && axis.n < required {
            return Err(GeomError::InsufficientResolution { axis: name, n: axis.n, required });
        }
    }
    let d = Differ::new(spec);
    let (fu, fv) = (d.du(field), d.dv(field));
    let (nu, nv) = field.shape();
    let w = metric.sqrt_det();
    let inv = metric.inverse();
    let flux_u = Field::from_fn(nu, nv, |i, j| {
        let (iuu, iuv, _) = *inv.get(i, j);
        w.get(i, j) * (iuu * fu.get(i, j) + iuv * fv.get(i, j))
    });
    let flux_v = Field::from_fn(nu, nv, |i, j| {
        let (_, iuv, ivv) = *inv.get(i, j);
        w.get(i, j) * (iuv * fu.get(i, j) + ivv * fv.get(i, j))
    });
    let (a, b) = (d.du(&flux_u), d.dv(&flux_v));
    Ok(Field::from_fn(nu, nv, |i, j| (a.get(i, j) + b.get(i, j)) / w.get(i, j)))
}

/// Connection form `θ₂¹(e_k) = <∇_{e_k} e2, e1>` for `k = 1, 2`.
#[derive(Debug, Clone)]
pub struct ConnectionField {
    pub on_e1: ScalarField,
    pub on_e2: ScalarField,
}

pub fn connection_form(spec: &GridSpec, frames: &FrameGrid, metric: &MetricField) -> ConnectionField {
    let d = Differ::new(spec);
    let (e1, e2) = (frames.e1(), frames.e2());
    let (du, dv) = (d.du(&e2), d.dv(&e2));
    let c1 = frame_coeffs(metric, &frames.tangents, &e1);
    let c2 = frame_coeffs(metric, &frames.tangents, &e2);
    let d1 = directional(&du, &dv, &c1);
    let d2 = directional(&du, &dv, &c2);
    ConnectionField {
        on_e1: d1.zip_map(&e1, |x, a| x.dot(*a)),
        on_e2: d2.zip_map(&e1, |x, a| x.dot(*a)),
    }
}

/// `|∇β|² + 4(β1 + 1)`, the right-hand factor in the form used for the
/// existence statement; equals `(β1 + 2)² + β2²` identically.
pub fn laplacian_factor_expanded(b1: f64, b2: f64) -> f64 {
    b1 * b1 + b2 * b2 + 4.0 * (b1 + 1.0)
}

pub fn laplacian_factor(b1: f64, b2: f64) -> f64 {
    (b1 + 2.0).powi(2) + b2 * b2
}

/// Everything derived from one sampled surface.
#[derive(Debug, Clone)]
pub struct SurfaceAnalysis {
    pub spec: GridSpec,
    pub metric: MetricField,
    pub frames: FrameGrid,
    pub shape: ShapeOperatorField,
    pub k_intrinsic: ScalarField,
    pub k_extrinsic: ScalarField,
    pub gradient: FrameGradient,
    pub laplacian_beta: ScalarField,
    pub connection: ConnectionField,
}

impl SurfaceAnalysis {
    pub fn new(grid: &SurfaceGrid) -> Result<Self> {
        Self::with_gauge(grid, Gauge::AlongU)
    }

    pub fn with_gauge(grid: &SurfaceGrid, gauge: Gauge) -> Result<Self> {
        let spec = grid.spec;
        let tangents = tangent_field(grid)?;
        let metric = MetricField::from_tangents(&tangents);
        let k_intrinsic = gaussian_curvature_intrinsic(&spec, &metric)?;
        let frames = contact_angle_field_from(grid, tangents, gauge)?;
        let shape = shape_operator(&spec, &frames, &metric);
        let k_extrinsic = gaussian_curvature_extrinsic(&shape);
        let gradient = frame_gradient(&spec, &frames.beta, &frames, &metric);
        let laplacian_beta = laplace_beltrami(&spec, &frames.beta, &metric)?;
        let connection = connection_form(&spec, &frames, &metric);
        Ok(SurfaceAnalysis { spec, metric, frames, shape, k_intrinsic, k_extrinsic, gradient, laplacian_beta, connection })
    }

    pub fn beta(&self) -> &ScalarField {
        &self.frames.beta
    }

    /// Nodes where `β` lies within `band` of `π/2 (mod π)`.
    pub fn band_mask(&self, band: f64) -> Field<bool> {
        let limit = band.sin();
        self.frames.beta.map(|b| b.is_finite() && b.cos().abs() < limit)
    }

    /// Residual field of an identity; NaN where the identity is not
    /// evaluated.
    pub fn residual(&self, identity: Identity, band: f64) -> ScalarField {
        let (nu, nv) = self.frames.beta.shape();
        let in_band = self.band_mask(band);
        Field::from_fn(nu, nv, |i, j| {
            let at = |x: &ScalarField| *x.get(i, j);
            let (beta, b1, b2) = (at(&self.frames.beta), at(&self.gradient.b1), at(&self.gradient.b2));
            match identity {
                Identity::Curvature => at(&self.k_intrinsic) - (1.0 - (b1 + 1.0).powi(2) - b2 * b2),
                Identity::Gauss => at(&self.k_intrinsic) - at(&self.k_extrinsic),
                Identity::Laplacian | Identity::Connection if *in_band.get(i, j) => f64::NAN,
                Identity::Laplacian => at(&self.laplacian_beta) + beta.tan() * laplacian_factor(b1, b2),
                Identity::Connection => {
                    let t = beta.tan();
                    let r1 = at(&self.connection.on_e1) - t * b2;
                    let r2 = at(&self.connection.on_e2) + t * (b1 + 2.0);
                    r1.abs().max(r2.abs())
                }
            }
        })
    }

    pub fn evaluate(&self, identity: Identity, band: f64) -> IdentityEvaluation {
        let residual = self.residual(identity, band);
        let in_band = self.band_mask(band);
        let uses_band = matches!(identity, Identity::Laplacian | Identity::Connection);
        let (mut masked, mut excluded_band, mut excluded_nonfinite) = (0, 0, 0);
        let mut values = Vec::new();
        for (k, r) in residual.iter().enumerate() {
            if self.frames.mask.as_slice()[k] {
                masked += 1;
            } else if uses_band && in_band.as_slice()[k] {
                excluded_band += 1;
            } else if !r.is_finite() {
                excluded_nonfinite += 1;
            } else {
                values.push(*r);
            }
        }
        let linf = values.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
        let l2 = if values.is_empty() {
            0.0
        } else {
            (values.iter().map(|r| r * r).sum::<f64>() / values.len() as f64).sqrt()
        };
        IdentityEvaluation {
            identity,
            nu: self.spec.u.n,
            nv: self.spec.v.n,
            h: self.spec.u.spacing().max(self.spec.v.spacing()),
            linf,
            l2,
            included: values.len(),
            masked,
            excluded_band,
            excluded_nonfinite,
            residual,
        }
    }

    pub fn minimality(&self) -> MinimalityReport {
        let abs_h: ScalarField = self.shape.mean.map(|h| h.abs());
        let finite: Vec<f64> = abs_h.iter().copied().filter(|h| h.is_finite()).collect();
        let max = finite.iter().fold(0.0_f64, |m, &h| m.max(h));
        let mean = if finite.is_empty() { 0.0 } else { finite.iter().sum::<f64>() / finite.len() as f64 };
        MinimalityReport { abs_h, max, mean }
    }
}

pub fn verify_minimality(grid: &SurfaceGrid) -> Result<MinimalityReport> {
    Ok(SurfaceAnalysis::new(grid)?.minimality())
}

#[derive(Debug, Clone)]
pub struct MinimalityReport {
    pub abs_h: ScalarField,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Identity {
    /// `K = 1 − |∇β + e1|²`.
    Curvature,
    /// `Δβ = −tan β ((β1 + 2)² + β2²)`.
    Laplacian,
    /// `θ₂¹ = tan β (β2 θ¹ − (β1 + 2) θ²)`.
    Connection,
    /// `K_intrinsic = 1 + det S`.
    Gauss,
}

impl Identity {
    pub const ALL: [Identity; 4] = [Identity::Curvature, Identity::Laplacian, Identity::Connection, Identity::Gauss];

    /// Finest-level L∞ bound a passing refinement study must reach.
    pub fn bound(self) -> f64 {
        match self {
            Identity::Curvature => 1e-5,
            Identity::Laplacian => 1e-4,
            Identity::Connection => 1e-4,
            Identity::Gauss => 5e-5,
        }
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Identity::Curvature => "curvature",
            Identity::Laplacian => "laplacian",
            Identity::Connection => "connection",
            Identity::Gauss => "gauss",
        };
        f.write_str(s)
    }
}

impl FromStr for Identity {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Identity::ALL
            .into_iter()
            .find(|id| id.to_string() == s)
            .ok_or_else(|| format!("unknown identity {s:?} (expected curvature|laplacian|connection|gauss)"))
    }
}

#[derive(Debug, Clone)]
pub struct IdentityEvaluation {
    pub identity: Identity,
    pub nu: usize,
    pub nv: usize,
    pub h: f64,
    pub linf: f64,
    pub l2: f64,
    pub included: usize,
    pub masked: usize,
    pub excluded_band: usize,
    pub excluded_nonfinite: usize,
    pub residual: ScalarField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelNorms {
    pub nu: usize,
    pub nv: usize,
    pub h: f64,
    pub linf: f64,
    pub l2: f64,
    pub included: usize,
    pub masked: usize,
    pub excluded_band: usize,
    pub excluded_nonfinite: usize,
}

impl From<&IdentityEvaluation> for LevelNorms {
    fn from(e: &IdentityEvaluation) -> Self {
        LevelNorms {
            nu: e.nu,
            nv: e.nv,
            h: e.h,
            linf: e.linf,
            l2: e.l2,
            included: e.included,
            masked: e.masked,
            excluded_band: e.excluded_band,
            excluded_nonfinite: e.excluded_nonfinite,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub format_version: u32,
    pub identity: Identity,
    pub surface: String,
    pub band: f64,
    pub levels: Vec<LevelNorms>,
    /// Least-squares slope of `ln L∞` against `ln h`; needs three levels.
    pub observed_order: Option<f64>,
    pub observed_order_l2: Option<f64>,
    pub bound: f64,
    pub min_order: f64,
    pub resolved_to_roundoff: bool,
    pub passed: bool,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 3 || xs.len() != ys.len() || ys.iter().chain(xs).any(|v| !(v.is_finite() && *v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

impl IdentityReport {
    pub fn from_evaluations(surface: &str, identity: Identity, band: f64, evals: &[IdentityEvaluation]) -> Self {
        let levels: Vec<LevelNorms> = evals.iter().map(LevelNorms::from).collect();
        let hs: Vec<f64> = levels.iter().map(|l| l.h).collect();
        let observed_order = log_log_slope(&hs, &levels.iter().map(|l| l.linf).collect::<Vec<_>>());
        let observed_order_l2 = log_log_slope(&hs, &levels.iter().map(|l| l.l2).collect::<Vec<_>>());
        let resolved_to_roundoff = !levels.is_empty() && levels.iter().all(|l| l.linf <= RESOLVED_FLOOR);
        let finest = levels.iter().min_by(|a, b| a.h.total_cmp(&b.h)).map(|l| l.linf);
        let bound = identity.bound();
        let order_ok = resolved_to_roundoff || observed_order.is_some_and(|p| p >= MIN_ORDER);
        let passed = levels.len() >= 3 && finest.is_some_and(|r| r <= bound) && order_ok;
        IdentityReport {
            format_version: 1,
            identity,
            surface: surface.to_string(),
            band,
            levels,
            observed_order,
            observed_order_l2,
            bound,
            min_order: MIN_ORDER,
            resolved_to_roundoff,
            passed,
        }
    }
}

/// Evaluates an identity on each grid of a refinement sequence.
pub fn refinement_study(
    surface: &str,
    identity: Identity,
    band: f64,
    grids: impl IntoIterator<Item = SurfaceGrid>,
) -> Result<(IdentityReport, Vec<IdentityEvaluation>)> {
    let mut evals = Vec::new();
    for grid in grids {
        evals.push(SurfaceAnalysis::new(&grid)?.evaluate(identity, band));
    }
    Ok((IdentityReport::from_evaluations(surface, identity, band, &evals), evals))
}
