//! Parametric surfaces in S³ sampled on structured grids, their adapted
//! frames `(e1, e2, e3)` and the contact-angle field.
//!
//! Conventions:
//! * `e3` is the unit normal inside `T S³` oriented so that
//!   `det[z, Xu, Xv, e3] > 0`.
//! * `e1` spans `TS ∩ δ`; its sign is propagated across the grid by
//!   continuity from a seed where `<e1, Xu> >= 0` (see [`Gauge`]).
//! * `e2` completes `(e1, e2)` to a positively oriented basis of `TS`, so
//!   `det[z, e1, e2, e3] = +1`, the orientation of the canonical frame.
//! * `β` is the angle with `e2 = sin β · i e1 + cos β · ξ` and
//!   `e3 = -cos β · i e1 + sin β · ξ`, i.e. `cos β = <ξ, e2>` and
//!   `sin β = <ξ, e3>`. It is stored as a continuous real lift rather than
//!   folded into `[0, π]`.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::ambient::{cross3, UnitSpherePoint, C2};
use crate::error::{GeomError, Result};
use crate::grid::{Field, GridSpec, ScalarField};
use crate::stencil::Differ;

/// Points may deviate this much from unit norm before renormalization.
pub const SAMPLE_TOL: f64 = 1e-6;
/// Minimum Gram determinant of `(Xu, Xv)`.
pub const GRAM_MIN: f64 = 1e-10;
/// Contact degeneracy threshold on `|<ξ, n>|`.
pub const CONTACT_DEGENERACY: f64 = 1.0 - 1e-9;
/// Largest tolerated fraction of contact-degenerate nodes.
pub const MAX_MASKED_FRACTION: f64 = 0.2;

/// First and second parameter derivatives of an immersion at one node.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Partials {
    pub du: C2,
    pub dv: C2,
    pub duu: C2,
    pub duv: C2,
    pub dvv: C2,
}

/// A map from a parameter rectangle into C², meant to land on S³.
pub trait Immersion: Send + Sync {
    fn point(&self, u: f64, v: f64) -> C2;

    /// Analytic partials, when known in closed form.
    fn partials(&self, _u: f64, _v: f64) -> Option<Partials> {
        None
    }
}

impl<F> Immersion for F
where
    F: Fn(f64, f64) -> C2 + Send + Sync,
{
    fn point(&self, u: f64, v: f64) -> C2 {
        self(u, v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartialsSource {
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone)]
pub struct SurfaceGrid {
    pub spec: GridSpec,
    pub label: String,
    points: Field<C2>,
    partials: Option<Field<Partials>>,
}

impl SurfaceGrid {
    /// Builds a grid from points already on S³ (within [`SAMPLE_TOL`]).
    pub fn from_points(spec: GridSpec, label: impl Into<String>, points: Field<C2>) -> Result<Self> {
        assert_eq!(points.shape(), (spec.u.n, spec.v.n), "point field does not match grid");
        let mut normalized = points;
        for k in 0..normalized.as_slice().len() {
            let p = normalized.as_slice()[k];
            let norm = p.norm();
            if !norm.is_finite() || (norm - 1.0).abs() > SAMPLE_TOL {
                return Err(GeomError::OffSphere { node: normalized.node(k), norm });
            }
            normalized.as_mut_slice()[k] = p * (1.0 / norm);
        }
        Ok(SurfaceGrid { spec, label: label.into(), points: normalized, partials: None })
    }

    pub fn points(&self) -> &Field<C2> {
        &self.points
    }

    pub fn point(&self, i: usize, j: usize) -> UnitSpherePoint {
        UnitSpherePoint::assume_unit(*self.points.get(i, j))
    }

    pub fn partials(&self) -> Option<&Field<Partials>> {
        self.partials.as_ref()
    }

    pub fn partials_source(&self) -> PartialsSource {
        if self.partials.is_some() {
            PartialsSource::Analytic
        } else {
            PartialsSource::FiniteDifference
        }
    }

    /// Drops analytic partials so that all derivatives come from the stencils.
    pub fn without_partials(mut self) -> Self {
        self.partials = None;
        self
    }
}

/// Evaluates an immersion on every node and renormalizes onto S³.
pub fn sample(immersion: &dyn Immersion, spec: GridSpec, label: impl Into<String>) -> Result<SurfaceGrid> {
    let (nu, nv) = (spec.u.n, spec.v.n);
    let raw = Field::par_from_fn(nu, nv, |i, j| {
        let (u, v) = spec.coords(i, j);
        immersion.point(u, v)
    });
    let mut grid = SurfaceGrid::from_points(spec, label, raw)?;
    let (u0, v0) = spec.coords(0, 0);
    if immersion.partials(u0, v0).is_some() {
        let partials = Field::par_from_fn(nu, nv, |i, j| {
            let (u, v) = spec.coords(i, j);
            immersion.partials(u, v).expect("immersion provides partials at every node")
        });
        grid.partials = Some(partials);
    }
    Ok(grid)
}

fn project_tangent(z: C2, x: C2) -> C2 {
    x - z * x.dot(z)
}

fn gram(xu: C2, xv: C2) -> f64 {
    xu.norm_sqr() * xv.norm_sqr() - xu.dot(xv).powi(2)
}

/// Tangent vectors `(Xu, Xv)` at every node, projected onto `T_z S³`.
#[derive(Debug, Clone)]
pub struct TangentField {
    pub xu: Field<C2>,
    pub xv: Field<C2>,
}

impl TangentField {
    pub fn at(&self, i: usize, j: usize) -> (C2, C2) {
        (*self.xu.get(i, j), *self.xv.get(i, j))
    }
}

pub fn tangent_field(grid: &SurfaceGrid) -> Result<TangentField> {
    let (xu, xv) = match &grid.partials {
        Some(p) => (p.map(|q| q.du), p.map(|q| q.dv)),
        None => {
            let d = Differ::new(&grid.spec);
            (d.du(&grid.points), d.dv(&grid.points))
        }
    };
    let xu = grid.points.zip_map(&xu, |&z, &x| project_tangent(z, x));
    let xv = grid.points.zip_map(&xv, |&z, &x| project_tangent(z, x));
    for k in 0..xu.as_slice().len() {
        let g = gram(xu.as_slice()[k], xv.as_slice()[k]);
        if !(g >= GRAM_MIN) {
            return Err(GeomError::DegenerateParametrization { node: xu.node(k), gram: g });
        }
    }
    Ok(TangentField { xu, xv })
}

/// Tangent pair at a single node.
pub fn tangent_pair(grid: &SurfaceGrid, i: usize, j: usize) -> Result<(C2, C2)> {
    let (xu, xv) = match &grid.partials {
        Some(p) => (p.get(i, j).du, p.get(i, j).dv),
        None => {
            let d = Differ::new(&grid.spec);
            (d.du_at(&grid.points, i, j), d.dv_at(&grid.points, i, j))
        }
    };
    let z = *grid.points.get(i, j);
    let (xu, xv) = (project_tangent(z, xu), project_tangent(z, xv));
    let g = gram(xu, xv);
    if !(g >= GRAM_MIN) {
        return Err(GeomError::DegenerateParametrization { node: (i, j), gram: g });
    }
    Ok((xu, xv))
}

/// Unit normal inside `T_z S³` with `det[z, Xu, Xv, n] > 0`.
pub fn oriented_normal(z: C2, xu: C2, xv: C2) -> C2 {
    cross3(z, xu, xv).normalized()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptedFramePoint {
    pub e1: C2,
    pub e2: C2,
    pub e3: C2,
    pub beta: f64,
    pub degenerate: bool,
}

impl AdaptedFramePoint {
    fn degenerate() -> Self {
        AdaptedFramePoint { e1: C2::nan(), e2: C2::nan(), e3: C2::nan(), beta: f64::NAN, degenerate: true }
    }

    /// The same frame with `e1` reversed; `e2` follows and `β ↦ π − β`.
    pub fn flipped(&self) -> Self {
        AdaptedFramePoint { e1: -self.e1, e2: -self.e2, e3: self.e3, beta: PI - self.beta, degenerate: self.degenerate }
    }
}

/// Adapted frame and contact angle at one point from a tangent basis.
///
/// The sign of `e1` is fixed locally by `<e1, Xu> >= 0` (falling back to
/// `<e1, Xv> >= 0` when `e1 ⟂ Xu`).
pub fn adapted_frame(z: UnitSpherePoint, xu: C2, xv: C2) -> Result<AdaptedFramePoint> {
    let z = z.coords();
    let xi = z.mul_i();
    let n = oriented_normal(z, xu, xv);
    let alignment = xi.dot(n);
    if !(alignment.abs() <= CONTACT_DEGENERACY) {
        return Err(GeomError::DegenerateContact { alignment });
    }
    let mut e1 = cross3(z, n, xi).normalized();
    let lead = e1.dot(xu);
    if lead < 0.0 || (lead == 0.0 && e1.dot(xv) < 0.0) {
        e1 = -e1;
    }
    // det[z, e1, n, c] > 0 for c = cross3(z, e1, n), so e2 = -c gives det[z, e1, e2, n] > 0
    let e2 = -cross3(z, e1, n).normalized();
    let beta = xi.dot(n).atan2(xi.dot(e2));
    Ok(AdaptedFramePoint { e1, e2, e3: n, beta, degenerate: false })
}

/// Sign convention for `e1` at the flood-fill seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    /// `<e1, Xu> >= 0` at the seed node.
    #[default]
    AlongU,
    /// The opposite global sign.
    AgainstU,
}

#[derive(Debug, Clone)]
pub struct FrameGrid {
    pub frames: Field<AdaptedFramePoint>,
    /// Contact angle; NaN on masked nodes.
    pub beta: ScalarField,
    /// True where the tangent plane coincides with the contact plane.
    pub mask: Field<bool>,
    pub tangents: TangentField,
}

impl FrameGrid {
    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn e1(&self) -> Field<C2> {
        self.frames.map(|f| f.e1)
    }

    pub fn e2(&self) -> Field<C2> {
        self.frames.map(|f| f.e2)
    }

    pub fn e3(&self) -> Field<C2> {
        self.frames.map(|f| f.e3)
    }
}

fn lift_near(angle: f64, reference: f64) -> f64 {
    angle + 2.0 * PI * ((reference - angle) / (2.0 * PI)).round()
}

/// Per-node adapted frames with a continuous `e1` sign and a continuous
/// lift of `β`.
pub fn contact_angle_field(grid: &SurfaceGrid) -> Result<FrameGrid> {
    contact_angle_field_with(grid, Gauge::AlongU)
}

pub fn contact_angle_field_with(grid: &SurfaceGrid, gauge: Gauge) -> Result<FrameGrid> {
    let tangents = tangent_field(grid)?;
    contact_angle_field_from(grid, tangents, gauge)
}

pub fn contact_angle_field_from(grid: &SurfaceGrid, tangents: TangentField, gauge: Gauge) -> Result<FrameGrid> {
    let spec = grid.spec;
    let (nu, nv) = (spec.u.n, spec.v.n);
    let local = Field::par_from_fn(nu, nv, |i, j| {
        let (xu, xv) = tangents.at(i, j);
        adapted_frame(grid.point(i, j), xu, xv).ok()
    });
    let mask = local.map(|f| f.is_none());
    let masked = mask.iter().filter(|&&m| m).count();
    let total = nu * nv;
    if masked as f64 > MAX_MASKED_FRACTION * total as f64 {
        return Err(GeomError::TooManyMasked { masked, total });
    }

    let mut frames = local.map(|f| f.unwrap_or_else(AdaptedFramePoint::degenerate));
    let mut fixed = mask.clone();
    let mut queue = VecDeque::new();
    for seed in 0..total {
        if fixed.as_slice()[seed] {
            continue;
        }
        let (si, sj) = frames.node(seed);
        if gauge == Gauge::AgainstU {
            let f = frames.get(si, sj).flipped();
            *frames.get_mut(si, sj) = f;
        }
        let f = *frames.get(si, sj);
        frames.get_mut(si, sj).beta = lift_near(f.beta, 0.0);
        *fixed.get_mut(si, sj) = true;
        queue.push_back((si, sj));
        while let Some((i, j)) = queue.pop_front() {
            let from = *frames.get(i, j);
            for (a, b) in spec.neighbors(i, j) {
                if *fixed.get(a, b) {
                    continue;
                }
                let mut cand = *frames.get(a, b);
                let agreement: f64 = spec
                    .neighbors(a, b)
                    .filter(|&(p, q)| *fixed.get(p, q) && !*mask.get(p, q))
                    .map(|(p, q)| frames.get(p, q).e1.dot(cand.e1))
                    .sum();
                if agreement < 0.0 {
                    cand = cand.flipped();
                }
                cand.beta = lift_near(cand.beta, from.beta);
                *frames.get_mut(a, b) = cand;
                *fixed.get_mut(a, b) = true;
                queue.push_back((a, b));
            }
        }
    }
    let beta = frames.map(|f| f.beta);
    Ok(FrameGrid { frames, beta, mask, tangents })
}
