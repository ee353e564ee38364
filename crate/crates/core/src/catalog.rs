//! Built-in analytic surfaces: the Clifford torus, the totally geodesic
//! sphere, the product tori through the Clifford torus, and normal
//! perturbations of the periodic ones.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

use serde::Serialize;

use crate::ambient::C2;
use crate::error::{GeomError, Result};
use crate::grid::{Axis, GridSpec};
use crate::surface::{oriented_normal, sample, Immersion, Partials, SurfaceGrid};

/// Perturbation amplitudes must stay strictly below this.
pub const MAX_AMPLITUDE: f64 = 0.2;
/// Admissible radii for the product torus are `(R_MARGIN, π/2 − R_MARGIN)`.
pub const R_MARGIN: f64 = 0.05;
pub const DEFAULT_CAP: f64 = 0.2;
pub const DEFAULT_RESOLUTION: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    pub min: f64,
    pub max: f64,
    pub integer: bool,
    pub description: &'static str,
}

/// Closed-form values known for an entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    /// Closed form of the contact angle, as text.
    pub beta: Option<String>,
    pub gaussian_curvature: Option<f64>,
    /// `|H|`; the sign depends on the normal orientation.
    pub mean_curvature_abs: Option<f64>,
    /// Shape operator in the adapted frame `(e1, e2)`.
    pub shape_operator: Option<[[f64; 2]; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    /// `(c e^{iu}, s e^{iv})`.
    ProductTorus { c: f64, s: f64 },
    GeodesicSphere,
    Perturbed { base: Box<CatalogEntry>, m: i32, n: i32, eps: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub name: String,
    pub description: String,
    pub schema: Vec<ParamSpec>,
    /// Parameter values this entry was built with.
    pub params: Vec<(String, f64)>,
    pub grid: GridSpec,
    pub truth: GroundTruth,
    kind: Kind,
}

fn periodic_grid(n: usize) -> GridSpec {
    GridSpec::new(Axis::periodic(n, 0.0, 2.0 * PI), Axis::periodic(n, 0.0, 2.0 * PI)).expect("valid default grid")
}

fn perturbation_schema() -> [ParamSpec; 3] {
    [
        ParamSpec {
            name: "eps",
            default: 0.0,
            min: -MAX_AMPLITUDE,
            max: MAX_AMPLITUDE,
            integer: false,
            description: "normal perturbation amplitude eps*sin(m u)*sin(n v)",
        },
        ParamSpec { name: "m", default: 1.0, min: -16.0, max: 16.0, integer: true, description: "perturbation mode along u" },
        ParamSpec { name: "n", default: 1.0, min: -16.0, max: 16.0, integer: true, description: "perturbation mode along v" },
    ]
}

fn product_torus(name: &str, c: f64, s: f64, params: Vec<(String, f64)>, description: &str, schema: Vec<ParamSpec>) -> CatalogEntry {
    let r = s.atan2(c);
    let h = 0.5 * (r.tan() - 1.0 / r.tan());
    let clifford = c == s;
    CatalogEntry {
        name: name.to_string(),
        description: description.to_string(),
        schema,
        params,
        grid: periodic_grid(DEFAULT_RESOLUTION),
        truth: GroundTruth {
            beta: Some("0".into()),
            gaussian_curvature: Some(0.0),
            mean_curvature_abs: Some(if clifford { 0.0 } else { h.abs() }),
            shape_operator: clifford.then_some([[0.0, -1.0], [-1.0, 0.0]]),
        },
        kind: Kind::ProductTorus { c, s },
    }
}

/// The Clifford torus `(√2/2)(e^{iu}, e^{iv})` on `[0, 2π)²`.
pub fn clifford() -> CatalogEntry {
    let mut schema = Vec::new();
    schema.extend(perturbation_schema());
    product_torus(
        "clifford",
        FRAC_1_SQRT_2,
        FRAC_1_SQRT_2,
        Vec::new(),
        "Clifford torus (sqrt2/2)(e^{iu}, e^{iv}); flat, minimal, constant contact angle",
        schema,
    )
}

/// The product torus `(cos r e^{iu}, sin r e^{iv})`. At `r = π/4` it is
/// the Clifford torus, bit for bit.
pub fn r_torus(r: f64) -> Result<CatalogEntry> {
    let (lo, hi) = (R_MARGIN, FRAC_PI_2 - R_MARGIN);
    if !(r > lo && r < hi) {
        return Err(GeomError::RangeError { name: "r", value: r, lo, hi });
    }
    let (c, s) = if r == FRAC_PI_4 { (FRAC_1_SQRT_2, FRAC_1_SQRT_2) } else { (r.cos(), r.sin()) };
    let mut schema = vec![ParamSpec {
        name: "r",
        default: FRAC_PI_4,
        min: lo,
        max: hi,
        integer: false,
        description: "radius angle; pi/4 gives the Clifford torus",
    }];
    schema.extend(perturbation_schema());
    Ok(product_torus(
        "rtorus",
        c,
        s,
        vec![("r".into(), r)],
        "product torus (cos r e^{iu}, sin r e^{iv}); flat, contact angle 0, minimal only at r = pi/4",
        schema,
    ))
}

/// The great sphere `y2 = 0` in the chart
/// `(θ, φ) ↦ (sin θ cos φ, sin θ sin φ, cos θ, 0)`, `θ ∈ [cap, π − cap]`.
pub fn geodesic_sphere() -> CatalogEntry {
    geodesic_sphere_with_cap(DEFAULT_CAP).expect("default cap is valid")
}

pub fn geodesic_sphere_with_cap(cap: f64) -> Result<CatalogEntry> {
    let (lo, hi) = (0.005, 0.5);
    if !(cap >= lo && cap <= hi) {
        return Err(GeomError::RangeError { name: "cap", value: cap, lo, hi });
    }
    let n = DEFAULT_RESOLUTION;
    let grid = GridSpec::new(Axis::chart(n, cap, PI - cap), Axis::periodic(n, 0.0, 2.0 * PI))?;
    Ok(CatalogEntry {
        name: "geodesic_sphere".into(),
        description: "totally geodesic sphere y2 = 0 in polar chart (theta, phi); K = 1, contact angle varies".into(),
        schema: vec![ParamSpec {
            name: "cap",
            default: DEFAULT_CAP,
            min: lo,
            max: hi,
            integer: false,
            description: "polar caps theta < cap and theta > pi - cap are cut from the chart",
        }],
        params: if cap == DEFAULT_CAP { Vec::new() } else { vec![("cap".into(), cap)] },
        grid,
        truth: GroundTruth {
            beta: Some("arcsin(x2) = pi/2 - theta".into()),
            gaussian_curvature: Some(1.0),
            mean_curvature_abs: Some(0.0),
            shape_operator: Some([[0.0, 0.0], [0.0, 0.0]]),
        },
        kind: Kind::GeodesicSphere,
    })
}

/// Moves a periodic entry along its own unit normal by
/// `ε sin(m u) sin(n v)` and renormalizes onto S³. The result has no
/// analytic partials.
pub fn perturb(entry: &CatalogEntry, mode: (i32, i32), eps: f64) -> Result<CatalogEntry> {
    if !eps.is_finite() || eps.abs() >= MAX_AMPLITUDE {
        return Err(GeomError::AmplitudeTooLarge { amplitude: eps });
    }
    if !entry.grid.is_doubly_periodic() {
        return Err(GeomError::NotPeriodic(entry.name.clone()));
    }
    if eps == 0.0 {
        return Ok(entry.clone());
    }
    let mut params = entry.params.clone();
    params.extend([("eps".to_string(), eps), ("m".to_string(), mode.0 as f64), ("n".to_string(), mode.1 as f64)]);
    Ok(CatalogEntry {
        name: entry.name.clone(),
        description: format!("{} with normal perturbation", entry.description),
        schema: entry.schema.clone(),
        params,
        grid: entry.grid,
        truth: GroundTruth { beta: None, gaussian_curvature: None, mean_curvature_abs: None, shape_operator: None },
        kind: Kind::Perturbed { base: Box::new(entry.clone()), m: mode.0, n: mode.1, eps },
    })
}

impl CatalogEntry {
    /// Name plus non-default parameters, e.g. `rtorus(r=0.885)`.
    pub fn label(&self) -> String {
        if self.params.is_empty() {
            return self.name.clone();
        }
        let parts: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{}({})", self.name, parts.join(","))
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| k == name).map(|&(_, v)| v)
    }

    pub fn has_analytic_partials(&self) -> bool {
        !matches!(self.kind, Kind::Perturbed { .. })
    }

    /// Radius angle of a product torus (including the Clifford torus).
    pub fn torus_radius(&self) -> Option<f64> {
        match self.kind {
            Kind::ProductTorus { c, s } => Some(s.atan2(c)),
            _ => None,
        }
    }

    pub fn grid_with(&self, nu: usize, nv: usize) -> Result<GridSpec> {
        self.grid.with_resolution(nu, nv)
    }

    pub fn sample(&self, nu: usize, nv: usize) -> Result<SurfaceGrid> {
        sample(self, self.grid_with(nu, nv)?, self.label())
    }

    /// Closed-form contact angle at a parameter point, where one exists.
    pub fn beta_truth(&self, u: f64, v: f64) -> Option<f64> {
        match &self.kind {
            Kind::ProductTorus { .. } => Some(0.0),
            Kind::GeodesicSphere => Some(self.point(u, v).x2.clamp(-1.0, 1.0).asin()),
            Kind::Perturbed { .. } => None,
        }
    }
}

impl Immersion for CatalogEntry {
    fn point(&self, u: f64, v: f64) -> C2 {
        match &self.kind {
            Kind::ProductTorus { c, s } => C2::new(c * u.cos(), c * u.sin(), s * v.cos(), s * v.sin()),
            Kind::GeodesicSphere => {
                let st = u.sin();
                C2::new(st * v.cos(), st * v.sin(), u.cos(), 0.0)
            }
            Kind::Perturbed { base, m, n, eps } => {
                let z = base.point(u, v);
                let p = base.partials(u, v).expect("perturbation base has analytic partials");
                let normal = oriented_normal(z, p.du, p.dv);
                let bump = eps * (*m as f64 * u).sin() * (*n as f64 * v).sin();
                (z + normal * bump).normalized()
            }
        }
    }

    fn partials(&self, u: f64, v: f64) -> Option<Partials> {
        match &self.kind {
            Kind::ProductTorus { c, s } => {
                let (cu, su, cv, sv) = (u.cos(), u.sin(), v.cos(), v.sin());
                Some(Partials {
                    du: C2::new(-c * su, c * cu, 0.0, 0.0),
                    dv: C2::new(0.0, 0.0, -s * sv, s * cv),
                    duu: C2::new(-c * cu, -c * su, 0.0, 0.0),
                    duv: C2::ZERO,
                    dvv: C2::new(0.0, 0.0, -s * cv, -s * sv),
                })
            }
            Kind::GeodesicSphere => {
                let (ct, st, cp, sp) = (u.cos(), u.sin(), v.cos(), v.sin());
                Some(Partials {
                    du: C2::new(ct * cp, ct * sp, -st, 0.0),
                    dv: C2::new(-st * sp, st * cp, 0.0, 0.0),
                    duu: C2::new(-st * cp, -st * sp, -ct, 0.0),
                    duv: C2::new(-ct * sp, ct * cp, 0.0, 0.0),
                    dvv: C2::new(-st * cp, -st * sp, 0.0, 0.0),
                })
            }
            Kind::Perturbed { .. } => None,
        }
    }
}

pub const NAMES: [&str; 3] = ["clifford", "geodesic_sphere", "rtorus"];

/// Default entries, one per surface family.
pub fn list() -> Vec<CatalogEntry> {
    vec![clifford(), geodesic_sphere(), r_torus(FRAC_PI_4).expect("pi/4 is in range")]
}

/// Builds an entry from its name and `name=value` parameters.
pub fn by_name(name: &str, params: &[(String, f64)]) -> Result<CatalogEntry> {
    let canonical = match name {
        "clifford" => "clifford",
        "geodesic_sphere" | "sphere" => "geodesic_sphere",
        "rtorus" | "r_torus" => "rtorus",
        other => return Err(GeomError::UnknownSurface(other.to_string())),
    };
    let template = match canonical {
        "clifford" => clifford(),
        "geodesic_sphere" => geodesic_sphere(),
        _ => r_torus(FRAC_PI_4)?,
    };
    let mut values: Vec<(&'static str, f64)> = template.schema.iter().map(|p| (p.name, p.default)).collect();
    for (key, value) in params {
        let Some(spec) = template.schema.iter().find(|p| p.name == key) else {
            return Err(GeomError::UnknownParameter { surface: canonical.to_string(), param: key.clone() });
        };
        if spec.integer && value.fract() != 0.0 {
            return Err(GeomError::InvalidParameter { name: key.clone(), message: format!("{value} is not an integer") });
        }
        values.iter_mut().find(|(k, _)| *k == spec.name).expect("schema entry").1 = *value;
    }
    let get = |k: &str| values.iter().find(|(n, _)| *n == k).map(|&(_, v)| v);
    let base = match canonical {
        "clifford" => clifford(),
        "geodesic_sphere" => geodesic_sphere_with_cap(get("cap").unwrap_or(DEFAULT_CAP))?,
        _ => r_torus(get("r").unwrap_or(FRAC_PI_4))?,
    };
    match get("eps") {
        Some(eps) if eps != 0.0 => {
            let mode = (get("m").unwrap_or(1.0) as i32, get("n").unwrap_or(1.0) as i32);
            perturb(&base, mode, eps)
        }
        _ => Ok(base),
    }
}

/// Parses `key=value`.
pub fn parse_param(text: &str) -> Result<(String, f64)> {
    let (key, value) = text.split_once('=').ok_or_else(|| GeomError::InvalidParameter {
        name: text.to_string(),
        message: "expected key=value".into(),
    })?;
    let value = parse_value(value.trim()).ok_or_else(|| GeomError::InvalidParameter {
        name: key.to_string(),
        message: format!("{value:?} is not a number"),
    })?;
    Ok((key.trim().to_string(), value))
}

fn parse_value(s: &str) -> Option<f64> {
    match s {
        "pi/4" => Some(FRAC_PI_4),
        "pi/2" => Some(FRAC_PI_2),
        "pi" => Some(PI),
        _ => s.parse().ok().filter(|v: &f64| v.is_finite()),
    }
}

/// Serializable description used by listings.
#[derive(Debug, Clone, Serialize)]
pub struct EntryInfo {
    pub name: String,
    pub description: String,
    pub params: Vec<ParamSpec>,
    pub grid: GridSpec,
    pub analytic_partials: bool,
    pub ground_truth: GroundTruth,
}

impl From<&CatalogEntry> for EntryInfo {
    fn from(e: &CatalogEntry) -> Self {
        EntryInfo {
            name: e.name.clone(),
            description: e.description.clone(),
            params: e.schema.clone(),
            grid: e.grid,
            analytic_partials: e.has_analytic_partials(),
            ground_truth: e.truth.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{SurfaceAnalysis, DEFAULT_BAND};
    use crate::surface::tangent_field;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn clifford_point_and_moduli() {
        let c = clifford();
        let p = c.point(0.0, 0.0);
        assert_eq!(p, C2::new(FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p = c.point(rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
            assert!((p.z1().norm() - FRAC_1_SQRT_2).abs() < 1e-15);
            assert!((p.z2().norm() - FRAC_1_SQRT_2).abs() < 1e-15);
        }
        assert_eq!(c.beta_truth(1.0, 2.0), Some(0.0));
    }

    #[test]
    fn r_torus_at_quarter_pi_is_clifford() {
        let (c, r) = (clifford(), r_torus(FRAC_PI_4).unwrap());
        for k in 0..50 {
            let (u, v) = (0.13 * k as f64, 0.29 * k as f64);
            assert_eq!(c.point(u, v), r.point(u, v));
            assert_eq!(c.partials(u, v), r.partials(u, v));
        }
        assert!(matches!(r_torus(0.01), Err(GeomError::RangeError { .. })));
        assert!(r_torus(FRAC_PI_2).is_err());
        let third = r_torus(PI / 3.0).unwrap();
        assert!((third.truth.mean_curvature_abs.unwrap() - (3f64.sqrt() - 1.0 / 3f64.sqrt()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_lies_in_y2_zero() {
        let s = geodesic_sphere();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let p = s.point(rng.gen_range(0.2..PI - 0.2), rng.gen_range(0.0..2.0 * PI));
            assert_eq!(p.y2, 0.0);
            assert!((p.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn analytic_partials_match_finite_differences() {
        let h = 1e-5;
        for entry in [clifford(), geodesic_sphere(), r_torus(0.6).unwrap()] {
            for k in 0..20 {
                let (u, v) = (0.3 + 0.11 * k as f64, 0.17 * k as f64);
                let p = entry.partials(u, v).unwrap();
                let f = |a: f64, b: f64| entry.point(a, b);
                let du = (f(u + h, v) - f(u - h, v)) * (0.5 / h);
                let dv = (f(u, v + h) - f(u, v - h)) * (0.5 / h);
                let duu = (f(u + h, v) - f(u, v) * 2.0 + f(u - h, v)) * (1.0 / (h * h));
                let dvv = (f(u, v + h) - f(u, v) * 2.0 + f(u, v - h)) * (1.0 / (h * h));
                let duv = (f(u + h, v + h) - f(u + h, v - h) - f(u - h, v + h) + f(u - h, v - h)) * (0.25 / (h * h));
                assert!((p.du - du).norm() < 1e-9 && (p.dv - dv).norm() < 1e-9, "{}", entry.name);
                assert!((p.duu - duu).norm() < 1e-4 && (p.dvv - dvv).norm() < 1e-4 && (p.duv - duv).norm() < 1e-4);
            }
        }
    }

    #[test]
    fn perturbation_rules() {
        let c = clifford();
        assert_eq!(perturb(&c, (1, 1), 0.0).unwrap(), c);
        assert!(matches!(perturb(&c, (1, 1), 0.5), Err(GeomError::AmplitudeTooLarge { .. })));
        assert!(matches!(perturb(&geodesic_sphere(), (1, 1), 0.05), Err(GeomError::NotPeriodic(_))));
        let p = perturb(&c, (1, 1), 0.05).unwrap();
        assert!(!p.has_analytic_partials());
        assert_eq!(p.label(), "clifford(eps=0.05,m=1,n=1)");
        let grid = p.sample(32, 32).unwrap();
        assert!(grid.partials().is_none());
        let displaced = p.point(PI / 2.0, PI / 2.0);
        assert!((displaced - c.point(PI / 2.0, PI / 2.0)).norm() > 0.04);
    }

    #[test]
    fn lookup_by_name() {
        let e = by_name("rtorus", &[("r".into(), 0.885)]).unwrap();
        assert_eq!(e.label(), "rtorus(r=0.885)");
        assert!((e.torus_radius().unwrap() - 0.885).abs() < 1e-15);
        assert!(matches!(by_name("nosuch", &[]), Err(GeomError::UnknownSurface(_))));
        assert!(matches!(by_name("clifford", &[("r".into(), 0.5)]), Err(GeomError::UnknownParameter { .. })));
        assert!(by_name("clifford", &[("m".into(), 1.5)]).is_err());
        let p = by_name("clifford", &[("eps".into(), 0.05)]).unwrap();
        assert_eq!(p.param("eps"), Some(0.05));
        assert_eq!(by_name("sphere", &[]).unwrap().name, "geodesic_sphere");
        assert_eq!(parse_param("r=pi/4").unwrap(), ("r".to_string(), FRAC_PI_4));
        assert!(parse_param("r").is_err());
        assert!(parse_param("r=abc").is_err());
    }

    #[test]
    fn every_entry_meets_its_ground_truth_at_64() {
        for entry in list().into_iter().chain([r_torus(PI / 3.0).unwrap()]) {
            let grid = entry.sample(64, 64).unwrap();
            let a = SurfaceAnalysis::new(&grid).unwrap();
            let truth = &entry.truth;
            for ((i, j), beta) in a.beta().rows() {
                let (u, v) = grid.spec.coords(i, j);
                assert!((beta - entry.beta_truth(u, v).unwrap()).abs() < 1e-8, "{}", entry.name);
            }
            let k = truth.gaussian_curvature.unwrap();
            assert!(a.k_intrinsic.iter().all(|x| (x - k).abs() < 2e-5), "{}", entry.name);
            assert!(a.k_extrinsic.iter().all(|x| (x - k).abs() < 2e-5), "{}", entry.name);
            let h = truth.mean_curvature_abs.unwrap();
            assert!(a.minimality().abs_h.iter().all(|x| (x - h).abs() < 5e-6), "{}", entry.name);
            if let Some(s) = truth.shape_operator {
                for m in a.shape.s.iter() {
                    for r in 0..2 {
                        for c in 0..2 {
                            assert!((m[r][c] - s[r][c]).abs() < 1e-6, "{}", entry.name);
                        }
                    }
                }
            }
            assert_eq!(a.frames.masked_count(), 0);
            let _ = a.evaluate(crate::calculus::Identity::Curvature, DEFAULT_BAND);
        }
    }

    #[test]
    fn finite_difference_tangents_track_analytic_ones() {
        let entry = geodesic_sphere();
        let grid = entry.sample(64, 64).unwrap();
        let exact = tangent_field(&grid).unwrap();
        let fd = tangent_field(&grid.clone().without_partials()).unwrap();
        for (a, b) in exact.xu.iter().zip(fd.xu.iter()) {
            assert!((*a - *b).norm() < 1e-7);
        }
    }
}
