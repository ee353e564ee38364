//! Analysis summaries and the per-node `fields.csv` table.

use serde::{Deserialize, Serialize};

use crate::calculus::{Identity, LevelNorms, SurfaceAnalysis};
use crate::catalog::CatalogEntry;
use crate::grid::{GridSpec, ScalarField};
use crate::samples::fmt_float;
use crate::surface::{PartialsSource, SurfaceGrid};

pub const FORMAT_VERSION: u32 = 1;

pub const FIELDS_HEADER: &str = "u,v,x1,y1,x2,y2,beta,K,H,res_curvature,res_laplacian,masked";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub max_abs: f64,
    /// Nodes contributing (finite values only).
    pub count: usize,
}

impl Summary {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let mut s = Summary { min: f64::INFINITY, max: f64::NEG_INFINITY, mean: 0.0, max_abs: 0.0, count: 0 };
        let mut sum = 0.0;
        for x in values.into_iter().filter(|x| x.is_finite()) {
            s.min = s.min.min(x);
            s.max = s.max.max(x);
            s.max_abs = s.max_abs.max(x.abs());
            sum += x;
            s.count += 1;
        }
        if s.count == 0 {
            return Summary { min: 0.0, max: 0.0, mean: 0.0, max_abs: 0.0, count: 0 };
        }
        s.mean = sum / s.count as f64;
        s
    }

    pub fn of_field(f: &ScalarField) -> Self {
        Summary::of(f.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityNorms {
    pub identity: Identity,
    #[serde(flatten)]
    pub norms: LevelNorms,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub format_version: u32,
    pub surface: String,
    pub grid: GridSpec,
    pub partials: PartialsSource,
    pub band: f64,
    pub beta: Summary,
    /// Largest deviation from the entry's closed-form contact angle.
    pub beta_truth_max_error: Option<f64>,
    pub k_intrinsic: Summary,
    pub k_extrinsic: Summary,
    pub mean_curvature: Summary,
    /// `max |S − S_truth|` over nodes, when the entry has a closed form.
    pub shape_operator_max_error: Option<f64>,
    pub masked: usize,
    pub total_nodes: usize,
    pub identities: Vec<IdentityNorms>,
}

impl AnalysisReport {
    pub fn build(grid: &SurfaceGrid, analysis: &SurfaceAnalysis, entry: Option<&CatalogEntry>, band: f64) -> Self {
        let spec = grid.spec;
        let beta_truth_max_error = entry.and_then(|e| {
            let mut worst: Option<f64> = None;
            for ((i, j), b) in analysis.beta().rows() {
                let (u, v) = spec.coords(i, j);
                let t = e.beta_truth(u, v)?;
                if b.is_finite() {
                    worst = Some(worst.unwrap_or(0.0).max((b - t).abs()));
                }
            }
            worst
        });
        let shape_operator_max_error = entry.and_then(|e| e.truth.shape_operator).map(|truth| {
            analysis
                .shape
                .s
                .iter()
                .flat_map(|s| (0..4).map(move |k| (s[k / 2][k % 2] - truth[k / 2][k % 2]).abs()))
                .filter(|x| x.is_finite())
                .fold(0.0, f64::max)
        });
        let identities = Identity::ALL
            .into_iter()
            .map(|id| IdentityNorms { identity: id, norms: LevelNorms::from(&analysis.evaluate(id, band)) })
            .collect();
        AnalysisReport {
            format_version: FORMAT_VERSION,
            surface: grid.label.clone(),
            grid: spec,
            partials: grid.partials_source(),
            band,
            beta: Summary::of_field(analysis.beta()),
            beta_truth_max_error,
            k_intrinsic: Summary::of_field(&analysis.k_intrinsic),
            k_extrinsic: Summary::of_field(&analysis.k_extrinsic),
            mean_curvature: Summary::of_field(&analysis.shape.mean),
            shape_operator_max_error,
            masked: analysis.frames.masked_count(),
            total_nodes: spec.len(),
            identities,
        }
    }

    pub fn identity(&self, id: Identity) -> &LevelNorms {
        &self.identities.iter().find(|n| n.identity == id).expect("every identity is reported").norms
    }
}

/// `fields.csv` contents: one row per node, floats as `%.12e`.
pub fn fields_csv(grid: &SurfaceGrid, analysis: &SurfaceAnalysis, band: f64) -> String {
    let res_k = analysis.residual(Identity::Curvature, band);
    let res_l = analysis.residual(Identity::Laplacian, band);
    let mut out = String::with_capacity(grid.spec.len() * 160);
    out.push_str(FIELDS_HEADER);
    out.push('\n');
    for ((i, j), p) in grid.points().rows() {
        let (u, v) = grid.spec.coords(i, j);
        let nums = [
            u,
            v,
            p.x1,
            p.y1,
            p.x2,
            p.y2,
            *analysis.beta().get(i, j),
            *analysis.k_intrinsic.get(i, j),
            *analysis.shape.mean.get(i, j),
            *res_k.get(i, j),
            *res_l.get(i, j),
        ];
        for x in nums {
            out.push_str(&fmt_float(x));
            out.push(',');
        }
        out.push(if *analysis.frames.mask.get(i, j) { '1' } else { '0' });
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::DEFAULT_BAND;
    use crate::catalog;
    use crate::samples::parse_samples;

    #[test]
    fn clifford_report() {
        let entry = catalog::clifford();
        let grid = entry.sample(32, 32).unwrap();
        let a = SurfaceAnalysis::new(&grid).unwrap();
        let r = AnalysisReport::build(&grid, &a, Some(&entry), DEFAULT_BAND);
        assert!(r.beta.max_abs <= 1e-10);
        assert_eq!(r.masked, 0);
        assert_eq!(r.total_nodes, 1024);
        assert!(r.shape_operator_max_error.unwrap() < 1e-5);
        let json = serde_json::to_string(&r).unwrap();
        let back: AnalysisReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn summary_skips_non_finite() {
        let s = Summary::of([1.0, f64::NAN, -3.0]);
        assert_eq!((s.min, s.max, s.max_abs, s.count), (-3.0, 1.0, 3.0, 2));
        assert_eq!(Summary::of([]).count, 0);
    }

    #[test]
    fn fields_csv_round_trips_beta() {
        let entry = catalog::geodesic_sphere();
        let grid = entry.sample(32, 32).unwrap();
        let a = SurfaceAnalysis::new(&grid).unwrap();
        let csv = fields_csv(&grid, &a, DEFAULT_BAND);
        assert!(csv.starts_with(FIELDS_HEADER));
        assert_eq!(csv.lines().count(), 1 + 32 * 32);
        let back = parse_samples(&csv, "back").unwrap();
        let b = SurfaceAnalysis::new(&back).unwrap();
        for (x, y) in a.beta().iter().zip(b.beta().iter()) {
            assert!((x - y).abs() < 1e-6);
        }
    }
}
