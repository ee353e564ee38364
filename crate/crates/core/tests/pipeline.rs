use std::f64::consts::PI;

use proptest::prelude::*;

use contact_geom_core::calculus::{Identity, SurfaceAnalysis, DEFAULT_BAND};
use contact_geom_core::catalog;
use contact_geom_core::flow::{self, FlowConfig};
use contact_geom_core::samples::{format_samples, parse_samples};
use contact_geom_core::surface::Gauge;

fn closed_form_energy(r: f64) -> f64 {
    4.0 * PI * PI * r.sin() * r.cos() * ((r.tan() - 1.0 / r.tan()) / 2.0).powi(2)
}

#[test]
fn saved_samples_reproduce_the_analysis() {
    let entry = catalog::r_torus(0.6).unwrap();
    let grid = entry.sample(48, 48).unwrap();
    let back = parse_samples(&format_samples(&grid), "copy").unwrap();
    let (a, b) = (SurfaceAnalysis::new(&grid).unwrap(), SurfaceAnalysis::new(&back).unwrap());
    // the copy has no analytic partials, so agreement is at difference accuracy
    for (x, y) in a.k_intrinsic.iter().zip(b.k_intrinsic.iter()) {
        assert!((x - y).abs() < 1e-6);
    }
    for (x, y) in a.beta().iter().zip(b.beta().iter()) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn torus_family_is_flat_with_constant_angle() {
    for r in [0.4, 0.7, 1.1] {
        let grid = catalog::r_torus(r).unwrap().sample(48, 48).unwrap();
        let a = SurfaceAnalysis::new(&grid).unwrap();
        let beta: Vec<f64> = a.beta().iter().copied().collect();
        let spread = beta.iter().copied().fold(f64::NEG_INFINITY, f64::max) - beta.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(spread < 1e-10, "r = {r}: spread {spread}");
        assert!(a.k_intrinsic.iter().all(|k| k.abs() < 1e-8));
        assert!(a.k_extrinsic.iter().all(|k| k.abs() < 1e-6));
    }
}

#[test]
fn perturbed_torus_energy_decreases_monotonically() {
    let config = FlowConfig {
        surface: "clifford".into(),
        params: vec![("eps".into(), 0.05), ("m".into(), 2.0), ("n".into(), 1.0)],
        nu: 24,
        nv: 24,
        max_iterations: 5,
        ..FlowConfig::default()
    };
    let report = flow::descend(&config).unwrap().report;
    assert_eq!(report.energies.len(), report.iterations + 1);
    assert!(report.energies.windows(2).all(|w| w[1] <= w[0]));
    assert!(report.energy_final < report.energy_initial);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn torus_energy_matches_closed_form(r in 0.3f64..1.25) {
        let grid = catalog::r_torus(r).unwrap().sample(64, 64).unwrap();
        let e = flow::willmore_energy(&grid).unwrap();
        prop_assert!((e - closed_form_energy(r)).abs() < 1e-6);
        prop_assert!(e >= 0.0);
    }

    #[test]
    fn identities_do_not_depend_on_the_gauge(cap in 0.1f64..0.4) {
        let grid = catalog::geodesic_sphere_with_cap(cap).unwrap().sample(32, 32).unwrap();
        let a = SurfaceAnalysis::with_gauge(&grid, Gauge::AlongU).unwrap();
        let b = SurfaceAnalysis::with_gauge(&grid, Gauge::AgainstU).unwrap();
        for id in Identity::ALL {
            let (x, y) = (a.evaluate(id, DEFAULT_BAND).linf, b.evaluate(id, DEFAULT_BAND).linf);
            prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{id}: {x} vs {y}");
        }
    }

    #[test]
    fn analysis_is_invariant_under_unitary_motion(phi in -PI..PI, psi in -PI..PI) {
        let entry = catalog::r_torus(0.7).unwrap();
        let grid = entry.sample(32, 32).unwrap();
        let moved = {
            let rot = |x: f64, y: f64, a: f64| (x * a.cos() - y * a.sin(), x * a.sin() + y * a.cos());
            let mut text = String::new();
            let spec = grid.spec;
            text.push_str(&format!(
                "S3SAMPLES v1 {} {} periodic periodic {} {} {} {}\n",
                spec.u.n, spec.v.n, spec.u.start, spec.u.end, spec.v.start, spec.v.end
            ));
            for ((i, j), p) in grid.points().rows() {
                let (u, v) = spec.coords(i, j);
                let (x1, y1) = rot(p.x1, p.y1, phi);
                let (x2, y2) = rot(p.x2, p.y2, psi);
                text.push_str(&format!("{u:e} {v:e} {x1:e} {y1:e} {x2:e} {y2:e}\n"));
            }
            parse_samples(&text, "moved").unwrap()
        };
        let (a, b) = (SurfaceAnalysis::new(&grid).unwrap(), SurfaceAnalysis::new(&moved).unwrap());
        for (x, y) in a.beta().iter().zip(b.beta().iter()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        for (x, y) in a.shape.mean.iter().zip(b.shape.mean.iter()) {
            prop_assert!((x - y).abs() < 1e-7);
        }
    }
}
