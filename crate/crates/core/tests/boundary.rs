use std::f64::consts::PI;

use smms::boundary::*;
use smms::field::{JetMap, ScalarField};
use smms::manifold::MetricModel;
use smms::models::{hemisphere, sphere_spherical};
use smms::quadrature::{boundary_grid, volume_grid, weighted_volume_integral};
use smms::random::{random_scalar, rng};
use smms::weighted::{ambient_linear, WeightedSpace};

fn weighted(m: &MetricModel, v: &[f64]) -> WeightedSpace {
    WeightedSpace::new(m.clone(), ambient_linear(m, v).unwrap()).unwrap()
}

#[test]
fn divergence_theorem_for_random_fields() {
    let models = [hemisphere(2, 1.0, PI / 2.0, true), hemisphere(2, 1.0, 0.5, false)];
    for m in &models {
        let ws = weighted(m, &[0.2, -0.1, 0.3]);
        let grid = volume_grid(m, 24).unwrap();
        let b = boundary_grid(m, 24).unwrap();
        for k in 0..10u64 {
            let phi = random_scalar(m, 3, &mut rng(404, k));
            let r = divergence_theorem(&ws, &VectorChoice::Gradient(phi), &grid, &b, 1e-6).unwrap();
            assert!(r.pass, "{} seed {k}: {r:?}", m.name);
        }
    }
}

#[test]
fn pohozaev_schoen_with_bakry_emery_ricci() {
    let m = hemisphere(2, 1.0, PI / 2.0, true);
    let ws = weighted(&m, &[0.0, 0.3, 0.0]);
    let u = ambient_linear(&m, &[1.0, 0.0, 0.0]).unwrap();
    let grid = volume_grid(&m, 24).unwrap();
    let b = boundary_grid(&m, 24).unwrap();
    let r = pohozaev_schoen(&ws, &TensorChoice::BakryEmeryRicci, &VectorChoice::Gradient(u), &grid, &b, 1e-5).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn weighted_mass_of_sphere_converges_spectrally() {
    let m = sphere_spherical(2, 1.0);
    let ws = weighted(&m, &[0.0, 0.6, 0.8]);
    // |v| = 1: ∫ e^{−⟨x,v⟩} dA = 4π sinh 1
    let exact = 4.0 * PI * 1f64.sinh();
    let err: Vec<f64> = [2, 4, 6, 8]
        .iter()
        .map(|&n| {
            let grid = volume_grid(&m, n).unwrap();
            (weighted_volume_integral(&ws, &ScalarField::constant(2, 1.0), &grid).unwrap() - exact).abs()
        })
        .collect();
    for w in err.windows(2) {
        assert!(w[1] < w[0] * 0.1 || w[1] < 1e-13, "{err:?}");
    }
    assert!(err[3] < 1e-9, "{err:?}");
}

#[test]
fn area_gap_grows_with_perturbation() {
    let m = hemisphere(2, 1.0, PI / 2.0, true);
    let ws = weighted(&m, &[0.0, 0.0, 0.0]);
    let grid = volume_grid(&m, 24).unwrap();
    let b = boundary_grid(&m, 24).unwrap();
    let x0 = ambient_linear(&m, &[1.0, 0.0, 0.0]).unwrap();
    let x1 = x0.clone();
    let mut gaps = Vec::new();
    for eps in [0.0, 0.1, 0.2, 0.4] {
        let bump = x1.scale(eps).add_constant(1.0);
        let (a, c) = (x0.clone(), bump.clone());
        let u = ScalarField::analytic(2, move |x| &a.eval(x) * &c.eval(x));
        let r = boundary_area_identity(&ws, &u, &grid, &b, 1e-6).unwrap();
        gaps.push(r.area_form.relative_gap);
    }
    assert!(gaps[0] < 1e-10, "{gaps:?}");
    assert!(gaps.windows(2).all(|w| w[1] > w[0]), "{gaps:?}");
}

#[test]
fn gauss_reduction_is_invariant_under_reparameterization() {
    for angle in [PI / 2.0, 1.0] {
        let m = hemisphere(2, 1.0, angle, true);
        let ws = weighted(&m, &[0.3, 0.1, -0.2]);
        let comp = m.boundary.as_ref().unwrap().components[0].clone();
        let mut other = comp.clone();
        let map = comp.map.clone();
        other.map = JetMap::analytic(1, 2, move |s| map.eval(&[&s[0] + &(s[0].sin() * 0.3)]));
        for psi in [0.2, 1.3, 2.9, 4.4, 5.7] {
            let a = boundary_point_geometry(&ws, &comp, &[psi + 0.3 * f64::sin(psi)]).unwrap();
            let b = boundary_point_geometry(&ws, &other, &[psi]).unwrap();
            assert!((a.gauss_residual() - b.gauss_residual()).abs() < 1e-8, "{a:?} {b:?}");
            assert!((a.mean_curvature - b.mean_curvature).abs() < 1e-8);
            assert!((a.boundary_perelman - b.boundary_perelman).abs() < 1e-8);
        }
    }
}

#[test]
fn surface_gravity_of_equator_potential() {
    let m = hemisphere(2, 1.0, PI / 2.0, true);
    let ws = weighted(&m, &[0.0, 0.3, 0.0]);
    let u = ambient_linear(&m, &[1.0, 0.0, 0.0]).unwrap();
    let g = surface_gravity(&ws, &u, &boundary_grid(&m, 32).unwrap(), 1e-10).unwrap();
    assert_eq!(g.len(), 1);
    assert!((g[0].kappa - 1.0).abs() < 1e-12 && g[0].variation < 1e-8);
}

#[test]
fn area_estimate_on_static_hemisphere() {
    let m = hemisphere(2, 1.0, PI / 2.0, true);
    let ws = weighted(&m, &[0.0, 0.0, 0.0]);
    let u = ambient_linear(&m, &[1.0, 0.0, 0.0]).unwrap();
    let r = thm1_estimate(&ws, &u, None, None, &volume_grid(&m, 16).unwrap(), &boundary_grid(&m, 16).unwrap(), 1e-8).unwrap();
    assert!(r.fit_residual < 1e-10, "{r:?}");
    assert!((r.c0 - 2.0).abs() < 1e-10 && r.c1.abs() < 1e-10, "{r:?}");
}

#[test]
fn strict_area_estimate_fails_on_static_hemispheres() {
    for (n, lhs, rhs) in [(2, 4.0 * PI, 0.0), (3, 24.0 * PI, 8.0 * PI)] {
        let m = hemisphere(n, 1.0, PI / 2.0, true);
        let ws = WeightedSpace::new(m.clone(), ScalarField::zero(n)).unwrap();
        let mut v = vec![0.0; n + 1];
        v[0] = 1.0;
        let u = ambient_linear(&m, &v).unwrap();
        let r = thm1_estimate(&ws, &u, Some((n * (n - 1)) as f64), Some(0.0), &volume_grid(&m, 16).unwrap(), &boundary_grid(&m, 16).unwrap(), 1e-6).unwrap();
        assert!(r.hypotheses_hold, "{r:?}");
        assert!(!r.strict, "{r:?}");
        assert!((r.lhs - lhs).abs() < 1e-6 && (r.rhs - rhs).abs() < 1e-6, "{r:?}");
    }
}
