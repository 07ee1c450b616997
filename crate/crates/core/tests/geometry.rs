use proptest::prelude::*;
use smms::field::{FdConfig, ScalarField};
use smms::identities::kernel_residual;
use smms::manifold::{self, MetricModel};
use smms::models::*;
use smms::quadrature::{integrate, sample_points, volume_grid};
use smms::random::{random_point, random_scalar, rng};
use smms::report::convergence_order;
use smms::weighted::{self, ambient_linear, WeightedSpace};

fn zoo() -> Vec<MetricModel> {
    vec![
        sphere_spherical(2, 1.0),
        sphere_spherical(3, 0.8),
        sphere_stereo(2, 1.0, false, 1.5),
        euclidean(2, 1.0),
        diag_family(&["1 + 0.3*x^2".into(), "exp(0.4*x)".into()], vec![-1.0; 2], vec![1.0; 2], vec![false; 2]).unwrap(),
    ]
}

fn sup_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn christoffel_symbols_are_symmetric() {
    for m in zoo() {
        for p in sample_points(&m, 3).unwrap() {
            let g = manifold::christoffel(&m, &m.point(&p).unwrap()).unwrap();
            for k in &g {
                for i in 0..m.dim {
                    for j in 0..m.dim {
                        assert_eq!(k[i][j], k[j][i]);
                    }
                }
            }
        }
    }
}

#[test]
fn metric_is_parallel_under_finite_differences() {
    let m = sphere_spherical(2, 1.0);
    let fd = m.to_fd(FdConfig::default());
    for p in sample_points(&m, 3).unwrap() {
        let geo = fd.geometry(&p, 1).unwrap();
        let dg = geo.nabla_tensor(&geo.g);
        let worst = dg.iter().flatten().flatten().map(|c| c.value().abs()).fold(0.0, f64::max);
        assert!(worst < 1e-8, "{worst:e}");
    }
}

#[test]
fn fd_curvature_converges_at_second_order() {
    for m in [sphere_spherical(2, 1.0), sphere_stereo(2, 1.0, true, 1.0)] {
        let p = sample_points(&m, 2).unwrap()[1].clone();
        let exact = manifold::ricci(&m, &m.point(&p).unwrap()).unwrap();
        let err = |base: f64| {
            let fd = m.to_fd(FdConfig::from_base(base));
            sup_diff(&manifold::ricci(&fd, &fd.point(&p).unwrap()).unwrap(), &exact)
        };
        let order = convergence_order(err(2e-3), err(1e-3)).unwrap();
        assert!(order >= 1.9, "{}: order {order}", m.name);
    }
}

#[test]
fn stereographic_charts_agree_on_scalar_curvature() {
    let north = sphere_stereo(2, 1.3, true, 2.0);
    let south = sphere_stereo(2, 1.3, false, 2.0);
    for y in [[0.3, -0.4], [0.9, 0.2], [-0.5, 0.6]] {
        let amb = north.embed(&y).unwrap();
        let z = stereo_coords(&amb, 1.3, false);
        let rn = manifold::scalar_curvature(&north, &north.point(&y).unwrap()).unwrap();
        let rs = manifold::scalar_curvature(&south, &south.point(&z).unwrap()).unwrap();
        assert!((rn - rs).abs() < 1e-10 && (rn - 2.0 / 1.69).abs() < 1e-10, "{rn} {rs}");
    }
}

#[test]
fn drift_laplacian_is_self_adjoint_on_closed_models() {
    for m in [sphere_spherical(2, 1.0), circle(1.4)] {
        let grid = volume_grid(&m, 24).unwrap();
        let mut r = rng(31, 0);
        let f = random_scalar(&m, 2, &mut r).scale(0.5);
        let u = random_scalar(&m, 3, &mut r);
        let v = random_scalar(&m, 3, &mut r);
        let ws = WeightedSpace::new(m, f).unwrap();
        let side = |a: &ScalarField, b: &ScalarField| {
            integrate(&ws, &grid, |x| Ok(ws.at(x, 2)?.drift_laplacian(&a.taylor(x, 2)).value() * b.value(x))).unwrap()
        };
        let (l, rr) = (side(&u, &v), side(&v, &u));
        assert!((l - rr).abs() < 1e-9 * (1.0 + l.abs()), "{l} {rr}");
    }
}

#[test]
fn traced_kernel_equation_holds_for_weighted_sphere_potentials() {
    let m = sphere_spherical(2, 1.0);
    let f = ambient_linear(&m, &[0.0, 0.0, 0.3]).unwrap();
    let u = ambient_linear(&m, &[1.0, 0.0, 0.0]).unwrap();
    let ws = WeightedSpace::new(m.clone(), f.clone()).unwrap();
    for p in sample_points(&m, 4).unwrap() {
        let wp = ws.at(&p, 2).unwrap();
        let uj = u.taylor(&p, 2);
        let n = 2.0;
        let grad_f = wp.geo.raise(&wp.df());
        let x: Vec<_> = grad_f.iter().map(|c| c * &uj).collect();
        let lhs = &(&wp.drift_laplacian(&uj) * (n - 1.0)) - &wp.div_f_vector(&x);
        // sign as obtained from the divergence form of the trace
        let rhs = -(&wp.perelman_scalar() * &uj).value();
        assert!((lhs.value() - rhs).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hessian_dominates_laplacian_square(seed in 0u64..10_000, which in 0usize..5) {
        let m = zoo()[which].clone();
        let mut r = rng(seed, 1);
        let u = random_scalar(&m, 3, &mut r);
        let p = random_point(&m, &mut r);
        let geo = m.geometry(&p, 1).unwrap();
        let uj = u.taylor(&p, 2);
        let hess = geo.hessian(&uj);
        let lap = geo.laplacian(&uj).value();
        let h2 = geo.inner(&hess, &hess).value();
        prop_assert!(h2 + 1e-12 * (1.0 + h2) >= lap * lap / m.dim as f64);
    }

    #[test]
    fn drift_laplacian_forms_agree(seed in 0u64..10_000, which in 0usize..5) {
        let m = zoo()[which].clone();
        let mut r = rng(seed, 2);
        let f = random_scalar(&m, 2, &mut r);
        let u = random_scalar(&m, 3, &mut r);
        let p = random_point(&m, &mut r);
        let ws = WeightedSpace::new(m.clone(), f).unwrap();
        let x = m.point(&p).unwrap();
        let a = weighted::drift_laplacian(&ws, &u, &x).unwrap();
        let b = weighted::drift_laplacian_divergence_form(&ws, &u, &x).unwrap();
        prop_assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn kernel_is_closed_under_scaling(c in -50.0f64..50.0) {
        let m = sphere_spherical(2, 1.0);
        let ws = WeightedSpace::new(m.clone(), ambient_linear(&m, &[0.0, 0.3, 0.0]).unwrap()).unwrap();
        let u = ambient_linear(&m, &[0.0, 0.0, 1.0]).unwrap();
        let pts = sample_points(&m, 4).unwrap();
        let base = kernel_residual(&ws, &u, &pts).unwrap();
        let scaled = kernel_residual(&ws, &u.scale(c), &pts).unwrap();
        prop_assert!(base < 1e-12 && scaled <= 1e-12 * (1.0 + c.abs()));
    }
}
