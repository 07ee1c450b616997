use nalgebra::DMatrix;
use smms::field::ScalarField;
use smms::manifold::MetricModel;
use smms::models::{build_model, circle, interval, sphere_spherical, ModelSpec};
use smms::spectral::*;
use smms::weighted::{ambient_gaussian, ambient_linear, build_field, FieldSpec, WeightedSpace};

fn with_expr(model: MetricModel, src: &str) -> WeightedSpace {
    let f = build_field(&FieldSpec::expr(src), &model).unwrap();
    WeightedSpace::new(model, f).unwrap()
}

fn eigenvalues(ws: &WeightedSpace, kind: &str, size: usize, count: usize) -> Vec<f64> {
    let disc = Discretization::build(&BasisSpec::new(kind, size), ws).unwrap();
    solve_drift_eigen(ws, &disc, count).unwrap().eigenvalues
}

fn gram(ks: &KernelSearch) -> DMatrix<f64> {
    let n = ks.gram.len();
    DMatrix::from_fn(n, n, |i, j| ks.gram[i][j])
}

fn accepted(ks: &KernelSearch) -> Vec<Vec<f64>> {
    ks.candidates.iter().filter(|c| c.accepted).map(|c| c.coefficients.clone()).collect()
}

fn one_dim_scenarios() -> Vec<(WeightedSpace, &'static str)> {
    vec![
        (with_expr(circle(1.0), "0.5*cos(x) + 0.2*sin(2*x)"), "fourier-circle"),
        (with_expr(interval(0.0, 1.0), "x"), "interval-dirichlet"),
        (with_expr(interval(-4.0, 4.0), "x^2/2"), "interval-dirichlet"),
    ]
}

#[test]
fn lowest_modes_settle_when_resolution_doubles() {
    for (ws, kind) in one_dim_scenarios() {
        let a = eigenvalues(&ws, kind, 32, 3);
        let b = eigenvalues(&ws, kind, 64, 3);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-7, "{}: {a:?} {b:?}", ws.model.name);
        }
    }
}

#[test]
fn spectral_and_dense_fd_spectra_agree() {
    for (ws, kind) in one_dim_scenarios() {
        let s = eigenvalues(&ws, kind, 64, 5);
        let cells = if kind == "fourier-circle" { 1024 } else { 2048 };
        let o = fd_oracle_spectrum(&ws, cells, 5).unwrap();
        for (x, y) in s.iter().zip(&o) {
            assert!((x - y).abs() < 1e-5 * (1.0 + y.abs()), "{}: {s:?} {o:?}", ws.model.name);
        }
    }
}

#[test]
fn drift_laplacian_is_weighted_symmetric_on_closed_models() {
    let sphere = sphere_spherical(2, 1.0);
    let f = ambient_linear(&sphere, &[0.2, 0.0, 0.4]).unwrap();
    let cases = vec![
        (WeightedSpace::new(sphere, f).unwrap(), "sphere-harmonic-chart", 5),
        (with_expr(circle(1.0), "0.5*cos(x)"), "fourier-circle", 8),
    ];
    for (ws, kind, size) in cases {
        let disc = Discretization::build(&BasisSpec::new(kind, size), &ws).unwrap();
        let r = solve_drift_eigen(&ws, &disc, 4).unwrap();
        assert!(r.symmetry_residual < 1e-10 && r.weighted_orthonormality_residual < 1e-10, "{r:?}");
    }
}

#[test]
fn kernel_survives_shifting_the_density() {
    let gaussian = build_model(&ModelSpec::named("gaussian-chart").with_dim(2)).unwrap();
    let sphere = sphere_spherical(2, 1.0);
    let cases = vec![
        (gaussian.clone(), ambient_gaussian(&gaussian), "hermite-chart", 3),
        (sphere.clone(), ambient_linear(&sphere, &[0.0, 0.3, 0.0]).unwrap(), "sphere-harmonic-chart", 3),
    ];
    for (m, f, kind, size) in cases {
        let a = WeightedSpace::new(m.clone(), f.clone()).unwrap();
        let b = WeightedSpace::new(m.clone(), f.add_constant(2.5)).unwrap();
        let spec = BasisSpec::new(kind, size);
        let ka = kernel_search(&a, &Discretization::build(&spec, &a).unwrap(), None, 1e-6).unwrap();
        let kb = kernel_search(&b, &Discretization::build(&spec, &b).unwrap(), None, 1e-6).unwrap();
        assert_eq!(ka.kernel_dim(), 2);
        assert_eq!(kb.kernel_dim(), 2);
        let angles = principal_angles(&gram(&ka), &accepted(&ka), &accepted(&kb)).unwrap();
        assert!(angles.iter().all(|t| *t < 1e-8), "{}: {angles:?}", m.name);
    }
}

#[test]
fn gaussian_kernel_is_spanned_by_coordinates() {
    let m = build_model(&ModelSpec::named("gaussian-chart").with_dim(3)).unwrap();
    let ws = WeightedSpace::new(m.clone(), ambient_gaussian(&m)).unwrap();
    let Discretization::Spectral { basis, .. } = Discretization::build(&BasisSpec::new("hermite-chart", 2), &ws).unwrap() else {
        unreachable!()
    };
    let disc = Discretization::build(&BasisSpec::new("hermite-chart", 2), &ws).unwrap();
    let ks = kernel_search(&ws, &disc, None, 1e-6).unwrap();
    assert_eq!(ks.kernel_dim(), 3, "{:?}", ks.singular_values);
    let coords: Vec<Vec<f64>> = ["He[1, 0, 0]", "He[0, 1, 0]", "He[0, 0, 1]"]
        .iter()
        .map(|l| basis.labels.iter().map(|b| if b == l { 1.0 } else { 0.0 }).collect())
        .collect();
    let angles = principal_angles(&gram(&ks), &accepted(&ks), &coords).unwrap();
    assert!(angles.iter().all(|t| *t < 1e-6), "{angles:?}");
}

#[test]
fn interval_probe_is_bounded_below() {
    let ws = with_expr(interval(0.0, 1.0), "x");
    let opts = ProbeOptions {
        kind: "interval-dirichlet".into(),
        ladder: ProbeOptions::default_ladder("interval-dirichlet"),
        floor: Some(3.0),
        expect_kernel: false,
        hypothesis: Some("constant-perelman".into()),
        kernel_tolerance: 1e-6,
        hypothesis_tolerance: 1e-8,
    };
    let r = nonexistence_probe(&ws, "interval", &opts).unwrap();
    assert!(r.pass && r.bounded_below, "{r:?}");
    for l in &r.levels {
        assert!((l.min_singular_value - (std::f64::consts::PI.powi(2) + 0.25).sqrt()).abs() < 1e-5, "{r:?}");
    }
}

#[test]
fn constant_density_makes_every_interval_function_a_kernel_element() {
    let ws = WeightedSpace::new(interval(0.0, 1.0), ScalarField::zero(1)).unwrap();
    let disc = Discretization::build(&BasisSpec::new("interval-dirichlet", 8), &ws).unwrap();
    let ks = kernel_search(&ws, &disc, None, 1e-6).unwrap();
    assert_eq!(ks.kernel_dim(), 8);
}
