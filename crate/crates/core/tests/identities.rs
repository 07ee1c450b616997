use proptest::prelude::*;
use smms::field::ScalarField;
use smms::identities::*;
use smms::models::{euclidean, sphere_spherical};
use smms::quadrature::sample_points;
use smms::random::{random_scalar, random_tensor, rng};
use smms::weighted::{ambient_gaussian, ambient_linear, WeightedSpace};

fn flat_inputs() -> (CheckInputs, Vec<Vec<f64>>) {
    let m = euclidean(2, 1.0);
    let pts = sample_points(&m, 4).unwrap();
    let ws = WeightedSpace::new(m, ScalarField::zero(2)).unwrap();
    let inputs = CheckInputs::new(ws).with_u(ScalarField::constant(2, 1.0)).with_params(CheckParams {
        omega: Some(0.0),
        lambda: Some(0.0),
        lambda0: Some(0.0),
        lambda1: Some(0.0),
        c0: Some(0.0),
        c1: Some(0.0),
        ..Default::default()
    });
    (inputs, pts)
}

#[test]
fn catalog_is_complete_and_distinct() {
    let mut ids = IDENTITY_IDS.to_vec();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 12);
}

#[test]
fn vanishing_sides_give_zero_residual() {
    let (inputs, pts) = flat_inputs();
    for id in IDENTITY_IDS {
        if id == "sigma-extraction" {
            continue;
        }
        let r = run_check(id, &inputs, &pts, Derivatives::Analytic, 1e-10);
        assert!(r.sup_residual <= 1e-12, "{id}: {r:?}");
    }
}

#[test]
fn sigma_is_masked_where_density_is_flat() {
    let (inputs, pts) = flat_inputs();
    let r = run_check("sigma-extraction", &inputs, &pts, Derivatives::Analytic, 1e-10);
    assert_eq!(r.masked_fraction, 1.0);
    assert!(!r.pass);
}

#[test]
fn fd_paths_converge_on_weighted_sphere() {
    let m = sphere_spherical(2, 1.0);
    let pts = sample_points(&m, 4).unwrap();
    let ws = WeightedSpace::new(m.clone(), ambient_linear(&m, &[0.0, 0.3, 0.0]).unwrap()).unwrap();
    let u = ambient_linear(&m, &[1.0, 0.0, 0.0]).unwrap();
    let inputs = CheckInputs::new(ws).with_u(u).with_params(CheckParams {
        lambda0: Some(1.0),
        lambda1: Some(-1.0),
        omega: Some(1.0),
        ..Default::default()
    });
    for id in IDENTITY_IDS {
        let r = run_check(id, &inputs, &pts, Derivatives::fd_default(), 1e-4);
        if id != "thm3-laplacian" {
            assert!(r.pass, "{id}: {r:?}");
        }
        let order = r.convergence_order.expect(id);
        assert!(order >= 1.5, "{id}: order {order}");
    }
}

#[test]
fn fd_on_polynomial_data_is_exact() {
    let m = euclidean(2, 2.0);
    let pts = sample_points(&m, 4).unwrap();
    let ws = WeightedSpace::new(m.clone(), ambient_gaussian(&m)).unwrap();
    let u = ambient_linear(&m, &[0.6, -0.8]).unwrap();
    let inputs = CheckInputs::new(ws).with_u(u).with_params(CheckParams {
        omega: Some(1.0),
        ..Default::default()
    });
    for id in IDENTITY_IDS {
        let r = run_check(id, &inputs, &pts, Derivatives::fd_default(), 1e-4);
        assert!(r.pass, "{id}: {r:?}");
        assert!(r.convergence_order.is_none_or(|o| o >= 1.5), "{id}: {r:?}");
    }
}

#[test]
fn random_tensor_divergence_identity() {
    let m = sphere_spherical(2, 1.0);
    let pts = sample_points(&m, 4).unwrap();
    let mut r = rng(12, 0);
    let ws = WeightedSpace::new(m.clone(), random_scalar(&m, 2, &mut r)).unwrap();
    let inputs = CheckInputs::new(ws)
        .with_u(random_scalar(&m, 2, &mut r))
        .with_tensor(random_tensor(&m, 2, &mut r));
    let rep = run_check("tensor-divergence", &inputs, &pts, Derivatives::Analytic, 1e-8);
    assert!(rep.pass, "{rep:?}");
}

#[test]
fn hypothesis_failure_is_flagged_not_hidden() {
    let m = sphere_spherical(2, 1.0);
    let pts = sample_points(&m, 4).unwrap();
    let ws = WeightedSpace::new(m.clone(), ambient_linear(&m, &[0.0, 0.3, 0.0]).unwrap()).unwrap();
    let inputs = CheckInputs::new(ws).with_u(ambient_linear(&m, &[1.0, 0.0, 0.0]).unwrap());
    let r = run_check("thm3-laplacian", &inputs, &pts, Derivatives::Analytic, 1e-6);
    assert!(hypothesis_mismatch(&r), "{r:?}");
    assert!(r.hypotheses["ricci_f_equals_omega_g"] > 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn raising_sigma_threshold_masks_more(a in 1e-8f64..0.2, b in 1e-8f64..0.2) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let m = sphere_spherical(2, 1.0);
        let pts = sample_points(&m, 5).unwrap();
        let ws = WeightedSpace::new(m.clone(), ambient_linear(&m, &[0.0, 0.3, 0.0]).unwrap()).unwrap();
        let u = ambient_linear(&m, &[1.0, 0.0, 0.0]).unwrap();
        let (_, r_lo) = extract_sigma(&ws, &u, &pts, lo, 1e-6).unwrap();
        let (_, r_hi) = extract_sigma(&ws, &u, &pts, hi, 1e-6).unwrap();
        prop_assert!(r_hi.masked_fraction >= r_lo.masked_fraction);
    }
}
