//! Seeded random fields and points.
//!
//! All randomness flows from a ChaCha8 generator keyed by `(seed, stream)`,
//! so results do not depend on thread scheduling.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::{ScalarField, SymTensorField};
use crate::jet::Jet;
use crate::manifold::{Domain, MetricModel};
use crate::quadrature::POLE_BAND;

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Exponent tuples of total degree `≤ degree` in `vars` variables.
fn monomials(vars: usize, degree: usize) -> Vec<Vec<u32>> {
    let mut out = vec![vec![0u32; vars]];
    for _ in 0..degree {
        let mut next = Vec::new();
        for m in &out {
            let last = m.iter().rposition(|&e| e > 0).unwrap_or(0);
            for v in last..vars {
                let mut e = m.clone();
                e[v] += 1;
                next.push(e);
            }
        }
        out.extend(next.iter().filter(|e| !out.contains(e)).cloned().collect::<Vec<_>>());
    }
    out.sort();
    out.dedup();
    out
}

fn eval_poly(terms: &[(Vec<u32>, f64)], x: &[Jet]) -> Jet {
    let mut acc = x[0].lift(0.0);
    for (e, c) in terms {
        let mut t = x[0].lift(*c);
        for (xi, &k) in x.iter().zip(e) {
            if k > 0 {
                t = &t * &xi.powi(k as i32);
            }
        }
        acc += t;
    }
    acc
}

fn random_terms(r: &mut ChaCha8Rng, vars: usize, degree: usize) -> Vec<(Vec<u32>, f64)> {
    monomials(vars, degree)
        .into_iter()
        .map(|e| (e, r.random_range(-1.0..1.0)))
        .collect()
}

/// Coordinates the random polynomials are written in: the embedding when the
/// model has one, chart coordinates otherwise.
fn carrier(model: &MetricModel) -> (usize, impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + Clone + 'static) {
    let emb = model.embedding.clone();
    let vars = emb.as_ref().map_or(model.dim, |e| e.len());
    (vars, move |x: &[Jet]| match &emb {
        Some(e) => e.eval(x),
        None => x.to_vec(),
    })
}

/// Random polynomial of the given degree in ambient (or chart) coordinates.
/// Smooth on the whole model, including coordinate poles.
pub fn random_scalar(model: &MetricModel, degree: usize, r: &mut ChaCha8Rng) -> ScalarField {
    let (vars, to_carrier) = carrier(model);
    let terms = random_terms(r, vars, degree);
    ScalarField::analytic(model.dim, move |x| eval_poly(&terms, &to_carrier(x)))
}

/// Random symmetric 2-tensor: pullback of an ambient symmetric matrix field
/// with polynomial entries of the given degree.
pub fn random_tensor(model: &MetricModel, degree: usize, r: &mut ChaCha8Rng) -> SymTensorField {
    let (vars, to_carrier) = carrier(model);
    let mut entries = Vec::new();
    for a in 0..vars {
        for b in a..vars {
            entries.push(((a, b), random_terms(r, vars, degree)));
        }
    }
    let n = model.dim;
    SymTensorField::analytic(n, move |x| {
        // Jacobian of the carrier map from one order higher, substituted back
        let base: Vec<f64> = x.iter().map(Jet::value).collect();
        let k = x[0].order();
        let z = Jet::variables(&base, k + 1);
        let yz = to_carrier(&z);
        let y: Vec<Jet> = crate::jet::substitute_many(&yz, &base, x);
        let dy: Vec<Vec<Jet>> = yz
            .iter()
            .map(|c| {
                let d: Vec<Jet> = (0..n).map(|i| c.d(i)).collect();
                crate::jet::substitute_many(&d, &base, x)
            })
            .collect();
        let mut h = vec![vec![None::<Jet>; vars]; vars];
        for ((a, b), terms) in &entries {
            let v = eval_poly(terms, &y).truncate(dy[0][0].order());
            h[*a][*b] = Some(v.clone());
            h[*b][*a] = Some(v);
        }
        let mut out = Vec::new();
        for i in 0..n {
            for j in i..n {
                let mut acc = dy[0][0].lift(0.0);
                for a in 0..vars {
                    for b in 0..vars {
                        let hab = h[a][b].as_ref().unwrap();
                        acc += &(hab * &dy[a][i]) * &dy[b][j];
                    }
                }
                out.push(acc);
            }
        }
        out
    })
}

/// `Π (1 − (xᵢ/L)²)⁴`: vanishes with three derivatives on the faces of the
/// cube `[−L, L]ⁿ`.
pub fn box_bump(dim: usize, half_width: f64) -> ScalarField {
    ScalarField::analytic(dim, move |x| {
        let mut acc = x[0].lift(1.0);
        for xi in x {
            let s = 1.0 - &(xi * (1.0 / half_width)).square();
            acc = &acc * &s.powi(4);
        }
        acc
    })
}

/// Random tensor multiplied by the box bump of a Euclidean model.
pub fn random_bump_tensor(model: &MetricModel, degree: usize, half_width: f64, r: &mut ChaCha8Rng) -> SymTensorField {
    let t = random_tensor(model, degree, r);
    let bump = box_bump(model.dim, half_width);
    let n = model.dim;
    SymTensorField::analytic(n, move |x| {
        let b = bump.eval(x);
        let m = t.eval(x);
        let mut out = Vec::new();
        for i in 0..n {
            for j in i..n {
                out.push(&m[i][j] * &b);
            }
        }
        out
    })
}

/// Random point well inside the chart domain, away from coordinate poles.
pub fn random_point(model: &MetricModel, r: &mut ChaCha8Rng) -> Vec<f64> {
    match &model.domain {
        Domain::Box { lo, hi, .. } => lo
            .iter()
            .zip(hi)
            .map(|(a, b)| {
                let m = 0.1 * (b - a);
                r.random_range(a + m..b - m)
            })
            .collect(),
        Domain::Spherical { polar } => {
            let n = model.dim;
            let mut x = Vec::with_capacity(n);
            if n >= 2 {
                let a = polar.0.max(POLE_BAND) + 0.05;
                let b = polar.1.min(PI - POLE_BAND) - 0.05;
                x.push(r.random_range(a..b));
                for _ in 1..n - 1 {
                    x.push(r.random_range(0.2..PI - 0.2));
                }
            }
            x.push(r.random_range(0.0..2.0 * PI));
            x
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{euclidean, sphere_spherical};

    #[test]
    fn monomial_count() {
        assert_eq!(monomials(3, 2).len(), 10);
        assert_eq!(monomials(2, 3).len(), 10);
    }

    #[test]
    fn streams_are_reproducible() {
        let m = sphere_spherical(2, 1.0);
        let a = random_point(&m, &mut rng(7, 1));
        let b = random_point(&m, &mut rng(7, 1));
        let c = random_point(&m, &mut rng(7, 2));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn bump_vanishes_on_faces() {
        let m = euclidean(2, 2.0);
        let t = random_bump_tensor(&m, 2, 2.0, &mut rng(3, 0));
        let h = t.taylor(&[2.0, 0.7], 3);
        for row in &h {
            for c in row {
                assert!(c.coeffs().iter().all(|v| v.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn pulled_back_tensor_is_symmetric() {
        let m = sphere_spherical(2, 1.0);
        let t = random_tensor(&m, 1, &mut rng(1, 0));
        let v = t.value(&[0.8, 1.1]);
        assert_eq!(v[0][1], v[1][0]);
    }
}
