//! Truncated multivariate Taylor series ("jets").
//!
//! A [`Jet`] of dimension `n` and order `K` stores the Taylor coefficients
//! `c_α = ∂^α u(x₀) / α!` for every multi-index with `|α| ≤ K`. Arithmetic on
//! jets is exact up to the truncation order, so evaluating a closed-form metric
//! or field on coordinate jets yields its partial derivatives to machine
//! precision. Differentiating a jet lowers its order by one.
//!
//! Coefficients are laid out in graded order, so the coefficients of a lower
//! order jet are a prefix of those of a higher order one. Mixed-order
//! operations truncate to the smaller order.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::sync::OnceLock;

/// Largest supported chart dimension.
pub const MAX_DIM: usize = 4;
/// Largest supported truncation order.
pub const MAX_ORDER: usize = 5;

pub struct JetTable {
    dim: usize,
    order: usize,
    exponents: Vec<Vec<u8>>,
    factorials: Vec<f64>,
    /// `(a, b, out)` triples: `out += a * b`.
    products: Vec<(u16, u16, u16)>,
    /// Per direction: `(source, target, factor)` for differentiation.
    derivatives: Vec<Vec<(u16, u16, f64)>>,
    /// For each monomial but the constant one: `(direction, parent)` with
    /// `parent = α − e_direction`, `direction` the first nonzero exponent.
    parents: Vec<(usize, usize)>,
    degree_start: Vec<usize>,
}

impl JetTable {
    fn build(dim: usize, order: usize) -> Self {
        let mut exponents: Vec<Vec<u8>> = Vec::new();
        let mut degree_start = Vec::with_capacity(order + 2);
        for degree in 0..=order {
            degree_start.push(exponents.len());
            let mut current = vec![0u8; dim];
            enumerate_degree(dim, degree, 0, &mut current, &mut exponents);
        }
        degree_start.push(exponents.len());
        let position = |e: &[u8]| -> Option<usize> {
            let degree: usize = e.iter().map(|&v| v as usize).sum();
            if degree > order {
                return None;
            }
            (degree_start[degree]..degree_start[degree + 1]).find(|&i| exponents[i] == e)
        };

        let factorials = exponents
            .iter()
            .map(|e| e.iter().map(|&k| factorial(k as usize)).product())
            .collect();

        let mut products = Vec::new();
        for (a, ea) in exponents.iter().enumerate() {
            for (b, eb) in exponents.iter().enumerate() {
                let sum: Vec<u8> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                if let Some(out) = position(&sum) {
                    products.push((a as u16, b as u16, out as u16));
                }
            }
        }

        let mut derivatives = Vec::with_capacity(dim);
        for k in 0..dim {
            let mut entries = Vec::new();
            if order > 0 {
                for target in 0..degree_start[order] {
                    let mut src = exponents[target].clone();
                    src[k] += 1;
                    let source = position(&src).expect("derivative source in table");
                    entries.push((source as u16, target as u16, src[k] as f64));
                }
            }
            derivatives.push(entries);
        }

        let mut parents = vec![(0, 0)];
        for e in exponents.iter().skip(1) {
            let k = e.iter().position(|&v| v > 0).unwrap();
            let mut p = e.clone();
            p[k] -= 1;
            parents.push((k, position(&p).unwrap()));
        }

        Self {
            dim,
            order,
            exponents,
            factorials,
            products,
            derivatives,
            parents,
            degree_start,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[Vec<u8>] {
        &self.exponents
    }

    /// Number of coefficients of total degree at most `degree`.
    pub fn prefix_len(&self, degree: usize) -> usize {
        self.degree_start[degree.min(self.order) + 1]
    }

    pub fn index_of(&self, exponent: &[u8]) -> Option<usize> {
        let degree: usize = exponent.iter().map(|&v| v as usize).sum();
        if exponent.len() != self.dim || degree > self.order {
            return None;
        }
        (self.degree_start[degree]..self.degree_start[degree + 1])
            .find(|&i| self.exponents[i] == exponent)
    }
}

fn enumerate_degree(dim: usize, remaining: usize, k: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if dim == 0 {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if k == dim - 1 {
        cur[k] = remaining as u8;
        out.push(cur.clone());
        cur[k] = 0;
        return;
    }
    for v in (0..=remaining).rev() {
        cur[k] = v as u8;
        enumerate_degree(dim, remaining - v, k + 1, cur, out);
    }
    cur[k] = 0;
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Shared coefficient-layout table for a given `(dim, order)`.
pub fn table(dim: usize, order: usize) -> &'static JetTable {
    static TABLES: OnceLock<Vec<Vec<JetTable>>> = OnceLock::new();
    assert!(dim <= MAX_DIM, "jet dimension {dim} exceeds {MAX_DIM}");
    assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
    let tables = TABLES.get_or_init(|| {
        (0..=MAX_DIM)
            .map(|d| (0..=MAX_ORDER).map(|k| JetTable::build(d, k)).collect())
            .collect()
    });
    &tables[dim][order]
}

#[derive(Clone)]
pub struct Jet {
    table: &'static JetTable,
    coeffs: Vec<f64>,
}

impl std::fmt::Debug for Jet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Jet")
            .field("dim", &self.table.dim)
            .field("order", &self.table.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl Jet {
    pub fn constant(dim: usize, order: usize, value: f64) -> Self {
        let table = table(dim, order);
        let mut coeffs = vec![0.0; table.len()];
        coeffs[0] = value;
        Self { table, coeffs }
    }

    pub fn zero(dim: usize, order: usize) -> Self {
        Self::constant(dim, order, 0.0)
    }

    /// Coordinate function `x_k` expanded around `value`.
    pub fn variable(dim: usize, order: usize, value: f64, k: usize) -> Self {
        let mut jet = Self::constant(dim, order, value);
        if order > 0 {
            let mut e = vec![0u8; dim];
            e[k] = 1;
            let i = jet.table.index_of(&e).unwrap();
            jet.coeffs[i] = 1.0;
        }
        jet
    }

    /// All coordinate functions expanded around `point`.
    pub fn variables(point: &[f64], order: usize) -> Vec<Jet> {
        let dim = point.len();
        point
            .iter()
            .enumerate()
            .map(|(k, &v)| Self::variable(dim, order, v, k))
            .collect()
    }

    pub fn from_coeffs(dim: usize, order: usize, coeffs: Vec<f64>) -> Self {
        let table = table(dim, order);
        assert_eq!(coeffs.len(), table.len(), "coefficient count mismatch");
        Self { table, coeffs }
    }

    /// Constant jet with the same layout as `self`.
    pub fn lift(&self, value: f64) -> Self {
        Self::constant(self.dim(), self.order(), value)
    }

    pub fn dim(&self) -> usize {
        self.table.dim
    }

    pub fn order(&self) -> usize {
        self.table.order
    }

    pub fn table(&self) -> &'static JetTable {
        self.table
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Partial derivative `∂^α` at the expansion point.
    pub fn partial(&self, exponent: &[u8]) -> f64 {
        match self.table.index_of(exponent) {
            Some(i) => self.coeffs[i] * self.table.factorials[i],
            None => panic!("partial {exponent:?} beyond jet order {}", self.order()),
        }
    }

    pub fn gradient(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|k| {
                let mut e = vec![0u8; self.dim()];
                e[k] = 1;
                self.partial(&e)
            })
            .collect()
    }

    pub fn hessian(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut e = vec![0u8; n];
                        e[i] += 1;
                        e[j] += 1;
                        self.partial(&e)
                    })
                    .collect()
            })
            .collect()
    }

    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.order() {
            return self.clone();
        }
        let table = table(self.dim(), order);
        Self {
            table,
            coeffs: self.coeffs[..table.len()].to_vec(),
        }
    }

    /// Partial derivative in coordinate direction `k`; the order drops by one.
    pub fn d(&self, k: usize) -> Self {
        assert!(self.order() > 0, "cannot differentiate an order-0 jet");
        let table = table(self.dim(), self.order() - 1);
        let mut coeffs = vec![0.0; table.len()];
        for &(src, dst, factor) in &self.table.derivatives[k] {
            coeffs[dst as usize] = factor * self.coeffs[src as usize];
        }
        Self { table, coeffs }
    }

    fn align<'a>(&'a self, other: &'a Jet) -> (&'static JetTable, &'a [f64], &'a [f64]) {
        assert_eq!(self.dim(), other.dim(), "jet dimension mismatch");
        let t = if self.order() <= other.order() {
            self.table
        } else {
            other.table
        };
        (t, &self.coeffs[..t.len()], &other.coeffs[..t.len()])
    }

    fn mul_jet(&self, other: &Jet) -> Jet {
        let (t, a, b) = self.align(other);
        let mut coeffs = vec![0.0; t.len()];
        for &(i, j, k) in &t.products {
            coeffs[k as usize] += a[i as usize] * b[j as usize];
        }
        Jet { table: t, coeffs }
    }

    /// `Σ_m derivs[m]/m! · (self − self₀)^m` where `derivs[m] = φ^{(m)}(self₀)`.
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        let order = self.order();
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let top = order.min(derivs.len() - 1);
        let mut acc = self.lift(derivs[top] / factorial(top));
        for m in (0..top).rev() {
            acc = acc.mul_jet(&delta);
            acc.coeffs[0] += derivs[m] / factorial(m);
        }
        acc
    }

    pub fn recip(&self) -> Jet {
        let x = self.value();
        let mut derivs = Vec::with_capacity(self.order() + 1);
        let mut term = 1.0 / x;
        for m in 0..=self.order() {
            derivs.push(term);
            term *= -((m + 1) as f64) / x;
        }
        self.compose(&derivs)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&vec![e; self.order() + 1])
    }

    pub fn ln(&self) -> Jet {
        let x = self.value();
        let mut derivs = vec![x.ln()];
        let mut term = 1.0 / x;
        for m in 1..=self.order() {
            derivs.push(term);
            term *= -(m as f64) / x;
        }
        self.compose(&derivs)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        self.compose(&(0..=self.order()).map(|m| cycle[m % 4]).collect::<Vec<_>>())
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        self.compose(&(0..=self.order()).map(|m| cycle[m % 4]).collect::<Vec<_>>())
    }

    pub fn tan(&self) -> Jet {
        &self.sin() / &self.cos()
    }

    pub fn sinh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose(&(0..=self.order()).map(|m| if m % 2 == 0 { s } else { c }).collect::<Vec<_>>())
    }

    pub fn cosh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose(&(0..=self.order()).map(|m| if m % 2 == 0 { c } else { s }).collect::<Vec<_>>())
    }

    pub fn tanh(&self) -> Jet {
        &self.sinh() / &self.cosh()
    }

    /// Real power `self^p`; requires a positive base unless `p` is a
    /// non-negative integer.
    pub fn powf(&self, p: f64) -> Jet {
        let x = self.value();
        let mut derivs = Vec::with_capacity(self.order() + 1);
        let mut coeff = 1.0;
        for m in 0..=self.order() {
            let e = p - m as f64;
            derivs.push(if coeff == 0.0 { 0.0 } else { coeff * x.powf(e) });
            coeff *= e;
        }
        self.compose(&derivs)
    }

    pub fn powi(&self, k: i32) -> Jet {
        if k < 0 {
            return self.powi(-k).recip();
        }
        let mut result = self.lift(1.0);
        let mut base = self.clone();
        let mut e = k as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_jet(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_jet(&base);
            }
        }
        result
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn square(&self) -> Jet {
        self.mul_jet(self)
    }

    /// Substitute jets for the expansion variables: evaluates the Taylor
    /// polynomial `Σ c_α (y − x₀)^α` on the (possibly different-dimensional)
    /// jets `inner`. The result has the order of `inner`, which must not exceed
    /// the order of `self`.
    pub fn substitute(&self, base: &[f64], inner: &[Jet]) -> Jet {
        substitute_many(std::slice::from_ref(self), base, inner).pop().unwrap()
    }
}

/// Same as [`Jet::substitute`] for several polynomials sharing the same
/// expansion point, reusing the monomials.
pub fn substitute_many(polys: &[Jet], base: &[f64], inner: &[Jet]) -> Vec<Jet> {
    assert!(!inner.is_empty() || base.is_empty());
    let n = base.len();
    if polys.is_empty() {
        return Vec::new();
    }
    let src = polys[0].table;
    assert_eq!(src.dim, n, "substitution arity mismatch");
    assert_eq!(inner.len(), n, "substitution arity mismatch");
    if n == 0 {
        return polys.iter().map(|p| Jet::constant(0, 0, p.value())).collect();
    }
    let out_dim = inner[0].dim();
    let out_order = inner.iter().map(|j| j.order()).min().unwrap();
    assert!(
        out_order <= src.order,
        "substitution needs a source of order {out_order}, got {}",
        src.order
    );
    if is_identity(base, inner) && out_dim == n {
        return polys.iter().map(|p| p.truncate(out_order)).collect();
    }
    let deltas: Vec<Jet> = inner
        .iter()
        .zip(base)
        .map(|(j, &b)| {
            let mut d = j.truncate(out_order);
            d.coeffs[0] -= b;
            d
        })
        .collect();
    let count = src.prefix_len(out_order);
    let mut monomials: Vec<Jet> = Vec::with_capacity(count);
    monomials.push(Jet::constant(out_dim, out_order, 1.0));
    for idx in 1..count {
        let (k, parent) = src.parents[idx];
        let m = monomials[parent].mul_jet(&deltas[k]);
        monomials.push(m);
    }
    polys
        .iter()
        .map(|p| {
            let mut acc = Jet::zero(out_dim, out_order);
            for (idx, mono) in monomials.iter().enumerate() {
                let c = p.coeffs[idx];
                if c != 0.0 {
                    for (a, m) in acc.coeffs.iter_mut().zip(&mono.coeffs) {
                        *a += c * m;
                    }
                }
            }
            acc
        })
        .collect()
}

fn is_identity(base: &[f64], inner: &[Jet]) -> bool {
    let n = base.len();
    inner.iter().enumerate().all(|(k, j)| {
        if j.dim() != n || j.value() != base[k] {
            return false;
        }
        let first = &j.coeffs[1..j.table.prefix_len(1)];
        let rest_zero = j.coeffs[j.table.prefix_len(1)..].iter().all(|&c| c == 0.0);
        // degree-one monomials are ordered e_0, e_1, ... in the graded layout
        rest_zero
            && first
                .iter()
                .enumerate()
                .all(|(i, &c)| c == if i == k { 1.0 } else { 0.0 })
    })
}

macro_rules! binary_ops {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

binary_ops!(Add, add, |a, b| {
    let (t, x, y) = a.align(b);
    Jet {
        table: t,
        coeffs: x.iter().zip(y).map(|(p, q)| p + q).collect(),
    }
});
binary_ops!(Sub, sub, |a, b| {
    let (t, x, y) = a.align(b);
    Jet {
        table: t,
        coeffs: x.iter().zip(y).map(|(p, q)| p - q).collect(),
    }
});
binary_ops!(Mul, mul, |a, b| a.mul_jet(b));
binary_ops!(Div, div, |a, b| a.mul_jet(&b.recip()));

macro_rules! scalar_ops {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<f64> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                let mut out = self.clone();
                scalar_ops!(@apply out, rhs, $op);
                out
            }
        }
        impl $trait<f64> for Jet {
            type Output = Jet;
            fn $method(mut self, rhs: f64) -> Jet {
                scalar_ops!(@apply self, rhs, $op);
                self
            }
        }
    };
    (@apply $j:ident, $r:ident, +) => { $j.coeffs[0] += $r; };
    (@apply $j:ident, $r:ident, -) => { $j.coeffs[0] -= $r; };
    (@apply $j:ident, $r:ident, *) => { $j.coeffs.iter_mut().for_each(|c| *c *= $r); };
    (@apply $j:ident, $r:ident, /) => { $j.coeffs.iter_mut().for_each(|c| *c /= $r); };
}

scalar_ops!(Add, add, +);
scalar_ops!(Sub, sub, -);
scalar_ops!(Mul, mul, *);
scalar_ops!(Div, div, /);

impl Mul<&Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        rhs * self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs * self
    }
}

impl Add<&Jet> for f64 {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        rhs + self
    }
}

impl Sub<&Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        -rhs + self
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self * -1.0
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self * -1.0
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        *self = &*self + rhs;
    }
}

impl AddAssign<Jet> for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = &*self + &rhs;
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        *self = &*self - rhs;
    }
}

impl SubAssign<Jet> for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = &*self - &rhs;
    }
}

/// Sum of jets; `None` for an empty iterator.
pub fn sum<'a>(items: impl IntoIterator<Item = &'a Jet>) -> Option<Jet> {
    let mut iter = items.into_iter();
    let first = iter.next()?.clone();
    Some(iter.fold(first, |acc, j| acc + j))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn table_sizes_are_binomial() {
        assert_eq!(table(2, 3).len(), 10);
        assert_eq!(table(3, 4).len(), 35);
        assert_eq!(table(0, 3).len(), 1);
        assert_eq!(table(1, 0).len(), 1);
    }

    #[test]
    fn lower_orders_are_prefixes() {
        for dim in 1..=3 {
            let hi = table(dim, 4);
            let lo = table(dim, 2);
            assert_eq!(&hi.exponents()[..lo.len()], lo.exponents());
        }
    }

    #[test]
    fn product_rule_matches_finite_differences() {
        let x = Jet::variables(&[0.3, -0.7], 3);
        let u = &x[0].sin() * &(&x[1] * &x[0]).exp();
        let f = |a: f64, b: f64| a.sin() * (a * b).exp();
        let h = 1e-5;
        let du0 = (f(0.3 + h, -0.7) - f(0.3 - h, -0.7)) / (2.0 * h);
        let du1 = (f(0.3, -0.7 + h) - f(0.3, -0.7 - h)) / (2.0 * h);
        let g = u.gradient();
        assert!((g[0] - du0).abs() < 1e-9);
        assert!((g[1] - du1).abs() < 1e-9);
        let h2 = 1e-4;
        let d01 = (f(0.3 + h2, -0.7 + h2) - f(0.3 + h2, -0.7 - h2) - f(0.3 - h2, -0.7 + h2)
            + f(0.3 - h2, -0.7 - h2))
            / (4.0 * h2 * h2);
        assert!((u.hessian()[0][1] - d01).abs() < 1e-6);
    }

    #[test]
    fn univariate_functions_match_closed_form_derivatives() {
        let x = Jet::variable(1, 4, 0.8, 0);
        let checks: Vec<(Jet, Box<dyn Fn(f64) -> f64>)> = vec![
            (x.ln(), Box::new(|t: f64| t.ln())),
            (x.sqrt(), Box::new(|t: f64| t.sqrt())),
            (x.tan(), Box::new(|t: f64| t.tan())),
            (x.tanh(), Box::new(|t: f64| t.tanh())),
            (x.powf(-1.5), Box::new(|t: f64| t.powf(-1.5))),
            (x.powi(-3), Box::new(|t: f64| t.powi(-3))),
            (x.cos(), Box::new(|t: f64| t.cos())),
        ];
        for (jet, f) in checks {
            assert!((jet.value() - f(0.8)).abs() < 1e-14);
            let d1 = central(&f, 0.8, 1e-6);
            assert!((jet.partial(&[1]) - d1).abs() < 1e-7, "{jet:?}");
            let d2 = (f(0.8 + 1e-4) - 2.0 * f(0.8) + f(0.8 - 1e-4)) / 1e-8;
            assert!((jet.partial(&[2]) - d2).abs() < 1e-5);
        }
    }

    #[test]
    fn fourth_derivative_of_exp_sin() {
        // d⁴/dx⁴ sin x = sin x
        let x = Jet::variable(1, 4, 1.1, 0);
        assert!((x.sin().partial(&[4]) - 1.1f64.sin()).abs() < 1e-13);
        assert!((x.exp().partial(&[3]) - 1.1f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn derivative_lowers_order() {
        let x = Jet::variables(&[1.0, 2.0], 3);
        let u = &x[0].powi(3) * &x[1];
        let du = u.d(0);
        assert_eq!(du.order(), 2);
        // ∂₀u = 3x²y, ∂₀∂₀∂₁ u = 6x
        assert!((du.value() - 6.0).abs() < 1e-14);
        assert!((du.partial(&[1, 1]) - 6.0).abs() < 1e-14);
    }

    #[test]
    fn substitution_composes_maps() {
        // u(x, y) = x² y around (1, 2); substitute x = cos t, y = sin t at t = 0.4
        let base = [0.4f64.cos(), 0.4f64.sin()];
        let vars = Jet::variables(&base, 3);
        let u = &vars[0].square() * &vars[1];
        let t = Jet::variable(1, 3, 0.4, 0);
        let comp = u.substitute(&base, &[t.cos(), t.sin()]);
        let direct = &t.cos().square() * &t.sin();
        for (a, b) in comp.coeffs().iter().zip(direct.coeffs()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn mixed_orders_truncate() {
        let a = Jet::variable(2, 3, 1.0, 0);
        let b = Jet::variable(2, 1, 2.0, 1);
        assert_eq!((&a * &b).order(), 1);
        assert_eq!((&a + &b).order(), 1);
    }
}
