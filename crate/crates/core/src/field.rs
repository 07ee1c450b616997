//! Fields on a chart, evaluated as Taylor jets.
//!
//! A [`JetMap`] is either analytic (a closure over jets, exact derivatives of
//! every order) or sampled (plain values with optional first and second
//! partials; higher partials come from central finite differences). Scalar,
//! vector and symmetric tensor fields wrap a `JetMap` with the right number of
//! components.

use std::sync::Arc;

use crate::expr::Expr;
use crate::jet::{self, Jet};

pub type JetFn = Arc<dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync>;
pub type ValueFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
/// First partials, indexed `[component][k]`.
pub type D1Fn = Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;
/// Second partials, indexed `[component][k][l]`.
pub type D2Fn = Arc<dyn Fn(&[f64]) -> Vec<Vec<Vec<f64>>> + Send + Sync>;

/// Step sizes for finite differences, by the number of differentiations the
/// stencil performs (1 to 4).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub steps: [f64; 4],
}

impl FdConfig {
    pub const DEFAULT_BASE: f64 = 1e-5;

    /// Steps `base × (1, 10, 100, 1000)`.
    pub fn from_base(base: f64) -> Self {
        Self {
            steps: [base, 10.0 * base, 100.0 * base, 1000.0 * base],
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            steps: self.steps.map(|s| s * factor),
        }
    }

    pub fn step(&self, order: usize) -> f64 {
        self.steps[order.clamp(1, 4) - 1]
    }
}

impl Default for FdConfig {
    fn default() -> Self {
        Self::from_base(Self::DEFAULT_BASE)
    }
}

#[derive(Clone)]
pub enum JetMap {
    Analytic {
        dim: usize,
        len: usize,
        f: JetFn,
    },
    Sampled {
        dim: usize,
        len: usize,
        value: ValueFn,
        d1: Option<D1Fn>,
        d2: Option<D2Fn>,
        fd: FdConfig,
    },
}

impl std::fmt::Debug for JetMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            JetMap::Analytic { dim, len, .. } => write!(f, "JetMap::Analytic(dim={dim}, len={len})"),
            JetMap::Sampled { dim, len, fd, d1, d2, .. } => write!(
                f,
                "JetMap::Sampled(dim={dim}, len={len}, d1={}, d2={}, fd={:?})",
                d1.is_some(),
                d2.is_some(),
                fd.steps
            ),
        }
    }
}

// 1-D central stencils for derivative orders 1..=4: (offset in steps, weight·hᵏ)
const STENCILS: [&[(f64, f64)]; 4] = [
    &[(-1.0, -0.5), (1.0, 0.5)],
    &[(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)],
    &[(-2.0, -0.5), (-1.0, 1.0), (1.0, -1.0), (2.0, 0.5)],
    &[(-2.0, 1.0), (-1.0, -4.0), (0.0, 6.0), (1.0, -4.0), (2.0, 1.0)],
];

impl JetMap {
    pub fn analytic(dim: usize, len: usize, f: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static) -> Self {
        JetMap::Analytic {
            dim,
            len,
            f: Arc::new(f),
        }
    }

    pub fn sampled(
        dim: usize,
        len: usize,
        value: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        fd: FdConfig,
    ) -> Self {
        JetMap::Sampled {
            dim,
            len,
            value: Arc::new(value),
            d1: None,
            d2: None,
            fd,
        }
    }

    pub fn with_derivatives(self, d1: Option<D1Fn>, d2: Option<D2Fn>) -> Self {
        match self {
            JetMap::Sampled {
                dim, len, value, fd, ..
            } => JetMap::Sampled {
                dim,
                len,
                value,
                d1,
                d2,
                fd,
            },
            other => other,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            JetMap::Analytic { dim, .. } | JetMap::Sampled { dim, .. } => *dim,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            JetMap::Analytic { len, .. } | JetMap::Sampled { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_sampled(&self) -> bool {
        matches!(self, JetMap::Sampled { .. })
    }

    /// Replace derivatives by finite differences of point values.
    pub fn to_fd(&self, fd: FdConfig) -> Self {
        match self {
            JetMap::Analytic { dim, len, f } => {
                let f = f.clone();
                JetMap::Sampled {
                    dim: *dim,
                    len: *len,
                    value: Arc::new(move |x: &[f64]| {
                        f(&Jet::variables(x, 0)).iter().map(Jet::value).collect()
                    }),
                    d1: None,
                    d2: None,
                    fd,
                }
            }
            JetMap::Sampled {
                dim, len, value, ..
            } => JetMap::Sampled {
                dim: *dim,
                len: *len,
                value: value.clone(),
                d1: None,
                d2: None,
                fd,
            },
        }
    }

    pub fn values(&self, x: &[f64]) -> Vec<f64> {
        match self {
            JetMap::Analytic { f, .. } => f(&Jet::variables(x, 0)).iter().map(Jet::value).collect(),
            JetMap::Sampled { value, .. } => value(x),
        }
    }

    /// Taylor expansion of every component around `x` to the given order.
    pub fn taylor(&self, x: &[f64], order: usize) -> Vec<Jet> {
        match self {
            JetMap::Analytic { f, .. } => f(&Jet::variables(x, order)),
            JetMap::Sampled { .. } => self.sampled_taylor(x, order),
        }
    }

    /// Evaluate on arbitrary jets (composition with a map into the chart).
    pub fn eval(&self, x: &[Jet]) -> Vec<Jet> {
        match self {
            JetMap::Analytic { f, .. } => f(x),
            JetMap::Sampled { .. } => {
                let base: Vec<f64> = x.iter().map(Jet::value).collect();
                let order = x.iter().map(Jet::order).min().unwrap_or(0);
                let t = self.sampled_taylor(&base, order);
                jet::substitute_many(&t, &base, x)
            }
        }
    }

    fn sampled_taylor(&self, x: &[f64], order: usize) -> Vec<Jet> {
        let JetMap::Sampled {
            dim,
            len,
            value,
            d1,
            d2,
            fd,
        } = self
        else {
            unreachable!()
        };
        let (dim, len) = (*dim, *len);
        let table = jet::table(dim, order);
        let mut coeffs = vec![vec![0.0; table.len()]; len];
        let v0 = value(x);
        for c in 0..len {
            coeffs[c][0] = v0[c];
        }
        let d1_at = d1.as_ref().map(|d| d(x));
        let d2_at = d2.as_ref().map(|d| d(x));
        for (idx, alpha) in table.exponents().iter().enumerate().skip(1) {
            let total: usize = alpha.iter().map(|&a| a as usize).sum();
            let fact: f64 = alpha.iter().map(|&a| (1..=a as usize).product::<usize>() as f64).product();
            // peel off the unit directions covered by analytic partials
            let peel = if d2.is_some() && total >= 2 {
                2
            } else if d1.is_some() {
                1
            } else {
                0
            };
            let mut rest = alpha.clone();
            let mut dirs = Vec::with_capacity(peel);
            for _ in 0..peel {
                let k = rest.iter().position(|&a| a > 0).unwrap();
                rest[k] -= 1;
                dirs.push(k);
            }
            let partial = if rest.iter().all(|&a| a == 0) {
                match peel {
                    1 => (0..len).map(|c| d1_at.as_ref().unwrap()[c][dirs[0]]).collect(),
                    _ => (0..len).map(|c| d2_at.as_ref().unwrap()[c][dirs[0]][dirs[1]]).collect(),
                }
            } else {
                let base_fn = |p: &[f64]| -> Vec<f64> {
                    match peel {
                        0 => value(p),
                        1 => {
                            let d = d1.as_ref().unwrap()(p);
                            (0..len).map(|c| d[c][dirs[0]]).collect()
                        }
                        _ => {
                            let d = d2.as_ref().unwrap()(p);
                            (0..len).map(|c| d[c][dirs[0]][dirs[1]]).collect()
                        }
                    }
                };
                fd_partial(&base_fn, x, &rest, len, fd)
            };
            for c in 0..len {
                coeffs[c][idx] = partial[c] / fact;
            }
        }
        coeffs
            .into_iter()
            .map(|c| Jet::from_coeffs(dim, order, c))
            .collect()
    }
}

/// Tensor-product central difference for the partial `∂^alpha` of a vector
/// valued function.
fn fd_partial(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], alpha: &[u8], len: usize, fd: &FdConfig) -> Vec<f64> {
    let total: usize = alpha.iter().map(|&a| a as usize).sum();
    if total == 0 {
        return f(x);
    }
    let h = fd.step(total);
    let axes: Vec<(usize, &[(f64, f64)])> = alpha
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0)
        .map(|(k, &a)| (k, STENCILS[a as usize - 1]))
        .collect();
    let mut acc = vec![0.0; len];
    let mut counters = vec![0usize; axes.len()];
    let mut p = x.to_vec();
    loop {
        let mut weight = 1.0;
        for (slot, &(k, stencil)) in axes.iter().enumerate() {
            let (offset, w) = stencil[counters[slot]];
            p[k] = x[k] + offset * h;
            weight *= w;
        }
        if weight != 0.0 {
            let v = f(&p);
            for c in 0..len {
                acc[c] += weight * v[c];
            }
        }
        let mut slot = 0;
        loop {
            if slot == axes.len() {
                let scale = h.powi(total as i32);
                return acc.into_iter().map(|a| a / scale).collect();
            }
            counters[slot] += 1;
            if counters[slot] < axes[slot].1.len() {
                break;
            }
            counters[slot] = 0;
            slot += 1;
        }
    }
}

/// A scalar function on a chart.
#[derive(Clone, Debug)]
pub struct ScalarField(pub JetMap);

impl ScalarField {
    pub fn analytic(dim: usize, f: impl Fn(&[Jet]) -> Jet + Send + Sync + 'static) -> Self {
        Self(JetMap::analytic(dim, 1, move |x| vec![f(x)]))
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::analytic(dim, move |x| x[0].lift(c))
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(dim, 0.0)
    }

    pub fn from_expr(expr: Expr, dim: usize) -> Self {
        Self::analytic(dim, move |x| expr.eval_jet(x))
    }

    /// Sampled field with optional analytic first and second partials.
    pub fn sampled(
        dim: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        d1: Option<Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>>,
        d2: Option<Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>>,
        fd: FdConfig,
    ) -> Self {
        let d1: Option<D1Fn> = d1.map(|d| Arc::new(move |x: &[f64]| vec![d(x)]) as D1Fn);
        let d2: Option<D2Fn> = d2.map(|d| Arc::new(move |x: &[f64]| vec![d(x)]) as D2Fn);
        Self(JetMap::sampled(dim, 1, move |x| vec![value(x)], fd).with_derivatives(d1, d2))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.0.values(x)[0]
    }

    pub fn taylor(&self, x: &[f64], order: usize) -> Jet {
        self.0.taylor(x, order).pop().unwrap()
    }

    pub fn eval(&self, x: &[Jet]) -> Jet {
        self.0.eval(x).pop().unwrap()
    }

    pub fn is_fd(&self) -> bool {
        self.0.is_sampled()
    }

    pub fn to_fd(&self, fd: FdConfig) -> Self {
        Self(self.0.to_fd(fd))
    }

    pub fn scale(&self, c: f64) -> Self {
        let inner = self.0.clone();
        Self(JetMap::analytic(self.dim(), 1, move |x| vec![inner.eval(x).pop().unwrap() * c]))
    }

    pub fn add_constant(&self, c: f64) -> Self {
        let inner = self.0.clone();
        Self(JetMap::analytic(self.dim(), 1, move |x| vec![inner.eval(x).pop().unwrap() + c]))
    }

    pub fn plus(&self, other: &ScalarField) -> Self {
        let (a, b) = (self.0.clone(), other.0.clone());
        Self(JetMap::analytic(self.dim(), 1, move |x| {
            vec![a.eval(x).pop().unwrap() + b.eval(x).pop().unwrap()]
        }))
    }
}

/// A contravariant vector field `X^i`.
#[derive(Clone, Debug)]
pub struct VectorField(pub JetMap);

impl VectorField {
    pub fn analytic(dim: usize, f: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static) -> Self {
        Self(JetMap::analytic(dim, dim, f))
    }

    pub fn zero(dim: usize) -> Self {
        Self::analytic(dim, move |x| vec![x[0].lift(0.0); dim])
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn taylor(&self, x: &[f64], order: usize) -> Vec<Jet> {
        self.0.taylor(x, order)
    }
}

/// A symmetric covariant 2-tensor `h_ij`, stored as its full `n×n` matrix.
#[derive(Clone, Debug)]
pub struct SymTensorField(pub JetMap);

impl SymTensorField {
    /// `f` returns the upper triangle row by row (`i ≤ j`).
    pub fn analytic(dim: usize, f: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static) -> Self {
        Self(JetMap::analytic(dim, dim * dim, move |x| {
            let upper = f(x);
            assert_eq!(upper.len(), dim * (dim + 1) / 2, "upper triangle size");
            expand_upper(&upper, dim)
        }))
    }

    pub fn zero(dim: usize) -> Self {
        Self::analytic(dim, move |x| vec![x[0].lift(0.0); dim * (dim + 1) / 2])
    }

    /// `φ · M` for a constant symmetric matrix `M` and scalar `φ`.
    pub fn scalar_times(phi: ScalarField, m: Vec<Vec<f64>>) -> Self {
        let dim = m.len();
        Self::analytic(dim, move |x| {
            let p = phi.eval(x);
            let mut out = Vec::new();
            for i in 0..dim {
                for j in i..dim {
                    out.push(&p * m[i][j]);
                }
            }
            out
        })
    }

    pub fn from_exprs(upper: Vec<Expr>, dim: usize) -> Self {
        Self::analytic(dim, move |x| upper.iter().map(|e| e.eval_jet(x)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn taylor(&self, x: &[f64], order: usize) -> Vec<Vec<Jet>> {
        to_matrix(self.0.taylor(x, order), self.dim())
    }

    pub fn eval(&self, x: &[Jet]) -> Vec<Vec<Jet>> {
        to_matrix(self.0.eval(x), self.dim())
    }

    pub fn value(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let v = self.0.values(x);
        let n = self.dim();
        (0..n).map(|i| v[i * n..(i + 1) * n].to_vec()).collect()
    }

    pub fn to_fd(&self, fd: FdConfig) -> Self {
        Self(self.0.to_fd(fd))
    }

    pub fn is_fd(&self) -> bool {
        self.0.is_sampled()
    }

    pub fn linear_combination(terms: Vec<(f64, SymTensorField)>) -> Self {
        let dim = terms[0].1.dim();
        Self(JetMap::analytic(dim, dim * dim, move |x| {
            let mut acc: Option<Vec<Jet>> = None;
            for (c, t) in &terms {
                let v: Vec<Jet> = t.0.eval(x).into_iter().map(|j| j * *c).collect();
                acc = Some(match acc {
                    None => v,
                    Some(a) => a.iter().zip(&v).map(|(p, q)| p + q).collect(),
                });
            }
            acc.unwrap()
        }))
    }
}

pub(crate) fn expand_upper(upper: &[Jet], dim: usize) -> Vec<Jet> {
    let mut full = vec![None; dim * dim];
    let mut k = 0;
    for i in 0..dim {
        for j in i..dim {
            full[i * dim + j] = Some(upper[k].clone());
            full[j * dim + i] = Some(upper[k].clone());
            k += 1;
        }
    }
    full.into_iter().map(Option::unwrap).collect()
}

pub(crate) fn to_matrix(flat: Vec<Jet>, dim: usize) -> Vec<Vec<Jet>> {
    let mut it = flat.into_iter();
    (0..dim).map(|_| it.by_ref().take(dim).collect()).collect()
}
