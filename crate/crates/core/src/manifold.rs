//! Chart-based Riemannian models and the tensor calculus built on them.
//!
//! Everything is computed from the metric components `g_ij` in a single chart.
//! A [`LocalGeometry`] holds the Taylor jets of `g`, `g⁻¹`, the Christoffel
//! symbols and the Ricci tensor around one point; the differential operators
//! act on jets and return jets of lower order, so compositions such as
//! `d(Δ_f u)` or `div(div h)` are just repeated application.
//!
//! Conventions: tensors are stored fully covariant, vector fields
//! contravariant. `Ric_jk = ∂_l Γ^l_jk − ∂_k Γ^l_jl + Γ^l_lm Γ^m_jk − Γ^l_km Γ^m_jl`
//! (positive on round spheres) and `Δ = tr ∇²`.

use std::ops::Deref;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{to_matrix, FdConfig, JetMap, ScalarField, SymTensorField, VectorField};
use crate::jet::Jet;

pub type JetMat = Vec<Vec<Jet>>;

/// Coordinates of a point of a model's chart, validated against its domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    coords: Vec<f64>,
}

impl ChartPoint {
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

impl Deref for ChartPoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.coords
    }
}

/// Coordinate region used to build quadrature and sample grids.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// Product of intervals; periodic axes use the trapezoid rule.
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
        periodic: Vec<bool>,
    },
    /// Hyperspherical coordinates `(θ₁, …, θ_{n−1}, φ)` with `θ₁` restricted
    /// to `polar`; the other angles cover their full range.
    Spherical { polar: (f64, f64) },
}

/// One connected component of the boundary, parameterized over an
/// `(n−1)`-dimensional parameter box.
#[derive(Clone)]
pub struct BoundaryComponent {
    pub name: String,
    pub param_lo: Vec<f64>,
    pub param_hi: Vec<f64>,
    pub param_periodic: Vec<bool>,
    /// Parameter → chart coordinates.
    pub map: JetMap,
    /// Outward unit normal (contravariant chart components) at a chart point.
    pub normal: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl std::fmt::Debug for BoundaryComponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BoundaryComponent")
            .field("name", &self.name)
            .field("param_lo", &self.param_lo)
            .field("param_hi", &self.param_hi)
            .finish()
    }
}

impl BoundaryComponent {
    pub fn param_dim(&self) -> usize {
        self.param_lo.len()
    }

    pub fn point(&self, s: &[f64]) -> Vec<f64> {
        self.map.values(s)
    }
}

#[derive(Clone, Debug, Default)]
pub struct BoundaryModel {
    pub components: Vec<BoundaryComponent>,
}

#[derive(Clone)]
pub struct MetricModel {
    pub name: String,
    pub dim: usize,
    /// Metric components as a flattened `n×n` map.
    pub metric: JetMap,
    pub domain: Domain,
    contains: Arc<dyn Fn(&[f64]) -> bool + Send + Sync>,
    pub boundary: Option<BoundaryModel>,
    /// Chart → ambient Euclidean coordinates, when the model is embedded.
    pub embedding: Option<JetMap>,
    /// Compact without boundary (integration by parts produces no boundary terms).
    pub closed: bool,
}

impl std::fmt::Debug for MetricModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MetricModel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("domain", &self.domain)
            .field("closed", &self.closed)
            .finish()
    }
}

impl MetricModel {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        metric: JetMap,
        domain: Domain,
        contains: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        assert_eq!(metric.len(), dim * dim, "metric map must have n² components");
        Self {
            name: name.into(),
            dim,
            metric,
            domain,
            contains: Arc::new(contains),
            boundary: None,
            embedding: None,
            closed: false,
        }
    }

    pub fn with_boundary(mut self, boundary: BoundaryModel) -> Self {
        self.boundary = Some(boundary);
        self
    }

    pub fn with_embedding(mut self, embedding: JetMap) -> Self {
        self.embedding = Some(embedding);
        self
    }

    pub fn closed(mut self) -> Self {
        self.closed = true;
        self
    }

    /// Same model with metric derivatives taken by finite differences.
    pub fn to_fd(&self, fd: FdConfig) -> Self {
        let mut m = self.clone();
        m.metric = self.metric.to_fd(fd);
        m
    }

    pub fn is_fd(&self) -> bool {
        self.metric.is_sampled()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim && (self.contains)(x)
    }

    pub fn point(&self, coords: &[f64]) -> Result<ChartPoint> {
        if coords.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: coords.len(),
            });
        }
        if !(self.contains)(coords) {
            return Err(self.outside(coords));
        }
        Ok(ChartPoint {
            coords: coords.to_vec(),
        })
    }

    fn outside(&self, coords: &[f64]) -> Error {
        Error::OutsideChart {
            model: self.name.clone(),
            coords: coords.to_vec(),
        }
    }

    pub fn metric_at(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let v = self.metric.values(x);
        (0..self.dim).map(|i| v[i * self.dim..(i + 1) * self.dim].to_vec()).collect()
    }

    /// Local geometry at `x` with metric jets of the given order. Christoffel
    /// symbols are then valid to order `order − 1`, curvature to `order − 2`.
    pub fn geometry(&self, x: &[f64], order: usize) -> Result<LocalGeometry> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if !(self.contains)(x) {
            return Err(self.outside(x));
        }
        LocalGeometry::new(to_matrix(self.metric.taylor(x, order), self.dim)).map_err(|e| match e {
            Error::NotPositiveDefinite(_) => Error::NotPositiveDefinite(x.to_vec()),
            e => e,
        })
    }

    /// Ambient coordinates of a chart point.
    pub fn embed(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.embedding.as_ref().map(|e| e.values(x))
    }
}

fn gauss_jordan(a: &JetMat) -> Result<(JetMat, Jet)> {
    let n = a.len();
    let mut m: JetMat = a.to_vec();
    let mut inv: JetMat = (0..n)
        .map(|i| (0..n).map(|j| a[0][0].lift(if i == j { 1.0 } else { 0.0 })).collect())
        .collect();
    let mut det = a[0][0].lift(1.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&p, &q| m[p][col].value().abs().total_cmp(&m[q][col].value().abs()))
            .unwrap();
        if m[pivot][col].value().abs() < 1e-300 {
            return Err(Error::NotPositiveDefinite(Vec::new()));
        }
        if pivot != col {
            m.swap(pivot, col);
            inv.swap(pivot, col);
            det = -det;
        }
        let p = m[col][col].clone();
        det = &det * &p;
        let r = p.recip();
        for j in 0..n {
            m[col][j] = &m[col][j] * &r;
            inv[col][j] = &inv[col][j] * &r;
        }
        for row in 0..n {
            if row != col {
                let factor = m[row][col].clone();
                for j in 0..n {
                    m[row][j] = &m[row][j] - &(&factor * &m[col][j]);
                    inv[row][j] = &inv[row][j] - &(&factor * &inv[col][j]);
                }
            }
        }
    }
    Ok((inv, det))
}

fn is_spd(g: &[Vec<f64>]) -> bool {
    let n = g.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = g[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return false;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    (0..n).all(|i| (0..i).all(|j| (g[i][j] - g[j][i]).abs() <= 1e-12 * (1.0 + g[i][j].abs())))
}

/// Metric, connection and curvature jets around one chart point.
#[derive(Clone, Debug)]
pub struct LocalGeometry {
    pub dim: usize,
    pub order: usize,
    pub g: JetMat,
    pub ginv: JetMat,
    pub det: Jet,
    /// `gamma[k][i][j] = Γ^k_ij`, order − 1.
    pub gamma: Vec<JetMat>,
    /// Ricci tensor, order − 2 (absent when the order is below 2).
    pub ricci: Option<JetMat>,
    pub scalar: Option<Jet>,
}

impl LocalGeometry {
    pub fn new(g: JetMat) -> Result<Self> {
        let n = g.len();
        let order = g[0][0].order();
        let values: Vec<Vec<f64>> = g.iter().map(|r| r.iter().map(Jet::value).collect()).collect();
        if !is_spd(&values) {
            return Err(Error::NotPositiveDefinite(Vec::new()));
        }
        let (ginv, det) = gauss_jordan(&g)?;
        let mut gamma = Vec::new();
        if order >= 1 {
            let dg: Vec<JetMat> = (0..n)
                .map(|k| (0..n).map(|i| (0..n).map(|j| g[i][j].d(k)).collect()).collect())
                .collect();
            // first kind: Γ_lij = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
            let first: Vec<JetMat> = (0..n)
                .map(|l| {
                    (0..n)
                        .map(|i| {
                            (0..n)
                                .map(|j| (&dg[i][j][l] + &dg[j][i][l] - &dg[l][i][j]) * 0.5)
                                .collect()
                        })
                        .collect()
                })
                .collect();
            gamma = (0..n)
                .map(|k| {
                    (0..n)
                        .map(|i| {
                            (0..n)
                                .map(|j| {
                                    let mut acc = &ginv[k][0] * &first[0][i][j];
                                    for l in 1..n {
                                        acc += &ginv[k][l] * &first[l][i][j];
                                    }
                                    acc
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect();
        }
        let mut geo = Self {
            dim: n,
            order,
            g,
            ginv,
            det,
            gamma,
            ricci: None,
            scalar: None,
        };
        if order >= 2 {
            let ric = geo.compute_ricci();
            geo.scalar = Some(geo.trace(&ric));
            geo.ricci = Some(ric);
        }
        Ok(geo)
    }

    fn compute_ricci(&self) -> JetMat {
        let n = self.dim;
        let gm = &self.gamma;
        let zero = gm[0][0][0].d(0).lift(0.0);
        let mut ric = vec![vec![zero.clone(); n]; n];
        for j in 0..n {
            for k in j..n {
                let mut acc = zero.clone();
                for l in 0..n {
                    acc += gm[l][j][k].d(l);
                    acc -= gm[l][j][l].d(k);
                    for m in 0..n {
                        acc += &gm[l][l][m] * &gm[m][j][k];
                        acc -= &gm[l][k][m] * &gm[m][j][l];
                    }
                }
                ric[j][k] = acc.clone();
                ric[k][j] = acc;
            }
        }
        ric
    }

    pub fn ricci(&self) -> &JetMat {
        self.ricci.as_ref().expect("geometry order too low for curvature")
    }

    pub fn scalar(&self) -> &Jet {
        self.scalar.as_ref().expect("geometry order too low for curvature")
    }

    pub fn sqrt_det(&self) -> Jet {
        self.det.sqrt()
    }

    fn zero(&self) -> Jet {
        self.g[0][0].lift(0.0)
    }

    /// `∂_k u` for each k.
    pub fn grad_cov(&self, u: &Jet) -> Vec<Jet> {
        (0..self.dim).map(|k| u.d(k)).collect()
    }

    pub fn raise(&self, w: &[Jet]) -> Vec<Jet> {
        (0..self.dim)
            .map(|i| crate::jet::sum(&(0..self.dim).map(|j| &self.ginv[i][j] * &w[j]).collect::<Vec<_>>()).unwrap())
            .collect()
    }

    pub fn lower(&self, x: &[Jet]) -> Vec<Jet> {
        (0..self.dim)
            .map(|i| crate::jet::sum(&(0..self.dim).map(|j| &self.g[i][j] * &x[j]).collect::<Vec<_>>()).unwrap())
            .collect()
    }

    pub fn gradient(&self, u: &Jet) -> Vec<Jet> {
        self.raise(&self.grad_cov(u))
    }

    /// `g^{ij} a_i b_j` for covectors.
    pub fn inner_cov(&self, a: &[Jet], b: &[Jet]) -> Jet {
        let mut acc = self.zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += &self.ginv[i][j] * &(&a[i] * &b[j]);
            }
        }
        acc
    }

    /// `g_ij X^i Y^j` for vectors.
    pub fn inner_vec(&self, x: &[Jet], y: &[Jet]) -> Jet {
        let mut acc = self.zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += &self.g[i][j] * &(&x[i] * &y[j]);
            }
        }
        acc
    }

    /// `⟨A, B⟩ = g^{ik} g^{jl} A_ij B_kl`.
    pub fn inner(&self, a: &JetMat, b: &JetMat) -> Jet {
        let n = self.dim;
        let ar = self.raise_both(a);
        let mut acc = self.zero();
        for i in 0..n {
            for j in 0..n {
                acc += &ar[i][j] * &b[i][j];
            }
        }
        acc
    }

    /// `A^{ij} = g^{ik} g^{jl} A_kl`.
    pub fn raise_both(&self, a: &JetMat) -> JetMat {
        let n = self.dim;
        let half: JetMat = (0..n)
            .map(|i| {
                (0..n)
                    .map(|l| crate::jet::sum(&(0..n).map(|k| &self.ginv[i][k] * &a[k][l]).collect::<Vec<_>>()).unwrap())
                    .collect()
            })
            .collect();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| crate::jet::sum(&(0..n).map(|l| &half[i][l] * &self.ginv[l][j]).collect::<Vec<_>>()).unwrap())
                    .collect()
            })
            .collect()
    }

    pub fn trace(&self, a: &JetMat) -> Jet {
        let mut acc = self.zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += &self.ginv[i][j] * &a[i][j];
            }
        }
        acc
    }

    /// `∇²u_ij = ∂_i∂_j u − Γ^k_ij ∂_k u`.
    pub fn hessian(&self, u: &Jet) -> JetMat {
        self.nabla_oneform(&self.grad_cov(u))
    }

    pub fn laplacian(&self, u: &Jet) -> Jet {
        self.trace(&self.hessian(u))
    }

    /// `∇_i w_j = ∂_i w_j − Γ^k_ij w_k`.
    pub fn nabla_oneform(&self, w: &[Jet]) -> JetMat {
        let n = self.dim;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut acc = w[j].d(i);
                        for k in 0..n {
                            acc -= &self.gamma[k][i][j] * &w[k];
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    /// `∇_k T_ij`, indexed `[k][i][j]`.
    pub fn nabla_tensor(&self, t: &JetMat) -> Vec<JetMat> {
        let n = self.dim;
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                let mut acc = t[i][j].d(k);
                                for l in 0..n {
                                    acc -= &self.gamma[l][k][i] * &t[l][j];
                                    acc -= &self.gamma[l][k][j] * &t[i][l];
                                }
                                acc
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// `∇_i X^j = ∂_i X^j + Γ^j_ik X^k`, indexed `[i][j]`.
    pub fn nabla_vector(&self, x: &[Jet]) -> JetMat {
        let n = self.dim;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut acc = x[j].d(i);
                        for k in 0..n {
                            acc += &self.gamma[j][i][k] * &x[k];
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    /// `div X = ∇_i X^i`.
    pub fn div_vector(&self, x: &[Jet]) -> Jet {
        let nv = self.nabla_vector(x);
        crate::jet::sum(&(0..self.dim).map(|i| nv[i][i].clone()).collect::<Vec<_>>()).unwrap()
    }

    /// `(div T)_j = g^{ik} ∇_i T_kj`.
    pub fn div_tensor(&self, t: &JetMat) -> Vec<Jet> {
        let n = self.dim;
        let nt = self.nabla_tensor(t);
        (0..n)
            .map(|j| {
                let mut acc = nt[0][0][j].lift(0.0);
                for i in 0..n {
                    for k in 0..n {
                        acc += &self.ginv[i][k] * &nt[i][k][j];
                    }
                }
                acc
            })
            .collect()
    }

    /// `div w = g^{ij} ∇_i w_j`.
    pub fn div_oneform(&self, w: &[Jet]) -> Jet {
        self.trace(&self.nabla_oneform(w))
    }

    /// `T(X, ·)_j = T_ij X^i`.
    pub fn contract(&self, t: &JetMat, x: &[Jet]) -> Vec<Jet> {
        let n = self.dim;
        (0..n)
            .map(|j| crate::jet::sum(&(0..n).map(|i| &t[i][j] * &x[i]).collect::<Vec<_>>()).unwrap())
            .collect()
    }

    /// `T(X, Y) = T_ij X^i Y^j`.
    pub fn bilinear(&self, t: &JetMat, x: &[Jet], y: &[Jet]) -> Jet {
        let tx = self.contract(t, x);
        crate::jet::sum(&(0..self.dim).map(|j| &tx[j] * &y[j]).collect::<Vec<_>>()).unwrap()
    }

    /// `∘T = T − (tr T / n) g`.
    pub fn traceless(&self, t: &JetMat) -> JetMat {
        let tr = self.trace(t) / self.dim as f64;
        t.iter()
            .zip(&self.g)
            .map(|(row, grow)| row.iter().zip(grow).map(|(a, b)| a - &(&tr * b)).collect())
            .collect()
    }

    /// Lie derivative `(ℒ_X g)_ij = ∇_i X_j + ∇_j X_i`.
    pub fn lie_metric(&self, x: &[Jet]) -> JetMat {
        let nv = self.nabla_vector(x);
        let n = self.dim;
        // ∇_i X_j = g_jk ∇_i X^k
        let low: JetMat = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| crate::jet::sum(&(0..n).map(|k| &self.g[j][k] * &nv[i][k]).collect::<Vec<_>>()).unwrap())
                    .collect()
            })
            .collect();
        (0..n)
            .map(|i| (0..n).map(|j| &low[i][j] + &low[j][i]).collect())
            .collect()
    }
}

pub fn values(m: &JetMat) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.iter().map(Jet::value).collect()).collect()
}

pub fn vec_values(v: &[Jet]) -> Vec<f64> {
    v.iter().map(Jet::value).collect()
}

/// Christoffel symbols `Γ^k_ij` at `x`, indexed `[k][i][j]`.
pub fn christoffel(model: &MetricModel, x: &ChartPoint) -> Result<Vec<Vec<Vec<f64>>>> {
    let geo = model.geometry(x, 1)?;
    Ok(geo.gamma.iter().map(values).collect())
}

pub fn ricci(model: &MetricModel, x: &ChartPoint) -> Result<Vec<Vec<f64>>> {
    Ok(values(model.geometry(x, 2)?.ricci()))
}

pub fn scalar_curvature(model: &MetricModel, x: &ChartPoint) -> Result<f64> {
    Ok(model.geometry(x, 2)?.scalar().value())
}

/// Contravariant gradient `g^{ij} ∂_j u`.
pub fn gradient(model: &MetricModel, u: &ScalarField, x: &ChartPoint) -> Result<Vec<f64>> {
    let geo = model.geometry(x, 1)?;
    Ok(vec_values(&geo.gradient(&u.taylor(x, 1))))
}

pub fn hessian(model: &MetricModel, u: &ScalarField, x: &ChartPoint) -> Result<Vec<Vec<f64>>> {
    let geo = model.geometry(x, 1)?;
    Ok(values(&geo.hessian(&u.taylor(x, 2))))
}

pub fn laplacian(model: &MetricModel, u: &ScalarField, x: &ChartPoint) -> Result<f64> {
    let geo = model.geometry(x, 1)?;
    Ok(geo.laplacian(&u.taylor(x, 2)).value())
}

pub fn div_vector(model: &MetricModel, field: &VectorField, x: &ChartPoint) -> Result<f64> {
    let geo = model.geometry(x, 1)?;
    Ok(geo.div_vector(&field.taylor(x, 1)).value())
}

/// `(div h)_j = g^{ik} ∇_i h_kj`.
pub fn div_tensor(model: &MetricModel, h: &SymTensorField, x: &ChartPoint) -> Result<Vec<f64>> {
    let geo = model.geometry(x, 1)?;
    Ok(vec_values(&geo.div_tensor(&h.taylor(x, 1))))
}

/// `div(div h)`, the trace of the covariant derivative of `div h`.
pub fn div_div_tensor(model: &MetricModel, h: &SymTensorField, x: &ChartPoint) -> Result<f64> {
    let geo = model.geometry(x, 2)?;
    Ok(geo.div_oneform(&geo.div_tensor(&h.taylor(x, 2))).value())
}

pub fn tensor_inner(model: &MetricModel, a: &SymTensorField, b: &SymTensorField, x: &ChartPoint) -> Result<f64> {
    let geo = model.geometry(x, 0)?;
    Ok(geo.inner(&a.taylor(x, 0), &b.taylor(x, 0)).value())
}

/// `∇_i w_j` for a covector field given by its components.
pub fn covariant_d_oneform(model: &MetricModel, w: &JetMap, x: &ChartPoint) -> Result<Vec<Vec<f64>>> {
    let geo = model.geometry(x, 1)?;
    Ok(values(&geo.nabla_oneform(&w.taylor(x, 1))))
}

/// `∇_k T_ij`, indexed `[k][i][j]`.
pub fn covariant_d_tensor(model: &MetricModel, t: &SymTensorField, x: &ChartPoint) -> Result<Vec<Vec<Vec<f64>>>> {
    let geo = model.geometry(x, 1)?;
    Ok(geo.nabla_tensor(&t.taylor(x, 1)).iter().map(values).collect())
}
