//! Discretized drift Laplacian and adjoint operator: eigenproblems, kernel
//! search and minimum-singular-value probes.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::jet::Jet;
use crate::manifold::Domain;
use crate::models::unknown;
use crate::quadrature::{volume_grid, QuadratureGrid};
use crate::report::ResidualReport;
use crate::weighted::{tensor_norm, WeightedSpace};

pub const BASIS_KINDS: [&str; 5] = [
    "fourier-circle",
    "interval-dirichlet",
    "sphere-harmonic-chart",
    "hermite-chart",
    "grid-fd",
];

/// Gram matrices with a larger condition number are rejected.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// Which discretization to use and how large.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    pub kind: String,
    /// Modes (Fourier), functions (sine), degree (harmonics, Hermite) or
    /// grid cells (grid-fd).
    pub size: usize,
    /// Collocation nodes per axis; a kind-specific default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
}

impl BasisSpec {
    pub fn new(kind: &str, size: usize) -> Self {
        Self {
            kind: kind.into(),
            size,
            nodes: None,
        }
    }
}

/// Functions with jets, spanning the trial space.
#[derive(Clone, Debug)]
pub struct DiscreteBasis {
    pub kind: String,
    pub size: usize,
    pub labels: Vec<String>,
    pub functions: Vec<ScalarField>,
}

impl DiscreteBasis {
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// `Σ c_k φ_k`.
    pub fn combination(&self, coeffs: &[f64]) -> ScalarField {
        let funcs: Vec<(f64, ScalarField)> = coeffs
            .iter()
            .zip(&self.functions)
            .filter(|(c, _)| **c != 0.0)
            .map(|(c, f)| (*c, f.clone()))
            .collect();
        let dim = self.functions[0].dim();
        ScalarField::analytic(dim, move |x| {
            let mut acc = x[0].lift(0.0);
            for (c, f) in &funcs {
                acc += &f.eval(x) * *c;
            }
            acc
        })
    }

    /// `1, cos kθ, sin kθ` for `k ≤ modes` on the circle.
    pub fn fourier_circle(modes: usize) -> Self {
        let mut functions = vec![ScalarField::constant(1, 1.0)];
        let mut labels = vec!["1".to_string()];
        for k in 1..=modes {
            let kf = k as f64;
            functions.push(ScalarField::analytic(1, move |x| (&x[0] * kf).cos()));
            functions.push(ScalarField::analytic(1, move |x| (&x[0] * kf).sin()));
            labels.push(format!("cos{k}"));
            labels.push(format!("sin{k}"));
        }
        Self {
            kind: "fourier-circle".into(),
            size: modes,
            labels,
            functions,
        }
    }

    /// `e^{(f − f(c))/2} sin(kπ(x − a)/(b − a))`, `k = 1..=count`, on `[a, b]`
    /// with midpoint `c`. The half-density factor makes the weighted Gram
    /// matrix the identity on flat intervals.
    pub fn interval_dirichlet(ws: &WeightedSpace, count: usize) -> Result<Self> {
        let (a, b) = interval_bounds(ws)?;
        let mid = 0.5 * (a + b);
        let f0 = ws.density.value(&[mid]);
        let mut functions = Vec::with_capacity(count);
        for k in 1..=count {
            let w = k as f64 * PI / (b - a);
            let density = ws.density.clone();
            functions.push(ScalarField::analytic(1, move |x| {
                let half = ((density.eval(x) - f0) * 0.5).exp();
                &half * &((&x[0] - a) * w).sin()
            }));
        }
        Ok(Self {
            kind: "interval-dirichlet".into(),
            size: count,
            labels: (1..=count).map(|k| format!("sin{k}")).collect(),
            functions,
        })
    }

    /// Real spherical harmonics `Y_lm`, `l ≤ degree`, in the `(θ, φ)` chart of
    /// the 2-sphere. On the hemisphere `θ < π/2` (or its complement) only the
    /// harmonics vanishing on the equator (`l − m` odd) are kept.
    pub fn sphere_harmonics(ws: &WeightedSpace, degree: usize) -> Result<Self> {
        let model = &ws.model;
        let Domain::Spherical { polar } = model.domain else {
            return Err(Error::InvalidParameter("sphere-harmonic-chart needs a spherical chart".into()));
        };
        if model.dim != 2 {
            return Err(Error::InvalidParameter("sphere-harmonic-chart is two-dimensional".into()));
        }
        let dirichlet = model.boundary.is_some();
        if dirichlet {
            let equator = |t: f64| (t - PI / 2.0).abs() < 1e-12;
            if !(equator(polar.0) || equator(polar.1)) {
                return Err(Error::UnsupportedBoundary(
                    "harmonic Dirichlet basis needs the equator as boundary".into(),
                ));
            }
        }
        let radius = model.metric_at(&[PI / 2.0, 0.0])[0][0].sqrt();
        let mut functions = Vec::new();
        let mut labels = Vec::new();
        for l in 0..=degree {
            for m in -(l as i64)..=(l as i64) {
                let ma = m.unsigned_abs() as usize;
                if dirichlet && (l - ma) % 2 == 0 {
                    continue;
                }
                functions.push(ScalarField::analytic(2, move |x| real_harmonic(l, m, &x[0], &x[1]) * (1.0 / radius)));
                labels.push(format!("Y{l},{m}"));
            }
        }
        Ok(Self {
            kind: "sphere-harmonic-chart".into(),
            size: degree,
            labels,
            functions,
        })
    }

    /// Tensor products of probabilists' Hermite polynomials of total degree
    /// `≤ degree` in chart coordinates.
    pub fn hermite(dim: usize, degree: usize) -> Self {
        let mut exps: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..dim {
            exps = exps
                .into_iter()
                .flat_map(|e| {
                    let used: usize = e.iter().sum();
                    (0..=degree - used).map(move |k| {
                        let mut e = e.clone();
                        e.push(k);
                        e
                    })
                })
                .collect();
        }
        exps.sort_by_key(|e| (e.iter().sum::<usize>(), std::cmp::Reverse(e.clone())));
        let labels = exps.iter().map(|e| format!("He{e:?}")).collect();
        let functions = exps
            .into_iter()
            .map(|e| {
                ScalarField::analytic(dim, move |x| {
                    let mut acc = x[0].lift(1.0);
                    for (xi, &k) in x.iter().zip(&e) {
                        acc = &acc * &hermite_poly(k, xi);
                    }
                    acc
                })
            })
            .collect();
        Self {
            kind: "hermite-chart".into(),
            size: degree,
            labels,
            functions,
        }
    }
}

fn hermite_poly(k: usize, x: &Jet) -> Jet {
    let mut prev = x.lift(1.0);
    if k == 0 {
        return prev;
    }
    let mut cur = x.clone();
    for j in 1..k {
        let next = &(x * &cur) - &(&prev * j as f64);
        prev = cur;
        cur = next;
    }
    // unit norm under the standard Gaussian measure
    let fact: f64 = (1..=k).map(|v| v as f64).product();
    cur * (1.0 / fact.sqrt())
}

/// Orthonormal real spherical harmonic on the unit sphere.
fn real_harmonic(l: usize, m: i64, theta: &Jet, phi: &Jet) -> Jet {
    let ma = m.unsigned_abs() as usize;
    let c = theta.cos();
    let s = theta.sin();
    // P_m^m = (2m−1)!! sinᵐθ, then upward recurrence in l
    let mut pmm = c.lift(1.0);
    for k in 0..ma {
        pmm = &pmm * &(&s * (2 * k + 1) as f64);
    }
    let p = if l == ma {
        pmm
    } else {
        let mut p0 = pmm;
        let mut p1 = &(&c * &p0) * (2 * ma + 1) as f64;
        for ll in ma + 2..=l {
            let p2 = (&(&(&c * &p1) * (2 * ll - 1) as f64) - &(&p0 * (ll + ma - 1) as f64)) * (1.0 / (ll - ma) as f64);
            p0 = p1;
            p1 = p2;
        }
        p1
    };
    let ratio: f64 = ((l - ma + 1)..=(l + ma)).map(|v| v as f64).product();
    let mut norm = ((2 * l + 1) as f64 / (4.0 * PI) / ratio).sqrt();
    if m != 0 {
        norm *= 2f64.sqrt();
    }
    let angular = match m.cmp(&0) {
        std::cmp::Ordering::Greater => (phi * ma as f64).cos(),
        std::cmp::Ordering::Less => (phi * ma as f64).sin(),
        std::cmp::Ordering::Equal => phi.lift(1.0),
    };
    &p * &angular * norm
}

fn interval_bounds(ws: &WeightedSpace) -> Result<(f64, f64)> {
    match &ws.model.domain {
        Domain::Box { lo, hi, .. } if ws.dim() == 1 => Ok((lo[0], hi[0])),
        _ => Err(Error::InvalidParameter(format!(
            "model '{}' is not one-dimensional",
            ws.model.name
        ))),
    }
}

/// A trial space with its collocation grid, or a nodal finite-difference grid.
#[derive(Clone, Debug)]
pub enum Discretization {
    Spectral { basis: DiscreteBasis, grid: QuadratureGrid },
    GridFd { cells: usize },
}

impl Discretization {
    pub fn build(spec: &BasisSpec, ws: &WeightedSpace) -> Result<Self> {
        let spectral = |basis: DiscreteBasis, nodes: usize| -> Result<Self> {
            let grid = volume_grid(&ws.model, spec.nodes.unwrap_or(nodes))?;
            Ok(Discretization::Spectral { basis, grid })
        };
        match spec.kind.as_str() {
            "fourier-circle" => {
                if ws.dim() != 1 {
                    return Err(Error::InvalidParameter("fourier-circle needs a one-dimensional model".into()));
                }
                spectral(DiscreteBasis::fourier_circle(spec.size), 2 * spec.size + 2)
            }
            "interval-dirichlet" => spectral(DiscreteBasis::interval_dirichlet(ws, spec.size)?, 2 * spec.size + 32),
            "sphere-harmonic-chart" => spectral(DiscreteBasis::sphere_harmonics(ws, spec.size)?, 2 * spec.size + 8),
            "hermite-chart" => spectral(DiscreteBasis::hermite(ws.dim(), spec.size), spec.size + 36),
            "grid-fd" => {
                interval_bounds(ws)?;
                Ok(Discretization::GridFd { cells: spec.size })
            }
            other => Err(unknown("basis", other, &BASIS_KINDS)),
        }
    }
}

/// Basis samples and drift-Laplacian samples on the collocation grid.
#[derive(Clone, Debug)]
pub struct DriftLaplacianMatrix {
    /// `Φ[m][k] = φ_k(x_m)`.
    pub values: DMatrix<f64>,
    /// `L[m][k] = Δ_f φ_k(x_m)`.
    pub laplacian: DMatrix<f64>,
    /// `w_m √det g e^{−f}` at every node.
    pub weights: Vec<f64>,
    /// `G = Φᵀ W Φ`.
    pub gram: DMatrix<f64>,
    /// `S = Φᵀ W L`.
    pub stiffness: DMatrix<f64>,
    pub gram_condition: f64,
}

impl DriftLaplacianMatrix {
    /// `‖G⁻¹(S − Sᵀ)‖_F / max(1, ‖G⁻¹S‖_F)`: the defect of `G⁻¹S` from being
    /// self-adjoint in the weighted inner product.
    pub fn symmetry_residual(&self) -> f64 {
        let chol = self.gram.clone().cholesky().expect("gram checked at assembly");
        let a = chol.solve(&self.stiffness);
        let d = chol.solve(&(&self.stiffness - self.stiffness.transpose()));
        d.norm() / a.norm().max(1.0)
    }
}

fn measure_weights(ws: &WeightedSpace, grid: &QuadratureGrid) -> Vec<f64> {
    grid.points
        .par_iter()
        .zip(grid.weights.par_iter())
        .map(|(p, w)| w * crate::quadrature::det(&ws.model.metric_at(p)).sqrt() * ws.weight(p))
        .collect()
}

fn condition(gram: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn weighted_gram(values: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let w = DVector::from_column_slice(weights);
    let scaled = DMatrix::from_fn(values.nrows(), values.ncols(), |i, j| values[(i, j)] * w[i]);
    values.transpose() * scaled
}

pub fn assemble_drift_laplacian(
    ws: &WeightedSpace,
    basis: &DiscreteBasis,
    grid: &QuadratureGrid,
) -> Result<DriftLaplacianMatrix> {
    let k = basis.len();
    let rows = grid
        .points
        .par_iter()
        .map(|x| {
            let wp = ws.at(x, 2)?;
            Ok(basis
                .functions
                .iter()
                .map(|phi| {
                    let j = phi.taylor(x, 2);
                    (j.value(), wp.drift_laplacian(&j).value())
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let m = rows.len();
    let values = DMatrix::from_fn(m, k, |i, j| rows[i][j].0);
    let laplacian = DMatrix::from_fn(m, k, |i, j| rows[i][j].1);
    let weights = measure_weights(ws, grid);
    let gram = weighted_gram(&values, &weights);
    let wl = DMatrix::from_fn(m, k, |i, j| laplacian[(i, j)] * weights[i]);
    let stiffness = values.transpose() * wl;
    let gram_condition = condition(&gram);
    if !(gram_condition <= MAX_GRAM_CONDITION) {
        return Err(Error::IllConditioned(gram_condition));
    }
    Ok(DriftLaplacianMatrix {
        values,
        laplacian,
        weights,
        gram,
        stiffness,
        gram_condition,
    })
}

/// Eigenpairs of `Δ_f u = −σ u`, sorted by `σ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    /// Basis coefficients (spectral) or nodal values (grid-fd).
    pub eigenfields: Vec<Vec<f64>>,
    pub weighted_orthonormality_residual: f64,
    pub symmetry_residual: f64,
    pub gram_condition: f64,
}

/// Rayleigh-Ritz eigenpairs of the symmetric part of `S` against `G`.
fn generalized_eigen(gram: &DMatrix<f64>, stiffness: &DMatrix<f64>, count: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>, f64)> {
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::IllConditioned(f64::INFINITY))?;
    let l = chol.l();
    let sym = (stiffness + stiffness.transpose()) * 0.5;
    let a = l
        .solve_lower_triangular(&sym)
        .ok_or_else(|| Error::EigenFailure("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&a.transpose())
        .ok_or_else(|| Error::EigenFailure("singular Cholesky factor".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(c, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::EigenFailure("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    // Δ_f has eigenvalues −σ; sort by σ
    order.sort_by(|&i, &j| (-eig.eigenvalues[i]).total_cmp(&-eig.eigenvalues[j]));
    order.truncate(count);
    let lt = l.transpose();
    let mut sigmas = Vec::new();
    let mut fields = Vec::new();
    let mut coeffs = DMatrix::zeros(gram.nrows(), order.len());
    for (col, &i) in order.iter().enumerate() {
        sigmas.push(-eig.eigenvalues[i]);
        let y = eig.eigenvectors.column(i).into_owned();
        let c = lt
            .solve_upper_triangular(&y)
            .ok_or_else(|| Error::EigenFailure("singular Cholesky factor".into()))?;
        coeffs.set_column(col, &c);
        fields.push(c.iter().copied().collect());
    }
    let ortho = coeffs.transpose() * gram * &coeffs - DMatrix::identity(order.len(), order.len());
    let ortho = ortho.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok((sigmas, fields, ortho))
}

pub fn solve_drift_eigen(ws: &WeightedSpace, disc: &Discretization, count: usize) -> Result<SpectralResult> {
    match disc {
        Discretization::Spectral { basis, grid } => {
            let asm = assemble_drift_laplacian(ws, basis, grid)?;
            let (eigenvalues, eigenfields, ortho) = generalized_eigen(&asm.gram, &asm.stiffness, count)?;
            Ok(SpectralResult {
                eigenvalues,
                eigenfields,
                weighted_orthonormality_residual: ortho,
                symmetry_residual: asm.symmetry_residual(),
                gram_condition: asm.gram_condition,
            })
        }
        Discretization::GridFd { cells } => fd_spectrum(ws, *cells, count),
    }
}

/// Nodes, measure `m_i` and the flux coefficients of the conservative
/// second-order scheme for `Δ_f u = (1/μ)(a u′)′` with `μ = e^{−f}√g`,
/// `a = e^{−f}√g g⁻¹`.
struct FdGrid {
    nodes: Vec<f64>,
    h: f64,
    mass: Vec<f64>,
    /// `flux[i]` sits between nodes `i − 1` and `i` (with wrap-around when periodic).
    flux: Vec<f64>,
    periodic: bool,
}

fn fd_grid(ws: &WeightedSpace, cells: usize) -> Result<FdGrid> {
    let (a, b) = interval_bounds(ws)?;
    let periodic = matches!(&ws.model.domain, Domain::Box { periodic, .. } if periodic[0]);
    if cells < 3 {
        return Err(Error::InvalidParameter("grid-fd needs at least 3 cells".into()));
    }
    let h = (b - a) / cells as f64;
    let nodes: Vec<f64> = if periodic {
        (0..cells).map(|i| a + i as f64 * h).collect()
    } else {
        (1..cells).map(|i| a + i as f64 * h).collect()
    };
    let mu = |x: f64| {
        let g = ws.model.metric_at(&[x])[0][0];
        (g.sqrt() * ws.weight(&[x]), g)
    };
    let mass = nodes.iter().map(|&x| mu(x).0 * h).collect();
    let faces = if periodic { cells } else { cells };
    let flux = (0..faces)
        .map(|i| {
            let x = if periodic { a + (i as f64 - 0.5) * h } else { a + (i as f64 + 0.5) * h };
            let (m, g) = mu(x);
            m / g
        })
        .collect();
    Ok(FdGrid {
        nodes,
        h,
        mass,
        flux,
        periodic,
    })
}

impl FdGrid {
    /// Positive semidefinite `K` with `(Ku)_i = −m_i (Δ_f u)_i`.
    fn stiffness(&self) -> DMatrix<f64> {
        let n = self.nodes.len();
        let h = self.h;
        let mut k = DMatrix::zeros(n, n);
        if self.periodic {
            for i in 0..n {
                let left = self.flux[i] / h;
                let right = self.flux[(i + 1) % n] / h;
                k[(i, i)] += left + right;
                k[(i, (i + n - 1) % n)] -= left;
                k[(i, (i + 1) % n)] -= right;
            }
        } else {
            for i in 0..n {
                // node i lies between faces i and i + 1
                let left = self.flux[i] / h;
                let right = self.flux[i + 1] / h;
                k[(i, i)] += left + right;
                if i > 0 {
                    k[(i, i - 1)] -= left;
                }
                if i + 1 < n {
                    k[(i, i + 1)] -= right;
                }
            }
        }
        k
    }

    fn tridiagonal(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.nodes.len();
        let s: Vec<f64> = self.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
        let diag = (0..n).map(|i| (self.flux[i] + self.flux[i + 1]) / self.h * s[i] * s[i]).collect();
        let off = (0..n - 1).map(|i| -self.flux[i + 1] / self.h * s[i] * s[i + 1]).collect();
        (diag, off)
    }
}

/// Number of eigenvalues below `x` of a symmetric tridiagonal matrix.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let denom = if q == 0.0 { f64::EPSILON } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Lowest `count` eigenvalues of a symmetric tridiagonal matrix by bisection.
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64], count: usize) -> Vec<f64> {
    let bound = diag
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let l = if i > 0 { off[i - 1].abs() } else { 0.0 };
            let r = if i < off.len() { off[i].abs() } else { 0.0 };
            d.abs() + l + r
        })
        .fold(0.0, f64::max);
    (0..count.min(diag.len()))
        .map(|k| {
            let (mut lo, mut hi) = (-bound, bound);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if sturm_count(diag, off, mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-15 * hi.abs().max(1.0) {
                    break;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// Above this many nodes Dirichlet problems use bisection only.
const DENSE_LIMIT: usize = 1024;

fn fd_spectrum(ws: &WeightedSpace, cells: usize, count: usize) -> Result<SpectralResult> {
    let grid = fd_grid(ws, cells)?;
    let n = grid.nodes.len();
    if !grid.periodic && n > DENSE_LIMIT {
        let (d, o) = grid.tridiagonal();
        return Ok(SpectralResult {
            eigenvalues: tridiagonal_eigenvalues(&d, &o, count),
            eigenfields: Vec::new(),
            weighted_orthonormality_residual: 0.0,
            symmetry_residual: 0.0,
            gram_condition: condition_diag(&grid.mass),
        });
    }
    let gram = DMatrix::from_diagonal(&DVector::from_column_slice(&grid.mass));
    let stiffness = -grid.stiffness();
    let (eigenvalues, eigenfields, ortho) = generalized_eigen(&gram, &stiffness, count)?;
    Ok(SpectralResult {
        eigenvalues,
        eigenfields,
        weighted_orthonormality_residual: ortho,
        symmetry_residual: 0.0,
        gram_condition: condition_diag(&grid.mass),
    })
}

fn condition_diag(m: &[f64]) -> f64 {
    let max = m.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = m.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

/// Lowest `count` eigenvalues of the second-order grid scheme, Richardson
/// extrapolated from `cells` and `cells / 2`.
pub fn fd_oracle_spectrum(ws: &WeightedSpace, cells: usize, count: usize) -> Result<Vec<f64>> {
    let fine = fd_spectrum(ws, cells, count)?.eigenvalues;
    let coarse = fd_spectrum(ws, cells / 2, count)?.eigenvalues;
    Ok(fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect())
}

/// Weighted samples of `(δℛ_f)*` on a discretization.
#[derive(Clone, Debug)]
pub struct AdjointMatrix {
    /// Rows weighted by `√(w √det g e^{−f})`; one block of `n(n+1)/2`
    /// orthonormal-frame components per node, off-diagonal ones scaled by √2.
    pub matrix: DMatrix<f64>,
    /// The same rows without the weights.
    pub unweighted: DMatrix<f64>,
    pub components: usize,
    pub gram: DMatrix<f64>,
    pub nodes: usize,
}

/// Lower Cholesky factor of a small SPD matrix.
fn small_cholesky(g: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = g.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][j] = (g[i][i] - s).max(0.0).sqrt();
            } else {
                l[i][j] = (g[i][j] - s) / l[j][j];
            }
        }
    }
    l
}

/// `L⁻¹ T L⁻ᵀ` packed as upper-triangle components (off-diagonal × √2), so that
/// the Euclidean norm equals `|T|_g`.
fn frame_components(l: &[Vec<f64>], t: &[Vec<f64>]) -> Vec<f64> {
    let n = l.len();
    // solve L Y = T, then L Z = Yᵀ
    let solve = |b: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        let mut y = vec![vec![0.0; n]; n];
        for col in 0..n {
            for i in 0..n {
                let s: f64 = (0..i).map(|k| l[i][k] * y[k][col]).sum();
                y[i][col] = (b[i][col] - s) / l[i][i];
            }
        }
        y
    };
    let y = solve(&t.to_vec());
    let yt: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| y[j][i]).collect()).collect();
    let z = solve(&yt);
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            out.push(if i == j { z[i][j] } else { z[i][j] * 2f64.sqrt() });
        }
    }
    out
}

pub fn assemble_adjoint_matrix(
    ws: &WeightedSpace,
    basis: &DiscreteBasis,
    grid: &QuadratureGrid,
) -> Result<AdjointMatrix> {
    let n = ws.dim();
    let comps = n * (n + 1) / 2;
    let k = basis.len();
    let blocks = grid
        .points
        .par_iter()
        .map(|x| {
            let wp = ws.at(x, 2)?;
            let g: Vec<Vec<f64>> = wp.geo.g.iter().map(|r| r.iter().map(Jet::value).collect()).collect();
            let l = small_cholesky(&g);
            let cols: Vec<(f64, Vec<f64>)> = basis
                .functions
                .iter()
                .map(|phi| {
                    let j = phi.taylor(x, 2);
                    let adj = wp.adjoint(&j);
                    let t: Vec<Vec<f64>> = adj.iter().map(|r| r.iter().map(Jet::value).collect()).collect();
                    (j.value(), frame_components(&l, &t))
                })
                .collect();
            Ok(cols)
        })
        .collect::<Result<Vec<_>>>()?;
    let weights = measure_weights(ws, grid);
    let rows = grid.len() * comps;
    let unweighted = DMatrix::from_fn(rows, k, |r, c| blocks[r / comps][c].1[r % comps]);
    let matrix = DMatrix::from_fn(rows, k, |r, c| unweighted[(r, c)] * weights[r / comps].sqrt());
    let values = DMatrix::from_fn(grid.len(), k, |i, c| blocks[i][c].0);
    let gram = weighted_gram(&values, &weights);
    let cond = condition(&gram);
    if !(cond <= MAX_GRAM_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    Ok(AdjointMatrix {
        matrix,
        unweighted,
        components: comps,
        gram,
        nodes: grid.len(),
    })
}

/// Grid-fd adjoint for one-dimensional Dirichlet problems. In one dimension
/// `(δℛ_f)* u = f′u′ − (f″ − Γf′) u` in chart components; the frame
/// component divides by `g`. Rows sit at cell midpoints, where `u′` is a
/// one-sided difference and `u` the average of the two neighbours. Centred
/// differences at the nodes would carry a spurious alternating null vector.
fn fd_adjoint(ws: &WeightedSpace, cells: usize) -> Result<AdjointMatrix> {
    let grid = fd_grid(ws, cells)?;
    if grid.periodic {
        return Err(Error::InvalidParameter("grid-fd kernel search supports Dirichlet intervals".into()));
    }
    let (lo, _) = interval_bounds(ws)?;
    let n = grid.nodes.len();
    let rows = (0..cells)
        .into_par_iter()
        .map(|j| {
            let x = lo + (j as f64 + 0.5) * grid.h;
            let wp = ws.at(&[x], 2)?;
            let g = wp.geo.g[0][0].value();
            let gamma = wp.geo.gamma[0][0][0].value();
            let f1 = wp.f.partial(&[1]);
            let f2 = wp.f.partial(&[2]);
            let mass = g.sqrt() * ws.weight(&[x]) * grid.h;
            Ok((f1 / g, -(f2 - gamma * f1) / g, mass))
        })
        .collect::<Result<Vec<_>>>()?;
    // node i sits between cells i and i + 1
    let mut unweighted = DMatrix::zeros(cells, n);
    for (j, &(a, b, _)) in rows.iter().enumerate() {
        if j >= 1 {
            unweighted[(j, j - 1)] += -a / grid.h + 0.5 * b;
        }
        if j < n {
            unweighted[(j, j)] += a / grid.h + 0.5 * b;
        }
    }
    let matrix = DMatrix::from_fn(cells, n, |r, c| unweighted[(r, c)] * rows[r].2.sqrt());
    Ok(AdjointMatrix {
        matrix,
        unweighted,
        components: 1,
        gram: DMatrix::from_diagonal(&DVector::from_column_slice(&grid.mass)),
        nodes: cells,
    })
}

pub fn adjoint_for(ws: &WeightedSpace, disc: &Discretization) -> Result<AdjointMatrix> {
    match disc {
        Discretization::Spectral { basis, grid } => assemble_adjoint_matrix(ws, basis, grid),
        Discretization::GridFd { cells } => fd_adjoint(ws, *cells),
    }
}

/// A right singular vector of the whitened adjoint matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelCandidate {
    /// Coefficients with unit weighted `L²_f` norm.
    pub coefficients: Vec<f64>,
    pub singular_value: f64,
    /// `sup |(δℛ_f)* u|_g` over the nodes.
    pub sup_residual: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelSearch {
    pub candidates: Vec<KernelCandidate>,
    pub min_singular_value: f64,
    /// Smallest singular values, ascending.
    pub singular_values: Vec<f64>,
    pub tolerance: f64,
    pub gram: Vec<Vec<f64>>,
}

impl KernelSearch {
    pub fn kernel_dim(&self) -> usize {
        self.candidates.iter().filter(|c| c.accepted).count()
    }
}

/// Default singular-value threshold `1e−6 √(node count)`.
pub fn default_kernel_tolerance(nodes: usize) -> f64 {
    1e-6 * (nodes as f64).sqrt()
}

/// Singular vectors of the adjoint matrix after whitening the columns by the
/// weighted Gram matrix, so singular values measure `‖(δℛ_f)* u‖ / ‖u‖` in
/// `L²_f`. Candidates are the vectors with singular value below `tolerance`;
/// each is accepted when its pointwise residual is below `kernel_tolerance`.
pub fn kernel_search_matrix(adj: &AdjointMatrix, tolerance: Option<f64>, kernel_tolerance: f64) -> Result<KernelSearch> {
    let tol = tolerance.unwrap_or_else(|| default_kernel_tolerance(adj.nodes));
    let chol = adj
        .gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::IllConditioned(f64::INFINITY))?;
    let lt = chol.l().transpose();
    // A L⁻ᵀ = (L⁻¹ Aᵀ)ᵀ
    let whitened = chol
        .l()
        .solve_lower_triangular(&adj.matrix.transpose())
        .ok_or_else(|| Error::EigenFailure("singular Cholesky factor".into()))?
        .transpose();
    let svd = whitened.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::EigenFailure("SVD failed".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let min = order.first().map_or(f64::INFINITY, |&i| svd.singular_values[i]);
    let mut candidates = Vec::new();
    for &i in &order {
        let s = svd.singular_values[i];
        if s >= tol {
            break;
        }
        let y = vt.row(i).transpose();
        let c = lt
            .solve_upper_triangular(&y)
            .ok_or_else(|| Error::EigenFailure("singular Cholesky factor".into()))?;
        let r = &adj.unweighted * &c;
        let sup = (0..adj.nodes)
            .map(|p| {
                (0..adj.components)
                    .map(|k| r[p * adj.components + k].powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        candidates.push(KernelCandidate {
            coefficients: c.iter().copied().collect(),
            singular_value: s,
            sup_residual: sup,
            accepted: sup < kernel_tolerance,
        });
    }
    Ok(KernelSearch {
        candidates,
        min_singular_value: min,
        singular_values: order.iter().take(8).map(|&i| svd.singular_values[i]).collect(),
        tolerance: tol,
        gram: (0..adj.gram.nrows())
            .map(|i| adj.gram.row(i).iter().copied().collect())
            .collect(),
    })
}

pub fn kernel_search(
    ws: &WeightedSpace,
    disc: &Discretization,
    tolerance: Option<f64>,
    kernel_tolerance: f64,
) -> Result<KernelSearch> {
    kernel_search_matrix(&adjoint_for(ws, disc)?, tolerance, kernel_tolerance)
}

/// Principal angles (ascending) between the spans of two coefficient sets in
/// the inner product `G`.
pub fn principal_angles(gram: &DMatrix<f64>, a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Vec<f64>> {
    let orth = |set: &[Vec<f64>]| -> Result<DMatrix<f64>> {
        let m = DMatrix::from_fn(gram.nrows(), set.len(), |i, j| set[j][i]);
        let small = m.transpose() * gram * &m;
        let chol = small
            .cholesky()
            .ok_or_else(|| Error::InvalidParameter("linearly dependent subspace".into()))?;
        let inv = chol
            .l()
            .transpose()
            .try_inverse()
            .ok_or_else(|| Error::InvalidParameter("linearly dependent subspace".into()))?;
        Ok(m * inv)
    };
    let qa = orth(a)?;
    let qb = orth(b)?;
    let proj = &qa * (qa.transpose() * gram * &qb);
    let r = &qb - proj;
    let k = r.transpose() * gram * &r;
    let eig = SymmetricEigen::new((&k + k.transpose()) * 0.5).eigenvalues;
    let mut angles: Vec<f64> = eig.iter().map(|s| s.clamp(0.0, 1.0).sqrt().asin()).collect();
    angles.sort_by(f64::total_cmp);
    Ok(angles)
}

/// Pointwise check of `Δ_f u = −σ u` for a given function `σ`.
pub fn eigen_relation_residual(
    ws: &WeightedSpace,
    u: &ScalarField,
    sigma: &ScalarField,
    points: &[Vec<f64>],
    tolerance: f64,
) -> Result<ResidualReport> {
    let samples = points
        .par_iter()
        .map(|x| {
            let wp = ws.at(x, 2)?;
            let uj = u.taylor(x, 2);
            Ok(Some((wp.drift_laplacian(&uj).value() + sigma.value(x) * uj.value()).abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualReport::from_samples("eigen-relation", &samples, tolerance))
}

/// Minimum singular values of the adjoint along a resolution ladder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeLevel {
    pub resolution: usize,
    pub min_singular_value: f64,
    pub kernel_dim: usize,
    /// Best pointwise residual among accepted candidates.
    pub kernel_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub scenario: String,
    pub basis: String,
    pub levels: Vec<ProbeLevel>,
    pub floor: Option<f64>,
    /// Whether the model has a boundary, so that nonexistence can be probed.
    pub nonexistence_scenario: bool,
    pub expect_kernel: bool,
    pub kernel_found: bool,
    pub bounded_below: bool,
    pub monotone_nonincreasing: bool,
    pub hypotheses: BTreeMap<String, f64>,
    pub pass: bool,
    pub notes: Vec<String>,
}

/// Options of a nonexistence probe.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOptions {
    pub kind: String,
    pub ladder: Vec<usize>,
    pub floor: Option<f64>,
    pub expect_kernel: bool,
    /// `constant-perelman` or `einstein-f`.
    pub hypothesis: Option<String>,
    pub kernel_tolerance: f64,
    pub hypothesis_tolerance: f64,
}

impl ProbeOptions {
    pub fn default_ladder(kind: &str) -> Vec<usize> {
        match kind {
            "sphere-harmonic-chart" | "hermite-chart" => vec![4, 6, 8],
            _ => vec![32, 64, 128],
        }
    }
}

pub const PROBE_HYPOTHESES: [&str; 2] = ["constant-perelman", "einstein-f"];

fn probe_hypotheses(ws: &WeightedSpace, grid: &QuadratureGrid) -> Result<BTreeMap<String, f64>> {
    let rows = grid
        .points
        .par_iter()
        .map(|x| {
            let wp = ws.at(x, 2)?;
            let ric_f = wp.bakry_emery_ricci();
            let df = wp.df();
            Ok((
                wp.perelman_scalar().value(),
                tensor_norm(&wp.geo, &wp.geo.traceless(&ric_f)),
                wp.geo.inner_cov(&df, &df).value().max(0.0).sqrt(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = rows.iter().map(|r| r.0).sum::<f64>() / rows.len().max(1) as f64;
    let mut h = BTreeMap::new();
    h.insert("constant-perelman".into(), rows.iter().map(|r| (r.0 - mean).abs()).fold(0.0, f64::max));
    h.insert("einstein-f".into(), rows.iter().map(|r| r.1).fold(0.0, f64::max));
    h.insert("density-gradient-max".into(), rows.iter().map(|r| r.2).fold(0.0, f64::max));
    Ok(h)
}

pub fn nonexistence_probe(ws: &WeightedSpace, scenario: &str, opts: &ProbeOptions) -> Result<ProbeReport> {
    let mut notes = Vec::new();
    let nonexistence = ws.model.boundary.is_some();
    if !nonexistence {
        notes.push("not a nonexistence scenario".into());
    }
    let grid = volume_grid(&ws.model, 24)?;
    let hypotheses = probe_hypotheses(ws, &grid)?;
    if let Some(h) = &opts.hypothesis {
        let v = *hypotheses
            .get(h.as_str())
            .ok_or_else(|| unknown("hypothesis", h, &PROBE_HYPOTHESES))?;
        if v >= opts.hypothesis_tolerance {
            notes.push("hypothesis mismatch".into());
        }
    }
    if hypotheses["density-gradient-max"] < opts.hypothesis_tolerance {
        notes.push("density is constant".into());
    }
    let levels = opts
        .ladder
        .iter()
        .map(|&res| {
            let disc = Discretization::build(&BasisSpec::new(&opts.kind, res), ws)?;
            let ks = kernel_search(ws, &disc, None, opts.kernel_tolerance)?;
            let best = ks
                .candidates
                .iter()
                .filter(|c| c.accepted)
                .map(|c| c.sup_residual)
                .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))));
            Ok(ProbeLevel {
                resolution: res,
                min_singular_value: ks.min_singular_value,
                kernel_dim: ks.kernel_dim(),
                kernel_residual: best,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let kernel_found = levels.iter().any(|l| l.kernel_dim > 0);
    let bounded_below = match opts.floor {
        Some(floor) => levels.iter().all(|l| l.min_singular_value >= floor),
        None => levels.iter().all(|l| l.kernel_dim == 0),
    };
    let monotone = levels
        .windows(2)
        .all(|w| w[1].min_singular_value <= w[0].min_singular_value * (1.0 + 1e-9));
    let pass = if opts.expect_kernel {
        kernel_found
    } else {
        !kernel_found && bounded_below
    };
    if kernel_found && nonexistence && !opts.expect_kernel {
        notes.push("kernel found in a nonexistence scenario".into());
    }
    Ok(ProbeReport {
        scenario: scenario.into(),
        basis: opts.kind.clone(),
        levels,
        floor: opts.floor,
        nonexistence_scenario: nonexistence,
        expect_kernel: opts.expect_kernel,
        kernel_found,
        bounded_below,
        monotone_nonincreasing: monotone,
        hypotheses,
        pass,
        notes,
    })
}
