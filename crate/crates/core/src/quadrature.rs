//! Tensor-product quadrature on model charts and their boundaries.
//!
//! Weights are coordinate weights; the Riemannian volume factor `√det g` (and
//! `√det` of the induced metric on boundaries) is applied when integrating.

use std::f64::consts::PI;

use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::manifold::{Domain, MetricModel};
use crate::weighted::WeightedSpace;

/// Distance from the poles kept free of pointwise sample points.
pub const POLE_BAND: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss-Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<Vec<(f64, f64)>> {
    let rule = GaussLegendre::new(n)
        .map_err(|_| Error::InvalidParameter(format!("Gauss-Legendre rule needs at least 2 nodes, got {n}")))?;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let mut pairs: Vec<(f64, f64)> = rule
        .into_node_weight_pairs()
        .into_iter()
        .map(|(x, w)| (mid + half * x, half * w))
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(pairs)
}

/// Trapezoid (rectangle) rule for a periodic axis.
pub fn periodic_nodes(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let h = (b - a) / n as f64;
    (0..n).map(|k| (a + (k as f64 + 0.5) * h, h)).collect()
}

fn axis_rule(n: usize, lo: f64, hi: f64, periodic: bool) -> Result<Vec<(f64, f64)>> {
    if periodic {
        Ok(periodic_nodes(n.max(1), lo, hi))
    } else {
        gauss_legendre(n, lo, hi)
    }
}

/// Polar angle rule: Gauss-Legendre in `cos θ` over `θ ∈ (lo, hi)`, returned
/// as `(θ, dθ weight)`.
fn polar_rule(n: usize, lo: f64, hi: f64) -> Result<Vec<(f64, f64)>> {
    let nodes = gauss_legendre(n, hi.cos(), lo.cos())?;
    let mut out: Vec<(f64, f64)> = nodes
        .into_iter()
        .map(|(c, w)| {
            let t = c.clamp(-1.0, 1.0).acos();
            (t, w / t.sin())
        })
        .collect();
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(out)
}

fn tensor(axes: &[Vec<(f64, f64)>]) -> QuadratureGrid {
    let mut points = vec![Vec::new()];
    let mut weights = vec![1.0];
    for axis in axes {
        let mut np = Vec::with_capacity(points.len() * axis.len());
        let mut nw = Vec::with_capacity(points.len() * axis.len());
        for (p, w) in points.iter().zip(&weights) {
            for &(x, wx) in axis {
                let mut q = p.clone();
                q.push(x);
                np.push(q);
                nw.push(w * wx);
            }
        }
        points = np;
        weights = nw;
    }
    QuadratureGrid { points, weights }
}

/// Volume quadrature with `nodes` points per non-periodic axis (periodic axes
/// of length 2π get `2·nodes`).
pub fn volume_grid(model: &MetricModel, nodes: usize) -> Result<QuadratureGrid> {
    match &model.domain {
        Domain::Box { lo, hi, periodic } => {
            let axes = (0..model.dim)
                .map(|k| {
                    let n = if periodic[k] { 2 * nodes } else { nodes };
                    axis_rule(n, lo[k], hi[k], periodic[k])
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(tensor(&axes))
        }
        Domain::Spherical { polar } => {
            let n = model.dim;
            let mut axes = Vec::with_capacity(n);
            if n == 1 {
                axes.push(periodic_nodes(2 * nodes, 0.0, 2.0 * PI));
            } else {
                axes.push(polar_rule(nodes, polar.0, polar.1)?);
                for _ in 1..n - 1 {
                    axes.push(polar_rule(nodes, 0.0, PI)?);
                }
                axes.push(periodic_nodes(2 * nodes, 0.0, 2.0 * PI));
            }
            Ok(tensor(&axes))
        }
    }
}

/// Pointwise sample grid: interior quadrature nodes, minus a band around the
/// coordinate poles of spherical charts.
pub fn sample_points(model: &MetricModel, nodes: usize) -> Result<Vec<Vec<f64>>> {
    let grid = volume_grid(model, nodes)?;
    Ok(match model.domain {
        Domain::Spherical { .. } if model.dim >= 2 => grid
            .points
            .into_iter()
            .filter(|p| p[..model.dim - 1].iter().all(|&t| t > POLE_BAND && t < PI - POLE_BAND))
            .collect(),
        _ => grid.points,
    })
}

/// `Σ wᵢ √det g(xᵢ) e^{−f(xᵢ)} F(xᵢ)` with a fixed-order reduction.
pub fn integrate<F>(ws: &WeightedSpace, grid: &QuadratureGrid, field: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let terms: Vec<f64> = grid
        .points
        .par_iter()
        .zip(grid.weights.par_iter())
        .map(|(p, &w)| -> Result<f64> {
            let g = ws.model.metric_at(p);
            let vol = det(&g).sqrt();
            Ok(w * vol * ws.weight(p) * field(p)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ordered_sum(&terms))
}

/// Sequential sum (deterministic regardless of thread count).
pub fn ordered_sum(terms: &[f64]) -> f64 {
    terms.iter().sum()
}

pub fn det(g: &[Vec<f64>]) -> f64 {
    let n = g.len();
    let mut a: Vec<Vec<f64>> = g.to_vec();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= a[c][c];
        for r in c + 1..n {
            let factor = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= factor * a[c][k];
            }
        }
    }
    d
}

/// Quadrature nodes on one boundary component.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryComponentGrid {
    pub name: String,
    pub params: Vec<Vec<f64>>,
    /// Chart coordinates of the nodes.
    pub points: Vec<Vec<f64>>,
    /// Parameter weights times `√det` of the induced metric.
    pub weights: Vec<f64>,
    /// Outward unit normals at the nodes (chart components).
    pub normals: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryGrid {
    pub components: Vec<BoundaryComponentGrid>,
}

impl BoundaryGrid {
    pub fn len(&self) -> usize {
        self.components.iter().map(|c| c.points.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Induced metric `h_ab = g(∂_a p, ∂_b p)` of a boundary parameterization at `s`.
pub fn induced_metric(model: &MetricModel, map: &crate::field::JetMap, s: &[f64]) -> Vec<Vec<f64>> {
    let pd = s.len();
    if pd == 0 {
        return Vec::new();
    }
    let p = map.taylor(s, 1);
    let x: Vec<f64> = p.iter().map(Jet::value).collect();
    let g = model.metric_at(&x);
    let tangents: Vec<Vec<f64>> = (0..pd).map(|a| p.iter().map(|c| c.partial(&unit(pd, a))).collect()).collect();
    (0..pd)
        .map(|a| {
            (0..pd)
                .map(|b| {
                    let mut acc = 0.0;
                    for i in 0..model.dim {
                        for j in 0..model.dim {
                            acc += g[i][j] * tangents[a][i] * tangents[b][j];
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

pub(crate) fn unit(n: usize, k: usize) -> Vec<u8> {
    let mut e = vec![0u8; n];
    e[k] = 1;
    e
}

/// Boundary quadrature with `nodes` points per non-periodic parameter axis
/// and `2·nodes` per periodic one.
pub fn boundary_grid(model: &MetricModel, nodes: usize) -> Result<BoundaryGrid> {
    let boundary = model
        .boundary
        .as_ref()
        .ok_or_else(|| Error::UnsupportedBoundary(format!("model '{}' has no boundary", model.name)))?;
    let mut components = Vec::new();
    for comp in &boundary.components {
        let pd = comp.param_dim();
        let axes = (0..pd)
            .map(|a| {
                if comp.param_periodic[a] {
                    Ok(periodic_nodes(2 * nodes, comp.param_lo[a], comp.param_hi[a]))
                } else if pd >= 2 && a + 1 < pd && model_is_spherical(model) {
                    polar_rule(nodes, comp.param_lo[a], comp.param_hi[a])
                } else {
                    gauss_legendre(nodes, comp.param_lo[a], comp.param_hi[a])
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let grid = tensor(&axes);
        let mut points = Vec::with_capacity(grid.len());
        let mut weights = Vec::with_capacity(grid.len());
        let mut normals = Vec::with_capacity(grid.len());
        for (s, w) in grid.points.iter().zip(&grid.weights) {
            let x = comp.point(s);
            let area = if pd == 0 {
                1.0
            } else {
                det(&induced_metric(model, &comp.map, s)).sqrt()
            };
            normals.push((comp.normal)(&x));
            points.push(x);
            weights.push(w * area);
        }
        components.push(BoundaryComponentGrid {
            name: comp.name.clone(),
            params: grid.points,
            points,
            weights,
            normals,
        });
    }
    Ok(BoundaryGrid { components })
}

fn model_is_spherical(model: &MetricModel) -> bool {
    matches!(model.domain, Domain::Spherical { .. })
}

/// `∫_{component} e^{−f} F dσ` for every component, in component order.
pub fn integrate_boundary<F>(ws: &WeightedSpace, bgrid: &BoundaryGrid, field: F) -> Result<Vec<(String, f64)>>
where
    F: Fn(&[f64], &[f64]) -> Result<f64> + Sync,
{
    bgrid
        .components
        .iter()
        .map(|c| {
            let terms: Vec<f64> = c
                .points
                .par_iter()
                .zip(c.weights.par_iter())
                .zip(c.normals.par_iter())
                .map(|((p, &w), nu)| Ok(w * ws.weight(p) * field(p, nu)?))
                .collect::<Result<Vec<_>>>()?;
            Ok((c.name.clone(), ordered_sum(&terms)))
        })
        .collect()
}

/// Weighted volume integral `∫ F dVol_f` of a scalar field.
pub fn weighted_volume_integral(
    ws: &WeightedSpace,
    field: &crate::field::ScalarField,
    grid: &QuadratureGrid,
) -> Result<f64> {
    integrate(ws, grid, |p| Ok(field.value(p)))
}
