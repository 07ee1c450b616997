//! Boundary integrals: surface gravity, the boundary-area identity, the
//! Pohozaev-Schöen identity, the Gauss-equation reduction and the area
//! estimate.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{ScalarField, SymTensorField, VectorField};
use crate::jet::Jet;
use crate::manifold::{BoundaryComponent, JetMat, LocalGeometry};
use crate::quadrature::{integrate, integrate_boundary, ordered_sum, BoundaryGrid, QuadratureGrid};
use crate::report::{ResidualReport, TwoSidedReport};
use crate::weighted::{WeightedPoint, WeightedSpace};

/// Step of the central difference of the normal along boundary parameters.
pub const NORMAL_FD_STEP: f64 = 1e-5;

/// Value of `|∇u|` on one boundary component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceGravity {
    pub component: String,
    pub kappa: f64,
    /// Largest deviation of `|∇u|` from `kappa` across the component.
    pub variation: f64,
}

impl SurfaceGravity {
    pub fn is_constant(&self, tolerance: f64) -> bool {
        self.variation < tolerance
    }
}

fn boundary_values(bgrid: &BoundaryGrid, u: &ScalarField) -> f64 {
    bgrid
        .components
        .iter()
        .flat_map(|c| c.points.iter())
        .map(|p| u.value(p).abs())
        .fold(0.0, f64::max)
}

fn require_boundary_zero(bgrid: &BoundaryGrid, u: &ScalarField, tolerance: f64) -> Result<()> {
    let worst = boundary_values(bgrid, u);
    if worst > tolerance {
        return Err(Error::BoundaryPotential(worst));
    }
    Ok(())
}

fn grad_norm(ws: &WeightedSpace, u: &ScalarField, x: &[f64]) -> Result<f64> {
    let geo = ws.model.geometry(x, 1)?;
    let du = geo.grad_cov(&u.taylor(x, 1));
    Ok(geo.inner_cov(&du, &du).value().max(0.0).sqrt())
}

/// `κ_α = |∇u|` on every boundary component. `u` must vanish on the boundary
/// to within `tolerance`.
pub fn surface_gravity(
    ws: &WeightedSpace,
    u: &ScalarField,
    bgrid: &BoundaryGrid,
    tolerance: f64,
) -> Result<Vec<SurfaceGravity>> {
    require_boundary_zero(bgrid, u, tolerance)?;
    bgrid
        .components
        .iter()
        .map(|c| {
            let norms = c
                .points
                .par_iter()
                .map(|p| grad_norm(ws, u, p))
                .collect::<Result<Vec<f64>>>()?;
            let kappa = ordered_sum(&norms) / norms.len().max(1) as f64;
            let variation = norms.iter().map(|v| (v - kappa).abs()).fold(0.0, f64::max);
            Ok(SurfaceGravity {
                component: c.name.clone(),
                kappa,
                variation,
            })
        })
        .collect()
}

/// Weighted areas `σ_f(Γ_α)` in component order.
pub fn weighted_areas(ws: &WeightedSpace, bgrid: &BoundaryGrid) -> Result<Vec<f64>> {
    Ok(integrate_boundary(ws, bgrid, |_, _| Ok(1.0))?.into_iter().map(|(_, a)| a).collect())
}

/// Both forms of the boundary-area identity for a kernel element.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryAreaReport {
    /// `(n−1) Σ κ_α σ_f(Γ_α)` against `∫ ℛ_f u dVol_f`.
    pub area_form: TwoSidedReport,
    /// `(n−1) ∫ ⟨∇u, ν⟩ dσ_f` against `−∫ ℛ_f u dVol_f`.
    pub flux_form: TwoSidedReport,
    /// Relative gap of `−(n−1) Σ κ_α σ_f(Γ_α) = ∫ ℛ_f u dVol_f`.
    pub opposite_sign_gap: f64,
    pub surface_gravity: Vec<SurfaceGravity>,
    pub kernel_residual: f64,
}

impl BoundaryAreaReport {
    pub fn pass(&self) -> bool {
        self.area_form.pass && self.flux_form.pass
    }
}

/// Boundary-area identity `(n−1) Σ_α κ_α σ_f(Γ_α) = ∫ ℛ_f u dVol_f` for `u`
/// in the kernel with `u > 0` inside and `u = 0` on the boundary.
pub fn boundary_area_identity(
    ws: &WeightedSpace,
    u: &ScalarField,
    grid: &QuadratureGrid,
    bgrid: &BoundaryGrid,
    tolerance: f64,
) -> Result<BoundaryAreaReport> {
    let negative: Vec<f64> = grid.points.iter().map(|p| u.value(p)).filter(|&v| v < 0.0).collect();
    if !negative.is_empty() {
        return Err(Error::NonPositivePotential(negative));
    }
    let gravity = surface_gravity(ws, u, bgrid, tolerance)?;
    let n = ws.dim() as f64;
    let areas = weighted_areas(ws, bgrid)?;
    let lhs = (n - 1.0) * ordered_sum(&gravity.iter().zip(&areas).map(|(g, a)| g.kappa * a).collect::<Vec<_>>());
    let rhs = integrate(ws, grid, |x| Ok(ws.at(x, 2)?.perelman_scalar().value() * u.value(x)))?;
    let flux = integrate_boundary(ws, bgrid, |x, nu| {
        let geo = ws.model.geometry(x, 1)?;
        let du = geo.grad_cov(&u.taylor(x, 1));
        Ok(du.iter().zip(nu).map(|(d, v)| d.value() * v).sum())
    })?;
    let flux = (n - 1.0) * ordered_sum(&flux.iter().map(|(_, v)| *v).collect::<Vec<_>>());
    let kernel = integrate_sup(grid, |x| {
        let wp = ws.at(x, 2)?;
        Ok(crate::weighted::tensor_norm(&wp.geo, &wp.adjoint(&u.taylor(x, 2))))
    })?;
    let opposite = (-lhs - rhs).abs() / rhs.abs().max(1.0);
    Ok(BoundaryAreaReport {
        area_form: TwoSidedReport::new("boundary-area", lhs, rhs, tolerance).with_diagnostic("kernel_residual", kernel),
        flux_form: TwoSidedReport::new("boundary-flux", flux, -rhs, tolerance),
        opposite_sign_gap: opposite,
        surface_gravity: gravity,
        kernel_residual: kernel,
    })
}

fn integrate_sup(grid: &QuadratureGrid, f: impl Fn(&[f64]) -> Result<f64> + Sync) -> Result<f64> {
    let v = grid.points.par_iter().map(|p| f(p)).collect::<Result<Vec<f64>>>()?;
    Ok(v.into_iter().fold(0.0, f64::max))
}

/// The symmetric tensor of the Pohozaev-Schöen identity.
#[derive(Clone, Debug)]
pub enum TensorChoice {
    Metric,
    BakryEmeryRicci,
    Field(SymTensorField),
}

/// The vector field `X` of the Pohozaev-Schöen identity.
#[derive(Clone, Debug)]
pub enum VectorChoice {
    Field(VectorField),
    Gradient(ScalarField),
}

impl TensorChoice {
    fn at(&self, wp: &WeightedPoint, x: &[f64], order: usize) -> JetMat {
        match self {
            TensorChoice::Metric => wp.geo.g.clone(),
            TensorChoice::BakryEmeryRicci => wp.bakry_emery_ricci(),
            TensorChoice::Field(t) => t.taylor(x, order),
        }
    }

    /// Metric order needed so that the tensor carries one derivative.
    fn geometry_order(&self) -> usize {
        match self {
            TensorChoice::BakryEmeryRicci => 3,
            _ => 2,
        }
    }
}

impl VectorChoice {
    fn at(&self, geo: &LocalGeometry, x: &[f64], order: usize) -> Vec<Jet> {
        match self {
            VectorChoice::Field(v) => v.taylor(x, order),
            VectorChoice::Gradient(u) => geo.gradient(&u.taylor(x, order + 1)),
        }
    }
}

/// `∫_∂ T(X, ν) dσ_f = ½ ∫ ⟨T, ℒ_X g⟩ dVol_f + ∫ (div_f T)(X) dVol_f`.
pub fn pohozaev_schoen(
    ws: &WeightedSpace,
    t: &TensorChoice,
    x: &VectorChoice,
    grid: &QuadratureGrid,
    bgrid: &BoundaryGrid,
    tolerance: f64,
) -> Result<TwoSidedReport> {
    let order = t.geometry_order();
    let boundary = integrate_boundary(ws, bgrid, |p, nu| {
        let wp = ws.at(p, order)?;
        let tm = t.at(&wp, p, order - 1);
        let xv = x.at(&wp.geo, p, 1);
        let nu: Vec<Jet> = nu.iter().map(|v| wp.f.lift(*v)).collect();
        Ok(wp.geo.bilinear(&tm, &xv, &nu).value())
    })?;
    let lhs = ordered_sum(&boundary.iter().map(|(_, v)| *v).collect::<Vec<_>>());
    let lie_term = integrate(ws, grid, |p| {
        let wp = ws.at(p, order)?;
        let tm = t.at(&wp, p, order - 1);
        let xv = x.at(&wp.geo, p, 1);
        Ok(0.5 * wp.geo.inner(&tm, &wp.geo.lie_metric(&xv)).value())
    })?;
    let div_term = integrate(ws, grid, |p| {
        let wp = ws.at(p, order)?;
        let tm = t.at(&wp, p, order - 1);
        let xv = x.at(&wp.geo, p, 1);
        let d = wp.div_f_tensor(&tm);
        Ok(d.iter().zip(&xv).map(|(a, b)| a.value() * b.value()).sum())
    })?;
    Ok(TwoSidedReport::new("pohozaev-schoen", lhs, lie_term + div_term, tolerance)
        .with_diagnostic("lie_term", lie_term)
        .with_diagnostic("divergence_term", div_term))
}

/// Weighted divergence theorem `∫ div_f X dVol_f = ∫ ⟨X, ν⟩ dσ_f`.
pub fn divergence_theorem(
    ws: &WeightedSpace,
    x: &VectorChoice,
    grid: &QuadratureGrid,
    bgrid: &BoundaryGrid,
    tolerance: f64,
) -> Result<TwoSidedReport> {
    let mut r = pohozaev_schoen(ws, &TensorChoice::Metric, x, grid, bgrid, tolerance)?;
    r.identity_id = "weighted-divergence".into();
    Ok(r)
}

/// Extrinsic and intrinsic data of the boundary at one node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryPointGeometry {
    pub ricci_f_nu_nu: f64,
    pub perelman: f64,
    pub boundary_perelman: f64,
    pub mean_curvature: f64,
    pub second_fundamental_norm: f64,
    pub normal_derivative_f: f64,
}

impl BoundaryPointGeometry {
    pub fn weighted_mean_curvature(&self) -> f64 {
        self.mean_curvature - self.normal_derivative_f
    }

    /// `Ric_f(ν,ν) − ½(ℛ_f − ℛ_f^∂) − ½H_f² + ½|A|²`.
    pub fn gauss_residual(&self) -> f64 {
        let hf = self.weighted_mean_curvature();
        self.ricci_f_nu_nu - 0.5 * (self.perelman - self.boundary_perelman) - 0.5 * hf * hf
            + 0.5 * self.second_fundamental_norm.powi(2)
    }

    /// `Ric_f(ν,ν) − ½(ℛ_f − ℛ_f^∂)`.
    pub fn reduced_residual(&self) -> f64 {
        self.ricci_f_nu_nu - 0.5 * (self.perelman - self.boundary_perelman)
    }
}

/// Boundary geometry at parameter `s` of a component.
pub fn boundary_point_geometry(
    ws: &WeightedSpace,
    comp: &BoundaryComponent,
    s: &[f64],
) -> Result<BoundaryPointGeometry> {
    let x = comp.point(s);
    let wp = ws.at(&x, 2)?;
    let nu_v = (comp.normal)(&x);
    let nu: Vec<Jet> = nu_v.iter().map(|v| wp.f.lift(*v)).collect();
    let ricci_f_nu_nu = wp.geo.bilinear(&wp.bakry_emery_ricci(), &nu, &nu).value();
    let perelman = wp.perelman_scalar().value();
    let df = wp.df();
    let normal_derivative_f: f64 = df.iter().zip(&nu_v).map(|(d, v)| d.value() * v).sum();
    let pd = comp.param_dim();
    if pd == 0 {
        return Ok(BoundaryPointGeometry {
            ricci_f_nu_nu,
            perelman,
            boundary_perelman: 0.0,
            mean_curvature: 0.0,
            second_fundamental_norm: 0.0,
            normal_derivative_f,
        });
    }
    let n = ws.dim();
    // intrinsic side: induced metric and restricted density as jets in s
    let sj = Jet::variables(s, 3);
    let p = comp.map.eval(&sj);
    let gflat = ws.model.metric.eval(&p);
    let tangents: Vec<Vec<Jet>> = (0..pd).map(|a| p.iter().map(|c| c.d(a)).collect()).collect();
    let h: JetMat = (0..pd)
        .map(|a| {
            (0..pd)
                .map(|b| {
                    let mut terms = Vec::with_capacity(n * n);
                    for i in 0..n {
                        for j in 0..n {
                            terms.push(&(&gflat[i * n + j] * &tangents[a][i]) * &tangents[b][j]);
                        }
                    }
                    crate::jet::sum(&terms).unwrap()
                })
                .collect()
        })
        .collect();
    let bgeo = LocalGeometry::new(h)?;
    let fb = ws.density.eval(&p).truncate(2);
    let dfb = bgeo.grad_cov(&fb);
    let boundary_perelman = (bgeo.scalar() + &(bgeo.laplacian(&fb) * 2.0) - bgeo.inner_cov(&dfb, &dfb)).value();
    // extrinsic side: A_ab = g(∇_{T_a} ν, T_b)
    let g = ws.model.metric_at(&x);
    let t_val: Vec<Vec<f64>> = tangents.iter().map(|t| t.iter().map(Jet::value).collect()).collect();
    let gamma: Vec<Vec<Vec<f64>>> = wp
        .geo
        .gamma
        .iter()
        .map(|m| m.iter().map(|r| r.iter().map(Jet::value).collect()).collect())
        .collect();
    let nabla_nu: Vec<Vec<f64>> = (0..pd)
        .map(|a| {
            let mut sp = s.to_vec();
            let mut sm = s.to_vec();
            sp[a] += NORMAL_FD_STEP;
            sm[a] -= NORMAL_FD_STEP;
            let np = (comp.normal)(&comp.point(&sp));
            let nm = (comp.normal)(&comp.point(&sm));
            (0..n)
                .map(|k| {
                    let mut v = (np[k] - nm[k]) / (2.0 * NORMAL_FD_STEP);
                    for i in 0..n {
                        for j in 0..n {
                            v += gamma[k][i][j] * t_val[a][i] * nu_v[j];
                        }
                    }
                    v
                })
                .collect()
        })
        .collect();
    let metric = |a: &[f64], b: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += g[i][j] * a[i] * b[j];
            }
        }
        acc
    };
    let a_form: Vec<Vec<f64>> = (0..pd)
        .map(|a| (0..pd).map(|b| metric(&nabla_nu[a], &t_val[b])).collect())
        .collect();
    let hinv: Vec<Vec<f64>> = bgeo.ginv.iter().map(|r| r.iter().map(Jet::value).collect()).collect();
    let mut mean = 0.0;
    let mut norm2 = 0.0;
    for a in 0..pd {
        for b in 0..pd {
            mean += hinv[a][b] * a_form[a][b];
            for c in 0..pd {
                for d in 0..pd {
                    norm2 += hinv[a][c] * hinv[b][d] * a_form[a][b] * a_form[c][d];
                }
            }
        }
    }
    Ok(BoundaryPointGeometry {
        ricci_f_nu_nu,
        perelman,
        boundary_perelman,
        mean_curvature: mean,
        second_fundamental_norm: norm2.max(0.0).sqrt(),
        normal_derivative_f,
    })
}

/// Reduced Gauss identity `Ric_f(ν,ν) = ½(ℛ_f − ℛ_f^∂)` at every boundary node.
/// `|A|` and `∂_ν f` are reported as hypotheses; the residual of the full
/// Gauss identity with `H_f = H − ∂_ν f` is a diagnostic.
pub fn gauss_reduction_check(ws: &WeightedSpace, bgrid: &BoundaryGrid, tolerance: f64) -> Result<ResidualReport> {
    let model = &ws.model;
    let boundary = model
        .boundary
        .as_ref()
        .ok_or_else(|| Error::UnsupportedBoundary(format!("model '{}' has no boundary", model.name)))?;
    let mut rows = Vec::new();
    for c in &bgrid.components {
        let comp = boundary
            .components
            .iter()
            .find(|b| b.name == c.name)
            .ok_or_else(|| Error::UnsupportedBoundary(format!("unknown boundary component '{}'", c.name)))?;
        let r = c
            .params
            .par_iter()
            .map(|s| boundary_point_geometry(ws, comp, s))
            .collect::<Result<Vec<_>>>()?;
        rows.extend(r);
    }
    let samples: Vec<Option<f64>> = rows.iter().map(|r| Some(r.reduced_residual().abs())).collect();
    let sup = |f: &dyn Fn(&BoundaryPointGeometry) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let a_norm = sup(&|r| r.second_fundamental_norm);
    let fnu = sup(&|r| r.normal_derivative_f.abs());
    let full = sup(&|r| r.gauss_residual().abs());
    let mut report = ResidualReport::from_samples("gauss-reduction", &samples, tolerance)
        .with_hypothesis("second_fundamental_form", a_norm)
        .with_hypothesis("normal_derivative_f", fnu)
        .with_diagnostic("full_gauss_residual", full);
    if a_norm >= tolerance || fnu >= tolerance {
        report.notes.push("hypothesis mismatch".into());
    }
    Ok(report)
}

/// Both sides of the area estimate
/// `(c₀ + c₁) Σ κ_α σ_f(Γ_α) < Σ κ_α ∫_{Γ_α} (ℛ_f^∂ − c₁ f) dσ_f`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub identity_id: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub slack: f64,
    pub strict: bool,
    pub c0: f64,
    pub c1: f64,
    /// `sup |ℛ_f − c₀ − c₁ f|` over the volume grid.
    pub fit_residual: f64,
    pub normal_derivative_f: f64,
    pub hypotheses_hold: bool,
    pub notes: Vec<String>,
}

/// Area estimate for a kernel element `u`. Missing `c₀`, `c₁` are fitted by
/// least squares of `ℛ_f` against `f` over the volume grid.
pub fn thm1_estimate(
    ws: &WeightedSpace,
    u: &ScalarField,
    c0: Option<f64>,
    c1: Option<f64>,
    grid: &QuadratureGrid,
    bgrid: &BoundaryGrid,
    tolerance: f64,
) -> Result<InequalityReport> {
    let gravity = surface_gravity(ws, u, bgrid, tolerance)?;
    let samples = grid
        .points
        .par_iter()
        .map(|p| Ok((ws.density.value(p), ws.at(p, 2)?.perelman_scalar().value())))
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let (fit0, fit1) = fit_line(&samples);
    let (c0, c1) = (c0.unwrap_or(fit0), c1.unwrap_or(fit1));
    let fit_residual = samples.iter().map(|(f, r)| (r - c0 - c1 * f).abs()).fold(0.0, f64::max);
    let model = &ws.model;
    let boundary = model
        .boundary
        .as_ref()
        .ok_or_else(|| Error::UnsupportedBoundary(format!("model '{}' has no boundary", model.name)))?;
    let areas = weighted_areas(ws, bgrid)?;
    let mut lhs_terms = Vec::new();
    let mut rhs_terms = Vec::new();
    let mut fnu = 0.0f64;
    for ((c, g), area) in bgrid.components.iter().zip(&gravity).zip(&areas) {
        let comp = boundary.components.iter().find(|b| b.name == c.name).expect("grid built from model");
        let rows = c
            .params
            .par_iter()
            .map(|s| boundary_point_geometry(ws, comp, s))
            .collect::<Result<Vec<_>>>()?;
        fnu = rows.iter().map(|r| r.normal_derivative_f.abs()).fold(fnu, f64::max);
        let terms: Vec<f64> = rows
            .iter()
            .zip(&c.points)
            .zip(&c.weights)
            .map(|((r, p), w)| w * ws.weight(p) * (r.boundary_perelman - c1 * ws.density.value(p)))
            .collect();
        lhs_terms.push((c0 + c1) * g.kappa * area);
        rhs_terms.push(g.kappa * ordered_sum(&terms));
    }
    let lhs = ordered_sum(&lhs_terms);
    let rhs = ordered_sum(&rhs_terms);
    let interior_positive = grid.points.iter().all(|p| u.value(p) > 0.0);
    let hypotheses_hold = fit_residual < tolerance && fnu < tolerance && interior_positive;
    let mut notes = Vec::new();
    if !hypotheses_hold {
        notes.push("hypothesis mismatch".into());
    }
    if rhs <= lhs {
        notes.push("strict inequality violated".into());
    }
    Ok(InequalityReport {
        identity_id: "area-estimate".into(),
        lhs,
        rhs,
        slack: rhs - lhs,
        strict: rhs > lhs,
        c0,
        c1,
        fit_residual,
        normal_derivative_f: fnu,
        hypotheses_hold,
        notes,
    })
}

fn fit_line(samples: &[(f64, f64)]) -> (f64, f64) {
    let m = samples.len() as f64;
    let st: f64 = samples.iter().map(|s| s.0).sum();
    let sy: f64 = samples.iter().map(|s| s.1).sum();
    let stt: f64 = samples.iter().map(|s| s.0 * s.0).sum();
    let sty: f64 = samples.iter().map(|s| s.0 * s.1).sum();
    let den = m * stt - st * st;
    if den.abs() < 1e-14 * (1.0 + m * stt) {
        (sy / m, 0.0)
    } else {
        let b = (m * sty - st * sy) / den;
        ((sy - b * st) / m, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{hemisphere, interval, slab};
    use crate::quadrature::{boundary_grid, volume_grid};
    use crate::weighted::ambient_linear;
    use std::f64::consts::PI;

    fn hemi(v: &[f64]) -> (WeightedSpace, ScalarField) {
        let m = hemisphere(2, 1.0, PI / 2.0, true);
        let f = ambient_linear(&m, v).unwrap();
        let u = ambient_linear(&m, &[1.0, 0.0, 0.0]).unwrap();
        (WeightedSpace::new(m, f).unwrap(), u)
    }

    #[test]
    fn equator_gravity_is_one() {
        let (ws, u) = hemi(&[0.0, 0.3, 0.0]);
        let b = boundary_grid(&ws.model, 16).unwrap();
        let g = surface_gravity(&ws, &u, &b, 1e-10).unwrap();
        assert!((g[0].kappa - 1.0).abs() < 1e-12 && g[0].variation < 1e-12);
    }

    #[test]
    fn interval_sine_gravity() {
        let m = interval(0.0, 1.0);
        let u = ScalarField::analytic(1, |x| (&x[0] * PI).sin());
        let ws = WeightedSpace::new(m, ScalarField::zero(1)).unwrap();
        let b = boundary_grid(&ws.model, 4).unwrap();
        let g = surface_gravity(&ws, &u, &b, 1e-12).unwrap();
        assert_eq!(g.len(), 2);
        for s in g {
            assert!((s.kappa - PI).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_potential_rejected() {
        let (ws, _) = hemi(&[0.0, 0.3, 0.0]);
        let b = boundary_grid(&ws.model, 8).unwrap();
        let err = surface_gravity(&ws, &ScalarField::constant(2, 1.0), &b, 1e-8).unwrap_err();
        assert!(matches!(err, Error::BoundaryPotential(_)));
    }

    #[test]
    fn static_hemisphere_area_identity() {
        let (ws, u) = hemi(&[0.0, 0.0, 0.0]);
        let grid = volume_grid(&ws.model, 24).unwrap();
        let b = boundary_grid(&ws.model, 24).unwrap();
        let r = boundary_area_identity(&ws, &u, &grid, &b, 1e-6).unwrap();
        assert!((r.area_form.lhs - 2.0 * PI).abs() < 1e-8, "{r:?}");
        assert!(r.pass(), "{r:?}");
        assert!(r.opposite_sign_gap > 1.0);
    }

    #[test]
    fn slab_gauss_reduction_is_trivial() {
        let m = slab(2, 1.0);
        let ws = WeightedSpace::new(m, ScalarField::zero(2)).unwrap();
        let b = boundary_grid(&ws.model, 6).unwrap();
        let r = gauss_reduction_check(&ws, &b, 1e-10).unwrap();
        assert!(r.pass && r.sup_residual == 0.0, "{r:?}");
    }

    #[test]
    fn equator_is_totally_geodesic() {
        let (ws, _) = hemi(&[0.0, 0.3, 0.0]);
        let b = boundary_grid(&ws.model, 12).unwrap();
        let r = gauss_reduction_check(&ws, &b, 1e-5).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.diagnostics["full_gauss_residual"] < 1e-6);
    }

    #[test]
    fn cap_boundary_has_mean_curvature() {
        let m = hemisphere(2, 1.0, 0.5, true);
        let ws = WeightedSpace::new(m, ScalarField::zero(2)).unwrap();
        let comp = &ws.model.boundary.as_ref().unwrap().components[0];
        let g = boundary_point_geometry(&ws, comp, &[0.3]).unwrap();
        // circle of geodesic radius 0.5: geodesic curvature cot 0.5
        assert!((g.mean_curvature - 0.5f64.cos() / 0.5f64.sin()).abs() < 1e-8, "{g:?}");
        assert!(g.gauss_residual().abs() < 1e-8);
    }
}
