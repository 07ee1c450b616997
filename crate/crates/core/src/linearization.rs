//! First variations of `Δf`, `|∇f|²`, `R` and `ℛ_f` under `g ↦ g + t h`,
//! an independent finite-difference-in-`t` oracle, and the `L²_f` duality
//! between the linearized Perelman map and its adjoint.

use crate::error::{Error, Result};
use crate::field::{JetMap, ScalarField, SymTensorField};
use crate::jet::Jet;
use crate::manifold::{JetMat, LocalGeometry};
use crate::quadrature::{integrate, QuadratureGrid};
use crate::report::TwoSidedReport;
use crate::weighted::{WeightedPoint, WeightedSpace};

#[derive(Clone, Debug)]
pub struct MetricPerturbation {
    pub h: SymTensorField,
    /// Step `t` for the numeric variation oracle.
    pub t_step: f64,
    /// `h` is known to vanish with its derivatives near the edge of the grid.
    pub compactly_supported: bool,
}

impl MetricPerturbation {
    pub const DEFAULT_STEP: f64 = 1e-4;

    pub fn new(h: SymTensorField) -> Self {
        Self {
            h,
            t_step: Self::DEFAULT_STEP,
            compactly_supported: false,
        }
    }

    pub fn compact(mut self) -> Self {
        self.compactly_supported = true;
        self
    }

    /// Verify `g + t h` stays positive definite for `|t| ≤ t_step` on `points`.
    pub fn preflight(&self, ws: &WeightedSpace, points: &[Vec<f64>]) -> Result<()> {
        for p in points {
            for t in [-self.t_step, self.t_step] {
                perturbed_geometry(ws, &self.h, t, p, 0).map_err(|_| Error::PerturbationNotSpd(p.clone()))?;
            }
        }
        Ok(())
    }
}

/// Geometry of `g + t h` at `x`, computed from scratch.
pub fn perturbed_geometry(ws: &WeightedSpace, h: &SymTensorField, t: f64, x: &[f64], order: usize) -> Result<LocalGeometry> {
    let g = ws.model.geometry(x, order)?.g;
    let hh = h.taylor(x, order);
    let gt: JetMat = g
        .iter()
        .zip(&hh)
        .map(|(gr, hr)| gr.iter().zip(hr).map(|(a, b)| a + &(b * t)).collect())
        .collect();
    LocalGeometry::new(gt).map_err(|_| Error::PerturbationNotSpd(x.to_vec()))
}

/// Variation terms evaluated from one local expansion.
struct Terms<'a> {
    wp: &'a WeightedPoint,
    h: JetMat,
}

impl<'a> Terms<'a> {
    fn new(ws: &WeightedSpace, wp: &'a WeightedPoint, h: &SymTensorField, x: &[f64]) -> Self {
        let _ = ws;
        Self { wp, h: h.taylor(x, wp.geo.order) }
    }

    fn grad_f(&self) -> Vec<Jet> {
        self.wp.geo.gradient(&self.wp.f)
    }

    /// `−⟨∇²f, h⟩ − ⟨∇f, div h⟩ + ½⟨∇f, ∇ tr h⟩`.
    fn laplacian_f(&self) -> Jet {
        let geo = &self.wp.geo;
        let df = self.wp.df();
        let div_h = geo.div_tensor(&self.h);
        let tr = geo.trace(&self.h);
        -geo.inner(&geo.hessian(&self.wp.f), &self.h) - geo.inner_cov(&df, &div_h)
            + geo.inner_cov(&df, &geo.grad_cov(&tr)) * 0.5
    }

    /// `−h(∇f, ∇f)`.
    fn gradnorm(&self) -> Jet {
        let gf = self.grad_f();
        -self.wp.geo.bilinear(&self.h, &gf, &gf)
    }

    /// `−Δ tr h + div div h − ⟨h, Ric⟩`.
    fn scalar(&self) -> Jet {
        let geo = &self.wp.geo;
        let tr = geo.trace(&self.h);
        -geo.laplacian(&tr) + geo.div_oneform(&geo.div_tensor(&self.h)) - geo.inner(&self.h, geo.ricci())
    }

    /// `−Δ_f tr h − ⟨h, Ric_f⟩ + div_f(div_f h)`.
    fn perelman(&self) -> Jet {
        let wp = self.wp;
        let tr = wp.geo.trace(&self.h);
        -wp.drift_laplacian(&tr) - wp.geo.inner(&self.h, &wp.bakry_emery_ricci())
            + wp.div_f_oneform(&wp.div_f_tensor(&self.h))
    }

    /// The same quantity expanded into unweighted pieces:
    /// `δR − 2⟨h, ∇²f⟩ − 2⟨∇f, div h⟩ + ⟨∇f, ∇ tr h⟩ + h(∇f, ∇f)`.
    fn perelman_expanded(&self) -> Jet {
        let geo = &self.wp.geo;
        let df = self.wp.df();
        let gf = self.grad_f();
        let tr = geo.trace(&self.h);
        self.scalar() - geo.inner(&self.h, &geo.hessian(&self.wp.f)) * 2.0
            - geo.inner_cov(&df, &geo.div_tensor(&self.h)) * 2.0
            + geo.inner_cov(&df, &geo.grad_cov(&tr))
            + geo.bilinear(&self.h, &gf, &gf)
    }
}

fn terms_at<T>(ws: &WeightedSpace, pert: &MetricPerturbation, x: &[f64], f: impl Fn(&Terms) -> T) -> Result<T> {
    let wp = ws.at(x, 3)?;
    let terms = Terms::new(ws, &wp, &pert.h, x);
    Ok(f(&terms))
}

pub fn variation_laplacian_f(ws: &WeightedSpace, pert: &MetricPerturbation, x: &[f64]) -> Result<f64> {
    terms_at(ws, pert, x, |t| t.laplacian_f().value())
}

pub fn variation_gradnorm(ws: &WeightedSpace, pert: &MetricPerturbation, x: &[f64]) -> Result<f64> {
    terms_at(ws, pert, x, |t| t.gradnorm().value())
}

pub fn variation_scalar(ws: &WeightedSpace, pert: &MetricPerturbation, x: &[f64]) -> Result<f64> {
    terms_at(ws, pert, x, |t| t.scalar().value())
}

pub fn linearized_perelman(ws: &WeightedSpace, pert: &MetricPerturbation, x: &[f64]) -> Result<f64> {
    terms_at(ws, pert, x, |t| t.perelman().value())
}

pub fn linearized_perelman_expanded(ws: &WeightedSpace, pert: &MetricPerturbation, x: &[f64]) -> Result<f64> {
    terms_at(ws, pert, x, |t| t.perelman_expanded().value())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    LaplacianF,
    GradNormF,
    Scalar,
    Perelman,
}

impl Quantity {
    pub const ALL: [Quantity; 4] = [Quantity::LaplacianF, Quantity::GradNormF, Quantity::Scalar, Quantity::Perelman];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::LaplacianF => "laplacian-f",
            Quantity::GradNormF => "gradnorm-f",
            Quantity::Scalar => "scalar",
            Quantity::Perelman => "perelman",
        }
    }
}

/// `Q` of the metric `g + t h` at `x`.
pub fn quantity_at(ws: &WeightedSpace, h: &SymTensorField, t: f64, quantity: Quantity, x: &[f64]) -> Result<f64> {
    let geo = perturbed_geometry(ws, h, t, x, 2)?;
    let f = ws.density.taylor(x, 2);
    let wp = WeightedPoint { geo, f };
    let df = wp.df();
    Ok(match quantity {
        Quantity::LaplacianF => wp.geo.laplacian(&wp.f).value(),
        Quantity::GradNormF => wp.geo.inner_cov(&df, &df).value(),
        Quantity::Scalar => wp.geo.scalar().value(),
        Quantity::Perelman => wp.perelman_scalar().value(),
    })
}

/// Central difference in `t` with one Richardson level:
/// `(4 D(t/2) − D(t)) / 3`.
pub fn numeric_variation(ws: &WeightedSpace, pert: &MetricPerturbation, quantity: Quantity, x: &[f64]) -> Result<f64> {
    let central = |t: f64| -> Result<f64> {
        Ok((quantity_at(ws, &pert.h, t, quantity, x)? - quantity_at(ws, &pert.h, -t, quantity, x)?) / (2.0 * t))
    };
    let t = pert.t_step;
    Ok((4.0 * central(t / 2.0)? - central(t)?) / 3.0)
}

/// Closed-form variation of a quantity.
pub fn closed_form(ws: &WeightedSpace, pert: &MetricPerturbation, quantity: Quantity, x: &[f64]) -> Result<f64> {
    match quantity {
        Quantity::LaplacianF => variation_laplacian_f(ws, pert, x),
        Quantity::GradNormF => variation_gradnorm(ws, pert, x),
        Quantity::Scalar => variation_scalar(ws, pert, x),
        Quantity::Perelman => linearized_perelman(ws, pert, x),
    }
}

/// `|a − b| / max(|a|, |b|, 1e−3)`: relative, with an absolute floor for
/// values that vanish.
pub fn relative_discrepancy(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

/// Compare `⟨(δℛ_f)* u, h⟩_{L²_f}` with `⟨u, δ_h ℛ_f⟩_{L²_f}`.
pub fn adjoint_duality_check(
    ws: &WeightedSpace,
    u: &ScalarField,
    pert: &MetricPerturbation,
    grid: &QuadratureGrid,
    tolerance: f64,
) -> Result<TwoSidedReport> {
    if !ws.model.closed && !pert.compactly_supported {
        let u_vanishes = match &ws.model.boundary {
            Some(_) => {
                let b = crate::quadrature::boundary_grid(&ws.model, 16)?;
                b.components.iter().flat_map(|c| c.points.iter()).all(|p| u.value(p).abs() < 1e-12)
            }
            None => false,
        };
        if !u_vanishes {
            return Err(Error::UnsupportedBoundary(
                "duality needs a closed model, a compactly supported h, or u vanishing on the boundary".into(),
            ));
        }
    }
    let lhs = integrate(ws, grid, |x| {
        let wp = ws.at(x, 2)?;
        let adj = wp.adjoint(&u.taylor(x, 2));
        Ok(wp.geo.inner(&adj, &pert.h.taylor(x, 0)).value())
    })?;
    let rhs = integrate(ws, grid, |x| Ok(u.value(x) * linearized_perelman(ws, pert, x)?))?;
    let gap = (lhs - rhs).abs() / (1.0 + rhs.abs());
    let mut report = TwoSidedReport::new("adjoint-duality", lhs, rhs, tolerance);
    report.relative_gap = gap;
    report.pass = gap < tolerance;
    Ok(report)
}

/// Random-superposition linearity defect `|L(a h₁ + b h₂) − a L(h₁) − b L(h₂)|`.
pub fn linearity_defect(
    ws: &WeightedSpace,
    h1: &SymTensorField,
    h2: &SymTensorField,
    a: f64,
    b: f64,
    quantity: Quantity,
    x: &[f64],
) -> Result<f64> {
    let combo = SymTensorField::linear_combination(vec![(a, h1.clone()), (b, h2.clone())]);
    let p = |h: &SymTensorField| closed_form(ws, &MetricPerturbation::new(h.clone()), quantity, x);
    Ok((p(&combo)? - a * p(h1)? - b * p(h2)?).abs())
}

/// A tensor field `φ g` for the model's metric.
pub fn conformal_perturbation(ws: &WeightedSpace, phi: ScalarField) -> SymTensorField {
    let metric: JetMap = ws.model.metric.clone();
    let n = ws.dim();
    SymTensorField::analytic(n, move |x| {
        let g = metric.eval(x);
        let p = phi.eval(x);
        let mut out = Vec::new();
        for i in 0..n {
            for j in i..n {
                out.push(&p * &g[i * n + j]);
            }
        }
        out
    })
}
