//! Weighted operators of a smooth metric measure space `(Σ, g, e^{−f} dVol)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::{FdConfig, JetMap, ScalarField, SymTensorField};
use crate::jet::Jet;
use crate::manifold::{values, vec_values, ChartPoint, JetMat, LocalGeometry, MetricModel};
use crate::models::unknown;

pub const DENSITY_KINDS: [&str; 6] = ["zero", "constant", "linear", "gaussian", "expr", "quadratic"];

/// Named scalar field preset, used for densities and potentials alike.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub kind: String,
    /// Ambient vector for `linear` (`⟨X, v⟩`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
    /// Expression in chart coordinates for `expr`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    /// Value for `constant`; additive shift for the other kinds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// Overall factor applied before the shift.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

impl FieldSpec {
    pub fn kind(kind: &str) -> Self {
        Self {
            kind: kind.into(),
            ..Self::default()
        }
    }

    pub fn linear(v: Vec<f64>) -> Self {
        Self {
            kind: "linear".into(),
            v: Some(v),
            ..Self::default()
        }
    }

    pub fn expr(src: &str) -> Self {
        Self {
            kind: "expr".into(),
            expr: Some(src.into()),
            ..Self::default()
        }
    }
}

/// Ambient coordinates of the model (its embedding, or the chart itself).
pub fn ambient(model: &MetricModel) -> JetMap {
    match &model.embedding {
        Some(e) => e.clone(),
        None => {
            let n = model.dim;
            JetMap::analytic(n, n, |x| x.to_vec())
        }
    }
}

/// `x ↦ ⟨X(x), v⟩` for the model's ambient coordinates `X`.
pub fn ambient_linear(model: &MetricModel, v: &[f64]) -> Result<ScalarField> {
    let amb = ambient(model);
    if amb.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: amb.len(),
            got: v.len(),
        });
    }
    let v = v.to_vec();
    Ok(ScalarField::analytic(model.dim, move |x| {
        let xs = amb.eval(x);
        let mut acc = x[0].lift(0.0);
        for (c, vi) in xs.iter().zip(&v) {
            if *vi != 0.0 {
                acc += c * *vi;
            }
        }
        acc
    }))
}

/// `x ↦ |X(x)|² / 2`.
pub fn ambient_gaussian(model: &MetricModel) -> ScalarField {
    let amb = ambient(model);
    ScalarField::analytic(model.dim, move |x| {
        let xs = amb.eval(x);
        crate::jet::sum(&xs.iter().map(Jet::square).collect::<Vec<_>>()).unwrap() * 0.5
    })
}

pub fn build_field(spec: &FieldSpec, model: &MetricModel) -> Result<ScalarField> {
    let n = model.dim;
    let scale = spec.scale.unwrap_or(1.0);
    let base = match spec.kind.as_str() {
        "zero" => ScalarField::zero(n),
        "constant" => return Ok(ScalarField::constant(n, spec.value.unwrap_or(0.0) * scale)),
        "linear" => {
            let v = spec
                .v
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("'linear' field needs a vector 'v'".into()))?;
            ambient_linear(model, v)?
        }
        "gaussian" => ambient_gaussian(model),
        "quadratic" => {
            // ⟨X, v⟩² / 2
            let v = spec
                .v
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("'quadratic' field needs a vector 'v'".into()))?;
            let lin = ambient_linear(model, v)?;
            ScalarField::analytic(n, move |x| lin.eval(x).square() * 0.5)
        }
        "expr" => {
            let src = spec
                .expr
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("'expr' field needs an 'expr' string".into()))?;
            ScalarField::from_expr(Expr::parse_coords(src, n)?, n)
        }
        other => return Err(unknown("field kind", other, &DENSITY_KINDS)),
    };
    let mut field = if scale != 1.0 { base.scale(scale) } else { base };
    if let Some(c) = spec.value {
        field = field.add_constant(c);
    }
    Ok(field)
}

/// A metric model together with a density `f`.
#[derive(Clone, Debug)]
pub struct WeightedSpace {
    pub model: MetricModel,
    pub density: ScalarField,
}

impl WeightedSpace {
    pub fn new(model: MetricModel, density: ScalarField) -> Result<Self> {
        if density.dim() != model.dim {
            return Err(Error::DimensionMismatch {
                expected: model.dim,
                got: density.dim(),
            });
        }
        Ok(Self { model, density })
    }

    pub fn dim(&self) -> usize {
        self.model.dim
    }

    /// Metric and density both switched to finite-difference derivatives.
    pub fn to_fd(&self, fd: FdConfig) -> Self {
        Self {
            model: self.model.to_fd(fd),
            density: self.density.to_fd(fd),
        }
    }

    pub fn is_fd(&self) -> bool {
        self.model.is_fd() || self.density.is_fd()
    }

    /// Weighted local calculus at `x` with metric and density jets of `order`.
    pub fn at(&self, x: &[f64], order: usize) -> Result<WeightedPoint> {
        let geo = self.model.geometry(x, order)?;
        let f = self.density.taylor(x, order);
        Ok(WeightedPoint { geo, f })
    }

    /// `e^{−f}` at a point.
    pub fn weight(&self, x: &[f64]) -> f64 {
        (-self.density.value(x)).exp()
    }
}

/// Local geometry plus the density jet at one point.
#[derive(Clone, Debug)]
pub struct WeightedPoint {
    pub geo: LocalGeometry,
    pub f: Jet,
}

impl WeightedPoint {
    pub fn dim(&self) -> usize {
        self.geo.dim
    }

    pub fn df(&self) -> Vec<Jet> {
        self.geo.grad_cov(&self.f)
    }

    /// `Δ_f u = Δu − ⟨∇f, ∇u⟩`.
    pub fn drift_laplacian(&self, u: &Jet) -> Jet {
        self.geo.laplacian(u) - self.geo.inner_cov(&self.df(), &self.geo.grad_cov(u))
    }

    /// `e^f div(e^{−f} ∇u)`.
    pub fn drift_laplacian_divergence_form(&self, u: &Jet) -> Jet {
        let w = (-&self.f).exp();
        let grad = self.geo.gradient(u);
        let weighted: Vec<Jet> = grad.iter().map(|c| c * &w).collect();
        self.geo.div_vector(&weighted) * self.f.exp()
    }

    /// `Ric_f = Ric + ∇²f`.
    pub fn bakry_emery_ricci(&self) -> JetMat {
        let hf = self.geo.hessian(&self.f);
        self.geo
            .ricci()
            .iter()
            .zip(&hf)
            .map(|(r, h)| r.iter().zip(h).map(|(a, b)| a + b).collect())
            .collect()
    }

    /// `ℛ_f = R + 2Δf − |∇f|²`.
    pub fn perelman_scalar(&self) -> Jet {
        let df = self.df();
        self.geo.scalar() + &(self.geo.laplacian(&self.f) * 2.0) - self.geo.inner_cov(&df, &df)
    }

    /// `(div_f h)_j = (div h)_j − h(∇f, e_j)`.
    pub fn div_f_tensor(&self, h: &JetMat) -> Vec<Jet> {
        let div = self.geo.div_tensor(h);
        let hf = self.geo.contract(h, &self.geo.gradient(&self.f));
        div.iter().zip(&hf).map(|(a, b)| a - b).collect()
    }

    /// `div_f w = div w − ⟨df, w⟩` for a covector `w`.
    pub fn div_f_oneform(&self, w: &[Jet]) -> Jet {
        self.geo.div_oneform(w) - self.geo.inner_cov(&self.df(), w)
    }

    /// `div_f X = div X − X(f)` for a vector `X`.
    pub fn div_f_vector(&self, x: &[Jet]) -> Jet {
        let df = self.df();
        let xf = crate::jet::sum(&x.iter().zip(&df).map(|(a, b)| a * b).collect::<Vec<_>>()).unwrap();
        self.geo.div_vector(x) - xf
    }

    /// `(δℛ_f)* u = −(Δ_f u) g + ∇²u − u Ric_f`.
    pub fn adjoint(&self, u: &Jet) -> JetMat {
        let lap = self.drift_laplacian(u);
        let hu = self.geo.hessian(u);
        let ric = self.bakry_emery_ricci();
        let n = self.dim();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| &hu[i][j] - &(&lap * &self.geo.g[i][j]) - &(u * &ric[i][j]))
                    .collect()
            })
            .collect()
    }
}

/// Sup-norm-style size `|A|_g` of a symmetric matrix value.
pub fn tensor_norm(geo: &LocalGeometry, a: &JetMat) -> f64 {
    geo.inner(a, a).value().max(0.0).sqrt()
}

pub fn covector_norm(geo: &LocalGeometry, w: &[Jet]) -> f64 {
    geo.inner_cov(w, w).value().max(0.0).sqrt()
}

pub fn drift_laplacian(ws: &WeightedSpace, u: &ScalarField, x: &ChartPoint) -> Result<f64> {
    let wp = ws.at(x, 2)?;
    Ok(wp.drift_laplacian(&u.taylor(x, 2)).value())
}

pub fn drift_laplacian_divergence_form(ws: &WeightedSpace, u: &ScalarField, x: &ChartPoint) -> Result<f64> {
    let wp = ws.at(x, 2)?;
    Ok(wp.drift_laplacian_divergence_form(&u.taylor(x, 2)).value())
}

pub fn bakry_emery_ricci(ws: &WeightedSpace, x: &ChartPoint) -> Result<Vec<Vec<f64>>> {
    Ok(values(&ws.at(x, 2)?.bakry_emery_ricci()))
}

pub fn perelman_scalar(ws: &WeightedSpace, x: &ChartPoint) -> Result<f64> {
    Ok(ws.at(x, 2)?.perelman_scalar().value())
}

pub fn f_divergence_tensor(ws: &WeightedSpace, h: &SymTensorField, x: &ChartPoint) -> Result<Vec<f64>> {
    let wp = ws.at(x, 1)?;
    Ok(vec_values(&wp.div_f_tensor(&h.taylor(x, 1))))
}

/// `div_f(div_f h)`.
pub fn f_divergence_twice(ws: &WeightedSpace, h: &SymTensorField, x: &ChartPoint) -> Result<f64> {
    let wp = ws.at(x, 2)?;
    Ok(wp.div_f_oneform(&wp.div_f_tensor(&h.taylor(x, 2))).value())
}

pub fn adjoint_operator(ws: &WeightedSpace, u: &ScalarField, x: &ChartPoint) -> Result<Vec<Vec<f64>>> {
    let wp = ws.at(x, 2)?;
    Ok(values(&wp.adjoint(&u.taylor(x, 2))))
}

pub fn traceless(ws: &WeightedSpace, t: &SymTensorField, x: &ChartPoint) -> Result<Vec<Vec<f64>>> {
    let geo = ws.model.geometry(x, 0)?;
    Ok(values(&geo.traceless(&t.taylor(x, 0))))
}

/// The function `σ` with `dℛ_f = −2σ df` and `Δ_f u = −σu`, defined where
/// `|df|_g` exceeds the degeneracy threshold.
#[derive(Clone, Debug)]
pub struct SigmaField {
    pub ws: WeightedSpace,
    pub threshold: f64,
}

/// `σ` at one point together with the residuals of its defining relations.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaSample {
    pub sigma: f64,
    /// `|dℛ_f + 2σ df|_g`, the part of `dℛ_f` not parallel to `df`.
    pub direction_residual: f64,
}

impl SigmaField {
    pub const DEFAULT_THRESHOLD: f64 = 1e-8;

    pub fn new(ws: WeightedSpace, threshold: f64) -> Self {
        Self { ws, threshold }
    }

    /// `None` where the point is masked.
    pub fn sample(&self, x: &[f64]) -> Result<Option<SigmaSample>> {
        let wp = self.ws.at(x, 3)?;
        Ok(sigma_from(&wp, self.threshold))
    }

    pub fn value(&self, x: &[f64]) -> Result<Option<f64>> {
        Ok(self.sample(x)?.map(|s| s.sigma))
    }
}

/// Least-squares `σ` in the metric norm: `σ = −⟨dℛ_f, df⟩ / (2|df|²)`.
pub fn sigma_from(wp: &WeightedPoint, threshold: f64) -> Option<SigmaSample> {
    let df = wp.df();
    let norm2 = wp.geo.inner_cov(&df, &df).value();
    if norm2.sqrt() <= threshold {
        return None;
    }
    let dr = wp.geo.grad_cov(&wp.perelman_scalar());
    let sigma = -wp.geo.inner_cov(&dr, &df).value() / (2.0 * norm2);
    let rest: Vec<Jet> = dr.iter().zip(&df).map(|(a, b)| a + &(b * (2.0 * sigma))).collect();
    Some(SigmaSample {
        sigma,
        direction_residual: covector_norm(&wp.geo, &rest),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{euclidean, sphere_spherical};

    #[test]
    fn gaussian_space_operators() {
        let m = euclidean(3, 6.0);
        let f = ambient_gaussian(&m);
        let ws = WeightedSpace::new(m.clone(), f).unwrap();
        let x = m.point(&[0.3, -1.2, 0.5]).unwrap();
        let u = ambient_linear(&m, &[1.0, 2.0, -1.0]).unwrap();
        let uv = u.value(&x);
        assert!((drift_laplacian(&ws, &u, &x).unwrap() + uv).abs() < 1e-14);
        let r2: f64 = x.iter().map(|v| v * v).sum();
        assert!((perelman_scalar(&ws, &x).unwrap() - (6.0 - r2)).abs() < 1e-13);
        let adj = adjoint_operator(&ws, &u, &x).unwrap();
        assert!(adj.iter().flatten().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn weighted_sphere_operators() {
        let m = sphere_spherical(2, 1.0);
        let v = [0.0, 0.3, 0.0];
        let f = ambient_linear(&m, &v).unwrap();
        let ws = WeightedSpace::new(m.clone(), f.clone()).unwrap();
        let u = ambient_linear(&m, &[0.0, 0.0, 1.0]).unwrap();
        let x = m.point(&[1.1, 0.4]).unwrap();
        let fx = f.value(&x);
        let lap = drift_laplacian(&ws, &u, &x).unwrap();
        assert!((lap - (-2.0 + fx) * u.value(&x)).abs() < 1e-13);
        let ric = bakry_emery_ricci(&ws, &x).unwrap();
        let g = m.metric_at(&x);
        for i in 0..2 {
            for j in 0..2 {
                assert!((ric[i][j] - (1.0 - fx) * g[i][j]).abs() < 1e-13);
            }
        }
        let rf = perelman_scalar(&ws, &x).unwrap();
        assert!((rf - (2.0 - 4.0 * fx - 0.09 + fx * fx)).abs() < 1e-13);
        let adj = adjoint_operator(&ws, &u, &x).unwrap();
        assert!(adj.iter().flatten().all(|v| v.abs() < 1e-13));
        let sigma = SigmaField::new(ws, 1e-8).value(&x).unwrap().unwrap();
        assert!((sigma - (2.0 - fx)).abs() < 1e-12);
    }

    #[test]
    fn divergence_form_agrees() {
        let m = sphere_spherical(2, 1.0);
        let f = build_field(&FieldSpec::expr("sin(x) * cos(2*y) + 0.3*x"), &m).unwrap();
        let ws = WeightedSpace::new(m.clone(), f).unwrap();
        let u = build_field(&FieldSpec::expr("x^2 * sin(y)"), &m).unwrap();
        let x = m.point(&[0.9, 2.2]).unwrap();
        let a = drift_laplacian(&ws, &u, &x).unwrap();
        let b = drift_laplacian_divergence_form(&ws, &u, &x).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn unknown_field_kind_lists_valid_ones() {
        let m = euclidean(2, 1.0);
        let msg = build_field(&FieldSpec::kind("cubic"), &m).unwrap_err().to_string();
        assert!(msg.contains("cubic") && msg.contains("gaussian"));
    }
}
