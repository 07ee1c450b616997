//! Built-in metric models and the name-keyed registry.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::JetMap;
use crate::jet::Jet;
use crate::manifold::{BoundaryComponent, BoundaryModel, Domain, MetricModel};

pub const MODEL_NAMES: [&str; 8] = [
    "euclidean",
    "gaussian-chart",
    "sphere-spherical",
    "sphere-stereo",
    "hemisphere",
    "circle",
    "interval",
    "diag-family",
];

/// Model selection plus parameters; unset fields take per-model defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Half-width of the coordinate box for chart models on ℝⁿ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    /// Endpoints of the interval model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<[f64; 2]>,
    /// Polar angle of the boundary sphere of the hemisphere model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_angle: Option<f64>,
    /// `"lower"` keeps `θ₁ < angle`, `"upper"` keeps `θ₁ > angle`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<String>,
    /// Projection pole of the stereographic chart: `"north"` or `"south"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pole: Option<String>,
    /// Diagonal metric entries for `diag-family`, as coordinate expressions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diag: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periodic: Option<Vec<bool>>,
}

impl ModelSpec {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            ..Self::default()
        }
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = Some(dim);
        self
    }
}

pub fn build_model(spec: &ModelSpec) -> Result<MetricModel> {
    let dim = spec.dim.unwrap_or(2);
    let radius = spec.radius.unwrap_or(1.0);
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    let one_dim = |name: &str| -> Result<()> {
        match spec.dim {
            Some(d) if d != 1 => Err(Error::InvalidParameter(format!("model '{name}' is one-dimensional, got dim = {d}"))),
            _ => Ok(()),
        }
    };
    check_dim(dim)?;
    match spec.name.as_str() {
        "euclidean" => Ok(euclidean(dim, spec.half_width.unwrap_or(2.0))),
        "gaussian-chart" => {
            let mut m = euclidean(dim, spec.half_width.unwrap_or(6.0));
            m.name = "gaussian-chart".into();
            Ok(m)
        }
        "sphere-spherical" => Ok(sphere_spherical(dim, radius)),
        "sphere-stereo" => {
            let north = match spec.pole.as_deref().unwrap_or("north") {
                "north" => true,
                "south" => false,
                other => return Err(unknown("pole", other, &["north", "south"])),
            };
            Ok(sphere_stereo(dim, radius, north, spec.half_width.unwrap_or(2.0)))
        }
        "hemisphere" => {
            let lower = match spec.side.as_deref().unwrap_or("lower") {
                "lower" => true,
                "upper" => false,
                other => return Err(unknown("side", other, &["lower", "upper"])),
            };
            let angle = spec.boundary_angle.unwrap_or(PI / 2.0);
            if !(angle > 0.0 && angle < PI) {
                return Err(Error::InvalidParameter(format!("boundary_angle must lie in (0, π), got {angle}")));
            }
            Ok(hemisphere(dim, radius, angle, lower))
        }
        "circle" => {
            one_dim("circle")?;
            Ok(circle(radius))
        }
        "interval" => {
            one_dim("interval")?;
            let [a, b] = spec.bounds.unwrap_or([0.0, 1.0]);
            if !(b > a) {
                return Err(Error::InvalidParameter(format!("interval bounds must satisfy a < b, got [{a}, {b}]")));
            }
            Ok(interval(a, b))
        }
        "diag-family" => {
            let diag = spec
                .diag
                .clone()
                .ok_or_else(|| Error::InvalidParameter("diag-family requires 'diag' expressions".into()))?;
            let dim = spec.dim.unwrap_or(diag.len());
            let lo = spec.lo.clone().unwrap_or_else(|| vec![-1.0; dim]);
            let hi = spec.hi.clone().unwrap_or_else(|| vec![1.0; dim]);
            let periodic = spec.periodic.clone().unwrap_or_else(|| vec![false; dim]);
            diag_family(&diag, lo, hi, periodic)
        }
        other => Err(unknown("model", other, &MODEL_NAMES)),
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > crate::jet::MAX_DIM - 1 {
        return Err(Error::InvalidParameter(format!("dimension must lie in 1..=3, got {dim}")));
    }
    Ok(())
}

pub(crate) fn unknown(kind: &str, key: &str, valid: &[&str]) -> Error {
    Error::UnknownRegistryKey {
        kind: kind.to_string(),
        key: key.to_string(),
        valid: valid.iter().map(|s| s.to_string()).collect(),
    }
}

fn diagonal(entries: Vec<Jet>) -> Vec<Jet> {
    let n = entries.len();
    let zero = entries[0].lift(0.0);
    let mut out = vec![zero; n * n];
    for (i, e) in entries.into_iter().enumerate() {
        out[i * n + i] = e;
    }
    out
}

fn identity_map(dim: usize) -> JetMap {
    JetMap::analytic(dim, dim, |x| x.to_vec())
}

/// Flat `ℝⁿ`; the coordinate box `[−L, L]ⁿ` is used for grids.
pub fn euclidean(dim: usize, half_width: f64) -> MetricModel {
    let metric = JetMap::analytic(dim, dim * dim, move |x| diagonal(vec![x[0].lift(1.0); dim]));
    MetricModel::new(
        "euclidean",
        dim,
        metric,
        Domain::Box {
            lo: vec![-half_width; dim],
            hi: vec![half_width; dim],
            periodic: vec![false; dim],
        },
        |x| x.iter().all(|v| v.is_finite()),
    )
    .with_embedding(identity_map(dim))
}

fn spherical_metric(dim: usize, radius: f64) -> JetMap {
    let r2 = radius * radius;
    JetMap::analytic(dim, dim * dim, move |x| {
        let mut entries = Vec::with_capacity(dim);
        let mut factor = x[0].lift(r2);
        for k in 0..dim {
            entries.push(factor.clone());
            if k + 1 < dim {
                factor = &factor * &x[k].sin().square();
            }
        }
        diagonal(entries)
    })
}

/// Chart → `ℝ^{n+1}` with `X₀ = r cos θ₁` the polar axis.
fn spherical_embedding(dim: usize, radius: f64) -> JetMap {
    JetMap::analytic(dim, dim + 1, move |x| {
        let mut out = Vec::with_capacity(dim + 1);
        let mut prod = x[0].lift(radius);
        for k in 0..dim - 1 {
            out.push(&prod * &x[k].cos());
            prod = &prod * &x[k].sin();
        }
        out.push(&prod * &x[dim - 1].cos());
        out.push(&prod * &x[dim - 1].sin());
        out
    })
}

fn spherical_contains(dim: usize, polar: (f64, f64)) -> impl Fn(&[f64]) -> bool + Send + Sync {
    move |x: &[f64]| {
        x.iter().all(|v| v.is_finite())
            && x[0] > 0.0
            && x[0] < PI
            && x[0] >= polar.0
            && x[0] <= polar.1
            && x[1..dim - 1].iter().all(|&t| t > 0.0 && t < PI)
    }
}

/// Round `Sⁿ(r)` in hyperspherical coordinates `(θ₁, …, θ_{n−1}, φ)`.
pub fn sphere_spherical(dim: usize, radius: f64) -> MetricModel {
    let polar = (0.0, PI);
    MetricModel::new(
        "sphere-spherical",
        dim,
        spherical_metric(dim, radius),
        Domain::Spherical { polar },
        spherical_contains(dim.max(2), polar),
    )
    .with_embedding(spherical_embedding(dim, radius))
    .closed()
}

/// Geodesic ball `{θ₁ < angle}` (`lower`) or its complement of a round
/// sphere. The boundary is the sphere `θ₁ = angle`.
pub fn hemisphere(dim: usize, radius: f64, angle: f64, lower: bool) -> MetricModel {
    let polar = if lower { (0.0, angle) } else { (angle, PI) };
    let sign = if lower { 1.0 } else { -1.0 };
    let param_dim = dim - 1;
    let mut param_lo = vec![0.0; param_dim];
    let mut param_hi = vec![PI; param_dim];
    let mut param_periodic = vec![false; param_dim];
    if param_dim > 0 {
        param_hi[param_dim - 1] = 2.0 * PI;
        param_periodic[param_dim - 1] = true;
        param_lo[param_dim - 1] = 0.0;
    }
    let map = JetMap::analytic(param_dim, dim, move |s| {
        let mut out = vec![s[0].lift(angle)];
        out.extend(s.iter().cloned());
        out
    });
    let normal = Arc::new(move |_: &[f64]| {
        let mut v = vec![0.0; dim];
        v[0] = sign / radius;
        v
    });
    let boundary = BoundaryModel {
        components: vec![BoundaryComponent {
            name: "boundary".into(),
            param_lo,
            param_hi,
            param_periodic,
            map,
            normal,
        }],
    };
    MetricModel::new(
        "hemisphere",
        dim,
        spherical_metric(dim, radius),
        Domain::Spherical { polar },
        spherical_contains(dim.max(2), polar),
    )
    .with_embedding(spherical_embedding(dim, radius))
    .with_boundary(boundary)
}

/// Stereographic chart of `Sⁿ(r)`: `g = 4r² / (1 + |y|²)² δ`. The north chart
/// projects from `X₀ = r`, the south chart from `X₀ = −r`.
pub fn sphere_stereo(dim: usize, radius: f64, north: bool, half_width: f64) -> MetricModel {
    let r2 = radius * radius;
    let metric = JetMap::analytic(dim, dim * dim, move |y| {
        let s = crate::jet::sum(&y.iter().map(Jet::square).collect::<Vec<_>>()).unwrap() + 1.0;
        let c = s.square().recip() * (4.0 * r2);
        diagonal(vec![c; dim])
    });
    let embedding = JetMap::analytic(dim, dim + 1, move |y| {
        let q = crate::jet::sum(&y.iter().map(Jet::square).collect::<Vec<_>>()).unwrap();
        let inv = (&q + 1.0).recip();
        let height = if north { &q - 1.0 } else { 1.0 - &q };
        let mut out = vec![&height * &inv * radius];
        out.extend(y.iter().map(|v| v * &inv * (2.0 * radius)));
        out
    });
    let mut m = MetricModel::new(
        "sphere-stereo",
        dim,
        metric,
        Domain::Box {
            lo: vec![-half_width; dim],
            hi: vec![half_width; dim],
            periodic: vec![false; dim],
        },
        |x| x.iter().all(|v| v.is_finite()),
    )
    .with_embedding(embedding);
    m.closed = false;
    m
}

/// Stereographic coordinates of an ambient point of `Sⁿ(r)` in the north or
/// south chart.
pub fn stereo_coords(ambient: &[f64], radius: f64, north: bool) -> Vec<f64> {
    let h = ambient[0] / radius;
    let denom = if north { 1.0 - h } else { 1.0 + h };
    ambient[1..].iter().map(|v| v / radius / denom).collect()
}

/// Circle of radius `r`, coordinate the angle.
pub fn circle(radius: f64) -> MetricModel {
    let r2 = radius * radius;
    let metric = JetMap::analytic(1, 1, move |x| vec![x[0].lift(r2)]);
    let embedding = JetMap::analytic(1, 2, move |x| vec![x[0].cos() * radius, x[0].sin() * radius]);
    MetricModel::new(
        "circle",
        1,
        metric,
        Domain::Box {
            lo: vec![0.0],
            hi: vec![2.0 * PI],
            periodic: vec![true],
        },
        |x| x[0].is_finite(),
    )
    .with_embedding(embedding)
    .closed()
}

fn point_component(name: &str, at: f64, normal: f64) -> BoundaryComponent {
    BoundaryComponent {
        name: name.into(),
        param_lo: Vec::new(),
        param_hi: Vec::new(),
        param_periodic: Vec::new(),
        map: JetMap::analytic(0, 1, move |_| vec![Jet::constant(0, 0, at)]),
        normal: Arc::new(move |_| vec![normal]),
    }
}

/// Flat segment `[a, b]` with boundary components `left` and `right`.
pub fn interval(a: f64, b: f64) -> MetricModel {
    let metric = JetMap::analytic(1, 1, |x| vec![x[0].lift(1.0)]);
    MetricModel::new(
        "interval",
        1,
        metric,
        Domain::Box {
            lo: vec![a],
            hi: vec![b],
            periodic: vec![false],
        },
        move |x| x[0] >= a && x[0] <= b,
    )
    .with_embedding(identity_map(1))
    .with_boundary(BoundaryModel {
        components: vec![point_component("left", a, -1.0), point_component("right", b, 1.0)],
    })
}

/// Diagonal metric `g = diag(e₀(x), …, e_{n−1}(x))` with user expressions over
/// the coordinate box `[lo, hi]`.
pub fn diag_family(diag: &[String], lo: Vec<f64>, hi: Vec<f64>, periodic: Vec<bool>) -> Result<MetricModel> {
    let dim = diag.len();
    check_dim(dim)?;
    if lo.len() != dim || hi.len() != dim || periodic.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: lo.len().min(hi.len()).min(periodic.len()),
        });
    }
    if lo.iter().zip(&hi).any(|(a, b)| !(b > a)) {
        return Err(Error::InvalidParameter("diag-family box needs lo < hi on every axis".into()));
    }
    let exprs: Vec<Expr> = diag
        .iter()
        .map(|s| Expr::parse_coords(s, dim))
        .collect::<Result<_>>()?;
    let metric = JetMap::analytic(dim, dim * dim, move |x| diagonal(exprs.iter().map(|e| e.eval_jet(x)).collect()));
    let (l, h) = (lo.clone(), hi.clone());
    let per = periodic.clone();
    Ok(MetricModel::new(
        "diag-family",
        dim,
        metric,
        Domain::Box { lo, hi, periodic },
        move |x| {
            x.iter()
                .zip(l.iter().zip(&h))
                .zip(&per)
                .all(|((v, (a, b)), &p)| v.is_finite() && (p || (*v >= *a && *v <= *b)))
        },
    ))
}

/// Flat slab `[0, width] × T^{n−1}` (unit-period torus factors) with boundary
/// components `bottom` and `top`.
pub fn slab(dim: usize, width: f64) -> MetricModel {
    let metric = JetMap::analytic(dim, dim * dim, move |x| diagonal(vec![x[0].lift(1.0); dim]));
    let mut lo = vec![0.0; dim];
    let mut hi = vec![1.0; dim];
    let mut periodic = vec![true; dim];
    lo[0] = 0.0;
    hi[0] = width;
    periodic[0] = false;
    let face = |name: &str, at: f64, sign: f64| {
        let pd = dim - 1;
        BoundaryComponent {
            name: name.into(),
            param_lo: vec![0.0; pd],
            param_hi: vec![1.0; pd],
            param_periodic: vec![true; pd],
            map: JetMap::analytic(pd, dim, move |s| {
                let mut out = vec![s[0].lift(at)];
                out.extend(s.iter().cloned());
                out
            }),
            normal: Arc::new(move |_| {
                let mut v = vec![0.0; dim];
                v[0] = sign;
                v
            }),
        }
    };
    let boundary = BoundaryModel {
        components: vec![face("bottom", 0.0, -1.0), face("top", width, 1.0)],
    };
    MetricModel::new(
        "slab",
        dim,
        metric,
        Domain::Box { lo, hi, periodic },
        move |x| x[0] >= 0.0 && x[0] <= width,
    )
    .with_embedding(identity_map(dim))
    .with_boundary(boundary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{christoffel, ricci, scalar_curvature};

    #[test]
    fn registry_rejects_unknown_names() {
        let err = build_model(&ModelSpec::named("torus")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("torus") && msg.contains("hemisphere"), "{msg}");
    }

    #[test]
    fn every_registered_name_builds() {
        for name in MODEL_NAMES {
            let mut spec = ModelSpec::named(name);
            if name == "diag-family" {
                spec.diag = Some(vec!["1".into(), "1 + x^2".into()]);
            }
            if name == "circle" || name == "interval" {
                spec.dim = Some(1);
            }
            let m = build_model(&spec).unwrap();
            assert_eq!(m.name, name);
        }
    }

    #[test]
    fn sphere_chart_curvature() {
        let s2 = sphere_spherical(2, 1.0);
        let p = s2.point(&[0.7, 1.3]).unwrap();
        let gam = christoffel(&s2, &p).unwrap();
        assert!((gam[0][1][1] + 0.7f64.sin() * 0.7f64.cos()).abs() < 1e-14);
        assert!((scalar_curvature(&s2, &p).unwrap() - 2.0).abs() < 1e-12);
        let s3 = sphere_spherical(3, 1.0);
        let q = s3.point(&[0.4, 2.0, 0.1]).unwrap();
        let ric = ricci(&s3, &q).unwrap();
        let g = s3.metric_at(&q);
        for i in 0..3 {
            for j in 0..3 {
                assert!((ric[i][j] - 2.0 * g[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn embeddings_land_on_the_sphere() {
        let s = sphere_spherical(3, 2.0);
        let x = s.embed(&[0.3, 1.1, 4.0]).unwrap();
        assert!((x.iter().map(|v| v * v).sum::<f64>() - 4.0).abs() < 1e-12);
        let st = sphere_stereo(2, 1.0, false, 2.0);
        let y = st.embed(&[0.3, -0.8]).unwrap();
        assert!((y.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
        let back = stereo_coords(&y, 1.0, false);
        assert!((back[0] - 0.3).abs() < 1e-12 && (back[1] + 0.8).abs() < 1e-12);
    }
}
