//! Scenario files: one TOML document per run.

use std::fmt;
use std::marker::PhantomData;
use std::path::Path;

use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use smms::identities::{needs_potential, CheckParams, IDENTITY_IDS};
use smms::models::{ModelSpec, MODEL_NAMES};
use smms::spectral::{BASIS_KINDS, PROBE_HYPOTHESES};
use smms::weighted::{FieldSpec, DENSITY_KINDS};

use crate::ConfigError;

pub const BOUNDARY_CHECKS: [&str; 6] = [
    "surface-gravity",
    "boundary-area",
    "weighted-divergence",
    "pohozaev-schoen",
    "gauss-reduction",
    "area-estimate",
];

pub const DERIVATIVE_MODES: [&str; 2] = ["analytic", "fd"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub scenario: String,
    #[serde(deserialize_with = "name_or_table")]
    pub model: ModelSpec,
    #[serde(default = "zero_density", deserialize_with = "name_or_table")]
    pub density: FieldSpec,
    #[serde(default, deserialize_with = "optional_name_or_table", skip_serializing_if = "Option::is_none")]
    pub potential: Option<FieldSpec>,
    #[serde(default)]
    pub checks: ChecksSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSpec>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSpec {
    /// Identity ids; `["all"]` selects the whole catalog.
    #[serde(default)]
    pub identities: Vec<String>,
    #[serde(default = "analytic")]
    pub derivatives: String,
    /// Base step of the finite differences when `derivatives = "fd"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_base: Option<f64>,
    #[serde(default)]
    pub params: CheckParams,
    /// Report `|(δℛ_f)* u|` for the potential at the sample points.
    #[serde(default)]
    pub adjoint_kernel: bool,
    /// Degree of a seeded random tensor for `tensor-divergence`; `∘Ric_f`
    /// when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor_degree: Option<usize>,
    #[serde(default)]
    pub boundary: Vec<String>,
    /// Number of seeded gradient fields for `weighted-divergence`.
    #[serde(default = "ten")]
    pub vector_fields: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linearization: Option<LinearizationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duality: Option<DualitySpec>,
}

/// Closed-form values to compare extracted quantities against.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    /// Expected `σ` of `Δ_f u = −σ u`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<FieldSpec>,
    /// Expected `φ` with `Ric_f = φ g`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ricci_f_factor: Option<FieldSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearizationSpec {
    pub samples: usize,
    #[serde(default = "two")]
    pub degree: usize,
    /// Amplitude of the random perturbation `h`.
    #[serde(default = "amplitude")]
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualitySpec {
    pub pairs: usize,
    #[serde(default = "two")]
    pub degree: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub basis: String,
    pub size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    /// Number of drift-Laplacian eigenpairs; no eigensolve when zero.
    #[serde(default)]
    pub eigen: usize,
    #[serde(default)]
    pub kernel: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_kernel_dim: Option<usize>,
    /// Basis labels spanning the expected kernel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_kernel: Option<Vec<String>>,
    /// Closed-form eigenvalues `σ`, ascending.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_eigenvalues: Option<Vec<f64>>,
    /// Cells of the dense finite-difference oracle (1-D models).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_cells: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    #[serde(default)]
    pub expect_kernel: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Sample points per axis for pointwise identities.
    #[serde(default = "six")]
    pub nodes: usize,
    /// Quadrature nodes per axis for integrals.
    #[serde(default = "twenty_four")]
    pub quadrature: usize,
    #[serde(default = "twenty_four")]
    pub boundary: usize,
}

impl Default for ChecksSpec {
    fn default() -> Self {
        Self {
            identities: Vec::new(),
            derivatives: analytic(),
            fd_base: None,
            params: CheckParams::default(),
            adjoint_kernel: false,
            tensor_degree: None,
            boundary: Vec::new(),
            vector_fields: ten(),
            reference: None,
            linearization: None,
            duality: None,
        }
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            nodes: six(),
            quadrature: twenty_four(),
            boundary: twenty_four(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "micro")]
    pub identity: f64,
    /// Identity tolerance under finite differences.
    #[serde(default = "fd_tolerance")]
    pub fd: f64,
    #[serde(default = "micro")]
    pub boundary: f64,
    #[serde(default = "pohozaev")]
    pub pohozaev: f64,
    #[serde(default = "pohozaev")]
    pub variation: f64,
    #[serde(default = "micro")]
    pub duality: f64,
    #[serde(default = "micro")]
    pub reference: f64,
    #[serde(default = "pohozaev")]
    pub spectral: f64,
    /// Agreement with the dense finite-difference spectrum.
    #[serde(default = "pohozaev")]
    pub oracle: f64,
    #[serde(default = "symmetry")]
    pub symmetry: f64,
    #[serde(default = "micro")]
    pub kernel: f64,
    #[serde(default = "micro")]
    pub hypothesis: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity: micro(),
            fd: fd_tolerance(),
            boundary: micro(),
            pohozaev: pohozaev(),
            variation: pohozaev(),
            duality: micro(),
            reference: micro(),
            spectral: pohozaev(),
            oracle: pohozaev(),
            symmetry: symmetry(),
            kernel: micro(),
            hypothesis: micro(),
        }
    }
}

fn zero_density() -> FieldSpec {
    FieldSpec::kind("zero")
}
fn analytic() -> String {
    "analytic".into()
}
fn two() -> usize {
    2
}
fn six() -> usize {
    6
}
fn ten() -> usize {
    10
}
fn twenty_four() -> usize {
    24
}
fn amplitude() -> f64 {
    0.3
}
fn micro() -> f64 {
    1e-6
}
fn fd_tolerance() -> f64 {
    1e-4
}
fn pohozaev() -> f64 {
    1e-5
}
fn symmetry() -> f64 {
    1e-10
}

/// Registry entries that accept a bare name in place of a table.
trait Named {
    fn from_name(name: &str) -> Self;
}

impl Named for ModelSpec {
    fn from_name(name: &str) -> Self {
        ModelSpec::named(name)
    }
}

impl Named for FieldSpec {
    fn from_name(name: &str) -> Self {
        FieldSpec::kind(name)
    }
}

struct NameOrTable<T>(PhantomData<T>);

impl<'de, T: Named + Deserialize<'de>> Visitor<'de> for NameOrTable<T> {
    type Value = T;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a name or a table")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<T, E> {
        Ok(T::from_name(v))
    }

    fn visit_map<M: MapAccess<'de>>(self, map: M) -> Result<T, M::Error> {
        T::deserialize(de::value::MapAccessDeserializer::new(map))
    }
}

fn name_or_table<'de, D: Deserializer<'de>, T: Named + Deserialize<'de>>(d: D) -> Result<T, D::Error> {
    d.deserialize_any(NameOrTable(PhantomData))
}

fn optional_name_or_table<'de, D: Deserializer<'de>, T: Named + Deserialize<'de>>(d: D) -> Result<Option<T>, D::Error> {
    name_or_table(d).map(Some)
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let s: Scenario = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Identity ids to run, in catalog order.
    pub fn identity_ids(&self) -> Vec<&'static str> {
        let all = self.checks.identities.iter().any(|i| i == "all");
        IDENTITY_IDS
            .iter()
            .copied()
            .filter(|id| all || self.checks.identities.iter().any(|i| i == id))
            .collect()
    }

    /// Boundary checks to run, in catalog order.
    pub fn boundary_checks(&self) -> Vec<&'static str> {
        BOUNDARY_CHECKS
            .iter()
            .copied()
            .filter(|id| self.checks.boundary.iter().any(|i| i == id))
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !MODEL_NAMES.contains(&self.model.name.as_str()) {
            return Err(unknown("model", &self.model.name, &MODEL_NAMES));
        }
        if !DENSITY_KINDS.contains(&self.density.kind.as_str()) {
            return Err(unknown("density", &self.density.kind, &DENSITY_KINDS));
        }
        if let Some(p) = &self.potential {
            if !DENSITY_KINDS.contains(&p.kind.as_str()) {
                return Err(unknown("potential", &p.kind, &DENSITY_KINDS));
            }
        }
        let mut ids: Vec<&str> = IDENTITY_IDS.to_vec();
        ids.push("all");
        for id in &self.checks.identities {
            if !ids.contains(&id.as_str()) {
                return Err(unknown("identity", id, &ids));
            }
        }
        for id in &self.checks.boundary {
            if !BOUNDARY_CHECKS.contains(&id.as_str()) {
                return Err(unknown("boundary check", id, &BOUNDARY_CHECKS));
            }
        }
        if !DERIVATIVE_MODES.contains(&self.checks.derivatives.as_str()) {
            return Err(unknown("derivatives", &self.checks.derivatives, &DERIVATIVE_MODES));
        }
        if self.potential.is_none() {
            let needs = self.identity_ids().into_iter().find(|id| needs_potential(id)).or_else(|| {
                self.boundary_checks()
                    .into_iter()
                    .find(|id| matches!(*id, "surface-gravity" | "boundary-area" | "pohozaev-schoen" | "area-estimate"))
            });
            if let Some(id) = needs {
                return Err(ConfigError::Invalid(format!("check '{id}' needs a 'potential'")));
            }
            if self.checks.adjoint_kernel {
                return Err(ConfigError::Invalid("'adjoint_kernel' needs a 'potential'".into()));
            }
            if self.checks.reference.as_ref().is_some_and(|r| r.sigma.is_some()) {
                return Err(ConfigError::Invalid("reference 'sigma' needs a 'potential'".into()));
            }
        }
        if let Some(solver) = &self.solver {
            if !BASIS_KINDS.contains(&solver.basis.as_str()) {
                return Err(unknown("basis", &solver.basis, &BASIS_KINDS));
            }
            if let Some(h) = solver.probe.as_ref().and_then(|p| p.hypothesis.as_ref()) {
                if !PROBE_HYPOTHESES.contains(&h.as_str()) {
                    return Err(unknown("probe hypothesis", h, &PROBE_HYPOTHESES));
                }
            }
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("identity", t.identity),
            ("fd", t.fd),
            ("boundary", t.boundary),
            ("pohozaev", t.pohozaev),
            ("variation", t.variation),
            ("duality", t.duality),
            ("reference", t.reference),
            ("spectral", t.spectral),
            ("oracle", t.oracle),
            ("symmetry", t.symmetry),
            ("kernel", t.kernel),
            ("hypothesis", t.hypothesis),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::Invalid(format!("tolerance '{name}' must be positive, got {v}")));
            }
        }
        if self.grid.nodes == 0 || self.grid.quadrature == 0 || self.grid.boundary == 0 {
            return Err(ConfigError::Invalid("grid node counts must be positive".into()));
        }
        Ok(())
    }
}

fn unknown(kind: &str, key: &str, valid: &[&str]) -> ConfigError {
    ConfigError::Invalid(format!("unknown {kind} '{key}'; valid values: {}", valid.join(", ")))
}
