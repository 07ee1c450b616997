//! Execution of a scenario into a [`RunReport`].

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use smms::boundary::{self, TensorChoice, VectorChoice};
use smms::error::Error;
use smms::field::{FdConfig, ScalarField, SymTensorField};
use smms::identities::{extract_sigma, run_check, CheckInputs, Derivatives};
use smms::linearization::{adjoint_duality_check, closed_form, numeric_variation, relative_discrepancy, MetricPerturbation, Quantity};
use smms::manifold::MetricModel;
use smms::models::build_model;
use smms::quadrature::{boundary_grid, sample_points, volume_grid, BoundaryGrid, QuadratureGrid};
use smms::random::{random_bump_tensor, random_point, random_scalar, random_tensor, rng};
use smms::report::{ResidualReport, TwoSidedReport};
use smms::spectral::{
    fd_oracle_spectrum, kernel_search, nonexistence_probe, principal_angles, solve_drift_eigen, BasisSpec,
    Discretization, KernelSearch, ProbeOptions, ProbeReport,
};
use smms::weighted::{build_field, tensor_norm, WeightedSpace};

use crate::scenario::Scenario;
use crate::ConfigError;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Random streams, one per consumer, so adding checks never shifts the draws
/// of another.
const STREAM_TENSOR: u64 = 1;
const STREAM_DIVERGENCE: u64 = 1_000;
const STREAM_VARIATION: u64 = 2_000;
const STREAM_DUALITY: u64 = 3_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Verify,
    Solve,
    Probe,
    Run,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Verify => "verify",
            Mode::Solve => "solve",
            Mode::Probe => "probe",
            Mode::Run => "run",
        }
    }

    fn verifies(self) -> bool {
        matches!(self, Mode::Verify | Mode::Run)
    }

    fn solves(self) -> bool {
        matches!(self, Mode::Solve | Mode::Run)
    }

    fn probes(self) -> bool {
        matches!(self, Mode::Probe | Mode::Run)
    }
}

/// Command-line overrides applied on top of the scenario file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    /// Sample nodes per axis for identities, basis size for the solver.
    pub resolution: Option<usize>,
    /// Identity tolerance (analytic and finite-difference paths).
    pub tolerance: Option<f64>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, s: &mut Scenario) -> Result<(), ConfigError> {
        if let Some(n) = self.resolution {
            s.grid.nodes = n;
            if let Some(solver) = s.solver.as_mut() {
                solver.size = n;
            }
        }
        if let Some(t) = self.tolerance {
            s.tolerances.identity = t;
            s.tolerances.fd = t;
        }
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        s.validate()
    }
}

/// One row of the report: an identity, a comparison or a solver check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckEntry {
    pub identity_id: String,
    pub sup_residual: f64,
    pub mean_residual: f64,
    pub convergence_order: Option<f64>,
    pub masked_fraction: f64,
    pub pass: bool,
    pub tolerance: f64,
    pub grid_size: usize,
    pub hypotheses: BTreeMap<String, f64>,
    pub diagnostics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub error: Option<String>,
}

impl CheckEntry {
    fn new(id: &str, samples: &[f64], tolerance: f64) -> Self {
        let r = ResidualReport::from_samples(id, &samples.iter().map(|v| Some(*v)).collect::<Vec<_>>(), tolerance);
        Self::from(r)
    }

    fn failed(id: &str, tolerance: f64, err: impl ToString) -> Self {
        Self::from(ResidualReport::failed(id, tolerance, err.to_string()))
    }

    fn diag(mut self, name: &str, v: f64) -> Self {
        self.diagnostics.insert(name.into(), v);
        self
    }
}

impl From<ResidualReport> for CheckEntry {
    fn from(r: ResidualReport) -> Self {
        Self {
            identity_id: r.identity_id,
            sup_residual: r.sup_residual,
            mean_residual: r.mean_residual,
            convergence_order: r.convergence_order,
            masked_fraction: r.masked_fraction,
            pass: r.pass,
            tolerance: r.tolerance,
            grid_size: r.grid_size,
            hypotheses: r.hypotheses,
            diagnostics: r.diagnostics,
            notes: r.notes,
            error: r.error,
        }
    }
}

impl From<TwoSidedReport> for CheckEntry {
    fn from(r: TwoSidedReport) -> Self {
        let mut diagnostics = r.diagnostics;
        diagnostics.insert("lhs".into(), r.lhs);
        diagnostics.insert("rhs".into(), r.rhs);
        diagnostics.insert("gap".into(), r.gap);
        Self {
            identity_id: r.identity_id,
            sup_residual: r.relative_gap,
            mean_residual: r.relative_gap,
            convergence_order: None,
            masked_fraction: 0.0,
            pass: r.pass,
            tolerance: r.tolerance,
            grid_size: 1,
            hypotheses: BTreeMap::new(),
            diagnostics,
            notes: r.notes,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateSummary {
    pub singular_value: f64,
    pub sup_residual: f64,
    pub accepted: bool,
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolverReport {
    pub basis: Option<String>,
    pub eigenvalues: Option<Vec<f64>>,
    pub kernel_dim: Option<usize>,
    pub min_singular_value: Option<f64>,
    pub singular_values: Option<Vec<f64>>,
    pub symmetry_residual: Option<f64>,
    pub weighted_orthonormality_residual: Option<f64>,
    pub gram_condition: Option<f64>,
    pub oracle_eigenvalues: Option<Vec<f64>>,
    pub labels: Option<Vec<String>>,
    pub kernel_candidates: Option<Vec<CandidateSummary>>,
    pub probe: Option<ProbeReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub mode: String,
    pub scenario: Scenario,
    pub checks: Vec<CheckEntry>,
    pub solver: Option<SolverReport>,
    pub wall_ms: Option<u64>,
    pub pass: bool,
}

impl RunReport {
    /// 0 pass, 1 check failure, 3 a check could not be evaluated.
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else if self.checks.iter().any(|c| c.error.is_some()) {
            3
        } else {
            1
        }
    }
}

/// Built objects of a scenario.
struct Setup {
    model: MetricModel,
    ws: WeightedSpace,
    u: Option<ScalarField>,
}

fn setup(s: &Scenario) -> Result<Setup, ConfigError> {
    let model = build_model(&s.model)?;
    let density = build_field(&s.density, &model)?;
    let u = s.potential.as_ref().map(|p| build_field(p, &model)).transpose()?;
    let ws = WeightedSpace::new(model.clone(), density)?;
    Ok(Setup { model, ws, u })
}

pub fn run(scenario: &Scenario, mode: Mode) -> Result<RunReport, ConfigError> {
    let st = setup(scenario)?;
    let mut checks = Vec::new();
    if mode.verifies() {
        identity_checks(scenario, &st, &mut checks);
        adjoint_kernel_check(scenario, &st, &mut checks);
        reference_checks(scenario, &st, &mut checks);
        boundary_checks(scenario, &st, &mut checks);
        variation_checks(scenario, &st, &mut checks);
        duality_checks(scenario, &st, &mut checks);
    }
    let mut solver = None;
    if let Some(spec) = &scenario.solver {
        let mut out = SolverReport {
            basis: Some(spec.basis.clone()),
            ..SolverReport::default()
        };
        let mut ran = false;
        if mode.solves() && (spec.eigen > 0 || spec.kernel) {
            ran = true;
            solve(scenario, &st, &mut out, &mut checks);
        }
        if mode.probes() && spec.probe.is_some() {
            ran = true;
            probe(scenario, &st, &mut out, &mut checks);
        }
        if ran {
            solver = Some(out);
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.into(),
        mode: mode.name().into(),
        scenario: scenario.clone(),
        checks,
        solver,
        wall_ms: None,
        pass,
    })
}

fn identity_checks(s: &Scenario, st: &Setup, out: &mut Vec<CheckEntry>) {
    let ids = s.identity_ids();
    if ids.is_empty() {
        return;
    }
    let points = match sample_points(&st.model, s.grid.nodes) {
        Ok(p) => p,
        Err(e) => {
            out.extend(ids.iter().map(|id| CheckEntry::failed(id, s.tolerances.identity, &e)));
            return;
        }
    };
    let mut inputs = CheckInputs::new(st.ws.clone()).with_params(s.checks.params.clone());
    if let Some(u) = &st.u {
        inputs = inputs.with_u(u.clone());
    }
    if let Some(degree) = s.checks.tensor_degree {
        inputs = inputs.with_tensor(random_tensor(&st.model, degree, &mut rng(s.seed, STREAM_TENSOR)));
    }
    let (derivatives, tolerance) = match s.checks.derivatives.as_str() {
        "fd" => {
            let d = match s.checks.fd_base {
                Some(base) => Derivatives::Fd {
                    fd: FdConfig::from_base(base),
                    coarse: FdConfig::from_base(base * 40.0),
                },
                None => Derivatives::fd_default(),
            };
            (d, s.tolerances.fd)
        }
        _ => (Derivatives::Analytic, s.tolerances.identity),
    };
    for id in ids {
        out.push(run_check(id, &inputs, &points, derivatives, tolerance).into());
    }
}

fn adjoint_kernel_check(s: &Scenario, st: &Setup, out: &mut Vec<CheckEntry>) {
    let (true, Some(u)) = (s.checks.adjoint_kernel, &st.u) else {
        return;
    };
    let id = "adjoint-kernel";
    let tol = s.tolerances.identity;
    let entry = sample_points(&st.model, s.grid.nodes)
        .and_then(|points| {
            let samples = points
                .iter()
                .map(|x| {
                    let wp = st.ws.at(x, 2)?;
                    Ok(Some(tensor_norm(&wp.geo, &wp.adjoint(&u.taylor(x, 2)))))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            Ok(ResidualReport::from_samples(id, &samples, tol).into())
        })
        .unwrap_or_else(|e| CheckEntry::failed(id, tol, e));
    out.push(entry);
}

fn reference_checks(s: &Scenario, st: &Setup, out: &mut Vec<CheckEntry>) {
    let Some(reference) = &s.checks.reference else {
        return;
    };
    let tol = s.tolerances.reference;
    let points = match sample_points(&st.model, s.grid.nodes) {
        Ok(p) => p,
        Err(e) => {
            out.push(CheckEntry::failed("reference", tol, e));
            return;
        }
    };
    if let (Some(spec), Some(u)) = (&reference.sigma, &st.u) {
        let threshold = s.checks.params.sigma_threshold.unwrap_or(smms::weighted::SigmaField::DEFAULT_THRESHOLD);
        let entry = build_field(spec, &st.model)
            .and_then(|expected| {
                let (sigma, _) = extract_sigma(&st.ws, u, &points, threshold, tol)?;
                let samples: Vec<Option<f64>> = sigma
                    .iter()
                    .zip(&points)
                    .map(|(s, p)| s.map(|v| (v - expected.value(p)).abs()))
                    .collect();
                Ok(ResidualReport::from_samples("sigma-reference", &samples, tol).into())
            })
            .unwrap_or_else(|e| CheckEntry::failed("sigma-reference", tol, e));
        out.push(entry);
    }
    if let Some(spec) = &reference.ricci_f_factor {
        let entry = build_field(spec, &st.model)
            .and_then(|phi| {
                let samples = points
                    .iter()
                    .map(|p| {
                        let ric = smms::weighted::bakry_emery_ricci(&st.ws, &st.model.point(p)?)?;
                        let g = st.model.metric_at(p);
                        let c = phi.value(p);
                        let n = g.len();
                        let gm = DMatrix::from_fn(n, n, |i, j| g[i][j]);
                        let ginv = gm.try_inverse().ok_or_else(|| Error::NotPositiveDefinite(vec![]))?;
                        let d = DMatrix::from_fn(n, n, |i, j| ric[i][j] - c * g[i][j]);
                        let raised = &ginv * &d * &ginv;
                        Ok(Some(raised.component_mul(&d).sum().max(0.0).sqrt()))
                    })
                    .collect::<Result<Vec<_>, Error>>()?;
                Ok(ResidualReport::from_samples("ricci-f-reference", &samples, tol).into())
            })
            .unwrap_or_else(|e| CheckEntry::failed("ricci-f-reference", tol, e));
        out.push(entry);
    }
}

fn grids(s: &Scenario, model: &MetricModel) -> Result<(QuadratureGrid, BoundaryGrid), Error> {
    Ok((volume_grid(model, s.grid.quadrature)?, boundary_grid(model, s.grid.boundary)?))
}

fn boundary_checks(s: &Scenario, st: &Setup, out: &mut Vec<CheckEntry>) {
    let ids = s.boundary_checks();
    if ids.is_empty() {
        return;
    }
    let t = &s.tolerances;
    let grids = grids(s, &st.model);
    for id in ids {
        let tol = if id == "pohozaev-schoen" { t.pohozaev } else { t.boundary };
        let entry = match &grids {
            Err(e) => CheckEntry::failed(id, tol, e),
            Ok((grid, bgrid)) => boundary_check(id, s, st, grid, bgrid, tol).unwrap_or_else(|e| CheckEntry::failed(id, tol, e)),
        };
        out.push(entry);
    }
}

fn boundary_check(
    id: &str,
    s: &Scenario,
    st: &Setup,
    grid: &QuadratureGrid,
    bgrid: &BoundaryGrid,
    tol: f64,
) -> Result<CheckEntry, Error> {
    let ws = &st.ws;
    let potential = || st.u.as_ref().ok_or_else(|| Error::InvalidParameter(format!("'{id}' needs a potential")));
    Ok(match id {
        "surface-gravity" => {
            let g = boundary::surface_gravity(ws, potential()?, bgrid, tol)?;
            let variations: Vec<f64> = g.iter().map(|c| c.variation).collect();
            let mut e = CheckEntry::new(id, &variations, tol);
            for c in &g {
                e = e
                    .diag(&format!("kappa.{}", c.component), c.kappa)
                    .diag(&format!("variation.{}", c.component), c.variation);
            }
            e
        }
        "boundary-area" => {
            let r = boundary::boundary_area_identity(ws, potential()?, grid, bgrid, tol)?;
            let gaps = [r.area_form.relative_gap, r.flux_form.relative_gap];
            let mut e = CheckEntry::new(id, &gaps, tol)
                .diag("area_lhs", r.area_form.lhs)
                .diag("area_rhs", r.area_form.rhs)
                .diag("flux_lhs", r.flux_form.lhs)
                .diag("flux_rhs", r.flux_form.rhs)
                .diag("opposite_sign_gap", r.opposite_sign_gap)
                .diag("kernel_residual", r.kernel_residual);
            for c in &r.surface_gravity {
                e = e.diag(&format!("kappa.{}", c.component), c.kappa);
            }
            e
        }
        "weighted-divergence" => {
            let mut gaps = Vec::new();
            for k in 0..s.checks.vector_fields {
                let phi = random_scalar(&st.model, 3, &mut rng(s.seed, STREAM_DIVERGENCE + k as u64));
                gaps.push(boundary::divergence_theorem(ws, &VectorChoice::Gradient(phi), grid, bgrid, tol)?.relative_gap);
            }
            CheckEntry::new(id, &gaps, tol).diag("fields", gaps.len() as f64)
        }
        "pohozaev-schoen" => {
            let x = VectorChoice::Gradient(potential()?.clone());
            boundary::pohozaev_schoen(ws, &TensorChoice::BakryEmeryRicci, &x, grid, bgrid, tol)?.into()
        }
        "gauss-reduction" => boundary::gauss_reduction_check(ws, bgrid, tol)?.into(),
        "area-estimate" => {
            let p = &s.checks.params;
            let r = boundary::thm1_estimate(ws, potential()?, p.c0, p.c1, grid, bgrid, s.tolerances.hypothesis)?;
            let mut e = CheckEntry::new(id, &[(r.lhs - r.rhs).max(0.0)], tol)
                .diag("lhs", r.lhs)
                .diag("rhs", r.rhs)
                .diag("slack", r.slack)
                .diag("c0", r.c0)
                .diag("c1", r.c1);
            e.hypotheses.insert("scalar_affine_in_f".into(), r.fit_residual);
            e.hypotheses.insert("normal_derivative_f".into(), r.normal_derivative_f);
            e.pass = r.strict && r.hypotheses_hold;
            e.notes = r.notes;
            e
        }
        other => return Err(Error::InvalidParameter(format!("unknown boundary check '{other}'"))),
    })
}

fn variation_checks(s: &Scenario, st: &Setup, out: &mut Vec<CheckEntry>) {
    let Some(spec) = &s.checks.linearization else {
        return;
    };
    let tol = s.tolerances.variation;
    let mut samples = vec![Vec::with_capacity(spec.samples); Quantity::ALL.len()];
    let mut failure = None;
    for k in 0..spec.samples {
        let mut r = rng(s.seed, STREAM_VARIATION + k as u64);
        let h = random_tensor(&st.model, spec.degree, &mut r);
        let h = SymTensorField::linear_combination(vec![(spec.amplitude, h)]);
        let x = random_point(&st.model, &mut r);
        let pert = MetricPerturbation::new(h);
        let row = pert.preflight(&st.ws, &[x.clone()]).and_then(|_| {
            Quantity::ALL
                .iter()
                .map(|q| Ok(relative_discrepancy(closed_form(&st.ws, &pert, *q, &x)?, numeric_variation(&st.ws, &pert, *q, &x)?)))
                .collect::<Result<Vec<f64>, Error>>()
        });
        match row {
            Ok(v) => v.into_iter().enumerate().for_each(|(i, d)| samples[i].push(d)),
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    for (q, v) in Quantity::ALL.iter().zip(&samples) {
        let id = format!("variation-{}", q.name());
        out.push(match &failure {
            Some(e) => CheckEntry::failed(&id, tol, e),
            None => CheckEntry::new(&id, v, tol),
        });
    }
}

fn duality_checks(s: &Scenario, st: &Setup, out: &mut Vec<CheckEntry>) {
    let Some(spec) = &s.checks.duality else {
        return;
    };
    let tol = s.tolerances.duality;
    let id = "adjoint-duality";
    let entry = volume_grid(&st.model, s.grid.quadrature)
        .and_then(|grid| {
            let half_width = match &st.model.domain {
                smms::manifold::Domain::Box { hi, .. } => hi[0],
                _ => 0.0,
            };
            let gaps = (0..spec.pairs)
                .map(|k| {
                    let mut r = rng(s.seed, STREAM_DUALITY + k as u64);
                    let u = random_scalar(&st.model, spec.degree, &mut r);
                    let pert = if st.model.closed {
                        MetricPerturbation::new(random_tensor(&st.model, spec.degree, &mut r))
                    } else {
                        MetricPerturbation::new(random_bump_tensor(&st.model, spec.degree, half_width, &mut r)).compact()
                    };
                    Ok(adjoint_duality_check(&st.ws, &u, &pert, &grid, tol)?.relative_gap)
                })
                .collect::<Result<Vec<f64>, Error>>()?;
            Ok(CheckEntry::new(id, &gaps, tol).diag("pairs", gaps.len() as f64))
        })
        .unwrap_or_else(|e| CheckEntry::failed(id, tol, e));
    out.push(entry);
}

fn basis_spec(s: &Scenario) -> BasisSpec {
    let spec = s.solver.as_ref().expect("solver section");
    BasisSpec {
        kind: spec.basis.clone(),
        size: spec.size,
        nodes: spec.nodes,
    }
}

fn solve(s: &Scenario, st: &Setup, out: &mut SolverReport, checks: &mut Vec<CheckEntry>) {
    let spec = s.solver.as_ref().expect("solver section");
    let t = &s.tolerances;
    let disc = match Discretization::build(&basis_spec(s), &st.ws) {
        Ok(d) => d,
        Err(e) => {
            checks.push(CheckEntry::failed("discretization", t.spectral, e));
            return;
        }
    };
    if let Discretization::Spectral { basis, .. } = &disc {
        out.labels = Some(basis.labels.clone());
    }
    if spec.eigen > 0 {
        match solve_drift_eigen(&st.ws, &disc, spec.eigen) {
            Err(e) => checks.push(CheckEntry::failed("weighted-symmetry", t.symmetry, e)),
            Ok(r) => {
                out.eigenvalues = Some(r.eigenvalues.clone());
                out.symmetry_residual = Some(r.symmetry_residual);
                out.weighted_orthonormality_residual = Some(r.weighted_orthonormality_residual);
                out.gram_condition = Some(r.gram_condition);
                checks.push(
                    CheckEntry::new(
                        "weighted-symmetry",
                        &[r.symmetry_residual, r.weighted_orthonormality_residual],
                        t.symmetry,
                    )
                    .diag("gram_condition", r.gram_condition),
                );
                if let Some(expected) = &spec.reference_eigenvalues {
                    checks.push(compare_spectra("spectrum-reference", &r.eigenvalues, expected, t.spectral));
                }
                if let Some(cells) = spec.oracle_cells {
                    checks.push(match fd_oracle_spectrum(&st.ws, cells, spec.eigen) {
                        Ok(o) => {
                            let e = compare_spectra("spectrum-oracle", &r.eigenvalues, &o, t.oracle);
                            out.oracle_eigenvalues = Some(o);
                            e.diag("cells", cells as f64)
                        }
                        Err(e) => CheckEntry::failed("spectrum-oracle", t.oracle, e),
                    });
                }
            }
        }
    }
    if spec.kernel {
        match kernel_search(&st.ws, &disc, None, t.kernel) {
            Err(e) => checks.push(CheckEntry::failed("kernel-search", t.kernel, e)),
            Ok(ks) => {
                out.kernel_dim = Some(ks.kernel_dim());
                out.min_singular_value = Some(ks.min_singular_value);
                out.singular_values = Some(ks.singular_values.clone());
                out.kernel_candidates = Some(
                    ks.candidates
                        .iter()
                        .map(|c| CandidateSummary {
                            singular_value: c.singular_value,
                            sup_residual: c.sup_residual,
                            accepted: c.accepted,
                            coefficients: c.coefficients.clone(),
                        })
                        .collect(),
                );
                if let Some(dim) = spec.expected_kernel_dim {
                    let found = ks.kernel_dim();
                    let mut e = CheckEntry::new("kernel-dimension", &[found.abs_diff(dim) as f64], 0.5)
                        .diag("expected", dim as f64)
                        .diag("found", found as f64)
                        .diag("min_singular_value", ks.min_singular_value);
                    if let Some(best) = ks.candidates.iter().filter(|c| c.accepted).map(|c| c.sup_residual).reduce(f64::max) {
                        e = e.diag("worst_candidate_residual", best);
                    }
                    checks.push(e);
                }
                if let Some(labels) = &spec.reference_kernel {
                    checks.push(
                        reference_kernel(&ks, out.labels.as_deref().unwrap_or(&[]), labels, t.kernel)
                            .unwrap_or_else(|e| CheckEntry::failed("kernel-reference", t.kernel, e)),
                    );
                }
            }
        }
    }
}

fn compare_spectra(id: &str, got: &[f64], expected: &[f64], tol: f64) -> CheckEntry {
    let n = got.len().min(expected.len());
    let diffs: Vec<f64> = got[..n].iter().zip(&expected[..n]).map(|(a, b)| (a - b).abs()).collect();
    let mut e = CheckEntry::new(id, &diffs, tol).diag("modes", n as f64);
    if n < expected.len() {
        e.pass = false;
        e.notes.push(format!("only {n} of {} modes computed", expected.len()));
    }
    e
}

/// Largest principal angle between the accepted kernel and the span of the
/// named basis functions.
fn reference_kernel(ks: &KernelSearch, labels: &[String], wanted: &[String], tol: f64) -> Result<CheckEntry, Error> {
    let vectors = wanted
        .iter()
        .map(|w| {
            let i = labels
                .iter()
                .position(|l| l == w)
                .ok_or_else(|| Error::InvalidParameter(format!("no basis function labelled '{w}'")))?;
            let mut v = vec![0.0; labels.len()];
            v[i] = 1.0;
            Ok(v)
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let kernel: Vec<Vec<f64>> = ks.candidates.iter().filter(|c| c.accepted).map(|c| c.coefficients.clone()).collect();
    if kernel.len() != vectors.len() {
        let mut e = CheckEntry::new("kernel-reference", &[f64::INFINITY], tol);
        e.notes.push(format!("kernel dimension {} differs from reference dimension {}", kernel.len(), vectors.len()));
        return Ok(e);
    }
    let n = ks.gram.len();
    let gram = DMatrix::from_fn(n, n, |i, j| ks.gram[i][j]);
    let angles = principal_angles(&gram, &kernel, &vectors)?;
    Ok(CheckEntry::new("kernel-reference", &angles, tol))
}

fn probe(s: &Scenario, st: &Setup, out: &mut SolverReport, checks: &mut Vec<CheckEntry>) {
    let spec = s.solver.as_ref().expect("solver section");
    let p = spec.probe.as_ref().expect("probe section");
    let t = &s.tolerances;
    let opts = ProbeOptions {
        kind: spec.basis.clone(),
        ladder: p.ladder.clone().unwrap_or_else(|| ProbeOptions::default_ladder(&spec.basis)),
        floor: p.floor,
        expect_kernel: p.expect_kernel,
        hypothesis: p.hypothesis.clone(),
        kernel_tolerance: t.kernel,
        hypothesis_tolerance: t.hypothesis,
    };
    let id = "nonexistence-probe";
    match nonexistence_probe(&st.ws, &s.scenario, &opts) {
        Err(e) => checks.push(CheckEntry::failed(id, t.kernel, e)),
        Ok(r) => {
            let min_sv = r.levels.iter().map(|l| l.min_singular_value).fold(f64::INFINITY, f64::min);
            let residual = if p.expect_kernel {
                r.levels.iter().filter_map(|l| l.kernel_residual).fold(f64::INFINITY, f64::min)
            } else {
                p.floor.map_or(0.0, |floor| (floor - min_sv).max(0.0))
            };
            let mut e = CheckEntry::new(id, &[residual], t.kernel).diag("min_singular_value", min_sv);
            for l in &r.levels {
                e = e.diag(&format!("level.{}", l.resolution), l.min_singular_value);
            }
            e.hypotheses = r.hypotheses.clone();
            e.pass = r.pass;
            e.notes = r.notes.clone();
            if out.min_singular_value.is_none() {
                out.min_singular_value = Some(min_sv);
            }
            out.probe = Some(r);
            checks.push(e);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(text: &str) -> Scenario {
        Scenario::parse(text).unwrap()
    }

    #[test]
    fn empty_scenario_passes_with_no_checks() {
        let r = run(&scenario("scenario = \"e\"\nmodel = \"circle\"\n"), Mode::Run).unwrap();
        assert!(r.pass && r.checks.is_empty() && r.solver.is_none());
        assert_eq!(r.exit_code(), 0);
    }

    #[test]
    fn identities_run_in_catalog_order() {
        let s = scenario(
            "scenario = \"o\"\nmodel = \"gaussian-chart\"\ndensity = \"gaussian\"\npotential = { kind = \"linear\", v = [1.0, 0.0] }\n[checks]\nidentities = [\"weighted-bochner\", \"weighted-bianchi\"]\n[grid]\nnodes = 3\n",
        );
        let r = run(&s, Mode::Verify).unwrap();
        let ids: Vec<&str> = r.checks.iter().map(|c| c.identity_id.as_str()).collect();
        assert_eq!(ids, ["weighted-bianchi", "weighted-bochner"]);
    }

    #[test]
    fn numeric_failures_map_to_exit_code_three() {
        let s = scenario(
            "scenario = \"b\"\nmodel = \"hemisphere\"\npotential = { kind = \"constant\", value = 1.0 }\n[checks]\nboundary = [\"surface-gravity\"]\n[grid]\nboundary = 8\n",
        );
        let r = run(&s, Mode::Verify).unwrap();
        assert!(r.checks[0].error.is_some());
        assert_eq!(r.exit_code(), 3);
    }
}
