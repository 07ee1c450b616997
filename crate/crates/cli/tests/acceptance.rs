//! Acceptance suite: one pass/fail line per criterion, nonzero exit if any fails.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use smms::identities::IDENTITY_IDS;
use smms::models::MODEL_NAMES;
use smms_cli::output::json;
use smms_cli::runner::CheckEntry;
use smms_cli::{run, Mode, RunReport, Scenario};

type Outcome = Result<String, String>;

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn load(name: &str) -> Result<Scenario, String> {
    Scenario::load(&scenario_dir().join(format!("{name}.toml"))).map_err(|e| format!("{name}: {e}"))
}

fn execute(name: &str) -> Result<RunReport, String> {
    run(&load(name)?, Mode::Run).map_err(|e| format!("{name}: {e}"))
}

fn check<'a>(r: &'a RunReport, id: &str) -> Result<&'a CheckEntry, String> {
    r.checks
        .iter()
        .find(|c| c.identity_id == id)
        .ok_or_else(|| format!("{}: no '{id}' check", r.scenario.scenario))
}

fn below(r: &RunReport, id: &str, bound: f64) -> Result<f64, String> {
    let c = check(r, id)?;
    if let Some(e) = &c.error {
        return Err(format!("{}/{id}: {e}", r.scenario.scenario));
    }
    if c.sup_residual < bound {
        Ok(c.sup_residual)
    } else {
        Err(format!("{}/{id}: {:.3e} ≥ {bound:e}", r.scenario.scenario, c.sup_residual))
    }
}

fn diag(c: &CheckEntry, key: &str) -> Result<f64, String> {
    c.diagnostics.get(key).copied().ok_or_else(|| format!("{}: no diagnostic '{key}'", c.identity_id))
}

fn cookbook() -> Result<Vec<Scenario>, String> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(scenario_dir())
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    paths.iter().map(|p| Scenario::load(p).map_err(|e| e.to_string())).collect()
}

fn gaussian() -> Outcome {
    let mut parts = Vec::new();
    for (name, n) in [("gaussian-example", 2), ("gaussian-example-3d", 3)] {
        let s = load(name)?;
        if s.model.half_width.is_some() || s.model.dim != Some(n) {
            return Err(format!("{name}: expected the default L = 6 chart in dimension {n}"));
        }
        let r = run(&s, Mode::Run).map_err(|e| e.to_string())?;
        let adj = below(&r, "adjoint-kernel", 1e-8)?;
        let dim = r.solver.as_ref().and_then(|s| s.kernel_dim).ok_or("no kernel search")?;
        if dim != n {
            return Err(format!("{name}: kernel dimension {dim}, expected {n}"));
        }
        let angle = below(&r, "kernel-reference", 1e-6)?;
        parts.push(format!("n={n}: adjoint {adj:.1e}, kernel dim {dim}, angle {angle:.1e}"));
    }
    Ok(parts.join("; "))
}

fn weighted_sphere() -> Outcome {
    let r = execute("weighted-sphere-example")?;
    let adj = below(&r, "adjoint-kernel", 1e-6)?;
    let sigma = below(&r, "sigma-reference", 1e-6)?;
    let ric = below(&r, "ricci-f-reference", 1e-6)?;
    Ok(format!("adjoint {adj:.1e}, σ = n − f error {sigma:.1e}, Ric_f = (n−1−f)g error {ric:.1e}"))
}

fn variations() -> Outcome {
    let mut samples = 0;
    let mut worst = 0.0f64;
    let mut models = BTreeSet::new();
    for name in ["sphere-duality", "stereo-sphere", "euclidean", "diag-family"] {
        let r = execute(name)?;
        let entries: Vec<&CheckEntry> = r.checks.iter().filter(|c| c.identity_id.starts_with("variation-")).collect();
        if entries.len() != 4 {
            return Err(format!("{name}: {} variation checks, expected 4", entries.len()));
        }
        for c in &entries {
            worst = worst.max(below(&r, &c.identity_id, 1e-5)?);
        }
        samples += entries[0].grid_size;
        models.insert(r.scenario.model.name.clone());
    }
    if samples < 100 {
        return Err(format!("only {samples} seeded triples"));
    }
    Ok(format!("{samples} triples on {} models, worst relative gap {worst:.1e}", models.len()))
}

fn duality() -> Outcome {
    let r = execute("sphere-duality")?;
    let c = check(&r, "adjoint-duality")?;
    let pairs = diag(c, "pairs")?;
    if pairs < 20.0 {
        return Err(format!("{pairs} pairs"));
    }
    let gap = below(&r, "adjoint-duality", 1e-6)?;
    Ok(format!("{pairs} pairs on S², worst gap {gap:.1e}"))
}

fn identity_suite() -> Outcome {
    let book = cookbook()?;
    let mut analytic_seen = BTreeSet::new();
    let mut fd_seen = BTreeSet::new();
    let mut worst_order = f64::INFINITY;
    for s in &book {
        let ids = s.identity_ids();
        if ids.is_empty() {
            continue;
        }
        let fd = s.checks.derivatives == "fd";
        let r = run(s, Mode::Verify).map_err(|e| e.to_string())?;
        for id in ids {
            let c = check(&r, id)?;
            let budget = match (fd, id) {
                (false, _) => 1e-6,
                // Fourth metric derivatives; see the round-sphere-fd scenario.
                (true, "thm3-laplacian") => 1e-3,
                (true, _) => 1e-4,
            };
            if !c.pass || c.tolerance > budget {
                return Err(format!("{}/{id}: sup {:.3e}, tolerance {:e}", s.scenario, c.sup_residual, c.tolerance));
            }
            if fd {
                let order = c
                    .convergence_order
                    .ok_or_else(|| format!("{}/{id}: no measured order", s.scenario))?;
                if order < 1.5 {
                    return Err(format!("{}/{id}: order {order:.2}", s.scenario));
                }
                worst_order = worst_order.min(order);
                fd_seen.insert(id);
            } else {
                analytic_seen.insert(id);
            }
        }
    }
    for id in IDENTITY_IDS {
        if !analytic_seen.contains(id) || !fd_seen.contains(id) {
            return Err(format!("{id} lacks an analytic or finite-difference scenario"));
        }
    }
    Ok(format!("12/12 analytic and 12/12 finite-difference, lowest order {worst_order:.2}"))
}

fn boundary_area() -> Outcome {
    let r = execute("hemisphere-area")?;
    let gap = below(&r, "boundary-area", 1e-6)?;
    let g = check(&r, "surface-gravity")?;
    let mut kappas = Vec::new();
    for (k, v) in &g.diagnostics {
        if let Some(component) = k.strip_prefix("kappa.") {
            let variation = diag(g, &format!("variation.{component}"))?;
            if (v - 1.0).abs() > 1e-8 || variation >= 1e-8 {
                return Err(format!("{component}: κ = {v}, variation {variation:.1e}"));
            }
            kappas.push(*v);
        }
    }
    if kappas.is_empty() {
        return Err("no boundary components".into());
    }
    Ok(format!("relative gap {gap:.1e}, κ = {:.12} on {} component(s)", kappas[0], kappas.len()))
}

fn pohozaev() -> Outcome {
    let r = execute("hemisphere-area")?;
    let fields = diag(check(&r, "weighted-divergence")?, "fields")?;
    if fields < 10.0 {
        return Err(format!("{fields} vector fields"));
    }
    let div = below(&r, "weighted-divergence", 1e-6)?;
    let ps = below(&r, "pohozaev-schoen", 1e-5)?;
    Ok(format!("T = g over {fields} fields {div:.1e}; T = Ric_f, X = ∇u {ps:.1e}"))
}

fn spectral() -> Outcome {
    let circle = execute("circle-spectrum")?;
    let modes = diag(check(&circle, "spectrum-reference")?, "modes")?;
    if modes < 11.0 {
        return Err(format!("only {modes} circle modes compared"));
    }
    let k2 = below(&circle, "spectrum-reference", 1e-10)?;
    let interval = execute("interval-gaussian-spectrum")?;
    let c = check(&interval, "spectrum-oracle")?;
    if diag(c, "cells")? < 2048.0 || diag(c, "modes")? < 5.0 {
        return Err("interval oracle below N = 2048 or fewer than 5 modes".into());
    }
    let oracle = below(&interval, "spectrum-oracle", 1e-6)?;
    let mut sym = 0.0f64;
    for r in [&circle, &interval] {
        let s = r.solver.as_ref().and_then(|s| s.symmetry_residual).ok_or("no symmetry residual")?;
        if s >= 1e-10 {
            return Err(format!("{}: symmetry residual {s:.1e}", r.scenario.scenario));
        }
        sym = sym.max(s);
    }
    Ok(format!("circle k ≤ 5 {k2:.1e}; interval vs N=2048 oracle {oracle:.1e}; symmetry {sym:.1e}"))
}

fn probe() -> Outcome {
    let r = execute("interval-probe")?;
    let p = r.solver.as_ref().and_then(|s| s.probe.as_ref()).ok_or("no probe report")?;
    let ladder: Vec<usize> = p.levels.iter().map(|l| l.resolution).collect();
    if ladder != [32, 64, 128] {
        return Err(format!("ladder {ladder:?}"));
    }
    let floor = p.floor.ok_or("no frozen floor")?;
    let min = p.levels.iter().map(|l| l.min_singular_value).fold(f64::INFINITY, f64::min);
    if !(p.pass && p.bounded_below && min >= floor) {
        return Err(format!("min singular value {min} against floor {floor}"));
    }
    let h = execute("hemisphere-static-probe")?;
    let hp = h.solver.as_ref().and_then(|s| s.probe.as_ref()).ok_or("no control probe")?;
    let residual = below(&h, "nonexistence-probe", 1e-6)?;
    if !hp.kernel_found {
        return Err("control kernel not found".into());
    }
    Ok(format!("interval min σ {min:.5} ≥ {floor} on {ladder:?}; hemisphere control residual {residual:.1e}"))
}

fn interface() -> Outcome {
    for name in ["gaussian-example", "hemisphere-area", "sphere-duality"] {
        let s = load(name)?;
        let a = json(&run(&s, Mode::Run).map_err(|e| e.to_string())?);
        let b = json(&run(&s, Mode::Run).map_err(|e| e.to_string())?);
        if a != b {
            return Err(format!("{name}: JSON differs between runs"));
        }
    }
    let dir = std::env::temp_dir().join(format!("smms-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let fail = dir.join("fail.toml");
    let bad = dir.join("bad.toml");
    std::fs::write(
        &fail,
        "scenario = \"fail\"\nmodel = \"circle\"\n[solver]\nbasis = \"fourier-circle\"\nsize = 4\neigen = 3\noracle_cells = 64\n[tolerances]\noracle = 1e-12\n",
    )
    .map_err(|e| e.to_string())?;
    std::fs::write(&bad, "scenario = \"bad\"\nmodel = \"circle\"\n[checks]\nidentities = [\"bianchi\"]\n").map_err(|e| e.to_string())?;
    let cases = [(scenario_dir().join("interval-probe.toml"), 0), (fail, 1), (bad, 2)];
    for (path, want) in &cases {
        let code = Command::new(env!("CARGO_BIN_EXE_smms"))
            .arg("run")
            .arg(path)
            .output()
            .map_err(|e| e.to_string())?
            .status
            .code();
        if code != Some(*want) {
            return Err(format!("{}: exit {code:?}, expected {want}", path.display()));
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    let book = cookbook()?;
    let ids: BTreeSet<&str> = book.iter().flat_map(|s| s.identity_ids()).collect();
    let models: BTreeSet<&str> = book.iter().map(|s| s.model.name.as_str()).collect();
    if let Some(id) = IDENTITY_IDS.iter().find(|id| !ids.contains(*id)) {
        return Err(format!("{id} not in any scenario"));
    }
    if let Some(m) = MODEL_NAMES.iter().find(|m| !models.contains(*m)) {
        return Err(format!("{m} not in any scenario"));
    }
    Ok(format!("byte-identical JSON, exit codes 0/1/2, {} scenarios cover 12 ids and 8 models", book.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("gaussian example", gaussian),
        ("weighted sphere example", weighted_sphere),
        ("variation oracle", variations),
        ("adjoint duality", duality),
        ("identity suite", identity_suite),
        ("boundary-area identity", boundary_area),
        ("pohozaev-schoen", pohozaev),
        ("spectral oracle", spectral),
        ("nonexistence probe", probe),
        ("determinism and interface", interface),
    ];
    let start = Instant::now();
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (status, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {status} {name}: {detail} ({:.1} s)", i + 1, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {}/10 passed in {:.1} s", 10 - failures, start.elapsed().as_secs_f64());
    if failures > 0 {
        std::process::exit(1);
    }
}
