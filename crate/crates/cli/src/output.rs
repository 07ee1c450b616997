//! JSON, CSV and plain-text renderings of a [`RunReport`].

use std::fmt::Write;

use crate::runner::RunReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

pub fn render(report: &RunReport, format: Format) -> String {
    match format {
        Format::Json => json(report),
        Format::Csv => csv(report),
        Format::Text => text(report),
    }
}

/// Pretty JSON. Non-finite floats serialize as `null`.
pub fn json(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub const CSV_HEADER: &str = "identity_id,sup_residual,mean_residual,pass";

pub fn csv(report: &RunReport) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for c in &report.checks {
        let _ = writeln!(s, "{},{:?},{:?},{}", c.identity_id, c.sup_residual, c.mean_residual, c.pass);
    }
    s
}

pub fn text(report: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario {} ({})", report.scenario.scenario, report.mode);
    for c in &report.checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        let _ = write!(s, "  {status} {:<28} sup {:.3e}  tol {:.1e}", c.identity_id, c.sup_residual, c.tolerance);
        if let Some(order) = c.convergence_order {
            let _ = write!(s, "  order {order:.2}");
        }
        if c.masked_fraction > 0.0 {
            let _ = write!(s, "  masked {:.1}%", 100.0 * c.masked_fraction);
        }
        if let Some(e) = &c.error {
            let _ = write!(s, "  error: {e}");
        }
        s.push('\n');
        for n in &c.notes {
            let _ = writeln!(s, "       {n}");
        }
    }
    if let Some(solver) = &report.solver {
        if let Some(ev) = &solver.eigenvalues {
            let _ = writeln!(s, "  eigenvalues {ev:.8?}");
        }
        if let Some(k) = solver.kernel_dim {
            let _ = writeln!(s, "  kernel dimension {k}");
        }
        if let Some(sv) = solver.min_singular_value {
            let _ = writeln!(s, "  min singular value {sv:.6e}");
        }
    }
    if let Some(ms) = report.wall_ms {
        let _ = writeln!(s, "  wall {ms} ms");
    }
    let _ = writeln!(s, "{}", if report.pass { "PASS" } else { "FAIL" });
    s
}
