use std::fmt::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::controllers::PolicyClass;
use crate::cv::{per_class_table, CvReport};
use crate::diagnostics::RegimeDiagnostics;
use crate::synth::{BernsteinSweep, PhaseSweep, SweepKind};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub dataset: String,
    pub fallback: String,
    pub diagnostics: RegimeDiagnostics,
}

/// Every JSON report carries a `kind` tag so `report` can re-render it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StoredReport {
    Diagnose(DiagnoseReport),
    Cv(CvReport),
    Bernstein(BernsteinSweep),
    Phase(PhaseSweep),
}

impl StoredReport {
    pub fn render(&self) -> String {
        match self {
            StoredReport::Diagnose(d) => render_diagnose(d),
            StoredReport::Cv(r) => render_cv(r),
            StoredReport::Bernstein(s) => bernstein_csv(s),
            StoredReport::Phase(s) => phase_csv(s),
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Schema { path: path.into(), message: e.to_string() })
}

pub fn render_diagnose(report: &DiagnoseReport) -> String {
    let d = &report.diagnostics;
    let v = &d.viability;
    let n = v.n as f64;
    let n_min = v.n_min.map_or_else(|| "—".to_owned(), |m| m.to_string());
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<20} {:>6} {:>7} {:>8} {:>8} {:>7} {:>8} {:>8}  predicted",
        "dataset", "n", "α_emp", "β", "nβ²", "n_min", "C_Π1", "C_Π2"
    );
    let _ = writeln!(
        s,
        "{:<20} {:>6} {:>7.3} {:>8.3} {:>8.2} {:>7} {:>8.4} {:>8.4}  {}",
        report.dataset,
        v.n,
        v.alpha_emp,
        v.beta,
        n * v.beta * v.beta,
        n_min,
        d.c_pi1,
        d.c_pi2,
        d.predicted_class
    );
    if d.pi1_k.is_none() {
        let _ = writeln!(s, "note: no candidate partition, C_Π1 reported as 0");
    }
    if d.selective.is_none() {
        let _ = writeln!(s, "note: direct-vs-{} subproblem is degenerate, C_Π2 reported as 0", report.fallback);
    }
    let _ = writeln!(s, "rationale: {:?}{}", d.rationale, if d.pi3_eligible { " (prior channel available)" } else { "" });
    s
}

pub fn render_cv(report: &CvReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "n = {}, {}x{} folds, seeds {:?}, selection bound {:.4}",
        report.n, report.outer_folds, report.inner_folds, report.seeds, report.selection_bound
    );
    let _ = writeln!(s, "{:<28} {:<6} {:>10} {:>10} {:>8}", "family", "class", "mean", "sd", "picked");
    for (f, (_, picks)) in report.families.iter().zip(&report.pick_counts) {
        let fmt = |x: Option<f64>| x.map_or_else(|| "failed".to_owned(), |v| format!("{v:.4}"));
        let _ = writeln!(s, "{:<28} {:<6} {:>10} {:>10} {:>8}", f.name, f.class.as_str(), fmt(f.mean), fmt(f.sd), picks);
    }
    s.push('\n');
    s.push_str(&per_class_table(report).render());
    s
}

pub fn bernstein_csv(sweep: &BernsteinSweep) -> String {
    let mut s = String::from("n,beta,m,n_min,rate\n");
    for c in &sweep.cells {
        let _ = writeln!(s, "{},{},{},{},{}", c.n, c.beta, c.m, c.n_min, c.rate);
    }
    s
}

pub fn phase_csv(sweep: &PhaseSweep) -> String {
    let [lo, hi] = sweep.spec.kind.classes();
    let mut s = format!("n,{},loss_{},loss_{},winner,margin\n", sweep.spec.kind.knob_name(), lo.as_str(), hi.as_str());
    for c in &sweep.cells {
        let _ = writeln!(s, "{},{},{},{},{},{}", c.n, c.knob, c.losses[0], c.losses[1], c.winner.as_str(), c.margin);
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernsteinBetaSummary {
    pub beta: f64,
    pub n_min: u64,
    /// Lowest rate over grid sizes at or above `n_min`.
    pub min_rate_above: Option<f64>,
    /// Rate at the smallest grid size, when it lies below `n_min / 4`.
    pub rate_far_below: Option<f64>,
}

pub fn bernstein_summary(sweep: &BernsteinSweep) -> Vec<BernsteinBetaSummary> {
    sweep
        .spec
        .beta_grid
        .iter()
        .map(|&beta| {
            let cells: Vec<_> = sweep.cells.iter().filter(|c| c.beta == beta).collect();
            let n_min = cells.first().map_or(0, |c| c.n_min);
            let min_rate_above = cells
                .iter()
                .filter(|c| c.n as u64 >= n_min)
                .map(|c| c.rate)
                .fold(None, |a: Option<f64>, r| Some(a.map_or(r, |a| a.min(r))));
            let rate_far_below = cells
                .iter()
                .min_by_key(|c| c.n)
                .filter(|c| (c.n as f64) < n_min as f64 / 4.0)
                .map(|c| c.rate);
            BernsteinBetaSummary { beta, n_min, min_rate_above, rate_far_below }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub kind: SweepKind,
    pub coarse: PolicyClass,
    pub fine: PolicyClass,
    pub coarse_wins: usize,
    pub fine_wins: usize,
    /// Knob value at the largest n where the two losses cross, by linear
    /// interpolation between grid points.
    pub crossing_at_largest_n: Option<f64>,
}

pub fn phase_summary(sweep: &PhaseSweep) -> PhaseSummary {
    let [coarse, fine] = sweep.spec.kind.classes();
    let (coarse_wins, _) = sweep.wins(coarse, |_| true);
    let (fine_wins, _) = sweep.wins(fine, |_| true);
    let crossing_at_largest_n = sweep.spec.n_grid.iter().max().and_then(|&n| {
        let pts: Vec<(f64, f64)> =
            sweep.cells.iter().filter(|c| c.n == n).map(|c| (c.knob, c.losses[1] - c.losses[0])).collect();
        crossing(&pts)
    });
    PhaseSummary { kind: sweep.spec.kind, coarse, fine, coarse_wins, fine_wins, crossing_at_largest_n }
}

/// First sign change of `y` from positive to non-positive, interpolated.
pub fn crossing(points: &[(f64, f64)]) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        (y0 > 0.0 && y1 <= 0.0).then(|| x0 + (x1 - x0) * y0 / (y0 - y1))
    })
}
