use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::CvReport;
use crate::controllers::PolicyClass;

/// Margin under which two class losses count as tied.
pub const TIE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub class: PolicyClass,
    pub family: String,
    pub mean: f64,
    pub sd: f64,
    /// Difference to the best `Pi0` row, when the pool has one.
    pub delta_vs_pi0: Option<f64>,
    /// Lowest loss, coarsest class on ties.
    pub winner: bool,
    /// Within `TIE_EPS` of the lowest loss.
    pub tied_best: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassTable {
    pub rows: Vec<ClassRow>,
    pub auto_pick: Option<(f64, f64)>,
}

/// Best family per class (first in pool order on equal means).
pub fn per_class_table(report: &CvReport) -> ClassTable {
    let mut rows: Vec<ClassRow> = Vec::new();
    for class in PolicyClass::ALL {
        let best = report
            .families
            .iter()
            .filter(|f| f.class == class)
            .filter_map(|f| Some((f, f.mean?, f.sd?)))
            .fold(None, |acc: Option<(&super::FamilyResult, f64, f64)>, cur| match acc {
                Some(a) if a.1 <= cur.1 => Some(a),
                _ => Some(cur),
            });
        if let Some((f, mean, sd)) = best {
            rows.push(ClassRow { class, family: f.name.clone(), mean, sd, delta_vs_pi0: None, winner: false, tied_best: false });
        }
    }
    let pi0 = rows.iter().find(|r| r.class == PolicyClass::Pi0).map(|r| r.mean);
    let best = rows.iter().map(|r| r.mean).fold(f64::INFINITY, f64::min);
    let mut crowned = false;
    for r in &mut rows {
        r.delta_vs_pi0 = pi0.map(|p| r.mean - p);
        r.tied_best = r.mean - best < TIE_EPS;
        // Rows are in class order, so the first tied row is the coarsest.
        if r.tied_best && !crowned {
            r.winner = true;
            crowned = true;
        }
    }
    let auto_pick = report.auto_pick.mean.zip(report.auto_pick.sd);
    ClassTable { rows, auto_pick }
}

impl ClassTable {
    pub fn winner(&self) -> Option<&ClassRow> {
        self.rows.iter().find(|r| r.winner)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<6} {:<28} {:>20} {:>10}", "class", "family", "loss (mean +/- sd)", "delta");
        for r in &self.rows {
            let mark = if r.winner { "*" } else if r.tied_best { "=" } else { " " };
            let delta = r.delta_vs_pi0.map_or_else(|| "-".to_owned(), |d| format!("{d:+.4}"));
            let _ = writeln!(s, "{:<6} {:<28} {:>11.4} +/- {:.4}{} {:>10}", r.class.as_str(), r.family, r.mean, r.sd, mark, delta);
        }
        if let Some((m, sd)) = self.auto_pick {
            let delta = self
                .rows
                .iter()
                .find(|r| r.class == PolicyClass::Pi0)
                .map_or_else(|| "-".to_owned(), |p| format!("{:+.4}", m - p.mean));
            let _ = writeln!(s, "{:<6} {:<28} {:>11.4} +/- {:.4}  {:>10}", "auto", "inner-CV pick", m, sd, delta);
        }
        s
    }
}
