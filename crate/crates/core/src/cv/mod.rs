//! Seeded folds, strict nested cross-validation and per-class reporting.

mod folds;
mod nested;
mod table;

pub use folds::{complement, make_folds};
pub use nested::{
    inner_select, outer_folds_for, strict_nested_cv, strict_nested_cv_audited, Access, AutoPick, CellPick, CvConfig,
    CvData, CvReport, FamilyResult, Phase,
};
pub use table::{per_class_table, ClassRow, ClassTable, TIE_EPS};
