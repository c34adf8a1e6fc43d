//! CSV readers and writers for feature blocks, loss matrices, loss
//! components and prior channels. Values are written with the shortest
//! round-trip decimal form, so re-reading is lossless.

use std::path::{Path, PathBuf};

use crate::controllers::{FeatureMatrix, PriorChannel};
use crate::{ActionSet, Error, LossComponents, LossMatrix, Result};

struct Table {
    path: PathBuf,
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Schema { path: path.into(), message: e.to_string() })?;
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        if headers.is_empty() || headers.iter().all(String::is_empty) {
            return Err(Error::Schema { path: path.into(), message: "missing header row".into() });
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            rows.push(rec?.iter().map(str::to_owned).collect());
        }
        if rows.is_empty() {
            return Err(Error::Schema { path: path.into(), message: "no data rows".into() });
        }
        Ok(Self { path: path.into(), headers, rows })
    }

    fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.column(name).ok_or_else(|| Error::Schema { path: self.path.clone(), message: format!("missing column `{name}`") })
    }

    fn cell_err(&self, row: usize, col: usize, message: impl Into<String>) -> Error {
        // Row numbers are 1-based data rows, so the header is row 0.
        Error::Cell { path: self.path.clone(), row: row + 1, column: self.headers[col].clone(), message: message.into() }
    }

    fn real(&self, row: usize, col: usize) -> Result<f64> {
        let raw = &self.rows[row][col];
        let v: f64 = raw.parse().map_err(|_| self.cell_err(row, col, format!("`{raw}` is not a number")))?;
        if !v.is_finite() {
            return Err(self.cell_err(row, col, "value is not finite"));
        }
        Ok(v)
    }

    fn binary(&self, row: usize, col: usize) -> Result<bool> {
        match self.real(row, col)? {
            0.0 => Ok(false),
            1.0 => Ok(true),
            v => Err(self.cell_err(row, col, format!("{v} is not 0 or 1"))),
        }
    }

    /// Action labels from columns `<prefix><label>`, in column order.
    fn actions(&self, prefix: &str) -> Result<ActionSet> {
        let labels: Vec<&str> = self.headers.iter().filter_map(|h| h.strip_prefix(prefix)).collect();
        ActionSet::new(labels.iter().copied()).map_err(|e| Error::Schema {
            path: self.path.clone(),
            message: format!("columns `{prefix}<action>`: {e}"),
        })
    }
}

pub fn read_features(path: &Path) -> Result<FeatureMatrix> {
    let t = Table::read(path)?;
    let mut data = Vec::with_capacity(t.rows.len() * t.headers.len());
    for i in 0..t.rows.len() {
        for j in 0..t.headers.len() {
            data.push(t.real(i, j)?);
        }
    }
    FeatureMatrix::from_flat(data, t.rows.len(), t.headers.len())?.with_names(t.headers.clone())
}

/// Loss matrix from `loss_<action>` columns, plus `c_direct` when present.
pub fn read_losses(path: &Path) -> Result<(LossMatrix, Option<Vec<bool>>)> {
    let t = Table::read(path)?;
    let actions = t.actions("loss_")?;
    let cols: Vec<usize> = actions.labels().iter().map(|a| t.require(&format!("loss_{a}"))).collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(t.rows.len());
    for i in 0..t.rows.len() {
        let mut row = Vec::with_capacity(cols.len());
        for &j in &cols {
            let v = t.real(i, j)?;
            if v < 0.0 {
                return Err(t.cell_err(i, j, "losses must be non-negative"));
            }
            row.push(v);
        }
        values.push(row);
    }
    let correct = match t.column("c_direct") {
        Some(j) => Some((0..t.rows.len()).map(|i| t.binary(i, j)).collect::<Result<Vec<_>>>()?),
        None => None,
    };
    Ok((LossMatrix::new(values, actions)?, correct))
}

/// Components from `c_<a>`, `h_<a>` and `k_<a>` columns; the action set is
/// taken from the `c_` columns.
pub fn read_components(path: &Path) -> Result<LossComponents> {
    let t = Table::read(path)?;
    let actions = t.actions("c_")?;
    let mut correct = vec![Vec::new(); t.rows.len()];
    let mut risk = vec![Vec::new(); t.rows.len()];
    let mut cost = vec![Vec::new(); t.rows.len()];
    for a in actions.labels() {
        let (jc, jh, jk) = (t.require(&format!("c_{a}"))?, t.require(&format!("h_{a}"))?, t.require(&format!("k_{a}"))?);
        for i in 0..t.rows.len() {
            correct[i].push(t.binary(i, jc)?);
            let h = t.real(i, jh)?;
            if !(0.0..=1.0).contains(&h) {
                return Err(t.cell_err(i, jh, "risk must lie in [0, 1]"));
            }
            risk[i].push(h);
            let k = t.real(i, jk)?;
            if k < 0.0 {
                return Err(t.cell_err(i, jk, "cost must be non-negative"));
            }
            cost[i].push(k);
        }
    }
    LossComponents::new(actions, correct, risk, cost)
}

pub fn read_prior(path: &Path) -> Result<PriorChannel> {
    let t = Table::read(path)?;
    let j = t.require("z")?;
    PriorChannel::new((0..t.rows.len()).map(|i| t.real(i, j)).collect::<Result<_>>()?)
}

/// A stored partition: one non-negative integer `cell` per row.
pub fn read_cells(path: &Path) -> Result<Vec<usize>> {
    let t = Table::read(path)?;
    let j = t.require("cell")?;
    (0..t.rows.len())
        .map(|i| {
            let raw = &t.rows[i][j];
            raw.parse::<usize>().map_err(|_| t.cell_err(i, j, format!("`{raw}` is not a cell index")))
        })
        .collect()
}

fn write_rows(path: &Path, header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    write_rows_to(std::fs::File::create(path)?, header, rows)
}

fn write_rows_to<W: std::io::Write>(out: W, header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_features(path: &Path, x: &FeatureMatrix) -> Result<()> {
    let header = match x.names() {
        Some(n) => n.to_vec(),
        None => (0..x.d()).map(|j| format!("x{j}")).collect(),
    };
    write_rows(path, header, x.rows().map(|r| r.iter().map(f64::to_string).collect()))
}

pub fn write_losses(path: &Path, losses: &LossMatrix, direct_correct: Option<&[bool]>) -> Result<()> {
    write_losses_to(std::fs::File::create(path)?, losses, direct_correct)
}

pub fn losses_to_string(losses: &LossMatrix, direct_correct: Option<&[bool]>) -> Result<String> {
    let mut buf = Vec::new();
    write_losses_to(&mut buf, losses, direct_correct)?;
    String::from_utf8(buf).map_err(|e| Error::invalid(e.to_string()))
}

fn write_losses_to<W: std::io::Write>(out: W, losses: &LossMatrix, direct_correct: Option<&[bool]>) -> Result<()> {
    if direct_correct.is_some_and(|c| c.len() != losses.n()) {
        return Err(Error::Shape("correctness column length differs from the loss matrix".into()));
    }
    let mut header: Vec<String> = losses.actions().labels().iter().map(|a| format!("loss_{a}")).collect();
    if direct_correct.is_some() {
        header.push("c_direct".into());
    }
    write_rows_to(
        out,
        header,
        losses.rows().iter().enumerate().map(|(i, r)| {
            let mut out: Vec<String> = r.iter().map(f64::to_string).collect();
            if let Some(c) = direct_correct {
                out.push(u8::from(c[i]).to_string());
            }
            out
        }),
    )
}

pub fn write_components(path: &Path, comps: &LossComponents) -> Result<()> {
    let labels = comps.actions.labels();
    let mut header = Vec::new();
    for prefix in ["c_", "h_", "k_"] {
        header.extend(labels.iter().map(|a| format!("{prefix}{a}")));
    }
    write_rows(
        path,
        header,
        (0..comps.n()).map(|i| {
            let mut out: Vec<String> = comps.correct[i].iter().map(|&c| u8::from(c).to_string()).collect();
            out.extend(comps.risk[i].iter().map(f64::to_string));
            out.extend(comps.cost[i].iter().map(f64::to_string));
            out
        }),
    )
}

pub fn write_cells(path: &Path, cells: &[usize]) -> Result<()> {
    write_rows(path, vec!["cell".into()], cells.iter().map(|c| vec![c.to_string()]))
}

pub fn write_prior(path: &Path, prior: &PriorChannel) -> Result<()> {
    write_rows(path, vec!["z".into()], prior.values().iter().map(|v| vec![v.to_string()]))
}
