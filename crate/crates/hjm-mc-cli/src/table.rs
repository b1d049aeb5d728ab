//! Result rows and their CSV form.
//!
//! Every number is written with 17 significant digits, enough for the text
//! to reproduce the exact bit pattern of each `f64` on parse, so a table
//! written twice from the same run is byte-identical and a round trip
//! through the file is lossless.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub const CSV_HEADER: &str =
    "N,L,value,stat_error,e_tau,e_tim,e_tau_stat,e_tim_stat,exact,E_c,ratio_lo,ratio_hi";

/// One grid level of a run: the price, its statistical band, the two error
/// terms with theirs, and — when a reference value exists — the realized
/// error and the estimated-to-realized ratio interval.
///
/// The dual columns are absent for schemes without a backward pass; the
/// reference columns are absent when no closed form or override is
/// available. The ratio interval needs both.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub n: usize,
    pub l: usize,
    pub value: f64,
    pub stat_error: f64,
    pub e_tau: Option<f64>,
    pub e_tim: Option<f64>,
    pub e_tau_stat: Option<f64>,
    pub e_tim_stat: Option<f64>,
    pub exact: Option<f64>,
    pub e_c: Option<f64>,
    pub ratio_lo: Option<f64>,
    pub ratio_hi: Option<f64>,
}

impl TableRow {
    /// The structural rules a row must satisfy before it is written: the
    /// dual quartet is all-or-nothing, the realized error comes with the
    /// reference value, and a ratio interval requires the reference (it is
    /// also dual-derived, so a reference-only row simply leaves it blank).
    pub fn validate(&self) -> Result<()> {
        let duals = [
            self.e_tau.is_some(),
            self.e_tim.is_some(),
            self.e_tau_stat.is_some(),
            self.e_tim_stat.is_some(),
        ];
        if duals.iter().any(|&p| p != duals[0]) {
            bail!("partial dual columns in row N={}", self.n);
        }
        if self.exact.is_some() != self.e_c.is_some() {
            bail!(
                "reference value and realized error must come together in row N={}",
                self.n
            );
        }
        if self.ratio_lo.is_some() != self.ratio_hi.is_some() {
            bail!("partial ratio interval in row N={}", self.n);
        }
        if self.ratio_lo.is_some() && (self.exact.is_none() || self.e_tau.is_none()) {
            bail!(
                "ratio interval without reference and dual columns in row N={}",
                self.n
            );
        }
        Ok(())
    }

    pub fn csv_line(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{},{}", self.n, self.l);
        for v in [Some(self.value), Some(self.stat_error)] {
            s.push(',');
            s.push_str(&fmt_opt(v));
        }
        for v in [
            self.e_tau,
            self.e_tim,
            self.e_tau_stat,
            self.e_tim_stat,
            self.exact,
            self.e_c,
            self.ratio_lo,
            self.ratio_hi,
        ] {
            s.push(',');
            s.push_str(&fmt_opt(v));
        }
        s
    }

    pub fn parse_csv_line(line: &str) -> Result<TableRow> {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 12 {
            bail!("expected 12 cells, found {}: {line:?}", cells.len());
        }
        let row = TableRow {
            n: cells[0].parse().with_context(|| format!("N in {line:?}"))?,
            l: cells[1].parse().with_context(|| format!("L in {line:?}"))?,
            value: parse_f64(cells[2])?,
            stat_error: parse_f64(cells[3])?,
            e_tau: parse_opt(cells[4])?,
            e_tim: parse_opt(cells[5])?,
            e_tau_stat: parse_opt(cells[6])?,
            e_tim_stat: parse_opt(cells[7])?,
            exact: parse_opt(cells[8])?,
            e_c: parse_opt(cells[9])?,
            ratio_lo: parse_opt(cells[10])?,
            ratio_hi: parse_opt(cells[11])?,
        };
        row.validate()?;
        Ok(row)
    }
}

/// 17 significant digits: 1 before the point, 16 after.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn parse_f64(cell: &str) -> Result<f64> {
    cell.parse().with_context(|| format!("bad number {cell:?}"))
}

fn parse_opt(cell: &str) -> Result<Option<f64>> {
    if cell.is_empty() {
        Ok(None)
    } else {
        Ok(Some(parse_f64(cell)?))
    }
}

pub fn to_csv(rows: &[TableRow]) -> Result<String> {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for row in rows {
        row.validate()?;
        s.push_str(&row.csv_line());
        s.push('\n');
    }
    Ok(s)
}

pub fn write_csv(path: &Path, rows: &[TableRow]) -> Result<()> {
    let s = to_csv(rows)?;
    std::fs::write(path, s).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<TableRow>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => bail!("unexpected header {other:?}"),
    }
    lines.map(TableRow::parse_csv_line).collect()
}

/// Fixed-width rendering for the terminal; blank cells print as `-`.
pub fn render_text(rows: &[TableRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>5} {:>5} {:>14} {:>11} {:>11} {:>11} {:>14} {:>11} {:>17}",
        "N", "L", "value", "stat", "e_tau", "e_tim", "exact", "E_c", "ratio"
    );
    for r in rows {
        let ratio = match (r.ratio_lo, r.ratio_hi) {
            (Some(lo), Some(hi)) => format!("[{lo:.3}, {hi:.3}]"),
            _ => "-".into(),
        };
        let _ = writeln!(
            s,
            "{:>5} {:>5} {:>14.7e} {:>11.3e} {:>11} {:>11} {:>14} {:>11} {:>17}",
            r.n,
            r.l,
            r.value,
            r.stat_error,
            opt_cell(r.e_tau, 3),
            opt_cell(r.e_tim, 3),
            opt_cell(r.exact, 7),
            opt_cell(r.e_c, 3),
            ratio
        );
    }
    s
}

fn opt_cell(x: Option<f64>, prec: usize) -> String {
    match x {
        Some(v) => format!("{v:.prec$e}"),
        None => "-".into(),
    }
}
