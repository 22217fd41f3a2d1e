//! Plain-text report and CSV emission.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::lmi::ConstraintMargin;
use crate::sim::Trajectory;

/// Everything a run may write out.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub command: String,
    pub status: Option<String>,
    pub margin: Option<f64>,
    pub margins: Vec<ConstraintMargin>,
    pub gains: Option<(DMatrix<f64>, DMatrix<f64>)>,
    pub trajectory: Option<Trajectory>,
    /// Free-form `key: value` lines appended to the report.
    pub notes: Vec<(String, String)>,
}

/// `x` with six significant digits, `%g` style.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let s = format!("{:.5e}", x);
    // Rounding can bump the exponent, so trust the formatted one.
    let exp = s.rsplit('e').next().and_then(|e| e.parse::<i32>().ok()).unwrap_or(exp);
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, x);
        if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            fixed
        }
    } else {
        let (mantissa, e) = s.split_once('e').expect("scientific format");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{e}")
    }
}

fn matrix_block(out: &mut String, name: &str, m: &DMatrix<f64>) {
    let _ = writeln!(out, "{name} ({}x{}):", m.nrows(), m.ncols());
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{:>13}", sig6(*v))).collect();
        let _ = writeln!(out, "  [{} ]", cells.join(""));
    }
}

pub fn render_report(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "command: {}", report.command);
    if let Some(s) = &report.status {
        let _ = writeln!(out, "status: {s}");
    }
    if let Some(m) = report.margin {
        let _ = writeln!(out, "margin: {}", sig6(m));
    }
    for (k, v) in &report.notes {
        let _ = writeln!(out, "{k}: {v}");
    }
    if let Some((k1, k2)) = &report.gains {
        matrix_block(&mut out, "K1", k1);
        matrix_block(&mut out, "K2", k2);
    }
    if !report.margins.is_empty() {
        let _ = writeln!(out, "constraint margins:");
        for c in &report.margins {
            let _ = writeln!(out, "  {:<24} {}", c.name, sig6(c.margin));
        }
    }
    if let Some(tr) = &report.trajectory {
        let first = tr.norms[0];
        let last = tr.norms[tr.norms.len() - 1];
        let _ = writeln!(out, "initial error norms: m {} p {}", sig6(first.err_m), sig6(first.err_p));
        let _ = writeln!(out, "final error norms (t = {}): m {} p {}", sig6(last.t), sig6(last.err_m), sig6(last.err_p));
    }
    out
}

fn species_headers(prefix: &str, n: usize) -> Vec<String> {
    if n == 1 {
        vec![prefix.to_string()]
    } else {
        (1..=n).map(|i| format!("{prefix}_{i}")).collect()
    }
}

pub fn write_trajectory_csv(path: &Path, tr: &Trajectory) -> io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    let n = tr.snapshots.first().map_or(1, |s| s.m_bar.nrows());
    let mut header = vec!["t".to_string(), "x".to_string()];
    for p in ["m_bar", "p_bar", "m_hat", "p_hat"] {
        header.extend(species_headers(p, n));
    }
    writeln!(w, "{}", header.join(","))?;
    let x = tr.grid.nodes();
    for s in &tr.snapshots {
        for (j, xj) in x.iter().enumerate() {
            write!(w, "{:.16e},{:.16e}", s.t, xj)?;
            for f in [&s.m_bar, &s.p_bar, &s.m_hat, &s.p_hat] {
                for i in 0..n {
                    write!(w, ",{:.16e}", f[(i, j)])?;
                }
            }
            writeln!(w)?;
        }
    }
    w.flush()
}

/// Norms at the snapshot times.
pub fn write_norms_csv(path: &Path, tr: &Trajectory) -> io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "t,err_m,err_p")?;
    let dt = if tr.norms.len() > 1 { tr.norms[1].t - tr.norms[0].t } else { 1.0 };
    for s in &tr.snapshots {
        let k = ((s.t - tr.norms[0].t) / dt).round() as usize;
        let ns = tr.norms[k.min(tr.norms.len() - 1)];
        writeln!(w, "{:.16e},{:.16e},{:.16e}", ns.t, ns.err_m, ns.err_p)?;
    }
    w.flush()
}

/// Quotes a field that contains a separator or a quote.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write_margins_csv(path: &Path, margins: &[ConstraintMargin]) -> io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "constraint,margin")?;
    for c in margins {
        writeln!(w, "{},{:.16e}", csv_field(&c.name), c.margin)?;
    }
    w.flush()
}

/// Writes `report.txt`, plus `margins.csv`, `trajectory.csv` and
/// `norms.csv` when there is data for them. Returns the written paths.
pub fn emit_report(dir: &Path, report: &RunReport) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let path = dir.join("report.txt");
    fs::write(&path, render_report(report))?;
    written.push(path);
    if !report.margins.is_empty() {
        let path = dir.join("margins.csv");
        write_margins_csv(&path, &report.margins)?;
        written.push(path);
    }
    if let Some(tr) = &report.trajectory {
        let path = dir.join("trajectory.csv");
        write_trajectory_csv(&path, tr)?;
        written.push(path);
        let path = dir.join("norms.csv");
        write_norms_csv(&path, tr)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.602849), "0.602849");
        assert_eq!(sig6(1.0164727873), "1.01647");
        assert_eq!(sig6(-0.000123456789), "-0.000123457");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(1234567.0), "1.23457e6");
        assert_eq!(sig6(999999.7), "1e6");
        assert_eq!(sig6(2.5e-7), "2.5e-7");
        assert_eq!(sig6(3.0), "3");
        assert_eq!(sig6(0.0), "0");
    }

    #[test]
    fn report_lists_gains_and_margins() {
        let r = RunReport {
            command: "synth".into(),
            status: Some("feasible".into()),
            margin: Some(3.46006),
            margins: vec![ConstraintMargin { name: "phi(0,0)".into(), margin: 3.46 }],
            gains: Some((DMatrix::from_element(3, 2, 0.5), DMatrix::zeros(3, 2))),
            ..RunReport::default()
        };
        let text = render_report(&r);
        assert!(text.contains("status: feasible"));
        assert!(text.contains("K1 (3x2):"));
        assert!(text.contains("margin: 3.46006"));
        assert_eq!(text.matches("      0.5").count(), 6);
    }

    #[test]
    fn constraint_names_are_quoted() {
        assert_eq!(csv_field("pos(Q1)"), "pos(Q1)");
        assert_eq!(csv_field("phi(0,sigma_bar)"), "\"phi(0,sigma_bar)\"");
        assert_eq!(csv_field("a\"b"), "\"a\"\"b\"");
    }
}
