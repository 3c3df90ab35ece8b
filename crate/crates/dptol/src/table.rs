//! CSV and Markdown rendering of summary rows.
//!
//! Numbers are printed with 4 decimals. Absent values, and every statistic
//! of a row whose replications were all infeasible, print as `--` in
//! Markdown and as an empty field in CSV.

use crate::harness::SummaryRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Markdown,
}

pub const COLUMNS: [&str; 13] = [
    "n",
    "K",
    "mean_coverage",
    "undercoverage_rate",
    "mean_lower",
    "mean_upper",
    "mean_length",
    "coverage_2.5",
    "coverage_97.5",
    "limit_2.5",
    "limit_97.5",
    "infeasible",
    "failed",
];

fn num(v: Option<f64>, absent: &str) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.4}"),
        _ => absent.to_string(),
    }
}

fn cells(r: &SummaryRow, absent: &str) -> Vec<String> {
    let undefined = r.replications > 0 && r.infeasible == r.replications;
    let stat = |v: Option<f64>| if undefined { absent.to_string() } else { num(v, absent) };
    vec![
        r.n.to_string(),
        r.replications.to_string(),
        stat(Some(r.mean_coverage)),
        stat(Some(r.undercoverage_rate)),
        stat(r.mean_lower),
        stat(r.mean_upper),
        stat(r.mean_length),
        stat(Some(r.coverage_2_5)),
        stat(Some(r.coverage_97_5)),
        stat(r.limit_2_5),
        stat(r.limit_97_5),
        r.infeasible.to_string(),
        r.failed.to_string(),
    ]
}

pub fn emit_table(rows: &[SummaryRow], format: Format) -> String {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(COLUMNS).expect("in-memory write");
            for r in rows {
                w.write_record(cells(r, "")).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
        }
        Format::Markdown => {
            let mut out = format!("| {} |\n", COLUMNS.join(" | "));
            out.push_str(&format!("|{}\n", "---:|".repeat(COLUMNS.len())));
            for r in rows {
                out.push_str(&format!("| {} |\n", cells(r, "--").join(" | ")));
            }
            out
        }
    }
}
