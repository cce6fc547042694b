//! Uncertainties, bias reports, leaderboards and sample-efficiency curves.

mod bias;
mod bootstrap;
mod efficiency;
mod leaderboard;

pub use bias::{bias_influence, bias_report, mean_abs_gap, BiasReport, BiasRow};
pub use bootstrap::{bootstrap_uncertainty, Bootstrap};
pub use efficiency::{sample_efficiency_curve, CurveOptions, CurvePoint, EfficiencyCurve, Gain};
pub use leaderboard::{build_leaderboard, Anchor, Estimate, Leaderboard, LeaderboardRow};

/// Aligned Markdown table.
fn markdown_table<R: AsRef<[String]>>(header: &[&str], rows: &[R]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row.as_ref()) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        format!("| {} |\n", padded.join(" | "))
    };
    let mut out = line(header.to_vec());
    out.push_str(&format!("|{}|\n", widths.iter().map(|w| "-".repeat(w + 2)).collect::<Vec<_>>().join("|")));
    for row in rows {
        out.push_str(&line(row.as_ref().iter().map(String::as_str).collect()));
    }
    out
}
