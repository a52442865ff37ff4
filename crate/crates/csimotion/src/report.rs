//! Batch evaluation reports: a per-run CSV and an aligned text summary.

use std::fmt::Write as _;

use csimotion_core::eval::{BatchSummary, RunResult};

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |a| format!("{:.1}", a * 100.0))
}

/// One row per run in input order: accuracies as fractions, empty when
/// missing, and the failure message for runs that did not score.
pub fn runs_csv(results: &[RunResult]) -> String {
    let mut out = String::from("run,movement,csi_accuracy,pir_accuracy,trimmed_samples,status\n");
    for r in results {
        let name = csv_field(&r.name);
        match &r.outcome {
            Ok(s) => {
                let pir = s
                    .pir
                    .as_ref()
                    .map_or(String::new(), |p| p.accuracy.to_string());
                let _ = writeln!(
                    out,
                    "{name},{},{},{pir},{},ok",
                    r.movement, s.csi.accuracy, s.csi.trimmed_samples
                );
            }
            Err(e) => {
                let _ = writeln!(
                    out,
                    "{name},{},,,,{}",
                    r.movement,
                    csv_field(&format!("error: {e}"))
                );
            }
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Per-movement means and the overall row, as percentages.
pub fn summary_table(summary: &BatchSummary) -> String {
    let mut rows: Vec<[String; 5]> = vec![[
        "movement".into(),
        "runs".into(),
        "failed".into(),
        "CSI %".into(),
        "PIR %".into(),
    ]];
    for m in &summary.per_movement {
        rows.push([
            m.movement.clone(),
            m.runs.to_string(),
            m.failed.to_string(),
            pct(m.csi_mean),
            pct(m.pir_mean),
        ]);
    }
    rows.push([
        "all".into(),
        (summary.scored + summary.failed).to_string(),
        summary.failed.to_string(),
        pct(summary.csi_mean),
        pct(summary.pir_mean),
    ]);
    let widths: Vec<usize> = (0..5)
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (v, w))| {
                if c == 0 {
                    format!("{v:<w$}")
                } else {
                    format!("{v:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            let _ = writeln!(out, "{}", rule.join("  "));
        }
    }
    out
}

pub fn summary_csv(summary: &BatchSummary) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |a| a.to_string());
    let mut out = String::from("movement,runs,failed,csi_mean,pir_mean\n");
    for m in &summary.per_movement {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            csv_field(&m.movement),
            m.runs,
            m.failed,
            opt(m.csi_mean),
            opt(m.pir_mean)
        );
    }
    let _ = writeln!(
        out,
        "all,{},{},{},{}",
        summary.scored + summary.failed,
        summary.failed,
        opt(summary.csi_mean),
        opt(summary.pir_mean)
    );
    out
}
