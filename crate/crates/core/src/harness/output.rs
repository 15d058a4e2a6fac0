//! CSV tables and gnuplot scripts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::run::{AggregateRow, ExperimentOutcome, TrialRecord};
use crate::error::Result;

/// Header of the aggregate table.
pub const CSV_HEADER: &str = "snr_db,method,trials,failures,mean_dlpr_db,std_dlpr_db,mean_wall_ms";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"))
}

/// Aggregate table. Without `report_timing` the timing column holds `NA`.
pub fn aggregate_csv(rows: &[AggregateRow], report_timing: bool) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let wall = if report_timing {
            format!("{:.3}", r.mean_wall_ms)
        } else {
            "NA".to_string()
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.snr_db,
            r.method.name(),
            r.trials,
            r.failures,
            opt(r.mean_dlpr_db),
            opt(r.std_dlpr_db),
            wall
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// One line per trial and method. Per-user values are `;`-separated.
pub fn trials_csv(records: &[TrialRecord], report_timing: bool) -> String {
    let mut out = String::from("trial,seed,snr_db,method,failed,worst_case_dlpr_db,per_user_dlpr_db,failure,wall_ms\n");
    for r in records {
        let per_user: Vec<String> = r.per_user_dlpr_db.iter().map(|v| format!("{v:.6}")).collect();
        let failure = r
            .failure
            .as_deref()
            .map(|f| f.replace([',', '\n', '"'], " "))
            .unwrap_or_default();
        let wall = if report_timing {
            format!("{:.3}", r.wall_time_ms)
        } else {
            "NA".to_string()
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.trial,
            r.seed,
            r.snr_db,
            r.method.name(),
            u8::from(r.separation_failed),
            opt(r.worst_case_dlpr_db),
            per_user.join(";"),
            failure,
            wall
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Gnuplot script drawing mean worst-case DLPR against SNR per method.
pub fn plot_script(csv_name: &str, title: &str, methods: &[&str]) -> String {
    let mut out = String::new();
    out.push_str("set datafile separator ','\n");
    out.push_str("set datafile missing 'NA'\n");
    out.push_str("set terminal pngcairo size 800,600\n");
    let stem = csv_name.trim_end_matches(".csv");
    writeln!(out, "set output '{stem}.png'").unwrap();
    writeln!(out, "set title '{title}'").unwrap();
    out.push_str("set xlabel 'SNR (dB)'\n");
    out.push_str("set ylabel 'mean worst-case DLPR (dB)'\n");
    out.push_str("set key bottom right\n");
    out.push_str("set grid\n");
    let series: Vec<String> = methods
        .iter()
        .map(|m| {
            format!(
                "'{csv_name}' using 1:(strcol(2) eq '{m}' ? $5 : NaN) skip 1 with linespoints title '{m}'"
            )
        })
        .collect();
    writeln!(out, "plot {}", series.join(", \\\n     ")).unwrap();
    out
}

/// Writes `<stem>.csv`, `<stem>_trials.csv` and `<stem>.gp` into `dir`.
pub fn write_outputs(
    dir: &Path,
    stem: &str,
    title: &str,
    outcome: &ExperimentOutcome,
    report_timing: bool,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let csv_name = format!("{stem}.csv");
    let mut methods: Vec<&str> = outcome.table.iter().map(|r| r.method.name()).collect();
    methods.sort_unstable();
    methods.dedup();
    let files = [
        (csv_name.clone(), aggregate_csv(&outcome.table, report_timing)),
        (format!("{stem}_trials.csv"), trials_csv(&outcome.records, report_timing)),
        (format!("{stem}.gp"), plot_script(&csv_name, title, &methods)),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}
