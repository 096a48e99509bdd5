//! CSV and plot-data emitters for benchmark rows. Output is byte-stable
//! for identical inputs.

use std::path::Path;

use crate::bench::{summarize, BenchRow};

/// `scenario,repetition,metric,value_ms`, sorted by (scenario, metric,
/// repetition).
pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut sorted: Vec<&BenchRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.scenario, a.metric, a.repetition).cmp(&(&b.scenario, b.metric, b.repetition))
    });
    let mut out = String::from("scenario,repetition,metric,value_ms\n");
    for row in sorted {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.scenario,
            row.repetition,
            row.metric.as_str(),
            row.value_ms
        ));
    }
    out
}

/// Gnuplot-friendly aggregate columns: one line per (scenario, metric).
pub fn to_plot_data(rows: &[BenchRow]) -> String {
    let mut out = String::from("# scenario metric mean_ms min_ms max_ms\n");
    for s in summarize(rows) {
        out.push_str(&format!(
            "{} {} {:.3} {} {}\n",
            s.scenario,
            s.metric.as_str(),
            s.mean_ms,
            s.min_ms,
            s.max_ms
        ));
    }
    out
}

/// Write `<out>.csv` (exact path) and the plot file next to it with a
/// `.dat` extension.
pub fn write_report(rows: &[BenchRow], csv_path: &Path) -> std::io::Result<std::path::PathBuf> {
    std::fs::write(csv_path, to_csv(rows))?;
    let dat_path = csv_path.with_extension("dat");
    std::fs::write(&dat_path, to_plot_data(rows))?;
    Ok(dat_path)
}
