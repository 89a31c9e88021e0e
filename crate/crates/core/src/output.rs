//! CSV tables and matplotlib scripts for sweep results.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::sweep::MetricPoint;

pub const CSV_HEADER: &str = "snr_db,signal,metric,mode,analytic,asymptotic,mc_mean,mc_ci_low,mc_ci_high,feasible";

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// Renders the table with a fixed column set; missing values are empty cells.
pub fn to_csv(rows: &[MetricPoint]) -> String {
    let mut s = String::with_capacity(64 * (rows.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.snr_db,
            r.signal.label(),
            r.metric.label(),
            r.scheme.label(),
            cell(r.analytic),
            cell(r.asymptotic),
            r.mc.mean,
            r.mc.ci_low,
            r.mc.ci_high,
            r.feasible
        );
    }
    s
}

/// Plotting script that reads `csv_path` and draws one analytic line, one
/// optional asymptote and one set of Monte Carlo markers per (signal, mode).
pub fn plot_script(csv_path: &Path, rows: &[MetricPoint]) -> String {
    let metric = rows.first().map(|r| r.metric.label()).unwrap_or("outage");
    let log_y = metric == "outage";
    let csv = csv_path.to_string_lossy().replace('\\', "\\\\").replace('"', "\\\"");
    let mut s = String::new();
    s.push_str("#!/usr/bin/env python3\n");
    s.push_str("import csv\nimport sys\nfrom collections import OrderedDict\n\n");
    s.push_str("import matplotlib\nmatplotlib.use(\"Agg\")\nimport matplotlib.pyplot as plt\n\n");
    let _ = writeln!(s, "CSV = \"{csv}\"");
    let _ = writeln!(s, "METRIC = \"{metric}\"");
    let _ = writeln!(s, "LOG_Y = {}\n", if log_y { "True" } else { "False" });
    s.push_str(
        r#"def num(x):
    return float(x) if x != "" else None


curves = OrderedDict()
with open(CSV, newline="") as f:
    for row in csv.DictReader(f):
        key = (row["signal"], row["mode"])
        c = curves.setdefault(key, {"snr": [], "analytic": [], "asymptotic": [], "mc": []})
        c["snr"].append(float(row["snr_db"]))
        c["analytic"].append(num(row["analytic"]))
        c["asymptotic"].append(num(row["asymptotic"]))
        c["mc"].append(num(row["mc_mean"]))

fig, ax = plt.subplots(figsize=(6.4, 4.8))
for i, ((signal, mode), c) in enumerate(curves.items()):
    colour = "C%d" % (i % 10)
    label = "%s %s" % (signal, mode)
    pts = [(x, y) for x, y in zip(c["snr"], c["analytic"]) if y is not None]
    if pts:
        ax.plot(*zip(*pts), "-", color=colour, label=label)
    pts = [(x, y) for x, y in zip(c["snr"], c["asymptotic"]) if y is not None]
    if pts:
        ax.plot(*zip(*pts), "--", color=colour, label=label + " asymptotic")
    pts = [(x, y) for x, y in zip(c["snr"], c["mc"]) if y is not None and (y > 0 or not LOG_Y)]
    if pts:
        ax.plot(*zip(*pts), "o", mfc="none", color=colour, label=label + " simulation")

if LOG_Y:
    ax.set_yscale("log")
ax.set_xlabel("SNR (dB)")
ax.set_ylabel(METRIC.replace("_", " "))
ax.grid(True, which="both", alpha=0.3)
ax.legend(fontsize="small")
fig.tight_layout()
out = sys.argv[1] if len(sys.argv) > 1 else CSV.rsplit(".", 1)[0] + ".png"
fig.savefig(out, dpi=150)
print(out)
"#,
    );
    s
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Writes the CSV to `csv_path` and, when `plot` is set, a script next to
/// it with the extension `.py`. Returns the paths written.
pub fn emit_outputs(rows: &[MetricPoint], csv_path: &Path, plot: bool) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(Error::input("emit_outputs", "empty table"));
    }
    write(csv_path, &to_csv(rows))?;
    let mut written = vec![csv_path.to_path_buf()];
    if plot {
        let script = csv_path.with_extension("py");
        let name = csv_path.file_name().map(Path::new).unwrap_or(csv_path);
        write(&script, &plot_script(name, rows))?;
        written.push(script);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SicMode, Signal};
    use crate::montecarlo::McEstimate;
    use crate::sweep::{Metric, Scheme, SignalSel};

    fn row(db: f64, signal: Signal, asymptotic: Option<f64>) -> MetricPoint {
        MetricPoint {
            snr_db: db,
            signal: SignalSel::One(signal),
            metric: Metric::Outage,
            scheme: Scheme::Noma(SicMode::Imperfect),
            analytic: Some(0.5),
            asymptotic,
            mc: McEstimate::from_proportion(500, 1000, 1),
            feasible: true,
        }
    }

    fn table() -> Vec<MetricPoint> {
        (0..9).flat_map(|i| [row(5.0 * i as f64, Signal::X1, None), row(5.0 * i as f64, Signal::X2, Some(0.1))]).collect()
    }

    #[test]
    fn eighteen_rows_give_nineteen_lines() {
        let csv = to_csv(&table());
        assert_eq!(csv.lines().count(), 19);
        assert_eq!(csv.lines().next().unwrap(), CSV_HEADER);
    }

    #[test]
    fn missing_values_are_empty_cells() {
        let csv = to_csv(&table());
        let line = csv.lines().nth(1).unwrap();
        assert_eq!(line.split(',').count(), 10);
        assert!(line.starts_with("0,x1,outage,ipsic,0.5,,0.5,"));
        assert!(line.ends_with(",true"));
    }

    #[test]
    fn emit_writes_both_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fig.csv");
        let written = emit_outputs(&table(), &path, true).unwrap();
        assert_eq!(written.len(), 2);
        let script = std::fs::read_to_string(dir.path().join("fig.py")).unwrap();
        assert!(script.contains("CSV = \"fig.csv\""));
        assert!(script.contains("(row[\"signal\"], row[\"mode\"])"));
    }

    #[test]
    fn unwritable_path_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("out.csv");
        let err = emit_outputs(&table(), &path, false).unwrap_err();
        assert!(err.to_string().contains("missing"), "{err}");
        assert!(emit_outputs(&[], &dir.path().join("x.csv"), false).is_err());
    }
}
