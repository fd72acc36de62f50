//! Gnuplot scripts for sweep CSVs. Nothing is rendered in-process; the
//! scripts carry the aggregated means inline and point at the CSV for the
//! raw replications.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::sweep::{read_csv_file, SweepRow};
use crate::error::{Result, ZoError};

pub const SCRIPT_NAMES: [&str; 3] = ["gap_vs_T.gp", "gap_vs_d.gp", "estimators.gp"];

type Series = BTreeMap<String, BTreeMap<u64, Vec<f64>>>;

fn series<K, X>(rows: &[SweepRow], key: K, x: X) -> Series
where
    K: Fn(&SweepRow) -> String,
    X: Fn(&SweepRow) -> u64,
{
    let mut s: Series = BTreeMap::new();
    for r in rows {
        s.entry(key(r)).or_default().entry(x(r)).or_default().push(r.final_gap);
    }
    s
}

fn script(title: &str, xlabel: &str, csv: &Path, s: &Series) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# generated from {}", csv.display());
    let _ = writeln!(out, "set logscale xy");
    let _ = writeln!(out, "set title \"{title}\"");
    let _ = writeln!(out, "set xlabel \"{xlabel}\"");
    let _ = writeln!(out, "set ylabel \"mean optimality gap\"");
    let _ = writeln!(out, "set key left bottom");
    for (i, (name, pts)) in s.iter().enumerate() {
        let _ = writeln!(out, "$s{i} << EOD");
        for (x, gaps) in pts {
            let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
            let _ = writeln!(out, "{x} {mean:e}");
        }
        let _ = writeln!(out, "EOD");
        let _ = name;
    }
    let plots: Vec<String> = s
        .keys()
        .enumerate()
        .map(|(i, name)| format!("$s{i} using 1:2 with linespoints title \"{name}\""))
        .collect();
    let _ = writeln!(out, "plot {}", plots.join(", \\\n     "));
    out
}

/// Write the three scripts into `out_dir` and return their paths.
pub fn emit_plots(csv_path: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let rows = read_csv_file(csv_path)?;
    if rows.is_empty() {
        return Err(ZoError::Data("no data rows".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let label = |r: &SweepRow| format!("{} {}", r.estimator, r.schedule);
    let by_t = series(&rows, |r| format!("d={} {}", r.d, label(r)), |r| r.t);
    let by_d = series(&rows, |r| format!("T={} {}", r.t, label(r)), |r| r.d as u64);
    let by_est = series(&rows, |r| format!("{} d={}", label(r), r.d), |r| r.t);
    let scripts = [
        script("gap vs T", "T", csv_path, &by_t),
        script("gap vs d", "d", csv_path, &by_d),
        script("estimator comparison", "T", csv_path, &by_est),
    ];
    let mut paths = Vec::new();
    for (name, body) in SCRIPT_NAMES.iter().zip(scripts) {
        let p = out_dir.join(name);
        std::fs::write(&p, body)?;
        paths.push(p);
    }
    Ok(paths)
}
