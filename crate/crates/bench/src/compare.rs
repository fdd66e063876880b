//! Time-to-target comparison across the traces of one output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::BenchError;

pub const EPSILONS: [f64; 3] = [1e-2, 1e-4, 1e-6];

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub solver: String,
    pub k: Vec<usize>,
    pub f: Vec<f64>,
    pub wall_time_s: Vec<f64>,
}

impl Trace {
    pub fn read(path: &Path) -> Result<Self, BenchError> {
        let err = |m: String| BenchError::Trace(format!("{}: {m}", path.display()));
        let solver = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.strip_prefix("trace_"))
            .ok_or_else(|| err("not a trace file".into()))?
            .to_string();
        let mut rdr = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
        let headers = rdr.headers().map_err(|e| err(e.to_string()))?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| err(format!("missing column {name}")));
        let (ck, cf, ct) = (col("k")?, col("f")?, col("wall_time_s")?);
        let mut t = Trace { solver, k: vec![], f: vec![], wall_time_s: vec![] };
        for rec in rdr.records() {
            let rec = rec.map_err(|e| err(e.to_string()))?;
            let field = |c: usize| rec.get(c).ok_or_else(|| err("short row".into()));
            t.k.push(field(ck)?.parse().map_err(|_| err("bad k".into()))?);
            t.f.push(field(cf)?.parse().map_err(|_| err("bad f".into()))?);
            t.wall_time_s.push(field(ct)?.parse().map_err(|_| err("bad wall_time_s".into()))?);
        }
        if t.f.is_empty() {
            return Err(err("no rows".into()));
        }
        Ok(t)
    }

    /// First row with `f <= target`, as `(k, wall_time_s)`.
    pub fn first_reaching(&self, target: f64) -> Option<(usize, f64)> {
        self.f.iter().position(|&f| f <= target).map(|i| (self.k[i], self.wall_time_s[i]))
    }
}

/// `trace_*.csv` files of `dir`, sorted by name.
pub fn trace_files(dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    let entries = fs::read_dir(dir).map_err(|e| BenchError::Trace(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("trace_") && n.ends_with(".csv"))
        })
        .collect();
    files.sort();
    Ok(files)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub f_best: f64,
    pub f0: f64,
    /// Per solver, one entry per epsilon.
    pub rows: Vec<(String, Vec<Option<(usize, f64)>>)>,
}

/// Targets `f_best + ε (f₀ − f_best)` with `f_best` the smallest value over all
/// traces and `f₀` the largest starting value.
pub fn compare(traces: &[Trace]) -> Comparison {
    let f_best = traces.iter().flat_map(|t| t.f.iter().copied()).fold(f64::INFINITY, f64::min);
    let f0 = traces.iter().map(|t| t.f[0]).fold(f64::NEG_INFINITY, f64::max);
    let rows = traces
        .iter()
        .map(|t| (t.solver.clone(), EPSILONS.iter().map(|e| t.first_reaching(f_best + e * (f0 - f_best))).collect()))
        .collect();
    Comparison { f_best, f0, rows }
}

impl Comparison {
    pub fn table(&self) -> String {
        let mut header = vec!["solver".to_string()];
        for e in EPSILONS {
            header.push(format!("iters@{e:e}"));
            header.push(format!("time@{e:e}"));
        }
        let mut lines = vec![header];
        for (solver, hits) in &self.rows {
            let mut line = vec![solver.clone()];
            for h in hits {
                match h {
                    Some((k, t)) => {
                        line.push(k.to_string());
                        line.push(format!("{t:.3}"));
                    }
                    None => line.extend(["-".to_string(), "-".to_string()]),
                }
            }
            lines.push(line);
        }
        let widths: Vec<usize> =
            (0..lines[0].len()).map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0)).collect();
        let mut out = format!("f_best = {:e}, f0 = {:e}\n", self.f_best, self.f0);
        for l in &lines {
            let cells: Vec<String> = l
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), BenchError> {
        let err = |e: csv::Error| BenchError::Io(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(err)?;
        w.write_record(["solver", "epsilon", "target_f", "iterations", "wall_time_s"]).map_err(err)?;
        for (solver, hits) in &self.rows {
            for (e, h) in EPSILONS.iter().zip(hits) {
                let (k, t) = match h {
                    Some((k, t)) => (k.to_string(), format!("{t:e}")),
                    None => ("-".into(), "-".into()),
                };
                let target = self.f_best + e * (self.f0 - self.f_best);
                w.write_record([solver.clone(), format!("{e:e}"), format!("{target:e}"), k, t]).map_err(err)?;
            }
        }
        w.flush().map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))
    }
}

/// Reads every trace in `dir`, writes `compare.csv` there and returns the table.
pub fn cmd_compare(dir: &Path) -> Result<String, BenchError> {
    let files = trace_files(dir)?;
    if files.len() < 2 {
        return Err(BenchError::Trace(format!("{} holds {} trace files, need at least 2", dir.display(), files.len())));
    }
    let traces = files.iter().map(|p| Trace::read(p)).collect::<Result<Vec<_>, _>>()?;
    let cmp = compare(&traces);
    cmp.write_csv(&dir.join("compare.csv"))?;
    Ok(cmp.table())
}
