use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::Scheme;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub task: String,
    pub scheme: Scheme,
    /// Remember ratio used to build the training set (1 for uncleaned baselines).
    pub rr: f64,
    pub rounds: usize,
    pub seed: u64,
    /// Substitute accuracy on the task's held-out test pool.
    pub accuracy: f64,
    /// Fraction of training labels that agree with ground truth.
    pub clean_fraction: f64,
    pub query_labels: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    /// Rows in a canonical order so reports do not depend on job completion order.
    pub fn sorted(mut self) -> Self {
        self.rows.sort_by(|a, b| {
            (a.task.as_str(), a.rounds, a.seed, a.scheme)
                .cmp(&(b.task.as_str(), b.rounds, b.seed, b.scheme))
                .then(a.rr.total_cmp(&b.rr))
        });
        self
    }

    pub fn extend(&mut self, other: ResultTable) {
        self.rows.extend(other.rows);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        if self.rows.is_empty() {
            w.write_record(["task", "scheme", "rr", "rounds", "seed", "accuracy", "clean_fraction", "query_labels"])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let rows = r.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?;
        Ok(Self { rows })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(File::open(path)?)
    }

    /// Mean accuracy over seeds for each `(task, scheme, rr, rounds)` cell.
    pub fn mean_accuracy(&self) -> BTreeMap<(String, Scheme, String, usize), (f64, usize)> {
        let mut acc: BTreeMap<(String, Scheme, String, usize), (f64, usize)> = BTreeMap::new();
        for r in &self.rows {
            let e = acc.entry((r.task.clone(), r.scheme, rr_label(r.rr), r.rounds)).or_default();
            e.0 += r.accuracy;
            e.1 += 1;
        }
        for v in acc.values_mut() {
            v.0 /= v.1 as f64;
        }
        acc
    }

    /// Seed-averaged accuracy of one scheme, optionally restricted to one rr and rounds value.
    pub fn scheme_mean(&self, scheme: Scheme, rr: Option<f64>, rounds: Option<usize>) -> Option<f64> {
        let picked: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.scheme == scheme)
            .filter(|r| rr.is_none_or(|x| (r.rr - x).abs() < 1e-9))
            .filter(|r| rounds.is_none_or(|m| r.rounds == m))
            .map(|r| r.accuracy)
            .collect();
        (!picked.is_empty()).then(|| picked.iter().sum::<f64>() / picked.len() as f64)
    }
}

fn rr_label(rr: f64) -> String {
    format!("{rr:.1}")
}

/// Task × {Base, QLeak, RR grid} matrix of seed-averaged accuracies.
#[derive(Debug, Clone, PartialEq)]
pub struct Table3 {
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<Option<f64>>)>,
    pub seeds: usize,
}

impl Table3 {
    pub fn from_table(table: &ResultTable, rr_grid: &[f64], rounds: usize) -> Self {
        let means = table.mean_accuracy();
        let mut columns = vec!["Base".to_string(), "QLeak".to_string()];
        columns.extend(rr_grid.iter().map(|rr| format!("RR={}", rr_label(*rr))));
        let mut tasks: Vec<String> = table.rows.iter().map(|r| r.task.clone()).collect();
        tasks.sort();
        tasks.dedup();
        let baseline_cell = |task: &str, scheme: Scheme| {
            means
                .iter()
                .find(|((t, s, _, m), _)| t == task && *s == scheme && *m == rounds)
                .map(|(_, v)| v.0)
        };
        let rows = tasks
            .into_iter()
            .map(|task| {
                let mut cells = vec![baseline_cell(&task, Scheme::Base), baseline_cell(&task, Scheme::Qleak)];
                cells.extend(rr_grid.iter().map(|rr| {
                    means
                        .get(&(task.clone(), Scheme::Copyqnn, rr_label(*rr), rounds))
                        .map(|v| v.0)
                }));
                (task, cells)
            })
            .collect();
        let mut seeds: Vec<u64> = table.rows.iter().map(|r| r.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        Self {
            columns,
            rows,
            seeds: seeds.len(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["task".to_string()];
        header.extend(self.columns.iter().cloned());
        header.push("status".into());
        w.write_record(&header)?;
        let status = if self.seeds >= 3 { "verified" } else { "unverified" };
        for (task, cells) in &self.rows {
            let mut rec = vec![task.clone()];
            rec.extend(cells.iter().map(|c| c.map_or(String::new(), |v| format!("{v:.4}"))));
            rec.push(status.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Victim accuracy at one hour of the day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourPoint {
    pub task: String,
    pub seed: u64,
    pub hour: f64,
    pub accuracy: f64,
}

/// Cross-round variance of one queried sample and whether its derived label is right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariancePoint {
    pub task: String,
    pub seed: u64,
    pub sample_index: usize,
    pub score: f64,
    pub correct: bool,
}

/// One epoch of a named training curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub task: String,
    pub seed: u64,
    pub series: String,
    pub epoch: usize,
    pub loss: f64,
}

/// Everything the harness reports for a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub table: ResultTable,
    pub hours: Vec<HourPoint>,
    pub variances: Vec<VariancePoint>,
    pub curves: Vec<CurvePoint>,
}

impl RunReport {
    pub fn merge(&mut self, other: RunReport) {
        self.table.extend(other.table);
        self.hours.extend(other.hours);
        self.variances.extend(other.variances);
        self.curves.extend(other.curves);
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Histogram of variance scores with one count series per label correctness.
pub fn variance_histogram(points: &[VariancePoint], bins: usize) -> Vec<(f64, f64, usize, usize)> {
    if points.is_empty() || bins == 0 {
        return Vec::new();
    }
    let max = points.iter().map(|p| p.score).fold(0.0, f64::max);
    let width = if max > 0.0 { max / bins as f64 } else { 1.0 };
    let mut out: Vec<(f64, f64, usize, usize)> =
        (0..bins).map(|b| (b as f64 * width, (b + 1) as f64 * width, 0, 0)).collect();
    for p in points {
        let b = ((p.score / width) as usize).min(bins - 1);
        if p.correct {
            out[b].2 += 1;
        } else {
            out[b].3 += 1;
        }
    }
    out
}

/// Paths of the files written by [`emit_reports`].
#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub results: PathBuf,
    pub table3: PathBuf,
    pub accuracy_vs_hour: PathBuf,
    pub loss_curves: PathBuf,
    pub variance_histogram: PathBuf,
    pub variance_points: PathBuf,
}

/// Writes results.csv, the RR matrix and the plot-data series into `dir`.
pub fn emit_reports(report: &RunReport, rr_grid: &[f64], rounds: usize, dir: impl AsRef<Path>) -> Result<ReportFiles> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let files = ReportFiles {
        results: dir.join("results.csv"),
        table3: dir.join("rr_matrix.csv"),
        accuracy_vs_hour: dir.join("accuracy_vs_hour.csv"),
        loss_curves: dir.join("loss_curves.csv"),
        variance_histogram: dir.join("variance_histogram.csv"),
        variance_points: dir.join("variance_points.csv"),
    };
    report.table.write_csv(BufWriter::new(File::create(&files.results)?))?;
    Table3::from_table(&report.table, rr_grid, rounds).write_csv(BufWriter::new(File::create(&files.table3)?))?;
    write_rows(&files.accuracy_vs_hour, &report.hours)?;
    write_rows(&files.loss_curves, &report.curves)?;
    write_rows(&files.variance_points, &report.variances)?;

    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&files.variance_histogram)?));
    w.write_record(["bin_lo", "bin_hi", "correct", "mislabeled"])?;
    for (lo, hi, c, m) in variance_histogram(&report.variances, 20) {
        w.write_record([lo.to_string(), hi.to_string(), c.to_string(), m.to_string()])?;
    }
    w.flush()?;
    Ok(files)
}

/// Loads a previously written results.csv and re-emits the derived reports.
pub fn report_from_dir(dir: impl AsRef<Path>, rr_grid: &[f64], rounds: usize) -> Result<ResultTable> {
    let dir = dir.as_ref();
    let path = dir.join("results.csv");
    if !path.exists() {
        return Err(Error::Argument(format!("{} does not exist", path.display())));
    }
    let table = ResultTable::load(&path)?;
    Table3::from_table(&table, rr_grid, rounds).write_csv(BufWriter::new(File::create(dir.join("rr_matrix.csv"))?))?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(task: &str, scheme: Scheme, rr: f64, seed: u64, acc: f64) -> ResultRow {
        ResultRow {
            task: task.into(),
            scheme,
            rr,
            rounds: 5,
            seed,
            accuracy: acc,
            clean_fraction: 0.9,
            query_labels: 200,
        }
    }

    fn table() -> ResultTable {
        let mut rows = Vec::new();
        for seed in 0..3 {
            rows.push(row("m01", Scheme::Base, 1.0, seed, 0.8));
            rows.push(row("m01", Scheme::Qleak, 1.0, seed, 0.7 + 0.1 / 3.0));
            for k in 1..=10 {
                rows.push(row("m01", Scheme::Copyqnn, k as f64 / 10.0, seed, 0.5 + k as f64 * 0.01 + seed as f64 * 1e-3));
            }
        }
        ResultTable { rows }
    }

    #[test]
    fn csv_round_trips_exactly() {
        let t = table();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = ResultTable::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn matrix_has_baselines_and_ten_ratios() {
        let rr: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
        let m = Table3::from_table(&table(), &rr, 5);
        assert_eq!(m.columns.len(), 12);
        assert_eq!(m.columns[0], "Base");
        assert_eq!(m.columns[1], "QLeak");
        assert_eq!(m.columns[11], "RR=1.0");
        assert!((m.rows[0].1[0].unwrap() - 0.8).abs() < 1e-12);
        assert!((m.rows[0].1[7].unwrap() - (0.56 + 1e-3)).abs() < 1e-12);
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().ends_with(",verified"));
    }

    #[test]
    fn single_seed_is_unverified() {
        let t = ResultTable { rows: vec![row("f23", Scheme::Base, 1.0, 0, 0.5)] };
        let mut buf = Vec::new();
        Table3::from_table(&t, &[0.6], 5).write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("unverified"));
    }

    #[test]
    fn histogram_splits_by_correctness() {
        let pts: Vec<VariancePoint> = (0..10)
            .map(|i| VariancePoint {
                task: "m01".into(),
                seed: 0,
                sample_index: i,
                score: i as f64,
                correct: i >= 3,
            })
            .collect();
        let h = variance_histogram(&pts, 3);
        assert_eq!(h.len(), 3);
        assert_eq!(h.iter().map(|b| b.2).sum::<usize>(), 7);
        assert_eq!(h.iter().map(|b| b.3).sum::<usize>(), 3);
        assert_eq!(h[0].3, 3);
    }

    #[test]
    fn emitted_files_exist() {
        let dir = tempfile::tempdir().unwrap();
        let report = RunReport { table: table(), ..Default::default() };
        let files = emit_reports(&report, &[0.6, 1.0], 5, dir.path()).unwrap();
        let text = fs::read_to_string(&files.variance_histogram).unwrap();
        assert_eq!(text.lines().next().unwrap(), "bin_lo,bin_hi,correct,mislabeled");
        let back = report_from_dir(dir.path(), &[0.6, 1.0], 5).unwrap();
        assert_eq!(back, report.table);
    }
}
