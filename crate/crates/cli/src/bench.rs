//! Repeated runs and the result table.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use evt_kmeans::metrics::{acc, ari, nmi, silhouette};
use evt_kmeans::{run, ClusterOutcome64, Dataset64, RunConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{io_err, CliError, Result};
use crate::options::Algorithm;

/// Wall-clock seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct BenchTimings {
    pub total: f64,
    pub mle_total: f64,
    pub mle_avg: f64,
    pub cluster_total: f64,
    pub cluster_avg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchResult {
    pub algorithm: String,
    pub dataset: String,
    /// Run seed, or `mean` for an average row.
    pub seed: String,
    pub acc: Option<f64>,
    pub nmi: Option<f64>,
    pub ari: Option<f64>,
    pub silhouette: f64,
    /// Final objective: within-cluster sum of squares, or summed negative covering probability.
    pub objective: f64,
    pub iterations: f64,
    pub timings: BenchTimings,
}

pub const HEADER: [&str; 14] = [
    "algorithm",
    "dataset",
    "seed",
    "acc",
    "nmi",
    "ari",
    "silhouette",
    "objective",
    "iterations",
    "total",
    "mle_total",
    "mle_avg",
    "cluster_total",
    "cluster_avg",
];

/// Columns from `total` onwards are wall-clock timings.
pub const TIMING_COLUMNS: usize = 5;

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl BenchResult {
    pub fn fields(&self) -> Vec<String> {
        let t = &self.timings;
        vec![
            self.algorithm.clone(),
            self.dataset.clone(),
            self.seed.clone(),
            opt(self.acc),
            opt(self.nmi),
            opt(self.ari),
            self.silhouette.to_string(),
            self.objective.to_string(),
            self.iterations.to_string(),
            t.total.to_string(),
            t.mle_total.to_string(),
            t.mle_avg.to_string(),
            t.cluster_total.to_string(),
            t.cluster_avg.to_string(),
        ]
    }

    /// Average of `rows`, labelled `mean`.
    pub fn mean(rows: &[BenchResult]) -> BenchResult {
        let n = rows.len() as f64;
        let avg = |f: &dyn Fn(&BenchResult) -> f64| rows.iter().map(f).sum::<f64>() / n;
        let avg_opt = |f: &dyn Fn(&BenchResult) -> Option<f64>| {
            rows.iter().map(f).collect::<Option<Vec<f64>>>().map(|v| v.iter().sum::<f64>() / n)
        };
        BenchResult {
            algorithm: rows[0].algorithm.clone(),
            dataset: rows[0].dataset.clone(),
            seed: "mean".into(),
            acc: avg_opt(&|r| r.acc),
            nmi: avg_opt(&|r| r.nmi),
            ari: avg_opt(&|r| r.ari),
            silhouette: avg(&|r| r.silhouette),
            objective: avg(&|r| r.objective),
            iterations: avg(&|r| r.iterations),
            timings: BenchTimings {
                total: avg(&|r| r.timings.total),
                mle_total: avg(&|r| r.timings.mle_total),
                mle_avg: avg(&|r| r.timings.mle_avg),
                cluster_total: avg(&|r| r.timings.cluster_total),
                cluster_avg: avg(&|r| r.timings.cluster_avg),
            },
        }
    }
}

/// One run plus its evaluation.
pub fn bench_once(data: &Dataset64, algorithm: Algorithm, cfg: &RunConfig) -> Result<(BenchResult, ClusterOutcome64)> {
    let start = Instant::now();
    let out = run(data, cfg, algorithm.kind())?;
    let total = start.elapsed().as_secs_f64();

    let (a, n, r) = match &data.y {
        Some(y) => (Some(acc(y, &out.labels)?), Some(nmi(y, &out.labels)?), Some(ari(y, &out.labels)?)),
        None => (None, None, None),
    };
    let iters = out.iterations.max(1) as f64;
    let mle_total = out.timings.mle_total.as_secs_f64();
    let cluster_total = out.timings.cluster_total.as_secs_f64();
    let result = BenchResult {
        algorithm: algorithm.name().into(),
        dataset: data.name.clone(),
        seed: cfg.seed.to_string(),
        acc: a,
        nmi: n,
        ari: r,
        silhouette: silhouette(data, &out.labels)?,
        objective: out.objective_trace.last().copied().unwrap_or(0.0),
        iterations: out.iterations as f64,
        timings: BenchTimings { total, mle_total, mle_avg: mle_total / iters, cluster_total, cluster_avg: cluster_total / iters },
    };
    Ok((result, out))
}

/// Runs seeds `cfg.seed .. cfg.seed + repeats`; rows come back in seed order.
pub fn bench_repeats(data: &Dataset64, algorithm: Algorithm, cfg: &RunConfig, repeats: usize) -> Result<Vec<BenchResult>> {
    (0..repeats as u64)
        .into_par_iter()
        .map(|i| {
            let cfg = RunConfig { seed: cfg.seed + i, ..cfg.clone() };
            bench_once(data, algorithm, &cfg).map(|(r, _)| r)
        })
        .collect()
}

/// Writes `rows` under `header` to `path`, or to stdout when `path` is `None`.
pub fn write_table(path: Option<&Path>, header: &[&str], rows: &[Vec<String>], delimiter: u8) -> Result<()> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(std::fs::File::create(p).map_err(io_err(p))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let shown = path.map(Path::to_path_buf).unwrap_or_else(|| "<stdout>".into());
    let to_err = |e: csv::Error| CliError::Io { path: shown.clone(), source: e.into() };
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(sink);
    w.write_record(header).map_err(to_err)?;
    for row in rows {
        w.write_record(row).map_err(to_err)?;
    }
    w.flush().map_err(|e| CliError::Io { path: shown.clone(), source: e })
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("summary serializes");
    std::fs::write(path, text + "\n").map_err(io_err(path))
}
