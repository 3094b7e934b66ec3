//! External (ACC, NMI, ARI) and internal (silhouette) clustering indices,
//! plus Q-Q diagnostics for fitted tails.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::cluster::TailFit;
use crate::data::Dataset;
use crate::dist::TailDistribution;
use crate::error::{Error, Result};
use crate::matrix::{euclidean, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
    pub silhouette: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QqDiagnostic<T> {
    /// `(empirical, theoretical)` quantile pairs in ascending empirical order.
    pub points: Vec<(T, T)>,
    pub correlation: T,
}

/// Minimum-cost assignment for a square cost matrix; `result[row] = column`.
pub fn hungarian<T: Scalar>(cost: &Matrix<T>) -> Result<Vec<usize>> {
    let n = cost.rows();
    if cost.cols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: cost.cols() });
    }
    if !cost.is_finite() {
        return Err(Error::InvalidInput("cost matrix must be finite".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    // shortest augmenting path with row/column potentials, 1-based with a sentinel column 0
    let inf = T::infinity();
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost.get(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] = u[p[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    Ok(assignment)
}

/// Relabels arbitrary label values to `0..m` in order of appearance.
fn dense(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = HashMap::new();
    let out = labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect();
    (out, map.len())
}

struct Contingency {
    table: Vec<Vec<usize>>,
    rows: Vec<usize>,
    cols: Vec<usize>,
    n: usize,
}

fn contingency(truth: &[usize], pred: &[usize]) -> Result<Contingency> {
    if truth.len() != pred.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), got: pred.len() });
    }
    if truth.is_empty() {
        return Err(Error::InvalidInput("labelings must be non-empty".into()));
    }
    let (t, kt) = dense(truth);
    let (p, kp) = dense(pred);
    let mut table = vec![vec![0usize; kp]; kt];
    for (&a, &b) in t.iter().zip(&p) {
        table[a][b] += 1;
    }
    let rows = table.iter().map(|r| r.iter().sum()).collect();
    let cols = (0..kp).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    Ok(Contingency { table, rows, cols, n: truth.len() })
}

/// Best-matching accuracy over one-to-one cluster-to-class mappings.
pub fn acc(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let c = contingency(truth, pred)?;
    let size = c.rows.len().max(c.cols.len());
    let mut cost = Matrix::<f64>::zeros(size, size);
    for (i, row) in c.table.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            cost.set(i, j, -(v as f64));
        }
    }
    let assignment = hungarian(&cost)?;
    let matched: f64 = assignment.iter().enumerate().map(|(i, &j)| -cost.get(i, j)).sum();
    Ok(matched / c.n as f64)
}

fn comb2(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Adjusted Rand index.
pub fn ari(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let c = contingency(truth, pred)?;
    let index: f64 = c.table.iter().flatten().map(|&v| comb2(v)).sum();
    let a: f64 = c.rows.iter().map(|&v| comb2(v)).sum();
    let b: f64 = c.cols.iter().map(|&v| comb2(v)).sum();
    let pairs = comb2(c.n);
    if pairs == 0.0 {
        return Ok(1.0);
    }
    let expected = a * b / pairs;
    let max = (a + b) / 2.0;
    if max == expected {
        // both labelings are all-singletons or both a single cluster
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

fn entropy(counts: &[usize], n: usize) -> f64 {
    let n = n as f64;
    counts.iter().filter(|&&c| c > 0).map(|&c| {
        let p = c as f64 / n;
        -p * p.ln()
    }).sum()
}

/// Normalized mutual information, arithmetic-mean normalization.
pub fn nmi(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let c = contingency(truth, pred)?;
    let n = c.n as f64;
    let mut mi = 0.0;
    for (i, row) in c.table.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v > 0 {
                let v = v as f64;
                mi += v / n * (n * v / (c.rows[i] as f64 * c.cols[j] as f64)).ln();
            }
        }
    }
    let norm = 0.5 * (entropy(&c.rows, c.n) + entropy(&c.cols, c.n));
    if norm <= 0.0 {
        return Ok(1.0);
    }
    Ok((mi / norm).clamp(0.0, 1.0))
}

/// Mean silhouette width. Samples in singleton clusters score 0, and a labeling
/// with fewer than two non-empty clusters scores 0.
pub fn silhouette<T: Scalar>(data: &Dataset<T>, labels: &[usize]) -> Result<T> {
    if labels.len() != data.n() {
        return Err(Error::DimensionMismatch { expected: data.n(), got: labels.len() });
    }
    let (dense_labels, k) = dense(labels);
    if k < 2 {
        return Ok(T::zero());
    }
    let mut sizes = vec![0usize; k];
    dense_labels.iter().for_each(|&l| sizes[l] += 1);

    let scores: Vec<T> = (0..data.n())
        .into_par_iter()
        .map(|i| {
            let own = dense_labels[i];
            if sizes[own] < 2 {
                return T::zero();
            }
            let xi = data.x.row(i);
            let mut sums = vec![T::zero(); k];
            for (j, xj) in data.x.iter_rows().enumerate() {
                if j != i {
                    sums[dense_labels[j]] = sums[dense_labels[j]] + euclidean(xi, xj);
                }
            }
            let a = sums[own] / T::count(sizes[own] - 1);
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| sums[c] / T::count(sizes[c]))
                .fold(T::infinity(), T::min);
            let m = a.max(b);
            if m > T::zero() { (b - a) / m } else { T::zero() }
        })
        .collect();
    Ok(scores.into_iter().sum::<T>() / T::count(data.n()))
}

/// All four indices for a labelled dataset.
pub fn evaluate<T: Scalar>(data: &Dataset<T>, pred: &[usize]) -> Result<MetricReport> {
    let truth = data
        .y
        .as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("dataset {} has no ground-truth labels", data.name)))?;
    Ok(MetricReport {
        acc: acc(truth, pred)?,
        nmi: nmi(truth, pred)?,
        ari: ari(truth, pred)?,
        silhouette: silhouette(data, pred)?.as_f64(),
    })
}

fn pearson<T: Scalar>(pairs: &[(T, T)]) -> T {
    let n = T::count(pairs.len());
    let mx = pairs.iter().map(|p| p.0).sum::<T>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for &(x, y) in pairs {
        sxy = sxy + (x - mx) * (y - my);
        sxx = sxx + (x - mx) * (x - mx);
        syy = syy + (y - my) * (y - my);
    }
    let denom = (sxx * syy).sqrt();
    if denom > T::zero() { (sxy / denom).max(-T::one()).min(T::one()) } else { T::zero() }
}

/// Sorted sample against `dist` quantiles at plotting positions `(i - 0.5) / n`.
pub fn qq_diagnostic<T: Scalar, D: TailDistribution<T>>(samples: &[T], dist: &D) -> Result<QqDiagnostic<T>> {
    if samples.len() < 3 {
        return Err(Error::InvalidInput(format!("Q-Q diagnostic needs at least 3 samples, got {}", samples.len())));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = T::count(sorted.len());
    let points = sorted
        .into_iter()
        .enumerate()
        .map(|(i, e)| {
            let q = (T::count(i) + T::of(0.5)) / n;
            dist.quantile(q).map(|t| (e, t))
        })
        .collect::<Result<Vec<_>>>()?;
    let correlation = pearson(&points);
    Ok(QqDiagnostic { points, correlation })
}

/// Q-Q diagnostic of a cluster's tail sample against its own fitted model.
pub fn qq_for_tail<T: Scalar>(tail: &TailFit<T>) -> Result<QqDiagnostic<T>> {
    match tail {
        TailFit::Gev { fit, sample } => qq_diagnostic(sample, &fit.params),
        TailFit::Gpd { fit, sample, .. } => qq_diagnostic(sample, &fit.params),
        TailFit::Nearest => Err(Error::InvalidInput("cluster has no fitted tail".into())),
    }
}
