//! Tail samples per centroid: negative distances to samples outside the
//! centroid's group, reduced either to block maxima or to threshold excesses.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::{euclidean, sq_euclidean, Matrix};
use crate::scalar::Scalar;

/// Nearest-centroid membership of every sample (the groups `G_1..G_k`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupAssignment {
    pub groups: Vec<usize>,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmmConfig {
    pub block_size: usize,
}

impl Default for BmmConfig {
    fn default() -> Self {
        Self { block_size: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotConfig {
    /// Fraction of observations treated as the upper tail.
    pub alpha: f64,
}

impl Default for PotConfig {
    fn default() -> Self {
        Self { alpha: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailSample<T> {
    pub values: Vec<T>,
    /// Threshold `u` for excesses; zero for block maxima.
    pub threshold: T,
}

impl<T> TailSample<T> {
    pub fn count(&self) -> usize {
        self.values.len()
    }
}

/// Index of the nearest centroid to `x`, ties to the lowest index.
pub fn nearest<T: Scalar>(x: &[T], centroids: &Matrix<T>) -> usize {
    let mut best = 0;
    let mut best_d = T::infinity();
    for (j, c) in centroids.iter_rows().enumerate() {
        let d = sq_euclidean(x, c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

pub fn assign_groups<T: Scalar>(data: &Dataset<T>, centroids: &Matrix<T>) -> Result<GroupAssignment> {
    if centroids.rows() == 0 {
        return Err(Error::InvalidInput("at least one centroid is required".into()));
    }
    if centroids.cols() != data.d() {
        return Err(Error::DimensionMismatch { expected: data.d(), got: centroids.cols() });
    }
    let groups = data.x.iter_rows().map(|x| nearest(x, centroids)).collect();
    Ok(GroupAssignment { groups, k: centroids.rows() })
}

/// `-||x_i - centroid||` for every sample outside group `j`, in sample order.
pub fn neg_out_of_group_distances<T: Scalar>(
    data: &Dataset<T>,
    centroid: &[T],
    groups: &GroupAssignment,
    j: usize,
) -> Result<Vec<T>> {
    if centroid.len() != data.d() {
        return Err(Error::DimensionMismatch { expected: data.d(), got: centroid.len() });
    }
    let out: Vec<T> = data
        .x
        .iter_rows()
        .zip(&groups.groups)
        .filter(|&(_, &g)| g != j)
        .map(|(x, _)| -euclidean(x, centroid))
        .collect();
    if out.is_empty() {
        return Err(Error::EmptyTail(format!("every sample belongs to group {j}")));
    }
    Ok(out)
}

fn check_block_size(cfg: &BmmConfig) -> Result<()> {
    if cfg.block_size == 0 {
        return Err(Error::InvalidInput("block size must be at least 1".into()));
    }
    Ok(())
}

/// Maximum of each consecutive block of `block_size` values; the last block may be short.
pub fn block_maxima_ordered<T: Scalar>(values: &[T], cfg: &BmmConfig) -> Result<TailSample<T>> {
    check_block_size(cfg)?;
    if values.is_empty() {
        return Err(Error::EmptyTail("no values to block".into()));
    }
    let maxima = values
        .chunks(cfg.block_size)
        .map(|b| b.iter().copied().fold(T::neg_infinity(), T::max))
        .collect();
    Ok(TailSample { values: maxima, threshold: T::zero() })
}

/// Shuffles `values` with `rng`, then takes block maxima.
pub fn block_maxima<T: Scalar, R: Rng + ?Sized>(values: &[T], cfg: &BmmConfig, rng: &mut R) -> Result<TailSample<T>> {
    let mut shuffled = values.to_vec();
    shuffled.shuffle(rng);
    block_maxima_ordered(&shuffled, cfg)
}

/// Rank (1-based, from the top) of the threshold element for `len` values.
pub fn threshold_rank(len: usize, alpha: f64) -> usize {
    ((alpha * len as f64).ceil() as usize).clamp(1, len)
}

/// Excesses over the `ceil(alpha * len)`-th largest value; only values strictly above it count.
pub fn pot_excesses<T: Scalar>(values: &[T], cfg: &PotConfig) -> Result<TailSample<T>> {
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {}", cfg.alpha)));
    }
    if values.is_empty() {
        return Err(Error::EmptyTail("no values to threshold".into()));
    }
    let rank = threshold_rank(values.len(), cfg.alpha);
    let mut sorted = values.to_vec();
    let (_, u, _) = sorted.select_nth_unstable_by(rank - 1, |a, b| b.partial_cmp(a).unwrap());
    let u = *u;
    let excesses: Vec<T> = values.iter().filter(|&&v| v > u).map(|&v| v - u).collect();
    if excesses.is_empty() {
        return Err(Error::EmptyTail("no value exceeds the threshold".into()));
    }
    Ok(TailSample { values: excesses, threshold: u })
}
