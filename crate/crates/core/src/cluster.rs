//! Lloyd's k-means and the extreme-value variants.
//!
//! The GEV and GPD variants fit, for every centroid, a tail model to the negative
//! distances between that centroid and the samples outside its nearest-centroid
//! group. A sample's *covering probability* for cluster `j` is the fitted CDF at
//! `-||x - theta_j||`; samples go to the cluster with the largest one and centroids
//! move to the mean of their members, as in Lloyd's iteration.

use std::time::{Duration, Instant};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::Dataset;
use crate::dist::{GevParams, GpdParams, TailDistribution};
use crate::error::{Error, Result};
use crate::fit::{fit_gev, fit_gpd, FitOptions, FitReport};
use crate::matrix::{euclidean, sq_euclidean, Matrix};
use crate::scalar::Scalar;
use crate::tail::{
    assign_groups, block_maxima, nearest, neg_out_of_group_distances, pot_excesses, BmmConfig, GroupAssignment,
    PotConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    /// Nearest-centroid assignment (Lloyd's k-means).
    Plain,
    /// Block maxima with a GEV tail per cluster.
    Gev,
    /// Threshold excesses with a GPD tail per cluster.
    Gpd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    Random,
    KMeansPlusPlus,
}

/// Fitted tail model of one cluster.
#[derive(Debug, Clone, PartialEq)]
pub enum TailFit<T> {
    Gev {
        fit: FitReport<GevParams<T>>,
        /// The block maxima the model was fitted to.
        sample: Vec<T>,
    },
    Gpd {
        fit: FitReport<GpdParams<T>>,
        threshold: T,
        /// Fitted excess model shifted by the threshold, on the raw negative-distance axis.
        covering: GpdParams<T>,
        /// The excesses the model was fitted to.
        sample: Vec<T>,
    },
    /// No out-of-group samples this iteration; probability decays with distance.
    Nearest,
}

impl<T: Scalar> TailFit<T> {
    pub fn gpd(fit: FitReport<GpdParams<T>>, threshold: T, sample: Vec<T>) -> Result<Self> {
        let covering = fit.params.with_location(threshold + fit.params.mu())?;
        Ok(TailFit::Gpd { fit, threshold, covering, sample })
    }

    /// Covering probability of a point at distance `dist` from the centroid.
    pub fn probability(&self, dist: T) -> T {
        match self {
            TailFit::Gev { fit, .. } => fit.params.cdf(-dist),
            TailFit::Gpd { covering, .. } => covering.cdf(-dist),
            TailFit::Nearest => (-dist).exp(),
        }
    }

    pub fn sample(&self) -> Option<&[T]> {
        match self {
            TailFit::Gev { sample, .. } | TailFit::Gpd { sample, .. } => Some(sample),
            TailFit::Nearest => None,
        }
    }

    fn optimizer_failed(&self) -> bool {
        match self {
            TailFit::Gev { fit, .. } => fit.optimizer_failed,
            TailFit::Gpd { fit, .. } => fit.optimizer_failed,
            TailFit::Nearest => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel<T> {
    pub centroids: Matrix<T>,
    /// One entry per cluster; empty for [`Kind::Plain`].
    pub tails: Vec<TailFit<T>>,
    pub kind: Kind,
}

impl<T: Scalar> ClusterModel<T> {
    pub fn k(&self) -> usize {
        self.centroids.rows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub k: usize,
    pub init: Init,
    /// Stop once no centroid moves farther than this.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub bmm: BmmConfig,
    pub pot: PotConfig,
    pub fit: FitOptions,
}

impl RunConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            init: Init::KMeansPlusPlus,
            tol: 1e-6,
            max_iter: 100,
            seed: 0,
            bmm: BmmConfig::default(),
            pot: PotConfig::default(),
            fit: FitOptions::default(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        if n < self.k {
            return Err(Error::InvalidInput(format!("need at least k={} samples, got {n}", self.k)));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::InvalidInput("tol must be non-negative".into()));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidInput("max_iter must be at least 1".into()));
        }
        if self.bmm.block_size < 1 {
            return Err(Error::InvalidInput("block size must be at least 1".into()));
        }
        if !(self.pot.alpha > 0.0 && self.pot.alpha < 1.0) {
            return Err(Error::InvalidInput("alpha must lie in (0, 1)".into()));
        }
        self.fit.validate()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IterationTiming {
    pub mle: Duration,
    pub cluster: Duration,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timings {
    /// Wall time spent in maximum-likelihood fits.
    pub mle_total: Duration,
    /// Wall time spent everywhere else (distances, tail extraction, assignment, update).
    pub cluster_total: Duration,
    pub per_iteration: Vec<IterationTiming>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterOutcome<T> {
    pub model: ClusterModel<T>,
    pub labels: Vec<usize>,
    /// Objective after each assignment step: within-cluster sum of squares for
    /// plain k-means, sum of negative covering probabilities otherwise.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub timings: Timings,
}

fn check_k<T: Scalar>(data: &Dataset<T>, k: usize) -> Result<()> {
    if k < 1 || data.n() < k {
        return Err(Error::InvalidInput(format!("need n >= k >= 1, got n={} k={k}", data.n())));
    }
    Ok(())
}

/// `k` distinct sample rows drawn uniformly without replacement.
pub fn init_random<T: Scalar, R: Rng + ?Sized>(data: &Dataset<T>, k: usize, rng: &mut R) -> Result<Matrix<T>> {
    check_k(data, k)?;
    let idx = index::sample(rng, data.n(), k).into_vec();
    Ok(data.x.select_rows(&idx))
}

/// k-means++ seeding (D²-sampling).
pub fn init_kmeanspp<T: Scalar, R: Rng + ?Sized>(data: &Dataset<T>, k: usize, rng: &mut R) -> Result<Matrix<T>> {
    check_k(data, k)?;
    let n = data.n();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = data.x.iter_rows().map(|x| sq_euclidean(x, data.x.row(chosen[0])).as_f64()).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let r = rng.random::<f64>() * total;
            let mut cum = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                cum += w;
                if cum > r && w > 0.0 {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave r at the very top of the range
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).expect("total > 0"))
        } else {
            rng.random_range(0..n)
        };
        chosen.push(pick);
        let c = data.x.row(pick);
        for (w, x) in d2.iter_mut().zip(data.x.iter_rows()) {
            *w = w.min(sq_euclidean(x, c).as_f64());
        }
    }
    Ok(data.x.select_rows(&chosen))
}

/// Covering probability of `x` for cluster `j`.
pub fn covering_probability<T: Scalar>(model: &ClusterModel<T>, j: usize, x: &[T]) -> Result<T> {
    if model.kind == Kind::Plain {
        return Err(Error::InvalidInput("plain k-means has no covering probability".into()));
    }
    let tail = model
        .tails
        .get(j)
        .ok_or_else(|| Error::InvalidInput(format!("cluster index {j} out of range")))?;
    if x.len() != model.centroids.cols() {
        return Err(Error::DimensionMismatch { expected: model.centroids.cols(), got: x.len() });
    }
    Ok(tail.probability(euclidean(x, model.centroids.row(j))))
}

/// Label and covering probability (or squared distance for plain) of one sample.
fn assign_one<T: Scalar>(model: &ClusterModel<T>, x: &[T]) -> (usize, T) {
    if model.kind == Kind::Plain {
        let j = nearest(x, &model.centroids);
        return (j, sq_euclidean(x, model.centroids.row(j)));
    }
    let mut best = 0;
    let mut best_p = T::neg_infinity();
    let mut best_d = T::infinity();
    for (j, (c, tail)) in model.centroids.iter_rows().zip(&model.tails).enumerate() {
        let d = euclidean(x, c);
        let p = tail.probability(d);
        // equal probabilities (including all-saturated rows) go to the nearer centroid
        if p > best_p || (p == best_p && d < best_d) {
            best = j;
            best_p = p;
            best_d = d;
        }
    }
    (best, best_p)
}

/// Assigns every sample to the cluster of maximal covering probability
/// (nearest centroid for [`Kind::Plain`]).
pub fn assign_labels<T: Scalar>(model: &ClusterModel<T>, data: &Dataset<T>) -> Vec<usize> {
    assign_with_scores(model, data).0
}

fn assign_with_scores<T: Scalar>(model: &ClusterModel<T>, data: &Dataset<T>) -> (Vec<usize>, Vec<T>) {
    (0..data.n()).into_par_iter().map(|i| assign_one(model, data.x.row(i))).unzip()
}

fn means<T: Scalar>(data: &Dataset<T>, labels: &[usize], k: usize) -> (Matrix<T>, Vec<usize>) {
    let mut sums = Matrix::zeros(k, data.d());
    let mut counts = vec![0usize; k];
    for (x, &l) in data.x.iter_rows().zip(labels) {
        counts[l] += 1;
        for (s, &v) in sums.row_mut(l).iter_mut().zip(x) {
            *s = *s + v;
        }
    }
    for (j, &c) in counts.iter().enumerate() {
        if c > 0 {
            let inv = T::count(c).recip();
            sums.row_mut(j).iter_mut().for_each(|s| *s = *s * inv);
        }
    }
    (sums, counts)
}

/// Moves each centroid to the mean of its samples.
///
/// An empty cluster takes over the sample farthest from its own cluster's mean
/// (among clusters with at least two members); that sample is relabelled.
pub fn update_centroids<T: Scalar>(data: &Dataset<T>, labels: &mut [usize], k: usize) -> Matrix<T> {
    let (mut centroids, mut counts) = means(data, labels, k);
    while let Some(empty) = counts.iter().position(|&c| c == 0) {
        let mut far = None;
        let mut far_d = T::neg_infinity();
        for (i, x) in data.x.iter_rows().enumerate() {
            if counts[labels[i]] < 2 {
                continue;
            }
            let d = sq_euclidean(x, centroids.row(labels[i]));
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let Some(i) = far else { break };
        labels[i] = empty;
        (centroids, counts) = means(data, labels, k);
    }
    centroids
}

/// Within-cluster sum of squared distances.
pub fn kmeans_objective<T: Scalar>(data: &Dataset<T>, centroids: &Matrix<T>, labels: &[usize]) -> f64 {
    data.x
        .iter_rows()
        .zip(labels)
        .map(|(x, &l)| sq_euclidean(x, centroids.row(l)))
        .sum::<T>()
        .as_f64()
}

/// Sum of negative covering probabilities of every sample for its own cluster.
pub fn objective_j_prime<T: Scalar>(model: &ClusterModel<T>, data: &Dataset<T>, labels: &[usize]) -> Result<f64> {
    if labels.len() != data.n() {
        return Err(Error::DimensionMismatch { expected: data.n(), got: labels.len() });
    }
    let mut total = T::zero();
    for (x, &l) in data.x.iter_rows().zip(labels) {
        total = total - covering_probability(model, l, x)?;
    }
    Ok(total.as_f64())
}

fn max_movement<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> f64 {
    a.iter_rows().zip(b.iter_rows()).map(|(x, y)| euclidean(x, y).as_f64()).fold(0.0, f64::max)
}

fn initial_centroids<T: Scalar>(data: &Dataset<T>, cfg: &RunConfig) -> Result<Matrix<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    match cfg.init {
        Init::Random => init_random(data, cfg.k, &mut rng),
        Init::KMeansPlusPlus => init_kmeanspp(data, cfg.k, &mut rng),
    }
}

/// Lloyd's algorithm.
pub fn lloyd_kmeans<T: Scalar>(data: &Dataset<T>, cfg: &RunConfig) -> Result<ClusterOutcome<T>> {
    run(data, cfg, Kind::Plain)
}

/// k-means with a GEV model of each centroid's block-maximum negative distances.
pub fn gev_kmeans<T: Scalar>(data: &Dataset<T>, cfg: &RunConfig) -> Result<ClusterOutcome<T>> {
    run(data, cfg, Kind::Gev)
}

/// k-means with a GPD model of each centroid's negative-distance threshold excesses.
pub fn gpd_kmeans<T: Scalar>(data: &Dataset<T>, cfg: &RunConfig) -> Result<ClusterOutcome<T>> {
    run(data, cfg, Kind::Gpd)
}

/// Builds the tail sample of cluster `j` (no fitting yet).
enum Pending<T> {
    Block(Vec<T>),
    Excess { values: Vec<T>, threshold: T },
    Empty,
}

fn extract<T: Scalar>(
    data: &Dataset<T>,
    centroids: &Matrix<T>,
    groups: &GroupAssignment,
    j: usize,
    kind: Kind,
    cfg: &RunConfig,
    iteration: usize,
) -> Result<Pending<T>> {
    let neg = match neg_out_of_group_distances(data, centroids.row(j), groups, j) {
        Ok(v) => v,
        Err(Error::EmptyTail(_)) => return Ok(Pending::Empty),
        Err(e) => return Err(e),
    };
    let tail = match kind {
        Kind::Gev => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(1 + (iteration * cfg.k + j) as u64);
            block_maxima(&neg, &cfg.bmm, &mut rng).map(|t| Pending::Block(t.values))
        }
        Kind::Gpd => pot_excesses(&neg, &cfg.pot).map(|t| Pending::Excess { values: t.values, threshold: t.threshold }),
        Kind::Plain => unreachable!("plain k-means has no tails"),
    };
    match tail {
        Err(Error::EmptyTail(_)) => Ok(Pending::Empty),
        other => other,
    }
}

fn fit_tail<T: Scalar>(pending: Pending<T>, opts: &FitOptions) -> Result<TailFit<T>> {
    match pending {
        Pending::Block(sample) => Ok(TailFit::Gev { fit: fit_gev(&sample, opts)?, sample }),
        Pending::Excess { values, threshold } => TailFit::gpd(fit_gpd(&values, opts)?, threshold, values),
        Pending::Empty => Ok(TailFit::Nearest),
    }
}

/// Runs the iteration for any [`Kind`], seeding centroids per `cfg.init`.
pub fn run<T: Scalar>(data: &Dataset<T>, cfg: &RunConfig, kind: Kind) -> Result<ClusterOutcome<T>> {
    cfg.validate(data.n())?;
    let centroids = initial_centroids(data, cfg)?;
    run_from(data, cfg, kind, centroids)
}

/// Runs the iteration from the given starting centroids (`cfg.init` is ignored).
pub fn run_from<T: Scalar>(
    data: &Dataset<T>,
    cfg: &RunConfig,
    kind: Kind,
    start: Matrix<T>,
) -> Result<ClusterOutcome<T>> {
    cfg.validate(data.n())?;
    if start.rows() != cfg.k || start.cols() != data.d() {
        return Err(Error::DimensionMismatch { expected: cfg.k * data.d(), got: start.rows() * start.cols() });
    }
    let mut centroids = start;
    let mut tails: Vec<TailFit<T>> = Vec::new();
    let mut labels = vec![0usize; data.n()];
    let mut trace = Vec::new();
    let mut timings = Timings::default();
    let mut iterations = 0;

    for iteration in 0..cfg.max_iter {
        let start = Instant::now();
        let mut mle = Duration::ZERO;

        if kind != Kind::Plain {
            let groups = assign_groups(data, &centroids)?;
            let pending: Vec<Pending<T>> = (0..cfg.k)
                .into_par_iter()
                .map(|j| extract(data, &centroids, &groups, j, kind, cfg, iteration))
                .collect::<Result<_>>()?;
            let fit_start = Instant::now();
            tails = pending.into_par_iter().map(|p| fit_tail(p, &cfg.fit)).collect::<Result<_>>()?;
            mle = fit_start.elapsed();
        }

        let model = ClusterModel { centroids, tails, kind };
        let (new_labels, scores) = assign_with_scores(&model, data);
        labels = new_labels;
        let objective = match kind {
            Kind::Plain => scores.iter().copied().sum::<T>().as_f64(),
            _ => -scores.iter().copied().sum::<T>().as_f64(),
        };
        trace.push(objective);
        ClusterModel { centroids, tails, .. } = model;

        let updated = update_centroids(data, &mut labels, cfg.k);
        let moved = max_movement(&centroids, &updated);
        centroids = updated;
        iterations += 1;

        let cluster = start.elapsed().saturating_sub(mle);
        timings.mle_total += mle;
        timings.cluster_total += cluster;
        timings.per_iteration.push(IterationTiming { mle, cluster });
        if moved <= cfg.tol {
            break;
        }
    }

    if kind != Kind::Plain && tails.iter().all(TailFit::optimizer_failed) {
        return Err(Error::Numerical(format!("tail fit failed for all {} clusters", cfg.k)));
    }
    Ok(ClusterOutcome { model: ClusterModel { centroids, tails, kind }, labels, objective_trace: trace, iterations, timings })
}
