//! Maximum-likelihood fitting of GEV and GPD parameters.
//!
//! The scale is optimized on a log scale. The support constraint and the lower
//! shape bound [`MIN_XI`] are enforced by returning a `+inf` likelihood. Each fit runs
//! the simplex from several deterministic start points and keeps the best.

use crate::dist::{GevParams, GpdParams, TailDistribution};
use crate::error::{Error, Result};
use crate::optim::minimize;
use crate::scalar::Scalar;

/// Smallest scale handed out for degenerate (zero-spread) samples.
pub const SIGMA_FLOOR: f64 = 1e-8;

/// Shapes below this make the likelihood unbounded at the upper endpoint, so the
/// search treats them as infeasible.
pub const MIN_XI: f64 = -1.0;

/// Euler–Mascheroni constant, mean of the standard Gumbel.
const EULER_GAMMA: f64 = 0.5772156649015329;

/// Initial shape and scale multipliers for the first run and each restart.
const START_XI: [f64; 5] = [0.1, -0.1, 0.3, 0.0, -0.3];
const START_SCALE: [f64; 5] = [1.0, 0.8, 1.25, 1.0, 0.6];

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_evals: usize,
    pub ftol: f64,
    pub xtol: f64,
    /// Extra simplex runs from perturbed start points.
    pub restarts: usize,
    /// Below this many observations the closed-form fallback is returned.
    pub min_samples: usize,
    /// Fit GPD excesses with the location pinned at zero.
    pub fix_gpd_location: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_evals: 2000, ftol: 1e-9, xtol: 1e-8, restarts: 3, min_samples: 5, fix_gpd_location: true }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_evals < 1 {
            return Err(Error::InvalidInput("max_evals must be at least 1".into()));
        }
        if !(self.ftol > 0.0 && self.xtol > 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        if self.min_samples < 2 {
            return Err(Error::InvalidInput("min_samples must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport<P> {
    pub params: P,
    pub neg_log_lik: f64,
    pub converged: bool,
    pub evals: usize,
    pub fallback_used: bool,
    /// No start point produced a finite optimum; `params` is the closed-form fallback.
    pub optimizer_failed: bool,
}

fn mean<T: Scalar>(v: &[T]) -> T {
    v.iter().copied().sum::<T>() / T::count(v.len())
}

fn sample_std<T: Scalar>(v: &[T]) -> T {
    if v.len() < 2 {
        return T::zero();
    }
    let m = mean(v);
    let ss: T = v.iter().map(|&x| (x - m) * (x - m)).sum();
    (ss / T::count(v.len() - 1)).sqrt()
}

struct Best<T> {
    x: Vec<T>,
    fx: T,
    converged: bool,
}

/// Runs the simplex from each feasible start and returns the best result plus total evaluations.
fn multistart<T, F>(f: F, starts: &[Vec<T>], opts: &FitOptions) -> (Option<Best<T>>, usize)
where
    T: Scalar,
    F: Fn(&[T]) -> T,
{
    let mut best: Option<Best<T>> = None;
    let mut evals = 0;
    for x0 in starts {
        let Ok(m) = minimize(&f, x0, opts) else {
            evals += 1;
            continue;
        };
        evals += m.evals;
        if !m.fx.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|b| m.fx < b.fx) {
            best = Some(Best { x: m.x, fx: m.fx, converged: m.converged });
        }
    }
    // one more pass from the incumbent with a fresh simplex
    if let Some(b) = best.as_mut() {
        if let Ok(m) = minimize(&f, &b.x, opts) {
            evals += m.evals;
            if m.fx < b.fx {
                *b = Best { x: m.x, fx: m.fx, converged: m.converged };
            } else {
                b.converged |= m.converged;
            }
        }
    }
    (best, evals)
}

fn nll_or_inf<T: Scalar, D: TailDistribution<T>>(d: Result<D>, xi: T, sample: &[T]) -> T {
    if xi < T::of(MIN_XI) {
        return T::infinity();
    }
    match d {
        Ok(d) => d.neg_log_likelihood(sample).unwrap_or(T::infinity()),
        Err(_) => T::infinity(),
    }
}

/// Fits a GPD to threshold excesses.
pub fn fit_gpd<T: Scalar>(y: &[T], opts: &FitOptions) -> Result<FitReport<GpdParams<T>>> {
    opts.validate()?;
    if y.is_empty() {
        return Err(Error::InvalidInput("cannot fit a GPD to an empty sample".into()));
    }
    let floor = T::of(SIGMA_FLOOR);
    let sigma0 = mean(y).max(floor);

    let exponential = |optimizer_failed: bool| -> Result<FitReport<GpdParams<T>>> {
        let params = GpdParams::new(T::zero(), sigma0, T::zero())?;
        let nll = params.neg_log_likelihood(y)?;
        Ok(FitReport {
            params,
            neg_log_lik: nll.as_f64(),
            converged: false,
            evals: 0,
            fallback_used: true,
            optimizer_failed,
        })
    };

    if y.len() < opts.min_samples || mean(y) < floor {
        return exponential(false);
    }

    let n_starts = (opts.restarts + 1).min(START_XI.len());
    let (best, evals) = if opts.fix_gpd_location {
        let f = |p: &[T]| nll_or_inf(GpdParams::new(T::zero(), p[0].exp(), p[1]), p[1], y);
        let starts: Vec<Vec<T>> = (0..n_starts)
            .map(|r| vec![(sigma0 * T::of(START_SCALE[r])).ln(), T::of(START_XI[r])])
            .collect();
        let (best, evals) = multistart(f, &starts, opts);
        (best.map(|b| (T::zero(), b.x[0].exp(), b.x[1], b.fx, b.converged)), evals)
    } else {
        let f = |p: &[T]| nll_or_inf(GpdParams::new(p[0], p[1].exp(), p[2]), p[2], y);
        let starts: Vec<Vec<T>> = (0..n_starts)
            .map(|r| vec![T::zero(), (sigma0 * T::of(START_SCALE[r])).ln(), T::of(START_XI[r])])
            .collect();
        let (best, evals) = multistart(f, &starts, opts);
        (best.map(|b| (b.x[0], b.x[1].exp(), b.x[2], b.fx, b.converged)), evals)
    };

    match best {
        Some((mu, sigma, xi, fx, converged)) => match GpdParams::new(mu, sigma, xi) {
            Ok(params) => Ok(FitReport {
                params,
                neg_log_lik: fx.as_f64(),
                converged,
                evals,
                fallback_used: false,
                optimizer_failed: false,
            }),
            Err(_) => exponential(true),
        },
        None => exponential(true),
    }
}

/// Fits a GEV to block maxima.
pub fn fit_gev<T: Scalar>(m: &[T], opts: &FitOptions) -> Result<FitReport<GevParams<T>>> {
    opts.validate()?;
    if m.is_empty() {
        return Err(Error::InvalidInput("cannot fit a GEV to an empty sample".into()));
    }
    let floor = T::of(SIGMA_FLOOR);
    let avg = mean(m);
    let std = sample_std(m);
    if std.is_nan() || std <= T::zero() {
        let params = GevParams::new(avg, floor, T::zero())?;
        return Ok(FitReport {
            params,
            neg_log_lik: params.neg_log_likelihood(m)?.as_f64(),
            converged: false,
            evals: 0,
            fallback_used: true,
            optimizer_failed: false,
        });
    }
    // moment matching under a Gumbel assumption
    let sigma0 = (T::of(6.0).sqrt() * std / T::PI()).max(floor);
    let mu0 = avg - T::of(EULER_GAMMA) * sigma0;

    let gumbel = |optimizer_failed: bool| -> Result<FitReport<GevParams<T>>> {
        let params = GevParams::new(mu0, sigma0, T::zero())?;
        Ok(FitReport {
            params,
            neg_log_lik: params.neg_log_likelihood(m)?.as_f64(),
            converged: false,
            evals: 0,
            fallback_used: true,
            optimizer_failed,
        })
    };

    if m.len() < opts.min_samples {
        return gumbel(false);
    }

    let f = |p: &[T]| nll_or_inf(GevParams::new(p[0], p[1].exp(), p[2]), p[2], m);
    let n_starts = (opts.restarts + 1).min(START_XI.len());
    let starts: Vec<Vec<T>> = (0..n_starts)
        .map(|r| vec![mu0, (sigma0 * T::of(START_SCALE[r])).ln(), T::of(START_XI[r])])
        .collect();
    let (best, evals) = multistart(f, &starts, opts);
    let Some(best) = best else {
        return gumbel(true);
    };
    match GevParams::new(best.x[0], best.x[1].exp(), best.x[2]) {
        Ok(params) => Ok(FitReport {
            params,
            neg_log_lik: best.fx.as_f64(),
            converged: best.converged,
            evals,
            fallback_used: false,
            optimizer_failed: false,
        }),
        Err(_) => gumbel(true),
    }
}
