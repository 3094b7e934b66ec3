//! Generalized Extreme Value (GEV) and Generalized Pareto (GPD) distributions.
//!
//! Both families share the location/scale/shape parameterisation `(mu, sigma, xi)`
//! and the support constraint `1 + xi * (x - mu) / sigma > 0`. For `|xi| < XI_EPS`
//! the limiting forms are used: Gumbel for the GEV, exponential for the GPD.
//!
//! CDFs saturate to 0 or 1 outside the support; log-densities return `-inf`
//! there, which makes negative log-likelihoods `+inf` and lets a derivative-free
//! optimizer treat the support as a penalty.

use rand::Rng;
use rand_distr::Open01;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Below this shape magnitude the Gumbel / exponential limit is used.
pub const XI_EPS: f64 = 1e-8;

#[inline]
fn is_limit<T: Scalar>(xi: T) -> bool {
    xi.abs() < T::of(XI_EPS)
}

fn validate<T: Scalar>(mu: T, sigma: T, xi: T) -> Result<()> {
    if !(mu.is_finite() && sigma.is_finite() && xi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "parameters must be finite (mu={mu}, sigma={sigma}, xi={xi})"
        )));
    }
    if sigma <= T::zero() {
        return Err(Error::InvalidParameter(format!("scale must be positive, got {sigma}")));
    }
    Ok(())
}

/// Closed interval (possibly unbounded) on which a density is positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: Scalar> Support<T> {
    pub fn contains(&self, x: T) -> bool {
        x >= self.lower && x <= self.upper
    }
}

/// Operations common to both extreme-value families.
pub trait TailDistribution<T: Scalar> {
    fn cdf(&self, x: T) -> T;

    /// Log density; `-inf` outside the support.
    fn log_density(&self, x: T) -> T;

    fn quantile(&self, q: T) -> Result<T>;

    fn support(&self) -> Support<T>;

    /// Sum of point negative log-densities; `+inf` if any point lies outside the support.
    fn neg_log_likelihood(&self, sample: &[T]) -> Result<T> {
        if sample.is_empty() {
            return Err(Error::InvalidInput("likelihood of an empty sample".into()));
        }
        let mut acc = T::zero();
        for &v in sample {
            let ld = self.log_density(v);
            if !ld.is_finite() {
                return Ok(T::infinity());
            }
            acc = acc - ld;
        }
        Ok(acc)
    }

    /// Inverse-transform sampling.
    fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<T> {
        let hi = T::one() - T::epsilon();
        (0..n)
            .map(|_| {
                let u: f64 = rng.sample(Open01);
                let q = T::of(u).max(T::min_positive_value()).min(hi);
                self.quantile(q).expect("q is inside (0, 1)")
            })
            .collect()
    }
}

fn check_prob<T: Scalar>(q: T) -> Result<()> {
    if q > T::zero() && q < T::one() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("probability must lie in (0, 1), got {q}")))
    }
}

/// Generalized Extreme Value distribution, the limit law of block maxima.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GevParams<T> {
    mu: T,
    sigma: T,
    xi: T,
}

impl<T: Scalar> GevParams<T> {
    pub fn new(mu: T, sigma: T, xi: T) -> Result<Self> {
        validate(mu, sigma, xi)?;
        Ok(Self { mu, sigma, xi })
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn xi(&self) -> T {
        self.xi
    }
}

impl<T: Scalar> TailDistribution<T> for GevParams<T> {
    fn cdf(&self, x: T) -> T {
        let z = (x - self.mu) / self.sigma;
        if is_limit(self.xi) {
            return (-(-z).exp()).exp();
        }
        let s = self.support();
        if x <= s.lower {
            return T::zero();
        }
        if x >= s.upper {
            return T::one();
        }
        let t = self.xi * z;
        if t <= -T::one() {
            return if self.xi > T::zero() { T::zero() } else { T::one() };
        }
        (-(-t.ln_1p() / self.xi).exp()).exp()
    }

    fn log_density(&self, x: T) -> T {
        let z = (x - self.mu) / self.sigma;
        let log_sigma = self.sigma.ln();
        if is_limit(self.xi) {
            return -log_sigma - z - (-z).exp();
        }
        let t = self.xi * z;
        if t <= -T::one() {
            return T::neg_infinity();
        }
        let l = t.ln_1p();
        -log_sigma - (T::one() + self.xi.recip()) * l - (-l / self.xi).exp()
    }

    fn quantile(&self, q: T) -> Result<T> {
        check_prob(q)?;
        let w = -q.ln();
        if is_limit(self.xi) {
            return Ok(self.mu - self.sigma * w.ln());
        }
        Ok(self.mu + self.sigma / self.xi * (-self.xi * w.ln()).exp_m1())
    }

    fn support(&self) -> Support<T> {
        if is_limit(self.xi) {
            return Support { lower: T::neg_infinity(), upper: T::infinity() };
        }
        let end = self.mu - self.sigma / self.xi;
        if self.xi > T::zero() {
            Support { lower: end, upper: T::infinity() }
        } else {
            Support { lower: T::neg_infinity(), upper: end }
        }
    }
}

/// Generalized Pareto distribution, the limit law of threshold excesses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpdParams<T> {
    mu: T,
    sigma: T,
    xi: T,
}

impl<T: Scalar> GpdParams<T> {
    pub fn new(mu: T, sigma: T, xi: T) -> Result<Self> {
        validate(mu, sigma, xi)?;
        Ok(Self { mu, sigma, xi })
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn xi(&self) -> T {
        self.xi
    }

    /// Same scale and shape, location moved to `mu`.
    pub fn with_location(&self, mu: T) -> Result<Self> {
        Self::new(mu, self.sigma, self.xi)
    }
}

impl<T: Scalar> TailDistribution<T> for GpdParams<T> {
    fn cdf(&self, x: T) -> T {
        if x < self.mu {
            return T::zero();
        }
        let z = (x - self.mu) / self.sigma;
        if is_limit(self.xi) {
            return -(-z).exp_m1();
        }
        let t = self.xi * z;
        if t <= -T::one() || x >= self.support().upper {
            return T::one();
        }
        -(-t.ln_1p() / self.xi).exp_m1()
    }

    fn log_density(&self, x: T) -> T {
        if x < self.mu {
            return T::neg_infinity();
        }
        let z = (x - self.mu) / self.sigma;
        let log_sigma = self.sigma.ln();
        if is_limit(self.xi) {
            return -log_sigma - z;
        }
        let t = self.xi * z;
        if t <= -T::one() {
            return T::neg_infinity();
        }
        -log_sigma - (T::one() + self.xi.recip()) * t.ln_1p()
    }

    fn quantile(&self, q: T) -> Result<T> {
        check_prob(q)?;
        let log_survival = (-q).ln_1p();
        if is_limit(self.xi) {
            return Ok(self.mu - self.sigma * log_survival);
        }
        Ok(self.mu + self.sigma / self.xi * (-self.xi * log_survival).exp_m1())
    }

    fn support(&self) -> Support<T> {
        if self.xi < T::zero() && !is_limit(self.xi) {
            Support { lower: self.mu, upper: self.mu - self.sigma / self.xi }
        } else {
            Support { lower: self.mu, upper: T::infinity() }
        }
    }
}
