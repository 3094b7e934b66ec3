//! Nelder–Mead simplex minimizer.
//!
//! Non-finite objective values are treated as `+inf`, so constraints can be
//! expressed as infinite penalties by the caller.

use std::cell::Cell;

use crate::error::{Error, Result};
use crate::fit::FitOptions;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum<T> {
    pub x: Vec<T>,
    pub fx: T,
    pub evals: usize,
    /// The simplex collapsed below both tolerances before the evaluation budget ran out.
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimizes `f` starting from `x0`.
///
/// Stops once every vertex lies within `xtol` of the best one (per coordinate) and
/// the objective spread is within `ftol * (1 + |f_best|)`, or after `max_evals`
/// evaluations. Deterministic for a given `x0` and options.
pub fn minimize<T, F>(mut f: F, x0: &[T], opts: &FitOptions) -> Result<Minimum<T>>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    let evals = Cell::new(0usize);
    let mut eval = |x: &[T]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() { T::infinity() } else { v }
    };

    let f0 = eval(x0);
    if !f0.is_finite() {
        return Err(Error::Initialization);
    }
    let n = x0.len();
    if n == 0 {
        return Ok(Minimum { x: Vec::new(), fx: f0, evals: 1, converged: true });
    }

    let ftol = T::of(opts.ftol);
    let xtol = T::of(opts.xtol);
    let (rho, chi, gamma, sigma) = (T::of(REFLECT), T::of(EXPAND), T::of(CONTRACT), T::of(SHRINK));

    let mut simplex: Vec<Vec<T>> = Vec::with_capacity(n + 1);
    let mut values: Vec<T> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    values.push(f0);
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] = if v[i] != T::zero() { v[i] * T::of(1.05) } else { T::of(0.00025) };
        values.push(eval(&v));
        simplex.push(v);
    }

    let mut order: Vec<usize> = (0..=n).collect();
    let mut converged = false;
    loop {
        // stable sort keeps ties in vertex order
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        order.iter_mut().enumerate().for_each(|(i, o)| *o = i);

        let best = values[0];
        let f_spread = values.iter().skip(1).fold(T::zero(), |m, &v| m.max((v - best).abs()));
        let x_spread = simplex.iter().skip(1).fold(T::zero(), |m, v| {
            v.iter().zip(&simplex[0]).fold(m, |m, (&a, &b)| m.max((a - b).abs()))
        });
        if best.is_finite() && f_spread <= ftol * (T::one() + best.abs()) && x_spread <= xtol {
            converged = true;
            break;
        }
        if evals.get() >= opts.max_evals {
            break;
        }

        let inv_n = T::count(n).recip();
        let mut centroid = vec![T::zero(); n];
        for v in &simplex[..n] {
            for (c, &x) in centroid.iter_mut().zip(v) {
                *c = *c + x;
            }
        }
        centroid.iter_mut().for_each(|c| *c = *c * inv_n);

        let worst = simplex[n].clone();
        let along = |t: T| -> Vec<T> {
            centroid.iter().zip(&worst).map(|(&c, &w)| c + t * (c - w)).collect()
        };

        let xr = along(rho);
        let fr = eval(&xr);
        if fr < values[0] {
            let xe = along(rho * chi);
            let fe = eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let shrink = if fr < values[n] {
            let xc = along(rho * gamma);
            let fc = eval(&xc);
            if fc <= fr {
                simplex[n] = xc;
                values[n] = fc;
                false
            } else {
                true
            }
        } else {
            let xcc = along(-gamma);
            let fcc = eval(&xcc);
            if fcc < values[n] {
                simplex[n] = xcc;
                values[n] = fcc;
                false
            } else {
                true
            }
        };
        if shrink {
            let head = simplex[0].clone();
            for j in 1..=n {
                for (x, &h) in simplex[j].iter_mut().zip(&head) {
                    *x = h + sigma * (*x - h);
                }
                values[j] = eval(&simplex[j]);
            }
        }
    }

    Ok(Minimum { x: simplex.swap_remove(0), fx: values[0], evals: evals.get(), converged })
}
