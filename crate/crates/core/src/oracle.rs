//! Ground-truth total variation: Monte Carlo from the true densities,
//! adaptive quadrature in one dimension, and the closed form for
//! equal-covariance Gaussians.

use crate::distributions::{Distribution, GaussianParams, MixturePair};
use crate::error::{Error, Result};
use crate::estimate::{clamp_unit, Method, TvEstimate};
use crate::linalg;
use crate::mc;
use crate::quadrature::adaptive_simpson;
use crate::special::normal_cdf;

const QUAD_MAX_DEPTH: u32 = 50;

/// Monte Carlo TV with draws from the true mixture.
///
/// The pair is put in a canonical order before sampling, so swapping ℙ and
/// ℚ with the same seed gives the identical value.
pub fn mc_true_tv(pair: &MixturePair, n_mc: usize, seed: u64) -> TvEstimate {
    let (a, b) = canonical_order(&pair.p, &pair.q);
    let r = mc::mixture_ratio_tv(a, b, n_mc, seed);
    TvEstimate::new(Method::Mc, r.tv, n_mc).with("std_error", r.std_error)
}

fn canonical_order<'a>(p: &'a Distribution, q: &'a Distribution) -> (&'a Distribution, &'a Distribution) {
    if format!("{p:?}") <= format!("{q:?}") {
        (p, q)
    } else {
        (q, p)
    }
}

/// `½∫|P - Q|` for one-dimensional pairs by adaptive Simpson.
///
/// The integration range is the union of the two covering intervals, cut
/// at every finite support boundary so jumps sit on panel edges.
pub fn quadrature_tv_1d(p: &Distribution, q: &Distribution, tol: f64) -> Result<f64> {
    let (segments, _) = segments_1d(p, q)?;
    let share = tol / segments.len() as f64;
    let mut total = 0.0;
    for (lo, hi) in segments {
        let (v, _) = adaptive_simpson(
            |x| 0.5 * (p.density_1d(x) - q.density_1d(x)).abs(),
            lo,
            hi,
            share,
            QUAD_MAX_DEPTH,
        )?;
        total += v;
    }
    Ok(clamp_unit(total))
}

/// Integration segments covering both supports.
fn segments_1d(p: &Distribution, q: &Distribution) -> Result<(Vec<(f64, f64)>, (f64, f64))> {
    let (Some(ip), Some(iq)) = (p.covering_interval_1d(), q.covering_interval_1d()) else {
        return Err(Error::InvalidParameter(
            "quadrature needs one-dimensional distributions".into(),
        ));
    };
    let lo = ip.0.min(iq.0);
    let hi = ip.1.max(iq.1);
    let mut cuts: Vec<f64> = p
        .support_breakpoints()
        .into_iter()
        .chain(q.support_breakpoints())
        .filter(|&c| c > lo && c < hi)
        .collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    Ok((cuts.windows(2).map(|w| (w[0], w[1])).collect(), (lo, hi)))
}

/// `2Φ(Δ/2) - 1` with Δ the Mahalanobis distance between the means.
pub fn closed_form_tv_equal_cov(g1: &GaussianParams, g2: &GaussianParams) -> Result<f64> {
    if g1.dim() != g2.dim() {
        return Err(Error::DimensionMismatch {
            expected: g1.dim(),
            found: g2.dim(),
        });
    }
    let diff = g1.cov().max_abs_diff(g2.cov());
    if diff > 1e-12 {
        return Err(Error::CovariancesDiffer {
            max_difference: diff,
        });
    }
    let delta = linalg::mahalanobis_sq(g1.mean(), g2.mean(), g1.chol())?.sqrt();
    Ok(clamp_unit(2.0 * normal_cdf(0.5 * delta) - 1.0))
}

/// Bayes risk `½∫min(P, Q)` by a midpoint sum over `cells` equal cells on
/// `[lo, hi]`.
pub fn bayes_risk_grid_1d(p: &Distribution, q: &Distribution, lo: f64, hi: f64, cells: usize) -> f64 {
    let h = (hi - lo) / cells as f64;
    let s: f64 = (0..cells)
        .map(|i| {
            let x = lo + (i as f64 + 0.5) * h;
            p.density_1d(x).min(q.density_1d(x))
        })
        .sum();
    0.5 * s * h
}

/// Ground truth by the requested route.
pub fn ground_truth(pair: &MixturePair, method: Method, n_mc: usize, seed: u64, tol: f64) -> Result<TvEstimate> {
    match method {
        Method::Mc => Ok(mc_true_tv(pair, n_mc, seed)),
        Method::Quad => {
            let v = quadrature_tv_1d(&pair.p, &pair.q, tol)?;
            Ok(TvEstimate::new(Method::Quad, v, 0).with("std_error", tol))
        }
        Method::Closed => {
            let (Distribution::Gaussian(g1), Distribution::Gaussian(g2)) = (&pair.p, &pair.q) else {
                return Err(Error::InvalidParameter(
                    "closed form needs a Gaussian pair".into(),
                ));
            };
            let v = closed_form_tv_equal_cov(g1, g2)?;
            Ok(TvEstimate::new(Method::Closed, v, 0).with("std_error", 1e-10))
        }
        other => Err(Error::InvalidParameter(format!("{other} is not an oracle"))),
    }
}
