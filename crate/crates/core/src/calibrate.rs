//! Hypothesis tests built on a calibration band, dispersion estimation,
//! and weighted quantile binning.
//!
//! The first test takes calibration as the null and rejects as soon as any
//! mean estimate leaves the band. The opposite test takes
//! epsilon-miscalibration as the null and rejects as soon as the band fits
//! inside some estimate's epsilon-tube. Both operate at finite sample on
//! the observed estimates; whether the offending set carries positive
//! feature mass is an assumption on the estimator's support, which the
//! report surfaces rather than adjudicates.

use crate::bands::{Band, RankedSample};
use crate::error::{CalibError, Result};
use crate::family::EdfFamily;

/// Outcome of a band-based hypothesis test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Reject,
    FailToReject,
}

/// Decision plus the indices driving it (outside the band, or inside the
/// epsilon-tube, depending on the test).
#[derive(Debug, Clone)]
pub struct TestReport {
    pub decision: Decision,
    pub offending: Vec<usize>,
    pub alpha: f64,
    pub epsilon: Option<f64>,
}

impl TestReport {
    pub fn rejected(&self) -> bool {
        self.decision == Decision::Reject
    }
}

fn check_aligned(band: &Band, estimates: &[f64], ranks: &[f64]) -> Result<()> {
    if estimates.len() != ranks.len() {
        return Err(CalibError::InvalidArgument(format!(
            "{} estimates vs {} ranks",
            estimates.len(),
            ranks.len()
        )));
    }
    if band.is_empty() {
        return Err(CalibError::InvalidArgument("empty band".into()));
    }
    Ok(())
}

/// Calibration test: reject when some estimate falls outside the band
/// evaluated at its ranking value.
pub fn test_calibration(band: &Band, estimates: &[f64], ranks: &[f64]) -> Result<TestReport> {
    check_aligned(band, estimates, ranks)?;
    let mut offending = Vec::new();
    for (i, (&mu, &r)) in estimates.iter().zip(ranks).enumerate() {
        let (lo, hi) = band.at_rank(r)?;
        if mu < lo || mu > hi {
            offending.push(i);
        }
    }
    Ok(TestReport {
        decision: if offending.is_empty() {
            Decision::FailToReject
        } else {
            Decision::Reject
        },
        offending,
        alpha: band.alpha,
        epsilon: None,
    })
}

/// Opposite test with the null \"every estimate is off by more than
/// epsilon\": reject when the band at some rank sits inside the estimate's
/// epsilon-tube.
pub fn test_epsilon(
    band: &Band,
    estimates: &[f64],
    ranks: &[f64],
    eps: f64,
) -> Result<TestReport> {
    if !(eps > 0.0) {
        return Err(CalibError::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    check_aligned(band, estimates, ranks)?;
    let mut offending = Vec::new();
    for (i, (&mu, &r)) in estimates.iter().zip(ranks).enumerate() {
        let (lo, hi) = band.at_rank(r)?;
        if lo >= mu - eps && hi <= mu + eps {
            offending.push(i);
        }
    }
    Ok(TestReport {
        decision: if offending.is_empty() {
            Decision::FailToReject
        } else {
            Decision::Reject
        },
        offending,
        alpha: band.alpha,
        epsilon: Some(eps),
    })
}

/// Pearson dispersion estimate with `q` estimated parameters:
/// `(1/(n-q)) sum_i (y_i - mu_i)^2 / (V(mu_i) / v_i)`.
pub fn pearson_dispersion(
    family: EdfFamily,
    y: &[f64],
    mu_hat: &[f64],
    v: &[f64],
    q: usize,
) -> Result<f64> {
    check_triple(y, mu_hat, v)?;
    if y.len() <= q {
        return Err(CalibError::InvalidArgument(format!(
            "need more than q={q} observations, got {}",
            y.len()
        )));
    }
    let mut sum = 0.0;
    for ((&yi, &mi), &vi) in y.iter().zip(mu_hat).zip(v) {
        let var = family.variance_function(mi)?;
        if !(var > 0.0) {
            return Err(CalibError::Domain(format!(
                "variance function vanished at mu={mi}"
            )));
        }
        sum += (yi - mi) * (yi - mi) * vi / var;
    }
    Ok(sum / (y.len() - q) as f64)
}

/// Deviance dispersion estimate: `sum_i v_i d(y_i, mu_i) / (n - q)`.
pub fn deviance_dispersion(
    family: EdfFamily,
    y: &[f64],
    mu_hat: &[f64],
    v: &[f64],
    q: usize,
) -> Result<f64> {
    check_triple(y, mu_hat, v)?;
    if y.len() <= q {
        return Err(CalibError::InvalidArgument(format!(
            "need more than q={q} observations, got {}",
            y.len()
        )));
    }
    let mut sum = 0.0;
    for ((&yi, &mi), &vi) in y.iter().zip(mu_hat).zip(v) {
        sum += vi * family.unit_deviance(yi, mi)?;
    }
    Ok(sum / (y.len() - q) as f64)
}

/// Closed-form maximum-likelihood dispersion for inverse Gaussian
/// responses: `(1/n) sum_i v_i (y_i - mu_i)^2 / (mu_i^2 y_i)`.
pub fn mle_dispersion_ig(y: &[f64], mu_hat: &[f64], v: &[f64]) -> Result<f64> {
    check_triple(y, mu_hat, v)?;
    let mut sum = 0.0;
    for ((&yi, &mi), &vi) in y.iter().zip(mu_hat).zip(v) {
        if !(yi > 0.0) {
            return Err(CalibError::Support(format!(
                "inverse Gaussian response must be positive, got {yi}"
            )));
        }
        sum += vi * (yi - mi) * (yi - mi) / (mi * mi * yi);
    }
    Ok(sum / y.len() as f64)
}

fn check_triple(y: &[f64], mu_hat: &[f64], v: &[f64]) -> Result<()> {
    if y.len() != mu_hat.len() || y.len() != v.len() {
        return Err(CalibError::InvalidArgument(format!(
            "length mismatch: y={}, mu_hat={}, v={}",
            y.len(),
            mu_hat.len(),
            v.len()
        )));
    }
    if y.is_empty() {
        return Err(CalibError::InvalidArgument("empty input".into()));
    }
    Ok(())
}

/// Responses aggregated over estimate bins of approximately equal volume.
#[derive(Debug, Clone)]
pub struct BinnedSample {
    /// Volume-weighted response per bin.
    pub y_tilde: Vec<f64>,
    /// Total volume per bin.
    pub v_tilde: Vec<f64>,
    /// Volume-weighted mean estimate per bin.
    pub mu_tilde: Vec<f64>,
    /// Estimate-range partition `a_0 <= ... <= a_L` delimiting the bins.
    pub bin_edges: Vec<f64>,
}

/// Weighted quantile binning: sweep the (already ranked) sample, closing a
/// bin whenever its cumulative volume reaches the running target
/// `b * total / L`, while leaving enough observations for the remaining
/// bins. Preserves total volume and total `v * y` exactly up to rounding.
pub fn quantile_bin(
    sample: &RankedSample,
    estimates: &[f64],
    bins: usize,
) -> Result<BinnedSample> {
    let n = sample.len();
    if estimates.len() != n {
        return Err(CalibError::InvalidArgument(format!(
            "{} estimates for sample of size {n}",
            estimates.len()
        )));
    }
    if bins == 0 || bins > n {
        return Err(CalibError::InvalidArgument(format!(
            "bin count must lie in 1..={n}, got {bins}"
        )));
    }
    let obs = sample.obs();
    let total: f64 = obs.iter().map(|o| o.v).sum();
    let target = total / bins as f64;

    let mut y_tilde = Vec::with_capacity(bins);
    let mut v_tilde = Vec::with_capacity(bins);
    let mut mu_tilde = Vec::with_capacity(bins);
    let mut bin_edges = Vec::with_capacity(bins + 1);
    bin_edges.push(estimates[0]);

    let mut cum = 0.0;
    let mut start = 0usize;
    for i in 0..n {
        cum += obs[i].v;
        let bins_done = y_tilde.len();
        let remaining_obs = n - i - 1;
        let remaining_bins = bins - bins_done - 1;
        let reached = cum >= target * (bins_done as f64 + 1.0) - 1e-12 * total;
        let must_close = remaining_obs == remaining_bins;
        if (reached || must_close) && bins_done < bins {
            let (mut swy, mut sw, mut swm) = (0.0, 0.0, 0.0);
            for j in start..=i {
                swy += obs[j].v * obs[j].y;
                sw += obs[j].v;
                swm += obs[j].v * estimates[j];
            }
            y_tilde.push(swy / sw);
            v_tilde.push(sw);
            mu_tilde.push(swm / sw);
            bin_edges.push(if i + 1 < n { estimates[i + 1] } else { estimates[n - 1] });
            start = i + 1;
        }
    }
    debug_assert_eq!(y_tilde.len(), bins);
    Ok(BinnedSample {
        y_tilde,
        v_tilde,
        mu_tilde,
        bin_edges,
    })
}
