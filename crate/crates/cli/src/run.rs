//! The `band` pipeline: sort by ranking, optionally merge ties or bin,
//! settle the dispersion, build (and optionally repair) the band, run the
//! tests, and assemble the output table.

use crate::config::{DispersionSpec, RunConfig};
use crate::io::{BandRecord, InputRow};
use anyhow::Context;
use calib_core::{
    build_band, calibrate, make_pair_set, make_ranked_sample, repair_crossings, Band,
    DispersedObs, EdfFamily, PairStrategy, RankedSample, TestReport,
};

pub struct BandOutcome {
    pub records: Vec<BandRecord>,
    pub calibration: TestReport,
    pub epsilon: Option<TestReport>,
    pub band: Band,
    pub phi: f64,
    /// Set when responses were binned; binned responses need not follow
    /// the family's distribution exactly.
    pub binned: bool,
}

impl BandOutcome {
    /// Process exit status: 0 fail-to-reject, 2 reject.
    pub fn exit_code(&self) -> i32 {
        if self.calibration.rejected() {
            2
        } else {
            0
        }
    }
}

pub fn run_band(mut rows: Vec<InputRow>, cfg: &RunConfig) -> anyhow::Result<BandOutcome> {
    cfg.validate()?;
    if rows.is_empty() {
        anyhow::bail!("no input rows");
    }
    if let Some(i) = rows.iter().position(|r| r.rank.is_nan()) {
        anyhow::bail!("row {}: NaN ranking value", i + 2);
    }
    rows.sort_by(|a, b| a.rank.partial_cmp(&b.rank).unwrap());

    // Dispersion comes from the raw rows, before any binning.
    let ys: Vec<f64> = rows.iter().map(|r| r.y).collect();
    let mus: Vec<f64> = rows.iter().map(|r| r.mu_hat).collect();
    let vs: Vec<f64> = rows.iter().map(|r| r.v).collect();
    let phi = match cfg.dispersion {
        DispersionSpec::Fixed(p) => p,
        DispersionSpec::Pearson => {
            calibrate::pearson_dispersion(cfg.family, &ys, &mus, &vs, cfg.q)
                .context("Pearson dispersion estimate")?
        }
        DispersionSpec::Deviance => {
            calibrate::deviance_dispersion(cfg.family, &ys, &mus, &vs, cfg.q)
                .context("deviance dispersion estimate")?
        }
        DispersionSpec::MleIg => {
            if cfg.family != EdfFamily::InverseGaussian {
                anyhow::bail!("mle-ig dispersion applies to the inverse-gaussian family only");
            }
            calibrate::mle_dispersion_ig(&ys, &mus, &vs).context("MLE dispersion estimate")?
        }
    };
    if !(phi > 0.0) {
        anyhow::bail!("estimated dispersion is not positive ({phi}); supply fixed:<phi>");
    }

    let obs: Vec<DispersedObs> = rows.iter().map(|r| DispersedObs::new(r.y, r.v)).collect();
    let ranks: Vec<f64> = rows.iter().map(|r| r.rank).collect();
    let sample = make_ranked_sample(obs, ranks, phi, cfg.family)?;
    let estimates = mus.clone();

    // Binning replaces the sample wholesale; tied ranks merge when the
    // distinct pair strategy asks for it.
    let mut binned = false;
    let (sample, estimates) = if let Some(bins) = cfg.bins {
        binned = true;
        let b = calibrate::quantile_bin(&sample, &estimates, bins.min(sample.len()))?;
        let new_obs: Vec<DispersedObs> = b
            .y_tilde
            .iter()
            .zip(&b.v_tilde)
            .map(|(&y, &v)| DispersedObs::new(y, v))
            .collect();
        let new_sample = make_ranked_sample(new_obs, b.mu_tilde.clone(), phi, cfg.family)
            .context("binned responses violate the family support; binning may be inappropriate here")?;
        (new_sample, b.mu_tilde)
    } else if cfg.pairs == PairStrategy::Distinct {
        merge_with_estimates(&sample, &estimates)
    } else {
        (sample, estimates)
    };

    let pair_set = make_pair_set(cfg.pairs, &sample, Some(&estimates))?;
    let mut band = build_band(&sample, &pair_set, cfg.alpha)?;
    if cfg.repair {
        band = repair_crossings(&band, &sample)?;
    }

    let calibration = calibrate::test_calibration(&band, &estimates, sample.rank_values())?;
    let epsilon = match cfg.epsilon {
        Some(eps) => Some(calibrate::test_epsilon(&band, &estimates, sample.rank_values(), eps)?),
        None => None,
    };

    let outside: std::collections::HashSet<usize> =
        calibration.offending.iter().copied().collect();
    let records: Vec<BandRecord> = (0..sample.len())
        .map(|i| BandRecord {
            rank: sample.rank_values()[i],
            y: sample.obs()[i].y,
            v: sample.obs()[i].v,
            mu_hat: estimates[i],
            lower: band.lower[i],
            upper: band.upper[i],
            inside: !outside.contains(&i),
        })
        .collect();

    Ok(BandOutcome {
        records,
        calibration,
        epsilon,
        band,
        phi,
        binned,
    })
}

/// Merges tied ranks and aggregates the estimates with the same volume
/// weights the responses use.
fn merge_with_estimates(sample: &RankedSample, estimates: &[f64]) -> (RankedSample, Vec<f64>) {
    let merged = calib_core::merge_ties(sample);
    let ranks = sample.rank_values();
    let obs = sample.obs();
    let mut merged_est = Vec::with_capacity(merged.len());
    let mut i = 0;
    while i < sample.len() {
        let mut j = i;
        let (mut sw, mut swe) = (0.0, 0.0);
        while j < sample.len() && ranks[j] == ranks[i] {
            sw += obs[j].v;
            swe += obs[j].v * estimates[j];
            j += 1;
        }
        merged_est.push(swe / sw);
        i = j;
    }
    (merged, merged_est)
}
