//! Seeded simulation presets: normal band sensitivity sweeps, an inverse
//! Gaussian dispersion-estimation study, and a gamma power study with
//! global and local mean shifts, raw and binned.
//!
//! Every replication draws from its own counter-based RNG stream derived
//! from `(seed, replication index)`, so results are bit-identical whether
//! replications run serially or in parallel, and independent of the worker
//! count.

use anyhow::{anyhow, bail};
use calib_core::{
    build_band, calibrate, make_pair_set, make_ranked_sample, merge_ties, pava, Band,
    DispersedObs, EdfFamily, PairStrategy, RankedSample,
};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma, InverseGaussian, Normal};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Example1,
    Example3,
    Example5,
}

impl Preset {
    pub fn parse(s: &str) -> anyhow::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "example1" | "ex1" => Ok(Preset::Example1),
            "example3" | "ex3" => Ok(Preset::Example3),
            "example5" | "ex5" => Ok(Preset::Example5),
            other => Err(anyhow!("unknown preset '{other}'")),
        }
    }

    fn default_n(&self) -> usize {
        match self {
            Preset::Example1 => 2000,
            _ => 1000,
        }
    }
}

/// Options for `simulate`; `None` fields fall back to preset defaults.
#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub preset: Preset,
    pub reps: u64,
    pub seed: u64,
    pub n: Option<usize>,
    pub alpha: Option<f64>,
    pub sweeps: bool,
}

/// Per-replication RNG stream.
fn rep_rng(seed: u64, rep: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(rep.wrapping_add(1));
    rng
}

// ---------------------------------------------------------------------
// Example 1: simulated normal responses with constant coefficient of
// variation; means on an even grid over [1500, 2500], sd_i = mu_i / 2,
// volumes 1 / sd_i^2 at dispersion 1.
// ---------------------------------------------------------------------

pub struct Ex1Rep {
    pub covered: bool,
    pub rejected: bool,
    pub crossed: bool,
    pub n_outside: usize,
    pub mean_width: f64,
}

struct Ex1Data {
    mus: Vec<f64>,
    sample: RankedSample,
}

fn example1_data(n: usize, seed: u64, rep: u64) -> anyhow::Result<Ex1Data> {
    if n < 2 {
        bail!("example1 needs n >= 2");
    }
    let mut rng = rep_rng(seed, rep);
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    let mus: Vec<f64> = (0..n)
        .map(|i| 1500.0 + i as f64 / (n as f64 - 1.0) * 1000.0)
        .collect();
    let obs: Vec<DispersedObs> = mus
        .iter()
        .map(|&mu| {
            let sd = 0.5 * mu;
            let y = mu + sd * std_normal.sample(&mut rng);
            DispersedObs::new(y, 1.0 / (sd * sd))
        })
        .collect();
    let sample = make_ranked_sample(obs, mus.clone(), 1.0, EdfFamily::Normal)?;
    Ok(Ex1Data { mus, sample })
}

fn band_metrics(band: &Band, truths: &[f64], estimates: &[f64]) -> anyhow::Result<Ex1Rep> {
    let covered = truths
        .iter()
        .zip(band.lower.iter().zip(&band.upper))
        .all(|(mu, (lo, hi))| lo <= mu && mu <= hi);
    let report = calibrate::test_calibration(band, estimates, &band.rank_values)?;
    let widths: Vec<f64> = band
        .upper
        .iter()
        .zip(&band.lower)
        .map(|(u, l)| u - l)
        .filter(|w| w.is_finite())
        .collect();
    let mean_width = if widths.is_empty() {
        f64::INFINITY
    } else {
        widths.iter().sum::<f64>() / widths.len() as f64
    };
    Ok(Ex1Rep {
        covered,
        rejected: report.rejected(),
        crossed: band.crossed,
        n_outside: report.offending.len(),
        mean_width,
    })
}

/// One replication of the baseline full-band run: isotonic mean estimates
/// tested against the band, and simultaneous coverage of the true means.
pub fn example1_rep(
    n: usize,
    alpha: f64,
    pairs: PairStrategy,
    seed: u64,
    rep: u64,
) -> anyhow::Result<Ex1Rep> {
    let data = example1_data(n, seed, rep)?;
    let pair_set = make_pair_set(pairs, &data.sample, None)?;
    let band = build_band(&data.sample, &pair_set, alpha)?;
    let iso = pava(&data.sample.responses(), &data.sample.volumes())?;
    band_metrics(&band, &data.mus, &iso.fitted)
}

/// Same replication data, responses binned into `bins` consecutive
/// equal-count groups before the band is built.
pub fn example1_rep_binned(
    n: usize,
    alpha: f64,
    bins: usize,
    seed: u64,
    rep: u64,
) -> anyhow::Result<Ex1Rep> {
    if bins == 0 || bins > n {
        bail!("bins must lie in 1..={n}");
    }
    let data = example1_data(n, seed, rep)?;
    let obs = data.sample.obs();
    let mut binned = Vec::with_capacity(bins);
    let mut truths = Vec::with_capacity(bins);
    for b in 0..bins {
        let start = b * n / bins;
        let end = ((b + 1) * n / bins).max(start + 1);
        let (mut swy, mut sw, mut smu) = (0.0, 0.0, 0.0);
        for i in start..end {
            swy += obs[i].v * obs[i].y;
            sw += obs[i].v;
            smu += obs[i].v * data.mus[i];
        }
        binned.push(DispersedObs::new(swy / sw, sw));
        truths.push(smu / sw);
    }
    let sample = make_ranked_sample(binned, truths.clone(), 1.0, EdfFamily::Normal)?;
    let pair_set = make_pair_set(PairStrategy::Full, &sample, None)?;
    let band = build_band(&sample, &pair_set, alpha)?;
    let iso = pava(&sample.responses(), &sample.volumes())?;
    band_metrics(&band, &truths, &iso.fitted)
}

// ---------------------------------------------------------------------
// Example 3: inverse Gaussian responses at a log-uniform mean profile,
// bands under the true dispersion versus Pearson / deviance / MLE
// estimates of it.
// ---------------------------------------------------------------------

pub struct Ex3Rep {
    pub phi_pearson: f64,
    pub phi_deviance: f64,
    pub phi_mle: f64,
    /// Largest relative band-edge difference, true-phi band versus the
    /// Pearson-phi band, over the middle 90% of ranks.
    pub max_rel_gap_mid90: f64,
}

const EX3_MEAN_RANGE: (f64, f64) = (0.05, 0.5);

pub fn example3_rep(
    n: usize,
    alpha: f64,
    phi_true: f64,
    seed: u64,
    rep: u64,
) -> anyhow::Result<Ex3Rep> {
    if n < 3 {
        bail!("example3 needs n >= 3");
    }
    let mut rng = rep_rng(seed, rep);
    let (lo, hi) = EX3_MEAN_RANGE;
    let mut mus: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rand::Rng::random(&mut rng);
            (lo.ln() + u * (hi.ln() - lo.ln())).exp()
        })
        .collect();
    mus.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lambda = 1.0 / phi_true;
    let ys: Vec<f64> = mus
        .iter()
        .map(|&mu| InverseGaussian::new(mu, lambda).unwrap().sample(&mut rng))
        .collect();
    let vols = vec![1.0; n];

    let phi_pearson =
        calibrate::pearson_dispersion(EdfFamily::InverseGaussian, &ys, &mus, &vols, 0)?;
    let phi_deviance =
        calibrate::deviance_dispersion(EdfFamily::InverseGaussian, &ys, &mus, &vols, 0)?;
    let phi_mle = calibrate::mle_dispersion_ig(&ys, &mus, &vols)?;

    let obs: Vec<DispersedObs> = ys.iter().map(|&y| DispersedObs::new(y, 1.0)).collect();
    let band_at = |phi: f64| -> anyhow::Result<Band> {
        let sample = make_ranked_sample(obs.clone(), mus.clone(), phi, EdfFamily::InverseGaussian)?;
        let pair_set = make_pair_set(PairStrategy::Full, &sample, None)?;
        Ok(build_band(&sample, &pair_set, alpha)?)
    };
    let band_true = band_at(phi_true)?;
    let band_pearson = band_at(phi_pearson)?;

    let from = n / 20;
    let to = n - n / 20;
    let mut max_gap: f64 = 0.0;
    for i in from..to {
        for (a, b) in [
            (band_true.lower[i], band_pearson.lower[i]),
            (band_true.upper[i], band_pearson.upper[i]),
        ] {
            max_gap = max_gap.max(rel_gap(a, b));
        }
    }
    Ok(Ex3Rep {
        phi_pearson,
        phi_deviance,
        phi_mle,
        max_rel_gap_mid90: max_gap,
    })
}

fn rel_gap(a: f64, b: f64) -> f64 {
    if a == b || (a.is_infinite() && b.is_infinite() && a.signum() == b.signum()) {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }
}

// ---------------------------------------------------------------------
// Example 5: power of the calibration test for gamma responses whose
// means take six values in {10, ..., 15}; observations contaminated by a
// global shift or by a local shift at one mean level, tested raw and with
// responses merged per mean level.
// ---------------------------------------------------------------------

pub const EX5_GLOBAL_DELTAS: [f64; 3] = [0.0, 0.5, 1.0];
pub const EX5_LOCAL_DELTAS: [f64; 2] = [0.5, 1.0];
pub const EX5_LEVELS: [f64; 3] = [10.0, 13.0, 15.0];

pub struct Ex5Rep {
    pub raw_global: [bool; 3],
    pub binned_global: [bool; 3],
    pub raw_local: [[bool; 2]; 3],
    pub binned_local: [[bool; 2]; 3],
}

pub fn example5_rep(n: usize, alpha: f64, seed: u64, rep: u64) -> anyhow::Result<Ex5Rep> {
    if n < 6 {
        bail!("example5 needs n >= 6");
    }
    let mut rng = rep_rng(seed, rep);
    // Mean law: 10..15 with probabilities (.1, .15, .25, .25, .15, .1).
    let cum = [0.1, 0.25, 0.5, 0.75, 0.9, 1.0];
    let mut mus: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rand::Rng::random(&mut rng);
            let idx = cum.iter().position(|&c| u < c).unwrap_or(5);
            10.0 + idx as f64
        })
        .collect();
    mus.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Y ~ Gamma(3 mu, rate 3): EDF gamma with volume 3 mu at dispersion 1.
    let ys: Vec<f64> = mus
        .iter()
        .map(|&mu| Gamma::new(3.0 * mu, 1.0 / 3.0).unwrap().sample(&mut rng))
        .collect();
    let vols: Vec<f64> = mus.iter().map(|&mu| 3.0 * mu).collect();

    let decide = |shifted: &[f64]| -> anyhow::Result<(bool, bool)> {
        let obs: Vec<DispersedObs> = shifted
            .iter()
            .zip(&vols)
            .map(|(&y, &v)| DispersedObs::new(y, v))
            .collect();
        let sample = make_ranked_sample(obs, mus.clone(), 1.0, EdfFamily::Gamma)?;
        let raw_pairs = make_pair_set(PairStrategy::Full, &sample, None)?;
        let raw_band = build_band(&sample, &raw_pairs, alpha)?;
        let raw_report =
            calibrate::test_calibration(&raw_band, &mus, sample.rank_values())?;

        let merged = merge_ties(&sample);
        let merged_pairs = make_pair_set(PairStrategy::Full, &merged, None)?;
        let merged_band = build_band(&merged, &merged_pairs, alpha)?;
        let merged_est = merged.rank_values().to_vec();
        let merged_report =
            calibrate::test_calibration(&merged_band, &merged_est, merged.rank_values())?;
        Ok((raw_report.rejected(), merged_report.rejected()))
    };

    let mut out = Ex5Rep {
        raw_global: [false; 3],
        binned_global: [false; 3],
        raw_local: [[false; 2]; 3],
        binned_local: [[false; 2]; 3],
    };
    for (gi, &delta) in EX5_GLOBAL_DELTAS.iter().enumerate() {
        let shifted: Vec<f64> = ys.iter().map(|y| y + delta).collect();
        let (raw, binned) = decide(&shifted)?;
        out.raw_global[gi] = raw;
        out.binned_global[gi] = binned;
    }
    for (li, &level) in EX5_LEVELS.iter().enumerate() {
        for (di, &delta) in EX5_LOCAL_DELTAS.iter().enumerate() {
            let shifted: Vec<f64> = ys
                .iter()
                .zip(&mus)
                .map(|(y, &mu)| if mu == level { y + delta } else { *y })
                .collect();
            let (raw, binned) = decide(&shifted)?;
            out.raw_local[li][di] = raw;
            out.binned_local[li][di] = binned;
        }
    }
    Ok(out)
}

/// Rejection counts for the power study, aggregated over replications in
/// parallel (order-independent sums).
pub struct Ex5Power {
    pub reps: u64,
    pub raw_global: [u64; 3],
    pub binned_global: [u64; 3],
    pub raw_local: [[u64; 2]; 3],
    pub binned_local: [[u64; 2]; 3],
}

pub fn example5_power(n: usize, alpha: f64, reps: u64, seed: u64) -> anyhow::Result<Ex5Power> {
    let per_rep: Vec<Ex5Rep> = (0..reps)
        .into_par_iter()
        .map(|rep| example5_rep(n, alpha, seed, rep))
        .collect::<anyhow::Result<_>>()?;
    let mut power = Ex5Power {
        reps,
        raw_global: [0; 3],
        binned_global: [0; 3],
        raw_local: [[0; 2]; 3],
        binned_local: [[0; 2]; 3],
    };
    for r in &per_rep {
        for i in 0..3 {
            power.raw_global[i] += r.raw_global[i] as u64;
            power.binned_global[i] += r.binned_global[i] as u64;
            for d in 0..2 {
                power.raw_local[i][d] += r.raw_local[i][d] as u64;
                power.binned_local[i][d] += r.binned_local[i][d] as u64;
            }
        }
    }
    Ok(power)
}

// ---------------------------------------------------------------------
// CSV driver
// ---------------------------------------------------------------------

/// Runs the chosen preset and renders the metrics CSV. Replications are
/// processed in parallel but emitted in replication order, so the output
/// is identical for any worker count.
pub fn run_simulate(args: &SimulateArgs) -> anyhow::Result<String> {
    if args.reps == 0 {
        bail!("reps must be at least 1");
    }
    let n = args.n.unwrap_or_else(|| args.preset.default_n());
    match args.preset {
        Preset::Example1 => {
            let alpha = args.alpha.unwrap_or(0.05);
            let mut csv = String::from("rep,config,param,covered,rejected,crossed,n_outside,mean_width\n");
            let rows: Vec<String> = (0..args.reps)
                .into_par_iter()
                .map(|rep| -> anyhow::Result<String> {
                    let mut out = String::new();
                    let mut push = |config: &str, param: String, m: Ex1Rep| {
                        out.push_str(&format!(
                            "{rep},{config},{param},{},{},{},{},{:.6}\n",
                            m.covered as u8, m.rejected as u8, m.crossed as u8, m.n_outside, m.mean_width
                        ));
                    };
                    let base = example1_rep(n, alpha, PairStrategy::Full, args.seed, rep)?;
                    push("full", format!("{alpha}"), base);
                    if args.sweeps {
                        for a in [0.01, 0.05, 0.1, 0.25, 0.5] {
                            let m = example1_rep(n, a, PairStrategy::Full, args.seed, rep)?;
                            push("alpha", format!("{a}"), m);
                        }
                        for s in [50usize, 200, 500, 2000] {
                            let m =
                                example1_rep(n, alpha, PairStrategy::Nbh(s.min(n)), args.seed, rep)?;
                            push("nbh", format!("{s}"), m);
                        }
                        for d in [10.0, 100.0, 500.0, 1500.0] {
                            let m =
                                example1_rep(n, alpha, PairStrategy::Dist(d), args.seed, rep)?;
                            push("dist", format!("{d}"), m);
                        }
                        for bins in [50usize, 200, 500, 2000] {
                            if bins <= n {
                                let m = example1_rep_binned(n, alpha, bins, args.seed, rep)?;
                                push("bins", format!("{bins}"), m);
                            }
                        }
                    }
                    Ok(out)
                })
                .collect::<anyhow::Result<_>>()?;
            for row in rows {
                csv.push_str(&row);
            }
            Ok(csv)
        }
        Preset::Example3 => {
            let alpha = args.alpha.unwrap_or(0.05);
            let phi_true = 1.26;
            let mut csv =
                String::from("rep,n,phi_true,phi_pearson,phi_deviance,phi_mle_ig,max_rel_gap_mid90\n");
            let rows: Vec<String> = (0..args.reps)
                .into_par_iter()
                .map(|rep| -> anyhow::Result<String> {
                    let m = example3_rep(n, alpha, phi_true, args.seed, rep)?;
                    Ok(format!(
                        "{rep},{n},{phi_true},{:.6},{:.6},{:.6},{:.6}\n",
                        m.phi_pearson, m.phi_deviance, m.phi_mle, m.max_rel_gap_mid90
                    ))
                })
                .collect::<anyhow::Result<_>>()?;
            for row in rows {
                csv.push_str(&row);
            }
            Ok(csv)
        }
        Preset::Example5 => {
            let alpha = args.alpha.unwrap_or(0.05);
            let mut csv = String::from("rep,variant,shift,level,delta,rejected\n");
            let rows: Vec<String> = (0..args.reps)
                .into_par_iter()
                .map(|rep| -> anyhow::Result<String> {
                    let m = example5_rep(n, alpha, args.seed, rep)?;
                    let mut out = String::new();
                    for (gi, &delta) in EX5_GLOBAL_DELTAS.iter().enumerate() {
                        out.push_str(&format!(
                            "{rep},raw,global,,{delta},{}\n",
                            m.raw_global[gi] as u8
                        ));
                        out.push_str(&format!(
                            "{rep},binned,global,,{delta},{}\n",
                            m.binned_global[gi] as u8
                        ));
                    }
                    for (li, &level) in EX5_LEVELS.iter().enumerate() {
                        for (di, &delta) in EX5_LOCAL_DELTAS.iter().enumerate() {
                            out.push_str(&format!(
                                "{rep},raw,local,{level},{delta},{}\n",
                                m.raw_local[li][di] as u8
                            ));
                            out.push_str(&format!(
                                "{rep},binned,local,{level},{delta},{}\n",
                                m.binned_local[li][di] as u8
                            ));
                        }
                    }
                    Ok(out)
                })
                .collect::<anyhow::Result<_>>()?;
            for row in rows {
                csv.push_str(&row);
            }
            Ok(csv)
        }
    }
}
