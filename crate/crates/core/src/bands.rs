//! Band assembly: ranked samples with prefix sums, pair-set strategies,
//! the simultaneous band itself, crossing repair, step-function evaluation
//! over the ranking, and the Yang–Barber comparison band.

use crate::bounds::{self, BoundSide};
use crate::error::{CalibError, Result};
use crate::family::{DispersedObs, EdfFamily};
use crate::isotonic;
use crate::special;
use rayon::prelude::*;

/// Responses sorted by a ranking of their means, with prefix sums so any
/// window aggregate `Z_{j:k}` and volume `v_{j:k}` come out in O(1).
#[derive(Debug, Clone)]
pub struct RankedSample {
    pub family: EdfFamily,
    pub phi: f64,
    obs: Vec<DispersedObs>,
    rank_values: Vec<f64>,
    prefix_vy: Vec<f64>,
    prefix_v: Vec<f64>,
}

impl RankedSample {
    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn obs(&self) -> &[DispersedObs] {
        &self.obs
    }

    pub fn rank_values(&self) -> &[f64] {
        &self.rank_values
    }

    pub fn responses(&self) -> Vec<f64> {
        self.obs.iter().map(|o| o.y).collect()
    }

    pub fn volumes(&self) -> Vec<f64> {
        self.obs.iter().map(|o| o.v).collect()
    }

    /// Volume-weighted average over the inclusive window `j..=k`.
    pub fn z(&self, j: usize, k: usize) -> f64 {
        (self.prefix_vy[k + 1] - self.prefix_vy[j]) / self.volume(j, k)
    }

    /// Aggregated volume over the inclusive window `j..=k`.
    pub fn volume(&self, j: usize, k: usize) -> f64 {
        self.prefix_v[k + 1] - self.prefix_v[j]
    }
}

/// Sorts observations by the ranking values (stable under ties), validates
/// support, and caches prefix sums.
pub fn make_ranked_sample(
    obs: Vec<DispersedObs>,
    rank_values: Vec<f64>,
    phi: f64,
    family: EdfFamily,
) -> Result<RankedSample> {
    if obs.len() != rank_values.len() {
        return Err(CalibError::InvalidArgument(format!(
            "{} observations vs {} rank values",
            obs.len(),
            rank_values.len()
        )));
    }
    if obs.is_empty() {
        return Err(CalibError::InvalidArgument("empty sample".into()));
    }
    if !(phi > 0.0) || !phi.is_finite() {
        return Err(CalibError::InvalidArgument(format!("dispersion must be positive, got {phi}")));
    }
    if rank_values.iter().any(|r| r.is_nan()) {
        return Err(CalibError::InvalidArgument("NaN rank value".into()));
    }
    for (i, o) in obs.iter().enumerate() {
        if !(o.v > 0.0) || !o.v.is_finite() {
            return Err(CalibError::InvalidArgument(format!(
                "volume must be positive at index {i}, got {}",
                o.v
            )));
        }
        family.check_support(o.y, o.v / phi).map_err(|e| {
            CalibError::Support(format!("observation {i}: {e}"))
        })?;
    }

    let mut order: Vec<usize> = (0..obs.len()).collect();
    order.sort_by(|&a, &b| rank_values[a].partial_cmp(&rank_values[b]).unwrap());
    let obs: Vec<DispersedObs> = order.iter().map(|&i| obs[i]).collect();
    let rank_values: Vec<f64> = order.iter().map(|&i| rank_values[i]).collect();

    let mut prefix_vy = Vec::with_capacity(obs.len() + 1);
    let mut prefix_v = Vec::with_capacity(obs.len() + 1);
    prefix_vy.push(0.0);
    prefix_v.push(0.0);
    for o in &obs {
        prefix_vy.push(prefix_vy.last().unwrap() + o.v * o.y);
        prefix_v.push(prefix_v.last().unwrap() + o.v);
    }
    Ok(RankedSample {
        family,
        phi,
        obs,
        rank_values,
        prefix_vy,
        prefix_v,
    })
}

/// Convolves observations that share a rank value into a single observation
/// with summed volume and volume-weighted response.
pub fn merge_ties(sample: &RankedSample) -> RankedSample {
    let n = sample.len();
    let mut obs = Vec::new();
    let mut ranks = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && sample.rank_values[j + 1] == sample.rank_values[i] {
            j += 1;
        }
        obs.push(DispersedObs::new(sample.z(i, j), sample.volume(i, j)));
        ranks.push(sample.rank_values[i]);
        i = j + 1;
    }
    // Merged counts stay on support atoms (the additive values add), so
    // revalidation cannot fail; rebuild prefix sums directly.
    let mut prefix_vy = vec![0.0];
    let mut prefix_v = vec![0.0];
    for o in &obs {
        prefix_vy.push(prefix_vy.last().unwrap() + o.v * o.y);
        prefix_v.push(prefix_v.last().unwrap() + o.v);
    }
    RankedSample {
        family: sample.family,
        phi: sample.phi,
        obs,
        rank_values: ranks,
        prefix_vy,
        prefix_v,
    }
}

/// How the set of ordered index pairs is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairStrategy {
    /// Every ordered pair `j <= k`.
    Full,
    /// Every ordered pair, after requiring all rank values distinct.
    Distinct,
    /// Pairs with window length `k - j <= s`.
    Nbh(usize),
    /// Pairs whose estimated means differ by at most `d`.
    Dist(f64),
}

/// A set of ordered pairs `(j, k)`, `j <= k`, over sample indices.
#[derive(Debug, Clone)]
pub struct PairSet {
    strategy: Option<PairStrategy>,
    repr: PairsRepr,
    size: usize,
}

#[derive(Debug, Clone)]
enum PairsRepr {
    /// For each `j`, pairs run over `j..=kmax[j]`; `kmax` is non-decreasing.
    UpTo(Vec<usize>),
    /// Arbitrary pair list (mainly for tests and experiments).
    Explicit(Vec<(usize, usize)>),
}

impl PairSet {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn strategy(&self) -> Option<PairStrategy> {
        self.strategy
    }

    /// Builds a pair set from an explicit list; every pair must satisfy
    /// `j <= k < n`.
    pub fn explicit(pairs: Vec<(usize, usize)>, n: usize) -> Result<PairSet> {
        if pairs.is_empty() {
            return Err(CalibError::InvalidArgument("empty pair set".into()));
        }
        for &(j, k) in &pairs {
            if j > k || k >= n {
                return Err(CalibError::InvalidArgument(format!(
                    "pair ({j}, {k}) invalid for sample of size {n}"
                )));
            }
        }
        let size = pairs.len();
        Ok(PairSet {
            strategy: None,
            repr: PairsRepr::Explicit(pairs),
            size,
        })
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        match &self.repr {
            PairsRepr::Explicit(p) => p.clone(),
            PairsRepr::UpTo(kmax) => {
                let mut out = Vec::with_capacity(self.size);
                for (j, &km) in kmax.iter().enumerate() {
                    for k in j..=km {
                        out.push((j, k));
                    }
                }
                out
            }
        }
    }
}

/// Materializes the pair set for a strategy. `Dist` compares the provided
/// estimates (falling back to the isotonic fit of the sample), which must be
/// non-decreasing along the ranking.
pub fn make_pair_set(
    strategy: PairStrategy,
    sample: &RankedSample,
    estimates: Option<&[f64]>,
) -> Result<PairSet> {
    let n = sample.len();
    let kmax: Vec<usize> = match strategy {
        PairStrategy::Full => (0..n).map(|_| n - 1).collect(),
        PairStrategy::Distinct => {
            if sample.rank_values.windows(2).any(|w| w[0] == w[1]) {
                return Err(CalibError::InvalidArgument(
                    "distinct pair set requires tied ranks to be merged first".into(),
                ));
            }
            (0..n).map(|_| n - 1).collect()
        }
        PairStrategy::Nbh(s) => (0..n).map(|j| (j + s).min(n - 1)).collect(),
        PairStrategy::Dist(d) => {
            if !(d >= 0.0) {
                return Err(CalibError::InvalidArgument(format!(
                    "distance threshold must be non-negative, got {d}"
                )));
            }
            let iso;
            let est = match estimates {
                Some(e) => {
                    if e.len() != n {
                        return Err(CalibError::InvalidArgument(format!(
                            "{} estimates for sample of size {n}",
                            e.len()
                        )));
                    }
                    e
                }
                None => {
                    iso = isotonic::pava(&sample.responses(), &sample.volumes())?;
                    &iso.fitted
                }
            };
            if est.windows(2).any(|w| w[0] > w[1]) {
                return Err(CalibError::InvalidArgument(
                    "distance pair set requires non-decreasing estimates".into(),
                ));
            }
            let mut kmax = vec![0usize; n];
            let mut k = 0usize;
            for j in 0..n {
                k = k.max(j);
                while k + 1 < n && est[k + 1] - est[j] <= d {
                    k += 1;
                }
                kmax[j] = k;
            }
            kmax
        }
    };
    let size: usize = kmax.iter().enumerate().map(|(j, &km)| km - j + 1).sum();
    Ok(PairSet {
        strategy: Some(strategy),
        repr: PairsRepr::UpTo(kmax),
        size,
    })
}

/// A simultaneous calibration band over a ranked sample.
#[derive(Debug, Clone)]
pub struct Band {
    /// Per-index lower bounds, non-decreasing.
    pub lower: Vec<f64>,
    /// Per-index upper bounds, non-decreasing.
    pub upper: Vec<f64>,
    /// Ranking values carried from the sample.
    pub rank_values: Vec<f64>,
    /// Confidence complement the band was built for.
    pub alpha: f64,
    /// Per-pair tail level `alpha / (2 |J|)`.
    pub delta: f64,
    /// Whether any index has `lower > upper`.
    pub crossed: bool,
    mean_space: (f64, f64),
}

impl Band {
    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn mean_space(&self) -> (f64, f64) {
        self.mean_space
    }

    /// Step-function extension of the band over arbitrary ranking values.
    /// Below every sample rank the lower bound is the mean-space infimum;
    /// above every sample rank the upper bound is the supremum.
    pub fn at_rank(&self, r: f64) -> Result<(f64, f64)> {
        if r.is_nan() {
            return Err(CalibError::InvalidArgument("NaN rank".into()));
        }
        let n_le = self.rank_values.partition_point(|&x| x <= r);
        let lower = if n_le == 0 {
            self.mean_space.0
        } else {
            self.lower[n_le - 1]
        };
        let first_ge = self.rank_values.partition_point(|&x| x < r);
        let upper = if first_ge == self.rank_values.len() {
            self.mean_space.1
        } else {
            self.upper[first_ge]
        };
        Ok((lower, upper))
    }
}

/// Builds the band at confidence level `1 - alpha` with `delta = alpha / (2 |J|)`.
pub fn build_band(sample: &RankedSample, pairs: &PairSet, alpha: f64) -> Result<Band> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CalibError::InvalidArgument(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let delta = alpha / (2.0 * pairs.size() as f64);
    build_with(sample, pairs, alpha, delta)
}

/// Builds the band at an explicitly chosen per-pair tail level; the alpha
/// recorded on the band is the implied `2 |J| delta`.
pub fn build_band_at_delta(sample: &RankedSample, pairs: &PairSet, delta: f64) -> Result<Band> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CalibError::InvalidArgument(format!("delta must lie in (0,1), got {delta}")));
    }
    build_with(sample, pairs, 2.0 * pairs.size() as f64 * delta, delta)
}

fn build_with(sample: &RankedSample, pairs: &PairSet, alpha: f64, delta: f64) -> Result<Band> {
    let n = sample.len();
    if pairs.size() == 0 {
        return Err(CalibError::InvalidArgument("empty pair set".into()));
    }
    let max_k = match &pairs.repr {
        PairsRepr::UpTo(kmax) => {
            if kmax.len() != n {
                return Err(CalibError::InvalidArgument(format!(
                    "pair set built for n={}, sample has n={n}",
                    kmax.len()
                )));
            }
            n - 1
        }
        PairsRepr::Explicit(p) => p.iter().map(|&(_, k)| k).max().unwrap(),
    };
    if max_k >= n {
        return Err(CalibError::InvalidArgument(format!(
            "pair index {max_k} beyond sample of size {n}"
        )));
    }

    let (best_l_at_k, best_u_at_j) = eval_pair_bounds(sample, pairs, delta)?;

    // Running envelope: prefix max of the k-grouped lower values, suffix min
    // of the j-grouped upper values; ties in the ranking share their group
    // extremes (a tied k is admissible for i).
    let mut step_l = best_l_at_k;
    for k in 1..n {
        step_l[k] = step_l[k].max(step_l[k - 1]);
    }
    let mut step_u = best_u_at_j;
    for j in (0..n - 1).rev() {
        step_u[j] = step_u[j].min(step_u[j + 1]);
    }

    let ranks = &sample.rank_values;
    let space = sample.family.mean_space();
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut group_start = 0usize;
    for i in 0..n {
        if ranks[i] != ranks[group_start] {
            group_start = i;
        }
        upper[i] = step_u[group_start];
        if !upper[i].is_finite() && upper[i] > 0.0 {
            upper[i] = space.1;
        }
    }
    let mut group_end = n - 1;
    for i in (0..n).rev() {
        if ranks[i] != ranks[group_end] {
            group_end = i;
        }
        lower[i] = step_l[group_end];
        if !lower[i].is_finite() && lower[i] < 0.0 {
            lower[i] = space.0;
        }
    }

    let crossed = lower.iter().zip(&upper).any(|(l, u)| l > u);
    Ok(Band {
        lower,
        upper,
        rank_values: ranks.clone(),
        alpha,
        delta,
        crossed,
        mean_space: space,
    })
}

/// Evaluates every pair bound and groups lower values by window end `k`
/// (running max) and upper values by window start `j` (running min). The
/// reduction is elementwise max/min, so the result does not depend on how
/// rayon partitions the work.
fn eval_pair_bounds(
    sample: &RankedSample,
    pairs: &PairSet,
    delta: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = sample.len();
    let eval = PairBoundEval::prepare(sample, pairs, delta)?;

    let identity = || (vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n]);
    let merge = |mut a: (Vec<f64>, Vec<f64>), b: (Vec<f64>, Vec<f64>)| {
        for (x, y) in a.0.iter_mut().zip(b.0) {
            *x = x.max(y);
        }
        for (x, y) in a.1.iter_mut().zip(b.1) {
            *x = x.min(y);
        }
        a
    };

    match &pairs.repr {
        PairsRepr::UpTo(kmax) => (0..n)
            .into_par_iter()
            .try_fold(identity, |(mut best_l, mut best_u), j| -> Result<_> {
                for k in j..=kmax[j] {
                    let (l, u) = eval.bounds(sample.z(j, k), sample.volume(j, k))?;
                    if l > best_l[k] {
                        best_l[k] = l;
                    }
                    if u < best_u[j] {
                        best_u[j] = u;
                    }
                }
                Ok((best_l, best_u))
            })
            .try_reduce(identity, |a, b| Ok(merge(a, b))),
        PairsRepr::Explicit(list) => list
            .par_iter()
            .try_fold(identity, |(mut best_l, mut best_u), &(j, k)| -> Result<_> {
                let (l, u) = eval.bounds(sample.z(j, k), sample.volume(j, k))?;
                if l > best_l[k] {
                    best_l[k] = l;
                }
                if u < best_u[j] {
                    best_u[j] = u;
                }
                Ok((best_l, best_u))
            })
            .try_reduce(identity, |a, b| Ok(merge(a, b))),
    }
}

/// Per-pair bound evaluator with the per-family quantile work shared across
/// pairs that hit the same key (aggregated volume for gamma, count for
/// Poisson, count/volume pair for binomial and negative binomial). Table
/// entries are produced by the very same closed-form routines as the
/// single-query API, so batched and direct evaluation agree bitwise.
enum PairBoundEval {
    Normal {
        phi: f64,
        q_hi: f64,
    },
    Gamma {
        phi: f64,
        vol_keys: Vec<u64>,
        q_lo: Vec<f64>,
        q_hi: Vec<f64>,
    },
    Poisson {
        phi: f64,
        count_keys: Vec<u64>,
        q_lo: Vec<f64>,
        q_hi: Vec<f64>,
    },
    CountPair {
        phi: f64,
        keys: Vec<(u64, u64)>,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Direct {
        family: EdfFamily,
        phi: f64,
        delta: f64,
    },
}

impl PairBoundEval {
    fn prepare(sample: &RankedSample, pairs: &PairSet, delta: f64) -> Result<Self> {
        let phi = sample.phi;
        match sample.family {
            EdfFamily::Normal => Ok(PairBoundEval::Normal {
                phi,
                q_hi: special::quantile_std_normal(1.0 - delta)?,
            }),
            EdfFamily::Gamma => {
                let mut vol_keys: Vec<u64> =
                    collect_pair_keys(sample, pairs, |_z, v| v.to_bits());
                vol_keys.par_sort_unstable();
                vol_keys.dedup();
                let quantiles: Result<Vec<(f64, f64)>> = vol_keys
                    .par_iter()
                    .map(|&bits| {
                        let shape = f64::from_bits(bits) / phi;
                        Ok((
                            special::inv_reg_lower_gamma(shape, delta)?,
                            special::inv_reg_lower_gamma(shape, 1.0 - delta)?,
                        ))
                    })
                    .collect();
                let (q_lo, q_hi) = quantiles?.into_iter().unzip();
                Ok(PairBoundEval::Gamma { phi, vol_keys, q_lo, q_hi })
            }
            EdfFamily::Poisson => {
                let mut count_keys: Vec<u64> =
                    collect_pair_keys(sample, pairs, |z, v| snap_count_bits(z, v, phi));
                count_keys.par_sort_unstable();
                count_keys.dedup();
                let quantiles: Result<Vec<(f64, f64)>> = count_keys
                    .par_iter()
                    .map(|&bits| {
                        let c = f64::from_bits(bits);
                        Ok((
                            bounds::poisson_lower_quantile(c, delta)?,
                            bounds::poisson_upper_quantile(c, delta)?,
                        ))
                    })
                    .collect();
                let (q_lo, q_hi) = quantiles?.into_iter().unzip();
                Ok(PairBoundEval::Poisson { phi, count_keys, q_lo, q_hi })
            }
            EdfFamily::Binomial | EdfFamily::NegBinomial => {
                let family = sample.family;
                let mut keys: Vec<(u64, u64)> =
                    collect_pair_keys(sample, pairs, |z, v| (snap_count_bits(z, v, phi), v.to_bits()));
                keys.par_sort_unstable();
                keys.dedup();
                let values: Result<Vec<(f64, f64)>> = keys
                    .par_iter()
                    .map(|&(cbits, vbits)| {
                        let c = f64::from_bits(cbits);
                        let m = f64::from_bits(vbits) / phi;
                        match family {
                            EdfFamily::Binomial => Ok((
                                bounds::binomial_lower(c, m, delta)?,
                                bounds::binomial_upper(c, m, delta)?,
                            )),
                            _ => Ok((
                                bounds::negbin_lower(c, m, delta)?,
                                bounds::negbin_upper(c, m, delta)?,
                            )),
                        }
                    })
                    .collect();
                let (lo, hi) = values?.into_iter().unzip();
                Ok(PairBoundEval::CountPair { phi, keys, lo, hi })
            }
            EdfFamily::InverseGaussian => Ok(PairBoundEval::Direct {
                family: sample.family,
                phi,
                delta,
            }),
        }
    }

    fn bounds(&self, z: f64, v: f64) -> Result<(f64, f64)> {
        match self {
            PairBoundEval::Normal { phi, q_hi } => {
                let m = v / phi;
                let half = q_hi / m.sqrt();
                Ok((z - half, z + half))
            }
            PairBoundEval::Gamma { phi, vol_keys, q_lo, q_hi } => {
                let i = vol_keys.binary_search(&v.to_bits()).expect("prepared key");
                if z <= 0.0 {
                    return Ok((0.0, 0.0));
                }
                let shape = v / phi;
                Ok((shape * z / q_hi[i], shape * z / q_lo[i]))
            }
            PairBoundEval::Poisson { phi, count_keys, q_lo, q_hi } => {
                let i = count_keys
                    .binary_search(&snap_count_bits(z, v, *phi))
                    .expect("prepared key");
                let m = v / phi;
                Ok((q_lo[i] / m, q_hi[i] / m))
            }
            PairBoundEval::CountPair { keys, lo, hi, phi, .. } => {
                let key = (snap_count_bits(z, v, *phi), v.to_bits());
                let i = keys.binary_search(&key).expect("prepared key");
                Ok((lo[i], hi[i]))
            }
            PairBoundEval::Direct { family, phi, delta } => {
                let m = v / phi;
                Ok((
                    bounds::bisect_bound(*family, z, m, *delta, BoundSide::Lower)?,
                    bounds::bisect_bound(*family, z, m, *delta, BoundSide::Upper)?,
                ))
            }
        }
    }
}

fn snap_count_bits(z: f64, v: f64, phi: f64) -> u64 {
    let c = z * (v / phi);
    let r = c.round();
    let snapped = if (c - r).abs() <= 1e-9 * (1.0 + c.abs()) {
        r.max(0.0)
    } else {
        c
    };
    snapped.to_bits()
}

fn collect_pair_keys<K: Send>(
    sample: &RankedSample,
    pairs: &PairSet,
    key: impl Fn(f64, f64) -> K + Sync,
) -> Vec<K> {
    match &pairs.repr {
        PairsRepr::UpTo(kmax) => (0..sample.len())
            .into_par_iter()
            .flat_map_iter(|j| {
                let key = &key;
                (j..=kmax[j]).map(move |k| key(sample.z(j, k), sample.volume(j, k)))
            })
            .collect(),
        PairsRepr::Explicit(list) => list
            .par_iter()
            .map(|&(j, k)| key(sample.z(j, k), sample.volume(j, k)))
            .collect(),
    }
}

/// Caps each edge with the weighted isotonic fit so the band no longer
/// crosses; the result still covers at the original confidence level.
pub fn repair_crossings(band: &Band, sample: &RankedSample) -> Result<Band> {
    if band.len() != sample.len() {
        return Err(CalibError::InvalidArgument(format!(
            "band of length {} vs sample of length {}",
            band.len(),
            sample.len()
        )));
    }
    let iso = isotonic::pava(&sample.responses(), &sample.volumes())?;
    let lower: Vec<f64> = band
        .lower
        .iter()
        .zip(&iso.fitted)
        .map(|(&l, &f)| l.min(f))
        .collect();
    let upper: Vec<f64> = band
        .upper
        .iter()
        .zip(&iso.fitted)
        .map(|(&u, &f)| u.max(f))
        .collect();
    Ok(Band {
        lower,
        upper,
        rank_values: band.rank_values.clone(),
        alpha: band.alpha,
        delta: band.delta,
        crossed: false,
        mean_space: band.mean_space,
    })
}

/// Yang–Barber sub-Gaussian band over unit-volume responses sorted by their
/// assumed mean order: isotonic window averages plus/minus
/// `sqrt(2 sigma^2 log(1/delta)) / sqrt(k - j + 1)` over the full pair set,
/// at `delta = alpha / (n^2 + n)`.
pub fn yang_barber_band(y: &[f64], sigma: f64, alpha: f64) -> Result<Band> {
    if y.is_empty() {
        return Err(CalibError::InvalidArgument("empty sample".into()));
    }
    if !(sigma > 0.0) {
        return Err(CalibError::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CalibError::InvalidArgument(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let n = y.len();
    let delta = alpha / ((n * n + n) as f64);
    let radius = (2.0 * sigma * sigma * (1.0 / delta).ln()).sqrt();

    let iso = isotonic::pava(y, &vec![1.0; n])?;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for f in &iso.fitted {
        prefix.push(prefix.last().unwrap() + f);
    }

    let mut best_l = vec![f64::NEG_INFINITY; n];
    let mut best_u = vec![f64::INFINITY; n];
    for j in 0..n {
        for k in j..n {
            let len = (k - j + 1) as f64;
            let z_iso = (prefix[k + 1] - prefix[j]) / len;
            let r = radius / len.sqrt();
            if z_iso - r > best_l[k] {
                best_l[k] = z_iso - r;
            }
            if z_iso + r < best_u[j] {
                best_u[j] = z_iso + r;
            }
        }
    }
    for k in 1..n {
        best_l[k] = best_l[k].max(best_l[k - 1]);
    }
    for j in (0..n - 1).rev() {
        best_u[j] = best_u[j].min(best_u[j + 1]);
    }
    let crossed = best_l.iter().zip(&best_u).any(|(l, u)| l > u);
    Ok(Band {
        lower: best_l,
        upper: best_u,
        rank_values: (0..n).map(|i| i as f64).collect(),
        alpha,
        delta,
        crossed,
        mean_space: (f64::NEG_INFINITY, f64::INFINITY),
    })
}
