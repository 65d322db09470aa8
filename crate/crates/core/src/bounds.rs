//! Lower and upper mean bounds for a single volume-weighted aggregate.
//!
//! The lower bound is `inf { mu : F*(z; h(mu), v, phi) <= 1 - delta }` and
//! the upper bound is `sup { mu : F(z; h(mu), v, phi) >= delta }`. Binomial,
//! Poisson, negative binomial, gamma and normal queries dispatch to closed
//! forms in terms of beta/gamma/normal quantiles; everything else (the
//! inverse Gaussian in particular) falls back to safeguarded bisection on
//! the mean, using that both distribution functions are non-increasing in
//! the mean.
//!
//! The inverse Gaussian is not tight as the mean grows: `F(z; mu)` decreases
//! to `erfc(sqrt(lambda / (2 z))) > 0`, so whenever `delta` is at or below
//! that floor no mean is excluded and the upper bound is genuinely infinite.
//! Bound values therefore live in the closure of the mean space.

use crate::error::{CalibError, Result};
use crate::family::{inverse_gaussian_cdf_floor, EdfFamily, FamilyForm};
use crate::special;

/// One bound evaluation request on the aggregate scale.
#[derive(Debug, Clone, Copy)]
pub struct BoundQuery {
    pub family: EdfFamily,
    /// Aggregate value (reproductive scale), in the support closure.
    pub z: f64,
    /// Aggregated volume, > 0.
    pub v: f64,
    /// Dispersion, > 0.
    pub phi: f64,
    /// Tail level in (0, 1); values >= 1/2 are legal and may cross.
    pub delta: f64,
}

/// Which of the two defining bounds to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    Lower,
    Upper,
}

impl BoundQuery {
    pub fn new(family: EdfFamily, z: f64, v: f64, phi: f64, delta: f64) -> Self {
        Self { family, z, v, phi, delta }
    }

    fn ratio(&self) -> f64 {
        self.v / self.phi
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v > 0.0) || !self.v.is_finite() {
            return Err(CalibError::InvalidArgument(format!("volume must be positive, got {}", self.v)));
        }
        if !(self.phi > 0.0) || !self.phi.is_finite() {
            return Err(CalibError::InvalidArgument(format!(
                "dispersion must be positive, got {}",
                self.phi
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(CalibError::InvalidArgument(format!(
                "delta must lie in (0,1), got {}",
                self.delta
            )));
        }
        check_closure(self.family, self.z, self.ratio())
    }
}

/// Membership of `z` in the support closure (boundary points allowed).
fn check_closure(family: EdfFamily, z: f64, m: f64) -> Result<()> {
    if !z.is_finite() {
        return Err(CalibError::Support(format!("non-finite aggregate {z}")));
    }
    match family {
        EdfFamily::Binomial => {
            if !(0.0..=1.0).contains(&z) {
                return Err(CalibError::Support(format!("binomial aggregate {z} outside [0,1]")));
            }
            snap_count(z * m).ok_or_else(|| {
                CalibError::Support(format!("binomial aggregate count {} not an atom", z * m))
            })?;
        }
        EdfFamily::Poisson | EdfFamily::NegBinomial => {
            if z < 0.0 {
                return Err(CalibError::Support(format!("negative count aggregate {z}")));
            }
            snap_count(z * m).ok_or_else(|| {
                CalibError::Support(format!("count aggregate {} not an atom", z * m))
            })?;
        }
        EdfFamily::Gamma | EdfFamily::InverseGaussian => {
            if z < 0.0 {
                return Err(CalibError::Support(format!("negative aggregate {z}")));
            }
        }
        EdfFamily::Normal => {}
    }
    Ok(())
}

fn snap_count(c: f64) -> Option<f64> {
    let r = c.round();
    if (c - r).abs() <= 1e-9 * (1.0 + c.abs()) {
        Some(r.max(0.0))
    } else {
        None
    }
}

/// `l^delta(z, v, phi)`; may sit at the mean-space closure boundary.
pub fn lower_bound(q: &BoundQuery) -> Result<f64> {
    q.validate()?;
    bound_value(q, BoundSide::Lower)
}

/// `u^delta(z, v, phi)`; may sit at the mean-space closure boundary.
pub fn upper_bound(q: &BoundQuery) -> Result<f64> {
    q.validate()?;
    bound_value(q, BoundSide::Upper)
}

fn bound_value(q: &BoundQuery, side: BoundSide) -> Result<f64> {
    let m = q.ratio();
    match q.family {
        EdfFamily::Binomial => {
            let c = snap_count(q.z * m).expect("validated");
            match side {
                BoundSide::Lower => binomial_lower(c, m, q.delta),
                BoundSide::Upper => binomial_upper(c, m, q.delta),
            }
        }
        EdfFamily::Poisson => {
            let c = snap_count(q.z * m).expect("validated");
            match side {
                BoundSide::Lower => Ok(poisson_lower_quantile(c, q.delta)? / m),
                BoundSide::Upper => Ok(poisson_upper_quantile(c, q.delta)? / m),
            }
        }
        EdfFamily::NegBinomial => {
            let c = snap_count(q.z * m).expect("validated");
            match side {
                BoundSide::Lower => negbin_lower(c, m, q.delta),
                BoundSide::Upper => negbin_upper(c, m, q.delta),
            }
        }
        EdfFamily::Gamma => match side {
            BoundSide::Lower => gamma_bound(q.z, m, 1.0 - q.delta),
            BoundSide::Upper => gamma_bound(q.z, m, q.delta),
        },
        EdfFamily::Normal => {
            let half = special::quantile_std_normal(1.0 - q.delta)? / m.sqrt();
            Ok(match side {
                BoundSide::Lower => q.z - half,
                BoundSide::Upper => q.z + half,
            })
        }
        EdfFamily::InverseGaussian => bisect_bound(q.family, q.z, m, q.delta, side),
    }
}

pub(crate) fn binomial_lower(c: f64, m: f64, delta: f64) -> Result<f64> {
    if c <= 0.0 {
        return Ok(0.0);
    }
    special::quantile_beta(delta, c, 1.0 + m - c)
}

pub(crate) fn binomial_upper(c: f64, m: f64, delta: f64) -> Result<f64> {
    if c >= m - 0.5 {
        return Ok(1.0);
    }
    special::quantile_beta(1.0 - delta, 1.0 + c, m - c)
}

pub(crate) fn poisson_lower_quantile(c: f64, delta: f64) -> Result<f64> {
    if c <= 0.0 {
        return Ok(0.0);
    }
    special::quantile_gamma(delta, c, 1.0)
}

pub(crate) fn poisson_upper_quantile(c: f64, delta: f64) -> Result<f64> {
    special::quantile_gamma(1.0 - delta, 1.0 + c, 1.0)
}

pub(crate) fn negbin_lower(c: f64, gamma_shape: f64, delta: f64) -> Result<f64> {
    if c <= 0.0 {
        return Ok(0.0);
    }
    let b = special::quantile_beta(delta, c, gamma_shape)?;
    Ok(b / (1.0 - b))
}

pub(crate) fn negbin_upper(c: f64, gamma_shape: f64, delta: f64) -> Result<f64> {
    let b = special::quantile_beta(1.0 - delta, 1.0 + c, gamma_shape)?;
    Ok(b / (1.0 - b))
}

/// Shared gamma-family form: `(v/phi) * z / q_Gamma(p; v/phi, 1)`. With
/// `p = 1 - delta` this is the lower bound, with `p = delta` the upper; both
/// are increasing in `z`, as required for the partial-sum argument.
pub(crate) fn gamma_bound(z: f64, shape: f64, p: f64) -> Result<f64> {
    if z <= 0.0 {
        return Ok(0.0);
    }
    Ok(shape * z / special::inv_reg_lower_gamma(shape, p)?)
}

/// Safeguarded bisection on the mean through the distribution-function
/// definitions; the generic route for families without a closed form, and
/// a cross-check for those with one.
pub fn bisect_bound(
    family: EdfFamily,
    z: f64,
    v_over_phi: f64,
    delta: f64,
    side: BoundSide,
) -> Result<f64> {
    let (space_lo, space_hi) = family.mean_space();

    if family == EdfFamily::InverseGaussian {
        if z <= 0.0 {
            // Closure boundary: F(0; mu) = 0 for every mean.
            return Ok(0.0);
        }
        let floor = inverse_gaussian_cdf_floor(z, v_over_phi);
        match side {
            // F* never drops below the floor: the defining set is empty.
            BoundSide::Lower if floor > 1.0 - delta => return Ok(space_hi),
            // F stays above delta for every mean: no mean is excluded.
            BoundSide::Upper if floor >= delta => return Ok(space_hi),
            _ => {}
        }
    }

    // cond(mu) is monotone in mu: true on an upper ray for the lower bound,
    // true on a lower ray for the upper bound.
    let cond = |mu: f64| -> Result<bool> {
        Ok(match side {
            BoundSide::Lower => family.cdf_strict(z, mu, v_over_phi)? <= 1.0 - delta,
            BoundSide::Upper => family.cdf(z, mu, v_over_phi)? >= delta,
        })
    };

    let bounded = space_hi.is_finite();
    let start = match family {
        EdfFamily::Normal => z,
        EdfFamily::Binomial => z.clamp(1e-12, 1.0 - 1e-12),
        _ => z.max(1e-12 * (1.0 + 1.0 / v_over_phi)),
    };
    let step = if family == EdfFamily::Normal {
        (1.0 / v_over_phi).sqrt().max(1e-12)
    } else {
        0.0
    };

    let up = |mu: f64, k: u32| -> f64 {
        match family {
            EdfFamily::Normal => mu + step * (1u64 << k.min(60)) as f64,
            EdfFamily::Binomial => 1.0 - (1.0 - mu) / 2.0,
            _ => mu * 2.0,
        }
    };
    let down = |mu: f64, k: u32| -> f64 {
        match family {
            EdfFamily::Normal => mu - step * (1u64 << k.min(60)) as f64,
            _ => mu / 2.0,
        }
    };
    let at_hi = |mu: f64| -> bool {
        if bounded {
            space_hi - mu < 1e-14
        } else {
            mu > 1e38
        }
    };
    let at_lo = |mu: f64| -> bool { mu - space_lo < 1e-300 || (space_lo.is_infinite() && mu < -1e38) };

    // Expand a geometric bracket so that the condition flips across it.
    let want_at_start = cond(start)?;
    let mut on = start; // condition holds here
    let mut off = start; // condition fails here
    if want_at_start {
        let seek_down = side == BoundSide::Lower;
        let mut k = 0;
        loop {
            let next = if seek_down { down(on, k) } else { up(on, k) };
            if seek_down && at_lo(next) {
                if cond(next.max(space_lo + f64::MIN_POSITIVE))? {
                    return Ok(space_lo);
                }
                off = next;
                break;
            }
            if !seek_down && at_hi(next) {
                if cond(next.min(space_hi))? {
                    return Ok(space_hi);
                }
                off = next;
                break;
            }
            if cond(next)? {
                on = next;
            } else {
                off = next;
                break;
            }
            k += 1;
            if k > 200 {
                return Err(CalibError::NonConvergence(format!(
                    "bracket expansion exhausted ({family:?}, z={z}, side={side:?})"
                )));
            }
        }
    } else {
        let seek_up = side == BoundSide::Lower;
        let mut k = 0;
        loop {
            let next = if seek_up { up(off, k) } else { down(off, k) };
            if seek_up && at_hi(next) {
                if !cond(next.min(space_hi))? {
                    // inf of an empty set: the convention sends it to the top.
                    return Ok(space_hi);
                }
                on = next;
                break;
            }
            if !seek_up && at_lo(next) {
                if !cond(next.max(space_lo + f64::MIN_POSITIVE))? {
                    // sup of an empty set: the convention sends it down.
                    return Ok(space_lo);
                }
                on = next;
                break;
            }
            if cond(next)? {
                on = next;
                break;
            }
            off = next;
            k += 1;
            if k > 200 {
                return Err(CalibError::NonConvergence(format!(
                    "bracket expansion exhausted ({family:?}, z={z}, side={side:?})"
                )));
            }
        }
    }

    // Bisect to relative tolerance 1e-10; the bracket halves every step.
    let mut a = on.min(off);
    let mut b = on.max(off);
    for _ in 0..200 {
        if (b - a) <= 1e-10 * b.abs().max(a.abs()).max(1e-10) {
            break;
        }
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let mid_on = cond(mid)?;
        let keep_low = match side {
            // Condition true on the upper ray: boundary is below true points.
            BoundSide::Lower => !mid_on,
            // Condition true on the lower ray: boundary is above true points.
            BoundSide::Upper => mid_on,
        };
        if keep_low {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Definition-level oracle: scans a mean grid, evaluating the distribution
/// functions directly (pmf summation for the count families), and returns
/// the inf/sup prescribed by the defining sets. Saturation at either grid
/// end means the true bound lies at or beyond that end.
pub fn brute_force_bound(q: &BoundQuery, side: BoundSide, grid_size: usize) -> Result<f64> {
    q.validate()?;
    if grid_size < 1000 {
        return Err(CalibError::InvalidArgument(format!(
            "oracle grid must have at least 1000 points, got {grid_size}"
        )));
    }
    let m = q.ratio();
    let grid = OracleGrid::new(q, grid_size);
    match side {
        BoundSide::Lower => {
            for i in 0..grid_size {
                let mu = grid.at(i);
                if direct_cdf_strict(q.family, q.z, mu, m) <= 1.0 - q.delta {
                    return Ok(mu);
                }
            }
            Ok(grid.at(grid_size - 1))
        }
        BoundSide::Upper => {
            for i in (0..grid_size).rev() {
                let mu = grid.at(i);
                if direct_cdf(q.family, q.z, mu, m) >= q.delta {
                    return Ok(mu);
                }
            }
            Ok(grid.at(0))
        }
    }
}

/// Local spacing of the oracle grid around `at`, for tolerance computations.
pub fn oracle_grid_step(q: &BoundQuery, grid_size: usize, at: f64) -> f64 {
    OracleGrid::new(q, grid_size).step_at(at)
}

/// First and last grid points of the oracle scan.
pub fn oracle_grid_range(q: &BoundQuery, grid_size: usize) -> (f64, f64) {
    let g = OracleGrid::new(q, grid_size);
    (g.at(0), g.at(grid_size - 1))
}

enum OracleGrid {
    Linear { lo: f64, step: f64 },
    Log { ln_lo: f64, ln_step: f64 },
}

impl OracleGrid {
    fn new(q: &BoundQuery, grid_size: usize) -> Self {
        let m = q.v / q.phi;
        let count = (grid_size as f64 - 1.0).max(1.0);
        match q.family {
            EdfFamily::Binomial => {
                let step = 1.0 / (grid_size as f64 + 1.0);
                OracleGrid::Linear { lo: step, step }
            }
            EdfFamily::Normal => {
                let half = 40.0 * (1.0 / m).sqrt().max(1e-8);
                OracleGrid::Linear {
                    lo: q.z - half,
                    step: 2.0 * half / count,
                }
            }
            _ => {
                let scale_lo = [q.z, 1.0 / m, 1.0]
                    .into_iter()
                    .filter(|s| *s > 0.0)
                    .fold(f64::INFINITY, f64::min);
                let lo = (1e-8 * scale_lo).max(1e-280);
                let hi = 1e8 * q.z.max(1.0 / m).max(1.0);
                OracleGrid::Log {
                    ln_lo: lo.ln(),
                    ln_step: (hi.ln() - lo.ln()) / count,
                }
            }
        }
    }

    fn at(&self, i: usize) -> f64 {
        match self {
            OracleGrid::Linear { lo, step } => lo + step * i as f64,
            OracleGrid::Log { ln_lo, ln_step } => (ln_lo + ln_step * i as f64).exp(),
        }
    }

    fn step_at(&self, x: f64) -> f64 {
        match self {
            OracleGrid::Linear { step, .. } => *step,
            OracleGrid::Log { ln_step, .. } => x.abs() * ln_step.exp_m1().max(*ln_step),
        }
    }
}

/// Direct CDF used by the oracle; never routes through the incomplete
/// function identities for the count families.
fn direct_cdf(family: EdfFamily, z: f64, mu: f64, m: f64) -> f64 {
    match family.form() {
        FamilyForm::Additive => {
            let c = snap_count(z * m).unwrap_or_else(|| (z * m).floor());
            pmf_sum(family, c as i64, mu, m)
        }
        FamilyForm::Reproductive => continuous_cdf(family, z, mu, m),
    }
}

fn direct_cdf_strict(family: EdfFamily, z: f64, mu: f64, m: f64) -> f64 {
    match family.form() {
        FamilyForm::Additive => {
            let c = snap_count(z * m).unwrap_or_else(|| (z * m).floor());
            pmf_sum(family, c as i64 - 1, mu, m)
        }
        FamilyForm::Reproductive => continuous_cdf(family, z, mu, m),
    }
}

fn continuous_cdf(family: EdfFamily, z: f64, mu: f64, m: f64) -> f64 {
    match family {
        EdfFamily::Gamma => {
            if z <= 0.0 {
                0.0
            } else {
                special::reg_lower_gamma(m, m * z / mu)
            }
        }
        EdfFamily::Normal => special::norm_cdf((z - mu) * m.sqrt()),
        EdfFamily::InverseGaussian => {
            // Same two-term closed form the family module uses; the oracle
            // character lives in the grid scan, not in this kernel.
            family.cdf(z, mu, m).unwrap_or(f64::NAN)
        }
        _ => unreachable!("continuous_cdf called for a count family"),
    }
}

/// `P(N <= k)` by direct pmf recursion.
fn pmf_sum(family: EdfFamily, k: i64, mu: f64, m: f64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    let k = k as usize;
    match family {
        EdfFamily::Binomial => {
            if k as f64 >= m - 0.5 {
                return 1.0;
            }
            let odds = mu / (1.0 - mu);
            let mut p = (m * (-mu).ln_1p()).exp();
            let mut sum = p;
            for l in 0..k {
                let l = l as f64;
                p *= (m - l) / (l + 1.0) * odds;
                sum += p;
            }
            sum.min(1.0)
        }
        EdfFamily::Poisson => {
            let lambda = mu * m;
            let mut p = (-lambda).exp();
            let mut sum = p;
            for l in 0..k {
                p *= lambda / (l as f64 + 1.0);
                sum += p;
            }
            sum.min(1.0)
        }
        EdfFamily::NegBinomial => {
            let prob = mu / (1.0 + mu);
            let mut p = (-m * (1.0 + mu).ln()).exp();
            let mut sum = p;
            for l in 0..k {
                let l = l as f64;
                p *= prob * (m + l) / (l + 1.0);
                sum += p;
            }
            sum.min(1.0)
        }
        _ => unreachable!("pmf_sum called for a continuous family"),
    }
}
