//! Distribution descriptors for the supported exponential dispersion
//! family members.
//!
//! A response in the reproductive form satisfies `E[Y] = kappa'(theta)` and
//! `Var(Y) = (phi / v) V(mu)`. Count families (binomial, Poisson, negative
//! binomial) are handled through their additive form `N = v Y / phi`, so all
//! distribution evaluations depend on the volume and dispersion only through
//! the ratio `v / phi`.

use crate::error::{CalibError, Result};
use crate::special;

/// Relative tolerance used to snap values to count-scale support atoms.
const ATOM_SNAP: f64 = 1e-9;

/// The supported family members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdfFamily {
    Binomial,
    Poisson,
    NegBinomial,
    Gamma,
    Normal,
    InverseGaussian,
}

/// Reproductive (`Y`) versus additive (`N = vY/phi`) role of a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyForm {
    Reproductive,
    Additive,
}

/// A single response on the reproductive scale together with its volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersedObs {
    pub y: f64,
    pub v: f64,
}

impl DispersedObs {
    pub fn new(y: f64, v: f64) -> Self {
        Self { y, v }
    }
}

impl EdfFamily {
    pub const ALL: [EdfFamily; 6] = [
        EdfFamily::Binomial,
        EdfFamily::Poisson,
        EdfFamily::NegBinomial,
        EdfFamily::Gamma,
        EdfFamily::Normal,
        EdfFamily::InverseGaussian,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EdfFamily::Binomial => "binomial",
            EdfFamily::Poisson => "poisson",
            EdfFamily::NegBinomial => "negbinomial",
            EdfFamily::Gamma => "gamma",
            EdfFamily::Normal => "normal",
            EdfFamily::InverseGaussian => "inverse-gaussian",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "binomial" | "bin" => Ok(EdfFamily::Binomial),
            "poisson" | "poi" => Ok(EdfFamily::Poisson),
            "negbinomial" | "negbin" | "nb" => Ok(EdfFamily::NegBinomial),
            "gamma" => Ok(EdfFamily::Gamma),
            "normal" | "gaussian" => Ok(EdfFamily::Normal),
            "inverse-gaussian" | "inversegaussian" | "ig" => Ok(EdfFamily::InverseGaussian),
            other => Err(CalibError::InvalidArgument(format!(
                "unknown family '{other}'"
            ))),
        }
    }

    pub fn form(&self) -> FamilyForm {
        match self {
            EdfFamily::Binomial | EdfFamily::Poisson | EdfFamily::NegBinomial => {
                FamilyForm::Additive
            }
            EdfFamily::Gamma | EdfFamily::Normal | EdfFamily::InverseGaussian => {
                FamilyForm::Reproductive
            }
        }
    }

    /// Open interval `kappa'(int Theta)` of admissible means.
    pub fn mean_space(&self) -> (f64, f64) {
        match self {
            EdfFamily::Binomial => (0.0, 1.0),
            EdfFamily::Normal => (f64::NEG_INFINITY, f64::INFINITY),
            _ => (0.0, f64::INFINITY),
        }
    }

    fn check_mean(&self, mu: f64) -> Result<()> {
        let (lo, hi) = self.mean_space();
        if mu.is_nan() || mu <= lo || mu >= hi {
            return Err(CalibError::Domain(format!(
                "mean {mu} outside the open mean space ({lo}, {hi}) of the {} family",
                self.name()
            )));
        }
        Ok(())
    }

    /// Canonical link `h(mu) = (kappa')^{-1}(mu)`.
    pub fn canonical_link(&self, mu: f64) -> Result<f64> {
        self.check_mean(mu)?;
        Ok(match self {
            EdfFamily::Binomial => (mu / (1.0 - mu)).ln(),
            EdfFamily::Poisson => mu.ln(),
            EdfFamily::NegBinomial => (mu / (1.0 + mu)).ln(),
            EdfFamily::Gamma => -1.0 / mu,
            EdfFamily::Normal => mu,
            EdfFamily::InverseGaussian => -1.0 / (2.0 * mu * mu),
        })
    }

    /// Variance function `V(mu) = kappa''(h(mu))`.
    pub fn variance_function(&self, mu: f64) -> Result<f64> {
        self.check_mean(mu)?;
        Ok(match self {
            EdfFamily::Binomial => mu * (1.0 - mu),
            EdfFamily::Poisson => mu,
            EdfFamily::NegBinomial => mu * (1.0 + mu),
            EdfFamily::Gamma => mu * mu,
            EdfFamily::Normal => 1.0,
            EdfFamily::InverseGaussian => mu * mu * mu,
        })
    }

    /// Checks that `y` is a legal realization at volume-to-dispersion ratio
    /// `v_over_phi`. Count families also require the additive value
    /// `y * v / phi` to sit on an integer atom.
    pub fn check_support(&self, y: f64, v_over_phi: f64) -> Result<()> {
        if !y.is_finite() {
            return Err(CalibError::Support(format!("non-finite response {y}")));
        }
        if !(v_over_phi > 0.0) {
            return Err(CalibError::Domain(format!(
                "v/phi must be positive, got {v_over_phi}"
            )));
        }
        let fail = |msg: &str| -> Result<()> {
            Err(CalibError::Support(format!(
                "{msg} (family {}, y={y}, v/phi={v_over_phi})",
                self.name()
            )))
        };
        match self {
            EdfFamily::Binomial => {
                if !(0.0..=1.0).contains(&y) {
                    return fail("binomial response must lie in [0, 1]");
                }
                let c = y * v_over_phi;
                if (c - c.round()).abs() > ATOM_SNAP * (1.0 + c.abs()) {
                    return fail("binomial count y*v/phi must be an integer");
                }
            }
            EdfFamily::Poisson | EdfFamily::NegBinomial => {
                if y < 0.0 {
                    return fail("count response must be non-negative");
                }
                let c = y * v_over_phi;
                if (c - c.round()).abs() > ATOM_SNAP * (1.0 + c.abs()) {
                    return fail("count y*v/phi must be an integer");
                }
            }
            EdfFamily::Gamma | EdfFamily::InverseGaussian => {
                if !(y > 0.0) {
                    return fail("response must be strictly positive");
                }
            }
            EdfFamily::Normal => {}
        }
        Ok(())
    }

    /// `P(Y <= y)` for a response with mean `mu`. Discrete families go
    /// through the incomplete beta/gamma identities rather than summation.
    pub fn cdf(&self, y: f64, mu: f64, v_over_phi: f64) -> Result<f64> {
        self.check_mean(mu)?;
        check_ratio(v_over_phi)?;
        Ok(match self {
            EdfFamily::Binomial => {
                let m = v_over_phi;
                match count_at_or_below(y * m) {
                    None => 0.0,
                    Some(k) if k >= m - 0.5 => 1.0,
                    Some(k) => 1.0 - special::reg_inc_beta(k + 1.0, m - k, mu),
                }
            }
            EdfFamily::Poisson => match count_at_or_below(y * v_over_phi) {
                None => 0.0,
                Some(k) => special::reg_upper_gamma(k + 1.0, mu * v_over_phi),
            },
            EdfFamily::NegBinomial => match count_at_or_below(y * v_over_phi) {
                None => 0.0,
                Some(k) => {
                    let p = mu / (1.0 + mu);
                    1.0 - special::reg_inc_beta(k + 1.0, v_over_phi, p)
                }
            },
            EdfFamily::Gamma => {
                if y <= 0.0 {
                    0.0
                } else {
                    special::reg_lower_gamma(v_over_phi, v_over_phi * y / mu)
                }
            }
            EdfFamily::Normal => special::norm_cdf((y - mu) * v_over_phi.sqrt()),
            EdfFamily::InverseGaussian => inverse_gaussian_cdf(y, mu, v_over_phi),
        })
    }

    /// Left limit `P(Y < y)`; differs from [`EdfFamily::cdf`] only on the
    /// support atoms of the count families.
    pub fn cdf_strict(&self, y: f64, mu: f64, v_over_phi: f64) -> Result<f64> {
        match self.form() {
            FamilyForm::Reproductive => self.cdf(y, mu, v_over_phi),
            FamilyForm::Additive => {
                let c = y * v_over_phi;
                match nearest_atom(c) {
                    // Not on an atom: no mass at y itself.
                    None => self.cdf(y, mu, v_over_phi),
                    Some(k) => {
                        let prev = (k - 1.0) / v_over_phi;
                        if k < 0.5 {
                            // Nothing below the zero atom.
                            self.check_mean(mu)?;
                            Ok(0.0)
                        } else {
                            self.cdf(prev, mu, v_over_phi)
                        }
                    }
                }
            }
        }
    }

    /// Unit deviance `d(y, mu)`; the weighted average of these is the
    /// deviance dispersion estimate.
    pub fn unit_deviance(&self, y: f64, mu: f64) -> Result<f64> {
        self.check_mean(mu)?;
        let d = match self {
            EdfFamily::Normal => (y - mu) * (y - mu),
            EdfFamily::Poisson => {
                if y < 0.0 {
                    return Err(CalibError::Support(format!("negative count {y}")));
                }
                let ylog = if y > 0.0 { y * (y / mu).ln() } else { 0.0 };
                2.0 * (ylog - y + mu)
            }
            EdfFamily::Gamma => {
                if !(y > 0.0) {
                    return Err(CalibError::Support(format!("non-positive gamma response {y}")));
                }
                2.0 * (-(y / mu).ln() + (y - mu) / mu)
            }
            EdfFamily::InverseGaussian => {
                if !(y > 0.0) {
                    return Err(CalibError::Support(format!(
                        "non-positive inverse Gaussian response {y}"
                    )));
                }
                (y - mu) * (y - mu) / (mu * mu * y)
            }
            EdfFamily::Binomial => {
                if !(0.0..=1.0).contains(&y) {
                    return Err(CalibError::Support(format!("binomial response {y}")));
                }
                let t1 = if y > 0.0 { y * (y / mu).ln() } else { 0.0 };
                let t2 = if y < 1.0 {
                    (1.0 - y) * ((1.0 - y) / (1.0 - mu)).ln()
                } else {
                    0.0
                };
                2.0 * (t1 + t2)
            }
            EdfFamily::NegBinomial => {
                if y < 0.0 {
                    return Err(CalibError::Support(format!("negative count {y}")));
                }
                let t1 = if y > 0.0 { y * (y / mu).ln() } else { 0.0 };
                2.0 * (t1 - (1.0 + y) * ((1.0 + y) / (1.0 + mu)).ln())
            }
        };
        Ok(d.max(0.0))
    }
}

fn check_ratio(v_over_phi: f64) -> Result<()> {
    if !(v_over_phi > 0.0) || !v_over_phi.is_finite() {
        return Err(CalibError::Domain(format!(
            "v/phi must be positive and finite, got {v_over_phi}"
        )));
    }
    Ok(())
}

/// Largest count atom at or below `c`, snapping near-integers. `None` when
/// the whole support lies above `c`.
fn count_at_or_below(c: f64) -> Option<f64> {
    let k = match nearest_atom(c) {
        Some(k) => k,
        None => c.floor(),
    };
    if k < -0.5 {
        None
    } else {
        Some(k.max(0.0))
    }
}

/// Integer atom that `c` sits on, within the snap tolerance.
fn nearest_atom(c: f64) -> Option<f64> {
    let r = c.round();
    if (c - r).abs() <= ATOM_SNAP * (1.0 + c.abs()) {
        Some(r)
    } else {
        None
    }
}

/// Two-term closed form for the inverse Gaussian CDF with `lambda = v/phi`;
/// the second term is assembled in log space so large `lambda/mu` ratios do
/// not overflow.
fn inverse_gaussian_cdf(y: f64, mu: f64, lambda: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let s = (lambda / y).sqrt();
    let a = s * (y / mu - 1.0);
    let b = s * (y / mu + 1.0);
    let ln_term2 = 2.0 * lambda / mu + special::ln_norm_cdf(-b);
    let term2 = if ln_term2 < -745.0 { 0.0 } else { ln_term2.exp() };
    (special::norm_cdf(a) + term2).min(1.0)
}

/// Limit of the inverse Gaussian CDF as the mean grows without bound; the
/// family is not tight in that direction, so `F(y; mu)` never falls below
/// this value. Drives the infinite-upper-bound detection.
pub(crate) fn inverse_gaussian_cdf_floor(y: f64, lambda: f64) -> f64 {
    special::erfc((lambda / (2.0 * y)).sqrt())
}
