//! Run configuration for the `band` subcommand: flag parsing helpers and
//! the flat `key = value` config-file format. Command-line flags override
//! file entries.

use anyhow::{anyhow, bail, Context};
use calib_core::{EdfFamily, PairStrategy};
use std::collections::HashMap;
use std::path::Path;

/// How the dispersion entering the bounds is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DispersionSpec {
    Fixed(f64),
    Pearson,
    Deviance,
    MleIg,
}

impl DispersionSpec {
    pub fn parse(s: &str) -> anyhow::Result<Self> {
        let s = s.trim();
        if let Some(v) = s.strip_prefix("fixed:") {
            let phi: f64 = v.parse().context("dispersion value")?;
            if !(phi > 0.0) {
                bail!("fixed dispersion must be positive, got {phi}");
            }
            return Ok(DispersionSpec::Fixed(phi));
        }
        match s {
            "pearson" => Ok(DispersionSpec::Pearson),
            "deviance" => Ok(DispersionSpec::Deviance),
            "mle-ig" | "mle_ig" => Ok(DispersionSpec::MleIg),
            other => Err(anyhow!(
                "unknown dispersion '{other}' (expected fixed:<phi>|pearson|deviance|mle-ig)"
            )),
        }
    }
}

/// Parses `full | distinct | nbh:<s> | dist:<d>`.
pub fn parse_pairs(s: &str) -> anyhow::Result<PairStrategy> {
    let s = s.trim();
    if let Some(v) = s.strip_prefix("nbh:") {
        return Ok(PairStrategy::Nbh(v.parse().context("nbh size")?));
    }
    if let Some(v) = s.strip_prefix("dist:") {
        return Ok(PairStrategy::Dist(v.parse().context("dist threshold")?));
    }
    match s {
        "full" => Ok(PairStrategy::Full),
        "distinct" => Ok(PairStrategy::Distinct),
        other => Err(anyhow!(
            "unknown pair strategy '{other}' (expected full|distinct|nbh:<s>|dist:<d>)"
        )),
    }
}

/// Everything the band pipeline needs to run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub family: EdfFamily,
    pub alpha: f64,
    pub dispersion: DispersionSpec,
    pub pairs: PairStrategy,
    pub bins: Option<usize>,
    pub repair: bool,
    pub epsilon: Option<f64>,
    /// Estimated-parameter count entering the dispersion denominators.
    pub q: usize,
}

impl RunConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            bail!("alpha must lie in (0,1), got {}", self.alpha);
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0) {
                bail!("epsilon must be positive, got {e}");
            }
        }
        if let Some(b) = self.bins {
            if b == 0 {
                bail!("bins must be at least 1");
            }
        }
        Ok(())
    }
}

/// Reads a flat UTF-8 `key = value` file; `#` starts a comment.
pub fn read_config_file(path: &Path) -> anyhow::Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected 'key = value'", path.display(), lineno + 1))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}
