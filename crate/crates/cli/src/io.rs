//! CSV ingestion and band-table output. Input follows RFC 4180 with a
//! header row: `y` and `mu_hat` are required, `v` defaults to 1, and an
//! optional `rank` column overrides the default ranking by `mu_hat`.

use anyhow::{bail, Context};
use std::io::Write;
use std::path::Path;

/// One parsed input row.
#[derive(Debug, Clone, Copy)]
pub struct InputRow {
    pub y: f64,
    pub v: f64,
    pub mu_hat: f64,
    pub rank: f64,
}

/// One output row of the band table.
#[derive(Debug, Clone, Copy)]
pub struct BandRecord {
    pub rank: f64,
    pub y: f64,
    pub v: f64,
    pub mu_hat: f64,
    pub lower: f64,
    pub upper: f64,
    pub inside: bool,
}

pub fn read_input_csv(path: &Path) -> anyhow::Result<Vec<InputRow>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = reader.headers().context("reading CSV header")?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let y_col = col("y").ok_or_else(|| anyhow::anyhow!("missing required column 'y'"))?;
    let mu_col = col("mu_hat").ok_or_else(|| anyhow::anyhow!("missing required column 'mu_hat'"))?;
    let v_col = col("v");
    let rank_col = col("rank");

    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("reading CSV row {}", idx + 2))?;
        let field = |c: usize, name: &str| -> anyhow::Result<f64> {
            record
                .get(c)
                .ok_or_else(|| anyhow::anyhow!("row {}: missing field '{name}'", idx + 2))?
                .trim()
                .parse::<f64>()
                .with_context(|| format!("row {}: bad value for '{name}'", idx + 2))
        };
        let y = field(y_col, "y")?;
        let mu_hat = field(mu_col, "mu_hat")?;
        let v = match v_col {
            Some(c) => field(c, "v")?,
            None => 1.0,
        };
        let rank = match rank_col {
            Some(c) => field(c, "rank")?,
            None => mu_hat,
        };
        if !(v > 0.0) {
            bail!("row {}: volume must be positive, got {v}", idx + 2);
        }
        rows.push(InputRow { y, v, mu_hat, rank });
    }
    if rows.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Ok(rows)
}

pub fn write_band_csv<W: Write>(records: &[BandRecord], mut out: W) -> anyhow::Result<()> {
    writeln!(out, "rank,y,v,mu_hat,lower,upper,inside")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt(r.rank),
            fmt(r.y),
            fmt(r.v),
            fmt(r.mu_hat),
            fmt(r.lower),
            fmt(r.upper),
            r.inside as u8
        )?;
    }
    Ok(())
}

/// Shortest round-trip float formatting; infinities spelled out.
fn fmt(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x}")
    }
}
