//! Weighted isotonic regression by pool-adjacent-violators.

use crate::error::{CalibError, Result};

/// Result of a weighted monotone least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotonicFit {
    /// Non-decreasing fitted values, one per input.
    pub fitted: Vec<f64>,
    /// Start index of every constant block, in increasing order.
    pub block_boundaries: Vec<usize>,
}

/// Solves `argmin sum_i w_i (y_i - mu_i)^2` over non-decreasing `mu`.
pub fn pava(y: &[f64], w: &[f64]) -> Result<IsotonicFit> {
    if y.len() != w.len() {
        return Err(CalibError::InvalidArgument(format!(
            "pava length mismatch: {} values vs {} weights",
            y.len(),
            w.len()
        )));
    }
    if y.is_empty() {
        return Err(CalibError::InvalidArgument("pava requires at least one point".into()));
    }
    if let Some(bad) = w.iter().find(|&&wi| !(wi > 0.0) || !wi.is_finite()) {
        return Err(CalibError::InvalidArgument(format!("non-positive weight {bad}")));
    }

    // Stack of blocks (weighted sum, weight, start index); each new point
    // becomes a block, then adjacent violators pool until monotone.
    let mut sum_wy: Vec<f64> = Vec::with_capacity(y.len());
    let mut sum_w: Vec<f64> = Vec::with_capacity(y.len());
    let mut start: Vec<usize> = Vec::with_capacity(y.len());
    for (i, (&yi, &wi)) in y.iter().zip(w).enumerate() {
        sum_wy.push(wi * yi);
        sum_w.push(wi);
        start.push(i);
        while sum_wy.len() > 1 {
            let top = sum_wy.len() - 1;
            if sum_wy[top - 1] * sum_w[top] > sum_wy[top] * sum_w[top - 1] {
                let (swy, sw) = (sum_wy.pop().unwrap(), sum_w.pop().unwrap());
                start.pop();
                sum_wy[top - 1] += swy;
                sum_w[top - 1] += sw;
            } else {
                break;
            }
        }
    }

    let mut fitted = vec![0.0; y.len()];
    for b in 0..start.len() {
        let end = if b + 1 < start.len() { start[b + 1] } else { y.len() };
        let mean = sum_wy[b] / sum_w[b];
        for slot in &mut fitted[start[b]..end] {
            *slot = mean;
        }
    }
    Ok(IsotonicFit {
        fitted,
        block_boundaries: start,
    })
}
