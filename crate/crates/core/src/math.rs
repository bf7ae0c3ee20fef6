//! Small numeric helpers shared by the inference, EFE and learning code.

use crate::error::{Error, Result};

/// Floor applied inside every logarithm of a probability.
pub const LOG_FLOOR: f64 = 1e-16;

/// Probabilities at or below this are treated as zero when iterating over
/// outcomes in an expectation.
pub const SUPPORT_EPS: f64 = 1e-16;

#[inline]
pub fn ln_floor(p: f64) -> f64 {
    p.max(LOG_FLOOR).ln()
}

/// Shannon entropy in nats, `0 ln 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

/// `KL(p || q)` in nats.
///
/// Fails with [`Error::SupportViolation`] when `p` has mass (above the
/// floor) where `q` has none.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Shape {
            what: "kl_divergence operands".into(),
            expected: p.len(),
            found: q.len(),
        });
    }
    let mut acc = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi <= SUPPORT_EPS {
            continue;
        }
        if qi <= LOG_FLOOR {
            return Err(Error::SupportViolation { index: i, p: pi, q: qi });
        }
        acc += pi * (pi.ln() - qi.ln());
    }
    // Rounding can leave tiny negative values when p == q.
    Ok(acc.max(0.0))
}

/// Numerically stable softmax, `exp(x_i - max) / sum`.
pub fn softmax(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    let z: f64 = out.iter().sum();
    out.iter_mut().for_each(|x| *x /= z);
    Ok(out)
}

/// `ln sum exp(x_i)`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Normalises in place and returns the normaliser. A zero (or non-finite)
/// total leaves the vector untouched and returns the total.
pub fn normalize(v: &mut [f64]) -> f64 {
    let z: f64 = v.iter().sum();
    if z > 0.0 && z.is_finite() {
        v.iter_mut().for_each(|x| *x /= z);
    }
    z
}

/// Inverse-CDF draw from a categorical distribution given `u` in `[0, 1)`.
pub fn sample_index(p: &[f64], u: f64) -> usize {
    let total: f64 = p.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &x) in p.iter().enumerate() {
        if x <= 0.0 {
            continue;
        }
        acc += x;
        last = i;
        if target < acc {
            return i;
        }
    }
    last
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
