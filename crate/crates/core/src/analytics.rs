//! Closed-form steady states of the fine-tuned micromaser battery.
//!
//! At `theta = Q pi / sqrt(m)` the coupling between levels `m - 1` and `m`
//! vanishes (`sin(theta sqrt(m)) = 0`), so a battery charged from the vacuum
//! never leaves levels `0..m`. Incoherent charging then relaxes to
//! detailed balance, `p_n = r p_{n-1}` with `r = (1 - q) / q` on exactly
//! `m` levels, and coherent charging to the cotangent state.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::Populations;

pub const DEFAULT_Q_LIMIT: u64 = 4;
pub const DEFAULT_M_SEARCH_LIMIT: u64 = 10_000;
/// Absolute tolerance on `theta - Q pi / sqrt(m)`.
pub const TRAPPING_TOLERANCE: f64 = 1e-9;

/// A fine-tuned collision angle `theta = multiplicity * pi / sqrt(m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrappingSpec {
    /// First blocked level: the `m - 1 -> m` transition vanishes.
    pub m: u64,
    pub multiplicity: u64,
    pub theta: f64,
}

impl TrappingSpec {
    /// Highest level reachable from the vacuum.
    pub fn top_level(&self) -> u64 {
        self.m - 1
    }
}

/// `multiplicity * pi / sqrt(m_eff)`.
pub fn fine_tuned_theta(multiplicity: f64, m_eff: f64) -> f64 {
    multiplicity * PI / m_eff.sqrt()
}

pub fn trapping_condition(theta: f64, m_search_limit: u64) -> Option<TrappingSpec> {
    trapping_condition_with(theta, m_search_limit, DEFAULT_Q_LIMIT)
}

/// Smallest multiplicity `Q <= q_limit` with an integer `m <= m_search_limit`
/// such that `|theta - Q pi / sqrt(m)| <= 1e-9`.
pub fn trapping_condition_with(theta: f64, m_search_limit: u64, q_limit: u64) -> Option<TrappingSpec> {
    if !(theta.is_finite() && theta > 0.0) {
        return None;
    }
    (1..=q_limit).find_map(|multiplicity| {
        let m = ((multiplicity as f64 * PI / theta).powi(2)).round();
        if m < 1.0 || m > m_search_limit as f64 {
            return None;
        }
        let m = m as u64;
        let exact = fine_tuned_theta(multiplicity as f64, m as f64);
        ((theta - exact).abs() <= TRAPPING_TOLERANCE).then_some(TrappingSpec {
            m,
            multiplicity,
            theta: exact,
        })
    })
}

fn check_q_open(q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::param("q", format!("{q} is outside [0, 1]")));
    }
    Ok(())
}

// Normalizes weights given as logarithms, avoiding overflow for extreme ratios.
fn normalize_log_weights(logs: &[f64]) -> Vec<f64> {
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - peak).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Stationary populations of incoherent charging at a fine-tuned angle with
/// trap parameter `m`; returns the `m` levels `0..m`.
///
/// `q = 0` gives the number state `|m - 1>`, `q = 1` the vacuum, and
/// `q = 1/2` the uniform distribution.
pub fn incoherent_steady_state(q: f64, m: u64) -> Result<Populations> {
    check_q_open(q)?;
    if m < 1 {
        return Err(Error::param("m", "must be at least 1"));
    }
    let levels = m as usize;
    if q == 0.0 {
        return Ok(Populations::fock(levels - 1, levels));
    }
    if q == 1.0 {
        return Ok(Populations::fock(0, levels));
    }
    let log_r = ((1.0 - q) / q).ln();
    let logs: Vec<f64> = (0..levels).map(|n| n as f64 * log_r).collect();
    Ok(Populations::new(normalize_log_weights(&logs)))
}

/// Purity of [`incoherent_steady_state`], summed directly.
pub fn incoherent_steady_purity(q: f64, m: u64) -> Result<f64> {
    Ok(incoherent_steady_state(q, m)?.iter().map(|p| p * p).sum())
}

/// Closed-form purity of a geometric distribution with ratio
/// `r = (1 - q) / q` over `levels` levels:
///
/// ```text
/// P = (r - 1)/(r + 1) * (r^(2M) - 1)/(r^M - 1)^2 = (r - 1)/(r + 1) * (r^M + 1)/(r^M - 1)
/// ```
///
/// The fine-tuned steady state occupies `levels = m` levels. Evaluated in the
/// second form, which does not overflow.
pub fn incoherent_purity_closed_form(q: f64, levels: u64) -> Result<f64> {
    check_q_open(q)?;
    if levels < 1 {
        return Err(Error::param("levels", "must be at least 1"));
    }
    if q == 0.0 || q == 1.0 {
        return Ok(1.0);
    }
    let r = (1.0 - q) / q;
    if (r - 1.0).abs() < 1e-12 {
        return Ok(1.0 / levels as f64);
    }
    let big_m = levels as f64;
    // (r^M + 1)/(r^M - 1) = (1 + x)/(1 - x) with x = r^-M when r > 1
    let (prefactor, x) = if r > 1.0 {
        ((r - 1.0) / (r + 1.0), (-big_m * r.ln()).exp())
    } else {
        ((1.0 - r) / (1.0 + r), (big_m * r.ln()).exp())
    };
    Ok(prefactor * (1.0 + x) / (1.0 - x))
}

/// Large-`m` limit of the steady purity, `|1 - 2q|`.
pub fn incoherent_purity_large_m(q: f64) -> f64 {
    (1.0 - 2.0 * q).abs()
}

/// Stationary populations of coherent (`c = 1`) charging at `theta = pi/sqrt(m)`:
/// `p_n = r cot^2(pi sqrt(n) / (2 sqrt(m))) p_{n-1}` for `1 <= n < m`, zero
/// from `m` on, normalized over levels `0..=n_max`.
pub fn cotangent_state(q: f64, m: u64, n_max: usize) -> Result<Populations> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::param("q", format!("{q} must lie in (0, 1)")));
    }
    if m < 2 {
        return Err(Error::param("m", "must be at least 2"));
    }
    if n_max < 1 {
        return Err(Error::param("n_max", "must be at least 1"));
    }
    let log_r = ((1.0 - q) / q).ln();
    let top = (m as usize - 1).min(n_max);
    let mut logs = vec![0.0; top + 1];
    for n in 1..=top {
        let angle = PI * (n as f64).sqrt() / (2.0 * (m as f64).sqrt());
        let cot = angle.cos() / angle.sin();
        logs[n] = logs[n - 1] + log_r + 2.0 * cot.abs().ln();
    }
    let mut p = normalize_log_weights(&logs);
    p.resize(n_max + 1, 0.0);
    Ok(Populations::new(p))
}
