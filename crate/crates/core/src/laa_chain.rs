//! Stationary analysis of node L's (LTE-LAA eNB) Markov chain.
//!
//! The chain has backoff states `(i, k)`, `1 <= k <= W_i - 1`, and MCOT states
//! `(i, 0^j)`, `1 <= j <= M`, for every stage `0 <= i <= m + 1`. Given the per-slot busy
//! probability `p_b` and the per-MCOT doubling probability `p_d`, every stationary mass
//! has a closed form in terms of the anchor `b_{0,0^1}`.
//!
//! The geometric series over stages are finite (m + 2 terms), so they are summed
//! term by term; `p_d = 1/2` and `p_d = 1` need no special casing that way.

use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaaChainSolution {
    pub p_b_l: f64,
    pub p_d: f64,
    /// b_{0,0^1}.
    pub b00_1: f64,
    /// b_{i,0^j}, identical for every MCOT slot j.
    pub b_tx: Vec<f64>,
    /// b_{i,k} for k = 1..W_i-1, stored at `[i][k - 1]`.
    pub b_backoff: Vec<Vec<f64>>,
    /// Per-slot transmit probability of node L.
    pub tau_l: f64,
    /// p_i^s: stage occupancy at the last MCOT slot.
    pub p_stage_at_end: Vec<f64>,
    /// b_{i,1} / sum_k b_{i,k}; `None` when W_i = 1.
    pub bc_one_ratio: Vec<Option<f64>>,
    /// M, kept so the solution can be checked against the config it came from.
    pub mcot_slots: usize,
}

/// Closed-form stationary solution of node L's chain.
pub fn solve_closed_form(cfg: &SystemConfig, p_b_l: f64, p_d: f64) -> Result<LaaChainSolution> {
    cfg.validate()?;
    if !(0.0..1.0).contains(&p_b_l) {
        return Err(Error::InvalidArgument(format!(
            "busy probability must lie in [0, 1), got {p_b_l}"
        )));
    }
    if !(0.0..=1.0).contains(&p_d) {
        return Err(Error::InvalidArgument(format!(
            "doubling probability must lie in [0, 1], got {p_d}"
        )));
    }
    let stages = cfg.stages();
    let m_slots = cfg.mcot() as f64;
    let powers: Vec<f64> = (0..stages).map(|i| p_d.powi(i as i32)).collect();
    let geo: f64 = powers.iter().sum();
    let backoff_weight: f64 = powers
        .iter()
        .enumerate()
        .map(|(i, p)| p * (cfg.window(i) as f64 - 1.0))
        .sum::<f64>()
        / (2.0 * (1.0 - p_b_l));
    let b00_1 = 1.0 / (backoff_weight + m_slots * geo);

    let b_tx: Vec<f64> = powers.iter().map(|p| p * b00_1).collect();
    let b_backoff = (0..stages)
        .map(|i| {
            let w = cfg.window(i) as f64;
            (1..cfg.window(i))
                .map(|k| (w - k as f64) / (w * (1.0 - p_b_l)) * b_tx[i])
                .collect()
        })
        .collect();
    let tau_l = m_slots * geo * b00_1;
    let p_stage_at_end = powers.iter().map(|p| p / geo).collect();
    let bc_one_ratio = (0..stages).map(|i| bc_one_ratio_for_window(cfg.window(i)).ok()).collect();

    Ok(LaaChainSolution {
        p_b_l,
        p_d,
        b00_1,
        b_tx,
        b_backoff,
        tau_l,
        p_stage_at_end,
        bc_one_ratio,
        mcot_slots: cfg.mcot(),
    })
}

impl LaaChainSolution {
    pub fn stages(&self) -> usize {
        self.b_tx.len()
    }

    /// b_{i,k} for k >= 1.
    pub fn b(&self, stage: usize, counter: usize) -> f64 {
        assert!(counter >= 1, "backoff counters of node L start at 1");
        self.b_backoff[stage][counter - 1]
    }

    /// Left-hand side of the normalization condition; 1 up to rounding.
    pub fn total_mass(&self) -> f64 {
        let backoff: f64 = self.b_backoff.iter().flatten().sum();
        let tx: f64 = self.b_tx.iter().sum::<f64>() * self.mcot_slots as f64;
        backoff + tx
    }

    /// p_i^s, the stage distribution at the M-th MCOT slot.
    pub fn stage_occupancy_at_mcot_end(&self) -> &[f64] {
        &self.p_stage_at_end
    }

    pub fn bc_one_ratio(&self, stage: usize) -> Result<f64> {
        self.bc_one_ratio
            .get(stage)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("stage {stage} out of range")))?
            .ok_or_else(|| {
                Error::InvalidArgument(format!("stage {stage} has an empty backoff range (W = 1)"))
            })
    }

    /// Whether the solution was computed for `cfg`.
    pub fn matches(&self, cfg: &SystemConfig) -> bool {
        self.mcot_slots == cfg.mcot()
            && self.stages() == cfg.stages()
            && self.b_backoff.iter().enumerate().all(|(i, b)| b.len() + 1 == cfg.window(i))
    }
}

/// p_i^s from `p_d` alone: p_d^i / sum_a p_d^a.
pub fn stage_occupancy_at_mcot_end(cfg: &SystemConfig, p_d: f64) -> Vec<f64> {
    let powers: Vec<f64> = (0..cfg.stages()).map(|i| p_d.powi(i as i32)).collect();
    let geo: f64 = powers.iter().sum();
    powers.into_iter().map(|p| p / geo).collect()
}

/// Probability that node L's counter is one given it is somewhere in the backoff range
/// of a stage with window `w`: (W - 1) / sum_{k=1}^{W-1} (W - k) = 2 / W.
pub fn bc_one_ratio_for_window(w: usize) -> Result<f64> {
    if w < 2 {
        return Err(Error::InvalidArgument(format!(
            "window {w} has no backoff counters >= 1"
        )));
    }
    Ok(2.0 / w as f64)
}
