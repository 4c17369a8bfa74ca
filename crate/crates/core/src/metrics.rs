//! Performance metrics derived from the joint stationary distribution, and the
//! fixed-point iteration that couples `(p_b^L, p_d)` to π.

use serde::{Deserialize, Serialize};

use crate::config::{LaaStateIndex, SubframeEstimator, SystemConfig};
use crate::error::{Error, Result};
use crate::jmc::{JointChain, JointDistribution, SolverOptions};
use crate::laa_chain::{solve_closed_form, LaaChainSolution};
use crate::sim::SimStats;
use crate::state::WifiStateSpace;
use crate::wifi_chain::InnerMatrices;

/// Every metric of one engine run. Scalars are `None` when undefined (e.g. a
/// conditional on an empty period) or not measured.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tau_l: Option<f64>,
    pub tau_h: Option<f64>,
    pub tau_h_mc: Option<f64>,
    pub tau_h_ow: Option<f64>,
    pub tau_h_mc_abs: Option<f64>,
    pub tau_h_ow_abs: Option<f64>,
    pub p_b_l: Option<f64>,
    pub p_overlap: Option<f64>,
    pub p_c_h: Option<f64>,
    pub p_d: Option<f64>,
    /// C_sf(r) for r = 1..=n_sf.
    pub c_sf: Vec<f64>,
    pub avg_collided_sf: Option<f64>,
    pub alpha: Option<f64>,
    pub s_l: Option<f64>,
    pub s_h: Option<f64>,
    pub e_d_l: Option<f64>,
    pub e_d_h: Option<f64>,
    /// OW-side share of overlapping packets: assumed (analysis) or measured (simulation).
    pub z2: Option<f64>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// τ_L from node L's closed form at the operating point.
    pub tau_l_closed_form: Option<f64>,
    /// C_sf(r) under each estimator, whichever one the config selects.
    pub c_sf_starts: Vec<f64>,
    pub c_sf_inflight: Vec<f64>,
    /// The collision formula exceeded [0, 1] and was clamped.
    pub p_c_h_clamped: bool,
    /// Packets per cycle inside MCOTs, inside OW periods and overlapping (simulation).
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub z: Option<f64>,
    pub solver_residual: Option<f64>,
}

impl MetricsReport {
    /// Flat `(name, value)` list in a fixed column order; C_sf expands to `c_sf_1..`.
    pub fn flatten(&self) -> Vec<(String, Option<f64>)> {
        let mut out: Vec<(String, Option<f64>)> = vec![
            ("tau_l".into(), self.tau_l),
            ("tau_h".into(), self.tau_h),
            ("tau_h_mc".into(), self.tau_h_mc),
            ("tau_h_ow".into(), self.tau_h_ow),
            ("tau_h_mc_abs".into(), self.tau_h_mc_abs),
            ("tau_h_ow_abs".into(), self.tau_h_ow_abs),
            ("p_b_l".into(), self.p_b_l),
            ("p_overlap".into(), self.p_overlap),
            ("p_c_h".into(), self.p_c_h),
            ("p_d".into(), self.p_d),
        ];
        for (r, c) in self.c_sf.iter().enumerate() {
            out.push((format!("c_sf_{}", r + 1), Some(*c)));
        }
        out.extend([
            ("avg_collided_sf".into(), self.avg_collided_sf),
            ("alpha".into(), self.alpha),
            ("s_l".into(), self.s_l),
            ("s_h".into(), self.s_h),
            ("e_d_l".into(), self.e_d_l),
            ("e_d_h".into(), self.e_d_h),
            ("z2".into(), self.z2),
        ]);
        out
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.flatten().into_iter().find(|(n, _)| n == name).and_then(|(_, v)| v)
    }

    /// Column names of [`MetricsReport::csv_row`] for `n_sf` subframes.
    pub fn csv_header(n_sf: usize) -> String {
        let probe = MetricsReport { c_sf: vec![0.0; n_sf], ..Default::default() };
        probe.flatten().into_iter().map(|(n, _)| n).collect::<Vec<_>>().join(",")
    }

    /// One CSV row; absent values are written as `NA`.
    pub fn csv_row(&self) -> String {
        self.flatten().into_iter().map(|(_, v)| fmt_value(v)).collect::<Vec<_>>().join(",")
    }
}

pub(crate) fn fmt_value(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.10}"),
        Some(x) if x > 0.0 => "inf".into(),
        Some(_) => "NaN".into(),
        None => "NA".into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmitProbabilities {
    pub tau_l: f64,
    pub tau_h: f64,
    pub tau_h_mc: Option<f64>,
    pub tau_h_ow: Option<f64>,
    /// Unconditional masses τ̃_H^MC, τ̃_H^OW.
    pub tau_h_mc_abs: f64,
    pub tau_h_ow_abs: f64,
}

/// τ_L, τ_H and node H's conditional transmit probabilities per period.
pub fn transmit_probabilities(dist: &JointDistribution, cfg: &SystemConfig) -> TransmitProbabilities {
    let space = WifiStateSpace::new(cfg);
    let mask = space.transmit_mask();
    let m_slots = cfg.mcot();
    let mut tau_l = 0.0;
    let (mut tx_mc, mut tx_ow) = (0.0, 0.0);
    for l in 0..dist.n_l {
        let block = &dist.pi[l * dist.n_h..][..dist.n_h];
        let tx: f64 = block.iter().zip(&mask).filter(|(_, &m)| m).map(|(p, _)| p).sum();
        if l < m_slots {
            tau_l += block.iter().sum::<f64>();
            tx_mc += tx;
        } else {
            tx_ow += tx;
        }
    }
    TransmitProbabilities {
        tau_l,
        tau_h: tx_mc + tx_ow,
        tau_h_mc: (tau_l > 0.0).then(|| tx_mc / tau_l),
        tau_h_ow: (tau_l < 1.0).then(|| tx_ow / (1.0 - tau_l)),
        tau_h_mc_abs: tx_mc,
        tau_h_ow_abs: tx_ow,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionProbability {
    pub p_c_h: f64,
    pub p_overlap: f64,
    pub clamped: bool,
}

/// Per-packet collision probability of node H. `None` when τ_H = 0.
pub fn collision_probability(
    tau_l: f64,
    tau_h: f64,
    tau_h_mc: f64,
    cfg: &SystemConfig,
) -> Option<CollisionProbability> {
    if !(tau_h > 0.0) {
        return None;
    }
    let inside = tau_h_mc * tau_l / tau_h;
    let p_overlap = tau_l * tau_h_mc * (cfg.t_wifi - 1.0) / (cfg.mcot() as f64 * tau_h);
    let raw = inside + cfg.z2 * p_overlap;
    let p_c_h = raw.clamp(0.0, 1.0);
    let clamped = p_c_h != raw;
    if clamped {
        log::warn!("p_c^H = {raw} clamped to [0, 1] (T_WiFi = {}, M = {})", cfg.t_wifi, cfg.mcot());
    }
    Some(CollisionProbability { p_c_h, p_overlap, clamped })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubframeCollision {
    /// C_sf(r) under the configured estimator.
    pub c_sf: Vec<f64>,
    pub p_d: f64,
    pub c_sf_starts: Vec<f64>,
    pub c_sf_inflight: Vec<f64>,
}

/// C_sf(r) at the first slot of each subframe. The `starts` estimator counts node-H
/// counters in `1..sf_slot` (a packet starts inside the subframe); `in_flight` adds
/// counter 0 and the overlap states (a packet already on air).
pub fn subframe_collision(dist: &JointDistribution, cfg: &SystemConfig) -> Result<SubframeCollision> {
    if !cfg.subframes_aligned() {
        return Err(Error::InvalidConfig(format!(
            "subframe collision needs M = n_sf * sf_slot, got M = {}, n_sf = {}, sf_slot = {}",
            cfg.mcot_slots, cfg.n_sf, cfg.sf_slot
        )));
    }
    let space = WifiStateSpace::new(cfg);
    let sf = cfg.sf_slot as usize;
    let mut c_sf = Vec::with_capacity(cfg.n_sf as usize);
    let mut inflight = Vec::with_capacity(cfg.n_sf as usize);
    for r in 1..=cfg.n_sf as usize {
        let l = LaaStateIndex((r - 1) * sf + 1);
        let block = dist.marginal(l)?;
        let total: f64 = block.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroMarginal(l.0));
        }
        let (mut starts, mut any) = (0.0, 0.0);
        for (h, &p) in block.iter().enumerate() {
            let bc = space.decode(h).backoff_counter();
            if bc < sf {
                any += p;
                if bc >= 1 {
                    starts += p;
                }
            }
        }
        c_sf.push(starts / total);
        inflight.push(any / total);
    }
    let chosen = match cfg.subframe_estimator {
        SubframeEstimator::Starts => c_sf.clone(),
        SubframeEstimator::InFlight => inflight.clone(),
    };
    let p_d = chosen[cfg.rsf as usize - 1];
    Ok(SubframeCollision { c_sf: chosen, p_d, c_sf_starts: c_sf, c_sf_inflight: inflight })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputDelay {
    pub alpha: f64,
    pub s_l: f64,
    pub e_d_l: f64,
    pub s_h: f64,
    pub e_d_h: f64,
}

/// Normalized throughputs and mean access delays (slots). Delays are infinite when the
/// corresponding transmit probability is zero.
pub fn throughput_delay(
    tau_l: f64,
    tau_h: f64,
    p_c_h: f64,
    c_sf: &[f64],
    cfg: &SystemConfig,
) -> ThroughputDelay {
    let collided: f64 = c_sf.iter().sum();
    let alpha = 1.0 - collided / cfg.n_sf as f64;
    let delay = |tau: f64, len: f64| if tau > 0.0 { len * (1.0 - tau) / tau } else { f64::INFINITY };
    ThroughputDelay {
        alpha,
        s_l: alpha * tau_l,
        e_d_l: delay(tau_l, cfg.mcot() as f64),
        s_h: (1.0 - p_c_h) * tau_h,
        e_d_h: delay(tau_h, cfg.t_wifi),
    }
}

/// Full analytic report from a solved joint chain at operating point `sol`.
pub fn analytic_report(
    cfg: &SystemConfig,
    dist: &JointDistribution,
    sol: &LaaChainSolution,
) -> Result<MetricsReport> {
    let tp = transmit_probabilities(dist, cfg);
    let sf = subframe_collision(dist, cfg)?;
    let coll = tp.tau_h_mc.and_then(|mc| collision_probability(tp.tau_l, tp.tau_h, mc, cfg));
    let p_c = coll.map(|c| c.p_c_h);
    let td = throughput_delay(tp.tau_l, tp.tau_h, p_c.unwrap_or(0.0), &sf.c_sf, cfg);
    Ok(MetricsReport {
        tau_l: Some(tp.tau_l),
        tau_h: Some(tp.tau_h),
        tau_h_mc: tp.tau_h_mc,
        tau_h_ow: tp.tau_h_ow,
        tau_h_mc_abs: Some(tp.tau_h_mc_abs),
        tau_h_ow_abs: Some(tp.tau_h_ow_abs),
        p_b_l: tp.tau_h_ow,
        p_overlap: coll.map(|c| c.p_overlap),
        p_c_h: p_c,
        p_d: Some(sf.p_d),
        avg_collided_sf: Some(sf.c_sf.iter().sum()),
        c_sf: sf.c_sf,
        alpha: Some(td.alpha),
        s_l: Some(td.s_l),
        s_h: p_c.map(|_| td.s_h),
        e_d_l: Some(td.e_d_l),
        e_d_h: Some(td.e_d_h),
        z2: Some(cfg.z2),
        diagnostics: Diagnostics {
            tau_l_closed_form: Some(sol.tau_l),
            c_sf_starts: sf.c_sf_starts,
            c_sf_inflight: sf.c_sf_inflight,
            p_c_h_clamped: coll.is_some_and(|c| c.clamped),
            solver_residual: Some(dist.residual),
            ..Default::default()
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointOptions {
    pub seed_p_b_l: f64,
    pub seed_p_d: f64,
    /// Fraction of the gap to the new target taken each round, in (0, 1].
    pub damping: f64,
    /// Stop once max(|p_b^L - τ_H^OW|, |p_d - C_sf(rsf)|) is at most this.
    pub tol: f64,
    pub max_rounds: usize,
    pub solver: SolverOptions,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            seed_p_b_l: 0.0,
            seed_p_d: 0.0,
            damping: 0.5,
            tol: 1e-10,
            max_rounds: 500,
            solver: SolverOptions::regenerative(1e-12),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointStep {
    pub round: usize,
    pub p_b_l: f64,
    pub p_d: f64,
    /// τ_H^OW and C_sf(rsf) of the π solved at (p_b_l, p_d).
    pub target_p_b_l: f64,
    pub target_p_d: f64,
    pub residual: f64,
    pub solver_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct FixedPointResult {
    pub report: MetricsReport,
    pub dist: JointDistribution,
    pub solution: LaaChainSolution,
    pub trace: Vec<FixedPointStep>,
}

/// Alternates π-solves with damped updates of `(p_b^L, p_d)` until both match their
/// values implied by π.
pub fn fixed_point(cfg: &SystemConfig, opts: &FixedPointOptions) -> Result<FixedPointResult> {
    cfg.validate()?;
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::InvalidArgument(format!("damping must lie in (0, 1], got {}", opts.damping)));
    }
    if !(0.0..1.0).contains(&opts.seed_p_b_l) || !(0.0..1.0).contains(&opts.seed_p_d) {
        return Err(Error::InvalidArgument("fixed-point seeds must lie in [0, 1)".into()));
    }
    let inner = InnerMatrices::new(cfg);
    let (mut p_b, mut p_d) = (opts.seed_p_b_l, opts.seed_p_d);
    let mut warm: Option<Vec<f64>> = None;
    let mut trace = Vec::new();
    for round in 1..=opts.max_rounds {
        let sol = solve_closed_form(cfg, p_b, p_d)?;
        let chain = JointChain::with_inner(cfg, &sol, inner.clone())?;
        let dist = chain.stationary_from(&opts.solver, warm.as_deref())?;
        let tp = transmit_probabilities(&dist, cfg);
        let sf = subframe_collision(&dist, cfg)?;
        let target_pb = tp.tau_h_ow.unwrap_or(0.0);
        let target_pd = sf.p_d;
        let residual = (target_pb - p_b).abs().max((target_pd - p_d).abs());
        trace.push(FixedPointStep {
            round,
            p_b_l: p_b,
            p_d,
            target_p_b_l: target_pb,
            target_p_d: target_pd,
            residual,
            solver_iterations: dist.iterations,
        });
        log::debug!("fixed point round {round}: p_b = {p_b:.12}, p_d = {p_d:.12}, residual = {residual:e}");
        if residual <= opts.tol {
            let report = analytic_report(cfg, &dist, &sol)?;
            return Ok(FixedPointResult { report, dist, solution: sol, trace });
        }
        p_b += opts.damping * (target_pb - p_b);
        p_d += opts.damping * (target_pd - p_d);
        p_b = p_b.clamp(0.0, 1.0 - 1e-12);
        warm = Some(dist.pi[..dist.n_h].to_vec());
    }
    let residual = trace.last().map_or(f64::NAN, |s| s.residual);
    Err(Error::FixedPointNotConverged { rounds: opts.max_rounds, residual, trace })
}

/// Mean OW-side fraction of overlapping packets, from simulator statistics. `None` below
/// 100 overlap events.
pub fn measure_z2_assumption(stats: &SimStats) -> Option<f64> {
    let c = &stats.total;
    (c.overlap_events >= 100).then(|| c.z2_sum / c.overlap_events as f64)
}
