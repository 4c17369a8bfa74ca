//! Raw counters of a simulation run and their mapping onto [`MetricsReport`].

use std::ops::AddAssign;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::SystemConfig;
use crate::metrics::{Diagnostics, MetricsReport};

/// Additive counters over a set of post-warmup slots. Events (packets, MCOTs, gaps)
/// are attributed to the slot in which they end.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimCounters {
    pub slots: u64,
    pub mcot_slots: u64,
    pub ow_slots: u64,
    pub h_tx_mc_slots: u64,
    pub h_tx_ow_slots: u64,
    /// Airtime of node-H packets that completed without collision.
    pub h_success_slots: u64,
    pub h_packets: u64,
    pub h_collided: u64,
    /// Completed packets lying entirely inside MCOTs, entirely inside OW periods, and
    /// overlapping both.
    pub h_packets_mc: u64,
    pub h_packets_ow: u64,
    pub overlap_events: u64,
    /// Sum over overlap events of the OW share of the packet's airtime.
    pub z2_sum: f64,
    pub mcots: u64,
    pub doublings: u64,
    /// MCOTs whose subframe r (index r-1) overlapped a node-H transmission.
    pub sf_overlaps: Vec<u64>,
    pub simultaneous_starts: u64,
    pub l_gap_sum: u64,
    pub l_gaps: u64,
    pub h_gap_sum: u64,
    pub h_gaps: u64,
}

impl SimCounters {
    pub fn new(n_sf: usize) -> Self {
        SimCounters { sf_overlaps: vec![0; n_sf], ..Default::default() }
    }
}

impl AddAssign<&SimCounters> for SimCounters {
    fn add_assign(&mut self, o: &SimCounters) {
        self.slots += o.slots;
        self.mcot_slots += o.mcot_slots;
        self.ow_slots += o.ow_slots;
        self.h_tx_mc_slots += o.h_tx_mc_slots;
        self.h_tx_ow_slots += o.h_tx_ow_slots;
        self.h_success_slots += o.h_success_slots;
        self.h_packets += o.h_packets;
        self.h_collided += o.h_collided;
        self.h_packets_mc += o.h_packets_mc;
        self.h_packets_ow += o.h_packets_ow;
        self.overlap_events += o.overlap_events;
        self.z2_sum += o.z2_sum;
        self.mcots += o.mcots;
        self.doublings += o.doublings;
        if self.sf_overlaps.len() < o.sf_overlaps.len() {
            self.sf_overlaps.resize(o.sf_overlaps.len(), 0);
        }
        for (a, b) in self.sf_overlaps.iter_mut().zip(&o.sf_overlaps) {
            *a += b;
        }
        self.simultaneous_starts += o.simultaneous_starts;
        self.l_gap_sum += o.l_gap_sum;
        self.l_gaps += o.l_gaps;
        self.h_gap_sum += o.h_gap_sum;
        self.h_gaps += o.h_gaps;
    }
}

/// Counters of one or more runs of the same config: the grand total plus the batches
/// used for confidence intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub system: SystemConfig,
    pub seeds: Vec<u64>,
    pub total: SimCounters,
    pub batches: Vec<SimCounters>,
}

impl SimStats {
    /// Pools the counters of another run of the same config.
    pub fn merge(&mut self, other: &SimStats) {
        debug_assert_eq!(self.system, other.system);
        self.seeds.extend(&other.seeds);
        self.total += &other.total;
        self.batches.extend(other.batches.iter().cloned());
    }

    pub fn merged<'a>(mut runs: impl Iterator<Item = &'a SimStats>) -> Option<SimStats> {
        let mut acc = runs.next()?.clone();
        for r in runs {
            acc.merge(r);
        }
        Some(acc)
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

/// Empirical metrics from counters, in the analytic report's schema.
pub fn report_from_counters(c: &SimCounters, cfg: &SystemConfig) -> MetricsReport {
    let slots = c.slots as f64;
    let mcots = c.mcots as f64;
    let packets = c.h_packets as f64;
    let tau_l = ratio(c.mcot_slots as f64, slots);
    let tau_h = ratio((c.h_tx_mc_slots + c.h_tx_ow_slots) as f64, slots);
    let tau_h_ow = ratio(c.h_tx_ow_slots as f64, c.ow_slots as f64);
    let c_sf: Vec<f64> = match mcots > 0.0 {
        true => c.sf_overlaps.iter().map(|&n| n as f64 / mcots).collect(),
        false => Vec::new(),
    };
    let collided = (!c_sf.is_empty()).then(|| c_sf.iter().sum::<f64>());
    let alpha = collided.map(|s| 1.0 - s / cfg.n_sf as f64);
    MetricsReport {
        tau_l,
        tau_h,
        tau_h_mc: ratio(c.h_tx_mc_slots as f64, c.mcot_slots as f64),
        tau_h_ow,
        tau_h_mc_abs: ratio(c.h_tx_mc_slots as f64, slots),
        tau_h_ow_abs: ratio(c.h_tx_ow_slots as f64, slots),
        p_b_l: tau_h_ow,
        p_overlap: ratio(c.overlap_events as f64, packets),
        p_c_h: ratio(c.h_collided as f64, packets),
        p_d: ratio(c.doublings as f64, mcots),
        c_sf,
        avg_collided_sf: collided,
        alpha,
        s_l: alpha.zip(tau_l).map(|(a, t)| a * t),
        s_h: ratio(c.h_success_slots as f64, slots),
        e_d_l: ratio(c.l_gap_sum as f64, c.l_gaps as f64),
        e_d_h: ratio(c.h_gap_sum as f64, c.h_gaps as f64),
        z2: ratio(c.z2_sum, c.overlap_events as f64),
        diagnostics: Diagnostics {
            x: ratio(c.h_packets_mc as f64, mcots),
            y: ratio(c.h_packets_ow as f64, mcots),
            z: ratio(c.overlap_events as f64, mcots),
            ..Default::default()
        },
    }
}

/// Empirical report plus 95% batch-means half-widths in the same layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMeasurement {
    pub report: MetricsReport,
    pub ci_halfwidth: MetricsReport,
    pub batches: usize,
}

impl SimMeasurement {
    /// `(name, value, half-width)` in [`MetricsReport::flatten`] order.
    pub fn rows(&self) -> Vec<(String, Option<f64>, Option<f64>)> {
        let ci = self.ci_halfwidth.flatten();
        self.report
            .flatten()
            .into_iter()
            .map(|(n, v)| {
                let h = ci.iter().find(|(cn, _)| *cn == n).and_then(|(_, h)| *h);
                (n, v, h)
            })
            .collect()
    }
}

pub fn measure(stats: &SimStats) -> SimMeasurement {
    let cfg = &stats.system;
    let report = report_from_counters(&stats.total, cfg);
    let per_batch: Vec<Vec<(String, Option<f64>)>> =
        stats.batches.iter().map(|b| report_from_counters(b, cfg).flatten()).collect();
    let names = report.flatten();
    let n = per_batch.len();
    let quantile = (n >= 2).then(|| StudentsT::new(0.0, 1.0, (n - 1) as f64).unwrap().inverse_cdf(0.975));

    let mut ci = MetricsReport { c_sf: vec![0.0; report.c_sf.len()], ..Default::default() };
    let halfwidths: Vec<Option<f64>> = names
        .iter()
        .enumerate()
        .map(|(k, _)| {
            let q = quantile?;
            let vals: Vec<f64> = per_batch.iter().filter_map(|b| b.get(k).and_then(|(_, v)| *v)).collect();
            if vals.len() != n || vals.iter().any(|v| !v.is_finite()) {
                return None;
            }
            let mean = vals.iter().sum::<f64>() / n as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            Some(q * (var / n as f64).sqrt())
        })
        .collect();
    set_flat(&mut ci, &names, &halfwidths);
    SimMeasurement { report, ci_halfwidth: ci, batches: n }
}

/// Writes `values` (aligned with `names`) into the matching fields of `r`.
fn set_flat(r: &mut MetricsReport, names: &[(String, Option<f64>)], values: &[Option<f64>]) {
    for ((name, _), &v) in names.iter().zip(values) {
        if let Some(idx) = name.strip_prefix("c_sf_") {
            let i: usize = idx.parse().unwrap();
            r.c_sf[i - 1] = v.unwrap_or(f64::NAN);
            continue;
        }
        let slot = match name.as_str() {
            "tau_l" => &mut r.tau_l,
            "tau_h" => &mut r.tau_h,
            "tau_h_mc" => &mut r.tau_h_mc,
            "tau_h_ow" => &mut r.tau_h_ow,
            "tau_h_mc_abs" => &mut r.tau_h_mc_abs,
            "tau_h_ow_abs" => &mut r.tau_h_ow_abs,
            "p_b_l" => &mut r.p_b_l,
            "p_overlap" => &mut r.p_overlap,
            "p_c_h" => &mut r.p_c_h,
            "p_d" => &mut r.p_d,
            "avg_collided_sf" => &mut r.avg_collided_sf,
            "alpha" => &mut r.alpha,
            "s_l" => &mut r.s_l,
            "s_h" => &mut r.s_h,
            "e_d_l" => &mut r.e_d_l,
            "e_d_h" => &mut r.e_d_h,
            "z2" => &mut r.z2,
            other => unreachable!("unknown metric {other}"),
        };
        *slot = v;
    }
}
