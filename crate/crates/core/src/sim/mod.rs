//! Slot-level simulation of node L (LBT with MCOT bursts) and node H (DCF), where node
//! L senses node H but not the other way round.
//!
//! Randomness comes from xoshiro256++ seeded through SplitMix64 (`seed_from_u64`).
//! Node H's packet durations are drawn at packet start by inverse CDF,
//! `n = max(1, ceil(ln U / ln(1 - 1/T)))` with `U = 1 - next_f64()`; backoff counters are
//! uniform over `0..W`.

mod stats;

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::wifi_chain::collision_stage;

pub use stats::{measure, report_from_counters, SimCounters, SimMeasurement, SimStats};

pub const DEFAULT_WARMUP: u64 = 100_000;
pub const DEFAULT_BATCHES: usize = 20;

/// When node L doubles its window after an MCOT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DoublingRule {
    /// Double iff any node-H transmission overlapped the reference subframe.
    #[default]
    RsfOverlap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub system: SystemConfig,
    pub seed: u64,
    /// Slots simulated, warmup included.
    pub total_slots: u64,
    pub warmup_slots: u64,
    pub doubling_rule: DoublingRule,
    pub batches: usize,
    /// Node H never transmits.
    pub disable_wifi: bool,
}

impl SimConfig {
    pub fn new(system: SystemConfig, seed: u64, measured_slots: u64) -> Self {
        SimConfig {
            system,
            seed,
            total_slots: measured_slots + DEFAULT_WARMUP,
            warmup_slots: DEFAULT_WARMUP,
            doubling_rule: DoublingRule::RsfOverlap,
            batches: DEFAULT_BATCHES,
            disable_wifi: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if self.total_slots <= self.warmup_slots {
            return Err(Error::InvalidConfig(format!(
                "total_slots ({}) must exceed warmup_slots ({})",
                self.total_slots, self.warmup_slots
            )));
        }
        if self.batches == 0 || self.batches as u64 > self.total_slots - self.warmup_slots {
            return Err(Error::InvalidConfig(format!("invalid batch count {}", self.batches)));
        }
        Ok(())
    }
}

#[derive(Debug)]
enum Laa {
    Backoff { bc: usize },
    /// Slot `j` (1-based) of the MCOT.
    Mcot { j: usize },
}

#[derive(Debug, Default)]
struct Packet {
    start: u64,
    len: u64,
    remaining: u64,
    mcot_slots: u64,
    ow_slots: u64,
}

struct Engine<'a, 'w> {
    cfg: &'a SimConfig,
    rng: Xoshiro256PlusPlus,
    ln_q: f64,
    l_stage: usize,
    laa: Laa,
    /// Subframes of the current MCOT overlapped by node H.
    sf_hit: Vec<bool>,
    last_mcot_end: Option<u64>,
    h_stage: usize,
    h_bc: usize,
    packet: Option<Packet>,
    last_packet_end: Option<u64>,
    trace: Option<&'w mut dyn Write>,
}

impl Engine<'_, '_> {
    fn draw_bc(&mut self, stage: usize) -> usize {
        self.rng.random_range(0..self.cfg.system.window(stage))
    }

    fn draw_duration(&mut self) -> u64 {
        if self.ln_q == f64::NEG_INFINITY {
            return 1;
        }
        let u = 1.0 - self.rng.random::<f64>();
        ((u.ln() / self.ln_q).ceil() as u64).max(1)
    }

    fn log(&mut self, line: std::fmt::Arguments<'_>) -> Result<()> {
        if let Some(w) = self.trace.as_mut() {
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

pub fn run(cfg: &SimConfig) -> Result<SimStats> {
    run_traced(cfg, None)
}

/// Runs the simulation, writing one line per packet / MCOT event to `trace` if given.
pub fn run_traced(cfg: &SimConfig, trace: Option<&mut dyn Write>) -> Result<SimStats> {
    cfg.validate()?;
    let sys = &cfg.system;
    let n_sf = sys.n_sf as usize;
    let sf_slot = sys.sf_slot as usize;
    let m_slots = sys.mcot();
    let rsf = sys.rsf as usize - 1;
    let last_stage = sys.stages() - 1;
    let p_o = sys.p_o();

    let mut e = Engine {
        cfg,
        rng: Xoshiro256PlusPlus::seed_from_u64(cfg.seed),
        ln_q: (1.0 - p_o).ln(),
        l_stage: 0,
        laa: Laa::Backoff { bc: 0 },
        sf_hit: vec![false; n_sf],
        last_mcot_end: None,
        h_stage: 0,
        h_bc: 0,
        packet: None,
        last_packet_end: None,
        trace,
    };
    let bc = e.draw_bc(0);
    e.laa = if bc == 0 { Laa::Mcot { j: 1 } } else { Laa::Backoff { bc } };
    e.h_bc = e.draw_bc(0);

    let measured = cfg.total_slots - cfg.warmup_slots;
    let mut batches = vec![SimCounters::new(n_sf); cfg.batches];
    let mut batch = 0usize;
    let mut next_boundary = cfg.warmup_slots + measured / cfg.batches as u64;

    for t in 0..cfg.total_slots {
        let counted = t >= cfg.warmup_slots;
        if counted && t >= next_boundary && batch + 1 < cfg.batches {
            batch += 1;
            next_boundary = cfg.warmup_slots + measured * (batch as u64 + 1) / cfg.batches as u64;
        }

        // Node H starts a packet when its counter has reached zero.
        if e.packet.is_none() && e.h_bc == 0 && !cfg.disable_wifi {
            let len = e.draw_duration();
            if counted {
                if let Some(end) = e.last_packet_end {
                    batches[batch].h_gap_sum += t - end - 1;
                    batches[batch].h_gaps += 1;
                }
                if matches!(e.laa, Laa::Mcot { j: 1 }) {
                    batches[batch].simultaneous_starts += 1;
                }
            }
            let stage = e.h_stage;
            e.log(format_args!("{t} h_start stage={stage} len={len}"))?;
            e.packet = Some(Packet { start: t, len, remaining: len, ..Default::default() });
        }
        let h_tx = e.packet.is_some();
        let in_mcot = matches!(e.laa, Laa::Mcot { .. });

        if let Laa::Mcot { j } = e.laa {
            if j == 1 {
                if counted {
                    if let Some(end) = e.last_mcot_end {
                        batches[batch].l_gap_sum += t - end - 1;
                        batches[batch].l_gaps += 1;
                    }
                }
                e.sf_hit.iter_mut().for_each(|h| *h = false);
                let stage = e.l_stage;
                e.log(format_args!("{t} mcot_start stage={stage}"))?;
            }
            if h_tx {
                let sf = (j - 1) / sf_slot;
                if sf < n_sf {
                    e.sf_hit[sf] = true;
                }
            }
        }
        if counted {
            let b = &mut batches[batch];
            b.slots += 1;
            if in_mcot {
                b.mcot_slots += 1;
                b.h_tx_mc_slots += h_tx as u64;
            } else {
                b.ow_slots += 1;
                b.h_tx_ow_slots += h_tx as u64;
            }
        }

        // End of slot: node H.
        if let Some(p) = e.packet.as_mut() {
            if in_mcot {
                p.mcot_slots += 1;
            } else {
                p.ow_slots += 1;
            }
            p.remaining -= 1;
            if p.remaining == 0 {
                let p = e.packet.take().unwrap();
                let collided = p.mcot_slots > 0;
                if counted {
                    let b = &mut batches[batch];
                    b.h_packets += 1;
                    if collided {
                        b.h_collided += 1;
                    } else {
                        b.h_success_slots += p.len;
                    }
                    match (p.mcot_slots > 0, p.ow_slots > 0) {
                        (true, true) => {
                            b.overlap_events += 1;
                            b.z2_sum += p.ow_slots as f64 / p.len as f64;
                        }
                        (true, false) => b.h_packets_mc += 1,
                        _ => b.h_packets_ow += 1,
                    }
                }
                e.h_stage = if collided { collision_stage(sys, e.h_stage) } else { 0 };
                e.h_bc = e.draw_bc(e.h_stage);
                e.last_packet_end = Some(t);
                e.log(format_args!(
                    "{t} h_end start={} len={} mcot_slots={} collided={}",
                    p.start, p.len, p.mcot_slots, collided as u8
                ))?;
            }
        } else if !cfg.disable_wifi {
            e.h_bc -= 1;
        }

        // End of slot: node L.
        e.laa = match e.laa {
            Laa::Mcot { j } if j < m_slots => Laa::Mcot { j: j + 1 },
            Laa::Mcot { .. } => {
                let double = match cfg.doubling_rule {
                    DoublingRule::RsfOverlap => e.sf_hit[rsf],
                };
                if counted {
                    let b = &mut batches[batch];
                    b.mcots += 1;
                    b.doublings += double as u64;
                    for (n, &hit) in b.sf_overlaps.iter_mut().zip(&e.sf_hit) {
                        *n += hit as u64;
                    }
                }
                let from = e.l_stage;
                e.l_stage = if double && from < last_stage { from + 1 } else { 0 };
                e.last_mcot_end = Some(t);
                let next = e.l_stage;
                e.log(format_args!("{t} mcot_end stage={from} double={} next={next}", double as u8))?;
                match e.draw_bc(e.l_stage) {
                    0 => Laa::Mcot { j: 1 },
                    bc => Laa::Backoff { bc },
                }
            }
            Laa::Backoff { bc } if h_tx => Laa::Backoff { bc },
            Laa::Backoff { bc: 1 } => Laa::Mcot { j: 1 },
            Laa::Backoff { bc } => Laa::Backoff { bc: bc - 1 },
        };
    }

    let mut total = SimCounters::new(n_sf);
    for b in &batches {
        total += b;
    }
    Ok(SimStats { system: cfg.system.clone(), seeds: vec![cfg.seed], total, batches })
}
