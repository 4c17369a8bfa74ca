//! System parameters shared by the analytical engine and the simulator.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Microseconds per slot for both LTE-LAA and Wi-Fi.
pub const DEFAULT_SLOT_US: f64 = 9.0;

/// Channel access priority classes of LTE-LAA: (class, CW_min, CW_max, MCOT in ms).
///
/// Only class 4 is used by [`SystemConfig::paper_preset`]; the rest are kept for reference.
pub const PRIORITY_CLASSES: [(u8, u32, u32, &str); 4] = [
    (1, 4, 8, "2"),
    (2, 8, 16, "3"),
    (3, 16, 64, "8 or 10"),
    (4, 16, 1024, "8 or 10"),
];

/// Which subframe decides CW doubling in the 8 and 10 ms presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RsfChoice {
    /// Subframe 1, as in the current standard.
    First,
    /// The last subframe whose HARQ feedback arrives before the MCOT ends (4 ms delay).
    LastEligible,
}

/// Which node-H states count as overlapping a subframe in the analytic C_sf(r).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubframeEstimator {
    /// Only packets that start inside the subframe (counter in `1..sf_slot` at its first slot).
    Starts,
    /// Also packets already on air at the subframe's first slot (counter `0` or overlap state).
    InFlight,
}

impl SubframeEstimator {
    pub fn as_str(self) -> &'static str {
        match self {
            SubframeEstimator::Starts => "starts",
            SubframeEstimator::InFlight => "in_flight",
        }
    }
}

impl std::str::FromStr for SubframeEstimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "starts" => Ok(SubframeEstimator::Starts),
            "in_flight" => Ok(SubframeEstimator::InFlight),
            _ => Err(Error::InvalidConfig(format!("unknown subframe estimator '{s}'"))),
        }
    }
}

/// All model parameters.
///
/// Fields are public so experiments can tweak single knobs; call [`SystemConfig::validate`]
/// after editing. Every consumer in this crate validates on entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// W_0: contention window at stage 0, in slots.
    pub cw_min: u32,
    /// Maximum doubling exponent; backoff stages run 0..=m+1.
    pub m: u32,
    pub t_slot_us: f64,
    /// Subframes per MCOT.
    pub n_sf: u32,
    /// Slots per subframe.
    pub sf_slot: u32,
    /// M: slots per MCOT.
    pub mcot_slots: u32,
    /// Reference subframe (1-based).
    pub rsf: u32,
    /// Mean Wi-Fi packet length in slots.
    pub t_wifi: f64,
    /// OW-side share of an overlapping packet used by the collision formula.
    pub z2: f64,
    /// Node H resets to stage 0 on a collision at stage m+1 (retry limit). When false
    /// it stays at stage m+1.
    pub h_retry_reset: bool,
    /// Estimator behind the analytic C_sf(r), and hence p_d.
    pub subframe_estimator: SubframeEstimator,
}

impl SystemConfig {
    /// Builds a config with `mcot_slots = n_sf * sf_slot` and the remaining fields at
    /// their defaults.
    pub fn new(cw_min: u32, m: u32, n_sf: u32, sf_slot: u32, rsf: u32, t_wifi: f64) -> Result<Self> {
        let cfg = SystemConfig {
            cw_min,
            m,
            t_slot_us: DEFAULT_SLOT_US,
            n_sf,
            sf_slot,
            mcot_slots: n_sf * sf_slot,
            rsf,
            t_wifi,
            z2: 0.5,
            h_retry_reset: true,
            subframe_estimator: SubframeEstimator::InFlight,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Priority class 4 with CW_min = 16, m = 6 and 1 ms subframes of `floor(1000/9)` slots.
    pub fn paper_preset(t_mcot_ms: u32, rsf: RsfChoice, t_wifi: f64) -> Result<Self> {
        if t_mcot_ms != 8 && t_mcot_ms != 10 {
            return Err(Error::InvalidConfig(format!(
                "presets exist for 8 and 10 ms MCOTs, got {t_mcot_ms}"
            )));
        }
        let sf_slot = default_sf_slot(DEFAULT_SLOT_US);
        let rsf = match rsf {
            RsfChoice::First => 1,
            RsfChoice::LastEligible => last_eligible_rsf(t_mcot_ms),
        };
        SystemConfig::new(16, 6, t_mcot_ms, sf_slot, rsf, t_wifi)
    }

    /// Desk-scale configuration used throughout the tests: W_0 = 4, m = 1, four subframes
    /// of five slots, T_WiFi = 3.
    pub fn desk() -> Self {
        SystemConfig::new(4, 1, 4, 5, 1, 3.0).expect("desk config is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.cw_min < 1 {
            return bad("cw_min must be positive".into());
        }
        if self.m > 20 {
            return bad(format!("m = {} overflows the window ladder", self.m));
        }
        if !(self.t_slot_us > 0.0) {
            return bad("t_slot_us must be positive".into());
        }
        if self.n_sf < 1 || self.sf_slot < 1 {
            return bad("n_sf and sf_slot must be positive".into());
        }
        if self.mcot_slots < self.sf_slot {
            return bad(format!(
                "mcot_slots ({}) must be at least sf_slot ({})",
                self.mcot_slots, self.sf_slot
            ));
        }
        if self.rsf < 1 || self.rsf > self.n_sf {
            return bad(format!("rsf must lie in 1..={}, got {}", self.n_sf, self.rsf));
        }
        if !(self.t_wifi >= 1.0) || !self.t_wifi.is_finite() {
            return bad(format!("t_wifi must be >= 1, got {}", self.t_wifi));
        }
        if !(0.0..=1.0).contains(&self.z2) {
            return bad(format!("z2 must lie in [0, 1], got {}", self.z2));
        }
        Ok(())
    }

    /// Number of backoff stages, m + 2.
    pub fn stages(&self) -> usize {
        self.m as usize + 2
    }

    /// W_i = min(2^i, 2^m) W_0.
    pub fn window(&self, stage: usize) -> usize {
        let exp = (stage as u32).min(self.m);
        (1usize << exp) * self.cw_min as usize
    }

    pub fn cw_max(&self) -> usize {
        self.window(self.m as usize)
    }

    /// M as usize.
    pub fn mcot(&self) -> usize {
        self.mcot_slots as usize
    }

    /// p_o = 1 / T_WiFi, per-slot completion probability of a Wi-Fi packet.
    pub fn p_o(&self) -> f64 {
        1.0 / self.t_wifi
    }

    /// Number of states of the simplified node-L chain, M + m + 2.
    pub fn laa_states(&self) -> usize {
        self.mcot() + self.stages()
    }

    /// Subframe indexing needs the MCOT to be exactly n_sf subframes long.
    pub fn subframes_aligned(&self) -> bool {
        self.mcot_slots == self.n_sf * self.sf_slot
    }

    /// Whether the reference subframe obeys the 4 ms HARQ feedback delay. Advisory only.
    pub fn rsf_harq_eligible(&self) -> bool {
        self.rsf + 4 <= self.n_sf + 1
    }

    /// Flat `key = value` rendering in a fixed key order.
    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.kv_pairs() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    fn kv_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("cw_min", self.cw_min.to_string()),
            ("m", self.m.to_string()),
            ("t_slot_us", fmt_f64(self.t_slot_us)),
            ("n_sf", self.n_sf.to_string()),
            ("sf_slot", self.sf_slot.to_string()),
            ("mcot_slots", self.mcot_slots.to_string()),
            ("rsf", self.rsf.to_string()),
            ("t_wifi", fmt_f64(self.t_wifi)),
            ("z2", fmt_f64(self.z2)),
            ("h_retry_reset", self.h_retry_reset.to_string()),
            ("subframe_estimator", self.subframe_estimator.as_str().to_string()),
        ]
    }

    /// Hex SHA-256 of the canonical key-value rendering.
    pub fn config_hash(&self) -> String {
        sha256_hex(self.to_kv_string().as_bytes())
    }

    /// Applies recognised keys from `kv` on top of `self`. `sf_slot` and `n_sf` changes
    /// re-derive `mcot_slots` unless it is given explicitly. Unknown keys are returned.
    pub fn apply_kv(&mut self, kv: &BTreeMap<String, String>) -> Result<Vec<String>> {
        let mut unknown = Vec::new();
        let mut explicit_mcot = false;
        let mut explicit_sf_slot = false;
        for (key, raw) in kv {
            let v = raw.trim();
            match key.as_str() {
                "cw_min" => self.cw_min = parse_num(key, v)?,
                "m" => self.m = parse_num(key, v)?,
                "t_slot_us" => self.t_slot_us = parse_num(key, v)?,
                "n_sf" | "t_mcot_ms" => self.n_sf = parse_num(key, v)?,
                "sf_slot" => {
                    self.sf_slot = parse_num(key, v)?;
                    explicit_sf_slot = true;
                }
                "mcot_slots" => {
                    self.mcot_slots = parse_num(key, v)?;
                    explicit_mcot = true;
                }
                "rsf" => self.rsf = parse_num(key, v)?,
                "t_wifi" => self.t_wifi = parse_num(key, v)?,
                "z2" => self.z2 = parse_num(key, v)?,
                "h_retry_reset" => self.h_retry_reset = parse_num(key, v)?,
                "subframe_estimator" => self.subframe_estimator = v.parse()?,
                _ => unknown.push(key.clone()),
            }
        }
        if !explicit_sf_slot && kv.contains_key("t_slot_us") {
            self.sf_slot = default_sf_slot(self.t_slot_us);
        }
        if !explicit_mcot {
            self.mcot_slots = self.n_sf * self.sf_slot;
        }
        self.validate()?;
        Ok(unknown)
    }

    /// Parses a flat key-value file body onto the default preset (8 ms, RSF 1, T_WiFi 54).
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let kv = parse_kv(text)?;
        let mut cfg = SystemConfig::paper_preset(8, RsfChoice::First, 54.0)?;
        let unknown = cfg.apply_kv(&kv)?;
        if let Some(k) = unknown.first() {
            return Err(Error::InvalidConfig(format!("unknown key '{k}'")));
        }
        Ok(cfg)
    }
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `floor(1000 / t_slot_us)`: slots in a 1 ms subframe.
pub fn default_sf_slot(t_slot_us: f64) -> u32 {
    (1000.0 / t_slot_us).floor() as u32
}

/// Last subframe with HARQ feedback available inside the MCOT (4 ms feedback delay).
pub fn last_eligible_rsf(n_sf: u32) -> u32 {
    match n_sf {
        8 => 4,
        10 => 6,
        n => n.saturating_sub(4).max(1),
    }
}

/// Parses `key = value` lines. `#` starts a comment; blank lines are skipped.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: idx + 1,
            msg: format!("expected 'key = value', got '{line}'"),
        })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Parse { line: idx + 1, msg: "empty key".into() });
        }
        if out.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(Error::Parse { line: idx + 1, msg: format!("duplicate key '{k}'") });
        }
    }
    Ok(out)
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::InvalidConfig(format!("cannot parse value '{v}' for key '{key}'")))
}

/// Shortest round-tripping decimal rendering.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// State of the simplified node-L chain: 1..=M are MCOT slots, M+1+i is backoff stage i.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LaaStateIndex(pub usize);

impl LaaStateIndex {
    pub fn mcot_slot(j: usize) -> Self {
        LaaStateIndex(j)
    }

    pub fn backoff(cfg: &SystemConfig, stage: usize) -> Self {
        LaaStateIndex(cfg.mcot() + 1 + stage)
    }

    pub fn is_valid(self, cfg: &SystemConfig) -> bool {
        self.0 >= 1 && self.0 <= cfg.laa_states()
    }

    pub fn is_mcot(self, cfg: &SystemConfig) -> bool {
        self.0 >= 1 && self.0 <= cfg.mcot()
    }

    /// η(l) = l - M - 1, the backoff stage of a backoff state.
    pub fn stage(self, cfg: &SystemConfig) -> Option<usize> {
        if self.0 > cfg.mcot() && self.0 <= cfg.laa_states() {
            Some(self.0 - cfg.mcot() - 1)
        } else {
            None
        }
    }

    /// Zero-based position of the l-block in the joint vector.
    pub fn block(self) -> usize {
        self.0 - 1
    }
}
