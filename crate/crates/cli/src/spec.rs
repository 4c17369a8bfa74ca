//! Experiment specification: a flat `key = value` file whose keys are either experiment
//! controls (below) or [`SystemConfig`] keys applied to the base configuration.
//!
//! | key | value |
//! |-----|-------|
//! | `mode` | `analyze`, `simulate`, `compare` or `sweep` |
//! | `engines` | sweep mode only: comma list of `analytic`, `simulation` |
//! | `n_sf` / `t_mcot_ms` | comma list; sweep axis |
//! | `rsf` | comma list of subframe numbers, `first` or `last`; sweep axis |
//! | `t_wifi` | comma list; sweep axis |
//! | `seeds` | comma list of simulation seeds |
//! | `slots` | measured slots per seed |
//! | `warmup` | warmup slots per seed |
//! | `tol_profile` | `paper` or `strict` |
//! | `fp_tol`, `damping`, `max_rounds` | fixed-point controls |
//! | `out`, `cache` | output and cache directories |

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use laa_core::config::{last_eligible_rsf, parse_kv};
use laa_core::{Error, Result, RsfChoice, SystemConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Analyze,
    Simulate,
    Compare,
    Sweep,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analyze" => Ok(Mode::Analyze),
            "simulate" => Ok(Mode::Simulate),
            "compare" => Ok(Mode::Compare),
            "sweep" => Ok(Mode::Sweep),
            _ => Err(Error::InvalidConfig(format!("unknown mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Analytic,
    Simulation,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::Simulation => "simulation",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" | "analysis" => Ok(Engine::Analytic),
            "simulation" | "sim" => Ok(Engine::Simulation),
            _ => Err(Error::InvalidConfig(format!("unknown engine '{s}'"))),
        }
    }
}

/// A reference subframe given as a number or relative to the MCOT length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RsfAxis {
    Fixed(u32),
    Choice(RsfChoice),
}

impl RsfAxis {
    pub fn resolve(self, n_sf: u32) -> u32 {
        match self {
            RsfAxis::Fixed(r) => r,
            RsfAxis::Choice(RsfChoice::First) => 1,
            RsfAxis::Choice(RsfChoice::LastEligible) => last_eligible_rsf(n_sf),
        }
    }
}

impl FromStr for RsfAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(RsfAxis::Choice(RsfChoice::First)),
            "last" | "last_eligible" => Ok(RsfAxis::Choice(RsfChoice::LastEligible)),
            _ => s
                .parse()
                .map(RsfAxis::Fixed)
                .map_err(|_| Error::InvalidConfig(format!("invalid rsf '{s}'"))),
        }
    }
}

/// Pass rule for analytic-vs-simulated rows: `|a - s| <= max(abs, rel * |s|, ci_mult * ci)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TolProfile {
    pub name: &'static str,
    pub abs: f64,
    pub rel: f64,
    pub ci_mult: f64,
}

impl TolProfile {
    pub const PAPER: TolProfile = TolProfile { name: "paper", abs: 0.02, rel: 0.05, ci_mult: 3.0 };
    pub const STRICT: TolProfile = TolProfile { name: "strict", abs: 1e-3, rel: 0.01, ci_mult: 1.0 };

    pub fn tolerance(&self, simulated: f64, ci: Option<f64>) -> f64 {
        let ci = ci.filter(|c| c.is_finite()).unwrap_or(0.0);
        self.abs.max(self.rel * simulated.abs()).max(self.ci_mult * ci)
    }
}

impl FromStr for TolProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(TolProfile::PAPER),
            "strict" => Ok(TolProfile::STRICT),
            _ => Err(Error::InvalidConfig(format!("unknown tolerance profile '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub engines: Vec<Engine>,
    /// Base configuration; axis values replace its `n_sf`, `rsf` and `t_wifi`.
    pub base: SystemConfig,
    pub n_sf: Vec<u32>,
    pub rsf: Vec<RsfAxis>,
    pub t_wifi: Vec<f64>,
    pub seeds: Vec<u64>,
    pub slots: u64,
    pub warmup: u64,
    pub tol_profile: TolProfile,
    pub fp_tol: f64,
    pub damping: f64,
    pub max_rounds: usize,
    pub out: PathBuf,
    pub cache: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub trace: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let base = SystemConfig::paper_preset(8, RsfChoice::First, 54.0).expect("preset");
        ExperimentSpec {
            mode: Mode::Analyze,
            engines: vec![Engine::Analytic],
            n_sf: vec![base.n_sf],
            rsf: vec![RsfAxis::Fixed(base.rsf)],
            t_wifi: vec![base.t_wifi],
            base,
            seeds: vec![1],
            slots: 100_000_000,
            warmup: laa_core::sim::DEFAULT_WARMUP,
            tol_profile: TolProfile::PAPER,
            fp_tol: 1e-10,
            damping: 1.0,
            max_rounds: 500,
            out: PathBuf::from("out"),
            cache: None,
            jobs: None,
            trace: false,
        }
    }
}

fn list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::InvalidConfig(format!("invalid value '{s}' for '{key}'"))))
        .collect()
}

fn scalar<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.trim().parse().map_err(|_| Error::InvalidConfig(format!("invalid value '{raw}' for '{key}'")))
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let kv = parse_kv(text)?;
        let mut spec = ExperimentSpec::default();
        spec.apply(&kv)?;
        Ok(spec)
    }

    /// Applies keys on top of the current values; later calls override earlier ones.
    pub fn apply(&mut self, kv: &BTreeMap<String, String>) -> Result<()> {
        let mut system = BTreeMap::new();
        let mut engines_given = false;
        for (key, raw) in kv {
            match key.as_str() {
                "mode" => self.mode = scalar(key, raw)?,
                "engines" => {
                    self.engines = list(key, raw)?;
                    engines_given = true;
                }
                "n_sf" | "t_mcot_ms" => self.n_sf = list(key, raw)?,
                "rsf" => self.rsf = list(key, raw)?,
                "t_wifi" => self.t_wifi = list(key, raw)?,
                "seeds" => self.seeds = list(key, raw)?,
                "slots" => self.slots = scalar(key, raw)?,
                "warmup" => self.warmup = scalar(key, raw)?,
                "tol_profile" => self.tol_profile = scalar(key, raw)?,
                "fp_tol" => self.fp_tol = scalar(key, raw)?,
                "damping" => self.damping = scalar(key, raw)?,
                "max_rounds" => self.max_rounds = scalar(key, raw)?,
                "out" => self.out = PathBuf::from(raw.trim()),
                "cache" => self.cache = Some(PathBuf::from(raw.trim())),
                "jobs" => self.jobs = Some(scalar(key, raw)?),
                "trace" => self.trace = scalar(key, raw)?,
                _ => {
                    system.insert(key.clone(), raw.clone());
                }
            }
        }
        if !system.is_empty() {
            let unknown = self.base.apply_kv(&system)?;
            if let Some(k) = unknown.first() {
                return Err(Error::InvalidConfig(format!("unknown key '{k}'")));
            }
        }
        if !engines_given && kv.contains_key("mode") {
            self.engines = match self.mode {
                Mode::Analyze => vec![Engine::Analytic],
                Mode::Simulate => vec![Engine::Simulation],
                Mode::Compare | Mode::Sweep => vec![Engine::Analytic, Engine::Simulation],
            };
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_sf.is_empty() || self.rsf.is_empty() || self.t_wifi.is_empty() {
            return bad("sweep axes n_sf, rsf and t_wifi must be non-empty");
        }
        if self.engines.is_empty() {
            return bad("no engine selected");
        }
        if self.mode == Mode::Compare && self.engines.len() < 2 {
            return bad("compare mode runs both engines");
        }
        if self.engines.contains(&Engine::Simulation) && (self.seeds.is_empty() || self.slots == 0) {
            return bad("simulation needs at least one seed and a positive slot budget");
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("damping must lie in (0, 1]");
        }
        for cell in self.cells() {
            cell.config(&self.base)?;
        }
        Ok(())
    }

    /// All (n_sf, rsf, t_wifi) cells in axis order.
    pub fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        for &n_sf in &self.n_sf {
            for &rsf in &self.rsf {
                for &t_wifi in &self.t_wifi {
                    out.push(CellKey { n_sf, rsf: rsf.resolve(n_sf), t_wifi });
                }
            }
        }
        out.sort_by(|a, b| a.cmp_key(b));
        out.dedup();
        out
    }

    /// Canonical `key = value` echo of the effective spec.
    pub fn to_kv_string(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let mut s = format!(
            "mode = {}\nengines = {}\nn_sf = {}\nrsf = {}\nt_wifi = {}\nseeds = {}\nslots = {}\nwarmup = {}\n\
             tol_profile = {}\nfp_tol = {:?}\ndamping = {:?}\nmax_rounds = {}\n",
            serde_json::to_value(self.mode).unwrap().as_str().unwrap(),
            join(self.engines.iter().map(|e| e.to_string()).collect()),
            join(self.n_sf.iter().map(|v| v.to_string()).collect()),
            join(self.rsf.iter().map(|r| match r {
                RsfAxis::Fixed(n) => n.to_string(),
                RsfAxis::Choice(RsfChoice::First) => "first".into(),
                RsfAxis::Choice(RsfChoice::LastEligible) => "last".into(),
            }).collect()),
            join(self.t_wifi.iter().map(|v| format!("{v:?}")).collect()),
            join(self.seeds.iter().map(|v| v.to_string()).collect()),
            self.slots,
            self.warmup,
            self.tol_profile.name,
            self.fp_tol,
            self.damping,
            self.max_rounds,
        );
        // Axis keys and the derived MCOT length come from the lines above.
        for line in self.base.to_kv_string().lines() {
            let key = line.split('=').next().unwrap_or("").trim();
            if !matches!(key, "n_sf" | "rsf" | "t_wifi" | "mcot_slots") {
                s.push_str(line);
                s.push('\n');
            }
        }
        s
    }
}

/// Coordinates of one experiment cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub n_sf: u32,
    pub rsf: u32,
    pub t_wifi: f64,
}

impl CellKey {
    pub fn cmp_key(&self, other: &Self) -> std::cmp::Ordering {
        (self.n_sf, self.rsf)
            .cmp(&(other.n_sf, other.rsf))
            .then(self.t_wifi.total_cmp(&other.t_wifi))
    }

    pub fn config(&self, base: &SystemConfig) -> Result<SystemConfig> {
        let mut cfg = base.clone();
        cfg.n_sf = self.n_sf;
        cfg.mcot_slots = self.n_sf * cfg.sf_slot;
        cfg.rsf = self.rsf;
        cfg.t_wifi = self.t_wifi;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn label(&self) -> String {
        format!("nsf{}_rsf{}_t{}", self.n_sf, self.rsf, fmt_num(self.t_wifi))
    }
}

/// Shortest round-trip rendering of a coordinate.
pub fn fmt_num(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lists_and_system_keys() {
        let spec = ExperimentSpec::parse(
            "mode = sweep\nt_wifi = 4, 54,104\nrsf = first,last\nn_sf = 8,10\nseeds = 3,4\ncw_min = 8\n",
        )
        .unwrap();
        assert_eq!(spec.mode, Mode::Sweep);
        assert_eq!(spec.engines, vec![Engine::Analytic, Engine::Simulation]);
        assert_eq!(spec.base.cw_min, 8);
        let cells = spec.cells();
        assert_eq!(cells.len(), 12);
        assert!(cells.iter().any(|c| c.n_sf == 10 && c.rsf == 6));
        assert!(cells.iter().any(|c| c.n_sf == 8 && c.rsf == 4));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(ExperimentSpec::parse("mode = dance").is_err());
        assert!(ExperimentSpec::parse("bogus = 1").is_err());
        let mut spec = ExperimentSpec::parse("mode = compare").unwrap();
        spec.engines = vec![Engine::Analytic];
        assert!(spec.validate().is_err());
        let spec = ExperimentSpec::parse("t_wifi = ").unwrap();
        assert!(spec.validate().is_err());
        let spec = ExperimentSpec::parse("rsf = 9").unwrap();
        assert!(spec.validate().is_err());
    }

    #[test]
    fn tolerance_profiles() {
        let p = TolProfile::PAPER;
        assert_eq!(p.tolerance(0.1, None), 0.02);
        assert_eq!(p.tolerance(100.0, Some(0.1)), 5.0);
        assert_eq!(p.tolerance(100.0, Some(3.0)), 9.0);
    }

    #[test]
    fn echo_round_trips() {
        let spec = ExperimentSpec::parse("mode = compare\nt_wifi = 4,54\nrsf = last\nseeds = 1,2\nslots = 1000").unwrap();
        let again = ExperimentSpec::parse(&spec.to_kv_string()).unwrap();
        assert_eq!(spec.cells(), again.cells());
        assert_eq!(spec.base, again.base);
        assert_eq!(spec.seeds, again.seeds);
    }
}
