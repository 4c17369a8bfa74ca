//! CSV and JSON artifacts.
//!
//! Metric files are long-format with the columns
//! `n_sf,rsf,t_wifi,engine,metric,value,ci_halfwidth`, one file per metric family.
//! Values are printed with 10 decimals; `NA` marks a value that is absent (undefined
//! or not produced by that engine) and `inf` an infinite delay.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use laa_core::{MetricsReport, Result};
use serde::Serialize;

use crate::run::CellResult;
use crate::spec::{fmt_num, CellKey, Engine, ExperimentSpec, TolProfile};

pub const METRIC_HEADER: &str = "n_sf,rsf,t_wifi,engine,metric,value,ci_halfwidth";

/// Metric families and the files they are written to.
pub const FAMILIES: [(&str, &str); 5] = [
    ("transmit", "transmit_probabilities.csv"),
    ("collision", "collision_doubling.csv"),
    ("subframe", "subframe_collisions.csv"),
    ("throughput", "throughput_delay.csv"),
    ("z2", "z2.csv"),
];

pub fn family_of(metric: &str) -> &'static str {
    match metric {
        "tau_l" | "tau_h" | "tau_h_mc" | "tau_h_ow" | "tau_h_mc_abs" | "tau_h_ow_abs" | "p_b_l" => "transmit",
        "p_overlap" | "p_c_h" | "p_d" => "collision",
        "avg_collided_sf" | "alpha" => "subframe",
        m if m.starts_with("c_sf_") => "subframe",
        "s_l" | "s_h" | "e_d_l" | "e_d_h" => "throughput",
        _ => "z2",
    }
}

pub fn fmt_value(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.10}"),
        Some(x) if x > 0.0 => "inf".into(),
        Some(x) if x < 0.0 => "-inf".into(),
        Some(_) => "NaN".into(),
        None => "NA".into(),
    }
}

fn coords(k: &CellKey) -> String {
    format!("{},{},{}", k.n_sf, k.rsf, fmt_num(k.t_wifi))
}

/// One long-format row per (cell, engine, metric), grouped by family.
pub fn metric_rows(results: &[CellResult]) -> BTreeMap<&'static str, Vec<String>> {
    let mut out: BTreeMap<&'static str, Vec<String>> = FAMILIES.iter().map(|(f, _)| (*f, Vec::new())).collect();
    for r in results {
        let Some(report) = &r.report else { continue };
        let ci = r.ci_halfwidth.as_ref().map(|c| c.flatten());
        for (i, (name, value)) in report.flatten().into_iter().enumerate() {
            let half = ci.as_ref().and_then(|c| c.get(i)).and_then(|(_, h)| *h);
            let row = format!("{},{},{},{},{}", coords(&r.key), r.engine, name, fmt_value(value), fmt_value(half));
            out.get_mut(family_of(&name)).unwrap().push(row);
        }
    }
    out
}

pub fn render_csv(header: &str, rows: &[String]) -> String {
    let mut s = String::with_capacity(64 * (rows.len() + 1));
    s.push_str(header);
    s.push('\n');
    for r in rows {
        s.push_str(r);
        s.push('\n');
    }
    s
}

/// Writes the five metric CSVs into `dir`; returns the file names.
pub fn write_metric_csvs(dir: &Path, results: &[CellResult]) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let rows = metric_rows(results);
    let mut names = Vec::new();
    for (family, file) in FAMILIES {
        fs::write(dir.join(file), render_csv(METRIC_HEADER, &rows[family]))?;
        names.push(file.to_string());
    }
    Ok(names)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub key: CellKey,
    pub metric: String,
    pub analytic: Option<f64>,
    pub simulated: Option<f64>,
    pub ci_halfwidth: Option<f64>,
    pub abs_err: Option<f64>,
    pub rel_err: Option<f64>,
    pub tolerance: Option<f64>,
    /// `None` when either engine lacks the value.
    pub pass: Option<bool>,
}

pub const COMPARE_HEADER: &str =
    "n_sf,rsf,t_wifi,metric,analytic,simulated,ci_halfwidth,abs_err,rel_err,tolerance,pass";

impl ComparisonRow {
    pub fn new(key: CellKey, metric: &str, a: Option<f64>, s: Option<f64>, ci: Option<f64>, tol: &TolProfile) -> Self {
        let (mut abs_err, mut rel_err, mut tolerance, mut pass) = (None, None, None, None);
        if let (Some(a), Some(s)) = (a, s) {
            if a.is_infinite() && s.is_infinite() && a.signum() == s.signum() {
                abs_err = Some(0.0);
                pass = Some(true);
            } else {
                let d = (a - s).abs();
                let t = tol.tolerance(s, ci);
                abs_err = Some(d);
                rel_err = (s != 0.0).then(|| d / s.abs());
                tolerance = Some(t);
                pass = Some(d <= t);
            }
        }
        ComparisonRow { key, metric: metric.into(), analytic: a, simulated: s, ci_halfwidth: ci, abs_err, rel_err, tolerance, pass }
    }

    pub fn csv(&self) -> String {
        let pass = match self.pass {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "NA",
        };
        format!(
            "{},{},{},{},{},{},{},{},{}",
            coords(&self.key),
            self.metric,
            fmt_value(self.analytic),
            fmt_value(self.simulated),
            fmt_value(self.ci_halfwidth),
            fmt_value(self.abs_err),
            fmt_value(self.rel_err),
            fmt_value(self.tolerance),
            pass
        )
    }
}

fn pair<'a>(results: &'a [CellResult], key: &CellKey) -> (Option<&'a CellResult>, Option<&'a CellResult>) {
    let find = |e: Engine| results.iter().find(|r| r.engine == e && r.key == *key);
    (find(Engine::Analytic), find(Engine::Simulation))
}

fn unique_keys(results: &[CellResult]) -> Vec<CellKey> {
    let mut keys: Vec<CellKey> = results.iter().map(|r| r.key).collect();
    keys.sort_by(|a, b| a.cmp_key(b));
    keys.dedup();
    keys
}

/// Analytic-vs-simulated rows for every metric of every cell that has both engines.
pub fn comparison_rows(results: &[CellResult], tol: &TolProfile) -> Vec<ComparisonRow> {
    let mut rows = Vec::new();
    for key in unique_keys(results) {
        let (Some(a), Some(s)) = pair(results, &key) else { continue };
        let a_flat = a.report.as_ref().map(|r| r.flatten());
        let s_flat = s.report.as_ref().map(|r| r.flatten());
        let ci_flat = s.ci_halfwidth.as_ref().map(|r| r.flatten());
        let names = a_flat.as_ref().or(s_flat.as_ref()).cloned().unwrap_or_default();
        for (i, (name, _)) in names.iter().enumerate() {
            let get = |f: &Option<Vec<(String, Option<f64>)>>| f.as_ref().and_then(|v| v.get(i)).and_then(|x| x.1);
            rows.push(ComparisonRow::new(key, name, get(&a_flat), get(&s_flat), get(&ci_flat), tol));
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityRow {
    pub key: CellKey,
    pub engine: Engine,
    pub identity: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

pub const IDENTITY_HEADER: &str = "n_sf,rsf,t_wifi,engine,identity,lhs,rhs,abs_err,pass";

impl IdentityRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            coords(&self.key),
            self.engine,
            self.identity,
            fmt_value(Some(self.lhs)),
            fmt_value(Some(self.rhs)),
            fmt_value(Some((self.lhs - self.rhs).abs())),
            if self.pass { "pass" } else { "FAIL" }
        )
    }
}

/// Relations that hold by construction within one engine's report.
pub fn identity_rows(results: &[CellResult], n_sf_of: impl Fn(&CellKey) -> f64) -> Vec<IdentityRow> {
    let mut rows = Vec::new();
    for r in results {
        let Some(m) = &r.report else { continue };
        let mut push = |identity, lhs: Option<f64>, rhs: Option<f64>| {
            if let (Some(lhs), Some(rhs)) = (lhs, rhs) {
                let pass = (lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0);
                rows.push(IdentityRow { key: r.key, engine: r.engine, identity, lhs, rhs, pass });
            }
        };
        push("tau_h_split", m.tau_h, m.tau_h_mc_abs.zip(m.tau_h_ow_abs).map(|(a, b)| a + b));
        push("p_b_l_is_tau_h_ow", m.p_b_l, m.tau_h_ow);
        push("alpha", m.alpha, m.avg_collided_sf.map(|c| 1.0 - c / n_sf_of(&r.key)));
        push("s_l", m.s_l, m.alpha.zip(m.tau_l).map(|(a, t)| a * t));
        if r.engine == Engine::Analytic {
            push("s_h", m.s_h, m.p_c_h.zip(m.tau_h).map(|(p, t)| (1.0 - p) * t));
        }
    }
    rows
}

#[derive(Debug, Serialize)]
pub struct ManifestCell {
    pub n_sf: u32,
    pub rsf: u32,
    pub t_wifi: f64,
    pub engine: Engine,
    pub config_hash: String,
    pub runtime_s: f64,
    pub iterations: usize,
    pub from_cache: bool,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub created_unix_s: u64,
    pub command: String,
    pub spec_hash: String,
    pub spec: String,
    pub seeds: Vec<u64>,
    pub slots_per_seed: u64,
    pub files: Vec<String>,
    pub cells: Vec<ManifestCell>,
    pub failed_comparisons: usize,
    pub failed_cells: usize,
    pub total_runtime_s: f64,
}

impl Manifest {
    pub fn new(command: &str, spec: &ExperimentSpec, results: &[CellResult], files: Vec<String>, failed_comparisons: usize, total_runtime_s: f64) -> Self {
        let echo = spec.to_kv_string();
        Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            core_version: laa_core::VERSION,
            created_unix_s: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            command: command.into(),
            spec_hash: laa_core::config::sha256_hex(echo.as_bytes()),
            spec: echo,
            seeds: spec.seeds.clone(),
            slots_per_seed: spec.slots,
            files,
            cells: results
                .iter()
                .map(|r| ManifestCell {
                    n_sf: r.key.n_sf,
                    rsf: r.key.rsf,
                    t_wifi: r.key.t_wifi,
                    engine: r.engine,
                    config_hash: r.config_hash.clone(),
                    runtime_s: r.runtime_s,
                    iterations: r.iterations,
                    from_cache: r.from_cache,
                    error: r.error.clone(),
                })
                .collect(),
            failed_comparisons,
            failed_cells: results.iter().filter(|r| !r.ok()).count(),
            total_runtime_s,
        }
    }
}

/// Failed cells, one per line; empty when every cell ran.
pub fn errors_csv(results: &[CellResult]) -> String {
    let rows: Vec<String> = results
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| format!("{},{},\"{}\"", coords(&r.key), r.engine, e.replace('"', "'"))))
        .collect();
    render_csv("n_sf,rsf,t_wifi,engine,error", &rows)
}

/// Figure definitions: sub-figure file stem, selected (n_sf, rsf-choice) panels and the
/// metrics plotted.
pub struct FigureDef {
    pub name: &'static str,
    pub metrics: &'static [&'static str],
    /// One file per panel; `None` for rsf means every reference subframe on that MCOT.
    pub panels: &'static [(u32, Option<bool>)],
}

const FOUR_PANELS: &[(u32, Option<bool>)] = &[(8, Some(false)), (8, Some(true)), (10, Some(false)), (10, Some(true))];
const TWO_PANELS: &[(u32, Option<bool>)] = &[(8, None), (10, None)];

pub const FIGURES: [FigureDef; 6] = [
    FigureDef { name: "fig7", metrics: &["tau_l", "tau_h", "tau_h_ow_abs", "tau_h_mc_abs"], panels: FOUR_PANELS },
    FigureDef { name: "fig8", metrics: &["p_c_h"], panels: TWO_PANELS },
    FigureDef { name: "fig9", metrics: &["p_d"], panels: TWO_PANELS },
    FigureDef { name: "fig12", metrics: &["s_l", "s_h"], panels: FOUR_PANELS },
    FigureDef { name: "fig13", metrics: &["e_d_l", "e_d_h"], panels: FOUR_PANELS },
    FigureDef { name: "fig14", metrics: &["s_sum"], panels: FOUR_PANELS },
];

pub fn figure(name: &str) -> Option<&'static FigureDef> {
    FIGURES.iter().find(|f| f.name == name)
}

fn panel_name(fig: &FigureDef, n_sf: u32, last: Option<bool>) -> String {
    match last {
        None => format!("{}_{}ms.csv", fig.name, n_sf),
        Some(false) => format!("{}_{}ms_rsf_first.csv", fig.name, n_sf),
        Some(true) => format!("{}_{}ms_rsf_last.csv", fig.name, n_sf),
    }
}

fn metric_value(r: &CellResult, metric: &str) -> (Option<f64>, Option<f64>) {
    let Some(m) = &r.report else { return (None, None) };
    if metric == "s_sum" {
        let v = m.s_l.zip(m.s_h).map(|(a, b)| a + b);
        let ci = r.ci_halfwidth.as_ref().and_then(|c| c.s_l.zip(c.s_h)).map(|(a, b)| a + b);
        return (v, ci);
    }
    (m.get(metric), r.ci_halfwidth.as_ref().and_then(|c| c.get(metric)))
}

/// Long-format CSV text per sub-figure, plus a list of missing (panel, engine) series.
/// An empty result set yields header-only files.
pub fn emit_figure_data(results: &[CellResult], fig: &FigureDef) -> (Vec<(String, String)>, Vec<String>) {
    let mut files = Vec::new();
    let mut missing = Vec::new();
    for &(n_sf, last) in fig.panels {
        let rsf_ok = |rsf: u32| match last {
            None => true,
            Some(false) => rsf == 1,
            Some(true) => rsf == laa_core::config::last_eligible_rsf(n_sf),
        };
        let mut rows = Vec::new();
        let mut cells: Vec<&CellResult> = results.iter().filter(|r| r.key.n_sf == n_sf && rsf_ok(r.key.rsf)).collect();
        cells.sort_by(|a, b| a.key.cmp_key(&b.key).then(a.engine.cmp(&b.engine)));
        for r in &cells {
            for metric in fig.metrics {
                let (v, ci) = metric_value(r, metric);
                rows.push(format!("{},{},{},{},{}", coords(&r.key), r.engine, metric, fmt_value(v), fmt_value(ci)));
            }
        }
        let name = panel_name(fig, n_sf, last);
        if !results.is_empty() {
            for e in [Engine::Analytic, Engine::Simulation] {
                if !cells.iter().any(|r| r.engine == e && r.report.is_some()) {
                    missing.push(format!("{name}: no {e} results"));
                }
            }
        }
        files.push((name, render_csv(METRIC_HEADER, &rows)));
    }
    (files, missing)
}

/// Human-readable summary of a Table-IV style grid.
pub fn grid_text(results: &[CellResult], metric: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>5} {:>4} {:>8} {:>11} {:>14}", "n_sf", "rsf", "t_wifi", "analytic", "simulation");
    for key in unique_keys(results) {
        let (a, b) = pair(results, &key);
        let val = |r: Option<&CellResult>| {
            r.map(|r| {
                let (v, ci) = metric_value(r, metric);
                match ci {
                    Some(c) => format!("{}±{:.3}", v.map_or("NA".into(), |v| format!("{v:.3}")), c),
                    None => v.map_or("NA".into(), |v| format!("{v:.3}")),
                }
            })
            .unwrap_or_else(|| "-".into())
        };
        let _ = writeln!(s, "{:>5} {:>4} {:>8} {:>11} {:>14}", key.n_sf, key.rsf, fmt_num(key.t_wifi), val(a), val(b));
    }
    s
}

/// Value of `metric` in a report, with `s_sum` for S_L + S_H.
pub fn report_metric(m: &MetricsReport, metric: &str) -> Option<f64> {
    if metric == "s_sum" {
        return m.s_l.zip(m.s_h).map(|(a, b)| a + b);
    }
    m.get(metric)
}
