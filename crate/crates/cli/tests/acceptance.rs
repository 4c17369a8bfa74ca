//! Acceptance suite. Every criterion prints one `criterion N ...: PASS|FAIL` line with
//! the measured numbers, then asserts.
//!
//! Full-scale cells are solved once per process and shared between criteria.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use laa_cli::report::ComparisonRow;
use laa_cli::spec::{CellKey, ExperimentSpec, Mode, TolProfile};
use laa_core::jmc::{build_outer_transitions, TransitionCase};
use laa_core::sim;
use laa_core::{
    fixed_point, solve_closed_form, FixedPointOptions, InnerMatrices, JointChain, LaaStateIndex, MetricsReport, Regime,
    RsfChoice, SimConfig, SolverOptions, SystemConfig, WifiStateSpace,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const T_GRID: [f64; 5] = [4.0, 54.0, 104.0, 154.0, 204.0];
const SIM_SLOTS: u64 = 100_000_000;
const SIM_SEED: u64 = 20_240_601;

fn verdict(n: u32, name: &str, ok: bool, detail: &str) {
    println!("criterion {n} ({name}): {}  {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} ({name}) failed: {detail}");
}

fn rsf_label(rsf: RsfChoice) -> &'static str {
    match rsf {
        RsfChoice::First => "first",
        RsfChoice::LastEligible => "last",
    }
}

/// Analytic outcome of one full-scale cell.
struct AnalyticCell {
    report: MetricsReport,
    /// |p_b - tau_H^OW|, |p_d - C_sf(rsf)|, |tau_L closed form - MCOT mass of pi|.
    consistency: [f64; 3],
}

struct SimCell {
    report: MetricsReport,
    ci: MetricsReport,
}

type Key = (u32, bool, u64);

fn paper(n_sf: u32, rsf: RsfChoice, t: f64) -> SystemConfig {
    SystemConfig::paper_preset(n_sf, rsf, t).unwrap()
}

fn consistency(cfg: &SystemConfig, opts: &FixedPointOptions) -> (MetricsReport, [f64; 3]) {
    let fp = fixed_point(cfg, opts).unwrap();
    let r = &fp.report;
    let d_pb = (fp.solution.p_b_l - r.tau_h_ow.unwrap()).abs();
    let d_pd = (fp.solution.p_d - r.c_sf[cfg.rsf as usize - 1]).abs();
    let mcot_mass: f64 = (1..=cfg.mcot_slots as usize)
        .map(|j| fp.dist.block_mass(LaaStateIndex::mcot_slot(j)).unwrap())
        .sum();
    let d_tau = (r.diagnostics.tau_l_closed_form.unwrap() - mcot_mass).abs();
    (fp.report.clone(), [d_pb, d_pd, d_tau])
}

fn analytic(n_sf: u32, rsf: RsfChoice, t: f64) -> Arc<AnalyticCell> {
    static CELLS: OnceLock<Mutex<HashMap<Key, Arc<AnalyticCell>>>> = OnceLock::new();
    let mut cells = CELLS.get_or_init(Default::default).lock().unwrap_or_else(|e| e.into_inner());
    cells
        .entry((n_sf, rsf == RsfChoice::First, t.to_bits()))
        .or_insert_with(|| {
            let opts = FixedPointOptions { damping: 1.0, tol: 1e-10, ..Default::default() };
            let (report, consistency) = consistency(&paper(n_sf, rsf, t), &opts);
            Arc::new(AnalyticCell { report, consistency })
        })
        .clone()
}

fn simulated(n_sf: u32, rsf: RsfChoice, t: f64) -> Arc<SimCell> {
    static CELLS: OnceLock<Mutex<HashMap<Key, Arc<SimCell>>>> = OnceLock::new();
    let mut cells = CELLS.get_or_init(Default::default).lock().unwrap_or_else(|e| e.into_inner());
    cells
        .entry((n_sf, rsf == RsfChoice::First, t.to_bits()))
        .or_insert_with(|| {
            let stats = sim::run(&SimConfig::new(paper(n_sf, rsf, t), SIM_SEED, SIM_SLOTS)).unwrap();
            let m = sim::measure(&stats);
            Arc::new(SimCell { report: m.report, ci: m.ci_halfwidth })
        })
        .clone()
}

#[test]
fn criterion_1_closed_form_matches_explicit_chain() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let cases = 24;
    for _ in 0..cases {
        let w0 = [2u32, 4, 8][rng.random_range(0..3)];
        let m = rng.random_range(0..=2u32);
        let mut cfg = SystemConfig::new(w0, m, 1, 1, 1, 2.0).unwrap();
        cfg.mcot_slots = rng.random_range(4..=20u32);
        let (p_b, p_d) = (rng.random_range(0.0..=0.9), rng.random_range(0.0..=0.9));
        let sol = solve_closed_form(&cfg, p_b, p_d).unwrap();
        let o = common::laa_oracle(&cfg, p_b, p_d);
        let pi = common::dense_stationary(&o.p);
        for i in 0..cfg.stages() {
            for (k, &s) in o.backoff[i].iter().enumerate() {
                worst = worst.max((pi[s] - sol.b(i, k + 1)).abs());
            }
            for &s in &o.mcot[i] {
                worst = worst.max((pi[s] - sol.b_tx[i]).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        1,
        "closed form vs explicit chain",
        worst <= 1e-10 && secs < 10.0,
        &format!("{cases} configs, max |err| = {worst:.2e}, {secs:.2} s"),
    );
}

#[test]
fn criterion_2_power_iteration_matches_null_space() {
    let start = Instant::now();
    let cfg = SystemConfig::new(4, 1, 4, 5, 1, 3.0).unwrap();
    assert_eq!(cfg.mcot_slots, 20);
    let (p_b, p_d) = (0.2, 0.35);
    let chain = JointChain::new(&cfg, &solve_closed_form(&cfg, p_b, p_d).unwrap()).unwrap();
    let pi = chain.stationary(&SolverOptions::power(1e-14)).unwrap();
    let oracle = common::null_space_stationary(&common::joint_oracle(&cfg, p_d));
    let l1: f64 = pi.pi.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).sum();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        2,
        "joint chain power iteration vs null space",
        l1 <= 1e-8 && secs < 30.0,
        &format!("{} states, L1 = {l1:.2e}, {secs:.2} s", pi.pi.len()),
    );
}

#[test]
fn criterion_3_structural_invariants() {
    let strategy = (1u32..=8, 0u32..=2, 1u32..=4, 1u32..=5, 1.0f64..40.0, any::<bool>(), 0.0f64..0.95, 0.0f64..=1.0);
    let mut runner = TestRunner::new(Config { cases: 64, failure_persistence: None, ..Config::default() });
    let worst = Mutex::new([0.0f64; 3]);
    let outcome = runner.run(&strategy, |(w0, m, n_sf, sf, t, reset, p_b, p_d)| {
        let mut cfg = SystemConfig::new(w0.max(2), m, n_sf, sf, 1, t).unwrap();
        cfg.h_retry_reset = reset;
        let inner = InnerMatrices::new(&cfg);
        let inner_defect = Regime::ALL.iter().map(|&r| inner.get(r).max_row_defect()).fold(0.0, f64::max);
        let sol = solve_closed_form(&cfg, p_b, p_d).unwrap();
        let chain = JointChain::new(&cfg, &sol).unwrap();
        let kernel_defect = chain.max_kernel_row_defect().max(chain.max_outer_defect());
        let outer = build_outer_transitions(&cfg, &sol).unwrap();
        let n_h = WifiStateSpace::new(&cfg).len();
        let mut diag_defect: f64 = 0.0;
        for stage in 0..cfg.stages() {
            let l = LaaStateIndex::backoff(&cfg, stage);
            let from: Vec<_> = outer
                .iter()
                .filter(|t| t.from_l == l && matches!(t.case, TransitionCase::BackoffToMcot | TransitionCase::BackoffStay))
                .collect();
            prop_assert_eq!(from.len(), 2);
            for h in 0..n_h {
                diag_defect = diag_defect.max((from.iter().map(|t| t.diag.at(h)).sum::<f64>() - 1.0).abs());
            }
        }
        let mut w = worst.lock().unwrap();
        w[0] = w[0].max(inner_defect);
        w[1] = w[1].max(kernel_defect);
        w[2] = w[2].max(diag_defect);
        prop_assert!(inner_defect <= 1e-12 && kernel_defect <= 1e-12 && diag_defect <= 1e-12);
        Ok(())
    });
    let w = worst.into_inner().unwrap();
    verdict(
        3,
        "structural invariants",
        outcome.is_ok(),
        &format!(
            "64 random configs, max row defect inner {:.1e} joint {:.1e}, diagonal completeness {:.1e}{}",
            w[0],
            w[1],
            w[2],
            outcome.err().map(|e| format!(", {e}")).unwrap_or_default()
        ),
    );
}

#[test]
fn criterion_4_fixed_point_consistency() {
    let opts = FixedPointOptions { tol: 1e-10, ..Default::default() };
    let (_, desk) = consistency(&SystemConfig::desk(), &opts);
    let mut rows = vec![("desk".to_string(), desk)];
    for rsf in [RsfChoice::First, RsfChoice::LastEligible] {
        rows.push((format!("8ms/{}/T54", rsf_label(rsf)), analytic(8, rsf, 54.0).consistency));
    }
    let ok = rows.iter().all(|(_, c)| c[0] <= 1e-8 && c[1] <= 1e-8 && c[2] <= 1e-6);
    let detail: Vec<String> = rows
        .iter()
        .map(|(n, c)| format!("{n}: {:.1e}/{:.1e}/{:.1e}", c[0], c[1], c[2]))
        .collect();
    verdict(4, "fixed-point consistency", ok, &detail.join("; "));
}

#[test]
fn criterion_5_collided_subframes_table() {
    let expected_analytic = [
        (RsfChoice::First, [2.83, 3.84, 4.48, 4.93, 5.24]),
        (RsfChoice::LastEligible, [2.82, 3.86, 4.57, 5.08, 5.41]),
    ];
    let expected_sim = [
        (RsfChoice::First, [2.83, 3.86, 4.57, 5.08, 5.43]),
        (RsfChoice::LastEligible, [2.83, 3.90, 4.72, 5.32, 5.68]),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for ((rsf, ea), (_, es)) in expected_analytic.iter().zip(&expected_sim) {
        for (i, &t) in T_GRID.iter().enumerate() {
            let cell = analytic(8, *rsf, t);
            let a = cell.report.avg_collided_sf.unwrap();
            // Subframe-start estimator without in-flight packets, reported alongside.
            let starts: f64 = cell.report.diagnostics.c_sf_starts.iter().sum();
            let s = simulated(8, *rsf, t).report.avg_collided_sf.unwrap();
            let good = (a - ea[i]).abs() <= 0.05 && (s - es[i]).abs() <= 0.15;
            ok &= good;
            detail.push(format!(
                "{}/T{t}: analytic {a:.3} ({:.2}, starts-only {starts:.3}) sim {s:.3} ({:.2}){}",
                rsf_label(*rsf),
                ea[i],
                es[i],
                if good { "" } else { " <-" }
            ));
        }
    }
    verdict(5, "collided subframes per MCOT, 8 ms", ok, &detail.join("; "));
}

#[test]
fn criterion_6_overlap_fraction() {
    let mut ok = true;
    let mut detail = Vec::new();
    for n_sf in [8, 10] {
        for rsf in [RsfChoice::First, RsfChoice::LastEligible] {
            for t in T_GRID {
                let z2 = simulated(n_sf, rsf, t).report.z2.unwrap();
                let good = if t <= 154.0 {
                    (0.48..=0.52).contains(&z2)
                } else if n_sf == 8 {
                    z2 < 0.47
                } else {
                    true
                };
                ok &= good;
                detail.push(format!("{n_sf}ms/{}/T{t}: {z2:.3}{}", rsf_label(rsf), if good { "" } else { " <-" }));
            }
        }
    }
    verdict(6, "simulated overlap fraction z2", ok, &detail.join("; "));
}

#[test]
fn criterion_7_trends() {
    let mut failures = Vec::new();
    let get = |r: &MetricsReport, name: &str| r.get(name).unwrap();
    for n_sf in [8, 10] {
        let reports: Vec<[MetricsReport; 2]> = T_GRID
            .iter()
            .map(|&t| {
                [analytic(n_sf, RsfChoice::First, t).report.clone(), analytic(n_sf, RsfChoice::LastEligible, t).report.clone()]
            })
            .collect();
        for (side, rsf) in [RsfChoice::First, RsfChoice::LastEligible].into_iter().enumerate() {
            for (metric, increasing) in [("tau_l", false), ("tau_h", true), ("p_c_h", false), ("p_d", true)] {
                for w in reports.windows(2) {
                    let (a, b) = (get(&w[0][side], metric), get(&w[1][side], metric));
                    if (increasing && b <= a) || (!increasing && b >= a) {
                        failures.push(format!("{n_sf}ms/{}: {metric} {a:.5} -> {b:.5}", rsf_label(rsf)));
                    }
                }
            }
        }
        for (i, r) in reports.iter().enumerate() {
            let t = T_GRID[i];
            let [first, last] = r;
            if get(last, "p_c_h") >= get(first, "p_c_h") {
                failures.push(format!("{n_sf}ms/T{t}: p_c_h not lowered by the last RSF"));
            }
            if get(last, "p_d") <= get(first, "p_d") {
                failures.push(format!("{n_sf}ms/T{t}: p_d not raised by the last RSF"));
            }
            if get(last, "e_d_l") <= get(first, "e_d_l") {
                failures.push(format!("{n_sf}ms/T{t}: E[D_L] not larger under the last RSF"));
            }
        }
    }
    let detail = if failures.is_empty() { "all 2 x 2 x 5 cells monotone".to_string() } else { failures.join("; ") };
    verdict(7, "trends in T_WiFi and RSF", failures.is_empty(), &detail);
}

#[test]
fn criterion_8_analysis_matches_simulation() {
    let mut checked = 0;
    let mut failures = Vec::new();
    for t in [4.0, 54.0, 204.0] {
        let a = analytic(8, RsfChoice::First, t);
        let s = simulated(8, RsfChoice::First, t);
        let key = CellKey { n_sf: 8, rsf: 1, t_wifi: t };
        let (af, sf, cf) = (a.report.flatten(), s.report.flatten(), s.ci.flatten());
        for (i, (name, av)) in af.iter().enumerate() {
            let row = ComparisonRow::new(key, name, *av, sf[i].1, cf[i].1, &TolProfile::PAPER);
            match row.pass {
                Some(true) => checked += 1,
                Some(false) => failures.push(format!(
                    "T{t} {name}: analytic {:.4} sim {:.4} ± {:.4} (tol {:.4})",
                    av.unwrap(),
                    sf[i].1.unwrap(),
                    cf[i].1.unwrap_or(f64::NAN),
                    row.tolerance.unwrap()
                )),
                None if av.is_none() && sf[i].1.is_none() => {}
                None => failures.push(format!("T{t} {name}: only one engine reports it")),
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{checked} metric comparisons within tolerance")
    } else {
        format!("{checked} within tolerance; {}", failures.join("; "))
    };
    verdict(8, "analysis vs simulation, 8 ms RSF 1", failures.is_empty(), &detail);
}

#[test]
fn criterion_9_csv_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut identical = true;
    let mut compared = 0;
    let specs = [
        "mode = compare\ncw_min = 4\nm = 1\nn_sf = 4\nsf_slot = 5\nrsf = 1\nt_wifi = 3,5.5\nseeds = 3,4\nslots = 400000\n",
        "mode = simulate\nn_sf = 8\nrsf = first\nt_wifi = 54\nseeds = 11\nslots = 2000000\n",
    ];
    for (i, text) in specs.iter().enumerate() {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let mut spec = ExperimentSpec::parse(text).unwrap();
            spec.out = dir.path().join(format!("spec{i}_run{run}"));
            let outcome = laa_cli::execute("acceptance", &spec, &Default::default()).unwrap();
            assert!(outcome.results.iter().all(|r| r.ok()));
            assert!(matches!(spec.mode, Mode::Compare | Mode::Simulate));
            outputs.push(spec.out.clone());
        }
        for (_, file) in laa_cli::report::FAMILIES {
            let a = std::fs::read(outputs[0].join(file)).unwrap();
            let b = std::fs::read(outputs[1].join(file)).unwrap();
            identical &= a == b;
            compared += 1;
        }
    }
    verdict(9, "byte-identical metric CSVs", identical, &format!("{compared} CSV pairs compared"));
}
