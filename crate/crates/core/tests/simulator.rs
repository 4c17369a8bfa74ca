use laa_core::metrics::measure_z2_assumption;
use laa_core::sim::{self, SimStats};
use laa_core::{SimConfig, SystemConfig};

fn run(system: SystemConfig, seed: u64, slots: u64) -> SimStats {
    sim::run(&SimConfig::new(system, seed, slots)).unwrap()
}

#[test]
fn silent_wifi_gives_renewal_value() {
    let system = SystemConfig::desk();
    let mut cfg = SimConfig::new(system.clone(), 11, 4_000_000);
    cfg.disable_wifi = true;
    let m = sim::measure(&sim::run(&cfg).unwrap());
    let big_m = system.mcot() as f64;
    let expect = big_m / (big_m + (system.cw_min as f64 - 1.0) / 2.0);
    let got = m.report.tau_l.unwrap();
    assert!((got - expect).abs() <= 3.0 * m.ci_halfwidth.tau_l.unwrap().max(1e-4), "{got} vs {expect}");
    assert_eq!(m.report.p_d, Some(0.0));
    assert_eq!(m.report.tau_h, Some(0.0));
    assert_eq!(m.report.p_c_h, None);
}

#[test]
fn unit_length_packets() {
    let mut system = SystemConfig::desk();
    system.t_wifi = 1.0;
    let s = run(system, 2, 500_000);
    let c = &s.total;
    assert_eq!(c.h_tx_mc_slots + c.h_tx_ow_slots, c.h_packets);
    assert_eq!(c.overlap_events, 0);
}

#[test]
fn identical_seeds_reproduce_bit_for_bit() {
    let cfg = SimConfig::new(SystemConfig::paper_preset(8, laa_core::RsfChoice::First, 54.0).unwrap(), 99, 2_000_000);
    let (a, b) = (sim::run(&cfg).unwrap(), sim::run(&cfg).unwrap());
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&sim::measure(&a)).unwrap(), serde_json::to_string(&sim::measure(&b)).unwrap());
}

#[test]
fn doubling_and_reference_subframe_are_the_same_events() {
    for rsf in [1, 3] {
        let mut system = SystemConfig::desk();
        system.rsf = rsf;
        let s = run(system, 4, 1_000_000);
        assert_eq!(s.total.doublings, s.total.sf_overlaps[rsf as usize - 1]);
        let m = sim::measure(&s);
        assert_eq!(m.report.p_d, Some(m.report.c_sf[rsf as usize - 1]));
    }
}

#[test]
fn packet_accounting_is_closed() {
    let s = run(SystemConfig::paper_preset(8, laa_core::RsfChoice::LastEligible, 104.0).unwrap(), 5, 5_000_000);
    let c = &s.total;
    assert_eq!(c.h_packets, c.h_packets_mc + c.h_packets_ow + c.overlap_events);
    assert_eq!(c.h_collided, c.h_packets_mc + c.overlap_events);
    assert_eq!(c.mcot_slots + c.ow_slots, c.slots);
    let m = sim::measure(&s).report;
    let split = m.tau_h_mc_abs.unwrap() + m.tau_h_ow_abs.unwrap();
    assert_eq!(split, m.tau_h.unwrap());
}

#[test]
fn delay_estimators_agree() {
    let s = run(SystemConfig::desk(), 8, 10_000_000);
    let m = sim::measure(&s).report;
    let big_m = 20.0;
    let tau_l = m.tau_l.unwrap();
    let formula = big_m * (1.0 - tau_l) / tau_l;
    assert!((m.e_d_l.unwrap() - formula).abs() / formula < 0.01, "{:?} vs {formula}", m.e_d_l);
    let tau_h = m.tau_h.unwrap();
    let formula = 3.0 * (1.0 - tau_h) / tau_h;
    assert!((m.e_d_h.unwrap() - formula).abs() / formula < 0.01, "{:?} vs {formula}", m.e_d_h);
}

#[test]
fn merged_runs_pool_counters() {
    let a = run(SystemConfig::desk(), 1, 200_000);
    let b = run(SystemConfig::desk(), 2, 200_000);
    let m = SimStats::merged([&a, &b].into_iter()).unwrap();
    assert_eq!(m.total.slots, 400_000);
    assert_eq!(m.batches.len(), 40);
    assert_eq!(m.seeds, vec![1, 2]);
}

#[test]
fn overlap_split_is_near_half_for_short_packets() {
    let s = run(SystemConfig::paper_preset(8, laa_core::RsfChoice::First, 54.0).unwrap(), 3, 20_000_000);
    let z2 = measure_z2_assumption(&s).unwrap();
    assert!((z2 - 0.5).abs() < 0.02, "z2 = {z2}");
}
