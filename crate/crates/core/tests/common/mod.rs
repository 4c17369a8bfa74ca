//! Reference implementations used as test oracles. They rebuild every chain state by
//! state from the MAC rules and solve it densely, sharing nothing with the library
//! beyond the state indexing of node H.

#![allow(dead_code)]

use laa_core::{SystemConfig, WifiState, WifiStateSpace};
use nalgebra::{DMatrix, DVector};

/// Stationary vector of a row-stochastic matrix: solve `(P^T - I) x = 0` with the last
/// equation replaced by `sum x = 1`.
pub fn dense_stationary(p: &DMatrix<f64>) -> Vec<f64> {
    let n = p.nrows();
    let mut a = p.transpose() - DMatrix::<f64>::identity(n, n);
    for c in 0..n {
        a[(n - 1, c)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let x = a.lu().solve(&b).expect("singular oracle system");
    x.iter().copied().collect()
}

/// Stationary vector from the SVD null space of `P^T - I`.
pub fn null_space_stationary(p: &DMatrix<f64>) -> Vec<f64> {
    let n = p.nrows();
    let a = p.transpose() - DMatrix::<f64>::identity(n, n);
    let svd = a.svd(false, true);
    let v_t = svd.v_t.unwrap();
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let v: Vec<f64> = v_t.row(k).iter().copied().collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// Node L's full chain: backoff states (i, k), k = 1..W_i-1, then MCOT states (i, 0^j).
pub struct LaaOracle {
    pub backoff: Vec<Vec<usize>>,
    pub mcot: Vec<Vec<usize>>,
    pub p: DMatrix<f64>,
}

pub fn laa_oracle(cfg: &SystemConfig, p_b: f64, p_d: f64) -> LaaOracle {
    let stages = cfg.m as usize + 2;
    let w = |i: usize| cfg.cw_min as usize * (1usize << i.min(cfg.m as usize));
    let m_slots = cfg.mcot_slots as usize;
    let mut n = 0;
    let mut backoff = Vec::new();
    for i in 0..stages {
        backoff.push((1..w(i)).map(|_| { n += 1; n - 1 }).collect::<Vec<_>>());
    }
    let mut mcot = Vec::new();
    for _ in 0..stages {
        mcot.push((0..m_slots).map(|_| { n += 1; n - 1 }).collect::<Vec<_>>());
    }
    let mut p = DMatrix::<f64>::zeros(n, n);
    for i in 0..stages {
        for k in 1..w(i) {
            let s = backoff[i][k - 1];
            p[(s, s)] += p_b;
            let next = if k == 1 { mcot[i][0] } else { backoff[i][k - 2] };
            p[(s, next)] += 1.0 - p_b;
        }
        for j in 0..m_slots - 1 {
            p[(mcot[i][j], mcot[i][j + 1])] = 1.0;
        }
        let end = mcot[i][m_slots - 1];
        let doubled = if i + 1 < stages { i + 1 } else { 0 };
        for (stage, q) in [(doubled, p_d), (0, 1.0 - p_d)] {
            let each = q / w(stage) as f64;
            p[(end, mcot[stage][0])] += each;
            for k in 1..w(stage) {
                p[(end, backoff[stage][k - 1])] += each;
            }
        }
    }
    LaaOracle { backoff, mcot, p }
}

/// Next states of node H from `h` in the period regime `(collide, overlap)`.
fn wifi_step(cfg: &SystemConfig, space: &WifiStateSpace, h: WifiState, collide: bool, overlap: bool) -> Vec<(usize, f64)> {
    let p_o = 1.0 / cfg.t_wifi;
    let last = cfg.m as usize + 1;
    let after_collision = |i: usize| if i < last { i + 1 } else if cfg.h_retry_reset { 0 } else { last };
    let fan = |stage: usize, q: f64| (0..space.window(stage)).map(move |k| (space.backoff(stage, k), q / space.window(stage) as f64));
    match h {
        WifiState::Backoff { stage, counter } if counter > 0 => vec![(space.backoff(stage, counter - 1), 1.0)],
        WifiState::Backoff { stage, .. } => {
            let keep = if overlap { space.overlap(stage) } else { space.backoff(stage, 0) };
            let mut out = vec![(keep, 1.0 - p_o)];
            if collide {
                out.extend(fan(after_collision(stage), p_o));
            } else {
                out.extend(fan(0, p_o));
            }
            out
        }
        WifiState::OverlapTx { stage } => {
            let mut out = vec![(space.overlap(stage), 1.0 - p_o)];
            out.extend(fan(after_collision(stage), p_o));
            out
        }
    }
}

/// Dense kernel of the simplified joint chain, assembled from the slot rules:
/// node L's move is drawn first (it freezes while node H transmits), then node H moves
/// under the regime of the period pair `(l, l')`. Row index is `(l - 1) * |S_H| + h`.
pub fn joint_oracle(cfg: &SystemConfig, p_d: f64) -> DMatrix<f64> {
    let space = WifiStateSpace::new(cfg);
    let n_h = space.len();
    let m_slots = cfg.mcot_slots as usize;
    let stages = cfg.m as usize + 2;
    let n_l = m_slots + stages;
    let w = |i: usize| space.window(i) as f64;
    let norm: f64 = (0..stages).map(|i| p_d.powi(i as i32)).sum();
    let at_end: Vec<f64> = (0..stages).map(|i| p_d.powi(i as i32) / norm).collect();

    let mut p = DMatrix::<f64>::zeros(n_l * n_h, n_l * n_h);
    for l in 1..=n_l {
        for (hi, h) in space.iter().enumerate() {
            // (l', probability, collide, overlap)
            let mut moves: Vec<(usize, f64, bool, bool)> = Vec::new();
            if l < m_slots {
                moves.push((l + 1, 1.0, true, false));
            } else if l == m_slots {
                for (i, &q) in at_end.iter().enumerate() {
                    let doubled = if i + 1 < stages { i + 1 } else { 0 };
                    for (s, r) in [(doubled, q * p_d), (0, q * (1.0 - p_d))] {
                        moves.push((1, r / w(s), true, false));
                        moves.push((m_slots + 1 + s, r * (w(s) - 1.0) / w(s), true, true));
                    }
                }
            } else {
                let stage = l - m_slots - 1;
                if h.is_transmitting() {
                    moves.push((l, 1.0, false, false));
                } else {
                    moves.push((1, 2.0 / w(stage), true, false));
                    moves.push((l, 1.0 - 2.0 / w(stage), false, false));
                }
            }
            let row = (l - 1) * n_h + hi;
            for (l2, q, collide, overlap) in moves {
                for (h2, r) in wifi_step(cfg, &space, h, collide, overlap) {
                    p[(row, (l2 - 1) * n_h + h2)] += q * r;
                }
            }
        }
    }
    p
}

/// Small deterministic configs for sweeps in tests.
pub fn small_configs() -> Vec<SystemConfig> {
    let mut out = Vec::new();
    for (w0, m, n_sf, sf, t) in [(2, 0, 2, 3, 2.0), (4, 1, 4, 5, 3.0), (2, 2, 3, 2, 5.5), (8, 0, 2, 4, 1.0)] {
        out.push(SystemConfig::new(w0, m, n_sf, sf, 1, t).unwrap());
    }
    out
}
