//! Simplified joint Markov chain (SJMC) of node L and node H.
//!
//! The joint state is `(l, h)` with `l` in the simplified node-L chain (MCOT slots
//! `1..=M`, backoff stages `M+1..=M+m+2`) and `h` in node H's state space. The joint
//! kernel is never materialized: it is a list of outer transitions `l → l'`, each
//! carrying a diagonal `D^{l,l'}` (scalar or per-h) and the inner regime matrix applied
//! to the scaled `l`-block.
//!
//! Three stationary solvers are provided:
//!
//! * [`Solver::Power`] iterates `π ← π P^Z` from the uniform vector.
//! * [`Solver::Dense`] solves `π (P^Z - I) = 0, Σπ = 1` by LU; only for small chains.
//! * [`Solver::Regenerative`] iterates the chain embedded at MCOT starts. The MCOT
//!   blocks follow from `π^1` by `P_MC` powers, and each backoff block solves
//!   `x = y + x D_5 P_OW` in closed form by a backward sweep over counters, so one
//!   iteration costs `M` sparse products plus `O(|S_H|)` per backoff stage.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::{LaaStateIndex, SystemConfig};
use crate::error::{Error, Result};
use crate::laa_chain::LaaChainSolution;
use crate::state::{WifiState, WifiStateSpace};
use crate::wifi_chain::{collision_stage, InnerMatrices, Regime};

/// Which of the five outer transition cases a transition belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransitionCase {
    /// MCOT slot l → l + 1.
    WithinMcot,
    /// Last MCOT slot → a new MCOT (backoff counter drawn as zero).
    McotToMcot,
    /// Last MCOT slot → backoff stage.
    McotToBackoff,
    /// Backoff stage → MCOT slot 1.
    BackoffToMcot,
    /// Backoff stage → itself.
    BackoffStay,
}

/// Diagonal of `D^{l,l'}`.
#[derive(Debug, Clone, PartialEq)]
pub enum Diag {
    Scalar(f64),
    PerState(Vec<f64>),
}

impl Diag {
    pub fn at(&self, h: usize) -> f64 {
        match self {
            Diag::Scalar(s) => *s,
            Diag::PerState(v) => v[h],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterTransition {
    pub from_l: LaaStateIndex,
    pub to_l: LaaStateIndex,
    pub case: TransitionCase,
    pub diag: Diag,
    pub inner: Regime,
}

/// Outer transitions of the simplified node-L chain for the doubling probability in `sol`.
pub fn build_outer_transitions(
    cfg: &SystemConfig,
    sol: &LaaChainSolution,
) -> Result<Vec<OuterTransition>> {
    cfg.validate()?;
    if !sol.matches(cfg) {
        return Err(Error::InvalidArgument(
            "node L solution was computed for a different configuration".into(),
        ));
    }
    let space = WifiStateSpace::new(cfg);
    let m_slots = cfg.mcot();
    let last = cfg.stages() - 1;
    let p_d = sol.p_d;
    let ps = sol.stage_occupancy_at_mcot_end();
    let w = |i: usize| cfg.window(i) as f64;

    let mut out = Vec::with_capacity(m_slots + 3 * cfg.stages());
    for l in 1..m_slots {
        out.push(OuterTransition {
            from_l: LaaStateIndex(l),
            to_l: LaaStateIndex(l + 1),
            case: TransitionCase::WithinMcot,
            diag: Diag::Scalar(1.0),
            inner: Regime::Mc,
        });
    }

    let to_stage_zero: f64 = ps[..last].iter().map(|p| p * (1.0 - p_d)).sum::<f64>() + ps[last];
    let restart: f64 =
        to_stage_zero / w(0) + (0..last).map(|i| ps[i] * p_d / w(i + 1)).sum::<f64>();
    let mcot_end = LaaStateIndex(m_slots);
    out.push(OuterTransition {
        from_l: mcot_end,
        to_l: LaaStateIndex(1),
        case: TransitionCase::McotToMcot,
        diag: Diag::Scalar(restart),
        inner: Regime::Mc,
    });
    for j in 0..cfg.stages() {
        let p = if j == 0 {
            to_stage_zero * (w(0) - 1.0) / w(0)
        } else {
            ps[j - 1] * p_d * (w(j) - 1.0) / w(j)
        };
        out.push(OuterTransition {
            from_l: mcot_end,
            to_l: LaaStateIndex::backoff(cfg, j),
            case: TransitionCase::McotToBackoff,
            diag: Diag::Scalar(p),
            inner: Regime::Ol,
        });
    }

    let transmitting = space.transmit_mask();
    for i in 0..cfg.stages() {
        let ratio = sol.bc_one_ratio(i)?;
        let go: Vec<f64> = transmitting.iter().map(|&tx| if tx { 0.0 } else { ratio }).collect();
        let stay: Vec<f64> = go.iter().map(|g| 1.0 - g).collect();
        let l = LaaStateIndex::backoff(cfg, i);
        // Only non-transmitting rows carry mass here, and those rows are identical in
        // every regime, so the regime tag of this case does not affect the kernel.
        out.push(OuterTransition {
            from_l: l,
            to_l: LaaStateIndex(1),
            case: TransitionCase::BackoffToMcot,
            diag: Diag::PerState(go),
            inner: Regime::Mc,
        });
        out.push(OuterTransition {
            from_l: l,
            to_l: l,
            case: TransitionCase::BackoffStay,
            diag: Diag::PerState(stay),
            inner: Regime::Ow,
        });
    }
    Ok(out)
}

/// The assembled joint chain: configuration, node-H state space, inner matrices and
/// outer transitions for one value of `p_d`.
#[derive(Debug, Clone)]
pub struct JointChain {
    pub cfg: SystemConfig,
    pub space: WifiStateSpace,
    pub inner: InnerMatrices,
    pub transitions: Vec<OuterTransition>,
    pub p_d: f64,
}

impl JointChain {
    pub fn new(cfg: &SystemConfig, sol: &LaaChainSolution) -> Result<Self> {
        let transitions = build_outer_transitions(cfg, sol)?;
        Ok(JointChain {
            cfg: cfg.clone(),
            space: WifiStateSpace::new(cfg),
            inner: InnerMatrices::new(cfg),
            transitions,
            p_d: sol.p_d,
        })
    }

    /// Reuses already-built inner matrices; only the outer transitions depend on `sol`.
    pub fn with_inner(cfg: &SystemConfig, sol: &LaaChainSolution, inner: InnerMatrices) -> Result<Self> {
        let transitions = build_outer_transitions(cfg, sol)?;
        Ok(JointChain { cfg: cfg.clone(), space: WifiStateSpace::new(cfg), inner, transitions, p_d: sol.p_d })
    }

    pub fn n_l(&self) -> usize {
        self.cfg.laa_states()
    }

    pub fn n_h(&self) -> usize {
        self.space.len()
    }

    pub fn n_states(&self) -> usize {
        self.n_l() * self.n_h()
    }

    /// `out = π · P^Z`.
    pub fn apply(&self, pi: &[f64], out: &mut [f64]) {
        let n_h = self.n_h();
        out.iter_mut().for_each(|x| *x = 0.0);
        for t in &self.transitions {
            let src = &pi[t.from_l.block() * n_h..][..n_h];
            let dst = &mut out[t.to_l.block() * n_h..][..n_h];
            let p = &self.inner.get(t.inner).matrix;
            match &t.diag {
                Diag::Scalar(s) => p.left_mul_scaled_add(src, *s, dst),
                Diag::PerState(d) => p.left_mul_diag_add(src, d, dst),
            }
        }
    }

    /// Largest |Σ_{l',h'} D^{l,l'}(h) P(h,h') - 1| over all joint states.
    pub fn max_kernel_row_defect(&self) -> f64 {
        let n_h = self.n_h();
        let row_sums: Vec<Vec<f64>> = Regime::ALL
            .iter()
            .map(|&r| {
                let m = &self.inner.get(r).matrix;
                (0..n_h).map(|h| m.row_sum(h)).collect()
            })
            .collect();
        let regime_idx = |r: Regime| Regime::ALL.iter().position(|&x| x == r).unwrap();
        let mut acc = vec![0.0; self.n_l() * n_h];
        for t in &self.transitions {
            let sums = &row_sums[regime_idx(t.inner)];
            let base = t.from_l.block() * n_h;
            for h in 0..n_h {
                acc[base + h] += t.diag.at(h) * sums[h];
            }
        }
        acc.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Largest |Σ_{l'} D^{l,l'}(h) - 1|: every outer row is exhaustive for every h.
    pub fn max_outer_defect(&self) -> f64 {
        let n_h = self.n_h();
        let mut acc = vec![0.0; self.n_l() * n_h];
        for t in &self.transitions {
            let base = t.from_l.block() * n_h;
            for h in 0..n_h {
                acc[base + h] += t.diag.at(h);
            }
        }
        acc.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Dense `P^Z` (row-stochastic), joint index `block(l) * |S_H| + h`.
    pub fn dense_kernel(&self) -> DMatrix<f64> {
        let n_h = self.n_h();
        let n = self.n_states();
        let mut p = DMatrix::<f64>::zeros(n, n);
        for t in &self.transitions {
            let m = &self.inner.get(t.inner).matrix;
            let (fb, tb) = (t.from_l.block() * n_h, t.to_l.block() * n_h);
            for h in 0..n_h {
                let d = t.diag.at(h);
                if d == 0.0 {
                    continue;
                }
                for (h2, v) in m.row(h) {
                    p[(fb + h, tb + h2)] += d * v;
                }
            }
        }
        p
    }

    /// ||π P^Z - π||_1.
    pub fn residual(&self, pi: &[f64]) -> f64 {
        let mut out = vec![0.0; pi.len()];
        self.apply(pi, &mut out);
        out.iter().zip(pi).map(|(a, b)| (a - b).abs()).sum()
    }

    pub fn stationary(&self, opts: &SolverOptions) -> Result<JointDistribution> {
        self.stationary_from(opts, None)
    }

    /// Like [`JointChain::stationary`], warm-starting from `start` when given. For the
    /// regenerative solver `start` may be either a full joint vector or an MCOT-slot-1
    /// block.
    pub fn stationary_from(&self, opts: &SolverOptions, start: Option<&[f64]>) -> Result<JointDistribution> {
        match opts.solver {
            Solver::Power => self.solve_power(opts, start),
            Solver::Dense => self.solve_dense(opts),
            Solver::Regenerative => self.solve_regenerative(opts, start),
        }
    }

    fn finish(&self, mut pi: Vec<f64>, iterations: usize, history: Vec<f64>) -> JointDistribution {
        pi.iter_mut().for_each(|x| *x = x.max(0.0));
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|x| *x /= total);
        let residual = self.residual(&pi);
        JointDistribution { pi, n_l: self.n_l(), n_h: self.n_h(), residual, iterations, history }
    }

    fn solve_power(&self, opts: &SolverOptions, start: Option<&[f64]>) -> Result<JointDistribution> {
        let n = self.n_states();
        let mut pi = match start {
            Some(s) if s.len() == n => s.to_vec(),
            _ => vec![1.0 / n as f64; n],
        };
        let mut next = vec![0.0; n];
        let mut history = Vec::new();
        for it in 1..=opts.max_iters {
            self.apply(&pi, &mut next);
            if opts.lazy {
                next.iter_mut().zip(&pi).for_each(|(a, b)| *a = 0.5 * (*a + b));
            }
            let total: f64 = next.iter().sum();
            next.iter_mut().for_each(|x| *x /= total);
            let delta: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
            history.push(delta);
            std::mem::swap(&mut pi, &mut next);
            if delta <= opts.tol {
                return Ok(self.finish(pi, it, history));
            }
        }
        Err(Error::NotConverged { iterations: opts.max_iters, residual: *history.last().unwrap_or(&f64::NAN) })
    }

    fn solve_dense(&self, opts: &SolverOptions) -> Result<JointDistribution> {
        let n = self.n_states();
        if n > opts.dense_cap {
            return Err(Error::DenseCapExceeded { states: n, cap: opts.dense_cap });
        }
        let p = self.dense_kernel();
        // π (P - I) = 0  ⇔  (P - I)^T π^T = 0; the last equation is replaced by Σπ = 1.
        let mut a = p.transpose() - DMatrix::<f64>::identity(n, n);
        for c in 0..n {
            a[(n - 1, c)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(n);
        b[n - 1] = 1.0;
        let x = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Singular("joint kernel has no unique stationary vector".into()))?;
        Ok(self.finish(x.iter().copied().collect(), 1, Vec::new()))
    }

    fn regen_parts(&self) -> RegenParts {
        let mut restart = 0.0;
        let mut entry = vec![0.0; self.cfg.stages()];
        let mut leave = vec![0.0; self.cfg.stages()];
        for t in &self.transitions {
            match (t.case, &t.diag) {
                (TransitionCase::McotToMcot, Diag::Scalar(s)) => restart = *s,
                (TransitionCase::McotToBackoff, Diag::Scalar(s)) => {
                    entry[t.to_l.stage(&self.cfg).unwrap()] = *s;
                }
                (TransitionCase::BackoffToMcot, Diag::PerState(d)) => {
                    let i = t.from_l.stage(&self.cfg).unwrap();
                    // Transmitting states carry 0, every other state the exit probability.
                    leave[i] = d.iter().copied().fold(0.0, f64::max);
                }
                _ => {}
            }
        }
        RegenParts { restart, entry, leave }
    }

    /// Pushes an MCOT-slot-1 block through one MCOT and OW cycle. Returns the next
    /// slot-1 block (unnormalized), the last MCOT block and the backoff blocks.
    fn regen_cycle(&self, parts: &RegenParts, v: &[f64], keep: bool) -> RegenCycle {
        let n_h = self.n_h();
        let mc = &self.inner.mc.matrix;
        let mut mcot_blocks = Vec::new();
        let mut cur = v.to_vec();
        let mut next = vec![0.0; n_h];
        if keep {
            mcot_blocks.push(cur.clone());
        }
        for _ in 1..self.cfg.mcot() {
            next.iter_mut().for_each(|x| *x = 0.0);
            mc.left_mul_add(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
            if keep {
                mcot_blocks.push(cur.clone());
            }
        }
        let last = cur;
        let mut into_ow = vec![0.0; n_h];
        self.inner.ol.matrix.left_mul_add(&last, &mut into_ow);

        let mut w: Vec<f64> = last.iter().map(|x| x * parts.restart).collect();
        let mut backoff_blocks = Vec::with_capacity(self.cfg.stages());
        for (&c, &q) in parts.entry.iter().zip(&parts.leave) {
            let y: Vec<f64> = into_ow.iter().map(|x| x * c).collect();
            let x = ow_occupancy(&self.cfg, &self.space, q, &y);
            for (h, st) in self.space.iter().enumerate() {
                if !st.is_transmitting() {
                    w[h] += x[h] * q;
                }
            }
            backoff_blocks.push(x);
        }
        let mut v_next = vec![0.0; n_h];
        mc.left_mul_add(&w, &mut v_next);
        RegenCycle { v_next, mcot_blocks, backoff_blocks }
    }

    fn solve_regenerative(&self, opts: &SolverOptions, start: Option<&[f64]>) -> Result<JointDistribution> {
        let n_h = self.n_h();
        let parts = self.regen_parts();
        let mut v = match start {
            Some(s) if s.len() == n_h => s.to_vec(),
            Some(s) if s.len() == self.n_states() => s[..n_h].to_vec(),
            _ => {
                // Node H somewhere in stage 0 backoff.
                let mut v = vec![0.0; n_h];
                let w0 = self.space.window(0);
                for k in 0..w0 {
                    v[self.space.backoff(0, k)] = 1.0 / w0 as f64;
                }
                v
            }
        };
        normalize(&mut v);
        if v.iter().all(|&x| x == 0.0) {
            return Err(Error::InvalidArgument("warm start has no mass".into()));
        }
        let mut history = Vec::new();
        let mut converged = false;
        let mut iterations = 0;
        for it in 1..=opts.max_iters {
            iterations = it;
            let mut nv = self.regen_cycle(&parts, &v, false).v_next;
            normalize(&mut nv);
            if opts.lazy {
                nv.iter_mut().zip(&v).for_each(|(a, b)| *a = 0.5 * (*a + b));
            }
            let delta: f64 = nv.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
            history.push(delta);
            v = nv;
            // The reconstructed π is checked against `tol` below; the embedded vector only
            // has to settle to roundoff.
            if delta <= (opts.tol * 1e-2).max(1e-14) {
                converged = true;
                break;
            }
        }
        let cycle = self.regen_cycle(&parts, &v, true);
        let mut pi = Vec::with_capacity(self.n_states());
        for b in cycle.mcot_blocks {
            pi.extend(b);
        }
        for b in cycle.backoff_blocks {
            pi.extend(b);
        }
        let dist = self.finish(pi, iterations, history);
        if !converged || dist.residual > opts.tol {
            return Err(Error::NotConverged { iterations, residual: dist.residual });
        }
        Ok(dist)
    }
}

struct RegenParts {
    restart: f64,
    entry: Vec<f64>,
    leave: Vec<f64>,
}

struct RegenCycle {
    v_next: Vec<f64>,
    mcot_blocks: Vec<Vec<f64>>,
    backoff_blocks: Vec<Vec<f64>>,
}

fn normalize(v: &mut [f64]) {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|x| *x /= total);
    }
}

/// Expected occupancy of node H's states during an OW period at one backoff stage of
/// node L, i.e. the solution of `x = y + x D P_OW` where `D` is 1 on transmitting
/// states and `1 - leave` elsewhere (node L leaves the stage with probability `leave`
/// on every idle slot).
///
/// Completions inside the OW period fan out to stage 0 (success), while overlapping
/// packets complete as collisions. Inflow into stage s ≥ 1 therefore comes only from
/// overlap states, which are fed by `y` alone, and the stage-0 fan-out solves a scalar
/// equation.
pub fn ow_occupancy(cfg: &SystemConfig, space: &WifiStateSpace, leave: f64, y: &[f64]) -> Vec<f64> {
    let n = space.len();
    let stages = space.stages();
    let p_o = cfg.p_o();
    let surv = 1.0 - leave;
    let mut x = vec![0.0; n];

    let mut fan = vec![0.0; stages];
    for s in 0..stages {
        let yv = y[space.overlap(s)];
        x[space.overlap(s)] = yv / p_o;
        fan[collision_stage(cfg, s)] += yv;
    }

    // Backward sweep over one stage; returns the mass entering the transmit state.
    let sweep = |s: usize, fan_s: f64, x: &mut [f64]| -> f64 {
        let w = space.window(s);
        let each = fan_s / w as f64;
        let mut carry = 0.0;
        for k in (1..w).rev() {
            let idx = space.backoff(s, k);
            let v = y[idx] + each + surv * carry;
            x[idx] = v;
            carry = v;
        }
        let enter = y[space.backoff(s, 0)] + each + surv * carry;
        x[space.backoff(s, 0)] = enter / p_o;
        enter
    };

    let mut successes = 0.0;
    for s in 1..stages {
        successes += sweep(s, fan[s], &mut x);
    }
    // Stage 0 is linear in its own fan-out: enter_0 = enter_0^y + fan_0 * beta.
    let enter_y = sweep(0, 0.0, &mut x);
    let w0 = space.window(0);
    let beta = (0..w0).map(|k| surv.powi(k as i32)).sum::<f64>() / w0 as f64;
    let fan0 = if beta < 1.0 { (fan[0] + successes + enter_y) / (1.0 - beta) } else { 0.0 };
    sweep(0, fan0, &mut x);
    x
}

/// Solver selection for [`JointChain::stationary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Power,
    Dense,
    Regenerative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub solver: Solver,
    /// L1 tolerance on successive iterates (power) or on the final residual (regenerative).
    pub tol: f64,
    pub max_iters: usize,
    /// Largest joint state count the dense solver accepts.
    pub dense_cap: usize,
    /// Average each iterate with its predecessor; removes period-2 oscillation.
    pub lazy: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { solver: Solver::Regenerative, tol: 1e-10, max_iters: 100_000, dense_cap: 5_000, lazy: false }
    }
}

impl SolverOptions {
    pub fn power(tol: f64) -> Self {
        SolverOptions { solver: Solver::Power, tol, max_iters: 1_000_000, ..Default::default() }
    }

    pub fn dense() -> Self {
        SolverOptions { solver: Solver::Dense, ..Default::default() }
    }

    pub fn regenerative(tol: f64) -> Self {
        SolverOptions { solver: Solver::Regenerative, tol, ..Default::default() }
    }
}

/// Stationary vector π over joint states, laid out as consecutive l-blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    pub pi: Vec<f64>,
    pub n_l: usize,
    pub n_h: usize,
    /// ||π P^Z - π||_1 of the returned vector.
    pub residual: f64,
    pub iterations: usize,
    /// Per-iteration L1 change of the iterate.
    pub history: Vec<f64>,
}

impl JointDistribution {
    /// π^l, the l-block of π.
    pub fn marginal(&self, l: LaaStateIndex) -> Result<&[f64]> {
        if l.0 < 1 || l.0 > self.n_l {
            return Err(Error::InvalidArgument(format!("SJMC state {} out of 1..={}", l.0, self.n_l)));
        }
        Ok(&self.pi[l.block() * self.n_h..][..self.n_h])
    }

    pub fn block_mass(&self, l: LaaStateIndex) -> Result<f64> {
        Ok(self.marginal(l)?.iter().sum())
    }

    pub fn total_mass(&self) -> f64 {
        self.pi.iter().sum()
    }

    pub fn l1_distance(&self, other: &JointDistribution) -> f64 {
        self.pi.iter().zip(&other.pi).map(|(a, b)| (a - b).abs()).sum()
    }

    /// Mass of `h` states matching `pred` within block `l`.
    pub fn block_mass_where(&self, l: LaaStateIndex, space: &WifiStateSpace, pred: impl Fn(WifiState) -> bool) -> Result<f64> {
        Ok(self.marginal(l)?.iter().enumerate().filter(|&(h, _)| pred(space.decode(h))).map(|(_, p)| p).sum())
    }

    /// Writes π with a header identifying the configuration and the operating point.
    pub fn save(&self, path: &Path, cfg: &SystemConfig, p_b_l: f64, p_d: f64) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(DUMP_MAGIC)?;
        w.write_all(cfg.config_hash().as_bytes())?;
        for v in [p_b_l, p_d, self.residual] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in [self.n_l as u64, self.n_h as u64, self.iterations as u64] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.pi {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Restores a dump written by [`JointDistribution::save`] for the same config.
    /// Returns `(distribution, p_b_l, p_d)`, or `None` if the file belongs to another config.
    pub fn load(path: &Path, cfg: &SystemConfig) -> Result<Option<(JointDistribution, f64, f64)>> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(Error::InvalidArgument(format!("{} is not a π dump", path.display())));
        }
        let mut hash = [0u8; 64];
        r.read_exact(&mut hash)?;
        if hash != cfg.config_hash().as_bytes() {
            return Ok(None);
        }
        let mut b8 = [0u8; 8];
        let mut f = || -> Result<f64> {
            r.read_exact(&mut b8)?;
            Ok(f64::from_le_bytes(b8))
        };
        let (p_b_l, p_d, residual) = (f()?, f()?, f()?);
        let mut u = || -> Result<usize> {
            r.read_exact(&mut b8)?;
            Ok(u64::from_le_bytes(b8) as usize)
        };
        let (n_l, n_h, iterations) = (u()?, u()?, u()?);
        if n_l != cfg.laa_states() || n_h != WifiStateSpace::new(cfg).len() {
            return Err(Error::InvalidArgument("π dump dimensions do not match the config".into()));
        }
        let mut raw = vec![0u8; n_l * n_h * 8];
        r.read_exact(&mut raw)?;
        let pi = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Some((JointDistribution { pi, n_l, n_h, residual, iterations, history: Vec::new() }, p_b_l, p_d)))
    }
}

const DUMP_MAGIC: &[u8; 8] = b"LAAPI\x00\x00\x01";

/// One-call form: assemble the chain for `sol` and solve it.
pub fn stationary(cfg: &SystemConfig, sol: &LaaChainSolution, opts: &SolverOptions) -> Result<JointDistribution> {
    JointChain::new(cfg, sol)?.stationary(opts)
}
