//! Node H's (Wi-Fi AP) transition matrices for each period regime of the joint chain.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::sparse::CsrMatrix;
use crate::state::{WifiState, WifiStateSpace};

/// Period regime of a joint transition `(L_t, L_{t+1})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// Inside an MCOT: every completed packet collided.
    Mc,
    /// Only-Wi-Fi period: completed packets succeed.
    Ow,
    /// The MCOT → OW switch: an in-flight packet becomes an overlapping one.
    Ol,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Mc, Regime::Ow, Regime::Ol];

    /// (p_c, p_b, overlap indicator) of the regime.
    pub fn params(self) -> (f64, f64, bool) {
        match self {
            Regime::Mc => (1.0, 0.0, false),
            Regime::Ow => (0.0, 0.0, false),
            Regime::Ol => (1.0, 0.0, true),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Mc => "MC",
            Regime::Ow => "OW",
            Regime::Ol => "OL",
        })
    }
}

/// Row-stochastic transition matrix over node H's states.
#[derive(Debug, Clone)]
pub struct InnerMatrix {
    pub regime: Regime,
    pub p_c: f64,
    pub p_b: f64,
    pub overlap_flag: bool,
    pub p_o: f64,
    pub matrix: CsrMatrix,
}

/// Stage entered after a collision at `stage`.
pub fn collision_stage(cfg: &SystemConfig, stage: usize) -> usize {
    let last = cfg.stages() - 1;
    if stage < last {
        stage + 1
    } else if cfg.h_retry_reset {
        0
    } else {
        last
    }
}

pub fn build_inner_matrix(cfg: &SystemConfig, regime: Regime) -> InnerMatrix {
    let (p_c, p_b, overlap_flag) = regime.params();
    let mut inner = build_parameterized(cfg, p_c, p_b, overlap_flag);
    inner.regime = regime;
    inner
}

/// Node H's chain for arbitrary (p_c, p_b) and overlap indicator. The regime tag of the
/// result is the one whose constants are closest; callers of this form mostly want the
/// matrix itself.
pub fn build_parameterized(cfg: &SystemConfig, p_c: f64, p_b: f64, overlap_flag: bool) -> InnerMatrix {
    let space = WifiStateSpace::new(cfg);
    let p_o = cfg.p_o();
    let fan = |stage: usize, mass: f64, row: &mut Vec<(usize, f64)>| {
        let w = space.window(stage);
        let each = mass / w as f64;
        row.extend((0..w).map(|k| (space.backoff(stage, k), each)));
    };
    let rows = space.iter().map(|h| {
        let mut row = Vec::new();
        match h {
            WifiState::Backoff { stage, counter } if counter >= 1 => {
                row.push((space.backoff(stage, counter - 1), 1.0 - p_b));
                row.push((space.backoff(stage, counter), p_b));
            }
            WifiState::Backoff { stage, .. } => {
                let cont = if overlap_flag { space.overlap(stage) } else { space.backoff(stage, 0) };
                row.push((cont, 1.0 - p_o));
                fan(collision_stage(cfg, stage), p_o * p_c, &mut row);
                fan(0, p_o * (1.0 - p_c), &mut row);
            }
            WifiState::OverlapTx { stage } => {
                row.push((space.overlap(stage), 1.0 - p_o));
                fan(collision_stage(cfg, stage), p_o, &mut row);
            }
        }
        row
    });
    let matrix = CsrMatrix::from_rows(space.len(), rows);
    let regime = match (p_c >= 0.5, overlap_flag) {
        (_, true) => Regime::Ol,
        (true, false) => Regime::Mc,
        (false, false) => Regime::Ow,
    };
    InnerMatrix { regime, p_c, p_b, overlap_flag, p_o, matrix }
}

impl InnerMatrix {
    pub fn len(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest |row sum - 1|.
    pub fn max_row_defect(&self) -> f64 {
        (0..self.len()).map(|r| (self.matrix.row_sum(r) - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// The three regime matrices, built once per config.
#[derive(Debug, Clone)]
pub struct InnerMatrices {
    pub mc: InnerMatrix,
    pub ow: InnerMatrix,
    pub ol: InnerMatrix,
}

impl InnerMatrices {
    pub fn new(cfg: &SystemConfig) -> Self {
        InnerMatrices {
            mc: build_inner_matrix(cfg, Regime::Mc),
            ow: build_inner_matrix(cfg, Regime::Ow),
            ol: build_inner_matrix(cfg, Regime::Ol),
        }
    }

    pub fn get(&self, regime: Regime) -> &InnerMatrix {
        match regime {
            Regime::Mc => &self.mc,
            Regime::Ow => &self.ow,
            Regime::Ol => &self.ol,
        }
    }
}
