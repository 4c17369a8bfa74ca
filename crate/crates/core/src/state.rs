//! Dense indexing of node H's state space.

use crate::config::SystemConfig;

/// A state of node H's chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WifiState {
    /// Stage `stage`, backoff counter `counter`. Counter 0 is the transmit state.
    Backoff { stage: usize, counter: usize },
    /// A transmission that started inside an MCOT and continues into the OW period.
    OverlapTx { stage: usize },
}

impl WifiState {
    pub fn stage(self) -> usize {
        match self {
            WifiState::Backoff { stage, .. } | WifiState::OverlapTx { stage } => stage,
        }
    }

    /// BC(h); zero for transmit and overlap states.
    pub fn backoff_counter(self) -> usize {
        match self {
            WifiState::Backoff { counter, .. } => counter,
            WifiState::OverlapTx { .. } => 0,
        }
    }

    pub fn is_transmitting(self) -> bool {
        matches!(self, WifiState::Backoff { counter: 0, .. } | WifiState::OverlapTx { .. })
    }
}

/// Bijection between [`WifiState`] and `0..len()`: stage-major with ascending counters,
/// followed by the m + 2 overlap states.
#[derive(Debug, Clone)]
pub struct WifiStateSpace {
    windows: Vec<usize>,
    offsets: Vec<usize>,
    backoff_total: usize,
}

impl WifiStateSpace {
    pub fn new(cfg: &SystemConfig) -> Self {
        let windows: Vec<usize> = (0..cfg.stages()).map(|i| cfg.window(i)).collect();
        let mut offsets = Vec::with_capacity(windows.len());
        let mut acc = 0;
        for &w in &windows {
            offsets.push(acc);
            acc += w;
        }
        WifiStateSpace { windows, offsets, backoff_total: acc }
    }

    pub fn len(&self) -> usize {
        self.backoff_total + self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn stages(&self) -> usize {
        self.windows.len()
    }

    pub fn window(&self, stage: usize) -> usize {
        self.windows[stage]
    }

    pub fn encode(&self, h: WifiState) -> usize {
        match h {
            WifiState::Backoff { stage, counter } => {
                debug_assert!(counter < self.windows[stage]);
                self.offsets[stage] + counter
            }
            WifiState::OverlapTx { stage } => self.backoff_total + stage,
        }
    }

    pub fn backoff(&self, stage: usize, counter: usize) -> usize {
        self.offsets[stage] + counter
    }

    pub fn overlap(&self, stage: usize) -> usize {
        self.backoff_total + stage
    }

    pub fn decode(&self, idx: usize) -> WifiState {
        assert!(idx < self.len(), "wifi state index {idx} out of range");
        if idx >= self.backoff_total {
            return WifiState::OverlapTx { stage: idx - self.backoff_total };
        }
        let stage = self.offsets.partition_point(|&o| o <= idx) - 1;
        WifiState::Backoff { stage, counter: idx - self.offsets[stage] }
    }

    pub fn iter(&self) -> impl Iterator<Item = WifiState> + '_ {
        (0..self.len()).map(|i| self.decode(i))
    }

    /// m_H': 1 on transmit and overlap states.
    pub fn transmit_mask(&self) -> Vec<bool> {
        self.iter().map(WifiState::is_transmitting).collect()
    }
}

/// Ordered list of all node H states.
pub fn enumerate_wifi_states(cfg: &SystemConfig) -> Vec<WifiState> {
    let space = WifiStateSpace::new(cfg);
    space.iter().collect()
}
