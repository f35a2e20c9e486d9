//! Finite-state-machine policy built from the feature / memory codebooks
//! of the four-state toy MDP.
//!
//! The abstraction emits a binary feature from the observed transition,
//! `z_t = F[a_{t-1}][s_{t-1}][s_t]`, and the controller keeps a
//! four-valued memory `m_t = D[a_{t-1}][m_{t-1}][z_t]` which tracks the
//! true state exactly when the start state is known. Actions come from a
//! reference policy applied to the memory. Undefined codebook entries are
//! `None` and must never be consulted along reachable trajectories.

use super::{HistoryPolicy, StationaryPolicy};
use crate::error::{Error, Result};

const X: Option<u8> = None;

/// `F[a][s_prev][s_cur]` -> binary feature. Entries follow the toy MDP's
/// three actions: forward cycle, backward cycle, bidirectional cycle.
const F_TABLES: [[[Option<u8>; 4]; 4]; 3] = [
    [
        [Some(0), Some(1), X, X],
        [X, Some(0), Some(1), X],
        [X, X, Some(0), Some(1)],
        [Some(1), X, X, Some(0)],
    ],
    [
        [Some(1), X, X, Some(0)],
        [Some(0), Some(1), X, X],
        [X, Some(0), Some(1), X],
        [X, X, Some(0), Some(1)],
    ],
    [
        [X, Some(0), X, Some(1)],
        [Some(0), X, Some(1), X],
        [X, Some(0), X, Some(1)],
        [Some(0), X, Some(1), X],
    ],
];

/// `D[a][m_prev][z]` -> next memory.
const D_TABLES: [[[u8; 2]; 4]; 3] = [
    [[0, 1], [1, 2], [2, 3], [3, 0]],
    [[3, 0], [0, 1], [1, 2], [2, 3]],
    [[1, 3], [0, 2], [1, 3], [0, 2]],
];

/// Memory of the FSM policy. `last_state` feeds the feature codebook;
/// `fsm_memory` is what the control policy conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodebookMemory {
    pub fsm_memory: usize,
    pub last_state: usize,
}

#[derive(Debug, Clone)]
pub struct CodebookFsmPolicy {
    reference: StationaryPolicy,
}

impl CodebookFsmPolicy {
    /// Feature emitted for a `(s_prev, s_cur)` transition under `action`.
    pub fn feature(&self, prev_action: usize, s_prev: usize, s_cur: usize) -> Result<u8> {
        F_TABLES[prev_action][s_prev][s_cur].ok_or_else(|| {
            Error::Codebook(format!("F[{prev_action}][{s_prev}][{s_cur}]"))
        })
    }
}

impl HistoryPolicy for CodebookFsmPolicy {
    type Memory = CodebookMemory;

    fn init(&self, start_state: usize) -> CodebookMemory {
        CodebookMemory {
            fsm_memory: start_state,
            last_state: start_state,
        }
    }

    fn step(&self, memory: &CodebookMemory, prev_action: usize, new_state: usize) -> Result<CodebookMemory> {
        let z = self.feature(prev_action, memory.last_state, new_state)?;
        let m = D_TABLES[prev_action][memory.fsm_memory][z as usize];
        Ok(CodebookMemory {
            fsm_memory: m as usize,
            last_state: new_state,
        })
    }

    fn act(&self, memory: &CodebookMemory) -> Vec<f64> {
        self.reference.action_probs[memory.fsm_memory].clone()
    }
}

/// Wrap a reference policy on the toy MDP in the codebook FSM.
pub fn codebook_fsm_policy(reference: StationaryPolicy) -> Result<CodebookFsmPolicy> {
    reference
        .validate(4, 3)
        .map_err(|_| Error::InvalidInput("reference policy must cover 4 states and 3 actions".into()))?;
    Ok(CodebookFsmPolicy { reference })
}
