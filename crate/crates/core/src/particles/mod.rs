//! Interacting hard-rod systems.
//!
//! Rod centers are kept in an ascending array `x`. The barrier-pushed and
//! influx-killed systems also carry the free reflected coordinates `z` from
//! which the centers are rebuilt after every step.

mod checkpoint;
mod engines;
mod projection;

use serde::{Deserialize, Serialize};

use crate::analytics::DiffusionParams;
use crate::error::{Error, Result};

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use engines::{
    apply_jump_rule, init_model_a_from_z, init_model_a_pseudostationary, init_model_c,
    init_model_r, step_model_a, step_model_a_direct, step_model_c, step_model_r,
    steps_per_injection, Reinsertion,
};
pub use projection::project_chain;

/// Spacing tolerance for states produced by the projection integrator.
pub const PROJECTION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    BarrierPushed,
    InfluxKilled,
    JumpReset,
}

impl ModelKind {
    pub fn id(self) -> u32 {
        match self {
            ModelKind::BarrierPushed => 0,
            ModelKind::InfluxKilled => 1,
            ModelKind::JumpReset => 2,
        }
    }

    pub fn from_id(id: u32) -> Option<Self> {
        match id {
            0 => Some(ModelKind::BarrierPushed),
            1 => Some(ModelKind::InfluxKilled),
            2 => Some(ModelKind::JumpReset),
            _ => None,
        }
    }
}

/// Snapshot of a rod system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t: f64,
    pub model: ModelKind,
    /// Free reflected coordinates, ascending. Empty for the jump-reset system.
    pub z: Vec<f64>,
    /// Rod centers, ascending.
    pub x: Vec<f64>,
    /// Rods removed at the right end (influx kills, jump-reset departures).
    pub killed: u64,
    /// Rods inserted at the left end (influx injections, jump-reset arrivals).
    pub injected: u64,
    /// Jump-reset rods waiting for the origin to clear.
    pub queued: u64,
    pub params: DiffusionParams,
}

/// Open rod intervals `(center - epsilon/2, center + epsilon/2)`, ascending.
pub type RodIntervals = Vec<(f64, f64)>;

impl SystemState {
    pub fn empty(model: ModelKind, params: DiffusionParams) -> Self {
        Self {
            t: 0.0,
            model,
            z: Vec::new(),
            x: Vec::new(),
            killed: 0,
            injected: 0,
            queued: 0,
            params,
        }
    }

    pub fn alive(&self) -> usize {
        self.x.len()
    }

    /// Stable label of the rod at ascending position `i`.
    ///
    /// Barrier-pushed and jump-reset rods are numbered `1..=n` from the left.
    /// Influx rods keep their injection index, so the newest (leftmost) rod
    /// carries the largest label.
    pub fn label(&self, i: usize) -> u64 {
        match self.model {
            ModelKind::InfluxKilled => self.injected - i as u64,
            _ => i as u64 + 1,
        }
    }

    /// Ascending position of the rod carrying `label`, if it is alive.
    pub fn position_of(&self, label: u64) -> Option<usize> {
        let i = match self.model {
            ModelKind::InfluxKilled => {
                if label > self.injected || label <= self.killed {
                    return None;
                }
                (self.injected - label) as usize
            }
            _ => (label as usize).checked_sub(1)?,
        };
        (i < self.x.len()).then_some(i)
    }

    /// Offset that maps the static frame onto the frame in which densities are
    /// measured: the barrier position `c t` for the barrier-pushed system, 0
    /// otherwise.
    pub fn frame_shift(&self) -> f64 {
        match self.model {
            ModelKind::BarrierPushed => self.params.barrier_speed() * self.t,
            _ => 0.0,
        }
    }

    pub fn min_gap(&self) -> Option<f64> {
        self.x
            .windows(2)
            .map(|w| w[1] - w[0])
            .min_by(f64::total_cmp)
    }

    /// Check the structural invariants of the state, allowing spacing to fall
    /// short of `epsilon` by at most `tol`.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let eps = self.params.epsilon;
        if let Some(g) = self.min_gap() {
            if g < eps - tol {
                return Err(Error::Invariant(format!(
                    "rod spacing {g} below width {eps} at t={}",
                    self.t
                )));
            }
        }
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invariant("non-finite rod center".into()));
        }
        match self.model {
            ModelKind::BarrierPushed => {
                let n = self.params.n.unwrap_or(self.x.len());
                if self.x.len() != n {
                    return Err(Error::Invariant(format!(
                        "rod count {} differs from n = {n}",
                        self.x.len()
                    )));
                }
                let wall = self.params.barrier_speed() * self.t + eps / 2.0;
                if let Some(&first) = self.x.first() {
                    if first < wall - tol {
                        return Err(Error::Invariant(format!(
                            "leftmost rod {first} behind barrier {wall}"
                        )));
                    }
                }
            }
            ModelKind::InfluxKilled => {
                let expected = self
                    .injected
                    .checked_sub(self.killed)
                    .ok_or_else(|| Error::Invariant("more rods killed than injected".into()))?;
                if self.z.len() as u64 != expected || self.x.len() != self.z.len() {
                    return Err(Error::Invariant(format!(
                        "alive count {} (z: {}) but injected - killed = {expected}",
                        self.x.len(),
                        self.z.len()
                    )));
                }
                if let (Some(&lo), Some(&hi)) = (self.x.first(), self.x.last()) {
                    if lo < eps / 2.0 - eps - tol || hi > 1.0 - eps / 2.0 + tol {
                        return Err(Error::Invariant(format!(
                            "rod centers [{lo}, {hi}] outside [{}, {}]",
                            eps / 2.0 - eps,
                            1.0 - eps / 2.0
                        )));
                    }
                }
            }
            ModelKind::JumpReset => {
                if let Some(n) = self.params.n {
                    if self.x.len() as u64 + self.queued != n as u64 {
                        return Err(Error::Invariant(format!(
                            "rod count {} + queued {} differs from n = {n}",
                            self.x.len(),
                            self.queued
                        )));
                    }
                }
                if let (Some(&lo), Some(&hi)) = (self.x.first(), self.x.last()) {
                    if lo < -tol || hi > 1.0 + tol {
                        return Err(Error::Invariant(format!(
                            "rod centers [{lo}, {hi}] outside [0, 1]"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Rod intervals of a state, after checking that they do not overlap beyond
/// [`PROJECTION_TOL`].
pub fn reconstruct_intervals(state: &SystemState) -> Result<RodIntervals> {
    let eps = state.params.epsilon;
    if let Some(g) = state.min_gap() {
        if g < eps - PROJECTION_TOL {
            return Err(Error::Invariant(format!("rods overlap: gap {g} < {eps}")));
        }
    }
    Ok(state
        .x
        .iter()
        .map(|&c| (c - eps / 2.0, c + eps / 2.0))
        .collect())
}
