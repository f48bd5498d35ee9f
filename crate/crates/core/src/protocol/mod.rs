//! The consensus algorithm: binary values and decision rules, iteration
//! planning, a route-level executor, and entry points that run the
//! algorithm on the message-level simulator.

mod exec;
mod plan;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use exec::{
    execute_abstract, run_adopt, run_broadcast, run_equality, run_inner_iteration, run_propagate, Reliable,
    Transport,
};
pub use plan::{
    choose_s_case1, choose_s_case2, orient_partition, plan_iteration, plan_outer, verify_iteration, Case,
    CaseOneConstruction, IterationPlan, OuterPlan, PhaseKind, PlanBook, PlanError, RouteBundle, Schedule,
};

use crate::digraph::DiGraph;
use crate::simulator::{self, Adversary, NoFaults, RunConfig, RunReport, SimError};

/// A binary value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bit {
    Zero,
    One,
}

impl Bit {
    pub fn flip(self) -> Bit {
        match self {
            Bit::Zero => Bit::One,
            Bit::One => Bit::Zero,
        }
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn as_char(self) -> char {
        match self {
            Bit::Zero => '0',
            Bit::One => '1',
        }
    }
}

impl From<bool> for Bit {
    fn from(b: bool) -> Bit {
        if b {
            Bit::One
        } else {
            Bit::Zero
        }
    }
}

/// A value in `{0, 1, ⊥}`; `None` is ⊥.
pub type Val = Option<Bit>;

/// Per-node protocol state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeState {
    pub v: Bit,
    pub t: Val,
}

impl NodeState {
    pub fn new(input: Bit) -> Self {
        NodeState { v: input, t: None }
    }
}

/// Propagate receive rule: the `f + 1` values are all 0, all 1, or else ⊥.
pub fn propagate_rule(values: &[Val]) -> Val {
    let first = *values.first()?;
    if values.iter().all(|&x| x == first) {
        first
    } else {
        None
    }
}

/// Equality receive rule: keep the own value only if it and every received
/// value are the same bit.
pub fn equality_rule(own: Val, received: &[Val]) -> Val {
    match own {
        Some(b) if received.iter().all(|&x| x == Some(b)) => Some(b),
        _ => None,
    }
}

/// Adoption rule for nodes of `F`: the common value, if all are the same bit.
pub fn adopt_rule(values: &[Val]) -> Option<Bit> {
    propagate_rule(values)
}

/// Runs the algorithm on `g` under `adversary` and returns the decisions.
///
/// Builds a fresh [`PlanBook`], which scans every partition; reuse one with
/// [`simulator::run`] when running many executions on the same graph.
pub fn bc_consensus(
    g: &DiGraph,
    f: usize,
    inputs: &[Bit],
    adversary: &mut dyn Adversary,
) -> Result<RunReport, ConsensusError> {
    let book = Arc::new(PlanBook::new(g, f)?);
    Ok(simulator::run(&book, inputs, adversary, &mut RunConfig::default())?)
}

/// Fault-free consensus for `f = 0`: every node adopts the input of the
/// smallest node of the source component.
pub fn f0_consensus(g: &DiGraph, inputs: &[Bit]) -> Result<Vec<Bit>, ConsensusError> {
    let book = Arc::new(PlanBook::new(g, 0)?);
    let report = simulator::run(&book, inputs, &mut NoFaults, &mut RunConfig::default())?;
    Ok(report.decisions)
}

/// Multi-valued consensus on `width`-bit words, one binary instance per bit
/// (least significant first). `adversary_for(bit)` supplies the adversary
/// of each instance.
pub fn multivalued_consensus(
    book: &Arc<PlanBook>,
    inputs: &[u64],
    width: u32,
    mut adversary_for: impl FnMut(u32) -> Box<dyn Adversary>,
) -> Result<Vec<u64>, ConsensusError> {
    if width == 0 || width > 64 {
        return Err(ConsensusError::Width(width));
    }
    let mut out = vec![0u64; inputs.len()];
    for bit in 0..width {
        let bits: Vec<Bit> = inputs.iter().map(|w| Bit::from(w >> bit & 1 == 1)).collect();
        let mut adv = adversary_for(bit);
        let report = simulator::run(book, &bits, adv.as_mut(), &mut RunConfig::default())?;
        if !report.monitors.all_passed() {
            return Err(ConsensusError::Monitor(bit, report.monitors.first_failure()));
        }
        for (o, d) in out.iter_mut().zip(&report.decisions) {
            *o |= (d.as_u8() as u64) << bit;
        }
    }
    Ok(out)
}

#[derive(Debug, thiserror::Error)]
pub enum ConsensusError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("word width must be between 1 and 64, got {0}")]
    Width(u32),
    #[error("monitor failed on bit {0}: {1}")]
    Monitor(u32, String),
}

#[cfg(test)]
mod tests {
    use super::*;

    const O: Val = Some(Bit::One);
    const Z: Val = Some(Bit::Zero);

    #[test]
    fn propagate_rule_cases() {
        assert_eq!(propagate_rule(&[O, O, O]), O);
        assert_eq!(propagate_rule(&[Z, Z]), Z);
        assert_eq!(propagate_rule(&[O, Z, O]), None);
        assert_eq!(propagate_rule(&[O, None]), None);
        assert_eq!(propagate_rule(&[]), None);
    }

    #[test]
    fn equality_rule_cases() {
        assert_eq!(equality_rule(Z, &[Z, Z]), Z);
        assert_eq!(equality_rule(Z, &[Z, O]), None);
        assert_eq!(equality_rule(None, &[]), None);
        assert_eq!(equality_rule(O, &[]), O);
        assert_eq!(equality_rule(O, &[None]), None);
    }

    #[test]
    fn bit_helpers() {
        assert_eq!(Bit::Zero.flip(), Bit::One);
        assert_eq!(Bit::from(true).as_u8(), 1);
        assert_eq!(Bit::Zero.as_char(), '0');
    }
}
