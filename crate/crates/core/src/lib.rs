//! Byzantine consensus in directed graphs: feasibility checking, the
//! iteration-planning consensus algorithm, and a deterministic synchronous
//! simulator to run it against Byzantine adversaries.

pub mod condition;
pub mod digraph;
pub mod generators;
pub mod nodeset;
pub mod protocol;
pub mod relations;
pub mod simulator;

pub use condition::{
    check_condition1, check_degree_bounds, check_theorem1, ConditionVerdict, PartitionWitness,
};
pub use digraph::{DiGraph, GraphError, NodeId, NodeSet, PathSet};
pub use protocol::{bc_consensus, f0_consensus, multivalued_consensus, Bit, PlanBook};
pub use simulator::{run, Adversary, Behavior, Byzantine, NoFaults, RunConfig, RunReport};
