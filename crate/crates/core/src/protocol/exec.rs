//! Route-level execution of a [`PlanBook`]: every route is carried in one
//! step by a [`Transport`], with no rounds or message objects. The
//! simulator is the reference; this executor is a cross-check and a fast
//! way to evaluate adversaries that act per route.

use super::plan::{IterationPlan, PhaseKind, PlanBook, RouteBundle, Schedule};
use super::{adopt_rule, equality_rule, propagate_rule, Bit, NodeState, Val};

/// Delivers one value along one route.
pub trait Transport {
    /// The value the last node of `route` receives when `route[0]` sends
    /// `value`.
    fn carry(&mut self, kind: PhaseKind, route: &[u8], value: Val) -> Val;
}

/// Delivers every value unchanged.
#[derive(Clone, Copy, Debug, Default)]
pub struct Reliable;

impl Transport for Reliable {
    fn carry(&mut self, _: PhaseKind, _: &[u8], value: Val) -> Val {
        value
    }
}

fn gather(bundle: &RouteBundle, states: &[NodeState], transport: &mut dyn Transport) -> Vec<Val> {
    (0..bundle.len())
        .map(|r| {
            let route = bundle.route(r);
            let sender = &states[route[0] as usize];
            let value = if bundle.kind.sends_v() { Some(sender.v) } else { sender.t };
            transport.carry(bundle.kind, route, value)
        })
        .collect()
}

/// Every receiver sets `t` from its `f + 1` values.
pub fn run_propagate(bundle: &RouteBundle, states: &mut [NodeState], transport: &mut dyn Transport) {
    let got = gather(bundle, states, transport);
    for (d, range) in bundle.groups() {
        states[d.0].t = propagate_rule(&got[range]);
    }
}

/// Every member keeps `t` only if all members reported the same bit.
pub fn run_equality(bundle: &RouteBundle, states: &mut [NodeState], transport: &mut dyn Transport) {
    let got = gather(bundle, states, transport);
    for (j, range) in bundle.groups() {
        states[j.0].t = equality_rule(states[j.0].t, &got[range]);
    }
}

/// Step (j): each watched node adopts a unanimous `v` from its watchers.
pub fn run_adopt(bundle: &RouteBundle, states: &mut [NodeState], transport: &mut dyn Transport) {
    let got = gather(bundle, states, transport);
    for (k, range) in bundle.groups() {
        if let Some(b) = adopt_rule(&got[range]) {
            states[k.0].v = b;
        }
    }
}

/// `f = 0`: every node takes the root's value when one arrives.
pub fn run_broadcast(bundle: &RouteBundle, states: &mut [NodeState], transport: &mut dyn Transport) {
    let got = gather(bundle, states, transport);
    for (j, range) in bundle.groups() {
        if let Some(b) = got[range.start] {
            states[j.0].v = b;
        }
    }
}

/// One INNER iteration, including the closing step (j).
pub fn run_inner_iteration(plan: &IterationPlan, states: &mut [NodeState], transport: &mut dyn Transport) {
    for s in states.iter_mut() {
        s.t = None;
    }
    for i in plan.seeded() {
        states[i.0].t = Some(states[i.0].v);
    }
    for phase in &plan.phases {
        match phase.kind {
            PhaseKind::Propagate => run_propagate(phase, states, transport),
            PhaseKind::Equality => run_equality(phase, states, transport),
            PhaseKind::Adopt | PhaseKind::Broadcast => unreachable!("not a core phase"),
        }
    }
    for j in plan.updated() {
        if let Some(b) = states[j.0].t {
            states[j.0].v = b;
        }
    }
    run_adopt(&plan.adopt, states, transport);
}

/// Runs the whole schedule and returns every node's final `v`.
pub fn execute_abstract(book: &PlanBook, inputs: &[Bit], transport: &mut dyn Transport) -> Vec<Bit> {
    assert_eq!(inputs.len(), book.graph().n(), "one input per node");
    let mut states: Vec<NodeState> = inputs.iter().map(|&b| NodeState::new(b)).collect();
    match book.schedule() {
        Schedule::Broadcast { bundle, .. } => run_broadcast(bundle, &mut states, transport),
        Schedule::Iterative(outers) => {
            for it in outers.iter().flat_map(|o| &o.iterations) {
                run_inner_iteration(it, &mut states, transport);
            }
        }
    }
    states.iter().map(|s| s.v).collect()
}
