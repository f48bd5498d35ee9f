//! Byzantine behaviours. An adversary sees the whole world each round and
//! decides what every faulty node actually sends.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Msg, Tag};
use crate::digraph::{NodeId, NodeSet};
use crate::protocol::{Bit, NodeState, PhaseKind, PlanBook, RouteBundle};

/// Read-only world state handed to an adversary.
pub struct View<'a> {
    pub book: &'a PlanBook,
    pub round: u64,
    /// Round number within the current phase.
    pub phase_round: usize,
    pub tag: Tag,
    pub kind: PhaseKind,
    pub bundle: &'a RouteBundle,
    pub states: &'a [NodeState],
    /// Messages delivered this round, to every node.
    pub delivered: &'a [Msg],
}

impl View<'_> {
    /// The final receiver of the route `m` travels on, if the route exists.
    pub fn destination(&self, m: &Msg) -> Option<NodeId> {
        let r = m.route as usize;
        (r < self.bundle.len()).then(|| NodeId(*self.bundle.route(r).last().unwrap() as usize))
    }
}

pub trait Adversary {
    /// The nodes this adversary controls.
    fn faulty(&self) -> NodeSet;

    /// Called once per round for each faulty `node` with the messages the
    /// honest algorithm would send; whatever is pushed to `out` is sent
    /// instead. Every message must travel along an edge out of `node`.
    fn act(&mut self, view: &View<'_>, node: NodeId, honest: &[Msg], out: &mut Vec<Msg>);

    fn describe(&self) -> String;
}

/// The fault-free execution.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoFaults;

impl Adversary for NoFaults {
    fn faulty(&self) -> NodeSet {
        NodeSet::EMPTY
    }

    fn act(&mut self, _: &View<'_>, _: NodeId, honest: &[Msg], out: &mut Vec<Msg>) {
        out.extend_from_slice(honest);
    }

    fn describe(&self) -> String {
        "none".into()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Behavior {
    /// Send nothing.
    Silent,
    /// Forward and originate the opposite bit.
    Flip,
    /// Pick the bit from the parity of `to + route + hop`, so disjoint
    /// paths into the same receiver see different values.
    Equivocate,
    /// Send 0 on routes ending in `left` and 1 elsewhere. `left` defaults
    /// to the lower half of the node indices.
    SplitBrain { left: Option<NodeSet> },
    /// Per message: drop, 0, 1, ⊥, honest, duplicate or misdirect, drawn
    /// from a seeded ChaCha8 stream.
    Random { seed: u64 },
}

impl Behavior {
    pub fn name(&self) -> &'static str {
        match self {
            Behavior::Silent => "silent",
            Behavior::Flip => "flip",
            Behavior::Equivocate => "equivocate",
            Behavior::SplitBrain { .. } => "split-brain",
            Behavior::Random { .. } => "random",
        }
    }

    /// The scripted pool: everything except `Random`.
    pub fn scripted() -> [Behavior; 4] {
        [
            Behavior::Silent,
            Behavior::Flip,
            Behavior::Equivocate,
            Behavior::SplitBrain { left: None },
        ]
    }

    /// Parses a strategy name; `random` takes `seed`.
    pub fn parse(name: &str, seed: u64) -> Result<Behavior, String> {
        match name {
            "silent" => Ok(Behavior::Silent),
            "flip" => Ok(Behavior::Flip),
            "equivocate" => Ok(Behavior::Equivocate),
            "split-brain" => Ok(Behavior::SplitBrain { left: None }),
            "random" => Ok(Behavior::Random { seed }),
            _ => Err(format!(
                "unknown strategy {name:?} (silent, flip, equivocate, split-brain, random)"
            )),
        }
    }
}

/// A fixed faulty set running one [`Behavior`].
#[derive(Clone, Debug)]
pub struct Byzantine {
    faulty: NodeSet,
    behavior: Behavior,
    rng: ChaCha8Rng,
}

impl Byzantine {
    pub fn new(faulty: NodeSet, behavior: Behavior) -> Self {
        let seed = match behavior {
            Behavior::Random { seed } => seed,
            _ => 0,
        };
        Byzantine {
            faulty,
            behavior,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn behavior(&self) -> &Behavior {
        &self.behavior
    }
}

impl Adversary for Byzantine {
    fn faulty(&self) -> NodeSet {
        self.faulty
    }

    fn act(&mut self, view: &View<'_>, node: NodeId, honest: &[Msg], out: &mut Vec<Msg>) {
        match &self.behavior {
            Behavior::Silent => {}
            Behavior::Flip => out.extend(honest.iter().map(|m| Msg {
                value: m.value.map(Bit::flip),
                ..*m
            })),
            Behavior::Equivocate => out.extend(honest.iter().map(|m| Msg {
                value: Some(Bit::from((m.to as u32 + m.route + m.hop as u32) % 2 == 1)),
                ..*m
            })),
            Behavior::SplitBrain { left } => {
                let n = view.book.graph().n();
                let left = left.unwrap_or_else(|| NodeSet::full(n / 2));
                out.extend(honest.iter().map(|m| {
                    let zero = view.destination(m).is_some_and(|d| left.contains(d));
                    Msg {
                        value: Some(Bit::from(!zero)),
                        ..*m
                    }
                }))
            }
            Behavior::Random { .. } => {
                let outs = view.book.graph().out_neighbors(node);
                for m in honest {
                    match self.rng.gen_range(0..7) {
                        0 => {}
                        1 => out.push(Msg {
                            value: Some(Bit::Zero),
                            ..*m
                        }),
                        2 => out.push(Msg {
                            value: Some(Bit::One),
                            ..*m
                        }),
                        3 => out.push(Msg { value: None, ..*m }),
                        4 => out.push(*m),
                        5 => {
                            out.push(*m);
                            out.push(Msg {
                                value: m.value.map(Bit::flip),
                                ..*m
                            });
                        }
                        _ => {
                            let pick = self.rng.gen_range(0..outs.len());
                            let to = outs.iter().nth(pick).unwrap();
                            out.push(Msg {
                                to: to.0 as u8,
                                value: Some(Bit::from(self.rng.gen_bool(0.5))),
                                ..*m
                            });
                        }
                    }
                }
            }
        }
    }

    fn describe(&self) -> String {
        let names: Vec<usize> = self.faulty.iter().map(|v| v.0).collect();
        match &self.behavior {
            Behavior::Random { seed } => format!("random(seed={seed}) on {names:?}"),
            Behavior::SplitBrain { left: Some(l) } => format!("split-brain(left={l:?}) on {names:?}"),
            b => format!("{} on {names:?}", b.name()),
        }
    }
}

type Script = dyn FnMut(&View<'_>, NodeId, &[Msg], &mut Vec<Msg>);

/// An adversary defined by a closure.
pub struct Scripted {
    faulty: NodeSet,
    name: String,
    script: Box<Script>,
}

impl Scripted {
    pub fn new(
        faulty: NodeSet,
        name: impl Into<String>,
        script: impl FnMut(&View<'_>, NodeId, &[Msg], &mut Vec<Msg>) + 'static,
    ) -> Self {
        Scripted {
            faulty,
            name: name.into(),
            script: Box::new(script),
        }
    }
}

impl Adversary for Scripted {
    fn faulty(&self) -> NodeSet {
        self.faulty
    }

    fn act(&mut self, view: &View<'_>, node: NodeId, honest: &[Msg], out: &mut Vec<Msg>) {
        (self.script)(view, node, honest, out)
    }

    fn describe(&self) -> String {
        format!("scripted {}", self.name)
    }
}
