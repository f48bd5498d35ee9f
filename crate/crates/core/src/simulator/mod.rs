//! A deterministic synchronous round engine for executing a [`PlanBook`].
//!
//! Links are reliable and FIFO: a message sent in round `r` is delivered at
//! the start of round `r + 1`. Each phase of the schedule lasts one round
//! per hop of its longest route plus one, so a receiver that has heard
//! nothing on a route by the end of the phase reads ⊥.
//!
//! Faulty nodes run the honest state machine too; the [`Adversary`] then
//! rewrites whatever they were about to send. Monitors run online and are
//! returned in the [`RunReport`].

pub mod adversary;
mod monitors;
pub mod transcript;

use std::io::Write;

use serde_json::{json, Value};
use thiserror::Error;

pub use adversary::{Adversary, Behavior, Byzantine, NoFaults, Scripted, View};
pub use monitors::{monitor_agreement_at_fstar, monitor_delivery, monitor_lemma1, MonitorReport, MonitorVerdict};
pub use transcript::{parse_jsonl, to_jsonl, Record, Sink, TranscriptLevel, SCHEMA_VERSION};

use crate::digraph::{DiGraph, GraphError, NodeId, NodeSet};
use crate::protocol::{
    adopt_rule, equality_rule, propagate_rule, Bit, NodeState, PhaseKind, PlanBook, RouteBundle, Schedule, Val,
};
use transcript::{bits_string, val_code};

/// Identifies the phase a message belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Tag {
    pub outer: u32,
    pub inner: u32,
    pub phase: u8,
}

/// One message on one link. `route` indexes the current phase's bundle and
/// `hop` is the position of `to` on that route.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Msg {
    pub from: u8,
    pub to: u8,
    pub tag: Tag,
    pub route: u32,
    pub hop: u8,
    pub value: Val,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("expected {expected} inputs, got {got}")]
    Inputs { expected: usize, got: usize },
    #[error("{got} faulty nodes exceed f = {f}")]
    TooManyFaulty { got: usize, f: usize },
    #[error("adversary sent {from} -> {to} in round {round}, which is not an edge")]
    NonEdge { from: String, to: String, round: u64 },
    #[error("the execution has already finished")]
    Finished,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("transcript write failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Transcript settings for a run.
#[derive(Debug, Default)]
pub struct RunConfig {
    pub level: TranscriptLevel,
    pub sink: Sink,
}

impl RunConfig {
    /// Keeps records in memory; retrieve them with [`RunConfig::take_records`].
    pub fn memory(level: TranscriptLevel) -> Self {
        RunConfig {
            level,
            sink: Sink::Memory(Vec::new()),
        }
    }

    /// Streams JSON lines to `w`.
    pub fn writer(level: TranscriptLevel, w: impl Write + Send + 'static) -> Self {
        RunConfig {
            level,
            sink: Sink::Writer(Box::new(w)),
        }
    }

    pub fn take_records(&mut self) -> Vec<Record> {
        match &mut self.sink {
            Sink::Memory(v) => std::mem::take(v),
            _ => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunReport {
    /// Final `v` of every node; entries for faulty nodes are their honest
    /// shadow state and carry no guarantee.
    pub decisions: Vec<Bit>,
    pub faulty: NodeSet,
    pub rounds: u64,
    pub messages: u64,
    pub monitors: MonitorReport,
}

impl RunReport {
    /// Decisions of the fault-free nodes.
    pub fn fault_free(&self) -> impl Iterator<Item = (NodeId, Bit)> + '_ {
        self.decisions
            .iter()
            .enumerate()
            .map(|(i, &b)| (NodeId(i), b))
            .filter(|(v, _)| !self.faulty.contains(*v))
    }

    pub fn to_json(&self, g: &DiGraph) -> Value {
        let decisions: serde_json::Map<String, Value> = self
            .fault_free()
            .map(|(v, b)| (g.name(v).to_string(), json!(b.as_u8())))
            .collect();
        json!({
            "decisions": decisions,
            "faulty": g.names_of(self.faulty),
            "rounds": self.rounds,
            "messages": self.messages,
            "monitors_passed": self.monitors.all_passed(),
            "monitors": self.monitors,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Cursor {
    outer: usize,
    inner: usize,
    phase: usize,
}

/// The state of one execution between rounds.
pub struct World<'a> {
    book: &'a PlanBook,
    config: &'a mut RunConfig,
    n: usize,
    faulty: NodeSet,
    honest: NodeSet,
    inputs: Vec<Bit>,
    states: Vec<NodeState>,
    round: u64,
    messages: u64,
    cursor: Cursor,
    done: bool,
    outer_open: bool,
    iter_open: bool,
    fstar_passed: bool,
    phase_round: usize,
    slots: Vec<Val>,
    arrived: Vec<bool>,
    forwarded: Vec<u64>,
    in_flight: Vec<Msg>,
    in_seq: Vec<u64>,
    next: Vec<Msg>,
    outbox: Vec<Vec<Msg>>,
    scratch: Vec<Msg>,
    send_seq: Vec<u64>,
    recv_seq: Vec<u64>,
    v_start: Vec<Bit>,
    monitors: MonitorReport,
}

impl<'a> World<'a> {
    pub fn new(
        book: &'a PlanBook,
        inputs: &[Bit],
        faulty: NodeSet,
        adversary: &str,
        config: &'a mut RunConfig,
    ) -> Result<Self, SimError> {
        let g = book.graph();
        let n = g.n();
        if inputs.len() != n {
            return Err(SimError::Inputs {
                expected: n,
                got: inputs.len(),
            });
        }
        g.check_set(faulty)?;
        if faulty.len() > book.f() {
            return Err(SimError::TooManyFaulty {
                got: faulty.len(),
                f: book.f(),
            });
        }
        let mut w = World {
            book,
            config,
            n,
            faulty,
            honest: g.nodes() - faulty,
            inputs: inputs.to_vec(),
            states: inputs.iter().map(|&b| NodeState::new(b)).collect(),
            round: 0,
            messages: 0,
            cursor: Cursor::default(),
            done: false,
            outer_open: false,
            iter_open: false,
            fstar_passed: false,
            phase_round: 0,
            slots: Vec::new(),
            arrived: Vec::new(),
            forwarded: Vec::new(),
            in_flight: Vec::new(),
            in_seq: Vec::new(),
            next: Vec::new(),
            outbox: vec![Vec::new(); n],
            scratch: Vec::new(),
            send_seq: vec![0; n * n],
            recv_seq: vec![0; n * n],
            v_start: Vec::new(),
            monitors: MonitorReport::default(),
        };
        if !w.config.sink.is_none() {
            w.config.sink.emit(Record::Header {
                schema: SCHEMA_VERSION,
                n,
                f: book.f(),
                names: g.names().to_vec(),
                faulty: faulty.iter().map(|v| v.0).collect(),
                inputs: bits_string(inputs.iter().copied()),
                adversary: adversary.to_string(),
                total_rounds: book.total_rounds() as u64,
            })?;
        }
        w.settle()?;
        Ok(w)
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn states(&self) -> &[NodeState] {
        &self.states
    }

    fn wants(&self, level: TranscriptLevel) -> bool {
        self.config.level >= level && !self.config.sink.is_none()
    }

    fn outer_count(&self) -> usize {
        match self.book.schedule() {
            Schedule::Broadcast { .. } => 1,
            Schedule::Iterative(o) => o.len(),
        }
    }

    fn iter_count(&self, o: usize) -> usize {
        match self.book.schedule() {
            Schedule::Broadcast { .. } => 1,
            Schedule::Iterative(outers) => outers[o].iterations.len(),
        }
    }

    fn phase_count(&self, c: Cursor) -> usize {
        match self.book.schedule() {
            Schedule::Broadcast { .. } => 1,
            Schedule::Iterative(outers) => outers[c.outer].iterations[c.inner].phases.len() + 1,
        }
    }

    fn outer_faulty(&self, o: usize) -> NodeSet {
        match self.book.schedule() {
            Schedule::Broadcast { .. } => NodeSet::EMPTY,
            Schedule::Iterative(outers) => outers[o].faulty,
        }
    }

    fn bundle(book: &'a PlanBook, c: Cursor) -> &'a RouteBundle {
        match book.schedule() {
            Schedule::Broadcast { bundle, .. } => bundle,
            Schedule::Iterative(outers) => {
                let it = &outers[c.outer].iterations[c.inner];
                it.phases.get(c.phase).unwrap_or(&it.adopt)
            }
        }
    }

    /// Walks the cursor past boundaries and empty phases until a phase
    /// with routes is ready to start, or the schedule ends.
    fn settle(&mut self) -> Result<(), SimError> {
        loop {
            if self.done {
                return Ok(());
            }
            let c = self.cursor;
            if c.outer >= self.outer_count() {
                return self.finish_schedule();
            }
            if !self.outer_open {
                self.begin_outer()?;
            }
            if c.inner >= self.iter_count(c.outer) {
                self.end_outer();
                self.cursor = Cursor {
                    outer: c.outer + 1,
                    inner: 0,
                    phase: 0,
                };
                continue;
            }
            if !self.iter_open {
                self.begin_iteration();
            }
            if c.phase >= self.phase_count(c) {
                self.end_iteration()?;
                self.cursor = Cursor {
                    inner: c.inner + 1,
                    phase: 0,
                    ..c
                };
                continue;
            }
            let bundle = Self::bundle(self.book, c);
            if bundle.is_empty() {
                self.finish_phase(bundle);
                continue;
            }
            self.phase_round = 0;
            self.slots.clear();
            self.slots.resize(bundle.len(), None);
            self.arrived.clear();
            self.arrived.resize(bundle.len(), false);
            self.forwarded.clear();
            self.forwarded.resize(bundle.len(), 0);
            return Ok(());
        }
    }

    fn begin_outer(&mut self) -> Result<(), SimError> {
        self.outer_open = true;
        if self.wants(TranscriptLevel::Iterations) {
            let faulty = self.outer_faulty(self.cursor.outer).iter().map(|v| v.0).collect();
            self.config.sink.emit(Record::OuterBegin {
                outer: self.cursor.outer as u32,
                faulty,
                round: self.round,
            })?;
        }
        Ok(())
    }

    fn end_outer(&mut self) {
        self.outer_open = false;
        if self.outer_faulty(self.cursor.outer) == self.faulty {
            let ok = self.honest_agree();
            let o = self.cursor.outer;
            let v = self.v_string();
            self.monitors
                .agreement_at_fstar
                .check(ok, || format!("fault-free nodes disagree after OUTER iteration {o}: {v}"));
            self.fstar_passed = true;
        }
    }

    fn begin_iteration(&mut self) {
        self.iter_open = true;
        self.v_start.clear();
        self.v_start.extend(self.states.iter().map(|s| s.v));
        if let Schedule::Iterative(outers) = self.book.schedule() {
            let plan = &outers[self.cursor.outer].iterations[self.cursor.inner];
            for s in &mut self.states {
                s.t = None;
            }
            for i in plan.seeded() {
                self.states[i.0].t = Some(self.states[i.0].v);
            }
        }
    }

    fn end_iteration(&mut self) -> Result<(), SimError> {
        self.iter_open = false;
        let Cursor { outer, inner, .. } = self.cursor;
        let mut seen = [false; 2];
        for j in self.honest {
            seen[self.v_start[j.0].as_u8() as usize] = true;
        }
        for j in self.honest {
            let v = self.states[j.0].v;
            self.monitors.lemma1.check(seen[v.as_u8() as usize], || {
                format!("outer {outer} inner {inner}: node {} ends with {}, held by no fault-free node", j.0, v.as_char())
            });
        }
        if self.fstar_passed {
            let ok = self.honest_agree();
            let v = self.v_string();
            self.monitors
                .agreement_at_fstar
                .check(ok, || format!("agreement lost in outer {outer} inner {inner}: {v}"));
        }
        if self.wants(TranscriptLevel::Iterations) {
            let (case, a, s) = match self.book.schedule() {
                Schedule::Broadcast { source, .. } => (0, vec![], source.iter().map(|v| v.0).collect()),
                Schedule::Iterative(outers) => {
                    let p = &outers[outer].iterations[inner];
                    (
                        p.case.number(),
                        p.a.iter().map(|v| v.0).collect(),
                        p.s.iter().map(|v| v.0).collect(),
                    )
                }
            };
            let record = Record::Iteration {
                outer: outer as u32,
                inner: inner as u32,
                case,
                a,
                s,
                v_start: bits_string(self.v_start.iter().copied()),
                v_end: self.v_string(),
                round: self.round,
            };
            self.config.sink.emit(record)?;
        }
        Ok(())
    }

    fn v_string(&self) -> String {
        bits_string(self.states.iter().map(|s| s.v))
    }

    fn honest_agree(&self) -> bool {
        let mut it = self.honest.iter().map(|v| self.states[v.0].v);
        match it.next() {
            Some(first) => it.all(|b| b == first),
            None => true,
        }
    }

    /// Applies the receive rule of the phase at the cursor and moves on.
    fn finish_phase(&mut self, bundle: &RouteBundle) {
        let slots = &self.slots;
        match bundle.kind {
            PhaseKind::Propagate => {
                for (d, r) in bundle.groups() {
                    self.states[d.0].t = propagate_rule(&slots[r]);
                }
            }
            PhaseKind::Equality => {
                for (j, r) in bundle.groups() {
                    self.states[j.0].t = equality_rule(self.states[j.0].t, &slots[r]);
                }
            }
            PhaseKind::Adopt => {
                for (k, r) in bundle.groups() {
                    if let Some(b) = adopt_rule(&slots[r]) {
                        self.states[k.0].v = b;
                    }
                }
            }
            PhaseKind::Broadcast => {
                for (j, r) in bundle.groups() {
                    if let Some(b) = slots[r.start] {
                        self.states[j.0].v = b;
                    }
                }
            }
        }
        if let Schedule::Iterative(outers) = self.book.schedule() {
            let plan = &outers[self.cursor.outer].iterations[self.cursor.inner];
            if self.cursor.phase + 1 == plan.phases.len() {
                for j in plan.updated() {
                    if let Some(b) = self.states[j.0].t {
                        self.states[j.0].v = b;
                    }
                }
            }
        }
        self.cursor.phase += 1;
    }

    fn finish_schedule(&mut self) -> Result<(), SimError> {
        self.done = true;
        // Anything still in flight (only faulty nodes send in a final round)
        // is delivered and discarded so every link drains.
        let leftover = std::mem::take(&mut self.in_flight);
        let seqs = std::mem::take(&mut self.in_seq);
        for (m, seq) in leftover.iter().zip(seqs) {
            self.record_delivery(m, seq, false)?;
        }
        for link in 0..self.n * self.n {
            let (sent, got) = (self.send_seq[link], self.recv_seq[link]);
            let n = self.n;
            self.monitors.delivery.check(sent == got, || {
                format!("link {}->{}: {sent} sent, {got} delivered", link / n, link % n)
            });
        }
        if !self.fstar_passed {
            self.monitors
                .agreement_at_fstar
                .check(false, || "the schedule has no OUTER iteration for the faulty set".into());
        }
        let ok = self.honest_agree();
        let v = self.v_string();
        self.monitors.agreement.check(ok, || format!("fault-free decisions differ: {v}"));
        for j in self.honest {
            let d = self.states[j.0].v;
            let valid = self.honest.iter().any(|s| self.inputs[s.0] == d);
            self.monitors.validity.check(valid, || {
                format!("node {} decided {}, which no fault-free node had as input", j.0, d.as_char())
            });
        }
        if !self.config.sink.is_none() {
            self.config.sink.emit(Record::Decision {
                round: self.round,
                decisions: v,
            })?;
            let m = &self.monitors;
            let record = Record::Monitors {
                lemma1: m.lemma1.passed,
                agreement_at_fstar: m.agreement_at_fstar.passed,
                agreement: m.agreement.passed,
                validity: m.validity.passed,
                delivery: m.delivery.passed,
            };
            self.config.sink.emit(record)?;
            self.config.sink.flush()?;
        }
        Ok(())
    }

    fn record_delivery(&mut self, m: &Msg, seq: u64, accepted: bool) -> Result<(), SimError> {
        let link = m.from as usize * self.n + m.to as usize;
        let expect = self.recv_seq[link];
        self.recv_seq[link] += 1;
        let round = self.round;
        self.monitors.delivery.check(seq == expect, || {
            format!("link {}->{}: got seq {seq}, expected {expect} in round {round}", m.from, m.to)
        });
        if self.wants(TranscriptLevel::Full) {
            self.config.sink.emit(Record::Deliver {
                round,
                from: m.from as usize,
                to: m.to as usize,
                seq,
                accepted,
            })?;
        }
        Ok(())
    }

    /// Honest receive step for one message: store it if this node is the
    /// route's receiver, forward it if it is the next hop.
    fn accept(&mut self, bundle: &RouteBundle, tag: Tag, m: &Msg) -> bool {
        if m.tag != tag || m.route as usize >= bundle.len() {
            return false;
        }
        let r = m.route as usize;
        let route = bundle.route(r);
        let h = m.hop as usize;
        if h == 0 || h >= route.len() || route[h] != m.to || route[h - 1] != m.from {
            return false;
        }
        if h == route.len() - 1 {
            if self.arrived[r] {
                return false;
            }
            self.arrived[r] = true;
            self.slots[r] = m.value;
            return true;
        }
        let bit = 1u64 << h;
        if self.forwarded[r] & bit != 0 {
            return false;
        }
        self.forwarded[r] |= bit;
        self.outbox[m.to as usize].push(Msg {
            from: m.to,
            to: route[h + 1],
            hop: m.hop + 1,
            ..*m
        });
        true
    }

    /// Runs one synchronous round: deliver, let nodes react, let the
    /// adversary rewrite faulty outboxes, send, and close the phase if its
    /// last round has passed.
    pub fn step_round(&mut self, adversary: &mut dyn Adversary) -> Result<(), SimError> {
        if self.done {
            return Err(SimError::Finished);
        }
        let book = self.book;
        let c = self.cursor;
        let bundle = Self::bundle(book, c);
        let tag = Tag {
            outer: c.outer as u32,
            inner: c.inner as u32,
            phase: c.phase as u8,
        };

        let delivered = std::mem::take(&mut self.in_flight);
        let seqs = std::mem::take(&mut self.in_seq);
        for (m, &seq) in delivered.iter().zip(&seqs) {
            let accepted = self.accept(bundle, tag, m);
            self.record_delivery(m, seq, accepted)?;
        }

        if self.phase_round == 0 {
            let sends_v = bundle.kind.sends_v();
            for r in 0..bundle.len() {
                let route = bundle.route(r);
                let s = &self.states[route[0] as usize];
                self.outbox[route[0] as usize].push(Msg {
                    from: route[0],
                    to: route[1],
                    tag,
                    route: r as u32,
                    hop: 1,
                    value: if sends_v { Some(s.v) } else { s.t },
                });
            }
        }

        let g = book.graph();
        let mut next = std::mem::take(&mut self.next);
        next.clear();
        {
            let view = View {
                book,
                round: self.round,
                phase_round: self.phase_round,
                tag,
                kind: bundle.kind,
                bundle,
                states: &self.states,
                delivered: &delivered,
            };
            for node in 0..self.n {
                if self.faulty.contains(NodeId(node)) {
                    self.scratch.clear();
                    adversary.act(&view, NodeId(node), &self.outbox[node], &mut self.scratch);
                    for m in &self.scratch {
                        if m.to as usize >= self.n || !g.has_edge(NodeId(node), NodeId(m.to as usize)) {
                            return Err(SimError::NonEdge {
                                from: g.name(NodeId(node)).to_string(),
                                to: m.to.to_string(),
                                round: self.round,
                            });
                        }
                        next.push(Msg { from: node as u8, ..*m });
                    }
                    self.outbox[node].clear();
                } else {
                    next.append(&mut self.outbox[node]);
                }
            }
        }

        let mut in_seq = seqs;
        in_seq.clear();
        let full = self.wants(TranscriptLevel::Full);
        for m in &next {
            let link = m.from as usize * self.n + m.to as usize;
            let seq = self.send_seq[link];
            self.send_seq[link] += 1;
            in_seq.push(seq);
            if full {
                self.config.sink.emit(Record::Send {
                    round: self.round,
                    from: m.from as usize,
                    to: m.to as usize,
                    seq,
                    outer: m.tag.outer,
                    inner: m.tag.inner,
                    phase: m.tag.phase,
                    route: m.route,
                    hop: m.hop,
                    value: val_code(m.value),
                })?;
            }
        }
        self.messages += next.len() as u64;
        self.in_flight = next;
        self.in_seq = in_seq;
        self.next = delivered;

        self.round += 1;
        self.phase_round += 1;
        if self.phase_round == bundle.rounds() {
            self.finish_phase(bundle);
            self.settle()?;
        }
        Ok(())
    }

    pub fn finish(self) -> RunReport {
        RunReport {
            decisions: self.states.iter().map(|s| s.v).collect(),
            faulty: self.faulty,
            rounds: self.round,
            messages: self.messages,
            monitors: self.monitors,
        }
    }
}

/// Runs a full execution of `book` on `inputs` against `adversary`.
pub fn run(
    book: &PlanBook,
    inputs: &[Bit],
    adversary: &mut dyn Adversary,
    config: &mut RunConfig,
) -> Result<RunReport, SimError> {
    let faulty = adversary.faulty();
    let describe = adversary.describe();
    let mut world = World::new(book, inputs, faulty, &describe, config)?;
    while !world.is_done() {
        world.step_round(adversary)?;
    }
    Ok(world.finish())
}
