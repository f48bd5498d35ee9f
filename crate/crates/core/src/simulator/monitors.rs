//! Correctness monitors. The engine evaluates them online; the functions
//! here re-evaluate them from a recorded transcript.

use std::collections::BTreeMap;

use serde::Serialize;

use super::transcript::Record;
use crate::digraph::NodeSet;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MonitorVerdict {
    pub passed: bool,
    pub checks: u64,
    /// The first violation.
    pub failure: Option<String>,
}

impl Default for MonitorVerdict {
    fn default() -> Self {
        MonitorVerdict {
            passed: true,
            checks: 0,
            failure: None,
        }
    }
}

impl MonitorVerdict {
    pub(crate) fn check(&mut self, ok: bool, why: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok && self.passed {
            self.passed = false;
            self.failure = Some(why());
        }
    }

    fn fail(why: String) -> Self {
        MonitorVerdict {
            passed: false,
            checks: 0,
            failure: Some(why),
        }
    }
}

/// Verdicts of every monitor for one run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MonitorReport {
    /// Every fault-free `v` after an iteration was some fault-free `v`
    /// before it.
    pub lemma1: MonitorVerdict,
    /// Fault-free nodes agree from the end of the OUTER iteration whose
    /// `F` is the actual faulty set onwards.
    pub agreement_at_fstar: MonitorVerdict,
    pub agreement: MonitorVerdict,
    /// Every decision is some fault-free input.
    pub validity: MonitorVerdict,
    /// Per-link sequence numbers arrive in order, once each.
    pub delivery: MonitorVerdict,
}

impl MonitorReport {
    fn all(&self) -> [(&'static str, &MonitorVerdict); 5] {
        [
            ("lemma1", &self.lemma1),
            ("agreement_at_fstar", &self.agreement_at_fstar),
            ("agreement", &self.agreement),
            ("validity", &self.validity),
            ("delivery", &self.delivery),
        ]
    }

    pub fn all_passed(&self) -> bool {
        self.all().iter().all(|(_, m)| m.passed)
    }

    /// `"name: reason"` for the first failed monitor, or an empty string.
    pub fn first_failure(&self) -> String {
        self.all()
            .iter()
            .find(|(_, m)| !m.passed)
            .map(|(name, m)| format!("{name}: {}", m.failure.as_deref().unwrap_or("failed")))
            .unwrap_or_default()
    }
}

fn header_faulty(records: &[Record]) -> Option<NodeSet> {
    records.iter().find_map(|r| match r {
        Record::Header { faulty, .. } => Some(faulty.iter().copied().collect()),
        _ => None,
    })
}

fn values_at(s: &str, nodes: NodeSet) -> impl Iterator<Item = (usize, char)> + '_ {
    s.chars().enumerate().filter(move |(i, _)| nodes.contains(crate::digraph::NodeId(*i)))
}

/// Re-checks validity preservation from the iteration records (level
/// `iterations` or higher).
pub fn monitor_lemma1(records: &[Record]) -> MonitorVerdict {
    let Some(faulty) = header_faulty(records) else {
        return MonitorVerdict::fail("transcript has no header".into());
    };
    let mut verdict = MonitorVerdict::default();
    for r in records {
        if let Record::Iteration {
            outer,
            inner,
            v_start,
            v_end,
            ..
        } = r
        {
            let honest = NodeSet::full(v_start.len()) - faulty;
            let start: Vec<char> = values_at(v_start, honest).map(|(_, c)| c).collect();
            for (j, c) in values_at(v_end, honest) {
                verdict.check(start.contains(&c), || {
                    format!("outer {outer} inner {inner}: node {j} ends with {c}, held by no fault-free node")
                });
            }
        }
    }
    verdict
}

fn uniform(s: &str, honest: NodeSet) -> bool {
    let mut vals = values_at(s, honest).map(|(_, c)| c);
    match vals.next() {
        Some(first) => vals.all(|c| c == first),
        None => true,
    }
}

/// Re-checks agreement from the end of the OUTER iteration with `F = fstar`
/// through the final decision.
pub fn monitor_agreement_at_fstar(records: &[Record], fstar: NodeSet) -> MonitorVerdict {
    let target = records.iter().find_map(|r| match r {
        Record::OuterBegin { outer, faulty, .. } if faulty.iter().copied().collect::<NodeSet>() == fstar => {
            Some(*outer)
        }
        _ => None,
    });
    let Some(target) = target else {
        return MonitorVerdict::fail(format!("no OUTER iteration with F = {fstar:?}"));
    };
    let mut verdict = MonitorVerdict::default();
    let last_of_target = records
        .iter()
        .rposition(|r| matches!(r, Record::Iteration { outer, .. } if *outer == target));
    let from = last_of_target.unwrap_or_else(|| {
        records
            .iter()
            .position(|r| matches!(r, Record::OuterBegin { outer, .. } if *outer == target))
            .unwrap()
    });
    for r in &records[from..] {
        match r {
            Record::Iteration { outer, inner, v_end, .. } => {
                let honest = NodeSet::full(v_end.len()) - fstar;
                verdict.check(uniform(v_end, honest), || {
                    format!("fault-free nodes disagree after outer {outer} inner {inner}: {v_end}")
                });
            }
            Record::Decision { decisions, .. } => {
                let honest = NodeSet::full(decisions.len()) - fstar;
                verdict.check(uniform(decisions, honest), || {
                    format!("fault-free decisions disagree: {decisions}")
                });
            }
            _ => {}
        }
    }
    if verdict.checks == 0 {
        verdict.check(false, || "nothing recorded after the F* iteration".into());
    }
    verdict
}

/// Re-checks exactly-once FIFO delivery per link from a `full` transcript:
/// sequence numbers on each link start at 0 without gaps, and every send is
/// delivered exactly once, in order, one round later.
pub fn monitor_delivery(records: &[Record]) -> MonitorVerdict {
    let mut verdict = MonitorVerdict::default();
    let mut sent: BTreeMap<(usize, usize), Vec<u64>> = BTreeMap::new();
    let mut delivered: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for r in records {
        match *r {
            Record::Send {
                round, from, to, seq, ..
            } => {
                let link = sent.entry((from, to)).or_default();
                verdict.check(seq == link.len() as u64, || {
                    format!("link {from}->{to}: send seq {seq}, expected {}", link.len())
                });
                link.push(round);
            }
            Record::Deliver {
                round, from, to, seq, ..
            } => {
                let next = delivered.entry((from, to)).or_default();
                let sent_round = sent.get(&(from, to)).and_then(|l| l.get(seq as usize)).copied();
                verdict.check(seq == *next && sent_round == Some(round.wrapping_sub(1)), || {
                    format!("link {from}->{to}: delivered seq {seq} in round {round}, expected seq {next}")
                });
                *next += 1;
            }
            _ => {}
        }
    }
    for (&(from, to), rounds) in &sent {
        let got = delivered.get(&(from, to)).copied().unwrap_or(0);
        verdict.check(got == rounds.len() as u64, || {
            format!("link {from}->{to}: {} sent, {got} delivered", rounds.len())
        });
    }
    verdict
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(faulty: Vec<usize>) -> Record {
        Record::Header {
            schema: 1,
            n: 3,
            f: 1,
            names: vec!["a".into(), "b".into(), "c".into()],
            faulty,
            inputs: "011".into(),
            adversary: "test".into(),
            total_rounds: 0,
        }
    }

    fn iteration(outer: u32, inner: u32, v_start: &str, v_end: &str) -> Record {
        Record::Iteration {
            outer,
            inner,
            case: 1,
            a: vec![],
            s: vec![],
            v_start: v_start.into(),
            v_end: v_end.into(),
            round: 0,
        }
    }

    #[test]
    fn lemma1_accepts_and_rejects() {
        let good = vec![header(vec![2]), iteration(0, 0, "011", "111"), iteration(0, 1, "111", "110")];
        assert!(monitor_lemma1(&good).passed);
        // Node 2 is faulty; its 0 must not count as a fault-free start value.
        let bad = vec![header(vec![2]), iteration(0, 0, "110", "100")];
        let v = monitor_lemma1(&bad);
        assert!(!v.passed);
        assert!(v.failure.unwrap().contains("node 1"));
        assert!(!monitor_lemma1(&[iteration(0, 0, "0", "1")]).passed);
    }

    #[test]
    fn agreement_accepts_and_rejects() {
        let fstar = NodeSet::from_bits(0b100);
        let outer = |o, f: Vec<usize>| Record::OuterBegin {
            outer: o,
            faulty: f,
            round: 0,
        };
        let good = vec![
            header(vec![2]),
            outer(0, vec![]),
            iteration(0, 0, "010", "011"),
            outer(1, vec![2]),
            iteration(1, 0, "011", "010"),
            iteration(1, 1, "010", "111"),
            Record::Decision {
                round: 9,
                decisions: "110".into(),
            },
        ];
        assert!(monitor_agreement_at_fstar(&good, fstar).passed);
        let mut bad = good.clone();
        bad[6] = Record::Decision {
            round: 9,
            decisions: "100".into(),
        };
        assert!(!monitor_agreement_at_fstar(&bad, fstar).passed);
        assert!(!monitor_agreement_at_fstar(&good, NodeSet::from_bits(0b1)).passed);
    }

    #[test]
    fn delivery_accepts_and_rejects() {
        let send = |round, seq| Record::Send {
            round,
            from: 0,
            to: 1,
            seq,
            outer: 0,
            inner: 0,
            phase: 0,
            route: 0,
            hop: 1,
            value: Some(1),
        };
        let deliver = |round, seq| Record::Deliver {
            round,
            from: 0,
            to: 1,
            seq,
            accepted: true,
        };
        assert!(monitor_delivery(&[send(0, 0), send(0, 1), deliver(1, 0), deliver(1, 1)]).passed);
        assert!(!monitor_delivery(&[send(0, 0), send(0, 1), deliver(1, 1), deliver(1, 0)]).passed);
        assert!(!monitor_delivery(&[send(0, 0), deliver(1, 0), deliver(1, 0)]).passed);
        assert!(!monitor_delivery(&[send(0, 0)]).passed);
    }
}
