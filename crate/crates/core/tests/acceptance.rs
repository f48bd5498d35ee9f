//! Acceptance run: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use bcdg::condition::{check_screened, check_theorem1, equivalence_fuzz, FuzzMode};
use bcdg::digraph::max_disjoint_paths;
use bcdg::generators::{gen_clique_sink, gen_complete, gen_random, gen_two_clique};
use bcdg::nodeset::subsets_up_to;
use bcdg::protocol::verify_iteration;
use bcdg::relations::propagates;
use bcdg::simulator::{run, to_jsonl, Behavior, Byzantine, RunConfig, RunReport, TranscriptLevel};
use bcdg::{f0_consensus, multivalued_consensus, Adversary, Bit, DiGraph, NodeId, NodeSet, PlanBook};
use common::{bits_of, brute_force_disjoint, c3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, budget: Duration) -> Result<(), String> {
    ensure(elapsed <= budget, || format!("took {elapsed:.2?}, budget {budget:?}"))
}

fn feasibility_clique_sink() -> Outcome {
    let start = Instant::now();
    let g = gen_clique_sink(4).map_err(|e| e.to_string())?;
    let one = check_theorem1(&g, 1).map_err(|e| e.to_string())?;
    let two = check_theorem1(&g, 2).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(one.satisfied, || "f = 1 reported violated".into())?;
    ensure(!two.satisfied, || "f = 2 reported satisfied".into())?;
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("f=1 satisfied, f=2 violated in {elapsed:.2?}"))
}

fn feasibility_two_clique() -> Outcome {
    let start = Instant::now();
    let g = gen_two_clique(2).map_err(|e| e.to_string())?;
    let v = check_screened(&g, 2).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(v.satisfied, || format!("violated: {:?}", v.witness))?;
    within(elapsed, Duration::from_secs(600))?;
    Ok(format!(
        "satisfied; {} fault sets, {} partitions in {elapsed:.2?}",
        v.fault_sets, v.examined
    ))
}

fn two_clique_worked_example() -> Outcome {
    let g = gen_two_clique(2).map_err(|e| e.to_string())?;
    let set = |names: &[&str]| g.set_of(names).unwrap();
    let f = set(&["u1", "u2"]);
    let k2 = set(&["w1", "w2", "w3", "w4", "w5", "w6", "w7"]);
    let rest = set(&["u3", "u4", "u5", "u6", "u7"]);
    let forward = propagates(&g, k2, rest, f, 2).map_err(|e| e.to_string())?;
    let backward = propagates(&g, rest, k2, f, 2).map_err(|e| e.to_string())?;
    ensure(forward.verdict, || "K2 does not propagate to {u3..u7}".into())?;
    ensure(!backward.verdict, || "{u3..u7} propagates to K2".into())?;
    let fail = backward.failure.unwrap();
    Ok(format!(
        "K2 => {{u3..u7}} true, reverse false ({} reaches only {} paths)",
        g.name(fail.target),
        fail.paths
    ))
}

fn menger_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d656e);
    let (mut probes, mut mismatches) = (0u64, 0u64);
    let mut first = None;
    for i in 0..500 {
        let n = 2 + i % 6;
        let g = gen_random(n, rng.gen_range(0.1..1.0), rng.gen()).map_err(|e| e.to_string())?;
        for target in g.nodes() {
            for _ in 0..4 {
                let (mut sources, mut excluded) = (NodeSet::EMPTY, NodeSet::EMPTY);
                for v in g.nodes() - NodeSet::singleton(target) {
                    match rng.gen_range(0..3) {
                        0 => sources.insert(v),
                        1 => excluded.insert(v),
                        _ => {}
                    }
                }
                let got = max_disjoint_paths(&g, sources, target, excluded, n).map_err(|e| e.to_string())?;
                let want = brute_force_disjoint(&g, sources, target, excluded);
                probes += 1;
                if got.len() != want || got.verify(&g).is_err() {
                    mismatches += 1;
                    first.get_or_insert(format!("graph {i}, target {}: flow {} vs {want}", target.0, got.len()));
                }
            }
        }
    }
    ensure(mismatches == 0, || format!("{mismatches} mismatches; first {}", first.unwrap()))?;
    Ok(format!("500 graphs, {probes} probes, 0 mismatches"))
}

fn condition_equivalence() -> Outcome {
    let start = Instant::now();
    let exhaustive = equivalence_fuzz(4, 1, FuzzMode::Exhaustive).map_err(|e| e.to_string())?;
    ensure(exhaustive.graphs == 4096, || format!("{} graphs enumerated", exhaustive.graphs))?;
    ensure(exhaustive.disagreements == 0, || {
        format!("{} disagreements at n = 4", exhaustive.disagreements)
    })?;
    let mut random = 0;
    for (k, (n, f)) in [(4, 1), (5, 1), (6, 1), (7, 1), (5, 2), (6, 2), (7, 2), (7, 0)].into_iter().enumerate() {
        let r = equivalence_fuzz(n, f, FuzzMode::Random { trials: 125, seed: 100 + k as u64 })
            .map_err(|e| e.to_string())?;
        ensure(r.disagreements == 0, || format!("{} disagreements at n = {n}, f = {f}", r.disagreements))?;
        random += r.graphs;
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(300))?;
    Ok(format!("4096 exhaustive + {random} random graphs, 0 disagreements in {elapsed:.2?}"))
}

fn check_run(report: &RunReport, what: &dyn Fn() -> String) -> Result<(), String> {
    ensure(report.monitors.all_passed(), || {
        format!("{}: {}", what(), report.monitors.first_failure())
    })
}

/// Every faulty set against every scripted strategy, then 200 random
/// adversaries cycling through the faulty sets.
fn fuzz_graph(g: &DiGraph, f: usize, seed: u64) -> Result<u64, String> {
    let book = PlanBook::new(g, f).map_err(|e| e.to_string())?;
    let sets = subsets_up_to(g.nodes(), f);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut runs = 0;
    let mut go = |adv: &mut dyn Adversary, inputs: Vec<Bit>| -> Result<(), String> {
        let report = run(&book, &inputs, adv, &mut RunConfig::default()).map_err(|e| e.to_string())?;
        runs += 1;
        check_run(&report, &|| format!("{} with inputs {inputs:?}", adv.describe()))
    };
    for &faulty in &sets {
        for behavior in Behavior::scripted() {
            let inputs = bits_of(rng.gen(), g.n());
            go(&mut Byzantine::new(faulty, behavior), inputs)?;
        }
    }
    for s in 0..200u64 {
        let faulty = sets[s as usize % sets.len()];
        let inputs = bits_of(rng.gen(), g.n());
        go(&mut Byzantine::new(faulty, Behavior::Random { seed: seed ^ s }), inputs)?;
    }
    Ok(runs)
}

fn protocol_fuzz() -> Outcome {
    let start = Instant::now();
    let small = fuzz_graph(&gen_clique_sink(4).unwrap(), 1, 11)?;
    let large = fuzz_graph(&gen_two_clique(2).unwrap(), 2, 22)?;
    Ok(format!(
        "{small} clique-sink runs + {large} two-clique runs, all monitors passed in {:.1?}",
        start.elapsed()
    ))
}

fn plan_invariants() -> Outcome {
    let mut corpus: Vec<(String, DiGraph, usize)> = vec![
        ("clique-sink k=4".into(), gen_clique_sink(4).unwrap(), 1),
        ("clique-sink k=7".into(), gen_clique_sink(7).unwrap(), 2),
        ("complete k=4".into(), gen_complete(4).unwrap(), 1),
        ("complete k=5".into(), gen_complete(5).unwrap(), 1),
        ("complete k=7".into(), gen_complete(7).unwrap(), 2),
        ("complete k=8".into(), gen_complete(8).unwrap(), 2),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut candidates = 0;
    while corpus.len() < 46 && candidates < 5000 {
        candidates += 1;
        let n = rng.gen_range(4..=8);
        let g = gen_random(n, rng.gen_range(0.6..1.0), rng.gen()).unwrap();
        let f = if n >= 7 && rng.gen_bool(0.3) { 2 } else { 1 };
        if check_theorem1(&g, f).unwrap().satisfied {
            corpus.push((format!("random #{candidates}"), g, f));
        }
    }
    let mut plans = 0u64;
    for (name, g, f) in &corpus {
        ensure(check_theorem1(g, *f).unwrap().satisfied, || format!("{name} is infeasible"))?;
        let book = PlanBook::new(g, *f).map_err(|e| format!("{name}: {e}"))?;
        for it in book.outers().iter().flat_map(|o| &o.iterations) {
            verify_iteration(g, *f, it).map_err(|e| format!("{name}, F = {:?}: {e}", it.faulty))?;
            plans += 1;
        }
    }
    Ok(format!("{} graphs, {plans} iteration plans re-verified, 0 failures", corpus.len()))
}

fn f0_exhaustive() -> Outcome {
    let mut checked = 0;
    for (g, root) in [(c3(), "a"), (gen_clique_sink(4).unwrap(), "v1")] {
        let r = g.id_of(root).unwrap();
        for code in 0..1u64 << g.n() {
            let inputs = bits_of(code, g.n());
            let out = f0_consensus(&g, &inputs).map_err(|e| e.to_string())?;
            ensure(out.iter().all(|&b| b == inputs[r.0]), || {
                format!("inputs {inputs:?} gave {out:?}, expected {root}'s input")
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} input vectors, all decide the representative's input"))
}

fn multivalued() -> Outcome {
    let g = gen_clique_sink(4).unwrap();
    let book = Arc::new(PlanBook::new(&g, 1).unwrap());
    let x = g.set_of(&["x"]).unwrap();
    let v3 = g.set_of(&["v3"]).unwrap();
    let mut checked = 0;
    for faulty in [NodeSet::EMPTY, x, v3] {
        let honest: Vec<usize> = (g.nodes() - faulty).iter().map(|v| v.0).collect();
        let adv = |bit: u32| -> Box<dyn Adversary> { Box::new(Byzantine::new(faulty, Behavior::Random { seed: bit as u64 })) };
        let out = multivalued_consensus(&book, &[0xA5; 5], 8, adv).map_err(|e| e.to_string())?;
        ensure(honest.iter().all(|&i| out[i] == 0xA5), || format!("unanimous 0xA5 gave {out:02x?}"))?;
        let inputs = [0x00, 0xFF, 0x0F, 0xF0, 0x5A];
        let out = multivalued_consensus(&book, &inputs, 8, adv).map_err(|e| e.to_string())?;
        let word = out[honest[0]];
        ensure(honest.iter().all(|&i| out[i] == word), || format!("split inputs gave {out:02x?}"))?;
        for bit in 0..8 {
            let b = word >> bit & 1;
            ensure(honest.iter().any(|&i| inputs[i] >> bit & 1 == b), || {
                format!("bit {bit} of {word:02x} is no fault-free input's bit")
            })?;
        }
        checked += 2;
    }
    Ok(format!("{checked} 8-bit instances; unanimous word kept, split words agreed and per-bit valid"))
}

fn determinism() -> Outcome {
    let cases: Vec<(DiGraph, usize, NodeSet, Behavior, TranscriptLevel)> = vec![
        (gen_clique_sink(4).unwrap(), 1, NodeSet::singleton(NodeId(4)), Behavior::Equivocate, TranscriptLevel::Full),
        (gen_clique_sink(4).unwrap(), 1, NodeSet::singleton(NodeId(1)), Behavior::Random { seed: 5 }, TranscriptLevel::Full),
        (gen_complete(5).unwrap(), 1, NodeSet::singleton(NodeId(2)), Behavior::Random { seed: 6 }, TranscriptLevel::Full),
        (c3(), 0, NodeSet::EMPTY, Behavior::Silent, TranscriptLevel::Full),
        (gen_two_clique(2).unwrap(), 2, NodeSet::from_bits(1 | 1 << 10), Behavior::Random { seed: 8 }, TranscriptLevel::Iterations),
    ];
    let mut bytes = 0;
    for (g, f, faulty, behavior, level) in cases {
        let book = PlanBook::new(&g, f).map_err(|e| e.to_string())?;
        let inputs = bits_of(0b1011_0110_1001, g.n());
        let once = || -> Result<String, String> {
            let mut cfg = RunConfig::memory(level);
            run(&book, &inputs, &mut Byzantine::new(faulty, behavior.clone()), &mut cfg).map_err(|e| e.to_string())?;
            Ok(to_jsonl(&cfg.take_records()))
        };
        let (a, b) = (once()?, once()?);
        ensure(a == b, || format!("transcripts differ on a {}-node graph", g.n()))?;
        bytes += a.len();
    }
    Ok(format!("5 repeated runs, {bytes} transcript bytes, identical"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("clique-sink feasibility", feasibility_clique_sink),
        ("two-clique feasibility", feasibility_two_clique),
        ("two-clique propagation example", two_clique_worked_example),
        ("Menger oracle", menger_oracle),
        ("condition-form equivalence", condition_equivalence),
        ("protocol correctness fuzz", protocol_fuzz),
        ("plan invariant re-verification", plan_invariants),
        ("f = 0 broadcast", f0_exhaustive),
        ("multi-valued consensus", multivalued),
        ("transcript determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
