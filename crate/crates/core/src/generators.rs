//! Constructors for the named graph families and seeded random digraphs.

use rand::RngCore;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digraph::{DiGraph, GraphError, MAX_NODES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("two-clique networks need a positive even f, got {0}")]
    OddOrZeroF(usize),
    #[error("clique size must be at least 2, got {0}")]
    CliqueTooSmall(usize),
    #[error("edge probability must lie in [0, 1], got {0}")]
    Probability(f64),
    #[error("graph would have {0} nodes; at most {MAX_NODES} are supported")]
    TooLarge(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Parameters of one generated family member.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FamilySpec {
    TwoClique { f: usize },
    CliqueSink { k: usize },
    Complete { k: usize },
    Random { n: usize, p: f64, seed: u64 },
}

impl FamilySpec {
    pub fn generate(&self) -> Result<DiGraph, GenError> {
        match *self {
            FamilySpec::TwoClique { f } => gen_two_clique(f),
            FamilySpec::CliqueSink { k } => gen_clique_sink(k),
            FamilySpec::Complete { k } => gen_complete(k),
            FamilySpec::Random { n, p, seed } => gen_random(n, p, seed),
        }
    }
}

/// The 2-clique network for an even `f > 0`: cliques `u1..u_{3f+1}` and
/// `w1..w_{3f+1}` (indices `0..=3f` and `3f+1..=6f+1`), with links
/// `u_i -> w_i` for `i <= 3f/2` and `w_i -> u_i` for `3f/2 < i <= 3f`, plus
/// both directions between `u_{3f+1}` and `w_{3f+1}`.
pub fn gen_two_clique(f: usize) -> Result<DiGraph, GenError> {
    if f == 0 || f % 2 != 0 {
        return Err(GenError::OddOrZeroF(f));
    }
    let k = 3 * f + 1;
    if 2 * k > MAX_NODES {
        return Err(GenError::TooLarge(2 * k));
    }
    let names: Vec<String> = (1..=k)
        .map(|i| format!("u{i}"))
        .chain((1..=k).map(|i| format!("w{i}")))
        .collect();
    let u = |i: usize| i - 1;
    let w = |i: usize| k + i - 1;
    let mut edges = Vec::new();
    for i in 1..=k {
        for j in 1..=k {
            if i != j {
                edges.push((u(i), u(j)));
                edges.push((w(i), w(j)));
            }
        }
    }
    let half = 3 * f / 2;
    for i in (1..=half).chain([k]) {
        edges.push((u(i), w(i)));
    }
    for i in (half + 1..=3 * f).chain([k]) {
        edges.push((w(i), u(i)));
    }
    Ok(DiGraph::with_names(names, edges)?)
}

/// A complete digraph on `v1..vk` plus a sink `x` fed by every `v_i`.
pub fn gen_clique_sink(k: usize) -> Result<DiGraph, GenError> {
    if k < 2 {
        return Err(GenError::CliqueTooSmall(k));
    }
    if k + 1 > MAX_NODES {
        return Err(GenError::TooLarge(k + 1));
    }
    let mut names: Vec<String> = (1..=k).map(|i| format!("v{i}")).collect();
    names.push("x".into());
    let edges = (0..k)
        .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
        .chain((0..k).map(|i| (i, k)));
    Ok(DiGraph::with_names(names, edges)?)
}

/// The complete digraph on `v1..vk`.
pub fn gen_complete(k: usize) -> Result<DiGraph, GenError> {
    if k < 2 {
        return Err(GenError::CliqueTooSmall(k));
    }
    if k > MAX_NODES {
        return Err(GenError::TooLarge(k));
    }
    Ok(DiGraph::complete((1..=k).map(|i| format!("v{i}")).collect())?)
}

/// Each ordered pair `(i, j)`, `i != j`, visited row-major, is kept when
/// `(x >> 11) * 2^-53 < p` for the next output `x` of xoshiro256++ seeded
/// through `seed_from_u64(seed)` (SplitMix64 expansion). Nodes are named
/// `n0, n1, ...`.
pub fn gen_random(n: usize, p: f64, seed: u64) -> Result<DiGraph, GenError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(GenError::Probability(p));
    }
    if n == 0 || n > MAX_NODES {
        return Err(GenError::TooLarge(n));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            if u < p {
                edges.push((i, j));
            }
        }
    }
    Ok(DiGraph::with_names((0..n).map(|i| format!("n{i}")).collect(), edges)?)
}

/// The graph whose edges are the set bits of `code`, in row-major order of
/// ordered pairs `(i, j)`, `i != j`. Used for exhaustive enumeration.
pub fn graph_from_code(n: usize, code: u64) -> DiGraph {
    let mut edges = Vec::new();
    let mut bit = 0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if code >> bit & 1 == 1 {
                edges.push((i, j));
            }
            bit += 1;
        }
    }
    DiGraph::from_edges(n, edges).expect("enumerated edges are simple")
}
