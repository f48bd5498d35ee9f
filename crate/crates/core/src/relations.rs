//! The two set relations the feasibility conditions are stated in.
//!
//! * `A -> B` ([`arrow`]): more than `f` distinct nodes of `A` have an edge
//!   into `B`.
//! * `A` propagates to `B` in `V - F` ([`propagates`]): `B` is empty, or every
//!   `b` in `B` has `f + 1` vertex-disjoint `(A, b)`-paths avoiding `F`.

use thiserror::Error;

use crate::digraph::{disjoint_path_count, max_disjoint_paths, DiGraph, GraphError, NodeId, NodeSet, PathSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RelationError {
    #[error("sets {0} and {1} must be disjoint")]
    Overlap(&'static str, &'static str),
    #[error("target set must be non-empty")]
    EmptyTarget,
    #[error("|F| = {0} exceeds f = {1}")]
    TooManyFaulty(usize, usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Whether `a` holds more than `f` distinct incoming neighbours of `b`.
pub fn arrow(g: &DiGraph, a: NodeSet, b: NodeSet, f: usize) -> Result<bool, RelationError> {
    g.check_set(a)?;
    g.check_set(b)?;
    if !a.is_disjoint(b) {
        return Err(RelationError::Overlap("A", "B"));
    }
    if b.is_empty() {
        return Err(RelationError::EmptyTarget);
    }
    Ok(arrow_unchecked(g, a, b, f))
}

#[inline]
pub(crate) fn arrow_unchecked(g: &DiGraph, a: NodeSet, b: NodeSet, f: usize) -> bool {
    (g.incoming_neighbors_unchecked(b) & a).len() > f
}

/// Why a propagate check failed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropagateFailure {
    /// First target (by index) lacking `f + 1` disjoint paths.
    pub target: NodeId,
    /// How many disjoint paths it does have.
    pub paths: usize,
    /// A vertex cut of that size separating `A` from the target in `G_{-F}`.
    pub cut: NodeSet,
}

/// Outcome of [`propagates`] with its evidence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropagateCert {
    pub verdict: bool,
    /// One entry per target, ascending, each with exactly `f + 1` paths.
    /// Filled only when the verdict is true.
    pub paths: Vec<PathSet>,
    pub failure: Option<PropagateFailure>,
}

fn check_propagate_args(g: &DiGraph, a: NodeSet, b: NodeSet, faulty: NodeSet, f: usize) -> Result<(), RelationError> {
    g.check_set(a)?;
    g.check_set(b)?;
    g.check_set(faulty)?;
    if !a.is_disjoint(b) {
        return Err(RelationError::Overlap("A", "B"));
    }
    if !a.is_disjoint(faulty) {
        return Err(RelationError::Overlap("A", "F"));
    }
    if !b.is_disjoint(faulty) {
        return Err(RelationError::Overlap("B", "F"));
    }
    if faulty.len() > f {
        return Err(RelationError::TooManyFaulty(faulty.len(), f));
    }
    Ok(())
}

/// Decides whether `a` propagates in `V - faulty` to `b`, keeping the paths
/// (on success) or the first failing target and its cut (on failure).
pub fn propagates(g: &DiGraph, a: NodeSet, b: NodeSet, faulty: NodeSet, f: usize) -> Result<PropagateCert, RelationError> {
    check_propagate_args(g, a, b, faulty, f)?;
    let k = f + 1;
    if !b.is_empty() && a.is_empty() {
        return Ok(PropagateCert {
            verdict: false,
            paths: Vec::new(),
            failure: Some(PropagateFailure {
                target: b.first().unwrap(),
                paths: 0,
                cut: NodeSet::EMPTY,
            }),
        });
    }
    let mut paths = Vec::with_capacity(b.len());
    for target in b {
        let ps = max_disjoint_paths(g, a, target, faulty, k)?;
        if let Some(cut) = ps.cut {
            return Ok(PropagateCert {
                verdict: false,
                paths: Vec::new(),
                failure: Some(PropagateFailure {
                    target,
                    paths: ps.len(),
                    cut,
                }),
            });
        }
        paths.push(ps);
    }
    Ok(PropagateCert {
        verdict: true,
        paths,
        failure: None,
    })
}

/// Verdict of [`propagates`] without building certificates.
pub fn propagates_fast(g: &DiGraph, a: NodeSet, b: NodeSet, faulty: NodeSet, f: usize) -> Result<bool, RelationError> {
    check_propagate_args(g, a, b, faulty, f)?;
    Ok(propagates_unchecked(g, a, b, faulty, f))
}

pub(crate) fn propagates_unchecked(g: &DiGraph, a: NodeSet, b: NodeSet, faulty: NodeSet, f: usize) -> bool {
    if b.is_empty() {
        return true;
    }
    if a.len() <= f {
        return false;
    }
    b.iter().all(|t| disjoint_path_count(g, a, t, faulty, f + 1) > f)
}
