//! Graph JSON and DOT encodings.
//!
//! JSON: `{"nodes":["a","b"],"edges":[["a","b"]]}` with edges in ascending
//! `(tail, head)` index order. DOT: one quoted node statement per line, then
//! one edge statement per line in the same order. Both encodings written by
//! this module parse back to the same graph and re-encode to the same bytes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{DiGraph, GraphError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed graph JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed DOT at line {line}: {msg}")]
    Dot { line: usize, msg: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Serialized form of a graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub nodes: Vec<String>,
    pub edges: Vec<[String; 2]>,
}

impl From<&DiGraph> for GraphDoc {
    fn from(g: &DiGraph) -> Self {
        GraphDoc {
            nodes: g.names().to_vec(),
            edges: g
                .edges()
                .map(|(i, j)| [g.name(i).to_string(), g.name(j).to_string()])
                .collect(),
        }
    }
}

impl TryFrom<GraphDoc> for DiGraph {
    type Error = GraphError;

    fn try_from(doc: GraphDoc) -> Result<Self, GraphError> {
        let index: std::collections::HashMap<&str, usize> = doc
            .nodes
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let lookup = |s: &str| {
            index
                .get(s)
                .copied()
                .ok_or_else(|| GraphError::UnknownName(s.to_string()))
        };
        let edges = doc
            .edges
            .iter()
            .map(|[a, b]| Ok((lookup(a)?, lookup(b)?)))
            .collect::<Result<Vec<_>, GraphError>>()?;
        DiGraph::with_names(doc.nodes.clone(), edges)
    }
}

impl DiGraph {
    /// Compact JSON terminated by a newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(&GraphDoc::from(self)).expect("graph doc serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, IoError> {
        let doc: GraphDoc = serde_json::from_str(text)?;
        Ok(DiGraph::try_from(doc)?)
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph G {\n");
        for name in self.names() {
            s.push_str(&format!("  {};\n", quote(name)));
        }
        for (i, j) in self.edges() {
            s.push_str(&format!("  {} -> {};\n", quote(self.name(i)), quote(self.name(j))));
        }
        s.push_str("}\n");
        s
    }

    /// Parses the DOT subset produced by [`to_dot`](Self::to_dot).
    pub fn from_dot(text: &str) -> Result<Self, IoError> {
        let mut names: Vec<String> = Vec::new();
        let mut edges: Vec<(String, String)> = Vec::new();
        let mut opened = false;
        let mut closed = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |msg: &str| IoError::Dot {
                line,
                msg: msg.to_string(),
            };
            let t = raw.trim();
            if t.is_empty() {
                continue;
            }
            if closed {
                return Err(err("content after closing brace"));
            }
            if !opened {
                if t.starts_with("digraph") && t.ends_with('{') {
                    opened = true;
                    continue;
                }
                return Err(err("expected `digraph ... {`"));
            }
            if t == "}" {
                closed = true;
                continue;
            }
            let body = t.strip_suffix(';').unwrap_or(t).trim();
            let (first, rest) = unquote(body).ok_or_else(|| err("expected quoted node name"))?;
            let rest = rest.trim();
            if rest.is_empty() {
                names.push(first);
            } else if let Some(tail) = rest.strip_prefix("->") {
                let (second, rest) =
                    unquote(tail.trim()).ok_or_else(|| err("expected quoted edge head"))?;
                if !rest.trim().is_empty() {
                    return Err(err("trailing tokens after edge"));
                }
                edges.push((first, second));
            } else {
                return Err(err("expected `;` or `->`"));
            }
        }
        if !closed {
            return Err(IoError::Dot {
                line: text.lines().count(),
                msg: "missing closing brace".into(),
            });
        }
        let doc = GraphDoc {
            nodes: names,
            edges: edges.into_iter().map(|(a, b)| [a, b]).collect(),
        };
        Ok(DiGraph::try_from(doc)?)
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Splits a leading quoted string off `s`.
fn unquote(s: &str) -> Option<(String, &str)> {
    let mut chars = s.char_indices();
    match chars.next() {
        Some((_, '"')) => {}
        _ => return None,
    }
    let mut out = String::new();
    let mut escaped = false;
    for (i, c) in chars {
        if escaped {
            out.push(c);
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c == '"' {
            return Some((out, &s[i + 1..]));
        } else {
            out.push(c);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_random, gen_two_clique};
    use proptest::prelude::*;

    #[test]
    fn json_is_byte_stable() {
        let g = gen_two_clique(2).unwrap();
        let s = g.to_json();
        let back = DiGraph::from_json(&s).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_json(), s);
    }

    #[test]
    fn dot_handles_awkward_names() {
        let g = DiGraph::with_names(vec!["a \"q\"".into(), "b\\c".into()], [(0, 1)]).unwrap();
        let d = g.to_dot();
        assert_eq!(DiGraph::from_dot(&d).unwrap(), g);
    }

    #[test]
    fn json_errors() {
        assert!(matches!(DiGraph::from_json("{"), Err(IoError::Json(_))));
        assert!(matches!(
            DiGraph::from_json(r#"{"nodes":["a"],"edges":[["a","z"]]}"#),
            Err(IoError::Graph(GraphError::UnknownName(_)))
        ));
        assert!(matches!(
            DiGraph::from_json(r#"{"nodes":["a"],"edges":[["a","a"]]}"#),
            Err(IoError::Graph(GraphError::SelfLoop(_)))
        ));
    }

    proptest! {
        #[test]
        fn random_graphs_round_trip(n in 1usize..10, p in 0.0f64..=1.0, seed in any::<u64>()) {
            let g = gen_random(n, p, seed).unwrap();
            let json = g.to_json();
            let dot = g.to_dot();
            prop_assert_eq!(&DiGraph::from_json(&json).unwrap(), &g);
            prop_assert_eq!(DiGraph::from_json(&json).unwrap().to_json(), json);
            prop_assert_eq!(&DiGraph::from_dot(&dot).unwrap(), &g);
            prop_assert_eq!(DiGraph::from_dot(&dot).unwrap().to_dot(), dot);
        }
    }
}
