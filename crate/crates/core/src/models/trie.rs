//! Exact-probability trie models.
//!
//! A trie spells out every branch distribution explicitly, which makes it
//! cheap to enumerate all complete paths — the oracle backend for the
//! equivalence tests.
//!
//! The on-disk spec is a nested JSON mapping of token surface to
//! `{ "prob": <decimal>, "children": { ... } }`. The top-level mapping
//! holds the children of BOS. A node without children is padded with an
//! implicit `<eos>` child of mass 1, so every path terminates.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::types::{TokenId, Vocabulary, BOS, BOS_SURFACE, EOS, EOS_SURFACE};

use super::{SequenceModel, TokenLogProb};

/// One node of the textual trie spec.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrieSpecNode {
    pub prob: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub children: BTreeMap<String, TrieSpecNode>,
}

/// The children of BOS: the whole document.
pub type TrieSpec = BTreeMap<String, TrieSpecNode>;

/// Probability mismatch allowed at each branch of a spec.
pub const BRANCH_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
struct TrieNode {
    /// `(token, ln p, child node index)`, sorted by token id.
    children: Vec<(TokenId, f64, usize)>,
}

/// Explicit tree of token probabilities.
#[derive(Debug, Clone)]
pub struct TrieModel {
    vocab: Vocabulary,
    nodes: Vec<TrieNode>,
}

impl TrieModel {
    /// Compiles a validated spec. Branch probabilities must sum to 1
    /// within `1e-9` and `<eos>` entries may not have children.
    pub fn from_spec(spec: &TrieSpec) -> Result<Self, ModelError> {
        let mut surfaces = Vec::new();
        collect_surfaces(spec, &mut surfaces);
        let vocab = Vocabulary::new(surfaces).map_err(|e| ModelError::TrieSpec {
            path: "<root>".to_string(),
            message: e.to_string(),
        })?;

        let mut model = TrieModel {
            vocab,
            nodes: vec![TrieNode { children: Vec::new() }],
        };
        model.compile(spec, 0, "<root>")?;
        Ok(model)
    }

    pub fn from_json_str(text: &str) -> Result<Self, ModelError> {
        let spec: TrieSpec = serde_json::from_str(text)
            .map_err(|e| ModelError::TrieSpec {
                path: "<root>".to_string(),
                message: format!("invalid JSON: {e}"),
            })?;
        Self::from_spec(&spec)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    fn compile(
        &mut self,
        children: &TrieSpec,
        node: usize,
        path: &str,
    ) -> Result<(), ModelError> {
        let mut mass = 0.0;
        for (surface, spec_node) in children {
            let here = format!("{path} -> {surface:?}");
            if surface == BOS_SURFACE {
                return Err(ModelError::TrieSpec {
                    path: here,
                    message: "BOS may not appear as a child".to_string(),
                });
            }
            if !(spec_node.prob > 0.0 && spec_node.prob <= 1.0) {
                return Err(ModelError::TrieSpec {
                    path: here,
                    message: format!("probability {} out of (0, 1]", spec_node.prob),
                });
            }
            mass += spec_node.prob;
            let token = self
                .vocab
                .id(surface)
                .expect("surfaces were interned before compilation");
            if token == EOS && !spec_node.children.is_empty() {
                return Err(ModelError::TrieSpec {
                    path: here,
                    message: "EOS node may not have children".to_string(),
                });
            }
            let child_index = self.nodes.len();
            self.nodes.push(TrieNode { children: Vec::new() });
            self.nodes[node]
                .children
                .push((token, spec_node.prob.ln(), child_index));
            if token != EOS {
                if spec_node.children.is_empty() {
                    // implicit EOS padding keeps every path terminating
                    let eos_index = self.nodes.len();
                    self.nodes.push(TrieNode { children: Vec::new() });
                    self.nodes[child_index].children.push((EOS, 0.0, eos_index));
                } else {
                    self.compile(&spec_node.children, child_index, &here)?;
                }
            }
        }
        if (mass - 1.0).abs() > BRANCH_TOLERANCE {
            return Err(ModelError::TrieSpec {
                path: path.to_string(),
                message: format!("branch probabilities sum to {mass}, expected 1"),
            });
        }
        self.nodes[node].children.sort_by_key(|&(token, _, _)| token);
        Ok(())
    }

    /// Index of the BOS node.
    pub fn root(&self) -> usize {
        0
    }

    /// Outgoing edges of an internal node: `(token, ln p, child index)`.
    pub fn children(&self, node: usize) -> &[(TokenId, f64, usize)] {
        &self.nodes[node].children
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of EOS leaves.
    pub fn leaf_count(&self) -> usize {
        let mut leaves = 0;
        for node in &self.nodes {
            leaves += node
                .children
                .iter()
                .filter(|&&(token, _, _)| token == EOS)
                .count();
        }
        leaves
    }

    /// Walks `prefix` (which must start with BOS) from the root; `None`
    /// when the prefix leaves the trie.
    fn walk(&self, prefix: &[TokenId]) -> Option<usize> {
        if prefix.first() != Some(&BOS) {
            return None;
        }
        let mut node = 0;
        for &token in &prefix[1..] {
            let children = &self.nodes[node].children;
            let at = children.binary_search_by_key(&token, |&(t, _, _)| t).ok()?;
            node = children[at].2;
        }
        Some(node)
    }
}

impl SequenceModel for TrieModel {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_logprobs(&self, prefixes: &[&[TokenId]]) -> Result<Vec<Vec<TokenLogProb>>, ModelError> {
        let mut out = Vec::with_capacity(prefixes.len());
        for prefix in prefixes {
            if prefix.first() != Some(&BOS) {
                return Err(ModelError::Protocol(
                    "prefix must start with BOS".to_string(),
                ));
            }
            let dist = match self.walk(prefix) {
                Some(node) => self.nodes[node]
                    .children
                    .iter()
                    .map(|&(token, logprob, _)| (token, logprob))
                    .collect(),
                // off-trie continuations have no mass: a dead branch
                None => Vec::new(),
            };
            out.push(dist);
        }
        Ok(out)
    }
}

fn collect_surfaces(children: &TrieSpec, surfaces: &mut Vec<String>) {
    for (surface, node) in children {
        if surface != EOS_SURFACE && surface != BOS_SURFACE
            && !surfaces.iter().any(|s| s == surface)
        {
            surfaces.push(surface.clone());
        }
        collect_surfaces(&node.children, surfaces);
    }
}
