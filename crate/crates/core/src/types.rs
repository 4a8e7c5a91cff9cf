//! Vocabulary, search nodes, the append-only search-graph arena, and
//! completion predicates shared by every decoder.
//!
//! The arena encodes a tree rooted at BOS. Nodes are never mutated or
//! removed once inserted; frontier pruning elsewhere only withdraws a
//! node's candidacy for expansion, never its history.

use std::collections::{BTreeSet, HashMap};

use crate::error::CoreError;

/// Index into a [`Vocabulary`]. Ids, not surfaces, are the unit of
/// computation; surfaces exist for metrics and display.
pub type TokenId = u32;

/// Index into a [`NodeArena`].
pub type NodeId = usize;

/// Expansion-round counter. The root carries `-1` so that children
/// discovered in round 0 are strictly newer than it.
pub type Round = i64;

/// Reserved id of the begin-of-sequence token.
pub const BOS: TokenId = 0;
/// Reserved id of the end-of-sequence token.
pub const EOS: TokenId = 1;

pub const BOS_SURFACE: &str = "<bos>";
pub const EOS_SURFACE: &str = "<eos>";

/// A token id paired with its surface form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub id: TokenId,
    pub surface: String,
}

/// Ordered token inventory with reserved BOS/EOS ids and an optional set
/// of extra termination tokens (for example a sentence-final period).
#[derive(Debug, Clone)]
pub struct Vocabulary {
    surfaces: Vec<String>,
    index: HashMap<String, TokenId>,
    extra_terminators: BTreeSet<TokenId>,
}

impl Vocabulary {
    /// Builds a vocabulary from non-special surfaces. BOS and EOS are
    /// always present at ids 0 and 1 and must not be passed in.
    pub fn new<I, S>(surfaces: I) -> Result<Self, CoreError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocabulary {
            surfaces: vec![BOS_SURFACE.to_string(), EOS_SURFACE.to_string()],
            index: HashMap::new(),
            extra_terminators: BTreeSet::new(),
        };
        vocab.index.insert(BOS_SURFACE.to_string(), BOS);
        vocab.index.insert(EOS_SURFACE.to_string(), EOS);
        for surface in surfaces {
            vocab.intern(surface.into())?;
        }
        Ok(vocab)
    }

    fn intern(&mut self, surface: String) -> Result<TokenId, CoreError> {
        if surface.is_empty() {
            return Err(CoreError::EmptySurface);
        }
        if self.index.contains_key(&surface) {
            return Err(CoreError::DuplicateSurface(surface));
        }
        let id = self.surfaces.len() as TokenId;
        self.index.insert(surface.clone(), id);
        self.surfaces.push(surface);
        Ok(id)
    }

    /// Marks existing surfaces as termination tokens in addition to EOS.
    pub fn with_extra_terminators(mut self, surfaces: &[&str]) -> Result<Self, CoreError> {
        for surface in surfaces {
            let id = self
                .id(surface)
                .ok_or_else(|| CoreError::UnknownSurface(surface.to_string()))?;
            self.extra_terminators.insert(id);
        }
        Ok(self)
    }

    pub fn id(&self, surface: &str) -> Option<TokenId> {
        self.index.get(surface).copied()
    }

    pub fn surface(&self, id: TokenId) -> Option<&str> {
        self.surfaces.get(id as usize).map(String::as_str)
    }

    pub fn token(&self, id: TokenId) -> Option<Token> {
        self.surface(id).map(|surface| Token {
            id,
            surface: surface.to_string(),
        })
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        false // BOS and EOS are always present
    }

    /// True for EOS and any registered extra termination token.
    pub fn is_terminator(&self, id: TokenId) -> bool {
        id == EOS || self.extra_terminators.contains(&id)
    }

    pub fn extra_terminators(&self) -> &BTreeSet<TokenId> {
        &self.extra_terminators
    }

    /// Surfaces for a token-id sequence, in order. Unknown ids render as
    /// `<unk:id>` rather than failing; they indicate a bug upstream.
    pub fn render(&self, ids: &[TokenId]) -> Vec<String> {
        ids.iter()
            .map(|&id| match self.surface(id) {
                Some(s) => s.to_string(),
                None => format!("<unk:{id}>"),
            })
            .collect()
    }
}

/// One explored token: where it hangs in the tree, its step and path
/// log-likelihood, its scoring-function value, and when it was found.
#[derive(Debug, Clone)]
pub struct SearchNode {
    pub node_id: NodeId,
    /// `None` only for the root.
    pub parent_id: Option<NodeId>,
    pub token: TokenId,
    /// Natural-log probability of this token given its prefix; `<= 0`.
    pub step_logprob: f64,
    /// Sum of `step_logprob` along the path from the root (root: 0).
    pub cum_logprob: f64,
    /// Path length excluding BOS (root: 0).
    pub depth: u32,
    /// Value of the scoring function h(.) for the path ending here.
    /// The root holds an infinite sentinel and is never scored.
    pub model_score: f64,
    /// Round counter at insertion (root: -1).
    pub discovery_time: Round,
}

/// Append-only store of [`SearchNode`]s forming a tree rooted at BOS.
#[derive(Debug, Clone)]
pub struct NodeArena {
    nodes: Vec<SearchNode>,
}

impl NodeArena {
    pub const ROOT: NodeId = 0;

    /// A fresh arena holding only the BOS root.
    pub fn with_root() -> Self {
        NodeArena {
            nodes: vec![SearchNode {
                node_id: Self::ROOT,
                parent_id: None,
                token: BOS,
                step_logprob: 0.0,
                cum_logprob: 0.0,
                depth: 0,
                model_score: f64::INFINITY,
                discovery_time: -1,
            }],
        }
    }

    /// Appends a child of `parent_id`. Cumulative log-probability and
    /// depth are derived from the parent; `now` becomes the discovery
    /// time.
    pub fn add(
        &mut self,
        parent_id: NodeId,
        token: TokenId,
        step_logprob: f64,
        now: Round,
        model_score: f64,
    ) -> Result<NodeId, CoreError> {
        if step_logprob > 0.0 {
            return Err(CoreError::PositiveLogProb(step_logprob));
        }
        let parent = self.get(parent_id).ok_or(CoreError::UnknownNode(parent_id))?;
        let node = SearchNode {
            node_id: self.nodes.len(),
            parent_id: Some(parent_id),
            token,
            step_logprob,
            cum_logprob: parent.cum_logprob + step_logprob,
            depth: parent.depth + 1,
            model_score,
            discovery_time: now,
        };
        let id = node.node_id;
        self.nodes.push(node);
        Ok(id)
    }

    pub fn get(&self, id: NodeId) -> Option<&SearchNode> {
        self.nodes.get(id)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false // the root is always present
    }

    pub fn iter(&self) -> impl Iterator<Item = &SearchNode> {
        self.nodes.iter()
    }

    /// Token ids along the root-to-node path, starting with BOS.
    pub fn path_tokens(&self, id: NodeId) -> Result<Vec<TokenId>, CoreError> {
        let mut tokens = Vec::new();
        let mut cursor = self.get(id).ok_or(CoreError::UnknownNode(id))?;
        loop {
            tokens.push(cursor.token);
            match cursor.parent_id {
                Some(parent) => cursor = self.get(parent).expect("parent links stay valid"),
                None => break,
            }
        }
        tokens.reverse();
        Ok(tokens)
    }

    /// Materializes the hypothesis ending at `id`.
    ///
    /// `complete` is true when the path ends in EOS; callers that use
    /// extra termination tokens flag completion at the engine level.
    pub fn reconstruct(&self, id: NodeId) -> Result<Hypothesis, CoreError> {
        let node = self.get(id).ok_or(CoreError::UnknownNode(id))?;
        let tokens = self.path_tokens(id)?;
        Ok(Hypothesis {
            complete: *tokens.last().expect("paths include BOS") == EOS && id != Self::ROOT,
            tokens,
            cum_logprob: node.cum_logprob,
            model_score: node.model_score,
            truncated: false,
        })
    }
}

/// A (partial or completed) output sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    /// Token ids starting with BOS; ends in a termination token iff
    /// `complete`.
    pub tokens: Vec<TokenId>,
    pub cum_logprob: f64,
    pub model_score: f64,
    /// True when the last token is in the termination set.
    pub complete: bool,
    /// True when the sequence was force-terminated at the length cap
    /// without emitting a termination token.
    pub truncated: bool,
}

impl Hypothesis {
    /// Path length excluding BOS.
    pub fn depth(&self) -> u32 {
        (self.tokens.len() - 1) as u32
    }
}

/// How a candidate extension relates to the termination rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompletionKind {
    /// Still extendable.
    Open,
    /// Ends in a termination token.
    Completed,
    /// Hit the length cap without a termination token.
    Truncated,
}

/// Classifies a token arriving at `depth`, given the run's length cap and
/// termination set. The length cap counts as forced termination but is
/// flagged so incompletion statistics can exclude it.
pub fn completion_kind(
    token: TokenId,
    depth: u32,
    max_len: u32,
    terminators: &BTreeSet<TokenId>,
) -> CompletionKind {
    if token == EOS || terminators.contains(&token) {
        CompletionKind::Completed
    } else if depth >= max_len {
        CompletionKind::Truncated
    } else {
        CompletionKind::Open
    }
}
