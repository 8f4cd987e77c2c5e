//! Finite-state mask over token kinds for constrained generation.
//!
//! [`GrammarState`] tracks the grammar position plus the label context
//! needed to restrict backtrack targets to ancestors of the current
//! frontier. [`valid_continuations`] returns exactly the token kinds that
//! keep the prefix extendable to a complete, protocol-clean document.

use crate::grammar::token::Token;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    Start,
    InPerception,
    InBox,
    AfterPerception,
    InThink,
    InNode,
    AfterDone,
    AfterThink,
    InAnswer,
    Complete,
}

/// Grammar position plus the emitted-label and path context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrammarState {
    position: Position,
    /// Step labels emitted so far, in emission order (strictly increasing).
    emitted_labels: Vec<u32>,
    /// Labels on the root-to-frontier path; the root is label 0.
    depth_context: Vec<u32>,
}

impl Default for GrammarState {
    fn default() -> Self {
        Self::new()
    }
}

/// Token-kind descriptor returned by the mask.
///
/// `OpenNode.fresh` is the canonical next label (one past the largest
/// emitted); any strictly larger label is also admitted, since documents
/// produced from trees may skip labels. `Backtrack.targets` lists the
/// strict ancestors of the current frontier, root first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Continuation {
    OpenPerception,
    ClosePerception,
    OpenThink,
    CloseThink,
    OpenAnswer,
    CloseAnswer,
    OpenNode {
        fresh: u32,
    },
    CloseNode,
    Backtrack {
        targets: Vec<u32>,
    },
    Done,
    OpenBox,
    CloseBox,
    /// Arbitrary delimiter-free text.
    Text,
    /// Whitespace-only text (structural positions).
    Whitespace,
}

impl Continuation {
    pub fn admits(&self, token: &Token) -> bool {
        match (self, token) {
            (Continuation::OpenPerception, Token::OpenPerception) => true,
            (Continuation::ClosePerception, Token::ClosePerception) => true,
            (Continuation::OpenThink, Token::OpenThink) => true,
            (Continuation::CloseThink, Token::CloseThink) => true,
            (Continuation::OpenAnswer, Token::OpenAnswer) => true,
            (Continuation::CloseAnswer, Token::CloseAnswer) => true,
            (Continuation::OpenNode { fresh }, Token::OpenNode(label)) => label >= fresh,
            (Continuation::CloseNode, Token::CloseNode) => true,
            (Continuation::Backtrack { targets }, Token::Backtrack(t)) => targets.contains(t),
            (Continuation::Done, Token::Done) => true,
            (Continuation::OpenBox, Token::OpenBox) => true,
            (Continuation::CloseBox, Token::CloseBox) => true,
            (Continuation::Text, Token::Text(s)) => !s.contains(['<', '>']),
            (Continuation::Whitespace, t) => t.is_whitespace_text(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("token `{token}` not admitted at {position:?}")]
pub struct MaskViolation {
    pub position: Position,
    pub token: String,
}

impl GrammarState {
    pub fn new() -> Self {
        GrammarState {
            position: Position::Start,
            emitted_labels: Vec::new(),
            depth_context: vec![0],
        }
    }

    pub fn position(&self) -> Position {
        self.position
    }

    pub fn is_complete(&self) -> bool {
        self.position == Position::Complete
    }

    fn fresh_label(&self) -> u32 {
        self.emitted_labels.last().copied().unwrap_or(0) + 1
    }

    /// Strict ancestors of the current frontier, root first.
    fn backtrack_targets(&self) -> &[u32] {
        &self.depth_context[..self.depth_context.len() - 1]
    }

    /// Feed one token, checking it against the mask.
    pub fn advance(&mut self, token: &Token) -> Result<(), MaskViolation> {
        if !valid_continuations(self).iter().any(|c| c.admits(token)) {
            return Err(MaskViolation {
                position: self.position,
                token: token.surface(),
            });
        }
        self.position = match (self.position, token) {
            (Position::Start, Token::OpenPerception) => Position::InPerception,
            (Position::Start, _) => Position::Start,
            (Position::InPerception, Token::OpenBox) => Position::InBox,
            (Position::InPerception, Token::ClosePerception) => Position::AfterPerception,
            (Position::InPerception, _) => Position::InPerception,
            (Position::InBox, Token::CloseBox) => Position::InPerception,
            (Position::InBox, _) => Position::InBox,
            (Position::AfterPerception, Token::OpenThink) => Position::InThink,
            (Position::AfterPerception, _) => Position::AfterPerception,
            (Position::InThink, Token::OpenNode(label)) => {
                self.emitted_labels.push(*label);
                self.depth_context.push(*label);
                Position::InNode
            }
            (Position::InThink, Token::Backtrack(target)) => {
                let keep = self
                    .depth_context
                    .iter()
                    .position(|l| l == target)
                    .expect("admitted target lies on the path");
                self.depth_context.truncate(keep + 1);
                Position::InThink
            }
            (Position::InThink, Token::Done) => Position::AfterDone,
            (Position::InThink, Token::CloseThink) => Position::AfterThink,
            (Position::InThink, _) => Position::InThink,
            (Position::InNode, Token::CloseNode) => Position::InThink,
            (Position::InNode, _) => Position::InNode,
            (Position::AfterDone, Token::CloseThink) => Position::AfterThink,
            (Position::AfterDone, _) => Position::AfterDone,
            (Position::AfterThink, Token::OpenAnswer) => Position::InAnswer,
            (Position::AfterThink, _) => Position::AfterThink,
            (Position::InAnswer, Token::CloseAnswer) => Position::Complete,
            (Position::InAnswer, _) => Position::InAnswer,
            (Position::Complete, _) => Position::Complete,
        };
        Ok(())
    }
}

/// Token kinds admissible at `state`.
pub fn valid_continuations(state: &GrammarState) -> Vec<Continuation> {
    match state.position {
        Position::Start => vec![Continuation::OpenPerception, Continuation::Whitespace],
        Position::InPerception => vec![
            Continuation::Text,
            Continuation::OpenBox,
            Continuation::ClosePerception,
        ],
        Position::InBox => vec![Continuation::Text, Continuation::CloseBox],
        Position::AfterPerception => vec![Continuation::OpenThink, Continuation::Whitespace],
        Position::InThink => {
            let mut out = vec![Continuation::OpenNode {
                fresh: state.fresh_label(),
            }];
            let targets = state.backtrack_targets();
            if !targets.is_empty() {
                out.push(Continuation::Backtrack {
                    targets: targets.to_vec(),
                });
            }
            if state.depth_context.len() >= 2 {
                out.push(Continuation::Done);
            }
            out.push(Continuation::CloseThink);
            out.push(Continuation::Whitespace);
            out
        }
        Position::InNode => vec![Continuation::Text, Continuation::CloseNode],
        Position::AfterDone => vec![Continuation::CloseThink, Continuation::Whitespace],
        Position::AfterThink => vec![Continuation::OpenAnswer, Continuation::Whitespace],
        Position::InAnswer => vec![Continuation::Text, Continuation::CloseAnswer],
        Position::Complete => vec![Continuation::Whitespace],
    }
}
