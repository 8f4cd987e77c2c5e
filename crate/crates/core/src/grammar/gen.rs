//! Mask-guided random document generation.
//!
//! Every emitted token is checked against [`valid_continuations`], so the
//! sampler can only produce documents the mask admits; the parser is the
//! independent oracle that they are in fact well-formed.

use rand::Rng;

use crate::grammar::mask::{valid_continuations, Continuation, GrammarState, Position};
use crate::grammar::token::Token;

const WORDS: &[&str] = &[
    "the", "cat", "dog", "box", "left", "of", "red", "blue", "sits", "near", "above", "small",
];

#[derive(Debug, Clone, Copy)]
pub struct SampleOptions {
    /// Soft cap on `<node>` steps; once reached the walk heads for the exit.
    pub max_steps: usize,
    /// Hard cap on emitted tokens (safety net).
    pub max_tokens: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            max_steps: 12,
            max_tokens: 400,
        }
    }
}

fn words<R: Rng>(rng: &mut R, max: usize) -> String {
    let n = rng.random_range(1..=max);
    (0..n)
        .map(|_| WORDS[rng.random_range(0..WORDS.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

fn box_payload<R: Rng>(rng: &mut R) -> String {
    let x1 = rng.random_range(0..50);
    let y1 = rng.random_range(0..50);
    let x2 = x1 + rng.random_range(1..20);
    let y2 = y1 + rng.random_range(1..20);
    format!("{x1},{y1},{x2},{y2}")
}

/// Token to emit when winding down: always makes progress toward
/// `Complete` regardless of position.
fn closing_token(state: &GrammarState) -> Option<Token> {
    let conts = valid_continuations(state);
    let pick = |want: fn(&Continuation) -> bool| conts.iter().find(|c| want(c));
    match state.position() {
        Position::Start => Some(Token::OpenPerception),
        Position::InPerception => Some(Token::ClosePerception),
        Position::InBox => Some(Token::CloseBox),
        Position::AfterPerception => Some(Token::OpenThink),
        Position::InThink => {
            if pick(|c| matches!(c, Continuation::Done)).is_some() {
                Some(Token::Done)
            } else {
                Some(Token::CloseThink)
            }
        }
        Position::InNode => Some(Token::CloseNode),
        Position::AfterDone => Some(Token::CloseThink),
        Position::AfterThink => Some(Token::OpenAnswer),
        Position::InAnswer => Some(Token::CloseAnswer),
        Position::Complete => None,
    }
}

/// One random walk under the mask, returned as surface text.
pub fn sample_document<R: Rng>(rng: &mut R, opts: SampleOptions) -> String {
    let mut state = GrammarState::new();
    let mut out = String::new();
    let mut steps = 0usize;
    let mut emitted = 0usize;
    loop {
        if state.is_complete() {
            return out;
        }
        let winding_down = steps >= opts.max_steps || emitted >= opts.max_tokens;
        let token = if winding_down {
            match closing_token(&state) {
                Some(t) => t,
                None => return out,
            }
        } else {
            propose_token(rng, &state)
        };
        if let Token::OpenNode(_) = token {
            steps += 1;
        }
        state
            .advance(&token)
            .expect("sampler only emits admitted tokens");
        out.push_str(&token.surface());
        emitted += 1;
    }
}

fn propose_token<R: Rng>(rng: &mut R, state: &GrammarState) -> Token {
    let conts = valid_continuations(state);
    match state.position() {
        Position::Start => Token::OpenPerception,
        Position::InPerception => match rng.random_range(0..10) {
            0..=4 => Token::Text(words(rng, 4)),
            5..=7 => Token::OpenBox,
            _ => Token::ClosePerception,
        },
        Position::InBox => {
            if rng.random_bool(0.9) {
                Token::Text(box_payload(rng))
            } else {
                Token::CloseBox
            }
        }
        Position::AfterPerception => maybe_newline(rng, Token::OpenThink),
        Position::InThink => {
            let fresh = conts
                .iter()
                .find_map(|c| match c {
                    Continuation::OpenNode { fresh } => Some(*fresh),
                    _ => None,
                })
                .expect("a fresh node is always admissible in think");
            let targets = conts.iter().find_map(|c| match c {
                Continuation::Backtrack { targets } => Some(targets.clone()),
                _ => None,
            });
            let done_ok = conts.contains(&Continuation::Done);
            match rng.random_range(0..100) {
                0..=44 => Token::OpenNode(fresh),
                45..=59 => match &targets {
                    Some(t) => Token::Backtrack(t[rng.random_range(0..t.len())]),
                    None => Token::OpenNode(fresh),
                },
                60..=79 if done_ok => Token::Done,
                80..=89 => Token::Text("\n".into()),
                _ => Token::OpenNode(fresh),
            }
        }
        Position::InNode => {
            if rng.random_bool(0.7) {
                Token::Text(words(rng, 5))
            } else {
                Token::CloseNode
            }
        }
        Position::AfterDone => maybe_newline(rng, Token::CloseThink),
        Position::AfterThink => maybe_newline(rng, Token::OpenAnswer),
        Position::InAnswer => {
            if rng.random_bool(0.6) {
                Token::Text(words(rng, 2))
            } else {
                Token::CloseAnswer
            }
        }
        Position::Complete => unreachable!("walk stops at Complete"),
    }
}

fn maybe_newline<R: Rng>(rng: &mut R, next: Token) -> Token {
    if rng.random_bool(0.3) {
        Token::Text("\n".into())
    } else {
        next
    }
}
