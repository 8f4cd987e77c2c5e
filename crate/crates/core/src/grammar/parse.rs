//! Parsing and serialization of trajectory documents.

use serde::{Deserialize, Serialize};

use crate::geometry::BoundingBox;
use crate::grammar::token::Token;

pub type BBox = BoundingBox<f64>;

/// One event inside the `<think>` block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThinkEvent {
    Step { label: u32, proposition: String },
    BacktrackTo { target: u32 },
    Done,
}

/// Parsed form of one trajectory: perception text (with its extracted
/// boxes), the think events, and the answer.
///
/// A document whose think body does not end in [`ThinkEvent::Done`] is an
/// unsolved trajectory; the absence of the done marker is the explicit
/// "unsolved" signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDoc {
    pub perception: String,
    pub boxes: Vec<BBox>,
    pub think_body: Vec<ThinkEvent>,
    pub answer: String,
}

impl TrajectoryDoc {
    pub fn is_solved(&self) -> bool {
        matches!(self.think_body.last(), Some(ThinkEvent::Done))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseErrorKind {
    UnexpectedToken,
    MissingBlock,
    DanglingThink,
    BadBacktrackTarget,
    DuplicateLabel,
}

/// First violation found while parsing; `index` is the token index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("parse failure at token {index}: {kind:?}: {message}")]
pub struct ParseFailure {
    pub index: usize,
    pub kind: ParseErrorKind,
    pub message: String,
}

fn fail(index: usize, kind: ParseErrorKind, message: impl Into<String>) -> ParseFailure {
    ParseFailure {
        index,
        kind,
        message: message.into(),
    }
}

struct Cursor<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<&'a Token> {
        let t = self.tokens.get(self.pos);
        self.pos += 1;
        t
    }

    fn skip_whitespace(&mut self) {
        while matches!(self.peek(), Some(t) if t.is_whitespace_text()) {
            self.pos += 1;
        }
    }
}

/// Parse a token stream into a [`TrajectoryDoc`].
///
/// Structure, label monotonicity, and backtrack-target existence are
/// enforced here; the ancestor restriction on backtrack targets is a
/// protocol concern checked by [`format_reward`](crate::grammar::format_reward).
pub fn parse_trajectory(tokens: &[Token]) -> Result<TrajectoryDoc, ParseFailure> {
    let mut cur = Cursor { tokens, pos: 0 };

    cur.skip_whitespace();
    match cur.next() {
        Some(Token::OpenPerception) => {}
        _ => {
            return Err(fail(
                cur.pos.saturating_sub(1),
                ParseErrorKind::MissingBlock,
                "expected <visual_perception>",
            ))
        }
    }
    let perception = read_free_text_block(&mut cur, Token::ClosePerception, true)?;

    cur.skip_whitespace();
    match cur.next() {
        Some(Token::OpenThink) => {}
        _ => {
            return Err(fail(
                cur.pos.saturating_sub(1),
                ParseErrorKind::MissingBlock,
                "expected <think>",
            ))
        }
    }
    let think_body = read_think_body(&mut cur)?;

    cur.skip_whitespace();
    match cur.next() {
        Some(Token::OpenAnswer) => {}
        _ => {
            return Err(fail(
                cur.pos.saturating_sub(1),
                ParseErrorKind::MissingBlock,
                "expected <answer>",
            ))
        }
    }
    let answer = read_free_text_block(&mut cur, Token::CloseAnswer, false)?;

    cur.skip_whitespace();
    if cur.peek().is_some() {
        return Err(fail(
            cur.pos,
            ParseErrorKind::UnexpectedToken,
            "content after </answer>",
        ));
    }

    let (boxes, _) = extract_boxes(&perception);
    Ok(TrajectoryDoc {
        perception,
        boxes,
        think_body,
        answer,
    })
}

/// Read until `closer`, reconstructing surface text. Perception admits box
/// tags (`allow_boxes`); the answer block is plain text only.
fn read_free_text_block(
    cur: &mut Cursor<'_>,
    closer: Token,
    allow_boxes: bool,
) -> Result<String, ParseFailure> {
    let mut out = String::new();
    loop {
        let idx = cur.pos;
        match cur.next() {
            Some(t) if *t == closer => return Ok(out.trim().to_string()),
            Some(Token::Text(s)) => out.push_str(s),
            Some(t @ (Token::OpenBox | Token::CloseBox)) if allow_boxes => {
                out.push_str(&t.surface())
            }
            Some(t) => {
                return Err(fail(
                    idx,
                    ParseErrorKind::UnexpectedToken,
                    format!("`{t}` not allowed in this block"),
                ))
            }
            None => {
                return Err(fail(
                    idx,
                    ParseErrorKind::MissingBlock,
                    format!("missing `{closer}`"),
                ))
            }
        }
    }
}

fn read_think_body(cur: &mut Cursor<'_>) -> Result<Vec<ThinkEvent>, ParseFailure> {
    let mut events = Vec::new();
    let mut emitted: Vec<u32> = Vec::new(); // strictly increasing
    let mut done = false;
    loop {
        cur.skip_whitespace();
        let idx = cur.pos;
        let token = match cur.next() {
            Some(t) => t,
            None => return Err(fail(idx, ParseErrorKind::DanglingThink, "missing </think>")),
        };
        if done && *token != Token::CloseThink {
            return Err(fail(
                idx,
                ParseErrorKind::UnexpectedToken,
                "event after <done>",
            ));
        }
        match token {
            Token::CloseThink => return Ok(events),
            Token::OpenNode(label) => {
                let last = emitted.last().copied().unwrap_or(0);
                if *label <= last {
                    return Err(fail(
                        idx,
                        ParseErrorKind::DuplicateLabel,
                        format!("label {label} not above previous label {last}"),
                    ));
                }
                emitted.push(*label);
                let proposition = read_node_body(cur)?;
                events.push(ThinkEvent::Step {
                    label: *label,
                    proposition,
                });
            }
            Token::Backtrack(target) => {
                if *target != 0 && !emitted.contains(target) {
                    return Err(fail(
                        idx,
                        ParseErrorKind::BadBacktrackTarget,
                        format!("no step labeled {target}"),
                    ));
                }
                events.push(ThinkEvent::BacktrackTo { target: *target });
            }
            Token::Done => {
                done = true;
                events.push(ThinkEvent::Done);
            }
            t => {
                return Err(fail(
                    idx,
                    ParseErrorKind::UnexpectedToken,
                    format!("`{t}` not allowed in <think>"),
                ))
            }
        }
    }
}

fn read_node_body(cur: &mut Cursor<'_>) -> Result<String, ParseFailure> {
    let mut out = String::new();
    loop {
        let idx = cur.pos;
        match cur.next() {
            Some(Token::CloseNode) => return Ok(out.trim().to_string()),
            Some(Token::Text(s)) => out.push_str(s),
            Some(t) => {
                return Err(fail(
                    idx,
                    ParseErrorKind::UnexpectedToken,
                    format!("`{t}` not allowed in <node>"),
                ))
            }
            None => return Err(fail(idx, ParseErrorKind::DanglingThink, "missing </node>")),
        }
    }
}

/// Canonical text form: single newline between blocks, think events one
/// per line, no padding inside tags.
pub fn serialize(doc: &TrajectoryDoc) -> String {
    let mut think = String::new();
    for (i, ev) in doc.think_body.iter().enumerate() {
        if i > 0 {
            think.push('\n');
        }
        match ev {
            ThinkEvent::Step { label, proposition } => {
                think.push_str(&format!("<node id={label}>{proposition}</node>"))
            }
            ThinkEvent::BacktrackTo { target } => {
                think.push_str(&format!("<backtrack target={target}>"))
            }
            ThinkEvent::Done => think.push_str("<done>"),
        }
    }
    format!(
        "<visual_perception>{}</visual_perception>\n<think>{}</think>\n<answer>{}</answer>",
        doc.perception, think, doc.answer
    )
}

/// Diagnostic for a box span that was skipped during extraction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxDiagnostic {
    /// Byte offset of the offending span in the perception text.
    pub index: usize,
    pub kind: String,
    pub message: String,
}

fn box_diag(index: usize, kind: &str, message: impl Into<String>) -> BoxDiagnostic {
    BoxDiagnostic {
        index,
        kind: kind.into(),
        message: message.into(),
    }
}

/// Extract all well-formed `<box>x1,y1,x2,y2</box>` spans from perception
/// text, in document order. Malformed spans are skipped and reported.
pub fn extract_boxes(perception: &str) -> (Vec<BBox>, Vec<BoxDiagnostic>) {
    let mut boxes = Vec::new();
    let mut diagnostics = Vec::new();
    let mut offset = 0;
    while let Some(open) = perception[offset..].find("<box>") {
        let start = offset + open;
        let payload_start = start + "<box>".len();
        let Some(close) = perception[payload_start..].find("</box>") else {
            diagnostics.push(box_diag(start, "unclosed", "no matching </box>"));
            break;
        };
        let payload = &perception[payload_start..payload_start + close];
        offset = payload_start + close + "</box>".len();
        let parts: Vec<&str> = payload.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            diagnostics.push(box_diag(
                start,
                "bad_arity",
                format!("expected 4 coordinates, got {}", parts.len()),
            ));
            continue;
        }
        let mut values = [0.0f64; 4];
        let mut numeric = true;
        for (slot, part) in values.iter_mut().zip(&parts) {
            match part.parse::<f64>() {
                Ok(v) => *slot = v,
                Err(_) => {
                    diagnostics.push(box_diag(
                        start,
                        "bad_number",
                        format!("`{part}` is not a number"),
                    ));
                    numeric = false;
                    break;
                }
            }
        }
        if !numeric {
            continue;
        }
        match BoundingBox::new(values[0], values[1], values[2], values[3]) {
            Ok(b) => boxes.push(b),
            Err(e) => diagnostics.push(box_diag(start, "invalid_box", e.to_string())),
        }
    }
    (boxes, diagnostics)
}
