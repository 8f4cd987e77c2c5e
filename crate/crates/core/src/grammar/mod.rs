//! The structured trajectory format: tokenizer, parser, serializer,
//! constrained-decoding mask, and the format reward.

pub mod gen;
pub mod mask;
pub mod parse;
pub mod token;

pub use gen::{sample_document, SampleOptions};
pub use mask::{valid_continuations, Continuation, GrammarState, MaskViolation, Position};
pub use parse::{
    extract_boxes, parse_trajectory, serialize, BBox, BoxDiagnostic, ParseErrorKind, ParseFailure,
    ThinkEvent, TrajectoryDoc,
};
pub use token::{tokenize, Token};

use crate::tree::replay_think_events;

/// Binary format reward: 1 iff the text parses as a trajectory and its
/// think events obey the search protocol (fresh labels, ancestor-only
/// backtrack targets, done terminal and not at the root).
pub fn format_reward(text: &str) -> u8 {
    let tokens = tokenize(text);
    let Ok(doc) = parse_trajectory(&tokens) else {
        return 0;
    };
    match replay_think_events("", &doc.think_body) {
        Ok(_) => 1,
        Err(_) => 0,
    }
}
