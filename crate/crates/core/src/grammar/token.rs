//! Surface tokens of the trajectory format.
//!
//! Tag spellings are fixed: `<visual_perception>`, `<think>`, `<answer>`,
//! `<node id=N>`, `<backtrack target=N>`, `<done>`, `<box>`, and their
//! closers. Labels and targets are decimal naturals.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    OpenPerception,
    ClosePerception,
    OpenThink,
    CloseThink,
    OpenAnswer,
    CloseAnswer,
    OpenNode(u32),
    CloseNode,
    Backtrack(u32),
    Done,
    OpenBox,
    CloseBox,
    /// Free text. Tokenizing merges adjacent runs; malformed angle-bracket
    /// constructs degrade into text, so only then may it contain `<`.
    Text(String),
}

impl Token {
    pub fn surface(&self) -> String {
        match self {
            Token::OpenPerception => "<visual_perception>".into(),
            Token::ClosePerception => "</visual_perception>".into(),
            Token::OpenThink => "<think>".into(),
            Token::CloseThink => "</think>".into(),
            Token::OpenAnswer => "<answer>".into(),
            Token::CloseAnswer => "</answer>".into(),
            Token::OpenNode(label) => format!("<node id={label}>"),
            Token::CloseNode => "</node>".into(),
            Token::Backtrack(target) => format!("<backtrack target={target}>"),
            Token::Done => "<done>".into(),
            Token::OpenBox => "<box>".into(),
            Token::CloseBox => "</box>".into(),
            Token::Text(s) => s.clone(),
        }
    }

    pub fn is_whitespace_text(&self) -> bool {
        matches!(self, Token::Text(s) if s.chars().all(char::is_whitespace))
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.surface())
    }
}

/// Match one control tag at the start of `rest`; returns the token and its
/// byte length. `rest` is known to start with `<`.
fn match_tag(rest: &str) -> Option<(Token, usize)> {
    const FIXED: &[(&str, Token)] = &[
        ("<visual_perception>", Token::OpenPerception),
        ("</visual_perception>", Token::ClosePerception),
        ("<think>", Token::OpenThink),
        ("</think>", Token::CloseThink),
        ("<answer>", Token::OpenAnswer),
        ("</answer>", Token::CloseAnswer),
        ("</node>", Token::CloseNode),
        ("<done>", Token::Done),
        ("<box>", Token::OpenBox),
        ("</box>", Token::CloseBox),
    ];
    for (spelling, token) in FIXED {
        if rest.starts_with(spelling) {
            return Some((token.clone(), spelling.len()));
        }
    }
    for (prefix, make) in [
        ("<node id=", Token::OpenNode as fn(u32) -> Token),
        ("<backtrack target=", Token::Backtrack as fn(u32) -> Token),
    ] {
        if let Some(tail) = rest.strip_prefix(prefix) {
            let digits: usize = tail.bytes().take_while(u8::is_ascii_digit).count();
            if digits > 0 && tail[digits..].starts_with('>') {
                if let Ok(value) = tail[..digits].parse::<u32>() {
                    return Some((make(value), prefix.len() + digits + 1));
                }
            }
        }
    }
    None
}

/// Total tokenizer: concatenating the surface forms of the result
/// reproduces `text` exactly. Anything that is not a well-formed control
/// tag is text.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut buf = String::new();
    let mut rest = text;
    while !rest.is_empty() {
        if rest.starts_with('<') {
            if let Some((token, len)) = match_tag(rest) {
                if !buf.is_empty() {
                    tokens.push(Token::Text(std::mem::take(&mut buf)));
                }
                tokens.push(token);
                rest = &rest[len..];
                continue;
            }
        }
        let ch = rest.chars().next().expect("non-empty");
        buf.push(ch);
        rest = &rest[ch.len_utf8()..];
    }
    if !buf.is_empty() {
        tokens.push(Token::Text(buf));
    }
    tokens
}
