//! Textual tree notation.
//!
//! ```text
//! node  := label | "seq" "(" list ")" | "xor" "(" list ")" | "and" "(" list ")"
//!        | "loop" "[" redo-bound "]" "(" node "," node ")"
//! list  := node ("," node)+
//! label := [A-Za-z0-9_.:-]+ | '"' (char | '\"' | '\\')* '"'
//! ```
//!
//! Whitespace between tokens is ignored. Labels that collide with an
//! operator keyword or contain other characters are written quoted. The
//! alphabet of a parsed model is its set of leaf labels.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::{ModelError, Node, ProcessModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseModelError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | ':' | '-')
}

fn write_label(f: &mut fmt::Formatter<'_>, label: &str) -> fmt::Result {
    let plain = !label.is_empty()
        && label.chars().all(is_ident_char)
        && !matches!(label, "seq" | "xor" | "and" | "loop");
    if plain {
        f.write_str(label)
    } else {
        f.write_str("\"")?;
        for c in label.chars() {
            if c == '"' || c == '\\' {
                f.write_str("\\")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str("\"")
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, name: &str, children: &[Node]| {
            write!(f, "{name}(")?;
            for (i, c) in children.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{c}")?;
            }
            f.write_str(")")
        };
        match self {
            Node::Leaf(a) => write_label(f, a),
            Node::Sequence(c) => list(f, "seq", c),
            Node::ExclusiveChoice(c) => list(f, "xor", c),
            Node::Parallel(c) => list(f, "and", c),
            Node::Loop {
                body,
                redo,
                max_redo,
            } => write!(f, "loop[{max_redo}]({body}, {redo})"),
        }
    }
}

impl fmt::Display for ProcessModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root())
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseModelError> {
        Err(ParseModelError::Syntax {
            offset: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn expect(&mut self, want: char) -> Result<(), ParseModelError> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == want => {
                self.pos += c.len_utf8();
                Ok(())
            }
            Some(c) => self.error(format!("expected {want:?}, found {c:?}")),
            None => self.error(format!("expected {want:?}, found end of input")),
        }
    }

    fn ident(&mut self) -> &str {
        let start = self.pos;
        while let Some(c) = self.peek().filter(|c| is_ident_char(*c)) {
            self.pos += c.len_utf8();
        }
        &self.src[start..self.pos]
    }

    fn quoted(&mut self) -> Result<String, ParseModelError> {
        self.pos += 1;
        let mut out = String::new();
        loop {
            match self.peek() {
                None => return self.error("unterminated quoted label"),
                Some('"') => {
                    self.pos += 1;
                    return Ok(out);
                }
                Some('\\') => {
                    self.pos += 1;
                    match self.peek() {
                        Some(c @ ('"' | '\\')) => {
                            out.push(c);
                            self.pos += 1;
                        }
                        _ => return self.error("invalid escape in quoted label"),
                    }
                }
                Some(c) => {
                    out.push(c);
                    self.pos += c.len_utf8();
                }
            }
        }
    }

    fn children(&mut self) -> Result<Vec<Node>, ParseModelError> {
        self.expect('(')?;
        let mut out = vec![self.node()?];
        loop {
            self.skip_ws();
            match self.peek() {
                Some(',') => {
                    self.pos += 1;
                    out.push(self.node()?);
                }
                Some(')') => {
                    self.pos += 1;
                    return Ok(out);
                }
                _ => return self.error("expected ',' or ')'"),
            }
        }
    }

    fn node(&mut self) -> Result<Node, ParseModelError> {
        self.skip_ws();
        if self.peek() == Some('"') {
            return Ok(Node::Leaf(self.quoted()?));
        }
        let start = self.pos;
        let word = self.ident().to_string();
        if word.is_empty() {
            return self.error("expected a label or operator");
        }
        let after_word = self.pos;
        self.skip_ws();
        let next = self.peek();
        match (word.as_str(), next) {
            ("seq", Some('(')) => Ok(Node::Sequence(self.children()?)),
            ("xor", Some('(')) => Ok(Node::ExclusiveChoice(self.children()?)),
            ("and", Some('(')) => Ok(Node::Parallel(self.children()?)),
            ("loop", Some('[')) => {
                self.pos += 1;
                self.skip_ws();
                let digits = self.ident().to_string();
                let Ok(max_redo) = digits.parse::<u32>() else {
                    return self.error(format!("invalid redo bound {digits:?}"));
                };
                self.expect(']')?;
                let mut c = self.children()?;
                if c.len() != 2 {
                    self.pos = start;
                    return self.error(format!("loop needs exactly 2 children, got {}", c.len()));
                }
                let redo = c.pop().expect("two");
                let body = c.pop().expect("two");
                Ok(Node::looped(body, redo, max_redo))
            }
            _ => {
                self.pos = after_word;
                Ok(Node::Leaf(word))
            }
        }
    }
}

impl FromStr for Node {
    type Err = ParseModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Parser { src: s, pos: 0 };
        let node = p.node()?;
        p.skip_ws();
        if p.pos != s.len() {
            return p.error("trailing input");
        }
        Ok(node)
    }
}

impl FromStr for ProcessModel {
    type Err = ParseModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(ProcessModel::new(s.parse::<Node>()?)?)
    }
}

impl serde::Serialize for ProcessModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for ProcessModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
