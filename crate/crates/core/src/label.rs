//! The ordered label universe.
//!
//! Every vertex and edge label in a graph file, and every state written to a
//! trace, is a [`Label`]. Labels are totally ordered: variants compare in
//! declaration order, tagged labels compare by tag and then payload, and sets
//! compare as their sorted sequences.
//!
//! Text form (used by graph and trace files):
//!
//! ```text
//! _                 bottom
//! 42, -3            integers
//! abc, "a b"        symbols (quoted when not a plain identifier)
//! (a, 1)            tuples
//! tag(a, 1)         tagged tuples
//! {1, 2}            sets
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Label {
    #[default]
    Bot,
    Int(i64),
    Sym(Arc<str>),
    Tuple(Arc<[Label]>),
    Tagged(Arc<str>, Arc<[Label]>),
    Set(Arc<BTreeSet<Label>>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("label parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unexpected label shape: expected {expected}, found `{found}`")]
    Shape { expected: String, found: String },
}

impl LabelError {
    pub fn shape(expected: impl Into<String>, found: &Label) -> Self {
        LabelError::Shape {
            expected: expected.into(),
            found: found.to_string(),
        }
    }
}

impl Label {
    pub fn int(v: i64) -> Self {
        Label::Int(v)
    }

    pub fn sym(s: &str) -> Self {
        Label::Sym(Arc::from(s))
    }

    pub fn tuple(items: impl IntoIterator<Item = Label>) -> Self {
        Label::Tuple(items.into_iter().collect::<Vec<_>>().into())
    }

    pub fn tagged(tag: &str, items: impl IntoIterator<Item = Label>) -> Self {
        Label::Tagged(Arc::from(tag), items.into_iter().collect::<Vec<_>>().into())
    }

    pub fn set(items: impl IntoIterator<Item = Label>) -> Self {
        Label::Set(Arc::new(items.into_iter().collect()))
    }

    pub fn is_bot(&self) -> bool {
        matches!(self, Label::Bot)
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Label::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Label::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_tuple(&self) -> Option<&[Label]> {
        match self {
            Label::Tuple(items) => Some(items),
            _ => None,
        }
    }

    /// Payload of a tagged label when its tag equals `tag`.
    pub fn as_tagged(&self, tag: &str) -> Option<&[Label]> {
        match self {
            Label::Tagged(t, items) if &**t == tag => Some(items),
            _ => None,
        }
    }

    pub fn as_set(&self) -> Option<&BTreeSet<Label>> {
        match self {
            Label::Set(items) => Some(items),
            _ => None,
        }
    }

    /// Tagged payload with an exact arity, or a shape error.
    pub fn expect_tagged(&self, tag: &str, arity: usize) -> Result<&[Label], LabelError> {
        match self.as_tagged(tag) {
            Some(items) if items.len() == arity => Ok(items),
            _ => Err(LabelError::shape(format!("{tag}/{arity}"), self)),
        }
    }

    pub fn expect_int(&self) -> Result<i64, LabelError> {
        self.as_int().ok_or_else(|| LabelError::shape("integer", self))
    }
}

impl From<i64> for Label {
    fn from(v: i64) -> Self {
        Label::Int(v)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label::sym(s)
    }
}

fn is_plain_symbol(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

fn write_symbol(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    if is_plain_symbol(s) {
        return f.write_str(s);
    }
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

fn write_seq<'a>(
    f: &mut fmt::Formatter<'_>,
    open: &str,
    close: &str,
    items: impl Iterator<Item = &'a Label>,
) -> fmt::Result {
    f.write_str(open)?;
    for (i, item) in items.enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{item}")?;
    }
    f.write_str(close)
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Bot => f.write_str("_"),
            Label::Int(v) => write!(f, "{v}"),
            Label::Sym(s) => write_symbol(f, s),
            Label::Tuple(items) => write_seq(f, "(", ")", items.iter()),
            Label::Tagged(tag, items) => {
                write_symbol(f, tag)?;
                write_seq(f, "(", ")", items.iter())
            }
            Label::Set(items) => write_seq(f, "{", "}", items.iter()),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, LabelError> {
        Err(LabelError::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn label(&mut self) -> Result<Label, LabelError> {
        self.skip_ws();
        match self.peek() {
            None => self.err("unexpected end of input"),
            Some(b'_') => {
                self.pos += 1;
                Ok(Label::Bot)
            }
            Some(b'(') => {
                self.pos += 1;
                Ok(Label::Tuple(self.items(b')')?.into()))
            }
            Some(b'{') => {
                self.pos += 1;
                Ok(Label::Set(Arc::new(self.items(b'}')?.into_iter().collect())))
            }
            Some(b'-') | Some(b'0'..=b'9') => self.integer(),
            Some(b'"') => {
                let s = self.quoted()?;
                self.after_symbol(s)
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || matches!(c, b'_' | b'-' | b'.') {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let s = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                self.after_symbol(s.to_string())
            }
            Some(c) => self.err(format!("unexpected character `{}`", c as char)),
        }
    }

    fn after_symbol(&mut self, s: String) -> Result<Label, LabelError> {
        if self.eat(b'(') {
            let items = self.items(b')')?;
            Ok(Label::Tagged(Arc::from(s.as_str()), items.into()))
        } else {
            Ok(Label::Sym(Arc::from(s.as_str())))
        }
    }

    fn integer(&mut self) -> Result<Label, LabelError> {
        let start = self.pos;
        self.eat(b'-');
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match text.parse::<i64>() {
            Ok(v) => Ok(Label::Int(v)),
            Err(_) => self.err(format!("bad integer `{text}`")),
        }
    }

    fn quoted(&mut self) -> Result<String, LabelError> {
        self.pos += 1;
        let mut out = Vec::new();
        loop {
            match self.peek() {
                None => return self.err("unterminated string"),
                Some(b'"') => {
                    self.pos += 1;
                    break;
                }
                Some(b'\\') => {
                    self.pos += 1;
                    match self.peek() {
                        Some(b'"') => out.push(b'"'),
                        Some(b'\\') => out.push(b'\\'),
                        Some(b'n') => out.push(b'\n'),
                        _ => return self.err("bad escape"),
                    }
                    self.pos += 1;
                }
                Some(c) => {
                    out.push(c);
                    self.pos += 1;
                }
            }
        }
        String::from_utf8(out).or_else(|_| self.err("invalid utf-8 in string"))
    }

    fn items(&mut self, close: u8) -> Result<Vec<Label>, LabelError> {
        let mut items = Vec::new();
        self.skip_ws();
        if self.eat(close) {
            return Ok(items);
        }
        loop {
            items.push(self.label()?);
            self.skip_ws();
            if self.eat(b',') {
                continue;
            }
            if self.eat(close) {
                return Ok(items);
            }
            return self.err(format!("expected `,` or `{}`", close as char));
        }
    }
}

impl FromStr for Label {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Parser {
            src: s.as_bytes(),
            pos: 0,
        };
        let label = p.label()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return p.err("trailing input");
        }
        Ok(label)
    }
}

/// A typed vertex state that can be written to and read back from a [`Label`].
///
/// The engine is generic over this trait so that systems manipulate native
/// Rust values; files and cross-system tooling see only labels.
pub trait State: Clone + Eq + Ord + std::hash::Hash + fmt::Debug + Send + Sync + 'static {
    fn to_label(&self) -> Label;
    fn from_label(label: &Label) -> Result<Self, LabelError>;
}

impl State for Label {
    fn to_label(&self) -> Label {
        self.clone()
    }

    fn from_label(label: &Label) -> Result<Self, LabelError> {
        Ok(label.clone())
    }
}

impl State for i64 {
    fn to_label(&self) -> Label {
        Label::Int(*self)
    }

    fn from_label(label: &Label) -> Result<Self, LabelError> {
        label.expect_int()
    }
}
