//! The builder-style script language used to write SSR models as code.
//!
//! A script is a straight-line list of statements such as
//!
//! ```text
//! outer = Loop().moveTo(0, 0).pointTag("v0").lineTo(1, 0).curveTag("c0").lineTo(1, 1).lineTo(0, 1).close()
//! face = Profile("p")
//! face.addLoop(outer)
//! sk = Sketch({"origin": [0, 0, 0], "x_axis": [1, 0, 0], "normal": [0, 0, 1]})
//! sk.addProfile(face)
//! result = Extrude(sk, 1.0).Chamfer(0.1, [{"capType": "END", "referenceId": "p"}])
//! ```
//!
//! [`parse`] checks syntax, names and receiver types, [`auto_fix`] repairs a
//! small catalog of mechanical defects, [`lower`] evaluates a script into an
//! [`SsrModelDoc`](crate::model::SsrModelDoc) and [`emit`] goes back.

mod emit;
mod fix;
mod lexer;
mod lower;
mod parser;

use serde::Serialize;
use std::fmt;

pub use emit::emit;
pub use fix::auto_fix;
pub use lower::{lower, LoweringError};
pub use parser::parse;

/// Position in the original input. `line` and `col` are 1-based, `col` and
/// `len` count bytes, and `offset` is the byte offset of the first byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Span {
    pub line: usize,
    pub col: usize,
    pub len: usize,
    pub offset: usize,
}

impl Span {
    pub fn start() -> Span {
        Span { line: 1, col: 1, len: 0, offset: 0 }
    }

    /// Span from the start of `self` to the end of `other`.
    pub fn to(self, other: Span) -> Span {
        let end = (other.offset + other.len).max(self.offset + self.len);
        Span {
            len: end - self.offset,
            ..self
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub span: Span,
    pub code: &'static str,
    pub message: String,
    pub fix_applied: bool,
}

impl Diagnostic {
    pub fn error(span: Span, code: &'static str, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            span,
            code,
            message: message.into(),
            fix_applied: false,
        }
    }

    pub fn warning(span: Span, code: &'static str, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            span,
            code,
            message: message.into(),
            fix_applied: false,
        }
    }

    pub fn fixed(span: Span, code: &'static str, message: impl Into<String>) -> Self {
        Diagnostic {
            fix_applied: true,
            ..Diagnostic::warning(span, code, message)
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}[{}] line {}, col {}: {}", self.code, self.span.line, self.span.col, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Name {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arg {
    pub keyword: Option<Name>,
    /// `*value` unpacks a tuple or list into positional arguments.
    pub star: bool,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    /// `raw` is the literal exactly as written, sign included.
    Number { value: f64, raw: String },
    Str(String),
    NoneLit,
    Bool(bool),
    Var(String),
    Tuple(Vec<Expr>),
    List(Vec<Expr>),
    Map(Vec<(String, Expr)>),
    Call { name: Name, args: Vec<Arg> },
    Method { recv: Box<Expr>, name: Name, args: Vec<Arg> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statement {
    pub target: Option<Name>,
    pub expr: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Script {
    pub statements: Vec<Statement>,
    pub source_text: String,
    /// Non-fatal diagnostics found while parsing.
    pub warnings: Vec<Diagnostic>,
}

/// Static type of a script value, used for receiver checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueType {
    Loop,
    Profile,
    Sketch,
    Shape,
    Nothing,
    Literal,
    Unknown,
}

impl ValueType {
    pub fn name(self) -> &'static str {
        match self {
            ValueType::Loop => "Loop",
            ValueType::Profile => "Profile",
            ValueType::Sketch => "Sketch",
            ValueType::Shape => "shape",
            ValueType::Nothing => "None",
            ValueType::Literal => "literal",
            ValueType::Unknown => "unknown",
        }
    }
}

/// One entry of the builder vocabulary.
#[derive(Debug, Clone, Copy)]
pub struct Builder {
    pub name: &'static str,
    /// `None` for constructors.
    pub receiver: Option<ValueType>,
    pub params: &'static [&'static str],
    /// Number of leading params that must be given.
    pub required: usize,
    /// The single param takes any number of positional values.
    pub variadic: bool,
    pub returns: ValueType,
}

const fn b(
    name: &'static str,
    receiver: Option<ValueType>,
    params: &'static [&'static str],
    required: usize,
    variadic: bool,
    returns: ValueType,
) -> Builder {
    Builder {
        name,
        receiver,
        params,
        required,
        variadic,
        returns,
    }
}

use ValueType as T;

pub const VOCABULARY: &[Builder] = &[
    b("Loop", None, &[], 0, false, T::Loop),
    b("Profile", None, &["tag"], 0, false, T::Profile),
    b("Sketch", None, &["plane"], 1, false, T::Sketch),
    b("Extrude", None, &["sketch", "distance"], 2, false, T::Shape),
    b("Revolve", None, &["sketch", "axis", "angle"], 3, false, T::Shape),
    b("moveTo", Some(T::Loop), &["x", "y"], 2, false, T::Loop),
    b("lineTo", Some(T::Loop), &["x", "y"], 2, false, T::Loop),
    b("threePointArc", Some(T::Loop), &["p1", "p2"], 2, false, T::Loop),
    b("splineTo", Some(T::Loop), &["p"], 1, true, T::Loop),
    b("close", Some(T::Loop), &[], 0, false, T::Loop),
    b("circle", Some(T::Loop), &["radius"], 1, false, T::Loop),
    b("pointTag", Some(T::Loop), &["tag"], 1, false, T::Loop),
    b("curveTag", Some(T::Loop), &["tag"], 1, false, T::Loop),
    b("addLoop", Some(T::Profile), &["loops"], 1, true, T::Nothing),
    b("addProfile", Some(T::Sketch), &["profiles"], 1, true, T::Nothing),
    b("Chamfer", Some(T::Shape), &["width", "entities"], 2, false, T::Shape),
    b("Fillet", Some(T::Shape), &["radius", "entities"], 2, false, T::Shape),
    b("Shell", Some(T::Shape), &["thickness", "entities"], 2, false, T::Shape),
    b("union", Some(T::Shape), &["shape"], 1, false, T::Shape),
    b("cut", Some(T::Shape), &["shape"], 1, false, T::Shape),
    b("intersect", Some(T::Shape), &["shape"], 1, false, T::Shape),
];

pub fn builder(name: &str) -> Option<&'static Builder> {
    VOCABULARY.iter().find(|b| b.name == name)
}

/// Canonical spelling of a vocabulary word written in the wrong case.
pub fn canonical_case(name: &str) -> Option<&'static str> {
    VOCABULARY
        .iter()
        .find(|b| b.name != name && b.name.eq_ignore_ascii_case(name))
        .map(|b| b.name)
}

/// Byte range of the code inside the first ``` fence, if any.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CodeRegion {
    pub start: usize,
    pub end: usize,
    pub first_line: usize,
    /// Span of the opening fence line, when fenced.
    pub fence: Option<Span>,
}

pub(crate) fn code_region(text: &str) -> CodeRegion {
    let mut offset = 0;
    let mut open: Option<(usize, Span)> = None;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        let body = line.trim_end_matches(['\n', '\r']);
        if body.trim_start().starts_with("```") {
            let span = Span {
                line: i + 1,
                col: 1,
                len: body.len(),
                offset,
            };
            match open {
                None => open = Some((offset + line.len(), span)),
                Some((start, fence)) => {
                    return CodeRegion {
                        start,
                        end: offset,
                        first_line: fence.line + 1,
                        fence: Some(fence),
                    }
                }
            }
        }
        offset += line.len();
    }
    match open {
        Some((start, fence)) => CodeRegion {
            start,
            end: text.len(),
            first_line: fence.line + 1,
            fence: Some(fence),
        },
        None => CodeRegion {
            start: 0,
            end: text.len(),
            first_line: 1,
            fence: None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_canonicalization() {
        assert_eq!(canonical_case("extrude"), Some("Extrude"));
        assert_eq!(canonical_case("LineTo"), Some("lineTo"));
        assert_eq!(canonical_case("Extrude"), None);
        assert_eq!(canonical_case("body"), None);
    }

    #[test]
    fn fenced_region() {
        let text = "Here you go:\n```python\na = 1\n```\nthanks";
        let r = code_region(text);
        assert_eq!(&text[r.start..r.end], "a = 1\n");
        assert_eq!(r.first_line, 3);
        let plain = code_region("a = 1");
        assert!(plain.fence.is_none());
        assert_eq!(plain.end, 5);
    }
}
