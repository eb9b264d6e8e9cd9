//! Tokenizer. Produces every newline as a token; the parser decides which
//! ones end a statement.

use super::Span;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Dot,
    Assign,
    Minus,
    Plus,
    Star,
    Newline,
    /// Any character outside the grammar.
    Unknown(char),
    UnterminatedString(String),
    Eof,
}

impl Tok {
    pub fn is_open(&self) -> bool {
        matches!(self, Tok::LParen | Tok::LBracket | Tok::LBrace)
    }

    pub fn is_close(&self) -> bool {
        matches!(self, Tok::RParen | Tok::RBracket | Tok::RBrace)
    }

    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(_) => "number".into(),
            Tok::Str(_) | Tok::UnterminatedString(_) => "string".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
            Tok::Unknown(c) => format!("`{c}`"),
            other => format!("`{}`", punct_text(other)),
        }
    }
}

pub fn punct_text(t: &Tok) -> &'static str {
    match t {
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::LBracket => "[",
        Tok::RBracket => "]",
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::Comma => ",",
        Tok::Colon => ":",
        Tok::Dot => ".",
        Tok::Assign => "=",
        Tok::Minus => "-",
        Tok::Plus => "+",
        Tok::Star => "*",
        _ => "",
    }
}

/// Closing bracket text for an opening token.
pub fn closer_for(t: &Tok) -> char {
    match t {
        Tok::LParen => ')',
        Tok::LBracket => ']',
        _ => '}',
    }
}

pub fn opener_for(t: &Tok) -> Tok {
    match t {
        Tok::RParen => Tok::LParen,
        Tok::RBracket => Tok::LBracket,
        _ => Tok::LBrace,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// Lexes `text`, whose first byte sits at `base_offset` / `base_line` in the
/// original input, so that spans index the original.
pub fn lex(text: &str, base_offset: usize, base_line: usize) -> Vec<Token> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = base_line;
    let mut line_start = 0;
    let span = |start: usize, end: usize, line: usize, line_start: usize| Span {
        line,
        col: start - line_start + 1,
        len: end - start,
        offset: base_offset + start,
    };
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b'\n' => {
                out.push(Token {
                    tok: Tok::Newline,
                    span: span(i, i + 1, line, line_start),
                });
                i += 1;
                line += 1;
                line_start = i;
            }
            b' ' | b'\t' | b'\r' => i += 1,
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'"' | b'\'' => {
                i += 1;
                let mut s = String::new();
                let mut closed = false;
                while i < bytes.len() && bytes[i] != b'\n' {
                    let ch = text[i..].chars().next().unwrap_or('\0');
                    if bytes[i] == c {
                        closed = true;
                        i += 1;
                        break;
                    }
                    if bytes[i] == b'\\' && i + 1 < bytes.len() && bytes[i + 1] != b'\n' {
                        let esc = text[i + 1..].chars().next().unwrap_or('\0');
                        s.push(match esc {
                            'n' => '\n',
                            't' => '\t',
                            other => other,
                        });
                        i += 1 + esc.len_utf8();
                        continue;
                    }
                    s.push(ch);
                    i += ch.len_utf8();
                }
                let tok = if closed { Tok::Str(s) } else { Tok::UnterminatedString(s) };
                out.push(Token {
                    tok,
                    span: span(start, i, line, line_start),
                });
            }
            b'0'..=b'9' | b'.' if c != b'.' || bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit()) => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let raw = &text[start..i];
                let tok = raw.parse::<f64>().map(Tok::Number).unwrap_or(Tok::Unknown('.'));
                out.push(Token {
                    tok,
                    span: span(start, i, line, line_start),
                });
            }
            c if c == b'_' || c.is_ascii_alphabetic() => {
                while i < bytes.len() && (bytes[i] == b'_' || bytes[i].is_ascii_alphanumeric()) {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(text[start..i].to_string()),
                    span: span(start, i, line, line_start),
                });
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('\0');
                let tok = match ch {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    ',' => Tok::Comma,
                    ':' => Tok::Colon,
                    '.' => Tok::Dot,
                    '=' => Tok::Assign,
                    '-' => Tok::Minus,
                    '+' => Tok::Plus,
                    '*' => Tok::Star,
                    other => Tok::Unknown(other),
                };
                i += ch.len_utf8();
                out.push(Token {
                    tok,
                    span: span(start, i, line, line_start),
                });
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: span(i, i, line, line_start),
    });
    out
}
