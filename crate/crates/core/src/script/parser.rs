//! Recursive-descent parser plus a name/receiver checking pass.

use super::lexer::{lex, Tok, Token};
use super::{builder, code_region, Arg, Diagnostic, Expr, ExprKind, Name, Script, Span, Statement, ValueType};
use std::collections::HashMap;

const CONTROL_WORDS: &[&str] = &[
    "if", "elif", "else", "for", "while", "def", "class", "return", "lambda", "with", "try", "except", "finally",
    "raise", "yield", "async", "await", "global", "del", "pass", "break", "continue",
];

struct Parser<'a> {
    text: &'a str,
    toks: Vec<Token>,
    pos: usize,
    depth: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl<'a> Parser<'a> {
    /// Next significant token; newlines inside brackets are skipped.
    fn peek_at(&self, ahead: usize) -> &Token {
        let mut i = self.pos;
        let mut left = ahead;
        loop {
            let t = &self.toks[i.min(self.toks.len() - 1)];
            if self.depth > 0 && t.tok == Tok::Newline {
                i += 1;
                continue;
            }
            if left == 0 || t.tok == Tok::Eof {
                return t;
            }
            left -= 1;
            i += 1;
        }
    }

    fn peek(&self) -> &Token {
        self.peek_at(0)
    }

    fn bump(&mut self) -> Token {
        while self.depth > 0 && self.toks[self.pos].tok == Tok::Newline {
            self.pos += 1;
        }
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> PResult<Token> {
        let t = self.peek().clone();
        if t.tok == want {
            Ok(self.bump())
        } else {
            Err(unexpected(&t, what))
        }
    }

    fn raw(&self, span: Span) -> String {
        self.text[span.offset..span.offset + span.len].to_string()
    }

    fn statement(&mut self) -> PResult<Statement> {
        let first = self.peek().clone();
        let target = match (&first.tok, &self.peek_at(1).tok) {
            (Tok::Ident(name), Tok::Assign) => {
                self.bump();
                self.bump();
                Some(Name {
                    name: name.clone(),
                    span: first.span,
                })
            }
            _ => None,
        };
        let expr = self.expr()?;
        let span = first.span.to(expr.span);
        Ok(Statement { target, expr, span })
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while self.peek().tok == Tok::Dot {
            self.bump();
            let t = self.bump();
            let Tok::Ident(name) = t.tok.clone() else {
                return Err(unexpected(&t, "a method name after `.`"));
            };
            if self.peek().tok != Tok::LParen {
                return Err(Diagnostic::error(
                    t.span,
                    "attribute-access",
                    format!("`.{name}` must be a method call"),
                ));
            }
            let (args, end) = self.args()?;
            e = Expr {
                span: e.span.to(end),
                kind: ExprKind::Method {
                    recv: Box::new(e),
                    name: Name { name, span: t.span },
                    args,
                },
            };
        }
        Ok(e)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let t = self.bump();
        let span = t.span;
        let kind = match t.tok {
            Tok::Number(value) => ExprKind::Number {
                value,
                raw: self.raw(span),
            },
            Tok::Minus | Tok::Plus => {
                let n = self.bump();
                let Tok::Number(v) = n.tok else {
                    return Err(unexpected(&n, "a number after the sign"));
                };
                let whole = span.to(n.span);
                let value = if t.tok == Tok::Minus { -v } else { v };
                return Ok(Expr {
                    kind: ExprKind::Number {
                        value,
                        raw: self.raw(whole),
                    },
                    span: whole,
                });
            }
            Tok::Str(s) => ExprKind::Str(s),
            Tok::UnterminatedString(_) => {
                return Err(Diagnostic::error(span, "unterminated-string", "string literal is not closed"))
            }
            Tok::Ident(name) => match name.as_str() {
                "None" => ExprKind::NoneLit,
                "True" => ExprKind::Bool(true),
                "False" => ExprKind::Bool(false),
                _ if self.peek().tok == Tok::LParen => {
                    let (args, end) = self.args()?;
                    return Ok(Expr {
                        kind: ExprKind::Call {
                            name: Name { name, span },
                            args,
                        },
                        span: span.to(end),
                    });
                }
                _ => ExprKind::Var(name),
            },
            Tok::LParen => {
                self.depth += 1;
                let (items, trailing_comma, end) = self.sequence(Tok::RParen)?;
                self.depth -= 1;
                if items.len() == 1 && !trailing_comma {
                    let mut inner = items.into_iter().next().unwrap();
                    inner.span = span.to(end);
                    return Ok(inner);
                }
                return Ok(Expr {
                    kind: ExprKind::Tuple(items),
                    span: span.to(end),
                });
            }
            Tok::LBracket => {
                self.depth += 1;
                let (items, _, end) = self.sequence(Tok::RBracket)?;
                self.depth -= 1;
                return Ok(Expr {
                    kind: ExprKind::List(items),
                    span: span.to(end),
                });
            }
            Tok::LBrace => {
                self.depth += 1;
                let mut entries = Vec::new();
                let end = loop {
                    if self.peek().tok == Tok::RBrace {
                        break self.bump().span;
                    }
                    let k = self.bump();
                    let Tok::Str(key) = k.tok else {
                        return Err(unexpected(&k, "a string key"));
                    };
                    self.expect(Tok::Colon, "`:` after the key")?;
                    let v = self.expr()?;
                    entries.push((key, v));
                    match self.peek().tok {
                        Tok::Comma => {
                            self.bump();
                        }
                        Tok::RBrace => {}
                        _ => return Err(unexpected(&self.peek().clone(), "`,` or `}`")),
                    }
                };
                self.depth -= 1;
                return Ok(Expr {
                    kind: ExprKind::Map(entries),
                    span: span.to(end),
                });
            }
            _ => return Err(unexpected(&t, "a value")),
        };
        Ok(Expr { kind, span })
    }

    /// Comma-separated expressions up to `close`; the opener is already consumed.
    fn sequence(&mut self, close: Tok) -> PResult<(Vec<Expr>, bool, Span)> {
        let mut items = Vec::new();
        let mut trailing = false;
        loop {
            if self.peek().tok == close {
                let end = self.bump().span;
                return Ok((items, trailing, end));
            }
            items.push(self.expr()?);
            trailing = false;
            let t = self.peek().clone();
            if t.tok == Tok::Comma {
                self.bump();
                trailing = true;
            } else if t.tok != close {
                return Err(unexpected(&t, &format!("`,` or `{}`", super::lexer::punct_text(&close))));
            }
        }
    }

    fn args(&mut self) -> PResult<(Vec<Arg>, Span)> {
        self.expect(Tok::LParen, "`(`")?;
        self.depth += 1;
        let mut args = Vec::new();
        let end = loop {
            if self.peek().tok == Tok::RParen {
                break self.bump().span;
            }
            let mut arg = Arg {
                keyword: None,
                star: false,
                value: Expr {
                    kind: ExprKind::NoneLit,
                    span: Span::start(),
                },
            };
            let t = self.peek().clone();
            if t.tok == Tok::Star {
                self.bump();
                arg.star = true;
            } else if let (Tok::Ident(name), Tok::Assign) = (&t.tok, &self.peek_at(1).tok) {
                arg.keyword = Some(Name {
                    name: name.clone(),
                    span: t.span,
                });
                self.bump();
                self.bump();
            }
            arg.value = self.expr()?;
            args.push(arg);
            let t = self.peek().clone();
            match t.tok {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RParen => {}
                _ => return Err(unexpected(&t, "`,` or `)`")),
            }
        };
        self.depth -= 1;
        Ok((args, end))
    }

    /// Skips to the end of the current line after an error.
    fn recover(&mut self) {
        self.depth = 0;
        while !matches!(self.toks[self.pos].tok, Tok::Newline | Tok::Eof) {
            self.pos += 1;
        }
    }
}

fn unexpected(t: &Token, wanted: &str) -> Diagnostic {
    match &t.tok {
        Tok::UnterminatedString(_) => Diagnostic::error(t.span, "unterminated-string", "string literal is not closed"),
        Tok::Eof => Diagnostic::error(t.span, "unexpected-eof", format!("input ended; expected {wanted}")),
        Tok::Newline => Diagnostic::error(t.span, "unexpected-eol", format!("line ended; expected {wanted}")),
        other => Diagnostic::error(
            t.span,
            "unexpected-token",
            format!("unexpected {}; expected {wanted}", other.describe()),
        ),
    }
}

/// Parses a script. Only the first fenced block is read when the input
/// contains ``` fences. Warnings are kept on the returned script.
pub fn parse(text: &str) -> Result<Script, Vec<Diagnostic>> {
    let region = code_region(text);
    let code = &text[region.start..region.end];
    let mut p = Parser {
        text,
        toks: lex(code, region.start, region.first_line),
        pos: 0,
        depth: 0,
    };
    let mut diags = Vec::new();
    let mut statements = Vec::new();
    loop {
        while p.toks[p.pos].tok == Tok::Newline {
            p.pos += 1;
        }
        let t = p.toks[p.pos].clone();
        if t.tok == Tok::Eof {
            break;
        }
        if let Tok::Ident(word) = &t.tok {
            if word == "import" || (word == "from" && matches!(p.toks[p.pos + 1].tok, Tok::Ident(_))) {
                diags.push(Diagnostic::warning(t.span, "ignored-import", "import lines are ignored"));
                p.recover();
                continue;
            }
            if CONTROL_WORDS.contains(&word.as_str()) {
                diags.push(Diagnostic::error(
                    t.span,
                    "unsupported-statement",
                    format!("`{word}` is not supported; scripts are straight-line builder calls"),
                ));
                p.recover();
                continue;
            }
        }
        match p.statement() {
            Ok(s) => {
                let end = p.toks[p.pos].clone();
                if matches!(end.tok, Tok::Newline | Tok::Eof) {
                    statements.push(s);
                } else {
                    diags.push(unexpected(&end, "end of line"));
                    p.recover();
                }
            }
            Err(d) => {
                diags.push(d);
                p.recover();
            }
        }
    }
    if statements.is_empty() && diags.iter().all(|d| d.severity != super::Severity::Error) {
        let before = &text[..region.start];
        let span = Span {
            line: before.matches('\n').count() + 1,
            col: region.start - before.rfind('\n').map_or(0, |i| i + 1) + 1,
            len: 0,
            offset: region.start,
        };
        diags.push(Diagnostic::error(span, "empty-script", "empty script"));
    }
    check(&statements, &mut diags);
    if diags.iter().any(|d| d.severity == super::Severity::Error) {
        return Err(diags);
    }
    Ok(Script {
        statements,
        source_text: text.to_string(),
        warnings: diags,
    })
}

fn check(statements: &[Statement], diags: &mut Vec<Diagnostic>) {
    let mut env: HashMap<String, ValueType> = HashMap::new();
    for s in statements {
        let ty = infer(&s.expr, &env, diags);
        if let Some(t) = &s.target {
            env.insert(t.name.clone(), ty);
        }
    }
}

fn infer(e: &Expr, env: &HashMap<String, ValueType>, diags: &mut Vec<Diagnostic>) -> ValueType {
    match &e.kind {
        ExprKind::Var(name) => match env.get(name) {
            Some(t) => *t,
            None => {
                diags.push(Diagnostic::error(
                    e.span,
                    "undefined-identifier",
                    format!("undefined identifier {name}"),
                ));
                ValueType::Unknown
            }
        },
        ExprKind::Tuple(items) | ExprKind::List(items) => {
            for i in items {
                infer(i, env, diags);
            }
            ValueType::Literal
        }
        ExprKind::Map(entries) => {
            for (_, v) in entries {
                infer(v, env, diags);
            }
            ValueType::Literal
        }
        ExprKind::Call { name, args } => {
            for a in args {
                infer(&a.value, env, diags);
            }
            match builder(&name.name) {
                Some(b) if b.receiver.is_none() => {
                    check_args(b, name, args, diags);
                    b.returns
                }
                Some(b) => {
                    diags.push(Diagnostic::error(
                        name.span,
                        "missing-receiver",
                        format!("`{}` is a method of {}, not a constructor", b.name, b.receiver.unwrap().name()),
                    ));
                    ValueType::Unknown
                }
                None => {
                    diags.push(unknown_call(name));
                    ValueType::Unknown
                }
            }
        }
        ExprKind::Method { recv, name, args } => {
            let rt = infer(recv, env, diags);
            for a in args {
                infer(&a.value, env, diags);
            }
            match builder(&name.name) {
                Some(b) if b.receiver.is_some() => {
                    let want = b.receiver.unwrap();
                    if rt != want && rt != ValueType::Unknown {
                        diags.push(Diagnostic::error(
                            name.span,
                            "receiver-mismatch",
                            format!("`{}` needs a {} receiver, got {}", b.name, want.name(), rt.name()),
                        ));
                    }
                    check_args(b, name, args, diags);
                    b.returns
                }
                Some(b) => {
                    diags.push(Diagnostic::error(
                        name.span,
                        "not-a-method",
                        format!("`{}` is a constructor, not a method", b.name),
                    ));
                    ValueType::Unknown
                }
                None => {
                    diags.push(unknown_call(name));
                    ValueType::Unknown
                }
            }
        }
        _ => ValueType::Literal,
    }
}

fn unknown_call(name: &Name) -> Diagnostic {
    Diagnostic::error(
        name.span,
        "unknown-call",
        format!("`{}` is not part of the builder vocabulary", name.name),
    )
}

fn check_args(b: &super::Builder, name: &Name, args: &[Arg], diags: &mut Vec<Diagnostic>) {
    let mut given = vec![false; b.params.len()];
    let mut positional = 0;
    for a in args {
        match &a.keyword {
            Some(k) => match b.params.iter().position(|p| *p == k.name) {
                Some(i) if !given[i] => given[i] = true,
                Some(_) => diags.push(Diagnostic::error(
                    k.span,
                    "duplicate-argument",
                    format!("`{}` given twice", k.name),
                )),
                None => diags.push(Diagnostic::error(
                    k.span,
                    "unknown-argument",
                    format!("`{}` has no parameter `{}`", b.name, k.name),
                )),
            },
            None if b.variadic => {
                if let Some(g) = given.first_mut() {
                    *g = true;
                }
            }
            None if a.star => {
                given.iter_mut().skip(positional).for_each(|g| *g = true);
            }
            None => {
                if positional < given.len() {
                    given[positional] = true;
                } else {
                    diags.push(Diagnostic::error(
                        a.value.span,
                        "too-many-arguments",
                        format!("`{}` takes at most {} argument(s)", b.name, b.params.len()),
                    ));
                }
                positional += 1;
            }
        }
    }
    if let Some(i) = (0..b.required).find(|&i| !given[i]) {
        diags.push(Diagnostic::error(
            name.span,
            "missing-argument",
            format!("`{}` is missing `{}`", b.name, b.params[i]),
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errors(text: &str) -> Vec<Diagnostic> {
        parse(text).unwrap_err()
    }

    #[test]
    fn empty_input() {
        let d = errors("");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].message, "empty script");
        assert_eq!(errors("  \n# only a comment\n")[0].code, "empty-script");
    }

    #[test]
    fn undefined_identifier_has_span() {
        let d = errors("body = Extrude(sk1, 1.0)");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].message, "undefined identifier sk1");
        assert_eq!((d[0].span.line, d[0].span.col, d[0].span.len), (1, 16, 3));
    }

    #[test]
    fn multi_line_calls_and_literals() {
        let s = parse("l = Loop().moveTo(-1, +2.50)\nx = [\n  {'a': (1, 2,)},\n  (3,),\n]\n").unwrap();
        assert_eq!(s.statements.len(), 2);
        let ExprKind::Method { args, .. } = &s.statements[0].expr.kind else { panic!() };
        let raws: Vec<_> = args
            .iter()
            .map(|a| match &a.value.kind {
                ExprKind::Number { raw, .. } => raw.clone(),
                _ => panic!(),
            })
            .collect();
        assert_eq!(raws, ["-1", "+2.50"]);
    }

    #[test]
    fn receiver_mismatch() {
        let d = errors("l = Loop()\nl.addLoop(l)");
        assert_eq!(d[0].code, "receiver-mismatch");
        assert_eq!(d[0].span.line, 2);
    }

    #[test]
    fn unknown_and_control_flow() {
        let d = errors("for i in x:\n  pass\nshow(1)\n");
        let codes: Vec<_> = d.iter().map(|d| d.code).collect();
        assert!(codes.contains(&"unsupported-statement"));
        assert!(codes.contains(&"unknown-call"));
    }

    #[test]
    fn unclosed_paren_reports_eof() {
        let d = errors("l = Loop().moveTo(0, 0");
        assert_eq!(d[0].code, "unexpected-eof");
    }

    #[test]
    fn only_first_fence_is_parsed() {
        let text = "Sure!\n```python\nl = Loop()\n```\nmore prose\n```\nbad(\n```";
        let s = parse(text).unwrap();
        assert_eq!(s.statements.len(), 1);
        assert_eq!(s.statements[0].span.line, 3);
    }

    #[test]
    fn arity_checks() {
        let codes: Vec<_> = errors("l = Loop().moveTo(1)\nm = Loop().lineTo(1, 2, 3)\np = Profile(name='x')")
            .iter()
            .map(|d| d.code)
            .collect();
        assert_eq!(codes, ["missing-argument", "too-many-arguments", "unknown-argument"]);
    }

    #[test]
    fn imports_are_warnings() {
        let s = parse("from cad import *\nl = Loop()").unwrap();
        assert_eq!(s.warnings.len(), 1);
    }
}
