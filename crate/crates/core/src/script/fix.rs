//! Mechanical repairs for common defects in generated scripts: prose and code
//! fences around the code, vocabulary words in the wrong case, variables
//! spelled with the wrong case, and unbalanced brackets.

use super::lexer::{closer_for, lex, opener_for, Tok, Token};
use super::{builder, canonical_case, code_region, Diagnostic, Span};
use std::collections::BTreeSet;

struct Edit {
    at: usize,
    remove: usize,
    insert: String,
}

/// Returns the repaired text and one fixed warning per repair. Running it
/// again on its own output changes nothing.
pub fn auto_fix(text: &str) -> (String, Vec<Diagnostic>) {
    let region = code_region(text);
    let mut diags = Vec::new();
    if let Some(fence) = region.fence {
        diags.push(Diagnostic::fixed(fence, "strip-fence", "kept only the fenced code block"));
    }
    let code = &text[region.start..region.end];
    let toks = lex(code, region.start, region.first_line);
    let local = |s: Span| s.offset - region.start;
    let mut edits = Vec::new();

    let removed = fix_brackets(&toks, &mut edits, &mut diags, local);
    let kept: Vec<Token> = toks
        .iter()
        .enumerate()
        .filter(|(i, _)| !removed.contains(i))
        .map(|(_, t)| t.clone())
        .collect();
    fix_case(&kept, &mut edits, &mut diags, local);

    edits.sort_by_key(|e| e.at);
    let mut out = code.to_string();
    for e in edits.iter().rev() {
        out.replace_range(e.at..e.at + e.remove, &e.insert);
    }
    diags.sort_by_key(|d| d.span.offset);
    (out, diags)
}

fn next_is(toks: &[Token], i: usize, t: Tok) -> bool {
    toks.get(i + 1).is_some_and(|n| n.tok == t)
}

fn fix_case(toks: &[Token], edits: &mut Vec<Edit>, diags: &mut Vec<Diagnostic>, local: impl Fn(Span) -> usize) {
    let starts_line = |i: usize| i == 0 || toks[i - 1].tok == Tok::Newline;
    let defined: BTreeSet<&str> = toks
        .iter()
        .enumerate()
        .filter_map(|(i, t)| match &t.tok {
            Tok::Ident(n) if starts_line(i) && next_is(toks, i, Tok::Assign) => Some(n.as_str()),
            _ => None,
        })
        .collect();
    for (i, t) in toks.iter().enumerate() {
        let Tok::Ident(name) = &t.tok else { continue };
        let replacement = if next_is(toks, i, Tok::LParen) {
            canonical_case(name).map(|c| (c.to_string(), "vocabulary-case"))
        } else if next_is(toks, i, Tok::Assign)
            || (i > 0 && toks[i - 1].tok == Tok::Dot)
            || defined.contains(name.as_str())
            || matches!(name.as_str(), "None" | "True" | "False")
        {
            None
        } else {
            let mut hits = defined.iter().filter(|d| d.eq_ignore_ascii_case(name));
            match (hits.next(), hits.next()) {
                (Some(d), None) => Some((d.to_string(), "variable-case")),
                _ => None,
            }
        };
        if let Some((fixed, code)) = replacement {
            diags.push(Diagnostic::fixed(t.span, code, format!("`{name}` rewritten as `{fixed}`")));
            edits.push(Edit {
                at: local(t.span),
                remove: t.span.len,
                insert: fixed,
            });
        }
    }
}

/// Whether the line starting at `next` continues the statement left open by
/// `stack`. An unindented line starts a new statement when the previous line
/// ends in a token that can end an expression, when it is an assignment that
/// cannot be a keyword argument of the innermost open call, or when that call
/// takes no arguments at all.
fn continues(toks: &[Token], stack: &[&Token], prev_last: &Token, next: usize, col: usize) -> bool {
    if col > 1 {
        return true;
    }
    let innermost_call = stack.last().and_then(|open| {
        let i = toks.iter().position(|t| std::ptr::eq(t, *open))?;
        match (&open.tok, i.checked_sub(1).map(|j| &toks[j].tok)) {
            (Tok::LParen, Some(Tok::Ident(name))) => builder(name),
            _ => None,
        }
    });
    // Closers with no opener on the stack are deleted whatever is decided here.
    let after = toks[next + 1..]
        .iter()
        .find(|t| !(t.tok.is_close() && !stack.iter().any(|o| o.tok == opener_for(&t.tok))));
    if let (Tok::Ident(name), Some(Tok::Assign)) = (&toks[next].tok, after.map(|t| &t.tok)) {
        if !innermost_call.is_some_and(|b| b.params.contains(&name.as_str())) {
            return false;
        }
    }
    if prev_last.tok == Tok::LParen && innermost_call.is_some_and(|b| b.params.is_empty()) {
        return false;
    }
    matches!(
        prev_last.tok,
        Tok::Comma | Tok::LParen | Tok::LBracket | Tok::LBrace | Tok::Colon | Tok::Assign | Tok::Dot | Tok::Plus | Tok::Minus | Tok::Star
    )
}

/// First token of the following lines that the repair keeps, with the column
/// it will have once unmatched closers before it on its line are removed.
fn first_surviving(toks: &[Token], lines: &[Vec<usize>], stack: &[&Token]) -> Option<(usize, usize)> {
    for line in lines {
        let mut removed = 0;
        for &i in line {
            let t = &toks[i];
            if t.tok.is_close() && !stack.iter().any(|o| o.tok == opener_for(&t.tok)) {
                removed += t.span.len;
                continue;
            }
            return Some((i, t.span.col - removed));
        }
    }
    None
}

/// Returns the indices of the tokens it deletes.
fn fix_brackets(
    toks: &[Token],
    edits: &mut Vec<Edit>,
    diags: &mut Vec<Diagnostic>,
    local: impl Fn(Span) -> usize,
) -> Vec<usize> {
    let mut removed = Vec::new();
    // Lines as index ranges of non-newline tokens.
    let mut lines: Vec<Vec<usize>> = vec![Vec::new()];
    for (i, t) in toks.iter().enumerate() {
        match t.tok {
            Tok::Newline => lines.push(Vec::new()),
            Tok::Eof => {}
            _ => lines.last_mut().unwrap().push(i),
        }
    }
    lines.retain(|l| !l.is_empty());
    let mut stack: Vec<&Token> = Vec::new();
    for (li, line) in lines.iter().enumerate() {
        let mut kept_end: Option<usize> = None;
        for &i in line {
            let t = &toks[i];
            let glued = kept_end == Some(t.span.offset);
            kept_end = Some(t.span.offset + t.span.len);
            if t.tok.is_open() {
                stack.push(t);
            } else if t.tok.is_close() {
                let want = opener_for(&t.tok);
                if stack.last().is_some_and(|o| o.tok == want) {
                    stack.pop();
                } else if let Some(depth) = stack.iter().rposition(|o| o.tok == want) {
                    let missing: String = stack[depth + 1..].iter().rev().map(|o| closer_for(&o.tok)).collect();
                    stack.truncate(depth);
                    diags.push(Diagnostic::fixed(
                        Span { len: 0, ..t.span },
                        "balance-brackets",
                        format!("inserted missing `{missing}`"),
                    ));
                    edits.push(Edit {
                        at: local(t.span),
                        remove: 0,
                        insert: missing,
                    });
                } else if toks.get(i + 1).is_some_and(|n| n.tok == Tok::Unknown('`')) {
                    // Deleting it could turn the line into a code fence.
                } else {
                    removed.push(i);
                    // Keep neighbours that touch on both sides apart, e.g. `0].`.
                    let next_touches = toks
                        .get(i + 1)
                        .is_some_and(|n| n.span.offset == t.span.offset + t.span.len && !matches!(n.tok, Tok::Newline | Tok::Eof));
                    let gap = if glued && next_touches { " " } else { "" };
                    kept_end = None;
                    diags.push(Diagnostic::fixed(
                        t.span,
                        "balance-brackets",
                        format!("removed unmatched `{}`", super::lexer::punct_text(&t.tok)),
                    ));
                    edits.push(Edit {
                        at: local(t.span),
                        remove: t.span.len,
                        insert: gap.to_string(),
                    });
                }
            }
        }
        if stack.is_empty() {
            continue;
        }
        let last = &toks[*line.last().unwrap()];
        if matches!(last.tok, Tok::UnterminatedString(_)) {
            continue;
        }
        let close_here = match first_surviving(toks, &lines[li + 1..], &stack) {
            None => true,
            Some((next, col)) => !continues(toks, &stack, last, next, col),
        };
        if close_here {
            let missing: String = stack.iter().rev().map(|o| closer_for(&o.tok)).collect();
            stack.clear();
            let span = Span {
                line: last.span.line,
                col: last.span.col + last.span.len,
                len: 0,
                offset: last.span.offset + last.span.len,
            };
            diags.push(Diagnostic::fixed(
                span,
                "balance-brackets",
                format!("closed unbalanced brackets with `{missing}`"),
            ));
            edits.push(Edit {
                at: local(span),
                remove: 0,
                insert: missing,
            });
        }
    }
    removed
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed(text: &str) -> String {
        auto_fix(text).0
    }

    #[test]
    fn closes_trailing_parenthesis() {
        assert_eq!(fixed("body = Extrude(sk1, 1.0"), "body = Extrude(sk1, 1.0)");
        let (_, d) = auto_fix("body = Extrude(sk1, 1.0");
        assert_eq!(d.len(), 1);
        assert!(d[0].fix_applied);
        assert_eq!(d[0].span.col, 24);
    }

    #[test]
    fn canonical_vocabulary_case() {
        assert_eq!(fixed("body = extrude(sk1, 1.0)"), "body = Extrude(sk1, 1.0)");
        assert_eq!(fixed("l = loop().MoveTo(0, 0).LineTo(1, 0)"), "l = Loop().moveTo(0, 0).lineTo(1, 0)");
    }

    #[test]
    fn variable_case() {
        assert_eq!(fixed("Sk = Sketch(p)\nb = Extrude(sk, 1)"), "Sk = Sketch(p)\nb = Extrude(Sk, 1)");
    }

    #[test]
    fn valid_text_unchanged() {
        let t = "a = Loop().moveTo(0, 0)\nb = [\n  {'k': (1, 2)},\n]\n";
        assert_eq!(auto_fix(t), (t.to_string(), vec![]));
    }

    #[test]
    fn per_line_and_nested_repairs() {
        assert_eq!(
            fixed("p.addLoop(Loop().moveTo(0, 0\nq = Profile('x'\n"),
            "p.addLoop(Loop().moveTo(0, 0))\nq = Profile('x')\n"
        );
        assert_eq!(fixed("x = [(1, 2]\n"), "x = [(1, 2)]\n");
        assert_eq!(fixed("x = f(1))\n"), "x = f(1)\n");
        assert_eq!(fixed("x = f([1 # note\n"), "x = f([1]) # note\n");
    }

    #[test]
    fn multi_line_call_left_alone_until_statement_ends() {
        let t = "s = s.Chamfer(0.1, [\n    {'capType': 'END', 'referenceId': 'p'}\ny = 1\n";
        assert_eq!(
            fixed(t),
            "s = s.Chamfer(0.1, [\n    {'capType': 'END', 'referenceId': 'p'}])\ny = 1\n"
        );
    }

    #[test]
    fn assignment_after_open_call_starts_a_statement() {
        assert_eq!(
            fixed("h.addLoop(Loop().moveTo(0, 0).close(\nsk = Sketch(x)\ne = Extrude(\n    sketch=sk, distance=1)\n"),
            "h.addLoop(Loop().moveTo(0, 0).close())\nsk = Sketch(x)\ne = Extrude(\n    sketch=sk, distance=1)\n"
        );
        assert_eq!(fixed("e = Extrude(\nsketch=sk,\ndistance=1)"), "e = Extrude(\nsketch=sk,\ndistance=1)");
        assert_eq!(fixed("l = Loop(\nl.close()"), "l = Loop()\nl.close()");
    }

    #[test]
    fn strips_fences() {
        let t = "Here is the model:\n```python\nr = Extrude(sk, 1\n```\nHope it helps.";
        let (out, d) = auto_fix(t);
        assert_eq!(out, "r = Extrude(sk, 1)\n");
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].code, "strip-fence");
        assert_eq!(d[1].span.line, 3);
        assert_eq!(&t[d[1].span.offset - 1..d[1].span.offset], "1");
    }

    #[test]
    fn idempotent_on_examples() {
        for t in [
            "body = Extrude(sk1, 1.0",
            "```\nL = loop().moveTo(0, 0\n```",
            "x = f(1))\ny = [",
            "a = (1, [2, {'k': 3\n",
        ] {
            let (once, _) = auto_fix(t);
            assert_eq!(auto_fix(&once), (once.clone(), vec![]), "{t:?}");
        }
    }
}
