//! Catalog defects injected into clean scripts: dropped closers, miscased
//! builder names and prose around a code fence.

use proptest::prelude::*;
use seekcad_core::script::VOCABULARY;

#[derive(Debug, Clone)]
pub enum Defect {
    DropClosers { line: usize, count: usize },
    Recase { nth: usize, style: u8 },
    Fence { lang: bool },
}

pub fn defect() -> impl Strategy<Value = Defect> {
    prop_oneof![
        (any::<usize>(), 1..4usize).prop_map(|(line, count)| Defect::DropClosers { line, count }),
        (any::<usize>(), 0..3u8).prop_map(|(nth, style)| Defect::Recase { nth, style }),
        any::<bool>().prop_map(|lang| Defect::Fence { lang }),
    ]
}

fn recase(word: &str, style: u8) -> String {
    let out = match style {
        0 => word.to_lowercase(),
        1 => word.to_uppercase(),
        _ => {
            let mut c = word.chars();
            let first = c.next().unwrap();
            let flipped = if first.is_uppercase() {
                first.to_lowercase().collect::<String>()
            } else {
                first.to_uppercase().collect()
            };
            flipped + c.as_str()
        }
    };
    if out == word {
        word.to_uppercase()
    } else {
        out
    }
}

pub fn inject(text: &str, d: &Defect) -> String {
    match d {
        Defect::DropClosers { line, count } => {
            let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
            let candidates: Vec<usize> = (0..lines.len())
                .filter(|&i| lines[i].ends_with(')') || lines[i].ends_with(']') || lines[i].ends_with('}'))
                .collect();
            if candidates.is_empty() {
                return text.to_string();
            }
            let l = &mut lines[candidates[line % candidates.len()]];
            for _ in 0..*count {
                if l.ends_with([')', ']', '}']) {
                    l.pop();
                }
            }
            lines.join("\n") + "\n"
        }
        Defect::Recase { nth, style } => {
            let mut calls = Vec::new();
            for b in VOCABULARY {
                for (pos, _) in text.match_indices(&format!("{}(", b.name)) {
                    let prev = text[..pos].chars().last();
                    if prev.is_none_or(|c| !(c.is_alphanumeric() || c == '_')) {
                        calls.push((pos, b.name));
                    }
                }
            }
            if calls.is_empty() {
                return text.to_string();
            }
            calls.sort();
            let (pos, name) = calls[nth % calls.len()];
            format!("{}{}{}", &text[..pos], recase(name, *style), &text[pos + name.len()..])
        }
        Defect::Fence { lang } => {
            let tag = if *lang { "python" } else { "" };
            format!("Sure, here is the CAD code for the part.\n\n```{tag}\n{text}```\n\nIt builds the model step by step.")
        }
    }
}

/// Applies `defects` in order, with at most one fence and that one last.
pub fn apply(original: &str, defects: &[Defect]) -> String {
    let mut broken = original.to_string();
    for d in defects.iter().filter(|d| !matches!(d, Defect::Fence { .. })) {
        broken = inject(&broken, d);
    }
    if let Some(f) = defects.iter().find(|d| matches!(d, Defect::Fence { .. })) {
        broken = inject(&broken, f);
    }
    broken
}
