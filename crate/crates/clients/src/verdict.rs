use crate::{ClientError, VlmClient, VlmRequest};
use seekcad_render::Raster;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictKind {
    Aligned,
    Misaligned,
    Unsure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    /// Discrepancy description; never empty for `Misaligned`.
    pub statement: String,
}

pub const DEFAULT_JUDGE_TEMPLATE: &str = "\
You are checking a CAD model that was built step by step. The images show each \
modeling step in order, with the part added in that step highlighted and earlier \
geometry faded, followed by one image of the finished model. Compare them with \
the designer's reasoning below.
(i) If every step and the finished model agree with the reasoning, answer YES.
(ii) If anything disagrees, answer NO, then a colon, then a clear statement of \
each discrepancy naming the step where it occurs.
If the images do not let you decide, answer UNSURE.
Begin the reply with exactly one of YES, NO or UNSURE.";

const MARKERS: [(&str, VerdictKind); 3] = [
    ("YES", VerdictKind::Aligned),
    ("NO", VerdictKind::Misaligned),
    ("UNSURE", VerdictKind::Unsure),
];

fn is_word_char(c: Option<char>) -> bool {
    c.is_some_and(|c| c.is_alphanumeric() || c == '_')
}

/// Earliest upper-case marker standing as a whole word.
fn find_marker(text: &str) -> Option<(usize, usize, VerdictKind)> {
    MARKERS
        .iter()
        .flat_map(|&(m, kind)| {
            text.match_indices(m)
                .filter(move |&(i, _)| {
                    !is_word_char(text[..i].chars().next_back()) && !is_word_char(text[i + m.len()..].chars().next())
                })
                .map(move |(i, _)| (i, i + m.len(), kind))
        })
        .min_by_key(|&(i, _, _)| i)
}

/// A leading "Yes", "no." or "**Unsure**" in any case.
fn leading_word(text: &str) -> Option<(usize, usize, VerdictKind)> {
    let start = text.find(|c: char| c.is_alphanumeric())?;
    if text[..start].chars().any(|c| !(c.is_whitespace() || "*\"'`>#".contains(c))) {
        return None;
    }
    let end = text[start..].find(|c: char| !c.is_alphanumeric()).map_or(text.len(), |e| start + e);
    let word = text[start..end].to_ascii_uppercase();
    MARKERS.iter().find(|(m, _)| *m == word).map(|&(_, k)| (start, end, k))
}

pub fn parse_verdict(reply: &str) -> Option<Verdict> {
    let (_, end, kind) = find_marker(reply).or_else(|| leading_word(reply))?;
    let statement = reply[end..]
        .trim_start_matches(|c: char| c.is_whitespace() || "*:;,.-\u{2013}\u{2014}".contains(c))
        .trim()
        .to_string();
    if kind == VerdictKind::Misaligned && statement.is_empty() {
        return None;
    }
    Some(Verdict { kind, statement })
}

/// Builds the judging prompt from `template` and the CoT segments.
pub fn judge_prompt(template: &str, cot: &[String], image_count: usize) -> String {
    let mut p = format!("{template}\n\nDesigner's reasoning:\n");
    if cot.is_empty() {
        p.push_str("(no reasoning trace was recorded)\n");
    }
    for (i, seg) in cot.iter().enumerate() {
        p.push_str(&format!("{}. {}\n", i + 1, seg));
    }
    p.push_str(&format!(
        "\nAttached: {} step image(s), then the finished model.\n",
        image_count.saturating_sub(1)
    ));
    p
}

/// Sends step images (then the final image) with the CoT and parses the
/// verdict, retrying once when the reply carries no marker.
pub fn judge_alignment(
    vlm: &dyn VlmClient,
    images: &[Raster],
    cot: &[String],
    template: &str,
) -> Result<Verdict, ClientError> {
    if images.is_empty() {
        return Err(ClientError::InvalidRequest("no images to judge".into()));
    }
    let req = VlmRequest {
        prompt: judge_prompt(template, cot, images.len()),
        images: images.to_vec(),
    };
    let mut last = String::new();
    for _ in 0..2 {
        last = match vlm.send(&req) {
            Ok(reply) => reply,
            Err(e @ ClientError::MockExhausted(_)) => return Err(e),
            Err(e) => return Err(ClientError::VlmUnavailable(e.to_string())),
        };
        if let Some(v) = parse_verdict(&last) {
            return Ok(v);
        }
        log::warn!("verdict reply had no marker, retrying: {last:?}");
    }
    Err(ClientError::UnparseableVerdict(last))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kind(s: &str) -> Option<VerdictKind> {
        parse_verdict(s).map(|v| v.kind)
    }

    #[test]
    fn marker_forms() {
        assert_eq!(kind("YES \u{2014} matches all steps"), Some(VerdictKind::Aligned));
        assert_eq!(kind("UNSURE"), Some(VerdictKind::Unsure));
        assert_eq!(
            parse_verdict("NO: step 2 extrusion direction is reversed"),
            Some(Verdict {
                kind: VerdictKind::Misaligned,
                statement: "step 2 extrusion direction is reversed".into()
            })
        );
        assert_eq!(kind("**Yes**, it matches."), Some(VerdictKind::Aligned));
        assert_eq!(kind("no - the hole is missing"), Some(VerdictKind::Misaligned));
        assert_eq!(kind("Looking closely, the answer is NO: wrong size"), Some(VerdictKind::Misaligned));
    }

    #[test]
    fn lowercase_words_inside_prose_are_not_markers() {
        assert_eq!(kind("There is no issue here"), None);
        assert_eq!(kind("There is no issue. YES"), Some(VerdictKind::Aligned));
        assert_eq!(kind("NOTE: YESTERDAY"), None);
        assert_eq!(kind(""), None);
    }

    #[test]
    fn misaligned_needs_a_statement() {
        assert_eq!(kind("NO"), None);
        assert_eq!(kind("NO:  "), None);
    }

    #[test]
    fn prompt_lists_cot_in_order() {
        let p = judge_prompt("G", &["a".into(), "b".into()], 3);
        assert!(p.starts_with("G\n"));
        assert!(p.contains("1. a\n2. b\n"));
        assert!(p.contains("2 step image(s)"));
    }
}
