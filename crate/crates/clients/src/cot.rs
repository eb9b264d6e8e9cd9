/// Splits a reasoning trace into segments at blank lines.
pub fn split_segments(reasoning: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur: Vec<&str> = Vec::new();
    for line in reasoning.lines() {
        if line.trim().is_empty() {
            if !cur.is_empty() {
                out.push(cur.join("\n"));
                cur.clear();
            }
        } else {
            cur.push(line.trim_end());
        }
    }
    if !cur.is_empty() {
        out.push(cur.join("\n"));
    }
    out.into_iter().map(|s| s.trim().to_string()).collect()
}

/// Removes the first `<think>...</think>` block from `answer` and returns it.
/// An unclosed block runs to the end of the text.
pub fn extract_think(answer: &str) -> (String, Option<String>) {
    const OPEN: &str = "<think>";
    const CLOSE: &str = "</think>";
    let Some(start) = answer.find(OPEN) else {
        return (answer.to_string(), None);
    };
    let body_start = start + OPEN.len();
    let (body, rest) = match answer[body_start..].find(CLOSE) {
        Some(end) => (
            &answer[body_start..body_start + end],
            &answer[body_start + end + CLOSE.len()..],
        ),
        None => (&answer[body_start..], ""),
    };
    let stripped = format!("{}{}", &answer[..start], rest);
    (stripped.trim().to_string(), Some(body.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_paragraphs_make_three_segments() {
        let reply = "<think>First the base plate.\nIt is 4 by 3.\n\nThen the hole.\n\n\n  Finally a chamfer.  </think>\n```\ncode\n```";
        let (answer, think) = extract_think(reply);
        assert_eq!(answer, "```\ncode\n```");
        let segs = split_segments(&think.unwrap());
        assert_eq!(segs, ["First the base plate.\nIt is 4 by 3.", "Then the hole.", "Finally a chamfer."]);
    }

    #[test]
    fn no_block_leaves_answer_intact() {
        let (answer, think) = extract_think("just code");
        assert_eq!(answer, "just code");
        assert!(think.is_none());
        assert!(split_segments("").is_empty());
        assert!(split_segments("\n \n").is_empty());
    }

    #[test]
    fn unclosed_block_runs_to_end() {
        let (answer, think) = extract_think("<think>a\n\nb");
        assert_eq!(answer, "");
        assert_eq!(split_segments(&think.unwrap()), ["a", "b"]);
    }
}
