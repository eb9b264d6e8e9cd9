use super::SsrModelDoc;
use thiserror::Error;

/// The document text could not be decoded.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("malformed document at line {line}, column {column}: {reason}")]
pub struct MalformedDocument {
    pub line: usize,
    pub column: usize,
    pub reason: String,
}

pub fn read_doc(bytes: &[u8]) -> Result<SsrModelDoc, MalformedDocument> {
    let text = std::str::from_utf8(bytes).map_err(|e| MalformedDocument {
        line: 0,
        column: e.valid_up_to(),
        reason: "invalid UTF-8".into(),
    })?;
    let doc: SsrModelDoc = serde_json::from_str(text).map_err(|e| {
        let reason = if e.to_string().contains("out of range")
            || looks_non_finite(text, e.line(), e.column())
        {
            "non-finite number".to_string()
        } else {
            e.to_string()
        };
        MalformedDocument {
            line: e.line(),
            column: e.column(),
            reason,
        }
    })?;
    Ok(doc)
}

/// Pretty-printed canonical JSON with a trailing newline.
pub fn write_doc(doc: &SsrModelDoc) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(doc).expect("documents always serialize");
    out.push(b'\n');
    out
}

fn looks_non_finite(text: &str, line: usize, column: usize) -> bool {
    let Some(l) = text.lines().nth(line.saturating_sub(1)) else {
        return false;
    };
    // serde reports the column of the offending character; scan a small window.
    let start = column.saturating_sub(12).min(l.len());
    let end = (column + 12).min(l.len());
    let window = l.get(start..end).unwrap_or(l);
    ["NaN", "nan", "Infinity", "inf"]
        .iter()
        .any(|tok| window.contains(tok))
        || number_overflows(window)
}

fn number_overflows(window: &str) -> bool {
    window
        .split(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '-' | '+')))
        .filter(|s| s.chars().any(|c| c.is_ascii_digit()))
        .any(|s| s.parse::<f64>().map(|v| !v.is_finite()).unwrap_or(false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;

    fn cube() -> SsrModelDoc {
        let sketch = Sketch {
            plane: PlaneFrame::xy(),
            profiles: vec![Profile {
                profile_tag: Some("p".into()),
                loops: vec![Loop::polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])],
            }],
        };
        SsrModelDoc::single(
            "cube",
            SsrTriplet {
                sketch,
                feature: SweepFeature::extrude(Extent::Single(1.0)),
                refinements: vec![],
            },
        )
    }

    #[test]
    fn round_trip_is_identity() {
        let doc = cube();
        let bytes = write_doc(&doc);
        let back = read_doc(&bytes).unwrap();
        assert_eq!(back, doc);
        assert_eq!(write_doc(&back), bytes);
    }

    #[test]
    fn truncated_file_is_malformed() {
        let bytes = write_doc(&cube());
        let err = read_doc(&bytes[..bytes.len() / 2]).unwrap_err();
        assert!(err.line > 0);
    }

    #[test]
    fn nan_coordinate_is_rejected() {
        let text = String::from_utf8(write_doc(&cube())).unwrap();
        let bad = text.replacen("\"origin\": [\n", "\"origin\": [\n NaN,", 1);
        let bad = if bad == text {
            text.replacen("0.0", "NaN", 1)
        } else {
            bad
        };
        let err = read_doc(bad.as_bytes()).unwrap_err();
        assert_eq!(err.reason, "non-finite number");
        let overflow = text.replacen("1.0", "1e999", 1);
        assert_eq!(read_doc(overflow.as_bytes()).unwrap_err().reason, "non-finite number");
    }
}
