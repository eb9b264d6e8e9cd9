use crate::EvalError;
use seekcad_clients::{ClientError, VlmClient, VlmRequest};
use seekcad_render::Raster;

pub fn g_score_prompt(description: &str) -> String {
    format!(
        "You are grading a rendered CAD model against the description it was built from.\n\
         Give a score from 1 (unrelated) to 5 (exact match); decimals such as 3.5 are allowed.\n\
         Answer with the score only.\n\nDescription: {description}"
    )
}

/// First number in the reply that lies in [1, 5].
pub fn parse_score(reply: &str) -> Option<f64> {
    let b = reply.as_bytes();
    let mut i = 0;
    while i < b.len() {
        if b[i].is_ascii_digit() && (i == 0 || !(b[i - 1].is_ascii_digit() || b[i - 1] == b'.')) {
            let start = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < b.len() && b[i] == b'.' && b[i + 1].is_ascii_digit() {
                i += 1;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if let Ok(v) = reply[start..i].parse::<f64>() {
                if (1.0..=5.0).contains(&v) {
                    return Some(v);
                }
            }
        } else {
            i += 1;
        }
    }
    None
}

pub fn g_score(description: &str, final_image: &Raster, vlm: &dyn VlmClient) -> Result<f64, EvalError> {
    let req = VlmRequest {
        prompt: g_score_prompt(description),
        images: vec![final_image.clone()],
    };
    let mut last = String::new();
    for _ in 0..2 {
        last = vlm.send(&req).map_err(|e: ClientError| EvalError::VlmUnavailable(e.to_string()))?;
        if let Some(s) = parse_score(&last) {
            return Ok(s);
        }
        log::warn!("unparseable score reply {last:?}");
    }
    Err(EvalError::UnparseableScore(last))
}

#[cfg(test)]
mod tests {
    use super::parse_score;

    #[test]
    fn extraction() {
        assert_eq!(parse_score("4.2"), Some(4.2));
        assert_eq!(parse_score("Score: 3.5/5"), Some(3.5));
        assert_eq!(parse_score("I'd say 0.5, no wait, 2"), Some(2.0));
        assert_eq!(parse_score("10 out of 10"), None);
        assert_eq!(parse_score("v1.25"), Some(1.25));
        assert_eq!(parse_score("none"), None);
    }
}
