use seekcad_clients::*;
use seekcad_render::Raster;
use serde_json::Value;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::time::Duration;

/// Answers one connection per canned `(status, body)` and forwards each
/// request's path and JSON body.
fn serve(replies: Vec<(u16, String)>) -> (String, mpsc::Receiver<(String, Value)>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        for (status, body) in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line.trim().is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            let path = request_line.split_whitespace().nth(1).unwrap().to_string();
            tx.send((path, serde_json::from_slice(&buf).unwrap())).unwrap();
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (url, rx)
}

fn quick(url: &str) -> HttpConfig {
    HttpConfig {
        backoff: Duration::from_millis(10),
        timeout: Duration::from_secs(10),
        ..HttpConfig::new(url, "test-model")
    }
}

#[test]
fn chat_sends_sampling_parameters_and_reads_reasoning() {
    let reply = r#"{"choices": [{"message": {"content": "```\nx = 1\n```", "reasoning_content": "plan\n\nbuild"}}],
                    "usage": {"prompt_tokens": 12, "completion_tokens": 5}}"#;
    let (url, rx) = serve(vec![(200, reply.into())]);
    let before = network_requests();
    let llm = HttpLlm { cfg: quick(&url) };
    let r = llm.chat(&ChatRequest::new("system text", "make a cube")).unwrap();
    assert_eq!(r.answer, "```\nx = 1\n```");
    assert_eq!(r.cot, ["plan", "build"]);
    assert_eq!(r.usage.prompt_tokens, 12);
    let (path, body) = rx.recv().unwrap();
    assert_eq!(path, "/v1/chat/completions");
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["temperature"], 0.7);
    assert_eq!(body["top_p"], 0.8);
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["messages"][1]["content"], "make a cube");
    assert!(network_requests() > before);
}

#[test]
fn server_errors_are_retried_once() {
    let ok = r#"{"choices": [{"message": {"content": "<think>why</think>YES"}}]}"#;
    let (url, rx) = serve(vec![(503, "busy".into()), (200, ok.into())]);
    let vlm = HttpVlm { cfg: quick(&url) };
    let v = judge_alignment(&vlm, &[Raster::filled(64, 64, [1, 2, 3])], &[], DEFAULT_JUDGE_TEMPLATE).unwrap();
    assert_eq!(v.kind, VerdictKind::Aligned);
    let (_, first) = rx.recv().unwrap();
    let url = first["messages"][0]["content"][1]["image_url"]["url"].as_str().unwrap();
    assert!(url.starts_with("data:image/png;base64,"));
    rx.recv().unwrap();
}

#[test]
fn client_errors_are_not_retried() {
    let (url, rx) = serve(vec![(400, "{\"error\": \"bad\"}".into())]);
    let err = HttpLlm { cfg: quick(&url) }.chat(&ChatRequest::new("s", "u")).unwrap_err();
    assert!(matches!(err, ClientError::Backend { status: 400, .. }), "{err:?}");
    rx.recv().unwrap();
}

#[test]
fn embeddings_are_normalized_and_dimension_checked() {
    let v = |xs: &str| format!(r#"{{"data": [{{"embedding": {xs}}}]}}"#);
    let (url, _rx) = serve(vec![(200, v("[0, 0, 2]")), (200, v("[3, 4, 0]")), (200, v("[1, 1]"))]);
    let e = HttpEmbedder::connect(quick(&url)).unwrap();
    assert_eq!(e.dimension(), 3);
    assert_eq!(e.embed_text("anything").unwrap(), vec![0.6, 0.8, 0.0]);
    assert!(matches!(e.embed_text("again"), Err(ClientError::EmbedderFailure(_))));
}

#[test]
fn unreachable_backend_reports_transport_failure() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let vlm = HttpVlm {
        cfg: quick(&format!("http://127.0.0.1:{port}/v1")),
    };
    let err = judge_alignment(&vlm, &[Raster::filled(64, 64, [0, 0, 0])], &[], "G").unwrap_err();
    assert!(matches!(err, ClientError::VlmUnavailable(_)), "{err:?}");
}
