use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread;
use std::time::Duration;

use rubric_reward::engine::execution::{
    DecodeParams, FinishReason, GenerationRequest, GenerationTransport, Segment, SegmentKind, TransportError,
};
use rubric_reward::transport::HttpTransport;
use serde_json::Value;

/// Serves one connection with `status` and `body`; returns the request
/// head and body it received.
fn serve_once(status: u16, body: &'static str, delay: Duration) -> (String, thread::JoinHandle<(String, Value)>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let handle = thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut head = String::new();
        let mut length = 0;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                length = v.trim().parse().unwrap();
            }
            if line == "\r\n" {
                break;
            }
            head.push_str(&line);
        }
        let mut buf = vec![0; length];
        reader.read_exact(&mut buf).unwrap();
        thread::sleep(delay);
        let mut stream = stream;
        let _ = write!(
            stream,
            "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        );
        (head, serde_json::from_slice(&buf).unwrap())
    });
    (url, handle)
}

fn request() -> GenerationRequest {
    GenerationRequest {
        system: "You grade answers.".into(),
        segments: vec![Segment { kind: SegmentKind::Template, text: "Grade this.".into() }],
        output_schema: String::new(),
    }
}

#[test]
fn posts_chat_completion_and_reads_first_choice() {
    let reply = r#"{"choices":[{"message":{"role":"assistant","content":"{\"ok\":1}"},"finish_reason":"stop"}]}"#;
    let (url, server) = serve_once(200, reply, Duration::ZERO);
    let t = HttpTransport::new(url, Some("secret".into()), "judge-model", Duration::from_secs(5));
    let params = DecodeParams { temperature: Some(0.2), max_tokens: Some(128) };
    let r = t.generate(&request(), &params).unwrap();
    assert_eq!(r.text, "{\"ok\":1}");
    assert_eq!(r.finish_reason, FinishReason::Stop);
    let (head, body) = server.join().unwrap();
    assert!(head.starts_with("POST /v1/chat/completions"), "{head}");
    assert!(head.to_ascii_lowercase().contains("authorization: bearer secret"), "{head}");
    assert_eq!(body["model"], "judge-model");
    assert_eq!(body["messages"][0]["content"], "You grade answers.");
    assert_eq!(body["messages"][1]["content"], "Grade this.");
    assert_eq!(body["max_tokens"], 128);
}

#[test]
fn error_status_is_reported_with_body() {
    let (url, server) = serve_once(503, r#"{"error":"overloaded"}"#, Duration::ZERO);
    let t = HttpTransport::new(url, None, "m", Duration::from_secs(5));
    match t.generate(&request(), &DecodeParams::default()) {
        Err(TransportError::Status { status, body }) => {
            assert_eq!(status, 503);
            assert!(body.contains("overloaded"));
        }
        other => panic!("{other:?}"),
    }
    let (head, _) = server.join().unwrap();
    assert!(!head.to_ascii_lowercase().contains("authorization"));
}

#[test]
fn slow_server_times_out() {
    let (url, server) = serve_once(200, "{}", Duration::from_millis(1500));
    let t = HttpTransport::new(url, None, "m", Duration::from_millis(300));
    assert!(matches!(t.generate(&request(), &DecodeParams::default()), Err(TransportError::Timeout)));
    let _ = server.join();
}

#[test]
fn truncated_reply_is_a_protocol_error() {
    let (url, server) = serve_once(200, r#"{"choices":[]}"#, Duration::ZERO);
    let t = HttpTransport::new(url, None, "m", Duration::from_secs(5));
    assert!(matches!(t.generate(&request(), &DecodeParams::default()), Err(TransportError::Protocol(_))));
    server.join().unwrap();
}
