//! A minimal HTTP/1.1 embedding service for exercising the remote provider.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use featmatch::embeddings::baseline_embed;

pub const STUB_DIM: usize = 16;
pub const STUB_SEED: u64 = 99;

#[derive(Debug, Clone)]
pub enum Behavior {
    /// Answer with `baseline_embed(text, STUB_DIM, STUB_SEED)` per text.
    Ok,
    Delay(Duration),
    Status(u16),
    Malformed,
    /// Declares `STUB_DIM` but sends one vector that is one element short.
    ShortVector,
}

pub struct StubServer {
    pub url: String,
    requests: Arc<Mutex<Vec<Vec<String>>>>,
}

impl StubServer {
    pub fn start(behavior: Behavior) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub server");
        let url = format!("http://{}/embed", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&requests);
        thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let log = Arc::clone(&log);
                let behavior = behavior.clone();
                thread::spawn(move || handle(stream, &behavior, &log));
            }
        });
        Self { url, requests }
    }

    /// Texts of every request received so far, in arrival order.
    pub fn requests(&self) -> Vec<Vec<String>> {
        self.requests.lock().unwrap().clone()
    }
}

pub fn expected_vector(text: &str) -> Vec<f64> {
    baseline_embed(text, STUB_DIM, STUB_SEED)
}

fn handle(stream: TcpStream, behavior: &Behavior, log: &Mutex<Vec<Vec<String>>>) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut content_length = 0usize;
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        let trimmed = line.trim_end();
        if trimmed.is_empty() {
            break;
        }
        if let Some((k, v)) = trimmed.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                content_length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; content_length];
    if reader.read_exact(&mut body).is_err() {
        return;
    }
    let request: serde_json::Value = serde_json::from_slice(&body).unwrap_or_default();
    let texts: Vec<String> = request["texts"]
        .as_array()
        .map(|a| a.iter().filter_map(|t| t.as_str().map(String::from)).collect())
        .unwrap_or_default();
    log.lock().unwrap().push(texts.clone());

    let ok_body = |texts: &[String]| {
        let vectors: Vec<Vec<f64>> = texts.iter().map(|t| expected_vector(t)).collect();
        serde_json::json!({ "dim": STUB_DIM, "vectors": vectors }).to_string()
    };
    let (status, payload) = match behavior {
        Behavior::Ok => (200, ok_body(&texts)),
        Behavior::Delay(d) => {
            thread::sleep(*d);
            (200, ok_body(&texts))
        }
        Behavior::Status(code) => (*code, "{\"error\":\"unavailable\"}".to_string()),
        Behavior::Malformed => (200, "{\"vectors\": not json".to_string()),
        Behavior::ShortVector => {
            let mut vectors: Vec<Vec<f64>> = texts.iter().map(|t| expected_vector(t)).collect();
            if let Some(v) = vectors.last_mut() {
                v.pop();
            }
            (
                200,
                serde_json::json!({ "dim": STUB_DIM, "vectors": vectors }).to_string(),
            )
        }
    };
    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {status} Stub\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    );
    let _ = stream.flush();
}

/// A loopback URL nothing is listening on.
pub fn refused_url() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    format!("http://{addr}/embed")
}
