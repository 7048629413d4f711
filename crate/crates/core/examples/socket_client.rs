//! Starts the server in-process, opens the record socket and plays the
//! human by answering the leader's questions as they arrive.
//!
//! cargo run --example socket_client

use std::time::Duration;

use cogteam::gateway::{router, Record, RecordKind, RunConfig, ServerState};
use futures::{SinkExt, StreamExt};
use tokio_tungstenite::tungstenite::Message;

fn reply_to(question: &str) -> Option<&'static str> {
    match question {
        "Can you describe the keys?" => Some("They are on a red keychain with a small flashlight."),
        "Where did you last see the keys?" => {
            Some("I used them last night to open the front door, but they could be anywhere.")
        }
        _ => None,
    }
}

fn record(kind: RecordKind, payload: &str) -> Message {
    Message::Text(Record::new(kind, payload).encode().into())
}

#[tokio::main]
async fn main() {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let state = ServerState::new(RunConfig::default(), Duration::from_millis(5));
    tokio::spawn(async move { axum::serve(listener, router(state)).await.unwrap() });

    let http = reqwest::Client::new();
    http.post(format!("http://{addr}/run/start")).send().await.unwrap();
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/run/ws"))
        .await
        .unwrap();
    ws.send(record(
        RecordKind::Utterance,
        "I think I left my keys at home. Can you look around for them?",
    ))
    .await
    .unwrap();

    while let Some(Ok(Message::Text(t))) = ws.next().await {
        let r = Record::decode(t.as_str()).unwrap();
        if r.kind != RecordKind::Event {
            println!("{} {}", r.kind, r.payload);
            if r.kind == RecordKind::Panel {
                break;
            }
            continue;
        }
        let (head, body) = r.payload.split_once('\n').unwrap();
        if !head.contains(" MESSAGE ") {
            continue;
        }
        let text = body.lines().nth(1).unwrap_or_default();
        println!("{head}: {text}");
        if let Some(answer) = reply_to(text) {
            ws.send(record(RecordKind::Utterance, answer)).await.unwrap();
        }
        if text.starts_with("I found your keys") {
            ws.send(record(RecordKind::Panel, "UGV AGENDA-FILTERED")).await.unwrap();
        }
    }
}
