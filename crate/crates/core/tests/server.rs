mod support;

use std::time::Duration;

use cogteam::fixtures::SEED_DIALOG;
use cogteam::gateway::{router, Record, RecordKind, RunConfig, ServerState, StatusReply};
use cogteam::tracebus::{PanelKind, TraceLedger};
use futures::{SinkExt, StreamExt};
use tokio_tungstenite::tungstenite::Message as WsMessage;

use support::*;

const PATIENCE: Duration = Duration::from_secs(60);

async fn boot() -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let state = ServerState::new(RunConfig::default(), Duration::from_millis(1));
    tokio::spawn(async move { axum::serve(listener, router(state)).await.unwrap() });
    format!("{addr}")
}

async fn settle(http: &reqwest::Client, base: &str) -> StatusReply {
    tokio::time::timeout(PATIENCE, async {
        loop {
            let s: StatusReply = http
                .get(format!("{base}/run/status"))
                .send()
                .await
                .unwrap()
                .json()
                .await
                .unwrap();
            if s.state != "running" {
                return s;
            }
            tokio::time::sleep(Duration::from_millis(5)).await;
        }
    })
    .await
    .expect("run settles")
}

#[tokio::test(flavor = "multi_thread")]
async fn scripted_run_over_http_matches_the_headless_run() {
    let addr = boot().await;
    let base = format!("http://{addr}");
    let http = reqwest::Client::new();

    let missing = http.get(format!("{base}/run/status")).send().await.unwrap();
    assert_eq!(missing.status(), 404);

    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("dialog.txt");
    std::fs::write(&script, SEED_DIALOG).unwrap();
    let started = http
        .post(format!("{base}/run/start"))
        .json(&serde_json::json!({ "script": script, "interval_ms": 0 }))
        .send()
        .await
        .unwrap();
    assert!(started.status().is_success());
    let done = settle(&http, &base).await;
    assert_eq!(done.outcome.as_deref(), Some("FOUND"));

    let mut headless = seed_sim();
    run_to_end(&mut headless);
    let ledger = headless.ledger();
    let text = http
        .get(format!("{base}/run/transcript"))
        .send()
        .await
        .unwrap()
        .text()
        .await
        .unwrap();
    assert_eq!(text, ledger.encode());
    assert_eq!(TraceLedger::decode(&text).unwrap().len(), ledger.len());

    let panel = http
        .get(format!("{base}/run/panel/UGV/AGENDA-FILTERED?at=34"))
        .send()
        .await
        .unwrap()
        .text()
        .await
        .unwrap();
    assert_eq!(
        panel,
        ledger
            .panel("UGV", PanelKind::AgendaFiltered, 3, Some(34))
            .unwrap()
            .render()
    );
    let panel = http
        .get(format!("{base}/run/panel/DRONE/VMRS-RECENT?n=2"))
        .send()
        .await
        .unwrap()
        .text()
        .await
        .unwrap();
    assert_eq!(
        panel,
        ledger.panel("DRONE", PanelKind::VmrsRecent, 2, None).unwrap().render()
    );

    let events = http
        .get(format!("{base}/run/events?cursor=100&agent=UGV&kind=THOUGHT,MESSAGE"))
        .send()
        .await
        .unwrap()
        .text()
        .await
        .unwrap();
    let want: String = ledger.events()[100..]
        .iter()
        .filter(|e| e.agent == "UGV" && matches!(e.kind.to_string().as_str(), "THOUGHT" | "MESSAGE"))
        .map(|e| e.encode())
        .collect();
    assert_eq!(events, want);

    let world = http
        .get(format!("{base}/run/world"))
        .send()
        .await
        .unwrap()
        .text()
        .await
        .unwrap();
    assert!(world.starts_with("SCENARIO seed-apartment"));

    for (path, code) in [
        ("/run/panel/UGV/MEMORY", 400),
        ("/run/panel/ROVER/THOUGHTS", 404),
        ("/run/panel/UGV/THOUGHTS?at=99999", 404),
        ("/run/events?kind=GOSSIP", 400),
        ("/run/events?agent=ROVER", 404),
    ] {
        let r = http.get(format!("{base}{path}")).send().await.unwrap();
        assert_eq!(r.status(), code, "{path}");
    }
    let empty = http
        .post(format!("{base}/run/utterance"))
        .body("   ")
        .send()
        .await
        .unwrap();
    assert_eq!(empty.status(), 400);

    let stopped: StatusReply = http
        .post(format!("{base}/run/stop"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(stopped.state, "stopped");
}

async fn next_record<S>(ws: &mut S) -> Record
where
    S: futures::Stream<Item = Result<WsMessage, tokio_tungstenite::tungstenite::Error>> + Unpin,
{
    loop {
        match ws.next().await.expect("socket open").expect("socket healthy") {
            WsMessage::Text(t) => return Record::decode(t.as_str()).expect("server records decode"),
            _ => continue,
        }
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn typed_dialog_over_the_socket_finds_the_keys() {
    let addr = boot().await;
    let http = reqwest::Client::new();
    let started = http
        .post(format!("http://{addr}/run/start"))
        .json(&serde_json::json!({ "interval_ms": 2 }))
        .send()
        .await
        .unwrap();
    assert!(started.status().is_success());

    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/run/ws?cursor=0"))
        .await
        .unwrap();
    let say = |text: &str| WsMessage::Text(Record::new(RecordKind::Utterance, text).encode().into());

    let result = tokio::time::timeout(PATIENCE, async {
        ws.send(say(REQUEST)).await.unwrap();
        let mut seqs = Vec::new();
        let mut acks = 0;
        let mut found = false;
        while !found {
            let r = next_record(&mut ws).await;
            match r.kind {
                RecordKind::Ack => {
                    assert!(r.payload.starts_with("tick="), "{}", r.payload);
                    acks += 1;
                }
                RecordKind::Event => {
                    let (head, body) = r.payload.split_once('\n').unwrap();
                    let fields: Vec<&str> = head.split(' ').collect();
                    seqs.push(fields[1].parse::<u64>().unwrap());
                    if fields[2] == "UGV" && fields[5] == "MESSAGE" {
                        let text = body.lines().nth(1).unwrap_or("");
                        if text == "Can you describe the keys?" {
                            ws.send(say(FEATURES)).await.unwrap();
                        } else if text == "Where did you last see the keys?" {
                            ws.send(say(UNLOCK)).await.unwrap();
                        } else if text.starts_with("I found your keys") {
                            found = true;
                        }
                    }
                }
                other => panic!("unexpected {other} record: {}", r.payload),
            }
        }
        assert_eq!(acks, 3);
        assert_eq!(
            seqs,
            (1..=seqs.len() as u64).collect::<Vec<_>>(),
            "events arrive in order without gaps"
        );

        ws.send(WsMessage::Text(
            Record::new(RecordKind::Panel, "UGV THOUGHTS").encode().into(),
        ))
        .await
        .unwrap();
        ws.send(WsMessage::Text(
            Record::new(RecordKind::Panel, "UGV MEMORY").encode().into(),
        ))
        .await
        .unwrap();
        ws.send(WsMessage::Text(Record::new(RecordKind::Ack, "tick=1").encode().into()))
            .await
            .unwrap();
        ws.send(say("")).await.unwrap();
        let mut replies = Vec::new();
        while replies.len() < 4 {
            let r = next_record(&mut ws).await;
            if r.kind != RecordKind::Event {
                replies.push(r);
            }
        }
        replies
    })
    .await
    .expect("dialog completes");

    assert_eq!(result[0].kind, RecordKind::Panel);
    assert!(result[0].payload.starts_with("UGV-U [LEADER]\tTHOUGHTS\n"));
    assert!(result[0]
        .payload
        .contains("Then I'll tell DANNY, in terms of how things face: behind the couch."));
    assert!(result[1..].iter().all(|r| r.kind == RecordKind::Error), "{result:?}");
}

#[tokio::test(flavor = "multi_thread")]
async fn socket_rejects_a_cursor_past_the_end() {
    let addr = boot().await;
    let http = reqwest::Client::new();
    http.post(format!("http://{addr}/run/start"))
        .json(&serde_json::json!({ "interval_ms": 1000 }))
        .send()
        .await
        .unwrap();
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/run/ws?cursor=500"))
        .await
        .unwrap();
    let r = tokio::time::timeout(PATIENCE, next_record(&mut ws)).await.unwrap();
    assert_eq!(r.kind, RecordKind::Error);
}
