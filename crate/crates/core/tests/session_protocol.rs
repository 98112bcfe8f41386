mod common;

use nabla::session::{Options, Server, Session, SCHEMA_VERSION};
use serde_json::{json, Value};

fn send(c: &mut nabla::session::Connection<'_>, id: u32, cmd: Value) -> Value {
    let mut msg = cmd;
    msg["schema"] = json!(SCHEMA_VERSION);
    msg["id"] = json!(id);
    let reply: Value = serde_json::from_str(&c.handle(&msg.to_string())).expect("reply is JSON");
    assert_eq!(reply["schema"], json!(SCHEMA_VERSION));
    assert_eq!(reply["id"], json!(id));
    reply
}

fn subgoals(reply: &Value) -> usize {
    reply["state"]["subgoals"].as_array().map_or(0, |a| a.len())
}

#[test]
fn case_and_undo_over_the_protocol() {
    let server = Server::new(Options::default());
    let mut c = server.connect(1);
    assert_eq!(
        send(&mut c, 1, json!({"cmd": "open", "session": "s"}))["ok"],
        json!(true)
    );
    let r = send(
        &mut c,
        2,
        json!({"cmd": "exec", "text": common::spec_stmt()}),
    );
    assert_eq!(r["ok"], json!(true), "{r}");
    let thm = "Theorem step_det : forall M N P, {step M N} -> {step M P} -> N = P.";
    let r = send(&mut c, 3, json!({"cmd": "exec", "text": thm}));
    assert_eq!(r["state"]["theorem"], json!("step_det"));
    assert_eq!(subgoals(&r), 1);
    let r = send(
        &mut c,
        4,
        json!({"cmd": "exec", "text": "induction on 1. intros. case H1."}),
    );
    assert_eq!(r["ok"], json!(true), "{r}");
    assert_eq!(subgoals(&r), 3);
    let hyps = r["state"]["subgoals"][0]["hyps"].as_array().unwrap();
    assert!(hyps.iter().any(|h| h["name"] == json!("IH")));
    let r = send(&mut c, 5, json!({"cmd": "undo"}));
    assert_eq!(subgoals(&r), 1);
    let r = send(&mut c, 6, json!({"cmd": "exec", "text": "case H9."}));
    assert_eq!(r["ok"], json!(false));
    assert!(r["error"].as_str().unwrap().contains("H9"));
    assert_eq!(subgoals(&r), 1, "a failed step leaves the state alone");
    let r = send(&mut c, 7, json!({"cmd": "state"}));
    assert_eq!(subgoals(&r), 1);
}

#[test]
fn one_writer_per_session() {
    let server = Server::new(Options::default());
    let mut a = server.connect(1);
    let mut b = server.connect(2);
    assert_eq!(
        send(&mut a, 1, json!({"cmd": "open", "session": "shared"}))["ok"],
        json!(true)
    );
    let r = send(&mut b, 1, json!({"cmd": "open", "session": "shared"}));
    assert_eq!(r["ok"], json!(false));
    assert!(r["error"].as_str().unwrap().contains("writer"));
    assert_eq!(
        send(&mut b, 2, json!({"cmd": "open", "session": "other"}))["ok"],
        json!(true)
    );
    send(&mut a, 2, json!({"cmd": "close"}));
    assert_eq!(
        send(&mut b, 3, json!({"cmd": "open", "session": "shared"}))["ok"],
        json!(true)
    );
}

#[test]
fn malformed_and_mismatched_messages() {
    let server = Server::new(Options::default());
    let mut c = server.connect(1);
    let r: Value = serde_json::from_str(&c.handle("not json")).unwrap();
    assert_eq!(r["ok"], json!(false));
    let r: Value = serde_json::from_str(&c.handle(r#"{"schema": 99, "cmd": "state"}"#)).unwrap();
    assert!(r["error"].as_str().unwrap().contains("schema"));
    let r = send(&mut c, 1, json!({"cmd": "exec", "text": "search."}));
    assert!(r["error"].as_str().unwrap().contains("no session"));
}

#[test]
fn transcript_replays_to_the_same_state() {
    let mut s = common::stlc();
    let steps = [
        "Theorem halts_ex : forall M, {value M} -> exists V, {steps M V} /\\ {value V}.",
        "intros.",
        "undo.",
        "intros.",
    ];
    for t in steps {
        s.exec_text(t).unwrap();
    }
    assert!(s.exec_text("case H7.").is_err());
    let text = s.transcript_text();
    assert!(!text.contains("H7"), "failed steps are not recorded");
    let r = Session::replay(Options::default(), &s.transcript).unwrap();
    assert_eq!(r.snapshot().to_json(), s.snapshot().to_json());
    let r2 = Session::replay(Options::default(), &r.transcript).unwrap();
    assert_eq!(r2.transcript_text(), r.transcript_text());
}
