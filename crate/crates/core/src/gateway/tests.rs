use serde_json::json;

use super::stub::{StubEntry, StubOptions, StubScript, StubServer};
use super::*;
use crate::signals::response_entropies;
use crate::store::{Decoding, QuestionRecord, RunStore};

fn script() -> StubScript {
    StubScript {
        entries: vec![
            StubEntry {
                question: "What is the capital of France?".into(),
                samples: vec!["Paris".into(), "It is Paris.".into(), "Lyon".into()],
                greedy: Some("Paris is the capital".into()),
                confidence: 0.8,
                probe: Some("True".into()),
                probe_confidence: 0.9,
            },
            StubEntry {
                question: "Is the moon made of cheese?".into(),
                samples: vec!["No".into()],
                greedy: None,
                confidence: 0.99,
                probe: Some("False".into()),
                probe_confidence: 0.7,
            },
        ],
    }
}

fn gateway_for(stub: &StubServer, cache: Option<&std::path::Path>, tweak: impl FnOnce(&mut GatewayConfig)) -> Gateway {
    let mut cfg = GatewayConfig {
        chat_url: Some(stub.chat_url()),
        chat_model: "stub".into(),
        embed_url: Some(stub.embed_url()),
        embed_model: "stub-embed".into(),
        entail_url: Some(stub.entail_url()),
        backoff_ms: 1,
        cache_dir: cache.map(|p| p.to_path_buf()),
        ..GatewayConfig::default()
    };
    tweak(&mut cfg);
    Gateway::new(cfg).unwrap()
}

fn france() -> QuestionRecord {
    QuestionRecord::new("q1", "What is the capital of France?")
}

#[test]
fn sampling_round_trip_and_cache() {
    let stub = StubServer::start(script(), StubOptions::default(), "127.0.0.1:0").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let gw = gateway_for(&stub, Some(dir.path()), |_| {});
    let (samples, _) = gw.sample_responses(&france(), 10, &Decoding::sampling(1.0, 1.0, 64), 42).unwrap();
    assert_eq!(samples.len(), 10);
    let seeds: std::collections::BTreeSet<u64> = samples.iter().map(|s| s.decoding.seed).collect();
    assert_eq!(seeds.len(), 10);
    assert!(samples.iter().all(|s| ["Paris", "It is Paris.", "Lyon"].contains(&s.text.as_str())));
    let sent = stub.counters.requests();
    assert_eq!(sent, 10);

    let again = gateway_for(&stub, Some(dir.path()), |_| {});
    let (cached, _) = again.sample_responses(&france(), 10, &Decoding::sampling(1.0, 1.0, 64), 42).unwrap();
    assert_eq!(cached, samples);
    assert_eq!(stub.counters.requests(), sent);
    assert_eq!(again.stats().network_requests, 0);
    assert_eq!(again.stats().cache_hits, 10);
}

#[test]
fn retries_after_server_errors() {
    let opts = StubOptions {
        fail_first: 2,
        ..StubOptions::default()
    };
    let stub = StubServer::start(script(), opts, "127.0.0.1:0").unwrap();
    let gw = gateway_for(&stub, None, |_| {});
    let (_, info) = gw.greedy_with_logprobs(&france(), 16, 5).unwrap();
    assert_eq!(info.attempts, 3);
    assert_eq!(gw.stats().retries, 2);
}

#[test]
fn retries_are_bounded() {
    let opts = StubOptions {
        fail_first: 100,
        ..StubOptions::default()
    };
    let stub = StubServer::start(script(), opts, "127.0.0.1:0").unwrap();
    let gw = gateway_for(&stub, None, |c| c.max_retries = 2);
    let (err, attempts) = gw.greedy_with_logprobs(&france(), 16, 5).unwrap_err();
    assert_eq!(attempts, 3);
    assert!(matches!(err, GatewayError::Http { status: 500, ref body } if body.contains("scripted failure")));
}

#[test]
fn client_errors_are_not_retried() {
    let opts = StubOptions {
        fail_first: 5,
        fail_status: 400,
        ..StubOptions::default()
    };
    let stub = StubServer::start(script(), opts, "127.0.0.1:0").unwrap();
    let gw = gateway_for(&stub, None, |_| {});
    let (err, attempts) = gw.greedy_with_logprobs(&france(), 16, 5).unwrap_err();
    assert_eq!(attempts, 1);
    assert!(matches!(err, GatewayError::Http { status: 400, .. }));
}

#[test]
fn greedy_logprobs_parse_and_validate() {
    let stub = StubServer::start(script(), StubOptions::default(), "127.0.0.1:0").unwrap();
    let gw = gateway_for(&stub, None, |_| {});
    let (greedy, _) = gw.greedy_with_logprobs(&france(), 16, 10).unwrap();
    let lps = greedy.token_logprobs.as_ref().unwrap();
    assert_eq!(lps.len(), 4);
    assert_eq!(lps[1].token_text, " is");
    assert!((lps[0].chosen_logprob - 0.8f64.ln()).abs() < 1e-12);
    assert_eq!(lps[0].top_alternatives.len(), 10);

    let mut store = RunStore::new();
    store.insert(crate::store::Record::Question(france())).unwrap();
    store.insert(crate::store::Record::Sample(greedy)).unwrap();
    assert!(store.validate().is_empty(), "{:?}", store.validate());
}

#[test]
fn single_alternative_gives_zero_entropy() {
    let stub = StubServer::start(script(), StubOptions::default(), "127.0.0.1:0").unwrap();
    let gw = gateway_for(&stub, None, |_| {});
    let (greedy, _) = gw.greedy_with_logprobs(&france(), 16, 1).unwrap();
    assert!(response_entropies(&greedy).unwrap().iter().all(|h| *h == 0.0));
}

#[test]
fn missing_logprobs_is_unavailable() {
    let opts = StubOptions {
        no_logprobs: true,
        ..StubOptions::default()
    };
    let stub = StubServer::start(script(), opts, "127.0.0.1:0").unwrap();
    let gw = gateway_for(&stub, None, |_| {});
    let (err, _) = gw.greedy_with_logprobs(&france(), 16, 10).unwrap_err();
    assert!(matches!(err, GatewayError::Unavailable(ref m) if m.contains("logprob")));
    // the probe falls back to text
    let (probe, _) = gw.ptrue_probe(&france(), "Paris", 4, 5).unwrap();
    assert_eq!(probe.text, "True");
    assert!(probe.token_logprobs.is_none());
}

#[test]
fn native_adapter_round_trip() {
    let stub = StubServer::start(script(), StubOptions::default(), "127.0.0.1:0").unwrap();
    let gw = gateway_for(&stub, None, |c| {
        c.chat_url = Some(stub.native_url());
        c.chat_api = ChatApi::Native;
    });
    let (greedy, _) = gw.greedy_with_logprobs(&france(), 16, 3).unwrap();
    assert_eq!(greedy.text, "Paris is the capital");
    assert_eq!(greedy.token_logprobs.unwrap()[0].top_alternatives.len(), 3);
}

#[test]
fn probes_persist_true_and_false() {
    let stub = StubServer::start(script(), StubOptions::default(), "127.0.0.1:0").unwrap();
    let gw = gateway_for(&stub, None, |_| {});
    let (p, _) = gw.ptrue_probe(&france(), "Paris", 4, 5).unwrap();
    assert_eq!(p.text, "True");
    let moon = QuestionRecord::new("q2", "Is the moon made of cheese?");
    // Two alternatives: False at 0.7 and True at the remaining 0.3.
    let (p, _) = gw.ptrue_probe(&moon, "Yes", 4, 2).unwrap();
    assert_eq!(p.text, "False");
    let score = crate::signals::ptrue_score(&p).unwrap();
    assert!((score.p_true - 0.3).abs() < 1e-9);
}

#[test]
fn embeddings_normalized_and_deduplicated() {
    let stub = StubServer::start(script(), StubOptions::default(), "127.0.0.1:0").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let gw = gateway_for(&stub, Some(dir.path()), |_| {});
    let texts: Vec<String> = ["Paris", "Paris", "Lyon", ""].iter().map(|s| s.to_string()).collect();
    let batch = gw.embed_texts(&texts).unwrap();
    assert_eq!(batch.upstream_requests, 1);
    assert_eq!(batch.vectors[0], batch.vectors[1]);
    assert!((crate::vector::norm(&batch.vectors[0]) - 1.0).abs() < 1e-9);
    assert_eq!(batch.dim, 64);
    let again = gw.embed_texts(&texts[..2]).unwrap();
    assert_eq!(again.upstream_requests, 0);
}

#[test]
fn entailment_parsing() {
    let v = json!({"labels": [{"label": "ENTAILMENT", "score": 0.93}, {"label": "neutral", "score": 0.07}]});
    assert_eq!(parse_entailment(&v).unwrap(), 0.93);
    assert_eq!(parse_entailment(&json!([{"label": "entailment", "score": 0.5}])).unwrap(), 0.5);
    assert_eq!(parse_entailment(&json!({"entailment": 0.2, "contradiction": 0.8})).unwrap(), 0.2);
    let err = parse_entailment(&json!([{"label": "LABEL_0", "score": 0.9}, {"label": "LABEL_1", "score": 0.1}])).unwrap_err();
    assert!(matches!(err, GatewayError::Schema(ref m) if m.contains("LABEL_0") && m.contains("LABEL_1")));
}

#[test]
fn entailment_identity_and_missing_label() {
    let stub = StubServer::start(script(), StubOptions::default(), "127.0.0.1:0").unwrap();
    let gw = gateway_for(&stub, None, |_| {});
    assert_eq!(gw.entailment_score("Paris is big", "Paris is big").unwrap(), 1.0);
    let opts = StubOptions {
        entailment_label: "entails".into(),
        ..StubOptions::default()
    };
    let bad = StubServer::start(script(), opts, "127.0.0.1:0").unwrap();
    let gw = gateway_for(&bad, None, |_| {});
    assert!(matches!(gw.entailment_score("a", "b"), Err(GatewayError::Schema(_))));
}

#[test]
fn in_flight_requests_bounded() {
    let opts = StubOptions {
        delay_ms: 20,
        workers: 16,
        ..StubOptions::default()
    };
    let stub = StubServer::start(script(), opts, "127.0.0.1:0").unwrap();
    let gw = gateway_for(&stub, None, |c| c.max_in_flight = 2);
    std::thread::scope(|s| {
        for i in 0..8 {
            let gw = &gw;
            s.spawn(move || {
                let q = QuestionRecord::new(format!("q{i}"), "What is the capital of France?");
                gw.sample_responses(&q, 2, &Decoding::sampling(1.0, 1.0, 8), i).unwrap();
            });
        }
    });
    assert_eq!(stub.counters.requests(), 16);
    assert!(stub.counters.max_in_flight() <= 2);
    assert!(stub.counters.max_in_flight() >= 1);
}

#[test]
fn cache_key_sensitivity() {
    let body = json!({"a": 1, "b": [1, 2]});
    let same = json!({"b": [1, 2], "a": 1});
    assert_eq!(cache_key("u", "m", &body), cache_key("u", "m", &same));
    assert_ne!(cache_key("u", "m", &body), cache_key("u", "m2", &body));
    assert_ne!(cache_key("u", "m", &body), cache_key("u2", "m", &body));
    assert_ne!(cache_key("u", "m", &body), cache_key("u", "m", &json!({"a": 2, "b": [1, 2]})));
}

#[test]
fn seeds_are_stable_and_distinct() {
    assert_eq!(derive_seed(42, "q1", 0), derive_seed(42, "q1", 0));
    assert_ne!(derive_seed(42, "q1", 0), derive_seed(42, "q1", 1));
    assert_ne!(derive_seed(42, "q1", 0), derive_seed(43, "q1", 0));
    assert!(derive_seed(7, "x", 3) < 1 << 31);
}

#[test]
fn config_rejects_zero_parallelism() {
    let cfg = GatewayConfig {
        max_in_flight: 0,
        ..GatewayConfig::default()
    };
    assert!(Gateway::new(cfg).is_err());
}
