use std::io::Write;

use proptest::prelude::*;

use super::*;

fn manifest(n: usize) -> RunManifest {
    RunManifest {
        format_version: FORMAT_VERSION,
        run_id: "r1".into(),
        model_name: "stub".into(),
        endpoint_url: "http://localhost".into(),
        decoding: Decoding::sampling(1.0, 1.0, 64),
        n_samples: n,
        created_at: None,
        dataset_name: "fixture".into(),
        embedding_dim: None,
        run_seed: 42,
    }
}

fn sample(qid: &str, idx: usize, text: &str) -> ResponseSample {
    ResponseSample {
        question_id: qid.into(),
        role: SampleRole::Sampled,
        sample_index: idx,
        text: text.into(),
        decoding: Decoding::sampling(1.0, 1.0, 64),
        token_logprobs: None,
    }
}

fn run_text(questions: usize, n: usize) -> String {
    let mut store = RunStore::new();
    store.set_manifest(manifest(n));
    for q in 0..questions {
        let qid = format!("q{q}");
        store
            .insert(Record::Question(QuestionRecord::new(&qid, format!("Question {q}?"))))
            .unwrap();
        for i in 0..n {
            store
                .insert(Record::Sample(sample(&qid, i, &format!("answer {i}"))))
                .unwrap();
        }
    }
    store.to_jsonl()
}

#[test]
fn empty_file_gives_empty_run() {
    let store = RunStore::ingest_str("").unwrap();
    assert_eq!(store.counts().questions, 0);
    assert_eq!(store.counts().samples, 0);
    assert!(store.manifest().is_none());
    assert!(store.validate().is_empty());
}

#[test]
fn counts_questions_and_samples() {
    let store = RunStore::ingest_str(&run_text(2, 10)).unwrap();
    let c = store.counts();
    assert_eq!((c.questions, c.samples), (2, 20));
    assert!(store.validate().is_empty());
}

#[test]
fn duplicate_sample_index_is_integrity_error() {
    let mut text = run_text(1, 5).replace("\"q0\"", "\"q1\"");
    text.push_str(&Record::Sample(sample("q1", 3, "again")).to_line());
    text.push('\n');
    match RunStore::ingest_str(&text) {
        Err(StoreError::Integrity(msg)) => {
            assert!(msg.contains("q1"), "{msg}");
            assert!(msg.contains('3'), "{msg}");
        }
        other => panic!("expected integrity error, got {other:?}"),
    }
}

#[test]
fn malformed_line_reports_line_number() {
    let mut text = run_text(1, 2);
    text.push_str("{not json\n");
    let lines = text.lines().count();
    match RunStore::ingest_str(&text) {
        Err(StoreError::Parse { line, .. }) => assert_eq!(line, lines),
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn unknown_format_version_is_rejected() {
    let mut m = manifest(2);
    m.format_version = 99;
    let text = Record::Manifest(m).to_line();
    assert!(matches!(
        RunStore::ingest_str(&text),
        Err(StoreError::UnsupportedVersion(99))
    ));
}

#[test]
fn positive_logprob_is_one_violation() {
    let mut store = RunStore::ingest_str(&run_text(1, 2)).unwrap();
    let mut s = sample("q0", 0, "hi");
    s.token_logprobs = Some(vec![
        TokenLogprob::new("hi", -0.1, vec![]),
        TokenLogprob::new("there", 0.3, vec![]),
    ]);
    store.upsert(Record::Sample(s)).unwrap();
    let v = store.validate();
    assert_eq!(v.len(), 1, "{v:?}");
    assert!(v[0].locator.contains("there"));
}

#[test]
fn missing_sample_is_one_violation() {
    let text: String = run_text(1, 10)
        .lines()
        .filter(|l| !l.contains("\"sample_index\":9"))
        .map(|l| format!("{l}\n"))
        .collect();
    let store = RunStore::ingest_str(&text).unwrap();
    let v = store.validate();
    assert_eq!(v.len(), 1, "{v:?}");
    assert!(v[0].message.contains("missing sample 9"));
}

fn write_labels(lines: &[&str]) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    for l in lines {
        writeln!(f, "{l}").unwrap();
    }
    f
}

#[test]
fn merge_labels_attaches_and_overwrites() {
    let mut store = RunStore::ingest_str(&run_text(3, 1)).unwrap();
    let f = write_labels(&[
        r#"{"question_id":"q0","label":"correct"}"#,
        r#"{"question_id":"q1","label":"incorrect"}"#,
    ]);
    let c = store.merge_labels(f.path(), Judge::LlmJudge).unwrap();
    assert_eq!(c.labeled_questions, 2);
    let f2 = write_labels(&[r#"{"question_id":"q0","label":"incorrect"}"#]);
    let c2 = store.merge_labels(f2.path(), Judge::LlmJudge).unwrap();
    assert_eq!(c2.labeled_questions, 2);
    assert_eq!(store.resolved_label("q0", None), Some(Label::Incorrect));
    assert_eq!(store.resolved_label("q2", None), None);
}

#[test]
fn merge_labels_rejects_unknown_question() {
    let mut store = RunStore::ingest_str(&run_text(1, 1)).unwrap();
    let f = write_labels(&[r#"{"question_id":"qX","label":"correct"}"#]);
    match store.merge_labels(f.path(), Judge::Human) {
        Err(StoreError::Reference(q)) => assert_eq!(q, "qX"),
        other => panic!("expected reference error, got {other:?}"),
    }
    assert_eq!(store.counts().labels, 0);
}

#[test]
fn nfc_is_applied_at_ingest() {
    let mut store = RunStore::new();
    store
        .insert(Record::Question(QuestionRecord::new("q", "cafe\u{301}")))
        .unwrap();
    assert_eq!(store.question("q").unwrap().text, "caf\u{e9}");
}

#[test]
fn negative_infinity_logprob_survives_round_trip() {
    let mut store = RunStore::ingest_str(&run_text(1, 1)).unwrap();
    let mut s = sample("q0", 0, "x");
    s.token_logprobs = Some(vec![TokenLogprob::new(
        "x",
        0.0,
        vec![Alternative::new("x", 0.0), Alternative::new("y", f64::NEG_INFINITY)],
    )]);
    store.upsert(Record::Sample(s)).unwrap();
    let again = RunStore::ingest_str(&store.to_jsonl()).unwrap();
    assert_eq!(again, store);
}

fn arb_text() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9 éü]{1,12}"
}

proptest! {
    #[test]
    fn round_trip_and_line_order_independence(
        texts in prop::collection::vec(arb_text(), 1..6),
        logprobs in prop::collection::vec(-30.0f64..0.0, 1..4),
        shuffle_seed in any::<u64>(),
    ) {
        let mut store = RunStore::new();
        store.set_manifest(manifest(texts.len()));
        store.insert(Record::Question(QuestionRecord::new("q", "why?"))).unwrap();
        for (i, t) in texts.iter().enumerate() {
            let mut s = sample("q", i, t);
            s.token_logprobs = Some(
                logprobs.iter().map(|&lp| TokenLogprob::new("t", lp, vec![Alternative::new("u", lp - 1.0)])).collect(),
            );
            store.insert(Record::Sample(s)).unwrap();
        }
        let text = store.to_jsonl();
        let back = RunStore::ingest_str(&text).unwrap();
        prop_assert_eq!(&back, &store);
        prop_assert_eq!(back.to_jsonl(), text.clone());

        let mut lines: Vec<&str> = text.lines().collect();
        let mut state = shuffle_seed;
        for i in (1..lines.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let j = (state >> 33) as usize % (i + 1);
            lines.swap(i, j);
        }
        let permuted = RunStore::ingest_str(&lines.join("\n")).unwrap();
        prop_assert_eq!(permuted, store);
    }
}
