mod common;

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::Duration;

use common::bin;
use driftbench::adapter::{serve, spawn, AdapterConfig, ServeOptions, SpawnError};
use driftbench::algorithm::{
    builtin, Algorithm, AlgorithmError, AlgorithmKind, FrequencyConformance,
};
use driftbench::bundle::{generate_bundle, BundleSpec};
use driftbench::evaluation::{run_evaluation, Phase, RunOptions};
use driftbench::stream::{stream_epoch, DriftType, Event};

struct Transcript {
    algorithm: String,
    requests: Vec<String>,
    replies: Vec<String>,
}

fn load(name: &str) -> Transcript {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/transcripts")
        .join(name);
    let text = std::fs::read_to_string(path).unwrap();
    let mut t = Transcript {
        algorithm: String::new(),
        requests: vec![],
        replies: vec![],
    };
    for line in text.lines() {
        if let Some(a) = line.strip_prefix("# algorithm: ") {
            t.algorithm = a.to_string();
        } else if let Some(r) = line.strip_prefix("> ") {
            t.requests.push(r.to_string());
        } else if let Some(r) = line.strip_prefix("< ") {
            t.replies.push(r.to_string());
        }
    }
    t
}

const TRANSCRIPTS: [&str; 3] = [
    "constant_half.txt",
    "frequency_baseline.txt",
    "oracle_unlabeled.txt",
];

#[test]
fn golden_transcripts_in_process() {
    for name in TRANSCRIPTS {
        let t = load(name);
        let mut alg = builtin(&t.algorithm).unwrap().unwrap();
        let input = t.requests.join("\n") + "\n";
        let mut out = Vec::new();
        serve(
            alg.as_mut(),
            input.as_bytes(),
            &mut out,
            &ServeOptions::default(),
        )
        .unwrap();
        let got: Vec<String> = String::from_utf8(out)
            .unwrap()
            .lines()
            .map(String::from)
            .collect();
        assert_eq!(got, t.replies, "{name}");
    }
}

#[test]
fn golden_transcripts_over_pipes() {
    for name in TRANSCRIPTS {
        let t = load(name);
        let mut child = Command::new(bin())
            .args(["serve", "--algorithm", &t.algorithm])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .unwrap();
        let mut stdin = child.stdin.take().unwrap();
        let mut stdout = BufReader::new(child.stdout.take().unwrap());
        let mut read = || {
            let mut l = String::new();
            stdout.read_line(&mut l).unwrap();
            l.trim_end().to_string()
        };
        // strict alternation: hello, then one reply per request except shutdown
        assert_eq!(read(), t.replies[0], "{name}");
        for (req, want) in t.requests.iter().zip(&t.replies[1..]) {
            writeln!(stdin, "{req}").unwrap();
            assert_eq!(&read(), want, "{name}: {req}");
        }
        writeln!(stdin, "{{\"type\":\"shutdown\"}}").unwrap();
        assert!(child.wait().unwrap().success());
    }
}

fn spawn_bin(args: &[&str]) -> Result<driftbench::adapter::ExternalAlgorithm, SpawnError> {
    let mut argv = vec![bin().to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    spawn(&argv, &AdapterConfig::default())
}

fn sh(script: &str) -> Vec<String> {
    vec!["sh".into(), "-c".into(), script.into()]
}

fn event(a: &str) -> Event {
    Event::new("c1", a, stream_epoch())
}

#[test]
fn reference_adapter_handshake() {
    let mut h = spawn_bin(&["serve", "--algorithm", "constant:0.5"]).unwrap();
    assert_eq!(h.kind(), AlgorithmKind::External);
    h.learn(&event("a")).unwrap();
    assert_eq!(h.conformance(&event("a")).unwrap(), 0.5);
}

#[test]
fn spawn_failures() {
    let quick = AdapterConfig {
        startup_timeout: Duration::from_millis(500),
        ..AdapterConfig::default()
    };
    match spawn(&["true".to_string()], &quick) {
        Err(e @ SpawnError::HandshakeTimeout(_)) => {
            assert!(e.to_string().starts_with("handshake timeout"))
        }
        other => panic!("{:?}", other.err()),
    }
    match spawn(&sh("sleep 5"), &quick) {
        Err(SpawnError::HandshakeTimeout(_)) => {}
        other => panic!("{:?}", other.err()),
    }
    let wrong = sh(r#"echo '{"type":"hello","protocol_version":"0"}'; cat > /dev/null"#);
    match spawn(&wrong, &quick) {
        Err(SpawnError::VersionMismatch { found, .. }) => assert_eq!(found, "0"),
        other => panic!("{:?}", other.err()),
    }
    assert!(matches!(
        spawn(&["/nonexistent/driftbench-algo".to_string()], &quick),
        Err(SpawnError::Launch { .. })
    ));
}

#[test]
fn out_of_range_reply_is_clamped_and_flagged() {
    let script = r#"echo '{"type":"hello","protocol_version":"1"}'
while read line; do echo '{"type":"result","conformance":1.7}'; done"#;
    let mut h = spawn(&sh(script), &AdapterConfig::default()).unwrap();
    let b = generate_bundle(&BundleSpec {
        train_cases: 3,
        ..BundleSpec::preset(DriftType::Sudden, 1)
    })
    .unwrap();
    let t = run_evaluation(&mut h, &b.train, &b.validation, &RunOptions::default()).unwrap();
    assert!(t.predictions.iter().all(|p| *p == 1.0));
    assert_eq!(t.diagnostics.clamped, t.len());
}

#[test]
fn malformed_and_null_replies() {
    let script = r#"echo '{"type":"hello","protocol_version":"1"}'
read l; echo '{"type":"result","conformance":null}'
read l; echo 'not json'"#;
    let mut h = spawn(&sh(script), &AdapterConfig::default()).unwrap();
    assert!(h.conformance(&event("a")).unwrap().is_nan());
    assert!(matches!(
        h.conformance(&event("a")),
        Err(AlgorithmError::Transport(_))
    ));
    // a broken handle keeps failing without touching the dead child
    assert!(matches!(
        h.learn(&event("a")),
        Err(AlgorithmError::Transport(_))
    ));
}

#[test]
fn stderr_is_captured() {
    let script = r#"echo 'starting up' >&2; echo '{"type":"hello","protocol_version":"1"}'
read l; echo 'boom' >&2; exit 3"#;
    let mut h = spawn(&sh(script), &AdapterConfig::default()).unwrap();
    let err = h.conformance(&event("a")).unwrap_err();
    assert!(err.to_string().contains("broken pipe"), "{err}");
    std::thread::sleep(Duration::from_millis(50));
    let log = h.diagnostics().unwrap();
    assert!(log.contains("starting up") && log.contains("boom"), "{log}");
}

#[test]
fn in_process_and_external_baseline_agree() {
    let b = generate_bundle(&BundleSpec::preset(DriftType::Incremental, 21)).unwrap();
    let opts = RunOptions::default();
    let local = run_evaluation(
        &mut FrequencyConformance::new(),
        &b.train,
        &b.validation,
        &opts,
    )
    .unwrap();
    let mut ext = spawn_bin(&["serve", "--algorithm", "frequency-baseline"]).unwrap();
    let remote = run_evaluation(&mut ext, &b.train, &b.validation, &opts).unwrap();
    assert_eq!(local.predictions, remote.predictions);
    assert_eq!(local.gt, remote.gt);
    assert_eq!(remote.meta.kind, AlgorithmKind::External);
}

#[test]
fn slow_child_trips_the_deadline() {
    let b = generate_bundle(&BundleSpec::preset(DriftType::Sudden, 2)).unwrap();
    let mut argv: Vec<String> = [
        bin(),
        "serve",
        "--algorithm",
        "constant:0.5",
        "--delay-ms",
        "400",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let config = AdapterConfig {
        event_deadline: Duration::from_millis(150),
        ..AdapterConfig::default()
    };
    let mut slow = spawn(&argv, &config).unwrap();
    let failed =
        run_evaluation(&mut slow, &b.train, &b.validation, &RunOptions::default()).unwrap_err();
    assert_eq!(failed.phase, Phase::Conformance);
    assert_eq!(failed.event_index, Some(0));
    assert!(matches!(failed.error, AlgorithmError::Transport(_)));
    assert!(failed.trace.is_empty());
    drop(slow);

    // the harness carries on with the next run
    argv.truncate(4);
    let mut fine = spawn(&argv, &config).unwrap();
    let t = run_evaluation(&mut fine, &b.train, &b.validation, &RunOptions::default()).unwrap();
    assert_eq!(t.len(), b.validation.len());
}
