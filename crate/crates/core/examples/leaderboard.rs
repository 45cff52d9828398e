//! Records a few runs in a throwaway leaderboard and prints the ranking.

use chrono::Utc;
use driftbench::algorithm::{builtin, AlgorithmKind};
use driftbench::bundle::{generate_bundle, BundleSpec};
use driftbench::evaluation::{
    compute_metrics, run_evaluation, RunOptions, RunSummary, ScoreWeights, DEFAULT_LATENCY_BUDGET,
};
use driftbench::leaderboard::{render_table, Leaderboard, LeaderboardEntry, Submission};
use driftbench::stream::DriftType;

fn main() {
    let ws = tempfile::tempdir().expect("tempdir");
    let board = Leaderboard::open(ws.path());
    let bundle = generate_bundle(&BundleSpec::preset(DriftType::Sudden, 9)).expect("bundle");
    let options = RunOptions {
        stream_id: "sudden".into(),
        ..RunOptions::default()
    };

    for (team, spec) in [
        ("baseline", "frequency-baseline"),
        ("coin", "random:4"),
        ("fence", "constant:0.5"),
    ] {
        let mut alg = builtin(spec).unwrap().unwrap();
        let trace =
            run_evaluation(alg.as_mut(), &bundle.train, &bundle.validation, &options).expect("run");
        let metrics =
            compute_metrics(&trace, &ScoreWeights::default(), DEFAULT_LATENCY_BUDGET).unwrap();
        let summary = RunSummary::completed(&trace, metrics);
        let submission = Submission {
            team_name: team.into(),
            contact: format!("{team}@example.org"),
            algorithm_name: spec.into(),
            description: String::new(),
        };
        let entry = LeaderboardEntry::from_summary(submission, &summary, Utc::now());
        assert_eq!(entry.kind, AlgorithmKind::InProcess);
        board.record(entry).expect("record");
    }

    print!("{}", render_table(&board.rank("sudden").unwrap()));
    println!("store: {}", board.path().display());
}
