//! End-to-end runs of the `mtkit` binary over the shipped desk-scale
//! fixtures.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn mtkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mtkit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(output: &Output) -> Value {
    assert!(
        output.status.success(),
        "exit {:?}, stderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("stdout is one JSON report")
}

#[test]
fn bleu_identity_scores_100() {
    let hyp = data("translations/m1.txt");
    let output = mtkit(&["bleu", "--hyp", hyp.to_str().unwrap(), "--ref", hyp.to_str().unwrap()]);
    let report = report(&output);
    assert_eq!(report["result"]["score"], 100.0);
    assert_eq!(report["subcommand"], "bleu");
    assert_eq!(report["tool"], "mtkit");
}

#[test]
fn bleu_reports_are_byte_identical_across_runs() {
    let hyp = data("translations/m1.txt");
    let refs = data("translations/m2.txt");
    let args = ["bleu", "--hyp", hyp.to_str().unwrap(), "--ref", refs.to_str().unwrap()];
    let first = mtkit(&args);
    let second = mtkit(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn unknown_flag_exits_2() {
    let output = mtkit(&["bleu", "--no-such-flag"]);
    assert_eq!(output.status.code(), Some(2));
    let output = mtkit(&["not-a-subcommand"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn missing_input_exits_1() {
    let output = mtkit(&["bleu", "--hyp", "/nonexistent/h.txt", "--ref", "/nonexistent/r.txt"]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn invalid_utf8_reports_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.txt");
    std::fs::write(&input, b"fine line\n\xff\xfe broken\n").unwrap();
    let output = mtkit(&[
        "bleu",
        "--hyp",
        input.to_str().unwrap(),
        "--ref",
        input.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
}

#[test]
fn malformed_tsv_reports_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("pairs.tsv");
    std::fs::write(&input, "good pair\tgutes paar\nno tab here\n").unwrap();
    let output = mtkit(&[
        "filter",
        "--input",
        input.to_str().unwrap(),
        "--output",
        dir.path().join("kept.tsv").to_str().unwrap(),
        "--rejections",
        dir.path().join("rej.jsonl").to_str().unwrap(),
        "--lang-pair",
        "en-de",
    ]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
}

// Chosen ids frozen from the hand-traced run over the published scores.
#[test]
fn bsbe_search_on_published_pool() {
    let pool = data("pool_scores.json");
    let output = mtkit(&[
        "ensemble-search",
        "--strategy",
        "bsbe",
        "--pool",
        pool.to_str().unwrap(),
        "--size",
        "3",
    ]);
    let value = report(&output);
    let chosen: Vec<&str> = value["result"]["selection"]["chosen_ids"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(chosen, ["dual", "talking_heads", "aan"]);
    assert_eq!(value["result"]["selection"]["evaluations_used"], 9);
    assert_eq!(value["result"]["search_cost"], 9);

    let output = mtkit(&[
        "ensemble-search",
        "--strategy",
        "bsbe",
        "--pool",
        pool.to_str().unwrap(),
        "--size",
        "5",
    ]);
    let value = report(&output);
    let chosen: Vec<&str> = value["result"]["selection"]["chosen_ids"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(
        chosen,
        ["dual", "talking_heads", "aan", "avg_first", "post_norm"]
    );
}

#[test]
fn greedy_and_brute_search_over_translations() {
    let pool = data("pool_translations.json");
    let refs = data("refs.txt");
    for strategy in ["greedy", "brute"] {
        let output = mtkit(&[
            "ensemble-search",
            "--strategy",
            strategy,
            "--pool",
            pool.to_str().unwrap(),
            "--refs",
            refs.to_str().unwrap(),
            "--size",
            "3",
        ]);
        let report = report(&output);
        let chosen = report["result"]["selection"]["chosen_ids"].as_array().unwrap();
        assert!(!chosen.is_empty());
        // m1 is a perfect match for the references, so every strategy keeps it
        assert_eq!(chosen[0], "m1");
    }
}

#[test]
fn selfbleu_manifest_matrix() {
    let manifest = data("manifest_selfbleu.json");
    let output = mtkit(&["selfbleu", "--manifest", manifest.to_str().unwrap(), "--multiref"]);
    let report = report(&output);
    let values = report["result"]["matrix"]["values"].as_array().unwrap();
    assert_eq!(values.len(), 3);
    for i in 0..3 {
        assert_eq!(values[i][i], 100.0);
        for j in 0..3 {
            assert_eq!(values[i][j], values[j][i]);
        }
    }
    assert_eq!(
        report["result"]["average_self_bleu"].as_array().unwrap().len(),
        3
    );
    assert_eq!(
        report["result"]["multiref_self_bleu"].as_array().unwrap().len(),
        3
    );
}

#[test]
fn filter_writes_kept_and_rejections() {
    let dir = tempfile::tempdir().unwrap();
    let kept_path = dir.path().join("kept.tsv");
    let rejections_path = dir.path().join("rejections.jsonl");
    let output = mtkit(&[
        "filter",
        "--input",
        data("filter_pairs.tsv").to_str().unwrap(),
        "--output",
        kept_path.to_str().unwrap(),
        "--rejections",
        rejections_path.to_str().unwrap(),
        "--lang-pair",
        "en-de",
    ]);
    let report = report(&output);
    assert_eq!(report["result"]["input_pairs"], 3);
    assert_eq!(report["result"]["kept"], 1);
    assert_eq!(report["result"]["rejected"], 2);

    let kept = std::fs::read_to_string(&kept_path).unwrap();
    assert_eq!(kept.lines().count(), 1);
    let rejections = std::fs::read_to_string(&rejections_path).unwrap();
    let lines: Vec<Value> = rejections
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["line"], 2);
    assert_eq!(lines[0]["reasons"][0], "duplicate");
    assert_eq!(lines[1]["line"], 3);
    assert_eq!(lines[1]["reasons"][0], "ratio");
}

#[test]
fn bpe_learn_and_apply_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let merges = dir.path().join("merges.txt");
    let output = mtkit(&[
        "bpe-learn",
        "--input",
        data("bpe_corpus.txt").to_str().unwrap(),
        "--merges",
        "4",
        "--output",
        merges.to_str().unwrap(),
    ]);
    let report_value = report(&output);
    assert_eq!(report_value["result"]["learned_merges"], 4);
    let text = std::fs::read_to_string(&merges).unwrap();
    assert_eq!(text, "e s\nes t</w>\nl o\ne w\n");

    let segmented = dir.path().join("segmented.txt");
    let output = mtkit(&[
        "bpe-apply",
        "--input",
        data("bpe_input.txt").to_str().unwrap(),
        "--model",
        merges.to_str().unwrap(),
        "--output",
        segmented.to_str().unwrap(),
    ]);
    report(&output);
    let text = std::fs::read_to_string(&segmented).unwrap();
    assert_eq!(text, "lo w est</w>\n");
}

#[test]
fn noise_fixture_is_frozen() {
    let output = mtkit(&["noise", "--fixture"]);
    let report = report(&output);
    assert_eq!(report["seed"], 42);
    assert_eq!(report["result"]["input"], "the quick brown fox jumps today");
    let outputs: Vec<&str> = report["result"]["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(
        outputs,
        [
            "the quick brown fox jumps today",
            "the alpha fox jumps today",
            "the quick brown fox jumps today",
            "the charlie brown fox jumps today",
        ]
    );
}

#[test]
fn noise_runs_are_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("input.txt");
    let lines: Vec<String> = (0..50)
        .map(|i| format!("sentence number {i} with several tokens inside"))
        .collect();
    std::fs::write(&input, lines.join("\n") + "\n").unwrap();
    let out1 = dir.path().join("out1.txt");
    let out2 = dir.path().join("out2.txt");
    for out in [&out1, &out2] {
        let output = mtkit(&[
            "noise",
            "--input",
            input.to_str().unwrap(),
            "--output",
            out.to_str().unwrap(),
            "--seed",
            "7",
            "--epoch",
            "3",
        ]);
        report(&output);
    }
    assert_eq!(
        std::fs::read(&out1).unwrap(),
        std::fs::read(&out2).unwrap()
    );
    // a different epoch realizes different corruptions
    let out3 = dir.path().join("out3.txt");
    let output = mtkit(&[
        "noise",
        "--input",
        input.to_str().unwrap(),
        "--output",
        out3.to_str().unwrap(),
        "--seed",
        "7",
        "--epoch",
        "4",
    ]);
    report(&output);
    assert_ne!(
        std::fs::read(&out1).unwrap(),
        std::fs::read(&out3).unwrap()
    );
}

#[test]
fn schedule_plot_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("decays.csv");
    let output = mtkit(&[
        "schedule-plot",
        "--steps",
        "100",
        "--output",
        csv_path.to_str().unwrap(),
    ]);
    report(&output);
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,linear,exponential,inverse_sigmoid"));
    let first = lines.next().unwrap();
    assert!(first.starts_with("0,1,1,"));
    assert_eq!(csv.lines().count(), 102);
}

#[test]
fn filter_paired_files_and_predictions_backend() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src.txt");
    let tgt = dir.path().join("tgt.txt");
    std::fs::write(&src, "good morning\nanother line here\n").unwrap();
    std::fs::write(&tgt, "guten Morgen\nnoch eine Zeile\n").unwrap();
    // external classifier says line 2's target is not German-side script
    let preds = dir.path().join("preds.tsv");
    std::fs::write(&preds, "en\tde\nen\tzh\n").unwrap();
    let output = mtkit(&[
        "filter",
        "--src",
        src.to_str().unwrap(),
        "--tgt",
        tgt.to_str().unwrap(),
        "--output",
        dir.path().join("kept.tsv").to_str().unwrap(),
        "--rejections",
        dir.path().join("rej.jsonl").to_str().unwrap(),
        "--lang-pair",
        "en-de",
        "--langid-predictions",
        preds.to_str().unwrap(),
    ]);
    let value = report(&output);
    assert_eq!(value["result"]["kept"], 1);
    assert_eq!(value["result"]["rejected"], 1);
    let rejections = std::fs::read_to_string(dir.path().join("rej.jsonl")).unwrap();
    let line: Value = serde_json::from_str(rejections.lines().next().unwrap()).unwrap();
    assert_eq!(line["line"], 2);
    assert_eq!(line["reasons"][0], "langid_mismatch");
}

#[test]
fn filter_monolingual_by_perplexity() {
    let dir = tempfile::tempdir().unwrap();
    let lm_corpus = dir.path().join("bitext_side.txt");
    let mono = dir.path().join("mono.txt");
    let in_domain: Vec<String> = (0..19)
        .map(|i| format!("the market opened higher on day {}", i % 4))
        .collect();
    std::fs::write(&lm_corpus, in_domain.join("\n") + "\n").unwrap();
    let mut lines = in_domain.clone();
    lines.push("zz yy xx ww vv uu tt".to_string());
    std::fs::write(&mono, lines.join("\n") + "\n").unwrap();
    let kept = dir.path().join("kept.txt");
    let rejected = dir.path().join("rejected.txt");
    let output = mtkit(&[
        "filter",
        "--mono",
        mono.to_str().unwrap(),
        "--lm-corpus",
        lm_corpus.to_str().unwrap(),
        "--lm-order",
        "3",
        "--percentile",
        "95",
        "--output",
        kept.to_str().unwrap(),
        "--rejections",
        rejected.to_str().unwrap(),
        "--lang-pair",
        "en-de",
    ]);
    let value = report(&output);
    assert_eq!(value["result"]["kept"], 19);
    assert_eq!(value["result"]["rejected"], 1);
    let rejected = std::fs::read_to_string(&rejected).unwrap();
    assert_eq!(rejected.trim(), "zz yy xx ww vv uu tt");
}

#[test]
fn tsv_denoise_keeps_sources() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("pairs.tsv");
    let lines: Vec<String> = (0..50)
        .map(|i| format!("source {i} stays put\ttarget t{i} has five tokens"))
        .collect();
    std::fs::write(&input, lines.join("\n") + "\n").unwrap();
    let out = dir.path().join("denoised.tsv");
    let output = mtkit(&[
        "noise",
        "--input",
        input.to_str().unwrap(),
        "--format",
        "tsv",
        "--denoise",
        "--output",
        out.to_str().unwrap(),
        "--seed",
        "5",
    ]);
    report(&output);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 50);
    for (i, line) in text.lines().enumerate() {
        let (src, _) = line.split_once('\t').unwrap();
        assert_eq!(src, format!("source {i} stays put"));
    }
    // tsv without --denoise is an argument error
    let output = mtkit(&[
        "noise",
        "--input",
        input.to_str().unwrap(),
        "--format",
        "tsv",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn kernel_check_passes() {
    let output = mtkit(&["kernel-check", "--seed", "3", "--trials", "10"]);
    let report = report(&output);
    let results = report["result"].as_array().unwrap();
    assert!(results.len() >= 10);
    assert!(results.iter().all(|r| r["passed"] == true));
    let table = String::from_utf8_lossy(&output.stderr);
    assert!(table.contains("PASS"));
}
