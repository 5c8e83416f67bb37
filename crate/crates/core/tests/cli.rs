use std::path::Path;
use std::process::{Command, Output};

use vidcopy::storage::{read_descriptors, write_descriptors, write_durations};
use vidcopy::{DescriptorSet, VideoId};

fn vidcopy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vidcopy")).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn simulate(dir: &Path, config: &str) -> Output {
    let cfg = dir.join("sim.toml");
    std::fs::write(&cfg, config).unwrap();
    vidcopy(&["simulate", "--config", p(&cfg), "--out", p(&dir.join("inst"))])
}

#[test]
fn simulate_writes_files_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(dir.path(), "seed = 3\n");
    assert_eq!(out.status.code(), Some(0));
    let inst = dir.path().join("inst");
    for f in ["queries.vcbd", "references.vcbd", "training.vcbd", "ground_truth.csv", "tags.csv", "hard_negatives.csv", "durations.csv"] {
        assert!(inst.join(f).exists(), "{f}");
    }
    let text = stdout(&out);
    let counts: Vec<usize> = text.lines().nth(1).unwrap().split(' ').map(|x| x.parse().unwrap()).collect();
    assert_eq!(counts[0], read_descriptors(inst.join("queries.vcbd")).unwrap().len());
    assert_eq!(counts[1], read_descriptors(inst.join("references.vcbd")).unwrap().len());
    assert_eq!(counts[2], read_descriptors(inst.join("training.vcbd")).unwrap().len());
    let gt = vidcopy::storage::read_ground_truth(inst.join("ground_truth.csv")).unwrap();
    assert_eq!(counts[3], gt.boxes().len());
    assert_eq!(counts[4], gt.matched_queries().len());
}

#[test]
fn missing_seed_exits_2_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(dir.path(), "dim = 16\n");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn io_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let out = vidcopy(&["simulate", "--config", p(&missing), "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(vidcopy(&["search", "--k", "3"]).status.code(), Some(2));
    assert_eq!(vidcopy(&["bogus"]).status.code(), Some(2));
}

#[test]
fn version_names_the_format() {
    let out = vidcopy(&["--version"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains(env!("CARGO_PKG_VERSION")) && text.contains("format v1"), "{text}");
}

fn pipeline(dir: &Path, threads: &str) -> (String, String, String) {
    let inst = dir.join("inst");
    let s = dir.join(format!("search{threads}"));
    let loc = dir.join(format!("loc{threads}.csv"));
    let q = inst.join("queries.vcbd");
    let r = inst.join("references.vcbd");
    let out = vidcopy(&["--threads", threads, "search", "--queries", p(&q), "--refs", p(&r), "--k", "5000", "--out", p(&s)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dets = s.join("detections.csv");
    let out = vidcopy(&["--threads", threads, "localize", "--from-search", p(&dets), "--queries", p(&q), "--refs", p(&r), "--out", p(&loc)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    (
        std::fs::read_to_string(s.join("matches.csv")).unwrap(),
        std::fs::read_to_string(&dets).unwrap(),
        std::fs::read_to_string(&loc).unwrap(),
    )
}

#[test]
fn end_to_end_pipeline_scores_and_is_thread_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "seed = 12\nn_references = 40\nn_distractor_queries = 40\nn_copied_queries = 12\np_time_decimate = 0.0\n";
    assert_eq!(simulate(dir.path(), cfg).status.code(), Some(0));
    let one = pipeline(dir.path(), "1");
    let four = pipeline(dir.path(), "4");
    assert_eq!(one, four);

    let gt = dir.path().join("inst/ground_truth.csv");
    let dets = dir.path().join("search1/detections.csv");
    let loc = dir.path().join("loc1.csv");
    let curve = dir.path().join("curve.csv");
    for (task, preds) in [("detection", &dets), ("map", &dets), ("localization", &loc)] {
        let out = vidcopy(&["evaluate", "--task", task, "--preds", p(preds), "--gt", p(&gt), "--curve", p(&curve)]);
        assert_eq!(out.status.code(), Some(0));
        let value: f64 = stdout(&out).trim().parse().unwrap();
        assert!(value >= 0.99, "{task}: {value}");
    }
    let header = std::fs::read_to_string(&curve).unwrap();
    assert!(header.starts_with("rank,threshold,precision,recall"));

    let tags = dir.path().join("inst/tags.csv");
    let out = vidcopy(&["evaluate", "--task", "detection", "--preds", p(&dets), "--gt", p(&gt), "--tags", p(&tags), "--subset", "!change_video_speed"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).lines().last().unwrap().parse::<f64>().unwrap() >= 0.99);
}

#[test]
fn perfect_predictions_print_one() {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt.csv");
    let preds = dir.path().join("p.csv");
    std::fs::write(&gt, "query_id,ref_id,query_start,query_end,ref_start,ref_end\nQ1,R1,0,5,2,7\n").unwrap();
    std::fs::write(&preds, "query_id,ref_id,score\nQ1,R1,0.9\n").unwrap();
    let out = vidcopy(&["evaluate", "--task", "detection", "--preds", p(&preds), "--gt", p(&gt)]);
    assert_eq!(stdout(&out).trim(), "1.000000");
}

#[test]
fn score_normalized_search_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "seed = 4\nn_references = 20\nn_distractor_queries = 20\nn_copied_queries = 6\nn_training = 10\nn_hard_negative_pairs = 2\n";
    assert_eq!(simulate(dir.path(), cfg).status.code(), Some(0));
    let inst = dir.path().join("inst");
    let out = vidcopy(&[
        "search", "--queries", p(&inst.join("queries.vcbd")), "--refs", p(&inst.join("references.vcbd")),
        "--k", "500", "--score-norm", p(&inst), "--k-sn", "1", "--beta", "1.2", "--out", p(&dir.path().join("s")),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = vidcopy(&[
        "search", "--queries", p(&inst.join("queries.vcbd")), "--refs", p(&inst.join("references.vcbd")),
        "--k", "500", "--score-norm", p(&inst), "--k-sn", "0", "--out", p(&dir.path().join("s")),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn validate_submission_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let id = VideoId::query("Q1").unwrap();
    let durations = dir.path().join("durations.csv");
    write_durations(&durations, &[(id.clone(), 10.0)].into_iter().collect()).unwrap();
    let set = |dim: usize, n: usize| {
        DescriptorSet::new(id.clone(), dim, (0..n).map(|t| t as f64).collect(), vec![0.5; dim * n]).unwrap()
    };
    let file = dir.path().join("d.vcbd");
    write_descriptors(&file, &[set(512, 10)]).unwrap();
    let out = vidcopy(&["validate-submission", "--descriptors", p(&file), "--durations", p(&durations)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("PASS"));
    write_descriptors(&file, &[set(513, 10)]).unwrap();
    let out = vidcopy(&["validate-submission", "--descriptors", p(&file), "--durations", p(&durations)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).contains("FAIL"));
}
