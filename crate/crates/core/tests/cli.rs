use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn reqvae(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reqvae"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const SMALL: &[&str] = &[
    "--hidden-size",
    "24",
    "--z-dim",
    "4",
    "--embedding-dim",
    "8",
    "--batch-size",
    "8",
];

/// Trains a small model on the toy corpus and returns the checkpoint path.
fn train_small(dir: &Path, epochs: &str, log: &str) -> (PathBuf, Output) {
    let ckpt = dir.join("model.ckpt");
    let log = dir.join(log);
    let toy = data("toy_requirements.txt");
    let mut args = vec![
        "train",
        "--corpus",
        &toy,
        "--checkpoint",
        p(&ckpt),
        "--metrics-log",
        p(&log),
        "--epochs",
        epochs,
    ];
    args.extend_from_slice(SMALL);
    let out = reqvae(&args);
    (ckpt, out)
}

fn strip_wall_time(log: &str) -> Vec<serde_json::Value> {
    log.lines()
        .map(|l| {
            let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
            v.as_object_mut()
                .unwrap()
                .remove("wall_time_s")
                .expect("wall_time_s present");
            v
        })
        .collect()
}

#[test]
fn prepare_deduplicates_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("clean.txt");
    let out = reqvae(&[
        "prepare",
        "--input",
        &data("raw_requirements.txt"),
        "--output",
        p(&out_path),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let clean = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(clean.lines().count(), 8, "{clean}");
    let report = stdout(&out);
    assert!(report.contains("entries=8"), "{report}");
    assert!(report.contains("mean_length="), "{report}");

    let capped = dir.path().join("capped.txt");
    let out = reqvae(&[
        "prepare",
        "--input",
        &data("raw_requirements.txt"),
        "--output",
        p(&capped),
        "--max-tokens",
        "20",
    ]);
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(&capped).unwrap().lines().count(), 7);
}

#[test]
fn prepare_missing_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("clean.txt");
    let out = reqvae(&[
        "prepare",
        "--input",
        p(&dir.path().join("nope.txt")),
        "--output",
        p(&out_path),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("nope.txt"));
    assert!(stdout(&out).is_empty());
    assert!(!out_path.exists());
}

#[test]
fn train_writes_checkpoint_and_log_deterministically() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (ckpt, out) = train_small(a.path(), "5", "m.jsonl");
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("seed: 0"));
    assert!(ckpt.is_file());
    let log_a = std::fs::read_to_string(a.path().join("m.jsonl")).unwrap();
    assert_eq!(log_a.lines().count(), 5);

    let (_, out) = train_small(b.path(), "5", "m.jsonl");
    assert!(out.status.success());
    let log_b = std::fs::read_to_string(b.path().join("m.jsonl")).unwrap();
    assert_eq!(strip_wall_time(&log_a), strip_wall_time(&log_b));
}

#[test]
fn invalid_num_words_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let toy = data("toy_requirements.txt");
    let ckpt = dir.path().join("m.ckpt");
    let out = reqvae(&[
        "train",
        "--corpus",
        &toy,
        "--checkpoint",
        p(&ckpt),
        "--num-words",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("num_words"), "{}", stderr(&out));
    assert!(!ckpt.exists());
}

#[test]
fn config_file_with_unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"corpus": "x.txt", "checkpoint": "m.ckpt", "learning_rate": 0.1}"#,
    )
    .unwrap();
    let out = reqvae(&["train", "--config", p(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("learning_rate"), "{}", stderr(&out));
}

#[test]
fn missing_paths_are_caught_before_training() {
    let dir = tempfile::tempdir().unwrap();
    let toy = data("toy_requirements.txt");
    let out = reqvae(&[
        "train",
        "--corpus",
        &toy,
        "--checkpoint",
        p(&dir.path().join("no/such/dir/m.ckpt")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("checkpoint"));
    let out = reqvae(&[
        "train",
        "--corpus",
        &toy,
        "--checkpoint",
        p(&dir.path().join("m.ckpt")),
        "--embeddings",
        "/no/vectors.txt",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("embeddings"));
}

#[test]
fn generation_commands_on_a_trained_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let (ckpt, out) = train_small(dir.path(), "2", "m.jsonl");
    assert!(out.status.success(), "{}", stderr(&out));
    let c = p(&ckpt);

    let gen = |seed: &str| {
        reqvae(&[
            "generate",
            "--checkpoint",
            c,
            "-n",
            "4",
            "--seed",
            seed,
            "--temperature",
            "0.8",
        ])
    };
    let first = gen("3");
    assert!(first.status.success(), "{}", stderr(&first));
    assert_eq!(stdout(&first).lines().count(), 4);
    assert_eq!(stdout(&first), stdout(&gen("3")));
    assert!(stderr(&first).contains("seed: 3"));

    let interp = reqvae(&[
        "interpolate",
        "--checkpoint",
        c,
        "--sentence-a",
        "The system shall log errors.",
        "--sentence-b",
        "The user shall reset the password.",
        "--steps",
        "2",
    ]);
    assert!(interp.status.success(), "{}", stderr(&interp));
    let lines: Vec<String> = stdout(&interp).lines().map(String::from).collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("alpha=0.000\t"));
    assert!(lines[1].starts_with("alpha=1.000\t"));

    let recon = reqvae(&[
        "reconstruct",
        "--checkpoint",
        c,
        "The system shall log errors.",
        "The user shall reset the password.",
    ]);
    assert!(recon.status.success());
    let recon_text = stdout(&recon);
    let recon_lines: Vec<&str> = recon_text.lines().collect();
    assert_eq!(recon_lines.len(), 2);
    assert_eq!(lines[0].split('\t').nth(1).unwrap(), recon_lines[0]);
    assert_eq!(lines[1].split('\t').nth(1).unwrap(), recon_lines[1]);

    let eval = reqvae(&[
        "eval",
        "--checkpoint",
        c,
        "--corpus",
        &data("toy_requirements.txt"),
    ]);
    assert!(eval.status.success());
    let record: serde_json::Value = serde_json::from_str(stdout(&eval).trim()).unwrap();
    assert!(record["perplexity"].as_f64().unwrap() >= 1.0);

    let inspect = reqvae(&["inspect", "--checkpoint", c, "--vocab"]);
    assert!(inspect.status.success());
    let text = stdout(&inspect);
    assert!(text.contains("\"format_version\": 1"));
    assert!(text.contains("0\t<pad>"));
}

#[test]
fn damaged_checkpoints_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let (ckpt, out) = train_small(dir.path(), "1", "m.jsonl");
    assert!(out.status.success());
    let mut bytes = std::fs::read(&ckpt).unwrap();
    bytes[8] = 99;
    let bad_version = dir.path().join("v99.ckpt");
    std::fs::write(&bad_version, &bytes).unwrap();
    let out = reqvae(&["generate", "--checkpoint", p(&bad_version)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("version 99"), "{}", stderr(&out));

    let truncated = dir.path().join("short.ckpt");
    std::fs::write(&truncated, &std::fs::read(&ckpt).unwrap()[..100]).unwrap();
    let out = reqvae(&[
        "eval",
        "--checkpoint",
        p(&truncated),
        "--corpus",
        &data("toy_requirements.txt"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("truncated"));
}

#[test]
fn resume_continues_the_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (_, out) = train_small(a.path(), "4", "m.jsonl");
    assert!(out.status.success());
    let (ckpt, out) = train_small(b.path(), "2", "m.jsonl");
    assert!(out.status.success());
    let toy = data("toy_requirements.txt");
    let log = b.path().join("m.jsonl");
    let out = reqvae(&[
        "train",
        "--resume",
        "--corpus",
        &toy,
        "--checkpoint",
        p(&ckpt),
        "--metrics-log",
        p(&log),
        "--epochs",
        "4",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let full = std::fs::read_to_string(a.path().join("m.jsonl")).unwrap();
    let resumed = std::fs::read_to_string(&log).unwrap();
    assert_eq!(strip_wall_time(&full), strip_wall_time(&resumed));
}

#[test]
fn help_lists_defaults() {
    let out = reqvae(&["train", "--help"]);
    assert!(out.status.success());
    let help = stdout(&out);
    for needle in [
        "--kl-warmup-steps",
        "[default: 2000]",
        "--word-dropout",
        "[default: 0.25]",
        "--seed",
    ] {
        assert!(help.contains(needle), "{needle}");
    }
    let out = reqvae(&["interpolate", "--help"]);
    assert!(stdout(&out).contains("[default: 8]"));
}
