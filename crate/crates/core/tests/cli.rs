use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use relemb::eval::write_predictions;
use relemb::synth::{generate, SynthConfig};

fn relemb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relemb"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = relemb(args);
    assert!(
        out.status.success(),
        "relemb {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Synthetic files plus a vocabulary, contexts and a pretrained model,
/// built once for all tests.
struct Fixture {
    dir: PathBuf,
}

impl Fixture {
    /// Lives as long as the fixture, which is never dropped.
    fn path(&self, name: &str) -> &'static str {
        Box::leak(s(&self.dir.join(name)).to_owned().into_boxed_str())
    }
}

fn pretrain_flags(d: &'static str, epochs: &'static str) -> [&'static str; 12] {
    [
        "--d",
        d,
        "--c",
        "2",
        "--k",
        "5",
        "--t",
        "1e-2",
        "--epochs",
        epochs,
        "--threads",
        "1",
    ]
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-fixture");
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        let data = generate(&SynthConfig {
            corpus_sentences: 10_000,
            ..Default::default()
        });
        data.write_to(&dir).unwrap();
        let f = Fixture { dir };
        ok(&[
            "build-vocab",
            "--corpus",
            f.path("corpus.tagged"),
            "--lowercase",
            "false",
            "--output",
            f.path("vocab.txt"),
        ]);
        ok(&[
            "extract",
            "--corpus",
            f.path("corpus.tagged"),
            "--vocab",
            f.path("vocab.txt"),
            "--m-out",
            "3",
            "--output",
            f.path("contexts.bin"),
        ]);
        let mut args = vec![
            "pretrain",
            "--vocab",
            f.path("vocab.txt"),
            "--contexts",
            f.path("contexts.bin"),
            "--output",
            f.path("model.bin"),
        ];
        args.extend(pretrain_flags("10", "3"));
        ok(&args);
        f
    })
}

fn train(f: &Fixture, out: &Path, extra: &[&str]) {
    let mut args = vec![
        "train",
        "--train",
        f.path("train.txt"),
        "--vocab",
        f.path("vocab.txt"),
        "--model",
        f.path("model.bin"),
        "--eta",
        "0.02",
        "--lambda",
        "1e-3",
        "--m-out",
        "3",
        "--output",
        s(out),
    ];
    args.extend(extra);
    ok(&args);
}

fn report_value(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in report"))
        .parse()
        .unwrap()
}

#[test]
fn pipeline_trains_and_evaluates() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let clf = dir.path().join("clf.txt");
    train(f, &clf, &[]);
    let emb = dir.path().join("clf.txt.emb");
    let report = dir.path().join("report.txt");
    let pred = dir.path().join("pred.txt");
    ok(&[
        "eval",
        "--test",
        f.path("test.txt"),
        "--classifier",
        s(&clf),
        "--model",
        s(&emb),
        "--vocab",
        f.path("vocab.txt"),
        "--write-pred",
        s(&pred),
        "--bootstrap",
        "200",
        "--output",
        s(&report),
    ]);
    let report = std::fs::read_to_string(&report).unwrap();
    let f1 = report_value(&report, "macro_f1");
    assert!(f1 >= 90.0, "macro-F1 {f1}");
    assert!(report_value(&report, "ci_lower") <= f1);
    assert_eq!(std::fs::read_to_string(&pred).unwrap().lines().count(), 400);

    let out = ok(&[
        "ngrams",
        "--classifier",
        s(&clf),
        "--model",
        s(&emb),
        "--vocab",
        f.path("vocab.txt"),
        "--train",
        f.path("train.txt"),
        "--label",
        "Cause-Effect(e1,e2)",
        "--n",
        "3",
    ]);
    assert!(out.contains("that caused the"), "{out}");
}

#[test]
fn missing_input_is_a_usage_error() {
    let f = fixture();
    let out = relemb(&[
        "pretrain",
        "--vocab",
        f.path("vocab.txt"),
        "--contexts",
        f.path("no-such-file.bin"),
        "--output",
        f.path("never.bin"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such-file.bin"));
}

#[test]
fn invalid_settings_are_usage_errors() {
    let f = fixture();
    let common = [
        "--vocab",
        f.path("vocab.txt"),
        "--contexts",
        f.path("contexts.bin"),
        "--output",
        f.path("never.bin"),
    ];
    for bad in [
        &["--epochs", "0"][..],
        &["--set", "pretrain.nonsense=1"],
        &["--d", "ten"],
        &["--no-such-flag"],
    ] {
        let mut args = vec!["pretrain"];
        args.extend(common);
        args.extend(bad);
        assert_eq!(relemb(&args).status.code(), Some(2), "{bad:?}");
    }
    assert!(!Path::new(f.path("never.bin")).exists());
}

#[test]
fn dimension_mismatch_names_both_sizes() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let small = dir.path().join("small.bin");
    let mut args = vec![
        "pretrain",
        "--vocab",
        f.path("vocab.txt"),
        "--contexts",
        f.path("contexts.bin"),
        "--output",
        s(&small),
    ];
    args.extend(pretrain_flags("5", "1"));
    ok(&args);
    let clf = dir.path().join("clf.txt");
    train(f, &clf, &[]);
    let out = relemb(&[
        "eval",
        "--test",
        f.path("test.txt"),
        "--classifier",
        s(&clf),
        "--model",
        s(&small),
        "--vocab",
        f.path("vocab.txt"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("160") && err.contains("80"), "{err}");
}

#[test]
fn identical_predictions_score_100() {
    let f = fixture();
    let records = relemb::corpus::parse_semeval_records(std::io::BufReader::new(
        std::fs::File::open(f.path("test.txt")).unwrap(),
    ))
    .unwrap()
    .into_result()
    .unwrap();
    let rows: Vec<_> = records.iter().map(|r| (r.id, r.label)).collect();
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.txt");
    let mut file = std::fs::File::create(&gold).unwrap();
    write_predictions(&mut file, &rows).unwrap();
    drop(file);
    let report = dir.path().join("report.txt");
    ok(&[
        "eval",
        "--gold",
        s(&gold),
        "--pred",
        s(&gold),
        "--output",
        s(&report),
    ]);
    let report = std::fs::read_to_string(&report).unwrap();
    assert_eq!(report_value(&report, "macro_f1"), 100.0);
    assert_eq!(report_value(&report, "accuracy"), 100.0);
}

#[test]
fn dumped_config_reproduces_the_run() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let (first, second) = (dir.path().join("a.bin"), dir.path().join("b.bin"));
    let dumped = dir.path().join("run.conf");
    let mut args = vec![
        "pretrain",
        "--vocab",
        f.path("vocab.txt"),
        "--contexts",
        f.path("contexts.bin"),
        "--output",
        s(&first),
        "--dump-config",
        s(&dumped),
        "--seed",
        "11",
    ];
    args.extend(pretrain_flags("10", "1"));
    ok(&args);
    let conf = std::fs::read_to_string(&dumped).unwrap();
    assert!(conf.contains("pretrain.seed = 11"), "{conf}");
    let set = format!("path.model={}", s(&second));
    ok(&["pretrain", "--config", s(&dumped), "--set", &set]);
    assert_eq!(
        std::fs::read(&first).unwrap(),
        std::fs::read(&second).unwrap()
    );
}

#[test]
fn cv_folds_partition_the_training_set() {
    let f = fixture();
    let out = ok(&[
        "cv",
        "--train",
        f.path("train.txt"),
        "--vocab",
        f.path("vocab.txt"),
        "--model",
        f.path("model.bin"),
        "--folds",
        "7",
        "--epochs",
        "1",
        "--eta",
        "0.02,0.05",
        "--jobs",
        "2",
    ]);
    let line = out.lines().find(|l| l.starts_with("instances")).unwrap();
    let sizes: Vec<usize> = line
        .split_once('[')
        .unwrap()
        .1
        .trim_end_matches(']')
        .split(", ")
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(sizes.len(), 7);
    assert_eq!(sizes.iter().sum::<usize>(), 400);
    assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    assert!(out.contains("best eta="), "{out}");
}

#[test]
fn random_initialization_needs_no_model() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let clf = dir.path().join("clf.txt");
    ok(&[
        "train",
        "--train",
        f.path("train.txt"),
        "--vocab",
        f.path("vocab.txt"),
        "--init",
        "rand",
        "--d",
        "4",
        "--c",
        "1",
        "--epochs",
        "2",
        "--output",
        s(&clf),
    ]);
    let out = ok(&[
        "eval",
        "--test",
        f.path("test.txt"),
        "--classifier",
        s(&clf),
        "--model",
        s(&dir.path().join("clf.txt.emb")),
        "--vocab",
        f.path("vocab.txt"),
    ]);
    assert!(out.to_lowercase().contains("macro"), "{out}");
}
