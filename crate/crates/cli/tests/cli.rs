use std::path::Path;
use std::process::{Command, Output};

fn jgekd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jgekd"))
        .args(args)
        .env("JGE_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = jgekd(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn count_files(dir: &Path, ext: &str) -> usize {
    std::fs::read_dir(dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == ext))
        .count()
}

fn small_data(dir: &Path) -> String {
    let out = dir.join("data");
    let out = out.to_str().unwrap().to_string();
    ok(&["gen-data", "--out", &out, "--per-class-train", "4", "--per-class-test", "2", "--points", "24"]);
    out
}

#[test]
fn gen_data_defaults_write_full_tree() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ms");
    ok(&["gen-data", "--out", out.to_str().unwrap()]);
    assert_eq!(count_files(&out.join("train"), "pcb"), 800);
    assert_eq!(count_files(&out.join("test"), "pcb"), 240);
    assert!(out.join("train.txt").is_file());
    assert!(out.join("test.txt").is_file());
    let classes = std::fs::read_to_string(out.join("classes.txt")).unwrap();
    assert_eq!(classes.lines().count(), 8);
}

#[test]
fn gen_data_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let da = small_data(a.path());
    let db = small_data(b.path());
    for name in ["train.txt", "test.txt", "classes.txt", "train/00003_sphere.pcb", "test/00015_dumbbell.pcb"] {
        let x = std::fs::read(Path::new(&da).join(name)).unwrap();
        let y = std::fs::read(Path::new(&db).join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn too_few_points_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = jgekd(&["gen-data", "--out", dir.path().to_str().unwrap(), "--points", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("gen.conf");
    std::fs::write(&conf, "points = 16\ncolour = blue\n").unwrap();
    let out = jgekd(&["gen-data", "--config", conf.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn config_file_values_apply_and_are_logged() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("gen.conf");
    let out_dir = dir.path().join("d");
    std::fs::write(&conf, format!("out = {}\nper_class_train = 2\nper_class_test = 1\n", out_dir.display())).unwrap();
    let out = ok(&["gen-data", "--config", conf.to_str().unwrap(), "--per-class-test", "3"]);
    assert_eq!(count_files(&out_dir.join("train"), "pcb"), 16);
    assert_eq!(count_files(&out_dir.join("test"), "pcb"), 24);
    let log = String::from_utf8_lossy(&out.stderr);
    assert!(log.contains("per_class_test=3") && log.contains("points=64"), "{log}");
}

#[test]
fn corrupt_single_kind_layout() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_data(dir.path());
    let out = dir.path().join("c");
    ok(&["corrupt", "--in", &format!("{data}/test.txt"), "--out", out.to_str().unwrap(), "--kind", "rotation", "--severity", "3"]);
    let set = out.join("rotation_s3");
    assert!(set.join("manifest.txt").is_file());
    assert_eq!(count_files(&set, "pcb"), 16);
}

#[test]
fn corrupt_all_writes_every_kind_and_severity() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_data(dir.path());
    let out = dir.path().join("c");
    ok(&["corrupt", "--in", &format!("{data}/test.txt"), "--out", out.to_str().unwrap(), "--all"]);
    let dirs = std::fs::read_dir(&out).unwrap().filter(|e| e.as_ref().unwrap().path().is_dir()).count();
    assert_eq!(dirs, 65);
}

#[test]
fn corrupt_rejects_bad_severity_and_unsupported_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_data(dir.path());
    let input = format!("{data}/test.txt");
    let out = dir.path().join("c");
    let o = out.to_str().unwrap();
    assert_eq!(jgekd(&["corrupt", "--in", &input, "--out", o, "--kind", "shear", "--severity", "6"]).status.code(), Some(2));
    for kind in ["occlusion", "lidar"] {
        let r = jgekd(&["corrupt", "--in", &input, "--out", o, "--kind", kind, "--severity", "1"]);
        assert_eq!(r.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&r.stderr).contains("not supported"), "{}", String::from_utf8_lossy(&r.stderr));
    }
    assert_eq!(jgekd(&["corrupt", "--in", &input, "--out", o, "--kind", "sparkle", "--severity", "1"]).status.code(), Some(2));
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let r = jgekd(&[
        "eval",
        "--model",
        dir.path().join("nope.jgp").to_str().unwrap(),
        "--data",
        dir.path().to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn train_eval_robustness_correlation_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_data(dir.path());
    let train_m = format!("{data}/train.txt");
    let test_m = format!("{data}/test.txt");
    let st = dir.path().join("st");
    let skd = dir.path().join("skd");
    let tkd = dir.path().join("tkd");
    let common = ["--train", &train_m, "--test", &test_m, "--epochs", "3", "--batch-size", "8"];

    let out = ok(&[&["train", "--out", st.to_str().unwrap(), "--strategy", "st"][..], &common[..]].concat());
    assert!(String::from_utf8_lossy(&out.stdout).contains("test OA"));
    ok(&[&["train", "--out", skd.to_str().unwrap(), "--strategy", "skd"][..], &common[..]].concat());
    let st_model = st.join("model.jgp");
    let skd_model = skd.join("model.jgp");
    let r = jgekd(&[&["train", "--out", tkd.to_str().unwrap(), "--strategy", "tkd"][..], &common[..]].concat());
    assert_eq!(r.status.code(), Some(2), "tkd without a teacher");
    ok(&[&["train", "--out", tkd.to_str().unwrap(), "--strategy", "tkd", "--teacher", skd_model.to_str().unwrap()][..], &common[..]].concat());

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(st.join("train_report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["strategy"], "st");
    assert_eq!(report["report"]["loss_history"].as_array().unwrap().len(), 3);
    assert!(std::fs::read_to_string(st.join("train_report.csv")).unwrap().starts_with("# "));

    let ev = dir.path().join("ev");
    ok(&["eval", "--model", st_model.to_str().unwrap(), "--data", &test_m, "--out", ev.to_str().unwrap()]);
    assert!(ev.join("eval_report.json").is_file());

    let rob = dir.path().join("rob");
    ok(&[
        "robustness",
        "--model",
        skd_model.to_str().unwrap(),
        "--ref",
        st_model.to_str().unwrap(),
        "--data",
        &test_m,
        "--out",
        rob.to_str().unwrap(),
    ]);
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(rob.join("robustness.csv"))
        .unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    let kinds: Vec<&csv::StringRecord> = rows.iter().filter(|r| &r[0] != "mCE").collect();
    assert_eq!(kinds.len(), 12);
    let cells = kinds.iter().flat_map(|r| (1..=5).map(move |i| r[i].parse::<f64>().unwrap())).count();
    assert_eq!(cells, 60);
    assert!(kinds.iter().all(|r| r[6].parse::<f64>().is_ok()));
    assert!(!kinds.iter().any(|r| &r[0] == "background"));
    assert_eq!(rows.iter().filter(|r| &r[0] == "mCE").count(), 1);

    let rob_bg = dir.path().join("rob_bg");
    ok(&[
        "robustness",
        "--model",
        skd_model.to_str().unwrap(),
        "--ref",
        st_model.to_str().unwrap(),
        "--data",
        &test_m,
        "--out",
        rob_bg.to_str().unwrap(),
        "--with-background",
    ]);
    let table: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(rob_bg.join("robustness.json")).unwrap()).unwrap();
    assert_eq!(table["report"]["rows"].as_array().unwrap().len(), 13);

    let cor = dir.path().join("cor");
    ok(&["correlation", "--model", st_model.to_str().unwrap(), "--data", &train_m, "--out", cor.to_str().unwrap(), "--samples-per-class", "4"]);
    let csv_text = std::fs::read_to_string(cor.join("correlation.csv")).unwrap();
    assert_eq!(csv_text.lines().filter(|l| !l.starts_with('#')).count(), 9);
}

#[test]
fn zero_beta_skd_matches_st_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_data(dir.path());
    let train_m = format!("{data}/train.txt");
    let test_m = format!("{data}/test.txt");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let common = ["--train", &train_m, "--test", &test_m, "--epochs", "2", "--augmentation", "false", "--beta", "0"];
    ok(&[&["train", "--out", a.to_str().unwrap(), "--strategy", "st"][..], &common[..]].concat());
    ok(&[&["train", "--out", b.to_str().unwrap(), "--strategy", "skd"][..], &common[..]].concat());
    assert_eq!(std::fs::read(a.join("model.jgp")).unwrap(), std::fs::read(b.join("model.jgp")).unwrap());
}
