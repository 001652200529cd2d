use std::path::{Path, PathBuf};

use jgekd_core::corruptions::write_eval_set;
use jgekd_core::pointcloud::{generate_minishapes, MiniShapesConfig};
use jgekd_core::training::{class_correlation, evaluate, robustness_eval, train as train_model, TrainConfig};
use jgekd_core::{CorruptionKind, Dataset, ModelParams, Severity, Strategy};

use crate::error::CliError;
use crate::settings::{Key, Settings};
use crate::{CorrelationArgs, CorruptArgs, EvalArgs, GenDataArgs, RobustnessArgs, TrainArgs};

type CliResult<T = ()> = Result<T, CliError>;

fn s<T: ToString>(v: Option<T>) -> Option<String> {
    v.map(|v| v.to_string())
}

fn p(v: &Option<PathBuf>) -> Option<String> {
    v.as_ref().map(|p| p.display().to_string())
}

fn on(flag: bool) -> Option<String> {
    flag.then(|| "true".to_string())
}

fn create_dir(dir: &Path) -> CliResult {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn write(path: &Path, contents: &str) -> CliResult {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Writes `<stem>.json` (config + report) and `<stem>.csv` (config preamble + table).
fn write_artifacts(dir: &Path, stem: &str, command: &str, settings: &Settings, report: &str, csv: &str) -> CliResult {
    create_dir(dir)?;
    let report: serde_json::Value =
        serde_json::from_str(report).map_err(|e| CliError::Numerical(format!("report encoding: {e}")))?;
    let doc = serde_json::json!({
        "command": command,
        "config": settings.to_json(),
        "report": report,
    });
    let json = serde_json::to_string_pretty(&doc).expect("json value serializes");
    write(&dir.join(format!("{stem}.json")), &json)?;
    write(&dir.join(format!("{stem}.csv")), &format!("{}{csv}", settings.csv_preamble()))
}

fn load_dataset(path: &Path) -> CliResult<Dataset> {
    Ok(Dataset::load(path)?.normalized())
}

// ---------------------------------------------------------------------------

const GEN_KEYS: &[Key] = &[
    ("out", None),
    ("per_class_train", Some("100")),
    ("per_class_test", Some("30")),
    ("points", Some("64")),
    ("seed", Some("0")),
];

pub fn gen_data(a: GenDataArgs) -> CliResult {
    let settings = Settings::resolve(
        GEN_KEYS,
        a.config.as_deref(),
        vec![
            ("out", p(&a.out)),
            ("per_class_train", s(a.per_class_train)),
            ("per_class_test", s(a.per_class_test)),
            ("points", s(a.points)),
            ("seed", s(a.seed)),
        ],
    )?;
    settings.log("gen-data");
    let out = settings.path("out")?;
    let config = MiniShapesConfig::uniform(
        settings.get("per_class_train")?,
        settings.get("per_class_test")?,
        settings.get("points")?,
        settings.get("seed")?,
    );
    let (train, test) = generate_minishapes(&config)?;
    create_dir(&out)?;
    train.write(&out.join("train.txt"), "train")?;
    test.write(&out.join("test.txt"), "test")?;
    println!("wrote {} train and {} test clouds to {}", train.len(), test.len(), out.display());
    Ok(())
}

const CORRUPT_KEYS: &[Key] = &[
    ("in", None),
    ("out", None),
    ("kind", None),
    ("severity", None),
    ("all", Some("false")),
    ("seed", Some("0")),
];

pub fn corrupt(a: CorruptArgs) -> CliResult {
    let settings = Settings::resolve(
        CORRUPT_KEYS,
        a.config.as_deref(),
        vec![
            ("in", p(&a.input)),
            ("out", p(&a.out)),
            ("kind", a.kind.clone()),
            ("severity", s(a.severity)),
            ("all", on(a.all)),
            ("seed", s(a.seed)),
        ],
    )?;
    settings.log("corrupt");
    let seed: u64 = settings.get("seed")?;
    let jobs: Vec<(CorruptionKind, Severity)> = if settings.flag("all")? {
        if settings.raw("kind").is_some() || settings.raw("severity").is_some() {
            return Err(CliError::Validation("--all cannot be combined with --kind or --severity".into()));
        }
        CorruptionKind::EVAL
            .into_iter()
            .flat_map(|k| Severity::ALL.into_iter().map(move |s| (k, s)))
            .collect()
    } else {
        let kind: CorruptionKind = settings
            .raw("kind")
            .ok_or_else(|| CliError::Validation("either --kind or --all is required".into()))?
            .parse()?;
        let level: u8 = settings.get("severity")?;
        vec![(kind, Severity::new(level)?)]
    };
    let out = settings.path("out")?;
    let data = load_dataset(&settings.path("in")?)?;
    create_dir(&out)?;
    for (kind, severity) in &jobs {
        let dir = write_eval_set(&data, &out, *kind, *severity, seed)?;
        println!("{}", dir.display());
    }
    eprintln!("[jgekd corrupt] wrote {} corrupted set(s) of {} clouds", jobs.len(), data.len());
    Ok(())
}

const TRAIN_KEYS: &[Key] = &[
    ("train", None),
    ("test", None),
    ("out", None),
    ("teacher", None),
    ("strategy", Some("st")),
    ("epochs", Some("200")),
    ("learning_rate", Some("0.001")),
    ("batch_size", Some("16")),
    ("alpha", Some("1")),
    ("beta", Some("1")),
    ("smoothing", Some("0.1")),
    ("seed", Some("0")),
    ("detach_target", Some("false")),
    ("augmentation", Some("true")),
    ("noise_probability", Some("0.5")),
    ("density_probability", Some("0.5")),
];

pub fn train(a: TrainArgs) -> CliResult {
    let settings = Settings::resolve(
        TRAIN_KEYS,
        a.config.as_deref(),
        vec![
            ("train", p(&a.train)),
            ("test", p(&a.test)),
            ("out", p(&a.out)),
            ("teacher", p(&a.teacher)),
            ("strategy", a.strategy.clone()),
            ("epochs", s(a.epochs)),
            ("learning_rate", s(a.learning_rate)),
            ("batch_size", s(a.batch_size)),
            ("alpha", s(a.alpha)),
            ("beta", s(a.beta)),
            ("smoothing", s(a.smoothing)),
            ("seed", s(a.seed)),
            ("detach_target", s(a.detach_target)),
            ("augmentation", s(a.augmentation)),
            ("noise_probability", s(a.noise_probability)),
            ("density_probability", s(a.density_probability)),
        ],
    )?;
    settings.log("train");
    let config = TrainConfig {
        strategy: settings.get::<Strategy>("strategy")?,
        epochs: settings.get("epochs")?,
        learning_rate: settings.get("learning_rate")?,
        batch_size: settings.get("batch_size")?,
        alpha: settings.get("alpha")?,
        beta: settings.get("beta")?,
        smoothing: settings.get("smoothing")?,
        seed: settings.get("seed")?,
        detach_target: settings.get("detach_target")?,
        augmentation: settings.get("augmentation")?,
        noise_probability: settings.get("noise_probability")?,
        density_probability: settings.get("density_probability")?,
    };
    config.validate()?;
    let teacher = match settings.opt::<PathBuf>("teacher")? {
        Some(path) => Some(ModelParams::load(&path)?),
        None if config.strategy == Strategy::Tkd => {
            return Err(CliError::Validation("strategy tkd needs --teacher <checkpoint>".into()))
        }
        None => None,
    };
    let out = settings.path("out")?;
    let train_set = load_dataset(&settings.path("train")?)?;
    let test_set = load_dataset(&settings.path("test")?)?;
    let (params, report) = train_model(&config, &train_set, &test_set, teacher.as_ref())?;
    create_dir(&out)?;
    params.save(&out.join("model.jgp"))?;
    write_artifacts(&out, "train_report", "train", &settings, &report.to_json()?, &report.to_csv()?)?;
    println!(
        "strategy {} epochs {}: test OA {:.4} mAcc {:.4} final loss {:.6}",
        config.strategy,
        config.epochs,
        report.oa,
        report.macc,
        report.loss_history.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

const EVAL_KEYS: &[Key] = &[("model", None), ("data", None), ("out", None)];

pub fn eval(a: EvalArgs) -> CliResult {
    let settings = Settings::resolve(
        EVAL_KEYS,
        a.config.as_deref(),
        vec![("model", p(&a.model)), ("data", p(&a.data)), ("out", p(&a.out))],
    )?;
    settings.log("eval");
    let params = ModelParams::load(&settings.path("model")?)?;
    let data = load_dataset(&settings.path("data")?)?;
    let report = evaluate(&params, &data)?;
    write_artifacts(&settings.path("out")?, "eval_report", "eval", &settings, &report.to_json()?, &report.to_csv()?)?;
    println!("OA {:.4} mAcc {:.4} on {} clouds", report.oa, report.macc, data.len());
    Ok(())
}

const ROBUSTNESS_KEYS: &[Key] = &[
    ("model", None),
    ("ref", None),
    ("data", None),
    ("out", None),
    ("seed", Some("0")),
    ("with_background", Some("false")),
];

pub fn robustness(a: RobustnessArgs) -> CliResult {
    let settings = Settings::resolve(
        ROBUSTNESS_KEYS,
        a.config.as_deref(),
        vec![
            ("model", p(&a.model)),
            ("ref", p(&a.reference)),
            ("data", p(&a.data)),
            ("out", p(&a.out)),
            ("seed", s(a.seed)),
            ("with_background", on(a.with_background)),
        ],
    )?;
    settings.log("robustness");
    let params = ModelParams::load(&settings.path("model")?)?;
    let reference = ModelParams::load(&settings.path("ref")?)?;
    let data = load_dataset(&settings.path("data")?)?;
    let table = robustness_eval(&params, &reference, &data, settings.get("seed")?, settings.flag("with_background")?)?;
    write_artifacts(&settings.path("out")?, "robustness", "robustness", &settings, &table.to_json()?, &table.to_csv()?)?;
    for row in &table.rows {
        println!("{:<12} CE {:.4}", row.kind, row.ce);
    }
    println!("mCE {:.4}", table.mce);
    Ok(())
}

const CORRELATION_KEYS: &[Key] = &[
    ("model", None),
    ("data", None),
    ("out", None),
    ("samples_per_class", Some("20")),
];

pub fn correlation(a: CorrelationArgs) -> CliResult {
    let settings = Settings::resolve(
        CORRELATION_KEYS,
        a.config.as_deref(),
        vec![
            ("model", p(&a.model)),
            ("data", p(&a.data)),
            ("out", p(&a.out)),
            ("samples_per_class", s(a.samples_per_class)),
        ],
    )?;
    settings.log("correlation");
    let params = ModelParams::load(&settings.path("model")?)?;
    let data = load_dataset(&settings.path("data")?)?;
    let matrix = class_correlation(&params, &data, settings.get("samples_per_class")?)?;
    write_artifacts(&settings.path("out")?, "correlation", "correlation", &settings, &matrix.to_json()?, &matrix.to_csv()?)?;
    let n = matrix.n();
    let diag = (0..n).map(|i| matrix.get(i, i)).sum::<f64>() / n as f64;
    let off = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| matrix.get(i, j))
        .sum::<f64>()
        / (n * (n - 1)).max(1) as f64;
    println!("mean insignificance: diagonal {diag:.4}, off-diagonal {off:.4}");
    Ok(())
}
