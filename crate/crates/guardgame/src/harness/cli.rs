//! Implementations behind the `guardgame` binary's subcommands. The
//! binary itself only parses arguments and maps [`CliError`] to an exit
//! code; everything observable happens here, which keeps the commands
//! testable in-process.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dist::RegularityParams;
use crate::error::Error;
use crate::game::{iterate_to_fixed_point, lipschitz_bounds, GameDescription};
use crate::harness::{
    build_candidate_catalog, confidence_histogram, eval_f1, parse_corpus_jsonl, reports_to_csv,
    synth_corpus, write_corpus_jsonl, ExperimentConfig, FieldError,
};
use crate::learners::{CandidateCatalog, CategorySet, GeneratorPolicy, MultiLabelClassifier};
use crate::pipeline::{run_training, SeedSet, TrainingInputs};

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Machine-readable failure record, printed as one JSON line on stderr.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub error: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<FieldError>,
}

/// A failed command: what to print and how to exit.
#[derive(Debug)]
pub struct CliError {
    pub exit_code: i32,
    pub record: ErrorRecord,
}

impl CliError {
    pub fn config(error: impl std::fmt::Display, fields: Vec<FieldError>) -> Self {
        Self {
            exit_code: EXIT_CONFIG,
            record: ErrorRecord {
                kind: "config".into(),
                error: error.to_string(),
                fields,
            },
        }
    }

    pub fn runtime(error: impl std::fmt::Display) -> Self {
        Self {
            exit_code: EXIT_RUNTIME,
            record: ErrorRecord {
                kind: "runtime".into(),
                error: error.to_string(),
                fields: vec![],
            },
        }
    }
}

impl From<Error> for CliError {
    fn from(error: Error) -> Self {
        CliError::runtime(error)
    }
}

type CliResult = std::result::Result<(), CliError>;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> std::result::Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display()), vec![]))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("malformed {}: {e}", path.display()), vec![]))
}

fn write_output(out_dir: &Path, name: &str, contents: &str) -> CliResult {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::runtime(e.to_string()))?;
    std::fs::write(out_dir.join(name), contents).map_err(|e| CliError::runtime(e.to_string()))
}

/// Wall-clock metadata lives only here so every other output file is
/// byte-identical across reruns.
fn write_run_meta(out_dir: &Path, command: &str, inputs: &[String]) -> CliResult {
    #[derive(Serialize)]
    struct RunMeta<'a> {
        command: &'a str,
        inputs: &'a [String],
        timestamp_unix: u64,
    }
    let timestamp_unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = RunMeta {
        command,
        inputs,
        timestamp_unix,
    };
    write_output(
        out_dir,
        "run_meta.json",
        &format!("{}\n", serde_json::to_string_pretty(&meta).unwrap()),
    )
}

/// `fixed-point <game.json>`: iterate the best-response map and emit a
/// trajectory summary plus a per-iteration residual/ratio CSV.
pub fn cmd_fixed_point(game_path: &Path, out_dir: &Path) -> CliResult {
    let description: GameDescription = read_json(game_path)?;
    let instance = description
        .build()
        .map_err(|e| CliError::config(e, vec![]))?;
    let trajectory = iterate_to_fixed_point(
        instance.initial,
        &instance.rho,
        &instance.p_ref,
        &instance.params,
        instance.tol,
        instance.max_iters,
    )?;
    let bounds = lipschitz_bounds(&instance.params, instance.rho.x_size());

    #[derive(Serialize)]
    struct TrajectorySummary<'a> {
        converged: bool,
        iterations: usize,
        final_successive_residual: f64,
        lipschitz: &'a crate::game::LipschitzReport,
        final_state: &'a crate::game::GameState,
    }
    let summary = TrajectorySummary {
        converged: trajectory.converged,
        iterations: trajectory.iterations(),
        final_successive_residual: trajectory.final_successive_residual(),
        lipschitz: &bounds,
        final_state: trajectory.final_state(),
    };
    write_output(
        out_dir,
        "trajectory_summary.json",
        &format!("{}\n", serde_json::to_string_pretty(&summary).unwrap()),
    )?;

    let mut csv = String::from("iteration,residual_to_final,successive_residual,even_ratio,odd_ratio\n");
    for (i, &residual) in trajectory.residuals.iter().enumerate() {
        let successive = if i == 0 {
            String::new()
        } else {
            trajectory.successive_residuals[i - 1].to_string()
        };
        let (mut even, mut odd) = (String::new(), String::new());
        if i >= 2 && trajectory.residuals[i - 2] > 0.0 {
            let ratio = (residual / trajectory.residuals[i - 2]).to_string();
            if i % 2 == 0 {
                even = ratio;
            } else {
                odd = ratio;
            }
        }
        csv.push_str(&format!("{i},{residual},{successive},{even},{odd}\n"));
    }
    write_output(out_dir, "residuals.csv", &csv)?;
    write_run_meta(out_dir, "fixed-point", &[game_path.display().to_string()])?;
    println!(
        "fixed-point: converged={} iterations={} final_residual={:e}",
        trajectory.converged,
        trajectory.iterations(),
        trajectory.final_successive_residual()
    );
    Ok(())
}

/// Input of `bounds`: the regularity parameters plus the seed-space size.
#[derive(Debug, Serialize, Deserialize)]
struct BoundsRequest {
    beta: f64,
    gamma: f64,
    delta: f64,
    alpha: f64,
    x_size: usize,
}

/// `bounds <params.json>`: evaluate the Lipschitz constants and the
/// contraction verdict.
pub fn cmd_bounds(params_path: &Path, out_dir: &Path) -> CliResult {
    let request: BoundsRequest = read_json(params_path)?;
    let params = RegularityParams::new(request.beta, request.gamma, request.delta, request.alpha)
        .map_err(|e| CliError::config(e, vec![]))?;
    if request.x_size == 0 {
        return Err(CliError::config(
            "x_size must be positive",
            vec![FieldError {
                field: "x_size".into(),
                message: "must be positive".into(),
            }],
        ));
    }
    let report = lipschitz_bounds(&params, request.x_size);
    let json = format!("{}\n", serde_json::to_string_pretty(&report).unwrap());
    write_output(out_dir, "bounds.json", &json)?;
    write_run_meta(out_dir, "bounds", &[params_path.display().to_string()])?;
    print!("{json}");
    Ok(())
}

/// On-disk classifier model.
#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct ClassifierModelFile {
    pub categories: CategorySet,
    pub alphabet_size: usize,
    pub model: MultiLabelClassifier,
}

/// On-disk generator model: the candidate catalog plus aligned logits.
#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct GeneratorModelFile {
    pub languages: Vec<String>,
    pub catalog: CandidateCatalog,
    pub policy: GeneratorPolicy,
}

fn run_one_training(
    config: &ExperimentConfig,
    config_path: &Path,
    out_dir: &Path,
) -> CliResult {
    let corpus = synth_corpus(&config.corpus, config.seed)?;
    let categories = CategorySet::default_taxonomy();
    let train_jsonl = write_corpus_jsonl(
        &corpus.train,
        &config.corpus.languages,
        &categories,
        config.corpus.alphabet_size,
    )?;
    let test_jsonl = write_corpus_jsonl(
        &corpus.test,
        &config.corpus.languages,
        &categories,
        config.corpus.alphabet_size,
    )?;
    let seeds = SeedSet::ingest(corpus.train.clone())?;
    let catalog = build_candidate_catalog(
        &seeds,
        &config.corpus,
        config.pipeline.filter.max_length_delta,
        config.seed,
    )?;
    let inputs = TrainingInputs {
        seeds: &seeds,
        catalog: &catalog,
        eval_set: &corpus.test,
        language_names: &config.corpus.languages,
        alphabet_size: config.corpus.alphabet_size,
        config: &config.pipeline,
    };
    let run = run_training(&inputs, config.seed)?;

    let mut reports_jsonl = String::new();
    for report in &run.reports {
        reports_jsonl.push_str(&serde_json::to_string(report).unwrap());
        reports_jsonl.push('\n');
    }
    let classifier_file = ClassifierModelFile {
        categories,
        alphabet_size: config.corpus.alphabet_size,
        model: run.classifier,
    };
    let generator_file = GeneratorModelFile {
        languages: config.corpus.languages.clone(),
        catalog,
        policy: run.generator,
    };

    write_output(out_dir, "corpus_train.jsonl", &train_jsonl)?;
    write_output(out_dir, "corpus_test.jsonl", &test_jsonl)?;
    write_output(out_dir, "reports.jsonl", &reports_jsonl)?;
    write_output(
        out_dir,
        "reports.csv",
        &reports_to_csv(&run.reports, &config.corpus.languages),
    )?;
    write_output(
        out_dir,
        "classifier_final.json",
        &format!("{}\n", serde_json::to_string_pretty(&classifier_file).unwrap()),
    )?;
    write_output(
        out_dir,
        "generator_final.json",
        &format!("{}\n", serde_json::to_string_pretty(&generator_file).unwrap()),
    )?;
    write_output(
        out_dir,
        "experiment_resolved.json",
        &format!("{}\n", serde_json::to_string_pretty(config).unwrap()),
    )?;
    write_run_meta(out_dir, "train", &[config_path.display().to_string()])?;

    let last = run.reports.last().expect("at least the baseline report");
    println!(
        "train[{}]: iterations={} dataset={} f1_overall={:.4}",
        config_path.display(),
        last.iteration,
        last.dataset_size,
        last.f1_overall
    );
    Ok(())
}

fn load_experiment(
    path: &Path,
    seed_override: Option<u64>,
    out_dir_override: Option<&Path>,
) -> std::result::Result<(ExperimentConfig, PathBuf), CliError> {
    let mut config: ExperimentConfig = read_json(path)?;
    if let Some(seed) = seed_override {
        config.seed = seed;
    }
    if let Some(dir) = out_dir_override {
        config.out_dir = dir.display().to_string();
    }
    let errors = config.validate();
    if !errors.is_empty() {
        return Err(CliError::config(
            format!("invalid experiment config {}", path.display()),
            errors,
        ));
    }
    let out_dir = PathBuf::from(&config.out_dir);
    Ok((config, out_dir))
}

/// `train <experiment.json>...`: the full loop per config, optionally
/// fanned out over threads with `--jobs`. Each experiment is fully
/// isolated in its own output directory.
pub fn cmd_train(
    config_paths: &[PathBuf],
    seed_override: Option<u64>,
    out_dir_override: Option<&Path>,
    jobs: usize,
) -> CliResult {
    if config_paths.is_empty() {
        return Err(CliError::config("train needs at least one config", vec![]));
    }
    if config_paths.len() > 1 && out_dir_override.is_some() {
        return Err(CliError::config(
            "--out-dir cannot apply to multiple configs at once",
            vec![],
        ));
    }
    let mut prepared = Vec::new();
    for path in config_paths {
        prepared.push((path.clone(), load_experiment(path, seed_override, out_dir_override)?));
    }
    let jobs = jobs.max(1);
    let queue = std::sync::Mutex::new(prepared.into_iter());
    let failures: std::sync::Mutex<Vec<CliError>> = std::sync::Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let next = queue.lock().unwrap().next();
                match next {
                    Some((path, (config, out_dir))) => {
                        if let Err(error) = run_one_training(&config, &path, &out_dir) {
                            failures.lock().unwrap().push(error);
                        }
                    }
                    None => break,
                }
            });
        }
    });
    match failures.into_inner().unwrap().into_iter().next() {
        Some(error) => Err(error),
        None => Ok(()),
    }
}

/// `eval <model.json> <corpus.jsonl>`: F1 per slice plus the
/// error-confidence histogram CSV.
pub fn cmd_eval(model_path: &Path, corpus_path: &Path, out_dir: &Path) -> CliResult {
    let model_file: ClassifierModelFile = read_json(model_path)?;
    let text = std::fs::read_to_string(corpus_path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", corpus_path.display()), vec![]))?;
    let (header, examples) =
        parse_corpus_jsonl(&text).map_err(|e| CliError::config(e, vec![]))?;
    if header.alphabet_size != model_file.alphabet_size {
        return Err(CliError::config(
            format!(
                "corpus alphabet {} does not match model alphabet {}",
                header.alphabet_size, model_file.alphabet_size
            ),
            vec![],
        ));
    }
    let scores = eval_f1(
        &model_file.model,
        &examples,
        header.languages.len(),
        header.alphabet_size,
    )?;
    let histogram =
        confidence_histogram(&model_file.model, &examples, 20, header.alphabet_size)?;

    #[derive(Serialize)]
    struct EvalReport<'a> {
        examples: usize,
        languages: &'a [String],
        f1_overall: f64,
        f1_per_language: &'a [f64],
        false_positives: u64,
        false_negatives: u64,
    }
    let report = EvalReport {
        examples: examples.len(),
        languages: &header.languages,
        f1_overall: scores.overall,
        f1_per_language: &scores.per_language,
        false_positives: histogram.false_positive_total(),
        false_negatives: histogram.false_negative_total(),
    };
    let json = format!("{}\n", serde_json::to_string_pretty(&report).unwrap());
    write_output(out_dir, "eval_report.json", &json)?;
    write_output(out_dir, "confidence_histogram.csv", &histogram.to_csv())?;
    write_run_meta(
        out_dir,
        "eval",
        &[
            model_path.display().to_string(),
            corpus_path.display().to_string(),
        ],
    )?;
    print!("{json}");
    Ok(())
}

/// `synth <config.json>`: generate and write the two corpus splits.
pub fn cmd_synth(
    config_path: &Path,
    seed_override: Option<u64>,
    out_dir_override: Option<&Path>,
) -> CliResult {
    let (config, out_dir) = load_experiment(config_path, seed_override, out_dir_override)?;
    let corpus = synth_corpus(&config.corpus, config.seed)?;
    let categories = CategorySet::default_taxonomy();
    write_output(
        &out_dir,
        "corpus_train.jsonl",
        &write_corpus_jsonl(
            &corpus.train,
            &config.corpus.languages,
            &categories,
            config.corpus.alphabet_size,
        )?,
    )?;
    write_output(
        &out_dir,
        "corpus_test.jsonl",
        &write_corpus_jsonl(
            &corpus.test,
            &config.corpus.languages,
            &categories,
            config.corpus.alphabet_size,
        )?,
    )?;
    write_run_meta(&out_dir, "synth", &[config_path.display().to_string()])?;
    println!(
        "synth: {} train + {} test examples under {}",
        corpus.train.len(),
        corpus.test.len(),
        out_dir.display()
    );
    Ok(())
}
