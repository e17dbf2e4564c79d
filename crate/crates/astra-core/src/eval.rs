//! Scores generated code against verified references using
//! identifier-normalized cosine similarity, and renders baseline-vs-augmented
//! comparison tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{cosine_similarity, embed_text, embedder_id, EmbedderConfig, EmbeddingError};
use crate::model::extract_code_block;
use crate::structure::{normalize_identifiers, StructureError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{side} code is not a function definition")]
    NotAFunction { side: &'static str },
    #[error("missing generation files:\n{}", .0.join("\n"))]
    MissingGeneration(Vec<String>),
    #[error("failed to read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("bad task manifest {path}: {source}")]
    BadManifest {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// One benchmark task: a prompt, a verified reference implementation, and
/// identifiers the normalizer must keep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkTask {
    pub id: String,
    pub description: String,
    pub prompt_file: PathBuf,
    pub reference_file: PathBuf,
    #[serde(default)]
    pub preserve_identifiers: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Baseline,
    Augmented,
}

impl EvalMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            EvalMode::Baseline => "baseline",
            EvalMode::Augmented => "augmented",
        }
    }
}

/// One scored (task, model, mode) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityRecord {
    pub task_id: String,
    pub model_name: String,
    pub mode: EvalMode,
    pub score: f64,
}

/// Normalize both sides, embed them, and return the cosine similarity.
pub fn score_pair(
    generated: &str,
    reference: &str,
    preserve: &[String],
    embedder: &EmbedderConfig,
) -> Result<f64, EvalError> {
    let norm_generated = normalize_identifiers(generated, preserve)
        .map_err(|_| EvalError::NotAFunction { side: "generated" })?;
    let norm_reference = normalize_identifiers(reference, preserve)
        .map_err(|_| EvalError::NotAFunction { side: "reference" })?;
    let a = embed_text(&norm_generated, embedder)?;
    let b = embed_text(&norm_reference, embedder)?;
    Ok(cosine_similarity(&a, &b)?)
}

/// Key into the generations map.
pub type GenerationKey = (String, String, EvalMode); // (task_id, model, mode)

/// Scores every (task, model, mode) present in `generations`.
///
/// Generated files are passed through [`extract_code_block`] first since
/// model responses may carry prose. All missing files are listed before
/// failing. Record order is task order, then model name, then baseline
/// before augmented.
pub fn run_benchmark(
    tasks: &[BenchmarkTask],
    generations: &BTreeMap<GenerationKey, PathBuf>,
    embedder: &EmbedderConfig,
) -> Result<Vec<SimilarityRecord>, EvalError> {
    let missing: Vec<String> = generations
        .iter()
        .filter(|(_, path)| !path.exists())
        .map(|((task, model, mode), path)| {
            format!("{task}/{model}/{} -> {}", mode.as_str(), path.display())
        })
        .collect();
    if !missing.is_empty() {
        return Err(EvalError::MissingGeneration(missing));
    }

    let mut records = Vec::new();
    for task in tasks {
        let reference =
            std::fs::read_to_string(&task.reference_file).map_err(|source| EvalError::Unreadable {
                path: task.reference_file.clone(),
                source,
            })?;
        let mut keys: Vec<&GenerationKey> = generations
            .keys()
            .filter(|(task_id, _, _)| *task_id == task.id)
            .collect();
        keys.sort();
        for key in keys {
            let (_, model, mode) = key;
            let path = &generations[key];
            let raw = std::fs::read_to_string(path).map_err(|source| EvalError::Unreadable {
                path: path.clone(),
                source,
            })?;
            let code = extract_code_block(&raw).unwrap_or(raw);
            let score = score_pair(&code, &reference, &task.preserve_identifiers, embedder)?;
            records.push(SimilarityRecord {
                task_id: task.id.clone(),
                model_name: model.clone(),
                mode: *mode,
                score,
            });
        }
    }
    Ok(records)
}

/// Scans a generations directory laid out as
/// `<task_id>/<model_name>/<mode>.txt`.
pub fn scan_generations_dir(
    dir: &Path,
    tasks: &[BenchmarkTask],
) -> Result<BTreeMap<GenerationKey, PathBuf>, EvalError> {
    let mut map = BTreeMap::new();
    for task in tasks {
        let task_dir = dir.join(&task.id);
        if !task_dir.is_dir() {
            continue;
        }
        let entries = std::fs::read_dir(&task_dir).map_err(|source| EvalError::Unreadable {
            path: task_dir.clone(),
            source,
        })?;
        for entry in entries.flatten() {
            let model_dir = entry.path();
            if !model_dir.is_dir() {
                continue;
            }
            let model = entry.file_name().to_string_lossy().to_string();
            for (mode, file) in [
                (EvalMode::Baseline, "baseline.txt"),
                (EvalMode::Augmented, "augmented.txt"),
            ] {
                let path = model_dir.join(file);
                if path.exists() {
                    map.insert((task.id.clone(), model.clone(), mode), path);
                }
            }
        }
    }
    Ok(map)
}

/// Reads the JSON task manifest (an array of [`BenchmarkTask`]). Relative
/// paths are resolved against the manifest's directory.
pub fn load_manifest(path: &Path) -> Result<Vec<BenchmarkTask>, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|source| EvalError::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    let mut tasks: Vec<BenchmarkTask> =
        serde_json::from_str(&text).map_err(|source| EvalError::BadManifest {
            path: path.to_path_buf(),
            source,
        })?;
    if let Some(base) = path.parent() {
        for task in &mut tasks {
            if task.prompt_file.is_relative() {
                task.prompt_file = base.join(&task.prompt_file);
            }
            if task.reference_file.is_relative() {
                task.reference_file = base.join(&task.reference_file);
            }
        }
    }
    Ok(tasks)
}

/// Renders one aligned plain-text table per mode: rows are tasks (in task
/// order), columns are `models`, cells show scores to two decimals, missing
/// cells show `—`.
pub fn render_table(
    records: &[SimilarityRecord],
    tasks: &[BenchmarkTask],
    models: &[String],
) -> String {
    let mut out = String::new();
    for (mode, title) in [
        (EvalMode::Baseline, "Baseline (user prompt only)"),
        (EvalMode::Augmented, "Augmented (user prompt + RAG + AST)"),
    ] {
        if !records.is_empty() && !records.iter().any(|r| r.mode == mode) {
            continue;
        }
        let task_width = tasks
            .iter()
            .map(|t| t.description.len())
            .chain(["Task".len()])
            .max()
            .unwrap_or(4);
        let col_widths: Vec<usize> = models.iter().map(|m| m.len().max(5)).collect();

        writeln!(out, "{title}").unwrap();
        write!(out, "{:<task_width$}", "Task").unwrap();
        for (model, width) in models.iter().zip(&col_widths) {
            write!(out, "  {model:>width$}").unwrap();
        }
        out.push('\n');
        let total = task_width + col_widths.iter().map(|w| w + 2).sum::<usize>();
        writeln!(out, "{}", "-".repeat(total)).unwrap();
        for task in tasks {
            write!(out, "{:<task_width$}", task.description).unwrap();
            for (model, width) in models.iter().zip(&col_widths) {
                let cell = records
                    .iter()
                    .find(|r| r.task_id == task.id && r.model_name == *model && r.mode == mode)
                    .map(|r| format!("{:.2}", r.score))
                    .unwrap_or_else(|| "\u{2014}".to_string());
                write!(out, "  {cell:>width$}").unwrap();
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out.trim_end().to_string() + "\n"
}

/// Full-precision CSV of the records.
pub fn render_csv(records: &[SimilarityRecord], embedder: &EmbedderConfig) -> String {
    let mut out = String::from("task_id,model_name,mode,score,embedder_id\n");
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.task_id,
            r.model_name,
            r.mode.as_str(),
            r.score,
            embedder_id(embedder)
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det() -> EmbedderConfig {
        EmbedderConfig::deterministic(384)
    }

    const FN_A: &str = "double kernel(double dx) { double sum = 0.0; double term = dx * dx; sum += term; return sum; }";

    #[test]
    fn identical_functions_score_one() {
        let score = score_pair(FN_A, FN_A, &[], &det()).unwrap();
        assert!((score - 1.0).abs() < 1e-9);
    }

    #[test]
    fn consistently_renamed_locals_score_one() {
        let renamed = "double kernel(double dx) { double acc = 0.0; double sq = dx * dx; acc += sq; return acc; }";
        let score = score_pair(FN_A, renamed, &[], &det()).unwrap();
        assert!((score - 1.0).abs() < 1e-9, "score = {score}");
    }

    #[test]
    fn added_statement_lowers_score() {
        let longer = "double kernel(double dx) { double sum = 0.0; double term = dx * dx; sum += term; sum *= 2.0; return sum; }";
        let score = score_pair(FN_A, longer, &[], &det()).unwrap();
        assert!(score < 1.0);
        assert!(score > 0.5, "still structurally similar: {score}");
    }

    #[test]
    fn score_is_symmetric() {
        let other = "double kernel(double dx) { double a = dx + 1.0; return a; }";
        let ab = score_pair(FN_A, other, &[], &det()).unwrap();
        let ba = score_pair(other, FN_A, &[], &det()).unwrap();
        assert!((ab - ba).abs() < 1e-9);
    }

    #[test]
    fn non_function_is_rejected_with_side() {
        match score_pair("int x = 3;", FN_A, &[], &det()) {
            Err(EvalError::NotAFunction { side }) => assert_eq!(side, "generated"),
            other => panic!("unexpected: {other:?}"),
        }
        match score_pair(FN_A, "not code at all", &[], &det()) {
            Err(EvalError::NotAFunction { side }) => assert_eq!(side, "reference"),
            other => panic!("unexpected: {other:?}"),
        }
    }

    fn write(path: &Path, text: &str) {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, text).unwrap();
    }

    #[test]
    fn benchmark_cardinality_and_order() {
        let dir = tempfile::tempdir().unwrap();
        let reference = dir.path().join("ref.cpp");
        write(&reference, FN_A);
        let tasks = vec![BenchmarkTask {
            id: "t1".to_string(),
            description: "demo task".to_string(),
            prompt_file: dir.path().join("prompt.txt"),
            reference_file: reference,
            preserve_identifiers: vec![],
        }];
        let gen_base = dir.path().join("t1/model-x/baseline.txt");
        let gen_aug = dir.path().join("t1/model-x/augmented.txt");
        write(&gen_base, FN_A);
        write(&gen_aug, FN_A);
        let mut generations = BTreeMap::new();
        generations.insert(
            ("t1".to_string(), "model-x".to_string(), EvalMode::Baseline),
            gen_base,
        );
        generations.insert(
            ("t1".to_string(), "model-x".to_string(), EvalMode::Augmented),
            gen_aug,
        );
        let records = run_benchmark(&tasks, &generations, &det()).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].mode, EvalMode::Baseline);
        assert_eq!(records[1].mode, EvalMode::Augmented);
    }

    #[test]
    fn empty_generations_empty_records() {
        let records = run_benchmark(&[], &BTreeMap::new(), &det()).unwrap();
        assert!(records.is_empty());
    }

    #[test]
    fn missing_generation_lists_all_absent() {
        let mut generations = BTreeMap::new();
        generations.insert(
            ("t1".to_string(), "m".to_string(), EvalMode::Baseline),
            PathBuf::from("/nonexistent/a.txt"),
        );
        generations.insert(
            ("t1".to_string(), "m".to_string(), EvalMode::Augmented),
            PathBuf::from("/nonexistent/b.txt"),
        );
        match run_benchmark(&[], &generations, &det()) {
            Err(EvalError::MissingGeneration(missing)) => assert_eq!(missing.len(), 2),
            other => panic!("unexpected: {other:?}"),
        }
    }

    fn record(task: &str, model: &str, mode: EvalMode, score: f64) -> SimilarityRecord {
        SimilarityRecord {
            task_id: task.to_string(),
            model_name: model.to_string(),
            mode,
            score,
        }
    }

    #[test]
    fn table_renders_two_decimal_cells_and_dashes() {
        let tasks = vec![
            BenchmarkTask {
                id: "t1".to_string(),
                description: "loop conversion".to_string(),
                prompt_file: PathBuf::new(),
                reference_file: PathBuf::new(),
                preserve_identifiers: vec![],
            },
            BenchmarkTask {
                id: "t2".to_string(),
                description: "copy".to_string(),
                prompt_file: PathBuf::new(),
                reference_file: PathBuf::new(),
                preserve_identifiers: vec![],
            },
        ];
        let models = vec!["m1".to_string(), "m2".to_string()];
        let records = vec![
            record("t1", "m1", EvalMode::Baseline, 0.321),
            record("t1", "m2", EvalMode::Baseline, 0.99),
        ];
        let table = render_table(&records, &tasks, &models);
        let row = table.lines().find(|l| l.starts_with("loop")).unwrap();
        assert!(row.contains("0.32"));
        assert!(row.contains("0.99"));
        let copy_row = table.lines().find(|l| l.starts_with("copy")).unwrap();
        assert!(copy_row.contains("\u{2014}"));
    }

    #[test]
    fn empty_records_render_header_only() {
        let table = render_table(&[], &[], &["m".to_string()]);
        assert!(table.contains("Task"));
    }

    #[test]
    fn csv_has_full_precision() {
        let records = vec![record("t", "m", EvalMode::Baseline, 0.123456789012345)];
        let csv = render_csv(&records, &det());
        assert!(csv.contains("0.123456789012345"));
        assert!(csv.contains("det-bow-fnv1a-384"));
    }
}
