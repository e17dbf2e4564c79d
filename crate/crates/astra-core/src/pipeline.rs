//! The end-to-end driver: prompt file in, retrieval + structural context +
//! composition, inference, streamed output, and (for edit intents) a
//! conflict-marker proposal on the target file.
//!
//! Every run writes its artifacts — composed prompt, raw response,
//! extracted code, and any proposal — to a fresh run directory so sessions
//! are reproducible and comparable.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{ConfigError, PipelineConfig};
use crate::corpus::{load_index, CorpusError};
use crate::edit::{self, Decision, EditError, EditProposal};
use crate::embedding::{embed_text, embedder_id, EmbeddingError};
use crate::eval::EvalError;
use crate::model::{extract_code_block, generate, GenerationResult, ModelError};
use crate::prompt::{
    classify_intent, compose_prompt, fit_to_budget, Intent, IntentKind, PromptError,
    DEFAULT_GENERAL_INSTRUCTIONS,
};
use crate::retrieval::{rag_context_blocks, retrieve_top_k, RetrievalError};
use crate::structure::{
    extract_structure, find_function_range, format_ast_context, Focus, StructuralReport,
    StructureError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("prompt file {0} is blank")]
    BlankPrompt(PathBuf),
    #[error("index was built with embedder {index}, configured embedder is {config}")]
    EmbedderMismatch { index: String, config: String },
    #[error("corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("embedding: {0}")]
    Embedding(#[from] EmbeddingError),
    #[error("retrieval: {0}")]
    Retrieval(#[from] RetrievalError),
    #[error("structure: {0}")]
    Structure(#[from] StructureError),
    #[error("prompt: {0}")]
    Prompt(#[from] PromptError),
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("edit: {0}")]
    Edit(#[from] EditError),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("eval: {0}")]
    Eval(#[from] EvalError),
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// How to dispose of an edit proposal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApplyMode {
    /// Ask on the terminal: accept / reject / skip.
    Interactive,
    /// Apply and accept without asking.
    Yes,
    /// Record the proposal but leave the file untouched.
    No,
}

/// Everything a run produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub run_dir: PathBuf,
    pub intent: Intent,
    pub generation: GenerationResult,
    pub code: String,
    pub proposal: Option<EditProposal>,
    /// True when the target file was modified (markers applied or resolved).
    pub applied: bool,
    pub warnings: Vec<String>,
}

/// The composed prompt plus everything learned while building it.
pub struct ComposedRun {
    pub composed: String,
    pub intent: Intent,
    pub focus: Option<Focus>,
    pub report: Option<StructuralReport>,
    pub warnings: Vec<String>,
}

/// Builds the full prompt for a run: retrieval context, structural context
/// (with focus inferred from the prompt's mentions), instructions, and the
/// user prompt, fitted to the configured budget.
///
/// Both `astra prompt` and `astra run` go through here, so the printed
/// prompt is byte-identical to the one sent to the model.
pub fn compose_for_run(
    prompt_file: &Path,
    target_file: Option<&Path>,
    config: &PipelineConfig,
) -> Result<ComposedRun, PipelineError> {
    let user_prompt = std::fs::read_to_string(prompt_file).map_err(io_err(prompt_file))?;
    if user_prompt.trim().is_empty() {
        return Err(PipelineError::BlankPrompt(prompt_file.to_path_buf()));
    }
    let user_prompt = user_prompt.trim_end().to_string();

    let index = load_index(&config.index_path)?;
    let configured_id = embedder_id(&config.embedder);
    if index.embedder_id != configured_id {
        return Err(PipelineError::EmbedderMismatch {
            index: index.embedder_id.clone(),
            config: configured_id,
        });
    }

    let mut warnings = Vec::new();

    // Structural context for the target file, when given.
    let report: Option<StructuralReport> = match target_file {
        Some(path) => {
            let source = std::fs::read_to_string(path).map_err(io_err(path))?;
            let report = extract_structure(&source, path);
            warnings.extend(report.warnings.iter().cloned());
            Some(report)
        }
        None => None,
    };
    let (known_classes, known_functions) = match &report {
        Some(report) => {
            let classes: Vec<String> = report.classes.iter().map(|c| c.name.clone()).collect();
            let mut functions: Vec<String> = report
                .classes
                .iter()
                .flat_map(|c| c.methods.iter().map(|m| m.name.clone()))
                .chain(report.free_functions.iter().map(|f| f.name.clone()))
                .collect();
            functions.sort();
            functions.dedup();
            (classes, functions)
        }
        None => (Vec::new(), Vec::new()),
    };

    let intent = classify_intent(&user_prompt, &known_classes, &known_functions)?;

    // Retrieval.
    let query = embed_text(&user_prompt, &config.embedder)?;
    let mut results = retrieve_top_k(&index, &query, config.top_k)?;
    if let Some(min_score) = config.min_score {
        results.retain(|r| r.score >= min_score);
    }
    let rag_blocks = rag_context_blocks(&index, &results)?;

    // Structural context rendering, full and focus-reduced.
    let focus = focus_from_intent(&intent, report.as_ref());
    let (ast_full, ast_focused) = match &report {
        Some(report) => {
            let full = format_ast_context(report, focus.as_ref())?;
            let focused = focus
                .as_ref()
                .map(|f| focused_report(report, f))
                .map(|reduced| format_ast_context(&reduced, focus.as_ref()))
                .transpose()?;
            (full, focused)
        }
        None => (String::new(), None),
    };

    let general = match &config.general_instructions_path {
        Some(path) => std::fs::read_to_string(path).map_err(io_err(path))?,
        None => DEFAULT_GENERAL_INSTRUCTIONS.to_string(),
    };

    let bundle = fit_to_budget(
        &general,
        rag_blocks,
        &ast_full,
        ast_focused.as_deref(),
        &user_prompt,
        config.char_budget,
    )?;
    let composed = compose_prompt(&bundle)?;
    Ok(ComposedRun {
        composed,
        intent,
        focus,
        report,
        warnings,
    })
}

/// Runs the full workflow. Streaming fragments go to `on_chunk` in arrival
/// order; the caller decides how to show them.
pub fn run_pipeline(
    prompt_file: &Path,
    target_file: Option<&Path>,
    config: &PipelineConfig,
    apply_mode: ApplyMode,
    on_chunk: &mut dyn FnMut(&str),
) -> Result<RunOutcome, PipelineError> {
    let ComposedRun {
        composed,
        intent,
        focus,
        report,
        mut warnings,
    } = compose_for_run(prompt_file, target_file, config)?;

    // Run directory and artifacts.
    let run_dir = create_run_dir(&composed)?;
    write_artifact(&run_dir, "prompt.txt", &composed)?;

    let generation = generate(&composed, &config.model, on_chunk)?;
    write_artifact(&run_dir, "response.txt", &generation.full_text)?;

    let code = extract_code_block(&generation.full_text)?;
    write_artifact(&run_dir, "code.txt", &code)?;

    // Edit path: build and optionally apply a proposal.
    let mut proposal = None;
    let mut applied = false;
    if intent.kind == IntentKind::Edit {
        if let (Some(target), Some(report)) = (target_file, report.as_ref()) {
            match build_proposal(target, report, &focus, &code, &generation.model_name) {
                Ok(p) => {
                    write_artifact(
                        &run_dir,
                        "proposal.json",
                        &serde_json::to_string_pretty(&p).expect("proposal serializes"),
                    )?;
                    applied = dispose_proposal(&p, apply_mode, &mut warnings)?;
                    proposal = Some(p);
                }
                Err(e) => {
                    warnings.push(format!("no edit proposal: {e}"));
                }
            }
        }
    }

    Ok(RunOutcome {
        run_dir,
        intent,
        generation,
        code,
        proposal,
        applied,
        warnings,
    })
}

/// Focus = the first mentioned function, scoped by the first mentioned
/// class when present; falls back to the mentioned class's sole method.
fn focus_from_intent(intent: &Intent, report: Option<&StructuralReport>) -> Option<Focus> {
    let report = report?;
    if let Some(fn_name) = intent.mentioned_functions.first() {
        return Some(Focus {
            class_name: intent.mentioned_classes.first().cloned(),
            fn_name: fn_name.clone(),
        });
    }
    let class_name = intent.mentioned_classes.first()?;
    let class = report.classes.iter().find(|c| c.name == *class_name)?;
    let definitions: Vec<_> = class.methods.iter().filter(|m| m.is_definition).collect();
    if definitions.len() == 1 {
        return Some(Focus {
            class_name: Some(class_name.clone()),
            fn_name: definitions[0].name.clone(),
        });
    }
    None
}

/// A copy of the report reduced to the classes/functions the focus names.
fn focused_report(report: &StructuralReport, focus: &Focus) -> StructuralReport {
    let keep_class = |name: &str| match &focus.class_name {
        Some(class) => name == class,
        None => report
            .classes
            .iter()
            .find(|c| c.name == name)
            .is_some_and(|c| c.methods.iter().any(|m| m.name == focus.fn_name)),
    };
    StructuralReport {
        file: report.file.clone(),
        classes: report
            .classes
            .iter()
            .filter(|c| keep_class(&c.name))
            .cloned()
            .collect(),
        free_functions: report
            .free_functions
            .iter()
            .filter(|f| f.name == focus.fn_name)
            .cloned()
            .collect(),
        warnings: Vec::new(),
    }
}

fn build_proposal(
    target: &Path,
    report: &StructuralReport,
    focus: &Option<Focus>,
    code: &str,
    model_name: &str,
) -> Result<EditProposal, PipelineError> {
    let focus = focus.as_ref().ok_or(StructureError::NotFound {
        name: "(no function mentioned in prompt)".to_string(),
    })?;
    let range = find_function_range(report, focus.class_name.as_deref(), &focus.fn_name)?;
    let file_text = std::fs::read_to_string(target).map_err(io_err(target))?;
    let lines: Vec<&str> = file_text.split('\n').collect();
    if range.end_line > lines.len() {
        return Err(EditError::RangeOutOfBounds {
            start: range.start_line,
            end: range.end_line,
            lines: lines.len(),
        }
        .into());
    }
    let original: String = lines[range.start_line - 1..range.end_line]
        .iter()
        .map(|l| format!("{l}\n"))
        .collect();
    Ok(EditProposal {
        file: target.to_path_buf(),
        range,
        original_text: original,
        replacement_text: code.to_string(),
        marker_label: model_name.to_string(),
    })
}

/// Applies the proposal according to the mode. Returns whether the target
/// file changed.
fn dispose_proposal(
    proposal: &EditProposal,
    mode: ApplyMode,
    warnings: &mut Vec<String>,
) -> Result<bool, PipelineError> {
    match mode {
        ApplyMode::No => Ok(false),
        ApplyMode::Yes => {
            apply_and_resolve(proposal, Decision::Accept, warnings)?;
            Ok(true)
        }
        ApplyMode::Interactive => {
            eprint!("[a]ccept / [r]eject / [s]kip? ");
            std::io::stderr().flush().ok();
            let mut answer = String::new();
            std::io::stdin().read_line(&mut answer).ok();
            match answer.trim().chars().next() {
                Some('a') | Some('A') => {
                    apply_and_resolve(proposal, Decision::Accept, warnings)?;
                    Ok(true)
                }
                Some('s') | Some('S') => {
                    // Leave the markers in the file for manual resolution.
                    let file_text =
                        std::fs::read_to_string(&proposal.file).map_err(io_err(&proposal.file))?;
                    backup(&proposal.file, &file_text)?;
                    let marked = edit::apply_with_markers(&file_text, proposal)?;
                    std::fs::write(&proposal.file, marked).map_err(io_err(&proposal.file))?;
                    Ok(true)
                }
                _ => Ok(false),
            }
        }
    }
}

fn apply_and_resolve(
    proposal: &EditProposal,
    decision: Decision,
    warnings: &mut Vec<String>,
) -> Result<(), PipelineError> {
    let file_text = std::fs::read_to_string(&proposal.file).map_err(io_err(&proposal.file))?;
    backup(&proposal.file, &file_text)?;
    let marked = edit::apply_with_markers(&file_text, proposal)?;
    let resolved = edit::resolve(&marked, decision)?;
    warnings.extend(edit::verify_braces(&resolved, proposal.range));
    std::fs::write(&proposal.file, resolved).map_err(io_err(&proposal.file))?;
    remove_backup(&proposal.file);
    Ok(())
}

fn backup_path(file: &Path) -> PathBuf {
    let mut name = file.as_os_str().to_os_string();
    name.push(".astra.bak");
    PathBuf::from(name)
}

fn backup(file: &Path, contents: &str) -> Result<(), PipelineError> {
    let path = backup_path(file);
    if !path.exists() {
        std::fs::write(&path, contents).map_err(io_err(&path))?;
    }
    Ok(())
}

pub fn remove_backup(file: &Path) {
    let _ = std::fs::remove_file(backup_path(file));
}

/// `.astra/runs/<unix-seconds>-<prompt-digest-prefix>[-<n>]/`
fn create_run_dir(composed_prompt: &str) -> Result<PathBuf, PipelineError> {
    let digest = crate::model::prompt_digest(composed_prompt);
    let seconds = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let base = PathBuf::from(".astra").join("runs");
    let mut candidate = base.join(format!("{seconds}-{}", &digest[..8.min(digest.len())]));
    let mut counter = 2;
    while candidate.exists() {
        candidate = base.join(format!(
            "{seconds}-{}-{counter}",
            &digest[..8.min(digest.len())]
        ));
        counter += 1;
    }
    std::fs::create_dir_all(&candidate).map_err(io_err(&candidate))?;
    Ok(candidate)
}

fn write_artifact(run_dir: &Path, name: &str, contents: &str) -> Result<(), PipelineError> {
    let path = run_dir.join(name);
    std::fs::write(&path, contents).map_err(io_err(&path))
}
