//! The `astra` command line: subcommands for each pipeline stage plus
//! `run` for the whole workflow.
//!
//! Exit codes: 0 success, 2 usage error (from argument parsing), 3
//! pipeline error.

use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{load_config, ConfigOverrides, PipelineConfig};
use crate::corpus::{index_corpus_dir, load_index, save_index, IndexOptions};
use crate::edit::{self, Decision, EditProposal};
use crate::embedding::embed_text;
use crate::eval::{load_manifest, render_csv, render_table, run_benchmark, scan_generations_dir};
use crate::model::{extract_code_block, generate};
use crate::pipeline::{compose_for_run, remove_backup, run_pipeline, ApplyMode, PipelineError};
use crate::retrieval::{rag_context_blocks, retrieve_top_k};
use crate::structure::{
    extract_structure, find_function_range, format_ast_context, load_compile_db, Focus,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PIPELINE_ERROR: i32 = 3;

#[derive(Parser)]
#[command(
    name = "astra",
    version,
    about = "Retrieval- and syntax-tree-augmented code generation for C++ codebases"
)]
pub struct Cli {
    /// Path to a TOML config file (default: .astra/config.toml when present)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Print the effective configuration and exit
    #[arg(long, global = true)]
    pub show_config: bool,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Args, Debug, Default, Clone)]
pub struct EndpointArgs {
    /// Model name to request from the endpoint
    #[arg(long)]
    pub model: Option<String>,

    /// Endpoint base URL
    #[arg(long)]
    pub endpoint: Option<String>,

    /// Endpoint kind: local | remote | replay
    #[arg(long, value_parser = parse_endpoint_kind)]
    pub endpoint_kind: Option<crate::model::EndpointKind>,

    /// Replay store directory (with --endpoint-kind replay)
    #[arg(long)]
    pub replay_dir: Option<PathBuf>,
}

fn parse_endpoint_kind(s: &str) -> Result<crate::model::EndpointKind, String> {
    match s {
        "local" | "local_runtime" => Ok(crate::model::EndpointKind::LocalRuntime),
        "remote" | "remote_api" => Ok(crate::model::EndpointKind::RemoteApi),
        "replay" => Ok(crate::model::EndpointKind::Replay),
        other => Err(format!(
            "unknown endpoint kind {other:?}; expected local, remote, or replay"
        )),
    }
}

#[derive(Subcommand)]
pub enum Command {
    /// Build a retrieval index from an annotated snippet corpus
    Index {
        /// Directory of metadata-annotated snippet files
        #[arg(long)]
        corpus: PathBuf,
        /// Output index file
        #[arg(long)]
        out: PathBuf,
        /// Keep the metadata comment header inside chunk text
        #[arg(long)]
        keep_header: bool,
    },
    /// Rank index chunks against a prompt
    Query {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        prompt_file: PathBuf,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        min_score: Option<f64>,
        /// Emit machine-readable JSON instead of rendered context
        #[arg(long)]
        json: bool,
    },
    /// Extract structural facts from a C++ source file
    Ast {
        #[arg(long)]
        file: PathBuf,
        /// compile_commands.json to enumerate translation units
        #[arg(long)]
        compile_db: Option<PathBuf>,
        /// Focus class
        #[arg(long = "class")]
        class_name: Option<String>,
        /// Focus function
        #[arg(long = "function")]
        function: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Compose the full prompt and print it
    Prompt {
        #[arg(long)]
        prompt_file: PathBuf,
        #[arg(long)]
        index: PathBuf,
        /// Target C++ source file for structural context
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Compose the prompt, send it to the model, and stream the response
    Generate {
        #[arg(long)]
        prompt_file: PathBuf,
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long)]
        top_k: Option<usize>,
        #[command(flatten)]
        endpoint: EndpointArgs,
    },
    /// Apply generated code to a function under conflict markers
    Apply {
        #[arg(long)]
        file: PathBuf,
        #[arg(long = "class")]
        class_name: Option<String>,
        #[arg(long = "function")]
        function: String,
        /// File holding the generated code (or raw model response)
        #[arg(long)]
        from: PathBuf,
        /// Marker label; defaults to the configured model name
        #[arg(long)]
        label: Option<String>,
    },
    /// Resolve the conflict markers in a file
    Resolve {
        #[arg(long)]
        file: PathBuf,
        #[arg(long, conflicts_with = "reject")]
        accept: bool,
        #[arg(long)]
        reject: bool,
    },
    /// Score generated code against references and render tables
    Eval {
        /// JSON array of benchmark tasks
        #[arg(long)]
        manifest: PathBuf,
        /// Directory laid out as <task>/<model>/<mode>.txt
        #[arg(long)]
        generations: PathBuf,
        /// Also write full-precision CSV here
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the full pipeline end to end
    Run {
        #[arg(long)]
        prompt_file: PathBuf,
        /// Target C++ source file (enables structural context and editing)
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        char_budget: Option<usize>,
        /// Apply and accept edit proposals without asking
        #[arg(long, conflicts_with = "no")]
        yes: bool,
        /// Record proposals but never touch the target file
        #[arg(long)]
        no: bool,
        #[command(flatten)]
        endpoint: EndpointArgs,
    },
}

/// Entry point used by the binary; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("astra: {e}");
            EXIT_PIPELINE_ERROR
        }
    }
}

fn overrides_from_endpoint(endpoint: &EndpointArgs) -> ConfigOverrides {
    ConfigOverrides {
        model_name: endpoint.model.clone(),
        endpoint: endpoint.endpoint.clone(),
        endpoint_kind: endpoint.endpoint_kind,
        replay_dir: endpoint.replay_dir.clone(),
        ..Default::default()
    }
}

fn effective_config(
    cli_config: Option<&PathBuf>,
    overrides: ConfigOverrides,
) -> Result<PipelineConfig, PipelineError> {
    Ok(load_config(cli_config.map(|p| p.as_path()), &overrides)?)
}

fn dispatch(cli: Cli) -> Result<(), PipelineError> {
    if cli.show_config {
        let config = effective_config(cli.config.as_ref(), ConfigOverrides::default())?;
        println!(
            "{}",
            toml::to_string_pretty(&config).unwrap_or_else(|_| format!("{config:#?}"))
        );
        return Ok(());
    }
    let Some(command) = cli.command else {
        // No subcommand and no --show-config: usage error.
        let mut cmd = <Cli as clap::CommandFactory>::command();
        cmd.print_help().ok();
        std::process::exit(2);
    };

    match command {
        Command::Index {
            corpus,
            out,
            keep_header,
        } => {
            let config = effective_config(cli.config.as_ref(), ConfigOverrides::default())?;
            let (index, warnings) = index_corpus_dir(
                &corpus,
                &config.embedder,
                IndexOptions { keep_header },
            )?;
            for warning in &warnings {
                eprintln!("warning: {warning}");
            }
            save_index(&index, &out)?;
            println!(
                "indexed {} chunks (dimension {}) -> {}",
                index.chunks.len(),
                index.dimension,
                out.display()
            );
            Ok(())
        }
        Command::Query {
            index,
            prompt_file,
            top_k,
            min_score,
            json,
        } => {
            let overrides = ConfigOverrides {
                index_path: Some(index),
                top_k,
                min_score,
                ..Default::default()
            };
            let config = effective_config(cli.config.as_ref(), overrides)?;
            let prompt = read_prompt(&prompt_file)?;
            let loaded = load_index(&config.index_path)?;
            let query = embed_text(&prompt, &config.embedder)?;
            let mut results = retrieve_top_k(&loaded, &query, config.top_k)?;
            if let Some(min) = config.min_score {
                results.retain(|r| r.score >= min);
            }
            if json {
                println!("{}", serde_json::to_string_pretty(&results).unwrap());
            } else {
                let blocks = rag_context_blocks(&loaded, &results)?;
                println!("{}", blocks.join("\n\n"));
            }
            Ok(())
        }
        Command::Ast {
            file,
            compile_db,
            class_name,
            function,
            json,
        } => {
            if let Some(db_path) = &compile_db {
                let (entries, warnings) = load_compile_db(db_path)?;
                for warning in &warnings {
                    eprintln!("warning: {warning}");
                }
                eprintln!("compile db: {} translation units", entries.len());
            }
            let source = std::fs::read_to_string(&file).map_err(|source| PipelineError::Io {
                path: file.clone(),
                source,
            })?;
            let report = extract_structure(&source, &file);
            for warning in &report.warnings {
                eprintln!("warning: {warning}");
            }
            let focus = function.map(|fn_name| Focus {
                class_name,
                fn_name,
            });
            if json {
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
                if let Some(focus) = &focus {
                    let range =
                        find_function_range(&report, focus.class_name.as_deref(), &focus.fn_name)?;
                    println!(
                        "{}",
                        serde_json::json!({
                            "focus": focus.fn_name,
                            "start_line": range.start_line,
                            "end_line": range.end_line,
                        })
                    );
                }
            } else {
                println!("{}", format_ast_context(&report, focus.as_ref())?);
            }
            Ok(())
        }
        Command::Prompt {
            prompt_file,
            index,
            file,
            top_k,
        } => {
            let overrides = ConfigOverrides {
                index_path: Some(index),
                top_k,
                ..Default::default()
            };
            let config = effective_config(cli.config.as_ref(), overrides)?;
            let composed = compose_only(&prompt_file, file.as_deref(), &config)?;
            print!("{composed}");
            Ok(())
        }
        Command::Generate {
            prompt_file,
            index,
            file,
            top_k,
            endpoint,
        } => {
            let mut overrides = overrides_from_endpoint(&endpoint);
            overrides.index_path = Some(index);
            overrides.top_k = top_k;
            let config = effective_config(cli.config.as_ref(), overrides)?;
            let composed = compose_only(&prompt_file, file.as_deref(), &config)?;
            let mut stdout = std::io::stdout();
            let generation = generate(&composed, &config.model, &mut |chunk| {
                print!("{chunk}");
                stdout.flush().ok();
            })?;
            println!();
            let code = extract_code_block(&generation.full_text)?;
            eprintln!("--- extracted code ({} bytes) ---", code.len());
            Ok(())
        }
        Command::Apply {
            file,
            class_name,
            function,
            from,
            label,
        } => {
            let config = effective_config(cli.config.as_ref(), ConfigOverrides::default())?;
            let source = std::fs::read_to_string(&file).map_err(|source| PipelineError::Io {
                path: file.clone(),
                source,
            })?;
            let report = extract_structure(&source, &file);
            let range = find_function_range(&report, class_name.as_deref(), &function)?;
            let raw = std::fs::read_to_string(&from).map_err(|source| PipelineError::Io {
                path: from.clone(),
                source,
            })?;
            let replacement = extract_code_block(&raw)?;
            let lines: Vec<&str> = source.split('\n').collect();
            let original: String = lines[range.start_line - 1..range.end_line]
                .iter()
                .map(|l| format!("{l}\n"))
                .collect();
            let proposal = EditProposal {
                file: file.clone(),
                range,
                original_text: original,
                replacement_text: replacement,
                marker_label: label.unwrap_or(config.model.model_name),
            };
            let marked = edit::apply_with_markers(&source, &proposal)?;
            let backup = format!("{}.astra.bak", file.display());
            if !std::path::Path::new(&backup).exists() {
                std::fs::write(&backup, &source).map_err(|source| PipelineError::Io {
                    path: PathBuf::from(&backup),
                    source,
                })?;
            }
            std::fs::write(&file, marked).map_err(|source| PipelineError::Io {
                path: file.clone(),
                source,
            })?;
            println!(
                "applied markers to {} lines {}-{}; resolve with `astra resolve`",
                file.display(),
                range.start_line,
                range.end_line
            );
            Ok(())
        }
        Command::Resolve {
            file,
            accept,
            reject,
        } => {
            if accept == reject {
                // Exactly one of --accept/--reject; clap handles the
                // conflict case, this guards the neither case.
                eprintln!("astra resolve: pass exactly one of --accept or --reject");
                std::process::exit(2);
            }
            let decision = if accept {
                Decision::Accept
            } else {
                Decision::Reject
            };
            let text = std::fs::read_to_string(&file).map_err(|source| PipelineError::Io {
                path: file.clone(),
                source,
            })?;
            let resolved = edit::resolve(&text, decision)?;
            std::fs::write(&file, &resolved).map_err(|source| PipelineError::Io {
                path: file.clone(),
                source,
            })?;
            remove_backup(&file);
            println!("resolved {} ({})", file.display(), if accept { "accepted" } else { "rejected" });
            Ok(())
        }
        Command::Eval {
            manifest,
            generations,
            csv,
        } => {
            let config = effective_config(cli.config.as_ref(), ConfigOverrides::default())?;
            let tasks = load_manifest(&manifest)?;
            let map = scan_generations_dir(&generations, &tasks)?;
            let records = run_benchmark(&tasks, &map, &config.embedder)?;
            let mut models: Vec<String> = records.iter().map(|r| r.model_name.clone()).collect();
            models.sort();
            models.dedup();
            print!("{}", render_table(&records, &tasks, &models));
            if let Some(csv_path) = csv {
                let csv_text = render_csv(&records, &config.embedder);
                std::fs::write(&csv_path, csv_text).map_err(|source| PipelineError::Io {
                    path: csv_path.clone(),
                    source,
                })?;
                println!("wrote {}", csv_path.display());
            }
            Ok(())
        }
        Command::Run {
            prompt_file,
            file,
            index,
            top_k,
            char_budget,
            yes,
            no,
            endpoint,
        } => {
            let mut overrides = overrides_from_endpoint(&endpoint);
            overrides.index_path = index;
            overrides.top_k = top_k;
            overrides.char_budget = char_budget;
            let config = effective_config(cli.config.as_ref(), overrides)?;
            let apply_mode = if yes {
                ApplyMode::Yes
            } else if no {
                ApplyMode::No
            } else {
                ApplyMode::Interactive
            };
            let mut stdout = std::io::stdout();
            let outcome = run_pipeline(
                &prompt_file,
                file.as_deref(),
                &config,
                apply_mode,
                &mut |chunk| {
                    print!("{chunk}");
                    stdout.flush().ok();
                },
            )?;
            println!();
            for warning in &outcome.warnings {
                eprintln!("warning: {warning}");
            }
            eprintln!(
                "run artifacts: {} (intent: {:?}{})",
                outcome.run_dir.display(),
                outcome.intent.kind,
                if outcome.applied { ", edit applied" } else { "" }
            );
            Ok(())
        }
    }
}

/// Shared prompt composition for the `prompt` and `generate` subcommands;
/// identical to what `astra run` sends to the model.
fn compose_only(
    prompt_file: &std::path::Path,
    target: Option<&std::path::Path>,
    config: &PipelineConfig,
) -> Result<String, PipelineError> {
    let composed = compose_for_run(prompt_file, target, config)?;
    for warning in &composed.warnings {
        eprintln!("warning: {warning}");
    }
    Ok(composed.composed)
}

fn read_prompt(path: &std::path::Path) -> Result<String, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if text.trim().is_empty() {
        return Err(PipelineError::BlankPrompt(path.to_path_buf()));
    }
    Ok(text.trim_end().to_string())
}
