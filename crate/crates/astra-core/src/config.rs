//! Pipeline configuration with layered precedence:
//! built-in defaults < config file < environment variables < CLI flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{EmbedderConfig, EmbedderKind, DEFAULT_DIMENSION};
use crate::model::{EndpointKind, ModelEndpointConfig};

pub const DEFAULT_CONFIG_PATH: &str = ".astra/config.toml";
pub const DEFAULT_INDEX_PATH: &str = ".astra/index.json";
pub const DEFAULT_LOCAL_ENDPOINT: &str = "http://localhost:11434";
pub const DEFAULT_MODEL_NAME: &str = "codellama";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    UnreadableConfig {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config file {path} is not valid TOML: {source}")]
    BadToml {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("invalid value for {0}")]
    InvalidValue(&'static str),
}

/// The effective pipeline configuration.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineConfig {
    pub index_path: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compile_db_path: Option<PathBuf>,
    pub embedder: EmbedderConfig,
    pub model: ModelEndpointConfig,
    pub top_k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_score: Option<f64>,
    /// 0 disables budget truncation.
    pub char_budget: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub general_instructions_path: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            index_path: PathBuf::from(DEFAULT_INDEX_PATH),
            compile_db_path: None,
            embedder: EmbedderConfig::deterministic(DEFAULT_DIMENSION),
            model: ModelEndpointConfig::local(DEFAULT_LOCAL_ENDPOINT, DEFAULT_MODEL_NAME),
            top_k: 3,
            min_score: None,
            char_budget: 0,
            general_instructions_path: None,
        }
    }
}

/// On-disk TOML shape; every field optional so partial files merge over
/// defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    index_path: Option<PathBuf>,
    compile_db_path: Option<PathBuf>,
    top_k: Option<usize>,
    min_score: Option<f64>,
    char_budget: Option<usize>,
    general_instructions_path: Option<PathBuf>,
    embedder: Option<EmbedderFile>,
    model: Option<ModelFile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbedderFile {
    kind: Option<String>,
    dimension: Option<usize>,
    endpoint: Option<String>,
    model_name: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    kind: Option<String>,
    base_url: Option<String>,
    model_name: Option<String>,
    api_key_env: Option<String>,
    replay_dir: Option<PathBuf>,
}

/// CLI-level overrides, applied last.
#[derive(Debug, Default, Clone)]
pub struct ConfigOverrides {
    pub index_path: Option<PathBuf>,
    pub compile_db_path: Option<PathBuf>,
    pub top_k: Option<usize>,
    pub min_score: Option<f64>,
    pub char_budget: Option<usize>,
    pub model_name: Option<String>,
    pub endpoint: Option<String>,
    pub endpoint_kind: Option<EndpointKind>,
    pub replay_dir: Option<PathBuf>,
    pub general_instructions_path: Option<PathBuf>,
}

/// Loads configuration with full precedence handling.
///
/// `path = None` reads `.astra/config.toml` when present; an explicit path
/// must exist.
pub fn load_config(
    path: Option<&Path>,
    overrides: &ConfigOverrides,
) -> Result<PipelineConfig, ConfigError> {
    let mut config = PipelineConfig::default();

    let file = match path {
        Some(p) => Some(read_config_file(p)?),
        None => {
            let default = Path::new(DEFAULT_CONFIG_PATH);
            if default.exists() {
                Some(read_config_file(default)?)
            } else {
                None
            }
        }
    };
    if let Some(file) = file {
        apply_file(&mut config, file)?;
    }
    apply_env(&mut config);
    apply_overrides(&mut config, overrides);
    validate(&config)?;
    Ok(config)
}

fn read_config_file(path: &Path) -> Result<ConfigFile, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::UnreadableConfig {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|source| ConfigError::BadToml {
        path: path.to_path_buf(),
        source,
    })
}

fn apply_file(config: &mut PipelineConfig, file: ConfigFile) -> Result<(), ConfigError> {
    if let Some(v) = file.index_path {
        config.index_path = v;
    }
    if let Some(v) = file.compile_db_path {
        config.compile_db_path = Some(v);
    }
    if let Some(v) = file.top_k {
        config.top_k = v;
    }
    if let Some(v) = file.min_score {
        config.min_score = Some(v);
    }
    if let Some(v) = file.char_budget {
        config.char_budget = v;
    }
    if let Some(v) = file.general_instructions_path {
        config.general_instructions_path = Some(v);
    }
    if let Some(embedder) = file.embedder {
        if let Some(kind) = embedder.kind {
            config.embedder.kind = match kind.as_str() {
                "deterministic" => EmbedderKind::Deterministic,
                "remote" => EmbedderKind::Remote,
                _ => return Err(ConfigError::InvalidValue("embedder.kind")),
            };
        }
        if let Some(d) = embedder.dimension {
            config.embedder.dimension = d;
        }
        if embedder.endpoint.is_some() {
            config.embedder.endpoint = embedder.endpoint;
        }
        if embedder.model_name.is_some() {
            config.embedder.model_name = embedder.model_name;
        }
    }
    if let Some(model) = file.model {
        if let Some(kind) = model.kind {
            config.model.kind = match kind.as_str() {
                "local_runtime" | "local" => EndpointKind::LocalRuntime,
                "remote_api" | "remote" => EndpointKind::RemoteApi,
                "replay" => EndpointKind::Replay,
                _ => return Err(ConfigError::InvalidValue("model.kind")),
            };
        }
        if model.base_url.is_some() {
            config.model.base_url = model.base_url;
        }
        if let Some(name) = model.model_name {
            config.model.model_name = name;
        }
        if model.api_key_env.is_some() {
            config.model.api_key_env = model.api_key_env;
        }
        if model.replay_dir.is_some() {
            config.model.replay_dir = model.replay_dir;
        }
    }
    Ok(())
}

fn apply_env(config: &mut PipelineConfig) {
    if let Ok(endpoint) = std::env::var("ASTRA_MODEL_ENDPOINT") {
        if !endpoint.is_empty() {
            config.model.base_url = Some(endpoint);
        }
    }
    if let Ok(endpoint) = std::env::var("ASTRA_EMBED_ENDPOINT") {
        if !endpoint.is_empty() {
            config.embedder.endpoint = Some(endpoint);
        }
    }
}

fn apply_overrides(config: &mut PipelineConfig, overrides: &ConfigOverrides) {
    if let Some(v) = &overrides.index_path {
        config.index_path = v.clone();
    }
    if let Some(v) = &overrides.compile_db_path {
        config.compile_db_path = Some(v.clone());
    }
    if let Some(v) = overrides.top_k {
        config.top_k = v;
    }
    if let Some(v) = overrides.min_score {
        config.min_score = Some(v);
    }
    if let Some(v) = overrides.char_budget {
        config.char_budget = v;
    }
    if let Some(v) = &overrides.model_name {
        config.model.model_name = v.clone();
    }
    if let Some(v) = &overrides.endpoint {
        config.model.base_url = Some(v.clone());
    }
    if let Some(v) = overrides.endpoint_kind {
        config.model.kind = v;
    }
    if let Some(v) = &overrides.replay_dir {
        config.model.replay_dir = Some(v.clone());
    }
    if let Some(v) = &overrides.general_instructions_path {
        config.general_instructions_path = Some(v.clone());
    }
}

fn validate(config: &PipelineConfig) -> Result<(), ConfigError> {
    if config.top_k == 0 {
        return Err(ConfigError::InvalidValue("top_k"));
    }
    if config.embedder.dimension == 0 {
        return Err(ConfigError::InvalidValue("embedder.dimension"));
    }
    if config.embedder.kind == EmbedderKind::Remote
        && (config.embedder.endpoint.is_none() || config.embedder.model_name.is_none())
    {
        return Err(ConfigError::InvalidValue("embedder.endpoint"));
    }
    if matches!(
        config.model.kind,
        EndpointKind::LocalRuntime | EndpointKind::RemoteApi
    ) && config.model.base_url.is_none()
    {
        return Err(ConfigError::InvalidValue("model.base_url"));
    }
    if config.model.kind == EndpointKind::Replay && config.model.replay_dir.is_none() {
        return Err(ConfigError::InvalidValue("model.replay_dir"));
    }
    if let Some(score) = config.min_score {
        if !(-1.0..=1.0).contains(&score) {
            return Err(ConfigError::InvalidValue("min_score"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    // Config tests manipulate process-global env vars; serialize them.
    static ENV_LOCK: Mutex<()> = Mutex::new(());

    fn no_env<T>(f: impl FnOnce() -> T) -> T {
        let _guard = ENV_LOCK.lock().unwrap();
        let saved: Vec<(String, Option<String>)> = ["ASTRA_MODEL_ENDPOINT", "ASTRA_EMBED_ENDPOINT"]
            .iter()
            .map(|k| (k.to_string(), std::env::var(k).ok()))
            .collect();
        for (k, _) in &saved {
            std::env::remove_var(k);
        }
        let result = f();
        for (k, v) in saved {
            if let Some(v) = v {
                std::env::set_var(&k, v);
            }
        }
        result
    }

    #[test]
    fn defaults_without_any_source() {
        no_env(|| {
            let config = load_config(None, &ConfigOverrides::default()).unwrap();
            assert_eq!(config.top_k, 3);
            assert_eq!(config.embedder.dimension, 384);
            assert_eq!(config.embedder.kind, EmbedderKind::Deterministic);
            assert_eq!(config.model.kind, EndpointKind::LocalRuntime);
        });
    }

    #[test]
    fn file_overrides_defaults() {
        no_env(|| {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("config.toml");
            std::fs::write(&path, "top_k = 7\n[model]\nkind = \"replay\"\nreplay_dir = \"r\"\n")
                .unwrap();
            let config = load_config(Some(&path), &ConfigOverrides::default()).unwrap();
            assert_eq!(config.top_k, 7);
            assert_eq!(config.model.kind, EndpointKind::Replay);
        });
    }

    #[test]
    fn env_overrides_file_and_flag_overrides_env() {
        let _guard = ENV_LOCK.lock().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.toml");
        std::fs::write(&path, "[model]\nbase_url = \"http://from-file\"\n").unwrap();

        std::env::set_var("ASTRA_MODEL_ENDPOINT", "http://from-env");
        let config = load_config(Some(&path), &ConfigOverrides::default()).unwrap();
        assert_eq!(config.model.base_url.as_deref(), Some("http://from-env"));

        let overrides = ConfigOverrides {
            endpoint: Some("http://from-flag".to_string()),
            ..Default::default()
        };
        let config = load_config(Some(&path), &overrides).unwrap();
        assert_eq!(config.model.base_url.as_deref(), Some("http://from-flag"));
        std::env::remove_var("ASTRA_MODEL_ENDPOINT");
    }

    #[test]
    fn zero_top_k_is_invalid() {
        no_env(|| {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("config.toml");
            std::fs::write(&path, "top_k = 0\n").unwrap();
            match load_config(Some(&path), &ConfigOverrides::default()) {
                Err(ConfigError::InvalidValue(key)) => assert_eq!(key, "top_k"),
                other => panic!("unexpected: {other:?}"),
            }
        });
    }

    #[test]
    fn missing_explicit_config_is_an_error() {
        assert!(matches!(
            load_config(
                Some(Path::new("/definitely/not/here.toml")),
                &ConfigOverrides::default()
            ),
            Err(ConfigError::UnreadableConfig { .. })
        ));
    }

    #[test]
    fn unknown_keys_rejected() {
        no_env(|| {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("config.toml");
            std::fs::write(&path, "not_a_key = 1\n").unwrap();
            assert!(matches!(
                load_config(Some(&path), &ConfigOverrides::default()),
                Err(ConfigError::BadToml { .. })
            ));
        });
    }
}
