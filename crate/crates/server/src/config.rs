use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Overrides `listen_address` from the config file when set.
pub const LISTEN_ENV: &str = "EVENTGRAPH_LISTEN";

#[derive(Debug, Error)]
pub enum ServiceConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("page_size must be at least 1")]
    PageSize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub listen_address: String,
    pub store_dir: PathBuf,
    pub cors_allowed_origin: String,
    pub page_size: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen_address: "127.0.0.1:8080".into(),
            store_dir: PathBuf::from("store"),
            cors_allowed_origin: "http://localhost:5173".into(),
            page_size: 20,
        }
    }
}

impl ServiceConfig {
    /// Reads the JSON file, then applies the environment override. A relative
    /// `store_dir` is resolved against the config file's directory.
    pub fn load(path: &Path) -> Result<Self, ServiceConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ServiceConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|source| ServiceConfigError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        if cfg.store_dir.is_relative() {
            if let Some(parent) = path.parent() {
                cfg.store_dir = parent.join(&cfg.store_dir);
            }
        }
        cfg.apply_env(std::env::var(LISTEN_ENV).ok());
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, listen: Option<String>) {
        if let Some(addr) = listen.filter(|a| !a.trim().is_empty()) {
            self.listen_address = addr;
        }
    }

    pub fn validate(&self) -> Result<(), ServiceConfigError> {
        if self.page_size == 0 {
            return Err(ServiceConfigError::PageSize);
        }
        Ok(())
    }
}
