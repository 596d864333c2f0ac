//! Service configuration, read from a TOML file. Every key is optional:
//!
//! ```toml
//! listen = "127.0.0.1:8080"
//! data_dir = "data"
//! quests = "quests.toml"        # quest template library
//! feedback = "feedback.toml"    # card templates and framing rules
//! helpers = "helpers/"          # directory with index.toml and SVG files
//!
//! [monitor]
//! tick_interval_secs = 30
//! stall_ticks = 4
//! debounce = true
//!
//! [provider]
//! mode = "offline"              # or "remote", "remote_with_offline_fallback"
//! endpoint = "https://adapter.example/v1"
//! token_env = "SKETCHQUEST_PROVIDER_TOKEN"
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use sketchquest_core::feedback::FeedbackTable;
use sketchquest_core::provider::{Gateway, OfflineProvider, ProviderConfig, ProviderMode};
use sketchquest_core::quest::QuestLibrary;
use sketchquest_core::scaffold::HelperCatalog;
use sketchquest_core::MonitorPolicy;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: String,
    pub data_dir: PathBuf,
    pub provider: ProviderConfig,
    pub monitor: MonitorPolicy,
    pub quests: Option<PathBuf>,
    pub feedback: Option<PathBuf>,
    pub helpers: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            listen: "127.0.0.1:8080".into(),
            data_dir: PathBuf::from("data"),
            provider: ProviderConfig::default(),
            monitor: MonitorPolicy::default(),
            quests: None,
            feedback: None,
            helpers: None,
        }
    }
}

/// Template tables and catalogs the service runs with.
#[derive(Debug, Clone)]
pub struct Assets {
    pub quests: QuestLibrary,
    pub table: FeedbackTable,
    pub catalog: HelperCatalog,
}

impl Assets {
    pub fn offline_provider(&self) -> OfflineProvider {
        OfflineProvider::new(self.quests.clone(), self.catalog.clone(), self.table.clone())
    }
}

impl ServiceConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let read_err = |message: String| ConfigError::Read { path: path.to_owned(), message };
        let text = std::fs::read_to_string(path).map_err(|e| read_err(e.to_string()))?;
        let mut config: ServiceConfig = toml::from_str(&text).map_err(|e| read_err(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut config.data_dir);
        for p in [&mut config.quests, &mut config.feedback, &mut config.helpers].into_iter().flatten() {
            resolve(p);
        }
        for p in [&mut config.provider.cache_dir, &mut config.provider.prompt_dir].into_iter().flatten() {
            resolve(p);
        }
        Ok(config)
    }

    /// Forces the offline provider.
    pub fn offline(mut self) -> Self {
        self.provider.mode = ProviderMode::Offline;
        self
    }

    /// Startup checks: policy and provider settings are valid, referenced
    /// files exist, and the data directory is writable.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.monitor.validate().map_err(ConfigError::Invalid)?;
        self.provider.validate().map_err(ConfigError::Invalid)?;
        self.listen
            .parse::<std::net::SocketAddr>()
            .map_err(|e| ConfigError::Invalid(format!("listen address `{}`: {e}", self.listen)))?;
        for path in [&self.quests, &self.feedback].into_iter().flatten() {
            if !path.is_file() {
                return Err(ConfigError::Invalid(format!("{} does not exist", path.display())));
            }
        }
        if let Some(dir) = &self.helpers {
            if !dir.join("index.toml").is_file() {
                return Err(ConfigError::Invalid(format!("{} has no index.toml", dir.display())));
            }
        }
        let probe = self.data_dir.join(".write-probe");
        std::fs::create_dir_all(&self.data_dir)
            .and_then(|()| std::fs::write(&probe, b""))
            .and_then(|()| std::fs::remove_file(&probe))
            .map_err(|e| ConfigError::Invalid(format!("data directory {}: {e}", self.data_dir.display())))?;
        Ok(())
    }

    /// Loads the configured tables, falling back to the shipped ones.
    pub fn assets(&self) -> Result<Assets, ConfigError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|e| ConfigError::Invalid(format!("{}: {e}", p.display())))
        };
        let quests = match &self.quests {
            Some(p) => QuestLibrary::from_toml(&read(p)?)
                .map_err(|e| ConfigError::Invalid(format!("{}: {e}", p.display())))?,
            None => QuestLibrary::default(),
        };
        let table = match &self.feedback {
            Some(p) => FeedbackTable::from_toml(&read(p)?)
                .map_err(|e| ConfigError::Invalid(format!("{}: {e}", p.display())))?,
            None => FeedbackTable::default(),
        };
        let catalog = match &self.helpers {
            Some(dir) => HelperCatalog::load_dir(dir).map_err(ConfigError::Invalid)?,
            None => HelperCatalog::default(),
        };
        Ok(Assets { quests, table, catalog })
    }

    pub fn gateway(&self, assets: &Assets) -> Result<Gateway, ConfigError> {
        Gateway::from_config(&self.provider, assets.offline_provider()).map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}
