//! Backend and service configuration, read from `AUTOMCQ_*` variables.

use std::path::PathBuf;
use std::time::Duration;

use automcq_core::{LanguageAllowList, MockFault};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_MODEL: &str = "gpt-4o-mini";
pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
pub const DEFAULT_API_KEY_VAR: &str = "AUTOMCQ_API_KEY";
pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Error)]
#[error("invalid configuration: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    OpenaiCompatible,
    Mock,
}

impl BackendKind {
    /// Accepts `mock`, `openai` and `openai_compatible`.
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mock" => Ok(Self::Mock),
            "openai" | "openai_compatible" | "openai-compatible" => Ok(Self::OpenaiCompatible),
            other => Err(ConfigError(format!(
                "unknown backend {other:?}, expected mock or openai"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub base_url: Option<String>,
    pub model_name: String,
    /// Name of the environment variable holding the API key.
    pub api_key_source: String,
    pub timeout: Duration,
    pub max_parallel: usize,
    /// Only sent when set; otherwise the backend default applies.
    pub temperature: Option<f32>,
    pub rate_limit_backoff: Duration,
    pub mock_fault: MockFault,
}

impl BackendConfig {
    pub fn mock() -> Self {
        Self {
            kind: BackendKind::Mock,
            base_url: None,
            model_name: DEFAULT_MODEL.into(),
            api_key_source: DEFAULT_API_KEY_VAR.into(),
            timeout: Duration::from_secs(60),
            max_parallel: 4,
            temperature: None,
            rate_limit_backoff: Duration::from_secs(2),
            mock_fault: MockFault::None,
        }
    }

    pub fn openai(base_url: impl Into<String>) -> Self {
        Self {
            kind: BackendKind::OpenaiCompatible,
            base_url: Some(base_url.into()),
            ..Self::mock()
        }
    }

    pub fn with_fault(mut self, fault: MockFault) -> Self {
        self.mock_fault = fault;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.kind == BackendKind::OpenaiCompatible {
            if self.base_url.as_deref().is_none_or(|u| u.trim().is_empty()) {
                return Err(ConfigError("openai backend requires a base URL".into()));
            }
            if self.api_key_source.trim().is_empty() {
                return Err(ConfigError(
                    "openai backend requires the name of the API key variable".into(),
                ));
            }
        }
        if self.timeout.is_zero() {
            return Err(ConfigError("timeout must be positive".into()));
        }
        if self.max_parallel == 0 {
            return Err(ConfigError("max_parallel must be at least 1".into()));
        }
        Ok(())
    }

    /// Reads `AUTOMCQ_BACKEND`, `AUTOMCQ_BASE_URL`, `AUTOMCQ_MODEL`,
    /// `AUTOMCQ_API_KEY_VAR`, `AUTOMCQ_TIMEOUT_SECS`, `AUTOMCQ_MAX_PARALLEL`,
    /// `AUTOMCQ_TEMPERATURE` and `AUTOMCQ_MOCK_FAULT`.
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let kind = match get("AUTOMCQ_BACKEND") {
            Some(v) => BackendKind::parse(&v)?,
            None => BackendKind::Mock,
        };
        let mut config = Self::mock();
        config.kind = kind;
        if kind == BackendKind::OpenaiCompatible {
            config.base_url =
                Some(get("AUTOMCQ_BASE_URL").unwrap_or_else(|| DEFAULT_BASE_URL.into()));
        }
        if let Some(model) = get("AUTOMCQ_MODEL").filter(|m| !m.trim().is_empty()) {
            config.model_name = model;
        }
        if let Some(var) = get("AUTOMCQ_API_KEY_VAR") {
            config.api_key_source = var;
        }
        if let Some(secs) = get("AUTOMCQ_TIMEOUT_SECS") {
            config.timeout = Duration::try_from_secs_f64(parse_num(&secs, "AUTOMCQ_TIMEOUT_SECS")?)
                .map_err(|e| ConfigError(format!("AUTOMCQ_TIMEOUT_SECS: {e}")))?;
        }
        if let Some(n) = get("AUTOMCQ_MAX_PARALLEL") {
            config.max_parallel = parse_num(&n, "AUTOMCQ_MAX_PARALLEL")?;
        }
        if let Some(t) = get("AUTOMCQ_TEMPERATURE") {
            config.temperature = Some(parse_num(&t, "AUTOMCQ_TEMPERATURE")?);
        }
        if let Some(f) = get("AUTOMCQ_MOCK_FAULT") {
            config.mock_fault = MockFault::parse(&f)
                .ok_or_else(|| ConfigError(format!("unknown AUTOMCQ_MOCK_FAULT {f:?}")))?;
        }
        config.validate()?;
        Ok(config)
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, name: &str) -> Result<T, ConfigError> {
    value
        .trim()
        .parse()
        .map_err(|_| ConfigError(format!("{name} is not a valid number: {value:?}")))
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind_addr: String,
    pub port: u16,
    pub data_dir: PathBuf,
    pub tokens_path: Option<PathBuf>,
    pub backend: BackendConfig,
    pub languages: LanguageAllowList,
    /// Unlimited attempts, latest sheet wins.
    pub practice_mode: bool,
}

impl ServiceConfig {
    /// Reads `AUTOMCQ_BIND_ADDR`, `AUTOMCQ_PORT`, `AUTOMCQ_DATA_DIR`,
    /// `AUTOMCQ_TOKENS`, `AUTOMCQ_LANGUAGES`, `AUTOMCQ_PRACTICE_MODE` and the
    /// backend variables.
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let port = match get("AUTOMCQ_PORT") {
            Some(p) => parse_num(&p, "AUTOMCQ_PORT")?,
            None => DEFAULT_PORT,
        };
        Ok(Self {
            bind_addr: get("AUTOMCQ_BIND_ADDR").unwrap_or_else(|| "0.0.0.0".into()),
            port,
            data_dir: get("AUTOMCQ_DATA_DIR")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("automcq-data")),
            tokens_path: get("AUTOMCQ_TOKENS").map(PathBuf::from),
            backend: BackendConfig::from_lookup(&get)?,
            languages: get("AUTOMCQ_LANGUAGES")
                .map(|csv| LanguageAllowList::from_csv(&csv))
                .unwrap_or_default(),
            practice_mode: get("AUTOMCQ_PRACTICE_MODE")
                .is_some_and(|v| matches!(v.trim(), "1" | "true" | "yes")),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn lookup(pairs: &[(&str, &str)]) -> impl Fn(&str) -> Option<String> {
        let map: HashMap<String, String> = pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        move |k| map.get(k).cloned()
    }

    #[test]
    fn defaults_to_offline_mock() {
        let c = BackendConfig::from_lookup(lookup(&[])).unwrap();
        assert_eq!(c.kind, BackendKind::Mock);
        assert_eq!(c.model_name, "gpt-4o-mini");
        assert_eq!(c.api_key_source, "AUTOMCQ_API_KEY");
        assert_eq!(c.temperature, None);
    }

    #[test]
    fn openai_gets_default_base_url() {
        let c = BackendConfig::from_lookup(lookup(&[("AUTOMCQ_BACKEND", "openai")])).unwrap();
        assert_eq!(c.kind, BackendKind::OpenaiCompatible);
        assert_eq!(c.base_url.as_deref(), Some(DEFAULT_BASE_URL));
    }

    #[test]
    fn rejects_bad_values() {
        assert!(BackendConfig::from_lookup(lookup(&[("AUTOMCQ_BACKEND", "claude")])).is_err());
        assert!(BackendConfig::from_lookup(lookup(&[("AUTOMCQ_MAX_PARALLEL", "0")])).is_err());
        assert!(BackendConfig::from_lookup(lookup(&[("AUTOMCQ_TIMEOUT_SECS", "0")])).is_err());
        assert!(BackendConfig::from_lookup(lookup(&[("AUTOMCQ_TIMEOUT_SECS", "-3")])).is_err());
        assert!(BackendConfig::from_lookup(lookup(&[("AUTOMCQ_TIMEOUT_SECS", "NaN")])).is_err());
        assert!(BackendConfig::from_lookup(lookup(&[("AUTOMCQ_MOCK_FAULT", "boom")])).is_err());
        let mut c = BackendConfig::openai("");
        assert!(c.validate().is_err());
        c.base_url = Some("http://x".into());
        c.api_key_source = " ".into();
        assert!(c.validate().is_err());
    }

    #[test]
    fn service_config() {
        let c = ServiceConfig::from_lookup(lookup(&[
            ("AUTOMCQ_PORT", "9000"),
            ("AUTOMCQ_DATA_DIR", "/tmp/x"),
            ("AUTOMCQ_PRACTICE_MODE", "1"),
            ("AUTOMCQ_LANGUAGES", "java,python"),
        ]))
        .unwrap();
        assert_eq!(c.port, 9000);
        assert!(c.practice_mode);
        assert!(!c.languages.contains("c"));
        assert!(ServiceConfig::from_lookup(lookup(&[("AUTOMCQ_PORT", "x")])).is_err());
    }
}
