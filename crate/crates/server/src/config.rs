//! Settings file. TOML, every section optional except `[admin]`:
//!
//! ```toml
//! [admin]
//! username = "owner"
//! password = "secret"
//! email = "owner@example.org"     # default ""
//!
//! [server]
//! bind = "127.0.0.1"              # default
//! port = 8080                     # default
//!
//! [store]
//! path = "lemmagraph-data"        # default; a directory
//!
//! [session]
//! idle_timeout_secs = 3600        # default
//!
//! [roles]
//! default = ["querier"]           # roles given to self-registered users
//!
//! [graph]
//! include_states = ["proposed", "kept"]
//!
//! [templates]
//! path = "templates.json"         # optional
//! ```
//!
//! Relative paths are resolved against the working directory.

use std::collections::BTreeSet;
use std::net::IpAddr;
use std::path::{Path, PathBuf};

use lemmagraph_core::auth::Role;
use lemmagraph_core::graph::BuildPolicy;
use lemmagraph_core::store::CurationState;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_IDLE_TIMEOUT_SECS: u64 = 3600;
pub const DEFAULT_BIND: &str = "127.0.0.1";
pub const DEFAULT_STORE_PATH: &str = "lemmagraph-data";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("missing mandatory field `{0}`")]
    Missing(&'static str),
    #[error("invalid value for `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Config {
    pub admin: AdminConfig,
    pub server: ServerConfig,
    pub store: StoreConfig,
    pub session: SessionConfig,
    pub roles: RoleConfig,
    pub graph: GraphConfig,
    pub templates: TemplateConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdminConfig {
    pub username: String,
    pub password: String,
    pub email: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServerConfig {
    pub bind: IpAddr,
    pub port: u16,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreConfig {
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub idle_timeout_secs: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleConfig {
    pub default: BTreeSet<Role>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphConfig {
    pub include_states: BTreeSet<CurationState>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TemplateConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl Config {
    /// A configuration with every default applied.
    pub fn with_admin(username: &str, password: &str) -> Config {
        Config {
            admin: AdminConfig {
                username: username.into(),
                password: password.into(),
                email: String::new(),
            },
            server: ServerConfig {
                bind: DEFAULT_BIND.parse().expect("valid address"),
                port: DEFAULT_PORT,
            },
            store: StoreConfig {
                path: DEFAULT_STORE_PATH.into(),
            },
            session: SessionConfig {
                idle_timeout_secs: DEFAULT_IDLE_TIMEOUT_SECS,
            },
            roles: RoleConfig {
                default: [Role::Querier].into(),
            },
            graph: GraphConfig {
                include_states: BuildPolicy::default().include_states,
            },
            templates: TemplateConfig::default(),
        }
    }

    pub fn build_policy(&self) -> BuildPolicy {
        BuildPolicy {
            include_states: self.graph.include_states.clone(),
            corpus_ids: None,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

// Mirror of `Config` with every field optional, so that a missing field can
// be reported by its dotted name.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    admin: Option<RawAdmin>,
    #[serde(default)]
    server: RawServer,
    #[serde(default)]
    store: RawStore,
    #[serde(default)]
    session: RawSession,
    #[serde(default)]
    roles: RawRoles,
    #[serde(default)]
    graph: RawGraph,
    #[serde(default)]
    templates: TemplateConfig,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawAdmin {
    username: Option<String>,
    password: Option<String>,
    email: Option<String>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawServer {
    bind: Option<String>,
    port: Option<i64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawStore {
    path: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSession {
    idle_timeout_secs: Option<i64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRoles {
    default: Option<BTreeSet<Role>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    include_states: Option<BTreeSet<CurationState>>,
}

pub fn load_config(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let admin = raw.admin.ok_or(ConfigError::Missing("admin.username"))?;
    let username = admin.username.ok_or(ConfigError::Missing("admin.username"))?;
    if username.is_empty() {
        return Err(ConfigError::Invalid {
            field: "admin.username",
            message: "must be non-empty".into(),
        });
    }
    let password = admin.password.ok_or(ConfigError::Missing("admin.password"))?;
    if password.is_empty() {
        return Err(ConfigError::Invalid {
            field: "admin.password",
            message: "must be non-empty".into(),
        });
    }
    let mut config = Config::with_admin(&username, &password);
    config.admin.email = admin.email.unwrap_or_default();

    if let Some(bind) = raw.server.bind {
        config.server.bind = bind.parse().map_err(|_| ConfigError::Invalid {
            field: "server.bind",
            message: format!("`{bind}` is not an IP address"),
        })?;
    }
    if let Some(port) = raw.server.port {
        config.server.port = u16::try_from(port)
            .ok()
            .filter(|p| *p != 0)
            .ok_or_else(|| ConfigError::Invalid {
                field: "server.port",
                message: format!("{port} is not in 1..=65535"),
            })?;
    }
    if let Some(path) = raw.store.path {
        if path.as_os_str().is_empty() {
            return Err(ConfigError::Invalid {
                field: "store.path",
                message: "must be non-empty".into(),
            });
        }
        if path.exists() && !path.is_dir() {
            return Err(ConfigError::Invalid {
                field: "store.path",
                message: format!("{} exists and is not a directory", path.display()),
            });
        }
        config.store.path = path;
    }
    if let Some(secs) = raw.session.idle_timeout_secs {
        config.session.idle_timeout_secs = u64::try_from(secs)
            .ok()
            .filter(|s| *s > 0)
            .ok_or_else(|| ConfigError::Invalid {
                field: "session.idle_timeout_secs",
                message: format!("{secs} is not a positive number of seconds"),
            })?;
    }
    if let Some(roles) = raw.roles.default {
        config.roles.default = roles;
    }
    if let Some(states) = raw.graph.include_states {
        config.graph.include_states = states;
        config.build_policy().validate().map_err(|e| ConfigError::Invalid {
            field: "graph.include_states",
            message: e.to_string(),
        })?;
    }
    config.templates = raw.templates;
    Ok(config)
}
