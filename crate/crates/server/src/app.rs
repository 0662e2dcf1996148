//! Shared service state: store, sessions, templates, the current graph
//! snapshot and recent query results.

use std::collections::VecDeque;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use lemmagraph_core::auth::{self, AuthError, Clock, SessionManager, SystemClock};
use lemmagraph_core::graph::{self, BuildPolicy, GraphError, PropertyGraph};
use lemmagraph_core::ingest::{self, IngestError, QueryTemplate};
use lemmagraph_core::qtemplate::{self, QueryOutput, TemplateError};
use lemmagraph_core::store::{queries, OntologyKind, StoreError};
use lemmagraph_core::{Id, Store};
use serde::Serialize;
use thiserror::Error;

use crate::config::Config;

/// Query results kept for the export endpoint.
pub const RESULT_CACHE_SIZE: usize = 256;

#[derive(Debug, Error)]
pub enum StartupError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("cannot open store: {0}")]
    Store(#[from] StoreError),
    #[error("cannot create admin account: {0}")]
    Admin(#[from] AuthError),
    #[error("cannot read template file {path}: {source}")]
    TemplateFile {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("template file {path}: {source}")]
    Templates { path: PathBuf, source: IngestError },
    #[error("template file {path}: {source}")]
    TemplateLint { path: PathBuf, source: TemplateError },
    #[error("cannot load graph snapshot: {0}")]
    Graph(#[from] GraphError),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: std::net::SocketAddr,
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Serve(std::io::Error),
}

pub struct CachedResult {
    pub id: u64,
    pub owner: Id,
    pub output: Arc<QueryOutput>,
}

pub struct App {
    pub config: Config,
    pub store: Store,
    pub sessions: SessionManager,
    pub templates: Vec<QueryTemplate>,
    graph: RwLock<Arc<PropertyGraph>>,
    build_lock: Mutex<()>,
    results: Mutex<VecDeque<CachedResult>>,
    next_result: AtomicU64,
}

impl App {
    /// Open the store, create the configured admin if absent, load the
    /// template file and the last graph snapshot.
    pub fn open(config: Config) -> Result<App, StartupError> {
        Self::open_with_clock(config, Arc::new(SystemClock))
    }

    pub fn open_with_clock(config: Config, clock: Arc<dyn Clock>) -> Result<App, StartupError> {
        let store = Store::open(&config.store.path)?;
        auth::bootstrap_admin(&store, &config.admin.username, &config.admin.email, &config.admin.password)?;
        let templates = match &config.templates.path {
            Some(path) => load_templates(path)?,
            None => Vec::new(),
        };
        let graph = graph::load_snapshot(store.dir())?.unwrap_or_default();
        let sessions = SessionManager::with_clock(Duration::from_secs(config.session.idle_timeout_secs), clock);
        Ok(App {
            config,
            store,
            sessions,
            templates,
            graph: RwLock::new(Arc::new(graph)),
            build_lock: Mutex::new(()),
            results: Mutex::new(VecDeque::new()),
            next_result: AtomicU64::new(1),
        })
    }

    /// The graph queries currently run against.
    pub fn graph(&self) -> Arc<PropertyGraph> {
        self.graph.read().unwrap_or_else(|p| p.into_inner()).clone()
    }

    /// Build a new graph, persist it as the snapshot and make it current.
    /// Queries already running keep the previous graph.
    pub fn rebuild_graph(&self, policy: &BuildPolicy) -> Result<Arc<PropertyGraph>, GraphError> {
        let _guard = self.build_lock.lock().unwrap_or_else(|p| p.into_inner());
        let built = Arc::new(graph::build_graph(&self.store, policy)?);
        graph::save_snapshot(&built, self.store.dir())?;
        *self.graph.write().unwrap_or_else(|p| p.into_inner()) = built.clone();
        Ok(built)
    }

    pub fn cache_result(&self, owner: Id, output: QueryOutput) -> u64 {
        let id = self.next_result.fetch_add(1, Ordering::Relaxed);
        let mut results = self.results.lock().unwrap_or_else(|p| p.into_inner());
        if results.len() == RESULT_CACHE_SIZE {
            results.pop_front();
        }
        results.push_back(CachedResult {
            id,
            owner,
            output: Arc::new(output),
        });
        id
    }

    /// A cached result, visible only to the user who ran the query.
    pub fn cached_result(&self, id: u64, owner: Id) -> Option<Arc<QueryOutput>> {
        let results = self.results.lock().unwrap_or_else(|p| p.into_inner());
        results
            .iter()
            .find(|r| r.id == id && r.owner == owner)
            .map(|r| r.output.clone())
    }
}

fn load_templates(path: &std::path::Path) -> Result<Vec<QueryTemplate>, StartupError> {
    let bytes = std::fs::read(path).map_err(|source| StartupError::TemplateFile {
        path: path.to_path_buf(),
        source,
    })?;
    let templates = ingest::parse_templates(&bytes).map_err(|source| StartupError::Templates {
        path: path.to_path_buf(),
        source,
    })?;
    for t in &templates {
        qtemplate::lint(t).map_err(|source| StartupError::TemplateLint {
            path: path.to_path_buf(),
            source,
        })?;
    }
    Ok(templates)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub id: Id,
    pub name: String,
    pub lines: u64,
    pub annotators: u64,
    pub node_annotations: u64,
    pub relation_annotations: u64,
    pub node_types: u64,
    pub relation_types: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub corpora: Vec<CorpusStats>,
    pub node_types: u64,
    pub relation_types: u64,
    pub lexicon: u64,
}

/// Live counts. The ontology is shared by all corpora, so each corpus entry
/// repeats its size.
pub fn stats(store: &Store) -> Result<Stats, StoreError> {
    store.read(|c| {
        let node_types = queries::types(c, OntologyKind::Node)?.len() as u64;
        let relation_types = queries::types(c, OntologyKind::Relation)?.len() as u64;
        let mut corpora = Vec::new();
        for corpus in queries::corpora(c)? {
            let (lines, annotators, node_annotations, relation_annotations) = queries::corpus_counts(c, corpus.id)?;
            corpora.push(CorpusStats {
                id: corpus.id,
                name: corpus.name,
                lines,
                annotators,
                node_annotations,
                relation_annotations,
                node_types,
                relation_types,
            });
        }
        Ok(Stats {
            corpora,
            node_types,
            relation_types,
            lexicon: queries::lexicon_size(c)?,
        })
    })
}
