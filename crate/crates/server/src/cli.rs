//! Command-line driver. Actions run in the order init, import, build,
//! export, serve; any subset may be combined.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::Parser;
use lemmagraph_core::graph::{self, GraphError};
use lemmagraph_core::ingest::{self, IngestError};
use lemmagraph_core::store::{queries, StoreError};
use lemmagraph_core::{Id, Store};
use thiserror::Error;

use crate::app::{App, StartupError};
use crate::config::load_config;

#[derive(Debug, Parser)]
#[command(name = "lemmagraph", version, about = "Corpus annotation and knowledge-graph query server")]
pub struct Cli {
    /// Settings file (TOML).
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Create the store and the admin account.
    #[arg(long)]
    pub init: bool,
    /// Import chapter files into a corpus, creating the corpus if needed.
    /// Each chapter is named after its file stem.
    #[arg(long, num_args = 2.., value_names = ["CORPUS", "FILE"])]
    pub import_corpus: Option<Vec<String>>,
    /// Rebuild the graph snapshot with the configured policy.
    #[arg(long)]
    pub build_graph: bool,
    /// Write the current graph snapshot as JSONL.
    #[arg(long, value_name = "OUT")]
    pub export_graph: Option<PathBuf>,
    /// Run the HTTP service.
    #[arg(long)]
    pub serve: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("nothing to do: give at least one of --init, --import-corpus, --build-graph, --export-graph, --serve")]
    NoAction,
    #[error(transparent)]
    Startup(#[from] StartupError),
    #[error("{path}: {source}")]
    Import { path: PathBuf, source: IngestError },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl Cli {
    fn has_action(&self) -> bool {
        self.init || self.import_corpus.is_some() || self.build_graph || self.export_graph.is_some() || self.serve
    }
}

fn corpus_id(store: &Store, name: &str) -> Result<Id, StoreError> {
    store.write(|tx| match queries::corpus_by_name(tx, name)? {
        Some(c) => Ok(c.id),
        None => tx.insert_corpus(name, ""),
    })
}

fn chapter_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Execute the requested actions, reporting progress to `out`.
pub fn run(cli: &Cli, out: &mut impl Write) -> Result<(), CliError> {
    if !cli.has_action() {
        return Err(CliError::NoAction);
    }
    let config = load_config(&cli.config).map_err(StartupError::from)?;
    let app = App::open(config)?;
    let report = |out: &mut dyn Write, line: String| {
        let _ = writeln!(out, "{line}");
    };
    if cli.init {
        report(
            out,
            format!(
                "store ready at {} (admin `{}`)",
                app.store.dir().display(),
                app.config.admin.username
            ),
        );
    }
    if let Some(args) = &cli.import_corpus {
        let (corpus, files) = args.split_first().expect("clap enforces two values");
        let id = corpus_id(&app.store, corpus)?;
        for file in files {
            let path = PathBuf::from(file);
            let bytes = std::fs::read(&path).map_err(|source| CliError::Read {
                path: path.clone(),
                source,
            })?;
            let summary = ingest::parse_chapter(&bytes)
                .and_then(|chapter| ingest::ingest_chapter(&app.store, id, &chapter_name(&path), &chapter))
                .map_err(|source| CliError::Import {
                    path: path.clone(),
                    source,
                })?;
            report(
                out,
                format!(
                    "{}: {} verses, {} lines, {} tokens",
                    path.display(),
                    summary.verses,
                    summary.lines,
                    summary.tokens
                ),
            );
        }
    }
    if cli.build_graph {
        let g = app.rebuild_graph(&app.config.build_policy())?;
        report(out, format!("graph built: {} nodes, {} edges", g.node_count(), g.edge_count()));
    }
    if let Some(path) = &cli.export_graph {
        std::fs::write(path, graph::export_jsonl(&app.graph())).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?;
        report(out, format!("graph written to {}", path.display()));
    }
    if cli.serve {
        let runtime = tokio::runtime::Runtime::new().map_err(StartupError::Serve)?;
        runtime.block_on(async {
            let addr = std::net::SocketAddr::new(app.config.server.bind, app.config.server.port);
            let listener = tokio::net::TcpListener::bind(addr)
                .await
                .map_err(|source| StartupError::Bind { addr, source })?;
            crate::serve_on(listener, Arc::new(app)).await
        })?;
    }
    Ok(())
}
