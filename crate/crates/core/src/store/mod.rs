//! Embedded single-file storage for users, corpus hierarchy, lexicon,
//! ontology and annotations.
//!
//! Writes are serialized through one writer connection and applied inside a
//! transaction (see [`Store::write`] and [`Store::transact`]). Readers use a
//! small pool of separate connections and see the last committed snapshot.

mod batch;
mod model;
pub mod queries;
mod schema;
mod tx;

use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use rusqlite::{Connection, ErrorCode, OpenFlags};
use thiserror::Error;

pub use batch::{Ref, Write};
pub use model::*;
pub use schema::SCHEMA_VERSION;
pub use tx::WriteTx;

/// File name of the database inside the store directory.
pub const STORE_FILE: &str = "store.db";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unrecoverable store: {0}")]
    Unrecoverable(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("constraint violated{}: {invariant}", .write.map(|w| format!(" by write #{w}")).unwrap_or_default())]
    Constraint {
        write: Option<usize>,
        invariant: String,
    },
    #[error("{0} not found")]
    NotFound(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("database error: {0}")]
    Database(rusqlite::Error),
}

impl StoreError {
    pub(crate) fn constraint(invariant: impl Into<String>) -> Self {
        StoreError::Constraint {
            write: None,
            invariant: invariant.into(),
        }
    }

    pub(crate) fn at_write(self, index: usize) -> Self {
        match self {
            StoreError::Constraint { write: None, invariant } => StoreError::Constraint {
                write: Some(index),
                invariant,
            },
            other => other,
        }
    }
}

impl From<rusqlite::Error> for StoreError {
    fn from(err: rusqlite::Error) -> Self {
        match err.sqlite_error_code() {
            Some(ErrorCode::NotADatabase) | Some(ErrorCode::DatabaseCorrupt) => {
                StoreError::Unrecoverable(err.to_string())
            }
            Some(ErrorCode::ConstraintViolation) => {
                StoreError::constraint(describe_sqlite_constraint(&err.to_string()))
            }
            _ => StoreError::Database(err),
        }
    }
}

/// Map a raw SQLite constraint message onto the invariant it protects.
fn describe_sqlite_constraint(msg: &str) -> String {
    let named = [
        ("annotations.client_token", "client_token is unique store-wide"),
        (
            "annotations.lexicon_id, annotations.node_type_id",
            "one entity annotation per (lemma, type, line, annotator)",
        ),
        ("lexicon.lemma", "lemma is unique"),
        ("corpora.name", "corpus name is unique"),
        ("chapters.corpus_id, chapters.name", "chapter name is unique within its corpus"),
        ("lines.chapter_id, lines.ordinal", "line ordinal is unique within its chapter"),
        ("analysis_tokens.line_id, analysis_tokens.position", "token position is unique per line"),
        ("users.username", "username is unique"),
        ("node_types.label", "node type label is unique"),
        ("relation_types.label", "relation type label is unique"),
        ("FOREIGN KEY", "referenced row exists"),
    ];
    named
        .iter()
        .find(|(needle, _)| msg.contains(needle))
        .map(|(_, name)| name.to_string())
        .unwrap_or_else(|| msg.to_string())
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

/// Handle on an open store. Shareable across threads.
pub struct Store {
    dir: PathBuf,
    file: PathBuf,
    writer: Mutex<Connection>,
    readers: Mutex<Vec<Connection>>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").field("file", &self.file).finish()
    }
}

impl Store {
    /// Open the store kept in directory `dir`, creating the directory and an
    /// empty schema on first use.
    pub fn open(dir: impl AsRef<Path>) -> Result<Store> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir)?;
        let file = dir.join(STORE_FILE);
        let mut writer = open_connection(&file)?;
        init_schema(&mut writer)?;
        Ok(Store {
            dir,
            file,
            writer: Mutex::new(writer),
            readers: Mutex::new(Vec::new()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn file(&self) -> &Path {
        &self.file
    }

    /// Run `f` inside one write transaction. Any error rolls the whole
    /// transaction back.
    pub fn write<T, E>(&self, f: impl FnOnce(&WriteTx<'_>) -> Result<T, E>) -> Result<T, E>
    where
        E: From<StoreError>,
    {
        let mut conn = self.writer.lock().unwrap_or_else(|p| p.into_inner());
        let tx = conn
            .transaction_with_behavior(rusqlite::TransactionBehavior::Immediate)
            .map_err(StoreError::from)?;
        let wtx = WriteTx::new(tx);
        let out = f(&wtx)?;
        wtx.commit().map_err(E::from)?;
        Ok(out)
    }

    /// Apply `batch` atomically. Returns the id produced by each write
    /// (0 for writes that produce none). On failure nothing is applied and
    /// the error names the first violated invariant.
    pub fn transact(&self, batch: &[Write]) -> Result<Vec<Id>> {
        self.write(|tx| batch::apply(tx, batch))
    }

    /// Run a read-only closure against a committed snapshot.
    pub fn read<T, E>(&self, f: impl FnOnce(&Connection) -> Result<T, E>) -> Result<T, E>
    where
        E: From<StoreError>,
    {
        let conn = {
            let mut pool = self.readers.lock().unwrap_or_else(|p| p.into_inner());
            pool.pop()
        };
        let conn = match conn {
            Some(c) => c,
            None => open_connection(&self.file)?,
        };
        let out = conn
            .execute_batch("BEGIN DEFERRED")
            .map_err(StoreError::from)
            .map_err(E::from)
            .and_then(|_| f(&conn));
        let _ = conn.execute_batch("COMMIT");
        let mut pool = self.readers.lock().unwrap_or_else(|p| p.into_inner());
        if pool.len() < 8 {
            pool.push(conn);
        }
        out
    }

    pub fn upsert_lemma(&self, lemma: &str) -> Result<Id> {
        self.write(|tx| tx.upsert_lemma(lemma))
    }
}

fn open_connection(file: &Path) -> Result<Connection> {
    let conn = Connection::open_with_flags(
        file,
        OpenFlags::SQLITE_OPEN_READ_WRITE
            | OpenFlags::SQLITE_OPEN_CREATE
            | OpenFlags::SQLITE_OPEN_NO_MUTEX,
    )?;
    conn.busy_timeout(Duration::from_secs(10))?;
    // The first statement that touches the file is where a foreign or
    // corrupted file is detected.
    conn.pragma_update(None, "journal_mode", "WAL")?;
    conn.pragma_update(None, "synchronous", "FULL")?;
    conn.pragma_update(None, "foreign_keys", true)?;
    Ok(conn)
}

fn init_schema(conn: &mut Connection) -> Result<()> {
    let version: i64 = conn.pragma_query_value(None, "user_version", |r| r.get(0))?;
    match version {
        0 => {
            let tables: i64 = conn.query_row(
                "SELECT count(*) FROM sqlite_master WHERE type = 'table'",
                [],
                |r| r.get(0),
            )?;
            if tables != 0 {
                return Err(StoreError::Unrecoverable(
                    "file is a database but was not created by this program".into(),
                ));
            }
            let tx = conn.transaction()?;
            tx.execute_batch(schema::CREATE)?;
            tx.pragma_update(None, "user_version", SCHEMA_VERSION)?;
            tx.commit()?;
            Ok(())
        }
        SCHEMA_VERSION => Ok(()),
        other => Err(StoreError::Unrecoverable(format!(
            "schema version {other} is not supported (expected {SCHEMA_VERSION})"
        ))),
    }
}

#[cfg(test)]
mod tests;
