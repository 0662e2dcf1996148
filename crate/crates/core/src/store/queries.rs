//! Read helpers. Each takes a plain connection, so they run both on reader
//! snapshots and inside a [`WriteTx`](super::WriteTx).

use std::collections::BTreeSet;

use rusqlite::{params, Connection, OptionalExtension, Row};

use super::*;
use crate::auth::Role;

pub fn exists(conn: &Connection, table: &str, id: Id) -> Result<bool> {
    let found: Option<i64> = conn
        .query_row(&format!("SELECT 1 FROM {table} WHERE id = ?1"), [id], |r| r.get(0))
        .optional()?;
    Ok(found.is_some())
}

fn corpus_row(r: &Row<'_>) -> rusqlite::Result<Corpus> {
    Ok(Corpus {
        id: r.get(0)?,
        name: r.get(1)?,
        description: r.get(2)?,
    })
}

pub fn corpora(conn: &Connection) -> Result<Vec<Corpus>> {
    let mut stmt = conn.prepare("SELECT id, name, description FROM corpora ORDER BY id")?;
    let rows = stmt.query_map([], corpus_row)?.collect::<rusqlite::Result<_>>()?;
    Ok(rows)
}

pub fn corpus(conn: &Connection, id: Id) -> Result<Option<Corpus>> {
    Ok(conn
        .query_row("SELECT id, name, description FROM corpora WHERE id = ?1", [id], corpus_row)
        .optional()?)
}

pub fn corpus_by_name(conn: &Connection, name: &str) -> Result<Option<Corpus>> {
    Ok(conn
        .query_row(
            "SELECT id, name, description FROM corpora WHERE name = ?1",
            [name],
            corpus_row,
        )
        .optional()?)
}

pub fn chapters(conn: &Connection, corpus_id: Id) -> Result<Vec<Chapter>> {
    let mut stmt =
        conn.prepare("SELECT id, corpus_id, name FROM chapters WHERE corpus_id = ?1 ORDER BY id")?;
    let rows = stmt
        .query_map([corpus_id], |r| {
            Ok(Chapter {
                id: r.get(0)?,
                corpus_id: r.get(1)?,
                name: r.get(2)?,
            })
        })?
        .collect::<rusqlite::Result<_>>()?;
    Ok(rows)
}

pub fn verses(conn: &Connection, chapter_id: Id) -> Result<Vec<Verse>> {
    let mut stmt =
        conn.prepare("SELECT id, chapter_id, verse_mark FROM verses WHERE chapter_id = ?1 ORDER BY id")?;
    let rows = stmt
        .query_map([chapter_id], |r| {
            Ok(Verse {
                id: r.get(0)?,
                chapter_id: r.get(1)?,
                verse_mark: r.get(2)?,
            })
        })?
        .collect::<rusqlite::Result<_>>()?;
    Ok(rows)
}

const LINE_COLUMNS: &str = "l.id, l.verse_id, l.chapter_id, l.ordinal, l.text, l.split";

fn line_row(r: &Row<'_>) -> rusqlite::Result<Line> {
    Ok(Line {
        id: r.get(0)?,
        verse_id: r.get(1)?,
        chapter_id: r.get(2)?,
        ordinal: r.get(3)?,
        text: r.get(4)?,
        split: r.get(5)?,
    })
}

pub fn line(conn: &Connection, id: Id) -> Result<Option<Line>> {
    Ok(conn
        .query_row(
            &format!("SELECT {LINE_COLUMNS} FROM lines l WHERE l.id = ?1"),
            [id],
            line_row,
        )
        .optional()?)
}

pub fn chapter_lines(conn: &Connection, chapter_id: Id) -> Result<Vec<Line>> {
    let mut stmt = conn.prepare(&format!(
        "SELECT {LINE_COLUMNS} FROM lines l WHERE l.chapter_id = ?1 ORDER BY l.ordinal"
    ))?;
    let rows = stmt
        .query_map([chapter_id], line_row)?
        .collect::<rusqlite::Result<_>>()?;
    Ok(rows)
}

/// Lines of a corpus in reading order (chapter upload order, then ordinal).
pub fn corpus_lines(conn: &Connection, corpus_id: Id, offset: u64, limit: u64) -> Result<Vec<Line>> {
    let mut stmt = conn.prepare(&format!(
        "SELECT {LINE_COLUMNS} FROM lines l JOIN chapters c ON c.id = l.chapter_id
         WHERE c.corpus_id = ?1 ORDER BY c.id, l.ordinal LIMIT ?2 OFFSET ?3"
    ))?;
    let rows = stmt
        .query_map(params![corpus_id, limit as i64, offset as i64], line_row)?
        .collect::<rusqlite::Result<_>>()?;
    Ok(rows)
}

pub fn corpus_line_count(conn: &Connection, corpus_id: Id) -> Result<u64> {
    let n: i64 = conn.query_row(
        "SELECT count(*) FROM lines l JOIN chapters c ON c.id = l.chapter_id WHERE c.corpus_id = ?1",
        [corpus_id],
        |r| r.get(0),
    )?;
    Ok(n as u64)
}

pub fn line_analysis(conn: &Connection, line_id: Id) -> Result<Option<LineAnalysis>> {
    Ok(conn
        .query_row(
            "SELECT line_id, source, text FROM line_analysis WHERE line_id = ?1",
            [line_id],
            |r| {
                Ok(LineAnalysis {
                    line_id: r.get(0)?,
                    source: r.get(1)?,
                    text: r.get(2)?,
                })
            },
        )
        .optional()?)
}

pub fn tokens(conn: &Connection, line_id: Id) -> Result<Vec<AnalysisToken>> {
    let mut stmt = conn.prepare(
        "SELECT id, line_id, position, attributes FROM analysis_tokens WHERE line_id = ?1 ORDER BY position",
    )?;
    let raw: Vec<(Id, Id, u32, String)> = stmt
        .query_map([line_id], |r| Ok((r.get(0)?, r.get(1)?, r.get(2)?, r.get(3)?)))?
        .collect::<rusqlite::Result<_>>()?;
    raw.into_iter()
        .map(|(id, line_id, position, attrs)| {
            let attributes = serde_json::from_str(&attrs)
                .map_err(|e| StoreError::Unrecoverable(format!("token {id} attributes: {e}")))?;
            Ok(AnalysisToken {
                id,
                line_id,
                position,
                attributes,
            })
        })
        .collect()
}

pub fn lemma(conn: &Connection, id: Id) -> Result<Option<LexiconEntry>> {
    Ok(conn
        .query_row("SELECT id, lemma FROM lexicon WHERE id = ?1", [id], |r| {
            Ok(LexiconEntry {
                id: r.get(0)?,
                lemma: r.get(1)?,
            })
        })
        .optional()?)
}

pub fn lemma_by_text(conn: &Connection, lemma: &str) -> Result<Option<LexiconEntry>> {
    Ok(conn
        .query_row("SELECT id, lemma FROM lexicon WHERE lemma = ?1", [lemma], |r| {
            Ok(LexiconEntry {
                id: r.get(0)?,
                lemma: r.get(1)?,
            })
        })
        .optional()?)
}

/// Every lexicon entry with the number of annotations referencing it
/// (a relation counts once per endpoint).
pub fn lexicon_usage(conn: &Connection) -> Result<Vec<(LexiconEntry, u64)>> {
    let mut stmt = conn.prepare(
        "SELECT x.id, x.lemma,
                (SELECT count(*) FROM annotations a WHERE a.lexicon_id = x.id)
              + (SELECT count(*) FROM annotations a WHERE a.source_lexicon_id = x.id)
              + (SELECT count(*) FROM annotations a WHERE a.target_lexicon_id = x.id)
         FROM lexicon x ORDER BY x.id",
    )?;
    let rows = stmt
        .query_map([], |r| {
            Ok((
                LexiconEntry {
                    id: r.get(0)?,
                    lemma: r.get(1)?,
                },
                r.get::<_, i64>(2)? as u64,
            ))
        })?
        .collect::<rusqlite::Result<_>>()?;
    Ok(rows)
}

pub fn lexicon_size(conn: &Connection) -> Result<u64> {
    let n: i64 = conn.query_row("SELECT count(*) FROM lexicon", [], |r| r.get(0))?;
    Ok(n as u64)
}

pub fn type_by_label(conn: &Connection, kind: OntologyKind, label: &str) -> Result<Option<TypeDef>> {
    Ok(conn
        .query_row(
            &format!("SELECT id, label, description FROM {} WHERE label = ?1", kind.table()),
            [label],
            |r| {
                Ok(TypeDef {
                    id: r.get(0)?,
                    kind,
                    label: r.get(1)?,
                    description: r.get(2)?,
                })
            },
        )
        .optional()?)
}

pub fn type_by_id(conn: &Connection, kind: OntologyKind, id: Id) -> Result<Option<TypeDef>> {
    Ok(conn
        .query_row(
            &format!("SELECT id, label, description FROM {} WHERE id = ?1", kind.table()),
            [id],
            |r| {
                Ok(TypeDef {
                    id: r.get(0)?,
                    kind,
                    label: r.get(1)?,
                    description: r.get(2)?,
                })
            },
        )
        .optional()?)
}

pub fn types(conn: &Connection, kind: OntologyKind) -> Result<Vec<TypeDef>> {
    let mut stmt = conn.prepare(&format!(
        "SELECT id, label, description FROM {} ORDER BY label",
        kind.table()
    ))?;
    let rows = stmt
        .query_map([], |r| {
            Ok(TypeDef {
                id: r.get(0)?,
                kind,
                label: r.get(1)?,
                description: r.get(2)?,
            })
        })?
        .collect::<rusqlite::Result<_>>()?;
    Ok(rows)
}

/// Number of stored annotations (any curation state) using type `id`.
pub fn type_usage(conn: &Connection, kind: OntologyKind, id: Id) -> Result<u64> {
    let column = match kind {
        OntologyKind::Node => "node_type_id",
        OntologyKind::Relation => "relation_type_id",
    };
    let n: i64 = conn.query_row(
        &format!("SELECT count(*) FROM annotations WHERE {column} = ?1"),
        [id],
        |r| r.get(0),
    )?;
    Ok(n as u64)
}

const ANNOTATION_COLUMNS: &str = "a.id, a.kind, a.client_token, a.line_id, a.annotator_id, a.curation_state, \
     a.lexicon_id, a.node_type_id, a.source_lexicon_id, a.target_lexicon_id, a.relation_type_id, a.detail";

fn annotation_row(r: &Row<'_>) -> rusqlite::Result<Annotation> {
    let kind: String = r.get(1)?;
    let state: String = r.get(5)?;
    let curation_state = state.parse::<CurationState>().map_err(|e| {
        rusqlite::Error::FromSqlConversionFailure(5, rusqlite::types::Type::Text, e.into())
    })?;
    if kind == "entity" {
        Ok(Annotation::Entity(EntityAnnotation {
            id: r.get(0)?,
            client_token: r.get(2)?,
            line_id: r.get(3)?,
            annotator_id: r.get(4)?,
            curation_state,
            lexicon_id: r.get(6)?,
            node_type_id: r.get(7)?,
        }))
    } else {
        Ok(Annotation::Relation(RelationAnnotation {
            id: r.get(0)?,
            client_token: r.get(2)?,
            line_id: r.get(3)?,
            annotator_id: r.get(4)?,
            curation_state,
            source_lexicon_id: r.get(8)?,
            target_lexicon_id: r.get(9)?,
            relation_type_id: r.get(10)?,
            detail: r.get(11)?,
        }))
    }
}

pub fn annotation(conn: &Connection, id: Id) -> Result<Option<Annotation>> {
    Ok(conn
        .query_row(
            &format!("SELECT {ANNOTATION_COLUMNS} FROM annotations a WHERE a.id = ?1"),
            [id],
            annotation_row,
        )
        .optional()?)
}

pub fn annotation_by_token(conn: &Connection, token: &str) -> Result<Option<Annotation>> {
    Ok(conn
        .query_row(
            &format!("SELECT {ANNOTATION_COLUMNS} FROM annotations a WHERE a.client_token = ?1"),
            [token],
            annotation_row,
        )
        .optional()?)
}

pub fn entity_tuple(
    conn: &Connection,
    lexicon_id: Id,
    node_type_id: Id,
    line_id: Id,
    annotator_id: Id,
) -> Result<Option<Annotation>> {
    Ok(conn
        .query_row(
            &format!(
                "SELECT {ANNOTATION_COLUMNS} FROM annotations a
                 WHERE a.kind = 'entity' AND a.lexicon_id = ?1 AND a.node_type_id = ?2
                   AND a.line_id = ?3 AND a.annotator_id = ?4"
            ),
            params![lexicon_id, node_type_id, line_id, annotator_id],
            annotation_row,
        )
        .optional()?)
}

/// Annotations on a line, optionally restricted to one annotator, in id order.
pub fn line_annotations(
    conn: &Connection,
    line_id: Id,
    annotator: Option<Id>,
) -> Result<Vec<Annotation>> {
    let mut stmt = conn.prepare(&format!(
        "SELECT {ANNOTATION_COLUMNS} FROM annotations a
         WHERE a.line_id = ?1 AND (?2 IS NULL OR a.annotator_id = ?2) ORDER BY a.id"
    ))?;
    let rows = stmt
        .query_map(params![line_id, annotator], annotation_row)?
        .collect::<rusqlite::Result<_>>()?;
    Ok(rows)
}

/// Annotations in the given curation states, optionally limited to a set
/// of corpora, in id order.
pub fn annotations_for_build(
    conn: &Connection,
    states: &BTreeSet<CurationState>,
    corpus_ids: Option<&BTreeSet<Id>>,
) -> Result<Vec<Annotation>> {
    let mut stmt = conn.prepare(&format!(
        "SELECT {ANNOTATION_COLUMNS}, c.corpus_id FROM annotations a
         JOIN lines l ON l.id = a.line_id JOIN chapters c ON c.id = l.chapter_id
         ORDER BY a.id"
    ))?;
    let rows: Vec<(Annotation, Id)> = stmt
        .query_map([], |r| Ok((annotation_row(r)?, r.get(12)?)))?
        .collect::<rusqlite::Result<_>>()?;
    Ok(rows
        .into_iter()
        .filter(|(a, corpus)| {
            states.contains(&a.curation_state())
                && corpus_ids.is_none_or(|ids| ids.contains(corpus))
        })
        .map(|(a, _)| a)
        .collect())
}

fn load_roles(conn: &Connection, user_id: Id) -> Result<BTreeSet<Role>> {
    let mut stmt = conn.prepare("SELECT role FROM user_roles WHERE user_id = ?1")?;
    let names: Vec<String> = stmt
        .query_map([user_id], |r| r.get(0))?
        .collect::<rusqlite::Result<_>>()?;
    names
        .iter()
        .map(|n| n.parse::<Role>().map_err(StoreError::Unrecoverable))
        .collect()
}

fn user_query(conn: &Connection, clause: &str, arg: &dyn rusqlite::ToSql) -> Result<Option<UserRecord>> {
    let base = conn
        .query_row(
            &format!("SELECT id, username, email, password_hash FROM users WHERE {clause}"),
            [arg],
            |r| {
                Ok(UserRecord {
                    id: r.get(0)?,
                    username: r.get(1)?,
                    email: r.get(2)?,
                    password_hash: r.get(3)?,
                    roles: BTreeSet::new(),
                })
            },
        )
        .optional()?;
    match base {
        Some(mut user) => {
            user.roles = load_roles(conn, user.id)?;
            Ok(Some(user))
        }
        None => Ok(None),
    }
}

pub fn user(conn: &Connection, id: Id) -> Result<Option<UserRecord>> {
    user_query(conn, "id = ?1", &id)
}

pub fn user_by_name(conn: &Connection, username: &str) -> Result<Option<UserRecord>> {
    user_query(conn, "username = ?1", &username)
}

pub fn users(conn: &Connection) -> Result<Vec<UserRecord>> {
    let ids: Vec<Id> = {
        let mut stmt = conn.prepare("SELECT id FROM users ORDER BY id")?;
        let ids = stmt.query_map([], |r| r.get(0))?.collect::<rusqlite::Result<_>>()?;
        ids
    };
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        if let Some(u) = user(conn, id)? {
            out.push(u);
        }
    }
    Ok(out)
}

/// (actor, target, roles, timestamp) rows for `target_id`, oldest first.
pub fn role_audit(conn: &Connection, target_id: Id) -> Result<Vec<(Id, Id, String, String)>> {
    let mut stmt = conn.prepare(
        "SELECT actor_id, target_id, roles, at FROM role_audit WHERE target_id = ?1 ORDER BY id",
    )?;
    let rows = stmt
        .query_map([target_id], |r| Ok((r.get(0)?, r.get(1)?, r.get(2)?, r.get(3)?)))?
        .collect::<rusqlite::Result<_>>()?;
    Ok(rows)
}

/// Annotation counts per user: (entity, relation).
pub fn user_annotation_counts(conn: &Connection, user_id: Id) -> Result<(u64, u64)> {
    let (e, r): (i64, i64) = conn.query_row(
        "SELECT coalesce(sum(kind = 'entity'), 0), coalesce(sum(kind = 'relation'), 0)
         FROM annotations WHERE annotator_id = ?1",
        [user_id],
        |r| Ok((r.get(0)?, r.get(1)?)),
    )?;
    Ok((e as u64, r as u64))
}

/// (lines, distinct annotators, entity annotations, relation annotations) for one corpus.
pub fn corpus_counts(conn: &Connection, corpus_id: Id) -> Result<(u64, u64, u64, u64)> {
    let lines = corpus_line_count(conn, corpus_id)?;
    let (annotators, entities, relations): (i64, i64, i64) = conn.query_row(
        "SELECT count(DISTINCT a.annotator_id),
                coalesce(sum(a.kind = 'entity'), 0),
                coalesce(sum(a.kind = 'relation'), 0)
         FROM annotations a JOIN lines l ON l.id = a.line_id JOIN chapters c ON c.id = l.chapter_id
         WHERE c.corpus_id = ?1",
        [corpus_id],
        |r| Ok((r.get(0)?, r.get(1)?, r.get(2)?)),
    )?;
    Ok((lines, annotators as u64, entities as u64, relations as u64))
}
