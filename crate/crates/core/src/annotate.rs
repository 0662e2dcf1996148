//! Entity and relation annotation, curation, ontology maintenance and
//! autocomplete suggestions.
//!
//! Every annotation write carries a client-generated `client_token`.
//! Replaying a write with a token that is already stored returns the stored
//! annotation's id instead of inserting again, so clients can retry a
//! confirm whose response was lost.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::auth::{Actor, AuthError, Permission};
use crate::store::{
    queries, Annotation, CurationState, Id, OntologyKind, Store, StoreError, TypeDef, WriteTx,
};

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error(transparent)]
    Auth(#[from] AuthError),
    #[error("{kind} type `{label}` is not defined in the ontology")]
    UnknownType { kind: &'static str, label: String },
    #[error("{0} not found")]
    NotFound(String),
    #[error("{kind} type `{label}` is used by {uses} annotation(s); removal is prevented")]
    InUse {
        kind: &'static str,
        label: String,
        uses: u64,
    },
    #[error("client_token `{0}` was already used for a different annotation")]
    TokenConflict(String),
    #[error("{0}")]
    NotPermitted(String),
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

fn forbidden(p: Permission) -> AnnotateError {
    AnnotateError::Auth(AuthError::Forbidden(p))
}

fn nonempty(what: &str, v: &str) -> Result<(), AnnotateError> {
    if v.is_empty() {
        Err(AnnotateError::Validation(format!("{what} must be non-empty")))
    } else {
        Ok(())
    }
}

fn require_line(tx: &WriteTx<'_>, line_id: Id) -> Result<(), AnnotateError> {
    if queries::line(tx, line_id)?.is_none() {
        return Err(AnnotateError::NotFound(format!("line {line_id}")));
    }
    Ok(())
}

fn require_type(tx: &WriteTx<'_>, kind: OntologyKind, label: &str) -> Result<TypeDef, AnnotateError> {
    queries::type_by_label(tx, kind, label)?.ok_or_else(|| AnnotateError::UnknownType {
        kind: kind.as_str(),
        label: label.to_string(),
    })
}

fn lemma_id(conn: &rusqlite::Connection, lemma: &str) -> Result<Option<Id>, StoreError> {
    Ok(queries::lemma_by_text(conn, lemma)?.map(|e| e.id))
}

/// Record that `lemma` is an entity of `node_type` on `line_id`.
pub fn annotate_entity(
    store: &Store,
    actor: &Actor,
    client_token: &str,
    line_id: Id,
    lemma: &str,
    node_type: &str,
) -> Result<Id, AnnotateError> {
    actor.require(Permission::Annotate)?;
    nonempty("client_token", client_token)?;
    nonempty("lemma", lemma)?;
    store.write(|tx| {
        if let Some(existing) = queries::annotation_by_token(tx, client_token)? {
            let same = match &existing {
                Annotation::Entity(e) => {
                    e.annotator_id == actor.id
                        && e.line_id == line_id
                        && Some(e.lexicon_id) == lemma_id(tx, lemma)?
                        && queries::type_by_id(tx, OntologyKind::Node, e.node_type_id)?
                            .is_some_and(|t| t.label == node_type)
                }
                Annotation::Relation(_) => false,
            };
            return if same {
                Ok(existing.id())
            } else {
                Err(AnnotateError::TokenConflict(client_token.to_string()))
            };
        }
        require_line(tx, line_id)?;
        let ty = require_type(tx, OntologyKind::Node, node_type)?;
        let lexicon_id = tx.upsert_lemma(lemma)?;
        // A second submission of the same fact by the same annotator collapses
        // onto the first one.
        if let Some(existing) = queries::entity_tuple(tx, lexicon_id, ty.id, line_id, actor.id)? {
            return Ok(existing.id());
        }
        Ok(tx.insert_entity_annotation(client_token, lexicon_id, ty.id, line_id, actor.id)?)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelationInput<'a> {
    pub source: &'a str,
    pub target: &'a str,
    pub relation_type: &'a str,
    pub detail: Option<&'a str>,
}

/// Record `source -[relation_type]-> target` on `line_id`. Source and target
/// may be the same lemma.
pub fn annotate_relation(
    store: &Store,
    actor: &Actor,
    client_token: &str,
    line_id: Id,
    relation: RelationInput<'_>,
) -> Result<Id, AnnotateError> {
    actor.require(Permission::Annotate)?;
    nonempty("client_token", client_token)?;
    nonempty("source lemma", relation.source)?;
    nonempty("target lemma", relation.target)?;
    let detail = relation.detail.filter(|d| !d.is_empty());
    store.write(|tx| {
        if let Some(existing) = queries::annotation_by_token(tx, client_token)? {
            let same = match &existing {
                Annotation::Relation(r) => {
                    r.annotator_id == actor.id
                        && r.line_id == line_id
                        && Some(r.source_lexicon_id) == lemma_id(tx, relation.source)?
                        && Some(r.target_lexicon_id) == lemma_id(tx, relation.target)?
                        && r.detail.as_deref() == detail
                        && queries::type_by_id(tx, OntologyKind::Relation, r.relation_type_id)?
                            .is_some_and(|t| t.label == relation.relation_type)
                }
                Annotation::Entity(_) => false,
            };
            return if same {
                Ok(existing.id())
            } else {
                Err(AnnotateError::TokenConflict(client_token.to_string()))
            };
        }
        require_line(tx, line_id)?;
        let ty = require_type(tx, OntologyKind::Relation, relation.relation_type)?;
        let source = tx.upsert_lemma(relation.source)?;
        let target = tx.upsert_lemma(relation.target)?;
        Ok(tx.insert_relation_annotation(
            client_token,
            source,
            target,
            ty.id,
            detail,
            line_id,
            actor.id,
        )?)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Own,
    All,
}

/// An annotation with its references resolved to display values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationView {
    pub id: Id,
    pub line_id: Id,
    pub annotator_id: Id,
    pub annotator: String,
    pub curation_state: CurationState,
    #[serde(flatten)]
    pub body: AnnotationBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AnnotationBody {
    Entity {
        lemma: String,
        node_type: String,
    },
    Relation {
        source: String,
        target: String,
        relation_type: String,
        detail: Option<String>,
    },
}

pub(crate) fn resolve_view(
    conn: &rusqlite::Connection,
    annotation: &Annotation,
) -> Result<AnnotationView, StoreError> {
    let lemma = |id: Id| -> Result<String, StoreError> {
        queries::lemma(conn, id)?
            .map(|e| e.lemma)
            .ok_or_else(|| StoreError::Unrecoverable(format!("dangling lexicon id {id}")))
    };
    let label = |kind: OntologyKind, id: Id| -> Result<String, StoreError> {
        queries::type_by_id(conn, kind, id)?
            .map(|t| t.label)
            .ok_or_else(|| StoreError::Unrecoverable(format!("dangling type id {id}")))
    };
    let body = match annotation {
        Annotation::Entity(e) => AnnotationBody::Entity {
            lemma: lemma(e.lexicon_id)?,
            node_type: label(OntologyKind::Node, e.node_type_id)?,
        },
        Annotation::Relation(r) => AnnotationBody::Relation {
            source: lemma(r.source_lexicon_id)?,
            target: lemma(r.target_lexicon_id)?,
            relation_type: label(OntologyKind::Relation, r.relation_type_id)?,
            detail: r.detail.clone(),
        },
    };
    let annotator = queries::user(conn, annotation.annotator_id())?
        .map(|u| u.username)
        .unwrap_or_default();
    Ok(AnnotationView {
        id: annotation.id(),
        line_id: annotation.line_id(),
        annotator_id: annotation.annotator_id(),
        annotator,
        curation_state: annotation.curation_state(),
        body,
    })
}

/// Annotations on a line: the caller's own, or (with `Curate`) everyone's.
/// Discarded annotations stay visible to their author, flagged as such.
pub fn list_annotations(
    store: &Store,
    actor: &Actor,
    line_id: Id,
    scope: Scope,
) -> Result<Vec<AnnotationView>, AnnotateError> {
    let filter = match scope {
        Scope::Own => {
            actor.require(Permission::Annotate)?;
            Some(actor.id)
        }
        Scope::All => {
            actor.require(Permission::Curate)?;
            None
        }
    };
    store.read(|c| {
        if queries::line(c, line_id)?.is_none() {
            return Err(AnnotateError::NotFound(format!("line {line_id}")));
        }
        queries::line_annotations(c, line_id, filter)?
            .iter()
            .map(|a| resolve_view(c, a).map_err(AnnotateError::from))
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurationDecision {
    Keep,
    Discard,
}

/// Record a curator's verdict. Later verdicts overwrite earlier ones.
pub fn curate(
    store: &Store,
    actor: &Actor,
    annotation_id: Id,
    decision: CurationDecision,
) -> Result<CurationState, AnnotateError> {
    actor.require(Permission::Curate)?;
    let state = match decision {
        CurationDecision::Keep => CurationState::Kept,
        CurationDecision::Discard => CurationState::Discarded,
    };
    store.write(|tx| match tx.set_curation(annotation_id, state) {
        Ok(()) => Ok(state),
        Err(StoreError::NotFound(what)) => Err(AnnotateError::NotFound(what)),
        Err(e) => Err(e.into()),
    })
}

/// Delete an annotation. Curators may delete any annotation; annotators only
/// their own while it is still `proposed`.
pub fn delete_annotation(store: &Store, actor: &Actor, annotation_id: Id) -> Result<(), AnnotateError> {
    actor.require(Permission::Annotate)?;
    store.write(|tx| {
        let annotation = queries::annotation(tx, annotation_id)?
            .ok_or_else(|| AnnotateError::NotFound(format!("annotation {annotation_id}")))?;
        if !actor.can(Permission::Curate) {
            if annotation.annotator_id() != actor.id {
                return Err(forbidden(Permission::Curate));
            }
            if annotation.curation_state() != CurationState::Proposed {
                return Err(AnnotateError::NotPermitted(format!(
                    "annotation {annotation_id} is already {}; only a curator can delete it",
                    annotation.curation_state()
                )));
            }
        }
        tx.delete_annotation(annotation_id)?;
        Ok(())
    })
}

pub fn ontology_list(store: &Store, kind: OntologyKind) -> Result<Vec<TypeDef>, AnnotateError> {
    Ok(store.read(|c| queries::types(c, kind))?)
}

/// Define a node or relation type. Adding an existing label returns its id.
pub fn ontology_add(
    store: &Store,
    actor: &Actor,
    kind: OntologyKind,
    label: &str,
    description: Option<&str>,
) -> Result<Id, AnnotateError> {
    actor.require(Permission::CreateOntology)?;
    store.write(|tx| match tx.upsert_type(kind, label, description) {
        Ok(id) => Ok(id),
        Err(StoreError::Validation(msg)) => Err(AnnotateError::Validation(msg)),
        Err(e) => Err(e.into()),
    })
}

/// Remove a type definition that no stored annotation uses.
pub fn ontology_remove(
    store: &Store,
    actor: &Actor,
    kind: OntologyKind,
    label: &str,
) -> Result<(), AnnotateError> {
    actor.require(Permission::CreateOntology)?;
    store.write(|tx| {
        let def = queries::type_by_label(tx, kind, label)?
            .ok_or_else(|| AnnotateError::NotFound(format!("{} type `{label}`", kind.as_str())))?;
        let uses = queries::type_usage(tx, kind, def.id)?;
        if uses > 0 {
            return Err(AnnotateError::InUse {
                kind: kind.as_str(),
                label: label.to_string(),
                uses,
            });
        }
        tx.delete_type(kind, label)?;
        Ok(())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuggestionSource {
    CurrentLine,
    History,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suggestion {
    pub lemma: String,
    pub source: SuggestionSource,
    /// Position on the line for `current_line`, usage count for `history`.
    pub weight: u64,
}

/// Candidate lemmas of a line in display order: analysis `Lemma` attributes,
/// then the words of `split` and `text`.
fn line_candidates(conn: &rusqlite::Connection, line_id: Id) -> Result<Vec<String>, AnnotateError> {
    let line = queries::line(conn, line_id)?
        .ok_or_else(|| AnnotateError::NotFound(format!("line {line_id}")))?;
    let tokens = queries::tokens(conn, line_id)?;
    let from_tokens = tokens
        .iter()
        .filter_map(|t| t.attribute("Lemma"))
        .map(str::to_string);
    let words = line
        .split
        .iter()
        .chain(std::iter::once(&line.text))
        .flat_map(|s| s.split_whitespace())
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_string());
    let mut seen = HashSet::new();
    Ok(from_tokens
        .chain(words)
        .filter(|w| !w.is_empty() && seen.insert(w.clone()))
        .collect())
}

/// Autocomplete for annotating `line_id`: lemmas of the line first (in
/// line order), then previously annotated lemmas by descending use, ties
/// broken lexicographically.
pub fn suggest(
    store: &Store,
    line_id: Id,
    prefix: &str,
    limit: usize,
) -> Result<Vec<Suggestion>, AnnotateError> {
    if limit == 0 {
        return Err(AnnotateError::Validation("limit must be at least 1".into()));
    }
    store.read(|c| {
        let current = line_candidates(c, line_id)?;
        let on_line: HashSet<&str> = current.iter().map(String::as_str).collect();
        let mut out: Vec<Suggestion> = current
            .iter()
            .enumerate()
            .filter(|(_, l)| l.starts_with(prefix))
            .map(|(i, l)| Suggestion {
                lemma: l.clone(),
                source: SuggestionSource::CurrentLine,
                weight: i as u64,
            })
            .collect();
        let mut history: Vec<(String, u64)> = queries::lexicon_usage(c)?
            .into_iter()
            .filter(|(e, _)| e.lemma.starts_with(prefix) && !on_line.contains(e.lemma.as_str()))
            .map(|(e, n)| (e.lemma, n))
            .collect();
        history.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        out.extend(history.into_iter().map(|(lemma, weight)| Suggestion {
            lemma,
            source: SuggestionSource::History,
            weight,
        }));
        out.truncate(limit);
        Ok(out)
    })
}
