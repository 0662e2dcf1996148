use serde::{Deserialize, Serialize};

use super::{CurationState, Id, OntologyKind, Result, StoreError, WriteTx};

/// A row reference inside a batch: either an already stored id or the id
/// produced by an earlier write of the same batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ref {
    Id(Id),
    Batch(usize),
}

impl From<Id> for Ref {
    fn from(id: Id) -> Self {
        Ref::Id(id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Write {
    InsertCorpus {
        name: String,
        description: String,
    },
    InsertChapter {
        corpus: Ref,
        name: String,
    },
    InsertVerse {
        chapter: Ref,
        verse_mark: Option<String>,
    },
    InsertLine {
        verse: Ref,
        ordinal: u32,
        text: String,
        split: Option<String>,
    },
    InsertLineAnalysis {
        line: Ref,
        source: String,
        text: String,
    },
    InsertToken {
        line: Ref,
        position: u32,
        attributes: Vec<(String, String)>,
    },
    UpsertLemma {
        lemma: String,
    },
    UpsertType {
        kind: OntologyKind,
        label: String,
        description: Option<String>,
    },
    InsertEntityAnnotation {
        client_token: String,
        lexicon: Ref,
        node_type: Ref,
        line: Ref,
        annotator: Ref,
    },
    InsertRelationAnnotation {
        client_token: String,
        source: Ref,
        target: Ref,
        relation_type: Ref,
        detail: Option<String>,
        line: Ref,
        annotator: Ref,
    },
    SetCuration {
        annotation: Ref,
        state: CurationState,
    },
    DeleteAnnotation {
        annotation: Ref,
    },
}

pub(super) fn apply(tx: &WriteTx<'_>, batch: &[Write]) -> Result<Vec<Id>> {
    let mut produced: Vec<Id> = Vec::with_capacity(batch.len());
    for (index, write) in batch.iter().enumerate() {
        let id = apply_one(tx, write, &produced).map_err(|e| e.at_write(index))?;
        produced.push(id);
    }
    Ok(produced)
}

fn resolve(r: Ref, produced: &[Id]) -> Result<Id> {
    match r {
        Ref::Id(id) => Ok(id),
        Ref::Batch(i) => produced.get(i).copied().filter(|id| *id != 0).ok_or_else(|| {
            StoreError::constraint(format!("batch reference #{i} points at an earlier write producing an id"))
        }),
    }
}

fn apply_one(tx: &WriteTx<'_>, write: &Write, produced: &[Id]) -> Result<Id> {
    let r = |x: Ref| resolve(x, produced);
    match write {
        Write::InsertCorpus { name, description } => tx.insert_corpus(name, description),
        Write::InsertChapter { corpus, name } => tx.insert_chapter(r(*corpus)?, name),
        Write::InsertVerse { chapter, verse_mark } => {
            tx.insert_verse(r(*chapter)?, verse_mark.as_deref())
        }
        Write::InsertLine {
            verse,
            ordinal,
            text,
            split,
        } => tx.insert_line(r(*verse)?, *ordinal, text, split.as_deref()),
        Write::InsertLineAnalysis { line, source, text } => {
            let line = r(*line)?;
            tx.insert_line_analysis(line, source, text)?;
            Ok(line)
        }
        Write::InsertToken {
            line,
            position,
            attributes,
        } => tx.insert_token(r(*line)?, *position, attributes),
        Write::UpsertLemma { lemma } => tx.upsert_lemma(lemma),
        Write::UpsertType {
            kind,
            label,
            description,
        } => tx.upsert_type(*kind, label, description.as_deref()),
        Write::InsertEntityAnnotation {
            client_token,
            lexicon,
            node_type,
            line,
            annotator,
        } => tx.insert_entity_annotation(
            client_token,
            r(*lexicon)?,
            r(*node_type)?,
            r(*line)?,
            r(*annotator)?,
        ),
        Write::InsertRelationAnnotation {
            client_token,
            source,
            target,
            relation_type,
            detail,
            line,
            annotator,
        } => tx.insert_relation_annotation(
            client_token,
            r(*source)?,
            r(*target)?,
            r(*relation_type)?,
            detail.as_deref(),
            r(*line)?,
            r(*annotator)?,
        ),
        Write::SetCuration { annotation, state } => {
            let id = r(*annotation)?;
            tx.set_curation(id, *state)?;
            Ok(id)
        }
        Write::DeleteAnnotation { annotation } => {
            let id = r(*annotation)?;
            tx.delete_annotation(id)?;
            Ok(id)
        }
    }
}
