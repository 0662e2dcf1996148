use std::collections::BTreeSet;
use std::ops::Deref;

use rusqlite::{params, OptionalExtension, Transaction};

use super::queries;
use super::{CurationState, Id, OntologyKind, Result, StoreError};
use crate::auth::Role;

/// An open write transaction. Derefs to the underlying connection so the
/// read helpers in [`queries`] work on uncommitted state too.
pub struct WriteTx<'c> {
    tx: Transaction<'c>,
}

impl<'c> Deref for WriteTx<'c> {
    type Target = rusqlite::Connection;

    fn deref(&self) -> &Self::Target {
        &self.tx
    }
}

fn require_nonempty(what: &str, value: &str) -> Result<()> {
    if value.is_empty() {
        return Err(StoreError::Validation(format!("{what} must be non-empty")));
    }
    Ok(())
}

impl<'c> WriteTx<'c> {
    pub(crate) fn new(tx: Transaction<'c>) -> Self {
        WriteTx { tx }
    }

    pub(crate) fn commit(self) -> Result<()> {
        self.tx.commit()?;
        Ok(())
    }

    fn require_row(&self, table: &str, id: Id, invariant: &str) -> Result<()> {
        if queries::exists(self, table, id)? {
            Ok(())
        } else {
            Err(StoreError::constraint(invariant))
        }
    }

    pub fn insert_corpus(&self, name: &str, description: &str) -> Result<Id> {
        require_nonempty("corpus name", name)?;
        if queries::corpus_by_name(self, name)?.is_some() {
            return Err(StoreError::constraint("corpus name is unique"));
        }
        self.tx.execute(
            "INSERT INTO corpora (name, description) VALUES (?1, ?2)",
            params![name, description],
        )?;
        Ok(self.tx.last_insert_rowid())
    }

    pub fn insert_chapter(&self, corpus_id: Id, name: &str) -> Result<Id> {
        require_nonempty("chapter name", name)?;
        self.require_row("corpora", corpus_id, "chapter corpus_id references an existing Corpus")?;
        let taken: Option<Id> = self
            .tx
            .query_row(
                "SELECT id FROM chapters WHERE corpus_id = ?1 AND name = ?2",
                params![corpus_id, name],
                |r| r.get(0),
            )
            .optional()?;
        if taken.is_some() {
            return Err(StoreError::constraint("chapter name is unique within its corpus"));
        }
        self.tx.execute(
            "INSERT INTO chapters (corpus_id, name) VALUES (?1, ?2)",
            params![corpus_id, name],
        )?;
        Ok(self.tx.last_insert_rowid())
    }

    pub fn insert_verse(&self, chapter_id: Id, verse_mark: Option<&str>) -> Result<Id> {
        self.require_row("chapters", chapter_id, "verse chapter_id references an existing Chapter")?;
        self.tx.execute(
            "INSERT INTO verses (chapter_id, verse_mark) VALUES (?1, ?2)",
            params![chapter_id, verse_mark],
        )?;
        Ok(self.tx.last_insert_rowid())
    }

    pub fn insert_line(
        &self,
        verse_id: Id,
        ordinal: u32,
        text: &str,
        split: Option<&str>,
    ) -> Result<Id> {
        require_nonempty("line text", text)?;
        let chapter_id: Id = self
            .tx
            .query_row("SELECT chapter_id FROM verses WHERE id = ?1", [verse_id], |r| r.get(0))
            .optional()?
            .ok_or_else(|| StoreError::constraint("line verse_id references an existing Verse"))?;
        let taken: Option<Id> = self
            .tx
            .query_row(
                "SELECT id FROM lines WHERE chapter_id = ?1 AND ordinal = ?2",
                params![chapter_id, ordinal],
                |r| r.get(0),
            )
            .optional()?;
        if taken.is_some() {
            return Err(StoreError::constraint("line ordinal is unique within its chapter"));
        }
        self.tx.execute(
            "INSERT INTO lines (verse_id, chapter_id, ordinal, text, split) VALUES (?1, ?2, ?3, ?4, ?5)",
            params![verse_id, chapter_id, ordinal, text, split],
        )?;
        Ok(self.tx.last_insert_rowid())
    }

    pub fn insert_line_analysis(&self, line_id: Id, source: &str, text: &str) -> Result<()> {
        self.require_row("lines", line_id, "analysis line_id references an existing Line")?;
        self.tx.execute(
            "INSERT OR REPLACE INTO line_analysis (line_id, source, text) VALUES (?1, ?2, ?3)",
            params![line_id, source, text],
        )?;
        Ok(())
    }

    pub fn insert_token(
        &self,
        line_id: Id,
        position: u32,
        attributes: &[(String, String)],
    ) -> Result<Id> {
        self.require_row("lines", line_id, "token line_id references an existing Line")?;
        let taken: Option<Id> = self
            .tx
            .query_row(
                "SELECT id FROM analysis_tokens WHERE line_id = ?1 AND position = ?2",
                params![line_id, position],
                |r| r.get(0),
            )
            .optional()?;
        if taken.is_some() {
            return Err(StoreError::constraint("token position is unique per line"));
        }
        let encoded = serde_json::to_string(attributes)
            .map_err(|e| StoreError::Validation(e.to_string()))?;
        self.tx.execute(
            "INSERT INTO analysis_tokens (line_id, position, attributes) VALUES (?1, ?2, ?3)",
            params![line_id, position, encoded],
        )?;
        Ok(self.tx.last_insert_rowid())
    }

    /// Return the id of `lemma`, inserting it when absent. Matching is exact.
    pub fn upsert_lemma(&self, lemma: &str) -> Result<Id> {
        require_nonempty("lemma", lemma)?;
        if let Some(entry) = queries::lemma_by_text(self, lemma)? {
            return Ok(entry.id);
        }
        self.tx.execute("INSERT INTO lexicon (lemma) VALUES (?1)", [lemma])?;
        Ok(self.tx.last_insert_rowid())
    }

    /// Insert an ontology type; returns the existing id when the label is
    /// already defined.
    pub fn upsert_type(
        &self,
        kind: OntologyKind,
        label: &str,
        description: Option<&str>,
    ) -> Result<Id> {
        validate_label(label)?;
        if let Some(def) = queries::type_by_label(self, kind, label)? {
            return Ok(def.id);
        }
        self.tx.execute(
            &format!("INSERT INTO {} (label, description) VALUES (?1, ?2)", kind.table()),
            params![label, description],
        )?;
        Ok(self.tx.last_insert_rowid())
    }

    /// Delete an ontology type that no annotation references.
    pub fn delete_type(&self, kind: OntologyKind, label: &str) -> Result<()> {
        let def = queries::type_by_label(self, kind, label)?
            .ok_or_else(|| StoreError::NotFound(format!("{} type `{label}`", kind.as_str())))?;
        if queries::type_usage(self, kind, def.id)? > 0 {
            return Err(StoreError::constraint(format!(
                "{} type `{label}` is referenced by annotations",
                kind.as_str()
            )));
        }
        self.tx
            .execute(&format!("DELETE FROM {} WHERE id = ?1", kind.table()), [def.id])?;
        Ok(())
    }

    fn check_annotation_refs(&self, token: &str, line_id: Id, annotator_id: Id) -> Result<()> {
        require_nonempty("client_token", token)?;
        if queries::annotation_by_token(self, token)?.is_some() {
            return Err(StoreError::constraint("client_token is unique store-wide"));
        }
        self.require_row("lines", line_id, "annotation line_id references an existing Line")?;
        self.require_row("users", annotator_id, "annotation annotator_id references an existing User")
    }

    pub fn insert_entity_annotation(
        &self,
        client_token: &str,
        lexicon_id: Id,
        node_type_id: Id,
        line_id: Id,
        annotator_id: Id,
    ) -> Result<Id> {
        self.check_annotation_refs(client_token, line_id, annotator_id)?;
        self.require_row("lexicon", lexicon_id, "annotation lexicon_id references an existing LexiconEntry")?;
        self.require_row("node_types", node_type_id, "annotation node_type_id references an existing NodeTypeDef")?;
        if queries::entity_tuple(self, lexicon_id, node_type_id, line_id, annotator_id)?.is_some() {
            return Err(StoreError::constraint(
                "one entity annotation per (lemma, type, line, annotator)",
            ));
        }
        self.tx.execute(
            "INSERT INTO annotations (kind, client_token, line_id, annotator_id, lexicon_id, node_type_id)
             VALUES ('entity', ?1, ?2, ?3, ?4, ?5)",
            params![client_token, line_id, annotator_id, lexicon_id, node_type_id],
        )?;
        Ok(self.tx.last_insert_rowid())
    }

    #[allow(clippy::too_many_arguments)]
    pub fn insert_relation_annotation(
        &self,
        client_token: &str,
        source_lexicon_id: Id,
        target_lexicon_id: Id,
        relation_type_id: Id,
        detail: Option<&str>,
        line_id: Id,
        annotator_id: Id,
    ) -> Result<Id> {
        self.check_annotation_refs(client_token, line_id, annotator_id)?;
        self.require_row("lexicon", source_lexicon_id, "annotation source_lexicon_id references an existing LexiconEntry")?;
        self.require_row("lexicon", target_lexicon_id, "annotation target_lexicon_id references an existing LexiconEntry")?;
        self.require_row(
            "relation_types",
            relation_type_id,
            "annotation relation_type_id references an existing RelationTypeDef",
        )?;
        self.tx.execute(
            "INSERT INTO annotations (kind, client_token, line_id, annotator_id,
                                      source_lexicon_id, target_lexicon_id, relation_type_id, detail)
             VALUES ('relation', ?1, ?2, ?3, ?4, ?5, ?6, ?7)",
            params![
                client_token,
                line_id,
                annotator_id,
                source_lexicon_id,
                target_lexicon_id,
                relation_type_id,
                detail
            ],
        )?;
        Ok(self.tx.last_insert_rowid())
    }

    pub fn set_curation(&self, annotation_id: Id, state: CurationState) -> Result<()> {
        let n = self.tx.execute(
            "UPDATE annotations SET curation_state = ?1 WHERE id = ?2",
            params![state.as_str(), annotation_id],
        )?;
        if n == 0 {
            return Err(StoreError::NotFound(format!("annotation {annotation_id}")));
        }
        Ok(())
    }

    pub fn delete_annotation(&self, annotation_id: Id) -> Result<()> {
        let n = self
            .tx
            .execute("DELETE FROM annotations WHERE id = ?1", [annotation_id])?;
        if n == 0 {
            return Err(StoreError::NotFound(format!("annotation {annotation_id}")));
        }
        Ok(())
    }

    pub fn insert_user(&self, username: &str, email: &str, password_hash: &str) -> Result<Id> {
        require_nonempty("username", username)?;
        if queries::user_by_name(self, username)?.is_some() {
            return Err(StoreError::constraint("username is unique"));
        }
        self.tx.execute(
            "INSERT INTO users (username, email, password_hash) VALUES (?1, ?2, ?3)",
            params![username, email, password_hash],
        )?;
        Ok(self.tx.last_insert_rowid())
    }

    /// Replace the role set of `user_id`.
    pub fn set_roles(&self, user_id: Id, roles: &BTreeSet<Role>) -> Result<()> {
        self.require_row("users", user_id, "role user_id references an existing User")?;
        self.tx.execute("DELETE FROM user_roles WHERE user_id = ?1", [user_id])?;
        for role in roles {
            self.tx.execute(
                "INSERT INTO user_roles (user_id, role) VALUES (?1, ?2)",
                params![user_id, role.as_str()],
            )?;
        }
        Ok(())
    }

    pub fn append_role_audit(&self, actor_id: Id, target_id: Id, roles: &BTreeSet<Role>) -> Result<()> {
        let roles: Vec<&str> = roles.iter().map(|r| r.as_str()).collect();
        self.tx.execute(
            "INSERT INTO role_audit (actor_id, target_id, roles, at) VALUES (?1, ?2, ?3, ?4)",
            params![actor_id, target_id, roles.join(","), chrono::Utc::now().to_rfc3339()],
        )?;
        Ok(())
    }
}

/// Ontology labels become graph labels and edge types, so they may not
/// contain whitespace.
pub(crate) fn validate_label(label: &str) -> Result<()> {
    require_nonempty("type label", label)?;
    if label.chars().any(char::is_whitespace) {
        return Err(StoreError::Validation(format!(
            "type label `{label}` must not contain whitespace"
        )));
    }
    Ok(())
}
