use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::auth::Role;

/// Row identifier. Identifiers are never reused within one store.
pub type Id = i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurationState {
    Proposed,
    Kept,
    Discarded,
}

impl CurationState {
    pub fn as_str(self) -> &'static str {
        match self {
            CurationState::Proposed => "proposed",
            CurationState::Kept => "kept",
            CurationState::Discarded => "discarded",
        }
    }
}

impl fmt::Display for CurationState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CurationState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "proposed" => Ok(CurationState::Proposed),
            "kept" => Ok(CurationState::Kept),
            "discarded" => Ok(CurationState::Discarded),
            other => Err(format!("unknown curation state `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub id: Id,
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chapter {
    pub id: Id,
    pub corpus_id: Id,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verse {
    pub id: Id,
    pub chapter_id: Id,
    pub verse_mark: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Line {
    pub id: Id,
    pub verse_id: Id,
    pub chapter_id: Id,
    /// 0-based position within the chapter.
    pub ordinal: u32,
    pub text: String,
    pub split: Option<String>,
}

/// Per-line analysis header (`analysis.source` / `analysis.text`), stored verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineAnalysis {
    pub line_id: Id,
    pub source: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisToken {
    pub id: Id,
    pub line_id: Id,
    pub position: u32,
    /// Opaque key/value pairs in input order.
    pub attributes: Vec<(String, String)>,
}

impl AnalysisToken {
    pub fn attribute(&self, key: &str) -> Option<&str> {
        self.attributes
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub id: Id,
    pub lemma: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OntologyKind {
    Node,
    Relation,
}

impl OntologyKind {
    pub(crate) fn table(self) -> &'static str {
        match self {
            OntologyKind::Node => "node_types",
            OntologyKind::Relation => "relation_types",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OntologyKind::Node => "node",
            OntologyKind::Relation => "relation",
        }
    }
}

impl FromStr for OntologyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "node" => Ok(OntologyKind::Node),
            "relation" => Ok(OntologyKind::Relation),
            other => Err(format!("unknown ontology kind `{other}`")),
        }
    }
}

/// A node type or relation type of the ontology.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeDef {
    pub id: Id,
    pub kind: OntologyKind,
    pub label: String,
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityAnnotation {
    pub id: Id,
    pub client_token: String,
    pub lexicon_id: Id,
    pub node_type_id: Id,
    pub line_id: Id,
    pub annotator_id: Id,
    pub curation_state: CurationState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationAnnotation {
    pub id: Id,
    pub client_token: String,
    pub source_lexicon_id: Id,
    pub target_lexicon_id: Id,
    pub relation_type_id: Id,
    pub detail: Option<String>,
    pub line_id: Id,
    pub annotator_id: Id,
    pub curation_state: CurationState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Annotation {
    Entity(EntityAnnotation),
    Relation(RelationAnnotation),
}

impl Annotation {
    pub fn id(&self) -> Id {
        match self {
            Annotation::Entity(a) => a.id,
            Annotation::Relation(a) => a.id,
        }
    }

    pub fn client_token(&self) -> &str {
        match self {
            Annotation::Entity(a) => &a.client_token,
            Annotation::Relation(a) => &a.client_token,
        }
    }

    pub fn annotator_id(&self) -> Id {
        match self {
            Annotation::Entity(a) => a.annotator_id,
            Annotation::Relation(a) => a.annotator_id,
        }
    }

    pub fn line_id(&self) -> Id {
        match self {
            Annotation::Entity(a) => a.line_id,
            Annotation::Relation(a) => a.line_id,
        }
    }

    pub fn curation_state(&self) -> CurationState {
        match self {
            Annotation::Entity(a) => a.curation_state,
            Annotation::Relation(a) => a.curation_state,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRecord {
    pub id: Id,
    pub username: String,
    pub email: String,
    #[serde(skip_serializing)]
    pub password_hash: String,
    pub roles: BTreeSet<Role>,
}
