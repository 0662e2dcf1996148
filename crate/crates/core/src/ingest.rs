//! Chapter and query-template file formats.
//!
//! A chapter file is a JSON list of line objects:
//!
//! ```json
//! [{"verse": 1, "text": "To sainted Nárad, prince of those", "split": "",
//!   "analysis": {"source": "spacy", "text": "",
//!                "tokens": [{"Word": "Nárad", "Lemma": "Nárad", "Tag": "NNP", "POS": "PROPN"}]}}]
//! ```
//!
//! A template file is a JSON list of objects with the keys `gid`, `cypher`,
//! `input`, `output`, `texts` and `groups`. Both formats are strict JSON.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use thiserror::Error;

use crate::store::{queries, Id, Store, StoreError};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input is not valid UTF-8 (first bad byte at offset {offset})")]
    Encoding { offset: usize },
    #[error("malformed JSON at byte {offset} (line {line}, column {column}): {message}")]
    Json {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}{message}", .line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Validation { line: Option<usize>, message: String },
    #[error("template #{index}{}: {message}", .gid.as_ref().map(|g| format!(" (gid {g})")).unwrap_or_default())]
    Template {
        index: usize,
        gid: Option<String>,
        message: String,
    },
    #[error("template gid {gid}: placeholder {{{placeholder}}} used but only {inputs} input(s) declared")]
    Arity {
        gid: String,
        placeholder: usize,
        inputs: usize,
    },
    #[error("corpus {0} not found")]
    CorpusNotFound(Id),
    #[error("chapter `{0}` already exists in this corpus")]
    DuplicateChapter(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Unknown keys are an error.
    #[default]
    Strict,
    /// Unknown keys are kept on the record but otherwise ignored.
    Lenient,
}

/// Ordered key/value attributes of one analysis token.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenAttributes(pub Vec<(String, String)>);

impl Serialize for TokenAttributes {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for TokenAttributes {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct AttrVisitor;

        impl<'de> Visitor<'de> for AttrVisitor {
            type Value = TokenAttributes;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an object of scalar token attributes")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut out = Vec::new();
                while let Some((key, value)) = map.next_entry::<String, Value>()? {
                    let text = match value {
                        Value::String(s) => s,
                        Value::Number(n) => n.to_string(),
                        Value::Bool(b) => b.to_string(),
                        other => {
                            return Err(de::Error::custom(format!(
                                "token attribute `{key}` must be a scalar, found {other}"
                            )))
                        }
                    };
                    if out.iter().any(|(k, _)| *k == key) {
                        return Err(de::Error::custom(format!("duplicate token attribute `{key}`")));
                    }
                    out.push((key, text));
                }
                Ok(TokenAttributes(out))
            }
        }

        deserializer.deserialize_map(AttrVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Analysis {
    #[serde(default)]
    pub source: String,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub tokens: Vec<TokenAttributes>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineRecord {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
    /// Verse id as given (number or string), carried through as text.
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "scalar_text",
        serialize_with = "verse_out"
    )]
    pub verse: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<Analysis>,
    #[serde(flatten, skip_serializing)]
    pub extra: BTreeMap<String, Value>,
}

fn scalar_text<'de, D: Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    match Value::deserialize(d)? {
        Value::Null => Ok(None),
        Value::String(s) => Ok(Some(s)),
        Value::Number(n) => Ok(Some(n.to_string())),
        other => Err(de::Error::custom(format!(
            "expected a number or string, found {other}"
        ))),
    }
}

fn verse_out<S: Serializer>(v: &Option<String>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(text) => match text.parse::<i64>() {
            Ok(n) if n.to_string() == *text => s.serialize_i64(n),
            _ => s.serialize_str(text),
        },
        None => s.serialize_none(),
    }
}

/// One verse: a maximal run of consecutive lines sharing a `verse` value,
/// or a single line without one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerseGroup {
    pub mark: Option<String>,
    pub lines: std::ops::Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChapterFile {
    pub lines: Vec<LineRecord>,
}

impl ChapterFile {
    pub fn verse_groups(&self) -> Vec<VerseGroup> {
        let mut groups: Vec<VerseGroup> = Vec::new();
        for (i, line) in self.lines.iter().enumerate() {
            match (groups.last_mut(), &line.verse) {
                (Some(last), Some(mark)) if last.mark.as_ref() == Some(mark) => last.lines.end = i + 1,
                _ => groups.push(VerseGroup {
                    mark: line.verse.clone(),
                    lines: i..i + 1,
                }),
            }
        }
        groups
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.lines).expect("chapter records always serialize")
    }
}

fn utf8(bytes: &[u8]) -> Result<&str, IngestError> {
    std::str::from_utf8(bytes).map_err(|e| IngestError::Encoding {
        offset: e.valid_up_to(),
    })
}

/// Byte offset of a 1-based (line, column) position as reported by serde_json.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

fn parse_json(bytes: &[u8]) -> Result<Value, IngestError> {
    let text = utf8(bytes)?;
    serde_json::from_str(text).map_err(|e| IngestError::Json {
        offset: byte_offset(text, e.line(), e.column()),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn parse_chapter(bytes: &[u8]) -> Result<ChapterFile, IngestError> {
    parse_chapter_with(bytes, ParseMode::Strict)
}

pub fn parse_chapter_with(bytes: &[u8], mode: ParseMode) -> Result<ChapterFile, IngestError> {
    let items = match parse_json(bytes)? {
        Value::Array(items) => items,
        _ => {
            return Err(IngestError::Validation {
                line: None,
                message: "a chapter file is a JSON list of line objects".into(),
            })
        }
    };
    if items.is_empty() {
        return Err(IngestError::Validation {
            line: None,
            message: "chapter has no lines".into(),
        });
    }
    let mut lines = Vec::with_capacity(items.len());
    for (index, item) in items.into_iter().enumerate() {
        let invalid = |message: String| IngestError::Validation {
            line: Some(index),
            message,
        };
        if !item.is_object() {
            return Err(invalid("expected a line object".into()));
        }
        if item.get("text").is_none() {
            return Err(invalid("missing required key `text`".into()));
        }
        let record: LineRecord = serde_json::from_value(item).map_err(|e| invalid(e.to_string()))?;
        if record.text.is_empty() {
            return Err(invalid("`text` must be non-empty".into()));
        }
        if mode == ParseMode::Strict {
            if let Some(key) = record.extra.keys().next() {
                return Err(invalid(format!("unknown key `{key}`")));
            }
        }
        lines.push(record);
    }
    Ok(ChapterFile { lines })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub chapter_id: Id,
    pub verses: usize,
    pub lines: usize,
    pub tokens: usize,
}

/// Insert a parsed chapter into corpus `corpus_id` in one transaction.
pub fn ingest_chapter(
    store: &Store,
    corpus_id: Id,
    name: &str,
    chapter: &ChapterFile,
) -> Result<IngestSummary, IngestError> {
    if name.is_empty() {
        return Err(IngestError::Validation {
            line: None,
            message: "chapter name must be non-empty".into(),
        });
    }
    store.write(|tx| {
        if queries::corpus(tx, corpus_id)?.is_none() {
            return Err(IngestError::CorpusNotFound(corpus_id));
        }
        if queries::chapters(tx, corpus_id)?.iter().any(|c| c.name == name) {
            return Err(IngestError::DuplicateChapter(name.to_string()));
        }
        let chapter_id = tx.insert_chapter(corpus_id, name)?;
        let mut summary = IngestSummary {
            chapter_id,
            verses: 0,
            lines: 0,
            tokens: 0,
        };
        for group in chapter.verse_groups() {
            let verse_id = tx.insert_verse(chapter_id, group.mark.as_deref())?;
            summary.verses += 1;
            for ordinal in group.lines {
                let record = &chapter.lines[ordinal];
                let line_id = tx.insert_line(
                    verse_id,
                    ordinal as u32,
                    &record.text,
                    record.split.as_deref(),
                )?;
                summary.lines += 1;
                if let Some(analysis) = &record.analysis {
                    tx.insert_line_analysis(line_id, &analysis.source, &analysis.text)?;
                    for (position, attrs) in analysis.tokens.iter().enumerate() {
                        tx.insert_token(line_id, position as u32, &attrs.0)?;
                        summary.tokens += 1;
                    }
                }
            }
        }
        Ok(summary)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    Entity,
    EntityType,
    Relation,
    RelationDetail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateInput {
    pub id: String,
    #[serde(rename = "type")]
    pub kind: InputKind,
    /// Insert the value into a `=~` literal unescaped, as a regular expression.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub raw: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryTemplate {
    #[serde(deserialize_with = "gid_text")]
    pub gid: String,
    pub cypher: String,
    #[serde(rename = "input", default)]
    pub inputs: Vec<TemplateInput>,
    #[serde(rename = "output", default)]
    pub outputs: Vec<String>,
    pub texts: BTreeMap<String, String>,
    pub groups: BTreeMap<String, String>,
}

fn gid_text<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    scalar_text(d)?.ok_or_else(|| de::Error::custom("gid must not be null"))
}

fn placeholder_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{(\d+)\}").expect("static pattern"))
}

/// Indices of every `{i}` placeholder in `text`, in order of appearance.
pub fn placeholders(text: &str) -> Vec<usize> {
    placeholder_pattern()
        .captures_iter(text)
        .filter_map(|c| c[1].parse().ok())
        .collect()
}

impl QueryTemplate {
    /// Check the cross-field invariants of a template.
    pub fn validate(&self, index: usize) -> Result<(), IngestError> {
        let fail = |message: String| IngestError::Template {
            index,
            gid: Some(self.gid.clone()),
            message,
        };
        if self.cypher.trim().is_empty() {
            return Err(fail("`cypher` must be non-empty".into()));
        }
        if self.texts.is_empty() {
            return Err(fail("`texts` must name at least one language".into()));
        }
        if !self.texts.keys().any(|lang| self.groups.contains_key(lang)) {
            return Err(fail("`texts` and `groups` share no language".into()));
        }
        let mut ids = BTreeSet::new();
        for input in &self.inputs {
            if !ids.insert(input.id.as_str()) {
                return Err(fail(format!("duplicate input id `{}`", input.id)));
            }
        }
        let used = std::iter::once(self.cypher.as_str())
            .chain(self.texts.values().map(String::as_str))
            .flat_map(placeholders);
        for placeholder in used {
            if placeholder >= self.inputs.len() {
                return Err(IngestError::Arity {
                    gid: self.gid.clone(),
                    placeholder,
                    inputs: self.inputs.len(),
                });
            }
        }
        Ok(())
    }
}

pub fn parse_templates(bytes: &[u8]) -> Result<Vec<QueryTemplate>, IngestError> {
    let items = match parse_json(bytes)? {
        Value::Array(items) => items,
        _ => {
            return Err(IngestError::Validation {
                line: None,
                message: "a template file is a JSON list of query objects".into(),
            })
        }
    };
    let mut out = Vec::with_capacity(items.len());
    for (index, item) in items.into_iter().enumerate() {
        let gid = item.get("gid").map(|g| match g {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        });
        let template: QueryTemplate =
            serde_json::from_value(item).map_err(|e| IngestError::Template {
                index,
                gid: gid.clone(),
                message: e.to_string(),
            })?;
        template.validate(index)?;
        out.push(template);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const APPENDIX_CHAPTER: &str = r#"[
    {
        "verse": 1,
        "text": "To sainted Nárad, prince of those",
        "split": "",
        "analysis": {
            "source": "spacy",
            "text": "",
            "tokens": [
                {"Word": "Nárad", "Lemma": "Nárad", "Tag": "NNP", "POS": "PROPN"},
                {"Word": "prince", "Lemma": "prince", "Tag": "NN", "POS": "NOUN"}
            ]
        }
    }
]"#;

    const APPENDIX_TEMPLATE: &str = r#"[
    {
        "gid": "1",
        "cypher": "MATCH (p1)-[r:IS_FATHER_OF]->(p2) WHERE p2.lemma =~ \"{0}\" RETURN *",
        "input": [{"id": "p", "type": "entity"}],
        "output": ["p1", "r", "p2"],
        "texts": {"english": "Who is the father of {0}?"},
        "groups": {"english": "Kinship"}
    }
]"#;

    #[test]
    fn appendix_chapter() {
        let ch = parse_chapter(APPENDIX_CHAPTER.as_bytes()).unwrap();
        assert_eq!(ch.lines.len(), 1);
        let line = &ch.lines[0];
        assert_eq!(line.verse.as_deref(), Some("1"));
        assert_eq!(line.text, "To sainted Nárad, prince of those");
        let analysis = line.analysis.as_ref().unwrap();
        assert_eq!(analysis.source, "spacy");
        assert_eq!(analysis.text, "");
        assert_eq!(analysis.tokens.len(), 2);
        let keys: Vec<&str> = analysis.tokens[0].0.iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(keys, ["Word", "Lemma", "Tag", "POS"]);
        assert_eq!(analysis.tokens[1].0[1], ("Lemma".into(), "prince".into()));
    }

    #[test]
    fn empty_chapter_rejected() {
        let err = parse_chapter(b"[]").unwrap_err();
        assert!(matches!(err, IngestError::Validation { line: None, .. }), "{err}");
    }

    #[test]
    fn malformed_json_reports_offset() {
        // the unnormalized form with a trailing comma
        let src = "[\n  {\"text\": \"a\"},\n]";
        match parse_chapter(src.as_bytes()).unwrap_err() {
            IngestError::Json { offset, line, .. } => {
                assert_eq!(line, 3);
                assert_eq!(&src[offset..offset + 1], "]");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_text_names_line() {
        let err = parse_chapter(br#"[{"text": "a"}, {"split": "b"}]"#).unwrap_err();
        match err {
            IngestError::Validation { line, message } => {
                assert_eq!(line, Some(1));
                assert!(message.contains("text"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_strict_vs_lenient() {
        let src = br#"[{"text": "a", "colour": "red"}]"#;
        assert!(matches!(
            parse_chapter(src),
            Err(IngestError::Validation { line: Some(0), .. })
        ));
        let ch = parse_chapter_with(src, ParseMode::Lenient).unwrap();
        assert_eq!(ch.lines[0].extra["colour"], "red");
    }

    #[test]
    fn non_utf8_rejected() {
        assert!(matches!(
            parse_chapter(b"[{\"text\": \"\xff\"}]"),
            Err(IngestError::Encoding { offset: 11 })
        ));
    }

    #[test]
    fn verse_grouping_consecutive_values() {
        let ch = parse_chapter(
            br#"[{"text":"a","verse":1},{"text":"b","verse":1},{"text":"c","verse":2}]"#,
        )
        .unwrap();
        let groups = ch.verse_groups();
        let sizes: Vec<usize> = groups.iter().map(|g| g.lines.len()).collect();
        assert_eq!(sizes, [2, 1]);

        // lines without a verse value are singletons; equal values split by
        // another value are distinct verses
        let ch = parse_chapter(
            br#"[{"text":"a"},{"text":"b"},{"text":"c","verse":"x"},{"text":"d","verse":"y"},{"text":"e","verse":"x"}]"#,
        )
        .unwrap();
        assert_eq!(ch.verse_groups().len(), 5);
    }

    #[test]
    fn appendix_template() {
        let ts = parse_templates(APPENDIX_TEMPLATE.as_bytes()).unwrap();
        assert_eq!(ts.len(), 1);
        let t = &ts[0];
        assert_eq!(t.gid, "1");
        assert_eq!(t.inputs.len(), 1);
        assert_eq!(t.inputs[0].kind, InputKind::Entity);
        assert_eq!(t.outputs, ["p1", "r", "p2"]);
        assert_eq!(t.texts["english"], "Who is the father of {0}?");
        assert_eq!(t.groups["english"], "Kinship");
    }

    #[test]
    fn numeric_gid_accepted() {
        let src = APPENDIX_TEMPLATE.replace("\"gid\": \"1\"", "\"gid\": 7");
        assert_eq!(parse_templates(src.as_bytes()).unwrap()[0].gid, "7");
    }

    #[test]
    fn arity_error_names_gid() {
        let src = APPENDIX_TEMPLATE.replace("=~ \\\"{0}\\\"", "=~ \\\"{2}\\\"");
        match parse_templates(src.as_bytes()).unwrap_err() {
            IngestError::Arity { gid, placeholder, inputs } => {
                assert_eq!((gid.as_str(), placeholder, inputs), ("1", 2, 1));
            }
            other => panic!("unexpected {other:?}"),
        }
        let src = APPENDIX_TEMPLATE.replace("father of {0}", "father of {1}");
        assert!(matches!(
            parse_templates(src.as_bytes()),
            Err(IngestError::Arity { placeholder: 1, .. })
        ));
    }

    #[test]
    fn two_kind_template_accepted() {
        let src = r#"[{"gid": "2",
            "cypher": "MATCH (a)-[r]->(b) WHERE a.lemma =~ \"{0}\" AND r.detail = \"{1}\" RETURN a, b",
            "input": [{"id": "a", "type": "entity"}, {"id": "d", "type": "relation_detail"}],
            "output": ["a", "b"],
            "texts": {"english": "Who relates to {0} as {1}?"},
            "groups": {"english": "Misc"}}]"#;
        let ts = parse_templates(src.as_bytes()).unwrap();
        assert_eq!(ts[0].inputs[1].kind, InputKind::RelationDetail);
    }

    #[test]
    fn bad_input_kind_and_language_mismatch() {
        let src = APPENDIX_TEMPLATE.replace("\"entity\"", "\"person\"");
        assert!(matches!(
            parse_templates(src.as_bytes()),
            Err(IngestError::Template { index: 0, .. })
        ));
        let src = APPENDIX_TEMPLATE.replace("\"english\": \"Kinship\"", "\"hindi\": \"Kinship\"");
        assert!(matches!(
            parse_templates(src.as_bytes()),
            Err(IngestError::Template { .. })
        ));
    }

    #[test]
    fn placeholder_scan() {
        assert_eq!(placeholders("a {0} b {12} {x} {1}"), [0, 12, 1]);
    }
}
