//! Question templates: fill placeholders, run the query, tabulate and
//! export the result.
//!
//! How a placeholder `{i}` in the cypher text is filled depends on where
//! it sits:
//!
//! * inside a string literal that is the right operand of `=~`: the value
//!   is regex-escaped (unless the input is marked `raw`) and then escaped
//!   for the string literal, so by default it matches literally;
//! * inside any other string literal: escaped for the string literal;
//! * inside a backtick identifier: inserted as is;
//! * anywhere else: the value must be a single identifier-like word and not
//!   a keyword.
//!
//! Quote characters (`"`, `'`, `` ` ``) are refused in every position.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Edge, Node, PropertyGraph};
use crate::ingest::QueryTemplate;
use crate::qengine::{self, QueryError, ResultSet, VarKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TemplateInstance {
    pub gid: String,
    pub language: String,
    pub inputs: Vec<String>,
    pub question: String,
    pub query: String,
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template gid {gid} has no text for language `{language}`")]
    UnknownLanguage { gid: String, language: String },
    #[error("template gid {gid} takes {expected} input(s), got {got}")]
    Arity { gid: String, expected: usize, got: usize },
    #[error("input #{index} rejected: {reason}")]
    RejectedInput { index: usize, reason: String },
    #[error("template gid {gid} is malformed: {message}")]
    Definition { gid: String, message: String },
    #[error(transparent)]
    Query(#[from] QueryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Context {
    Bare,
    String,
    Regex,
    QuotedIdent,
}

/// Placeholder occurrences in `cypher`: (byte range, index, context).
fn scan(cypher: &str) -> Vec<(std::ops::Range<usize>, usize, Context)> {
    #[derive(PartialEq)]
    enum State {
        Normal,
        Str { quote: char, regex: bool },
        Backtick,
    }
    let mut out = Vec::new();
    let mut state = State::Normal;
    let mut after_regex_op = false;
    let mut chars = cypher.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c == '{' {
            let digits: String = cypher[i + 1..].chars().take_while(char::is_ascii_digit).collect();
            if !digits.is_empty() && cypher[i + 1 + digits.len()..].starts_with('}') {
                let end = i + digits.len() + 2;
                let context = match state {
                    State::Normal => Context::Bare,
                    State::Str { regex: true, .. } => Context::Regex,
                    State::Str { regex: false, .. } => Context::String,
                    State::Backtick => Context::QuotedIdent,
                };
                out.push((i..end, digits.parse().unwrap_or(usize::MAX), context));
                while chars.peek().is_some_and(|(j, _)| *j < end) {
                    chars.next();
                }
                after_regex_op = false;
                continue;
            }
        }
        match state {
            State::Normal => match c {
                '"' | '\'' => {
                    state = State::Str {
                        quote: c,
                        regex: after_regex_op,
                    }
                }
                '`' => state = State::Backtick,
                '=' if chars.peek().is_some_and(|(_, n)| *n == '~') => {
                    chars.next();
                    after_regex_op = true;
                    continue;
                }
                c if c.is_whitespace() => continue,
                _ => {}
            },
            State::Str { quote, .. } => {
                if c == '\\' {
                    chars.next();
                } else if c == quote {
                    state = State::Normal;
                }
            }
            State::Backtick => {
                if c == '`' {
                    state = State::Normal;
                }
            }
        }
        after_regex_op = false;
    }
    out
}

/// Body of a double-quoted query string literal holding `s`.
fn string_body(s: &str) -> String {
    let quoted = qengine::quote_string(s);
    quoted[1..quoted.len() - 1].to_string()
}

fn is_bare_word(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_') && !qengine::is_keyword(s)
}

fn replace_placeholders(text: &str, fill: impl Fn(usize) -> String) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for (range, index) in scan_all(text) {
        out.push_str(&text[last..range.start]);
        out.push_str(&fill(index));
        last = range.end;
    }
    out.push_str(&text[last..]);
    out
}

/// Placeholder occurrences in plain text (no quoting rules).
fn scan_all(text: &str) -> Vec<(std::ops::Range<usize>, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while let Some(off) = text[i..].find('{') {
        let start = i + off;
        let digits: String = text[start + 1..].chars().take_while(char::is_ascii_digit).collect();
        let end = start + 1 + digits.len();
        if !digits.is_empty() && text[end..].starts_with('}') {
            out.push((start..end + 1, digits.parse().unwrap_or(usize::MAX)));
            i = end + 1;
        } else {
            i = start + 1;
        }
    }
    out
}

/// Fill the question text and the query of `template` for `language`.
pub fn instantiate(template: &QueryTemplate, language: &str, inputs: &[String]) -> Result<TemplateInstance, TemplateError> {
    let gid = &template.gid;
    let text = template.texts.get(language).ok_or_else(|| TemplateError::UnknownLanguage {
        gid: gid.clone(),
        language: language.to_string(),
    })?;
    if inputs.len() != template.inputs.len() {
        return Err(TemplateError::Arity {
            gid: gid.clone(),
            expected: template.inputs.len(),
            got: inputs.len(),
        });
    }
    for (index, value) in inputs.iter().enumerate() {
        if value.is_empty() {
            return Err(TemplateError::RejectedInput {
                index,
                reason: "empty value".into(),
            });
        }
        if let Some(q) = value.chars().find(|c| matches!(c, '"' | '\'' | '`')) {
            return Err(TemplateError::RejectedInput {
                index,
                reason: format!("quote character {q} is not allowed"),
            });
        }
    }

    let mut query = String::with_capacity(template.cypher.len());
    let mut last = 0;
    for (range, index, context) in scan(&template.cypher) {
        let value = inputs.get(index).ok_or_else(|| TemplateError::Definition {
            gid: gid.clone(),
            message: format!("placeholder {{{index}}} has no input"),
        })?;
        let rendered = match context {
            Context::Bare => {
                if !is_bare_word(value) {
                    return Err(TemplateError::RejectedInput {
                        index,
                        reason: format!("`{value}` must be a single word (letters, digits, _) and not a keyword"),
                    });
                }
                value.clone()
            }
            Context::QuotedIdent => value.clone(),
            Context::String => string_body(value),
            Context::Regex if template.inputs[index].raw => string_body(value),
            Context::Regex => string_body(&regex::escape(value)),
        };
        query.push_str(&template.cypher[last..range.start]);
        query.push_str(&rendered);
        last = range.end;
    }
    query.push_str(&template.cypher[last..]);

    if let Err(e) = qengine::parse_query(&query) {
        return Err(TemplateError::Definition {
            gid: gid.clone(),
            message: format!("rendered query does not parse: {e}"),
        });
    }
    let question = replace_placeholders(text, |i| inputs.get(i).cloned().unwrap_or_default());
    Ok(TemplateInstance {
        gid: gid.clone(),
        language: language.to_string(),
        inputs: inputs.to_vec(),
        question,
        query,
    })
}

/// Check that a template renders a parseable query for every language and
/// a set of sample inputs. Inputs refused by the guards are not failures.
pub fn lint(template: &QueryTemplate) -> Result<(), TemplateError> {
    const SAMPLES: [&str; 5] = ["x", "Rama", "C++", "two words", "a.*\\d{2}"];
    for language in template.texts.keys() {
        for sample in SAMPLES {
            let inputs = vec![sample.to_string(); template.inputs.len()];
            match instantiate(template, language, &inputs) {
                Ok(_) | Err(TemplateError::RejectedInput { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(())
}

/// Tabular and graph view of a query result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryOutput {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub subgraph: SubgraphOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubgraphOutput {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

/// A node renders as `lemma (LABEL, ...)`, an edge as `TYPE` or
/// `TYPE (detail)`.
pub fn render_cell(graph: &PropertyGraph, kind: VarKind, id: &str) -> String {
    match kind {
        VarKind::Node => match graph.node(id) {
            Some(n) => {
                let labels: Vec<&str> = n.labels.iter().map(String::as_str).collect();
                format!("{} ({})", n.lemma(), labels.join(", "))
            }
            None => id.to_string(),
        },
        VarKind::Edge => match graph.edge(id) {
            Some(e) => match e.detail() {
                Some(d) => format!("{} ({d})", e.edge_type),
                None => e.edge_type.clone(),
            },
            None => id.to_string(),
        },
    }
}

/// Project `result` to the columns named in `outputs` that the query
/// returns (all columns when `outputs` is empty), drop duplicate rows and
/// render cells.
pub fn tabulate(graph: &PropertyGraph, result: &ResultSet, outputs: &[String]) -> QueryOutput {
    let keep: Vec<usize> = if outputs.is_empty() {
        (0..result.columns.len()).collect()
    } else {
        outputs
            .iter()
            .filter_map(|o| result.columns.iter().position(|c| c.name == *o))
            .fold(Vec::new(), |mut acc, i| {
                if !acc.contains(&i) {
                    acc.push(i);
                }
                acc
            })
    };
    let mut seen = std::collections::HashSet::new();
    let mut rows = Vec::new();
    for row in &result.rows {
        let ids: Vec<&String> = keep.iter().map(|&i| &row[i]).collect();
        if seen.insert(ids.clone()) {
            rows.push(
                keep.iter()
                    .zip(ids)
                    .map(|(&i, id)| render_cell(graph, result.columns[i].kind, id))
                    .collect(),
            );
        }
    }
    QueryOutput {
        columns: keep.iter().map(|&i| result.columns[i].name.clone()).collect(),
        rows,
        subgraph: SubgraphOutput {
            nodes: result.subgraph.nodes.iter().filter_map(|id| graph.node(id).cloned()).collect(),
            edges: result.subgraph.edges.iter().filter_map(|id| graph.edge(id).cloned()).collect(),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemplateRun {
    pub instance: TemplateInstance,
    #[serde(flatten)]
    pub output: QueryOutput,
}

pub fn run(
    graph: &PropertyGraph,
    template: &QueryTemplate,
    language: &str,
    inputs: &[String],
) -> Result<TemplateRun, TemplateError> {
    let instance = instantiate(template, language, inputs)?;
    let result = qengine::run(graph, &instance.query)?;
    let output = tabulate(graph, &result, &template.outputs);
    Ok(TemplateRun { instance, output })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
    Text,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Csv => "csv",
            ExportFormat::Json => "json",
            ExportFormat::Text => "txt",
        }
    }

    pub fn mime(self) -> &'static str {
        match self {
            ExportFormat::Csv => "text/csv; charset=utf-8",
            ExportFormat::Json => "application/json",
            ExportFormat::Text => "text/plain; charset=utf-8",
        }
    }
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            "text" | "txt" => Ok(ExportFormat::Text),
            other => Err(format!("unknown export format `{other}` (csv, json, text)")),
        }
    }
}

/// Serialize a result. CSV has a header row and CRLF line ends; text is a
/// space-padded table with a dashed rule under the header.
pub fn export_result(output: &QueryOutput, format: ExportFormat) -> Vec<u8> {
    match format {
        ExportFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::CRLF)
                .from_writer(Vec::new());
            w.write_record(&output.columns).expect("in-memory write");
            for row in &output.rows {
                w.write_record(row).expect("in-memory write");
            }
            w.into_inner().expect("in-memory flush")
        }
        ExportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(output).expect("serializable");
            out.push(b'\n');
            out
        }
        ExportFormat::Text => text_table(output).into_bytes(),
    }
}

fn text_table(output: &QueryOutput) -> String {
    let clean = |s: &str| s.replace(['\n', '\r', '\t'], " ");
    let header: Vec<String> = output.columns.iter().map(|c| clean(c)).collect();
    let body: Vec<Vec<String>> = output.rows.iter().map(|r| r.iter().map(|c| clean(c)).collect()).collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            let _ = write!(s, "{cell:<w$}");
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(&mut out, &header);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    line(&mut out, &rule);
    for row in &body {
        line(&mut out, row);
    }
    out
}

#[cfg(test)]
mod tests;
