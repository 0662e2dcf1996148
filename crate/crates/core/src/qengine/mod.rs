//! Parser and evaluator for a small Cypher subset.
//!
//! ```text
//! query    := MATCH pattern ("," pattern)* [WHERE or] RETURN ("*" | var ("," var)*) [LIMIT int]
//! pattern  := node (edge node)*
//! node     := "(" [var] [":" label] ")"
//! edge     := "-[" [var] [":" type] "]->" | "<-[" ... "]-" | "-[" ... "]-" | "-->" | "<--" | "--"
//! or       := and (OR and)*
//! and      := not (AND not)*
//! not      := NOT not | "(" or ")" | var "." key ("=" | "<>") literal | var "." key "=~" string
//! literal  := string | ["-"] int | TRUE | FALSE
//! ```
//!
//! Keywords are case-insensitive, labels and types are not. Strings take
//! single or double quotes with `\\ \" \' \n \t \r \uXXXX` escapes;
//! identifiers may be backtick-quoted.
//!
//! Semantics differ from Cypher in two places: results are sets (distinct
//! rows over the returned variables, sorted by element ids) and `LIMIT` is
//! applied after sorting. `=~` is an anchored full-string match. A
//! comparison against a missing property is false, and so is `=` between
//! values of different types. Within one MATCH distinct edge atoms bind
//! distinct edges.

mod ast;
mod eval;
mod lexer;
mod oracle;
mod parser;

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::graph::PropertyGraph;

pub use ast::*;
pub use oracle::brute_force_oracle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Position {
    /// Byte offset into the query text.
    pub offset: usize,
    pub line: usize,
    /// 1-based, in characters.
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SyntaxError {
    pub pos: Position,
    pub found: String,
    pub expected: Vec<String>,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at {}: found {}, expected ", self.pos, self.found)?;
        match self.expected.as_slice() {
            [one] => f.write_str(one),
            many => write!(f, "one of {}", many.join(", ")),
        }
    }
}

impl std::error::Error for SyntaxError {}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("semantic error at {pos}: {message}")]
    Semantic { pos: Position, message: String },
    #[error("invalid regular expression {pattern:?}: {message}")]
    Regex { pattern: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Column {
    pub name: String,
    pub kind: VarKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Subgraph {
    pub nodes: BTreeSet<String>,
    pub edges: BTreeSet<String>,
}

/// Rows hold element ids, one per column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResultSet {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<String>>,
    /// Elements of the returned rows plus the endpoints of returned edges.
    pub subgraph: Subgraph,
}

pub fn parse_query(text: &str) -> Result<QueryAst, QueryError> {
    parser::parse(text)
}

pub fn evaluate(graph: &PropertyGraph, ast: &QueryAst) -> Result<ResultSet, QueryError> {
    eval::evaluate(graph, ast)
}

/// Parse and evaluate.
pub fn run(graph: &PropertyGraph, text: &str) -> Result<ResultSet, QueryError> {
    evaluate(graph, &parse_query(text)?)
}

pub(crate) fn compile_regex(pattern: &str) -> Result<regex::Regex, QueryError> {
    regex::Regex::new(&format!("^(?:{pattern})$")).map_err(|e| QueryError::Regex {
        pattern: pattern.to_string(),
        message: e.to_string(),
    })
}

pub(crate) fn columns_of(ast: &QueryAst) -> Vec<Column> {
    ast.columns()
        .into_iter()
        .map(|(name, kind)| Column { name, kind })
        .collect()
}

/// Shared final step: the subgraph induced by the projected rows.
pub(crate) fn subgraph_of(graph: &PropertyGraph, columns: &[Column], rows: &[Vec<String>]) -> Subgraph {
    let mut sub = Subgraph::default();
    for row in rows {
        for (col, id) in columns.iter().zip(row) {
            match col.kind {
                VarKind::Node => {
                    sub.nodes.insert(id.clone());
                }
                VarKind::Edge => {
                    let e = graph.edge(id).expect("bound edge exists");
                    sub.nodes.insert(e.source.clone());
                    sub.nodes.insert(e.target.clone());
                    sub.edges.insert(id.clone());
                }
            }
        }
    }
    sub
}

pub(crate) fn literal_equals(prop: &Value, lit: &Literal) -> bool {
    match (prop, lit) {
        (Value::String(a), Literal::String(b)) => a == b,
        (Value::Number(a), Literal::Integer(b)) => a.as_i64() == Some(*b),
        (Value::Bool(a), Literal::Boolean(b)) => a == b,
        _ => false,
    }
}

#[cfg(test)]
mod tests;
