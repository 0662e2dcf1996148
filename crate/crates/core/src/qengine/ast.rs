use std::fmt::{self, Write as _};

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryAst {
    pub patterns: Vec<PathPattern>,
    pub filter: Option<BoolExpr>,
    pub returns: ReturnClause,
    pub limit: Option<u64>,
}

/// `start (edge node)*`
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathPattern {
    pub start: NodeAtom,
    pub steps: Vec<(EdgeAtom, NodeAtom)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct NodeAtom {
    pub var: Option<String>,
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeAtom {
    pub var: Option<String>,
    pub edge_type: Option<String>,
    pub direction: Direction,
}

/// Orientation relative to the written order of the two node atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `-[]->`
    Right,
    /// `<-[]-`
    Left,
    /// `-[]-`
    Undirected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum BoolExpr {
    Or(Box<BoolExpr>, Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Not(Box<BoolExpr>),
    Cmp(Comparison),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Comparison {
    pub var: String,
    pub key: String,
    pub op: CmpOp,
    pub value: Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CmpOp {
    Eq,
    Ne,
    /// Full-string regular expression match.
    Matches,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Literal {
    String(String),
    Integer(i64),
    Boolean(bool),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ReturnClause {
    Star,
    Vars(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Node,
    Edge,
}

impl QueryAst {
    /// Named variables in order of first appearance, with their kind.
    pub fn variables(&self) -> Vec<(String, VarKind)> {
        let mut out: Vec<(String, VarKind)> = Vec::new();
        let mut push = |var: &Option<String>, kind| {
            if let Some(v) = var {
                if !out.iter().any(|(n, _)| n == v) {
                    out.push((v.clone(), kind));
                }
            }
        };
        for p in &self.patterns {
            push(&p.start.var, VarKind::Node);
            for (e, n) in &p.steps {
                push(&e.var, VarKind::Edge);
                push(&n.var, VarKind::Node);
            }
        }
        out
    }

    /// Result columns: the RETURN list, or every named variable for `*`.
    pub fn columns(&self) -> Vec<(String, VarKind)> {
        let vars = self.variables();
        match &self.returns {
            ReturnClause::Star => vars,
            ReturnClause::Vars(names) => names
                .iter()
                .filter_map(|n| vars.iter().find(|(v, _)| v == n).cloned())
                .collect(),
        }
    }
}

pub(crate) const KEYWORDS: [&str; 9] = ["MATCH", "WHERE", "RETURN", "LIMIT", "AND", "OR", "NOT", "TRUE", "FALSE"];

pub(crate) fn is_keyword(word: &str) -> bool {
    KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(word))
}

pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

struct Ident<'a>(&'a str);

impl fmt::Display for Ident<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.0;
        let plain = s.chars().next().is_some_and(is_ident_start) && s.chars().all(is_ident_char) && !is_keyword(s);
        if plain {
            f.write_str(s)
        } else {
            write!(f, "`{}`", s.replace('`', "``"))
        }
    }
}

pub(crate) fn quote_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl fmt::Display for NodeAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        if let Some(v) = &self.var {
            write!(f, "{}", Ident(v))?;
        }
        if let Some(l) = &self.label {
            write!(f, ":{}", Ident(l))?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for EdgeAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut inner = String::new();
        if let Some(v) = &self.var {
            inner.push_str(&Ident(v).to_string());
        }
        if let Some(t) = &self.edge_type {
            inner.push(':');
            inner.push_str(&Ident(t).to_string());
        }
        match self.direction {
            Direction::Right => write!(f, "-[{inner}]->"),
            Direction::Left => write!(f, "<-[{inner}]-"),
            Direction::Undirected => write!(f, "-[{inner}]-"),
        }
    }
}

impl fmt::Display for PathPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.start)?;
        for (e, n) in &self.steps {
            write!(f, "{e}{n}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::String(s) => f.write_str(&quote_string(s)),
            Literal::Integer(i) => write!(f, "{i}"),
            Literal::Boolean(b) => f.write_str(if *b { "true" } else { "false" }),
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Matches => "=~",
        })
    }
}

/// Binary operators are fully parenthesized so the output reparses to the
/// same tree.
impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoolExpr::Or(a, b) => write!(f, "({a} OR {b})"),
            BoolExpr::And(a, b) => write!(f, "({a} AND {b})"),
            BoolExpr::Not(a) => write!(f, "NOT {a}"),
            BoolExpr::Cmp(c) => write!(f, "{}.{} {} {}", Ident(&c.var), Ident(&c.key), c.op, c.value),
        }
    }
}

impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("MATCH ")?;
        for (i, p) in self.patterns.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        if let Some(w) = &self.filter {
            write!(f, " WHERE {w}")?;
        }
        f.write_str(" RETURN ")?;
        match &self.returns {
            ReturnClause::Star => f.write_str("*")?,
            ReturnClause::Vars(vars) => {
                for (i, v) in vars.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", Ident(v))?;
                }
            }
        }
        if let Some(n) = self.limit {
            write!(f, " LIMIT {n}")?;
        }
        Ok(())
    }
}
