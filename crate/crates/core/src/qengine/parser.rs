use std::collections::BTreeMap;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::{Position, QueryError, SyntaxError};

struct Parser {
    toks: Vec<Token>,
    i: usize,
    /// Every variable occurrence, for the semantic pass.
    uses: Vec<Use>,
}

struct Use {
    name: String,
    pos: Position,
    role: Role,
}

#[derive(Clone, Copy, PartialEq)]
enum Role {
    Node,
    Edge,
    Filter,
    Return,
}

pub(crate) fn parse(text: &str) -> Result<QueryAst, QueryError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        i: 0,
        uses: Vec::new(),
    };
    let ast = p.query()?;
    check(&ast, &p.uses)?;
    Ok(ast)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn pos(&self) -> Position {
        self.toks[self.i].pos
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, SyntaxError> {
        Err(SyntaxError {
            pos: self.pos(),
            found: self.peek().describe(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn keyword(&mut self, kw: &str) -> Result<(), SyntaxError> {
        if self.at_keyword(kw) {
            self.advance();
            Ok(())
        } else {
            self.fail(&[kw])
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), SyntaxError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.fail(&[&tok.describe()])
        }
    }

    fn at_ident(&self) -> bool {
        match self.peek() {
            Tok::Word(w) => !is_keyword(w),
            Tok::Quoted(_) => true,
            _ => false,
        }
    }

    fn ident(&mut self) -> Result<(String, Position), SyntaxError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Word(w) if !is_keyword(&w) => {
                self.advance();
                Ok((w, pos))
            }
            Tok::Quoted(w) => {
                self.advance();
                Ok((w, pos))
            }
            _ => self.fail(&["identifier"]),
        }
    }

    fn var(&mut self, role: Role) -> Result<String, SyntaxError> {
        let (name, pos) = self.ident()?;
        self.uses.push(Use {
            name: name.clone(),
            pos,
            role,
        });
        Ok(name)
    }

    fn query(&mut self) -> Result<QueryAst, SyntaxError> {
        self.keyword("MATCH")?;
        let mut patterns = vec![self.pattern()?];
        while self.eat(&Tok::Comma) {
            patterns.push(self.pattern()?);
        }
        let filter = if self.at_keyword("WHERE") {
            self.advance();
            Some(self.or_expr()?)
        } else {
            None
        };
        if !self.at_keyword("RETURN") {
            return if filter.is_some() {
                self.fail(&["AND", "OR", "RETURN"])
            } else {
                self.fail(&["','", "'-'", "'<'", "WHERE", "RETURN"])
            };
        }
        self.advance();
        let returns = if self.eat(&Tok::Star) {
            ReturnClause::Star
        } else if self.at_ident() {
            let mut vars = vec![self.var(Role::Return)?];
            while self.eat(&Tok::Comma) {
                vars.push(self.var(Role::Return)?);
            }
            ReturnClause::Vars(vars)
        } else {
            return self.fail(&["'*'", "identifier"]);
        };
        let limit = if self.at_keyword("LIMIT") {
            self.advance();
            Some(self.unsigned()?)
        } else {
            None
        };
        if *self.peek() != Tok::Eof {
            let mut expected = Vec::new();
            if matches!(returns, ReturnClause::Vars(_)) && limit.is_none() {
                expected.push("','");
            }
            if limit.is_none() {
                expected.push("LIMIT");
            }
            expected.push("end of input");
            return self.fail(&expected);
        }
        Ok(QueryAst {
            patterns,
            filter,
            returns,
            limit,
        })
    }

    fn unsigned(&mut self) -> Result<u64, SyntaxError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(d) => match d.parse::<u64>() {
                Ok(n) => {
                    self.advance();
                    Ok(n)
                }
                Err(_) => Err(SyntaxError {
                    pos,
                    found: format!("integer {d}"),
                    expected: vec!["integer below 2^64".into()],
                }),
            },
            _ => self.fail(&["integer"]),
        }
    }

    fn pattern(&mut self) -> Result<PathPattern, SyntaxError> {
        let start = self.node()?;
        let mut steps = Vec::new();
        while matches!(self.peek(), Tok::Minus | Tok::Lt) {
            let edge = self.edge()?;
            let node = self.node()?;
            steps.push((edge, node));
        }
        Ok(PathPattern { start, steps })
    }

    fn node(&mut self) -> Result<NodeAtom, SyntaxError> {
        self.expect(Tok::LParen)?;
        let var = if self.at_ident() { Some(self.var(Role::Node)?) } else { None };
        let label = if self.eat(&Tok::Colon) { Some(self.ident()?.0) } else { None };
        if !self.eat(&Tok::RParen) {
            return match (&var, &label) {
                (_, Some(_)) => self.fail(&["')'"]),
                (Some(_), None) => self.fail(&["':'", "')'"]),
                (None, None) => self.fail(&["identifier", "':'", "')'"]),
            };
        }
        Ok(NodeAtom { var, label })
    }

    fn edge(&mut self) -> Result<EdgeAtom, SyntaxError> {
        let left = self.eat(&Tok::Lt);
        self.expect(Tok::Minus)?;
        let (var, edge_type) = if self.eat(&Tok::LBracket) {
            let var = if self.at_ident() { Some(self.var(Role::Edge)?) } else { None };
            let ty = if self.eat(&Tok::Colon) { Some(self.ident()?.0) } else { None };
            if !self.eat(&Tok::RBracket) {
                return match (&var, &ty) {
                    (_, Some(_)) => self.fail(&["']'"]),
                    (Some(_), None) => self.fail(&["':'", "']'"]),
                    (None, None) => self.fail(&["identifier", "':'", "']'"]),
                };
            }
            self.expect(Tok::Minus)?;
            (var, ty)
        } else if self.eat(&Tok::Minus) {
            (None, None)
        } else {
            return self.fail(&["'['", "'-'"]);
        };
        let right = self.eat(&Tok::Gt);
        let direction = match (left, right) {
            (false, true) => Direction::Right,
            (true, false) => Direction::Left,
            (false, false) => Direction::Undirected,
            (true, true) => {
                return Err(SyntaxError {
                    pos: self.toks[self.i - 1].pos,
                    found: "'>'".into(),
                    expected: vec!["'('".into()],
                })
            }
        };
        Ok(EdgeAtom {
            var,
            edge_type,
            direction,
        })
    }

    fn or_expr(&mut self) -> Result<BoolExpr, SyntaxError> {
        let mut e = self.and_expr()?;
        while self.at_keyword("OR") {
            self.advance();
            e = BoolExpr::Or(Box::new(e), Box::new(self.and_expr()?));
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> Result<BoolExpr, SyntaxError> {
        let mut e = self.not_expr()?;
        while self.at_keyword("AND") {
            self.advance();
            e = BoolExpr::And(Box::new(e), Box::new(self.not_expr()?));
        }
        Ok(e)
    }

    fn not_expr(&mut self) -> Result<BoolExpr, SyntaxError> {
        if self.at_keyword("NOT") {
            self.advance();
            return Ok(BoolExpr::Not(Box::new(self.not_expr()?)));
        }
        if self.eat(&Tok::LParen) {
            let e = self.or_expr()?;
            if !self.eat(&Tok::RParen) {
                return self.fail(&["AND", "OR", "')'"]);
            }
            return Ok(e);
        }
        if !self.at_ident() {
            return self.fail(&["NOT", "'('", "identifier"]);
        }
        let var = self.var(Role::Filter)?;
        self.expect(Tok::Dot)?;
        let key = self.ident()?.0;
        let op = match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::RegexMatch => CmpOp::Matches,
            _ => return self.fail(&["'='", "'<>'", "'=~'"]),
        };
        self.advance();
        let value = if op == CmpOp::Matches {
            match self.peek().clone() {
                Tok::Str(s) => {
                    self.advance();
                    Literal::String(s)
                }
                _ => return self.fail(&["string literal"]),
            }
        } else {
            self.literal()?
        };
        Ok(BoolExpr::Cmp(Comparison { var, key, op, value }))
    }

    fn literal(&mut self) -> Result<Literal, SyntaxError> {
        let pos = self.pos();
        let negative = self.eat(&Tok::Minus);
        match self.peek().clone() {
            Tok::Int(d) => {
                let magnitude: i128 = d.parse().unwrap_or(i128::MAX);
                let value = if negative { -magnitude } else { magnitude };
                match i64::try_from(value) {
                    Ok(v) => {
                        self.advance();
                        Ok(Literal::Integer(v))
                    }
                    Err(_) => Err(SyntaxError {
                        pos,
                        found: format!("integer {}{d}", if negative { "-" } else { "" }),
                        expected: vec!["64-bit signed integer".into()],
                    }),
                }
            }
            _ if negative => self.fail(&["integer"]),
            Tok::Str(s) => {
                self.advance();
                Ok(Literal::String(s))
            }
            Tok::Word(w) if w.eq_ignore_ascii_case("true") || w.eq_ignore_ascii_case("false") => {
                self.advance();
                Ok(Literal::Boolean(w.eq_ignore_ascii_case("true")))
            }
            _ => self.fail(&["string literal", "integer", "TRUE", "FALSE"]),
        }
    }
}

fn semantic(pos: Position, message: String) -> QueryError {
    QueryError::Semantic { pos, message }
}

fn check(ast: &QueryAst, uses: &[Use]) -> Result<(), QueryError> {
    let mut kinds: BTreeMap<&str, VarKind> = BTreeMap::new();
    for u in uses {
        let kind = match u.role {
            Role::Node => VarKind::Node,
            Role::Edge => VarKind::Edge,
            _ => continue,
        };
        match kinds.get(u.name.as_str()) {
            Some(&k) if k != kind => {
                return Err(semantic(
                    u.pos,
                    format!("variable {} is used both as a node and as an edge", u.name),
                ))
            }
            Some(_) if kind == VarKind::Edge => {
                return Err(semantic(u.pos, format!("edge variable {} is bound more than once", u.name)))
            }
            _ => {
                kinds.insert(&u.name, kind);
            }
        }
    }
    let mut returned: Vec<&str> = Vec::new();
    for u in uses.iter().filter(|u| matches!(u.role, Role::Filter | Role::Return)) {
        if !kinds.contains_key(u.name.as_str()) {
            return Err(semantic(u.pos, format!("variable {} is not bound by any pattern", u.name)));
        }
        if u.role == Role::Return {
            if returned.contains(&u.name.as_str()) {
                return Err(semantic(u.pos, format!("variable {} is returned twice", u.name)));
            }
            returned.push(&u.name);
        }
    }
    if ast.returns == ReturnClause::Star && kinds.is_empty() {
        let pos = uses.first().map(|u| u.pos).unwrap_or_default();
        return Err(semantic(pos, "RETURN * needs at least one named variable".into()));
    }
    Ok(())
}
