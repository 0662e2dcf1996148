use super::ast::{is_ident_char, is_ident_start};
use super::{Position, SyntaxError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    /// Bare word; keywords are recognised by the parser.
    Word(String),
    /// Backtick-quoted identifier.
    Quoted(String),
    Str(String),
    /// Digits as written; range-checked by the parser.
    Int(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Colon,
    Comma,
    Dot,
    Star,
    Eq,
    Ne,
    RegexMatch,
    Minus,
    Lt,
    Gt,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("'{w}'"),
            Tok::Quoted(w) => format!("`{w}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::Int(d) => format!("integer {d}"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Colon => "':'".into(),
            Tok::Comma => "','".into(),
            Tok::Dot => "'.'".into(),
            Tok::Star => "'*'".into(),
            Tok::Eq => "'='".into(),
            Tok::Ne => "'<>'".into(),
            Tok::RegexMatch => "'=~'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Lt => "'<'".into(),
            Tok::Gt => "'>'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Position,
}

struct Cursor<'a> {
    src: &'a str,
    offset: usize,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.offset..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        self.src[self.offset..].chars().nth(1)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Position {
        Position {
            offset: self.offset,
            line: self.line,
            column: self.column,
        }
    }
}

fn lex_error(pos: Position, found: impl Into<String>, expected: &[&str]) -> SyntaxError {
    SyntaxError {
        pos,
        found: found.into(),
        expected: expected.iter().map(|s| s.to_string()).collect(),
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut cur = Cursor {
        src,
        offset: 0,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    loop {
        while cur.peek().is_some_and(char::is_whitespace) {
            cur.bump();
        }
        if cur.peek() == Some('/') && cur.peek2() == Some('/') {
            while cur.peek().is_some_and(|c| c != '\n') {
                cur.bump();
            }
            continue;
        }
        let pos = cur.pos();
        let Some(c) = cur.bump() else {
            out.push(Token { tok: Tok::Eof, pos });
            return Ok(out);
        };
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ':' => Tok::Colon,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            '*' => Tok::Star,
            '-' => Tok::Minus,
            '>' => Tok::Gt,
            '=' if cur.peek() == Some('~') => {
                cur.bump();
                Tok::RegexMatch
            }
            '=' => Tok::Eq,
            '<' if cur.peek() == Some('>') => {
                cur.bump();
                Tok::Ne
            }
            '<' => Tok::Lt,
            '"' | '\'' => Tok::Str(string_body(&mut cur, c, pos)?),
            '`' => {
                let mut name = String::new();
                loop {
                    match cur.bump() {
                        Some('`') if cur.peek() == Some('`') => {
                            cur.bump();
                            name.push('`');
                        }
                        Some('`') => break,
                        Some(ch) => name.push(ch),
                        None => return Err(lex_error(cur.pos(), "end of input", &["closing '`'"])),
                    }
                }
                if name.is_empty() {
                    return Err(lex_error(pos, "empty quoted identifier", &["identifier"]));
                }
                Tok::Quoted(name)
            }
            c if c.is_ascii_digit() => {
                let mut digits = String::from(c);
                while let Some(d) = cur.peek().filter(char::is_ascii_digit) {
                    cur.bump();
                    digits.push(d);
                }
                if cur.peek().is_some_and(is_ident_char) {
                    return Err(lex_error(cur.pos(), format!("'{}'", cur.peek().unwrap()), &["digit"]));
                }
                Tok::Int(digits)
            }
            c if is_ident_start(c) => {
                let mut word = String::from(c);
                while let Some(d) = cur.peek().filter(|&d| is_ident_char(d)) {
                    cur.bump();
                    word.push(d);
                }
                Tok::Word(word)
            }
            other => return Err(lex_error(pos, format!("'{other}'"), &["token"])),
        };
        out.push(Token { tok, pos });
    }
}

fn string_body(cur: &mut Cursor<'_>, quote: char, start: Position) -> Result<String, SyntaxError> {
    let mut s = String::new();
    loop {
        let pos = cur.pos();
        match cur.bump() {
            None => {
                return Err(SyntaxError {
                    pos: start,
                    found: "unterminated string".into(),
                    expected: vec![format!("closing {quote}")],
                })
            }
            Some(c) if c == quote => return Ok(s),
            Some('\\') => {
                let esc = cur.bump();
                match esc {
                    Some('\\') => s.push('\\'),
                    Some('"') => s.push('"'),
                    Some('\'') => s.push('\''),
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    Some('r') => s.push('\r'),
                    Some('u') => {
                        let mut hex = String::new();
                        for _ in 0..4 {
                            match cur.bump() {
                                Some(h) if h.is_ascii_hexdigit() => hex.push(h),
                                _ => return Err(lex_error(pos, "malformed \\u escape", &["4 hex digits"])),
                            }
                        }
                        let code = u32::from_str_radix(&hex, 16).expect("validated hex");
                        match char::from_u32(code) {
                            Some(ch) => s.push(ch),
                            None => return Err(lex_error(pos, format!("\\u{hex}"), &["a Unicode scalar value"])),
                        }
                    }
                    Some(other) => {
                        return Err(lex_error(
                            pos,
                            format!("unknown escape '\\{other}'"),
                            &["\\\\", "\\\"", "\\'", "\\n", "\\t", "\\r", "\\uXXXX"],
                        ))
                    }
                    None => return Err(lex_error(pos, "end of input", &["escape character"])),
                }
            }
            Some(c) => s.push(c),
        }
    }
}
