//! Query language: terms, phrases, fields, boolean operators and fuzzy terms.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryField {
    EntityName,
    DocTitle,
    DocBody,
    /// Node type, e.g. `type:LOCATION`.
    Type,
    /// Document source type, e.g. `source:social`.
    Source,
}

impl QueryField {
    pub fn as_str(self) -> &'static str {
        match self {
            QueryField::EntityName => "entity_name",
            QueryField::DocTitle => "doc_title",
            QueryField::DocBody => "doc_body",
            QueryField::Type => "type",
            QueryField::Source => "source",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "entity_name" | "entity" => QueryField::EntityName,
            "doc_title" | "title" => QueryField::DocTitle,
            "doc_body" | "body" => QueryField::DocBody,
            "type" => QueryField::Type,
            "source" => QueryField::Source,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QueryAst {
    Term { token: String, fuzzy: bool },
    Phrase { tokens: Vec<String> },
    Field { field: QueryField, query: Box<QueryAst> },
    And { children: Vec<QueryAst> },
    Or { children: Vec<QueryAst> },
    Not { query: Box<QueryAst> },
}

impl QueryAst {
    pub fn term(token: &str) -> Self {
        QueryAst::Term { token: token.into(), fuzzy: false }
    }

    pub fn fuzzy(token: &str) -> Self {
        QueryAst::Term { token: token.into(), fuzzy: true }
    }

    pub fn phrase(tokens: &[&str]) -> Self {
        QueryAst::Phrase { tokens: tokens.iter().map(|t| t.to_string()).collect() }
    }

    pub fn field(field: QueryField, query: QueryAst) -> Self {
        QueryAst::Field { field, query: Box::new(query) }
    }

    pub fn and(children: Vec<QueryAst>) -> Self {
        QueryAst::And { children }
    }

    pub fn or(children: Vec<QueryAst>) -> Self {
        QueryAst::Or { children }
    }

    pub fn not(query: QueryAst) -> Self {
        QueryAst::Not { query: Box::new(query) }
    }

    fn is_compound(&self) -> bool {
        matches!(self, QueryAst::And { .. } | QueryAst::Or { .. } | QueryAst::Not { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("empty query")]
    EmptyQuery,
    #[error("syntax error at byte {0}")]
    SyntaxError(usize),
}

#[derive(Debug, Clone, PartialEq)]
enum Lexeme {
    Open,
    Close,
    And,
    Or,
    Not,
    Phrase(String),
    /// `name:` with the value following as its own lexeme.
    Field(String),
    Word(String),
}

fn lex(q: &str) -> Result<Vec<(usize, Lexeme)>, QueryError> {
    let bytes = q.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c == b'(' {
            out.push((i, Lexeme::Open));
            i += 1;
        } else if c == b')' {
            out.push((i, Lexeme::Close));
            i += 1;
        } else if c == b'"' {
            let close = q[i + 1..].find('"').ok_or(QueryError::SyntaxError(i))?;
            out.push((i, Lexeme::Phrase(q[i + 1..i + 1 + close].to_string())));
            i += close + 2;
        } else {
            let start = i;
            while i < bytes.len() && !bytes[i].is_ascii_whitespace() && !b"()\"".contains(&bytes[i]) {
                if bytes[i] == b':' {
                    break;
                }
                i += 1;
            }
            let word = &q[start..i];
            if i < bytes.len() && bytes[i] == b':' {
                if word.is_empty() {
                    return Err(QueryError::SyntaxError(start));
                }
                out.push((start, Lexeme::Field(word.to_string())));
                i += 1;
                continue;
            }
            out.push((
                start,
                match word {
                    "AND" => Lexeme::And,
                    "OR" => Lexeme::Or,
                    "NOT" => Lexeme::Not,
                    _ => Lexeme::Word(word.to_string()),
                },
            ));
        }
    }
    Ok(out)
}

struct Parser {
    lexemes: Vec<(usize, Lexeme)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Lexeme> {
        self.lexemes.get(self.pos).map(|(_, l)| l)
    }

    fn offset(&self) -> usize {
        self.lexemes.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn or_expr(&mut self) -> Result<QueryAst, QueryError> {
        let mut children = vec![self.and_expr()?];
        while self.peek() == Some(&Lexeme::Or) {
            self.pos += 1;
            children.push(self.and_expr()?);
        }
        Ok(if children.len() == 1 { children.pop().unwrap() } else { QueryAst::Or { children } })
    }

    fn and_expr(&mut self) -> Result<QueryAst, QueryError> {
        let mut children = vec![self.unary()?];
        loop {
            match self.peek() {
                Some(Lexeme::And) => {
                    self.pos += 1;
                    children.push(self.unary()?);
                }
                Some(Lexeme::Or | Lexeme::Close) | None => break,
                Some(_) => children.push(self.unary()?),
            }
        }
        Ok(if children.len() == 1 { children.pop().unwrap() } else { QueryAst::And { children } })
    }

    fn unary(&mut self) -> Result<QueryAst, QueryError> {
        if self.peek() == Some(&Lexeme::Not) {
            self.pos += 1;
            return Ok(QueryAst::not(self.primary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<QueryAst, QueryError> {
        let at = self.offset();
        let Some((_, lexeme)) = self.lexemes.get(self.pos).cloned() else {
            return Err(QueryError::SyntaxError(at));
        };
        self.pos += 1;
        match lexeme {
            Lexeme::Open => {
                if self.peek() == Some(&Lexeme::Close) {
                    return Err(QueryError::SyntaxError(self.offset()));
                }
                let inner = self.or_expr()?;
                if self.peek() != Some(&Lexeme::Close) {
                    return Err(QueryError::SyntaxError(self.offset()));
                }
                self.pos += 1;
                Ok(inner)
            }
            Lexeme::Phrase(text) => {
                let tokens = tokenize(&text);
                if tokens.is_empty() {
                    return Err(QueryError::SyntaxError(at));
                }
                Ok(QueryAst::Phrase { tokens })
            }
            Lexeme::Field(name) => {
                let field = QueryField::parse(&name).ok_or(QueryError::SyntaxError(at))?;
                if matches!(self.peek(), Some(Lexeme::Field(_))) {
                    return Err(QueryError::SyntaxError(self.offset()));
                }
                Ok(QueryAst::field(field, self.primary()?))
            }
            Lexeme::Word(word) => word_ast(&word, at),
            Lexeme::Close | Lexeme::And | Lexeme::Or | Lexeme::Not => Err(QueryError::SyntaxError(at)),
        }
    }
}

fn word_ast(word: &str, at: usize) -> Result<QueryAst, QueryError> {
    let (body, fuzzy) = match word.rfind('~') {
        Some(i) if word[i + 1..].bytes().all(|b| b.is_ascii_digit()) => (&word[..i], true),
        _ => (word, false),
    };
    let mut tokens = tokenize(body);
    match tokens.len() {
        0 => Err(QueryError::SyntaxError(at)),
        1 => Ok(QueryAst::Term { token: tokens.pop().unwrap(), fuzzy }),
        _ if fuzzy => Err(QueryError::SyntaxError(at)),
        _ => Ok(QueryAst::Phrase { tokens }),
    }
}

/// `Not` may only appear directly under an `And` that has a positive child;
/// fields do not nest.
fn check(ast: &QueryAst, in_field: bool, at: usize) -> Result<(), QueryError> {
    match ast {
        QueryAst::Term { .. } | QueryAst::Phrase { .. } => Ok(()),
        QueryAst::Field { query, .. } => {
            if in_field {
                return Err(QueryError::SyntaxError(at));
            }
            check(query, true, at)
        }
        QueryAst::Not { .. } => Err(QueryError::SyntaxError(at)),
        QueryAst::Or { children } => children.iter().try_for_each(|c| check(c, in_field, at)),
        QueryAst::And { children } => {
            if children.iter().all(|c| matches!(c, QueryAst::Not { .. })) {
                return Err(QueryError::SyntaxError(at));
            }
            children.iter().try_for_each(|c| match c {
                QueryAst::Not { query } => check(query, in_field, at),
                other => check(other, in_field, at),
            })
        }
    }
}

pub fn parse_query(q: &str) -> Result<QueryAst, QueryError> {
    if q.trim().is_empty() {
        return Err(QueryError::EmptyQuery);
    }
    let lexemes = lex(q)?;
    let mut parser = Parser { lexemes, pos: 0, end: q.len() };
    let ast = parser.or_expr()?;
    if parser.pos != parser.lexemes.len() {
        return Err(QueryError::SyntaxError(parser.offset()));
    }
    let not_at = parser
        .lexemes
        .iter()
        .find(|(_, l)| *l == Lexeme::Not)
        .or_else(|| parser.lexemes.iter().find(|(_, l)| matches!(l, Lexeme::Field(_))))
        .map_or(0, |(o, _)| *o);
    check(&ast, false, not_at)?;
    Ok(ast)
}

/// True when the query uses any operator beyond a plain word.
pub fn has_explicit_syntax(q: &str) -> bool {
    lex(q).is_ok_and(|lexemes| {
        lexemes.iter().any(|(_, l)| match l {
            Lexeme::Word(w) => w.contains('~'),
            _ => true,
        })
    })
}

fn render_atom(ast: &QueryAst, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if ast.is_compound() {
        write!(f, "({ast})")
    } else {
        write!(f, "{ast}")
    }
}

/// Canonical rendering; parsing it yields the same AST.
impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryAst::Term { token, fuzzy } => {
                write!(f, "{token}")?;
                if *fuzzy {
                    write!(f, "~1")?;
                }
                Ok(())
            }
            QueryAst::Phrase { tokens } => write!(f, "\"{}\"", tokens.join(" ")),
            QueryAst::Field { field, query } => {
                write!(f, "{}:", field.as_str())?;
                render_atom(query, f)
            }
            QueryAst::Not { query } => {
                write!(f, "NOT ")?;
                render_atom(query, f)
            }
            QueryAst::And { children } | QueryAst::Or { children } => {
                let sep = if matches!(self, QueryAst::And { .. }) { " AND " } else { " OR " };
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    match c {
                        QueryAst::And { .. } | QueryAst::Or { .. } => write!(f, "({c})")?,
                        _ => write!(f, "{c}")?,
                    }
                }
                Ok(())
            }
        }
    }
}
