//! S-expression reader with source positions.

use std::fmt;

use super::error::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atom {
    Numeral(String),
    Decimal(String),
    /// `#x..` / `#b..` literals; recognised only to be rejected.
    Bits(String),
    Str(String),
    Symbol(String),
    Keyword(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExprKind {
    Atom(Atom),
    List(Vec<SExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SExpr {
    pub kind: SExprKind,
    pub pos: Pos,
    /// Byte range in the source text.
    pub span: (usize, usize),
}

impl SExpr {
    pub fn as_symbol(&self) -> Option<&str> {
        match &self.kind {
            SExprKind::Atom(Atom::Symbol(s)) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match &self.kind {
            SExprKind::List(items) => Some(items),
            _ => None,
        }
    }
}

struct Reader<'a> {
    src: &'a str,
    bytes: &'a [u8],
    i: usize,
    line: usize,
    col: usize,
}

impl<'a> Reader<'a> {
    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.src[self.i..].chars().next()?;
        self.i += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&self) -> Option<char> {
        self.src[self.i..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<SExpr, ParseError> {
        self.skip_ws();
        let start = self.i;
        let pos = self.pos();
        let c = self
            .peek()
            .ok_or_else(|| ParseError::syntax(pos, "an s-expression", "end of input"))?;
        match c {
            '(' => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        None => {
                            return Err(ParseError::syntax(self.pos(), "`)`", "end of input"))
                        }
                        Some(')') => {
                            self.bump();
                            break;
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
                Ok(SExpr {
                    kind: SExprKind::List(items),
                    pos,
                    span: (start, self.i),
                })
            }
            ')' => Err(ParseError::syntax(pos, "an s-expression", "`)`")),
            '"' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => {
                            return Err(ParseError::syntax(
                                self.pos(),
                                "closing `\"`",
                                "end of input",
                            ))
                        }
                        Some('"') => {
                            if self.peek() == Some('"') {
                                self.bump();
                                s.push('"');
                            } else {
                                break;
                            }
                        }
                        Some(c) => s.push(c),
                    }
                }
                Ok(self.atom(Atom::Str(s), pos, start))
            }
            '|' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => {
                            return Err(ParseError::syntax(self.pos(), "closing `|`", "end of input"))
                        }
                        Some('|') => break,
                        Some('\\') => {
                            return Err(ParseError::syntax(
                                self.pos(),
                                "a quoted-symbol character",
                                "`\\`",
                            ))
                        }
                        Some(c) => s.push(c),
                    }
                }
                Ok(self.atom(Atom::Symbol(s), pos, start))
            }
            _ => {
                while let Some(c) = self.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' || c == '"' || c == '|'
                    {
                        break;
                    }
                    self.bump();
                }
                let tok = &self.src[start..self.i];
                let atom = classify(tok).ok_or_else(|| {
                    ParseError::syntax(pos, "a token", &format!("`{tok}`"))
                })?;
                Ok(self.atom(atom, pos, start))
            }
        }
    }

    fn atom(&self, atom: Atom, pos: Pos, start: usize) -> SExpr {
        SExpr {
            kind: SExprKind::Atom(atom),
            pos,
            span: (start, self.i),
        }
    }
}

fn classify(tok: &str) -> Option<Atom> {
    let b = tok.as_bytes();
    if b[0].is_ascii_digit() {
        if tok.bytes().all(|c| c.is_ascii_digit()) {
            if tok.len() > 1 && b[0] == b'0' {
                return None;
            }
            return Some(Atom::Numeral(tok.to_string()));
        }
        let (int, frac) = tok.split_once('.')?;
        if !int.is_empty()
            && !frac.is_empty()
            && int.bytes().all(|c| c.is_ascii_digit())
            && frac.bytes().all(|c| c.is_ascii_digit())
            && !(int.len() > 1 && int.starts_with('0'))
        {
            return Some(Atom::Decimal(tok.to_string()));
        }
        return None;
    }
    if b[0] == b'#' {
        return Some(Atom::Bits(tok.to_string()));
    }
    if let Some(k) = tok.strip_prefix(':') {
        return Some(Atom::Keyword(k.to_string()));
    }
    if tok.chars().all(super::term::is_simple_symbol_char) {
        return Some(Atom::Symbol(tok.to_string()));
    }
    None
}

/// Reads all top-level s-expressions of `src`.
pub fn read_all(src: &str) -> Result<Vec<SExpr>, ParseError> {
    let mut r = Reader {
        src,
        bytes: src.as_bytes(),
        i: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        r.skip_ws();
        if r.i >= r.bytes.len() {
            break;
        }
        out.push(r.read()?);
    }
    Ok(out)
}
