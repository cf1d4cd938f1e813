use std::fmt;

use thiserror::Error;

use crate::diag::{Pos, Span};

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Int(i64),
    Real(f64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    /// `=`, used both for binding and for equality comparison.
    Eq,
    Ne,
    Le,
    Ge,
    Lt,
    Gt,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(name) => write!(f, "identifier `{name}`"),
            TokenKind::Int(v) => write!(f, "number `{v}`"),
            TokenKind::Real(v) => write!(f, "number `{v:?}`"),
            other => {
                let s = match other {
                    TokenKind::LParen => "(",
                    TokenKind::RParen => ")",
                    TokenKind::LBrace => "{",
                    TokenKind::RBrace => "}",
                    TokenKind::LBracket => "[",
                    TokenKind::RBracket => "]",
                    TokenKind::Comma => ",",
                    TokenKind::Semi => ";",
                    TokenKind::Colon => ":",
                    TokenKind::Eq => "=",
                    TokenKind::Ne => "\\=",
                    TokenKind::Le => "=<",
                    TokenKind::Ge => ">=",
                    TokenKind::Lt => "<",
                    TokenKind::Gt => ">",
                    TokenKind::Plus => "+",
                    TokenKind::Minus => "-",
                    TokenKind::Star => "*",
                    TokenKind::Slash => "/",
                    TokenKind::Caret => "^",
                    TokenKind::Ident(_) | TokenKind::Int(_) | TokenKind::Real(_) => unreachable!(),
                };
                write!(f, "`{s}`")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {message}")]
pub struct LexError {
    pub pos: Pos,
    pub message: String,
}

struct Cursor<'a> {
    src: &'a str,
    offset: usize,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn pos(&self) -> Pos {
        Pos { offset: self.offset, line: self.line, col: self.col }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.offset..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.offset..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn eat_while(&mut self, pred: impl Fn(char) -> bool) {
        while self.peek().is_some_and(&pred) {
            self.bump();
        }
    }
}

/// Split source text into tokens. `--` starts a comment running to end of line.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor { src: source, offset: 0, line: 1, col: 1 };
    let mut tokens = Vec::new();

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '-' && cur.peek2() == Some('-') {
            cur.eat_while(|c| c != '\n');
            continue;
        }
        let start = cur.pos();
        let kind = if c.is_ascii_alphabetic() {
            cur.eat_while(|c| c.is_ascii_alphanumeric() || c == '_');
            TokenKind::Ident(source[start.offset..cur.offset].to_string())
        } else if c.is_ascii_digit() {
            lex_number(&mut cur)?
        } else {
            cur.bump();
            match c {
                '(' => TokenKind::LParen,
                ')' => TokenKind::RParen,
                '{' => TokenKind::LBrace,
                '}' => TokenKind::RBrace,
                '[' => TokenKind::LBracket,
                ']' => TokenKind::RBracket,
                ',' => TokenKind::Comma,
                ';' => TokenKind::Semi,
                ':' => TokenKind::Colon,
                '+' => TokenKind::Plus,
                '-' => TokenKind::Minus,
                '*' => TokenKind::Star,
                '/' => TokenKind::Slash,
                '^' => TokenKind::Caret,
                '=' if cur.peek() == Some('<') => {
                    cur.bump();
                    TokenKind::Le
                }
                '=' => TokenKind::Eq,
                '>' if cur.peek() == Some('=') => {
                    cur.bump();
                    TokenKind::Ge
                }
                '>' => TokenKind::Gt,
                '<' => TokenKind::Lt,
                '\\' if cur.peek() == Some('=') => {
                    cur.bump();
                    TokenKind::Ne
                }
                '\\' => return Err(LexError { pos: start, message: "unterminated `\\=` operator".into() }),
                other => return Err(LexError { pos: start, message: format!("illegal character `{other}`") }),
            }
        };
        tokens.push(Token { kind, span: Span::new(start, cur.pos()) });
    }
    Ok(tokens)
}

fn lex_number(cur: &mut Cursor<'_>) -> Result<TokenKind, LexError> {
    let start = cur.pos();
    let malformed = |cur: &Cursor<'_>| LexError {
        pos: start,
        message: format!("malformed number `{}`", &cur.src[start.offset..cur.offset]),
    };
    let mut is_real = false;

    cur.eat_while(|c| c.is_ascii_digit());
    if cur.peek() == Some('.') {
        is_real = true;
        cur.bump();
        if !cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            cur.eat_while(|c| c.is_ascii_digit() || c == '.');
            return Err(malformed(cur));
        }
        cur.eat_while(|c| c.is_ascii_digit());
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        is_real = true;
        cur.bump();
        if matches!(cur.peek(), Some('+' | '-')) {
            cur.bump();
        }
        if !cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            return Err(malformed(cur));
        }
        cur.eat_while(|c| c.is_ascii_digit());
    }
    // `1.5.2`, `12abc`
    if cur.peek().is_some_and(|c| c == '.' || c.is_ascii_alphanumeric() || c == '_') {
        cur.eat_while(|c| c == '.' || c.is_ascii_alphanumeric() || c == '_');
        return Err(malformed(cur));
    }

    let text = &cur.src[start.offset..cur.offset];
    if is_real {
        text.parse::<f64>().map(TokenKind::Real).map_err(|_| malformed(cur))
    } else {
        text.parse::<i64>()
            .map(TokenKind::Int)
            .map_err(|_| LexError { pos: start, message: format!("integer literal `{text}` out of range") })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    fn ident(s: &str) -> TokenKind {
        TokenKind::Ident(s.into())
    }

    #[test]
    fn for_binding_with_trailing_comment() {
        use TokenKind::*;
        assert_eq!(
            kinds("X : real = for(0.0, R, 1.0); --(c)"),
            vec![
                ident("X"),
                Colon,
                ident("real"),
                Eq,
                ident("for"),
                LParen,
                Real(0.0),
                Comma,
                ident("R"),
                Comma,
                Real(1.0),
                RParen,
                Semi
            ]
        );
    }

    #[test]
    fn empty_source_has_no_tokens() {
        assert!(tokenize("").unwrap().is_empty());
        assert!(tokenize("  -- only a comment\n").unwrap().is_empty());
    }

    #[test]
    fn double_dot_is_malformed_number() {
        let err = tokenize("0..5").unwrap_err();
        assert_eq!((err.pos.line, err.pos.col), (1, 1));
        assert!(err.message.contains("malformed number"), "{}", err.message);
    }

    #[test]
    fn trailing_dot_and_bad_exponent_are_malformed() {
        assert!(tokenize("1.").is_err());
        assert!(tokenize("1.5.2").is_err());
        assert!(tokenize("2e").is_err());
        assert!(tokenize("3abc").is_err());
    }

    #[test]
    fn comparison_operators() {
        use TokenKind::*;
        assert_eq!(kinds("=< >= < > = \\="), vec![Le, Ge, Lt, Gt, Eq, Ne]);
    }

    #[test]
    fn exponent_literals_are_real() {
        assert_eq!(kinds("1e-7 25"), vec![TokenKind::Real(1e-7), TokenKind::Int(25)]);
    }

    #[test]
    fn illegal_character_reports_position() {
        let err = tokenize("A : real = 1;\n  B # 2").unwrap_err();
        assert_eq!((err.pos.line, err.pos.col), (2, 5));
    }

    #[test]
    fn lone_backslash_is_unterminated() {
        let err = tokenize("A \\ B").unwrap_err();
        assert_eq!(err.pos.col, 3);
    }
}
