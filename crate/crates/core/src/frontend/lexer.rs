use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;

use super::{FrontendError, Span};
use crate::term::parse_decimal;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(BigInt),
    Real(BigRational),
    Bool(bool),
    // keywords
    Node,
    Returns,
    Var,
    Let,
    Tel,
    If,
    Then,
    Else,
    Not,
    And,
    Or,
    Xor,
    Pre,
    Div,
    Mod,
    Assert,
    TyBool,
    TyInt,
    TyReal,
    // punctuation
    LParen,
    RParen,
    Colon,
    Semi,
    Comma,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Arrow,
    Implies,
    PragmaProperty,
    PragmaMain,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(name) => return write!(f, "identifier `{name}`"),
            Tok::Int(i) => return write!(f, "integer `{i}`"),
            Tok::Real(_) => "real literal",
            Tok::Bool(b) => return write!(f, "`{b}`"),
            Tok::Node => "`node`",
            Tok::Returns => "`returns`",
            Tok::Var => "`var`",
            Tok::Let => "`let`",
            Tok::Tel => "`tel`",
            Tok::If => "`if`",
            Tok::Then => "`then`",
            Tok::Else => "`else`",
            Tok::Not => "`not`",
            Tok::And => "`and`",
            Tok::Or => "`or`",
            Tok::Xor => "`xor`",
            Tok::Pre => "`pre`",
            Tok::Div => "`div`",
            Tok::Mod => "`mod`",
            Tok::Assert => "`assert`",
            Tok::TyBool => "`bool`",
            Tok::TyInt => "`int`",
            Tok::TyReal => "`real`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::Colon => "`:`",
            Tok::Semi => "`;`",
            Tok::Comma => "`,`",
            Tok::Eq => "`=`",
            Tok::Neq => "`<>`",
            Tok::Lt => "`<`",
            Tok::Le => "`<=`",
            Tok::Gt => "`>`",
            Tok::Ge => "`>=`",
            Tok::Plus => "`+`",
            Tok::Minus => "`-`",
            Tok::Star => "`*`",
            Tok::Slash => "`/`",
            Tok::Arrow => "`->`",
            Tok::Implies => "`=>`",
            Tok::PragmaProperty => "`--%PROPERTY`",
            Tok::PragmaMain => "`--%MAIN`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// Lexer options. Flat-name mode accepts the generated names of an elaborated
/// system (`main.f1.x`, `%pre1`) as identifiers; it is used for advice entries.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexMode {
    pub flat_names: bool,
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "node" => Tok::Node,
        "returns" => Tok::Returns,
        "var" => Tok::Var,
        "let" => Tok::Let,
        "tel" => Tok::Tel,
        "if" => Tok::If,
        "then" => Tok::Then,
        "else" => Tok::Else,
        "not" => Tok::Not,
        "and" => Tok::And,
        "or" => Tok::Or,
        "xor" => Tok::Xor,
        "pre" => Tok::Pre,
        "div" => Tok::Div,
        "mod" => Tok::Mod,
        "assert" => Tok::Assert,
        "bool" => Tok::TyBool,
        "int" => Tok::TyInt,
        "real" => Tok::TyReal,
        "true" => Tok::Bool(true),
        "false" => Tok::Bool(false),
        _ => return None,
    })
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    mode: LexMode,
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn rest_starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek_at(i) == Some(c))
    }

    fn here(&self) -> (u32, u32) {
        (self.line, self.col)
    }

    fn span_from(&self, start: (u32, u32)) -> Span {
        Span {
            start_line: start.0,
            start_col: start.1,
            end_line: self.line,
            end_col: self.col,
        }
    }

    fn skip_trivia(&mut self) -> Result<(), FrontendError> {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('-') if self.peek_at(1) == Some('-') => {
                    if self.rest_starts_with("--%PROPERTY") || self.rest_starts_with("--%MAIN") {
                        return Ok(());
                    }
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                Some('(') if self.peek_at(1) == Some('*') => {
                    let start = self.here();
                    self.bump();
                    self.bump();
                    loop {
                        if self.rest_starts_with("*)") {
                            self.bump();
                            self.bump();
                            break;
                        }
                        if self.bump().is_none() {
                            return Err(FrontendError::Lex {
                                span: self.span_from(start),
                                message: "unterminated comment".into(),
                            });
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn is_ident_start(&self, c: char) -> bool {
        c.is_ascii_alphabetic() || c == '_' || (self.mode.flat_names && c == '%')
    }

    fn is_ident_char(&self, c: char) -> bool {
        c.is_ascii_alphanumeric() || c == '_' || (self.mode.flat_names && (c == '%' || c == '.'))
    }

    fn next_token(&mut self) -> Result<Token, FrontendError> {
        self.skip_trivia()?;
        let start = self.here();
        let Some(c) = self.peek() else {
            return Ok(Token {
                tok: Tok::Eof,
                span: self.span_from(start),
            });
        };
        let tok = if self.rest_starts_with("--%PROPERTY") {
            for _ in 0.."--%PROPERTY".len() {
                self.bump();
            }
            Tok::PragmaProperty
        } else if self.rest_starts_with("--%MAIN") {
            for _ in 0.."--%MAIN".len() {
                self.bump();
            }
            Tok::PragmaMain
        } else if self.is_ident_start(c) {
            let mut word = String::new();
            while let Some(c) = self.peek() {
                if !self.is_ident_char(c) {
                    break;
                }
                word.push(c);
                self.bump();
            }
            keyword(&word).unwrap_or(Tok::Ident(word))
        } else if c.is_ascii_digit() {
            let mut text = String::new();
            while let Some(c) = self.peek() {
                if !c.is_ascii_digit() {
                    break;
                }
                text.push(c);
                self.bump();
            }
            if self.peek() == Some('.') && self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) {
                text.push('.');
                self.bump();
                while let Some(c) = self.peek() {
                    if !c.is_ascii_digit() {
                        break;
                    }
                    text.push(c);
                    self.bump();
                }
                Tok::Real(parse_decimal(&text).expect("digits"))
            } else if self.peek() == Some('.') {
                // `1.` is accepted as a real literal
                self.bump();
                Tok::Real(parse_decimal(&text).expect("digits"))
            } else if self.peek().is_some_and(|c| self.is_ident_start(c)) {
                return Err(FrontendError::Lex {
                    span: self.span_from(start),
                    message: format!("malformed number `{text}{}`", self.peek().unwrap()),
                });
            } else {
                Tok::Int(text.parse().expect("digits"))
            }
        } else {
            self.bump();
            let two = |lx: &mut Self, next: char, yes: Tok, no: Tok| {
                if lx.peek() == Some(next) {
                    lx.bump();
                    yes
                } else {
                    no
                }
            };
            match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ':' => Tok::Colon,
                ';' => Tok::Semi,
                ',' => Tok::Comma,
                '+' => Tok::Plus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '-' => two(self, '>', Tok::Arrow, Tok::Minus),
                '=' => two(self, '>', Tok::Implies, Tok::Eq),
                '>' => two(self, '=', Tok::Ge, Tok::Gt),
                '<' => {
                    if self.peek() == Some('>') {
                        self.bump();
                        Tok::Neq
                    } else {
                        two(self, '=', Tok::Le, Tok::Lt)
                    }
                }
                other => {
                    return Err(FrontendError::Lex {
                        span: self.span_from(start),
                        message: format!("illegal character `{other}`"),
                    })
                }
            }
        };
        Ok(Token {
            tok,
            span: self.span_from(start),
        })
    }
}

/// Splits source text into tokens, ending with a single `Eof` token.
pub fn lex(source: &str) -> Result<Vec<Token>, FrontendError> {
    lex_with(source, LexMode::default())
}

pub fn lex_with(source: &str, mode: LexMode) -> Result<Vec<Token>, FrontendError> {
    let mut lexer = Lexer {
        chars: source.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
        mode,
    };
    let mut out = Vec::new();
    loop {
        let t = lexer.next_token()?;
        let eof = t.tok == Tok::Eof;
        out.push(t);
        if eof {
            return Ok(out);
        }
    }
}
