//! Tokens with 1-based line/column positions.

use std::fmt;

use crate::diagnostic::Diagnostic;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    /// Letters, digits, `_` and `.`, starting with a letter or `_`.
    Ident(String),
    /// A numeric literal; `integral` when written without `.` or exponent.
    Number { value: f64, integral: bool },
    Semi,
    Comma,
    Colon,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Eq,
    NotEq,
    Gt,
    Arrow,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Bar,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Number { value, .. } => write!(f, "number `{value}`"),
            Tok::Eof => f.write_str("end of input"),
            other => write!(f, "`{}`", other.symbol()),
        }
    }
}

impl Tok {
    pub fn symbol(&self) -> &'static str {
        match self {
            Tok::Ident(_) => "identifier",
            Tok::Number { .. } => "number",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Eq => "=",
            Tok::NotEq => "!=",
            Tok::Gt => ">",
            Tok::Arrow => "=>",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Caret => "^",
            Tok::Bar => "|",
            Tok::Eof => "end of input",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

/// Splits `src` into tokens; `#` starts a comment running to the end of the line.
pub fn lex(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line: start_line, col: start_col });
        if c.is_ascii_alphabetic() || c == '_' {
            let begin = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                i += 1;
            }
            col += i - begin;
            push(&mut out, Tok::Ident(chars[begin..i].iter().collect()));
            continue;
        }
        if c.is_ascii_digit() {
            let begin = i;
            let mut integral = true;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                integral = false;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    integral = false;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[begin..i].iter().collect();
            col += i - begin;
            let value: f64 = text
                .parse()
                .map_err(|_| Diagnostic::new(start_line, start_col, format!("malformed number `{text}`"), Vec::new()))?;
            if !value.is_finite() {
                return Err(Diagnostic::new(start_line, start_col, format!("number `{text}` overflows"), Vec::new()));
            }
            push(&mut out, Tok::Number { value, integral });
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, width) = match (c, next) {
            ('!', Some('=')) => (Tok::NotEq, 2),
            ('=', Some('>')) => (Tok::Arrow, 2),
            (';', _) => (Tok::Semi, 1),
            (',', _) => (Tok::Comma, 1),
            (':', _) => (Tok::Colon, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('{', _) => (Tok::LBrace, 1),
            ('}', _) => (Tok::RBrace, 1),
            ('[', _) => (Tok::LBracket, 1),
            (']', _) => (Tok::RBracket, 1),
            ('=', _) => (Tok::Eq, 1),
            ('>', _) => (Tok::Gt, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            ('/', _) => (Tok::Slash, 1),
            ('^', _) => (Tok::Caret, 1),
            ('|', _) => (Tok::Bar, 1),
            _ => {
                return Err(Diagnostic::new(start_line, start_col, format!("unexpected character `{}`", c.escape_debug()), Vec::new()))
            }
        };
        i += width;
        col += width;
        push(&mut out, tok);
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        lex(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn basic_tokens() {
        assert_eq!(
            toks("fn w = x^2 + 1.5e1; # comment\n"),
            vec![
                Tok::Ident("fn".into()),
                Tok::Ident("w".into()),
                Tok::Eq,
                Tok::Ident("x".into()),
                Tok::Caret,
                Tok::Number { value: 2.0, integral: true },
                Tok::Plus,
                Tok::Number { value: 15.0, integral: false },
                Tok::Semi,
                Tok::Eof,
            ]
        );
        assert_eq!(toks("a != b => c.d"), vec![
            Tok::Ident("a".into()),
            Tok::NotEq,
            Tok::Ident("b".into()),
            Tok::Arrow,
            Tok::Ident("c.d".into()),
            Tok::Eof
        ]);
    }

    #[test]
    fn positions() {
        let t = lex("space M\n  = R").unwrap();
        assert_eq!((t[1].line, t[1].col), (1, 7));
        assert_eq!((t[2].line, t[2].col), (2, 3));
        assert_eq!((t[3].line, t[3].col), (2, 5));
    }

    #[test]
    fn lexical_errors() {
        let e = lex("fn f = x @ y").unwrap_err();
        assert_eq!((e.line, e.col), (1, 10));
        assert!(lex("1e999").is_err());
    }
}
