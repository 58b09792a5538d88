use crate::diag::{Code, Diagnostic};
use crate::model::Loc;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    /// Unsigned integer literal; sign and range are handled by the parser.
    Int(u64),
    Real(f64),
    Str(String),
    Sym(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Real(r) => format!("`{r}`"),
            Tok::Str(_) => "string literal".to_string(),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub loc: Loc,
}

const SYMBOLS: [&str; 22] = [
    ":=", "==", "!=", "<=", ">=", "++", "{", "}", "[", "]", "(", ")", ",", ":", "=", "<", ">", "+",
    "-", "*", "/", "~",
];

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '$'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits source text into tokens. Never fails: malformed input yields E000
/// diagnostics and the offending characters are skipped.
pub fn lex(text: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut diags = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    macro_rules! advance {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let loc = Loc::new(line, col);
        if c.is_whitespace() {
            advance!();
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                advance!();
            }
            continue;
        }
        if is_ident_start(c) {
            let start = i;
            advance!();
            while i < chars.len() && is_ident_continue(chars[i]) {
                advance!();
            }
            let word: String = chars[start..i].iter().collect();
            tokens.push(Token {
                tok: Tok::Ident(word),
                loc,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance!();
            }
            let is_real = i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit();
            if is_real {
                advance!();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    advance!();
                }
            }
            let text: String = chars[start..i].iter().collect();
            let tok = if is_real {
                match text.parse::<f64>() {
                    Ok(r) if r.is_finite() => Tok::Real(r),
                    _ => {
                        diags.push(syntax(loc, format!("real literal `{text}` out of range")));
                        Tok::Real(0.0)
                    }
                }
            } else {
                match text.parse::<u64>() {
                    Ok(v) => Tok::Int(v),
                    Err(_) => {
                        diags.push(syntax(
                            loc,
                            format!("integer literal `{text}` out of range"),
                        ));
                        Tok::Int(0)
                    }
                }
            };
            tokens.push(Token { tok, loc });
            continue;
        }
        if c == '"' {
            advance!();
            let mut value = String::new();
            let mut closed = false;
            while i < chars.len() {
                match chars[i] {
                    '"' => {
                        advance!();
                        closed = true;
                        break;
                    }
                    '\n' => break,
                    '\\' => {
                        let esc = chars.get(i + 1).copied();
                        match esc {
                            Some(e @ ('"' | '\\')) => {
                                value.push(e);
                                advance!();
                                advance!();
                            }
                            _ => {
                                diags.push(syntax(
                                    Loc::new(line, col),
                                    "invalid escape in string literal",
                                ));
                                advance!();
                            }
                        }
                    }
                    ch => {
                        value.push(ch);
                        advance!();
                    }
                }
            }
            if !closed {
                diags.push(syntax(loc, "unterminated string literal"));
            }
            tokens.push(Token {
                tok: Tok::Str(value),
                loc,
            });
            continue;
        }
        let rest2: String = chars[i..chars.len().min(i + 2)].iter().collect();
        if let Some(sym) = SYMBOLS.iter().find(|s| rest2.starts_with(**s)) {
            for _ in 0..sym.chars().count() {
                advance!();
            }
            tokens.push(Token {
                tok: Tok::Sym(sym),
                loc,
            });
            continue;
        }
        diags.push(syntax(
            loc,
            format!("unexpected character `{}`", c.escape_default()),
        ));
        advance!();
    }
    tokens.push(Token {
        tok: Tok::Eof,
        loc: Loc::new(line, col),
    });
    (tokens, diags)
}

pub(crate) fn syntax(loc: Loc, message: impl Into<String>) -> Diagnostic {
    Diagnostic::new(Code::E000, "syntax", message).at(loc)
}
