use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    /// Lowercase-initial identifier or quoted atom.
    Ident(String),
    /// Uppercase- or underscore-initial identifier.
    Var(String),
    Int(i64),
    Float(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Dot,
    Neck,  // :-
    Arrow, // =>
    Tilde,
    Eq,
    Neq, // \=
    Lt,
    Gt,
    Le, // =<
    Ge, // >=
    Plus,
    Minus,
    Star,
    IntDiv, // //
    Bar,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Var(s) => write!(f, "{s}"),
            Tok::Int(i) => write!(f, "{i}"),
            Tok::Float(x) => write!(f, "{x}"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::LBracket => write!(f, "["),
            Tok::RBracket => write!(f, "]"),
            Tok::Comma => write!(f, ","),
            Tok::Semi => write!(f, ";"),
            Tok::Dot => write!(f, "."),
            Tok::Neck => write!(f, ":-"),
            Tok::Arrow => write!(f, "=>"),
            Tok::Tilde => write!(f, "~"),
            Tok::Eq => write!(f, "="),
            Tok::Neq => write!(f, "\\="),
            Tok::Lt => write!(f, "<"),
            Tok::Gt => write!(f, ">"),
            Tok::Le => write!(f, "=<"),
            Tok::Ge => write!(f, ">="),
            Tok::Plus => write!(f, "+"),
            Tok::Minus => write!(f, "-"),
            Tok::Star => write!(f, "*"),
            Tok::IntDiv => write!(f, "//"),
            Tok::Bar => write!(f, "|"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spanned {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexError {
    pub msg: String,
    pub line: u32,
    pub col: u32,
}

pub fn lex(src: &str) -> Result<Vec<Spanned>, LexError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let mut line: u32 = 1;
    let mut col: u32 = 1;

    macro_rules! bump {
        () => {{
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, col);
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump!();
            }
            '%' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump!();
                }
            }
            '(' => {
                bump!();
                out.push(Spanned { tok: Tok::LParen, line: tl, col: tc });
            }
            ')' => {
                bump!();
                out.push(Spanned { tok: Tok::RParen, line: tl, col: tc });
            }
            '[' => {
                bump!();
                out.push(Spanned { tok: Tok::LBracket, line: tl, col: tc });
            }
            ']' => {
                bump!();
                out.push(Spanned { tok: Tok::RBracket, line: tl, col: tc });
            }
            ',' => {
                bump!();
                out.push(Spanned { tok: Tok::Comma, line: tl, col: tc });
            }
            ';' => {
                bump!();
                out.push(Spanned { tok: Tok::Semi, line: tl, col: tc });
            }
            '|' => {
                bump!();
                out.push(Spanned { tok: Tok::Bar, line: tl, col: tc });
            }
            '~' => {
                bump!();
                out.push(Spanned { tok: Tok::Tilde, line: tl, col: tc });
            }
            '+' => {
                bump!();
                out.push(Spanned { tok: Tok::Plus, line: tl, col: tc });
            }
            '-' => {
                bump!();
                out.push(Spanned { tok: Tok::Minus, line: tl, col: tc });
            }
            '*' => {
                bump!();
                out.push(Spanned { tok: Tok::Star, line: tl, col: tc });
            }
            '/' => {
                bump!();
                if chars.peek() == Some(&'/') {
                    bump!();
                    out.push(Spanned { tok: Tok::IntDiv, line: tl, col: tc });
                } else {
                    return Err(LexError {
                        msg: "single `/` is not an operator (use `//`)".into(),
                        line: tl,
                        col: tc,
                    });
                }
            }
            ':' => {
                bump!();
                if chars.peek() == Some(&'-') {
                    bump!();
                    out.push(Spanned { tok: Tok::Neck, line: tl, col: tc });
                } else {
                    return Err(LexError { msg: "expected `:-`".into(), line: tl, col: tc });
                }
            }
            '=' => {
                bump!();
                let tok = match chars.peek() {
                    Some('>') => {
                        bump!();
                        Tok::Arrow
                    }
                    Some('<') => {
                        bump!();
                        Tok::Le
                    }
                    _ => Tok::Eq,
                };
                out.push(Spanned { tok, line: tl, col: tc });
            }
            '>' => {
                bump!();
                let tok = if chars.peek() == Some(&'=') {
                    bump!();
                    Tok::Ge
                } else {
                    Tok::Gt
                };
                out.push(Spanned { tok, line: tl, col: tc });
            }
            '<' => {
                bump!();
                out.push(Spanned { tok: Tok::Lt, line: tl, col: tc });
            }
            '\\' => {
                bump!();
                if chars.peek() == Some(&'=') {
                    bump!();
                    out.push(Spanned { tok: Tok::Neq, line: tl, col: tc });
                } else {
                    return Err(LexError { msg: "expected `\\=`".into(), line: tl, col: tc });
                }
            }
            '.' => {
                bump!();
                out.push(Spanned { tok: Tok::Dot, line: tl, col: tc });
            }
            '\'' => {
                bump!();
                let mut s = String::new();
                loop {
                    match chars.peek() {
                        Some('\'') => {
                            bump!();
                            break;
                        }
                        Some(_) => s.push(bump!()),
                        None => {
                            return Err(LexError {
                                msg: "unterminated quoted atom".into(),
                                line: tl,
                                col: tc,
                            })
                        }
                    }
                }
                out.push(Spanned { tok: Tok::Ident(s), line: tl, col: tc });
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while chars.peek().is_some_and(|c| c.is_ascii_digit()) {
                    s.push(bump!());
                }
                // a fraction only if a digit follows the dot, so `p(1).`
                // still ends in a Dot token
                let mut is_float = false;
                if chars.peek() == Some(&'.') {
                    let mut ahead = chars.clone();
                    ahead.next();
                    if ahead.peek().is_some_and(|c| c.is_ascii_digit()) {
                        is_float = true;
                        s.push(bump!());
                        while chars.peek().is_some_and(|c| c.is_ascii_digit()) {
                            s.push(bump!());
                        }
                    }
                }
                let tok = if is_float {
                    Tok::Float(s.parse().map_err(|_| LexError {
                        msg: format!("bad float literal `{s}`"),
                        line: tl,
                        col: tc,
                    })?)
                } else {
                    Tok::Int(s.parse().map_err(|_| LexError {
                        msg: format!("integer literal `{s}` out of range"),
                        line: tl,
                        col: tc,
                    })?)
                };
                out.push(Spanned { tok, line: tl, col: tc });
            }
            c if c.is_ascii_lowercase() => {
                let mut s = String::new();
                while chars.peek().is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_') {
                    s.push(bump!());
                }
                out.push(Spanned { tok: Tok::Ident(s), line: tl, col: tc });
            }
            c if c.is_ascii_uppercase() || c == '_' => {
                let mut s = String::new();
                while chars.peek().is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_') {
                    s.push(bump!());
                }
                out.push(Spanned { tok: Tok::Var(s), line: tl, col: tc });
            }
            other => {
                return Err(LexError {
                    msg: format!("unexpected character `{other}`"),
                    line: tl,
                    col: tc,
                })
            }
        }
    }
    Ok(out)
}
