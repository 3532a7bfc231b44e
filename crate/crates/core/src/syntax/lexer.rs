//! Tokenizer shared by the module, proof, and PlusCal parsers.

use super::ast::StepLabel;
use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(i64),
    Str(String),
    /// `<1>2.` introducing a step.
    StepDef(StepLabel),
    /// `<1>2` citing a step.
    StepRef(StepLabel),
    /// Punctuation and backslash operators, normalized (e.g. `\land` is `/\`).
    Sym(&'static str),
    /// Four or more `-`.
    Dashes,
    /// Four or more `=`.
    ModuleEnd,
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
    /// First token on its source line.
    pub first_on_line: bool,
}

const SYMBOLS: &[&str] = &[
    "|->", "<=>", "->", "=>", "==", "=<", "<=", ">=", "/=", ":=", "<<", ">>", "[]", "]_", "..",
    "/\\", "\\/", "=", "#", "<", ">", "(", ")", "[", "]", "{", "}", ",", ":", "'", "!", "~", "+",
    "-", "*", ";", ".",
];

const BACKSLASH_WORDS: &[(&str, &str)] = &[
    ("in", "\\in"),
    ("notin", "\\notin"),
    ("cup", "\\cup"),
    ("union", "\\cup"),
    ("cap", "\\cap"),
    ("intersect", "\\cap"),
    ("subseteq", "\\subseteq"),
    ("A", "\\A"),
    ("E", "\\E"),
    ("land", "/\\"),
    ("lor", "\\/"),
    ("lnot", "~"),
    ("neg", "~"),
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;

    macro_rules! bump {
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

    let starts = |i: usize, s: &str| {
        let mut k = i;
        for c in s.chars() {
            if chars.get(k) != Some(&c) {
                return false;
            }
            k += 1;
        }
        true
    };

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if starts(i, "\\*") {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if starts(i, "(*") {
            let (sl, sc) = (line, col);
            let mut depth = 0;
            loop {
                if i >= chars.len() {
                    return Err(ParseError::syntax(sl, sc, "unterminated comment"));
                }
                if starts(i, "(*") {
                    depth += 1;
                    bump!();
                    bump!();
                } else if starts(i, "*)") {
                    depth -= 1;
                    bump!();
                    bump!();
                    if depth == 0 {
                        break;
                    }
                } else {
                    bump!();
                }
            }
            continue;
        }

        let (tl, tc) = (line, col);
        let first = toks.last().is_none_or(|t: &Token| t.line != tl);
        let tok;
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                bump!();
            }
            tok = Tok::Ident(s);
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(chars[i]);
                bump!();
            }
            if i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '_') {
                return Err(ParseError::syntax(tl, tc, "identifiers must start with a letter"));
            }
            let n = s
                .parse()
                .map_err(|_| ParseError::syntax(tl, tc, "integer literal out of range"))?;
            tok = Tok::Num(n);
        } else if c == '"' {
            bump!();
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None | Some('\n') => {
                        return Err(ParseError::syntax(tl, tc, "unterminated string"));
                    }
                    Some('"') => {
                        bump!();
                        break;
                    }
                    Some('\\') => {
                        bump!();
                        match chars.get(i) {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some(&x @ ('"' | '\\')) => s.push(x),
                            _ => return Err(ParseError::syntax(line, col, "bad escape in string")),
                        }
                        bump!();
                    }
                    Some(&x) => {
                        s.push(x);
                        bump!();
                    }
                }
            }
            tok = Tok::Str(s);
        } else if let Some((label, len, def)) = step_label(&chars, i) {
            for _ in 0..len {
                bump!();
            }
            tok = if def { Tok::StepDef(label) } else { Tok::StepRef(label) };
        } else if starts(i, "----") {
            while i < chars.len() && chars[i] == '-' {
                bump!();
            }
            tok = Tok::Dashes;
        } else if starts(i, "====") {
            while i < chars.len() && chars[i] == '=' {
                bump!();
            }
            tok = Tok::ModuleEnd;
        } else if starts(i, "--algorithm") {
            for _ in 0.."--algorithm".len() {
                bump!();
            }
            tok = Tok::Ident("--algorithm".into());
        } else if c == '\\' && chars.get(i + 1).is_some_and(|c| c.is_ascii_alphabetic()) {
            let mut w = String::new();
            let mut k = i + 1;
            while k < chars.len() && chars[k].is_ascii_alphanumeric() {
                w.push(chars[k]);
                k += 1;
            }
            let Some(&(_, sym)) = BACKSLASH_WORDS.iter().find(|(n, _)| *n == w) else {
                return Err(ParseError::syntax(tl, tc, &format!("unknown operator \\{w}")));
            };
            while i < k {
                bump!();
            }
            tok = Tok::Sym(sym);
        } else if let Some(sym) = SYMBOLS.iter().find(|s| starts(i, s)) {
            for _ in 0..sym.len() {
                bump!();
            }
            tok = Tok::Sym(sym);
        } else if c == '\\' {
            bump!();
            tok = Tok::Sym("\\");
        } else {
            return Err(ParseError::syntax(tl, tc, &format!("unexpected character {c:?}")));
        }
        toks.push(Token {
            tok,
            line: tl,
            col: tc,
            first_on_line: first,
        });
    }
    toks.push(Token {
        tok: Tok::Eof,
        line,
        col,
        first_on_line: true,
    });
    Ok(toks)
}

/// `<digits>alnum+` optionally followed by `.`; returns (label, length, is_definition).
fn step_label(chars: &[char], i: usize) -> Option<(StepLabel, usize, bool)> {
    if chars.get(i) != Some(&'<') {
        return None;
    }
    let mut k = i + 1;
    let mut lvl = String::new();
    while k < chars.len() && chars[k].is_ascii_digit() {
        lvl.push(chars[k]);
        k += 1;
    }
    if lvl.is_empty() || chars.get(k) != Some(&'>') {
        return None;
    }
    k += 1;
    let mut name = String::new();
    while k < chars.len() && chars[k].is_ascii_alphanumeric() {
        name.push(chars[k]);
        k += 1;
    }
    if name.is_empty() {
        return None;
    }
    let def = chars.get(k) == Some(&'.') && chars.get(k + 1) != Some(&'.');
    if def {
        k += 1;
    }
    Some((StepLabel::new(lvl.parse().ok()?, &name), k - i, def))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn operators_and_labels() {
        assert_eq!(
            kinds("<2>1. [][Next]_vars <3>2"),
            vec![
                Tok::StepDef(StepLabel::new(2, "1")),
                Tok::Sym("[]"),
                Tok::Sym("["),
                Tok::Ident("Next".into()),
                Tok::Sym("]_"),
                Tok::Ident("vars".into()),
                Tok::StepRef(StepLabel::new(3, "2")),
                Tok::Eof
            ]
        );
        assert_eq!(
            kinds("x \\in {0, 1} |-> \\land"),
            vec![
                Tok::Ident("x".into()),
                Tok::Sym("\\in"),
                Tok::Sym("{"),
                Tok::Num(0),
                Tok::Sym(","),
                Tok::Num(1),
                Tok::Sym("}"),
                Tok::Sym("|->"),
                Tok::Sym("/\\"),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let t = tokenize("a (* x (* nested *) *) \\* tail\n  b").unwrap();
        assert_eq!(t[1].tok, Tok::Ident("b".into()));
        assert_eq!((t[1].line, t[1].col, t[1].first_on_line), (2, 3, true));
        assert!(!tokenize("a b").unwrap()[1].first_on_line);
        assert!(matches!(tokenize("\"abc"), Err(ParseError::Syntax { line: 1, col: 1, .. })));
    }
}
