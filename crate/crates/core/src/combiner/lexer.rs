//! Just enough of a C tokenizer to find a file-scope `main` definition.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kind {
    Ident,
    Punct(u8),
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Token {
    pub kind: Kind,
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.start..self.end]
    }
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_'
}

fn is_ident_char(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// Tokens outside comments, string and character literals, preprocessor
/// directives, and `#if 0` regions.
pub(crate) fn tokenize(src: &str) -> Vec<Token> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line_start = true;
    // nesting of conditionals inside an `#if 0` region; 0 means active
    let mut disabled = 0usize;
    while i < b.len() {
        let c = b[i];
        if c == b'\n' {
            line_start = true;
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'/' && b.get(i + 1) == Some(&b'/') {
            i = skip_line_comment(b, i);
            continue;
        }
        if c == b'/' && b.get(i + 1) == Some(&b'*') {
            i = src[i + 2..].find("*/").map_or(b.len(), |p| i + 2 + p + 2);
            continue;
        }
        if c == b'#' && line_start {
            let end = directive_end(b, i);
            disabled = track_conditional(&src[i + 1..end], disabled);
            i = end;
            continue;
        }
        line_start = false;
        if c == b'"' || c == b'\'' {
            let end = skip_literal(b, i);
            if disabled == 0 {
                out.push(Token {
                    kind: Kind::Other,
                    start: i,
                    end,
                });
            }
            i = end;
            continue;
        }
        let start = i;
        let kind = if is_ident_start(c) {
            while i < b.len() && is_ident_char(b[i]) {
                i += 1;
            }
            // prefixed literals such as L"..." or u8'x'
            if i < b.len() && (b[i] == b'"' || b[i] == b'\'') && matches!(&src[start..i], "L" | "u" | "U" | "u8") {
                i = skip_literal(b, i);
                Kind::Other
            } else {
                Kind::Ident
            }
        } else if c.is_ascii_digit() {
            while i < b.len() && (is_ident_char(b[i]) || b[i] == b'.') {
                i += 1;
            }
            Kind::Other
        } else {
            i += 1;
            if c.is_ascii() {
                Kind::Punct(c)
            } else {
                Kind::Other
            }
        };
        if disabled == 0 {
            out.push(Token { kind, start, end: i });
        }
    }
    out
}

fn skip_line_comment(b: &[u8], mut i: usize) -> usize {
    while i < b.len() && b[i] != b'\n' {
        if b[i] == b'\\' && b.get(i + 1) == Some(&b'\n') {
            i += 1;
        }
        i += 1;
    }
    i
}

fn skip_literal(b: &[u8], i: usize) -> usize {
    let quote = b[i];
    let mut j = i + 1;
    while j < b.len() {
        match b[j] {
            b'\\' => j += 2,
            b'\n' => return j,
            q if q == quote => return j + 1,
            _ => j += 1,
        }
    }
    b.len()
}

/// End of a preprocessor directive, honoring line continuations and comments.
fn directive_end(b: &[u8], mut i: usize) -> usize {
    while i < b.len() && b[i] != b'\n' {
        if b[i] == b'\\' && b.get(i + 1) == Some(&b'\n') {
            i += 2;
            continue;
        }
        if b[i] == b'/' && b.get(i + 1) == Some(&b'*') {
            let rest = &b[i + 2..];
            i = rest
                .windows(2)
                .position(|w| w == b"*/")
                .map_or(b.len(), |p| i + 2 + p + 2);
            continue;
        }
        i += 1;
    }
    i
}

fn track_conditional(directive: &str, disabled: usize) -> usize {
    let mut words = directive.split_whitespace();
    let name = words.next().unwrap_or("");
    let arg = words.next().unwrap_or("");
    match (disabled, name) {
        (0, "if") if arg == "0" => 1,
        (0, _) => 0,
        (d, "if" | "ifdef" | "ifndef") => d + 1,
        (1, "else" | "elif" | "endif") => 0,
        (d, "endif") => d - 1,
        (d, _) => d,
    }
}
