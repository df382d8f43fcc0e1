//! Language-aware lexical scanner.
//!
//! Splits source text into identifier, number, string, and punctuation
//! tokens while skipping comments, using each language's comment and string
//! configuration. Line/column positions and byte offsets are tracked so the
//! method extractor can slice definitions back out of the original text.
//!
//! The scanner is deliberately lexical: it does not understand regex
//! literals, heredocs, or string interpolation, which is an acceptable
//! approximation for line and token counting.

use crate::lang::LanguageSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    Str,
    Punct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub kind: TokenKind,
    /// Byte offset of the first byte.
    pub start: usize,
    /// Byte offset one past the last byte.
    pub end: usize,
    /// 1-based line the token starts on.
    pub line: u32,
    /// 1-based line the token ends on (multi-line strings span lines).
    pub end_line: u32,
    /// 0-based byte column of the token start within its line.
    pub col: u32,
}

/// Multi-character operators, matched longest-first.
const OPS3: &[&str] = &[
    "===", "!==", "<<=", ">>=", "**=", "...", "..=", "&&=", "||=", "??=", ">>>", "<=>",
];
const OPS2: &[&str] = &[
    "==", "!=", "<=", ">=", "&&", "||", "->", "=>", "::", ":=", "++", "--", "+=", "-=", "*=", "/=",
    "%=", "&=", "|=", "^=", "<<", ">>", "?.", "??", "..", "**", "<-", "=~", "!~",
];

struct Scanner<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: u32,
    line_start: usize,
}

impl<'a> Scanner<'a> {
    fn starts_with(&self, pat: &str) -> bool {
        self.bytes[self.pos..].starts_with(pat.as_bytes())
    }

    fn newline(&mut self) {
        self.line += 1;
        self.line_start = self.pos;
    }

    /// Advance over `n` bytes, updating line bookkeeping.
    fn advance(&mut self, n: usize) {
        for _ in 0..n {
            if self.bytes[self.pos] == b'\n' {
                self.pos += 1;
                self.newline();
            } else {
                self.pos += 1;
            }
        }
    }

    /// Skip to the end of the current line without consuming the newline.
    fn skip_line(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
            self.pos += 1;
        }
    }

    /// Skip a block comment starting at the current position. `open` has
    /// already been matched. Unterminated comments run to end of input.
    fn skip_block(&mut self, open: &str, close: &str, nested: bool) {
        self.advance(open.len());
        let mut depth = 1u32;
        while self.pos < self.bytes.len() {
            if nested && self.starts_with(open) {
                depth += 1;
                self.advance(open.len());
            } else if self.starts_with(close) {
                depth -= 1;
                self.advance(close.len());
                if depth == 0 {
                    return;
                }
            } else {
                self.advance(1);
            }
        }
    }

    /// Consume a string literal whose opening delimiter has been matched.
    /// Single-line strings missing their closing delimiter end at the next
    /// newline; multi-line ones may run to end of input.
    fn consume_string(&mut self, delim: &str, escape: bool, multiline: bool) {
        self.advance(delim.len());
        while self.pos < self.bytes.len() {
            if escape && self.bytes[self.pos] == b'\\' {
                self.advance(2.min(self.bytes.len() - self.pos));
                continue;
            }
            if self.starts_with(delim) {
                self.advance(delim.len());
                return;
            }
            if self.bytes[self.pos] == b'\n' && !multiline {
                return;
            }
            self.advance(1);
        }
    }
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_' || b >= 0x80
}

fn is_ident_continue(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'$' || b >= 0x80
}

/// Tokenize `content` according to `lang`, skipping comments.
pub fn lex<'a>(content: &'a str, lang: &LanguageSpec) -> Vec<Token<'a>> {
    let mut sc = Scanner {
        src: content,
        bytes: content.as_bytes(),
        pos: 0,
        line: 1,
        line_start: 0,
    };
    let mut tokens = Vec::new();

    'outer: while sc.pos < sc.bytes.len() {
        let b = sc.bytes[sc.pos];
        if b == b'\n' {
            sc.pos += 1;
            sc.newline();
            continue;
        }
        if b.is_ascii_whitespace() {
            sc.pos += 1;
            continue;
        }
        // Comments take precedence over everything else; block openers are
        // checked before line markers so e.g. Lua's `--[[` wins over `--`.
        for (open, close) in lang.block_comments {
            if sc.starts_with(open) {
                sc.skip_block(open, close, lang.nested_blocks);
                continue 'outer;
            }
        }
        for marker in lang.line_comments {
            if sc.starts_with(marker) {
                sc.skip_line();
                continue 'outer;
            }
        }

        let start = sc.pos;
        let line = sc.line;
        let col = (sc.pos - sc.line_start) as u32;

        // String literals (delimiters listed longest-first per language).
        let mut matched_string = false;
        for spec in lang.strings {
            if sc.starts_with(spec.delim) {
                sc.consume_string(spec.delim, spec.escape, spec.multiline);
                tokens.push(Token {
                    text: &sc.src[start..sc.pos],
                    kind: TokenKind::Str,
                    start,
                    end: sc.pos,
                    line,
                    end_line: sc.line,
                    col,
                });
                matched_string = true;
                break;
            }
        }
        if matched_string {
            continue;
        }

        let kind = if b.is_ascii_digit() {
            // Numbers greedily take alphanumerics and dots: covers hex,
            // floats, exponents, and suffixes well enough for counting.
            sc.pos += 1;
            while sc.pos < sc.bytes.len()
                && (sc.bytes[sc.pos].is_ascii_alphanumeric()
                    || sc.bytes[sc.pos] == b'_'
                    || sc.bytes[sc.pos] == b'.')
            {
                sc.pos += 1;
            }
            TokenKind::Number
        } else if is_ident_start(b)
            || ((b == b'$' || b == b'@')
                && sc
                    .bytes
                    .get(sc.pos + 1)
                    .copied()
                    .is_some_and(is_ident_start))
        {
            if b == b'$' || b == b'@' {
                sc.pos += 1;
            }
            sc.pos += 1;
            while sc.pos < sc.bytes.len() && is_ident_continue(sc.bytes[sc.pos]) {
                sc.pos += 1;
            }
            TokenKind::Ident
        } else {
            // Punctuation with maximal munch on known operators.
            let rest = &sc.src[sc.pos..];
            let op_len = OPS3
                .iter()
                .find(|op| rest.starts_with(**op))
                .map(|op| op.len())
                .or_else(|| {
                    OPS2.iter()
                        .find(|op| rest.starts_with(**op))
                        .map(|op| op.len())
                })
                .unwrap_or_else(|| {
                    // Single character; keep multi-byte UTF-8 intact.
                    rest.chars().next().map_or(1, char::len_utf8)
                });
            sc.pos += op_len;
            TokenKind::Punct
        };

        tokens.push(Token {
            text: &sc.src[start..sc.pos],
            kind,
            start,
            end: sc.pos,
            line,
            end_line: sc.line,
            col,
        });
    }
    tokens
}
