//! Method and function extraction.
//!
//! Finds named function/method definitions in source text and reports their
//! name, normalized signature, parameter list, and line span. Extraction is
//! token-pattern based per language family (brace languages, keyword-intro
//! languages, JavaScript with arrows, Python indentation, Ruby `def..end`)
//! rather than a full parse, so exotic constructs (C++ operator overloads,
//! Ruby one-line modifiers opening blocks, anonymous callbacks) are
//! deliberately out of scope; regular definitions — the overwhelming bulk of
//! real code — are recognized reliably.

use crate::lang::{LanguageSpec, MethodStyle};
use crate::lexer::{lex, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDef {
    /// Method name; qualified (`Type::name`, `self.name`) where the language
    /// writes it that way.
    pub name: String,
    /// `name(params)` with whitespace collapsed.
    pub signature: String,
    pub parameters: Vec<String>,
    /// 1-based line of the definition (the name/keyword line).
    pub start_line: u32,
    /// 1-based line of the closing brace / `end` / last body token.
    pub end_line: u32,
    /// Source lines `start_line..=end_line`, exactly as in the file.
    pub code: String,
}

/// Extract all named method definitions from `content`. Returns an empty
/// vector for languages without method support.
pub fn extract_methods(content: &str, lang: &LanguageSpec) -> Vec<MethodDef> {
    let Some(style) = lang.method_style else {
        return Vec::new();
    };
    let tokens = lex(content, lang);
    let ctx = Ctx::new(content, &tokens);
    let mut defs = match style {
        MethodStyle::CLike => c_like(&ctx),
        MethodStyle::Keyword(keywords) => keyword_style(&ctx, keywords),
        MethodStyle::JavaScript => javascript(&ctx),
        MethodStyle::PythonIndent => python(&ctx),
        MethodStyle::RubyEnd => ruby(&ctx),
    };
    defs.sort_by(|a, b| (a.start_line, &a.name).cmp(&(b.start_line, &b.name)));
    defs.dedup_by(|a, b| a.signature == b.signature && a.start_line == b.start_line);
    defs
}

/// Shared per-file extraction context: tokens plus precomputed line and
/// nesting information.
struct Ctx<'a> {
    content: &'a str,
    tokens: &'a [Token<'a>],
    /// Byte span of each 1-based line, including its newline.
    line_spans: Vec<(usize, usize)>,
    /// Token is the first of its physical line at bracket depth 0.
    line_initial: Vec<bool>,
    /// Text of the first token on each line (index = line - 1).
    line_first: Vec<&'a str>,
}

impl<'a> Ctx<'a> {
    fn new(content: &'a str, tokens: &'a [Token<'a>]) -> Self {
        let mut line_spans = Vec::new();
        let mut start = 0;
        for (idx, b) in content.bytes().enumerate() {
            if b == b'\n' {
                line_spans.push((start, idx + 1));
                start = idx + 1;
            }
        }
        if start < content.len() {
            line_spans.push((start, content.len()));
        }

        let mut line_initial = vec![false; tokens.len()];
        let mut line_first = vec![""; line_spans.len()];
        let mut depth = 0i32;
        let mut prev_end_line = 0u32;
        for (idx, tok) in tokens.iter().enumerate() {
            let first_of_line = tok.line > prev_end_line;
            if first_of_line {
                if let Some(slot) = line_first.get_mut(tok.line as usize - 1) {
                    *slot = tok.text;
                }
            }
            line_initial[idx] = first_of_line && depth == 0;
            if tok.kind == TokenKind::Punct {
                match tok.text {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" | "}" => depth = (depth - 1).max(0),
                    _ => {}
                }
            }
            prev_end_line = tok.end_line;
        }
        Ctx {
            content,
            tokens,
            line_spans,
            line_initial,
            line_first,
        }
    }

    fn slice_lines(&self, start_line: u32, end_line: u32) -> String {
        let lo = self.line_spans.get(start_line as usize - 1).map(|s| s.0);
        let hi = self
            .line_spans
            .get((end_line as usize - 1).min(self.line_spans.len().saturating_sub(1)))
            .map(|s| s.1);
        match (lo, hi) {
            (Some(lo), Some(hi)) if lo <= hi => self.content[lo..hi].to_string(),
            _ => String::new(),
        }
    }

    /// Index of the token matching `open` at `open_idx` (e.g. `(` -> `)`).
    fn find_close(&self, open_idx: usize, open: &str, close: &str) -> Option<usize> {
        let mut depth = 0i32;
        for (idx, tok) in self.tokens.iter().enumerate().skip(open_idx) {
            if tok.kind == TokenKind::Punct {
                if tok.text == open {
                    depth += 1;
                } else if tok.text == close {
                    depth -= 1;
                    if depth == 0 {
                        return Some(idx);
                    }
                }
            }
        }
        None
    }

    /// Parameter texts between `(`@open and `)`@close: split on top-level
    /// commas, each reconstructed from the source with whitespace collapsed.
    fn split_params(&self, open: usize, close: usize) -> Vec<String> {
        let mut params = Vec::new();
        let mut depth = 0i32;
        let mut angle = 0i32;
        let mut seg_start: Option<usize> = None;
        let mut seg_end = 0usize;
        for idx in open + 1..close {
            let tok = &self.tokens[idx];
            let at_top = depth == 0 && angle == 0;
            if tok.kind == TokenKind::Punct {
                match tok.text {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" | "}" => depth = (depth - 1).max(0),
                    "<" => angle += 1,
                    ">" => angle = (angle - 1).max(0),
                    ">>" => angle = (angle - 2).max(0),
                    "," if at_top => {
                        if let Some(s) = seg_start.take() {
                            params.push(collapse_ws(&self.content[s..seg_end]));
                        }
                        continue;
                    }
                    _ => {}
                }
            }
            if seg_start.is_none() {
                seg_start = Some(tok.start);
            }
            seg_end = tok.end;
        }
        if let Some(s) = seg_start {
            params.push(collapse_ws(&self.content[s..seg_end]));
        }
        params.retain(|p| !p.is_empty());
        params
    }

    /// Walk from `from` to the `{` opening the body. Balanced `(..)`/`[..]`
    /// groups are skipped wholesale; any token not accepted by `allowed`
    /// aborts (as does `;`, the prototype/declaration marker).
    fn walk_to_body(&self, from: usize, allowed: &[&str]) -> Option<usize> {
        let mut k = from;
        while k < self.tokens.len() {
            let tok = &self.tokens[k];
            match (tok.kind, tok.text) {
                (TokenKind::Punct, "{") => return Some(k),
                (TokenKind::Punct, ";") => return None,
                (TokenKind::Punct, "(") => k = self.find_close(k, "(", ")")? + 1,
                (TokenKind::Punct, "[") => k = self.find_close(k, "[", "]")? + 1,
                (TokenKind::Ident | TokenKind::Number, _) => k += 1,
                (TokenKind::Punct, text) if allowed.contains(&text) => k += 1,
                _ => return None,
            }
        }
        None
    }

    fn make_def(
        &self,
        name: String,
        params: Vec<String>,
        start_line: u32,
        end_line: u32,
    ) -> MethodDef {
        let signature = format!("{}({})", name, params.join(", "));
        MethodDef {
            code: self.slice_lines(start_line, end_line),
            name,
            signature,
            parameters: params,
            start_line,
            end_line,
        }
    }

    /// End line of a brace body opened at token `body`: the matching `}`,
    /// or the last token when the text is truncated.
    fn body_end_line(&self, body: usize) -> u32 {
        match self.find_close(body, "{", "}") {
            Some(close) => self.tokens[close].line,
            None => self.tokens.last().map_or(0, |t| t.end_line),
        }
    }
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Control-flow and declaration keywords that look like `name(...)` but
/// never introduce a method definition.
const NOT_A_METHOD: &[&str] = &[
    "if",
    "else",
    "elseif",
    "for",
    "while",
    "switch",
    "case",
    "return",
    "sizeof",
    "catch",
    "do",
    "new",
    "delete",
    "throw",
    "typedef",
    "using",
    "namespace",
    "try",
    "synchronized",
    "foreach",
    "lock",
    "fixed",
    "assert",
    "static_assert",
    "decltype",
    "typeof",
    "alignof",
    "defined",
];

const CLIKE_BETWEEN: &[&str] = &[",", ":", "&", "*", "::", "->", "=", "<", ">"];

/// `ret name(args) ... {` definitions: C, C++, Java, C#, Objective-C
/// function bodies, including `Qualified::names` and constructor
/// initializer lists.
fn c_like(ctx: &Ctx<'_>) -> Vec<MethodDef> {
    let toks = ctx.tokens;
    let mut defs = Vec::new();
    // Tokens consumed by a matched signature (e.g. a constructor initializer
    // list) must not be re-scanned as candidates of their own.
    let mut resume = 0;
    for i in 0..toks.len() {
        if i < resume {
            continue;
        }
        if toks[i].kind != TokenKind::Ident || NOT_A_METHOD.contains(&toks[i].text) {
            continue;
        }
        if toks
            .get(i + 1)
            .is_none_or(|t| t.text != "(" || t.kind != TokenKind::Punct)
        {
            continue;
        }
        // Skip calls through an object and anonymous-class construction.
        if i > 0 && ["new", ".", "->", "?."].contains(&toks[i - 1].text) {
            continue;
        }
        // Skip function-like macro definitions: `#define F(x) {...}`.
        if ctx
            .line_first
            .get(toks[i].line as usize - 1)
            .is_some_and(|first| *first == "#")
        {
            continue;
        }
        let Some(close) = ctx.find_close(i + 1, "(", ")") else {
            continue;
        };
        let Some(body) = ctx.walk_to_body(close + 1, CLIKE_BETWEEN) else {
            continue;
        };

        // Walk back over a destructor tilde and `Namespace::` qualifiers.
        let mut first = i;
        let mut name = toks[i].text.to_string();
        if first > 0 && toks[first - 1].text == "~" {
            name.insert(0, '~');
            first -= 1;
        }
        while first >= 2 && toks[first - 1].text == "::" && toks[first - 2].kind == TokenKind::Ident
        {
            first -= 2;
            name = format!("{}::{}", toks[first].text, name);
        }

        let mut params = ctx.split_params(i + 1, close);
        // C's explicit empty parameter list.
        if params == ["void"] {
            params.clear();
        }
        let start_line = toks[first].line;
        let end_line = ctx.body_end_line(body);
        defs.push(ctx.make_def(name, params, start_line, end_line));
        resume = body;
    }
    defs
}

const KEYWORD_BETWEEN: &[&str] = &[
    ",", ":", "&", "*", "::", "->", "?", "\\", "|", ".", "...", "<", ">",
];

/// Keyword-introduced definitions: Go `func` (with optional receiver and
/// type parameters), PHP `function`.
fn keyword_style(ctx: &Ctx<'_>, keywords: &[&str]) -> Vec<MethodDef> {
    let toks = ctx.tokens;
    let mut defs = Vec::new();
    for i in 0..toks.len() {
        if toks[i].kind != TokenKind::Ident || !keywords.contains(&toks[i].text) {
            continue;
        }
        let mut k = i + 1;
        // Go method receiver: `func (s *Server) name(...)`.
        if toks.get(k).is_some_and(|t| t.text == "(") {
            let Some(close) = ctx.find_close(k, "(", ")") else {
                continue;
            };
            k = close + 1;
        }
        let Some(name_tok) = toks.get(k).filter(|t| t.kind == TokenKind::Ident) else {
            continue; // anonymous function literal
        };
        let mut p = k + 1;
        // Go type parameters: `func Name[T any](...)`.
        if toks.get(p).is_some_and(|t| t.text == "[") {
            let Some(close) = ctx.find_close(p, "[", "]") else {
                continue;
            };
            p = close + 1;
        }
        if toks.get(p).is_none_or(|t| t.text != "(") {
            continue;
        }
        let Some(close) = ctx.find_close(p, "(", ")") else {
            continue;
        };
        let Some(body) = ctx.walk_to_body(close + 1, KEYWORD_BETWEEN) else {
            continue;
        };
        let params = ctx.split_params(p, close);
        let end_line = ctx.body_end_line(body);
        defs.push(ctx.make_def(name_tok.text.to_string(), params, toks[i].line, end_line));
    }
    defs
}

const JS_KEYWORDS: &[&str] = &[
    "if", "for", "while", "switch", "catch", "return", "do", "new", "typeof", "await", "yield",
    "delete", "void", "in", "of", "function", "else", "case", "throw",
];

const JS_BETWEEN: &[&str] = &[":", "|", ".", ",", "<", ">"];

/// JavaScript/TypeScript: `function` declarations and expressions, class and
/// object method shorthand, and brace-bodied arrow functions assigned to a
/// name. Anonymous callbacks are not definitions worth naming and are
/// skipped.
fn javascript(ctx: &Ctx<'_>) -> Vec<MethodDef> {
    let toks = ctx.tokens;
    let mut defs = Vec::new();

    let assigned_name = |anchor: usize| -> Option<&str> {
        // `<name> = <expr>` or `<name>: <expr>` (object property).
        if anchor == 0 {
            return None;
        }
        let op = toks.get(anchor - 1)?;
        if op.text != "=" && op.text != ":" {
            return None;
        }
        let name = toks.get(anchor.checked_sub(2)?)?;
        (name.kind == TokenKind::Ident).then_some(name.text)
    };

    for i in 0..toks.len() {
        let tok = &toks[i];
        if tok.kind == TokenKind::Ident && tok.text == "function" {
            let mut k = i + 1;
            if toks.get(k).is_some_and(|t| t.text == "*") {
                k += 1; // generator
            }
            let name = match toks.get(k) {
                Some(t) if t.kind == TokenKind::Ident => {
                    k += 1;
                    Some(t.text)
                }
                _ => assigned_name(i),
            };
            let Some(name) = name else { continue };
            if toks.get(k).is_none_or(|t| t.text != "(") {
                continue;
            }
            let Some(close) = ctx.find_close(k, "(", ")") else {
                continue;
            };
            let Some(body) = ctx.walk_to_body(close + 1, JS_BETWEEN) else {
                continue;
            };
            let params = ctx.split_params(k, close);
            let end_line = ctx.body_end_line(body);
            defs.push(ctx.make_def(name.to_string(), params, tok.line, end_line));
            continue;
        }

        // Arrow functions with brace bodies: `(a, b) => {` / `x => {`.
        if tok.kind == TokenKind::Punct && tok.text == "=>" {
            if toks.get(i + 1).is_none_or(|t| t.text != "{") {
                continue; // expression body: no line span to report
            }
            let (open, single) = match toks.get(i.wrapping_sub(1)) {
                Some(t) if t.text == ")" => {
                    let mut depth = 1i32;
                    let mut k = i - 1;
                    loop {
                        if k == 0 {
                            break (None, None);
                        }
                        k -= 1;
                        match toks[k].text {
                            ")" => depth += 1,
                            "(" => {
                                depth -= 1;
                                if depth == 0 {
                                    break (Some(k), None);
                                }
                            }
                            _ => {}
                        }
                    }
                }
                Some(t) if t.kind == TokenKind::Ident => (None, Some(i - 1)),
                _ => (None, None),
            };
            let (anchor, params) = match (open, single) {
                (Some(open), _) => {
                    let mut anchor = open;
                    if open > 0 && toks[open - 1].text == "async" {
                        anchor = open - 1;
                    }
                    (anchor, ctx.split_params(open, i - 1))
                }
                (None, Some(p)) => (p, vec![toks[p].text.to_string()]),
                _ => continue,
            };
            let Some(name) = assigned_name(anchor) else {
                continue;
            };
            let end_line = ctx.body_end_line(i + 1);
            defs.push(ctx.make_def(name.to_string(), params, toks[anchor].line, end_line));
            continue;
        }

        // Method shorthand: `name(args) {` inside a class or object literal.
        if tok.kind == TokenKind::Ident
            && !JS_KEYWORDS.contains(&tok.text)
            && toks
                .get(i + 1)
                .is_some_and(|t| t.text == "(" && t.kind == TokenKind::Punct)
            && (i == 0 || !["function", ".", "?.", "new", "=", ":"].contains(&toks[i - 1].text))
        {
            let Some(close) = ctx.find_close(i + 1, "(", ")") else {
                continue;
            };
            let Some(body) = ctx.walk_to_body(close + 1, JS_BETWEEN) else {
                continue;
            };
            let params = ctx.split_params(i + 1, close);
            let end_line = ctx.body_end_line(body);
            defs.push(ctx.make_def(tok.text.to_string(), params, tok.line, end_line));
        }
    }
    defs
}

/// Python: `def name(...)` with the body delimited by indentation. The body
/// ends before the first bracket-level-0 line that starts at or left of the
/// `def` column.
fn python(ctx: &Ctx<'_>) -> Vec<MethodDef> {
    let toks = ctx.tokens;
    let mut defs = Vec::new();
    for i in 0..toks.len() {
        let tok = &toks[i];
        if tok.kind != TokenKind::Ident || tok.text != "def" {
            continue;
        }
        let Some(name_tok) = toks.get(i + 1).filter(|t| t.kind == TokenKind::Ident) else {
            continue;
        };
        if toks.get(i + 2).is_none_or(|t| t.text != "(") {
            continue;
        }
        let Some(close) = ctx.find_close(i + 2, "(", ")") else {
            continue;
        };
        let params = ctx.split_params(i + 2, close);

        // `async def` starts at the `async` column.
        let base_col = if i > 0 && toks[i - 1].text == "async" && toks[i - 1].line == tok.line {
            toks[i - 1].col
        } else {
            tok.col
        };
        let mut end_line = toks.last().map_or(tok.line, |t| t.end_line);
        for k in close + 1..toks.len() {
            let t = &toks[k];
            if ctx.line_initial[k] && t.line > tok.line && t.col <= base_col {
                end_line = toks[k - 1].end_line;
                break;
            }
        }
        defs.push(ctx.make_def(name_tok.text.to_string(), params, tok.line, end_line));
    }
    defs
}

/// Keywords that open an `end`-terminated block in Ruby when they start a
/// line (or begin an assigned expression).
const RUBY_OPENERS: &[&str] = &[
    "if", "unless", "while", "until", "for", "case", "begin", "class", "module", "def",
];

/// Ruby: `def name` ... `end`, tracking nested blocks so the matching `end`
/// is found. Modifier `if`/`unless` (mid-line) do not open blocks.
fn ruby(ctx: &Ctx<'_>) -> Vec<MethodDef> {
    let toks = ctx.tokens;
    let mut defs = Vec::new();
    for i in 0..toks.len() {
        if toks[i].kind != TokenKind::Ident || toks[i].text != "def" {
            continue;
        }
        let Some(name_tok) = toks.get(i + 1).filter(|t| t.kind == TokenKind::Ident) else {
            continue;
        };
        let mut name = name_tok.text.to_string();
        let mut k = i + 2;
        // `def self.version` / `def Config.load`.
        if toks.get(k).is_some_and(|t| t.text == ".") {
            if let Some(m) = toks.get(k + 1).filter(|t| t.kind == TokenKind::Ident) {
                name = format!("{}.{}", name, m.text);
                k += 2;
            }
        }
        let mut params = Vec::new();
        if toks
            .get(k)
            .is_some_and(|t| t.text == "(" && t.line == name_tok.line)
        {
            if let Some(close) = ctx.find_close(k, "(", ")") {
                params = ctx.split_params(k, close);
                k = close + 1;
            }
        }

        let mut depth = 1i32;
        let mut end_line = toks.last().map_or(toks[i].line, |t| t.end_line);
        for idx in k..toks.len() {
            let t = &toks[idx];
            if t.kind != TokenKind::Ident {
                continue;
            }
            if t.text == "end" {
                depth -= 1;
                if depth == 0 {
                    end_line = t.line;
                    break;
                }
            } else if t.text == "do" {
                // `while .. do` / `for .. do` belong to an opener already
                // counted on that line.
                let first = ctx
                    .line_first
                    .get(t.line as usize - 1)
                    .copied()
                    .unwrap_or("");
                if !["while", "until", "for"].contains(&first) {
                    depth += 1;
                }
            } else if RUBY_OPENERS.contains(&t.text)
                && (ctx.line_initial[idx] || (idx > 0 && toks[idx - 1].text == "="))
            {
                depth += 1;
            }
        }
        defs.push(ctx.make_def(name, params, toks[i].line, end_line));
    }
    defs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::by_name;

    fn extract(lang: &str, src: &str) -> Vec<MethodDef> {
        extract_methods(src, by_name(lang).unwrap())
    }

    fn summary(defs: &[MethodDef]) -> Vec<(String, u32, u32)> {
        defs.iter()
            .map(|d| (d.name.clone(), d.start_line, d.end_line))
            .collect()
    }

    #[test]
    fn c_functions_with_spans_and_params() {
        let src = "#include <stdio.h>\n\
                   \n\
                   int add(int a, int b) {\n\
                   \treturn a + b;\n\
                   }\n\
                   \n\
                   static char *\n\
                   copy_buf(char *dst, const char *src, size_t n)\n\
                   {\n\
                   \tif (n > 0) {\n\
                   \t\tmemcpy(dst, src, n);\n\
                   \t}\n\
                   \treturn dst;\n\
                   }\n";
        let defs = extract("C", src);
        assert_eq!(
            summary(&defs),
            vec![("add".to_string(), 3, 5), ("copy_buf".to_string(), 8, 14),]
        );
        assert_eq!(defs[0].parameters, vec!["int a", "int b"]);
        assert_eq!(defs[0].signature, "add(int a, int b)");
        assert_eq!(
            defs[1].parameters,
            vec!["char *dst", "const char *src", "size_t n"]
        );
        assert!(defs[0].code.starts_with("int add"));
        assert!(defs[0].code.ends_with("}\n"));
    }

    #[test]
    fn c_skips_prototypes_control_flow_and_macros() {
        let src = "int f(int x);\n\
                   #define CHECK(x) { if (!(x)) abort(); }\n\
                   void g(void) {\n\
                   \tif (f(1)) {\n\
                   \t\twhile (f(2)) {\n\
                   \t\t\tf(3);\n\
                   \t\t}\n\
                   \t}\n\
                   \tswitch (f(4)) {\n\
                   \tcase 1: break;\n\
                   \t}\n\
                   }\n";
        let defs = extract("C", src);
        assert_eq!(summary(&defs), vec![("g".to_string(), 3, 12)]);
        // `(void)` is the explicit empty parameter list.
        assert_eq!(defs[0].parameters, Vec::<String>::new());
        assert_eq!(defs[0].signature, "g()");
    }

    #[test]
    fn cpp_qualified_names_and_initializer_lists() {
        let src = "Widget::Widget(int w) : width_(w), height_(0) {\n\
                   \tinit();\n\
                   }\n\
                   int Widget::area() const {\n\
                   \treturn width_ * height_;\n\
                   }\n\
                   Widget::~Widget() {\n\
                   }\n";
        let defs = extract("C++", src);
        assert_eq!(
            summary(&defs),
            vec![
                ("Widget::Widget".to_string(), 1, 3),
                ("Widget::area".to_string(), 4, 6),
                ("Widget::~Widget".to_string(), 7, 8),
            ]
        );
        assert_eq!(defs[0].signature, "Widget::Widget(int w)");
    }

    #[test]
    fn java_methods_annotations_and_throws() {
        let src = "class Service {\n\
                   \t@Override\n\
                   \tpublic String load(Path p) throws IOException, FooException {\n\
                   \t\treturn read(p);\n\
                   \t}\n\
                   \tService() {\n\
                   \t}\n\
                   \tvoid run() {\n\
                   \t\tnew Thread(new Runnable() {\n\
                   \t\t\tpublic void run() {\n\
                   \t\t\t}\n\
                   \t\t}).start();\n\
                   \t}\n\
                   }\n";
        let defs = extract("Java", src);
        let names: Vec<&str> = defs.iter().map(|d| d.name.as_str()).collect();
        // `Runnable` (anonymous class) is not a method; its `run` body is.
        assert_eq!(names, vec!["load", "Service", "run", "run"]);
        assert_eq!(defs[0].start_line, 3);
        assert_eq!(defs[0].end_line, 5);
    }

    #[test]
    fn go_functions_receivers_and_generics() {
        let src = "package main\n\
                   \n\
                   func Render(w io.Writer, t *Template) (int, error) {\n\
                   \treturn t.write(w)\n\
                   }\n\
                   \n\
                   func (s *Server) handle(req *Request) {\n\
                   \ts.mu.Lock()\n\
                   \tdefer s.mu.Unlock()\n\
                   }\n\
                   \n\
                   func Map[T any](xs []T, f func(T) T) []T {\n\
                   \treturn xs\n\
                   }\n\
                   \n\
                   var cb = func(x int) int { return x }\n";
        let defs = extract("Go", src);
        assert_eq!(
            summary(&defs),
            vec![
                ("Render".to_string(), 3, 5),
                ("handle".to_string(), 7, 10),
                ("Map".to_string(), 12, 14),
            ]
        );
        assert_eq!(defs[0].parameters, vec!["w io.Writer", "t *Template"]);
        assert_eq!(defs[1].signature, "handle(req *Request)");
    }

    #[test]
    fn php_functions_and_typed_returns() {
        let src = "<?php\n\
                   class Cart {\n\
                   \tpublic function total(array $items): ?float {\n\
                   \t\treturn array_sum($items);\n\
                   \t}\n\
                   \tabstract public function discount();\n\
                   }\n\
                   function render($view) {\n\
                   \techo $view;\n\
                   }\n\
                   $f = function ($x) { return $x; };\n";
        let defs = extract("PHP", src);
        assert_eq!(
            summary(&defs),
            vec![("total".to_string(), 3, 5), ("render".to_string(), 8, 10),]
        );
        assert_eq!(defs[0].parameters, vec!["array $items"]);
    }

    #[test]
    fn javascript_declarations_methods_and_arrows() {
        let src = "function escapeHtml(s) {\n\
                   \treturn s.split('&').join('&amp;');\n\
                   }\n\
                   const render = (tpl, data) => {\n\
                   \treturn tpl + data;\n\
                   };\n\
                   const id = x => {\n\
                   \treturn x;\n\
                   };\n\
                   class View {\n\
                   \tconstructor(el) {\n\
                   \t\tthis.el = el;\n\
                   \t}\n\
                   \tupdate(state) {\n\
                   \t\tif (state.dirty) {\n\
                   \t\t\tthis.draw();\n\
                   \t\t}\n\
                   \t}\n\
                   }\n\
                   const handler = function (ev) {\n\
                   \tev.stop();\n\
                   };\n\
                   items.forEach(item => console.log(item));\n\
                   setTimeout(() => {\n\
                   \ttick();\n\
                   }, 10);\n";
        let defs = extract("JavaScript", src);
        assert_eq!(
            summary(&defs),
            vec![
                ("escapeHtml".to_string(), 1, 3),
                ("render".to_string(), 4, 6),
                ("id".to_string(), 7, 9),
                ("constructor".to_string(), 11, 13),
                ("update".to_string(), 14, 18),
                ("handler".to_string(), 20, 22),
            ]
        );
        assert_eq!(defs[1].parameters, vec!["tpl", "data"]);
        assert_eq!(defs[2].parameters, vec!["x"]);
    }

    #[test]
    fn typescript_annotations_are_tolerated() {
        let src = "function parse(input: string, strict: boolean): Map<string, number> {\n\
                   \treturn new Map();\n\
                   }\n";
        let defs = extract("TypeScript", src);
        assert_eq!(summary(&defs), vec![("parse".to_string(), 1, 3)]);
        assert_eq!(defs[0].parameters, vec!["input: string", "strict: boolean"]);
    }

    #[test]
    fn python_indentation_delimits_bodies() {
        let src = "import os\n\
                   \n\
                   def handler(request, timeout=30):\n\
                   \tif request.bad:\n\
                   \t\treturn None\n\
                   \treturn request.process(\n\
                   \t\ttimeout,\n\
                   \t)\n\
                   \n\
                   class App:\n\
                   \tdef __init__(self, name):\n\
                   \t\tself.name = name\n\
                   \n\
                   \t@property\n\
                   \tdef label(self):\n\
                   \t\tdef inner():\n\
                   \t\t\treturn self.name\n\
                   \t\treturn inner()\n\
                   \n\
                   VERSION = 1\n";
        let defs = extract("Python", src);
        assert_eq!(
            summary(&defs),
            vec![
                ("handler".to_string(), 3, 8),
                ("__init__".to_string(), 11, 12),
                ("label".to_string(), 15, 18),
                ("inner".to_string(), 16, 17),
            ]
        );
        assert_eq!(defs[0].parameters, vec!["request", "timeout=30"]);
        assert_eq!(defs[1].parameters, vec!["self", "name"]);
        // The decorator between methods belongs to neither body.
        assert_eq!(defs[1].end_line, 12);
    }

    #[test]
    fn python_async_def_and_one_liner() {
        let src = "async def fetch(url):\n\
                   \treturn await get(url)\n\
                   def noop(): pass\n\
                   x = 1\n";
        let defs = extract("Python", src);
        assert_eq!(
            summary(&defs),
            vec![("fetch".to_string(), 1, 2), ("noop".to_string(), 3, 3),]
        );
    }

    #[test]
    fn ruby_def_end_with_nesting() {
        let src = "class Importer\n\
                   \tdef run(rows)\n\
                   \t\trows.each do |row|\n\
                   \t\t\tif row.valid?\n\
                   \t\t\t\tsave(row)\n\
                   \t\t\tend\n\
                   \t\tend\n\
                   \tend\n\
                   \n\
                   \tdef self.version\n\
                   \t\t'1.0'\n\
                   \tend\n\
                   \n\
                   \tdef tiny; 1; end\n\
                   end\n";
        let defs = extract("Ruby", src);
        assert_eq!(
            summary(&defs),
            vec![
                ("run".to_string(), 2, 8),
                ("self.version".to_string(), 10, 12),
                ("tiny".to_string(), 14, 14),
            ]
        );
        assert_eq!(defs[0].parameters, vec!["rows"]);
        assert_eq!(defs[1].signature, "self.version()");
    }

    #[test]
    fn ruby_while_do_counts_once_and_modifiers_do_not_nest() {
        let src = "def pump(queue)\n\
                   \twhile queue.any? do\n\
                   \t\tqueue.pop\n\
                   \tend\n\
                   \traise if queue.closed?\n\
                   end\n\
                   def after\n\
                   end\n";
        let defs = extract("Ruby", src);
        assert_eq!(
            summary(&defs),
            vec![("pump".to_string(), 1, 6), ("after".to_string(), 7, 8),]
        );
    }

    #[test]
    fn languages_without_method_support_yield_nothing() {
        assert!(extract("Markdown", "# title\n").is_empty());
        assert!(extract("JSON", "{\"a\": 1}\n").is_empty());
    }
}
