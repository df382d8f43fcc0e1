//! Programming-language registry and detection.
//!
//! Detection is filename-first (extension or well-known basename) with
//! content heuristics for ambiguous extensions (`.h`, `.m`, `.pl`) and a
//! shebang fallback for extensionless scripts. Each language carries the
//! comment, string, and syntax configuration the lexer and method extractor
//! need, so adding a language is a single table entry.

/// One kind of string literal.
#[derive(Debug, Clone, Copy)]
pub struct StringSpec {
    /// Opening/closing delimiter (checked longest-first by the lexer).
    pub delim: &'static str,
    /// Whether a backslash escapes the next character inside the literal.
    pub escape: bool,
    /// Whether the literal may span multiple lines.
    pub multiline: bool,
}

const fn s(delim: &'static str, escape: bool, multiline: bool) -> StringSpec {
    StringSpec {
        delim,
        escape,
        multiline,
    }
}

/// How method definitions look in this language.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodStyle {
    /// `ret name(args) { ... }` definitions (C, C++, Java, C#), with
    /// `Qualified::names` accepted in the C++ family.
    CLike,
    /// Definitions introduced by a keyword, e.g. Go `func` or PHP
    /// `function`, body in braces.
    Keyword(&'static [&'static str]),
    /// `function` declarations plus arrow functions assigned to names.
    JavaScript,
    /// `def name(...):` with an indentation-delimited body.
    PythonIndent,
    /// `def name` ... `end`.
    RubyEnd,
}

#[derive(Debug, Clone, Copy)]
pub struct LanguageSpec {
    pub name: &'static str,
    pub extensions: &'static [&'static str],
    /// Basenames (exact match) that identify the language without an
    /// extension, e.g. `Makefile`.
    pub filenames: &'static [&'static str],
    pub line_comments: &'static [&'static str],
    pub block_comments: &'static [(&'static str, &'static str)],
    /// Whether block comments nest (Rust, Swift, Haskell, ...).
    pub nested_blocks: bool,
    pub strings: &'static [StringSpec],
    pub method_style: Option<MethodStyle>,
    /// Keywords counted as decision points for cyclomatic complexity.
    pub cc_keywords: &'static [&'static str],
    /// Whether a bare `?` counts as a decision point (C-style ternary).
    pub count_ternary: bool,
}

const C_STRINGS: &[StringSpec] = &[s("\"", true, false), s("'", true, false)];
const NO_STRINGS: &[StringSpec] = &[];

macro_rules! lang {
    ($name:expr, $exts:expr, $files:expr, $line:expr, $block:expr, $nested:expr,
     $strings:expr, $methods:expr, $cc:expr, $ternary:expr) => {
        LanguageSpec {
            name: $name,
            extensions: $exts,
            filenames: $files,
            line_comments: $line,
            block_comments: $block,
            nested_blocks: $nested,
            strings: $strings,
            method_style: $methods,
            cc_keywords: $cc,
            count_ternary: $ternary,
        }
    };
}

static LANGUAGES: &[LanguageSpec] = &[
    lang!(
        "C",
        &["c", "h"],
        &[],
        &["//"],
        &[("/*", "*/")],
        false,
        C_STRINGS,
        Some(MethodStyle::CLike),
        &["if", "for", "while", "case", "&&", "||"],
        true
    ),
    lang!(
        "C++",
        &["cpp", "cc", "cxx", "hpp", "hh", "hxx", "ipp", "tpp"],
        &[],
        &["//"],
        &[("/*", "*/")],
        false,
        C_STRINGS,
        Some(MethodStyle::CLike),
        &["if", "for", "while", "case", "catch", "&&", "||"],
        true
    ),
    lang!(
        "Java",
        &["java"],
        &[],
        &["//"],
        &[("/*", "*/")],
        false,
        C_STRINGS,
        Some(MethodStyle::CLike),
        &["if", "for", "while", "case", "catch", "&&", "||"],
        true
    ),
    lang!(
        "C#",
        &["cs"],
        &[],
        &["//"],
        &[("/*", "*/")],
        false,
        C_STRINGS,
        Some(MethodStyle::CLike),
        &["if", "for", "foreach", "while", "case", "catch", "&&", "||"],
        true
    ),
    lang!(
        "Python",
        &["py", "pyw", "pyi"],
        &[],
        &["#"],
        &[],
        false,
        &[
            s("\"\"\"", true, true),
            s("'''", true, true),
            s("\"", true, false),
            s("'", true, false)
        ],
        Some(MethodStyle::PythonIndent),
        &["if", "elif", "for", "while", "and", "or", "except", "case"],
        false
    ),
    lang!(
        "JavaScript",
        &["js", "jsx", "mjs", "cjs"],
        &[],
        &["//"],
        &[("/*", "*/")],
        false,
        &[
            s("\"", true, false),
            s("'", true, false),
            s("`", true, true)
        ],
        Some(MethodStyle::JavaScript),
        &["if", "for", "while", "case", "catch", "&&", "||"],
        true
    ),
    lang!(
        "TypeScript",
        &["ts", "tsx", "mts", "cts"],
        &[],
        &["//"],
        &[("/*", "*/")],
        false,
        &[
            s("\"", true, false),
            s("'", true, false),
            s("`", true, true)
        ],
        Some(MethodStyle::JavaScript),
        &["if", "for", "while", "case", "catch", "&&", "||"],
        true
    ),
    lang!(
        "PHP",
        &["php", "php3", "php4", "php5", "phtml"],
        &[],
        &["//", "#"],
        &[("/*", "*/")],
        false,
        &[s("\"", true, false), s("'", true, false)],
        Some(MethodStyle::Keyword(&["function"])),
        &["if", "elseif", "for", "foreach", "while", "case", "catch", "and", "or", "&&", "||"],
        true
    ),
    lang!(
        "Go",
        &["go"],
        &[],
        &["//"],
        &[("/*", "*/")],
        false,
        &[
            s("\"", true, false),
            s("'", true, false),
            s("`", false, true)
        ],
        Some(MethodStyle::Keyword(&["func"])),
        &["if", "for", "case", "&&", "||"],
        false
    ),
    lang!(
        "Ruby",
        &["rb", "rake", "gemspec"],
        &["Rakefile", "Gemfile"],
        &["#"],
        &[("=begin", "=end")],
        false,
        &[s("\"", true, false), s("'", true, false)],
        Some(MethodStyle::RubyEnd),
        &[
            "if", "elsif", "unless", "while", "until", "for", "when", "rescue", "and", "or", "&&",
            "||"
        ],
        false
    ),
    lang!(
        "Rust",
        &["rs"],
        &[],
        &["//"],
        &[("/*", "*/")],
        true,
        &[s("\"", true, false)],
        None,
        &["if", "for", "while", "match", "&&", "||"],
        false
    ),
    lang!(
        "Swift",
        &["swift"],
        &[],
        &["//"],
        &[("/*", "*/")],
        true,
        &[s("\"", true, false)],
        None,
        &[],
        true
    ),
    lang!(
        "Kotlin",
        &["kt", "kts"],
        &[],
        &["//"],
        &[("/*", "*/")],
        true,
        &[s("\"", true, false), s("'", true, false)],
        None,
        &[],
        false
    ),
    lang!(
        "Scala",
        &["scala", "sc"],
        &[],
        &["//"],
        &[("/*", "*/")],
        true,
        &[s("\"", true, false), s("'", true, false)],
        None,
        &[],
        false
    ),
    lang!(
        "Objective-C",
        &["mm"],
        &[],
        &["//"],
        &[("/*", "*/")],
        false,
        C_STRINGS,
        Some(MethodStyle::CLike),
        &["if", "for", "while", "case", "&&", "||"],
        true
    ),
    lang!(
        "Perl",
        &["pm", "t"],
        &[],
        &["#"],
        &[("=pod", "=cut")],
        false,
        &[s("\"", true, false), s("'", true, false)],
        None,
        &[],
        true
    ),
    lang!(
        "Shell",
        &["sh", "bash", "zsh", "ksh"],
        &[],
        &["#"],
        &[],
        false,
        &[s("\"", true, false), s("'", false, true)],
        None,
        &[],
        false
    ),
    lang!(
        "Lua",
        &["lua"],
        &[],
        &["--"],
        &[("--[[", "]]")],
        false,
        &[s("\"", true, false), s("'", true, false)],
        None,
        &[],
        false
    ),
    lang!(
        "R",
        &["r"],
        &[],
        &["#"],
        &[],
        false,
        &[s("\"", true, false), s("'", true, false)],
        None,
        &[],
        false
    ),
    lang!(
        "Haskell",
        &["hs", "lhs"],
        &[],
        &["--"],
        &[("{-", "-}")],
        true,
        &[s("\"", true, false)],
        None,
        &[],
        false
    ),
    lang!(
        "Erlang",
        &["erl", "hrl"],
        &[],
        &["%"],
        &[],
        false,
        &[s("\"", true, false)],
        None,
        &[],
        false
    ),
    lang!(
        "Elixir",
        &["ex", "exs"],
        &[],
        &["#"],
        &[],
        false,
        &[
            s("\"\"\"", true, true),
            s("\"", true, false),
            s("'", true, false)
        ],
        None,
        &[],
        false
    ),
    lang!(
        "Dart",
        &["dart"],
        &[],
        &["//"],
        &[("/*", "*/")],
        true,
        &[s("\"", true, false), s("'", true, false)],
        None,
        &[],
        true
    ),
    lang!(
        "Groovy",
        &["groovy", "gradle"],
        &[],
        &["//"],
        &[("/*", "*/")],
        false,
        &[s("\"", true, false), s("'", true, false)],
        None,
        &[],
        true
    ),
    lang!(
        "Matlab",
        &[],
        &[],
        &["%"],
        &[("%{", "%}")],
        false,
        &[s("'", false, false), s("\"", false, false)],
        None,
        &[],
        false
    ),
    lang!(
        "SQL",
        &["sql"],
        &[],
        &["--"],
        &[("/*", "*/")],
        false,
        &[s("'", false, false), s("\"", false, false)],
        None,
        &[],
        false
    ),
    lang!(
        "HTML",
        &["html", "htm", "xhtml"],
        &[],
        &[],
        &[("<!--", "-->")],
        false,
        &[s("\"", false, false), s("'", false, false)],
        None,
        &[],
        false
    ),
    lang!(
        "CSS",
        &["css"],
        &[],
        &[],
        &[("/*", "*/")],
        false,
        &[s("\"", true, false), s("'", true, false)],
        None,
        &[],
        false
    ),
    lang!(
        "SCSS",
        &["scss", "sass", "less"],
        &[],
        &["//"],
        &[("/*", "*/")],
        false,
        &[s("\"", true, false), s("'", true, false)],
        None,
        &[],
        false
    ),
    lang!(
        "XML",
        &["xml", "xsl", "xsd", "svg"],
        &[],
        &[],
        &[("<!--", "-->")],
        false,
        &[s("\"", false, false), s("'", false, false)],
        None,
        &[],
        false
    ),
    lang!(
        "JSON",
        &["json"],
        &[],
        &[],
        &[],
        false,
        &[s("\"", true, false)],
        None,
        &[],
        false
    ),
    lang!(
        "YAML",
        &["yml", "yaml"],
        &[],
        &["#"],
        &[],
        false,
        &[s("\"", true, false), s("'", false, false)],
        None,
        &[],
        false
    ),
    lang!(
        "TOML",
        &["toml"],
        &[],
        &["#"],
        &[],
        false,
        &[s("\"", true, false), s("'", false, false)],
        None,
        &[],
        false
    ),
    lang!(
        "Markdown",
        &["md", "markdown"],
        &[],
        &[],
        &[("<!--", "-->")],
        false,
        NO_STRINGS,
        None,
        &[],
        false
    ),
    lang!(
        "Makefile",
        &["mk"],
        &["Makefile", "makefile", "GNUmakefile"],
        &["#"],
        &[],
        false,
        &[s("\"", true, false), s("'", true, false)],
        None,
        &[],
        false
    ),
    lang!(
        "CMake",
        &["cmake"],
        &["CMakeLists.txt"],
        &["#"],
        &[],
        false,
        &[s("\"", true, false)],
        None,
        &[],
        false
    ),
    lang!(
        "Dockerfile",
        &[],
        &["Dockerfile", "Containerfile"],
        &["#"],
        &[],
        false,
        &[s("\"", true, false), s("'", true, false)],
        None,
        &[],
        false
    ),
    lang!(
        "Vim script",
        &["vim"],
        &["vimrc", ".vimrc"],
        &["\""],
        &[],
        false,
        &[s("'", false, false)],
        None,
        &[],
        false
    ),
    lang!(
        "Assembly",
        &["asm", "s"],
        &[],
        &[";", "#"],
        &[("/*", "*/")],
        false,
        &[s("\"", true, false), s("'", true, false)],
        None,
        &[],
        false
    ),
    lang!(
        "Fortran",
        &["f", "f77", "f90", "f95", "f03"],
        &[],
        &["!"],
        &[],
        false,
        &[s("\"", false, false), s("'", false, false)],
        None,
        &[],
        false
    ),
    lang!(
        "Pascal",
        &["pas", "pp"],
        &[],
        &["//"],
        &[("{", "}"), ("(*", "*)")],
        false,
        &[s("'", false, false)],
        None,
        &[],
        false
    ),
    lang!(
        "Prolog",
        &[],
        &[],
        &["%"],
        &[("/*", "*/")],
        false,
        &[s("\"", true, false), s("'", true, false)],
        None,
        &[],
        false
    ),
    lang!(
        "CoffeeScript",
        &["coffee"],
        &[],
        &["#"],
        &[("###", "###")],
        false,
        &[s("\"", true, false), s("'", true, false)],
        None,
        &[],
        false
    ),
    lang!(
        "Vue",
        &["vue"],
        &[],
        &[],
        &[("<!--", "-->")],
        false,
        &[s("\"", false, false), s("'", false, false)],
        None,
        &[],
        false
    ),
    lang!(
        "Tcl",
        &["tcl"],
        &[],
        &["#"],
        &[],
        false,
        &[s("\"", true, false)],
        None,
        &[],
        false
    ),
];

/// All registered languages.
pub fn languages() -> &'static [LanguageSpec] {
    LANGUAGES
}

/// Look a language up by its display name.
pub fn by_name(name: &str) -> Option<&'static LanguageSpec> {
    LANGUAGES.iter().find(|l| l.name == name)
}

/// True when the content looks binary: a NUL byte in the first 8 KiB.
pub fn is_binary(bytes: &[u8]) -> bool {
    let probe = &bytes[..bytes.len().min(8192)];
    probe.contains(&0)
}

fn basename(path: &str) -> &str {
    path.rsplit(['/', '\\']).next().unwrap_or(path)
}

fn extension(name: &str) -> Option<String> {
    let dot = name.rfind('.')?;
    if dot == 0 || dot + 1 == name.len() {
        return None;
    }
    Some(name[dot + 1..].to_ascii_lowercase())
}

fn looks_objective_c(content: &str) -> bool {
    [
        "@interface",
        "@implementation",
        "@protocol",
        "@property",
        "#import",
        "@end",
    ]
    .iter()
    .any(|m| content.contains(m))
}

fn looks_cpp_header(content: &str) -> bool {
    if content.contains("::") || content.contains("template<") || content.contains("template <") {
        return true;
    }
    content.lines().any(|l| {
        let t = l.trim_start();
        t.starts_with("class ") || t.starts_with("namespace ") || t.starts_with("using namespace")
    })
}

fn looks_perl(content: &str) -> bool {
    content.starts_with("#!") && content.lines().next().is_some_and(|l| l.contains("perl"))
        || content.contains("use strict")
        || content.contains("use warnings")
        || content.contains("my $")
        || content.contains("my %")
        || content.contains("my @")
}

fn looks_matlab(content: &str) -> bool {
    content.lines().any(|l| {
        let t = l.trim_start();
        t.starts_with("function ") && !t.contains('{')
    }) && !content.contains(';')
        || content
            .lines()
            .filter(|l| l.trim_start().starts_with('%'))
            .count()
            > content
                .lines()
                .filter(|l| l.trim_start().starts_with("//"))
                .count()
            && content.contains("end")
            && !looks_objective_c(content)
}

fn shebang_language(content: &str) -> Option<&'static LanguageSpec> {
    let first = content.lines().next()?;
    let line = first.strip_prefix("#!")?;
    let interpreter = line
        .split_whitespace()
        .flat_map(|word| word.rsplit('/').next())
        .find(|word| *word != "env")?;
    let interpreter = interpreter.trim_end_matches(|c: char| c.is_ascii_digit() || c == '.');
    match interpreter {
        "sh" | "bash" | "zsh" | "ksh" | "dash" => by_name("Shell"),
        "python" => by_name("Python"),
        "perl" => by_name("Perl"),
        "ruby" => by_name("Ruby"),
        "node" | "nodejs" => by_name("JavaScript"),
        "php" => by_name("PHP"),
        "lua" => by_name("Lua"),
        "tclsh" | "wish" => by_name("Tcl"),
        _ => None,
    }
}

/// Detect the language of a file from its path and (decoded) content.
///
/// Returns `None` for unrecognized files; binary detection happens earlier,
/// on the raw bytes, via [`is_binary`].
pub fn detect(path: &str, content: &str) -> Option<&'static LanguageSpec> {
    let name = basename(path);
    if let Some(lang) = LANGUAGES.iter().find(|l| l.filenames.contains(&name)) {
        return Some(lang);
    }
    match extension(name).as_deref() {
        Some("h") => {
            // Shared by C, C++, and Objective-C headers.
            if looks_objective_c(content) {
                return by_name("Objective-C");
            }
            if looks_cpp_header(content) {
                return by_name("C++");
            }
            return by_name("C");
        }
        Some("m") => {
            if looks_objective_c(content) {
                return by_name("Objective-C");
            }
            if looks_matlab(content) {
                return by_name("Matlab");
            }
            return by_name("Objective-C");
        }
        Some("pl") => {
            if looks_perl(content) {
                return by_name("Perl");
            }
            if content.contains(":-") {
                return by_name("Prolog");
            }
            return by_name("Perl");
        }
        Some(ext) => {
            if let Some(lang) = LANGUAGES.iter().find(|l| l.extensions.contains(&ext)) {
                return Some(lang);
            }
        }
        None => {}
    }
    shebang_language(content)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_broad_and_unambiguous() {
        assert!(LANGUAGES.len() >= 30, "expected at least 30 languages");
        // No extension maps to two languages (the ambiguous ones are handled
        // by content heuristics and deliberately absent from the tables).
        let mut seen = std::collections::HashMap::new();
        for lang in LANGUAGES {
            for ext in lang.extensions {
                if let Some(first) = seen.insert(*ext, lang.name) {
                    panic!("extension .{ext} claimed by both {first} and {}", lang.name);
                }
            }
        }
    }

    #[test]
    fn method_extraction_covers_required_languages() {
        for name in [
            "C",
            "C++",
            "Java",
            "Python",
            "JavaScript",
            "PHP",
            "Go",
            "Ruby",
        ] {
            let lang = by_name(name).unwrap_or_else(|| panic!("{name} missing"));
            assert!(
                lang.method_style.is_some(),
                "{name} must support method extraction"
            );
        }
    }

    #[test]
    fn detects_by_extension_and_filename() {
        assert_eq!(detect("src/main.c", "int main() {}").unwrap().name, "C");
        assert_eq!(detect("app.py", "x = 1").unwrap().name, "Python");
        assert_eq!(detect("lib/util.js", "let x").unwrap().name, "JavaScript");
        assert_eq!(detect("doc/README.md", "# hi").unwrap().name, "Markdown");
        assert_eq!(detect("Makefile", "all:").unwrap().name, "Makefile");
        assert_eq!(
            detect("docker/Dockerfile", "FROM x").unwrap().name,
            "Dockerfile"
        );
        assert_eq!(
            detect("CMakeLists.txt", "project(x)").unwrap().name,
            "CMake"
        );
        assert_eq!(detect("Gemfile", "gem 'x'").unwrap().name, "Ruby");
        assert!(detect("weird.unknownext", "data").is_none());
    }

    #[test]
    fn extension_lookup_is_case_insensitive() {
        assert_eq!(detect("legacy.CPP", "").unwrap().name, "C++");
    }

    #[test]
    fn disambiguates_h_headers() {
        assert_eq!(detect("api.h", "int f(void);\n").unwrap().name, "C");
        assert_eq!(
            detect("api.h", "namespace util {\nclass Widget;\n}\n")
                .unwrap()
                .name,
            "C++"
        );
        assert_eq!(
            detect(
                "api.h",
                "#import <Foundation/Foundation.h>\n@interface Foo\n@end\n"
            )
            .unwrap()
            .name,
            "Objective-C"
        );
    }

    #[test]
    fn disambiguates_m_files() {
        assert_eq!(
            detect("view.m", "#import \"View.h\"\n@implementation View\n@end\n")
                .unwrap()
                .name,
            "Objective-C"
        );
        assert_eq!(
            detect("solve.m", "% solver\nfunction y = solve(x)\ny = x\nend\n")
                .unwrap()
                .name,
            "Matlab"
        );
    }

    #[test]
    fn disambiguates_pl_files() {
        assert_eq!(
            detect("run.pl", "#!/usr/bin/perl\nuse strict;\nmy $x = 1;\n")
                .unwrap()
                .name,
            "Perl"
        );
        assert_eq!(
            detect(
                "facts.pl",
                "parent(tom, bob).\nancestor(X, Y) :- parent(X, Y).\n"
            )
            .unwrap()
            .name,
            "Prolog"
        );
    }

    #[test]
    fn shebang_fallback_for_extensionless_scripts() {
        assert_eq!(
            detect("install", "#!/bin/sh\necho hi\n").unwrap().name,
            "Shell"
        );
        assert_eq!(
            detect("tool", "#!/usr/bin/env python3\nprint('x')\n")
                .unwrap()
                .name,
            "Python"
        );
        assert!(detect("tool", "no shebang here\n").is_none());
    }

    #[test]
    fn binary_sniff_checks_leading_bytes() {
        assert!(is_binary(b"\x89PNG\r\n\x1a\n\x00\x00\x00\rIHDR"));
        assert!(!is_binary("plain text\nwith lines\n".as_bytes()));
        assert!(!is_binary(b""));
    }
}
