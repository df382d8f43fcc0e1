//! Code metrics: NLOC, cyclomatic complexity, token counts, and the
//! delta-maintainability risk thresholds.
//!
//! All metrics are computed from the lexical token stream, so comments and
//! blank lines never count and string literals count as single tokens.

use crate::lang::LanguageSpec;
use crate::lexer::{lex, Token, TokenKind};

/// Number of distinct source lines carrying at least one token. Multi-line
/// string literals cover every line they span.
pub fn nloc(content: &str, lang: &LanguageSpec) -> u32 {
    token_lines(&lex(content, lang))
}

fn token_lines(tokens: &[Token<'_>]) -> u32 {
    let mut count = 0u32;
    let mut last = 0u32;
    for tok in tokens {
        let lo = tok.line.max(last + 1);
        if tok.end_line >= lo {
            count += tok.end_line - lo + 1;
            last = tok.end_line;
        }
    }
    count
}

/// Total number of lexical tokens (comments stripped, each string literal
/// one token).
pub fn token_count(content: &str, lang: &LanguageSpec) -> u32 {
    lex(content, lang).len() as u32
}

/// NLOC for text whose language is unknown: with no comment syntax to
/// strip, every non-blank line counts.
pub fn nloc_unknown(content: &str) -> u32 {
    content
        .lines()
        .filter(|line| !line.trim().is_empty())
        .count() as u32
}

/// McCabe cyclomatic complexity: 1 plus the number of decision points
/// (per-language branch keywords, `&&`/`||`-style operators, and the ternary
/// `?` where the language has one).
pub fn cyclomatic(content: &str, lang: &LanguageSpec) -> u32 {
    let mut cc = 1u32;
    for tok in lex(content, lang) {
        let is_decision = match tok.kind {
            TokenKind::Ident | TokenKind::Punct => lang.cc_keywords.contains(&tok.text),
            _ => false,
        };
        if is_decision || (lang.count_ternary && tok.kind == TokenKind::Punct && tok.text == "?") {
            cc += 1;
        }
    }
    cc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MethodMetrics {
    pub nloc: u32,
    pub complexity: u32,
    pub token_count: u32,
}

/// Metrics for one method's source slice.
pub fn method_metrics(code: &str, lang: &LanguageSpec) -> MethodMetrics {
    let tokens = lex(code, lang);
    let mut complexity = 1u32;
    for tok in &tokens {
        let is_decision = match tok.kind {
            TokenKind::Ident | TokenKind::Punct => lang.cc_keywords.contains(&tok.text),
            _ => false,
        };
        if is_decision || (lang.count_ternary && tok.kind == TokenKind::Punct && tok.text == "?") {
            complexity += 1;
        }
    }
    MethodMetrics {
        nloc: token_lines(&tokens),
        complexity,
        token_count: tokens.len() as u32,
    }
}

/// The three delta-maintainability properties. Each classifies a method as
/// low-risk or high-risk by one measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmmProperty {
    UnitSize,
    UnitComplexity,
    UnitInterfacing,
}

/// Low-risk thresholds: a method is low-risk when its measure is at or
/// below the threshold.
pub const DMM_UNIT_SIZE_MAX_NLOC: u32 = 15;
pub const DMM_UNIT_COMPLEXITY_MAX_CC: u32 = 5;
pub const DMM_UNIT_INTERFACING_MAX_PARAMS: usize = 2;

/// Whether a method is low-risk for `property`.
pub fn dmm_low_risk(property: DmmProperty, nloc: u32, complexity: u32, params: usize) -> bool {
    match property {
        DmmProperty::UnitSize => nloc <= DMM_UNIT_SIZE_MAX_NLOC,
        DmmProperty::UnitComplexity => complexity <= DMM_UNIT_COMPLEXITY_MAX_CC,
        DmmProperty::UnitInterfacing => params <= DMM_UNIT_INTERFACING_MAX_PARAMS,
    }
}

/// Accumulator for one commit's delta-maintainability score on one
/// property. A changed line is "good" when it moves the codebase toward
/// low-risk methods: added to a low-risk method, or deleted from a
/// high-risk one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DmmCounts {
    pub good: u64,
    pub bad: u64,
}

impl DmmCounts {
    pub fn record(&mut self, good: bool) {
        if good {
            self.good += 1;
        } else {
            self.bad += 1;
        }
    }

    /// Proportion of good change; absent when the commit touched no method
    /// lines.
    pub fn score(&self) -> Option<f64> {
        let total = self.good + self.bad;
        if total == 0 {
            None
        } else {
            Some(self.good as f64 / total as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::by_name;
    use proptest::prelude::*;

    #[test]
    fn c_function_metrics_are_exact() {
        let c = by_name("C").unwrap();
        let code = "int clamp(int v, int lo, int hi) {\n\
                    \tif (v < lo) {\n\
                    \t\treturn lo;\n\
                    \t}\n\
                    \tif (v > hi && lo < hi) {\n\
                    \t\treturn hi;\n\
                    \t}\n\
                    \treturn v;\n\
                    }\n";
        let m = method_metrics(code, c);
        assert_eq!(m.nloc, 9);
        assert_eq!(m.complexity, 4); // 1 + if + if + &&
        assert_eq!(m.token_count, 43);
    }

    #[test]
    fn comments_and_blanks_do_not_count() {
        let c = by_name("C").unwrap();
        let src = "// header comment\n\
                   \n\
                   int x = 1; /* trailing */\n\
                   /* full line */\n\
                   int y = 2;\n";
        assert_eq!(nloc(src, c), 2);
        assert_eq!(token_count(src, c), 10);
        assert_eq!(cyclomatic(src, c), 1);
    }

    #[test]
    fn multiline_strings_span_their_lines() {
        let py = by_name("Python").unwrap();
        let src = "text = \"\"\"first\nsecond\nthird\"\"\"\ndone = 1\n";
        assert_eq!(nloc(src, py), 4);
    }

    #[test]
    fn python_decision_keywords() {
        let py = by_name("Python").unwrap();
        let src = "def pick(xs, limit=10):\n\
                   \t# choose\n\
                   \tgood = [x for x in xs if x and x.ok]\n\
                   \tif not good or len(good) > limit:\n\
                   \t\treturn None\n\
                   \treturn good\n";
        assert_eq!(cyclomatic(src, py), 6); // 1 + for + if + and + if + or
        assert_eq!(nloc(src, py), 5);
    }

    #[test]
    fn ternary_counts_only_where_the_language_has_one() {
        let js = by_name("JavaScript").unwrap();
        // `?.` and `??` are distinct tokens, not decisions.
        assert_eq!(cyclomatic("const r = (a ?? b.c) ? d?.e : f;\n", js), 2);
        let go = by_name("Go").unwrap();
        assert_eq!(cyclomatic("x := 1\nif x > 0 {\n\ty()\n}\n", go), 2);
    }

    #[test]
    fn case_labels_each_count() {
        let c = by_name("C").unwrap();
        let src = "void f(int x) {\n\
                   \tswitch (x) {\n\
                   \tcase 1: a(); break;\n\
                   \tcase 2: b(); break;\n\
                   \tdefault: c(); break;\n\
                   \t}\n\
                   }\n";
        assert_eq!(cyclomatic(src, c), 3); // 1 + two case labels
    }

    #[test]
    fn unknown_language_nloc_counts_non_blank_lines() {
        assert_eq!(nloc_unknown("hello\n\n  \nworld\n"), 2);
        assert_eq!(nloc_unknown(""), 0);
    }

    #[test]
    fn dmm_thresholds_are_inclusive() {
        use DmmProperty::*;
        assert!(dmm_low_risk(UnitSize, 15, 0, 0));
        assert!(!dmm_low_risk(UnitSize, 16, 0, 0));
        assert!(dmm_low_risk(UnitComplexity, 0, 5, 0));
        assert!(!dmm_low_risk(UnitComplexity, 0, 6, 0));
        assert!(dmm_low_risk(UnitInterfacing, 0, 0, 2));
        assert!(!dmm_low_risk(UnitInterfacing, 0, 0, 3));
    }

    #[test]
    fn dmm_scores() {
        let mut counts = DmmCounts::default();
        assert_eq!(counts.score(), None);
        counts.record(true);
        counts.record(true);
        counts.record(false);
        assert_eq!(counts.score(), Some(2.0 / 3.0));
        let all_good = DmmCounts { good: 4, bad: 0 };
        assert_eq!(all_good.score(), Some(1.0));
        let all_bad = DmmCounts { good: 0, bad: 2 };
        assert_eq!(all_bad.score(), Some(0.0));
    }

    proptest! {
        /// NLOC never exceeds the number of physical lines, for any input.
        #[test]
        fn nloc_bounded_by_physical_lines(src in "[ -~\n]{0,300}") {
            let c = by_name("C").unwrap();
            let physical = src.lines().count() as u32;
            let cap = physical.max(if src.is_empty() { 0 } else { 1 });
            prop_assert!(nloc(&src, c) <= cap);
        }
    }
}
