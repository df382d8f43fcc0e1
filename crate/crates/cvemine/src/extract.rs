//! Commit-level change extraction: file records, method records, and
//! delta-maintainability scores for one fix commit.
//!
//! For every file a commit touched (relative to its first parent) this
//! module produces a [`FileChange`] with both content versions, a unified
//! diff, its parsed line sets, and file-level metrics; for every method
//! whose span intersects the changed lines, a [`MethodChange`] for the
//! side(s) it appears on. Commit-level line totals and DMM scores are
//! aggregated over the files.
//!
//! Files bigger than 2 MiB on either side are treated like binary files:
//! the record is kept (with a binary-files notice as its diff) but content,
//! metrics, language, and methods are absent.

use log::warn;
use sha2::{Digest, Sha256};

use crate::diff::{binary_notice, parse_diff, unified_file_diff, DiffParsed};
use crate::gitrepo::{ChangeType, FileDelta, GitError, GitRepo};
use crate::lang::{detect, is_binary, LanguageSpec};
use crate::methods::{extract_methods, MethodDef};
use crate::metrics::{
    dmm_low_risk, method_metrics, nloc, nloc_unknown, token_count, DmmCounts, DmmProperty,
    MethodMetrics,
};

/// Content above this size is treated like binary: no code, metrics, or
/// methods.
pub const MAX_SOURCE_BYTES: usize = 2 * 1024 * 1024;

/// One commit's header and aggregate change measures.
#[derive(Debug, Clone, PartialEq)]
pub struct CommitChange {
    pub hash: String,
    pub repo_url: String,
    pub author_name: String,
    pub author_date: String,
    pub committer_date: String,
    pub message: String,
    pub is_merge: bool,
    pub num_lines_added: u32,
    pub num_lines_deleted: u32,
    pub dmm_unit_size: Option<f64>,
    pub dmm_unit_complexity: Option<f64>,
    pub dmm_unit_interfacing: Option<f64>,
}

/// One file's change within a commit.
#[derive(Debug, Clone, PartialEq)]
pub struct FileChange {
    /// Deterministic key: truncated content hash of
    /// (repo_url, commit hash, old_path, new_path).
    pub file_change_id: String,
    pub hash: String,
    /// Base name of the file (post-change side when present).
    pub filename: String,
    pub old_path: Option<String>,
    pub new_path: Option<String>,
    pub change_type: ChangeType,
    pub code_before: Option<String>,
    pub code_after: Option<String>,
    pub diff: String,
    pub diff_parsed: DiffParsed,
    pub num_lines_added: u32,
    pub num_lines_deleted: u32,
    /// Metrics of the post-change content; absent for deleted or binary
    /// files. `complexity` is the sum of the file's method complexities.
    pub nloc: Option<u32>,
    pub complexity: Option<u32>,
    pub token_count: Option<u32>,
    pub programming_language: Option<String>,
}

/// One method version intersecting the commit's changed lines.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodChange {
    /// Deterministic key: truncated content hash of
    /// (file_change_id, signature, side).
    pub method_change_id: String,
    pub file_change_id: String,
    pub name: String,
    pub signature: String,
    pub parameters: Vec<String>,
    pub start_line: u32,
    pub end_line: u32,
    pub code: String,
    pub nloc: u32,
    pub complexity: u32,
    pub token_count: u32,
    /// True for the pre-change version of the method.
    pub before_change: bool,
}

/// Everything extracted from one commit.
#[derive(Debug, Clone)]
pub struct ExtractedCommit {
    pub commit: CommitChange,
    pub files: Vec<FileChange>,
    pub methods: Vec<MethodChange>,
}

/// Extract one commit (full or abbreviated hash) from an open repository.
pub fn extract_commit(repo: &GitRepo, hash: &str) -> Result<ExtractedCommit, GitError> {
    let info = repo.commit_info(hash)?;
    let mut deltas = repo.file_deltas(&info.hash)?;
    deltas.sort_by_key(display_path);

    let mut files = Vec::new();
    let mut methods = Vec::new();
    let mut added_total = 0u32;
    let mut deleted_total = 0u32;
    // Indexed by DmmProperty order: size, complexity, interfacing.
    let mut dmm = [DmmCounts::default(); 3];

    for delta in &deltas {
        let analysis = analyze_delta(repo.repo_url(), &info.hash, delta);
        added_total += analysis.file.num_lines_added;
        deleted_total += analysis.file.num_lines_deleted;
        for (counts, property) in dmm.iter_mut().zip(DMM_PROPERTIES) {
            accumulate_dmm(counts, property, &analysis);
        }
        methods.extend(method_rows(&analysis));
        files.push(analysis.file);
    }

    Ok(ExtractedCommit {
        commit: CommitChange {
            hash: info.hash,
            repo_url: repo.repo_url().to_string(),
            author_name: info.author_name,
            author_date: info.author_date,
            committer_date: info.committer_date,
            message: info.message,
            is_merge: info.is_merge,
            num_lines_added: added_total,
            num_lines_deleted: deleted_total,
            dmm_unit_size: dmm[0].score(),
            dmm_unit_complexity: dmm[1].score(),
            dmm_unit_interfacing: dmm[2].score(),
        },
        files,
        methods,
    })
}

const DMM_PROPERTIES: [DmmProperty; 3] = [
    DmmProperty::UnitSize,
    DmmProperty::UnitComplexity,
    DmmProperty::UnitInterfacing,
];

/// A method definition with its metrics, for one side of a file change.
struct AnalyzedMethod {
    def: MethodDef,
    metrics: MethodMetrics,
}

/// One file change plus the per-side method lists backing method records
/// and DMM classification.
struct FileAnalysis {
    file: FileChange,
    before_methods: Vec<AnalyzedMethod>,
    after_methods: Vec<AnalyzedMethod>,
}

fn display_path(delta: &FileDelta) -> Option<String> {
    delta.new_path.clone().or_else(|| delta.old_path.clone())
}

fn basename(path: &str) -> &str {
    path.rsplit('/').next().unwrap_or(path)
}

/// Decode file bytes for storage. NUL is replaced alongside invalid UTF-8:
/// a stray NUL past the binary-sniff window would otherwise end up inside
/// SQL text literals in dumps.
fn decode_text(bytes: &[u8]) -> String {
    let text = String::from_utf8_lossy(bytes);
    if text.contains('\0') {
        text.replace('\0', "\u{FFFD}")
    } else {
        text.into_owned()
    }
}

fn analyze_delta(repo_url: &str, commit_hash: &str, delta: &FileDelta) -> FileAnalysis {
    let file_change_id = truncated_hash(&[
        repo_url,
        commit_hash,
        delta.old_path.as_deref().unwrap_or(""),
        delta.new_path.as_deref().unwrap_or(""),
    ]);
    let path = delta
        .new_path
        .as_deref()
        .or(delta.old_path.as_deref())
        .unwrap_or("");
    let filename = basename(path).to_string();

    // A side whose path exists but whose blob could not be read is
    // indistinguishable from unreadable data: treat the file like binary.
    let unreadable = (delta.old_path.is_some() && delta.old_content.is_none())
        || (delta.new_path.is_some() && delta.new_content.is_none());
    let oversize = delta
        .old_content
        .as_ref()
        .is_some_and(|c| c.len() > MAX_SOURCE_BYTES)
        || delta
            .new_content
            .as_ref()
            .is_some_and(|c| c.len() > MAX_SOURCE_BYTES);
    let binary = unreadable
        || oversize
        || delta.old_content.as_deref().is_some_and(is_binary)
        || delta.new_content.as_deref().is_some_and(is_binary);

    let mut file = FileChange {
        file_change_id,
        hash: commit_hash.to_string(),
        filename,
        old_path: delta.old_path.clone(),
        new_path: delta.new_path.clone(),
        change_type: delta.change_type,
        code_before: None,
        code_after: None,
        diff: String::new(),
        diff_parsed: DiffParsed::default(),
        num_lines_added: 0,
        num_lines_deleted: 0,
        nloc: None,
        complexity: None,
        token_count: None,
        programming_language: None,
    };

    if binary {
        file.diff = binary_notice(delta.old_path.as_deref(), delta.new_path.as_deref());
        return FileAnalysis {
            file,
            before_methods: Vec::new(),
            after_methods: Vec::new(),
        };
    }

    let code_before = delta.old_content.as_deref().map(decode_text);
    let code_after = delta.new_content.as_deref().map(decode_text);

    file.diff = unified_file_diff(
        delta.old_path.as_deref(),
        delta.new_path.as_deref(),
        code_before.as_deref(),
        code_after.as_deref(),
    );
    file.diff_parsed = match parse_diff(&file.diff) {
        Ok(parsed) => parsed,
        Err(err) => {
            // Our own renderer produced the diff, so this cannot happen;
            // degrade to empty line sets rather than abort the commit.
            warn!("{repo_url}@{commit_hash}: self-rendered diff failed to parse: {err}");
            DiffParsed::default()
        }
    };
    file.num_lines_added = file.diff_parsed.added.len() as u32;
    file.num_lines_deleted = file.diff_parsed.deleted.len() as u32;

    let lang = match (&code_after, &code_before) {
        (Some(after), _) => detect(path, after),
        (None, Some(before)) => detect(delta.old_path.as_deref().unwrap_or(path), before),
        (None, None) => None,
    };
    file.programming_language = lang.map(|l| l.name.to_string());

    if let Some(after) = &code_after {
        match lang {
            Some(lang) => {
                file.nloc = Some(nloc(after, lang));
                file.token_count = Some(token_count(after, lang));
            }
            None => file.nloc = Some(nloc_unknown(after)),
        }
    }

    let (before_methods, after_methods) = match lang {
        Some(lang) if lang.method_style.is_some() => (
            analyzed_methods(code_before.as_deref(), lang),
            analyzed_methods(code_after.as_deref(), lang),
        ),
        _ => (Vec::new(), Vec::new()),
    };
    if code_after.is_some() && lang.is_some_and(|l| l.method_style.is_some()) {
        file.complexity = Some(after_methods.iter().map(|m| m.metrics.complexity).sum());
    }

    file.code_before = code_before;
    file.code_after = code_after;
    FileAnalysis {
        file,
        before_methods,
        after_methods,
    }
}

fn analyzed_methods(code: Option<&str>, lang: &'static LanguageSpec) -> Vec<AnalyzedMethod> {
    let Some(code) = code else {
        return Vec::new();
    };
    extract_methods(code, lang)
        .into_iter()
        .map(|def| {
            let metrics = method_metrics(&def.code, lang);
            AnalyzedMethod { def, metrics }
        })
        .collect()
}

/// The innermost method containing `line`, so nested definitions attribute
/// a change to the narrowest enclosing unit.
fn innermost(methods: &[AnalyzedMethod], line: u32) -> Option<&AnalyzedMethod> {
    methods
        .iter()
        .filter(|m| m.def.start_line <= line && line <= m.def.end_line)
        .min_by_key(|m| {
            (
                m.def.end_line - m.def.start_line,
                std::cmp::Reverse(m.def.start_line),
            )
        })
}

/// Classify each changed line against its containing method: an addition
/// is good when the method is low-risk, a deletion when it is high-risk.
/// Lines outside any method are excluded.
fn accumulate_dmm(counts: &mut DmmCounts, property: DmmProperty, analysis: &FileAnalysis) {
    for (line, _) in &analysis.file.diff_parsed.added {
        if let Some(method) = innermost(&analysis.after_methods, *line) {
            counts.record(method_low_risk(method, property));
        }
    }
    for (line, _) in &analysis.file.diff_parsed.deleted {
        if let Some(method) = innermost(&analysis.before_methods, *line) {
            counts.record(!method_low_risk(method, property));
        }
    }
}

fn method_low_risk(method: &AnalyzedMethod, property: DmmProperty) -> bool {
    dmm_low_risk(
        property,
        method.metrics.nloc,
        method.metrics.complexity,
        method.def.parameters.len(),
    )
}

/// Method records for the methods intersecting the change: pre-change
/// versions intersecting deleted lines, post-change versions intersecting
/// added lines.
fn method_rows(analysis: &FileAnalysis) -> Vec<MethodChange> {
    let mut rows = Vec::new();
    let deleted: Vec<u32> = analysis
        .file
        .diff_parsed
        .deleted
        .iter()
        .map(|(l, _)| *l)
        .collect();
    let added: Vec<u32> = analysis
        .file
        .diff_parsed
        .added
        .iter()
        .map(|(l, _)| *l)
        .collect();
    for (methods, lines, before_change) in [
        (&analysis.before_methods, &deleted, true),
        (&analysis.after_methods, &added, false),
    ] {
        for method in methods {
            let intersects = lines
                .iter()
                .any(|l| method.def.start_line <= *l && *l <= method.def.end_line);
            if !intersects {
                continue;
            }
            let side = if before_change { "before" } else { "after" };
            rows.push(MethodChange {
                method_change_id: truncated_hash(&[
                    &analysis.file.file_change_id,
                    &method.def.signature,
                    side,
                ]),
                file_change_id: analysis.file.file_change_id.clone(),
                name: method.def.name.clone(),
                signature: method.def.signature.clone(),
                parameters: method.def.parameters.clone(),
                start_line: method.def.start_line,
                end_line: method.def.end_line,
                code: method.def.code.clone(),
                nloc: method.metrics.nloc,
                complexity: method.metrics.complexity,
                token_count: method.metrics.token_count,
                before_change,
            });
        }
    }
    rows
}

/// First 32 hex digits of the SHA-256 of NUL-joined parts.
fn truncated_hash(parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for (idx, part) in parts.iter().enumerate() {
        if idx > 0 {
            hasher.update([0u8]);
        }
        hasher.update(part.as_bytes());
    }
    let digest = hasher.finalize();
    digest.iter().take(16).map(|b| format!("{b:02x}")).collect()
}
