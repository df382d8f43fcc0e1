//! Resolution of CVE reference URLs into forge commit references.
//!
//! Only direct commit URLs on the three supported forges are recognized;
//! pull-request, compare, tree, and issue URLs deliberately resolve to
//! nothing and are counted by the caller as unresolved references.

use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;

/// The code forges whose commit URLs the resolver understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Forge {
    GitHub,
    GitLab,
    Bitbucket,
}

impl Forge {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::GitHub => "github",
            Self::GitLab => "gitlab",
            Self::Bitbucket => "bitbucket",
        }
    }
}

/// A (CVE, repository, commit) triple extracted from a reference URL.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FixReference {
    pub cve_id: String,
    /// Canonical repository URL: https scheme, no trailing slash, no ".git".
    pub repo_url: String,
    /// Lowercase hex, 7–40 chars; expanded to the full 40 during extraction.
    pub commit_hash: String,
    pub forge: Forge,
}

fn github_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?i)^https?://(?:www\.)?github\.com/([^/]+)/([^/]+)/commit/([0-9a-f]{7,40})(?:\.(?:patch|diff))?$",
        )
        .unwrap()
    })
}

fn gitlab_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        // Modern `/-/commit/` form; the project path may contain subgroups.
        Regex::new(
            r"(?i)^https?://gitlab\.com/((?:[^/]+/)+[^/]+?)/-/commit/([0-9a-f]{7,40})(?:\.(?:patch|diff))?$",
        )
        .unwrap()
    })
}

fn gitlab_legacy_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?i)^https?://gitlab\.com/((?:[^/]+/)+[^/]+?)/commit/([0-9a-f]{7,40})(?:\.(?:patch|diff))?$",
        )
        .unwrap()
    })
}

fn bitbucket_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?i)^https?://(?:www\.)?bitbucket\.org/([^/]+)/([^/]+)/commits/([0-9a-f]{7,40})$",
        )
        .unwrap()
    })
}

/// Recognize a forge commit URL; anything else yields `None`.
///
/// Query strings and fragments are stripped first, trailing `.patch`/`.diff`
/// suffixes are tolerated, and the commit hash is lowercased.
pub fn resolve(url: &str, cve_id: &str) -> Option<FixReference> {
    let mut stripped = url.trim();
    if let Some(idx) = stripped.find('#') {
        stripped = &stripped[..idx];
    }
    if let Some(idx) = stripped.find('?') {
        stripped = &stripped[..idx];
    }
    let stripped = stripped.trim_end_matches('/');

    if let Some(caps) = github_re().captures(stripped) {
        let owner = &caps[1];
        let repo = caps[2].trim_end_matches(".git");
        if repo.is_empty() {
            return None;
        }
        return Some(FixReference {
            cve_id: cve_id.to_string(),
            repo_url: format!("https://github.com/{owner}/{repo}"),
            commit_hash: caps[3].to_lowercase(),
            forge: Forge::GitHub,
        });
    }
    if let Some(caps) = gitlab_re()
        .captures(stripped)
        .or_else(|| gitlab_legacy_re().captures(stripped))
    {
        let project = caps[1].trim_end_matches(".git");
        // The legacy pattern's greedy path could swallow the `/-` separator.
        let project = project.trim_end_matches("/-");
        if project.is_empty() || project.split('/').any(str::is_empty) {
            return None;
        }
        return Some(FixReference {
            cve_id: cve_id.to_string(),
            repo_url: format!("https://gitlab.com/{project}"),
            commit_hash: caps[2].to_lowercase(),
            forge: Forge::GitLab,
        });
    }
    if let Some(caps) = bitbucket_re().captures(stripped) {
        let owner = &caps[1];
        let repo = caps[2].trim_end_matches(".git");
        if repo.is_empty() {
            return None;
        }
        return Some(FixReference {
            cve_id: cve_id.to_string(),
            repo_url: format!("https://bitbucket.org/{owner}/{repo}"),
            commit_hash: caps[3].to_lowercase(),
            forge: Forge::Bitbucket,
        });
    }
    None
}

/// Remove exact-duplicate triples while preserving first-seen order.
///
/// The same (repo_url, commit_hash) under different CVE ids is kept: one
/// commit may fix several CVEs and vice versa.
pub fn dedupe(refs: Vec<FixReference>) -> Vec<FixReference> {
    let mut seen = HashSet::new();
    refs.into_iter()
        .filter(|r| seen.insert((r.cve_id.clone(), r.repo_url.clone(), r.commit_hash.clone())))
        .collect()
}
