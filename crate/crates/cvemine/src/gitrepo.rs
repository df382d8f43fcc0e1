//! Git repository access: cloning, commit lookup, and per-commit file
//! deltas.
//!
//! Repositories come from one of two places: a local mirror directory
//! (`<mirror>/<host>/<owner>/<repo>`, opened in place and never deleted) or
//! a bare network clone under the working directory (deleted after use
//! unless the caller keeps it). All content is read from the object
//! database, so no working tree is required.
//!
//! Merge commits are diffed against their *first* parent only: the side
//! branch's changes are what the merge introduced into the mainline, and
//! diffing against every parent would double-count lines that already
//! existed on the other side.

use std::path::{Path, PathBuf};

use log::{debug, warn};
use thiserror::Error;

use crate::forge::project_path;

#[derive(Debug, Error)]
pub enum GitError {
    #[error("{repo_url}: repository unavailable: {reason}")]
    RepoUnavailable { repo_url: String, reason: String },
    #[error("{repo_url}: commit {hash} not found")]
    CommitNotFound { repo_url: String, hash: String },
    #[error("git operation failed: {0}")]
    Git(#[from] git2::Error),
}

/// How a file changed within a commit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChangeType {
    Added,
    Deleted,
    Modified,
    Renamed,
}

impl ChangeType {
    pub fn as_str(self) -> &'static str {
        match self {
            ChangeType::Added => "added",
            ChangeType::Deleted => "deleted",
            ChangeType::Modified => "modified",
            ChangeType::Renamed => "renamed",
        }
    }
}

/// Commit header data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitInfo {
    /// Full 40-hex-digit hash, even when looked up by prefix.
    pub hash: String,
    pub author_name: String,
    /// UTC, `YYYY-MM-DDTHH:MM:SSZ`.
    pub author_date: String,
    pub committer_date: String,
    pub message: String,
    pub is_merge: bool,
}

/// One file's change in a commit, with both content versions.
#[derive(Debug, Clone)]
pub struct FileDelta {
    pub change_type: ChangeType,
    pub old_path: Option<String>,
    pub new_path: Option<String>,
    pub old_content: Option<Vec<u8>>,
    pub new_content: Option<Vec<u8>>,
}

pub struct GitRepo {
    repo: git2::Repository,
    repo_url: String,
    checkout: PathBuf,
    /// True when we created the checkout (network clone) and may delete it.
    owned: bool,
}

impl GitRepo {
    /// Open `repo_url`, preferring a mirror copy, then an existing clone,
    /// then (unless `offline`) a fresh bare clone under `workdir`.
    pub fn open(
        repo_url: &str,
        workdir: &Path,
        mirror_dir: Option<&Path>,
        offline: bool,
    ) -> Result<GitRepo, GitError> {
        let local = local_repo_path(repo_url).ok_or_else(|| GitError::RepoUnavailable {
            repo_url: repo_url.to_string(),
            reason: "unrecognized repository URL".to_string(),
        })?;

        if let Some(mirror) = mirror_dir {
            let path = mirror.join(&local);
            if path.exists() {
                let repo =
                    git2::Repository::open(&path).map_err(|err| GitError::RepoUnavailable {
                        repo_url: repo_url.to_string(),
                        reason: format!("mirror at {} is not a repository: {err}", path.display()),
                    })?;
                debug!("{repo_url}: opened mirror at {}", path.display());
                return Ok(GitRepo {
                    repo,
                    repo_url: repo_url.to_string(),
                    checkout: path,
                    owned: false,
                });
            }
        }

        let dest = workdir.join(&local);
        if dest.exists() {
            match git2::Repository::open(&dest) {
                Ok(repo) => {
                    debug!("{repo_url}: reusing clone at {}", dest.display());
                    return Ok(GitRepo {
                        repo,
                        repo_url: repo_url.to_string(),
                        checkout: dest,
                        owned: true,
                    });
                }
                Err(err) => {
                    warn!(
                        "{repo_url}: stale clone at {}: {err}; removing",
                        dest.display()
                    );
                    let _ = std::fs::remove_dir_all(&dest);
                }
            }
        }

        if offline {
            return Err(GitError::RepoUnavailable {
                repo_url: repo_url.to_string(),
                reason: "not mirrored and network access is disabled".to_string(),
            });
        }

        debug!("{repo_url}: cloning into {}", dest.display());
        if let Some(parent) = dest.parent() {
            std::fs::create_dir_all(parent).map_err(|err| GitError::RepoUnavailable {
                repo_url: repo_url.to_string(),
                reason: format!("cannot create {}: {err}", parent.display()),
            })?;
        }
        let repo = git2::build::RepoBuilder::new()
            .bare(true)
            .clone(repo_url, &dest)
            .map_err(|err| GitError::RepoUnavailable {
                repo_url: repo_url.to_string(),
                reason: format!("clone failed: {err}"),
            })?;
        Ok(GitRepo {
            repo,
            repo_url: repo_url.to_string(),
            checkout: dest,
            owned: true,
        })
    }

    pub fn repo_url(&self) -> &str {
        &self.repo_url
    }

    /// Resolve a full or abbreviated commit hash.
    fn resolve(&self, hash: &str) -> Result<git2::Commit<'_>, GitError> {
        self.repo
            .revparse_single(hash)
            .and_then(|obj| obj.peel_to_commit())
            .map_err(|_| GitError::CommitNotFound {
                repo_url: self.repo_url.clone(),
                hash: hash.to_string(),
            })
    }

    /// Commit header for a (possibly abbreviated) hash.
    pub fn commit_info(&self, hash: &str) -> Result<CommitInfo, GitError> {
        let commit = self.resolve(hash)?;
        let author = commit.author();
        Ok(CommitInfo {
            hash: commit.id().to_string(),
            author_name: String::from_utf8_lossy(author.name_bytes()).into_owned(),
            author_date: format_git_time(author.when()),
            committer_date: format_git_time(commit.time()),
            message: String::from_utf8_lossy(commit.message_bytes()).into_owned(),
            is_merge: commit.parent_count() > 1,
        })
    }

    /// File-level changes a commit introduced relative to its first parent
    /// (the whole tree for a root commit), with rename detection.
    pub fn file_deltas(&self, hash: &str) -> Result<Vec<FileDelta>, GitError> {
        let commit = self.resolve(hash)?;
        let new_tree = commit.tree()?;
        let old_tree = match commit.parent(0) {
            Ok(parent) => Some(parent.tree()?),
            Err(_) => None,
        };
        let mut diff = self
            .repo
            .diff_tree_to_tree(old_tree.as_ref(), Some(&new_tree), None)?;
        let mut find = git2::DiffFindOptions::new();
        find.renames(true);
        diff.find_similar(Some(&mut find))?;

        let mut deltas = Vec::new();
        for delta in diff.deltas() {
            let change_type = match delta.status() {
                git2::Delta::Added | git2::Delta::Copied => ChangeType::Added,
                git2::Delta::Deleted => ChangeType::Deleted,
                git2::Delta::Modified | git2::Delta::Typechange => ChangeType::Modified,
                git2::Delta::Renamed => ChangeType::Renamed,
                other => {
                    debug!("{}: skipping {:?} delta", self.repo_url, other);
                    continue;
                }
            };
            if delta.old_file().mode() == git2::FileMode::Commit
                || delta.new_file().mode() == git2::FileMode::Commit
            {
                debug!("{}: skipping submodule entry", self.repo_url);
                continue;
            }
            let old_path = file_path(&delta.old_file(), !delta.old_file().id().is_zero());
            let new_path = file_path(&delta.new_file(), !delta.new_file().id().is_zero());
            let old_content = self.blob_bytes(delta.old_file().id());
            let new_content = self.blob_bytes(delta.new_file().id());
            deltas.push(FileDelta {
                change_type,
                old_path,
                new_path,
                old_content,
                new_content,
            });
        }
        Ok(deltas)
    }

    fn blob_bytes(&self, id: git2::Oid) -> Option<Vec<u8>> {
        if id.is_zero() {
            return None;
        }
        match self.repo.find_blob(id) {
            Ok(blob) => Some(blob.content().to_vec()),
            Err(err) => {
                warn!("{}: cannot read blob {id}: {err}", self.repo_url);
                None
            }
        }
    }

    /// Delete the checkout if we created it and `keep` is false.
    pub fn cleanup(self, keep: bool) {
        let GitRepo {
            repo,
            checkout,
            owned,
            repo_url,
        } = self;
        drop(repo);
        if owned && !keep {
            if let Err(err) = std::fs::remove_dir_all(&checkout) {
                warn!(
                    "{repo_url}: could not remove clone {}: {err}",
                    checkout.display()
                );
            }
        }
    }
}

fn file_path(file: &git2::DiffFile<'_>, present: bool) -> Option<String> {
    if !present {
        return None;
    }
    file.path().map(|p| p.to_string_lossy().into_owned())
}

/// `<host>/<owner>/<repo>` relative path for mirrors and clone
/// destinations.
fn local_repo_path(repo_url: &str) -> Option<PathBuf> {
    let rest = repo_url
        .strip_prefix("https://")
        .or_else(|| repo_url.strip_prefix("http://"))?;
    let (host, _) = rest.split_once('/')?;
    let project = project_path(repo_url)?;
    let mut path = PathBuf::from(host);
    for segment in project.split('/') {
        if segment.is_empty() || segment == "." || segment == ".." {
            return None;
        }
        path.push(segment);
    }
    Some(path)
}

fn format_git_time(time: git2::Time) -> String {
    chrono::DateTime::from_timestamp(time.seconds(), 0)
        .map(|dt| dt.format("%Y-%m-%dT%H:%M:%SZ").to_string())
        .unwrap_or_else(|| time.seconds().to_string())
}
