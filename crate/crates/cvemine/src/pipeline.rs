//! End-to-end orchestration: feeds → CWE assignment → reference
//! resolution → per-repository metadata, cloning, and commit extraction →
//! persistence, plus the report/export entry points used by the CLI.
//!
//! Concurrency layout: one thread per feed year during ingest; afterwards
//! a pool of `worker_count` threads processes one repository each
//! (metadata fetch, clone/mirror open, commit extraction) and sends the
//! finished batch over a channel to the single writer — the calling
//! thread — which owns the SQLite connection. Stopping (sample limit)
//! raises a flag that workers check between repositories; in-flight
//! batches still drain so the run ends at a transaction boundary.
//!
//! Failure policy: feed errors are fatal; everything repository-scoped
//! (unreachable repo, failed clone, failed batch write) skips that
//! repository and the run continues. CVEs left without any fix commit are
//! pruned at the end, so the database never exposes half-collected
//! records.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc::{self, Sender};
use std::time::{Duration, Instant};

use chrono::Datelike;
use log::{info, warn};
use thiserror::Error;

use crate::analytics::{self, RankBy};
use crate::config::Config;
use crate::cwe::{self, CweCatalog};
use crate::db::{Db, DbError, TableCounts};
use crate::extract::{extract_commit, ExtractedCommit};
use crate::feed::{filter_fix_referencing, CveRecord, FeedError, FeedSource};
use crate::forge::{ForgeClient, RepositoryMeta, SystemClock};
use crate::gitrepo::GitRepo;
use crate::refs::{FixReference, Forge};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Feed(#[from] FeedError),
    #[error(transparent)]
    Db(#[from] DbError),
    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("database {path} does not exist — run `cvemine collect` first")]
    MissingDatabase { path: PathBuf },
}

/// A repository the run could not collect, and why.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedRepo {
    pub repo_url: String,
    pub reason: String,
}

/// A commit reference that resolved to nothing in its repository.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroppedRef {
    pub cve_id: String,
    pub repo_url: String,
    pub commit: String,
    pub reason: String,
}

/// Outcome of one `collect` run.
#[derive(Debug, Default)]
pub struct RunReport {
    /// Feed years actually ingested.
    pub years: Vec<u16>,
    /// Parsed CVE records across all feeds (rejected entries excluded).
    pub records_seen: usize,
    /// Records with at least one resolvable fix-commit reference.
    pub fix_referencing: usize,
    /// Records dropped for lack of any such reference.
    pub records_dropped: usize,
    /// Net new rows this run (inserts minus end-of-run pruning).
    pub new_rows: TableCounts,
    /// Commits written through the writer this run (new or refreshed);
    /// never exceeds `sample_limit` when that is non-zero.
    pub commits_persisted: u64,
    /// Repositories whose batch was written.
    pub repos_persisted: usize,
    /// Repositories left unprocessed because the sample limit stopped the
    /// run first.
    pub repos_unprocessed: usize,
    pub skipped_repos: Vec<SkippedRepo>,
    pub dropped_refs: Vec<DroppedRef>,
    /// CVEs removed at the end for having no surviving fix commit.
    pub pruned_cves: u64,
    pub duration: Duration,
}

impl RunReport {
    /// 0 on full success, 2 when repositories had to be skipped.
    pub fn exit_code(&self) -> i32 {
        if self.skipped_repos.is_empty() {
            0
        } else {
            2
        }
    }
}

impl std::fmt::Display for RunReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.years.first(), self.years.last()) {
            (Some(first), Some(last)) if first != last => {
                writeln!(f, "feeds: {} years ({first}-{last})", self.years.len())?
            }
            (Some(first), _) => writeln!(f, "feeds: year {first}")?,
            _ => writeln!(f, "feeds: none")?,
        }
        writeln!(
            f,
            "records: {} parsed, {} fix-referencing, {} dropped",
            self.records_seen, self.fix_referencing, self.records_dropped
        )?;
        let n = &self.new_rows;
        writeln!(
            f,
            "new rows: cve {}, cwe {}, cwe_classification {}, repository {}, commits {}, \
             fixes {}, file_change {}, method_change {}",
            n.cve,
            n.cwe,
            n.cwe_classification,
            n.repository,
            n.commits,
            n.fixes,
            n.file_change,
            n.method_change
        )?;
        writeln!(
            f,
            "commits persisted: {} across {} repositories",
            self.commits_persisted, self.repos_persisted
        )?;
        if self.repos_unprocessed > 0 {
            writeln!(
                f,
                "repositories left by sample limit: {}",
                self.repos_unprocessed
            )?;
        }
        if self.pruned_cves > 0 {
            writeln!(f, "pruned CVEs without a fix commit: {}", self.pruned_cves)?;
        }
        writeln!(f, "skipped repositories: {}", self.skipped_repos.len())?;
        for skip in &self.skipped_repos {
            writeln!(f, "  - {}: {}", skip.repo_url, skip.reason)?;
        }
        writeln!(f, "dropped references: {}", self.dropped_refs.len())?;
        for dropped in &self.dropped_refs {
            writeln!(
                f,
                "  - {} {}@{}: {}",
                dropped.cve_id, dropped.repo_url, dropped.commit, dropped.reason
            )?;
        }
        write!(f, "duration: {:.1}s", self.duration.as_secs_f64())
    }
}

/// All fix references pointing into one repository.
struct RepoJob {
    repo_url: String,
    forge: Forge,
    refs: Vec<FixReference>,
}

enum WorkerMsg {
    Batch {
        repo_url: String,
        meta: Box<RepositoryMeta>,
        commits: Vec<ExtractedCommit>,
        fixes: Vec<(String, String)>,
        dropped: Vec<DroppedRef>,
    },
    Skipped {
        repo_url: String,
        reason: String,
    },
}

/// Feed years to ingest: the configured range, else every cached year
/// when offline, else 2002 through the current year.
fn resolve_years(config: &Config, feeds: &FeedSource) -> Vec<u16> {
    match config.years {
        Some((start, end)) => (start..=end).collect(),
        None if config.offline => feeds.cached_years(),
        None => {
            let current = chrono::Utc::now().year().clamp(2002, u16::MAX as i32) as u16;
            (2002..=current).collect()
        }
    }
}

/// Load every year's records on its own thread, keeping year order and
/// dropping duplicate CVE ids (first year wins). Any feed error aborts.
fn load_feeds(feeds: &FeedSource, years: &[u16]) -> Result<Vec<CveRecord>, FeedError> {
    let mut results: Vec<Result<Vec<CveRecord>, FeedError>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = years
            .iter()
            .map(|&year| scope.spawn(move || feeds.load_year(year)))
            .collect();
        for handle in handles {
            results.push(handle.join().expect("feed thread panicked"));
        }
    });
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for result in results {
        for record in result? {
            if seen.insert(record.cve_id.clone()) {
                records.push(record);
            }
        }
    }
    Ok(records)
}

/// Group fix references by repository, references ordered by (hash,
/// CVE id) and repositories by URL so runs are reproducible.
fn group_by_repo(pairs: &[(CveRecord, Vec<FixReference>)]) -> Vec<RepoJob> {
    let mut groups: BTreeMap<String, Vec<FixReference>> = BTreeMap::new();
    for (_, refs) in pairs {
        for reference in refs {
            groups
                .entry(reference.repo_url.clone())
                .or_default()
                .push(reference.clone());
        }
    }
    groups
        .into_iter()
        .map(|(repo_url, mut refs)| {
            refs.sort_by(|a, b| {
                a.commit_hash
                    .cmp(&b.commit_hash)
                    .then_with(|| a.cve_id.cmp(&b.cve_id))
            });
            let forge = refs[0].forge;
            RepoJob {
                repo_url,
                forge,
                refs,
            }
        })
        .collect()
}

fn worker_loop(
    jobs: &[RepoJob],
    next: &AtomicUsize,
    stop: &AtomicBool,
    client: &ForgeClient,
    config: &Config,
    tx: Sender<WorkerMsg>,
) {
    loop {
        if stop.load(Ordering::Relaxed) {
            return;
        }
        let idx = next.fetch_add(1, Ordering::Relaxed);
        let Some(job) = jobs.get(idx) else { return };
        let msg = process_repo(job, client, config);
        if tx.send(msg).is_err() {
            return;
        }
    }
}

/// One repository end to end: metadata (best-effort), repository open,
/// extraction of every referenced commit, cleanup.
fn process_repo(job: &RepoJob, client: &ForgeClient, config: &Config) -> WorkerMsg {
    let repo_url = &job.repo_url;
    let meta = match client.fetch_repository_meta(job.forge, repo_url) {
        Ok(meta) => meta,
        Err(err) => {
            warn!("metadata for {repo_url} unavailable ({err}); storing fallback row");
            RepositoryMeta::fallback(repo_url)
        }
    };
    let repo = match GitRepo::open(
        repo_url,
        &config.workdir,
        config.mirror_dir.as_deref(),
        config.offline,
    ) {
        Ok(repo) => repo,
        Err(err) => {
            return WorkerMsg::Skipped {
                repo_url: repo_url.clone(),
                reason: err.to_string(),
            }
        }
    };

    let mut commits: BTreeMap<String, ExtractedCommit> = BTreeMap::new();
    let mut fixes: BTreeSet<(String, String)> = BTreeSet::new();
    let mut dropped = Vec::new();
    for reference in &job.refs {
        // Short and full spellings of one hash must extract only once.
        let known = commits
            .keys()
            .find(|full| full.starts_with(&reference.commit_hash))
            .cloned();
        let full_hash = match known {
            Some(full) => full,
            None => match extract_commit(&repo, &reference.commit_hash) {
                Ok(extracted) => {
                    let full = extracted.commit.hash.clone();
                    commits.insert(full.clone(), extracted);
                    full
                }
                Err(err) => {
                    dropped.push(DroppedRef {
                        cve_id: reference.cve_id.clone(),
                        repo_url: repo_url.clone(),
                        commit: reference.commit_hash.clone(),
                        reason: err.to_string(),
                    });
                    continue;
                }
            },
        };
        fixes.insert((reference.cve_id.clone(), full_hash));
    }
    repo.cleanup(config.keep_clones);
    WorkerMsg::Batch {
        repo_url: repo_url.clone(),
        meta: Box::new(meta),
        commits: commits.into_values().collect(),
        fixes: fixes.into_iter().collect(),
        dropped,
    }
}

/// Cut a batch down to `remaining` commits (order preserved), keeping
/// only fix links into the surviving commits. Returns true when anything
/// was cut.
fn truncate_batch(
    commits: &mut Vec<ExtractedCommit>,
    fixes: &mut Vec<(String, String)>,
    remaining: u64,
) -> bool {
    if commits.len() as u64 <= remaining {
        return false;
    }
    commits.truncate(remaining as usize);
    let kept: HashSet<&str> = commits.iter().map(|c| c.commit.hash.as_str()).collect();
    fixes.retain(|(_, hash)| kept.contains(hash.as_str()));
    true
}

/// Run the full collection pipeline per `config`.
pub fn run_collect(config: &Config) -> Result<RunReport, PipelineError> {
    let started = Instant::now();
    for dir in [&config.cache_dir, &config.workdir] {
        std::fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
            path: dir.clone(),
            source,
        })?;
    }
    if let Some(parent) = config.database_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| PipelineError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
    }

    let mut report = RunReport::default();

    // Ingest.
    let feeds = FeedSource::new(&config.cache_dir, config.offline);
    report.years = resolve_years(config, &feeds);
    let records = load_feeds(&feeds, &report.years)?;
    report.records_seen = records.len();
    let (pairs, dropped) = filter_fix_referencing(records);
    report.fix_referencing = pairs.len();
    report.records_dropped = dropped;
    info!(
        "{} of {} records reference a fix commit",
        report.fix_referencing, report.records_seen
    );

    // CWE assignment over the kept records.
    let (mut catalog, warnings) = CweCatalog::load(config.cwe_csv.as_deref());
    for warning in warnings {
        warn!("CWE catalog: {warning}");
    }
    let assignments: Vec<_> = pairs
        .iter()
        .flat_map(|(record, _)| cwe::assign(&record.cve_id, &record.problem_types))
        .collect();
    let stubbed = catalog.ensure_ids(assignments.iter().map(|a| a.cwe_id.as_str()));
    for cwe_id in &stubbed {
        warn!("CWE {cwe_id} is absent from the catalog; stored as a stub entry");
    }

    // Persist the CVE layer first so repository batches can reference it.
    let mut db = Db::open(&config.database_path)?;
    let entries: Vec<_> = catalog.entries().collect();
    let cve_records: Vec<CveRecord> = pairs.iter().map(|(record, _)| record.clone()).collect();
    report.new_rows = db.persist_cves(&cve_records, &entries, &assignments)?;

    // Repository fan-out.
    let jobs = group_by_repo(&pairs);
    let jobs_total = jobs.len();
    info!("{jobs_total} repositories to collect");
    let client = ForgeClient::new(
        &config.cache_dir,
        config.offline,
        config.github_token.clone(),
        std::sync::Arc::new(SystemClock::new()),
    );
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<WorkerMsg>();

    std::thread::scope(|scope| -> Result<(), PipelineError> {
        let worker_count = config.worker_count.min(jobs.len().max(1));
        for _ in 0..worker_count {
            let tx = tx.clone();
            let jobs = &jobs;
            let next = &next;
            let stop = &stop;
            let client = &client;
            scope.spawn(move || worker_loop(jobs, next, stop, client, config, tx));
        }
        drop(tx);

        // Writer: sole owner of the database connection.
        for msg in rx {
            match msg {
                WorkerMsg::Skipped { repo_url, reason } => {
                    warn!("skipping {repo_url}: {reason}");
                    report.skipped_repos.push(SkippedRepo { repo_url, reason });
                }
                WorkerMsg::Batch {
                    repo_url,
                    meta,
                    mut commits,
                    mut fixes,
                    dropped,
                } => {
                    report.dropped_refs.extend(dropped);
                    if commits.is_empty() {
                        let reason = "no extractable fix commits".to_string();
                        warn!("skipping {repo_url}: {reason}");
                        report.skipped_repos.push(SkippedRepo { repo_url, reason });
                        continue;
                    }
                    if config.sample_limit > 0 {
                        let remaining =
                            config.sample_limit.saturating_sub(report.commits_persisted);
                        if remaining == 0 {
                            stop.store(true, Ordering::Relaxed);
                            continue;
                        }
                        if truncate_batch(&mut commits, &mut fixes, remaining) {
                            stop.store(true, Ordering::Relaxed);
                        }
                    }
                    match db.persist_repo_batch(&meta, &commits, &fixes) {
                        Ok(delta) => {
                            report.new_rows += delta;
                            report.commits_persisted += commits.len() as u64;
                            report.repos_persisted += 1;
                            if config.sample_limit > 0
                                && report.commits_persisted >= config.sample_limit
                            {
                                stop.store(true, Ordering::Relaxed);
                            }
                        }
                        Err(err) => {
                            let reason = format!("batch write failed and rolled back: {err}");
                            warn!("skipping {repo_url}: {reason}");
                            report.skipped_repos.push(SkippedRepo { repo_url, reason });
                        }
                    }
                }
            }
        }
        Ok(())
    })?;

    report.repos_unprocessed = jobs_total - report.repos_persisted - report.skipped_repos.len();

    // Drop CVEs that ended the run without any fix commit.
    let (pruned_cves, pruned_classifications) = db.prune_unfixed_cves()?;
    report.pruned_cves = pruned_cves;
    report.new_rows.cve = report.new_rows.cve.saturating_sub(pruned_cves);
    report.new_rows.cwe_classification = report
        .new_rows
        .cwe_classification
        .saturating_sub(pruned_classifications);

    report.duration = started.elapsed();
    Ok(report)
}

/// Which analytics CSVs `report` emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportSelection {
    Summary,
    TopProjects,
    CweDistribution,
    DaysToFix,
    Aggregates,
    All,
}

impl ReportSelection {
    pub fn parse(s: &str) -> Option<ReportSelection> {
        match s {
            "summary" => Some(ReportSelection::Summary),
            "top-projects" => Some(ReportSelection::TopProjects),
            "cwe-distribution" => Some(ReportSelection::CweDistribution),
            "days-to-fix" => Some(ReportSelection::DaysToFix),
            "aggregates" => Some(ReportSelection::Aggregates),
            "all" => Some(ReportSelection::All),
            _ => None,
        }
    }

    pub const VALUES: &'static str =
        "summary, top-projects, cwe-distribution, days-to-fix, aggregates, all";
}

/// Emit the selected analytics CSVs into `out_dir`; returns the files
/// written.
pub fn run_report(
    config: &Config,
    selection: ReportSelection,
    out_dir: &Path,
    rank_by: RankBy,
    top_n: usize,
) -> Result<Vec<PathBuf>, PipelineError> {
    let db = open_existing(config)?;
    std::fs::create_dir_all(out_dir).map_err(|source| PipelineError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;

    let mut written = Vec::new();
    let mut emit =
        |name: &str, write: &dyn Fn(&Path) -> Result<(), DbError>| -> Result<(), PipelineError> {
            let path = out_dir.join(name);
            write(&path)?;
            written.push(path);
            Ok(())
        };

    let all = selection == ReportSelection::All;
    if all || selection == ReportSelection::Summary {
        emit("summary.csv", &|path| {
            analytics::write_summary_csv(&db, path)
        })?;
    }
    if all || selection == ReportSelection::TopProjects {
        emit("top_projects.csv", &|path| {
            analytics::write_top_projects_csv(&db, rank_by, top_n, path)
        })?;
    }
    if all || selection == ReportSelection::CweDistribution {
        emit("cwe_distribution.csv", &|path| {
            analytics::write_cwe_distribution_csv(&db, top_n, path)
        })?;
    }
    if all || selection == ReportSelection::DaysToFix {
        emit("days_to_fix.csv", &|path| {
            analytics::write_days_to_fix_csv(&db, path)
        })?;
    }
    if all || selection == ReportSelection::Aggregates {
        emit("project_aggregates.csv", &|path| {
            analytics::write_project_aggregates_csv(&db, path)
        })?;
    }
    Ok(written)
}

/// Open the configured database, failing with guidance when it has not
/// been collected yet.
pub fn open_existing(config: &Config) -> Result<Db, PipelineError> {
    if !config.database_path.exists() {
        return Err(PipelineError::MissingDatabase {
            path: config.database_path.clone(),
        });
    }
    Ok(Db::open(&config.database_path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::CommitChange;

    fn commit(hash: &str) -> ExtractedCommit {
        ExtractedCommit {
            commit: CommitChange {
                hash: hash.to_string(),
                repo_url: "https://github.com/test/alpha".to_string(),
                author_name: "a".to_string(),
                author_date: "2020-01-01T00:00:00Z".to_string(),
                committer_date: "2020-01-01T00:00:00Z".to_string(),
                message: "m".to_string(),
                is_merge: false,
                num_lines_added: 0,
                num_lines_deleted: 0,
                dmm_unit_size: None,
                dmm_unit_complexity: None,
                dmm_unit_interfacing: None,
            },
            files: Vec::new(),
            methods: Vec::new(),
        }
    }

    #[test]
    fn truncation_cuts_commits_and_their_fix_links() {
        let mut commits = vec![commit(&"a".repeat(40)), commit(&"b".repeat(40))];
        let mut fixes = vec![
            ("CVE-1".to_string(), "a".repeat(40)),
            ("CVE-2".to_string(), "b".repeat(40)),
            ("CVE-3".to_string(), "b".repeat(40)),
        ];
        assert!(truncate_batch(&mut commits, &mut fixes, 1));
        assert_eq!(commits.len(), 1);
        assert_eq!(commits[0].commit.hash, "a".repeat(40));
        assert_eq!(fixes, vec![("CVE-1".to_string(), "a".repeat(40))]);
    }

    #[test]
    fn truncation_is_a_noop_when_the_batch_fits() {
        let mut commits = vec![commit(&"a".repeat(40))];
        let mut fixes = vec![("CVE-1".to_string(), "a".repeat(40))];
        assert!(!truncate_batch(&mut commits, &mut fixes, 5));
        assert_eq!(commits.len(), 1);
        assert_eq!(fixes.len(), 1);
    }

    #[test]
    fn years_resolution_prefers_config_then_cache() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = Config {
            cache_dir: dir.path().to_path_buf(),
            offline: true,
            ..Config::default()
        };
        let feeds = FeedSource::new(&config.cache_dir, true);

        config.years = Some((2019, 2021));
        assert_eq!(resolve_years(&config, &feeds), vec![2019, 2020, 2021]);

        config.years = None;
        assert_eq!(
            resolve_years(&config, &feeds),
            Vec::<u16>::new(),
            "no cached feeds"
        );

        std::fs::create_dir_all(feeds.cache_dir.clone()).unwrap();
        std::fs::write(feeds.cache_dir.join("nvdcve-1.1-2020.json.gz"), b"x").unwrap();
        assert_eq!(resolve_years(&config, &feeds), vec![2020]);

        config.offline = false;
        let online = resolve_years(&config, &feeds);
        assert_eq!(online.first(), Some(&2002));
        assert!(online.len() > 20, "runs through the current year");
    }

    #[test]
    fn report_selection_parses_all_documented_values() {
        for name in ReportSelection::VALUES.split(", ") {
            assert!(ReportSelection::parse(name).is_some(), "{name} must parse");
        }
        assert!(ReportSelection::parse("bogus").is_none());
    }

    #[test]
    fn missing_database_is_fatal_with_guidance() {
        let config = Config {
            database_path: PathBuf::from("/no/such/cvemine.db"),
            ..Config::default()
        };
        let err = match open_existing(&config) {
            Err(err) => err,
            Ok(_) => panic!("expected open_existing to fail"),
        };
        let text = err.to_string();
        assert!(text.contains("/no/such/cvemine.db"));
        assert!(
            text.contains("collect"),
            "guidance should name the collect step"
        );
    }

    #[test]
    fn run_report_exit_code_reflects_skips() {
        let mut report = RunReport::default();
        assert_eq!(report.exit_code(), 0);
        report.skipped_repos.push(SkippedRepo {
            repo_url: "u".to_string(),
            reason: "r".to_string(),
        });
        assert_eq!(report.exit_code(), 2);
    }

    #[test]
    fn display_summarizes_the_run() {
        let mut report = RunReport {
            years: vec![2019, 2020],
            records_seen: 10,
            fix_referencing: 4,
            records_dropped: 6,
            commits_persisted: 5,
            repos_persisted: 2,
            ..RunReport::default()
        };
        report.dropped_refs.push(DroppedRef {
            cve_id: "CVE-2020-1".to_string(),
            repo_url: "https://github.com/test/alpha".to_string(),
            commit: "abc".to_string(),
            reason: "unknown commit".to_string(),
        });
        let text = report.to_string();
        assert!(text.contains("2019-2020"));
        assert!(text.contains("10 parsed, 4 fix-referencing, 6 dropped"));
        assert!(text.contains("commits persisted: 5 across 2 repositories"));
        assert!(text.contains("CVE-2020-1"));
    }
}
