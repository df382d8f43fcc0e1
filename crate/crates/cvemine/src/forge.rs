//! Repository-hosting APIs: project metadata with throttling and caching.
//!
//! Fetches repository metadata from the GitHub, GitLab, and Bitbucket REST
//! APIs, normalizing the differently-shaped responses into
//! [`RepositoryMeta`]. Successful (and not-found) responses are cached on
//! disk as raw `{status, body}` pairs; cache hits replay through the same
//! mapping code, so offline runs behave identically to live ones.
//!
//! Request pacing uses a per-forge token bucket (GitHub: 60/hour anonymous,
//! 5000/hour with a token). Rate-limit responses sleep until the advertised
//! reset and retry; after the retry budget is exhausted the repository is
//! reported as rate-limited and skipped by the caller. Time is abstracted
//! behind [`Clock`] so throttle behavior is testable without waiting.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant, SystemTime};

use log::{debug, warn};
use percent_encoding::{utf8_percent_encode, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::refs::Forge;

/// Normalized repository metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepositoryMeta {
    pub repo_url: String,
    /// Namespace-qualified name, e.g. `owner/project`.
    pub repo_name: String,
    pub description: Option<String>,
    /// UTC, `YYYY-MM-DDTHH:MM:SSZ`.
    pub date_created: Option<String>,
    pub date_last_push: Option<String>,
    pub homepage: Option<String>,
    pub repo_language: Option<String>,
    /// -1 when the forge does not report the count.
    pub forks_count: i64,
    pub stars_count: i64,
}

impl RepositoryMeta {
    /// Minimal metadata derived from the URL alone, used when the API is
    /// unreachable so extraction can still proceed.
    pub fn fallback(repo_url: &str) -> Self {
        RepositoryMeta {
            repo_url: repo_url.to_string(),
            repo_name: project_path(repo_url).unwrap_or_default(),
            description: None,
            date_created: None,
            date_last_push: None,
            homepage: None,
            repo_language: None,
            forks_count: -1,
            stars_count: -1,
        }
    }
}

#[derive(Debug, Error)]
pub enum ForgeError {
    #[error("{repo_url}: not a recognized repository URL")]
    BadRepoUrl { repo_url: String },
    #[error("{repo_url}: metadata not cached and network access is disabled")]
    OfflineMiss { repo_url: String },
    #[error("{repo_url}: repository not found (HTTP {status})")]
    NotFound { repo_url: String, status: u16 },
    #[error("{repo_url}: rate limited after {attempts} attempts")]
    RateLimited { repo_url: String, attempts: u32 },
    #[error("{repo_url}: HTTP {status}")]
    Http { repo_url: String, status: u16 },
    #[error("{repo_url}: request failed: {reason}")]
    Network { repo_url: String, reason: String },
    #[error("metadata cache: {0}")]
    Cache(#[from] std::io::Error),
}

/// Time source abstraction so throttling is testable.
pub trait Clock: Send + Sync {
    /// Monotonic elapsed time since the clock was created.
    fn monotonic(&self) -> Duration;
    /// Seconds since the Unix epoch (for rate-limit reset headers).
    fn epoch(&self) -> u64;
    fn sleep(&self, d: Duration);
}

pub struct SystemClock {
    start: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        SystemClock {
            start: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn monotonic(&self) -> Duration {
        self.start.elapsed()
    }

    fn epoch(&self) -> u64 {
        SystemTime::now()
            .duration_since(SystemTime::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Test clock: `sleep` advances instantly and is recorded.
pub struct FakeClock {
    now: Mutex<Duration>,
    epoch_base: u64,
}

impl FakeClock {
    pub fn new(epoch_base: u64) -> Self {
        FakeClock {
            now: Mutex::new(Duration::ZERO),
            epoch_base,
        }
    }

    pub fn elapsed(&self) -> Duration {
        *self.now.lock().unwrap()
    }
}

impl Clock for FakeClock {
    fn monotonic(&self) -> Duration {
        *self.now.lock().unwrap()
    }

    fn epoch(&self) -> u64 {
        self.epoch_base + self.now.lock().unwrap().as_secs()
    }

    fn sleep(&self, d: Duration) {
        *self.now.lock().unwrap() += d;
    }
}

/// Token bucket: `capacity` requests refilling at `capacity` per hour.
struct TokenBucket {
    capacity: f64,
    tokens: f64,
    refill_per_sec: f64,
    last: Duration,
}

impl TokenBucket {
    fn new(per_hour: f64, now: Duration) -> Self {
        TokenBucket {
            capacity: per_hour,
            tokens: per_hour,
            refill_per_sec: per_hour / 3600.0,
            last: now,
        }
    }

    fn refill(&mut self, now: Duration) {
        let elapsed = now.saturating_sub(self.last).as_secs_f64();
        self.tokens = (self.tokens + elapsed * self.refill_per_sec).min(self.capacity);
        self.last = now;
    }

    /// Duration to wait before a token is available (zero if one is now).
    fn need(&mut self, now: Duration) -> Duration {
        self.refill(now);
        if self.tokens >= 1.0 {
            Duration::ZERO
        } else {
            Duration::from_secs_f64((1.0 - self.tokens) / self.refill_per_sec)
        }
    }

    fn take(&mut self, now: Duration) {
        self.refill(now);
        self.tokens = (self.tokens - 1.0).max(0.0);
    }
}

/// Raw cached API response, replayed through the normal mapping path.
#[derive(Serialize, Deserialize)]
struct CachedResponse {
    status: u16,
    body: String,
}

const RETRY_BUDGET: u32 = 2;

pub struct ForgeClient {
    agent: ureq::Agent,
    cache_dir: PathBuf,
    offline: bool,
    github_token: Option<String>,
    clock: std::sync::Arc<dyn Clock>,
    buckets: Mutex<HashMap<Forge, TokenBucket>>,
}

impl ForgeClient {
    pub fn new(
        cache_dir: &Path,
        offline: bool,
        github_token: Option<String>,
        clock: std::sync::Arc<dyn Clock>,
    ) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .user_agent("cvemine/0.1")
            .build();
        ForgeClient {
            agent: config.into(),
            cache_dir: cache_dir.join("api"),
            offline,
            github_token,
            clock,
            buckets: Mutex::new(HashMap::new()),
        }
    }

    fn requests_per_hour(&self, forge: Forge) -> f64 {
        match forge {
            Forge::GitHub if self.github_token.is_some() => 5000.0,
            Forge::GitHub => 60.0,
            // GitLab and Bitbucket tolerate far more; stay well under.
            Forge::GitLab | Forge::Bitbucket => 1800.0,
        }
    }

    /// Block (via the clock) until the forge's bucket grants a request.
    fn throttle(&self, forge: Forge) {
        loop {
            let wait = {
                let now = self.clock.monotonic();
                let mut buckets = self.buckets.lock().unwrap();
                let bucket = buckets
                    .entry(forge)
                    .or_insert_with(|| TokenBucket::new(self.requests_per_hour(forge), now));
                let wait = bucket.need(now);
                if wait.is_zero() {
                    bucket.take(now);
                }
                wait
            };
            if wait.is_zero() {
                return;
            }
            debug!("{}: throttling {:.1}s", forge.as_str(), wait.as_secs_f64());
            self.clock.sleep(wait);
        }
    }

    fn cache_path(&self, forge: Forge, project: &str) -> PathBuf {
        self.cache_dir
            .join(forge.as_str())
            .join(format!("{}.json", project.replace('/', "__")))
    }

    fn api_url(forge: Forge, project: &str) -> String {
        match forge {
            Forge::GitHub => format!("https://api.github.com/repos/{project}"),
            Forge::GitLab => format!(
                "https://gitlab.com/api/v4/projects/{}",
                utf8_percent_encode(project, NON_ALPHANUMERIC)
            ),
            Forge::Bitbucket => format!("https://api.bitbucket.org/2.0/repositories/{project}"),
        }
    }

    /// Fetch metadata for `repo_url`, consulting the disk cache first.
    pub fn fetch_repository_meta(
        &self,
        forge: Forge,
        repo_url: &str,
    ) -> Result<RepositoryMeta, ForgeError> {
        let project = project_path(repo_url).ok_or_else(|| ForgeError::BadRepoUrl {
            repo_url: repo_url.to_string(),
        })?;
        let url = Self::api_url(forge, &project);
        self.fetch_repository_meta_at(forge, repo_url, &url)
    }

    /// Same as [`fetch_repository_meta`](Self::fetch_repository_meta) but
    /// with the endpoint URL supplied, so tests can point at a local server.
    fn fetch_repository_meta_at(
        &self,
        forge: Forge,
        repo_url: &str,
        url: &str,
    ) -> Result<RepositoryMeta, ForgeError> {
        let project = project_path(repo_url).ok_or_else(|| ForgeError::BadRepoUrl {
            repo_url: repo_url.to_string(),
        })?;
        let cache_path = self.cache_path(forge, &project);
        if let Some(cached) = read_cache(&cache_path) {
            debug!("{repo_url}: metadata cache hit ({})", cached.status);
            return map_response(forge, repo_url, &project, cached.status, &cached.body);
        }
        if self.offline {
            return Err(ForgeError::OfflineMiss {
                repo_url: repo_url.to_string(),
            });
        }

        let mut attempts = 0u32;
        loop {
            attempts += 1;
            self.throttle(forge);
            let mut request = self.agent.get(url).header("Accept", "application/json");
            if forge == Forge::GitHub {
                if let Some(token) = &self.github_token {
                    request = request.header("Authorization", format!("Bearer {token}"));
                }
            }
            let mut response = request.call().map_err(|err| ForgeError::Network {
                repo_url: repo_url.to_string(),
                reason: err.to_string(),
            })?;
            let status = response.status().as_u16();
            if status == 403 || status == 429 {
                if attempts > RETRY_BUDGET {
                    return Err(ForgeError::RateLimited {
                        repo_url: repo_url.to_string(),
                        attempts,
                    });
                }
                let wait = response
                    .headers()
                    .get("x-ratelimit-reset")
                    .and_then(|v| v.to_str().ok())
                    .and_then(|s| s.parse::<u64>().ok())
                    .map(|reset| reset.saturating_sub(self.clock.epoch()))
                    .unwrap_or(60)
                    .max(1);
                warn!("{repo_url}: rate limited (HTTP {status}), retrying in {wait}s");
                self.clock.sleep(Duration::from_secs(wait));
                continue;
            }
            let body = response
                .body_mut()
                .read_to_string()
                .map_err(|err| ForgeError::Network {
                    repo_url: repo_url.to_string(),
                    reason: err.to_string(),
                })?;
            // Cache definitive answers only; transient failures retry live.
            if status == 200 || status == 404 || status == 410 || status == 451 {
                write_cache(
                    &cache_path,
                    &CachedResponse {
                        status,
                        body: body.clone(),
                    },
                )?;
            }
            return map_response(forge, repo_url, &project, status, &body);
        }
    }
}

fn read_cache(path: &Path) -> Option<CachedResponse> {
    let bytes = fs::read(path).ok()?;
    serde_json::from_slice(&bytes).ok()
}

fn write_cache(path: &Path, response: &CachedResponse) -> Result<(), std::io::Error> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(
        path,
        serde_json::to_vec(response).expect("cache serializes"),
    )
}

/// `owner/project` path of a canonical repository URL (GitLab subgroups
/// keep every segment).
pub fn project_path(repo_url: &str) -> Option<String> {
    let rest = repo_url
        .strip_prefix("https://")
        .or_else(|| repo_url.strip_prefix("http://"))?;
    let (_, path) = rest.split_once('/')?;
    let path = path.trim_matches('/');
    if path.is_empty() {
        None
    } else {
        Some(path.to_string())
    }
}

fn map_response(
    forge: Forge,
    repo_url: &str,
    project: &str,
    status: u16,
    body: &str,
) -> Result<RepositoryMeta, ForgeError> {
    match status {
        200 => Ok(parse_meta(forge, repo_url, project, body)),
        404 | 410 | 451 => Err(ForgeError::NotFound {
            repo_url: repo_url.to_string(),
            status,
        }),
        _ => Err(ForgeError::Http {
            repo_url: repo_url.to_string(),
            status,
        }),
    }
}

fn normalize_api_date(raw: &str) -> Option<String> {
    chrono::DateTime::parse_from_rfc3339(raw)
        .ok()
        .map(|dt| dt.naive_utc().format("%Y-%m-%dT%H:%M:%SZ").to_string())
}

fn opt_date(raw: Option<String>) -> Option<String> {
    let raw = raw?;
    match normalize_api_date(&raw) {
        Some(normalized) => Some(normalized),
        None => {
            warn!("unparseable API timestamp {raw:?}");
            Some(raw)
        }
    }
}

fn opt_text(raw: Option<String>) -> Option<String> {
    raw.filter(|s| !s.trim().is_empty())
}

#[derive(Deserialize)]
struct GitHubRepo {
    full_name: Option<String>,
    description: Option<String>,
    created_at: Option<String>,
    pushed_at: Option<String>,
    homepage: Option<String>,
    language: Option<String>,
    forks_count: Option<i64>,
    stargazers_count: Option<i64>,
}

#[derive(Deserialize)]
struct GitLabProject {
    path_with_namespace: Option<String>,
    description: Option<String>,
    created_at: Option<String>,
    last_activity_at: Option<String>,
    star_count: Option<i64>,
    forks_count: Option<i64>,
}

#[derive(Deserialize)]
struct BitbucketRepo {
    full_name: Option<String>,
    description: Option<String>,
    created_on: Option<String>,
    updated_on: Option<String>,
    website: Option<String>,
    language: Option<String>,
}

fn parse_meta(forge: Forge, repo_url: &str, project: &str, body: &str) -> RepositoryMeta {
    let mut meta = RepositoryMeta::fallback(repo_url);
    meta.repo_name = project.to_string();
    match forge {
        Forge::GitHub => {
            if let Ok(repo) = serde_json::from_str::<GitHubRepo>(body) {
                if let Some(name) = opt_text(repo.full_name) {
                    meta.repo_name = name;
                }
                meta.description = opt_text(repo.description);
                meta.date_created = opt_date(repo.created_at);
                meta.date_last_push = opt_date(repo.pushed_at);
                meta.homepage = opt_text(repo.homepage);
                meta.repo_language = opt_text(repo.language);
                meta.forks_count = repo.forks_count.unwrap_or(-1);
                meta.stars_count = repo.stargazers_count.unwrap_or(-1);
            } else {
                warn!("{repo_url}: unexpected GitHub response shape");
            }
        }
        Forge::GitLab => {
            if let Ok(proj) = serde_json::from_str::<GitLabProject>(body) {
                if let Some(name) = opt_text(proj.path_with_namespace) {
                    meta.repo_name = name;
                }
                meta.description = opt_text(proj.description);
                meta.date_created = opt_date(proj.created_at);
                meta.date_last_push = opt_date(proj.last_activity_at);
                meta.forks_count = proj.forks_count.unwrap_or(-1);
                meta.stars_count = proj.star_count.unwrap_or(-1);
            } else {
                warn!("{repo_url}: unexpected GitLab response shape");
            }
        }
        Forge::Bitbucket => {
            if let Ok(repo) = serde_json::from_str::<BitbucketRepo>(body) {
                if let Some(name) = opt_text(repo.full_name) {
                    meta.repo_name = name;
                }
                meta.description = opt_text(repo.description);
                meta.date_created = opt_date(repo.created_on);
                meta.date_last_push = opt_date(repo.updated_on);
                meta.homepage = opt_text(repo.website);
                meta.repo_language = opt_text(repo.language);
                // Bitbucket's API does not expose fork/star counts here.
            } else {
                warn!("{repo_url}: unexpected Bitbucket response shape");
            }
        }
    }
    meta
}
