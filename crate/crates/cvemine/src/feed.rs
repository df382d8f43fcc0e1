//! CVE feed acquisition and parsing.
//!
//! Loads the yearly JSON 1.1 vulnerability feeds (`nvdcve-1.1-<year>.json.gz`),
//! caching downloads on disk so warm runs never touch the network. Records
//! are normalized into [`CveRecord`]: English description, UTC second-precision
//! timestamps, CWE labels, and CVSS v2/v3 metrics with the effective
//! exploitability/impact/severity taken from v3 when present, else v2.
//! Rejected entries (`** REJECT **`) are dropped at parse time.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;
use flate2::read::GzDecoder;
use log::{debug, warn};
use serde::Deserialize;
use thiserror::Error;

use crate::cvss::{Cvss2Metrics, Cvss3Metrics, Severity};
use crate::refs::{self, FixReference};

pub const FEED_URL_BASE: &str = "https://nvd.nist.gov/feeds/json/cve/1.1";

#[derive(Debug, Error)]
pub enum FeedError {
    #[error("feed {year}: {source}")]
    Io {
        year: u16,
        #[source]
        source: std::io::Error,
    },
    #[error("feed {year}: download failed: {reason}")]
    Download { year: u16, reason: String },
    #[error("feed {year} is not available in the cache and network access is disabled")]
    OfflineMiss { year: u16 },
    #[error("feed {year}: malformed JSON: {source}")]
    Json {
        year: u16,
        #[source]
        source: serde_json::Error,
    },
}

/// One reference URL attached to a CVE, with its NVD tags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CveReference {
    pub url: String,
    pub tags: Vec<String>,
}

/// A normalized CVE entry.
#[derive(Debug, Clone, PartialEq)]
pub struct CveRecord {
    pub cve_id: String,
    pub description: String,
    /// UTC, `YYYY-MM-DDTHH:MM:SSZ`.
    pub published_date: String,
    pub last_modified_date: String,
    pub references: Vec<CveReference>,
    /// Raw CWE labels as listed by the feed (normalized later).
    pub problem_types: Vec<String>,
    pub cvss2: Option<Cvss2Metrics>,
    pub cvss3: Option<Cvss3Metrics>,
    /// Effective scores/severity: v3 when present, else v2.
    pub exploitability_score: Option<f64>,
    pub impact_score: Option<f64>,
    pub severity: Option<String>,
}

// ---- raw feed schema (the subset of JSON 1.1 this pipeline reads) ----

#[derive(Deserialize)]
struct RawFeed {
    #[serde(rename = "CVE_Items", default)]
    items: Vec<RawItem>,
}

#[derive(Deserialize)]
struct RawItem {
    cve: RawCve,
    #[serde(default)]
    impact: RawImpact,
    #[serde(rename = "publishedDate", default)]
    published_date: String,
    #[serde(rename = "lastModifiedDate", default)]
    last_modified_date: String,
}

#[derive(Deserialize)]
struct RawCve {
    #[serde(rename = "CVE_data_meta")]
    meta: RawMeta,
    #[serde(default)]
    description: RawDescription,
    #[serde(default)]
    problemtype: RawProblemType,
    #[serde(default)]
    references: RawReferences,
}

#[derive(Deserialize)]
struct RawMeta {
    #[serde(rename = "ID")]
    id: String,
}

#[derive(Deserialize, Default)]
struct RawDescription {
    #[serde(default)]
    description_data: Vec<RawLangValue>,
}

#[derive(Deserialize)]
struct RawLangValue {
    #[serde(default)]
    lang: String,
    #[serde(default)]
    value: String,
}

#[derive(Deserialize, Default)]
struct RawProblemType {
    #[serde(default)]
    problemtype_data: Vec<RawProblemTypeData>,
}

#[derive(Deserialize)]
struct RawProblemTypeData {
    #[serde(default)]
    description: Vec<RawLangValue>,
}

#[derive(Deserialize, Default)]
struct RawReferences {
    #[serde(default)]
    reference_data: Vec<RawReference>,
}

#[derive(Deserialize)]
struct RawReference {
    url: String,
    #[serde(default)]
    tags: Vec<String>,
}

#[derive(Deserialize, Default)]
struct RawImpact {
    #[serde(rename = "baseMetricV2")]
    v2: Option<RawMetricV2>,
    #[serde(rename = "baseMetricV3")]
    v3: Option<RawMetricV3>,
}

#[derive(Deserialize)]
struct RawMetricV2 {
    #[serde(rename = "cvssV2")]
    cvss: RawCvssVector,
    #[serde(default)]
    severity: Option<String>,
    #[serde(rename = "exploitabilityScore")]
    exploitability_score: Option<f64>,
    #[serde(rename = "impactScore")]
    impact_score: Option<f64>,
}

#[derive(Deserialize)]
struct RawMetricV3 {
    #[serde(rename = "cvssV3")]
    cvss: RawCvssVector,
    #[serde(rename = "exploitabilityScore")]
    exploitability_score: Option<f64>,
    #[serde(rename = "impactScore")]
    impact_score: Option<f64>,
}

#[derive(Deserialize)]
struct RawCvssVector {
    #[serde(rename = "vectorString", default)]
    vector_string: String,
    #[serde(rename = "baseScore", default)]
    base_score: f64,
    #[serde(rename = "baseSeverity")]
    base_severity: Option<String>,
}

/// Normalize a feed timestamp (minute precision, `2019-03-07T21:29Z`) to
/// second-precision UTC. Already-normalized inputs pass through.
pub fn normalize_date(raw: &str) -> Option<String> {
    for fmt in [
        "%Y-%m-%dT%H:%MZ",
        "%Y-%m-%dT%H:%M:%SZ",
        "%Y-%m-%dT%H:%M:%S%.fZ",
    ] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(dt.format("%Y-%m-%dT%H:%M:%SZ").to_string());
        }
    }
    None
}

fn convert_item(item: RawItem) -> Option<CveRecord> {
    let cve_id = item.cve.meta.id;
    let description = item
        .cve
        .description
        .description_data
        .iter()
        .find(|d| d.lang == "en")
        .or_else(|| item.cve.description.description_data.first())
        .map(|d| d.value.clone())
        .unwrap_or_default();
    if description.starts_with("** REJECT **") {
        debug!("{cve_id}: rejected entry, skipping");
        return None;
    }
    let published_date = normalize_date(&item.published_date).unwrap_or_else(|| {
        warn!(
            "{cve_id}: unparseable publishedDate {:?}",
            item.published_date
        );
        item.published_date.clone()
    });
    let last_modified_date =
        normalize_date(&item.last_modified_date).unwrap_or_else(|| item.last_modified_date.clone());

    let problem_types = item
        .cve
        .problemtype
        .problemtype_data
        .iter()
        .flat_map(|pt| pt.description.iter())
        .map(|d| d.value.clone())
        .collect();
    let references = item
        .cve
        .references
        .reference_data
        .into_iter()
        .map(|r| CveReference {
            url: r.url,
            tags: r.tags,
        })
        .collect();

    let cvss2 = item.impact.v2.as_ref().and_then(|m| {
        Cvss2Metrics::parse_vector(&m.cvss.vector_string, m.cvss.base_score)
            .map_err(|err| warn!("{cve_id}: {err}"))
            .ok()
    });
    let cvss3 = item.impact.v3.as_ref().and_then(|m| {
        let severity = m.cvss.base_severity.as_deref().and_then(Severity::parse);
        Cvss3Metrics::parse_vector(&m.cvss.vector_string, m.cvss.base_score, severity)
            .map_err(|err| warn!("{cve_id}: {err}"))
            .ok()
    });

    // Effective scores and severity: prefer the v3 assessment wholesale.
    let (exploitability_score, impact_score, severity) = match (&item.impact.v3, &item.impact.v2) {
        (Some(v3), _) => (
            v3.exploitability_score,
            v3.impact_score,
            v3.cvss.base_severity.clone(),
        ),
        (None, Some(v2)) => (
            v2.exploitability_score,
            v2.impact_score,
            v2.severity.clone(),
        ),
        (None, None) => (None, None, None),
    };

    Some(CveRecord {
        cve_id,
        description,
        published_date,
        last_modified_date,
        references,
        problem_types,
        cvss2,
        cvss3,
        exploitability_score,
        impact_score,
        severity,
    })
}

/// Parse one yearly feed (raw bytes, gzipped or plain JSON).
pub fn parse_feed(bytes: &[u8], year: u16) -> Result<Vec<CveRecord>, FeedError> {
    let json: Vec<u8> = if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(bytes)
            .read_to_end(&mut out)
            .map_err(|source| FeedError::Io { year, source })?;
        out
    } else {
        bytes.to_vec()
    };
    let feed: RawFeed =
        serde_json::from_slice(&json).map_err(|source| FeedError::Json { year, source })?;
    Ok(feed.items.into_iter().filter_map(convert_item).collect())
}

/// Cache-first loader for the yearly feeds.
pub struct FeedSource {
    pub cache_dir: PathBuf,
    pub offline: bool,
    pub base_url: String,
}

impl FeedSource {
    pub fn new(cache_dir: &Path, offline: bool) -> Self {
        FeedSource {
            cache_dir: cache_dir.join("feeds"),
            offline,
            base_url: FEED_URL_BASE.to_string(),
        }
    }

    fn year_path(&self, year: u16) -> PathBuf {
        self.cache_dir.join(format!("nvdcve-1.1-{year}.json.gz"))
    }

    /// Years with a cached feed file, ascending.
    pub fn cached_years(&self) -> Vec<u16> {
        let mut years: Vec<u16> = fs::read_dir(&self.cache_dir)
            .into_iter()
            .flatten()
            .flatten()
            .filter_map(|entry| {
                let name = entry.file_name().into_string().ok()?;
                name.strip_prefix("nvdcve-1.1-")?
                    .strip_suffix(".json.gz")?
                    .parse()
                    .ok()
            })
            .collect();
        years.sort_unstable();
        years
    }

    /// Load one year's records, downloading into the cache on a miss.
    pub fn load_year(&self, year: u16) -> Result<Vec<CveRecord>, FeedError> {
        let path = self.year_path(year);
        if !path.exists() {
            if self.offline {
                return Err(FeedError::OfflineMiss { year });
            }
            self.download(year, &path)?;
        }
        let bytes = fs::read(&path).map_err(|source| FeedError::Io { year, source })?;
        let records = parse_feed(&bytes, year)?;
        debug!("feed {year}: {} records", records.len());
        Ok(records)
    }

    fn download(&self, year: u16, path: &Path) -> Result<(), FeedError> {
        let url = format!("{}/nvdcve-1.1-{year}.json.gz", self.base_url);
        debug!("downloading {url}");
        let mut response = ureq::get(&url).call().map_err(|err| FeedError::Download {
            year,
            reason: err.to_string(),
        })?;
        if response.status().as_u16() != 200 {
            return Err(FeedError::Download {
                year,
                reason: format!("HTTP {}", response.status()),
            });
        }
        let mut body = Vec::new();
        response
            .body_mut()
            .as_reader()
            .read_to_end(&mut body)
            .map_err(|source| FeedError::Io { year, source })?;
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| FeedError::Io { year, source })?;
        }
        let tmp = path.with_extension("part");
        fs::write(&tmp, &body).map_err(|source| FeedError::Io { year, source })?;
        fs::rename(&tmp, path).map_err(|source| FeedError::Io { year, source })?;
        Ok(())
    }
}

/// Commit references of one record: every reference URL resolved to a
/// supported forge commit, deduplicated.
pub fn fix_references(record: &CveRecord) -> Vec<FixReference> {
    let refs: Vec<FixReference> = record
        .references
        .iter()
        .filter_map(|r| refs::resolve(&r.url, &record.cve_id))
        .collect();
    refs::dedupe(refs)
}

/// Keep only records whose references include at least one resolvable
/// commit URL; returns the kept records paired with their fix references
/// and the number dropped.
pub fn filter_fix_referencing(
    records: Vec<CveRecord>,
) -> (Vec<(CveRecord, Vec<FixReference>)>, usize) {
    let total = records.len();
    let kept: Vec<(CveRecord, Vec<FixReference>)> = records
        .into_iter()
        .filter_map(|record| {
            let fixes = fix_references(&record);
            if fixes.is_empty() {
                None
            } else {
                Some((record, fixes))
            }
        })
        .collect();
    let dropped = total - kept.len();
    (kept, dropped)
}
