//! Read-only summary statistics over a populated database, emitted as
//! plot-ready CSV files: dataset summary, top projects, CWE distribution,
//! days-to-fix statistics, and per-project severity/DMM aggregates.
//!
//! Conventions:
//! - A "project" is a repository, identified by `repo_url`; the short
//!   project name shown in outputs is the URL's final path segment.
//! - Rankings are descending by the chosen count, ties broken by short
//!   project name ascending (then repo_url, for full determinism).
//! - `days_to_fix` measures committer date minus CVE publication date in
//!   whole UTC calendar days, truncating toward zero. Negative values
//!   (fixes that landed before publication, as happens under responsible
//!   disclosure) are retained and surfaced via a `negative_samples` column.
//! - Quartiles use linear interpolation between closest ranks.

use std::path::Path;

use chrono::NaiveDateTime;
use log::warn;

use crate::db::{Db, DbError};

/// One key/value line of the dataset summary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummaryRow {
    pub metric: String,
    pub value: u64,
}

/// Ranking key for [`top_projects`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankBy {
    Cves,
    Commits,
    Files,
    Methods,
}

impl RankBy {
    pub fn parse(s: &str) -> Option<RankBy> {
        match s {
            "cves" => Some(RankBy::Cves),
            "commits" => Some(RankBy::Commits),
            "files" => Some(RankBy::Files),
            "methods" => Some(RankBy::Methods),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RankBy::Cves => "cves",
            RankBy::Commits => "commits",
            RankBy::Files => "files",
            RankBy::Methods => "methods",
        }
    }
}

/// One ranked project with its counts and CVE-level score averages.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectRow {
    pub project: String,
    pub repo_url: String,
    pub cves: u64,
    pub commits: u64,
    pub files: u64,
    pub methods: u64,
    pub avg_cvss2: Option<f64>,
    pub avg_cvss3: Option<f64>,
    pub avg_exploitability: Option<f64>,
    pub avg_impact: Option<f64>,
}

/// One CWE type with usage counts across the classification join.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CweRow {
    pub cwe_id: String,
    pub description: String,
    pub cve_count: u64,
    pub commit_count: u64,
    pub file_count: u64,
}

/// Grouping for [`days_to_fix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DaysGroup {
    All,
    PerProject,
}

/// Descriptive statistics for one group of day counts.
#[derive(Debug, Clone, PartialEq)]
pub struct DaysToFixRow {
    /// "all", or the short project name.
    pub group: String,
    pub samples: u64,
    /// How many samples are negative (fix predates publication).
    pub negative_samples: u64,
    pub min: i64,
    pub max: i64,
    pub mean: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

/// Which per-project aggregate family to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateKind {
    Severity,
    Dmm,
}

/// Per-project means. The severity family fills the `avg_*` columns, the
/// DMM family the `dmm_*` columns; unselected columns stay `None`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AggregateRow {
    pub project: String,
    pub repo_url: String,
    pub avg_cvss2: Option<f64>,
    pub avg_cvss3: Option<f64>,
    pub avg_exploitability: Option<f64>,
    pub avg_impact: Option<f64>,
    pub dmm_unit_size: Option<f64>,
    pub dmm_unit_complexity: Option<f64>,
    pub dmm_unit_interfacing: Option<f64>,
    /// Mean of the three DMM means that are present.
    pub dmm_overall: Option<f64>,
}

/// Short project name: the final path segment of the repository URL.
pub fn short_project_name(repo_url: &str) -> &str {
    repo_url
        .trim_end_matches('/')
        .rsplit('/')
        .next()
        .unwrap_or(repo_url)
}

/// Dataset-wide distinct counts.
pub fn summary(db: &Db) -> Result<Vec<SummaryRow>, DbError> {
    let queries = [
        ("cves", "SELECT COUNT(DISTINCT cve_id) FROM cve"),
        (
            "cwe_types_in_use",
            "SELECT COUNT(DISTINCT cwe_id) FROM cwe_classification",
        ),
        (
            "projects",
            "SELECT COUNT(DISTINCT repo_url) FROM repository",
        ),
        ("commits", "SELECT COUNT(DISTINCT hash) FROM commits"),
        (
            "files_changed",
            "SELECT COUNT(DISTINCT file_change_id) FROM file_change",
        ),
        (
            "methods_changed",
            "SELECT COUNT(DISTINCT method_change_id) FROM method_change",
        ),
        (
            "languages_detected",
            "SELECT COUNT(DISTINCT programming_language) FROM file_change
             WHERE programming_language IS NOT NULL",
        ),
    ];
    let mut rows = Vec::with_capacity(queries.len());
    for (metric, sql) in queries {
        let value: u64 = db.connection().query_row(sql, [], |row| row.get(0))?;
        rows.push(SummaryRow {
            metric: metric.to_string(),
            value,
        });
    }
    Ok(rows)
}

fn project_rows(db: &Db) -> Result<Vec<ProjectRow>, DbError> {
    let sql = "\
        SELECT r.repo_url,
               (SELECT COUNT(DISTINCT fx.cve_id) FROM fixes fx
                WHERE fx.repo_url = r.repo_url),
               (SELECT COUNT(*) FROM commits c WHERE c.repo_url = r.repo_url),
               (SELECT COUNT(*) FROM file_change f
                JOIN commits c ON f.hash = c.hash
                WHERE c.repo_url = r.repo_url),
               (SELECT COUNT(*) FROM method_change m
                JOIN file_change f ON m.file_change_id = f.file_change_id
                JOIN commits c ON f.hash = c.hash
                WHERE c.repo_url = r.repo_url),
               (SELECT AVG(v.cvss2_base_score) FROM cve v
                WHERE v.cve_id IN (SELECT cve_id FROM fixes WHERE repo_url = r.repo_url)),
               (SELECT AVG(v.cvss3_base_score) FROM cve v
                WHERE v.cve_id IN (SELECT cve_id FROM fixes WHERE repo_url = r.repo_url)),
               (SELECT AVG(v.exploitability_score) FROM cve v
                WHERE v.cve_id IN (SELECT cve_id FROM fixes WHERE repo_url = r.repo_url)),
               (SELECT AVG(v.impact_score) FROM cve v
                WHERE v.cve_id IN (SELECT cve_id FROM fixes WHERE repo_url = r.repo_url))
        FROM repository r";
    let mut stmt = db.connection().prepare(sql)?;
    let rows = stmt.query_map([], |row| {
        let repo_url: String = row.get(0)?;
        Ok(ProjectRow {
            project: short_project_name(&repo_url).to_string(),
            repo_url: repo_url.clone(),
            cves: row.get(1)?,
            commits: row.get(2)?,
            files: row.get(3)?,
            methods: row.get(4)?,
            avg_cvss2: row.get(5)?,
            avg_cvss3: row.get(6)?,
            avg_exploitability: row.get(7)?,
            avg_impact: row.get(8)?,
        })
    })?;
    rows.collect::<Result<Vec<_>, _>>().map_err(DbError::from)
}

/// Top `n` projects by the chosen count, with per-project CVE score means
/// (SQL `AVG` semantics: NULL scores are ignored).
pub fn top_projects(db: &Db, by: RankBy, n: usize) -> Result<Vec<ProjectRow>, DbError> {
    let mut rows = project_rows(db)?;
    rows.sort_by(|a, b| {
        let key = |row: &ProjectRow| match by {
            RankBy::Cves => row.cves,
            RankBy::Commits => row.commits,
            RankBy::Files => row.files,
            RankBy::Methods => row.methods,
        };
        key(b)
            .cmp(&key(a))
            .then_with(|| a.project.cmp(&b.project))
            .then_with(|| a.repo_url.cmp(&b.repo_url))
    });
    rows.truncate(n);
    Ok(rows)
}

/// Top `n` CWE types by distinct CVE count. A CVE whose fix spans several
/// commits contributes each commit, so `commit_count` can exceed
/// `cve_count`.
pub fn cwe_distribution(db: &Db, n: usize) -> Result<Vec<CweRow>, DbError> {
    let sql = "\
        SELECT cc.cwe_id, w.cwe_name,
               COUNT(DISTINCT cc.cve_id),
               (SELECT COUNT(DISTINCT fx.hash) FROM fixes fx
                WHERE fx.cve_id IN
                  (SELECT cve_id FROM cwe_classification c2 WHERE c2.cwe_id = cc.cwe_id)),
               (SELECT COUNT(DISTINCT f.file_change_id) FROM file_change f
                WHERE f.hash IN
                  (SELECT fx.hash FROM fixes fx
                   WHERE fx.cve_id IN
                     (SELECT cve_id FROM cwe_classification c2 WHERE c2.cwe_id = cc.cwe_id)))
        FROM cwe_classification cc
        JOIN cwe w ON w.cwe_id = cc.cwe_id
        GROUP BY cc.cwe_id
        ORDER BY COUNT(DISTINCT cc.cve_id) DESC, cc.cwe_id ASC
        LIMIT ?1";
    let mut stmt = db.connection().prepare(sql)?;
    let rows = stmt.query_map([n as i64], |row| {
        Ok(CweRow {
            cwe_id: row.get(0)?,
            description: row.get(1)?,
            cve_count: row.get(2)?,
            commit_count: row.get(3)?,
            file_count: row.get(4)?,
        })
    })?;
    rows.collect::<Result<Vec<_>, _>>().map_err(DbError::from)
}

/// Days between CVE publication and fix commit for every (cve, commit)
/// fix pair, grouped as requested.
pub fn days_to_fix(db: &Db, group: DaysGroup) -> Result<Vec<DaysToFixRow>, DbError> {
    let sql = "\
        SELECT c.repo_url, v.published_date, c.committer_date
        FROM fixes fx
        JOIN cve v ON v.cve_id = fx.cve_id
        JOIN commits c ON c.hash = fx.hash";
    let mut stmt = db.connection().prepare(sql)?;
    let pairs = stmt
        .query_map([], |row| {
            Ok((
                row.get::<_, String>(0)?,
                row.get::<_, String>(1)?,
                row.get::<_, String>(2)?,
            ))
        })?
        .collect::<Result<Vec<_>, _>>()?;

    let mut groups: Vec<(String, Vec<i64>)> = Vec::new();
    for (repo_url, published, committed) in &pairs {
        let Some(days) = day_delta(published, committed) else {
            warn!("unparseable dates for fix in {repo_url}: {published} / {committed}");
            continue;
        };
        let key = match group {
            DaysGroup::All => "all".to_string(),
            DaysGroup::PerProject => short_project_name(repo_url).to_string(),
        };
        match groups.iter_mut().find(|(name, _)| *name == key) {
            Some((_, days_vec)) => days_vec.push(days),
            None => groups.push((key, vec![days])),
        }
    }
    groups.sort_by(|a, b| a.0.cmp(&b.0));

    Ok(groups
        .into_iter()
        .map(|(name, days)| describe_days(name, days))
        .collect())
}

/// Whole UTC calendar days from `published` to `committed`, truncated
/// toward zero; `None` when either date fails to parse.
fn day_delta(published: &str, committed: &str) -> Option<i64> {
    const FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";
    let published = NaiveDateTime::parse_from_str(published, FORMAT).ok()?;
    let committed = NaiveDateTime::parse_from_str(committed, FORMAT).ok()?;
    Some((committed - published).num_seconds() / 86_400)
}

fn describe_days(group: String, mut days: Vec<i64>) -> DaysToFixRow {
    days.sort_unstable();
    let samples = days.len() as u64;
    let negative_samples = days.iter().filter(|d| **d < 0).count() as u64;
    let sum: i64 = days.iter().sum();
    DaysToFixRow {
        group,
        samples,
        negative_samples,
        min: days.first().copied().unwrap_or(0),
        max: days.last().copied().unwrap_or(0),
        mean: if days.is_empty() {
            0.0
        } else {
            sum as f64 / days.len() as f64
        },
        median: quantile(&days, 0.5),
        q25: quantile(&days, 0.25),
        q75: quantile(&days, 0.75),
    }
}

/// Quantile of a sorted sample with linear interpolation between closest
/// ranks (the convention most plotting stacks default to).
fn quantile(sorted: &[i64], q: f64) -> f64 {
    match sorted.len() {
        0 => 0.0,
        1 => sorted[0] as f64,
        n => {
            let position = q * (n - 1) as f64;
            let lower = position.floor() as usize;
            let fraction = position - lower as f64;
            let low = sorted[lower] as f64;
            if fraction == 0.0 {
                low
            } else {
                low + fraction * (sorted[lower + 1] as f64 - low)
            }
        }
    }
}

/// (repo_url, mean unit size, mean unit complexity, mean unit interfacing).
type DmmMeans = (String, Option<f64>, Option<f64>, Option<f64>);

fn dmm_rows(db: &Db) -> Result<Vec<DmmMeans>, DbError> {
    let sql = "\
        SELECT r.repo_url,
               AVG(c.dmm_unit_size), AVG(c.dmm_unit_complexity), AVG(c.dmm_unit_interfacing)
        FROM repository r
        LEFT JOIN commits c ON c.repo_url = r.repo_url
        GROUP BY r.repo_url";
    let mut stmt = db.connection().prepare(sql)?;
    let rows = stmt.query_map([], |row| {
        Ok((
            row.get::<_, String>(0)?,
            row.get(1)?,
            row.get(2)?,
            row.get(3)?,
        ))
    })?;
    rows.collect::<Result<Vec<_>, _>>().map_err(DbError::from)
}

/// Per-project means of either the CVE severity scores or the commit DMM
/// scores. The DMM family includes an overall score: the mean of the
/// per-project unit-size, unit-complexity, and unit-interfacing means.
pub fn per_project_aggregates(db: &Db, kind: AggregateKind) -> Result<Vec<AggregateRow>, DbError> {
    let mut rows = match kind {
        AggregateKind::Severity => project_rows(db)?
            .into_iter()
            .map(|p| AggregateRow {
                project: p.project,
                repo_url: p.repo_url,
                avg_cvss2: p.avg_cvss2,
                avg_cvss3: p.avg_cvss3,
                avg_exploitability: p.avg_exploitability,
                avg_impact: p.avg_impact,
                ..AggregateRow::default()
            })
            .collect::<Vec<_>>(),
        AggregateKind::Dmm => dmm_rows(db)?
            .into_iter()
            .map(|(repo_url, size, complexity, interfacing)| {
                let present: Vec<f64> = [size, complexity, interfacing]
                    .into_iter()
                    .flatten()
                    .collect();
                AggregateRow {
                    project: short_project_name(&repo_url).to_string(),
                    repo_url,
                    dmm_unit_size: size,
                    dmm_unit_complexity: complexity,
                    dmm_unit_interfacing: interfacing,
                    dmm_overall: if present.is_empty() {
                        None
                    } else {
                        Some(present.iter().sum::<f64>() / present.len() as f64)
                    },
                    ..AggregateRow::default()
                }
            })
            .collect(),
    };
    rows.sort_by(|a, b| {
        a.project
            .cmp(&b.project)
            .then_with(|| a.repo_url.cmp(&b.repo_url))
    });
    Ok(rows)
}

// ---------------------------------------------------------------------------
// CSV emitters — one file per analytics operation, documented headers.

fn float_cell(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// `summary.csv`: metric,value
pub fn write_summary_csv(db: &Db, path: &Path) -> Result<(), DbError> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_io)?;
    writer.write_record(["metric", "value"]).map_err(csv_io)?;
    for row in summary(db)? {
        writer
            .write_record([row.metric, row.value.to_string()])
            .map_err(csv_io)?;
    }
    writer.flush()?;
    Ok(())
}

/// `top_projects.csv`: rank,project,repo_url,cves,commits,files,methods,
/// avg_cvss2_score,avg_cvss3_score,avg_exploitability_score,avg_impact_score
pub fn write_top_projects_csv(db: &Db, by: RankBy, n: usize, path: &Path) -> Result<(), DbError> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_io)?;
    writer
        .write_record([
            "rank",
            "project",
            "repo_url",
            "cves",
            "commits",
            "files",
            "methods",
            "avg_cvss2_score",
            "avg_cvss3_score",
            "avg_exploitability_score",
            "avg_impact_score",
        ])
        .map_err(csv_io)?;
    for (idx, row) in top_projects(db, by, n)?.into_iter().enumerate() {
        writer
            .write_record([
                (idx + 1).to_string(),
                row.project,
                row.repo_url,
                row.cves.to_string(),
                row.commits.to_string(),
                row.files.to_string(),
                row.methods.to_string(),
                float_cell(row.avg_cvss2),
                float_cell(row.avg_cvss3),
                float_cell(row.avg_exploitability),
                float_cell(row.avg_impact),
            ])
            .map_err(csv_io)?;
    }
    writer.flush()?;
    Ok(())
}

/// `cwe_distribution.csv`: cwe_id,description,cve_count,commit_count,file_count
pub fn write_cwe_distribution_csv(db: &Db, n: usize, path: &Path) -> Result<(), DbError> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_io)?;
    writer
        .write_record([
            "cwe_id",
            "description",
            "cve_count",
            "commit_count",
            "file_count",
        ])
        .map_err(csv_io)?;
    for row in cwe_distribution(db, n)? {
        writer
            .write_record([
                row.cwe_id,
                row.description,
                row.cve_count.to_string(),
                row.commit_count.to_string(),
                row.file_count.to_string(),
            ])
            .map_err(csv_io)?;
    }
    writer.flush()?;
    Ok(())
}

/// `days_to_fix.csv`: group,samples,negative_samples,min_days,max_days,
/// mean_days,median_days,q25_days,q75_days — the "all" row first, then one
/// row per project. `negative_samples` flags fixes that predate
/// publication; those samples are retained in every statistic.
pub fn write_days_to_fix_csv(db: &Db, path: &Path) -> Result<(), DbError> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_io)?;
    writer
        .write_record([
            "group",
            "samples",
            "negative_samples",
            "min_days",
            "max_days",
            "mean_days",
            "median_days",
            "q25_days",
            "q75_days",
        ])
        .map_err(csv_io)?;
    let mut rows = days_to_fix(db, DaysGroup::All)?;
    rows.extend(days_to_fix(db, DaysGroup::PerProject)?);
    for row in rows {
        writer
            .write_record([
                row.group,
                row.samples.to_string(),
                row.negative_samples.to_string(),
                row.min.to_string(),
                row.max.to_string(),
                row.mean.to_string(),
                row.median.to_string(),
                row.q25.to_string(),
                row.q75.to_string(),
            ])
            .map_err(csv_io)?;
    }
    writer.flush()?;
    Ok(())
}

/// `project_aggregates.csv`: project,repo_url plus the severity means
/// (avg_cvss2_score…avg_impact_score) and the DMM means
/// (avg_dmm_unit_size…avg_dmm_overall), one row per project. Carrying both
/// families keeps severity- and DMM-style plots fed from a single file.
pub fn write_project_aggregates_csv(db: &Db, path: &Path) -> Result<(), DbError> {
    let severity = per_project_aggregates(db, AggregateKind::Severity)?;
    let dmm = per_project_aggregates(db, AggregateKind::Dmm)?;
    let mut writer = csv::Writer::from_path(path).map_err(csv_io)?;
    writer
        .write_record([
            "project",
            "repo_url",
            "avg_cvss2_score",
            "avg_cvss3_score",
            "avg_exploitability_score",
            "avg_impact_score",
            "avg_dmm_unit_size",
            "avg_dmm_unit_complexity",
            "avg_dmm_unit_interfacing",
            "avg_dmm_overall",
        ])
        .map_err(csv_io)?;
    for row in severity {
        let dmm_row = dmm.iter().find(|d| d.repo_url == row.repo_url);
        writer
            .write_record([
                row.project,
                row.repo_url,
                float_cell(row.avg_cvss2),
                float_cell(row.avg_cvss3),
                float_cell(row.avg_exploitability),
                float_cell(row.avg_impact),
                float_cell(dmm_row.and_then(|d| d.dmm_unit_size)),
                float_cell(dmm_row.and_then(|d| d.dmm_unit_complexity)),
                float_cell(dmm_row.and_then(|d| d.dmm_unit_interfacing)),
                float_cell(dmm_row.and_then(|d| d.dmm_overall)),
            ])
            .map_err(csv_io)?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_io(err: csv::Error) -> DbError {
    DbError::Io(std::io::Error::other(err))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-9;

    fn approx(actual: f64, expected: f64) -> bool {
        (actual - expected).abs() < EPS
    }

    /// Hand-built database, inserted row by row so every expected statistic
    /// below is enumerable by eye:
    ///
    /// - alpha: CVE-1 (cvss2 7.5, cvss3 9.8) fixed by commits h1 and h2;
    ///   CVE-2 (cvss2 5.0, cvss3 None) fixed by h2 (multi-CVE commit).
    ///   h1: DMM (1.0, 1.0, 1.0), 2 file changes, 1 method change.
    ///   h2: DMM (0.5, None, 0.0), 1 file change, 1 method change.
    /// - beta: CVE-3 (cvss2 None, cvss3 6.1) fixed by h3.
    ///   h3: DMM all None, 1 file change (no language), 0 method changes.
    /// - CWE-79 classifies CVE-1 and CVE-2; NVD-CWE-noinfo classifies CVE-3.
    fn fixture() -> Db {
        let db = Db::open_in_memory().unwrap();
        let conn = db.connection();
        conn.execute_batch(
            "
            INSERT INTO cwe VALUES('CWE-79', 'Cross-site Scripting', 'XSS', NULL, NULL, 0);
            INSERT INTO cwe VALUES('NVD-CWE-noinfo', 'Insufficient Information', '-', NULL, NULL, 0);

            INSERT INTO cve VALUES('CVE-2019-0001', 'd1', '2019-03-01T00:00:00Z',
                '2019-03-01T00:00:00Z', '[]', '[]',
                'AV:N/AC:L/Au:N/C:P/I:P/A:P', 7.5, 'CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H',
                9.8, 'CRITICAL', 3.9, 5.9, 'CRITICAL');
            INSERT INTO cve VALUES('CVE-2019-0002', 'd2', '2019-03-05T00:00:00Z',
                '2019-03-05T00:00:00Z', '[]', '[]',
                'AV:N/AC:L/Au:N/C:P/I:N/A:N', 5.0, NULL, NULL, NULL, 10.0, 2.9, 'MEDIUM');
            INSERT INTO cve VALUES('CVE-2020-0003', 'd3', '2020-06-01T12:00:00Z',
                '2020-06-01T12:00:00Z', '[]', '[]',
                NULL, NULL, 'CVSS:3.1/AV:N/AC:L/PR:N/UI:R/S:C/C:L/I:L/A:N', 6.1,
                'MEDIUM', 2.8, 2.7, 'MEDIUM');

            INSERT INTO cwe_classification VALUES('CVE-2019-0001', 'CWE-79');
            INSERT INTO cwe_classification VALUES('CVE-2019-0002', 'CWE-79');
            INSERT INTO cwe_classification VALUES('CVE-2020-0003', 'NVD-CWE-noinfo');

            INSERT INTO repository VALUES('https://github.com/test/alpha', 'test/alpha',
                NULL, NULL, NULL, NULL, 'C', -1, -1);
            INSERT INTO repository VALUES('https://gitlab.com/test/beta', 'test/beta',
                NULL, NULL, NULL, NULL, NULL, -1, -1);

            -- h1 lands 3 days 6 hours after CVE-1's publication -> 3.
            INSERT INTO commits VALUES('h1', 'https://github.com/test/alpha', 'a',
                '2019-03-04T06:00:00Z', '2019-03-04T06:00:00Z', 'm1', 0, 2, 1, 1.0, 1.0, 1.0);
            -- h2 lands 9 days after CVE-1 -> 9, 5 days after CVE-2 -> 5.
            INSERT INTO commits VALUES('h2', 'https://github.com/test/alpha', 'a',
                '2019-03-10T00:00:00Z', '2019-03-10T00:00:00Z', 'm2', 0, 1, 1, 0.5, NULL, 0.0);
            -- h3 lands 2.5 days BEFORE CVE-3's publication -> -2 (truncation).
            INSERT INTO commits VALUES('h3', 'https://gitlab.com/test/beta', 'b',
                '2020-05-30T00:00:00Z', '2020-05-30T00:00:00Z', 'm3', 0, 1, 0, NULL, NULL, NULL);

            INSERT INTO fixes VALUES('CVE-2019-0001', 'h1', 'https://github.com/test/alpha');
            INSERT INTO fixes VALUES('CVE-2019-0001', 'h2', 'https://github.com/test/alpha');
            INSERT INTO fixes VALUES('CVE-2019-0002', 'h2', 'https://github.com/test/alpha');
            INSERT INTO fixes VALUES('CVE-2020-0003', 'h3', 'https://gitlab.com/test/beta');

            INSERT INTO file_change VALUES('f1', 'h1', 'a.c', 'a.c', 'a.c', 'modified',
                'x', 'y', 'd', '{\"added\":[],\"deleted\":[]}', 2, 1, 3, 1, 9, 'C');
            INSERT INTO file_change VALUES('f2', 'h1', 'b.py', 'b.py', 'b.py', 'modified',
                'x', 'y', 'd', '{\"added\":[],\"deleted\":[]}', 0, 0, 2, NULL, 5, 'Python');
            INSERT INTO file_change VALUES('f3', 'h2', 'a.c', 'a.c', 'a.c', 'modified',
                'x', 'y', 'd', '{\"added\":[],\"deleted\":[]}', 1, 1, 3, 1, 9, 'C');
            INSERT INTO file_change VALUES('f4', 'h3', 'notes.txt', 'notes.txt', 'notes.txt',
                'modified', 'x', 'y', 'd', '{\"added\":[],\"deleted\":[]}', 1, 0, 1, NULL,
                NULL, NULL);

            INSERT INTO method_change VALUES('m1', 'f1', 'f', 'f()', '[]', 1, 3, 'c',
                3, 1, 9, 1);
            INSERT INTO method_change VALUES('m2', 'f3', 'f', 'f()', '[]', 1, 3, 'c',
                3, 1, 9, 0);
            ",
        )
        .unwrap();
        db
    }

    #[test]
    fn summary_counts_match_hand_enumeration() {
        let db = fixture();
        let rows = summary(&db).unwrap();
        let get = |metric: &str| rows.iter().find(|r| r.metric == metric).unwrap().value;
        assert_eq!(get("cves"), 3);
        assert_eq!(get("cwe_types_in_use"), 2);
        assert_eq!(get("projects"), 2);
        assert_eq!(get("commits"), 3);
        assert_eq!(get("files_changed"), 4);
        assert_eq!(get("methods_changed"), 2);
        assert_eq!(get("languages_detected"), 2, "C and Python");
    }

    #[test]
    fn summary_on_empty_database_is_all_zeros() {
        let db = Db::open_in_memory().unwrap();
        for row in summary(&db).unwrap() {
            assert_eq!(row.value, 0, "{} should be 0", row.metric);
        }
    }

    #[test]
    fn top_projects_ranks_and_averages() {
        let db = fixture();
        let rows = top_projects(&db, RankBy::Cves, 10).unwrap();
        assert_eq!(rows.len(), 2, "n beyond project count returns all");
        let alpha = &rows[0];
        assert_eq!(alpha.project, "alpha");
        assert_eq!(
            (alpha.cves, alpha.commits, alpha.files, alpha.methods),
            (2, 2, 3, 2)
        );
        // CVE-1 7.5, CVE-2 5.0 -> 6.25; cvss3 only CVE-1 has one -> 9.8.
        assert!(approx(alpha.avg_cvss2.unwrap(), 6.25));
        assert!(approx(alpha.avg_cvss3.unwrap(), 9.8));
        // exploitability (3.9 + 10.0)/2, impact (5.9 + 2.9)/2.
        assert!(approx(alpha.avg_exploitability.unwrap(), 6.95));
        assert!(approx(alpha.avg_impact.unwrap(), 4.4));

        let beta = &rows[1];
        assert_eq!(beta.project, "beta");
        assert!(beta.avg_cvss2.is_none(), "no CVSSv2 for beta's only CVE");
        assert!(approx(beta.avg_cvss3.unwrap(), 6.1));

        // Ranking by files: alpha 3 vs beta 1 -> alpha first still.
        let by_files = top_projects(&db, RankBy::Files, 1).unwrap();
        assert_eq!(by_files.len(), 1);
        assert_eq!(by_files[0].project, "alpha");
    }

    #[test]
    fn top_projects_breaks_ties_by_short_name() {
        let db = fixture();
        // Give beta a second commit (no new CVE) so commits tie 2-2... then
        // rank by commits: tie broken by name ascending -> alpha first.
        db.connection()
            .execute(
                "INSERT INTO commits VALUES('h4', 'https://gitlab.com/test/beta', 'b',
                 '2020-06-02T00:00:00Z', '2020-06-02T00:00:00Z', 'm4', 0, 0, 0,
                 NULL, NULL, NULL)",
                [],
            )
            .unwrap();
        let rows = top_projects(&db, RankBy::Commits, 10).unwrap();
        assert_eq!(rows[0].commits, rows[1].commits, "fixture should tie");
        assert_eq!(rows[0].project, "alpha");
        assert_eq!(rows[1].project, "beta");
    }

    #[test]
    fn cwe_distribution_counts_cves_commits_files() {
        let db = fixture();
        let rows = cwe_distribution(&db, 10).unwrap();
        assert_eq!(rows.len(), 2);

        // CWE-79: CVE-1 + CVE-2, fixed by commits {h1, h2}, files {f1,f2,f3}.
        let xss = &rows[0];
        assert_eq!(xss.cwe_id, "CWE-79");
        assert_eq!(xss.description, "Cross-site Scripting");
        assert_eq!((xss.cve_count, xss.commit_count, xss.file_count), (2, 2, 3));

        let noinfo = &rows[1];
        assert_eq!(noinfo.cwe_id, "NVD-CWE-noinfo");
        assert_eq!(
            (noinfo.cve_count, noinfo.commit_count, noinfo.file_count),
            (1, 1, 1)
        );

        assert_eq!(cwe_distribution(&db, 1).unwrap().len(), 1, "n truncates");
    }

    #[test]
    fn multi_commit_fix_makes_commit_count_exceed_cve_count() {
        let db = fixture();
        // Drop CVE-2's link so CWE-79 covers one CVE fixed by two commits.
        db.connection()
            .execute(
                "DELETE FROM cwe_classification WHERE cve_id = 'CVE-2019-0002'",
                [],
            )
            .unwrap();
        let rows = cwe_distribution(&db, 10).unwrap();
        let xss = rows.iter().find(|r| r.cwe_id == "CWE-79").unwrap();
        assert_eq!(xss.cve_count, 1);
        assert_eq!(xss.commit_count, 2, "one CVE, two fix commits");
        assert_eq!(xss.commit_count, xss.cve_count + 1);
    }

    #[test]
    fn days_to_fix_all_group_matches_hand_computation() {
        let db = fixture();
        let rows = days_to_fix(&db, DaysGroup::All).unwrap();
        assert_eq!(rows.len(), 1);
        let all = &rows[0];
        // Day set over the four fix pairs: {3, 9, 5, -2} -> sorted [-2, 3, 5, 9].
        assert_eq!(all.group, "all");
        assert_eq!(all.samples, 4);
        assert_eq!(all.negative_samples, 1);
        assert_eq!(all.min, -2);
        assert_eq!(all.max, 9);
        assert!(approx(all.mean, 3.75));
        assert!(approx(all.median, 4.0));
        assert!(
            approx(all.q25, 1.75),
            "-2 + 0.75*(3 - -2) = 1.75, got {}",
            all.q25
        );
        assert!(approx(all.q75, 6.0), "5 + 0.25*(9-5) = 6, got {}", all.q75);
    }

    #[test]
    fn days_to_fix_per_project_groups_and_truncates_toward_zero() {
        let db = fixture();
        let rows = days_to_fix(&db, DaysGroup::PerProject).unwrap();
        assert_eq!(rows.len(), 2);
        let alpha = rows.iter().find(|r| r.group == "alpha").unwrap();
        assert_eq!((alpha.min, alpha.max, alpha.samples), (3, 9, 3));
        assert!(approx(alpha.mean, 17.0 / 3.0));
        assert!(approx(alpha.median, 5.0));

        // beta's single sample: committed 2.5 days before publication;
        // -2.5 truncates toward zero to -2.
        let beta = rows.iter().find(|r| r.group == "beta").unwrap();
        assert_eq!(
            (beta.min, beta.max, beta.samples, beta.negative_samples),
            (-2, -2, 1, 1)
        );
        assert!(approx(beta.mean, -2.0));
    }

    #[test]
    fn spec_example_dayset_statistics() {
        let row = describe_days("all".to_string(), vec![-3, 0, 10]);
        assert!(approx(row.mean, 7.0 / 3.0), "mean 2.333…, got {}", row.mean);
        assert!(approx(row.median, 0.0));
        assert_eq!((row.min, row.max, row.negative_samples), (-3, 10, 1));
    }

    #[test]
    fn severity_aggregates_are_per_project_cve_means() {
        let db = fixture();
        let rows = per_project_aggregates(&db, AggregateKind::Severity).unwrap();
        assert_eq!(rows.len(), 2);
        let alpha = &rows[0];
        assert_eq!(alpha.project, "alpha");
        assert!(approx(alpha.avg_cvss2.unwrap(), 6.25));
        assert!(approx(alpha.avg_cvss3.unwrap(), 9.8));
        assert!(
            alpha.dmm_unit_size.is_none(),
            "severity family leaves DMM empty"
        );
        for row in &rows {
            for value in [
                row.avg_cvss2,
                row.avg_cvss3,
                row.avg_exploitability,
                row.avg_impact,
            ]
            .into_iter()
            .flatten()
            {
                assert!((0.0..=10.0).contains(&value));
            }
        }
    }

    #[test]
    fn dmm_aggregates_average_the_three_unit_means() {
        let db = fixture();
        let rows = per_project_aggregates(&db, AggregateKind::Dmm).unwrap();
        let alpha = rows.iter().find(|r| r.project == "alpha").unwrap();
        // size (1.0 + 0.5)/2, complexity 1.0 (h2's NULL ignored),
        // interfacing (1.0 + 0.0)/2.
        assert!(approx(alpha.dmm_unit_size.unwrap(), 0.75));
        assert!(approx(alpha.dmm_unit_complexity.unwrap(), 1.0));
        assert!(approx(alpha.dmm_unit_interfacing.unwrap(), 0.5));
        assert!(approx(alpha.dmm_overall.unwrap(), (0.75 + 1.0 + 0.5) / 3.0));
        for row in &rows {
            for value in [
                row.dmm_unit_size,
                row.dmm_unit_complexity,
                row.dmm_unit_interfacing,
                row.dmm_overall,
            ]
            .into_iter()
            .flatten()
            {
                assert!((0.0..=1.0).contains(&value));
            }
        }

        let beta = rows.iter().find(|r| r.project == "beta").unwrap();
        assert!(
            beta.dmm_overall.is_none(),
            "no DMM data at all -> no overall"
        );
    }

    #[test]
    fn single_commit_project_with_unit_dmm_scores_one() {
        let db = fixture();
        db.connection()
            .execute_batch(
                "INSERT INTO repository VALUES('https://github.com/test/solo', 'test/solo',
                     NULL, NULL, NULL, NULL, NULL, -1, -1);
                 INSERT INTO commits VALUES('h9', 'https://github.com/test/solo', 's',
                     '2021-01-01T00:00:00Z', '2021-01-01T00:00:00Z', 'm', 0, 1, 0,
                     1.0, 1.0, 1.0);",
            )
            .unwrap();
        let rows = per_project_aggregates(&db, AggregateKind::Dmm).unwrap();
        let solo = rows.iter().find(|r| r.project == "solo").unwrap();
        assert!(approx(solo.dmm_overall.unwrap(), 1.0));
    }

    #[test]
    fn csv_emitters_write_headers_and_rows() {
        let db = fixture();
        let dir = tempfile::tempdir().unwrap();

        let path = dir.path().join("summary.csv");
        write_summary_csv(&db, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("metric,value\n"));
        assert!(text.contains("cves,3\n"));

        let path = dir.path().join("top_projects.csv");
        write_top_projects_csv(&db, RankBy::Cves, 10, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("1,alpha,https://github.com/test/alpha,2,2,3,2,6.25,9.8,6.95,4.4"));

        let path = dir.path().join("cwe_distribution.csv");
        write_cwe_distribution_csv(&db, 10, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("CWE-79,Cross-site Scripting,2,2,3"));

        let path = dir.path().join("days_to_fix.csv");
        write_days_to_fix_csv(&db, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("all,4,1,-2,9,3.75,4,1.75,6"));
        assert!(text.contains("beta,1,1,-2,-2,-2,-2,-2,-2"));

        let path = dir.path().join("project_aggregates.csv");
        write_project_aggregates_csv(&db, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(
            text.contains("alpha,https://github.com/test/alpha,6.25,9.8,6.95,4.4,0.75,1,0.5,0.75")
        );
        // beta has no severity v2 and no DMM: empty cells stay empty.
        assert!(text.contains("beta,https://gitlab.com/test/beta,,6.1,2.8,2.7,,,,"));
    }
}
