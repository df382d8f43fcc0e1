//! SQLite persistence: the eight-table relational schema, batched upserts,
//! integrity checking, pruning, and a deterministic SQL dump.
//!
//! Schema overview (all keys natural, no autoincrement ids):
//!
//! ```text
//! cve(cve_id PK) ←─ cwe_classification(cve_id, cwe_id) ─→ cwe(cwe_id PK)
//!   ↑
//! fixes(cve_id, hash) ─→ commits(hash PK) ─→ repository(repo_url PK)
//!                             ↑
//!                        file_change(file_change_id PK)
//!                             ↑
//!                        method_change(method_change_id PK)
//! ```
//!
//! Booleans are stored as INTEGER 0/1 (so `before_change = True` works in
//! queries), `diff_parsed` and `parameters` as canonical JSON text, CVSS
//! sub-structures flattened into `cvss2_*`/`cvss3_*` columns. Code columns
//! store text verbatim so diffs re-apply exactly.
//!
//! Writes happen in per-batch transactions (one CVE batch, then one
//! transaction per repository), keeping referential integrity at every
//! transaction boundary. All inserts are upserts keyed on the natural key,
//! so re-persisting a batch is a no-op and re-runs are harmless.

use std::io::{Read, Write as _};
use std::path::Path;

use rusqlite::types::ValueRef;
use rusqlite::Connection;
use thiserror::Error;

use crate::cwe::{CweAssignment, CweEntry};
use crate::extract::ExtractedCommit;
use crate::feed::CveRecord;
use crate::forge::RepositoryMeta;

#[derive(Debug, Error)]
pub enum DbError {
    #[error("database error: {0}")]
    Sqlite(#[from] rusqlite::Error),
    #[error("dump I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Reference catalog query: all pre-change methods from C files.
/// `before_change = True` relies on SQLite's TRUE keyword (= 1) matching
/// the INTEGER-encoded boolean column.
pub const QUERY_C_METHODS_BEFORE: &str = concat!(
    "    SELECT m.name, m.signature, m.nloc, m.parameters, m.token_count, m.code\n",
    "    FROM method_change m, file_change f\n",
    "    WHERE f.file_change_id = m.file_change_id\n",
    "    AND f.programming_language = 'C'\n",
    "    AND m.before_change = True",
);

/// Reference catalog query: files whose fix adds and removes at most one
/// line, joined to their CVE and CWE. (The trailing space on the fourth
/// line is intentional — the query is kept byte-for-byte.)
pub const QUERY_SINGLE_LINE_FIXES: &str = concat!(
    "    SELECT cv.cve_id, f.filename, f.num_lines_added, f.num_lines_deleted, ",
    "f.code_before, f.code_after, cc.cwe_id\n",
    "    FROM file_change f, commits c, fixes fx, cve cv, cwe_classification cc\n",
    "    WHERE f.hash = c.hash AND c.hash = fx.hash\n",
    "    AND fx.cve_id=cv.cve_id \n",
    "    AND cv.cve_id=cc.cve_id\n",
    "    AND f.num_lines_added<=1\n",
    "    AND f.num_lines_deleted<=1;",
);

/// Table DDL. Shared by `open` and the dump, so a dump replays into an
/// empty or freshly-opened database alike.
const SCHEMA_SQL: &str = "\
CREATE TABLE IF NOT EXISTS cwe (
  cwe_id TEXT NOT NULL PRIMARY KEY,
  cwe_name TEXT NOT NULL,
  description TEXT NOT NULL,
  extended_description TEXT,
  url TEXT,
  is_category INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS cve (
  cve_id TEXT NOT NULL PRIMARY KEY,
  description TEXT NOT NULL,
  published_date TEXT NOT NULL,
  last_modified_date TEXT NOT NULL,
  reference_json TEXT NOT NULL,
  problem_types TEXT NOT NULL,
  cvss2_vector_string TEXT,
  cvss2_base_score REAL,
  cvss3_vector_string TEXT,
  cvss3_base_score REAL,
  cvss3_base_severity TEXT,
  exploitability_score REAL,
  impact_score REAL,
  severity TEXT
);
CREATE TABLE IF NOT EXISTS cwe_classification (
  cve_id TEXT NOT NULL REFERENCES cve(cve_id),
  cwe_id TEXT NOT NULL REFERENCES cwe(cwe_id),
  PRIMARY KEY (cve_id, cwe_id)
);
CREATE TABLE IF NOT EXISTS repository (
  repo_url TEXT NOT NULL PRIMARY KEY,
  repo_name TEXT NOT NULL,
  description TEXT,
  date_created TEXT,
  date_last_push TEXT,
  homepage TEXT,
  repo_language TEXT,
  forks_count INTEGER NOT NULL,
  stars_count INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS commits (
  hash TEXT NOT NULL PRIMARY KEY,
  repo_url TEXT NOT NULL REFERENCES repository(repo_url),
  author_name TEXT NOT NULL,
  author_date TEXT NOT NULL,
  committer_date TEXT NOT NULL,
  message TEXT NOT NULL,
  is_merge INTEGER NOT NULL,
  num_lines_added INTEGER NOT NULL,
  num_lines_deleted INTEGER NOT NULL,
  dmm_unit_size REAL,
  dmm_unit_complexity REAL,
  dmm_unit_interfacing REAL
);
CREATE TABLE IF NOT EXISTS fixes (
  cve_id TEXT NOT NULL REFERENCES cve(cve_id),
  hash TEXT NOT NULL REFERENCES commits(hash),
  repo_url TEXT NOT NULL REFERENCES repository(repo_url),
  PRIMARY KEY (cve_id, hash)
);
CREATE TABLE IF NOT EXISTS file_change (
  file_change_id TEXT NOT NULL PRIMARY KEY,
  hash TEXT NOT NULL REFERENCES commits(hash),
  filename TEXT NOT NULL,
  old_path TEXT,
  new_path TEXT,
  change_type TEXT NOT NULL,
  code_before TEXT,
  code_after TEXT,
  diff TEXT NOT NULL,
  diff_parsed TEXT NOT NULL,
  num_lines_added INTEGER NOT NULL,
  num_lines_deleted INTEGER NOT NULL,
  nloc INTEGER,
  complexity INTEGER,
  token_count INTEGER,
  programming_language TEXT
);
CREATE TABLE IF NOT EXISTS method_change (
  method_change_id TEXT NOT NULL PRIMARY KEY,
  file_change_id TEXT NOT NULL REFERENCES file_change(file_change_id),
  name TEXT NOT NULL,
  signature TEXT NOT NULL,
  parameters TEXT NOT NULL,
  start_line INTEGER NOT NULL,
  end_line INTEGER NOT NULL,
  code TEXT NOT NULL,
  nloc INTEGER NOT NULL,
  complexity INTEGER NOT NULL,
  token_count INTEGER NOT NULL,
  before_change INTEGER NOT NULL
);
";

/// Dump/count order: parents before children so replay satisfies FKs even
/// with enforcement on.
const TABLE_ORDER: [&str; 8] = [
    "cwe",
    "cve",
    "cwe_classification",
    "repository",
    "commits",
    "fixes",
    "file_change",
    "method_change",
];

/// New-row counts per table for one persist call (inserts only; updates of
/// existing rows do not count).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TableCounts {
    pub cve: u64,
    pub cwe: u64,
    pub cwe_classification: u64,
    pub repository: u64,
    pub commits: u64,
    pub fixes: u64,
    pub file_change: u64,
    pub method_change: u64,
}

impl TableCounts {
    pub fn total(&self) -> u64 {
        self.cve
            + self.cwe
            + self.cwe_classification
            + self.repository
            + self.commits
            + self.fixes
            + self.file_change
            + self.method_change
    }

    fn delta(before: &TableCounts, after: &TableCounts) -> TableCounts {
        TableCounts {
            cve: after.cve - before.cve,
            cwe: after.cwe - before.cwe,
            cwe_classification: after.cwe_classification - before.cwe_classification,
            repository: after.repository - before.repository,
            commits: after.commits - before.commits,
            fixes: after.fixes - before.fixes,
            file_change: after.file_change - before.file_change,
            method_change: after.method_change - before.method_change,
        }
    }
}

impl std::ops::AddAssign for TableCounts {
    fn add_assign(&mut self, rhs: TableCounts) {
        self.cve += rhs.cve;
        self.cwe += rhs.cwe;
        self.cwe_classification += rhs.cwe_classification;
        self.repository += rhs.repository;
        self.commits += rhs.commits;
        self.fixes += rhs.fixes;
        self.file_change += rhs.file_change;
        self.method_change += rhs.method_change;
    }
}

pub struct Db {
    conn: Connection,
}

impl Db {
    /// Open (creating if needed) the database at `path` and ensure the
    /// schema exists.
    pub fn open(path: &Path) -> Result<Db, DbError> {
        let conn = Connection::open(path)?;
        Self::init(conn)
    }

    pub fn open_in_memory() -> Result<Db, DbError> {
        Self::init(Connection::open_in_memory()?)
    }

    fn init(conn: Connection) -> Result<Db, DbError> {
        conn.pragma_update(None, "foreign_keys", true)?;
        conn.execute_batch(SCHEMA_SQL)?;
        Ok(Db { conn })
    }

    /// Direct access for read-only analytics queries.
    pub fn connection(&self) -> &Connection {
        &self.conn
    }

    /// Current row count per table.
    pub fn counts(&self) -> Result<TableCounts, DbError> {
        let mut counts = TableCounts::default();
        for table in TABLE_ORDER {
            let n: u64 =
                self.conn
                    .query_row(&format!("SELECT COUNT(*) FROM {table}"), [], |row| {
                        row.get(0)
                    })?;
            match table {
                "cve" => counts.cve = n,
                "cwe" => counts.cwe = n,
                "cwe_classification" => counts.cwe_classification = n,
                "repository" => counts.repository = n,
                "commits" => counts.commits = n,
                "fixes" => counts.fixes = n,
                "file_change" => counts.file_change = n,
                "method_change" => counts.method_change = n,
                _ => unreachable!(),
            }
        }
        Ok(counts)
    }

    /// Persist the CVE-level batch: CWE catalog entries, CVE records, and
    /// their classifications, in one transaction.
    pub fn persist_cves(
        &mut self,
        records: &[CveRecord],
        cwe_entries: &[&CweEntry],
        classifications: &[CweAssignment],
    ) -> Result<TableCounts, DbError> {
        let before = self.counts()?;
        let tx = self.conn.transaction()?;
        {
            let mut stmt = tx.prepare(
                "INSERT INTO cwe (cwe_id, cwe_name, description, extended_description, url, is_category)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6)
                 ON CONFLICT(cwe_id) DO UPDATE SET
                   cwe_name = excluded.cwe_name,
                   description = excluded.description,
                   extended_description = excluded.extended_description,
                   url = excluded.url,
                   is_category = excluded.is_category",
            )?;
            for entry in cwe_entries {
                stmt.execute(rusqlite::params![
                    entry.cwe_id,
                    entry.name,
                    entry.description,
                    entry.extended_description,
                    entry.url,
                    entry.is_category,
                ])?;
            }

            let mut stmt = tx.prepare(
                "INSERT INTO cve (cve_id, description, published_date, last_modified_date,
                                  reference_json, problem_types,
                                  cvss2_vector_string, cvss2_base_score,
                                  cvss3_vector_string, cvss3_base_score, cvss3_base_severity,
                                  exploitability_score, impact_score, severity)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10, ?11, ?12, ?13, ?14)
                 ON CONFLICT(cve_id) DO UPDATE SET
                   description = excluded.description,
                   published_date = excluded.published_date,
                   last_modified_date = excluded.last_modified_date,
                   reference_json = excluded.reference_json,
                   problem_types = excluded.problem_types,
                   cvss2_vector_string = excluded.cvss2_vector_string,
                   cvss2_base_score = excluded.cvss2_base_score,
                   cvss3_vector_string = excluded.cvss3_vector_string,
                   cvss3_base_score = excluded.cvss3_base_score,
                   cvss3_base_severity = excluded.cvss3_base_severity,
                   exploitability_score = excluded.exploitability_score,
                   impact_score = excluded.impact_score,
                   severity = excluded.severity",
            )?;
            for record in records {
                let references = serde_json::to_string(
                    &record
                        .references
                        .iter()
                        .map(|r| serde_json::json!({"url": r.url, "tags": r.tags}))
                        .collect::<Vec<_>>(),
                )
                .expect("references serialize");
                let problem_types =
                    serde_json::to_string(&record.problem_types).expect("problem types serialize");
                stmt.execute(rusqlite::params![
                    record.cve_id,
                    record.description,
                    record.published_date,
                    record.last_modified_date,
                    references,
                    problem_types,
                    record.cvss2.as_ref().map(|c| c.vector_string.clone()),
                    record.cvss2.as_ref().map(|c| c.base_score),
                    record.cvss3.as_ref().map(|c| c.vector_string.clone()),
                    record.cvss3.as_ref().map(|c| c.base_score),
                    record
                        .cvss3
                        .as_ref()
                        .and_then(|c| c.base_severity.map(|s| s.as_str())),
                    record.exploitability_score,
                    record.impact_score,
                    record.severity,
                ])?;
            }

            let mut stmt = tx.prepare(
                "INSERT INTO cwe_classification (cve_id, cwe_id) VALUES (?1, ?2)
                 ON CONFLICT(cve_id, cwe_id) DO NOTHING",
            )?;
            for assignment in classifications {
                stmt.execute(rusqlite::params![assignment.cve_id, assignment.cwe_id])?;
            }
        }
        tx.commit()?;
        Ok(TableCounts::delta(&before, &self.counts()?))
    }

    /// Persist one repository's batch — metadata row, extracted commits
    /// with their file and method changes, and the fix links — in one
    /// transaction. On error the whole batch rolls back.
    pub fn persist_repo_batch(
        &mut self,
        meta: &RepositoryMeta,
        commits: &[ExtractedCommit],
        fixes: &[(String, String)],
    ) -> Result<TableCounts, DbError> {
        let before = self.counts()?;
        let tx = self.conn.transaction()?;
        {
            tx.execute(
                "INSERT INTO repository (repo_url, repo_name, description, date_created,
                                         date_last_push, homepage, repo_language,
                                         forks_count, stars_count)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9)
                 ON CONFLICT(repo_url) DO UPDATE SET
                   repo_name = excluded.repo_name,
                   description = excluded.description,
                   date_created = excluded.date_created,
                   date_last_push = excluded.date_last_push,
                   homepage = excluded.homepage,
                   repo_language = excluded.repo_language,
                   forks_count = excluded.forks_count,
                   stars_count = excluded.stars_count",
                rusqlite::params![
                    meta.repo_url,
                    meta.repo_name,
                    meta.description,
                    meta.date_created,
                    meta.date_last_push,
                    meta.homepage,
                    meta.repo_language,
                    meta.forks_count,
                    meta.stars_count,
                ],
            )?;

            let mut commit_stmt = tx.prepare(
                "INSERT INTO commits (hash, repo_url, author_name, author_date, committer_date,
                                      message, is_merge, num_lines_added, num_lines_deleted,
                                      dmm_unit_size, dmm_unit_complexity, dmm_unit_interfacing)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10, ?11, ?12)
                 ON CONFLICT(hash) DO UPDATE SET
                   repo_url = excluded.repo_url,
                   author_name = excluded.author_name,
                   author_date = excluded.author_date,
                   committer_date = excluded.committer_date,
                   message = excluded.message,
                   is_merge = excluded.is_merge,
                   num_lines_added = excluded.num_lines_added,
                   num_lines_deleted = excluded.num_lines_deleted,
                   dmm_unit_size = excluded.dmm_unit_size,
                   dmm_unit_complexity = excluded.dmm_unit_complexity,
                   dmm_unit_interfacing = excluded.dmm_unit_interfacing",
            )?;
            let mut file_stmt = tx.prepare(
                "INSERT INTO file_change (file_change_id, hash, filename, old_path, new_path,
                                          change_type, code_before, code_after, diff, diff_parsed,
                                          num_lines_added, num_lines_deleted, nloc, complexity,
                                          token_count, programming_language)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10, ?11, ?12, ?13, ?14, ?15, ?16)
                 ON CONFLICT(file_change_id) DO UPDATE SET
                   hash = excluded.hash,
                   filename = excluded.filename,
                   old_path = excluded.old_path,
                   new_path = excluded.new_path,
                   change_type = excluded.change_type,
                   code_before = excluded.code_before,
                   code_after = excluded.code_after,
                   diff = excluded.diff,
                   diff_parsed = excluded.diff_parsed,
                   num_lines_added = excluded.num_lines_added,
                   num_lines_deleted = excluded.num_lines_deleted,
                   nloc = excluded.nloc,
                   complexity = excluded.complexity,
                   token_count = excluded.token_count,
                   programming_language = excluded.programming_language",
            )?;
            let mut method_stmt = tx.prepare(
                "INSERT INTO method_change (method_change_id, file_change_id, name, signature,
                                            parameters, start_line, end_line, code, nloc,
                                            complexity, token_count, before_change)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10, ?11, ?12)
                 ON CONFLICT(method_change_id) DO UPDATE SET
                   file_change_id = excluded.file_change_id,
                   name = excluded.name,
                   signature = excluded.signature,
                   parameters = excluded.parameters,
                   start_line = excluded.start_line,
                   end_line = excluded.end_line,
                   code = excluded.code,
                   nloc = excluded.nloc,
                   complexity = excluded.complexity,
                   token_count = excluded.token_count,
                   before_change = excluded.before_change",
            )?;

            for extracted in commits {
                let c = &extracted.commit;
                commit_stmt.execute(rusqlite::params![
                    c.hash,
                    c.repo_url,
                    c.author_name,
                    c.author_date,
                    c.committer_date,
                    c.message,
                    c.is_merge,
                    c.num_lines_added,
                    c.num_lines_deleted,
                    c.dmm_unit_size,
                    c.dmm_unit_complexity,
                    c.dmm_unit_interfacing,
                ])?;
                for f in &extracted.files {
                    file_stmt.execute(rusqlite::params![
                        f.file_change_id,
                        f.hash,
                        f.filename,
                        f.old_path,
                        f.new_path,
                        f.change_type.as_str(),
                        f.code_before,
                        f.code_after,
                        f.diff,
                        f.diff_parsed.to_json(),
                        f.num_lines_added,
                        f.num_lines_deleted,
                        f.nloc,
                        f.complexity,
                        f.token_count,
                        f.programming_language,
                    ])?;
                }
                for m in &extracted.methods {
                    let parameters =
                        serde_json::to_string(&m.parameters).expect("parameters serialize");
                    method_stmt.execute(rusqlite::params![
                        m.method_change_id,
                        m.file_change_id,
                        m.name,
                        m.signature,
                        parameters,
                        m.start_line,
                        m.end_line,
                        m.code,
                        m.nloc,
                        m.complexity,
                        m.token_count,
                        m.before_change,
                    ])?;
                }
            }

            let mut fix_stmt = tx.prepare(
                "INSERT INTO fixes (cve_id, hash, repo_url) VALUES (?1, ?2, ?3)
                 ON CONFLICT(cve_id, hash) DO UPDATE SET repo_url = excluded.repo_url",
            )?;
            for (cve_id, hash) in fixes {
                fix_stmt.execute(rusqlite::params![cve_id, hash, meta.repo_url])?;
            }
        }
        tx.commit()?;
        Ok(TableCounts::delta(&before, &self.counts()?))
    }

    /// Remove CVEs that ended up with no fix commit (their repositories
    /// were unavailable), classifications first. Returns (cves,
    /// classifications) removed.
    pub fn prune_unfixed_cves(&mut self) -> Result<(u64, u64), DbError> {
        let tx = self.conn.transaction()?;
        let classifications = tx.execute(
            "DELETE FROM cwe_classification
             WHERE cve_id NOT IN (SELECT DISTINCT cve_id FROM fixes)",
            [],
        )? as u64;
        let cves = tx.execute(
            "DELETE FROM cve WHERE cve_id NOT IN (SELECT DISTINCT cve_id FROM fixes)",
            [],
        )? as u64;
        tx.commit()?;
        Ok((cves, classifications))
    }

    /// Referential-integrity audit: foreign-key orphans in both directions.
    /// Returns human-readable violations; empty means the database is
    /// internally consistent.
    pub fn integrity_check(&self) -> Result<Vec<String>, DbError> {
        let mut violations = Vec::new();

        let mut stmt = self.conn.prepare("PRAGMA foreign_key_check")?;
        let rows = stmt.query_map([], |row| {
            let table: String = row.get(0)?;
            let parent: String = row.get(2)?;
            Ok(format!("{table}: row referencing missing {parent} parent"))
        })?;
        for row in rows {
            violations.push(row?);
        }

        // Reverse direction: parents that lost all their children.
        let orphan_queries = [
            (
                "cve without any fix commit",
                "SELECT COUNT(*) FROM cve WHERE cve_id NOT IN (SELECT cve_id FROM fixes)",
            ),
            (
                "commit not referenced by any fix",
                "SELECT COUNT(*) FROM commits WHERE hash NOT IN (SELECT hash FROM fixes)",
            ),
            (
                "repository without any commit",
                "SELECT COUNT(*) FROM repository
                 WHERE repo_url NOT IN (SELECT repo_url FROM commits)",
            ),
        ];
        for (label, sql) in orphan_queries {
            let n: u64 = self.conn.query_row(sql, [], |row| row.get(0))?;
            if n > 0 {
                violations.push(format!("{n} {label}"));
            }
        }
        Ok(violations)
    }

    /// Run an arbitrary read query, stringifying values for display (NULL
    /// becomes the empty string).
    pub fn run_query(&self, sql: &str) -> Result<(Vec<String>, Vec<Vec<String>>), DbError> {
        let mut stmt = self.conn.prepare(sql)?;
        let headers: Vec<String> = stmt.column_names().iter().map(|s| s.to_string()).collect();
        let column_count = headers.len();
        let mut rows = Vec::new();
        let mut raw = stmt.query([])?;
        while let Some(row) = raw.next()? {
            let mut out = Vec::with_capacity(column_count);
            for idx in 0..column_count {
                out.push(display_value(row.get_ref(idx)?));
            }
            rows.push(out);
        }
        Ok((headers, rows))
    }

    /// Deterministic SQL dump: schema DDL followed by INSERTs in fixed
    /// table order, rows ordered by primary key. `*.gz` paths are
    /// gzip-compressed.
    pub fn export_dump(&self, path: &Path) -> Result<(), DbError> {
        let text = self.dump_to_string()?;
        if path.extension().is_some_and(|ext| ext == "gz") {
            let file = std::fs::File::create(path)?;
            let mut encoder = flate2::write::GzEncoder::new(file, flate2::Compression::default());
            encoder.write_all(text.as_bytes())?;
            encoder.finish()?;
        } else {
            std::fs::write(path, text)?;
        }
        Ok(())
    }

    pub fn dump_to_string(&self) -> Result<String, DbError> {
        let mut out = String::new();
        out.push_str("PRAGMA foreign_keys=OFF;\n");
        out.push_str("BEGIN TRANSACTION;\n");
        out.push_str(SCHEMA_SQL);
        for table in TABLE_ORDER {
            self.dump_table(table, &mut out)?;
        }
        out.push_str("COMMIT;\n");
        Ok(out)
    }

    fn dump_table(&self, table: &str, out: &mut String) -> Result<(), DbError> {
        let order = match table {
            "cwe" => "cwe_id",
            "cve" => "cve_id",
            "cwe_classification" => "cve_id, cwe_id",
            "repository" => "repo_url",
            "commits" => "hash",
            "fixes" => "cve_id, hash",
            "file_change" => "file_change_id",
            "method_change" => "method_change_id",
            _ => unreachable!(),
        };
        let mut stmt = self
            .conn
            .prepare(&format!("SELECT * FROM {table} ORDER BY {order}"))?;
        let column_count = stmt.column_count();
        let mut rows = stmt.query([])?;
        while let Some(row) = rows.next()? {
            out.push_str(&format!("INSERT INTO {table} VALUES("));
            for idx in 0..column_count {
                if idx > 0 {
                    out.push(',');
                }
                out.push_str(&sql_literal(row.get_ref(idx)?));
            }
            out.push_str(");\n");
        }
        Ok(())
    }

    /// Load a dump produced by [`export_dump`](Self::export_dump) into a
    /// fresh in-memory database.
    pub fn load_dump(path: &Path) -> Result<Db, DbError> {
        let bytes = std::fs::read(path)?;
        let text = if bytes.starts_with(&[0x1f, 0x8b]) {
            let mut decoder = flate2::read::GzDecoder::new(&bytes[..]);
            let mut text = String::new();
            decoder.read_to_string(&mut text)?;
            text
        } else {
            String::from_utf8_lossy(&bytes).into_owned()
        };
        let db = Db::open_in_memory()?;
        db.conn.execute_batch(&text)?;
        db.conn.pragma_update(None, "foreign_keys", true)?;
        Ok(db)
    }
}

fn display_value(value: ValueRef<'_>) -> String {
    match value {
        ValueRef::Null => String::new(),
        ValueRef::Integer(i) => i.to_string(),
        ValueRef::Real(f) => f.to_string(),
        ValueRef::Text(text) => String::from_utf8_lossy(text).into_owned(),
        ValueRef::Blob(blob) => blob.iter().map(|b| format!("{b:02x}")).collect(),
    }
}

/// SQL literal for one value; strings use single-quote doubling.
fn sql_literal(value: ValueRef<'_>) -> String {
    match value {
        ValueRef::Null => "NULL".to_string(),
        ValueRef::Integer(i) => i.to_string(),
        ValueRef::Real(f) => f.to_string(),
        ValueRef::Text(text) => {
            let text = String::from_utf8_lossy(text);
            format!("'{}'", text.replace('\'', "''"))
        }
        ValueRef::Blob(blob) => {
            let hex: String = blob.iter().map(|b| format!("{b:02x}")).collect();
            format!("X'{hex}'")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvss::{Cvss2Metrics, Cvss3Metrics, Severity};
    use crate::diff::DiffParsed;
    use crate::extract::{CommitChange, FileChange, MethodChange};
    use crate::feed::CveReference;
    use crate::gitrepo::ChangeType;

    fn cve(cve_id: &str, published: &str) -> CveRecord {
        CveRecord {
            cve_id: cve_id.to_string(),
            description: format!("description of {cve_id}"),
            published_date: published.to_string(),
            last_modified_date: "2020-01-01T00:00:00Z".to_string(),
            references: vec![CveReference {
                url: "https://github.com/test/alpha/commit/abc".to_string(),
                tags: vec!["Patch".to_string()],
            }],
            problem_types: vec!["CWE-79".to_string()],
            cvss2: Some(Cvss2Metrics::parse_vector("AV:N/AC:L/Au:N/C:P/I:P/A:P", 7.5).unwrap()),
            cvss3: Some(
                Cvss3Metrics::parse_vector(
                    "CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H",
                    9.8,
                    Some(Severity::Critical),
                )
                .unwrap(),
            ),
            exploitability_score: Some(3.9),
            impact_score: Some(5.9),
            severity: Some("CRITICAL".to_string()),
        }
    }

    fn cwe_entry(id: &str, name: &str) -> CweEntry {
        CweEntry {
            cwe_id: id.to_string(),
            name: name.to_string(),
            description: format!("{name} description"),
            extended_description: None,
            url: None,
            is_category: false,
        }
    }

    fn meta(repo_url: &str) -> RepositoryMeta {
        let mut meta = RepositoryMeta::fallback(repo_url);
        meta.repo_language = Some("C".to_string());
        meta.stars_count = 10;
        meta
    }

    fn commit(hash: &str, repo_url: &str) -> ExtractedCommit {
        ExtractedCommit {
            commit: CommitChange {
                hash: hash.to_string(),
                repo_url: repo_url.to_string(),
                author_name: "Author".to_string(),
                author_date: "2019-03-10T12:00:00Z".to_string(),
                committer_date: "2019-03-10T12:00:00Z".to_string(),
                message: "fix the overflow\n".to_string(),
                is_merge: false,
                num_lines_added: 1,
                num_lines_deleted: 1,
                dmm_unit_size: Some(0.5),
                dmm_unit_complexity: None,
                dmm_unit_interfacing: Some(1.0),
            },
            files: vec![FileChange {
                file_change_id: format!("file-{hash}"),
                hash: hash.to_string(),
                filename: "util.c".to_string(),
                old_path: Some("util.c".to_string()),
                new_path: Some("util.c".to_string()),
                change_type: ChangeType::Modified,
                code_before: Some("int f() {\n    return 1;\n}\n".to_string()),
                code_after: Some("int f() {\n    return 2;\n}\n".to_string()),
                diff: "@@ -2 +2 @@\n-    return 1;\n+    return 2;\n".to_string(),
                diff_parsed: DiffParsed {
                    added: vec![(2, "    return 2;".to_string())],
                    deleted: vec![(2, "    return 1;".to_string())],
                },
                num_lines_added: 1,
                num_lines_deleted: 1,
                nloc: Some(3),
                complexity: Some(1),
                token_count: Some(12),
                programming_language: Some("C".to_string()),
            }],
            methods: vec![
                MethodChange {
                    method_change_id: format!("method-{hash}-before"),
                    file_change_id: format!("file-{hash}"),
                    name: "f".to_string(),
                    signature: "f()".to_string(),
                    parameters: vec![],
                    start_line: 1,
                    end_line: 3,
                    code: "int f() {\n    return 1;\n}\n".to_string(),
                    nloc: 3,
                    complexity: 1,
                    token_count: 9,
                    before_change: true,
                },
                MethodChange {
                    method_change_id: format!("method-{hash}-after"),
                    file_change_id: format!("file-{hash}"),
                    name: "f".to_string(),
                    signature: "f()".to_string(),
                    parameters: vec![],
                    start_line: 1,
                    end_line: 3,
                    code: "int f() {\n    return 2;\n}\n".to_string(),
                    nloc: 3,
                    complexity: 1,
                    token_count: 9,
                    before_change: false,
                },
            ],
        }
    }

    /// A populated database: two CVEs sharing CWE-79, one repository, one
    /// commit fixing both CVEs.
    fn populated() -> Db {
        let mut db = Db::open_in_memory().unwrap();
        let records = [
            cve("CVE-2019-0001", "2019-03-01T00:00:00Z"),
            cve("CVE-2019-0002", "2019-03-05T00:00:00Z"),
        ];
        let entries = [
            cwe_entry("CWE-79", "Cross-site Scripting"),
            cwe_entry("CWE-119", "Buffer Overflow"),
        ];
        let entry_refs: Vec<&CweEntry> = entries.iter().collect();
        let classifications = [
            CweAssignment {
                cve_id: "CVE-2019-0001".to_string(),
                cwe_id: "CWE-79".to_string(),
            },
            CweAssignment {
                cve_id: "CVE-2019-0002".to_string(),
                cwe_id: "CWE-79".to_string(),
            },
        ];
        db.persist_cves(&records, &entry_refs, &classifications)
            .unwrap();

        let repo_url = "https://github.com/test/alpha";
        let fixes = [
            ("CVE-2019-0001".to_string(), "a1".repeat(20)),
            ("CVE-2019-0002".to_string(), "a1".repeat(20)),
        ];
        db.persist_repo_batch(
            &meta(repo_url),
            &[commit(&"a1".repeat(20), repo_url)],
            &fixes,
        )
        .unwrap();
        db
    }

    #[test]
    fn fresh_database_is_empty_and_consistent() {
        let db = Db::open_in_memory().unwrap();
        assert_eq!(db.counts().unwrap(), TableCounts::default());
        assert!(db.integrity_check().unwrap().is_empty());
        let (headers, rows) = db.run_query(QUERY_C_METHODS_BEFORE).unwrap();
        assert_eq!(headers.len(), 6);
        assert!(rows.is_empty());
    }

    #[test]
    fn persist_reports_new_rows_and_is_idempotent() {
        let mut db = Db::open_in_memory().unwrap();
        let records = [cve("CVE-2019-0001", "2019-03-01T00:00:00Z")];
        let entries = [cwe_entry("CWE-79", "Cross-site Scripting")];
        let entry_refs: Vec<&CweEntry> = entries.iter().collect();
        let classifications = [CweAssignment {
            cve_id: "CVE-2019-0001".to_string(),
            cwe_id: "CWE-79".to_string(),
        }];

        let first = db
            .persist_cves(&records, &entry_refs, &classifications)
            .unwrap();
        assert_eq!((first.cve, first.cwe, first.cwe_classification), (1, 1, 1));

        let again = db
            .persist_cves(&records, &entry_refs, &classifications)
            .unwrap();
        assert_eq!(again, TableCounts::default(), "second persist adds nothing");

        let repo_url = "https://github.com/test/alpha";
        let fixes = [("CVE-2019-0001".to_string(), "a1".repeat(20))];
        let batch = [commit(&"a1".repeat(20), repo_url)];
        let first = db
            .persist_repo_batch(&meta(repo_url), &batch, &fixes)
            .unwrap();
        assert_eq!(first.repository, 1);
        assert_eq!(first.commits, 1);
        assert_eq!(first.fixes, 1);
        assert_eq!(first.file_change, 1);
        assert_eq!(first.method_change, 2);

        let again = db
            .persist_repo_batch(&meta(repo_url), &batch, &fixes)
            .unwrap();
        assert_eq!(again, TableCounts::default());
        assert!(db.integrity_check().unwrap().is_empty());
    }

    #[test]
    fn foreign_key_violation_rolls_back_the_whole_batch() {
        let mut db = Db::open_in_memory().unwrap();
        let repo_url = "https://github.com/test/alpha";
        let mut bad = commit(&"b2".repeat(20), repo_url);
        bad.methods[0].file_change_id = "no-such-file-change".to_string();
        let err = db.persist_repo_batch(&meta(repo_url), &[bad], &[]);
        assert!(err.is_err(), "dangling file_change_id must fail");
        assert_eq!(
            db.counts().unwrap(),
            TableCounts::default(),
            "rollback left rows behind"
        );
    }

    #[test]
    fn catalog_queries_run_verbatim() {
        let db = populated();

        let (headers, rows) = db.run_query(QUERY_C_METHODS_BEFORE).unwrap();
        assert_eq!(
            headers,
            [
                "name",
                "signature",
                "nloc",
                "parameters",
                "token_count",
                "code"
            ]
        );
        assert_eq!(rows.len(), 1, "exactly the before-change C method");
        assert_eq!(rows[0][0], "f");
        assert_eq!(rows[0][1], "f()");
        assert!(rows[0][5].contains("return 1;"));

        let (_, rows) = db.run_query(QUERY_SINGLE_LINE_FIXES).unwrap();
        // One single-line file change × two CVEs sharing the commit.
        assert_eq!(rows.len(), 2);
        let cve_ids: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
        assert_eq!(cve_ids, ["CVE-2019-0001", "CVE-2019-0002"]);
        assert!(rows[0][6] == "CWE-79");
    }

    #[test]
    fn dump_load_dump_is_a_fixpoint() {
        let db = populated();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dump.sql");
        db.export_dump(&path).unwrap();
        let first = std::fs::read_to_string(&path).unwrap();
        assert!(first.contains("CREATE TABLE"));
        assert!(first.contains("INSERT INTO cve VALUES"));

        let reloaded = Db::load_dump(&path).unwrap();
        assert_eq!(reloaded.counts().unwrap(), db.counts().unwrap());
        assert!(reloaded.integrity_check().unwrap().is_empty());
        assert_eq!(
            reloaded.dump_to_string().unwrap(),
            first,
            "dump is not a fixpoint"
        );
    }

    #[test]
    fn empty_dump_contains_only_schema() {
        let db = Db::open_in_memory().unwrap();
        let text = db.dump_to_string().unwrap();
        assert!(text.contains("CREATE TABLE"));
        assert!(!text.contains("INSERT INTO"));
    }

    #[test]
    fn gzip_dump_round_trips() {
        let db = populated();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dump.sql.gz");
        db.export_dump(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..2], &[0x1f, 0x8b], "gzip magic expected");
        let reloaded = Db::load_dump(&path).unwrap();
        assert_eq!(reloaded.counts().unwrap(), db.counts().unwrap());
    }

    #[test]
    fn multiline_code_round_trips_through_the_dump() {
        let db = populated();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dump.sql");
        db.export_dump(&path).unwrap();
        let reloaded = Db::load_dump(&path).unwrap();
        let code: String = reloaded
            .connection()
            .query_row("SELECT code_before FROM file_change", [], |row| row.get(0))
            .unwrap();
        assert_eq!(code, "int f() {\n    return 1;\n}\n");
    }

    #[test]
    fn integrity_check_reports_reverse_orphans() {
        let mut db = populated();
        assert!(db.integrity_check().unwrap().is_empty());
        // Remove the fix links: the CVEs, the commit, and (transitively)
        // the repository all become orphans.
        db.conn.execute("DELETE FROM fixes", []).unwrap();
        let violations = db.integrity_check().unwrap();
        assert!(violations.iter().any(|v| v.contains("cve without any fix")));
        assert!(violations
            .iter()
            .any(|v| v.contains("commit not referenced")));

        let (cves, classifications) = db.prune_unfixed_cves().unwrap();
        assert_eq!((cves, classifications), (2, 2));
        let remaining: u64 = db
            .connection()
            .query_row("SELECT COUNT(*) FROM cve", [], |row| row.get(0))
            .unwrap();
        assert_eq!(remaining, 0);
    }

    #[test]
    fn run_query_stringifies_null_and_numbers() {
        let db = populated();
        let (headers, rows) = db
            .run_query(
                "SELECT hash, dmm_unit_size, dmm_unit_complexity, num_lines_added
                 FROM commits",
            )
            .unwrap();
        assert_eq!(
            headers,
            [
                "hash",
                "dmm_unit_size",
                "dmm_unit_complexity",
                "num_lines_added"
            ]
        );
        assert_eq!(rows[0][1], "0.5");
        assert_eq!(rows[0][2], "", "NULL renders as empty string");
        assert_eq!(rows[0][3], "1");
    }
}
