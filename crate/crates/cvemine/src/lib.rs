//! Batch pipeline that mines CVE records whose fixes reference commits on
//! public code forges, extracts the vulnerable and patched code at commit,
//! file, and method granularity, enriches it with code and security metrics,
//! and persists everything to a SQLite database for analysis.
//!
//! The crate is organized along the pipeline stages:
//!
//! * [`feed`] — download/cache/parse the NVD JSON vulnerability feeds
//! * [`cwe`] — CWE catalog and label normalization
//! * [`refs`] — reference-URL to forge-commit resolution
//! * [`forge`] — forge REST clients, rate limiting, metadata fetch
//! * [`gitrepo`] / [`extract`] — clone repositories, extract change records
//! * [`diff`] — deterministic unified-diff generation, parsing, re-application
//! * [`lang`] / [`lexer`] / [`methods`] / [`metrics`] — language detection,
//!   tokenization, method-span discovery, NLOC/CC/token/DMM metrics
//! * [`db`] — relational schema, upserts, SQL dump export/import, queries
//! * [`analytics`] — summary statistics reproduced as CSV outputs
//! * [`config`] / [`pipeline`] — configuration and end-to-end orchestration

pub mod analytics;
pub mod config;
pub mod cvss;
pub mod cwe;
pub mod db;
pub mod diff;
pub mod extract;
pub mod feed;
pub mod forge;
pub mod gitrepo;
pub mod lang;
pub mod lexer;
pub mod methods;
pub mod metrics;
pub mod pipeline;
pub mod refs;
