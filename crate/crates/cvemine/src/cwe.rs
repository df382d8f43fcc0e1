//! CWE weakness catalog and normalization of the NVD's per-CVE labels.
//!
//! A vendored snapshot of the MITRE CWE list (CSV export format) ships with
//! the tool so the pipeline runs offline; the path is overridable through
//! configuration. The NVD's two pseudo-entries, `NVD-CWE-noinfo` and
//! `NVD-CWE-Other`, are always present regardless of the snapshot contents.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use log::warn;

/// Label assigned when a CVE carries no usable weakness information.
pub const NOINFO: &str = "NVD-CWE-noinfo";
/// Label the NVD uses for weaknesses outside its working subset of the CWE.
pub const OTHER: &str = "NVD-CWE-Other";

const BUILTIN_SNAPSHOT: &str = include_str!("../data/cwe_snapshot.csv");

/// One weakness entry (or NVD pseudo-entry).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CweEntry {
    /// "CWE-<num>", "NVD-CWE-noinfo", or "NVD-CWE-Other".
    pub cwe_id: String,
    pub name: String,
    pub description: String,
    pub extended_description: Option<String>,
    pub url: Option<String>,
    /// True when the snapshot marks the entry as a category rather than a
    /// concrete weakness. The NVD blurs this distinction, so it is advisory.
    pub is_category: bool,
}

/// Link between a CVE and one of its normalized weakness labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CweAssignment {
    pub cve_id: String,
    pub cwe_id: String,
}

/// Error covering an unreadable or structurally invalid snapshot document.
#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("cannot read CWE snapshot: {0}")]
    Io(#[from] std::io::Error),
    #[error("CWE snapshot is malformed: {0}")]
    Malformed(String),
}

/// In-memory CWE catalog, keyed by cwe_id.
#[derive(Debug, Clone)]
pub struct CweCatalog {
    entries: BTreeMap<String, CweEntry>,
}

impl CweCatalog {
    /// Load the catalog from `source`, falling back to the built-in snapshot
    /// (with a warning) when the document is missing or malformed. `None`
    /// loads the built-in snapshot directly.
    pub fn load(source: Option<&Path>) -> (Self, Vec<String>) {
        let mut warnings = Vec::new();
        let catalog = match source {
            None => Self::builtin(),
            Some(path) => match fs::read_to_string(path)
                .map_err(CatalogError::from)
                .and_then(|text| Self::from_csv(&text))
            {
                Ok(catalog) => catalog,
                Err(e) => {
                    let msg = format!(
                        "falling back to built-in CWE snapshot: {} ({})",
                        e,
                        path.display()
                    );
                    warn!("{msg}");
                    warnings.push(msg);
                    Self::builtin()
                }
            },
        };
        (catalog, warnings)
    }

    /// Catalog from the vendored snapshot. The snapshot is compiled in and
    /// validated by tests, so parsing it cannot fail at run time.
    pub fn builtin() -> Self {
        Self::from_csv(BUILTIN_SNAPSHOT).expect("built-in CWE snapshot parses")
    }

    /// Catalog containing only the two NVD pseudo-entries.
    pub fn empty() -> Self {
        let mut catalog = Self {
            entries: BTreeMap::new(),
        };
        catalog.insert_pseudo_entries();
        catalog
    }

    /// Parse a MITRE CSV export. Required columns: `CWE-ID`, `Name`; the
    /// abstraction, description, and extended-description columns are
    /// optional but honored when present.
    pub fn from_csv(text: &str) -> Result<Self, CatalogError> {
        let mut reader = csv::ReaderBuilder::new()
            .flexible(true)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| CatalogError::Malformed(e.to_string()))?
            .clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim().eq_ignore_ascii_case(name))
        };
        let id_col =
            col("CWE-ID").ok_or_else(|| CatalogError::Malformed("missing CWE-ID column".into()))?;
        let name_col =
            col("Name").ok_or_else(|| CatalogError::Malformed("missing Name column".into()))?;
        let abstraction_col = col("Weakness Abstraction");
        let description_col = col("Description");
        let extended_col = col("Extended Description");

        let mut entries = BTreeMap::new();
        for (idx, record) in reader.records().enumerate() {
            let record =
                record.map_err(|e| CatalogError::Malformed(format!("row {}: {}", idx + 2, e)))?;
            let raw_id = record.get(id_col).unwrap_or("").trim();
            if raw_id.is_empty() {
                continue;
            }
            let cwe_id = if raw_id.starts_with("CWE-") {
                raw_id.to_string()
            } else if raw_id.chars().all(|c| c.is_ascii_digit()) {
                format!("CWE-{raw_id}")
            } else {
                return Err(CatalogError::Malformed(format!(
                    "row {}: invalid CWE id {raw_id:?}",
                    idx + 2
                )));
            };
            let get = |col: Option<usize>| {
                col.and_then(|c| record.get(c))
                    .map(str::trim)
                    .unwrap_or("")
                    .to_string()
            };
            let extended = get(extended_col);
            let number = cwe_id.trim_start_matches("CWE-").to_string();
            entries.insert(
                cwe_id.clone(),
                CweEntry {
                    url: Some(format!(
                        "https://cwe.mitre.org/data/definitions/{number}.html"
                    )),
                    cwe_id,
                    name: record.get(name_col).unwrap_or("").trim().to_string(),
                    description: get(description_col),
                    extended_description: (!extended.is_empty()).then_some(extended),
                    is_category: get(abstraction_col).eq_ignore_ascii_case("Category"),
                },
            );
        }
        let mut catalog = Self { entries };
        catalog.insert_pseudo_entries();
        Ok(catalog)
    }

    fn insert_pseudo_entries(&mut self) {
        for (id, name, description) in [
            (
                NOINFO,
                "Insufficient Information",
                "There is insufficient information about the issue to classify it; \
                 details are unknown or unspecified.",
            ),
            (
                OTHER,
                "Other",
                "NVD is only using a subset of CWE for mapping instead of the entire \
                 CWE, and the weakness type is not covered by that subset.",
            ),
        ] {
            self.entries.entry(id.to_string()).or_insert(CweEntry {
                cwe_id: id.to_string(),
                name: name.to_string(),
                description: description.to_string(),
                extended_description: None,
                url: None,
                is_category: false,
            });
        }
    }

    /// Guarantee an entry exists for every id in `ids`; unknown ids receive a
    /// stub entry with an empty description. Returns one warning per stub.
    pub fn ensure_ids<'a>(&mut self, ids: impl IntoIterator<Item = &'a str>) -> Vec<String> {
        let mut warnings = Vec::new();
        for id in ids {
            if !self.entries.contains_key(id) {
                let msg = format!("CWE id {id} not in catalog snapshot; stub entry created");
                warn!("{msg}");
                warnings.push(msg);
                let number = id.trim_start_matches("CWE-").to_string();
                let url = id
                    .starts_with("CWE-")
                    .then(|| format!("https://cwe.mitre.org/data/definitions/{number}.html"));
                self.entries.insert(
                    id.to_string(),
                    CweEntry {
                        cwe_id: id.to_string(),
                        name: String::new(),
                        description: String::new(),
                        extended_description: None,
                        url,
                        is_category: false,
                    },
                );
            }
        }
        warnings
    }

    pub fn get(&self, cwe_id: &str) -> Option<&CweEntry> {
        self.entries.get(cwe_id)
    }

    pub fn contains(&self, cwe_id: &str) -> bool {
        self.entries.contains_key(cwe_id)
    }

    /// Entries in deterministic (lexicographic id) order.
    pub fn entries(&self) -> impl Iterator<Item = &CweEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl fmt::Display for CweCatalog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CweCatalog({} entries)", self.entries.len())
    }
}

/// Normalize one raw problemtype label to a catalog id.
///
/// "CWE-<n>" passes through unchanged; "unknown" (case-insensitive), empty,
/// and otherwise unclassifiable labels map to `NVD-CWE-noinfo`; the two NVD
/// pseudo-labels are canonicalized. Idempotent by construction.
pub fn normalize_label(raw: &str) -> String {
    let label = raw.trim();
    if label.is_empty() || label.eq_ignore_ascii_case("unknown") {
        return NOINFO.to_string();
    }
    if label.eq_ignore_ascii_case(NOINFO) {
        return NOINFO.to_string();
    }
    if label.eq_ignore_ascii_case(OTHER) {
        return OTHER.to_string();
    }
    if let Some(rest) = label
        .strip_prefix("CWE-")
        .or_else(|| label.strip_prefix("cwe-"))
        .or_else(|| label.strip_prefix("Cwe-"))
    {
        if !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) {
            return format!("CWE-{rest}");
        }
    }
    warn!("unclassifiable CWE label {label:?} mapped to {NOINFO}");
    NOINFO.to_string()
}

/// Produce one assignment per distinct normalized label; a CVE with no labels
/// yields exactly one assignment to `NVD-CWE-noinfo`.
pub fn assign(cve_id: &str, labels: &[String]) -> Vec<CweAssignment> {
    let mut seen = Vec::new();
    for raw in labels {
        let id = normalize_label(raw);
        if !seen.contains(&id) {
            seen.push(id);
        }
    }
    if seen.is_empty() {
        seen.push(NOINFO.to_string());
    }
    seen.into_iter()
        .map(|cwe_id| CweAssignment {
            cve_id: cve_id.to_string(),
            cwe_id,
        })
        .collect()
}
