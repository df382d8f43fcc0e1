//! CVSS v2/v3 metric structures and vector-string round-tripping.
//!
//! The NVD publishes both a compact vector string (`AV:N/AC:L/...`) and the
//! same attributes again as discrete JSON fields. The vector string is taken
//! as authoritative and parsed into typed sub-attributes; the discrete fields
//! are used as a cross-check by the feed parser.

use thiserror::Error;

/// Error raised when a CVSS vector string cannot be parsed.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid CVSS vector {vector:?}: {reason}")]
pub struct VectorError {
    pub vector: String,
    pub reason: String,
}

fn err(vector: &str, reason: impl Into<String>) -> VectorError {
    VectorError {
        vector: vector.to_string(),
        reason: reason.into(),
    }
}

macro_rules! vector_enum {
    ($name:ident { $($variant:ident => $letter:literal, $word:literal;)+ }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub enum $name {
            $($variant,)+
        }

        impl $name {
            /// Single-letter code used inside vector strings.
            pub fn letter(self) -> &'static str {
                match self {
                    $(Self::$variant => $letter,)+
                }
            }

            /// Full uppercase word used by the NVD JSON discrete fields.
            pub fn word(self) -> &'static str {
                match self {
                    $(Self::$variant => $word,)+
                }
            }

            pub fn from_letter(s: &str) -> Option<Self> {
                match s {
                    $($letter => Some(Self::$variant),)+
                    _ => None,
                }
            }

            pub fn from_word(s: &str) -> Option<Self> {
                $(if s.eq_ignore_ascii_case($word) {
                    return Some(Self::$variant);
                })+
                None
            }
        }
    };
}

vector_enum!(AccessVector {
    Network => "N", "NETWORK";
    AdjacentNetwork => "A", "ADJACENT_NETWORK";
    Local => "L", "LOCAL";
});

vector_enum!(AccessComplexity {
    High => "H", "HIGH";
    Medium => "M", "MEDIUM";
    Low => "L", "LOW";
});

vector_enum!(Authentication {
    Multiple => "M", "MULTIPLE";
    Single => "S", "SINGLE";
    None => "N", "NONE";
});

vector_enum!(ImpactV2 {
    None => "N", "NONE";
    Partial => "P", "PARTIAL";
    Complete => "C", "COMPLETE";
});

vector_enum!(AttackVector {
    Network => "N", "NETWORK";
    Adjacent => "A", "ADJACENT_NETWORK";
    Local => "L", "LOCAL";
    Physical => "P", "PHYSICAL";
});

vector_enum!(AttackComplexity {
    Low => "L", "LOW";
    High => "H", "HIGH";
});

vector_enum!(PrivilegesRequired {
    None => "N", "NONE";
    Low => "L", "LOW";
    High => "H", "HIGH";
});

vector_enum!(UserInteraction {
    None => "N", "NONE";
    Required => "R", "REQUIRED";
});

vector_enum!(Scope {
    Unchanged => "U", "UNCHANGED";
    Changed => "C", "CHANGED";
});

vector_enum!(ImpactV3 {
    None => "N", "NONE";
    Low => "L", "LOW";
    High => "H", "HIGH";
});

/// Qualitative severity rating (v2 uses LOW/MEDIUM/HIGH, v3 adds NONE/CRITICAL).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    None,
    Low,
    Medium,
    High,
    Critical,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "NONE",
            Self::Low => "LOW",
            Self::Medium => "MEDIUM",
            Self::High => "HIGH",
            Self::Critical => "CRITICAL",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let norm = s.trim();
        [
            Self::None,
            Self::Low,
            Self::Medium,
            Self::High,
            Self::Critical,
        ]
        .into_iter()
        .find(|sev| norm.eq_ignore_ascii_case(sev.as_str()))
    }
}

/// CVSS version 2 base metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct Cvss2Metrics {
    pub base_score: f64,
    pub vector_string: String,
    pub access_vector: AccessVector,
    pub access_complexity: AccessComplexity,
    pub authentication: Authentication,
    pub confidentiality_impact: ImpactV2,
    pub integrity_impact: ImpactV2,
    pub availability_impact: ImpactV2,
}

impl Cvss2Metrics {
    /// Parse a v2 base vector such as `AV:N/AC:L/Au:N/C:P/I:P/A:P`.
    pub fn parse_vector(vector: &str, base_score: f64) -> Result<Self, VectorError> {
        let mut av = None;
        let mut ac = None;
        let mut au = None;
        let mut c = None;
        let mut i = None;
        let mut a = None;
        // NVD sometimes wraps v2 vectors in parentheses.
        let trimmed = vector.trim_start_matches('(').trim_end_matches(')');
        for part in trimmed.split('/') {
            let (key, value) = part
                .split_once(':')
                .ok_or_else(|| err(vector, format!("component {part:?} is not key:value")))?;
            let dup = match key {
                "AV" => set(&mut av, AccessVector::from_letter(value)),
                "AC" => set(&mut ac, AccessComplexity::from_letter(value)),
                "Au" => set(&mut au, Authentication::from_letter(value)),
                "C" => set(&mut c, ImpactV2::from_letter(value)),
                "I" => set(&mut i, ImpactV2::from_letter(value)),
                "A" => set(&mut a, ImpactV2::from_letter(value)),
                _ => return Err(err(vector, format!("unknown component {key:?}"))),
            };
            match dup {
                SetOutcome::Ok => {}
                SetOutcome::BadValue => {
                    return Err(err(vector, format!("bad value {value:?} for {key}")))
                }
                SetOutcome::Duplicate => {
                    return Err(err(vector, format!("duplicate component {key}")))
                }
            }
        }
        let metrics = Self {
            base_score,
            vector_string: trimmed.to_string(),
            access_vector: req(av, vector, "AV")?,
            access_complexity: req(ac, vector, "AC")?,
            authentication: req(au, vector, "Au")?,
            confidentiality_impact: req(c, vector, "C")?,
            integrity_impact: req(i, vector, "I")?,
            availability_impact: req(a, vector, "A")?,
        };
        Ok(metrics)
    }

    /// Reconstruct the canonical vector string from the enum sub-attributes.
    pub fn format_vector(&self) -> String {
        format!(
            "AV:{}/AC:{}/Au:{}/C:{}/I:{}/A:{}",
            self.access_vector.letter(),
            self.access_complexity.letter(),
            self.authentication.letter(),
            self.confidentiality_impact.letter(),
            self.integrity_impact.letter(),
            self.availability_impact.letter(),
        )
    }
}

/// CVSS version 3.0/3.1 base metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct Cvss3Metrics {
    /// "3.0" or "3.1", from the vector prefix.
    pub version: String,
    pub base_score: f64,
    pub base_severity: Option<Severity>,
    pub vector_string: String,
    pub attack_vector: AttackVector,
    pub attack_complexity: AttackComplexity,
    pub privileges_required: PrivilegesRequired,
    pub user_interaction: UserInteraction,
    pub scope: Scope,
    pub confidentiality_impact: ImpactV3,
    pub integrity_impact: ImpactV3,
    pub availability_impact: ImpactV3,
}

impl Cvss3Metrics {
    /// Parse a v3 base vector such as
    /// `CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H`.
    pub fn parse_vector(
        vector: &str,
        base_score: f64,
        base_severity: Option<Severity>,
    ) -> Result<Self, VectorError> {
        let mut parts = vector.split('/');
        let prefix = parts.next().unwrap_or_default();
        let version = match prefix {
            "CVSS:3.0" => "3.0",
            "CVSS:3.1" => "3.1",
            _ => return Err(err(vector, format!("unsupported prefix {prefix:?}"))),
        };
        let mut av = None;
        let mut ac = None;
        let mut pr = None;
        let mut ui = None;
        let mut s = None;
        let mut c = None;
        let mut i = None;
        let mut a = None;
        for part in parts {
            let (key, value) = part
                .split_once(':')
                .ok_or_else(|| err(vector, format!("component {part:?} is not key:value")))?;
            let outcome = match key {
                "AV" => set(&mut av, AttackVector::from_letter(value)),
                "AC" => set(&mut ac, AttackComplexity::from_letter(value)),
                "PR" => set(&mut pr, PrivilegesRequired::from_letter(value)),
                "UI" => set(&mut ui, UserInteraction::from_letter(value)),
                "S" => set(&mut s, Scope::from_letter(value)),
                "C" => set(&mut c, ImpactV3::from_letter(value)),
                "I" => set(&mut i, ImpactV3::from_letter(value)),
                "A" => set(&mut a, ImpactV3::from_letter(value)),
                _ => return Err(err(vector, format!("unknown component {key:?}"))),
            };
            match outcome {
                SetOutcome::Ok => {}
                SetOutcome::BadValue => {
                    return Err(err(vector, format!("bad value {value:?} for {key}")))
                }
                SetOutcome::Duplicate => {
                    return Err(err(vector, format!("duplicate component {key}")))
                }
            }
        }
        Ok(Self {
            version: version.to_string(),
            base_score,
            base_severity,
            vector_string: vector.to_string(),
            attack_vector: req(av, vector, "AV")?,
            attack_complexity: req(ac, vector, "AC")?,
            privileges_required: req(pr, vector, "PR")?,
            user_interaction: req(ui, vector, "UI")?,
            scope: req(s, vector, "S")?,
            confidentiality_impact: req(c, vector, "C")?,
            integrity_impact: req(i, vector, "I")?,
            availability_impact: req(a, vector, "A")?,
        })
    }

    /// Reconstruct the canonical vector string from the enum sub-attributes.
    pub fn format_vector(&self) -> String {
        format!(
            "CVSS:{}/AV:{}/AC:{}/PR:{}/UI:{}/S:{}/C:{}/I:{}/A:{}",
            self.version,
            self.attack_vector.letter(),
            self.attack_complexity.letter(),
            self.privileges_required.letter(),
            self.user_interaction.letter(),
            self.scope.letter(),
            self.confidentiality_impact.letter(),
            self.integrity_impact.letter(),
            self.availability_impact.letter(),
        )
    }
}

enum SetOutcome {
    Ok,
    BadValue,
    Duplicate,
}

fn set<T>(slot: &mut Option<T>, value: Option<T>) -> SetOutcome {
    match (slot.is_some(), value) {
        (true, _) => SetOutcome::Duplicate,
        (false, Some(v)) => {
            *slot = Some(v);
            SetOutcome::Ok
        }
        (false, None) => SetOutcome::BadValue,
    }
}

fn req<T>(slot: Option<T>, vector: &str, key: &str) -> Result<T, VectorError> {
    slot.ok_or_else(|| err(vector, format!("missing component {key}")))
}
