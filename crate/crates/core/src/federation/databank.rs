//! The DataBank document: providers' declared QoS, grouped by domain.
//!
//! ```json
//! {"domains": {"weather": [
//!     {"serviceId": "ws1", "displayName": "Airport", "qos": {"cost": 3.0}}
//! ]}}
//! ```
//!
//! Unknown fields are ignored. Values must be finite and non-negative, and a
//! service id may appear only once per domain.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{AttributeName, QualityValue};

/// One service as exchanged between repositories and the federation layer.
/// Monitor endpoints answer with a JSON array of these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ServiceEntry {
    pub service_id: String,
    #[serde(default)]
    pub display_name: String,
    #[serde(default)]
    pub qos: BTreeMap<AttributeName, QualityValue>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DataBankDocument {
    pub domains: BTreeMap<String, Vec<ServiceEntry>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataBankViolation {
    EmptyServiceId {
        domain: String,
    },
    DuplicateServiceId {
        domain: String,
        service_id: String,
    },
    InvalidValue {
        domain: String,
        service_id: String,
        attribute: AttributeName,
        value: f64,
    },
}

impl fmt::Display for DataBankViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyServiceId { domain } => {
                write!(f, "domain `{domain}`: entry with empty serviceId")
            }
            Self::DuplicateServiceId { domain, service_id } => {
                write!(f, "domain `{domain}`: duplicate serviceId `{service_id}`")
            }
            Self::InvalidValue {
                domain,
                service_id,
                attribute,
                value,
            } => write!(
                f,
                "domain `{domain}`, service `{service_id}`, attribute `{attribute}`: \
                 value {value} is not a finite non-negative number"
            ),
        }
    }
}

impl DataBankDocument {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> std::io::Result<Result<Self, serde_json::Error>> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::from_json(&text))
    }

    pub fn validate(&self) -> Vec<DataBankViolation> {
        let mut violations = Vec::new();
        for (domain, entries) in &self.domains {
            violations.extend(validate_entries(domain, entries));
        }
        violations
    }

    /// Entries for `domain`; an unknown domain has none.
    pub fn entries(&self, domain: &str) -> &[ServiceEntry] {
        self.domains.get(domain).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Checks a list of entries the same way a DataBank domain is checked.
pub fn validate_entries(domain: &str, entries: &[ServiceEntry]) -> Vec<DataBankViolation> {
    let mut violations = Vec::new();
    let mut seen = BTreeSet::new();
    for entry in entries {
        if entry.service_id.is_empty() {
            violations.push(DataBankViolation::EmptyServiceId {
                domain: domain.to_owned(),
            });
        } else if !seen.insert(entry.service_id.as_str()) {
            violations.push(DataBankViolation::DuplicateServiceId {
                domain: domain.to_owned(),
                service_id: entry.service_id.clone(),
            });
        }
        for (attribute, value) in &entry.qos {
            if let QualityValue::Defined(v) = *value {
                if !v.is_finite() || v < 0.0 {
                    violations.push(DataBankViolation::InvalidValue {
                        domain: domain.to_owned(),
                        service_id: entry.service_id.clone(),
                        attribute: attribute.clone(),
                        value: v,
                    });
                }
            }
        }
    }
    violations
}
