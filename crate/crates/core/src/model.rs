//! Domain types shared by every phase of a selection run: QoS values and the
//! service matrix, stakeholder requirements, repository descriptors and ranked
//! results.
//!
//! These are plain value objects. Apart from constructor checks they carry no
//! behaviour; [`validate_matrix`] is the diagnostic entry point for matrices
//! assembled by hand or read from external documents.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("attribute name must not be empty")]
    EmptyAttributeName,
    #[error(
        "requirement target for `{attribute}` must be a finite non-negative number, got {target}"
    )]
    InvalidTarget { attribute: String, target: f64 },
    #[error("requirement vector is empty")]
    EmptyRequirements,
    #[error("attribute `{0}` is required more than once")]
    DuplicateRequirement(String),
}

/// Name of a quality attribute. Matching is exact and case-sensitive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AttributeName(String);

impl AttributeName {
    pub fn new(name: impl Into<String>) -> Result<Self, ModelError> {
        let name = name.into();
        if name.is_empty() {
            return Err(ModelError::EmptyAttributeName);
        }
        Ok(Self(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for AttributeName {
    type Error = ModelError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl TryFrom<&str> for AttributeName {
    type Error = ModelError;

    fn try_from(value: &str) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<AttributeName> for String {
    fn from(value: AttributeName) -> Self {
        value.0
    }
}

impl fmt::Display for AttributeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(&self.0)
    }
}

impl std::borrow::Borrow<str> for AttributeName {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// A single QoS cell. `Undefined` is distinct from zero: a repository that
/// knows nothing about an attribute must not look like one reporting "0".
///
/// Serialized as a JSON number, or `null` for `Undefined`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum QualityValue {
    Defined(f64),
    #[default]
    Undefined,
}

impl QualityValue {
    pub fn value(self) -> Option<f64> {
        match self {
            Self::Defined(v) => Some(v),
            Self::Undefined => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, Self::Defined(_))
    }
}

impl From<Option<f64>> for QualityValue {
    fn from(value: Option<f64>) -> Self {
        value.map_or(Self::Undefined, Self::Defined)
    }
}

impl From<f64> for QualityValue {
    fn from(value: f64) -> Self {
        Self::Defined(value)
    }
}

impl Serialize for QualityValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.value().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for QualityValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Option::<f64>::deserialize(deserializer).map(Self::from)
    }
}

/// One candidate service: a row of the QoS matrix.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ServiceRecord {
    pub service_id: String,
    #[serde(default)]
    pub display_name: String,
    #[serde(default)]
    pub domain: String,
    #[serde(default)]
    pub values: BTreeMap<AttributeName, QualityValue>,
    /// Endpoint of the repository that supplied each value.
    #[serde(default)]
    pub provenance: BTreeMap<AttributeName, String>,
}

impl ServiceRecord {
    pub fn new(service_id: impl Into<String>) -> Self {
        Self {
            service_id: service_id.into(),
            ..Self::default()
        }
    }

    /// Value for `attribute`; absent keys read as `Undefined`.
    pub fn value(&self, attribute: &str) -> QualityValue {
        self.values.get(attribute).copied().unwrap_or_default()
    }
}

/// The k×n table of services against quality attributes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct QoSMatrix {
    pub columns: Vec<AttributeName>,
    pub rows: Vec<ServiceRecord>,
}

impl QoSMatrix {
    pub fn validate(&self) -> Vec<Violation> {
        validate_matrix(self)
    }

    /// Restricts the matrix to `attributes`, in that order. Attributes no row
    /// defines become all-`Undefined` columns.
    pub fn project(&self, attributes: &[AttributeName]) -> QoSMatrix {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut projected = row.clone();
                projected.values.retain(|k, _| attributes.contains(k));
                projected.provenance.retain(|k, _| attributes.contains(k));
                projected
            })
            .collect();
        QoSMatrix {
            columns: attributes.to_vec(),
            rows,
        }
    }
}

/// A broken matrix invariant, as reported by [`validate_matrix`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoColumns,
    DuplicateColumn(AttributeName),
    DuplicateServiceId(String),
    NegativeValue {
        service_id: String,
        attribute: AttributeName,
        value: f64,
    },
    NonFiniteValue {
        service_id: String,
        attribute: AttributeName,
    },
    UnknownColumn {
        service_id: String,
        attribute: AttributeName,
    },
    ProvenanceWithoutValue {
        service_id: String,
        attribute: AttributeName,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoColumns => write!(f, "matrix has no attribute columns"),
            Self::DuplicateColumn(a) => write!(f, "column `{a}` appears more than once"),
            Self::DuplicateServiceId(id) => write!(f, "service id `{id}` appears more than once"),
            Self::NegativeValue {
                service_id,
                attribute,
                value,
            } => write!(
                f,
                "service `{service_id}`, attribute `{attribute}`: negative value {value}"
            ),
            Self::NonFiniteValue {
                service_id,
                attribute,
            } => write!(
                f,
                "service `{service_id}`, attribute `{attribute}`: value is not finite"
            ),
            Self::UnknownColumn {
                service_id,
                attribute,
            } => write!(
                f,
                "service `{service_id}` has a value for `{attribute}`, which is not a column"
            ),
            Self::ProvenanceWithoutValue {
                service_id,
                attribute,
            } => write!(
                f,
                "service `{service_id}` records provenance for `{attribute}` but has no value"
            ),
        }
    }
}

/// Checks every matrix invariant. An empty list means the matrix is well formed.
pub fn validate_matrix(matrix: &QoSMatrix) -> Vec<Violation> {
    let mut violations = Vec::new();
    if matrix.columns.is_empty() {
        violations.push(Violation::NoColumns);
    }
    let mut columns = BTreeSet::new();
    for column in &matrix.columns {
        if !columns.insert(column) {
            violations.push(Violation::DuplicateColumn(column.clone()));
        }
    }

    let mut ids = BTreeSet::new();
    for row in &matrix.rows {
        if !ids.insert(row.service_id.as_str()) {
            violations.push(Violation::DuplicateServiceId(row.service_id.clone()));
        }
        for (attribute, cell) in &row.values {
            if !columns.contains(attribute) {
                violations.push(Violation::UnknownColumn {
                    service_id: row.service_id.clone(),
                    attribute: attribute.clone(),
                });
            }
            if let QualityValue::Defined(v) = *cell {
                if !v.is_finite() {
                    violations.push(Violation::NonFiniteValue {
                        service_id: row.service_id.clone(),
                        attribute: attribute.clone(),
                    });
                } else if v < 0.0 {
                    violations.push(Violation::NegativeValue {
                        service_id: row.service_id.clone(),
                        attribute: attribute.clone(),
                        value: v,
                    });
                }
            }
        }
        for attribute in row.provenance.keys() {
            if !row.values.contains_key(attribute) {
                violations.push(Violation::ProvenanceWithoutValue {
                    service_id: row.service_id.clone(),
                    attribute: attribute.clone(),
                });
            }
        }
    }
    violations
}

/// A stakeholder non-functional requirement over one attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Requirement {
    pub attribute: AttributeName,
    pub target: f64,
    /// `true` when higher values are better.
    pub maximize: bool,
    pub mandatory: bool,
}

impl Requirement {
    pub fn new(
        attribute: impl TryInto<AttributeName, Error = ModelError>,
        target: f64,
        maximize: bool,
        mandatory: bool,
    ) -> Result<Self, ModelError> {
        let attribute = attribute.try_into()?;
        if !target.is_finite() || target < 0.0 {
            return Err(ModelError::InvalidTarget {
                attribute: attribute.0,
                target,
            });
        }
        Ok(Self {
            attribute,
            target,
            maximize,
            mandatory,
        })
    }

    /// Whether a raw value meets the target in the requirement's direction.
    pub fn is_met_by(&self, value: QualityValue) -> bool {
        match value {
            QualityValue::Defined(v) if self.maximize => v >= self.target,
            QualityValue::Defined(v) => v <= self.target,
            QualityValue::Undefined => false,
        }
    }
}

/// Ordered, non-empty list of requirements over distinct attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Requirement>", into = "Vec<Requirement>")]
pub struct RequirementVector(Vec<Requirement>);

impl RequirementVector {
    pub fn new(requirements: Vec<Requirement>) -> Result<Self, ModelError> {
        if requirements.is_empty() {
            return Err(ModelError::EmptyRequirements);
        }
        let mut seen = BTreeSet::new();
        for r in &requirements {
            if !r.target.is_finite() || r.target < 0.0 {
                return Err(ModelError::InvalidTarget {
                    attribute: r.attribute.to_string(),
                    target: r.target,
                });
            }
            if !seen.insert(&r.attribute) {
                return Err(ModelError::DuplicateRequirement(r.attribute.to_string()));
            }
        }
        Ok(Self(requirements))
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Requirement> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn attributes(&self) -> Vec<AttributeName> {
        self.0.iter().map(|r| r.attribute.clone()).collect()
    }

    pub fn as_slice(&self) -> &[Requirement] {
        &self.0
    }
}

impl TryFrom<Vec<Requirement>> for RequirementVector {
    type Error = ModelError;

    fn try_from(value: Vec<Requirement>) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<RequirementVector> for Vec<Requirement> {
    fn from(value: RequirementVector) -> Self {
        value.0
    }
}

impl<'a> IntoIterator for &'a RequirementVector {
    type Item = &'a Requirement;
    type IntoIter = std::slice::Iter<'a, Requirement>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RepositoryKind {
    /// Static QoS declared by providers.
    DataBank,
    /// Dynamic QoS measured by probing live endpoints.
    Monitor,
}

/// A QoS source. The endpoint is its identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RepositoryDescriptor {
    #[serde(default)]
    pub name: String,
    pub endpoint: String,
    pub kind: RepositoryKind,
    #[serde(default)]
    pub description: String,
}

impl RepositoryDescriptor {
    pub fn new(name: impl Into<String>, endpoint: impl Into<String>, kind: RepositoryKind) -> Self {
        Self {
            name: name.into(),
            endpoint: endpoint.into(),
            kind,
            description: String::new(),
        }
    }

    pub fn data_bank(name: impl Into<String>, endpoint: impl Into<String>) -> Self {
        Self::new(name, endpoint, RepositoryKind::DataBank)
    }

    pub fn monitor(name: impl Into<String>, endpoint: impl Into<String>) -> Self {
        Self::new(name, endpoint, RepositoryKind::Monitor)
    }
}

/// Whether a ranking score improves downwards (distances) or upwards
/// (similarities).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    LowerIsBetter,
    HigherIsBetter,
}

impl Polarity {
    /// Orders two scores best-first.
    pub fn compare(self, a: f64, b: f64) -> std::cmp::Ordering {
        match self {
            Self::LowerIsBetter => a.total_cmp(&b),
            Self::HigherIsBetter => b.total_cmp(&a),
        }
    }
}

/// One line of a final selection result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RankedEntry {
    pub service_id: String,
    pub display_name: String,
    /// `None` when the service could not be scored (see diagnostics).
    pub score: Option<f64>,
    pub polarity: Polarity,
    /// Position in the score-only ordering, before mandatory requirements
    /// are considered.
    pub score_rank: Option<usize>,
    pub mandatory_fulfilled: usize,
    pub mandatory_total: usize,
    pub rank: usize,
}
