//! Projection of raw QoS columns and requirement targets into `[0, 1]`.
//!
//! Every column is normalized against a pool made of the defined service
//! values *and* the requirement target, so a target above every offered value
//! still lands inside the unit interval (it becomes the column maximum).
//! Undefined cells pass through untouched and do not contribute to the pool.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::model::{AttributeName, QoSMatrix, QualityValue, Requirement, RequirementVector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormalizeError {
    #[error("negative value {value} in column `{attribute}`")]
    NegativeValue { attribute: String, value: f64 },
    #[error("non-finite value in column `{attribute}`")]
    NonFiniteValue { attribute: String },
    #[error("requirement attribute `{0}` is not a column of the matrix")]
    MissingColumn(AttributeName),
    #[error("nothing to normalize")]
    NothingToNormalize,
}

/// The normalization portfolio. Integer ids are stable and accepted wherever
/// an algorithm is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NormalizerId {
    /// `v / max`
    MaxScale = 1,
    /// `v / Σ`
    SumScale = 2,
    /// `(v - min) / (max - min)`
    MinMaxScale = 3,
    /// `v / sqrt(Σ v²)`
    EuclideanScale = 4,
}

impl NormalizerId {
    pub const ALL: [NormalizerId; 4] = [
        Self::MaxScale,
        Self::SumScale,
        Self::MinMaxScale,
        Self::EuclideanScale,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|n| n.id() == id)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::MaxScale => "max",
            Self::SumScale => "sum",
            Self::MinMaxScale => "min-max",
            Self::EuclideanScale => "euclidean",
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            Self::MaxScale => "a_i / max(a)",
            Self::SumScale => "a_i / sum(a)",
            Self::MinMaxScale => "(a_i - min(a)) / (max(a) - min(a))",
            Self::EuclideanScale => "a_i / sqrt(sum(a^2))",
        }
    }
}

impl fmt::Display for NormalizerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown normalizer `{0}` (expected 1-4 or max, sum, min-max, euclidean)")]
pub struct UnknownNormalizer(pub String);

impl FromStr for NormalizerId {
    type Err = UnknownNormalizer;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(id) = s.trim().parse::<u8>() {
            return Self::from_id(id).ok_or_else(|| UnknownNormalizer(s.to_owned()));
        }
        match crate::canonical_name(s).as_str() {
            "max" | "maxscale" => Ok(Self::MaxScale),
            "sum" | "sumscale" => Ok(Self::SumScale),
            "minmax" | "minmaxscale" => Ok(Self::MinMaxScale),
            "euclidean" | "euclideanscale" | "norm" => Ok(Self::EuclideanScale),
            _ => Err(UnknownNormalizer(s.to_owned())),
        }
    }
}

impl Serialize for NormalizerId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.id())
    }
}

impl<'de> Deserialize<'de> for NormalizerId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = crate::IdOrName::deserialize(deserializer)?;
        raw.to_string().parse().map_err(serde::de::Error::custom)
    }
}

/// A normalized column together with its normalized requirement target.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedColumn {
    pub values: Vec<QualityValue>,
    pub target: f64,
}

#[derive(Debug, Clone, Copy)]
struct PoolStats {
    max: f64,
    min: f64,
    sum: f64,
    sum_sq: f64,
}

impl PoolStats {
    fn of(pool: impl Iterator<Item = f64>) -> Self {
        pool.fold(
            PoolStats {
                max: f64::NEG_INFINITY,
                min: f64::INFINITY,
                sum: 0.0,
                sum_sq: 0.0,
            },
            |acc, v| PoolStats {
                max: acc.max.max(v),
                min: acc.min.min(v),
                sum: acc.sum + v,
                sum_sq: acc.sum_sq + v * v,
            },
        )
    }

    fn apply(&self, alg: NormalizerId, v: f64) -> f64 {
        let scaled = |denominator: f64| {
            // all-zero pool: nothing to discriminate on
            if denominator == 0.0 {
                0.0
            } else {
                v / denominator
            }
        };
        match alg {
            NormalizerId::MaxScale => scaled(self.max),
            NormalizerId::SumScale => scaled(self.sum),
            NormalizerId::EuclideanScale => scaled(self.sum_sq.sqrt()),
            NormalizerId::MinMaxScale => {
                let range = self.max - self.min;
                // constant column contributes nothing to any distance
                if range == 0.0 {
                    1.0
                } else {
                    (v - self.min) / range
                }
            }
        }
    }
}

fn check_cell(attribute: &str, v: f64) -> Result<(), NormalizeError> {
    if !v.is_finite() {
        Err(NormalizeError::NonFiniteValue {
            attribute: attribute.to_owned(),
        })
    } else if v < 0.0 {
        Err(NormalizeError::NegativeValue {
            attribute: attribute.to_owned(),
            value: v,
        })
    } else {
        Ok(())
    }
}

/// Normalizes one attribute column and the matching requirement target.
pub fn normalize_column(
    values: &[QualityValue],
    target: f64,
    alg: NormalizerId,
) -> Result<NormalizedColumn, NormalizeError> {
    normalize_named_column("", values, target, alg)
}

fn normalize_named_column(
    attribute: &str,
    values: &[QualityValue],
    target: f64,
    alg: NormalizerId,
) -> Result<NormalizedColumn, NormalizeError> {
    check_cell(attribute, target)?;
    for v in values.iter().filter_map(|v| v.value()) {
        check_cell(attribute, v)?;
    }
    let pool = values
        .iter()
        .filter_map(|v| v.value())
        .chain(std::iter::once(target));
    let stats = PoolStats::of(pool);
    Ok(NormalizedColumn {
        values: values
            .iter()
            .map(|v| match *v {
                QualityValue::Defined(x) => QualityValue::Defined(stats.apply(alg, x)),
                QualityValue::Undefined => QualityValue::Undefined,
            })
            .collect(),
        target: stats.apply(alg, target),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NormalizedRow {
    pub service_id: String,
    /// One value per column, in column order.
    pub values: Vec<QualityValue>,
}

/// Normalized QoS matrix; columns follow the requirement order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedMatrix {
    pub columns: Vec<AttributeName>,
    pub rows: Vec<NormalizedRow>,
}

/// Requirements whose targets have been normalized alongside their column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NormalizedRequirements(pub Vec<Requirement>);

impl NormalizedRequirements {
    pub fn targets(&self) -> Vec<f64> {
        self.0.iter().map(|r| r.target).collect()
    }
}

/// Normalizes every requirement attribute's column of `matrix`.
///
/// Matrix columns without a requirement are dropped. Every requirement
/// attribute must be a matrix column.
pub fn normalize_data(
    matrix: &QoSMatrix,
    requirements: &RequirementVector,
    alg: NormalizerId,
) -> Result<(NormalizedMatrix, NormalizedRequirements), NormalizeError> {
    if requirements.is_empty() {
        return Err(NormalizeError::NothingToNormalize);
    }
    let mut columns = Vec::with_capacity(requirements.len());
    let mut targets = Vec::with_capacity(requirements.len());
    for requirement in requirements {
        let attribute = &requirement.attribute;
        if !matrix.columns.contains(attribute) {
            return Err(NormalizeError::MissingColumn(attribute.clone()));
        }
        let raw: Vec<QualityValue> = matrix
            .rows
            .iter()
            .map(|row| row.value(attribute.as_str()))
            .collect();
        let column = normalize_named_column(attribute.as_str(), &raw, requirement.target, alg)?;
        targets.push(Requirement {
            target: column.target,
            ..requirement.clone()
        });
        columns.push(column.values);
    }

    let rows = matrix
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| NormalizedRow {
            service_id: row.service_id.clone(),
            values: columns.iter().map(|c| c[i]).collect(),
        })
        .collect();
    Ok((
        NormalizedMatrix {
            columns: requirements.attributes(),
            rows,
        },
        NormalizedRequirements(targets),
    ))
}
