//! Vector-space scoring of services against the normalized requirement vector.
//!
//! Six measures are offered. The similarity coefficients use the plain-sum
//! forms (`Σa + Σb` in the Jaccard and Dice denominators, `min(Σa, Σb)` for
//! Overlap), not the squared-norm variants found in some textbooks.
//!
//! Requirement directions (minimize/maximize) play no part here; they only
//! matter when mandatory requirements are evaluated afterwards.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::model::{Polarity, QualityValue};
use crate::normalize::{NormalizedMatrix, NormalizedRequirements};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum RankError {
    #[error("no comparable attributes")]
    NoComparableAttributes,
    #[error("vector length mismatch: requirement has {requirement}, service has {service}")]
    LengthMismatch { requirement: usize, service: usize },
    #[error("non-finite value in score input")]
    NonFiniteValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RankerId {
    Cosine = 1,
    Jaccard = 2,
    Overlap = 3,
    Euclidean = 4,
    Dice = 5,
    InverseEuclidean = 6,
}

impl RankerId {
    pub const ALL: [RankerId; 6] = [
        Self::Cosine,
        Self::Jaccard,
        Self::Overlap,
        Self::Euclidean,
        Self::Dice,
        Self::InverseEuclidean,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.id() == id)
    }

    pub fn polarity(self) -> Polarity {
        match self {
            Self::Euclidean => Polarity::LowerIsBetter,
            _ => Polarity::HigherIsBetter,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Cosine => "cosine",
            Self::Jaccard => "jaccard",
            Self::Overlap => "overlap",
            Self::Euclidean => "euclidean",
            Self::Dice => "dice",
            Self::InverseEuclidean => "inverse-euclidean",
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            Self::Cosine => "sum(a*b) / sqrt(sum(a^2) * sum(b^2))",
            Self::Jaccard => "sum(a*b) / (sum(a) + sum(b) - sum(a*b))",
            Self::Overlap => "sum(a*b) / min(sum(a), sum(b))",
            Self::Euclidean => "sqrt(sum((a-b)^2))",
            Self::Dice => "2 * sum(a*b) / (sum(a) + sum(b))",
            Self::InverseEuclidean => "1 / (1 + sqrt(sum((a-b)^2)))",
        }
    }
}

impl fmt::Display for RankerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown ranker `{0}` (expected 1-6 or cosine, jaccard, overlap, euclidean, dice, inverse-euclidean)")]
pub struct UnknownRanker(pub String);

impl FromStr for RankerId {
    type Err = UnknownRanker;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(id) = s.trim().parse::<u8>() {
            return Self::from_id(id).ok_or_else(|| UnknownRanker(s.to_owned()));
        }
        match crate::canonical_name(s).as_str() {
            "cosine" => Ok(Self::Cosine),
            "jaccard" => Ok(Self::Jaccard),
            "overlap" => Ok(Self::Overlap),
            "euclidean" => Ok(Self::Euclidean),
            "dice" => Ok(Self::Dice),
            "inverseeuclidean" | "inveuclidean" => Ok(Self::InverseEuclidean),
            _ => Err(UnknownRanker(s.to_owned())),
        }
    }
}

impl Serialize for RankerId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.id())
    }
}

impl<'de> Deserialize<'de> for RankerId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = crate::IdOrName::deserialize(deserializer)?;
        raw.to_string().parse().map_err(serde::de::Error::custom)
    }
}

/// Decides which coordinate pairs take part in a comparison when the service
/// vector has gaps.
trait MissingValuePolicy {
    fn comparable(&self, requirement: &[f64], service: &[QualityValue]) -> Vec<(f64, f64)>;
}

/// Drops every coordinate the service leaves undefined, from both vectors.
struct PairwiseDeletion;

impl MissingValuePolicy for PairwiseDeletion {
    fn comparable(&self, requirement: &[f64], service: &[QualityValue]) -> Vec<(f64, f64)> {
        requirement
            .iter()
            .zip(service)
            .filter_map(|(&a, b)| b.value().map(|b| (a, b)))
            .collect()
    }
}

#[derive(Default)]
struct Sums {
    dot: f64,
    a: f64,
    b: f64,
    a_sq: f64,
    b_sq: f64,
    diff_sq: f64,
}

fn ratio(numerator: f64, denominator: f64) -> f64 {
    // both vectors all-zero: no affinity
    if denominator == 0.0 {
        0.0
    } else {
        numerator / denominator
    }
}

fn score_pairs(pairs: &[(f64, f64)], alg: RankerId) -> f64 {
    let s = pairs.iter().fold(Sums::default(), |mut s, &(a, b)| {
        s.dot += a * b;
        s.a += a;
        s.b += b;
        s.a_sq += a * a;
        s.b_sq += b * b;
        s.diff_sq += (a - b) * (a - b);
        s
    });
    match alg {
        RankerId::Cosine => ratio(s.dot, (s.a_sq * s.b_sq).sqrt()),
        RankerId::Jaccard => ratio(s.dot, s.a + s.b - s.dot),
        RankerId::Overlap => ratio(s.dot, s.a.min(s.b)),
        RankerId::Euclidean => s.diff_sq.sqrt(),
        RankerId::Dice => ratio(2.0 * s.dot, s.a + s.b),
        RankerId::InverseEuclidean => 1.0 / (1.0 + s.diff_sq.sqrt()),
    }
}

/// Scores one service vector against the requirement vector.
///
/// Coordinates where the service is undefined are removed from both vectors
/// first; if nothing survives the service cannot be scored.
pub fn score(
    requirement: &[f64],
    service: &[QualityValue],
    alg: RankerId,
) -> Result<f64, RankError> {
    if requirement.len() != service.len() {
        return Err(RankError::LengthMismatch {
            requirement: requirement.len(),
            service: service.len(),
        });
    }
    let pairs = PairwiseDeletion.comparable(requirement, service);
    if pairs.is_empty() {
        return Err(RankError::NoComparableAttributes);
    }
    if pairs.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(RankError::NonFiniteValue);
    }
    Ok(score_pairs(&pairs, alg))
}

/// Outcome of scoring one service.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredService {
    pub service_id: String,
    pub score: Result<f64, RankError>,
}

/// Scores every service and sorts best-first according to the ranker's
/// polarity, ties broken by ascending service id. Services that fail to score
/// are kept and placed after all scored ones, ordered by id.
pub fn rank_services(
    matrix: &NormalizedMatrix,
    requirements: &NormalizedRequirements,
    alg: RankerId,
) -> Vec<ScoredService> {
    let targets = requirements.targets();
    let mut scored: Vec<ScoredService> = matrix
        .rows
        .iter()
        .map(|row| ScoredService {
            service_id: row.service_id.clone(),
            score: score(&targets, &row.values, alg),
        })
        .collect();
    let polarity = alg.polarity();
    scored.sort_by(|x, y| {
        let by_score = match (&x.score, &y.score) {
            (Ok(a), Ok(b)) => polarity.compare(*a, *b),
            (Ok(_), Err(_)) => std::cmp::Ordering::Less,
            (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
            (Err(_), Err(_)) => std::cmp::Ordering::Equal,
        };
        by_score.then_with(|| x.service_id.cmp(&y.service_id))
    });
    scored
}
