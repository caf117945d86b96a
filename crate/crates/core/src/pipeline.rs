//! The end-to-end selection run: federate, normalize, rank, then order by
//! mandatory-requirement compliance.
//!
//! The final ("cross-priority") order sorts services by the number of
//! mandatory requirements they fulfil, most first; inside each group the
//! ranking-phase order is kept (score by polarity, then service id). Services
//! that could not be scored go last, by id.
//!
//! Mandatory compliance is checked on raw values, never on normalized ones,
//! so the choice of normalizer cannot change it.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::federation::{federate, FederationError, RepositoryOutcome, RepositoryProxy};
use crate::model::{
    AttributeName, Polarity, QoSMatrix, RankedEntry, RepositoryDescriptor, RequirementVector,
    ServiceRecord,
};
use crate::normalize::{normalize_data, NormalizeError, NormalizerId};
use crate::rank::{rank_services, RankerId, ScoredService};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectionError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Federation(#[from] FederationError),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
}

/// Everything needed for one ranking run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SelectionRequest {
    /// In priority order: earlier repositories win conflicting values.
    pub repositories: Vec<RepositoryDescriptor>,
    pub domain: String,
    pub requirements: RequirementVector,
    pub normalizer: NormalizerId,
    pub ranker: RankerId,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub bypass_cache: bool,
}

impl SelectionRequest {
    pub fn validate(&self) -> Result<(), SelectionError> {
        if self.repositories.is_empty() {
            return Err(SelectionError::InvalidRequest(
                "at least one repository is required".into(),
            ));
        }
        let mut endpoints = BTreeSet::new();
        for repo in &self.repositories {
            if repo.endpoint.is_empty() {
                return Err(SelectionError::InvalidRequest(
                    "repository endpoint must not be empty".into(),
                ));
            }
            if !endpoints.insert(repo.endpoint.as_str()) {
                return Err(SelectionError::InvalidRequest(format!(
                    "repository endpoint `{}` listed twice",
                    repo.endpoint
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MandatoryCount {
    pub fulfilled: usize,
    pub total: usize,
}

/// Counts the mandatory requirements `record` meets on its raw values.
/// An undefined value never meets a requirement.
pub fn evaluate_mandatory(
    record: &ServiceRecord,
    requirements: &RequirementVector,
) -> MandatoryCount {
    requirements
        .iter()
        .filter(|r| r.mandatory)
        .fold(MandatoryCount::default(), |acc, r| MandatoryCount {
            fulfilled: acc.fulfilled + usize::from(r.is_met_by(record.value(r.attribute.as_str()))),
            total: acc.total + 1,
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ServiceDiagnostic {
    pub service_id: String,
    /// Required attributes the service has no value for.
    pub undefined_attributes: Vec<AttributeName>,
    /// Repository endpoint that supplied each value.
    pub provenance: BTreeMap<AttributeName, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub repositories: Vec<RepositoryOutcome>,
    pub services: Vec<ServiceDiagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub entries: Vec<RankedEntry>,
    pub diagnostics: Diagnostics,
}

impl SelectionResult {
    pub fn service_ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.service_id.as_str()).collect()
    }

    /// Service ids in score-only order (before mandatory evaluation).
    pub fn score_order(&self) -> Vec<&str> {
        let mut scored: Vec<&RankedEntry> = self
            .entries
            .iter()
            .filter(|e| e.score_rank.is_some())
            .collect();
        scored.sort_by_key(|e| e.score_rank);
        scored.into_iter().map(|e| e.service_id.as_str()).collect()
    }
}

/// Final ordering from a ranking-phase list and per-service mandatory counts.
/// Services missing from `mandatory` count as fulfilling nothing.
pub fn cross_prioritize(
    ranking: &[ScoredService],
    mandatory: &BTreeMap<String, MandatoryCount>,
    polarity: Polarity,
) -> Vec<RankedEntry> {
    let count = |id: &str| mandatory.get(id).copied().unwrap_or_default();
    let mut scored: Vec<RankedEntry> = Vec::new();
    let mut unscored: Vec<RankedEntry> = Vec::new();
    for s in ranking {
        let c = count(&s.service_id);
        let entry = RankedEntry {
            service_id: s.service_id.clone(),
            display_name: String::new(),
            score: s.score.as_ref().ok().copied(),
            polarity,
            score_rank: None,
            mandatory_fulfilled: c.fulfilled,
            mandatory_total: c.total,
            rank: 0,
        };
        if entry.score.is_some() {
            scored.push(entry);
        } else {
            unscored.push(entry);
        }
    }

    // recompute the score-phase order rather than trusting the input order
    let mut by_score: Vec<usize> = (0..scored.len()).collect();
    by_score.sort_by(|&i, &j| {
        let (a, b) = (&scored[i], &scored[j]);
        polarity
            .compare(a.score.unwrap_or_default(), b.score.unwrap_or_default())
            .then_with(|| a.service_id.cmp(&b.service_id))
    });
    for (position, &i) in by_score.iter().enumerate() {
        scored[i].score_rank = Some(position + 1);
    }

    scored.sort_by(|a, b| {
        b.mandatory_fulfilled
            .cmp(&a.mandatory_fulfilled)
            .then_with(|| a.score_rank.cmp(&b.score_rank))
    });
    unscored.sort_by(|a, b| a.service_id.cmp(&b.service_id));
    scored
        .into_iter()
        .chain(unscored)
        .enumerate()
        .map(|(i, mut e)| {
            e.rank = i + 1;
            e
        })
        .collect()
}

/// Runs normalization, ranking and priority evaluation over an in-memory
/// matrix.
pub fn select(
    matrix: &QoSMatrix,
    requirements: &RequirementVector,
    normalizer: NormalizerId,
    ranker: RankerId,
) -> Result<SelectionResult, SelectionError> {
    if matrix.rows.is_empty() {
        return Ok(SelectionResult {
            entries: Vec::new(),
            diagnostics: Diagnostics::default(),
        });
    }
    let attributes = requirements.attributes();
    let projected = matrix.project(&attributes);
    let (normalized, normalized_reqs) = normalize_data(&projected, requirements, normalizer)?;
    let ranking = rank_services(&normalized, &normalized_reqs, ranker);

    let mandatory: BTreeMap<String, MandatoryCount> = matrix
        .rows
        .iter()
        .map(|r| (r.service_id.clone(), evaluate_mandatory(r, requirements)))
        .collect();
    let mut entries = cross_prioritize(&ranking, &mandatory, ranker.polarity());

    let records: BTreeMap<&str, &ServiceRecord> = matrix
        .rows
        .iter()
        .map(|r| (r.service_id.as_str(), r))
        .collect();
    let errors: BTreeMap<&str, String> = ranking
        .iter()
        .filter_map(|s| {
            s.score
                .as_ref()
                .err()
                .map(|e| (s.service_id.as_str(), e.to_string()))
        })
        .collect();
    let mut services = Vec::with_capacity(entries.len());
    for entry in &mut entries {
        let record = records[entry.service_id.as_str()];
        entry.display_name = record.display_name.clone();
        services.push(ServiceDiagnostic {
            service_id: entry.service_id.clone(),
            undefined_attributes: attributes
                .iter()
                .filter(|a| !record.value(a.as_str()).is_defined())
                .cloned()
                .collect(),
            provenance: record.provenance.clone(),
            error: errors.get(entry.service_id.as_str()).cloned(),
        });
    }
    Ok(SelectionResult {
        entries,
        diagnostics: Diagnostics {
            repositories: Vec::new(),
            services,
        },
    })
}

/// Full selection over the request's repositories.
pub fn rank_for_repositories<P: RepositoryProxy + ?Sized>(
    request: &SelectionRequest,
    proxy: &P,
) -> Result<SelectionResult, SelectionError> {
    request.validate()?;
    let view = federate(
        &request.repositories,
        &request.domain,
        proxy,
        request.bypass_cache,
    )?;
    let mut result = select(
        &view.matrix,
        &request.requirements,
        request.normalizer,
        request.ranker,
    )?;
    result.diagnostics.repositories = view.repositories;
    Ok(result)
}
