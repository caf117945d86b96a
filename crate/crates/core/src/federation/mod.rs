//! Gathering QoS for a domain from an ordered list of repositories.
//!
//! The candidate set is the union of every repository's services, matched by
//! exact service id. For each (service, attribute) cell the value comes from
//! the first repository in list order that defines it, and the endpoint of
//! that repository is recorded as the cell's provenance. A repository that
//! cannot be reached is skipped and reported; federation only fails when no
//! repository answers at all.

mod databank;
mod proxy;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use databank::{validate_entries, DataBankDocument, DataBankViolation, ServiceEntry};
pub use proxy::{CachingProxy, DefaultProxy, InMemoryProxy};

use crate::model::{
    AttributeName, QoSMatrix, QualityValue, RepositoryDescriptor, RepositoryKind, ServiceRecord,
};

/// Attributes a monitor can measure. Anything else a monitor reports is
/// dropped, since monitors hold no static QoS.
pub const DYNAMIC_ATTRIBUTES: [&str; 3] = [
    crate::monitor::AVERAGE_RESPONSE_TIME,
    crate::monitor::CURRENT_RESPONSE_TIME,
    crate::monitor::CURRENT_AVAILABILITY,
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FetchError {
    #[error("repository `{endpoint}` is unreachable: {reason}")]
    Unreachable { endpoint: String, reason: String },
    #[error("repository `{endpoint}` returned an invalid document: {reason}")]
    InvalidDocument { endpoint: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FederationError {
    #[error("repository list is empty")]
    NoRepositories,
    #[error("no QoS sources available")]
    NoSourcesAvailable { failures: Vec<RepositoryOutcome> },
}

/// Source of per-domain service QoS for a single repository.
pub trait RepositoryProxy: Send + Sync {
    fn services_in_domain(
        &self,
        repository: &RepositoryDescriptor,
        domain: &str,
    ) -> Result<Vec<ServiceRecord>, FetchError>;

    /// Same as [`services_in_domain`](Self::services_in_domain) but never
    /// served from a cache.
    fn services_in_domain_uncached(
        &self,
        repository: &RepositoryDescriptor,
        domain: &str,
    ) -> Result<Vec<ServiceRecord>, FetchError> {
        self.services_in_domain(repository, domain)
    }
}

impl<T: RepositoryProxy + ?Sized> RepositoryProxy for std::sync::Arc<T> {
    fn services_in_domain(
        &self,
        repository: &RepositoryDescriptor,
        domain: &str,
    ) -> Result<Vec<ServiceRecord>, FetchError> {
        (**self).services_in_domain(repository, domain)
    }

    fn services_in_domain_uncached(
        &self,
        repository: &RepositoryDescriptor,
        domain: &str,
    ) -> Result<Vec<ServiceRecord>, FetchError> {
        (**self).services_in_domain_uncached(repository, domain)
    }
}

impl<T: RepositoryProxy + ?Sized> RepositoryProxy for &T {
    fn services_in_domain(
        &self,
        repository: &RepositoryDescriptor,
        domain: &str,
    ) -> Result<Vec<ServiceRecord>, FetchError> {
        (**self).services_in_domain(repository, domain)
    }

    fn services_in_domain_uncached(
        &self,
        repository: &RepositoryDescriptor,
        domain: &str,
    ) -> Result<Vec<ServiceRecord>, FetchError> {
        (**self).services_in_domain_uncached(repository, domain)
    }
}

/// Turns wire entries into records attributed to `repository`, keeping only
/// dynamic attributes for monitors.
pub fn entries_to_records(
    repository: &RepositoryDescriptor,
    domain: &str,
    entries: &[ServiceEntry],
) -> Vec<ServiceRecord> {
    entries
        .iter()
        .map(|entry| {
            let values: BTreeMap<AttributeName, QualityValue> = entry
                .qos
                .iter()
                .filter(|(name, _)| {
                    repository.kind == RepositoryKind::DataBank
                        || DYNAMIC_ATTRIBUTES.contains(&name.as_str())
                })
                .map(|(k, v)| (k.clone(), *v))
                .collect();
            let provenance = values
                .iter()
                .filter(|(_, v)| v.is_defined())
                .map(|(k, _)| (k.clone(), repository.endpoint.clone()))
                .collect();
            ServiceRecord {
                service_id: entry.service_id.clone(),
                display_name: entry.display_name.clone(),
                domain: domain.to_owned(),
                values,
                provenance,
            }
        })
        .collect()
}

/// What happened when one repository was consulted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RepositoryOutcome {
    pub endpoint: String,
    pub name: String,
    pub kind: RepositoryKind,
    /// Number of services returned, when the fetch succeeded.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub services: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RepositoryOutcome {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// The merged matrix, each row carrying per-cell provenance, plus the
/// per-repository fetch outcomes in list order.
#[derive(Debug, Clone, PartialEq)]
pub struct FederatedView {
    pub matrix: QoSMatrix,
    pub repositories: Vec<RepositoryOutcome>,
}

impl FederatedView {
    pub fn service(&self, service_id: &str) -> Option<&ServiceRecord> {
        self.matrix.rows.iter().find(|r| r.service_id == service_id)
    }
}

/// Fetches `domain` from every repository (concurrently) and merges the
/// answers in list order.
pub fn federate<P: RepositoryProxy + ?Sized>(
    repositories: &[RepositoryDescriptor],
    domain: &str,
    proxy: &P,
    bypass_cache: bool,
) -> Result<FederatedView, FederationError> {
    if repositories.is_empty() {
        return Err(FederationError::NoRepositories);
    }
    let fetched: Vec<Result<Vec<ServiceRecord>, FetchError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = repositories
            .iter()
            .map(|repo| {
                scope.spawn(move || {
                    if bypass_cache {
                        proxy.services_in_domain_uncached(repo, domain)
                    } else {
                        proxy.services_in_domain(repo, domain)
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("repository fetch panicked"))
            .collect()
    });

    let mut outcomes = Vec::with_capacity(repositories.len());
    let mut answers = Vec::new();
    for (repo, result) in repositories.iter().zip(fetched) {
        let (services, error) = match result {
            Ok(records) => {
                let n = records.len();
                answers.push(records);
                (Some(n), None)
            }
            Err(e) => {
                tracing::warn!(endpoint = %repo.endpoint, error = %e, "repository skipped");
                (None, Some(e.to_string()))
            }
        };
        outcomes.push(RepositoryOutcome {
            endpoint: repo.endpoint.clone(),
            name: repo.name.clone(),
            kind: repo.kind,
            services,
            error,
        });
    }
    if answers.is_empty() {
        return Err(FederationError::NoSourcesAvailable { failures: outcomes });
    }
    Ok(FederatedView {
        matrix: merge(answers),
        repositories: outcomes,
    })
}

/// First-defined-wins merge of per-repository answers, given in priority
/// order. Rows keep the order in which services are first seen.
pub fn merge(answers: impl IntoIterator<Item = Vec<ServiceRecord>>) -> QoSMatrix {
    let mut rows: Vec<ServiceRecord> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut columns = BTreeSet::new();
    for records in answers {
        for record in records {
            let slot = *index.entry(record.service_id.clone()).or_insert_with(|| {
                rows.push(ServiceRecord {
                    service_id: record.service_id.clone(),
                    display_name: record.display_name.clone(),
                    domain: record.domain.clone(),
                    ..ServiceRecord::default()
                });
                rows.len() - 1
            });
            let row = &mut rows[slot];
            if row.display_name.is_empty() {
                row.display_name = record.display_name.clone();
            }
            for (attribute, value) in record.values {
                columns.insert(attribute.clone());
                let taken = row.values.get(&attribute).is_some_and(|v| v.is_defined());
                if taken {
                    continue;
                }
                if let Some(source) = record.provenance.get(&attribute) {
                    row.provenance.insert(attribute.clone(), source.clone());
                }
                row.values.insert(attribute, value);
            }
        }
    }
    QoSMatrix {
        columns: columns.into_iter().collect(),
        rows,
    }
}
