use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use super::{
    entries_to_records, validate_entries, DataBankDocument, FetchError, RepositoryProxy,
    ServiceEntry,
};
use crate::model::{RepositoryDescriptor, RepositoryKind, ServiceRecord};

/// Resolves repositories by endpoint scheme:
///
/// * `http://` / `https://`: `GET <endpoint>/services?domain=<d>`, answered
///   with a JSON array of service entries (the monitor contract);
/// * `file://<path>` or a bare path: a DataBank document on disk.
///
/// Either transport works for either repository kind.
#[derive(Debug, Clone)]
pub struct DefaultProxy {
    agent: ureq::Agent,
}

impl Default for DefaultProxy {
    fn default() -> Self {
        Self::with_timeout(Duration::from_secs(10))
    }
}

impl DefaultProxy {
    pub fn with_timeout(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .new_agent();
        Self { agent }
    }

    fn fetch_http(&self, endpoint: &str, domain: &str) -> Result<Vec<ServiceEntry>, FetchError> {
        let url = format!("{}/services", endpoint.trim_end_matches('/'));
        let unreachable = |reason: String| FetchError::Unreachable {
            endpoint: endpoint.to_owned(),
            reason,
        };
        let mut response = self
            .agent
            .get(&url)
            .query("domain", domain)
            .call()
            .map_err(|e| unreachable(e.to_string()))?;
        if !response.status().is_success() {
            return Err(unreachable(format!("HTTP {}", response.status())));
        }
        response
            .body_mut()
            .read_json::<Vec<ServiceEntry>>()
            .map_err(|e| FetchError::InvalidDocument {
                endpoint: endpoint.to_owned(),
                reason: e.to_string(),
            })
    }

    fn fetch_file(&self, endpoint: &str, domain: &str) -> Result<Vec<ServiceEntry>, FetchError> {
        let path = endpoint.strip_prefix("file://").unwrap_or(endpoint);
        let doc = load_data_bank(endpoint, Path::new(path))?;
        Ok(doc.entries(domain).to_vec())
    }
}

fn load_data_bank(endpoint: &str, path: &Path) -> Result<DataBankDocument, FetchError> {
    let text = std::fs::read_to_string(path).map_err(|e| FetchError::Unreachable {
        endpoint: endpoint.to_owned(),
        reason: e.to_string(),
    })?;
    let doc = DataBankDocument::from_json(&text).map_err(|e| FetchError::InvalidDocument {
        endpoint: endpoint.to_owned(),
        reason: e.to_string(),
    })?;
    checked(endpoint, doc)
}

fn checked(endpoint: &str, doc: DataBankDocument) -> Result<DataBankDocument, FetchError> {
    match doc.validate().first() {
        None => Ok(doc),
        Some(v) => Err(FetchError::InvalidDocument {
            endpoint: endpoint.to_owned(),
            reason: v.to_string(),
        }),
    }
}

fn is_http(endpoint: &str) -> bool {
    endpoint.starts_with("http://") || endpoint.starts_with("https://")
}

impl RepositoryProxy for DefaultProxy {
    fn services_in_domain(
        &self,
        repository: &RepositoryDescriptor,
        domain: &str,
    ) -> Result<Vec<ServiceRecord>, FetchError> {
        let entries = if is_http(&repository.endpoint) {
            let entries = self.fetch_http(&repository.endpoint, domain)?;
            if let Some(v) = validate_entries(domain, &entries).first() {
                return Err(FetchError::InvalidDocument {
                    endpoint: repository.endpoint.clone(),
                    reason: v.to_string(),
                });
            }
            entries
        } else {
            self.fetch_file(&repository.endpoint, domain)?
        };
        Ok(entries_to_records(repository, domain, &entries))
    }
}

/// Repositories held in memory, keyed by endpoint. Handy for tests and
/// embedding; unknown endpoints behave like unreachable ones.
#[derive(Debug, Clone, Default)]
pub struct InMemoryProxy {
    documents: HashMap<String, DataBankDocument>,
}

impl InMemoryProxy {
    pub fn insert(&mut self, endpoint: impl Into<String>, document: DataBankDocument) {
        self.documents.insert(endpoint.into(), document);
    }

    pub fn with(mut self, endpoint: impl Into<String>, document: DataBankDocument) -> Self {
        self.insert(endpoint, document);
        self
    }
}

impl RepositoryProxy for InMemoryProxy {
    fn services_in_domain(
        &self,
        repository: &RepositoryDescriptor,
        domain: &str,
    ) -> Result<Vec<ServiceRecord>, FetchError> {
        let doc =
            self.documents
                .get(&repository.endpoint)
                .ok_or_else(|| FetchError::Unreachable {
                    endpoint: repository.endpoint.clone(),
                    reason: "unknown endpoint".into(),
                })?;
        let doc = checked(&repository.endpoint, doc.clone())?;
        Ok(entries_to_records(repository, domain, doc.entries(domain)))
    }
}

type CacheKey = (String, RepositoryKind, String);

/// Read-through cache with a fixed time-to-live in front of another proxy.
/// Only successful fetches are cached.
#[derive(Debug)]
pub struct CachingProxy<P> {
    inner: P,
    ttl: Duration,
    entries: Mutex<HashMap<CacheKey, (Instant, Vec<ServiceRecord>)>>,
}

impl<P: RepositoryProxy> CachingProxy<P> {
    pub fn new(inner: P, ttl: Duration) -> Self {
        Self {
            inner,
            ttl,
            entries: Mutex::new(HashMap::new()),
        }
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    fn key(repository: &RepositoryDescriptor, domain: &str) -> CacheKey {
        (
            repository.endpoint.clone(),
            repository.kind,
            domain.to_owned(),
        )
    }
}

impl<P: RepositoryProxy> RepositoryProxy for CachingProxy<P> {
    fn services_in_domain(
        &self,
        repository: &RepositoryDescriptor,
        domain: &str,
    ) -> Result<Vec<ServiceRecord>, FetchError> {
        let key = Self::key(repository, domain);
        {
            let entries = self.entries.lock().expect("cache lock poisoned");
            if let Some((at, records)) = entries.get(&key) {
                if at.elapsed() < self.ttl {
                    return Ok(records.clone());
                }
            }
        }
        self.services_in_domain_uncached(repository, domain)
    }

    fn services_in_domain_uncached(
        &self,
        repository: &RepositoryDescriptor,
        domain: &str,
    ) -> Result<Vec<ServiceRecord>, FetchError> {
        let records = self.inner.services_in_domain_uncached(repository, domain)?;
        self.entries.lock().expect("cache lock poisoned").insert(
            Self::key(repository, domain),
            (Instant::now(), records.clone()),
        );
        Ok(records)
    }
}
