//! Active probing of service endpoints, and the Monitor repository built on it.
//!
//! Each target is probed with an HTTP GET on its own schedule. The last
//! `windowSize` outcomes are kept per target and turned into three dynamic
//! attributes:
//!
//! * `CRT`: latency of the newest successful probe, in milliseconds;
//! * `ART`: mean latency of the successful probes in the window;
//! * `CA`: fraction of probes in the window that succeeded.
//!
//! [`router`] serves them through the monitor contract,
//! `GET /services?domain=<d>`.

mod window;

use std::path::Path;
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::{Arc, RwLock};
use std::thread::JoinHandle;
use std::time::{Duration, Instant, SystemTime};

use axum::extract::{Query, State};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use window::{
    derive_attributes, DynamicAttributes, ProbeOutcome, ProbeSample, WindowError, WindowStats,
};

use crate::federation::ServiceEntry;

pub const CURRENT_RESPONSE_TIME: &str = "CRT";
pub const AVERAGE_RESPONSE_TIME: &str = "ART";
pub const CURRENT_AVAILABILITY: &str = "CA";

pub const DEFAULT_WINDOW_SIZE: usize = 50;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("monitor configuration has no probe targets")]
    Empty,
    #[error("probe target `{service_id}`: {reason}")]
    InvalidTarget { service_id: String, reason: String },
    #[error("cannot read monitor configuration: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse monitor configuration: {0}")]
    Parse(#[from] serde_json::Error),
}

/// One entry of the probe configuration file (a JSON array of these).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProbeTargetConfig {
    pub service_id: String,
    #[serde(default)]
    pub display_name: String,
    pub probe_url: String,
    pub domain: String,
    pub period_ms: u64,
    pub timeout_ms: u64,
    #[serde(default = "default_window_size")]
    pub window_size: usize,
}

fn default_window_size() -> usize {
    DEFAULT_WINDOW_SIZE
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeTarget {
    pub service_id: String,
    pub display_name: String,
    pub probe_url: String,
    pub domain: String,
    pub period: Duration,
    pub timeout: Duration,
    pub window_size: usize,
}

impl TryFrom<ProbeTargetConfig> for ProbeTarget {
    type Error = ConfigError;

    fn try_from(c: ProbeTargetConfig) -> Result<Self, Self::Error> {
        let invalid = |reason: &str| ConfigError::InvalidTarget {
            service_id: c.service_id.clone(),
            reason: reason.to_owned(),
        };
        if c.service_id.is_empty() {
            return Err(invalid("serviceId must not be empty"));
        }
        if c.period_ms == 0 {
            return Err(invalid("periodMs must be positive"));
        }
        if c.timeout_ms == 0 {
            return Err(invalid("timeoutMs must be positive"));
        }
        if c.window_size == 0 {
            return Err(invalid("windowSize must be at least 1"));
        }
        Ok(Self {
            service_id: c.service_id,
            display_name: c.display_name,
            probe_url: c.probe_url,
            domain: c.domain,
            period: Duration::from_millis(c.period_ms),
            timeout: Duration::from_millis(c.timeout_ms),
            window_size: c.window_size,
        })
    }
}

pub fn parse_targets(json: &str) -> Result<Vec<ProbeTarget>, ConfigError> {
    let configs: Vec<ProbeTargetConfig> = serde_json::from_str(json)?;
    if configs.is_empty() {
        return Err(ConfigError::Empty);
    }
    configs.into_iter().map(ProbeTarget::try_from).collect()
}

pub fn load_targets(path: &Path) -> Result<Vec<ProbeTarget>, ConfigError> {
    parse_targets(&std::fs::read_to_string(path)?)
}

/// Issues single HTTP GET probes. Redirects are not followed: a 3xx answer
/// already counts as the service being up.
#[derive(Debug, Clone)]
pub struct HttpProber {
    agent: ureq::Agent,
}

impl HttpProber {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .max_redirects(0)
            .max_redirects_will_error(false)
            .build()
            .new_agent();
        Self { agent }
    }

    pub fn probe(&self, url: &str) -> ProbeOutcome {
        let started = Instant::now();
        match self.agent.get(url).call() {
            Ok(mut response) => {
                let status = response.status();
                if !(status.is_success() || status.is_redirection()) {
                    return ProbeOutcome::Failure;
                }
                if response.body_mut().read_to_vec().is_err() {
                    return ProbeOutcome::Failure;
                }
                ProbeOutcome::Success {
                    latency_ms: started.elapsed().as_secs_f64() * 1000.0,
                }
            }
            Err(_) => ProbeOutcome::Failure,
        }
    }
}

struct TargetState {
    target: ProbeTarget,
    prober: HttpProber,
    window: RwLock<WindowStats>,
}

/// The set of probe targets and their sample windows.
pub struct Monitor {
    targets: Vec<TargetState>,
}

impl Monitor {
    pub fn new(targets: Vec<ProbeTarget>) -> Result<Self, ConfigError> {
        if targets.is_empty() {
            return Err(ConfigError::Empty);
        }
        let targets = targets
            .into_iter()
            .map(|target| {
                let window = WindowStats::new(target.window_size).map_err(|e| {
                    ConfigError::InvalidTarget {
                        service_id: target.service_id.clone(),
                        reason: e.to_string(),
                    }
                })?;
                Ok(TargetState {
                    prober: HttpProber::new(target.timeout),
                    window: RwLock::new(window),
                    target,
                })
            })
            .collect::<Result<_, ConfigError>>()?;
        Ok(Self { targets })
    }

    pub fn targets(&self) -> impl Iterator<Item = &ProbeTarget> {
        self.targets.iter().map(|t| &t.target)
    }

    fn state(&self, service_id: &str) -> Option<&TargetState> {
        self.targets
            .iter()
            .find(|t| t.target.service_id == service_id)
    }

    /// Records an outcome observed now. The timestamp is clamped so that a
    /// wall clock stepping backwards cannot reorder the window.
    pub fn record_outcome(&self, service_id: &str, outcome: ProbeOutcome) -> bool {
        let Some(state) = self.state(service_id) else {
            return false;
        };
        let mut window = state.window.write().expect("window lock poisoned");
        let now = SystemTime::now();
        let timestamp = window.newest().map_or(now, |n| n.timestamp.max(now));
        window
            .record(ProbeSample { timestamp, outcome })
            .expect("clamped timestamp is never out of order");
        true
    }

    /// Probes one target right away and records the result.
    pub fn probe_now(&self, service_id: &str) -> Option<ProbeOutcome> {
        let state = self.state(service_id)?;
        let outcome = state.prober.probe(&state.target.probe_url);
        self.record_outcome(service_id, outcome);
        Some(outcome)
    }

    pub fn window(&self, service_id: &str) -> Option<WindowStats> {
        self.state(service_id)
            .map(|s| s.window.read().expect("window lock poisoned").clone())
    }

    pub fn attributes(&self, service_id: &str) -> Option<DynamicAttributes> {
        self.window(service_id).map(|w| w.derive_attributes())
    }

    /// Current dynamic QoS of every target in `domain`.
    pub fn services(&self, domain: &str) -> Vec<ServiceEntry> {
        self.targets
            .iter()
            .filter(|t| t.target.domain == domain)
            .map(|t| {
                let attrs = t
                    .window
                    .read()
                    .expect("window lock poisoned")
                    .derive_attributes();
                ServiceEntry {
                    service_id: t.target.service_id.clone(),
                    display_name: t.target.display_name.clone(),
                    qos: attrs.to_qos(),
                }
            })
            .collect()
    }

    /// Starts one probing thread per target. Probing stops when the handle is
    /// stopped or dropped.
    pub fn start(self: &Arc<Self>) -> MonitorHandle {
        let mut stops = Vec::new();
        let mut threads = Vec::new();
        for index in 0..self.targets.len() {
            let (tx, rx) = mpsc::channel::<()>();
            let monitor = Arc::clone(self);
            threads.push(std::thread::spawn(move || {
                let state = &monitor.targets[index];
                loop {
                    let started = Instant::now();
                    monitor.probe_now(&state.target.service_id);
                    let wait = state.target.period.saturating_sub(started.elapsed());
                    match rx.recv_timeout(wait) {
                        Err(RecvTimeoutError::Timeout) => continue,
                        _ => break,
                    }
                }
            }));
            stops.push(tx);
        }
        MonitorHandle { stops, threads }
    }
}

pub struct MonitorHandle {
    stops: Vec<mpsc::Sender<()>>,
    threads: Vec<JoinHandle<()>>,
}

impl MonitorHandle {
    pub fn stop(mut self) {
        self.shutdown();
    }

    fn shutdown(&mut self) {
        self.stops.clear();
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

impl Drop for MonitorHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}

#[derive(Debug, Deserialize)]
struct ServicesQuery {
    domain: String,
}

async fn services(
    State(monitor): State<Arc<Monitor>>,
    Query(query): Query<ServicesQuery>,
) -> Json<Vec<ServiceEntry>> {
    Json(monitor.services(&query.domain))
}

/// HTTP face of a monitor: `GET /services?domain=<d>`.
pub fn router(monitor: Arc<Monitor>) -> Router {
    Router::new()
        .route("/services", get(services))
        .with_state(monitor)
}
