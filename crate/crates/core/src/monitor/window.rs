use std::collections::{BTreeMap, VecDeque};
use std::time::SystemTime;

use thiserror::Error;

use crate::model::{AttributeName, QualityValue};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WindowError {
    #[error("window capacity must be at least 1")]
    ZeroCapacity,
    #[error("sample is older than the newest sample in the window")]
    OutOfOrder,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeOutcome {
    /// Response received in time with a 2xx/3xx status.
    Success {
        latency_ms: f64,
    },
    Failure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSample {
    pub timestamp: SystemTime,
    pub outcome: ProbeOutcome,
}

impl ProbeSample {
    pub fn success(timestamp: SystemTime, latency_ms: f64) -> Self {
        Self {
            timestamp,
            outcome: ProbeOutcome::Success {
                latency_ms: latency_ms.max(0.0),
            },
        }
    }

    pub fn failure(timestamp: SystemTime) -> Self {
        Self {
            timestamp,
            outcome: ProbeOutcome::Failure,
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self.outcome, ProbeOutcome::Success { .. })
    }

    pub fn latency_ms(&self) -> Option<f64> {
        match self.outcome {
            ProbeOutcome::Success { latency_ms } => Some(latency_ms),
            ProbeOutcome::Failure => None,
        }
    }
}

/// The last `capacity` probe samples of one target, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowStats {
    capacity: usize,
    samples: VecDeque<ProbeSample>,
}

impl WindowStats {
    pub fn new(capacity: usize) -> Result<Self, WindowError> {
        if capacity == 0 {
            return Err(WindowError::ZeroCapacity);
        }
        Ok(Self {
            capacity,
            samples: VecDeque::with_capacity(capacity),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = &ProbeSample> {
        self.samples.iter()
    }

    pub fn newest(&self) -> Option<&ProbeSample> {
        self.samples.back()
    }

    /// Appends `sample`, evicting the oldest one when full.
    pub fn record(&mut self, sample: ProbeSample) -> Result<(), WindowError> {
        if self
            .newest()
            .is_some_and(|n| sample.timestamp < n.timestamp)
        {
            return Err(WindowError::OutOfOrder);
        }
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back(sample);
        Ok(())
    }

    pub fn derive_attributes(&self) -> DynamicAttributes {
        derive_attributes(self)
    }
}

/// CRT, ART and CA for one window. All are `Undefined` on an empty window;
/// the response times are also `Undefined` when no probe succeeded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicAttributes {
    /// Latency (ms) of the newest successful sample.
    pub current_response_time: QualityValue,
    /// Mean latency (ms) of the successful samples.
    pub average_response_time: QualityValue,
    /// Fraction of successful samples.
    pub current_availability: QualityValue,
}

impl DynamicAttributes {
    /// Defined attributes keyed by their short names (CRT, ART, CA).
    pub fn to_qos(&self) -> BTreeMap<AttributeName, QualityValue> {
        [
            (super::CURRENT_RESPONSE_TIME, self.current_response_time),
            (super::AVERAGE_RESPONSE_TIME, self.average_response_time),
            (super::CURRENT_AVAILABILITY, self.current_availability),
        ]
        .into_iter()
        .filter(|(_, v)| v.is_defined())
        .map(|(k, v)| (AttributeName::new(k).expect("static name"), v))
        .collect()
    }
}

pub fn derive_attributes(window: &WindowStats) -> DynamicAttributes {
    let latencies: Vec<f64> = window
        .samples()
        .filter_map(ProbeSample::latency_ms)
        .collect();
    let total = window.len();
    let current_response_time = latencies.last().copied().into();
    let average_response_time = if latencies.is_empty() {
        QualityValue::Undefined
    } else {
        QualityValue::Defined(latencies.iter().sum::<f64>() / latencies.len() as f64)
    };
    let current_availability = if total == 0 {
        QualityValue::Undefined
    } else {
        QualityValue::Defined(latencies.len() as f64 / total as f64)
    };
    DynamicAttributes {
        current_response_time,
        average_response_time,
        current_availability,
    }
}
