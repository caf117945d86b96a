//! Quality-aware service selection.
//!
//! Candidate services are ranked against stakeholder non-functional
//! requirements in three phases:
//!
//! 1. **Normalization** ([`normalize`]): every required attribute column and
//!    its target are projected into `[0, 1]` with one of four normalizers.
//! 2. **Ranking** ([`rank`]): each service vector is scored against the
//!    requirement vector with one of six vector-space measures.
//! 3. **Priority evaluation** ([`pipeline`]): services are ordered by how many
//!    mandatory requirements they meet, then by score.
//!
//! QoS data comes from an ordered list of repositories ([`federation`]):
//! static DataBank documents and live monitors ([`monitor`]) that probe
//! endpoints for response time and availability. Earlier repositories win
//! conflicting values.
//!
//! The same operations are exposed over HTTP ([`api`]) and through the
//! `qos-select` command line tool ([`cli`]). Runnable walkthroughs live in
//! this crate's `examples/` directory:
//!
//! ```bash
//! cargo run -p qos-select --example normalize_portfolio
//! cargo run -p qos-select --example rank_portfolio
//! cargo run -p qos-select --example cross_priority
//! cargo run -p qos-select --example federation_priority
//! cargo run -p qos-select --example monitor_probe
//! cargo run -p qos-select --example http_api
//! ```

pub mod api;
pub mod cli;
pub mod federation;
pub mod model;
pub mod monitor;
pub mod normalize;
pub mod pipeline;
pub mod rank;

pub use model::{
    AttributeName, Polarity, QoSMatrix, QualityValue, RankedEntry, RepositoryDescriptor,
    RepositoryKind, Requirement, RequirementVector, ServiceRecord,
};
pub use normalize::NormalizerId;
pub use pipeline::{rank_for_repositories, select, SelectionRequest, SelectionResult};
pub use rank::RankerId;

/// Compact JSON followed by a newline. Every machine-readable output (HTTP
/// bodies, `--json` CLI output) goes through here so they stay byte-identical.
pub fn render_json<T: serde::Serialize + ?Sized>(value: &T) -> String {
    let mut out = serde_json::to_string(value).expect("serializable value");
    out.push('\n');
    out
}

/// Lowercase with `-`, `_` and spaces removed, for lenient name matching.
pub(crate) fn canonical_name(s: &str) -> String {
    s.trim()
        .chars()
        .filter(|c| !matches!(c, '-' | '_' | ' '))
        .flat_map(char::to_lowercase)
        .collect()
}

/// Algorithm ids arrive either as the integer id or as a name.
#[derive(serde::Deserialize)]
#[serde(untagged)]
pub(crate) enum IdOrName {
    Id(u64),
    Name(String),
}

impl std::fmt::Display for IdOrName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Id(id) => write!(f, "{id}"),
            Self::Name(name) => f.write_str(name),
        }
    }
}
