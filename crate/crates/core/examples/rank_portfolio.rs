//! Scores the shipped weather fixture with every ranker.
//!
//! ```bash
//! cargo run -p qos-select --example rank_portfolio
//! ```

use std::path::Path;

use qos_select::federation::{federate, DefaultProxy};
use qos_select::normalize::normalize_data;
use qos_select::rank::rank_services;
use qos_select::{NormalizerId, RankerId, RepositoryDescriptor};

fn main() -> anyhow::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let bank = fixtures
        .join("worked_example_databank.json")
        .display()
        .to_string();
    let requirements: qos_select::RequirementVector = serde_json::from_str(
        &std::fs::read_to_string(fixtures.join("worked_example_requirements.json"))?,
    )?;

    let view = federate(
        &[RepositoryDescriptor::data_bank("worked-example", bank)],
        "weather",
        &DefaultProxy::default(),
        false,
    )?;
    let (matrix, targets) = normalize_data(
        &view.matrix.project(&requirements.attributes()),
        &requirements,
        NormalizerId::MaxScale,
    )?;

    for ranker in RankerId::ALL {
        let ranking = rank_services(&matrix, &targets, ranker);
        let line: Vec<String> = ranking
            .iter()
            .map(|s| match &s.score {
                Ok(v) => format!("{} {v:.5}", s.service_id),
                Err(e) => format!("{} ({e})", s.service_id),
            })
            .collect();
        println!(
            "{:<18} {:?}: {}",
            ranker.name(),
            ranker.polarity(),
            line.join(", ")
        );
    }
    Ok(())
}
