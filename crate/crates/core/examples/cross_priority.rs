//! Shows how mandatory requirements reorder a score ranking.
//!
//! ```bash
//! cargo run -p qos-select --example cross_priority
//! ```

use std::path::Path;

use qos_select::cli::format_table;
use qos_select::federation::{entries_to_records, merge, DataBankDocument};
use qos_select::{select, NormalizerId, RankerId, RepositoryDescriptor, RequirementVector};

fn main() -> anyhow::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let doc = DataBankDocument::from_json(&std::fs::read_to_string(
        fixtures.join("worked_example_databank.json"),
    )?)?;
    let requirements: RequirementVector = serde_json::from_str(&std::fs::read_to_string(
        fixtures.join("worked_example_requirements.json"),
    )?)?;
    let repo = RepositoryDescriptor::data_bank("worked-example", "worked-example");
    let matrix = merge([entries_to_records(&repo, "weather", doc.entries("weather"))]);

    let result = select(
        &matrix,
        &requirements,
        NormalizerId::MaxScale,
        RankerId::Euclidean,
    )?;
    println!("by score alone: {}", result.score_order().join(", "));
    println!("final order:    {}\n", result.service_ids().join(", "));
    print!("{}", format_table(&result));
    Ok(())
}
