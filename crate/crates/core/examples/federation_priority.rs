//! Merges two monitors and a DataBank, then swaps the monitor order to show
//! which repository each value comes from.
//!
//! ```bash
//! cargo run -p qos-select --example federation_priority
//! ```

use std::path::Path;

use qos_select::federation::{federate, DataBankDocument, InMemoryProxy};
use qos_select::RepositoryDescriptor;

fn main() -> anyhow::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let load = |name: &str| -> anyhow::Result<DataBankDocument> {
        Ok(DataBankDocument::from_json(&std::fs::read_to_string(
            fixtures.join(name),
        )?)?)
    };
    let proxy = InMemoryProxy::default()
        .with("Monitor1", load("weather_monitor1.json")?)
        .with("Monitor2", load("weather_monitor2.json")?)
        .with("DataBank1", load("weather_databank1.json")?);

    for order in [
        ["Monitor1", "Monitor2", "DataBank1"],
        ["Monitor2", "Monitor1", "DataBank1"],
    ] {
        let repos: Vec<RepositoryDescriptor> = order
            .iter()
            .map(|n| {
                if n.starts_with("Monitor") {
                    RepositoryDescriptor::monitor(*n, *n)
                } else {
                    RepositoryDescriptor::data_bank(*n, *n)
                }
            })
            .collect();
        let view = federate(&repos, "weather", &proxy, false)?;
        println!("order {}:", order.join(" > "));
        let airport = view.service("AirportWeatherCheck").expect("in DataBank1");
        for (attribute, value) in &airport.values {
            let source = airport
                .provenance
                .get(attribute)
                .map_or("-", String::as_str);
            println!(
                "    {attribute:<12} {:>8.2}  from {source}",
                value.value().unwrap_or(f64::NAN)
            );
        }
        let ids: Vec<&str> = view
            .matrix
            .rows
            .iter()
            .map(|r| r.service_id.as_str())
            .collect();
        println!("    services: {}\n", ids.join(", "));
    }
    Ok(())
}
