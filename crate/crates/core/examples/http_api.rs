//! Starts the HTTP API on a local port and calls it the way a client would.
//!
//! ```bash
//! cargo run -p qos-select --example http_api
//! ```

use std::path::Path;
use std::sync::Arc;

use qos_select::api::{self, ApiState};
use qos_select::federation::DefaultProxy;
use serde_json::json;

fn main() -> anyhow::Result<()> {
    let rt = tokio::runtime::Runtime::new()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))?;
    let base = format!("http://{}", listener.local_addr()?);
    let app = api::router(ApiState::new(Vec::new(), Arc::new(DefaultProxy::default())));
    rt.spawn(async move { axum::serve(listener, app).await });

    let agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .new_agent();

    let catalog = agent
        .get(&format!("{base}/algorithms"))
        .call()?
        .body_mut()
        .read_to_string()?;
    println!("GET /algorithms\n{catalog}");

    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let requirements: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(
        fixtures.join("worked_example_requirements.json"),
    )?)?;
    let request = json!({
        "repositories": [{
            "name": "worked-example",
            "endpoint": fixtures.join("worked_example_databank.json"),
            "kind": "DataBank"
        }],
        "domain": "weather",
        "requirements": requirements,
        "normalizer": "max",
        "ranker": "euclidean"
    });
    let mut response = agent.post(&format!("{base}/rank")).send_json(&request)?;
    println!("POST /rank -> {}", response.status());
    let body: serde_json::Value = response.body_mut().read_json()?;
    for entry in body["entries"].as_array().into_iter().flatten() {
        println!(
            "    #{} {} ({}) score {} mandatory {}/{}",
            entry["rank"],
            entry["serviceId"],
            entry["displayName"],
            entry["score"],
            entry["mandatoryFulfilled"],
            entry["mandatoryTotal"]
        );
    }

    let mut empty = request.clone();
    empty["repositories"] = json!([]);
    let mut bad = agent.post(&format!("{base}/rank")).send_json(&empty)?;
    println!(
        "POST /rank with no repositories -> {}: {}",
        bad.status(),
        bad.body_mut().read_to_string()?
    );
    Ok(())
}
