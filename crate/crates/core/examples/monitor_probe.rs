//! Probes a local endpoint a few times and prints the derived CRT, ART and CA.
//!
//! ```bash
//! cargo run -p qos-select --example monitor_probe
//! ```

use std::time::Duration;

use axum::http::StatusCode;
use axum::routing::get;
use axum::Router;
use qos_select::monitor::{Monitor, ProbeTargetConfig};

fn main() -> anyhow::Result<()> {
    let rt = tokio::runtime::Runtime::new()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))?;
    let addr = listener.local_addr()?;
    // answers after 40 ms, except every fourth request which fails
    let calls = std::sync::Arc::new(std::sync::atomic::AtomicUsize::new(0));
    let app = Router::new().route(
        "/ping",
        get(move || {
            let n = calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
            async move {
                tokio::time::sleep(Duration::from_millis(40)).await;
                if n % 4 == 3 {
                    StatusCode::SERVICE_UNAVAILABLE
                } else {
                    StatusCode::OK
                }
            }
        }),
    );
    rt.spawn(async move { axum::serve(listener, app).await });

    let target = ProbeTargetConfig {
        service_id: "ping".into(),
        display_name: "Ping service".into(),
        probe_url: format!("http://{addr}/ping"),
        domain: "demo".into(),
        period_ms: 100,
        timeout_ms: 1000,
        window_size: 8,
    };
    let monitor = Monitor::new(vec![target.try_into()?])?;
    for _ in 0..8 {
        let outcome = monitor.probe_now("ping").expect("known target");
        let a = monitor.attributes("ping").expect("known target");
        println!(
            "{outcome:?} -> CRT {:?} ART {:?} CA {:?}",
            a.current_response_time.value(),
            a.average_response_time.value(),
            a.current_availability.value()
        );
    }
    println!(
        "\nserved as: {}",
        serde_json::to_string_pretty(&monitor.services("demo"))?
    );
    Ok(())
}
