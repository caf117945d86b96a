//! Helpers shared by the integration test targets: fixture loading,
//! direct-formula oracles and throwaway HTTP servers.
#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::http::StatusCode;
use axum::routing::get;
use axum::Router;
use qos_select::federation::DataBankDocument;
use qos_select::federation::{entries_to_records, merge};
use qos_select::{NormalizerId, QoSMatrix, RankerId, RepositoryDescriptor, RequirementVector};

pub const EXAMPLE_SERVICES: [&str; 4] = ["WS1", "WS2", "WS3", "WS4"];

/// Printed normalized requirement targets, attributes 1 to 8.
pub const PRINTED_REQUIREMENTS: [f64; 8] = [0.91, 1.0, 0.69, 0.33, 1.0, 0.62, 0.60, 0.50];

/// Printed normalized service rows, attributes 1 to 8. WS1 has no printed
/// value for attribute 8.
pub const PRINTED_SERVICES: [[Option<f64>; 8]; 4] = [
    [
        Some(0.67),
        Some(0.86),
        Some(0.56),
        Some(0.33),
        Some(0.50),
        Some(0.50),
        Some(0.6),
        None,
    ],
    [
        Some(0.12),
        Some(0.28),
        Some(0.44),
        Some(0.44),
        Some(0.75),
        Some(0.62),
        Some(0.4),
        Some(0.26),
    ],
    [
        Some(1.0),
        Some(0.31),
        Some(0.13),
        Some(0.178),
        Some(0.50),
        Some(1.00),
        Some(0.8),
        Some(0.41),
    ],
    [
        Some(0.76),
        Some(1.0),
        Some(1.0),
        Some(1.0),
        Some(0.75),
        Some(0.62),
        Some(1.0),
        Some(1.0),
    ],
];

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).expect("fixture readable")
}

pub fn data_bank(name: &str) -> DataBankDocument {
    DataBankDocument::from_json(&fixture_text(name)).expect("fixture parses")
}

pub fn requirements(name: &str) -> RequirementVector {
    serde_json::from_str(&fixture_text(name)).expect("requirements parse")
}

/// The raw worked-example matrix as a single DataBank would serve it.
pub fn worked_example() -> (QoSMatrix, RequirementVector) {
    let doc = data_bank("worked_example_databank.json");
    let repo = RepositoryDescriptor::data_bank("worked-example", "worked-example");
    let matrix = merge([entries_to_records(&repo, "weather", doc.entries("weather"))]);
    (matrix, requirements("worked_example_requirements.json"))
}

fn guarded(numerator: f64, denominator: f64) -> f64 {
    if denominator == 0.0 {
        0.0
    } else {
        numerator / denominator
    }
}

/// Normalizes `column` and `target` straight from the textbook definitions.
pub fn oracle_normalize(
    column: &[Option<f64>],
    target: f64,
    alg: NormalizerId,
) -> (Vec<Option<f64>>, f64) {
    let mut pool: Vec<f64> = column.iter().flatten().copied().collect();
    pool.push(target);
    let max = pool.iter().copied().fold(f64::MIN, f64::max);
    let min = pool.iter().copied().fold(f64::MAX, f64::min);
    let f = |v: f64| match alg {
        NormalizerId::MaxScale => guarded(v, max),
        NormalizerId::SumScale => guarded(v, pool.iter().sum()),
        NormalizerId::EuclideanScale => guarded(v, pool.iter().map(|x| x * x).sum::<f64>().sqrt()),
        NormalizerId::MinMaxScale => {
            if max == min {
                1.0
            } else {
                (v - min) / (max - min)
            }
        }
    };
    (column.iter().map(|v| v.map(f)).collect(), f(target))
}

/// Scores `b` against `a` with the vector-space formulas, dropping the
/// coordinates `b` leaves undefined. `None` when nothing is comparable.
pub fn oracle_score(a: &[f64], b: &[Option<f64>], alg: RankerId) -> Option<f64> {
    let (a, b): (Vec<f64>, Vec<f64>) = a
        .iter()
        .zip(b)
        .filter_map(|(&x, y)| y.map(|y| (x, y)))
        .unzip();
    if a.is_empty() {
        return None;
    }
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let sum_a: f64 = a.iter().sum();
    let sum_b: f64 = b.iter().sum();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let distance = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    Some(match alg {
        RankerId::Cosine => guarded(dot, norm(&a) * norm(&b)),
        RankerId::Jaccard => guarded(dot, sum_a + sum_b - dot),
        RankerId::Overlap => guarded(dot, sum_a.min(sum_b)),
        RankerId::Euclidean => distance,
        RankerId::Dice => guarded(2.0 * dot, sum_a + sum_b),
        RankerId::InverseEuclidean => 1.0 / (1.0 + distance),
    })
}

/// A router served on an ephemeral local port from its own runtime thread.
/// The server lives until the process exits.
pub fn serve(router: Router) -> SocketAddr {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .expect("runtime");
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0")
                .await
                .expect("bind");
            tx.send(listener.local_addr().expect("addr"))
                .expect("send addr");
            axum::serve(listener, router).await.expect("serve");
        });
    });
    rx.recv().expect("server started")
}

/// A probe target whose n-th request sleeps `delays_ms[n]` and answers 200,
/// or 500 when the scripted delay is `None`. Requests past the script repeat
/// its last step.
pub fn scripted_stub(script: Vec<Option<u64>>) -> SocketAddr {
    let calls = Arc::new(AtomicUsize::new(0));
    let script = Arc::new(script);
    let handler = move || {
        let calls = Arc::clone(&calls);
        let script = Arc::clone(&script);
        async move {
            let n = calls.fetch_add(1, Ordering::SeqCst).min(script.len() - 1);
            match script[n] {
                Some(ms) => {
                    tokio::time::sleep(Duration::from_millis(ms)).await;
                    StatusCode::OK
                }
                None => StatusCode::INTERNAL_SERVER_ERROR,
            }
        }
    };
    serve(Router::new().route("/probe", get(handler)))
}
