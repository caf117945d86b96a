mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use proptest::prelude::*;
use qos_select::federation::{DefaultProxy, RepositoryProxy};
use qos_select::monitor::{
    self, Monitor, ProbeOutcome, ProbeSample, ProbeTargetConfig, WindowStats,
};
use qos_select::{QualityValue, RepositoryDescriptor};

fn target(id: &str, url: String, period_ms: u64) -> qos_select::monitor::ProbeTarget {
    ProbeTargetConfig {
        service_id: id.into(),
        display_name: format!("{id} service"),
        probe_url: url,
        domain: "weather".into(),
        period_ms,
        timeout_ms: 1000,
        window_size: 5,
    }
    .try_into()
    .unwrap()
}

#[test]
fn monitor_repository_contract() {
    let stub = scripted_stub(vec![Some(20)]);
    let monitor = Arc::new(
        Monitor::new(vec![target("airport", format!("http://{stub}/probe"), 50)]).unwrap(),
    );
    let handle = monitor.start();
    let deadline = Instant::now() + Duration::from_secs(5);
    while monitor.window("airport").unwrap().len() < 5 {
        assert!(Instant::now() < deadline);
        std::thread::sleep(Duration::from_millis(20));
    }
    handle.stop();
    let frozen = monitor.window("airport").unwrap().len();
    std::thread::sleep(Duration::from_millis(150));
    assert_eq!(
        monitor.window("airport").unwrap().len(),
        frozen,
        "probing continued after stop"
    );

    let addr = serve(monitor::router(Arc::clone(&monitor)));
    let repo = RepositoryDescriptor::monitor("live", format!("http://{addr}"));
    let records = DefaultProxy::default()
        .services_in_domain(&repo, "weather")
        .unwrap();
    assert_eq!(records.len(), 1);
    let r = &records[0];
    assert_eq!(r.display_name, "airport service");
    assert_eq!(r.value("CA"), QualityValue::Defined(1.0));
    assert!(r.value("ART").value().unwrap() >= 20.0);
    assert!(r.provenance.values().all(|p| p == &repo.endpoint));

    let other = DefaultProxy::default()
        .services_in_domain(&repo, "finance")
        .unwrap();
    assert!(other.is_empty());
}

#[test]
fn probe_timeout_counts_as_failure() {
    let slow = scripted_stub(vec![Some(500)]);
    let mut slow_target = target("slow", format!("http://{slow}/probe"), 1000);
    slow_target.timeout = Duration::from_millis(100);
    let monitor = Monitor::new(vec![slow_target]).unwrap();
    assert_eq!(monitor.probe_now("slow"), Some(ProbeOutcome::Failure));
    let attrs = monitor.attributes("slow").unwrap();
    assert_eq!(attrs.current_availability, QualityValue::Defined(0.0));
    assert_eq!(attrs.average_response_time, QualityValue::Undefined);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn window_keeps_the_newest_samples(
        capacity in 1usize..20,
        outcomes in prop::collection::vec(prop::option::weighted(0.7, 1.0..1000.0f64), 1..60),
    ) {
        let start = std::time::SystemTime::UNIX_EPOCH + Duration::from_secs(1_000_000);
        let mut window = WindowStats::new(capacity).unwrap();
        for (i, o) in outcomes.iter().enumerate() {
            let at = start + Duration::from_secs(i as u64);
            let sample = match o {
                Some(ms) => ProbeSample::success(at, *ms),
                None => ProbeSample::failure(at),
            };
            window.record(sample).unwrap();
        }
        let kept = &outcomes[outcomes.len().saturating_sub(capacity)..];
        prop_assert_eq!(window.len(), kept.len());
        let attrs = window.derive_attributes();
        let successes: Vec<f64> = kept.iter().flatten().copied().collect();
        let ca = successes.len() as f64 / kept.len() as f64;
        prop_assert_eq!(attrs.current_availability, QualityValue::Defined(ca));
        match successes.last() {
            Some(last) => {
                let mean = successes.iter().sum::<f64>() / successes.len() as f64;
                prop_assert!((attrs.average_response_time.value().unwrap() - mean).abs() <= 1e-9);
                prop_assert_eq!(attrs.current_response_time, QualityValue::Defined(*last));
            }
            None => {
                prop_assert_eq!(attrs.average_response_time, QualityValue::Undefined);
                prop_assert_eq!(attrs.current_response_time, QualityValue::Undefined);
            }
        }
    }
}
