//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test -p qos-select --test acceptance`.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use qos_select::api::{self, ApiState};
use qos_select::federation::{federate, DefaultProxy, InMemoryProxy, RepositoryProxy};
use qos_select::federation::{DataBankDocument, ServiceEntry};
use qos_select::monitor::{Monitor, ProbeOutcome, ProbeTargetConfig};
use qos_select::normalize::{normalize_column, normalize_data};
use qos_select::pipeline::{cross_prioritize, MandatoryCount};
use qos_select::rank::{rank_services, score};
use qos_select::{
    render_json, select, AttributeName, NormalizerId, QoSMatrix, QualityValue, RankerId,
    RepositoryDescriptor, Requirement, RequirementVector, SelectionRequest, ServiceRecord,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($msg)+));
        }
    };
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("golden normalization", golden_normalization),
        ("golden distance", golden_distance),
        ("golden ordering", golden_ordering),
        ("federation provenance", federation_provenance),
        ("oracle equivalence", oracle_equivalence),
        ("property suite", property_suite),
        ("monitor determinism", monitor_determinism),
        ("api/cli/library coherence", coherence),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(format!(
                "panicked: {:?}",
                p.downcast_ref::<String>()
                    .map(String::as_str)
                    .or(p.downcast_ref::<&str>().copied())
            ))
        });
        let elapsed = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!(
                "criterion {}: PASS {name} ({detail}) [{elapsed:.2}s]",
                i + 1
            ),
            Err(reason) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {reason} [{elapsed:.2}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn golden_normalization() -> Outcome {
    let (matrix, reqs) = worked_example();
    let (normalized, targets) =
        normalize_data(&matrix, &reqs, NormalizerId::MaxScale).map_err(|e| e.to_string())?;
    let targets = targets.targets();
    let mut cells = 0;
    let mut worst: f64 = 0.0;
    for (attr, (&got, &want)) in targets
        .iter()
        .zip(&PRINTED_REQUIREMENTS)
        .enumerate()
        .skip(1)
    {
        worst = worst.max((got - want).abs());
        ensure!(
            (got - want).abs() <= 0.01,
            "target q{} = {got:.4}, printed {want}",
            attr + 1
        );
        cells += 1;
    }
    let mut target_cells = cells;
    cells = 0;
    for (i, id) in EXAMPLE_SERVICES.iter().enumerate() {
        let row = normalized
            .rows
            .iter()
            .find(|r| r.service_id == *id)
            .ok_or(format!("{id} missing"))?;
        for (attr, &printed) in PRINTED_SERVICES[i].iter().enumerate().skip(1) {
            match (printed, row.values[attr]) {
                (None, QualityValue::Undefined) => {}
                (None, v) => {
                    return Err(format!("{id} q{} should be undefined, got {v:?}", attr + 1))
                }
                (Some(_), QualityValue::Undefined) => {
                    return Err(format!("{id} q{} undefined", attr + 1))
                }
                (Some(want), QualityValue::Defined(got)) => {
                    worst = worst.max((got - want).abs());
                    ensure!(
                        (got - want).abs() <= 0.01,
                        "{id} q{} = {got:.4}, printed {want}",
                        attr + 1
                    );
                    cells += 1;
                }
            }
        }
    }
    ensure!(
        cells == 27 && target_cells == 7,
        "compared {cells} service cells, {target_cells} targets"
    );
    target_cells += cells;
    Ok(format!("{target_cells} cells, max deviation {worst:.4}"))
}

fn golden_distance() -> Outcome {
    let ws4: Vec<QualityValue> = PRINTED_SERVICES[3]
        .iter()
        .map(|v| QualityValue::from(*v))
        .collect();
    let d = score(&PRINTED_REQUIREMENTS, &ws4, RankerId::Euclidean).map_err(|e| e.to_string())?;
    ensure!((d - 1.0198).abs() <= 0.0005, "WS4 distance {d:.5}");
    Ok(format!("WS4 distance {d:.5}"))
}

fn golden_ordering() -> Outcome {
    let (matrix, reqs) = worked_example();
    let result = select(&matrix, &reqs, NormalizerId::MaxScale, RankerId::Euclidean)
        .map_err(|e| e.to_string())?;
    let score_order = result.score_order();
    ensure!(
        score_order == ["WS1", "WS4", "WS3", "WS2"],
        "score order {score_order:?}"
    );
    let fixture_order = result.service_ids();
    ensure!(
        fixture_order == ["WS1", "WS2", "WS4", "WS3"],
        "fixture cross-priority {fixture_order:?}"
    );
    let counts: Vec<usize> = EXAMPLE_SERVICES
        .iter()
        .map(|id| {
            result
                .entries
                .iter()
                .find(|e| e.service_id == *id)
                .unwrap()
                .mandatory_fulfilled
        })
        .collect();
    ensure!(
        counts == [5, 5, 3, 3],
        "fixture mandatory counts {counts:?}"
    );

    let projected = matrix.project(&reqs.attributes());
    let (normalized, targets) = normalize_data(&projected, &reqs, NormalizerId::MaxScale).unwrap();
    let ranking = rank_services(&normalized, &targets, RankerId::Euclidean);
    let injected: BTreeMap<String, MandatoryCount> =
        [("WS1", 5), ("WS2", 5), ("WS3", 3), ("WS4", 3)]
            .into_iter()
            .map(|(id, n)| {
                (
                    id.to_owned(),
                    MandatoryCount {
                        fulfilled: n,
                        total: 8,
                    },
                )
            })
            .collect();
    let injected_order: Vec<String> =
        cross_prioritize(&ranking, &injected, RankerId::Euclidean.polarity())
            .into_iter()
            .map(|e| e.service_id)
            .collect();
    ensure!(
        injected_order == ["WS1", "WS2", "WS4", "WS3"],
        "injected cross-priority {injected_order:?}"
    );
    Ok(
        "score WS1,WS4,WS3,WS2; cross-priority WS1,WS2,WS4,WS3 (fixture and injected counts)"
            .into(),
    )
}

fn weather_proxy() -> InMemoryProxy {
    InMemoryProxy::default()
        .with("DataBank1", data_bank("weather_databank1.json"))
        .with("Monitor1", data_bank("weather_monitor1.json"))
        .with("Monitor2", data_bank("weather_monitor2.json"))
}

fn repo(name: &str) -> RepositoryDescriptor {
    if name.starts_with("Monitor") {
        RepositoryDescriptor::monitor(name, name)
    } else {
        RepositoryDescriptor::data_bank(name, name)
    }
}

fn provenance_of(order: &[&str]) -> Result<BTreeMap<String, String>, String> {
    let request = SelectionRequest {
        repositories: order.iter().map(|n| repo(n)).collect(),
        domain: "weather".into(),
        requirements: requirements("weather_requirements.json"),
        normalizer: NormalizerId::MaxScale,
        ranker: RankerId::Euclidean,
        bypass_cache: false,
    };
    let result =
        qos_select::rank_for_repositories(&request, &weather_proxy()).map_err(|e| e.to_string())?;
    let diag = result
        .diagnostics
        .services
        .iter()
        .find(|s| s.service_id == "AirportWeatherCheck")
        .ok_or("AirportWeatherCheck missing from result")?;
    Ok(diag
        .provenance
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect())
}

fn federation_provenance() -> Outcome {
    let first = provenance_of(&["Monitor1", "Monitor2", "DataBank1"])?;
    for (attr, source) in &first {
        let want = if ["ART", "CRT", "CA"].contains(&attr.as_str()) {
            "Monitor1"
        } else {
            "DataBank1"
        };
        ensure!(
            source == want,
            "order 1: {attr} from {source}, expected {want}"
        );
    }
    ensure!(
        first.len() == 7,
        "order 1: {} attributes attributed",
        first.len()
    );
    let second = provenance_of(&["Monitor2", "Monitor1", "DataBank1"])?;
    ensure!(
        second["CRT"] == "Monitor2",
        "order 2: CRT from {}",
        second["CRT"]
    );
    ensure!(
        second["ART"] == "Monitor1",
        "order 2: ART from {}",
        second["ART"]
    );
    ensure!(
        second["CA"] == "Monitor1",
        "order 2: CA from {}",
        second["CA"]
    );
    Ok("both repository orders attribute every cell as expected".into())
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1ec7);
    let cases = 1000;
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let n = rng.random_range(1..=12);
        let a: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let mut b: Vec<Option<f64>> = (0..n)
            .map(|_| rng.random_bool(0.85).then(|| rng.random::<f64>()))
            .collect();
        if case % 10 == 0 {
            b = a.iter().map(|&x| Some(x)).collect();
        }
        let cells: Vec<QualityValue> = b.iter().map(|v| QualityValue::from(*v)).collect();
        for alg in RankerId::ALL {
            let got = score(&a, &cells, alg).ok();
            let want = oracle_score(&a, &b, alg);
            match (got, want) {
                (None, None) => {}
                (Some(g), Some(w)) => {
                    worst = worst.max((g - w).abs());
                    ensure!(
                        (g - w).abs() <= 1e-12,
                        "{alg} case {case}: {g} vs oracle {w}"
                    );
                }
                _ => return Err(format!("{alg} case {case}: {got:?} vs oracle {want:?}")),
            }
        }
    }
    for case in 0..cases {
        let n = rng.random_range(1..=10);
        let scale = [1.0, 1e3, 1e-3][case % 3];
        let mut column: Vec<Option<f64>> = (0..n)
            .map(|_| rng.random_bool(0.85).then(|| rng.random::<f64>() * scale))
            .collect();
        let mut target = rng.random::<f64>() * scale;
        match case % 25 {
            0 => {
                column.iter_mut().flatten().for_each(|v| *v = 0.0);
                target = 0.0;
            }
            1 => {
                column.iter_mut().flatten().for_each(|v| *v = 4.0);
                target = 4.0;
            }
            _ => {}
        }
        let cells: Vec<QualityValue> = column.iter().map(|v| QualityValue::from(*v)).collect();
        for alg in NormalizerId::ALL {
            let got = normalize_column(&cells, target, alg).map_err(|e| e.to_string())?;
            let (want, want_target) = oracle_normalize(&column, target, alg);
            let pairs = got
                .values
                .iter()
                .map(|v| v.value())
                .zip(want)
                .chain([(Some(got.target), Some(want_target))]);
            for (g, w) in pairs {
                match (g, w) {
                    (None, None) => {}
                    (Some(g), Some(w)) => {
                        worst = worst.max((g - w).abs());
                        ensure!(
                            (g - w).abs() <= 1e-12,
                            "{alg} case {case}: {g} vs oracle {w}"
                        );
                    }
                    _ => return Err(format!("{alg} case {case}: definedness differs")),
                }
            }
        }
    }
    Ok(format!(
        "{cases} cases per algorithm, max deviation {worst:.1e}"
    ))
}

fn check(
    result: Result<(), proptest::test_runner::TestError<impl std::fmt::Debug>>,
    name: &str,
) -> Result<(), String> {
    result.map_err(|e| format!("({name}) {e}"))
}

fn column_strategy() -> impl Strategy<Value = (Vec<Option<f64>>, f64)> {
    (
        prop::collection::vec(prop::option::weighted(0.85, 0.0..1000.0f64), 1..10),
        0.0..1000.0f64,
    )
}

fn to_cells(column: &[Option<f64>]) -> Vec<QualityValue> {
    column.iter().map(|v| QualityValue::from(*v)).collect()
}

fn random_matrix() -> impl Strategy<Value = (QoSMatrix, RequirementVector)> {
    let attrs = ["a", "b", "c", "d"];
    let row = prop::collection::vec(prop::option::weighted(0.8, 0.0..100.0f64), attrs.len());
    (
        prop::collection::vec(row, 1..8),
        prop::collection::vec((0.0..100.0f64, any::<bool>(), any::<bool>()), attrs.len()),
    )
        .prop_map(move |(rows, reqs)| {
            let columns: Vec<AttributeName> = attrs
                .iter()
                .map(|a| AttributeName::new(*a).unwrap())
                .collect();
            let rows = rows
                .into_iter()
                .enumerate()
                .map(|(i, values)| {
                    let mut r = ServiceRecord::new(format!("s{i}"));
                    for (c, v) in columns.iter().zip(values) {
                        r.values.insert(c.clone(), QualityValue::from(v));
                    }
                    r
                })
                .collect();
            let reqs = RequirementVector::new(
                attrs
                    .iter()
                    .zip(reqs)
                    .map(|(a, (t, max, m))| Requirement::new(*a, t, max, m).unwrap())
                    .collect(),
            )
            .unwrap();
            (QoSMatrix { columns, rows }, reqs)
        })
}

fn property_suite() -> Outcome {
    let cases = 500;
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });

    check(
        runner.run(&column_strategy(), |(column, target)| {
            for alg in NormalizerId::ALL {
                let n = normalize_column(&to_cells(&column), target, alg).unwrap();
                for v in n.values.iter().filter_map(|v| v.value()).chain([n.target]) {
                    prop_assert!((0.0..=1.0).contains(&v), "{alg} produced {v}");
                }
            }
            Ok(())
        }),
        "a: range",
    )?;

    check(
        runner.run(&column_strategy(), |(column, target)| {
            for alg in NormalizerId::ALL {
                let n = normalize_column(&to_cells(&column), target, alg).unwrap();
                let pairs: Vec<(f64, f64)> = column
                    .iter()
                    .zip(&n.values)
                    .filter_map(|(raw, out)| raw.zip(out.value()))
                    .chain([(target, n.target)])
                    .collect();
                for &(x, nx) in &pairs {
                    for &(y, ny) in &pairs {
                        if x <= y {
                            prop_assert!(nx <= ny, "{alg}: {x}->{nx} but {y}->{ny}");
                        }
                    }
                }
            }
            Ok(())
        }),
        "b: monotonicity",
    )?;

    let vectors = (1usize..10).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0..=1.0f64, n),
            prop::collection::vec(prop::option::weighted(0.8, 0.0..=1.0f64), n),
        )
    });

    check(
        runner.run(&vectors, |(a, b)| {
            let cells = to_cells(&b);
            match (
                score(&a, &cells, RankerId::Euclidean),
                score(&a, &cells, RankerId::InverseEuclidean),
            ) {
                (Ok(d), Ok(inv)) => prop_assert_eq!(inv, 1.0 / (1.0 + d)),
                (Err(_), Err(_)) => {}
                other => return Err(TestCaseError::fail(format!("{other:?}"))),
            }
            Ok(())
        }),
        "c: inverse euclidean",
    )?;

    check(
        runner.run(&random_matrix(), |(matrix, reqs)| {
            let counts = |alg| {
                select(&matrix, &reqs, alg, RankerId::Cosine)
                    .unwrap()
                    .entries
                    .into_iter()
                    .map(|e| (e.service_id, e.mandatory_fulfilled, e.mandatory_total))
                    .collect::<BTreeSet<_>>()
            };
            let first = counts(NormalizerId::MaxScale);
            for alg in NormalizerId::ALL {
                prop_assert_eq!(&counts(alg), &first);
            }
            Ok(())
        }),
        "d: mandatory invariance",
    )?;

    check(
        runner.run(&vectors, |(a, b)| {
            let (kept_a, kept_b): (Vec<f64>, Vec<f64>) = a
                .iter()
                .zip(&b)
                .filter_map(|(&x, y)| y.map(|y| (x, y)))
                .unzip();
            if kept_a.is_empty() {
                return Ok(());
            }
            let defined = |v: &[f64]| {
                v.iter()
                    .map(|x| QualityValue::Defined(*x))
                    .collect::<Vec<_>>()
            };
            for alg in RankerId::ALL {
                let with_gaps = score(&a, &to_cells(&b), alg).unwrap();
                let forward = score(&kept_a, &defined(&kept_b), alg).unwrap();
                let backward = score(&kept_b, &defined(&kept_a), alg).unwrap();
                prop_assert!(
                    (forward - backward).abs() <= 1e-12,
                    "{alg}: {forward} vs {backward}"
                );
                prop_assert!(
                    (with_gaps - forward).abs() <= 1e-12,
                    "{alg}: {with_gaps} vs {forward}"
                );
            }
            Ok(())
        }),
        "e: symmetry",
    )?;

    let repos = prop::collection::vec(
        prop::collection::btree_map(0u8..12, prop::option::weighted(0.7, 0.0..10.0f64), 0..6),
        1..5,
    );
    check(
        runner.run(&repos, |repos| {
            let mut proxy = InMemoryProxy::default();
            let mut descriptors = Vec::new();
            let mut union = BTreeSet::new();
            for (i, services) in repos.iter().enumerate() {
                let entries: Vec<ServiceEntry> = services
                    .iter()
                    .map(|(id, v)| {
                        union.insert(format!("svc{id}"));
                        ServiceEntry {
                            service_id: format!("svc{id}"),
                            display_name: String::new(),
                            qos: [(AttributeName::new("cost").unwrap(), QualityValue::from(*v))]
                                .into(),
                        }
                    })
                    .collect();
                let doc = DataBankDocument {
                    domains: [("d".to_owned(), entries)].into(),
                };
                proxy.insert(format!("repo{i}"), doc);
                descriptors.push(RepositoryDescriptor::data_bank(
                    format!("repo{i}"),
                    format!("repo{i}"),
                ));
            }
            let view = federate(&descriptors, "d", &proxy, false).unwrap();
            let merged: BTreeSet<String> = view
                .matrix
                .rows
                .iter()
                .map(|r| r.service_id.clone())
                .collect();
            prop_assert_eq!(merged, union);
            Ok(())
        }),
        "f: federated union",
    )?;

    Ok(format!("6 properties x {cases} cases"))
}

fn monitor_determinism() -> Outcome {
    let stub = scripted_stub(vec![Some(100), Some(200), Some(300)]);
    let config = ProbeTargetConfig {
        service_id: "stub".into(),
        display_name: String::new(),
        probe_url: format!("http://{stub}/probe"),
        domain: "test".into(),
        period_ms: 1000,
        timeout_ms: 2000,
        window_size: 50,
    };
    let monitor = Monitor::new(vec![config
        .clone()
        .try_into()
        .map_err(|e: qos_select::monitor::ConfigError| e.to_string())?])
    .map_err(|e| e.to_string())?;
    for _ in 0..3 {
        monitor.probe_now("stub");
    }
    let attrs = monitor.attributes("stub").ok_or("no window")?;
    let art = attrs.average_response_time.value().ok_or("ART undefined")?;
    let crt = attrs.current_response_time.value().ok_or("CRT undefined")?;
    let ca = attrs.current_availability.value().ok_or("CA undefined")?;
    ensure!((art - 200.0).abs() <= 10.0, "ART {art:.1} ms");
    ensure!((crt - 300.0).abs() <= 10.0, "CRT {crt:.1} ms");
    ensure!(ca == 1.0, "CA {ca}");

    let mut script = vec![Some(0); 9];
    script.push(None);
    let flaky = scripted_stub(script);
    let monitor = Monitor::new(vec![ProbeTargetConfig {
        service_id: "flaky".into(),
        probe_url: format!("http://{flaky}/probe"),
        window_size: 10,
        ..config
    }
    .try_into()
    .map_err(|e: qos_select::monitor::ConfigError| e.to_string())?])
    .map_err(|e| e.to_string())?;
    for _ in 0..10 {
        monitor.probe_now("flaky");
    }
    let failures = monitor
        .window("flaky")
        .ok_or("no window")?
        .samples()
        .filter(|s| matches!(s.outcome, ProbeOutcome::Failure))
        .count();
    ensure!(failures == 1, "{failures} failures recorded");
    let ca9 = monitor
        .attributes("flaky")
        .and_then(|a| a.current_availability.value())
        .ok_or("CA undefined")?;
    ensure!(ca9 == 0.9, "CA {ca9}");
    Ok(format!(
        "ART {art:.1} ms, CRT {crt:.1} ms, CA {ca}, 9/10 window CA {ca9}"
    ))
}

fn coherence() -> Outcome {
    let cases = [
        (
            vec![RepositoryDescriptor::data_bank(
                fixture("worked_example_databank.json")
                    .display()
                    .to_string(),
                fixture("worked_example_databank.json")
                    .display()
                    .to_string(),
            )],
            "weather",
            "worked_example_requirements.json",
            NormalizerId::MaxScale,
            RankerId::Euclidean,
        ),
        (
            [
                "weather_monitor2.json",
                "weather_monitor1.json",
                "weather_databank1.json",
            ]
            .iter()
            .map(|f| {
                let path = fixture(f).display().to_string();
                if f.contains("monitor") {
                    RepositoryDescriptor::monitor(path.clone(), path)
                } else {
                    RepositoryDescriptor::data_bank(path.clone(), path)
                }
            })
            .collect(),
            "weather",
            "weather_requirements.json",
            NormalizerId::MinMaxScale,
            RankerId::Cosine,
        ),
    ];
    let proxy: Arc<dyn RepositoryProxy> = Arc::new(DefaultProxy::default());
    let addr = serve(api::router(ApiState::new(Vec::new(), Arc::clone(&proxy))));
    let agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .new_agent();
    for (repositories, domain, reqs_file, normalizer, ranker) in cases {
        let request = SelectionRequest {
            repositories: repositories.clone(),
            domain: domain.into(),
            requirements: requirements(reqs_file),
            normalizer,
            ranker,
            bypass_cache: false,
        };
        let library = render_json(
            &qos_select::rank_for_repositories(&request, &*proxy).map_err(|e| e.to_string())?,
        );

        let mut response = agent
            .post(&format!("http://{addr}/rank"))
            .header("content-type", "application/json")
            .send(render_json(&request))
            .map_err(|e| e.to_string())?;
        ensure!(
            response.status() == 200,
            "POST /rank returned {}",
            response.status()
        );
        let http = response
            .body_mut()
            .read_to_string()
            .map_err(|e| e.to_string())?;

        let mut args = vec!["rank".to_owned(), "--repos".to_owned()];
        for r in &repositories {
            let prefix = match r.kind {
                qos_select::RepositoryKind::Monitor => "monitor=",
                qos_select::RepositoryKind::DataBank => "databank=",
            };
            args.push(format!("{prefix}{}", r.endpoint));
        }
        args.extend([
            "--domain".into(),
            domain.into(),
            "--requirements".into(),
            fixture(reqs_file).display().to_string(),
            "--normalizer".into(),
            normalizer.id().to_string(),
            "--ranker".into(),
            ranker.id().to_string(),
            "--json".into(),
        ]);
        let output = Command::new(env!("CARGO_BIN_EXE_qos-select"))
            .args(&args)
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(
            output.status.success(),
            "rank --json exited {:?}",
            output.status.code()
        );
        let cli = String::from_utf8(output.stdout).map_err(|e| e.to_string())?;

        ensure!(
            library == http,
            "POST /rank body differs from library output"
        );
        ensure!(
            library == cli,
            "rank --json output differs from library output"
        );
    }
    Ok("2 scenarios byte-identical across library, POST /rank and rank --json".into())
}
