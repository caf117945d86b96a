//! Normalizes a small service portfolio with each of the four normalizers.
//!
//! ```bash
//! cargo run -p qos-select --example normalize_portfolio
//! ```

use qos_select::normalize::normalize_data;
use qos_select::{
    AttributeName, NormalizerId, QoSMatrix, QualityValue, Requirement, RequirementVector,
    ServiceRecord,
};

fn service(id: &str, cost: f64, latency: Option<f64>, uptime: f64) -> ServiceRecord {
    let mut r = ServiceRecord::new(id);
    r.values
        .insert(AttributeName::new("cost").unwrap(), cost.into());
    r.values
        .insert(AttributeName::new("latency").unwrap(), latency.into());
    r.values
        .insert(AttributeName::new("uptime").unwrap(), uptime.into());
    r
}

fn main() -> anyhow::Result<()> {
    let matrix = QoSMatrix {
        columns: ["cost", "latency", "uptime"]
            .iter()
            .map(|c| AttributeName::new(*c))
            .collect::<Result<_, _>>()?,
        rows: vec![
            service("geo-basic", 0.0, Some(220.0), 0.97),
            service("geo-pro", 25.0, Some(90.0), 0.999),
            // latency unknown: stays undefined and is left out of the pool
            service("geo-beta", 5.0, None, 0.9),
        ],
    };
    let requirements = RequirementVector::new(vec![
        Requirement::new("cost", 10.0, false, true)?,
        Requirement::new("latency", 150.0, false, false)?,
        Requirement::new("uptime", 0.99, true, true)?,
    ])?;

    for alg in NormalizerId::ALL {
        let (normalized, targets) = normalize_data(&matrix, &requirements, alg)?;
        println!(
            "{} ({}): {}",
            alg.name(),
            alg.formula(),
            fmt_row("target", &targets.targets())
        );
        for row in &normalized.rows {
            let values: Vec<f64> = row
                .values
                .iter()
                .map(|v| match v {
                    QualityValue::Defined(x) => *x,
                    QualityValue::Undefined => f64::NAN,
                })
                .collect();
            println!("    {}", fmt_row(&row.service_id, &values));
        }
    }
    Ok(())
}

fn fmt_row(label: &str, values: &[f64]) -> String {
    let cells: Vec<String> = values
        .iter()
        .map(|v| {
            if v.is_nan() {
                "  -  ".into()
            } else {
                format!("{v:.3}")
            }
        })
        .collect();
    format!("{label:<10} {}", cells.join("  "))
}
