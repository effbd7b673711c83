use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use gravopt::metrics;

use crate::{Failure, UsageContext};

#[derive(Args)]
pub struct MetricsArgs {
    /// CSV with header `true_label,predicted_label`.
    csv: PathBuf,
    /// Label of the positive class. Detected from common names when omitted.
    #[arg(long)]
    positive_label: Option<String>,
    /// Directory for `report.json`.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

const POSITIVE_NAMES: [&str; 6] = ["positive", "pos", "1", "true", "yes", "p"];
const NEGATIVE_NAMES: [&str; 6] = ["negative", "neg", "0", "false", "no", "n"];

pub fn read_labels(path: &Path) -> Result<(Vec<String>, Vec<String>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = reader.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "true_label" || &headers[1] != "predicted_label" {
        bail!(
            "expected header `true_label,predicted_label`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        );
    }
    let (mut truth, mut pred) = (Vec::new(), Vec::new());
    for (n, row) in reader.records().enumerate() {
        let row = row.with_context(|| format!("row {}", n + 2))?;
        truth.push(row[0].to_string());
        pred.push(row[1].to_string());
    }
    if truth.is_empty() {
        bail!("{} has no data rows", path.display());
    }
    Ok((truth, pred))
}

/// Picks the positive label from conventional class names.
pub fn detect_positive(labels: &[&String]) -> Result<String> {
    let find = |names: &[&str]| {
        labels
            .iter()
            .find(|l| names.contains(&l.to_ascii_lowercase().as_str()))
            .copied()
    };
    if let Some(p) = find(&POSITIVE_NAMES) {
        return Ok(p.clone());
    }
    match (labels, find(&NEGATIVE_NAMES)) {
        ([a, b], Some(neg)) => Ok(if *a == neg { b } else { a }.to_string()),
        _ => Err(anyhow!(
            "cannot tell which label is positive among {labels:?}; pass --positive-label"
        )),
    }
}

pub fn run(args: MetricsArgs) -> Result<(), Failure> {
    let (truth, pred) = read_labels(&args.csv).usage()?;
    let mut distinct: Vec<&String> = truth.iter().chain(&pred).collect();
    distinct.sort();
    distinct.dedup();
    if distinct.len() > 2 {
        return Err(Failure::Usage(anyhow!(
            "binary labels expected, found {distinct:?}"
        )));
    }
    let positive = match args.positive_label {
        Some(p) => p,
        None => detect_positive(&distinct).usage()?,
    };
    let cm = metrics::confusion(&truth, &pred, &positive).usage()?;
    let report = metrics::report(&cm).usage()?;
    println!("{report}");

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let out = args.out_dir.join("report.json");
    let doc = serde_json::json!({ "positive_label": positive, "report": report });
    let mut text = serde_json::to_string_pretty(&doc).context("serializing report")?;
    text.push('\n');
    std::fs::write(&out, text).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}
