//! Reference tables shipped with the crate and the checks run against them.

use crate::formats::{Table, FIXTURE_CHECKS};
use anyhow::{bail, Context, Result};
use arches_core::perturb::{monotonicity_filter, DegradationTable, DegradationRow, DEFAULT_TAU};
use arches_core::policy::ConfusionMatrix;
use arches_core::selection::{
    final_kpm_set, hcluster, pick_representatives, ClusterResult, CorrelationMatrix,
    DEFAULT_PRIORITY, DEFAULT_THRESHOLD,
};
use serde::Deserialize;
use std::path::{Path, PathBuf};

pub const DEGRADATION_FILE: &str = "fig5.csv";
pub const PHY_MATRIX_FILE: &str = "fig6a.csv";
pub const MAC_MATRIX_FILE: &str = "fig6b.csv";
pub const CONFUSION_FILE: &str = "confusion.csv";

/// Directory of the fixtures bundled with this crate.
pub fn default_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn read(dir: &Path, name: &str) -> Result<Vec<u8>> {
    let path = dir.join(name);
    std::fs::read(&path).with_context(|| format!("fixture {name} missing at {}", path.display()))
}

#[derive(Deserialize)]
struct MeanRow {
    kpm: String,
    rho: f64,
    mean: f64,
}

pub fn load_degradation(dir: &Path) -> Result<DegradationTable> {
    let bytes = read(dir, DEGRADATION_FILE)?;
    let mut rows = Vec::new();
    for r in csv::Reader::from_reader(bytes.as_slice()).deserialize() {
        let r: MeanRow = r.with_context(|| format!("parsing fixture {DEGRADATION_FILE}"))?;
        rows.push(DegradationRow {
            kpm: r.kpm,
            rho: r.rho,
            mean: r.mean,
            ci95: 0.0,
            n: 0,
        });
    }
    Ok(DegradationTable { rows })
}

/// Square matrix CSV: header `kpm,<names...>`, one labeled row per name.
pub fn parse_matrix(bytes: &[u8]) -> Result<CorrelationMatrix> {
    let mut r = csv::Reader::from_reader(bytes);
    let names: Vec<String> = r.headers()?.iter().skip(1).map(str::to_string).collect();
    let mut values = Vec::with_capacity(names.len() * names.len());
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.get(0) != names.get(i).map(String::as_str) {
            bail!("row {} label does not match column {}", i + 1, i + 1);
        }
        for v in rec.iter().skip(1) {
            values.push(v.trim().parse::<f64>().with_context(|| format!("value '{v}'"))?);
        }
    }
    Ok(CorrelationMatrix::from_dense(names, &values)?)
}

pub fn load_matrix(dir: &Path, name: &str) -> Result<CorrelationMatrix> {
    parse_matrix(&read(dir, name)?).with_context(|| format!("parsing fixture {name}"))
}

#[derive(Deserialize)]
struct ConfusionRow {
    tp: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    fp: usize,
    tn: usize,
}

pub fn load_confusion(dir: &Path) -> Result<ConfusionMatrix> {
    let bytes = read(dir, CONFUSION_FILE)?;
    let row: ConfusionRow = csv::Reader::from_reader(bytes.as_slice())
        .deserialize()
        .next()
        .with_context(|| format!("fixture {CONFUSION_FILE} has no data row"))?
        .with_context(|| format!("parsing fixture {CONFUSION_FILE}"))?;
    Ok(ConfusionMatrix {
        tp: row.tp,
        fn_: row.fn_,
        fp: row.fp,
        tn: row.tn,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub fixture: &'static str,
    pub check: String,
    pub expected: String,
    pub observed: String,
    pub pass: bool,
}

fn check(fixture: &'static str, check: impl Into<String>, expected: String, observed: String) -> Check {
    Check {
        fixture,
        check: check.into(),
        pass: expected == observed,
        expected,
        observed,
    }
}

fn partition(c: &ClusterResult) -> String {
    let mut parts: Vec<String> = c.clusters.iter().map(|m| format!("{{{}}}", m.join(" "))).collect();
    parts.sort();
    parts.join(" ")
}

fn set(names: &[&str]) -> String {
    let mut v: Vec<&str> = names.to_vec();
    v.sort();
    format!("{{{}}}", v.join(" "))
}

pub struct Reproduction {
    pub checks: Vec<Check>,
    pub phy: ClusterResult,
    pub mac: ClusterResult,
}

impl Reproduction {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&FIXTURE_CHECKS);
        for c in &self.checks {
            t.push(vec![
                c.fixture.to_string(),
                c.check.clone(),
                c.expected.clone(),
                c.observed.clone(),
                c.pass.to_string(),
            ]);
        }
        t
    }
}

/// Run every fixture check. Errors only when a fixture cannot be read.
pub fn reproduce(dir: &Path) -> Result<Reproduction> {
    let mut checks = Vec::new();

    let table = load_degradation(dir)?;
    for s in monotonicity_filter(&table, DEFAULT_TAU)? {
        checks.push(check(
            DEGRADATION_FILE,
            format!("{} retained", s.kpm),
            "true".into(),
            s.retained.to_string(),
        ));
        let sign = s.spearman.map(|r| if r < 0.0 { "decreasing" } else { "increasing" });
        checks.push(check(
            DEGRADATION_FILE,
            format!("{} trend", s.kpm),
            "decreasing".into(),
            sign.unwrap_or("constant").to_string(),
        ));
    }

    let phy = pick_representatives(
        &hcluster(&load_matrix(dir, PHY_MATRIX_FILE)?, DEFAULT_THRESHOLD)?,
        &DEFAULT_PRIORITY,
    );
    let big = ["code_rate", "sinr", "qam_order", "num_cb", "mcs_index", "tb_size"];
    checks.push(check(
        PHY_MATRIX_FILE,
        "partition",
        [set(&big), set(&["ndi"]), set(&["pdu_length"]), set(&["rsrp"])].join(" "),
        partition(&phy),
    ));
    let rep = phy
        .clusters
        .iter()
        .position(|c| c.len() > 1)
        .map(|i| phy.representatives[i].clone())
        .unwrap_or_default();
    checks.push(check(PHY_MATRIX_FILE, "representative", "mcs_index".into(), rep));

    let mac = pick_representatives(
        &hcluster(&load_matrix(dir, MAC_MATRIX_FILE)?, DEFAULT_THRESHOLD)?,
        &DEFAULT_PRIORITY,
    );
    checks.push(check(
        MAC_MATRIX_FILE,
        "singletons",
        "5".into(),
        mac.clusters.iter().filter(|c| c.len() == 1).count().to_string(),
    ));

    let final_set = final_kpm_set(&[&phy, &mac]);
    checks.push(check(
        MAC_MATRIX_FILE,
        "final kpm set",
        [
            "phy_throughput",
            "mcs_index",
            "pdu_length",
            "ndi",
            "rsrp",
            "snr_db",
            "mac_throughput",
            "lcid4_throughput",
            "mac_rx_bytes",
            "lcid4_rx_bytes",
        ]
        .join(" "),
        final_set.join(" "),
    ));

    let m = load_confusion(dir)?.metrics();
    let four = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
    for (name, want, got) in [
        ("accuracy", "0.9948", m.accuracy),
        ("precision", "0.9756", m.precision),
        ("specificity", "0.9960", m.specificity),
        ("f1", "0.9816", m.f1),
    ] {
        checks.push(check(CONFUSION_FILE, name, want.into(), four(got)));
    }

    Ok(Reproduction { checks, phy, mac })
}
