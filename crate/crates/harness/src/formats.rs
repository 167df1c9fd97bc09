//! CSV report schemas, writers and validators.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! rerun with identical inputs produces identical bytes.

use anyhow::{bail, Context, Result};
use arches_core::control::{ControlMessage, Trigger};
use arches_core::perturb::{DegradationTable, TrendScore};
use arches_core::pipeline::{Kpm, SlotOutcome};
use arches_core::policy::{ConfusionMatrix, FeatureImportance, PolicyMetrics};
use arches_core::selection::{ClusterResult, CorrelationMatrix};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnType {
    Int,
    Float,
    /// Float or empty (undefined value).
    OptFloat,
    Bool,
    Text,
    OneOf(&'static [&'static str]),
}

#[derive(Debug, Clone, Copy)]
pub struct Schema {
    pub name: &'static str,
    pub columns: &'static [(&'static str, ColumnType)],
}

use ColumnType::*;

const REGIMES: &[&str] = &["good", "poor"];
const EXPERTS: &[&str] = &["mmse", "ai"];
const RUNS: &[&str] = &["always_mmse", "always_ai", "arches"];
const EXECS: &[&str] = &["concurrent", "selected"];

pub const KPMS: Schema = Schema {
    name: "kpms.csv",
    columns: &[
        ("slot", Int),
        ("regime", OneOf(REGIMES)),
        ("mode", Int),
        ("expert", OneOf(EXPERTS)),
        ("crc_pass", Bool),
        ("phy_throughput", Float),
        ("mcs_index", Int),
        ("pdu_length", Int),
        ("ndi", Int),
        ("rsrp", Float),
        ("code_rate", Float),
        ("qam_order", Int),
        ("num_cb", Int),
        ("tb_size", Int),
        ("sinr", Float),
        ("snr_db", Float),
        ("mac_throughput", Float),
        ("lcid4_throughput", Float),
        ("mac_rx_bytes", Int),
        ("lcid4_rx_bytes", Int),
    ],
};

pub const DEGRADATION: Schema = Schema {
    name: "degradation.csv",
    columns: &[
        ("kpm", Text),
        ("rho", Float),
        ("mean", Float),
        ("ci95", Float),
        ("n", Int),
    ],
};

pub const TRENDS: Schema = Schema {
    name: "trends.csv",
    columns: &[
        ("kpm", Text),
        ("spearman", OptFloat),
        ("retained", Bool),
        ("degenerate", Bool),
    ],
};

pub const CLUSTERS: Schema = Schema {
    name: "clusters.csv",
    columns: &[
        ("group", Text),
        ("cluster", Int),
        ("kpm", Text),
        ("representative", Bool),
    ],
};

pub const FINAL_KPMS: Schema = Schema {
    name: "final_kpms.csv",
    columns: &[("kpm", Text)],
};

pub const MODE_TRACE: Schema = Schema {
    name: "mode_trace.csv",
    columns: &[
        ("decided_at", Int),
        ("deliverable_at", Int),
        ("mode", Int),
        ("trigger", OneOf(&["policy", "failsafe"])),
    ],
};

pub const THROUGHPUT: Schema = Schema {
    name: "throughput.csv",
    columns: &[
        ("slot", Int),
        ("regime", OneOf(REGIMES)),
        ("always_mmse", Float),
        ("always_ai", Float),
        ("arches", Float),
    ],
};

pub const SLOT_COSTS: Schema = Schema {
    name: "slot_costs.csv",
    columns: &[
        ("run", OneOf(RUNS)),
        ("slot", Int),
        ("compute_us", Float),
        ("power_w", Float),
        ("utilization_pct", Float),
    ],
};

pub const RESOURCES: Schema = Schema {
    name: "resources.csv",
    columns: &[
        ("run", OneOf(RUNS)),
        ("exec", OneOf(EXECS)),
        ("slots", Int),
        ("median_power_w", Float),
        ("mean_power_w", Float),
        ("median_utilization_pct", Float),
        ("mean_utilization_pct", Float),
        ("median_compute_us", Float),
        ("mean_compute_us", Float),
        ("energy_j", Float),
        ("decoded_bytes", Int),
    ],
};

pub const METRICS: Schema = Schema {
    name: "metrics.csv",
    columns: &[
        ("tp", Int),
        ("fn", Int),
        ("fp", Int),
        ("tn", Int),
        ("accuracy", OptFloat),
        ("precision", OptFloat),
        ("specificity", OptFloat),
        ("recall", OptFloat),
        ("f1", OptFloat),
    ],
};

pub const IMPORTANCE: Schema = Schema {
    name: "importance.csv",
    columns: &[("feature", Text), ("importance", Float)],
};

pub const FIXTURE_CHECKS: Schema = Schema {
    name: "reproduce.csv",
    columns: &[
        ("fixture", Text),
        ("check", Text),
        ("expected", Text),
        ("observed", Text),
        ("pass", Bool),
    ],
};

/// Every fixed-header schema, for `report` validation.
pub const ALL: [Schema; 12] = [
    KPMS,
    DEGRADATION,
    TRENDS,
    CLUSTERS,
    FINAL_KPMS,
    MODE_TRACE,
    THROUGHPUT,
    SLOT_COSTS,
    RESOURCES,
    METRICS,
    IMPORTANCE,
    FIXTURE_CHECKS,
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Buffered CSV table that checks every row against its schema width.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(schema: &Schema) -> Self {
        Table::with_header(schema.columns.iter().map(|c| c.0.to_string()).collect())
    }

    pub fn with_header(header: Vec<String>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(w.into_inner()?)
    }
}

macro_rules! row {
    ($($e:expr),* $(,)?) => { vec![$($e.to_string()),*] };
}

pub fn kpm_table(outcomes: &[SlotOutcome]) -> Table {
    let mut t = Table::new(&KPMS);
    for o in outcomes {
        let mut r = row![
            o.slot_index,
            o.regime.name(),
            o.mode.bit(),
            o.active_expert.name(),
            o.crc_pass,
        ];
        r.extend(Kpm::ALL.iter().map(|k| k.value(&o.kpm).to_string()));
        t.push(r);
    }
    t
}

pub fn degradation_table(d: &DegradationTable) -> Table {
    let mut t = Table::new(&DEGRADATION);
    for r in &d.rows {
        t.push(row![r.kpm, r.rho, r.mean, r.ci95, r.n]);
    }
    t
}

pub fn trend_table(scores: &[TrendScore]) -> Table {
    let mut t = Table::new(&TRENDS);
    for s in scores {
        t.push(row![s.kpm, opt(s.spearman), s.retained, s.degenerate]);
    }
    t
}

/// Square matrix with a leading `kpm` column, rows and columns in `order`.
pub fn matrix_table(m: &CorrelationMatrix, order: &[String]) -> Result<Table> {
    let m = m.reordered(order)?;
    let mut header = vec!["kpm".to_string()];
    header.extend(m.names.iter().cloned());
    let mut t = Table::with_header(header);
    for i in 0..m.len() {
        let mut r = vec![m.names[i].clone()];
        r.extend((0..m.len()).map(|j| opt(m.get(i, j))));
        t.push(r);
    }
    Ok(t)
}

pub fn cluster_table(groups: &[(&str, &ClusterResult)]) -> Table {
    let mut t = Table::new(&CLUSTERS);
    for (name, c) in groups {
        for (i, members) in c.clusters.iter().enumerate() {
            for m in members {
                let rep = c.representatives.get(i).is_some_and(|r| r == m);
                t.push(row![name, i, m, rep]);
            }
        }
    }
    t
}

pub fn final_kpm_table(set: &[String]) -> Table {
    let mut t = Table::new(&FINAL_KPMS);
    for k in set {
        t.push(row![k]);
    }
    t
}

pub fn mode_trace_table(trace: &[ControlMessage]) -> Table {
    let mut t = Table::new(&MODE_TRACE);
    for m in trace {
        let trigger = match m.trigger {
            Trigger::Policy => "policy",
            Trigger::Failsafe => "failsafe",
        };
        t.push(row![m.decided_at, m.deliverable_at, m.mode.bit(), trigger]);
    }
    t
}

pub fn metrics_table(cm: &ConfusionMatrix, m: &PolicyMetrics) -> Table {
    let mut t = Table::new(&METRICS);
    t.push(row![
        cm.tp,
        cm.fn_,
        cm.fp,
        cm.tn,
        opt(m.accuracy),
        opt(m.precision),
        opt(m.specificity),
        opt(m.recall),
        opt(m.f1),
    ]);
    t
}

pub fn importance_table(names: &[String], imp: &FeatureImportance) -> Table {
    let mut t = Table::new(&IMPORTANCE);
    for (n, w) in names.iter().zip(&imp.weights) {
        t.push(row![n, w]);
    }
    t
}

fn check_cell(ty: ColumnType, v: &str) -> bool {
    match ty {
        Int => v.parse::<i64>().is_ok(),
        Float => v.parse::<f64>().is_ok(),
        OptFloat => v.is_empty() || v.parse::<f64>().is_ok(),
        Bool => v == "true" || v == "false",
        Text => !v.is_empty(),
        OneOf(allowed) => allowed.contains(&v),
    }
}

/// Check header and per-column types. Returns the number of data rows.
pub fn validate(bytes: &[u8], schema: &Schema) -> Result<usize> {
    let mut r = csv::Reader::from_reader(bytes);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let want: Vec<&str> = schema.columns.iter().map(|c| c.0).collect();
    if header != want {
        bail!("{}: header {:?}, expected {:?}", schema.name, header, want);
    }
    let mut n = 0;
    for (i, rec) in r.records().enumerate() {
        let rec = rec.with_context(|| format!("{} row {}", schema.name, i + 1))?;
        for ((col, ty), v) in schema.columns.iter().zip(rec.iter()) {
            if !check_cell(*ty, v) {
                bail!("{} row {}: column {col} has invalid value '{v}'", schema.name, i + 1);
            }
        }
        n += 1;
    }
    Ok(n)
}

/// Validate a square correlation-matrix CSV.
pub fn validate_matrix(bytes: &[u8]) -> Result<usize> {
    let mut r = csv::Reader::from_reader(bytes);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("kpm") {
        bail!("matrix header must start with 'kpm'");
    }
    let names = &header[1..];
    let mut n = 0;
    for rec in r.records() {
        let rec = rec?;
        if rec.get(0) != names.get(n).map(String::as_str) {
            bail!("matrix row {} label does not match column order", n + 1);
        }
        for v in rec.iter().skip(1) {
            if !check_cell(OptFloat, v) {
                bail!("matrix row {}: invalid value '{v}'", n + 1);
            }
        }
        n += 1;
    }
    if n != names.len() {
        bail!("matrix has {n} rows for {} columns", names.len());
    }
    Ok(n)
}

pub fn schema_for(file_name: &str) -> Option<&'static Schema> {
    ALL.iter().find(|s| s.name == file_name)
}

/// Read a file and validate it by name (`corr_*.csv` files are matrices).
pub fn validate_file(path: &Path) -> Result<usize> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    if name.starts_with("corr_") {
        return validate_matrix(&bytes).with_context(|| name.to_string());
    }
    match schema_for(name) {
        Some(s) => validate(&bytes, s),
        None => bail!("no schema for {name}"),
    }
}
