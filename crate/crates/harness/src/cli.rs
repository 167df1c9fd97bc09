//! Command-line front end.

use crate::config::{ConfigFile, Settings};
use crate::experiment::{
    parse_exec, run_experiment, sweep_points, throughput_series, train_policy, ExperimentSpec,
    PolicySource, ResourceReport, RunKind,
};
use crate::formats::{self, Table};
use crate::svg::{cdf_chart, line_chart, Series};
use crate::threaded::run_two_context;
use crate::{fixtures, Status};
use anyhow::{bail, Context, Result};
use arches_core::control::{Controller, RunLog};
use arches_core::perturb::{monotonicity_filter, DegradationTable, DEFAULT_TAU};
use arches_core::pipeline::{ExecutionMode, Kpm, KpmRecord};
use arches_core::policy::serialize;
use arches_core::selection::{
    final_kpm_set, hcluster, pearson, pearson_matrix, pick_representatives, DEFAULT_PRIORITY,
    DEFAULT_THRESHOLD,
};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "arches", version, about = "Expert-switching uplink simulator harness")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// concurrent or selected.
    #[arg(long, global = true, default_value = "selected")]
    pub exec: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Perturbation sweep: degradation table and monotonicity trends.
    Sweep {
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
    },
    /// Correlation clustering of the pooled sweep records.
    Select {
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Train the switching tree on oracle-labeled simulator data.
    Train,
    /// Closed-loop experiment with always-MMSE and always-AI baselines.
    Run {
        /// tree:<path>, fixed:<0|1> or oracle.
        #[arg(long, default_value = "oracle")]
        policy: String,
        /// Run the control application on its own thread.
        #[arg(long)]
        two_context: bool,
    },
    /// Check the bundled reference tables.
    Reproduce {
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
    /// Validate the CSVs in a directory and render plots from them.
    Report {
        /// Directory to read (defaults to --out).
        #[arg(long)]
        from: Option<PathBuf>,
    },
}

/// Files written by a command; removed again if the command fails.
pub struct Outputs {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            created_dir,
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    pub fn table(&mut self, name: &str, t: &Table) -> Result<()> {
        self.write(name, &t.to_bytes()?)
    }

    pub fn discard(self) {
        for p in &self.written {
            let _ = std::fs::remove_file(p);
        }
        if self.created_dir {
            let _ = std::fs::remove_dir(&self.dir);
        }
    }
}

fn settings(common: &Common) -> Result<Settings> {
    let file = match &common.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    file.resolve(common.seed)
}

pub fn run(cli: Cli) -> Result<Status> {
    let s = settings(&cli.common)?;
    let exec = parse_exec(&cli.common.exec)?;
    if let Command::Report { from } = &cli.command {
        let from = from.clone().unwrap_or_else(|| cli.common.out.clone());
        let mut out = Outputs::new(&cli.common.out)?;
        return match report(&from, &mut out) {
            Ok(()) => Ok(Status::Ok),
            Err(e) => {
                out.discard();
                Err(e)
            }
        };
    }
    let mut out = Outputs::new(&cli.common.out)?;
    let result = match &cli.command {
        Command::Sweep { tau } => sweep_cmd(&s, *tau, &mut out),
        Command::Select { threshold } => select_cmd(&s, *threshold, &mut out),
        Command::Train => train_cmd(&s, exec, &mut out),
        Command::Run { policy, two_context } => run_cmd(s, exec, policy, *two_context, &mut out),
        Command::Reproduce { fixtures } => reproduce_cmd(fixtures.as_deref(), &mut out),
        Command::Report { .. } => unreachable!(),
    };
    if result.is_err() {
        out.discard();
    }
    result
}

fn sweep_cmd(s: &Settings, tau: f64, out: &mut Outputs) -> Result<Status> {
    let points = sweep_points(s)?;
    let table = DegradationTable::from_records(&points, &Kpm::ALL);
    let trends = monotonicity_filter(&table, tau)?;
    out.table(formats::DEGRADATION.name, &formats::degradation_table(&table))?;
    out.table(formats::TRENDS.name, &formats::trend_table(&trends))?;
    out.write("degradation.svg", degradation_plot(&table).as_bytes())?;
    for t in &trends {
        let r = t.spearman.map(|r| format!("{r:.4}")).unwrap_or_else(|| "undefined".into());
        println!("{} spearman {} retained {}", t.kpm, r, t.retained);
    }
    Ok(Status::Ok)
}

/// Means normalized to their value at the first ρ point.
fn degradation_plot(table: &DegradationTable) -> String {
    let series: Vec<Series> = ["tb_size", "snr_db", "mac_throughput", "lcid4_throughput"]
        .iter()
        .map(|k| {
            let pts = table.series(k);
            let base = pts.first().map(|p| p.1).filter(|b| *b != 0.0).unwrap_or(1.0);
            Series {
                label: k.to_string(),
                points: pts.iter().map(|(r, m)| (*r, m / base)).collect(),
            }
        })
        .collect();
    line_chart("KPM degradation", "rho", "mean / mean at rho = 0", &series)
}

fn constant_kpms(records: &[KpmRecord], kpms: &[Kpm]) -> Vec<Kpm> {
    kpms.iter()
        .copied()
        .filter(|k| {
            let v: Vec<f64> = records.iter().map(|r| k.value(r)).collect();
            pearson(&v, &v).is_none()
        })
        .collect()
}

fn select_cmd(s: &Settings, threshold: f64, out: &mut Outputs) -> Result<Status> {
    let pooled: Vec<KpmRecord> = sweep_points(s)?.into_iter().flat_map(|p| p.1).collect();
    let mut groups = Vec::new();
    for (name, candidates) in [("phy", &Kpm::PHY_CANDIDATES[..]), ("mac", &Kpm::MAC_CANDIDATES[..])] {
        // Constant columns have no correlation; they stay out of clustering.
        let constant = constant_kpms(&pooled, candidates);
        for k in &constant {
            eprintln!("note: {} is constant in the pooled records and is not clustered", k.name());
        }
        let kpms: Vec<Kpm> = candidates.iter().copied().filter(|k| !constant.contains(k)).collect();
        if kpms.is_empty() {
            bail!("no {name} candidate KPM varies in the sweep records");
        }
        let m = pearson_matrix(&pooled, &kpms)?;
        let c = pick_representatives(&hcluster(&m, threshold)?, &DEFAULT_PRIORITY);
        out.table(&format!("corr_{name}.csv"), &formats::matrix_table(&m, &c.leaf_order)?)?;
        groups.push((name, c));
    }
    let refs: Vec<(&str, &_)> = groups.iter().map(|(n, c)| (*n, c)).collect();
    out.table(formats::CLUSTERS.name, &formats::cluster_table(&refs))?;
    let set = final_kpm_set(&groups.iter().map(|g| &g.1).collect::<Vec<_>>());
    out.table(formats::FINAL_KPMS.name, &formats::final_kpm_table(&set))?;
    for (name, c) in &groups {
        for (members, rep) in c.clusters.iter().zip(&c.representatives) {
            println!("{name} cluster {{{}}} representative {rep}", members.join(" "));
        }
    }
    println!("final kpm set: {}", set.join(" "));
    Ok(Status::Ok)
}

fn train_cmd(s: &Settings, exec: ExecutionMode, out: &mut Outputs) -> Result<Status> {
    let r = train_policy(s, exec)?;
    out.write("tree.txt", serialize(&r.tree).as_bytes())?;
    out.table(formats::METRICS.name, &formats::metrics_table(&r.confusion, &r.metrics))?;
    out.table(
        formats::IMPORTANCE.name,
        &formats::importance_table(&r.tree.feature_names, &r.importance),
    )?;
    println!(
        "rows {} train {} test {} accuracy {}",
        r.dataset.len(),
        r.train.len(),
        r.test.len(),
        r.metrics.accuracy.map(|a| format!("{a:.4}")).unwrap_or_default()
    );
    if let Some(i) = r.importance.top() {
        println!("top feature {}", r.tree.feature_names[i]);
    }
    Ok(Status::Ok)
}

fn resources_row(run: RunKind, r: &ResourceReport) -> Vec<String> {
    vec![
        run.name().to_string(),
        r.exec.name().to_string(),
        r.slots.to_string(),
        r.median_power_w.to_string(),
        r.mean_power_w.to_string(),
        r.median_utilization_pct.to_string(),
        r.mean_utilization_pct.to_string(),
        r.median_compute_us.to_string(),
        r.mean_compute_us.to_string(),
        r.energy_j.to_string(),
        r.decoded_bytes.to_string(),
    ]
}

fn run_cmd(s: Settings, exec: ExecutionMode, policy: &str, two_context: bool, out: &mut Outputs) -> Result<Status> {
    let policy = PolicySource::parse(policy)?;
    let spec = ExperimentSpec { settings: s, exec, policy };
    let mut result = run_experiment(&spec)?;
    if two_context {
        let PolicySource::Tree(_) = &spec.policy else {
            bail!("--two-context needs a tree policy");
        };
        let (mut p, ctl) = crate::experiment::arches_setup(&spec)?;
        let Controller::Dapp { dapp, dies_after } = ctl else { unreachable!() };
        let log: RunLog = run_two_context(&mut p, &spec.timeline()?, dapp, dies_after)?;
        result.arches = log;
    }

    let cfg = &spec.settings.pipeline;
    let slot_us = cfg.geometry.slot_duration_us;
    out.table(formats::KPMS.name, &formats::kpm_table(&result.arches.outcomes))?;
    out.table(formats::MODE_TRACE.name, &formats::mode_trace_table(&result.arches.trace))?;

    let series: Vec<Vec<f64>> = RunKind::ALL
        .iter()
        .map(|&k| throughput_series(result.outcomes(k), cfg.window_slots, slot_us))
        .collect();
    let mut t = Table::new(&formats::THROUGHPUT);
    for (i, o) in result.arches.outcomes.iter().enumerate() {
        t.push(vec![
            o.slot_index.to_string(),
            o.regime.name().to_string(),
            series[0][i].to_string(),
            series[1][i].to_string(),
            series[2][i].to_string(),
        ]);
    }
    out.table(formats::THROUGHPUT.name, &t)?;

    let mut costs = Table::new(&formats::SLOT_COSTS);
    let mut res = Table::new(&formats::RESOURCES);
    for k in RunKind::ALL {
        for o in result.outcomes(k) {
            costs.push(vec![
                k.name().to_string(),
                o.slot_index.to_string(),
                o.slot_cost.exec_time_us.to_string(),
                o.slot_cost.gpu_power_w.to_string(),
                o.slot_cost.gpu_utilization_pct.to_string(),
            ]);
        }
        let r = result.resources(k);
        println!(
            "{} decoded_bytes {} median_power_w {} median_utilization_pct {}",
            k.name(),
            r.decoded_bytes,
            r.median_power_w,
            r.median_utilization_pct
        );
        res.push(resources_row(k, &r));
    }
    out.table(formats::SLOT_COSTS.name, &costs)?;
    out.table(formats::RESOURCES.name, &res)?;
    out.write("throughput.svg", throughput_plot(&series).as_bytes())?;
    let power: Vec<(String, Vec<f64>)> = RunKind::ALL
        .iter()
        .map(|&k| {
            let v = result.outcomes(k).iter().map(|o| o.slot_cost.gpu_power_w).collect();
            (k.name().to_string(), v)
        })
        .collect();
    out.write("power_cdf.svg", cdf_chart("GPU power model", "W", &power).as_bytes())?;
    Ok(Status::Ok)
}

fn throughput_plot(series: &[Vec<f64>]) -> String {
    let lines: Vec<Series> = RunKind::ALL
        .iter()
        .zip(series)
        .map(|(k, v)| Series {
            label: k.name().to_string(),
            points: v.iter().enumerate().map(|(i, y)| (i as f64, *y)).collect(),
        })
        .collect();
    line_chart("PHY throughput", "slot", "Mbps", &lines)
}

fn reproduce_cmd(dir: Option<&Path>, out: &mut Outputs) -> Result<Status> {
    let dir = dir.map(Path::to_path_buf).unwrap_or_else(fixtures::default_dir);
    let r = fixtures::reproduce(&dir)?;
    out.table(formats::FIXTURE_CHECKS.name, &r.table())?;
    for c in &r.checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        println!("{verdict} {} {}: expected {} observed {}", c.fixture, c.check, c.expected, c.observed);
    }
    let failed = r.checks.iter().filter(|c| !c.pass).count();
    Ok(if failed == 0 { Status::Ok } else { Status::ChecksFailed(failed) })
}

fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<Result<_, _>>()?;
    Ok((header, rows))
}

fn num(v: &str) -> f64 {
    v.parse().unwrap_or(f64::NAN)
}

fn report(from: &Path, out: &mut Outputs) -> Result<()> {
    let mut names: Vec<String> = std::fs::read_dir(from)
        .with_context(|| format!("reading {}", from.display()))?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    if names.is_empty() {
        bail!("no CSV reports in {}", from.display());
    }
    for n in &names {
        let rows = formats::validate_file(&from.join(n))?;
        println!("{n} valid, {rows} rows");
    }
    if names.iter().any(|n| n == formats::THROUGHPUT.name) {
        let (_, rows) = read_csv(&from.join(formats::THROUGHPUT.name))?;
        let series: Vec<Vec<f64>> = (2..5).map(|c| rows.iter().map(|r| num(&r[c])).collect()).collect();
        out.write("throughput.svg", throughput_plot(&series).as_bytes())?;
    }
    if names.iter().any(|n| n == formats::SLOT_COSTS.name) {
        let (_, rows) = read_csv(&from.join(formats::SLOT_COSTS.name))?;
        let power: Vec<(String, Vec<f64>)> = RunKind::ALL
            .iter()
            .map(|k| {
                let v = rows.iter().filter(|r| r[0] == k.name()).map(|r| num(&r[3])).collect();
                (k.name().to_string(), v)
            })
            .collect();
        out.write("power_cdf.svg", cdf_chart("GPU power model", "W", &power).as_bytes())?;
    }
    if names.iter().any(|n| n == formats::DEGRADATION.name) {
        let (_, rows) = read_csv(&from.join(formats::DEGRADATION.name))?;
        let rows = rows
            .iter()
            .map(|r| arches_core::perturb::DegradationRow {
                kpm: r[0].clone(),
                rho: num(&r[1]),
                mean: num(&r[2]),
                ci95: num(&r[3]),
                n: r[4].parse().unwrap_or(0),
            })
            .collect();
        out.write("degradation.svg", degradation_plot(&DegradationTable { rows }).as_bytes())?;
    }
    Ok(())
}
