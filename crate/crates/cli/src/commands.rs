// Errors are built once per invocation, so their size does not matter.
#![allow(clippy::result_large_err)]

use std::fs;
use std::path::{Path, PathBuf};

use glocalsync::analysis::{analyze, AnalysisError, AnalysisOptions, Dataset, Thresholds};
use glocalsync::json::to_canonical_string;
use glocalsync::network::NetworkError;
use glocalsync::pattern::{CatalogError, ItemId};
use glocalsync::sim::{Scenario, SimError};
use glocalsync::sync::log::{parse_log, replay_numbered, write_log, LogError, LogRecord};
use glocalsync::sync::{audit, SyncConfig, SyncState};
use glocalsync::{scope_of_item, Catalog, CountryCode, SiteNetwork};
use serde_json::json;
use thiserror::Error;

use crate::{Cli, Command, Options};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("missing --{0}")]
    Missing(&'static str),
    #[error("network {path}: {source}")]
    Network { path: PathBuf, source: NetworkError },
    #[error("catalog {path}: {source}")]
    Catalog { path: PathBuf, source: CatalogError },
    #[error("log {path}: {source}")]
    Log { path: PathBuf, source: LogError },
    #[error("dataset {path}: {source}")]
    Dataset {
        path: PathBuf,
        source: AnalysisError,
    },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error("unknown item {0}")]
    UnknownItem(String),
    #[error("invalid site code {0:?}")]
    SiteCode(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Other(String),
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: &Cli) -> Result<u8> {
    let o = &cli.opts;
    match &cli.command {
        Command::Validate => validate(o),
        Command::Scope { item } => scope(o, item),
        Command::Audit => cmd_audit(o),
        Command::Plan => plan(o),
        Command::Analyze => cmd_analyze(o),
        Command::Simulate { scenario } => simulate(o, scenario),
    }
}

fn load_network(o: &Options) -> Result<SiteNetwork> {
    let path = o.network.as_ref().ok_or(CliError::Missing("network"))?;
    SiteNetwork::load(path).map_err(|source| CliError::Network {
        path: path.clone(),
        source,
    })
}

fn load_catalog(o: &Options, net: &SiteNetwork) -> Result<Catalog> {
    let path = o.catalog.as_ref().ok_or(CliError::Missing("catalog"))?;
    Catalog::load(path, net).map_err(|source| CliError::Catalog {
        path: path.clone(),
        source,
    })
}

fn sync_config(o: &Options) -> SyncConfig {
    let mut config = SyncConfig::default();
    if let Some(d) = o.bounded_deadline {
        config.bounded_deadline = d;
    }
    config
}

fn load_log(
    o: &Options,
    net: &SiteNetwork,
    catalog: &Catalog,
) -> Result<(Vec<LogRecord>, SyncState)> {
    let path = o.log.as_ref().ok_or(CliError::Missing("log"))?;
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.clone(),
        source,
    })?;
    let log_err = |source| CliError::Log {
        path: path.clone(),
        source,
    };
    let records = parse_log(&text).map_err(log_err)?;
    let state = replay_numbered(net, catalog, sync_config(o), &records).map_err(log_err)?;
    Ok((records.into_iter().map(|(_, r)| r).collect(), state))
}

/// Writes `files` into the output directory when one is configured.
fn emit(o: &Options, files: &[(&str, &str)]) -> Result<()> {
    let Some(dir) = &o.out else {
        return Ok(());
    };
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.clone(),
        source,
    })?;
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|source| CliError::Write { path, source })?;
    }
    Ok(())
}

fn canonical<T: serde::Serialize>(value: &T) -> Result<String> {
    to_canonical_string(value).map_err(|e| CliError::Other(e.to_string()))
}

fn validate(o: &Options) -> Result<u8> {
    let net = load_network(o)?;
    println!(
        "network ok: {} sites, {} replicas, {} regions",
        net.len(),
        net.all_replicas().len(),
        net.regions().len()
    );
    if o.catalog.is_some() {
        let catalog = load_catalog(o, &net)?;
        println!("catalog ok: {} items", catalog.len());
    }
    Ok(0)
}

fn scope(o: &Options, item: &str) -> Result<u8> {
    let net = load_network(o)?;
    let catalog = load_catalog(o, &net)?;
    let content = catalog
        .get(&ItemId(item.to_string()))
        .ok_or_else(|| CliError::UnknownItem(item.to_string()))?;
    let scopes = scope_of_item(&net, content).map_err(|source| CliError::Network {
        path: o.network.clone().unwrap_or_default(),
        source,
    })?;
    let mut out = String::new();
    for (component, scope) in &scopes.components {
        out.push_str(&format!("# component {component}\n"));
        for r in scope.iter() {
            out.push_str(&format!("{}\t{}\n", r.country, r.language));
        }
    }
    out.push_str("# union\n");
    for r in scopes.union.iter() {
        out.push_str(&format!("{}\t{}\n", r.country, r.language));
    }
    print!("{out}");
    let json = canonical(&scopes)?;
    emit(o, &[("scope.json", &json), ("scope.txt", &out)])?;
    Ok(0)
}

fn cmd_audit(o: &Options) -> Result<u8> {
    let net = load_network(o)?;
    let catalog = load_catalog(o, &net)?;
    let (records, state) = load_log(o, &net, &catalog)?;
    let report = audit(&state, &net, &catalog);
    let text = report.render_text();
    print!("{text}");
    emit(
        o,
        &[
            ("audit.json", &canonical(&report)?),
            ("audit.txt", &text),
            ("log.ndjson", &write_log(&records)),
        ],
    )?;
    Ok(if report.is_empty() { 0 } else { 1 })
}

fn plan(o: &Options) -> Result<u8> {
    let net = load_network(o)?;
    let catalog = load_catalog(o, &net)?;
    let (_, state) = load_log(o, &net, &catalog)?;
    let tasks = state.plan();
    let mut text = String::from("task\tlevel\tdeadline\titem\tcomponent\ttarget\trevision\n");
    for t in &tasks {
        text.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            t.task_id,
            t.level,
            t.deadline
                .map_or_else(|| "-".to_string(), |d| d.to_string()),
            t.item_id,
            t.component_id,
            t.target,
            t.to_revision.counter
        ));
    }
    print!("{text}");
    emit(
        o,
        &[("plan.json", &canonical(&tasks)?), ("plan.txt", &text)],
    )?;
    Ok(0)
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    Dataset::load(path).map_err(|source| CliError::Dataset {
        path: path.to_path_buf(),
        source,
    })
}

fn cmd_analyze(o: &Options) -> Result<u8> {
    let path = o.dataset.as_ref().ok_or(CliError::Missing("dataset"))?;
    let complete = load_dataset(path)?;
    let pairs = o.pairs.as_deref().map(load_dataset).transpose()?;
    let mut thresholds = Thresholds::default();
    if let Some(v) = o.theta_global {
        thresholds.global = v;
    }
    if let Some(v) = o.theta_local {
        thresholds.local = v;
    }
    if let Some(v) = o.theta_comparable {
        thresholds.comparable = v;
    }
    if let Some(v) = o.theta_neutral {
        thresholds.neutral = v;
    }
    let site_order = match &o.site_order {
        None => None,
        Some(codes) => Some(
            codes
                .iter()
                .map(|c| CountryCode::new(c).map_err(|_| CliError::SiteCode(c.clone())))
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    let opts = AnalysisOptions {
        thresholds,
        site_order,
    };
    let report = analyze(&complete, pairs.as_ref(), &opts)?;
    let text = report.render_text();
    print!("{text}");
    emit(
        o,
        &[
            ("analysis.json", &canonical(&report)?),
            ("analysis.txt", &text),
        ],
    )?;
    Ok(0)
}

fn simulate(o: &Options, path: &Path) -> Result<u8> {
    let mut scenario = Scenario::load(path)?;
    if let Some(seed) = o.seed {
        scenario.workload.seed = seed;
    }
    let out = scenario.run()?;
    let mut text = out.metrics.render_text();
    let mut files = vec![
        ("metrics.json", canonical(&out.metrics)?),
        ("events.ndjson", write_log(&out.log)),
    ];
    if o.baseline {
        let base = scenario.run_baseline()?;
        text.push_str("\nbaseline\n");
        text.push_str(&base.metrics.render_text());
        text.push_str("\ncategory\tpolicy\tbaseline\n");
        for c in &out.metrics.categories {
            text.push_str(&format!(
                "{}\t{}\t{}\n",
                c.category,
                c.total_window,
                base.metrics.category(c.category).total_window
            ));
        }
        files.push(("baseline.json", canonical(&base.metrics)?));
        let comparison = json!({
            "policy": out.metrics.categories.iter().map(|c| json!({
                "category": c.category,
                "window": c.total_window,
            })).collect::<Vec<_>>(),
            "baseline": base.metrics.categories.iter().map(|c| json!({
                "category": c.category,
                "window": c.total_window,
            })).collect::<Vec<_>>(),
        });
        files.push(("comparison.json", canonical(&comparison)?));
    }
    print!("{text}");
    files.push(("metrics.txt", text));
    let refs: Vec<(&str, &str)> = files.iter().map(|(n, b)| (*n, b.as_str())).collect();
    emit(o, &refs)?;
    Ok(0)
}
