//! Experiment orchestration: turn a validated config into an artifact
//! tree on disk.
//!
//! Layout. A single run writes straight into the output directory:
//! `config.ini`, `data.txt`, `trace.csv`, `summary.txt`, per-component
//! density grids and (for robust methods) `gamma_diagnostics.csv`. A
//! [grid] run nests cells as `[param=value/]repNNN/method/` under the
//! output directory, shares one `data.txt` per replicate, and adds the
//! cross-run tables `aggregate.csv`, `accuracy.csv` (replicated runs with
//! a known generator value) and `acceptance_rates.csv` (parameter sweeps).
//!
//! Every cell derives its own seed from (master seed, value index,
//! replicate, method index), and each replicate's data from the data seed
//! and (value index, replicate). Workers run in parallel but results are
//! aggregated in a fixed order, so the artifact bytes do not depend on
//! the thread count.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;

use rbsl_core::diagnostics::{
    accuracy_table, chain_summary, gamma_prior_divergence, kde_grid, ChainSummary,
    DEFAULT_DIVERGENCE_THRESHOLD, DEFAULT_REFERENCE_N,
};
use rbsl_core::importance::{importance_sample_bsl, ImportanceSample};
use rbsl_core::mcmc::{run_chain, tune_proposal, ChainOptions};
use rbsl_core::models::ma1::{ma1_mle, simulate_ma1, simulate_sv, Ma1Model};
use rbsl_core::models::normal::{
    contamination_scale_for_sd, generate_contaminated, standardize_to_moments, NormalModel,
};
use rbsl_core::models::toad::{simulate_toads, ToadModel};
use rbsl_core::models::{load_matrix, load_series, Model, RawData};
use rbsl_core::quantile::weighted_quantile;
use rbsl_core::rng::{derive_seed, rng_from, tag};
use rbsl_core::slice::SliceOptions;
use rbsl_core::trace::{fmt_float, Trace};
use rbsl_core::{GammaPrior, SummaryVector};

use crate::config::{DataSource, ExperimentConfig, InitSpec, ModelId, RunMethod};
use crate::report::{
    accuracy_csv, acceptance_rates_csv, aggregate_csv, density_csv, gamma_diagnostics_csv,
    is_draws_csv, AcceptanceRow, AccuracyOutRow, AggregateRow, KvReport,
};

const DENSITY_GRID: usize = 201;
const ACCURACY_LEVEL: f64 = 0.95;

/// Totals reported after a run (to stderr; deterministic artifacts stay
/// on disk).
#[derive(Debug, Clone, Copy)]
pub struct RunReport {
    pub cells: usize,
    pub sim_calls: u64,
    pub sim_failures: u64,
}

/// One unit of work: a grid value, a replicate data set, and a method.
struct Cell {
    g: usize,
    value: Option<f64>,
    r: usize,
    mi: usize,
    method: RunMethod,
    source: DataSource,
    data: Arc<RawData>,
    dir: PathBuf,
}

impl Cell {
    fn label(&self) -> String {
        let mut s = String::new();
        if let Some(v) = self.value {
            s.push_str(&format!("value {v}, "));
        }
        s.push_str(&format!("replicate {}, method {}", self.r + 1, self.method.as_str()));
        s
    }
}

enum Outcome {
    Chain {
        trace: Trace,
        summary: Option<ChainSummary>,
    },
    Importance {
        means: Vec<f64>,
        /// Per component: (q025, q50, q975) under the importance weights.
        quantiles: Vec<(f64, f64, f64)>,
        ess: f64,
        sim_calls: u64,
        sim_failures: u64,
    },
}

impl Outcome {
    fn sim_totals(&self) -> (u64, u64) {
        match self {
            Outcome::Chain { trace, .. } => (trace.sim_calls, trace.sim_failures),
            Outcome::Importance {
                sim_calls,
                sim_failures,
                ..
            } => (*sim_calls, *sim_failures),
        }
    }
}

/// Run the whole experiment described by `cfg`, writing artifacts under
/// its output directory. Deterministic for a fixed config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    fs::create_dir_all(&cfg.output)
        .with_context(|| format!("creating output directory {}", cfg.output.display()))?;
    fs::write(cfg.output.join("config.ini"), cfg.canonical_ini())?;

    let single = cfg.grid.is_none();
    let values = cfg.grid_values();
    let replicates = cfg.replicates();
    let methods = cfg.methods();
    let parameter = cfg
        .grid
        .as_ref()
        .and_then(|g| g.parameter.as_deref());

    // Phase 1, sequential: observed data per (value, replicate), written
    // once so no two workers touch the same file.
    let mut cells = Vec::new();
    for (g, value) in values.iter().enumerate() {
        let source = match (value, parameter) {
            (Some(v), Some(p)) => cfg
                .data
                .with_parameter(p, *v)
                .map_err(|e| anyhow!("grid value {v}: {e}"))?,
            _ => cfg.data.clone(),
        };
        for r in 0..replicates {
            let data = Arc::new(
                obtain_data(cfg, &source, g as u64, r as u64)
                    .with_context(|| format!("generating data for replicate {}", r + 1))?,
            );
            let rep = rep_dir(cfg, parameter, *value, r, single);
            fs::create_dir_all(&rep)?;
            fs::write(rep.join("data.txt"), render_data(&data))?;
            for (mi, method) in methods.iter().enumerate() {
                let dir = if single {
                    rep.clone()
                } else {
                    rep.join(method.as_str())
                };
                cells.push(Cell {
                    g,
                    value: *value,
                    r,
                    mi,
                    method: *method,
                    source: source.clone(),
                    data: Arc::clone(&data),
                    dir,
                });
            }
        }
    }

    // Phase 2, parallel: the cells themselves. Results come back in cell
    // order regardless of scheduling.
    let outcomes: Vec<Outcome> = cells
        .par_iter()
        .map(|cell| run_cell(cfg, cell).with_context(|| format!("cell: {}", cell.label())))
        .collect::<Result<_>>()?;

    // Phase 3, single writer: cross-run tables.
    if !single {
        write_grid_tables(cfg, &cells, &outcomes)?;
    }

    let (mut sim_calls, mut sim_failures) = (0u64, 0u64);
    for o in &outcomes {
        let (c, f) = o.sim_totals();
        sim_calls += c;
        sim_failures += f;
    }
    Ok(RunReport {
        cells: cells.len(),
        sim_calls,
        sim_failures,
    })
}

fn rep_dir(
    cfg: &ExperimentConfig,
    parameter: Option<&str>,
    value: Option<f64>,
    r: usize,
    single: bool,
) -> PathBuf {
    if single {
        return cfg.output.clone();
    }
    let mut p = cfg.output.clone();
    if let (Some(name), Some(v)) = (parameter, value) {
        p.push(format!("{name}={v}"));
    }
    p.push(format!("rep{:03}", r + 1));
    p
}

/// Observed data for one replicate: loaded from disk, or generated from
/// the replicate's own stream.
fn obtain_data(cfg: &ExperimentConfig, source: &DataSource, g: u64, r: u64) -> Result<RawData> {
    let mut rng = rng_from(cfg.data_seed, &[tag::DATA, g, r]);
    Ok(match source {
        DataSource::File(path) => match cfg.model {
            ModelId::Toad => load_matrix(path)?,
            ModelId::Normal | ModelId::Ma1 => RawData::Series(load_series(path)?),
        },
        DataSource::ContaminatedNormal {
            theta_true,
            n,
            omega,
            sigma,
        } => {
            let scale = contamination_scale_for_sd(*omega, *sigma)?;
            let raw = generate_contaminated(*theta_true, *n, *omega, scale, &mut rng)?;
            // Pin the sample moments exactly so the observed summary is
            // (theta_true, sigma^2) by construction, isolating the effect
            // of the variance mismatch.
            RawData::Series(standardize_to_moments(&raw, *theta_true, *sigma)?)
        }
        DataSource::Ma1 { theta_true, n } => RawData::Series(simulate_ma1(*theta_true, *n, &mut rng)?),
        DataSource::Sv {
            omega,
            rho,
            sigma_v,
            n,
        } => RawData::Series(simulate_sv(*omega, *rho, *sigma_v, *n, &mut rng)?),
        DataSource::Toad {
            theta_true,
            n_toads,
            n_days,
        } => simulate_toads(
            theta_true[0],
            theta_true[1],
            theta_true[2],
            *n_toads,
            *n_days,
            &mut rng,
        )?,
    })
}

/// Write observed data in the loaders' own format: one value per line for
/// a series, comma-separated rows for a matrix.
fn render_data(data: &RawData) -> String {
    match data {
        RawData::Series(v) => {
            let mut s = String::with_capacity(v.len() * 24);
            for x in v {
                s.push_str(&fmt_float(*x));
                s.push('\n');
            }
            s
        }
        RawData::Matrix { rows, cols, values } => {
            let mut s = String::with_capacity(rows * cols * 24);
            for i in 0..*rows {
                let row: Vec<String> = (0..*cols)
                    .map(|j| fmt_float(values[i * cols + j]))
                    .collect();
                s.push_str(&row.join(","));
                s.push('\n');
            }
            s
        }
    }
}

/// Size the simulator to the observed data.
fn build_model(id: ModelId, data: &RawData) -> Result<Box<dyn Model>> {
    Ok(match id {
        ModelId::Normal => Box::new(NormalModel::new(data.as_series()?.len())?),
        ModelId::Ma1 => Box::new(Ma1Model::new(data.as_series()?.len())?),
        ModelId::Toad => match data {
            RawData::Matrix { rows, cols, .. } => Box::new(ToadModel::new(*cols, *rows)?),
            RawData::Series(_) => bail!("the toad model needs matrix data (days x toads)"),
        },
    })
}

fn resolve_init(cfg: &ExperimentConfig, data: &RawData) -> Result<Vec<f64>> {
    Ok(match &cfg.init {
        InitSpec::PriorCenter => cfg.prior.center(),
        InitSpec::Theta(t) => t.clone(),
        // The chain itself re-checks that the estimate lies in the prior
        // support.
        InitSpec::Mle => vec![ma1_mle(data.as_series()?)?],
    })
}

fn run_cell(cfg: &ExperimentConfig, cell: &Cell) -> Result<Outcome> {
    fs::create_dir_all(&cell.dir)?;
    let model = build_model(cfg.model, &cell.data)?;
    let eta_obs = model.summarize(&cell.data)?;
    let prior = cfg.prior.build()?;
    let init = resolve_init(cfg, &cell.data)?;
    let cell_seed = derive_seed(
        cfg.seed,
        &[tag::CHAIN, cell.g as u64, cell.r as u64, cell.mi as u64],
    );

    match cell.method {
        RunMethod::Chain(kind) => {
            let gamma_prior = cfg.gamma.build_for(cell.method, model.d_eta())?;
            let mut opts = ChainOptions {
                method: kind,
                m: cfg.m,
                iterations: cfg.iterations,
                burn_in: cfg.burn_in,
                thin: cfg.thin,
                seed: cell_seed,
                proposal: cfg.proposal.build(model.d_theta())?,
                slice: SliceOptions::default(),
            };
            if cfg.proposal.tune {
                opts.proposal = tune_proposal(
                    model.as_ref(),
                    &eta_obs,
                    &prior,
                    gamma_prior.as_ref(),
                    &init,
                    &opts,
                    cfg.proposal.tune_rounds,
                )?;
            }
            let trace = run_chain(
                model.as_ref(),
                &eta_obs,
                &prior,
                gamma_prior.as_ref(),
                &init,
                &opts,
            )?;
            trace.write_csv(&cell.dir.join("trace.csv"))?;
            let summary = write_chain_artifacts(
                cfg,
                cell,
                &cell.dir,
                model.as_ref(),
                &eta_obs,
                &trace,
                gamma_prior.as_ref(),
                cell_seed,
            )?;
            Ok(Outcome::Chain { trace, summary })
        }
        RunMethod::Importance => {
            let is = importance_sample_bsl(
                &prior,
                cfg.is_draws,
                cfg.m,
                model.as_ref(),
                &eta_obs,
                cell_seed,
            )?;
            let outcome = write_is_artifacts(cfg, cell, &cell.dir, model.as_ref(), &eta_obs, &is, cell_seed)?;
            Ok(outcome)
        }
    }
}

fn describe_data(r: &mut KvReport, cell: &Cell, eta_obs: &SummaryVector) {
    r.section("data");
    r.kv("source", cell.source.source_str());
    match &cell.source {
        DataSource::File(p) => {
            r.kv("file", p.display());
        }
        DataSource::ContaminatedNormal {
            theta_true,
            n,
            omega,
            sigma,
        } => {
            r.kv("theta_true", theta_true)
                .kv("n", n)
                .kv("omega", omega)
                .kv("sigma", sigma);
        }
        DataSource::Ma1 { theta_true, n } => {
            r.kv("theta_true", theta_true).kv("n", n);
        }
        DataSource::Sv {
            omega,
            rho,
            sigma_v,
            n,
        } => {
            r.kv("omega", omega)
                .kv("rho", rho)
                .kv("sigma_v", sigma_v)
                .kv("n", n);
        }
        DataSource::Toad {
            theta_true,
            n_toads,
            n_days,
        } => {
            r.kv(
                "theta_true",
                theta_true
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(", "),
            )
            .kv("n_toads", n_toads)
            .kv("n_days", n_days);
        }
    }
    if let Some(v) = cell.value {
        r.kv("grid_value", v);
    }
    for (i, v) in eta_obs.as_slice().iter().enumerate() {
        r.kv_float(&format!("observed_summary_{}", i + 1), *v);
    }
}

#[allow(clippy::too_many_arguments)]
fn write_chain_artifacts(
    cfg: &ExperimentConfig,
    cell: &Cell,
    dir: &Path,
    model: &dyn Model,
    eta_obs: &SummaryVector,
    trace: &Trace,
    gamma_prior: Option<&GammaPrior>,
    cell_seed: u64,
) -> Result<Option<ChainSummary>> {
    let mut r = KvReport::new();
    r.section("run")
        .kv("model", model.id())
        .kv("method", cell.method.as_str())
        .kv("m", cfg.m)
        .kv("iterations", cfg.iterations)
        .kv("burn_in", cfg.burn_in)
        .kv("thin", cfg.thin)
        .kv("seed", cell_seed)
        .kv("d_theta", model.d_theta())
        .kv("d_eta", model.d_eta());
    describe_data(&mut r, cell, eta_obs);

    r.section("chain")
        .kv("accepted", trace.acceptance_count)
        .kv_float("acceptance_rate", trace.acceptance_rate())
        .kv("recorded_rows", trace.rows.len())
        .kv("post_burnin_rows", trace.post_burnin_rows().count())
        .kv("sim_calls", trace.sim_calls)
        .kv("sim_failures", trace.sim_failures);

    let summary = match chain_summary(trace) {
        Ok(s) => Some(s),
        Err(_) => {
            r.section("note")
                .kv("posterior", "no post-burn-in rows; only the trace was written");
            None
        }
    };

    if let Some(s) = &summary {
        for (k, p) in s.theta.iter().enumerate() {
            r.param(&format!("theta_{}", k + 1), p);
        }
        for (k, p) in s.gamma.iter().enumerate() {
            r.param(&format!("gamma_{}", k + 1), p);
        }
    }

    // Divergence of the adjustment posterior from its prior: the
    // misspecification signal. Needs enough retained draws to be
    // meaningful, otherwise it is skipped with a note.
    if let (Some(gp), Some(s)) = (gamma_prior, &summary) {
        if s.n_post_burnin >= 100 {
            let mut rng = rng_from(cell_seed, &[tag::PRIOR_REF]);
            let diag = gamma_prior_divergence(
                trace,
                gp,
                DEFAULT_REFERENCE_N,
                DEFAULT_DIVERGENCE_THRESHOLD,
                &mut rng,
            )?;
            fs::write(dir.join("gamma_diagnostics.csv"), gamma_diagnostics_csv(&diag))?;
            r.section("adjustment_divergence");
            for d in &diag {
                r.kv(
                    &format!("gamma_{}", d.component + 1),
                    format!("ks={} {}", fmt_float(d.ks_statistic), d.flag()),
                );
            }
        } else {
            r.section("adjustment_divergence").kv(
                "note",
                "skipped: needs at least 100 retained post-burn-in rows",
            );
        }
    }

    if summary.is_some() {
        for k in 0..trace.meta.d_theta {
            write_density(
                &dir.join(format!("density_theta_{}.csv", k + 1)),
                &trace.theta_component(k),
                None,
            )?;
        }
        for k in 0..trace.meta.d_gamma {
            write_density(
                &dir.join(format!("density_gamma_{}.csv", k + 1)),
                &trace.gamma_component(k),
                None,
            )?;
        }
    }

    fs::write(dir.join("summary.txt"), r.finish())?;
    Ok(summary)
}

/// Best-effort density grid; a degenerate sample (all draws equal, as in
/// a fully stuck chain) simply gets no density file.
fn write_density(path: &Path, values: &[f64], weights: Option<&[f64]>) -> Result<()> {
    if let Ok((xs, ys)) = kde_grid(values, weights, DENSITY_GRID) {
        fs::write(path, density_csv(&xs, &ys))?;
    }
    Ok(())
}

fn write_is_artifacts(
    cfg: &ExperimentConfig,
    cell: &Cell,
    dir: &Path,
    model: &dyn Model,
    eta_obs: &SummaryVector,
    is: &ImportanceSample,
    cell_seed: u64,
) -> Result<Outcome> {
    fs::write(
        dir.join("is.csv"),
        is_draws_csv(&is.theta, &is.log_weights, &is.weights),
    )?;

    let d = model.d_theta();
    let mut means = Vec::with_capacity(d);
    let mut quantiles = Vec::with_capacity(d);
    let mut r = KvReport::new();
    r.section("run")
        .kv("model", model.id())
        .kv("method", cell.method.as_str())
        .kv("draws", cfg.is_draws)
        .kv("m", cfg.m)
        .kv("seed", cell_seed)
        .kv("d_theta", d)
        .kv("d_eta", model.d_eta());
    describe_data(&mut r, cell, eta_obs);
    r.section("importance")
        .kv_float("ess", is.ess)
        .kv("sim_calls", is.sim_calls)
        .kv("sim_failures", is.sim_failures);

    for k in 0..d {
        let mut pairs = is.component_weighted(k);
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let q = (
            weighted_quantile(&pairs, 0.025),
            weighted_quantile(&pairs, 0.5),
            weighted_quantile(&pairs, 0.975),
        );
        let mean = is.weighted_mean(k);
        r.section(&format!("theta_{}", k + 1))
            .kv_float("mean", mean)
            .kv_float("median", q.1)
            .kv_float("q025", q.0)
            .kv_float("q975", q.2);
        means.push(mean);
        quantiles.push(q);

        let values: Vec<f64> = pairs.iter().map(|(v, _)| *v).collect();
        let weights: Vec<f64> = pairs.iter().map(|(_, w)| *w).collect();
        write_density(
            &dir.join(format!("density_theta_{}.csv", k + 1)),
            &values,
            Some(&weights),
        )?;
    }

    fs::write(dir.join("summary.txt"), r.finish())?;
    Ok(Outcome::Importance {
        means,
        quantiles,
        ess: is.ess,
        sim_calls: is.sim_calls,
        sim_failures: is.sim_failures,
    })
}

/// The cross-run tables for grid configs: every cell in `aggregate.csv`,
/// acceptance-by-value for sweeps, and the repeated-sampling accuracy
/// table whenever replicates and a known generator value allow one.
fn write_grid_tables(cfg: &ExperimentConfig, cells: &[Cell], outcomes: &[Outcome]) -> Result<()> {
    let d_theta = cfg.model.d_theta();
    let mut agg_rows = Vec::with_capacity(cells.len());
    for (cell, outcome) in cells.iter().zip(outcomes) {
        let row = match outcome {
            Outcome::Chain { trace, summary } => AggregateRow {
                value: cell.value,
                replicate: cell.r + 1,
                method: cell.method.as_str(),
                acceptance_rate: Some(trace.acceptance_rate()),
                ess: None,
                sim_calls: trace.sim_calls,
                sim_failures: trace.sim_failures,
                theta: summary.as_ref().map(|s| s.theta.clone()).unwrap_or_default(),
            },
            Outcome::Importance {
                means,
                quantiles,
                ess,
                sim_calls,
                sim_failures,
            } => AggregateRow {
                value: cell.value,
                replicate: cell.r + 1,
                method: cell.method.as_str(),
                acceptance_rate: None,
                ess: Some(*ess),
                sim_calls: *sim_calls,
                sim_failures: *sim_failures,
                theta: means
                    .iter()
                    .zip(quantiles)
                    .map(|(m, (lo, med, hi))| rbsl_core::diagnostics::ParamSummary {
                        mean: *m,
                        median: *med,
                        q025: *lo,
                        q975: *hi,
                    })
                    .collect(),
            },
        };
        agg_rows.push(row);
    }
    fs::write(
        cfg.output.join("aggregate.csv"),
        aggregate_csv(d_theta, &agg_rows),
    )?;

    let values = cfg.grid_values();
    let methods = cfg.methods();
    let replicates = cfg.replicates();

    if values.iter().any(Option::is_some) {
        let mut rows = Vec::new();
        for value in values.iter().flatten() {
            for method in &methods {
                let rates: Vec<f64> = cells
                    .iter()
                    .zip(outcomes)
                    .filter(|(c, _)| c.value == Some(*value) && c.method == *method)
                    .filter_map(|(_, o)| match o {
                        Outcome::Chain { trace, .. } => Some(trace.acceptance_rate()),
                        Outcome::Importance { .. } => None,
                    })
                    .collect();
                if !rates.is_empty() {
                    rows.push(AcceptanceRow {
                        value: *value,
                        method: method.as_str(),
                        mean_acceptance_rate: rates.iter().sum::<f64>() / rates.len() as f64,
                        n_runs: rates.len(),
                    });
                }
            }
        }
        fs::write(
            cfg.output.join("acceptance_rates.csv"),
            acceptance_rates_csv(&rows),
        )?;
    }

    if replicates >= 2 {
        let mut rows: Vec<AccuracyOutRow> = Vec::new();
        for (g, value) in values.iter().enumerate() {
            let truth = match cells
                .iter()
                .find(|c| c.g == g)
                .and_then(|c| c.source.pseudo_true())
            {
                Some(t) => t,
                None => continue,
            };
            for method in &methods {
                let group: Vec<(&Cell, &Outcome)> = cells
                    .iter()
                    .zip(outcomes)
                    .filter(|(c, _)| c.g == g && c.method == *method)
                    .collect();
                match method {
                    RunMethod::Chain(_) => {
                        let runs: Vec<(Trace, Vec<f64>)> = group
                            .iter()
                            .filter_map(|(_, o)| match o {
                                Outcome::Chain { trace, .. } => {
                                    Some((trace.clone(), truth.clone()))
                                }
                                _ => None,
                            })
                            .collect();
                        if runs.len() >= 2 {
                            let table = accuracy_table(&runs, ACCURACY_LEVEL)?;
                            for row in table.rows {
                                rows.push(AccuracyOutRow {
                                    value: *value,
                                    method: method.as_str(),
                                    parameter: row.parameter + 1,
                                    bias: row.bias,
                                    rmse: row.rmse,
                                    mean_length: row.mean_length,
                                    coverage: row.coverage,
                                    n_runs: row.n_runs,
                                });
                            }
                        }
                    }
                    RunMethod::Importance => {
                        rows.extend(importance_accuracy(&group, &truth, *value));
                    }
                }
            }
        }
        if !rows.is_empty() {
            fs::write(cfg.output.join("accuracy.csv"), accuracy_csv(&rows))?;
        }
    }
    Ok(())
}

/// Accuracy rows for importance-sampling runs, matching the chain table's
/// definitions: bias and RMSE of posterior means, plus the width and
/// coverage of the equal-tailed 95% interval.
fn importance_accuracy(
    group: &[(&Cell, &Outcome)],
    truth: &[f64],
    value: Option<f64>,
) -> Vec<AccuracyOutRow> {
    let runs: Vec<(&Vec<f64>, &Vec<(f64, f64, f64)>)> = group
        .iter()
        .filter_map(|(_, o)| match o {
            Outcome::Importance {
                means, quantiles, ..
            } => Some((means, quantiles)),
            _ => None,
        })
        .collect();
    if runs.len() < 2 {
        return Vec::new();
    }
    let d = truth.len();
    let n = runs.len() as f64;
    let mut rows = Vec::with_capacity(d);
    for k in 0..d {
        let errs: Vec<f64> = runs.iter().map(|(m, _)| m[k] - truth[k]).collect();
        let bias = errs.iter().sum::<f64>() / n;
        let rmse = (errs.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
        let mut length = 0.0;
        let mut covered = 0usize;
        for (_, qs) in &runs {
            let (lo, _, hi) = qs[k];
            length += hi - lo;
            if truth[k] >= lo && truth[k] <= hi {
                covered += 1;
            }
        }
        rows.push(AccuracyOutRow {
            value,
            method: "bsl-is",
            parameter: k + 1,
            bias,
            rmse,
            mean_length: length / n,
            coverage: covered as f64 / n,
            n_runs: runs.len(),
        });
    }
    rows
}
