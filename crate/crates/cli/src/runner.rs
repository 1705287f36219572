//! Runs every convergence branch of a configuration and persists results.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use tedopa_core::chain::verify_chain_length;
use tedopa_core::tdvp::{evolve, EvolutionMethod, EvolutionRecord, EvolveOptions};
use tedopa_core::tensor::KrylovOptions;

use crate::config::{MethodName, SimulationConfig};
use crate::error::{CliError, Result};
use crate::model::{prepare, Prepared, TERMINAL_SERIES};
use crate::store::{create_dir, record_series, ChainLengthDiagnostic, Diagnostics, Manifest, Series};

/// Outcome of one convergence branch.
#[derive(Debug)]
pub struct BranchOutcome {
    pub label: String,
    pub dir: PathBuf,
    pub manifest: Manifest,
    /// In-memory series, empty when the branch failed.
    pub series: Vec<Series>,
    pub record: Option<EvolutionRecord<f64>>,
}

/// Everything a run produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub branches: Vec<BranchOutcome>,
    pub report: ConvergenceReport,
}

impl RunOutcome {
    pub fn failed(&self) -> impl Iterator<Item = &BranchOutcome> {
        self.branches.iter().filter(|b| b.manifest.error.is_some())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableDeviation {
    pub name: String,
    /// Largest absolute difference to the reference branch, per branch label.
    pub deviations: Vec<(String, f64)>,
}

/// Cross-branch comparison written to `convergence.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// Branch the others are compared against (the last one that finished).
    pub reference: Option<String>,
    pub observables: Vec<ObservableDeviation>,
    pub max_deviation: f64,
    pub failed_branches: Vec<String>,
}

/// Directory-safe version of a run name.
pub fn slug(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c.to_ascii_lowercase() } else { '_' })
        .collect();
    let s = s.split('_').filter(|p| !p.is_empty()).collect::<Vec<_>>().join("_");
    if s.is_empty() {
        "run".into()
    } else {
        s
    }
}

fn method_for(cfg: &SimulationConfig, bond: usize) -> EvolutionMethod<f64> {
    let ev = &cfg.evolution;
    match ev.method {
        MethodName::Tdvp1 => EvolutionMethod::Tdvp1 { d: bond },
        MethodName::Tdvp2 => EvolutionMethod::Tdvp2 {
            trunc_tol: ev.trunc_tol,
            d_max: bond,
        },
        MethodName::Dtdvp => EvolutionMethod::Dtdvp {
            growth_tol: ev.growth_tol,
            d_max: bond,
        },
    }
}

fn branch_label(bond: usize) -> String {
    format!("D{bond}")
}

fn run_branch(cfg: &SimulationConfig, prep: &Prepared, bond: usize, dir: &Path) -> BranchOutcome {
    let label = branch_label(bond);
    let start = Instant::now();
    let method = method_for(cfg, bond);
    let ev = &cfg.evolution;
    let opts = EvolveOptions {
        krylov: KrylovOptions {
            max_dim: ev.krylov_dim,
            tol: ev.krylov_tol,
        },
        rdm_sites: cfg.reduced_density.iter().map(|s| s - 1).collect(),
    };
    let interval = ev.progress_interval;
    let mut progress = |k: usize, n: usize| {
        if interval > 0 && (k.is_multiple_of(interval) || k == n) {
            log::info!("{}: {label} step {k}/{n}", cfg.name);
        }
    };
    let result = (|| {
        // one-site TDVP keeps bonds fixed, so start at the target size
        let psi0 = match method {
            EvolutionMethod::Tdvp1 { d } => prep.psi0.enlarge_bonds(d)?,
            _ => prep.psi0.clone(),
        };
        let td = prep.drive.as_ref();
        evolve(&psi0, &prep.mpo, ev.dt, ev.t_final, &method, &prep.observables, td, &opts, &mut progress)
    })();

    let mut diagnostics = Diagnostics {
        quadrature_change: prep.quadrature_change,
        ..Diagnostics::default()
    };
    let (record, series, error) = match result {
        Ok(rec) => {
            diagnostics.final_bond_dims = rec.bond_dims.last().cloned();
            diagnostics.max_trunc_error = Some(rec.trunc_error.iter().copied().fold(0.0, f64::max));
            diagnostics.final_norm = rec.norm.last().copied();
            if prep.drive.is_none() {
                let e0 = rec.energy[0];
                diagnostics.energy_drift = Some(rec.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max));
            }
            match chain_length_diagnostic(cfg, prep, &rec) {
                Ok(c) => diagnostics.chain_length = c,
                Err(e) => log::warn!("{label}: chain-length check skipped: {e}"),
            }
            let series = record_series(&rec, &prep.complex);
            (Some(rec), series, None)
        }
        Err(e) => {
            log::error!("{}: branch {label} failed: {e}", cfg.name);
            (None, Vec::new(), Some(e.to_string()))
        }
    };
    let mut manifest = Manifest {
        label: label.clone(),
        name: cfg.name.clone(),
        convparam: bond,
        method: method.name().into(),
        code_version: env!("CARGO_PKG_VERSION").into(),
        wall_clock_seconds: 0.0,
        error,
        diagnostics,
        series: series.iter().map(|s| s.name.clone()).collect(),
        config: cfg.clone(),
    };
    if let Err(e) = persist(dir, prep, &series) {
        manifest.error.get_or_insert(e.to_string());
    }
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    if let Err(e) = manifest.write(dir) {
        log::error!("{label}: cannot write manifest: {e}");
    }
    BranchOutcome {
        label,
        dir: dir.to_path_buf(),
        manifest,
        series,
        record,
    }
}

fn chain_length_diagnostic(
    cfg: &SimulationConfig,
    prep: &Prepared,
    rec: &EvolutionRecord<f64>,
) -> Result<Option<ChainLengthDiagnostic>> {
    let (Some(bath), true) = (&cfg.bath, prep.tracks_terminal) else {
        return Ok(None);
    };
    let Some(obs) = rec.observable(TERMINAL_SERIES) else {
        return Ok(None);
    };
    let occ: Vec<f64> = obs
        .values
        .iter()
        .map(|v| {
            v.iter()
                .zip(&prep.terminal_is_hole)
                .map(|(z, &hole)| if hole { 1.0 - z.re } else { z.re })
                .fold(0.0, f64::max)
        })
        .collect();
    let check = verify_chain_length(&rec.times, &occ, bath.occupation_threshold)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    if !check.passed {
        log::warn!(
            "{}: terminal chain occupation reached {} at t = {}; the chain is too short",
            cfg.name,
            bath.occupation_threshold,
            check.first_violation.unwrap_or(f64::NAN)
        );
    }
    Ok(Some(ChainLengthDiagnostic {
        threshold: bath.occupation_threshold,
        passed: check.passed,
        first_violation: check.first_violation,
        max_occupation: check.max_occupation,
        from_rule: bath.n_from_rule,
    }))
}

fn persist(dir: &Path, prep: &Prepared, series: &[Series]) -> Result<()> {
    let sdir = dir.join("series");
    create_dir(&sdir)?;
    for s in series {
        s.write_csv(&sdir.join(format!("{}.csv", s.name)))?;
    }
    let files = prep.chains.files();
    if !files.is_empty() {
        let cdir = dir.join("chain");
        create_dir(&cdir)?;
        for (name, text) in files {
            let p = cdir.join(name);
            fs::write(&p, text).map_err(|e| CliError::io(&p, e))?;
        }
    }
    Ok(())
}

fn max_abs_diff(a: &Series, b: &Series) -> f64 {
    if a.columns != b.columns || a.rows.len() != b.rows.len() {
        return f64::INFINITY;
    }
    a.rows
        .iter()
        .zip(&b.rows)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}

/// Compares `convobs` (all observables if empty) of every finished branch
/// with the last finished one.
pub fn convergence_report(cfg: &SimulationConfig, branches: &[BranchOutcome]) -> ConvergenceReport {
    let done: Vec<&BranchOutcome> = branches.iter().filter(|b| b.manifest.error.is_none()).collect();
    let failed_branches = branches
        .iter()
        .filter(|b| b.manifest.error.is_some())
        .map(|b| b.label.clone())
        .collect();
    let Some(reference) = done.last() else {
        return ConvergenceReport {
            reference: None,
            observables: Vec::new(),
            max_deviation: 0.0,
            failed_branches,
        };
    };
    let names: Vec<String> = if cfg.convobs.is_empty() {
        cfg.observables.iter().map(|o| o.resolved_name()).collect()
    } else {
        cfg.convobs.clone()
    };
    let find = |b: &BranchOutcome, n: &str| b.series.iter().find(|s| s.name == n).cloned();
    let observables: Vec<ObservableDeviation> = names
        .iter()
        .filter_map(|n| {
            let r = find(reference, n)?;
            let deviations = done
                .iter()
                .map(|b| (b.label.clone(), find(b, n).map_or(f64::INFINITY, |s| max_abs_diff(&s, &r))))
                .collect();
            Some(ObservableDeviation {
                name: n.clone(),
                deviations,
            })
        })
        .collect();
    let max_deviation = observables
        .iter()
        .flat_map(|o| o.deviations.iter().map(|d| d.1))
        .fold(0.0, f64::max);
    ConvergenceReport {
        reference: Some(reference.label.clone()),
        observables,
        max_deviation,
        failed_branches,
    }
}

/// Runs every entry of `evolution.convparams` under
/// `out_root/<slug(name)>/`. Branches run on scoped threads when `parallel`
/// is set; set-up errors abort before any branch starts, while a failing
/// branch is recorded in its manifest and the others proceed.
pub fn run(cfg: &SimulationConfig, base_dir: &Path, out_root: &Path, parallel: bool) -> Result<RunOutcome> {
    let mut cfg = cfg.clone();
    // keep the saved config usable from any directory
    if let Some(file) = cfg.bath.as_mut().and_then(|b| b.coeffs_file.as_mut()) {
        let p = base_dir.join(&*file);
        *file = fs::canonicalize(&p).unwrap_or(p).display().to_string();
    }
    let cfg = &cfg;
    let prep = prepare(cfg, base_dir)?;
    let dir = out_root.join(slug(&cfg.name));
    create_dir(&dir)?;
    crate::config::save_config(cfg, &dir.join("config.toml"))?;
    let dirs: Vec<(usize, PathBuf)> = cfg
        .evolution
        .convparams
        .iter()
        .map(|&d| (d, dir.join(branch_label(d))))
        .collect();
    for (_, d) in &dirs {
        create_dir(d)?;
    }
    log::info!(
        "{}: {} sites, {} branch(es), method {}",
        cfg.name,
        prep.local_dims.len(),
        dirs.len(),
        cfg.evolution.method
    );
    let branches: Vec<BranchOutcome> = if parallel && dirs.len() > 1 {
        std::thread::scope(|s| {
            let handles: Vec<_> = dirs
                .iter()
                .map(|(d, p)| {
                    let prep = &prep;
                    s.spawn(move || run_branch(cfg, prep, *d, p))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().map_err(|_| CliError::Internal("a branch thread panicked".into())))
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        dirs.iter().map(|(d, p)| run_branch(cfg, &prep, *d, p)).collect()
    };
    let report = convergence_report(cfg, &branches);
    let path = dir.join("convergence.json");
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Internal(e.to_string()))?;
    fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(RunOutcome { dir, branches, report })
}
