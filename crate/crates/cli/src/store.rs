//! Results on disk: `manifest.json`, `series/<name>.csv`, `chain/*.txt`.
//!
//! Every series file has a header row, time in the first column and one
//! column per component. Site indices in headers are 1-based. Two-site
//! series `name[i,j]` list pairs row-major over the selected sites (`i`
//! outer, `j` inner). Complex components get a second column `name[..].im`
//! right after the real part. Numbers are written in shortest round-trip
//! form, so parsing a file recovers the stored `f64` values exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tedopa_core::tdvp::{EvolutionRecord, ObservableSeries, RdmSeries};

use crate::config::SimulationConfig;
use crate::error::{CliError, Result};

/// A table of real columns sharing one time axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    /// Column headers after `t`.
    pub columns: Vec<String>,
    pub times: Vec<f64>,
    /// One row per time, `columns.len()` entries each.
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn column(&self, header: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == header)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
        let header = std::iter::once("t").chain(self.columns.iter().map(String::as_str));
        w.write_record(header).map_err(|e| CliError::io(path, e))?;
        for (t, row) in self.times.iter().zip(&self.rows) {
            let rec = std::iter::once(*t).chain(row.iter().copied()).map(|v| v.to_string());
            w.write_record(rec).map_err(|e| CliError::io(path, e))?;
        }
        w.flush().map_err(|e| CliError::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
        let header = r.headers().map_err(|e| CliError::io(path, e))?.clone();
        if header.get(0) != Some("t") {
            return Err(CliError::Input(format!("{}: first column must be `t`", path.display())));
        }
        let columns: Vec<String> = header.iter().skip(1).map(String::from).collect();
        let (mut times, mut rows) = (Vec::new(), Vec::new());
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| CliError::io(path, e))?;
            let vals = rec
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| CliError::Input(format!("{} row {}: {e}", path.display(), line + 2)))?;
            times.push(vals[0]);
            rows.push(vals[1..].to_vec());
        }
        Ok(Self { name, columns, times, rows })
    }
}

fn component_headers(name: &str, s: &ObservableSeries<f64>) -> Vec<String> {
    if s.two_site {
        s.sites
            .iter()
            .flat_map(|i| s.sites.iter().map(move |j| format!("{name}[{},{}]", i + 1, j + 1)))
            .collect()
    } else {
        s.sites.iter().map(|i| format!("{name}[{}]", i + 1)).collect()
    }
}

/// Flattens an observable series; `complex` adds imaginary columns.
pub fn observable_series(s: &ObservableSeries<f64>, times: &[f64], complex: bool) -> Series {
    let base = component_headers(&s.name, s);
    let columns = if complex {
        base.iter().flat_map(|h| [h.clone(), format!("{h}.im")]).collect()
    } else {
        base
    };
    let rows = s
        .values
        .iter()
        .map(|v| {
            if complex {
                v.iter().flat_map(|z| [z.re, z.im]).collect()
            } else {
                v.iter().map(|z| z.re).collect()
            }
        })
        .collect();
    Series {
        name: s.name.clone(),
        columns,
        times: times.to_vec(),
        rows,
    }
}

fn scalar_series(name: &str, times: &[f64], values: &[f64]) -> Series {
    Series {
        name: name.into(),
        columns: vec![name.into()],
        times: times.to_vec(),
        rows: values.iter().map(|&v| vec![v]).collect(),
    }
}

fn rdm_series(r: &RdmSeries<f64>, times: &[f64]) -> Series {
    let d = r.values.first().map_or(0, |m| m.nrows());
    let site = r.site + 1;
    let columns = (0..d)
        .flat_map(|a| (0..d).flat_map(move |b| [format!("rho{site}[{a},{b}]"), format!("rho{site}[{a},{b}].im")]))
        .collect();
    let rows = r
        .values
        .iter()
        .map(|m| {
            (0..d)
                .flat_map(|a| (0..d).flat_map(move |b| [m[(a, b)].re, m[(a, b)].im]))
                .collect()
        })
        .collect();
    Series {
        name: format!("rdm{site}"),
        columns,
        times: times.to_vec(),
        rows,
    }
}

/// All series of a record: observables (minus hidden ones), then norm,
/// energy, bond dimensions, truncation error and density matrices.
pub fn record_series(rec: &EvolutionRecord<f64>, complex: &[bool]) -> Vec<Series> {
    let t = &rec.times;
    let mut out: Vec<Series> = rec
        .observables
        .iter()
        .zip(complex)
        .filter(|(o, _)| !o.name.starts_with('_'))
        .map(|(o, &c)| observable_series(o, t, c))
        .collect();
    out.push(scalar_series("norm", t, &rec.norm));
    out.push(scalar_series("energy", t, &rec.energy));
    let nb = rec.bond_dims.first().map_or(0, Vec::len);
    out.push(Series {
        name: "bond_dims".into(),
        columns: (1..=nb).map(|b| format!("bond[{b}]")).collect(),
        times: t.clone(),
        rows: rec.bond_dims.iter().map(|b| b.iter().map(|&x| x as f64).collect()).collect(),
    });
    out.push(scalar_series("trunc_error", t, &rec.trunc_error));
    out.extend(rec.rdms.iter().map(|r| rdm_series(r, t)));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainLengthDiagnostic {
    pub threshold: f64,
    pub passed: bool,
    pub first_violation: Option<f64>,
    pub max_occupation: f64,
    /// Whether the chain length came from the rule of thumb.
    pub from_rule: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain_length: Option<ChainLengthDiagnostic>,
    /// Largest relative change of a chain coefficient when the quadrature
    /// order doubles.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature_change: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_bond_dims: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_trunc_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_drift: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub label: String,
    pub name: String,
    /// Bond dimension of this branch.
    pub convparam: usize,
    pub method: String,
    pub code_version: String,
    pub wall_clock_seconds: f64,
    /// Set when the branch aborted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub diagnostics: Diagnostics,
    /// Series names under `series/`.
    pub series: Vec<String>,
    pub config: SimulationConfig,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Internal(e.to_string()))?;
        fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
    }
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Branch directories under `path`: the path itself if it holds a
/// manifest, otherwise its subdirectories that do, sorted by name.
pub fn branch_dirs(path: &Path) -> Result<Vec<PathBuf>> {
    if path.join("manifest.json").is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let entries = fs::read_dir(path).map_err(|e| CliError::io(path, e))?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("manifest.json").is_file())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(CliError::Input(format!("no results found under {}", path.display())));
    }
    Ok(dirs)
}

/// Copies the requested series (`"all"` or one name) of every branch under
/// `results` into `out` as CSV, one subdirectory per branch when there are
/// several. Returns the written files.
pub fn export(results: &Path, what: &str, out: &Path) -> Result<Vec<PathBuf>> {
    let dirs = branch_dirs(results)?;
    let mut written = Vec::new();
    for dir in &dirs {
        let manifest = Manifest::read(dir)?;
        let names: Vec<&String> = if what == "all" {
            manifest.series.iter().collect()
        } else {
            match manifest.series.iter().find(|n| *n == what) {
                Some(n) => vec![n],
                None => {
                    return Err(CliError::Input(format!(
                        "unknown observable `{what}`; available: {}",
                        manifest.series.join(", ")
                    )))
                }
            }
        };
        let target = if dirs.len() > 1 { out.join(&manifest.label) } else { out.to_path_buf() };
        create_dir(&target)?;
        for n in names {
            let series = Series::read_csv(&dir.join("series").join(format!("{n}.csv")))?;
            let dest = target.join(format!("{n}.csv"));
            series.write_csv(&dest)?;
            written.push(dest);
        }
    }
    Ok(written)
}
