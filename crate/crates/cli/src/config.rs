//! Simulation configuration: a TOML file with nested sections.
//!
//! Site indices in the file are 1-based: site 1 is the system (or the first
//! lattice site), chain modes follow. Everything is dimensionless.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tedopa_core::chain::{default_quad_points, find_chain_length, TemperatureSpec};

use crate::error::{CliError, Result};

/// Names accepted by `model.kind`.
pub const MODEL_CATALOG: &[&str] = &[
    "puredephasing",
    "spinboson",
    "xyz",
    "hubbard",
    "tightbinding",
    "protontransfer",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    /// Free-text run label; also names the output directory.
    pub name: String,
    #[serde(default = "default_units_note")]
    pub units_note: String,
    #[serde(default)]
    pub seed: u64,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bath: Option<BathConfig>,
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveConfig>,
    #[serde(default)]
    pub observables: Vec<ObservableConfig>,
    /// Observables compared across convergence branches; empty means all.
    #[serde(default)]
    pub convobs: Vec<String>,
    /// Sites whose reduced density matrix is recorded.
    #[serde(default)]
    pub reduced_density: Vec<usize>,
}

fn default_units_note() -> String {
    "dimensionless units".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelConfig {
    /// `dE/2 sz` coupled through `sz` to a bosonic bath.
    Puredephasing { delta_e: f64 },
    /// `w0/2 sz + Delta sx` coupled through `sx` to a bosonic bath.
    Spinboson { omega0: f64, delta: f64 },
    Xyz {
        n_sites: usize,
        jx: f64,
        jy: f64,
        jz: f64,
        #[serde(default)]
        hx: f64,
        #[serde(default)]
        hz: f64,
    },
    Hubbard {
        n_sites: usize,
        t: f64,
        u: f64,
        #[serde(default)]
        eps_d: f64,
    },
    /// Resonant level between a filled and an empty lead obtained from a
    /// band `eps(k) = k` on `[-half_bandwidth, half_bandwidth]` with constant
    /// hybridization `coupling`.
    Tightbinding {
        eps_d: f64,
        half_bandwidth: f64,
        coupling: f64,
        #[serde(default)]
        mu: f64,
    },
    /// Two-level system, reaction coordinate of dimension `d_rc`, bath.
    Protontransfer {
        omega0_e: f64,
        omega0_k: f64,
        delta: f64,
        omega_rc: f64,
        g_e: f64,
        g_k: f64,
        lambda_reorg: f64,
        d_rc: usize,
    },
}

impl ModelConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelConfig::Puredephasing { .. } => "puredephasing",
            ModelConfig::Spinboson { .. } => "spinboson",
            ModelConfig::Xyz { .. } => "xyz",
            ModelConfig::Hubbard { .. } => "hubbard",
            ModelConfig::Tightbinding { .. } => "tightbinding",
            ModelConfig::Protontransfer { .. } => "protontransfer",
        }
    }

    /// True for models that need a `[bath]` section.
    pub fn has_bath(&self) -> bool {
        !matches!(self, ModelConfig::Xyz { .. } | ModelConfig::Hubbard { .. })
    }

    /// True for bosonic chain models.
    pub fn is_bosonic(&self) -> bool {
        matches!(
            self,
            ModelConfig::Puredephasing { .. } | ModelConfig::Spinboson { .. } | ModelConfig::Protontransfer { .. }
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SdConfig {
    /// `2 alpha wc (w / wc)^s` on `[0, wc]`.
    Ohmic { alpha: f64, s: f64, omega_c: f64 },
    /// Piecewise-linear density through the given points.
    Tabulated { omega: Vec<f64>, values: Vec<f64> },
}

impl SdConfig {
    pub fn cutoff(&self) -> f64 {
        match self {
            SdConfig::Ohmic { omega_c, .. } => *omega_c,
            SdConfig::Tabulated { omega, .. } => omega.iter().fold(0.0f64, |a, w| a.max(w.abs())),
        }
    }
}

/// Either `"zero"` or an inverse temperature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TemperatureConfig {
    Named(ZeroTemperature),
    Beta { beta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroTemperature {
    Zero,
}

impl TemperatureConfig {
    pub fn spec(&self) -> TemperatureSpec {
        match self {
            TemperatureConfig::Named(_) => TemperatureSpec::Zero,
            TemperatureConfig::Beta { beta } => TemperatureSpec::Beta(*beta),
        }
    }
}

/// `"auto"` or an explicit number of chain modes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChainLength {
    Auto(AutoTag),
    Fixed(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl ChainLength {
    pub fn fixed(&self) -> Option<usize> {
        match self {
            ChainLength::Fixed(n) => Some(*n),
            ChainLength::Auto(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    /// Spectral density; fermionic models take the band from `[model]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sd: Option<SdConfig>,
    pub temperature: TemperatureConfig,
    /// Number of chain modes (per lead for fermionic models).
    pub n: ChainLength,
    /// Set when `n` was given as `"auto"`; records the rule that produced it.
    #[serde(default)]
    pub n_from_rule: bool,
    /// Local dimension of each bosonic chain mode.
    #[serde(default = "default_boson_dim")]
    pub d: usize,
    /// Gauss-Legendre points per panel for discretized chains (default 10 N).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_points: Option<usize>,
    /// Precomputed coefficient file used instead of the density.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs_file: Option<String>,
    /// Terminal-mode occupation above which the chain counts as too short.
    #[serde(default = "default_threshold")]
    pub occupation_threshold: f64,
}

fn default_boson_dim() -> usize {
    6
}

fn default_threshold() -> f64 {
    1e-3
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Tdvp1,
    Tdvp2,
    Dtdvp,
}

impl fmt::Display for MethodName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodName::Tdvp1 => "tdvp1",
            MethodName::Tdvp2 => "tdvp2",
            MethodName::Dtdvp => "dtdvp",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_final: f64,
    pub method: MethodName,
    /// Bond dimension of each convergence branch: `D` for tdvp1, the cap
    /// `D_max` for tdvp2 and dtdvp.
    pub convparams: Vec<usize>,
    #[serde(default = "default_trunc_tol")]
    pub trunc_tol: f64,
    #[serde(default = "default_growth_tol")]
    pub growth_tol: f64,
    #[serde(default = "default_krylov_dim")]
    pub krylov_dim: usize,
    #[serde(default = "default_krylov_tol")]
    pub krylov_tol: f64,
    /// Log progress every this many steps; 0 disables.
    #[serde(default = "default_progress")]
    pub progress_interval: usize,
}

fn default_trunc_tol() -> f64 {
    1e-10
}

fn default_growth_tol() -> f64 {
    1e-6
}

fn default_krylov_dim() -> usize {
    30
}

fn default_krylov_tol() -> f64 {
    1e-12
}

fn default_progress() -> usize {
    100
}

/// A local state: a catalog name or explicit `[re, im]` amplitudes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Named(String),
    Amplitudes(Vec<[f64; 2]>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// System state: `up`, `down`, `plus`, `minus`, `random` or amplitudes.
    #[serde(default = "default_system")]
    pub system: StateSpec,
    /// Explicit basis index for every site; overrides all other fields.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<usize>>,
    /// Tight-binding only: start with the impurity occupied.
    #[serde(default)]
    pub impurity_occupied: bool,
}

fn default_system() -> StateSpec {
    StateSpec::Named("up".into())
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            system: default_system(),
            basis: None,
            impurity_occupied: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveShape {
    Sin,
    Cos,
    Const,
}

/// `amplitude * shape(omega t) * op` on `site`, sampled at step midpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub site: usize,
    pub op: String,
    pub amplitude: f64,
    #[serde(default)]
    pub omega: f64,
    #[serde(default = "default_shape")]
    pub shape: DriveShape,
}

fn default_shape() -> DriveShape {
    DriveShape::Sin
}

/// Sites as `"all"`, `"chain"`, a single index, a list or `{ start, end }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SitesConfig {
    Named(String),
    Single(usize),
    List(Vec<usize>),
    Range { start: usize, end: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableConfig {
    /// Series name; derived from the operators when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub op: String,
    /// Second operator; makes this a two-site correlation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub op2: Option<String>,
    pub sites: SitesConfig,
}

impl ObservableConfig {
    /// `occ` for chain occupations, `corr` for hopping correlations,
    /// otherwise the operator names.
    pub fn resolved_name(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        match (self.op.as_str(), self.op2.as_deref()) {
            ("n", None) => "occ".into(),
            ("bdag", Some("b")) => "corr".into(),
            (a, None) => a.into(),
            (a, Some(b)) => format!("{a}*{b}"),
        }
    }
}

impl SimulationConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: toml::Value = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        // name the catalog before serde reports an unknown variant
        if let Some(kind) = raw.get("model").and_then(|m| m.get("kind")).and_then(|k| k.as_str()) {
            if !MODEL_CATALOG.contains(&kind) {
                return Err(CliError::Config(format!(
                    "unknown model `{kind}`; available models: {}",
                    MODEL_CATALOG.join(", ")
                )));
            }
        }
        let mut cfg: SimulationConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| CliError::Internal(format!("cannot serialize config: {e}")))
    }

    /// Number of chain modes, or 0 for lattice models.
    pub fn chain_len(&self) -> usize {
        self.bath.as_ref().and_then(|b| b.n.fixed()).unwrap_or(0)
    }

    /// Total number of MPS sites.
    pub fn n_sites(&self) -> usize {
        let n = self.chain_len();
        match &self.model {
            ModelConfig::Puredephasing { .. } | ModelConfig::Spinboson { .. } => 1 + n,
            ModelConfig::Protontransfer { .. } => 2 + n,
            ModelConfig::Tightbinding { .. } => 2 * n + 1,
            ModelConfig::Xyz { n_sites, .. } | ModelConfig::Hubbard { n_sites, .. } => *n_sites,
        }
    }

    fn bath_cutoff(&self) -> Option<f64> {
        match (&self.model, &self.bath) {
            (ModelConfig::Tightbinding { half_bandwidth, .. }, _) => Some(*half_bandwidth),
            (_, Some(b)) => b.sd.as_ref().map(|sd| sd.cutoff()),
            _ => None,
        }
    }

    /// Fills `"auto"` fields and checks every cross-field invariant.
    pub fn resolve(&mut self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(CliError::Config(format!("{field}: {msg}")));
        let cutoff = self.bath_cutoff();
        let tf = self.evolution.t_final;
        if self.model.has_bath() {
            let Some(bath) = self.bath.as_mut() else {
                return bad("bath", format!("model `{}` needs a [bath] section", self.model.kind()));
            };
            if let TemperatureConfig::Beta { beta } = bath.temperature {
                if !(beta > 0.0 && beta.is_finite()) {
                    return bad("bath.temperature.beta", format!("must be positive, got {beta}"));
                }
            }
            if let ChainLength::Auto(_) = bath.n {
                let wc = cutoff.ok_or_else(|| {
                    CliError::Config("bath.n: \"auto\" needs a spectral density with a cutoff".into())
                })?;
                let n = find_chain_length(tf, wc, bath.temperature.spec())
                    .map_err(|e| CliError::Config(format!("bath.n: {e}")))?;
                bath.n = ChainLength::Fixed(n);
                bath.n_from_rule = true;
            }
            if bath.n.fixed() == Some(0) {
                return bad("bath.n", "need at least one chain mode".into());
            }
            let fermionic = matches!(self.model, ModelConfig::Tightbinding { .. });
            if fermionic {
                if bath.sd.is_some() {
                    return bad("bath.sd", "fermionic leads take their band from [model]".into());
                }
                if matches!(bath.temperature, TemperatureConfig::Named(_)) {
                    return bad("bath.temperature", "fermionic leads need a finite beta".into());
                }
            } else if bath.sd.is_none() && bath.coeffs_file.is_none() {
                return bad("bath.sd", "give a spectral density or a coeffs_file".into());
            }
            if bath.d < 2 {
                return bad("bath.d", format!("must be at least 2, got {}", bath.d));
            }
            if bath.coeffs_file.is_none() {
                let n = bath.n.fixed().unwrap_or(1);
                let q = *bath.quad_points.get_or_insert(default_quad_points(n));
                if q < 4 * n {
                    return bad("bath.quad_points", format!("{q} is below 4 N = {}", 4 * n));
                }
            }
            if !(bath.occupation_threshold > 0.0) {
                return bad("bath.occupation_threshold", "must be positive".into());
            }
        } else if self.bath.is_some() {
            return bad("bath", format!("model `{}` takes no bath", self.model.kind()));
        }

        let ev = &self.evolution;
        if !(ev.dt > 0.0 && ev.dt.is_finite()) {
            return bad("evolution.dt", format!("must be positive, got {}", ev.dt));
        }
        tedopa_core::tdvp::step_count(ev.dt, ev.t_final).map_err(|e| CliError::Config(format!("evolution: {e}")))?;
        if ev.convparams.is_empty() || ev.convparams.contains(&0) {
            return bad("evolution.convparams", "need at least one positive bond dimension".into());
        }
        let mut cp = ev.convparams.clone();
        cp.sort_unstable();
        if cp.windows(2).any(|w| w[0] == w[1]) {
            return bad("evolution.convparams", format!("repeated entry in {:?}", ev.convparams));
        }
        if !(ev.trunc_tol >= 0.0 && ev.growth_tol >= 0.0 && ev.krylov_tol > 0.0) || ev.krylov_dim == 0 {
            return bad("evolution", "tolerances must be nonnegative and krylov_dim positive".into());
        }

        let n_sites = self.n_sites();
        let in_range = |s: usize| s >= 1 && s <= n_sites;
        for (k, o) in self.observables.iter().enumerate() {
            let sites: Vec<usize> = match &o.sites {
                SitesConfig::Named(s) if s == "all" || s == "chain" => Vec::new(),
                SitesConfig::Named(s) => {
                    return bad(&format!("observables[{k}].sites"), format!("unknown selector `{s}`"))
                }
                SitesConfig::Single(s) => vec![*s],
                SitesConfig::List(l) => l.clone(),
                SitesConfig::Range { start, end } => vec![*start, *end],
            };
            if let Some(s) = sites.iter().find(|&&s| !in_range(s)) {
                return bad(&format!("observables[{k}].sites"), format!("site {s} outside 1..={n_sites}"));
            }
        }
        let mut names: Vec<String> = self.observables.iter().map(|o| o.resolved_name()).collect();
        if let Some(n) = names.iter().find(|n| !valid_series_name(n)) {
            return bad("observables", format!("`{n}` is reserved or not usable as a file name"));
        }
        names.sort();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return bad("observables", format!("duplicate series name `{}`", w[0]));
        }
        for c in &self.convobs {
            if !names.contains(c) {
                return bad("convobs", format!("`{c}` is not an observable; have {names:?}"));
            }
        }
        if let Some(s) = self.reduced_density.iter().find(|&&s| !in_range(s)) {
            return bad("reduced_density", format!("site {s} outside 1..={n_sites}"));
        }
        if let Some(dr) = &self.drive {
            if !in_range(dr.site) {
                return bad("drive.site", format!("site {} outside 1..={n_sites}", dr.site));
            }
        }
        if let Some(b) = &self.initial.basis {
            if b.len() != n_sites {
                return bad("initial.basis", format!("{} entries for {n_sites} sites", b.len()));
            }
        }
        Ok(())
    }
}

/// Names used by the built-in series and characters unsafe in file names
/// are rejected.
fn valid_series_name(n: &str) -> bool {
    !n.is_empty()
        && !RESERVED_SERIES.contains(&n)
        && !n.starts_with("rdm")
        && !n.starts_with('_')
        && n.chars().all(|c| c.is_ascii_alphanumeric() || "_-*+.".contains(c))
}

/// Series written for every run.
pub const RESERVED_SERIES: &[&str] = &["norm", "energy", "bond_dims", "trunc_error"];

/// Reads and resolves a configuration file.
pub fn load_config(path: &Path) -> Result<SimulationConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    SimulationConfig::from_toml_str(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Writes the resolved configuration as TOML.
pub fn save_config(cfg: &SimulationConfig, path: &Path) -> Result<()> {
    std::fs::write(path, cfg.to_toml_string()?).map_err(|e| CliError::io(path, e))
}
