//! Turns a resolved configuration into the objects the evolution needs.

use std::path::Path;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tedopa_core::chain::{
    chaincoeffs_at_temperature, chaincoeffs_fermionic, quadrature_convergence, thermalized_sd,
    ChainCoefficients, FermionicBand, Lead, SpectralDensity, TemperatureSpec,
};
use tedopa_core::mpo::{
    hubbard_mpo, protontransfer_mpo, puredephasing_mpo, spinboson_mpo, tightbinding_mpo, xyz_mpo, HubbardParams,
    ProtonTransferParams, SpinBosonParams, XyzParams,
};
use tedopa_core::mps::{LocalState, MatrixProductState, Observable, SiteSelector};
use tedopa_core::ops;
use tedopa_core::scalar::is_hermitian;
use tedopa_core::tdvp::TimeDependentTerm;
use tedopa_core::{Mpo, Mps, Op, C64};

use crate::config::{
    BathConfig, DriveShape, ModelConfig, SdConfig, SimulationConfig, SitesConfig, StateSpec, TemperatureConfig,
};
use crate::error::{CliError, Result};

/// Name of the internal observable tracking the chain ends.
pub const TERMINAL_SERIES: &str = "_terminal_occ";

/// Chain coefficients of a run; fermionic models carry two leads.
#[derive(Clone, Debug)]
pub enum ChainSet {
    None,
    Bosonic(ChainCoefficients),
    Fermionic { empty: ChainCoefficients, filled: ChainCoefficients },
}

impl ChainSet {
    /// Files written under `chain/`, by name.
    pub fn files(&self) -> Vec<(&'static str, String)> {
        match self {
            ChainSet::None => Vec::new(),
            ChainSet::Bosonic(c) => vec![("coeffs.txt", c.to_text())],
            ChainSet::Fermionic { empty, filled } => {
                vec![("coeffs.txt", empty.to_text()), ("coeffs_filled.txt", filled.to_text())]
            }
        }
    }
}

/// Everything shared by the convergence branches of one run.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub local_dims: Vec<usize>,
    pub mpo: Mpo,
    pub psi0: Mps,
    pub observables: Vec<Observable<f64>>,
    /// Whether each observable's values can be complex.
    pub complex: Vec<bool>,
    pub drive: Option<TimeDependentTerm<f64>>,
    pub chains: ChainSet,
    /// Relative coefficient change under doubled quadrature, when discretized.
    pub quadrature_change: Option<f64>,
    /// Whether the hidden terminal-occupation observable is present (last).
    pub tracks_terminal: bool,
    /// Fermionic runs measure the filled end as a hole occupation.
    pub terminal_is_hole: Vec<bool>,
}

/// Spectral density described by the config.
pub fn spectral_density(sd: &SdConfig) -> Result<SpectralDensity> {
    let r = match sd {
        SdConfig::Ohmic { alpha, s, omega_c } => SpectralDensity::ohmic(*alpha, *s, *omega_c),
        SdConfig::Tabulated { omega, values } => SpectralDensity::tabulated(omega.clone(), values.clone()),
    };
    r.map_err(|e| CliError::from_core("bath.sd", e))
}

/// Band of the resonant-level leads: `eps(k) = k` with constant coupling.
fn with_band<R>(half_bandwidth: f64, coupling: f64, mu: f64, f: impl FnOnce(&FermionicBand<'_>) -> R) -> R {
    let disp = |k: f64| k;
    let coup = move |_: f64| coupling;
    let band = FermionicBand {
        dispersion: &disp,
        coupling: &coup,
        k_range: (-half_bandwidth, half_bandwidth),
        mu,
    };
    f(&band)
}

/// Builds (or reads) the chain coefficients of the configured bath.
pub fn build_chains(cfg: &SimulationConfig, base_dir: &Path) -> Result<(ChainSet, Option<f64>)> {
    let Some(bath) = &cfg.bath else {
        return Ok((ChainSet::None, None));
    };
    let n = cfg.chain_len();
    if let ModelConfig::Tightbinding { half_bandwidth, coupling, mu, .. } = cfg.model {
        let beta = match bath.temperature {
            TemperatureConfig::Beta { beta } => beta,
            TemperatureConfig::Named(_) => unreachable!("validated"),
        };
        let (empty, filled) = with_band(half_bandwidth, coupling, mu, |band| {
            let e = chaincoeffs_fermionic(n, beta, Lead::Empty, band, bath.quad_points);
            let f = chaincoeffs_fermionic(n, beta, Lead::Filled, band, bath.quad_points);
            (e, f)
        });
        let empty = empty.map_err(|e| CliError::from_core("empty lead", e))?;
        let filled = filled.map_err(|e| CliError::from_core("filled lead", e))?;
        return Ok((ChainSet::Fermionic { empty, filled }, None));
    }
    if let Some(file) = &bath.coeffs_file {
        return Ok((ChainSet::Bosonic(read_coeffs_file(bath, file, base_dir, n)?), None));
    }
    let sd = spectral_density(bath.sd.as_ref().expect("validated"))?;
    let temp = bath.temperature.spec();
    let chain = chaincoeffs_at_temperature(&sd, temp, n, bath.quad_points)
        .map_err(|e| CliError::from_core("chain mapping", e))?;
    let analytic = matches!((temp, &sd), (TemperatureSpec::Zero, SpectralDensity::Ohmic { .. }));
    let change = if analytic {
        None
    } else {
        let target = match temp {
            TemperatureSpec::Zero => sd,
            TemperatureSpec::Beta(b) => thermalized_sd(&sd, b).map_err(|e| CliError::from_core("bath", e))?,
        };
        Some(
            quadrature_convergence(&target, n, bath.quad_points)
                .map_err(|e| CliError::from_core("chain mapping", e))?,
        )
    };
    Ok((ChainSet::Bosonic(chain), change))
}

fn read_coeffs_file(bath: &BathConfig, file: &str, base_dir: &Path, n: usize) -> Result<ChainCoefficients> {
    let path = base_dir.join(file);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let c = ChainCoefficients::from_text(&text)
        .map_err(|e| CliError::Config(format!("bath.coeffs_file {}: {e}", path.display())))?;
    if c.len() < n {
        return Err(CliError::Config(format!(
            "bath.coeffs_file {} has {} modes, bath.n = {} requested",
            path.display(),
            c.len(),
            bath.n.fixed().unwrap_or(0)
        )));
    }
    c.truncated(n).map_err(|e| CliError::from_core("bath.coeffs_file", e))
}

/// Local dimension of every site, in order.
pub fn local_dims(cfg: &SimulationConfig) -> Vec<usize> {
    let n = cfg.chain_len();
    let d = cfg.bath.as_ref().map_or(0, |b| b.d);
    match &cfg.model {
        ModelConfig::Puredephasing { .. } | ModelConfig::Spinboson { .. } => {
            std::iter::once(2).chain(std::iter::repeat_n(d, n)).collect()
        }
        ModelConfig::Protontransfer { d_rc, .. } => [2, *d_rc].into_iter().chain(std::iter::repeat_n(d, n)).collect(),
        ModelConfig::Tightbinding { .. } => vec![2; 2 * n + 1],
        ModelConfig::Xyz { n_sites, .. } => vec![2; *n_sites],
        ModelConfig::Hubbard { n_sites, .. } => vec![4; *n_sites],
    }
}

/// 0-based sites of the bath chain(s); all sites for lattice models.
fn chain_sites(cfg: &SimulationConfig) -> Vec<usize> {
    let total = cfg.n_sites();
    match &cfg.model {
        ModelConfig::Puredephasing { .. } | ModelConfig::Spinboson { .. } => (1..total).collect(),
        ModelConfig::Protontransfer { .. } => (2..total).collect(),
        ModelConfig::Tightbinding { .. } | ModelConfig::Xyz { .. } | ModelConfig::Hubbard { .. } => {
            (0..total).collect()
        }
    }
}

fn build_mpo(cfg: &SimulationConfig, chains: &ChainSet) -> Result<Mpo> {
    let n = cfg.chain_len();
    let d = cfg.bath.as_ref().map_or(0, |b| b.d);
    let bosonic = || match chains {
        ChainSet::Bosonic(c) => c,
        _ => unreachable!("bosonic model without a bosonic chain"),
    };
    let r = match &cfg.model {
        ModelConfig::Puredephasing { delta_e } => puredephasing_mpo(*delta_e, d, n, bosonic()),
        ModelConfig::Spinboson { omega0, delta } => spinboson_mpo(
            &SpinBosonParams {
                omega0: *omega0,
                delta: *delta,
            },
            d,
            n,
            bosonic(),
        ),
        ModelConfig::Protontransfer {
            omega0_e,
            omega0_k,
            delta,
            omega_rc,
            g_e,
            g_k,
            lambda_reorg,
            d_rc,
        } => protontransfer_mpo(
            &ProtonTransferParams {
                omega0_e: *omega0_e,
                omega0_k: *omega0_k,
                delta: *delta,
                omega_rc: *omega_rc,
                g_e: *g_e,
                g_k: *g_k,
                lambda_reorg: *lambda_reorg,
            },
            *d_rc,
            d,
            n,
            bosonic(),
        ),
        ModelConfig::Tightbinding { eps_d, .. } => match chains {
            ChainSet::Fermionic { empty, filled } => tightbinding_mpo(n, *eps_d, empty, filled),
            _ => unreachable!("fermionic model without leads"),
        },
        ModelConfig::Xyz {
            n_sites,
            jx,
            jy,
            jz,
            hx,
            hz,
        } => xyz_mpo(
            *n_sites,
            &XyzParams {
                jx: *jx,
                jy: *jy,
                jz: *jz,
                hx: *hx,
                hz: *hz,
            },
        ),
        ModelConfig::Hubbard { n_sites, t, u, eps_d } => hubbard_mpo(
            *n_sites,
            &HubbardParams {
                t: *t,
                u: *u,
                eps_d: *eps_d,
            },
        ),
    };
    r.map_err(|e| CliError::from_core("model", e))
}

/// Operator names understood on spinful fermion (Hubbard) sites.
const HUBBARD_OPS: &[&str] = &["nup", "ndown", "ntot", "double", "id"];

fn hubbard_op(name: &str) -> Option<Op> {
    let (cu, cd) = (ops::c_up::<f64>(), ops::c_down::<f64>());
    let nu = cu.adjoint() * &cu;
    let nd = cd.adjoint() * &cd;
    match name {
        "nup" => Some(nu),
        "ndown" => Some(nd),
        "ntot" => Some(&nu + &nd),
        "double" => Some(&nu * &nd),
        "id" => Some(ops::identity(4)),
        _ => None,
    }
}

/// Looks up `name` for a site of local dimension `d`.
pub fn local_op(cfg: &SimulationConfig, name: &str, d: usize) -> Result<Op> {
    let found = if matches!(cfg.model, ModelConfig::Hubbard { .. }) {
        hubbard_op(name)
    } else {
        ops::by_name(name, d)
    };
    found.ok_or_else(|| {
        let catalog = if matches!(cfg.model, ModelConfig::Hubbard { .. }) {
            HUBBARD_OPS
        } else {
            ops::CATALOG
        };
        CliError::Config(format!(
            "operator `{name}` is not defined on a site of dimension {d}; available operators: {}",
            catalog.join(", ")
        ))
    })
}

/// 0-based sites selected by `sel`.
fn resolve_sites(cfg: &SimulationConfig, sel: &SitesConfig) -> Vec<usize> {
    match sel {
        SitesConfig::Named(s) if s == "chain" => chain_sites(cfg),
        SitesConfig::Named(_) => (0..cfg.n_sites()).collect(),
        SitesConfig::Single(s) => vec![s - 1],
        SitesConfig::List(l) => l.iter().map(|s| s - 1).collect(),
        SitesConfig::Range { start, end } => (*start - 1..*end).collect(),
    }
}

fn build_observables(cfg: &SimulationConfig, dims: &[usize]) -> Result<(Vec<Observable<f64>>, Vec<bool>)> {
    let mut obs = Vec::new();
    let mut complex = Vec::new();
    for (k, o) in cfg.observables.iter().enumerate() {
        let sites = resolve_sites(cfg, &o.sites);
        if sites.is_empty() {
            return Err(CliError::Config(format!("observables[{k}]: no sites selected")));
        }
        let d = dims[sites[0]];
        if let Some(&s) = sites.iter().find(|&&s| dims[s] != d) {
            return Err(CliError::Config(format!(
                "observables[{k}]: sites {} and {} have different local dimensions",
                sites[0] + 1,
                s + 1
            )));
        }
        let field = |e: CliError| match e {
            CliError::Config(m) => CliError::Config(format!("observables[{k}]: {m}")),
            other => other,
        };
        let op = local_op(cfg, &o.op, d).map_err(field)?;
        let name = o.resolved_name();
        let sel = SiteSelector::List(sites);
        match &o.op2 {
            None => {
                complex.push(!is_hermitian(&op, 1e-14));
                obs.push(Observable::one_site(name, op, sel));
            }
            Some(op2) => {
                let op2 = local_op(cfg, op2, d).map_err(field)?;
                complex.push(true);
                obs.push(Observable::two_site(name, op, op2, sel));
            }
        }
    }
    Ok((obs, complex))
}

fn named_state(name: &str, rng: &mut StdRng) -> Result<Vec<C64>> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let v = match name {
        "up" => vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        "down" => vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        "plus" => vec![C64::new(r, 0.0), C64::new(r, 0.0)],
        "minus" => vec![C64::new(r, 0.0), C64::new(-r, 0.0)],
        "random" => (0..2).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect(),
        other => {
            return Err(CliError::Config(format!(
                "initial.system: unknown state `{other}`; use up, down, plus, minus, random or amplitudes"
            )))
        }
    };
    Ok(v)
}

fn build_initial(cfg: &SimulationConfig, dims: &[usize]) -> Result<Mps> {
    let n = dims.len();
    let init = &cfg.initial;
    let states: Vec<LocalState<f64>> = if let Some(basis) = &init.basis {
        basis.iter().map(|&b| LocalState::Basis(b)).collect()
    } else {
        match &cfg.model {
            ModelConfig::Tightbinding { .. } => {
                let imp = cfg.chain_len();
                (0..n)
                    .map(|s| {
                        let occupied = s < imp || (s == imp && init.impurity_occupied);
                        LocalState::Basis(usize::from(occupied))
                    })
                    .collect()
            }
            ModelConfig::Xyz { .. } | ModelConfig::Hubbard { .. } => {
                // Neel-like start: alternate the first two basis states
                (0..n).map(|s| LocalState::Basis(s % 2)).collect()
            }
            _ => {
                let mut rng = StdRng::seed_from_u64(cfg.seed);
                let sys = match &init.system {
                    StateSpec::Named(s) => named_state(s, &mut rng)?,
                    StateSpec::Amplitudes(a) => a.iter().map(|z| C64::new(z[0], z[1])).collect(),
                };
                if sys.len() != 2 {
                    return Err(CliError::Config(format!(
                        "initial.system: {} amplitudes for a two-level system",
                        sys.len()
                    )));
                }
                let sys = LocalState::normalized(sys).map_err(|e| CliError::from_core("initial.system", e))?;
                std::iter::once(sys)
                    .chain((1..n).map(|_| LocalState::Basis(0)))
                    .collect()
            }
        }
    };
    MatrixProductState::product_state(dims, &states).map_err(|e| CliError::from_core("initial", e))
}

fn build_drive(cfg: &SimulationConfig, dims: &[usize]) -> Result<Option<TimeDependentTerm<f64>>> {
    let Some(dr) = &cfg.drive else {
        return Ok(None);
    };
    let site = dr.site - 1;
    let op = local_op(cfg, &dr.op, dims[site]).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("drive.op: {m}")),
        other => other,
    })?;
    if !is_hermitian(&op, 1e-14) {
        return Err(CliError::Config(format!("drive.op: `{}` is not Hermitian", dr.op)));
    }
    let ev = &cfg.evolution;
    let steps = tedopa_core::tdvp::step_count(ev.dt, ev.t_final).map_err(|e| CliError::from_core("evolution", e))?;
    // sampled at the step midpoint
    let ops = (0..steps)
        .map(|k| {
            let t = (k as f64 + 0.5) * ev.dt;
            let f = match dr.shape {
                DriveShape::Sin => (dr.omega * t).sin(),
                DriveShape::Cos => (dr.omega * t).cos(),
                DriveShape::Const => 1.0,
            };
            op.map(|z| z * (dr.amplitude * f))
        })
        .collect();
    Ok(Some(TimeDependentTerm { site, ops }))
}

/// Builds chain, MPO, initial state, observables and drive; `base_dir`
/// anchors relative paths in the config.
pub fn prepare(cfg: &SimulationConfig, base_dir: &Path) -> Result<Prepared> {
    let (chains, quadrature_change) = build_chains(cfg, base_dir)?;
    let local_dims = local_dims(cfg);
    let mpo = build_mpo(cfg, &chains)?;
    let psi0 = build_initial(cfg, &local_dims)?;
    let (mut observables, mut complex) = build_observables(cfg, &local_dims)?;
    let drive = build_drive(cfg, &local_dims)?;
    let n = local_dims.len();
    let (tracks_terminal, terminal_is_hole) = match &cfg.model {
        _ if !cfg.model.has_bath() => (false, Vec::new()),
        ModelConfig::Tightbinding { .. } => {
            observables.push(Observable::one_site(
                TERMINAL_SERIES,
                ops::number(2),
                SiteSelector::List(vec![0, n - 1]),
            ));
            (true, vec![true, false])
        }
        _ => {
            let d = local_dims[n - 1];
            observables.push(Observable::one_site(TERMINAL_SERIES, ops::number(d), SiteSelector::Single(n - 1)));
            (true, vec![false])
        }
    };
    if tracks_terminal {
        complex.push(false);
    }
    for o in &observables {
        o.validate(&local_dims).map_err(|e| CliError::from_core("observables", e))?;
    }
    Ok(Prepared {
        local_dims,
        mpo,
        psi0,
        observables,
        complex,
        drive,
        chains,
        quadrature_change,
        tracks_terminal,
        terminal_is_hole,
    })
}
