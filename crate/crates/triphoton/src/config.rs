//! Simulation configuration: a flat `key = value` format, defaults for the
//! three-photon preparation study, validation with per-key diagnostics, and a
//! canonical serialization that yields a deterministic run identifier.
//!
//! All rates and energies are in meV with hbar = 1, so time carries units of
//! 1/meV; times reported to the user are multiplied by the cavity loss rate
//! kappa to give the dimensionless `t * kappa`.

use crate::fock::{BasisState, DotLevel, FockSpace};
use crate::{Error, Result};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Reference frame for the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// Full Hamiltonian with all free-evolution terms.
    Lab,
    /// Interaction picture with respect to the free cavity/field energies;
    /// only the detuning of the dot transition from the cavity survives as a
    /// diagonal term.
    Rotating,
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frame::Lab => write!(f, "lab"),
            Frame::Rotating => write!(f, "rotating"),
        }
    }
}

impl FromStr for Frame {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lab" => Ok(Frame::Lab),
            "rotating" => Ok(Frame::Rotating),
            other => Err(Error::Config(format!(
                "frame: expected 'lab' or 'rotating', got '{other}'"
            ))),
        }
    }
}

/// Initial state of the joint dot-field system.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// Dot excited, all field modes in vacuum (the preparation protocol).
    ExcitedVacuum,
    /// Dot ground, all field modes in vacuum (a stationary reference point
    /// when the incoherent pump is switched off).
    GroundVacuum,
    /// Statistical mixture of basis states with non-negative weights;
    /// weights are normalized to unit total when the state is built.
    Mixture(Vec<(f64, BasisState)>),
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialState::ExcitedVacuum => write!(f, "excited-vacuum"),
            InitialState::GroundVacuum => write!(f, "ground-vacuum"),
            InitialState::Mixture(parts) => {
                for (i, (w, s)) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{w}*{s}")?;
                }
                Ok(())
            }
        }
    }
}

fn parse_basis_ket(s: &str) -> Result<BasisState> {
    let bad = || {
        Error::Config(format!(
            "initial_state: expected a ket like '|e,0,0,0>', got '{s}'"
        ))
    };
    let inner = s
        .trim()
        .strip_prefix('|')
        .and_then(|t| t.strip_suffix('>'))
        .ok_or_else(bad)?;
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(bad());
    }
    let dot = match parts[0] {
        "g" => DotLevel::Ground,
        "e" => DotLevel::Excited,
        _ => return Err(bad()),
    };
    let mut ns = [0u32; 3];
    for (slot, txt) in ns.iter_mut().zip(&parts[1..]) {
        *slot = txt.parse().map_err(|_| bad())?;
    }
    Ok(BasisState::new(dot, ns[0], ns[1], ns[2]))
}

impl FromStr for InitialState {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "excited-vacuum" => Ok(InitialState::ExcitedVacuum),
            "ground-vacuum" => Ok(InitialState::GroundVacuum),
            other if other.contains('|') => {
                let mut parts = Vec::new();
                for term in other.split(';') {
                    let term = term.trim();
                    let (weight, ket) = match term.split_once('*') {
                        Some((w, k)) => (
                            w.trim().parse::<f64>().map_err(|_| {
                                Error::Config(format!(
                                    "initial_state: bad weight in '{term}'"
                                ))
                            })?,
                            k,
                        ),
                        None => (1.0, term),
                    };
                    parts.push((weight, parse_basis_ket(ket)?));
                }
                Ok(InitialState::Mixture(parts))
            }
            other => Err(Error::Config(format!(
                "initial_state: expected 'excited-vacuum', 'ground-vacuum', or a \
                 'w*|dot,n0,n1,n2>' mixture, got '{other}'"
            ))),
        }
    }
}

/// Complete simulation configuration.
///
/// Defaults reproduce the three-photon preparation study: cavity at
/// 500 meV resonant with the dot, g = 5 meV, down-conversion strengths
/// zeta = 3 meV and xi = 1 meV, loss kappa = 0.1 meV, weak incoherent pump
/// P = 1e-4 meV, photon-number truncations (3, 9, 4).
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Cavity mode energy omega_0 (meV). The down-converted modes sit at
    /// omega_1 = omega_0 / 3 and omega_2 = 2 omega_0 / 3.
    pub omega0_mev: f64,
    /// Quantum-dot transition energy (meV).
    pub omega_qd_mev: f64,
    /// Dot-cavity coupling g (meV).
    pub g_mev: f64,
    /// Strength of the omega_0 -> omega_1 + omega_2 down-conversion (meV).
    pub zeta_mev: f64,
    /// Strength of the omega_2 -> 2 omega_1 down-conversion (meV).
    pub xi_mev: f64,
    /// Cavity loss rate kappa for the omega_0 mode (meV).
    pub kappa_mev: f64,
    /// Incoherent pump rate P of the dot (meV).
    pub pump_mev: f64,
    /// Reference frame for the Hamiltonian.
    pub frame: Frame,
    /// Photon-number truncations for modes (omega_0, omega_1, omega_2);
    /// mode k keeps Fock states 0..=trunc[k].
    pub trunc: [u32; 3],
    /// Integrator step in 1/meV; `None` selects a step from the spectral
    /// bounds of the generator.
    pub dt: Option<f64>,
    /// End of integration, as t * kappa.
    pub t_final_kappa: f64,
    /// Times (t * kappa) at which full density-matrix snapshots are taken.
    pub snapshots_kappa: Vec<f64>,
    /// Record scalar observables every this many integrator steps.
    pub record_stride: u32,
    /// Half-width of the Wigner phase-space grid (both x and p).
    pub grid_max: f64,
    /// Number of points per axis of the Wigner grid.
    pub grid_n: u32,
    /// Initial state of the joint system.
    pub initial_state: InitialState,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            omega0_mev: 500.0,
            omega_qd_mev: 500.0,
            g_mev: 5.0,
            zeta_mev: 3.0,
            xi_mev: 1.0,
            kappa_mev: 0.1,
            pump_mev: 1e-4,
            frame: Frame::Rotating,
            trunc: [3, 9, 4],
            dt: None,
            t_final_kappa: 0.5,
            snapshots_kappa: vec![0.0, 0.216, 0.328],
            record_stride: 50,
            grid_max: 6.0,
            grid_n: 201,
            initial_state: InitialState::ExcitedVacuum,
        }
    }
}

/// Every key accepted in config files and `--set` overrides, in canonical
/// (sorted) order.
pub const CONFIG_KEYS: [&str; 18] = [
    "dt",
    "frame",
    "g_mev",
    "grid_max",
    "grid_n",
    "initial_state",
    "kappa_mev",
    "omega0_mev",
    "omega_qd_mev",
    "pump_mev",
    "record_stride",
    "snapshots_kappa",
    "t_final_kappa",
    "trunc0",
    "trunc1",
    "trunc2",
    "xi_mev",
    "zeta_mev",
];

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value.trim().parse::<f64>().map_err(|_| {
        Error::Config(format!("{key}: expected a number, got '{value}'"))
    })
}

fn parse_u32(key: &str, value: &str) -> Result<u32> {
    value.trim().parse::<u32>().map_err(|_| {
        Error::Config(format!("{key}: expected a non-negative integer, got '{value}'"))
    })
}

impl SimConfig {
    /// Apply one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "omega0_mev" => self.omega0_mev = parse_f64(key, v)?,
            "omega_qd_mev" => self.omega_qd_mev = parse_f64(key, v)?,
            "g_mev" => self.g_mev = parse_f64(key, v)?,
            "zeta_mev" => self.zeta_mev = parse_f64(key, v)?,
            "xi_mev" => self.xi_mev = parse_f64(key, v)?,
            "kappa_mev" => self.kappa_mev = parse_f64(key, v)?,
            "pump_mev" => self.pump_mev = parse_f64(key, v)?,
            "frame" => self.frame = v.parse()?,
            "trunc0" => self.trunc[0] = parse_u32(key, v)?,
            "trunc1" => self.trunc[1] = parse_u32(key, v)?,
            "trunc2" => self.trunc[2] = parse_u32(key, v)?,
            "dt" => {
                self.dt = if v == "auto" { None } else { Some(parse_f64(key, v)?) };
            }
            "t_final_kappa" => self.t_final_kappa = parse_f64(key, v)?,
            "snapshots_kappa" => {
                let mut times = Vec::new();
                if !v.is_empty() {
                    for part in v.split(',') {
                        times.push(parse_f64(key, part)?);
                    }
                }
                times.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
                times.dedup();
                self.snapshots_kappa = times;
            }
            "record_stride" => self.record_stride = parse_u32(key, v)?,
            "grid_max" => self.grid_max = parse_f64(key, v)?,
            "grid_n" => self.grid_n = parse_u32(key, v)?,
            "initial_state" => self.initial_state = v.parse()?,
            other => {
                return Err(Error::Config(format!("unknown configuration key '{other}'")));
            }
        }
        Ok(())
    }

    /// Parse a flat `key = value` config file. `#` starts a comment; blank
    /// lines are ignored; a key may appear at most once.
    pub fn from_file(path: &Path) -> Result<SimConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config file '{}': {e}", path.display()))
        })?;
        Self::from_text(&text)
    }

    /// Parse config text in the flat `key = value` format.
    pub fn from_text(text: &str) -> Result<SimConfig> {
        let mut cfg = SimConfig::default();
        let mut seen: Vec<String> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected 'key = value', got '{}'",
                    lineno + 1,
                    line
                )));
            };
            let key = key.trim();
            if seen.iter().any(|k| k == key) {
                return Err(Error::Config(format!(
                    "line {}: duplicate key '{}'",
                    lineno + 1,
                    key
                )));
            }
            seen.push(key.to_string());
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    /// Check every field, returning the first violated constraint.
    pub fn validate(&self) -> Result<()> {
        let finite_pos = |key: &str, v: f64| -> Result<()> {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Config(format!("{key}: must be finite and > 0, got {v}")));
            }
            Ok(())
        };
        let finite_nonneg = |key: &str, v: f64| -> Result<()> {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("{key}: must be finite and >= 0, got {v}")));
            }
            Ok(())
        };
        finite_pos("omega0_mev", self.omega0_mev)?;
        finite_pos("omega_qd_mev", self.omega_qd_mev)?;
        finite_nonneg("g_mev", self.g_mev)?;
        finite_nonneg("zeta_mev", self.zeta_mev)?;
        finite_nonneg("xi_mev", self.xi_mev)?;
        finite_pos("kappa_mev", self.kappa_mev)?;
        finite_nonneg("pump_mev", self.pump_mev)?;
        for (i, &t) in self.trunc.iter().enumerate() {
            if t == 0 {
                return Err(Error::Config(format!(
                    "trunc{i}: must be >= 1 (mode needs at least Fock states 0 and 1)"
                )));
            }
        }
        // dimension cap is enforced by FockSpace::new
        FockSpace::new(self.trunc[0], self.trunc[1], self.trunc[2])?;
        if let Some(dt) = self.dt {
            finite_pos("dt", dt)?;
        }
        finite_pos("t_final_kappa", self.t_final_kappa)?;
        for &s in &self.snapshots_kappa {
            if !s.is_finite() || s < 0.0 {
                return Err(Error::Config(format!(
                    "snapshots_kappa: entries must be finite and >= 0, got {s}"
                )));
            }
            if s > self.t_final_kappa + 1e-12 {
                return Err(Error::Config(format!(
                    "snapshots_kappa: entry {s} exceeds t_final_kappa = {}",
                    self.t_final_kappa
                )));
            }
        }
        if self.record_stride == 0 {
            return Err(Error::Config("record_stride: must be >= 1".into()));
        }
        finite_pos("grid_max", self.grid_max)?;
        if self.grid_n < 2 {
            return Err(Error::Config(format!(
                "grid_n: must be >= 2, got {}",
                self.grid_n
            )));
        }
        if let InitialState::Mixture(parts) = &self.initial_state {
            if parts.is_empty() {
                return Err(Error::Config("initial_state: empty mixture".into()));
            }
            let space = self.space()?;
            let mut total = 0.0;
            for (w, s) in parts {
                if !w.is_finite() || *w < 0.0 {
                    return Err(Error::Config(format!(
                        "initial_state: weight {w} must be finite and >= 0"
                    )));
                }
                if !space.contains(s) {
                    return Err(Error::Config(format!(
                        "initial_state: {s} lies outside truncations {:?}",
                        self.trunc
                    )));
                }
                total += w;
            }
            if total <= 0.0 {
                return Err(Error::Config("initial_state: mixture weights sum to zero".into()));
            }
        }
        Ok(())
    }

    /// Fock space implied by the truncations.
    pub fn space(&self) -> Result<FockSpace> {
        FockSpace::new(self.trunc[0], self.trunc[1], self.trunc[2])
    }

    /// Detuning of the dot transition from the cavity (meV).
    pub fn detuning_mev(&self) -> f64 {
        self.omega_qd_mev - self.omega0_mev
    }

    /// End of integration in 1/meV.
    pub fn t_final(&self) -> f64 {
        self.t_final_kappa / self.kappa_mev
    }

    /// Snapshot times in 1/meV.
    pub fn snapshot_times(&self) -> Vec<f64> {
        self.snapshots_kappa.iter().map(|s| s / self.kappa_mev).collect()
    }

    /// Canonical flat serialization: sorted keys, one per line, shortest
    /// round-trip float formatting. Two configs are equal iff their canonical
    /// texts are equal.
    pub fn canonical_text(&self) -> String {
        let dt = match self.dt {
            None => "auto".to_string(),
            Some(v) => format!("{v}"),
        };
        let snaps = self
            .snapshots_kappa
            .iter()
            .map(|s| format!("{s}"))
            .collect::<Vec<_>>()
            .join(",");
        let mut pairs: Vec<(&str, String)> = vec![
            ("dt", dt),
            ("frame", self.frame.to_string()),
            ("g_mev", format!("{}", self.g_mev)),
            ("grid_max", format!("{}", self.grid_max)),
            ("grid_n", format!("{}", self.grid_n)),
            ("initial_state", self.initial_state.to_string()),
            ("kappa_mev", format!("{}", self.kappa_mev)),
            ("omega0_mev", format!("{}", self.omega0_mev)),
            ("omega_qd_mev", format!("{}", self.omega_qd_mev)),
            ("pump_mev", format!("{}", self.pump_mev)),
            ("record_stride", format!("{}", self.record_stride)),
            ("snapshots_kappa", snaps),
            ("t_final_kappa", format!("{}", self.t_final_kappa)),
            ("trunc0", format!("{}", self.trunc[0])),
            ("trunc1", format!("{}", self.trunc[1])),
            ("trunc2", format!("{}", self.trunc[2])),
            ("xi_mev", format!("{}", self.xi_mev)),
            ("zeta_mev", format!("{}", self.zeta_mev)),
        ];
        pairs.sort_by_key(|&(k, _)| k);
        let mut out = String::new();
        for (k, v) in pairs {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    /// Deterministic run identifier: first 12 hex digits of the SHA-256 of
    /// the canonical serialization.
    pub fn run_id(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        digest[..6].iter().map(|b| format!("{b:02x}")).collect()
    }
}
