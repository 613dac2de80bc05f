//! High-level run orchestration behind the CLI subcommands: `evolve`,
//! `wigner`, `validate` and `converge`.
//!
//! Each command is an ordinary library function taking a resolved
//! configuration (plus paths) and returning a structured report, so the
//! thin binary only parses arguments, forwards here, prints, and maps
//! errors onto exit codes. Everything is deterministic: identical inputs
//! produce byte-identical data files (the run manifest isolates wall-clock
//! timing in clearly marked lines).

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::analysis::{photon_distribution, reduce_to_mode1, wigner};
use crate::config::{Frame, SimConfig};
use crate::dynamics::Liouvillian;
use crate::evolve::{default_dt, evolve, initial_state, RecordSpec, Trajectory};
use crate::linalg::max_abs_diff;
use crate::oracle::elementwise_derivative;
use crate::output::{
    read_reduced_snapshot, snapshot_label, write_observables, write_photon_distribution,
    write_reduced_snapshot, write_wigner_grid, Manifest,
};
use crate::{Error, Result};

/// Coupling ratios echoed by every run for a quick sanity check against the
/// intended operating point (`g/kappa = 50`, `zeta/kappa = 30`,
/// `xi/kappa = 10`, `kappa/pump = 1000` at the defaults).
pub fn coupling_ratios(cfg: &SimConfig) -> Vec<(String, f64)> {
    let mut v = vec![
        ("g/kappa".to_string(), cfg.g_mev / cfg.kappa_mev),
        ("zeta/kappa".to_string(), cfg.zeta_mev / cfg.kappa_mev),
        ("xi/kappa".to_string(), cfg.xi_mev / cfg.kappa_mev),
    ];
    if cfg.pump_mev > 0.0 {
        v.push(("kappa/pump".to_string(), cfg.kappa_mev / cfg.pump_mev));
    }
    v
}

/// Files and summary data produced by one `evolve` run.
#[derive(Debug)]
pub struct EvolveOutput {
    pub run_id: String,
    pub dt: f64,
    pub steps: u64,
    /// `(t_kappa, file name)` for each written snapshot.
    pub snapshot_files: Vec<(f64, String)>,
    pub observables_file: String,
    pub manifest_file: String,
    pub trajectory: Trajectory,
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Express a snapshot time as the `t*kappa` value the user asked for.
///
/// The integrator lands on `snapshots_kappa / kappa` exactly, but the
/// product `t * kappa` does not round-trip bit-for-bit, which would leak
/// values like `0.21599999999999997` into file names. Snap back to the
/// nearest requested value when it is a clear match.
fn requested_tk(cfg: &SimConfig, t: f64) -> f64 {
    let tk = t * cfg.kappa_mev;
    cfg.snapshots_kappa
        .iter()
        .copied()
        .min_by(|a, b| {
            (a - tk).abs().partial_cmp(&(b - tk).abs()).expect("requested_tk: NaN snapshot")
        })
        .filter(|s| (s - tk).abs() <= 1e-9 * tk.abs().max(1.0))
        .unwrap_or(tk)
}

/// Requested snapshot `t*kappa` values in the order the integrator returns
/// snapshots: ascending and deduplicated.
fn ordered_snapshot_tks(cfg: &SimConfig) -> Vec<f64> {
    let mut v = cfg.snapshots_kappa.clone();
    v.sort_by(|a, b| a.partial_cmp(b).expect("snapshots_kappa: NaN entry"));
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    v
}

/// Run the configured evolution and write the full artifact set into
/// `out_dir`: the scalar time series, one reduced-density-matrix snapshot
/// and one photon distribution per requested time, and a run manifest.
/// If the integrator aborts, the manifest is still written with the failure
/// recorded before the error is returned.
pub fn cmd_evolve(cfg: &SimConfig, out_dir: &Path) -> Result<EvolveOutput> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let run_id = cfg.run_id();
    let started = Instant::now();
    let wall_start = unix_now();

    let mut manifest = Manifest {
        run_id: run_id.clone(),
        command: "evolve".into(),
        status: "ok".into(),
        config_text: cfg.canonical_text(),
        ratios: coupling_ratios(cfg),
        notes: vec![
            "snapshot times are dimensionless t*kappa; defaults 0, 0.216, 0.328".into(),
        ],
        files: Vec::new(),
        flags: Vec::new(),
        wall_start_unix: wall_start,
        wall_seconds: 0.0,
    };
    let manifest_file = "manifest.txt".to_string();

    let fail = |mut m: Manifest, err: Error| -> Error {
        m.status = format!("error: {err}");
        m.wall_seconds = started.elapsed().as_secs_f64();
        let _ = m.write(&out_dir.join("manifest.txt"));
        err
    };

    let liou = match Liouvillian::new(cfg) {
        Ok(l) => l,
        Err(e) => return Err(fail(manifest, e)),
    };
    let rho0 = match initial_state(liou.space(), &cfg.initial_state) {
        Ok(r) => r,
        Err(e) => return Err(fail(manifest, e)),
    };
    let dt_used = cfg.dt.unwrap_or_else(|| default_dt(&liou));
    manifest.flags.push((
        "dt".into(),
        format!("{dt_used}{}", if cfg.dt.is_none() { " (auto)" } else { "" }),
    ));

    let spec = RecordSpec { snapshot_times: cfg.snapshot_times(), stride: cfg.record_stride };
    let traj = match evolve(&liou, rho0, cfg.dt, cfg.t_final(), &spec) {
        Ok(t) => t,
        Err(e) => return Err(fail(manifest, e)),
    };
    manifest.flags.push(("steps".into(), traj.steps.to_string()));
    if let Some(last) = traj.records.last() {
        manifest.flags.push(("final_trace".into(), format!("{}", last.trace)));
    }

    let observables_file = "observables.dat".to_string();
    write_observables(
        &out_dir.join(&observables_file),
        &run_id,
        cfg.frame,
        cfg.kappa_mev,
        &traj.records,
    )?;
    manifest.files.push(observables_file.clone());

    let mut snapshot_files = Vec::new();
    for snap in &traj.snapshots {
        let tk = requested_tk(cfg, snap.t);
        let label = snapshot_label(tk);
        let reduced = reduce_to_mode1(liou.space(), &snap.rho);
        let snap_name = format!("snapshot_tk{label}.dat");
        write_reduced_snapshot(
            &out_dir.join(&snap_name),
            &run_id,
            cfg.frame,
            snap.t,
            tk,
            &reduced,
        )?;
        let dist_name = format!("photons_tk{label}.dat");
        write_photon_distribution(
            &out_dir.join(&dist_name),
            &run_id,
            cfg.frame,
            snap.t,
            tk,
            &photon_distribution(&reduced),
        )?;
        manifest.files.push(snap_name.clone());
        manifest.files.push(dist_name);
        snapshot_files.push((tk, snap_name));
    }

    manifest.wall_seconds = started.elapsed().as_secs_f64();
    manifest.write(&out_dir.join(&manifest_file))?;

    Ok(EvolveOutput {
        run_id,
        dt: traj.dt,
        steps: traj.steps,
        snapshot_files,
        observables_file,
        manifest_file,
        trajectory: traj,
    })
}

/// Compute a Wigner grid from a stored snapshot file and write it next to
/// the output directory. Returns the written path and the grid integral.
pub fn cmd_wigner(
    snapshot: &Path,
    grid_max: f64,
    grid_n: u32,
    out_dir: &Path,
) -> Result<(PathBuf, f64)> {
    if !(grid_max > 0.0 && grid_max.is_finite()) {
        return Err(Error::Config(format!(
            "grid_max: must be finite and > 0, got {grid_max}"
        )));
    }
    if grid_n < 2 {
        return Err(Error::Config(format!("grid_n: must be at least 2, got {grid_n}")));
    }
    std::fs::create_dir_all(out_dir)?;
    let file = read_reduced_snapshot(snapshot)?;
    let grid = wigner(&file.rho, grid_max, grid_n);
    let stem = snapshot
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("snapshot");
    let out_path = out_dir.join(format!("wigner_{stem}.dat"));
    let run_id = file.run_id.clone().unwrap_or_else(|| "unknown".into());
    let source = snapshot.file_name().and_then(|s| s.to_str()).unwrap_or("snapshot");
    write_wigner_grid(&out_path, &run_id, source, file.t_kappa, &grid)?;
    Ok((out_path, grid.integral))
}

/// One validation check: a name, a pass/fail verdict, and a short detail
/// string with the measured quantity.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!(
            "{} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

/// Run the built-in correctness checks against this configuration's
/// couplings and step settings:
///
/// 1. `oracle_equivalence` — the operator-built generator against the
///    element-wise reference on a full basis sweep in a small space,
/// 2. `step_size_guard` — the resolved step size against the stability
///    limit `dt * max_row_sum(H) <= 0.1` at the configured truncation,
/// 3. `frame_independence` — photon statistics of a lab-frame and a
///    rotating-frame run compared at `t*kappa = 0.216` in a reduced space.
///
/// Returns one result per check; the CLI exits nonzero if any fail.
pub fn cmd_validate(cfg: &SimConfig) -> Result<Vec<CheckResult>> {
    cfg.validate()?;
    let mut out = Vec::new();

    // 1: element-wise equivalence, full basis sweep at (1,1,1)
    {
        let mut probe = cfg.clone();
        probe.frame = Frame::Lab;
        probe.trunc = [1, 1, 1];
        probe.dt = None;
        let space = probe.space()?;
        let liou = Liouvillian::new(&probe)?;
        let dim = space.dim();
        let mut worst = 0.0_f64;
        let mut scale = 1.0_f64;
        for r in 0..dim {
            for c in 0..dim {
                let mut rho = Array2::<C64>::zeros((dim, dim));
                rho[(r, c)] = C64::new(1.0, 0.0);
                let a = elementwise_derivative(&space, &probe, &rho)?;
                let b = liou.apply(&rho);
                worst = worst.max(max_abs_diff(&a, &b));
                scale = scale.max(crate::linalg::max_abs(&b));
            }
        }
        let tol = 1e-12 * scale.max(1.0);
        out.push(CheckResult {
            name: "oracle_equivalence".into(),
            passed: worst < tol,
            detail: format!(
                "max |operator - elementwise| = {worst:.3e} over {} basis matrices (limit {tol:.1e})",
                dim * dim
            ),
        });
    }

    // 2: step-size stability guard at the configured truncation
    {
        let liou = Liouvillian::new(cfg)?;
        let dt_used = cfg.dt.unwrap_or_else(|| default_dt(&liou));
        let product = dt_used * liou.hamiltonian().max_abs_row_sum();
        out.push(CheckResult {
            name: "step_size_guard".into(),
            passed: product <= 0.1,
            detail: format!(
                "dt * max_row_sum(H) = {product:.3e} with dt = {dt_used:.3e} (limit 0.1)"
            ),
        });
    }

    // 3: frame independence of photon statistics in a reduced space
    {
        let mut lab = cfg.clone();
        lab.trunc = [1, 3, 1];
        lab.frame = Frame::Lab;
        lab.dt = None;
        let mut rot = lab.clone();
        rot.frame = Frame::Rotating;
        let t_check = 0.216 / lab.kappa_mev;
        // one shared step size so both frames march the same grid
        let lab_liou = Liouvillian::new(&lab)?;
        let dt = default_dt(&lab_liou);
        let dist = |c: &SimConfig| -> Result<Vec<f64>> {
            let liou = Liouvillian::new(c)?;
            let rho0 = initial_state(liou.space(), &c.initial_state)?;
            let spec = RecordSpec { snapshot_times: vec![t_check], stride: u32::MAX };
            let traj = evolve(&liou, rho0, Some(dt), t_check, &spec)?;
            let snap = &traj.snapshots.last().expect("missing snapshot").rho;
            Ok(photon_distribution(&reduce_to_mode1(liou.space(), snap)))
        };
        let (da, db) = (dist(&lab)?, dist(&rot)?);
        let diff = da
            .iter()
            .zip(&db)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        out.push(CheckResult {
            name: "frame_independence".into(),
            passed: diff < 1e-8,
            detail: format!(
                "max |p_lab(n) - p_rot(n)| = {diff:.3e} at t*kappa = 0.216 (limit 1e-8)"
            ),
        });
    }

    Ok(out)
}

/// One row of a convergence report: how much the mode-1 photon distribution
/// at one snapshot changes under one refinement.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    /// Which refinement: `trunc0+1`, `trunc1+1`, `trunc2+1` or `dt/2`.
    pub variant: String,
    pub t_kappa: f64,
    /// `max_n |p_base(n) - p_variant(n)|` (distributions zero-padded to a
    /// common length).
    pub max_change: f64,
    pub converged: bool,
}

impl ConvergenceRow {
    pub fn line(&self) -> String {
        format!(
            "{} variant={} t_kappa={} max_dp={:.3e} (limit 1e-6)",
            if self.converged { "PASS" } else { "FLAG" },
            self.variant,
            self.t_kappa,
            self.max_change
        )
    }
}

/// Max-abs difference of two distributions padded to equal length.
fn distribution_change(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    (0..len)
        .map(|i| {
            let x = a.get(i).copied().unwrap_or(0.0);
            let y = b.get(i).copied().unwrap_or(0.0);
            (x - y).abs()
        })
        .fold(0.0, f64::max)
}

/// Rerun the configured evolution with each truncation raised by one (one
/// mode at a time) and with the step halved, comparing the mode-1 photon
/// distribution at every snapshot time. Changes above `1e-6` are flagged.
pub fn cmd_converge(cfg: &SimConfig) -> Result<Vec<ConvergenceRow>> {
    cfg.validate()?;
    let tks = ordered_snapshot_tks(cfg);
    if tks.is_empty() {
        return Err(Error::Config(
            "converge: the configuration requests no snapshots to compare".into(),
        ));
    }
    // every run, base and variant, lands on the same canonical time list so
    // distributions pair positionally
    let times: Vec<f64> = tks.iter().map(|s| s / cfg.kappa_mev).collect();

    // base distributions, one per snapshot
    let run = |c: &SimConfig, dt: Option<f64>| -> Result<Vec<Vec<f64>>> {
        let liou = Liouvillian::new(c)?;
        let rho0 = initial_state(liou.space(), &c.initial_state)?;
        let spec = RecordSpec { snapshot_times: times.clone(), stride: u32::MAX };
        let traj = evolve(&liou, rho0, dt, c.t_final(), &spec)?;
        Ok(traj
            .snapshots
            .iter()
            .map(|s| photon_distribution(&reduce_to_mode1(liou.space(), &s.rho)))
            .collect())
    };

    let base_liou = Liouvillian::new(cfg)?;
    let base_dt = cfg.dt.unwrap_or_else(|| default_dt(&base_liou));
    let base = run(cfg, Some(base_dt))?;

    let mut variants: Vec<(String, SimConfig, Option<f64>)> = Vec::new();
    for axis in 0..3 {
        let mut v = cfg.clone();
        v.trunc[axis] += 1;
        variants.push((format!("trunc{axis}+1"), v, Some(base_dt)));
    }
    variants.push(("dt/2".into(), cfg.clone(), Some(base_dt / 2.0)));

    let mut rows = Vec::new();
    for (name, vcfg, dt) in variants {
        vcfg.validate()?;
        let dists = run(&vcfg, dt)?;
        for (k, &tk) in tks.iter().enumerate() {
            let change = distribution_change(&base[k], &dists[k]);
            rows.push(ConvergenceRow {
                variant: name.clone(),
                t_kappa: tk,
                max_change: change,
                converged: change < 1e-6,
            });
        }
    }
    Ok(rows)
}
