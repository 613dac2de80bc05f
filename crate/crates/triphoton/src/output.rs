//! Plain-text columnar readers and writers for simulation artifacts.
//!
//! Every file is self-describing: a `#`-prefixed metadata header naming the
//! producing command, code version, run id, frame, units and columns,
//! followed by whitespace-separated numeric columns. Floats are printed in
//! shortest round-trip form, so identical runs produce byte-identical data
//! files; the run manifest isolates everything time-dependent in `wall_*`
//! lines at the end of the file.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::analysis::WignerGrid;
use crate::config::Frame;
use crate::evolve::ScalarRecord;
use crate::{Error, Result};

/// Common metadata header: producing kind, version, run id, frame, units.
fn preamble(kind: &str, run_id: &str, frame: Frame) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# triphoton {kind}");
    let _ = writeln!(s, "# version: {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "# run_id: {run_id}");
    let _ = writeln!(s, "# frame: {frame}");
    let _ = writeln!(s, "# units: energies in meV, times in 1/meV");
    s
}

/// Compact label for a snapshot time in units of `1/kappa`, used in file
/// names: `0.216` stays `0.216`.
pub fn snapshot_label(t_kappa: f64) -> String {
    format!("{t_kappa}")
}

/// Write the scalar time series: one row per record with the time (1/meV),
/// the dimensionless `t * kappa`, the trace, the excited-state population
/// and the three mode occupations.
pub fn write_observables(
    path: &Path,
    run_id: &str,
    frame: Frame,
    kappa: f64,
    records: &[ScalarRecord],
) -> Result<()> {
    let mut s = preamble("mode observables", run_id, frame);
    let _ = writeln!(s, "# columns: t t_kappa trace excited_pop mean_n0 mean_n1 mean_n2 purity");
    for r in records {
        let _ = writeln!(
            s,
            "{} {} {} {} {} {} {} {}",
            r.t,
            r.t * kappa,
            r.trace,
            r.excited_pop,
            r.mean_n0,
            r.mean_n1,
            r.mean_n2,
            r.purity
        );
    }
    fs::write(path, s)?;
    Ok(())
}

/// Write a reduced density matrix as `(row, col, re, im)` quadruples in
/// row-major order (all entries, zeros included).
pub fn write_reduced_snapshot(
    path: &Path,
    run_id: &str,
    frame: Frame,
    t: f64,
    t_kappa: f64,
    rho: &Array2<C64>,
) -> Result<()> {
    let n = rho.nrows();
    let mut s = preamble("reduced density matrix snapshot", run_id, frame);
    let _ = writeln!(s, "# t: {t}");
    let _ = writeln!(s, "# t_kappa: {t_kappa}");
    let _ = writeln!(s, "# dim: {n}");
    let _ = writeln!(s, "# columns: row col re im");
    for i in 0..n {
        for j in 0..n {
            let z = rho[(i, j)];
            let _ = writeln!(s, "{i} {j} {} {}", z.re, z.im);
        }
    }
    fs::write(path, s)?;
    Ok(())
}

/// A reduced-density-matrix snapshot read back from disk.
#[derive(Debug, Clone)]
pub struct SnapshotFile {
    pub run_id: Option<String>,
    pub frame: Option<String>,
    pub t: Option<f64>,
    pub t_kappa: Option<f64>,
    pub rho: Array2<C64>,
}

fn malformed(path: &Path, what: impl std::fmt::Display) -> Error {
    Error::Config(format!("snapshot file '{}': {what}", path.display()))
}

/// Read a file written by [`write_reduced_snapshot`]. Unknown header lines
/// are ignored; the numeric body must be complete `(row, col, re, im)`
/// quadruples within the declared dimension.
pub fn read_reduced_snapshot(path: &Path) -> Result<SnapshotFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read snapshot '{}': {e}", path.display())))?;
    let mut meta: Vec<(String, String)> = Vec::new();
    let mut rows: Vec<(usize, usize, f64, f64)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once(':') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(malformed(
                path,
                format!("line {}: expected 'row col re im', got '{line}'", lineno + 1),
            ));
        }
        let row: usize = fields[0]
            .parse()
            .map_err(|_| malformed(path, format!("line {}: bad row index", lineno + 1)))?;
        let col: usize = fields[1]
            .parse()
            .map_err(|_| malformed(path, format!("line {}: bad column index", lineno + 1)))?;
        let re: f64 = fields[2]
            .parse()
            .map_err(|_| malformed(path, format!("line {}: bad real part", lineno + 1)))?;
        let im: f64 = fields[3]
            .parse()
            .map_err(|_| malformed(path, format!("line {}: bad imaginary part", lineno + 1)))?;
        rows.push((row, col, re, im));
    }
    let find = |key: &str| meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone());
    let dim: usize = match find("dim") {
        Some(v) => v.parse().map_err(|_| malformed(path, "bad 'dim' header"))?,
        None => rows
            .iter()
            .map(|&(r, c, _, _)| r.max(c) + 1)
            .max()
            .ok_or_else(|| malformed(path, "no matrix entries"))?,
    };
    if dim == 0 || rows.is_empty() {
        return Err(malformed(path, "no matrix entries"));
    }
    let mut rho = Array2::zeros((dim, dim));
    for (r, c, re, im) in rows {
        if r >= dim || c >= dim {
            return Err(malformed(path, format!("entry ({r}, {c}) outside dim = {dim}")));
        }
        rho[(r, c)] = C64::new(re, im);
    }
    let parse_time = |key: &str| -> Result<Option<f64>> {
        match find(key) {
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| malformed(path, format!("bad '{key}' header"))),
            None => Ok(None),
        }
    };
    Ok(SnapshotFile {
        run_id: find("run_id"),
        frame: find("frame"),
        t: parse_time("t")?,
        t_kappa: parse_time("t_kappa")?,
        rho,
    })
}

/// Write a photon-number distribution: one `(n, p)` row per Fock level.
pub fn write_photon_distribution(
    path: &Path,
    run_id: &str,
    frame: Frame,
    t: f64,
    t_kappa: f64,
    probs: &[f64],
) -> Result<()> {
    let mut s = preamble("photon number distribution", run_id, frame);
    let _ = writeln!(s, "# t: {t}");
    let _ = writeln!(s, "# t_kappa: {t_kappa}");
    let _ = writeln!(s, "# columns: n p");
    for (n, p) in probs.iter().enumerate() {
        let _ = writeln!(s, "{n} {p}");
    }
    fs::write(path, s)?;
    Ok(())
}

/// Write a Wigner function grid as `(x, p, W)` triples, one block per `x`
/// value separated by blank lines (directly plottable as a surface). The
/// header reports the quadrature integral over the grid and the source
/// snapshot the grid was computed from.
pub fn write_wigner_grid(
    path: &Path,
    run_id: &str,
    source: &str,
    t_kappa: Option<f64>,
    grid: &WignerGrid,
) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "# triphoton wigner grid");
    let _ = writeln!(s, "# version: {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "# run_id: {run_id}");
    let _ = writeln!(s, "# source: {source}");
    if let Some(tk) = t_kappa {
        let _ = writeln!(s, "# t_kappa: {tk}");
    }
    let n = grid.axis.len();
    let half = (grid.axis.last().copied().unwrap_or(0.0)).abs();
    let _ = writeln!(s, "# grid_n: {n}");
    let _ = writeln!(s, "# grid_max: {half}");
    let _ = writeln!(s, "# pad_levels: {}", grid.pad_levels);
    let _ = writeln!(s, "# integral: {}", grid.integral);
    if let Some(w) = &grid.coverage_warning {
        let _ = writeln!(s, "# warning: {w}");
    }
    let _ = writeln!(s, "# columns: x p w");
    for ix in 0..n {
        for jp in 0..n {
            let _ = writeln!(s, "{} {} {}", grid.axis[ix], grid.axis[jp], grid.values[(ix, jp)]);
        }
        if ix + 1 < n {
            let _ = writeln!(s);
        }
    }
    fs::write(path, s)?;
    Ok(())
}

/// Everything recorded about one CLI run. Rendered as a key-value text file;
/// all nondeterministic content (timing) sits in trailing `wall_*` lines so
/// the rest of the file is reproducible byte-for-byte.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    pub run_id: String,
    pub command: String,
    /// `ok`, or a short failure description.
    pub status: String,
    /// Canonical resolved configuration, one `key = value` per line.
    pub config_text: String,
    /// Derived coupling ratios, echoed for quick comparison.
    pub ratios: Vec<(String, f64)>,
    pub notes: Vec<String>,
    /// Output files written by the run (relative names).
    pub files: Vec<String>,
    /// Convergence-related flags and similar diagnostics.
    pub flags: Vec<(String, String)>,
    /// Wall-clock start (seconds since the Unix epoch) and duration.
    pub wall_start_unix: f64,
    pub wall_seconds: f64,
}

impl Manifest {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# triphoton run manifest");
        let _ = writeln!(s, "# wall_* lines vary between runs; everything else is deterministic");
        let _ = writeln!(s, "version = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "run_id = {}", self.run_id);
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(s, "status = {}", self.status);
        for n in &self.notes {
            let _ = writeln!(s, "note = {n}");
        }
        for (k, v) in &self.ratios {
            let _ = writeln!(s, "ratio {k} = {v}");
        }
        for line in self.config_text.lines() {
            let _ = writeln!(s, "config {line}");
        }
        for (k, v) in &self.flags {
            let _ = writeln!(s, "flag {k} = {v}");
        }
        for f in &self.files {
            let _ = writeln!(s, "file = {f}");
        }
        let _ = writeln!(s, "wall_start_unix = {}", self.wall_start_unix);
        let _ = writeln!(s, "wall_seconds = {}", self.wall_seconds);
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render())?;
        Ok(())
    }
}
