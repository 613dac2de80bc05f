//! Hamiltonian assembly, the conserved excitation charge, and the Lindblad
//! generator for the dot-cavity system with cascaded down-conversion.
//!
//! The Hamiltonian couples a two-level dot to the cavity mode at omega_0
//! (exchange strength g) and chains two parametric processes: a photon at
//! omega_0 splits into omega_1 + omega_2 (strength zeta), and a photon at
//! omega_2 splits into two omega_1 photons (strength xi). All couplings are
//! real, so the Hamiltonian is a real symmetric sparse matrix; the density
//! matrix alone is complex.
//!
//! The open-system evolution is
//!
//! ```text
//! d rho/dt = i [rho, H]
//!          + (P/2)     (2 s+ rho s-  - s- s+ rho - rho s- s+)
//!          + (kappa/2) (2 a0 rho a0+ - a0+ a0 rho - rho a0+ a0)
//! ```
//!
//! with an incoherent pump P on the dot (jump operator s+ = |e><g|) and
//! photon loss kappa from the omega_0 cavity mode.

use crate::config::{Frame, SimConfig};
use crate::fock::{
    dot_lowering, ladder, number_op, DotLevel, FockSpace, Ladder, Mode, SparseOp,
};
use crate::sector::SectorLayout;
use crate::Result;
use ndarray::Array2;
use num_complex::Complex64 as C64;

/// Assemble the Hamiltonian for `cfg` on `space` as a real symmetric sparse
/// matrix (meV units).
///
/// In the lab frame the free energies `omega_0 n_0 + (omega_0/3) n_1 +
/// (2 omega_0/3) n_2 + omega_qd |e><e|` are included; in the rotating frame
/// they cancel against the interaction-picture transformation except for the
/// dot-cavity detuning, leaving `(omega_qd - omega_0) |e><e|`. The coupling
/// terms are identical in both frames because every interaction conserves
/// the total energy quantum at exact resonance of the mode ladder.
pub fn build_hamiltonian(space: &FockSpace, cfg: &SimConfig) -> SparseOp {
    let a0 = ladder(space, Mode::Omega0, Ladder::Lower);
    let a0d = ladder(space, Mode::Omega0, Ladder::Raise);
    let a1d = ladder(space, Mode::Omega1, Ladder::Raise);
    let a2 = ladder(space, Mode::Omega2, Ladder::Lower);
    let a2d = ladder(space, Mode::Omega2, Ladder::Raise);
    let sigma = dot_lowering(space);
    let sigma_dag = sigma.adjoint();

    // g (a0+ s- + a0 s+): excitation exchange between dot and cavity
    let exch_half = a0d.matmul(&sigma);
    let exch_half_dag = exch_half.adjoint();
    let exchange = SparseOp::linear_combination(&[(1.0, &exch_half), (1.0, &exch_half_dag)]);

    // zeta (a0 a1+ a2+ + h.c.): omega_0 -> omega_1 + omega_2
    let split_half = a0.matmul(&a1d).matmul(&a2d);
    let split_half_dag = split_half.adjoint();
    let split = SparseOp::linear_combination(&[(1.0, &split_half), (1.0, &split_half_dag)]);

    // xi (a1+^2 a2 + h.c.): omega_2 -> 2 omega_1
    let cascade_half = a1d.matmul(&a1d).matmul(&a2);
    let cascade_half_dag = cascade_half.adjoint();
    let cascade =
        SparseOp::linear_combination(&[(1.0, &cascade_half), (1.0, &cascade_half_dag)]);

    let excited_proj = sigma_dag.matmul(&sigma);

    let mut terms: Vec<(f64, &SparseOp)> = vec![
        (cfg.g_mev, &exchange),
        (cfg.zeta_mev, &split),
        (cfg.xi_mev, &cascade),
    ];
    let n0 = number_op(space, Mode::Omega0);
    let n1 = number_op(space, Mode::Omega1);
    let n2 = number_op(space, Mode::Omega2);
    match cfg.frame {
        Frame::Rotating => {
            terms.push((cfg.omega_qd_mev - cfg.omega0_mev, &excited_proj));
        }
        Frame::Lab => {
            terms.push((cfg.omega0_mev, &n0));
            terms.push((cfg.omega0_mev / 3.0, &n1));
            terms.push((2.0 * cfg.omega0_mev / 3.0, &n2));
            terms.push((cfg.omega_qd_mev, &excited_proj));
        }
    }
    SparseOp::linear_combination(&terms)
}

/// Diagonal operator `Q = 3 n_0 + 3 |e><e| + n_1 + 2 n_2`.
///
/// Every Hamiltonian coupling conserves Q exactly, so `[H, Q] = 0` with no
/// floating-point error; the dissipators shift Q by multiples of 3, which
/// confines the evolved state to basis states with `Q mod 3` equal to that
/// of the initial state.
pub fn charge_operator(space: &FockSpace) -> SparseOp {
    let trips = space
        .states()
        .enumerate()
        .map(|(i, s)| (i, i, s.charge() as f64))
        .collect::<Vec<_>>();
    SparseOp::from_triplets(space.dim(), trips)
}

/// Build the Lindblad generator for a configuration; convenience alias for
/// [`Liouvillian::new`].
pub fn build_liouvillian(cfg: &SimConfig) -> Result<Liouvillian> {
    Liouvillian::new(cfg)
}

/// The Lindblad generator, packaged for repeated application.
///
/// `apply_hermitian` is the production path: it exploits `rho = rho^dag` to
/// form the commutator from a single sparse-dense product and accumulates
/// the dissipators with index arithmetic instead of operator products. The
/// output is exactly Hermitian whenever the input is, so Hermiticity is
/// preserved bit-for-bit through Runge-Kutta stages.
pub struct Liouvillian {
    space: FockSpace,
    h: SparseOp,
    kappa: f64,
    pump: f64,
    /// `sqrt(n0 + 1)` per flat index; zero where raising n0 would leave the
    /// truncated space.
    loss_amp: Vec<f64>,
    /// Flat-index offset that raises n0 by one.
    loss_shift: usize,
    /// Index ranges (one per dot level) where `n0 < trunc0`.
    loss_ranges: [(usize, usize); 2],
    /// `kappa/2 * n0(i) + P/2 * [dot(i) = g]`, the anticommutator diagonal.
    decay_diag: Vec<f64>,
    /// `dim / 2`: offset between the ground and excited dot blocks.
    half: usize,
    /// Charge-sector block layout for the packed fast path.
    sectors: SectorLayout,
}

impl Liouvillian {
    pub fn new(cfg: &SimConfig) -> Result<Liouvillian> {
        let space = cfg.space()?;
        let h = build_hamiltonian(&space, cfg);
        let dim = space.dim();
        let half = dim / 2;
        let [t0, _, _] = space.trunc();
        let d1 = space.levels(Mode::Omega1);
        let d2 = space.levels(Mode::Omega2);
        let loss_shift = d1 * d2;
        let band = t0 as usize * loss_shift;
        let mut loss_amp = vec![0.0; dim];
        let mut decay_diag = vec![0.0; dim];
        for (i, s) in space.states().enumerate() {
            if s.n0 < t0 {
                loss_amp[i] = ((s.n0 + 1) as f64).sqrt();
            }
            decay_diag[i] = 0.5 * cfg.kappa_mev * s.n0 as f64
                + if s.dot == DotLevel::Ground { 0.5 * cfg.pump_mev } else { 0.0 };
        }
        let sectors = SectorLayout::new(&space, &h, &decay_diag, &loss_amp, loss_shift, half);
        Ok(Liouvillian {
            space,
            h,
            kappa: cfg.kappa_mev,
            pump: cfg.pump_mev,
            loss_amp,
            loss_shift,
            loss_ranges: [(0, band), (half, half + band)],
            decay_diag,
            half,
            sectors,
        })
    }

    /// Charge-sector layout backing the packed fast path.
    pub(crate) fn sectors(&self) -> &SectorLayout {
        &self.sectors
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn hamiltonian(&self) -> &SparseOp {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn pump(&self) -> f64 {
        self.pump
    }

    /// Time derivative of a Hermitian density matrix: `out = L(rho)`.
    ///
    /// `scratch` is caller-provided workspace; `rho` must be exactly
    /// Hermitian for the commutator shortcut to be valid.
    pub fn apply_hermitian(
        &self,
        rho: &Array2<C64>,
        out: &mut Array2<C64>,
        scratch: &mut ApplyScratch,
    ) {
        let n = self.dim();
        self.h.mul_dense(rho, &mut scratch.prod); // prod = H rho
        let m1 = scratch.prod.as_slice().expect("apply_hermitian: scratch not contiguous");
        let o = out.as_slice_mut().expect("apply_hermitian: output not contiguous");
        let r = rho.as_slice().expect("apply_hermitian: rho not contiguous");
        let row = &mut scratch.row;
        let s = self.loss_shift;
        let half = self.half;
        // One fused pass per row: commutator, anticommutator and sandwich
        // terms accumulate into a row buffer, which is then mirrored onto
        // the conjugate column. Every (i,j) value is computed exactly once
        // and written as val / val.conj(), so the output is Hermitian
        // bit-for-bit whenever the input is.
        for i in 0..n {
            let di = self.decay_diag[i];
            // i [rho, H] = -i (H rho - (H rho)^dag): entry (i,j) is
            // (z.im + w.im, w.re - z.re) with z = (H rho)[i,j], w = (H rho)[j,i];
            // minus the anticommutator diagonal (decay_diag[i] + decay_diag[j]).
            for j in i..n {
                let z = m1[i * n + j];
                let w = m1[j * n + i];
                let rij = r[i * n + j];
                let dj = di + self.decay_diag[j];
                row[j] = C64::new(z.im + w.im - dj * rij.re, w.re - z.re - dj * rij.im);
            }
            // kappa a0 rho a0+: both indices must admit one more cavity photon,
            // which restricts j to the loss ranges. The coefficient is formed
            // as kappa * (amp_i * amp_j) so mirrored entries stay conjugate.
            let ai = self.loss_amp[i];
            if ai != 0.0 {
                let src = &r[(i + s) * n..(i + s + 1) * n];
                for (lo, hi) in self.loss_ranges {
                    for j in lo.max(i)..hi {
                        row[j] += self.kappa * (ai * self.loss_amp[j]) * src[j + s];
                    }
                }
            }
            // P s+ rho s-: ground-ground block feeds the excited-excited block
            if i >= half && self.pump != 0.0 {
                let src = &r[(i - half) * n..(i - half + 1) * n - half];
                for j in i..n {
                    row[j] += self.pump * src[j - half];
                }
            }
            o[i * n + i] = C64::new(row[i].re, 0.0);
            for j in (i + 1)..n {
                let val = row[j];
                o[i * n + j] = val;
                o[j * n + i] = val.conj();
            }
        }
    }

    /// Time derivative of an arbitrary (not necessarily Hermitian) matrix.
    ///
    /// Reference path for tests and element-wise comparisons; allocates its
    /// own workspace.
    pub fn apply(&self, rho: &Array2<C64>) -> Array2<C64> {
        let n = self.dim();
        let mut hr = Array2::<C64>::zeros((n, n));
        self.h.mul_dense(rho, &mut hr);
        // rho H = (H rho^T)^T because H is real symmetric
        let rho_t = rho.t().as_standard_layout().to_owned();
        let mut hrt = Array2::<C64>::zeros((n, n));
        self.h.mul_dense(&rho_t, &mut hrt);
        let mut out = Array2::<C64>::zeros((n, n));
        {
            let o = out.as_slice_mut().unwrap();
            let a = hr.as_slice().unwrap();
            let b = hrt.as_slice().unwrap();
            let minus_i = C64::new(0.0, -1.0);
            for i in 0..n {
                for j in 0..n {
                    o[i * n + j] = minus_i * (a[i * n + j] - b[j * n + i]);
                }
            }
            self.add_dissipators(rho.as_slice().unwrap(), o);
        }
        out
    }

    /// Accumulate pump and loss dissipators into `o` (both flat row-major).
    fn add_dissipators(&self, r: &[C64], o: &mut [C64]) {
        let n = self.dim();
        let half = self.half;
        let s = self.loss_shift;
        // kappa a0 rho a0+ (the factor 2 of the dissipator cancels kappa/2).
        // The coefficient is formed as kappa * (amp_i * amp_j) so that the
        // (i,j) and (j,i) contributions are bitwise conjugate.
        for (lo, hi) in self.loss_ranges {
            for i in lo..hi {
                let ai = self.loss_amp[i];
                let src = &r[(i + s) * n..(i + s + 1) * n];
                let dst = &mut o[i * n..(i + 1) * n];
                for (jlo, jhi) in self.loss_ranges {
                    for j in jlo..jhi {
                        dst[j] += self.kappa * (ai * self.loss_amp[j]) * src[j + s];
                    }
                }
            }
        }
        // P s+ rho s-: copies the ground-ground block onto the excited-excited block
        if self.pump != 0.0 {
            for p in 0..half {
                let src = &r[p * n..p * n + half];
                let dst = &mut o[(half + p) * n + half..(half + p + 1) * n];
                for (d, &v) in dst.iter_mut().zip(src) {
                    *d += self.pump * v;
                }
            }
        }
        // -(kappa/2){n0, rho} - (P/2){|g><g|, rho}, fused diagonal pass
        for i in 0..n {
            let di = self.decay_diag[i];
            let row = &mut o[i * n..(i + 1) * n];
            let src = &r[i * n..(i + 1) * n];
            for j in 0..n {
                row[j] -= (di + self.decay_diag[j]) * src[j];
            }
        }
    }

    /// Estimate of the largest absolute Hamiltonian eigenvalue by power
    /// iteration on `H^2` (the spectrum is nearly symmetric about zero, so
    /// iterating on `H` itself would not converge). Deterministic start
    /// vector; the estimate is accurate to a few percent, which is all the
    /// step-size heuristic needs.
    pub fn hamiltonian_spectral_bound(&self) -> f64 {
        let n = self.dim();
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * (i % 7) as f64).collect();
        let mut y = vec![0.0; n];
        let matvec = |src: &[f64], dst: &mut [f64], h: &SparseOp| {
            for rr in 0..n {
                dst[rr] = h.row(rr).map(|(c, v)| v * src[c]).sum();
            }
        };
        let mut lam2 = 0.0;
        for _ in 0..60 {
            matvec(&x, &mut y, &self.h);
            let z = y.clone();
            matvec(&z, &mut y, &self.h);
            lam2 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if lam2 == 0.0 {
                return 0.0;
            }
            for (xi, yi) in x.iter_mut().zip(&y) {
                *xi = yi / lam2;
            }
        }
        lam2.sqrt()
    }

    /// Bound on the generator's stiffness used by the automatic step rule:
    /// spectral bound of `H` (slightly inflated to cover the power-iteration
    /// tolerance) plus the largest dissipative rates.
    pub fn stiffness_bound(&self) -> f64 {
        let [t0, _, _] = self.space.trunc();
        1.02 * self.hamiltonian_spectral_bound() + self.kappa * t0 as f64 + self.pump
    }
}

/// Reusable workspace for [`Liouvillian::apply_hermitian`], allocated once
/// per trajectory: the `H rho` product and a single-row accumulator.
pub struct ApplyScratch {
    prod: Array2<C64>,
    row: Vec<C64>,
}

impl ApplyScratch {
    pub fn new(dim: usize) -> ApplyScratch {
        ApplyScratch { prod: Array2::zeros((dim, dim)), row: vec![C64::new(0.0, 0.0); dim] }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::BasisState;
    use crate::linalg::{conj_transpose, hermiticity_deviation, hermitian_part, max_abs_diff};
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_cfg() -> SimConfig {
        let mut cfg = SimConfig::default();
        cfg.trunc = [1, 1, 1];
        cfg
    }

    fn random_matrix(n: usize, seed: u64, hermitian: bool) -> Array2<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Array2::from_shape_fn((n, n), |_| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        if hermitian {
            hermitian_part(&a)
        } else {
            a
        }
    }

    #[test]
    fn hamiltonian_is_symmetric_both_frames() {
        for frame in [Frame::Rotating, Frame::Lab] {
            let mut cfg = SimConfig::default();
            cfg.frame = frame;
            let space = cfg.space().unwrap();
            let h = build_hamiltonian(&space, &cfg);
            assert_eq!(h.symmetry_deviation(), 0.0, "frame {frame}");
        }
    }

    #[test]
    fn hamiltonian_matrix_elements() {
        let cfg = SimConfig::default();
        let space = cfg.space().unwrap();
        let h = build_hamiltonian(&space, &cfg);
        let idx = |dot, n0, n1, n2| space.flatten(&BasisState::new(dot, n0, n1, n2)).unwrap();
        use DotLevel::*;
        // g <g,1,0,0|H|e,0,0,0>
        assert_eq!(h.element(idx(Ground, 1, 0, 0), idx(Excited, 0, 0, 0)), 5.0);
        // zeta <g,0,1,1|H|g,1,0,0>
        assert_eq!(h.element(idx(Ground, 0, 1, 1), idx(Ground, 1, 0, 0)), 3.0);
        // xi sqrt(2) <g,0,2,0|H|g,0,0,1>
        let v = h.element(idx(Ground, 0, 2, 0), idx(Ground, 0, 0, 1));
        assert!((v - 2f64.sqrt()).abs() < 1e-15);
        // xi (a1+)^2 from |n1=1>: sqrt(2*3) <g,0,3,0|H|g,0,1,1>
        let v = h.element(idx(Ground, 0, 3, 0), idx(Ground, 0, 1, 1));
        assert!((v - 6f64.sqrt()).abs() < 1e-15);
        // resonant rotating frame: diagonal vanishes entirely
        assert_eq!(h.element(idx(Excited, 0, 0, 0), idx(Excited, 0, 0, 0)), 0.0);
    }

    #[test]
    fn rotating_frame_keeps_only_detuning() {
        let mut cfg = SimConfig::default();
        cfg.omega_qd_mev = 501.0;
        let space = cfg.space().unwrap();
        let h = build_hamiltonian(&space, &cfg);
        let e = space.flatten(&BasisState::new(DotLevel::Excited, 2, 3, 1)).unwrap();
        let g = space.flatten(&BasisState::new(DotLevel::Ground, 2, 3, 1)).unwrap();
        assert_eq!(h.element(e, e), 1.0); // omega_qd - omega0
        assert_eq!(h.element(g, g), 0.0);
    }

    #[test]
    fn lab_frame_free_energies() {
        let mut cfg = SimConfig::default();
        cfg.frame = Frame::Lab;
        let space = cfg.space().unwrap();
        let h = build_hamiltonian(&space, &cfg);
        let i = space.flatten(&BasisState::new(DotLevel::Excited, 1, 2, 3)).unwrap();
        let expect = 500.0 + (500.0 / 3.0) * 2.0 + (1000.0 / 3.0) * 3.0 + 500.0;
        assert!((h.element(i, i) - expect).abs() < 1e-12);
    }

    #[test]
    fn charge_commutes_exactly() {
        let cfg = SimConfig::default();
        let space = cfg.space().unwrap();
        let h = build_hamiltonian(&space, &cfg);
        let q = charge_operator(&space);
        // [H, Q][i,j] = H[i,j] (Q_j - Q_i); every coupling links equal charges
        let hq = h.matmul(&q);
        let qh = q.matmul(&h);
        let comm = SparseOp::linear_combination(&[(1.0, &hq), (-1.0, &qh)]);
        assert_eq!(comm.nnz(), 0, "[H, Q] must vanish exactly");
    }

    /// Dense textbook evaluation of the generator, used as the reference.
    fn dense_lindblad(cfg: &SimConfig, rho: &Array2<C64>) -> Array2<C64> {
        let space = cfg.space().unwrap();
        let h = build_hamiltonian(&space, cfg).to_dense_complex();
        let a0 = ladder(&space, Mode::Omega0, Ladder::Lower).to_dense_complex();
        let a0d = conj_transpose(&a0);
        let sp = dot_lowering(&space).adjoint().to_dense_complex(); // |e><g|
        let sm = conj_transpose(&sp);
        let minus_i = C64::new(0.0, -1.0);
        let comm = h.dot(rho) - rho.dot(&h);
        let mut out = comm.mapv(|z| minus_i * z);
        let n0 = a0d.dot(&a0);
        out = out
            + (a0.dot(rho).dot(&a0d)).mapv(|z| cfg.kappa_mev * z)
            - (n0.dot(rho) + rho.dot(&n0)).mapv(|z| 0.5 * cfg.kappa_mev * z);
        let gg = sm.dot(&sp); // |g><g|
        out = out
            + (sp.dot(rho).dot(&sm)).mapv(|z| cfg.pump_mev * z)
            - (gg.dot(rho) + rho.dot(&gg)).mapv(|z| 0.5 * cfg.pump_mev * z);
        out
    }

    #[test]
    fn generator_matches_dense_reference() {
        let mut cfg = small_cfg();
        cfg.kappa_mev = 0.3;
        cfg.pump_mev = 0.05;
        let liou = Liouvillian::new(&cfg).unwrap();
        let n = liou.dim();
        assert_eq!(n, 16);
        for seed in [7u64, 8, 9] {
            let rho = random_matrix(n, seed, true);
            let reference = dense_lindblad(&cfg, &rho);
            let mut out = Array2::zeros((n, n));
            let mut scratch = ApplyScratch::new(n);
            liou.apply_hermitian(&rho, &mut out, &mut scratch);
            assert!(max_abs_diff(&out, &reference) < 1e-13, "hermitian path seed {seed}");
            let general = liou.apply(&rho);
            assert!(max_abs_diff(&general, &reference) < 1e-13, "general path seed {seed}");
        }
        // general path also covers non-Hermitian input
        let rho = random_matrix(n, 77, false);
        let reference = dense_lindblad(&cfg, &rho);
        let general = liou.apply(&rho);
        assert!(max_abs_diff(&general, &reference) < 1e-13);
    }

    #[test]
    fn generator_matches_dense_reference_larger_space() {
        let mut cfg = SimConfig::default();
        cfg.trunc = [2, 3, 2];
        cfg.kappa_mev = 0.2;
        cfg.pump_mev = 0.01;
        let liou = Liouvillian::new(&cfg).unwrap();
        let n = liou.dim();
        let rho = random_matrix(n, 21, true);
        let reference = dense_lindblad(&cfg, &rho);
        let mut out = Array2::zeros((n, n));
        let mut scratch = ApplyScratch::new(n);
        liou.apply_hermitian(&rho, &mut out, &mut scratch);
        // couplings up to omega0 = 500 inflate the derivative scale; compare relative
        let scale = reference.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(max_abs_diff(&out, &reference) < 1e-13 * scale.max(1.0));
    }

    #[test]
    fn output_is_bitwise_hermitian_and_traceless() {
        let cfg = SimConfig::default();
        let liou = Liouvillian::new(&cfg).unwrap();
        let n = liou.dim();
        let rho = random_matrix(n, 3, true);
        let mut out = Array2::zeros((n, n));
        let mut scratch = ApplyScratch::new(n);
        liou.apply_hermitian(&rho, &mut out, &mut scratch);
        assert_eq!(hermiticity_deviation(&out), 0.0);
        let trace: C64 = (0..n).map(|i| out[(i, i)]).sum();
        // the generator preserves trace; the derivative scale here is ~1e3
        assert!(trace.norm() < 1e-10);
    }

    #[test]
    fn spectral_bound_matches_measured_value() {
        let cfg = SimConfig::default();
        let liou = Liouvillian::new(&cfg).unwrap();
        let lam = liou.hamiltonian_spectral_bound();
        assert!((lam - 51.68).abs() < 1.0, "got {lam}");
        let small = Liouvillian::new(&small_cfg()).unwrap();
        let lam_small = small.hamiltonian_spectral_bound();
        assert!(lam_small > 5.0 && lam_small < 12.0, "got {lam_small}");
    }
}
