//! Reduction of the joint state to one field mode, photon statistics, and
//! Wigner quasiprobability functions.
//!
//! The Wigner function is evaluated in displaced-parity form,
//!
//! ```text
//! W(x, p) = (1/pi) sum_n (-1)^n <n| D(-alpha) rho D(alpha) |n>,
//! alpha = (x + i p) / sqrt(2),
//! ```
//!
//! normalized so the phase-space integral of `W dx dp` is 1. Displacements
//! act on a padded Fock space large enough that the truncation error at the
//! grid edge is far below 1e-10; the pad grows with the grid radius. Rather
//! than exponentiating a generator per grid point, each constant-p row is
//! swept by composing small real displacement steps, which is exact up to
//! phases that cancel in the parity quadratic form.

use crate::fock::{FockSpace, Mode};
use ndarray::Array2;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Partial trace of the joint density matrix down to one field mode.
pub fn reduce_to_mode(space: &FockSpace, rho: &Array2<C64>, mode: Mode) -> Array2<C64> {
    let dim = space.dim();
    assert_eq!(rho.dim(), (dim, dim), "reduce_to_mode: state has wrong dimension");
    let levels = space.levels(mode);
    let states: Vec<_> = space.states().collect();
    let occ = |s: &crate::fock::BasisState| -> usize {
        match mode {
            Mode::Omega0 => s.n0 as usize,
            Mode::Omega1 => s.n1 as usize,
            Mode::Omega2 => s.n2 as usize,
        }
    };
    // environment key: everything except the kept mode's occupation
    let env = |s: &crate::fock::BasisState| -> (u32, u32, u32) {
        match mode {
            Mode::Omega0 => (s.dot.index() as u32, s.n1, s.n2),
            Mode::Omega1 => (s.dot.index() as u32, s.n0, s.n2),
            Mode::Omega2 => (s.dot.index() as u32, s.n0, s.n1),
        }
    };
    let mut out = Array2::zeros((levels, levels));
    for (i, si) in states.iter().enumerate() {
        for (k, sk) in states.iter().enumerate() {
            if env(si) == env(sk) {
                out[(occ(si), occ(sk))] += rho[(i, k)];
            }
        }
    }
    out
}

/// Partial trace down to the omega_1 mode (the three-photon mode).
pub fn reduce_to_mode1(space: &FockSpace, rho: &Array2<C64>) -> Array2<C64> {
    reduce_to_mode(space, rho, Mode::Omega1)
}

/// Diagonal of a reduced density matrix as a real photon-number distribution.
pub fn photon_distribution(reduced: &Array2<C64>) -> Vec<f64> {
    (0..reduced.nrows()).map(|n| reduced[(n, n)].re).collect()
}

/// Scalar observables of the joint state.
#[derive(Debug, Clone, Copy)]
pub struct ModeObservables {
    pub mean_n0: f64,
    pub mean_n1: f64,
    pub mean_n2: f64,
    pub excited_pop: f64,
    /// `Tr rho^2`.
    pub purity: f64,
}

/// Mode occupations, dot population, and purity of the joint state.
pub fn mode_observables(space: &FockSpace, rho: &Array2<C64>) -> ModeObservables {
    let dim = space.dim();
    assert_eq!(rho.dim(), (dim, dim), "mode_observables: state has wrong dimension");
    let mut obs = ModeObservables {
        mean_n0: 0.0,
        mean_n1: 0.0,
        mean_n2: 0.0,
        excited_pop: 0.0,
        purity: 0.0,
    };
    for (i, s) in space.states().enumerate() {
        let pop = rho[(i, i)].re;
        obs.mean_n0 += s.n0 as f64 * pop;
        obs.mean_n1 += s.n1 as f64 * pop;
        obs.mean_n2 += s.n2 as f64 * pop;
        if s.dot == crate::fock::DotLevel::Excited {
            obs.excited_pop += pop;
        }
    }
    // Tr rho^2 = sum |rho_ij|^2 for Hermitian rho
    obs.purity = rho.iter().map(|z| z.norm_sqr()).sum();
    obs
}

/// Wigner function sampled on a square grid.
#[derive(Debug, Clone)]
pub struct WignerGrid {
    /// Sample positions, shared by the x and p axes.
    pub axis: Vec<f64>,
    /// `values[(ix, jp)] = W(axis[ix], axis[jp])`.
    pub values: Array2<f64>,
    /// Fock levels used for the padded displacement arithmetic.
    pub pad_levels: usize,
    /// Riemann sum `sum W * h^2`; 1 within 5e-3 when the grid covers the state.
    pub integral: f64,
    /// Largest imaginary residue encountered before taking real parts.
    pub max_imag: f64,
    /// Set when the state has non-negligible weight beyond the grid's
    /// energy reach, which degrades the integral.
    pub coverage_warning: Option<String>,
}

/// Fock levels needed so displaced states up to radius `amax` stay inside
/// the padded space to better than 1e-12.
fn pad_levels(ns: usize, amax: f64) -> usize {
    ns + (amax * amax + 7.5 * amax).ceil() as usize + 10
}

/// Workspace for displacement arithmetic on a padded Fock space: `ncols`
/// state columns of length `npad`, stored column-major.
struct Displacer {
    npad: usize,
    ncols: usize,
    /// `sq[i] = sqrt(i + 1)`.
    sq: Vec<f64>,
    term: Vec<C64>,
    next: Vec<C64>,
}

impl Displacer {
    fn new(npad: usize, ncols: usize) -> Self {
        Displacer {
            npad,
            ncols,
            sq: (0..npad).map(|i| ((i + 1) as f64).sqrt()).collect(),
            term: vec![C64::new(0.0, 0.0); npad * ncols],
            next: vec![C64::new(0.0, 0.0); npad * ncols],
        }
    }

    /// Identity embedding: column `b` is the Fock state `|b>`.
    fn basis_columns(&self) -> Vec<C64> {
        let mut u = vec![C64::new(0.0, 0.0); self.npad * self.ncols];
        for b in 0..self.ncols {
            u[b * self.npad + b] = C64::new(1.0, 0.0);
        }
        u
    }

    /// `u <- exp(beta a^dag - conj(beta) a) u` by a Taylor series; accurate
    /// for `|beta| sqrt(npad)` up to order one, which callers guarantee by
    /// substepping.
    fn exp_apply(&mut self, beta: C64, u: &mut [C64]) {
        self.term.copy_from_slice(u);
        for k in 1..=80 {
            k_apply(&self.sq, self.npad, self.ncols, beta, &self.term, &mut self.next);
            let inv = 1.0 / k as f64;
            let mut term_max: f64 = 0.0;
            let mut u_max: f64 = 0.0;
            for i in 0..u.len() {
                self.term[i] = self.next[i] * inv;
                u[i] += self.term[i];
                term_max = term_max.max(self.term[i].norm_sqr());
                u_max = u_max.max(u[i].norm_sqr());
            }
            if term_max.sqrt() < 1e-16 * u_max.sqrt().max(1.0) {
                break;
            }
        }
    }

    /// Like `exp_apply`, split into substeps so the Taylor series always
    /// converges fast regardless of `|beta|`.
    fn exp_apply_substepped(&mut self, beta: C64, u: &mut [C64]) {
        let norm = 2.0 * beta.norm() * (self.npad as f64).sqrt();
        let m = (norm / 0.5).ceil().max(1.0) as usize;
        let step = beta / m as f64;
        for _ in 0..m {
            self.exp_apply(step, u);
        }
    }
}

/// `dst = (beta a^dag - conj(beta) a) src`, column by column over
/// column-major state buffers.
fn k_apply(sq: &[f64], npad: usize, ncols: usize, beta: C64, src: &[C64], dst: &mut [C64]) {
    let bc = beta.conj();
    for col in 0..ncols {
        let s = &src[col * npad..(col + 1) * npad];
        let d = &mut dst[col * npad..(col + 1) * npad];
        d[0] = -bc * (sq[0] * s[1]);
        for k in 1..npad - 1 {
            d[k] = beta * (sq[k - 1] * s[k - 1]) - bc * (sq[k] * s[k + 1]);
        }
        d[npad - 1] = beta * (sq[npad - 2] * s[npad - 2]);
    }
}

/// Parity-weighted quadratic form: `sum_ab rho_ab g_ab` with
/// `g_ab = sum_n (-1)^n u_a[n] conj(u_b[n])`; the real part is `pi * W`.
fn parity_form(rho: &Array2<C64>, u: &[C64], npad: usize) -> C64 {
    let ns = rho.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for a in 0..ns {
        let ua = &u[a * npad..(a + 1) * npad];
        for b in 0..ns {
            let r = rho[(a, b)];
            if r == C64::new(0.0, 0.0) {
                continue;
            }
            let ub = &u[b * npad..(b + 1) * npad];
            let mut g = C64::new(0.0, 0.0);
            let mut sign = 1.0;
            for n in 0..npad {
                g += sign * (ua[n] * ub[n].conj());
                sign = -sign;
            }
            acc += r * g;
        }
    }
    acc
}

/// Wigner function of a reduced state at a single phase-space point.
pub fn wigner_at(rho: &Array2<C64>, x: f64, p: f64) -> f64 {
    let ns = rho.nrows();
    assert_eq!(ns, rho.ncols(), "wigner_at: state not square");
    let amax = (x * x + p * p).sqrt() / 2f64.sqrt();
    let npad = pad_levels(ns, amax);
    let mut disp = Displacer::new(npad, ns);
    let mut u = disp.basis_columns();
    // beta = -alpha displaces the basis columns by D(-alpha)
    let beta = C64::new(-x, -p) / 2f64.sqrt();
    disp.exp_apply_substepped(beta, &mut u);
    parity_form(rho, &u, npad).re / PI
}

/// Wigner function of a reduced state on a square `(x, p)` grid with
/// `grid_n` points per axis spanning `[-grid_max, grid_max]`.
pub fn wigner(rho: &Array2<C64>, grid_max: f64, grid_n: u32) -> WignerGrid {
    let ns = rho.nrows();
    assert_eq!(ns, rho.ncols(), "wigner: state not square");
    assert!(grid_n >= 2, "wigner: need at least two grid points per axis");
    assert!(grid_max > 0.0, "wigner: grid_max must be positive");
    let n = grid_n as usize;
    let h = 2.0 * grid_max / (n - 1) as f64;
    let axis: Vec<f64> = (0..n).map(|i| -grid_max + h * i as f64).collect();
    // the largest displacement on the grid sits at a corner
    let amax = (2.0 * grid_max * grid_max).sqrt() / 2f64.sqrt();
    let npad = pad_levels(ns, amax);
    let mut disp = Displacer::new(npad, ns);

    // index of the axis point closest to the origin: cold-start column
    let ic = axis
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.abs().partial_cmp(&b.abs()).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let dstep = h / 2f64.sqrt();

    let mut values = Array2::<f64>::zeros((n, n));
    let mut max_imag: f64 = 0.0;
    for jp in 0..n {
        let p = axis[jp];
        let mut u0 = disp.basis_columns();
        let beta0 = C64::new(-axis[ic], -p) / 2f64.sqrt();
        disp.exp_apply_substepped(beta0, &mut u0);
        // sweep right from the cold-start column (evaluating it as-is),
        // then left from one step beyond it
        for direction in [1i64, -1] {
            let mut u = u0.clone();
            let step_beta = C64::new(-(direction as f64) * dstep, 0.0);
            let mut ix = if direction == 1 { ic as i64 } else { ic as i64 - 1 };
            let mut first = true;
            while ix >= 0 && ix < n as i64 {
                if !(first && direction == 1) {
                    disp.exp_apply(step_beta, &mut u);
                }
                first = false;
                let w = parity_form(rho, &u, npad) / PI;
                values[(ix as usize, jp)] = w.re;
                max_imag = max_imag.max(w.im.abs());
                ix += direction;
            }
        }
    }
    let integral = values.sum() * h * h;

    // does the grid's energy reach cover the state?
    let reach = (grid_max * grid_max - 1.0) / 2.0;
    let tail: f64 = (0..ns)
        .filter(|&nn| nn as f64 > reach)
        .map(|nn| rho[(nn, nn)].re.abs())
        .sum();
    let coverage_warning = if tail > 1e-6 {
        Some(format!(
            "state weight {tail:.2e} lies beyond the grid's energy reach (n > {reach:.1}); \
             the integral check is unreliable"
        ))
    } else {
        None
    };

    WignerGrid { axis, values, pad_levels: npad, integral, max_imag, coverage_warning }
}

/// Closed-form Wigner function of the Fock state `|n>`:
/// `W_n(x, p) = ((-1)^n / pi) e^{-r^2} L_n(2 r^2)` with `r^2 = x^2 + p^2`.
pub fn fock_state_wigner(n: u32, x: f64, p: f64) -> f64 {
    let r2 = x * x + p * p;
    let u = 2.0 * r2;
    // Laguerre L_n(u) by the three-term recurrence
    let mut l0 = 1.0;
    let mut l1 = 1.0 - u;
    let l = match n {
        0 => l0,
        1 => l1,
        _ => {
            for k in 1..n {
                let kf = k as f64;
                let next = ((2.0 * kf + 1.0 - u) * l1 - kf * l0) / (kf + 1.0);
                l0 = l1;
                l1 = next;
            }
            l1
        }
    };
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    sign / PI * (-r2).exp() * l
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{BasisState, DotLevel};
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ket_density(space: &FockSpace, amps: &[(C64, BasisState)]) -> Array2<C64> {
        let dim = space.dim();
        let mut psi = vec![C64::new(0.0, 0.0); dim];
        for (a, s) in amps {
            psi[space.flatten(s).unwrap()] += a;
        }
        let mut rho = Array2::zeros((dim, dim));
        for i in 0..dim {
            for j in 0..dim {
                rho[(i, j)] = psi[i] * psi[j].conj();
            }
        }
        rho
    }

    #[test]
    fn reduction_of_product_state() {
        let space = FockSpace::new(1, 3, 1).unwrap();
        let rho = ket_density(
            &space,
            &[(C64::new(1.0, 0.0), BasisState::new(DotLevel::Ground, 0, 2, 0))],
        );
        let red = reduce_to_mode1(&space, &rho);
        assert_eq!(red.nrows(), 4);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == 2 && j == 2 { 1.0 } else { 0.0 };
                assert!((red[(i, j)] - C64::new(expect, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn entangled_environment_kills_coherence() {
        let space = FockSpace::new(1, 3, 1).unwrap();
        let a = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let rho = ket_density(
            &space,
            &[
                (a, BasisState::new(DotLevel::Ground, 0, 0, 0)),
                (a, BasisState::new(DotLevel::Ground, 0, 3, 1)),
            ],
        );
        let red = reduce_to_mode1(&space, &rho);
        assert!((red[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((red[(3, 3)].re - 0.5).abs() < 1e-15);
        assert!(red[(0, 3)].norm() < 1e-15, "omega_2 distinguishes the branches");
        assert!(red[(3, 0)].norm() < 1e-15);
    }

    #[test]
    fn reduction_preserves_trace_and_is_linear() {
        let space = FockSpace::new(1, 2, 1).unwrap();
        let dim = space.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut rand_m = || {
            Array2::from_shape_fn((dim, dim), |_| {
                C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            })
        };
        let m1 = rand_m();
        let m2 = rand_m();
        let r1 = reduce_to_mode1(&space, &m1);
        let tr_in: C64 = (0..dim).map(|i| m1[(i, i)]).sum();
        let tr_out: C64 = (0..r1.nrows()).map(|i| r1[(i, i)]).sum();
        assert!((tr_in - tr_out).norm() < 1e-12);
        let combo = m1.mapv(|z| 0.3 * z) + m2.mapv(|z| -1.7 * z);
        let r_combo = reduce_to_mode1(&space, &combo);
        let expect = r1.mapv(|z| 0.3 * z) + reduce_to_mode1(&space, &m2).mapv(|z| -1.7 * z);
        assert!(crate::linalg::max_abs_diff(&r_combo, &expect) < 1e-13);
    }

    #[test]
    fn reduction_to_other_modes() {
        let space = FockSpace::new(2, 1, 2).unwrap();
        let rho = ket_density(
            &space,
            &[(C64::new(1.0, 0.0), BasisState::new(DotLevel::Excited, 2, 0, 1))],
        );
        let r0 = reduce_to_mode(&space, &rho, Mode::Omega0);
        assert!((r0[(2, 2)].re - 1.0).abs() < 1e-15);
        let r2 = reduce_to_mode(&space, &rho, Mode::Omega2);
        assert!((r2[(1, 1)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn distribution_and_observables() {
        let space = FockSpace::new(3, 9, 4).unwrap();
        let rho = ket_density(
            &space,
            &[(C64::new(1.0, 0.0), BasisState::new(DotLevel::Ground, 1, 2, 3))],
        );
        let obs = mode_observables(&space, &rho);
        assert_eq!(
            (obs.mean_n0, obs.mean_n1, obs.mean_n2, obs.excited_pop),
            (1.0, 2.0, 3.0, 0.0)
        );
        assert!((obs.purity - 1.0).abs() < 1e-12);
        let red = reduce_to_mode1(&space, &rho);
        let p = photon_distribution(&red);
        assert_eq!(p.len(), 10);
        assert_eq!(p[2], 1.0);
        assert_eq!(p.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn maximally_mixed_purity() {
        let space = FockSpace::new(1, 1, 1).unwrap();
        let dim = space.dim();
        let rho = Array2::from_diag_elem(dim, C64::new(1.0 / dim as f64, 0.0));
        let obs = mode_observables(&space, &rho);
        assert!((obs.purity - 1.0 / dim as f64).abs() < 1e-14);
    }

    fn fock_density(levels: usize, n: usize) -> Array2<C64> {
        let mut rho = Array2::zeros((levels, levels));
        rho[(n, n)] = C64::new(1.0, 0.0);
        rho
    }

    #[test]
    fn wigner_point_values_for_fock_states() {
        let vac = fock_density(4, 0);
        assert!((wigner_at(&vac, 0.0, 0.0) - 1.0 / PI).abs() < 1e-10);
        let one = fock_density(4, 1);
        assert!((wigner_at(&one, 0.0, 0.0) + 1.0 / PI).abs() < 1e-10);
        let three = fock_density(5, 3);
        assert!((wigner_at(&three, 0.0, 0.0) + 1.0 / PI).abs() < 1e-10);
    }

    #[test]
    fn wigner_matches_closed_form_at_scattered_points() {
        let three = fock_density(6, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..25 {
            let x = 8.0 * (rng.random::<f64>() - 0.5);
            let p = 8.0 * (rng.random::<f64>() - 0.5);
            let w = wigner_at(&three, x, p);
            let reference = fock_state_wigner(3, x, p);
            assert!(
                (w - reference).abs() < 1e-10,
                "mismatch at ({x:.3}, {p:.3}): {w} vs {reference}"
            );
        }
    }

    #[test]
    fn wigner_grid_vacuum() {
        let vac = fock_density(3, 0);
        let grid = wigner(&vac, 5.0, 41);
        assert!((grid.integral - 1.0).abs() < 5e-3, "integral {}", grid.integral);
        assert!(grid.max_imag < 1e-12);
        assert!(grid.coverage_warning.is_none());
        // peak at the origin with value 1/pi
        let ic = 20;
        assert_eq!(grid.axis[ic], 0.0);
        assert!((grid.values[(ic, ic)] - 1.0 / PI).abs() < 1e-10);
        // Gaussian: decays monotonically along the axis
        assert!(grid.values[(ic + 5, ic)] < grid.values[(ic, ic)]);
        // bounded by 1/pi
        let max = grid.values.iter().cloned().fold(f64::MIN, f64::max);
        assert!(max <= 1.0 / PI + 1e-9);
    }

    #[test]
    fn wigner_grid_matches_closed_form_everywhere() {
        let three = fock_density(6, 3);
        let grid = wigner(&three, 6.0, 31);
        let mut max_err: f64 = 0.0;
        for (ix, &x) in grid.axis.iter().enumerate() {
            for (jp, &p) in grid.axis.iter().enumerate() {
                let reference = fock_state_wigner(3, x, p);
                max_err = max_err.max((grid.values[(ix, jp)] - reference).abs());
            }
        }
        assert!(max_err < 1e-10, "max grid error {max_err}");
        assert!((grid.integral - 1.0).abs() < 5e-3);
    }

    #[test]
    fn wigner_rotationally_covariant_for_fock_diagonal_states() {
        let mut rho = Array2::zeros((5, 5));
        rho[(0, 0)] = C64::new(0.3, 0.0);
        rho[(1, 1)] = C64::new(0.5, 0.0);
        rho[(3, 3)] = C64::new(0.2, 0.0);
        let r = 2.0_f64;
        let w0 = wigner_at(&rho, r, 0.0);
        for k in 1..8 {
            let th = k as f64 * PI / 4.5;
            let w = wigner_at(&rho, r * th.cos(), r * th.sin());
            assert!((w - w0).abs() < 1e-8, "angle {th}: {w} vs {w0}");
        }
    }

    #[test]
    fn wigner_warns_when_grid_cannot_hold_the_state() {
        let three = fock_density(5, 3);
        let grid = wigner(&three, 2.0, 21);
        assert!(grid.coverage_warning.is_some());
    }

    #[test]
    fn closed_form_normalization() {
        // Riemann integral of the closed form itself, as a sanity anchor
        let n = 161;
        let gmax = 7.0;
        let h = 2.0 * gmax / (n - 1) as f64;
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = -gmax + h * i as f64;
                let p = -gmax + h * j as f64;
                sum += fock_state_wigner(4, x, p);
            }
        }
        assert!((sum * h * h - 1.0).abs() < 1e-6);
    }
}
