//! Element-wise reference implementation of the master equation.
//!
//! The generator here is written out coefficient by coefficient against
//! explicit basis-state quantum numbers, with no operator products at all —
//! an independent cross-check for the operator-built generator in
//! [`crate::dynamics`]. Each contribution is tagged with the physical term
//! it belongs to, so a mismatch can be localized to a single coupling.
//!
//! The equations are valid in the lab frame only (the oscillating phases
//! are written explicitly); requests in any other frame are rejected.
//!
//! One coefficient exists in two published forms: the ket-side
//! down-conversion term that raises the omega_0 occupation is
//! `sqrt((l+1) m n)` by the standard ladder algebra, but it also circulates
//! as `sqrt((l-1) m n)`. Both variants are implemented —
//! [`ZetaRaising::Conventional`] and [`ZetaRaising::Literal`] — and the test
//! suite pins the conventional one to the operator-built generator. The
//! literal variant clamps the negative radicand at `l = 0` to zero.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::config::{Frame, SimConfig};
use crate::fock::{BasisState, DotLevel, FockSpace};
use crate::{Error, Result};

/// Which coefficient to use for the ket-side down-conversion term that
/// raises the omega_0 occupation (see the module docs).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZetaRaising {
    /// `sqrt((l+1) m n)`: standard ladder algebra, matches the operator form.
    Conventional,
    /// `sqrt((l-1) m n)` with negative radicands clamped to zero.
    Literal,
}

/// The physical origin of one contribution to the derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Term {
    /// Free-evolution phase `i omega_0 (l - i + (m - j)/3 + 2(n - k)/3)`
    /// plus `i omega_qd` on ground-excited coherences.
    Phase,
    /// Anticommutator diagonal: `-kappa (l + i)/2` and the pump's
    /// `-P`, `-P/2` on the ground-ground block and the coherences.
    Damping,
    /// Pump sandwich `+P rho_gg` feeding the excited-excited block.
    PumpFeed,
    /// Dot-cavity exchange, strength `g`.
    Exchange,
    /// Cavity-loss sandwich `kappa sqrt((i+1)(l+1)) rho_{i+1, l+1}`.
    LossFeed,
    /// Down-conversion acting on the ket index, strength `zeta`.
    ZetaKet,
    /// Down-conversion acting on the bra index, strength `zeta`.
    ZetaBra,
    /// Mode-2 splitting acting on the ket index, strength `xi`.
    XiKet,
    /// Mode-2 splitting acting on the bra index, strength `xi`.
    XiBra,
}

/// All terms, in a fixed reporting order.
pub const TERMS: [Term; 9] = [
    Term::Phase,
    Term::Damping,
    Term::PumpFeed,
    Term::Exchange,
    Term::LossFeed,
    Term::ZetaKet,
    Term::ZetaBra,
    Term::XiKet,
    Term::XiBra,
];

/// `sqrt` over a possibly negative integer product, clamped at zero (used
/// by the literal coefficient variant).
fn root(x: i64) -> f64 {
    if x <= 0 {
        0.0
    } else {
        (x as f64).sqrt()
    }
}

/// Matrix element lookup with out-of-range indices reading as zero.
#[allow(clippy::too_many_arguments)]
fn ent(
    rho: &Array2<C64>,
    space: &FockSpace,
    a: DotLevel,
    i: i64,
    j: i64,
    k: i64,
    b: DotLevel,
    l: i64,
    m: i64,
    n: i64,
) -> C64 {
    let zero = C64::new(0.0, 0.0);
    if i < 0 || j < 0 || k < 0 || l < 0 || m < 0 || n < 0 {
        return zero;
    }
    let row = space.flatten_opt(&BasisState::new(a, i as u32, j as u32, k as u32));
    let col = space.flatten_opt(&BasisState::new(b, l as u32, m as u32, n as u32));
    match (row, col) {
        (Some(r), Some(c)) => rho[(r, c)],
        _ => zero,
    }
}

/// One (bra, ket) pair of quantum numbers and everything needed to evaluate
/// its derivative.
struct Ctx<'a> {
    rho: &'a Array2<C64>,
    space: &'a FockSpace,
    cfg: &'a SimConfig,
    variant: ZetaRaising,
    i: i64,
    j: i64,
    k: i64,
    l: i64,
    m: i64,
    n: i64,
}

impl Ctx<'_> {
    fn at(&self, a: DotLevel, di: [i64; 3], b: DotLevel, dk: [i64; 3]) -> C64 {
        ent(
            self.rho,
            self.space,
            a,
            self.i + di[0],
            self.j + di[1],
            self.k + di[2],
            b,
            self.l + dk[0],
            self.m + dk[1],
            self.n + dk[2],
        )
    }

    /// Free-evolution phase common to every block.
    fn mode_phase(&self) -> f64 {
        self.cfg.omega0_mev
            * ((self.l - self.i) as f64
                + (self.m - self.j) as f64 / 3.0
                + 2.0 * (self.n - self.k) as f64 / 3.0)
    }

    /// Shared sum of the zeta and xi couplings for dot levels `(a, b)`.
    fn conversion(&self, term: Term, a: DotLevel, b: DotLevel) -> C64 {
        let (i, j, k, l, m, n) = (self.i, self.j, self.k, self.l, self.m, self.n);
        let iu = C64::new(0.0, 1.0);
        let zeta = self.cfg.zeta_mev;
        let xi = self.cfg.xi_mev;
        match term {
            Term::ZetaKet => {
                let lm1 = match self.variant {
                    ZetaRaising::Conventional => l + 1,
                    ZetaRaising::Literal => l - 1,
                };
                iu * zeta
                    * (root(l * (m + 1) * (n + 1)) * self.at(a, [0; 3], b, [-1, 1, 1])
                        + root(lm1 * m * n) * self.at(a, [0; 3], b, [1, -1, -1]))
            }
            Term::ZetaBra => {
                -iu * zeta
                    * (root((i + 1) * j * k) * self.at(a, [1, -1, -1], b, [0; 3])
                        + root(i * (j + 1) * (k + 1)) * self.at(a, [-1, 1, 1], b, [0; 3]))
            }
            Term::XiKet => {
                iu * xi
                    * (root(m * (m - 1) * (n + 1)) * self.at(a, [0; 3], b, [0, -2, 1])
                        + root((m + 1) * (m + 2) * n) * self.at(a, [0; 3], b, [0, 2, -1]))
            }
            Term::XiBra => {
                -iu * xi
                    * (root((j + 1) * (j + 2) * k) * self.at(a, [0, 2, -1], b, [0; 3])
                        + root(j * (j - 1) * (k + 1)) * self.at(a, [0, -2, 1], b, [0; 3]))
            }
            _ => unreachable!("conversion: not a conversion term"),
        }
    }

    /// One tagged contribution to `d rho / dt` at (bra `(ga, i j k)`,
    /// ket `(gb, l m n)`), for the three directly printed blocks
    /// (ground-ground, excited-excited, ground-excited).
    fn contribution(&self, term: Term, a: DotLevel, b: DotLevel) -> C64 {
        use DotLevel::{Excited, Ground};
        let (i, l) = (self.i, self.l);
        let cfg = self.cfg;
        let iu = C64::new(0.0, 1.0);
        let here = self.at(a, [0; 3], b, [0; 3]);
        match term {
            Term::Phase => {
                let qd = if (a, b) == (Ground, Excited) { cfg.omega_qd_mev } else { 0.0 };
                iu * (self.mode_phase() + qd) * here
            }
            Term::Damping => {
                let pump = match (a, b) {
                    (Ground, Ground) => cfg.pump_mev,
                    (Ground, Excited) => 0.5 * cfg.pump_mev,
                    (Excited, Excited) => 0.0,
                    _ => unreachable!(),
                };
                C64::new(-0.5 * cfg.kappa_mev * (l + i) as f64 - pump, 0.0) * here
            }
            Term::PumpFeed => {
                if (a, b) == (Excited, Excited) {
                    cfg.pump_mev * self.at(Ground, [0; 3], Ground, [0; 3])
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            Term::Exchange => {
                let g = cfg.g_mev;
                match (a, b) {
                    (Ground, Ground) => {
                        iu * g
                            * (root(l) * self.at(Ground, [0; 3], Excited, [-1, 0, 0])
                                - root(i) * self.at(Excited, [-1, 0, 0], Ground, [0; 3]))
                    }
                    (Excited, Excited) => {
                        iu * g
                            * (root(l + 1) * self.at(Excited, [0; 3], Ground, [1, 0, 0])
                                - root(i + 1) * self.at(Ground, [1, 0, 0], Excited, [0; 3]))
                    }
                    (Ground, Excited) => {
                        iu * g
                            * (root(l + 1) * self.at(Ground, [0; 3], Ground, [1, 0, 0])
                                - root(i) * self.at(Excited, [-1, 0, 0], Excited, [0; 3]))
                    }
                    _ => unreachable!(),
                }
            }
            Term::LossFeed => {
                cfg.kappa_mev
                    * root((i + 1) * (l + 1))
                    * self.at(a, [1, 0, 0], b, [1, 0, 0])
            }
            Term::ZetaKet | Term::ZetaBra | Term::XiKet | Term::XiBra => {
                self.conversion(term, a, b)
            }
        }
    }
}

/// Evaluate one tagged term of the element-wise derivative over the whole
/// matrix. The three printed blocks are evaluated directly; the
/// excited-ground block is completed by conjugate symmetry of the generator,
/// `L(rho)[e.., g..] = conj(L(rho^dag)[g.., e..])`, which reduces to the
/// usual "plus the Hermitian conjugate" for Hermitian input.
fn term_matrix(
    space: &FockSpace,
    cfg: &SimConfig,
    rho: &Array2<C64>,
    rho_dag: &Array2<C64>,
    variant: ZetaRaising,
    term: Term,
) -> Array2<C64> {
    use DotLevel::{Excited, Ground};
    let dim = space.dim();
    let mut out = Array2::zeros((dim, dim));
    for (r, bra) in space.states().enumerate() {
        for (c, ket) in space.states().enumerate() {
            let val = match (bra.dot, ket.dot) {
                (Excited, Ground) => {
                    // swap roles: bra quantum numbers come from the ket and
                    // vice versa, evaluated on the adjoint input
                    let ctx = Ctx {
                        rho: rho_dag,
                        space,
                        cfg,
                        variant,
                        i: ket.n0 as i64,
                        j: ket.n1 as i64,
                        k: ket.n2 as i64,
                        l: bra.n0 as i64,
                        m: bra.n1 as i64,
                        n: bra.n2 as i64,
                    };
                    ctx.contribution(term, Ground, Excited).conj()
                }
                (a, b) => {
                    let ctx = Ctx {
                        rho,
                        space,
                        cfg,
                        variant,
                        i: bra.n0 as i64,
                        j: bra.n1 as i64,
                        k: bra.n2 as i64,
                        l: ket.n0 as i64,
                        m: ket.n1 as i64,
                        n: ket.n2 as i64,
                    };
                    ctx.contribution(term, a, b)
                }
            };
            out[(r, c)] = val;
        }
    }
    out
}

fn check_frame(cfg: &SimConfig) -> Result<()> {
    if cfg.frame != Frame::Lab {
        return Err(Error::Config(format!(
            "elementwise_derivative: the element-wise equations carry explicit \
             oscillating phases and are valid in the lab frame only; got frame = {:?}",
            cfg.frame
        )));
    }
    Ok(())
}

/// Element-wise time derivative of `rho` under the full master equation,
/// split per tagged term (lab frame only). The sum of the returned matrices
/// equals [`elementwise_derivative`].
pub fn elementwise_terms(
    space: &FockSpace,
    cfg: &SimConfig,
    rho: &Array2<C64>,
    variant: ZetaRaising,
) -> Result<Vec<(Term, Array2<C64>)>> {
    check_frame(cfg)?;
    let dim = space.dim();
    assert_eq!(rho.dim(), (dim, dim), "elementwise_terms: matrix does not match the space");
    let rho_dag = crate::linalg::conj_transpose(rho);
    Ok(TERMS
        .iter()
        .map(|&t| (t, term_matrix(space, cfg, rho, &rho_dag, variant, t)))
        .collect())
}

/// Element-wise time derivative of `rho` under the full master equation
/// (lab frame only), with the conventional ladder coefficients.
pub fn elementwise_derivative(
    space: &FockSpace,
    cfg: &SimConfig,
    rho: &Array2<C64>,
) -> Result<Array2<C64>> {
    elementwise_derivative_with(space, cfg, rho, ZetaRaising::Conventional)
}

/// Same as [`elementwise_derivative`] with an explicit coefficient variant.
pub fn elementwise_derivative_with(
    space: &FockSpace,
    cfg: &SimConfig,
    rho: &Array2<C64>,
    variant: ZetaRaising,
) -> Result<Array2<C64>> {
    let terms = elementwise_terms(space, cfg, rho, variant)?;
    let dim = space.dim();
    let mut out = Array2::zeros((dim, dim));
    for (_, m) in terms {
        out += &m;
    }
    Ok(out)
}
