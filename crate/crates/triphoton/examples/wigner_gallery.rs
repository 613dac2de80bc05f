//! Wigner functions of Fock states, rendered as numbers and as terminal art.
//!
//! The Wigner quasiprobability distribution W(x, p) is the phase-space
//! portrait of a single-mode state; negative patches are the signature of
//! nonclassicality. This example computes W for the Fock states |0⟩, |1⟩
//! and |3⟩ from their density matrices, checks the sampled values against
//! the closed Laguerre-polynomial form, prints the center values (vacuum
//! +1/π, one photon −1/π) and the grid integral, and draws a coarse ASCII
//! contour of each state. If `out/three_photon/snapshot_tk0.216.dat` exists
//! (written by the `three_photon_preparation` example), the prepared state
//! is rendered as well — its ring of interference negativity is the
//! three-photon analogue of the |3⟩ portrait.
//!
//! Run with:
//! ```text
//! cargo run --release --example wigner_gallery
//! ```

use std::f64::consts::PI;
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use triphoton::analysis::{fock_state_wigner, wigner, wigner_at, WignerGrid};
use triphoton::output::read_reduced_snapshot;

/// Density matrix of the Fock state |n⟩ in an (n + 1 + pad)-level space.
fn fock_density(n: usize, pad: usize) -> Array2<C64> {
    let d = n + 1 + pad;
    let mut rho = Array2::<C64>::zeros((d, d));
    rho[(n, n)] = C64::new(1.0, 0.0);
    rho
}

/// Coarse ASCII contour: '#' strongly positive, '+' positive, '.' near
/// zero, '-' negative, '=' strongly negative.
fn ascii_contour(grid: &WignerGrid, rows: usize, cols: usize) {
    let n = grid.axis.len();
    let peak = grid
        .values
        .iter()
        .fold(0.0_f64, |m, &v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for r in 0..rows {
        // p decreases downwards so the portrait is oriented like a plot
        let jp = (n - 1) - r * (n - 1) / (rows - 1);
        let mut line = String::new();
        for c in 0..cols {
            let ix = c * (n - 1) / (cols - 1);
            let v = grid.values[(ix, jp)] / peak;
            line.push(match v {
                v if v > 0.5 => '#',
                v if v > 0.05 => '+',
                v if v < -0.5 => '=',
                v if v < -0.05 => '-',
                _ => '.',
            });
        }
        println!("    {line}");
    }
}

fn show(label: &str, rho: &Array2<C64>) -> WignerGrid {
    let grid = wigner(rho, 4.5, 121);
    let w00 = wigner_at(rho, 0.0, 0.0);
    let min = grid.values.iter().cloned().fold(f64::INFINITY, f64::min);
    println!(
        "\n{label}: W(0,0) = {:+.6} ({:+.6} units of 1/pi), min = {:+.6}, integral = {:.6}",
        w00,
        w00 * PI,
        min,
        grid.integral
    );
    ascii_contour(&grid, 17, 41);
    grid
}

fn main() {
    // closed-form cross-check for |3⟩ on a diagonal cut
    let rho3 = fock_density(3, 6);
    let mut worst = 0.0_f64;
    for k in 0..50 {
        let x = -3.0 + 6.0 * (k as f64) / 49.0;
        let p = 0.3 * x;
        worst = worst.max((wigner_at(&rho3, x, p) - fock_state_wigner(3, x, p)).abs());
    }
    println!("|3> sampled vs Laguerre closed form on 50 points: max diff = {worst:.2e}");

    show("vacuum |0>", &fock_density(0, 9));
    show("one photon |1>", &fock_density(1, 8));
    show("three photons |3>", &rho3);

    let snap = Path::new("out/three_photon/snapshot_tk0.216.dat");
    match read_reduced_snapshot(snap) {
        Ok(file) => {
            show("prepared state at t*kappa = 0.216", &file.rho);
        }
        Err(_) => {
            println!(
                "\n(no {} yet — run the three_photon_preparation example \
                 first to add the prepared state to the gallery)",
                snap.display()
            );
        }
    }
}
