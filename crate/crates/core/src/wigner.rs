//! Discrete Wigner/Weyl transform kernels shared by states, effects and the
//! Gaussian extension.
//!
//! The lag variable is sampled at `y = k·dx/2`, so the wavefunction is
//! needed on the half-integer grid. It is obtained by band-limited (FFT
//! zero-padding) interpolation to `2n` points; the Nyquist coefficient is
//! kept whole on the negative-frequency side so that the interpolant of a
//! real-valued Nyquist mode stays consistent with the momentum grid, which
//! also starts at `−πħ/dx`.
//!
//! Each row is a length-`n` DFT over lags `|k| ≤ n/2` (the two end lags
//! share one bin at half weight). Restricting the lag window to half the box
//! keeps `Σ_j W_a W_b dp` an exact Parseval sum, so overlaps with
//! box-filling eigenstates do not pick up edge-to-edge aliasing. States
//! narrower than half the box are unaffected by the window.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::grid::GridSpec;

/// Band-limited interpolation of `psi` onto the grid with spacing `dx/2`;
/// even indices reproduce the input samples.
pub(crate) fn interpolate_half(psi: &[Complex64]) -> Vec<Complex64> {
    let n = psi.len();
    let mut planner = FftPlanner::new();
    let mut spec = psi.to_vec();
    planner.plan_fft_forward(n).process(&mut spec);

    let h = n / 2;
    let mut padded = vec![Complex64::new(0.0, 0.0); 2 * n];
    padded[..h].copy_from_slice(&spec[..h]);
    padded[2 * n - h + 1..].copy_from_slice(&spec[h + 1..]);
    padded[2 * n - h] = spec[h];

    planner.plan_fft_inverse(2 * n).process(&mut padded);
    let scale = 1.0 / n as f64;
    padded.iter_mut().for_each(|v| *v *= scale);
    padded
}

struct RowKernel {
    n: usize,
    ifft: Arc<dyn Fft<f64>>,
    prefactor: f64,
}

impl RowKernel {
    fn new(grid: &GridSpec) -> Self {
        let n = grid.n_x;
        Self {
            n,
            ifft: FftPlanner::new().plan_fft_inverse(n),
            prefactor: grid.dx() / (2.0 * PI * grid.hbar),
        }
    }

    /// Row `i` of `(1/πħ)∫ e^{2ipy/ħ} a*(x+y) b(x−y) dy` given half-grid
    /// interpolants `ga`, `gb`.
    fn row(
        &self,
        i: usize,
        ga: &[Complex64],
        gb: &[Complex64],
        buf: &mut [Complex64],
        scratch: &mut [Complex64],
        out: &mut [Complex64],
    ) {
        let n = self.n;
        let h = n as isize / 2;
        let len = 2 * n as isize;
        let centre = 2 * i as isize;
        buf.fill(Complex64::new(0.0, 0.0));
        for k in -h..=h {
            let a = centre + k;
            let b = centre - k;
            if a < 0 || a >= len || b < 0 || b >= len {
                continue;
            }
            let mut v = ga[a as usize].conj() * gb[b as usize];
            if k.abs() == h {
                v *= 0.5;
            }
            buf[k.rem_euclid(n as isize) as usize] += v;
        }
        self.ifft.process_with_scratch(buf, scratch);
        let hu = n / 2;
        for (j, o) in out.iter_mut().enumerate() {
            *o = buf[(j + hu) % n] * self.prefactor;
        }
    }
}

/// Complex phase-space field of the operator `|b⟩⟨a|`.
pub(crate) fn cross_field(grid: &GridSpec, a: &[Complex64], b: &[Complex64]) -> Array2<Complex64> {
    let ga = interpolate_half(a);
    let gb = if std::ptr::eq(a, b) {
        ga.clone()
    } else {
        interpolate_half(b)
    };
    let kernel = RowKernel::new(grid);
    let n = grid.n_x;
    let scratch_len = kernel.ifft.get_inplace_scratch_len();
    let mut out = Array2::zeros((n, grid.n_p));
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each_init(
            || {
                (
                    vec![Complex64::new(0.0, 0.0); n],
                    vec![Complex64::new(0.0, 0.0); scratch_len],
                )
            },
            |(buf, scratch), (i, mut row)| {
                let row = row.as_slice_mut().expect("standard layout");
                kernel.row(i, &ga, &gb, buf, scratch, row);
            },
        );
    out
}

/// Real Wigner field of a pure state and the largest imaginary residue
/// relative to the largest real value.
pub(crate) fn pure_field(grid: &GridSpec, psi: &[Complex64]) -> (Array2<f64>, f64) {
    let c = cross_field(grid, psi, psi);
    let re = c.mapv(|v| v.re);
    let max_re = re.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let max_im = c.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
    let residue = if max_re > 0.0 { max_im / max_re } else { max_im };
    (re, residue)
}
