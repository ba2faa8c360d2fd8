use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::phase::{Representation, Wavefunction};

/// Largest L1 marginal mismatch accepted by [`wigner_transform`].
pub const MARGINAL_TOLERANCE: f64 = 1e-8;

/// Real phase-space array `W(x_j, p_k)`, row-major in `x`.
///
/// Rows sit on the position grid of the source state. Columns are spaced by
/// half the state's momentum step and span `[−p_max/2, p_max/2)`, the band the
/// symmetric discrete transform represents without aliasing.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerFunction {
    x_min: f64,
    dx: f64,
    p_min: f64,
    dp: f64,
    n_x: usize,
    n_p: usize,
    hbar: f64,
    values: Vec<f64>,
    max_imag_residue: f64,
}

impl WignerFunction {
    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dp(&self) -> f64 {
        self.dp
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn p(&self, k: usize) -> f64 {
        self.p_min + k as f64 * self.dp
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.n_p + k]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.n_p..(j + 1) * self.n_p]
    }

    /// Largest `|Im W|` met while transforming, relative to `max |W|`.
    pub fn max_imag_residue(&self) -> f64 {
        self.max_imag_residue
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dx * self.dp
    }

    /// `∫W dp` at every position.
    pub fn position_marginal(&self) -> Vec<f64> {
        (0..self.n_x)
            .map(|j| self.row(j).iter().sum::<f64>() * self.dp)
            .collect()
    }

    /// `∫W dx` at every momentum.
    pub fn momentum_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_p];
        for j in 0..self.n_x {
            for (o, w) in out.iter_mut().zip(self.row(j)) {
                *o += w;
            }
        }
        out.iter_mut().for_each(|o| *o *= self.dx);
        out
    }

    /// L1 distances of the two marginals from `|ψ(x)|²` and `|ψ̃(p)|²`.
    pub fn marginal_mismatch(&self, psi: &Wavefunction) -> Result<(f64, f64)> {
        let pos = match psi.representation() {
            Representation::Position => psi.clone(),
            Representation::Momentum => psi.to_position_space()?,
        };
        if pos.grid().n_points() != self.n_x || (pos.grid().dx() - self.dx).abs() > 1e-15 * self.dx.max(1.0) {
            return Err(Error::GridMismatch);
        }
        let px = self.position_marginal();
        let dens = pos.density();
        let l1_x = px.iter().zip(&dens).map(|(a, b)| (a - b).abs()).sum::<f64>() * self.dx;

        // compare on the columns that coincide with the state's momentum grid;
        // state density outside the Wigner band counts as mismatch
        let mom = pos.to_momentum_space()?;
        let g = *mom.grid();
        let n = g.n_points();
        let pm = self.momentum_marginal();
        let md = mom.density();
        let mut l1_p = 0.0;
        for (k, d) in md.iter().enumerate() {
            let kw = k as isize - (n / 4) as isize;
            let w = if kw >= 0 && (kw as usize) * 2 < self.n_p {
                pm[kw as usize * 2]
            } else {
                0.0
            };
            l1_p += (w - d).abs();
        }
        Ok((l1_x, l1_p * g.dp()))
    }

    /// Shifts by whole grid steps (`dj` rows, `dk` columns); vacated cells are zero.
    pub fn shifted(&self, dj: isize, dk: isize) -> WignerFunction {
        let mut values = vec![0.0; self.values.len()];
        for j in 0..self.n_x {
            let sj = j as isize - dj;
            if sj < 0 || sj >= self.n_x as isize {
                continue;
            }
            for k in 0..self.n_p {
                let sk = k as isize - dk;
                if sk < 0 || sk >= self.n_p as isize {
                    continue;
                }
                values[j * self.n_p + k] = self.values[sj as usize * self.n_p + sk as usize];
            }
        }
        WignerFunction { values, ..self.clone() }
    }

    fn same_grid(&self, other: &WignerFunction) -> bool {
        self.n_x == other.n_x
            && self.n_p == other.n_p
            && self.x_min == other.x_min
            && self.dx == other.dx
            && self.p_min == other.p_min
            && self.dp == other.dp
            && self.hbar == other.hbar
    }

    /// Writes `x,p,w` rows, keeping every `stride`-th point along both axes.
    pub fn write_csv(&self, path: &Path, stride: usize) -> Result<()> {
        let stride = stride.max(1);
        crate::harness::write_atomically(path, |w| {
            writeln!(w, "x,p,w")?;
            for j in (0..self.n_x).step_by(stride) {
                for k in (0..self.n_p).step_by(stride) {
                    writeln!(w, "{},{},{}", self.x(j), self.p(k), self.value(j, k))?;
                }
            }
            Ok(())
        })
    }
}

/// `W(x,p) = (1/πħ)∫ψ*(x+y)ψ(x−y)e^{2ipy/ħ}dy`, one FFT over `y` per row.
///
/// The lag sum is zero padded outside the grid, so nothing wraps around.
/// Fails with [`Error::Aliasing`] if either marginal misses by more than
/// [`MARGINAL_TOLERANCE`].
pub fn wigner_transform(psi: &Wavefunction) -> Result<WignerFunction> {
    let w = wigner_transform_unchecked(psi)?;
    let (mx, mp) = w.marginal_mismatch(psi)?;
    if mx.max(mp) > MARGINAL_TOLERANCE {
        return Err(Error::Aliasing(mx.max(mp)));
    }
    Ok(w)
}

/// As [`wigner_transform`] without the marginal check.
pub fn wigner_transform_unchecked(psi: &Wavefunction) -> Result<WignerFunction> {
    let pos = match psi.representation() {
        Representation::Position => psi.clone(),
        Representation::Momentum => psi.to_position_space()?,
    };
    let g = *pos.grid();
    let n = g.n_points();
    let amps = pos.amplitudes();
    let hbar = g.hbar();
    let dx = g.dx();
    let scale = dx / (PI * hbar);
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(n);

    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map_init(
            || {
                (
                    vec![Complex64::new(0.0, 0.0); n],
                    vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
                )
            },
            |(buf, scratch), j| {
                buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
                let reach = j.min(n - 1 - j);
                for m in 0..=reach {
                    let f = amps[j + m].conj() * amps[j - m];
                    buf[m] = f;
                    if m > 0 {
                        buf[n - m] = f.conj();
                    }
                }
                fft.process_with_scratch(buf, scratch);
                let mut imag: f64 = 0.0;
                let row = (0..n)
                    .map(|k| {
                        let c = buf[(k + n / 2) % n] * scale;
                        imag = imag.max(c.im.abs());
                        c.re
                    })
                    .collect();
                (row, imag)
            },
        )
        .collect();

    let mut values = Vec::with_capacity(n * n);
    let mut imag: f64 = 0.0;
    for (row, im) in rows {
        values.extend_from_slice(&row);
        imag = imag.max(im);
    }
    let peak = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let dp = 0.5 * g.dp();
    Ok(WignerFunction {
        x_min: g.x_min(),
        dx,
        p_min: -(n as f64 / 2.0) * dp,
        dp,
        n_x: n,
        n_p: n,
        hbar,
        values,
        max_imag_residue: if peak > 0.0 { imag / peak } else { 0.0 },
    })
}

/// Moyal overlap `2πħ∫W₁W₂ dx dp`.
pub fn wigner_overlap(w1: &WignerFunction, w2: &WignerFunction) -> Result<f64> {
    if !w1.same_grid(w2) {
        return Err(Error::GridMismatch);
    }
    let s: f64 = w1.values.iter().zip(&w2.values).map(|(a, b)| a * b).sum();
    Ok(2.0 * PI * w1.hbar * s * w1.dx * w1.dp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::{gaussian_wavepacket, overlap, SpatialGrid};
    use approx::assert_abs_diff_eq;

    fn grid() -> SpatialGrid {
        SpatialGrid::new(512, -10.0, 10.0, 0.1).unwrap()
    }

    #[test]
    fn coherent_state_is_positive_gaussian() {
        let g = grid();
        let (x0, p0, s) = (1.0, -0.5, 0.05_f64.sqrt());
        let psi = gaussian_wavepacket(&g, x0, p0, s).unwrap();
        let w = wigner_transform(&psi).unwrap();
        let sp = g.hbar() / (2.0 * s);
        let mut worst: f64 = 0.0;
        for j in 0..w.n_x() {
            for k in 0..w.n_p() {
                let (x, p) = (w.x(j), w.p(k));
                let exact =
                    (-(x - x0).powi(2) / (2.0 * s * s) - (p - p0).powi(2) / (2.0 * sp * sp)).exp() / (PI * g.hbar());
                worst = worst.max((w.value(j, k) - exact).abs());
                assert!(w.value(j, k) > -1e-12);
            }
        }
        assert!(worst < 1e-10, "worst {worst}");
        assert_abs_diff_eq!(w.total(), 1.0, epsilon = 1e-8);
        assert!(w.max_imag_residue() < 1e-10);
    }

    #[test]
    fn moyal_purity_and_orthogonality() {
        let g = grid();
        let a = gaussian_wavepacket(&g, -3.0, 0.0, 0.3).unwrap();
        let wa = wigner_transform(&a).unwrap();
        assert_abs_diff_eq!(wigner_overlap(&wa, &wa).unwrap(), 1.0, epsilon = 1e-6);
        let b = gaussian_wavepacket(&g, 3.0, 0.0, 0.3).unwrap();
        let wb = wigner_transform(&b).unwrap();
        assert_abs_diff_eq!(wigner_overlap(&wa, &wb).unwrap(), 0.0, epsilon = 1e-6);
        let c = gaussian_wavepacket(&g, -2.7, 0.2, 0.4).unwrap();
        let wc = wigner_transform(&c).unwrap();
        assert_abs_diff_eq!(
            wigner_overlap(&wa, &wc).unwrap(),
            overlap(&a, &c).unwrap(),
            epsilon = 1e-6
        );
    }

    #[test]
    fn aliased_state_is_rejected() {
        let g = grid();
        // momentum beyond half the grid band
        let psi = gaussian_wavepacket(&g, 0.0, 0.6 * g.p_max(), 0.4).unwrap();
        assert!(matches!(wigner_transform(&psi), Err(Error::Aliasing(_))));
    }

    #[test]
    fn grid_mismatch_rejected() {
        let a = wigner_transform(&gaussian_wavepacket(&grid(), 0.0, 0.0, 0.3).unwrap()).unwrap();
        let g2 = SpatialGrid::new(256, -10.0, 10.0, 0.1).unwrap();
        let b = wigner_transform(&gaussian_wavepacket(&g2, 0.0, 0.0, 0.3).unwrap()).unwrap();
        assert!(matches!(wigner_overlap(&a, &b), Err(Error::GridMismatch)));
    }

    #[test]
    fn displaced_state_has_displaced_wigner() {
        let g = grid();
        let psi = gaussian_wavepacket(&g, 0.5, 0.3, 0.35).unwrap();
        let w = wigner_transform(&psi).unwrap();
        let (dj, dk) = (7isize, -12isize);
        let moved = psi
            .translate(dj as f64 * g.dx())
            .unwrap()
            .boost(dk as f64 * w.dp())
            .unwrap();
        let wm = wigner_transform(&moved).unwrap();
        let ws = w.shifted(dj, dk);
        let worst = wm
            .values()
            .iter()
            .zip(ws.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "worst {worst}");
    }
}
