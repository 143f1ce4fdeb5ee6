//! FFT plumbing and the symmetric continuous-transform convention.
//!
//! Forward: `φ(k) = (2π)^{-1/2} ∫ ψ(x) e^{-ikx} dx`,
//! inverse: `ψ(x) = (2π)^{-1/2} ∫ φ(k) e^{ikx} dk`, applied per axis.
//! With `dx·dk·n = 2π` the discrete pair is exactly unitary, so
//! `Σ|φ|² dk = Σ|ψ|² dx`.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::Result;
use crate::grid::{Grid, WaveField};

/// Cached forward/inverse plans for every axis of a grid.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    wavenumbers: Vec<Vec<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = grid.axes().iter().map(|a| planner.plan_fft_forward(a.n)).collect();
        let inverse = grid.axes().iter().map(|a| planner.plan_fft_inverse(a.n)).collect();
        let wavenumbers = grid.axes().iter().map(|a| a.wavenumbers()).collect();
        Self { grid: grid.clone(), forward, inverse, wavenumbers }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Wavenumbers of axis `i` in FFT storage order.
    pub fn wavenumbers(&self, i: usize) -> &[f64] {
        &self.wavenumbers[i]
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        match self.grid.axes() {
            [_] => plans[0].process(data),
            [a, b] => {
                let (nx, ny) = (a.n, b.n);
                for row in data.chunks_exact_mut(ny) {
                    plans[1].process(row);
                }
                let mut col = vec![Complex64::new(0.0, 0.0); nx];
                for iy in 0..ny {
                    for ix in 0..nx {
                        col[ix] = data[ix * ny + iy];
                    }
                    plans[0].process(&mut col);
                    for ix in 0..nx {
                        data[ix * ny + iy] = col[ix];
                    }
                }
            }
            _ => unreachable!(),
        }
    }

    /// Unnormalized forward DFT over every axis, in place.
    pub fn forward_raw(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse DFT over every axis, in place, including the `1/N` factor.
    pub fn inverse_normalized(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let s = 1.0 / self.grid.len() as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }

    /// Applies a diagonal multiplier in k-space: `F⁻¹[m(k) F[data]]`.
    pub fn apply_multiplier(&self, data: &mut [Complex64], multiplier: impl Fn(&[f64; 2]) -> Complex64) {
        self.forward_raw(data);
        self.for_each_k(|idx, k| data[idx] *= multiplier(&k));
        self.inverse_normalized(data);
    }

    /// Visits every flat index with its wavenumber vector.
    pub fn for_each_k(&self, mut f: impl FnMut(usize, [f64; 2])) {
        match self.grid.axes() {
            [a] => {
                for m in 0..a.n {
                    f(m, [self.wavenumbers[0][m], 0.0]);
                }
            }
            [a, b] => {
                for ix in 0..a.n {
                    for iy in 0..b.n {
                        f(ix * b.n + iy, [self.wavenumbers[0][ix], self.wavenumbers[1][iy]]);
                    }
                }
            }
            _ => unreachable!(),
        }
    }

    /// Spectral derivative along `axis`. The Nyquist mode is dropped.
    pub fn gradient(&self, values: &[Complex64], axis: usize) -> Vec<Complex64> {
        let n = self.grid.axis(axis).n;
        let nyquist = -(n as f64 / 2.0) * self.grid.axis(axis).reciprocal_spacing();
        let mut out = values.to_vec();
        self.apply_multiplier(&mut out, |k| {
            let ka = k[axis];
            if ka == nyquist {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, ka)
            }
        });
        out
    }

    pub fn gradient_real(&self, values: &[f64], axis: usize) -> Vec<f64> {
        let c: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.gradient(&c, axis).into_iter().map(|v| v.re).collect()
    }

    /// Spectral Laplacian (sum of second derivatives over every axis).
    pub fn laplacian(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut out = values.to_vec();
        self.apply_multiplier(&mut out, |k| Complex64::new(-(k[0] * k[0] + k[1] * k[1]), 0.0));
        out
    }

    pub fn laplacian_real(&self, values: &[f64]) -> Vec<f64> {
        let c: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.laplacian(&c).into_iter().map(|v| v.re).collect()
    }
}

/// Which space a serialized field lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Position,
    Reciprocal,
}

/// Transform amplitudes `φ(k)` on the reciprocal grid of a position grid.
///
/// Values are stored with k ascending along each axis,
/// `k_m = (m - n/2)·dk`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAmplitude {
    position_grid: Grid,
    values: Vec<Complex64>,
    pub mass: f64,
    pub hbar: f64,
}

impl SpectralAmplitude {
    pub fn new(position_grid: Grid, values: Vec<Complex64>, mass: f64, hbar: f64) -> Result<Self> {
        if values.len() != position_grid.len() {
            return Err(crate::Error::GridMismatch(format!(
                "{} spectral values for {} grid points",
                values.len(),
                position_grid.len()
            )));
        }
        Ok(Self { position_grid, values, mass, hbar })
    }

    /// Samples `f(kx, ky)` on the ascending reciprocal grid.
    pub fn from_fn(position_grid: Grid, mass: f64, hbar: f64, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let k_grid = position_grid.reciprocal();
        let values = (0..k_grid.len())
            .map(|i| {
                let [kx, ky] = k_grid.coords(i);
                f(kx, ky)
            })
            .collect();
        Self { position_grid, values, mass, hbar }
    }

    pub fn position_grid(&self) -> &Grid {
        &self.position_grid
    }

    pub fn k_grid(&self) -> Grid {
        self.position_grid.reciprocal()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// `sqrt(Σ|φ|² dk)`.
    pub fn norm(&self) -> f64 {
        let dk: f64 = self.position_grid.axes().iter().map(|a| a.reciprocal_spacing()).product();
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * dk).sqrt()
    }
}

fn ascending_to_fft_index(m: usize, n: usize) -> usize {
    (m + n / 2) % n
}

/// Flat-index permutation between ascending-k and FFT storage order.
fn fft_order_index(grid: &Grid, ascending_idx: usize) -> usize {
    match grid.axes() {
        [a] => ascending_to_fft_index(ascending_idx, a.n),
        [a, b] => {
            let (ix, iy) = (ascending_idx / b.n, ascending_idx % b.n);
            ascending_to_fft_index(ix, a.n) * b.n + ascending_to_fft_index(iy, b.n)
        }
        _ => unreachable!(),
    }
}

fn origin_phase(grid: &Grid, k: [f64; 2], sign: f64) -> Complex64 {
    let mut phase = 0.0;
    for (i, a) in grid.axes().iter().enumerate() {
        phase += k[i] * a.min;
    }
    Complex64::from_polar(1.0, sign * phase)
}

/// Forward transform with the symmetric convention.
pub fn forward(psi: &WaveField) -> SpectralAmplitude {
    let grid = psi.grid();
    let spec = Spectral::new(grid);
    let mut data = psi.amplitudes().to_vec();
    spec.forward_raw(&mut data);
    let scale = grid.cell_volume() / (2.0 * PI).powf(grid.dims() as f64 / 2.0);
    let k_grid = grid.reciprocal();
    let values = (0..grid.len())
        .map(|i| {
            let [kx, ky] = k_grid.coords(i);
            data[fft_order_index(grid, i)] * origin_phase(grid, [kx, ky], -1.0) * scale
        })
        .collect();
    SpectralAmplitude { position_grid: grid.clone(), values, mass: psi.mass, hbar: psi.hbar }
}

/// Inverse transform with the symmetric convention.
pub fn inverse(phi: &SpectralAmplitude) -> WaveField {
    let grid = phi.position_grid();
    let spec = Spectral::new(grid);
    let k_grid = grid.reciprocal();
    let mut data = vec![Complex64::new(0.0, 0.0); grid.len()];
    for i in 0..grid.len() {
        let [kx, ky] = k_grid.coords(i);
        data[fft_order_index(grid, i)] = phi.values[i] * origin_phase(grid, [kx, ky], 1.0);
    }
    spec.inverse_normalized(&mut data);
    // inverse_normalized divides by N; the continuous inverse needs Π dk/√(2π) · N.
    let dk: f64 = grid.axes().iter().map(|a| a.reciprocal_spacing()).product();
    let scale = dk * grid.len() as f64 / (2.0 * PI).powf(grid.dims() as f64 / 2.0);
    for v in &mut data {
        *v *= scale;
    }
    WaveField::new(grid.clone(), data, phi.mass, phi.hbar).expect("grid lengths agree")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: &Grid, seed: u64) -> WaveField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amps =
            (0..grid.len()).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        WaveField::natural(grid.clone(), amps).unwrap()
    }

    #[test]
    fn parseval_random_fields() {
        for (dims, n) in [(1, 256), (2, 32)] {
            let g = make_grid(-3.0, 5.0, n, dims).unwrap();
            for seed in 0..5 {
                let f = random_field(&g, seed);
                let phi = forward(&f);
                assert!((phi.norm() - f.norm()).abs() <= 1e-10 * f.norm());
            }
        }
    }

    #[test]
    fn gaussian_transform_matches_analytic() {
        // ψ = exp(-x²/2) ↔ φ = exp(-k²/2) under the symmetric convention.
        let g = make_grid(-20.0, 20.0, 512, 1).unwrap();
        let f = WaveField::from_fn(g.clone(), 1.0, 1.0, |x, _| Complex64::new((-x * x / 2.0).exp(), 0.0));
        let phi = forward(&f);
        let kg = g.reciprocal();
        for (i, v) in phi.values().iter().enumerate() {
            let k = kg.coords(i)[0];
            assert!((v - Complex64::new((-k * k / 2.0).exp(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn shifted_gaussian_picks_up_phase() {
        let g = make_grid(-20.0, 20.0, 512, 1).unwrap();
        let f = WaveField::from_fn(g.clone(), 1.0, 1.0, |x, _| Complex64::new((-(x - 2.0).powi(2) / 2.0).exp(), 0.0));
        let phi = forward(&f);
        let kg = g.reciprocal();
        for (i, v) in phi.values().iter().enumerate() {
            let k = kg.coords(i)[0];
            let want = Complex64::from_polar((-k * k / 2.0).exp(), -2.0 * k);
            assert!((v - want).norm() < 1e-12);
        }
    }

    #[test]
    fn derivatives_of_smooth_functions() {
        let g = make_grid(-20.0, 20.0, 512, 1).unwrap();
        let s = Spectral::new(&g);
        let xs = g.axis(0).points();
        let f: Vec<f64> = xs.iter().map(|x| (-x * x).exp()).collect();
        let df = s.gradient_real(&f, 0);
        let lf = s.laplacian_real(&f);
        for (j, x) in xs.iter().enumerate() {
            let e = (-x * x).exp();
            assert!((df[j] + 2.0 * x * e).abs() < 1e-10);
            assert!((lf[j] - (4.0 * x * x - 2.0) * e).abs() < 1e-10);
        }
    }

    #[test]
    fn round_trip_2d() {
        let g = make_grid(-2.0, 3.0, 16, 2).unwrap();
        let f = random_field(&g, 9);
        let back = inverse(&forward(&f));
        for (a, b) in f.amplitudes().iter().zip(back.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
