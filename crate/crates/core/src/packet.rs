//! Fourier synthesis and analysis of wave packets with the grid's symmetric
//! transform convention.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, WaveField};
use crate::spectral::{forward, inverse, SpectralAmplitude};

/// `ψ(x) = (2π)^{-D/2} ∫ φ(k) e^{ikx} dk` at `t = 0`.
pub fn synthesize(phi: &SpectralAmplitude) -> WaveField {
    inverse(phi)
}

/// `φ(k) = (2π)^{-D/2} ∫ ψ(x) e^{-ikx} dx`.
pub fn analyze(psi: &WaveField) -> SpectralAmplitude {
    forward(psi)
}

/// `ω(k) = ħ|k|²/(2m)`.
pub fn matter_dispersion(mass: f64, hbar: f64) -> impl Fn(f64, f64) -> f64 {
    move |kx, ky| hbar * (kx * kx + ky * ky) / (2.0 * mass)
}

/// `ψ(x, t) = (2π)^{-D/2} ∫ φ(k) e^{i(kx − ω(k)t)} dk`.
pub fn time_extend(phi: &SpectralAmplitude, omega: impl Fn(f64, f64) -> f64, t: f64) -> WaveField {
    let k_grid = phi.k_grid();
    let mut moved = phi.clone();
    for (i, v) in moved.values_mut().iter_mut().enumerate() {
        let [kx, ky] = k_grid.coords(i);
        *v *= Complex64::from_polar(1.0, -omega(kx, ky) * t);
    }
    inverse(&moved)
}

/// Spectrum of a normalized Gaussian packet centred at `x0` with mean
/// wavenumber `k0` and wavenumber standard deviation `kappa`.
pub fn gaussian_spectrum(grid: &Grid, x0: f64, k0: f64, kappa: f64, mass: f64, hbar: f64) -> Result<SpectralAmplitude> {
    if grid.dims() != 1 {
        return Err(Error::Unsupported("gaussian_spectrum is one-dimensional".into()));
    }
    if !(kappa > 0.0) {
        return Err(Error::OutOfRange(format!("spectral width {kappa} must be positive")));
    }
    let phi = SpectralAmplitude::from_fn(grid.clone(), mass, hbar, |k, _| {
        Complex64::from_polar((-(k - k0).powi(2) / (4.0 * kappa * kappa)).exp(), -k * x0)
    });
    let n = phi.norm();
    let values = phi.values().iter().map(|v| v / n).collect();
    SpectralAmplitude::new(grid.clone(), values, mass, hbar)
}

fn spread(grid: &Grid, weights: &[f64]) -> Result<f64> {
    if grid.dims() != 1 {
        return Err(Error::Unsupported("spreads are computed on one axis".into()));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateState("zero weight".into()));
    }
    let axis = grid.axis(0);
    let mean = (0..axis.n).map(|j| weights[j] * axis.point(j)).sum::<f64>() / total;
    let var = (0..axis.n).map(|j| weights[j] * (axis.point(j) - mean).powi(2)).sum::<f64>() / total;
    Ok(var.sqrt())
}

/// Standard deviation of `|ψ|²`.
pub fn position_spread(psi: &WaveField) -> Result<f64> {
    spread(psi.grid(), &psi.density())
}

/// Standard deviation of `|φ|²`.
pub fn wavenumber_spread(phi: &SpectralAmplitude) -> Result<f64> {
    let w: Vec<f64> = phi.values().iter().map(|v| v.norm_sqr()).collect();
    spread(&phi.k_grid(), &w)
}

/// `σ_x σ_k`.
pub fn uncertainty_product(psi: &WaveField) -> Result<f64> {
    Ok(position_spread(psi)? * wavenumber_spread(&analyze(psi))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gaussian_packet, make_grid};

    #[test]
    fn narrow_spectrum_gives_plane_wave() {
        let g = make_grid(-16.0, 16.0, 256, 1).unwrap();
        let k_grid = g.reciprocal();
        let m = 140;
        let k0 = k_grid.axis(0).point(m);
        let mut values = vec![Complex64::new(0.0, 0.0); g.len()];
        values[m] = Complex64::new(1.0, 0.0);
        let psi = synthesize(&SpectralAmplitude::new(g.clone(), values, 1.0, 1.0).unwrap());
        let a0 = psi.amplitudes()[0].norm();
        for (j, a) in psi.amplitudes().iter().enumerate() {
            assert!((a.norm() - a0).abs() < 1e-10);
            let expected = Complex64::from_polar(a0, k0 * g.axis(0).point(j));
            assert!((a / expected - psi.amplitudes()[0] / Complex64::from_polar(a0, k0 * g.axis(0).min)).norm() < 1e-9);
        }
        let back = analyze(&psi);
        let peak = back.values().iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).unwrap().0;
        assert_eq!(peak, m);
    }

    #[test]
    fn gaussian_pair_saturates_uncertainty() {
        let g = make_grid(-40.0, 40.0, 1024, 1).unwrap();
        let kappa = 0.4;
        let phi = gaussian_spectrum(&g, 1.0, 2.0, kappa, 1.0, 1.0).unwrap();
        let psi = synthesize(&phi);
        let sx = position_spread(&psi).unwrap();
        assert!((sx - 1.0 / (2.0 * kappa)).abs() < 1e-8);
        assert!((sx * wavenumber_spread(&phi).unwrap() - 0.5).abs() < 1e-8);
        assert!((psi.norm() - phi.norm()).abs() < 1e-10);
    }

    #[test]
    fn real_even_spectrum_gives_real_even_field() {
        let g = make_grid(-20.0, 20.0, 256, 1).unwrap();
        let phi =
            SpectralAmplitude::from_fn(g.clone(), 1.0, 1.0, |k, _| Complex64::new((-k * k).exp() * (1.0 + k * k), 0.0));
        let psi = synthesize(&phi);
        let a = psi.amplitudes();
        let n = a.len();
        for j in 1..n {
            assert!(a[j].im.abs() < 1e-10);
            assert!((a[j] - a[n - j]).norm() < 1e-10);
        }
    }

    #[test]
    fn time_extension_at_zero_and_linear_dispersion() {
        let g = make_grid(-32.0, 32.0, 512, 1).unwrap();
        let psi = gaussian_packet(&g, -5.0, 1.0, 0.7, 1.0, 1.0).unwrap();
        let phi = analyze(&psi);
        let at_zero = time_extend(&phi, matter_dispersion(1.0, 1.0), 0.0);
        let direct = synthesize(&phi);
        assert_eq!(at_zero.amplitudes(), direct.amplitudes());

        let v = 2.5;
        let t = 3.0;
        let moved = time_extend(&phi, |k, _| v * k, t);
        let expected = gaussian_packet(&g, -5.0 + v * t, 1.0, 0.7, 1.0, 1.0).unwrap();
        for (a, b) in moved.amplitudes().iter().zip(expected.amplitudes()) {
            assert!((a.norm() - b.norm()).abs() < 1e-8);
        }
    }

    #[test]
    fn far_tail_cancels() {
        let g = make_grid(-40.0, 40.0, 1024, 1).unwrap();
        let sigma = 1.5;
        let psi = synthesize(&gaussian_spectrum(&g, 0.0, 3.0, 1.0 / (2.0 * sigma), 1.0, 1.0).unwrap());
        let peak = psi.max_abs();
        for (j, a) in psi.amplitudes().iter().enumerate() {
            if g.axis(0).point(j).abs() > 8.0 * sigma {
                assert!(a.norm() <= 1e-6 * peak);
            }
        }
    }
}
