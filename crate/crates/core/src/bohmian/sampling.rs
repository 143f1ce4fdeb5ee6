//! Sampling from `|ψ|²` and Kolmogorov–Smirnov comparison against it.
//!
//! The discrete density is read as piecewise constant on cells
//! `[x_j − dx/2, x_j + dx/2)` centred on the grid points, so its CDF is
//! piecewise linear and inverse-CDF sampling is exact for that law.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Axis, WaveField};

/// Piecewise-linear CDF of cell-centred weights on one axis.
#[derive(Debug, Clone)]
pub struct CellCdf {
    axis: Axis,
    cumulative: Vec<f64>,
}

impl CellCdf {
    /// Weights need not be normalized; a zero total is an error.
    pub fn new(axis: Axis, weights: &[f64]) -> Result<Self> {
        if weights.len() != axis.n {
            return Err(Error::GridMismatch("weights do not match the axis".into()));
        }
        let mut cumulative = Vec::with_capacity(axis.n + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for &w in weights {
            acc += w.max(0.0);
            cumulative.push(acc);
        }
        if !(acc > 0.0) || !acc.is_finite() {
            return Err(Error::DegenerateState("density has zero total weight".into()));
        }
        for c in &mut cumulative {
            *c /= acc;
        }
        Ok(Self { axis, cumulative })
    }

    fn lower_edge(&self) -> f64 {
        self.axis.min - 0.5 * self.axis.spacing()
    }

    /// `F(x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        let s = (x - self.lower_edge()) / self.axis.spacing();
        if s <= 0.0 {
            return 0.0;
        }
        if s >= self.axis.n as f64 {
            return 1.0;
        }
        let j = s.floor() as usize;
        let u = s - j as f64;
        self.cumulative[j] + u * (self.cumulative[j + 1] - self.cumulative[j])
    }

    /// `F⁻¹(u)` for `u ∈ [0, 1)`.
    pub fn inverse(&self, u: f64) -> f64 {
        let n = self.axis.n;
        // First cell whose upper cumulative exceeds u, skipping empty cells.
        let j = self.cumulative[1..].partition_point(|&c| c <= u).min(n - 1);
        let (lo, hi) = (self.cumulative[j], self.cumulative[j + 1]);
        let frac = if hi > lo { ((u - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 };
        self.lower_edge() + (j as f64 + frac) * self.axis.spacing()
    }

    pub fn cell_of(&self, u: f64) -> usize {
        self.cumulative[1..].partition_point(|&c| c <= u).min(self.axis.n - 1)
    }
}

/// Random stream for trajectory `index` under `seed`. Streams are
/// independent of how many trajectories are drawn or in which order.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Inverse-CDF sampler for `|ψ|²` on 1D or 2D grids. In 2D the first
/// coordinate is drawn from the marginal and the second from the conditional
/// row of the chosen cell.
#[derive(Debug, Clone)]
pub struct DensitySampler {
    marginal: CellCdf,
    rows: Vec<Option<CellCdf>>,
}

impl DensitySampler {
    pub fn new(psi: &WaveField) -> Result<Self> {
        Self::from_density(psi.grid(), &psi.density())
    }

    pub fn from_density(grid: &crate::grid::Grid, density: &[f64]) -> Result<Self> {
        match grid.axes() {
            [a] => Ok(Self { marginal: CellCdf::new(*a, density)?, rows: Vec::new() }),
            [a, b] => {
                let ny = b.n;
                let marginal_w: Vec<f64> = density.chunks_exact(ny).map(|r| r.iter().sum()).collect();
                let marginal = CellCdf::new(*a, &marginal_w)?;
                let rows = density.chunks_exact(ny).map(|r| CellCdf::new(*b, r).ok()).collect();
                Ok(Self { marginal, rows })
            }
            _ => unreachable!(),
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> [f64; 2] {
        let u: f64 = rng.random();
        let x = self.marginal.inverse(u);
        if self.rows.is_empty() {
            return [x, 0.0];
        }
        let ix = self.marginal.cell_of(u);
        let v: f64 = rng.random();
        let y = self.rows[ix].as_ref().map(|c| c.inverse(v)).unwrap_or(0.0);
        [x, y]
    }

    /// CDF of the first-axis marginal.
    pub fn marginal(&self) -> &CellCdf {
        &self.marginal
    }
}

/// Two-sided one-sample KS distance between `samples` and `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / m - f).max(f - i as f64 / m);
    }
    Ok(d)
}

/// KS critical value at significance `alpha` with Stephens' small-sample
/// correction, `c(α)/(√M + 0.12 + 0.11/√M)`, `c(α) = sqrt(−ln(α/2)/2)`.
/// For `α = 0.01`, `c = 1.628`.
pub fn ks_critical_value(samples: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    let r = (samples as f64).sqrt();
    c / (r + 0.12 + 0.11 / r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gaussian_packet, make_grid};
    use num_complex::Complex64;

    #[test]
    fn concentrated_density_samples_one_cell() {
        let g = make_grid(-4.0, 4.0, 64, 1).unwrap();
        let mut amps = vec![Complex64::new(0.0, 0.0); 64];
        amps[40] = Complex64::new(1.0, 0.0);
        let f = WaveField::natural(g.clone(), amps).unwrap();
        let s = DensitySampler::new(&f).unwrap();
        let x40 = g.axis(0).point(40);
        let dx = g.axis(0).spacing();
        let mut rng = trajectory_rng(3, 0);
        for _ in 0..1000 {
            let [x, _] = s.sample(&mut rng);
            assert!(x >= x40 - dx / 2.0 && x < x40 + dx / 2.0);
        }
    }

    #[test]
    fn symmetric_density_has_centred_mean() {
        let g = make_grid(-10.0, 10.0, 512, 1).unwrap();
        let f = gaussian_packet(&g, 0.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        let s = DensitySampler::new(&f).unwrap();
        let m = 10_000;
        let xs: Vec<f64> = (0..m).map(|i| s.sample(&mut trajectory_rng(11, i as u64))[0]).collect();
        let mean = xs.iter().sum::<f64>() / m as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m as f64).sqrt();
        assert!(mean.abs() <= 4.0 * sd / (m as f64).sqrt());
    }

    #[test]
    fn uniform_density_passes_ks() {
        let g = make_grid(0.0, 1.0, 1024, 1).unwrap();
        let f = WaveField::from_fn(g, 1.0, 1.0, |_, _| Complex64::new(1.0, 0.0));
        let s = DensitySampler::new(&f).unwrap();
        let m = 10_000;
        let xs: Vec<f64> = (0..m).map(|i| s.sample(&mut trajectory_rng(5, i as u64))[0]).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(d < 1.63 / (m as f64).sqrt(), "KS {d}");
    }

    #[test]
    fn cdf_inverse_round_trip() {
        let a = Axis::new(-1.0, 1.0, 16).unwrap();
        let w: Vec<f64> = (0..16).map(|j| (j % 5) as f64).collect();
        let c = CellCdf::new(a, &w).unwrap();
        for k in 1..100 {
            let u = k as f64 / 100.0;
            assert!((c.cdf(c.inverse(u)) - u).abs() < 1e-12);
        }
        assert!(CellCdf::new(a, &[0.0; 16]).is_err());
    }

    #[test]
    fn two_dimensional_marginals() {
        let g = make_grid(-6.0, 6.0, 64, 2).unwrap();
        let f = WaveField::from_fn(g, 1.0, 1.0, |x, y| {
            Complex64::new((-(x - 1.0).powi(2) / 4.0 - (y + 2.0).powi(2) / 2.0).exp(), 0.0)
        });
        let s = DensitySampler::new(&f).unwrap();
        let m = 4000;
        let pts: Vec<[f64; 2]> = (0..m).map(|i| s.sample(&mut trajectory_rng(1, i))).collect();
        let mx = pts.iter().map(|p| p[0]).sum::<f64>() / m as f64;
        let my = pts.iter().map(|p| p[1]).sum::<f64>() / m as f64;
        assert!((mx - 1.0).abs() < 0.1 && (my + 2.0).abs() < 0.1, "{mx} {my}");
    }

    #[test]
    fn critical_value_close_to_asymptotic() {
        let c = ks_critical_value(10_000, 0.01);
        assert!(c < 1.63 / 100.0 && c > 1.62 / 100.5);
        assert!(ks_statistic(&[], |x| x).is_err());
    }
}
