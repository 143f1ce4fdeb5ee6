//! Uniform grids and complex wave fields.
//!
//! A [`Grid`] is a product of one or two uniform periodic axes. Every axis has
//! a power-of-two number of points so the spectral routines can use radix-2
//! transforms, and the reciprocal spacing obeys `dx * dk * n = 2π` exactly.
//! Amplitudes are stored row-major with the first axis slowest.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Smallest accepted number of points per axis (the cubic stencils need four).
pub const MIN_POINTS: usize = 4;

/// Relative node threshold used when none is supplied: `1e-8 * max|ψ|`.
pub const DEFAULT_NODE_FRACTION: f64 = 1e-8;

/// One uniform axis covering `[min, max)` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || max <= min {
            return Err(Error::InvalidGrid(format!("degenerate extent [{min}, {max})")));
        }
        if n < MIN_POINTS || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("point count {n} must be a power of two >= {MIN_POINTS}")));
        }
        Ok(Self { min, max, n })
    }

    #[inline]
    pub fn extent(&self) -> f64 {
        self.max - self.min
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.extent() / self.n as f64
    }

    #[inline]
    pub fn reciprocal_spacing(&self) -> f64 {
        2.0 * PI / self.extent()
    }

    #[inline]
    pub fn point(&self, j: usize) -> f64 {
        self.min + j as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Index of the grid point nearest to `x`, or `None` when `x` lies outside
    /// the axis cells `[min - dx/2, max - dx/2)`.
    pub fn nearest_index(&self, x: f64) -> Option<usize> {
        let s = (x - self.min) / self.spacing();
        let j = s.round();
        if j < 0.0 || j >= self.n as f64 || !s.is_finite() {
            None
        } else {
            Some(j as usize)
        }
    }

    /// Wavenumbers in FFT storage order: `0, dk, ..., (n/2-1) dk, -n/2 dk, ..., -dk`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let dk = self.reciprocal_spacing();
        let n = self.n as isize;
        (0..n).map(|m| if m < n / 2 { m as f64 * dk } else { (m - n) as f64 * dk }).collect()
    }
}

/// Product grid of one or two uniform axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    axes: Vec<Axis>,
}

/// Builds a `dims`-dimensional grid with identical axes `[x_min, x_max)` of `n` points.
pub fn make_grid(x_min: f64, x_max: f64, n: usize, dims: usize) -> Result<Grid> {
    if !(1..=2).contains(&dims) {
        return Err(Error::InvalidGrid(format!("dims must be 1 or 2, got {dims}")));
    }
    let axis = Axis::new(x_min, x_max, n)?;
    Ok(Grid { axes: vec![axis; dims] })
}

impl Grid {
    pub fn line(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        make_grid(x_min, x_max, n, 1)
    }

    /// Product of two possibly different axes.
    pub fn plane(x: Axis, y: Axis) -> Result<Self> {
        let x = Axis::new(x.min, x.max, x.n)?;
        let y = Axis::new(y.min, y.max, y.n)?;
        Ok(Self { axes: vec![x, y] })
    }

    pub fn from_axes(axes: Vec<Axis>) -> Result<Self> {
        match axes.as_slice() {
            [a] => Ok(Self { axes: vec![Axis::new(a.min, a.max, a.n)?] }),
            [a, b] => Self::plane(*a, *b),
            _ => Err(Error::InvalidGrid(format!("dims must be 1 or 2, got {}", axes.len()))),
        }
    }

    #[inline]
    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    #[inline]
    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    #[inline]
    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume element `Π dx` over all axes.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).product()
    }

    /// Coordinates of flat index `idx`.
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        match self.axes.as_slice() {
            [a] => [a.point(idx), 0.0],
            [a, b] => [a.point(idx / b.n), b.point(idx % b.n)],
            _ => unreachable!(),
        }
    }

    /// The grid with every axis replaced by its reciprocal axis, ascending in k.
    pub fn reciprocal(&self) -> Grid {
        let axes = self
            .axes
            .iter()
            .map(|a| {
                let dk = a.reciprocal_spacing();
                let half = (a.n / 2) as f64;
                Axis { min: -half * dk, max: half * dk, n: a.n }
            })
            .collect();
        Grid { axes }
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Complex amplitudes on a grid together with the particle mass and ħ.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    grid: Grid,
    amplitudes: Vec<Complex64>,
    pub mass: f64,
    pub hbar: f64,
}

impl WaveField {
    pub fn new(grid: Grid, amplitudes: Vec<Complex64>, mass: f64, hbar: f64) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} amplitudes for a grid of {} points",
                amplitudes.len(),
                grid.len()
            )));
        }
        if !(mass > 0.0 && hbar > 0.0) {
            return Err(Error::OutOfRange(format!("mass {mass} and hbar {hbar} must be positive")));
        }
        Ok(Self { grid, amplitudes, mass, hbar })
    }

    /// Field with `m = ħ = 1`.
    pub fn natural(grid: Grid, amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::new(grid, amplitudes, 1.0, 1.0)
    }

    pub fn zeros(grid: Grid, mass: f64, hbar: f64) -> Self {
        let n = grid.len();
        Self { grid, amplitudes: vec![Complex64::new(0.0, 0.0); n], mass, hbar }
    }

    /// Samples `f(x, y)` at every grid point (`y = 0` on 1D grids).
    pub fn from_fn(grid: Grid, mass: f64, hbar: f64, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let amplitudes = (0..grid.len())
            .map(|i| {
                let [x, y] = grid.coords(i);
                f(x, y)
            })
            .collect();
        Self { grid, amplitudes, mass, hbar }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    #[inline]
    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    /// Same grid, mass and ħ with new amplitudes.
    pub fn with_amplitudes(&self, amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::new(self.grid.clone(), amplitudes, self.mass, self.hbar)
    }

    pub fn with_mass(mut self, mass: f64) -> Self {
        self.mass = mass;
        self
    }

    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `Σ|ψ|² dV`, summed in index order.
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self|other⟩ = Σ conj(self)·other dV`.
    pub fn inner(&self, other: &WaveField) -> Result<Complex64> {
        self.grid.check_same(&other.grid)?;
        let s: Complex64 = self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn normalize(&self) -> Result<WaveField> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::DegenerateState(format!("cannot normalize a field of norm {n}")));
        }
        let mut out = self.clone();
        out.scale(Complex64::new(1.0 / n, 0.0));
        Ok(out)
    }

    pub fn scale(&mut self, factor: Complex64) {
        for a in &mut self.amplitudes {
            *a *= factor;
        }
    }

    pub fn conj(&self) -> WaveField {
        let mut out = self.clone();
        for a in &mut out.amplitudes {
            *a = a.conj();
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// `a·self + b·other` on the same grid.
    pub fn combine(&self, a: Complex64, other: &WaveField, b: Complex64) -> Result<WaveField> {
        self.grid.check_same(&other.grid)?;
        let amps = self.amplitudes.iter().zip(&other.amplitudes).map(|(x, y)| a * x + b * y).collect();
        self.with_amplitudes(amps)
    }

    /// `ψ = R exp(iS/ħ)` with nodes below `eps_node` flagged.
    pub fn polar(&self, eps_node: f64) -> PolarDecomposition {
        polar(self, eps_node)
    }

    /// Node threshold `1e-8 · max|ψ|`.
    pub fn default_node_threshold(&self) -> f64 {
        DEFAULT_NODE_FRACTION * self.max_abs()
    }
}

/// Amplitude/phase split of a field. `action` is `ħ·arg ψ`, unwrapped along each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarDecomposition {
    pub amplitude: Vec<f64>,
    pub action: Vec<f64>,
    pub node: Vec<bool>,
    pub hbar: f64,
}

impl PolarDecomposition {
    /// `R exp(iS/ħ)` at every point.
    pub fn reconstruct(&self) -> Vec<Complex64> {
        self.amplitude.iter().zip(&self.action).map(|(&r, &s)| Complex64::from_polar(r, s / self.hbar)).collect()
    }
}

fn unwrap_step(prev: f64, raw: f64) -> f64 {
    let mut d = raw - prev.rem_euclid(2.0 * PI);
    d = (d + PI).rem_euclid(2.0 * PI) - PI;
    prev + d
}

/// Polar decomposition with phase unwrapping that skips flagged nodes.
pub fn polar(psi: &WaveField, eps_node: f64) -> PolarDecomposition {
    let amps = psi.amplitudes();
    let amplitude: Vec<f64> = amps.iter().map(|a| a.norm()).collect();
    let node: Vec<bool> = amplitude.iter().map(|&r| r < eps_node).collect();
    let raw: Vec<f64> = amps.iter().map(|a| a.arg()).collect();
    let mut phase = raw.clone();

    // Unwrap along a strided line, carrying the last unflagged phase across nodes.
    let unwrap_line = |phase: &mut [f64], idx: &mut dyn Iterator<Item = usize>, seed: Option<f64>| {
        let mut last = seed;
        for i in idx {
            if node[i] {
                continue;
            }
            let p = match last {
                None => raw[i],
                Some(prev) => unwrap_step(prev, raw[i]),
            };
            phase[i] = p;
            last = Some(p);
        }
    };

    match psi.grid().axes() {
        [a] => unwrap_line(&mut phase, &mut (0..a.n), None),
        [a, b] => {
            // First column along x, then each row along y seeded from its first unflagged entry.
            let (nx, ny) = (a.n, b.n);
            unwrap_line(&mut phase, &mut (0..nx).map(|ix| ix * ny), None);
            for ix in 0..nx {
                let row = ix * ny;
                let seed = if node[row] { None } else { Some(phase[row]) };
                unwrap_line(&mut phase, &mut (row + 1..row + ny), seed);
            }
        }
        _ => unreachable!(),
    }

    let action = phase.iter().map(|p| p * psi.hbar).collect();
    PolarDecomposition { amplitude, action, node, hbar: psi.hbar }
}

/// `sqrt(Σ|ψ|² dV)`.
pub fn norm(psi: &WaveField) -> f64 {
    psi.norm()
}

pub fn normalize(psi: &WaveField) -> Result<WaveField> {
    psi.normalize()
}

/// Normalized Gaussian packet with position-density standard deviation `sigma`,
/// centre `x0` and mean wavenumber `k0`: `exp(-(x-x0)²/(4σ²) + i k0 x)`.
pub fn gaussian_packet(grid: &Grid, x0: f64, sigma: f64, k0: f64, mass: f64, hbar: f64) -> Result<WaveField> {
    if grid.dims() != 1 {
        return Err(Error::Unsupported("gaussian_packet is one-dimensional".into()));
    }
    let f = WaveField::from_fn(grid.clone(), mass, hbar, |x, _| {
        let r = -(x - x0).powi(2) / (4.0 * sigma * sigma);
        Complex64::from_polar(r.exp(), k0 * x)
    });
    f.normalize()
}
