//! Guidance velocity, quantum potential and quantum force on the grid.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, WaveField};
use crate::spectral::Spectral;

/// `v = (ħ/m) Im(∇ψ/ψ)` per axis, with flagged nodes filled from the
/// nearest unflagged neighbour along that axis.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    grid: Grid,
    components: Vec<Vec<f64>>,
    node: Vec<bool>,
}

impl VelocityField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }

    pub fn nodes(&self) -> &[bool] {
        &self.node
    }

    pub fn max_speed(&self) -> f64 {
        self.components.iter().flatten().fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}

/// Grid values of `Q = −(ħ²/2m) ΔR/R`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumPotentialField {
    grid: Grid,
    values: Vec<f64>,
    node: Vec<bool>,
}

impl QuantumPotentialField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nodes(&self) -> &[bool] {
        &self.node
    }
}

fn check_nonzero(psi: &WaveField) -> Result<f64> {
    let max = psi.max_abs();
    if !(max > 0.0) {
        return Err(Error::DegenerateState("field vanishes everywhere".into()));
    }
    Ok(max)
}

/// Replaces flagged entries by the value at the nearest unflagged point along
/// `axis`; lines with no unflagged point become zero.
pub(crate) fn fill_nodes(grid: &Grid, values: &mut [f64], node: &[bool], axis: usize) {
    let lines: Vec<Vec<usize>> = match grid.axes() {
        [a] => vec![(0..a.n).collect()],
        [a, b] => {
            let (nx, ny) = (a.n, b.n);
            if axis == 0 {
                (0..ny).map(|iy| (0..nx).map(|ix| ix * ny + iy).collect()).collect()
            } else {
                (0..nx).map(|ix| (0..ny).map(|iy| ix * ny + iy).collect()).collect()
            }
        }
        _ => unreachable!(),
    };
    for line in lines {
        let good: Vec<usize> = (0..line.len()).filter(|&p| !node[line[p]]).collect();
        if good.is_empty() {
            for &i in &line {
                values[i] = 0.0;
            }
            continue;
        }
        for p in 0..line.len() {
            if !node[line[p]] {
                continue;
            }
            let pos = good.partition_point(|&q| q < p);
            let left = pos.checked_sub(1).map(|i| good[i]);
            let right = good.get(pos).copied();
            let pick = match (left, right) {
                (Some(l), Some(r)) => {
                    if p - l <= r - p {
                        l
                    } else {
                        r
                    }
                }
                (Some(l), None) => l,
                (None, Some(r)) => r,
                (None, None) => unreachable!(),
            };
            values[line[p]] = values[line[pick]];
        }
    }
}

/// Guidance field of `psi` using spectral derivatives. Nodes are points with
/// `|ψ| < eps_node`.
pub fn velocity_field_with(psi: &WaveField, spectral: &Spectral, eps_node: f64) -> Result<VelocityField> {
    check_nonzero(psi)?;
    let amps = psi.amplitudes();
    let node: Vec<bool> = amps.iter().map(|a| a.norm() < eps_node).collect();
    let scale = psi.hbar / psi.mass;
    // Re ψ·∂Im ψ − Im ψ·∂Re ψ keeps real fields exactly still.
    let re: Vec<f64> = amps.iter().map(|a| a.re).collect();
    let im: Vec<f64> = amps.iter().map(|a| a.im).collect();
    let mut components = Vec::with_capacity(psi.grid().dims());
    for axis in 0..psi.grid().dims() {
        let d_re = spectral.gradient_real(&re, axis);
        let d_im = spectral.gradient_real(&im, axis);
        let mut v: Vec<f64> = (0..amps.len())
            .map(|i| if node[i] { 0.0 } else { scale * (re[i] * d_im[i] - im[i] * d_re[i]) / amps[i].norm_sqr() })
            .collect();
        fill_nodes(psi.grid(), &mut v, &node, axis);
        components.push(v);
    }
    Ok(VelocityField { grid: psi.grid().clone(), components, node })
}

/// Guidance field with the default node threshold `1e-8·max|ψ|`.
pub fn velocity_field(psi: &WaveField) -> Result<VelocityField> {
    let spectral = Spectral::new(psi.grid());
    velocity_field_with(psi, &spectral, psi.default_node_threshold())
}

/// Probability current `(ħ/m) Im(ψ* ∇ψ)` along `axis`.
pub fn probability_current(psi: &WaveField, axis: usize) -> Vec<f64> {
    let spectral = Spectral::new(psi.grid());
    let grad = spectral.gradient(psi.amplitudes(), axis);
    let scale = psi.hbar / psi.mass;
    grad.iter().zip(psi.amplitudes()).map(|(g, a)| scale * (a.conj() * g).im).collect()
}

fn amplitude(psi: &WaveField) -> Vec<Complex64> {
    psi.amplitudes().iter().map(|a| Complex64::new(a.norm(), 0.0)).collect()
}

/// `Q = −(ħ²/2m) ΔR/R` with a spectral Laplacian of `R = |ψ|`.
pub fn quantum_potential(psi: &WaveField) -> Result<QuantumPotentialField> {
    let max = check_nonzero(psi)?;
    let eps = crate::grid::DEFAULT_NODE_FRACTION * max;
    let spectral = Spectral::new(psi.grid());
    let r = amplitude(psi);
    let lap = spectral.laplacian(&r);
    let pref = -psi.hbar * psi.hbar / (2.0 * psi.mass);
    let node: Vec<bool> = r.iter().map(|v| v.re < eps).collect();
    let mut values: Vec<f64> =
        lap.iter().zip(&r).zip(&node).map(|((l, rv), &flag)| if flag { 0.0 } else { pref * l.re / rv.re }).collect();
    fill_nodes(psi.grid(), &mut values, &node, 0);
    Ok(QuantumPotentialField { grid: psi.grid().clone(), values, node })
}

/// `F_Q = −∂Q` along `axis`.
///
/// Uses the quotient rule on spectral derivatives of `R`,
/// `∂(ΔR/R) = ∂ΔR/R − ΔR·∂R/R²`, so the result is pointwise and the
/// filled node values do not leak into the bulk.
pub fn quantum_force(psi: &WaveField, axis: usize) -> Result<Vec<f64>> {
    let max = check_nonzero(psi)?;
    if axis >= psi.grid().dims() {
        return Err(Error::OutOfRange(format!("axis {axis}")));
    }
    let eps = crate::grid::DEFAULT_NODE_FRACTION * max;
    let spectral = Spectral::new(psi.grid());
    let r = amplitude(psi);
    let lap = spectral.laplacian(&r);
    let d_lap = spectral.gradient(&lap, axis);
    let d_r = spectral.gradient(&r, axis);
    let pref = psi.hbar * psi.hbar / (2.0 * psi.mass);
    let node: Vec<bool> = r.iter().map(|v| v.re < eps).collect();
    let mut f: Vec<f64> = (0..r.len())
        .map(|i| {
            if node[i] {
                0.0
            } else {
                let rv = r[i].re;
                pref * (d_lap[i].re / rv - lap[i].re * d_r[i].re / (rv * rv))
            }
        })
        .collect();
    fill_nodes(psi.grid(), &mut f, &node, axis);
    Ok(f)
}
