//! Ensemble statistics: equivariance, fringe occupancy and ordering.

use super::ensemble::TrajectoryEnsemble;
use super::sampling::{ks_statistic, DensitySampler};
use crate::error::{Error, Result};
use crate::grid::WaveField;

fn record_index(ens: &TrajectoryEnsemble, t: f64) -> Result<usize> {
    ens.time_index(t).ok_or_else(|| Error::OutOfRange(format!("no ensemble record at t = {t}")))
}

/// KS distance between the first coordinates of trajectories alive at `t`
/// and the first-axis marginal of `|ψ_t|²`, renormalized to the mass still
/// on the grid.
pub fn equivariance_check(ens: &TrajectoryEnsemble, t: f64, psi: &WaveField) -> Result<f64> {
    let k = record_index(ens, t)?;
    let xs: Vec<f64> = ens.alive_positions(k).iter().map(|p| p[0]).collect();
    if xs.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let sampler = DensitySampler::new(psi)?;
    ks_statistic(&xs, |x| sampler.marginal().cdf(x))
}

/// Time-and-ensemble average of the indicator `|ψ_t(Q)|² < θ·max|ψ_t|²`,
/// evaluated at the nearest grid point, over the records matching `fields`.
pub fn fringe_occupancy(ens: &TrajectoryEnsemble, fields: &[(f64, &WaveField)], theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::OutOfRange(format!("threshold {theta} outside (0, 1)")));
    }
    let mut hits = 0usize;
    let mut total = 0usize;
    for &(t, psi) in fields {
        let k = record_index(ens, t)?;
        let density = psi.density();
        let cut = theta * density.iter().fold(0.0f64, |m, &d| m.max(d));
        let grid = psi.grid();
        for p in ens.alive_positions(k) {
            let Some(ix) = grid.axis(0).nearest_index(p[0]) else { continue };
            let idx = if grid.dims() == 1 {
                ix
            } else {
                match grid.axis(1).nearest_index(p[1]) {
                    Some(iy) => ix * grid.axis(1).n + iy,
                    None => continue,
                }
            };
            total += 1;
            hits += usize::from(density[idx] < cut);
        }
    }
    if total == 0 {
        return Err(Error::EmptyEnsemble);
    }
    Ok(hits as f64 / total as f64)
}

/// Number of adjacent order violations: trajectories are sorted by initial
/// position, and at every record the surviving ones are checked for strict
/// increase. Zero means no two 1D trajectories ever crossed.
pub fn sorted_order_inversions(ens: &TrajectoryEnsemble) -> Result<usize> {
    if ens.dims != 1 {
        return Err(Error::Unsupported("ordering is defined for 1D ensembles".into()));
    }
    let mut order: Vec<usize> = (0..ens.len()).collect();
    order.sort_by(|&a, &b| ens.trajectories[a].origin()[0].total_cmp(&ens.trajectories[b].origin()[0]));
    let mut inversions = 0;
    for (k, &t) in ens.times.iter().enumerate() {
        let mut prev: Option<f64> = None;
        for &i in &order {
            let tr = &ens.trajectories[i];
            if !tr.alive_at(t) {
                continue;
            }
            let x = tr.positions[k][0];
            if prev.is_some_and(|p| x < p) {
                inversions += 1;
            }
            prev = Some(x);
        }
    }
    Ok(inversions)
}

fn band(boundaries: &[f64], x: f64) -> usize {
    boundaries.partition_point(|&b| b < x)
}

/// Trajectories alive at both times whose band, delimited by the sorted
/// `boundaries` (typically density minima), differs between `from` and `to`.
pub fn band_transitions(ens: &TrajectoryEnsemble, from: f64, to: f64, boundaries: &[f64]) -> Result<usize> {
    let (a, b) = (record_index(ens, from)?, record_index(ens, to)?);
    Ok(ens
        .trajectories
        .iter()
        .filter(|tr| tr.alive_at(to.max(from)))
        .filter(|tr| band(boundaries, tr.positions[a][0]) != band(boundaries, tr.positions[b][0]))
        .count())
}

/// Fraction of trajectories alive at `t` whose first coordinate is positive.
pub fn positive_fraction(ens: &TrajectoryEnsemble, t: f64) -> Result<f64> {
    let k = record_index(ens, t)?;
    let alive = ens.alive_positions(k);
    if alive.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    Ok(alive.iter().filter(|p| p[0] > 0.0).count() as f64 / alive.len() as f64)
}
