//! Seeded trajectory ensembles and their CSV form.

use rayon::prelude::*;
use serde::Serialize;

use super::sampling::{trajectory_rng, DensitySampler};
use crate::error::{Error, Result};
use crate::grid::WaveField;

/// Why a trajectory stopped before the end of the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Termination {
    /// Hit the blocked support of an amplitude mask.
    Mask { time: f64 },
    /// Entered the absorbing boundary layer.
    Boundary { time: f64 },
}

impl Termination {
    pub fn time(&self) -> f64 {
        match *self {
            Termination::Mask { time } | Termination::Boundary { time } => time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub id: usize,
    /// One position per ensemble record time; frozen after termination.
    pub positions: Vec<[f64; 2]>,
    pub termination: Option<Termination>,
}

impl Trajectory {
    pub fn origin(&self) -> [f64; 2] {
        self.positions[0]
    }

    pub fn last(&self) -> [f64; 2] {
        *self.positions.last().expect("non-empty")
    }

    /// Alive at `t` unless terminated at or before `t`.
    pub fn alive_at(&self, t: f64) -> bool {
        self.termination.is_none_or(|e| e.time() > t)
    }

    pub fn intercepted(&self) -> bool {
        matches!(self.termination, Some(Termination::Mask { .. }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryEnsemble {
    pub seed: u64,
    pub dims: usize,
    /// Shared record times, ascending, starting at 0.
    pub times: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
}

impl TrajectoryEnsemble {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    /// Index of the record time closest to `t`, if within `1e-9` of it.
    pub fn time_index(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * t.abs().max(1.0);
        self.times.iter().position(|&s| (s - t).abs() <= tol)
    }

    /// First coordinates of trajectories alive at record `k`.
    pub fn alive_positions(&self, k: usize) -> Vec<[f64; 2]> {
        let t = self.times[k];
        self.trajectories.iter().filter(|tr| tr.alive_at(t)).map(|tr| tr.positions[k]).collect()
    }

    pub fn intercepted_fraction(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.trajectories.iter().filter(|t| t.intercepted()).count() as f64 / self.len() as f64
    }

    /// Rows `trajectory_id,t,x[,y],alive`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(if self.dims == 1 { "trajectory_id,t,x,alive\n" } else { "trajectory_id,t,x,y,alive\n" });
        for tr in &self.trajectories {
            for (k, &t) in self.times.iter().enumerate() {
                let [x, y] = tr.positions[k];
                let alive = u8::from(tr.alive_at(t));
                if self.dims == 1 {
                    out.push_str(&format!("{},{t},{x},{alive}\n", tr.id));
                } else {
                    out.push_str(&format!("{},{t},{x},{y},{alive}\n", tr.id));
                }
            }
        }
        out
    }
}

/// `count` i.i.d. draws from `|ψ|²`; trajectory `i` uses stream `i` of
/// `seed`, so the result does not depend on the thread count.
pub fn sample_equilibrium(psi: &WaveField, count: usize, seed: u64) -> Result<TrajectoryEnsemble> {
    if count == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let sampler = DensitySampler::new(psi)?;
    let trajectories = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = trajectory_rng(seed, i as u64);
            Trajectory { id: i, positions: vec![sampler.sample(&mut rng)], termination: None }
        })
        .collect();
    Ok(TrajectoryEnsemble { seed, dims: psi.grid().dims(), times: vec![0.0], trajectories })
}
