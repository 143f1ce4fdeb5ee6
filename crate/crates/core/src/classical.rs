//! Mass-scaling study: Bohmian trajectories against Newtonian ones started
//! from the same points, for a fixed preparation and growing mass.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bohmian::{
    integrate_trajectories, interpolate, quantum_potential, sample_equilibrium, sorted_order_inversions,
    trajectory_stops, velocity_field, IntegratorConfig, Trajectory, TrajectoryEnsemble,
};
use crate::error::{Error, Result};
use crate::grid::{gaussian_packet, make_grid, Grid, WaveField};
use crate::propagator::{regular_times, EvolutionPlan, Evolver, PotentialField, SnapshotEvent};

/// External potentials with analytic forces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExternalPotential {
    Constant(f64),
    /// `m ω² x² / 2`.
    Harmonic {
        omega: f64,
    },
}

impl ExternalPotential {
    pub fn value(&self, x: f64, mass: f64) -> f64 {
        match *self {
            Self::Constant(c) => c,
            Self::Harmonic { omega } => 0.5 * mass * omega * omega * x * x,
        }
    }

    pub fn force(&self, x: f64, mass: f64) -> f64 {
        match *self {
            Self::Constant(_) => 0.0,
            Self::Harmonic { omega } => -mass * omega * omega * x,
        }
    }

    pub fn field(&self, grid: &Grid, mass: f64) -> PotentialField {
        PotentialField::from_fn(grid, |x, _| self.value(x, mass))
    }
}

/// RK4 Newtonian trajectory `m ẍ = F(x)` from `(q0, v0)`, reported at each
/// of the ascending `times` (the first must be 0). Each interval is split
/// into equal steps no longer than `dt`.
pub fn classical_reference(
    q0: f64,
    v0: f64,
    mass: f64,
    potential: &ExternalPotential,
    times: &[f64],
    dt: f64,
) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !(mass > 0.0) {
        return Err(Error::OutOfRange("step and mass must be positive".into()));
    }
    if times.first() != Some(&0.0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::OutOfRange("times must ascend from 0".into()));
    }
    let acc = |x: f64| potential.force(x, mass) / mass;
    let (mut x, mut v) = (q0, v0);
    let mut out = vec![q0];
    for w in times.windows(2) {
        let span = w[1] - w[0];
        let n = (span / dt).ceil().max(1.0) as usize;
        let h = span / n as f64;
        for _ in 0..n {
            let (k1x, k1v) = (v, acc(x));
            let (k2x, k2v) = (v + 0.5 * h * k1v, acc(x + 0.5 * h * k1x));
            let (k3x, k3v) = (v + 0.5 * h * k2v, acc(x + 0.5 * h * k2x));
            let (k4x, k4v) = (v + h * k3v, acc(x + h * k3x));
            x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
        out.push(x);
    }
    Ok(out)
}

/// Preparations used for the sweep. Widths and offsets are fixed; only the
/// mass changes between rungs (the coherent state's width follows the mass).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LimitScenario {
    /// Free Gaussian at rest at the origin, one trajectory from `start`.
    FreeGaussian { sigma: f64, start: f64 },
    /// Displaced trap ground state, one trajectory from the packet centre.
    CoherentState { omega: f64, displacement: f64 },
    /// Two Gaussians at rest at `±separation/2`, an equilibrium ensemble.
    DoubleSlit { separation: f64, sigma: f64, trajectories: usize },
}

impl LimitScenario {
    pub fn name(&self) -> &'static str {
        match self {
            Self::FreeGaussian { .. } => "free-gaussian",
            Self::CoherentState { .. } => "coherent-state",
            Self::DoubleSlit { .. } => "double-slit",
        }
    }

    fn external(&self) -> ExternalPotential {
        match *self {
            Self::CoherentState { omega, .. } => ExternalPotential::Harmonic { omega },
            _ => ExternalPotential::Constant(0.0),
        }
    }

    fn initial_state(&self, grid: &Grid, mass: f64, hbar: f64) -> Result<WaveField> {
        match *self {
            Self::FreeGaussian { sigma, .. } => gaussian_packet(grid, 0.0, sigma, 0.0, mass, hbar),
            Self::CoherentState { omega, displacement } => {
                gaussian_packet(grid, displacement, (hbar / (2.0 * mass * omega)).sqrt(), 0.0, mass, hbar)
            }
            Self::DoubleSlit { separation, sigma, .. } => {
                let a = gaussian_packet(grid, 0.5 * separation, sigma, 0.0, mass, hbar)?;
                let b = gaussian_packet(grid, -0.5 * separation, sigma, 0.0, mass, hbar)?;
                a.combine(1.0.into(), &b, 1.0.into())?.normalize()
            }
        }
    }

    fn initial_ensemble(&self, psi: &WaveField, seed: u64) -> Result<TrajectoryEnsemble> {
        let single = |x: f64| TrajectoryEnsemble {
            seed,
            dims: 1,
            times: vec![0.0],
            trajectories: vec![Trajectory { id: 0, positions: vec![[x, 0.0]], termination: None }],
        };
        match *self {
            Self::FreeGaussian { start, .. } => Ok(single(start)),
            Self::CoherentState { displacement, .. } => Ok(single(displacement)),
            Self::DoubleSlit { trajectories, .. } => sample_equilibrium(psi, trajectories, seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    pub hbar: f64,
    pub duration: f64,
    pub dt: f64,
    /// Spacing of the wave-field snapshots that drive the trajectories.
    pub snapshot_every: f64,
    /// Spacing of the recorded positions used for the deviation metrics.
    pub record_every: f64,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            x_min: -256.0,
            x_max: 256.0,
            points: 2048,
            hbar: 1.0,
            duration: 40.0,
            dt: 0.01,
            snapshot_every: 0.01,
            record_every: 1.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mass: f64,
    /// `max |Q_bohm − Q_class|` over trajectories and record times.
    pub max_deviation: f64,
    /// `max |Q_pot|` sampled along the trajectories at record times.
    pub max_quantum_potential: f64,
    pub inversions: usize,
}

#[derive(Debug, Clone)]
pub struct LimitSweep {
    pub scenario: LimitScenario,
    pub rows: Vec<SweepRow>,
    pub ensembles: Vec<TrajectoryEnsemble>,
    /// Classical positions per rung, per trajectory, per record time.
    pub classical: Vec<Vec<Vec<f64>>>,
}

impl LimitSweep {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("mass,max_deviation,max_quantum_potential,inversions\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{}\n", r.mass, r.max_deviation, r.max_quantum_potential, r.inversions));
        }
        s
    }
}

fn run_rung(
    scenario: &LimitScenario,
    mass: f64,
    cfg: &SweepConfig,
) -> Result<(SweepRow, TrajectoryEnsemble, Vec<Vec<f64>>)> {
    let grid = make_grid(cfg.x_min, cfg.x_max, cfg.points, 1)?;
    let psi = scenario.initial_state(&grid, mass, cfg.hbar)?;
    let external = scenario.external();
    let potential = external.field(&grid, mass);
    let ens0 = scenario.initial_ensemble(&psi, cfg.seed)?;
    let plan = EvolutionPlan::free(cfg.duration, cfg.dt);
    let record = regular_times(cfg.duration, cfg.record_every);
    let stops = trajectory_stops(&plan, cfg.snapshot_every, &record);

    let mut q_fields: Vec<Vec<f64>> = Vec::with_capacity(record.len());
    let mut failure: Option<Error> = None;
    let tol = 1e-9 * cfg.duration.max(1.0);
    let mut next_record = 0;
    let evolver = Evolver::new(&psi, &plan, &potential, &stops)?.inspect(|s| {
        if s.event == SnapshotEvent::Stop && next_record < record.len() && (s.time - record[next_record]).abs() <= tol {
            next_record += 1;
            match quantum_potential(&s.field) {
                Ok(q) => q_fields.push(q.values().to_vec()),
                Err(e) => {
                    failure.get_or_insert(e);
                    q_fields.push(vec![0.0; s.field.grid().len()]);
                }
            }
        }
    });
    let ens = integrate_trajectories(&ens0, evolver, &plan, &potential, &record, &IntegratorConfig::default())?;
    if let Some(e) = failure {
        return Err(e);
    }

    let v0 = velocity_field(&psi)?;
    let mut classical = Vec::with_capacity(ens.len());
    let mut max_deviation = 0.0f64;
    let mut max_q = 0.0f64;
    for tr in &ens.trajectories {
        let q0 = tr.origin()[0];
        let start_v = interpolate(&grid, v0.component(0), [q0, 0.0])
            .ok_or_else(|| Error::OutOfRange(format!("start {q0} outside the grid")))?;
        let path = classical_reference(q0, start_v, mass, &external, &ens.times, cfg.dt)?;
        for (k, &t) in ens.times.iter().enumerate() {
            if !tr.alive_at(t) {
                continue;
            }
            let q = tr.positions[k][0];
            max_deviation = max_deviation.max((q - path[k]).abs());
            if let Some(v) = interpolate(&grid, &q_fields[k], [q, 0.0]) {
                max_q = max_q.max(v.abs());
            }
        }
        classical.push(path);
    }
    let row =
        SweepRow { mass, max_deviation, max_quantum_potential: max_q, inversions: sorted_order_inversions(&ens)? };
    Ok((row, ens, classical))
}

/// Runs every rung of the strictly increasing `masses` ladder in parallel
/// with a shared seed, so rungs start from the same positions whenever the
/// preparation's density does not depend on the mass.
pub fn deviation_sweep(scenario: &LimitScenario, masses: &[f64], cfg: &SweepConfig) -> Result<LimitSweep> {
    if masses.is_empty() {
        return Err(Error::OutOfRange("empty mass ladder".into()));
    }
    if masses[0] <= 0.0 || masses.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::OutOfRange("mass ladder must be positive and strictly increasing".into()));
    }
    let rungs: Vec<_> = masses.par_iter().map(|&m| run_rung(scenario, m, cfg)).collect::<Result<_>>()?;
    let mut sweep = LimitSweep { scenario: *scenario, rows: Vec::new(), ensembles: Vec::new(), classical: Vec::new() };
    for (row, ens, path) in rungs {
        sweep.rows.push(row);
        sweep.ensembles.push(ens);
        sweep.classical.push(path);
    }
    Ok(sweep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_line_without_force() {
        let times = [0.0, 0.5, 1.0, 3.7];
        for v in [ExternalPotential::Constant(0.0), ExternalPotential::Constant(4.2)] {
            let path = classical_reference(1.0, -0.3, 2.0, &v, &times, 0.1).unwrap();
            for (x, t) in path.iter().zip(times) {
                assert!((x - (1.0 - 0.3 * t)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn harmonic_oscillator() {
        let omega = 1.3;
        let times = regular_times(2.0 * std::f64::consts::PI, 0.25);
        let path = classical_reference(0.8, 0.4, 3.0, &ExternalPotential::Harmonic { omega }, &times, 0.005).unwrap();
        for (x, t) in path.iter().zip(&times) {
            let exact = 0.8 * (omega * t).cos() + 0.4 / omega * (omega * t).sin();
            assert!((x - exact).abs() < 1e-8, "{x} vs {exact}");
        }
    }

    #[test]
    fn rejects_bad_ladders() {
        let s = LimitScenario::FreeGaussian { sigma: 1.0, start: 1.0 };
        let cfg = SweepConfig::default();
        assert!(deviation_sweep(&s, &[], &cfg).is_err());
        assert!(deviation_sweep(&s, &[2.0, 1.0], &cfg).is_err());
        assert!(deviation_sweep(&s, &[0.0, 1.0], &cfg).is_err());
    }

    #[test]
    fn quantum_potential_scales_inversely_with_mass() {
        let g = make_grid(-10.0, 10.0, 256, 1).unwrap();
        let a = gaussian_packet(&g, 0.0, 1.0, 0.5, 1.0, 1.0).unwrap();
        let b = a.clone().with_mass(2.0);
        let qa = quantum_potential(&a).unwrap();
        let qb = quantum_potential(&b).unwrap();
        for (x, y) in qa.values().iter().zip(qb.values()) {
            if y.abs() > 1e-12 {
                assert!((x / y - 2.0).abs() < 1e-12);
            }
        }
    }
}
