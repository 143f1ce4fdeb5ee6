//! GRW spontaneous collapse: Poisson-timed Gaussian localization jumps on
//! top of Schrödinger evolution.
//!
//! Each grid axis is one particle coordinate, so a 1D grid carries one
//! particle and a 2D grid two particles on a line. The reduction operator
//! therefore uses the one-dimensional prefactor `(α/π)^{1/4}`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::bohmian::{trajectory_rng, CellCdf};
use crate::error::{Error, Result};
use crate::grid::{Axis, WaveField};
use crate::propagator::{regular_times, PotentialField, SplitStepper};
use crate::spectral::forward;

/// Collapse rate per particle, `1e-16 s⁻¹`.
pub const STANDARD_RATE_PER_SECOND: f64 = 1e-16;
/// Localization parameter, `1e10 cm⁻²` (collapse width `1e-5 cm`).
pub const STANDARD_LOCALIZATION_PER_CM2: f64 = 1e10;

/// Kernel cutoff in collapse widths for the jump density.
pub const KERNEL_CUTOFF: f64 = 8.0;

/// Simulation units expressed in physical ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalUnits {
    /// Simulation length unit in centimetres.
    pub length_cm: f64,
    /// Simulation time unit in seconds.
    pub time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrwParams {
    /// Jump frequency per particle (1/time).
    pub rate: f64,
    /// Localization parameter α (1/length²).
    pub localization: f64,
}

impl GrwParams {
    /// A zero rate is accepted and switches collapses off.
    pub fn new(rate: f64, localization: f64) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::OutOfRange(format!("rate {rate} must be non-negative")));
        }
        if !(localization > 0.0 && localization.is_finite()) {
            return Err(Error::OutOfRange(format!("localization {localization} must be positive")));
        }
        Ok(Self { rate, localization })
    }

    /// Physical rate and localization rescaled to the given units.
    pub fn from_physical(rate_per_second: f64, localization_per_cm2: f64, units: PhysicalUnits) -> Result<Self> {
        if !(units.length_cm > 0.0 && units.time_s > 0.0) {
            return Err(Error::OutOfRange("unit scales must be positive".into()));
        }
        Self::new(rate_per_second * units.time_s, localization_per_cm2 * units.length_cm * units.length_cm)
    }

    pub fn standard(units: PhysicalUnits) -> Result<Self> {
        Self::from_physical(STANDARD_RATE_PER_SECOND, STANDARD_LOCALIZATION_PER_CM2, units)
    }

    /// `r_C = 1/√α`.
    pub fn collapse_width(&self) -> f64 {
        1.0 / self.localization.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub particle: usize,
    pub center: f64,
    /// `||L_n(x)ψ||` before renormalization.
    pub norm_factor: f64,
}

/// Mass density of one particle: `m_n` times its marginal of `|Ψ|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassDensityField {
    pub mass: f64,
    pub axis: Axis,
    pub values: Vec<f64>,
}

impl MassDensityField {
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.axis.spacing()
    }
}

fn check_particle(psi: &WaveField, particle: usize) -> Result<()> {
    if particle >= psi.grid().dims() {
        return Err(Error::OutOfRange(format!("particle {particle} on a {}-particle grid", psi.grid().dims())));
    }
    Ok(())
}

/// Multiplies by `(α/π)^{1/4} exp(−α(q_n − x)²/2)` and renormalizes.
/// Returns the collapsed field and the norm before renormalization.
pub fn reduction_operator(psi: &WaveField, particle: usize, center: f64, alpha: f64) -> Result<(WaveField, f64)> {
    check_particle(psi, particle)?;
    if !(alpha > 0.0) {
        return Err(Error::OutOfRange(format!("localization {alpha} must be positive")));
    }
    let pre = (alpha / PI).powf(0.25);
    let grid = psi.grid();
    let mut out = psi.clone();
    for (i, a) in out.amplitudes_mut().iter_mut().enumerate() {
        let q = grid.coords(i)[particle];
        *a *= pre * (-0.5 * alpha * (q - center).powi(2)).exp();
    }
    let factor = out.norm();
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(Error::DegenerateCollapse { center });
    }
    out.scale((1.0 / factor).into());
    Ok((out, factor))
}

/// Marginal `|Ψ|²` of one particle coordinate.
fn marginal(psi: &WaveField, particle: usize) -> Vec<f64> {
    let grid = psi.grid();
    let density = psi.density();
    match grid.dims() {
        1 => density,
        _ => {
            let (nx, ny) = (grid.axis(0).n, grid.axis(1).n);
            if particle == 0 {
                let dy = grid.axis(1).spacing();
                density.chunks_exact(ny).map(|r| r.iter().sum::<f64>() * dy).collect()
            } else {
                let dx = grid.axis(0).spacing();
                (0..ny).map(|j| (0..nx).map(|i| density[i * ny + j]).sum::<f64>() * dx).collect()
            }
        }
    }
}

/// `p_n(x) = ||L_n(x)ψ||²` at the grid points of the particle's axis.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpDensity {
    pub particle: usize,
    pub axis: Axis,
    pub values: Vec<f64>,
}

impl JumpDensity {
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.axis.spacing()
    }

    /// Mass of `p` on `x > 0` (a grid point at 0 counts half).
    pub fn positive_mass(&self) -> f64 {
        let dx = self.axis.spacing();
        (0..self.axis.n)
            .map(|j| {
                let x = self.axis.point(j);
                if x > 0.0 {
                    self.values[j]
                } else if x == 0.0 {
                    0.5 * self.values[j]
                } else {
                    0.0
                }
            })
            .sum::<f64>()
            * dx
    }
}

/// Jump-centre density by direct convolution of the particle marginal with
/// `(α/π)^{1/2} exp(−α(q−x)²)`, truncated at [`KERNEL_CUTOFF`] widths.
pub fn jump_density(psi: &WaveField, particle: usize, alpha: f64) -> Result<JumpDensity> {
    check_particle(psi, particle)?;
    if !(alpha > 0.0) {
        return Err(Error::OutOfRange(format!("localization {alpha} must be positive")));
    }
    let axis = *psi.grid().axis(particle);
    let dx = axis.spacing();
    let rho = marginal(psi, particle);
    let reach = ((KERNEL_CUTOFF / alpha.sqrt()) / dx).ceil() as usize;
    let kernel: Vec<f64> =
        (0..=reach).map(|s| (alpha / PI).sqrt() * (-alpha * (s as f64 * dx).powi(2)).exp()).collect();
    let n = axis.n;
    let values = (0..n)
        .map(|j| {
            let lo = j.saturating_sub(reach);
            let hi = (j + reach).min(n - 1);
            (lo..=hi).map(|q| kernel[q.abs_diff(j)] * rho[q]).sum::<f64>() * dx
        })
        .collect();
    Ok(JumpDensity { particle, axis, values })
}

/// `Γ = λ n² N`.
pub fn amplification_rate(rate: f64, per_volume: u64, volumes: u64) -> Result<f64> {
    if per_volume < 1 || volumes < 1 {
        return Err(Error::OutOfRange("particle counts must be at least 1".into()));
    }
    Ok(rate * (per_volume as f64).powi(2) * volumes as f64)
}

/// One mass density per particle coordinate of `psi`.
pub fn mass_density(psi: &WaveField, masses: &[f64]) -> Result<Vec<MassDensityField>> {
    let dims = psi.grid().dims();
    if masses.len() != dims {
        return Err(Error::Unsupported(format!("{} masses for a {dims}-particle field", masses.len())));
    }
    Ok(masses
        .iter()
        .enumerate()
        .map(|(n, &m)| MassDensityField {
            mass: m,
            axis: *psi.grid().axis(n),
            values: marginal(psi, n).into_iter().map(|r| m * r).collect(),
        })
        .collect())
}

/// `⟨ψ|T̂ + V|ψ⟩ / ⟨ψ|ψ⟩` with the kinetic part evaluated spectrally. The
/// absorbing part of the potential is ignored.
pub fn expected_energy(psi: &WaveField, potential: &PotentialField) -> Result<f64> {
    psi.grid().check_same(potential.grid())?;
    let norm2 = psi.norm_sqr();
    if !(norm2 > 0.0) {
        return Err(Error::DegenerateState("zero norm".into()));
    }
    let phi = forward(psi);
    let k_grid = phi.k_grid();
    let dk = k_grid.cell_volume();
    let c = psi.hbar * psi.hbar / (2.0 * psi.mass);
    let kinetic: f64 = phi
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let [kx, ky] = k_grid.coords(i);
            c * (kx * kx + ky * ky) * v.norm_sqr()
        })
        .sum::<f64>()
        * dk;
    let potential_term: f64 =
        psi.density().iter().zip(potential.real()).map(|(r, v)| r * v).sum::<f64>() * psi.grid().cell_volume();
    Ok((kinetic + potential_term) / norm2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrwOptions {
    pub dt: f64,
    /// Spacing of the energy and snapshot schedule; `None` records only the
    /// start and end.
    pub snapshot_every: Option<f64>,
    /// Keep the wave field at every scheduled time.
    pub keep_fields: bool,
    /// Stop the run right after this many jumps.
    pub max_jumps: Option<usize>,
}

impl Default for GrwOptions {
    fn default() -> Self {
        Self { dt: 0.01, snapshot_every: None, keep_fields: false, max_jumps: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub time: f64,
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct GrwRun {
    pub params: GrwParams,
    pub seed: u64,
    pub jumps: Vec<JumpEvent>,
    pub schedule: Vec<f64>,
    pub energies: Vec<EnergySample>,
    pub snapshots: Vec<(f64, WaveField)>,
    /// Time the run ended (earlier than the duration when `max_jumps` hit).
    pub end_time: f64,
    pub final_field: WaveField,
}

impl GrwRun {
    pub fn jumps_to_csv(&self) -> String {
        let mut s = String::from("t,n,x,norm_factor\n");
        for j in &self.jumps {
            writeln!(s, "{},{},{},{}", j.time, j.particle, j.center, j.norm_factor).unwrap();
        }
        s
    }

    pub fn energy_to_csv(&self) -> String {
        let mut s = String::from("t,energy\n");
        for e in &self.energies {
            writeln!(s, "{},{}", e.time, e.energy).unwrap();
        }
        s
    }
}

/// The `⟨E⟩(t)` table recorded on the run's schedule.
pub fn energy_series(run: &GrwRun) -> &[EnergySample] {
    &run.energies
}

/// Draws one jump: particle uniformly, centre by inverse CDF of `p_n`.
pub fn collapse_once<R: Rng>(
    psi: &WaveField,
    params: &GrwParams,
    time: f64,
    rng: &mut R,
) -> Result<(WaveField, JumpEvent)> {
    let particle = rng.random_range(0..psi.grid().dims());
    let p = jump_density(psi, particle, params.localization)?;
    let center = CellCdf::new(p.axis, &p.values)?.inverse(rng.random::<f64>());
    let (field, norm_factor) = reduction_operator(psi, particle, center, params.localization)?;
    Ok((field, JumpEvent { time, particle, center, norm_factor }))
}

/// Schrödinger evolution under `potential` interrupted by GRW jumps with
/// total rate `N·λ`. Between events the field is advanced with the same
/// split-step routine as the propagator, so a zero rate reproduces
/// `propagator::evolve` on the same schedule bit for bit.
pub fn simulate(
    psi0: &WaveField,
    params: &GrwParams,
    duration: f64,
    potential: &PotentialField,
    seed: u64,
    opts: &GrwOptions,
) -> Result<GrwRun> {
    if !(duration >= 0.0) {
        return Err(Error::InvalidPlan(format!("duration {duration} must be non-negative")));
    }
    let stepper = SplitStepper::for_field(psi0, potential, opts.dt)?;
    let schedule = match opts.snapshot_every {
        Some(every) => regular_times(duration, every),
        None if duration > 0.0 => vec![0.0, duration],
        None => vec![0.0],
    };
    let mut rng = trajectory_rng(seed, 0);
    let total_rate = params.rate * psi0.grid().dims() as f64;
    let waiting =
        if total_rate > 0.0 { Some(Exp::new(total_rate).map_err(|e| Error::OutOfRange(e.to_string()))?) } else { None };
    let mut next_jump = waiting.as_ref().map_or(f64::INFINITY, |w| w.sample(&mut rng));

    let mut psi = psi0.clone();
    let mut time = 0.0;
    let mut jumps = Vec::new();
    let mut energies = Vec::with_capacity(schedule.len());
    let mut snapshots = Vec::new();
    let limit = opts.max_jumps.unwrap_or(usize::MAX);

    'outer: for &target in &schedule {
        while next_jump < target {
            stepper.advance(psi.amplitudes_mut(), next_jump - time);
            time = next_jump;
            let (collapsed, event) = collapse_once(&psi, params, time, &mut rng)?;
            psi = collapsed;
            jumps.push(event);
            if jumps.len() >= limit {
                break 'outer;
            }
            next_jump = time + waiting.as_ref().expect("jumps imply a positive rate").sample(&mut rng);
        }
        stepper.advance(psi.amplitudes_mut(), target - time);
        time = target;
        energies.push(EnergySample { time, energy: expected_energy(&psi, potential)? });
        if opts.keep_fields {
            snapshots.push((time, psi.clone()));
        }
    }

    Ok(GrwRun { params: *params, seed, jumps, schedule, energies, snapshots, end_time: time, final_field: psi })
}
