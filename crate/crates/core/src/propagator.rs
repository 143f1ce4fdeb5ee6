//! Split-step spectral time evolution and thin optical elements.
//!
//! One step is the symmetric (Strang) product
//! `exp(-iV dt/2ħ) · exp(-iT dt/ħ) · exp(-iV dt/2ħ)` with the kinetic factor
//! applied diagonally in k-space. The potential may carry a non-positive
//! imaginary part that acts as an absorbing layer at the domain edges.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, WaveField};
use crate::spectral::Spectral;

/// Relative tolerance used when merging schedule times.
const TIME_EPS: f64 = 1e-9;

/// Default accuracy factor for [`stability_bound`].
pub const DEFAULT_STABILITY_FACTOR: f64 = 0.5;

/// Advisory accuracy bound `c·m·dx²/ħ` on the step. The scheme is
/// unconditionally stable; larger steps only lose accuracy when `V ≠ 0`.
pub fn stability_bound(grid: &Grid, mass: f64, hbar: f64, factor: f64) -> f64 {
    let dx = grid.axes().iter().map(|a| a.spacing()).fold(f64::INFINITY, f64::min);
    factor * mass * dx * dx / hbar
}

/// Grid-aligned potential `V = re − i·absorb` with `absorb ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    grid: Grid,
    real: Vec<f64>,
    absorb: Vec<f64>,
}

impl PotentialField {
    pub fn zero(grid: &Grid) -> Self {
        Self { grid: grid.clone(), real: vec![0.0; grid.len()], absorb: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let real = (0..grid.len())
            .map(|i| {
                let [x, y] = grid.coords(i);
                f(x, y)
            })
            .collect();
        Self { grid: grid.clone(), real, absorb: vec![0.0; grid.len()] }
    }

    pub fn new(grid: &Grid, real: Vec<f64>, absorb: Vec<f64>) -> Result<Self> {
        if real.len() != grid.len() || absorb.len() != grid.len() {
            return Err(Error::GridMismatch("potential arrays do not match the grid".into()));
        }
        if real.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutOfRange("potential must be finite".into()));
        }
        if absorb.iter().any(|&g| !(g >= 0.0 && g.is_finite())) {
            return Err(Error::OutOfRange("imaginary part of the potential must be non-positive".into()));
        }
        Ok(Self { grid: grid.clone(), real, absorb })
    }

    /// Harmonic well `m ω² r²/2` (summed over axes).
    pub fn harmonic(grid: &Grid, mass: f64, omega: f64) -> Self {
        Self::from_fn(grid, |x, y| 0.5 * mass * omega * omega * (x * x + y * y))
    }

    /// Adds a quadratic absorbing ramp `Γ(s) = strength·s²` over the outer
    /// `fraction` of every axis, where `s ∈ [0, 1]` is the penetration depth.
    pub fn with_absorber(mut self, strength: f64, fraction: f64) -> Self {
        let axes = self.grid.axes().to_vec();
        for i in 0..self.grid.len() {
            let c = self.grid.coords(i);
            let mut g = 0.0;
            for (d, a) in axes.iter().enumerate() {
                let width = fraction * a.extent();
                if width <= 0.0 {
                    continue;
                }
                let lo = a.min + width;
                let hi = a.max - width;
                let s = if c[d] < lo {
                    (lo - c[d]) / width
                } else if c[d] > hi {
                    (c[d] - hi) / width
                } else {
                    0.0
                };
                g += strength * s.min(1.0).powi(2);
            }
            self.absorb[i] += g;
        }
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn real(&self) -> &[f64] {
        &self.real
    }

    /// `Γ(x)`, so that `Im V = −Γ`.
    pub fn absorption(&self) -> &[f64] {
        &self.absorb
    }

    pub fn is_real(&self) -> bool {
        self.absorb.iter().all(|&g| g == 0.0)
    }
}

/// Kind of an instantaneous element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    AmplitudeMask,
    PhaseMask,
    Lens,
}

/// Instantaneous multiplicative element `ψ → t(x)·ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThinElement {
    pub kind: ElementKind,
    transmission: Vec<Complex64>,
}

impl ThinElement {
    /// Amplitude mask from a real transmission profile in `[0, 1]`.
    pub fn amplitude_mask(grid: &Grid, t: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut transmission = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let [x, y] = grid.coords(i);
            let v = t(x, y);
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfRange(format!("mask transmission {v} at x = {x}")));
            }
            transmission.push(Complex64::new(v, 0.0));
        }
        Ok(Self { kind: ElementKind::AmplitudeMask, transmission })
    }

    pub fn phase_mask(grid: &Grid, phase: impl Fn(f64, f64) -> f64) -> Self {
        let transmission = (0..grid.len())
            .map(|i| {
                let [x, y] = grid.coords(i);
                Complex64::from_polar(1.0, phase(x, y))
            })
            .collect();
        Self { kind: ElementKind::PhaseMask, transmission }
    }

    /// Paraxial thin lens `exp(−i k₀ x²/(2f))` acting on the first axis.
    pub fn lens(grid: &Grid, focal_length: f64, carrier_wavenumber: f64) -> Self {
        let transmission = (0..grid.len())
            .map(|i| {
                let x = grid.coords(i)[0];
                Complex64::from_polar(1.0, -carrier_wavenumber * x * x / (2.0 * focal_length))
            })
            .collect();
        Self { kind: ElementKind::Lens, transmission }
    }

    /// Opaque wires of full width `width` centred on `centers` (first axis).
    pub fn wire_grid(grid: &Grid, centers: &[f64], width: f64) -> Result<Self> {
        Self::amplitude_mask(grid, |x, _| if centers.iter().any(|c| (x - c).abs() <= 0.5 * width) { 0.0 } else { 1.0 })
    }

    pub fn from_transmission(kind: ElementKind, transmission: Vec<Complex64>) -> Result<Self> {
        if kind == ElementKind::AmplitudeMask && transmission.iter().any(|t| t.norm() > 1.0 + 1e-12) {
            return Err(Error::OutOfRange("amplitude mask with |t| > 1".into()));
        }
        Ok(Self { kind, transmission })
    }

    pub fn transmission(&self) -> &[Complex64] {
        &self.transmission
    }

    /// True where the element blocks (|t|² < 1/2). Used to censor trajectories.
    pub fn blocks(&self, idx: usize) -> bool {
        self.kind == ElementKind::AmplitudeMask && self.transmission[idx].norm_sqr() < 0.5
    }
}

/// Multiplies `ψ` pointwise by the element transmission.
pub fn apply_element(psi: &WaveField, element: &ThinElement) -> Result<WaveField> {
    if element.transmission.len() != psi.grid().len() {
        return Err(Error::GridMismatch("element does not match the field grid".into()));
    }
    let amps = psi.amplitudes().iter().zip(&element.transmission).map(|(a, t)| a * t).collect();
    psi.with_amplitudes(amps)
}

/// `1 − ‖after‖²/‖before‖²`.
pub fn absorbed_fraction(before: &WaveField, after: &WaveField) -> Result<f64> {
    before.grid().check_same(after.grid())?;
    let nb = before.norm_sqr();
    if !(nb > 0.0) {
        return Err(Error::DegenerateState("absorbed fraction of a zero field".into()));
    }
    Ok(1.0 - after.norm_sqr() / nb)
}

/// An element applied at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledElement {
    pub time: f64,
    pub element: ThinElement,
}

/// Free-flight segments separated by instantaneous elements.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionPlan {
    pub duration: f64,
    pub dt: f64,
    pub elements: Vec<ScheduledElement>,
}

impl EvolutionPlan {
    pub fn free(duration: f64, dt: f64) -> Self {
        Self { duration, dt, elements: Vec::new() }
    }

    pub fn with_element(mut self, time: f64, element: ThinElement) -> Self {
        self.elements.push(ScheduledElement { time, element });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidPlan(format!("duration {}", self.duration)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidPlan(format!("step {}", self.dt)));
        }
        let tol = TIME_EPS * self.duration.max(1.0);
        for w in self.elements.windows(2) {
            if w[1].time < w[0].time {
                return Err(Error::InvalidPlan("elements must be in time order".into()));
            }
        }
        for e in &self.elements {
            if e.time < -tol || e.time > self.duration + tol {
                return Err(Error::InvalidPlan(format!("element at t = {} outside [0, T]", e.time)));
            }
        }
        Ok(())
    }

    /// Boundaries of the free-flight segments, `0 = t₀ < ... < T`.
    pub fn segments(&self) -> Vec<(f64, f64)> {
        let mut cuts = vec![0.0];
        for e in &self.elements {
            if e.time > *cuts.last().unwrap() {
                cuts.push(e.time);
            }
        }
        if self.duration > *cuts.last().unwrap() {
            cuts.push(self.duration);
        }
        cuts.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// Strang split-step integrator for a fixed grid, mass and potential.
#[derive(Debug, Clone)]
pub struct SplitStepper {
    spectral: Spectral,
    mass: f64,
    hbar: f64,
    potential: PotentialField,
    dt: f64,
    half_potential: Vec<Complex64>,
    kinetic: Vec<Complex64>,
}

impl SplitStepper {
    pub fn new(grid: &Grid, mass: f64, hbar: f64, potential: &PotentialField, dt: f64) -> Result<Self> {
        grid.check_same(potential.grid())?;
        if !(dt > 0.0) {
            return Err(Error::InvalidPlan(format!("step {dt} must be positive")));
        }
        let spectral = Spectral::new(grid);
        let mut s = Self {
            spectral,
            mass,
            hbar,
            potential: potential.clone(),
            dt,
            half_potential: Vec::new(),
            kinetic: Vec::new(),
        };
        let (h, k) = s.factors(dt);
        s.half_potential = h;
        s.kinetic = k;
        Ok(s)
    }

    pub fn for_field(psi: &WaveField, potential: &PotentialField, dt: f64) -> Result<Self> {
        Self::new(psi.grid(), psi.mass, psi.hbar, potential, dt)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    fn factors(&self, h: f64) -> (Vec<Complex64>, Vec<Complex64>) {
        let half = self
            .potential
            .real
            .iter()
            .zip(&self.potential.absorb)
            .map(|(&v, &g)| {
                let arg = -v * h / (2.0 * self.hbar);
                Complex64::from_polar((-g * h / (2.0 * self.hbar)).exp(), arg)
            })
            .collect();
        let mut kinetic = vec![Complex64::new(0.0, 0.0); self.spectral.grid().len()];
        let c = self.hbar * h / (2.0 * self.mass);
        self.spectral.for_each_k(|idx, k| {
            kinetic[idx] = Complex64::from_polar(1.0, -c * (k[0] * k[0] + k[1] * k[1]));
        });
        (half, kinetic)
    }

    fn step_with(&self, amps: &mut [Complex64], half: &[Complex64], kinetic: &[Complex64]) {
        for (a, p) in amps.iter_mut().zip(half) {
            *a *= p;
        }
        self.spectral.forward_raw(amps);
        for (a, k) in amps.iter_mut().zip(kinetic) {
            *a *= k;
        }
        self.spectral.inverse_normalized(amps);
        for (a, p) in amps.iter_mut().zip(half) {
            *a *= p;
        }
    }

    /// One step of the configured size.
    pub fn step_in_place(&self, amps: &mut [Complex64]) {
        self.step_with(amps, &self.half_potential, &self.kinetic);
    }

    /// One step of arbitrary size `h`.
    pub fn step_by(&self, amps: &mut [Complex64], h: f64) {
        if h == self.dt {
            self.step_in_place(amps);
        } else {
            let (half, kinetic) = self.factors(h);
            self.step_with(amps, &half, &kinetic);
        }
    }

    /// Advances by `duration` with whole steps plus one remainder step.
    pub fn advance(&self, amps: &mut [Complex64], duration: f64) {
        if duration <= 0.0 {
            return;
        }
        let whole = (duration / self.dt + TIME_EPS).floor();
        for _ in 0..whole as usize {
            self.step_in_place(amps);
        }
        let rem = duration - whole * self.dt;
        if rem > TIME_EPS * self.dt {
            self.step_by(amps, rem);
        }
    }
}

/// Advances `psi` by one Strang step of size `dt`.
pub fn step(psi: &WaveField, potential: &PotentialField, dt: f64) -> Result<WaveField> {
    let stepper = SplitStepper::for_field(psi, potential, dt)?;
    let mut out = psi.clone();
    stepper.step_in_place(out.amplitudes_mut());
    Ok(out)
}

/// What happened at a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotEvent {
    /// Free-flight state at a stop time (before any element scheduled there).
    Stop,
    /// State right after applying element `i` of the plan.
    AfterElement(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub event: SnapshotEvent,
    pub field: WaveField,
}

/// Merges observation times with element times into sorted stop times.
fn stop_times(plan: &EvolutionPlan, observe: &[f64]) -> Vec<f64> {
    let tol = TIME_EPS * plan.duration.max(1.0);
    let mut times: Vec<f64> = std::iter::once(0.0)
        .chain(observe.iter().copied().filter(|&t| t >= -tol && t <= plan.duration + tol))
        .chain(plan.elements.iter().map(|e| e.time))
        .map(|t| t.clamp(0.0, plan.duration))
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= tol);
    times
}

/// Lazily yields snapshots at every stop time and after every element.
pub struct Evolver {
    stepper: SplitStepper,
    plan: EvolutionPlan,
    stops: Vec<f64>,
    next_stop: usize,
    next_element: usize,
    time: f64,
    psi: WaveField,
    pending_elements: Vec<usize>,
}

impl Evolver {
    pub fn new(psi: &WaveField, plan: &EvolutionPlan, potential: &PotentialField, stops: &[f64]) -> Result<Self> {
        plan.validate()?;
        let stepper = SplitStepper::for_field(psi, potential, plan.dt)?;
        for e in &plan.elements {
            if e.element.transmission.len() != psi.grid().len() {
                return Err(Error::GridMismatch("element does not match the field grid".into()));
            }
        }
        Ok(Self {
            stepper,
            plan: plan.clone(),
            stops: stop_times(plan, stops),
            next_stop: 0,
            next_element: 0,
            time: 0.0,
            psi: psi.clone(),
            pending_elements: Vec::new(),
        })
    }

    /// Stops every `every` time units (plus element times and `T`).
    pub fn every(psi: &WaveField, plan: &EvolutionPlan, potential: &PotentialField, every: f64) -> Result<Self> {
        Self::new(psi, plan, potential, &regular_times(plan.duration, every))
    }

    pub fn stop_times(&self) -> &[f64] {
        &self.stops
    }
}

/// `0, every, 2·every, ...` up to and including `duration`.
pub fn regular_times(duration: f64, every: f64) -> Vec<f64> {
    if !(every > 0.0) || duration <= 0.0 {
        return vec![0.0, duration.max(0.0)];
    }
    let n = (duration / every + TIME_EPS).floor() as usize;
    let mut t: Vec<f64> = (0..=n).map(|k| k as f64 * every).collect();
    if duration - t[n] > TIME_EPS * every {
        t.push(duration);
    }
    t
}

impl Iterator for Evolver {
    type Item = Snapshot;

    fn next(&mut self) -> Option<Snapshot> {
        if let Some(idx) = self.pending_elements.first().copied() {
            self.pending_elements.remove(0);
            self.psi = apply_element(&self.psi, &self.plan.elements[idx].element).expect("checked grid");
            return Some(Snapshot {
                time: self.time,
                event: SnapshotEvent::AfterElement(idx),
                field: self.psi.clone(),
            });
        }
        let target = *self.stops.get(self.next_stop)?;
        self.next_stop += 1;
        self.stepper.advance(self.psi.amplitudes_mut(), target - self.time);
        self.time = target;
        let tol = TIME_EPS * self.plan.duration.max(1.0);
        while self.next_element < self.plan.elements.len()
            && (self.plan.elements[self.next_element].time - target).abs() <= tol
        {
            self.pending_elements.push(self.next_element);
            self.next_element += 1;
        }
        Some(Snapshot { time: target, event: SnapshotEvent::Stop, field: self.psi.clone() })
    }
}

/// Runs a plan and returns the field at each requested time. When an element
/// sits at an observed time the post-element state is reported. The initial
/// state is always the first snapshot.
pub fn evolve(
    psi: &WaveField,
    plan: &EvolutionPlan,
    potential: &PotentialField,
    observe: &[f64],
) -> Result<Vec<Snapshot>> {
    let tol = TIME_EPS * plan.duration.max(1.0);
    let mut wanted = stop_times(plan, observe);
    wanted.retain(|&t| t == 0.0 || observe.iter().any(|&o| (o - t).abs() <= tol));
    let mut out: Vec<Snapshot> = Vec::with_capacity(wanted.len());
    for snap in Evolver::new(psi, plan, potential, observe)? {
        if !wanted.iter().any(|&t| (t - snap.time).abs() <= tol) {
            continue;
        }
        match out.last_mut() {
            Some(last) if (last.time - snap.time).abs() <= tol => *last = snap,
            _ => out.push(snap),
        }
    }
    Ok(out)
}

/// Final state of a plan.
pub fn evolve_to_end(psi: &WaveField, plan: &EvolutionPlan, potential: &PotentialField) -> Result<WaveField> {
    let snaps = evolve(psi, plan, potential, &[plan.duration])?;
    Ok(snaps.into_iter().last().expect("at least one snapshot").field)
}
