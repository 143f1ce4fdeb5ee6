//! Afshar-type interferometer: two Gaussian pinholes, an optional wire grid
//! at the dark fringes, a thin lens, and image-plane read-out.
//!
//! Propagation along the optical axis is rendered as time: a plane at
//! distance `z` is reached at `t = z·m/(ħk₀)`. The transverse coordinate is
//! the first grid axis. The lens images the pinhole plane at `t_img` when
//! `1/t_L + 1/(t_img − t_L) = 1/t_f` with focal length `f = ħk₀t_f/m`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::bohmian::{
    band_transitions, equivariance_check, fringe_occupancy, integrate_trajectories, ks_critical_value,
    positive_fraction, sample_equilibrium, sorted_order_inversions, trajectory_stops, IntegratorConfig,
    TrajectoryEnsemble,
};
use crate::error::{Error, Result};
use crate::grid::{gaussian_packet, make_grid, Grid, WaveField};
use crate::propagator::{evolve, EvolutionPlan, Evolver, PotentialField, Snapshot, SnapshotEvent, ThinElement};

/// Which pinholes are open. The first sits at `+d/2`, the second at `−d/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OpenSlits {
    First,
    Second,
    Both,
}

impl FromStr for OpenSlits {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" | "first" => Ok(Self::First),
            "2" | "second" => Ok(Self::Second),
            "both" => Ok(Self::Both),
            other => Err(Error::InvalidGeometry(format!("open_slits must be 1, 2 or both, got {other:?}"))),
        }
    }
}

/// Image half-line: `C₁` is `x < 0`, `C₂` is `x > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Lobe {
    C1,
    C2,
}

impl Lobe {
    pub fn of(x: f64) -> Self {
        if x < 0.0 {
            Lobe::C1
        } else {
            Lobe::C2
        }
    }

    pub fn index(self) -> usize {
        match self {
            Lobe::C1 => 0,
            Lobe::C2 => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stage {
    /// No wire grid.
    I,
    /// Wire grid, first pinhole only.
    II,
    /// Wire grid, both pinholes.
    III,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::I, Stage::II, Stage::III];
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::I => "i",
            Stage::II => "ii",
            Stage::III => "iii",
        })
    }
}

impl FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "i" | "1" => Ok(Stage::I),
            "ii" | "2" => Ok(Stage::II),
            "iii" | "3" => Ok(Stage::III),
            other => Err(Error::InvalidGeometry(format!("unknown stage {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AfsharConfig {
    pub pinhole_separation: f64,
    /// Density standard deviation of each pinhole Gaussian.
    pub pinhole_width: f64,
    pub carrier_wavenumber: f64,
    pub grid_time: f64,
    pub lens_time: f64,
    pub image_time: f64,
    pub focal_length: f64,
    pub wire_count: usize,
    pub wire_width: f64,
    pub open_slits: OpenSlits,
    pub grid_present: bool,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    pub mass: f64,
    pub hbar: f64,
    pub dt: f64,
    pub absorber_strength: f64,
    pub absorber_fraction: f64,
}

impl Default for AfsharConfig {
    /// The canonical desk-scale scenario.
    fn default() -> Self {
        let (d, t_wg, hbar, mass) = (10.0, 40.0, 1.0, 1.0);
        let (k0, t_l, t_img) = (10.0, 60.0, 120.0);
        let spacing = 2.0 * std::f64::consts::PI * hbar * t_wg / (mass * d);
        Self {
            pinhole_separation: d,
            pinhole_width: 1.0,
            carrier_wavenumber: k0,
            grid_time: t_wg,
            lens_time: t_l,
            image_time: t_img,
            focal_length: imaging_focal_length(k0, t_l, t_img, mass, hbar),
            wire_count: 6,
            wire_width: 0.1 * spacing,
            open_slits: OpenSlits::Both,
            grid_present: true,
            x_min: -250.0,
            x_max: 250.0,
            points: 4096,
            mass,
            hbar,
            dt: 0.05,
            absorber_strength: 1.0,
            absorber_fraction: 0.1,
        }
    }
}

/// Focal length that images the pinhole plane onto the `t_img` plane.
pub fn imaging_focal_length(carrier_wavenumber: f64, lens_time: f64, image_time: f64, mass: f64, hbar: f64) -> f64 {
    let t_f = 1.0 / (1.0 / lens_time + 1.0 / (image_time - lens_time));
    hbar * carrier_wavenumber * t_f / mass
}

impl AfsharConfig {
    /// `2πħ·t_WG/(m·d)`.
    pub fn fringe_spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.hbar * self.grid_time / (self.mass * self.pinhole_separation)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidGeometry(m));
        let positive = [
            ("pinhole_separation", self.pinhole_separation),
            ("pinhole_width", self.pinhole_width),
            ("carrier_wavenumber", self.carrier_wavenumber),
            ("grid_time", self.grid_time),
            ("focal_length", self.focal_length),
            ("mass", self.mass),
            ("hbar", self.hbar),
            ("dt", self.dt),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.grid_time < self.lens_time && self.lens_time < self.image_time) {
            return bad(format!(
                "need grid_time < lens_time < image_time, got {} / {} / {}",
                self.grid_time, self.lens_time, self.image_time
            ));
        }
        if self.pinhole_separation < 4.0 * self.pinhole_width {
            return bad(format!(
                "pinhole_separation {} must be at least 4 × pinhole_width {}",
                self.pinhole_separation, self.pinhole_width
            ));
        }
        let spacing = self.fringe_spacing();
        if !(self.wire_width > 0.0 && self.wire_width < spacing) {
            return bad(format!("wire_width {} must lie in (0, fringe spacing {spacing})", self.wire_width));
        }
        if self.wire_count == 0 {
            return bad("wire_count must be at least 1".into());
        }
        if self.absorber_strength < 0.0 || !(0.0..0.5).contains(&self.absorber_fraction) {
            return bad("absorber_strength ≥ 0 and absorber_fraction ∈ [0, 0.5) required".into());
        }
        make_grid(self.x_min, self.x_max, self.points, 1)?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        make_grid(self.x_min, self.x_max, self.points, 1)
    }

    pub fn potential(&self, grid: &Grid) -> PotentialField {
        let v = PotentialField::zero(grid);
        if self.absorber_strength > 0.0 && self.absorber_fraction > 0.0 {
            v.with_absorber(self.absorber_strength, self.absorber_fraction)
        } else {
            v
        }
    }

    /// The same configuration reflected through `x = 0`.
    pub fn mirrored(&self) -> Self {
        let mut c = self.clone();
        c.open_slits = match self.open_slits {
            OpenSlits::First => OpenSlits::Second,
            OpenSlits::Second => OpenSlits::First,
            OpenSlits::Both => OpenSlits::Both,
        };
        c
    }

    fn for_stage(&self, stage: Stage) -> Self {
        let mut c = self.clone();
        match stage {
            Stage::I => c.grid_present = false,
            Stage::II => {
                c.grid_present = true;
                c.open_slits = OpenSlits::First;
            }
            Stage::III => {
                c.grid_present = true;
                c.open_slits = OpenSlits::Both;
            }
        }
        c
    }
}

/// Single pinhole beam (`+d/2` for `first`), normalized.
pub fn pinhole_beam(cfg: &AfsharConfig, first: bool) -> Result<WaveField> {
    let grid = cfg.grid()?;
    let x0 = if first { 0.5 } else { -0.5 } * cfg.pinhole_separation;
    gaussian_packet(&grid, x0, cfg.pinhole_width, 0.0, cfg.mass, cfg.hbar)
}

/// Normalized sum of the open pinhole beams with equal amplitudes.
pub fn build_initial_state(cfg: &AfsharConfig) -> Result<WaveField> {
    cfg.validate()?;
    match cfg.open_slits {
        OpenSlits::First => pinhole_beam(cfg, true),
        OpenSlits::Second => pinhole_beam(cfg, false),
        OpenSlits::Both => {
            let one = Complex64::new(1.0, 0.0);
            pinhole_beam(cfg, true)?.combine(one, &pinhole_beam(cfg, false)?, one)?.normalize()
        }
    }
}

/// Relative depth a local density minimum must reach, compared with the
/// lower of its two neighbouring maxima, to count as a dark fringe.
pub const DARK_FRINGE_CONTRAST: f64 = 0.75;

/// Density, relative to the peak, that bounds the searched envelope.
pub const ENVELOPE_FRACTION: f64 = 1e-3;

/// Dark-fringe positions, ascending, within the envelope where the density
/// is at least [`ENVELOPE_FRACTION`] of its peak. Positions are refined by
/// a parabola through the three grid points around each minimum.
pub fn fringe_minima(psi: &WaveField) -> Result<Vec<f64>> {
    if psi.grid().dims() != 1 {
        return Err(Error::Unsupported("fringe minima need a 1D field".into()));
    }
    let d = psi.density();
    let axis = psi.grid().axis(0);
    let peak = d.iter().fold(0.0f64, |m, &v| m.max(v));
    if !(peak > 0.0) {
        return Err(Error::DegenerateState("field vanishes everywhere".into()));
    }
    let lo = d.iter().position(|&v| v >= ENVELOPE_FRACTION * peak).expect("peak exists");
    let hi = d.iter().rposition(|&v| v >= ENVELOPE_FRACTION * peak).expect("peak exists");
    let is_min = |j: usize| d[j] < d[j - 1] && d[j] <= d[j + 1];
    let is_max = |j: usize| d[j] > d[j - 1] && d[j] >= d[j + 1];
    let maxima: Vec<usize> = (lo.max(1)..hi.min(d.len() - 2) + 1).filter(|&j| is_max(j)).collect();
    let mut out = Vec::new();
    for j in (lo.max(1)..hi.min(d.len() - 2) + 1).filter(|&j| is_min(j)) {
        let right = maxima.partition_point(|&m| m < j);
        let (Some(&l), Some(&r)) = (right.checked_sub(1).and_then(|i| maxima.get(i)), maxima.get(right)) else {
            continue;
        };
        if d[j] > DARK_FRINGE_CONTRAST * d[l].min(d[r]) {
            continue;
        }
        let (a, b, c) = (d[j - 1], d[j], d[j + 1]);
        let curvature = a - 2.0 * b + c;
        let shift = if curvature > 0.0 { 0.5 * (a - c) / curvature } else { 0.0 };
        out.push(axis.point(j) + shift * axis.spacing());
    }
    if out.is_empty() {
        return Err(Error::NoFringes);
    }
    Ok(out)
}

/// The `count` minima nearest to `x = 0`, ascending.
pub fn central_minima(minima: &[f64], count: usize) -> Result<Vec<f64>> {
    if minima.len() < count {
        return Err(Error::InvalidGeometry(format!("{count} wires requested, {} dark fringes found", minima.len())));
    }
    let mut by_distance = minima.to_vec();
    by_distance.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
    let mut chosen: Vec<f64> = by_distance.into_iter().take(count).collect();
    chosen.sort_by(f64::total_cmp);
    Ok(chosen)
}

/// Two-pinhole field at the wire plane.
pub fn field_at_wire_plane(cfg: &AfsharConfig) -> Result<WaveField> {
    let mut both = cfg.clone();
    both.open_slits = OpenSlits::Both;
    let psi = build_initial_state(&both)?;
    let grid = psi.grid().clone();
    let plan = EvolutionPlan::free(cfg.grid_time, cfg.dt);
    Ok(evolve(&psi, &plan, &cfg.potential(&grid), &[cfg.grid_time])?.pop().expect("final snapshot").field)
}

/// Wire centres: the `wire_count` dark fringes of the two-pinhole field
/// nearest to the axis at the wire plane.
pub fn wire_centers(cfg: &AfsharConfig) -> Result<Vec<f64>> {
    central_minima(&fringe_minima(&field_at_wire_plane(cfg)?)?, cfg.wire_count)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryOptions {
    pub count: usize,
    pub seed: u64,
    pub snapshot_every: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageResult {
    pub stage: Stage,
    pub open_slits: OpenSlits,
    pub grid_present: bool,
    pub wire_centers: Vec<f64>,
    pub interception: f64,
    pub boundary_loss: f64,
    /// Integrated image intensity over `C₁` and `C₂`.
    pub fluxes: [f64; 2],
    pub peaks: [f64; 2],
    /// Image lobe reached by each pinhole alone (first, second).
    pub slit_lobes: [Lobe; 2],
    pub image_x: Vec<f64>,
    pub image: Vec<f64>,
    /// Fields at the start, after the wire plane, after the lens and at the image.
    #[serde(skip)]
    pub snapshots: Vec<Snapshot>,
    #[serde(skip)]
    pub trajectories: Option<TrajectoryEnsemble>,
}

impl StageResult {
    pub fn flux_balance(&self) -> f64 {
        self.fluxes[0] + self.fluxes[1] + self.interception + self.boundary_loss
    }
}

/// `(C₁, C₂)` of an image density; a sample exactly at `x = 0` is split.
pub fn lobe_fluxes(grid: &Grid, density: &[f64]) -> [f64; 2] {
    let dx = grid.cell_volume();
    let mut c = [0.0; 2];
    for (x, d) in grid.axis(0).points().into_iter().zip(density) {
        if x == 0.0 {
            c[0] += 0.5 * d * dx;
            c[1] += 0.5 * d * dx;
        } else {
            c[Lobe::of(x).index()] += d * dx;
        }
    }
    c
}

fn lobe_peaks(grid: &Grid, density: &[f64]) -> [f64; 2] {
    let mut p = [0.0f64; 2];
    for (x, &d) in grid.axis(0).points().into_iter().zip(density) {
        let i = Lobe::of(x).index();
        p[i] = p[i].max(d);
    }
    p
}

fn plan_for(cfg: &AfsharConfig, grid: &Grid, wires: &[f64]) -> Result<EvolutionPlan> {
    let mut plan = EvolutionPlan::free(cfg.image_time, cfg.dt);
    if cfg.grid_present {
        plan = plan.with_element(cfg.grid_time, ThinElement::wire_grid(grid, wires, cfg.wire_width)?);
    }
    Ok(plan.with_element(cfg.lens_time, ThinElement::lens(grid, cfg.focal_length, cfg.carrier_wavenumber)))
}

/// Image lobe of each pinhole alone, from a grid-free run.
pub fn slit_lobe_mapping(cfg: &AfsharConfig) -> Result<[Lobe; 2]> {
    let mut lobes = [Lobe::C1; 2];
    for (i, first) in [true, false].into_iter().enumerate() {
        let mut c = cfg.clone();
        c.grid_present = false;
        c.open_slits = if first { OpenSlits::First } else { OpenSlits::Second };
        let psi = build_initial_state(&c)?;
        let grid = psi.grid().clone();
        let plan = plan_for(&c, &grid, &[])?;
        let end = evolve(&psi, &plan, &c.potential(&grid), &[c.image_time])?.pop().expect("final snapshot");
        let f = lobe_fluxes(&grid, &end.field.density());
        lobes[i] = if f[0] >= f[1] { Lobe::C1 } else { Lobe::C2 };
    }
    Ok(lobes)
}

/// Runs the configuration as given (its own `open_slits` and `grid_present`).
pub fn run_configured(
    cfg: &AfsharConfig,
    stage: Stage,
    wires: &[f64],
    slit_lobes: [Lobe; 2],
    trajectories: Option<&TrajectoryOptions>,
) -> Result<StageResult> {
    let psi0 = build_initial_state(cfg)?;
    let grid = psi0.grid().clone();
    let potential = cfg.potential(&grid);
    let plan = plan_for(cfg, &grid, wires)?;
    let key_times = [cfg.grid_time, cfg.lens_time, cfg.image_time];
    let tol = 1e-9 * cfg.image_time;

    let mut interception = 0.0;
    let mut boundary = 0.0;
    let mut last_norm = psi0.norm_sqr();
    let mut kept: Vec<Snapshot> = vec![Snapshot { time: 0.0, event: SnapshotEvent::Stop, field: psi0.clone() }];
    let mut account = |snap: &Snapshot| {
        let n = snap.field.norm_sqr();
        match snap.event {
            SnapshotEvent::Stop => boundary += last_norm - n,
            SnapshotEvent::AfterElement(i) => {
                if cfg.grid_present && i == 0 {
                    interception += last_norm - n;
                }
            }
        }
        last_norm = n;
        let key = key_times.iter().any(|&t| (t - snap.time).abs() <= tol);
        let after_elements = matches!(snap.event, SnapshotEvent::AfterElement(_));
        let at_image = (snap.time - cfg.image_time).abs() <= tol;
        if key && (after_elements || at_image) {
            kept.push(snap.clone());
        }
    };

    let ensemble = match trajectories {
        None => {
            for snap in Evolver::new(&psi0, &plan, &potential, &key_times)? {
                account(&snap);
            }
            None
        }
        Some(opts) => {
            let record = [0.0, cfg.grid_time, cfg.lens_time, cfg.image_time];
            let stops = trajectory_stops(&plan, opts.snapshot_every, &record);
            let ens = sample_equilibrium(&psi0, opts.count, opts.seed)?;
            let evolver = Evolver::new(&psi0, &plan, &potential, &stops)?.inspect(|s| account(s));
            Some(integrate_trajectories(&ens, evolver, &plan, &potential, &record, &IntegratorConfig::default())?)
        }
    };

    let image_field = &kept.last().expect("image snapshot").field;
    let image = image_field.density();
    Ok(StageResult {
        stage,
        open_slits: cfg.open_slits,
        grid_present: cfg.grid_present,
        wire_centers: if cfg.grid_present { wires.to_vec() } else { Vec::new() },
        interception,
        boundary_loss: boundary,
        fluxes: lobe_fluxes(&grid, &image),
        peaks: lobe_peaks(&grid, &image),
        slit_lobes,
        image_x: grid.axis(0).points(),
        image,
        snapshots: kept,
        trajectories: ensemble,
    })
}

/// Runs one stage: i has no grid and keeps the configured pinholes, ii opens
/// only the first pinhole behind the grid, iii opens both behind the grid.
pub fn run_stage(cfg: &AfsharConfig, stage: Stage, trajectories: Option<&TrajectoryOptions>) -> Result<StageResult> {
    cfg.validate()?;
    let wires = wire_centers(cfg)?;
    let lobes = slit_lobe_mapping(cfg)?;
    run_configured(&cfg.for_stage(stage), stage, &wires, lobes, trajectories)
}

/// Interception the wires would see without fringes: the same grid over the
/// incoherent sum of the two pinhole beams at the wire plane.
pub fn reference_interception(cfg: &AfsharConfig, wires: &[f64]) -> Result<f64> {
    let grid = cfg.grid()?;
    let plan = EvolutionPlan::free(cfg.grid_time, cfg.dt);
    let potential = cfg.potential(&grid);
    let mut blocked = 0.0;
    let mut total = 0.0;
    for first in [true, false] {
        let psi =
            evolve(&pinhole_beam(cfg, first)?, &plan, &potential, &[cfg.grid_time])?.pop().expect("snapshot").field;
        for (x, d) in grid.axis(0).points().into_iter().zip(psi.density()) {
            total += d;
            if wires.iter().any(|c| (x - c).abs() <= 0.5 * cfg.wire_width) {
                blocked += d;
            }
        }
    }
    Ok(blocked / total)
}

/// Fraction of surviving trajectories whose pinhole of origin images onto
/// the lobe where they arrive. The origin is the open pinhole when only one
/// is open, and the sign of the starting position otherwise.
pub fn which_path_correlation(result: &StageResult) -> Result<f64> {
    let ens = result.trajectories.as_ref().ok_or(Error::EmptyEnsemble)?;
    let t_end = *ens.times.last().expect("record times");
    let k = ens.times.len() - 1;
    let mut matched = 0usize;
    let mut alive = 0usize;
    for tr in ens.trajectories.iter().filter(|t| t.alive_at(t_end)) {
        let slit = match result.open_slits {
            OpenSlits::First => 0,
            OpenSlits::Second => 1,
            OpenSlits::Both => usize::from(tr.origin()[0] < 0.0),
        };
        alive += 1;
        matched += usize::from(result.slit_lobes[slit] == Lobe::of(tr.positions[k][0]));
    }
    if alive == 0 {
        return Err(Error::EmptyEnsemble);
    }
    Ok(matched as f64 / alive as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivarianceSample {
    pub time: f64,
    pub ks: f64,
    pub critical: f64,
    pub alive: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoubleSlitReport {
    pub count: usize,
    pub seed: u64,
    pub duration: f64,
    pub equivariance: Vec<EquivarianceSample>,
    pub inversions: usize,
    pub low_density_occupancy: f64,
    pub low_density_weight: f64,
    pub band_transitions: usize,
    pub upper_slit_fraction: f64,
    pub upper_slit_weight: f64,
    #[serde(skip)]
    pub trajectories: TrajectoryEnsemble,
}

/// Free two-pinhole flight with trajectories, checked at `sample_times`.
///
/// Reports the KS distance at each sample time, ordering violations, the
/// share of trajectory-time spent where `|ψ|² < 0.1·max`, the density weight
/// of that region, and the number of trajectories that change fringe band
/// between the first and last sample.
pub fn run_double_slit(
    cfg: &AfsharConfig,
    opts: &TrajectoryOptions,
    duration: f64,
    sample_times: &[f64],
) -> Result<DoubleSlitReport> {
    let mut c = cfg.clone();
    c.open_slits = OpenSlits::Both;
    let psi0 = build_initial_state(&c)?;
    let grid = psi0.grid().clone();
    let potential = c.potential(&grid);
    let plan = EvolutionPlan::free(duration, c.dt);
    let mut record = vec![0.0];
    record.extend_from_slice(sample_times);
    let stops = trajectory_stops(&plan, opts.snapshot_every, &record);
    let tol = 1e-9 * duration.max(1.0);
    let mut fields: Vec<(f64, WaveField)> = Vec::new();
    let ens0 = sample_equilibrium(&psi0, opts.count, opts.seed)?;
    let evolver = Evolver::new(&psi0, &plan, &potential, &stops)?.inspect(|s| {
        if sample_times.iter().any(|&t| (t - s.time).abs() <= tol) {
            fields.push((s.time, s.field.clone()));
        }
    });
    let ens = integrate_trajectories(&ens0, evolver, &plan, &potential, &record, &IntegratorConfig::default())?;

    let mut equivariance = Vec::new();
    for (t, psi) in &fields {
        let k = ens.time_index(*t).expect("recorded");
        let alive = ens.alive_positions(k).len();
        equivariance.push(EquivarianceSample {
            time: *t,
            ks: equivariance_check(&ens, *t, psi)?,
            critical: ks_critical_value(alive, 0.01),
            alive,
        });
    }
    let refs: Vec<(f64, &WaveField)> = fields.iter().map(|(t, f)| (*t, f)).collect();
    let theta = 0.1;
    let low_density_weight = refs
        .iter()
        .map(|(_, f)| {
            let d = f.density();
            let cut = theta * d.iter().fold(0.0f64, |m, &v| m.max(v));
            d.iter().filter(|&&v| v < cut).sum::<f64>() / d.iter().sum::<f64>()
        })
        .sum::<f64>()
        / refs.len().max(1) as f64;
    let (first, last) = (sample_times.first().copied().unwrap_or(0.0), sample_times.last().copied().unwrap_or(0.0));
    let boundaries = fields.first().map(|(_, f)| fringe_minima(f).unwrap_or_default()).unwrap_or_default();
    let upper_slit_weight = {
        let d = psi0.density();
        let xs = grid.axis(0).points();
        xs.iter().zip(&d).filter(|(x, _)| **x > 0.0).map(|(_, v)| v).sum::<f64>() / d.iter().sum::<f64>()
    };
    Ok(DoubleSlitReport {
        count: opts.count,
        seed: opts.seed,
        duration,
        equivariance,
        inversions: sorted_order_inversions(&ens)?,
        low_density_occupancy: fringe_occupancy(&ens, &refs, theta)?,
        low_density_weight,
        band_transitions: band_transitions(&ens, first, last, &boundaries)?,
        upper_slit_fraction: positive_fraction(&ens, 0.0)?,
        upper_slit_weight,
        trajectories: ens,
    })
}
