//! Trajectory transport along the guidance field.
//!
//! Between two consecutive snapshots the velocity is linear in time and
//! Catmull–Rom cubic in space (bicubic in 2D). Each interval is split into
//! RK4 substeps so that no substep moves a particle more than a fraction of
//! a cell; this keeps trajectories resolved near sharp mask edges.

use rayon::prelude::*;

use super::ensemble::{Termination, Trajectory, TrajectoryEnsemble};
use super::fields::{velocity_field_with, VelocityField};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::propagator::{regular_times, ElementKind, EvolutionPlan, PotentialField, Snapshot, SnapshotEvent};
use crate::spectral::Spectral;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// Largest allowed displacement per substep, in cells.
    pub courant: f64,
    pub max_substeps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { courant: 0.25, max_substeps: 64 }
    }
}

#[inline]
fn catmull_rom(p: [f64; 4], u: f64) -> f64 {
    0.5 * (2.0 * p[1]
        + (p[2] - p[0]) * u
        + (2.0 * p[0] - 5.0 * p[1] + 4.0 * p[2] - p[3]) * u * u
        + (3.0 * (p[1] - p[2]) + p[3] - p[0]) * u * u * u)
}

/// Stencil base index and fractional offset, or `None` near the edges.
#[inline]
fn stencil(grid: &Grid, axis: usize, x: f64) -> Option<(usize, f64)> {
    let a = grid.axis(axis);
    let s = (x - a.min) / a.spacing();
    if !s.is_finite() {
        return None;
    }
    let j = s.floor();
    if j < 1.0 || j + 2.0 > (a.n - 1) as f64 {
        return None;
    }
    Some((j as usize - 1, s - j))
}

/// Cubic interpolation of a grid-aligned array at `pos`.
pub fn interpolate(grid: &Grid, values: &[f64], pos: [f64; 2]) -> Option<f64> {
    let (i0, u) = stencil(grid, 0, pos[0])?;
    if grid.dims() == 1 {
        return Some(catmull_rom([values[i0], values[i0 + 1], values[i0 + 2], values[i0 + 3]], u));
    }
    let (j0, w) = stencil(grid, 1, pos[1])?;
    let ny = grid.axis(1).n;
    let mut col = [0.0; 4];
    for (r, c) in col.iter_mut().enumerate() {
        let row = (i0 + r) * ny + j0;
        *c = catmull_rom([values[row], values[row + 1], values[row + 2], values[row + 3]], w);
    }
    Some(catmull_rom(col, u))
}

fn flat_index(grid: &Grid, pos: [f64; 2]) -> Option<usize> {
    let ix = grid.axis(0).nearest_index(pos[0])?;
    if grid.dims() == 1 {
        return Some(ix);
    }
    let iy = grid.axis(1).nearest_index(pos[1])?;
    Some(ix * grid.axis(1).n + iy)
}

struct Frame {
    time: f64,
    v: VelocityField,
}

impl Frame {
    fn at(&self, pos: [f64; 2]) -> Option<[f64; 2]> {
        let g = self.v.grid();
        let vx = interpolate(g, self.v.component(0), pos)?;
        let vy = if g.dims() == 2 { interpolate(g, self.v.component(1), pos)? } else { 0.0 };
        Some([vx, vy])
    }
}

enum StepOutcome {
    Moved,
    Boundary(f64),
    Escaped(f64, [f64; 2]),
}

struct Interval<'a> {
    a: &'a Frame,
    b: &'a Frame,
    absorbing: Option<&'a [bool]>,
    cell: f64,
    cfg: IntegratorConfig,
}

impl Interval<'_> {
    fn velocity(&self, t: f64, pos: [f64; 2]) -> Option<[f64; 2]> {
        let h = self.b.time - self.a.time;
        let w = ((t - self.a.time) / h).clamp(0.0, 1.0);
        let va = self.a.at(pos)?;
        let vb = self.b.at(pos)?;
        Some([(1.0 - w) * va[0] + w * vb[0], (1.0 - w) * va[1] + w * vb[1]])
    }

    fn advance(&self, pos: &mut [f64; 2]) -> StepOutcome {
        let t0 = self.a.time;
        let h = self.b.time - t0;
        let Some(v0) = self.velocity(t0, *pos) else {
            return StepOutcome::Escaped(t0, *pos);
        };
        let speed = v0[0].abs().max(v0[1].abs());
        let wanted = (speed * h / (self.cfg.courant * self.cell)).ceil();
        let substeps = if wanted.is_finite() { (wanted as usize).clamp(1, self.cfg.max_substeps.max(1)) } else { 1 };
        let hs = h / substeps as f64;
        let add = |p: [f64; 2], k: [f64; 2], c: f64| [p[0] + c * k[0], p[1] + c * k[1]];
        for s in 0..substeps {
            let t = t0 + s as f64 * hs;
            let p = *pos;
            let step = (|| {
                let k1 = self.velocity(t, p)?;
                let k2 = self.velocity(t + 0.5 * hs, add(p, k1, 0.5 * hs))?;
                let k3 = self.velocity(t + 0.5 * hs, add(p, k2, 0.5 * hs))?;
                let k4 = self.velocity(t + hs, add(p, k3, hs))?;
                Some([
                    p[0] + hs / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                    p[1] + hs / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
                ])
            })();
            let Some(next) = step else {
                return StepOutcome::Escaped(t, p);
            };
            *pos = next;
            if let Some(layer) = self.absorbing {
                match flat_index(self.a.v.grid(), next) {
                    Some(i) if !layer[i] => {}
                    _ => return StepOutcome::Boundary(t + hs),
                }
            }
        }
        StepOutcome::Moved
    }
}

/// Length of the densely sampled window after an amplitude mask.
pub const MASK_REFINE_SPAN: f64 = 2.0;
/// Cadence divisor inside that window.
pub const MASK_REFINE_FACTOR: f64 = 5.0;

/// Stop times for trajectory work: a regular cadence `every` merged with the
/// record times. For [`MASK_REFINE_SPAN`] after each amplitude mask the
/// cadence is divided by [`MASK_REFINE_FACTOR`], since the hard edges it
/// leaves make the field change fastest there. Pass the result to
/// [`crate::propagator::Evolver::new`].
pub fn trajectory_stops(plan: &EvolutionPlan, every: f64, record: &[f64]) -> Vec<f64> {
    let mut t = regular_times(plan.duration, every);
    for e in plan.elements.iter().filter(|e| e.element.kind == ElementKind::AmplitudeMask) {
        let span = MASK_REFINE_SPAN.min(plan.duration - e.time);
        t.extend(regular_times(span, every / MASK_REFINE_FACTOR).into_iter().map(|s| e.time + s));
    }
    t.extend(record.iter().copied().filter(|&r| r >= 0.0 && r <= plan.duration));
    t.sort_by(f64::total_cmp);
    t.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * plan.duration.max(1.0));
    t
}

/// Moves `ens` along the snapshots of one run of `plan`.
///
/// The ensemble's last record time must match the first snapshot. Positions
/// are appended at every `record` time later than that; each record time
/// must coincide with a snapshot stop. A trajectory that sits on the blocked
/// support of an amplitude mask when the mask acts is terminated there, and
/// one that enters the absorbing layer of `potential` is terminated at the
/// boundary. Leaving the interpolation stencil of a grid without absorbers
/// is an [`Error::EscapedDomain`].
pub fn integrate_trajectories(
    ens: &TrajectoryEnsemble,
    snapshots: impl IntoIterator<Item = Snapshot>,
    plan: &EvolutionPlan,
    potential: &PotentialField,
    record: &[f64],
    cfg: &IntegratorConfig,
) -> Result<TrajectoryEnsemble> {
    let mut snapshots = snapshots.into_iter();
    let first = snapshots.next().ok_or_else(|| Error::InvalidPlan("no snapshots".into()))?;
    let start = *ens.times.last().ok_or(Error::EmptyEnsemble)?;
    let tol = 1e-9 * plan.duration.max(1.0);
    if (first.time - start).abs() > tol {
        return Err(Error::InvalidPlan(format!("ensemble at t = {start}, snapshots start at {}", first.time)));
    }
    if ens.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let grid = first.field.grid().clone();
    grid.check_same(potential.grid())?;
    let spectral = Spectral::new(&grid);
    let cell = grid.axes().iter().map(|a| a.spacing()).fold(f64::INFINITY, f64::min);
    let absorbing: Option<Vec<bool>> =
        (!potential.is_real()).then(|| potential.absorption().iter().map(|&g| g > 0.0).collect());

    let mut pending: Vec<f64> = record.iter().copied().filter(|&r| r > start + tol).collect();
    pending.sort_by(f64::total_cmp);
    pending.dedup_by(|a, b| (*a - *b).abs() <= tol);
    let mut out = ens.clone();
    let mut state: Vec<[f64; 2]> = out.trajectories.iter().map(|t| t.last()).collect();
    let frame = |s: &Snapshot| -> Result<Frame> {
        Ok(Frame { time: s.time, v: velocity_field_with(&s.field, &spectral, s.field.default_node_threshold())? })
    };
    let mut current = frame(&first)?;

    for snap in snapshots {
        match snap.event {
            SnapshotEvent::Stop => {
                if snap.time > current.time + tol {
                    let next = frame(&snap)?;
                    let span = Interval { a: &current, b: &next, absorbing: absorbing.as_deref(), cell, cfg: *cfg };
                    transport(&mut out.trajectories, &mut state, &span)?;
                    current = next;
                }
                if pending.first().is_some_and(|&r| (r - snap.time).abs() <= tol) {
                    pending.remove(0);
                    out.times.push(snap.time);
                    for (tr, &pos) in out.trajectories.iter_mut().zip(&state) {
                        tr.positions.push(pos);
                    }
                }
            }
            SnapshotEvent::AfterElement(i) => {
                let element = &plan.elements[i].element;
                if element.kind == ElementKind::AmplitudeMask {
                    for (tr, &pos) in out.trajectories.iter_mut().zip(&state).filter(|(t, _)| t.termination.is_none()) {
                        if flat_index(&grid, pos).is_none_or(|idx| element.blocks(idx)) {
                            tr.termination = Some(Termination::Mask { time: snap.time });
                        }
                    }
                }
                current = frame(&snap)?;
            }
        }
    }
    if let Some(&r) = pending.first() {
        return Err(Error::InvalidPlan(format!("record time {r} is not a snapshot stop")));
    }
    Ok(out)
}

fn transport(trajectories: &mut [Trajectory], state: &mut [[f64; 2]], span: &Interval<'_>) -> Result<()> {
    let outcomes: Vec<Option<Error>> = trajectories
        .par_iter_mut()
        .zip(state.par_iter_mut())
        .filter(|(tr, _)| tr.termination.is_none())
        .map(|(tr, pos)| match span.advance(pos) {
            StepOutcome::Moved => None,
            StepOutcome::Boundary(time) => {
                tr.termination = Some(Termination::Boundary { time });
                None
            }
            StepOutcome::Escaped(time, _) if span.absorbing.is_some() => {
                tr.termination = Some(Termination::Boundary { time });
                None
            }
            StepOutcome::Escaped(time, position) => Some(Error::EscapedDomain { id: tr.id, time, position }),
        })
        .collect();
    match outcomes.into_iter().flatten().next() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bohmian::ensemble::sample_equilibrium;
    use crate::grid::{gaussian_packet, make_grid, WaveField};
    use crate::propagator::{Evolver, ThinElement};
    use num_complex::Complex64;

    fn run(
        psi: &WaveField,
        plan: &EvolutionPlan,
        v: &PotentialField,
        ens: &TrajectoryEnsemble,
        every: f64,
        record: &[f64],
    ) -> Result<TrajectoryEnsemble> {
        let stops = trajectory_stops(plan, every, record);
        let evolver = Evolver::new(psi, plan, v, &stops)?;
        integrate_trajectories(ens, evolver, plan, v, record, &IntegratorConfig::default())
    }

    #[test]
    fn stops_are_refined_after_masks() {
        let g = make_grid(-4.0, 4.0, 32, 1).unwrap();
        let mask = ThinElement::amplitude_mask(&g, |x, _| if x.abs() < 1.0 { 0.0 } else { 1.0 }).unwrap();
        let plan =
            EvolutionPlan::free(5.0, 0.01).with_element(1.0, mask).with_element(2.0, ThinElement::lens(&g, 10.0, 1.0));
        let stops = trajectory_stops(&plan, 0.5, &[0.25]);
        let near = |t: f64| stops.iter().any(|&s| (s - t).abs() < 1e-12);
        assert!(near(0.25) && near(1.1) && near(2.9) && near(4.5) && near(5.0));
        assert!(!near(3.1) && !near(0.1));
        assert!(stops.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn cubic_interpolation_is_exact_for_quadratics() {
        let g = make_grid(-4.0, 4.0, 32, 1).unwrap();
        let vals: Vec<f64> = g.axis(0).points().iter().map(|x| 1.0 + 2.0 * x - 0.5 * x * x).collect();
        for &x in &[-2.9, -0.3, 0.1, 1.77] {
            let y = interpolate(&g, &vals, [x, 0.0]).unwrap();
            assert!((y - (1.0 + 2.0 * x - 0.5 * x * x)).abs() < 1e-12);
        }
        assert!(interpolate(&g, &vals, [-3.9, 0.0]).is_none());

        let g2 = make_grid(-4.0, 4.0, 16, 2).unwrap();
        let vals2: Vec<f64> = (0..g2.len())
            .map(|i| {
                let [x, y] = g2.coords(i);
                x * y + y
            })
            .collect();
        let z = interpolate(&g2, &vals2, [0.3, -1.1]).unwrap();
        assert!((z - (0.3 * -1.1 - 1.1)).abs() < 1e-12);
    }

    #[test]
    fn plane_wave_trajectories_translate() {
        let g = make_grid(0.0, 16.0 * std::f64::consts::PI, 256, 1).unwrap();
        let k = 1.5;
        let psi = WaveField::from_fn(g, 1.0, 1.0, |x, _| Complex64::from_polar(1.0, k * x));
        let plan = EvolutionPlan::free(2.0, 0.01);
        let v = PotentialField::zero(psi.grid());
        let ens = TrajectoryEnsemble {
            seed: 0,
            dims: 1,
            times: vec![0.0],
            trajectories: [10.0, 20.0, 30.0]
                .iter()
                .enumerate()
                .map(|(id, &x)| Trajectory { id, positions: vec![[x, 0.0]], termination: None })
                .collect(),
        };
        let out = run(&psi, &plan, &v, &ens, 0.1, &[1.0, 2.0]).unwrap();
        assert_eq!(out.times, vec![0.0, 1.0, 2.0]);
        for tr in &out.trajectories {
            let x0 = tr.origin()[0];
            assert!((tr.positions[1][0] - (x0 + k)).abs() < 1e-8);
            assert!((tr.positions[2][0] - (x0 + 2.0 * k)).abs() < 1e-8);
        }
    }

    #[test]
    fn centre_of_symmetric_packet_stays_put() {
        let g = make_grid(-30.0, 30.0, 512, 1).unwrap();
        let psi = gaussian_packet(&g, 0.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        let plan = EvolutionPlan::free(4.0, 0.01);
        let v = PotentialField::zero(&g);
        let ens = TrajectoryEnsemble {
            seed: 0,
            dims: 1,
            times: vec![0.0],
            trajectories: vec![
                Trajectory { id: 0, positions: vec![[0.0, 0.0]], termination: None },
                Trajectory { id: 1, positions: vec![[1.0, 0.0]], termination: None },
            ],
        };
        let out = run(&psi, &plan, &v, &ens, 0.01, &[4.0]).unwrap();
        assert!(out.trajectories[0].last()[0].abs() < 1e-12);
        // Free Gaussian trajectories scale with the width: x(t) = x0·σ(t)/σ0.
        // Linear-in-time velocity between snapshots costs O(h²).
        let expected = (1.0f64 + (4.0 / 2.0f64).powi(2)).sqrt();
        let got = out.trajectories[1].last()[0];
        assert!((got - expected).abs() < 1e-5, "{got} vs {expected}");
    }

    #[test]
    fn mask_terminates_blocked_trajectories() {
        let g = make_grid(-20.0, 20.0, 256, 1).unwrap();
        let psi = gaussian_packet(&g, 0.0, 2.0, 0.0, 1.0, 1.0).unwrap();
        let wire = ThinElement::wire_grid(&g, &[0.0], 2.0).unwrap();
        let plan = EvolutionPlan::free(1.0, 0.01).with_element(0.5, wire);
        let v = PotentialField::zero(&g);
        let ens = sample_equilibrium(&psi, 400, 4).unwrap();
        let out = run(&psi, &plan, &v, &ens, 0.05, &[0.5, 1.0]).unwrap();
        for tr in &out.trajectories {
            let at_mask = tr.positions[1][0];
            let cell = g.axis(0).point(g.axis(0).nearest_index(at_mask).unwrap());
            assert_eq!(tr.intercepted(), cell.abs() <= 1.0, "x = {at_mask}");
        }
        assert!(out.intercepted_fraction() > 0.1);
        assert!(out.trajectories.iter().filter(|t| t.intercepted()).all(|t| t.positions[1] == t.positions[2]));
    }

    #[test]
    fn escaping_without_absorber_is_an_error() {
        let g = make_grid(-10.0, 10.0, 128, 1).unwrap();
        let psi = gaussian_packet(&g, 0.0, 1.0, 5.0, 1.0, 1.0).unwrap();
        let plan = EvolutionPlan::free(3.0, 0.01);
        let v = PotentialField::zero(&g);
        let ens = TrajectoryEnsemble {
            seed: 0,
            dims: 1,
            times: vec![0.0],
            trajectories: vec![Trajectory { id: 7, positions: vec![[0.0, 0.0]], termination: None }],
        };
        assert!(matches!(run(&psi, &plan, &v, &ens, 0.05, &[3.0]), Err(Error::EscapedDomain { id: 7, .. })));

        let absorbing = PotentialField::zero(&g).with_absorber(1.0, 0.1);
        let out = run(&psi, &plan, &absorbing, &ens, 0.05, &[3.0]).unwrap();
        assert!(matches!(out.trajectories[0].termination, Some(Termination::Boundary { .. })));
    }
}
