//! Visibility, distinguishability and the duality relation between them.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, WaveField};
use crate::spectral::Spectral;

/// Amplitudes of the two interfering waves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoWaveAmplitudes {
    pub first: f64,
    pub second: f64,
}

impl TwoWaveAmplitudes {
    pub fn new(first: f64, second: f64) -> Result<Self> {
        if !(first >= 0.0 && second >= 0.0) || !first.is_finite() || !second.is_finite() {
            return Err(Error::OutOfRange(format!("amplitudes must be finite and non-negative: ({first}, {second})")));
        }
        if first == 0.0 && second == 0.0 {
            return Err(Error::OutOfRange("both amplitudes are zero".into()));
        }
        Ok(Self { first, second })
    }

    fn intensity_sum(&self) -> f64 {
        self.first * self.first + self.second * self.second
    }
}

/// `2ab/(a² + b²)`.
pub fn visibility(a: &TwoWaveAmplitudes) -> f64 {
    2.0 * a.first * a.second / a.intensity_sum()
}

/// `|a² − b²|/(a² + b²)`.
pub fn distinguishability(a: &TwoWaveAmplitudes) -> f64 {
    (a.first * a.first - a.second * a.second).abs() / a.intensity_sum()
}

/// `K² + V²`, which is one for every amplitude pair.
pub fn duality_identity(a: &TwoWaveAmplitudes) -> f64 {
    let (k, v) = (distinguishability(a), visibility(a));
    k * k + v * v
}

/// `(I_max − I_min)/(I_max + I_min)`.
pub fn visibility_from_extrema(i_max: f64, i_min: f64) -> Result<f64> {
    if !(i_max > 0.0) || i_min < 0.0 || i_min > i_max {
        return Err(Error::OutOfRange(format!("need 0 ≤ I_min ≤ I_max, I_max > 0: ({i_max}, {i_min})")));
    }
    Ok((i_max - i_min) / (i_max + i_min))
}

/// Fraction of the peak that bounds the analysis window of a profile.
pub const WINDOW_FRACTION: f64 = 0.1;

/// Visibility from the global extrema of `profile` between its outermost
/// points at or above [`WINDOW_FRACTION`] of the peak.
pub fn profile_visibility(profile: &[f64]) -> Result<f64> {
    let peak = profile.iter().fold(0.0f64, |m, &v| m.max(v));
    if !(peak > 0.0) {
        return Err(Error::DegenerateState("profile has no positive intensity".into()));
    }
    let lo = profile.iter().position(|&v| v >= WINDOW_FRACTION * peak).expect("peak present");
    let hi = profile.iter().rposition(|&v| v >= WINDOW_FRACTION * peak).expect("peak present");
    let min = profile[lo..=hi].iter().fold(f64::INFINITY, |m, &v| m.min(v)).max(0.0);
    visibility_from_extrema(peak, min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Satisfied,
    Saturated,
    Violated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnglertCheck {
    pub verdict: Verdict,
    /// `1 − (K² + V²)`.
    pub margin: f64,
}

/// Classifies `K² + V² ≤ 1`; margins within `1e-9` of zero count as saturated.
pub fn englert_check(v: f64, k: f64) -> Result<EnglertCheck> {
    for (name, x) in [("V", v), ("K", k)] {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutOfRange(format!("{name} = {x} outside [0, 1]")));
        }
    }
    let margin = 1.0 - (k * k + v * v);
    let verdict = if margin.abs() <= 1e-9 {
        Verdict::Saturated
    } else if margin < 0.0 {
        Verdict::Violated
    } else {
        Verdict::Satisfied
    };
    Ok(EnglertCheck { verdict, margin })
}

/// Meter states before (`ready`) and after (`moved`) the coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct PointerStates {
    pub ready: WaveField,
    pub moved: WaveField,
}

impl PointerStates {
    pub fn new(ready: WaveField, moved: WaveField) -> Result<Self> {
        ready.grid().check_same(moved.grid())?;
        for (name, f) in [("ready", &ready), ("moved", &moved)] {
            if (f.norm() - 1.0).abs() > 1e-8 {
                return Err(Error::OutOfRange(format!("{name} pointer state has norm {}", f.norm())));
            }
        }
        Ok(Self { ready, moved })
    }
}

/// `c = ∫ φ_ready*(y) φ_moved(y) dy`.
pub fn overlap_c(p: &PointerStates) -> Complex64 {
    p.ready.inner(&p.moved).expect("same grid")
}

/// `|ψ₁|² + |ψ₂|² + 2 Re(c ψ₂* ψ₁)`.
pub fn conditioned_intensity(first: &WaveField, second: &WaveField, c: Complex64) -> Result<Vec<f64>> {
    first.grid().check_same(second.grid())?;
    Ok(first
        .amplitudes()
        .iter()
        .zip(second.amplitudes())
        .map(|(a, b)| a.norm_sqr() + b.norm_sqr() + 2.0 * (c * b.conj() * a).re)
        .collect())
}

/// Visibility of the dominant fringe of a 1D profile.
///
/// The fringe wavenumber is the strongest non-zero Fourier mode; the profile
/// is then fitted by least squares to `a + b·cos(kx) + s·sin(kx)` and the
/// visibility is `√(b² + s²)/a`. A profile without any fringe power gives 0.
pub fn fringe_visibility(grid: &Grid, profile: &[f64]) -> Result<f64> {
    if grid.dims() != 1 || profile.len() != grid.len() {
        return Err(Error::GridMismatch("fringe fit needs a 1D profile on its grid".into()));
    }
    if profile.iter().any(|v| !v.is_finite()) {
        return Err(Error::FitFailure("profile is not finite".into()));
    }
    let mean = profile.iter().sum::<f64>() / profile.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::FitFailure(format!("profile mean {mean} is not positive")));
    }
    let spectral = Spectral::new(grid);
    let mut data: Vec<Complex64> = profile.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    spectral.forward_raw(&mut data);
    let ks = spectral.wavenumbers(0);
    let dc = data[0].norm();
    let (best, power) =
        (1..data.len()).map(|i| (i, data[i].norm())).fold((0, 0.0), |acc, (i, p)| if p > acc.1 { (i, p) } else { acc });
    if power <= 1e-12 * dc {
        return Ok(0.0);
    }
    let k = ks[best].abs();
    let xs = grid.axis(0).points();
    // Normal equations for the three-term model.
    let mut m = [[0.0f64; 3]; 3];
    let mut r = [0.0f64; 3];
    for (x, &y) in xs.iter().zip(profile) {
        let basis = [1.0, (k * x).cos(), (k * x).sin()];
        for i in 0..3 {
            r[i] += basis[i] * y;
            for j in 0..3 {
                m[i][j] += basis[i] * basis[j];
            }
        }
    }
    let coef = solve3(m, r).ok_or_else(|| Error::FitFailure("singular fringe fit".into()))?;
    if !(coef[0] > 0.0) {
        return Err(Error::FitFailure(format!("fitted mean {} is not positive", coef[0])));
    }
    Ok(coef[1].hypot(coef[2]) / coef[0])
}

fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> Option<[f64; 3]> {
    let scale = m.iter().flatten().fold(0.0f64, |a, &v| a.max(v.abs()));
    for col in 0..3 {
        let pivot = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() <= 1e-14 * scale {
            return None;
        }
        m.swap(col, pivot);
        r.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (dst, src) in m[row].iter_mut().zip(pivot_row).skip(col) {
                *dst -= f * src;
            }
            r[row] -= f * r[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|j| m[i][j] * x[j]).sum();
        x[i] = (r[i] - s) / m[i][i];
    }
    Some(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContrastRow {
    pub separation: f64,
    pub overlap: f64,
    pub visibility: f64,
}

/// Fringe visibility of the conditioned intensity of `first`, `second` as the
/// moved pointer is displaced by each of `separations`. `pointer` is the
/// ready state; the moved state is its translate.
pub fn contrast_vs_overlap(
    first: &WaveField,
    second: &WaveField,
    pointer: &WaveField,
    separations: &[f64],
) -> Result<Vec<ContrastRow>> {
    let phi = crate::spectral::forward(pointer);
    let kgrid = phi.k_grid();
    let mut rows = Vec::with_capacity(separations.len());
    for &s in separations {
        // Translate in k-space so the moved state stays exactly normalized.
        let mut shifted = phi.clone();
        for (i, v) in shifted.values_mut().iter_mut().enumerate() {
            let k = kgrid.coords(i)[0];
            *v *= Complex64::from_polar(1.0, -k * s);
        }
        let moved = crate::spectral::inverse(&shifted);
        let states = PointerStates::new(pointer.clone(), moved)?;
        let c = overlap_c(&states);
        let profile = conditioned_intensity(first, second, c)?;
        rows.push(ContrastRow {
            separation: s,
            overlap: c.norm(),
            visibility: fringe_visibility(first.grid(), &profile)?,
        });
    }
    Ok(rows)
}

/// Visibility bound inferred from wire interception.
///
/// With the wires on dark fringes the intercepted intensity is at least
/// `(1 − V)` times what the same wires would intercept from the fringe-free
/// (incoherent) intensity, so `V ≥ 1 − r` with `r` the interception ratio.
/// Equivalently `I_min/I_max ≤ r/(2 − r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InferredVisibility {
    pub interception: f64,
    pub reference_interception: f64,
    pub ratio: f64,
    pub min_max_bound: f64,
    pub visibility_bound: f64,
}

pub fn inferred_visibility(interception: f64, reference_interception: f64) -> Result<InferredVisibility> {
    if !(reference_interception > 0.0) || !(interception >= 0.0) {
        return Err(Error::OutOfRange(format!(
            "interception {interception} and reference {reference_interception} must be non-negative, reference positive"
        )));
    }
    let ratio = interception / reference_interception;
    Ok(InferredVisibility {
        interception,
        reference_interception,
        ratio,
        min_max_bound: if ratio < 1.0 { ratio / (2.0 - ratio) } else { 1.0 },
        visibility_bound: (1.0 - ratio).max(0.0),
    })
}

/// One line of a duality table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityReportEntry {
    pub context: String,
    pub visibility: f64,
    pub distinguishability: f64,
    pub sum_of_squares: f64,
    /// `[Re c, Im c]` when a pointer overlap is involved.
    pub overlap: Option<[f64; 2]>,
}

impl DualityReportEntry {
    pub fn from_amplitudes(context: &str, a: &TwoWaveAmplitudes) -> Self {
        let (v, k) = (visibility(a), distinguishability(a));
        Self {
            context: context.into(),
            visibility: v,
            distinguishability: k,
            sum_of_squares: v * v + k * k,
            overlap: None,
        }
    }
}
