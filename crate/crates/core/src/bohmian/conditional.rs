//! Conditional wave functions of a particle–pointer pair `Ψ(x, y)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, WaveField};

/// Row `Ψ(·, Y)` of a 2D field at the grid point nearest to `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalSlice {
    /// Unnormalized slice on the first axis.
    pub field: WaveField,
    pub y: f64,
    pub index: usize,
    /// True when the slice vanishes (below `1e-8·max|Ψ|` everywhere).
    pub degenerate: bool,
}

pub fn conditional_wavefunction(psi: &WaveField, y: f64) -> Result<ConditionalSlice> {
    let grid = psi.grid();
    if grid.dims() != 2 {
        return Err(Error::Unsupported("conditional slices need a 2D field".into()));
    }
    let (ax, ay) = (*grid.axis(0), *grid.axis(1));
    let iy = ay
        .nearest_index(y)
        .filter(|_| y >= ay.min && y < ay.max)
        .ok_or_else(|| Error::OutOfRange(format!("y = {y} outside [{}, {})", ay.min, ay.max)))?;
    let values: Vec<Complex64> = (0..ax.n).map(|ix| psi.amplitudes()[ix * ay.n + iy]).collect();
    let cut = psi.default_node_threshold();
    let degenerate = values.iter().all(|v| v.norm() < cut);
    let field = WaveField::new(Grid::from_axes(vec![ax])?, values, psi.mass, psi.hbar)?;
    Ok(ConditionalSlice { field, y: ay.point(iy), index: iy, degenerate })
}

/// Index of the single pointer branch whose support contains `y`.
///
/// A branch supports `y` when `|Φ(y)|` exceeds `1e-8` of its own maximum.
/// `None` means either no branch or more than one branch supports `y`, in
/// which case there is no effective wave function at `y`.
pub fn supporting_branch(pointers: &[WaveField], y: f64) -> Result<Option<usize>> {
    let mut found = None;
    for (b, phi) in pointers.iter().enumerate() {
        if phi.grid().dims() != 1 {
            return Err(Error::Unsupported("pointer states must be 1D".into()));
        }
        let a = phi.grid().axis(0);
        let j = a.nearest_index(y).ok_or_else(|| Error::OutOfRange(format!("y = {y} outside pointer grid")))?;
        if phi.amplitudes()[j].norm() > phi.default_node_threshold() {
            if found.is_some() {
                return Ok(None);
            }
            found = Some(b);
        }
    }
    Ok(found)
}

/// `Σ_b ψ_b(x) Φ_b(y)` on the product of the particle and pointer grids.
pub fn entangle(branches: &[(&WaveField, &WaveField)]) -> Result<WaveField> {
    let (first_x, first_y) = branches.first().ok_or(Error::EmptyEnsemble)?;
    let grid = Grid::plane(*first_x.grid().axis(0), *first_y.grid().axis(0))?;
    let ny = first_y.grid().axis(0).n;
    let mut amps = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (sx, sy) in branches {
        sx.grid().check_same(first_x.grid())?;
        sy.grid().check_same(first_y.grid())?;
        for (ix, a) in sx.amplitudes().iter().enumerate() {
            for (iy, b) in sy.amplitudes().iter().enumerate() {
                amps[ix * ny + iy] += a * b;
            }
        }
    }
    WaveField::new(grid, amps, first_x.mass, first_x.hbar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gaussian_packet, make_grid};

    fn bump(grid: &Grid, lo: f64, hi: f64) -> WaveField {
        WaveField::from_fn(grid.clone(), 1.0, 1.0, |y, _| {
            if y > lo && y < hi {
                Complex64::new(((y - lo) * (hi - y)).sqrt(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .normalize()
        .unwrap()
    }

    fn proportional(a: &[Complex64], b: &[Complex64]) -> bool {
        let (i, _) = b.iter().enumerate().max_by(|x, y| x.1.norm().total_cmp(&y.1.norm())).unwrap();
        let ratio = a[i] / b[i];
        a.iter().zip(b).all(|(u, v)| (u - ratio * v).norm() <= 1e-12 * (1.0 + u.norm()))
    }

    #[test]
    fn product_state_slices_are_proportional() {
        let gx = make_grid(-8.0, 8.0, 64, 1).unwrap();
        let gy = make_grid(-4.0, 4.0, 32, 1).unwrap();
        let psi = gaussian_packet(&gx, 1.0, 1.0, 0.5, 1.0, 1.0).unwrap();
        let phi = gaussian_packet(&gy, 0.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        let big = entangle(&[(&psi, &phi)]).unwrap();
        for y in [-1.0, 0.0, 2.5] {
            let s = conditional_wavefunction(&big, y).unwrap();
            assert!(!s.degenerate);
            assert!(proportional(s.field.amplitudes(), psi.amplitudes()));
        }
        assert!(conditional_wavefunction(&big, 4.5).is_err());
    }

    #[test]
    fn disjoint_branches_select_one_wavefunction() {
        let gx = make_grid(-8.0, 8.0, 64, 1).unwrap();
        let gy = make_grid(-4.0, 4.0, 64, 1).unwrap();
        let psi1 = gaussian_packet(&gx, -2.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        let psi2 = gaussian_packet(&gx, 2.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let phi1 = bump(&gy, -3.5, -1.0);
        let phi2 = bump(&gy, 1.0, 3.5);
        let big = entangle(&[(&psi1, &phi1), (&psi2, &phi2)]).unwrap();

        let s = conditional_wavefunction(&big, -2.0).unwrap();
        assert!(proportional(s.field.amplitudes(), psi1.amplitudes()));
        assert_eq!(supporting_branch(&[phi1.clone(), phi2.clone()], -2.0).unwrap(), Some(0));
        assert_eq!(supporting_branch(&[phi1.clone(), phi2.clone()], 2.0).unwrap(), Some(1));

        let gap = conditional_wavefunction(&big, 0.0).unwrap();
        assert!(gap.degenerate);
        assert_eq!(supporting_branch(&[phi1, phi2], 0.0).unwrap(), None);
    }

    #[test]
    fn slice_equals_source_row() {
        let g = make_grid(-2.0, 2.0, 8, 2).unwrap();
        let f = WaveField::from_fn(g.clone(), 1.0, 1.0, Complex64::new);
        let s = conditional_wavefunction(&f, 0.5).unwrap();
        assert_eq!(s.index, 5);
        for (ix, v) in s.field.amplitudes().iter().enumerate() {
            assert_eq!(*v, f.amplitudes()[ix * 8 + 5]);
        }
    }
}
