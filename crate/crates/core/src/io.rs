//! Binary and CSV serialization of wave fields.
//!
//! Binary layout, all little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `b"PWFIELD1"` |
//! | 8     | `u64` domain tag (0 position, 1 reciprocal) |
//! | 8     | `u64` dims (1 or 2) |
//! | 24·dims | per axis: `u64` n, `f64` x_min, `f64` x_max (position-space extent) |
//! | 8     | `f64` ħ |
//! | 8     | `f64` mass |
//! | 16·N  | payload: interleaved `f64` re, im in row-major order |
//!
//! Reciprocal-domain payloads hold `φ(k)` with k ascending per axis; the header
//! still carries the position extent so the k grid can be rebuilt.

use num_complex::Complex64;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::grid::{Axis, Grid, WaveField};
use crate::spectral::{Domain, SpectralAmplitude};

pub const MAGIC: &[u8; 8] = b"PWFIELD1";

fn write_header<W: Write>(w: &mut W, domain: Domain, grid: &Grid, hbar: f64, mass: f64) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    let tag: u64 = match domain {
        Domain::Position => 0,
        Domain::Reciprocal => 1,
    };
    w.write_all(&tag.to_le_bytes())?;
    w.write_all(&(grid.dims() as u64).to_le_bytes())?;
    for a in grid.axes() {
        w.write_all(&(a.n as u64).to_le_bytes())?;
        w.write_all(&a.min.to_le_bytes())?;
        w.write_all(&a.max.to_le_bytes())?;
    }
    w.write_all(&hbar.to_le_bytes())?;
    w.write_all(&mass.to_le_bytes())
}

fn write_payload<W: Write>(w: &mut W, values: &[Complex64]) -> std::io::Result<()> {
    for v in values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn encode_field(psi: &WaveField) -> Vec<u8> {
    let mut buf = Vec::with_capacity(64 + 16 * psi.grid().len());
    write_header(&mut buf, Domain::Position, psi.grid(), psi.hbar, psi.mass).expect("vec write");
    write_payload(&mut buf, psi.amplitudes()).expect("vec write");
    buf
}

pub fn encode_spectral(phi: &SpectralAmplitude) -> Vec<u8> {
    let mut buf = Vec::with_capacity(64 + 16 * phi.values().len());
    write_header(&mut buf, Domain::Reciprocal, phi.position_grid(), phi.hbar, phi.mass).expect("vec write");
    write_payload(&mut buf, phi.values()).expect("vec write");
    buf
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take8(&mut self) -> Result<[u8; 8]> {
        let s = self
            .bytes
            .get(self.at..self.at + 8)
            .ok_or_else(|| Error::Malformed(format!("truncated at byte {}", self.at)))?;
        self.at += 8;
        Ok(s.try_into().expect("8 bytes"))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take8()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take8()?))
    }
}

/// Decoded record: either a position field or a spectral amplitude.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldRecord {
    Position(WaveField),
    Reciprocal(SpectralAmplitude),
}

pub fn decode(bytes: &[u8]) -> Result<FieldRecord> {
    let mut c = Cursor { bytes, at: 0 };
    if &c.take8()? != MAGIC {
        return Err(Error::Malformed("bad magic".into()));
    }
    let domain = match c.u64()? {
        0 => Domain::Position,
        1 => Domain::Reciprocal,
        t => return Err(Error::Malformed(format!("unknown domain tag {t}"))),
    };
    let dims = c.u64()? as usize;
    if !(1..=2).contains(&dims) {
        return Err(Error::Malformed(format!("dims {dims}")));
    }
    let mut axes = Vec::with_capacity(dims);
    for _ in 0..dims {
        let n = c.u64()? as usize;
        let min = c.f64()?;
        let max = c.f64()?;
        axes.push(Axis { min, max, n });
    }
    let grid = Grid::from_axes(axes)?;
    let hbar = c.f64()?;
    let mass = c.f64()?;
    let expected = c.at + 16 * grid.len();
    if bytes.len() != expected {
        return Err(Error::Malformed(format!("payload length {} != {}", bytes.len(), expected)));
    }
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let re = c.f64()?;
        let im = c.f64()?;
        values.push(Complex64::new(re, im));
    }
    match domain {
        Domain::Position => Ok(FieldRecord::Position(WaveField::new(grid, values, mass, hbar)?)),
        Domain::Reciprocal => Ok(FieldRecord::Reciprocal(SpectralAmplitude::new(grid, values, mass, hbar)?)),
    }
}

pub fn write_field<W: Write>(mut w: W, psi: &WaveField) -> std::io::Result<()> {
    w.write_all(&encode_field(psi))
}

pub fn read_field<R: Read>(mut r: R) -> Result<WaveField> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::Malformed(e.to_string()))?;
    match decode(&bytes)? {
        FieldRecord::Position(f) => Ok(f),
        FieldRecord::Reciprocal(_) => Err(Error::Malformed("expected a position-domain field".into())),
    }
}

/// CSV with header `x,re,im` (1D) or `x,y,re,im` (2D).
pub fn field_to_csv(psi: &WaveField) -> String {
    let grid = psi.grid();
    let mut out = String::with_capacity(48 * grid.len());
    out.push_str(if grid.dims() == 1 { "x,re,im\n" } else { "x,y,re,im\n" });
    for (i, a) in psi.amplitudes().iter().enumerate() {
        let [x, y] = grid.coords(i);
        if grid.dims() == 1 {
            out.push_str(&format!("{x},{},{}\n", a.re, a.im));
        } else {
            out.push_str(&format!("{x},{y},{},{}\n", a.re, a.im));
        }
    }
    out
}
