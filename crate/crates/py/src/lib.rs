use pilotwave::afshar::{self, AfsharConfig, Stage, TrajectoryOptions};
use pilotwave::bohmian::sample_equilibrium;
use pilotwave::duality::{self, TwoWaveAmplitudes};
use pilotwave::grid::gaussian_packet;
use pilotwave::grw::{self, GrwOptions, GrwParams};
use pilotwave::packet;
use pilotwave::propagator::{evolve_to_end, EvolutionPlan, PotentialField};
use pilotwave::{io, make_grid, Complex64};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(pilotwave_py, PilotwaveError, PyValueError);

fn err(e: pilotwave::Error) -> PyErr {
    PilotwaveError::new_err(e.to_string())
}

/// A one-dimensional wave field on a uniform periodic grid.
#[pyclass(name = "WaveField", module = "pilotwave_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyWaveField {
    inner: pilotwave::WaveField,
}

#[pymethods]
impl PyWaveField {
    #[new]
    #[pyo3(signature = (x_min, x_max, amplitudes, mass=1.0, hbar=1.0))]
    fn new(x_min: f64, x_max: f64, amplitudes: Vec<Complex64>, mass: f64, hbar: f64) -> PyResult<Self> {
        let grid = make_grid(x_min, x_max, amplitudes.len(), 1).map_err(err)?;
        let mut inner = pilotwave::WaveField::natural(grid, amplitudes).map_err(err)?.with_mass(mass);
        inner.hbar = hbar;
        Ok(Self { inner })
    }

    /// Normalized Gaussian packet with density standard deviation `width`.
    #[staticmethod]
    #[pyo3(signature = (x_min, x_max, points, center, width, wavenumber=0.0, mass=1.0, hbar=1.0))]
    #[allow(clippy::too_many_arguments)]
    fn gaussian(
        x_min: f64,
        x_max: f64,
        points: usize,
        center: f64,
        width: f64,
        wavenumber: f64,
        mass: f64,
        hbar: f64,
    ) -> PyResult<Self> {
        let grid = make_grid(x_min, x_max, points, 1).map_err(err)?;
        Ok(Self { inner: gaussian_packet(&grid, center, width, wavenumber, mass, hbar).map_err(err)? })
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(Self { inner: io::read_field(data).map_err(err)? })
    }

    fn to_bytes(&self) -> Vec<u8> {
        io::encode_field(&self.inner)
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.inner.grid().axis(0).points()
    }

    #[getter]
    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner.amplitudes().to_vec()
    }

    #[getter]
    fn mass(&self) -> f64 {
        self.inner.mass
    }

    #[getter]
    fn hbar(&self) -> f64 {
        self.inner.hbar
    }

    fn density(&self) -> Vec<f64> {
        self.inner.density()
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    fn normalize(&self) -> PyResult<Self> {
        Ok(Self { inner: self.inner.normalize().map_err(err)? })
    }

    /// Free split-step evolution over `duration`.
    #[pyo3(signature = (duration, dt=0.01))]
    fn evolve(&self, duration: f64, dt: f64) -> PyResult<Self> {
        let plan = EvolutionPlan::free(duration, dt);
        let v = PotentialField::zero(self.inner.grid());
        Ok(Self { inner: evolve_to_end(&self.inner, &plan, &v).map_err(err)? })
    }

    /// Exact free evolution by spectral time extension.
    fn time_extend(&self, time: f64) -> Self {
        let phi = packet::analyze(&self.inner);
        Self { inner: packet::time_extend(&phi, packet::matter_dispersion(self.inner.mass, self.inner.hbar), time) }
    }

    fn position_spread(&self) -> PyResult<f64> {
        packet::position_spread(&self.inner).map_err(err)
    }

    fn uncertainty_product(&self) -> PyResult<f64> {
        packet::uncertainty_product(&self.inner).map_err(err)
    }

    /// `count` positions drawn from `|ψ|²` under `seed`.
    fn sample_positions(&self, count: usize, seed: u64) -> PyResult<Vec<f64>> {
        let ens = sample_equilibrium(&self.inner, count, seed).map_err(err)?;
        Ok(ens.trajectories.iter().map(|t| t.origin()[0]).collect())
    }

    fn __len__(&self) -> usize {
        self.inner.grid().len()
    }

    fn __repr__(&self) -> String {
        let a = self.inner.grid().axis(0);
        format!("WaveField(points={}, x=[{}, {}), norm={:.6})", a.n, a.min, a.max, self.inner.norm())
    }
}

/// Wire-grid interferometer geometry. Keyword arguments override the
/// canonical scenario.
#[pyclass(name = "AfsharConfig", module = "pilotwave_py", skip_from_py_object)]
#[derive(Clone)]
struct PyAfsharConfig {
    inner: AfsharConfig,
}

#[pymethods]
impl PyAfsharConfig {
    #[new]
    #[pyo3(signature = (**overrides))]
    fn new(overrides: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut c = AfsharConfig::default();
        if let Some(kw) = overrides {
            for (k, v) in kw.iter() {
                let key: String = k.extract()?;
                match key.as_str() {
                    "wire_count" => c.wire_count = v.extract()?,
                    "points" => c.points = v.extract()?,
                    "grid_present" => c.grid_present = v.extract()?,
                    "open_slits" => c.open_slits = v.extract::<String>()?.parse().map_err(err)?,
                    _ => *float_field(&mut c, &key)? = v.extract()?,
                }
            }
        }
        Ok(Self { inner: c })
    }

    fn __getattr__(&self, name: &str) -> PyResult<f64> {
        let mut c = self.inner.clone();
        Ok(*float_field(&mut c, name)?)
    }

    #[getter]
    fn wire_count(&self) -> usize {
        self.inner.wire_count
    }

    #[getter]
    fn points(&self) -> usize {
        self.inner.points
    }

    fn fringe_spacing(&self) -> f64 {
        self.inner.fringe_spacing()
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(err)
    }

    fn wire_centers(&self) -> PyResult<Vec<f64>> {
        afshar::wire_centers(&self.inner).map_err(err)
    }

    /// Interception by the same wires over the fringe-free intensity.
    fn reference_interception(&self) -> PyResult<f64> {
        let wires = afshar::wire_centers(&self.inner).map_err(err)?;
        afshar::reference_interception(&self.inner, &wires).map_err(err)
    }
}

fn float_field<'a>(c: &'a mut AfsharConfig, name: &str) -> PyResult<&'a mut f64> {
    Ok(match name {
        "pinhole_separation" => &mut c.pinhole_separation,
        "pinhole_width" => &mut c.pinhole_width,
        "carrier_wavenumber" => &mut c.carrier_wavenumber,
        "grid_time" => &mut c.grid_time,
        "lens_time" => &mut c.lens_time,
        "image_time" => &mut c.image_time,
        "focal_length" => &mut c.focal_length,
        "wire_width" => &mut c.wire_width,
        "x_min" => &mut c.x_min,
        "x_max" => &mut c.x_max,
        "mass" => &mut c.mass,
        "hbar" => &mut c.hbar,
        "dt" => &mut c.dt,
        "absorber_strength" => &mut c.absorber_strength,
        "absorber_fraction" => &mut c.absorber_fraction,
        other => return Err(pyo3::exceptions::PyAttributeError::new_err(format!("no field {other:?}"))),
    })
}

/// Runs one stage (`"i"`, `"ii"` or `"iii"`) and returns its scalars and
/// image profile as a dict.
#[pyfunction]
#[pyo3(signature = (config, stage, trajectories=0, seed=0, snapshot_every=0.05))]
fn run_stage<'py>(
    py: Python<'py>,
    config: &PyAfsharConfig,
    stage: &str,
    trajectories: usize,
    seed: u64,
    snapshot_every: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let stage: Stage = stage.parse().map_err(err)?;
    let opts = (trajectories > 0).then_some(TrajectoryOptions { count: trajectories, seed, snapshot_every });
    let cfg = config.inner.clone();
    let r = py.detach(|| afshar::run_stage(&cfg, stage, opts.as_ref())).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("stage", stage.to_string())?;
    d.set_item("interception", r.interception)?;
    d.set_item("boundary_loss", r.boundary_loss)?;
    d.set_item("wire_centers", r.wire_centers.clone())?;
    d.set_item("lobe_fluxes", r.fluxes.to_vec())?;
    d.set_item("flux_balance", r.flux_balance())?;
    d.set_item("image_x", r.image_x.clone())?;
    d.set_item("image", r.image.clone())?;
    if let Some(ens) = &r.trajectories {
        d.set_item("intercepted_fraction", ens.intercepted_fraction())?;
        d.set_item("which_path_correlation", afshar::which_path_correlation(&r).ok())?;
        let finals: Vec<f64> = ens.trajectories.iter().map(|t| t.last()[0]).collect();
        d.set_item("final_positions", finals)?;
    }
    Ok(d)
}

fn amplitudes(a: f64, b: f64) -> PyResult<TwoWaveAmplitudes> {
    TwoWaveAmplitudes::new(a, b).map_err(err)
}

#[pyfunction]
fn visibility(a: f64, b: f64) -> PyResult<f64> {
    Ok(duality::visibility(&amplitudes(a, b)?))
}

#[pyfunction]
fn distinguishability(a: f64, b: f64) -> PyResult<f64> {
    Ok(duality::distinguishability(&amplitudes(a, b)?))
}

/// `K² + V²` for two-wave amplitudes.
#[pyfunction]
fn duality_identity(a: f64, b: f64) -> PyResult<f64> {
    Ok(duality::duality_identity(&amplitudes(a, b)?))
}

/// Returns `(verdict, margin)` for `K² + V² ≤ 1`.
#[pyfunction]
fn englert_check(v: f64, k: f64) -> PyResult<(String, f64)> {
    let c = duality::englert_check(v, k).map_err(err)?;
    let verdict = match c.verdict {
        duality::Verdict::Satisfied => "satisfied",
        duality::Verdict::Saturated => "saturated",
        duality::Verdict::Violated => "violated",
    };
    Ok((verdict.to_string(), c.margin))
}

/// Lower bound on wire-plane visibility from interception with and without fringes.
#[pyfunction]
fn inferred_visibility(interception: f64, reference_interception: f64) -> PyResult<f64> {
    Ok(duality::inferred_visibility(interception, reference_interception).map_err(err)?.visibility_bound)
}

/// One seeded GRW run. Returns `jumps` as `(t, particle, x, norm_factor)`
/// tuples, `energies` as `(t, E)` and the `final` field.
#[pyfunction]
#[pyo3(signature = (psi, rate, localization, duration, seed, dt=0.01))]
fn grw_simulate<'py>(
    py: Python<'py>,
    psi: &PyWaveField,
    rate: f64,
    localization: f64,
    duration: f64,
    seed: u64,
    dt: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let params = GrwParams::new(rate, localization).map_err(err)?;
    let field = psi.inner.clone();
    let run = py
        .detach(|| {
            let v = PotentialField::zero(field.grid());
            grw::simulate(&field, &params, duration, &v, seed, &GrwOptions { dt, ..GrwOptions::default() })
        })
        .map_err(err)?;
    let d = PyDict::new(py);
    let jumps: Vec<(f64, usize, f64, f64)> =
        run.jumps.iter().map(|j| (j.time, j.particle, j.center, j.norm_factor)).collect();
    let energies: Vec<(f64, f64)> = run.energies.iter().map(|e| (e.time, e.energy)).collect();
    d.set_item("jumps", jumps)?;
    d.set_item("energies", energies)?;
    d.set_item("final", PyWaveField { inner: run.final_field })?;
    Ok(d)
}

/// Jump-centre probability density for particle 0, on the field's grid.
#[pyfunction]
fn jump_density(psi: &PyWaveField, localization: f64) -> PyResult<Vec<f64>> {
    Ok(grw::jump_density(&psi.inner, 0, localization).map_err(err)?.values)
}

/// Packet synthesized from a Gaussian spectrum of width `spectral_width` about `wavenumber`.
#[pyfunction]
#[pyo3(signature = (x_min, x_max, points, center, wavenumber, spectral_width, mass=1.0, hbar=1.0))]
#[allow(clippy::too_many_arguments)]
fn gaussian_spectrum_packet(
    x_min: f64,
    x_max: f64,
    points: usize,
    center: f64,
    wavenumber: f64,
    spectral_width: f64,
    mass: f64,
    hbar: f64,
) -> PyResult<PyWaveField> {
    let grid = make_grid(x_min, x_max, points, 1).map_err(err)?;
    let phi = packet::gaussian_spectrum(&grid, center, wavenumber, spectral_width, mass, hbar).map_err(err)?;
    Ok(PyWaveField { inner: packet::synthesize(&phi) })
}

#[pymodule]
fn pilotwave_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PilotwaveError", m.py().get_type::<PilotwaveError>())?;
    m.add("__version__", pilotwave::VERSION)?;
    m.add_class::<PyWaveField>()?;
    m.add_class::<PyAfsharConfig>()?;
    m.add_function(wrap_pyfunction!(run_stage, m)?)?;
    m.add_function(wrap_pyfunction!(visibility, m)?)?;
    m.add_function(wrap_pyfunction!(distinguishability, m)?)?;
    m.add_function(wrap_pyfunction!(duality_identity, m)?)?;
    m.add_function(wrap_pyfunction!(englert_check, m)?)?;
    m.add_function(wrap_pyfunction!(inferred_visibility, m)?)?;
    m.add_function(wrap_pyfunction!(grw_simulate, m)?)?;
    m.add_function(wrap_pyfunction!(jump_density, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_spectrum_packet, m)?)?;
    Ok(())
}
