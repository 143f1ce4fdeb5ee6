//! Scenario configuration.
//!
//! A config is a sectioned `key = value` file in TOML syntax. Keys are read
//! through [`Reader`], which doubles as the schema: every key the loader asks
//! for is known, anything else in the file is reported as unknown.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use pilotwave::afshar::{imaging_focal_length, AfsharConfig, OpenSlits};
use pilotwave::classical::{LimitScenario, SweepConfig};
use pilotwave::grw::{GrwParams, PhysicalUnits};
use serde::Serialize;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

pub const SCHEMA_VERSION: i64 = 1;

/// Schema problems found in a config file. Unknown keys are warnings.
#[derive(Debug, Default, Clone, PartialEq, Serialize)]
pub struct Report {
    pub unknown: Vec<String>,
    pub missing: Vec<String>,
    pub invalid: Vec<String>,
}

impl Report {
    pub fn has_errors(&self) -> bool {
        !self.missing.is_empty() || !self.invalid.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.unknown.is_empty() && !self.has_errors()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for k in &self.unknown {
            let _ = writeln!(s, "warning: unknown key {k}");
        }
        for k in &self.missing {
            let _ = writeln!(s, "error: missing key {k}");
        }
        for m in &self.invalid {
            let _ = writeln!(s, "error: {m}");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySettings {
    pub count: usize,
    pub snapshot_every: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoubleSlitSettings {
    pub duration: f64,
    pub sample_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum GrwUnits {
    Simulation { rate: f64, localization: f64 },
    Physical(PhysicalUnits),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrwSettings {
    pub units: GrwUnits,
    pub duration: f64,
    pub runs: usize,
    pub dt: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    pub mass: f64,
    pub packet_width: f64,
    /// Zero for a single packet, otherwise an equal superposition at `±branch_offset`.
    pub branch_offset: f64,
}

impl GrwSettings {
    pub fn params(&self) -> pilotwave::Result<GrwParams> {
        match self.units {
            GrwUnits::Simulation { rate, localization } => GrwParams::new(rate, localization),
            GrwUnits::Physical(units) => GrwParams::standard(units),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualitySettings {
    /// Second-wave amplitudes; the first wave has amplitude 1.
    pub second_amplitudes: Vec<f64>,
    pub pointer_width: f64,
    pub separations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalSettings {
    pub scenario: LimitScenario,
    pub masses: Vec<f64>,
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PacketSettings {
    pub center: f64,
    pub wavenumber: f64,
    pub spectral_width: f64,
    pub time: f64,
    pub dt: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabConfig {
    pub seed: u64,
    pub afshar: AfsharConfig,
    pub trajectories: TrajectorySettings,
    pub doubleslit: DoubleSlitSettings,
    pub grw: GrwSettings,
    pub duality: DualitySettings,
    pub classical: ClassicalSettings,
    pub packet: PacketSettings,
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: LabConfig,
    pub report: Report,
    /// Hex SHA-256 of the file bytes.
    pub hash: String,
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read config {path}: {source}")]
    Unreadable { path: String, source: std::io::Error },
    #[error("config {path} is not valid key = value syntax: {message}")]
    Syntax { path: String, message: String },
}

pub fn load(path: &Path) -> Result<Loaded, LoadError> {
    let bytes =
        std::fs::read(path).map_err(|source| LoadError::Unreadable { path: path.display().to_string(), source })?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|e| LoadError::Syntax { path: path.display().to_string(), message: e.to_string() })?;
    let (config, report) =
        parse(&text).map_err(|message| LoadError::Syntax { path: path.display().to_string(), message })?;
    Ok(Loaded { config, report, hash: format!("{:x}", Sha256::digest(&bytes)) })
}

/// Parses and checks a config. Fields that are missing or invalid hold NaN
/// or a default; the report says which.
pub fn parse(text: &str) -> Result<(LabConfig, Report), String> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| e.message().to_string())?;
    let mut r = Reader { table: &table, seen: BTreeSet::new(), report: Report::default() };

    let version = r.integer("", "schema_version", None);
    if let Some(v) = version {
        if v != SCHEMA_VERSION {
            r.invalid("", "schema_version", format!("unsupported version {v}, expected {SCHEMA_VERSION}"));
        }
    }
    let seed = r.integer("", "seed", Some(0)).unwrap_or(0);
    if seed < 0 {
        r.invalid("", "seed", format!("must be non-negative, got {seed}"));
    }

    let afshar = read_afshar(&mut r);
    let trajectories = TrajectorySettings {
        count: r.count("trajectories", "count", Some(0)),
        snapshot_every: r.float("trajectories", "snapshot_every", Some(0.05)),
    };
    r.positive("trajectories", "snapshot_every", trajectories.snapshot_every);

    let doubleslit = DoubleSlitSettings {
        duration: r.float("doubleslit", "duration", Some(60.0)),
        sample_times: r.floats("doubleslit", "sample_times", Some(&[12.0, 24.0, 36.0, 48.0, 60.0])),
    };
    r.positive("doubleslit", "duration", doubleslit.duration);
    let ascending = doubleslit.sample_times.windows(2).all(|w| w[0] < w[1]);
    let inside = doubleslit.sample_times.iter().all(|&t| t > 0.0 && t <= doubleslit.duration);
    if doubleslit.sample_times.is_empty() || !ascending || !inside {
        r.invalid("doubleslit", "sample_times", "must be a non-empty ascending list inside (0, duration]".into());
    }

    let grw = read_grw(&mut r);
    let duality = read_duality(&mut r);
    let classical = read_classical(&mut r);
    let packet = read_packet(&mut r);

    r.collect_unknown();
    let config =
        LabConfig { seed: seed.max(0) as u64, afshar, trajectories, doubleslit, grw, duality, classical, packet };
    Ok((config, r.report))
}

fn read_afshar(r: &mut Reader) -> AfsharConfig {
    let g = "grid";
    let a = "afshar";
    let mut c = AfsharConfig {
        x_min: r.float(g, "x_min", None),
        x_max: r.float(g, "x_max", None),
        points: r.count(g, "points", None),
        dt: r.float(g, "dt", None),
        absorber_strength: r.float(g, "absorber_strength", Some(1.0)),
        absorber_fraction: r.float(g, "absorber_fraction", Some(0.1)),
        mass: r.float(g, "mass", Some(1.0)),
        hbar: r.float(g, "hbar", Some(1.0)),
        pinhole_separation: r.float(a, "pinhole_separation", None),
        pinhole_width: r.float(a, "pinhole_width", None),
        carrier_wavenumber: r.float(a, "carrier_wavenumber", None),
        grid_time: r.float(a, "grid_time", None),
        lens_time: r.float(a, "lens_time", None),
        image_time: r.float(a, "image_time", None),
        focal_length: f64::NAN,
        wire_count: r.count(a, "wire_count", None),
        wire_width: f64::NAN,
        open_slits: OpenSlits::Both,
        grid_present: r.boolean(a, "grid_present", Some(true)),
    };
    let slits = r.text(a, "open_slits", Some("both"));
    match slits.parse() {
        Ok(s) => c.open_slits = s,
        Err(e) => r.invalid(a, "open_slits", e.to_string()),
    }

    r.grid_extent(g, c.x_min, c.x_max, c.points);
    for (key, v) in [("dt", c.dt), ("mass", c.mass), ("hbar", c.hbar)] {
        r.positive(g, key, v);
    }
    if c.absorber_strength < 0.0 {
        r.invalid(g, "absorber_strength", format!("must be non-negative, got {}", c.absorber_strength));
    }
    if !(0.0..0.5).contains(&c.absorber_fraction) && !c.absorber_fraction.is_nan() {
        r.invalid(g, "absorber_fraction", format!("must lie in [0, 0.5), got {}", c.absorber_fraction));
    }
    for (key, v) in [
        ("pinhole_separation", c.pinhole_separation),
        ("pinhole_width", c.pinhole_width),
        ("carrier_wavenumber", c.carrier_wavenumber),
        ("grid_time", c.grid_time),
    ] {
        r.positive(a, key, v);
    }
    if !(c.grid_time < c.lens_time && c.lens_time < c.image_time)
        && [c.grid_time, c.lens_time, c.image_time].iter().all(|t| !t.is_nan())
    {
        r.invalid(
            a,
            "lens_time",
            format!(
                "need grid_time < lens_time < image_time, got {} / {} / {}",
                c.grid_time, c.lens_time, c.image_time
            ),
        );
    }
    if c.pinhole_separation < 4.0 * c.pinhole_width {
        r.invalid(
            a,
            "pinhole_separation",
            format!("{} must be at least 4 × pinhole_width = {}", c.pinhole_separation, 4.0 * c.pinhole_width),
        );
    }
    if r.present(a, "wire_count") && c.wire_count == 0 {
        r.invalid(a, "wire_count", "must be at least 1".into());
    }

    c.focal_length = match r.optional_float(a, "focal_length") {
        Some(f) => f,
        None => imaging_focal_length(c.carrier_wavenumber, c.lens_time, c.image_time, c.mass, c.hbar),
    };
    r.positive(a, "focal_length", c.focal_length);

    let spacing = c.fringe_spacing();
    let absolute = r.optional_float(a, "wire_width");
    let fraction = r.optional_float(a, "wire_width_fraction");
    let (key, width) = match (absolute, fraction) {
        (Some(_), Some(_)) => {
            r.invalid(a, "wire_width", "give either wire_width or wire_width_fraction, not both".into());
            ("wire_width", f64::NAN)
        }
        (Some(w), None) => ("wire_width", w),
        (None, Some(f)) => ("wire_width_fraction", f * spacing),
        (None, None) => {
            r.missing(a, "wire_width_fraction");
            ("wire_width_fraction", f64::NAN)
        }
    };
    c.wire_width = width;
    if spacing.is_finite() && !width.is_nan() && !(width > 0.0 && width < spacing) {
        r.invalid(
            a,
            key,
            format!(
                "wire width {width} must lie in (0, fringe spacing) where fringe spacing = 2π·hbar·grid_time/(mass·pinhole_separation) = {spacing}"
            ),
        );
    }

    if !r.report.has_errors() {
        if let Err(e) = c.validate() {
            r.report.invalid.push(format!("afshar: {e}"));
        }
    }
    c
}

fn read_grw(r: &mut Reader) -> GrwSettings {
    let s = "grw";
    let kind = r.text(s, "units", Some("simulation"));
    let rate = r.float(s, "rate", Some(1.0));
    let localization = r.float(s, "localization", Some(1.0));
    let length_cm = r.optional_float(s, "length_unit_cm");
    let time_s = r.optional_float(s, "time_unit_s");
    let units = match kind.as_str() {
        "simulation" => {
            if rate < 0.0 {
                r.invalid(s, "rate", format!("must be non-negative, got {rate}"));
            }
            r.positive(s, "localization", localization);
            GrwUnits::Simulation { rate, localization }
        }
        "physical" => {
            let mut scale = |key: &str, v: Option<f64>| match v {
                Some(x) => {
                    r.positive(s, key, x);
                    x
                }
                None => {
                    r.missing(s, key);
                    f64::NAN
                }
            };
            let length_cm = scale("length_unit_cm", length_cm);
            let time_s = scale("time_unit_s", time_s);
            GrwUnits::Physical(PhysicalUnits { length_cm, time_s })
        }
        other => {
            r.invalid(s, "units", format!("must be \"simulation\" or \"physical\", got {other:?}"));
            GrwUnits::Simulation { rate, localization }
        }
    };
    let g = GrwSettings {
        units,
        duration: r.float(s, "duration", Some(10.0)),
        runs: r.count(s, "runs", Some(4)),
        dt: r.float(s, "dt", Some(0.1)),
        x_min: r.float(s, "x_min", Some(-64.0)),
        x_max: r.float(s, "x_max", Some(64.0)),
        points: r.count(s, "points", Some(1024)),
        mass: r.float(s, "mass", Some(1.0)),
        packet_width: r.float(s, "packet_width", Some(2.0)),
        branch_offset: r.float(s, "branch_offset", Some(0.0)),
    };
    for (key, v) in [("duration", g.duration), ("dt", g.dt), ("mass", g.mass), ("packet_width", g.packet_width)] {
        r.positive(s, key, v);
    }
    if g.runs == 0 && r.present(s, "runs") {
        r.invalid(s, "runs", "must be at least 1".into());
    }
    if g.branch_offset < 0.0 {
        r.invalid(s, "branch_offset", format!("must be non-negative, got {}", g.branch_offset));
    }
    r.grid_extent(s, g.x_min, g.x_max, g.points);
    g
}

fn read_duality(r: &mut Reader) -> DualitySettings {
    let s = "duality";
    let d = DualitySettings {
        second_amplitudes: r.floats(s, "second_amplitudes", Some(&[1.0, 0.8, 0.5, 0.2, 0.05, 0.0])),
        pointer_width: r.float(s, "pointer_width", Some(1.0)),
        separations: r.floats(s, "separations", Some(&[0.0, 1.0, 2.0, 4.0, 8.0, 16.0])),
    };
    if d.second_amplitudes.iter().any(|&b| !(b >= 0.0 && b.is_finite())) {
        r.invalid(s, "second_amplitudes", "amplitudes must be finite and non-negative".into());
    }
    r.positive(s, "pointer_width", d.pointer_width);
    if d.separations.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
        r.invalid(s, "separations", "separations must be finite and non-negative".into());
    }
    d
}

fn read_classical(r: &mut Reader) -> ClassicalSettings {
    let s = "classical";
    let name = r.text(s, "scenario", Some("double-slit"));
    let sigma = r.float(s, "sigma", Some(1.0));
    let start = r.float(s, "start", Some(1.0));
    let separation = r.float(s, "separation", Some(10.0));
    let trajectories = r.count(s, "trajectories", Some(300));
    let omega = r.float(s, "omega", Some(1.0));
    let displacement = r.float(s, "displacement", Some(2.0));
    let scenario = match name.as_str() {
        "free-gaussian" => LimitScenario::FreeGaussian { sigma, start },
        "coherent-state" => LimitScenario::CoherentState { omega, displacement },
        "double-slit" => LimitScenario::DoubleSlit { separation, sigma, trajectories },
        other => {
            r.invalid(s, "scenario", format!("must be free-gaussian, coherent-state or double-slit, got {other:?}"));
            LimitScenario::DoubleSlit { separation, sigma, trajectories }
        }
    };
    r.positive(s, "sigma", sigma);
    r.positive(s, "omega", omega);
    if matches!(scenario, LimitScenario::DoubleSlit { .. }) && trajectories == 0 {
        r.invalid(s, "trajectories", "double-slit needs at least one trajectory".into());
    }
    let masses = r.floats(s, "masses", Some(&[1.0, 10.0, 100.0]));
    if masses.is_empty() || masses.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
        r.invalid(s, "masses", "must be a non-empty list of positive masses".into());
    }
    let d = SweepConfig::default();
    let sweep = SweepConfig {
        x_min: r.float(s, "x_min", Some(d.x_min)),
        x_max: r.float(s, "x_max", Some(d.x_max)),
        points: r.count(s, "points", Some(d.points)),
        hbar: r.float(s, "hbar", Some(d.hbar)),
        duration: r.float(s, "duration", Some(d.duration)),
        dt: r.float(s, "dt", Some(d.dt)),
        snapshot_every: r.float(s, "snapshot_every", Some(d.snapshot_every)),
        record_every: r.float(s, "record_every", Some(d.record_every)),
        seed: 0,
    };
    r.grid_extent(s, sweep.x_min, sweep.x_max, sweep.points);
    for (key, v) in [
        ("hbar", sweep.hbar),
        ("duration", sweep.duration),
        ("dt", sweep.dt),
        ("snapshot_every", sweep.snapshot_every),
        ("record_every", sweep.record_every),
    ] {
        r.positive(s, key, v);
    }
    ClassicalSettings { scenario, masses, sweep }
}

fn read_packet(r: &mut Reader) -> PacketSettings {
    let s = "packet";
    let p = PacketSettings {
        center: r.float(s, "center", Some(-5.0)),
        wavenumber: r.float(s, "wavenumber", Some(2.0)),
        spectral_width: r.float(s, "spectral_width", Some(0.5)),
        time: r.float(s, "time", Some(5.0)),
        dt: r.float(s, "dt", Some(0.01)),
        x_min: r.float(s, "x_min", Some(-64.0)),
        x_max: r.float(s, "x_max", Some(64.0)),
        points: r.count(s, "points", Some(1024)),
        mass: r.float(s, "mass", Some(1.0)),
    };
    for (key, v) in [("spectral_width", p.spectral_width), ("time", p.time), ("dt", p.dt), ("mass", p.mass)] {
        r.positive(s, key, v);
    }
    r.grid_extent(s, p.x_min, p.x_max, p.points);
    p
}

fn dotted(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

struct Reader<'a> {
    table: &'a Table,
    seen: BTreeSet<String>,
    report: Report,
}

impl<'a> Reader<'a> {
    fn raw(&mut self, section: &str, key: &str) -> Option<&'a Value> {
        self.seen.insert(dotted(section, key));
        let table: &'a Table = self.table;
        let scope = if section.is_empty() { Some(table) } else { table.get(section).and_then(Value::as_table) };
        scope.and_then(|t| t.get(key))
    }

    fn present(&self, section: &str, key: &str) -> bool {
        let scope =
            if section.is_empty() { Some(self.table) } else { self.table.get(section).and_then(Value::as_table) };
        scope.is_some_and(|t| t.contains_key(key))
    }

    fn missing(&mut self, section: &str, key: &str) {
        self.report.missing.push(dotted(section, key));
    }

    fn invalid(&mut self, section: &str, key: &str, message: String) {
        self.report.invalid.push(format!("{}: {message}", dotted(section, key)));
    }

    fn wrong_type(&mut self, section: &str, key: &str, expected: &str, got: &Value) {
        self.invalid(section, key, format!("expected {expected}, got {}", got.type_str()));
    }

    fn optional_float(&mut self, section: &str, key: &str) -> Option<f64> {
        match self.raw(section, key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            other => {
                self.wrong_type(section, key, "a number", other);
                Some(f64::NAN)
            }
        }
    }

    fn float(&mut self, section: &str, key: &str, default: Option<f64>) -> f64 {
        match (self.optional_float(section, key), default) {
            (Some(x), _) => x,
            (None, Some(d)) => d,
            (None, None) => {
                self.missing(section, key);
                f64::NAN
            }
        }
    }

    fn integer(&mut self, section: &str, key: &str, default: Option<i64>) -> Option<i64> {
        match self.raw(section, key) {
            Some(Value::Integer(i)) => Some(*i),
            Some(other) => {
                self.wrong_type(section, key, "an integer", other);
                None
            }
            None => {
                if default.is_none() {
                    self.missing(section, key);
                }
                default
            }
        }
    }

    fn count(&mut self, section: &str, key: &str, default: Option<usize>) -> usize {
        match self.integer(section, key, default.map(|d| d as i64)) {
            Some(i) if i >= 0 => i as usize,
            Some(i) => {
                self.invalid(section, key, format!("must be non-negative, got {i}"));
                0
            }
            None => 0,
        }
    }

    fn boolean(&mut self, section: &str, key: &str, default: Option<bool>) -> bool {
        match self.raw(section, key) {
            Some(Value::Boolean(b)) => *b,
            Some(other) => {
                self.wrong_type(section, key, "true or false", other);
                false
            }
            None => default.unwrap_or_else(|| {
                self.missing(section, key);
                false
            }),
        }
    }

    fn text(&mut self, section: &str, key: &str, default: Option<&str>) -> String {
        match self.raw(section, key) {
            Some(Value::String(s)) => s.clone(),
            Some(other) => {
                self.wrong_type(section, key, "a string", other);
                String::new()
            }
            None => default.map(str::to_string).unwrap_or_else(|| {
                self.missing(section, key);
                String::new()
            }),
        }
    }

    fn floats(&mut self, section: &str, key: &str, default: Option<&[f64]>) -> Vec<f64> {
        match self.raw(section, key) {
            Some(Value::Array(items)) => {
                let parsed: Option<Vec<f64>> = items
                    .iter()
                    .map(|v| match v {
                        Value::Float(x) => Some(*x),
                        Value::Integer(i) => Some(*i as f64),
                        _ => None,
                    })
                    .collect();
                parsed.unwrap_or_else(|| {
                    self.invalid(section, key, "expected a list of numbers".into());
                    Vec::new()
                })
            }
            Some(other) => {
                self.wrong_type(section, key, "a list of numbers", other);
                Vec::new()
            }
            None => default.map(<[f64]>::to_vec).unwrap_or_else(|| {
                self.missing(section, key);
                Vec::new()
            }),
        }
    }

    /// Flags a present, well-typed value that is not strictly positive.
    fn positive(&mut self, section: &str, key: &str, v: f64) {
        if !v.is_nan() && !(v > 0.0 && v.is_finite()) {
            self.invalid(section, key, format!("must be positive, got {v}"));
        }
    }

    fn grid_extent(&mut self, section: &str, x_min: f64, x_max: f64, points: usize) {
        if !x_min.is_nan() && !x_max.is_nan() && !(x_min < x_max) {
            self.invalid(section, "x_max", format!("x_min {x_min} must be below x_max {x_max}"));
        }
        if (self.present(section, "points") || points != 0) && (points < 4 || !points.is_power_of_two()) {
            self.invalid(section, "points", format!("must be a power of two ≥ 4, got {points}"));
        }
    }

    fn collect_unknown(&mut self) {
        for (name, value) in self.table {
            match value.as_table() {
                Some(section) => {
                    for key in section.keys() {
                        let path = dotted(name, key);
                        if !self.seen.contains(&path) {
                            self.report.unknown.push(path);
                        }
                    }
                }
                None if !self.seen.contains(name) => self.report.unknown.push(name.clone()),
                None => {}
            }
        }
    }
}
