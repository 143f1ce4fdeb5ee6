//! Scenario runners. Each returns the JSON `results` block and writes its
//! CSV and binary artifacts through [`Artifacts`].

use pilotwave::afshar::{
    reference_interception, run_double_slit, run_stage, which_path_correlation, Stage, TrajectoryOptions,
};
use pilotwave::classical::deviation_sweep;
use pilotwave::duality::{
    contrast_vs_overlap, englert_check, inferred_visibility, DualityReportEntry, TwoWaveAmplitudes,
};
use pilotwave::grid::gaussian_packet;
use pilotwave::grw::{simulate, GrwOptions, GrwRun};
use pilotwave::packet::{
    analyze, gaussian_spectrum, matter_dispersion, position_spread, synthesize, time_extend, uncertainty_product,
    wavenumber_spread,
};
use pilotwave::propagator::{evolve_to_end, EvolutionPlan, PotentialField};
use pilotwave::{io, make_grid, seeds, Complex64, WaveField};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::LabConfig;
use crate::output::Artifacts;
use crate::CliError;

fn profile_csv(header: &str, xs: &[f64], ys: &[f64]) -> String {
    let mut s = format!("{header}\n");
    for (x, y) in xs.iter().zip(ys) {
        s.push_str(&format!("{x},{y}\n"));
    }
    s
}

fn mean_position(psi: &WaveField) -> f64 {
    let d = psi.density();
    let xs = psi.grid().axis(0).points();
    xs.iter().zip(&d).map(|(x, p)| x * p).sum::<f64>() / d.iter().sum::<f64>()
}

pub fn afshar(cfg: &LabConfig, stages: &[Stage], out: &mut Artifacts) -> Result<Value, CliError> {
    let base = seeds::derive(cfg.seed, "afshar");
    let mut summaries = serde_json::Map::new();
    let mut interception = [None; 3];
    let mut wires = Vec::new();
    for &stage in stages {
        let traj = (cfg.trajectories.count > 0).then(|| TrajectoryOptions {
            count: cfg.trajectories.count,
            seed: seeds::derive(base, &format!("stage-{stage}")),
            snapshot_every: cfg.trajectories.snapshot_every,
        });
        let r = run_stage(&cfg.afshar, stage, traj.as_ref())?;
        out.write(
            &format!("afshar_stage_{stage}_image.csv"),
            profile_csv("x,intensity", &r.image_x, &r.image).as_bytes(),
        )?;
        let mut s = json!({
            "open_slits": r.open_slits,
            "grid_present": r.grid_present,
            "wire_centers": r.wire_centers,
            "interception": r.interception,
            "boundary_loss": r.boundary_loss,
            "lobe_fluxes": r.fluxes,
            "lobe_peaks": r.peaks,
            "flux_balance": r.flux_balance(),
            "slit_lobes": r.slit_lobes,
        });
        if let Some(ens) = &r.trajectories {
            out.write(&format!("afshar_stage_{stage}_trajectories.csv"), ens.to_csv().as_bytes())?;
            s["trajectories"] = json!({
                "count": ens.len(),
                "seed": ens.seed,
                "intercepted_fraction": ens.intercepted_fraction(),
                "which_path_correlation": which_path_correlation(&r).ok(),
            });
        }
        let slot = match stage {
            Stage::I => 0,
            Stage::II => 1,
            Stage::III => 2,
        };
        interception[slot] = Some(r.interception);
        if r.grid_present {
            wires = r.wire_centers.clone();
        }
        summaries.insert(stage.to_string(), s);
    }
    let mut results = json!({
        "fringe_spacing": cfg.afshar.fringe_spacing(),
        "wire_width": cfg.afshar.wire_width,
        "focal_length": cfg.afshar.focal_length,
        "stages": summaries,
    });
    if let Some(iii) = interception[2] {
        let reference = reference_interception(&cfg.afshar, &wires)?;
        results["inferred_visibility"] = serde_json::to_value(inferred_visibility(iii, reference)?)?;
        if let Some(ii) = interception[1] {
            results["interception_ratio_ii_over_iii"] = json!(ii / iii);
        }
    }
    Ok(results)
}

pub fn double_slit(cfg: &LabConfig, count: usize, out: &mut Artifacts) -> Result<Value, CliError> {
    if count == 0 {
        return Err(CliError::Config(
            "doubleslit needs at least one trajectory (--trajectories or trajectories.count)".into(),
        ));
    }
    let opts = TrajectoryOptions {
        count,
        seed: seeds::derive(cfg.seed, "doubleslit"),
        snapshot_every: cfg.trajectories.snapshot_every,
    };
    let ds = &cfg.doubleslit;
    let report = run_double_slit(&cfg.afshar, &opts, ds.duration, &ds.sample_times)?;
    out.write("doubleslit_trajectories.csv", report.trajectories.to_csv().as_bytes())?;
    Ok(serde_json::to_value(&report)?)
}

pub fn grw(cfg: &LabConfig, out: &mut Artifacts) -> Result<Value, CliError> {
    let s = &cfg.grw;
    let params = s.params()?;
    let grid = make_grid(s.x_min, s.x_max, s.points, 1)?;
    let psi = if s.branch_offset > 0.0 {
        let a = gaussian_packet(&grid, s.branch_offset, s.packet_width, 0.0, s.mass, 1.0)?;
        let b = gaussian_packet(&grid, -s.branch_offset, s.packet_width, 0.0, s.mass, 1.0)?;
        a.combine(1.0.into(), &b, 1.0.into())?.normalize()?
    } else {
        gaussian_packet(&grid, 0.0, s.packet_width, 0.0, s.mass, 1.0)?
    };
    let potential = PotentialField::zero(&grid);
    let opts = GrwOptions { dt: s.dt, ..GrwOptions::default() };
    let base = seeds::derive(cfg.seed, "grw");
    let runs: Vec<GrwRun> = (0..s.runs as u64)
        .into_par_iter()
        .map(|i| simulate(&psi, &params, s.duration, &potential, seeds::derive_index(base, i), &opts))
        .collect::<pilotwave::Result<_>>()?;

    let mut rows = Vec::with_capacity(runs.len());
    for (i, run) in runs.iter().enumerate() {
        out.write(&format!("grw_run_{i:03}_jumps.csv"), run.jumps_to_csv().as_bytes())?;
        out.write(&format!("grw_run_{i:03}_energy.csv"), run.energy_to_csv().as_bytes())?;
        let (first, last) = (run.energies[0].energy, run.energies.last().expect("energy samples").energy);
        rows.push(json!({
            "seed": run.seed,
            "jumps": run.jumps.len(),
            "end_time": run.end_time,
            "initial_energy": first,
            "final_energy": last,
            "energy_slope": (last - first) / run.end_time,
            "final_mean_position": mean_position(&run.final_field),
        }));
    }
    let n = runs.len().max(1) as f64;
    Ok(json!({
        "params": params,
        "collapse_width": params.collapse_width(),
        "expected_jumps": params.rate * s.duration,
        "expected_energy_slope": params.rate * params.localization / (4.0 * s.mass),
        "mean_jumps": runs.iter().map(|r| r.jumps.len() as f64).sum::<f64>() / n,
        "mean_energy_slope": rows.iter().map(|r| r["energy_slope"].as_f64().unwrap_or(f64::NAN)).sum::<f64>() / n,
        "runs": rows,
    }))
}

pub fn duality_table(cfg: &LabConfig, out: &mut Artifacts) -> Result<Value, CliError> {
    let d = &cfg.duality;
    let mut entries = Vec::new();
    let mut table = String::from("context,visibility,distinguishability,sum_of_squares\n");
    for &b in &d.second_amplitudes {
        let e = DualityReportEntry::from_amplitudes(&format!("amplitudes 1:{b}"), &TwoWaveAmplitudes::new(1.0, b)?);
        table.push_str(&format!("{},{},{},{}\n", e.context, e.visibility, e.distinguishability, e.sum_of_squares));
        entries.push(e);
    }
    out.write("duality_table.csv", table.as_bytes())?;

    // Counter-propagating plane waves give eight full fringes; the pointer
    // grid is wide enough that translated packets never wrap.
    let span = 16.0 * std::f64::consts::PI;
    let g = make_grid(0.0, span, 256, 1)?;
    let first = WaveField::from_fn(g.clone(), 1.0, 1.0, |x, _| Complex64::from_polar(1.0, x));
    let second = WaveField::from_fn(g, 1.0, 1.0, |x, _| Complex64::from_polar(1.0, -x));
    let widest = d.separations.iter().fold(0.0f64, |m, &s| m.max(s));
    let half = 40f64.max(widest + 10.0 * d.pointer_width);
    let points = ((16.0 * half / d.pointer_width).ceil() as usize).next_power_of_two().max(1024);
    let pg = make_grid(-half, half, points, 1)?;
    let pointer = gaussian_packet(&pg, 0.0, d.pointer_width, 0.0, 1.0, 1.0)?;
    let contrast = contrast_vs_overlap(&first, &second, &pointer, &d.separations)?;
    let mut csv = String::from("separation,overlap,visibility\n");
    for r in &contrast {
        csv.push_str(&format!("{},{},{}\n", r.separation, r.overlap, r.visibility));
    }
    out.write("duality_contrast.csv", csv.as_bytes())?;

    let stage = run_stage(&cfg.afshar, Stage::III, None)?;
    let reference = reference_interception(&cfg.afshar, &stage.wire_centers)?;
    let inferred = inferred_visibility(stage.interception, reference)?;
    // A full which-path claim together with the inferred contrast.
    let claim = englert_check(inferred.visibility_bound, 1.0)?;
    Ok(json!({
        "amplitude_table": entries,
        "contrast_vs_overlap": contrast,
        "inferred_visibility": inferred,
        "which_path_claim": { "distinguishability": 1.0, "check": claim },
    }))
}

pub fn classical_sweep(cfg: &LabConfig, out: &mut Artifacts) -> Result<Value, CliError> {
    let c = &cfg.classical;
    let mut sweep_cfg = c.sweep;
    sweep_cfg.seed = seeds::derive(cfg.seed, "classical");
    let sweep = deviation_sweep(&c.scenario, &c.masses, &sweep_cfg)?;
    out.write("classical_sweep.csv", sweep.to_csv().as_bytes())?;
    for (i, ens) in sweep.ensembles.iter().enumerate() {
        out.write(&format!("classical_rung_{i:02}_trajectories.csv"), ens.to_csv().as_bytes())?;
    }
    Ok(json!({
        "scenario": c.scenario,
        "sweep": sweep_cfg,
        "rows": sweep.rows,
    }))
}

pub fn packet_demo(cfg: &LabConfig, out: &mut Artifacts) -> Result<Value, CliError> {
    let p = &cfg.packet;
    let grid = make_grid(p.x_min, p.x_max, p.points, 1)?;
    let phi = gaussian_spectrum(&grid, p.center, p.wavenumber, p.spectral_width, p.mass, 1.0)?;
    let initial = synthesize(&phi);
    let extended = time_extend(&phi, matter_dispersion(p.mass, 1.0), p.time);
    let stepped = evolve_to_end(&initial, &EvolutionPlan::free(p.time, p.dt), &PotentialField::zero(&grid))?;
    let deviation =
        extended.amplitudes().iter().zip(stepped.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);

    out.write("packet_initial.csv", io::field_to_csv(&initial).as_bytes())?;
    out.write("packet_evolved.csv", io::field_to_csv(&extended).as_bytes())?;
    out.write("packet_initial.pwf", &io::encode_field(&initial))?;
    let k = phi.k_grid();
    let mut spectrum = String::from("k,re,im\n");
    for (i, v) in phi.values().iter().enumerate() {
        spectrum.push_str(&format!("{},{},{}\n", k.coords(i)[0], v.re, v.im));
    }
    out.write("packet_spectrum.csv", spectrum.as_bytes())?;

    Ok(json!({
        "norm": initial.norm(),
        "wavenumber_spread": wavenumber_spread(&analyze(&initial))?,
        "initial": {
            "mean_position": mean_position(&initial),
            "position_spread": position_spread(&initial)?,
            "uncertainty_product": uncertainty_product(&initial)?,
        },
        "evolved": {
            "time": p.time,
            "mean_position": mean_position(&extended),
            "expected_mean_position": p.center + p.wavenumber * p.time / p.mass,
            "position_spread": position_spread(&extended)?,
            "uncertainty_product": uncertainty_product(&extended)?,
        },
        "split_step_max_deviation": deviation,
    }))
}
