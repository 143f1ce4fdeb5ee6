use pilotwave::classical::{deviation_sweep, LimitScenario, SweepConfig};

#[test]
fn free_gaussian_deviation_scales_with_inverse_mass() {
    let sigma = 1.0;
    let cfg = SweepConfig::default();
    let sweep = deviation_sweep(&LimitScenario::FreeGaussian { sigma, start: sigma }, &[1.0, 4.0], &cfg).unwrap();
    // Analytic Bohmian path Q0·σ(t)/σ0 against the resting classical particle.
    for row in &sweep.rows {
        let s = cfg.hbar * cfg.duration / (2.0 * row.mass * sigma * sigma);
        let expected = sigma * ((1.0 + s * s).sqrt() - 1.0);
        assert!((row.max_deviation - expected).abs() < 1e-3 * expected, "{row:?} vs {expected}");
    }
    let ratio = sweep.rows[0].max_deviation / sweep.rows[1].max_deviation;
    assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
    assert!(sweep.rows[0].max_quantum_potential > sweep.rows[1].max_quantum_potential);
}

#[test]
fn coherent_state_centre_is_classical() {
    let cfg = SweepConfig {
        x_min: -8.0,
        x_max: 8.0,
        points: 512,
        duration: 2.0 * std::f64::consts::PI,
        dt: 1e-3,
        snapshot_every: 5e-3,
        record_every: 0.25,
        ..SweepConfig::default()
    };
    let sweep =
        deviation_sweep(&LimitScenario::CoherentState { omega: 1.0, displacement: 2.0 }, &[1.0, 4.0, 16.0], &cfg)
            .unwrap();
    for row in &sweep.rows {
        assert!(row.max_deviation < 1e-4, "{row:?}");
    }
}

#[test]
fn double_slit_never_crosses_at_any_mass() {
    let cfg = SweepConfig {
        x_min: -128.0,
        x_max: 128.0,
        points: 1024,
        duration: 20.0,
        dt: 0.01,
        snapshot_every: 0.02,
        record_every: 0.5,
        ..SweepConfig::default()
    };
    let scenario = LimitScenario::DoubleSlit { separation: 10.0, sigma: 1.0, trajectories: 300 };
    let sweep = deviation_sweep(&scenario, &[1.0, 10.0, 100.0], &cfg).unwrap();
    for row in &sweep.rows {
        assert_eq!(row.inversions, 0, "{row:?}");
    }
    // Same seed, mass-independent density: every rung starts from the same points.
    let starts: Vec<Vec<f64>> =
        sweep.ensembles.iter().map(|e| e.trajectories.iter().map(|t| t.origin()[0]).collect()).collect();
    assert!(starts.windows(2).all(|w| w[0] == w[1]));
    assert!(sweep.rows[2].max_deviation < sweep.rows[0].max_deviation);
    assert_eq!(sweep.to_csv().lines().count(), 4);
}
