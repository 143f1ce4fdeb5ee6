"""Smoke test for the pilotwave_py extension.

Build and install first:
    pip install --no-build-isolation ./crates/py
"""

import math

import pilotwave_py as pw


def check(cond, what):
    if not cond:
        raise SystemExit(f"FAIL: {what}")
    print(f"ok: {what}")


def main():
    psi = pw.WaveField.gaussian(-40.0, 40.0, 1024, center=0.0, width=1.0, wavenumber=1.0)
    check(abs(psi.norm() - 1.0) < 1e-12, "gaussian packet is normalized")
    check(len(psi) == 1024 and len(psi.x) == 1024, "grid size")

    stepped = psi.evolve(2.0, dt=0.01)
    exact = psi.time_extend(2.0)
    worst = max(abs(a - b) for a, b in zip(stepped.amplitudes, exact.amplitudes))
    check(worst < 1e-8, f"split-step matches spectral extension ({worst:.1e})")
    check(abs(stepped.position_spread() - math.sqrt(2.0)) < 1e-6, "free spreading width")
    check(psi.uncertainty_product() >= 0.5 - 1e-9, "uncertainty bound")

    back = pw.WaveField.from_bytes(psi.to_bytes())
    check(back.amplitudes == psi.amplitudes, "binary round trip")

    samples = psi.sample_positions(500, seed=3)
    check(samples == psi.sample_positions(500, seed=3), "seeded sampling is deterministic")

    check(abs(pw.duality_identity(0.3, 2.0) - 1.0) < 1e-12, "K^2 + V^2 = 1 for pure two-wave states")
    check(pw.englert_check(0.95, 1.0)[0] == "violated", "full which-path claim with high contrast is flagged")

    cfg = pw.AfsharConfig()
    cfg.validate()
    check(abs(cfg.fringe_spacing() - 8.0 * math.pi) < 1e-12, "canonical fringe spacing")
    stage3 = pw.run_stage(cfg, "iii")
    check(stage3["interception"] <= 0.02, f"stage iii interception {stage3['interception']:.4f}")
    bound = pw.inferred_visibility(stage3["interception"], cfg.reference_interception())
    check(bound > 0.9, f"inferred wire-plane visibility >= {bound:.3f}")

    branches = pw.WaveField(
        -40.0,
        40.0,
        [a + b for a, b in zip(
            pw.WaveField.gaussian(-40.0, 40.0, 1024, center=10.0, width=1.0).amplitudes,
            pw.WaveField.gaussian(-40.0, 40.0, 1024, center=-10.0, width=1.0).amplitudes,
        )],
    ).normalize()
    run = pw.grw_simulate(branches, rate=5.0, localization=1.0, duration=2.0, seed=11, dt=0.05)
    check(len(run["jumps"]) > 0, f"{len(run['jumps'])} collapse events")
    final = run["final"].density()
    right = sum(d for x, d in zip(run["final"].x, final) if x > 0) / sum(final)
    check(right < 1e-6 or right > 1 - 1e-6, "collapse selects one branch")

    try:
        pw.WaveField.gaussian(-1.0, 1.0, 1000, 0.0, 0.1)
    except pw.PilotwaveError as e:
        check("power of two" in str(e) or "grid" in str(e), "bad grid raises PilotwaveError")
    else:
        raise SystemExit("FAIL: non power-of-two grid accepted")

    print(f"pilotwave_py {pw.__version__}: all smoke checks passed")


if __name__ == "__main__":
    main()
