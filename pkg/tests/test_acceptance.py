"""End-to-end acceptance gate.

Eight criteria cover band-parameter extraction, the Stark-shifted
resonance, closed-form-versus-integrator agreement, the short-time
propagator oracles, conservation laws, figure regeneration, and
determinism. Each test prints one PASS/FAIL line with the measured
numbers and then asserts the pinned tolerances.

Two clauses fail deliberately and are left failing rather than widened:
the extracted depth-4 dipole element lands 2.1e-4 outside its nominal
tolerance band (criterion 1), and near-resonant strong-coupling draws
genuinely break the first-order short-time bound (criterion 4). The
decision history for both lives outside the repository.
"""

import math
import time

import numpy as np
import pytest
from scipy.integrate import dblquad

from lzsim.dynamics import EvolutionConfig, evolve_k, floquet_average, occupation_series
from lzsim.lattice import BandParameters, LatticeSpec, extract_params
from lzsim.magnus import chi, first_order_propagator, pb_first_order, pb_second_order, psi
from lzsim.model import DriveParameters
from lzsim.numerics import bessel_j_row, quadrature
from lzsim.spectral import mean_occupation_total, resonance_position
from lzsim.sweep import PRESETS, preset_config, read_csv, run_figure, run_sweep

# reference parameter set for the depth-4 cosine lattice, rounded; the
# dipole element uses the extracted value -0.150 rather than the rounded
# -0.14 so that the second-order resonance lands at its published position
REFERENCE = BandParameters(delta=4.39, ja=0.0, jb=-0.682, c0=-0.15)


def report(n: int, label: str, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"\nACCEPTANCE {n} ({label}): {status} [{detail}]", flush=True)


@pytest.fixture(scope="module")
def figure_dir(tmp_path_factory):
    """Run every preset once; criteria 7 and 8 share the outputs."""
    out = tmp_path_factory.mktemp("figures")
    timings = {}
    for name in PRESETS:
        t0 = time.perf_counter()
        run_figure(name, out)
        timings[name] = time.perf_counter() - t0
    return out, timings


def test_criterion_1_band_parameter_extraction():
    t0 = time.perf_counter()
    bands = extract_params(LatticeSpec(4.0))
    dt = time.perf_counter() - t0
    ok = (dt < 10.0
          and abs(bands.delta - 4.39) <= 0.02
          and abs(bands.j - (-0.682)) <= 0.01
          and abs(bands.c0 - (-0.14)) <= 0.01)
    report(1, "band parameters from the depth-4 lattice", ok,
           f"delta={bands.delta:.6f} j={bands.j:.6f} c0={bands.c0:.6f} "
           f"in {dt:.2f}s")
    assert dt < 10.0
    assert bands.delta == pytest.approx(4.39, abs=0.02)
    assert bands.j == pytest.approx(-0.682, abs=0.01)
    # extracted value is -0.15021: misses the +-0.01 band by 2.1e-4.
    # Kept as an honest failure instead of widening the band.
    assert bands.c0 == pytest.approx(-0.14, abs=0.01)


def test_criterion_2_resonance_stark_shift():
    t0 = time.perf_counter()
    sol = resonance_position(REFERENCE, 2)
    dt_analytic = time.perf_counter() - t0

    t0 = time.perf_counter()
    grid = np.linspace(0.44, 0.46, 81)
    averages = [floquet_average(DriveParameters(REFERENCE, force=1.0 / x),
                                periods=500) for x in grid]
    peak = float(grid[int(np.argmax(averages))])
    dt_numeric = time.perf_counter() - t0

    target = 1.0 / 2.22070
    ok = (dt_analytic < 1.0 and dt_numeric < 600.0
          and abs(sol.force - 2.22067) <= 5e-4
          and abs(peak - target) <= 2e-3)
    report(2, "second-order resonance position", ok,
           f"analytic {sol.force:.6f} ({dt_analytic:.3f}s), numeric peak "
           f"{peak:.6f} vs {target:.6f} ({dt_numeric:.1f}s)")
    assert dt_analytic < 1.0
    assert sol.force == pytest.approx(2.22067, abs=5e-4)
    assert dt_numeric < 600.0
    assert peak == pytest.approx(target, abs=2e-3)


def test_criterion_3_long_time_curve_agreement():
    t0 = time.perf_counter()
    bands = extract_params(LatticeSpec(4.0))
    centers = [1.0 / resonance_position(bands, m).force for m in (2, 3, 4)]
    points = np.linspace(0.3, 1.1, 40)
    keep = np.ones(points.size, dtype=bool)
    for c in centers:
        keep &= np.abs(points - c) > 0.01
    deviations = []
    for x in points[keep]:
        numeric = floquet_average(DriveParameters(bands, force=1.0 / x),
                                  periods=500)
        analytic = mean_occupation_total(bands, 1.0 / x)
        deviations.append(abs(math.log10(numeric / analytic)))
    deviations = np.array(deviations)
    dt = time.perf_counter() - t0
    ok = (dt < 1800.0 and deviations.max() <= 0.5
          and np.median(deviations) <= 0.2)
    report(3, "long-time average vs closed form", ok,
           f"{keep.sum()} points, max |log10 ratio| {deviations.max():.3f}, "
           f"median {np.median(deviations):.3f}, {dt:.1f}s")
    assert dt < 1800.0
    assert deviations.max() <= 0.5
    assert np.median(deviations) <= 0.2


def test_criterion_4_short_time_propagator_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    max_errors, second_wins = [], 0
    for _ in range(20):
        delta = rng.uniform(1.0, 6.0)
        j = rng.uniform(-1.0, 0.0)
        c0 = rng.uniform(-0.25, -0.05)
        force = rng.uniform(0.5, 3.0)
        p = DriveParameters(BandParameters(delta=delta, ja=0.0, jb=j, c0=c0),
                            force=force)
        horizon = 2.0 * p.t_bloch
        series = occupation_series(
            p, EvolutionConfig(t_final=horizon, tol=1e-9,
                               sample_dt=horizon / 128))
        ts, exact = series.times[1:], series.values[1:]
        err1 = np.abs([pb_first_order(p, t) for t in ts] - exact)
        err2 = np.abs([pb_second_order(p, t) for t in ts] - exact)
        max_errors.append(err1.max())
        if err2.mean() <= err1.mean():
            second_wins += 1
    dt = time.perf_counter() - t0
    worst = max(max_errors)
    n_over = sum(e > 0.05 for e in max_errors)
    ok = dt < 120.0 and worst <= 0.05 and second_wins >= 15
    report(4, "first and second order vs integrator", ok,
           f"worst max-error {worst:.3f} ({n_over}/20 draws over 0.05), "
           f"second-order wins {second_wins}/20, {dt:.1f}s")
    assert dt < 120.0
    assert second_wins >= 15
    # near-resonant strong-coupling draws genuinely exceed the 0.05
    # first-order bound (about 1 in 8 of the box by volume); kept as an
    # honest failure instead of reshaping the draw box or the seed.
    assert worst <= 0.05


def test_criterion_5_phase_integral_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst_chi, worst_psi = 0.0, 0.0
    for _ in range(100):
        delta = rng.uniform(0.5, 6.0)
        force = rng.uniform(0.7, 2.5)
        j = rng.uniform(-3.0, 3.0)
        t = rng.uniform(0.5, 12.0)
        p = DriveParameters(
            BandParameters(delta=delta, ja=0.0, jb=j, c0=-0.1), force=force)

        def phase(u):
            return delta * u - (j / force) * np.sin(force * u)

        direct = quadrature(lambda u: np.exp(1j * phase(u)), 0.0, t,
                            tol=1e-10)
        worst_chi = max(worst_chi, abs(chi(p, t) - direct))
        nested, _ = dblquad(lambda t2, t1: np.sin(phase(t2) - phase(t1)),
                            0.0, t, 0.0, lambda t1: t1,
                            epsabs=1e-9, epsrel=1e-9)
        worst_psi = max(worst_psi, abs(psi(p, t) - nested))
    dt = time.perf_counter() - t0
    ok = dt < 120.0 and worst_chi <= 1e-8 and worst_psi <= 1e-6
    report(5, "phase integrals vs adaptive quadrature", ok,
           f"chi {worst_chi:.2e}, psi {worst_psi:.2e}, {dt:.1f}s")
    assert dt < 120.0
    assert worst_chi <= 1e-8
    assert worst_psi <= 1e-6


def test_criterion_6_conservation_suite():
    t0 = time.perf_counter()
    p = DriveParameters(REFERENCE, force=2.0)
    horizon = 100.0 * p.t_bloch
    trajectory = evolve_k(
        p, EvolutionConfig(t_final=horizon, tol=1e-9,
                           sample_dt=p.t_bloch))[0]
    norms = np.sum(np.abs(trajectory.states) ** 2, axis=1)
    drift = np.abs(norms - 1.0).max()

    u1 = first_order_propagator(p, 7.3)
    unitarity = np.abs(u1 @ u1.conj().T - np.eye(2)).max()

    completeness = 0.0
    for x in (0.3, 1.7, 6.4, 19.5):
        row = bessel_j_row(60, x)
        completeness = max(
            completeness, abs(row[0] ** 2 + 2.0 * np.sum(row[1:] ** 2) - 1.0))
    dt = time.perf_counter() - t0
    ok = (dt < 60.0 and drift <= 1e-7 and unitarity <= 1e-12
          and completeness <= 1e-10)
    report(6, "norm, unitarity, completeness", ok,
           f"drift {drift:.2e}, unitarity {unitarity:.2e}, "
           f"completeness {completeness:.2e}, {dt:.1f}s")
    assert dt < 60.0
    assert drift <= 1e-7
    assert unitarity <= 1e-12
    assert completeness <= 1e-10


def test_criterion_7_figure_regeneration(figure_dir):
    out, timings = figure_dir
    total = sum(timings.values())

    results = {}
    for name in PRESETS:
        results[name] = read_csv(out / f"{name}_analytic.csv")
        assert results[name].metadata["missing"] == "0", name
    numeric_curve = read_csv(out / "fig2_numeric.csv")
    assert numeric_curve.metadata["missing"] == "0"

    # fan-map ridge contrast: integer columns against half-integer ones
    fan = results["fig1"]
    force = float(fan.metadata["force"])
    column_means = fan.values.mean(axis=1)
    ratios = {}
    for m in (1, 2, 3, 4):
        on = column_means[np.argmin(np.abs(fan.x - m * force))]
        off = column_means[np.argmin(np.abs(fan.x - (m + 0.5) * force))]
        ratios[m] = on / off

    # the depth-4 column of the depth sweep reproduces the force curve
    curve = results["fig2"]
    depth = results["fig3a"]
    column = depth.values[int(np.argmin(np.abs(depth.x - 4.0)))]
    base = np.isin(curve.x, depth.y)
    cut_matches = (int(base.sum()) == depth.y.size
                   and np.array_equal(curve.values[base], column))

    ok = (total < 300.0 and all(r >= 3.0 for r in ratios.values())
          and cut_matches)
    report(7, "figure presets", ok,
           f"zero missing cells, ridge ratios "
           + ", ".join(f"m={m}: {r:.1f}" for m, r in ratios.items())
           + f", depth-4 cut identical: {cut_matches}, total {total:.0f}s")
    assert total < 300.0
    for m, r in ratios.items():
        assert r >= 3.0, f"ridge contrast at order {m}"
    assert cut_matches


def test_criterion_8_determinism_and_parallelism(figure_dir, tmp_path):
    out, _ = figure_dir
    reference = (out / "fig1_analytic.csv").read_bytes()
    t0 = time.perf_counter()
    rerun = run_figure("fig1", tmp_path / "serial", workers=1)
    pooled = run_figure("fig1", tmp_path / "pooled", workers=4)
    dt = time.perf_counter() - t0
    rerun_bytes = rerun["csv_analytic"].read_bytes()
    pooled_bytes = pooled["csv_analytic"].read_bytes()
    ok = (dt < 600.0 and rerun_bytes == reference
          and pooled_bytes == reference)
    report(8, "rerun and worker-count determinism", ok,
           f"rerun identical: {rerun_bytes == reference}, workers-4 "
           f"identical: {pooled_bytes == reference}, {dt:.0f}s")
    assert dt < 600.0
    assert rerun_bytes == reference
    assert pooled_bytes == reference
