"""Exact time evolution of the driven two-band system.

Two gauges of the same dynamics are available: the band gauge evolves the
2x2 Hamiltonian directly, the rotating (off-diagonal) gauge absorbs the
diagonal into the interband phase and leaves a pure coupling equation. The
upper-band occupation |b|^2 is identical in both.

Long-time averages come either from an explicitly sampled series or from a
one-period propagator (Floquet) evaluation that sums the geometric series
over periods in closed form; the two agree to integrator accuracy on shared
sampling and the propagator route is what the parameter sweeps use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import DriveParameters, band_hamiltonian, interband_phase
from .numerics import IntegrationError, integrate_ode

__all__ = [
    "EvolutionConfig",
    "KTrajectory",
    "OccupationSeries",
    "WindowError",
    "evolve_k",
    "floquet_average",
    "long_time_average",
    "occupation_series",
    "one_period_propagators",
]


class WindowError(ValueError):
    """Averaging window too short for the requested guarantees."""


@dataclass(frozen=True)
class EvolutionConfig:
    """How to run an evolution.

    t_final : end time (absolute units; multiply by the Bloch period for
        period counts)
    tol : integrator tolerance
    sample_dt : output sampling step; defaults to one 32nd of the Bloch
        period
    k_grid : quasimomenta to evolve; None means the single k carried by the
        drive parameters
    gauge : "rotating" (off-diagonal form) or "band" (direct form)
    """

    t_final: float
    tol: float = 1e-9
    sample_dt: float | None = None
    k_grid: tuple[float, ...] | None = None
    gauge: str = "rotating"

    def __post_init__(self):
        if not self.t_final > 0.0:
            raise ValueError("t_final must be positive")
        if self.gauge not in ("rotating", "band"):
            raise ValueError("gauge must be 'rotating' or 'band'")


@dataclass(frozen=True)
class KTrajectory:
    """Amplitude pair trajectory at one quasimomentum."""

    k: float
    times: np.ndarray
    states: np.ndarray  # [n_times, 2] complex


@dataclass(frozen=True)
class OccupationSeries:
    """Upper-band occupation versus time, averaged over the k ensemble."""

    times: np.ndarray
    values: np.ndarray


def _band_rhs(p: DriveParameters):
    b = p.bands
    half_gap = 0.5 * b.delta
    coupling = b.c0 * p.force
    ja, jb, k, force = b.ja, b.jb, p.k, p.force

    def rhs(t, y):
        drive = math.cos(k + force * t)
        return -1j * np.array(
            [
                (-half_gap - ja * drive) * y[0] + coupling * y[1],
                coupling * y[0] + (half_gap - jb * drive) * y[1],
            ]
        )

    return rhs


def _rotating_rhs(p: DriveParameters):
    b = p.bands
    coupling = b.c0 * p.force
    delta, j, k, force = b.delta, b.j, p.k, p.force
    sin_k = math.sin(k)

    def rhs(t, y):
        phase = delta * t - (j / force) * (math.sin(k + force * t) - sin_k)
        rot = complex(math.cos(phase), -math.sin(phase))
        return -1j * coupling * np.array([rot * y[1], np.conj(rot) * y[0]])

    return rhs


def evolve_k(p: DriveParameters, cfg: EvolutionConfig) -> list[KTrajectory]:
    """Evolve (a, b) = (1, 0) at each requested quasimomentum.

    Returns one trajectory per k. In the rotating gauge the amplitudes are
    the transformed pair; their moduli match the band-gauge amplitudes, so
    occupations can be read from either.
    """
    ks = (p.k,) if cfg.k_grid is None else tuple(cfg.k_grid)
    dt = cfg.sample_dt if cfg.sample_dt is not None else p.t_bloch / 32.0
    n_samples = int(math.floor(cfg.t_final / dt)) + 1
    t_eval = np.arange(n_samples) * dt
    out = []
    for k in ks:
        pk = replace(p, k=k)
        rhs = _rotating_rhs(pk) if cfg.gauge == "rotating" else _band_rhs(pk)
        try:
            times, states = integrate_ode(
                rhs, np.array([1.0, 0.0], dtype=complex), (0.0, cfg.t_final),
                tol=cfg.tol, t_eval=t_eval,
            )
        except IntegrationError as err:
            raise IntegrationError(
                f"evolution at k={k:.6g} failed at t={err.last_t:.6g}", err.last_t
            ) from err
        out.append(KTrajectory(k, times, states))
    return out


def occupation_series(p: DriveParameters, cfg: EvolutionConfig) -> OccupationSeries:
    """P_b(t): upper-band occupation averaged over the k ensemble.

    Clamped to [0, 1]; raw values stray outside only by integrator drift.
    """
    trajectories = evolve_k(p, cfg)
    values = np.mean(
        [np.abs(tr.states[:, 1]) ** 2 for tr in trajectories], axis=0
    )
    return OccupationSeries(trajectories[0].times, np.clip(values, 0.0, 1.0))


def long_time_average(
    series: OccupationSeries,
    t_min: float = 0.0,
    t_bloch: float | None = None,
    slow_period: float | None = None,
) -> float:
    """Arithmetic mean of the occupation over t >= t_min.

    Pass ``t_bloch`` to enforce the minimum span of 50 Bloch periods, and
    ``slow_period`` (the slowest resolved oscillation, e.g. a resonant Rabi
    period) to require at least 20 of those; either failing raises
    WindowError rather than returning a poorly converged mean.
    """
    mask = series.times >= t_min
    if not np.any(mask):
        raise WindowError("t_min beyond the end of the series")
    span = float(series.times[-1] - t_min)
    if t_bloch is not None and span < 50.0 * t_bloch:
        raise WindowError(f"window {span:.3g} shorter than 50 Bloch periods")
    if slow_period is not None and span < 20.0 * slow_period:
        raise WindowError(
            f"window {span:.3g} covers under 20 periods of the slowest oscillation"
        )
    return float(np.mean(series.values[mask]))


# ---------------------------------------------------------------------------
# One-period propagator route to the long-time average
# ---------------------------------------------------------------------------


def one_period_propagators(
    p: DriveParameters, tol: float = 1e-11, samples_per_period: int = 32
) -> tuple[np.ndarray, np.ndarray]:
    """Propagators over the first Bloch period.

    Returns (phis, monodromy): ``phis[j]`` maps the initial state to time
    j * T_B / samples_per_period, and ``monodromy`` to a full period.
    """
    t_b = p.t_bloch

    def rhs_flat(t, y):
        h = band_hamiltonian(p, t)
        return (-1j * (h @ y.reshape(2, 2))).reshape(4)

    t_eval = np.append(np.arange(samples_per_period) * (t_b / samples_per_period), t_b)
    _, flat = integrate_ode(
        rhs_flat, np.eye(2, dtype=complex).reshape(4), (0.0, t_b),
        tol=tol, t_eval=t_eval,
    )
    mats = flat.reshape(-1, 2, 2)
    return mats[:-1], mats[-1]


def floquet_average(
    p: DriveParameters,
    periods: int = 500,
    tol: float = 1e-11,
    samples_per_period: int = 32,
) -> float:
    """Mean upper-band occupation over ``periods`` Bloch periods.

    Exactly the mean of |b|^2 sampled at samples_per_period points per
    period over n = 0 .. periods-1, starting from the lower band, with the
    sum over periods carried out in closed form through the eigenvalues of
    the one-period propagator. Cost is one period of integration regardless
    of the horizon.
    """
    if periods < 1:
        raise ValueError("periods must be >= 1")
    phis, monodromy = one_period_propagators(p, tol, samples_per_period)
    mus, w = np.linalg.eig(monodromy)
    v = np.linalg.solve(w, np.array([1.0, 0.0], dtype=complex))
    rho = mus[0] * np.conj(mus[1])
    n = periods
    if abs(1.0 - rho) < 1e-14:
        geo = 1.0 + 0.0j
    else:
        geo = (1.0 - rho**n) / (n * (1.0 - rho))
    total = 0.0
    for phi in phis:
        c = (phi @ w)[1, :] * v
        total += (
            abs(c[0]) ** 2
            + abs(c[1]) ** 2
            + 2.0 * (c[0] * np.conj(c[1]) * geo).real
        )
    return float(total / phis.shape[0])
