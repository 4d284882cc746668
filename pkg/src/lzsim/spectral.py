"""Stark-ladder view of the driven two-band problem.

Tilting a band by a force F turns it into a ladder of localized levels
spaced by F. The interband coupling then splits into discrete channels:
level l of the lower ladder talks to level l - m of the upper one with
strength V_m = C0 F J_m(J/F). Near a degeneracy delta ~ mF the pair forms
an effective two-level system whose second-order level repulsion shifts
the resonance slightly away from delta/m; this module builds that matrix,
finds the shifted resonance force, and evaluates the closed-form mean
occupations (a background Lorentzian in delta/F plus one Lorentzian in
1/F per resonance order).
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .lattice import BandParameters
from .numerics import bessel_j, bessel_j_row, bessel_j_table

__all__ = [
    "DegenerateLevelError",
    "ResonanceSolution",
    "RootBracketError",
    "WannierStarkCoupling",
    "effective_two_level",
    "mean_occupation_nonresonant",
    "mean_occupation_total",
    "rabi_occupation",
    "resonance_position",
    "resonance_position_grid",
    "ws_coupling",
]


class DegenerateLevelError(ValueError):
    """A perturbative denominator vanished; the excluded-index bookkeeping
    no longer matches the levels that are actually degenerate."""


class RootBracketError(RuntimeError):
    """The resonance residual does not change sign over the usable bracket."""


@dataclass(frozen=True)
class WannierStarkCoupling:
    """Coupling channel between ladder levels ``order`` sites apart."""

    order: int
    strength: float


@dataclass(frozen=True)
class ResonanceSolution:
    """Stark-shifted resonance force for one order.

    ``force_uncorrected`` is the bare crossing delta/m; ``force`` solves the
    residual equation including the second-order level repulsion, with
    |residual| at the root below the solver tolerance.
    """

    order: int
    force: float
    force_uncorrected: float
    iterations: int
    residual: float


def _signed_bessel_row(half: int, x: float) -> np.ndarray:
    """J_{-half}..J_{half}(x) using the reflection for negative orders."""
    row = bessel_j_row(half, x)
    signs = np.where(np.arange(1, half + 1) % 2 == 1, -1.0, 1.0)
    return np.concatenate(((row[1:] * signs)[::-1], row))


def _half_width(bands: BandParameters, force: float, n_terms: int | None) -> int:
    floor = math.ceil(abs(bands.j / force)) + 20
    return floor if n_terms is None else max(n_terms, floor)


def ws_coupling(bands: BandParameters, force: float, m: int) -> WannierStarkCoupling:
    """Interladder coupling V_m = C0 F J_m(J/F).

    Parameters
    ----------
    bands : BandParameters
        Static band parameters.
    force : float
        Lattice tilt per site, > 0.
    m : int
        Ladder-site separation; may be negative.
    """
    if force <= 0:
        raise ValueError("force must be positive")
    strength = bands.c0 * force * bessel_j(m, bands.j / force)
    return WannierStarkCoupling(order=int(m), strength=strength)


def effective_two_level(
    bands: BandParameters,
    force: float,
    m: int,
    site: int = 0,
    n_terms: int | None = None,
) -> np.ndarray:
    """Effective 2x2 Hamiltonian of the nearly degenerate ladder pair.

    Couples upper-ladder level ``site - m`` to lower-ladder level ``site``.
    Diagonal entries carry the second-order repulsion from all other
    levels; the off-diagonal is the direct channel V_{-m}. The eigenvalue
    splitting is independent of ``site``, which only shifts both levels by
    a common multiple of the force.

    Raises
    ------
    ValueError
        If the pair is not near degeneracy (|delta - mF| >= F/2).
    DegenerateLevelError
        If a perturbative denominator falls below 1e-12.
    """
    if force <= 0:
        raise ValueError("force must be positive")
    if abs(bands.delta - m * force) >= force / 2:
        raise ValueError(
            f"levels {m} sites apart are not nearly degenerate at F={force:.6g}"
        )
    half = _half_width(bands, force, n_terms)
    coupling = bands.c0 * force * _signed_bessel_row(half, bands.j / force)

    def level(l: int, sign: float) -> float:
        return l * force + sign * bands.delta / 2

    upper = level(site - m, +1.0)
    lower = level(site, -1.0)

    shift_upper = 0.0
    for idx in range(-half, half + 1):
        i = site - m - idx  # keeps the coupling index |idx| within range
        if i == site:
            continue
        den = upper - level(i, -1.0)
        if abs(den) < 1e-12:
            raise DegenerateLevelError(
                f"upper-level denominator vanished at intermediate level {i}"
            )
        shift_upper += coupling[half + idx] ** 2 / den

    shift_lower = 0.0
    for idx in range(-half, half + 1):
        i = site - idx
        if i == site - m:
            continue
        den = lower - level(i, +1.0)
        if abs(den) < 1e-12:
            raise DegenerateLevelError(
                f"lower-level denominator vanished at intermediate level {i}"
            )
        shift_lower += coupling[half + idx] ** 2 / den

    direct = coupling[half - m] if abs(m) <= half else 0.0
    return np.array(
        [
            [upper + shift_upper, direct],
            [direct, lower + shift_lower],
        ]
    )


def _residual(bands: BandParameters, m: int, force: float, half: int) -> float:
    """delta - mF plus twice the second-order repulsion sum."""
    row = _signed_bessel_row(half, bands.j / force)
    orders = np.arange(-half, half + 1)
    keep = orders != m
    terms = row[keep] ** 2 / (bands.delta - orders[keep] * force)
    shift = 2.0 * bands.c0**2 * force**2 * float(np.sum(terms))
    return bands.delta - m * force + shift


_SCAN_POINTS = 33  # bracket pre-scan resolution shared by both solvers
_POLE_GUARD = 5.0  # reject roots within this many margins of a crossing


def resonance_position(
    bands: BandParameters,
    m: int,
    n_terms: int | None = None,
    residual_tol: float = 1e-10,
) -> ResonanceSolution:
    """Solve for the Stark-shifted resonance force of order ``m``.

    Brackets the residual R(F) = delta - mF + 2 C0^2 F^2 sum_{i != m}
    J_i^2(J/F)/(delta - iF) over [0.8, 1.2] * delta/m, shrinking the
    bracket away from the poles at delta/i. The repulsion sum diverges at
    those poles, which can fake extra sign changes hugging them, so the
    bracket is scanned on a fixed grid first and Brent's method runs
    inside the sign-change interval nearest the bare crossing delta/m; a
    converged root that still sits within a few margins of a pole is
    rejected rather than reported.

    Raises
    ------
    RootBracketError
        If the residual has one sign over the whole usable bracket, the
        root's residual misses ``residual_tol``, or the root hugs a pole.
    """
    if m < 1:
        raise ValueError("resonance order must be >= 1")
    if bands.delta <= 0:
        raise ValueError("resonance requires a positive gap")
    seed = bands.delta / m
    lo, hi = 0.8 * seed, 1.2 * seed
    half = _half_width(bands, seed, n_terms)
    # neighboring-order crossings delta/i are poles of the residual; keep
    # the bracket strictly between the two poles flanking the seed
    margin = 1e-3 * seed
    for i in range(1, half + 1):
        if i == m:
            continue
        pole = bands.delta / i
        if lo - margin <= pole <= seed:
            lo = max(lo, pole + margin)
        elif seed < pole <= hi + margin:
            hi = min(hi, pole - margin)

    def fn(force: float) -> float:
        return _residual(bands, m, force, half)

    scan = np.linspace(lo, hi, _SCAN_POINTS)
    values = np.array([fn(f) for f in scan])
    cross = values[:-1] * values[1:] <= 0
    if not np.any(cross):
        raise RootBracketError(
            f"order {m}: residual has one sign on [{lo:.6g}, {hi:.6g}] "
            f"(R(lo)={values[0]:.3g}, R(hi)={values[-1]:.3g})"
        )
    mids = 0.5 * (scan[:-1] + scan[1:])
    k = int(np.argmin(np.where(cross, np.abs(mids - seed), math.inf)))
    root, info = brentq(fn, scan[k], scan[k + 1], xtol=1e-14, rtol=1e-15,
                        maxiter=200, full_output=True, disp=False)
    residual = fn(root)
    if not info.converged or abs(residual) > residual_tol:
        raise RootBracketError(
            f"order {m}: no converged root on [{lo:.6g}, {hi:.6g}] "
            f"(residual {residual:.3g})"
        )
    for i in range(1, half + 1):
        if i != m and abs(root - bands.delta / i) < _POLE_GUARD * margin:
            raise RootBracketError(
                f"order {m}: root {root:.6g} hugs the level crossing at "
                f"delta/{i}, where the repulsion series diverges"
            )
    return ResonanceSolution(
        order=m,
        force=float(root),
        force_uncorrected=seed,
        iterations=int(info.iterations),
        residual=float(residual),
    )


_GRID_CHUNK = 4096  # cells per vectorized bisection batch; fixed so results
# never depend on how a sweep distributes the grid over workers


def resonance_position_grid(
    delta,
    j,
    c0,
    m: int,
    n_terms: int | None = None,
    iterations: int = 48,
    residual_tol: float = 1e-10,
) -> np.ndarray:
    """Resonance forces of order ``m`` over whole parameter arrays.

    Vectorized counterpart of :func:`resonance_position`: the same residual
    is scanned on the same pole-shrunk bracket, and a fixed ``iterations``
    halvings of the sign-change interval nearest the bare crossing pin the
    root down (48 puts the interval width below 1e-15 of the seed). Cells
    whose bracket carries one sign, collapses while dodging poles, whose
    converged residual misses ``residual_tol``, or whose root hugs a pole
    come back NaN instead of raising like the scalar solver does; so do
    cells with a nonfinite or nonpositive gap. Heatmap sweeps lean on this
    to keep per-cell failures from aborting a figure.

    Parameters
    ----------
    delta, j, c0 : array_like
        Band parameters, broadcast against each other.
    m : int
        Resonance order, >= 1.

    Returns
    -------
    ndarray
        Resonance force per cell, in the broadcast shape of the inputs.
    """
    if m < 1:
        raise ValueError("resonance order must be >= 1")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    d, jj, cc = np.broadcast_arrays(
        np.asarray(delta, dtype=float),
        np.asarray(j, dtype=float),
        np.asarray(c0, dtype=float),
    )
    shape = d.shape
    d, jj, cc = d.ravel(), jj.ravel(), cc.ravel()
    out = np.full(d.size, math.nan)
    for start in range(0, d.size, _GRID_CHUNK):
        sl = slice(start, start + _GRID_CHUNK)
        out[sl] = _bisect_chunk(d[sl], jj[sl], cc[sl], m, n_terms,
                                iterations, residual_tol)
    return out.reshape(shape)


def _bisect_chunk(
    d: np.ndarray,
    jj: np.ndarray,
    cc: np.ndarray,
    m: int,
    n_terms: int | None,
    iterations: int,
    residual_tol: float,
) -> np.ndarray:
    """Bisect the resonance residual for one batch of cells."""
    result = np.full(d.size, math.nan)
    ok = np.isfinite(d) & np.isfinite(jj) & np.isfinite(cc) & (d > 0)
    if not np.any(ok):
        return result
    d, jj, cc = d[ok], jj[ok], cc[ok]
    seed = d / m
    lo, hi = 0.8 * seed, 1.2 * seed
    margin = 1e-3 * seed
    floor = np.ceil(np.abs(jj) / seed).astype(int) + 20
    half = int(floor.max())
    if n_terms is not None:
        half = max(n_terms, half)
    for i in range(1, half + 1):
        if i == m:
            continue
        pole = d / i
        near_lo = (lo - margin <= pole) & (pole <= seed)
        lo = np.where(near_lo, np.maximum(lo, pole + margin), lo)
        near_hi = (seed < pole) & (pole <= hi + margin)
        hi = np.where(near_hi, np.minimum(hi, pole - margin), hi)
    orders = np.arange(-half, half + 1)
    kept = orders[orders != m].astype(float)
    signs = np.where(np.arange(1, half + 1) % 2 == 1, -1.0, 1.0)

    def residual(force: np.ndarray) -> np.ndarray:
        rows = bessel_j_table(half, jj / force)
        full = np.concatenate([(rows[:, 1:] * signs)[:, ::-1], rows], axis=1)
        full = full[:, orders != m]
        terms = full**2 / (d[:, None] - kept[None, :] * force[:, None])
        return d - m * force + 2.0 * cc**2 * force**2 * terms.sum(axis=1)

    alive = lo < hi
    # dead cells still ride along through the array math; park them at the
    # seed so every bessel argument stays finite
    lo = np.where(alive, lo, seed)
    hi = np.where(alive, hi, 2.0 * seed)

    frac = np.linspace(0.0, 1.0, _SCAN_POINTS)
    scan = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
    values = np.stack([residual(scan[:, s]) for s in range(_SCAN_POINTS)],
                      axis=1)
    cross = values[:, :-1] * values[:, 1:] <= 0
    alive &= np.all(np.isfinite(values), axis=1) & np.any(cross, axis=1)
    mids = 0.5 * (scan[:, :-1] + scan[:, 1:])
    dist = np.where(cross, np.abs(mids - seed[:, None]), math.inf)
    k = np.argmin(dist, axis=1)
    rows = np.arange(d.size)
    lo, hi = scan[rows, k], scan[rows, k + 1]
    f_lo = values[rows, k]
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        f_mid = residual(mid)
        left = np.sign(f_mid) == np.sign(f_lo)
        lo = np.where(left, mid, lo)
        f_lo = np.where(left, f_mid, f_lo)
        hi = np.where(left, hi, mid)
    root = 0.5 * (lo + hi)
    final = residual(root)
    alive &= np.isfinite(final) & (np.abs(final) <= residual_tol)
    for i in range(1, half + 1):
        if i != m:
            alive &= np.abs(root - d / i) >= _POLE_GUARD * margin
    result[ok] = np.where(alive, root, math.nan)
    return result


def rabi_occupation(bands: BandParameters, force: float, t) -> float:
    """Time-resolved two-level occupation away from ladder resonances.

    (4 V0^2 / (delta^2 + 4 V0^2)) sin^2(sqrt(delta^2 + 4 V0^2) t / 2)
    with V0 = C0 F J_0(J/F); its time average is half the amplitude.
    """
    v0 = ws_coupling(bands, force, 0).strength
    square = bands.delta**2 + 4 * v0**2
    if square == 0.0:
        return 0.0 * np.asarray(t) if np.ndim(t) else 0.0
    amplitude = 4 * v0**2 / square
    return amplitude * np.sin(0.5 * math.sqrt(square) * np.asarray(t)) ** 2


def mean_occupation_nonresonant(bands: BandParameters, force: float) -> float:
    """Background mean occupation 2 V0^2 / (delta^2 + 4 V0^2).

    Equal to (1/2) / (1 + [(delta/F) / (2 C0 J_0(J/F))]^2): the time
    average of :func:`rabi_occupation`.
    """
    v0 = ws_coupling(bands, force, 0).strength
    square = bands.delta**2 + 4 * v0**2
    if square == 0.0:
        return 0.0
    return float(2 * v0**2 / square)


def mean_occupation_total(
    bands: BandParameters,
    force: float,
    m_max: int = 6,
    resonances: Sequence[ResonanceSolution] | None = None,
    running_force: bool = False,
) -> float:
    """Mean occupation: nonresonant background plus resonance Lorentzians.

    Each order m contributes (1/2) g_m^2 / ((1/F - 1/F_m)^2 + g_m^2) with
    half-width g_m = 2 |V_m| / (F delta) in 1/F. By default the width is
    frozen at the resonance center F_m, keeping every peak symmetric in
    1/F; ``running_force=True`` evaluates it at the running force instead.
    The independent-channel sum is clipped at 1.

    Parameters
    ----------
    resonances : tuple of ResonanceSolution, optional
        Precomputed positions; orders above ``m_max`` are ignored. When
        omitted, orders 1..m_max are solved here, skipping any whose
        bracket fails.
    """
    if force <= 0:
        raise ValueError("force must be positive")
    total = mean_occupation_nonresonant(bands, force)
    if m_max < 1:
        return total
    if resonances is None:
        resonances = []
        for m in range(1, m_max + 1):
            try:
                resonances.append(resonance_position(bands, m))
            except RootBracketError:
                continue
    for sol in resonances:
        if sol.order > m_max:
            continue
        f_eval = force if running_force else sol.force
        v_m = ws_coupling(bands, f_eval, sol.order).strength
        gamma = 2 * abs(v_m) / (f_eval * bands.delta)
        if gamma == 0.0:
            continue
        detuning = 1.0 / force - 1.0 / sol.force
        total += 0.5 * gamma**2 / (detuning**2 + gamma**2)
    return min(total, 1.0)
