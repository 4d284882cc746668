"""Closed-form interband dynamics from the leading Magnus orders.

Both analytic building blocks are harmonic sums over the drive: the
first-order transfer integral

    chi(t) = integral_0^t exp[i phi(t')] dt'
           = 2 sum_n J_n(J/F) exp(i w_n t / 2) sin(w_n t / 2) / w_n,

with harmonic detunings w_n = delta - n F, and the second-order secular
integral

    psi(t) = integral_0^t dt1 integral_0^t1 dt2 sin[phi(t2) - phi(t1)]
           = sum_{n,m} J_n J_m [S(w_m) - S(w_n - w_m)] / w_n,

where S(w) = sin(w t)/w. Every term here is finite at resonance; the
implementation evaluates the limits continuously instead of switching on
small denominators, except in chi where the kernel 2 sin(w t/2)/w is
replaced by its limit t below a configurable threshold.

The occupation formulas built on top:

    first order   P_b = sin^2(C0 F |chi|)
    second order  P_b = |chi|^2 / (|chi|^2 + (C0 F psi)^2)
                        * sin^2(C0 F sqrt(|chi|^2 + (C0 F psi)^2))

and, at an m-photon resonance, the envelope sin^2(C0 F J_m(J/F) t).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .model import DriveParameters
from .numerics import bessel_j, bessel_j_row

__all__ = [
    "MagnusConfig",
    "chi",
    "first_order_propagator",
    "pb_first_order",
    "pb_second_order",
    "psi",
    "resonant_envelope",
]


@dataclass(frozen=True)
class MagnusConfig:
    """Truncation and resonance handling for the harmonic sums.

    ``n_terms`` is the half-width of the harmonic index range; the sums run
    over |n| <= n_terms. Bessel coefficients J_n(x) die super-exponentially
    once n exceeds x, so the effective half-width never falls below
    ceil(|J/F|) + 20, which keeps the dropped tail under 1e-12 everywhere
    the package sweeps. ``resonance_eps`` is the |w_n| threshold below
    which the resonant-limit kernel is used.
    """

    n_terms: int | None = None
    resonance_eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.n_terms is not None and self.n_terms < 1:
            raise ValueError("n_terms must be >= 1")
        if not self.resonance_eps > 0:
            raise ValueError("resonance_eps must be positive")

    def half_width(self, bessel_argument: float) -> int:
        floor = math.ceil(abs(bessel_argument)) + 20
        if self.n_terms is None:
            return floor
        return max(self.n_terms, floor)


_DEFAULT = MagnusConfig()


def _require_k_zero(p: DriveParameters) -> None:
    # the closed forms integrate the k=0 phase; other k values are reached
    # by the time shift t -> t + k/F at the caller's level
    if p.k != 0.0:
        raise ValueError("analytic formulas require k = 0")


def _harmonics(p: DriveParameters, cfg: MagnusConfig):
    """Signed Bessel row J_{-N}..J_{N}(J/F) and detunings w_n = delta - nF."""
    ratio = p.bands.j / p.force
    half = cfg.half_width(ratio)
    row = bessel_j_row(half, ratio)
    signs = np.where(np.arange(1, half + 1) % 2 == 1, -1.0, 1.0)
    coeffs = np.concatenate(((row[1:] * signs)[::-1], row))
    orders = np.arange(-half, half + 1)
    return coeffs, p.bands.delta - orders * p.force


def chi(p: DriveParameters, t: float, cfg: MagnusConfig = _DEFAULT) -> complex:
    """First-order transfer integral of the interband phase factor.

    Parameters
    ----------
    p : DriveParameters
        Driven two-band parameters, k = 0.
    t : float
        Elapsed time.
    cfg : MagnusConfig, optional
        Truncation and resonance thresholds.

    Returns
    -------
    complex
    """
    _require_k_zero(p)
    t = float(t)
    coeffs, omega = _harmonics(p, cfg)
    kernel = np.full_like(omega, t)
    safe = np.abs(omega) >= cfg.resonance_eps
    kernel[safe] = 2.0 * np.sin(0.5 * omega[safe] * t) / omega[safe]
    return complex(np.sum(coeffs * np.exp(0.5j * omega * t) * kernel))


def _sin_over(w: np.ndarray, t: float) -> np.ndarray:
    """sin(w t)/w, finite at w = 0."""
    return t * np.sinc(w * (t / math.pi))


def _half_sine_square_over(w: np.ndarray, t: float) -> np.ndarray:
    """sin^2(w t / 2)/w, finite at w = 0."""
    half = 0.5 * w * t
    return np.sin(half) * (0.5 * t) * np.sinc(half / math.pi)


def _sine_defect(u: np.ndarray) -> np.ndarray:
    """(sin u - u)/u^2, series below |u| = 0.5 where subtraction cancels."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    small = np.abs(u) < 0.5
    us = u[small]
    u2 = us * us
    out[small] = -(us / 6.0) * (
        1.0 - (u2 / 20.0) * (1.0 - (u2 / 42.0) * (1.0 - u2 / 72.0))
    )
    ub = u[~small]
    out[~small] = (np.sin(ub) - ub) / (ub * ub)
    return out


def psi(p: DriveParameters, t: float, cfg: MagnusConfig = _DEFAULT) -> float:
    """Second-order secular integral of the ordered phase difference.

    Evaluated as a double harmonic sum whose (n, m) term is
    J_n J_m [S(w_m) - S(w_n - w_m)] / w_n with S(w) = sin(w t)/w. The
    diagonal uses t^2 (sin u - u)/u^2 at u = w_n t, the off-diagonal a
    divided-difference form; both stay finite through every resonance.

    Returns
    -------
    float
    """
    _require_k_zero(p)
    t = float(t)
    coeffs, omega = _harmonics(p, cfg)
    a = omega[:, None]
    b = omega[None, :]
    # off-diagonal rows: [S(b) - cos(bt) S(a) - 2 sin(bt) sin^2(at/2)/a] / (a - b);
    # the denominator is (m - n) F, never small off the diagonal
    s_b = _sin_over(omega, t)[None, :]
    s_a = _sin_over(omega, t)[:, None]
    q_a = _half_sine_square_over(omega, t)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = (s_b - np.cos(b * t) * s_a - 2.0 * np.sin(b * t) * q_a) / (a - b)
    diag = t * t * _sine_defect(omega * t)
    np.fill_diagonal(terms, diag)
    return float(coeffs @ terms @ coeffs)


def pb_first_order(
    p: DriveParameters, t: float, cfg: MagnusConfig = _DEFAULT
) -> float:
    """Upper-band occupation from the first Magnus order, sin^2(C0 F |chi|)."""
    r = p.bands.c0 * p.force * abs(chi(p, t, cfg))
    return math.sin(r) ** 2


def first_order_propagator(
    p: DriveParameters, t: float, cfg: MagnusConfig = _DEFAULT
) -> np.ndarray:
    """Exactly unitary 2x2 propagator of the first Magnus order.

    exp(-i C0 F [[0, conj(chi)], [chi, 0]]), which rotates by the angle
    r = C0 F |chi| about an axis set by the phase of chi.
    """
    x = chi(p, t, cfg)
    r = p.bands.c0 * p.force * abs(x)
    phase = cmath.exp(1j * cmath.phase(x)) if x != 0 else 1.0
    return np.array(
        [
            [math.cos(r), -1j * math.sin(r) * phase.conjugate()],
            [-1j * math.sin(r) * phase, math.cos(r)],
        ]
    )


def pb_second_order(
    p: DriveParameters, t: float, cfg: MagnusConfig = _DEFAULT
) -> float:
    """Upper-band occupation with the second-order secular correction.

    The detuning-like combination C0 F psi tilts the effective rotation
    axis, reducing both the amplitude and the period of the first-order
    result; at psi = 0 this reduces to :func:`pb_first_order` exactly.
    """
    c = p.bands.c0 * p.force
    x2 = abs(chi(p, t, cfg)) ** 2
    s2 = x2 + (c * psi(p, t, cfg)) ** 2
    if s2 == 0.0:
        return 0.0
    return float(x2 / s2 * math.sin(c * math.sqrt(s2)) ** 2)


def resonant_envelope(p: DriveParameters, m: int, t) -> float:
    """Slow unit-amplitude envelope sin^2(C0 F J_m(J/F) t) at an m-photon
    resonance.

    Parameters
    ----------
    p : DriveParameters
        Driven two-band parameters, k = 0, with delta within F/10 of m F.
    m : int
        Resonance order.
    t : float or ndarray
        Elapsed time.

    Raises
    ------
    ValueError
        Away from the resonance, where the envelope picture does not hold.
    """
    _require_k_zero(p)
    detuning = abs(p.bands.delta - m * p.force)
    if detuning >= p.force / 10.0:
        raise ValueError(
            f"detuning {detuning:.3g} exceeds F/10; "
            f"order {m} is not resonant at F={p.force:.6g}"
        )
    rate = p.bands.c0 * p.force * bessel_j(m, p.bands.j / p.force)
    return np.sin(rate * np.asarray(t)) ** 2
