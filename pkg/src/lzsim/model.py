"""Driven two-band Hamiltonians and the two-level (LZS) parameter map.

A constant force F tilts the lattice; in the co-moving quasimomentum frame
the two lowest bands at one k form a periodically driven two-level system
with Bloch period 2*pi/F. Up to a scalar shift and a shift of the time
origin, that system is exactly a sinusoidally driven two-level model, which
is what the analytic treatments in :mod:`lzsim.magnus` and
:mod:`lzsim.spectral` are written against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import BandParameters

__all__ = [
    "DriveParameters",
    "LzsMapping",
    "LzsParameters",
    "band_hamiltonian",
    "interband_phase",
    "lzs_equivalence_error",
    "lzs_hamiltonian",
    "to_lzs_parameters",
]


@dataclass(frozen=True)
class LzsParameters:
    """Sinusoidally driven two-level model.

    H(t) = -1/2 [[eps0 + a*sin(omega*t), delta_t], [delta_t, -(eps0 + a*sin(omega*t))]]

    eps0 is the static level splitting, a the drive amplitude, omega the
    drive frequency (> 0), delta_t the tunneling matrix element.
    """

    eps0: float
    a: float
    omega: float
    delta_t: float

    def __post_init__(self):
        if not self.omega > 0.0:
            raise ValueError("omega must be positive")


@dataclass(frozen=True)
class DriveParameters:
    """Two-band model under a constant force.

    bands : extracted lattice parameters
    force : tilt strength F > 0 (recoil units per period)
    k : quasimomentum offset of the evolving state
    """

    bands: BandParameters
    force: float
    k: float = 0.0

    def __post_init__(self):
        if not self.force > 0.0:
            raise ValueError("force must be positive")

    @property
    def t_bloch(self) -> float:
        """Bloch period 2*pi/F."""
        return 2.0 * math.pi / self.force


def lzs_hamiltonian(p: LzsParameters, t: float) -> np.ndarray:
    """The 2x2 driven two-level Hamiltonian at time t. Traceless."""
    diag = p.eps0 + p.a * math.sin(p.omega * t)
    return -0.5 * np.array([[diag, p.delta_t], [p.delta_t, -diag]], dtype=complex)


def band_hamiltonian(p: DriveParameters, t: float) -> np.ndarray:
    """Two-band Hamiltonian in the co-moving frame at quasimomentum k.

    [[-delta/2 - ja*cos(k + F t),  c0*F],
     [ c0*F,  +delta/2 - jb*cos(k + F t)]]

    Periodic in t with the Bloch period.
    """
    b = p.bands
    drive = math.cos(p.k + p.force * t)
    coupling = b.c0 * p.force
    return np.array(
        [
            [-0.5 * b.delta - b.ja * drive, coupling],
            [coupling, 0.5 * b.delta - b.jb * drive],
        ],
        dtype=complex,
    )


def interband_phase(p: DriveParameters, t) -> np.ndarray | float:
    """Accumulated phase between the bands, integral of their gap.

    phase(t) = delta*t - (j/F) * (sin(k + F t) - sin k), which is the exact
    time integral of E_b(t') - E_a(t') = delta - j*cos(k + F t') from 0 to t.
    Vanishes at t = 0.
    """
    b = p.bands
    return b.delta * t - (b.j / p.force) * (
        np.sin(p.k + p.force * t) - math.sin(p.k)
    )


@dataclass(frozen=True)
class LzsMapping:
    """Result of mapping the driven bands onto the two-level model.

    lzs : the mapped parameters (splitting delta, amplitude j, frequency F,
        tunneling -2*c0*F)
    scalar_amplitude : coefficient of the discarded identity shift; the full
        two-band Hamiltonian equals the mapped one (at the shifted time) plus
        scalar_amplitude * cos(k + F t) times the identity.
    """

    lzs: LzsParameters
    scalar_amplitude: float

    def time_shift(self, k: float) -> float:
        """Offset s - t between two-level time s and co-moving time t.

        The diagonal drives match under sin(F s) = -cos(k + F t), i.e.
        s = t + k/F - pi/(2F).
        """
        return (k - 0.5 * math.pi) / self.lzs.omega


def to_lzs_parameters(bands: BandParameters, force: float) -> LzsMapping:
    """Map extracted band parameters onto the driven two-level model.

    The splitting is the band gap, the drive amplitude the hopping
    difference, the frequency the Bloch frequency F. The tunneling element
    is -2*c0*F: the band coupling c0*F must equal the two-level off-diagonal
    -delta_t/2 entrywise, which fixes both magnitude and sign. The identity
    shift that the two-level form drops is reported alongside.
    """
    if not force > 0.0:
        raise ValueError("force must be positive")
    lzs = LzsParameters(
        eps0=bands.delta,
        a=bands.j,
        omega=force,
        delta_t=-2.0 * bands.c0 * force,
    )
    return LzsMapping(lzs=lzs, scalar_amplitude=-0.5 * (bands.ja + bands.jb))


def lzs_equivalence_error(p: DriveParameters, t_grid) -> float:
    """Largest entrywise deviation between the two Hamiltonian forms.

    Evaluates band_hamiltonian(p, t) against the mapped two-level form at
    the shifted time plus the identity shift, over all t in ``t_grid``.
    An algebraic identity: the result is at rounding level (<= 1e-12) for
    any parameters.
    """
    mapping = to_lzs_parameters(p.bands, p.force)
    shift = mapping.time_shift(p.k)
    worst = 0.0
    for t in np.atleast_1d(np.asarray(t_grid, dtype=float)):
        direct = band_hamiltonian(p, t)
        scalar = mapping.scalar_amplitude * math.cos(p.k + p.force * t)
        mapped = lzs_hamiltonian(mapping.lzs, t + shift) + scalar * np.eye(2)
        worst = max(worst, float(np.abs(direct - mapped).max()))
    return worst
