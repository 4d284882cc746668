"""Bloch bands, Wannier functions, and tight-binding parameters of a 1D
optical (super-)lattice.

The potential is V(x) = v1*cos(x) + v2*cos(2x + phi) with x in radians, one
lattice period per 2*pi. Energies are in recoil units throughout, fixed by
the kinetic operator -4 d^2/dx^2, and quasimomentum q runs over (-1/2, 1/2].
Band structure comes from plane-wave diagonalization; Wannier functions from
phase-fixed Bloch sums; the two-band model parameters (gap, hoppings, dipole
coupling) from the band dispersions and the Wannier dipole matrix element.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import AccuracyError, eigh

__all__ = [
    "BandParameters",
    "BlochBand",
    "GaugeError",
    "LatticeSpec",
    "WannierFunction",
    "bloch_bands",
    "extract_params",
    "gauged_bloch_coefficients",
    "neighbor_hopping",
    "potential_eval",
    "wannier",
    "well_center",
]

TWO_PI = 2.0 * math.pi

# a gauge reference is unusable once any Bloch function's overlap with it
# drops below this; the fallback chain then moves to the next reference
_GAUGE_FLOOR = 1e-6


class GaugeError(RuntimeError):
    """No phase-fixing reference produced a consistent gauge for a band."""


@dataclass(frozen=True)
class LatticeSpec:
    """Lattice potential v1*cos(x) + v2*cos(2x + phi).

    v1 is the fundamental depth, v2 the second harmonic (0 for a single
    lattice), phi their relative phase. Depths in recoil units.
    """

    v1: float
    v2: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if not (self.v1 >= 0.0):
            raise ValueError("v1 must be >= 0")
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)


def potential_eval(spec: LatticeSpec, x) -> np.ndarray | float:
    """V(x) on scalars or arrays; 2*pi-periodic by construction."""
    return spec.v1 * np.cos(x) + spec.v2 * np.cos(2.0 * x + spec.phi)


def well_center(spec: LatticeSpec, samples: int = 4096) -> float:
    """Deepest potential minimum in [0, 2*pi), refined parabolically."""
    return _well_geometry(spec, samples)[0]


def _well_geometry(spec: LatticeSpec, samples: int = 4096):
    """(primary center, secondary center, curvature at primary).

    The secondary center is the other local minimum when the potential is a
    double well (superlattices), else the primary shifted by half a period;
    it only serves as a fallback gauge reference location.
    """
    x = TWO_PI * np.arange(samples) / samples
    v = potential_eval(spec, x)
    lower = np.roll(v, 1)
    upper = np.roll(v, -1)
    minima = np.nonzero((v <= lower) & (v < upper))[0]
    if minima.size == 0:  # flat potential (v1 = v2 = 0)
        return 0.0, math.pi, 0.0
    refined = [_parabolic_refine(spec, x[i], TWO_PI / samples) for i in minima]
    refined.sort(key=lambda c: potential_eval(spec, c))
    primary = refined[0]
    secondary = refined[1] if len(refined) > 1 else primary + math.pi
    curvature = spec.v1 * math.cos(primary) + 4.0 * spec.v2 * math.cos(
        2.0 * primary + spec.phi
    )
    return primary, secondary, -curvature


def _parabolic_refine(spec: LatticeSpec, x0: float, h: float) -> float:
    vm, v0, vp = (potential_eval(spec, x0 + d) for d in (-h, 0.0, h))
    denom = vm - 2.0 * v0 + vp
    if denom <= 0.0:
        return x0
    return x0 + 0.5 * h * (vm - vp) / denom


@dataclass(frozen=True)
class BlochBand:
    """One band on a quasimomentum grid.

    ``coefficients[j]`` are the plane-wave amplitudes of the Bloch function
    at ``q[j]`` in the basis e^{i(q+n)x}/sqrt(2 pi), n = ``offsets``; each
    row has unit norm, so the Bloch function is normalized per cell.
    """

    label: str
    q: np.ndarray
    energies: np.ndarray
    offsets: np.ndarray
    coefficients: np.ndarray


def default_q_grid(q_points: int = 64) -> np.ndarray:
    """Staggered uniform grid, symmetric under q -> -q, avoiding q = 0."""
    return -0.5 + (np.arange(q_points) + 0.5) / q_points


def bloch_bands(
    spec: LatticeSpec,
    cutoff: int = 41,
    q_grid: np.ndarray | None = None,
) -> tuple[BlochBand, BlochBand]:
    """Two lowest bands of -4 d^2/dx^2 + V(x) in a plane-wave basis.

    Parameters
    ----------
    spec : LatticeSpec
    cutoff : int
        Number of plane waves, odd, >= 11. The default 41 converges band
        energies far below 1e-8 for depths up to 10.
    q_grid : ndarray, optional
        Quasimomenta in (-1/2, 1/2]; defaults to the staggered 64-point grid.

    Returns
    -------
    (band_a, band_b) : lower and upper BlochBand
    """
    if cutoff < 11 or cutoff % 2 == 0:
        raise ValueError("cutoff must be odd and >= 11")
    qs = default_q_grid() if q_grid is None else np.asarray(q_grid, dtype=float)
    if np.any(qs <= -0.5) or np.any(qs > 0.5):
        raise ValueError("quasimomenta must lie in (-1/2, 1/2]")
    half = (cutoff - 1) // 2
    ns = np.arange(-half, half + 1)
    coupling1 = np.full(cutoff - 1, spec.v1 / 2.0, dtype=complex)
    coupling2 = np.full(cutoff - 2, (spec.v2 / 2.0) * np.exp(1j * spec.phi))
    base = np.diag(coupling1, -1) + np.diag(coupling1, 1)
    base += np.diag(coupling2, -2) + np.diag(np.conj(coupling2), 2)
    energies = np.empty((2, qs.size))
    coeffs = np.empty((2, qs.size, cutoff), dtype=complex)
    for j, q in enumerate(qs):
        h = base + np.diag(4.0 * (q + ns) ** 2).astype(complex)
        vals, vecs = eigh(h)
        energies[:, j] = vals[:2]
        coeffs[0, j] = vecs[:, 0]
        coeffs[1, j] = vecs[:, 1]
    band_a = BlochBand("a", qs, energies[0], ns, coeffs[0])
    band_b = BlochBand("b", qs, energies[1], ns, coeffs[1])
    return band_a, band_b


# ---------------------------------------------------------------------------
# Gauge fixing
# ---------------------------------------------------------------------------


def _reference_values(band: BlochBand, kind: str, center: float, width: float):
    """Complex functional of each q>0 Bloch function under one reference.

    "point-s"  : psi_q(center)
    "point-p"  : psi_q'(center)
    "gauss-s"  : overlap with a normalized Gaussian at center
    "gauss-p"  : overlap with its first derivative orbital
    Rotating each Bloch phase so the functional is real-positive fixes the
    gauge; all four agree for inversion-symmetric potentials.
    """
    qs, ns, c = band.q, band.offsets, band.coefficients
    out = np.empty(qs.size, dtype=complex)
    for j in range(qs.size):
        k = qs[j] + ns
        if kind.startswith("point"):
            basis = np.exp(1j * k * center) / math.sqrt(TWO_PI)
            if kind == "point-p":
                basis = 1j * k * basis
            out[j] = np.sum(c[j] * basis)
        else:
            ghat = width * np.exp(-1j * k * center) * np.exp(-(k * k) * width * width / 2)
            if kind == "gauss-p":
                ghat = -1j * width * width * k * ghat
            out[j] = np.conj(np.sum(np.conj(c[j]) * ghat))
    return out


def _gauge_width(spec: LatticeSpec, center: float) -> float:
    """Harmonic-well width of the trial orbital at a potential minimum."""
    curvature = max(
        -(spec.v1 * math.cos(center) + 4.0 * spec.v2 * math.cos(2 * center + spec.phi)),
        1e-3,
    )
    return math.sqrt(math.sqrt(8.0 / curvature) / 2.0)


def _fix_gauge(band: BlochBand, spec: LatticeSpec) -> np.ndarray:
    """Phase-fixed coefficients, real-Wannier gauge.

    For q > 0, rotate so the reference functional is real-positive; for
    q < 0, time-reversal pairing conj-flips the positive-q partner, which is
    valid for any real potential and makes the Wannier sum real. References
    are tried in a fixed order and must work for every q at once; a reference
    whose functional magnitude falls under 1e-6 anywhere is rejected.
    """
    qs = band.q
    nq = qs.size
    if nq % 2 or not np.allclose(qs + qs[::-1], 0.0, atol=1e-12):
        raise ValueError("gauge fixing needs a q grid symmetric under q -> -q")
    primary, secondary, _ = _well_geometry(spec)
    shape = "s" if band.label == "a" else "p"
    candidates = [
        (f"point-{shape}", primary, 0.0),
        (f"gauss-{shape}", primary, _gauge_width(spec, primary)),
        (f"gauss-{shape}", secondary, _gauge_width(spec, secondary)),
    ]
    upper = BlochBand(
        band.label, qs[nq // 2 :], band.energies[nq // 2 :], band.offsets,
        band.coefficients[nq // 2 :],
    )
    floors = []
    for kind, center, width in candidates:
        values = _reference_values(upper, kind, center, width)
        floor = np.abs(values).min()
        floors.append(f"{kind}@{center:.4f}: min|overlap|={floor:.2e}")
        if floor < _GAUGE_FLOOR:
            continue
        fixed = np.empty_like(band.coefficients)
        fixed[nq // 2 :] = upper.coefficients * np.exp(-1j * np.angle(values))[:, None]
        fixed[: nq // 2] = np.conj(fixed[nq - 1 : nq // 2 - 1 : -1, ::-1])
        return fixed
    raise GaugeError(
        f"band {band.label}: every phase reference collapsed ({'; '.join(floors)})"
    )


def gauged_bloch_coefficients(
    spec: LatticeSpec, cutoff: int = 41, q_points: int = 64
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(q grid, plane-wave offsets, gauged coefficients a, b).

    The building block behind :func:`wannier`; exposed for diagnostics and
    for cross-checks that work directly in quasimomentum space.
    """
    band_a, band_b = bloch_bands(spec, cutoff, default_q_grid(q_points))
    return band_a.q, band_a.offsets, _fix_gauge(band_a, spec), _fix_gauge(band_b, spec)


# ---------------------------------------------------------------------------
# Wannier functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WannierFunction:
    """Real localized orbital of one band, sampled on a uniform grid.

    ``x`` is measured in lattice periods (site units) and ``values`` is
    normalized so that sum(values^2) * dx = 1. ``site`` labels the well the
    orbital is centered on.
    """

    band: str
    site: int
    x: np.ndarray
    values: np.ndarray
    dx: float

    def overlap(self, other: "WannierFunction") -> float:
        if self.x.size != other.x.size or self.dx != other.dx:
            raise ValueError("overlap needs Wannier functions on a shared grid")
        return float(np.sum(self.values * other.values) * self.dx)


def _window(center: float, cells: int, points_per_cell: int) -> np.ndarray:
    count = cells * points_per_cell
    return center + TWO_PI * (np.arange(count) / points_per_cell - cells / 2.0)


def _synthesize(qs, ns, coeff_list, x, site: int, weights_list=None):
    """Bloch sums w(x) = (1/N) sum_q e^{-i q 2 pi site} [weights] psi_q(x).

    Several coefficient sets (and optional per-q energy weights) share one
    pass so extract_params can build both bands and H*w together.
    """
    basis = np.exp(1j * np.outer(x, ns))  # plane-wave factors, reused per q
    sums = [np.zeros(x.size, dtype=complex) for _ in coeff_list]
    for j, q in enumerate(qs):
        cell_phase = np.exp(1j * q * x) * (np.exp(-1j * q * TWO_PI * site) / math.sqrt(TWO_PI))
        for i, coeffs in enumerate(coeff_list):
            term = cell_phase * (basis @ coeffs[j])
            if weights_list is not None and weights_list[i] is not None:
                term = term * weights_list[i][j]
            sums[i] += term
    return [s / qs.size for s in sums]


def _require_real(w: np.ndarray, label: str) -> np.ndarray:
    drift = np.abs(w.imag).max()
    scale = np.abs(w.real).max()
    if drift > 1e-8 * max(scale, 1e-300):
        raise GaugeError(f"band {label}: Wannier sum kept an imaginary part {drift:.2e}")
    return np.ascontiguousarray(w.real)


def wannier(
    spec: LatticeSpec,
    band: str = "a",
    site: int = 0,
    cells: int = 21,
    cutoff: int = 41,
    q_points: int = 64,
    points_per_cell: int = 512,
) -> WannierFunction:
    """Real Wannier function of band "a" or "b" centered on ``site``.

    The window spans ``cells`` lattice periods around the well center (plus
    the site offset stays inside it for small ``site``). Sign conventions:
    band a is positive at its center, band b has positive slope there.

    Raises
    ------
    GaugeError
        If no phase reference fixes the gauge, or the gauged sum fails to
        be real.
    """
    if band not in ("a", "b"):
        raise ValueError("band must be 'a' or 'b'")
    if cells < 11 or cells % 2 == 0:
        raise ValueError("cells must be odd and >= 11")
    if q_points < 32:
        raise ValueError("need at least 32 quasimomentum points")
    band_a, band_b = bloch_bands(spec, cutoff, default_q_grid(q_points))
    chosen = band_a if band == "a" else band_b
    fixed = _fix_gauge(chosen, spec)
    center = well_center(spec)
    x = _window(center, cells, points_per_cell)
    (w,) = _synthesize(chosen.q, chosen.offsets, [fixed], x, site)
    w = _require_real(w, band)
    w = _orient(w, x, center + TWO_PI * site, band)
    dx = 1.0 / points_per_cell  # site units
    return WannierFunction(band, site, x / TWO_PI, w * math.sqrt(TWO_PI), dx)


def _orient(w: np.ndarray, x: np.ndarray, center: float, band: str) -> np.ndarray:
    mid = int(np.argmin(np.abs(x - center)))
    probe = w[mid] if band == "a" else w[min(mid + 1, w.size - 1)] - w[max(mid - 1, 0)]
    return -w if probe < 0.0 else w


# ---------------------------------------------------------------------------
# Model parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BandParameters:
    """Tight-binding data of the two lowest bands.

    delta : band gap, difference of the band-averaged energies, > 0
    ja, jb : hopping amplitudes from the dispersion Fourier coefficient;
        ja > 0 and jb < 0 for single lattices
    c0 : dipole coupling between the bands' Wannier functions on one site,
        in lattice periods; gauge convention c0 <= 0
    """

    delta: float
    ja: float
    jb: float
    c0: float

    @property
    def j(self) -> float:
        """Hopping difference driving the interband interference; < 0 for
        single lattices (|j| = ja + |jb|)."""
        return self.jb - self.ja


def _dispersion_hopping(band: BlochBand) -> float:
    # first Fourier cosine coefficient of E(kappa), kappa = 2 pi q, so that
    # E(kappa) ~ mean - J cos(kappa); exact on the staggered uniform grid
    kappa = TWO_PI * band.q
    return float(-2.0 * np.mean(band.energies * np.cos(kappa)))


def extract_params(
    spec: LatticeSpec,
    cutoff: int = 41,
    q_points: int = 64,
    cells: int = 21,
    points_per_cell: int = 512,
    tail_tol: float = 1e-6,
) -> BandParameters:
    """Band gap, hoppings, and dipole coupling for one lattice.

    The gap is the difference of the Brillouin-zone-averaged band energies;
    hoppings are dispersion Fourier coefficients; the dipole coupling is
    the full-window integral of w_a(x) * x * w_b(x) with both Wannier
    functions on the same site and x in lattice periods.

    Raises
    ------
    AccuracyError
        If the outermost cells still contribute to the dipole integral above
        ``tail_tol * (1 + |c0|)``, i.e. the window is too small.
    GaugeError
        Propagated from the phase fixing.
    """
    band_a, band_b = bloch_bands(spec, cutoff, default_q_grid(q_points))
    delta = float(np.mean(band_b.energies) - np.mean(band_a.energies))
    ja = _dispersion_hopping(band_a)
    jb = _dispersion_hopping(band_b)

    fixed_a = _fix_gauge(band_a, spec)
    fixed_b = _fix_gauge(band_b, spec)
    center = well_center(spec)
    x = _window(center, cells, points_per_cell)
    wa, wb = _synthesize(band_a.q, band_a.offsets, [fixed_a, fixed_b], x, 0)
    wa = _orient(_require_real(wa, "a"), x, center, "a")
    wb = _require_real(wb, "b")

    dx_sites = 1.0 / points_per_cell
    rel = (x - center) / TWO_PI  # site units, origin at the well center
    integrand = TWO_PI * wa * rel * wb  # site-normalized product
    c0 = float(np.sum(integrand) * dx_sites)
    if c0 > 0.0:
        wb = -wb
        integrand = -integrand
        c0 = -c0
    edge = points_per_cell  # one cell on each end of the window
    tail = abs(np.sum(integrand[:edge]) * dx_sites) + abs(
        np.sum(integrand[-edge:]) * dx_sites
    )
    if tail > tail_tol * (1.0 + abs(c0)):
        raise AccuracyError(
            f"dipole integral tail {tail:.2e} above tolerance; enlarge the window",
            c0,
        )
    return BandParameters(delta, ja, jb, c0)


def neighbor_hopping(
    spec: LatticeSpec,
    band: str = "a",
    cutoff: int = 41,
    q_points: int = 64,
    cells: int = 21,
    points_per_cell: int = 512,
) -> float:
    """Real-space hopping matrix element <w_1 | H | w_0> of one band.

    Cross-check quantity: -2 times this matches the dispersion-based hopping
    (ja or jb) to a few percent for moderate depths. Computed by synthesizing
    H w_0 from the band energies and integrating against w_1 on the grid.
    """
    band_a, band_b = bloch_bands(spec, cutoff, default_q_grid(q_points))
    chosen = band_a if band == "a" else band_b
    fixed = _fix_gauge(chosen, spec)
    center = well_center(spec)
    x = _window(center, cells, points_per_cell)
    w0, hw0 = _synthesize(
        chosen.q, chosen.offsets, [fixed, fixed], x, 0,
        weights_list=[None, chosen.energies],
    )
    (w1,) = _synthesize(chosen.q, chosen.offsets, [fixed], x, 1)
    hw0 = _require_real(hw0, band)
    w1 = _require_real(w1, band)
    dx_rad = TWO_PI / points_per_cell
    return float(np.sum(w1 * hw0) * dx_rad)
