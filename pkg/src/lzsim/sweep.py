"""Configuration-driven parameter sweeps with CSV and pixmap output.

A sweep fills a one- or two-dimensional grid with mean upper-band
occupations. Four modes cover the standard views of the interferometry:

- ``lzs-grid``: gap (delta) times hopping difference (j) at fixed force,
  the interference-fan map.
- ``force-curve``: occupation against inverse force for one band-parameter
  set, with optional local grid refinement around each resonance.
- ``depth-force``: lattice depth (v1 or v2) times inverse force, band
  parameters recomputed from the Wannier pipeline per depth.
- ``superlattice-phase``: second-harmonic ratio (v2/v1) times relative
  phase at fixed force, band parameters recomputed per cell.

Engines: ``analytic`` evaluates the closed-form background-plus-Lorentzian
mean occupation, ``numeric`` averages the exact two-band dynamics over
many Bloch periods at k = 0, ``both`` runs the two in sequence.
:func:`run_sweep` returns one :class:`HeatmapResult` per engine run.

Determinism contract: a given config produces bit-identical values and CSV
bytes on every run, with any number of workers. Worker processes only ever
compute per-cell quantities that are pure functions of the cell; reduction
is by cell index, and the vectorized analytic pass runs in the parent with
fixed chunk boundaries. Per-cell failures become NaN cells plus a
diagnostics line; they never abort the sweep.
"""

from __future__ import annotations

import colorsys
import configparser
import math
import threading
from collections.abc import Mapping
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import floquet_average
from .lattice import BandParameters, LatticeSpec, extract_params
from .model import DriveParameters
from .numerics import bessel_j_table
from .spectral import (
    ResonanceSolution,
    RootBracketError,
    resonance_position,
    resonance_position_grid,
    ws_coupling,
)

__all__ = [
    "AxisSpec",
    "ConfigError",
    "HeatmapResult",
    "MODES",
    "PRESETS",
    "SweepConfig",
    "load_sweep_config",
    "preset_config",
    "read_csv",
    "resonance_report",
    "run_figure",
    "run_sweep",
    "write_csv",
    "write_heatmap",
]

MODES = ("lzs-grid", "force-curve", "depth-force", "superlattice-phase")
ENGINES = ("analytic", "numeric", "both")
PRESETS = ("fig1", "fig2", "fig3a", "fig3b", "fig4")

# Wannier profile for sweeps. Against the converged extract_params defaults
# the gap and hopping difference move by < 2e-5 and the dipole element by
# < 1.3e-4 over the preset lattice ranges (worst at a near-degenerate
# superlattice cell, limited by the 32-point quasimomentum grid), at a
# twentieth of the cost. Both engines share the profile, so cross-engine
# comparisons are unaffected.
WANNIER_PROFILE = {
    "cutoff": 15,
    "q_points": 32,
    "cells": 11,
    "points_per_cell": 96,
    "tail_tol": 1e-4,
}


class ConfigError(ValueError):
    """A sweep configuration is malformed or inconsistent."""


@dataclass(frozen=True)
class AxisSpec:
    """One swept parameter: a named uniform grid.

    ``endpoint=False`` drops the last point, for periodic axes like the
    superlattice phase.
    """

    name: str
    min: float
    max: float
    points: int
    endpoint: bool = True

    def __post_init__(self):
        if not self.name.strip():
            raise ConfigError("axis name must be nonempty")
        if not (math.isfinite(self.min) and math.isfinite(self.max)):
            raise ConfigError(f"axis {self.name}: bounds must be finite")
        if not self.min < self.max:
            raise ConfigError(f"axis {self.name}: min must be below max")
        if self.points < 2:
            raise ConfigError(f"axis {self.name}: at least 2 points")

    def grid(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.points,
                           endpoint=self.endpoint)


# axis names each mode sweeps: (allowed x names, required y name or None)
_MODE_AXES = {
    "lzs-grid": (("delta",), "j"),
    "force-curve": (("inv_force",), None),
    "depth-force": (("v1", "v2"), "inv_force"),
    "superlattice-phase": (("ratio",), "phi"),
}
_DIRECT_KEYS = frozenset({"delta", "ja", "jb", "c0"})
_SHORT_KEYS = frozenset({"delta", "j", "c0"})
_LATTICE_KEYS = frozenset({"v1", "v2", "phi"})


@dataclass(frozen=True)
class SweepConfig:
    """Everything a sweep needs; validated on construction.

    fixed holds the non-swept physical parameters. Band parameters come
    either from explicit values (delta, ja, jb, c0 or the delta, j, c0
    shorthand with ja = 0) or from a lattice (v1 with optional v2, phi),
    depending on the mode. numeric_points subsamples the force axis for
    the numeric engine in force-curve mode; elsewhere the numeric engine
    shares the analytic grid. scale and colormap are rendering defaults
    for :func:`write_heatmap`, overridable per call.
    """

    mode: str
    x: AxisSpec
    y: AxisSpec | None = None
    engine: str = "analytic"
    fixed: Mapping[str, float] = field(default_factory=dict)
    m_max: int = 6
    refine_factor: int = 1
    refine_width: float = 0.02
    numeric_periods: int = 500
    numeric_points: int | None = None
    report: Mapping[str, float] | None = None
    preset: str | None = None
    scale: str = "linear"
    colormap: str = "gray"

    def __post_init__(self):
        object.__setattr__(self, "fixed", dict(self.fixed))
        if self.report is not None:
            object.__setattr__(self, "report", dict(self.report))
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; pick from {MODES}")
        if self.engine not in ENGINES:
            raise ConfigError(
                f"unknown engine {self.engine!r}; pick from {ENGINES}"
            )
        if self.scale not in ("linear", "log"):
            raise ConfigError(f"unknown scale {self.scale!r}")
        if self.colormap not in ("gray", "rainbow"):
            raise ConfigError(f"unknown colormap {self.colormap!r}")
        if self.m_max < 0:
            raise ConfigError("m_max must be >= 0")
        if self.refine_factor < 1:
            raise ConfigError("refine_factor must be >= 1")
        if not 0.0 < self.refine_width < 1.0:
            raise ConfigError("refine_width must be a fraction in (0, 1)")
        if self.numeric_periods < 1:
            raise ConfigError("numeric_periods must be >= 1")
        if self.numeric_points is not None:
            if self.mode != "force-curve":
                raise ConfigError(
                    "numeric_points only applies to force-curve mode"
                )
            if self.numeric_points < 2:
                raise ConfigError("numeric_points must be >= 2")
        if self.refine_factor > 1 and self.mode != "force-curve":
            raise ConfigError("refinement only applies to force-curve mode")
        self._check_axes()
        self._check_fixed()

    def _check_axes(self):
        x_names, y_name = _MODE_AXES[self.mode]
        if self.x.name not in x_names:
            raise ConfigError(
                f"{self.mode}: x axis must be one of {x_names}, "
                f"got {self.x.name!r}"
            )
        if y_name is None:
            if self.y is not None:
                raise ConfigError(f"{self.mode} sweeps a single axis")
        else:
            if self.y is None or self.y.name != y_name:
                raise ConfigError(f"{self.mode}: y axis must be {y_name!r}")
        swept = {self.x.name} | ({self.y.name} if self.y else set())
        clash = swept & set(self.fixed)
        if clash:
            raise ConfigError(
                f"parameters {sorted(clash)} are both swept and fixed"
            )
        # positivity where the physics demands it
        if self.x.name in ("delta", "inv_force", "v1") and self.x.min <= 0:
            raise ConfigError(f"axis {self.x.name} must stay positive")
        if self.x.name in ("v2", "ratio") and self.x.min < 0:
            raise ConfigError(f"axis {self.x.name} must be >= 0")
        if self.y is not None and self.y.name == "inv_force" and self.y.min <= 0:
            raise ConfigError("axis inv_force must stay positive")

    def _check_fixed(self):
        keys = set(self.fixed)
        mode = self.mode
        if mode == "lzs-grid":
            if keys != {"c0", "force"}:
                raise ConfigError(
                    "lzs-grid fixes exactly c0 and force, got "
                    f"{sorted(keys)}"
                )
            if self.fixed["force"] <= 0:
                raise ConfigError("force must be positive")
        elif mode == "force-curve":
            if not (self._lattice_route(keys) or keys == _DIRECT_KEYS
                    or keys == _SHORT_KEYS):
                raise ConfigError(
                    "force-curve fixes either a lattice (v1 with optional "
                    "v2, phi) or band parameters (delta, ja, jb, c0 or "
                    f"delta, j, c0), got {sorted(keys)}"
                )
        elif mode == "depth-force":
            allowed = _LATTICE_KEYS - {self.x.name}
            if not keys <= allowed:
                raise ConfigError(
                    f"depth-force over {self.x.name} allows fixed keys "
                    f"{sorted(allowed)}, got {sorted(keys)}"
                )
            if self.x.name == "v2" and "v1" not in keys:
                raise ConfigError("depth-force over v2 requires fixed v1")
            if self.fixed.get("v1", 1.0) <= 0:
                raise ConfigError("v1 must be positive")
        else:  # superlattice-phase
            if keys != {"v1", "force"}:
                raise ConfigError(
                    "superlattice-phase fixes exactly v1 and force, got "
                    f"{sorted(keys)}"
                )
            if self.fixed["v1"] <= 0 or self.fixed["force"] <= 0:
                raise ConfigError("v1 and force must be positive")

    @staticmethod
    def _lattice_route(keys: set) -> bool:
        return "v1" in keys and keys <= _LATTICE_KEYS


@dataclass(frozen=True)
class HeatmapResult:
    """One engine's filled grid plus its provenance.

    values has shape (x.size,) for a single swept axis, (x.size, y.size)
    for two; failed cells hold NaN and are listed in diagnostics. metadata
    is a flat string map written verbatim into the CSV comment header.
    """

    x: np.ndarray
    y: np.ndarray | None
    values: np.ndarray
    metadata: dict[str, str]
    diagnostics: tuple[str, ...] = ()

    def __post_init__(self):
        want = (self.x.size,) if self.y is None else (self.x.size, self.y.size)
        if self.values.shape != want:
            raise ValueError(
                f"value matrix {self.values.shape} does not match "
                f"axis grids {want}"
            )
        finite = self.values[np.isfinite(self.values)]
        if finite.size and (finite.min() < 0.0 or finite.max() > 1.0):
            raise ValueError("occupations must lie in [0, 1]")

    @property
    def missing(self) -> int:
        return int(np.count_nonzero(~np.isfinite(self.values)))


# ---------------------------------------------------------------------------
# Band-parameter resolution and memo
# ---------------------------------------------------------------------------

_BAND_MEMO: dict[tuple[float, float, float], BandParameters] = {}
_MEMO_LOCK = threading.Lock()


def _lattice_bands(v1: float, v2: float, phi: float) -> BandParameters:
    """Wannier-derived band parameters, memoized per rounded lattice."""
    key = (round(v1, 10), round(v2, 10), round(phi, 10))
    with _MEMO_LOCK:
        hit = _BAND_MEMO.get(key)
    if hit is not None:
        return hit
    bands = extract_params(LatticeSpec(v1=v1, v2=v2, phi=phi),
                           **WANNIER_PROFILE)
    with _MEMO_LOCK:
        # setdefault keeps the first insert if another thread raced us
        return _BAND_MEMO.setdefault(key, bands)


def _resolve_bands(params: Mapping[str, float]) -> BandParameters:
    """Band parameters from a fixed-parameter mapping (three routes)."""
    keys = set(params)
    if "v1" in keys and keys <= _LATTICE_KEYS:
        return _lattice_bands(params["v1"], params.get("v2", 0.0),
                              params.get("phi", 0.0))
    if keys == _DIRECT_KEYS:
        return BandParameters(delta=params["delta"], ja=params["ja"],
                              jb=params["jb"], c0=params["c0"])
    if keys == _SHORT_KEYS:
        return BandParameters(delta=params["delta"], ja=0.0,
                              jb=params["j"], c0=params["c0"])
    raise ConfigError(
        f"cannot resolve band parameters from keys {sorted(keys)}"
    )


# ---------------------------------------------------------------------------
# Analytic evaluation (vectorized twins of spectral.mean_occupation_total)
# ---------------------------------------------------------------------------


def _column_resonances(
    bands: BandParameters, m_max: int, label: str
) -> tuple[list[ResonanceSolution], list[str]]:
    """Solve orders 1..m_max, turning failures into diagnostics lines."""
    sols, diags = [], []
    for m in range(1, m_max + 1):
        try:
            sols.append(resonance_position(bands, m))
        except RootBracketError as exc:
            diags.append(f"{label}: order {m} skipped: {exc}")
    return sols, diags


def _occupation_curve(
    bands: BandParameters,
    inv_force: np.ndarray,
    sols: list[ResonanceSolution],
    m_max: int,
) -> np.ndarray:
    """Background plus resonance Lorentzians over a 1/F grid.

    Elementwise twin of spectral.mean_occupation_total with precomputed
    resonance positions and widths frozen at each resonance center.
    """
    force = 1.0 / inv_force
    j0 = bessel_j_table(0, bands.j / force)[..., 0]
    v0 = bands.c0 * force * j0
    square = bands.delta**2 + 4.0 * v0**2
    safe = np.where(square == 0.0, 1.0, square)
    total = np.where(square == 0.0, 0.0, 2.0 * v0**2 / safe)
    for sol in sols:
        if sol.order > m_max:
            continue
        v_m = ws_coupling(bands, sol.force, sol.order).strength
        gamma = 2.0 * abs(v_m) / (sol.force * bands.delta)
        if gamma == 0.0:
            continue
        det = inv_force - 1.0 / sol.force
        total = total + 0.5 * gamma**2 / (det**2 + gamma**2)
    return np.minimum(total, 1.0)


def _occupation_cells(
    delta: np.ndarray,
    j: np.ndarray,
    c0: np.ndarray,
    force: float,
    m_max: int,
) -> np.ndarray:
    """Mean occupation over parameter arrays at a single force.

    Orders whose resonance solver comes back NaN simply contribute no
    Lorentzian, matching the scalar total's skip-on-failure rule. NaN
    band parameters (failed lattice cells) propagate to NaN values.
    """
    bad = ~(np.isfinite(delta) & np.isfinite(j) & np.isfinite(c0))
    d = np.where(bad, 1.0, delta)
    jj = np.where(bad, 0.0, j)
    cc = np.where(bad, 0.0, c0)
    j0 = bessel_j_table(0, jj / force)[..., 0]
    v0 = cc * force * j0
    square = d**2 + 4.0 * v0**2
    total = np.where(square == 0.0, 0.0,
                     2.0 * v0**2 / np.where(square == 0.0, 1.0, square))
    inv = 1.0 / force
    for m in range(1, m_max + 1):
        fm = resonance_position_grid(d, jj, cc, m)
        good = np.isfinite(fm)
        fm = np.where(good, fm, 1.0)
        v_m = cc * fm * bessel_j_table(m, jj / fm)[..., m]
        gamma = 2.0 * np.abs(v_m) / (fm * d)
        det = inv - 1.0 / fm
        good &= gamma > 0.0
        peak = 0.5 * gamma**2 / np.where(good, det**2 + gamma**2, 1.0)
        total = total + np.where(good, peak, 0.0)
    return np.where(bad, math.nan, np.minimum(total, 1.0))


def _refined_axis(
    base: np.ndarray,
    sols: list[ResonanceSolution],
    width: float,
    factor: int,
) -> np.ndarray:
    """Base grid plus factor-times-denser patches around each resonance.

    Base points survive bit-identically (np.unique keeps exact values),
    so coarse-grid cross-checks against the refined curve stay exact.
    """
    spacing = (base[-1] - base[0]) / (base.size - 1) / factor
    parts = [base]
    for sol in sols:
        center = 1.0 / sol.force
        lo = max(center * (1.0 - width), base[0])
        hi = min(center * (1.0 + width), base[-1])
        if lo >= hi:
            continue
        count = int(round((hi - lo) / spacing)) + 1
        parts.append(np.linspace(lo, hi, count))
    return np.unique(np.concatenate(parts))


# ---------------------------------------------------------------------------
# Worker tasks (module level so process pools can pickle them)
# ---------------------------------------------------------------------------


def _lattice_task(args):
    """Solve one column of lattices; failures become message strings."""
    ix, specs = args
    out = []
    for v1, v2, phi in specs:
        try:
            b = _lattice_bands(v1, v2, phi)
            out.append((b.delta, b.ja, b.jb, b.c0))
        except Exception as exc:  # per-cell isolation, never abort the sweep
            out.append(f"{type(exc).__name__}: {exc}")
    return ix, out


def _numeric_task(args):
    """Average the exact dynamics for one cell; failures become strings."""
    idx, delta, ja, jb, c0, force, periods = args
    try:
        bands = BandParameters(delta=delta, ja=ja, jb=jb, c0=c0)
        value = floquet_average(DriveParameters(bands=bands, force=force),
                                periods=periods)
        # integrator drift can poke a hair outside [0, 1]
        return idx, min(max(float(value), 0.0), 1.0)
    except Exception as exc:  # per-cell isolation, never abort the sweep
        return idx, f"{type(exc).__name__}: {exc}"


def _map_tasks(fn, tasks, workers: int) -> list:
    """Run tasks in order, serially or over a process pool.

    pool.map preserves input order, so the reduction is by cell index no
    matter when workers finish; results are bit-identical to a serial run.
    """
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))


# ---------------------------------------------------------------------------
# Sweep drivers
# ---------------------------------------------------------------------------


def run_sweep(cfg: SweepConfig, workers: int = 1) -> dict[str, HeatmapResult]:
    """Fill the configured grid; returns one result per engine run.

    The key is the engine name, so cfg.engine="both" yields
    {"analytic": ..., "numeric": ...} and a single engine yields a
    one-entry map. Deterministic given the config: rerunning, or changing
    ``workers``, reproduces every value bit for bit.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    engines = ("analytic", "numeric") if cfg.engine == "both" else (cfg.engine,)
    if cfg.mode == "force-curve":
        return _run_force_curve(cfg, engines, workers)
    if cfg.mode == "depth-force":
        return _run_depth_force(cfg, engines, workers)
    return _run_cell_grid(cfg, engines, workers)


def _run_force_curve(cfg, engines, workers):
    base = cfg.x.grid()
    diags: list[str] = []
    try:
        bands = _resolve_bands(cfg.fixed)
    except (ConfigError, TypeError):
        raise
    except Exception as exc:  # lattice failure: all cells missing
        bands = None
        diags.append(f"band parameters failed: {type(exc).__name__}: {exc}")
    sols: list[ResonanceSolution] = []
    if bands is not None:
        sols, sol_diags = _column_resonances(bands, cfg.m_max, "curve")
        diags.extend(sol_diags)

    out: dict[str, HeatmapResult] = {}
    for engine in engines:
        if engine == "analytic":
            x = base
            if cfg.refine_factor > 1 and bands is not None:
                x = _refined_axis(base, sols, cfg.refine_width,
                                  cfg.refine_factor)
            if bands is None:
                values = np.full(x.size, math.nan)
            else:
                values = _occupation_curve(bands, x, sols, cfg.m_max)
            extra = {}
            if cfg.refine_factor > 1:
                extra["refine_factor"] = str(cfg.refine_factor)
                extra["refine_width"] = _fmt(cfg.refine_width)
                extra["x_refined_points"] = str(x.size)
        else:
            if cfg.numeric_points is not None:
                x = np.linspace(cfg.x.min, cfg.x.max, cfg.numeric_points)
            else:
                x = base
            values, ndiags = _numeric_fill(
                cfg, x, None,
                bands_of=lambda i: bands,
                force_of=lambda i, xv=x: 1.0 / xv[i],
                workers=workers,
            )
            diags = diags + ndiags
            extra = {"periods": str(cfg.numeric_periods)}
            if cfg.numeric_points is not None:
                extra["x_numeric_points"] = str(x.size)
        md = _metadata(cfg, engine, extra, lattice="v1" in cfg.fixed)
        out[engine] = _finish(x, None, values, md, diags)
    return out


def _run_depth_force(cfg, engines, workers):
    xg, yg = cfg.x.grid(), cfg.y.grid()
    diags: list[str] = []
    if cfg.x.name == "v1":
        specs = [(v, cfg.fixed.get("v2", 0.0), cfg.fixed.get("phi", 0.0))
                 for v in xg]
    else:
        specs = [(cfg.fixed["v1"], v, cfg.fixed.get("phi", 0.0)) for v in xg]
    tasks = [(ix, [spec]) for ix, spec in enumerate(specs)]
    columns: list[BandParameters | None] = [None] * xg.size
    for ix, payload in _map_tasks(_lattice_task, tasks, workers):
        cell = payload[0]
        if isinstance(cell, str):
            diags.append(f"column {cfg.x.name}={xg[ix]:.12g}: {cell}")
        else:
            columns[ix] = BandParameters(*cell)
    col_sols: list[list[ResonanceSolution]] = [[] for _ in range(xg.size)]
    for ix, bands in enumerate(columns):
        if bands is None:
            continue
        col_sols[ix], sd = _column_resonances(
            bands, cfg.m_max, f"column {cfg.x.name}={xg[ix]:.12g}")
        diags.extend(sd)

    out: dict[str, HeatmapResult] = {}
    for engine in engines:
        if engine == "analytic":
            values = np.full((xg.size, yg.size), math.nan)
            for ix, bands in enumerate(columns):
                if bands is not None:
                    values[ix] = _occupation_curve(bands, yg, col_sols[ix],
                                                   cfg.m_max)
            extra = {}
        else:
            values, ndiags = _numeric_fill(
                cfg, xg, yg,
                bands_of=lambda ix: columns[ix],
                force_of=lambda iy, yv=yg: 1.0 / yv[iy],
                workers=workers,
            )
            diags = diags + ndiags
            extra = {"periods": str(cfg.numeric_periods)}
        md = _metadata(cfg, engine, extra, lattice=True)
        out[engine] = _finish(xg, yg, values, md, diags)
    return out


def _run_cell_grid(cfg, engines, workers):
    xg, yg = cfg.x.grid(), cfg.y.grid()
    nx, ny = xg.size, yg.size
    diags: list[str] = []
    if cfg.mode == "lzs-grid":
        force = cfg.fixed["force"]
        delta = np.broadcast_to(xg[:, None], (nx, ny))
        jarr = np.broadcast_to(yg[None, :], (nx, ny))
        ja = np.zeros((nx, ny))
        jb = jarr
        c0 = np.full((nx, ny), cfg.fixed["c0"])
        lattice = False
    else:  # superlattice-phase
        force = cfg.fixed["force"]
        v1 = cfg.fixed["v1"]
        tasks = [(ix, [(v1, ratio * v1, phi) for phi in yg])
                 for ix, ratio in enumerate(xg)]
        delta = np.full((nx, ny), math.nan)
        ja = np.full((nx, ny), math.nan)
        jb = np.full((nx, ny), math.nan)
        c0 = np.full((nx, ny), math.nan)
        for ix, payload in _map_tasks(_lattice_task, tasks, workers):
            for iy, cell in enumerate(payload):
                if isinstance(cell, str):
                    diags.append(
                        f"cell ratio={xg[ix]:.12g} phi={yg[iy]:.12g}: {cell}"
                    )
                else:
                    delta[ix, iy], ja[ix, iy], jb[ix, iy], c0[ix, iy] = cell
        lattice = True
    jdiff = jb - ja

    out: dict[str, HeatmapResult] = {}
    for engine in engines:
        if engine == "analytic":
            values = _occupation_cells(delta, jdiff, c0, force, cfg.m_max)
            extra = {}
        else:
            delta_arr, ja_arr, jb_arr, c0_arr = delta, ja, jb, c0

            def bands_of(idx, d=delta_arr, a=ja_arr, b=jb_arr, c=c0_arr):
                ix, iy = idx
                if not np.isfinite(d[ix, iy]):
                    return None
                return BandParameters(delta=d[ix, iy], ja=a[ix, iy],
                                      jb=b[ix, iy], c0=c[ix, iy])

            values, ndiags = _numeric_fill(
                cfg, xg, yg, bands_of=bands_of,
                force_of=lambda iy: force, workers=workers,
            )
            diags = diags + ndiags
            extra = {"periods": str(cfg.numeric_periods)}
        md = _metadata(cfg, engine, extra, lattice=lattice)
        out[engine] = _finish(xg, yg, values, md, diags)
    return out


def _numeric_fill(cfg, xg, yg, bands_of, force_of, workers):
    """Shared numeric-engine cell loop for all modes.

    bands_of keys on the x index for curve modes and on (ix, iy) for cell
    grids; force_of keys on the force-axis index.
    """
    diags: list[str] = []
    tasks = []
    if yg is None:
        shape = (xg.size,)
        for i in range(xg.size):
            b = bands_of(i)
            if b is None:
                continue
            tasks.append((i, b.delta, b.ja, b.jb, b.c0, force_of(i),
                          cfg.numeric_periods))
    elif cfg.mode == "depth-force":
        shape = (xg.size, yg.size)
        for ix in range(xg.size):
            b = bands_of(ix)
            if b is None:
                continue
            for iy in range(yg.size):
                tasks.append(((ix, iy), b.delta, b.ja, b.jb, b.c0,
                              force_of(iy), cfg.numeric_periods))
    else:
        shape = (xg.size, yg.size)
        for ix in range(xg.size):
            for iy in range(yg.size):
                b = bands_of((ix, iy))
                if b is None:
                    continue
                tasks.append(((ix, iy), b.delta, b.ja, b.jb, b.c0,
                              force_of(iy), cfg.numeric_periods))
    values = np.full(shape, math.nan)
    for idx, payload in _map_tasks(_numeric_task, tasks, workers):
        if isinstance(payload, str):
            diags.append(f"cell {idx}: {payload}")
        else:
            values[idx] = payload
    return values, diags


def _finish(x, y, values, metadata, diags) -> HeatmapResult:
    missing = int(np.count_nonzero(~np.isfinite(values)))
    metadata["missing"] = str(missing)
    return HeatmapResult(x=np.asarray(x), y=None if y is None else np.asarray(y),
                         values=values, metadata=metadata,
                         diagnostics=tuple(diags))


def _fmt(v: float) -> str:
    return format(float(v), ".12g")


def _metadata(cfg, engine, extra, lattice: bool) -> dict[str, str]:
    md = {"mode": cfg.mode, "engine": engine, "version": __version__}
    if cfg.preset:
        md["preset"] = cfg.preset
    for tag, axis in (("x", cfg.x), ("y", cfg.y)):
        if axis is None:
            continue
        md[f"{tag}_name"] = axis.name
        md[f"{tag}_min"] = _fmt(axis.min)
        md[f"{tag}_max"] = _fmt(axis.max)
        md[f"{tag}_points"] = str(axis.points)
        if not axis.endpoint:
            md[f"{tag}_endpoint"] = "false"
    for key in sorted(cfg.fixed):
        md[key] = _fmt(cfg.fixed[key])
    md["m_max"] = str(cfg.m_max)
    if lattice:
        for key, val in WANNIER_PROFILE.items():
            md[f"wannier_{key}"] = _fmt(val) if key == "tail_tol" else str(val)
    md.update(extra)
    return md


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def write_csv(result: HeatmapResult, path) -> None:
    """Comment header of # key=value metadata, then one row per cell.

    Rows are "x, value" for one swept axis and "x, y, value" in row-major
    order (x outer) for two, all at 12 significant digits. Identical
    results produce byte-identical files.
    """
    path = Path(path)
    x_name = result.metadata.get("x_name", "x")
    lines = [f"# {k}={v}" for k, v in result.metadata.items()]
    if result.y is None:
        lines.append(f"# columns={x_name}, mean_occupation")
        for xv, v in zip(result.x, result.values):
            lines.append(f"{xv:.12g}, {v:.12g}")
    else:
        y_name = result.metadata.get("y_name", "y")
        lines.append(f"# columns={x_name}, {y_name}, mean_occupation")
        for i, xv in enumerate(result.x):
            for jj, yv in enumerate(result.y):
                lines.append(f"{xv:.12g}, {yv:.12g}, {result.values[i, jj]:.12g}")
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV {path}: {exc}") from exc


def read_csv(path) -> HeatmapResult:
    """Rebuild a HeatmapResult from :func:`write_csv` output.

    Values match the written result on the printed 12-digit precision.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read CSV {path}: {exc}") from exc
    metadata: dict[str, str] = {}
    rows: list[list[float]] = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, val = line[1:].strip().partition("=")
            if sep and key.strip() != "columns":
                metadata[key.strip()] = val.strip()
            continue
        rows.append([float(p) for p in line.split(",")])
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows) or width not in (2, 3):
        raise ValueError(f"{path}: inconsistent data rows")
    data = np.asarray(rows)
    if width == 2:
        return HeatmapResult(x=data[:, 0], y=None, values=data[:, 1],
                             metadata=metadata)
    x = np.unique(data[:, 0])
    y = np.unique(data[:, 1])
    if x.size * y.size != data.shape[0]:
        raise ValueError(f"{path}: rows do not form a full grid")
    values = data[:, 2].reshape(x.size, y.size)
    return HeatmapResult(x=x, y=y, values=values, metadata=metadata)


# ---------------------------------------------------------------------------
# Pixmap heatmaps
# ---------------------------------------------------------------------------

# fixed blue-to-red rainbow: hue 240 degrees down to 0 across intensity
_RAINBOW = np.array(
    [
        [round(255 * c) for c in colorsys.hsv_to_rgb((1.0 - i / 255.0) * 2 / 3,
                                                     1.0, 1.0)]
        for i in range(256)
    ],
    dtype=np.uint8,
)


def write_heatmap(result: HeatmapResult, path, scale: str = "linear",
                  colormap: str = "gray", floor: float = 1e-6) -> int:
    """Render the value grid as a binary portable pixmap, one pixel a cell.

    Grayscale emits P5, rainbow P6, both maxval 255. Row 0 holds the
    maximum y (single-axis results are one pixel tall). Linear scale maps
    intensity = nearest-even(255 * v); log scale sends [floor, 1] to
    [0, 255] in log10(v). Non-finite cells render as 0 and their count is
    returned.
    """
    if scale not in ("linear", "log"):
        raise ValueError(f"unknown scale {scale!r}")
    if colormap not in ("gray", "rainbow"):
        raise ValueError(f"unknown colormap {colormap!r}")
    if not 0.0 < floor < 1.0:
        raise ValueError("floor must be a fraction in (0, 1)")
    grid = result.values[:, None] if result.y is None else result.values
    img = grid.T[::-1, :]
    bad = ~np.isfinite(img)
    v = np.clip(np.where(bad, 0.0, img), 0.0, 1.0)
    if scale == "log":
        t = 1.0 - np.log10(np.maximum(v, floor)) / math.log10(floor)
        note = (f"intensity = nearest-even(255 * (1 - log10(max(v, "
                f"{floor:g}))/log10({floor:g})))")
    else:
        t = v
        note = "intensity = nearest-even(255 * v)"
    pixels = np.rint(255.0 * t).astype(np.uint8)
    pixels[bad] = 0
    height, width = pixels.shape
    comment = (f"# mean occupation, {scale} scale: {note}; "
               f"row 0 = max y; non-finite cells render 0")
    magic = "P5" if colormap == "gray" else "P6"
    header = f"{magic}\n{comment}\n{width} {height}\n255\n".encode("ascii")
    payload = pixels.tobytes() if colormap == "gray" else _RAINBOW[pixels].tobytes()
    try:
        Path(path).write_bytes(header + payload)
    except OSError as exc:
        raise OSError(f"cannot write heatmap {path}: {exc}") from exc
    return int(bad.sum())


# ---------------------------------------------------------------------------
# Config files and presets
# ---------------------------------------------------------------------------

_SECTION_KEYS = {
    "sweep": {"mode", "engine", "m_max"},
    "x": {"name", "min", "max", "points", "endpoint"},
    "y": {"name", "min", "max", "points", "endpoint"},
    "fixed": None,  # free-form float parameters
    "refine": {"factor", "width"},
    "numeric": {"periods", "points"},
    "report": None,
    "output": {"scale", "colormap"},
}


def load_sweep_config(path, preset: str | None = None) -> SweepConfig:
    """Parse a key=value config with [section] headers into a SweepConfig.

    Unknown sections or keys are rejected so typos fail loudly instead of
    silently falling back to defaults.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",),
                                       interpolation=None)
    parser.optionxform = str
    path = Path(path)
    try:
        with path.open() as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc

    for section in parser.sections():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        allowed = _SECTION_KEYS[section]
        if allowed is not None:
            stray = set(parser[section]) - allowed
            if stray:
                raise ConfigError(
                    f"{path}: unknown keys {sorted(stray)} in [{section}]"
                )
    if "sweep" not in parser or "x" not in parser:
        raise ConfigError(f"{path}: sections [sweep] and [x] are required")

    def axis(section: str) -> AxisSpec:
        sec = parser[section]
        try:
            return AxisSpec(
                name=sec.get("name", ""),
                min=sec.getfloat("min"),
                max=sec.getfloat("max"),
                points=sec.getint("points"),
                endpoint=sec.getboolean("endpoint", fallback=True),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{path}: bad [{section}] axis: {exc}") from exc

    def floats(section: str) -> dict[str, float]:
        try:
            return {k: float(v) for k, v in parser[section].items()}
        except ValueError as exc:
            raise ConfigError(f"{path}: bad [{section}] value: {exc}") from exc

    sweep = parser["sweep"]
    kwargs: dict = {
        "mode": sweep.get("mode", ""),
        "engine": sweep.get("engine", "analytic"),
        "x": axis("x"),
        "y": axis("y") if "y" in parser else None,
        "fixed": floats("fixed") if "fixed" in parser else {},
        "preset": preset,
    }
    try:
        if "m_max" in sweep:
            kwargs["m_max"] = sweep.getint("m_max")
        if "refine" in parser:
            sec = parser["refine"]
            if "factor" in sec:
                kwargs["refine_factor"] = sec.getint("factor")
            if "width" in sec:
                kwargs["refine_width"] = sec.getfloat("width")
        if "numeric" in parser:
            sec = parser["numeric"]
            if "periods" in sec:
                kwargs["numeric_periods"] = sec.getint("periods")
            if "points" in sec:
                kwargs["numeric_points"] = sec.getint("points")
        if "output" in parser:
            sec = parser["output"]
            kwargs["scale"] = sec.get("scale", "linear")
            kwargs["colormap"] = sec.get("colormap", "gray")
    except ValueError as exc:
        raise ConfigError(f"{path}: bad value: {exc}") from exc
    if "report" in parser:
        kwargs["report"] = floats("report")
    return SweepConfig(**kwargs)


def preset_config(name: str) -> SweepConfig:
    """Load one of the canonical figure presets shipped with the package."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; pick from {PRESETS}")
    from importlib.resources import as_file, files

    ref = files("lzsim").joinpath("presets", f"{name}.cfg")
    with as_file(ref) as path:
        return load_sweep_config(path, preset=name)


# ---------------------------------------------------------------------------
# Figures and reports
# ---------------------------------------------------------------------------


def resonance_report(bands: BandParameters, m_max: int = 6) -> str:
    """Plain-text table of shifted resonance positions for one band set."""
    lines = [
        f"band parameters: delta={bands.delta:.9g} j={bands.j:.9g} "
        f"c0={bands.c0:.9g}",
        "m  bare_force  shifted_force  shifted_inv_force  residual  "
        "iterations",
    ]
    for m in range(1, m_max + 1):
        bare = bands.delta / m
        try:
            sol = resonance_position(bands, m)
        except RootBracketError as exc:
            lines.append(f"{m}  {bare:.9g}  skipped: {exc}")
            continue
        lines.append(
            f"{m}  {bare:.9g}  {sol.force:.9g}  {1.0 / sol.force:.9g}  "
            f"{sol.residual:.3g}  {sol.iterations}"
        )
    return "\n".join(lines) + "\n"


def run_figure(name: str, out_dir, workers: int = 1,
               scale: str | None = None,
               colormap: str | None = None) -> dict[str, Path]:
    """Run a canonical preset and write CSV, pixmap, and resonance report.

    Returns the paths written, keyed csv_<engine>, heatmap_<engine>, and
    report. scale and colormap override the preset's rendering defaults.
    """
    cfg = preset_config(name)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = run_sweep(cfg, workers=workers)
    use_scale = scale or cfg.scale
    use_map = colormap or cfg.colormap
    paths: dict[str, Path] = {}
    for engine, result in results.items():
        csv_path = out_dir / f"{name}_{engine}.csv"
        write_csv(result, csv_path)
        paths[f"csv_{engine}"] = csv_path
        ext = ".pgm" if use_map == "gray" else ".ppm"
        map_path = out_dir / f"{name}_{engine}{ext}"
        write_heatmap(result, map_path, scale=use_scale, colormap=use_map)
        paths[f"heatmap_{engine}"] = map_path
    report_path = out_dir / f"{name}_resonances.txt"
    report_bands = _resolve_bands(cfg.report if cfg.report else cfg.fixed)
    report_path.write_text(resonance_report(report_bands, cfg.m_max))
    paths["report"] = report_path
    return paths
