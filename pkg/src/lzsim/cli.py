"""Command-line entry point.

Six subcommands expose the library layers: ``bands`` extracts tight-binding
parameters from a lattice, ``evolve`` integrates the driven two-band
dynamics, ``magnus`` tabulates the closed-form occupation formulas against
the integrator, ``resonance`` prints shifted resonance positions, and
``sweep``/``figure`` drive the heatmap machinery from config files or the
shipped presets.

Exit codes: 0 on success, 2 for configuration or usage errors, 3 when a
computation fails (integration, root finding, accuracy guards).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .dynamics import EvolutionConfig, occupation_series
from .lattice import BandParameters, GaugeError, LatticeSpec, extract_params
from .magnus import pb_first_order, pb_second_order
from .model import DriveParameters
from .numerics import AccuracyError, IntegrationError
from .spectral import DegenerateLevelError, RootBracketError
from .sweep import (
    PRESETS,
    ConfigError,
    load_sweep_config,
    resonance_report,
    run_figure,
    run_sweep,
    write_csv,
    write_heatmap,
)

__all__ = ["main"]


def _add_band_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group(
        "band parameters", "either a lattice (--v1, optional --v2/--phi) or "
        "direct values (--delta, --c0 and --jb or --j)")
    group.add_argument("--v1", type=float, help="primary lattice depth")
    group.add_argument("--v2", type=float, default=0.0,
                       help="second-harmonic depth (default 0)")
    group.add_argument("--phi", type=float, default=0.0,
                       help="second-harmonic phase (default 0)")
    group.add_argument("--delta", type=float, help="band gap")
    group.add_argument("--ja", type=float, default=0.0,
                       help="lower-band hopping (default 0)")
    group.add_argument("--jb", type=float, help="upper-band hopping")
    group.add_argument("--j", type=float,
                       help="hopping difference jb - ja, with ja = 0")
    group.add_argument("--c0", type=float, help="interband dipole element")


def _bands_from_args(args: argparse.Namespace) -> BandParameters:
    direct = [v for v in (args.delta, args.jb, args.j, args.c0)
              if v is not None]
    if args.v1 is not None:
        if direct:
            raise ConfigError(
                "give either a lattice (--v1 ...) or direct band "
                "parameters, not both")
        return extract_params(LatticeSpec(v1=args.v1, v2=args.v2,
                                          phi=args.phi))
    if args.delta is None or args.c0 is None:
        raise ConfigError(
            "band parameters need --v1 or the set --delta, --c0 and "
            "--jb or --j")
    if args.j is not None:
        if args.jb is not None:
            raise ConfigError("--j and --jb are mutually exclusive")
        return BandParameters(delta=args.delta, ja=0.0, jb=args.j,
                              c0=args.c0)
    if args.jb is None:
        raise ConfigError(
            "band parameters need --v1 or the set --delta, --c0 and "
            "--jb or --j")
    return BandParameters(delta=args.delta, ja=args.ja, jb=args.jb,
                          c0=args.c0)


def _emit_table(path: str | None, header: list[str],
                rows: list[str]) -> None:
    text = "\n".join(header + rows) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
        print(f"wrote {path}")


def _cmd_bands(args: argparse.Namespace) -> int:
    bands = extract_params(LatticeSpec(v1=args.v1, v2=args.v2, phi=args.phi))
    for name in ("delta", "ja", "jb", "c0", "j"):
        print(f"{name} = {getattr(bands, name):.12g}")
    return 0


def _cmd_evolve(args: argparse.Namespace) -> int:
    bands = _bands_from_args(args)
    p = DriveParameters(bands=bands, force=args.force, k=args.k)
    cfg = EvolutionConfig(t_final=args.periods * p.t_bloch, tol=args.tol,
                          sample_dt=p.t_bloch / args.samples,
                          gauge=args.gauge)
    series = occupation_series(p, cfg)
    header = [
        f"# force={args.force:.12g}",
        f"# k={args.k:.12g}",
        f"# delta={bands.delta:.12g}",
        f"# j={bands.j:.12g}",
        f"# c0={bands.c0:.12g}",
        f"# tol={args.tol:g}",
        f"# gauge={args.gauge}",
        "# columns=t, upper_occupation",
    ]
    rows = [f"{t:.12g}, {v:.12g}"
            for t, v in zip(series.times, series.values)]
    _emit_table(args.out, header, rows)
    return 0


def _cmd_magnus(args: argparse.Namespace) -> int:
    bands = _bands_from_args(args)
    p = DriveParameters(bands=bands, force=args.force)
    cfg = EvolutionConfig(t_final=args.periods * p.t_bloch, tol=args.tol,
                          sample_dt=args.periods * p.t_bloch
                          / (args.points - 1))
    series = occupation_series(p, cfg)
    header = [
        f"# force={args.force:.12g}",
        f"# delta={bands.delta:.12g}",
        f"# j={bands.j:.12g}",
        f"# c0={bands.c0:.12g}",
        "# columns=t, pb_order1, pb_order2, pb_exact",
    ]
    rows = []
    for t, exact in zip(series.times, series.values):
        rows.append(f"{t:.12g}, {pb_first_order(p, t):.12g}, "
                    f"{pb_second_order(p, t):.12g}, {exact:.12g}")
    _emit_table(args.out, header, rows)
    return 0


def _cmd_resonance(args: argparse.Namespace) -> int:
    bands = _bands_from_args(args)
    sys.stdout.write(resonance_report(bands, m_max=args.m_max))
    return 0


def _write_sweep_outputs(results, base: str, out_dir: Path,
                         scale: str, colormap: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for engine, result in results.items():
        csv_path = out_dir / f"{base}_{engine}.csv"
        write_csv(result, csv_path)
        print(f"wrote {csv_path}")
        ext = ".pgm" if colormap == "gray" else ".ppm"
        map_path = out_dir / f"{base}_{engine}{ext}"
        write_heatmap(result, map_path, scale=scale, colormap=colormap)
        print(f"wrote {map_path}")
        missing = result.metadata.get("missing", "0")
        if missing != "0":
            print(f"warning: {missing} missing cells in {engine} result",
                  file=sys.stderr)
        for line in result.diagnostics[:10]:
            print(f"warning: {line}", file=sys.stderr)


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg = load_sweep_config(args.config)
    if args.engine is not None:
        cfg = replace(cfg, engine=args.engine)
    results = run_sweep(cfg, workers=args.workers)
    _write_sweep_outputs(results, Path(args.config).stem, Path(args.out),
                         scale=args.scale or cfg.scale,
                         colormap=args.colormap or cfg.colormap)
    return 0


def _cmd_figure(args: argparse.Namespace) -> int:
    paths = run_figure(args.name, args.out, workers=args.workers,
                       scale=args.scale, colormap=args.colormap)
    for path in paths.values():
        print(f"wrote {path}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lzsim",
        description="Interband interferometry of tilted optical lattices.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bands",
                       help="extract band parameters from a lattice")
    p.add_argument("--v1", type=float, required=True,
                   help="primary lattice depth")
    p.add_argument("--v2", type=float, default=0.0)
    p.add_argument("--phi", type=float, default=0.0)
    p.set_defaults(func=_cmd_bands)

    p = sub.add_parser("evolve",
                       help="integrate the driven dynamics at one k")
    _add_band_arguments(p)
    p.add_argument("--force", type=float, required=True,
                   help="lattice tilt per site")
    p.add_argument("--k", type=float, default=0.0,
                   help="initial quasimomentum (default 0)")
    p.add_argument("--periods", type=float, default=2.0,
                   help="duration in Bloch periods (default 2)")
    p.add_argument("--samples", type=int, default=64,
                   help="samples per Bloch period (default 64)")
    p.add_argument("--tol", type=float, default=1e-9,
                   help="integrator tolerance (default 1e-9)")
    p.add_argument("--gauge", choices=("rotating", "band"),
                   default="rotating")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("magnus",
                       help="closed-form occupations against the integrator")
    _add_band_arguments(p)
    p.add_argument("--force", type=float, required=True)
    p.add_argument("--periods", type=float, default=2.0,
                   help="duration in Bloch periods (default 2)")
    p.add_argument("--points", type=int, default=201,
                   help="time samples (default 201)")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=_cmd_magnus)

    p = sub.add_parser("resonance",
                       help="print shifted resonance positions")
    _add_band_arguments(p)
    p.add_argument("--m-max", type=int, default=6,
                   help="highest resonance order (default 6)")
    p.set_defaults(func=_cmd_resonance)

    p = sub.add_parser("sweep", help="run a sweep from a config file")
    p.add_argument("--config", required=True, help="sweep config path")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--engine", choices=("analytic", "numeric", "both"),
                   help="override the configured engine")
    p.add_argument("--scale", choices=("linear", "log"),
                   help="override the configured heatmap scale")
    p.add_argument("--colormap", choices=("gray", "rainbow"),
                   help="override the configured colormap")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("figure", help="run a canonical preset")
    p.add_argument("name", choices=PRESETS)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--scale", choices=("linear", "log"))
    p.add_argument("--colormap", choices=("gray", "rainbow"))
    p.set_defaults(func=_cmd_figure)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RootBracketError, IntegrationError, AccuracyError, GaugeError,
            DegenerateLevelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
