"""The ``holo`` command line interface.

Exit codes: 0 success, 2 configuration error, 3 input-file error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import PRESET_NAMES, load_config, preset
from .errors import ConfigError, InputFileError, NumericalError
from .sweep import (
    emit,
    render,
    run_multi_user_sweep,
    run_single_user_sweep,
    run_sweep,
    _efficiency_modes_for,
    _pattern_source_for,
    _spectra_for,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_NUMERICAL = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="holo",
        description="Holographic MIMO channel synthesis and capacity sweeps",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    lattice = sub.add_parser(
        "lattice", help="dump harmonic indices and spectral integrals"
    )
    lattice.add_argument("--config", required=True)
    lattice.add_argument("--end", choices=("bs", "ue"), default="bs")
    lattice.add_argument("--out", default=None, help="output CSV (default stdout)")

    synth = sub.add_parser("synth", help="write one channel realization as CSV")
    synth.add_argument("--config", required=True)
    synth.add_argument("--out", required=True)
    synth.add_argument("--realization", type=int, default=0)
    synth.add_argument(
        "--spacing-index", type=int, default=0,
        help="which entry of spacing_list to synthesize (default first)",
    )

    capacity = sub.add_parser("capacity", help="run a capacity sweep from a config")
    capacity.add_argument("mode", choices=("su", "mu"))
    capacity.add_argument("--config", required=True)
    capacity.add_argument("--out", default=None, help="output file (default stdout)")
    capacity.add_argument("--format", choices=("csv", "json"), default="csv")
    capacity.add_argument("--jobs", type=int, default=1)

    sweep = sub.add_parser("sweep", help="run a named preset sweep")
    sweep.add_argument("--preset", required=True, choices=PRESET_NAMES)
    sweep.add_argument("--seed", type=int, default=None)
    sweep.add_argument("--realizations", type=int, default=None)
    sweep.add_argument("--out", default=None, help="output file (default stdout)")
    sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    sweep.add_argument("--jobs", type=int, default=1)
    return parser


def _print_or_emit(result, out, fmt):
    if out is None:
        sys.stdout.write(render(result, fmt))
    else:
        emit(result, out, fmt)


def _cmd_lattice(args) -> int:
    from .lattice import build_lattice

    config = load_config(args.config)
    bs_spectrum, ue_spectrum = _spectra_for(config)
    if args.end == "bs":
        lattice = build_lattice(config.bs_aperture, config.bs_aperture, bs_spectrum)
    else:
        lattice = build_lattice(config.ue_aperture, config.ue_aperture, ue_spectrum)
    lines = ["ix,iy,integral"] + [
        f"{idx.ix},{idx.iy},{format(val, '.9g')}"
        for idx, val in zip(lattice.indices, lattice.marginal_integrals)
    ]
    text = "\n".join(lines) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return EXIT_OK


def _cmd_synth(args) -> int:
    from .coupling import build_coupling_profile
    from .geometry import build_planar_array
    from .synthesis import build_plan, sample_channel

    config = load_config(args.config)
    if not 0 <= args.spacing_index < len(config.spacing_list):
        raise ConfigError(
            f"spacing index {args.spacing_index} outside the configured list"
        )
    spacing = config.spacing_list[args.spacing_index]
    bs_spectrum, ue_spectrum = _spectra_for(config)
    pattern_source = _pattern_source_for(config)
    bs_mode, ue_mode, _ = _efficiency_modes_for(config)
    bs_geom = build_planar_array(
        config.bs_aperture, config.bs_aperture, spacing, spacing
    )
    ue_geom = build_planar_array(
        config.ue_aperture, config.ue_aperture, spacing, spacing
    )
    plan = build_plan(
        bs_geom,
        ue_geom,
        bs_spectrum,
        ue_spectrum,
        build_coupling_profile(bs_geom, pattern_source, bs_mode),
        build_coupling_profile(ue_geom, pattern_source, ue_mode),
    )
    matrix = sample_channel(plan, config.seed, args.realization).matrix
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("row,col,re,im\n")
        for i in range(matrix.shape[0]):
            for j in range(matrix.shape[1]):
                z = matrix[i, j]
                fh.write(f"{i},{j},{float(z.real)!r},{float(z.imag)!r}\n")
    return EXIT_OK


def _cmd_capacity(args) -> int:
    config = load_config(args.config)
    if args.mode == "su":
        if config.users != 1:
            raise ConfigError("capacity su requires users == 1 in the config")
        result = run_single_user_sweep(config, jobs=args.jobs)
    else:
        if config.users < 2:
            raise ConfigError("capacity mu requires users >= 2 in the config")
        result = run_multi_user_sweep(config, jobs=args.jobs)
    _print_or_emit(result, args.out, args.format)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    from dataclasses import replace

    config = preset(args.preset)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.realizations is not None:
        config = replace(config, realizations=args.realizations)
    config.validate()
    result = run_sweep(config, jobs=args.jobs)
    _print_or_emit(result, args.out, args.format)
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "lattice": _cmd_lattice,
        "synth": _cmd_synth,
        "capacity": _cmd_capacity,
        "sweep": _cmd_sweep,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InputFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
