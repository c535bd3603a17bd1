"""Experiment orchestration: Monte Carlo sweeps and result emission.

A sweep evaluates the mean and standard deviation of capacity over channel
realizations for every spacing in the scenario.  Realizations use
counter-based random streams keyed by (seed, realization index), so results
are bitwise identical regardless of how many worker processes are used;
aggregation assembles per-realization values in index order before reducing.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .capacity import drop_users, mu_sum_capacity, su_capacity
from .config import ScenarioConfig
from .coupling import (
    ElementPattern,
    FromSParams,
    HannanLimited,
    RelativeEta,
    build_coupling_profile,
    load_pattern_file,
    load_sparams_file,
)
from .geometry import build_planar_array
from .lattice import build_lattice
from .spectrum import (
    AngularPowerSpectrum,
    load_cdl_table,
    rotate_spectrum,
    spectra_from_cdl,
)
from .synthesis import build_plan, sample_channel

__all__ = ["SweepRow", "SweepResult", "run_single_user_sweep",
           "run_multi_user_sweep", "run_sweep", "render", "emit"]

CSV_HEADER = "spacing_wl,efficiency_mode,spectrum,pattern,mean_bits,std_bits,realizations,seed"


@dataclass(frozen=True)
class SweepRow:
    """Aggregated capacity statistics for one swept operating point."""

    spacing_wl: float
    efficiency_mode: str
    spectrum: str
    pattern: str
    mean_bits: float
    std_bits: float
    realizations: int
    seed: int
    not_converged: int = 0  # multi-user solver failures; JSON output only


@dataclass(frozen=True)
class SweepResult:
    rows: tuple
    config: ScenarioConfig


def _spectra_for(config: ScenarioConfig):
    spec = config.spectrum_spec
    if spec["kind"] == "isotropic":
        iso = AngularPowerSpectrum.isotropic()
        return iso, iso
    rows, _meta = load_cdl_table(spec["path"])
    return spectra_from_cdl(rows, asd_deg=spec["asd_deg"], asa_deg=spec["asa_deg"])


def _pattern_source_for(config: ScenarioConfig):
    spec = config.pattern_spec
    if spec["kind"] == "uniform":
        return ElementPattern.uniform()
    if spec["kind"] == "dipole":
        return ElementPattern.dipole()
    patterns = load_pattern_file(spec["path"])
    # A single filed pattern is shared across all elements of both ends.
    return patterns[0] if len(patterns) == 1 else patterns


def _efficiency_modes_for(config: ScenarioConfig):
    spec = config.efficiency_spec
    if spec["kind"] == "relative_eta":
        mode = RelativeEta(eta=spec["eta"])
        return mode, mode, f"relative_eta={spec['eta']:.9g}"
    if spec["kind"] == "hannan":
        return HannanLimited(), HannanLimited(), "hannan"
    bs = FromSParams(load_sparams_file(spec["bs_path"]))
    ue = FromSParams(load_sparams_file(spec["ue_path"]))
    return bs, ue, "sparams"


def _labels_for(config: ScenarioConfig):
    return config.spectrum_spec["kind"], config.pattern_spec["kind"]


def _chunks(count: int, parts: int):
    """Split range(count) into at most ``parts`` contiguous chunks."""
    parts = max(1, min(parts, count))
    bounds = np.linspace(0, count, parts + 1).astype(int)
    return [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _su_chunk(args):
    plan, seed, snr_db, indices = args
    return [
        su_capacity(sample_channel(plan, seed, r).matrix, snr_db).value_bits
        for r in indices
    ]


def _run_chunked(worker, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        collected = [worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            collected = list(pool.map(worker, tasks))
    return [value for chunk in collected for value in chunk]


def _mean_std(values: np.ndarray):
    mean = float(np.mean(values))
    std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return mean, std


def run_single_user_sweep(config: ScenarioConfig, jobs: int = 1) -> SweepResult:
    """Mean/std single-user capacity per spacing, deterministic in the seed."""
    config.validate()
    if config.users != 1:
        raise ValueError("single-user sweep needs users == 1")
    bs_spectrum, ue_spectrum = _spectra_for(config)
    pattern_source = _pattern_source_for(config)
    bs_mode, ue_mode, mode_label = _efficiency_modes_for(config)
    spectrum_label, pattern_label = _labels_for(config)

    # Lattices depend on aperture and spectrum only; share them across spacings.
    bs_lattice = build_lattice(config.bs_aperture, config.bs_aperture, bs_spectrum)
    ue_lattice = build_lattice(config.ue_aperture, config.ue_aperture, ue_spectrum)

    rows = []
    for spacing in config.spacing_list:
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
            bs_lattice=bs_lattice,
            ue_lattice=ue_lattice,
        )
        tasks = [
            (plan, config.seed, config.snr_db, chunk)
            for chunk in _chunks(config.realizations, jobs)
        ]
        values = np.array(_run_chunked(_su_chunk, tasks, jobs))
        mean, std = _mean_std(values)
        rows.append(
            SweepRow(
                spacing_wl=spacing,
                efficiency_mode=mode_label,
                spectrum=spectrum_label,
                pattern=pattern_label,
                mean_bits=mean,
                std_bits=std,
                realizations=config.realizations,
                seed=config.seed,
            )
        )
    return SweepResult(rows=tuple(rows), config=config)


def _drop_seed(seed: int, realization: int) -> int:
    """Stable per-realization seed for the user-drop stream."""
    state = np.random.SeedSequence(
        (seed & ((1 << 64) - 1), realization, 0xD0B)
    ).generate_state(1, np.uint64)
    return int(state[0])


def _mu_chunk(args):
    (bundle, indices) = args
    (
        bs_geom,
        ue_geom,
        bs_spectrum,
        ue_spectrum,
        bs_coupling,
        ue_coupling,
        bs_lattice,
        ue_lattice,
        users,
        seed,
        snr_db,
    ) = bundle
    budget = 10.0 ** (snr_db / 10.0)
    isotropic = bs_spectrum.kind == "isotropic" and ue_spectrum.kind == "isotropic"
    shared_plan = None
    if isotropic:
        shared_plan = build_plan(
            bs_geom, ue_geom, bs_spectrum, ue_spectrum, bs_coupling, ue_coupling,
            bs_lattice=bs_lattice, ue_lattice=ue_lattice,
        )
    out = []
    for r in indices:
        drops = drop_users(users, _drop_seed(seed, r))
        channels = []
        for k, drop in enumerate(drops):
            if shared_plan is not None:
                plan = shared_plan
            else:
                # The sector azimuth rotates the departure spectrum; the
                # terminal orientation rotates the arrival spectrum.
                plan = build_plan(
                    bs_geom,
                    ue_geom,
                    rotate_spectrum(bs_spectrum, math.radians(drop.azimuth_deg)),
                    rotate_spectrum(ue_spectrum, math.radians(drop.orientation_deg)),
                    bs_coupling,
                    ue_coupling,
                )
            h = sample_channel(plan, seed, (r << 32) | k).matrix
            channels.append(h * 10.0 ** (drop.snr_db / 20.0))
        report = mu_sum_capacity(channels, budget)
        out.append((report.value_bits, report.converged))
    return out


def run_multi_user_sweep(config: ScenarioConfig, jobs: int = 1) -> SweepResult:
    """Mean/std multi-user sum capacity per spacing.

    Every realization drops fresh users (seed-derived), synthesizes each
    user's channel with its rotated spectra and relative pathloss, and runs
    the sum-power iterative water-filling solver.
    """
    config.validate()
    if config.users < 2:
        raise ValueError("multi-user sweep needs users >= 2")
    bs_spectrum, ue_spectrum = _spectra_for(config)
    pattern_source = _pattern_source_for(config)
    bs_mode, ue_mode, mode_label = _efficiency_modes_for(config)
    spectrum_label, pattern_label = _labels_for(config)

    bs_lattice = build_lattice(config.bs_aperture, config.bs_aperture, bs_spectrum)
    ue_lattice = build_lattice(config.ue_aperture, config.ue_aperture, ue_spectrum)

    rows = []
    for spacing in config.spacing_list:
        bs_geom = build_planar_array(
            config.bs_aperture, config.bs_aperture, spacing, spacing
        )
        ue_geom = build_planar_array(
            config.ue_aperture, config.ue_aperture, spacing, spacing
        )
        bundle = (
            bs_geom,
            ue_geom,
            bs_spectrum,
            ue_spectrum,
            build_coupling_profile(bs_geom, pattern_source, bs_mode),
            build_coupling_profile(ue_geom, pattern_source, ue_mode),
            bs_lattice,
            ue_lattice,
            config.users,
            config.seed,
            config.snr_db,
        )
        tasks = [(bundle, chunk) for chunk in _chunks(config.realizations, jobs)]
        pairs = _run_chunked(_mu_chunk, tasks, jobs)
        values = np.array([v for v, _ in pairs])
        failures = sum(1 for _, ok in pairs if not ok)
        mean, std = _mean_std(values)
        rows.append(
            SweepRow(
                spacing_wl=spacing,
                efficiency_mode=mode_label,
                spectrum=spectrum_label,
                pattern=pattern_label,
                mean_bits=mean,
                std_bits=std,
                realizations=config.realizations,
                seed=config.seed,
                not_converged=failures,
            )
        )
    return SweepResult(rows=tuple(rows), config=config)


def run_sweep(config: ScenarioConfig, jobs: int = 1) -> SweepResult:
    """Dispatch to the single-user or multi-user sweep on config.users."""
    if config.users == 1:
        return run_single_user_sweep(config, jobs=jobs)
    return run_multi_user_sweep(config, jobs=jobs)


def _format_row_csv(row: SweepRow) -> str:
    return ",".join(
        [
            format(row.spacing_wl, ".9g"),
            row.efficiency_mode,
            row.spectrum,
            row.pattern,
            format(row.mean_bits, ".9g"),
            format(row.std_bits, ".9g"),
            str(row.realizations),
            str(row.seed),
        ]
    )


def render(result: SweepResult, fmt: str = "csv") -> str:
    """Render a sweep result as CSV (9 significant digits) or JSON (exact
    floats plus the full config echo)."""
    if fmt == "csv":
        lines = [CSV_HEADER] + [_format_row_csv(r) for r in result.rows]
        return "\n".join(lines) + "\n"
    if fmt == "json":
        body = {
            "rows": [
                {
                    "spacing_wl": r.spacing_wl,
                    "efficiency_mode": r.efficiency_mode,
                    "spectrum": r.spectrum,
                    "pattern": r.pattern,
                    "mean_bits": r.mean_bits,
                    "std_bits": r.std_bits,
                    "realizations": r.realizations,
                    "seed": r.seed,
                    "not_converged": r.not_converged,
                }
                for r in result.rows
            ],
            "config": result.config.to_dict(),
        }
        return json.dumps(body, indent=2) + "\n"
    raise ValueError(f"format must be csv or json, got {fmt!r}")


def emit(result: SweepResult, path, fmt: str = "csv") -> None:
    """Write a rendered sweep result to a file with LF line endings."""
    payload = render(result, fmt)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(payload)
