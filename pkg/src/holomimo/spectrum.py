"""Angular power spectra: isotropic fields and von Mises-Fisher mixtures.

A spectrum models the distribution of multipath power over propagation
directions at one link end.  Non-isotropic spectra are mixtures of 3-D VMF
densities whose mean directions come from standardized cluster tables
(3GPP TR 38.901 CDL format) and whose shared concentration is derived from
the table-level angular spread.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import EmptyTable, MalformedTableFile, SpreadOutOfRange

__all__ = [
    "VmfComponent",
    "AngularPowerSpectrum",
    "CdlClusterRow",
    "vmf_density",
    "spectrum_value",
    "concentration_from_spread",
    "spectra_from_cdl",
    "load_cdl_table",
    "rotate_spectrum",
]

# Below this concentration the VMF density is numerically indistinguishable
# from the isotropic limit 1/(4*pi).
_ISOTROPIC_ALPHA = 1e-6

_SPREAD_LIMIT_DEG = 21.0

_TABLE_COLUMNS = ["cluster_id", "power_db", "aod_deg", "zod_deg", "aoa_deg", "zoa_deg"]


def _wrap_azimuth(phi):
    """Wrap angle(s) to (-pi, pi]."""
    wrapped = np.mod(-np.asarray(phi, dtype=float) + np.pi, 2.0 * np.pi)
    return np.pi - wrapped


@dataclass(frozen=True)
class VmfComponent:
    """One von Mises-Fisher mixture component on the unit sphere."""

    weight: float
    mean_azimuth: float  # radians, (-pi, pi]
    mean_elevation: float  # radians, [0, pi]
    concentration: float  # >= 0

    def __post_init__(self):
        if self.weight <= 0.0:
            raise ValueError(f"component weight must be positive, got {self.weight}")
        if self.concentration < 0.0:
            raise ValueError(
                f"concentration must be nonnegative, got {self.concentration}"
            )
        if not 0.0 <= self.mean_elevation <= math.pi:
            raise ValueError(
                f"mean elevation must lie in [0, pi], got {self.mean_elevation}"
            )
        object.__setattr__(
            self, "mean_azimuth", float(_wrap_azimuth(self.mean_azimuth))
        )


@dataclass(frozen=True)
class AngularPowerSpectrum:
    """Angular power distribution at one link end.

    ``kind`` is either ``"isotropic"`` (value 1 everywhere, components empty)
    or ``"vmf"`` (mixture of VMF probability densities, weights summing to 1).
    """

    kind: str
    components: tuple[VmfComponent, ...] = ()

    @cached_property
    def _mixture_arrays(self):
        """(mean unit vectors, concentrations, weighted front factors,
        constant isotropic-limit term) for batched evaluation."""
        means, alphas, coefs = [], [], []
        constant = 0.0
        for c in self.components:
            if c.concentration < _ISOTROPIC_ALPHA:
                constant += c.weight / (4.0 * math.pi)
                continue
            st, ct = math.sin(c.mean_elevation), math.cos(c.mean_elevation)
            means.append(
                [st * math.cos(c.mean_azimuth), st * math.sin(c.mean_azimuth), ct]
            )
            a = c.concentration
            alphas.append(a)
            coefs.append(
                c.weight * a / (2.0 * math.pi * (1.0 - math.exp(-2.0 * a)))
            )
        return (
            np.array(means).reshape(-1, 3),
            np.array(alphas),
            np.array(coefs),
            constant,
        )

    def __post_init__(self):
        if self.kind not in ("isotropic", "vmf"):
            raise ValueError(f"unknown spectrum kind {self.kind!r}")
        if self.kind == "isotropic" and self.components:
            raise ValueError("isotropic spectrum carries no components")
        if self.kind == "vmf":
            if not self.components:
                raise ValueError("vmf spectrum needs at least one component")
            total = sum(c.weight for c in self.components)
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"component weights sum to {total}, expected 1")

    @staticmethod
    def isotropic() -> "AngularPowerSpectrum":
        return AngularPowerSpectrum(kind="isotropic")

    @staticmethod
    def mixture(components) -> "AngularPowerSpectrum":
        return AngularPowerSpectrum(kind="vmf", components=tuple(components))

    def digest_fields(self) -> tuple:
        """Hashable summary used in synthesis-plan metadata."""
        return (
            self.kind,
            tuple(
                (c.weight, c.mean_azimuth, c.mean_elevation, c.concentration)
                for c in self.components
            ),
        )


def vmf_density(component: VmfComponent, elevation, azimuth):
    """VMF probability density per steradian at (elevation, azimuth).

    Evaluates a/(4*pi*sinh(a)) * exp(a*(sin(t)sin(t0)cos(p-p0) + cos(t)cos(t0)))
    in a form stable for large concentrations:
    a*exp(a*(dot-1)) / (2*pi*(1-exp(-2a))).  Below concentration 1e-6 the
    isotropic limit 1/(4*pi) is returned.  Accepts scalars or arrays.
    """
    a = component.concentration
    elevation = np.asarray(elevation, dtype=float)
    azimuth = np.asarray(azimuth, dtype=float)
    if a < _ISOTROPIC_ALPHA:
        out = np.full(np.broadcast(elevation, azimuth).shape, 1.0 / (4.0 * math.pi))
        return out if out.ndim else float(out)
    dot = np.sin(elevation) * math.sin(component.mean_elevation) * np.cos(
        azimuth - component.mean_azimuth
    ) + np.cos(elevation) * math.cos(component.mean_elevation)
    out = a * np.exp(a * (dot - 1.0)) / (2.0 * math.pi * (1.0 - math.exp(-2.0 * a)))
    return out if out.ndim else float(out)


def spectrum_value(spectrum: AngularPowerSpectrum, elevation, azimuth):
    """Spectrum value A^2 at (elevation, azimuth); vectorized over arrays.

    The mixture is evaluated in one batch: the exponent of every component
    is the 3-D dot product of the evaluation direction with the component's
    mean direction, so all components reduce to a single matrix product.
    """
    if spectrum.kind == "isotropic":
        out = np.ones(np.broadcast(np.asarray(elevation), np.asarray(azimuth)).shape)
        return out if out.ndim else 1.0
    elevation = np.asarray(elevation, dtype=float)
    azimuth = np.asarray(azimuth, dtype=float)
    elevation, azimuth = np.broadcast_arrays(elevation, azimuth)
    means, alphas, coefs, constant = spectrum._mixture_arrays
    sin_t = np.sin(elevation)
    points = np.stack(
        [sin_t * np.cos(azimuth), sin_t * np.sin(azimuth), np.cos(elevation)],
        axis=-1,
    )
    out = np.full(elevation.shape, constant)
    if means.size:
        dots = points.reshape(-1, 3) @ means.T
        out = out + (np.exp(alphas * (dots - 1.0)) @ coefs).reshape(elevation.shape)
    return out if out.ndim else float(out)


def concentration_from_spread(spread_deg: float) -> float:
    """VMF concentration from an angular spread in degrees.

    Valid for small spreads (0, 21) degrees; outside that range the
    small-spread approximation breaks down and SpreadOutOfRange is raised.
    """
    if not 0.0 < spread_deg < _SPREAD_LIMIT_DEG:
        raise SpreadOutOfRange(
            f"angular spread {spread_deg} deg outside validity range "
            f"(0, {_SPREAD_LIMIT_DEG}) deg"
        )
    return 212.9**2 / spread_deg**2


@dataclass(frozen=True)
class CdlClusterRow:
    """One cluster of a CDL table: power and departure/arrival angles."""

    cluster_id: int
    power_db: float
    aod_deg: float
    zod_deg: float
    aoa_deg: float
    zoa_deg: float

    def __post_init__(self):
        angles = (self.power_db, self.aod_deg, self.zod_deg, self.aoa_deg, self.zoa_deg)
        if not all(math.isfinite(a) for a in angles):
            raise ValueError(f"non-finite value in cluster row {self.cluster_id}")
        for name, zenith in (("zod_deg", self.zod_deg), ("zoa_deg", self.zoa_deg)):
            if not 0.0 <= zenith <= 180.0:
                raise ValueError(
                    f"{name}={zenith} outside [0, 180] in cluster {self.cluster_id}"
                )


def spectra_from_cdl(rows, asd_deg: float, asa_deg: float):
    """Build the (departure, arrival) spectrum pair from CDL cluster rows.

    One VMF component per cluster at each end: departure means from
    (AoD, ZoD), arrival means from (AoA, ZoA).  All components at one end
    share the concentration derived from the table-level departure/arrival
    spread.  Weights are the normalized linear cluster powers.
    """
    rows = list(rows)
    if not rows:
        raise EmptyTable("cluster table has no rows")
    alpha_dep = concentration_from_spread(asd_deg)
    alpha_arr = concentration_from_spread(asa_deg)

    powers = np.array([10.0 ** (r.power_db / 10.0) for r in rows])
    weights = powers / powers.sum()
    # Renormalize in compensated form so the invariant sum == 1 holds tightly.
    weights = weights / math.fsum(weights)

    dep = [
        VmfComponent(
            weight=w,
            mean_azimuth=math.radians(r.aod_deg),
            mean_elevation=math.radians(r.zod_deg),
            concentration=alpha_dep,
        )
        for w, r in zip(weights, rows)
    ]
    arr = [
        VmfComponent(
            weight=w,
            mean_azimuth=math.radians(r.aoa_deg),
            mean_elevation=math.radians(r.zoa_deg),
            concentration=alpha_arr,
        )
        for w, r in zip(weights, rows)
    ]
    return AngularPowerSpectrum.mixture(dep), AngularPowerSpectrum.mixture(arr)


def load_cdl_table(path) -> tuple[list[CdlClusterRow], dict]:
    """Load a CDL cluster table CSV and its JSON metadata sidecar.

    The CSV header must be exactly ``cluster_id,power_db,aod_deg,zod_deg,
    aoa_deg,zoa_deg``.  The sidecar ``<stem>.json`` next to the table carries
    ``asd_deg`` and ``asa_deg``; it is optional and an empty dict is returned
    when absent.
    """
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise EmptyTable(f"{path}: file is empty") from None
            if [h.strip() for h in header] != _TABLE_COLUMNS:
                raise MalformedTableFile(
                    f"{path}: expected header {','.join(_TABLE_COLUMNS)}"
                )
            rows = []
            for lineno, rec in enumerate(reader, start=2):
                if not rec:
                    continue
                if len(rec) != len(_TABLE_COLUMNS):
                    raise MalformedTableFile(f"{path}:{lineno}: wrong column count")
                try:
                    rows.append(
                        CdlClusterRow(
                            cluster_id=int(rec[0]),
                            power_db=float(rec[1]),
                            aod_deg=float(rec[2]),
                            zod_deg=float(rec[3]),
                            aoa_deg=float(rec[4]),
                            zoa_deg=float(rec[5]),
                        )
                    )
                except ValueError as exc:
                    raise MalformedTableFile(f"{path}:{lineno}: {exc}") from exc
    except OSError as exc:
        raise MalformedTableFile(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise EmptyTable(f"{path}: no cluster rows")

    meta = {}
    sidecar = path.with_suffix(".json")
    if sidecar.exists():
        try:
            meta = json.loads(sidecar.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise MalformedTableFile(f"cannot read sidecar {sidecar}: {exc}") from exc
    return rows, meta


def rotate_spectrum(
    spectrum: AngularPowerSpectrum, azimuth_offset_rad: float
) -> AngularPowerSpectrum:
    """Rotate all component mean azimuths by a common offset.

    Isotropic spectra are rotation invariant and returned unchanged.
    """
    if spectrum.kind == "isotropic" or azimuth_offset_rad == 0.0:
        return spectrum
    rotated = [
        VmfComponent(
            weight=c.weight,
            mean_azimuth=float(_wrap_azimuth(c.mean_azimuth + azimuth_offset_rad)),
            mean_elevation=c.mean_elevation,
            concentration=c.concentration,
        )
        for c in spectrum.components
    ]
    return AngularPowerSpectrum.mixture(rotated)
