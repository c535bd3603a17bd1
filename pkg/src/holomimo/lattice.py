"""Plane-wave harmonic lattice and spectral variance integrals.

For a planar aperture of size (L_x, L_y) wavelengths, the propagating Fourier
harmonics are the integer pairs inside the lattice ellipse
(ix/L_x)^2 + (iy/L_y)^2 <= 1.  Each harmonic owns a rectangular cell of the
direction-cosine plane of width 1/L per axis, anchored at the harmonic's own
direction-cosine point and extending away from broadside (the zero index owns
the symmetric strip [-1/L, 1/L]).  These cells tile the unit disk exactly
once and every point of the disk belongs to a cell whose harmonic lies inside
the ellipse, so the cell integrals of any spectrum conserve its full
upper-hemisphere measure (2*pi for the isotropic spectrum).

The per-cell integral of A^2(theta, phi) * sin(theta) dtheta dphi is computed
in direction cosines, where the Jacobian contributes 1/sqrt(1 - u^2 - v^2).
The substitution u = rho * sin(omega) with rho = sqrt(1 - v^2) absorbs the
disk-edge singularity, leaving a smooth integrand handled by adaptive
tensor Gauss-Legendre quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import (
    DegenerateSpectrum,
    IndexOutsideEllipse,
    NonPositiveInput,
    QuadratureNotConverged,
)
from .geometry import ArrayGeometry
from .spectrum import AngularPowerSpectrum, spectrum_value

__all__ = [
    "HarmonicIndex",
    "SpectralLattice",
    "VarianceTable",
    "enumerate_lattice",
    "harmonic_angles",
    "marginal_integral",
    "build_lattice",
    "build_variance_table",
    "harmonic_vector",
]

_ELLIPSE_TOL = 1e-12

# Quadrature controls: per-tile relative tolerance, Gauss orders of the
# coarse/fine estimates, and the bisection depth cap.
_TILE_RTOL = 1e-6
_TILE_ATOL = 1e-15
_N_COARSE = 12
_N_FINE = 24
_MAX_DEPTH = 14


class HarmonicIndex(NamedTuple):
    ix: int
    iy: int


def _in_ellipse(ix: int, iy: int, aperture_x: float, aperture_y: float) -> bool:
    return (ix / aperture_x) ** 2 + (iy / aperture_y) ** 2 <= 1.0 + _ELLIPSE_TOL


def _require_in_ellipse(index, aperture_x, aperture_y):
    ix, iy = index
    if not _in_ellipse(ix, iy, aperture_x, aperture_y):
        raise IndexOutsideEllipse(
            f"harmonic ({ix}, {iy}) outside the lattice ellipse of aperture "
            f"({aperture_x}, {aperture_y})"
        )


def enumerate_lattice(aperture_x: float, aperture_y: float) -> list[HarmonicIndex]:
    """All harmonics inside the lattice ellipse, sorted lexicographically."""
    if aperture_x <= 0 or aperture_y <= 0:
        raise NonPositiveInput("apertures must be strictly positive")
    kx = int(math.floor(aperture_x + _ELLIPSE_TOL))
    out = []
    for ix in range(-kx, kx + 1):
        for iy in range(-int(math.floor(aperture_y)) - 1, int(math.floor(aperture_y)) + 2):
            if _in_ellipse(ix, iy, aperture_x, aperture_y):
                out.append(HarmonicIndex(ix, iy))
    return sorted(out)


def harmonic_angles(
    index, aperture_x: float, aperture_y: float
) -> tuple[float, float]:
    """(elevation, azimuth) in radians of a harmonic's plane-wave direction.

    Elevation is arccos of the broadside direction cosine; azimuth is the
    four-quadrant angle of the (u, v) pair, defined as 0 at the broadside
    harmonic (0, 0).
    """
    _require_in_ellipse(index, aperture_x, aperture_y)
    ix, iy = index
    u = ix / aperture_x
    v = iy / aperture_y
    w2 = max(0.0, 1.0 - u * u - v * v)
    elevation = math.acos(math.sqrt(w2))
    azimuth = math.atan2(v, u) if (ix, iy) != (0, 0) else 0.0
    return elevation, azimuth


def _cell_interval(k: int, step: float) -> tuple[float, float]:
    """Direction-cosine interval owned by 1-D harmonic k (width 1/L away
    from broadside; the zero harmonic owns the symmetric double strip)."""
    if k > 0:
        return k * step, (k + 1) * step
    if k < 0:
        return (k - 1) * step, k * step
    return -step, step


@lru_cache(maxsize=32)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def _tile_estimate(evaluate, u0, u1, v0, v1, t0, t1, n):
    """Tensor Gauss-Legendre estimate over v in [v0, v1], t in [t0, t1].

    For each v node the u-interval is [u0, u1] clipped to the chord of the
    unit disk and mapped to omega = arcsin(u / rho); t parametrizes omega
    linearly, so the tile is a rectangle in (v, t) space.  v itself is
    parametrized by the smoothstep map v = v0 + (v1-v0)*(3s^2 - 2s^3), whose
    vanishing endpoint derivative turns the sqrt-type behavior of the chord
    width at circle tangencies into an analytic integrand.
    """
    x, w = _leggauss(n)
    s = 0.5 + 0.5 * x
    dv = v1 - v0
    v = v0 + dv * (3.0 - 2.0 * s) * s * s
    vjac = 6.0 * dv * s * (1.0 - s)
    rho = np.sqrt(np.maximum(0.0, 1.0 - v * v))
    lo = np.maximum(u0, -rho)
    hi = np.minimum(u1, rho)
    valid = (hi - lo) > 0.0
    if not np.any(valid):
        return 0.0
    # arcsin arguments clipped against roundoff at the circle boundary
    with np.errstate(divide="ignore", invalid="ignore"):
        om0 = np.arcsin(np.clip(np.where(valid, lo / rho, 0.0), -1.0, 1.0))
        om1 = np.arcsin(np.clip(np.where(valid, hi / rho, 0.0), -1.0, 1.0))
    t = 0.5 * (t1 + t0) + 0.5 * (t1 - t0) * x
    omega = om0[:, None] + (om1 - om0)[:, None] * t[None, :]
    u = rho[:, None] * np.sin(omega)
    wdir = rho[:, None] * np.cos(omega)  # sqrt(1 - u^2 - v^2), stable
    theta = np.arccos(np.clip(wdir, -1.0, 1.0))
    phi = np.arctan2(v[:, None], u)
    values = evaluate(theta, phi)
    jac = 0.5 * vjac * (om1 - om0) * 0.5 * (t1 - t0)
    return float(np.einsum("i,j,ij->", w, w, values * jac[:, None]))


def _integrate_tile(evaluate, u0, u1, v0, v1, t0, t1, depth):
    coarse = _tile_estimate(evaluate, u0, u1, v0, v1, t0, t1, _N_COARSE)
    fine = _tile_estimate(evaluate, u0, u1, v0, v1, t0, t1, _N_FINE)
    if abs(fine - coarse) <= _TILE_RTOL * abs(fine) + _TILE_ATOL:
        return fine
    if depth >= _MAX_DEPTH:
        raise QuadratureNotConverged(
            f"cell quadrature not converged after depth {depth}"
        )
    vm = 0.5 * (v0 + v1)
    tm = 0.5 * (t0 + t1)
    return (
        _integrate_tile(evaluate, u0, u1, v0, vm, t0, tm, depth + 1)
        + _integrate_tile(evaluate, u0, u1, v0, vm, tm, t1, depth + 1)
        + _integrate_tile(evaluate, u0, u1, vm, v1, t0, tm, depth + 1)
        + _integrate_tile(evaluate, u0, u1, vm, v1, tm, t1, depth + 1)
    )


def marginal_integral(
    index,
    spectrum: AngularPowerSpectrum,
    aperture_x: float,
    aperture_y: float,
) -> float:
    """Spectrum-weighted solid angle captured by one harmonic's cell.

    Integrates A^2 / sqrt(1 - u^2 - v^2) over the harmonic's direction-cosine
    cell intersected with the open unit disk (upper hemisphere).  Returns 0
    for in-ellipse harmonics whose cell lies entirely outside the disk.
    """
    _require_in_ellipse(index, aperture_x, aperture_y)
    ix, iy = index
    u0, u1 = _cell_interval(ix, 1.0 / aperture_x)
    v0, v1 = _cell_interval(iy, 1.0 / aperture_y)
    u0, u1 = max(u0, -1.0), min(u1, 1.0)
    v0, v1 = max(v0, -1.0), min(v1, 1.0)
    if u0 >= u1 or v0 >= v1:
        return 0.0
    # Cell entirely outside the disk: nearest corner at or beyond radius 1.
    near_u = min(abs(u0), abs(u1)) if u0 * u1 > 0 else 0.0
    near_v = min(abs(v0), abs(v1)) if v0 * v1 > 0 else 0.0
    if near_u * near_u + near_v * near_v >= 1.0:
        return 0.0

    def evaluate(theta, phi):
        return np.asarray(spectrum_value(spectrum, theta, phi), dtype=float)

    # Split v at the ordinates where the circle crosses the cell's vertical
    # edges; between the breakpoints the integrand is smooth.
    breakpoints = {v0, v1}
    for edge in (abs(u0), abs(u1)):
        if edge < 1.0:
            vb = math.sqrt(1.0 - edge * edge)
            for cand in (vb, -vb):
                if v0 < cand < v1:
                    breakpoints.add(cand)
    cuts = sorted(breakpoints)
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        total += _integrate_tile(evaluate, u0, u1, a, b, 0.0, 1.0, 0)
    return max(0.0, total)


@dataclass(frozen=True, eq=False)
class SpectralLattice:
    """Harmonic indices of one aperture with their spectral cell integrals."""

    aperture_x: float
    aperture_y: float
    indices: tuple[HarmonicIndex, ...]
    marginal_integrals: np.ndarray

    @property
    def cardinality(self) -> int:
        return len(self.indices)

    @property
    def total_integral(self) -> float:
        return float(self.marginal_integrals.sum())


def build_lattice(
    aperture_x: float, aperture_y: float, spectrum: AngularPowerSpectrum
) -> SpectralLattice:
    """Enumerate the lattice and compute every cell integral."""
    indices = enumerate_lattice(aperture_x, aperture_y)
    integrals = np.array(
        [marginal_integral(idx, spectrum, aperture_x, aperture_y) for idx in indices]
    )
    return SpectralLattice(
        aperture_x=aperture_x,
        aperture_y=aperture_y,
        indices=tuple(indices),
        marginal_integrals=integrals,
    )


@dataclass(frozen=True, eq=False)
class VarianceTable:
    """Separable per-harmonic-pair variances, normalized to unit total."""

    bs_lattice: SpectralLattice
    ue_lattice: SpectralLattice
    scale: float

    def variances(self) -> np.ndarray:
        """Variance matrix, shape (n_ue, n_bs), summing to 1."""
        return self.scale * np.outer(
            self.ue_lattice.marginal_integrals, self.bs_lattice.marginal_integrals
        )


def build_variance_table(
    bs_lattice: SpectralLattice, ue_lattice: SpectralLattice
) -> VarianceTable:
    """Combine the two link-end lattices into a normalized variance table."""
    s_bs = bs_lattice.total_integral
    s_ue = ue_lattice.total_integral
    if s_bs <= 0.0 or s_ue <= 0.0:
        raise DegenerateSpectrum("all marginal integrals vanished at one link end")
    return VarianceTable(
        bs_lattice=bs_lattice, ue_lattice=ue_lattice, scale=1.0 / (s_bs * s_ue)
    )


def harmonic_vector(index, geometry: ArrayGeometry, sign: int = 1) -> np.ndarray:
    """Sampled plane-wave basis vector of a harmonic on an array.

    Entry p is exp(sign * j * 2*pi * (ix*x_p/L_x + iy*y_p/L_y)) / sqrt(N);
    sign is -1 at the transmit end and +1 at the receive end.  The z phase
    term vanishes because the array lies in its local z=0 plane.
    """
    lx = geometry.aperture_x
    ly = geometry.aperture_y
    _require_in_ellipse(index, lx, ly)
    ix, iy = index
    phase = (2.0 * math.pi * sign) * (
        ix * geometry.elements[:, 0] / lx + iy * geometry.elements[:, 1] / ly
    )
    return np.exp(1j * phase) / math.sqrt(geometry.count)
