"""Capacity evaluation: water-filling, multi-user sum capacity, user drops.

Single-user capacity water-fills the channel's squared singular values under
a total power budget with unit noise per receive element.  Multi-user
downlink sum capacity is computed through the dual multiple-access channel
under a sum power constraint, iterating simultaneous per-user water-filling
with the averaged covariance update that guarantees convergence for any
number of users.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyGains, NonPositiveDistance, ZeroChannel

__all__ = [
    "PowerAllocation",
    "CapacityReport",
    "UserDrop",
    "waterfill",
    "su_capacity",
    "uma_pathloss_delta_db",
    "drop_users",
    "mu_sum_capacity",
]

_MASK64 = (1 << 64) - 1

# Distance slope of the urban-macro NLOS pathloss law, dB per decade.
_UMA_NLOS_SLOPE_DB = 39.08
_REFERENCE_DISTANCE_M = 50.0


@dataclass(frozen=True)
class PowerAllocation:
    """Per-mode transmit powers and the common water level."""

    powers: np.ndarray
    water_level: float


@dataclass(frozen=True)
class CapacityReport:
    """Capacity value with the allocation that achieved it."""

    value_bits: float
    allocation: PowerAllocation | None = None
    covariances: list | None = None  # per-user uplink covariances (multi-user)
    iterations: int = 1
    converged: bool = True
    history: np.ndarray | None = field(default=None, repr=False)


def waterfill(gains, total_power: float) -> tuple[PowerAllocation, float]:
    """Optimal power allocation over parallel channels.

    Returns powers p_i = max(0, mu - 1/g_i) with the water level mu chosen
    so the powers sum to the budget, and the capacity sum log2(1 + p_i*g_i).
    The active set is found exactly: gains are sorted descending and the
    closed-form water level for each active-set size is tested for
    consistency.  Nonpositive gains receive zero power.
    """
    g = np.atleast_1d(np.asarray(gains, dtype=float))
    if g.size == 0:
        raise EmptyGains("no channel gains")
    if total_power <= 0:
        raise ValueError(f"total power must be positive, got {total_power}")
    positive = g > 0.0
    if not positive.any():
        raise EmptyGains("no positive channel gains")

    gp = g[positive]
    order = np.argsort(gp)[::-1]
    inv = 1.0 / gp[order]
    cumulative = np.cumsum(inv)
    # Largest k with (P + sum_{i<=k} 1/g_i)/k >= 1/g_k keeps all k powers
    # nonnegative; the condition fails monotonically beyond the optimum.
    k = 1
    mu = total_power + cumulative[0]
    for trial in range(2, inv.size + 1):
        trial_mu = (total_power + cumulative[trial - 1]) / trial
        if trial_mu < inv[trial - 1]:
            break
        k, mu = trial, trial_mu

    powers_sorted = np.zeros_like(inv)
    powers_sorted[:k] = mu - inv[:k]
    powers_pos = np.empty_like(inv)
    powers_pos[order] = powers_sorted
    powers = np.zeros_like(g)
    powers[positive] = powers_pos

    capacity = float(np.sum(np.log2(1.0 + powers * g)))
    return PowerAllocation(powers=powers, water_level=float(mu)), capacity


def su_capacity(channel: np.ndarray, snr_db: float) -> CapacityReport:
    """Single-user capacity of a channel matrix by water-filling its modes.

    Unit noise power per receive element; the total transmit power budget is
    10^(snr_db/10).
    """
    channel = np.asarray(channel)
    singular = np.linalg.svd(channel, compute_uv=False)
    if not singular.size or np.all(singular < 1e-300):
        raise ZeroChannel("all singular values are numerically zero")
    gains = singular[singular > 0.0] ** 2
    budget = 10.0 ** (snr_db / 10.0)
    allocation, capacity = waterfill(gains, budget)
    return CapacityReport(value_bits=capacity, allocation=allocation)


def uma_pathloss_delta_db(distance_m: float) -> float:
    """Relative urban-macro NLOS pathloss in dB against the 50 m reference.

    Only the distance term of the pathloss law survives the reference
    normalization; all distance-independent terms cancel.  Positive values
    mean a stronger link than at 50 m.
    """
    if distance_m <= 0:
        raise NonPositiveDistance(f"distance must be positive, got {distance_m}")
    return -_UMA_NLOS_SLOPE_DB * (
        math.log10(distance_m) - math.log10(_REFERENCE_DISTANCE_M)
    )


@dataclass(frozen=True)
class UserDrop:
    """One user position in the cell sector plus its link budget."""

    distance_m: float
    azimuth_deg: float
    snr_db: float
    orientation_deg: float


def drop_users(count: int, seed: int) -> list[UserDrop]:
    """Drop users uniformly in the sector, deterministically per (seed, index).

    Distance is uniform in [25, 100] m, sector azimuth uniform in
    [-120, 120] degrees, array orientation uniform in [-180, 180) degrees;
    the SNR is the relative pathloss against the 50 m / 0 dB reference.
    """
    if count < 1:
        raise ValueError(f"need at least one user, got {count}")
    drops = []
    for index in range(count):
        rng = np.random.default_rng(
            np.random.SeedSequence((seed & _MASK64, index))
        )
        distance = rng.uniform(25.0, 100.0)
        azimuth = rng.uniform(-120.0, 120.0)
        orientation = rng.uniform(-180.0, 180.0)
        drops.append(
            UserDrop(
                distance_m=distance,
                azimuth_deg=azimuth,
                snr_db=uma_pathloss_delta_db(distance),
                orientation_deg=orientation,
            )
        )
    return drops


def _hermitize(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.conj().T)


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    lam, vec = np.linalg.eigh(_hermitize(matrix))
    return (vec * np.sqrt(np.maximum(lam, 0.0))[None, :]) @ vec.conj().T


def mu_sum_capacity(
    channels,
    total_power: float,
    tol: float = 1e-6,
    max_iterations: int = 1000,
) -> CapacityReport:
    """Downlink sum capacity via the dual multiple-access channel.

    ``channels`` holds one matrix per user (receive x transmit elements,
    any per-user SNR scaling already applied), sharing the transmit
    dimension.  Each iteration whitens every user by the interference of the
    others, water-fills all whitened eigenmodes jointly against the common
    budget, and applies the averaged covariance update
    new = (1/K)*waterfill + (K-1)/K*old.  Iteration stops when the sum rate
    changes by less than ``tol`` bits, or flags the report as not converged
    after ``max_iterations``.

    One linear solve against the full coupled matrix serves all users per
    iteration; each user's leave-one-out whitening is recovered from it by
    a low-rank correction in the user's own receive dimension.
    """
    channels = [np.ascontiguousarray(h, dtype=complex) for h in channels]
    if not channels:
        raise ValueError("need at least one user channel")
    n_tx = channels[0].shape[1]
    if any(h.shape[1] != n_tx for h in channels):
        raise ValueError("inconsistent transmit dimension across users")
    if total_power <= 0:
        raise ValueError(f"total power must be positive, got {total_power}")

    k_users = len(channels)
    sizes = [h.shape[0] for h in channels]
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    stacked = np.vstack(channels)  # (sum N_k, n_tx)
    covariances = [
        np.eye(n, dtype=complex) * (total_power / (k_users * n)) for n in sizes
    ]
    identity = np.eye(n_tx, dtype=complex)
    ln2 = math.log(2.0)

    history = []
    converged = False
    iterations = 0
    while True:
        weighted = np.vstack([q @ h for q, h in zip(covariances, channels)])
        coupled = _hermitize(identity + stacked.conj().T @ weighted)
        history.append(float(np.linalg.slogdet(coupled)[1] / ln2))
        if len(history) > 1 and abs(history[-1] - history[-2]) < tol:
            converged = True
            break
        if iterations >= max_iterations:
            break
        iterations += 1

        solved = np.linalg.solve(coupled, stacked.conj().T)  # (n_tx, sum N_k)
        eigvals, eigvecs = [], []
        for k, (h, q) in enumerate(zip(channels, covariances)):
            block = solved[:, bounds[k] : bounds[k + 1]]
            base = _hermitize(h @ block)  # H (coupled)^-1 H^H
            # Remove the user's own contribution from the whitening:
            # (coupled - H^H Q H)^-1 reduces to a correction of size N_k.
            root = _psd_sqrt(q)
            cross = root @ base @ root
            small = np.eye(h.shape[0], dtype=complex) - cross
            whitened = base + base @ root @ np.linalg.solve(small, root @ base)
            lam, vec = np.linalg.eigh(_hermitize(whitened))
            eigvals.append(np.maximum(lam, 0.0))
            eigvecs.append(vec)

        pooled = np.concatenate(eigvals)
        allocation, _ = waterfill(pooled, total_power)
        offset = 0
        for idx, (lam, vec) in enumerate(zip(eigvals, eigvecs)):
            p = allocation.powers[offset : offset + lam.size]
            offset += lam.size
            filled = (vec * p[None, :]) @ vec.conj().T
            covariances[idx] = (
                filled / k_users + covariances[idx] * (k_users - 1) / k_users
            )

    return CapacityReport(
        value_bits=history[-1],
        covariances=covariances,
        iterations=iterations,
        converged=converged,
        history=np.array(history),
    )
