"""Figures of merit: trace-distance error, success probability, classical bound,
and the large-N Gaussian picture of the outcome distribution."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from bec_teleport.protocol import (
    Correction,
    OutcomeDistribution,
    ProtocolConfig,
    corrected_spin_table,
    measurement_distribution,
)
from bec_teleport.spin_core import SpinExpectation

Averaging = Literal["outcome", "ensemble"]


@dataclass(frozen=True)
class ErrorReport:
    epsilon: float
    per_phi: list[tuple[float, float]] = field(repr=False)
    config: ProtocolConfig

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon {self.epsilon!r} outside [0, 1]")


@dataclass(frozen=True)
class ApproxParams:
    """Per-k1 normalization constants A of the Gaussian approximation."""

    normalization: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not (np.asarray(self.normalization) > 0).all():
            raise ValueError("normalization constants must be positive")


def trace_distance_error(bob_spin: SpinExpectation, phi: float, n_bosons: int) -> float:
    sx, sy, sz = bob_spin.normalized(n_bosons)
    return 0.5 * math.sqrt((sx - math.cos(phi)) ** 2 + (sy - math.sin(phi)) ** 2 + sz**2)


def classical_binary_bound() -> float:
    """Mean error when Bob only learns which hemisphere phi lies in."""
    return (4.0 - 2.0 * math.sqrt(2.0)) / math.pi


def phi_grid(size: int, offset: float = 0.0) -> np.ndarray:
    """``size`` uniform points on [-pi, pi), shifted by ``offset``."""
    return -math.pi + 2.0 * math.pi * np.arange(size) / size + offset


def success_probability(config: ProtocolConfig, dist: OutcomeDistribution | None = None) -> float:
    if dist is None:
        dist = measurement_distribution(config)
    return float(dist.p[config.acceptance_mask(), :].sum())


def conditional_error(
    p: np.ndarray,
    spins: tuple[np.ndarray, np.ndarray, np.ndarray],
    phi: float,
    n_bosons: int,
    accept: np.ndarray,
    averaging: Averaging = "outcome",
) -> float:
    """Error of the accepted ensemble for one phi.

    ``outcome`` averages the per-outcome error with renormalized weights;
    ``ensemble`` takes the error of the weight-averaged spin.
    """
    w = p * accept[:, None]
    w = w / w.sum()
    sx, sy, sz = (s / n_bosons for s in spins)
    if averaging == "outcome":
        eps = 0.5 * np.sqrt((sx - math.cos(phi)) ** 2 + (sy - math.sin(phi)) ** 2 + sz**2)
        return float((w * eps).sum())
    if averaging == "ensemble":
        mean = SpinExpectation(
            float((w * sx).sum()) * n_bosons, float((w * sy).sum()) * n_bosons, float((w * sz).sum()) * n_bosons
        )
        return trace_distance_error(mean, phi, n_bosons)
    raise ValueError(f"unknown averaging {averaging!r}")


def average_error(
    config: ProtocolConfig,
    phi_grid_size: int = 64,
    correction: Correction = "binary",
    averaging: Averaging = "outcome",
    grid_offset: float = 0.0,
) -> ErrorReport:
    """Acceptance-conditioned error averaged uniformly over a phi grid.

    ``config.phi`` is ignored.
    """
    if phi_grid_size < 8:
        raise ValueError(f"phi grid needs at least 8 points, got {phi_grid_size}")
    accept = config.acceptance_mask()
    spins = corrected_spin_table(config) if correction == "binary" else None
    per_phi = []
    for phi in phi_grid(phi_grid_size, grid_offset):
        cfg = config.with_(phi=float(phi))
        dist = measurement_distribution(cfg)
        table = spins if spins is not None else corrected_spin_table(cfg, correction)
        per_phi.append((cfg.phi, conditional_error(dist.p, table, cfg.phi, cfg.n_bosons, accept, averaging)))
    eps = float(np.mean([e for _, e in per_phi]))
    return ErrorReport(eps, per_phi, config)


def ridge_location(n_bosons: int, k1: int, phi: float) -> tuple[float, float]:
    """The two k2 values where p(k1, k2) peaks in the large-N picture."""
    if not 0 <= k1 <= n_bosons:
        raise ValueError(f"k1 must lie in 0..{n_bosons}, got {k1!r}")
    offset = math.acos(min(1.0, max(-1.0, 2.0 * k1 / n_bosons - 1.0)))
    s = math.sqrt(n_bosons / 2.0)
    return ((n_bosons + s * (phi - offset)) / 2.0, (n_bosons + s * (phi + offset)) / 2.0)


def _wrap_half(x: np.ndarray) -> np.ndarray:
    # the exact cos/sin powers are pi-periodic in x
    return (x + math.pi / 2) % math.pi - math.pi / 2


def _gaussian_factors(n_bosons: int, k1: int, phi: float, tau: float) -> np.ndarray:
    n = n_bosons
    k2 = np.arange(n + 1)
    mu = 2.0 * k2 - n
    population = np.exp(-0.5 * mu**2 / n)
    offset = math.acos(min(1.0, max(-1.0, 2.0 * k1 / n - 1.0)))
    x = phi / 2 - mu * tau
    correlation = sum(np.exp(-2.0 * n * _wrap_half(x + sgn * offset / 2) ** 2) for sgn in (1.0, -1.0))
    return population * correlation


def approx_params(n_bosons: int, phi: float, tau: float | None = None) -> ApproxParams:
    tau = 1.0 / math.sqrt(2.0 * n_bosons) if tau is None else tau
    sums = [_gaussian_factors(n_bosons, k1, phi, tau).sum() for k1 in range(n_bosons + 1)]
    return ApproxParams(1.0 / np.asarray(sums))


def approx_distribution(
    n_bosons: int, k1: int, k2: int, phi: float, tau: float | None = None
) -> float:
    """Gaussian approximation of p(k2 | k1), normalized over k2 at fixed k1.

    Population factor exp(-(2k2-N)^2 / 2N) times the correlation factor
    exp(-2N (x +- arccos(2k1/N-1)/2)^2), x = phi/2 - (2k2-N) tau, summed over
    both branches.  At tau = 1/sqrt(2N) the second factor is
    exp(-(2k2 - N - sqrt(N/2)(phi +- arccos(2k1/N-1)))^2).
    """
    if n_bosons < 10:
        raise ValueError("the Gaussian approximation needs N >= 10")
    tau = 1.0 / math.sqrt(2.0 * n_bosons) if tau is None else tau
    row = _gaussian_factors(n_bosons, k1, phi, tau)
    return float(row[k2] / row.sum())


def approx_conditional_table(n_bosons: int, phi: float, tau: float | None = None) -> np.ndarray:
    """approx_distribution for every (k1, k2), indexed [k1, k2]."""
    tau = 1.0 / math.sqrt(2.0 * n_bosons) if tau is None else tau
    rows = np.array([_gaussian_factors(n_bosons, k1, phi, tau) for k1 in range(n_bosons + 1)])
    return rows / rows.sum(axis=1, keepdims=True)


def approx_total_variation(config: ProtocolConfig) -> float:
    """TV distance between exact p(k1, k2) and p(k1) * approx(k2 | k1)."""
    exact = measurement_distribution(config).p
    marginal = exact.sum(axis=1)
    approx = marginal[:, None] * approx_conditional_table(config.n_bosons, config.phi, config.tau)
    return 0.5 * float(np.abs(exact - approx).sum())

