"""
The six-step BEC-qubit teleportation sequence.

Qubit 1 (Alice, unknown azimuth phi), qubit 2 (Alice) and qubit 3 (Bob) all
start on the equator.  The steps are

1. exp(-i S^z_2 S^z_3 T)
2. exp(+i S^z_1 S^z_2 tau)
3. Hadamard on qubit 1
4. number-basis measurement of qubits 1 and 2 -> (k1, k2)
5. send the bit [k1 < N/2] to Bob
6. Bob rotates qubit 3 about z by pi if the bit is set

Every operation is diagonal in the number basis except the Hadamard, and S^z
dephasing is diagonal too, so the joint state never has to be formed: given
k2, qubit 3 is an (optionally dephased) coherent state at azimuth 2(2k2-N)T
and the k1 statistics come from qubit 1 alone.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Literal, NamedTuple

import numpy as np
from scipy.special import xlogy

from bec_teleport.channels import (
    STEP1_SIGN,
    STEP2_SIGN,
    NumericalError,
    QubitDensity,
    dephasing_factors,
    dephasing_lag_factors,
)
from bec_teleport.spin_core import (
    DickeState,
    LogBinomialTable,
    SpinExpectation,
    _readonly,
    equatorial_state,
    expectation_spin,
    hadamard_matrix,
    sz_diagonal,
    wrap_angle,
)

Correction = Literal["binary", "full_offset"]
Method = Literal["auto", "closed", "lag", "direct"]

PROB_TOL = 1e-10


def default_gate_time(n_bosons: int) -> float:
    return 1.0 / math.sqrt(2.0 * n_bosons)


@dataclass(frozen=True)
class ProtocolConfig:
    """Parameters of one teleportation run.

    ``tau`` and ``big_t`` default to 1/sqrt(2N).  ``k1_cut=None`` keeps every
    outcome.  With ``dephase_all_three`` each qubit dephases through both
    entangling steps; otherwise only the pair being coupled does.
    """

    n_bosons: int
    phi: float = 0.0
    tau: float | None = None
    big_t: float | None = None
    gamma: float = 0.0
    k1_cut: int | None = None
    seed: int = 0
    dephase_all_three: bool = True

    def __post_init__(self):
        n = self.n_bosons
        if int(n) != n or n < 1:
            raise ValueError(f"n_bosons must be an integer >= 1, got {n!r}")
        if self.tau is None:
            object.__setattr__(self, "tau", default_gate_time(n))
        if self.big_t is None:
            object.__setattr__(self, "big_t", default_gate_time(n))
        object.__setattr__(self, "phi", wrap_angle(float(self.phi)))
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma!r}")
        if self.tau < 0 or self.big_t < 0:
            raise ValueError("gate times must be >= 0")
        if self.k1_cut is not None and not 0 <= self.k1_cut <= n // 2:
            raise ValueError(f"k1_cut must lie in [0, {n // 2}], got {self.k1_cut!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def with_(self, **changes) -> "ProtocolConfig":
        return replace(self, **changes)

    def exposures(self) -> tuple[float, float, float]:
        """Dephasing time seen by qubits 1, 2, 3."""
        if self.dephase_all_three:
            t = self.big_t + self.tau
            return (t, t, t)
        return (self.tau, self.big_t + self.tau, self.big_t)

    def accepts(self, k1: int) -> bool:
        if self.k1_cut is None:
            return True
        return k1 <= self.k1_cut or k1 >= self.n_bosons - self.k1_cut

    def acceptance_mask(self) -> np.ndarray:
        k = np.arange(self.n_bosons + 1)
        if self.k1_cut is None:
            return np.ones(self.n_bosons + 1, dtype=bool)
        return (k <= self.k1_cut) | (k >= self.n_bosons - self.k1_cut)


@dataclass(frozen=True)
class OutcomeDistribution:
    """p(k1, k2) over the two measured qubits, indexed [k1, k2]."""

    n_bosons: int
    p: np.ndarray = field(repr=False)
    config: ProtocolConfig

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        dim = self.n_bosons + 1
        if p.shape != (dim, dim):
            raise ValueError(f"expected shape {(dim, dim)}, got {p.shape}")
        if (p < 0).any():
            raise ValueError("negative probabilities")
        total = p.sum()
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {total!r}")
        object.__setattr__(self, "p", _readonly(p))

    def k1_marginal(self) -> np.ndarray:
        return self.p.sum(axis=1)

    def k2_marginal(self) -> np.ndarray:
        return self.p.sum(axis=0)


class TeleportOutcome(NamedTuple):
    k1: int
    k2: int
    bob_density: QubitDensity
    accepted: bool


class ExactOutcome(NamedTuple):
    k1: int
    k2: int
    probability: float
    bob_density: QubitDensity
    accepted: bool


def initial_state(config: ProtocolConfig) -> tuple[DickeState, DickeState, DickeState]:
    n = config.n_bosons
    reference = equatorial_state(n, 0.0)
    return equatorial_state(n, config.phi), reference, reference


def _closed_form(config: ProtocolConfig) -> np.ndarray:
    n = config.n_bosons
    lc = LogBinomialTable.for_n(n).log_choose
    k = np.arange(n + 1)
    x = config.phi / 2 - (2 * k - n) * config.tau  # indexed by k2
    log_p = (
        -n * math.log(2.0)
        + lc[:, None]
        + lc[None, :]
        + xlogy(2 * k[:, None], np.abs(np.cos(x))[None, :])
        + xlogy(2 * (n - k[:, None]), np.abs(np.sin(x))[None, :])
    )
    return np.exp(log_p)


@lru_cache(maxsize=16)
def _hadamard_row_autocorrelation(n_bosons: int) -> np.ndarray:
    """W[k1, d + N] = sum_n G[k1, n] G[k1, n - d] with G = H diag(sqrt(C_n / 2^N))."""
    n = n_bosons
    lc = LogBinomialTable.for_n(n).log_choose
    g = np.exp(0.5 * (lc - n * math.log(2.0)))
    rows = hadamard_matrix(n) * g[None, :]
    w = np.empty((n + 1, 2 * n + 1))
    for d in range(n + 1):
        lag = (rows[:, d:] * rows[:, : n + 1 - d]).sum(axis=1)
        w[:, n + d] = lag
        w[:, n - d] = lag
    return _readonly(w)


def _qubit1_phase_per_lag(config: ProtocolConfig) -> np.ndarray:
    """Phase of rho_1[n, n-d] after step 2 given k2, as exp(i d theta_{k2}).

    Returns theta indexed by k2: the -phi from the initial state plus the
    conditional step-2 phase -2 s mu tau with mu = 2k2-N.
    """
    mu = sz_diagonal(config.n_bosons)
    return -config.phi - 2.0 * STEP2_SIGN * mu * config.tau


def _lag_method(config: ProtocolConfig) -> np.ndarray:
    n = config.n_bosons
    w = _hadamard_row_autocorrelation(n)
    t1 = config.exposures()[0]
    damp = dephasing_lag_factors(n, config.gamma, t1)
    d = np.arange(-n, n + 1)
    theta = _qubit1_phase_per_lag(config)
    q = (w * damp[None, :]) @ np.exp(1j * np.outer(d, theta))
    weights = np.exp(LogBinomialTable.for_n(n).log_choose - n * math.log(2.0))
    return q.real * weights[None, :]


def _direct_column(config: ProtocolConfig, k2: int) -> np.ndarray:
    """diag(H rho_1 H^T) for one k2; O(N^3)."""
    n = config.n_bosons
    alice = equatorial_state(n, config.phi).amplitudes
    m = sz_diagonal(n)
    mu = 2 * k2 - n
    psi = alice * np.exp(-1j * STEP2_SIGN * m * mu * config.tau)
    rho = np.outer(psi, psi.conj()) * dephasing_factors(n, config.gamma, config.exposures()[0])
    h = hadamard_matrix(n)
    q = np.einsum("kn,nm,km->k", h, rho, h).real
    return q * math.exp(LogBinomialTable.for_n(n).log_choose[k2] - n * math.log(2.0))


def _direct_method(config: ProtocolConfig, workers: int) -> np.ndarray:
    cols = range(config.n_bosons + 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            columns = list(pool.map(lambda k2: _direct_column(config, k2), cols))
    else:
        columns = [_direct_column(config, k2) for k2 in cols]
    return np.stack(columns, axis=1)


def _clean(p: np.ndarray) -> np.ndarray:
    worst = p.min()
    if worst < -1e-12:
        raise NumericalError(f"probability {worst:.3g} is significantly negative")
    return np.clip(p, 0.0, None)


def measurement_distribution(
    config: ProtocolConfig, method: Method = "auto", workers: int = 1
) -> OutcomeDistribution:
    """Exact p(k1, k2) of the step-4 measurement.

    ``closed`` evaluates the noiseless product formula in log space and is
    only valid at gamma = 0.  ``lag`` contracts a cached per-N table with the
    phase/dephasing factors of each lag k - k' (O(N^2) per call); ``direct``
    conjugates qubit 1's density by the Hadamard separately for every k2
    (O(N^4), parallel over k2 with ``workers`` threads).  ``auto`` picks
    ``closed`` when gamma = 0 and ``lag`` otherwise.
    """
    if method == "auto":
        method = "closed" if config.gamma == 0 else "lag"
    if method == "closed":
        if config.gamma != 0:
            raise ValueError("the closed form requires gamma = 0")
        p = _closed_form(config)
    elif method == "lag":
        p = _clean(_lag_method(config))
    elif method == "direct":
        p = _clean(_direct_method(config, workers))
    else:
        raise ValueError(f"unknown method {method!r}")
    return OutcomeDistribution(config.n_bosons, p, config)


def _check_outcome(config: ProtocolConfig, k1: int, k2: int) -> None:
    n = config.n_bosons
    if not (0 <= k1 <= n and 0 <= k2 <= n):
        raise ValueError(f"outcome ({k1}, {k2}) outside 0..{n}")


def bob_azimuth(config: ProtocolConfig, k2: int) -> float:
    """Azimuth of Bob's qubit after step 1 given k2, before correction."""
    return 2.0 * STEP1_SIGN * (2 * k2 - config.n_bosons) * config.big_t


def _bob_density_for_k2(config: ProtocolConfig, k2: int) -> QubitDensity:
    n = config.n_bosons
    pure = equatorial_state(n, bob_azimuth(config, k2)).amplitudes
    rho = np.outer(pure, pure.conj())
    if config.gamma > 0:
        rho = rho * dephasing_factors(n, config.gamma, config.exposures()[2])
    return QubitDensity.from_unnormalized(n, rho)


def bob_conditional_state(config: ProtocolConfig, k1: int, k2: int) -> QubitDensity:
    """Bob's qubit after the measurement, before any correction (independent of k1)."""
    _check_outcome(config, k1, k2)
    return _bob_density_for_k2(config, k2)


def _rotate_density_z(bob: QubitDensity, angle: float) -> QubitDensity:
    u = np.exp(-0.5j * angle * sz_diagonal(bob.n_bosons))
    rho = u[:, None] * bob.matrix * u.conj()[None, :]
    return QubitDensity.from_unnormalized(bob.n_bosons, rho)


def apply_correction(bob: QubitDensity, k1: int, n_bosons: int) -> QubitDensity:
    """Rotate about z by pi iff k1 < N/2 (a tie at N/2 is left alone)."""
    if 2 * k1 < n_bosons:
        return _rotate_density_z(bob, math.pi)
    return bob


def full_offset_angle(k1: int, n_bosons: int) -> float:
    return math.acos(min(1.0, max(-1.0, 2.0 * k1 / n_bosons - 1.0)))


def apply_full_offset_correction(bob: QubitDensity, k1: int, n_bosons: int, phi: float) -> QubitDensity:
    """Diagnostic only: undo the offset arccos(2k1/N - 1) with the sign that
    lands closest to the true phi, which a real receiver cannot know."""
    offset = full_offset_angle(k1, n_bosons)
    psi = expectation_spin(bob).azimuth()
    sign = 1.0 if abs(wrap_angle(psi + offset - phi)) <= abs(wrap_angle(psi - offset - phi)) else -1.0
    return _rotate_density_z(bob, sign * offset)


def _corrected(config, bob, k1, correction):
    if correction == "binary":
        return apply_correction(bob, k1, config.n_bosons)
    if correction == "full_offset":
        return apply_full_offset_correction(bob, k1, config.n_bosons, config.phi)
    raise ValueError(f"unknown correction {correction!r}")


def teleport_exact(
    config: ProtocolConfig,
    correction: Correction = "binary",
    dist: OutcomeDistribution | None = None,
) -> list[ExactOutcome]:
    """Every (k1, k2) outcome with its probability and corrected Bob density.

    For the binary correction the density objects are shared between outcomes
    with the same k2 and correction bit.
    """
    if dist is None:
        dist = measurement_distribution(config)
    n = config.n_bosons
    outcomes = []
    for k2 in range(n + 1):
        bob = _bob_density_for_k2(config, k2)
        cache: dict = {}
        for k1 in range(n + 1):
            key = (2 * k1 < n) if correction == "binary" else k1
            if key not in cache:
                cache[key] = _corrected(config, bob, k1, correction)
            outcomes.append(
                ExactOutcome(k1, k2, float(dist.p[k1, k2]), cache[key], config.accepts(k1))
            )
    return outcomes


def corrected_spin_table(
    config: ProtocolConfig, correction: Correction = "binary"
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Corrected Bob spin (sx, sy, sz) for every outcome, arrays indexed [k1, k2].

    A z-rotation acts on the spin vector as a plane rotation, so the table is
    built from one expectation per k2.
    """
    n = config.n_bosons
    base = np.array(
        [
            (s.sx, s.sy, s.sz)
            for s in (expectation_spin(_bob_density_for_k2(config, k2)) for k2 in range(n + 1))
        ]
    )
    k1 = np.arange(n + 1)
    if correction == "binary":
        angle = np.where(2 * k1 < n, math.pi, 0.0)[:, None] * np.ones((1, n + 1))
    elif correction == "full_offset":
        offset = np.arccos(np.clip(2.0 * k1 / n - 1.0, -1.0, 1.0))[:, None]
        psi = np.arctan2(base[:, 1], base[:, 0])[None, :]
        plus = np.abs(np.angle(np.exp(1j * (psi + offset - config.phi))))
        minus = np.abs(np.angle(np.exp(1j * (psi - offset - config.phi))))
        angle = np.where(plus <= minus, offset, -offset)
    else:
        raise ValueError(f"unknown correction {correction!r}")
    c, s = np.cos(angle), np.sin(angle)
    sx = c * base[None, :, 0] - s * base[None, :, 1]
    sy = s * base[None, :, 0] + c * base[None, :, 1]
    sz = np.broadcast_to(base[None, :, 2], sx.shape).copy()
    return sx, sy, sz


def acceptance_probability(config: ProtocolConfig, dist: OutcomeDistribution | None = None) -> float:
    if dist is None:
        dist = measurement_distribution(config)
    return float(dist.p[config.acceptance_mask(), :].sum())


def conditional_bob_spin(
    config: ProtocolConfig,
    correction: Correction = "binary",
    dist: OutcomeDistribution | None = None,
) -> SpinExpectation:
    """Bob's spin averaged over accepted outcomes with renormalized weights."""
    if dist is None:
        dist = measurement_distribution(config)
    mask = config.acceptance_mask()
    w = dist.p * mask[:, None]
    total = w.sum()
    sx, sy, sz = corrected_spin_table(config, correction)
    return SpinExpectation(
        float((w * sx).sum() / total), float((w * sy).sum() / total), float((w * sz).sum() / total)
    )


def teleport_sample(
    config: ProtocolConfig,
    shots: int,
    correction: Correction = "binary",
    dist: OutcomeDistribution | None = None,
) -> list[TeleportOutcome]:
    """Draw ``shots`` i.i.d. outcomes by inverse CDF with a generator seeded from config.seed."""
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots!r}")
    if dist is None:
        dist = measurement_distribution(config)
    n = config.n_bosons
    rng = np.random.default_rng(config.seed)
    cdf = np.cumsum(dist.p.ravel())
    u = rng.random(shots) * cdf[-1]
    flat = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
    bobs: dict = {}
    out = []
    for idx in flat:
        k1, k2 = divmod(int(idx), n + 1)
        key = (k1 if correction == "full_offset" else 2 * k1 < n, k2)
        if key not in bobs:
            bobs[key] = _corrected(config, _bob_density_for_k2(config, k2), k1, correction)
        out.append(TeleportOutcome(k1, k2, bobs[key], config.accepts(k1)))
    return out
