"""Entangling gate, closed-form S^z dephasing, and a direct Lindblad integrator."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from bec_teleport.spin_core import DickeState, _readonly, spin_operator_matrix, sz_diagonal

DENSITY_TOL = 1e-12

# Coupling signs of the two entangling steps: step 1 applies +S^z_2 S^z_3,
# step 2 applies -S^z_1 S^z_2.  Shared by the structured path and the oracle.
STEP1_SIGN = 1.0
STEP2_SIGN = -1.0


class NumericalError(RuntimeError):
    """Raised when an integration loses trace or fails its convergence check."""


@dataclass(frozen=True)
class QubitDensity:
    """Mixed state of one BEC qubit in the number basis."""

    n_bosons: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        rho = np.asarray(self.matrix, dtype=complex)
        dim = self.n_bosons + 1
        if rho.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} density, got shape {rho.shape}")
        herm_err = float(np.abs(rho - rho.conj().T).max())
        if herm_err > DENSITY_TOL:
            raise ValueError(f"density is not Hermitian (max deviation {herm_err:.3g})")
        tr = complex(np.trace(rho))
        if abs(tr - 1.0) > DENSITY_TOL:
            raise ValueError(f"density trace is {tr!r}, expected 1")
        object.__setattr__(self, "matrix", _readonly(rho))

    @classmethod
    def from_state(cls, state: DickeState) -> "QubitDensity":
        psi = state.amplitudes
        return cls(state.n_bosons, np.outer(psi, psi.conj()))

    @classmethod
    def from_unnormalized(cls, n_bosons: int, matrix: np.ndarray) -> "QubitDensity":
        rho = np.asarray(matrix, dtype=complex)
        rho = 0.5 * (rho + rho.conj().T)
        return cls(n_bosons, rho / np.trace(rho).real)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def check_psd(self, tol: float = 1e-9) -> bool:
        return self.min_eigenvalue() >= -tol

    def fidelity_with(self, state: DickeState) -> float:
        psi = state.amplitudes
        return float(np.vdot(psi, self.matrix @ psi).real)


@dataclass(frozen=True)
class DephasingParams:
    gamma: float
    duration: float

    def __post_init__(self):
        if self.gamma < 0 or self.duration < 0:
            raise ValueError("gamma and duration must be non-negative")


def entangle_zz(state_a: DickeState, state_b: DickeState, time: float) -> np.ndarray:
    """Joint amplitudes after exp(-i S^z_a S^z_b time) on a product input.

    Returns the (N+1)x(N+1) matrix indexed [k_a, k_b].  A negative ``time``
    implements the -S^z S^z coupling.
    """
    if state_a.n_bosons != state_b.n_bosons:
        raise ValueError(
            f"boson numbers differ: {state_a.n_bosons} vs {state_b.n_bosons}"
        )
    m = sz_diagonal(state_a.n_bosons)
    phases = np.exp(-1j * time * np.outer(m, m))
    return np.outer(state_a.amplitudes, state_b.amplitudes) * phases


def dephasing_factors(n_bosons: int, gamma: float, duration: float) -> np.ndarray:
    """Coherence multipliers exp(-2 gamma (k-k')^2 t) of the S^z channel.

    With m = 2k - N, the Lindblad rate (gamma/2)(m-m')^2 equals 2 gamma (k-k')^2.
    """
    k = np.arange(n_bosons + 1)
    diff = k[:, None] - k[None, :]
    return np.exp(-2.0 * gamma * duration * diff.astype(float) ** 2)


def dephasing_lag_factors(n_bosons: int, gamma: float, duration: float) -> np.ndarray:
    """Same factors indexed by lag d = k - k' in -N..N."""
    d = np.arange(-n_bosons, n_bosons + 1, dtype=float)
    return np.exp(-2.0 * gamma * duration * d**2)


def dephase_exact(density: QubitDensity, params: DephasingParams) -> QubitDensity:
    if params.gamma == 0 or params.duration == 0:
        return density
    factors = dephasing_factors(density.n_bosons, params.gamma, params.duration)
    return QubitDensity(density.n_bosons, density.matrix * factors)


def dephase_joint(
    rho: np.ndarray, n_bosons: int, gamma: float, durations: Sequence[float]
) -> np.ndarray:
    """Closed-form dephasing of a joint density of len(durations) qubits.

    Qubit n is exposed for durations[n]; the composite index is row-major
    over (k_1, k_2, ...).
    """
    q = len(durations)
    dim = n_bosons + 1
    shape = (dim,) * (2 * q)
    out = np.asarray(rho, dtype=complex).reshape(shape).copy()
    for n, t in enumerate(durations):
        if gamma == 0 or t == 0:
            continue
        f = dephasing_factors(n_bosons, gamma, t)
        idx = [1] * (2 * q)
        idx[n], idx[q + n] = dim, dim
        out *= f.reshape(idx)
    return out.reshape(dim**q, dim**q)


def _is_diagonal(mat: np.ndarray) -> bool:
    return not np.any(mat - np.diag(np.diag(mat)))


def master_equation_integrate(
    density: Union[QubitDensity, np.ndarray],
    hamiltonian: np.ndarray,
    gamma: float,
    duration: float,
    steps: int | None = None,
    jump_ops: Sequence[np.ndarray] | None = None,
    richardson_tol: float | None = None,
) -> Union[QubitDensity, np.ndarray]:
    """Fourth-order Runge-Kutta integration of the S^z dephasing master equation.

        d rho/dt = -i[H, rho] - (gamma/2) sum_n (L_n^2 rho - 2 L_n rho L_n + rho L_n^2)

    ``jump_ops`` defaults to [S^z] for a single-qubit density and must be
    given for a joint density.  When every operator is diagonal the
    commutators are evaluated elementwise.  With ``richardson_tol`` the run
    is repeated at twice the step count and must agree to that tolerance.
    """
    single = isinstance(density, QubitDensity)
    rho0 = np.array(density.matrix if single else density, dtype=complex)
    dim = rho0.shape[0]
    ham = np.asarray(hamiltonian, dtype=complex)
    if ham.shape != (dim, dim):
        raise ValueError(f"hamiltonian shape {ham.shape} does not match density dim {dim}")
    scale = max(1.0, float(np.abs(ham).max()))
    if np.abs(ham - ham.conj().T).max() > 1e-12 * scale:
        raise ValueError("hamiltonian is not Hermitian")
    if jump_ops is None:
        if not single:
            raise ValueError("jump_ops are required for a joint density")
        jump_ops = [spin_operator_matrix(density.n_bosons, "z")]
    ops = [np.asarray(op, dtype=complex) for op in jump_ops]
    if gamma < 0 or duration < 0:
        raise ValueError("gamma and duration must be non-negative")

    h_span = float(np.ptp(np.linalg.eigvalsh(ham))) if dim > 1 else 0.0
    l_span = sum(float(np.ptp(np.linalg.eigvalsh(op))) ** 2 for op in ops)
    rate = h_span + 0.5 * gamma * l_span
    if steps is None:
        steps = max(1000, math.ceil(duration * rate / 0.05))
    if steps < 1:
        raise ValueError("steps must be >= 1")

    if _is_diagonal(ham) and all(_is_diagonal(op) for op in ops):
        hd = np.diag(ham)
        gen = -1j * (hd[:, None] - hd[None, :])
        for op in ops:
            ld = np.diag(op)
            gen = gen - 0.5 * gamma * (ld[:, None] - ld[None, :]) ** 2

        def rhs(r):
            return gen * r
    else:
        sq = [op @ op for op in ops]

        def rhs(r):
            out = -1j * (ham @ r - r @ ham)
            for op, op2 in zip(ops, sq):
                out -= 0.5 * gamma * (op2 @ r - 2.0 * op @ r @ op + r @ op2)
            return out

    def run(n_steps):
        r = rho0.copy()
        h = duration / n_steps
        for _ in range(n_steps):
            k1 = rhs(r)
            k2 = rhs(r + 0.5 * h * k1)
            k3 = rhs(r + 0.5 * h * k2)
            k4 = rhs(r + h * k3)
            r = r + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            r = 0.5 * (r + r.conj().T)
        return r

    with np.errstate(over="ignore", invalid="ignore"):
        rho = run(steps)
    drift = abs(np.trace(rho) - np.trace(rho0))
    if not (np.isfinite(rho).all() and drift <= 1e-6):
        raise NumericalError(f"trace drifted by {drift:.3g} over {steps} steps")
    if richardson_tol is not None:
        finer = run(2 * steps)
        delta = float(np.abs(finer - rho).max())
        if delta > richardson_tol:
            raise NumericalError(
                f"step halving changed the result by {delta:.3g} > {richardson_tol:.3g}"
            )
        rho = finer

    if single:
        return QubitDensity(density.n_bosons, rho / np.trace(rho).real)
    return rho
