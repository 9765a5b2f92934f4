"""
Dicke-basis numerics for a single two-mode BEC qubit.

A BEC qubit of N bosons in modes a, b lives in the (N+1)-dimensional
symmetric sector spanned by |k>, k = number of bosons in mode a.  The
collective operators are the unnormalized Schwinger spins

    S^x = a^dag b + b^dag a,   S^y = -i a^dag b + i b^dag a,   S^z = a^dag a - b^dag b

so S^z|k> = (2k - N)|k> and the spin length is N, not N/2.

Rotations use exp(-i angle S/2), which advances the azimuth of an
equatorial coherent state by ``angle`` under a z-rotation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal, Union

import numpy as np
from scipy.special import xlogy

Axis = Literal["x", "y", "z"]

NORM_TOL = 1e-12


def _check_n(n_bosons: int) -> None:
    if int(n_bosons) != n_bosons or n_bosons < 1:
        raise ValueError(f"n_bosons must be an integer >= 1, got {n_bosons!r}")


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


def wrap_angle(angle: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.remainder(angle, 2 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2 * math.pi
    return wrapped


def angle_distance(a: float, b: float) -> float:
    """Minimal distance between two angles on the circle."""
    return abs(wrap_angle(a - b))


@dataclass(frozen=True)
class DickeState:
    """Pure state of one BEC qubit in the number basis |k>, k = 0..N."""

    n_bosons: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_n(self.n_bosons)
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.n_bosons + 1,):
            raise ValueError(
                f"expected {self.n_bosons + 1} amplitudes, got shape {amps.shape}"
            )
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
        object.__setattr__(self, "amplitudes", _readonly(amps))

    @classmethod
    def normalized(cls, n_bosons: int, amplitudes) -> "DickeState":
        amps = np.asarray(amplitudes, dtype=complex)
        return cls(n_bosons, amps / np.linalg.norm(amps))

    @classmethod
    def basis(cls, n_bosons: int, k: int) -> "DickeState":
        amps = np.zeros(n_bosons + 1, dtype=complex)
        amps[k] = 1.0
        return cls(n_bosons, amps)

    def overlap(self, other: "DickeState") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def same_ray(self, other: "DickeState", tol: float = 1e-10) -> bool:
        """Equality up to a global phase."""
        return abs(abs(self.overlap(other)) - 1.0) <= tol


@dataclass(frozen=True)
class SpinCoherentParams:
    """Bloch angles of a spin coherent state, alpha = cos(theta/2) e^{-i phi/2}."""

    theta: float
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta!r}")
        if not -math.pi <= self.phi <= math.pi:
            raise ValueError(f"phi must lie in [-pi, pi], got {self.phi!r}")

    @classmethod
    def equator(cls, phi: float) -> "SpinCoherentParams":
        """Equatorial state; ``phi`` is wrapped into (-pi, pi] first."""
        return cls(math.pi / 2, wrap_angle(phi))

    @property
    def alpha(self) -> complex:
        return math.cos(self.theta / 2) * complex(math.cos(self.phi / 2), -math.sin(self.phi / 2))

    @property
    def beta(self) -> complex:
        return math.sin(self.theta / 2) * complex(math.cos(self.phi / 2), math.sin(self.phi / 2))


@dataclass(frozen=True)
class SpinExpectation:
    """(<S^x>, <S^y>, <S^z>) in bare spin units, each within [-N, N]."""

    sx: float
    sy: float
    sz: float

    def normalized(self, n_bosons: int) -> tuple[float, float, float]:
        return (self.sx / n_bosons, self.sy / n_bosons, self.sz / n_bosons)

    def length(self) -> float:
        return math.sqrt(self.sx**2 + self.sy**2 + self.sz**2)

    def azimuth(self) -> float:
        return math.atan2(self.sy, self.sx)


@dataclass(frozen=True)
class LogBinomialTable:
    """ln C(N, k) for k = 0..N, exactly symmetric in k <-> N-k."""

    n_bosons: int
    log_choose: np.ndarray = field(repr=False)

    @classmethod
    def for_n(cls, n_bosons: int) -> "LogBinomialTable":
        _check_n(n_bosons)
        return _log_binomial_table(int(n_bosons))

    def pmf(self, p: float) -> np.ndarray:
        """Binomial pmf C(N,k) p^k (1-p)^{N-k}, evaluated in log space."""
        k = np.arange(self.n_bosons + 1)
        return np.exp(self.log_choose + xlogy(k, p) + xlogy(self.n_bosons - k, 1.0 - p))


@lru_cache(maxsize=64)
def _log_binomial_table(n_bosons: int) -> LogBinomialTable:
    i = np.arange(1, n_bosons + 1, dtype=float)
    steps = np.log(n_bosons - i + 1.0) - np.log(i)
    log_choose = np.concatenate(([0.0], np.cumsum(steps)))
    half = n_bosons // 2
    log_choose[n_bosons - half:] = log_choose[half::-1]
    return LogBinomialTable(n_bosons, _readonly(log_choose))


def coherent_state(n_bosons: int, params: SpinCoherentParams) -> DickeState:
    """Spin coherent state (alpha a^dag + beta b^dag)^N |0> / sqrt(N!).

    Amplitudes are assembled as exp(log-magnitude + i phase) so that large N
    never forms a raw binomial coefficient.
    """
    _check_n(n_bosons)
    table = LogBinomialTable.for_n(n_bosons)
    k = np.arange(n_bosons + 1)
    log_mag = (
        0.5 * table.log_choose
        + xlogy(k, math.cos(params.theta / 2))
        + xlogy(n_bosons - k, math.sin(params.theta / 2))
    )
    phase = (n_bosons - 2 * k) * params.phi / 2
    amps = np.exp(log_mag + 1j * phase)
    return DickeState.normalized(n_bosons, amps)


def equatorial_state(n_bosons: int, phi: float) -> DickeState:
    return coherent_state(n_bosons, SpinCoherentParams.equator(phi))


def sz_diagonal(n_bosons: int) -> np.ndarray:
    return 2.0 * np.arange(n_bosons + 1) - n_bosons


@lru_cache(maxsize=64)
def _spin_matrices(n_bosons: int) -> dict[str, np.ndarray]:
    k = np.arange(n_bosons)
    raise_elems = np.sqrt((k + 1.0) * (n_bosons - k))
    raising = np.diag(raise_elems, -1).astype(complex)  # <k+1|a^dag b|k>
    lowering = raising.T.copy()
    return {
        "x": _readonly(raising + lowering),
        "y": _readonly(-1j * (raising - lowering)),
        "z": _readonly(np.diag(sz_diagonal(n_bosons)).astype(complex)),
    }


def spin_operator_matrix(n_bosons: int, axis: Axis) -> np.ndarray:
    """Dense (N+1)x(N+1) matrix of S^axis in the number basis (read-only)."""
    _check_n(n_bosons)
    if axis not in ("x", "y", "z"):
        raise ValueError(f"axis must be 'x', 'y' or 'z', got {axis!r}")
    return _spin_matrices(int(n_bosons))[axis]


@lru_cache(maxsize=128)
def _spin_eigensystem(n_bosons: int, axis: str) -> tuple[np.ndarray, np.ndarray]:
    evals, evecs = np.linalg.eigh(spin_operator_matrix(n_bosons, axis))
    # eigenvalues of S are the integers 2m - N
    return _readonly(np.round(evals)), _readonly(evecs)


def rotation_matrix(n_bosons: int, axis: Axis, angle: float) -> np.ndarray:
    """exp(-i angle S^axis / 2) as a dense matrix."""
    if axis == "z":
        return np.diag(np.exp(-0.5j * angle * sz_diagonal(n_bosons)))
    evals, evecs = _spin_eigensystem(n_bosons, axis)
    return (evecs * np.exp(-0.5j * angle * evals)) @ evecs.conj().T


def rotate(state: DickeState, axis: Axis, angle: float) -> DickeState:
    n = state.n_bosons
    if axis == "z":
        amps = state.amplitudes * np.exp(-0.5j * angle * sz_diagonal(n))
    else:
        spin_operator_matrix(n, axis)  # validates axis
        amps = rotation_matrix(n, axis, angle) @ state.amplitudes
    return DickeState(n, amps)


def _krawtchouk_columns(n_bosons: int) -> list[list[int]]:
    """Integer coefficients of x^j in (1+x)^k (x-1)^(N-k), for every k.

    Column k+1 follows from column k by multiplying with (1+x) and dividing
    exactly by (x-1), so all N+1 columns cost O(N^2) big-integer operations.
    """
    n = n_bosons
    col = [math.comb(n, j) * (-1) ** (n - j) for j in range(n + 1)]
    cols = [col]
    for _ in range(n):
        prod = [0] * (n + 2)
        for j, c in enumerate(col):
            prod[j] += c
            prod[j + 1] += c
        # exact division by (x - 1): q_j = r_{j-1} - r_j
        quot = [0] * (n + 1)
        r_prev = 0
        for j in range(n + 1):
            r_prev = r_prev - prod[j]
            quot[j] = r_prev
        if r_prev - prod[n + 1] != 0:
            raise ArithmeticError("non-exact polynomial division")
        col = quot
        cols.append(col)
    return cols


@lru_cache(maxsize=32)
def hadamard_matrix(n_bosons: int) -> np.ndarray:
    """Real orthogonal matrix of the mode map a -> (a+b)/sqrt2, b -> (a-b)/sqrt2.

    H[j, k] = K[j, k] 2^{-N/2} sqrt(C(N,k) / C(N,j)) where the integers K are
    computed exactly and the scale factor in log space; an alternating sum in
    floating point would cancel catastrophically beyond N ~ 50.
    """
    _check_n(n_bosons)
    n = int(n_bosons)
    log_choose = LogBinomialTable.for_n(n).log_choose
    cols = _krawtchouk_columns(n)
    out = np.zeros((n + 1, n + 1))
    half_log2 = 0.5 * n * math.log(2.0)
    for k, col in enumerate(cols):
        for j, c in enumerate(col):
            if c == 0:
                continue
            log_mag = math.log(abs(c)) - half_log2 + 0.5 * (log_choose[k] - log_choose[j])
            out[j, k] = math.copysign(math.exp(log_mag), c)
    return _readonly(out)


def hadamard(state: DickeState) -> DickeState:
    return DickeState(state.n_bosons, hadamard_matrix(state.n_bosons) @ state.amplitudes)


def hadamard_via_rotations(state: DickeState) -> DickeState:
    """pi/2 about z, then pi/2 about x, then pi/2 about z.

    Equal to :func:`hadamard` only up to a global phase.
    """
    out = rotate(state, "z", math.pi / 2)
    out = rotate(out, "x", math.pi / 2)
    return rotate(out, "z", math.pi / 2)


def expectation_spin(obj: Union[DickeState, "QubitDensity"]) -> SpinExpectation:
    """Exact <S^x>, <S^y>, <S^z> of a pure state or a density matrix."""
    n = obj.n_bosons
    mats = _spin_matrices(n)
    if isinstance(obj, DickeState):
        psi = obj.amplitudes
        vals = [np.vdot(psi, mats[a] @ psi).real for a in "xyz"]
    else:
        rho = obj.matrix
        vals = [np.einsum("ij,ji->", rho, mats[a]).real for a in "xyz"]
    return SpinExpectation(float(vals[0]), float(vals[1]), float(vals[2]))
