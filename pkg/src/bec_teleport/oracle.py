"""Brute-force references over the full three-qubit Hilbert space.

Nothing here reuses the structured shortcuts of :mod:`bec_teleport.protocol`:
the states are built from the raw binomial expansion, the Hadamard from the
matrix exponential of its generator, and the noisy run integrates the master
equation on the (N+1)^3-dimensional joint density.  Small N only.
"""
from __future__ import annotations

import cmath
import math
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm

from bec_teleport.channels import STEP1_SIGN, STEP2_SIGN, master_equation_integrate
from bec_teleport.protocol import OutcomeDistribution, ProtocolConfig

MAX_PURE_N = 8
MAX_DENSITY_N = 6


class PureOracleResult(NamedTuple):
    distribution: OutcomeDistribution
    bob_states: np.ndarray  # [k1, k2, k3], zero rows where p = 0


class DephasedOracleResult(NamedTuple):
    distribution: OutcomeDistribution
    bob_densities: np.ndarray  # [k1, k2, k3, k3']


def _coherent_amplitudes(n: int, phi: float) -> np.ndarray:
    alpha = cmath.exp(-0.5j * phi) / math.sqrt(2)
    beta = cmath.exp(0.5j * phi) / math.sqrt(2)
    return np.array([math.sqrt(math.comb(n, k)) * alpha**k * beta ** (n - k) for k in range(n + 1)])


def _sz(n: int) -> np.ndarray:
    return np.arange(n + 1) * 2.0 - n


def generator_hadamard(n: int) -> np.ndarray:
    """i^N exp(-i (pi/2) (S^x + S^z)/sqrt2): the mode map as a pi rotation about (x+z)/sqrt2."""
    k = np.arange(n)
    sx = np.zeros((n + 1, n + 1))
    sx[k + 1, k] = sx[k, k + 1] = np.sqrt((k + 1.0) * (n - k))
    gen = (sx + np.diag(_sz(n))) / math.sqrt(2)
    return (1j**n) * expm(-0.5j * math.pi * gen)


def _guard(config: ProtocolConfig, limit: int) -> None:
    if config.n_bosons > limit:
        raise ValueError(f"oracle refuses N = {config.n_bosons} > {limit}")


def oracle_run_pure(config: ProtocolConfig) -> PureOracleResult:
    """Steps 1-4 applied literally to the (N+1)^3 state vector."""
    _guard(config, MAX_PURE_N)
    if config.gamma != 0:
        raise ValueError("oracle_run_pure is noiseless; use oracle_run_dephased")
    n = config.n_bosons
    m = _sz(n)
    psi = np.einsum(
        "a,b,c->abc",
        _coherent_amplitudes(n, config.phi),
        _coherent_amplitudes(n, 0.0),
        _coherent_amplitudes(n, 0.0),
    )
    psi = psi * np.exp(-1j * STEP1_SIGN * config.big_t * m[None, :, None] * m[None, None, :])
    psi = psi * np.exp(-1j * STEP2_SIGN * config.tau * m[:, None, None] * m[None, :, None])
    psi = np.tensordot(generator_hadamard(n), psi, axes=(1, 0))
    p = (np.abs(psi) ** 2).sum(axis=2)
    norms = np.sqrt(p)
    bob = np.divide(psi, norms[:, :, None], out=np.zeros_like(psi), where=norms[:, :, None] > 0)
    return PureOracleResult(OutcomeDistribution(n, p, config), bob)


def _embed(op: np.ndarray, position: int, dim: int) -> np.ndarray:
    mats = [np.eye(dim)] * 3
    mats[position] = op
    return np.kron(np.kron(mats[0], mats[1]), mats[2])


def oracle_run_dephased(
    config: ProtocolConfig, steps: int | None = None, richardson_tol: float | None = None
) -> DephasedOracleResult:
    """Integrate the joint density through both entangling steps, then
    Hadamard (noise-free), measure qubits 1 and 2 and keep qubit 3."""
    _guard(config, MAX_DENSITY_N)
    n = config.n_bosons
    dim = n + 1
    sz = np.diag(_sz(n))
    sz_full = [_embed(sz, q, dim) for q in range(3)]

    psi = np.kron(
        np.kron(_coherent_amplitudes(n, config.phi), _coherent_amplitudes(n, 0.0)),
        _coherent_amplitudes(n, 0.0),
    )
    rho = np.outer(psi, psi.conj())

    step1_ops = [0, 1, 2] if config.dephase_all_three else [1, 2]
    step2_ops = [0, 1, 2] if config.dephase_all_three else [0, 1]
    h1 = STEP1_SIGN * sz_full[1] @ sz_full[2]
    h2 = STEP2_SIGN * sz_full[0] @ sz_full[1]
    rho = master_equation_integrate(
        rho, h1, config.gamma, config.big_t, steps=steps,
        jump_ops=[sz_full[q] for q in step1_ops], richardson_tol=richardson_tol,
    )
    rho = master_equation_integrate(
        rho, h2, config.gamma, config.tau, steps=steps,
        jump_ops=[sz_full[q] for q in step2_ops], richardson_tol=richardson_tol,
    )
    u = _embed(generator_hadamard(n), 0, dim)
    rho = u @ rho @ u.conj().T

    r6 = rho.reshape((dim,) * 6)
    k = np.arange(dim)
    # slice[k1, k2, k3, k3'] = rho[(k1,k2,k3), (k1,k2,k3')]
    blocks = r6[k[:, None], k[None, :], :, k[:, None], k[None, :], :]
    p = np.real(np.einsum("abcc->ab", blocks))
    p = np.clip(p, 0.0, None)
    bob = np.divide(blocks, p[:, :, None, None], out=np.zeros_like(blocks), where=p[:, :, None, None] > 0)
    return DephasedOracleResult(OutcomeDistribution(n, p, config), bob)
