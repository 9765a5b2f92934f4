import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from bec_teleport.channels import (
    DephasingParams,
    NumericalError,
    QubitDensity,
    dephase_exact,
    dephase_joint,
    dephasing_factors,
    entangle_zz,
    master_equation_integrate,
)
from bec_teleport.spin_core import DickeState, equatorial_state, rotate, spin_operator_matrix


def random_density(n, seed, rank=3):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n + 1, rank)) + 1j * rng.normal(size=(n + 1, rank))
    return QubitDensity.from_unnormalized(n, v @ v.conj().T)


class TestEntangle:
    def test_zero_time_is_outer_product(self):
        a, b = equatorial_state(3, 0.2), equatorial_state(3, -1.0)
        np.testing.assert_allclose(entangle_zz(a, b, 0.0), np.outer(a.amplitudes, b.amplitudes))

    def test_single_boson_bell_pattern(self):
        t = 1 / math.sqrt(2)
        plus = DickeState(1, [1 / math.sqrt(2)] * 2)
        joint = entangle_zz(plus, plus, t)
        for k2 in (0, 1):
            m2 = 2 * k2 - 1
            # qubit 3 is the coherent state (e^{-i m2 T}/sqrt2, e^{+i m2 T}/sqrt2)
            alpha, beta = np.exp(-1j * m2 * t) / math.sqrt(2), np.exp(1j * m2 * t) / math.sqrt(2)
            np.testing.assert_allclose(joint[k2], [beta / math.sqrt(2), alpha / math.sqrt(2)], atol=1e-15)

    def test_matches_full_state_vector_evolution(self):
        n, t = 3, 0.21
        a, b = equatorial_state(n, 0.5), equatorial_state(n, -0.3)
        sz = spin_operator_matrix(n, "z")
        u = expm(-1j * t * np.kron(sz, sz))
        full = u @ np.kron(a.amplitudes, b.amplitudes)
        joint = entangle_zz(a, b, t).ravel()
        assert np.linalg.norm(joint) == pytest.approx(1.0, abs=1e-12)
        assert abs(np.vdot(full, joint)) == pytest.approx(1.0, abs=1e-12)

    def test_mismatched_n(self):
        with pytest.raises(ValueError):
            entangle_zz(equatorial_state(2, 0), equatorial_state(3, 0), 0.1)


class TestDephaseExact:
    def test_trivial_parameters(self):
        rho = random_density(4, 0)
        assert dephase_exact(rho, DephasingParams(0.0, 3.0)) is rho
        assert dephase_exact(rho, DephasingParams(2.0, 0.0)) is rho

    def test_diagonal_is_fixed(self):
        rho = QubitDensity(3, np.diag([0.1, 0.2, 0.3, 0.4]))
        np.testing.assert_array_equal(dephase_exact(rho, DephasingParams(5.0, 1.0)).matrix, rho.matrix)

    def test_n2_extreme_coherence(self):
        rho = QubitDensity.from_state(equatorial_state(2, 0.4))
        out = dephase_exact(rho, DephasingParams(1.0, 0.5))
        assert out.matrix[2, 0] / rho.matrix[2, 0] == pytest.approx(math.exp(-4), abs=1e-15)
        assert math.exp(-4) == pytest.approx(0.018316, abs=1e-6)
        ode = master_equation_integrate(rho, np.zeros((3, 3)), 1.0, 0.5)
        np.testing.assert_allclose(ode.matrix, out.matrix, atol=1e-6)

    def test_negative_parameters_rejected(self):
        with pytest.raises(ValueError):
            DephasingParams(-1.0, 1.0)


class TestMasterEquation:
    def test_pure_hamiltonian_limit_sz(self):
        s = equatorial_state(5, 0.3)
        out = master_equation_integrate(QubitDensity.from_state(s), spin_operator_matrix(5, "z"), 0.0, 0.8)
        expected = QubitDensity.from_state(rotate(s, "z", 1.6))
        np.testing.assert_allclose(out.matrix, expected.matrix, atol=1e-8)

    def test_pure_hamiltonian_limit_dense_sx(self):
        s = equatorial_state(4, 1.0)
        out = master_equation_integrate(QubitDensity.from_state(s), spin_operator_matrix(4, "x"), 0.0, 0.4)
        expected = QubitDensity.from_state(rotate(s, "x", 0.8))
        np.testing.assert_allclose(out.matrix, expected.matrix, atol=1e-8)

    @settings(max_examples=12, deadline=None)
    @given(n=st.integers(1, 6), gamma=st.floats(0.0, 3.0), t=st.floats(0.0, 1.0), seed=st.integers(0, 2**16))
    def test_pure_dephasing_matches_closed_form(self, n, gamma, t, seed):
        rho = random_density(n, seed)
        ode = master_equation_integrate(rho, np.zeros((n + 1, n + 1)), gamma, t)
        np.testing.assert_allclose(ode.matrix, dephase_exact(rho, DephasingParams(gamma, t)).matrix, atol=1e-6)

    @pytest.mark.parametrize("seed", range(4))
    def test_positivity_with_dense_hamiltonian(self, seed):
        n = 4
        rho = random_density(n, seed, rank=1)
        ham = spin_operator_matrix(n, "x") + 0.5 * spin_operator_matrix(n, "y")
        out = master_equation_integrate(rho, ham, 1.5, 0.6, steps=400)
        assert out.min_eigenvalue() >= -1e-8
        assert np.trace(out.matrix).real == pytest.approx(1.0, abs=1e-12)

    def test_non_hermitian_hamiltonian(self):
        rho = random_density(2, 0)
        with pytest.raises(ValueError):
            master_equation_integrate(rho, np.triu(np.ones((3, 3))), 0.1, 0.1)

    def test_joint_density_needs_jump_ops(self):
        with pytest.raises(ValueError):
            master_equation_integrate(np.eye(4) / 4, np.zeros((4, 4)), 0.1, 0.1)

    def test_blow_up_is_reported(self):
        rho = random_density(3, 1)
        with pytest.raises(NumericalError):
            master_equation_integrate(rho, np.zeros((4, 4)), 1e300, 1.0, steps=1)

    def test_richardson_check_rejects_coarse_steps(self):
        rho = random_density(3, 1)
        with pytest.raises(NumericalError):
            master_equation_integrate(rho, spin_operator_matrix(3, "x"), 2.0, 1.0, steps=3, richardson_tol=1e-8)

    def test_richardson_check_accepts_fine_steps(self):
        rho = random_density(2, 3)
        master_equation_integrate(rho, spin_operator_matrix(2, "z"), 1.0, 0.3, richardson_tol=1e-8)


def test_dephasing_commutes_with_entangling_phases():
    n, t, gamma = 4, 0.37, 0.8
    psi = entangle_zz(equatorial_state(n, 0.3), equatorial_state(n, 0.0), 0.0).ravel()
    rho = np.outer(psi, psi.conj())
    m = 2.0 * np.arange(n + 1) - n
    phase = np.exp(-1j * t * np.outer(m, m)).ravel()
    gate = lambda r: phase[:, None] * r * phase.conj()[None, :]
    deph = lambda r: dephase_joint(r, n, gamma, [t, t])
    np.testing.assert_allclose(gate(deph(rho)), deph(gate(rho)), atol=1e-12)


@pytest.mark.parametrize("n", [2, 4, 8])
def test_cat_state_dephases_n_squared_faster(n):
    gamma, t = 0.3, 0.05
    params = DephasingParams(gamma, t)
    cat = np.zeros(n + 1)
    cat[[0, n]] = 1 / math.sqrt(2)
    cat_rho = QubitDensity.from_state(DickeState(n, cat))
    coh_rho = QubitDensity.from_state(equatorial_state(n, 0.0))
    cat_rate = -math.log(abs(dephase_exact(cat_rho, params).matrix[n, 0] / cat_rho.matrix[n, 0])) / (gamma * t)
    coh_rate = -math.log(abs(dephase_exact(coh_rho, params).matrix[1, 0] / coh_rho.matrix[1, 0])) / (gamma * t)
    assert cat_rate / coh_rate == pytest.approx(n**2, rel=1e-9)


def test_dephasing_factor_formula():
    f = dephasing_factors(3, 0.5, 2.0)
    assert f[3, 0] == pytest.approx(math.exp(-2 * 0.5 * 2.0 * 9))
    np.testing.assert_array_equal(np.diag(f), 1.0)
