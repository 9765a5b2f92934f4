import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom

from bec_teleport.channels import QubitDensity
from bec_teleport.spin_core import (
    DickeState,
    LogBinomialTable,
    SpinCoherentParams,
    coherent_state,
    equatorial_state,
    expectation_spin,
    hadamard,
    hadamard_matrix,
    hadamard_via_rotations,
    rotate,
    spin_operator_matrix,
    wrap_angle,
)


def random_state(n, seed):
    rng = np.random.default_rng(seed)
    return DickeState.normalized(n, rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1))


def raw_coherent(n, alpha, beta):
    # brute-force binomial expansion of (alpha a^dag + beta b^dag)^N / sqrt(N!)
    return np.array([math.sqrt(math.comb(n, k)) * alpha**k * beta ** (n - k) for k in range(n + 1)])


class TestCoherentState:
    def test_two_bosons_on_equator(self):
        s = coherent_state(2, SpinCoherentParams(math.pi / 2, 0.0))
        np.testing.assert_allclose(s.amplitudes, [0.5, math.sqrt(2) / 2, 0.5], atol=1e-15)

    def test_north_pole_puts_everything_in_mode_a(self):
        s = coherent_state(3, SpinCoherentParams(0.0, 1.234))
        np.testing.assert_allclose(np.abs(s.amplitudes), [0, 0, 0, 1], atol=1e-15)

    def test_phi_pi(self):
        s = coherent_state(2, SpinCoherentParams(math.pi / 2, math.pi))
        np.testing.assert_allclose(s.amplitudes, [-0.5, math.sqrt(2) / 2, -0.5], atol=1e-15)
        a = np.exp(-0.5j * math.pi) / math.sqrt(2)
        b = np.exp(0.5j * math.pi) / math.sqrt(2)
        assert abs(np.vdot(raw_coherent(2, a, b), s.amplitudes)) == pytest.approx(1.0, abs=1e-14)

    def test_rejects_zero_bosons(self):
        with pytest.raises(ValueError):
            coherent_state(0, SpinCoherentParams(1.0, 0.0))

    def test_rejects_out_of_range_angles(self):
        with pytest.raises(ValueError):
            SpinCoherentParams(4.0, 0.0)
        with pytest.raises(ValueError):
            SpinCoherentParams(1.0, 3.5)

    @settings(max_examples=60, deadline=None)
    @given(
        n=st.integers(1, 300),
        theta=st.floats(0.0, math.pi),
        phi=st.floats(-math.pi, math.pi),
    )
    def test_populations_are_binomial(self, n, theta, phi):
        s = coherent_state(n, SpinCoherentParams(theta, phi))
        k = np.arange(n + 1)
        expected = binom.pmf(k, n, math.cos(theta / 2) ** 2)
        np.testing.assert_allclose(np.abs(s.amplitudes) ** 2, expected, atol=1e-12)

    def test_large_n_is_finite_and_normalized(self):
        s = coherent_state(2000, SpinCoherentParams(1.1, 0.4))
        assert np.isfinite(s.amplitudes).all()
        assert np.linalg.norm(s.amplitudes) == pytest.approx(1.0, abs=1e-12)


class TestLogBinomialTable:
    @pytest.mark.parametrize("n", [1, 2, 7, 50, 1000])
    def test_symmetric_and_anchored(self, n):
        lc = LogBinomialTable.for_n(n).log_choose
        assert lc[0] == 0.0
        assert np.array_equal(lc, lc[::-1])

    def test_matches_exact_integers(self):
        n = 300
        lc = LogBinomialTable.for_n(n).log_choose
        exact = [math.log(math.comb(n, k)) for k in range(n + 1)]
        np.testing.assert_allclose(lc, exact, rtol=1e-13, atol=1e-12)

    def test_n_1000_normalizes(self):
        lc = LogBinomialTable.for_n(1000).log_choose
        w = np.exp(lc - 1000 * math.log(2))
        assert np.isfinite(w).all()
        assert w.sum() == pytest.approx(1.0, abs=1e-9)


class TestSpinOperators:
    def test_n1_matrices(self):
        np.testing.assert_array_equal(spin_operator_matrix(1, "z"), np.diag([-1.0, 1.0]))
        np.testing.assert_array_equal(spin_operator_matrix(1, "x"), [[0, 1], [1, 0]])

    def test_n2_sx(self):
        sx = spin_operator_matrix(2, "x")
        np.testing.assert_allclose(np.diag(sx, -1), [math.sqrt(2)] * 2)
        np.testing.assert_allclose(np.diag(sx, 1), [math.sqrt(2)] * 2)

    @pytest.mark.parametrize("n", [1, 2, 5, 17, 50])
    def test_commutator_and_hermiticity(self, n):
        sx, sy, sz = (spin_operator_matrix(n, a) for a in "xyz")
        np.testing.assert_allclose(sx @ sy - sy @ sx, 2j * sz, atol=1e-10)
        for m in (sx, sy, sz):
            np.testing.assert_array_equal(m, m.conj().T)

    def test_bad_axis(self):
        with pytest.raises(ValueError):
            spin_operator_matrix(3, "w")


class TestRotations:
    def test_zero_angle_is_identity(self):
        s = random_state(6, 1)
        for axis in "xyz":
            np.testing.assert_allclose(rotate(s, axis, 0.0).amplitudes, s.amplitudes, atol=1e-14)

    def test_z_rotation_advances_azimuth(self):
        s = rotate(equatorial_state(10, 0.0), "z", math.pi)
        assert s.same_ray(equatorial_state(10, math.pi), tol=1e-12)

    def test_x_rotation_matches_classical_bloch_rotation(self):
        n, phi, angle = 4, 0.3, 0.7
        out = expectation_spin(rotate(equatorial_state(n, phi), "x", angle))
        v = np.array([n * math.cos(phi), n * math.sin(phi), 0.0])
        c, s = math.cos(angle), math.sin(angle)
        expected = np.array([[1, 0, 0], [0, c, -s], [0, s, c]]) @ v
        np.testing.assert_allclose([out.sx, out.sy, out.sz], expected, atol=1e-10)

    def test_z_rotations_compose(self):
        s = random_state(9, 2)
        a = rotate(rotate(s, "z", 0.4), "z", 1.3)
        b = rotate(s, "z", 1.7)
        np.testing.assert_allclose(a.amplitudes, b.amplitudes, atol=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(n=st.integers(1, 40), axis=st.sampled_from("xyz"), angle=st.floats(-7, 7), seed=st.integers(0, 2**32))
    def test_norm_preserved(self, n, axis, angle, seed):
        out = rotate(random_state(n, seed), axis, angle)
        assert np.linalg.norm(out.amplitudes) == pytest.approx(1.0, abs=1e-12)


class TestHadamard:
    def test_single_particle(self):
        out = hadamard(DickeState(1, [0, 1]))
        np.testing.assert_allclose(out.amplitudes, [1 / math.sqrt(2)] * 2, atol=1e-15)

    @pytest.mark.parametrize("n", [1, 2, 3, 10, 60, 150])
    def test_involution_and_orthogonality(self, n):
        h = hadamard_matrix(n)
        np.testing.assert_allclose(h @ h, np.eye(n + 1), atol=1e-12)
        np.testing.assert_allclose(h @ h.T, np.eye(n + 1), atol=1e-12)

    def test_maps_sz_to_sx(self):
        n = 40
        h = hadamard_matrix(n)
        np.testing.assert_allclose(
            h @ spin_operator_matrix(n, "z") @ h.T, spin_operator_matrix(n, "x"), atol=1e-10
        )

    def test_coherent_image_n2(self):
        phi = 0.8
        out = hadamard(equatorial_state(2, phi))
        expected = raw_coherent(2, math.cos(phi / 2), -1j * math.sin(phi / 2))
        np.testing.assert_allclose(out.amplitudes, expected, atol=1e-14)
        assert out.same_ray(hadamard_via_rotations(equatorial_state(2, phi)))

    def test_n1_basis_states_via_rotations(self):
        for k in (0, 1):
            b = DickeState.basis(1, k)
            assert hadamard_via_rotations(b).same_ray(hadamard(b), tol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_rotation_decomposition_n8(self, seed):
        s = random_state(8, seed)
        assert abs(hadamard(s).overlap(hadamard_via_rotations(s))) == pytest.approx(1.0, abs=1e-10)

    def test_equator_coherent_n2_phase(self):
        s = equatorial_state(2, 0.0)
        assert hadamard_via_rotations(s).same_ray(hadamard(s), tol=1e-12)

    def test_norm_preserved_large_n(self):
        s = equatorial_state(400, 1.0)
        assert np.linalg.norm(hadamard(s).amplitudes) == pytest.approx(1.0, abs=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(n=st.integers(1, 30), seed=st.integers(0, 2**32))
    def test_double_application_returns_state(self, n, seed):
        s = random_state(n, seed)
        assert hadamard(hadamard(s)).same_ray(s, tol=1e-12)


class TestExpectation:
    @pytest.mark.parametrize("n,phi", [(1, 0.0), (7, 1.3), (100, -2.9)])
    def test_equatorial(self, n, phi):
        s = expectation_spin(equatorial_state(n, phi))
        np.testing.assert_allclose([s.sx, s.sy, s.sz], [n * math.cos(phi), n * math.sin(phi), 0.0], atol=1e-10)

    def test_top_basis_state(self):
        s = expectation_spin(DickeState.basis(5, 5))
        assert (s.sx, s.sy, s.sz) == (0.0, 0.0, 5.0)

    def test_dephased_state_has_no_transverse_spin(self):
        rho = QubitDensity.from_state(equatorial_state(12, 0.7))
        diag = QubitDensity(12, np.diag(np.diag(rho.matrix)))
        s = expectation_spin(diag)
        np.testing.assert_allclose([s.sx, s.sy, s.sz], 0.0, atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(n=st.integers(1, 60), seed=st.integers(0, 2**32))
    def test_spin_length_bounded(self, n, seed):
        s = expectation_spin(random_state(n, seed))
        assert s.sx**2 + s.sy**2 + s.sz**2 <= n**2 + 1e-9


def test_wrap_angle():
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)


def test_state_validation():
    with pytest.raises(ValueError):
        DickeState(2, [1, 1, 0])
    with pytest.raises(ValueError):
        DickeState(2, [1, 0])
    s = equatorial_state(3, 0.1)
    with pytest.raises(ValueError):
        s.amplitudes[0] = 0
