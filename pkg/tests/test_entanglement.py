import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from condent.entanglement import (
    MeasureKind,
    amplitude_damping_kraus,
    apply_local_channel,
    dephasing_kraus,
    hyperdeterminant,
    measure_for_dims,
    measure_mixed_concurrence,
    measure_pure,
    random_sl,
    verify_g_invariance,
)
from condent.errors import DimensionError, ValidationError
from condent.model import reduced_density_matrix

C2 = MeasureKind.CONCURRENCE_2Q
T3 = MeasureKind.SQRT_THREE_TANGLE
BELL = np.array([1, 0, 0, 1]) / math.sqrt(2)
GHZ = np.eye(8)[[0, 7]].sum(0) / math.sqrt(2)
W = np.eye(8)[[1, 2, 4]].sum(0) / math.sqrt(3)


def rand_state(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


class TestPure:
    def test_bell(self):
        assert measure_pure(C2, BELL) == pytest.approx(1.0)

    def test_unnormalized_bell(self):
        assert measure_pure(C2, np.array([1, 0, 0, 1])) == pytest.approx(2.0)

    def test_ghz_and_w(self):
        assert measure_pure(T3, GHZ) == pytest.approx(1.0)
        assert measure_pure(T3, W) == pytest.approx(0.0, abs=1e-15)

    def test_product_states(self):
        assert measure_pure(C2, np.kron([1, 1], [1, -1j]) / 2) == pytest.approx(0, abs=1e-15)

    def test_concurrence_matches_sigma_y_form(self):
        psi = rand_state(4, 1)
        yy = np.kron([[0, -1j], [1j, 0]], [[0, -1j], [1j, 0]])
        assert measure_pure(C2, psi) == pytest.approx(abs(psi @ yy @ psi), rel=1e-12)

    def test_layout_mismatch(self):
        with pytest.raises(DimensionError):
            measure_pure(T3, BELL)
        with pytest.raises(DimensionError):
            measure_for_dims((2, 3))
        assert measure_for_dims((2, 2, 2)) is T3

    @pytest.mark.parametrize("seed", range(20))
    def test_three_tangle_matches_monogamy(self, seed):
        # CKW: tau_ABC = 4 det rho_A - C_AB^2 - C_AC^2, an independent route to the tangle.
        psi = rand_state(8, seed)
        rho = np.outer(psi, psi.conj()).reshape(2, 2, 2, 2, 2, 2)
        rho_ab = np.einsum("abcdec->abde", rho).reshape(4, 4)
        rho_ac = np.einsum("abcdbf->acdf", rho).reshape(4, 4)
        rho_a = reduced_density_matrix(psi, (2, 2, 2), 0)
        tangle = 4 * np.linalg.det(rho_a).real - measure_mixed_concurrence(rho_ab) ** 2 \
            - measure_mixed_concurrence(rho_ac) ** 2
        assert measure_pure(T3, psi) ** 2 == pytest.approx(tangle, abs=1e-10)

    def test_hyperdeterminant_ghz(self):
        assert hyperdeterminant(GHZ) == pytest.approx(0.25)


class TestInvariance:
    @settings(max_examples=60, deadline=None)
    @given(st.sampled_from(list(MeasureKind)), st.integers(0, 2**31), st.complex_numbers(max_magnitude=10))
    def test_homogeneity(self, kind, seed, u):
        psi = rand_state(2 ** len(kind.dims), seed)
        g = measure_pure(kind, psi)
        assert measure_pure(kind, u * psi) == pytest.approx(abs(u) ** 2 * g, rel=1e-10, abs=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.sampled_from(list(MeasureKind)), st.integers(0, 2**31))
    def test_sl_invariance(self, kind, seed):
        rng = np.random.default_rng(seed)
        psi = rand_state(2 ** len(kind.dims), seed)
        ops = [random_sl(2, rng, 0.5) for _ in kind.dims]
        assert verify_g_invariance(kind, psi, ops) < 1e-9

    def test_identity_locals(self):
        assert verify_g_invariance(C2, BELL, [np.eye(2)] * 2) == 0

    def test_unitaries_on_ghz(self):
        from scipy.stats import unitary_group

        ops = [unitary_group.rvs(2, random_state=k) for k in range(3)]
        assert verify_g_invariance(T3, GHZ, ops) < 1e-9

    def test_determinant_checked(self):
        with pytest.raises(ValidationError):
            verify_g_invariance(C2, BELL, [2 * np.eye(2), np.eye(2)])


class TestMixed:
    def test_bell_projector(self):
        assert measure_mixed_concurrence(np.outer(BELL, BELL)) == pytest.approx(1.0)

    def test_maximally_mixed(self):
        assert measure_mixed_concurrence(np.eye(4) / 4) == 0.0

    @pytest.mark.parametrize("w", [0.2, 0.5, 0.9])
    def test_werner(self, w):
        rho = w * np.outer(BELL, BELL) + (1 - w) * np.eye(4) / 4
        assert measure_mixed_concurrence(rho) == pytest.approx(max(0, (3 * w - 1) / 2), abs=1e-12)

    def test_pure_states_agree(self):
        for seed in range(10):
            psi = rand_state(4, seed)
            assert measure_mixed_concurrence(np.outer(psi, psi.conj())) == pytest.approx(measure_pure(C2, psi),
                                                                                         abs=1e-10)

    def test_invalid_density(self):
        with pytest.raises(ValidationError, match="trace"):
            measure_mixed_concurrence(np.eye(4))
        with pytest.raises(ValidationError, match="positive"):
            measure_mixed_concurrence(np.diag([1.5, -0.5, 0, 0]))
        with pytest.raises(DimensionError):
            measure_mixed_concurrence(np.eye(2) / 2)


class TestKraus:
    @pytest.mark.parametrize("kraus", [amplitude_damping_kraus, dephasing_kraus])
    def test_trace_preserving(self, kraus):
        ks = kraus(0.37)
        assert np.allclose(sum(k.conj().T @ k for k in ks), np.eye(2))

    def test_damping_populations(self):
        rho = np.outer(BELL, BELL)
        out = apply_local_channel(rho, (2, 2), 0, amplitude_damping_kraus(0.4))
        # |11> decays into |01> with probability p
        assert out[3, 3].real == pytest.approx(0.5 * 0.6)
        assert out[1, 1].real == pytest.approx(0.5 * 0.4)
        assert out[0, 3] == pytest.approx(0.5 * math.sqrt(0.6))

    def test_acts_on_target_only(self):
        rho = np.outer(BELL, BELL)
        a = apply_local_channel(rho, (2, 2), 1, dephasing_kraus(0.5))
        assert a[0, 3] == pytest.approx(0.5 * math.sqrt(0.5))
        assert np.trace(a) == pytest.approx(1.0)
