import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from condent.errors import ConfigError, DimensionError, ValidationError
from condent.model import (
    SIGMA_MINUS,
    SIGMA_Z,
    Dephasing,
    MarkovAmplitudeDamping,
    OhmicCutoff,
    OUAmplitudeDamping,
    Superohmic,
    SystemSpec,
    apply_local,
    channel_elements,
    lindblad_operator,
    load_system,
    product_state,
    reduced_density_matrix,
    renormalize_lindblad,
    system_from_dict,
    system_to_dict,
    validate_system,
)

BELL = np.array([1, 0, 0, 1]) / math.sqrt(2)


def messages(exc):
    return " | ".join(m for _, m in exc.value.violations)


class TestRenormalize:
    def test_sigma_minus_is_already_traceless(self):
        J, a = renormalize_lindblad(SIGMA_MINUS)
        assert np.allclose(J, SIGMA_MINUS) and a == 0

    def test_identity_is_pure_trace(self):
        J, a = renormalize_lindblad(np.eye(2))
        assert np.allclose(J, 0) and a == 1

    def test_projector(self):
        J, a = renormalize_lindblad(np.diag([1.0, 0.0]))
        assert np.allclose(J, np.diag([0.5, -0.5])) and a == 0.5

    def test_non_square_rejected(self):
        with pytest.raises(DimensionError):
            renormalize_lindblad(np.zeros((2, 3)))

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, (3, 3, 2), elements=st.floats(-5, 5)))
    def test_property_traceless_and_exact(self, parts):
        L = parts[..., 0] + 1j * parts[..., 1]
        J, a = renormalize_lindblad(L)
        assert abs(np.trace(J)) < 1e-12
        assert np.max(np.abs(J + a * np.eye(3) - L)) < 1e-12


class TestReducedDensity:
    def test_bell(self):
        assert np.allclose(reduced_density_matrix(BELL, (2, 2), 0), np.eye(2) / 2)

    def test_product_plus(self):
        psi = product_state([1, 0], np.array([1, 1]) / math.sqrt(2))
        r11, r10 = channel_elements(reduced_density_matrix(psi, (2, 2), 1))
        assert r11 == pytest.approx(0.5) and r10 == pytest.approx(0.5)

    def test_weighted(self):
        psi = np.zeros(4)
        psi[2] = math.sqrt(3) / 2  # |10>
        psi[1] = 0.5  # |01>
        assert np.allclose(reduced_density_matrix(psi, (2, 2), 0), np.diag([0.25, 0.75]))

    def test_unnormalized_rejected(self):
        with pytest.raises(ValidationError):
            reduced_density_matrix(2 * BELL, (2, 2), 0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2), st.integers(0, 10_000))
    def test_property_trace_and_spectrum(self, target, seed):
        rng = np.random.default_rng(seed)
        dims = (2, 3, 2)
        psi = rng.normal(size=12) + 1j * rng.normal(size=12)
        psi /= np.linalg.norm(psi)
        rho = reduced_density_matrix(psi, dims, target)
        ev = np.linalg.eigvalsh(rho)
        assert abs(np.trace(rho) - 1) < 1e-12
        assert ev.min() > -1e-10 and ev.max() < 1 + 1e-10
        purity = np.trace(rho @ rho).real
        assert 1 / dims[target] - 1e-12 <= purity <= 1 + 1e-12


def test_apply_local_matches_kron():
    rng = np.random.default_rng(0)
    psi = rng.normal(size=12) + 0j
    op = rng.normal(size=(3, 3))
    assert np.allclose(apply_local(psi, (2, 3, 2), 1, op), np.kron(np.kron(np.eye(2), op), np.eye(2)) @ psi)


class TestValidation:
    def test_bell_with_damping_is_valid(self):
        spec = SystemSpec((2, 2), BELL, (MarkovAmplitudeDamping(1.0, 0),))
        assert validate_system(spec) is spec

    def test_qutrit_damping(self):
        spec = SystemSpec((3, 2), np.eye(6)[0], (MarkovAmplitudeDamping(1.0, 0),))
        with pytest.raises(ValidationError) as exc:
            validate_system(spec)
        assert "channel requires qubit" in messages(exc)

    def test_frozen_dynamics(self):
        spec = SystemSpec((2, 2), BELL, (OUAmplitudeDamping(1.0, 1.0, 1),), (None, SIGMA_Z))
        with pytest.raises(ValidationError) as exc:
            validate_system(spec)
        assert "frozen dynamics required" in messages(exc)

    def test_dephasing_hamiltonian_must_commute(self):
        ok = SystemSpec((2, 2), BELL, (Dephasing(1.0),), (0.3 * SIGMA_Z, None))
        validate_system(ok)
        bad = SystemSpec((2, 2), BELL, (Dephasing(1.0),), (np.array([[0, 1], [1, 0]]), None))
        with pytest.raises(ValidationError) as exc:
            validate_system(bad)
        assert "proportional" in messages(exc)

    def test_all_violations_collected(self):
        spec = SystemSpec((2, 1), np.ones(3), (MarkovAmplitudeDamping(-1.0, 0), Dephasing(1.0, target=0)))
        with pytest.raises(ValidationError) as exc:
            validate_system(spec)
        paths = [p for p, _ in exc.value.violations]
        assert "dims[1]" in paths and "initial_state" in paths and "channels[0].gamma" in paths

    def test_one_channel_per_subsystem(self):
        spec = SystemSpec((2, 2), BELL, (Dephasing(1.0, target=0), MarkovAmplitudeDamping(1.0, 0)))
        with pytest.raises(ValidationError) as exc:
            validate_system(spec)
        assert "at most one channel" in messages(exc)

    def test_size_cap(self):
        spec = SystemSpec((2,) * 7, np.eye(128)[0], ())
        with pytest.raises(ValidationError):
            validate_system(spec)
        validate_system(spec, max_dim=128)

    def test_non_hermitian_hamiltonian(self):
        spec = SystemSpec((2, 2), BELL, (), (np.array([[0, 1], [0, 0]]), None))
        with pytest.raises(ValidationError, match="not Hermitian"):
            validate_system(spec)


def test_lindblad_operators():
    assert np.allclose(lindblad_operator(MarkovAmplitudeDamping(4.0)), 2 * SIGMA_MINUS)
    assert np.allclose(lindblad_operator(Dephasing(2.0)), SIGMA_Z)
    J = lindblad_operator(Dephasing(1.0, levels=(0.0, 1.0, 2.0)), 3)
    assert np.allclose(J, np.diag([-0.5, 0, 0.5]))


class TestJson:
    def doc(self):
        return {
            "dims": [2, 2],
            "initial_state": [[0.5, 0], [0, 0], [0, 0], [0.8660254037844386, 0]],
            "channels": [{"kind": "dephasing", "target": 1,
                          "params": {"delta": 2.0, "density": {"shape": "ohmic_cutoff", "omega_d": 3.0}}}],
            "local_hamiltonians": {"1": [[[1, 0], [0, 0]], [[0, 0], [-1, 0]]]},
        }

    def test_round_trip(self):
        spec = system_from_dict(self.doc())
        again = system_from_dict(json.loads(json.dumps(system_to_dict(spec))))
        assert np.allclose(again.initial, spec.initial)
        assert again.channels == spec.channels
        assert again.channels[0].density == OhmicCutoff(3.0)
        assert np.allclose(again.local_hamiltonians[1], -SIGMA_Z)

    def test_unknown_kind_has_path(self):
        d = self.doc()
        d["channels"][0]["kind"] = "bogus"
        with pytest.raises(ConfigError) as exc:
            system_from_dict(d)
        assert exc.value.violations[0][0] == "channels[0].kind"

    def test_missing_param(self):
        d = self.doc()
        del d["channels"][0]["params"]["delta"]
        with pytest.raises(ConfigError) as exc:
            system_from_dict(d)
        assert exc.value.violations[0][0] == "channels[0].params.delta"

    def test_normalize_flag(self):
        d = self.doc()
        d["initial_state"] = [[1, 0], [0, 0], [0, 0], [1, 0]]
        with pytest.raises(ValidationError):
            system_from_dict(d)
        d["normalize"] = True
        assert np.allclose(system_from_dict(d).initial, BELL)

    def test_syntax_error_reports_line(self, tmp_path):
        f = tmp_path / "bad.json"
        f.write_text('{\n  "dims": [2, 2],\n  "initial_state": [[1, 0]\n}')
        with pytest.raises(ConfigError) as exc:
            load_system(f)
        assert exc.value.violations[0][0].startswith(f"{f}:4:")

    def test_superohmic_density(self):
        d = self.doc()
        d["channels"][0]["params"]["density"] = "superohmic"
        with pytest.raises(ConfigError, match="omega_d"):
            system_from_dict(d)
        d["channels"][0]["params"]["density"] = {"shape": "superohmic", "omega_d": 1}
        assert system_from_dict(d).channels[0].density == Superohmic(1.0)
