import json

import numpy as np
import pytest

from povmscope.errors import InvalidInputError, NonphysicalStateError
from povmscope.qubit import (
    PAULIS,
    bloch_to_density,
    build_standard,
    conjugate_povm,
    density_to_bloch,
    element_from_matrix,
    povm_from_json,
    povm_from_matrices,
    povm_to_json,
    qt_from_json,
    qt_from_povm,
    qt_to_json,
    state_fidelity,
    validate_povm,
)

from conftest import qubit_fidelity_closed_form, random_povm, random_unitary


# ---------------------------------------------------------------------------
# Bloch conversions
# ---------------------------------------------------------------------------
def test_bloch_north_pole():
    assert np.allclose(bloch_to_density([0, 0, 1]), np.diag([1.0, 0.0]))


def test_bloch_maximally_mixed():
    assert np.allclose(bloch_to_density([0, 0, 0]), np.eye(2) / 2)


def test_bloch_plus_x():
    assert np.allclose(bloch_to_density([1, 0, 0]), np.array([[0.5, 0.5], [0.5, 0.5]]))


def test_bloch_rejects_overlong_vector():
    with pytest.raises(NonphysicalStateError):
        bloch_to_density([0.8, 0.8, 0.8])


@pytest.mark.parametrize("r", [[0, 0, 1], [0, 0, 0], [1, 0, 0], [0.2, -0.3, 0.4]])
def test_bloch_round_trip(r):
    assert np.allclose(density_to_bloch(bloch_to_density(r)), r, atol=1e-14)


def test_density_matrix_properties(rng):
    for _ in range(20):
        v = rng.normal(size=3)
        v *= rng.uniform(0, 1) / np.linalg.norm(v)
        rho = bloch_to_density(v)
        assert abs(np.trace(rho) - 1) < 1e-12
        assert np.allclose(rho, rho.conj().T)
        assert np.linalg.eigvalsh(rho).min() > -1e-12


# ---------------------------------------------------------------------------
# fidelity
# ---------------------------------------------------------------------------
def test_fidelity_self():
    rho = bloch_to_density([0.3, 0.1, -0.4])
    assert abs(state_fidelity(rho, rho) - 1.0) < 1e-12


def test_fidelity_orthogonal_pure():
    assert state_fidelity(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])) < 1e-12


def test_fidelity_pure_vs_mixed():
    assert abs(state_fidelity(np.diag([1.0, 0.0]), np.eye(2) / 2) - 0.5) < 1e-12


def test_fidelity_pure_states_equal_squared_overlap(rng):
    # oracle: direct bra-ket computation
    for _ in range(25):
        a = rng.normal(size=2) + 1j * rng.normal(size=2)
        b = rng.normal(size=2) + 1j * rng.normal(size=2)
        a /= np.linalg.norm(a)
        b /= np.linalg.norm(b)
        expected = abs(np.vdot(a, b)) ** 2
        got = state_fidelity(np.outer(a, a.conj()), np.outer(b, b.conj()))
        assert abs(got - expected) < 1e-10


def test_fidelity_matches_closed_form_and_symmetry(rng):
    for _ in range(25):
        va, vb = rng.normal(size=3), rng.normal(size=3)
        va *= rng.uniform(0, 1) / np.linalg.norm(va)
        vb *= rng.uniform(0, 1) / np.linalg.norm(vb)
        a, b = bloch_to_density(va), bloch_to_density(vb)
        assert abs(state_fidelity(a, b) - qubit_fidelity_closed_form(a, b)) < 1e-10
        assert abs(state_fidelity(a, b) - state_fidelity(b, a)) < 1e-9


# ---------------------------------------------------------------------------
# standard devices
# ---------------------------------------------------------------------------
def test_sic_first_element():
    povm = build_standard("sic4")
    assert np.allclose(povm.elements[0].matrix, np.diag([0.5, 0.0]))


def test_sic_symmetric_overlaps():
    mats = build_standard("sic4").matrices
    for k in range(4):
        for l in range(4):
            overlap = np.trace(mats[k] @ mats[l]).real
            assert abs(overlap - (0.25 if k == l else 1.0 / 12.0)) < 1e-12


def test_mub_weights():
    povm = build_standard("mub6")
    assert np.allclose(povm.t, 1.0 / 6.0)


def test_real_mub_is_valid_povm():
    d = validate_povm(build_standard("real_mub4"))
    assert d["completeness_residual"] < 1e-12
    assert d["min_eigenvalue"] > -1e-12


def test_build_standard_unknown_name():
    with pytest.raises(InvalidInputError):
        build_standard("qutrit9")


# ---------------------------------------------------------------------------
# validate_povm diagnostics
# ---------------------------------------------------------------------------
def test_validate_ideal_sic():
    d = validate_povm(build_standard("sic4"))
    assert d["hermiticity_residual"] < 1e-12
    assert d["completeness_residual"] < 1e-12
    assert d["min_eigenvalue"] > -1e-12
    assert d["bloch_residual"] < 1e-12


def test_validate_scaled_element():
    povm = build_standard("sic4")
    scaled = [m.copy() for m in povm.matrices]
    scaled[0] = 1.1 * scaled[0]
    broken = povm.__class__([element_from_matrix(m) for m in scaled])
    d = validate_povm(broken)
    expected = 0.1 * np.linalg.norm(povm.matrices[0])
    assert abs(d["completeness_residual"] - expected) < 1e-12


def test_validate_flags_negative_eigenvalue():
    povm = build_standard("sic4")
    mats = [m.copy() for m in povm.matrices]
    # replace element 1's zero eigenvalue with exactly -0.01
    w, v = np.linalg.eigh(mats[1])
    w[np.argmin(w)] = -0.01
    mats[1] = (v * w) @ v.conj().T
    broken = povm.__class__([element_from_matrix(m) for m in mats])
    d = validate_povm(broken)
    assert abs(d["min_eigenvalue"] + 0.01) < 1e-9


def test_povm_factory_rejects_incomplete():
    with pytest.raises(InvalidInputError):
        povm_from_matrices([np.diag([0.5, 0.0]), np.diag([0.0, 0.5])])


# ---------------------------------------------------------------------------
# (Q, t) representation
# ---------------------------------------------------------------------------
def test_qt_of_ideal_sic():
    qt = qt_from_povm(build_standard("sic4"))
    assert np.allclose(qt.t, 0.25, atol=1e-12)
    assert np.allclose(np.diag(qt.q), 1.0 / 16.0, atol=1e-12)
    off = qt.q[~np.eye(4, dtype=bool)]
    assert np.allclose(off, -1.0 / 48.0, atol=1e-12)


def test_qt_of_ideal_mub():
    qt = qt_from_povm(build_standard("mub6"))
    assert np.allclose(qt.t, 1.0 / 6.0, atol=1e-12)
    assert np.allclose(np.diag(qt.q), 1.0 / 36.0, atol=1e-12)
    for k in range(0, 6, 2):
        assert abs(qt.q[k, k + 1] + 1.0 / 36.0) < 1e-12  # same basis
    for k, l in [(0, 2), (0, 4), (2, 5), (1, 3)]:
        assert abs(qt.q[k, l]) < 1e-12  # cross basis


def test_qt_of_projective_measurement():
    povm = povm_from_matrices([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    qt = qt_from_povm(povm)
    assert np.allclose(qt.t, [0.5, 0.5])
    assert np.allclose(qt.q, [[0.25, -0.25], [-0.25, 0.25]], atol=1e-14)
    assert qt.rank == 1


def test_qt_invariants_random_povms():
    for seed in range(8):
        n = 2 + seed % 5
        qt = qt_from_povm(random_povm(n, seed=seed))
        res = qt.validate()
        assert res["row_sum_residual"] < 1e-12
        assert res["weight_sum_residual"] < 1e-12
        assert res["min_positivity_slack"] > -1e-12
        assert res["min_eigenvalue"] > -1e-12
        assert res["rank_excess"] < 1e-12  # rank(Q) <= 3
        assert qt.rank <= 3


# ---------------------------------------------------------------------------
# conjugation gauge
# ---------------------------------------------------------------------------
def test_conjugate_identity():
    povm = build_standard("sic4")
    out = conjugate_povm(povm, np.eye(2))
    for a, b in zip(out.matrices, povm.matrices):
        assert np.allclose(a, b)


def test_conjugate_pauli_x_leaves_qt():
    povm = build_standard("sic4")
    qt0 = qt_from_povm(povm)
    qt1 = qt_from_povm(conjugate_povm(povm, PAULIS[0]))
    assert np.allclose(qt0.q, qt1.q, atol=1e-12)
    assert np.allclose(qt0.t, qt1.t, atol=1e-12)


def test_conjugate_rotation_leaves_qt():
    theta = np.pi / 8.0
    u = np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * PAULIS[1]
    povm = build_standard("mub6")
    qt0 = qt_from_povm(povm)
    qt1 = qt_from_povm(conjugate_povm(povm, u))
    assert np.max(np.abs(qt0.q - qt1.q)) < 1e-12
    assert np.max(np.abs(qt0.t - qt1.t)) < 1e-12


def test_conjugate_gauge_invariance_random(rng):
    for seed in range(6):
        povm = random_povm(4, seed=100 + seed)
        u = random_unitary(seed)
        qt0, qt1 = qt_from_povm(povm), qt_from_povm(conjugate_povm(povm, u))
        assert np.max(np.abs(qt0.q - qt1.q)) < 1e-12
        assert np.max(np.abs(qt0.t - qt1.t)) < 1e-12


def test_conjugate_rejects_non_unitary():
    with pytest.raises(InvalidInputError):
        conjugate_povm(build_standard("sic4"), np.array([[1.0, 0.1], [0.0, 1.0]]))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------
def test_povm_json_round_trip():
    povm = build_standard("sic4")
    doc = povm_to_json(povm)
    json.dumps(doc)  # must be JSON-serializable
    back = povm_from_json(doc)
    for a, b in zip(back.matrices, povm.matrices):
        assert np.allclose(a, b, atol=1e-15)


def test_qt_json_round_trip():
    qt = qt_from_povm(build_standard("mub6"))
    back = qt_from_json(json.loads(json.dumps(qt_to_json(qt))))
    assert np.allclose(back.q, qt.q)
    assert np.allclose(back.t, qt.t)
    assert back.rank == qt.rank


def test_json_schema_checked():
    with pytest.raises(InvalidInputError):
        povm_from_json({"schema": "other/9", "elements": []})
