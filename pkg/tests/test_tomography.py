import dataclasses

import numpy as np
import pytest

from povmscope.errors import InvalidInputError
from povmscope.linalg import OptimizerConfig
from povmscope.metrics import fidelity_q, fidelity_t
from povmscope.qubit import build_standard, qt_from_povm, validate_povm
from povmscope.simulate import (
    ErrorModel,
    born_matrix,
    circle_states,
    icosahedron_states,
    inject_preparation_error,
    probe_grid,
    sample_counts,
)
from povmscope.tomography import TomographyProblem, qdt_fit, qdt_to_qt
from povmscope.calibrate import povm_element_fidelity
from povmscope.selfchar import qdsc_run

from conftest import random_povm

CFG = OptimizerConfig(restarts=2, seed=0)


def test_problem_validates_shapes():
    pm = born_matrix(build_standard("sic4"), probe_grid())
    with pytest.raises(InvalidInputError):
        TomographyProblem(pm, icosahedron_states())


def test_noiseless_sic_recovery():
    povm = build_standard("sic4")
    pm = born_matrix(povm, probe_grid())
    fitted = qdt_fit(TomographyProblem(pm, probe_grid()), CFG)
    for a, b in zip(fitted.elements, povm.elements):
        assert povm_element_fidelity(a, b) > 1 - 1e-9
    d = validate_povm(fitted)
    assert d["completeness_residual"] < 1e-9
    assert d["min_eigenvalue"] > -1e-9


def test_noiseless_mub_recovery():
    povm = build_standard("mub6")
    pm = born_matrix(povm, probe_grid())
    fitted = qdt_fit(TomographyProblem(pm, probe_grid()), CFG)
    # z basis comes first in this construction, so outcome 0 is the +z projector
    assert np.allclose(fitted.elements[0].matrix, np.diag([1.0 / 3.0, 0.0]), atol=1e-6)
    for a, b in zip(fitted.elements, povm.elements):
        assert povm_element_fidelity(a, b) > 1 - 1e-9


def test_random_device_recovery():
    for seed in (0, 1):
        povm = random_povm(3 + 3 * seed, seed=seed)  # n = 3 and n = 6
        pm = born_matrix(povm, probe_grid())
        fitted = qdt_fit(TomographyProblem(pm, probe_grid()), CFG)
        for a, b in zip(fitted.elements, povm.elements):
            assert povm_element_fidelity(a, b) > 1 - 1e-8


def test_wrong_labels_bias_grows_with_misalignment():
    # feeding ideal labels for misaligned preparations biases the fit, and the
    # bias grows with the misalignment magnitude (Monte Carlo sweep)
    povm = build_standard("sic4")
    truth = qt_from_povm(povm)
    grid = probe_grid()
    infidelities = []
    for deg in (0.0, 2.0, 8.0):
        true_states = inject_preparation_error(grid, ErrorModel(misalignment_deg=deg, seed=3))
        pm = born_matrix(povm, true_states)
        fitted = qdt_fit(TomographyProblem(pm, grid), CFG)  # ideal labels
        infidelities.append(1.0 - fidelity_q(truth, qdt_to_qt(fitted)))
    assert infidelities[0] < 1e-9
    assert infidelities[0] < infidelities[1] < infidelities[2]


def test_noisy_output_always_physical():
    povm = build_standard("mub6")
    pm = born_matrix(povm, probe_grid())
    for shots in (200, 10**4):
        freq = sample_counts(pm, shots, seed=1).to_probabilities()
        fitted = qdt_fit(TomographyProblem(freq, probe_grid()), CFG)
        d = validate_povm(fitted)
        assert d["completeness_residual"] < 1e-8
        assert d["min_eigenvalue"] > -1e-8


def test_agreement_with_self_characterization():
    # identical data, two methods: overlap representation agrees to > 0.9999
    povm = build_standard("sic4")
    pm = born_matrix(povm, probe_grid())
    freq = sample_counts(pm, 10**5, seed=9).to_probabilities()
    qt_sc, _ = qdsc_run(freq, OptimizerConfig(restarts=6, seed=0))
    qt_tomo = qdt_to_qt(qdt_fit(TomographyProblem(freq, probe_grid()), CFG))
    assert fidelity_q(qt_tomo, qt_sc) > 0.9999
    assert fidelity_t(qt_tomo, qt_sc) > 0.9999


def test_incomplete_probes_flagged_non_unique():
    povm = build_standard("sic4")
    circle = circle_states(12, plane="xz")  # spans only a 3-dim operator subspace
    pm = born_matrix(povm, circle)
    fitted, diag = qdt_fit(TomographyProblem(pm, circle), CFG, return_diagnostics=True)
    assert "non_unique" in diag.flags
    d = validate_povm(fitted)
    assert d["completeness_residual"] < 1e-9


def test_unique_fit_not_flagged():
    pm = born_matrix(build_standard("sic4"), icosahedron_states())
    _, diag = qdt_fit(TomographyProblem(pm, icosahedron_states()), CFG, return_diagnostics=True)
    assert "non_unique" not in diag.flags


def test_ridge_regularization_accepted():
    pm = born_matrix(build_standard("sic4"), icosahedron_states())
    tp = TomographyProblem(pm, icosahedron_states(), regularization=1e-8)
    fitted = qdt_fit(tp, CFG)
    assert validate_povm(fitted)["completeness_residual"] < 1e-9
    with pytest.raises(InvalidInputError):
        TomographyProblem(pm, icosahedron_states(), regularization=-1.0)


def test_qdt_to_qt_delegates():
    povm = build_standard("mub6")
    qt = qdt_to_qt(povm)
    ref = qt_from_povm(povm)
    assert np.allclose(qt.q, ref.q)
    assert np.allclose(qt.t, ref.t)


def test_counts_accepted_directly():
    povm = build_standard("sic4")
    counts = sample_counts(born_matrix(povm, icosahedron_states()), 10**4, seed=2)
    fitted = qdt_fit(TomographyProblem(counts, icosahedron_states()), CFG)
    assert validate_povm(fitted)["completeness_residual"] < 1e-9
