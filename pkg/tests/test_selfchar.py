import numpy as np
import pytest

from povmscope.errors import DegenerateDataError, FitError, InvalidInputError
from povmscope.linalg import OptimizerConfig
from povmscope.metrics import affine_residual, fidelity_q, fidelity_t, l_value
from povmscope.qubit import build_standard, conjugate_povm, qt_from_povm
from povmscope.selfchar import (
    ReducedData,
    boundary,
    center_data,
    fit_ellipsoid,
    lift_to_qt,
    qdsc_run,
    reduce_data,
)
from povmscope.simulate import ProbMatrix, born_matrix, circle_states, probe_grid, random_states, sample_counts

from conftest import random_povm, rotation_unitary

FAST = OptimizerConfig(restarts=6, seed=0)


def exact_data(device: str, probes=None) -> ProbMatrix:
    return born_matrix(build_standard(device), probes if probes is not None else probe_grid())


# ---------------------------------------------------------------------------
# center
# ---------------------------------------------------------------------------
def test_center_identical_columns_gives_zero():
    p = np.tile(np.array([[0.3], [0.7]]), (1, 6))
    a, mean_p = center_data(p)
    assert np.allclose(a, 0.0)
    assert np.allclose(mean_p, [0.3, 0.7])


def test_center_two_columns():
    a, _ = center_data(np.array([[1.0, 0.0], [0.0, 1.0]]))
    assert np.allclose(a, [[0.5, -0.5], [-0.5, 0.5]])


def test_center_columns_sum_to_zero():
    a, _ = center_data(exact_data("mub6"))
    assert np.max(np.abs(a.sum(axis=0))) < 1e-12


@pytest.mark.parametrize("device", ["sic4", "mub6", "real_mub4"])
def test_center_rank_drop(device):
    # centering absorbs normalization: rank(A) = rank(P) - 1 for exact data
    p = exact_data(device).probs
    a, _ = center_data(p)
    rank_p = np.linalg.matrix_rank(p, tol=1e-10)
    rank_a = np.linalg.matrix_rank(a, tol=1e-10)
    assert rank_a == rank_p - 1


# ---------------------------------------------------------------------------
# reduce
# ---------------------------------------------------------------------------
def test_reduce_exact_mub_rank_three():
    a, mean_p = center_data(exact_data("mub6"))
    rd = reduce_data(a, 0.05, mean_p)
    assert rd.detected_rank == 3
    assert np.all(rd.all_singular_values[3:] < 1e-12)
    assert np.allclose(rd.u_r.T @ rd.u_r, np.eye(3), atol=1e-12)


def test_reduce_real_mub_rank_two():
    a, mean_p = center_data(exact_data("real_mub4"))
    rd = reduce_data(a, 0.05, mean_p)
    assert rd.detected_rank == 2


def test_reduce_noisy_discarded_scale():
    # discarded singular values sit at the shot-noise floor, O(1/sqrt(N));
    # mub6 (n=6) has genuinely noise-bearing discarded directions
    povm = build_standard("mub6")
    pm = born_matrix(povm, probe_grid())
    floors = []
    for shots in (10**4, 10**6):
        freq = sample_counts(pm, shots, seed=2).to_probabilities()
        a, mean_p = center_data(freq)
        rd = reduce_data(a, 0.05, mean_p)
        assert rd.detected_rank == 3
        assert rd.all_singular_values[3] < 50.0 / np.sqrt(shots)
        floors.append(rd.all_singular_values[3])
    ratio = floors[0] / floors[1]
    assert 3.0 < ratio < 30.0  # scaling consistent with 1/sqrt(N)


def test_reduce_noisy_sic_structural_zero():
    # sic4 (n=4) leaves no noise direction: frequencies sum to one exactly, so
    # the centered matrix has a structural null direction even with noise
    pm = born_matrix(build_standard("sic4"), probe_grid())
    freq = sample_counts(pm, 10**5, seed=2).to_probabilities()
    a, mean_p = center_data(freq)
    rd = reduce_data(a, 0.05, mean_p)
    assert rd.detected_rank == 3
    assert rd.all_singular_values[3] < 1e-12


def test_reduce_auto_threshold():
    pm = born_matrix(build_standard("mub6"), probe_grid())
    freq = sample_counts(pm, 10**5, seed=1).to_probabilities()
    a, mean_p = center_data(freq)
    assert reduce_data(a, "auto", mean_p).detected_rank == 3


def test_reduce_degenerate_data():
    p = np.tile(np.array([[0.25], [0.75]]), (1, 12))
    a, mean_p = center_data(p)
    with pytest.raises(DegenerateDataError):
        reduce_data(a, 0.05, mean_p)


# ---------------------------------------------------------------------------
# boundary
# ---------------------------------------------------------------------------
def test_boundary_all_grid_states_for_exact_sic():
    a, mean_p = center_data(exact_data("sic4"))
    rd = reduce_data(a, 0.05, mean_p)
    assert len(boundary(rd)) == 50


def test_boundary_excludes_interior_point():
    povm = build_standard("sic4")
    grid = probe_grid()
    pm = born_matrix(povm, grid)
    mixed_column = povm.t[:, None]  # maximally mixed state lands at the center
    probs = np.hstack([pm.probs, mixed_column])
    a, mean_p = center_data(probs)
    rd = reduce_data(a, 0.05, mean_p)
    b = boundary(rd)
    assert 50 not in b
    assert len(b) == 50


def test_boundary_rank_two_polygon():
    a, mean_p = center_data(exact_data("real_mub4", circle_states(24)))
    rd = reduce_data(a, 0.05, mean_p)
    b = boundary(rd)
    assert rd.detected_rank == 2
    assert len(b) == 24  # all circle states are extreme points of the ellipse


# ---------------------------------------------------------------------------
# fit + lift
# ---------------------------------------------------------------------------
def _synthetic_reduced(points: np.ndarray) -> ReducedData:
    """Wrap raw r-dimensional points with slack physicality (large weights)."""
    r = points.shape[1]
    return ReducedData(
        u_r=np.eye(r),
        s=np.ones(r),
        tilde_a=points.T,
        mean_p=np.full(r, 10.0),
        detected_rank=r,
        all_singular_values=np.ones(r),
    )


def _sphere_points(count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    u = rng.normal(size=(count, 3))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def test_fit_exact_unit_sphere():
    rd = _synthetic_reduced(_sphere_points(40, 0))
    fit = fit_ellipsoid(rd, np.arange(40), FAST)
    assert fit.cost < 1e-16
    assert np.allclose(fit.center, 0.0, atol=1e-8)
    assert np.allclose(fit.shape_l, np.eye(3), atol=1e-7)


def test_fit_recovers_synthetic_ellipsoid():
    # semi-axes (1, 2, 3), center (1, 0, 0); ground truth by construction
    u = _sphere_points(60, 1)
    pts = np.array([1.0, 0.0, 0.0]) + u * np.array([1.0, 2.0, 3.0])
    rd = _synthetic_reduced(pts)
    fit = fit_ellipsoid(rd, np.arange(60), FAST)
    shape = fit.shape_l @ fit.shape_l.T
    eigs = np.sort(np.linalg.eigvalsh(shape))
    assert np.allclose(fit.center, [1.0, 0.0, 0.0], atol=1e-6)
    assert np.allclose(eigs, [1.0, 4.0, 9.0], atol=1e-6)


def test_fit_needs_enough_boundary_points():
    rd = _synthetic_reduced(_sphere_points(8, 2))
    with pytest.raises(FitError):
        fit_ellipsoid(rd, np.arange(8), FAST)


def test_fit_and_lift_exact_sic():
    a, mean_p = center_data(exact_data("sic4"))
    rd = reduce_data(a, 0.05, mean_p)
    fit = fit_ellipsoid(rd, boundary(rd), FAST)
    qt = lift_to_qt(fit, rd)
    truth = qt_from_povm(build_standard("sic4"))
    assert 1.0 - fidelity_q(truth, qt) < 1e-8
    res = qt.validate()
    assert res["row_sum_residual"] < 1e-9
    assert res["weight_sum_residual"] < 1e-9
    assert res["min_positivity_slack"] > -1e-12


def test_lift_center_only():
    # identity ellipsoid centered at origin: t reduces to the column mean
    rd = _synthetic_reduced(_sphere_points(30, 3))
    fit = fit_ellipsoid(rd, np.arange(30), FAST)
    qt_t = rd.mean_p + rd.u_r @ fit.center
    assert np.allclose(qt_t, rd.mean_p, atol=1e-7)


def test_lift_exact_mub_weights():
    qt, _ = qdsc_run(exact_data("mub6"), FAST)
    assert np.max(np.abs(qt.t - 1.0 / 6.0)) < 1e-9


def test_lift_noisy_weights_within_band():
    # Monte Carlo band: the aggregate weight estimate stays within the
    # single-run standard error (x3) of 1/4 per entry; the residual
    # nonlinear-least-squares bias at this shot count is about one sigma
    povm = build_standard("sic4")
    pm = born_matrix(povm, probe_grid())
    estimates = []
    for run in range(12):
        freq = sample_counts(pm, 10**5, seed=100 + run).to_probabilities()
        qt, _ = qdsc_run(freq, OptimizerConfig(restarts=6, seed=run))
        estimates.append(qt.t)
    estimates = np.array(estimates)
    single_run_se = estimates.std(axis=0, ddof=1)
    assert np.all(np.abs(estimates.mean(axis=0) - 0.25) <= 3 * single_run_se)


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------
def test_qdsc_exact_mub_structure():
    qt, diag = qdsc_run(exact_data("mub6"), OptimizerConfig(restarts=16, seed=0))
    assert diag.converged and diag.boundary_size == 50
    assert np.max(np.abs(np.diag(qt.q) - 1.0 / 36.0)) < 1e-7
    for k in (0, 2, 4):
        assert abs(qt.q[k, k + 1] + 1.0 / 36.0) < 1e-7
    assert abs(qt.q[0, 2]) < 1e-7 and abs(qt.q[1, 4]) < 1e-7


def test_qdsc_exact_sic_structure():
    qt, _ = qdsc_run(exact_data("sic4"), OptimizerConfig(restarts=16, seed=0))
    assert np.max(np.abs(np.diag(qt.q) - 0.0625)) < 1e-7
    off = qt.q[~np.eye(4, dtype=bool)]
    assert np.max(np.abs(off + 1.0 / 48.0)) < 1e-7


def test_qdsc_counts_input_normalized_internally():
    pm = born_matrix(build_standard("sic4"), probe_grid())
    counts = sample_counts(pm, 10**5, seed=0)
    qt_counts, _ = qdsc_run(counts, FAST)
    qt_freq, _ = qdsc_run(counts.to_probabilities(), FAST)
    assert np.allclose(qt_counts.q, qt_freq.q)


def test_qdsc_nine_random_pure_states_exact():
    probes = random_states(9, seed=42)
    qt, _ = qdsc_run(exact_data("sic4", probes), OptimizerConfig(restarts=16, seed=1))
    truth = qt_from_povm(build_standard("sic4"))
    assert 1.0 - fidelity_q(truth, qt) < 1e-6
    assert 1.0 - fidelity_t(truth, qt) < 1e-8


def test_qdsc_rejects_too_few_states():
    pm = exact_data("sic4", random_states(5, seed=0))
    with pytest.raises(InvalidInputError):
        qdsc_run(pm)


def test_qdsc_stage_label_on_degenerate_data():
    p = np.tile(np.array([[0.25], [0.25], [0.25], [0.25]]), (1, 12))
    with pytest.raises(DegenerateDataError) as excinfo:
        qdsc_run(ProbMatrix(p))
    assert excinfo.value.stage == "reduce"


def test_qdsc_gauge_invariance_under_device_rotation():
    # rotating the device leaves the response range unchanged; with a probe
    # set of pure states the estimate must not move (noise-free)
    base, _ = qdsc_run(exact_data("sic4"), FAST)
    for seed, axis in enumerate([(1, 0, 0), (0.3, -1, 0.5), (0, 1, 1)]):
        u = rotation_unitary(axis, 0.4 + 0.3 * seed)
        rotated = conjugate_povm(build_standard("sic4"), u)
        qt, _ = qdsc_run(born_matrix(rotated, probe_grid()), FAST)
        assert 1.0 - fidelity_q(base, qt) < 1e-7
        assert np.max(np.abs(qt.t - base.t)) < 1e-6


def test_qdsc_affine_consistency_and_boundary_saturation():
    pm = exact_data("mub6")
    qt, _ = qdsc_run(pm, OptimizerConfig(restarts=16, seed=0))
    for j in range(pm.n_states):
        col = pm.probs[:, j]
        assert affine_residual(col, qt) < 1e-9
        assert abs(l_value(col, qt) - 1.0) < 1e-7


def test_qdsc_random_device(rng):
    povm = random_povm(5, seed=77)
    truth = qt_from_povm(povm)
    qt, _ = qdsc_run(born_matrix(povm, probe_grid()), OptimizerConfig(restarts=16, seed=2))
    assert 1.0 - fidelity_q(truth, qt) < 1e-6
    assert 1.0 - fidelity_t(truth, qt) < 1e-8
