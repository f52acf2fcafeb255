"""Detector tomography baseline: constrained least squares with known probes.

Given probabilities ``p_k^(j)`` and the (assumed) probe states ``rho^(j)``,
find the POVM minimizing ``sum_jk [p_k^(j) - Tr(rho^(j) pi_k)]^2`` subject to
``pi_k >= 0`` and ``sum_k pi_k = I``. Accuracy inherits any error in the
assumed probe states, which is exactly what the self-characterization route
avoids.

Each element is parameterized as ``pi_k = B_k B_k^dag`` with 2x2 lower-
triangular ``B_k`` (4 real parameters), making positivity automatic;
completeness is handled as equality constraints and polished away by a final
whitening ``pi_k -> S^(-1/2) pi_k S^(-1/2)`` with ``S = sum_k pi_k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FitError, InvalidInputError, PovmScopeError
from .linalg import FitDiagnostics, OptimizerConfig, minimize_constrained
from .qubit import Povm, QTRep, povm_from_matrices, qt_from_povm
from .simulate import CountsMatrix, ProbeSet, ProbMatrix

__all__ = ["TomographyProblem", "qdt_fit", "qdt_to_qt"]


@dataclass
class TomographyProblem:
    """Statistics plus the probe states assumed to have produced them."""

    data: ProbMatrix
    states: ProbeSet
    regularization: float = 0.0

    def __post_init__(self):
        if isinstance(self.data, CountsMatrix):
            self.data = self.data.to_probabilities()
        if self.data.n_states != self.states.n_states:
            raise InvalidInputError(
                f"{self.data.n_states} data columns vs {self.states.n_states} probe states"
            )
        if self.regularization < 0:
            raise InvalidInputError("regularization must be >= 0")


def _params_to_tm(params: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """(t, m) rows of the POVM defined by the triangular factors."""
    ps = params.reshape(n, 4)
    a, cre, cim, b = ps[:, 0], ps[:, 1], ps[:, 2], ps[:, 3]
    p00 = a * a
    p11 = cre * cre + cim * cim + b * b
    t = 0.5 * (p00 + p11)
    # off-diagonal of B B^dag is a(cre - i cim) = m_x - i m_y
    m = np.stack([a * cre, a * cim, 0.5 * (p00 - p11)], axis=1)
    return t, m


def _params_to_matrices(params: np.ndarray, n: int) -> list[np.ndarray]:
    mats = []
    for a, cre, cim, b in params.reshape(n, 4):
        factor = np.array([[a, 0.0], [cre + 1j * cim, b]])
        mats.append(factor @ factor.conj().T)
    return mats


def _factor_params(matrix: np.ndarray) -> np.ndarray:
    """Lower-triangular PSD factor of (the PSD part of) a 2x2 Hermitian matrix."""
    w, v = np.linalg.eigh(0.5 * (matrix + matrix.conj().T))
    psd = (v * np.clip(w, 0.0, None)) @ v.conj().T
    p00 = max(psd[0, 0].real, 0.0)
    a = np.sqrt(p00)
    if a > 1e-12:
        off = psd[1, 0] / a
        rest = max(psd[1, 1].real - abs(off) ** 2, 0.0)
        return np.array([a, off.real, off.imag, np.sqrt(rest)])
    return np.array([0.0, 0.0, 0.0, np.sqrt(max(psd[1, 1].real, 0.0))])


def _linear_seed(p: np.ndarray, states: np.ndarray) -> np.ndarray:
    """Unconstrained per-element least squares in the (t, m) coordinates.

    Exact for noiseless informationally complete data; the minimum-norm
    solution otherwise.
    """
    design = np.hstack([np.ones((states.shape[0], 1)), states])  # (m, 4)
    theta = np.linalg.lstsq(design, p.T, rcond=None)[0].T  # (n, 4): rows (t, m)
    mats = []
    for t, mx, my, mz in theta:
        mats.append(
            np.array([[t + mz, mx - 1j * my], [mx + 1j * my, t - mz]])
        )
    return np.concatenate([_factor_params(m) for m in mats])


def _whiten(matrices: list[np.ndarray]) -> list[np.ndarray]:
    """Restore exact completeness without breaking positivity."""
    total = sum(matrices)
    w, v = np.linalg.eigh(0.5 * (total + total.conj().T))
    inv_sqrt = (v * (1.0 / np.sqrt(np.clip(w, 1e-300, None)))) @ v.conj().T
    out = []
    for m in matrices:
        m2 = inv_sqrt @ m @ inv_sqrt
        out.append(0.5 * (m2 + m2.conj().T))
    return out


def qdt_fit(
    problem: TomographyProblem,
    config: OptimizerConfig | None = None,
    *,
    return_diagnostics: bool = False,
):
    """Constrained least-squares POVM for the given probe states.

    When the probes are not informationally complete (their Bloch vectors
    plus the identity do not span the operator space) the fit still runs but
    the result is a least-norm representative, flagged ``non_unique`` in the
    diagnostics.
    """
    config = config or OptimizerConfig(restarts=4)
    p = np.asarray(problem.data.probs, dtype=float)
    states = np.asarray(problem.states.states, dtype=float)
    n = p.shape[0]
    ridge = problem.regularization

    design = np.hstack([np.ones((states.shape[0], 1)), states])
    unique = np.linalg.matrix_rank(design, tol=1e-9) == 4

    def cost(params: np.ndarray) -> float:
        t, m = _params_to_tm(params, n)
        model = t[:, None] + m @ states.T
        value = float(np.sum((p - model) ** 2))
        if ridge:
            value += ridge * float(np.sum(params**2))
        return value

    def completeness(params: np.ndarray) -> np.ndarray:
        t, m = _params_to_tm(params, n)
        return np.concatenate([[t.sum() - 1.0], m.sum(axis=0)])

    x0 = _linear_seed(p, states)
    rng = np.random.default_rng(config.seed)
    starts = [x0] + [x0 + rng.normal(scale=0.02, size=x0.shape) for _ in range(config.restarts - 1)]

    try:
        params, diag = minimize_constrained(
            cost,
            x0,
            equality_constraints=[completeness],
            config=config,
            starts=starts,
        )
    except PovmScopeError as exc:
        raise FitError(f"detector tomography failed: {exc}", diagnostics=getattr(exc, "diagnostics", None)) from exc

    povm = povm_from_matrices(_whiten(_params_to_matrices(params, n)))
    if not unique:
        diag.flags = diag.flags + ("non_unique",)
    if return_diagnostics:
        return povm, diag
    return povm


def qdt_to_qt(povm: Povm) -> QTRep:
    """Overlap representation of a tomography result (delegates to qt_from_povm)."""
    return qt_from_povm(povm)
