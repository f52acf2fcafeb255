"""Shared helpers: independent oracles the tests check implementations against."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.optimize import linprog

from povmscope.qubit import Povm, povm_from_matrices


def random_povm(n_outcomes: int, seed: int) -> Povm:
    """Generic valid POVM: random PSD pieces whitened to completeness."""
    rng = np.random.default_rng(seed)
    raw = []
    for _ in range(n_outcomes):
        g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        raw.append(g @ g.conj().T)
    total = sum(raw)
    w, v = np.linalg.eigh(total)
    inv_sqrt = (v * (1.0 / np.sqrt(w))) @ v.conj().T
    return povm_from_matrices([inv_sqrt @ m @ inv_sqrt for m in raw])


def random_unitary(seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def rotation_unitary(axis, angle_rad: float) -> np.ndarray:
    """SU(2) element rotating the Bloch sphere by ``angle_rad`` about ``axis``."""
    from povmscope.qubit import PAULIS

    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    n_sigma = sum(axis[i] * PAULIS[i] for i in range(3))
    return np.cos(angle_rad / 2) * np.eye(2) - 1j * np.sin(angle_rad / 2) * n_sigma


def in_hull_lp(point: np.ndarray, vertices: np.ndarray, tol: float = 1e-9) -> bool:
    """LP feasibility oracle: is ``point`` a convex combination of ``vertices``?

    Independent of any hull construction: solves for weights lambda >= 0 with
    sum(lambda) = 1 and V^T lambda = point (within tol via slack bounds).
    """
    point = np.atleast_1d(np.asarray(point, dtype=float))
    vertices = np.atleast_2d(np.asarray(vertices, dtype=float))
    if vertices.shape[1] != point.shape[0]:
        vertices = vertices.T
    n = vertices.shape[0]
    a_eq = np.vstack([vertices.T, np.ones(n)])
    b_eq = np.concatenate([point, [1.0]])
    res = linprog(np.zeros(n), A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * n, method="highs")
    if res.status == 0:
        return True
    # retry with a tolerance margin on the equality constraints
    slack = np.full(len(b_eq), tol)
    res = linprog(
        np.zeros(n),
        A_ub=np.vstack([a_eq, -a_eq]),
        b_ub=np.concatenate([b_eq + slack, -(b_eq - slack)]),
        bounds=[(0, None)] * n,
        method="highs",
    )
    return res.status == 0


def procrustes_gauge_match(m_a: np.ndarray, m_b: np.ndarray) -> np.ndarray:
    """Orthogonal matrix (rotation or reflection) best mapping m_a rows to m_b rows."""
    u, _, vt = np.linalg.svd(m_a.T @ m_b)
    return u @ vt


def qubit_fidelity_closed_form(a: np.ndarray, b: np.ndarray) -> float:
    """Independent 2x2 fidelity formula: Tr(ab) + 2 sqrt(det a det b)."""
    return float(np.trace(a @ b).real + 2.0 * np.sqrt(max((np.linalg.det(a) * np.linalg.det(b)).real, 0.0)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
