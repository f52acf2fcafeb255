"""Qubit states, POVMs and their overlap representation.

A qubit state is ``rho = (I + r . sigma) / 2`` with Bloch vector ``r``
(``|r| <= 1``); a POVM element is ``pi_k = t_k I + m_k . sigma``. The pair

    Q[k, l] = Tr(pi_k pi_l)/2 - Tr(pi_k) Tr(pi_l)/4  (= m_k . m_l)
    t[k]    = Tr(pi_k)/2

identifies the measurement up to a global unitary/anti-unitary rotation and
is what the self-characterization pipeline estimates. ``Q`` is PSD with rank
at most 3, its rows sum to zero, and positivity of the elements reads
``t_k**2 - Q[k, k] >= 0``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, NonphysicalStateError

__all__ = [
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "PAULIS",
    "PovmElement",
    "Povm",
    "QTRep",
    "bloch_to_density",
    "density_to_bloch",
    "state_fidelity",
    "build_standard",
    "validate_povm",
    "qt_from_povm",
    "conjugate_povm",
    "element_from_matrix",
    "povm_from_matrices",
    "povm_to_json",
    "povm_from_json",
    "qt_to_json",
    "qt_from_json",
]

SCHEMA = "povm-scope/1"

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)
_I2 = np.eye(2, dtype=complex)


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------
def bloch_to_density(r) -> np.ndarray:
    """Density matrix ``(I + r . sigma) / 2`` of a Bloch vector."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise InvalidInputError("Bloch vector must have 3 components")
    norm = np.linalg.norm(r)
    if norm > 1.0 + 1e-9:
        raise NonphysicalStateError(f"|r| = {norm:.12f} exceeds 1")
    return 0.5 * (_I2 + r[0] * SIGMA_X + r[1] * SIGMA_Y + r[2] * SIGMA_Z)


def density_to_bloch(rho) -> np.ndarray:
    """Bloch vector ``r_i = Tr(rho sigma_i)``; inverse of :func:`bloch_to_density`."""
    rho = np.asarray(rho, dtype=complex)
    return np.array([np.trace(rho @ s).real for s in PAULIS])


def _herm_clip_sqrt(h: np.ndarray) -> np.ndarray:
    """Square root of the PSD part of a Hermitian matrix (negatives clipped)."""
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def _sqrt_overlap_trace(a: np.ndarray, b: np.ndarray) -> float:
    """``Tr sqrt(sqrt(a) b sqrt(a))`` for Hermitian PSD a, b.

    Evaluated as the nuclear norm of ``sqrt(a) sqrt(b)`` (the two agree
    analytically), which stays accurate for near-singular operators where
    eigenvalues of the sandwich product drown in rounding noise.
    """
    product = _herm_clip_sqrt(a) @ _herm_clip_sqrt(b)
    return float(np.linalg.svd(product, compute_uv=False).sum())


def state_fidelity(a, b) -> float:
    """Fidelity ``[Tr sqrt(sqrt(a) b sqrt(a))]**2`` between density matrices.

    Equals the squared overlap ``|<psi_a|psi_b>|**2`` for pure states.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    f = _sqrt_overlap_trace(a, b) ** 2
    return min(max(f, 0.0), 1.0)


# ---------------------------------------------------------------------------
# POVMs
# ---------------------------------------------------------------------------
@dataclass
class PovmElement:
    """One measurement outcome: 2x2 Hermitian PSD matrix and its Bloch pair."""

    matrix: np.ndarray
    t: float
    m: np.ndarray


@dataclass
class Povm:
    """Ordered collection of POVM elements summing to the identity."""

    elements: list[PovmElement]

    @property
    def n_outcomes(self) -> int:
        return len(self.elements)

    @property
    def matrices(self) -> list[np.ndarray]:
        return [e.matrix for e in self.elements]

    @property
    def t(self) -> np.ndarray:
        return np.array([e.t for e in self.elements])

    @property
    def m(self) -> np.ndarray:
        return np.stack([e.m for e in self.elements])


def element_from_matrix(matrix) -> PovmElement:
    """Build an element from its matrix, deriving the (t, m) decomposition."""
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (2, 2):
        raise InvalidInputError("POVM element must be a 2x2 matrix")
    if np.max(np.abs(matrix - matrix.conj().T)) > 1e-10:
        raise InvalidInputError("POVM element must be Hermitian")
    t = float(np.trace(matrix).real) / 2.0
    m = np.array([np.trace(matrix @ s).real / 2.0 for s in PAULIS])
    return PovmElement(matrix=matrix, t=t, m=m)


def povm_from_matrices(matrices, *, completeness_tol: float = 1e-9, positivity_tol: float = 1e-9) -> Povm:
    """Validated POVM from a list of 2x2 Hermitian PSD matrices."""
    elements = [element_from_matrix(m) for m in matrices]
    if len(elements) < 2:
        raise InvalidInputError("a POVM needs at least 2 outcomes")
    total = sum(e.matrix for e in elements)
    if np.max(np.abs(total - _I2)) > completeness_tol:
        raise InvalidInputError(
            f"elements do not sum to identity (residual {np.max(np.abs(total - _I2)):.3e})"
        )
    for k, e in enumerate(elements):
        w = np.linalg.eigvalsh(e.matrix)
        if w.min() < -positivity_tol:
            raise InvalidInputError(f"element {k} has negative eigenvalue {w.min():.3e}")
    return Povm(elements)


def _projector(ket) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex)
    ket = ket / np.linalg.norm(ket)
    return np.outer(ket, ket.conj())


def build_standard(name: str) -> Povm:
    """One of the stock measurement devices.

    ``mub6``      six outcomes: the bases {|0>,|1>}, {|+>,|->}, {|+i>,|-i>},
                  each projector weighted 1/3.
    ``sic4``      the four-outcome symmetric informationally complete
                  measurement (tetrahedral, pairwise overlaps Tr(pi_k pi_l) = 1/12).
    ``real_mub4`` two real bases {|0>,|1>} and {|+>,|->}, weighted 1/2; the
                  overlap matrix Q has rank 2 (incomplete measurement).
    """
    if name == "mub6":
        kets = [
            [1, 0],
            [0, 1],
            [1 / np.sqrt(2), 1 / np.sqrt(2)],
            [1 / np.sqrt(2), -1 / np.sqrt(2)],
            [1 / np.sqrt(2), 1j / np.sqrt(2)],
            [1 / np.sqrt(2), -1j / np.sqrt(2)],
        ]
        return povm_from_matrices([_projector(k) / 3.0 for k in kets])
    if name == "sic4":
        mats = [np.array([[0.5, 0.0], [0.0, 0.0]], dtype=complex)]
        for phase in (np.pi, np.pi / 3.0, -np.pi / 3.0):
            off = (np.sqrt(2.0) / 6.0) * np.exp(1j * phase)
            mats.append(np.array([[1.0 / 6.0, off], [np.conj(off), 1.0 / 3.0]]))
        return povm_from_matrices(mats)
    if name == "real_mub4":
        kets = [[1, 0], [0, 1], [1 / np.sqrt(2), 1 / np.sqrt(2)], [1 / np.sqrt(2), -1 / np.sqrt(2)]]
        return povm_from_matrices([_projector(k) / 2.0 for k in kets])
    raise InvalidInputError(f"unknown standard POVM {name!r}; expected mub6, sic4 or real_mub4")


def validate_povm(povm: Povm) -> dict:
    """Diagnostic residuals: Hermiticity, positivity, completeness.

    Never raises; returns the numbers so callers can apply their own
    tolerances.
    """
    herm = max(float(np.max(np.abs(e.matrix - e.matrix.conj().T))) for e in povm.elements)
    min_eig = min(float(np.linalg.eigvalsh(0.5 * (e.matrix + e.matrix.conj().T)).min()) for e in povm.elements)
    total = sum(e.matrix for e in povm.elements)
    completeness = float(np.linalg.norm(total - _I2))
    bloch_residual = max(
        float(np.max(np.abs(e.matrix - (e.t * _I2 + e.m[0] * SIGMA_X + e.m[1] * SIGMA_Y + e.m[2] * SIGMA_Z))))
        for e in povm.elements
    )
    return {
        "hermiticity_residual": herm,
        "min_eigenvalue": min_eig,
        "completeness_residual": completeness,
        "bloch_residual": bloch_residual,
    }


# ---------------------------------------------------------------------------
# (Q, t) representation
# ---------------------------------------------------------------------------
@dataclass
class QTRep:
    """Overlap matrix Q and weight vector t of a POVM, plus Q's numerical rank."""

    q: np.ndarray
    t: np.ndarray
    rank: int = field(default=0)

    @property
    def n_outcomes(self) -> int:
        return len(self.t)

    def validate(self) -> dict:
        """Residuals against the structural invariants of a qubit (Q, t)."""
        w = np.linalg.eigvalsh(0.5 * (self.q + self.q.T))
        return {
            "symmetry_residual": float(np.max(np.abs(self.q - self.q.T))),
            "min_eigenvalue": float(w.min()),
            "rank_excess": float(np.sort(w)[::-1][3:].max(initial=0.0)),
            "row_sum_residual": float(np.max(np.abs(self.q.sum(axis=1)))),
            "weight_sum_residual": float(abs(self.t.sum() - 1.0)),
            "min_positivity_slack": float((self.t**2 - np.diag(self.q)).min()),
        }


def _detect_rank(q: np.ndarray, rel_tol: float = 1e-9) -> int:
    w = np.abs(np.linalg.eigvalsh(0.5 * (q + q.T)))
    top = w.max()
    if top == 0.0:
        return 0
    return min(3, int(np.sum(w > rel_tol * top)))


def qt_from_povm(povm: Povm) -> QTRep:
    """Overlap representation ``Q[k,l] = Tr(pi_k pi_l)/2 - Tr(pi_k)Tr(pi_l)/4``,
    ``t[k] = Tr(pi_k)/2``."""
    mats = povm.matrices
    n = len(mats)
    traces = np.array([np.trace(m).real for m in mats])
    q = np.empty((n, n))
    for k in range(n):
        for l in range(k, n):
            overlap = np.trace(mats[k] @ mats[l]).real
            q[k, l] = q[l, k] = 0.5 * overlap - 0.25 * traces[k] * traces[l]
    return QTRep(q=q, t=traces / 2.0, rank=_detect_rank(q))


def conjugate_povm(povm: Povm, unitary) -> Povm:
    """POVM with every element conjugated, ``U pi_k U^dag``. Leaves (Q, t) unchanged."""
    u = np.asarray(unitary, dtype=complex)
    if u.shape != (2, 2) or np.max(np.abs(u.conj().T @ u - _I2)) > 1e-10:
        raise InvalidInputError("conjugate_povm requires a 2x2 unitary")
    return Povm([element_from_matrix(u @ e.matrix @ u.conj().T) for e in povm.elements])


# ---------------------------------------------------------------------------
# serialization (schema "povm-scope/1"; complex entries as [re, im] pairs)
# ---------------------------------------------------------------------------
def _complex_matrix_to_json(m: np.ndarray) -> list:
    return [[[float(x.real), float(x.imag)] for x in row] for row in np.asarray(m, dtype=complex)]


def _complex_matrix_from_json(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def povm_to_json(povm: Povm) -> dict:
    return {
        "schema": SCHEMA,
        "kind": "povm",
        "elements": [
            {"matrix": _complex_matrix_to_json(e.matrix), "t": float(e.t), "m": [float(x) for x in e.m]}
            for e in povm.elements
        ],
    }


def povm_from_json(doc: dict) -> Povm:
    if doc.get("schema") != SCHEMA:
        raise InvalidInputError(f"unsupported schema {doc.get('schema')!r}")
    return povm_from_matrices([_complex_matrix_from_json(e["matrix"]) for e in doc["elements"]])


def qt_to_json(qt: QTRep) -> dict:
    return {
        "schema": SCHEMA,
        "kind": "qt",
        "n_outcomes": qt.n_outcomes,
        "q": [float(x) for x in qt.q.reshape(-1)],  # row-major
        "t": [float(x) for x in qt.t],
        "rank": int(qt.rank),
    }


def qt_from_json(doc: dict) -> QTRep:
    if doc.get("schema") != SCHEMA:
        raise InvalidInputError(f"unsupported schema {doc.get('schema')!r}")
    n = int(doc["n_outcomes"])
    return QTRep(q=np.array(doc["q"], dtype=float).reshape(n, n), t=np.array(doc["t"], dtype=float), rank=int(doc["rank"]))


def save_json(doc: dict, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2))


def load_json(path) -> dict:
    return json.loads(Path(path).read_text())
