"""Turn a (Q, t) estimate into concrete operators, and use them.

(Q, t) determines the POVM only up to a rotation/reflection of the Bloch
frame. ``align_frame`` fixes that gauge by convention: one anchor outcome's
m-vector defines +z, a second anchor is placed in the x-z half-plane of
chosen sign, and a residual reflection is fixed by the sign of the first
nonzero y-component. ``state_tomography`` then inverts outcome frequencies
through the calibrated operators, and ``tomography_study`` compares the
reconstructions obtained under competing POVM hypotheses on shared counts --
the loop-breaking demonstration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import FrameError, InvalidInputError, UndefinedFidelityError
from .qubit import PAULIS, Povm, PovmElement, QTRep, _sqrt_overlap_trace, bloch_to_density
from .simulate import ProbeSet, ProbMatrix, born_probabilities, sample_counts

__all__ = [
    "FrameConvention",
    "SIC_FRAME",
    "MUB_FRAME",
    "align_frame",
    "povm_element_fidelity",
    "state_tomography",
    "tomography_study",
    "StudyResult",
]


@dataclass(frozen=True)
class FrameConvention:
    """Gauge-fixing conventions for extracting operators from (Q, t).

    ``z_anchor``: outcome whose m-vector defines +z. ``xz_anchor``: outcome
    whose m-vector is placed in the x-z plane, with x-component of sign
    ``x_sign``. ``y_sign``: required sign of the first outcome with a nonzero
    y-component (fixes the remaining reflection; flipping it conjugates the
    operators).
    """

    z_anchor: int = 0
    xz_anchor: int = 1
    x_sign: int = 1
    y_sign: int = 1

    def __post_init__(self):
        if self.z_anchor == self.xz_anchor:
            raise InvalidInputError("frame anchors must be distinct outcomes")
        if self.x_sign not in (-1, 1) or self.y_sign not in (-1, 1):
            raise InvalidInputError("signs must be +1 or -1")


# conventions reproducing the usual presentation of the stock devices
SIC_FRAME = FrameConvention(z_anchor=0, xz_anchor=1, x_sign=-1, y_sign=-1)
MUB_FRAME = FrameConvention(z_anchor=4, xz_anchor=0, x_sign=1, y_sign=1)


def _m_factor(qt: QTRep) -> np.ndarray:
    """Rank-3 factor M (n x 3) with Q = M M^T, from the top eigenpairs."""
    w, v = np.linalg.eigh(0.5 * (qt.q + qt.q.T))
    order = np.argsort(w)[::-1][:3]
    w3 = w[order]
    if w3[2] <= 1e-9 * max(w3[0], 1e-300):
        raise FrameError("rank(Q) < 3: the Bloch frame is underdetermined")
    return v[:, order] * np.sqrt(w3)


def align_frame(qt: QTRep, convention: FrameConvention) -> Povm:
    """Concrete POVM operators satisfying the frame convention.

    Requires rank(Q) = 3. The output reproduces the input (Q, t) exactly
    (gauge rotations leave them unchanged) and is deterministic.
    """
    if qt.rank and qt.rank < 3:
        raise FrameError(f"rank(Q) = {qt.rank} < 3: the Bloch frame is underdetermined")
    m0 = _m_factor(qt)
    n = m0.shape[0]
    for anchor in (convention.z_anchor, convention.xz_anchor):
        if not 0 <= anchor < n:
            raise InvalidInputError(f"anchor {anchor} out of range for {n} outcomes")

    z_vec = m0[convention.z_anchor]
    if np.linalg.norm(z_vec) < 1e-12:
        raise FrameError(f"anchor outcome {convention.z_anchor} has zero m-vector")
    z_axis = z_vec / np.linalg.norm(z_vec)

    u = m0[convention.xz_anchor] - (m0[convention.xz_anchor] @ z_axis) * z_axis
    if np.linalg.norm(u) < 1e-12:
        raise FrameError(
            f"anchor outcomes {convention.z_anchor}/{convention.xz_anchor} have parallel m-vectors"
        )
    x_axis = convention.x_sign * u / np.linalg.norm(u)
    y_axis = np.cross(z_axis, x_axis)

    rotation = np.stack([x_axis, y_axis, z_axis], axis=1)  # columns = new axes
    m = m0 @ rotation
    y_col = m[:, 1]
    nonzero = np.where(np.abs(y_col) > 1e-9)[0]
    if len(nonzero) and np.sign(y_col[nonzero[0]]) != convention.y_sign:
        m[:, 1] = -y_col  # anti-unitary partner; (Q, t) unchanged

    elements = []
    for k in range(n):
        mat = qt.t[k] * np.eye(2, dtype=complex) + sum(m[k, i] * PAULIS[i] for i in range(3))
        elements.append(PovmElement(matrix=mat, t=float(qt.t[k]), m=m[k].copy()))
    return Povm(elements)


def povm_element_fidelity(a: PovmElement, b: PovmElement) -> float:
    """Trace-normalized fidelity ``[Tr sqrt(sqrt(a) b sqrt(a))]^2 / (Tr a Tr b)``."""
    tra = float(np.trace(a.matrix).real)
    trb = float(np.trace(b.matrix).real)
    if tra <= 1e-12 or trb <= 1e-12:
        raise UndefinedFidelityError("element fidelity undefined for zero-trace operators")
    f = _sqrt_overlap_trace(a.matrix, b.matrix) ** 2 / (tra * trb)
    return min(max(f, 0.0), 1.0)


# ---------------------------------------------------------------------------
# state tomography with a calibrated measurement
# ---------------------------------------------------------------------------
def state_tomography(
    povm: Povm,
    frequencies,
    *,
    return_diagnostics: bool = False,
    rank_tol: float = 1e-9,
):
    """Least-squares state consistent with the observed outcome frequencies.

    Minimizes ``sum_k [f_k - Tr(rho pi_k)]^2`` over density matrices. In the
    Bloch ball this is ``min |b - M r|`` over ``|r| <= 1`` with
    ``b = f - t``, solved exactly: the minimum-norm least-squares solution
    if it is inside the ball, otherwise the unique boundary solution of the
    corresponding trust-region problem (found by root-finding on the
    Lagrange multiplier). For measurements of rank < 3 the returned state is
    the maximum-entropy (minimum Bloch norm) representative and the result
    is flagged non-unique.
    """
    f = np.asarray(frequencies, dtype=float)
    if f.shape != (povm.n_outcomes,):
        raise InvalidInputError("frequency vector does not match the number of outcomes")
    m = povm.m
    b = f - povm.t

    u, s, vt = np.linalg.svd(m, full_matrices=False)
    rank = int(np.sum(s > rank_tol * max(s[0], 1e-300)))
    ub = u.T @ b

    def bloch_for(lam: float) -> np.ndarray:
        gains = np.where(s[:rank] > 0, s[:rank] / (s[:rank] ** 2 + lam), 0.0)
        return vt[:rank].T @ (gains * ub[:rank])

    r = bloch_for(0.0)
    if np.linalg.norm(r) > 1.0:
        hi = 1.0
        while np.linalg.norm(bloch_for(hi)) > 1.0:
            hi *= 10.0
            if hi > 1e12:
                break
        lam = brentq(lambda x: np.linalg.norm(bloch_for(x)) - 1.0, 0.0, hi, xtol=1e-15)
        r = bloch_for(lam)
        r = r / max(np.linalg.norm(r), 1.0)

    rho = bloch_to_density(r)
    if return_diagnostics:
        residual = float(np.linalg.norm(b - m @ r))
        return rho, {"non_unique": rank < 3, "rank": rank, "residual": residual}
    return rho


@dataclass
class StudyResult:
    """Per-state outcome of the tomography comparison study."""

    labels: list[str]
    fidelity_calibrated_vs_reference: np.ndarray
    fidelity_ideal_vs_reference: np.ndarray
    overlap_calibrated: np.ndarray  # F(rho_j, rho_0) under the calibrated POVM
    overlap_reference: np.ndarray
    overlap_ideal: np.ndarray


def tomography_study(
    p_calibrated: Povm,
    p_reference: Povm,
    p_ideal: Povm,
    states: ProbeSet,
    shots: int,
    seed: int = 0,
) -> StudyResult:
    """Reconstruct each state under three POVM hypotheses from shared counts.

    Counts are sampled from the reference device (the best available stand-in
    for the physical measurement). Every hypothesis then inverts the same
    frequencies, so differences between reconstructions expose calibration
    error only. Reported per state: fidelity of the calibrated-POVM and
    ideal-POVM reconstructions against the reference one, plus each
    hypothesis's overlap table ``F(rho_j, rho_0)``.
    """
    from .qubit import state_fidelity

    probs = ProbMatrix(
        np.stack([born_probabilities(p_reference, bloch_to_density(r)) for r in states.states], axis=1),
        list(states.labels),
    )
    counts = sample_counts(probs, shots, seed)
    freqs = counts.to_probabilities().probs

    recon = {"cal": [], "ref": [], "ideal": []}
    for j in range(states.n_states):
        recon["cal"].append(state_tomography(p_calibrated, freqs[:, j]))
        recon["ref"].append(state_tomography(p_reference, freqs[:, j]))
        recon["ideal"].append(state_tomography(p_ideal, freqs[:, j]))

    fid_cal = np.array([state_fidelity(recon["cal"][j], recon["ref"][j]) for j in range(states.n_states)])
    fid_ideal = np.array([state_fidelity(recon["ideal"][j], recon["ref"][j]) for j in range(states.n_states)])
    overlaps = {
        key: np.array([state_fidelity(rhos[j], rhos[0]) for j in range(states.n_states)])
        for key, rhos in recon.items()
    }
    return StudyResult(
        labels=list(states.labels),
        fidelity_calibrated_vs_reference=fid_cal,
        fidelity_ideal_vs_reference=fid_ideal,
        overlap_calibrated=overlaps["cal"],
        overlap_reference=overlaps["ref"],
        overlap_ideal=overlaps["ideal"],
    )
