"""Quantitative comparisons: membership values, residuals, fidelities.

The membership value ``L = (p - t)^T Q^+ (p - t)`` is 1 exactly when the
distribution sits on the boundary of the response range (pure input state),
below 1 inside, above 1 only through noise or a wrong (Q, t). Its companion
``|(I - Q Q^+)(p - t)|`` measures how far a distribution leaves the affine
subspace the range lives in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, UndefinedFidelityError
from .linalg import psd_sqrt
from .qubit import QTRep

__all__ = [
    "ViolationStats",
    "l_value",
    "affine_residual",
    "fidelity_q",
    "fidelity_t",
    "violation_stats",
]


def _q_eig(qt: QTRep) -> tuple[np.ndarray, np.ndarray, int]:
    w, v = np.linalg.eigh(0.5 * (qt.q + qt.q.T))
    order = np.argsort(w)[::-1]
    rank = qt.rank if qt.rank else min(3, int(np.sum(w > 1e-9 * max(w.max(), 1e-300))))
    return w[order], v[:, order], rank


def l_value(p, qt: QTRep) -> float:
    """Membership value of a distribution in the (Q, t) ellipsoid.

    The pseudoinverse keeps exactly ``qt.rank`` eigendirections, so the value
    is evaluated at the rank the estimate was fitted with.
    """
    p = np.asarray(p, dtype=float)
    d = p - qt.t
    w, v, rank = _q_eig(qt)
    coeffs = v[:, :rank].T @ d
    return float(np.sum(coeffs**2 / w[:rank]))


def affine_residual(p, qt: QTRep) -> float:
    """Distance of ``p - t`` from the affine subspace spanned by Q."""
    p = np.asarray(p, dtype=float)
    d = p - qt.t
    _, v, rank = _q_eig(qt)
    return float(np.linalg.norm(d - v[:, :rank] @ (v[:, :rank].T @ d)))


def fidelity_q(a: QTRep, b: QTRep) -> float:
    """Overlap-matrix fidelity
    ``[Tr sqrt(sqrt(Qa) Qb sqrt(Qa))]^2 / (Tr Qa Tr Qb)``; 1 iff proportional."""
    tra, trb = float(np.trace(a.q)), float(np.trace(b.q))
    if tra <= 1e-14 or trb <= 1e-14:
        raise UndefinedFidelityError("fidelity undefined for zero-trace Q")
    # nuclear norm of sqrt(Qa) sqrt(Qb) == Tr sqrt(sqrt(Qa) Qb sqrt(Qa)),
    # better conditioned for the rank-deficient Q of a qubit POVM
    overlap = float(np.linalg.svd(psd_sqrt(a.q) @ psd_sqrt(b.q), compute_uv=False).sum())
    f = overlap**2 / (tra * trb)
    return min(max(f, 0.0), 1.0)


def fidelity_t(a: QTRep, b: QTRep) -> float:
    """Weight-vector fidelity ``(sum_k sqrt(ta_k tb_k))^2`` (Bhattacharyya-style)."""
    ta = np.asarray(a.t, dtype=float)
    tb = np.asarray(b.t, dtype=float)
    if ta.min() < -1e-12 or tb.min() < -1e-12:
        raise InvalidInputError("weight vectors must be nonnegative")
    f = float(np.sum(np.sqrt(np.clip(ta, 0.0, None) * np.clip(tb, 0.0, None))) ** 2)
    return min(max(f, 0.0), 1.0)


@dataclass
class ViolationStats:
    """Summary of membership values over states and repeated runs."""

    l_mean: np.ndarray  # per-state mean over runs
    l_std: np.ndarray  # per-state std over runs
    frac_above_one: float  # fraction of all samples with L > 1
    frac_above_three_sigma: float  # fraction of states with mean > 1 + 3 sigma_hat
    mean_excess: float  # mean over all samples of max(L - 1, 0)


def violation_stats(l_samples, *, bootstrap: int = 1000, seed: int = 0) -> ViolationStats:
    """Statistics of membership values.

    ``l_samples`` has shape (states, runs); a 1-d input is treated as one run
    per state. ``sigma_hat`` for each state is a bootstrap estimate of the
    standard error of its mean over runs (seeded, so deterministic).
    """
    samples = np.atleast_2d(np.asarray(l_samples, dtype=float))
    if samples.ndim != 2 or samples.size == 0:
        raise InvalidInputError("expected a nonempty (states, runs) array")
    if samples.shape[0] == 1 and np.asarray(l_samples).ndim == 1:
        samples = samples.T

    n_states, n_runs = samples.shape
    l_mean = samples.mean(axis=1)
    l_std = samples.std(axis=1, ddof=1) if n_runs > 1 else np.zeros(n_states)

    rng = np.random.default_rng(seed)
    if n_runs > 1:
        idx = rng.integers(0, n_runs, size=(bootstrap, n_runs))
        sigma_hat = samples[:, idx].mean(axis=2).std(axis=1, ddof=1)
    else:
        sigma_hat = np.zeros(n_states)

    frac_above_one = float(np.mean(samples > 1.0))
    frac_above_three_sigma = float(np.mean(l_mean > 1.0 + 3.0 * sigma_hat))
    mean_excess = float(np.mean(np.maximum(samples - 1.0, 0.0)))
    return ViolationStats(
        l_mean=l_mean,
        l_std=l_std,
        frac_above_one=frac_above_one,
        frac_above_three_sigma=frac_above_three_sigma,
        mean_excess=mean_excess,
    )
