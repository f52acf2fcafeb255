"""Detector self-characterization: recover (Q, t) from outcome statistics.

The response range of a qubit POVM -- the set of outcome distributions it
can produce -- is an ellipsoid centered at t, ``(p - t)^T Q^+ (p - t) <= 1``,
lying in an affine subspace of dimension rank(Q) <= 3. Pure input states map
onto its boundary. The pipeline therefore needs no knowledge of the probe
states:

  1. center:   subtract the mean column of the probability matrix;
  2. reduce:   SVD the centered data and keep the leading directions
               (principal components robust to shot noise);
  3. boundary: take the data points on the convex hull of the reduced cloud;
  4. fit:      least-squares ellipsoid through the boundary points, subject
               to the lifted physicality constraints t_k^2 - Q[k,k] >= 0;
  5. lift:     map center/shape back to the full outcome space as (Q, t).

The fit parameterizes the ellipsoid by its center c and a lower-triangular
factor L with positive diagonal (shape = L L^T), which keeps the shape PSD
of the detected rank and removes gauge redundancy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, FitError, InvalidInputError, LiftError, PovmScopeError
from .linalg import FitDiagnostics, OptimizerConfig, convex_hull, hull_boundary_mask, minimize_constrained
from .qubit import QTRep
from .simulate import CountsMatrix, ProbMatrix

__all__ = [
    "ReducedData",
    "EllipsoidFit",
    "center_data",
    "reduce_data",
    "boundary",
    "fit_ellipsoid",
    "lift_to_qt",
    "qdsc_run",
]

# free parameters of an ellipsoid in r dimensions: center (r) + triangular factor
_DOF = {1: 2, 2: 5, 3: 9}


@dataclass
class ReducedData:
    """Centered data projected onto its leading principal directions."""

    u_r: np.ndarray  # (n, r), orthonormal columns
    s: np.ndarray  # (r,) retained singular values
    tilde_a: np.ndarray  # (r, m) reduced data
    mean_p: np.ndarray  # (n,)
    detected_rank: int
    all_singular_values: np.ndarray = None

    @property
    def points(self) -> np.ndarray:
        """Reduced data as an (m, r) point cloud."""
        return self.tilde_a.T


@dataclass
class EllipsoidFit:
    """Center-form ellipsoid in reduced coordinates."""

    center: np.ndarray  # (r,)
    shape_l: np.ndarray  # (r, r) lower-triangular, positive diagonal
    cost: float
    diagnostics: FitDiagnostics


def _as_prob_array(data) -> np.ndarray:
    if isinstance(data, CountsMatrix):
        data = data.to_probabilities()
    if isinstance(data, ProbMatrix):
        return np.asarray(data.probs, dtype=float)
    return np.asarray(data, dtype=float)


def center_data(data) -> tuple[np.ndarray, np.ndarray]:
    """Subtract the per-outcome mean over probe states.

    Returns ``(A, mean_p)`` with ``A[:, j] = p^(j) - mean_p``; the columns of
    A sum to zero, absorbing the normalization of each distribution.
    """
    p = _as_prob_array(data)
    if p.ndim != 2 or p.shape[1] < 2:
        raise InvalidInputError("need a matrix with at least 2 probe columns")
    mean_p = p.mean(axis=1)
    return p - mean_p[:, None], mean_p


def reduce_data(a: np.ndarray, rel_threshold: float | str = 0.05, mean_p: np.ndarray | None = None) -> ReducedData:
    """Keep the singular directions carrying signal, at most three.

    ``rel_threshold`` is the cutoff on ``s_i / s_1``; pass ``"auto"`` to place
    the cutoff at the largest relative gap in the singular-value sequence.
    Directions below the cutoff are shot-noise floor, of order 1/sqrt(shots).
    """
    a = np.asarray(a, dtype=float)
    if mean_p is None:
        mean_p = np.zeros(a.shape[0])
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s[0] <= 0.0 or not np.isfinite(s[0]):
        raise DegenerateDataError("all probe columns are identical; nothing to reduce")
    if rel_threshold == "auto":
        rank = _rank_by_gap(s)
    else:
        rank = int(np.sum(s > float(rel_threshold) * s[0]))
    rank = min(rank, 3)
    if rank == 0:
        raise DegenerateDataError("no singular value above threshold")
    u_r = u[:, :rank]
    return ReducedData(
        u_r=u_r,
        s=s[:rank].copy(),
        tilde_a=u_r.T @ a,
        mean_p=np.asarray(mean_p, dtype=float),
        detected_rank=rank,
        all_singular_values=s.copy(),
    )


def _rank_by_gap(s: np.ndarray) -> int:
    """Rank cut at the largest relative gap among the first few ratios."""
    ratios = s / s[0]
    upto = min(len(s) - 1, 3)
    if upto < 1:
        return 1
    gaps = [ratios[i] / max(ratios[i + 1], 1e-300) for i in range(upto)]
    return int(np.argmax(gaps)) + 1


def boundary(rd: ReducedData, tol: float = 1e-9) -> np.ndarray:
    """Indices of the reduced points lying on their convex hull's boundary.

    Includes every point within ``tol`` of a supporting facet, so duplicated
    extreme points all make it into the boundary set; interior points do not.
    """
    pts = rd.points
    hull = convex_hull(pts)
    mask = hull_boundary_mask(pts, hull, tol)
    return np.where(mask)[0]


# ---------------------------------------------------------------------------
# ellipsoid fitting
# ---------------------------------------------------------------------------
def _tril_indices(r: int):
    return [(i, j) for i in range(r) for j in range(i + 1)]


def _pack(center: np.ndarray, l: np.ndarray) -> np.ndarray:
    r = len(center)
    return np.concatenate([center, [l[i, j] for i, j in _tril_indices(r)]])


def _unpack(theta: np.ndarray, r: int) -> tuple[np.ndarray, np.ndarray]:
    center = theta[:r]
    l = np.zeros((r, r))
    for idx, (i, j) in enumerate(_tril_indices(r)):
        l[i, j] = theta[r + idx]
    return center, l


def _membership(points: np.ndarray, center: np.ndarray, l: np.ndarray) -> np.ndarray:
    """Ellipsoid membership value (1 on the surface) for each point."""
    y = np.linalg.solve(l, (points - center).T)
    return (y**2).sum(axis=0)


def _algebraic_seed(points: np.ndarray) -> tuple[np.ndarray, np.ndarray] | None:
    """Direct least-squares quadric through the points, in center form.

    Solves the homogeneous LLS quadric fit (smallest singular vector of the
    monomial design matrix) and converts to (center, Cholesky factor). Exact
    for noise-free points and a near-perfect warm start otherwise. Returns
    None when the fitted quadric is not an ellipsoid.
    """
    r = points.shape[1]
    if r == 3:
        x, y, z = points.T
        design = np.stack(
            [x * x, y * y, z * z, 2 * x * y, 2 * x * z, 2 * y * z, 2 * x, 2 * y, 2 * z, np.ones(len(x))],
            axis=1,
        )
    elif r == 2:
        x, y = points.T
        design = np.stack([x * x, y * y, 2 * x * y, 2 * x, 2 * y, np.ones(len(x))], axis=1)
    else:
        lo, hi = points[:, 0].min(), points[:, 0].max()
        if hi - lo < 1e-14:
            return None
        return np.array([(lo + hi) / 2.0]), np.array([[(hi - lo) / 2.0]])
    if design.shape[0] < design.shape[1] - 1:
        return None
    _, _, vt = np.linalg.svd(design, full_matrices=False)
    theta = vt[-1]
    if r == 3:
        quad = np.array(
            [[theta[0], theta[3], theta[4]], [theta[3], theta[1], theta[5]], [theta[4], theta[5], theta[2]]]
        )
        lin, const = 2.0 * theta[6:9], theta[9]
    else:
        quad = np.array([[theta[0], theta[2]], [theta[2], theta[1]]])
        lin, const = 2.0 * theta[3:5], theta[5]
    if np.trace(quad) < 0:
        quad, lin, const = -quad, -lin, -const
    if np.linalg.eigvalsh(quad).min() <= 0:
        return None
    center = -0.5 * np.linalg.solve(quad, lin)
    scale = center @ quad @ center - const
    if scale <= 0:
        return None
    shape = quad / scale  # (x-c)^T shape (x-c) = 1 on the quadric
    try:
        l = np.linalg.cholesky(np.linalg.inv(shape))
    except np.linalg.LinAlgError:
        return None
    return center, l


def _moment_seed(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Moment-matched start: for points on an ellipsoid surface the covariance
    is shape/3, so 3x the covariance recovers the shape."""
    center = points.mean(axis=0)
    cov = np.atleast_2d(np.cov(points.T, bias=True))
    r = points.shape[1]
    shape = 3.0 * cov + 1e-12 * np.eye(r)
    return center, np.linalg.cholesky(shape)


def fit_ellipsoid(rd: ReducedData, boundary_indices: np.ndarray, config: OptimizerConfig | None = None) -> EllipsoidFit:
    """Constrained least-squares ellipsoid through the boundary points.

    Minimizes ``sum_j [1 - (x_j - c)^T (L L^T)^-1 (x_j - c)]^2`` over the
    boundary set, subject to the lifted physicality constraints
    ``t_k^2 - Q[k,k] >= 0`` with ``t = mean_p + U_r c`` and ``Q = (U_r L)(U_r L)^T``.
    Multistart: an algebraic quadric seed, a moment-matched seed, and
    perturbed copies of the latter.
    """
    config = config or OptimizerConfig()
    r = rd.detected_rank
    pts = rd.points[np.asarray(boundary_indices, dtype=int)]
    if len(pts) < _DOF[r]:
        raise FitError(
            f"{len(pts)} boundary points cannot determine the {_DOF[r]} parameters "
            f"of a rank-{r} ellipsoid"
        )

    u_r, mean_p = rd.u_r, rd.mean_p
    diag_slots = [r + idx for idx, (i, j) in enumerate(_tril_indices(r)) if i == j]

    def cost(theta: np.ndarray) -> float:
        center, l = _unpack(theta, r)
        if np.min(np.abs(np.diag(l))) < 1e-12:
            return 1e9
        return float(np.sum((1.0 - _membership(pts, center, l)) ** 2))

    def physicality(theta: np.ndarray) -> np.ndarray:
        center, l = _unpack(theta, r)
        t = mean_p + u_r @ center
        rows = u_r @ l
        return t**2 - (rows**2).sum(axis=1)

    seeds = []
    alg = _algebraic_seed(pts)
    if alg is not None:
        seeds.append(_pack(*alg))
    mom = _moment_seed(pts)
    seeds.append(_pack(*mom))
    rng = np.random.default_rng(config.seed)
    spread = float(pts.std(axis=0).mean())
    base = _pack(*mom)
    while len(seeds) < config.restarts:
        factor = rng.uniform(0.5, 2.0)
        jitter = rng.uniform(-1.0, 1.0, size=base.shape) * 0.1 * max(spread, 1e-6)
        cand = base * factor + jitter
        cand[diag_slots] = np.abs(cand[diag_slots]) + 1e-9
        seeds.append(cand)

    bounds = [(None, None)] * (r + len(_tril_indices(r)))
    for slot in diag_slots:
        bounds[slot] = (1e-10, None)

    try:
        theta, diag = minimize_constrained(
            cost,
            seeds[0],
            inequality_constraints=[physicality],
            config=config,
            bounds=bounds,
            starts=seeds,
        )
    except PovmScopeError as exc:
        raise FitError(f"ellipsoid fit failed: {exc}", diagnostics=getattr(exc, "diagnostics", None)) from exc
    diag.boundary_size = len(pts)
    center, l = _unpack(theta, r)
    # canonical sign: positive diagonal (bounds already enforce this)
    return EllipsoidFit(center=center, shape_l=l, cost=diag.final_cost, diagnostics=diag)


def lift_to_qt(fit: EllipsoidFit, rd: ReducedData, *, physicality_tol: float = 1e-6) -> QTRep:
    """Map the reduced-space ellipsoid back to the outcome space.

    ``t = mean_p + U_r c`` and ``Q = (U_r L)(U_r L)^T``; the weight sum and the
    vanishing row sums of Q are inherited from the centering (the retained
    directions are orthogonal to the all-ones vector). A sub-tolerance
    physicality violation is repaired by a global shrink of L; anything
    larger raises :class:`LiftError`.
    """
    t = rd.mean_p + rd.u_r @ fit.center
    m = rd.u_r @ fit.shape_l
    qdiag = (m**2).sum(axis=1)
    slack = t**2 - qdiag
    if slack.min() < -physicality_tol:
        raise LiftError(
            f"fitted ellipsoid violates element positivity by {-slack.min():.3e} "
            f"(tolerance {physicality_tol:.0e})"
        )
    if slack.min() < 0.0:
        bad = qdiag > t**2
        shrink = np.sqrt(np.min(t[bad] ** 2 / qdiag[bad])) * (1.0 - 1e-15)
        m = m * shrink
    q = m @ m.T
    return QTRep(q=q, t=t, rank=rd.detected_rank)


def qdsc_run(
    data,
    config: OptimizerConfig | None = None,
    *,
    rel_threshold: float | str = 0.05,
    boundary_tol: float = 1e-9,
) -> tuple[QTRep, FitDiagnostics]:
    """Full self-characterization of one data set.

    Accepts a :class:`ProbMatrix`, a :class:`CountsMatrix` (normalized
    internally) or a plain probability array. Deterministic given the
    optimizer seed. Errors from a stage are re-raised with the stage recorded
    on the exception.
    """
    p = _as_prob_array(data)
    if p.shape[1] < _DOF[3]:
        raise InvalidInputError(f"need at least {_DOF[3]} probe states, got {p.shape[1]}")

    def staged(stage, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except PovmScopeError as exc:
            exc.stage = stage
            raise

    a, mean_p = staged("center", center_data, p)
    rd = staged("reduce", reduce_data, a, rel_threshold, mean_p)
    b = staged("boundary", boundary, rd, boundary_tol)
    fit = staged("fit", fit_ellipsoid, rd, b, config)
    qt = staged("lift", lift_to_qt, fit, rd)
    return qt, fit.diagnostics
