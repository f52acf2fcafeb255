"""Numerical primitives shared by the estimation pipelines.

Thin, contract-checked wrappers around numpy/scipy: singular value
decomposition, Moore-Penrose pseudoinverse with explicit rank control, the
square root of a real symmetric PSD matrix, convex hulls in 1-3 dimensions
(with facet equations, so callers can classify points as boundary/interior),
and a seeded multistart constrained minimizer.

All functions are pure; the minimizer is deterministic given its seed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize as _scipy_minimize
from scipy.spatial import ConvexHull as _QhullConvexHull
from scipy.spatial import QhullError

from .errors import DegenerateHullError, InfeasibleError, InvalidInputError, NotPsdError

__all__ = [
    "OptimizerConfig",
    "FitDiagnostics",
    "HullResult",
    "svd",
    "pinv",
    "psd_sqrt",
    "convex_hull",
    "minimize_constrained",
]


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings for the multistart constrained minimizer."""

    restarts: int = 16
    max_iterations: int = 500
    cost_tolerance: float = 1e-14
    constraint_penalty_weight: float = 1e6
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise InvalidInputError("restarts must be >= 1")
        if self.cost_tolerance <= 0:
            raise InvalidInputError("cost_tolerance must be > 0")


@dataclass
class FitDiagnostics:
    """Trace of a multistart minimization."""

    restarts_run: int = 0
    best_restart_index: int = -1
    final_cost: float = np.inf
    boundary_size: int = 0
    converged: bool = False
    constraint_violation: float = np.inf
    flags: tuple[str, ...] = ()


@dataclass
class HullResult:
    """Convex hull of a point cloud in 1-3 dimensions.

    ``equations`` holds one row per facet, ``[normal..., offset]`` with
    ``normal @ x + offset <= 0`` for interior points, matching Qhull's
    convention (and emulated for the 1-d case).
    """

    vertex_indices: np.ndarray
    dimension: int
    equations: np.ndarray = field(repr=False, default=None)


def _check_finite(a: np.ndarray, name: str = "input") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        raise InvalidInputError(f"{name} is empty")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return a


def svd(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD ``a = u @ diag(s) @ v.T`` with descending singular values.

    Returns ``(u, s, v)``; both ``u`` and ``v`` have orthonormal columns.
    """
    a = _check_finite(a, "matrix")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    return u, s, vt.T


def pinv(a: np.ndarray, rank_tolerance: float = 1e-12) -> np.ndarray:
    """Moore-Penrose pseudoinverse.

    Singular values below ``rank_tolerance * s_max`` are treated as zero,
    which fixes the numerical rank instead of leaving it to heuristics.
    """
    u, s, v = svd(a)
    if s[0] == 0.0:
        return np.zeros((a.shape[1], a.shape[0]))
    inv = np.where(s > rank_tolerance * s[0], 1.0 / np.where(s > 0, s, 1.0), 0.0)
    return (v * inv) @ u.T


def psd_sqrt(q: np.ndarray, *, symmetry_tol: float = 1e-9, negative_tol: float = 1e-6) -> np.ndarray:
    """Symmetric PSD square root of a real symmetric PSD matrix.

    Eigenvalues in ``[-negative_tol, 0)`` are clipped to zero; anything more
    negative raises :class:`NotPsdError`.
    """
    q = _check_finite(q, "matrix")
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise InvalidInputError("psd_sqrt expects a square matrix")
    if np.max(np.abs(q - q.T)) > symmetry_tol:
        raise InvalidInputError("matrix is not symmetric")
    w, vecs = np.linalg.eigh(0.5 * (q + q.T))
    if w.min() < -negative_tol:
        raise NotPsdError(f"matrix has eigenvalue {w.min():.3e} < -{negative_tol:.0e}")
    w = np.clip(w, 0.0, None)
    return (vecs * np.sqrt(w)) @ vecs.T


def _affine_dimension(points: np.ndarray, tol: float) -> int:
    """Number of directions in which the cloud extends beyond ``tol``."""
    centered = points - points.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, np.sqrt(points.shape[0]))))


def convex_hull(points: np.ndarray, *, degeneracy_tol: float = 1e-9) -> HullResult:
    """Convex hull of ``points`` (shape ``(m, r)``, ``r`` in 1..3).

    Uses Qhull's incremental quickhull for r >= 2 and min/max for r = 1.
    Deterministic given input order; vertex indices are duplicate-free.
    Raises :class:`DegenerateHullError` when the cloud is flat (affine
    dimension below r), instead of returning a collapsed hull -- reducing
    the dimension is the caller's job.
    """
    points = _check_finite(points, "points")
    if points.ndim == 1:
        points = points[:, None]
    m, r = points.shape
    if r not in (1, 2, 3):
        raise InvalidInputError(f"convex_hull supports 1-3 dimensions, got {r}")
    if m < r + 1:
        raise InvalidInputError(f"need at least {r + 1} points for a {r}-dimensional hull")
    if _affine_dimension(points, degeneracy_tol) < r:
        raise DegenerateHullError(
            f"point cloud is confined to an affine subspace of dimension < {r}; "
            "reduce the working dimension and retry"
        )
    if r == 1:
        x = points[:, 0]
        lo, hi = int(np.argmin(x)), int(np.argmax(x))
        equations = np.array([[1.0, -x[hi]], [-1.0, x[lo]]])
        return HullResult(np.array([lo, hi]), 1, equations)
    try:
        hull = _QhullConvexHull(points)
    except QhullError as exc:  # near-degenerate input that slipped past the pre-check
        raise DegenerateHullError(f"hull construction failed: {exc}") from exc
    return HullResult(np.array(sorted(set(int(i) for i in hull.vertices))), r, hull.equations)


def hull_boundary_mask(points: np.ndarray, hull: HullResult, tol: float = 1e-9) -> np.ndarray:
    """Boolean mask of points lying on the hull boundary within ``tol``.

    A point is boundary if it is within ``tol`` of some supporting facet.
    Duplicates of a vertex therefore all count as boundary points.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    normals = hull.equations[:, :-1]
    offsets = hull.equations[:, -1]
    signed = normals @ points.T + offsets[:, None]  # (facets, m); <= 0 inside
    return signed.max(axis=0) >= -tol


def _as_constraint_list(funcs, kind: str) -> list[dict]:
    return [{"type": kind, "fun": f} for f in funcs]


def _violation(x, inequality_constraints, equality_constraints) -> float:
    v = 0.0
    for f in inequality_constraints:
        g = np.atleast_1d(np.asarray(f(x), dtype=float))
        v = max(v, float(np.max(-g, initial=0.0)))
    for f in equality_constraints:
        h = np.atleast_1d(np.asarray(f(x), dtype=float))
        v = max(v, float(np.max(np.abs(h), initial=0.0)))
    return v


def _default_starts(x0: np.ndarray, n_extra: int, rng: np.random.Generator) -> list[np.ndarray]:
    scale = np.maximum(1.0, np.abs(x0))
    out = []
    for _ in range(n_extra):
        factor = rng.uniform(0.5, 2.0, size=x0.shape)
        shift = rng.uniform(-1.0, 1.0, size=x0.shape) * scale
        out.append(x0 * factor + shift)
    return out


def minimize_constrained(
    cost,
    x0: np.ndarray,
    inequality_constraints=(),
    equality_constraints=(),
    config: OptimizerConfig | None = None,
    *,
    bounds=None,
    starts=None,
    feasibility_tol: float = 1e-8,
) -> tuple[np.ndarray, FitDiagnostics]:
    """Best feasible local minimum over seeded multistart SLSQP runs.

    ``inequality_constraints`` are functions required >= 0 at the solution,
    ``equality_constraints`` required = 0 (each may return a scalar or a
    vector). Restart 0 starts from ``x0``; later restarts perturb it
    multiplicatively in [0.5, 2] and additively within the coordinate scale,
    unless explicit ``starts`` are supplied. A restart whose SLSQP result is
    infeasible gets one penalty-weighted polish before being discarded.

    Ties in cost (within 1e-12) keep the lower restart index, so the result
    is reproducible given the seed.
    """
    config = config or OptimizerConfig()
    x0 = np.asarray(x0, dtype=float)
    if not np.isfinite(cost(x0)):
        raise InvalidInputError("cost is not finite at the base start point")

    rng = np.random.default_rng(config.seed)
    if starts is None:
        all_starts = [x0] + _default_starts(x0, config.restarts - 1, rng)
    else:
        all_starts = [np.asarray(s, dtype=float) for s in starts[: config.restarts]]
        while len(all_starts) < config.restarts:
            all_starts.extend(_default_starts(x0, config.restarts - len(all_starts), rng))

    cons = _as_constraint_list(inequality_constraints, "ineq") + _as_constraint_list(
        equality_constraints, "eq"
    )
    opts = {"maxiter": config.max_iterations, "ftol": config.cost_tolerance}

    best_x = None
    best_cost = np.inf
    best_index = -1
    best_viol = np.inf
    diag = FitDiagnostics(restarts_run=len(all_starts))
    with warnings.catch_warnings():
        # SLSQP emits a RuntimeWarning when a trial step leaves the bounds
        # before being clipped; the clipped iterate is what we evaluate
        warnings.filterwarnings("ignore", message="Values in x were outside bounds", category=RuntimeWarning)
        for i, xi in enumerate(all_starts):
            if not np.isfinite(cost(xi)):
                continue
            res = _scipy_minimize(cost, xi, method="SLSQP", bounds=bounds, constraints=cons, options=opts)
            x = res.x
            viol = _violation(x, inequality_constraints, equality_constraints)
            if viol > feasibility_tol and cons:
                x = _penalty_polish(cost, x, inequality_constraints, equality_constraints, config)
                res = _scipy_minimize(cost, x, method="SLSQP", bounds=bounds, constraints=cons, options=opts)
                x = res.x
                viol = _violation(x, inequality_constraints, equality_constraints)
            if viol > feasibility_tol:
                continue
            c = float(cost(x))
            if c < best_cost - 1e-12:
                best_x, best_cost, best_index, best_viol = x, c, i, viol

    if best_x is None:
        diag.flags = ("infeasible",)
        raise InfeasibleError(
            f"no feasible point found across {len(all_starts)} restarts "
            f"(tolerance {feasibility_tol:.0e})",
            diagnostics=diag,
        )
    diag.best_restart_index = best_index
    diag.final_cost = best_cost
    diag.constraint_violation = best_viol
    diag.converged = True
    return best_x, diag


def _penalty_polish(cost, x, inequality_constraints, equality_constraints, config: OptimizerConfig):
    """Quadratic-penalty descent used to pull an infeasible iterate back."""
    w = config.constraint_penalty_weight

    def penalized(z):
        v = cost(z)
        for f in inequality_constraints:
            g = np.atleast_1d(np.asarray(f(z), dtype=float))
            v += w * float(np.sum(np.minimum(g, 0.0) ** 2))
        for f in equality_constraints:
            h = np.atleast_1d(np.asarray(f(z), dtype=float))
            v += w * float(np.sum(h**2))
        return v

    res = _scipy_minimize(penalized, x, method="BFGS", options={"maxiter": config.max_iterations})
    return res.x
