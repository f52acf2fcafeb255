"""Probe ensembles, Born-rule statistics, shot noise and preparation errors.

The stock probe ensemble is the 50-state set used throughout: the two poles
followed by the grid ``r = (sin(l pi/4) cos(k pi/8), sin(l pi/4) sin(k pi/8),
cos(l pi/4))`` for k = 1..6 (outer) and l = 1..8 (inner). The grid
intentionally revisits the poles at l = 4 and l = 8; deduplication is opt-in
so the recorded ensemble stays faithful.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .qubit import SCHEMA, Povm, bloch_to_density

__all__ = [
    "ProbeSet",
    "ProbMatrix",
    "CountsMatrix",
    "ErrorModel",
    "probe_grid",
    "icosahedron_states",
    "circle_states",
    "random_states",
    "born_probabilities",
    "born_matrix",
    "sample_counts",
    "inject_preparation_error",
]


@dataclass
class ProbeSet:
    """Ordered list of Bloch vectors with human-readable labels."""

    states: np.ndarray  # (m, 3)
    labels: list[str]

    @property
    def n_states(self) -> int:
        return self.states.shape[0]

    def subset(self, indices) -> "ProbeSet":
        idx = list(indices)
        return ProbeSet(self.states[idx], [self.labels[i] for i in idx])


@dataclass
class ProbMatrix:
    """Outcome probabilities, one column per probe state."""

    probs: np.ndarray  # (n_outcomes, m_states)
    labels: list[str] | None = None

    @property
    def n_outcomes(self) -> int:
        return self.probs.shape[0]

    @property
    def n_states(self) -> int:
        return self.probs.shape[1]

    def column_subset(self, indices) -> "ProbMatrix":
        idx = list(indices)
        labels = [self.labels[i] for i in idx] if self.labels else None
        return ProbMatrix(self.probs[:, idx], labels)


@dataclass
class CountsMatrix:
    """Integer outcome counts, one column per probe state."""

    counts: np.ndarray  # (n_outcomes, m_states), int
    shots_per_state: int
    labels: list[str] | None = None

    def to_probabilities(self) -> ProbMatrix:
        sums = self.counts.sum(axis=0, keepdims=True).astype(float)
        return ProbMatrix(self.counts / sums, self.labels)


@dataclass(frozen=True)
class ErrorModel:
    """Magnitudes of the systematic preparation-error rotations.

    ``misalignment_deg`` models optic-axis misalignment, ``retardation_frac``
    waveplate retardation error as a fraction of a full wave, and
    ``rotation_jitter_deg`` rotation-stage inaccuracy. Each contributes an
    independent small rotation of every probe's Bloch vector about a random
    axis orthogonal to it; the draw is fixed by ``seed`` so the same model
    yields the same perturbed ensemble across runs (systematic, not
    per-shot, errors).
    """

    misalignment_deg: float = 0.0
    retardation_frac: float = 0.0
    rotation_jitter_deg: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if min(self.misalignment_deg, self.retardation_frac, self.rotation_jitter_deg) < 0:
            raise InvalidInputError("error magnitudes must be >= 0")

    @property
    def is_zero(self) -> bool:
        return self.misalignment_deg == 0 and self.retardation_frac == 0 and self.rotation_jitter_deg == 0


# ---------------------------------------------------------------------------
# probe ensembles
# ---------------------------------------------------------------------------
def probe_grid(*, deduplicate: bool = False) -> ProbeSet:
    """The 50-state ensemble: both poles plus the 6 x 8 spherical grid."""
    states = [np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, -1.0])]
    labels = ["pole+z", "pole-z"]
    for k in range(1, 7):
        for l in range(1, 9):
            theta = l * np.pi / 4.0
            phi = k * np.pi / 8.0
            states.append(
                np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])
            )
            labels.append(f"k{k}l{l}")
    states = np.array(states)
    if deduplicate:
        keep: list[int] = []
        for i, s in enumerate(states):
            if all(np.linalg.norm(s - states[j]) > 1e-12 for j in keep):
                keep.append(i)
        return ProbeSet(states[keep], [labels[i] for i in keep])
    return ProbeSet(states, labels)


def icosahedron_states() -> ProbeSet:
    """12 unit Bloch vectors at icosahedron vertices, poles on the z axis."""
    states = [np.array([0.0, 0.0, 1.0])]
    labels = ["v0"]
    zc = 1.0 / np.sqrt(5.0)
    radius = 2.0 / np.sqrt(5.0)
    for j in range(5):
        a = 2.0 * np.pi * j / 5.0
        states.append(np.array([radius * np.cos(a), radius * np.sin(a), zc]))
        labels.append(f"v{j + 1}")
    for j in range(5):
        a = 2.0 * np.pi * j / 5.0 + np.pi / 5.0
        states.append(np.array([radius * np.cos(a), radius * np.sin(a), -zc]))
        labels.append(f"v{j + 6}")
    states.append(np.array([0.0, 0.0, -1.0]))
    labels.append("v11")
    return ProbeSet(np.array(states), labels)


def circle_states(count: int, *, plane: str = "xz") -> ProbeSet:
    """Pure states evenly spaced on a great circle (for rank-2 devices)."""
    if count < 3:
        raise InvalidInputError("need at least 3 circle states")
    angles = 2.0 * np.pi * np.arange(count) / count
    axes = {"xz": (0, 2), "xy": (0, 1), "yz": (1, 2)}
    if plane not in axes:
        raise InvalidInputError(f"unknown plane {plane!r}")
    i, j = axes[plane]
    states = np.zeros((count, 3))
    states[:, i] = np.sin(angles)
    states[:, j] = np.cos(angles)
    return ProbeSet(states, [f"c{k}" for k in range(count)])


def random_states(count: int, seed: int = 0) -> ProbeSet:
    """Haar-uniform pure states (unit Bloch vectors)."""
    if count < 1:
        raise InvalidInputError("need at least 1 state")
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(count, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return ProbeSet(v, [f"r{k}" for k in range(count)])


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------
def born_probabilities(povm: Povm, rho) -> np.ndarray:
    """Outcome distribution ``p_k = Tr(rho pi_k)``."""
    rho = np.asarray(rho, dtype=complex)
    p = np.array([np.trace(rho @ e.matrix).real for e in povm.elements])
    return p


def born_matrix(povm: Povm, probes: ProbeSet) -> ProbMatrix:
    """Exact probabilities for every probe state, column per state.

    Uses the Bloch form ``p_k = t_k + m_k . r`` (identical to the trace form
    for valid inputs).
    """
    probs = povm.t[:, None] + povm.m @ probes.states.T
    return ProbMatrix(probs, list(probes.labels))


def _column_rng(seed: int, column: int) -> np.random.Generator:
    # per-column derived seed (seed XOR column) keeps column sampling
    # independent of traversal order
    return np.random.default_rng(np.uint64(seed) ^ np.uint64(column + 1))


def sample_counts(pm: ProbMatrix, shots: int, seed: int = 0) -> CountsMatrix:
    """Multinomial counts for each column; deterministic given ``seed``."""
    if shots < 1:
        raise InvalidInputError("shots must be >= 1")
    n, m = pm.probs.shape
    counts = np.empty((n, m), dtype=np.int64)
    for j in range(m):
        p = np.clip(pm.probs[:, j], 0.0, None)
        counts[:, j] = _column_rng(seed, j).multinomial(shots, p / p.sum())
    return CountsMatrix(counts, shots, list(pm.labels) if pm.labels else None)


# ---------------------------------------------------------------------------
# preparation errors
# ---------------------------------------------------------------------------
def _rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = axis / np.linalg.norm(axis)
    k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def _tangent_axis(r: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    while True:
        v = rng.normal(size=3)
        v -= (v @ r) * r
        norm = np.linalg.norm(v)
        if norm > 1e-12:
            return v / norm


# rotations about an axis orthogonal to r displace r by exactly the rotation
# angle, so N(0, sqrt(pi/2) * sigma) gives mean displacement sigma
_HALF_NORMAL_MEAN = np.sqrt(2.0 / np.pi)


def inject_preparation_error(probes: ProbeSet, model: ErrorModel) -> ProbeSet:
    """Systematically perturbed copy of ``probes``; unit norms preserved."""
    if model.is_zero:
        return ProbeSet(probes.states.copy(), list(probes.labels))
    rng = np.random.default_rng(model.seed)
    sigmas = (
        np.deg2rad(model.misalignment_deg),
        2.0 * np.pi * model.retardation_frac,
        np.deg2rad(model.rotation_jitter_deg),
    )
    out = np.empty_like(probes.states)
    for j, r in enumerate(probes.states):
        v = r.copy()
        for sigma in sigmas:
            if sigma == 0.0:
                continue
            axis = _tangent_axis(v, rng)
            angle = rng.normal(scale=sigma / _HALF_NORMAL_MEAN)
            v = _rotation(axis, angle) @ v
        out[j] = v / np.linalg.norm(v)
    return ProbeSet(out, list(probes.labels))


# ---------------------------------------------------------------------------
# file formats: CSV (header outcome_0..outcome_{n-1}, one row per state)
# with a JSON sidecar carrying shots, seed and labels
# ---------------------------------------------------------------------------
def _sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def write_counts_csv(cm: CountsMatrix, path, *, seed: int | None = None) -> None:
    path = Path(path)
    n, m = cm.counts.shape
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"outcome_{k}" for k in range(n)])
        for j in range(m):
            writer.writerow([int(x) for x in cm.counts[:, j]])
    sidecar = {
        "schema": SCHEMA,
        "kind": "counts",
        "shots": int(cm.shots_per_state),
        "seed": seed,
        "labels": cm.labels,
        "n_outcomes": n,
        "n_states": m,
    }
    _sidecar_path(path).write_text(json.dumps(sidecar, indent=2))


def write_probabilities_csv(pm: ProbMatrix, path, *, seed: int | None = None) -> None:
    path = Path(path)
    n, m = pm.probs.shape
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"outcome_{k}" for k in range(n)])
        for j in range(m):
            writer.writerow([repr(float(x)) for x in pm.probs[:, j]])
    sidecar = {
        "schema": SCHEMA,
        "kind": "probabilities",
        "shots": None,
        "seed": seed,
        "labels": pm.labels,
        "n_outcomes": n,
        "n_states": m,
    }
    _sidecar_path(path).write_text(json.dumps(sidecar, indent=2))


def read_statistics_csv(path) -> ProbMatrix | CountsMatrix:
    """Read a counts or probabilities CSV (decided by its sidecar)."""
    path = Path(path)
    sidecar = json.loads(_sidecar_path(path).read_text())
    if sidecar.get("schema") != SCHEMA:
        raise InvalidInputError(f"unsupported schema {sidecar.get('schema')!r}")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    n = len(header)
    if header != [f"outcome_{k}" for k in range(n)]:
        raise InvalidInputError("unexpected CSV header")
    data = np.array([[float(x) for x in row] for row in body]).T  # (n, m)
    labels = sidecar.get("labels")
    if sidecar["kind"] == "counts":
        return CountsMatrix(data.astype(np.int64), int(sidecar["shots"]), labels)
    return ProbMatrix(data, labels)


def write_probes_json(probes: ProbeSet, path) -> None:
    doc = {
        "schema": SCHEMA,
        "kind": "probe_set",
        "labels": list(probes.labels),
        "bloch": [[float(x) for x in row] for row in probes.states],
    }
    Path(path).write_text(json.dumps(doc, indent=2))


def read_probes_json(path) -> ProbeSet:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema") != SCHEMA:
        raise InvalidInputError(f"unsupported schema {doc.get('schema')!r}")
    states = np.array(doc["bloch"], dtype=float)
    for r in states:
        bloch_to_density(r)  # validates |r| <= 1
    return ProbeSet(states, [str(x) for x in doc["labels"]])
