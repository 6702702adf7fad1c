"""Mahalanobis metric type and its numerics."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, FormatError, InputError, PsdViolation, SingularPrior

FORMAT_VERSION = 1

SYM_RTOL = 1e-12
PSD_TOL = 1e-8
NEG_DIST_CLAMP = -1e-10
PD_RTOL = 1e-12


def _is_symmetric(A):
    return bool(np.all(np.abs(A - A.T) <= SYM_RTOL * (1.0 + np.abs(A))))


class MahalanobisMetric:
    """A symmetric ``d x d`` matrix ``A`` defining ``(x-y)^T A (x-y)``.

    Instances are immutable; the wrapped array is read-only. Symmetry and
    finiteness are checked on construction, positive semidefiniteness is
    checked by :func:`is_psd` (pass ``check_psd=True`` to enforce it here).
    """

    __slots__ = ("_A",)

    def __init__(self, matrix, check_psd=False):
        A = np.array(matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise DimensionMismatch(f"metric must be a square matrix, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise InputError("metric contains NaN or Inf")
        if not _is_symmetric(A):
            raise InputError("metric is not symmetric")
        A.setflags(write=False)
        self._A = A
        if check_psd and not is_psd(self):
            raise PsdViolation("metric is not positive semidefinite")

    @classmethod
    def identity(cls, dim: int) -> "MahalanobisMetric":
        return cls(np.eye(dim))

    @property
    def matrix(self) -> np.ndarray:
        return self._A

    @property
    def dim(self) -> int:
        return self._A.shape[0]

    def __repr__(self):
        return f"MahalanobisMetric(dim={self.dim})"

    def __eq__(self, other):
        if not isinstance(other, MahalanobisMetric):
            return NotImplemented
        return np.array_equal(self._A, other._A)

    __hash__ = None

    def __call__(self, x, y):
        return distance(self, x, y)


def _as_metric(M):
    return M if isinstance(M, MahalanobisMetric) else MahalanobisMetric(M)


def distance(M, x, y) -> float:
    """Squared Mahalanobis distance between ``x`` and ``y``."""
    A = _as_metric(M).matrix
    z = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    if z.shape != (A.shape[0],):
        raise DimensionMismatch(f"vectors of shape {z.shape} for a metric of dim {A.shape[0]}")
    dist = float(z @ A @ z)
    if NEG_DIST_CLAMP <= dist < 0:
        dist = 0.0
    return dist


def pairwise_distances(X, M, Y=None) -> np.ndarray:
    """Matrix of squared distances between rows of ``X`` and rows of ``Y``.

    Row ``i`` is computed as ``((Y - x_i) A) . (Y - x_i)``, the same
    difference-first evaluation :func:`distance` uses. With ``Y`` omitted only
    the upper triangle is evaluated and mirrored, so the result is exactly
    symmetric with an exactly zero diagonal.
    """
    A = _as_metric(M).matrix
    X = np.atleast_2d(np.asarray(X, dtype=float))
    square = Y is None
    Y = X if square else np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != A.shape[0] or Y.shape[1] != A.shape[0]:
        raise DimensionMismatch(f"data dims {X.shape[1]}/{Y.shape[1]} for a metric of dim {A.shape[0]}")
    out = np.zeros((X.shape[0], Y.shape[0]))
    for i, x in enumerate(X):
        lo = i + 1 if square else 0
        Z = Y[lo:] - x
        out[i, lo:] = np.einsum("ij,ij->i", Z @ A, Z)
    if square:
        out += out.T
    out[(out < 0) & (out >= NEG_DIST_CLAMP)] = 0.0
    return out


def logdet_divergence(A, P) -> float:
    """LogDet divergence ``tr(A P^-1) - log det(A P^-1) - d``.

    Evaluated on the congruent matrix ``L^-1 A L^-T`` with ``P = L L^T``,
    which has the same trace and determinant as ``A P^-1`` but is symmetric.
    Returns ``inf`` when ``A`` is singular.
    """
    A, P = _as_metric(A).matrix, _as_metric(P).matrix
    if A.shape != P.shape:
        raise DimensionMismatch(f"A is {A.shape}, P is {P.shape}")
    d = A.shape[0]
    tr = np.trace(P)
    if tr <= 0 or np.linalg.eigvalsh(P)[0] <= PD_RTOL * tr:
        raise SingularPrior("prior metric is not strictly positive definite")
    L = np.linalg.cholesky(P)
    Linv = np.linalg.solve(L, np.eye(d))
    C = Linv @ A @ Linv.T
    C = 0.5 * (C + C.T)
    eig = np.linalg.eigvalsh(C)
    if eig[0] <= 0:
        return math.inf
    div = float(eig.sum() - np.log(eig).sum() - d)
    return max(div, 0.0)


def rank_one_update(M, z, beta) -> MahalanobisMetric:
    """Return ``A + beta (A z)(A z)^T``.

    Requires ``1 + beta z^T A z > 1e-12``, the condition under which the
    update keeps a PSD matrix PSD.
    """
    A = _as_metric(M).matrix
    z = np.asarray(z, dtype=float)
    if z.shape != (A.shape[0],):
        raise DimensionMismatch(f"z of shape {z.shape} for a metric of dim {A.shape[0]}")
    out = A.copy()
    rank_one_update_(out, z, float(beta))
    return MahalanobisMetric(out)


def rank_one_update_(A, z, beta, Az=None):
    """In-place variant of :func:`rank_one_update` on a writable array.

    ``Az`` may be passed when the caller already holds ``A @ z``. The outer
    product is formed as ``u u^T`` before scaling so the update is exactly
    symmetric.
    """
    if Az is None:
        Az = A @ z
    if 1.0 + beta * float(z @ Az) <= 1e-12:
        raise PsdViolation(f"1 + beta z^T A z <= 0 for beta={beta!r}")
    if beta == 0.0:
        return A
    outer = np.multiply.outer(Az, Az)
    outer *= beta
    A += outer
    return A


def min_eigenvalue(M) -> float:
    return float(np.linalg.eigvalsh(_as_metric(M).matrix)[0])


def is_psd(M) -> bool:
    A = M.matrix if isinstance(M, MahalanobisMetric) else np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        return False
    if not np.all(np.isfinite(A)) or not _is_symmetric(A):
        return False
    tol = -PSD_TOL * max(1.0, float(np.trace(A)))
    return bool(np.linalg.eigvalsh(A)[0] >= tol)


def save_metric(M, path, scaling=None):
    """Write a metric as JSON.

    Layout::

        {"format_version": 1, "dim": d, "matrix": [d*d floats, row-major],
         "scaling": null | {"mean": [...], "scale": [...]}}

    Floats are written with Python's shortest round-trip repr, so
    :func:`load_metric` reproduces the matrix bit for bit.
    """
    M = _as_metric(M)
    doc = {
        "format_version": FORMAT_VERSION,
        "dim": M.dim,
        "matrix": [float(v) for v in M.matrix.ravel()],
        "scaling": None if scaling is None else scaling.to_dict(),
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_metric(path, with_scaling=False):
    """Read a file written by :func:`save_metric`.

    Returns the metric, or ``(metric, scaling_or_None)`` when ``with_scaling``.
    """
    from .dataset import ScalingParams

    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict) or doc.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"{path}: missing or unsupported format_version")
    d = doc.get("dim")
    vals = doc.get("matrix")
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise FormatError(f"{path}: bad dim {d!r}")
    if not isinstance(vals, list) or len(vals) != d * d:
        raise FormatError(f"{path}: dim={d} needs {d * d} values, got {len(vals) if isinstance(vals, list) else vals!r}")
    try:
        A = np.array(vals, dtype=float).reshape(d, d)
    except (TypeError, ValueError):
        raise FormatError(f"{path}: non-numeric matrix entries") from None
    if not np.all(np.isfinite(A)):
        raise FormatError(f"{path}: matrix has NaN/Inf entries")
    if not _is_symmetric(A):
        raise FormatError(f"{path}: matrix is not symmetric")
    if not is_psd(A):
        raise FormatError(f"{path}: matrix is not PSD")
    M = MahalanobisMetric(A)
    if not with_scaling:
        return M
    sc = doc.get("scaling")
    if sc is None:
        return M, None
    try:
        scaling = ScalingParams.from_dict(sc)
    except (KeyError, TypeError, ValueError):
        raise FormatError(f"{path}: malformed scaling block") from None
    if scaling.mean.shape != (d,) or scaling.scale.shape != (d,):
        raise FormatError(f"{path}: scaling block does not match dim={d}")
    return M, scaling
