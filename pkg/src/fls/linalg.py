"""Dense linear-algebra and clustering primitives.

All functions are pure: nothing mutates its inputs, randomness enters only
through explicit seeds, so everything here is safe to call concurrently.
Matrices are plain float ndarrays with finite entries; constructors and
entry points reject NaN/Inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DegenerateInput, InvalidParam, RankDeficient
from .rng import make_rng, split


def check_finite(a, name: str = "array") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise InvalidParam(f"{name} contains NaN or Inf entries")
    return a


def flip_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive.

    This is the sign convention used for every singular/eigen vector the
    package returns; it makes results comparable across code paths.
    """
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


@dataclass(frozen=True)
class AffineFlat:
    """An l-dimensional affine flat {base + basis @ u} in R^d.

    basis has orthonormal columns (checked to 1e-10 at construction).
    Linear subspaces are represented with base = 0.
    """

    base: np.ndarray
    basis: np.ndarray

    def __post_init__(self):
        base = check_finite(self.base, "base")
        basis = check_finite(self.basis, "basis")
        if base.ndim != 1 or basis.ndim != 2 or basis.shape[0] != base.shape[0]:
            raise InvalidParam(
                f"flat shapes disagree: base {base.shape}, basis {basis.shape}"
            )
        if basis.shape[1] < 1 or basis.shape[1] > basis.shape[0]:
            raise InvalidParam(f"flat dimension {basis.shape[1]} out of range")
        gram = basis.T @ basis
        if np.max(np.abs(gram - np.eye(basis.shape[1]))) > 1e-10:
            raise InvalidParam("basis columns are not orthonormal")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "basis", basis)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def ambient(self) -> int:
        return self.basis.shape[0]


@dataclass(frozen=True)
class SvdResult:
    """Top-K singular triples of a D x n matrix.

    left_vectors is D x K, right_vectors is n x K, singular_values is
    descending.  Right vectors carry the flip_signs convention.
    """

    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray


def pca_spectrum(points: np.ndarray):
    """Centroid, scatter eigenvalues (descending) and eigenvectors.

    Eigenvalues are those of the scatter matrix sum((x-c)(x-c)^T), so the
    trailing d-l of them equal the total squared residual of the best
    l-flat exactly.  Computed through a thin SVD of the centered data,
    not an eigendecomposition of the scatter, for accuracy.  The
    eigenvalue vector is padded with zeros to length d; the eigenvector
    matrix holds the leading min(m, d) directions as columns.
    """
    pts = check_finite(points, "points")
    if pts.ndim != 2:
        raise InvalidParam("points must be a 2-D array")
    m, d = pts.shape
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    eigvals = np.zeros(d)
    eigvals[: svals.shape[0]] = svals**2
    return centroid, eigvals, flip_signs(vt.T)


def moment_spectrum(points: np.ndarray):
    """Uncentered analogue of pca_spectrum: eigenpairs of sum(x x^T).

    The trailing d-l eigenvalues equal the squared residual of the best
    l-dimensional *linear* subspace (through the origin), which is the
    right fit target when the data model is a union of linear subspaces,
    e.g. sphere-projected points.
    """
    pts = check_finite(points, "points")
    if pts.ndim != 2:
        raise InvalidParam("points must be a 2-D array")
    m, d = pts.shape
    svals, vt = np.linalg.svd(pts, full_matrices=False)[1:]
    eigvals = np.zeros(d)
    eigvals[: svals.shape[0]] = svals**2
    return eigvals, flip_signs(vt.T)


def pca_fit(points: np.ndarray, flat_dim: int) -> AffineFlat:
    """Best-fit affine flat of dimension ``flat_dim`` in least squares.

    Parameters
    ----------
    points : (m, d) array, m >= flat_dim + 1
    flat_dim : int, 1 <= flat_dim <= d

    Returns the flat through the centroid spanned by the top principal
    directions.  Raises DegenerateInput when there are too few points.
    """
    pts = check_finite(points, "points")
    if pts.ndim != 2:
        raise InvalidParam("points must be a 2-D array")
    m, d = pts.shape
    if not 1 <= flat_dim <= d:
        raise InvalidParam(f"flat_dim={flat_dim} not in [1, {d}]")
    if m < flat_dim + 1:
        raise DegenerateInput(f"need at least {flat_dim + 1} points, got {m}")
    centroid, _, eigvecs = pca_spectrum(pts)
    return AffineFlat(base=centroid, basis=eigvecs[:, :flat_dim])


def _package_svd(left, svals, right):
    # shared rank guard + sign convention
    if svals[0] <= 0.0 or svals[-1] < 1e-12 * svals[0]:
        raise RankDeficient(
            f"singular value {svals[-1]:.3e} below 1e-12 * {svals[0]:.3e}; "
            "request fewer vectors"
        )
    idx = np.argmax(np.abs(right), axis=0)
    signs = np.sign(right[idx, np.arange(right.shape[1])])
    signs[signs == 0] = 1.0
    return SvdResult(left * signs, svals.copy(), right * signs)


def truncated_svd(a: np.ndarray, k: int) -> SvdResult:
    """Top-k singular triples via the D x D Gram matrix.

    For a D x n input, eigendecomposes A @ A.T (cost O(n D^2 + D^3)) and
    recovers right vectors as A.T @ u / s.  Intended for D << n; for the
    O(k n D) iterative alternative see truncated_svd_power.
    """
    a = check_finite(a, "matrix")
    if a.ndim != 2:
        raise InvalidParam("matrix must be 2-D")
    d_rows, n = a.shape
    if not 1 <= k <= min(d_rows, n):
        raise InvalidParam(f"k={k} not in [1, {min(d_rows, n)}]")
    gram = a @ a.T
    gram = (gram + gram.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(gram)
    order = np.argsort(eigvals)[::-1][:k]
    svals = np.sqrt(np.clip(eigvals[order], 0.0, None))
    left = eigvecs[:, order]
    if svals[0] <= 0.0 or svals[-1] < 1e-12 * svals[0]:
        raise RankDeficient(
            f"singular value {svals[-1]:.3e} below 1e-12 * {svals[0]:.3e}; "
            "request fewer vectors"
        )
    right = (a.T @ left) / svals
    return _package_svd(left, svals, right)


def truncated_svd_power(
    a: np.ndarray,
    k: int,
    seed=0,
    max_iter: int = 50,
    tol: float = 1e-8,
) -> SvdResult:
    """Top-k singular triples by block power iteration.

    Runs subspace iteration on the right singular space: each sweep costs
    two skinny products A @ V and A.T @ (A V), i.e. O(k n D), plus QR of
    the block.  Stops after ``max_iter`` sweeps or when the sine of the
    largest principal angle between successive subspaces drops below
    ``tol``.
    """
    a = check_finite(a, "matrix")
    if a.ndim != 2:
        raise InvalidParam("matrix must be 2-D")
    d_rows, n = a.shape
    if not 1 <= k <= min(d_rows, n):
        raise InvalidParam(f"k={k} not in [1, {min(d_rows, n)}]")
    rng = make_rng(seed)
    v, _ = np.linalg.qr(rng.standard_normal((n, k)))
    for _ in range(max_iter):
        q, _ = np.linalg.qr(a @ v)
        v_next, _ = np.linalg.qr(a.T @ q)
        cosines = np.linalg.svd(v.T @ v_next, compute_uv=False)
        v = v_next
        if math.sqrt(max(0.0, 1.0 - min(cosines) ** 2)) < tol:
            break
    # extract triples from the converged subspace
    m = a @ v
    left_small, svals, wt = np.linalg.svd(m, full_matrices=False)
    right = v @ wt.T
    return _package_svd(left_small, svals, right)


def _sq_dists(points, centers):
    # squared euclidean distances, m x K, clipped at zero
    d2 = (
        (points**2).sum(axis=1)[:, None]
        - 2.0 * points @ centers.T
        + (centers**2).sum(axis=1)[None, :]
    )
    return np.clip(d2, 0.0, None)


def _kmeanspp(points, k, rng):
    m = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[int(rng.integers(m))]
    d2 = _sq_dists(points, centers[:1]).ravel()
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(m))  # all mass on chosen points already
        else:
            idx = int(rng.choice(m, p=d2 / total))
        centers[j] = points[idx]
        d2 = np.minimum(d2, _sq_dists(points, centers[j : j + 1]).ravel())
    return centers


def _lloyd(points, k, rng, max_iter, tol):
    m = points.shape[0]
    centers = _kmeanspp(points, k, rng)
    prev = math.inf
    for _ in range(max_iter):
        d2 = _sq_dists(points, centers)
        labels = np.argmin(d2, axis=1)
        inertia = float(d2[np.arange(m), labels].sum())
        if math.isfinite(prev) and abs(prev - inertia) <= tol * max(prev, 1e-300):
            break
        prev = inertia
        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, points)
        nearest = d2[np.arange(m), labels].copy()
        for j in range(k):
            if counts[j] > 0:
                centers[j] = sums[j] / counts[j]
            else:
                # re-seed an emptied centroid at the farthest point
                far = int(np.argmax(nearest))
                centers[j] = points[far]
                nearest[far] = -1.0
    d2 = _sq_dists(points, centers)
    labels = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(m), labels].sum())
    return labels, centers, inertia


def kmeans(
    points: np.ndarray,
    k: int,
    seed=0,
    restarts: int = 1,
    max_iter: int = 100,
    tol: float = 1e-6,
):
    """Lloyd's algorithm with kmeans++ seeding.

    Iterates until the relative inertia change drops below ``tol`` or
    ``max_iter`` passes.  Clusters emptied by an update are re-seeded at
    the point farthest from its current centroid.  Deterministic for a
    given seed; with ``restarts`` > 1 the lowest-inertia run wins (child
    streams are spawned, not reused).

    Returns (labels, centroids, inertia); every point is assigned to its
    nearest returned centroid.
    """
    pts = check_finite(points, "points")
    if pts.ndim != 2:
        raise InvalidParam("points must be a 2-D array")
    if k < 1:
        raise InvalidParam(f"k={k} must be >= 1")
    if restarts < 1:
        raise InvalidParam(f"restarts={restarts} must be >= 1")
    if pts.shape[0] < k:
        raise DegenerateInput(f"{pts.shape[0]} points cannot fill {k} clusters")
    best = None
    for child in split(seed, restarts):
        run = _lloyd(pts, k, make_rng(child), max_iter, tol)
        if best is None or run[2] < best[2]:
            best = run
    return best


def hungarian_match(confusion: np.ndarray) -> np.ndarray:
    """Permutation maximizing the matched diagonal of a K x K count matrix.

    Returns p such that sum_i confusion[i, p[i]] is maximal; among
    maximizers, the lexicographically smallest p is returned.
    """
    c = check_finite(confusion, "confusion")
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise InvalidParam("confusion matrix must be square")
    if np.any(c < 0):
        raise InvalidParam("confusion matrix must be nonnegative")
    k = c.shape[0]

    def best_total(sub):
        if sub.size == 0:
            return 0.0
        rows, cols = linear_sum_assignment(-sub)
        return float(sub[rows, cols].sum())

    target = best_total(c)
    remaining = list(range(k))
    perm = np.empty(k, dtype=int)
    fixed = 0.0
    for i in range(k):
        for j in remaining:  # ascending, so the first feasible j is smallest
            rest_cols = [col for col in remaining if col != j]
            rest = c[np.ix_(range(i + 1, k), rest_cols)]
            if fixed + c[i, j] + best_total(rest) >= target - 1e-9:
                perm[i] = j
                fixed += c[i, j]
                remaining.remove(j)
                break
    return perm
