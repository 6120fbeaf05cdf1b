"""Landmark selection and local flat fitting.

Landmarks are either points sampled from the data or k-means centroids.
Around each landmark a best-fit flat is chosen over a ladder of k-NN
neighborhood sizes S, 2S, 4S, ...: each candidate is fitted by PCA and
scored by the fraction of variance it fails to explain; the lowest score
wins, with ties going to the smallest neighborhood.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, InvalidParam
from .kernels import AffineFlat, SubspaceKernel, flat_distance_matrix
from .linalg import check_finite, kmeans, moment_spectrum, pca_spectrum
from .rng import make_rng, split

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LandmarkConfig:
    """Settings for building a SubspaceKernel spec from data.

    n_landmarks: number of flats D.
    flat_dim: dimension l of each fitted flat.
    method: "random" (sample data points) or "kmeans" (centroids).
    init_neighbors: smallest neighborhood size S; default 2 * (l + 1).
    max_scales: number of neighborhood doublings T; default
        min(8, ceil(log2(n / S)) + 1), clamped to at least 1.
    sigma: kernel bandwidth; None selects the sampled-median rule.
    linear: force flats through the origin (base = 0).
    """

    n_landmarks: int
    flat_dim: int
    method: str = "random"
    init_neighbors: int | None = None
    max_scales: int | None = None
    sigma: float | None = None
    linear: bool = False

    def __post_init__(self):
        if self.n_landmarks < 1:
            raise InvalidParam(f"n_landmarks={self.n_landmarks} must be >= 1")
        if self.flat_dim < 1:
            raise InvalidParam(f"flat_dim={self.flat_dim} must be >= 1")
        if self.method not in ("random", "kmeans"):
            raise InvalidParam(f"unknown landmark method {self.method!r}")
        if self.init_neighbors is not None and self.init_neighbors < self.flat_dim + 1:
            raise InvalidParam(
                f"init_neighbors={self.init_neighbors} must be >= flat_dim + 1"
            )
        if self.max_scales is not None and self.max_scales < 1:
            raise InvalidParam(f"max_scales={self.max_scales} must be >= 1")
        if self.sigma is not None and not (
            math.isfinite(self.sigma) and self.sigma > 0
        ):
            raise InvalidParam(f"sigma={self.sigma} must be positive")

    def resolve_scales(self, n: int) -> tuple[int, int]:
        """Concrete (S, T) for a dataset of n points."""
        s = self.init_neighbors or 2 * (self.flat_dim + 1)
        t = self.max_scales
        if t is None:
            t = min(8, math.ceil(math.log2(max(n, 1) / s)) + 1)
        return s, max(1, t)


def select_landmarks(points: np.ndarray, count: int, method: str = "random", seed=0):
    """Pick ``count`` landmark locations.

    "random" draws distinct data points uniformly without replacement;
    "kmeans" returns k-means centroids (which need not be data points).
    """
    pts = check_finite(points, "points")
    if pts.ndim != 2:
        raise InvalidParam("points must be 2-D")
    n = pts.shape[0]
    if count < 1:
        raise InvalidParam(f"count={count} must be >= 1")
    if count > n:
        raise InvalidParam(f"cannot select {count} landmarks from {n} points")
    if method == "random":
        idx = make_rng(seed).choice(n, size=count, replace=False)
        return pts[idx]
    if method == "kmeans":
        _, centers, _ = kmeans(pts, count, seed=seed)
        return centers
    raise InvalidParam(f"unknown landmark method {method!r}")


def best_fit_flat(
    points: np.ndarray,
    center: np.ndarray,
    flat_dim: int,
    max_scales: int,
    init_neighbors: int,
    linear: bool = False,
) -> AffineFlat:
    """Best local flat at ``center`` over multi-scale k-NN neighborhoods.

    Candidate neighborhood sizes are min(round(S * 2^j), n) for
    j = 0..T-1.  Each is fitted by PCA; the score is the trailing
    (d - l) share of the eigenvalue mass.  Strictly smaller score wins,
    so ties fall to the smallest neighborhood.  A neighborhood with zero
    total variance scores 0 and yields a coordinate-axis flat through
    ``center`` (logged, since the basis carries no information).

    With ``linear`` the fit is the best linear subspace instead: the
    spectrum is that of the uncentered second moment and the returned
    flat passes through the origin.  Centered fitting would waste one
    basis direction re-deriving the radial component that sphere-mapped
    subspace data already contains.
    """
    pts = check_finite(points, "points")
    center = check_finite(center, "center")
    n, d = pts.shape
    if center.shape != (d,):
        raise InvalidParam(f"center shape {center.shape} does not match data in R^{d}")
    if not 1 <= flat_dim <= d:
        raise InvalidParam(f"flat_dim={flat_dim} not in [1, {d}]")
    if init_neighbors < flat_dim + 1:
        raise InvalidParam("init_neighbors must be >= flat_dim + 1")
    if n < init_neighbors:
        raise DegenerateInput(f"need at least {init_neighbors} points, got {n}")

    sizes = sorted({min(int(round(init_neighbors * 2**j)), n) for j in range(max_scales)})
    dists = ((pts - center) ** 2).sum(axis=1)
    largest = sizes[-1]
    if largest < n:
        nearest = np.argpartition(dists, largest - 1)[:largest]
        order = nearest[np.argsort(dists[nearest], kind="stable")]
    else:
        order = np.argsort(dists, kind="stable")

    best = None  # (score, base, eigvecs, degenerate)
    for size in sizes:
        if linear:
            eigvals, eigvecs = moment_spectrum(pts[order[:size]])
            base = np.zeros(d)
        else:
            base, eigvals, eigvecs = pca_spectrum(pts[order[:size]])
        total = float(eigvals.sum())
        if total > 0.0:
            score = float(eigvals[flat_dim:].sum()) / total
            candidate = (score, base, eigvecs, False)
        else:
            candidate = (0.0, base, eigvecs, True)
        if best is None or candidate[0] < best[0]:
            best = candidate
    score, base, eigvecs, degenerate = best
    if degenerate:
        log.warning(
            "neighborhood around %s has zero variance; returning axis-aligned flat",
            np.array2string(center, precision=3),
        )
        return AffineFlat(base=base if linear else center, basis=np.eye(d)[:, :flat_dim])
    return AffineFlat(base=base, basis=eigvecs[:, :flat_dim])


def default_sigma(points: np.ndarray, flats, seed=0, max_pairs: int = 10_000) -> float:
    """Median point-to-flat distance, floored at 1e-6.

    Exact when n * D <= max_pairs; otherwise the median of ``max_pairs``
    uniformly sampled (point, flat) pairs.
    """
    pts = check_finite(points, "points")
    n, count = pts.shape[0], len(flats)
    if n * count <= max_pairs:
        sample = flat_distance_matrix(flats, pts).ravel()
    else:
        rng = make_rng(seed)
        pt_idx = rng.integers(n, size=max_pairs)
        flat_idx = rng.integers(count, size=max_pairs)
        sample = np.empty(max_pairs)
        for k in np.unique(flat_idx):
            sel = flat_idx == k
            row = flat_distance_matrix([flats[k]], pts[pt_idx[sel]])
            sample[sel] = row[0]
    return max(float(np.median(sample)), 1e-6)


def build_subspace_spec(points: np.ndarray, config: LandmarkConfig, seed=0) -> SubspaceKernel:
    """Select landmarks, fit their local flats, resolve sigma.

    Always returns a spec with exactly ``config.n_landmarks`` flats;
    duplicated data points can produce duplicated flats, which is fine.
    """
    pts = check_finite(points, "points")
    if pts.ndim != 2:
        raise InvalidParam("points must be 2-D")
    init_neighbors, max_scales = config.resolve_scales(pts.shape[0])
    select_seed, sigma_seed = split(seed, 2)
    centers = select_landmarks(pts, config.n_landmarks, config.method, select_seed)
    flats = [
        best_fit_flat(
            pts, c, config.flat_dim, max_scales, init_neighbors, linear=config.linear
        )
        for c in centers
    ]
    sigma = config.sigma
    if sigma is None:
        sigma = default_sigma(pts, flats, seed=sigma_seed)
    return SubspaceKernel(sigma=sigma, flats=tuple(flats))


def landmark_flat_pool(points: np.ndarray, flat_dim: int, config: LandmarkConfig | None = None):
    """Local best-fit flat at every data point.

    The pool defines an empirical flat distribution that can be sampled
    with replacement, which is how i.i.d. subspace-kernel specs of any
    size (including references far larger than n) are drawn for the
    verification suite.
    """
    pts = check_finite(points, "points")
    cfg = config or LandmarkConfig(n_landmarks=1, flat_dim=flat_dim)
    init_neighbors, max_scales = cfg.resolve_scales(pts.shape[0])
    return tuple(
        best_fit_flat(pts, p, flat_dim, max_scales, init_neighbors, linear=cfg.linear)
        for p in pts
    )
