"""Randomized feature maps for integral kernels.

A kernel of the form k(x1, x2) = integral of f(x1, y) f(x2, y) dmu(y) is
approximated by sampling D parameters y_1..y_D from mu and stacking

    psi(x) = (1 / sqrt(D)) * [f(x, y_1), ..., f(x, y_D)]^T,

so that psi(x1)^T psi(x2) is a D-sample Monte Carlo estimate of k.  Three
feature families share this interface:

- GaussianRFF: f(x, (w, t)) = sqrt(2) cos(w^T x + t) with Gaussian
  frequencies and uniform phases; the kernel is exp(-|x1-x2|^2/(2 sigma^2)).
- LandmarkGaussian: Gaussian bumps centered at landmark points.
- SubspaceKernel: f(x, L) = exp(-dist(x, L)^2 / sigma^2) for affine flats
  L, the family behind landmark subspace clustering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DenseLimitExceeded, DimensionMismatch, InvalidParam
from .linalg import AffineFlat, check_finite
from .rng import make_rng

# AffineFlat is re-exported here because flats are part of the kernel API.
__all__ = [
    "AffineFlat",
    "GaussianRFF",
    "LandmarkGaussian",
    "SubspaceKernel",
    "EmbeddingMatrix",
    "sample_gaussian_rff",
    "sample_uniform_grassmann",
    "haar_frame_batch",
    "flat_distance",
    "flat_distance_matrix",
    "feature_matrix",
    "embed",
    "exact_gaussian_kernel",
    "gaussian_kernel_matrix",
    "approx_kernel_matrix",
    "spec_to_json",
    "spec_from_json",
]


def _check_sigma(sigma):
    sigma = float(sigma)
    if not math.isfinite(sigma) or sigma <= 0.0:
        raise InvalidParam(f"sigma={sigma} must be positive and finite")
    return sigma


@dataclass(frozen=True)
class GaussianRFF:
    """Cosine features: frequencies (D, d) ~ N(0, sigma^-2 I), phases (D,)."""

    sigma: float
    frequencies: np.ndarray
    phases: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sigma", _check_sigma(self.sigma))
        freqs = check_finite(self.frequencies, "frequencies")
        phases = check_finite(self.phases, "phases")
        if freqs.ndim != 2 or phases.ndim != 1 or freqs.shape[0] != phases.shape[0]:
            raise InvalidParam(
                f"shapes disagree: frequencies {freqs.shape}, phases {phases.shape}"
            )
        if freqs.shape[0] < 1:
            raise InvalidParam("need at least one feature")
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "phases", phases)

    @property
    def n_features(self) -> int:
        return self.frequencies.shape[0]

    @property
    def dim(self) -> int:
        return self.frequencies.shape[1]


@dataclass(frozen=True)
class LandmarkGaussian:
    """Gaussian bump features with normalizer (2 pi sigma^2)^(-d/2)."""

    sigma: float
    centers: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sigma", _check_sigma(self.sigma))
        centers = check_finite(self.centers, "centers")
        if centers.ndim != 2 or centers.shape[0] < 1:
            raise InvalidParam(f"centers must be a nonempty 2-D array, got {centers.shape}")
        object.__setattr__(self, "centers", centers)

    @property
    def n_features(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]


@dataclass(frozen=True)
class SubspaceKernel:
    """Flat-distance features f(x, L) = exp(-dist(x, L)^2 / sigma^2)."""

    sigma: float
    flats: tuple

    def __post_init__(self):
        object.__setattr__(self, "sigma", _check_sigma(self.sigma))
        flats = tuple(self.flats)
        if len(flats) < 1:
            raise InvalidParam("need at least one flat")
        ambient = flats[0].ambient
        for f in flats:
            if not isinstance(f, AffineFlat):
                raise InvalidParam("flats must be AffineFlat instances")
            if f.ambient != ambient:
                raise DimensionMismatch(
                    f"flats live in R^{ambient} and R^{f.ambient}"
                )
        object.__setattr__(self, "flats", flats)

    @property
    def n_features(self) -> int:
        return len(self.flats)

    @property
    def dim(self) -> int:
        return self.flats[0].ambient


FeatureSpec = GaussianRFF | LandmarkGaussian | SubspaceKernel


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Feature embedding of a dataset, stored as a D x n array.

    Column i is psi(x_i); the 1/sqrt(D) scaling is already applied, so
    data.T @ data is the approximate kernel matrix.
    """

    data: np.ndarray

    def __post_init__(self):
        data = check_finite(self.data, "embedding")
        if data.ndim != 2:
            raise InvalidParam("embedding must be 2-D")
        object.__setattr__(self, "data", data)

    @property
    def n_features(self) -> int:
        return self.data.shape[0]

    @property
    def n_points(self) -> int:
        return self.data.shape[1]


def sample_gaussian_rff(sigma: float, n_features: int, dim: int, seed=0) -> GaussianRFF:
    """Draw frequencies ~ N(0, sigma^-2 I_d) and phases ~ U[0, 2 pi)."""
    sigma = _check_sigma(sigma)
    if n_features < 1 or dim < 1:
        raise InvalidParam("n_features and dim must be >= 1")
    rng = make_rng(seed)
    freqs = rng.normal(0.0, 1.0 / sigma, size=(n_features, dim))
    phases = rng.uniform(0.0, 2.0 * math.pi, size=n_features)
    return GaussianRFF(sigma=sigma, frequencies=freqs, phases=phases)


def haar_frame_batch(dim: int, flat_dim: int, count: int, seed=0) -> np.ndarray:
    """(count, dim, flat_dim) stack of Haar-distributed orthonormal frames.

    Each is the QR orthonormalization of a Gaussian matrix with column
    signs fixed by the R diagonal, which makes the span Haar-distributed.
    """
    if not 1 <= flat_dim < dim:
        raise InvalidParam(f"flat_dim={flat_dim} not in [1, {dim - 1}]")
    if count < 1:
        raise InvalidParam("count must be >= 1")
    rng = make_rng(seed)
    g = rng.standard_normal((count, dim, flat_dim))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.einsum("kii->ki", r))
    signs[signs == 0] = 1.0
    return q * signs[:, None, :]


def sample_uniform_grassmann(dim: int, flat_dim: int, count: int, seed=0) -> list:
    """Uniformly random ``flat_dim``-dimensional linear subspaces of R^dim.

    Same frames as ``haar_frame_batch`` (identical seed stream), wrapped
    as base-zero AffineFlat objects.
    """
    frames = haar_frame_batch(dim, flat_dim, count, seed)
    zero = np.zeros(dim)
    return [AffineFlat(base=zero, basis=basis) for basis in frames]


def flat_distance(x: np.ndarray, flat: AffineFlat) -> float:
    """Euclidean distance from a point to an affine flat."""
    x = check_finite(x, "point")
    if x.shape != (flat.ambient,):
        raise DimensionMismatch(f"point has shape {x.shape}, flat lives in R^{flat.ambient}")
    diff = x - flat.base
    proj = flat.basis.T @ diff
    return math.sqrt(max(0.0, float(diff @ diff) - float(proj @ proj)))


def _grouped_flat_sq_dists(flats, pts):
    """Squared distances from every point to every flat, (D, n).

    Flats are grouped by dimension so each group reduces to two GEMMs;
    the projection tensor is chunked over points to bound memory.
    """
    n, d = pts.shape
    out = np.empty((len(flats), n))
    by_dim = {}
    for i, f in enumerate(flats):
        by_dim.setdefault(f.dim, []).append(i)
    x_sq = (pts**2).sum(axis=1)
    for flat_dim, idxs in by_dim.items():
        rows = np.asarray(idxs)
        bases = np.stack([flats[i].base for i in idxs])
        frames = np.stack([flats[i].basis for i in idxs])  # (g, d, l)
        g = len(idxs)
        base_sq = (bases**2).sum(axis=1)
        d2_full = x_sq[None, :] - 2.0 * (bases @ pts.T) + base_sq[:, None]
        stacked = frames.transpose(0, 2, 1).reshape(g * flat_dim, d)
        base_proj = np.einsum("gdl,gd->gl", frames, bases)
        chunk = max(1, int(4_000_000 // max(g * flat_dim, 1)))
        for s in range(0, n, chunk):
            e = min(n, s + chunk)
            proj = (stacked @ pts[s:e].T).reshape(g, flat_dim, e - s)
            proj -= base_proj[:, :, None]
            d2 = d2_full[:, s:e] - (proj**2).sum(axis=1)
            out[rows, s:e] = np.clip(d2, 0.0, None)
    return out


def flat_distance_matrix(flats, points: np.ndarray) -> np.ndarray:
    """Distances from every point to every flat, shape (len(flats), n)."""
    pts = check_finite(points, "points")
    if pts.ndim != 2:
        raise InvalidParam("points must be 2-D")
    if flats and pts.shape[1] != flats[0].ambient:
        raise DimensionMismatch(
            f"points in R^{pts.shape[1]}, flats in R^{flats[0].ambient}"
        )
    return np.sqrt(_grouped_flat_sq_dists(flats, pts))


def feature_matrix(spec: FeatureSpec, points: np.ndarray) -> np.ndarray:
    """Unscaled feature values f(x_i, y_j), shape (D, n).

    embed() divides this by sqrt(D); the raw values are useful when the
    per-sample spread matters (standard errors of kernel estimates).
    """
    pts = check_finite(points, "points")
    if pts.ndim != 2:
        raise InvalidParam("points must be 2-D")
    if pts.shape[1] != spec.dim:
        raise DimensionMismatch(
            f"points in R^{pts.shape[1]} but spec expects R^{spec.dim}"
        )
    if isinstance(spec, GaussianRFF):
        return math.sqrt(2.0) * np.cos(spec.frequencies @ pts.T + spec.phases[:, None])
    if isinstance(spec, LandmarkGaussian):
        d2 = (
            (spec.centers**2).sum(axis=1)[:, None]
            - 2.0 * spec.centers @ pts.T
            + (pts**2).sum(axis=1)[None, :]
        )
        norm = (2.0 * math.pi * spec.sigma**2) ** (-spec.dim / 2.0)
        return norm * np.exp(-np.clip(d2, 0.0, None) / (2.0 * spec.sigma**2))
    if isinstance(spec, SubspaceKernel):
        d2 = _grouped_flat_sq_dists(spec.flats, pts)
        return np.exp(-d2 / spec.sigma**2)
    raise InvalidParam(f"unknown feature spec type {type(spec).__name__}")


def embed(spec: FeatureSpec, points) -> EmbeddingMatrix:
    """Feature embedding psi(X) with the 1/sqrt(D) scaling applied."""
    pts = points.points if hasattr(points, "points") else points
    values = feature_matrix(spec, pts)
    return EmbeddingMatrix(data=values / math.sqrt(spec.n_features))


def exact_gaussian_kernel(x: np.ndarray, y: np.ndarray, sigma: float) -> float:
    """exp(-|x - y|^2 / (2 sigma^2)), the GaussianRFF limit kernel."""
    diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return math.exp(-float(diff @ diff) / (2.0 * float(sigma) ** 2))


def gaussian_kernel_matrix(points: np.ndarray, sigma: float) -> np.ndarray:
    """Pairwise exact Gaussian kernel matrix of one point set."""
    pts = check_finite(points, "points")
    sq = (pts**2).sum(axis=1)
    d2 = sq[:, None] - 2.0 * pts @ pts.T + sq[None, :]
    return np.exp(-np.clip(d2, 0.0, None) / (2.0 * float(sigma) ** 2))


def approx_kernel_matrix(spec: FeatureSpec, points, dense_limit: int = 5000) -> np.ndarray:
    """Dense psi(X)^T psi(X), refused above ``dense_limit`` points.

    The result is symmetrized, so it is symmetric exactly and PSD up to
    roundoff.  Meant for verification and small problems; the clustering
    pipeline never forms it.
    """
    pts = points.points if hasattr(points, "points") else points
    pts = check_finite(pts, "points")
    if pts.shape[0] > dense_limit:
        raise DenseLimitExceeded(
            f"n={pts.shape[0]} exceeds dense limit {dense_limit}"
        )
    psi = embed(spec, pts).data
    w = psi.T @ psi
    return (w + w.T) / 2.0


def spec_to_json(spec: FeatureSpec) -> dict:
    """JSON-ready dict with a variant tag; inverse of spec_from_json."""
    if isinstance(spec, GaussianRFF):
        return {
            "kind": "gaussian_rff",
            "sigma": spec.sigma,
            "frequencies": spec.frequencies.tolist(),
            "phases": spec.phases.tolist(),
        }
    if isinstance(spec, LandmarkGaussian):
        return {
            "kind": "landmark_gaussian",
            "sigma": spec.sigma,
            "centers": spec.centers.tolist(),
        }
    if isinstance(spec, SubspaceKernel):
        return {
            "kind": "subspace",
            "sigma": spec.sigma,
            "flats": [
                {"base": f.base.tolist(), "basis": f.basis.tolist()}
                for f in spec.flats
            ],
        }
    raise InvalidParam(f"unknown feature spec type {type(spec).__name__}")


def spec_from_json(doc: dict) -> FeatureSpec:
    try:
        kind = doc["kind"]
        if kind == "gaussian_rff":
            return GaussianRFF(
                sigma=doc["sigma"],
                frequencies=np.asarray(doc["frequencies"], dtype=float),
                phases=np.asarray(doc["phases"], dtype=float),
            )
        if kind == "landmark_gaussian":
            return LandmarkGaussian(
                sigma=doc["sigma"], centers=np.asarray(doc["centers"], dtype=float)
            )
        if kind == "subspace":
            flats = tuple(
                AffineFlat(
                    base=np.asarray(f["base"], dtype=float),
                    basis=np.asarray(f["basis"], dtype=float),
                )
                for f in doc["flats"]
            )
            return SubspaceKernel(sigma=doc["sigma"], flats=flats)
    except KeyError as exc:
        raise InvalidParam(f"feature spec document missing key {exc}") from exc
    raise InvalidParam(f"unknown feature spec kind {doc.get('kind')!r}")
