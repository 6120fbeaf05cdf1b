"""Synthetic union-of-subspaces data and CSV round-tripping.

Each cluster is drawn uniformly from the unit ball of a Haar-random
linear subspace, ambient Gaussian noise is added, and optional outliers
fill a cube sized to the data.  Outliers carry label -1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParam, ParseError, RaggedRows
from .linalg import check_finite
from .rng import make_rng, split


@dataclass(frozen=True)
class SyntheticModel:
    """Union-of-subspaces model: one entry of dims per cluster."""

    dims: tuple
    ambient: int
    pts_per_subspace: int = 250
    noise_sigma: float = 0.05
    outlier_ratio: float = 0.0

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) == 0:
            raise InvalidParam("need at least one subspace")
        for d in dims:
            if not 1 <= d < self.ambient:
                raise InvalidParam(
                    f"subspace dim {d} not in [1, {self.ambient - 1}]"
                )
        if self.pts_per_subspace < 1:
            raise InvalidParam("pts_per_subspace must be >= 1")
        if self.noise_sigma < 0:
            raise InvalidParam("noise_sigma must be >= 0")
        if not 0.0 <= self.outlier_ratio < 1.0:
            raise InvalidParam("outlier_ratio must be in [0, 1)")
        object.__setattr__(self, "dims", dims)

    @property
    def n_clusters(self) -> int:
        return len(self.dims)

    def to_json(self) -> dict:
        return {
            "dims": list(self.dims),
            "ambient": self.ambient,
            "pts_per_subspace": self.pts_per_subspace,
            "noise_sigma": self.noise_sigma,
            "outlier_ratio": self.outlier_ratio,
        }


@dataclass(frozen=True)
class DataSet:
    """Points with optional integer labels; label -1 marks outliers."""

    points: np.ndarray
    labels: np.ndarray | None = None
    outlier_mask: np.ndarray | None = None

    def __post_init__(self):
        pts = check_finite(self.points, "points")
        if pts.ndim != 2:
            raise InvalidParam("points must be a 2-D array")
        object.__setattr__(self, "points", pts)
        labels = self.labels
        if labels is not None:
            labels = np.asarray(labels, dtype=int)
            if labels.shape != (pts.shape[0],):
                raise InvalidParam("labels length does not match points")
            object.__setattr__(self, "labels", labels)
        mask = self.outlier_mask
        if mask is None and labels is not None:
            mask = labels == -1
        if mask is not None:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != (pts.shape[0],):
                raise InvalidParam("outlier_mask length does not match points")
            if labels is not None and not np.array_equal(mask, labels == -1):
                raise InvalidParam("outlier_mask must mark exactly the -1 labels")
        object.__setattr__(self, "outlier_mask", mask)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def as_points(data) -> np.ndarray:
    """Accept a DataSet or a bare array; return the validated array."""
    if isinstance(data, DataSet):
        return data.points
    return check_finite(data, "points")


def sphere_normalize(points: np.ndarray) -> np.ndarray:
    """Scale each point to the unit sphere; zero points are left alone."""
    pts = check_finite(points, "points")
    norms = np.linalg.norm(pts, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    return pts / safe[:, None]


def _haar_basis(rng, ambient, dim):
    q, r = np.linalg.qr(rng.standard_normal((ambient, dim)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def gen_synthetic(model: SyntheticModel, seed=0) -> DataSet:
    """Draw a dataset from the model, deterministically per seed.

    Streams are split so that the subspace bases and pre-noise points do
    not depend on noise_sigma or outlier_ratio: the same seed with
    noise_sigma=0 yields the exact pre-noise points.
    """
    children = split(seed, model.n_clusters + 2)
    noise_seed, outlier_seed = children[-2], children[-1]
    blocks = []
    for k, dim_k in enumerate(model.dims):
        rng = make_rng(children[k])
        basis = _haar_basis(rng, model.ambient, dim_k)
        dirs = rng.standard_normal((model.pts_per_subspace, dim_k))
        norms = np.linalg.norm(dirs, axis=1)
        norms[norms == 0] = 1.0
        radii = rng.random(model.pts_per_subspace) ** (1.0 / dim_k)
        blocks.append((dirs / norms[:, None] * radii[:, None]) @ basis.T)
    inliers = np.vstack(blocks)
    inliers = inliers + model.noise_sigma * make_rng(noise_seed).standard_normal(
        inliers.shape
    )
    labels = np.repeat(np.arange(model.n_clusters), model.pts_per_subspace)

    n_in = inliers.shape[0]
    n_out = int(math.floor(model.outlier_ratio * n_in + 0.5))
    if n_out > 0:
        half_side = float(np.linalg.norm(inliers, axis=1).max())
        outliers = make_rng(outlier_seed).uniform(
            -half_side, half_side, size=(n_out, model.ambient)
        )
        points = np.vstack([inliers, outliers])
        labels = np.concatenate([labels, np.full(n_out, -1)])
    else:
        points = inliers
    return DataSet(points=points, labels=labels)


def save_csv(path, data: DataSet) -> None:
    """Write points (and labels, when present) with a header row.

    Floats use %.17g so a round trip reproduces them exactly.
    """
    cols = [f"x{i}" for i in range(data.dim)]
    if data.labels is not None:
        cols.append("label")
    lines = [",".join(cols)]
    for i in range(data.n):
        fields = ["%.17g" % v for v in data.points[i]]
        if data.labels is not None:
            fields.append(str(int(data.labels[i])))
        lines.append(",".join(fields))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_float(field, row, col):
    try:
        value = float(field)
    except ValueError:
        raise ParseError(f"cannot parse {field!r} as a number", row=row, col=col)
    if not math.isfinite(value):
        raise ParseError(f"non-finite value {field!r}", row=row, col=col)
    return value


def load_csv(path) -> DataSet:
    """Read a CSV of finite decimals, with an optional header.

    A trailing integer label column is recognized only when a header row
    names its last column ``label``.  Raises ParseError with the 1-based
    row/column of the offending cell, or RaggedRows when widths differ.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw_lines = fh.read().splitlines()
    rows = [line.split(",") for line in raw_lines if line.strip() != ""]
    if not rows:
        raise ParseError("file contains no data rows", row=1)

    has_header = False
    try:
        [float(f) for f in rows[0]]
    except ValueError:
        has_header = True
    has_labels = has_header and rows[0][-1].strip().lower() == "label"
    data_rows = rows[1:] if has_header else rows
    if not data_rows:
        raise ParseError("file contains no data rows", row=2)

    width = len(data_rows[0])
    n_coords = width - 1 if has_labels else width
    if n_coords < 1:
        raise ParseError("rows have no coordinate columns", row=1)
    points = np.empty((len(data_rows), n_coords))
    labels = np.empty(len(data_rows), dtype=int) if has_labels else None
    offset = 2 if has_header else 1
    for i, fields in enumerate(data_rows):
        if len(fields) != width:
            raise RaggedRows(
                f"expected {width} fields, found {len(fields)}", row=i + offset
            )
        for j in range(n_coords):
            points[i, j] = _parse_float(fields[j], row=i + offset, col=j + 1)
        if has_labels:
            field = fields[-1].strip()
            try:
                labels[i] = int(field)
            except ValueError:
                raise ParseError(
                    f"cannot parse {field!r} as an integer label",
                    row=i + offset,
                    col=width,
                )
    return DataSet(points=points, labels=labels)
