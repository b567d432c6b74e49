"""Target distributions the compressor can draw from.

Three families: an isotropic standard Gaussian in any dimension, a uniform
mixture of 2D Gaussians centered on a regular grid, and the empirical
distribution of a stored point list (optionally loaded from CSV).  A spec
string picks one on the command line:

    gaussian:dim=<N>
    grid:rows=<r>,cols=<c>,spacing=<s>,sigma=<sigma>
    csv:<path>

``spacing`` and ``sigma`` default to 1.0 and 0.2; those values give clearly
separated mixture components without being stated anywhere as canonical.
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from .io import read_points_csv
from .rng import SeededRng


class TargetSpecError(ValueError):
    """A malformed target specification string."""


class TargetDistribution(ABC):
    """A sampler for the measure being compressed."""

    #: ambient dimension of samples
    dim: int

    @abstractmethod
    def sample(self, count: int, rng: SeededRng) -> np.ndarray:
        """Draw ``count`` i.i.d. points, shape (count, dim)."""

    def _check_count(self, count: int) -> None:
        if count < 1:
            raise ValueError(f"sample count must be >= 1, got {count}")


class StandardGaussian(TargetDistribution):
    """N(0, I) in ``dim`` dimensions."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError(f"dimension must be >= 1, got {dim}")
        self.dim = int(dim)

    def __repr__(self) -> str:
        return f"StandardGaussian(dim={self.dim})"

    def sample(self, count, rng):
        self._check_count(count)
        return rng.standard_normal((count, self.dim))


class GridMixture(TargetDistribution):
    """Uniform mixture of rows*cols isotropic 2D Gaussians on a grid.

    Component centers sit at spacing-multiples and the grid is translated so
    its centroid is the origin (the compression of a symmetric mixture by a
    single point then lands near the origin, a clean symmetry check).
    """

    def __init__(self, rows: int, cols: int, spacing: float = 1.0, sigma: float = 0.2):
        if rows < 1 or cols < 1:
            raise ValueError(f"rows and cols must be >= 1, got {rows}x{cols}")
        if not spacing > 0:
            raise ValueError(f"spacing must be > 0, got {spacing}")
        if not sigma > 0:
            raise ValueError(f"sigma must be > 0, got {sigma}")
        self.rows = int(rows)
        self.cols = int(cols)
        self.spacing = float(spacing)
        self.sigma = float(sigma)
        self.dim = 2

    def __repr__(self) -> str:
        return (
            f"GridMixture(rows={self.rows}, cols={self.cols}, "
            f"spacing={self.spacing}, sigma={self.sigma})"
        )

    def centers(self) -> np.ndarray:
        """Component centers, row-major, centroid at the origin."""
        i = np.repeat(np.arange(self.rows), self.cols)
        j = np.tile(np.arange(self.cols), self.rows)
        x = (i - (self.rows - 1) / 2.0) * self.spacing
        y = (j - (self.cols - 1) / 2.0) * self.spacing
        return np.column_stack([x, y])

    def sample(self, count, rng):
        self._check_count(count)
        centers = self.centers()
        cells = rng.integers(len(centers), count)
        noise = rng.standard_normal((count, 2))
        return centers[cells] + self.sigma * noise


class Empirical(TargetDistribution):
    """Uniform draws with replacement from a stored point list."""

    def __init__(self, points):
        points = np.asarray(points, dtype=np.float64)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        if points.ndim != 2 or len(points) == 0:
            raise ValueError("empirical distribution needs a nonempty (n, dim) point list")
        self.points = points.copy()
        self.points.setflags(write=False)
        self.dim = points.shape[1]

    def __repr__(self) -> str:
        return f"Empirical({len(self.points)} points, dim={self.dim})"

    def sample(self, count, rng):
        self._check_count(count)
        return self.points[rng.integers(len(self.points), count)]


def load_empirical(path) -> Empirical:
    """Empirical distribution over the rows of a point CSV."""
    return Empirical(read_points_csv(path))


def _parse_kwargs(body: str, spec: str) -> dict:
    out = {}
    for part in body.split(","):
        if not part:
            continue
        key, sep, value = part.partition("=")
        if not sep or not key:
            raise TargetSpecError(f"malformed parameter {part!r} in target spec {spec!r}")
        out[key.strip()] = value.strip()
    return out


def _take(kwargs: dict, key: str, conv, spec: str, default=None):
    if key not in kwargs:
        if default is None:
            raise TargetSpecError(f"target spec {spec!r} is missing required key {key!r}")
        return default
    raw = kwargs.pop(key)
    try:
        return conv(raw)
    except ValueError:
        raise TargetSpecError(
            f"target spec {spec!r}: cannot parse {key}={raw!r}"
        ) from None


def parse_target_spec(spec: str) -> TargetDistribution:
    """Build a distribution from its command-line spec string."""
    kind, sep, body = spec.partition(":")
    if kind == "gaussian":
        kwargs = _parse_kwargs(body, spec)
        dim = _take(kwargs, "dim", int, spec)
        if kwargs:
            raise TargetSpecError(f"unknown keys {sorted(kwargs)} in target spec {spec!r}")
        try:
            return StandardGaussian(dim)
        except ValueError as exc:
            raise TargetSpecError(str(exc)) from None
    if kind == "grid":
        kwargs = _parse_kwargs(body, spec)
        rows = _take(kwargs, "rows", int, spec)
        cols = _take(kwargs, "cols", int, spec)
        spacing = _take(kwargs, "spacing", float, spec, default=1.0)
        sigma = _take(kwargs, "sigma", float, spec, default=0.2)
        if kwargs:
            raise TargetSpecError(f"unknown keys {sorted(kwargs)} in target spec {spec!r}")
        try:
            return GridMixture(rows, cols, spacing=spacing, sigma=sigma)
        except ValueError as exc:
            raise TargetSpecError(str(exc)) from None
    if kind == "csv":
        if not body:
            raise TargetSpecError(f"target spec {spec!r} is missing a file path")
        return load_empirical(body)
    raise TargetSpecError(
        f"unknown target kind {kind!r}; expected gaussian:, grid: or csv:"
    )
