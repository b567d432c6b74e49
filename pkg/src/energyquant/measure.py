"""Finite signed measures as weighted Dirac atoms, with the kernel distance.

A :class:`SignedPointMeasure` holds atoms ``(z_k, p_k)`` representing
``sum_k p_k * delta(z_k)``.  The squared kernel distance of a *difference*
measure ``q = eta_1 - eta_2`` (total mass zero) is

    d^2 = - sum_{k,l} p_k p_l h(|z_k - z_l|)

which is nonnegative because ``h`` is conditionally negative definite.

Summation policy: ``distance_squared`` traverses atoms in a canonical order
(lexicographic by coordinates, ties by weight) and merges atoms at exactly
equal coordinates first.  This makes the value exactly invariant under
permutations of the input atoms and makes ``d(eta, eta)`` exactly zero, at
the cost of an O(n log n) sort before the O(n^2) pair evaluation.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial.distance import cdist

from .kernel import Kernel

#: Absolute tolerance on the total mass of a difference measure.  Rounding in
#: constructed weight vectors stays far below this at double precision.
MASS_TOLERANCE = 1e-9

#: Negative values of the squared distance within this margin of zero are
#: numerical noise and are clamped to 0 so square roots are always defined.
NEGATIVE_CLAMP = 1e-9


class SignedPointMeasure:
    """Immutable list of points with signed weights, all in one dimension N."""

    __slots__ = ("points", "weights")

    def __init__(self, points, weights):
        points = np.asarray(points, dtype=np.float64)
        weights = np.asarray(weights, dtype=np.float64)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        if points.ndim != 2:
            raise ValueError(f"points must be a (n, dim) array, got shape {points.shape}")
        if weights.ndim != 1 or len(weights) != len(points):
            raise ValueError(
                f"weights must be one per point, got {weights.shape} for {len(points)} points"
            )
        if len(points) > 0 and points.shape[1] < 1:
            raise ValueError("points must have dimension >= 1")
        points = points.copy()
        weights = weights.copy()
        points.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    def __setattr__(self, name, value):
        raise AttributeError("SignedPointMeasure is immutable")

    def __len__(self) -> int:
        return len(self.points)

    def __repr__(self) -> str:
        return f"SignedPointMeasure({len(self)} atoms, dim={self.dimension}, mass={self.total_mass():g})"

    @property
    def dimension(self):
        """Ambient dimension, or None for the empty measure."""
        return self.points.shape[1] if len(self.points) else None

    @classmethod
    def empty(cls) -> "SignedPointMeasure":
        return cls(np.empty((0, 1)), np.empty(0))

    def total_mass(self) -> float:
        """Exactly rounded sum of the weights (order independent)."""
        return math.fsum(self.weights)


def uniform(points) -> SignedPointMeasure:
    """The empirical measure: weight 1/K on each of the K given points."""
    measure = SignedPointMeasure(points, np.ones(len(points)))
    if len(measure) == 0:
        raise ValueError("uniform measure needs at least one point")
    k = len(measure)
    return SignedPointMeasure(measure.points, np.full(k, 1.0 / k))


def combine(
    m1: SignedPointMeasure, m2: SignedPointMeasure, c1: float, c2: float
) -> SignedPointMeasure:
    """Linear combination ``c1 * m1 + c2 * m2`` as a single atom list."""
    if len(m1) == 0:
        return SignedPointMeasure(m2.points, c2 * m2.weights)
    if len(m2) == 0:
        return SignedPointMeasure(m1.points, c1 * m1.weights)
    if m1.dimension != m2.dimension:
        raise ValueError(
            f"dimension mismatch: {m1.dimension} vs {m2.dimension}"
        )
    return SignedPointMeasure(
        np.vstack([m1.points, m2.points]),
        np.concatenate([c1 * m1.weights, c2 * m2.weights]),
    )


def _require_mass_zero(q: SignedPointMeasure) -> None:
    mass = q.total_mass()
    if abs(mass) > MASS_TOLERANCE:
        raise ValueError(
            f"not a mass-zero difference measure: total mass {mass:.3e} "
            f"exceeds tolerance {MASS_TOLERANCE:.0e}"
        )


def _canonical_atoms(q: SignedPointMeasure):
    """Atoms sorted lexicographically with exact coordinate duplicates merged."""
    pts, w = q.points, q.weights
    keys = (w,) + tuple(pts[:, d] for d in range(pts.shape[1] - 1, -1, -1))
    order = np.lexsort(keys)
    pts = pts[order]
    w = w[order]
    if len(pts) > 1:
        fresh = np.concatenate(([True], np.any(pts[1:] != pts[:-1], axis=1)))
        starts = np.flatnonzero(fresh)
        if len(starts) < len(pts):
            w = np.add.reduceat(w, starts)
            pts = pts[starts]
    return pts, w


def _clamp_negative(value: float) -> float:
    return 0.0 if -NEGATIVE_CLAMP <= value <= 0.0 else value


def distance_squared(q: SignedPointMeasure, kernel: Kernel) -> float:
    """Squared kernel distance of the difference measure ``q``.

    ``q`` must have total mass zero within :data:`MASS_TOLERANCE`; the
    result is then nonnegative up to roundoff and tiny negatives are
    clamped to 0.  Dense O(n^2) pair evaluation, diagonal skipped since
    ``h(0) = 0``.
    """
    _require_mass_zero(q)
    if len(q) == 0:
        return 0.0
    pts, w = _canonical_atoms(q)
    gram = kernel.h(cdist(pts, pts))
    np.fill_diagonal(gram, 0.0)
    value = -float(w @ (gram @ w))
    return _clamp_negative(value)


def distance_squared_gradient(
    q: SignedPointMeasure, free_indices, kernel: Kernel
) -> np.ndarray:
    """Gradient of :func:`distance_squared` with respect to selected atoms.

    Returns one row per entry of ``free_indices`` (in the given order):

        d(d^2)/dz_k = -2 p_k sum_{l != k} p_l * h'(r_kl)/r_kl * (z_k - z_l)

    Coincident atoms contribute the zero vector: the factor ``z_k - z_l``
    vanishes for ``a > 0`` and the ``a = 0`` subgradient convention zeroes
    the radial factor.
    """
    _require_mass_zero(q)
    free = np.atleast_1d(np.asarray(free_indices, dtype=np.int64))
    if free.ndim != 1:
        raise ValueError("free_indices must be a flat index collection")
    if len(np.unique(free)) != len(free):
        raise ValueError("free_indices must not repeat")
    if len(free) and (free.min() < 0 or free.max() >= len(q)):
        raise ValueError(f"free_indices out of range for {len(q)} atoms")
    pts, w = q.points, q.weights
    sel = pts[free]
    radial = kernel.h_prime_over_r(cdist(sel, pts))
    diff = sel[:, None, :] - pts[None, :, :]
    grad = -2.0 * w[free, None] * np.einsum("kl,kld->kd", w[None, :] * radial, diff)
    return grad


def _loss_and_gradient(pts: np.ndarray, w: np.ndarray, n_free: int, kernel: Kernel):
    """Fused squared distance and gradient for the first ``n_free`` atoms.

    Used by the solver loop: atoms arrive pre-ordered (free first) with a
    constructed mass-zero weight vector, so the canonical reordering and
    the mass gate of the public functions are skipped, one squared-distance
    matrix feeds both the loss and the gradient, and the kernel transform
    runs in place (the sub-ulp cancellation guard of :meth:`Kernel.h` does
    not matter here because the diagonal is zeroed explicitly).
    """
    a = kernel.a
    sq = cdist(pts, pts, "sqeuclidean")
    if a > 0.0:
        gram = np.sqrt(sq + a * a)
        gram -= a
    else:
        gram = np.sqrt(sq)
    np.fill_diagonal(gram, 0.0)
    value = _clamp_negative(-float(w @ (gram @ w)))

    sq_free = sq[:n_free]
    if a > 0.0:
        radial = 1.0 / np.sqrt(sq_free + a * a)
    else:
        with np.errstate(divide="ignore"):
            radial = 1.0 / np.sqrt(sq_free)
        radial[sq_free == 0.0] = 0.0
    diff = pts[:n_free, None, :] - pts[None, :, :]
    grad = -2.0 * w[:n_free, None] * np.einsum(
        "kl,kld->kd", w[None, :] * radial, diff
    )
    return value, grad
