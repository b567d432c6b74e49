"""Evaluation oracles: Monte-Carlo distance to a target, allocation counts,
repetition metrics, and the finite-difference gradient checker.

The Monte-Carlo energy distance is exactly the squared kernel distance
between ``uniform(points)`` and the uniform measure on a drawn target
sample, but it is evaluated through the three-block decomposition

    d^2 = 2 S_xs / (K n) - S_xx / K^2 - S_ss / n^2

(with S the plain kernel pair sums) instead of one dense n^2 Gram matrix:
sample sizes of 1e5..1e6 atoms make the dense route infeasible while the
pair sums stream in bounded memory.  ``kernel_pair_sum`` is public so a
caller evaluating many clouds against one fixed sample can precompute the
dominant S_ss block once.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .kernel import Kernel
from .measure import NEGATIVE_CLAMP, SignedPointMeasure, distance_squared
from .rng import SeededRng

#: pair-evaluation block budget (elements of one distance block)
_BLOCK_ELEMENTS = 8_000_000


def _pair_sum_sorted_1d(a: np.ndarray) -> float:
    # sum_{i,j} |a_i - a_j| via the order statistics: 2 * sum_k (2k - n + 1) x_(k)
    x = np.sort(a.ravel())
    n = len(x)
    coeff = 2.0 * np.arange(n) - (n - 1)
    return 2.0 * float(coeff @ x)


def _cross_sum_sorted_1d(a: np.ndarray, b: np.ndarray) -> float:
    # sum_{i,j} |a_i - b_j| with b sorted once and prefix sums reused
    a = a.ravel()
    b = np.sort(b.ravel())
    m = len(b)
    prefix = np.concatenate(([0.0], np.cumsum(b)))
    total = prefix[-1]
    cnt = np.searchsorted(b, a, side="left")
    below = prefix[cnt]
    return float(np.sum(a * cnt - below + (total - below) - a * (m - cnt)))


def _block_rows(n_cols: int) -> int:
    return max(1, _BLOCK_ELEMENTS // max(1, n_cols))


def _h_block_sum(kernel: Kernel, dist_block: np.ndarray) -> float:
    # a = 0 means h is the identity on distances; skip the extra pass
    if kernel.a == 0.0:
        return float(np.sum(dist_block))
    return float(np.sum(kernel.h(dist_block)))


def kernel_pair_sum(a, b=None, kernel: Kernel = Kernel(0.0)) -> float:
    """``sum_{i,j} h(|a_i - b_j|)`` over all ordered pairs (``b = a`` if omitted).

    Streams block-wise with a fixed traversal order, so the result is
    deterministic for a given input.  For 1D data with ``a = 0`` (plain
    absolute distance) an exact O(n log n) order-statistics path is used.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    symmetric = b is None
    b = a if symmetric else np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if a.shape[1] == 1 and kernel.a == 0.0:
        return _pair_sum_sorted_1d(a) if symmetric else _cross_sum_sorted_1d(a, b)
    if symmetric:
        # upper-triangle blocks counted twice; diagonal blocks once
        n = len(a)
        side = max(1, int(np.sqrt(_BLOCK_ELEMENTS)))
        edges = list(range(0, n, side)) + [n]
        total = 0.0
        for bi in range(len(edges) - 1):
            ai = a[edges[bi] : edges[bi + 1]]
            total += _h_block_sum(kernel, cdist(ai, ai))
            for bj in range(bi + 1, len(edges) - 1):
                aj = a[edges[bj] : edges[bj + 1]]
                total += 2.0 * _h_block_sum(kernel, cdist(ai, aj))
        return total
    rows = _block_rows(len(b))
    total = 0.0
    for start in range(0, len(a), rows):
        total += _h_block_sum(kernel, cdist(a[start : start + rows], b))
    return total


def mc_energy_distance_sq(
    points,
    target,
    n_samples: int,
    kernel: Kernel,
    rng: SeededRng,
    *,
    target_sample=None,
    target_self_sum=None,
) -> float:
    """Monte-Carlo estimate of the squared kernel distance of a cloud to a target.

    Draws ``n_samples`` target points and returns the squared distance
    between the uniform measures on ``points`` and on the sample.  Pass
    ``target_sample`` (and optionally its precomputed ``target_self_sum``
    from :func:`kernel_pair_sum`) to evaluate many clouds against one fixed
    draw without redoing the dominant sample-sample block.
    """
    if n_samples < 2:
        raise ValueError(f"n_samples must be >= 2, got {n_samples}")
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if target_sample is None:
        if target_self_sum is not None:
            raise ValueError("target_self_sum requires target_sample")
        sample = target.sample(n_samples, rng)
    else:
        sample = np.atleast_2d(np.asarray(target_sample, dtype=np.float64))
        if len(sample) != n_samples:
            raise ValueError(
                f"target_sample has {len(sample)} rows, expected n_samples={n_samples}"
            )
    k = len(points)
    n = len(sample)
    s_xx = kernel_pair_sum(points, kernel=kernel)
    s_ss = (
        kernel_pair_sum(sample, kernel=kernel)
        if target_self_sum is None
        else float(target_self_sum)
    )
    s_xs = kernel_pair_sum(points, sample, kernel=kernel)
    value = 2.0 * s_xs / (k * n) - s_xx / (k * k) - s_ss / (n * n)
    return 0.0 if -NEGATIVE_CLAMP <= value < 0.0 else value


def allocation_counts(points, centers) -> np.ndarray:
    """Points assigned to each center by nearest-Euclidean (ties to lowest index)."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    if len(points) == 0 or len(centers) == 0:
        raise ValueError("points and centers must both be nonempty")
    if points.shape[1] != centers.shape[1]:
        raise ValueError(
            f"dimension mismatch: points {points.shape[1]}, centers {centers.shape[1]}"
        )
    nearest = np.argmin(cdist(points, centers), axis=1)
    return np.bincount(nearest, minlength=len(centers))


def min_pairwise_distance(points) -> float:
    """Smallest Euclidean distance between any two of the points."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if len(points) < 2:
        raise ValueError("min_pairwise_distance needs at least 2 points")
    return float(pdist(points).min())


def finite_difference_gradient(
    q: SignedPointMeasure, free_indices, kernel: Kernel, rel_step: float = 1e-5
) -> np.ndarray:
    """Central-difference gradient of :func:`distance_squared`.

    The step per coordinate is ``rel_step * (1 + |coordinate|)``.  This is
    the independent oracle for the analytic gradient; it only ever calls
    the scalar distance.
    """
    if not rel_step > 0:
        raise ValueError(f"rel_step must be > 0, got {rel_step}")
    free = np.atleast_1d(np.asarray(free_indices, dtype=np.int64))
    grad = np.zeros((len(free), q.points.shape[1]))
    for row, idx in enumerate(free):
        for d in range(q.points.shape[1]):
            step = rel_step * (1.0 + abs(q.points[idx, d]))
            plus = q.points.copy()
            minus = q.points.copy()
            plus[idx, d] += step
            minus[idx, d] -= step
            f_plus = distance_squared(SignedPointMeasure(plus, q.weights), kernel)
            f_minus = distance_squared(SignedPointMeasure(minus, q.weights), kernel)
            grad[row, d] = (f_plus - f_minus) / (2.0 * step)
    return grad
