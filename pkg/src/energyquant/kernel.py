"""The conditionally negative definite kernel underlying all distances.

The kernel profile is ``h(r) = sqrt(a^2 + r^2) - a`` with a nonnegative
smoothing parameter ``a``.  At ``a = 0`` it degenerates to the plain absolute
distance (classical energy distance); for ``a > 0`` the kink at ``r = 0`` is
rounded off, which keeps gradients finite when two atoms coincide.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class Kernel:
    """Smoothed-distance kernel with smoothing parameter ``a >= 0``.

    ``a`` is expressed in the same units as point coordinates.  All
    evaluations are in 64-bit floats; 32-bit arithmetic would lose the
    curvature region entirely for the default ``a = 1e-6``.
    """

    a: float = 1e-6

    def __post_init__(self):
        if not np.isfinite(self.a) or self.a < 0:
            raise ValueError(f"smoothing parameter a must be finite and >= 0, got {self.a}")

    def h(self, r):
        """Kernel profile ``sqrt(a^2 + r^2) - a`` for distances ``r >= 0``.

        Satisfies ``h(0) = 0`` exactly and ``0 <= h(r) <= r``.  Accepts
        scalars or arrays; negative input is a caller bug and raises.
        """
        arr = np.asarray(r, dtype=np.float64)
        if np.any(arr < 0):
            raise ValueError("h is defined for nonnegative distances only")
        a = self.a
        if a == 0.0:
            out = arr + 0.0
        else:
            s = np.sqrt(a * a + arr * arr)
            # r < a would cancel catastrophically in s - a; use the
            # algebraically equal form r^2 / (s + a) there (exact 0 at r = 0).
            out = np.where(arr < a, arr * arr / (s + a), s - a)
        return out if arr.ndim else float(out)

    def h_prime_over_r(self, r):
        """``h'(r) / r = 1 / sqrt(a^2 + r^2)``, the radial gradient factor.

        Finite everywhere when ``a > 0``.  For ``a = 0`` the value at
        ``r = 0`` is taken to be 0 (subgradient convention at the kink);
        this choice is deterministic and makes coincident atoms inert.
        """
        arr = np.asarray(r, dtype=np.float64)
        if np.any(arr < 0):
            raise ValueError("h_prime_over_r is defined for nonnegative distances only")
        a = self.a
        if a == 0.0:
            out = np.zeros_like(arr)
            np.divide(1.0, arr, out=out, where=arr > 0)
        else:
            out = 1.0 / np.sqrt(a * a + arr * arr)
        return out if arr.ndim else float(out)

    def cnd_inequality_holds(self, x, y) -> bool:
        """Whether ``h(|x - y|) <= h(|x|) + h(|y|) + a`` (up to roundoff).

        True for every pair of points; exercised by the test suite as the
        coercivity building block of the distance.
        """
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        y = np.atleast_1d(np.asarray(y, dtype=np.float64))
        lhs = self.h(np.linalg.norm(x - y, axis=-1))
        rhs = (
            self.h(np.linalg.norm(x, axis=-1))
            + self.h(np.linalg.norm(y, axis=-1))
            + self.a
        )
        slack = 32.0 * _EPS * (1.0 + np.abs(rhs))
        return bool(np.all(lhs <= rhs + slack))
