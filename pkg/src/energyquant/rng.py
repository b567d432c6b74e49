"""Portable seeded random number generation.

All stochastic behaviour in the library flows through :class:`SeededRng`, a
counter-based splitmix64 generator combined with the Box-Muller transform for
Gaussian variates.  Nothing here depends on the platform, the numpy version,
or global state: the same seed produces the same stream everywhere, which is
what makes compression runs reproducible bit for bit.

Stream layout
-------------
The k-th raw draw is ``mix64(seed + k * GOLDEN)`` where ``mix64`` is the
splitmix64 finalizer and ``GOLDEN`` is 2^64 / phi rounded to odd.  Uniform
doubles take the top 53 bits.  ``standard_normal`` consumes ``2 * ceil(n/2)``
raw draws per call (Box-Muller pairs), so consumption counts are deterministic
and never data dependent.

Independent streams are derived with :func:`derive_seed`, which mixes a salted
copy of the parent seed with the stream index; a :class:`SeededRng` is a
single-owner mutable object and must not be shared between threads.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = 0x9E3779B97F4A7C15
_MIX_1 = 0xBF58476D1CE4E5B9
_MIX_2 = 0x94D049BB133111EB
_SPAWN_SALT = 0x8BB84CA016F4FB21
_U64_MAX = (1 << 64) - 1

# top 53 bits of a u64 mapped to [0, 1)
_INV_2_53 = 2.0 ** -53


def _mix64(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer, vectorized over uint64 arrays."""
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX_1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX_2)
    return z ^ (z >> np.uint64(31))


def derive_seed(seed: int, stream: int) -> int:
    """Derive the seed of an independent child stream.

    The mapping is fixed: ``mix64((seed xor SALT) + (stream + 1) * GOLDEN)``.
    Used wherever one logical seed has to drive several statistically
    independent streams (for example one solver run per emitted point).
    """
    if not 0 <= seed <= _U64_MAX:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    if stream < 0:
        raise ValueError(f"stream index must be nonnegative, got {stream}")
    z = (np.uint64([seed]) ^ np.uint64(_SPAWN_SALT)) + (
        np.uint64([stream & _U64_MAX]) + np.uint64(1)
    ) * np.uint64(_GOLDEN)
    return int(_mix64(z)[0])


class SeededRng:
    """Counter-based splitmix64 stream with a documented Gaussian transform."""

    def __init__(self, seed: int):
        if not 0 <= seed <= _U64_MAX:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = int(seed)
        self._counter = 0

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed})"

    def spawn(self, stream: int) -> "SeededRng":
        """Child generator for stream index ``stream`` (see :func:`derive_seed`)."""
        return SeededRng(derive_seed(self.seed, stream))

    def _raw(self, n: int) -> np.ndarray:
        """Next ``n`` raw uint64 draws."""
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        return _mix64(np.uint64(self.seed) + idx * np.uint64(_GOLDEN))

    def uniform(self, n: int) -> np.ndarray:
        """``n`` doubles uniform on [0, 1)."""
        return (self._raw(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def _uniform_open(self, n: int) -> np.ndarray:
        """``n`` doubles uniform on (0, 1]; safe as a log argument."""
        return ((self._raw(n) >> np.uint64(11)) + np.uint64(1)).astype(
            np.float64
        ) * _INV_2_53

    def standard_normal(self, shape) -> np.ndarray:
        """Standard Gaussian variates via Box-Muller.

        Pair ``i`` consumes raw draws ``2i`` and ``2i + 1`` of the call and
        yields ``sqrt(-2 ln u1) * (cos, sin)(2 pi u2)`` with ``u1 in (0, 1]``
        and ``u2 in [0, 1)``, emitted in pair order.  Odd requests discard
        the final sine, so splitting one request into even-sized calls
        leaves the stream unchanged.
        """
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        m = (n + 1) // 2
        raw = self._raw(2 * m)
        u1 = ((raw[0::2] >> np.uint64(11)) + np.uint64(1)).astype(np.float64) * _INV_2_53
        u2 = (raw[1::2] >> np.uint64(11)).astype(np.float64) * _INV_2_53
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = (2.0 * np.pi) * u2
        z = np.empty(2 * m)
        z[0::2] = radius * np.cos(angle)
        z[1::2] = radius * np.sin(angle)
        return z[:n].reshape(shape)

    def integers(self, upper: int, n: int) -> np.ndarray:
        """``n`` integers uniform on {0, ..., upper - 1}.

        Uses the floor of ``uniform * upper``; the resulting bias is
        O(upper / 2^53) and irrelevant at the scales used here.
        """
        if upper < 1:
            raise ValueError(f"upper must be >= 1, got {upper}")
        idx = np.floor(self.uniform(n) * upper).astype(np.int64)
        return np.minimum(idx, upper - 1)
