"""History-aware compression of a target distribution into K points.

One solve minimizes the squared kernel distance between the free point cloud
(uniform weights 1/K) and a history-adjusted target: each stochastic
iteration draws a fresh batch z_1..z_B from the target and evaluates the
difference measure

    q = sum_k (1/K) delta(x_k)                 free points (optimized)
      - sum_b (K_p + K)/(K B) delta(z_b)       batch draws (constant)
      + sum_j (1/K) delta(y_j)                 history points (constant)

whose total mass is zero by construction.  Already-emitted history points
enter with *positive* weight on the same side as the free cloud, i.e. they
repel new points; that is what turns repeated K=1 solves into a
non-repeating ("aging") sampler.  For K=1 these weights coincide with the
normalization delta_x - ((K_p+1)/B sum_b delta(z_b) - sum_j delta(y_j)); for
K>1 they differ from that by the global factor 1/K^2, which rescales the
loss without moving its minimizers.

Gradients flow only into the free points.  The optimizer is a small
self-contained first-order method (adaptive-moment by default, plain SGD as
an ablation option); runs are deterministic given the config seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import Kernel
from .measure import SignedPointMeasure, _loss_and_gradient, distance_squared
from .rng import SeededRng

OPTIMIZERS = ("adam", "sgd")

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

_U64_MAX = (1 << 64) - 1


class NonFiniteLossError(ArithmeticError):
    """The stochastic loss became NaN or infinite during optimization."""


@dataclass(frozen=True)
class CompressionConfig:
    """All solver hyperparameters for one compression run."""

    k: int
    batch_size: int = 256
    iterations: int = 1000
    step_size: float = 0.05
    optimizer: str = "adam"
    kernel_a: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if not self.step_size > 0:
            raise ValueError(f"step_size must be > 0, got {self.step_size}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(
                f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}"
            )
        if not np.isfinite(self.kernel_a) or self.kernel_a < 0:
            raise ValueError(f"kernel_a must be finite and >= 0, got {self.kernel_a}")
        if not 0 <= self.seed <= _U64_MAX:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    def kernel(self) -> Kernel:
        return Kernel(self.kernel_a)


class HistoryLedger:
    """Ordered record of previously emitted points (emission indices 1..K_p)."""

    __slots__ = ("points",)

    def __init__(self, points=None):
        if points is None:
            points = np.empty((0, 1))
        points = np.asarray(points, dtype=np.float64)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        if points.ndim != 2:
            raise ValueError(f"history points must be a (n, dim) array, got {points.shape}")
        points = points.copy()
        points.setflags(write=False)
        self.points = points

    @classmethod
    def empty(cls) -> "HistoryLedger":
        return cls()

    def __len__(self) -> int:
        return len(self.points)

    def __repr__(self) -> str:
        return f"HistoryLedger({len(self)} points)"

    @property
    def dimension(self):
        """Ambient dimension, or None while the ledger is empty."""
        return self.points.shape[1] if len(self.points) else None

    @property
    def emission_indices(self) -> np.ndarray:
        return np.arange(1, len(self) + 1)

    def extended(self, point) -> "HistoryLedger":
        """New ledger with ``point`` appended at the next emission index."""
        point = np.asarray(point, dtype=np.float64).reshape(1, -1)
        if len(self) == 0:
            return HistoryLedger(point)
        if point.shape[1] != self.dimension:
            raise ValueError(
                f"point dimension {point.shape[1]} does not match ledger dimension {self.dimension}"
            )
        return HistoryLedger(np.vstack([self.points, point]))


@dataclass
class CompressionResult:
    """Final free points, the last stochastic loss, and the full loss trace."""

    points: np.ndarray
    final_loss: float
    loss_trace: np.ndarray


class PlainSgd:
    """Gradient descent; the step for each call is supplied by the schedule."""

    def update(self, x: np.ndarray, grad: np.ndarray, step: float) -> np.ndarray:
        return x - step * grad


class AdaptiveMoment:
    """Adam with bias correction (beta1=0.9, beta2=0.999, eps=1e-8)."""

    def __init__(self):
        self.t = 0
        self.m = 0.0
        self.v = 0.0

    def update(self, x: np.ndarray, grad: np.ndarray, step: float) -> np.ndarray:
        self.t += 1
        self.m = ADAM_BETA1 * self.m + (1.0 - ADAM_BETA1) * grad
        self.v = ADAM_BETA2 * self.v + (1.0 - ADAM_BETA2) * grad * grad
        m_hat = self.m / (1.0 - ADAM_BETA1**self.t)
        v_hat = self.v / (1.0 - ADAM_BETA2**self.t)
        return x - step * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


def _make_optimizer(config: CompressionConfig):
    if config.optimizer == "sgd":
        return PlainSgd()
    return AdaptiveMoment()


def _difference_weights(k: int, batch_size: int, n_history: int) -> np.ndarray:
    w_free = 1.0 / k
    w_batch = -float(k + n_history) / (k * batch_size)
    return np.concatenate(
        [
            np.full(k, w_free),
            np.full(batch_size, w_batch),
            np.full(n_history, w_free),
        ]
    )


def _check_dims(x: np.ndarray, history: HistoryLedger, batch: np.ndarray) -> None:
    if batch.shape[1] != x.shape[1]:
        raise ValueError(
            f"batch dimension {batch.shape[1]} does not match point dimension {x.shape[1]}"
        )
    if len(history) and history.dimension != x.shape[1]:
        raise ValueError(
            f"history dimension {history.dimension} does not match point dimension {x.shape[1]}"
        )


def history_difference_measure(
    x, history: HistoryLedger, batch
) -> SignedPointMeasure:
    """The mass-zero difference measure (free cloud minus adjusted target)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    if len(x) < 1 or len(batch) < 1:
        raise ValueError("need at least one free point and one batch point")
    _check_dims(x, history, batch)
    pts = np.vstack([x, batch]) if len(history) == 0 else np.vstack(
        [x, batch, history.points]
    )
    return SignedPointMeasure(pts, _difference_weights(len(x), len(batch), len(history)))


def history_aware_loss(x, history: HistoryLedger, batch, kernel: Kernel) -> float:
    """Squared kernel distance between the free cloud and the adjusted target."""
    return distance_squared(history_difference_measure(x, history, batch), kernel)


def compress(
    target,
    history: HistoryLedger,
    config: CompressionConfig,
    *,
    init: str = "target",
) -> CompressionResult:
    """Run the stochastic solver and return the compressed point cloud.

    The free cloud starts at ``k`` draws from the target (``init="target"``,
    the default) or at the origin (``init="origin"``, for symmetry-sensitive
    tests).  Each iteration draws a fresh batch, records the loss at the
    current iterate, and applies one optimizer step; ``final_loss`` is the
    last recorded value.  Deterministic for a fixed config.
    """
    if len(history) and history.dimension != target.dim:
        raise ValueError(
            f"history dimension {history.dimension} does not match target dimension {target.dim}"
        )
    if init not in ("target", "origin"):
        raise ValueError(f"init must be 'target' or 'origin', got {init!r}")
    rng = SeededRng(config.seed)
    kernel = config.kernel()
    if init == "origin":
        x = np.zeros((config.k, target.dim))
    else:
        x = target.sample(config.k, rng)
    weights = _difference_weights(config.k, config.batch_size, len(history))
    optimizer = _make_optimizer(config)
    trace = np.empty(config.iterations)
    atoms = np.empty((config.k + config.batch_size + len(history), target.dim))
    if len(history):
        atoms[config.k + config.batch_size :] = history.points
    for it in range(config.iterations):
        atoms[: config.k] = x
        atoms[config.k : config.k + config.batch_size] = target.sample(
            config.batch_size, rng
        )
        loss, grad = _loss_and_gradient(atoms, weights, config.k, kernel)
        if not np.isfinite(loss):
            raise NonFiniteLossError(f"loss became non-finite at iteration {it}")
        trace[it] = loss
        # Robbins-Monro style linear decay over the fixed budget; keeps the
        # final iterate from jittering at the scale of the base step under
        # fresh-batch gradient noise.
        step = config.step_size * (1.0 - it / config.iterations)
        x = optimizer.update(x, grad, step)
    return CompressionResult(points=x, final_loss=float(trace[-1]), loss_trace=trace)


def sample_next(target, history: HistoryLedger, config: CompressionConfig) -> np.ndarray:
    """One new point that fits the target while avoiding the history.

    Runs :func:`compress` with ``k = 1`` against the current ledger and
    returns the single point.  The ledger is not mutated; appending the
    result (and persisting it) is the caller's job, which keeps this
    operation pure given its inputs.
    """
    if config.k != 1:
        raise ValueError(f"sample_next requires k=1, got k={config.k}")
    return compress(target, history, config).points[0]
