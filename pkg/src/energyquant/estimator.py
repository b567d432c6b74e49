"""Scikit-learn style front end for measure compression.

``MeasureCompressor`` behaves like a clustering-ish estimator: ``fit`` on a
data matrix compresses its empirical distribution into ``n_points``
representative points, ``predict`` assigns rows to their nearest compressed
point, and ``transform`` returns distances to the compressed points, so the
estimator drops into pipelines the way a KMeans would.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .core import CompressionConfig, HistoryLedger, compress
from .distributions import Empirical
from .kernel import Kernel
from .measure import combine, distance_squared, uniform


class MeasureCompressor(TransformerMixin, BaseEstimator):
    """Compress the empirical distribution of a dataset into ``n_points`` points.

    Parameters mirror the solver configuration; ``random_state`` is the
    (integer) seed, and runs are deterministic for a fixed one.  An optional
    ``history`` passed to :meth:`fit` marks previously emitted points whose
    neighborhoods the new points should avoid.

    Attributes set by :meth:`fit`: ``points_`` (the compressed cloud),
    ``final_loss_``, ``loss_trace_``, ``labels_`` (nearest-point assignment
    of the training rows), ``n_features_in_``.
    """

    def __init__(
        self,
        n_points=8,
        *,
        batch_size=256,
        n_iterations=1000,
        step_size=0.05,
        optimizer="adam",
        kernel_a=1e-6,
        random_state=0,
    ):
        self.n_points = n_points
        self.batch_size = batch_size
        self.n_iterations = n_iterations
        self.step_size = step_size
        self.optimizer = optimizer
        self.kernel_a = kernel_a
        self.random_state = random_state

    def _config(self) -> CompressionConfig:
        return CompressionConfig(
            k=self.n_points,
            batch_size=self.batch_size,
            iterations=self.n_iterations,
            step_size=self.step_size,
            optimizer=self.optimizer,
            kernel_a=self.kernel_a,
            seed=self.random_state if self.random_state is not None else 0,
        )

    def fit(self, X, y=None, history=None):
        X = check_array(X, dtype=np.float64)
        ledger = (
            HistoryLedger.empty()
            if history is None
            else HistoryLedger(check_array(history, dtype=np.float64))
        )
        result = compress(Empirical(X), ledger, self._config())
        self.n_features_in_ = X.shape[1]
        self.points_ = result.points
        self.final_loss_ = result.final_loss
        self.loss_trace_ = result.loss_trace
        self.labels_ = self._nearest(X)
        return self

    def _nearest(self, X) -> np.ndarray:
        return np.argmin(cdist(X, self.points_), axis=1)

    def _validate_for_inference(self, X) -> np.ndarray:
        check_is_fitted(self, "points_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, estimator was fitted with {self.n_features_in_}"
            )
        return X

    def predict(self, X) -> np.ndarray:
        """Index of the nearest compressed point for each row."""
        return self._nearest(self._validate_for_inference(X))

    def transform(self, X) -> np.ndarray:
        """Euclidean distances from each row to every compressed point."""
        return cdist(self._validate_for_inference(X), self.points_)

    def score(self, X, y=None) -> float:
        """Negative squared kernel distance between the cloud and the rows of X."""
        X = self._validate_for_inference(X)
        q = combine(uniform(self.points_), uniform(X), 1.0, -1.0)
        return -distance_squared(q, Kernel(self.kernel_a))
