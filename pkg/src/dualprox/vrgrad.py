"""Variance-reduced stochastic gradient estimators: SAGA, SVRG, SARAH.

All three sit behind one interface. ``estimate(k, x_cur, x_prev,
component_grad, full_grad)`` returns the mini-batch estimate of the
mean gradient at x_cur and updates the estimator memory:

* SAGA keeps a table of the last gradient seen per component plus the
  running table mean, refreshed incrementally. The table is dense
  (N x n memory), which is the scaling limit of this implementation.
* SVRG keeps a snapshot point and its full gradient, refreshed every
  ``period`` iterations; at a refresh the emitted estimate IS the full
  gradient, bit for bit.
* SARAH recursively corrects its previous estimate and restarts from
  the full gradient every ``period`` iterations.

Batches are drawn uniformly without replacement as a pure function of
(seed, k) and reduced in ascending index order, so the whole estimate
stream is reproducible bit for bit.
"""

import numpy as np

__all__ = [
    "sample_batch",
    "make_estimator",
    "default_period",
    "SagaEstimator",
    "SvrgEstimator",
    "SarahEstimator",
    "FullGradientEstimator",
]


def sample_batch(seed, n_components, batch_size, k):
    """Sorted batch of distinct indices, deterministic in (seed, k)."""
    if not 1 <= batch_size <= n_components:
        raise ValueError(
            f"batch size must be in [1, {n_components}], got {batch_size}"
        )
    if seed < 0 or k < 0:
        raise ValueError("seed and iteration index must be nonnegative")
    rng = np.random.default_rng([seed, k])
    picks = rng.choice(n_components, size=batch_size, replace=False)
    return np.sort(picks)


def default_period(n_components, batch_size):
    """One epoch worth of mini-batches between snapshots/restarts."""
    return -(-n_components // batch_size)


class _EstimatorBase:
    kind = "abstract"

    def __init__(self, n_components, batch_size, seed, period=None):
        if not 1 <= batch_size <= n_components:
            raise ValueError(
                f"batch size must be in [1, {n_components}], got {batch_size}"
            )
        self.n_components = int(n_components)
        self.batch_size = int(batch_size)
        self.seed = int(seed)
        self.period = int(period) if period else default_period(n_components, batch_size)
        self._ready = False
        #: component-gradient evaluations consumed so far
        self.evals = 0

    def sample_batch(self, k):
        return sample_batch(self.seed, self.n_components, self.batch_size, k)

    def reset(self, x0, component_grad, full_grad):
        """Seed the memory at x0 and restart the rng stream."""
        raise NotImplementedError

    def estimate(self, k, x_cur, x_prev, component_grad, full_grad):
        raise NotImplementedError

    def _require_ready(self):
        if not self._ready:
            raise RuntimeError(f"{self.kind}: estimator not initialized; call reset")


class SagaEstimator(_EstimatorBase):
    kind = "saga"

    def reset(self, x0, component_grad, full_grad):
        x0 = np.asarray(x0, dtype=float)
        self.table = np.stack(
            [component_grad(i, x0) for i in range(self.n_components)]
        )
        self.table_mean = self.table.mean(axis=0)
        self.evals = self.n_components
        self._ready = True
        return self

    def batch_estimate(self, batch, x_cur, component_grad):
        """Estimate for an explicit batch without touching the memory."""
        self._require_ready()
        fresh = np.stack([component_grad(i, x_cur) for i in batch])
        return (fresh - self.table[batch]).mean(axis=0) + self.table_mean

    def estimate(self, k, x_cur, x_prev, component_grad, full_grad):
        self._require_ready()
        batch = self.sample_batch(k)
        fresh = np.stack([component_grad(i, x_cur) for i in batch])
        self.evals += len(batch)
        estimate = (fresh - self.table[batch]).mean(axis=0) + self.table_mean
        # incremental mean update keeps the invariant mean(table) == table_mean
        self.table_mean = self.table_mean + (fresh - self.table[batch]).sum(axis=0) / self.n_components
        self.table[batch] = fresh
        return estimate


class SvrgEstimator(_EstimatorBase):
    kind = "svrg"

    def reset(self, x0, component_grad, full_grad):
        self.snapshot_x = np.asarray(x0, dtype=float).copy()
        self.snapshot_grad = full_grad(self.snapshot_x)
        self.evals = self.n_components
        self._ready = True
        return self

    def batch_estimate(self, batch, x_cur, component_grad):
        self._require_ready()
        diffs = np.stack(
            [component_grad(i, x_cur) - component_grad(i, self.snapshot_x) for i in batch]
        )
        return diffs.mean(axis=0) + self.snapshot_grad

    def estimate(self, k, x_cur, x_prev, component_grad, full_grad):
        self._require_ready()
        if k > 0 and k % self.period == 0:
            self.snapshot_x = np.asarray(x_cur, dtype=float).copy()
            self.snapshot_grad = full_grad(self.snapshot_x)
            self.evals += self.n_components
            return self.snapshot_grad.copy()
        if k == 0:
            # snapshot was just seeded at x0 = x_cur
            return self.snapshot_grad.copy()
        batch = self.sample_batch(k)
        estimate = self.batch_estimate(batch, x_cur, component_grad)
        self.evals += 2 * len(batch)
        return estimate


class SarahEstimator(_EstimatorBase):
    kind = "sarah"

    def reset(self, x0, component_grad, full_grad):
        self.prev_x = np.asarray(x0, dtype=float).copy()
        self.prev_estimate = full_grad(self.prev_x)
        self.evals = self.n_components
        self._ready = True
        return self

    def batch_estimate(self, batch, x_cur, component_grad, x_prev=None):
        self._require_ready()
        if x_prev is None:
            x_prev = self.prev_x
        diffs = np.stack(
            [component_grad(i, x_cur) - component_grad(i, x_prev) for i in batch]
        )
        return diffs.mean(axis=0) + self.prev_estimate

    def estimate(self, k, x_cur, x_prev, component_grad, full_grad):
        self._require_ready()
        x_cur = np.asarray(x_cur, dtype=float)
        if k % self.period == 0:
            if k == 0:
                estimate = self.prev_estimate.copy()
            else:
                estimate = full_grad(x_cur)
                self.evals += self.n_components
        else:
            batch = self.sample_batch(k)
            estimate = self.batch_estimate(
                batch, x_cur, component_grad,
                x_prev=self.prev_x if x_prev is None else x_prev,
            )
            self.evals += 2 * len(batch)
        self.prev_x = x_cur.copy()
        self.prev_estimate = np.asarray(estimate, dtype=float).copy()
        return estimate


class FullGradientEstimator(_EstimatorBase):
    """Degenerate estimator: always the exact mean gradient."""

    kind = "full"

    def __init__(self, n_components, batch_size=None, seed=0, period=None):
        super().__init__(n_components, n_components, seed, period=1)

    def reset(self, x0, component_grad, full_grad):
        self.evals = 0
        self._ready = True
        return self

    def estimate(self, k, x_cur, x_prev, component_grad, full_grad):
        self._require_ready()
        self.evals += self.n_components
        return full_grad(x_cur)


_KINDS = {
    "saga": SagaEstimator,
    "svrg": SvrgEstimator,
    "sarah": SarahEstimator,
    "full": FullGradientEstimator,
}


def make_estimator(kind, n_components, batch_size, seed, period=None):
    if kind not in _KINDS:
        raise ValueError(f"unknown estimator kind {kind!r}; pick from {sorted(_KINDS)}")
    return _KINDS[kind](n_components, batch_size, seed, period=period)
