"""Adversarially robust querying via an ensemble of independent estimators.

A covering argument sizes the ensemble: for queries confined to a bounded
domain, it suffices to be simultaneously correct on a finite net of the
domain, whose cardinality is at most (10 * lipschitz / (epsilon * tau))^d;
the Lipschitz continuity of the density carries correctness from net points
to everything else.  ``ensemble_size`` turns that cardinality bound into a
repetition count; the net itself is never materialized.

The ensemble answers with the lower median of its members' estimates, so
any minority of failing members cannot move the answer outside the range of
the majority, and identical queries always produce identical answers.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .errors import ConsistencyError, ParameterError
from .estimator import DynamicKernelDensity, lower_median
from .kernels import make_kernel
from .rng import TAG_MEMBER, mix64
from .validation import check_points, check_vector


def ensemble_size(d: int, epsilon: float, tau: float, delta: float,
                  lipschitz: float, boost_scale: float = 1.0) -> int:
    """Number of independent estimators needed for simultaneous correctness
    over a bounded query domain.

    Evaluates ceil(boost_scale * (d * ln(10 * lipschitz / (epsilon * tau))
    + ln(1 / delta))), clamped to at least 1.
    """
    if int(d) < 1:
        raise ParameterError("d must be at least 1")
    if not (0.0 < epsilon < 1.0):
        raise ParameterError("epsilon must lie in (0, 1)")
    if not (0.0 < tau <= 1.0):
        raise ParameterError("tau must lie in (0, 1]")
    if not (0.0 < delta < 1.0):
        raise ParameterError("delta must lie in (0, 1)")
    if not (lipschitz > 0):
        raise ParameterError("lipschitz must be positive")
    if not (boost_scale > 0):
        raise ParameterError("boost_scale must be positive")
    size = boost_scale * (d * math.log(10.0 * lipschitz / (epsilon * tau))
                          + math.log(1.0 / delta))
    return max(1, math.ceil(size))


class RobustKernelDensity(BaseEstimator):
    """Median-of-ensemble wrapper around ``DynamicKernelDensity``.

    Members share every parameter except the seed.  Member 0 uses the
    master seed itself (so a one-member ensemble reproduces the plain
    estimator exactly); member j > 0 uses a key derived from (seed, j).

    Concurrency follows the wrapped estimator: ``query``/``predict`` may run
    concurrently against an unchanging ensemble, ``update`` needs exclusive
    access, and the two must not overlap.

    Parameters beyond the wrapped estimator's:

    n_members : int or None
        Ensemble size; None computes it at fit time from ``ensemble_size``
        using the data dimension and the kernel's Lipschitz constant.
    tau : float or None
        Density floor used when sizing the ensemble; None means f_kde / 4.
    delta : float
        Target simultaneous failure probability for the sizing rule.
    boost_scale : float
        Multiplier inside ``ensemble_size``.
    """

    def __init__(self, kernel="gaussian", bandwidth=1.0, epsilon=0.25,
                 f_kde=0.1, seed=0, group_scale=4.0, table_scale=3.0,
                 level_slack=1.0, bucket_width_factor=1.5, median_blocks=1,
                 max_levels=64, max_tables=4096, n_members=None, tau=None,
                 delta=0.05, boost_scale=1.0):
        self.kernel = kernel
        self.bandwidth = bandwidth
        self.epsilon = epsilon
        self.f_kde = f_kde
        self.seed = seed
        self.group_scale = group_scale
        self.table_scale = table_scale
        self.level_slack = level_slack
        self.bucket_width_factor = bucket_width_factor
        self.median_blocks = median_blocks
        self.max_levels = max_levels
        self.max_tables = max_tables
        self.n_members = n_members
        self.tau = tau
        self.delta = delta
        self.boost_scale = boost_scale

    def _member_params(self) -> dict:
        return dict(
            kernel=self.kernel, bandwidth=self.bandwidth, epsilon=self.epsilon,
            f_kde=self.f_kde, group_scale=self.group_scale,
            table_scale=self.table_scale, level_slack=self.level_slack,
            bucket_width_factor=self.bucket_width_factor,
            median_blocks=self.median_blocks, max_levels=self.max_levels,
            max_tables=self.max_tables,
        )

    def member_seed(self, j: int) -> int:
        return int(self.seed) if j == 0 else mix64(self.seed, TAG_MEMBER, j)

    def fit(self, X, y=None):
        X = check_points(X)
        tau = self.f_kde / 4.0 if self.tau is None else self.tau
        if self.n_members is None:
            lip = make_kernel(self.kernel, self.bandwidth).lipschitz_const
            members = ensemble_size(X.shape[1], self.epsilon, tau, self.delta,
                                    lip, self.boost_scale)
        else:
            members = int(self.n_members)
            if members < 1:
                raise ParameterError("n_members must be at least 1")
        seeds = [self.member_seed(j) for j in range(members)]
        if len(set(seeds)) != members:
            raise ConsistencyError("derived member seeds are not distinct")
        self.tau_ = tau
        self.members_ = [
            DynamicKernelDensity(seed=s, **self._member_params()).fit(X)
            for s in seeds
        ]
        self.poisoned_ = False
        return self

    def _check_fitted(self):
        if not hasattr(self, "members_"):
            raise NotFittedError("this ensemble is not fitted yet; call fit first")

    @property
    def epsilon0_(self) -> float:
        """Net resolution epsilon * tau / lipschitz implied by the sizing
        rule; read-only, used by the harness for grid-spacing bounds."""
        self._check_fitted()
        return self.epsilon * self.tau_ / self.members_[0].kernel_spec_.lipschitz_const

    def update(self, v, i: int):
        """Apply the replacement to every member.

        Arguments are validated before any member is touched; a failure
        after that leaves the ensemble poisoned (members may disagree about
        the dataset) and queries are refused from then on.
        """
        self._check_fitted()
        if self.poisoned_:
            raise ConsistencyError("ensemble is poisoned; rebuild before updating")
        first = self.members_[0]
        i = int(i)
        if not (0 <= i < first.n_):
            raise ParameterError(f"index {i} out of range for n={first.n_}")
        v = check_vector(v, first.d_)
        try:
            for member in self.members_:
                member.update(v, i)
        except Exception:
            self.poisoned_ = True
            raise
        return self

    def query(self, q) -> float:
        """Lower median of the member estimates at q."""
        self._check_fitted()
        if self.poisoned_:
            raise ConsistencyError("ensemble is poisoned; queries are refused")
        q = check_vector(q, self.members_[0].d_)
        return lower_median([m.query(q).estimate for m in self.members_])

    def predict(self, Q) -> np.ndarray:
        self._check_fitted()
        Q = check_points(Q, dim=self.members_[0].d_)
        return np.array([self.query(q) for q in Q])
