"""Finite-sample tests of invariance and derived decision rules.

A predictor set passes the invariance test when the residuals of a
pooled linear regression of Y on the set look alike across the two
environments: a Welch t-test compares residual means, an F-test
compares residual variances, and the two p-values are combined by a
Bonferroni factor of two.  Rejection always uses a strict comparison
``p < level`` so boundary behavior is deterministic.

The minimal-invariance rule rejects a set when the set itself tests
non-invariant or when some one-element-smaller subset tests invariant.

Distribution tail probabilities come from scipy's t and F
implementations (regularized incomplete beta, accurate to ~1e-14, well
inside the 1e-10 the package promises).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.linalg import cho_factor, cho_solve

from .errors import SingularDesignError
from .scm import Dataset
from .varset import VarSet


@dataclass(frozen=True)
class InvarianceTestResult:
    """Combined and per-component p-values for one predictor set."""

    p_value: float
    mean_test_p: float
    variance_test_p: float
    mean_dof: float
    variance_dof: tuple[int, int]

    @property
    def components(self) -> dict[str, float]:
        return {"mean_test_p": self.mean_test_p, "variance_test_p": self.variance_test_p}


@dataclass(frozen=True)
class DecisionConfig:
    """Significance levels and the multiplicity correction rule.

    alpha0 is the (stricter) level for the empty set, guarding against
    weak environment effects; alpha1, when set, is the (laxer) level
    applied only to sets of exactly the maximum searched size.
    ``correction`` is one of "full_2d", "heuristic_3pow", "restricted",
    an explicit numeric factor, or "auto" (heuristic_3pow for a full
    search, restricted C(m) otherwise).  ``m`` caps the searched set
    size; None means search all sizes.
    """

    alpha: float = 0.05
    alpha0: float = 1e-6
    alpha1: float | None = None
    correction: str | float = "auto"
    m: int | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if not 0.0 < self.alpha0 <= self.alpha:
            raise ValueError("alpha0 must satisfy 0 < alpha0 <= alpha")
        if self.alpha1 is not None and self.alpha1 < self.alpha:
            raise ValueError("alpha1 must be >= alpha")
        if self.m is not None and self.m < 0:
            raise ValueError("m must be non-negative")
        if not isinstance(self.correction, str):
            if float(self.correction) < 1.0:
                raise ValueError("explicit correction factor must be >= 1")
        elif self.correction not in ("auto", "full_2d", "heuristic_3pow", "restricted"):
            raise ValueError(f"unknown correction rule {self.correction!r}")

    def resolved_m(self, d: int) -> int:
        m = d if self.m is None else min(self.m, d)
        return m

    def correction_factor(self, d: int) -> float:
        rule = self.correction
        m = self.resolved_m(d)
        if rule == "auto":
            rule = "heuristic_3pow" if m == d else "restricted"
        if rule == "full_2d":
            return float(2**d)
        if rule == "heuristic_3pow":
            return float(3 ** math.ceil(d / 3))
        if rule == "restricted":
            return float(sum(math.comb(d, i) for i in range(m + 1)))
        return float(rule)

    def level_for(self, set_size: int, d: int) -> float:
        """Per-set significance level under this configuration."""
        if set_size == 0:
            return self.alpha0
        if self.alpha1 is not None and set_size == self.resolved_m(d):
            return self.alpha1
        return self.alpha / self.correction_factor(d)


class InvarianceTester:
    """Invariance tests over one dataset with shared precomputation.

    Per-environment Gram matrices of the intercept-augmented design are
    built once; each set's regression and residual moments then cost
    O(|s|^3) independent of n.  Used heavily by the search routines.
    """

    def __init__(self, data: Dataset):
        if data.n < 2:
            raise ValueError("need at least two observations")
        design = np.column_stack([np.ones(data.n), data.x])
        self.d = data.d
        self.n_env = []
        self.gram = []
        self.xty = []
        self.yty = []
        for e in (0, 1):
            rows = data.env == e
            n_e = int(rows.sum())
            if n_e < 2:
                raise ValueError(
                    "both environments must be present with at least two observations each"
                )
            de = design[rows]
            ye = data.y[rows]
            self.n_env.append(n_e)
            self.gram.append(de.T @ de)
            self.xty.append(de.T @ ye)
            self.yty.append(float(ye @ ye))
        self.gram_pooled = self.gram[0] + self.gram[1]
        self.xty_pooled = self.xty[0] + self.xty[1]
        self.n = data.n

    def result(self, s: VarSet) -> InvarianceTestResult:
        if s.mask >> (self.d + 1):
            raise ValueError(f"{s} contains indices outside 1..{self.d}")
        cols = np.array([0] + list(s), dtype=int)
        if self.n <= len(cols):
            raise ValueError(f"too few observations to regress on {s}")
        a = self.gram_pooled[np.ix_(cols, cols)]
        b = self.xty_pooled[cols]
        # Cholesky both solves the SPD system and flags rank deficiency;
        # the pivot-ratio test catches numerically singular designs that
        # plain LU would silently accept.
        try:
            factor = cho_factor(a)
        except np.linalg.LinAlgError:
            raise SingularDesignError(s) from None
        pivots = np.abs(np.diag(factor[0]))
        if pivots.min() <= 1e-7 * pivots.max():
            raise SingularDesignError(s)
        beta = cho_solve(factor, b)
        means = []
        variances = []
        for e in (0, 1):
            n_e = self.n_env[e]
            g = self.gram[e][np.ix_(cols, cols)]
            rss = self.yty[e] - 2.0 * self.xty[e][cols] @ beta + beta @ g @ beta
            rsum = self.gram[e][0, cols] @ beta
            mean = (self.xty[e][0] - rsum) / n_e
            var = max(rss - n_e * mean * mean, 0.0) / (n_e - 1)
            means.append(mean)
            variances.append(var)
        return _two_sample_result(means, variances, self.n_env)


def _two_sample_result(means, variances, counts) -> InvarianceTestResult:
    (m0, m1), (v0, v1), (n0, n1) = means, variances, counts
    tiny = np.finfo(float).tiny
    se0 = max(v0, tiny) / n0
    se1 = max(v1, tiny) / n1
    t_stat = (m1 - m0) / math.sqrt(se0 + se1)
    mean_dof = (se0 + se1) ** 2 / (se0**2 / (n0 - 1) + se1**2 / (n1 - 1))
    p_mean = 2.0 * float(stats.t.sf(abs(t_stat), mean_dof))
    f_stat = max(v1, tiny) / max(v0, tiny)
    p_var = 2.0 * float(
        min(stats.f.cdf(f_stat, n1 - 1, n0 - 1), stats.f.sf(f_stat, n1 - 1, n0 - 1))
    )
    p_var = min(1.0, p_var)
    combined = min(1.0, 2.0 * min(p_mean, p_var))
    return InvarianceTestResult(
        p_value=combined,
        mean_test_p=min(1.0, p_mean),
        variance_test_p=p_var,
        mean_dof=float(mean_dof),
        variance_dof=(n1 - 1, n0 - 1),
    )


def invariance_p_value(data: Dataset, s: VarSet) -> InvarianceTestResult:
    """Test whether Y's residual distribution given X_s matches across
    environments.  See the module docstring for the construction."""
    return InvarianceTester(data).result(s)


def reject_invariance(data: Dataset, s: VarSet, level: float) -> bool:
    """Decision rule: reject the invariance of ``s`` iff p-value < level."""
    if level <= 0.0:
        return False
    return invariance_p_value(data, s).p_value < level


def reject_minimal_invariance(data: Dataset, s: VarSet, level: float) -> bool:
    """Reject minimal invariance of ``s``.

    Rejects when ``s`` itself tests non-invariant, or when removing
    some single member leaves a set that still tests invariant.  For
    the empty set this coincides with the plain invariance decision.
    """
    tester = InvarianceTester(data)

    def rejected(varset: VarSet) -> bool:
        if level <= 0.0:
            return False
        return tester.result(varset).p_value < level

    if not s:
        return rejected(s)
    if rejected(s):
        return True
    return any(not rejected(s.remove(j)) for j in s)
