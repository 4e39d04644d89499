"""Finite-sample set searches: ancestor search, ICP, and screening.

The ancestor search scans predictor sets in order of increasing size.
The empty set is decided first at the guarded level alpha0 (if it
passes as invariant the search stops with an empty answer); every other
set is tested at the corrected level alpha/C, strict supersets of
already-accepted sets are skipped, and the scan stops early once the
accepted union covers all predictors.  The accepted sets estimate the
minimally invariant family and their union estimates the ancestors.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable

import numpy as np
from sklearn.linear_model import lars_path

from .errors import SingularDesignError
from .invariance import DecisionConfig, InvarianceTester
from .scm import Dataset
from .varset import VarSet

# decide(s, level) -> True when invariance of s is rejected at the level
DecisionRule = Callable[[VarSet, float], bool]


@dataclass(frozen=True)
class SearchReport:
    """Outcome of one ancestor search."""

    s_hat: VarSet
    accepted_family: tuple[VarSet, ...]
    tested_count: int
    skipped_count: int
    empty_set_rejected: bool
    config: DecisionConfig
    failed_sets: tuple[tuple[VarSet, str], ...] = field(default=())

    def __post_init__(self):
        union = VarSet.empty()
        for s in self.accepted_family:
            union = union | s
        if union != self.s_hat:
            raise ValueError("s_hat must equal the union of the accepted family")
        masks = [s.mask for s in self.accepted_family]
        for i, a in enumerate(masks):
            for b in masks[i + 1:]:
                if a & b == a or a & b == b:
                    raise ValueError("accepted family must be an antichain")

    def to_json(self) -> str:
        return json.dumps(
            {
                "s_hat": list(self.s_hat.indices()),
                "accepted_family": [list(s.indices()) for s in self.accepted_family],
                "tested_count": self.tested_count,
                "skipped_count": self.skipped_count,
                "empty_set_rejected": self.empty_set_rejected,
                "config": {
                    "alpha": self.config.alpha,
                    "alpha0": self.config.alpha0,
                    "alpha1": self.config.alpha1,
                    "correction": self.config.correction,
                    "m": self.config.m,
                },
                "failed_sets": [
                    [list(s.indices()), msg] for s, msg in self.failed_sets
                ],
            }
        )


def search_with_decision(d: int, decide: DecisionRule, config: DecisionConfig) -> SearchReport:
    """Run the ancestor search against an arbitrary decision rule.

    This is the pure search logic; :func:`ias_search` instantiates it
    with the data-driven invariance decision.  A decision call that
    raises a numerical error counts as a rejection (which can only
    shrink the output toward the empty set) and is recorded.
    """
    m = config.resolved_m(d)
    empty = VarSet.empty()
    tested = 1
    if not decide(empty, config.alpha0):
        return SearchReport(
            s_hat=empty,
            accepted_family=(empty,),
            tested_count=tested,
            skipped_count=0,
            empty_set_rejected=False,
            config=config,
        )
    accepted: list[int] = []
    failures: list[tuple[VarSet, str]] = []
    skipped = 0
    union = 0
    full = VarSet.full(d).mask
    done = False
    for size in range(1, m + 1):
        level = config.level_for(size, d)
        for combo in combinations(range(1, d + 1), size):
            mask = 0
            for j in combo:
                mask |= 1 << j
            if any(acc & mask == acc for acc in accepted):
                skipped += 1
                continue
            varset = VarSet.from_mask(mask)
            tested += 1
            try:
                rejected = decide(varset, level)
            except (SingularDesignError, np.linalg.LinAlgError) as exc:
                failures.append((varset, str(exc)))
                rejected = True
            if not rejected:
                accepted.append(mask)
                union |= mask
                if union == full:
                    done = True
                    break
        if done:
            break
    return SearchReport(
        s_hat=VarSet.from_mask(union),
        accepted_family=tuple(VarSet.from_mask(m_) for m_ in accepted),
        tested_count=tested,
        skipped_count=skipped,
        empty_set_rejected=True,
        config=config,
        failed_sets=tuple(failures),
    )


def ias_search(data: Dataset, config: DecisionConfig | None = None) -> SearchReport:
    """Estimate the ancestors of Y from heterogeneous data.

    Builds the invariance tester once and runs the size-ascending
    search described in the module docstring.
    """
    if config is None:
        config = DecisionConfig()
    tester = InvarianceTester(data)

    def decide(s: VarSet, level: float) -> bool:
        if level <= 0.0:
            return False
        return tester.result(s).p_value < level

    return search_with_decision(data.d, decide, config)


def icp_search(
    data: Dataset,
    candidates: VarSet | None = None,
    alpha: float = 0.05,
    max_candidates: int = 25,
) -> VarSet:
    """Intersection of all candidate subsets whose invariance is not rejected.

    Tests every subset of ``candidates`` (default: all predictors) at
    level alpha with no multiplicity correction, and intersects the
    accepted ones.  Returns the empty set when nothing is accepted.
    """
    if candidates is None:
        candidates = VarSet.full(data.d)
    if len(candidates) > max_candidates:
        raise ValueError(
            f"{len(candidates)} candidates exceed the enumeration limit {max_candidates}"
        )
    tester = InvarianceTester(data)
    inter = None
    sub = candidates.mask
    while True:
        if not tester.result(VarSet.from_mask(sub)).p_value < alpha:
            inter = sub if inter is None else inter & sub
        if sub == 0:
            break
        sub = (sub - 1) & candidates.mask
    return VarSet.empty() if inter is None else VarSet.from_mask(inter)


def screen_markov_boundary(data: Dataset, k: int) -> VarSet:
    """At most k predictors selected by an L1 regularization path.

    Descends the lasso path of Y on X and returns the support of the
    last path point with at most k active variables.  Constant columns
    are dropped with a warning.  Deterministic given the data.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > data.d:
        raise ValueError(f"k={k} exceeds the number of predictors {data.d}")
    x = data.x
    keep = x.std(axis=0) > 0.0
    if not keep.all():
        dropped = [int(k_) + 1 for k_ in np.flatnonzero(~keep)]
        warnings.warn(f"dropping constant predictor columns {dropped}")
    cols = np.flatnonzero(keep)
    if cols.size == 0:
        return VarSet.empty()
    if k >= cols.size:
        return VarSet(int(c) + 1 for c in cols)
    xc = x[:, cols] - x[:, cols].mean(axis=0)
    yc = data.y - data.y.mean()
    _, _, coefs = lars_path(xc, yc, method="lasso")
    support = np.zeros(0, dtype=int)
    for step in range(coefs.shape[1]):
        active = np.flatnonzero(coefs[:, step])
        if active.size > k:
            break
        support = active
    return VarSet(int(cols[i]) + 1 for i in support)
