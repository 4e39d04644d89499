import itertools

import numpy as np
import pytest
from scipy import stats

import iaskit.invariance as inv
from iaskit import (
    DecisionConfig,
    Dataset,
    GraphSamplerConfig,
    InvarianceTester,
    SingularDesignError,
    VarSet,
    invariance_p_value,
    make_rng,
    reject_invariance,
    reject_minimal_invariance,
    sample_dag,
    sample_scm,
    simulate,
    substream,
)
from conftest import chain_dag


def naive_p_values(data, s):
    """Independent route: explicit residuals via lstsq, then scipy tests."""
    design = np.column_stack([np.ones(data.n)] + [data.x[:, k - 1] for k in s])
    beta, *_ = np.linalg.lstsq(design, data.y, rcond=None)
    resid = data.y - design @ beta
    r0, r1 = resid[data.env == 0], resid[data.env == 1]
    p_mean = stats.ttest_ind(r1, r0, equal_var=False).pvalue
    f = np.var(r1, ddof=1) / np.var(r0, ddof=1)
    p_var = 2 * min(
        stats.f.cdf(f, len(r1) - 1, len(r0) - 1),
        stats.f.sf(f, len(r1) - 1, len(r0) - 1),
    )
    return p_mean, min(1.0, p_var)


def simulated_dataset(seed, n=800, d=5):
    dag = sample_dag(GraphSamplerConfig(d=d, density="dense", n_interventions=2), make_rng(seed))
    scm = sample_scm(dag, 1.0, make_rng(seed + 1))
    return dag, simulate(scm, n, make_rng(seed + 2))


class TestPValueComputation:
    def test_matches_explicit_residual_route(self):
        # the gram-based fast path must reproduce the naive computation
        for seed in range(6):
            dag, data = simulated_dataset(seed * 10)
            for s in (VarSet(), VarSet([1]), VarSet([2, 4]), VarSet([1, 2, 3, 5])):
                result = invariance_p_value(data, s)
                p_mean, p_var = naive_p_values(data, s)
                assert result.mean_test_p == pytest.approx(p_mean, abs=1e-9)
                assert result.variance_test_p == pytest.approx(p_var, abs=1e-9)
                expected = min(1.0, 2 * min(p_mean, p_var))
                assert result.p_value == pytest.approx(expected, abs=1e-9)

    def test_components_and_dof(self):
        _, data = simulated_dataset(3)
        result = invariance_p_value(data, VarSet([1]))
        assert set(result.components) == {"mean_test_p", "variance_test_p"}
        n1 = int((data.env == 1).sum())
        n0 = data.n - n1
        assert result.variance_dof == (n1 - 1, n0 - 1)
        assert 0 < result.mean_dof < data.n

    def test_intercept_only_for_empty_set(self):
        _, data = simulated_dataset(7)
        result = invariance_p_value(data, VarSet())
        p_mean, p_var = naive_p_values(data, VarSet())
        assert result.p_value == pytest.approx(min(1.0, 2 * min(p_mean, p_var)), abs=1e-9)

    def test_single_environment_rejected(self):
        rng = make_rng(0)
        data = Dataset(env=np.zeros(50, dtype=int), x=rng.normal(size=(50, 2)), y=rng.normal(size=50))
        with pytest.raises(ValueError, match="environments"):
            invariance_p_value(data, VarSet([1]))

    def test_singular_design_names_the_set(self):
        rng = make_rng(1)
        col = rng.normal(size=60)
        x = np.column_stack([col, col, rng.normal(size=60)])
        data = Dataset(env=(rng.random(60) < 0.5).astype(int), x=x, y=rng.normal(size=60))
        with pytest.raises(SingularDesignError, match="1, 2"):
            invariance_p_value(data, VarSet([1, 2]))

    def test_too_few_observations(self):
        rng = make_rng(2)
        data = Dataset(env=np.array([0, 0, 1, 1]), x=rng.normal(size=(4, 3)), y=rng.normal(size=4))
        with pytest.raises(ValueError, match="too few"):
            invariance_p_value(data, VarSet([1, 2, 3]))

    def test_foreign_indices(self):
        _, data = simulated_dataset(9)
        with pytest.raises(ValueError):
            invariance_p_value(data, VarSet([99]))


class TestCalibrationAndPower:
    def test_level_at_true_invariant_set(self):
        # residuals at the parent set behave identically across
        # environments: rejection near the nominal rate
        dag = sample_dag(GraphSamplerConfig(d=6, density="sparse", n_interventions=1), make_rng(30))
        scm = sample_scm(dag, 1.0, make_rng(31))
        pa_y = VarSet.from_mask(dag.parent_masks[dag.response] & dag.predictor_mask())
        reps, hits, pvals = 200, 0, []
        for i in range(reps):
            data = simulate(scm, 2000, substream(32, i))
            p = invariance_p_value(data, pa_y).p_value
            pvals.append(p)
            hits += p < 0.05
        assert hits / reps < 0.12
        assert 0.3 < np.mean(pvals) < 0.8

    def test_power_at_empty_set(self):
        scm = sample_scm(chain_dag(1), 1.0, make_rng(33))
        small = 0
        for i in range(50):
            data = simulate(scm, 10_000, substream(34, i))
            small += invariance_p_value(data, VarSet()).p_value < 1e-6
        assert small >= 49

    def test_permuted_labels_destroy_power(self):
        scm = sample_scm(chain_dag(1), 1.0, make_rng(35))
        rejections = 0
        reps = 100
        for i in range(reps):
            rng = substream(36, i)
            data = simulate(scm, 500, rng)
            shuffled = Dataset(env=rng.permutation(data.env), x=data.x, y=data.y)
            rejections += invariance_p_value(shuffled, VarSet()).p_value < 0.05
        assert rejections / reps < 0.12


class TestDecisionRules:
    def _patch_p_value(self, monkeypatch, p):
        class _Stub:
            def __init__(self, data):
                pass

            def result(self, s):
                return inv.InvarianceTestResult(p, p, p, 1.0, (1, 1))

        monkeypatch.setattr(inv, "InvarianceTester", _Stub)

    def test_strict_threshold(self, monkeypatch):
        data = _tiny_dataset()
        self._patch_p_value(monkeypatch, 0.03)
        assert reject_invariance(data, VarSet([1]), 0.05)
        self._patch_p_value(monkeypatch, 0.05)
        assert not reject_invariance(data, VarSet([1]), 0.05)

    def test_level_zero_never_rejects(self, monkeypatch):
        data = _tiny_dataset()
        self._patch_p_value(monkeypatch, 1e-300)
        assert not reject_invariance(data, VarSet([1]), 0.0)

    def test_minimal_invariance_truth_table(self, monkeypatch):
        # the composite rule depends only on the per-set decisions;
        # enumerate every decision pattern for |s| up to 3
        data = _tiny_dataset(d=3)
        for size in (1, 2, 3):
            s = VarSet(range(1, size + 1))
            subsets = [s] + [s.remove(j) for j in s]
            for pattern in itertools.product([0, 1], repeat=len(subsets)):
                decisions = dict(zip((x.mask for x in subsets), pattern))

                class _Stub:
                    def __init__(self, inner):
                        pass

                    def result(self, varset):
                        p = 0.0 if decisions[varset.mask] else 1.0
                        return inv.InvarianceTestResult(p, p, p, 1.0, (1, 1))

                monkeypatch.setattr(inv, "InvarianceTester", _Stub)
                expected = bool(pattern[0]) or not all(pattern[1:])
                assert reject_minimal_invariance(data, s, 0.05) == expected

    def test_minimal_invariance_of_empty_set(self, monkeypatch):
        data = _tiny_dataset()
        self._patch_p_value(monkeypatch, 0.0)
        assert reject_minimal_invariance(data, VarSet(), 0.05)
        self._patch_p_value(monkeypatch, 1.0)
        assert not reject_minimal_invariance(data, VarSet(), 0.05)


def _tiny_dataset(d=2):
    rng = make_rng(99)
    return Dataset(
        env=np.array([0, 0, 1, 1] * 5),
        x=rng.normal(size=(20, d)),
        y=rng.normal(size=20),
    )


class TestDecisionConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            DecisionConfig(alpha=0.0)
        with pytest.raises(ValueError):
            DecisionConfig(alpha=0.05, alpha0=0.1)
        with pytest.raises(ValueError):
            DecisionConfig(alpha=0.05, alpha1=0.01)
        with pytest.raises(ValueError):
            DecisionConfig(correction=0.5)
        with pytest.raises(ValueError):
            DecisionConfig(correction="bonferroni")
        with pytest.raises(ValueError):
            DecisionConfig(m=-1)

    def test_correction_factors(self):
        assert DecisionConfig(correction="full_2d").correction_factor(6) == 64.0
        heur = DecisionConfig(correction="heuristic_3pow")
        assert heur.correction_factor(6) == 9.0
        assert heur.correction_factor(10) == 81.0
        assert heur.correction_factor(20) == 2187.0
        restricted = DecisionConfig(correction="restricted", m=1)
        assert restricted.correction_factor(100) == 101.0
        assert DecisionConfig(correction="restricted", m=2).correction_factor(6) == 1 + 6 + 15
        assert DecisionConfig(correction=7.0).correction_factor(6) == 7.0

    def test_auto_rule(self):
        assert DecisionConfig().correction_factor(6) == 9.0  # full search
        assert DecisionConfig(m=1).correction_factor(100) == 101.0  # restricted

    def test_level_for(self):
        config = DecisionConfig(alpha=0.05, alpha0=1e-6, alpha1=0.25, m=1)
        assert config.level_for(0, d=100) == 1e-6
        assert config.level_for(1, d=100) == 0.25  # exactly the cap size
        config = DecisionConfig(alpha=0.05, alpha0=1e-6, alpha1=0.25, m=2)
        assert config.level_for(1, d=100) == pytest.approx(0.05 / config.correction_factor(100))
        assert config.level_for(2, d=100) == 0.25
