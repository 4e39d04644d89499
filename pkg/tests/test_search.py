import numpy as np
import pytest

import iaskit.search as search_mod
from iaskit import (
    DecisionConfig,
    Dataset,
    GraphSamplerConfig,
    SearchReport,
    SingularDesignError,
    VarSet,
    ias_search,
    ias_set,
    icp_search,
    is_invariant,
    make_rng,
    sample_dag,
    sample_scm,
    screen_markov_boundary,
    search_with_decision,
    simulate,
    substream,
)
from conftest import random_dags


def stub_accepting(accepted_masks):
    """Decision rule accepting exactly the given sets (and rejecting all
    others, including the empty set unless listed)."""

    def decide(s, level):
        return s.mask not in accepted_masks

    return decide


class TestSearchLogic:
    def test_pruning_and_counts(self):
        # accepts exactly {1} and {2} at d=4: every strict superset of an
        # accepted set is skipped, the rest is tested
        decide = stub_accepting({VarSet([1]).mask, VarSet([2]).mask})
        report = search_with_decision(4, decide, DecisionConfig())
        assert report.s_hat == VarSet([1, 2])
        assert set(report.accepted_family) == {VarSet([1]), VarSet([2])}
        assert report.skipped_count == 10
        assert report.tested_count == 6  # empty, {1},{2},{3},{4},{3,4}
        assert report.empty_set_rejected

    def test_accepted_empty_set_short_circuits(self):
        decide = stub_accepting({0})
        report = search_with_decision(4, decide, DecisionConfig())
        assert report.s_hat == VarSet()
        assert report.accepted_family == (VarSet(),)
        assert report.tested_count == 1
        assert not report.empty_set_rejected

    def test_early_stop_when_union_covers_everything(self):
        decide = stub_accepting({VarSet([1]).mask, VarSet([2]).mask})
        report = search_with_decision(2, decide, DecisionConfig())
        assert report.s_hat == VarSet([1, 2])
        assert report.tested_count == 3  # empty, {1}, {2}; {1,2} never reached
        assert report.skipped_count == 0

    def test_size_cap(self):
        decide = stub_accepting({VarSet([1, 2]).mask})
        report = search_with_decision(3, decide, DecisionConfig(m=1))
        assert report.s_hat == VarSet()  # the only invariant set is too large
        assert report.tested_count == 1 + 3

    def test_levels_routed_per_size(self):
        seen = {}

        def decide(s, level):
            seen[len(s)] = level
            return True

        config = DecisionConfig(alpha=0.05, alpha0=1e-6, alpha1=0.25, m=2)
        search_with_decision(3, decide, config)
        assert seen[0] == 1e-6
        assert seen[1] == pytest.approx(0.05 / config.correction_factor(3))
        assert seen[2] == 0.25

    def test_failures_count_as_rejections_and_are_reported(self):
        def decide(s, level):
            if s == VarSet([2]):
                raise SingularDesignError(s)
            return s.mask != VarSet([1]).mask

        report = search_with_decision(2, decide, DecisionConfig())
        assert report.s_hat == VarSet([1])
        assert len(report.failed_sets) == 1
        assert report.failed_sets[0][0] == VarSet([2])

    def test_report_invariants_enforced(self):
        with pytest.raises(ValueError):
            SearchReport(
                s_hat=VarSet([1]),
                accepted_family=(VarSet([2]),),
                tested_count=1,
                skipped_count=0,
                empty_set_rejected=True,
                config=DecisionConfig(),
            )
        with pytest.raises(ValueError):
            SearchReport(
                s_hat=VarSet([1, 2]),
                accepted_family=(VarSet([1]), VarSet([1, 2])),
                tested_count=1,
                skipped_count=0,
                empty_set_rejected=True,
                config=DecisionConfig(),
            )

    def test_report_json(self):
        decide = stub_accepting({VarSet([1]).mask})
        report = search_with_decision(2, decide, DecisionConfig())
        payload = report.to_json()
        assert '"s_hat": [1]' in payload
        assert '"empty_set_rejected": true' in payload


class TestOraclePerfectEquivalence:
    def test_matches_population_union_for_all_caps(self):
        # with a perfect invariance decision, the search recovers the
        # population union of minimally invariant sets of size <= m
        for dag in random_dags(60, seed=71, d_range=(3, 6)):
            def decide(s, level, dag=dag):
                return not is_invariant(dag, s)

            for m in (1, 2, dag.d):
                report = search_with_decision(dag.d, decide, DecisionConfig(m=m))
                assert report.s_hat == ias_set(dag, max_size=m)


class TestIasSearchOnData:
    def test_recovers_oracle_at_large_n(self):
        # fixed 20-battery at n=1e5: the estimate equals the population
        # union in at least 90% of replications
        hits = 0
        for i in range(20):
            rng = substream(73, i)
            dag = sample_dag(GraphSamplerConfig(d=6, density="sparse", n_interventions=1), rng)
            scm = sample_scm(dag, 1.0, rng)
            data = simulate(scm, 100_000, rng)
            report = ias_search(data, DecisionConfig())
            hits += report.s_hat == ias_set(dag)
        assert hits >= 18

    def test_default_config(self):
        dag = sample_dag(GraphSamplerConfig(d=4, density="sparse", n_interventions=1), make_rng(74))
        data = simulate(sample_scm(dag, 1.0, make_rng(75)), 1000, make_rng(76))
        report = ias_search(data)
        assert report.config.alpha == 0.05

    def test_lowering_alpha0_never_shrinks_the_empty_rate(self):
        # per dataset, a stricter empty-set gate can only turn results
        # empty, never the reverse
        datasets = []
        for i in range(30):
            rng = substream(78, i)
            dag = sample_dag(GraphSamplerConfig(d=5, density="sparse", n_interventions=1), rng)
            datasets.append(simulate(sample_scm(dag, 1.0, rng), 500, rng))
        previous = None
        for alpha0 in (0.05, 1e-6, 1e-12):
            cfg = DecisionConfig(alpha=0.05, alpha0=alpha0)
            empty = [not ias_search(data, cfg).s_hat for data in datasets]
            if previous is not None:
                assert all(after or not before for before, after in zip(previous, empty))
            previous = empty


class TestIcpSearch:
    def _patch_decisions(self, monkeypatch, accepted_masks):
        class _Stub:
            def __init__(self, data):
                pass

            def result(self, s):
                p = 1.0 if s.mask in accepted_masks else 0.0
                import iaskit.invariance as inv

                return inv.InvarianceTestResult(p, p, p, 1.0, (1, 1))

        monkeypatch.setattr(search_mod, "InvarianceTester", _Stub)

    def test_intersection_of_accepted(self, monkeypatch):
        self._patch_decisions(monkeypatch, {VarSet([1, 2]).mask, VarSet([2, 3]).mask})
        out = icp_search(_dummy_data(3), VarSet([1, 2, 3]), alpha=0.05)
        assert out == VarSet([2])

    def test_nothing_accepted_gives_empty(self, monkeypatch):
        self._patch_decisions(monkeypatch, set())
        assert icp_search(_dummy_data(3), VarSet([1, 2, 3]), alpha=0.05) == VarSet()

    def test_candidate_guard(self):
        data = _dummy_data(30)
        with pytest.raises(ValueError, match="exceed"):
            icp_search(data, VarSet(range(1, 27)), alpha=0.05)

    def test_on_simulated_data(self):
        from iaskit import icp_set

        hits = 0
        for i in range(8):
            rng = substream(77, i)
            dag = sample_dag(GraphSamplerConfig(d=5, density="sparse", n_interventions=1), rng)
            data = simulate(sample_scm(dag, 1.0, rng), 50_000, rng)
            hits += icp_search(data) == icp_set(dag)
        assert hits >= 6

    def test_empty_on_disjoint_invariant_structure(self, fig_left):
        # the reference graph where two disjoint sets are invariant:
        # the intersection estimate concentrates on the empty set
        empties = 0
        for i in range(10):
            rng = substream(74, i)
            scm = sample_scm(fig_left, 1.0, rng)
            data = simulate(scm, 100_000, rng)
            empties += not icp_search(data, alpha=0.05)
        assert empties >= 9


def _dummy_data(d):
    rng = make_rng(55)
    return Dataset(
        env=np.array([0, 1] * 20),
        x=rng.normal(size=(40, d)),
        y=rng.normal(size=40),
    )


class TestScreening:
    def _wide_data(self, seed, n=2000, d=30):
        dag = sample_dag(
            GraphSamplerConfig(d=d, density="sparse", n_interventions=(1, 3)),
            make_rng(seed),
        )
        scm = sample_scm(dag, 1.0, substream(seed, 1))
        return dag, simulate(scm, n, substream(seed, 2))

    def test_contains_parents_most_of_the_time(self):
        hits = trials = 0
        for seed in range(20):
            dag, data = self._wide_data(seed)
            pa_y = VarSet.from_mask(dag.parent_masks[dag.response] & dag.predictor_mask())
            if not pa_y:
                continue
            trials += 1
            hits += pa_y <= screen_markov_boundary(data, 10)
        assert trials >= 10
        assert hits / trials >= 0.8

    def test_k_equal_d_returns_all_varying(self):
        _, data = self._wide_data(3)
        assert screen_markov_boundary(data, data.d) == VarSet.full(data.d)

    def test_constant_column_dropped_with_warning(self):
        rng = make_rng(5)
        x = rng.normal(size=(200, 3))
        x[:, 1] = 2.5
        y = x[:, 0] + rng.normal(size=200)
        data = Dataset(env=(rng.random(200) < 0.5).astype(int), x=x, y=y)
        with pytest.warns(UserWarning, match=r"\[2\]"):
            out = screen_markov_boundary(data, 3)
        assert 2 not in out

    def test_noise_features_selected_below_chance_share(self):
        # five informative columns compete with twenty pure-noise ones;
        # each noise column should enter the top-5 far less often than
        # a uniform draw would allow
        noise_rate = []
        for seed in range(25):
            rng = substream(79, seed)
            n = 400
            x_signal = rng.normal(size=(n, 5))
            y = x_signal @ np.array([1.0, -1.2, 0.8, 1.5, -0.7]) + rng.normal(size=n)
            x = np.column_stack([x_signal, rng.normal(size=(n, 20))])
            data = Dataset(env=(rng.random(n) < 0.5).astype(int), x=x, y=y)
            picked = screen_markov_boundary(data, 5)
            noise_rate.append(sum(1 for k in picked if k > 5) / 20)
        assert np.mean(noise_rate) <= 5 / 25

    def test_k_validation(self):
        _, data = self._wide_data(4)
        with pytest.raises(ValueError):
            screen_markov_boundary(data, 0)
        with pytest.raises(ValueError):
            screen_markov_boundary(data, data.d + 1)

    def test_deterministic(self):
        _, data = self._wide_data(6)
        assert screen_markov_boundary(data, 8) == screen_markov_boundary(data, 8)
