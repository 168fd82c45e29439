import itertools
import math

import numpy as np
import pytest

from s5eval import (LabeledSources, MetricConfig, ca_pi_sdri, ca_sdri_baseline, class_component,
                    group_by_label, pi_sdri, sdr, sdri)
from s5eval.errors import CountMismatch, DuplicateLabels, EmptyReference
from s5eval.grouping import ClassGroup
from s5eval.synth import make_estimate_with_sdr

from conftest import labeled, noise, wave


@pytest.fixture
def scene(rng):
    refs = [noise(rng, 1024) for _ in range(3)]
    y = wave(sum(r.samples for r in refs) + 0.1 * rng.standard_normal(1024))
    return refs, y


def test_all_fn_component_is_penalty_only(scene):
    refs, y = scene
    comp = class_component(ClassGroup("a", tuple(refs[:2]), ()), y)
    assert comp.p_value == 0.0 and comp.n_total == 2 and comp.counts == (0, 2, 0)
    comp = class_component(ClassGroup("a", tuple(refs[:2]), ()), y, MetricConfig(penalty_fn=-5.0))
    assert comp.p_value == -10.0


def test_single_pair_component(scene, rng):
    refs, y = scene
    est = make_estimate_with_sdr(refs[0], 12.0, 1)
    comp = class_component(ClassGroup("a", (refs[0],), (est,)), y)
    assert comp.p_value == sdri(est, refs[0], y)
    assert comp.assignment.pairs == ((0, 0),)


def test_three_refs_two_ests_matches_enumeration(scene):
    refs, y = scene
    ests = (make_estimate_with_sdr(refs[2], 8.0, 5), make_estimate_with_sdr(refs[0], 15.0, 6))
    cfg = MetricConfig(penalty_fn=-3.0)
    comp = class_component(ClassGroup("a", tuple(refs), ests), y, cfg)
    best = max(
        math.fsum(sdri(ests[s], refs[p], y) for s, p in zip(sigma, pi))
        for sigma in itertools.permutations(range(2), 2)
        for pi in itertools.combinations(range(3), 2)
    )
    assert comp.p_value == 1 * -3.0 + best
    assert comp.counts == (2, 1, 0)
    assert comp.assignment.pairs == ((0, 2), (1, 0))


class TestCaPiSdri:
    def test_perfect_prediction(self, scene):
        refs, y = scene
        srcs = labeled("abc", refs)
        res = ca_pi_sdri(srcs, srcs, y)
        expected = math.fsum(60.0 - sdr(y, r) for r in refs) / 3
        assert res.metric_db == pytest.approx(expected, abs=1e-12)
        assert all(c.assignment.pairs == ((i, i),) for i, c in enumerate(res.components))

    def test_duplicated_perfect_prediction_finds_identity(self, scene):
        refs, y = scene
        res = ca_pi_sdri(labeled("aab", refs), labeled("aab", [refs[1], refs[0], refs[2]]), y)
        assert res.components[0].assignment.pairs == ((0, 1), (1, 0))
        expected = math.fsum(60.0 - sdr(y, r) for r in refs) / 3
        assert res.metric_db == pytest.approx(expected, abs=1e-12)

    def test_disjoint_labels_score_zero(self, scene):
        refs, y = scene
        res = ca_pi_sdri(labeled("ab", refs[:2]), labeled("cde", refs), y)
        assert res.metric_db == 0.0 and res.total_n == 5

    def test_mixture_copies_score_zero(self, scene):
        refs, y = scene
        res = ca_pi_sdri(labeled("aab", refs), labeled("aab", [y, y, y]), y)
        assert abs(res.metric_db) <= 1e-9

    def test_reduces_to_baseline_for_distinct_labels(self, scene, rng):
        refs, y = scene
        ests = [make_estimate_with_sdr(r, float(rng.uniform(0, 20)), i) for i, r in enumerate(refs)]
        for cfg in (MetricConfig(), MetricConfig(-2.0, -7.5)):
            r_ls, e_ls = labeled("abc", refs), labeled(["c", "a", "d"], [ests[2], ests[0], ests[1]])
            assert ca_pi_sdri(r_ls, e_ls, y, cfg).metric_db == ca_sdri_baseline(r_ls, e_ls, y, cfg)

    def test_order_invariance(self, scene, rng):
        refs, y = scene
        ests = [make_estimate_with_sdr(r, float(rng.uniform(0, 20)), i) for i, r in enumerate(refs)]
        r_ls = labeled("aab", refs)
        e_ls = labeled(["a", "b", "a", "c"], [ests[0], ests[2], ests[1], y])
        base = ca_pi_sdri(r_ls, e_ls, y).metric_db
        for p in itertools.permutations(range(3)):
            for q in itertools.permutations(range(4)):
                assert ca_pi_sdri(r_ls.reordered(p), e_ls.reordered(q), y).metric_db == base

    def test_fp_dilution(self, scene, rng):
        refs, y = scene
        ests = labeled("abc", [make_estimate_with_sdr(r, 10.0 + i, i) for i, r in enumerate(refs)])
        r_ls = labeled("abc", refs)
        before = ca_pi_sdri(r_ls, ests, y)
        after = ca_pi_sdri(r_ls, LabeledSources(list(ests) + [("z", y)]), y)
        numerator = math.fsum(c.p_value for c in before.components)
        assert after.metric_db == numerator / (before.total_n + 1)

    def test_penalties_and_hook(self, scene):
        refs, y = scene
        r_ls = labeled("ab", refs[:2])
        e_ls = labeled("bc", [refs[1], refs[2]])
        res = ca_pi_sdri(r_ls, e_ls, y, MetricConfig(penalty_fn=-4.0, penalty_fp=-6.0))
        assert res.total_n == 3
        assert res.metric_db == pytest.approx((-4.0 - 6.0 + 60.0 - sdr(y, refs[1])) / 3, abs=1e-12)

        calls = []

        def hook(kind, w, cfg):
            calls.append(kind)
            return -1.0 if kind == "fn" else -2.0

        res = ca_pi_sdri(r_ls, e_ls, y, MetricConfig(penalty_hook=hook))
        assert sorted(calls) == ["fn", "fp"]
        assert res.metric_db == pytest.approx((-3.0 + 60.0 - sdr(y, refs[1])) / 3, abs=1e-12)

    def test_empty_reference(self, scene):
        _, y = scene
        with pytest.raises(EmptyReference):
            ca_pi_sdri(LabeledSources(), LabeledSources(), y)

    def test_components_sum(self, scene, rng):
        refs, y = scene
        res = ca_pi_sdri(labeled("aab", refs), labeled("ab", refs[1:]), y)
        assert res.total_n == sum(c.n_total for c in res.components)
        assert res.metric_db == math.fsum(c.p_value for c in res.components) / res.total_n


class TestBaseline:
    def test_identity_case(self, scene):
        refs, y = scene
        assert ca_sdri_baseline(labeled("a", refs[:1]), labeled("a", [y]), y) == 0.0

    def test_rejects_duplicates(self, scene):
        refs, y = scene
        with pytest.raises(DuplicateLabels):
            ca_sdri_baseline(labeled("aa", refs[:2]), labeled("a", refs[:1]), y)
        with pytest.raises(DuplicateLabels):
            ca_sdri_baseline(labeled("a", refs[:1]), labeled("aa", refs[:2]), y)


class TestPiSdri:
    def test_any_order(self, scene):
        refs, y = scene
        expected = math.fsum(60.0 - sdr(y, r) for r in refs) / 3
        assert pi_sdri(labeled("abc", refs), labeled("xyz", refs[::-1]), y) == pytest.approx(expected, abs=1e-12)

    def test_single(self, scene, rng):
        refs, y = scene
        est = make_estimate_with_sdr(refs[0], 5.0, 3)
        assert pi_sdri(labeled("a", refs[:1]), labeled("b", [est]), y) == sdri(est, refs[0], y)

    def test_matches_permutation_enumeration(self, scene, rng):
        refs, y = scene
        for _ in range(10):
            ests = [wave(sum(rng.uniform(0, 1) * r.samples for r in refs)) for _ in range(3)]
            best = max(math.fsum(sdri(ests[p[k]], refs[k], y) for k in range(3))
                       for p in itertools.permutations(range(3)))
            assert pi_sdri(labeled("abc", refs), labeled("abc", ests), y) == best / 3

    def test_count_mismatch(self, scene):
        refs, y = scene
        with pytest.raises(CountMismatch):
            pi_sdri(labeled("ab", refs[:2]), labeled("a", refs[:1]), y)

    def test_bounds_class_aware_score_with_oracle_labels(self, scene, rng):
        refs, y = scene
        for _ in range(20):
            labels = [str(x) for x in rng.choice(list("ab"), size=3)]
            ests = [wave(sum(rng.uniform(0, 1) * r.samples for r in refs)) for _ in range(3)]
            r_ls, e_ls = labeled(labels, refs), labeled(labels, ests)
            assert pi_sdri(r_ls, e_ls, y) >= ca_pi_sdri(r_ls, e_ls, y).metric_db
