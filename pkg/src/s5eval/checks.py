"""Randomised property suites shared by ``s5eval selftest`` and the test suite.

Each check returns a :class:`CheckResult`; none of them raise on failure.
Counts are parameters so the CLI can run reduced versions.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .assignment import (enumerate_class_permutations, solve_max_assignment,
                         solve_max_assignment_bruteforce)
from .core import Waveform
from .errors import DuplicateLabels
from .grouping import DCASE2025_VOCABULARY, LabeledSources
from .losses import (ca_pi_sdr_loss, ca_sdr_loss, loss_for_permutation, pi_sdr_loss,
                     sdr_matrix)
from .metrics import MetricConfig, ca_pi_sdri, ca_sdri_baseline
from .synth import SceneSpec, generate_scene, identity_is_optimal, make_estimate_with_sdr, oracle_estimates

VOCAB = DCASE2025_VOCABULARY
SHORT_DURATION_S = 0.1


@dataclass
class CheckResult:
    name: str
    passed: bool
    cases: int
    seconds: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" - {self.detail}" if self.detail else ""
        return f"[{status}] {self.name}: {self.cases} cases in {self.seconds:.2f}s{extra}"


def _rng(seed, *key):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def _short_scene(rng, labels, duration_s=SHORT_DURATION_S):
    spec = SceneSpec(
        seed=int(rng.integers(0, 2**62)),
        label_assignment=tuple(labels),
        duration_s=duration_s,
        n_interference=int(rng.integers(0, 3)),
    )
    return generate_scene(spec)


def _noisy_estimate(rng, ref: Waveform) -> Waveform:
    return make_estimate_with_sdr(ref, float(rng.uniform(-5.0, 25.0)), int(rng.integers(0, 2**62)))


# -- criterion: reduction to the label-matched baseline ---------------------

def distinct_label_instance(rng):
    """Random mixture with unique labels on both sides and random FN/FP/mislabels."""
    k = int(rng.integers(1, 4))
    labels = [str(x) for x in rng.choice(VOCAB, size=k + 3, replace=False)]
    ref_labels, spare = labels[:k], labels[k:]
    scene = _short_scene(rng, ref_labels)
    ests = []
    for label, ref in scene.references:
        roll = rng.random()
        if roll < 0.15:
            continue  # missed source
        if roll < 0.25 and spare:
            label = spare.pop()  # wrong label: one FN plus one FP
        ests.append((label, _noisy_estimate(rng, ref)))
    if spare and rng.random() < 0.4:
        ests.append((spare.pop(), _noisy_estimate(rng, scene.mixture_ref)))
    order = rng.permutation(len(ests))
    ests = LabeledSources(ests[i] for i in order)
    if rng.random() < 0.5:
        cfg = MetricConfig()
    else:
        cfg = MetricConfig(penalty_fn=float(rng.uniform(-10, 0)), penalty_fp=float(rng.uniform(-10, 0)))
    return scene, ests, cfg


def check_reduction(n_mixtures: int = 1000, seed: int = 1) -> CheckResult:
    start = time.perf_counter()
    failures = 0
    for n in range(n_mixtures):
        scene, ests, cfg = distinct_label_instance(_rng(seed, n))
        a = ca_pi_sdri(scene.references, ests, scene.mixture_ref, cfg).metric_db
        b = ca_sdri_baseline(scene.references, ests, scene.mixture_ref, cfg)
        failures += a != b
    return CheckResult("reduction to CA-SDRi (exact)", failures == 0, n_mixtures,
                       time.perf_counter() - start, f"{failures} mismatches")


# -- criterion: fast assignment vs enumeration oracle ------------------------

def random_score_matrix(rng):
    """Random matrix with min dimension <= 5; a third use small integers to force ties."""
    n = int(rng.integers(0, 6))
    m = int(rng.integers(n, 8))
    shape = (n, m) if rng.random() < 0.5 else (m, n)
    if rng.random() < 1 / 3:
        return rng.integers(-3, 4, size=shape).astype(float)
    return rng.normal(0.0, 10.0, size=shape)


def check_oracle_equivalence(n_matrices: int = 500, seed: int = 2) -> CheckResult:
    start = time.perf_counter()
    failures = 0
    for n in range(n_matrices):
        m = random_score_matrix(_rng(seed, n))
        fast = solve_max_assignment(m)
        slow = solve_max_assignment_bruteforce(m)
        failures += fast.objective != slow.objective or fast.pairs != slow.pairs
    return CheckResult("assignment vs brute force (objective and pairs)", failures == 0, n_matrices,
                       time.perf_counter() - start, f"{failures} mismatches")


# -- criterion: loss ordering chain ------------------------------------------

def duplicate_loss_instance(rng, n_samples: int = 256):
    """Random oracle-label loss instance; most draws contain a repeated label."""
    k = int(rng.integers(1, 5))
    pool = [str(x) for x in rng.choice(VOCAB, size=k, replace=False)]
    if k == 1:
        n_unique = 1
    elif rng.random() < 0.2:
        n_unique = k
    else:
        n_unique = int(rng.integers(1, k))
    labels = [pool[int(rng.integers(0, n_unique))] for _ in range(k)]
    labels[:n_unique] = pool[:n_unique]
    sr = 16000
    refs = [rng.standard_normal(n_samples) for _ in range(k)]
    mixing = np.eye(k) + rng.uniform(0, 0.8, size=(k, k))
    ests = [sum(mixing[i, j] * refs[j] for j in range(k)) + 0.3 * rng.standard_normal(n_samples)
            for i in range(k)]
    order = rng.permutation(k)
    ref_ls = LabeledSources((labels[i], Waveform(refs[i], sr)) for i in range(k))
    est_ls = LabeledSources((labels[order[i]], Waveform(ests[order[i]], sr)) for i in range(k))
    return est_ls, ref_ls


def check_loss_ordering(n_instances: int = 1000, n_seeds: int = 16, seed: int = 3) -> CheckResult:
    start = time.perf_counter()
    failures = 0
    for n in range(n_instances):
        ests, refs = duplicate_loss_instance(_rng(seed, n))
        pi = pi_sdr_loss(ests, refs).loss_value
        capi = ca_pi_sdr_loss(ests, refs)
        ok = pi <= capi.loss_value
        for s in range(n_seeds):
            ok &= capi.loss_value <= ca_sdr_loss(ests, refs, mapping_seed=s).loss_value

        # enumerate label-preserving alignments: canon[j] is the estimate holding
        # the same within-label rank as reference j
        scores = sdr_matrix(ests.waveforms, refs.waveforms)
        est_by_label: dict = {}
        for i, label in enumerate(ests.labels):
            est_by_label.setdefault(label, []).append(i)
        canon = [est_by_label[label].pop(0) for label in refs.labels]
        best = math.inf
        for p in enumerate_class_permutations(refs.labels):
            perm = [canon[p[k]] for k in range(len(p))]
            best = min(best, loss_for_permutation(scores, perm).loss_value)
        ok &= capi.loss_value == best
        failures += not ok
    return CheckResult("loss chain PI <= CA-PI <= CA(seed), CA-PI == enumeration min", failures == 0,
                       n_instances, time.perf_counter() - start, f"{failures} violations")


# -- criterion: closed-form metric on constructed estimates -------------------

def check_closed_form(n_scenes: int = 200, seed: int = 4, duration_s: float = 1.0,
                      tol_db: float = 1e-6) -> CheckResult:
    start = time.perf_counter()
    worst = 0.0
    failures = 0
    for n in range(n_scenes):
        rng = _rng(seed, n)
        k = int(rng.integers(1, 4))
        pool = [str(x) for x in rng.choice(VOCAB, size=k + 2, replace=False)]
        labels = [pool[int(rng.integers(0, k))] for _ in range(k)]
        scene = _short_scene(rng, labels, duration_s)
        est_seed = int(rng.integers(0, 2**31))
        for _ in range(100):
            targets = rng.uniform(0.0, 20.0, size=k)
            ests = oracle_estimates(scene, targets, est_seed)
            if identity_is_optimal(scene, ests):
                break
        else:
            failures += 1
            continue
        res = ca_pi_sdri(scene.references, ests, scene.mixture_ref)
        err = abs(res.metric_db - math.fsum(targets) / k)
        worst = max(worst, err)
        ok = err <= tol_db

        # one false positive under a new label: numerator unchanged, one more prediction
        with_fp = LabeledSources(list(ests) + [(pool[-1], scene.mixture_ref)])
        res_fp = ca_pi_sdri(scene.references, with_fp, scene.mixture_ref)
        total = math.fsum(c.p_value for c in res.components)
        ok &= res_fp.total_n == res.total_n + 1
        ok &= res_fp.metric_db == total / (res.total_n + 1)
        ok &= math.isclose(res_fp.metric_db, res.metric_db * res.total_n / (res.total_n + 1),
                           rel_tol=1e-12, abs_tol=1e-12)

        # a poor false positive inside an existing class leaves that class sum alone
        poor = scene.mixture_ref.scaled(-1.0)
        with_fp2 = LabeledSources(list(ests) + [(labels[0], poor)])
        res_fp2 = ca_pi_sdri(scene.references, with_fp2, scene.mixture_ref)
        before = {c.label: c.p_value for c in res.components}
        after = {c.label: c.p_value for c in res_fp2.components}
        ok &= before == after and res_fp2.total_n == res.total_n + 1
        failures += not ok
    return CheckResult("closed-form CA-PI-SDRi and FP dilution", failures == 0, n_scenes,
                       time.perf_counter() - start, f"max |error| {worst:.2e} dB, {failures} failures")


# -- criterion: same-class reordering invariance -------------------------------

def duplicate_metric_instance(rng):
    k = int(rng.integers(2, 4))
    pool = [str(x) for x in rng.choice(VOCAB, size=3, replace=False)]
    labels = [pool[0], pool[0]] + [pool[int(rng.integers(0, 2))] for _ in range(k - 2)]
    labels = [labels[i] for i in rng.permutation(k)]
    scene = _short_scene(rng, labels)
    ests = []
    for label, ref in scene.references:
        if rng.random() < 0.15:
            continue
        ests.append((label, _noisy_estimate(rng, ref)))
    if rng.random() < 0.4:
        label = pool[int(rng.integers(0, 3))]
        ests.append((label, _noisy_estimate(rng, scene.mixture_ref)))
    return scene, LabeledSources(ests)


def _swap_within_label(seq: LabeledSources, rng) -> LabeledSources:
    order = list(range(len(seq)))
    by_label: dict = {}
    for i, label in enumerate(seq.labels):
        by_label.setdefault(label, []).append(i)
    for idx in by_label.values():
        if len(idx) > 1:
            shuffled = [idx[j] for j in rng.permutation(len(idx))]
            if shuffled == idx:
                shuffled = idx[1:] + idx[:1]
            for a, b in zip(idx, shuffled):
                order[a] = b
    return seq.reordered(order)


def check_duplicate_invariance(n_cases: int = 200, seed: int = 5) -> CheckResult:
    start = time.perf_counter()
    failures = 0
    for n in range(n_cases):
        rng = _rng(seed, n)
        scene, ests = duplicate_metric_instance(rng)
        refs = scene.references
        y = scene.mixture_ref
        base = ca_pi_sdri(refs, ests, y).metric_db
        ok = ca_pi_sdri(_swap_within_label(refs, rng), ests, y).metric_db == base
        ok &= ca_pi_sdri(refs, _swap_within_label(ests, rng), y).metric_db == base
        ok &= ca_pi_sdri(_swap_within_label(refs, rng), _swap_within_label(ests, rng), y).metric_db == base
        try:
            ca_sdri_baseline(refs, ests, y)
            ok = False
        except DuplicateLabels:
            pass
        failures += not ok
    return CheckResult("same-class reordering invariance, baseline rejects duplicates", failures == 0,
                       n_cases, time.perf_counter() - start, f"{failures} failures")


SELFTEST_COUNTS = {"reduction": 200, "oracle": 150, "losses": 200}


def run_selftest(scale: float = 1.0) -> list[CheckResult]:
    """Reduced versions of the reduction, oracle and loss-ordering suites."""
    c = {k: max(1, int(v * scale)) for k, v in SELFTEST_COUNTS.items()}
    return [
        check_reduction(c["reduction"]),
        check_oracle_equivalence(c["oracle"]),
        check_loss_ordering(c["losses"]),
    ]
