"""Mixture-level evaluation: CA-PI-SDRi, the CA-SDRi baseline and PI-SDRi.

For every label in the union of reference and estimate labels, the matched
(TP) estimate/reference pairs are chosen to maximise the summed SDRi; each
unmatched source adds a penalty. The mixture score is the sum of the
per-label components divided by the total number of true and false
predictions, so false predictions dilute the score even at zero penalty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .assignment import Assignment, solve_max_assignment
from .core import DEFAULT_GUARDS, NumericGuards, Waveform, check_compatible, sdr
from .errors import CountMismatch, DuplicateLabels, EmptyReference
from .grouping import ClassGroup, LabeledSources, group_by_label

# (kind, waveform, config) -> penalty in dB for that one false prediction;
# kind is "fn" (unmatched reference) or "fp" (unmatched estimate).
PenaltyHook = Callable[[str, Waveform, "MetricConfig"], float]


@dataclass(frozen=True)
class MetricConfig:
    penalty_fn: float = 0.0
    penalty_fp: float = 0.0
    guards: NumericGuards = DEFAULT_GUARDS
    penalty_hook: Optional[PenaltyHook] = field(default=None, compare=False)

    def __post_init__(self):
        if not (math.isfinite(self.penalty_fn) and math.isfinite(self.penalty_fp)):
            raise ValueError("penalties must be finite")


DEFAULT_CONFIG = MetricConfig()


@dataclass(frozen=True)
class ClassComponent:
    """Summed score of one label and how it was obtained.

    ``assignment`` pairs are (estimate, reference) indices into the
    original input sequences, not into the group.
    """

    label: str
    p_value: float
    n_total: int
    assignment: Assignment
    counts: tuple[int, int, int]


@dataclass(frozen=True)
class MixtureEvaluation:
    components: tuple[ClassComponent, ...]
    metric_db: float
    total_n: int

    @property
    def counts(self) -> tuple[int, int, int]:
        tp = sum(c.counts[0] for c in self.components)
        fn = sum(c.counts[1] for c in self.components)
        fp = sum(c.counts[2] for c in self.components)
        return tp, fn, fp


def sdri_matrix(ests: Sequence[Waveform], refs: Sequence[Waveform], mixture_ref: Waveform,
                guards: NumericGuards = DEFAULT_GUARDS) -> np.ndarray:
    """SDRi of every estimate (rows) against every reference (columns).

    The mixture SDR of each reference is computed once.
    """
    out = np.empty((len(ests), len(refs)))
    for j, ref in enumerate(refs):
        check_compatible(ref, mixture_ref)
        base = sdr(mixture_ref, ref, guards)
        for i, est in enumerate(ests):
            out[i, j] = sdr(est, ref, guards) - base
    return out


def _penalty_sum(kind: str, waves, count: int, flat: float, cfg: MetricConfig) -> float:
    if cfg.penalty_hook is None:
        return count * flat
    return math.fsum(cfg.penalty_hook(kind, w, cfg) for w in waves)


def class_component(group: ClassGroup, mixture_ref: Waveform,
                    cfg: MetricConfig = DEFAULT_CONFIG) -> ClassComponent:
    """Penalties for unmatched sources plus the best summed SDRi of matched ones."""
    scores = sdri_matrix(group.ests, group.refs, mixture_ref, cfg.guards)
    local = solve_max_assignment(scores)
    used_est = {i for i, _ in local.pairs}
    used_ref = {j for _, j in local.pairs}
    fn_waves = [w for j, w in enumerate(group.refs) if j not in used_ref]
    fp_waves = [w for i, w in enumerate(group.ests) if i not in used_est]
    p_value = (_penalty_sum("fn", fn_waves, group.n_fn, cfg.penalty_fn, cfg)
               + _penalty_sum("fp", fp_waves, group.n_fp, cfg.penalty_fp, cfg)
               + local.objective)
    est_idx = group.est_indices or range(len(group.ests))
    ref_idx = group.ref_indices or range(len(group.refs))
    pairs = tuple(sorted((est_idx[i], ref_idx[j]) for i, j in local.pairs))
    return ClassComponent(
        label=group.label,
        p_value=p_value,
        n_total=group.n_total,
        assignment=Assignment(pairs, local.objective),
        counts=(group.n_tp, group.n_fn, group.n_fp),
    )


def ca_pi_sdri(refs: LabeledSources, ests: LabeledSources, mixture_ref: Waveform,
               cfg: MetricConfig = DEFAULT_CONFIG) -> MixtureEvaluation:
    """Class-aware permutation-invariant SDRi of one mixture."""
    if len(refs) == 0:
        raise EmptyReference("at least one reference source is required")
    components = tuple(class_component(g, mixture_ref, cfg) for g in group_by_label(refs, ests))
    total_n = sum(c.n_total for c in components)
    metric = math.fsum(c.p_value for c in components) / total_n
    return MixtureEvaluation(components, metric, total_n)


def ca_sdri_baseline(refs: LabeledSources, ests: LabeledSources, mixture_ref: Waveform,
                     cfg: MetricConfig = DEFAULT_CONFIG) -> float:
    """Class-aware SDRi with plain label matching.

    Only defined when labels are unique on both sides.
    """
    for name, seq in (("reference", refs), ("estimate", ests)):
        if seq.has_duplicates():
            raise DuplicateLabels(f"{name} labels are not unique: {list(seq.labels)}")
    if len(refs) == 0:
        raise EmptyReference("at least one reference source is required")
    ref_by_label = dict(refs)
    est_by_label = dict(ests)
    terms = []
    for label in sorted(set(ref_by_label) | set(est_by_label)):
        ref = ref_by_label.get(label)
        est = est_by_label.get(label)
        n_fn = int(est is None)
        n_fp = int(ref is None)
        matched = 0.0
        if ref is not None and est is not None:
            check_compatible(est, ref, mixture_ref)
            matched = math.fsum([sdr(est, ref, cfg.guards) - sdr(mixture_ref, ref, cfg.guards)])
        penalty_fn = _penalty_sum("fn", [ref] if n_fn else [], n_fn, cfg.penalty_fn, cfg)
        penalty_fp = _penalty_sum("fp", [est] if n_fp else [], n_fp, cfg.penalty_fp, cfg)
        terms.append(penalty_fn + penalty_fp + matched)
    return math.fsum(terms) / len(terms)


def pi_sdri(refs: LabeledSources, ests: LabeledSources, mixture_ref: Waveform,
            cfg: MetricConfig = DEFAULT_CONFIG) -> float:
    """Label-blind permutation-invariant SDRi: best full matching, averaged over K."""
    if len(refs) != len(ests):
        raise CountMismatch(f"{len(ests)} estimates for {len(refs)} references")
    if len(refs) == 0:
        raise EmptyReference("at least one reference source is required")
    scores = sdri_matrix(ests.waveforms, refs.waveforms, mixture_ref, cfg.guards)
    return solve_max_assignment(scores).objective / len(refs)
