"""Value-level SDR training losses and the alignments that achieve them.

All three losses are ``-(1/K) * sum_k SDR(est[p[k]], ref[k])`` for some
permutation ``p``; they differ only in how ``p`` is picked:

* ``ca_pi_sdr_loss`` - best ``p`` among label-preserving permutations,
* ``ca_sdr_loss``    - one fixed or randomly drawn label-preserving ``p``,
* ``pi_sdr_loss``    - best ``p`` among all permutations, labels ignored.

``chosen_permutation[k]`` is the estimate index aligned with reference ``k``.
Since the sum splits over labels and label-preserving permutations only
shuffle within a label, the constrained minimum is solved as one independent
assignment problem per label.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .assignment import solve_max_assignment
from .core import DEFAULT_GUARDS, NumericGuards, Waveform, check_compatible, sdr
from .errors import CountMismatch, LabelMultisetMismatch
from .grouping import LabeledSources, same_label_multiset


@dataclass(frozen=True)
class LossResult:
    loss_value: float
    chosen_permutation: tuple[int, ...]
    per_pair_sdr: tuple[float, ...]


def sdr_matrix(ests: Sequence[Waveform], refs: Sequence[Waveform],
               guards: NumericGuards = DEFAULT_GUARDS) -> np.ndarray:
    """SDR of every estimate (rows) against every reference (columns)."""
    out = np.empty((len(ests), len(refs)))
    for i, est in enumerate(ests):
        for j, ref in enumerate(refs):
            out[i, j] = sdr(est, ref, guards)
    return out


def loss_for_permutation(scores: np.ndarray, perm: Sequence[int]) -> LossResult:
    """Loss of one alignment given the precomputed SDR matrix."""
    per_pair = tuple(float(scores[e, k]) for k, e in enumerate(perm))
    return LossResult(-math.fsum(per_pair) / len(per_pair), tuple(perm), per_pair)


def _check_pair(ests: LabeledSources, refs: LabeledSources, *, labels: bool) -> None:
    if len(ests) != len(refs):
        raise CountMismatch(f"{len(ests)} estimates for {len(refs)} references")
    if len(refs) == 0:
        raise ValueError("losses need at least one source")
    check_compatible(*ests.waveforms, *refs.waveforms)
    if labels and not same_label_multiset(ests.labels, refs.labels):
        raise LabelMultisetMismatch(
            f"estimate labels {list(ests.labels)} do not match reference labels {list(refs.labels)}")


def _indices_by_label(labels: Sequence[str]) -> dict[str, list[int]]:
    out: dict[str, list[int]] = {}
    for i, label in enumerate(labels):
        out.setdefault(label, []).append(i)
    return out


def ca_pi_sdr_loss(ests: LabeledSources, refs: LabeledSources,
                   guards: NumericGuards = DEFAULT_GUARDS) -> LossResult:
    """Negative mean SDR minimised over label-preserving alignments."""
    _check_pair(ests, refs, labels=True)
    scores = sdr_matrix(ests.waveforms, refs.waveforms, guards)
    est_idx = _indices_by_label(ests.labels)
    perm = [0] * len(refs)
    for label, ref_positions in sorted(_indices_by_label(refs.labels).items()):
        est_positions = est_idx[label]
        sub = scores[np.ix_(est_positions, ref_positions)]
        for i, j in solve_max_assignment(sub).pairs:
            perm[ref_positions[j]] = est_positions[i]
    return loss_for_permutation(scores, perm)


def draw_class_permutation(ests_labels: Sequence[str], refs_labels: Sequence[str],
                           seed: Optional[int]) -> tuple[int, ...]:
    """Label-preserving alignment: order-as-given, or a seeded uniform draw."""
    est_idx = _indices_by_label(ests_labels)
    rng = None if seed is None else np.random.Generator(np.random.PCG64(seed))
    perm = [0] * len(refs_labels)
    for label, ref_positions in sorted(_indices_by_label(refs_labels).items()):
        est_positions = est_idx[label]
        if rng is not None:
            est_positions = [est_positions[i] for i in rng.permutation(len(est_positions))]
        for r, e in zip(ref_positions, est_positions):
            perm[r] = e
    return tuple(perm)


def ca_sdr_loss(ests: LabeledSources, refs: LabeledSources, mapping_seed: Optional[int] = None,
                guards: NumericGuards = DEFAULT_GUARDS) -> LossResult:
    """Negative mean SDR at a single label-preserving alignment.

    Same-label estimates are matched in order of appearance when
    ``mapping_seed`` is None, otherwise in a seeded random order.
    """
    _check_pair(ests, refs, labels=True)
    scores = sdr_matrix(ests.waveforms, refs.waveforms, guards)
    return loss_for_permutation(scores, draw_class_permutation(ests.labels, refs.labels, mapping_seed))


def pi_sdr_loss(ests: LabeledSources, refs: LabeledSources,
                guards: NumericGuards = DEFAULT_GUARDS) -> LossResult:
    """Negative mean SDR minimised over all alignments, labels ignored."""
    _check_pair(ests, refs, labels=False)
    scores = sdr_matrix(ests.waveforms, refs.waveforms, guards)
    perm = [0] * len(refs)
    for i, j in solve_max_assignment(scores).pairs:
        perm[j] = i
    return loss_for_permutation(scores, perm)
