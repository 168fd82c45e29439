"""Labeled source collections and per-label TP/FN/FP accounting."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import Waveform, check_compatible
from .errors import UnknownLabel

K_MAX = 3

# DCASE 2025 Task 4 sound-event classes; optional validation list only.
DCASE2025_VOCABULARY = (
    "AlarmClock", "BicycleBell", "Blender", "Buzzer", "Clapping", "Cough",
    "CupboardOpenClose", "Dishes", "Doorbell", "FootSteps", "HairDryer",
    "MechanicalFans", "MusicalKeyboard", "Percussion", "Pour", "Speech",
    "Typing", "VacuumCleaner",
)


def check_label(label) -> str:
    if not isinstance(label, str) or not label:
        raise ValueError(f"labels must be nonempty strings, got {label!r}")
    return label


class LabeledSources(Sequence):
    """Ordered (label, waveform) pairs sharing one length and sample rate.

    Behaves as a read-only sequence of ``(label, waveform)`` tuples.
    """

    def __init__(self, entries: Iterable[tuple[str, Waveform]] = ()):
        items = []
        for label, wave in entries:
            if not isinstance(wave, Waveform):
                raise TypeError(f"expected Waveform, got {type(wave).__name__}")
            items.append((check_label(label), wave))
        if len(items) > 1:
            check_compatible(*(w for _, w in items))
        self._entries = tuple(items)

    @classmethod
    def from_lists(cls, labels: Sequence[str], waves: Sequence[Waveform]) -> "LabeledSources":
        if len(labels) != len(waves):
            raise ValueError(f"{len(labels)} labels for {len(waves)} waveforms")
        return cls(zip(labels, waves))

    def __getitem__(self, i):
        return self._entries[i]

    def __len__(self):
        return len(self._entries)

    def __repr__(self):
        return f"LabeledSources(labels={list(self.labels)!r})"

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self._entries)

    @property
    def waveforms(self) -> tuple[Waveform, ...]:
        return tuple(w for _, w in self._entries)

    def has_duplicates(self) -> bool:
        return len(set(self.labels)) != len(self)

    def check_count(self, k_max: int = K_MAX, *, allow_empty: bool = False) -> None:
        lo = 0 if allow_empty else 1
        if not lo <= len(self) <= k_max:
            raise ValueError(f"expected between {lo} and {k_max} sources, got {len(self)}")

    def reordered(self, order: Sequence[int]) -> "LabeledSources":
        return LabeledSources(self._entries[i] for i in order)


@dataclass(frozen=True)
class ClassGroup:
    """References and estimates that share one label.

    ``ref_indices`` / ``est_indices`` give each waveform's position in the
    original input sequences; empty means local order.
    """

    label: str
    refs: tuple[Waveform, ...]
    ests: tuple[Waveform, ...]
    ref_indices: tuple[int, ...] = ()
    est_indices: tuple[int, ...] = ()

    @property
    def n_tp(self) -> int:
        return min(len(self.refs), len(self.ests))

    @property
    def n_fn(self) -> int:
        return max(len(self.refs) - len(self.ests), 0)

    @property
    def n_fp(self) -> int:
        return max(len(self.ests) - len(self.refs), 0)

    @property
    def n_total(self) -> int:
        return self.n_tp + self.n_fn + self.n_fp


def group_by_label(refs: LabeledSources, ests: LabeledSources) -> list[ClassGroup]:
    """Partition references and estimates by label.

    One group per label in the union of both label sets, sorted by label.
    Within a group the original relative order is kept.
    """
    ref_idx: dict[str, list[int]] = {}
    est_idx: dict[str, list[int]] = {}
    for i, label in enumerate(refs.labels):
        ref_idx.setdefault(label, []).append(i)
    for i, label in enumerate(ests.labels):
        est_idx.setdefault(label, []).append(i)
    groups = []
    for label in sorted(set(ref_idx) | set(est_idx)):
        ri = tuple(ref_idx.get(label, ()))
        ei = tuple(est_idx.get(label, ()))
        groups.append(ClassGroup(
            label=label,
            refs=tuple(refs[i][1] for i in ri),
            ests=tuple(ests[i][1] for i in ei),
            ref_indices=ri,
            est_indices=ei,
        ))
    return groups


def count_predictions(group: ClassGroup) -> tuple[int, int, int, int]:
    """Return ``(n_tp, n_fn, n_fp, n_total)`` for one label."""
    return group.n_tp, group.n_fn, group.n_fp, group.n_total


def same_label_multiset(a: Sequence[str], b: Sequence[str]) -> bool:
    return Counter(a) == Counter(b)


def check_vocabulary(labels: Iterable[str], vocabulary: Iterable[str]) -> None:
    allowed = set(vocabulary)
    unknown = sorted(set(labels) - allowed)
    if unknown:
        raise UnknownLabel(f"labels not in vocabulary: {', '.join(unknown)}")
