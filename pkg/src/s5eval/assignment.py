"""Permutation sets and exact max-score assignment.

Two solvers share one contract:

* :func:`solve_max_assignment` - optimal rectangular assignment
  (shortest augmenting path, via :func:`scipy.optimize.linear_sum_assignment`)
  followed by a lexicographic tie-break pass.
* :func:`solve_max_assignment_bruteforce` - literal enumeration over all
  ordered estimate selections and unordered reference selections. Kept as
  the reference oracle.

Score matrices have estimates on rows and references on columns. All indices
are 0-based. Objectives are summed with :func:`math.fsum`, so the objective
of a pair set does not depend on the order its pairs are listed in.

Tie-break: among optimal pair sets, the one whose row-sorted pair sequence is
lexicographically smallest wins.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import SizeLimit

DEFAULT_ENUMERATION_LIMIT = math.factorial(10)
DEFAULT_BRUTEFORCE_MAX_PAIRS = 7


@dataclass(frozen=True)
class Assignment:
    """Disjoint (estimate_index, reference_index) pairs and their score sum."""

    pairs: tuple[tuple[int, int], ...]
    objective: float

    def __len__(self):
        return len(self.pairs)

    def as_mapping(self) -> dict[int, int]:
        """Estimate index -> reference index."""
        return dict(self.pairs)


def as_score_matrix(m) -> np.ndarray:
    """Validate and return ``m`` as a finite 2-D float64 array."""
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        if a.size == 0:
            return a.reshape(0, 0)
        raise ValueError(f"score matrix must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("score matrix contains NaN or Inf entries")
    return a


def pair_objective(m: np.ndarray, pairs) -> float:
    return math.fsum(m[r, c] for r, c in pairs)


def _make(m: np.ndarray, pairs) -> Assignment:
    pairs = tuple(sorted((int(r), int(c)) for r, c in pairs))
    return Assignment(pairs, pair_objective(m, pairs))


# -- enumeration -----------------------------------------------------------

def count_class_permutations(labels: Sequence) -> int:
    counts: dict = {}
    for label in labels:
        counts[label] = counts.get(label, 0) + 1
    return math.prod(math.factorial(n) for n in counts.values())


def enumerate_class_permutations(labels: Sequence, limit: int = DEFAULT_ENUMERATION_LIMIT
                                 ) -> list[tuple[int, ...]]:
    """All permutations ``p`` of ``range(len(labels))`` with ``labels[p[k]] == labels[k]``.

    Returned in lexicographic order, so the identity comes first.
    """
    if len(labels) == 0:
        raise ValueError("labels must be nonempty")
    total = count_class_permutations(labels)
    if total > limit:
        raise SizeLimit(f"{total} class-preserving permutations exceed the limit of {limit}")
    k = len(labels)
    out: list[tuple[int, ...]] = []
    perm = [0] * k
    used = [False] * k

    def extend(pos):
        if pos == k:
            out.append(tuple(perm))
            return
        for j in range(k):
            if not used[j] and labels[j] == labels[pos]:
                used[j] = True
                perm[pos] = j
                extend(pos + 1)
                used[j] = False

    extend(0)
    return out


def count_selections(k: int, l: int, ordered: bool) -> int:
    return math.perm(k, l) if ordered else math.comb(k, l)


def enumerate_selections(k: int, l: int, ordered: bool,
                         limit: int = DEFAULT_ENUMERATION_LIMIT) -> list[tuple[int, ...]]:
    """Ordered (``ordered=True``) or unordered selections of ``l`` of ``range(k)``."""
    if not 0 <= l <= k:
        raise ValueError(f"need 0 <= l <= k, got k={k}, l={l}")
    total = count_selections(k, l, ordered)
    if total > limit:
        raise SizeLimit(f"{total} selections exceed the limit of {limit}")
    gen = itertools.permutations if ordered else itertools.combinations
    return list(gen(range(k), l))


# -- solvers ---------------------------------------------------------------

def solve_max_assignment_bruteforce(m, max_pairs: int = DEFAULT_BRUTEFORCE_MAX_PAIRS
                                    ) -> Assignment:
    """Exhaustive max-score assignment.

    Every ordered selection of estimates is paired with every unordered
    selection of references; the best summed score wins, ties resolved by
    the lexicographic rule.
    """
    m = as_score_matrix(m)
    rows, cols = m.shape
    n = min(rows, cols)
    if n > max_pairs:
        raise SizeLimit(f"brute force limited to {max_pairs} pairs, matrix needs {n}")
    best_key = None
    best_pairs: tuple = ()
    best_value = 0.0
    for ests in itertools.permutations(range(rows), n):
        for refs in itertools.combinations(range(cols), n):
            pairs = tuple(sorted(zip(ests, refs)))
            value = pair_objective(m, pairs)
            if best_key is None or value > best_value or (value == best_value and pairs < best_key):
                best_key, best_pairs, best_value = pairs, pairs, value
    return Assignment(best_pairs, best_value)


def _lsa_pairs(sub: np.ndarray):
    if sub.size == 0:
        return []
    r, c = linear_sum_assignment(sub, maximize=True)
    return list(zip(r.tolist(), c.tolist()))


def solve_max_assignment(m) -> Assignment:
    """Optimal max-score assignment of ``min(rows, cols)`` disjoint pairs.

    An empty matrix gives an empty assignment with objective 0.
    """
    m = as_score_matrix(m)
    rows, cols = m.shape
    n = min(rows, cols)
    if n == 0:
        return Assignment((), 0.0)
    target = pair_objective(m, _lsa_pairs(m))

    # Fix pairs one at a time, smallest first, as long as the best completion
    # of the fixed prefix still reaches the optimum.
    prefix: list[tuple[int, int]] = []
    free_cols = list(range(cols))
    last_row = -1
    for t in range(n):
        needed_after = n - t - 1
        fallback = None
        chosen = None
        for r in range(last_row + 1, rows):
            rest_rows = list(range(r + 1, rows))
            if len(rest_rows) < needed_after:
                break
            for c in free_cols:
                rest_cols = [j for j in free_cols if j != c]
                sub = m[np.ix_(rest_rows, rest_cols)]
                tail = [(rest_rows[i], rest_cols[j]) for i, j in _lsa_pairs(sub)]
                value = pair_objective(m, prefix + [(r, c)] + tail)
                if value >= target:
                    target = value
                    chosen = (r, c)
                    break
                if fallback is None or value > fallback[0]:
                    fallback = (value, (r, c))
            if chosen is not None:
                break
        if chosen is None:
            # only reachable through float round-off in the solver
            chosen = fallback[1]
        prefix.append(chosen)
        free_cols.remove(chosen[1])
        last_row = chosen[0]
    return _make(m, prefix)
