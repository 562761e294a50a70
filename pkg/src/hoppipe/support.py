"""Supporting-sentence selection: argmax of the additive set score.

The score of a candidate set is the sum of its member logits, maximized
over all sets that draw from exactly two paragraphs with at least one
sentence each. Additivity makes the optimum decomposable: each paragraph's
best contribution is the sum of its strictly positive logits (or its single
highest-logit sentence when none are positive), and the winning pair is the
two paragraphs with the largest contributions.

Ties are deterministic at every level: paragraph index, then sentence
index; equivalently, among equal-total sets, the lexicographically smallest
paragraph pair, then the fewest members, then the smallest member tuple.
brute_force_support applies exactly that order over an exhaustive
enumeration and exists as the oracle for select_support.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import SentenceRef
from .scoring import ScoreTable

BRUTE_FORCE_MAX_SENTENCES = 20


class SupportSelectionError(ValueError):
    pass


@dataclass(frozen=True)
class SupportSet:
    members: frozenset[SentenceRef]
    total: float

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("support set must be nonempty")
        if len({r.paragraph_index for r in self.members}) != 2:
            raise ValueError("support set must touch exactly two paragraphs")

    def paragraphs(self) -> tuple[int, int]:
        first, second = sorted({r.paragraph_index for r in self.members})
        return (first, second)


def _best_contribution(
    table: ScoreTable, paragraph_index: int
) -> tuple[float, list[SentenceRef]]:
    refs = sorted(
        (r for r in table.scores if r.paragraph_index == paragraph_index),
        key=lambda r: r.sentence_index,
    )
    positives = [r for r in refs if table.scores[r] > 0.0]
    if positives:
        return (sum(table.scores[r] for r in positives), positives)
    best = refs[0]
    for r in refs[1:]:
        if table.scores[r] > table.scores[best]:
            best = r
    return (table.scores[best], [best])


def select_support(table: ScoreTable) -> SupportSet:
    """Argmax support set via per-paragraph decomposition."""
    paragraphs = table.paragraph_indices()
    if len(paragraphs) < 2:
        raise SupportSelectionError(
            f"qid {table.qid}: need at least two paragraphs, got {len(paragraphs)}"
        )
    contributions = {p: _best_contribution(table, p) for p in paragraphs}
    ranked = sorted(paragraphs, key=lambda p: (-contributions[p][0], p))
    first, second = ranked[0], ranked[1]
    members = frozenset(contributions[first][1] + contributions[second][1])
    total = contributions[first][0] + contributions[second][0]
    return SupportSet(members=members, total=total)


def _subset_sums(logits: list[float]) -> tuple[np.ndarray, np.ndarray]:
    """Sums and sizes for all nonempty subsets; row m describes mask m+1.

    Sums accumulate in ascending sentence order so float totals associate
    exactly like a left-to-right sum over the same members.
    """
    sums = np.zeros(1, dtype=np.float64)
    sizes = np.zeros(1, dtype=np.int64)
    for value in logits:
        sums = np.concatenate([sums, sums + value])
        sizes = np.concatenate([sizes, sizes + 1])
    return sums[1:], sizes[1:]


def _members_of(mask: int, refs: list[SentenceRef]) -> list[SentenceRef]:
    return [refs[b] for b in range(len(refs)) if mask >> b & 1]


def brute_force_support(table: ScoreTable) -> SupportSet:
    """Exhaustive oracle over every set spanning exactly two paragraphs."""
    if len(table.scores) > BRUTE_FORCE_MAX_SENTENCES:
        raise SupportSelectionError(
            f"brute force refuses tables over {BRUTE_FORCE_MAX_SENTENCES} sentences"
        )
    paragraphs = table.paragraph_indices()
    if len(paragraphs) < 2:
        raise SupportSelectionError(
            f"qid {table.qid}: need at least two paragraphs, got {len(paragraphs)}"
        )

    per_para: dict[int, tuple[list[SentenceRef], np.ndarray, np.ndarray]] = {}
    for p in paragraphs:
        refs = sorted(
            (r for r in table.scores if r.paragraph_index == p),
            key=lambda r: r.sentence_index,
        )
        sums, sizes = _subset_sums([table.scores[r] for r in refs])
        per_para[p] = (refs, sums, sizes)

    best_total = -np.inf
    best_members: list[SentenceRef] | None = None
    for a_pos, p_a in enumerate(paragraphs):
        for p_b in paragraphs[a_pos + 1 :]:
            refs_a, sums_a, sizes_a = per_para[p_a]
            refs_b, sums_b, sizes_b = per_para[p_b]
            outer = sums_a[:, None] + sums_b[None, :]
            pair_max = float(outer.max())
            if pair_max <= best_total:
                continue  # an earlier (lex-smaller) pair keeps equal totals
            flat = np.flatnonzero(outer == pair_max)
            choice: tuple[int, tuple[SentenceRef, ...]] | None = None
            for pos in flat:
                ia, ib = divmod(int(pos), len(sums_b))
                size = int(sizes_a[ia]) + int(sizes_b[ib])
                members = _members_of(ia + 1, refs_a) + _members_of(ib + 1, refs_b)
                key = (size, tuple(members))
                if choice is None or key < choice:
                    choice = key
            assert choice is not None
            best_total = pair_max
            best_members = list(choice[1])

    assert best_members is not None
    return SupportSet(members=frozenset(best_members), total=best_total)
