"""Best-worst scaling counting scores from pairwise labels.

Each pair is a two-item choice set: the preferred item is "best", the other
"worst". An item's score is (#best - #worst) / #appearances.
"""
from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .pairgen import PreferencePair


@dataclass(frozen=True)
class BwsScores:
    scores: dict[str, float]
    appearances: dict[str, int]

    def get(self, ident: str) -> float:
        return self.scores.get(ident, 0.0)


def bws_scores(pairs: Iterable[PreferencePair], ids: Sequence[str] = ()) -> BwsScores:
    """Counting scores for every id in ``pairs``; extra ``ids`` that never appear score 0."""
    best: Counter[str] = Counter()
    worst: Counter[str] = Counter()
    for worse_id, better_id in pairs:
        best[better_id] += 1
        worst[worse_id] += 1
    seen = sorted(set(best) | set(worst) | set(ids))
    appearances = {i: best[i] + worst[i] for i in seen}
    scores = {i: (best[i] - worst[i]) / appearances[i] if appearances[i] else 0.0 for i in seen}
    return BwsScores(scores, appearances)


def write_bws_scores(result: BwsScores, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "score", "appearances"])
        for ident in result.scores:
            writer.writerow([ident, repr(result.scores[ident]), result.appearances[ident]])
