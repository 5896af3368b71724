"""Ordinal scores to preference pairs.

Instances are grouped into levels of equal gold score. Only adjacent levels are
paired, which is the smallest pair set whose transitive closure recovers the
full strict order between levels.
"""
from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .corpus import Dataset

PAIRS_HEADER = ("worse_id", "better_id")


class PreferencePair(NamedTuple):
    """``better_id`` was judged funnier than ``worse_id``."""

    worse_id: str
    better_id: str


@dataclass(frozen=True)
class PairGenConfig:
    cap_per_better: int = 500
    keep_fraction: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.cap_per_better < 1:
            raise ValueError("cap_per_better must be >= 1")
        if not 0.0 < self.keep_fraction <= 1.0:
            raise ValueError("keep_fraction must lie in (0, 1]")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def score_levels(dataset: Dataset) -> list[tuple[float, list[str]]]:
    """Group instance ids by gold score, lowest score first."""
    groups: dict[float, list[str]] = defaultdict(list)
    for inst in dataset:
        if inst.gold_score is None:
            raise ValueError(f"instance {inst.id!r} has no gold score")
        groups[inst.gold_score].append(inst.id)
    return [(score, groups[score]) for score in sorted(groups)]


def generate_minimal_pairs(levels: Sequence[tuple[float, Sequence[str]]]) -> list[PreferencePair]:
    if not levels:
        raise ValueError("levels must be non-empty")
    scores = [s for s, _ in levels]
    if any(a >= b for a, b in zip(scores, scores[1:])):
        raise ValueError("levels must be sorted by strictly increasing score")
    pairs = []
    for (_, lower), (_, upper) in zip(levels, levels[1:]):
        pairs.extend(PreferencePair(w, b) for w in lower for b in upper)
    return pairs


def minimal_pair_count(levels: Sequence[tuple[float, Sequence[str]]]) -> int:
    return sum(len(a) * len(b) for (_, a), (_, b) in zip(levels, levels[1:]))


def subsample_pairs(pairs: Sequence[PreferencePair], config: PairGenConfig) -> list[PreferencePair]:
    """Cap each instance's appearances as the funnier item, then keep a random fraction.

    Both stages draw from a single PCG64 stream seeded with ``config.seed``;
    retained pairs keep their input order.
    """
    return subsample_stages(pairs, config)[1]


def subsample_stages(
    pairs: Sequence[PreferencePair], config: PairGenConfig
) -> tuple[list[PreferencePair], list[PreferencePair]]:
    """Like :func:`subsample_pairs` but also return the capped intermediate set."""
    if not pairs:
        return [], []
    rng = np.random.Generator(np.random.PCG64(config.seed))

    by_better: dict[str, list[int]] = defaultdict(list)
    for i, p in enumerate(pairs):
        by_better[p.better_id].append(i)
    kept: list[int] = []
    # first-appearance order keeps the stream usage deterministic
    for positions in by_better.values():
        if len(positions) <= config.cap_per_better:
            kept.extend(positions)
        else:
            chosen = rng.choice(len(positions), size=config.cap_per_better, replace=False)
            kept.extend(positions[j] for j in chosen)
    kept.sort()
    capped = [pairs[i] for i in kept]

    if config.keep_fraction < 1.0:
        n_keep = max(1, int(np.floor(len(kept) * config.keep_fraction)))
        chosen = rng.choice(len(kept), size=n_keep, replace=False)
        kept = sorted(kept[j] for j in chosen)
    return capped, [pairs[i] for i in kept]


def write_pairs(pairs: Iterable[PreferencePair], path: str | Path, metadata: dict | None = None) -> None:
    """Write a ``worse_id<TAB>better_id`` file and, optionally, a ``.meta.json`` sidecar."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(PAIRS_HEADER)
        writer.writerows(pairs)
    if metadata is not None:
        with open(metadata_path(path), "w", encoding="utf-8") as fh:
            json.dump(metadata, fh, indent=2, sort_keys=True)
            fh.write("\n")


def metadata_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def read_pairs(path: str | Path) -> list[PreferencePair]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        header = next(reader, None)
        if header is None or tuple(header) != PAIRS_HEADER:
            raise ValueError(f"{path}: expected header {'<TAB>'.join(PAIRS_HEADER)}")
        pairs = []
        for row_no, row in enumerate(reader, start=2):
            if len(row) != 2:
                raise ValueError(f"{path}: row {row_no} should have 2 fields, found {len(row)}")
            if row[0] == row[1]:
                raise ValueError(f"{path}: row {row_no} pairs {row[0]!r} with itself")
            pairs.append(PreferencePair(row[0], row[1]))
    return pairs


def pairgen_metadata(config: PairGenConfig, n_minimal: int, n_capped: int, n_final: int) -> dict:
    return {
        "config": asdict(config),
        "rng": "numpy.PCG64",
        "counts": {"minimal": n_minimal, "capped": n_capped, "final": n_final},
    }
