"""Instance and annotation loading for ordinal humour-rating corpora.

Two on-disk formats are supported:

``haha_csv``
    Comma separated with a header row
    ``id,text,is_humorous,votes_no,votes_1,...,votes_5,funniness_average``.
    The last column may be empty. An optional trailing ``lemmas`` column holds
    space-separated lemmas.
``plain_tsv``
    Tab separated with a header row ``id<TAB>text[<TAB>gold_score]`` and an
    optional ``lemmas`` column.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Sequence

logger = logging.getLogger(__name__)

HAHA_COLUMNS = (
    "id", "text", "is_humorous", "votes_no",
    "votes_1", "votes_2", "votes_3", "votes_4", "votes_5",
    "funniness_average",
)
TSV_COLUMNS = ("id", "text", "gold_score")
FORMATS = ("haha_csv", "plain_tsv")


class LoadError(ValueError):
    """Raised when an instance file cannot be parsed or violates an invariant."""


class UndefinedAverageError(ValueError):
    pass


@dataclass(frozen=True)
class AnnotationRecord:
    votes_not_humour: int
    votes: tuple[int, int, int, int, int]  # ratings 1..5

    def __post_init__(self):
        if len(self.votes) != 5:
            raise ValueError("votes must hold exactly five rating counts")
        if self.votes_not_humour < 0 or any(v < 0 for v in self.votes):
            raise ValueError("vote counts must be non-negative")

    @property
    def numeric_votes(self) -> int:
        return sum(self.votes)

    @property
    def total_votes(self) -> int:
        return self.votes_not_humour + self.numeric_votes

    def class_violations(self, is_humorous: bool) -> list[str]:
        """Describe how this record breaks the class-membership rules, if at all."""
        problems = []
        if is_humorous:
            if self.numeric_votes < 3:
                problems.append(f"positive row has {self.numeric_votes} numeric votes (< 3)")
            if self.total_votes < 5:
                problems.append(f"positive row has {self.total_votes} votes in total (< 5)")
        elif self.votes_not_humour < 3:
            problems.append(f"negative row has {self.votes_not_humour} 'not humour' votes (< 3)")
        return problems


@dataclass(frozen=True)
class Instance:
    id: str
    text: str
    tokens: tuple[str, ...] = ()
    lemmas: tuple[str, ...] | None = None
    annotation: AnnotationRecord | None = None
    gold_label: bool | None = None
    gold_score: float | None = None

    def __post_init__(self):
        if self.gold_score is not None:
            if self.gold_label is None:
                raise ValueError(f"instance {self.id!r}: gold_score without gold_label")
            if self.gold_label != (self.gold_score > 0):
                raise ValueError(
                    f"instance {self.id!r}: gold_label={self.gold_label} "
                    f"inconsistent with gold_score={self.gold_score}"
                )


@dataclass(frozen=True)
class Dataset:
    instances: tuple[Instance, ...]
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index: dict[str, int] = {}
        for pos, inst in enumerate(self.instances):
            if inst.id in index:
                raise LoadError(f"duplicate instance id {inst.id!r} at position {pos}")
            index[inst.id] = pos
        object.__setattr__(self, "index", index)

    @classmethod
    def from_instances(cls, instances: Iterable[Instance]) -> "Dataset":
        return cls(tuple(instances))

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self) -> Iterator[Instance]:
        return iter(self.instances)

    def __getitem__(self, key: str) -> Instance:
        return self.instances[self.index[key]]

    def __contains__(self, key: object) -> bool:
        return key in self.index

    @property
    def ids(self) -> list[str]:
        return [inst.id for inst in self.instances]

    def map(self, fn) -> "Dataset":
        return Dataset(tuple(fn(inst) for inst in self.instances))


def average_funniness(record: AnnotationRecord, is_humorous: bool) -> float:
    """Mean numeric rating of a humorous record; 0 for the negative class."""
    if not is_humorous:
        return 0.0
    n = record.numeric_votes
    if n == 0:
        raise UndefinedAverageError("positive-class record has no numeric votes")
    return sum(k * v for k, v in enumerate(record.votes, start=1)) / n


def _normalise_newlines(text: str) -> str:
    return text.replace("\r\n", "\n").replace("\r", "\n")


def _parse_count(value: str, row: int, column: str) -> int:
    try:
        count = int(value.strip())
    except ValueError:
        raise LoadError(f"row {row}, column {column!r}: malformed count {value!r}") from None
    if count < 0:
        raise LoadError(f"row {row}, column {column!r}: negative count {count}")
    return count


def _parse_bool(value: str, row: int, column: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes"):
        return True
    if v in ("0", "false", "no"):
        return False
    raise LoadError(f"row {row}, column {column!r}: expected a 0/1 flag, got {value!r}")


def _parse_optional_float(value: str | None, row: int, column: str) -> float | None:
    if value is None or value.strip() == "":
        return None
    try:
        x = float(value)
    except ValueError:
        raise LoadError(f"row {row}, column {column!r}: malformed number {value!r}") from None
    if not math.isfinite(x):
        raise LoadError(f"row {row}, column {column!r}: non-finite value {value!r}")
    return x


def _lemmas(value: str | None) -> tuple[str, ...] | None:
    if value is None or value.strip() == "":
        return None
    return tuple(value.split())


def _haha_instance(rec: dict[str, str], row: int, strict: bool) -> Instance:
    label = _parse_bool(rec["is_humorous"], row, "is_humorous")
    counts = [_parse_count(rec[c], row, c) for c in HAHA_COLUMNS[3:9]]
    record = AnnotationRecord(counts[0], tuple(counts[1:]))
    problems = record.class_violations(label)
    if problems:
        msg = f"row {row} ({rec['id']!r}): " + "; ".join(problems)
        if strict:
            raise LoadError(msg)
        logger.warning(msg)
    try:
        score = average_funniness(record, label)
    except UndefinedAverageError:
        score = _parse_optional_float(rec.get("funniness_average"), row, "funniness_average")
        if score is not None and score <= 0:
            score = None
        logger.warning("row %d (%r): positive row without numeric votes", row, rec["id"])
    return Instance(
        id=rec["id"],
        text=_normalise_newlines(rec["text"]),
        lemmas=_lemmas(rec.get("lemmas")),
        annotation=record,
        gold_label=label,
        gold_score=score,
    )


def _tsv_instance(rec: dict[str, str], row: int) -> Instance:
    score = _parse_optional_float(rec.get("gold_score"), row, "gold_score")
    if score is not None and score < 0:
        raise LoadError(f"row {row}, column 'gold_score': negative score {score}")
    return Instance(
        id=rec["id"],
        text=_normalise_newlines(rec["text"]),
        lemmas=_lemmas(rec.get("lemmas")),
        gold_label=None if score is None else score > 0,
        gold_score=score,
    )


def load_instances(path: str | Path, format: str = "haha_csv", strict: bool = False) -> Dataset:
    """Read an instance file into a :class:`Dataset`.

    Rows that break the class-membership vote rules are kept with a warning
    unless ``strict`` is set.
    """
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    path = Path(path)
    delimiter = "," if format == "haha_csv" else "\t"
    required = HAHA_COLUMNS if format == "haha_csv" else TSV_COLUMNS[:2]
    try:
        with open(path, encoding="utf-8", errors="strict", newline="") as fh:
            reader = csv.DictReader(fh, delimiter=delimiter)
            header = reader.fieldnames or []
            missing = [c for c in required if c not in header]
            if missing:
                raise LoadError(f"{path}: header lacks required columns {missing} for {format}")
            instances = []
            seen: dict[str, int] = {}
            # header is row 1
            for row, rec in enumerate(reader, start=2):
                if None in rec or any(rec.get(c) is None for c in required):
                    raise LoadError(f"{path}: row {row} has the wrong number of fields")
                ident = rec["id"].strip()
                if not ident:
                    raise LoadError(f"{path}: row {row} has an empty id")
                if ident in seen:
                    raise LoadError(f"{path}: row {row} repeats id {ident!r} (first seen on row {seen[ident]})")
                seen[ident] = row
                rec["id"] = ident
                try:
                    inst = _haha_instance(rec, row, strict) if format == "haha_csv" else _tsv_instance(rec, row)
                except LoadError as exc:
                    raise LoadError(f"{path}: {exc}") from None
                instances.append(inst)
    except UnicodeDecodeError as exc:
        raise LoadError(f"{path}: invalid UTF-8 ({exc})") from None
    return Dataset(tuple(instances))


def save_instances(dataset: Dataset, path: str | Path, format: str = "haha_csv") -> None:
    """Write ``dataset`` so that :func:`load_instances` reproduces it."""
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}")
    with_lemmas = any(inst.lemmas for inst in dataset)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if format == "haha_csv":
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(HAHA_COLUMNS + (("lemmas",) if with_lemmas else ()))
            for inst in dataset:
                if inst.annotation is None or inst.gold_label is None:
                    raise ValueError(f"instance {inst.id!r} has no annotation to write as haha_csv")
                a = inst.annotation
                avg = "" if not inst.gold_label or inst.gold_score is None else repr(inst.gold_score)
                row = [inst.id, inst.text, int(inst.gold_label), a.votes_not_humour, *a.votes, avg]
                if with_lemmas:
                    row.append(" ".join(inst.lemmas or ()))
                writer.writerow(row)
        else:
            writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
            writer.writerow(TSV_COLUMNS + (("lemmas",) if with_lemmas else ()))
            for inst in dataset:
                row = [inst.id, inst.text, "" if inst.gold_score is None else repr(inst.gold_score)]
                if with_lemmas:
                    row.append(" ".join(inst.lemmas or ()))
                writer.writerow(row)


def gold_scores(dataset: Dataset, ids: Sequence[str] | None = None) -> list[float]:
    ids = dataset.ids if ids is None else ids
    out = []
    for i in ids:
        score = dataset[i].gold_score
        if score is None:
            raise ValueError(f"instance {i!r} has no gold score")
        out.append(score)
    return out


def with_tokens(inst: Instance, tokens: Sequence[str]) -> Instance:
    return replace(inst, tokens=tuple(tokens))
