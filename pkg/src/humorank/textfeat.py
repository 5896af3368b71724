"""Tokenisation and hand-crafted tweet features.

Every instance becomes one fixed-layout vector: the mean word embedding
followed by twelve scalar features (lexical statistics, dialogue heuristics and
surface counts). Scalars are standardised with parameters fitted on training
data; the embedding block is left as is.
"""
from __future__ import annotations

import csv
import json
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Dataset, Instance

PROTECTED_PREFIXES = ("#", "@", "http", "www", "-")

# Western emoticons; override with a one-per-line file.
DEFAULT_EMOTICONS = (
    ":)", ":-)", ":]", ":3", ":>", "=)", "=]", ":D", ":-D", "xD", "XD", "=D",
    ";)", ";-)", ";D", ":(", ":-(", ":[", ":<", "=(", ":'(", ":'-(", ":')",
    ":P", ":-P", ":p", ":-p", "=P", ":O", ":-O", ":o", ":-o", ":/", ":-/",
    ":|", ":-|", ":*", ":-*", "<3", "</3", "B)", "8)", "^^", "^_^", "-_-",
    "o_O", "O_o", ":$",
)

SCALAR_GROUPS = (
    "mean_frequency", "mean_polysemy", "turn_count", "is_dialogue",
    "hashtag_count", "url_count", "emoticon_count", "char_count",
    "token_count", "mean_token_length", "exclamation_count", "punct_count",
)
PUNCT_CHARS = frozenset(".,;?")
EXCLAMATION_CHARS = frozenset("!¡")


class FeatureConfigError(ValueError):
    pass


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str, emoticons: Iterable[str] = DEFAULT_EMOTICONS) -> list[str]:
    """Whitespace split, then peel leading/trailing punctuation into single-character tokens.

    Chunks that start with ``#``, ``@``, ``http``, ``www`` or ``-`` and chunks
    that are emoticons are kept whole.
    """
    emoticons = emoticons if isinstance(emoticons, (set, frozenset)) else frozenset(emoticons)
    tokens: list[str] = []
    for chunk in text.split():
        if chunk.startswith(PROTECTED_PREFIXES) or chunk in emoticons:
            tokens.append(chunk)
            continue
        start, end = 0, len(chunk)
        while start < end and _is_punct(chunk[start]):
            start += 1
        while end > start and _is_punct(chunk[end - 1]):
            end -= 1
        tokens.extend(chunk[:start])
        if start < end:
            tokens.append(chunk[start:end])
        tokens.extend(chunk[end:])
    return tokens


@dataclass(frozen=True)
class EmbeddingTable:
    dimension: int
    entries: Mapping[str, np.ndarray]

    def __post_init__(self):
        if self.dimension < 1:
            raise FeatureConfigError("embedding dimension must be positive")
        for tok, vec in self.entries.items():
            if vec.shape != (self.dimension,):
                raise FeatureConfigError(
                    f"embedding for {tok!r} has shape {vec.shape}, expected ({self.dimension},)"
                )

    def lookup(self, token: str) -> np.ndarray | None:
        vec = self.entries.get(token)
        if vec is None:
            vec = self.entries.get(token.casefold())
        return vec


@dataclass(frozen=True)
class FrequencyLexicon:
    entries: Mapping[str, float]

    def __post_init__(self):
        if any(v < 0 for v in self.entries.values()):
            raise FeatureConfigError("frequencies must be non-negative")


@dataclass(frozen=True)
class PolysemyLexicon:
    entries: Mapping[str, int]

    def __post_init__(self):
        if any(v < 1 for v in self.entries.values()):
            raise FeatureConfigError("synset counts must be >= 1")


@dataclass(frozen=True)
class FeatureResources:
    embeddings: EmbeddingTable
    frequency: FrequencyLexicon = field(default_factory=lambda: FrequencyLexicon({}))
    polysemy: PolysemyLexicon = field(default_factory=lambda: PolysemyLexicon({}))
    emoticons: frozenset[str] = frozenset(DEFAULT_EMOTICONS)


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Read word2vec text format: ``count dim`` header, then ``token v1 ... vd`` lines."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise FeatureConfigError(f"{path}: first line must be '<count> <dim>'")
        count, dim = int(header[0]), int(header[1])
        entries = {}
        for line_no, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(" ")
            if not line.strip():
                continue
            if len(parts) != dim + 1:
                raise FeatureConfigError(f"{path}: line {line_no} has {len(parts) - 1} values, expected {dim}")
            entries[parts[0]] = np.asarray(parts[1:], dtype=float)
    if len(entries) != count:
        raise FeatureConfigError(f"{path}: header promises {count} vectors, found {len(entries)}")
    return EmbeddingTable(dim, entries)


def _read_two_column_tsv(path: str | Path):
    with open(path, encoding="utf-8", newline="") as fh:
        for line_no, row in enumerate(csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE), start=1):
            if not row:
                continue
            if len(row) != 2:
                raise FeatureConfigError(f"{path}: line {line_no} should have 2 columns")
            yield line_no, row[0], row[1]


def load_frequency_lexicon(path: str | Path, relative: bool = True) -> FrequencyLexicon:
    """Read ``token<TAB>count``; with ``relative`` counts are divided by their total."""
    counts: dict[str, float] = {}
    for line_no, tok, raw in _read_two_column_tsv(path):
        try:
            counts[tok] = float(raw)
        except ValueError:
            raise FeatureConfigError(f"{path}: line {line_no}: bad count {raw!r}") from None
    if relative:
        total = sum(counts.values())
        if total > 0:
            counts = {k: v / total for k, v in counts.items()}
    return FrequencyLexicon(counts)


def load_polysemy_lexicon(path: str | Path) -> PolysemyLexicon:
    entries: dict[str, int] = {}
    for line_no, lemma, raw in _read_two_column_tsv(path):
        try:
            entries[lemma] = int(raw)
        except ValueError:
            raise FeatureConfigError(f"{path}: line {line_no}: bad synset count {raw!r}") from None
    return PolysemyLexicon(entries)


def load_emoticons(path: str | Path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip() for line in fh if line.strip())


def embedding_mean(tokens: Sequence[str], table: EmbeddingTable) -> np.ndarray:
    vecs = [v for v in (table.lookup(t) for t in tokens) if v is not None]
    if not vecs:
        return np.zeros(table.dimension)
    return np.mean(vecs, axis=0)


def mean_frequency(tokens: Sequence[str], lex: FrequencyLexicon) -> float:
    if not tokens:
        return 0.0
    return sum(lex.entries.get(t, lex.entries.get(t.casefold(), 0.0)) for t in tokens) / len(tokens)


def mean_polysemy(tokens_or_lemmas: Sequence[str], lex: PolysemyLexicon, lemmatized: bool = False) -> float:
    """Average synset count; unknown entries count as 0.

    Surface tokens are case-folded before lookup. Lemmas are tried as given
    first.
    """
    if not tokens_or_lemmas:
        return 0.0
    total = 0
    for t in tokens_or_lemmas:
        if lemmatized and t in lex.entries:
            total += lex.entries[t]
        else:
            total += lex.entries.get(t.casefold(), 0)
    return total / len(tokens_or_lemmas)


def dialogue_features(tokens: Sequence[str]) -> tuple[int, int]:
    turns = sum(1 for t in tokens if t.startswith("-"))
    return turns, int(turns > 2)


def surface_counts(
    text: str, tokens: Sequence[str], emoticons: Iterable[str] = DEFAULT_EMOTICONS
) -> tuple[int, int, int, int, int, float, int, int]:
    """(hashtags, urls, emoticons, chars, tokens, mean token length, exclamations, punctuation)."""
    emoticons = emoticons if isinstance(emoticons, (set, frozenset)) else frozenset(emoticons)
    hashtags = sum(1 for t in tokens if t.startswith("#"))
    urls = sum(1 for t in tokens if t.startswith(("www", "http")))
    emos = sum(1 for t in tokens if t in emoticons)
    mean_len = sum(len(t) for t in tokens) / len(tokens) if tokens else 0.0
    exclamations = sum(1 for c in text if c in EXCLAMATION_CHARS)
    punct = sum(1 for c in text if c in PUNCT_CHARS)
    return hashtags, urls, emos, len(text), len(tokens), mean_len, exclamations, punct


@dataclass(frozen=True)
class Layout:
    embedding_dim: int

    @property
    def groups(self) -> list[tuple[str, int, int]]:
        """(name, offset, length) for every group in vector order."""
        out = [("embedding_mean", 0, self.embedding_dim)]
        for i, name in enumerate(SCALAR_GROUPS):
            out.append((name, self.embedding_dim + i, 1))
        return out

    @property
    def length(self) -> int:
        return sum(n for _, _, n in self.groups)

    @property
    def scalar_slice(self) -> slice:
        return slice(self.embedding_dim, self.length)

    def to_dict(self) -> dict:
        return {name: [off, n] for name, off, n in self.groups}


@dataclass(frozen=True)
class Standardization:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, scalars: np.ndarray) -> "Standardization":
        scalars = np.atleast_2d(np.asarray(scalars, dtype=float))
        if scalars.shape[0] == 0:
            return cls(np.zeros(scalars.shape[1]), np.ones(scalars.shape[1]))
        mean = scalars.mean(axis=0)
        std = scalars.std(axis=0)
        # constant columns pass through centred
        std[std <= 0] = 1.0
        return cls(mean, std)

    def apply(self, scalars: np.ndarray) -> np.ndarray:
        return (np.asarray(scalars, dtype=float) - self.mean) / self.scale

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Standardization":
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["scale"], dtype=float))


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    layout: Layout

    def group(self, name: str) -> np.ndarray:
        for gname, off, n in self.layout.groups:
            if gname == name:
                return self.values[off:off + n]
        raise KeyError(name)


def raw_scalars(inst: Instance, resources: FeatureResources) -> np.ndarray:
    tokens = list(inst.tokens) if inst.tokens else tokenize(inst.text, resources.emoticons)
    turns, dialogue = dialogue_features(tokens)
    poly = (
        mean_polysemy(inst.lemmas, resources.polysemy, lemmatized=True)
        if inst.lemmas else mean_polysemy(tokens, resources.polysemy)
    )
    return np.array([
        mean_frequency(tokens, resources.frequency),
        poly,
        turns,
        dialogue,
        *surface_counts(inst.text, tokens, resources.emoticons),
    ], dtype=float)


def featurize(
    inst: Instance, resources: FeatureResources, standardization: Standardization | None = None
) -> FeatureVector:
    """Feature vector of one instance; scalars are standardised when parameters are given."""
    layout = Layout(resources.embeddings.dimension)
    tokens = list(inst.tokens) if inst.tokens else tokenize(inst.text, resources.emoticons)
    emb = embedding_mean(tokens, resources.embeddings)
    scalars = raw_scalars(inst, resources)
    if standardization is not None:
        if standardization.mean.shape != (len(SCALAR_GROUPS),):
            raise FeatureConfigError("standardization parameters do not match the scalar layout")
        scalars = standardization.apply(scalars)
    values = np.concatenate([emb, scalars])
    if values.shape != (layout.length,):
        raise FeatureConfigError(f"feature length {values.shape[0]} != layout length {layout.length}")
    return FeatureVector(values, layout)


def featurize_dataset(
    dataset: Dataset, resources: FeatureResources, standardization: Standardization | None = None
) -> tuple[np.ndarray, Layout, Standardization]:
    """Feature matrix for a dataset, fitting standardisation on it when none is supplied."""
    layout = Layout(resources.embeddings.dimension)
    raw = np.zeros((len(dataset), layout.length))
    for i, inst in enumerate(dataset):
        raw[i] = featurize(inst, resources).values
    if standardization is None:
        standardization = Standardization.fit(raw[:, layout.scalar_slice])
    if len(dataset):
        raw[:, layout.scalar_slice] = standardization.apply(raw[:, layout.scalar_slice])
    return raw, layout, standardization


def layout_sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".layout.json")


def write_features(
    path: str | Path, ids: Sequence[str], matrix: np.ndarray, layout: Layout, standardization: Standardization
) -> None:
    """CSV matrix ``id,f0,...`` plus a JSON sidecar with layout and standardisation."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id"] + [f"f{j}" for j in range(layout.length)])
        for ident, row in zip(ids, matrix):
            writer.writerow([ident] + [repr(float(x)) for x in row])
    sidecar = {
        "embedding_dim": layout.embedding_dim,
        "length": layout.length,
        "groups": layout.to_dict(),
        "standardization": standardization.to_dict(),
    }
    with open(layout_sidecar_path(path), "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")


def read_features(path: str | Path) -> tuple[list[str], np.ndarray, Layout, Standardization]:
    with open(layout_sidecar_path(path), encoding="utf-8") as fh:
        sidecar = json.load(fh)
    layout = Layout(int(sidecar["embedding_dim"]))
    if layout.length != sidecar["length"]:
        raise FeatureConfigError(f"{path}: layout sidecar length mismatch")
    ids, rows = [], []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if len(header) != layout.length + 1:
            raise FeatureConfigError(f"{path}: {len(header) - 1} columns, layout expects {layout.length}")
        for row in reader:
            ids.append(row[0])
            rows.append([float(x) for x in row[1:]])
    matrix = np.asarray(rows, dtype=float).reshape(len(rows), layout.length)
    return ids, matrix, layout, Standardization.from_dict(sidecar["standardization"])
