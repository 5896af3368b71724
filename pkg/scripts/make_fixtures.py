"""Regenerate the small sample files under fixtures/.

    python3 scripts/make_fixtures.py
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1] / "fixtures"
HEADER = ["id", "text", "is_humorous", "votes_no", "votes_1", "votes_2", "votes_3", "votes_4", "votes_5",
          "funniness_average"]

VOCAB = (
    "el la de que y a en un ser se no haber por con su para como estar tener le lo todo pero "
    "más hacer o poder decir este ir otro ese si me ya ver porque dar cuando muy sin vez mucho "
    "saber qué sobre mi alguno mismo yo también hasta año dos querer entre así primero desde "
    "grande eso ni nos llegar pasar tiempo ella sí día uno bien poco deber entonces poner cosa "
    "tanto hombre parecer nuestro tan donde ahora parte después vida quedar siempre creer "
    "mamá papá perro gato suegra chiste jaja jajaja borracho doctor profesor examen cerveza"
).split()
FUNNY = ("jaja", "jajaja", "borracho", "suegra", "chiste", "perro", "gato", "cerveza")
EMOTICONS = (":)", ":D", "xD", ";)", ":P", ":(", "<3", ":/", "^^", "-_-")


def sample_files() -> None:
    rows = [
        ["t1", "jaja", 1, 0, 1, 1, 2, 1, 0, "2.6"],
        ["t2", "¿Qué le dice un pez a otro? ¡Nada!", 1, 1, 0, 1, 1, 1, 1, "3.5"],
        ["t3", "Hoy llueve en Madrid #lunes", 0, 4, 1, 0, 0, 0, 0, ""],
        ["t4", "- Doctor, me duele aquí\n- Pues no se toque :)", 1, 0, 0, 0, 1, 2, 2, "4.2"],
        ["t5", "Nuevo artículo en www.ejemplo.es", 0, 5, 0, 0, 0, 0, 0, ""],
    ]
    with open(ROOT / "sample_haha.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        w.writerows(rows)
    with open(ROOT / "sample_plain.tsv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["id", "text", "gold_score"])
        w.writerows([
            ["p1", "¡Hola! ¿Qué tal?", "0.0"],
            ["p2", "Mi suegra es tan lenta... jaja", "3.25"],
            ["p3", "#jaja http://x.co", "1.0"],
            ["p4", "- ¿Vienes?\t- No.", ""],
            ["p5", "Sin comentarios", "5.0"],
        ])
    with open(ROOT / "abc.tsv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["id", "text", "gold_score"])
        w.writerows([["A", "el mejor chiste", "5.0"], ["B", "un chiste normal", "3.0"], ["C", "nada gracioso", "1.0"]])


def synthetic(n: int = 50, dim: int = 8, seed: int = 2019) -> None:
    rng = np.random.default_rng(seed)
    out = ROOT / "synthetic50"
    out.mkdir(parents=True, exist_ok=True)
    direction = rng.normal(size=dim)
    direction /= np.linalg.norm(direction)
    emb = {}
    for word in VOCAB:
        v = rng.normal(scale=0.5, size=dim)
        if word in FUNNY:
            v += 1.5 * direction
        emb[word] = v

    rows, dev = [], []
    for k in range(n):
        length = int(rng.integers(4, 14))
        words = list(rng.choice(VOCAB, size=length))
        if rng.uniform() < 0.3:
            words.append(str(rng.choice(EMOTICONS)))
        if rng.uniform() < 0.2:
            words.insert(0, "#" + str(rng.choice(VOCAB)))
        if rng.uniform() < 0.1:
            words.append("http://t.co/" + "".join(rng.choice(list("abcxyz"), size=5)))
        text = " ".join(words)
        if rng.uniform() < 0.2:
            text = "- " + text.replace(" y ", "\n- ", 1) + "\n- ¡" + str(rng.choice(FUNNY)) + "!"
        if rng.uniform() < 0.3:
            text += "!" * int(rng.integers(1, 4))
        vecs = [emb[w] for w in words if w in emb]
        latent = float(np.mean(vecs, axis=0) @ direction) * 3 + rng.normal(scale=0.3)
        funny = latent > 0.1
        if funny:
            centre = float(np.clip(2.5 + 1.5 * latent, 1, 5))
            ratings = np.clip(np.rint(rng.normal(centre, 0.8, size=int(rng.integers(3, 6)))), 1, 5).astype(int)
            votes = [int(np.sum(ratings == r)) for r in range(1, 6)]
            no = int(rng.integers(0, 3))
            if no + sum(votes) < 5:
                no = 5 - sum(votes)
            avg = sum(r * c for r, c in zip(range(1, 6), votes)) / sum(votes)
            rows.append([f"s{k:02d}", text, 1, no, *votes, f"{avg:.2f}"])
            dev.append([f"s{k:02d}", repr(avg), 1])
        else:
            rows.append([f"s{k:02d}", text, 0, int(rng.integers(3, 6)), 0, 0, 0, 0, 0, ""])
            dev.append([f"s{k:02d}", "0.0", 0])

    with open(out / "instances.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        w.writerows(rows)
    with open(out / "dev_gold.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "gold_score", "gold_label"])
        w.writerows(dev)
    with open(out / "embeddings.txt", "w", encoding="utf-8") as fh:
        fh.write(f"{len(emb)} {dim}\n")
        for word, v in emb.items():
            fh.write(word + " " + " ".join(f"{x:.6f}" for x in v) + "\n")
    counts = rng.integers(1, 5000, size=len(VOCAB))
    with open(out / "frequency.tsv", "w", encoding="utf-8") as fh:
        for word, c in zip(VOCAB, counts):
            fh.write(f"{word}\t{c}\n")
    with open(out / "polysemy.tsv", "w", encoding="utf-8") as fh:
        for word in VOCAB[::2]:
            fh.write(f"{word}\t{int(rng.integers(1, 12))}\n")
    with open(out / "emoticons.txt", "w", encoding="utf-8") as fh:
        fh.write("\n".join(EMOTICONS) + "\n")


if __name__ == "__main__":
    ROOT.mkdir(exist_ok=True)
    sample_files()
    synthetic()
