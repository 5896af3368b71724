"""Command-line pipeline: pairs -> featurize -> train -> predict -> calibrate -> evaluate.

Settings come from a TOML file (``--config``) and are overridden by flags.
Relative paths in the config file are resolved against its directory. Exit
codes: 0 success, 2 input or validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import tomli
import tomli_w

from . import calibrate as cal
from . import corpus, metrics, pairgen, textfeat
from .gppl import GpplModel, KernelParams, NumericalError, SviConfig, fit_svi, median_lengthscales, predict

logger = logging.getLogger("humorank")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
STAGES = {"pairs": 0, "train": 1}
PATH_KEYS = (
    "instances", "pairs", "features", "embeddings", "frequency", "polysemy",
    "emoticons", "model", "calibration", "scores", "dev_gold", "predictions", "gold", "report",
)


class InputError(Exception):
    pass


@dataclass
class PipelineConfig:
    seed: int = 0
    likelihood: str = "thurstone_mosteller"
    instances_format: str = "haha_csv"
    relative_frequency: bool = True
    threshold: float | None = None
    paths: dict = field(default_factory=dict)
    pairgen: dict = field(default_factory=lambda: {"cap_per_better": 500, "keep_fraction": 1.0})
    svi: dict = field(default_factory=lambda: {
        "batch_size": 200, "num_inducing": 500, "max_iterations": 2000, "convergence_tol": 1e-5,
        "learning_delay": 1.0, "forgetting_rate": 0.9,
    })
    kernel: dict = field(default_factory=lambda: {"family": "matern32", "scale_shape": 2.0, "scale_rate": 200.0})

    def stage_seed(self, stage: str) -> int:
        """64-bit seed for one pipeline stage, derived from the top-level seed."""
        words = np.random.SeedSequence([self.seed, STAGES[stage]]).generate_state(2, np.uint32)
        return int(words[0]) << 32 | int(words[1])

    def pairgen_config(self) -> pairgen.PairGenConfig:
        return pairgen.PairGenConfig(seed=self.stage_seed("pairs"), **self.pairgen)

    def svi_config(self) -> SviConfig:
        return SviConfig(seed=self.stage_seed("train"), **self.svi)

    def path(self, key: str) -> Path | None:
        value = self.paths.get(key)
        return Path(value) if value else None

    def to_toml(self) -> str:
        d = dataclasses.asdict(self)
        if d["threshold"] is None:
            del d["threshold"]
        d["paths"] = {k: str(v) for k, v in sorted(d["paths"].items()) if v}
        return tomli_w.dumps(d)

    @classmethod
    def from_toml(cls, text: str, base_dir: Path | None = None) -> "PipelineConfig":
        raw = tomli.loads(text)
        cfg = cls()
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        for key in ("seed", "likelihood", "instances_format", "relative_frequency", "threshold"):
            if key in raw:
                setattr(cfg, key, raw[key])
        for section in ("pairgen", "svi", "kernel"):
            extra = set(raw.get(section, {})) - set(getattr(cfg, section))
            if extra:
                raise InputError(f"unknown keys in [{section}]: {sorted(extra)}")
            getattr(cfg, section).update(raw.get(section, {}))
        for key, value in raw.get("paths", {}).items():
            if key not in PATH_KEYS:
                raise InputError(f"unknown path key {key!r}")
            p = Path(value)
            if base_dir is not None and not p.is_absolute():
                p = base_dir / p
            cfg.paths[key] = str(p)
        return cfg


# ---------------------------------------------------------------- helpers

def _require(cfg: PipelineConfig, *keys: str) -> list[Path]:
    out = []
    for key in keys:
        p = cfg.path(key)
        if p is None:
            raise InputError(f"missing required path '{key}' (set it in [paths] or with a flag)")
        if not p.exists():
            raise InputError(f"{key}: file not found: {p}")
        out.append(p)
    return out


def _output(cfg: PipelineConfig, key: str) -> Path:
    p = cfg.path(key)
    if p is None:
        raise InputError(f"missing output path '{key}'")
    if not p.parent.exists():
        raise InputError(f"output directory does not exist: {p.parent}")
    return p


def _resources(cfg: PipelineConfig) -> textfeat.FeatureResources:
    (emb_path,) = _require(cfg, "embeddings")
    freq = cfg.path("frequency")
    poly = cfg.path("polysemy")
    emo = cfg.path("emoticons")
    for key, p in (("frequency", freq), ("polysemy", poly), ("emoticons", emo)):
        if p is not None and not p.exists():
            raise InputError(f"{key}: file not found: {p}")
    return textfeat.FeatureResources(
        embeddings=textfeat.load_embeddings(emb_path),
        frequency=textfeat.load_frequency_lexicon(freq, cfg.relative_frequency) if freq else textfeat.FrequencyLexicon({}),
        polysemy=textfeat.load_polysemy_lexicon(poly) if poly else textfeat.PolysemyLexicon({}),
        emoticons=textfeat.load_emoticons(emo) if emo else frozenset(textfeat.DEFAULT_EMOTICONS),
    )


def _read_csv(path: Path, required: Sequence[str]) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in required if c not in (reader.fieldnames or [])]
        if missing:
            raise InputError(f"{path}: missing columns {missing}")
        rows = list(reader)
    ids = [r["id"] for r in rows]
    if len(set(ids)) != len(ids):
        raise InputError(f"{path}: duplicate ids")
    return rows


def _float(value: str, path: Path, row: int, column: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise InputError(f"{path}: row {row}, column {column!r}: not a number: {value!r}") from None


def _read_gold(path: Path) -> dict[str, tuple[float, bool]]:
    rows = _read_csv(path, ("id", "gold_score"))
    gold = {}
    for n, r in enumerate(rows, start=2):
        score = _float(r["gold_score"], path, n, "gold_score")
        label = r.get("gold_label")
        gold[r["id"]] = (score, score > 0 if label in (None, "") else label.strip().lower() in ("1", "true"))
    return gold


def _align(pred_ids: Sequence[str], gold: dict, what: str) -> None:
    have = set(pred_ids)
    missing_gold = [i for i in pred_ids if i not in gold]
    missing_pred = [i for i in gold if i not in have]
    if missing_gold or missing_pred:
        raise InputError(
            f"{what}: ids do not align; without gold: {missing_gold[:20]}, without predictions: {missing_pred[:20]}"
        )


def _f(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------- commands

def cmd_pairs(cfg: PipelineConfig) -> None:
    (inst_path,) = _require(cfg, "instances")
    out = _output(cfg, "pairs")
    pg = cfg.pairgen_config()
    dataset = corpus.load_instances(inst_path, cfg.instances_format)
    levels = pairgen.score_levels(dataset)
    minimal = pairgen.generate_minimal_pairs(levels) if levels else []
    capped, final = pairgen.subsample_stages(minimal, pg)
    meta = pairgen.pairgen_metadata(pg, len(minimal), len(capped), len(final))
    meta["instances"] = len(dataset)
    meta["levels"] = len(levels)
    pairgen.write_pairs(final, out, meta)
    print(f"minimal pairs: {len(minimal)}")
    print(f"after capping at {pg.cap_per_better} per funnier item: {len(capped)}")
    print(f"after keeping fraction {pg.keep_fraction}: {len(final)}")


def cmd_featurize(cfg: PipelineConfig, standardization_from: Path | None = None) -> None:
    (inst_path,) = _require(cfg, "instances")
    out = _output(cfg, "features")
    if standardization_from is not None and not standardization_from.exists():
        raise InputError(f"standardization source not found: {standardization_from}")
    resources = _resources(cfg)
    dataset = corpus.load_instances(inst_path, cfg.instances_format)
    std = None
    if standardization_from is not None:
        std = _load_standardization(standardization_from)
    matrix, layout, std = textfeat.featurize_dataset(dataset, resources, std)
    textfeat.write_features(out, dataset.ids, matrix, layout, std)
    print(f"featurized {len(dataset)} instances into {layout.length} columns")


def _load_standardization(path: Path) -> textfeat.Standardization:
    """Standardisation stored in a model file or a feature layout sidecar."""
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    if d.get("kind") == "gppl_model":
        d = d.get("feature_standardization") or {}
    if "standardization" in d:
        d = d["standardization"]
    if "mean" not in d:
        raise InputError(f"{path}: no standardization parameters found")
    return textfeat.Standardization.from_dict(d)


def cmd_train(cfg: PipelineConfig) -> None:
    pairs_path, feat_path = _require(cfg, "pairs", "features")
    out = _output(cfg, "model")
    pairs = pairgen.read_pairs(pairs_path)
    ids, matrix, layout, std = textfeat.read_features(feat_path)
    features = dict(zip(ids, matrix))
    missing = sorted({i for p in pairs for i in p if i not in features})
    if missing:
        raise InputError(f"{pairs_path}: ids without features: {missing[:20]}")
    if not pairs:
        raise InputError(f"{pairs_path}: no pairs to train on")
    svi = cfg.svi_config()
    position = {i: k for k, i in enumerate(ids)}
    used = sorted({i for p in pairs for i in p}, key=position.__getitem__)
    kernel = KernelParams(
        median_lengthscales(np.vstack([features[i] for i in used]), seed=svi.seed),
        cfg.kernel["family"], float(cfg.kernel["scale_shape"]), float(cfg.kernel["scale_rate"]),
    )
    model = fit_svi(pairs, features, svi, kernel, cfg.likelihood)
    model.feature_standardization = {"embedding_dim": layout.embedding_dim, **std.to_dict()}
    trace = model.training_metadata["elbo_trace"]
    if not np.all(np.isfinite(trace)):
        raise NumericalError("ELBO trace contains non-finite values")
    model.save(out)
    with open(out.with_name(out.name + ".elbo.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "elbo"])
        for i, v in enumerate(trace, start=1):
            writer.writerow([i, _f(v)])
    meta = model.training_metadata
    print(f"trained on {len(pairs)} pairs, {model.num_inducing} inducing points, "
          f"{meta['iterations']} iterations, final ELBO {meta['final_elbo']:.6g}")


def cmd_predict(cfg: PipelineConfig) -> None:
    (model_path,) = _require(cfg, "model")
    out = _output(cfg, "scores")
    cal_path = cfg.path("calibration")
    if cal_path is not None and not cal_path.exists():
        raise InputError(f"calibration: file not found: {cal_path}")
    model = GpplModel.load(model_path)
    if cfg.path("features") is not None:
        (feat_path,) = _require(cfg, "features")
        ids, matrix, layout, _ = textfeat.read_features(feat_path)
    else:
        (inst_path,) = _require(cfg, "instances")
        resources = _resources(cfg)
        dataset = corpus.load_instances(inst_path, cfg.instances_format)
        std = textfeat.Standardization.from_dict(model.feature_standardization) if model.feature_standardization else None
        matrix, layout, _ = textfeat.featurize_dataset(dataset, resources, std)
        ids = dataset.ids
    if matrix.shape[0] and matrix.shape[1] != model.dim:
        raise InputError(
            f"features have {matrix.shape[1]} columns but the model expects {model.dim} "
            f"(embedding_dim={(model.feature_standardization or {}).get('embedding_dim')} + "
            f"{len(textfeat.SCALAR_GROUPS)} scalar features)"
        )
    cmap = cal.CalibrationMap.load(cal_path) if cal_path else None
    post = predict(model, matrix)
    header = ["id", "raw_mean", "raw_variance"]
    if cmap is not None:
        header += ["score"] + (["label"] if cmap.binary_threshold is not None else [])
    with open(out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        calibrated = cal.apply_calibration(cmap, post.mean) if cmap is not None and len(ids) else []
        for k, ident in enumerate(ids):
            row = [ident, _f(post.mean[k]), _f(post.variance[k])]
            if cmap is not None:
                row.append(_f(calibrated[k]))
                if cmap.binary_threshold is not None:
                    row.append(int(calibrated[k] >= cmap.binary_threshold))
            writer.writerow(row)
    print(f"wrote {len(ids)} predictions")


def _read_raw_scores(path: Path) -> tuple[list[str], np.ndarray]:
    rows = _read_csv(path, ("id", "raw_mean"))
    return [r["id"] for r in rows], np.array([_float(r["raw_mean"], path, n, "raw_mean") for n, r in enumerate(rows, 2)])


def cmd_calibrate(cfg: PipelineConfig) -> None:
    scores_path, gold_path = _require(cfg, "scores", "dev_gold")
    out = _output(cfg, "calibration")
    ids, raw = _read_raw_scores(scores_path)
    gold = _read_gold(gold_path)
    _align(ids, gold, "calibrate")
    y = np.array([gold[i][0] for i in ids])
    labels = np.array([gold[i][1] for i in ids])
    cmap = cal.fit_calibration(raw, y)
    calibrated = cal.apply_calibration(cmap, raw)
    threshold = cfg.threshold if cfg.threshold is not None else cal.tune_threshold(calibrated, labels)
    cmap = cmap.with_threshold(threshold)
    cmap.save(out)
    report = metrics.classification_report(calibrated >= threshold, labels)
    pos = labels
    dev_rmse = metrics.rmse(calibrated[pos], y[pos]) if pos.any() else float("nan")
    print(f"threshold: {threshold!r}")
    print(f"noise variance: {cmap.noise_variance!r}")
    print(f"dev F1: {report.f1:.4f}")
    print(f"dev RMSE: {dev_rmse:.4f}")


def cmd_evaluate(cfg: PipelineConfig, mode: str) -> None:
    pred_path, gold_path = _require(cfg, "predictions", "gold")
    report_path = cfg.path("report")
    if report_path is not None and not report_path.parent.exists():
        raise InputError(f"output directory does not exist: {report_path.parent}")
    rows = _read_csv(pred_path, ("id",))
    gold = _read_gold(gold_path)
    ids = [r["id"] for r in rows]
    _align(ids, gold, "evaluate")
    columns = set(rows[0]) if rows else set()
    report = rmse_value = rho = None
    if mode in ("binary", "both"):
        if rows and "label" not in columns:
            raise InputError(f"{pred_path}: binary evaluation needs a 'label' column")
        pred = [r["label"].strip().lower() in ("1", "true") for r in rows]
        report = metrics.classification_report(pred, [gold[i][1] for i in ids])
    if mode in ("score", "both"):
        col = "score" if "score" in columns else "raw_mean"
        if rows and col not in columns:
            raise InputError(f"{pred_path}: score evaluation needs a 'score' column")
        scores = np.array([_float(r[col], pred_path, n, col) for n, r in enumerate(rows, 2)])
        gold_scores = np.array([gold[i][0] for i in ids])
        # funniness scores are only defined for the humorous class
        pos = np.array([gold[i][1] for i in ids], dtype=bool)
        if pos.any():
            rmse_value = metrics.rmse(scores[pos], gold_scores[pos])
            if pos.sum() >= 2:
                try:
                    rho = metrics.spearman(scores[pos], gold_scores[pos])
                except metrics.UndefinedCorrelationError:
                    rho = None
    text = metrics.format_table("system", report, rmse_value)
    if rho is not None:
        text += f"Spearman rho: {rho:.3f}\n"
    print(text, end="")
    if report_path is not None:
        report_path.write_text(metrics.report_json(report, rmse=rmse_value, spearman=rho), encoding="utf-8")
        report_path.with_suffix(".txt").write_text(text, encoding="utf-8")


# ---------------------------------------------------------------- argument parsing

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML config file")
    common.add_argument("--seed", type=int, help="top-level seed (overrides config)")
    common.add_argument("--print-config", action="store_true", help="print the effective config as TOML and exit")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="humorank", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pairs", parents=[common], help="convert gold scores into preference pairs")
    p.add_argument("--instances")
    p.add_argument("--format", dest="instances_format", choices=corpus.FORMATS)
    p.add_argument("--out", dest="pairs")
    p.add_argument("--cap", dest="cap_per_better", type=int)
    p.add_argument("--keep-fraction", type=float)

    p = sub.add_parser("featurize", parents=[common], help="compute feature vectors")
    p.add_argument("--instances")
    p.add_argument("--format", dest="instances_format", choices=corpus.FORMATS)
    p.add_argument("--embeddings")
    p.add_argument("--frequency")
    p.add_argument("--polysemy")
    p.add_argument("--emoticons")
    p.add_argument("--out", dest="features")
    p.add_argument("--standardization-from", type=Path,
                   help="reuse standardization from a model file or a features layout sidecar")

    p = sub.add_parser("train", parents=[common], help="fit the GPPL model")
    p.add_argument("--pairs")
    p.add_argument("--features")
    p.add_argument("--out", dest="model")
    p.add_argument("--likelihood", choices=("thurstone_mosteller", "bradley_terry"))
    p.add_argument("--batch-size", type=int)
    p.add_argument("--num-inducing", type=int)
    p.add_argument("--max-iterations", type=int)

    p = sub.add_parser("predict", parents=[common], help="posterior utilities for instances")
    p.add_argument("--model")
    p.add_argument("--features")
    p.add_argument("--instances")
    p.add_argument("--format", dest="instances_format", choices=corpus.FORMATS)
    p.add_argument("--calibration")
    p.add_argument("--out", dest="scores")

    p = sub.add_parser("calibrate", parents=[common], help="fit the rating-scale calibration map")
    p.add_argument("--scores")
    p.add_argument("--dev-gold")
    p.add_argument("--threshold", type=float)
    p.add_argument("--out", dest="calibration")

    p = sub.add_parser("evaluate", parents=[common], help="score predictions against gold labels")
    p.add_argument("--predictions")
    p.add_argument("--gold")
    p.add_argument("--mode", choices=("binary", "score", "both"), default="both")
    p.add_argument("--report")
    return parser


def _apply_overrides(cfg: PipelineConfig, args: argparse.Namespace) -> None:
    v = vars(args)
    if v.get("seed") is not None:
        cfg.seed = v["seed"]
    for key in PATH_KEYS:
        if v.get(key):
            cfg.paths[key] = v[key]
    for key in ("instances_format", "likelihood", "threshold"):
        if v.get(key) is not None:
            setattr(cfg, key, v[key])
    for key in ("cap_per_better", "keep_fraction"):
        if v.get(key) is not None:
            cfg.pairgen[key] = v[key]
    for key in ("batch_size", "num_inducing", "max_iterations"):
        if v.get(key) is not None:
            cfg.svi[key] = v[key]


def load_config(args: argparse.Namespace) -> PipelineConfig:
    if args.config is not None:
        if not args.config.exists():
            raise InputError(f"config file not found: {args.config}")
        cfg = PipelineConfig.from_toml(args.config.read_text(encoding="utf-8"), args.config.parent)
    else:
        cfg = PipelineConfig()
    _apply_overrides(cfg, args)
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        if args.print_config:
            print(cfg.to_toml(), end="")
            return EXIT_OK
        if args.command == "pairs":
            cmd_pairs(cfg)
        elif args.command == "featurize":
            cmd_featurize(cfg, args.standardization_from)
        elif args.command == "train":
            cmd_train(cfg)
        elif args.command == "predict":
            cmd_predict(cfg)
        elif args.command == "calibrate":
            cmd_calibrate(cfg)
        elif args.command == "evaluate":
            cmd_evaluate(cfg, args.mode)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, ValueError, KeyError, OSError, tomli.TOMLDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
