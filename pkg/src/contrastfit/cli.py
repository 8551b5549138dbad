"""Experiment pipeline CLI: balance, split, train, eval, explain, compare, grid.

Every artifact embeds the config and seeds that produced it, and grid
points are skipped on rerun when their artifacts already exist with a
matching config hash.  Exit codes: 0 success, 1 config error, 2 data
error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import classify, compare, corpus, evaluation, explain
from . import encoder as enc
from . import training
from .text import TextConfig

DEFAULT_CONTRASTIVE_SIZES = [4, 8, 12, 16]
DEFAULT_VANILLA_SIZES = [50, 100, 150, 200]


class ConfigError(Exception):
    """Bad flags, unreadable config document, or invalid parameter values."""


class ArgumentParser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; route through ConfigError
    # instead so flag mistakes map to the config-error exit code.
    def error(self, message):
        raise ConfigError(message)


@dataclass
class ExperimentConfig:
    dataset: str
    out_dir: str
    supplemental: str | None = None
    seed: int = 42
    test_per_label: int = 25
    dev_fraction: float = 0.2
    contrastive_sizes: list[int] = field(default_factory=lambda: list(DEFAULT_CONTRASTIVE_SIZES))
    vanilla_sizes: list[int] = field(default_factory=lambda: list(DEFAULT_VANILLA_SIZES))
    profile: str = "paper"
    train: dict = field(default_factory=dict)
    encoder: dict = field(default_factory=dict)
    text: dict = field(default_factory=dict)
    lime: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.contrastive_sizes or not self.vanilla_sizes:
            raise ValueError("sample-size grids must be nonempty")
        if self.profile not in ("paper", "desk"):
            raise ValueError(f"unknown profile {self.profile!r}")

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except FileNotFoundError as err:
            raise ConfigError(f"config file not found: {path}") from err
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path}: invalid JSON: {err}") from err
        try:
            return cls(**raw)
        except (TypeError, ValueError) as err:
            raise ConfigError(f"{path}: {err}") from err


def _train_config(profile: str, overrides: dict, seed: int | None = None) -> training.TrainConfig:
    overrides = dict(overrides)
    if seed is not None:
        overrides.setdefault("seed", seed)
    factory = training.TrainConfig.desk if profile == "desk" else training.TrainConfig.paper
    try:
        return factory(**overrides)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad training config: {err}") from err


def _encoder_config(overrides: dict, seed: int | None = None) -> enc.EncoderConfig:
    overrides = dict(overrides)
    if seed is not None:
        overrides.setdefault("seed", seed)
    try:
        return enc.EncoderConfig(**overrides)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad encoder config: {err}") from err


def _text_config(overrides: dict, vocab_buckets: int) -> TextConfig:
    overrides = dict(overrides)
    overrides["vocab_buckets"] = vocab_buckets
    try:
        return TextConfig(**overrides)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad text config: {err}") from err


def _lime_config(overrides: dict) -> explain.LimeConfig:
    try:
        return explain.LimeConfig(**overrides)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad lime config: {err}") from err


def _dump_json(obj: dict, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _config_hash(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _scores_dict(result: evaluation.Scores) -> dict:
    return {
        "accuracy": result.accuracy,
        "micro_f1": result.micro_f1,
        "macro_f1": result.macro_f1,
        "weighted_f1": result.weighted_f1,
    }


def _per_class_dict(result: evaluation.Scores) -> dict:
    return {
        label: {"precision": cs.precision, "recall": cs.recall, "f1": cs.f1, "support": cs.support}
        for label, cs in result.per_class.items()
    }


# ---------------------------------------------------------------------------
# grid


def _train_point(objective: str, few: corpus.Dataset, config: ExperimentConfig):
    """Train one grid point; returns (model, batch_losses)."""
    train_cfg = _train_config(config.profile, config.train, seed=config.seed)
    enc_cfg = _encoder_config(config.encoder, seed=config.seed)
    text_cfg = _text_config(config.text, enc_cfg.vocab_buckets)
    base = enc.init(enc_cfg)
    if objective == "contrastive":
        pairs = training.generate_pairs(few, train_cfg.R, train_cfg.seed)
        tuned, losses = training.train_contrastive(base, pairs, train_cfg, text_cfg)
        model = training.train_head(tuned, few, train_cfg, text_cfg)
        return model, losses
    result = training.train_vanilla(base, few, train_cfg, text_cfg)
    return result.model, result.batch_losses


def run_grid(config: ExperimentConfig) -> dict:
    """Train/evaluate every grid point and write all run artifacts.

    A failed point is recorded in the summary and does not stop the rest.
    Completed points (existing metrics with a matching config hash) are
    skipped, which makes interrupted grids resumable.
    """
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        split = corpus.SplitSpec(config.test_per_label, config.dev_fraction, config.seed)
    except ValueError as err:
        raise ConfigError(str(err)) from err
    dataset = corpus.load_jsonl(config.dataset)
    test, rest = corpus.split_test(dataset, split.test_per_label, split.seed)
    train_pool, dev = corpus.split_train_dev(rest, split.dev_fraction, split.seed)
    config_echo = asdict(config)

    points = []
    for i in range(max(len(config.vanilla_sizes), len(config.contrastive_sizes))):
        if i < len(config.vanilla_sizes):
            points.append(("vanilla", config.vanilla_sizes[i]))
        if i < len(config.contrastive_sizes):
            points.append(("contrastive", config.contrastive_sizes[i]))

    rows = []
    for objective, n in points:
        point_id = f"{objective}_{n:04d}"
        point_dir = out_dir / "points" / point_id
        point_hash = _config_hash({"config": config_echo, "objective": objective, "samples_per_label": n})
        metrics_path = point_dir / "metrics.json"
        if metrics_path.exists():
            try:
                existing = json.loads(metrics_path.read_text(encoding="utf-8"))
            except json.JSONDecodeError:
                existing = {}
            if existing.get("config_hash") == point_hash:
                print(f"[grid] {point_id}: up to date, skipping")
                rows.append(existing["summary_row"])
                continue
        row = {"point": point_id, "objective": objective, "samples_per_label": n}
        try:
            few = corpus.sample_few_shot(train_pool, n, config.seed)
            model, losses = _train_point(objective, few, config)
            counts = evaluation.evaluate(model, test)
            result = evaluation.scores(counts)
            row.update(status="ok", samples_used=len(few), **_scores_dict(result))
            point_dir.mkdir(parents=True, exist_ok=True)
            classify.save_model(model, point_dir / "model.npz")
            _dump_json(
                {"point": point_id, "config": config_echo, "config_hash": point_hash, "batch_losses": losses},
                point_dir / "run_log.json",
            )
            _dump_json(
                {
                    "point": point_id,
                    "objective": objective,
                    "samples_per_label": n,
                    "samples_used": len(few),
                    "test_size": len(test),
                    "config": config_echo,
                    "config_hash": point_hash,
                    "scores": _scores_dict(result),
                    "per_class": _per_class_dict(result),
                    "summary_row": row,
                },
                metrics_path,
            )
            print(f"[grid] {point_id}: weighted_f1={result.weighted_f1:.4f} accuracy={result.accuracy:.4f}")
        except (ConfigError, KeyboardInterrupt):
            raise
        except Exception as err:  # the point fails, the grid goes on
            row.update(status="error", error=f"{type(err).__name__}: {err}")
            print(f"[grid] {point_id}: FAILED ({err})", file=sys.stderr)
        rows.append(row)

    summary = {
        "config": config_echo,
        "splits": {"test": len(test), "train_pool": len(train_pool), "dev": len(dev)},
        "rows": rows,
    }
    _dump_json(summary, out_dir / "summary.json")
    _write_summary_csv(rows, out_dir / "summary.csv")
    for objective in ("vanilla", "contrastive"):
        with open(out_dir / f"accuracy_{objective}.csv", "w", encoding="utf-8") as fh:
            fh.write("samples_per_label,accuracy\n")
            for row in rows:
                if row["objective"] == objective and row.get("status") == "ok":
                    fh.write(f"{row['samples_per_label']},{row['accuracy']!r}\n")
    return summary


def _write_summary_csv(rows: list[dict], path: Path) -> None:
    import csv

    columns = ["point", "objective", "samples_per_label", "samples_used", "status",
               "accuracy", "micro_f1", "macro_f1", "weighted_f1", "error"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row.get(c, "") for c in columns])


# ---------------------------------------------------------------------------
# subcommands


def _cmd_split(args) -> int:
    try:
        split = corpus.SplitSpec(args.test_per_label, args.dev_fraction, args.seed)
    except ValueError as err:
        raise ConfigError(str(err)) from err
    dataset = corpus.load_jsonl(args.data)
    test, rest = corpus.split_test(dataset, split.test_per_label, split.seed)
    train, dev = corpus.split_train_dev(rest, split.dev_fraction, split.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, part in (("test", test), ("train", train), ("dev", dev)):
        corpus.save_jsonl(part, out / f"{name}.jsonl")
    requested = args.test_per_label
    shortfalls = {
        label: count for label, count in dataset.label_counts().items() if count < requested
    }
    _dump_json(
        {
            "seed": args.seed,
            "test_per_label": requested,
            "dev_fraction": args.dev_fraction,
            "counts": {"input": len(dataset), "test": len(test), "train": len(train), "dev": len(dev)},
            "per_label_test": test.label_counts(),
            "per_label_train": train.label_counts(),
            "per_label_dev": dev.label_counts(),
            "test_shortfalls": shortfalls,
        },
        out / "split_log.json",
    )
    print(f"split: test={len(test)} train={len(train)} dev={len(dev)} -> {out}")
    return 0


def _cmd_balance(args) -> int:
    dataset = corpus.load_jsonl(args.data)
    supplemental = corpus.load_jsonl(args.supplemental) if args.supplemental else None
    balanced = corpus.balance(
        dataset,
        top_k_labels=args.top_k,
        cap=args.cap,
        supplemental=supplemental,
        allow_replacement=args.allow_replacement,
        seed=args.seed,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    corpus.save_jsonl(balanced, out)
    _dump_json(
        {
            "seed": args.seed,
            "top_k": args.top_k,
            "cap": args.cap,
            "allow_replacement": args.allow_replacement,
            "input_counts": dataset.label_counts(),
            "output_counts": balanced.label_counts(),
        },
        out.with_suffix(out.suffix + ".log.json"),
    )
    print(f"balance: {len(balanced)} examples over {len(balanced.labels)} labels -> {out}")
    return 0


def _model_configs(args):
    enc_cfg = _encoder_config(
        {
            "vocab_buckets": args.vocab_buckets,
            "embed_dim": args.embed_dim,
            "hidden_dim": args.hidden_dim,
            "out_dim": args.out_dim,
            "init_scale": args.init_scale,
        },
        seed=args.seed,
    )
    text_cfg = _text_config({"lowercase": not args.no_lowercase, "hash_seed": args.hash_seed}, enc_cfg.vocab_buckets)
    return enc_cfg, text_cfg


def _cmd_train(args) -> int:
    overrides = {
        key: value
        for key, value in (
            ("learning_rate", args.learning_rate),
            ("warmup_ratio", args.warmup_ratio),
            ("batch_size", args.batch_size),
            ("epochs", args.epochs),
            ("R", args.pairs_per_class),
        )
        if value is not None
    }
    train_cfg = _train_config(args.profile, overrides, seed=args.seed)
    enc_cfg, text_cfg = _model_configs(args)

    dataset = corpus.load_jsonl(args.train)
    if args.samples_per_label:
        dataset = corpus.sample_few_shot(dataset, args.samples_per_label, train_cfg.seed)
    base = enc.init(enc_cfg)
    if args.objective == "contrastive":
        pairs = training.generate_pairs(dataset, train_cfg.R, train_cfg.seed)
        tuned, losses = training.train_contrastive(base, pairs, train_cfg, text_cfg)
        model = training.train_head(tuned, dataset, train_cfg, text_cfg)
    else:
        model, losses = training.train_vanilla(base, dataset, train_cfg, text_cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    classify.save_model(model, out)
    _dump_json(
        {
            "objective": args.objective,
            "train_file": str(args.train),
            "samples_per_label": args.samples_per_label,
            "train_size": len(dataset),
            "train_config": asdict(train_cfg),
            "encoder_config": asdict(enc_cfg),
            "text_config": asdict(text_cfg),
            "batch_losses": losses,
        },
        out.with_suffix(".run_log.json"),
    )
    print(f"train[{args.objective}]: {len(dataset)} examples, {len(losses)} batches -> {out}")
    return 0


def _cmd_eval(args) -> int:
    model = classify.load_model(args.model)
    test = corpus.load_jsonl(args.test)
    counts = evaluation.evaluate(model, test)
    result = evaluation.scores(counts)
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    evaluation.write_report_csv(result, prefix.parent / (prefix.name + "_report.csv"))
    classify.write_predictions_csv(model, test, prefix.parent / (prefix.name + "_predictions.csv"))
    _dump_json(
        {
            "model": str(args.model),
            "test": str(args.test),
            "test_size": len(test),
            "model_train_config": model.train_config,
            "scores": _scores_dict(result),
            "per_class": _per_class_dict(result),
        },
        prefix.parent / (prefix.name + "_metrics.json"),
    )
    print(
        f"eval: accuracy={result.accuracy:.4f} micro={result.micro_f1:.4f} "
        f"macro={result.macro_f1:.4f} weighted={result.weighted_f1:.4f}"
    )
    return 0


def _lime_from_args(args) -> explain.LimeConfig:
    return _lime_config(
        {"K": args.top_words, "n_samples": args.n_samples, "kernel_width": args.kernel_width, "seed": args.seed}
    )


def _explain_label_examples(model, model_id, dataset, label, lime_cfg, max_examples):
    out = []
    for i, ex in enumerate(dataset):
        if ex.label != label:
            continue
        out.append((i, explain.explain(model, ex.text, label, lime_cfg)))
        if max_examples and len(out) >= max_examples:
            break
    return out


def _cmd_explain(args) -> int:
    model = classify.load_model(args.model)
    lime_cfg = _lime_from_args(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_id = Path(args.model).stem
    if args.text is not None:
        expl = explain.explain(model, args.text, args.label, lime_cfg)
        explain.save_explanation(expl, model_id, "adhoc", lime_cfg, out_dir / "explanation_adhoc.json")
        print(f"explain: 1 explanation -> {out_dir}")
        return 0
    dataset = corpus.load_jsonl(args.data)
    explained = _explain_label_examples(model, model_id, dataset, args.label, lime_cfg, args.max_examples)
    if not explained:
        raise ValueError(f"no examples with label {args.label!r} in {args.data}")
    for i, expl in explained:
        explain.save_explanation(expl, model_id, i, lime_cfg, out_dir / f"explanation_{i:05d}.json")
    print(f"explain: {len(explained)} explanations -> {out_dir}")
    return 0


def _cmd_compare(args) -> int:
    model_a = classify.load_model(args.model_a)
    model_b = classify.load_model(args.model_b)
    id_a, id_b = Path(args.model_a).stem, Path(args.model_b).stem
    if id_a == id_b:
        id_a, id_b = f"{id_a}_a", f"{id_b}_b"
    lime_cfg = _lime_from_args(args)
    dataset = corpus.load_jsonl(args.data)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    tables = []
    for model, model_id in ((model_a, id_a), (model_b, id_b)):
        explained = _explain_label_examples(model, model_id, dataset, args.label, lime_cfg, args.max_examples)
        if not explained:
            raise ValueError(f"no examples with label {args.label!r} in {args.data}")
        for i, expl in explained:
            explain.save_explanation(expl, model_id, i, lime_cfg, out_dir / f"{model_id}_expl_{i:05d}.json")
        tables.append(compare.aggregate_features([e for _, e in explained], model_id))

    report = compare.comparison_report(tables[0], tables[1], top_n=args.top)
    report["lime_config"] = asdict(lime_cfg)
    compare.write_comparison_json(report, out_dir / "comparison.json")
    compare.write_comparison_csv(report, out_dir / "comparison.csv")
    if args.svg:
        for sign in (compare.POSITIVE, compare.NEGATIVE):
            rows = compare.common_features(tables[0], tables[1], sign)
            compare.write_bar_chart_svg(
                [(w, min(abs(a), abs(b)) * (1 if sign == compare.POSITIVE else -1)) for w, a, b in rows],
                f"common {sign} features: {args.label}",
                out_dir / f"common_{sign}.svg",
            )
            for table in tables:
                compare.write_bar_chart_svg(
                    [(w, v) for w, v, _ in compare.top_features(table, sign, args.top)],
                    f"{table.model_id} top {sign}: {args.label}",
                    out_dir / f"{table.model_id}_{sign}.svg",
                )
    print(f"compare: {len(report['common_positive'])} common positive / "
          f"{len(report['common_negative'])} common negative -> {out_dir}")
    return 0


def _cmd_grid(args) -> int:
    config = ExperimentConfig.from_json(args.config)
    run_grid(config)
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_model_flags(sub):
    sub.add_argument("--seed", type=int, default=42)
    sub.add_argument("--vocab-buckets", type=int, default=2**15)
    sub.add_argument("--embed-dim", type=int, default=64)
    sub.add_argument("--hidden-dim", type=int, default=64)
    sub.add_argument("--out-dim", type=int, default=64)
    sub.add_argument("--init-scale", type=float, default=0.1)
    sub.add_argument("--hash-seed", type=int, default=0)
    sub.add_argument("--no-lowercase", action="store_true")


def _add_lime_flags(sub):
    sub.add_argument("--top-words", type=int, default=10, help="max surrogate features (K)")
    sub.add_argument("--n-samples", type=int, default=25)
    sub.add_argument("--kernel-width", type=float, default=25.0)
    sub.add_argument("--seed", type=int, default=0)


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="contrastfit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="carve out per-label test set plus stratified train/dev")
    p.add_argument("--data", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--test-per-label", type=int, default=25)
    p.add_argument("--dev-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("balance", help="top-k labels evened out at a per-label cap")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--supplemental", default=None)
    p.add_argument("--top-k", type=int, default=32)
    p.add_argument("--cap", type=int, default=1000)
    p.add_argument("--allow-replacement", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_balance)

    p = sub.add_parser("train", help="train one model (contrastive or vanilla objective)")
    p.add_argument("--objective", choices=["contrastive", "vanilla"], required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--samples-per-label", type=int, default=None)
    p.add_argument("--profile", choices=["paper", "desk"], default="paper")
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--warmup-ratio", type=float, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--pairs-per-class", type=int, default=None, help="pairs of each polarity per class (R)")
    _add_model_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="score a model on a test set")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("explain", help="LIME explanations for one label's examples")
    p.add_argument("--model", required=True)
    p.add_argument("--label", required=True)
    p.add_argument("--data")
    p.add_argument("--text", help="explain a single ad-hoc text instead of --data examples")
    p.add_argument("--max-examples", type=int, default=10)
    p.add_argument("--out-dir", required=True)
    _add_lime_flags(p)
    p.set_defaults(func=_cmd_explain)

    p = sub.add_parser("compare", help="side-by-side LIME feature tables for two models")
    p.add_argument("--model-a", required=True)
    p.add_argument("--model-b", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--label", required=True)
    p.add_argument("--max-examples", type=int, default=10)
    p.add_argument("--top", type=int, default=15)
    p.add_argument("--svg", action="store_true")
    p.add_argument("--out-dir", required=True)
    _add_lime_flags(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("grid", help="run the full sample-size grid from a JSON config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_grid)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "explain" and (args.text is None) == (args.data is None):
            raise ConfigError("explain needs exactly one of --data or --text")
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except (FileNotFoundError, OSError, corpus.DataFormatError, corpus.BalanceShortfallError, ValueError) as err:
        print(f"data error: {err}", file=sys.stderr)
        return 2
    except (training.TrainingError, FloatingPointError, np.linalg.LinAlgError) as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
