"""Command-line interface: stats, train, eval, ablate, gradcheck, synth.

Every command writes its delimited outputs plus a machine-readable
results.json into --out; report-style commands also render PNG charts next
to the delimited files unless --no-figures is given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from .ablation import format_rows, run_layer_sweep, run_switch_grid
from .attention import format_attention
from .config import RunConfig, config_hash, config_lines, load_config
from .corpus import (
    POLARITIES,
    collect_words,
    dataset_stats,
    load_glove,
    load_instances,
    parse_semeval,
    random_vocabulary,
    save_instances,
)
from .errors import ConfigError, FormatError, SdgcnError
from .gradcheck import model_grad_check
from .metrics import EvalReport
from .model import SdgcnModel
from .params import load_checkpoint, save_checkpoint
from .synth import SyntheticSpec, gen_synthetic
from .train import evaluate, train_model

# Published aspect-polarity counts for the SemEval-2014 task-4 splits; the
# stats command prints the deviation of a parsed corpus from these.
EXPECTED_CLASS_COUNTS = {
    "restaurant": {
        "train": {"positive": 2164, "negative": 807, "neutral": 637},
        "test": {"positive": 728, "negative": 196, "neutral": 196},
    },
    "laptop": {
        "train": {"positive": 994, "negative": 870, "neutral": 464},
        "test": {"positive": 341, "negative": 128, "neutral": 169},
    },
}

# Accepted file names per dataset split, tried in order under --data-dir.
SPLIT_FILENAMES = {
    ("restaurant", "train"): ("Restaurants_Train.xml", "restaurant_train.xml"),
    ("restaurant", "test"): ("Restaurants_Test_Gold.xml", "restaurant_test.xml"),
    ("laptop", "train"): ("Laptops_Train.xml", "laptop_train.xml"),
    ("laptop", "test"): ("Laptops_Test_Gold.xml", "laptop_test.xml"),
}


def default_data_dir() -> str:
    return os.environ.get("SDGCN_DATA_DIR", "data")


def find_split(data_dir, dataset: str, split: str) -> Path:
    candidates = SPLIT_FILENAMES[(dataset, split)]
    for name in candidates:
        path = Path(data_dir) / name
        if path.exists():
            return path
    raise ConfigError(
        f"no {dataset} {split} file under {data_dir} (tried {', '.join(candidates)})"
    )


# ------------------------------------------------------------- shared io


def _ensure_out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_lines(path: Path, lines) -> None:
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_results(out: Path, record: dict) -> None:
    record["runtime_seconds"] = round(time.time() - record.pop("_t0"), 3)
    with open(out / "results.json", "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_overrides(pairs) -> dict:
    overrides = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got '{pair}'")
        key, value = pair.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def _read_xml(path) -> bytes:
    p = Path(path)
    if not path:
        raise ConfigError("config is missing a dataset path (train_xml/test_xml)")
    if not p.exists():
        raise ConfigError(f"dataset file not found: {p}")
    return p.read_bytes()


def _load_setup(config: RunConfig, echo=print):
    """Parse both splits and build the embedding table the config asks for."""
    sets = {}
    for split, path in (("train", config.train_xml), ("test", config.test_xml)):
        if str(path).endswith(".bin"):
            instances = load_instances(path)
        else:
            instances, report = parse_semeval(_read_xml(path), max_aspects=config.max_aspects)
            echo(f"[{split}] kept {report.sentences_kept} sentences / {report.aspects_kept} aspects")
        sets[split] = instances
    words = collect_words(sets["train"], sets["test"])
    if config.embeddings:
        if not Path(config.embeddings).exists():
            raise ConfigError(f"embeddings file not found: {config.embeddings}")
        vocab = load_glove(config.embeddings, words, seed=config.seed, expected_dim=config.d_emb)
        echo(f"[vocab] {vocab.size} words, embedding coverage {vocab.coverage:.3f}")
    else:
        vocab = random_vocabulary(words, dim=config.d_emb, seed=config.seed)
        echo(f"[vocab] {vocab.size} words, random table (no embeddings path)")
    return sets["train"], sets["test"], vocab


def _report_rows(report: EvalReport) -> list[str]:
    lines = ["label\tprecision\trecall\tf1\tsupport\tundefined"]
    for label, m in report.per_class.items():
        lines.append(
            f"{label}\t{m.precision:.6f}\t{m.recall:.6f}\t{m.f1:.6f}\t{m.support}\t{int(m.undefined)}"
        )
    lines.append(f"accuracy\t{report.accuracy:.6f}")
    lines.append(f"macro_f1\t{report.macro_f1:.6f}")
    return lines


def _prediction_rows(report: EvalReport) -> list[str]:
    lines = ["sentence_id\taspect_index\tgold\tpredicted"]
    for sid, aspect, gold, pred in report.predictions:
        lines.append(f"{sid}\t{aspect}\t{POLARITIES[gold]}\t{POLARITIES[pred]}")
    return lines


# ------------------------------------------------------------- commands


def cmd_stats(args) -> int:
    out = _ensure_out(args)
    record = {"_t0": time.time(), "command": "stats", "dataset": args.dataset, "splits": {}}
    expected = EXPECTED_CLASS_COUNTS[args.dataset]
    count_rows = ["split\tlabel\tcount\texpected\tdeviation"]
    hist_rows = ["split\taspects_in_sentence\tsentences"]
    exact = True
    for split in ("train", "test"):
        explicit = getattr(args, f"{split}_xml")
        path = Path(explicit) if explicit else find_split(args.data_dir, args.dataset, split)
        instances, report = parse_semeval(_read_xml(path), max_aspects=args.max_aspects)
        stats = dataset_stats(instances)
        print(f"== {args.dataset} {split} ({path}) ==")
        for line in report.to_lines():
            print(f"  {line}")
        for line in stats.to_lines():
            print(f"  {line}")
        for label in POLARITIES:
            got = stats.class_counts.get(label, 0)
            want = expected[split][label]
            dev = got - want
            exact = exact and dev == 0
            print(f"  {label}: {got} (expected {want}, deviation {dev:+d})")
            count_rows.append(f"{split}\t{label}\t{got}\t{want}\t{dev:+d}")
        for k in sorted(stats.aspects_per_sentence):
            hist_rows.append(f"{split}\t{k}\t{stats.aspects_per_sentence[k]}")
        record["splits"][split] = {
            "path": str(path),
            "parse": report.to_dict(),
            "stats": stats.to_dict(),
            "expected": expected[split],
        }
        if not args.no_figures:
            from .figures import save_aspect_histogram

            save_aspect_histogram(
                stats, out / f"aspects_{split}.png", title=f"{args.dataset} {split}: aspects per sentence"
            )
    print("class counts match published splits" if exact else "class counts deviate from published splits (see above)")
    _write_lines(out / "class_counts.tsv", count_rows)
    _write_lines(out / "aspect_histogram.tsv", hist_rows)
    record["exact_match"] = exact
    _write_results(out, record)
    return 0


def cmd_train(args) -> int:
    out = _ensure_out(args)
    config = load_config(args.config, overrides=_parse_overrides(args.set))
    record = {"_t0": time.time(), "command": "train", "config_hash": config_hash(config),
              "config": config_lines(config)}
    train_set, test_set, vocab = _load_setup(config)
    model = SdgcnModel(config, vocab)
    print(f"[model] {model.param_count()} trainable parameters")
    result = train_model(model, train_set, test_instances=test_set, log_fn=print)

    _write_lines(out / "epochs.log", [log.to_line() for log in result.epoch_logs] or [""])
    final_state = model.store.snapshot()
    save_checkpoint(out / "final.ckpt", model.store)
    if result.best_state is not None:
        model.store.restore(result.best_state)
        save_checkpoint(out / "best.ckpt", model.store)
        model.store.restore(final_state)
    if not args.no_figures and result.epoch_logs:
        from .figures import save_training_curves

        save_training_curves(result.epoch_logs, out / "training_curves.png")

    record.update(
        param_count=model.param_count(),
        steps=result.steps,
        best_epoch=result.best_epoch,
        best_accuracy=result.best_accuracy,
        best_macro_f1=result.best_report.macro_f1 if result.best_report else None,
        final_accuracy=result.final_report.accuracy if result.final_report else None,
        final_macro_f1=result.final_report.macro_f1 if result.final_report else None,
        diverged=result.diverged,
        diverged_step=result.diverged_step,
        diverged_param=result.diverged_param,
    )
    _write_results(out, record)
    if result.diverged:
        print(f"training diverged at step {result.diverged_step}", file=sys.stderr)
        return 1
    print(f"best test accuracy {result.best_accuracy:.4f} at epoch {result.best_epoch}")
    return 0


def cmd_eval(args) -> int:
    out = _ensure_out(args)
    config = load_config(args.config, overrides=_parse_overrides(args.set))
    record = {"_t0": time.time(), "command": "eval", "config_hash": config_hash(config),
              "checkpoint": args.checkpoint, "split": args.split}
    train_set, test_set, vocab = _load_setup(config)
    model = SdgcnModel(config, vocab)
    if not Path(args.checkpoint).exists():
        raise ConfigError(f"checkpoint not found: {args.checkpoint}")
    load_checkpoint(args.checkpoint, model.store)
    instances = test_set if args.split == "test" else train_set
    report = evaluate(model, instances)
    for line in report.to_lines():
        print(line)
    _write_lines(out / "report.tsv", _report_rows(report))
    _write_lines(out / "predictions.tsv", _prediction_rows(report))
    if args.export_attention:
        lines = []
        for inst in instances:
            fr = model.forward(inst, training=False)
            lines.extend(format_attention(inst, fr.summaries, fr.reps))
        _write_lines(out / "attention.tsv", lines)
    if not args.no_figures:
        from .figures import save_class_f1

        save_class_f1(report, out / "class_f1.png", title=f"per-class F1 ({args.split})")
    record.update(metrics=report.to_dict())
    _write_results(out, record)
    return 0


def cmd_ablate(args) -> int:
    out = _ensure_out(args)
    config = load_config(args.config, overrides=_parse_overrides(args.set))
    record = {"_t0": time.time(), "command": "ablate", "mode": args.mode,
              "config_hash": config_hash(config), "config": config_lines(config)}
    train_set, test_set, vocab = _load_setup(config)
    if args.mode == "switches":
        rows = run_switch_grid(config, vocab, train_set, test_set, log_fn=print)
    else:
        rows = run_layer_sweep(config, vocab, train_set, test_set, log_fn=print)
    lines = format_rows(rows)
    for line in lines:
        print(line)
    _write_lines(out / "ablation.tsv", lines)
    if not args.no_figures:
        if args.mode == "switches":
            from .figures import save_variant_bars

            save_variant_bars(rows, out / "variant_bars.png")
        else:
            from .figures import save_layer_sweep

            save_layer_sweep(rows, out / "layer_sweep.png")
    record["rows"] = [vars(r) for r in rows]
    _write_results(out, record)
    return 0


def _format_tol(tol: float) -> str:
    text = f"{tol:.0e}"
    return text.replace("e-0", "e-").replace("e+0", "e+")


def cmd_gradcheck(args) -> int:
    out = _ensure_out(args)
    record = {"_t0": time.time(), "command": "gradcheck", "topologies": {}}
    topologies = ("adjacent", "global") if args.topology == "both" else (args.topology,)
    lines = []
    ok = True
    worst = 0.0
    for topology in topologies:
        report = model_grad_check(
            topology=topology,
            d_hid=args.d_hid,
            n_tokens=args.tokens,
            n_aspects=args.aspects,
            num_layers=args.layers,
            tol=args.tol,
            max_coords=args.max_coords,
        )
        lines.append(f"== topology {topology} ==")
        lines.extend(report.format_lines())
        ok = ok and report.passed
        worst = max(worst, report.max_rel_err)
        record["topologies"][topology] = {
            "max_rel_err": report.max_rel_err,
            "passed": report.passed,
        }
    if ok:
        lines.append(f"gradcheck PASS: max rel err < {_format_tol(args.tol)} (worst {worst:.3g})")
    else:
        lines.append(f"gradcheck FAIL: max rel err {worst:.3g} exceeds {_format_tol(args.tol)}")
    for line in lines:
        print(line)
    _write_lines(out / "gradcheck.txt", lines)
    record["passed"] = ok
    _write_results(out, record)
    return 0 if ok else 1


def cmd_synth(args) -> int:
    out = _ensure_out(args)
    record = {"_t0": time.time(), "command": "synth", "count": args.count, "seed": args.seed}
    spec = SyntheticSpec(
        mask_rate=args.mask_rate,
        min_aspects=args.min_aspects,
        max_aspects=args.max_aspects,
        filler_tokens=args.filler,
    )
    corpus = gen_synthetic(spec, args.count, args.seed)
    save_instances(out / "instances.bin", corpus.instances)
    mask_rows = ["sentence_id\taspect_index"]
    for sid, idx in sorted(corpus.masked_pairs()):
        mask_rows.append(f"{sid}\t{idx}")
    _write_lines(out / "masks.tsv", mask_rows)
    stats = dataset_stats(corpus.instances)
    for line in stats.to_lines():
        print(line)
    masked_count = len(corpus.masked_pairs())
    print(f"masked aspects: {masked_count} / {stats.total_aspects}")
    if not args.no_figures:
        from .figures import save_aspect_histogram

        save_aspect_histogram(stats, out / "aspects.png", title="synthetic: aspects per sentence")
    record.update(stats=stats.to_dict(), masked_aspects=masked_count)
    _write_results(out, record)
    return 0


# ------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdgcn",
        description="Aspect-level sentiment classifier with attention and a graph layer over aspects.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, default_out):
        p.add_argument("--out", default=default_out, help="output directory")
        p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    p = sub.add_parser("stats", help="corpus statistics and deviation from published counts")
    p.add_argument("--dataset", choices=sorted(EXPECTED_CLASS_COUNTS), required=True)
    p.add_argument("--data-dir", default=default_data_dir())
    p.add_argument("--train-xml", default=None, help="explicit train file (overrides --data-dir)")
    p.add_argument("--test-xml", default=None, help="explicit test file (overrides --data-dir)")
    p.add_argument("--max-aspects", type=int, default=16)
    add_common(p, "runs/stats")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="train a model from a key=value config file")
    p.add_argument("--config", required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config entry")
    add_common(p, "runs/train")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", choices=("train", "test"), default="test")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--export-attention", action="store_true",
                   help="write per-aspect attention weights to attention.tsv")
    add_common(p, "runs/eval")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="module-switch grid or graph-depth sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--mode", choices=("switches", "layers"), default="switches")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    add_common(p, "runs/ablate")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("gradcheck", help="finite-difference check of the full model")
    p.add_argument("--topology", choices=("adjacent", "global", "both"), default="both")
    p.add_argument("--d-hid", type=int, default=4)
    p.add_argument("--tokens", type=int, default=6)
    p.add_argument("--aspects", type=int, default=3)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--max-coords", type=int, default=64)
    add_common(p, "runs/gradcheck")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("synth", help="generate a synthetic corpus with masked opinion words")
    p.add_argument("--count", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mask-rate", type=float, default=0.3)
    p.add_argument("--min-aspects", type=int, default=2)
    p.add_argument("--max-aspects", type=int, default=3)
    p.add_argument("--filler", type=int, default=0, help="neutral padding tokens per clause")
    add_common(p, "runs/synth")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FormatError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except SdgcnError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
