"""Figure rendering for the report paths: every chart lands next to its
delimited data file so a run directory is self-contained."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .ablation import AblationRow
from .corpus import DatasetStats
from .metrics import EvalReport
from .train import EpochLog


def save_aspect_histogram(stats: DatasetStats, path, title: str = "aspects per sentence") -> str:
    ks = sorted(stats.aspects_per_sentence)
    counts = [stats.aspects_per_sentence[k] for k in ks]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(ks, counts, color="#4878a8")
    ax.set_xlabel("aspects in sentence")
    ax.set_ylabel("sentences")
    ax.set_title(title)
    ax.set_xticks(ks)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def save_training_curves(epoch_logs: list[EpochLog], path, title: str = "training") -> str:
    epochs = [l.epoch for l in epoch_logs]
    losses = [l.train_loss for l in epoch_logs]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(epochs, losses, marker="o", color="#b04a4a", label="train loss")
    ax.set_xlabel("epoch")
    ax.set_ylabel("train loss")
    accs = [l.test_accuracy for l in epoch_logs]
    if any(a is not None for a in accs):
        twin = ax.twinx()
        twin.plot(epochs, accs, marker="s", color="#4878a8", label="test accuracy")
        twin.set_ylabel("test accuracy")
        twin.set_ylim(0.0, 1.0)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def save_layer_sweep(rows: list[AblationRow], path, title: str = "GCN depth sweep") -> str:
    ls = list(range(1, len(rows) + 1))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ls, [r.accuracy for r in rows], marker="o", label="accuracy")
    ax.plot(ls, [r.macro_f1 for r in rows], marker="s", label="macro F1")
    ax.set_xlabel("GCN layers")
    ax.set_ylabel("score")
    ax.set_xticks(ls)
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def save_variant_bars(rows: list[AblationRow], path, title: str = "module ablations") -> str:
    names = [r.name for r in rows]
    xs = range(len(rows))
    width = 0.38
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar([x - width / 2 for x in xs], [r.accuracy for r in rows], width, label="accuracy")
    ax.bar([x + width / 2 for x in xs], [r.macro_f1 for r in rows], width, label="macro F1")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(names)
    ax.set_ylim(0.0, 1.0)
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def save_class_f1(report: EvalReport, path, title: str = "per-class F1") -> str:
    labels = list(report.per_class)
    f1s = [report.per_class[l].f1 for l in labels]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(labels, f1s, color="#6a9a58")
    ax.set_ylim(0.0, 1.0)
    ax.set_ylabel("F1")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)
