"""Ablation grid (attention/GCN switches) and the layer-count sweep.

Rows report the best test accuracy seen during each run plus the trainable
parameter count, so the grid doubles as a capacity comparison.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .config import RunConfig
from .corpus import Vocabulary
from .model import SdgcnModel
from .train import TrainResult, train_model

TABLE_GRID = (
    ("Att", dict(use_c2a_attention=False, use_gcn=False)),
    ("Att+GCN", dict(use_c2a_attention=False, use_gcn=True)),
    ("BiAtt", dict(use_c2a_attention=True, use_gcn=False)),
    ("BiAtt+GCN", dict(use_c2a_attention=True, use_gcn=True)),
)


@dataclass
class AblationRow:
    name: str
    accuracy: float
    macro_f1: float
    param_count: int
    best_epoch: int


def run_variant(name: str, config: RunConfig, vocab: Vocabulary, train_set, test_set, log_fn=None) -> tuple[AblationRow, TrainResult]:
    model = SdgcnModel(config, vocab)
    prefix = f"[{name}] "
    wrapped = (lambda line: log_fn(prefix + line)) if log_fn else None
    result = train_model(model, train_set, test_instances=test_set, log_fn=wrapped)
    macro = result.best_report.macro_f1 if result.best_report else 0.0
    row = AblationRow(
        name=name,
        accuracy=max(result.best_accuracy, 0.0),
        macro_f1=macro,
        param_count=model.param_count(),
        best_epoch=result.best_epoch,
    )
    return row, result


def run_switch_grid(config: RunConfig, vocab: Vocabulary, train_set, test_set, log_fn=None) -> list[AblationRow]:
    """The four attention/GCN combinations, everything else shared."""
    rows = []
    for name, switches in TABLE_GRID:
        variant = dataclasses.replace(config, **switches)
        row, _ = run_variant(name, variant, vocab, train_set, test_set, log_fn)
        rows.append(row)
    return rows


def run_layer_sweep(config: RunConfig, vocab: Vocabulary, train_set, test_set, layers=range(1, 9), log_fn=None) -> list[AblationRow]:
    rows = []
    for l in layers:
        variant = dataclasses.replace(config, num_layers=l, use_gcn=True)
        row, _ = run_variant(f"L={l}", variant, vocab, train_set, test_set, log_fn)
        rows.append(row)
    return rows


def format_rows(rows: list[AblationRow]) -> list[str]:
    lines = ["name\taccuracy\tmacro_f1\tparams\tbest_epoch"]
    for r in rows:
        lines.append(f"{r.name}\t{r.accuracy:.4f}\t{r.macro_f1:.4f}\t{r.param_count}\t{r.best_epoch}")
    return lines
