"""Training loop, evaluation driver, and per-epoch logging.

Batches group whole sentences; a sentence's aspects always share a batch
because the aspect graph lives inside the sentence. Shuffling draws from a
per-epoch stream keyed by the run seed, so runs are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .errors import DivergenceError
from .metrics import EvalReport, compute_metrics
from .model import SdgcnModel
from .params import adam_step
from .rng import RngStream


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    test_accuracy: float | None = None
    test_macro_f1: float | None = None

    def to_line(self) -> str:
        parts = [f"epoch={self.epoch}", f"train_loss={self.train_loss:.6f}"]
        if self.test_accuracy is not None:
            parts.append(f"test_accuracy={self.test_accuracy:.6f}")
            parts.append(f"test_macro_f1={self.test_macro_f1:.6f}")
        return " ".join(parts)


@dataclass
class TrainResult:
    epoch_logs: list[EpochLog] = field(default_factory=list)
    steps: int = 0
    best_epoch: int = 0
    best_accuracy: float = -1.0
    best_state: dict | None = None
    best_report: EvalReport | None = None
    final_report: EvalReport | None = None
    diverged: bool = False
    diverged_step: int | None = None
    diverged_param: str | None = None


def iter_batches(count: int, batch_size: int, rng: RngStream) -> list[list[int]]:
    order = rng.permutation(count)
    return [list(order[i : i + batch_size]) for i in range(0, count, batch_size)]


def evaluate(model: SdgcnModel, instances) -> EvalReport:
    """Dropout-off evaluation; one prediction per aspect."""
    gold, predicted, ids = [], [], []
    for inst in instances:
        labels = model.gold_labels(inst)
        preds = model.predict(inst)
        for i, (g, p) in enumerate(zip(labels, preds)):
            gold.append(g)
            predicted.append(p)
            ids.append((inst.sentence_id, i))
    return compute_metrics(gold, predicted, ids=ids)


def train_model(model: SdgcnModel, train_instances, test_instances=None, log_fn=None) -> TrainResult:
    """Run the configured number of epochs; returns logs and the best state.

    A non-finite loss or gradient aborts training with the offending global
    step recorded, leaving parameters at their last finite values.
    """
    config = model.config
    result = TrainResult()
    train_instances = list(train_instances)
    for epoch in range(1, config.epochs + 1):
        shuffle_rng = RngStream(config.seed, f"shuffle/epoch-{epoch}")
        batch_losses = []
        for batch_idx in iter_batches(len(train_instances), config.batch_size, shuffle_rng):
            result.steps += 1
            batch = [train_instances[i] for i in batch_idx]
            loss = model.batch_loss(batch, training=True)
            value = loss.value.item()
            if not np.isfinite(value):
                result.diverged = True
                result.diverged_step = result.steps
                return result
            model.store.zero_grad()
            ad.backward(loss)
            try:
                adam_step(model.store, lr=config.learning_rate)
            except DivergenceError as exc:
                result.diverged = True
                result.diverged_step = result.steps
                result.diverged_param = exc.param_name
                return result
            batch_losses.append(value)
        log = EpochLog(epoch=epoch, train_loss=float(np.mean(batch_losses)))
        if test_instances:
            report = evaluate(model, test_instances)
            log.test_accuracy = report.accuracy
            log.test_macro_f1 = report.macro_f1
            result.final_report = report
            if report.accuracy > result.best_accuracy:
                result.best_accuracy = report.accuracy
                result.best_epoch = epoch
                result.best_state = model.store.snapshot()
                result.best_report = report
        result.epoch_logs.append(log)
        if log_fn is not None:
            log_fn(log.to_line())
    return result
