"""Finite-difference gradient checking for any loss built over a ParamStore."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import DiffNode, backward
from .errors import PreconditionError
from .params import ParamStore
from .rng import RngStream

# Below this magnitude the comparison falls back to absolute error; central
# differences on an O(1) loss carry ~1e-12 of roundoff noise.
_REL_FLOOR = 1e-6


@dataclass
class ParamCheck:
    name: str
    max_rel_err: float
    worst_coord: tuple[int, ...]
    checked: int
    failed: int


@dataclass
class GradCheckReport:
    tol: float
    eps: float
    entries: list[ParamCheck] = field(default_factory=list)

    @property
    def max_rel_err(self) -> float:
        return max((e.max_rel_err for e in self.entries), default=0.0)

    @property
    def passed(self) -> bool:
        return all(e.failed == 0 for e in self.entries)

    def format_lines(self) -> list[str]:
        lines = [
            f"param={e.name} max_rel_err={e.max_rel_err:.3e} checked={e.checked} failed={e.failed}"
            for e in self.entries
        ]
        lines.append(
            f"overall max_rel_err={self.max_rel_err:.3e} tol={self.tol:.1e} "
            f"result={'pass' if self.passed else 'FAIL'}"
        )
        return lines


def _loss_value(loss_builder) -> float:
    node = loss_builder()
    if not isinstance(node, DiffNode) or node.value.size != 1:
        raise PreconditionError("loss_builder must return a scalar DiffNode")
    return float(node.value.reshape(()))


def grad_check(
    loss_builder,
    params: ParamStore,
    eps: float = 1e-4,
    tol: float = 1e-4,
    max_coords: int = 64,
    seed: int = 0,
) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    `loss_builder` rebuilds the scalar loss from the store's current values;
    it must be deterministic (dropout off, fixed rng); two forward passes
    that disagree raise PreconditionError. Each tensor is checked on at most
    `max_coords` seeded coordinates.
    """
    if _loss_value(loss_builder) != _loss_value(loss_builder):
        raise PreconditionError("loss_builder is not deterministic: two forward passes disagree")

    params.zero_grad()
    loss = loss_builder()
    backward(loss)
    analytic = {n: params.entry(n).node.grad.copy() for n in params.trainable_names()}

    report = GradCheckReport(tol=tol, eps=eps)
    for name in params.trainable_names():
        value = params.entry(name).node.value
        flat = value.reshape(-1)
        size = flat.shape[0]
        if size <= max_coords:
            coords = np.arange(size)
        else:
            coords = RngStream(seed, f"gradcheck/{name}").permutation(size)[:max_coords]
        worst = 0.0
        worst_coord: tuple[int, ...] = ()
        failed = 0
        for c in coords:
            saved = flat[c]
            flat[c] = saved + eps
            up = _loss_value(loss_builder)
            flat[c] = saved - eps
            down = _loss_value(loss_builder)
            flat[c] = saved
            numeric = (up - down) / (2.0 * eps)
            a = analytic[name].reshape(-1)[c]
            rel = abs(a - numeric) / max(abs(a), abs(numeric), _REL_FLOOR)
            if rel > worst:
                worst = rel
                worst_coord = tuple(int(i) for i in np.unravel_index(c, value.shape))
            if rel > tol:
                failed += 1
        report.entries.append(
            ParamCheck(name=name, max_rel_err=worst, worst_coord=worst_coord,
                       checked=len(coords), failed=failed)
        )
    return report


def model_grad_check(
    topology: str = "global",
    d_emb: int = 5,
    d_hid: int = 4,
    n_tokens: int = 6,
    n_aspects: int = 3,
    num_layers: int = 2,
    seed: int = 0,
    eps: float = 1e-4,
    tol: float = 1e-4,
    max_coords: int = 64,
) -> GradCheckReport:
    """End-to-end check on a tiny randomly initialized classifier.

    Builds one sentence with `n_aspects` spans (the last spans two tokens
    when room allows), runs the full batch loss with dropout off, and
    compares every trainable tensor against central differences.
    """
    from .config import RunConfig
    from .corpus import POLARITIES, AspectSpan, SentenceInstance, random_vocabulary
    from .model import SdgcnModel

    if n_tokens < 2 * n_aspects:
        raise PreconditionError("need at least two tokens per aspect span")
    tokens = tuple(f"w{i}" for i in range(n_tokens))
    spans = []
    for a in range(n_aspects):
        start = 2 * a
        end = start + (2 if a == n_aspects - 1 else 1)
        end = min(end, n_tokens)
        spans.append(AspectSpan(start, end, POLARITIES[a % len(POLARITIES)], " ".join(tokens[start:end])))
    instance = SentenceInstance("gradcheck", tokens, tuple(spans))

    config = RunConfig(
        d_emb=d_emb,
        d_hid=d_hid,
        num_layers=num_layers,
        topology=topology,
        dropout=0.0,
        seed=seed,
    )
    vocab = random_vocabulary(list(tokens), dim=d_emb, seed=seed)
    model = SdgcnModel(config, vocab)
    builder = lambda: model.batch_loss([instance], training=False)
    return grad_check(builder, model.store, eps=eps, tol=tol, max_coords=max_coords, seed=seed)
