"""Bidirectional attention between a sentence and its aspect terms.

Stage one scores each aspect token against the average-pooled sentence and
pools the aspect into a single vector m. Stage two scores each context token
against m over the position-weighted columns, then sums the raw context
columns under those weights. Both scoring functions are bilinear.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import DiffNode
from .errors import FormatError, ShapeError
from .params import ParamStore, init_uniform
from .rng import RngStream

WEIGHT_DECIMALS = 6
_UNIT = 10 ** WEIGHT_DECIMALS


@dataclass(frozen=True)
class BilinearAttnParams:
    W_ca: DiffNode  # context -> aspect scoring, 2d_hid x 2d_hid
    W_ac: DiffNode  # aspect -> context scoring, 2d_hid x 2d_hid


@dataclass
class AspectSummary:
    m: DiffNode  # 2d_hid x 1 pooled aspect vector
    beta: DiffNode  # 1 x M_i weights over aspect tokens


@dataclass
class AspectSpecificRep:
    x: DiffNode  # 2d_hid x 1 aspect-specific context vector
    gamma: DiffNode  # 1 x N weights over context tokens


def register_attention(store: ParamStore, d_model: int, rng: RngStream) -> BilinearAttnParams:
    w_ca = store.add("attn.W_ca", init_uniform((d_model, d_model), rng=rng.child("attn.W_ca")))
    w_ac = store.add("attn.W_ac", init_uniform((d_model, d_model), rng=rng.child("attn.W_ac")))
    return BilinearAttnParams(W_ca=w_ca, W_ac=w_ac)


def avg_pool_context(h_context: DiffNode) -> DiffNode:
    """Mean over the N columns; 2d_hid x 1."""
    n = h_context.value.shape[1]
    pool = ad.constant(np.full((n, 1), 1.0 / n))
    return ad.matmul(h_context, pool)


def _bilinear_scores(query: DiffNode, weight: DiffNode, keys: DiffNode) -> DiffNode:
    return ad.matmul(ad.matmul(ad.transpose(query), weight), keys)


def context_to_aspect(h_bar: DiffNode, h_aspect: DiffNode, w_ca: DiffNode) -> AspectSummary:
    """Pool the aspect's hidden states under attention from the sentence mean."""
    scores = _bilinear_scores(h_bar, w_ca, h_aspect)
    beta = ad.masked_softmax(scores, np.ones(h_aspect.value.shape[1], dtype=bool))
    m = ad.matmul(h_aspect, ad.transpose(beta))
    return AspectSummary(m=m, beta=beta)


def aspect_to_context(
    m: DiffNode,
    p_weighted: DiffNode,
    h_context: DiffNode,
    w_ac: DiffNode,
    attend_over_weighted_context: bool = False,
) -> AspectSpecificRep:
    """Aspect-conditioned summary of the sentence.

    Scores always read the position-weighted columns; the weighted sum runs
    over the raw context states unless `attend_over_weighted_context` is set.
    """
    if p_weighted.value.shape != h_context.value.shape:
        raise ShapeError(
            "position-weighted and raw context must share a shape",
            (p_weighted.value.shape, h_context.value.shape),
        )
    scores = _bilinear_scores(m, w_ac, p_weighted)
    gamma = ad.masked_softmax(scores, np.ones(h_context.value.shape[1], dtype=bool))
    source = p_weighted if attend_over_weighted_context else h_context
    x = ad.matmul(source, ad.transpose(gamma))
    return AspectSpecificRep(x=x, gamma=gamma)


# ----------------------------------------------------------------- export


@dataclass(frozen=True)
class AttentionRecord:
    sentence_id: str
    aspect_index: int
    kind: str  # "beta" or "gamma"
    tokens: tuple[str, ...]
    weights: tuple[float, ...]


def quantize_weights(weights) -> list[float]:
    """Round to 6 decimals so the row sums to exactly 1.000000.

    Largest-remainder rounding: floor everything, then hand the missing
    units to the largest fractional remainders (ties to the lowest index).
    """
    scaled = [float(w) * _UNIT for w in weights]
    floors = [int(np.floor(s)) for s in scaled]
    remainders = [s - f for s, f in zip(scaled, floors)]
    leftover = _UNIT - sum(floors)
    if leftover >= 0:
        order = sorted(range(len(floors)), key=lambda i: (-remainders[i], i))
        for k in range(leftover):
            floors[order[k % len(order)]] += 1
    else:
        order = sorted(range(len(floors)), key=lambda i: (remainders[i], i))
        for k in range(-leftover):
            floors[order[k % len(order)]] -= 1
    return [f / _UNIT for f in floors]


def format_attention(instance, summaries, reps) -> list[str]:
    """One tab-separated line per (aspect, weight kind).

    beta rows cover the aspect tokens, gamma rows the whole sentence. Weights
    are printed at 6 decimals and each row sums to exactly 1.000000.
    """
    lines = []
    for i, (summary, rep) in enumerate(zip(summaries, reps)):
        a = instance.aspects[i]
        rows = (
            ("beta", instance.tokens[a.start : a.end], summary.beta),
            ("gamma", instance.tokens, rep.gamma),
        )
        for kind, tokens, node in rows:
            weights = quantize_weights(node.value.ravel())
            lines.append(
                "\t".join(
                    (
                        instance.sentence_id,
                        str(i),
                        kind,
                        " ".join(tokens),
                        " ".join(f"{w:.{WEIGHT_DECIMALS}f}" for w in weights),
                    )
                )
            )
    return lines


def parse_attention(lines) -> list[AttentionRecord]:
    records = []
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 5:
            raise FormatError(f"attention line {lineno}: expected 5 fields, got {len(parts)}", line=lineno)
        sid, idx, kind, tokens, weights = parts
        if kind not in ("beta", "gamma"):
            raise FormatError(f"attention line {lineno}: unknown weight kind '{kind}'", line=lineno)
        toks = tuple(tokens.split(" "))
        ws = tuple(float(w) for w in weights.split(" "))
        if len(toks) != len(ws):
            raise FormatError(
                f"attention line {lineno}: {len(toks)} tokens but {len(ws)} weights", line=lineno
            )
        records.append(AttentionRecord(sid, int(idx), kind, toks, ws))
    return records
