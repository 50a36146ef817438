"""Bi-LSTM encoding of sentences and aspect terms, plus aspect-distance
position weighting.

Two parameter sets exist per model: one for the full sentence (`ctx_lstm.*`)
and one shared across every aspect term (`asp_lstm.*`). Gate matrices act on
the concatenated [input; hidden] vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import DiffNode
from .errors import PreconditionError, ShapeError
from .params import ParamStore, init_uniform
from .rng import RngStream

GATES = ("i", "f", "o", "c")

DEFAULT_POSITION_CUTOFF = 20


@dataclass(frozen=True)
class LstmDirection:
    """Gate parameters for one direction. Matrices are d_hid x (d_in + d_hid)."""

    W_i: DiffNode
    W_f: DiffNode
    W_o: DiffNode
    W_c: DiffNode
    b_i: DiffNode
    b_f: DiffNode
    b_o: DiffNode
    b_c: DiffNode
    d_hid: int


@dataclass(frozen=True)
class BiLstmParams:
    fw: LstmDirection
    bw: LstmDirection
    d_in: int
    d_hid: int

    def swapped(self) -> "BiLstmParams":
        """Same parameters with the direction roles exchanged."""
        return BiLstmParams(fw=self.bw, bw=self.fw, d_in=self.d_in, d_hid=self.d_hid)


@dataclass
class ContextEncoding:
    context: DiffNode  # 2 d_hid x N
    aspects: list[DiffNode]  # each 2 d_hid x M_i


def register_bilstm(store: ParamStore, prefix: str, d_in: int, d_hid: int, rng: RngStream) -> BiLstmParams:
    """Create and register both directions' gate parameters.

    Each tensor draws from its own named child stream, so initial values do
    not depend on registration order. The forget-gate bias starts at 1.0 so
    early training retains cell state; everything else is U(-0.01, 0.01).
    """
    directions = {}
    for direction in ("fw", "bw"):
        nodes = {}
        for gate in GATES:
            w_name = f"{prefix}.{direction}.W_{gate}"
            b_name = f"{prefix}.{direction}.b_{gate}"
            w = init_uniform((d_hid, d_in + d_hid), rng=rng.child(w_name))
            if gate == "f":
                b = np.ones((d_hid, 1), dtype=np.float64)
            else:
                b = init_uniform((d_hid, 1), rng=rng.child(b_name))
            nodes[f"W_{gate}"] = store.add(w_name, w)
            nodes[f"b_{gate}"] = store.add(b_name, b)
        directions[direction] = LstmDirection(d_hid=d_hid, **nodes)
    return BiLstmParams(fw=directions["fw"], bw=directions["bw"], d_in=d_in, d_hid=d_hid)


def _run_direction(p: LstmDirection, cols: list[DiffNode]) -> list[DiffNode]:
    h = ad.constant(np.zeros((p.d_hid, 1)))
    c = ad.constant(np.zeros((p.d_hid, 1)))
    states = []
    for x in cols:
        xh = ad.concat_rows([x, h])
        gate_i = ad.sigmoid(ad.add(ad.matmul(p.W_i, xh), p.b_i))
        gate_f = ad.sigmoid(ad.add(ad.matmul(p.W_f, xh), p.b_f))
        gate_o = ad.sigmoid(ad.add(ad.matmul(p.W_o, xh), p.b_o))
        cand = ad.tanh(ad.add(ad.matmul(p.W_c, xh), p.b_c))
        c = ad.add(ad.mul(gate_f, c), ad.mul(gate_i, cand))
        h = ad.mul(gate_o, ad.tanh(c))
        states.append(h)
    return states


def bilstm_encode(embeddings: DiffNode, params: BiLstmParams) -> DiffNode:
    """Encode a d_in x T matrix into 2 d_hid x T hidden states.

    Forward states occupy rows [0, d_hid), backward states [d_hid, 2 d_hid);
    column t belongs to token t in both blocks.
    """
    d_in, t_len = embeddings.value.shape
    if d_in != params.d_in:
        raise ShapeError(
            f"embedding rows {d_in} do not match encoder input size {params.d_in}",
            (embeddings.value.shape,),
        )
    if t_len < 1:
        raise PreconditionError("cannot encode an empty sequence")
    cols = [ad.col_slice(embeddings, t) for t in range(t_len)]
    forward = _run_direction(params.fw, cols)
    backward = list(reversed(_run_direction(params.bw, list(reversed(cols)))))
    return ad.concat_rows([ad.concat_cols(forward), ad.concat_cols(backward)])


def encode_instance(instance, vocab, table: DiffNode, ctx_params: BiLstmParams, asp_params: BiLstmParams, emb_transform=None) -> ContextEncoding:
    """Encode one sentence and each of its aspect terms.

    All aspects run through the same `asp_params`, so identical aspect token
    sequences yield identical encodings. `emb_transform` (e.g. dropout) is
    applied to every looked-up embedding matrix before encoding.
    """
    idx = vocab.indices(instance.tokens)
    emb = ad.embedding_lookup(table, idx)
    if emb_transform is not None:
        emb = emb_transform(emb)
    context = bilstm_encode(emb, ctx_params)
    aspects = []
    for a in instance.aspects:
        a_emb = ad.embedding_lookup(table, idx[a.start : a.end])
        if emb_transform is not None:
            a_emb = emb_transform(a_emb)
        aspects.append(bilstm_encode(a_emb, asp_params))
    return ContextEncoding(context=context, aspects=aspects)


def position_weights(instance, aspect_index: int, s: int = DEFAULT_POSITION_CUTOFF) -> np.ndarray:
    """Per-token weight decaying with distance to the aspect span.

    Weight 1 on aspect tokens, 1 - dis/N within the cutoff s, 0 beyond it.
    dis counts tokens to the nearest end of the span, treating the aspect as
    a single unit.
    """
    if s < 1:
        raise PreconditionError(f"position cutoff must be >= 1, got {s}")
    a = instance.aspects[aspect_index]
    n = len(instance.tokens)
    weights = np.zeros(n, dtype=np.float64)
    for t in range(n):
        if a.start <= t < a.end:
            dis = 0
        elif t < a.start:
            dis = a.start - t
        else:
            dis = t - (a.end - 1)
        if dis == 0:
            weights[t] = 1.0
        elif dis <= s:
            weights[t] = 1.0 - dis / n
    return weights


def apply_position(h_context: DiffNode, weights: np.ndarray) -> DiffNode:
    """Scale column t of the context encoding by weights[t]."""
    n = h_context.value.shape[1]
    if weights.shape != (n,):
        raise ShapeError(
            f"expected {n} position weights, got {weights.shape}",
            (h_context.value.shape, weights.shape),
        )
    row = ad.constant(weights.reshape(1, n))
    return ad.mul(h_context, row)
