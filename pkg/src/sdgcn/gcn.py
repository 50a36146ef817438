"""Aspect sentiment graphs, the stacked graph-convolution layers, the output
head, and the training loss.

Nodes are the aspects of one sentence. The adjacent topology chains them in
textual order; the global topology connects every pair. Self-loops are not
stored: each layer has a separate self path with its own weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import DiffNode
from .errors import ConfigError, DataError, PreconditionError, ShapeError
from .params import ParamStore, init_normal, init_uniform
from .rng import RngStream

TOPOLOGIES = ("adjacent", "global")
NUM_CLASSES = 3
DEFAULT_L2 = 0.01
DEFAULT_LAYERS = 2


@dataclass(frozen=True)
class SentimentGraph:
    k: int
    edges: frozenset  # frozenset of (u, v) with u < v, 0-based
    topology: str

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def neighbors(self, v: int) -> list[int]:
        out = []
        for a, b in self.edges:
            if a == v:
                out.append(b)
            elif b == v:
                out.append(a)
        return sorted(out)


def build_graph(k: int, topology: str) -> SentimentGraph:
    if k < 1:
        raise PreconditionError(f"graph needs at least one aspect, got {k}")
    if topology == "adjacent":
        edges = frozenset((i, i + 1) for i in range(k - 1))
    elif topology == "global":
        edges = frozenset((i, j) for i in range(k) for j in range(i + 1, k))
    else:
        raise ConfigError(f"unknown topology '{topology}' (expected one of {TOPOLOGIES})")
    return SentimentGraph(k=k, edges=edges, topology=topology)


def adjacency_matrix(graph: SentimentGraph) -> np.ndarray:
    """Symmetric 0/1 matrix with a zero diagonal."""
    a = np.zeros((graph.k, graph.k), dtype=np.float64)
    for u, v in graph.edges:
        a[u, v] = 1.0
        a[v, u] = 1.0
    return a


@dataclass(frozen=True)
class GcnLayerParams:
    W_cross: DiffNode
    W_self: DiffNode
    b_cross: DiffNode
    b_self: DiffNode


def register_gcn_layers(store: ParamStore, d_model: int, num_layers: int, rng: RngStream) -> list[GcnLayerParams]:
    """One unshared parameter set per layer, names `gcn.<l>.*` with l in 1..L."""
    if num_layers < 1:
        raise ConfigError(f"need at least one layer, got {num_layers}")
    layers = []
    for l in range(1, num_layers + 1):
        nodes = {}
        for field, shape in (
            ("W_cross", (d_model, d_model)),
            ("W_self", (d_model, d_model)),
            ("b_cross", (d_model, 1)),
            ("b_self", (d_model, 1)),
        ):
            name = f"gcn.{l}.{field}"
            nodes[field] = store.add(name, init_uniform(shape, rng=rng.child(name)))
        layers.append(GcnLayerParams(**nodes))
    return layers


def gcn_layer(x: DiffNode, graph: SentimentGraph, params: GcnLayerParams) -> DiffNode:
    """relu(W_cross · (neighbor sum) + b_cross) + relu(W_self · x_v + b_self).

    The two rectifiers are applied separately and then summed. A node with
    no neighbors contributes relu(b_cross) through the cross path.
    """
    if x.value.shape[1] != graph.k:
        raise ShapeError(
            f"input has {x.value.shape[1]} columns but graph has {graph.k} nodes",
            (x.value.shape,),
        )
    mixed = ad.matmul(x, ad.constant(adjacency_matrix(graph)))
    cross = ad.relu(ad.add(ad.matmul(params.W_cross, mixed), params.b_cross))
    self_term = ad.relu(ad.add(ad.matmul(params.W_self, x), params.b_self))
    return ad.add(cross, self_term)


def gcn_forward(x: DiffNode, graph: SentimentGraph, layers: list[GcnLayerParams]) -> DiffNode:
    if not layers:
        raise PreconditionError("gcn_forward needs at least one layer")
    for params in layers:
        x = gcn_layer(x, graph, params)
    return x


# ------------------------------------------------------------- output head


@dataclass(frozen=True)
class OutputHead:
    W_z: DiffNode  # C x d_model
    b_z: DiffNode  # C x 1


def register_output_head(store: ParamStore, d_model: int, rng: RngStream, num_classes: int = NUM_CLASSES) -> OutputHead:
    # the head weight alone uses a standard normal; everything else in the
    # model is U(-0.01, 0.01)
    w = store.add("head.W_z", init_normal((num_classes, d_model), rng=rng.child("head.W_z")))
    b = store.add("head.b_z", np.zeros((num_classes, 1)))
    return OutputHead(W_z=w, b_z=b)


def classify(x: DiffNode, head: OutputHead) -> list[DiffNode]:
    """Per-aspect class probabilities; one 1 x C row per column of x."""
    k = x.value.shape[1]
    out = []
    all_classes = np.ones(head.W_z.value.shape[0], dtype=bool)
    for i in range(k):
        logits = ad.add(ad.matmul(head.W_z, ad.col_slice(x, i)), head.b_z)
        out.append(ad.masked_softmax(ad.transpose(logits), all_classes))
    return out


# -------------------------------------------------------------------- loss


@dataclass(frozen=True)
class LossConfig:
    lam: float = DEFAULT_L2

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigError(f"L2 coefficient must be non-negative, got {self.lam}")


def nll_loss(probs: list[DiffNode], labels) -> DiffNode:
    """Negative log-likelihood summed over the sentence's aspects."""
    if len(probs) != len(labels):
        raise DataError(f"{len(probs)} predictions but {len(labels)} labels")
    total = None
    for p, label in zip(probs, labels):
        c = p.value.shape[1]
        if not 0 <= label < c:
            raise DataError(f"gold label {label} outside 0..{c - 1}")
        term = ad.scale(ad.log(ad.col_slice(p, label)), -1.0)
        total = term if total is None else ad.add(total, term)
    return ad.sum_all(total)


def l2_penalty(head: OutputHead, config: LossConfig) -> DiffNode:
    return ad.scale(ad.sum_all(ad.mul(head.W_z, head.W_z)), config.lam)


def sentence_loss(probs: list[DiffNode], labels, head: OutputHead, config: LossConfig) -> DiffNode:
    return ad.add(nll_loss(probs, labels), l2_penalty(head, config))
