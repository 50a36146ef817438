"""The full classifier: embeddings, Bi-LSTM encoders, bidirectional
attention, per-sentence aspect graph convolution, and the softmax head.

Every ablation switch removes its module's parameters entirely, so parameter
counts are comparable across configurations:
  - use_c2a_attention off: the aspect summary m is the unweighted mean of
    the aspect's hidden states (no W_ca).
  - use_gcn off: the attention output X feeds the head directly (no gcn.*).
  - use_position off: position weights are all ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .attention import (
    AspectSpecificRep,
    AspectSummary,
    aspect_to_context,
    avg_pool_context,
    context_to_aspect,
)
from .autodiff import DiffNode
from .config import RunConfig
from .corpus import POLARITY_INDEX, Vocabulary
from .encoder import apply_position, encode_instance, position_weights, register_bilstm
from .errors import ConfigError
from .gcn import (
    LossConfig,
    build_graph,
    classify,
    gcn_forward,
    l2_penalty,
    nll_loss,
    register_gcn_layers,
    register_output_head,
    sentence_loss,
)
from .params import ParamStore, init_uniform
from .rng import RngStream


@dataclass
class ForwardResult:
    probs: list[DiffNode]  # one 1 x C row per aspect
    summaries: list[AspectSummary]
    reps: list[AspectSpecificRep]

    def predicted_labels(self) -> list[int]:
        return [int(p.value.argmax()) for p in self.probs]


class SdgcnModel:
    """Holds the parameter store and runs per-sentence forward passes.

    Dropout draws from a dedicated stream in call order, so a fixed seed and
    a fixed sequence of forward passes reproduce bit-identical training.
    """

    def __init__(self, config: RunConfig, vocab: Vocabulary, seed: int | None = None):
        if vocab.dim != config.d_emb:
            raise ConfigError(
                f"embedding dim {vocab.dim} does not match configured d_emb {config.d_emb}"
            )
        self.config = config
        self.vocab = vocab
        seed = config.seed if seed is None else seed
        self.store = ParamStore()
        rng = RngStream(seed, "model-init")
        self._dropout_rng = RngStream(seed, "dropout")

        self.table = self.store.add("embeddings", vocab.matrix.copy(), trainable=config.train_embeddings)
        d_model = 2 * config.d_hid
        self.ctx_lstm = register_bilstm(self.store, "ctx_lstm", config.d_emb, config.d_hid, rng)
        self.asp_lstm = register_bilstm(self.store, "asp_lstm", config.d_emb, config.d_hid, rng)
        if config.use_c2a_attention:
            self.w_ca = self.store.add(
                "attn.W_ca", init_uniform((d_model, d_model), rng=rng.child("attn.W_ca"))
            )
        else:
            self.w_ca = None
        self.w_ac = self.store.add(
            "attn.W_ac", init_uniform((d_model, d_model), rng=rng.child("attn.W_ac"))
        )
        if config.use_gcn:
            self.gcn_layers = register_gcn_layers(self.store, d_model, config.num_layers, rng)
        else:
            self.gcn_layers = []
        self.head = register_output_head(self.store, d_model, rng)
        self.loss_config = LossConfig(lam=config.lam)

    # ------------------------------------------------------------- forward

    def _dropout(self, node: DiffNode, training: bool) -> DiffNode:
        return ad.dropout(node, self.config.dropout, training, self._dropout_rng)

    def forward(self, instance, training: bool = False) -> ForwardResult:
        cfg = self.config
        enc = encode_instance(
            instance,
            self.vocab,
            self.table,
            self.ctx_lstm,
            self.asp_lstm,
            emb_transform=lambda e: self._dropout(e, training),
        )
        h_bar = avg_pool_context(enc.context)
        n = len(instance.tokens)
        summaries, reps = [], []
        for i, h_a in enumerate(enc.aspects):
            if cfg.use_c2a_attention:
                summary = context_to_aspect(h_bar, h_a, self.w_ca)
            else:
                m_i = h_a.value.shape[1]
                summary = AspectSummary(
                    m=avg_pool_context(h_a), beta=ad.constant(np.full((1, m_i), 1.0 / m_i))
                )
            if cfg.use_position:
                d = position_weights(instance, i, cfg.position_cutoff)
            else:
                d = np.ones(n)
            rep = aspect_to_context(
                summary.m,
                apply_position(enc.context, d),
                enc.context,
                self.w_ac,
                attend_over_weighted_context=cfg.attend_over_weighted_context,
            )
            summaries.append(summary)
            reps.append(rep)
        x = ad.concat_cols([r.x for r in reps])
        x = self._dropout(x, training)
        if cfg.use_gcn:
            graph = build_graph(len(instance.aspects), cfg.topology)
            x = gcn_forward(x, graph, self.gcn_layers)
        probs = classify(x, self.head)
        return ForwardResult(probs=probs, summaries=summaries, reps=reps)

    # --------------------------------------------------------------- loss

    @staticmethod
    def gold_labels(instance) -> list[int]:
        return [POLARITY_INDEX[a.polarity] for a in instance.aspects]

    def instance_loss(self, instance, training: bool = True) -> DiffNode:
        result = self.forward(instance, training=training)
        return sentence_loss(result.probs, self.gold_labels(instance), self.head, self.loss_config)

    def batch_loss(self, instances, training: bool = True) -> DiffNode:
        """Mean per-sentence NLL plus one L2 penalty."""
        total = None
        for inst in instances:
            result = self.forward(inst, training=training)
            term = nll_loss(result.probs, self.gold_labels(inst))
            total = term if total is None else ad.add(total, term)
        mean = ad.scale(total, 1.0 / len(instances))
        return ad.add(mean, l2_penalty(self.head, self.loss_config))

    def predict(self, instance) -> list[int]:
        return self.forward(instance, training=False).predicted_labels()

    def param_count(self, trainable_only: bool = True) -> int:
        return self.store.param_count(trainable_only=trainable_only)
