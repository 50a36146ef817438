"""Synthetic multi-aspect corpus with controlled sentiment dependencies.

Each sentence chains K clauses "the <aspect> is <opinion>" with connectors:
"and" and "," keep the running polarity, "but" flips it. Masking replaces
the opinion word of a non-first aspect with a placeholder token, so the
masked aspect's gold label is recoverable only from a neighboring aspect's
polarity plus the connector semantics. The first aspect is never masked,
keeping every sentence solvable.

Instances are built directly as token lists (the placeholder must stay one
token) but use the same instance model as the XML corpus.

`filler_tokens` pads every clause with polarity-neutral words. That widens
the token gap between an opinion word and the nearest other aspect, so
recovering a masked label through the running recurrent state gets harder
while aspect-to-aspect message passing is unaffected.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import AspectSpan, SentenceInstance
from .errors import ConfigError
from .metrics import EvalReport
from .rng import RngStream

MASK_TOKEN = "[mask]"

_ASPECTS = (
    "food", "service", "screen", "battery", "keyboard", "price",
    "staff", "pizza", "wine", "design", "speed", "menu",
)
_POSITIVE = ("good", "great", "tasty", "excellent", "lovely", "superb")
_NEGATIVE = ("bad", "awful", "cold", "terrible", "slow", "dreadful")
_NEUTRAL = ("okay", "average", "ordinary", "acceptable", "plain")
_INTENSIFIERS = ("really", "quite", "very")
_CONNECTORS = ("and", ",", "but")  # but flips polarity, the others keep it
# Disjoint from every other word list so padding carries no class signal.
_FILLER = (
    "overall", "honestly", "i", "must", "say", "to", "be", "fair",
    "in", "any", "case", "far",
)

_OPPOSITE = {"positive": "negative", "negative": "positive"}


@dataclass(frozen=True)
class SyntheticSpec:
    aspect_words: tuple = _ASPECTS
    positive_words: tuple = _POSITIVE
    negative_words: tuple = _NEGATIVE
    neutral_words: tuple = _NEUTRAL
    mask_rate: float = 0.3
    min_aspects: int = 2
    max_aspects: int = 3
    filler_tokens: int = 0

    def __post_init__(self):
        if not (self.aspect_words and self.positive_words and self.negative_words and self.neutral_words):
            raise ConfigError("every word list must be non-empty")
        if not 0.0 <= self.mask_rate <= 1.0:
            raise ConfigError(f"mask_rate must be in [0, 1], got {self.mask_rate}")
        if not 2 <= self.min_aspects <= self.max_aspects:
            raise ConfigError("need min_aspects >= 2 (dependencies require neighbors)")
        if self.max_aspects > len(self.aspect_words):
            raise ConfigError("not enough distinct aspect words")
        if self.filler_tokens < 0:
            raise ConfigError(f"filler_tokens must be >= 0, got {self.filler_tokens}")

    def opinions(self, label: str) -> tuple:
        return {
            "positive": self.positive_words,
            "negative": self.negative_words,
            "neutral": self.neutral_words,
        }[label]


@dataclass
class SyntheticCorpus:
    instances: list[SentenceInstance]
    masked: dict[str, tuple[int, ...]] = field(default_factory=dict)

    def masked_pairs(self) -> set:
        return {(sid, i) for sid, idxs in self.masked.items() for i in idxs}


def gen_synthetic(spec: SyntheticSpec, count: int, seed: int) -> SyntheticCorpus:
    """Deterministic corpus of `count` sentences for the given seed.

    Non-first aspects are masked with probability mask_rate * K / (K - 1),
    so the masked fraction over all aspects approximates mask_rate.
    """
    rng = RngStream(seed, "synthetic")
    instances = []
    masked: dict[str, tuple[int, ...]] = {}
    for n in range(count):
        k = rng.integers(spec.min_aspects, spec.max_aspects + 1)
        connectors = [rng.choice(_CONNECTORS) for _ in range(k - 1)]
        if any(c == "but" for c in connectors):
            labels = [rng.choice(("positive", "negative"))]
        else:
            labels = [rng.choice(("positive", "negative", "neutral"))]
        for c in connectors:
            prev = labels[-1]
            labels.append(_OPPOSITE[prev] if c == "but" else prev)

        aspect_order = rng.permutation(len(spec.aspect_words))[:k]
        mask_p = min(1.0, spec.mask_rate * k / (k - 1))
        tokens: list[str] = []
        spans: list[AspectSpan] = []
        masked_here = []
        sid = f"syn{n}"
        for i in range(k):
            if i > 0:
                tokens.append(connectors[i - 1])
            aspect_word = spec.aspect_words[aspect_order[i]]
            tokens.append("the")
            spans.append(AspectSpan(len(tokens), len(tokens) + 1, labels[i], aspect_word))
            tokens.append(aspect_word)
            tokens.append("is")
            if rng.random(()) < 0.25:
                tokens.append(rng.choice(_INTENSIFIERS))
            if i > 0 and rng.random(()) < mask_p:
                tokens.append(MASK_TOKEN)
                masked_here.append(i)
            else:
                tokens.append(rng.choice(spec.opinions(labels[i])))
            for _ in range(spec.filler_tokens):
                tokens.append(rng.choice(_FILLER))
        tokens.append(".")
        instances.append(SentenceInstance(sid, tuple(tokens), tuple(spans)))
        if masked_here:
            masked[sid] = tuple(masked_here)
    return SyntheticCorpus(instances=instances, masked=masked)


def masked_accuracy(report: EvalReport, masked_pairs: set) -> float:
    """Accuracy restricted to the masked (sentence, aspect) slots."""
    rows = [(g, p) for sid, ai, g, p in report.predictions if (sid, ai) in masked_pairs]
    if not rows:
        raise ConfigError("no masked aspects in the evaluated set")
    return sum(1 for g, p in rows if g == p) / len(rows)
