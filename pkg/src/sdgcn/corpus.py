"""SemEval-2014 Task 4 ingestion: XML parsing, tokenization, vocabulary,
GloVe loading, dataset statistics, and a binary instance cache.

The tokenizer is deliberately simple: lowercase, split on whitespace, then
split leading/trailing punctuation into their own tokens. All character
offset handling is centralized here so a different tokenizer is a local swap.
"""

from __future__ import annotations

import string
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, FormatError
from .rng import word_rng

POLARITIES = ("positive", "negative", "neutral")
POLARITY_INDEX = {name: i for i, name in enumerate(POLARITIES)}

PAD_WORD = "<pad>"
UNK_WORD = "<unk>"
PAD_INDEX = 0
UNK_INDEX = 1

CACHE_MAGIC = b"SDGCACHE"
CACHE_VERSION = 1

_PUNCT = frozenset(string.punctuation)


# ----------------------------------------------------------------- types


@dataclass(frozen=True)
class AspectSpan:
    """One aspect term: a contiguous token range plus its gold polarity."""

    start: int  # first token index
    end: int  # one past the last token index
    polarity: str
    surface: str

    def __post_init__(self):
        if self.polarity not in POLARITY_INDEX:
            raise DataError(f"unknown polarity '{self.polarity}'")
        if not 0 <= self.start < self.end:
            raise DataError(f"bad token range [{self.start}, {self.end})")

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class SentenceInstance:
    sentence_id: str
    tokens: tuple[str, ...]
    aspects: tuple[AspectSpan, ...]

    def __post_init__(self):
        if not self.tokens:
            raise DataError(f"sentence {self.sentence_id}: no tokens")
        if not self.aspects:
            raise DataError(f"sentence {self.sentence_id}: no aspects")
        n = len(self.tokens)
        for a in self.aspects:
            if a.end > n:
                raise DataError(
                    f"sentence {self.sentence_id}: aspect span [{a.start}, {a.end}) "
                    f"exceeds length {n}"
                )


@dataclass
class ParseReport:
    sentences_total: int = 0
    sentences_kept: int = 0
    no_aspect_dropped: int = 0
    aspects_total: int = 0
    aspects_kept: int = 0
    conflict_dropped: int = 0
    unmappable_dropped: int = 0
    snapped_spans: list[str] = field(default_factory=list)
    overflow_sentences: list[str] = field(default_factory=list)

    def to_lines(self) -> list[str]:
        return [
            f"sentences_total={self.sentences_total}",
            f"sentences_kept={self.sentences_kept}",
            f"no_aspect_dropped={self.no_aspect_dropped}",
            f"aspects_total={self.aspects_total}",
            f"aspects_kept={self.aspects_kept}",
            f"conflict_dropped={self.conflict_dropped}",
            f"unmappable_dropped={self.unmappable_dropped}",
            f"snapped_spans={len(self.snapped_spans)}",
            f"overflow_sentences={len(self.overflow_sentences)}",
        ]

    def to_dict(self) -> dict:
        return {
            "sentences_total": self.sentences_total,
            "sentences_kept": self.sentences_kept,
            "no_aspect_dropped": self.no_aspect_dropped,
            "aspects_total": self.aspects_total,
            "aspects_kept": self.aspects_kept,
            "conflict_dropped": self.conflict_dropped,
            "unmappable_dropped": self.unmappable_dropped,
            "snapped_spans": list(self.snapped_spans),
            "overflow_sentences": list(self.overflow_sentences),
        }


# ------------------------------------------------------------- tokenizer


@dataclass(frozen=True)
class Tokenization:
    tokens: tuple[str, ...]
    # char span (start, end) of each token in the original text
    spans: tuple[tuple[int, int], ...]

    def covering_range(self, char_start: int, char_end: int) -> tuple[int, int] | None:
        """Smallest token range covering [char_start, char_end); None if empty."""
        first = last = None
        for t, (s, e) in enumerate(self.spans):
            if s < char_end and e > char_start:
                if first is None:
                    first = t
                last = t
        if first is None:
            return None
        return first, last + 1

    def aligned(self, char_start: int, char_end: int, tok_range: tuple[int, int]) -> bool:
        s, e = tok_range
        return self.spans[s][0] == char_start and self.spans[e - 1][1] == char_end


def tokenize(text: str) -> Tokenization:
    """Lowercase, split on whitespace, split off leading/trailing punctuation.

    Spans index into the original text, so char(span) reproduces each token
    up to lowercasing.
    """
    tokens: list[str] = []
    spans: list[tuple[int, int]] = []

    def emit(s: int, e: int) -> None:
        tokens.append(text[s:e].lower())
        spans.append((s, e))

    i, n = 0, len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        lead = i
        while lead < j and text[lead] in _PUNCT:
            emit(lead, lead + 1)
            lead += 1
        trail = j
        while trail > lead and text[trail - 1] in _PUNCT:
            trail -= 1
        if lead < trail:
            emit(lead, trail)
        for k in range(trail, j):
            emit(k, k + 1)
        i = j
    return Tokenization(tuple(tokens), tuple(spans))


# ------------------------------------------------------------ XML parsing


def _xml_byte_offset(data: bytes, line: int, column: int) -> int:
    lines = data.split(b"\n")
    return sum(len(l) + 1 for l in lines[: line - 1]) + column


def parse_semeval(xml_bytes: bytes, max_aspects: int = 16) -> tuple[list[SentenceInstance], ParseReport]:
    """Parse a Task-4 XML file into instances.

    Aspects labeled `conflict` are dropped and counted; sentences left with
    no aspects are dropped and counted. Character offsets are converted to
    token ranges; spans that cross token boundaries snap outward to the
    covering tokens and are recorded in the report. Sentences with K >=
    max_aspects are kept intact and reported, never truncated.
    """
    import xml.etree.ElementTree as ET

    try:
        root = ET.fromstring(xml_bytes)
    except ET.ParseError as exc:
        line, col = exc.position
        offset = _xml_byte_offset(xml_bytes, line, col)
        raise FormatError(
            f"malformed XML at byte offset {offset} (line {line}, column {col}): {exc}",
            line=line,
            offset=offset,
        ) from exc

    report = ParseReport()
    instances: list[SentenceInstance] = []
    for sent in root.iter("sentence"):
        report.sentences_total += 1
        sid = sent.get("id", f"row{report.sentences_total}")
        text = sent.findtext("text") or ""
        tok = tokenize(text)

        aspects: list[AspectSpan] = []
        terms = sent.find("aspectTerms")
        for term in terms.iter("aspectTerm") if terms is not None else ():
            report.aspects_total += 1
            polarity = term.get("polarity", "")
            if polarity == "conflict":
                report.conflict_dropped += 1
                continue
            if polarity not in POLARITY_INDEX:
                raise DataError(f"sentence {sid}: unknown polarity '{polarity}'")
            surface = term.get("term", "")
            c_start, c_end = int(term.get("from")), int(term.get("to"))
            rng = tok.covering_range(c_start, c_end)
            if rng is None:
                report.unmappable_dropped += 1
                continue
            if not tok.aligned(c_start, c_end, rng):
                report.snapped_spans.append(f"{sid}:{surface}@{c_start}-{c_end}")
            aspects.append(AspectSpan(rng[0], rng[1], polarity, surface))

        if not aspects or not tok.tokens:
            report.no_aspect_dropped += 1
            continue
        if len(aspects) >= max_aspects:
            report.overflow_sentences.append(sid)
        report.sentences_kept += 1
        report.aspects_kept += len(aspects)
        instances.append(SentenceInstance(sid, tok.tokens, tuple(aspects)))
    return instances, report


# ------------------------------------------------------------- vocabulary


class Vocabulary:
    """word -> index plus the embedding row for every materialized word.

    Index 0 is padding (zero row, frozen); index 1 is the unknown word.
    Every corpus word gets its own index; words missing from the embedding
    file get a seeded uniform row derived from (seed, word), so the rows are
    reproducible regardless of load order.
    """

    def __init__(self, words: list[str], matrix: np.ndarray, coverage: float):
        self._index = {w: i for i, w in enumerate(words)}
        assert words[PAD_INDEX] == PAD_WORD and words[UNK_INDEX] == UNK_WORD
        self.words = words
        self.matrix = matrix
        self.coverage = coverage

    @property
    def size(self) -> int:
        return len(self.words)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def index(self, word: str) -> int:
        return self._index.get(word, UNK_INDEX)

    def indices(self, tokens) -> list[int]:
        return [self.index(t) for t in tokens]

    def __contains__(self, word: str) -> bool:
        return word in self._index


def collect_words(*instance_lists) -> list[str]:
    """Unique corpus words in first-appearance order."""
    seen: dict[str, None] = {}
    for instances in instance_lists:
        for inst in instances:
            for t in inst.tokens:
                seen.setdefault(t, None)
    return list(seen)


# rows for words without pretrained vectors; scale chosen near the spread
# of published GloVe vectors so learned and loaded rows are comparable
OOV_SCALE = 0.25


def _oov_row(seed: int, word: str, dim: int) -> np.ndarray:
    return word_rng(seed, word).uniform(-OOV_SCALE, OOV_SCALE, (dim,))


def load_glove(path, vocab_words: list[str], seed: int = 0, expected_dim: int | None = None) -> Vocabulary:
    """Build a Vocabulary from a GloVe text file, materializing only corpus words.

    Each line is a word followed by its vector. The dimension is taken from
    the first line unless `expected_dim` is given; any line that disagrees is
    a format error naming the line number. Multi-token "words" (which occur
    in some distributions) are handled by treating the last `dim` fields as
    the vector.
    """
    wanted = set(vocab_words)
    found: dict[str, np.ndarray] = {}
    dim = expected_dim
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                raise FormatError(f"{path}:{lineno}: not a word-vector line", line=lineno)
            if dim is None:
                dim = len(parts) - 1
            if len(parts) < dim + 1:
                raise FormatError(
                    f"{path}:{lineno}: expected {dim} values, found {len(parts) - 1}", line=lineno
                )
            word = " ".join(parts[: len(parts) - dim])
            if word not in wanted or word in found:
                continue
            try:
                vec = np.array([float(v) for v in parts[len(parts) - dim:]], dtype=np.float64)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: non-numeric value ({exc})", line=lineno) from exc
            found[word] = vec
    if dim is None:
        raise FormatError(f"{path}: empty embedding file")
    return _assemble_vocabulary(vocab_words, found, dim, seed)


def random_vocabulary(vocab_words: list[str], dim: int, seed: int = 0) -> Vocabulary:
    """Vocabulary with every row drawn from the seeded OOV initializer
    (used for synthetic corpora, where no pretrained file exists)."""
    return _assemble_vocabulary(vocab_words, {}, dim, seed)


def _assemble_vocabulary(vocab_words, found, dim, seed) -> Vocabulary:
    words = [PAD_WORD, UNK_WORD]
    for w in vocab_words:
        if w not in (PAD_WORD, UNK_WORD):
            words.append(w)
    matrix = np.zeros((len(words), dim), dtype=np.float64)
    covered = 0
    for i, w in enumerate(words):
        if i == PAD_INDEX:
            continue  # padding row stays exactly zero
        if w in found:
            matrix[i] = found[w]
            covered += 1
        else:
            matrix[i] = _oov_row(seed, w, dim)
    corpus_size = len(words) - 2
    coverage = covered / corpus_size if corpus_size else 0.0
    return Vocabulary(words, matrix, coverage)


# ---------------------------------------------------------------- stats


@dataclass
class DatasetStats:
    class_counts: dict[str, int]
    aspects_per_sentence: dict[int, int]  # K -> number of sentences
    total_sentences: int
    total_aspects: int
    multi_aspect_sentence_fraction: float
    # fraction of aspects living in sentences with K >= 2
    multi_aspect_aspect_fraction: float

    def to_lines(self, prefix: str = "") -> list[str]:
        p = f"{prefix}." if prefix else ""
        lines = [f"{p}count_{label}={self.class_counts[label]}" for label in POLARITIES]
        lines += [
            f"{p}total_sentences={self.total_sentences}",
            f"{p}total_aspects={self.total_aspects}",
            f"{p}multi_aspect_sentence_fraction={self.multi_aspect_sentence_fraction:.4f}",
            f"{p}multi_aspect_aspect_fraction={self.multi_aspect_aspect_fraction:.4f}",
        ]
        for k in sorted(self.aspects_per_sentence):
            lines.append(f"{p}sentences_with_{k}_aspects={self.aspects_per_sentence[k]}")
        return lines

    def to_dict(self) -> dict:
        return {
            "class_counts": dict(self.class_counts),
            "aspects_per_sentence": {str(k): v for k, v in sorted(self.aspects_per_sentence.items())},
            "total_sentences": self.total_sentences,
            "total_aspects": self.total_aspects,
            "multi_aspect_sentence_fraction": self.multi_aspect_sentence_fraction,
            "multi_aspect_aspect_fraction": self.multi_aspect_aspect_fraction,
        }


def dataset_stats(instances) -> DatasetStats:
    instances = list(instances)
    class_counts = {label: 0 for label in POLARITIES}
    histogram: dict[int, int] = {}
    multi_sentences = 0
    multi_aspects = 0
    total_aspects = 0
    for inst in instances:
        k = len(inst.aspects)
        histogram[k] = histogram.get(k, 0) + 1
        total_aspects += k
        if k >= 2:
            multi_sentences += 1
            multi_aspects += k
        for a in inst.aspects:
            class_counts[a.polarity] += 1
    n = len(instances)
    return DatasetStats(
        class_counts=class_counts,
        aspects_per_sentence=histogram,
        total_sentences=n,
        total_aspects=total_aspects,
        multi_aspect_sentence_fraction=multi_sentences / n if n else 0.0,
        multi_aspect_aspect_fraction=multi_aspects / total_aspects if total_aspects else 0.0,
    )


# ---------------------------------------------------------- instance cache


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<Q", len(raw)) + raw


def save_instances(path, instances) -> None:
    """Versioned binary cache; same container conventions as checkpoints."""
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<QQ", CACHE_VERSION, len(instances)))
        for inst in instances:
            fh.write(_pack_str(inst.sentence_id))
            fh.write(struct.pack("<Q", len(inst.tokens)))
            for t in inst.tokens:
                fh.write(_pack_str(t))
            fh.write(struct.pack("<Q", len(inst.aspects)))
            for a in inst.aspects:
                fh.write(struct.pack("<QQQ", a.start, a.end, POLARITY_INDEX[a.polarity]))
                fh.write(_pack_str(a.surface))


def load_instances(path) -> list[SentenceInstance]:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != CACHE_MAGIC:
        raise FormatError(f"{path}: not an instance cache (bad magic)")
    pos = 8

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(data):
            raise FormatError(f"{path}: truncated at byte {pos}", offset=pos)
        chunk = data[pos : pos + n]
        pos += n
        return chunk

    def take_str() -> str:
        (ln,) = struct.unpack("<Q", take(8))
        return take(ln).decode("utf-8")

    version, count = struct.unpack("<QQ", take(16))
    if version != CACHE_VERSION:
        raise FormatError(f"{path}: unsupported cache version {version}")
    out = []
    for _ in range(count):
        sid = take_str()
        (n_tok,) = struct.unpack("<Q", take(8))
        tokens = tuple(take_str() for _ in range(n_tok))
        (n_asp,) = struct.unpack("<Q", take(8))
        aspects = []
        for _ in range(n_asp):
            start, end, pol = struct.unpack("<QQQ", take(24))
            surface = take_str()
            aspects.append(AspectSpan(start, end, POLARITIES[pol], surface))
        out.append(SentenceInstance(sid, tokens, tuple(aspects)))
    return out
