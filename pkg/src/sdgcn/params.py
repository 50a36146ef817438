"""Named parameter store, initialization, the Adam optimizer, and checkpoints.

The checkpoint container is a flat binary format, little-endian throughout:

    header:  magic ``SDGCKPT\\0`` (8 bytes), format version (u64), entry count (u64)
    entry:   name length (u64), UTF-8 name, rank (u64), dims (u64 each),
             values (IEEE-754 f64, C order)

Round-trips are bit-exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .autodiff import DiffNode
from .errors import CheckpointError, ConfigError, DivergenceError, ShapeError
from .rng import RngStream

CHECKPOINT_MAGIC = b"SDGCKPT\x00"
CHECKPOINT_VERSION = 1


def _check_shape(shape) -> tuple[int, ...]:
    shape = tuple(int(d) for d in shape)
    if not shape or any(d <= 0 for d in shape):
        raise ShapeError(f"dimensions must be positive, got {shape}", shape)
    return shape


def init_uniform(shape, low: float = -0.01, high: float = 0.01, rng: RngStream | None = None) -> np.ndarray:
    """Seeded uniform draws, values strictly in [low, high)."""
    shape = _check_shape(shape)
    if rng is None:
        raise ConfigError("init_uniform requires an RngStream")
    return rng.uniform(low, high, shape)


def init_normal(shape, mean: float = 0.0, std: float = 1.0, rng: RngStream | None = None) -> np.ndarray:
    """Seeded normal draws."""
    shape = _check_shape(shape)
    if rng is None:
        raise ConfigError("init_normal requires an RngStream")
    return rng.normal(mean, std, shape)


@dataclass
class ParamEntry:
    node: DiffNode
    m: np.ndarray  # Adam first moment
    v: np.ndarray  # Adam second moment
    trainable: bool = True


class ParamStore:
    """Map from unique parameter names to DiffNodes plus per-entry Adam state.

    The Adam step counter is shared across all entries; one optimizer step
    increments it exactly once.
    """

    def __init__(self):
        self._entries: dict[str, ParamEntry] = {}
        self.step_count = 0

    def add(self, name: str, value: np.ndarray, trainable: bool = True) -> DiffNode:
        if name in self._entries:
            raise ConfigError(f"duplicate parameter name '{name}'")
        node = DiffNode(np.ascontiguousarray(value, dtype=np.float64), op="param")
        self._entries[name] = ParamEntry(
            node=node, m=np.zeros_like(node.value), v=np.zeros_like(node.value), trainable=trainable
        )
        return node

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __getitem__(self, name: str) -> DiffNode:
        return self._entries[name].node

    def names(self) -> list[str]:
        return sorted(self._entries)

    def entry(self, name: str) -> ParamEntry:
        return self._entries[name]

    def trainable_names(self) -> list[str]:
        return [n for n in self.names() if self._entries[n].trainable]

    def zero_grad(self) -> None:
        for e in self._entries.values():
            e.node.zero_grad()

    def param_count(self, trainable_only: bool = True) -> int:
        names = self.trainable_names() if trainable_only else self.names()
        return sum(self._entries[n].node.value.size for n in names)

    def snapshot(self) -> dict[str, np.ndarray]:
        """Copy of every parameter value (Adam state excluded)."""
        return {n: e.node.value.copy() for n, e in self._entries.items()}

    def restore(self, values: dict[str, np.ndarray]) -> None:
        for n, arr in values.items():
            self.load_value(n, arr)

    def load_value(self, name: str, arr: np.ndarray) -> None:
        if name not in self._entries:
            raise CheckpointError(f"unknown parameter '{name}'")
        node = self._entries[name].node
        if node.value.shape != arr.shape:
            raise CheckpointError(
                f"shape mismatch for '{name}': store has {node.value.shape}, got {arr.shape}"
            )
        node.value[...] = arr


def adam_step(
    params: ParamStore,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One bias-corrected Adam update over every trainable entry.

    Raises DivergenceError naming the first parameter whose gradient holds a
    NaN or Inf; the store is left untouched in that case.
    """
    names = params.trainable_names()
    for name in names:
        if not np.isfinite(params.entry(name).node.grad).all():
            raise DivergenceError(name)
    params.step_count += 1
    t = params.step_count
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for name in names:
        e = params.entry(name)
        g = e.node.grad
        e.m *= beta1
        e.m += (1.0 - beta1) * g
        e.v *= beta2
        e.v += (1.0 - beta2) * g * g
        e.node.value -= lr * (e.m / bc1) / (np.sqrt(e.v / bc2) + eps)


def save_checkpoint(path, params: ParamStore) -> None:
    names = params.names()
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<QQ", CHECKPOINT_VERSION, len(names)))
        for name in names:
            raw = name.encode("utf-8")
            value = params.entry(name).node.value
            fh.write(struct.pack("<Q", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<Q", value.ndim))
            fh.write(struct.pack(f"<{value.ndim}Q", *value.shape))
            fh.write(np.ascontiguousarray(value, dtype="<f8").tobytes())


def read_checkpoint(path) -> dict[str, np.ndarray]:
    """Parse a checkpoint file into name -> array, validating the container."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file (bad magic)")
    pos = 8

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(data):
            raise CheckpointError(f"{path}: truncated at byte {pos}", offset=pos)
        chunk = data[pos : pos + n]
        pos += n
        return chunk

    version, count = struct.unpack("<QQ", take(16))
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<Q", take(8))
        name = take(name_len).decode("utf-8")
        (rank,) = struct.unpack("<Q", take(8))
        dims = struct.unpack(f"<{rank}Q", take(8 * rank))
        n_vals = int(np.prod(dims)) if rank else 1
        values = np.frombuffer(take(8 * n_vals), dtype="<f8").reshape(dims)
        out[name] = values.astype(np.float64)
    if pos != len(data):
        raise CheckpointError(f"{path}: {len(data) - pos} trailing bytes", offset=pos)
    return out


def load_checkpoint(path, params: ParamStore) -> None:
    """Load values into an existing store; every entry must match by name and shape."""
    values = read_checkpoint(path)
    missing = set(params.names()) - set(values)
    extra = set(values) - set(params.names())
    if missing or extra:
        raise CheckpointError(
            f"{path}: parameter set mismatch (missing: {sorted(missing)}, extra: {sorted(extra)})"
        )
    for name, arr in values.items():
        params.load_value(name, arr)
