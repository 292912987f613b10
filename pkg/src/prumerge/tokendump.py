"""Binary token-dump format, synthetic data generator, mask rendering.

Dump format (``.prmg``), all little-endian, no padding:

    magic   4 bytes  b"PRMG"
    version uint32   1
    n, d, d_k, n_heads, h, w   uint32 each
    q_cls   float32[n_heads * d_k]
    K       float32[n_heads * n * d_k]   (row-major)
    Y       float32[n * d]               (row-major)

Reduced outputs use a sibling format (``.prmr``):

    magic   4 bytes  b"PRMR"
    version uint32   1
    m, d, n uint32
    source_indices  uint32[m]
    tokens  float32[m * d]

The synthetic generator uses numpy's Philox 4x64 counter-based PRNG,
so identical seeds give bit-identical dumps across platforms.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .core import TokenSet
from .selection import SelectionResult

__all__ = [
    "TokenDumpError",
    "SynthSpec",
    "write_token_dump",
    "read_token_dump",
    "write_reduced_dump",
    "read_reduced_dump",
    "synth_generate",
    "demo_corpus_specs",
    "render_mask",
]

MAGIC = b"PRMG"
REDUCED_MAGIC = b"PRMR"
VERSION = 1
_HEADER = struct.Struct("<4sIIIIIII")  # magic, version, n, d, d_k, n_heads, h, w
_REDUCED_HEADER = struct.Struct("<4sIIII")  # magic, version, m, d, n


class TokenDumpError(ValueError):
    """Malformed or unreadable token dump."""


def write_token_dump(tokens: TokenSet, destination) -> int:
    """Write a TokenSet to a path or binary file object; returns bytes
    written."""
    h, w = tokens.grid
    header = _HEADER.pack(
        MAGIC, VERSION, tokens.n, tokens.d, tokens.d_k, tokens.n_heads, h, w
    )
    payload = b"".join(
        np.ascontiguousarray(arr, dtype="<f4").tobytes()
        for arr in (tokens.q_cls, tokens.K, tokens.Y)
    )
    data = header + payload
    if hasattr(destination, "write"):
        destination.write(data)
    else:
        try:
            with open(destination, "wb") as fh:
                fh.write(data)
        except OSError as exc:
            raise TokenDumpError(f"cannot write {destination}: {exc}") from exc
    return len(data)


def _read_all(source) -> bytes:
    if hasattr(source, "read"):
        return source.read()
    try:
        with open(source, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise TokenDumpError(f"cannot read {source}: {exc}") from exc


def read_token_dump(source) -> TokenSet:
    """Read and validate a TokenSet from a path or binary file object."""
    data = _read_all(source)
    if len(data) < _HEADER.size:
        raise TokenDumpError("truncated header")
    magic, version, n, d, d_k, n_heads, h, w = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise TokenDumpError(f"bad magic {magic!r}")
    if version != VERSION:
        raise TokenDumpError(f"unsupported version {version}")
    for name, value in (("n", n), ("d", d), ("d_k", d_k), ("n_heads", n_heads),
                        ("h", h), ("w", w)):
        if value < 1:
            raise TokenDumpError(f"bad dimension {name}={value}")
    if h * w != n:
        raise TokenDumpError(f"grid mismatch: {h}x{w} != n={n}")
    counts = (n_heads * d_k, n_heads * n * d_k, n * d)
    expected = _HEADER.size + 4 * sum(counts)
    if len(data) < expected:
        raise TokenDumpError(f"truncated payload: {len(data)} < {expected} bytes")
    if len(data) > expected:
        raise TokenDumpError(f"trailing bytes: {len(data)} > {expected}")
    offset = _HEADER.size
    arrays = []
    for count in counts:
        arrays.append(np.frombuffer(data, dtype="<f4", count=count, offset=offset))
        offset += 4 * count
    q_cls, K, Y = arrays
    try:
        return TokenSet(
            grid=(h, w),
            q_cls=q_cls.reshape(n_heads, d_k),
            K=K.reshape(n_heads, n, d_k),
            Y=Y.reshape(n, d),
        )
    except ValueError as exc:
        raise TokenDumpError(str(exc)) from exc


def write_reduced_dump(tokens: np.ndarray, source_indices, n: int, destination) -> int:
    """Write a reduced token stack (m x d) with its source indices."""
    tokens = np.ascontiguousarray(tokens, dtype="<f4")
    idx = np.ascontiguousarray(source_indices, dtype="<u4")
    m, d = tokens.shape
    data = (
        _REDUCED_HEADER.pack(REDUCED_MAGIC, VERSION, m, d, n)
        + idx.tobytes()
        + tokens.tobytes()
    )
    if hasattr(destination, "write"):
        destination.write(data)
    else:
        try:
            with open(destination, "wb") as fh:
                fh.write(data)
        except OSError as exc:
            raise TokenDumpError(f"cannot write {destination}: {exc}") from exc
    return len(data)


def read_reduced_dump(source) -> tuple[np.ndarray, np.ndarray, int]:
    """Read a reduced dump; returns (tokens, source_indices, n)."""
    data = _read_all(source)
    if len(data) < _REDUCED_HEADER.size:
        raise TokenDumpError("truncated header")
    magic, version, m, d, n = _REDUCED_HEADER.unpack_from(data)
    if magic != REDUCED_MAGIC:
        raise TokenDumpError(f"bad magic {magic!r}")
    if version != VERSION:
        raise TokenDumpError(f"unsupported version {version}")
    expected = _REDUCED_HEADER.size + 4 * m + 4 * m * d
    if len(data) != expected:
        raise TokenDumpError(f"payload size {len(data)} != {expected} bytes")
    idx = np.frombuffer(data, dtype="<u4", count=m, offset=_REDUCED_HEADER.size)
    tokens = np.frombuffer(
        data, dtype="<f4", count=m * d, offset=_REDUCED_HEADER.size + 4 * m
    ).reshape(m, d)
    return tokens, idx, n


@dataclass(frozen=True)
class SynthSpec:
    """Parameters for the synthetic TokenSet generator.

    ``n_spikes`` tokens, spread evenly over the flat grid, get a key
    whose logit against the class query is boosted by ``spike_gain``;
    the background logits are uniform noise in (-0.1, 0.1), so the
    class attention reproduces the near-zero-almost-everywhere pattern
    the adaptive selector relies on. Embeddings (and the non-query key
    coordinates) are drawn around ``cluster_count`` planted cluster
    means so merging behavior is checkable.
    """

    grid: tuple[int, int]
    d: int
    d_k: int
    n_heads: int = 1
    n_spikes: int = 0
    spike_gain: float = 6.0
    cluster_count: int = 1
    seed: int = 0

    def __post_init__(self):
        h, w = self.grid
        if min(h, w, self.d, self.d_k, self.n_heads) < 1:
            raise ValueError("all dimensions must be >= 1")
        if not 0 <= self.n_spikes <= h * w:
            raise ValueError("n_spikes must be in [0, n]")
        if self.cluster_count < 1:
            raise ValueError("cluster_count must be >= 1")


BACKGROUND_NOISE = 0.1  # half-width of the uniform background logit noise


def spike_positions(n: int, n_spikes: int) -> list[int]:
    """Evenly spread flat indices for the planted spikes."""
    return [int((t + 0.5) * n / n_spikes) for t in range(n_spikes)]


def synth_generate(spec: SynthSpec) -> TokenSet:
    """Deterministic synthetic TokenSet (Philox PRNG, fixed by seed)."""
    rng = np.random.Generator(np.random.Philox(spec.seed))
    h, w = spec.grid
    n = h * w
    spikes = spike_positions(n, spec.n_spikes)

    # class query along the first key axis, scaled so logits equal K[:, 0]
    q_cls = np.zeros((spec.n_heads, spec.d_k), dtype=np.float32)
    q_cls[:, 0] = np.sqrt(spec.d_k)

    cluster_ids = np.arange(n) * spec.cluster_count // n
    key_means = rng.normal(0.0, 1.0, size=(spec.cluster_count, spec.d_k))
    K = np.empty((spec.n_heads, n, spec.d_k), dtype=np.float32)
    for head in range(spec.n_heads):
        keys = rng.normal(0.0, 0.05, size=(n, spec.d_k))
        if spec.d_k > 1:
            # planted cluster structure lives off the query axis
            keys[:, 1:] += key_means[cluster_ids][:, 1:]
        # uniform background logits; bounded noise keeps the Tukey fence
        # strictly above every background value
        keys[:, 0] = rng.uniform(-BACKGROUND_NOISE, BACKGROUND_NOISE, size=n)
        keys[spikes, 0] += spec.spike_gain
        K[head] = keys.astype(np.float32)

    y_means = rng.normal(0.0, 1.0, size=(spec.cluster_count, spec.d))
    Y = (y_means[cluster_ids] + rng.normal(0.0, 0.05, size=(n, spec.d))).astype(
        np.float32
    )
    return TokenSet(grid=spec.grid, q_cls=q_cls, K=K, Y=Y)


# spike counts for the shipped demo corpus: mean 32, and the mean
# per-image compression ratio 576/m comes out at 18.3 on a 24x24 grid
DEMO_CORPUS_SPIKE_COUNTS = (26, 28, 30, 32, 34, 36, 38)


def demo_corpus_specs(d: int = 16, d_k: int = 8, seed: int = 2024) -> list[SynthSpec]:
    """Specs for the shipped synthetic demo corpus (24x24 grid, spike
    counts averaging 32)."""
    return [
        SynthSpec(grid=(24, 24), d=d, d_k=d_k, n_spikes=c, cluster_count=4,
                  seed=seed + i)
        for i, c in enumerate(DEMO_CORPUS_SPIKE_COUNTS)
    ]


def render_mask(selection: SelectionResult, grid: tuple[int, int], format: str = "text"):
    """Render the selected indices as an h x w mask.

    ``text`` returns h lines of '#' (selected) / '.' (unselected);
    ``pgm`` returns a binary PGM (P5) image, selected = 255.
    """
    h, w = grid
    n = h * w
    if selection.indices[-1] >= n:
        raise ValueError(f"index {selection.indices[-1]} out of grid {h}x{w}")
    mask = np.zeros(n, dtype=bool)
    mask[list(selection.indices)] = True
    mask = mask.reshape(h, w)
    if format == "text":
        return "\n".join("".join("#" if m else "." for m in row) for row in mask)
    if format == "pgm":
        header = f"P5\n{w} {h}\n255\n".encode("ascii")
        return header + (mask.astype(np.uint8) * 255).tobytes()
    raise ValueError(f"unknown mask format {format!r}")
