"""SlowFast reduction of a ``T x H x W x D`` frame-token grid to ``T + H*W`` tokens.

Fast pathway: one token per frame, the mean of that frame's ``H*W`` tokens.
Slow pathway: ``s*s`` uniformly chosen frames, each average-pooled over
non-overlapping ``s x s`` windows, giving ``(H/s)*(W/s)`` tokens per frame.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import IndivisibleGrid, InvalidCount, InvalidEmbeddingGrid
from .timecodec import round_half_away

Order = Literal["fast-first", "slow-first"]


@dataclass(frozen=True, eq=False)
class EmbeddingGrid:
    """Per-frame visual tokens, shape ``(frames, grid_h, grid_w, dim)``."""

    data: np.ndarray

    def __post_init__(self) -> None:
        if self.data.ndim != 4:
            raise InvalidEmbeddingGrid(f"expected a 4-d array, got shape {self.data.shape}")
        if min(self.data.shape) < 1:
            raise InvalidEmbeddingGrid(f"every dimension must be >= 1, got shape {self.data.shape}")

    @classmethod
    def from_flat(cls, values: Sequence[float] | np.ndarray, frames: int, grid_h: int, grid_w: int, dim: int) -> EmbeddingGrid:
        arr = np.asarray(values)
        expected = frames * grid_h * grid_w * dim
        if arr.size != expected:
            raise InvalidEmbeddingGrid(f"data length {arr.size} != {frames}*{grid_h}*{grid_w}*{dim} = {expected}")
        return cls(arr.reshape(frames, grid_h, grid_w, dim))

    @property
    def frames(self) -> int:
        return self.data.shape[0]

    @property
    def grid_h(self) -> int:
        return self.data.shape[1]

    @property
    def grid_w(self) -> int:
        return self.data.shape[2]

    @property
    def dim(self) -> int:
        return self.data.shape[3]

    @property
    def tokens_per_frame(self) -> int:
        return self.grid_h * self.grid_w


@dataclass(frozen=True, eq=False)
class PooledTokens:
    fast: np.ndarray
    slow: np.ndarray
    s: int
    slow_frame_indices: tuple[int, ...]
    order: Order = "fast-first"

    def tokens(self) -> np.ndarray:
        parts = (self.fast, self.slow) if self.order == "fast-first" else (self.slow, self.fast)
        return np.concatenate(parts, axis=0)

    def __len__(self) -> int:
        return self.fast.shape[0] + self.slow.shape[0]


def fast_tokens(grid: EmbeddingGrid) -> np.ndarray:
    """Per-frame mean over all spatial tokens, shape ``(frames, dim)``, float64."""
    return grid.data.astype(np.float64).mean(axis=(1, 2))


def select_slow_frames(frames: int, k: int) -> list[int]:
    """Endpoint-inclusive uniform choice of ``k`` frame indices out of ``frames``."""
    if not 1 <= k <= frames:
        raise InvalidCount(f"cannot select {k} of {frames} frames")
    if k == 1:
        return [0]
    return [round_half_away(i * (frames - 1) / (k - 1)) for i in range(k)]


def slow_tokens(grid: EmbeddingGrid, s: int, indices: Sequence[int]) -> np.ndarray:
    """``s x s`` average pooling of each selected frame, rows in frame then row-major order."""
    if s < 1:
        raise IndivisibleGrid(f"pooling ratio must be >= 1, got {s}")
    h, w, d = grid.grid_h, grid.grid_w, grid.dim
    if h % s or w % s:
        raise IndivisibleGrid(f"ratio {s} does not divide a {h}x{w} token grid")
    idx = list(indices)
    if any(not 0 <= i < grid.frames for i in idx):
        raise InvalidCount(f"slow frame indices {idx} outside [0, {grid.frames})")
    picked = grid.data[idx].astype(np.float64)
    blocks = picked.reshape(len(idx), h // s, s, w // s, s, d)
    return blocks.mean(axis=(2, 4)).reshape(-1, d)


def pool(grid: EmbeddingGrid, s: int = 2, slow_frames: int | None = None, order: Order = "fast-first") -> PooledTokens:
    """Run both pathways. With the default ``slow_frames = s*s`` the result has
    ``frames + grid_h*grid_w`` rows (356 for a 100-frame 16x16 grid at s=2)."""
    if order not in ("fast-first", "slow-first"):
        raise ValueError(f"unknown order {order!r}")
    k = s * s if slow_frames is None else slow_frames
    indices = select_slow_frames(grid.frames, k)
    return PooledTokens(
        fast=fast_tokens(grid),
        slow=slow_tokens(grid, s, indices),
        s=s,
        slow_frame_indices=tuple(indices),
        order=order,
    )
