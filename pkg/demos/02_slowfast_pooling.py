"""SlowFast pooling: from 100x16x16 patch embeddings down to 356 tokens."""

# %%
import numpy as np

from tloc import EmbeddingGrid, pool

rng = np.random.default_rng(0)
grid = EmbeddingGrid(rng.normal(size=(100, 16, 16, 32)).astype(np.float32))
print("frames, h, w, dim:", grid.data.shape)

# %% Fast tokens: one mean vector per frame
out = pool(grid, s=2)
print("fast:", out.fast.shape)

# %% Slow tokens: s*s evenly spaced frames, each pooled s x s spatially
print("slow frames used:", out.slow_frame_indices)
print("slow:", out.slow.shape)

# %% Concatenated sequence fed to the language model
tokens = out.tokens()
print("total tokens:", len(out), tokens.shape)
assert len(out) == 100 + 16 * 16

# %% A constant grid pools to the same constant everywhere
flat = pool(EmbeddingGrid(np.full((8, 4, 4, 3), 2.5, dtype=np.float32)), s=2)
print("constant in, constant out:", np.unique(flat.tokens()))

# %% The total is always T + H*W; s moves slow tokens between time and space
for s in (1, 2, 4):
    p = pool(grid, s=s)
    print(f"s={s}: {len(p.slow_frame_indices)} slow frames, {len(p)} tokens")
