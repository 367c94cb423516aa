"""Time tokens: turning seconds into a fixed vocabulary of relative positions."""

# %%
from tloc import TimeGrid, decode_time, encode_time, max_discretization_error

# %% A 3-minute video and the default 100 tokens
grid = TimeGrid(length=180.0)
print("seconds per step:", grid.step_seconds)
print("worst-case error:", max_discretization_error(grid))

# %% Encode a few timestamps and read them back
for tau in (0.0, 0.9, 1.0, 47.3, 179.99, 180.0):
    t = encode_time(tau, grid)
    print(f"{tau:7.2f}s -> <{t}> -> {decode_time(t, grid):7.3f}s")

# %% The same token means different seconds in videos of different length
for length in (30.0, 180.0, 3600.0):
    print(f"<50> in a {length:.0f}s video is at {decode_time(50, TimeGrid(length)):.2f}s")

# %% Timestamps outside [0, L] are clamped rather than rejected
print(encode_time(-4.0, grid), encode_time(999.0, grid))
