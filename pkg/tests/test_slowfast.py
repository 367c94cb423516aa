import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import nested_loop_pool
from tloc.errors import IndivisibleGrid, InvalidCount, InvalidEmbeddingGrid
from tloc.slowfast import EmbeddingGrid, fast_tokens, pool, select_slow_frames, slow_tokens


def grid_of(arr):
    return EmbeddingGrid(np.asarray(arr, dtype=np.float32))


def test_fast_constant_input():
    out = fast_tokens(grid_of(np.ones((3, 4, 2, 5))))
    assert out.shape == (3, 5)
    assert np.all(out == 1.0)


def test_fast_single_frame_mean():
    g = EmbeddingGrid.from_flat([1, 2, 3, 4], 1, 2, 2, 1)
    np.testing.assert_array_equal(fast_tokens(g), [[2.5]])


def test_fast_per_frame_constants():
    data = np.stack([np.zeros((2, 2, 1)), np.full((2, 2, 1), 6.0)])
    np.testing.assert_array_equal(fast_tokens(grid_of(data)), [[0.0], [6.0]])


@pytest.mark.parametrize(
    "frames, k, expected",
    [(100, 4, [0, 33, 66, 99]), (4, 4, [0, 1, 2, 3]), (7, 2, [0, 6]), (9, 1, [0])],
)
def test_select_slow_frames(frames, k, expected):
    assert select_slow_frames(frames, k) == expected


@pytest.mark.parametrize("frames, k", [(3, 0), (3, 4)])
def test_select_slow_frames_invalid(frames, k):
    with pytest.raises(InvalidCount):
        select_slow_frames(frames, k)


def test_slow_ones():
    out = slow_tokens(grid_of(np.ones((4, 4, 4, 3))), 2, [0, 1, 2, 3])
    assert out.shape == (16, 3)
    assert np.all(out == 1.0)


def test_slow_single_block():
    g = grid_of(np.array([[1, 2], [3, 4]]).reshape(1, 2, 2, 1))
    np.testing.assert_array_equal(slow_tokens(g, 2, [0]), [[2.5]])


def test_slow_block_order_is_row_major():
    frame = np.zeros((4, 4))
    frame[:2, :2] = 8
    out = slow_tokens(grid_of(frame.reshape(1, 4, 4, 1)), 2, [0])
    np.testing.assert_array_equal(out[:, 0], [8, 0, 0, 0])
    frame = np.zeros((4, 4))
    frame[:2, 2:] = 8
    out = slow_tokens(grid_of(frame.reshape(1, 4, 4, 1)), 2, [0])
    np.testing.assert_array_equal(out[:, 0], [0, 8, 0, 0])


def test_indivisible():
    with pytest.raises(IndivisibleGrid):
        slow_tokens(grid_of(np.ones((4, 3, 4, 1))), 2, [0])


@pytest.mark.parametrize("frames, side, expected", [(100, 16, 356), (4, 2, 8), (9, 4, 25)])
def test_pool_counts(frames, side, expected):
    out = pool(grid_of(np.zeros((frames, side, side, 2))), s=2)
    assert len(out) == expected
    assert out.tokens().shape == (expected, 2)
    assert out.fast.shape[0] == frames
    assert out.slow.shape[0] == side * side


def test_pool_order_flag():
    rng = np.random.default_rng(0)
    g = grid_of(rng.normal(size=(4, 2, 2, 3)))
    a = pool(g, order="fast-first").tokens()
    b = pool(g, order="slow-first").tokens()
    np.testing.assert_array_equal(a[:4], b[4:])
    np.testing.assert_array_equal(a[4:], b[:4])
    with pytest.raises(ValueError):
        pool(g, order="interleaved")


def test_pool_needs_enough_frames():
    with pytest.raises(InvalidCount):
        pool(grid_of(np.ones((3, 2, 2, 1))), s=2)


def test_from_flat_length_check():
    with pytest.raises(InvalidEmbeddingGrid):
        EmbeddingGrid.from_flat([1, 2, 3], 1, 2, 2, 1)
    with pytest.raises(InvalidEmbeddingGrid):
        EmbeddingGrid(np.zeros((2, 2, 2)))


@st.composite
def small_grids(draw):
    s = draw(st.sampled_from([1, 2]))
    frames = draw(st.integers(min_value=s * s, max_value=8))
    h = s * draw(st.integers(min_value=1, max_value=8 // s))
    w = s * draw(st.integers(min_value=1, max_value=8 // s))
    d = draw(st.integers(min_value=1, max_value=4))
    seed = draw(st.integers(min_value=0, max_value=2**32 - 1))
    data = np.random.default_rng(seed).uniform(-10, 10, size=(frames, h, w, d)).astype(np.float32)
    return EmbeddingGrid(data), s


@settings(max_examples=150)
@given(small_grids())
def test_pool_matches_nested_loops(case):
    grid, s = case
    out = pool(grid, s=s)
    fast, slow = nested_loop_pool(grid.data.astype(float).tolist(), s, list(out.slow_frame_indices))
    np.testing.assert_allclose(out.fast, fast, atol=1e-6, rtol=0)
    np.testing.assert_allclose(out.slow, slow, atol=1e-6, rtol=0)
    assert len(out) == grid.frames + grid.grid_h * grid.grid_w


@settings(max_examples=100)
@given(small_grids())
def test_fast_mean_preserves_global_mean(case):
    grid, _ = case
    got = fast_tokens(grid).mean(axis=0)
    want = grid.data.astype(np.float64).mean(axis=(0, 1, 2))
    np.testing.assert_allclose(got, want, rtol=1e-6, atol=1e-9)


@settings(max_examples=50)
@given(small_grids(), st.randoms(use_true_random=False))
def test_frame_permutation_permutes_fast_rows(case, rnd):
    grid, _ = case
    perm = list(range(grid.frames))
    rnd.shuffle(perm)
    np.testing.assert_array_equal(fast_tokens(EmbeddingGrid(grid.data[perm])), fast_tokens(grid)[perm])
