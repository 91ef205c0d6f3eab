import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mycogate import ConductiveGrid, RgbImage, binarize, dilate, k_histogram, neighbor_counts
from mycogate.template import build_grid, write_k_histogram_csv


def _img(pixels):
    return RgbImage(np.asarray(pixels, dtype=np.uint8))


def test_binarize_threshold_rule():
    img = _img([[(10, 200, 5), (255, 255, 255), (19, 41, 19), (20, 41, 19)]])
    assert binarize(img).tolist() == [[True, False, True, False]]


def test_binarize_each_channel_strict():
    img = _img([[(19, 40, 19), (19, 41, 20), (0, 255, 0)]])
    assert binarize(img).tolist() == [[False, False, True]]


def test_dilate_empty_mask():
    mask = np.zeros((4, 6), dtype=bool)
    assert not dilate(mask).any()


def test_dilate_single_node_moore_block():
    mask = np.zeros((10, 10), dtype=bool)
    mask[5, 5] = True
    out = dilate(mask)
    expected = np.zeros((10, 10), dtype=bool)
    expected[4:7, 4:7] = True
    assert np.array_equal(out, expected)


def test_dilate_corner_clips():
    mask = np.zeros((5, 5), dtype=bool)
    mask[0, 0] = True
    out = dilate(mask)
    expected = np.zeros((5, 5), dtype=bool)
    expected[0:2, 0:2] = True
    assert np.array_equal(out, expected)


def test_dilate_von_neumann_plus_shape():
    mask = np.zeros((5, 5), dtype=bool)
    mask[2, 2] = True
    out = dilate(mask, neighborhood="von_neumann")
    assert out[2, 2] and out[1, 2] and out[3, 2] and out[2, 1] and out[2, 3]
    assert not out[1, 1]


masks = arrays(np.bool_, st.tuples(st.integers(1, 12), st.integers(1, 12)))


@given(masks)
@settings(max_examples=80)
def test_dilate_never_removes(mask):
    out = dilate(mask)
    assert (out | mask == out).all()


@given(masks)
@settings(max_examples=80)
def test_dilate_monotone_growth(mask):
    once = dilate(mask)
    twice = dilate(once)
    assert (twice | once == twice).all()


def test_neighbor_counts_examples():
    isolated = np.zeros((3, 3), dtype=bool)
    isolated[1, 1] = True
    assert neighbor_counts(isolated)[1, 1] == 0

    full = np.ones((3, 3), dtype=bool)
    assert neighbor_counts(full)[1, 1] == 4

    ell = np.zeros((3, 3), dtype=bool)
    ell[1, 1] = ell[0, 1] = ell[1, 0] = True
    assert neighbor_counts(ell)[1, 1] == 2


def test_neighbor_counts_zero_off_mask():
    mask = np.zeros((3, 3), dtype=bool)
    mask[0, :] = True
    k = neighbor_counts(mask)
    assert (k[1:, :] == 0).all()


def test_k_histogram_examples():
    empty = ConductiveGrid.from_mask(np.zeros((2, 2), dtype=bool))
    assert k_histogram(empty) == {}

    row = ConductiveGrid.from_mask(np.ones((1, 3), dtype=bool))
    assert k_histogram(row) == {1: 2, 2: 1}


@given(masks)
@settings(max_examples=80)
def test_k_histogram_sums_to_conductive_count(mask):
    grid = ConductiveGrid.from_mask(mask)
    assert sum(k_histogram(grid).values()) == grid.n_conductive


def test_build_grid_pipeline_matches_stages():
    rng = np.random.default_rng(3)
    px = np.full((20, 30, 3), 255, dtype=np.uint8)
    strands = rng.random((20, 30)) < 0.1
    px[strands] = (5, 120, 5)
    img = RgbImage(px)
    grid = build_grid(img)
    expected_mask = dilate(binarize(img))
    assert np.array_equal(grid.mask, expected_mask)
    assert np.array_equal(grid.k, neighbor_counts(expected_mask))


def test_histogram_csv_format(tmp_path):
    path = tmp_path / "k.csv"
    write_k_histogram_csv(path, {1: 2, 2: 1})
    assert path.read_bytes() == b"k,count\n1,2\n2,1\n"
