import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from elasinterp.dense import (DenseParams, dense_match, gap_interpolate, lr_consistency,
                              median_filter)
from elasinterp.descriptor import build_descriptor_field, sobel
from elasinterp.gridvec import build_grid_vector
from elasinterp.imgio import INVALID
from elasinterp.interp import interpolate_grid
from elasinterp.mesh import regular_triangulate
from elasinterp.support import MatchParams, SupportGrid, filter_supports, match_support

import oracles
from conftest import shifted_pair, textured


def fields(left, right):
    return build_descriptor_field(sobel(left)), build_descriptor_field(sobel(right))


def test_identical_images_flat_prior():
    img = textured(40, 48, seed=2)
    fl, fr = fields(img, img)
    empty = SupportGrid.from_disparities(np.full((8, 9), -1))
    gv = build_grid_vector(empty, img.shape, d_max=30, c_const=0)
    out = dense_match(fl, fr, np.zeros(img.shape), gv, d_max=30)
    assert (out[2:-2, 2:-2] == 0).all()
    assert (out[:2] == INVALID).all() and (out[:, -2:] == INVALID).all()


def test_translation_with_mesh_prior():
    left, right = shifted_pair(64, 96, 7, seed=4)
    fl, fr = fields(left, right)
    grid = filter_supports(match_support(fl, fr, MatchParams(d_max=30)))
    mesh = regular_triangulate(interpolate_grid(grid), shape=left.shape)
    gv = build_grid_vector(grid, left.shape, d_max=30)
    out = dense_match(fl, fr, mesh, gv, d_max=30)
    interior = out[2:-2, 9:-2]
    assert np.mean(interior == 7) > 0.99


def random_case(rng, h=24, w=28):
    left = rng.integers(0, 256, (h, w), dtype=np.uint8)
    shift = int(rng.integers(0, 6))
    right = np.roll(left, -shift, axis=1)
    right = np.clip(right + rng.integers(-30, 31, right.shape), 0, 255).astype(np.uint8)
    d_max = int(rng.integers(4, 20))
    prior = rng.uniform(-3, d_max + 3, (h, w))
    prior[rng.random((h, w)) < 0.2] = np.nan
    disp = rng.integers(0, d_max + 1, (4, 5))
    disp[rng.random(disp.shape) < 0.5] = -1
    gv = build_grid_vector(SupportGrid.from_disparities(disp, step=5), (h, w), cell_size=10,
                           k=int(rng.integers(1, 8)), d_max=d_max, c_const=1)
    params = DenseParams(lambda_prior=float(rng.uniform(0, 4)), delta_prior=int(rng.integers(1, 4)),
                         t_prior=float(rng.uniform(1, 12)))
    return left, right, prior, gv, params, d_max


@pytest.mark.parametrize("direction", [-1, 1])
@pytest.mark.parametrize("seed", range(25))
def test_equals_brute_force_energy(seed, direction):
    rng = np.random.default_rng(seed)
    left, right, prior, gv, params, d_max = random_case(rng)
    fl, fr = fields(left, right)
    out = dense_match(fl, fr, prior, gv, params, d_max=d_max, direction=direction)
    expect = oracles.dense(fl.data, fr.data, prior, gv.at, d_max, params.lambda_prior,
                           params.delta_prior, params.t_prior, direction)
    np.testing.assert_array_equal(out, expect)


@pytest.mark.parametrize("seed", range(3))
def test_equals_brute_force_48(seed):
    rng = np.random.default_rng(500 + seed)
    left, right, prior, gv, params, d_max = random_case(rng, 48, 48)
    fl, fr = fields(left, right)
    out = dense_match(fl, fr, prior, gv, params, d_max=d_max)
    expect = oracles.dense(fl.data, fr.data, prior, gv.at, d_max, params.lambda_prior,
                           params.delta_prior, params.t_prior)
    np.testing.assert_array_equal(out, expect)


def test_output_within_candidate_sets(rng):
    left, right, prior, gv, params, d_max = random_case(rng, 32, 40)
    out = dense_match(*fields(left, right), prior, gv, params, d_max=d_max)
    for v in range(2, 30):
        for u in range(2, 38):
            d = out[v, u]
            if d == INVALID:
                continue
            band = set()
            if not np.isnan(prior[v, u]):
                r = int(np.floor(prior[v, u] + 0.5))
                band = set(range(r - params.delta_prior, r + params.delta_prior + 1))
            assert d in band | set(gv.at(u, v))


def test_dense_params_validation():
    with pytest.raises(ValueError):
        DenseParams(delta_prior=0)
    with pytest.raises(ValueError):
        DenseParams(lambda_prior=-1)


# --- post-processing -------------------------------------------------------

def test_lr_keeps_agreeing_zero_maps():
    z = np.zeros((5, 6), np.int16)
    np.testing.assert_array_equal(lr_consistency(z, z, 1), z)


def test_lr_invalidates_when_right_is_invalid():
    left = np.full((1, 10), INVALID, np.int16)
    right = np.full((1, 10), 5, np.int16)
    left[0, 8] = 5
    right[0, 3] = INVALID
    assert lr_consistency(left, right, 1)[0, 8] == INVALID


def random_map(rng, shape, p_invalid=0.3, hi=20):
    m = rng.integers(0, hi, shape).astype(np.int16)
    m[rng.random(shape) < p_invalid] = INVALID
    return m


@pytest.mark.parametrize("seed", range(50))
def test_lr_equals_oracle(seed):
    rng = np.random.default_rng(seed)
    left, right = random_map(rng, (12, 30), hi=12), random_map(rng, (12, 30), hi=12)
    tol = int(rng.integers(0, 3))
    np.testing.assert_array_equal(lr_consistency(left, right, tol), oracles.lr_check(left, right, tol))


def test_gap_examples():
    row = np.array([[5, INVALID, 9]], np.int16)
    assert gap_interpolate(row, 1).tolist() == [[5, 5, 9]]
    row = np.array([[5, INVALID, INVALID, 9]], np.int16)
    assert gap_interpolate(row, 1).tolist() == row.tolist()
    row = np.array([[INVALID, 3, INVALID]], np.int16)
    assert gap_interpolate(row, 5).tolist() == row.tolist()


@pytest.mark.parametrize("seed", range(50))
def test_gap_equals_oracle(seed):
    rng = np.random.default_rng(seed)
    m = random_map(rng, (8, 40), p_invalid=float(rng.uniform(0.1, 0.8)))
    gap = int(rng.integers(0, 8))
    np.testing.assert_array_equal(gap_interpolate(m, gap), oracles.gap_fill(m, gap))


def test_median_examples():
    c = np.full((6, 6), 4, np.int16)
    np.testing.assert_array_equal(median_filter(c), c)
    s = np.full((5, 5), 5, np.int16)
    s[2, 2] = 99
    assert median_filter(s)[2, 2] == 5


def test_median_lower_middle_and_invalid_kept():
    m = np.array([[1, 2], [3, INVALID]], np.int16)
    out = median_filter(m)
    assert out[1, 1] == INVALID
    assert out[0, 0] == 2          # sorted [1, 2, 3] -> 2
    m = np.array([[1, 4], [INVALID, INVALID]], np.int16)
    assert median_filter(m)[0, 0] == 1   # two values -> lower middle


@pytest.mark.parametrize("seed", range(50))
def test_median_equals_oracle(seed):
    rng = np.random.default_rng(seed)
    m = random_map(rng, (int(rng.integers(1, 15)), int(rng.integers(1, 15))))
    np.testing.assert_array_equal(median_filter(m), oracles.median3(m))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_postprocessing_monotonicity(seed):
    rng = np.random.default_rng(seed)
    left, right = random_map(rng, (10, 25), hi=8), random_map(rng, (10, 25), hi=8)
    out = lr_consistency(left, right, 1)
    assert ((out == INVALID) | (out == left)).all()
    assert not ((left == INVALID) & (out != INVALID)).any()
    filled = gap_interpolate(out, 4)
    changed = filled != out
    for v, u in zip(*np.nonzero(changed)):
        row = out[v]
        lo = max(x for x in range(u) if row[x] != INVALID)
        hi = min(x for x in range(u + 1, row.size) if row[x] != INVALID)
        assert min(row[lo], row[hi]) <= filled[v, u] <= max(row[lo], row[hi])
