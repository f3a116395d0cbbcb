import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otsynth.errors import DimensionError
from otsynth.histmatch import match_histogram, match_sorted
from otsynth.slicedot import (
    OtParams,
    align_mean,
    blend_content,
    deproject,
    match_slice,
    optimal_transport,
    project,
    random_basis,
    sliced_wasserstein,
)


def test_random_basis_1d_sign_fixed():
    for seed in range(5):
        b = random_basis(1, np.random.default_rng(seed))
        assert np.array_equal(b, [[1.0]])


@given(n=st.integers(1, 12), seed=st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_random_basis_orthonormal(n, seed):
    b = random_basis(n, np.random.default_rng(seed))
    assert np.abs(b @ b.T - np.eye(n)).max() <= 1e-4
    assert abs(abs(np.linalg.det(b)) - 1.0) <= 1e-3
    assert np.all(np.diag(b) >= 0.0)


def test_random_basis_deterministic():
    b1 = random_basis(7, np.random.default_rng(123))
    b2 = random_basis(7, np.random.default_rng(123))
    assert np.array_equal(b1, b2)


def test_random_basis_rejects_zero_dims():
    with pytest.raises(DimensionError):
        random_basis(0, np.random.default_rng(0))


def test_project_identity_basis():
    m = np.random.default_rng(0).standard_normal((10, 4)).astype(np.float32)
    eye = np.eye(4)
    assert np.allclose(project(eye, m), m)
    assert np.allclose(deproject(eye, m), m)


def test_project_rotation_90_degrees():
    rot = np.array([[0.0, 1.0], [-1.0, 0.0]])  # maps (1,0) -> (0,1)
    row = np.array([[1.0, 0.0]], dtype=np.float32)
    rotated = project(rot, row)
    assert np.allclose(rotated, [[0.0, 1.0]])
    assert np.allclose(deproject(rot, rotated), row, atol=1e-6)


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_project_preserves_norms(seed):
    rng = np.random.default_rng(seed)
    basis = random_basis(6, rng)
    m = rng.standard_normal((30, 6)).astype(np.float32)
    rotated = project(basis, m)
    assert np.allclose(np.linalg.norm(rotated, axis=1), np.linalg.norm(m, axis=1), atol=1e-4)
    assert np.abs(deproject(basis, rotated) - m).max() <= 1e-4


def test_match_slice_one_dim_reduces_to_histogram_match():
    rng = np.random.default_rng(5)
    o = rng.normal(size=(64, 1))
    s = rng.normal(loc=3.0, size=(64, 1))
    out = match_slice(o, s, bins=128)
    assert np.array_equal(out[:, 0], match_histogram(o[:, 0], s[:, 0], bins=128))


def test_match_slice_self_within_bin():
    rng = np.random.default_rng(6)
    o = rng.normal(size=(200, 3))
    out = match_slice(o, o.copy(), bins=128)
    for d in range(3):
        width = (o[:, d].max() - o[:, d].min()) / 128
        assert np.abs(out[:, d] - o[:, d]).max() <= width


def test_match_slice_columns_against_sort_oracle():
    rng = np.random.default_rng(7)
    o = rng.uniform(0.1, 0.9, size=(256, 2))
    s = rng.uniform(0.0, 1.0, size=(256, 2))
    out = match_slice(o, s, bins=128)
    for d in range(2):
        oracle = match_sorted(o[:, d], s[:, d])
        span = max(o[:, d].max(), s[:, d].max()) - min(o[:, d].min(), s[:, d].min())
        assert np.abs(out[:, d] - oracle).max() <= span / 128


def test_match_slice_dims_mismatch():
    with pytest.raises(DimensionError):
        match_slice(np.zeros((4, 2)), np.zeros((4, 3)))


def test_blend_content_endpoints_exact():
    rng = np.random.default_rng(8)
    o = rng.standard_normal((20, 4)).astype(np.float32)
    c = rng.standard_normal((20, 4)).astype(np.float32)
    assert np.array_equal(blend_content(o, c, 0.0), o)
    assert np.array_equal(blend_content(o, c, 1.0), c)
    out = blend_content(np.array([[0.0, 0.0]]), np.array([[2.0, 4.0]]), 0.5)
    assert np.array_equal(out, [[1.0, 2.0]])


def test_blend_content_shape_mismatch():
    with pytest.raises(DimensionError):
        blend_content(np.zeros((2, 2)), np.zeros((3, 2)), 0.5)


def test_align_mean():
    rng = np.random.default_rng(9)
    c = rng.standard_normal((50, 2)).astype(np.float32) + np.array([1.0, 1.0], np.float32)
    s = rng.standard_normal((70, 2)).astype(np.float32) + np.array([3.0, 5.0], np.float32)
    out = align_mean(c, s)
    assert np.allclose(out.mean(axis=0), s.mean(axis=0), atol=1e-4)
    assert np.allclose(out - c, (s.mean(axis=0) - c.mean(axis=0))[None, :], atol=1e-4)
    assert np.array_equal(align_mean(c, c), c)


def test_sliced_wasserstein_basics():
    rng = np.random.default_rng(10)
    a = rng.standard_normal((100, 3))
    assert sliced_wasserstein(a, a.copy(), 16, np.random.default_rng(0)) <= 1e-5
    pm0 = np.zeros((50, 1))
    pm3 = np.full((50, 1), 3.0)
    assert sliced_wasserstein(pm0, pm3, 8, np.random.default_rng(1)) == pytest.approx(3.0, abs=1e-6)
    with pytest.raises(DimensionError):
        sliced_wasserstein(np.zeros((4, 2)), np.zeros((5, 2)), 4, np.random.default_rng(2))


def _gaussian_pair(seed, m=10_000):
    rng = np.random.default_rng(seed)
    o = rng.standard_normal((m, 2)).astype(np.float32)
    s = (rng.standard_normal((m, 2)) * np.sqrt([4.0, 1.0]) + 5.0).astype(np.float32)
    return o, s


def test_transport_of_shuffled_copy_is_stationary():
    # A shuffled copy has the identical empirical distribution (distance
    # exactly 0); transport may only add binning error.
    rng = np.random.default_rng(30)
    s = rng.standard_normal((2000, 3)).astype(np.float32)
    o = s[rng.permutation(2000)].copy()
    before = sliced_wasserstein(o, s, 32, np.random.default_rng(31))
    assert before == 0.0
    out = optimal_transport(o, s, 1, OtParams(), np.random.default_rng(32))
    after = sliced_wasserstein(out, s, 32, np.random.default_rng(31))
    width = (s.max() - s.min()) / 128
    assert after <= before + width


def test_transport_reduces_distance_each_application():
    o, s = _gaussian_pair(0)
    params = OtParams(global_passes=5, bins=128)
    metric_rng = np.random.default_rng(99)
    dist = sliced_wasserstein(o, s, 32, metric_rng)
    for call in range(5):
        o = optimal_transport(o, s, 5, params, np.random.default_rng((1, call)))
        nxt = sliced_wasserstein(o, s, 32, np.random.default_rng(99))
        assert nxt < dist
        dist = nxt


def test_transport_gaussian_moments():
    # Five applications at passes=5 on 2-d Gaussians: mean lands within 0.1
    # of (5, 5) and covariance within 5% Frobenius of diag(4, 1).
    o, s = _gaussian_pair(0)
    params = OtParams(global_passes=5, bins=128)
    for call in range(5):
        o = optimal_transport(o, s, 5, params, np.random.default_rng((2, call)))
    mean = o.mean(axis=0)
    cov = np.cov(o.T)
    assert np.linalg.norm(mean - [5.0, 5.0]) <= 0.1
    target = np.diag([4.0, 1.0])
    assert np.linalg.norm(cov - target) / np.linalg.norm(target) <= 0.05


def test_transport_one_dim_equals_histogram_match():
    rng = np.random.default_rng(11)
    o = rng.normal(size=(128, 1)).astype(np.float32)
    s = rng.normal(loc=2.0, size=(128, 1)).astype(np.float32)
    params = OtParams(global_passes=5, bins=128)
    out = optimal_transport(o, s, 5, params, np.random.default_rng(3))
    expected = match_histogram(o[:, 0], s[:, 0], bins=128)
    assert np.allclose(out[:, 0], expected, atol=1e-5)


def test_transport_never_mutates_target():
    o, s = _gaussian_pair(1, m=500)
    snapshot = s.copy()
    optimal_transport(o, s, 5, OtParams(), np.random.default_rng(4))
    assert np.array_equal(s, snapshot)


def test_transport_deterministic():
    o, s = _gaussian_pair(2, m=400)
    params = OtParams(global_passes=5, bins=128, seed=7)
    a = optimal_transport(o, s, 5, params, np.random.default_rng(7))
    b = optimal_transport(o, s, 5, params, np.random.default_rng(7))
    assert np.array_equal(a, b)


def test_marginals_match_after_single_slice():
    rng = np.random.default_rng(12)
    o = rng.standard_normal((512, 4)).astype(np.float32)
    s = (rng.standard_normal((512, 4)) * 2.0 + 1.0).astype(np.float32)
    basis = random_basis(4, np.random.default_rng(13))
    out = deproject(basis, match_slice(project(basis, o), project(basis, s), 128))
    ro = project(basis, out)
    rs = project(basis, s)
    for d in range(4):
        width = (max(ro[:, d].max(), rs[:, d].max()) - min(ro[:, d].min(), rs[:, d].min())) / 128
        qq = np.abs(np.sort(ro[:, d]) - np.sort(rs[:, d])).max()
        assert qq <= width + 1e-5


def test_blend_interleaved_stays_bounded():
    rng = np.random.default_rng(14)
    o = rng.standard_normal((256, 3)).astype(np.float32)
    s = (rng.standard_normal((256, 3)) + 2.0).astype(np.float32)
    c = (rng.standard_normal((256, 3)) - 1.0).astype(np.float32)
    params = OtParams(global_passes=5, bins=128, content_strength=0.4)
    out = optimal_transport(o, s, 1, params, np.random.default_rng(15), content=c)
    assert np.all(np.isfinite(out))
    lo = min(s.min(), c.min()) - 1.0
    hi = max(s.max(), c.max()) + 1.0
    assert out.min() >= lo and out.max() <= hi


def test_slice_distance_monotone_trend():
    # Distance to the target never increases by more than a bin width as
    # more slices are applied, across ten mixture fixtures.
    for seed in range(10):
        rng = np.random.default_rng((20, seed))
        centers = rng.uniform(-3, 3, size=(3, 4))
        o = rng.standard_normal((1500, 4)).astype(np.float32)
        parts = [rng.standard_normal((500, 4)) * 0.5 + centers[i] for i in range(3)]
        s = np.concatenate(parts).astype(np.float32)
        width = (s.max() - s.min()) / 128
        distances = [sliced_wasserstein(o, s, 24, np.random.default_rng(50))]

        def record(current, history=distances):
            history.append(sliced_wasserstein(current, s, 24, np.random.default_rng(50)))

        optimal_transport(o, s, 1, OtParams(), np.random.default_rng((21, seed)), on_slice=record)
        diffs = np.diff(distances)
        assert np.all(diffs <= width)
