import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import best_two_partition, otsu_bruteforce
from wavechange.errors import ShapeMismatch
from wavechange.segment import (
    ChangeMap,
    FcmConfig,
    NonFiniteInput,
    TooFewPoints,
    fcm,
    fcm_objective,
    kmeans,
    labels_to_change_map,
    load_memberships,
    otsu_threshold,
    save_memberships,
    segment_values,
    to_change_map,
    update_centers,
    update_memberships,
)

unit_vectors = arrays(
    np.float64, st.integers(6, 200), elements=st.floats(0.0, 1.0, allow_nan=False, width=32)
)


# -- FCM --------------------------------------------------------------------

def test_fcm_two_groups():
    x = np.array([0, 0, 0, 0, 1, 1, 1, 1], dtype=float)
    res = fcm(x, FcmConfig(c=2, m=2, seed=3))
    lo, hi = int(np.argmin(res.v)), int(np.argmax(res.v))
    assert res.v[lo] == pytest.approx(0.0, abs=0.01)
    assert res.v[hi] == pytest.approx(1.0, abs=0.01)
    assert np.all(res.u[:4, lo] >= 0.99) and np.all(res.u[4:, hi] >= 0.99)
    # fixed-point check: one more sweep of the update equations barely moves anything
    v2 = update_centers(x, res.u, 2.0)
    u2 = update_memberships(x, v2, 2.0)
    assert np.max(np.abs(v2 - res.v)) < 1e-4
    assert np.linalg.norm(u2 - res.u) < 1e-4


def test_fcm_n_equals_c():
    x = np.array([0.1, 0.45, 0.9])
    res = fcm(x, FcmConfig(c=3, eps=1e-12, max_iter=5000, seed=0))
    assert sorted(res.v) == pytest.approx(sorted(x), abs=1e-6)
    rounded = np.round(res.u)
    assert np.array_equal(np.sort(rounded, axis=0).sum(axis=0), np.ones(3))
    np.testing.assert_allclose(res.u, rounded, atol=1e-6)
    assert np.array_equal(rounded.sum(axis=0), np.ones(3))


def test_fcm_constant_input():
    x = np.full(20, 0.42)
    res = fcm(x, FcmConfig(c=4, seed=1))
    np.testing.assert_allclose(res.v, 0.42, atol=1e-15)
    assert res.converged and res.n_iter <= 3
    # singular rows go wholly to the lowest coincident center
    assert np.array_equal(res.u, np.tile([1.0, 0, 0, 0], (20, 1)))


def test_fcm_errors():
    with pytest.raises(TooFewPoints):
        fcm([0.1, 0.2], FcmConfig(c=3))
    with pytest.raises(NonFiniteInput):
        fcm([0.1, np.nan, 0.3], FcmConfig(c=2))
    for bad in (dict(c=1), dict(m=1.0), dict(eps=0.0), dict(max_iter=0)):
        with pytest.raises(ValueError):
            FcmConfig(**bad)


def test_fcm_unpacks_to_u_v():
    u, v = fcm(np.linspace(0, 1, 10), FcmConfig(c=2))
    assert u.shape == (10, 2) and v.shape == (2,)


def test_singularity_assigns_lowest_coincident_center():
    u = update_memberships(np.array([0.5, 0.2]), np.array([0.2, 0.5, 0.5]), 2.0)
    np.testing.assert_array_equal(u, [[0, 1, 0], [1, 0, 0]])


def test_fcm_objective_examples():
    x = np.array([0.0, 0.0, 1.0])
    hard = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    assert fcm_objective(x, hard, np.array([0.0, 1.0]), 2) == 0.0
    ones = np.ones((3, 1))
    c = x.mean()
    assert fcm_objective(x, ones, np.array([c]), 2) == pytest.approx(np.sum((x - c) ** 2))
    with pytest.raises(ShapeMismatch):
        fcm_objective(x, hard, np.array([0.0, 1.0, 2.0]), 2)


@settings(max_examples=40, deadline=None)
@given(x=unit_vectors, c=st.integers(2, 6), seed=st.integers(0, 2**32 - 1), m=st.sampled_from([1.5, 2.0, 3.0]))
def test_fcm_rows_stochastic_and_objective_monotone(x, c, seed, m):
    rows_ok = []

    def check(it, u, v):
        rows_ok.append(np.max(np.abs(u.sum(axis=1) - 1.0)) <= 1e-9 and u.min() >= 0 and u.max() <= 1)

    res = fcm(x, FcmConfig(c=c, m=m, seed=seed, max_iter=60), callback=check, track_objective=True)
    assert all(rows_ok) and len(rows_ok) == res.n_iter
    j = np.array(res.objective)
    assert np.all(j >= 0)
    assert np.all(np.diff(j) <= 1e-12)


@settings(max_examples=20, deadline=None)
@given(x=unit_vectors, seed=st.integers(0, 2**32 - 1))
def test_fcm_deterministic(x, seed):
    cfg = FcmConfig(c=3, seed=seed, max_iter=50)
    a, b = fcm(x, cfg), fcm(x, cfg)
    assert np.array_equal(a.u, b.u) and np.array_equal(a.v, b.v) and a.n_iter == b.n_iter


def test_fcm_permutation_equivariance(rng):
    x = np.concatenate([rng.normal(0.1, 0.01, 50), rng.normal(0.5, 0.01, 50), rng.normal(0.9, 0.01, 50)])
    perm = rng.permutation(x.size)
    cfg = FcmConfig(c=3, eps=1e-10, max_iter=2000, seed=7)
    r1, r2 = fcm(x, cfg), fcm(x[perm], cfg)
    o1, o2 = np.argsort(r1.v), np.argsort(r2.v)
    np.testing.assert_allclose(r1.v[o1], r2.v[o2], atol=1e-8)
    np.testing.assert_allclose(r1.u[perm][:, o1], r2.u[:, o2], atol=1e-7)


@settings(max_examples=30, deadline=None)
@given(x=unit_vectors, k=st.integers(-6, 6), seed=st.integers(0, 1000))
def test_change_map_invariant_to_power_of_two_scaling(x, k, seed):
    # power-of-two scaling is exact in floating point, so the partition must match bit for bit
    cfg = FcmConfig(c=3, seed=seed, max_iter=40)
    n = x.size
    r1, r2 = fcm(x, cfg), fcm(x * 2.0**k, cfg)
    assert to_change_map(r1.u, r1.v, n, 1) == to_change_map(r2.u, r2.v, n, 1)


@pytest.mark.parametrize("scale", [0.3, 1.7, 12.5])
def test_change_map_invariant_to_scaling_separated(rng, scale):
    x = np.concatenate([rng.normal(0.1, 0.02, 200), rng.normal(0.8, 0.02, 40)])
    cfg = FcmConfig(c=2, seed=5)
    r1, r2 = fcm(x, cfg), fcm(x * scale, cfg)
    assert to_change_map(r1.u, r1.v, x.size, 1) == to_change_map(r2.u, r2.v, x.size, 1)


def test_membership_dump_roundtrip(tmp_path):
    res = fcm(np.linspace(0, 1, 12), FcmConfig(c=3, seed=2))
    p = tmp_path / "u.txt"
    save_memberships(str(p), res.u, res.v)
    lines = p.read_text().splitlines()
    assert len(lines) == 13 and len(lines[1].split()) == 3
    u, v = load_memberships(str(p))
    assert np.array_equal(u, res.u) and np.array_equal(v, res.v)


# -- k-means ----------------------------------------------------------------

@pytest.mark.parametrize("seed", range(6))
def test_kmeans_two_pairs(seed):
    x = [0.0, 0.0, 1.0, 1.0]
    labels, centers = kmeans(x, 2, seed=seed)
    assert sorted(centers) == pytest.approx(best_two_partition(x))
    assert labels[0] == labels[1] and labels[2] == labels[3] and labels[0] != labels[2]


def test_kmeans_single_cluster_is_mean(rng):
    x = rng.random(37)
    labels, centers = kmeans(x, 1)
    assert centers[0] == pytest.approx(x.mean()) and not labels.any()


@pytest.mark.parametrize("x", [[0.3, 0.1, 0.7, 0.2], [0.0, 1.0, 1.0], [0.5, 0.5, 0.5]])
def test_kmeans_k_equals_n(x):
    labels, centers = kmeans(x, len(x), seed=1)
    assert np.allclose(np.asarray(x), centers[labels])
    assert sorted(set(labels.tolist())) == list(range(len(x)))


def test_kmeans_errors():
    with pytest.raises(TooFewPoints):
        kmeans([0.1], 2)


@settings(max_examples=30, deadline=None)
@given(x=arrays(np.float64, st.integers(2, 9), elements=st.floats(0, 1, width=16)), seed=st.integers(0, 100))
def test_kmeans_two_clusters_is_lloyd_fixed_point(x, seed):
    labels, centers = kmeans(x, 2, seed=seed)
    assert sorted(set(labels.tolist())) == [0, 1]
    for j in range(2):
        assert centers[j] == pytest.approx(x[labels == j].mean())
    again, _ = kmeans(x, 2, seed=seed)
    assert np.array_equal(labels, again)


# -- Otsu -------------------------------------------------------------------

def test_otsu_bimodal():
    x = np.array([0.1] * 100 + [0.9] * 100)
    t = otsu_threshold(x)
    assert 0.1 < t <= 0.9
    assert np.array_equal(x >= t, x == 0.9)


def test_otsu_constant_gives_single_class():
    for c in (0.0, 0.5, 1.0):
        x = np.full(30, c)
        t = otsu_threshold(x)
        assert t == 1 / 256
        assert len(set((x >= t).tolist())) == 1


@settings(max_examples=150, deadline=None)
@given(x=arrays(np.float64, st.integers(1, 60), elements=st.floats(0, 1, allow_nan=False)))
def test_otsu_matches_bruteforce(x):
    assert otsu_threshold(x) == otsu_bruteforce(x)


def test_otsu_symmetric_tie_goes_low():
    # three equal masses at three levels: boundaries after the first and second bins tie
    x = np.repeat([0.0, 0.5, 0.99], 10)
    assert otsu_threshold(x) == otsu_bruteforce(x)
    assert otsu_threshold(x) == 1 / 256


# -- change-map extraction --------------------------------------------------

def test_to_change_map_examples():
    v = np.array([0.1, 0.9])
    u = np.array([[0.3, 0.7], [0.8, 0.2], [0.5, 0.5]])
    assert to_change_map(u, v, 3, 1).flags.tolist() == [[True, False, True]]


def test_to_change_map_equal_centers_lowest_index():
    v = np.array([0.9, 0.1, 0.9])
    u = np.array([[0.6, 0.1, 0.3], [0.2, 0.1, 0.7], [0.45, 0.1, 0.45]])
    assert to_change_map(u, v, 1, 3).flags.ravel().tolist() == [True, False, True]


def test_to_change_map_shape_errors():
    with pytest.raises(ShapeMismatch):
        to_change_map(np.ones((4, 2)) / 2, np.array([0.1, 0.2]), 3, 1)


def test_labels_to_change_map_examples():
    assert labels_to_change_map([0, 1, 0], [0.2, 0.8], 3, 1).flags.tolist() == [[False, True, False]]
    assert labels_to_change_map([1, 1], [0.2, 0.8], 2, 1).flags.all()
    assert labels_to_change_map([0, 1, 1], [0.5, 0.5], 3, 1).flags.tolist() == [[True, False, False]]
    with pytest.raises(ShapeMismatch):
        labels_to_change_map([0, 2], [0.1, 0.2], 2, 1)


@pytest.mark.parametrize("method", ["otsu", "kmeans", "fcm"])
def test_segment_values_separates_bright_block(method):
    grid = np.full((16, 16), 0.05)
    grid[4:8, 4:8] = 0.9
    cmap = segment_values(grid, method, fcm_cfg=FcmConfig(c=2), k=2)
    assert isinstance(cmap, ChangeMap)
    assert np.array_equal(cmap.flags, grid > 0.5)


def test_segment_values_unknown():
    with pytest.raises(ValueError):
        segment_values(np.zeros((2, 2)), "watershed")
