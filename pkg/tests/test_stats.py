import numpy as np
import pytest

from typicality.stats import bonferroni, ks_permutation, tv_distance_exact, two_sample_test


def test_identical_streams_give_p_one():
    a = np.random.default_rng(5).standard_normal((500, 3))
    r = two_sample_test(a, a.copy())
    assert r.statistic == 0.0
    assert np.all(r.coordinate_pvalues == 1.0)


def test_constant_samples_give_p_one():
    r = two_sample_test(np.ones(200), np.ones(300))
    assert r.pvalue == 1.0


def test_power_against_shift():
    rng = np.random.default_rng(6)
    a = rng.standard_normal(10_000)
    b = rng.standard_normal(10_000) + 0.5
    assert two_sample_test(a, b).pvalue < 0.001


def test_calibration_on_shuffled_multisets():
    # split one pooled sample at random: the null holds exactly
    rng = np.random.default_rng(7)
    pooled = rng.standard_normal(400)
    ps = []
    for _ in range(100):
        perm = rng.permutation(pooled)
        ps.append(two_sample_test(perm[:200], perm[200:], rng=rng).pvalue)
    assert 0.01 <= np.mean(np.array(ps) < 0.05) <= 0.10


def test_calibration_with_heavy_ties():
    rng = np.random.default_rng(8)
    ps = []
    for _ in range(100):
        a, b = rng.poisson(2.0, 300), rng.poisson(2.0, 300)
        ps.append(two_sample_test(a, b, rng=rng).pvalue)
    rate = np.mean(np.array(ps) < 0.05)
    assert 0.01 <= rate <= 0.10


def test_count_permutation_null_matches_label_permutation():
    # oracle: shuffle the pooled labels directly and recompute the statistic
    rng = np.random.default_rng(9)
    a = rng.poisson(1.0, 60)
    b = rng.poisson(1.4, 60)
    stat, p = ks_permutation(a, b, np.random.default_rng(10), threshold=0.5, n_perm=4000)
    pooled = np.concatenate([a, b])
    grid = np.unique(pooled)

    def ks(x, y):
        fx = np.searchsorted(np.sort(x), grid, side="right") / len(x)
        fy = np.searchsorted(np.sort(y), grid, side="right") / len(y)
        return np.max(np.abs(fx - fy))

    assert stat == pytest.approx(ks(a, b))
    exceed = 0
    for _ in range(4000):
        perm = rng.permutation(pooled)
        exceed += ks(perm[:60], perm[60:]) >= stat - 1e-12
    p_oracle = (1 + exceed) / 4001
    assert abs(p - p_oracle) < 0.03


def test_permutation_refines_near_threshold():
    rng = np.random.default_rng(11)
    a, b = rng.poisson(1.0, 2000), rng.poisson(1.2, 2000)
    _, p = ks_permutation(a, b, rng, threshold=0.01)
    # with only 199 permutations the smallest reachable p-value is 0.005
    assert p < 0.005


def test_shape_checks():
    with pytest.raises(ValueError):
        two_sample_test(np.zeros((10, 2)), np.zeros((10, 3)))
    with pytest.raises(ValueError):
        two_sample_test([1.0], [1.0, 2.0])


def test_bonferroni():
    assert bonferroni([0.01, 0.2, 0.5]) == pytest.approx(0.03)
    assert bonferroni([0.6, 0.9]) == 1.0
    assert bonferroni([]) == 1.0


def test_tv_distance_examples():
    assert tv_distance_exact({"a": 0.5, "b": 0.5}, {"a": 0.5, "b": 0.5}) == 0.0
    assert tv_distance_exact({"a": 1.0}, {"b": 1.0}) == 1.0
    assert tv_distance_exact({"a": 2 / 3, "b": 1 / 3}, {"a": 0.5, "b": 0.5}) == pytest.approx(1 / 6)
    p, q = {"a": 0.2, "b": 0.8}, {"a": 0.7, "c": 0.3}
    assert tv_distance_exact(p, q) == tv_distance_exact(q, p)
