import numpy as np
import pytest

from fedsim.core import Population
from fedsim.errors import CohortTooLarge, DataError, InsufficientData, TooFewPoints
from fedsim.feddata import (
    CooldownSampler,
    load_partition,
    make_synthetic_classification,
    partition_dirichlet,
    partition_iid,
    sample_cohort,
    save_partition,
)


def test_synthetic_shapes_and_balance():
    X, y = make_synthetic_classification(103, dim=8, num_classes=10, margin=6.0, seed=0)
    assert X.shape == (103, 8)
    assert y.shape == (103,)
    counts = np.bincount(y, minlength=10)
    assert counts.max() - counts.min() <= 1


def test_synthetic_empty_and_validation():
    X, y = make_synthetic_classification(0, dim=4, num_classes=3, margin=1.0, seed=0)
    assert X.shape == (0, 4) and y.shape == (0,)
    with pytest.raises(ValueError):
        make_synthetic_classification(10, dim=4, num_classes=3, margin=0.0, seed=0)


def test_synthetic_deterministic():
    a = make_synthetic_classification(50, dim=5, num_classes=4, margin=3.0, seed=9)
    b = make_synthetic_classification(50, dim=5, num_classes=4, margin=3.0, seed=9)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])


def test_synthetic_center_separation_matches_margin():
    # empirical class means approximate the true centers
    X, y = make_synthetic_classification(
        20000, dim=16, num_classes=10, margin=6.0, seed=2
    )
    means = np.stack([X[y == k].mean(axis=0) for k in range(10)])
    diffs = means[:, None, :] - means[None, :, :]
    dist = np.sqrt((diffs**2).sum(axis=2))
    min_dist = dist[np.triu_indices(10, k=1)].min()
    assert abs(min_dist - 6.0) < 0.5


def test_synthetic_linearly_separable_oracle():
    # plain full-batch GD on a linear softmax probe, written out here so
    # the check does not depend on the package's own model code
    K, d = 10, 16
    X, y = make_synthetic_classification(200 * K, dim=d, num_classes=K, margin=6.0, seed=4)
    W = np.zeros((d, K))
    b = np.zeros(K)
    onehot = np.eye(K)[y]
    for _ in range(300):
        logits = X @ W + b
        logits -= logits.max(axis=1, keepdims=True)
        p = np.exp(logits)
        p /= p.sum(axis=1, keepdims=True)
        g = (p - onehot) / X.shape[0]
        W -= 1.0 * (X.T @ g)
        b -= 1.0 * g.sum(axis=0)
    acc = np.mean(np.argmax(X @ W + b, axis=1) == y)
    assert acc >= 0.99


def test_partition_iid_shapes_and_drop():
    X, y = make_synthetic_classification(105, dim=4, num_classes=3, margin=2.0, seed=1)
    ds = partition_iid(X, y, points_per_user=10, seed=0)
    assert ds.num_users == 10
    assert ds.total_points == 100  # 5 leftovers dropped
    assert all(u.num_points == 10 for u in ds.users.values())
    assert ds.population is Population.TRAIN


def test_partition_iid_too_few_points():
    X, y = make_synthetic_classification(5, dim=2, num_classes=2, margin=1.0, seed=0)
    with pytest.raises(TooFewPoints):
        partition_iid(X, y, points_per_user=10, seed=0)


def test_partition_iid_points_disjoint():
    X, y = make_synthetic_classification(60, dim=3, num_classes=2, margin=1.0, seed=3)
    X = X + np.arange(60)[:, None] * 1000.0  # make every row unique
    ds = partition_iid(X, y, points_per_user=10, seed=0)
    seen = np.concatenate([u.features[:, 0] for u in ds.users.values()])
    assert len(np.unique(seen)) == 60


def test_partition_dirichlet_sizes_and_errors():
    X, y = make_synthetic_classification(1000, dim=4, num_classes=10, margin=2.0, seed=5)
    ds = partition_dirichlet(X, y, num_users=18, points_per_user=50, alpha=0.5, seed=0)
    assert ds.num_users == 18
    assert all(u.num_points == 50 for u in ds.users.values())
    with pytest.raises(InsufficientData):
        partition_dirichlet(X, y, num_users=30, points_per_user=50, alpha=0.5, seed=0)


def _dirichlet_stats(alpha, seed):
    X, y = make_synthetic_classification(
        12000, dim=2, num_classes=10, margin=2.0, seed=100 + seed
    )
    ds = partition_dirichlet(
        X, y, num_users=50, points_per_user=200, alpha=alpha, seed=seed
    )
    global_hist = np.bincount(y, minlength=10) / y.size
    tvs, ents = [], []
    for u in ds.users.values():
        hist = np.bincount(u.labels, minlength=10) / u.num_points
        tvs.append(0.5 * np.abs(hist - global_hist).sum())
        nz = hist[hist > 0]
        ents.append(-(nz * np.log(nz)).sum())
    return float(np.mean(tvs)), float(np.mean(ents))


def test_dirichlet_high_alpha_matches_global_mixture():
    tvs = [_dirichlet_stats(1000.0, s)[0] for s in range(20)]
    assert np.mean(tvs) < 0.1


def test_dirichlet_low_alpha_concentrates_labels():
    ent_skewed = np.mean([_dirichlet_stats(0.1, s)[1] for s in range(20)])
    ent_flat = np.mean([_dirichlet_stats(1000.0, s)[1] for s in range(20)])
    assert ent_skewed < 0.5 * ent_flat


def _tiny_dataset(num_users=10):
    X, y = make_synthetic_classification(
        num_users * 5, dim=2, num_classes=2, margin=1.0, seed=0
    )
    return partition_iid(X, y, points_per_user=5, seed=0)


def test_sample_cohort_fixed_deterministic_draw_order():
    ds = _tiny_dataset()
    a = sample_cohort(ds, 4, seed=123)
    b = sample_cohort(ds, 4, seed=123)
    assert a == b
    assert len(set(a)) == 4
    assert sample_cohort(ds, 4, seed=124) != a


def test_sample_cohort_too_large():
    ds = _tiny_dataset()
    with pytest.raises(CohortTooLarge):
        sample_cohort(ds, 11, seed=0)


def test_sample_cohort_fixed_unbiased():
    ds = _tiny_dataset()
    counts = {uid: 0 for uid in ds.user_ids}
    trials = 10_000
    for s in range(trials):
        (uid,) = sample_cohort(ds, 1, seed=s)
        counts[uid] += 1
    # each user within 3 standard deviations of the uniform rate
    sd = np.sqrt(0.1 * 0.9 / trials)
    for uid, c in counts.items():
        assert abs(c / trials - 0.1) < 3 * sd, uid


def test_sample_cohort_poisson():
    ds = _tiny_dataset(num_users=500)
    sizes = [
        len(sample_cohort(ds, 0, seed=s, mode="poisson", poisson_rate=0.2))
        for s in range(200)
    ]
    assert abs(np.mean(sizes) - 100) < 5
    with pytest.raises(ValueError):
        sample_cohort(ds, 0, seed=0, mode="poisson", poisson_rate=0.0)


def test_cooldown_sampler_excludes_recent():
    ds = _tiny_dataset()
    sampler = CooldownSampler(cooldown=2)
    first = sampler.sample(ds, 5, seed=0, iteration=0)
    second = sampler.sample(ds, 5, seed=1, iteration=1)
    assert not set(first) & set(second)
    third = sampler.sample(ds, 5, seed=2, iteration=2)
    assert set(third) == set(first)  # cooled down again


def test_partition_csv_round_trip(tmp_path):
    ds = _tiny_dataset()
    path = tmp_path / "part.csv"
    save_partition(ds, path)
    loaded = load_partition(path, Population.TRAIN)
    assert loaded.user_ids == ds.user_ids
    for uid in ds.user_ids:
        np.testing.assert_array_equal(
            loaded.users[uid].features, ds.users[uid].features
        )
        np.testing.assert_array_equal(loaded.users[uid].labels, ds.users[uid].labels)


def test_load_partition_missing_file(tmp_path):
    with pytest.raises(DataError):
        load_partition(tmp_path / "nope.csv", Population.TRAIN)
