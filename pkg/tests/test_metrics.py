import pytest

from fedsim.core import MetricKind, MetricValue, merge_metrics, metric_aggregate
from fedsim.errors import EmptyCohort, IncompatibleShapes


def test_two_user_worked_example():
    # user A: 1 correct of 1, user B: 0 correct of 7
    per_user = [
        MetricValue.from_user(MetricKind.PER_USER, 1, 1),
        MetricValue.from_user(MetricKind.PER_USER, 0, 7),
    ]
    central = [
        MetricValue.from_user(MetricKind.CENTRAL, 1, 1),
        MetricValue.from_user(MetricKind.CENTRAL, 0, 7),
    ]
    assert metric_aggregate(per_user) == 0.5
    assert metric_aggregate(central) == 0.125


def test_central_invariant_to_grouping():
    users = [(3, 10), (5, 5), (0, 7), (2, 2)]
    vals = [MetricValue.from_user(MetricKind.CENTRAL, n, d) for n, d in users]
    direct = metric_aggregate(vals)
    grouped = ((vals[0] + vals[1]) + (vals[2] + vals[3])).value
    assert direct == grouped == 10 / 24


def test_per_user_invariant_to_duplicating_datapoints():
    base = MetricValue.from_user(MetricKind.PER_USER, 3, 10)
    doubled = MetricValue.from_user(MetricKind.PER_USER, 6, 20)
    assert base == doubled


def test_empty_cohort_raises():
    with pytest.raises(EmptyCohort):
        metric_aggregate([])


def test_mixed_kinds_refuse_to_merge():
    a = MetricValue.from_user(MetricKind.CENTRAL, 1, 2)
    b = MetricValue.from_user(MetricKind.PER_USER, 1, 2)
    with pytest.raises(IncompatibleShapes):
        _ = a + b


def test_zero_denominator_user_rejected():
    with pytest.raises(ValueError):
        MetricValue.from_user(MetricKind.CENTRAL, 0, 0)


def test_merge_metrics_maps():
    a = {"loss": MetricValue(MetricKind.CENTRAL, 2.0, 4.0)}
    b = {
        "loss": MetricValue(MetricKind.CENTRAL, 1.0, 1.0),
        "acc": MetricValue(MetricKind.CENTRAL, 3.0, 5.0),
    }
    merged = merge_metrics(a, b)
    assert merged["loss"].value == 3.0 / 5.0
    assert merged["acc"].value == 3.0 / 5.0
    # inputs untouched
    assert a["loss"].numerator == 2.0
