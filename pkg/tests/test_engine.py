"""Aggregation algebra, scheduling quality, and loop semantics."""

from __future__ import annotations

import numpy as np
import pytest

from fedsim.algorithms import AlgorithmState, FederatedAlgorithm, UserResult
from fedsim.core import (
    CentralContext,
    EvalParams,
    LocalTrainParams,
    MetricKind,
    MetricValue,
    Population,
    Statistics,
    cohort_seed,
)
from fedsim.engine import (
    SimulationEngine,
    SumAggregator,
    compute_base_weight,
    max_straggler_time,
    round_robin_schedule,
    run_simulation,
    schedule_users,
    worker_reduce_sum,
)
from fedsim.errors import EmptyCohort, EngineError
from fedsim.feddata import FederatedDataset, UserDataset
from fedsim.models import SGDOptimizer
from fedsim.privacy import ClippingPostprocessor, GaussianCentralMechanism


# ---------------------------------------------------------------- helpers


def make_dataset(sizes, population=Population.TRAIN, dim=2, seed=0):
    rng = np.random.default_rng(seed)
    users = {}
    for i, n in enumerate(sizes):
        uid = f"u{i:05d}"
        users[uid] = UserDataset(
            user_id=uid,
            features=rng.normal(size=(n, dim)),
            labels=np.zeros(n, dtype=np.int64),
        )
    return FederatedDataset(users=users, population=population)


class StubAlgorithm(FederatedAlgorithm):
    """Emits one statistics vector per user: [num_points]."""

    def __init__(
        self,
        total_iterations=3,
        cohort_size=4,
        run_seed=7,
        emit_stats=True,
        fail_for=None,
        entry_values=None,
    ):
        self.total_iterations = total_iterations
        self.cohort_size = cohort_size
        self.run_seed = run_seed
        self.emit_stats = emit_stats
        self.fail_for = fail_for
        self.entry_values = entry_values

    def initial_state(self):
        return AlgorithmState(params={"w": np.zeros(2)}, optimizer=SGDOptimizer(0.1))

    def get_next_central_contexts(self, state, iteration):
        if iteration >= self.total_iterations:
            return ()
        local = LocalTrainParams(0.1, 1, 1) if self.emit_stats else None
        return (
            CentralContext(
                iteration=iteration,
                population=Population.TRAIN,
                cohort_size=self.cohort_size,
                seed=cohort_seed(self.run_seed, iteration, "train"),
                do_training=self.emit_stats,
                local_params=local,
                eval_params=EvalParams(),
            ),
        )

    def simulate_one_user(self, state, user, context, seed):
        if self.fail_for is not None and user.user_id == self.fail_for:
            raise ValueError("injected user failure")
        stats = None
        if self.emit_stats:
            values = (
                np.array([float(user.num_points)])
                if self.entry_values is None
                else np.asarray(self.entry_values, dtype=np.float64)
            )
            stats = Statistics.from_entries({"x": values}, 1.0)
        metrics = {
            "count": MetricValue(MetricKind.CENTRAL, 1.0, 1.0),
            "points": MetricValue(MetricKind.CENTRAL, float(user.num_points), 1.0),
        }
        return UserResult(
            statistics=stats, aux={}, metrics=metrics,
            algo_update=(user.user_id, seed),
        )

    def process_aggregated_statistics_all_contexts(
        self, state, contexts, aggregates, iteration_metrics, user_updates
    ):
        agg = aggregates[0]
        state.extra.setdefault("sums", []).append(
            None if agg is None else agg.entries["x"].copy()
        )
        state.extra.setdefault("updates", []).append(list(user_updates))
        return state


def random_statistics(rng, weight=None):
    entries = {
        "a": rng.uniform(-1.0, 1.0, size=3),
        "b": rng.uniform(-1.0, 1.0, size=5),
    }
    w = rng.uniform(0.1, 5.0) if weight is None else weight
    return Statistics.from_entries(entries, w)


# ------------------------------------------------------------- aggregator


def test_worker_reduce_sum_example():
    a = Statistics.from_entries({"w": np.array([1.0, 2.0])}, 1.0)
    b = Statistics.from_entries({"w": np.array([3.0, 4.0])}, 2.0)
    total = worker_reduce_sum([a, b])
    np.testing.assert_array_equal(total.entries["w"], [4.0, 6.0])
    assert total.weight == 3.0


def test_worker_reduce_sum_single_is_identity():
    a = Statistics.from_entries({"w": np.array([1.5])}, 2.0)
    total = worker_reduce_sum([a])
    np.testing.assert_array_equal(total.entries["w"], a.entries["w"])
    assert total.weight == a.weight


def test_worker_reduce_sum_zero_states():
    states = [Statistics.from_entries({"w": np.zeros(3)}, 2.0) for _ in range(4)]
    total = worker_reduce_sum(states)
    np.testing.assert_array_equal(total.entries["w"], np.zeros(3))
    assert total.weight == 8.0


def test_worker_reduce_sum_empty_rejected():
    with pytest.raises(ValueError):
        worker_reduce_sum([])


def test_sum_aggregator_none_handling():
    agg = SumAggregator()
    assert agg.worker_reduce([None, None]) is None
    s = Statistics.from_entries({"w": np.array([1.0])}, 1.0)
    out = agg.worker_reduce([None, agg.accumulate(None, s), None])
    np.testing.assert_array_equal(out.entries["w"], [1.0])


def test_aggregator_interchange_law():
    # g({f(S_a, d), S_b}) == f(g({S_a, S_b}), d) on 1000 random triples
    agg = SumAggregator()
    rng = np.random.default_rng(5)
    for _ in range(1000):
        s_a = random_statistics(rng)
        s_b = random_statistics(rng)
        delta = random_statistics(rng)
        left = agg.worker_reduce([agg.accumulate(s_a, delta), s_b])
        right = agg.accumulate(agg.worker_reduce([s_a, s_b]), delta)
        swapped = agg.worker_reduce([agg.accumulate(s_b, delta), s_a])
        for name in left.names:
            np.testing.assert_allclose(
                left.entries[name], right.entries[name], rtol=1e-10, atol=1e-12
            )
            np.testing.assert_allclose(
                swapped.entries[name], right.entries[name], rtol=1e-10, atol=1e-12
            )
        assert abs(left.weight - right.weight) <= 1e-10 * max(1.0, right.weight)


# ------------------------------------------------------------- scheduling


def weights_map(values):
    return {f"u{i:03d}": float(v) for i, v in enumerate(values)}


def test_schedule_balanced_hand_trace():
    assignment = schedule_users(weights_map([4, 3, 3, 2, 2, 2]), 2, base=0.0)
    assert sorted(assignment.loads) == [8.0, 8.0]
    scheduled = sorted(uid for q in assignment.queues for uid in q)
    assert scheduled == sorted(weights_map([4, 3, 3, 2, 2, 2]))


def test_schedule_base_hand_trace():
    # weights [10,1,1], base 1 -> effective [11,2,2]: big user alone
    assignment = schedule_users(weights_map([10, 1, 1]), 2, base=1.0)
    assert assignment.queues[0] == ("u000",)
    assert assignment.queues[1] == ("u001", "u002")
    assert assignment.loads == (11.0, 4.0)


def test_schedule_single_worker_takes_all():
    assignment = schedule_users(weights_map([5, 1, 3]), 1, base=2.0)
    assert assignment.queues == (("u000", "u002", "u001"),)
    assert assignment.loads == (15.0,)


def test_schedule_empty_cohort():
    assignment = schedule_users({}, 3)
    assert assignment.queues == ((), (), ())
    assert assignment.loads == (0.0, 0.0, 0.0)


def test_schedule_tie_breaks_are_deterministic():
    # equal weights: users assigned in id order, workers in index order
    assignment = schedule_users(weights_map([2, 2, 2, 2]), 2)
    assert assignment.queues == (("u000", "u002"), ("u001", "u003"))


def test_schedule_rejects_bad_inputs():
    with pytest.raises(ValueError):
        schedule_users(weights_map([1]), 0)
    with pytest.raises(ValueError):
        schedule_users({"u": 0.0}, 2)
    with pytest.raises(ValueError):
        schedule_users(weights_map([1]), 2, base=-1.0)


def test_base_weight_policies():
    assert compute_base_weight([1, 1, 10], "median") == 1.0
    assert compute_base_weight([2, 4], "median") == 2.0  # lower median
    assert compute_base_weight([5, 3], "zero") == 0.0
    assert compute_base_weight([], "fixed", fixed_value=3.5) == 3.5
    with pytest.raises(EmptyCohort):
        compute_base_weight([], "median")
    with pytest.raises(ValueError):
        compute_base_weight([1], "harmonic")


def test_max_straggler_time():
    assert max_straggler_time([7.0, 7.0]) == 0.0
    assert max_straggler_time([5.0, 8.0, 6.0]) == 3.0
    assert max_straggler_time([4.2]) == 0.0
    with pytest.raises(ValueError):
        max_straggler_time([])


def optimal_makespan(weights, num_workers):
    """Exact optimum by dynamic programming over reachable load splits."""
    total = int(sum(weights))
    if num_workers == 2:
        reachable = 1  # bitmask over subset sums
        for w in weights:
            reachable |= reachable << int(w)
        best = total
        for s in range(total + 1):
            if reachable >> s & 1:
                best = min(best, max(s, total - s))
        return best
    assert num_workers == 3
    grid = np.zeros((total + 1, total + 1), dtype=bool)
    grid[0, 0] = True
    for w in weights:
        w = int(w)
        shifted1 = np.zeros_like(grid)
        shifted1[w:, :] = grid[: total + 1 - w, :]
        shifted2 = np.zeros_like(grid)
        shifted2[:, w:] = grid[:, : total + 1 - w]
        grid = grid | shifted1 | shifted2  # third worker keeps (l1, l2)
    l1, l2 = np.nonzero(grid)
    l3 = total - l1 - l2
    valid = l3 >= 0
    return int(np.min(np.maximum(np.maximum(l1, l2), l3)[valid]))


def test_greedy_within_lpt_bound_of_optimal():
    # random multisets of up to 12 users with weights in 1..5
    rng = np.random.default_rng(20240811)
    for _ in range(200):
        size = int(rng.integers(1, 13))
        weights = rng.integers(1, 6, size=size).tolist()
        for m in (2, 3):
            assignment = schedule_users(weights_map(weights), m, base=0.0)
            greedy = max(assignment.loads)
            bound = (4.0 / 3.0 - 1.0 / (3.0 * m)) * optimal_makespan(weights, m)
            assert greedy <= bound + 1e-9, (weights, m, greedy, bound)


def test_greedy_matches_bruteforce_on_spec_example():
    assert optimal_makespan([4, 3, 3, 2, 2, 2], 2) == 8
    assert max(schedule_users(weights_map([4, 3, 3, 2, 2, 2]), 2).loads) == 8.0


def simulated_straggler(assignment, weights, overhead):
    durations = [
        sum(weights[uid] + overhead for uid in queue) for queue in assignment.queues
    ]
    return max_straggler_time(durations)


def test_straggler_ordering_over_lognormal_cohorts():
    # per-user duration = weight + constant overhead; median base models
    # the overhead, plain greedy ignores it, round-robin ignores weights
    rng = np.random.default_rng(99)
    totals = {"median": 0.0, "zero": 0.0, "round_robin": 0.0}
    for _ in range(100):
        raw = rng.lognormal(mean=3.0, sigma=1.0, size=40)
        weights = {f"u{i:03d}": float(max(1, round(w))) for i, w in enumerate(raw)}
        overhead = compute_base_weight(list(weights.values()), "median")
        greedy_median = schedule_users(weights, 10, base=overhead)
        greedy_zero = schedule_users(weights, 10, base=0.0)
        unsorted = round_robin_schedule(weights, 10)
        totals["median"] += simulated_straggler(greedy_median, weights, overhead)
        totals["zero"] += simulated_straggler(greedy_zero, weights, overhead)
        totals["round_robin"] += simulated_straggler(unsorted, weights, overhead)
    assert totals["median"] <= totals["zero"] <= totals["round_robin"]
    assert totals["median"] < totals["round_robin"] * 0.5


# ----------------------------------------------------------------- engine


def test_eval_only_context_yields_metrics_without_aggregate():
    dataset = make_dataset([3, 5, 2, 4])
    engine = SimulationEngine({Population.TRAIN: dataset})
    algorithm = StubAlgorithm(cohort_size=4, emit_stats=False)
    state = algorithm.initial_state()
    contexts = algorithm.get_next_central_contexts(state, 0)
    result = engine.run_iteration(algorithm, state, contexts)
    assert result.aggregates == (None,)
    assert result.metrics[("train", "count")].value == 1.0
    assert result.metrics[("train", "points")].numerator == 14.0


def test_aggregate_sums_cohort_statistics():
    dataset = make_dataset([3, 5, 2, 4])
    engine = SimulationEngine({Population.TRAIN: dataset})
    algorithm = StubAlgorithm(cohort_size=4)
    state = algorithm.initial_state()
    contexts = algorithm.get_next_central_contexts(state, 0)
    result = engine.run_iteration(algorithm, state, contexts)
    agg = result.aggregates[0]
    np.testing.assert_array_equal(agg.entries["x"], [14.0])
    assert agg.weight == 4.0


def test_worker_count_does_not_change_aggregate():
    dataset = make_dataset([3, 5, 2, 4, 7, 1, 6, 8])
    algorithm = StubAlgorithm(cohort_size=8)
    state = algorithm.initial_state()
    contexts = algorithm.get_next_central_contexts(state, 0)
    results = {}
    for m in (1, 2, 4):
        engine = SimulationEngine({Population.TRAIN: dataset}, num_workers=m)
        results[m] = engine.run_iteration(algorithm, state, contexts)
    for m in (2, 4):
        np.testing.assert_array_equal(
            results[m].aggregates[0].entries["x"],
            results[1].aggregates[0].entries["x"],
        )
        assert results[m].metrics == results[1].metrics
        assert sorted(results[m].user_updates) == sorted(results[1].user_updates)
        assert results[m].cohorts == results[1].cohorts


def test_user_failure_reported_with_provenance():
    dataset = make_dataset([3, 5, 2, 4])
    engine = SimulationEngine({Population.TRAIN: dataset})
    algorithm = StubAlgorithm(cohort_size=4, fail_for="u00002")
    state = algorithm.initial_state()
    contexts = algorithm.get_next_central_contexts(state, 0)
    with pytest.raises(EngineError, match=r"iteration 0.*'train'.*'u00002'"):
        engine.run_iteration(algorithm, state, contexts)


def test_missing_population_dataset_is_engine_error():
    dataset = make_dataset([3, 5], population=Population.VAL)
    engine = SimulationEngine({Population.VAL: dataset})
    algorithm = StubAlgorithm(cohort_size=2)
    state = algorithm.initial_state()
    contexts = algorithm.get_next_central_contexts(state, 0)
    with pytest.raises(EngineError, match="no dataset"):
        engine.run_iteration(algorithm, state, contexts)


class Recorder:
    """Identity postprocessor that logs which side ran it."""

    def __init__(self, name, log):
        self.name = name
        self.log = log

    def postprocess_one_user(self, stats, aux, context):
        self.log.append(("local", self.name))
        return stats

    def postprocess_server(self, stats, context):
        self.log.append(("server", self.name))
        return stats, {}


def test_postprocessors_run_declared_locally_reversed_on_server():
    log = []
    dataset = make_dataset([3, 5])
    engine = SimulationEngine(
        {Population.TRAIN: dataset},
        postprocessors=[Recorder("first", log), Recorder("second", log)],
    )
    algorithm = StubAlgorithm(cohort_size=2)
    state = algorithm.initial_state()
    contexts = algorithm.get_next_central_contexts(state, 0)
    engine.run_iteration(algorithm, state, contexts)
    assert log == [
        ("local", "first"),
        ("local", "second"),
        ("local", "first"),
        ("local", "second"),
        ("server", "second"),
        ("server", "first"),
    ]


def test_clipping_pipeline_strips_bookkeeping_and_reports_metrics():
    dataset = make_dataset([3, 5, 2, 4])
    clip = ClippingPostprocessor(bound=1.0)
    engine = SimulationEngine({Population.TRAIN: dataset}, postprocessors=[clip])
    algorithm = StubAlgorithm(cohort_size=4, entry_values=[3.0, 4.0])
    state = algorithm.initial_state()
    contexts = algorithm.get_next_central_contexts(state, 0)
    result = engine.run_iteration(algorithm, state, contexts)
    agg = result.aggregates[0]
    assert agg.names == ("x",)
    np.testing.assert_allclose(agg.entries["x"], [4 * 0.6, 4 * 0.8])
    assert result.metrics[("train", "clip_fraction")].value == 1.0
    assert result.metrics[("train", "update_norm")].value == 5.0
    assert result.metrics[("train", "clipping_bound")].value == 1.0


def test_noise_mechanism_is_deterministic_per_iteration():
    dataset = make_dataset([3, 5, 2, 4])
    algorithm = StubAlgorithm(cohort_size=4, entry_values=[3.0, 4.0])
    state = algorithm.initial_state()
    contexts = algorithm.get_next_central_contexts(state, 0)
    aggregates = []
    for _ in range(2):
        clip = ClippingPostprocessor(bound=1.0)
        noise = GaussianCentralMechanism(
            clipping=clip, sigma=0.7, r=0.5, noise_base_seed=11
        )
        engine = SimulationEngine(
            {Population.TRAIN: dataset}, postprocessors=[clip, noise]
        )
        result = engine.run_iteration(algorithm, state, contexts)
        assert ("train", "noise_std") in result.metrics
        assert ("train", "snr") in result.metrics
        aggregates.append(result.aggregates[0])
    np.testing.assert_array_equal(
        aggregates[0].entries["x"], aggregates[1].entries["x"]
    )


def test_empty_poisson_cohort_produces_no_aggregate():
    dataset = make_dataset([3, 5, 2])
    engine = SimulationEngine(
        {Population.TRAIN: dataset}, cohort_mode="poisson", poisson_rate=1e-12
    )
    algorithm = StubAlgorithm(cohort_size=3)
    state = algorithm.initial_state()
    contexts = algorithm.get_next_central_contexts(state, 0)
    result = engine.run_iteration(algorithm, state, contexts)
    assert result.aggregates == (None,)
    assert result.metrics == {}
    assert result.cohorts == (("train", ()),)


# ------------------------------------------------------------------- loop


def test_zero_iterations_returns_initial_state():
    dataset = make_dataset([3, 5])
    engine = SimulationEngine({Population.TRAIN: dataset})
    algorithm = StubAlgorithm(total_iterations=0, cohort_size=2)
    result = run_simulation(algorithm, engine)
    assert result.iterations_run == 0
    assert result.metrics_rows == []
    assert result.iteration_seconds == []
    np.testing.assert_array_equal(result.params["w"], np.zeros(2))


def test_early_stop_callback_runs_exactly_six_iterations():
    dataset = make_dataset([3, 5, 2, 4])
    engine = SimulationEngine({Population.TRAIN: dataset})
    algorithm = StubAlgorithm(total_iterations=1500, cohort_size=4)

    def stop_at_five(params, rows, t):
        return t == 5

    result = run_simulation(algorithm, engine, callbacks=[stop_at_five])
    assert result.iterations_run == 6
    assert len(result.iteration_seconds) == 6
    assert {row[0] for row in result.metrics_rows} == set(range(6))


def test_rows_are_sorted_and_runs_are_reproducible():
    dataset = make_dataset([3, 5, 2, 4])
    runs = []
    for _ in range(2):
        engine = SimulationEngine({Population.TRAIN: dataset}, num_workers=2)
        runs.append(run_simulation(StubAlgorithm(total_iterations=4, cohort_size=3), engine))
    assert runs[0].metrics_rows == runs[1].metrics_rows
    assert runs[0].cohort_digest == runs[1].cohort_digest
    per_iteration = {}
    for row in runs[0].metrics_rows:
        per_iteration.setdefault(row[0], []).append((row[1], row[2]))
    for names in per_iteration.values():
        assert names == sorted(names)


def test_cohort_digest_tracks_sampling():
    dataset = make_dataset([3, 5, 2, 4])
    engine = SimulationEngine({Population.TRAIN: dataset})
    a = run_simulation(StubAlgorithm(total_iterations=2, cohort_size=3, run_seed=1), engine)
    b = run_simulation(StubAlgorithm(total_iterations=2, cohort_size=3, run_seed=2), engine)
    assert a.cohort_digest != b.cohort_digest


def test_user_updates_reach_processing_in_deterministic_order():
    dataset = make_dataset([3, 5, 2, 4, 6, 1])
    engine = SimulationEngine({Population.TRAIN: dataset}, num_workers=3)
    algorithm = StubAlgorithm(total_iterations=2, cohort_size=6)
    first = run_simulation(algorithm, engine)
    second = run_simulation(StubAlgorithm(total_iterations=2, cohort_size=6), engine)
    assert first.state.extra["updates"] == second.state.extra["updates"]
    seen = {uid for updates in first.state.extra["updates"] for uid, _ in updates}
    assert seen == set(dataset.user_ids)
