"""Acceptance suite: one test per release criterion.

Each test prints a PASS line once its assertions (including the stated
tolerances and time budgets) hold; run with ``pytest -v -s`` to see the
per-criterion lines.
"""

import random
import time

import pytest

from bloomstream.bench import (
    SyntheticStreamConfig,
    evaluate_over_horizons,
    generate_stream,
    purity,
)
from bloomstream.bloom import BloomSignature, contains, make_fragment
from bloomstream.clustermodel import (
    DYNAMIC,
    EXPIRED,
    STABLE,
    ClusterRegistry,
    GridCluster,
    cluster_state,
)
from bloomstream.countmin import DecayedCountMin
from bloomstream.engine import OUTLIER, BloomStreamModel
from bloomstream.hashcore import HashFamily, cell_signature
from bloomstream.params import (
    derive_cm_guarantees,
    derive_geometry,
    fragment_capacity,
    make_params,
)


def _pass(n: int, summary: str) -> None:
    print(f"PASS criterion {n}: {summary}")


def test_criterion_1_parameter_reproduction():
    started = time.perf_counter()
    assert derive_geometry(6935, 0.0078) == (7, 10009, 70063)
    assert fragment_capacity(0.001, 3, 5) == 1826
    assert fragment_capacity(0.001, 3, 160) == 53286
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0
    _pass(1, f"geometry (7, 10009, 70063) and capacities 1826/53286 in {elapsed:.3f}s")


def test_criterion_2_empirical_false_positive_rate():
    started = time.perf_counter()
    k, p, m = derive_geometry(6935, 0.0078)
    family = HashFamily.from_seed(2024, hash_count=k, partition_size=p)
    rng = random.Random(2024)

    def draw_cells(count, taken):
        cells = set()
        while len(cells) < count:
            cell = (rng.randint(-10**7, 10**7), rng.randint(-10**7, 10**7))
            if cell not in taken:
                cells.add(cell)
        return cells

    inserted = draw_cells(6935, frozenset())
    signatures = [cell_signature(c, family) for c in inserted]
    cluster = BloomSignature.from_cells(signatures, k, p)

    # no false negatives, ever
    for sig in signatures:
        assert contains(sig, cluster)

    probes = draw_cells(10**5, inserted)
    false_positives = sum(
        1 for c in probes if contains(cell_signature(c, family), cluster)
    )
    rate = false_positives / len(probes)
    elapsed = time.perf_counter() - started
    assert 0.005 <= rate <= 0.011
    assert elapsed < 5.0
    _pass(2, f"measured fp {rate:.4f} in [0.005, 0.011], 0 false negatives, {elapsed:.2f}s")


def test_criterion_3_count_min_one_sided_error():
    started = time.perf_counter()
    capacity, target_fp = 500, 0.01
    k, p, _ = derive_geometry(capacity, target_fp)
    error_margin, failure_prob = derive_cm_guarantees(capacity, target_fp)
    lam = 0.001
    total_queries = 0
    total_violations = 0
    for trial in range(20):
        family = HashFamily.from_seed(3000 + trial, hash_count=k, partition_size=p)
        sketch = DecayedCountMin(k, p, lam)
        rng = random.Random(777 + trial)
        cells = [
            (rng.randint(-10**6, 10**6), rng.randint(-10**6, 10**6))
            for _ in range(2000)
        ]
        signatures = [cell_signature(c, family) for c in cells]
        oracle = {}
        t = 0.0
        for _ in range(10**4):
            t += 1.0
            i = min(int(rng.paretovariate(1.2)) - 1, len(cells) - 1)
            sketch.update(signatures[i], t)
            value, last = oracle.get(i, (0.0, t))
            oracle[i] = (value * 2.0 ** (-lam * (t - last)) + 1.0, t)
        total_mass = sum(
            value * 2.0 ** (-lam * (t - last)) for value, last in oracle.values()
        )
        allowance = error_margin * total_mass
        for i, (value, last) in oracle.items():
            exact = value * 2.0 ** (-lam * (t - last))
            estimate = sketch.query(signatures[i], t)
            assert estimate >= exact - 1e-9 * max(1.0, exact)  # one-sided, always
            total_queries += 1
            if estimate - exact > allowance:
                total_violations += 1
    fraction = total_violations / total_queries
    elapsed = time.perf_counter() - started
    assert fraction <= failure_prob
    assert elapsed < 30.0
    _pass(
        3,
        f"one-sided over {total_queries} queries; overshoot fraction "
        f"{fraction:.2e} <= {failure_prob:.2e}, {elapsed:.1f}s",
    )


def test_criterion_4_decay_half_life():
    k, p = 5, 509
    family = HashFamily.from_seed(4, hash_count=k, partition_size=p)
    lam = 0.001
    sketch = DecayedCountMin(k, p, lam)
    sig = cell_signature((3, 3), family)
    sketch.update(sig, 0.0)
    density = sketch.update(sig, 1000.0)
    assert density == pytest.approx(1.5, rel=1e-9)

    sketch2 = DecayedCountMin(k, p, lam)
    t1, t2, t3 = 7.0, 311.0, 1900.0
    for t in (t1, t2, t3):
        final = sketch2.update(sig, t)
    regrouped = 2.0 ** (-lam * (t3 - t1)) + 2.0 ** (-lam * (t3 - t2)) + 1.0
    assert final == pytest.approx(regrouped, rel=1e-9)
    _pass(4, "half-life density 1.5 and regrouped three-update decay at 1e-9")


def test_criterion_5_synthetic_purity():
    started = time.perf_counter()
    params = make_params(
        6935, 0.0078, decay_rate=0.001, density_threshold=3.0, dim=5, resolution=1.5
    )
    worst = 1.0
    windows_checked = 0
    for seed in range(5):
        model = BloomStreamModel(params, seed=1)
        cfg = SyntheticStreamConfig(
            dim=5,
            clusters=5,
            noise_fraction=0.1,
            min_center_separation=4.0,
            cluster_sd=1.0,
            window_length=2000,
            total_instances=6000,
            seed=seed,
        )
        metrics = evaluate_over_horizons(model, generate_stream(cfg), horizon=2000)
        assert len(metrics) == 3
        for record in metrics:
            assert record.purity is not None
            assert record.purity >= 0.9
            worst = min(worst, record.purity)
            windows_checked += 1
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    _pass(
        5,
        f"{windows_checked} windows across 5 seeds, min purity {worst:.3f} >= 0.9, "
        f"{elapsed:.1f}s",
    )


def _model_with_clusters(dim: int, clusters: int) -> BloomStreamModel:
    params = make_params(
        6935, 0.0078, decay_rate=0.001, density_threshold=1.5, dim=dim, resolution=1.0
    )
    model = BloomStreamModel(params, seed=0)
    for i in range(clusters):
        point = tuple(float(i * 10) + 0.5 if axis == 0 else 0.5 for axis in range(dim))
        model.ingest(point)
        outcome = model.ingest(point)
        assert outcome.dense
    return model


def test_criterion_6_constant_evaluation_cost():
    k = 7  # geometry of criterion 1
    classify_costs = set()
    ingest_costs = set()
    for dim, clusters in ((5, 5), (5, 160), (160, 5)):
        model = _model_with_clusters(dim, clusters)
        assert model.snapshot_stats().live_dynamic == clusters

        before = model.counters()
        model.classify(tuple(0.5 for _ in range(dim)))
        after = model.counters()
        fetch_delta = after.index_row_fetches - before.index_row_fetches
        and_delta = after.index_row_ands - before.index_row_ands
        assert (fetch_delta, and_delta) == (k, k - 1)
        classify_costs.add((fetch_delta, and_delta))

        before = model.counters()
        outcome = model.ingest(tuple(99999.5 for _ in range(dim)))  # fresh, not dense
        assert outcome.accepted and not outcome.dense
        after = model.counters()
        base_delta = after.base_hash_evals - before.base_hash_evals
        derived_delta = after.derived_hash_evals - before.derived_hash_evals
        assert (base_delta, derived_delta) == (2, k)
        assert after.fragment_hash_evals == before.fragment_hash_evals
        ingest_costs.add((base_delta, derived_delta))

    assert classify_costs == {(k, k - 1)}
    assert ingest_costs == {(2, k)}
    _pass(
        6,
        f"classify = {k} row fetches + {k - 1} ANDs and ingest = 2 base + {k} derived "
        "hashes, identical for 5/160 clusters and 5/160 dims",
    )


def test_criterion_7_flat_index_oracle_equivalence():
    started = time.perf_counter()
    states_checked = 0
    for dim, k, p in ((1, 6, 277), (2, 6, 277), (3, 5, 211), (5, 5, 211), (8, 4, 131)):
        family = HashFamily.from_seed(70 + dim, hash_count=k, partition_size=p)
        registry = ClusterRegistry(k, p, decay_rate=0.01)  # lifetime 100
        rng = random.Random(700 + dim)
        t = 0.0
        for _ in range(200):
            t += 1.0
            cell = tuple(rng.randint(-6, 6) for _ in range(dim))
            fragment = make_fragment(cell, family)

            via_index = registry.matching_clusters(fragment)
            brute = [
                cid
                for cid, cluster in registry.clusters.items()
                if any(
                    contains(sig, cluster.signature)
                    for sig in fragment.cell_signatures
                )
            ]
            assert set(via_index) == set(brute)
            states_checked += 1

            action = rng.random()
            if action < 0.7 or not registry.clusters:
                registry.clustering_update(fragment, via_index, t)
            else:
                registry.remove_cluster(rng.choice(sorted(registry.clusters)))
            while len(registry) > 50:
                registry.remove_cluster(min(registry.clusters))

            if states_checked % 50 == 0:
                rebuilt = registry.rebuild_index()
                assert registry.index.rows_equal(rebuilt)
                assert registry.index.occupied_slots() == rebuilt.occupied_slots()
    elapsed = time.perf_counter() - started
    assert states_checked == 1000
    _pass(
        7,
        f"{states_checked} randomized states match the brute-force oracle; "
        f"incremental index equals rebuilds bit-for-bit, {elapsed:.1f}s",
    )


def test_criterion_8_lifecycle_and_label_continuity():
    # exact lifecycle boundaries at half the threshold and the threshold
    threshold = 100.0
    cluster = GridCluster(0, BloomSignature.empty(2, 3), 0.0, 0)
    assert cluster_state(cluster, 49.999999, threshold) == DYNAMIC
    assert cluster_state(cluster, 50.0, threshold) == STABLE
    assert cluster_state(cluster, 99.999999, threshold) == STABLE
    assert cluster_state(cluster, 100.0, threshold) == EXPIRED

    # constant super-threshold drive of one cell for twice the lifetime
    params = make_params(
        500, 0.01, decay_rate=0.01, density_threshold=3.0, dim=1, resolution=1.0
    )
    model = BloomStreamModel(params, seed=8)
    labels = set()
    for _ in range(200):  # 2 * time_threshold instances at one per tick
        model.ingest((0.5,))
        label = model.classify((0.5,))
        if label != OUTLIER:
            labels.add(label)
    assert len(labels) == 1
    assert model.snapshot_stats().dense_events > 150
    _pass(8, "states flip exactly at 50/100; one label across the whole drive")


def test_criterion_9_purity_unit_tests():
    assert purity([(0, "a")] * 3 + [(1, "b")] * 4) == 1.0
    table = [(1, "A")] * 8 + [(1, "B")] * 2 + [(2, "B")] * 5
    assert purity(table) == pytest.approx(0.9)

    rng = random.Random(9)
    assignments = [(rng.randrange(8), rng.choice("abcde")) for _ in range(500)]
    base = purity(assignments)
    labels = list(range(8))
    for _ in range(100):
        shuffled = labels[:]
        rng.shuffle(shuffled)
        mapping = dict(zip(labels, shuffled))
        assert purity([(mapping[p], t) for p, t in assignments]) == pytest.approx(base)
    _pass(9, "perfect table 1.0, hand table 0.9, relabeling invariance x100")
