"""Acceptance suite: one test per release criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines.  Every tolerance is pinned here; nothing is deferred to calibration.
"""

import csv
import hashlib
import time

import numpy as np
import pytest

from conftest import make_blobs
from tests_support import permutation_match

import loadclust as lc
from loadclust.clusterers import ClusteringResult, fcm, kmeans
from loadclust.compare import run_compare, time_frameworks, write_report
from loadclust.config import framework_specs, load_config
from loadclust.cvi import (
    calinski_harabasz,
    davies_bouldin,
    dunn_index,
    silhouette,
    xie_beni,
)
from loadclust.dimreduce import fa_fit, pca_fit, transform
from loadclust.tuning import elbow_k_for_ac, fpc, gap_statistic
from loadclust.validation import validate_framework


def announce(num: int, title: str, started: float, limit: float) -> None:
    elapsed = time.perf_counter() - started
    print(f"ACCEPTANCE {num:2d} PASS ({elapsed:6.2f}s < {limit:g}s limit): {title}", flush=True)
    assert elapsed < limit, f"criterion {num} exceeded its runtime limit"


def hard_result(X, labels):
    labels = np.asarray(labels)
    k = int(labels.max()) + 1
    centers = np.vstack([X[labels == c].mean(axis=0) for c in range(k)])
    return ClusteringResult(labels=labels, centers=centers, k=k, method="KMC", objective=0.0)


def test_criterion_1_cvi_oracle_equivalence():
    started = time.perf_counter()
    X = np.array([[0.0], [1.0], [9.0], [10.0]])
    labels = np.array([0, 0, 1, 1])
    assert calinski_harabasz(X, labels) == pytest.approx(162.0, abs=1e-9)
    assert davies_bouldin(X, labels) == pytest.approx(1.0 / 9.0, abs=1e-9)
    assert dunn_index(X, labels) == pytest.approx(8.0, abs=1e-9)
    assert xie_beni(X, hard_result(X, labels)) == pytest.approx(0.25 / 81.0, abs=1e-9)
    sil = silhouette(np.array([[0.0], [1.0], [5.0]]), [0, 0, 1])
    assert sil == pytest.approx(0.51667, abs=1e-5)
    announce(1, "CVI hand-oracle values on the line instances", started, 1.0)


def test_criterion_2_cvi_invariance_suite():
    started = time.perf_counter()

    def scores(X, labels):
        return np.array(
            [
                silhouette(X, labels),
                calinski_harabasz(X, labels),
                dunn_index(X, labels),
                davies_bouldin(X, labels),
                xie_beni(X, hard_result(X, labels)),
            ]
        )

    rng_global = np.random.default_rng(12345)
    for seed in range(100):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(10, 24))
        d = int(rng.integers(2, 5))
        k = int(rng.integers(2, 5))
        labels = np.concatenate([np.arange(k), rng.integers(0, k, size=n - k)])
        X = rng.normal(size=(n, d)) + labels[:, None] * 2.5
        base = scores(X, labels)

        perm = rng_global.permutation(k)
        np.testing.assert_allclose(base, scores(X, perm[labels]), rtol=1e-9)
        for c in (0.1, 3.0, 1000.0):
            np.testing.assert_allclose(base, scores(c * X, labels), rtol=1e-9)
        Q, _ = np.linalg.qr(rng_global.normal(size=(d, d)))
        np.testing.assert_allclose(base, scores(X @ Q, labels), rtol=1e-9)
    announce(2, "label/scale/rotation invariance over 100 seeded instances", started, 10.0)


def test_criterion_3_identical_partition_identical_original_rows(tmp_path):
    started = time.perf_counter()
    config = load_config(
        overrides={
            "data.synthetic.n_households": 16,
            "data.synthetic.n_days": 8,
            "data.synthetic.noise_sigma": 0,
            "frameworks": "[pca+ac, fa+ac]",
            "clustering.k": 4,
            "validation.p": "[2]",
            "validation.trials": 5,
        }
    )
    raw = lc.generate_synthetic(16, 8, 4, 0.0, seed=0)
    pm = lc.preprocess(raw)
    report = run_compare(
        raw, pm, framework_specs(config), seed=0, p_values=[2], trials=5,
        k_max=5, n_refs=4, workers=1, config_echo=config,
    )
    write_report(report, str(tmp_path))
    with open(tmp_path / "cvi_original.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[1][0] == "PCA & AC" and rows[2][0] == "FA & AC"
    assert rows[1][1:] == rows[2][1:], "original-space CVI rows must match exactly"
    announce(3, "same partition gives byte-equal original-space CVI rows", started, 30.0)


def test_criterion_4_validation_arithmetic():
    started = time.perf_counter()
    raw = lc.generate_synthetic(27, 8, 4, 0.25, seed=3)
    pm = lc.preprocess(raw)
    reducer = pca_fit(pm, d_out=4)
    result = kmeans(transform(reducer, pm.data), 4, seed=0)
    for p, expected_cases in [(2, 54), (3, 81)]:
        rep = validate_framework(raw, reducer, result, p=p, trials=20, seed=7)
        assert rep.n_total_cases == expected_cases
        assert rep.avg_matches + rep.avg_mismatches == expected_cases
        assert rep.pct_matches + rep.pct_mismatches == pytest.approx(100.0, abs=1e-9)
    announce(4, "partition-count arithmetic (54 and 81 total cases at n=27)", started, 30.0)


def test_criterion_5_noise_free_recovery():
    started = time.perf_counter()
    raw = lc.generate_synthetic(16, 8, 4, 0.0, seed=11)
    pm = lc.preprocess(raw)
    truth = np.array([raw.ground_truth[h] for h in pm.household_ids])
    config = load_config(
        overrides={
            "frameworks": "default",
            "clustering.k": 4,
            "clustering.m": 2.0,
        }
    )
    report = run_compare(
        raw, pm, framework_specs(config), seed=0, p_values=[2, 3], trials=20,
        k_max=5, n_refs=4, workers=1, config_echo=config,
    )
    assert len(report.rows) == 8
    for row in report.rows:
        labels = lc.hardened_labels(row.framework.result)
        assert permutation_match(labels, truth), f"{row.framework.name} missed ground truth"
        for p, rep in row.validations.items():
            assert rep.pct_matches == 100.0, (row.framework.name, p, rep.pct_matches)
    announce(5, "all 8 frameworks: ground truth + 100% matches on noise-free data", started, 30.0)


def test_criterion_6_partition_count_monotonicity():
    started = time.perf_counter()
    pcts = {2: [], 3: []}
    for seed in range(20):
        raw = lc.generate_synthetic(27, 5, 4, 0.3, seed=seed)
        pm = lc.preprocess(raw)
        reducer = pca_fit(pm, d_out=4)
        result = kmeans(transform(reducer, pm.data), 4, seed=seed)
        for p in (2, 3):
            rep = validate_framework(raw, reducer, result, p=p, trials=100, seed=seed)
            pcts[p].append(rep.pct_matches)
    mean2, mean3 = np.mean(pcts[2]), np.mean(pcts[3])
    assert mean3 <= mean2 + 2.0, f"p=3 mean {mean3:.2f} vs p=2 mean {mean2:.2f}"
    print(f"  (mean matches: p=2 {mean2:.2f}%, p=3 {mean3:.2f}%)")
    announce(6, "more partitions cannot beat fewer by over 2 points", started, 180.0)


def test_criterion_7_compare_determinism(tmp_path):
    started = time.perf_counter()
    config = load_config(
        overrides={
            "data.synthetic.n_households": 12,
            "data.synthetic.n_days": 8,
            "data.synthetic.noise_sigma": 0.25,
            "validation.trials": 10,
            "validation.p": "[2]",
            "tuning.n_refs": 5,
            "tuning.k_max": 5,
        }
    )
    raw = lc.generate_synthetic(12, 8, 4, 0.25, seed=21)
    pm = lc.preprocess(raw)
    specs = framework_specs(config)
    digests = []
    for i, workers in enumerate((1, 1, 8)):
        report = run_compare(
            raw, pm, specs, seed=21, p_values=[2], trials=10, k_max=5,
            n_refs=5, workers=workers, config_echo=config,
        )
        out = tmp_path / f"run{i}"
        write_report(report, str(out))
        digests.append(hashlib.sha256((out / "report.json").read_bytes()).hexdigest())
    assert digests[0] == digests[1], "same-seed reruns must be byte-identical"
    assert digests[0] == digests[2], "1 vs 8 workers must be byte-identical"
    announce(7, "compare is byte-identical across reruns and worker counts", started, 120.0)


def test_criterion_8_tuning_recovery():
    started = time.perf_counter()

    def kmc_handle(data, k, s):
        return kmeans(data, k, restarts=10, seed=s)

    gap_hits = 0
    for seed in range(50):
        X, _ = make_blobs([(0, 0), (10, 0), (5, 9)], per=15, spread=0.4, seed=seed)
        res = gap_statistic(X, kmc_handle, k_max=10, n_refs=20, seed=seed)
        gap_hits += res.best_value == 3

    elbow_hits = 0
    for seed in range(50):
        X, _ = make_blobs([(0, 0), (10, 0), (0, 10), (10, 10)], per=12, spread=0.5, seed=seed)
        elbow_hits += elbow_k_for_ac(X, k_max=10).best_value == 4

    X, _ = make_blobs([(0, 0), (8, 0), (4, 7)], per=15, spread=0.5, seed=0)
    for k in range(2, 8):
        value = fpc(fcm(X, k, 2.0, seed=k).memberships)
        assert 1.0 / k - 1e-9 <= value <= 1.0 + 1e-9

    assert gap_hits >= 45, f"gap found k=3 in only {gap_hits}/50 seeds"
    assert elbow_hits >= 45, f"elbow found k=4 in only {elbow_hits}/50 seeds"
    print(f"  (gap 3-blob hits: {gap_hits}/50, elbow 4-blob hits: {elbow_hits}/50)")
    announce(8, "gap and elbow recover blob counts; FPC within bounds", started, 120.0)


def test_criterion_9_numerical_structure():
    started = time.perf_counter()
    raw = lc.generate_synthetic(20, 10, 4, 0.35, seed=17)
    pm = lc.preprocess(raw)

    full = pca_fit(pm, d_out=pm.d)
    assert full.pca_state.cevr[-1] == pytest.approx(1.0, abs=1e-9)
    Z = transform(full, pm.data)
    dist = lambda M: np.linalg.norm(M[:, None, :] - M[None, :, :], axis=-1)
    np.testing.assert_allclose(dist(Z), dist(pm.data), atol=1e-6)

    fa = fa_fit(pm, d_out=1)
    fa_costs = [m.cost for m in fa.fa_state.merge_trace]
    assert all(b >= a for a, b in zip(fa_costs, fa_costs[1:]))

    ac = lc.agglomerative(pm.data, k=4)
    ac_costs = ac.extra["merge_costs"]
    assert all(b >= a for a, b in zip(ac_costs, ac_costs[1:]))

    fuzzy = fcm(pm.data, 4, 1.8, seed=1)
    np.testing.assert_allclose(fuzzy.memberships.sum(axis=1), 1.0, atol=1e-9)

    km = kmeans(pm.data, 4, seed=2)
    d2 = ((pm.data[:, None, :] - km.centers[None, :, :]) ** 2).sum(-1)
    own = d2[np.arange(len(pm.data)), km.labels]
    assert (own <= d2.min(axis=1) + 1e-9).all()
    announce(9, "CEVR, distance preservation, monotone traces, sums, Lloyd fixpoint", started, 30.0)


def test_criterion_10_timing_trend(tmp_path):
    started = time.perf_counter()
    raw = lc.generate_synthetic(500, 4, 4, 0.3, seed=2)
    pm = lc.preprocess(raw)

    table = time_frameworks(pm, trials=2, k=5, seed=0, pca_target="auto", fa_target="auto")
    assert len(table) == 3 and all(len(row) == 4 for row in table)
    assert sum(len(row) for row in table) == 12

    reduced = transform(pca_fit(pm, cevr_threshold=0.95), pm.data)
    kmeans(pm.data, 5, seed=0)
    kmeans(reduced, 5, seed=0)
    wins = 0
    for rep in range(10):
        t0 = time.perf_counter()
        kmeans(pm.data, 5, seed=rep)
        full_time = time.perf_counter() - t0
        t0 = time.perf_counter()
        kmeans(reduced, 5, seed=rep)
        red_time = time.perf_counter() - t0
        wins += red_time <= full_time
    # Soft check per the release note: logged, not asserted.
    state = "confirms" if wins >= 8 else "does not confirm"
    print(f"  (reduced kmeans faster in {wins}/10 repetitions; {state} the trend)")
    announce(10, "3x4 timing table emitted; reduction speed trend logged", started, 60.0)
