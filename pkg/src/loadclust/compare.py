"""Framework assembly: fitting, tuning, comparison reports, and the timing harness.

A framework is a reducer (none / PCA / feature agglomeration) plus a
clustering algorithm with resolved hyperparameters.  The default comparison
covers the eight PCA/FA x KMC/SC/AC/FCM combinations, reporting validity
indices in both feature spaces and partition-stability validation per p.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import cvi
from .clusterers import (
    ClusteringResult,
    agglomerative,
    default_knn,
    fcm,
    kmeans,
    spectral,
)
from .dimreduce import (
    Curve,
    FittedReducer,
    detect_elbow,
    fa_fit,
    identity_reducer,
    pca_fit,
    transform,
)
from .errors import ConfigError
from .profiles import ProfileMatrix, RawDataset
from .seeding import child_seed_for
from .tuning import TuningResult, elbow_k_for_ac, estimate_fuzzifier, fpc_sweep, gap_statistic
from .validation import ValidationReport, validate_framework

REDUCER_LABELS = {"none": "None", "pca": "PCA", "fa": "FA"}
CLUSTERER_LABELS = {"kmc": "KMC", "sc": "SC", "ac": "AC", "fcm": "FCM"}

# Default comparison set, in the canonical report row order.
DEFAULT_FRAMEWORKS = [
    ("pca", "kmc"),
    ("fa", "kmc"),
    ("pca", "sc"),
    ("fa", "sc"),
    ("pca", "ac"),
    ("fa", "ac"),
    ("pca", "fcm"),
    ("fa", "fcm"),
]

CVI_HEADER = ["Methods", "SH", "CH", "DI", "DB", "XB"]
VALIDATION_HEADER = [
    "Methods",
    "#Clusters",
    "#Total Cases",
    "#Avg. Matches",
    "#Avg. Mismatches",
    "%Matches",
    "%Mismatches",
]
TIMING_HEADER = ["Dimensionality Reduction", "KMC", "SC", "AC", "FCM"]
TIMING_ROWS = [("none", "No Reduction"), ("pca", "PCA"), ("fa", "FA")]


@dataclass
class FrameworkSpec:
    """One reducer + clusterer combination with its hyperparameter settings.

    ``reducer_target`` is "auto" (elbow selection), a float (CEVR threshold
    for PCA, merge-cost threshold for FA), or an int (output dimensions).
    ``k`` and ``m`` are "auto" or explicit values.
    """

    reducer: str
    clusterer: str
    reducer_target: float | int | str = "auto"
    k: int | str = "auto"
    m: float | str = "auto"
    knn: int | None = None
    restarts: int = 10

    def __post_init__(self) -> None:
        if self.reducer not in REDUCER_LABELS:
            raise ConfigError(f"unknown reducer {self.reducer!r}")
        if self.clusterer not in CLUSTERER_LABELS:
            raise ConfigError(f"unknown clusterer {self.clusterer!r}")

    @property
    def name(self) -> str:
        return f"{REDUCER_LABELS[self.reducer]} & {CLUSTERER_LABELS[self.clusterer]}"

    @property
    def slug(self) -> str:
        return f"{self.reducer}_{self.clusterer}"


@dataclass
class FittedFramework:
    spec: FrameworkSpec
    reducer: FittedReducer
    reduced: np.ndarray
    result: ClusteringResult
    tuning: dict[str, TuningResult] = field(default_factory=dict)
    resolved: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.spec.name


def _fit_reducer(
    profiles: ProfileMatrix, spec: FrameworkSpec
) -> tuple[FittedReducer, dict[str, TuningResult], dict]:
    tuning: dict[str, TuningResult] = {}
    resolved: dict = {}
    target = spec.reducer_target
    if spec.reducer == "none":
        return identity_reducer(profiles.d), tuning, {"d_out": profiles.d}

    if spec.reducer == "pca":
        if target == "auto":
            full = pca_fit(profiles, d_out=profiles.d)
            curve = Curve(np.arange(1, profiles.d + 1, dtype=float), full.pca_state.cevr)
            elbow = detect_elbow(curve)
            d_out = int(curve.xs[elbow.index])
            tuning["pca_elbow"] = TuningResult(
                "pca_elbow", d_out, curve, {"weak_elbow": elbow.weak_elbow}
            )
            resolved["weak_elbow"] = elbow.weak_elbow
            reducer = pca_fit(profiles, d_out=d_out)
        elif isinstance(target, int):
            reducer = pca_fit(profiles, d_out=target)
        else:
            reducer = pca_fit(profiles, cevr_threshold=float(target))
        resolved["d_out"] = reducer.d_out
        return reducer, tuning, resolved

    # feature agglomeration
    if target == "auto":
        full = fa_fit(profiles, d_out=1)
        trace = full.fa_state.merge_trace
        d_in = profiles.d
        ks = np.arange(1, d_in, dtype=float)
        costs = np.array([trace[d_in - int(k) - 1].cost for k in ks])
        curve = Curve(ks, costs)
        elbow = detect_elbow(curve)
        d_out = int(curve.xs[elbow.index])
        tuning["fa_elbow"] = TuningResult(
            "fa_elbow", d_out, curve, {"weak_elbow": elbow.weak_elbow}
        )
        resolved["weak_elbow"] = elbow.weak_elbow
        reducer = fa_fit(profiles, d_out=d_out)
    elif isinstance(target, int):
        reducer = fa_fit(profiles, d_out=target)
    else:
        reducer = fa_fit(profiles, threshold=float(target))
    resolved["d_out"] = reducer.d_out
    return reducer, tuning, resolved


def fit_framework(
    profiles: ProfileMatrix,
    spec: FrameworkSpec,
    seed: int,
    k_max: int = 10,
    n_refs: int = 20,
) -> FittedFramework:
    """Fit one framework end to end, auto-tuning any "auto" hyperparameters.

    All randomness derives from substreams keyed by the framework name, so
    fits are reproducible and independent of the order or concurrency in
    which frameworks run.
    """
    reducer, tuning, resolved = _fit_reducer(profiles, spec)
    Z = transform(reducer, profiles.data)
    n = Z.shape[0]
    seed_tune = child_seed_for(seed, f"{spec.slug}/tune")
    seed_fit = child_seed_for(seed, f"{spec.slug}/fit")
    k_cap = min(k_max, n)

    if spec.clusterer == "kmc":
        def handle(data, k, s):
            return kmeans(data, k, restarts=spec.restarts, seed=s)

        if spec.k == "auto":
            gap = gap_statistic(Z, handle, k_max=k_cap, n_refs=n_refs, seed=seed_tune)
            tuning["gap"] = gap
            k = max(2, int(gap.best_value))  # clustering needs two clusters
        else:
            k = int(spec.k)
        result = kmeans(Z, k, restarts=spec.restarts, seed=seed_fit)
        resolved.update({"k": k})

    elif spec.clusterer == "sc":
        knn = spec.knn if spec.knn is not None else default_knn(n)

        def handle(data, k, s):
            return spectral(data, k, knn=knn, seed=s, restarts=spec.restarts)

        if spec.k == "auto":
            gap = gap_statistic(Z, handle, k_max=k_cap, n_refs=n_refs, seed=seed_tune)
            tuning["gap"] = gap
            k = max(2, int(gap.best_value))
        else:
            k = int(spec.k)
        result = spectral(Z, k, knn=knn, seed=seed_fit, restarts=spec.restarts)
        resolved.update({"k": k, "knn": knn})

    elif spec.clusterer == "ac":
        if spec.k == "auto":
            elbow = elbow_k_for_ac(Z, k_max=k_cap)
            tuning["ac_elbow"] = elbow
            k = int(elbow.best_value)
        else:
            k = int(spec.k)
        result = agglomerative(Z, k=k)
        resolved.update({"k": k})

    elif spec.clusterer == "fcm":
        if spec.m == "auto":
            fuzz = estimate_fuzzifier(Z)
            tuning["fuzzifier"] = fuzz
            m = float(fuzz.best_value)
        else:
            m = float(spec.m)
        if spec.k == "auto":
            sweep = fpc_sweep(Z, m, range(2, k_cap + 1), seed=seed_tune)
            tuning["fpc"] = sweep
            k = int(sweep.best_value)
        else:
            k = int(spec.k)
        result = fcm(Z, k, m, seed=seed_fit)
        resolved.update({"k": k, "m": m})

    else:  # pragma: no cover - guarded by FrameworkSpec
        raise ConfigError(f"unknown clusterer {spec.clusterer!r}")

    resolved.update({"seed_tune": seed_tune, "seed_fit": seed_fit, "restarts": spec.restarts})
    return FittedFramework(spec, reducer, Z, result, tuning, resolved)


# ---------------------------------------------------------------------------
# Comparison report


@dataclass
class CompareRow:
    framework: FittedFramework
    cvi_reduced: cvi.CviScores
    cvi_original: cvi.CviScores
    validations: dict[int, ValidationReport]


@dataclass
class CompareReport:
    rows: list[CompareRow]
    config_echo: dict
    timing: list[list[float]] | None = None

    def to_json(self) -> dict:
        doc = {
            "config_echo": self.config_echo,
            "frameworks": [
                {
                    "name": row.framework.name,
                    "resolved": row.framework.resolved,
                    "reducer": row.framework.reducer.to_json(),
                    "clustering": row.framework.result.to_json(),
                    "tuning": {k: t.to_json() for k, t in row.framework.tuning.items()},
                    "cvi_reduced": row.cvi_reduced.to_json(),
                    "cvi_original": row.cvi_original.to_json(),
                    "validation": {
                        str(p): rep.to_json() for p, rep in row.validations.items()
                    },
                }
                for row in self.rows
            ],
        }
        if self.timing is not None:
            doc["timing_ms"] = self.timing
        return doc


def run_compare(
    raw: RawDataset,
    profiles: ProfileMatrix,
    specs: list[FrameworkSpec],
    seed: int,
    p_values: list[int],
    trials: int = 100,
    k_max: int = 10,
    n_refs: int = 20,
    workers: int = 1,
    config_echo: dict | None = None,
) -> CompareReport:
    """Fit every framework and assemble the full comparison report.

    Framework fits are pure given the shared seed, so they may run in any
    number of worker threads without changing a single byte of the report.
    """

    def fit_one(spec: FrameworkSpec) -> FittedFramework:
        return fit_framework(profiles, spec, seed, k_max=k_max, n_refs=n_refs)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            fitted = list(pool.map(fit_one, specs))
    else:
        fitted = [fit_one(spec) for spec in specs]

    rows = []
    for fw in fitted:
        validations = {}
        for p in p_values:
            seed_val = child_seed_for(seed, f"{fw.spec.slug}/validate/p={p}")
            validations[p] = validate_framework(
                raw, fw.reducer, fw.result, p=p, trials=trials, seed=seed_val
            )
        rows.append(
            CompareRow(
                framework=fw,
                cvi_reduced=cvi.all_indices(fw.reduced, fw.result, cvi.SPACE_REDUCED),
                cvi_original=cvi.all_indices(profiles.data, fw.result, cvi.SPACE_ORIGINAL),
                validations=validations,
            )
        )

    echo = dict(config_echo or {})
    echo["resolved_frameworks"] = {row.framework.name: row.framework.resolved for row in rows}
    echo["seed"] = seed
    return CompareReport(rows=rows, config_echo=echo)


# ---------------------------------------------------------------------------
# Output files


def _fmt(value: float) -> str:
    """Shortest exact decimal form; parsing it back reproduces the float."""
    return repr(float(value))


def _atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _csv_text(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def cvi_csv_rows(report: CompareReport, space: str) -> list[list[str]]:
    rows = []
    for row in report.rows:
        scores = row.cvi_reduced if space == cvi.SPACE_REDUCED else row.cvi_original
        rows.append([row.framework.name] + [_fmt(v) for v in scores.values()])
    return rows


def validation_csv_rows(report: CompareReport, p: int) -> list[list[str]]:
    rows = []
    for row in report.rows:
        rep = row.validations[p]
        rows.append(
            [
                row.framework.name,
                str(row.framework.result.k),
                str(rep.n_total_cases),
                _fmt(rep.avg_matches),
                _fmt(rep.avg_mismatches),
                _fmt(rep.pct_matches),
                _fmt(rep.pct_mismatches),
            ]
        )
    return rows


def write_report(report: CompareReport, out_dir: str, plots: bool = False) -> None:
    """Emit the CSV tables, curve series, and report.json under ``out_dir``.

    Files are written atomically (temp + rename).  report.json is serialized
    with sorted keys and exact float reprs so identical runs are
    byte-identical.
    """
    os.makedirs(out_dir, exist_ok=True)
    curves_dir = os.path.join(out_dir, "curves")
    os.makedirs(curves_dir, exist_ok=True)

    _atomic_write(
        os.path.join(out_dir, "cvi_reduced.csv"),
        _csv_text(CVI_HEADER, cvi_csv_rows(report, cvi.SPACE_REDUCED)),
    )
    _atomic_write(
        os.path.join(out_dir, "cvi_original.csv"),
        _csv_text(CVI_HEADER, cvi_csv_rows(report, cvi.SPACE_ORIGINAL)),
    )
    p_values = sorted({p for row in report.rows for p in row.validations})
    for p in p_values:
        _atomic_write(
            os.path.join(out_dir, f"validation_p{p}.csv"),
            _csv_text(VALIDATION_HEADER, validation_csv_rows(report, p)),
        )
    if report.timing is not None:
        _atomic_write(os.path.join(out_dir, "timing.csv"), timing_csv_text(report.timing))

    for row in report.rows:
        for stage, tun in row.framework.tuning.items():
            path = os.path.join(curves_dir, f"{row.framework.spec.slug}__{stage}.csv")
            pairs = [[_fmt(x), _fmt(y)] for x, y in zip(tun.curve.xs, tun.curve.ys)]
            _atomic_write(path, _csv_text(["x", "y"], pairs))
            if plots:
                _render_curve_svg(path[:-4] + ".svg", tun)

    _atomic_write(
        os.path.join(out_dir, "report.json"),
        json.dumps(report.to_json(), sort_keys=True, indent=2) + "\n",
    )


def _render_curve_svg(path: str, tun: TuningResult) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(tun.curve.xs, tun.curve.ys, marker="o")
    ax.axvline(float(tun.best_value), linestyle="--", linewidth=1)
    ax.set_title(tun.method)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


# ---------------------------------------------------------------------------
# Timing harness


def time_frameworks(
    profiles: ProfileMatrix,
    trials: int = 100,
    k: int = 5,
    seed: int = 0,
    pca_target: float | int | str = "auto",
    fa_target: float | int | str = "auto",
) -> list[list[float]]:
    """Mean wall time (ms) of the clustering step for each reducer/method pair.

    Rows follow ``TIMING_ROWS`` (no reduction, PCA, FA), columns KMC, SC, AC,
    FCM, all at the same cluster count.  Reduction happens once up front and
    is excluded from the timing; each cell does one warm-up call before the
    timed trials.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    n = profiles.data.shape[0]
    if n < k:
        raise ValueError(f"need at least {k} households, got {n}")

    spaces = {}
    for reducer_key, _ in TIMING_ROWS:
        spec = FrameworkSpec(
            reducer=reducer_key,
            clusterer="kmc",
            reducer_target={"pca": pca_target, "fa": fa_target}.get(reducer_key, "auto"),
        )
        reducer, _, _ = _fit_reducer(profiles, spec)
        spaces[reducer_key] = transform(reducer, profiles.data)

    seed_fit = child_seed_for(seed, "timing")
    knn = default_knn(n)
    calls = {
        "kmc": lambda Z: kmeans(Z, k, restarts=10, seed=seed_fit),
        "sc": lambda Z: spectral(Z, k, knn=knn, seed=seed_fit),
        "ac": lambda Z: agglomerative(Z, k=k),
        "fcm": lambda Z: fcm(Z, k, m=2.0, seed=seed_fit),
    }

    table = []
    for reducer_key, _ in TIMING_ROWS:
        Z = spaces[reducer_key]
        row = []
        for method in ("kmc", "sc", "ac", "fcm"):
            fn = calls[method]
            fn(Z)  # warm-up
            start = time.perf_counter()
            for _ in range(trials):
                fn(Z)
            elapsed = time.perf_counter() - start
            row.append(1000.0 * elapsed / trials)
        table.append(row)
    return table


def timing_csv_text(table: list[list[float]]) -> str:
    rows = [
        [label] + [_fmt(cell) for cell in table[i]]
        for i, (_, label) in enumerate(TIMING_ROWS)
    ]
    return _csv_text(TIMING_HEADER, rows)
