"""Smart-meter ingestion, synthetic data generation, and profile building.

The pipeline input is a set of hourly kWh readings per household.  Each
household is summarized by the per-hour median over its complete days of
data, and the median profile is then scaled to unit Euclidean norm so that
households cluster by consumption shape rather than magnitude.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import NamedTuple

import numpy as np

from .errors import CsvFormatError, DegenerateProfileError, DuplicateReadingError
from .seeding import substream

CSV_HEADER = ["household_id", "date", "hour", "kwh"]


class Reading(NamedTuple):
    household_id: str
    date: dt.date
    hour: int
    kwh: float


@dataclass
class RawDataset:
    """Hourly kWh readings at a resolution of ``resolution`` hours per slot.

    ``ground_truth`` maps household id to archetype index for synthetic data.
    """

    readings: list[Reading]
    resolution: int = 1
    ground_truth: dict[str, int] | None = None

    def __post_init__(self) -> None:
        r = self.resolution
        if r < 1 or 24 % r != 0:
            raise ValueError(f"resolution must be a divisor of 24, got {r}")
        seen: set[tuple[str, dt.date, int]] = set()
        for reading in self.readings:
            key = (reading.household_id, reading.date, reading.hour)
            if key in seen:
                raise DuplicateReadingError(
                    f"duplicate reading for ({reading.household_id!r}, "
                    f"{reading.date.isoformat()}, {reading.hour})"
                )
            seen.add(key)
            if not math.isfinite(reading.kwh) or reading.kwh < 0:
                raise ValueError(f"kwh must be finite and >= 0, got {reading.kwh!r} at {key}")
            if not 0 <= reading.hour < 24 or reading.hour % r != 0:
                raise ValueError(f"hour {reading.hour} invalid at resolution {r}")

    @property
    def d(self) -> int:
        """Number of time slots per day."""
        return 24 // self.resolution

    def household_ids(self) -> list[str]:
        return sorted({r.household_id for r in self.readings})


@dataclass
class DayMatrix:
    """Complete days of one household: a days x d kWh matrix plus the dates."""

    household_id: str
    rows: np.ndarray
    day_ids: list[dt.date] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.rows = np.asarray(self.rows, dtype=float)
        if self.rows.ndim != 2 or self.rows.shape[0] < 1:
            raise ValueError(f"{self.household_id}: need at least one complete day")
        if len(self.day_ids) != self.rows.shape[0]:
            raise ValueError(f"{self.household_id}: day_ids must match row count")


@dataclass
class ProfileMatrix:
    """Unit-norm median daily profiles, one row per household (sorted by id)."""

    data: np.ndarray
    household_ids: list[str]

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2:
            raise ValueError("profile data must be a 2-D matrix")
        if self.data.shape[0] != len(self.household_ids):
            raise ValueError("row count must match household_ids")
        if self.data.shape[0] < 2:
            raise ValueError("need at least 2 households")

    @property
    def d(self) -> int:
        return self.data.shape[1]


def build_day_matrices(raw: RawDataset) -> dict[str, DayMatrix]:
    """Assemble the complete-day matrix of every household in one pass.

    Days missing any time slot are dropped; medians over the remaining days
    stay unbiased, whereas imputation would inject untestable assumptions.
    """
    d = raw.d
    r = raw.resolution
    grouped: dict[str, dict[dt.date, dict[int, float]]] = {}
    for reading in raw.readings:
        grouped.setdefault(reading.household_id, {}).setdefault(reading.date, {})[
            reading.hour
        ] = reading.kwh
    out: dict[str, DayMatrix] = {}
    for hid in sorted(grouped):
        day_ids = []
        rows = []
        for day in sorted(grouped[hid]):
            slots = grouped[hid][day]
            if len(slots) == d:
                rows.append([slots[h * r] for h in range(d)])
                day_ids.append(day)
        if not rows:
            raise ValueError(f"household {hid!r} has no complete days")
        out[hid] = DayMatrix(hid, np.array(rows, dtype=float), day_ids)
    return out


def build_day_matrix(raw: RawDataset, household_id: str) -> DayMatrix:
    """Complete-day matrix for a single household."""
    matrices = build_day_matrices(raw)
    if household_id not in matrices:
        raise ValueError(f"unknown household {household_id!r}")
    return matrices[household_id]


def preprocess(raw: RawDataset) -> ProfileMatrix:
    """Median daily profile per household, scaled to unit Euclidean norm.

    Rows are ordered by sorted household id.  Even day counts use the
    standard sample median (mean of the two central values).
    """
    ids = raw.household_ids()
    if len(ids) < 2:
        raise ValueError(f"need at least 2 households, got {len(ids)}")
    matrices = build_day_matrices(raw)
    data = np.empty((len(ids), raw.d))
    for i, hid in enumerate(ids):
        median = np.median(matrices[hid].rows, axis=0)
        norm = float(np.linalg.norm(median))
        if norm == 0.0:
            raise DegenerateProfileError(f"household {hid!r} has an all-zero median profile")
        data[i] = median / norm
    return ProfileMatrix(data, ids)


# ---------------------------------------------------------------------------
# Synthetic data


def _load_archetypes() -> dict:
    path = resources.files("loadclust").joinpath("data/archetypes.json")
    with path.open("r", encoding="utf-8") as fh:
        return json.load(fh)


def archetype_shape(index: int) -> np.ndarray:
    """Base daily shape for archetype ``index`` (see data/archetypes.json)."""
    spec = _load_archetypes()
    names = spec["order"]
    base = np.array(spec["shapes"][names[index % len(names)]], dtype=float)
    shift = (index // len(names)) * int(spec["cyclic_shift_hours"])
    return np.roll(base, -shift)


def generate_synthetic(
    n_households: int,
    n_days: int,
    archetypes: int,
    noise_sigma: float,
    seed: int,
) -> RawDataset:
    """Generate a complete hourly dataset with known archetype assignments.

    Household ``i`` gets archetype ``i % archetypes``; each of its days is the
    archetype shape multiplied by per-hour log-normal noise with the given
    sigma (sigma 0 reproduces the shape exactly).  Output is byte-identical
    for a fixed seed.
    """
    if archetypes < 1 or archetypes > n_households:
        raise ValueError(
            f"archetypes must be in [1, n_households], got {archetypes} for {n_households}"
        )
    if n_days < 1:
        raise ValueError(f"n_days must be >= 1, got {n_days}")
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be >= 0, got {noise_sigma}")

    width = max(len(str(n_households - 1)), 3)
    start = dt.date(2018, 1, 1)
    shapes = [archetype_shape(a) for a in range(archetypes)]

    readings: list[Reading] = []
    ground_truth: dict[str, int] = {}
    for idx in range(n_households):
        hid = f"h{idx:0{width}d}"
        arch = idx % archetypes
        ground_truth[hid] = arch
        rng = substream(seed, idx)
        noise = rng.lognormal(mean=0.0, sigma=noise_sigma, size=(n_days, 24))
        days = shapes[arch][None, :] * noise
        for j in range(n_days):
            day = start + dt.timedelta(days=j)
            for hour in range(24):
                readings.append(Reading(hid, day, hour, float(days[j, hour])))
    return RawDataset(readings, resolution=1, ground_truth=ground_truth)


# ---------------------------------------------------------------------------
# CSV interchange


def ingest_csv(path, resolution_r: int = 1) -> tuple[RawDataset, int]:
    """Parse a readings CSV; returns the dataset and the malformed-row count.

    The header must be exactly ``household_id,date,hour,kwh``.  Rows that do
    not parse (wrong field count, bad date/number, out-of-range hour,
    non-finite kwh) are skipped and counted; a negative kwh or a duplicated
    (household, date, hour) key is an error.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise CsvFormatError(f"expected header {','.join(CSV_HEADER)!r}, got {header!r}")
        readings: list[Reading] = []
        skipped = 0
        for row in reader:
            if not row:
                continue
            if len(row) != 4 or not row[0]:
                skipped += 1
                continue
            try:
                date = dt.date.fromisoformat(row[1])
                hour = int(row[2])
                kwh = float(row[3])
            except ValueError:
                skipped += 1
                continue
            if kwh < 0:
                raise ValueError(f"negative kwh {kwh!r} for ({row[0]}, {row[1]}, {hour})")
            if not math.isfinite(kwh) or not 0 <= hour < 24 or hour % resolution_r != 0:
                skipped += 1
                continue
            readings.append(Reading(row[0], date, hour, kwh))
    return RawDataset(readings, resolution=resolution_r), skipped


def write_csv(raw: RawDataset, path) -> None:
    """Write readings in the canonical CSV format (UTF-8, LF endings)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in raw.readings:
            writer.writerow([r.household_id, r.date.isoformat(), r.hour, repr(r.kwh)])
