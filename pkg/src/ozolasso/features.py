"""Daily feature construction: the 918-feature base schema, the 938-feature
8-hour variant, targets, and standardization.

Canonical ordering: (1) pollutant hourly, 7 pollutants x 24 hours; (2) pollutant
max/min/mean, 7x3; (3) nine meteorological channels (the seven observed
variables plus wind-direction cosine and sine), each contributing 27 current-day
values (24 hourly + max/min/mean), the same 27 for the next day, and 27
differences (next minus current, hour- and aggregate-aligned). The 8-hour
variant appends the 17 current-day 8-hour-mean O3 windows (start hours 0..16)
plus their max/min/mean.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import date as Date, timedelta

import numpy as np

from .ingest import DayBlock, METEO_VARS, POLLUTANTS

logger = logging.getLogger(__name__)

AGGS = ("max", "min", "mean")

METEO_CHANNELS = (
    "temperature",
    "dew_point",
    "rel_humidity",
    "wind_dir_deg",
    "wind_dir_cos",
    "wind_dir_sin",
    "wind_speed",
    "visibility",
    "pressure",
)

N_POLLUTANT_FEATURES = len(POLLUTANTS) * 24 + len(POLLUTANTS) * 3  # 189
N_METEO_FEATURES = len(METEO_CHANNELS) * 27 * 3  # 729
N_BASE_MAX = N_POLLUTANT_FEATURES + N_METEO_FEATURES  # 918
N_8H_WINDOWS = 17
N_BASE_MAX8H = N_BASE_MAX + N_8H_WINDOWS + 3  # 938


class FeatureError(Exception):
    pass


@dataclass(frozen=True)
class FeatureDescriptor:
    index: int
    name: str
    category: str
    parents: tuple[int, int] | None = None  # expanded features only


@dataclass
class DailyFeatureRow:
    date: Date
    x: np.ndarray
    target_raw: float
    current_anchor: float


def _agg(values: np.ndarray) -> tuple[float, float, float]:
    return float(values.max()), float(values.min()), float(values.mean())


def channel_series(day: DayBlock, channel: str) -> np.ndarray:
    """24-hour series for a meteorological channel, deriving cos/sin."""
    if channel == "wind_dir_deg":
        return day.values["wind_direction"]
    if channel == "wind_dir_cos":
        return np.cos(np.radians(day.values["wind_direction"]))
    if channel == "wind_dir_sin":
        return np.sin(np.radians(day.values["wind_direction"]))
    return day.values[channel]


def compute_8h_means(o3_hours: np.ndarray) -> tuple[np.ndarray, float, float, float]:
    """17 eight-hour window means (start hours 0..16) and their max/min/mean.

    Any window touching a missing hour makes the day incomplete (strict policy);
    callers screen completeness before reaching here.
    """
    o3_hours = np.asarray(o3_hours, dtype=float)
    if o3_hours.shape != (24,):
        raise FeatureError("compute_8h_means expects exactly 24 hourly values")
    if np.isnan(o3_hours).any():
        raise FeatureError("missing hour inside an 8-hour window")
    means = np.array([o3_hours[h : h + 8].mean() for h in range(N_8H_WINDOWS)])
    return means, float(means.max()), float(means.min()), float(means.mean())


def build_schema(variant: str) -> list[FeatureDescriptor]:
    """Canonical base-feature descriptors for variant 'max' or 'max8h'."""
    if variant not in ("max", "max8h"):
        raise FeatureError(f"unknown variant {variant!r}")
    descriptors: list[FeatureDescriptor] = []

    def add(name: str, category: str) -> None:
        descriptors.append(FeatureDescriptor(len(descriptors), name, category))

    for pol in POLLUTANTS:
        for h in range(24):
            add(f"current-day {pol} hour {h:02d}", "pollutant-hourly")
    for pol in POLLUTANTS:
        for agg in AGGS:
            add(f"current-day {pol} {agg}", "pollutant-aggregate")

    for ch in METEO_CHANNELS:
        for h in range(24):
            add(f"current-day {ch} hour {h:02d}", "meteo-hourly")
        for agg in AGGS:
            add(f"current-day {ch} {agg}", "meteo-aggregate")
        for h in range(24):
            add(f"next-day {ch} hour {h:02d}", "meteo-hourly")
        for agg in AGGS:
            add(f"next-day {ch} {agg}", "meteo-aggregate")
        for h in range(24):
            add(f"diff {ch} hour {h:02d}", "meteo-diff")
        for agg in AGGS:
            add(f"diff {ch} {agg}", "meteo-diff")

    if variant == "max8h":
        for h in range(N_8H_WINDOWS):
            add(f"current-day o3 8h-mean start {h:02d}", "eighth-hour-mean")
        for agg in AGGS:
            add(f"current-day o3 8h-mean {agg}", "eighth-hour-mean")

    expected = N_BASE_MAX if variant == "max" else N_BASE_MAX8H
    assert len(descriptors) == expected
    return descriptors


def required_variables(variant: str) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """(current-day, next-day) variables a modeling day needs complete."""
    current = POLLUTANTS + METEO_VARS
    nxt = METEO_VARS + ("o3",)
    return current, nxt


def _day_target(day: DayBlock, variant: str) -> float:
    o3 = day.values["o3"]
    if variant == "max":
        return float(o3.max())
    _, wmax, _, _ = compute_8h_means(o3)
    return wmax


def _feature_vector(current: DayBlock, nxt_meteo: DayBlock, variant: str) -> np.ndarray:
    parts: list[np.ndarray] = []
    for pol in POLLUTANTS:
        parts.append(current.values[pol])
    for pol in POLLUTANTS:
        parts.append(np.array(_agg(current.values[pol])))
    for ch in METEO_CHANNELS:
        cur = channel_series(current, ch)
        nxt = channel_series(nxt_meteo, ch)
        cur27 = np.concatenate([cur, _agg(cur)])
        nxt27 = np.concatenate([nxt, _agg(nxt)])
        parts.extend([cur27, nxt27, nxt27 - cur27])
    if variant == "max8h":
        means, wmax, wmin, wmean = compute_8h_means(current.values["o3"])
        parts.append(means)
        parts.append(np.array([wmax, wmin, wmean]))
    return np.concatenate(parts)


def build_base_features(
    days: list[DayBlock],
    variant: str = "max",
    forecast_days: list[DayBlock] | None = None,
) -> tuple[list[DailyFeatureRow], list[FeatureDescriptor]]:
    """Build one row per modeling day from consecutive complete day pairs.

    Next-day meteorology comes from the observations themselves (perfect
    forecast proxy) unless ``forecast_days`` provides a parallel forecast
    series of identical schema.
    """
    schema = build_schema(variant)
    by_date = {d.date: d for d in days}
    forecast_by_date = {d.date: d for d in (forecast_days or [])}
    need_cur, need_nxt = required_variables(variant)

    rows: list[DailyFeatureRow] = []
    for date in sorted(by_date):
        nxt_date = date + timedelta(days=1)
        current = by_date[date]
        nxt = by_date.get(nxt_date)
        if nxt is None:
            logger.info("skipping %s: no successor day", date)
            continue
        nxt_meteo = forecast_by_date.get(nxt_date, nxt)
        if not all(current.complete[v] for v in need_cur):
            logger.info("skipping %s: incomplete current day", date)
            continue
        if not all(nxt.complete[v] for v in need_nxt) or not all(
            nxt_meteo.complete[v] for v in METEO_VARS
        ):
            logger.info("skipping %s: incomplete next day", date)
            continue
        x = _feature_vector(current, nxt_meteo, variant)
        rows.append(
            DailyFeatureRow(
                date=date,
                x=x,
                target_raw=_day_target(nxt, variant),
                current_anchor=_day_target(current, variant),
            )
        )
    return rows, schema


def delta_target(row: DailyFeatureRow, mode: str) -> float:
    """Target in the requested mode: delta (next minus current) or direct."""
    if mode == "delta":
        return row.target_raw - row.current_anchor
    if mode == "direct":
        return row.target_raw
    raise FeatureError(f"unknown target mode {mode!r}")


def stack_rows(rows: list[DailyFeatureRow], target_mode: str) -> tuple[np.ndarray, np.ndarray]:
    """(n, p0) raw feature matrix and length-n raw target vector."""
    if not rows:
        raise FeatureError("no modeling rows")
    X = np.stack([r.x for r in rows])
    y = np.array([delta_target(r, target_mode) for r in rows])
    return X, y


@dataclass
class StandardizationParams:
    """Training-set moments (population convention, divisor n)."""

    mu: np.ndarray
    sigma: np.ndarray
    kept: np.ndarray  # indices of retained columns
    dropped: np.ndarray  # zero-variance columns, recorded
    y_mu: float
    y_sigma: float


def fit_standardizer(X: np.ndarray, y: np.ndarray) -> StandardizationParams:
    """Per-column mean/sd on training rows; zero-variance columns are dropped."""
    if X.shape[0] < 2:
        raise FeatureError("standardization needs at least 2 training rows")
    mu = X.mean(axis=0)
    sigma = X.std(axis=0)  # population (divisor n)
    kept = np.flatnonzero(sigma > 0)
    dropped = np.flatnonzero(sigma == 0)
    if kept.size == 0:
        raise FeatureError("all feature columns have zero variance")
    if dropped.size:
        logger.info("dropping %d zero-variance columns", dropped.size)
    y_sigma = float(y.std())
    if y_sigma == 0:
        raise FeatureError("target has zero variance on training rows")
    return StandardizationParams(
        mu=mu, sigma=sigma, kept=kept, dropped=dropped,
        y_mu=float(y.mean()), y_sigma=y_sigma,
    )


def apply_standardizer(
    params: StandardizationParams, X: np.ndarray, y: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray | None]:
    """Standardize rows with training params (never the rows' own moments)."""
    if X.shape[1] != params.mu.shape[0]:
        raise FeatureError(
            f"schema mismatch: {X.shape[1]} columns, expected {params.mu.shape[0]}"
        )
    Xs = (X[:, params.kept] - params.mu[params.kept]) / params.sigma[params.kept]
    ys = None if y is None else (y - params.y_mu) / params.y_sigma
    return Xs, ys


def destandardize_response(params: StandardizationParams, y_std: np.ndarray) -> np.ndarray:
    return y_std * params.y_sigma + params.y_mu
