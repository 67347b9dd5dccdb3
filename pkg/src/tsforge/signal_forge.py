"""Synthesis of timestamped multi-channel series seeds.

A seed is composed additively from controllable attributes:

    values(t) = baseline + trend(t) + seasonal(t) + sum(event_shapes(t)) + noise(t)

All ground truth (trend, seasonality, event windows, basic stats) is
recorded in the seed metadata from the generating plan, never re-estimated.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field as dc_field
from datetime import datetime, timedelta
from typing import Optional

import numpy as np

GRANULARITIES = ("raw", "hourly", "daily", "weekly", "monthly")
BIN_SECONDS = {"hourly": 3600, "daily": 86400, "weekly": 604800, "monthly": 2592000}

TREND_TYPES = ("increase", "decrease", "keep_steady")
EVENT_TYPES = (
    "upward_spike",
    "downward_spike",
    "sudden_increase",
    "sudden_decrease",
    "level_shift",
    "sustained_elevation",
)
SPIKE_TYPES = ("upward_spike", "downward_spike")
# Events whose contribution persists beyond a short pulse; these are the
# ones that can fight a sampled trend, so their amplitude gets capped.
PERSISTENT_TYPES = ("sudden_increase", "sudden_decrease", "level_shift", "sustained_elevation")

TIMESTAMP_FORMATS = {
    "date_only": "%Y-%m-%d",
    "datetime_minute": "%Y-%m-%d %H:%M",
    "datetime_second": "%Y-%m-%d %H:%M:%S",
}

ORDINALS = ("first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth")

MIN_SERIES_LENGTH = 6
MAX_CHANNELS = 6


class PoolError(ValueError):
    pass


class SamplingError(ValueError):
    pass


class ConfigurationError(ValueError):
    pass


def _parse_dt(s) -> datetime:
    if isinstance(s, datetime):
        return s
    return datetime.fromisoformat(str(s).replace("T", " "))


def _iso(dt: datetime) -> str:
    return dt.isoformat(sep=" ")


# ---------------------------------------------------------------------------
# Domain pool


@dataclass(frozen=True)
class DomainVariable:
    domain: str
    variable: str
    unit: str
    sampling_interval_s: int
    date_range: tuple[datetime, datetime]
    timestamp_format: str
    calendar_constraints: Optional[str] = None

    def __post_init__(self):
        if self.sampling_interval_s <= 0:
            raise PoolError(f"{self.domain}/{self.variable}: sampling_interval_s must be positive")
        if self.date_range[0] >= self.date_range[1]:
            raise PoolError(f"{self.domain}/{self.variable}: date_range start must precede end")
        if self.timestamp_format not in TIMESTAMP_FORMATS:
            raise PoolError(f"{self.domain}/{self.variable}: unknown timestamp_format {self.timestamp_format!r}")


def load_domain_pool(path) -> list[DomainVariable]:
    with open(path) as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as e:
            raise PoolError(f"pool file is not valid JSON: {e}") from e
    if not isinstance(raw, dict) or "domains" not in raw:
        raise PoolError("pool file must be an object with a 'domains' list")
    pool: list[DomainVariable] = []
    seen: set[tuple[str, str]] = set()
    for dom in raw["domains"]:
        name = dom.get("name")
        if not name:
            raise PoolError("domain entry missing 'name'")
        for var in dom.get("variables", []):
            try:
                dv = DomainVariable(
                    domain=name,
                    variable=var["name"],
                    unit=var["unit"],
                    sampling_interval_s=int(var["sampling_interval_s"]),
                    date_range=(_parse_dt(var["date_range"][0]), _parse_dt(var["date_range"][1])),
                    timestamp_format=var["timestamp_format"],
                    calendar_constraints=var.get("calendar_constraints"),
                )
            except (KeyError, TypeError, ValueError) as e:
                raise PoolError(f"malformed variable in domain {name!r}: {var.get('name', '?')}: {e}") from e
            key = (dv.domain, dv.variable)
            if key in seen:
                raise PoolError(f"duplicate (domain, variable) pair: {key}")
            seen.add(key)
            pool.append(dv)
    if not pool:
        raise PoolError("domain pool is empty")
    return pool


def default_pool_path() -> str:
    from importlib import resources

    return str(resources.files("tsforge.assets").joinpath("domain_pool.json"))


# ---------------------------------------------------------------------------
# Attribute plans


@dataclass
class TrendSpec:
    type: str
    amplitude: float

    def to_dict(self):
        return {"type": self.type, "amplitude": self.amplitude}


@dataclass
class SeasonalSpec:
    period_s: float
    amplitude: float
    phase: float

    def to_dict(self):
        return {"period_s": self.period_s, "amplitude": self.amplitude, "phase": self.phase}


@dataclass
class EventSpec:
    type: str
    start_time: datetime
    end_time: datetime
    amplitude: float
    ordinal_label: str
    idx: int

    def __post_init__(self):
        if self.type not in EVENT_TYPES:
            raise ValueError(f"unknown event type {self.type!r}")
        if self.start_time > self.end_time:
            raise ValueError("event start_time must be <= end_time")
        if self.amplitude <= 0:
            raise ValueError("event amplitude must be positive")

    @property
    def signed_amplitude(self) -> float:
        return -self.amplitude if self.type in ("downward_spike", "sudden_decrease") else self.amplitude

    def to_dict(self):
        return {
            "type": self.type,
            "start_time": _iso(self.start_time),
            "end_time": _iso(self.end_time),
            "amplitude": self.amplitude,
            "ordinal_label": self.ordinal_label,
            "idx": self.idx,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            type=d["type"],
            start_time=_parse_dt(d["start_time"]),
            end_time=_parse_dt(d["end_time"]),
            amplitude=d["amplitude"],
            ordinal_label=d["ordinal_label"],
            idx=d["idx"],
        )


@dataclass
class AttributeSpec:
    baseline: float
    trend: TrendSpec
    noise_sigma: float
    seasonal: Optional[SeasonalSpec] = None
    events: list[EventSpec] = dc_field(default_factory=list)

    def to_dict(self):
        return {
            "baseline": self.baseline,
            "trend": self.trend.to_dict(),
            "noise_sigma": self.noise_sigma,
            "seasonal": self.seasonal.to_dict() if self.seasonal else None,
            "events": [e.to_dict() for e in self.events],
        }


@dataclass
class ChannelPlan:
    variable: DomainVariable
    attributes: AttributeSpec


@dataclass
class SeedPlan:
    channels: list[ChannelPlan]
    start: datetime
    n_samples: int
    sampling_interval_s: int

    def to_dict(self):
        return {
            "start": _iso(self.start),
            "n_samples": self.n_samples,
            "sampling_interval_s": self.sampling_interval_s,
            "channels": [
                {
                    "domain": c.variable.domain,
                    "variable": c.variable.variable,
                    "unit": c.variable.unit,
                    "timestamp_format": c.variable.timestamp_format,
                    "attributes": c.attributes.to_dict(),
                }
                for c in self.channels
            ],
        }


def _ordinal_labels(events: list[EventSpec]) -> None:
    """Rewrite ordinal labels and idx in chronological order, per type."""
    events.sort(key=lambda e: (e.start_time, e.type))
    per_type: dict[str, int] = {}
    for i, ev in enumerate(events):
        n = per_type.get(ev.type, 0)
        per_type[ev.type] = n + 1
        ev.idx = i
        ev.ordinal_label = f"{ORDINALS[n]} {ev.type.replace('_', ' ')}"


def sample_seed_plan(
    pool: list[DomainVariable],
    rng_seed: int,
    n_channels: Optional[int] = None,
) -> SeedPlan:
    if not pool:
        raise SamplingError("cannot sample from an empty pool")
    rng = random.Random(rng_seed)

    if n_channels is None:
        n_channels = rng.choices(range(1, 7), weights=[77.0, 16.1, 4.3, 1.4, 1.1, 0.1])[0]
    if not 1 <= n_channels <= MAX_CHANNELS:
        raise SamplingError(f"channel count must be 1..{MAX_CHANNELS}, got {n_channels}")

    by_domain: dict[str, list[DomainVariable]] = {}
    for dv in pool:
        by_domain.setdefault(dv.domain, []).append(dv)
    eligible = sorted(d for d, vs in by_domain.items() if len(vs) >= n_channels)
    if not eligible:
        raise SamplingError(f"no domain offers {n_channels} variables")
    domain = rng.choice(eligible)
    variables = rng.sample(sorted(by_domain[domain], key=lambda v: v.variable), n_channels)

    # Channels are synchronized: the first variable fixes the shared timeline.
    anchor = variables[0]
    interval = anchor.sampling_interval_s
    range_start, range_end = anchor.date_range
    max_len = int((range_end - range_start).total_seconds() // interval) + 1
    n = min(max_len, int(math.exp(rng.uniform(math.log(60), math.log(900)))))
    n = max(n, MIN_SERIES_LENGTH)
    slack = max_len - n
    offset = rng.randint(0, slack) if slack > 0 else 0
    start = range_start + timedelta(seconds=offset * interval)

    channels = [
        ChannelPlan(variable=dv, attributes=_sample_attributes(rng, start, n, interval))
        for dv in variables
    ]
    return SeedPlan(channels=channels, start=start, n_samples=n, sampling_interval_s=interval)


def _sample_attributes(rng: random.Random, start: datetime, n: int, interval: int) -> AttributeSpec:
    span_s = (n - 1) * interval
    baseline = round(rng.uniform(20.0, 400.0), 2)

    trend_type = rng.choice(TREND_TYPES)
    trend_amp = round(rng.uniform(0.25, 0.6) * baseline, 2) if trend_type != "keep_steady" else 0.0
    trend = TrendSpec(type=trend_type, amplitude=trend_amp)

    seasonal = None
    candidate_periods = [p for p in (3600, 86400, 604800) if 2 * interval <= p <= span_s / 2]
    if candidate_periods and rng.random() < 0.5:
        seasonal_amp = rng.uniform(0.05, 0.15) * baseline
        if trend_type != "keep_steady":
            seasonal_amp = min(seasonal_amp, 0.4 * trend_amp)
        seasonal = SeasonalSpec(
            period_s=float(rng.choice(candidate_periods)),
            amplitude=round(seasonal_amp, 2),
            phase=round(rng.uniform(0, 2 * math.pi), 4),
        )

    sigma = 0.0 if rng.random() < 0.25 else rng.uniform(0.002, 0.02) * baseline

    n_events = rng.choices([0, 1, 2, 3, 4], weights=[20, 30, 25, 15, 10])[0]
    events: list[EventSpec] = []
    used: list[tuple[int, int]] = []
    for _ in range(n_events):
        etype = rng.choice(EVENT_TYPES)
        if etype in SPIKE_TYPES:
            dur = rng.randint(0, 3)
        else:
            dur = rng.randint(4, max(4, min(n // 4, 200)))
        placed = None
        for _attempt in range(20):
            i0 = rng.randint(1, max(1, n - dur - 2))
            i1 = i0 + dur
            if all(i1 + 2 < a or i0 - 2 > b for a, b in used):
                placed = (i0, i1)
                break
        if placed is None:
            continue
        used.append(placed)

        cap = 0.5 * baseline
        if trend_type != "keep_steady" and etype in PERSISTENT_TYPES:
            cap = 0.25 * trend_amp
        floor = max(3.0 * sigma, 0.02 * baseline)
        if floor > cap:
            sigma = min(sigma, cap / 3.0 * 0.9)
            floor = max(3.0 * sigma, min(0.02 * baseline, cap))
        if floor > cap:
            continue
        amp = round(rng.uniform(floor, cap), 2)
        if amp < 3.0 * sigma:
            sigma = amp / 3.0
        events.append(
            EventSpec(
                type=etype,
                start_time=start + timedelta(seconds=placed[0] * interval),
                end_time=start + timedelta(seconds=placed[1] * interval),
                amplitude=amp,
                ordinal_label="",
                idx=0,
            )
        )
    _ordinal_labels(events)
    return AttributeSpec(
        baseline=baseline,
        trend=trend,
        noise_sigma=round(sigma, 4),
        seasonal=seasonal,
        events=events,
    )


# ---------------------------------------------------------------------------
# Composition


def trend_component(trend: TrendSpec, n: int) -> np.ndarray:
    if trend.type == "keep_steady" or n <= 1:
        return np.zeros(n)
    ramp = np.arange(n, dtype=float) / (n - 1)
    sign = 1.0 if trend.type == "increase" else -1.0
    return sign * trend.amplitude * ramp


def seasonal_component(seasonal: Optional[SeasonalSpec], seconds: np.ndarray) -> np.ndarray:
    if seasonal is None:
        return np.zeros(len(seconds))
    return seasonal.amplitude * np.sin(2 * math.pi * seconds / seasonal.period_s + seasonal.phase)


def event_shape(event: EventSpec, timestamps: list[datetime], interval_s: int) -> np.ndarray:
    n = len(timestamps)
    out = np.zeros(n)
    t0, t1 = event.start_time, event.end_time
    idx = [i for i, t in enumerate(timestamps) if t0 <= t <= t1]
    if not idx:
        return out
    i0, i1 = idx[0], idx[-1]
    amp = event.signed_amplitude
    if event.type in SPIKE_TYPES:
        ip = (i0 + i1) // 2
        halfspan = max(ip - i0, i1 - ip, 1)
        for i in idx:
            out[i] = amp * (1.0 - abs(i - ip) / (halfspan + 1))
        out[ip] = amp  # apex is exact
    elif event.type in ("sudden_increase", "sudden_decrease"):
        for i in idx:
            frac = 1.0 if i1 == i0 else (i - i0) / (i1 - i0)
            out[i] = amp * frac
        out[i1 + 1 :] = amp
    elif event.type == "level_shift":
        out[i0:] = amp
    else:  # sustained_elevation
        out[i0 : i1 + 1] = amp
    return out


def compose_series(plan: SeedPlan, rng_seed: int) -> "Seed":
    if plan.n_samples < MIN_SERIES_LENGTH:
        raise ConfigurationError(
            f"series length {plan.n_samples} below minimum of {MIN_SERIES_LENGTH} samples"
        )
    interval = plan.sampling_interval_s
    timestamps = [plan.start + timedelta(seconds=i * interval) for i in range(plan.n_samples)]
    seconds = np.array([(t - timestamps[0]).total_seconds() for t in timestamps])

    channels = []
    for ci, ch in enumerate(plan.channels):
        attrs = ch.attributes
        values = np.full(plan.n_samples, attrs.baseline, dtype=float)
        values += trend_component(attrs.trend, plan.n_samples)
        values += seasonal_component(attrs.seasonal, seconds)
        for ev in attrs.events:
            values += event_shape(ev, timestamps, interval)
        if attrs.noise_sigma > 0:
            noise_rng = np.random.default_rng([rng_seed, ci])
            values += noise_rng.normal(0.0, attrs.noise_sigma, plan.n_samples)
        channels.append(Channel(variable=ch.variable, values=values.tolist(), attributes=attrs))

    seed = Seed(
        seed_id=f"seed-{rng_seed:08d}",
        channels=channels,
        timestamps=timestamps,
        metadata={},
        description="",
    )
    seed.metadata = _build_metadata(seed)
    assign_best_view(seed)
    seed.description = render_description(seed)
    return seed


def _build_metadata(seed: "Seed") -> dict:
    per_channel = []
    for ch in seed.channels:
        values = np.asarray(ch.values)
        attrs = ch.attributes
        per_channel.append(
            {
                "variable": ch.variable.variable,
                "domain": ch.variable.domain,
                "unit": ch.variable.unit,
                "baseline": attrs.baseline,
                "trend": attrs.trend.to_dict(),
                "seasonal": attrs.seasonal.to_dict() if attrs.seasonal else None,
                "noise_sigma": attrs.noise_sigma,
                "events": [e.to_dict() for e in attrs.events],
                "stats": {
                    "min": float(np.min(values)),
                    "max": float(np.max(values)),
                    "mean": float(np.mean(values)),
                },
                "best_view": {},
            }
        )
    return {
        "sampling_interval_s": seed.sampling_interval_s,
        "n_samples": len(seed.timestamps),
        "start": _iso(seed.timestamps[0]),
        "end": _iso(seed.timestamps[-1]),
        "channels": per_channel,
    }


# ---------------------------------------------------------------------------
# best_view assignment


def _bins_over(span_s: float, bin_s: float) -> int:
    return max(1, math.ceil(span_s / bin_s))


def best_view_for_event(duration_s: float, sampling_interval_s: int) -> str:
    target = duration_s / 4.0
    for g in ("monthly", "weekly", "daily", "hourly"):
        if sampling_interval_s < BIN_SECONDS[g] <= target:
            return g
    return "raw"


def best_view_for_range(span_s: float, sampling_interval_s: int) -> str:
    # Coarsest granularity giving 30..200 bins; ties broken coarser by scan order.
    for g in ("monthly", "weekly", "daily", "hourly"):
        if BIN_SECONDS[g] <= sampling_interval_s:
            continue
        if 30 <= _bins_over(span_s, BIN_SECONDS[g]) <= 200:
            return g
    return "raw"


def assign_best_view(seed: "Seed") -> "Seed":
    span_s = (seed.timestamps[-1] - seed.timestamps[0]).total_seconds() + seed.sampling_interval_s
    for meta in seed.metadata["channels"]:
        bv: dict = {}
        bv["trend"] = best_view_for_range(span_s, seed.sampling_interval_s)
        if meta["seasonal"]:
            bv["seasonal"] = best_view_for_range(span_s, seed.sampling_interval_s)
        for ev in meta["events"]:
            dur = (_parse_dt(ev["end_time"]) - _parse_dt(ev["start_time"])).total_seconds()
            bv[f"event_{ev['idx']}"] = best_view_for_event(dur, seed.sampling_interval_s)
        meta["best_view"] = bv
    return seed


# ---------------------------------------------------------------------------
# Description


_TREND_PHRASES = {
    "increase": "an overall increasing trend (total rise of about {amp} {unit})",
    "decrease": "an overall decreasing trend (total fall of about {amp} {unit})",
    "keep_steady": "a stable baseline around {baseline} {unit}",
}


def _period_phrase(period_s: float) -> str:
    if period_s % 604800 == 0:
        k = int(period_s // 604800)
        return "weekly" if k == 1 else f"every {k} weeks"
    if period_s % 86400 == 0:
        k = int(period_s // 86400)
        return "daily" if k == 1 else f"every {k} days"
    if period_s % 3600 == 0:
        k = int(period_s // 3600)
        return "hourly" if k == 1 else f"every {k} hours"
    return f"every {period_s:g} seconds"


def render_description(seed: "Seed") -> str:
    paragraphs = []
    for meta in seed.metadata["channels"]:
        attrs_trend = meta["trend"]
        parts = [
            f"{meta['variable']} ({meta['unit']}) recorded from {seed.metadata['start']} "
            f"to {seed.metadata['end']}."
        ]
        trend_text = _TREND_PHRASES[attrs_trend["type"]].format(
            amp=attrs_trend["amplitude"], baseline=meta["baseline"], unit=meta["unit"]
        )
        parts.append(f"The series shows {trend_text}.")
        if meta["seasonal"]:
            parts.append(
                f"A {_period_phrase(meta['seasonal']['period_s'])} periodic pattern "
                f"with amplitude about {meta['seasonal']['amplitude']} {meta['unit']} is present."
            )
        if meta["events"]:
            event_bits = [
                f"the {ev['ordinal_label']} starting at {ev['start_time']} "
                f"(amplitude {ev['amplitude']} {meta['unit']})"
                for ev in meta["events"]
            ]
            parts.append("Notable local events: " + "; ".join(event_bits) + ".")
        else:
            parts.append("No notable local events occur.")
        paragraphs.append(" ".join(parts))
    return "\n\n".join(paragraphs)


# ---------------------------------------------------------------------------
# Seed container and downsampling


@dataclass
class Channel:
    variable: DomainVariable
    values: list[float]
    attributes: AttributeSpec


@dataclass
class Seed:
    seed_id: str
    channels: list[Channel]
    timestamps: list[datetime]
    metadata: dict
    description: str

    @property
    def sampling_interval_s(self) -> int:
        return self.channels[0].variable.sampling_interval_s if self.channels else 0

    def channel_values(self, name: Optional[str] = None) -> list[float]:
        if name is None:
            return self.channels[0].values
        for ch in self.channels:
            if ch.variable.variable == name:
                return ch.values
        raise KeyError(f"unknown channel {name!r}")

    def channel_events(self, name: Optional[str] = None) -> list[EventSpec]:
        if name is None:
            return self.channels[0].attributes.events
        for ch in self.channels:
            if ch.variable.variable == name:
                return ch.attributes.events
        raise KeyError(f"unknown channel {name!r}")

    def to_dict(self) -> dict:
        return {
            "seed_id": self.seed_id,
            "timestamps": [_iso(t) for t in self.timestamps],
            "channels": [
                {
                    "variable": ch.variable.variable,
                    "domain": ch.variable.domain,
                    "unit": ch.variable.unit,
                    "sampling_interval_s": ch.variable.sampling_interval_s,
                    "timestamp_format": ch.variable.timestamp_format,
                    "values": ch.values,
                    "attributes": ch.attributes.to_dict(),
                }
                for ch in self.channels
            ],
            "metadata": self.metadata,
            "description": self.description,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Seed":
        timestamps = [_parse_dt(t) for t in d["timestamps"]]
        channels = []
        for chd in d["channels"]:
            a = chd["attributes"]
            attrs = AttributeSpec(
                baseline=a["baseline"],
                trend=TrendSpec(**a["trend"]),
                noise_sigma=a["noise_sigma"],
                seasonal=SeasonalSpec(**a["seasonal"]) if a.get("seasonal") else None,
                events=[EventSpec.from_dict(e) for e in a.get("events", [])],
            )
            dv = DomainVariable(
                domain=chd["domain"],
                variable=chd["variable"],
                unit=chd["unit"],
                sampling_interval_s=chd["sampling_interval_s"],
                date_range=(timestamps[0], timestamps[-1] + timedelta(seconds=1)),
                timestamp_format=chd["timestamp_format"],
            )
            channels.append(Channel(variable=dv, values=chd["values"], attributes=attrs))
        return cls(
            seed_id=d["seed_id"],
            channels=channels,
            timestamps=timestamps,
            metadata=d["metadata"],
            description=d["description"],
        )


def _bin_start(t: datetime, granularity: str) -> datetime:
    if granularity == "hourly":
        return t.replace(minute=0, second=0, microsecond=0)
    if granularity == "daily":
        return t.replace(hour=0, minute=0, second=0, microsecond=0)
    if granularity == "weekly":
        day = t.replace(hour=0, minute=0, second=0, microsecond=0)
        return day - timedelta(days=day.weekday())
    if granularity == "monthly":
        return t.replace(day=1, hour=0, minute=0, second=0, microsecond=0)
    raise ValueError(f"unknown granularity {granularity!r}")


def downsample(
    values: list[float],
    timestamps: list[datetime],
    granularity: str,
) -> tuple[list[float], list[datetime]]:
    """Calendar-aligned bin means; bin timestamp is the bin start.

    Identity when granularity is 'raw' or not coarser than the sampling step.
    """
    if granularity not in GRANULARITIES:
        raise ValueError(f"unknown granularity {granularity!r}")
    if not values:
        return [], []
    if granularity == "raw":
        return list(values), list(timestamps)
    if len(timestamps) >= 2:
        step = (timestamps[1] - timestamps[0]).total_seconds()
        if BIN_SECONDS[granularity] <= step:
            return list(values), list(timestamps)
    out_v: list[float] = []
    out_t: list[datetime] = []
    acc: list[float] = []
    current: Optional[datetime] = None
    for v, t in zip(values, timestamps):
        b = _bin_start(t, granularity)
        if current is None:
            current = b
        if b != current:
            out_v.append(float(np.mean(acc)))
            out_t.append(current)
            acc = []
            current = b
        acc.append(v)
    out_v.append(float(np.mean(acc)))
    out_t.append(current)
    return out_v, out_t


# ---------------------------------------------------------------------------
# Seed files


def write_seeds(seeds: list[Seed], path) -> None:
    with open(path, "w") as f:
        for seed in seeds:
            f.write(json.dumps(seed.to_dict()) + "\n")


def read_seeds(path) -> list[Seed]:
    seeds = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                seeds.append(Seed.from_dict(json.loads(line)))
    return seeds
