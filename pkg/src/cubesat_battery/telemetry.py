"""EPS telemetry ingestion: parsing, discharge segmentation, outlier policy, statistics."""
import csv
import io
import math
import re
import statistics
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .energy import integrate_dod
from .errors import (ConfigurationError, EmptyInputError, EmptySegmentError,
                     SchemaError, ValidationError)

N_PANELS = 5

PANEL_FIELDS = tuple(
    f"panel_{kind}_{k}" for kind in ("voltage", "current", "temp") for k in range(1, N_PANELS + 1)
)
BATTERY_FIELDS = ("batt_voltage", "batt_current", "batt_temp")
MANDATORY_FIELDS = ("timestamp",) + PANEL_FIELDS + BATTERY_FIELDS

# Dates whose discharge current exceeds 1000 mA
ANOMALOUS_DATES = ("2022-01-24", "2021-07-05", "2021-07-09", "2021-05-21")


@dataclass(frozen=True)
class TelemetrySample:
    timestamp: float
    panel_voltage: tuple
    panel_current: tuple
    panel_temp: tuple
    batt_voltage: float
    batt_current: float
    batt_temp: float
    source_date: str = ""


@dataclass(frozen=True)
class Schema:
    """Mapping from logical field names to the column names of a file.

    ``scale`` multiplies raw column values into the canonical units
    (panel mV/mA/degC, battery V/mA/degC, seconds).  ``current_sign`` lets a
    dataset with charge-positive battery current be read as discharge-positive.
    ``source_date`` may be mapped to a column carrying the date tag per row.
    """
    columns: dict = field(default_factory=lambda: {f: f for f in MANDATORY_FIELDS + ("source_date",)})
    scale: dict = field(default_factory=dict)
    delimiter: str = ","
    current_sign: float = 1.0

    def column(self, name):
        return self.columns.get(name, name)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        cols = {f: f for f in MANDATORY_FIELDS + ("source_date",)}
        cols.update(d.pop("columns", {}))
        unknown = set(cols) - set(MANDATORY_FIELDS) - {"source_date"}
        if unknown:
            raise SchemaError(f"unknown logical fields in schema: {sorted(unknown)}")
        return cls(columns=cols, **d)

    def to_dict(self):
        return {"columns": dict(self.columns), "scale": dict(self.scale),
                "delimiter": self.delimiter, "current_sign": self.current_sign}


DEFAULT_SCHEMA = Schema()


@dataclass(frozen=True)
class RowReject:
    line: int
    reason: str
    row: tuple = ()


@dataclass(frozen=True)
class ParseResult:
    samples: list
    rejects: list


def _parse_time(text):
    try:
        return float(text)
    except ValueError:
        pass
    dt = datetime.fromisoformat(text.strip().replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def parse_telemetry(raw, schema=DEFAULT_SCHEMA, source_date=None):
    """Parse delimiter-separated telemetry into samples ordered by timestamp.

    Rows with too few fields, unparseable numbers or non-finite values are
    returned in ``ParseResult.rejects`` with their 1-based line number.

    Raises
    ------
    EmptyInputError
        No header, or a header without data rows.
    SchemaError
        A mandatory column is absent from the header.
    ValidationError
        Two rows of the same source date share a timestamp.
    """
    text = raw.decode("utf-8-sig") if isinstance(raw, (bytes, bytearray)) else raw
    reader = csv.reader(io.StringIO(text), delimiter=schema.delimiter)
    header = next(reader, None)
    if not header or all(not h.strip() for h in header):
        raise EmptyInputError("telemetry input is empty")
    header = [h.strip() for h in header]
    index = {name: k for k, name in enumerate(header)}
    missing = [f"{f} (column '{schema.column(f)}')" for f in MANDATORY_FIELDS
               if schema.column(f) not in index]
    if missing:
        raise SchemaError("missing mandatory columns: " + ", ".join(missing))
    pos = {f: index[schema.column(f)] for f in MANDATORY_FIELDS}
    date_pos = index.get(schema.column("source_date"))
    scale = {f: float(schema.scale.get(f, 1.0)) for f in MANDATORY_FIELDS}

    parsed, rejects, seen_rows = [], [], 0
    for line, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        seen_rows += 1
        try:
            width = max(pos.values()) if date_pos is None else max(max(pos.values()), date_pos)
            if len(row) <= width:
                raise ValueError(f"expected at least {width + 1} fields, got {len(row)}")
            vals = {}
            for f, k in pos.items():
                v = _parse_time(row[k]) if f == "timestamp" else float(row[k])
                v *= scale[f]
                if not math.isfinite(v):
                    raise ValueError(f"non-finite value in '{header[k]}'")
                vals[f] = v
        except ValueError as exc:
            rejects.append(RowReject(line, str(exc), tuple(row)))
            continue
        tag = row[date_pos].strip() if date_pos is not None else (source_date or "")
        sample = TelemetrySample(
            timestamp=vals["timestamp"],
            panel_voltage=tuple(vals[f"panel_voltage_{k}"] for k in range(1, N_PANELS + 1)),
            panel_current=tuple(vals[f"panel_current_{k}"] for k in range(1, N_PANELS + 1)),
            panel_temp=tuple(vals[f"panel_temp_{k}"] for k in range(1, N_PANELS + 1)),
            batt_voltage=vals["batt_voltage"],
            batt_current=schema.current_sign * vals["batt_current"] + 0.0,
            batt_temp=vals["batt_temp"],
            source_date=tag,
        )
        parsed.append((line, sample))
    if seen_rows == 0:
        raise EmptyInputError("telemetry input has a header but no data rows")

    parsed.sort(key=lambda ls: (ls[1].source_date, ls[1].timestamp))
    dupes = [(a[0], b[0]) for a, b in zip(parsed, parsed[1:])
             if a[1].source_date == b[1].source_date and a[1].timestamp == b[1].timestamp]
    if dupes:
        listed = ", ".join(f"lines {x} and {y}" for x, y in dupes[:10])
        raise ValidationError(f"duplicate timestamps: {listed}" + (" ..." if len(dupes) > 10 else ""))
    return ParseResult([s for _, s in parsed], rejects)


def write_telemetry(samples, schema=DEFAULT_SCHEMA, include_source_date=True):
    """Serialise samples in the format read by :func:`parse_telemetry`.

    Floats are written with ``repr`` so a round trip is exact when the schema
    has unit scales.
    """
    fields = list(MANDATORY_FIELDS)
    header = [schema.column(f) for f in fields]
    if include_source_date:
        header.append(schema.column("source_date"))
    out = io.StringIO()
    w = csv.writer(out, delimiter=schema.delimiter, lineterminator="\n")
    w.writerow(header)
    for s in samples:
        values = {"timestamp": s.timestamp, "batt_voltage": s.batt_voltage,
                  "batt_current": schema.current_sign * s.batt_current, "batt_temp": s.batt_temp}
        for k in range(N_PANELS):
            values[f"panel_voltage_{k + 1}"] = s.panel_voltage[k]
            values[f"panel_current_{k + 1}"] = s.panel_current[k]
            values[f"panel_temp_{k + 1}"] = s.panel_temp[k]
        row = [repr(float(values[f]) / float(schema.scale.get(f, 1.0))) for f in fields]
        if include_source_date:
            row.append(s.source_date)
        w.writerow(row)
    return out.getvalue()


_DATE_PATTERNS = (
    (re.compile(r"(20\d\d)[-_.]?(\d\d)[-_.]?(\d\d)"), (1, 2, 3)),
    (re.compile(r"(\d\d)[-_.](\d\d)[-_.](20\d\d)"), (3, 2, 1)),
)


def date_tag_from_name(name):
    """Extract an ISO date tag (YYYY-MM-DD) from a file name, or ``''``."""
    for pattern, (yi, mi, di) in _DATE_PATTERNS:
        for m in pattern.finditer(name):
            y, mo, d = m.group(yi), m.group(mi), m.group(di)
            try:
                return datetime(int(y), int(mo), int(d)).date().isoformat()
            except ValueError:
                continue
    return ""


@dataclass(frozen=True)
class SegmentPolicy:
    min_length: int = 10
    discharge_threshold: float = 0.0
    gap_factor: float = 3.0
    max_gap: float = None

    def __post_init__(self):
        if self.min_length < 2:
            raise ConfigurationError("segments need at least 2 samples for DOD integration")
        if self.gap_factor <= 0 or (self.max_gap is not None and self.max_gap <= 0):
            raise ConfigurationError("gap tolerance must be positive")


@dataclass(frozen=True)
class OutlierPolicy:
    """Typical discharge current band ``lower < I <= upper`` (mA)."""
    lower: float = 0.0
    upper: float = 500.0


@dataclass(frozen=True, eq=False)
class DischargeSegment:
    samples: tuple
    dod: np.ndarray
    source_date: str = ""
    rejected_count: int = 0

    def __post_init__(self):
        if len(self.samples) == 0:
            raise EmptySegmentError("a discharge segment needs at least one sample")
        dod = np.asarray(self.dod, dtype=np.float64)
        if dod.shape != (len(self.samples),):
            raise ValidationError("dod must align 1:1 with samples")
        dod.flags.writeable = False
        object.__setattr__(self, "dod", dod)
        object.__setattr__(self, "samples", tuple(self.samples))

    def __len__(self):
        return len(self.samples)

    @property
    def timestamps(self):
        return np.array([s.timestamp for s in self.samples])

    @property
    def currents(self):
        return np.array([s.batt_current for s in self.samples])

    @property
    def voltages(self):
        return np.array([s.batt_voltage for s in self.samples])

    @property
    def temperatures(self):
        return np.array([s.batt_temp for s in self.samples])


def _segment_from(samples, source_date, rejected_count=0):
    if len(samples) >= 2:
        dod = integrate_dod([s.timestamp for s in samples], [s.batt_current for s in samples])
    else:
        dod = np.zeros(len(samples))
    return DischargeSegment(tuple(samples), dod, source_date, rejected_count)


def _by_source(samples):
    groups = {}
    for s in samples:
        groups.setdefault(s.source_date, []).append(s)
    return [(tag, groups[tag]) for tag in sorted(groups)]


def extract_discharge_segments(samples, policy=SegmentPolicy()):
    """Split telemetry into maximal discharge runs.

    A run is a stretch of consecutive samples with current above the policy
    threshold that contains no time gap larger than the tolerance (the
    policy's ``max_gap``, or ``gap_factor`` times the median sampling interval
    of the source file).  Runs shorter than ``min_length`` are discarded.
    Samples from different source dates never share a segment.
    """
    segments = []
    for tag, group in _by_source(samples):
        t = np.array([s.timestamp for s in group])
        steps = np.diff(t)
        if np.any(steps <= 0):
            k = int(np.argmax(steps <= 0)) + 1
            raise ValidationError(f"samples of source '{tag}' not time-ordered at index {k}")
        if policy.max_gap is not None:
            tolerance = policy.max_gap
        elif steps.size:
            tolerance = policy.gap_factor * float(np.median(steps))
        else:
            tolerance = math.inf
        run = []
        for k, s in enumerate(group):
            is_discharge = s.batt_current > policy.discharge_threshold
            if run and (not is_discharge or s.timestamp - run[-1].timestamp > tolerance):
                if len(run) >= policy.min_length:
                    segments.append(_segment_from(run, tag))
                run = []
            if is_discharge:
                run.append(s)
        if len(run) >= policy.min_length:
            segments.append(_segment_from(run, tag))
    return segments


def filter_outliers(segment, policy=OutlierPolicy()):
    """Drop samples whose current is outside the typical band; DOD is re-integrated.

    Returns
    -------
    (DischargeSegment, list of TelemetrySample)
        The filtered segment and the rejected originals, in order.
    """
    kept, rejected = [], []
    for s in segment.samples:
        (kept if policy.lower < s.batt_current <= policy.upper else rejected).append(s)
    if not kept:
        raise EmptySegmentError(
            f"every sample of the '{segment.source_date}' segment lies outside "
            f"({policy.lower}, {policy.upper}] mA")
    if not rejected:
        return segment, []
    return _segment_from(kept, segment.source_date, segment.rejected_count + len(rejected)), rejected


def filter_segments(segments, policy=OutlierPolicy()):
    """Apply :func:`filter_outliers` to each segment, dropping fully rejected ones."""
    out, rejected = [], []
    for seg in segments:
        try:
            kept, rej = filter_outliers(seg, policy)
        except EmptySegmentError:
            rejected.extend(seg.samples)
            continue
        out.append(kept)
        rejected.extend(rej)
    return out, rejected


def select_dates(segments, exclude=ANOMALOUS_DATES):
    excluded = set(exclude)
    return [s for s in segments if s.source_date not in excluded]


@dataclass(frozen=True)
class Stat:
    mean: float
    std: float
    min: float
    max: float


@dataclass(frozen=True)
class FeatureStats:
    features: dict
    sample_count: int

    def to_dict(self):
        return {"sample_count": self.sample_count,
                "features": {k: vars(v) for k, v in self.features.items()}}


def _stat(values):
    values = [float(v) for v in values]
    # sample standard deviation, like the usual tabular "describe" summaries
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    mean = math.fsum(values) / len(values)
    lo, hi = min(values), max(values)
    return Stat(mean=min(max(mean, lo), hi), std=std, min=lo, max=hi)


def summarize(segments):
    """Pooled mean/std/min/max of voltage, current, DOD and temperature."""
    if not segments or sum(len(s) for s in segments) == 0:
        raise EmptyInputError("no samples to summarise")
    # fixed pooling order keeps the result independent of segment order
    ordered = sorted(segments, key=lambda s: (s.source_date, s.samples[0].timestamp, len(s)))
    pooled = {"batt_voltage": [], "batt_current": [], "dod": [], "batt_temp": []}
    for seg in ordered:
        pooled["batt_voltage"].extend(s.batt_voltage for s in seg.samples)
        pooled["batt_current"].extend(s.batt_current for s in seg.samples)
        pooled["batt_temp"].extend(s.batt_temp for s in seg.samples)
        pooled["dod"].extend(seg.dod.tolist())
    return FeatureStats({k: _stat(v) for k, v in pooled.items()},
                        sample_count=len(pooled["dod"]))


def write_segments(segments, schema=DEFAULT_SCHEMA):
    """Serialise segments as one telemetry table plus manifest entries."""
    samples = [s for seg in segments for s in seg.samples]
    entries = [{"source_date": seg.source_date,
                "start": seg.samples[0].timestamp,
                "end": seg.samples[-1].timestamp,
                "samples": len(seg),
                "rejected": seg.rejected_count,
                "dod_final": float(seg.dod[-1])} for seg in segments]
    return write_telemetry(samples, schema), entries


def read_segments(text, entries, schema=DEFAULT_SCHEMA):
    """Rebuild segments written by :func:`write_segments`."""
    samples = parse_telemetry(text, schema).samples if entries else []
    by_date = {}
    for s in samples:
        by_date.setdefault(s.source_date, []).append(s)
    segments = []
    for e in entries:
        pool = by_date.get(e["source_date"], [])
        picked = [s for s in pool if e["start"] <= s.timestamp <= e["end"]]
        if len(picked) != e["samples"]:
            raise ValidationError(
                f"segment {e['source_date']} [{e['start']}, {e['end']}] lists {e['samples']} "
                f"samples but the table holds {len(picked)}")
        segments.append(_segment_from(picked, e["source_date"], e.get("rejected", 0)))
    return segments
