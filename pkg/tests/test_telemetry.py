import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cubesat_battery.errors import (EmptyInputError, EmptySegmentError, SchemaError,
                                    ValidationError)
from cubesat_battery.telemetry import (
    ANOMALOUS_DATES, MANDATORY_FIELDS, OutlierPolicy, Schema, SegmentPolicy,
    date_tag_from_name, extract_discharge_segments, filter_outliers, filter_segments,
    parse_telemetry, read_segments, select_dates, summarize, write_segments, write_telemetry)

from conftest import make_sample, series


def _three_rows():
    return [make_sample(0.0, 250.5, 4.01, 7.25, panel_v=(1.0, 2.0, 3.0, 4.0, 5.0),
                        panel_i=(10.0, 20.0, 30.0, 40.0, 50.0), date="2021-04-20"),
            make_sample(10.0, 260.0, 4.0, 7.5, date="2021-04-20"),
            make_sample(20.0, -12.75, 3.99, 7.75, panel_v=1234.5, panel_i=0.25, date="2021-04-20")]


def test_three_row_round_trip():
    rows = _three_rows()
    res = parse_telemetry(write_telemetry(rows).encode())
    assert res.rejects == []
    assert res.samples == rows


def test_header_only_is_empty_input():
    header = ",".join(MANDATORY_FIELDS) + "\n"
    with pytest.raises(EmptyInputError):
        parse_telemetry(header.encode())
    with pytest.raises(EmptyInputError):
        parse_telemetry(b"")


def test_missing_column_is_schema_error():
    text = write_telemetry(_three_rows(), include_source_date=False)
    lines = text.splitlines()
    cut = [",".join(line.split(",")[:-1]) for line in lines]  # drop batt_temp
    with pytest.raises(SchemaError, match="batt_temp"):
        parse_telemetry("\n".join(cut))


def test_duplicate_timestamps_named():
    rows = series([100.0, 100.0, 100.0])
    text = write_telemetry(rows, include_source_date=False).splitlines()
    text[3] = text[2]
    with pytest.raises(ValidationError, match="lines 3 and 4"):
        parse_telemetry("\n".join(text), source_date="d")


def test_bad_rows_reported_not_dropped():
    lines = write_telemetry(series([100.0] * 4), include_source_date=False).splitlines()
    lines[2] = lines[2].replace("100.0", "nan", 1)
    lines[3] = lines[3].replace("100.0", "abc", 1)
    res = parse_telemetry("\n".join(lines))
    assert len(res.samples) == 2
    assert sorted(r.line for r in res.rejects) == [3, 4]


def test_samples_sorted_by_timestamp():
    rows = series([1.0, 2.0, 3.0])
    lines = write_telemetry(rows, include_source_date=False).splitlines()
    res = parse_telemetry("\n".join([lines[0], lines[3], lines[1], lines[2]]))
    assert [s.timestamp for s in res.samples] == [0.0, 10.0, 20.0]


def test_schema_mapping_scale_and_sign():
    schema = Schema.from_dict({"columns": {"batt_voltage": "Vbat_mV", "batt_current": "Ibat"},
                               "scale": {"batt_voltage": 0.001}, "current_sign": -1.0})
    rows = series([150.0, 200.0], voltage=4.1)
    res = parse_telemetry(write_telemetry(rows, schema), schema)
    assert "Vbat_mV" in write_telemetry(rows, schema).splitlines()[0]
    assert [s.batt_current for s in res.samples] == [150.0, 200.0]
    assert res.samples[0].batt_voltage == pytest.approx(4.1, rel=1e-15)
    assert Schema.from_dict(schema.to_dict()) == schema


def test_iso_timestamps():
    rows = series([1.0, 2.0])
    lines = write_telemetry(rows, include_source_date=False).splitlines()
    lines[1] = "2021-04-20T00:00:00Z" + lines[1][lines[1].index(","):]
    lines[2] = "2021-04-20T00:00:10" + lines[2][lines[2].index(","):]
    res = parse_telemetry("\n".join(lines))
    assert res.samples[1].timestamp - res.samples[0].timestamp == 10.0


def test_date_tags():
    assert date_tag_from_name("eps_2021-04-20.csv") == "2021-04-20"
    assert date_tag_from_name("20210705_log.csv") == "2021-07-05"
    assert date_tag_from_name("log_24.01.2022.csv") == "2022-01-24"
    assert date_tag_from_name("notes.csv") == ""


def test_one_discharge_segment_then_charging():
    samples = series([300.0] * 100 + [-200.0] * 100)
    segs = extract_discharge_segments(samples)
    assert len(segs) == 1 and len(segs[0]) == 100
    assert segs[0].dod[0] == 0.0 and np.all(np.diff(segs[0].dod) >= 0)


def test_all_charging_gives_no_segments():
    assert extract_discharge_segments(series([-100.0] * 50)) == []


def test_short_runs_dropped_and_gaps_split():
    samples = series([100.0] * 5 + [-1.0] + [100.0] * 30)
    assert [len(s) for s in extract_discharge_segments(samples)] == [30]
    t = [10.0 * k for k in range(20)] + [10.0 * k + 1000.0 for k in range(20, 40)]
    gapped = [make_sample(tk, 100.0) for tk in t]
    assert [len(s) for s in extract_discharge_segments(gapped)] == [20, 20]
    assert len(extract_discharge_segments(gapped, SegmentPolicy(max_gap=2000.0))) == 1


def test_unordered_input_rejected():
    samples = series([100.0] * 20)
    samples[5], samples[6] = samples[6], samples[5]
    with pytest.raises(ValidationError):
        extract_discharge_segments(samples)


def test_dates_never_share_a_segment():
    a = series([100.0] * 15, date="2021-01-01")
    b = series([100.0] * 15, t0=150.0, date="2021-01-02")
    segs = extract_discharge_segments(a + b)
    assert [s.source_date for s in segs] == ["2021-01-01", "2021-01-02"]


def test_outlier_free_segment_unchanged():
    seg = extract_discharge_segments(series(np.linspace(5.0, 475.0, 40)))[0]
    kept, rejected = filter_outliers(seg)
    assert kept is seg and rejected == []


def test_negative_sample_mid_discharge_removed():
    currents = [300.0] * 20
    currents[10] = -50.0
    seg = extract_discharge_segments(series(currents), SegmentPolicy(discharge_threshold=-100.0))[0]
    kept, rejected = filter_outliers(seg)
    assert len(kept) == len(seg) - 1
    assert rejected == [seg.samples[10]]
    assert kept.rejected_count == 1
    # DOD is re-integrated over the kept samples, bridging the hole
    assert kept.dod[-1] == pytest.approx(300.0 * 190.0 / 3600.0, rel=1e-12)


def test_high_current_rejected_and_all_rejected_error():
    seg = extract_discharge_segments(series([100.0] * 10 + [800.0] * 5 + [100.0] * 10))[0]
    kept, rejected = filter_outliers(seg)
    assert len(rejected) == 5 and max(kept.currents) == 100.0
    hot = extract_discharge_segments(series([900.0] * 12))[0]
    with pytest.raises(EmptySegmentError):
        filter_outliers(hot)
    out, rej = filter_segments([seg, hot])
    assert len(out) == 1 and len(rej) == 5 + 12


def test_upper_bound_inclusive():
    seg = extract_discharge_segments(series([500.0] * 10 + [500.01] * 2))[0]
    kept, rejected = filter_outliers(seg, OutlierPolicy(0.0, 500.0))
    assert len(kept) == 10 and len(rejected) == 2


def test_sample_accounting():
    rng = np.random.default_rng(3)
    currents = rng.choice([-150.0, 120.0, 350.0, 700.0], size=600, p=[0.3, 0.3, 0.3, 0.1])
    samples = series(currents)
    segs = extract_discharge_segments(samples, SegmentPolicy(min_length=2))
    kept, rejected = filter_segments(segs)
    in_segs = sum(len(s) for s in segs)
    non_discharge = len(samples) - in_segs
    assert sum(len(s) for s in kept) + len(rejected) + non_discharge == len(samples)
    for s in kept:
        assert s.currents.min() > 0.0 and s.currents.max() <= 500.0


def test_select_dates_drops_anomalous():
    segs = [extract_discharge_segments(series([100.0] * 10, date=d))[0]
            for d in ANOMALOUS_DATES + ("2021-04-20",)]
    assert [s.source_date for s in select_dates(segs)] == ["2021-04-20"]


def test_summary_constant_segment_zero_std():
    seg = extract_discharge_segments(series([0.0] * 1 + [200.0] * 12))[0]
    seg2 = type(seg)(seg.samples, np.zeros(len(seg)), seg.source_date)
    stats = summarize([seg2])
    assert stats.sample_count == 12
    for st_ in stats.features.values():
        assert st_.std == 0.0 and st_.min == st_.mean == st_.max


def test_summary_empty_raises():
    with pytest.raises(EmptyInputError):
        summarize([])


def test_summary_values_and_permutation_invariance():
    rng = np.random.default_rng(7)
    segs = [extract_discharge_segments(
        series(rng.uniform(50, 450, 30), voltage=4.0, date=f"2021-01-{k + 1:02d}"))[0]
        for k in range(5)]
    a, b = summarize(segs), summarize(segs[::-1])
    assert a == b
    cur = np.concatenate([s.currents for s in segs])
    assert a.features["batt_current"].mean == pytest.approx(cur.mean(), rel=1e-14)
    assert a.features["batt_current"].std == pytest.approx(cur.std(ddof=1), rel=1e-12)
    assert a.features["dod"].max == max(s.dod[-1] for s in segs)


def test_segments_round_trip_through_files():
    segs = extract_discharge_segments(
        series([100.0] * 12, date="2021-02-01") + series([0.0] + [200.0] * 15, date="2021-02-02"))
    text, entries = write_segments(segs)
    back = read_segments(text, entries)
    assert [b.samples for b in back] == [s.samples for s in segs]
    for b, s in zip(back, segs):
        np.testing.assert_array_equal(b.dod, s.dod)


def test_segment_dod_read_only():
    seg = extract_discharge_segments(series([100.0] * 10))[0]
    with pytest.raises(ValueError):
        seg.dod[0] = 1.0


_finite = st.floats(-1e4, 1e4, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(_finite, _finite, _finite, _finite), min_size=1, max_size=20))
def test_parse_serialize_parse_identity(rows):
    samples = [make_sample(10.0 * k, c, voltage=v, temp=t, panel_v=pv, date="2021-05-05")
               for k, (c, v, t, pv) in enumerate(rows)]
    first = parse_telemetry(write_telemetry(samples)).samples
    assert first == samples
    assert parse_telemetry(write_telemetry(first)).samples == first
