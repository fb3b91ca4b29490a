import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from faas_advisor.calibration import (
    CalibrationError,
    CalibrationParams,
    InvalidMemoryError,
    RateCurve,
    dump_calibration,
    load_calibration,
    monotonic_envelope,
    rate_at,
    vcpu_allocation,
)


@pytest.mark.parametrize(
    "memory, expected, tol",
    [(1769, 1.00, 1e-12), (1024, 0.58, 0.01), (20480, 5.79, 0.02), (10240, 5.79, 0.02)],
)
def test_vcpu_anchor_points(memory, expected, tol):
    assert vcpu_allocation(memory) == pytest.approx(expected, abs=tol)


def test_vcpu_rejects_tiny_memory():
    with pytest.raises(InvalidMemoryError):
        vcpu_allocation(64)


@given(st.integers(128, 30000), st.integers(128, 30000))
def test_vcpu_non_decreasing(a, b):
    lo, hi = sorted((a, b))
    assert vcpu_allocation(lo) <= vcpu_allocation(hi)
    if lo >= 10240:
        assert vcpu_allocation(lo) == vcpu_allocation(hi)


def test_envelope_running_max():
    curve = monotonic_envelope([(512, 40), (1024, 78), (1536, 70), (2048, 80)])
    assert curve.points == ((512, 40.0), (1024, 78.0), (1536, 78.0), (2048, 80.0))


def test_envelope_sorts_and_keeps_monotone_input():
    pts = [(2048, 80.0), (512, 40.0), (1024, 78.0)]
    assert monotonic_envelope(pts).points == ((512, 40.0), (1024, 78.0), (2048, 80.0))


def test_envelope_single_point():
    assert monotonic_envelope([(1024, 78.7)]).points == ((1024, 78.7),)


def test_envelope_decreasing_running_min():
    curve = monotonic_envelope([(512, 0.4), (1024, 0.45), (2048, 0.2)], decreasing=True)
    assert curve.points == ((512, 0.4), (1024, 0.4), (2048, 0.2))


def test_envelope_errors():
    with pytest.raises(CalibrationError):
        monotonic_envelope([])
    with pytest.raises(CalibrationError):
        monotonic_envelope([(512, 1.0), (512, 2.0)])


def test_rate_at_interpolation_and_clamping():
    curve = RateCurve(((1024, 78.7), (4096, 82.1)))
    assert rate_at(curve, 1024) == 78.7
    assert rate_at(curve, 512) == 78.7
    assert rate_at(curve, 8192) == 82.1
    assert rate_at(curve, 2560) == pytest.approx(80.4, abs=0.05)


def test_rate_curve_rejects_unordered_points():
    with pytest.raises(CalibrationError):
        RateCurve(((2048, 80.0), (1024, 78.7)))
    with pytest.raises(CalibrationError):
        RateCurve(((1024, 80.0), (2048, 78.7)))


samples = st.lists(
    st.tuples(st.integers(128, 10240), st.floats(0.1, 500, allow_nan=False)),
    min_size=1,
    max_size=20,
    unique_by=lambda p: p[0],
)


@settings(max_examples=300)
@given(samples, st.booleans())
def test_envelope_idempotent(pts, decreasing):
    once = monotonic_envelope(pts, decreasing)
    assert monotonic_envelope(once.points, decreasing) == once


@settings(max_examples=300)
@given(samples, st.floats(0, 12000), st.floats(0, 12000))
def test_rate_at_monotone(pts, a, b):
    curve = monotonic_envelope(pts)
    lo, hi = sorted((a, b))
    assert rate_at(curve, lo) <= rate_at(curve, hi)


def test_shipped_defaults_hit_quoted_anchors():
    cal = CalibrationParams()
    assert rate_at(cal.network, 1024) == 78.7
    assert cal.network.points[-1][1] == 82.1
    assert rate_at(cal.process, 2048) == 75.2
    assert cal.process.points[-1][1] == 77.5
    assert rate_at(cal.compress, 2048) == 85.0
    assert cal.compress.points[-1][1] == 86.0
    assert cal.invocation.invocation_delay == 0.6777
    assert cal.with_cold_start().invocation.invocation_delay == 1.2634
    assert cal.postprocess == 0.1885
    assert cal.gib_second_price == 0.0000166667
    assert cal.exchange_two_level_threshold == 32
    assert cal.invocation.two_level_threshold == 100
    assert cal.invocation.startup_timeout == 20.0


def test_load_echoes_values():
    doc = {"invocation": {"driver_rate": 142.3, "worker_rate": 93.6, "delay_hot_s": 0.6777}}
    cal = load_calibration(json.dumps(doc))
    assert cal.invocation.driver_rate == 142.3
    assert cal.invocation.worker_rate == 93.6
    assert cal.invocation.invocation_delay == 0.6777


def test_load_empty_document_gives_defaults():
    assert load_calibration("{}") == CalibrationParams()
    assert load_calibration({}) == CalibrationParams()


def test_load_applies_envelope_to_curves():
    cal = load_calibration({"curves": {"network": [[512, 40], [1024, 78], [1536, 70]]}})
    assert cal.network.points == ((512, 40.0), (1024, 78.0), (1536, 78.0))


@pytest.mark.parametrize(
    "doc, field",
    [
        ({"invocation": {"driver_rate": -1.0}}, "invocation.driver_rate"),
        ({"curves": {"network": [[512, -3.0]]}}, "curves.network"),
        ({"curves": {"compress": [[1024, 5.0], [512, 6.0]]}}, "curves.compress"),
        ({"requests": {"head_s": -0.1}}, "requests.head_s"),
        ({"pricing": {"gib_second_usd": 0}}, "pricing.gib_second_usd"),
        ({"bogus": 1}, "bogus"),
        ({"requests": {"tail_s": 1}}, "tail_s"),
        ({"invocation": {"worker_rate": "fast"}}, "invocation.worker_rate"),
    ],
)
def test_load_errors_name_the_field(doc, field):
    with pytest.raises(CalibrationError, match=field.replace(".", r"\.")):
        load_calibration(doc)


def test_load_from_file(tmp_path):
    path = tmp_path / "cal.json"
    path.write_text(json.dumps({"postprocess_s": 0.25}))
    assert load_calibration(path).postprocess == 0.25
    assert load_calibration(str(path)).postprocess == 0.25


def test_invalid_json():
    with pytest.raises(CalibrationError):
        load_calibration("{not json")


def test_dump_round_trip_defaults():
    cal = CalibrationParams()
    assert load_calibration(dump_calibration(cal)) == cal
    assert load_calibration(json.dumps(dump_calibration(cal))) == cal
    cold = cal.with_cold_start()
    assert load_calibration(dump_calibration(cold)) == cold


positive = st.floats(0.01, 1000, allow_nan=False)


@settings(max_examples=100)
@given(
    driver=positive,
    worker=positive,
    delay=positive,
    thr=st.integers(1, 500),
    heads=st.integers(0, 10),
    curve=samples,
    base=samples,
    cold=st.booleans(),
)
def test_dump_round_trip_random(driver, worker, delay, thr, heads, curve, base, cold):
    doc = {
        "invocation": {
            "driver_rate": driver, "worker_rate": worker, "delay_hot_s": delay,
            "two_level_threshold": thr, "start": "cold" if cold else "hot",
        },
        "curves": {
            "network": [list(p) for p in sorted(curve)],
            "base_overhead": [list(p) for p in sorted(base)],
        },
        "requests": {"heads_per_file": heads},
    }
    cal = load_calibration(doc)
    assert load_calibration(json.loads(json.dumps(dump_calibration(cal)))) == cal
