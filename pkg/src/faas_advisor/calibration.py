"""Measured cloud and system parameters for the estimation model.

Rates and the base overhead are memory dependent and stored as piecewise
linear curves over measured memory sizes.  Everything else is a scalar.
Calibration documents are JSON; see ``load_calibration`` for the schema.
"""

from __future__ import annotations

import bisect
import functools
import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

MIB_PER_VCPU = 1769
MAX_MEMORY_MIB = 10240
MIN_MEMORY_MIB = 128


class CalibrationError(ValueError):
    """Raised when a calibration document or curve is invalid."""


class InvalidMemoryError(ValueError):
    """Raised for memory sizes outside what a function can be configured with."""


def vcpu_allocation(memory_mib: float) -> float:
    """vCPUs granted to a function of ``memory_mib`` MiB (linear, capped at 10 GiB)."""
    if memory_mib < MIN_MEMORY_MIB:
        raise InvalidMemoryError(
            f"memory must be at least {MIN_MEMORY_MIB} MiB, got {memory_mib}"
        )
    return min(memory_mib, MAX_MEMORY_MIB) / MIB_PER_VCPU


@dataclass(frozen=True)
class RateCurve:
    """Piecewise linear curve over memory size, clamped outside the measured range.

    ``decreasing`` marks time-valued curves (base overhead) whose monotone
    direction is non-increasing in memory; rate curves are non-decreasing.
    """

    points: tuple[tuple[int, float], ...]
    decreasing: bool = False

    def __post_init__(self) -> None:
        pts = tuple((int(m), float(v)) for m, v in self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise CalibrationError("curve needs at least one point")
        for (m0, v0), (m1, v1) in zip(pts, pts[1:]):
            if m1 <= m0:
                raise CalibrationError(
                    f"curve memory sizes must be strictly increasing ({m0} then {m1})"
                )
            if (v1 > v0) if self.decreasing else (v1 < v0):
                raise CalibrationError(
                    f"curve is not monotone between {m0} and {m1} MiB"
                )
        for m, v in pts:
            if m <= 0:
                raise CalibrationError(f"memory size must be positive, got {m}")
            if self.decreasing:
                if v < 0 or not math.isfinite(v):
                    raise CalibrationError(f"curve value must be >= 0, got {v} at {m}")
            elif v <= 0 or not math.isfinite(v):
                raise CalibrationError(f"rate must be positive, got {v} at {m}")

    @property
    def memories(self) -> list[int]:
        return [m for m, _ in self.points]

    def __call__(self, memory_mib: float) -> float:
        return rate_at(self, memory_mib)


def monotonic_envelope(
    samples: Iterable[Sequence[float]], decreasing: bool = False
) -> RateCurve:
    """Sort ``(memory, value)`` samples and replace each value by the running max.

    With ``decreasing=True`` the running minimum is used instead, which is the
    right envelope for durations that shrink as memory grows.
    """
    pts = sorted((int(m), float(v)) for m, v in samples)
    if not pts:
        raise CalibrationError("cannot build a curve from no samples")
    mems = [m for m, _ in pts]
    if len(set(mems)) != len(mems):
        raise CalibrationError("duplicate memory size in samples")
    pick = min if decreasing else max
    out = []
    running = pts[0][1]
    for m, v in pts:
        running = pick(running, v)
        out.append((m, running))
    return RateCurve(tuple(out), decreasing=decreasing)


def rate_at(curve: RateCurve, memory_mib: float) -> float:
    """Linear interpolation on ``curve`` with end clamping."""
    pts = curve.points
    mems = curve.memories
    if memory_mib <= mems[0]:
        return pts[0][1]
    if memory_mib >= mems[-1]:
        return pts[-1][1]
    k = bisect.bisect_right(mems, memory_mib)
    (m0, v0), (m1, v1) = pts[k - 1], pts[k]
    frac = (memory_mib - m0) / (m1 - m0)
    value = v0 + frac * (v1 - v0)
    # guard against rounding pushing the value outside the bracket
    lo, hi = min(v0, v1), max(v0, v1)
    return min(max(value, lo), hi)


@dataclass(frozen=True)
class InvocationParams:
    """Worker invocation rates and delays.

    The HOT start delay is used unless ``cold`` is set.
    """

    driver_rate: float = 142.3
    worker_rate: float = 93.6
    delay_hot: float = 0.6777
    delay_cold: float = 1.2634
    two_level_threshold: int = 100
    startup_timeout: float = 20.0
    cold: bool = False

    def __post_init__(self) -> None:
        for name in ("driver_rate", "worker_rate", "delay_hot", "delay_cold", "startup_timeout"):
            if not getattr(self, name) > 0:
                raise CalibrationError(f"invocation.{name} must be positive")
        if self.two_level_threshold < 1:
            raise CalibrationError("invocation.two_level_threshold must be >= 1")

    @property
    def invocation_delay(self) -> float:
        return self.delay_cold if self.cold else self.delay_hot


@dataclass(frozen=True)
class RequestParams:
    """Storage request latencies and prices (USD per 1000 requests)."""

    head_duration: float = 0.0131
    get_duration: float = 0.0184
    heads_per_exchange_file: int = 3
    read_price_per_1000: float = 0.0004
    write_price_per_1000: float = 0.005

    def __post_init__(self) -> None:
        for name in (
            "head_duration",
            "get_duration",
            "heads_per_exchange_file",
            "read_price_per_1000",
            "write_price_per_1000",
        ):
            if getattr(self, name) < 0:
                raise CalibrationError(f"requests.{name} must be non-negative")


@functools.lru_cache(maxsize=None)
def _default_curves() -> dict[str, RateCurve]:
    doc = json.loads(
        resources.files("faas_advisor").joinpath("data/default_calibration.json").read_text()
    )
    return _parse_curves(doc["curves"])


@dataclass(frozen=True)
class CalibrationParams:
    invocation: InvocationParams = field(default_factory=InvocationParams)
    base_overhead: RateCurve = field(default_factory=lambda: _default_curves()["base_overhead"])
    network: RateCurve = field(default_factory=lambda: _default_curves()["network"])
    compress: RateCurve = field(default_factory=lambda: _default_curves()["compress"])
    process: RateCurve = field(default_factory=lambda: _default_curves()["process"])
    postprocess: float = 0.1885
    requests: RequestParams = field(default_factory=RequestParams)
    gib_second_price: float = 0.0000166667
    exchange_two_level_threshold: int = 32

    def __post_init__(self) -> None:
        if not self.base_overhead.decreasing:
            raise CalibrationError("base_overhead must be a non-increasing time curve")
        for name in ("network", "compress", "process"):
            if getattr(self, name).decreasing:
                raise CalibrationError(f"curves.{name} must be a non-decreasing rate curve")
        if self.postprocess < 0:
            raise CalibrationError("postprocess_s must be non-negative")
        if not self.gib_second_price > 0:
            raise CalibrationError("pricing.gib_second_usd must be positive")
        if self.exchange_two_level_threshold < 1:
            raise CalibrationError("exchange_two_level_threshold must be >= 1")

    def with_cold_start(self, cold: bool = True) -> CalibrationParams:
        return replace(self, invocation=replace(self.invocation, cold=cold))


# --- JSON (de)serialisation -------------------------------------------------

_INVOCATION_KEYS = {
    "driver_rate": "driver_rate",
    "worker_rate": "worker_rate",
    "delay_hot_s": "delay_hot",
    "delay_cold_s": "delay_cold",
    "two_level_threshold": "two_level_threshold",
    "startup_timeout_s": "startup_timeout",
}
_REQUEST_KEYS = {
    "head_s": "head_duration",
    "get_s": "get_duration",
    "heads_per_file": "heads_per_exchange_file",
    "read_price_per_1000": "read_price_per_1000",
    "write_price_per_1000": "write_price_per_1000",
}
_CURVE_KEYS = ("network", "compress", "process", "base_overhead")
_TOP_KEYS = {
    "invocation",
    "curves",
    "requests",
    "pricing",
    "postprocess_s",
    "exchange_two_level_threshold",
    "_comment",
}
_INT_FIELDS = {"two_level_threshold", "heads_per_exchange_file"}


def _reject_unknown(section: Mapping[str, Any], allowed: Iterable[str], where: str) -> None:
    unknown = set(section) - set(allowed)
    if unknown:
        raise CalibrationError(f"unknown key(s) in {where}: {sorted(unknown)}")


def _number(value: Any, where: str, integer: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise CalibrationError(f"{where} must be a number, got {value!r}")
    if integer:
        if int(value) != value:
            raise CalibrationError(f"{where} must be an integer, got {value!r}")
        return int(value)
    return float(value)


def _parse_curves(section: Mapping[str, Any]) -> dict[str, RateCurve]:
    _reject_unknown(section, _CURVE_KEYS, "curves")
    out = {}
    for name, raw in section.items():
        where = f"curves.{name}"
        if not isinstance(raw, list) or not raw:
            raise CalibrationError(f"{where} must be a non-empty list of [memory_mib, value]")
        samples = []
        for pair in raw:
            if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                raise CalibrationError(f"{where} entries must be [memory_mib, value] pairs")
            m = _number(pair[0], f"{where} memory", integer=True)
            v = _number(pair[1], f"{where} value")
            if m <= 0:
                raise CalibrationError(f"{where} memory sizes must be positive")
            if name == "base_overhead":
                if v < 0:
                    raise CalibrationError(f"{where} values must be non-negative")
            elif v <= 0:
                raise CalibrationError(f"{where} rates must be positive")
            samples.append((m, v))
        mems = [m for m, _ in samples]
        if mems != sorted(mems) or len(set(mems)) != len(mems):
            raise CalibrationError(f"{where} memory sizes must be strictly increasing")
        try:
            out[name] = monotonic_envelope(samples, decreasing=name == "base_overhead")
        except CalibrationError as exc:
            raise CalibrationError(f"{where}: {exc}") from None
    return out


def _parse_section(
    raw: Any, keymap: Mapping[str, str], where: str
) -> dict[str, Any]:
    if not isinstance(raw, Mapping):
        raise CalibrationError(f"{where} must be an object")
    _reject_unknown(raw, keymap, where)
    kwargs: dict[str, Any] = {}
    for key, value in raw.items():
        attr = keymap[key]
        num = _number(value, f"{where}.{key}", integer=attr in _INT_FIELDS)
        kwargs[attr] = num
    return kwargs


def calibration_from_dict(doc: Mapping[str, Any]) -> CalibrationParams:
    """Build validated parameters from an already-parsed calibration document."""
    if not isinstance(doc, Mapping):
        raise CalibrationError("calibration document must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "calibration")
    kwargs: dict[str, Any] = {}

    if "invocation" in doc:
        inv = dict(doc["invocation"]) if isinstance(doc["invocation"], Mapping) else doc["invocation"]
        start = inv.pop("start", "hot") if isinstance(inv, dict) else "hot"
        if start not in ("hot", "cold"):
            raise CalibrationError("invocation.start must be 'hot' or 'cold'")
        inv_kwargs = _parse_section(inv, _INVOCATION_KEYS, "invocation")
        for key, attr in _INVOCATION_KEYS.items():
            if attr in inv_kwargs and inv_kwargs[attr] <= 0:
                raise CalibrationError(f"invocation.{key} must be positive")
        kwargs["invocation"] = InvocationParams(**inv_kwargs, cold=start == "cold")

    if "requests" in doc:
        req_kwargs = _parse_section(doc["requests"], _REQUEST_KEYS, "requests")
        for key, attr in _REQUEST_KEYS.items():
            if req_kwargs.get(attr, 0) < 0:
                raise CalibrationError(f"requests.{key} must be non-negative")
        kwargs["requests"] = RequestParams(**req_kwargs)

    if "curves" in doc:
        if not isinstance(doc["curves"], Mapping):
            raise CalibrationError("curves must be an object")
        kwargs.update(_parse_curves(doc["curves"]))

    if "pricing" in doc:
        pricing = doc["pricing"]
        if not isinstance(pricing, Mapping):
            raise CalibrationError("pricing must be an object")
        _reject_unknown(pricing, {"gib_second_usd"}, "pricing")
        if "gib_second_usd" in pricing:
            price = _number(pricing["gib_second_usd"], "pricing.gib_second_usd")
            if price <= 0:
                raise CalibrationError("pricing.gib_second_usd must be positive")
            kwargs["gib_second_price"] = price

    if "postprocess_s" in doc:
        post = _number(doc["postprocess_s"], "postprocess_s")
        if post < 0:
            raise CalibrationError("postprocess_s must be non-negative")
        kwargs["postprocess"] = post

    if "exchange_two_level_threshold" in doc:
        kwargs["exchange_two_level_threshold"] = _number(
            doc["exchange_two_level_threshold"], "exchange_two_level_threshold", integer=True
        )

    try:
        return CalibrationParams(**kwargs)
    except CalibrationError:
        raise
    except (TypeError, ValueError) as exc:
        raise CalibrationError(str(exc)) from None


def load_calibration(source: str | Path | Mapping[str, Any] | None = None) -> CalibrationParams:
    """Load a calibration document.

    ``source`` may be a path, a JSON string, an already-parsed mapping, or
    ``None`` for the shipped defaults.  Absent fields take default values;
    unknown keys are rejected.
    """
    if source is None:
        return CalibrationParams()
    if isinstance(source, Mapping):
        return calibration_from_dict(source)
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        text = Path(source).read_text()
    else:
        text = source
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise CalibrationError(f"calibration is not valid JSON: {exc}") from None
    return calibration_from_dict(doc)


def dump_calibration(params: CalibrationParams) -> dict[str, Any]:
    """Inverse of :func:`calibration_from_dict`."""
    inv = params.invocation
    req = params.requests
    return {
        "invocation": {
            "driver_rate": inv.driver_rate,
            "worker_rate": inv.worker_rate,
            "delay_hot_s": inv.delay_hot,
            "delay_cold_s": inv.delay_cold,
            "two_level_threshold": inv.two_level_threshold,
            "startup_timeout_s": inv.startup_timeout,
            "start": "cold" if inv.cold else "hot",
        },
        "curves": {
            name: [[m, v] for m, v in getattr(params, name).points] for name in _CURVE_KEYS
        },
        "requests": {
            "head_s": req.head_duration,
            "get_s": req.get_duration,
            "heads_per_file": req.heads_per_exchange_file,
            "read_price_per_1000": req.read_price_per_1000,
            "write_price_per_1000": req.write_price_per_1000,
        },
        "pricing": {"gib_second_usd": params.gib_second_price},
        "postprocess_s": params.postprocess,
        "exchange_two_level_threshold": params.exchange_two_level_threshold,
    }
