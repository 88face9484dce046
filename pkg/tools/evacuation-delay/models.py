"""
Domain types for the Evacuation Delay toolkit.

Holds the scenario value types shared by every other module, the error
hierarchy, and the JSON scenario file codec. All types are frozen
dataclasses validated on construction, so a ScenarioParams that exists is
a valid one.
"""

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from config import DEFAULT_DELTA_MAX_MS, DEFAULT_O_MAX

logger = logging.getLogger(__name__)

HOURS_PER_DAY = 24.0


# =============================================================================
# Errors
# =============================================================================

class EvacuationModelError(ValueError):
    """Base class for every domain error raised by the toolkit."""


class ScenarioValidationError(EvacuationModelError):
    """Invalid parameters, malformed scenario files or duplicate ids."""


class UnknownEntityError(ScenarioValidationError, KeyError):
    """Lookup of a PU or SU id that is not in the interference database."""

    def __str__(self):
        return ValueError.__str__(self)


class InstabilityError(EvacuationModelError):
    """Offered load rho >= C in an operation that needs a stable queue."""


class GridOverflowError(EvacuationModelError):
    """Composed distribution has too much mass beyond the grid upper bound."""


class ReportError(EvacuationModelError):
    """Nothing to report, or the report path cannot be written."""


def _require(condition, message):
    if not condition:
        raise ScenarioValidationError(message)


def _finite(value, name):
    _require(isinstance(value, (int, float)) and math.isfinite(value),
             f"{name} must be a finite number, got {value!r}")


# =============================================================================
# Geometry / Spatial Types
# =============================================================================

@dataclass(frozen=True)
class Point2D:
    x: float
    y: float

    def __post_init__(self):
        _finite(self.x, "Point2D.x")
        _finite(self.y, "Point2D.y")


@dataclass(frozen=True)
class SpatialParams:
    """Densities (users per m^2), guard-zone radius and region extent (m)."""

    lambda_s: float
    lambda_p: float
    r_p: float = 130.0
    region_width: float = 2000.0
    region_height: float = 2000.0

    def __post_init__(self):
        for name in ("lambda_s", "lambda_p", "r_p", "region_width", "region_height"):
            _finite(getattr(self, name), f"spatial.{name}")
        _require(self.lambda_s >= 0, "spatial.lambda_s must be >= 0")
        _require(self.lambda_p >= 0, "spatial.lambda_p must be >= 0")
        _require(self.r_p > 0, "spatial.r_p must be > 0")
        _require(self.region_width > 0 and self.region_height > 0,
                 "spatial region dimensions must be > 0")

    @property
    def area(self):
        return self.region_width * self.region_height


@dataclass(frozen=True)
class ProtectionRequirement:
    """Pr(evacuation delay <= delta_max) >= o_max, delta_max in ms."""

    delta_max: float = DEFAULT_DELTA_MAX_MS
    o_max: float = DEFAULT_O_MAX

    def __post_init__(self):
        _finite(self.delta_max, "protection.delta_max")
        _finite(self.o_max, "protection.o_max")
        _require(self.delta_max > 0, "protection.delta_max must be > 0")
        _require(0.0 <= self.o_max <= 1.0, "protection.o_max must be in [0, 1]")


def delta_max_from_zapping(zapping_time_ms, acceptable_increase):
    """
    Deadline implied by tolerating a fractional increase of the TV zapping time.

    Args:
        zapping_time_ms: Time the TV set takes to buffer and decode (ms)
        acceptable_increase: Tolerated relative increase, e.g. 0.1 for 10%

    Returns:
        Evacuation deadline in ms
    """
    _require(zapping_time_ms > 0, "zapping time must be > 0")
    _require(0 < acceptable_increase <= 1, "acceptable increase must be in (0, 1]")
    return zapping_time_ms * acceptable_increase


# =============================================================================
# Traffic Types
# =============================================================================

@dataclass(frozen=True)
class HutProfile:
    """
    Household-Using-Television curve phi(t): fraction of active receivers.

    Stored as (hour, phi) knots interpolated linearly on a 24 h circle, so the
    evening peak decays back to the early-morning trough across midnight.
    """

    knots: tuple = ((4.0, 0.05), (20.0, 0.60))

    def __post_init__(self):
        knots = tuple((float(h), float(v)) for h, v in self.knots)
        _require(len(knots) >= 1, "hut_profile needs at least one knot")
        hours = [h for h, _ in knots]
        _require(all(0.0 <= h < HOURS_PER_DAY for h in hours),
                 "hut_profile knot hours must be in [0, 24)")
        _require(len(set(hours)) == len(hours), "hut_profile knot hours must be unique")
        _require(all(0.0 <= v <= 1.0 for _, v in knots),
                 "hut_profile values must be in [0, 1]")
        object.__setattr__(self, "knots", tuple(sorted(knots)))

    @classmethod
    def constant(cls, phi):
        return cls(knots=((0.0, phi),))

    @property
    def is_constant(self):
        return len({v for _, v in self.knots}) == 1

    def evaluate(self, hour):
        """phi at time(s) of day in hours, wrapped into [0, 24)."""
        wrapped = np.asarray(hour, dtype=float) % HOURS_PER_DAY
        if len(self.knots) == 1:
            phi = np.full(wrapped.shape, self.knots[0][1])
        else:
            hours = np.array([h for h, _ in self.knots])
            values = np.array([v for _, v in self.knots])
            phi = np.interp(wrapped, hours, values, period=HOURS_PER_DAY)
        return float(phi) if phi.ndim == 0 else phi

    def peak(self):
        return max(v for _, v in self.knots)

    def to_dict(self):
        if len(self.knots) == 1 and self.knots[0][0] == 0.0:
            return {"constant": self.knots[0][1]}
        return {"knots": [[h, v] for h, v in self.knots]}

    @classmethod
    def from_dict(cls, data):
        if isinstance(data, (int, float)):
            return cls.constant(float(data))
        _require(isinstance(data, dict), "hut_profile must be an object or a number")
        if "constant" in data:
            return cls.constant(float(data["constant"]))
        return cls(knots=tuple(tuple(k) for k in data.get("knots", [])))


@dataclass(frozen=True)
class ChannelPopularity:
    """Law used to draw the channel a zapping viewer tunes to."""

    law: str = "uniform"
    s: float = 1.0

    def __post_init__(self):
        _require(self.law in ("uniform", "zipf"),
                 f"channel popularity law must be 'uniform' or 'zipf', got {self.law!r}")
        _require(self.s >= 0, "zipf exponent must be >= 0")

    def weights(self, n_channels):
        """Normalized probabilities for channels 1..n_channels."""
        if self.law == "uniform":
            return np.full(n_channels, 1.0 / n_channels)
        ranks = np.arange(1, n_channels + 1, dtype=float)
        w = ranks ** (-self.s)
        return w / w.sum()


@dataclass(frozen=True)
class TrafficParams:
    """Registered receivers / links, channel holding time (s) and usage curve."""

    M: int
    N: int
    E_B: float = 600.0
    hut_profile: HutProfile = field(default_factory=HutProfile)
    n_channels: int = 20
    p_evac: float = 0.1
    popularity: ChannelPopularity = field(default_factory=ChannelPopularity)

    def __post_init__(self):
        _require(float(self.M).is_integer() and self.M >= 0, "traffic.M must be an integer >= 0")
        _require(float(self.N).is_integer() and self.N >= 1, "traffic.N must be an integer >= 1")
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "N", int(self.N))
        _finite(self.E_B, "traffic.E_B")
        _require(self.E_B > 0, "traffic.E_B must be > 0")
        _require(float(self.n_channels).is_integer() and self.n_channels >= 1,
                 "traffic.n_channels must be an integer >= 1")
        object.__setattr__(self, "n_channels", int(self.n_channels))
        _require(0.0 <= self.p_evac <= 1.0, "traffic.p_evac must be in [0, 1]")

    def phi(self, hour):
        return self.hut_profile.evaluate(hour)


# =============================================================================
# Latency Types
# =============================================================================

@dataclass(frozen=True)
class NetworkParams:
    """
    Linear-stochastic network latency: a*x + b + N(0, sigma2), in ms.

    fixed_rtt_override replaces a*x + b when set; rtt_range_ms records the
    band of round-trip figures quoted for the scenario.
    """

    a: float = 0.022
    b: float = 4.862
    sigma2: float = 0.907
    fixed_rtt_override: Optional[float] = None
    rtt_range_ms: Optional[tuple] = None

    def __post_init__(self):
        _finite(self.a, "net.a")
        _finite(self.b, "net.b")
        _finite(self.sigma2, "net.sigma2")
        _require(self.sigma2 >= 0, "net.sigma2 must be >= 0")
        _require(self.b >= 0, "net.b must be >= 0")
        if self.fixed_rtt_override is not None:
            _finite(self.fixed_rtt_override, "net.fixed_rtt_override")
            _require(self.fixed_rtt_override >= 0, "net.fixed_rtt_override must be >= 0")
        if self.rtt_range_ms is not None:
            lo, hi = (float(v) for v in self.rtt_range_ms)
            _require(0 <= lo <= hi, "net.rtt_range_ms must be an ordered pair of values >= 0")
            object.__setattr__(self, "rtt_range_ms", (lo, hi))


@dataclass(frozen=True)
class HandoverParams:
    """Handover delay f + U(0, l_f), in ms."""

    f: float = 20.0
    l_f: float = 20.0

    def __post_init__(self):
        _finite(self.f, "handover.f")
        _finite(self.l_f, "handover.l_f")
        _require(self.f >= 0 and self.l_f >= 0, "handover.f and handover.l_f must be >= 0")


SERVICE_DISTRIBUTIONS = ("formula", "exponential", "deterministic")


@dataclass(frozen=True)
class ServiceTimeParams:
    """
    Spectrum-manager job service time parameters (ms).

    g, h, l_mean, l_var drive the database-size formula; tau drives the
    exponential approximation with mean tau * E(n); per_query_ms and
    records_touched drive the back-of-envelope per-job estimate.
    """

    g: float = 0.0
    h: float = 0.0
    l_mean: float = 0.0
    l_var: float = 0.0
    tau: float = 0.6
    per_query_ms: float = 6.0
    records_touched: float = 200.0
    distribution: str = "formula"

    def __post_init__(self):
        for name in ("g", "h", "l_mean", "l_var", "tau", "per_query_ms", "records_touched"):
            value = getattr(self, name)
            _finite(value, f"service.{name}")
            _require(value >= 0, f"service.{name} must be >= 0")
        _require(self.distribution in SERVICE_DISTRIBUTIONS,
                 f"service.distribution must be one of {SERVICE_DISTRIBUTIONS}")


# =============================================================================
# Scenario
# =============================================================================

@dataclass(frozen=True)
class ScenarioParams:
    """One spectrum-manager architecture, fully parameterized."""

    name: str
    spatial: SpatialParams
    traffic: TrafficParams
    protection: ProtectionRequirement = field(default_factory=ProtectionRequirement)
    processors: int = 1
    net: NetworkParams = field(default_factory=NetworkParams)
    handover: HandoverParams = field(default_factory=HandoverParams)
    service: ServiceTimeParams = field(default_factory=ServiceTimeParams)
    distance_x: float = 0.0
    interval_report: bool = False
    description: str = ""

    def __post_init__(self):
        _require(isinstance(self.name, str) and self.name, "scenario name must be a non-empty string")
        _require(float(self.processors).is_integer() and self.processors >= 1,
                 "processors (C) must be an integer >= 1")
        object.__setattr__(self, "processors", int(self.processors))
        _finite(self.distance_x, "distance_x")
        _require(self.distance_x >= 0, "distance_x must be >= 0")

    @property
    def C(self):
        return self.processors

    def evolve(self, **changes):
        """Copy with top-level fields replaced (validated again)."""
        return replace(self, **changes)


# =============================================================================
# Scenario File Codec
# =============================================================================

_SECTION_TYPES = {
    "spatial": SpatialParams,
    "protection": ProtectionRequirement,
    "net": NetworkParams,
    "handover": HandoverParams,
    "service": ServiceTimeParams,
}


def _section_to_dict(obj):
    data = {}
    for f in fields(obj):
        value = getattr(obj, f.name)
        if isinstance(value, tuple):
            value = list(value)
        data[f.name] = value
    return data


def _section_from_dict(cls, data, section):
    _require(isinstance(data, dict), f"section '{section}' must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    _require(not unknown, f"unknown field(s) in '{section}': {sorted(unknown)}")
    try:
        return cls(**data)
    except TypeError as e:
        raise ScenarioValidationError(f"section '{section}': {e}") from e


def scenario_to_dict(scenario):
    """Serialize a ScenarioParams to a JSON-compatible dict (fixed key order)."""
    traffic = scenario.traffic
    return {
        "name": scenario.name,
        "description": scenario.description,
        "processors": scenario.processors,
        "distance_x": scenario.distance_x,
        "interval_report": scenario.interval_report,
        "spatial": _section_to_dict(scenario.spatial),
        "traffic": {
            "M": traffic.M,
            "N": traffic.N,
            "E_B": traffic.E_B,
            "hut_profile": traffic.hut_profile.to_dict(),
            "n_channels": traffic.n_channels,
            "p_evac": traffic.p_evac,
            "popularity": {"law": traffic.popularity.law, "s": traffic.popularity.s},
        },
        "protection": _section_to_dict(scenario.protection),
        "net": _section_to_dict(scenario.net),
        "handover": _section_to_dict(scenario.handover),
        "service": _section_to_dict(scenario.service),
    }


def scenario_from_dict(data):
    """
    Build a validated ScenarioParams from a scenario document.

    Args:
        data: Dict parsed from a scenario file

    Returns:
        ScenarioParams

    Raises:
        ScenarioValidationError: missing/unknown fields or invalid values
    """
    _require(isinstance(data, dict), "scenario document must be an object")
    allowed = {"name", "description", "processors", "distance_x", "interval_report",
               "spatial", "traffic", "protection", "net", "handover", "service"}
    unknown = set(data) - allowed
    _require(not unknown, f"unknown scenario field(s): {sorted(unknown)}")
    for key in ("name", "spatial", "traffic"):
        _require(key in data, f"scenario is missing required field '{key}'")

    sections = {}
    for key, cls in _SECTION_TYPES.items():
        if key in data:
            sections[key] = _section_from_dict(cls, data[key], key)

    _require(isinstance(data["traffic"], dict), "section 'traffic' must be an object")
    raw_traffic = dict(data["traffic"])
    if "hut_profile" in raw_traffic:
        raw_traffic["hut_profile"] = HutProfile.from_dict(raw_traffic["hut_profile"])
    if "popularity" in raw_traffic:
        raw_traffic["popularity"] = _section_from_dict(
            ChannelPopularity, raw_traffic["popularity"], "traffic.popularity")
    traffic = _section_from_dict(TrafficParams, raw_traffic, "traffic")

    return ScenarioParams(
        name=data["name"],
        description=data.get("description", ""),
        processors=data.get("processors", 1),
        distance_x=data.get("distance_x", 0.0),
        interval_report=bool(data.get("interval_report", False)),
        traffic=traffic,
        **sections,
    )


def load_scenario(path):
    """Load one scenario file (JSON)."""
    path = Path(path)
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except OSError as e:
        raise ScenarioValidationError(f"cannot read scenario file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ScenarioValidationError(f"scenario file {path} is not valid JSON: {e}") from e

    scenario = scenario_from_dict(data)
    logger.info(f"Loaded scenario '{scenario.name}' from {path}")
    return scenario


def save_scenario(scenario, path):
    """Write a scenario file; returns the path written."""
    path = Path(path)
    with open(path, 'w') as f:
        json.dump(scenario_to_dict(scenario), f, indent=2)
        f.write("\n")
    logger.info(f"Saved scenario '{scenario.name}' to {path}")
    return path


def config_digest(scenario):
    """Stable sha256 digest of a scenario's canonical JSON form."""
    canonical = json.dumps(scenario_to_dict(scenario), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
