"""
One-dimensional nonnegative delay laws.

A DelayDistribution is held in one of three representations:

    analytic  - a named family (point mass, clamped Gaussian, uniform,
                exponential, M/M/C response-time mixture)
    grid      - cell masses on a uniform grid; cell i is centered at i*step
                and its mass is spread evenly over [(i-1/2)step, (i+1/2)step]
    samples   - empirical draws

Sums of independent delays are computed by discretized convolution on a
common grid.
"""

import json
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
import pandas as pd
from scipy import signal, stats

from config import (
    GRID_STEP_MS,
    GRID_MIN_UPPER_MS,
    GRID_MEAN_MULTIPLE,
    GRID_OVERFLOW_TOLERANCE,
    REPORT_DECIMALS,
)
from models import GridOverflowError, ReportError, ScenarioValidationError

logger = logging.getLogger(__name__)

ANALYTIC = "analytic"
GRID = "grid"
SAMPLES = "samples"

# Allowed deviation of a grid PDF's total mass from 1
GRID_MASS_TOLERANCE = 1e-4


def _check_quantile(q):
    if not 0.0 < q < 1.0:
        raise ScenarioValidationError(f"quantile must be in (0, 1), got {q}")


# =============================================================================
# Analytic Families
# =============================================================================

@dataclass(frozen=True)
class PointMass:
    value: float

    def __post_init__(self):
        if self.value < 0:
            raise ScenarioValidationError("point mass must be at a delay >= 0")

    def mean(self):
        return float(self.value)

    def variance(self):
        return 0.0

    def cdf(self, t):
        return np.where(np.asarray(t, dtype=float) >= self.value, 1.0, 0.0)

    def ppf(self, q):
        _check_quantile(q)
        return float(self.value)

    def rvs(self, rng, size=None):
        return float(self.value) if size is None else np.full(size, float(self.value))


@dataclass(frozen=True)
class Gaussian:
    """N(loc, sigma2) clamped below at 0: negative draws become exactly 0."""

    loc: float
    sigma2: float

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ScenarioValidationError("Gaussian variance must be >= 0")

    @property
    def _sigma(self):
        return math.sqrt(self.sigma2)

    def _z(self):
        return self.loc / self._sigma

    def mean(self):
        if self.sigma2 == 0:
            return max(self.loc, 0.0)
        z = self._z()
        return float(self.loc * stats.norm.cdf(z) + self._sigma * stats.norm.pdf(z))

    def variance(self):
        if self.sigma2 == 0:
            return 0.0
        z = self._z()
        second = ((self.loc ** 2 + self.sigma2) * stats.norm.cdf(z)
                  + self.loc * self._sigma * stats.norm.pdf(z))
        return float(second - self.mean() ** 2)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        if self.sigma2 == 0:
            return np.where(t >= max(self.loc, 0.0), 1.0, 0.0)
        return np.where(t < 0, 0.0, stats.norm.cdf(t, loc=self.loc, scale=self._sigma))

    def ppf(self, q):
        _check_quantile(q)
        if self.sigma2 == 0:
            return max(self.loc, 0.0)
        return max(0.0, float(stats.norm.ppf(q, loc=self.loc, scale=self._sigma)))

    def rvs(self, rng, size=None):
        draws = np.maximum(rng.normal(self.loc, self._sigma, size=size), 0.0)
        return float(draws) if size is None else draws


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def __post_init__(self):
        if not 0 <= self.low <= self.high:
            raise ScenarioValidationError("uniform support must satisfy 0 <= low <= high")

    def mean(self):
        return (self.low + self.high) / 2.0

    def variance(self):
        return (self.high - self.low) ** 2 / 12.0

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        if self.high == self.low:
            return np.where(t >= self.low, 1.0, 0.0)
        return np.clip((t - self.low) / (self.high - self.low), 0.0, 1.0)

    def ppf(self, q):
        _check_quantile(q)
        return self.low + q * (self.high - self.low)

    def rvs(self, rng, size=None):
        draws = rng.uniform(self.low, self.high, size=size)
        return float(draws) if size is None else draws


@dataclass(frozen=True)
class Exponential:
    """Exponential law with rate in 1/ms."""

    rate: float

    def __post_init__(self):
        if self.rate <= 0:
            raise ScenarioValidationError("exponential rate must be > 0")

    def mean(self):
        return 1.0 / self.rate

    def variance(self):
        return 1.0 / self.rate ** 2

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t < 0, 0.0, -np.expm1(-self.rate * np.maximum(t, 0.0)))

    def ppf(self, q):
        _check_quantile(q)
        return float(-math.log1p(-q) / self.rate)

    def rvs(self, rng, size=None):
        draws = rng.exponential(1.0 / self.rate, size=size)
        return float(draws) if size is None else draws


# =============================================================================
# DelayDistribution
# =============================================================================

@dataclass(frozen=True, eq=False)
class DelayDistribution:
    representation: str
    law: Optional[object] = None
    step: Optional[float] = None
    masses: Optional[np.ndarray] = None
    samples: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        if self.representation == ANALYTIC:
            if self.law is None:
                raise ScenarioValidationError("analytic distribution needs a law")
        elif self.representation == GRID:
            masses = np.asarray(self.masses, dtype=float)
            if self.step is None or self.step <= 0:
                raise ScenarioValidationError("grid step must be > 0")
            if masses.ndim != 1 or masses.size == 0:
                raise ScenarioValidationError("grid masses must be a non-empty 1-D array")
            if np.any(masses < 0):
                raise ScenarioValidationError("grid densities must be >= 0")
            if abs(masses.sum() - 1.0) > GRID_MASS_TOLERANCE:
                raise ScenarioValidationError(
                    f"grid PDF integrates to {masses.sum():.6f}, expected 1")
            object.__setattr__(self, "masses", masses)
        elif self.representation == SAMPLES:
            samples = np.asarray(self.samples, dtype=float)
            if samples.ndim != 1 or samples.size == 0:
                raise ScenarioValidationError("empirical distribution needs at least one sample")
            if np.any(samples < 0):
                raise ScenarioValidationError("delay samples must be >= 0")
            object.__setattr__(self, "samples", np.sort(samples))
        else:
            raise ScenarioValidationError(f"unknown representation {self.representation!r}")

    # -------------------------------------------------------------------------
    # Grid geometry
    # -------------------------------------------------------------------------

    @property
    def times(self):
        """Cell centers (ms) of a grid distribution."""
        return np.arange(self.masses.size) * self.step

    @property
    def density(self):
        return self.masses / self.step

    @property
    def upper(self):
        return (self.masses.size - 1) * self.step

    def _edges(self):
        return (np.arange(self.masses.size + 1) - 0.5) * self.step

    def _cumulative(self):
        return np.concatenate(([0.0], np.cumsum(self.masses)))

    # -------------------------------------------------------------------------
    # Moments
    # -------------------------------------------------------------------------

    @cached_property
    def _moments(self):
        if self.representation == ANALYTIC:
            return self.law.mean(), self.law.variance()
        if self.representation == GRID:
            t = self.times
            mean = float(np.dot(self.masses, t))
            # uniform spread within each cell adds step^2/12
            var = float(np.dot(self.masses, (t - mean) ** 2)) + self.step ** 2 / 12.0
            return mean, var
        return float(self.samples.mean()), float(self.samples.var())

    def mean(self):
        return self._moments[0]

    def variance(self):
        return self._moments[1]

    # -------------------------------------------------------------------------
    # CDF / quantiles / sampling
    # -------------------------------------------------------------------------

    def cdf(self, t):
        if self.representation == ANALYTIC:
            return self.law.cdf(t)
        if self.representation == GRID:
            return np.interp(t, self._edges(), self._cumulative(), left=0.0, right=1.0)
        return np.searchsorted(self.samples, t, side="right") / self.samples.size

    def quantile(self, q):
        _check_quantile(q)
        if self.representation == ANALYTIC:
            return float(self.law.ppf(q))
        if self.representation == GRID:
            cum = self._cumulative()
            j = int(np.searchsorted(cum, q, side="left"))
            j = min(max(j, 1), self.masses.size)
            lo = cum[j - 1]
            frac = (q - lo) / self.masses[j - 1] if self.masses[j - 1] > 0 else 0.0
            return max(0.0, float(self._edges()[j - 1] + frac * self.step))
        return float(np.quantile(self.samples, q, method="inverted_cdf"))

    def rvs(self, rng, size=None):
        if self.representation == ANALYTIC:
            return self.law.rvs(rng, size=size)
        if self.representation == GRID:
            n = 1 if size is None else size
            cells = rng.choice(self.masses.size, size=n, p=self.masses / self.masses.sum())
            draws = np.maximum((cells + rng.uniform(-0.5, 0.5, size=n)) * self.step, 0.0)
            return float(draws[0]) if size is None else draws
        draws = rng.choice(self.samples, size=size)
        return float(draws) if size is None else draws

    # -------------------------------------------------------------------------
    # Discretization
    # -------------------------------------------------------------------------

    def cell_masses(self, step, n_cells):
        """
        Probability of each grid cell [(i-1/2)step, (i+1/2)step), i < n_cells.
        Mass beyond the last cell is left out (callers check the deficit).
        """
        edges = (np.arange(n_cells + 1) - 0.5) * step
        if self.representation == SAMPLES:
            counts, _ = np.histogram(self.samples, bins=edges)
            return counts / self.samples.size
        if self.representation == GRID and math.isclose(step, self.step):
            masses = np.zeros(n_cells)
            keep = min(n_cells, self.masses.size)
            masses[:keep] = self.masses[:keep]
            return masses
        cum = np.asarray(self.cdf(edges), dtype=float)
        masses = np.diff(cum)
        masses[0] += cum[0]
        return np.maximum(masses, 0.0)


# =============================================================================
# Constructors
# =============================================================================

def point_mass(value, name=""):
    return DelayDistribution(ANALYTIC, law=PointMass(float(value)), name=name)


def gaussian(loc, sigma2, name=""):
    return DelayDistribution(ANALYTIC, law=Gaussian(float(loc), float(sigma2)), name=name)


def uniform(low, high, name=""):
    return DelayDistribution(ANALYTIC, law=Uniform(float(low), float(high)), name=name)


def exponential(rate, name=""):
    return DelayDistribution(ANALYTIC, law=Exponential(float(rate)), name=name)


def from_law(law, name=""):
    """Wrap any object with mean/variance/cdf/ppf/rvs (e.g. a ResponseTimeLaw)."""
    return DelayDistribution(ANALYTIC, law=law, name=name)


def from_samples(samples, name=""):
    return DelayDistribution(SAMPLES, samples=np.asarray(samples, dtype=float), name=name)


def from_grid(step, density, name=""):
    """Grid distribution from density values (per ms) at cell centers."""
    masses = np.asarray(density, dtype=float) * step
    return DelayDistribution(GRID, step=float(step), masses=masses, name=name)


def default_upper(*dists):
    """Grid upper bound: max(GRID_MIN_UPPER_MS, GRID_MEAN_MULTIPLE x summed means)."""
    return max(GRID_MIN_UPPER_MS, GRID_MEAN_MULTIPLE * sum(d.mean() for d in dists))


def to_grid(d, step=None, upper=None):
    """
    Discretize a distribution onto [0, upper] with the given step.

    Raises:
        GridOverflowError: more than GRID_OVERFLOW_TOLERANCE of mass beyond upper
    """
    step = GRID_STEP_MS if step is None else step
    upper = default_upper(d) if upper is None else upper
    n_cells = int(round(upper / step)) + 1
    masses = d.cell_masses(step, n_cells)
    overflow = 1.0 - masses.sum()
    if overflow > GRID_OVERFLOW_TOLERANCE:
        raise GridOverflowError(
            f"{overflow:.3g} of the mass of '{d.name or d.representation}' lies beyond "
            f"{upper:g} ms; use a larger grid upper bound")
    return DelayDistribution(GRID, step=step, masses=masses / masses.sum(), name=d.name)


# =============================================================================
# Composition And Evaluation
# =============================================================================

def compose_evacuation_delay(net, sm, hand, step=None, upper=None):
    """
    Distribution of t_E = t_N + t_D + t_H for independent components.

    The three laws are discretized onto one grid and convolved; the result is
    a grid distribution whose mean equals the summed component means to
    within the grid resolution.

    Args:
        net: Network latency distribution
        sm: Spectrum-manager response distribution
        hand: Handover delay distribution
        step: Grid step in ms (default GRID_STEP_MS)
        upper: Grid upper bound in ms (default from default_upper)

    Returns:
        DelayDistribution (grid)

    Raises:
        GridOverflowError: mass beyond the upper bound exceeds the tolerance
    """
    step = GRID_STEP_MS if step is None else step
    upper = default_upper(net, sm, hand) if upper is None else upper
    n_cells = int(round(upper / step)) + 1

    total = None
    for component in (net, sm, hand):
        masses = component.cell_masses(step, n_cells)
        if 1.0 - masses.sum() > GRID_OVERFLOW_TOLERANCE:
            raise GridOverflowError(
                f"component '{component.name or component.representation}' has "
                f"{1.0 - masses.sum():.3g} of its mass beyond {upper:g} ms; "
                f"use a larger grid upper bound")
        total = masses if total is None else np.maximum(
            signal.fftconvolve(total, masses)[:n_cells], 0.0)

    overflow = 1.0 - total.sum()
    if overflow > GRID_OVERFLOW_TOLERANCE:
        raise GridOverflowError(
            f"{overflow:.3g} of the composed mass lies beyond {upper:g} ms; "
            f"use a larger grid upper bound")

    logger.debug(f"Composed delay on {n_cells:,} cells (step {step} ms), overflow {overflow:.2e}")
    return DelayDistribution(GRID, step=step, masses=total / total.sum(), name="evacuation")


def protection_probability(d, req):
    """Pr(delay <= delta_max) for a ProtectionRequirement."""
    return float(np.clip(d.cdf(req.delta_max), 0.0, 1.0))


def delay_percentile(d, q):
    """Inverse-CDF value (ms) at probability q in (0, 1)."""
    return d.quantile(q)


def ks_distance(d, samples):
    """Kolmogorov-Smirnov distance between a distribution and samples."""
    return float(stats.kstest(np.asarray(samples, dtype=float), d.cdf).statistic)


def export_distribution(d, path, column="density", fmt="csv", step=None, upper=None):
    """
    Write the distribution on its grid as (time_ms, density | cumulative).

    csv holds two columns; json holds one object with the grid step and a
    list per column.

    Returns:
        Path written
    """
    if column not in ("density", "cumulative"):
        raise ReportError(f"column must be 'density' or 'cumulative', got {column!r}")
    if fmt not in ("csv", "json"):
        raise ReportError(f"format must be 'csv' or 'json', got {fmt!r}")
    grid = d if d.representation == GRID else to_grid(d, step=step, upper=upper)
    values = grid.density if column == "density" else np.cumsum(grid.masses)
    decimals = REPORT_DECIMALS + 3
    try:
        if fmt == "csv":
            frame = pd.DataFrame({"time_ms": grid.times, column: values})
            frame.to_csv(path, index=False, float_format=f"%.{decimals}f")
        else:
            doc = {
                "name": d.name or d.representation,
                "step_ms": grid.step,
                "time_ms": np.round(grid.times, decimals).tolist(),
                column: np.round(values, decimals).tolist(),
            }
            with open(path, 'w') as f:
                json.dump(doc, f, indent=2)
                f.write("\n")
    except OSError as e:
        raise ReportError(f"cannot write distribution to {path}: {e}") from e
    logger.info(f"Exported {column} of '{d.name or d.representation}' to {path} ({fmt})")
    return path
