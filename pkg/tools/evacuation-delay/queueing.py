"""
M/M/C analytics for the spectrum manager.

Erlang-C in the log domain, arrival and service rates derived from a
scenario, and the exact time-domain response-time law of the M/M/C queue
(an exponential / hypoexponential mixture).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

from config import PRIME_TIME_HOUR
from models import InstabilityError, ScenarioValidationError
from spatial import expected_sus_in_guard_zone

logger = logging.getLogger(__name__)

MS_PER_S = 1000.0

# Rates closer than this (relative) use the equal-rate Erlang-2 formulas
EQUAL_RATE_RTOL = 1e-9

# Birth-death oracle truncates where the geometric tail falls below this
CTMC_TAIL = 1e-16


# =============================================================================
# Types
# =============================================================================

@dataclass(frozen=True)
class QueueModel:
    """Arrival rate lam and per-server service rate mu (jobs/s), C servers."""

    lam: float
    mu: float
    C: int

    def __post_init__(self):
        if self.lam < 0:
            raise ScenarioValidationError(f"arrival rate must be >= 0, got {self.lam}")
        if self.mu <= 0:
            raise ScenarioValidationError(f"service rate must be > 0, got {self.mu}")
        if not float(self.C).is_integer() or self.C < 1:
            raise ScenarioValidationError(f"server count must be an integer >= 1, got {self.C}")
        object.__setattr__(self, "C", int(self.C))

    @property
    def rho(self):
        """Offered load in erlangs."""
        return self.lam / self.mu

    @property
    def stable(self):
        return self.rho < self.C


@dataclass(frozen=True)
class ResponseTimeLaw:
    """
    Response time of an M/M/C queue, rates in 1/ms.

    With probability 1 - p_wait the job is served at once: Exp(mu).
    With probability p_wait it first waits Exp(drain_rate), drain_rate = mu*C - lam,
    then is served: the sum of the two exponentials.
    """

    p_wait: float
    mu: float
    drain_rate: float

    def __post_init__(self):
        if not 0.0 <= self.p_wait <= 1.0:
            raise ScenarioValidationError(f"p_wait must be in [0, 1], got {self.p_wait}")
        if self.mu <= 0 or self.drain_rate <= 0:
            raise ScenarioValidationError("mu and drain_rate must be > 0")

    @property
    def _equal_rates(self):
        return abs(self.drain_rate - self.mu) <= EQUAL_RATE_RTOL * self.mu

    def mean(self):
        return 1.0 / self.mu + self.p_wait / self.drain_rate

    def variance(self):
        mu, nu, p = self.mu, self.drain_rate, self.p_wait
        second_direct = 2.0 / mu ** 2
        second_waited = 2.0 / nu ** 2 + 2.0 / (nu * mu) + 2.0 / mu ** 2
        second = (1.0 - p) * second_direct + p * second_waited
        return second - self.mean() ** 2

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        tt = np.maximum(t, 0.0)
        mu, nu, p = self.mu, self.drain_rate, self.p_wait
        direct = mu * np.exp(-mu * tt)
        if self._equal_rates:
            waited = mu * mu * tt * np.exp(-mu * tt)
        else:
            waited = mu * nu / (mu - nu) * (np.exp(-nu * tt) - np.exp(-mu * tt))
        return np.where(t < 0, 0.0, (1.0 - p) * direct + p * waited)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        tt = np.maximum(t, 0.0)
        mu, nu, p = self.mu, self.drain_rate, self.p_wait
        direct = -np.expm1(-mu * tt)
        if self._equal_rates:
            waited = 1.0 - np.exp(-mu * tt) * (1.0 + mu * tt)
        else:
            waited = 1.0 - (mu * np.exp(-nu * tt) - nu * np.exp(-mu * tt)) / (mu - nu)
        return np.where(t < 0, 0.0, np.clip((1.0 - p) * direct + p * waited, 0.0, 1.0))

    def ppf(self, q):
        """Quantile by bracketing root search on the CDF."""
        if not 0.0 < q < 1.0:
            raise ScenarioValidationError(f"quantile must be in (0, 1), got {q}")
        upper = self.mean()
        while float(self.cdf(upper)) < q:
            upper *= 2.0
        return float(optimize.brentq(lambda t: float(self.cdf(t)) - q, 0.0, upper,
                                     xtol=1e-12, rtol=1e-12))

    def laplace(self, s):
        """Laplace transform of the density at s."""
        mu, nu, p = self.mu, self.drain_rate, self.p_wait
        return (1.0 - p) * mu / (mu + s) + p * nu * mu / ((nu + s) * (mu + s))

    def rvs(self, rng, size=None):
        service = rng.exponential(1.0 / self.mu, size=size)
        waited = rng.random(size=size) < self.p_wait
        wait = rng.exponential(1.0 / self.drain_rate, size=size)
        draws = service + np.where(waited, wait, 0.0)
        return float(draws) if size is None else draws


# =============================================================================
# Erlang Formulas
# =============================================================================

def _log1p_exp(x):
    """log(1 + e^x) without overflow."""
    if x > 0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def _check_load(C, rho):
    if not float(C).is_integer() or C < 1:
        raise ScenarioValidationError(f"server count must be an integer >= 1, got {C}")
    if rho < 0 or not math.isfinite(rho):
        raise ScenarioValidationError(f"offered load must be finite and >= 0, got {rho}")


def log_erlang_b(C, rho):
    """
    log of the Erlang-B blocking probability via the recurrence
    1/B(k) = 1 + (k/rho) / B(k-1), B(0) = 1, carried in the log domain.
    """
    _check_load(C, rho)
    if rho == 0:
        return -math.inf
    log_rho = math.log(rho)
    log_inv_b = 0.0
    for k in range(1, int(C) + 1):
        log_inv_b = _log1p_exp(math.log(k) - log_rho + log_inv_b)
    return -log_inv_b


def erlang_b(C, rho):
    return math.exp(log_erlang_b(C, rho))


def log_erlang_c(C, rho):
    """
    log of the Erlang-C waiting probability.

    Converts Erlang-B: P_C = C*B / (C - rho*(1 - B)). Finite for C up to 10^6
    even where P_C itself underflows.

    Raises:
        InstabilityError: rho >= C
        ScenarioValidationError: rho < 0 or C < 1
    """
    _check_load(C, rho)
    if rho >= C:
        raise InstabilityError(f"offered load rho={rho:.6g} >= C={C}: queue is unstable")
    if rho == 0:
        return -math.inf
    log_b = log_erlang_b(C, rho)
    b = math.exp(log_b)
    return math.log(C) + log_b - math.log(C - rho + rho * b)


def erlang_c(C, rho):
    """Probability an arriving job waits in an M/M/C queue."""
    return math.exp(log_erlang_c(C, rho))


def ctmc_waiting_probability(C, rho, truncation=None):
    """
    Waiting probability from the stationary law of the birth-death chain
    of an M/M/C queue, solved directly on a truncated generator.

    Args:
        C: Servers
        rho: Offered load (arrival rate with unit service rate)
        truncation: Highest queue state kept (default: where the tail is negligible)

    Returns:
        Pr(all servers busy) = sum of stationary mass on states >= C
    """
    _check_load(C, rho)
    if rho >= C:
        raise InstabilityError(f"offered load rho={rho:.6g} >= C={C}: queue is unstable")
    if rho == 0:
        return 0.0
    C = int(C)
    if truncation is None:
        tail_states = math.ceil(math.log(CTMC_TAIL) / math.log(rho / C))
        truncation = C + max(tail_states, 1) + 10

    n_states = truncation + 1
    Q = np.zeros((n_states, n_states))
    for k in range(n_states):
        if k + 1 < n_states:
            Q[k, k + 1] = rho
        if k > 0:
            Q[k, k - 1] = min(k, C)
        Q[k, k] = -Q[k].sum()

    # pi Q = 0 with sum(pi) = 1: replace one balance equation by normalization
    A = Q.T.copy()
    A[-1, :] = 1.0
    rhs = np.zeros(n_states)
    rhs[-1] = 1.0
    pi = linalg.solve(A, rhs)
    return float(pi[C:].sum())


# =============================================================================
# Rates From Scenario Parameters
# =============================================================================

def arrival_rate(traffic, t):
    """Zapping job arrival rate M * phi(t) / E(B), jobs/s (t in hours of day)."""
    return traffic.M * traffic.phi(t) / traffic.E_B


def service_rate(s, spatial):
    """Per-server service rate 1 / (tau * lambda_s * pi * r_p^2), jobs/s (tau in ms)."""
    mean_service_ms = s.tau * expected_sus_in_guard_zone(spatial)
    if mean_service_ms <= 0:
        raise ScenarioValidationError(
            "service rate undefined: tau * E(n) must be > 0 (check tau and lambda_s)")
    return MS_PER_S / mean_service_ms


def queue_model_for(scenario, hour=None):
    """QueueModel of a scenario's spectrum manager at an hour of day (default prime time)."""
    hour = PRIME_TIME_HOUR if hour is None else hour
    return QueueModel(
        lam=arrival_rate(scenario.traffic, hour),
        mu=service_rate(scenario.service, scenario.spatial),
        C=scenario.processors,
    )


def response_time_law(q):
    """
    Response-time law of the queue (rates converted to 1/ms).

    Raises:
        InstabilityError: rho >= C
    """
    if not q.stable:
        raise InstabilityError(
            f"offered load rho={q.rho:.6g} >= C={q.C}: response time has no stationary law")
    p_wait = erlang_c(q.C, q.rho)
    law = ResponseTimeLaw(
        p_wait=p_wait,
        mu=q.mu / MS_PER_S,
        drain_rate=(q.mu * q.C - q.lam) / MS_PER_S,
    )
    logger.debug(f"Response law: rho={q.rho:.4g} C={q.C} P_C={p_wait:.4g} mean={law.mean():.4g} ms")
    return law


def sample_response_time(law, rng, size=None):
    """Draw response times (ms) from the mixture law."""
    return law.rvs(rng, size=size)


def mean_queue_length(q):
    """Mean number of waiting jobs, Lq = P_C * rho / (C - rho)."""
    return erlang_c(q.C, q.rho) * q.rho / (q.C - q.rho)


def utilization(q):
    return q.rho / q.C
