import math

import numpy as np
import pytest

from models import Point2D, ScenarioValidationError, SpatialParams
from rng import SeedStreams, spawn_seeds
from spatial import (
    density_for_expected_count,
    expected_pus_in_range,
    expected_sus_in_guard_zone,
    pmf_pus_in_range,
    pmf_sus_in_guard_zone,
    poisson_support,
    sample_ppp,
    sample_uniform_points,
    torus_distance,
)


def test_expected_counts():
    spatial = SpatialParams(lambda_s=1e-3, lambda_p=2e-4, r_p=130.0)
    assert expected_sus_in_guard_zone(spatial) == pytest.approx(math.pi * 16.9)
    assert expected_pus_in_range(spatial) == pytest.approx(math.pi * 16.9 * 0.2)


def test_density_for_expected_count_inverts():
    spatial = SpatialParams(lambda_s=density_for_expected_count(200, 130.0), lambda_p=0.0)
    assert expected_sus_in_guard_zone(spatial) == pytest.approx(200.0)


@pytest.mark.parametrize("lambda_s", [1e-4, 1e-3, 4e-3])
def test_pmf_sums_to_one(lambda_s):
    spatial = SpatialParams(lambda_s=lambda_s, lambda_p=0.0)
    mean = expected_sus_in_guard_zone(spatial)
    total = sum(pmf_sus_in_guard_zone(k, spatial) for k in range(poisson_support(mean) + 1))
    assert total == pytest.approx(1.0, abs=1e-9)


def test_pmf_empty_process():
    spatial = SpatialParams(lambda_s=0.0, lambda_p=0.0)
    assert pmf_sus_in_guard_zone(0, spatial) == 1.0
    assert pmf_sus_in_guard_zone(1, spatial) == 0.0
    assert pmf_pus_in_range(0, spatial) == 1.0
    assert poisson_support(0.0) == 0


def test_pmf_large_mean_is_finite():
    spatial = SpatialParams(lambda_s=density_for_expected_count(1e4, 130.0), lambda_p=0.0)
    p = pmf_sus_in_guard_zone(10_000, spatial)
    assert 0.0 < p < 1.0
    # Poisson mode mass ~ 1/sqrt(2 pi mean)
    assert p == pytest.approx(1.0 / math.sqrt(2 * math.pi * 1e4), rel=1e-3)


@pytest.mark.parametrize("k", [-1, 2.5])
def test_pmf_rejects_bad_counts(k):
    with pytest.raises(ScenarioValidationError):
        pmf_sus_in_guard_zone(k, SpatialParams(lambda_s=1e-3, lambda_p=0.0))


def test_sample_ppp_mean_count():
    # density * area = 100
    region = SpatialParams(lambda_s=0.0, lambda_p=0.0, region_width=100.0, region_height=100.0)
    rng = np.random.default_rng(7)
    counts = [len(sample_ppp(0.01, region, rng)) for _ in range(2000)]
    # 3 sigma of the mean of 2000 Poisson(100) counts is ~0.67
    assert np.mean(counts) == pytest.approx(100.0, abs=1.0)


def test_sample_ppp_points_inside_region():
    region = SpatialParams(lambda_s=0.0, lambda_p=0.0, region_width=300.0, region_height=200.0)
    points = sample_ppp(1e-3, region, 3)
    assert all(0 <= p.x < 300 and 0 <= p.y < 200 for p in points)


def test_sample_ppp_is_seeded_and_capped():
    region = SpatialParams(lambda_s=0.0, lambda_p=0.0)
    assert sample_ppp(1e-4, region, 11) == sample_ppp(1e-4, region, 11)
    assert len(sample_ppp(1e-3, region, 11, cap=50)) == 50
    assert sample_ppp(0.0, region, 11) == []


def test_uniform_points_have_exact_count():
    region = SpatialParams(lambda_s=0.0, lambda_p=0.0, region_width=300.0, region_height=200.0)
    points = sample_uniform_points(1234, region, 5)
    assert len(points) == 1234
    assert all(0 <= p.x < 300 and 0 <= p.y < 200 for p in points)
    assert sample_uniform_points(0, region, 5) == []
    with pytest.raises(ScenarioValidationError):
        sample_uniform_points(-1, region, 5)


def test_torus_distance_wraps():
    a, b = Point2D(10.0, 10.0), Point2D(1990.0, 10.0)
    assert torus_distance(a, b, 2000.0, 2000.0) == pytest.approx(20.0)
    c = Point2D(1995.0, 1995.0)
    assert torus_distance(Point2D(5.0, 5.0), c, 2000.0, 2000.0) == pytest.approx(math.hypot(10, 10))


def test_seed_streams_are_reproducible_and_independent():
    a, b = SeedStreams(42), SeedStreams(42)
    assert a["arrivals"].random() == b["arrivals"].random()
    assert SeedStreams(42)["arrivals"].random() != SeedStreams(42)["service"].random()
    assert spawn_seeds(42, 3) == spawn_seeds(42, 3)
    assert len(set(spawn_seeds(42, 3))) == 3
