import json
import math

import numpy as np
import pytest

from models import (
    ChannelPopularity,
    EvacuationModelError,
    HutProfile,
    NetworkParams,
    Point2D,
    ProtectionRequirement,
    ScenarioParams,
    ScenarioValidationError,
    SpatialParams,
    TrafficParams,
    UnknownEntityError,
    config_digest,
    delta_max_from_zapping,
    load_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
)


# =============================================================================
# Value types
# =============================================================================

def test_point_rejects_non_finite():
    with pytest.raises(ScenarioValidationError):
        Point2D(math.nan, 0.0)


def test_spatial_rejects_negative_density():
    with pytest.raises(ScenarioValidationError):
        SpatialParams(lambda_s=-1e-3, lambda_p=1e-4)


def test_spatial_area():
    assert SpatialParams(1e-3, 1e-4, region_width=100, region_height=50).area == 5000


@pytest.mark.parametrize("kwargs", [
    {"delta_max": 0.0},
    {"o_max": 1.5},
    {"o_max": -0.1},
])
def test_protection_requirement_bounds(kwargs):
    with pytest.raises(ScenarioValidationError):
        ProtectionRequirement(**kwargs)


def test_protection_defaults():
    req = ProtectionRequirement()
    assert req.delta_max == 200.0
    assert req.o_max == 0.95


@pytest.mark.parametrize("zapping, increase", [(2000.0, 0.1), (1000.0, 0.2)])
def test_delta_max_from_zapping(zapping, increase):
    assert delta_max_from_zapping(zapping, increase) == pytest.approx(200.0)


def test_traffic_requires_integer_counts():
    with pytest.raises(ScenarioValidationError):
        TrafficParams(M=10.5, N=1)
    with pytest.raises(ScenarioValidationError):
        TrafficParams(M=10, N=0)


def test_scenario_requires_processors():
    with pytest.raises(ScenarioValidationError):
        ScenarioParams(name="x", spatial=SpatialParams(1e-3, 1e-4),
                       traffic=TrafficParams(M=1, N=1), processors=0)


def test_network_range_is_ordered():
    with pytest.raises(ScenarioValidationError):
        NetworkParams(rtt_range_ms=(5.0, 3.0))


def test_error_hierarchy():
    assert issubclass(ScenarioValidationError, EvacuationModelError)
    assert issubclass(EvacuationModelError, ValueError)
    err = UnknownEntityError("unknown PU id 7")
    assert isinstance(err, KeyError)
    assert str(err) == "unknown PU id 7"


# =============================================================================
# Usage curve and channel popularity
# =============================================================================

def test_hut_profile_knots():
    hut = HutProfile()
    assert hut.evaluate(20) == pytest.approx(0.60)
    assert hut.evaluate(4) == pytest.approx(0.05)
    assert hut.evaluate(12) == pytest.approx(0.325)


def test_hut_profile_wraps_midnight():
    hut = HutProfile()
    # 20h -> 28h (= 4h next day) falls from 0.6 to 0.05
    assert hut.evaluate(0) == pytest.approx(0.325)
    assert hut.evaluate(44) == pytest.approx(hut.evaluate(20))


def test_hut_profile_vectorized():
    values = HutProfile().evaluate(np.array([4.0, 12.0, 20.0]))
    assert isinstance(values, np.ndarray)
    assert values == pytest.approx([0.05, 0.325, 0.6])


def test_hut_profile_constant():
    hut = HutProfile.constant(0.3)
    assert hut.is_constant
    assert hut.evaluate(7.5) == 0.3
    assert hut.peak() == 0.3
    assert hut.to_dict() == {"constant": 0.3}


def test_hut_profile_rejects_bad_knots():
    with pytest.raises(ScenarioValidationError):
        HutProfile(knots=((25.0, 0.5),))
    with pytest.raises(ScenarioValidationError):
        HutProfile(knots=((1.0, 1.5),))


def test_zipf_popularity_is_decreasing():
    w = ChannelPopularity(law="zipf", s=1.0).weights(10)
    assert w.sum() == pytest.approx(1.0)
    assert np.all(np.diff(w) < 0)


def test_uniform_popularity():
    assert ChannelPopularity().weights(4) == pytest.approx([0.25] * 4)


# =============================================================================
# Scenario codec
# =============================================================================

def test_builtins_round_trip(suite):
    for scenario in suite.scenarios:
        text = json.dumps(scenario_to_dict(scenario))
        assert scenario_from_dict(json.loads(text)) == scenario


def test_codec_rejects_unknown_fields(regional):
    data = scenario_to_dict(regional)
    data["colour"] = "blue"
    with pytest.raises(ScenarioValidationError, match="colour"):
        scenario_from_dict(data)

    data = scenario_to_dict(regional)
    data["net"]["latency"] = 3
    with pytest.raises(ScenarioValidationError, match="latency"):
        scenario_from_dict(data)


def test_codec_requires_name(regional):
    data = scenario_to_dict(regional)
    del data["name"]
    with pytest.raises(ScenarioValidationError, match="name"):
        scenario_from_dict(data)


def test_codec_validates_values(regional):
    data = scenario_to_dict(regional)
    data["traffic"]["p_evac"] = 2.0
    with pytest.raises(ScenarioValidationError):
        scenario_from_dict(data)


def test_save_and_load(tmp_path, semi_national):
    path = save_scenario(semi_national, tmp_path / "semi.json")
    assert load_scenario(path) == semi_national


def test_load_example_file(scenario_dir):
    scenario = load_scenario(scenario_dir / "regional.json")
    assert scenario.processors == 32
    assert scenario.traffic.M == 1_120_000
    assert scenario.net.rtt_range_ms == (3.0, 5.0)
    assert scenario.spatial.region_width == 23042.0

    campus = load_scenario(scenario_dir / "campus-night.json")
    assert campus.traffic.popularity.law == "zipf"
    assert campus.net.fixed_rtt_override is None


def test_load_rejects_bad_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ScenarioValidationError):
        load_scenario(path)
    with pytest.raises(ScenarioValidationError):
        load_scenario(tmp_path / "missing.json")


def test_config_digest(regional):
    assert config_digest(regional) == config_digest(regional)
    changed = regional.evolve(processors=64)
    assert config_digest(changed) != config_digest(regional)
    assert len(config_digest(regional)) == 64
