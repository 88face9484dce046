import numpy as np
import pytest

from interference_db import (
    IDLE,
    InterferenceDB,
    affected_sus,
    brute_force_relation,
    build_interference_db,
    free_channels_for,
)
from models import Point2D, ScenarioValidationError, SpatialParams, UnknownEntityError

SPATIAL = SpatialParams(lambda_s=1e-3, lambda_p=1e-4, r_p=130.0)


def _random_users(rng, count, prefix, n_channels, idle_ok):
    users = []
    for i in range(count):
        p = Point2D(float(rng.uniform(0, 2000)), float(rng.uniform(0, 2000)))
        channel = int(rng.integers(0 if idle_ok else 1, n_channels + 1))
        users.append((f"{prefix}{i}", p, channel if (channel or idle_ok) else None))
    return users


def test_guard_set_is_disk_membership():
    db = build_interference_db(
        pus=[("p1", Point2D(0.0, 0.0), 3)],
        sus=[("near", Point2D(100.0, 0.0), 1), ("far", Point2D(200.0, 0.0), 1)],
        spatial=SPATIAL, n_channels=10,
    )
    assert db.guard_set("p1") == {"near"}
    assert db.interfered_set("near") == {"p1"}
    assert db.interfered_set("far") == frozenset()


def test_no_sus_gives_empty_guard_sets():
    db = build_interference_db([("p1", Point2D(10.0, 10.0), 1)], [], SPATIAL, 5)
    assert db.guard_set("p1") == frozenset()
    assert db.relation() == set()


def test_guard_zone_wraps_around_region():
    db = build_interference_db(
        pus=[("p1", Point2D(5.0, 5.0), 1)],
        sus=[("s1", Point2D(1995.0, 1995.0), 2)],
        spatial=SPATIAL, n_channels=5,
    )
    assert db.guard_set("p1") == {"s1"}


@pytest.mark.parametrize("seed", range(100))
def test_relation_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    n_channels = int(rng.integers(1, 21))
    pus = _random_users(rng, int(rng.integers(0, 80)), "p", n_channels, idle_ok=True)
    sus = _random_users(rng, int(rng.integers(0, 200)), "s", n_channels, idle_ok=False)
    db = build_interference_db(pus, sus, SPATIAL, n_channels)
    relation = brute_force_relation(pus, sus, SPATIAL)
    assert db.relation() == relation
    assert db.check_invariants() == []

    su_channels = {su_id: ch for su_id, _, ch in sus}
    for pu_id, _, _ in pus:
        channel = int(rng.integers(1, n_channels + 1))
        expected = {s for p, s in relation if p == pu_id and su_channels[s] == channel}
        assert affected_sus(db, pu_id, channel) == expected


def test_affected_sus_filters_by_channel():
    at = Point2D(1000.0, 1000.0)
    db = build_interference_db(
        pus=[("p1", at, 4)],
        sus=[("s1", Point2D(1010.0, 1000.0), 1), ("s2", Point2D(1000.0, 1020.0), 7),
             ("s5", Point2D(990.0, 990.0), 2), ("s9", Point2D(1500.0, 1500.0), 7)],
        spatial=SPATIAL, n_channels=10,
    )
    assert db.guard_set("p1") == {"s1", "s2", "s5"}
    assert affected_sus(db, "p1", 7) == {"s2"}
    assert affected_sus(db, "p1", 9) == set()


def test_affected_sus_with_empty_guard_set():
    db = build_interference_db([("p1", Point2D(0.0, 0.0), 1)], [], SPATIAL, 5)
    assert affected_sus(db, "p1", 1) == set()


def test_free_channels_complement():
    at = Point2D(500.0, 500.0)
    db = build_interference_db(
        pus=[("a", at, 3), ("b", Point2D(520.0, 500.0), 7), ("off", Point2D(510.0, 510.0), IDLE)],
        sus=[("s", Point2D(505.0, 505.0), 1)],
        spatial=SPATIAL, n_channels=10,
    )
    assert free_channels_for(db, "s") == {1, 2, 4, 5, 6, 8, 9, 10}


def test_free_channels_without_interferers():
    db = build_interference_db([], [("s", Point2D(1.0, 1.0), 2)], SPATIAL, 6)
    assert free_channels_for(db, "s") == set(range(1, 7))


def test_free_channels_match_brute_force(rng):
    pus = _random_users(rng, 300, "p", 8, idle_ok=True)
    sus = _random_users(rng, 300, "s", 8, idle_ok=False)
    db = build_interference_db(pus, sus, SPATIAL, 8)
    relation = brute_force_relation(pus, sus, SPATIAL)
    watched = {pu_id: ch for pu_id, _, ch in pus}
    for su_id, _, _ in sus:
        busy = {watched[p] for p, s in relation if s == su_id}
        assert free_channels_for(db, su_id) == set(range(1, 9)) - busy


def test_unknown_ids():
    db = InterferenceDB(SPATIAL, 5)
    with pytest.raises(UnknownEntityError):
        affected_sus(db, "ghost", 1)
    with pytest.raises(KeyError):
        free_channels_for(db, "ghost")


def test_duplicate_ids_are_rejected():
    with pytest.raises(ScenarioValidationError, match="duplicate"):
        build_interference_db([("p", Point2D(1.0, 1.0), 1), ("p", Point2D(2.0, 2.0), 1)], [], SPATIAL, 5)
    with pytest.raises(ScenarioValidationError, match="duplicate"):
        build_interference_db([], [("s", Point2D(1.0, 1.0), 1), ("s", Point2D(2.0, 2.0), 1)], SPATIAL, 5)


def test_locations_and_channels_are_validated():
    db = InterferenceDB(SPATIAL, 5)
    with pytest.raises(ScenarioValidationError):
        db.add_pu("p", Point2D(-1.0, 5.0))
    with pytest.raises(ScenarioValidationError):
        db.add_su("s", Point2D(5.0, 5.0), channel=6)
    db.add_pu("p", Point2D(5.0, 5.0))
    with pytest.raises(ScenarioValidationError):
        db.set_pu_channel("p", 9)


def test_random_mutations_keep_invariants(rng):
    db = InterferenceDB(SPATIAL, 10)
    pus, sus = {}, {}
    for step in range(1500):
        action = rng.integers(6)
        p = Point2D(float(rng.uniform(0, 2000)), float(rng.uniform(0, 2000)))
        if action == 0 or not pus:
            pus[f"p{step}"] = (p, int(rng.integers(0, 11)))
            db.add_pu(f"p{step}", *pus[f"p{step}"])
        elif action == 1 or not sus:
            sus[f"s{step}"] = (p, int(rng.integers(1, 11)))
            db.add_su(f"s{step}", *sus[f"s{step}"])
        elif action == 2:
            victim = sorted(pus)[rng.integers(len(pus))]
            db.remove_pu(victim)
            del pus[victim]
        elif action == 3:
            victim = sorted(sus)[rng.integers(len(sus))]
            db.remove_su(victim)
            del sus[victim]
        elif action == 4:
            target = sorted(pus)[rng.integers(len(pus))]
            pus[target] = (pus[target][0], int(rng.integers(0, 11)))
            db.set_pu_channel(target, pus[target][1])
        else:
            target = sorted(sus)[rng.integers(len(sus))]
            sus[target] = (sus[target][0], int(rng.integers(1, 11)))
            db.set_su_channel(target, sus[target][1])

        assert db.check_invariants() == [], f"step {step}"
        if step % 250 == 249:
            expected = brute_force_relation(
                [(k, v, ch) for k, (v, ch) in pus.items()],
                [(k, v, ch) for k, (v, ch) in sus.items()],
                SPATIAL,
            )
            assert db.relation() == expected

    for su_id in sus:
        busy = {pus[p][1] for p, s in db.relation() if s == su_id} - {IDLE}
        assert free_channels_for(db, su_id) == set(range(1, 11)) - busy


def test_channel_updates_move_affected_set():
    db = build_interference_db(
        [("p", Point2D(100.0, 100.0), 1)],
        [("s", Point2D(110.0, 100.0), 2)],
        SPATIAL, 3,
    )
    assert affected_sus(db, "p", 2) == {"s"}
    db.set_su_channel("s", 3)
    assert affected_sus(db, "p", 2) == set()
    db.set_pu_channel("p", 3)
    assert free_channels_for(db, "s") == {1, 2}
