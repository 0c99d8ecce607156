import math

import pytest

import convoy


def test_formation_law_matches_hand_values():
    road = convoy.HighwayConfig()
    weights = convoy.ControlWeights()
    ego = convoy.VehicleState(1, 1, 0.0, (1 + 0.5) * road.lane_width, 25.0)
    ahead = convoy.VehicleState(2, 1, 12.0, ego.y, 25.0)
    nbrs = convoy.compute_neighbors(ego, [ego, ahead])
    assert nbrs.as_dict() == {"N_f": 2}
    vx, vy = convoy.formation_velocity_command(ego, nbrs, weights, convoy.ActionTargets(1, 25.0), road)
    assert math.isclose(vx, 29.0, rel_tol=1e-9)
    assert vy == 0.0
    assert math.isclose(convoy.position_error(ego, nbrs), 2.0, rel_tol=1e-9)


def test_decoding():
    assert convoy.decode_decision('{"decision": "LANE_LEFT"}') == convoy.DecisionAction.LANE_LEFT
    assert convoy.decode_decision("no idea") is None
    road = convoy.HighwayConfig()
    ego = convoy.VehicleState(1, 2, 0.0, 2.5 * road.lane_width, 25.0)
    t = convoy.decode_action(convoy.DecisionAction.LANE_LEFT, ego, convoy.ActionTargets(2, 25.0), road,
                             convoy.ControlWeights())
    assert t.target_lane == 2


def test_escort_assignment_is_a_bijection():
    road = convoy.HighwayConfig()
    members = [convoy.VehicleState(i + 1, i % 3, -5.0 * i, (i % 3 + 0.5) * road.lane_width, 25.0)
               for i in range(8)]
    slots = convoy.assign_escort_slots(4, members, road)
    assert sorted(slots) == list(range(1, 9))
    assert len(set(slots.values())) == 8
    assert slots[4] == (1, 0.0)


def test_cosine_similarity():
    assert convoy.cosine_similarity([1.0, 0.0], [2.0, 0.0]) == pytest.approx(1.0)
    assert convoy.cosine_similarity([0.0, 0.0], [1.0, 0.0]) == 0.0


def test_run_scenario_join():
    summary = convoy.run_scenario("join", seed=1)
    assert summary["success"] is True
    assert summary["scenario"] == "join_convoy"
    assert max(summary["speed_series"]["1"]) == pytest.approx(30.0, abs=0.5)


def test_errors_surface_as_python_exceptions():
    with pytest.raises(ValueError):
        convoy.run_scenario("merge")
    with pytest.raises(convoy.ConvoyError):
        convoy.run_scenario("avoid", max_sim_time=-1.0)
