#include <doctest.h>

#include <cmath>

#include "convoy/formation.hpp"
#include "support.hpp"

using namespace convoy;
using convoy::testing::Gen;

namespace {

VehicleState car(VehicleId id, int lane, double x, double v = 25.0) {
    HighwayConfig road;
    VehicleState s;
    s.id = id;
    s.role = Role::convoy;
    s.lane = lane;
    s.x = x;
    s.y = lane_center(road, lane);
    s.v = v;
    return s;
}

NeighborInfo info(VehicleId id, double x, double v = 25.0, int lane = 1) { return NeighborInfo{id, x, v, lane}; }

void check_rel(double actual, double expected) {
    CHECK(std::abs(actual - expected) <= 1e-9 * std::max(1.0, std::abs(expected)));
}

}  // namespace

TEST_SUITE("formation") {
    TEST_CASE("lone ego has no neighbors") {
        const auto ego = car(1, 1, 0.0);
        CHECK(compute_neighbors(ego, {}, 100.0).occupied() == 0);
    }

    TEST_CASE("single vehicle 12 m ahead in the same lane fills only N_f") {
        const auto ego = car(1, 1, 0.0);
        const std::vector<VehicleState> others{car(2, 1, 12.0)};
        const auto n = compute_neighbors(ego, others, 100.0);
        CHECK(n.occupied() == 1);
        REQUIRE(n[SlotKind::front]);
        CHECK(n[SlotKind::front]->id == 2);
    }

    TEST_CASE("vehicles two lanes away or beyond comm range are never neighbors") {
        const auto ego = car(1, 0, 0.0);
        const std::vector<VehicleState> others{car(2, 2, 3.0), car(3, 0, 100.5), car(4, 1, -100.0)};
        const auto n = compute_neighbors(ego, others, 100.0);
        CHECK(n.occupied() == 1);
        REQUIRE(n[SlotKind::back_left]);
        CHECK(n[SlotKind::back_left]->id == 4);
    }

    TEST_CASE("equal distance ties go to the lower id") {
        const auto ego = car(5, 1, 0.0);
        const std::vector<VehicleState> others{car(9, 2, 4.0), car(7, 2, 4.0)};
        const auto n = compute_neighbors(ego, others, 100.0);
        REQUIRE(n[SlotKind::front_left]);
        CHECK(n[SlotKind::front_left]->id == 7);
    }

    TEST_CASE("interlaced layout matches the brute-force sector search") {
        HighwayConfig road;
        const auto convoy = convoy::testing::interlaced_convoy(road, 10.0);
        for (const auto& ego : convoy) {
            std::vector<VehicleState> others;
            for (const auto& v : convoy)
                if (v.id != ego.id) others.push_back(v);
            CHECK(compute_neighbors(ego, others, road.comm_range) ==
                  convoy::testing::brute_force_neighbors(ego, others, road.comm_range));
        }
    }

    TEST_CASE("neighbor graph equals brute force on random configurations") {
        HighwayConfig road;
        Gen g(20240601);
        int mismatches = 0;
        for (int trial = 0; trial < 1000; ++trial) {
            const auto layout = g.convoy_layout(10, road);
            for (const auto& ego : layout) {
                const auto got = compute_neighbors(ego, layout, road.comm_range);
                if (!(got == convoy::testing::brute_force_neighbors(ego, layout, road.comm_range))) ++mismatches;
                for (SlotKind s : kAllSlots) {
                    if (!got[s]) continue;
                    CHECK((got[s]->x >= ego.x) == is_forward(s));
                    CHECK(got[s]->lane - ego.lane == lane_offset(s));
                }
            }
        }
        CHECK(mismatches == 0);
    }

    TEST_CASE("desired offsets are signed") {
        CHECK(desired_offset(SlotKind::front, 10.0) == 10.0);
        CHECK(desired_offset(SlotKind::back, 10.0) == -10.0);
        CHECK(desired_offset(SlotKind::front_left, 10.0) == 5.0);
        CHECK(desired_offset(SlotKind::front_right, 10.0) == 5.0);
        CHECK(desired_offset(SlotKind::back_left, 10.0) == -5.0);
        CHECK(desired_offset(SlotKind::back_right, 10.0) == -5.0);
    }

    TEST_CASE("formation law: equilibrium returns the target speed") {
        HighwayConfig road;
        ControlWeights w;
        const auto ego = car(1, 1, 0.0);
        NeighborSet n;
        n[SlotKind::front] = info(2, 10.0);
        n[SlotKind::back] = info(3, -10.0);
        n[SlotKind::front_left] = info(4, 5.0, 25.0, 2);
        n[SlotKind::back_right] = info(5, -5.0, 25.0, 0);
        const auto c = formation_velocity_command(ego, n, w, {1, 25.0}, road);
        CHECK(c.vx == 25.0);
        CHECK(c.vy == 0.0);
    }

    TEST_CASE("formation law: N_f at +12 gives 29 m/s") {
        HighwayConfig road;
        ControlWeights w;
        NeighborSet n;
        n[SlotKind::front] = info(2, 12.0);
        const auto c = formation_velocity_command(car(1, 1, 0.0), n, w, {1, 25.0}, road);
        check_rel(c.vx, 25.0 + 2.0 * (12.0 - 10.0));
        check_rel(c.vx, 29.0);
        CHECK(c.vy == 0.0);
    }

    TEST_CASE("formation law: lateral term toward the target lane") {
        HighwayConfig road;
        ControlWeights w;
        const auto c = formation_velocity_command(car(1, 0, 0.0), {}, w, {1, 25.0}, road);
        check_rel(c.vx, 25.0);
        check_rel(c.vy, 1.8 * 3.2);
        check_rel(c.vy, 5.76);
    }

    TEST_CASE("formation law: all six slots, hand-evaluated") {
        HighwayConfig road;
        ControlWeights w;
        NeighborSet n;
        n[SlotKind::front] = info(2, 11.0);
        n[SlotKind::back] = info(3, -7.0);
        n[SlotKind::front_left] = info(4, 2.0, 25.0, 2);
        n[SlotKind::back_left] = info(5, -9.0, 25.0, 2);
        n[SlotKind::front_right] = info(6, 6.5, 25.0, 0);
        n[SlotKind::back_right] = info(7, -1.0, 25.0, 0);
        // 2*(11-10) + 1*(-7+10) + 1*(2-5) + 0.1*(-9+5) + 1*(6.5-5) + 0.1*(-1+5) = 2 + 3 - 3 - 0.4 + 1.5 + 0.4
        const auto c = formation_velocity_command(car(1, 1, 0.0), n, w, {1, 20.0}, road);
        check_rel(c.vx, 20.0 + 3.5);
        // |1| + |3| + |-3| + |-4| + |1.5| + |4|
        check_rel(position_error(car(1, 1, 0.0), n, 10.0), 16.5);
    }

    TEST_CASE("speed coordination") {
        const auto ego = car(1, 1, 0.0, 25.0);
        check_rel(speed_coordination_accel(ego, info(2, 10.0, 25.0), 0.5), 0.0);
        check_rel(speed_coordination_accel(ego, info(2, 10.0, 26.0), 0.5), 0.5);
        check_rel(speed_coordination_accel(ego, info(2, 10.0, 20.0), 0.5), -2.5);
        CHECK_THROWS_AS(speed_coordination_accel(ego, std::nullopt, 0.5), PreconditionError);
        VelocityCommand raw;
        raw.vx = 25.0;
        raw.accel = -2.5;
        CHECK(saturate_command(raw, 25.0, ControlWeights{}, 30.0, 0.1).accel == -2.0);
    }

    TEST_CASE("saturation") {
        ControlWeights w;
        VelocityCommand raw{25.0, 0.5, 0.0};
        const auto same = saturate_command(raw, 25.0, w, 30.0, 0.1);
        CHECK(same.vx == 25.0);
        CHECK(same.vy == 0.5);
        raw.vx = 29.0;
        check_rel(saturate_command(raw, 25.0, w, 30.0, 0.1).vx, 25.1);
        raw.vx = 10.0;
        check_rel(saturate_command(raw, 25.0, w, 30.0, 0.1).vx, 24.8);
        raw.vy = 5.76;
        CHECK(saturate_command(raw, 25.0, w, 30.0, 0.1).vy == 0.7);
        raw.vy = -5.76;
        CHECK(saturate_command(raw, 25.0, w, 30.0, 0.1).vy == -0.7);
        raw.vx = 40.0;
        CHECK(saturate_command(raw, 29.95, w, 30.0, 0.1).vx == 30.0);
        CHECK_THROWS_AS(saturate_command(raw, 25.0, w, 30.0, 0.0), PreconditionError);
    }

    TEST_CASE("position error examples") {
        NeighborSet n;
        CHECK(position_error(car(1, 1, 0.0), n, 10.0) == 0.0);
        n[SlotKind::front] = info(2, 12.0);
        n[SlotKind::back] = info(3, -10.0);
        check_rel(position_error(car(1, 1, 0.0), n, 10.0), 2.0);
    }

    TEST_CASE("property: PE is non-negative and zero exactly at the desired offsets") {
        HighwayConfig road;
        ControlWeights w;
        Gen g(77);
        for (int trial = 0; trial < 2000; ++trial) {
            const auto ego = car(1, 1, g.real(-50.0, 50.0));
            NeighborSet exact;
            NeighborSet off;
            for (SlotKind s : kAllSlots) {
                if (g.coin()) continue;
                exact[s] = info(static_cast<int>(s) + 2, ego.x + desired_offset(s, w.d_safe));
                off[s] = info(static_cast<int>(s) + 2, ego.x + desired_offset(s, w.d_safe) + g.real(-3.0, 3.0));
            }
            CHECK(position_error(ego, exact, w.d_safe) == doctest::Approx(0.0).epsilon(1e-12));
            CHECK(position_error(ego, off, w.d_safe) >= 0.0);
            const auto c = formation_velocity_command(ego, exact, w, {1, 25.0}, road);
            CHECK(c.vx == doctest::Approx(25.0).epsilon(1e-12));
            CHECK(c.vy == 0.0);
            if (off.occupied() > 0) {
                const auto slot = std::find_if(std::begin(kAllSlots), std::end(kAllSlots),
                                               [&](SlotKind s) { return off[s].has_value(); });
                auto moved = off;
                moved[*slot]->x += 1.0;
                CHECK(position_error(ego, moved, w.d_safe) > 0.0);
            }
        }
    }

    TEST_CASE("IDLE coordination adds to the formation command") {
        HighwayConfig road;
        ControlWeights w;
        NeighborSet n;
        n[SlotKind::front] = info(2, 10.0, 26.0);
        const auto ego = car(1, 1, 0.0, 25.0);
        const auto idle = control_command(ego, n, w, {1, 25.0}, DecisionAction::idle, road, 0.1);
        const auto faster = control_command(ego, n, w, {1, 25.0}, DecisionAction::faster, road, 0.1);
        check_rel(idle.accel, 0.5);
        check_rel(idle.vx, 25.05);
        check_rel(faster.vx, 25.0);
    }

    TEST_CASE("membership: hidden vehicles see others but are invisible to them") {
        FormationMembership m;
        m.hidden.insert(2);
        m.planning_lane[3] = 2;
        const std::vector<VehicleState> all{car(1, 1, 0.0), car(2, 1, 10.0), car(3, 1, -10.0)};
        const auto n1 = neighbors_in(all, all[0], m, 100.0);
        CHECK(!n1[SlotKind::front]);
        REQUIRE(n1[SlotKind::back_left]);
        CHECK(n1[SlotKind::back_left]->id == 3);
        const auto n2 = neighbors_in(all, all[1], m, 100.0);
        REQUIRE(n2[SlotKind::back]);
        CHECK(n2[SlotKind::back]->id == 1);
        m.detached.insert(1);
        CHECK(neighbors_in(all, all[0], m, 100.0).occupied() == 0);
    }

    TEST_CASE("property: IDLE convoy converges from order-preserving perturbations") {
        HighwayConfig road;
        ControlWeights w;
        Gen g(5);
        for (int trial = 0; trial < 20; ++trial) {
            auto convoy = convoy::testing::interlaced_convoy(road, w.d_safe);
            // +-2 m keeps every adjacent-lane pair at least 1 m apart in its original order.
            for (auto& v : convoy) v.x += g.real(-2.0, 2.0);
            const auto r = convoy::testing::run_idle_convoy(convoy, w, road, 30.0, 0.5, 0.1);
            CHECK(r.seconds >= 0.0);
        }
    }
}
