#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "convoy/formation.hpp"
#include "convoy/types.hpp"
#include "convoy/world.hpp"

namespace convoy::testing {

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool coin() { return integer(0, 1) == 1; }
    std::mt19937_64& engine() { return rng_; }

    std::vector<double> features(std::size_t dim) {
        std::vector<double> f(dim);
        for (auto& x : f) x = real(-1.0, 1.0);
        return f;
    }

    // Up to `max_n` convoy vehicles on a 3-lane road; positions snap to a coarse grid so that
    // distance ties between sectors actually occur.
    std::vector<VehicleState> convoy_layout(int max_n, const HighwayConfig& road) {
        const int n = integer(1, max_n);
        std::vector<VehicleState> out;
        for (int i = 0; i < n; ++i) {
            VehicleState v;
            v.id = i + 1;
            v.role = Role::convoy;
            v.lane = integer(0, road.lane_count - 1);
            v.x = coin() ? integer(-30, 30) * 5.0 : real(-150.0, 150.0);
            v.y = lane_center(road, v.lane);
            v.v = real(15.0, 30.0);
            out.push_back(v);
        }
        return out;
    }

private:
    std::mt19937_64 rng_;
};

// Eight vehicles in three interlaced columns: lanes 0 and 2 at x0 - k D, lane 1 at x0 - D/2 - k D.
inline std::vector<VehicleState> interlaced_convoy(const HighwayConfig& road, double d, double x0 = 0.0) {
    std::vector<VehicleState> out;
    int id = 1;
    for (int row = 0; row < 3; ++row) {
        for (int lane = 0; lane < road.lane_count; ++lane) {
            if (lane == 1 && row == 2) continue;
            VehicleState v;
            v.id = id++;
            v.role = Role::convoy;
            v.task = Task::avoid_obstacles;
            v.lane = lane;
            v.x = x0 - row * d - (lane % 2 == 1 ? d / 2.0 : 0.0);
            v.y = lane_center(road, lane);
            v.v = 25.0;
            out.push_back(v);
        }
    }
    return out;
}

struct ConvergenceResult {
    double seconds = -1.0;  // first time every PE < pe_tol and every speed within v_tol; -1 if never
    WorldState final_world;
    double final_max_pe = 0.0;
    double final_max_speed_error = 0.0;
};

// IDLE convoy under the formation law alone, no traffic, targets (own lane, v_desired).
inline ConvergenceResult run_idle_convoy(std::vector<VehicleState> vehicles, const ControlWeights& w,
                                         const HighwayConfig& road, double horizon_s, double pe_tol, double v_tol,
                                         double dt = 0.1) {
    WorldState world;
    world.highway = road;
    for (auto& v : vehicles) world.add_vehicle(v);
    ConvergenceResult r;
    const int steps = static_cast<int>(std::lround(horizon_s / dt));
    for (int step = 0; step <= steps; ++step) {
        std::map<VehicleId, VelocityCommand> cmds;
        double max_pe = 0.0;
        double max_dv = 0.0;
        for (const auto& v : world.vehicles) {
            const auto nbrs = neighbors_in(world.vehicles, v, {}, road.comm_range);
            max_pe = std::max(max_pe, position_error(v, nbrs, w.d_safe));
            max_dv = std::max(max_dv, std::abs(v.v - w.v_desired));
            cmds[v.id] = control_command(v, nbrs, w, {v.lane, w.v_desired}, DecisionAction::idle, road, dt);
        }
        r.final_max_pe = max_pe;
        r.final_max_speed_error = max_dv;
        if (r.seconds < 0 && max_pe < pe_tol && max_dv <= v_tol) r.seconds = world.time;
        if (step == steps) break;
        world = step_world(world, cmds, dt);
    }
    r.final_world = world;
    return r;
}

}  // namespace convoy::testing

namespace convoy::testing {

// Independent reference for the six-slot graph: enumerate every (vehicle, sector) pair, then sort.
inline NeighborSet brute_force_neighbors(const VehicleState& ego, const std::vector<VehicleState>& convoy,
                                         double comm_range) {
    struct Sector {
        SlotKind kind;
        int lane_delta;
        bool forward;
    };
    const Sector sectors[] = {{SlotKind::front, 0, true},       {SlotKind::back, 0, false},
                              {SlotKind::front_left, 1, true},  {SlotKind::back_left, 1, false},
                              {SlotKind::front_right, -1, true}, {SlotKind::back_right, -1, false}};
    NeighborSet out;
    for (const auto& sec : sectors) {
        std::vector<const VehicleState*> candidates;
        for (const auto& o : convoy) {
            if (o.id == ego.id || o.lane - ego.lane != sec.lane_delta) continue;
            const double dx = o.x - ego.x;
            if (std::abs(dx) > comm_range) continue;
            if ((dx >= 0.0) != sec.forward) continue;
            candidates.push_back(&o);
        }
        std::sort(candidates.begin(), candidates.end(), [&](const VehicleState* a, const VehicleState* b) {
            const double da = std::abs(a->x - ego.x);
            const double db = std::abs(b->x - ego.x);
            return da != db ? da < db : a->id < b->id;
        });
        if (!candidates.empty()) {
            const auto* c = candidates.front();
            out[sec.kind] = NeighborInfo{c->id, c->x, c->v, c->lane};
        }
    }
    return out;
}

}  // namespace convoy::testing
