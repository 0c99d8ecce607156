#include "convoy/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <string>

namespace convoy {

namespace {

// Bit-exact across standard libraries, unlike std::uniform_real_distribution.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

int uniform_int(std::mt19937_64& rng, int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); }

}  // namespace

UnknownVehicleError::UnknownVehicleError(VehicleId id)
    : Error("unknown vehicle id " + std::to_string(id)), id_(id) {}

const VehicleState* WorldState::find(VehicleId id) const {
    auto it = std::lower_bound(vehicles.begin(), vehicles.end(), id,
                               [](const VehicleState& v, VehicleId key) { return v.id < key; });
    return (it != vehicles.end() && it->id == id) ? &*it : nullptr;
}

VehicleState* WorldState::find(VehicleId id) {
    return const_cast<VehicleState*>(std::as_const(*this).find(id));
}

const VehicleState& WorldState::at(VehicleId id) const {
    const auto* v = find(id);
    if (!v) throw UnknownVehicleError(id);
    return *v;
}

void WorldState::add_vehicle(VehicleState v) {
    auto it = std::lower_bound(vehicles.begin(), vehicles.end(), v.id,
                               [](const VehicleState& a, VehicleId key) { return a.id < key; });
    if (it != vehicles.end() && it->id == v.id)
        throw PreconditionError("duplicate vehicle id " + std::to_string(v.id));
    vehicles.insert(it, std::move(v));
}

std::vector<VehicleState> spawn_environment_vehicles(const HighwayConfig& cfg, int count, std::uint64_t seed,
                                                     VehicleId first_id) {
    if (count < 0) throw PreconditionError("spawn: count must be >= 0");
    cfg.validate();
    constexpr int kMaxAttempts = 1000;
    std::mt19937_64 rng(seed);
    std::vector<VehicleState> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        VehicleState v;
        v.id = first_id + i;
        v.role = Role::environment;
        v.task = Task::none;
        bool placed = false;
        for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
            v.x = uniform(rng, 0.0, cfg.spawn_region_end);
            v.lane = uniform_int(rng, cfg.lane_count);
            v.v = uniform(rng, 15.0, 30.0);
            placed = std::none_of(out.begin(), out.end(), [&](const VehicleState& o) {
                return o.lane == v.lane && std::abs(o.x - v.x) < 2.0 * v.length;
            });
        }
        if (!placed)
            throw SpawnCapacityError("cannot place environment vehicle " + std::to_string(i + 1) + " of " +
                                     std::to_string(count) + " without overlap");
        v.y = lane_center(cfg, v.lane);
        v.desired_speed = v.v;
        out.push_back(v);
    }
    return out;
}

const VehicleState* leader_of(std::span<const VehicleState> vehicles, const VehicleState& ego,
                              double lateral_margin) {
    const VehicleState* best = nullptr;
    for (const auto& o : vehicles) {
        if (o.id == ego.id || o.x <= ego.x) continue;
        if (std::abs(o.y - ego.y) >= (o.width + ego.width) / 2.0 + lateral_margin) continue;
        if (!best || o.x < best->x || (o.x == best->x && o.id < best->id)) best = &o;
    }
    return best;
}

bool lane_entry_clear(std::span<const VehicleState> vehicles, const VehicleState& ego, int lane, double clearance) {
    return std::none_of(vehicles.begin(), vehicles.end(), [&](const VehicleState& o) {
        return o.id != ego.id && o.lane == lane && std::abs(o.x - ego.x) < clearance;
    });
}

double env_vehicle_accel(const VehicleState& ego, const VehicleState* leader, const TrafficParams& p) {
    const double v0 = ego.desired_speed > 0 ? ego.desired_speed : std::max(ego.v, 1.0);
    double a = p.accel * (1.0 - std::pow(ego.v / v0, 4));
    if (leader) {
        const double gap = std::max(leader->x - ego.x - (leader->length + ego.length) / 2.0, 0.01);
        const double dv = ego.v - leader->v;
        const double s_star =
            p.min_gap + std::max(0.0, ego.v * p.headway + ego.v * dv / (2.0 * std::sqrt(p.accel * p.comfort_decel)));
        a -= p.accel * (s_star / gap) * (s_star / gap);
    }
    return std::clamp(a, -p.max_decel, p.accel);
}

double safe_speed(const VehicleState& ego, const VehicleState* leader, double dt, const TrafficParams& p) {
    if (!leader) return std::numeric_limits<double>::infinity();
    const double b = p.guard_decel;
    const double gap = leader->x - ego.x - (leader->length + ego.length) / 2.0;
    const double budget = gap - p.guard_min_gap + leader->v * dt + leader->v * leader->v / (2.0 * b);
    if (budget <= 0) return 0.0;
    return std::max(0.0, -b * dt + std::sqrt(b * b * dt * dt + 2.0 * b * budget));
}

std::vector<std::pair<VehicleId, VehicleId>> detect_collisions(const WorldState& world) {
    std::vector<std::pair<VehicleId, VehicleId>> out;
    const auto& vs = world.vehicles;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        for (std::size_t j = i + 1; j < vs.size(); ++j) {
            const auto& a = vs[i];
            const auto& b = vs[j];
            if (std::abs(a.x - b.x) < (a.length + b.length) / 2.0 && std::abs(a.y - b.y) < (a.width + b.width) / 2.0)
                out.emplace_back(std::min(a.id, b.id), std::max(a.id, b.id));
        }
    }
    return out;
}

WorldState step_world(const WorldState& world, const std::map<VehicleId, VelocityCommand>& commands, double dt,
                      const TrafficParams& p) {
    if (!(dt > 0)) throw PreconditionError("step_world: dt must be > 0");
    for (const auto& [id, cmd] : commands) {
        if (!world.find(id)) throw UnknownVehicleError(id);
    }
    const auto& road = world.highway;
    WorldState next = world;
    for (std::size_t i = 0; i < world.vehicles.size(); ++i) {
        const auto& cur = world.vehicles[i];
        auto& nxt = next.vehicles[i];
        const VehicleState* leader = leader_of(world.vehicles, cur, p.lateral_margin);
        double v_cmd = 0.0;
        double vy = 0.0;
        if (cur.role == Role::convoy) {
            const auto it = commands.find(cur.id);
            if (it == commands.end())
                throw PreconditionError("step_world: no command for convoy vehicle " + std::to_string(cur.id));
            v_cmd = it->second.vx;
            vy = it->second.vy;
        } else {
            v_cmd = cur.v + env_vehicle_accel(cur, leader, p) * dt;
        }
        const double floor_v = std::max(0.0, cur.v - p.emergency_decel * dt);
        double v = std::min(v_cmd, safe_speed(cur, leader, dt, p));
        v = std::clamp(std::max(v, floor_v), 0.0, road.max_speed);

        const double half_w = cur.width / 2.0;
        const double y = std::clamp(cur.y + vy * dt, half_w, road.road_width() - half_w);
        nxt.v = v;
        nxt.vy = (y - cur.y) / dt;
        nxt.x = cur.x + v * dt;
        nxt.y = y;
        nxt.lane = lane_of(road, y);
    }
    next.step_index = world.step_index + 1;
    next.time = static_cast<double>(next.step_index) * dt;

    std::set<std::pair<VehicleId, VehicleId>> seen;
    for (const auto& c : world.collisions) seen.emplace(c.a, c.b);
    for (const auto& [a, b] : detect_collisions(next)) {
        if (seen.emplace(a, b).second) next.collisions.push_back(Collision{a, b, next.time});
    }
    return next;
}

Perception sense(const WorldState& world, VehicleId ego_id, const FormationMembership& membership) {
    const VehicleState& ego = world.at(ego_id);
    const auto& road = world.highway;
    Perception p;
    p.lane_count = road.lane_count;
    p.lane_width = road.lane_width;
    p.max_speed = road.max_speed;
    p.comm_range = road.comm_range;
    const auto peers = formation_peers(world.vehicles, ego, membership);
    std::set<VehicleId> peer_ids;
    for (const auto& v : peers) peer_ids.insert(v.id);
    for (const auto& v : world.vehicles) {
        if (v.id == ego.id || peer_ids.contains(v.id)) continue;
        if (std::abs(v.x - ego.x) > road.comm_range) continue;
        p.env_vehicles.push_back(SensedVehicle{v.id, v.lane, v.x, v.v});
    }
    std::sort(p.env_vehicles.begin(), p.env_vehicles.end(), [&](const SensedVehicle& a, const SensedVehicle& b) {
        const double da = std::abs(a.x - ego.x);
        const double db = std::abs(b.x - ego.x);
        return da != db ? da < db : a.id < b.id;
    });
    p.convoy_neighbors = compute_neighbors(planning_state(ego, membership), peers, road.comm_range);
    return p;
}

}  // namespace convoy
