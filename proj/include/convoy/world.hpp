#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "convoy/formation.hpp"
#include "convoy/types.hpp"

namespace convoy {

class SpawnCapacityError : public Error {
public:
    using Error::Error;
};

class UnknownVehicleError : public Error {
public:
    explicit UnknownVehicleError(VehicleId id);
    VehicleId id() const { return id_; }

private:
    VehicleId id_;
};

struct Collision {
    VehicleId a = 0;
    VehicleId b = 0;
    double time = 0.0;

    bool operator==(const Collision&) const = default;
};

struct WorldState {
    double time = 0.0;
    std::int64_t step_index = 0;
    HighwayConfig highway;
    std::vector<VehicleState> vehicles;  // sorted by id
    std::uint64_t rng_seed = 0;
    std::vector<Collision> collisions;

    const VehicleState* find(VehicleId id) const;
    VehicleState* find(VehicleId id);
    const VehicleState& at(VehicleId id) const;
    /// Inserts keeping id order; throws PreconditionError on a duplicate id.
    void add_vehicle(VehicleState v);
};

/// Environment-traffic car following (Intelligent Driver Model) and the world's safe-speed guard.
struct TrafficParams {
    double headway = 1.5;        // T, s
    double min_gap = 2.0;        // s0, m
    double accel = 1.0;          // a, m/s^2 (also acc_env)
    double comfort_decel = 2.0;  // b, m/s^2
    double max_decel = 4.5;      // dec_env, m/s^2
    // Guard: every vehicle is held to a speed from which it can stop behind its leader.
    double guard_decel = 4.5;
    double guard_min_gap = 0.5;
    double emergency_decel = 9.0;
    double lateral_margin = 0.3;
};

struct SensedVehicle {
    VehicleId id = 0;
    int lane = 0;
    double x = 0.0;
    double v = 0.0;

    bool operator==(const SensedVehicle&) const = default;
};

struct Perception {
    int lane_count = 0;
    double lane_width = 0.0;
    double max_speed = 0.0;
    double comm_range = 0.0;
    /// Vehicles outside ego's formation graph within comm_range, nearest first.
    std::vector<SensedVehicle> env_vehicles;
    NeighborSet convoy_neighbors;
};

std::vector<VehicleState> spawn_environment_vehicles(const HighwayConfig& cfg, int count, std::uint64_t seed,
                                                     VehicleId first_id = 1000);

/// Nearest vehicle ahead of `ego` whose footprint overlaps ego's lateral band.
const VehicleState* leader_of(std::span<const VehicleState> vehicles, const VehicleState& ego,
                              double lateral_margin);

/// True when no vehicle other than ego sits in `lane` within `clearance` of ego longitudinally.
bool lane_entry_clear(std::span<const VehicleState> vehicles, const VehicleState& ego, int lane, double clearance);

double env_vehicle_accel(const VehicleState& ego, const VehicleState* leader, const TrafficParams& p = {});

/// Largest speed for this tick from which ego can still stop behind `leader` (if any).
double safe_speed(const VehicleState& ego, const VehicleState* leader, double dt, const TrafficParams& p = {});

/// Unordered pairs (lower id first) whose length x width footprints overlap.
std::vector<std::pair<VehicleId, VehicleId>> detect_collisions(const WorldState& world);

WorldState step_world(const WorldState& world, const std::map<VehicleId, VelocityCommand>& commands, double dt,
                      const TrafficParams& p = {});

Perception sense(const WorldState& world, VehicleId ego_id, const FormationMembership& membership = {});

}  // namespace convoy
