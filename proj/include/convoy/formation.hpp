#pragma once

#include <array>
#include <optional>
#include <set>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "convoy/types.hpp"

namespace convoy {

enum class SlotKind { front, back, front_left, back_left, front_right, back_right };

inline constexpr SlotKind kAllSlots[] = {SlotKind::front,      SlotKind::back,       SlotKind::front_left,
                                         SlotKind::back_left,  SlotKind::front_right, SlotKind::back_right};

/// Short slot name used in traces and prompts ("N_f", "N_bl", ...).
std::string_view to_string(SlotKind slot);

bool is_forward(SlotKind slot);
/// Lane offset of the sector relative to the ego lane: 0 same, +1 left, -1 right.
int lane_offset(SlotKind slot);

struct NeighborInfo {
    VehicleId id = 0;
    double x = 0.0;
    double v = 0.0;
    int lane = 0;

    bool operator==(const NeighborInfo&) const = default;
};

/// The six-slot local graph around an ego vehicle. Absent slots are empty optionals.
struct NeighborSet {
    std::array<std::optional<NeighborInfo>, 6> slots{};

    const std::optional<NeighborInfo>& operator[](SlotKind s) const { return slots[static_cast<int>(s)]; }
    std::optional<NeighborInfo>& operator[](SlotKind s) { return slots[static_cast<int>(s)]; }
    int occupied() const;

    bool operator==(const NeighborSet&) const = default;
};

/// Which slot a convoy vehicle occupies relative to ego, if any (ignores nearest-ness).
std::optional<SlotKind> sector_of(const VehicleState& ego, const VehicleState& other, double comm_range);

/// Nearest convoy vehicle per sector within comm_range; ties go to the lower id.
NeighborSet compute_neighbors(const VehicleState& ego, std::span<const VehicleState> convoy, double comm_range);

/// Signed desired longitudinal offset of a neighbor: forward slots positive, backward negative.
double desired_offset(SlotKind slot, double d_safe);

double slot_weight(const ControlWeights& w, SlotKind slot);

/// Distributed formation law: unsaturated (vx, vy) from neighbor offsets and the decoded targets.
VelocityCommand formation_velocity_command(const VehicleState& ego, const NeighborSet& nbrs,
                                           const ControlWeights& w, const ActionTargets& targets,
                                           const HighwayConfig& road);

/// Same-lane speed coordination: w_v * (v_f - v_ego). Throws PreconditionError without a front neighbor.
double speed_coordination_accel(const VehicleState& ego, const std::optional<NeighborInfo>& front, double w_v);

VelocityCommand saturate_command(const VelocityCommand& raw, double prev_v, const ControlWeights& w,
                                 double max_speed, double dt);

/// Sum over occupied slots of |(x_n - x_ego) - desired_offset(slot)|.
double position_error(const VehicleState& ego, const NeighborSet& nbrs, double d_safe);

/// Full per-tick longitudinal/lateral command for one convoy vehicle. IDLE vehicles with a
/// front neighbor add the speed-coordination acceleration on top of the formation law.
VelocityCommand control_command(const VehicleState& ego, const NeighborSet& nbrs, const ControlWeights& w,
                                const ActionTargets& targets, DecisionAction decision, const HighwayConfig& road,
                                double dt);

/// Who participates in whose neighbor graph.
///
/// `planning_lane` overrides a vehicle's lane for graph purposes (a vehicle that has committed to
/// a lane change is placed in its target lane). `hidden` vehicles still see their own neighbors
/// but are invisible to everyone else; `detached` vehicles take no part in the graph at all.
struct FormationMembership {
    std::map<VehicleId, int> planning_lane;
    std::set<VehicleId> hidden;
    std::set<VehicleId> detached;

    bool visible(VehicleId id) const { return !hidden.contains(id) && !detached.contains(id); }
    int lane_for(const VehicleState& v) const;
};

/// Convoy vehicles (other than ego) that ego's graph is built from, with planning lanes applied.
std::vector<VehicleState> formation_peers(std::span<const VehicleState> vehicles, const VehicleState& ego,
                                          const FormationMembership& membership);

/// Ego with its planning lane applied.
VehicleState planning_state(const VehicleState& ego, const FormationMembership& membership);

/// Neighbor set of `ego` under a membership policy; empty for detached or non-convoy vehicles.
NeighborSet neighbors_in(std::span<const VehicleState> vehicles, const VehicleState& ego,
                         const FormationMembership& membership, double comm_range);

}  // namespace convoy
