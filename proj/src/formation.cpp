#include "convoy/formation.hpp"

#include <algorithm>
#include <cmath>

namespace convoy {

std::string_view to_string(SlotKind slot) {
    switch (slot) {
        case SlotKind::front: return "N_f";
        case SlotKind::back: return "N_b";
        case SlotKind::front_left: return "N_fl";
        case SlotKind::back_left: return "N_bl";
        case SlotKind::front_right: return "N_fr";
        case SlotKind::back_right: return "N_br";
    }
    return "N_?";
}

bool is_forward(SlotKind slot) {
    return slot == SlotKind::front || slot == SlotKind::front_left || slot == SlotKind::front_right;
}

int lane_offset(SlotKind slot) {
    switch (slot) {
        case SlotKind::front_left:
        case SlotKind::back_left: return 1;
        case SlotKind::front_right:
        case SlotKind::back_right: return -1;
        default: return 0;
    }
}

int NeighborSet::occupied() const {
    return static_cast<int>(std::count_if(slots.begin(), slots.end(), [](const auto& s) { return s.has_value(); }));
}

std::optional<SlotKind> sector_of(const VehicleState& ego, const VehicleState& other, double comm_range) {
    const double dx = other.x - ego.x;
    if (std::abs(dx) > comm_range) return std::nullopt;
    const bool fwd = dx >= 0.0;
    switch (other.lane - ego.lane) {
        case 0: return fwd ? SlotKind::front : SlotKind::back;
        case 1: return fwd ? SlotKind::front_left : SlotKind::back_left;
        case -1: return fwd ? SlotKind::front_right : SlotKind::back_right;
        default: return std::nullopt;
    }
}

NeighborSet compute_neighbors(const VehicleState& ego, std::span<const VehicleState> convoy, double comm_range) {
    NeighborSet out;
    std::array<double, 6> best_dist{};
    for (const auto& other : convoy) {
        if (other.id == ego.id) continue;
        const auto sector = sector_of(ego, other, comm_range);
        if (!sector) continue;
        const int k = static_cast<int>(*sector);
        const double dist = std::abs(other.x - ego.x);
        auto& slot = out.slots[k];
        if (!slot || dist < best_dist[k] || (dist == best_dist[k] && other.id < slot->id)) {
            slot = NeighborInfo{other.id, other.x, other.v, other.lane};
            best_dist[k] = dist;
        }
    }
    return out;
}

double desired_offset(SlotKind slot, double d_safe) {
    const double magnitude = lane_offset(slot) == 0 ? d_safe : d_safe / 2.0;
    return is_forward(slot) ? magnitude : -magnitude;
}

double slot_weight(const ControlWeights& w, SlotKind slot) {
    switch (slot) {
        case SlotKind::front: return w.w_f;
        case SlotKind::back: return w.w_b;
        case SlotKind::front_left: return w.w_fl;
        case SlotKind::back_left: return w.w_bl;
        case SlotKind::front_right: return w.w_fr;
        case SlotKind::back_right: return w.w_br;
    }
    return 0.0;
}

VelocityCommand formation_velocity_command(const VehicleState& ego, const NeighborSet& nbrs,
                                           const ControlWeights& w, const ActionTargets& targets,
                                           const HighwayConfig& road) {
    double consensus = 0.0;
    for (SlotKind s : kAllSlots) {
        const auto& n = nbrs[s];
        if (!n) continue;
        consensus += slot_weight(w, s) * ((n->x - ego.x) - desired_offset(s, w.d_safe));
    }
    VelocityCommand cmd;
    cmd.vx = targets.target_speed + consensus;
    cmd.vy = w.w_y * (lane_center(road, targets.target_lane) - ego.y);
    return cmd;
}

double speed_coordination_accel(const VehicleState& ego, const std::optional<NeighborInfo>& front, double w_v) {
    if (!front) throw PreconditionError("speed coordination requires an occupied N_f slot");
    return w_v * (front->v - ego.v);
}

VelocityCommand saturate_command(const VelocityCommand& raw, double prev_v, const ControlWeights& w,
                                 double max_speed, double dt) {
    if (!(dt > 0)) throw PreconditionError("saturate_command: dt must be > 0");
    VelocityCommand out;
    const double lo = std::max(0.0, prev_v - w.dec * dt);
    const double hi = std::min(max_speed, prev_v + w.acc * dt);
    out.vx = std::clamp(std::clamp(raw.vx, 0.0, max_speed), std::min(lo, hi), hi);
    out.vy = std::clamp(raw.vy, -w.vy_max, w.vy_max);
    out.accel = std::clamp(raw.accel, -w.dec, w.acc);
    return out;
}

double position_error(const VehicleState& ego, const NeighborSet& nbrs, double d_safe) {
    double pe = 0.0;
    for (SlotKind s : kAllSlots) {
        const auto& n = nbrs[s];
        if (!n) continue;
        pe += std::abs((n->x - ego.x) - desired_offset(s, d_safe));
    }
    return pe;
}

VelocityCommand control_command(const VehicleState& ego, const NeighborSet& nbrs, const ControlWeights& w,
                                const ActionTargets& targets, DecisionAction decision, const HighwayConfig& road,
                                double dt) {
    VelocityCommand raw = formation_velocity_command(ego, nbrs, w, targets, road);
    if (decision == DecisionAction::idle && nbrs[SlotKind::front]) {
        raw.accel = std::clamp(speed_coordination_accel(ego, nbrs[SlotKind::front], w.w_v), -w.dec, w.acc);
        raw.vx += raw.accel * dt;
    }
    return saturate_command(raw, ego.v, w, road.max_speed, dt);
}

int FormationMembership::lane_for(const VehicleState& v) const {
    const auto it = planning_lane.find(v.id);
    return it == planning_lane.end() ? v.lane : it->second;
}

VehicleState planning_state(const VehicleState& ego, const FormationMembership& membership) {
    VehicleState s = ego;
    s.lane = membership.lane_for(ego);
    return s;
}

std::vector<VehicleState> formation_peers(std::span<const VehicleState> vehicles, const VehicleState& ego,
                                          const FormationMembership& membership) {
    std::vector<VehicleState> peers;
    if (ego.role != Role::convoy || membership.detached.contains(ego.id)) return peers;
    for (const auto& v : vehicles) {
        if (v.id == ego.id || v.role != Role::convoy || !membership.visible(v.id)) continue;
        peers.push_back(planning_state(v, membership));
    }
    return peers;
}

NeighborSet neighbors_in(std::span<const VehicleState> vehicles, const VehicleState& ego,
                         const FormationMembership& membership, double comm_range) {
    const auto peers = formation_peers(vehicles, ego, membership);
    return compute_neighbors(planning_state(ego, membership), peers, comm_range);
}

}  // namespace convoy
