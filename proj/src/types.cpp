#include "convoy/types.hpp"

#include <algorithm>
#include <cmath>

namespace convoy {

std::string_view to_string(Role role) {
    switch (role) {
        case Role::convoy: return "convoy";
        case Role::environment: return "environment";
    }
    return "unknown";
}

std::string_view to_string(Task task) {
    switch (task) {
        case Task::none: return "none";
        case Task::avoid_obstacles: return "avoid_obstacles";
        case Task::join_convoy: return "join_convoy";
        case Task::leave_convoy: return "leave_convoy";
        case Task::escort_switch: return "escort_switch";
        case Task::protected_vehicle: return "protected";
    }
    return "unknown";
}

std::string_view to_string(DecisionAction action) {
    switch (action) {
        case DecisionAction::idle: return "IDLE";
        case DecisionAction::lane_left: return "LANE_LEFT";
        case DecisionAction::lane_right: return "LANE_RIGHT";
        case DecisionAction::faster: return "FASTER";
        case DecisionAction::slower: return "SLOWER";
    }
    return "UNKNOWN";
}

std::optional<Role> role_from_string(std::string_view s) {
    for (Role r : {Role::convoy, Role::environment}) {
        if (to_string(r) == s) return r;
    }
    return std::nullopt;
}

std::optional<Task> task_from_string(std::string_view s) {
    for (Task t : {Task::none, Task::avoid_obstacles, Task::join_convoy, Task::leave_convoy, Task::escort_switch,
                   Task::protected_vehicle}) {
        if (to_string(t) == s) return t;
    }
    return std::nullopt;
}

std::optional<DecisionAction> action_from_string(std::string_view s) {
    for (DecisionAction a : kAllActions) {
        if (to_string(a) == s) return a;
    }
    return std::nullopt;
}

void HighwayConfig::validate() const {
    if (lane_count < 1) throw PreconditionError("highway: lane_count must be >= 1");
    if (!(length > 0)) throw PreconditionError("highway: length must be > 0");
    if (!(spawn_region_end > 0) || spawn_region_end > length)
        throw PreconditionError("highway: spawn_region_end must lie in (0, length]");
    if (!(max_speed > 0)) throw PreconditionError("highway: max_speed must be > 0");
    if (!(lane_width > 0)) throw PreconditionError("highway: lane_width must be > 0");
    if (!(comm_range > 0)) throw PreconditionError("highway: comm_range must be > 0");
}

int lane_of(const HighwayConfig& cfg, double y) {
    const int lane = static_cast<int>(std::floor(y / cfg.lane_width));
    return std::clamp(lane, 0, cfg.lane_count - 1);
}

void ControlWeights::validate() const {
    for (double w : {w_f, w_b, w_fl, w_bl, w_fr, w_br, w_y, w_v}) {
        if (w < 0) throw PreconditionError("weights: all weights must be >= 0");
    }
    if (!(d_safe > 0)) throw PreconditionError("weights: d_safe must be > 0");
    if (!(acc > 0) || !(dec > 0)) throw PreconditionError("weights: acc and dec must be > 0");
    if (!(vy_max > 0)) throw PreconditionError("weights: vy_max must be > 0");
}

}  // namespace convoy
