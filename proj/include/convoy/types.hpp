#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace convoy {

using VehicleId = int;

enum class Role { convoy, environment };

enum class Task { none, avoid_obstacles, join_convoy, leave_convoy, escort_switch, protected_vehicle };

enum class DecisionAction { idle, lane_left, lane_right, faster, slower };

inline constexpr DecisionAction kAllActions[] = {DecisionAction::idle, DecisionAction::lane_left,
                                                 DecisionAction::lane_right, DecisionAction::faster,
                                                 DecisionAction::slower};

std::string_view to_string(Role role);
std::string_view to_string(Task task);
/// Action token as it appears in prompts and model output ("IDLE", "LANE_LEFT", ...).
std::string_view to_string(DecisionAction action);

std::optional<Role> role_from_string(std::string_view s);
std::optional<Task> task_from_string(std::string_view s);
std::optional<DecisionAction> action_from_string(std::string_view s);

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

struct HighwayConfig {
    double length = 1000.0;
    int lane_count = 3;
    double lane_width = 3.2;
    double max_speed = 30.0;
    double comm_range = 100.0;
    double spawn_region_end = 700.0;

    /// Throws PreconditionError when an invariant does not hold.
    void validate() const;
    double road_width() const { return lane_count * lane_width; }
    int leftmost_lane() const { return lane_count - 1; }
    int center_lane() const { return lane_count / 2; }
};

/// Lateral centerline of a lane; lane 0 is the rightmost lane.
inline double lane_center(const HighwayConfig& cfg, int lane) { return (lane + 0.5) * cfg.lane_width; }

/// Lane index from lateral position, clamped to the road.
int lane_of(const HighwayConfig& cfg, double y);

struct VehicleState {
    VehicleId id = 0;
    Role role = Role::convoy;
    Task task = Task::none;
    int lane = 0;
    double x = 0.0;
    double y = 0.0;
    double v = 0.0;
    double vy = 0.0;
    double length = 5.0;
    double width = 1.8;
    // Free-road speed for environment traffic; unused by convoy vehicles.
    double desired_speed = 0.0;

    bool operator==(const VehicleState&) const = default;
};

struct ControlWeights {
    double w_f = 2.0;
    double w_b = 1.0;
    double w_fl = 1.0;
    double w_bl = 0.1;
    double w_fr = 1.0;
    double w_br = 0.1;
    double w_y = 1.8;
    double w_v = 0.5;
    double d_safe = 10.0;
    double acc = 1.0;
    double dec = 2.0;
    double v_desired = 25.0;
    // Lateral speed saturation; not part of the weight table.
    double vy_max = 0.7;

    void validate() const;
};

struct VelocityCommand {
    double vx = 0.0;
    double vy = 0.0;
    double accel = 0.0;
};

struct ActionTargets {
    int target_lane = 0;
    double target_speed = 0.0;

    bool operator==(const ActionTargets&) const = default;
};

}  // namespace convoy
