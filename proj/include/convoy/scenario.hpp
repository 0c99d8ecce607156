#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "convoy/backend.hpp"
#include "convoy/formation.hpp"
#include "convoy/memory.hpp"
#include "convoy/reasoning.hpp"
#include "convoy/types.hpp"
#include "convoy/world.hpp"

namespace convoy {

enum class ScenarioKind { avoid_obstacles, join_convoy, leave_convoy, escort_switch };

inline constexpr ScenarioKind kAllScenarios[] = {ScenarioKind::avoid_obstacles, ScenarioKind::join_convoy,
                                                 ScenarioKind::leave_convoy, ScenarioKind::escort_switch};

std::string_view to_string(ScenarioKind kind);
/// Short name used in output paths: avoid, join, leave, escort.
std::string_view short_name(ScenarioKind kind);
/// Accepts both the short and the full name.
std::optional<ScenarioKind> scenario_from_string(std::string_view s);
Task scenario_task(ScenarioKind kind);

enum class FailureReason { collision, timeout };

std::string_view to_string(FailureReason r);

class PlacementError : public Error {
public:
    using Error::Error;
};

struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::avoid_obstacles;
    int env_vehicle_count = 0;
    std::uint64_t seed = 0;
    int convoy_size = 8;
    double dt = 0.1;
    double decision_period = 1.0;
    double max_sim_time = 120.0;
    BackendConfig backend;
    HighwayConfig highway;
    ControlWeights weights;
    ReasoningConfig reasoning;
    TrafficParams traffic;
    OracleParams oracle;

    double convoy_front_x = -10.0;   // x of the front column at t = 0
    double initial_jitter = 0.5;     // seeded longitudinal perturbation of convoy members, m
    double join_distance = 50.0;     // joiner placed this far behind the rearmost other member
    double dock_tolerance = 2.0;     // joiner counted as docked within this distance of its slot
    double settle_time = 3.0;        // dwell for join / escort success, s
    double lane_entry_clearance = 6.0;  // lateral motion waits until the next lane is this clear, m
    int trace_stride = 1;            // record every n-th step (the final step is always recorded)
    bool record_trace = true;

    /// Read-only experience pool for few-shot prompting (llm_http backend only).
    std::shared_ptr<const ExperiencePool> pool;

    void validate() const;
};

/// Scenario with defaults for a kind: 20 environment vehicles for avoid_obstacles, none otherwise.
ScenarioConfig default_scenario(ScenarioKind kind, std::uint64_t seed = 0);

struct EscortSlot {
    int lane = 0;
    double offset = 0.0;  // longitudinal offset from the protected vehicle

    bool operator==(const EscortSlot&) const = default;
};

/// Box around the protected vehicle: center lane +-D_safe, left lane +D/2, -D/2, -3D/2, right lane +D/2, -D/2.
std::vector<EscortSlot> escort_slot_pattern(const HighwayConfig& road, double d_safe);

/// Slot for every member minimizing total displacement from the members' current positions
/// (longitudinal distance plus D_safe per lane of lateral distance). pattern[0] is the protected
/// vehicle's own slot; the rest are searched exhaustively over all permutations, ties going to the
/// lexicographically smallest assignment in id order.
std::map<VehicleId, EscortSlot> assign_escort_slots(VehicleId protected_id, std::span<const VehicleState> members,
                                                    std::span<const EscortSlot> pattern, const HighwayConfig& road,
                                                    double d_safe);

std::map<VehicleId, EscortSlot> assign_escort_slots(VehicleId protected_id, std::span<const VehicleState> members,
                                                    const HighwayConfig& road, double d_safe);

double escort_displacement(const std::map<VehicleId, EscortSlot>& slots, VehicleId protected_id,
                           std::span<const VehicleState> members, const HighwayConfig& road, double d_safe);

WorldState init_scenario(const ScenarioConfig& cfg);

struct TraceRow {
    std::int64_t step = 0;
    double time = 0.0;
    VehicleId id = 0;
    Role role = Role::convoy;
    Task task = Task::none;
    int lane = 0;
    double x = 0.0;
    double y = 0.0;
    double v = 0.0;
    double vy = 0.0;
    std::optional<DecisionAction> decision;
    std::optional<double> position_error;
};

struct DecisionRecord {
    std::int64_t step = 0;
    VehicleId id = 0;
    DecisionAction action = DecisionAction::idle;
    double latency_s = 0.0;
    bool fallback = false;  // backend or decode failure mapped to IDLE
};

struct RunSummary {
    ScenarioKind scenario = ScenarioKind::avoid_obstacles;
    std::uint64_t seed = 0;
    int env_vehicle_count = 0;
    bool success = false;
    std::optional<FailureReason> failure_reason;
    double avg_convoy_speed = 0.0;
    double final_pe = 0.0;
    double sim_time = 0.0;
    std::int64_t steps = 0;
    std::vector<Collision> collisions;
    std::map<VehicleId, std::vector<double>> pe_series;
    std::map<VehicleId, std::vector<double>> speed_series;
    std::vector<DecisionRecord> decisions;
    std::vector<TraceRow> trace;
    std::vector<Experience> experiences;  // labeled with the run outcome
    std::optional<std::string> error;     // set by run_batch when the run threw
};

RunSummary run_scenario(const ScenarioConfig& cfg);

struct HistogramBin {
    double lo = 0.0;
    double hi = 0.0;
    int count = 0;
};

struct BatchResult {
    std::vector<RunSummary> runs;  // in seed order
    int success_count = 0;
    double success_rate = 0.0;
    std::vector<HistogramBin> avg_speed_histogram;
};

/// Average-speed histogram over runs that did not error, 1 m/s bins spanning [0, max_speed].
std::vector<HistogramBin> speed_histogram(std::span<const RunSummary> runs, double max_speed, double bin_width = 1.0);

/// Runs every seed with a bounded worker pool. `on_run` is called from the worker thread right
/// after each run (for per-seed output); traces are dropped from the retained summaries.
BatchResult run_batch(const ScenarioConfig& base, std::span<const std::uint64_t> seeds, int workers = 1,
                      const std::function<void(const RunSummary&)>& on_run = {});

}  // namespace convoy
