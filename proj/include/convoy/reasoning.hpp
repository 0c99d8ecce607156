#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "convoy/memory.hpp"
#include "convoy/types.hpp"
#include "convoy/world.hpp"

namespace convoy {

enum class Bearing { ahead, behind, ahead_left, ahead_right, behind_left, behind_right };

inline constexpr Bearing kAllBearings[] = {Bearing::ahead,       Bearing::behind,      Bearing::ahead_left,
                                           Bearing::ahead_right, Bearing::behind_left, Bearing::behind_right};

std::string_view to_string(Bearing b);

/// Bearing of `other` seen from ego. Any lane to the left counts as left, to the right as right.
Bearing bearing_of(int ego_lane, double ego_x, int other_lane, double other_x);

/// Where a task wants the ego to end up, when the scenario defines it.
struct TaskGoal {
    std::optional<int> lane;
    std::optional<double> x;
    std::vector<VehicleId> stay_ahead_of;  // members that should end up behind the ego
    std::vector<VehicleId> stay_behind;    // members that should end up ahead of the ego

    bool operator==(const TaskGoal&) const = default;
};

struct SceneExtras {
    std::optional<ActionTargets> targets;
    TaskGoal goal;
};

struct SceneDescription {
    std::string text;
    std::vector<double> features;
    Task task = Task::none;
};

struct ReasoningConfig {
    double speed_step = 2.5;              // target-speed change of FASTER / SLOWER, m/s
    std::size_t few_shot_k = 3;
    std::size_t max_prompt_chars = 24000;  // P_max
};

/// Normalised scene embedding: ego lane and speed, then (dx, dv) of the nearest sensed vehicle per bearing.
std::vector<double> scene_features(const Perception& p, const VehicleState& ego);

std::string_view task_objective(Task task);

SceneDescription build_scene_description(const Perception& p, const VehicleState& ego, Task task,
                                         const SceneExtras& extras = {});

struct Prompt {
    std::string system;
    std::string user;

    std::string text() const { return system + "\n\n" + user; }
};

std::string_view system_preamble();

/// Few-shot prompt: preamble, up to k retrieved examples in order, the current scene and the
/// JSON output instruction.
Prompt generate_prompt(const SceneDescription& scene, std::span<const Experience> examples, std::size_t k = 3);

/// Reminder appended to the user message when a reply could not be decoded.
std::string_view json_reminder();

/// JSON "decision" field first, then the last action token in the raw text; nullopt on failure.
std::optional<DecisionAction> decode_decision(std::string_view raw);

/// Target lane and speed for an action. Lane changes are relative to the committed lane in
/// `current`; a lane change off the road edge degrades to IDLE.
ActionTargets decode_action(DecisionAction a, const VehicleState& ego, const ActionTargets& current,
                            const HighwayConfig& cfg, const ControlWeights& w, double speed_step = 2.5);

}  // namespace convoy
