#include "convoy/reasoning.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <nlohmann/json.hpp>

#include "text_format.hpp"

namespace convoy {

using detail::fixed;
using detail::signed_fixed;

std::string_view to_string(Bearing b) {
    switch (b) {
        case Bearing::ahead: return "ahead";
        case Bearing::behind: return "behind";
        case Bearing::ahead_left: return "ahead-left";
        case Bearing::ahead_right: return "ahead-right";
        case Bearing::behind_left: return "behind-left";
        case Bearing::behind_right: return "behind-right";
    }
    return "unknown";
}

Bearing bearing_of(int ego_lane, double ego_x, int other_lane, double other_x) {
    const bool ahead = other_x >= ego_x;
    if (other_lane == ego_lane) return ahead ? Bearing::ahead : Bearing::behind;
    if (other_lane > ego_lane) return ahead ? Bearing::ahead_left : Bearing::behind_left;
    return ahead ? Bearing::ahead_right : Bearing::behind_right;
}

std::vector<double> scene_features(const Perception& p, const VehicleState& ego) {
    std::vector<double> f(kFeatureDim, 0.0);
    const double lanes = std::max(p.lane_count, 1);
    const double vmax = p.max_speed > 0 ? p.max_speed : 1.0;
    const double range = p.comm_range > 0 ? p.comm_range : 1.0;
    f[0] = ego.lane / lanes;
    f[1] = ego.v / vmax;
    std::array<bool, 6> filled{};
    // env_vehicles is sorted nearest first, so the first hit per bearing is the nearest.
    for (const auto& o : p.env_vehicles) {
        const int b = static_cast<int>(bearing_of(ego.lane, ego.x, o.lane, o.x));
        if (filled[b]) continue;
        filled[b] = true;
        f[2 + 2 * b] = (o.x - ego.x) / range;
        f[3 + 2 * b] = (o.v - ego.v) / vmax;
    }
    return f;
}

std::string_view task_objective(Task task) {
    switch (task) {
        case Task::none:
        case Task::avoid_obstacles:
            return "Drive with the convoy at the desired speed, keep the formation and get around slower vehicles "
                   "without collision.";
        case Task::join_convoy:
            return "Catch up with the convoy from behind and settle into the open formation slot at the desired "
                   "speed.";
        case Task::leave_convoy:
            return "Move to the leftmost lane, then speed up or slow down until you are outside the communication "
                   "range of every convoy member.";
        case Task::escort_switch:
            return "Move into your assigned escort slot around the protected vehicle and hold it at the desired "
                   "speed.";
        case Task::protected_vehicle:
            return "Move to the center lane and hold the desired speed while the convoy forms an escort around "
                   "you.";
    }
    return "";
}

namespace {

std::string_view slot_description(SlotKind s) {
    switch (s) {
        case SlotKind::front: return "front, same lane";
        case SlotKind::back: return "behind, same lane";
        case SlotKind::front_left: return "front, left lane";
        case SlotKind::back_left: return "behind, left lane";
        case SlotKind::front_right: return "front, right lane";
        case SlotKind::back_right: return "behind, right lane";
    }
    return "";
}

}  // namespace

SceneDescription build_scene_description(const Perception& p, const VehicleState& ego, Task task,
                                         const SceneExtras& extras) {
    std::string t;
    t.reserve(512 + 64 * p.env_vehicles.size());
    t += "Road: " + std::to_string(p.lane_count) + " lanes (lane 0 is the rightmost, lane " +
         std::to_string(p.lane_count - 1) + " the leftmost), speed limit " + fixed(p.max_speed, 1) + " m/s.\n";
    t += "Ego: veh " + std::to_string(ego.id) + ", lane " + std::to_string(ego.lane) + ", x " + fixed(ego.x, 1) +
         " m, speed " + fixed(ego.v, 1) + " m/s";
    if (extras.targets) {
        t += ", target lane " + std::to_string(extras.targets->target_lane) + ", target speed " +
             fixed(extras.targets->target_speed, 1) + " m/s";
    }
    t += ".\n";

    t += "Environment vehicles:\n";
    if (p.env_vehicles.empty()) t += "- (none)\n";
    for (const auto& o : p.env_vehicles) {
        t += "- veh " + std::to_string(o.id) + ": lane " + std::to_string(o.lane) + ", " +
             std::string(to_string(bearing_of(ego.lane, ego.x, o.lane, o.x))) + ", dx " + signed_fixed(o.x - ego.x, 1) +
             " m, speed " + fixed(o.v, 1) + " m/s\n";
    }

    t += "Convoy neighbors:\n";
    if (p.convoy_neighbors.occupied() == 0) t += "- (none)\n";
    for (SlotKind s : kAllSlots) {
        const auto& n = p.convoy_neighbors[s];
        if (!n) continue;
        t += "- " + std::string(to_string(s)) + " (" + std::string(slot_description(s)) + "): veh " +
             std::to_string(n->id) + ", dx " + signed_fixed(n->x - ego.x, 1) + " m, speed " + fixed(n->v, 1) +
             " m/s\n";
    }

    t += "Task: " + std::string(to_string(task)) + ". " + std::string(task_objective(task));
    if (extras.goal.lane) t += " Goal lane: " + std::to_string(*extras.goal.lane) + ".";
    if (extras.goal.x) t += " Goal position: dx " + signed_fixed(*extras.goal.x - ego.x, 1) + " m.";
    const auto id_list = [](const std::vector<VehicleId>& ids) {
        std::string out;
        for (VehicleId id : ids) out += (out.empty() ? "" : ", ") + std::to_string(id);
        return out;
    };
    if (!extras.goal.stay_ahead_of.empty()) t += " Stay ahead of: " + id_list(extras.goal.stay_ahead_of) + ".";
    if (!extras.goal.stay_behind.empty()) t += " Stay behind: " + id_list(extras.goal.stay_behind) + ".";
    t += "\n";

    return SceneDescription{std::move(t), scene_features(p, ego), task};
}

std::string_view system_preamble() {
    return "You are the driving decision module of one connected automated vehicle in a multi-lane highway "
           "convoy.\n"
           "Each turn you receive a scene description and choose exactly one high-level action:\n"
           "- IDLE: keep the current lane and cruise at no more than the desired convoy speed, following the "
           "vehicle ahead.\n"
           "- LANE_LEFT: change to the adjacent lane on the left.\n"
           "- LANE_RIGHT: change to the adjacent lane on the right.\n"
           "- FASTER: raise the target speed by one step.\n"
           "- SLOWER: lower the target speed by one step.\n"
           "Lane 0 is the rightmost lane. Only change lanes into a gap that is clear ahead and behind. "
           "Convoy neighbors make room for you in the formation; environment vehicles do not.\n"
           "Reply with one JSON object: {\"reasoning\": \"<one or two sentences>\", \"decision\": \"<ACTION>\"}.";
}

std::string_view json_reminder() {
    return "Your previous reply could not be parsed. Respond with valid JSON only, for example "
           "{\"reasoning\": \"...\", \"decision\": \"IDLE\"}.";
}

Prompt generate_prompt(const SceneDescription& scene, std::span<const Experience> examples, std::size_t k) {
    Prompt prompt;
    prompt.system = std::string(system_preamble());
    const std::size_t n = std::min(k, examples.size());
    std::string& u = prompt.user;
    if (n == 0) {
        u += "No past experiences are available for this task; decide from the scene alone.\n\n";
    } else {
        u += "Past experiences from similar situations (" + std::to_string(n) + "):\n\n";
        for (std::size_t i = 0; i < n; ++i) {
            u += "### Example " + std::to_string(i + 1) + "\n";
            u += examples[i].scene_text;
            u += "Decision: " + std::string(to_string(examples[i].decision)) + "\n\n";
        }
    }
    u += "### Current scene\n";
    u += scene.text;
    u += "\nRespond with a JSON object {\"reasoning\": string, \"decision\": one of IDLE, LANE_LEFT, LANE_RIGHT, "
         "FASTER, SLOWER}.";
    return prompt;
}

namespace {

std::optional<DecisionAction> decision_from_json(std::string_view text) {
    const auto j = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (!j.is_object()) return std::nullopt;
    const auto it = j.find("decision");
    if (it == j.end() || !it->is_string()) return std::nullopt;
    return action_from_string(it->get<std::string>());
}

}  // namespace

std::optional<DecisionAction> decode_decision(std::string_view raw) {
    if (auto d = decision_from_json(raw)) return d;
    const auto open = raw.find('{');
    const auto close = raw.rfind('}');
    if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
        if (auto d = decision_from_json(raw.substr(open, close - open + 1))) return d;
    }
    std::optional<DecisionAction> best;
    std::size_t best_pos = 0;
    for (DecisionAction a : kAllActions) {
        const auto pos = raw.rfind(to_string(a));
        if (pos == std::string_view::npos) continue;
        if (!best || pos > best_pos) {
            best = a;
            best_pos = pos;
        }
    }
    return best;
}

ActionTargets decode_action(DecisionAction a, const VehicleState& ego, const ActionTargets& current,
                            const HighwayConfig& cfg, const ControlWeights& w, double speed_step) {
    const bool committed_valid = current.target_lane >= 0 && current.target_lane < cfg.lane_count;
    const int base = committed_valid ? current.target_lane : std::clamp(ego.lane, 0, cfg.lane_count - 1);
    const double speed = std::clamp(current.target_speed, 0.0, cfg.max_speed);
    const ActionTargets idle{base, std::min(w.v_desired, speed)};
    switch (a) {
        case DecisionAction::idle: return idle;
        case DecisionAction::lane_left: return base + 1 < cfg.lane_count ? ActionTargets{base + 1, speed} : idle;
        case DecisionAction::lane_right: return base > 0 ? ActionTargets{base - 1, speed} : idle;
        case DecisionAction::faster: return {base, std::min(speed + speed_step, cfg.max_speed)};
        case DecisionAction::slower: return {base, std::max(speed - speed_step, 0.0)};
    }
    return idle;
}

}  // namespace convoy
