#include "convoy/backend.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <regex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace convoy {

std::string_view to_string(BackendKind kind) {
    switch (kind) {
        case BackendKind::llm_http: return "llm_http";
        case BackendKind::oracle: return "oracle";
    }
    return "unknown";
}

std::optional<BackendKind> backend_kind_from_string(std::string_view s) {
    if (s == "llm_http" || s == "llm") return BackendKind::llm_http;
    if (s == "oracle") return BackendKind::oracle;
    return std::nullopt;
}

std::string_view to_string(BackendError::Kind kind) {
    switch (kind) {
        case BackendError::Kind::network_unreachable: return "network_unreachable";
        case BackendError::Kind::timeout_exhausted: return "timeout_exhausted";
        case BackendError::Kind::malformed_response: return "malformed_response";
        case BackendError::Kind::http_error: return "http_error";
    }
    return "unknown";
}

void BackendConfig::validate() const {
    if (kind == BackendKind::oracle) return;
    if (endpoint.empty())
        throw ConfigError("llm_http backend needs an endpoint (set --endpoint or " + std::string(kEndpointEnv) + ")");
    if (model.empty())
        throw ConfigError("llm_http backend needs a model name (set --model or " + std::string(kModelEnv) + ")");
    if (!(timeout_s > 0)) throw ConfigError("backend timeout must be > 0");
    if (max_retries < 0) throw ConfigError("backend max_retries must be >= 0");
}

BackendConfig apply_backend_env(BackendConfig cfg) {
    if (const char* e = std::getenv(std::string(kEndpointEnv).c_str()); e && *e) cfg.endpoint = e;
    if (const char* m = std::getenv(std::string(kModelEnv).c_str()); m && *m) cfg.model = m;
    return cfg;
}

std::string chat_request_body(const Prompt& prompt, const BackendConfig& cfg) {
    nlohmann::json body = {
        {"model", cfg.model},
        {"messages",
         nlohmann::json::array({{{"role", "system"}, {"content", prompt.system}},
                                {{"role", "user"}, {"content", prompt.user}}})},
        {"temperature", cfg.temperature},
    };
    return body.dump();
}

std::string chat_response_content(std::string_view body) {
    const auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded()) throw BackendError(BackendError::Kind::malformed_response, "response is not JSON");
    const auto choices = j.find("choices");
    if (choices == j.end() || !choices->is_array() || choices->empty())
        throw BackendError(BackendError::Kind::malformed_response, "response has no choices");
    const auto& first = (*choices)[0];
    if (!first.is_object() || !first.contains("message") || !first["message"].is_object())
        throw BackendError(BackendError::Kind::malformed_response, "choices[0] has no message");
    const auto& msg = first["message"];
    const auto content = msg.find("content");
    if (content == msg.end() || !content->is_string())
        throw BackendError(BackendError::Kind::malformed_response, "choices[0].message.content is not a string");
    return content->get<std::string>();
}

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Endpoint parse_endpoint(const std::string& url) {
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, re)) throw ConfigError("invalid endpoint URL: " + url);
    Endpoint ep{m[1].str(), m[2].matched ? m[2].str() : std::string()};
    if (ep.path.empty() || ep.path == "/") ep.path = "/v1/chat/completions";
    return ep;
}

using Clock = std::chrono::steady_clock;

void set_timeouts(httplib::Client& client, double seconds) {
    const auto us = std::chrono::microseconds(std::max<std::int64_t>(1000, static_cast<std::int64_t>(seconds * 1e6)));
    const auto sec = std::chrono::duration_cast<std::chrono::seconds>(us);
    const auto rest = us - sec;
    client.set_connection_timeout(sec.count(), rest.count());
    client.set_read_timeout(sec.count(), rest.count());
    client.set_write_timeout(sec.count(), rest.count());
}

}  // namespace

std::string decide_http(const Prompt& prompt, const BackendConfig& cfg) {
    cfg.validate();
    const Endpoint ep = parse_endpoint(cfg.endpoint);
    const std::string body = chat_request_body(prompt, cfg);

    httplib::Headers headers;
    if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key)
        headers.emplace("Authorization", std::string("Bearer ") + key);

    const auto start = Clock::now();
    const auto deadline = start + std::chrono::duration_cast<Clock::duration>(
                                      std::chrono::duration<double>(cfg.timeout_s * (cfg.max_retries + 1)));
    auto remaining = [&] { return std::chrono::duration<double>(deadline - Clock::now()).count(); };

    BackendError::Kind last_kind = BackendError::Kind::timeout_exhausted;
    std::string last_msg = "no attempt made";
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        if (attempt > 0) {
            const double backoff = cfg.backoff_base_s * std::pow(2.0, attempt - 1);
            if (backoff >= remaining()) break;
            std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
        }
        const double budget = std::min(cfg.timeout_s, remaining());
        if (budget <= 0) break;

        httplib::Client client(ep.origin);
        set_timeouts(client, budget);
        const auto attempt_start = Clock::now();
        auto res = client.Post(ep.path, headers, body, "application/json");
        if (!res) {
            const auto err = res.error();
            const double took = std::chrono::duration<double>(Clock::now() - attempt_start).count();
            const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                                   ((err == httplib::Error::Read || err == httplib::Error::Write) &&
                                    took >= 0.9 * budget);
            last_kind = timed_out ? BackendError::Kind::timeout_exhausted : BackendError::Kind::network_unreachable;
            last_msg = httplib::to_string(err);
            continue;
        }
        if (res->status >= 500) {
            last_kind = BackendError::Kind::http_error;
            last_msg = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status < 200 || res->status >= 300)
            throw BackendError(BackendError::Kind::http_error, "llm endpoint returned HTTP " +
                                                                   std::to_string(res->status));
        return chat_response_content(res->body);
    }
    if (last_kind == BackendError::Kind::timeout_exhausted && remaining() <= 0)
        throw BackendError(last_kind, "llm request timed out after " + std::to_string(cfg.max_retries + 1) +
                                          " attempt(s): " + last_msg);
    throw BackendError(last_kind, "llm request failed after retries: " + last_msg);
}

namespace {

DecisionAction toward(int from, int to) { return to > from ? DecisionAction::lane_left : DecisionAction::lane_right; }

class OracleView {
public:
    OracleView(const OracleScene& s, const ControlWeights& w, const OracleParams& p)
        : s_(s), w_(w), p_(p) {
        const int lanes = std::max(s.perception.lane_count, 1);
        const bool valid = s.targets.target_lane >= 0 && s.targets.target_lane < lanes;
        committed_ = valid ? s.targets.target_lane : std::clamp(s.ego.lane, 0, lanes - 1);
    }

    int committed() const { return committed_; }
    int leftmost() const { return s_.perception.lane_count - 1; }
    bool lane_valid(int lane) const { return lane >= 0 && lane < s_.perception.lane_count; }

    bool settled() const {
        const double center = (committed_ + 0.5) * s_.perception.lane_width;
        return s_.perception.lane_width <= 0 || std::abs(s_.ego.y - center) <= p_.settle_tolerance;
    }

    bool gap_ok(int lane) const {
        const auto& ego = s_.ego;
        for (const auto& o : s_.perception.env_vehicles) {
            if (o.lane != lane) continue;
            const double dx = o.x - ego.x;
            if (dx >= 0) {
                if (dx < p_.front_gap_factor * w_.d_safe + std::max(0.0, ego.v - o.v) * p_.closing_horizon_s)
                    return false;
            } else if (-dx < p_.rear_gap_factor * w_.d_safe + std::max(0.0, o.v - ego.v) * p_.closing_horizon_s) {
                return false;
            }
        }
        for (const auto& n : s_.perception.convoy_neighbors.slots) {
            if (n && n->lane == lane && std::abs(n->x - ego.x) < p_.convoy_gap) return false;
        }
        return true;
    }

    double front_space(int lane) const {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& o : s_.perception.env_vehicles) {
            const double dx = o.x - s_.ego.x;
            if (o.lane == lane && dx >= 0) best = std::min(best, dx);
        }
        return best;
    }

    /// Nearest environment vehicle ahead in `lane` within `range` slower than `speed`.
    const SensedVehicle* slower_ahead(int lane, double range, double speed) const {
        const SensedVehicle* best = nullptr;
        for (const auto& o : s_.perception.env_vehicles) {
            const double dx = o.x - s_.ego.x;
            if (o.lane != lane || dx < 0 || dx > range || o.v >= speed - p_.slower_margin) continue;
            if (!best || dx < best->x - s_.ego.x) best = &o;
        }
        return best;
    }

    double lookahead() const { return p_.lookahead_factor * w_.d_safe; }

private:
    const OracleScene& s_;
    const ControlWeights& w_;
    const OracleParams& p_;
    int committed_ = 0;
};

DecisionAction obstacle_rule(const OracleScene& s, const OracleView& view, const ControlWeights& w) {
    const int lane = view.committed();
    const double target = s.targets.target_speed;
    if (const auto* blocker = view.slower_ahead(lane, view.lookahead(), target)) {
        std::optional<int> best;
        for (int cand : {lane + 1, lane - 1}) {
            if (!view.lane_valid(cand) || !view.gap_ok(cand)) continue;
            if (!best || view.front_space(cand) > view.front_space(*best)) best = cand;
        }
        if (best) return toward(lane, *best);
        return target > blocker->v ? DecisionAction::slower : DecisionAction::idle;
    }
    if (target < w.v_desired && !view.slower_ahead(lane, view.lookahead(), w.v_desired))
        return DecisionAction::faster;
    return DecisionAction::idle;
}

// Nudges the target speed so the formation settles with ego in its slot, then returns it to v_desired.
DecisionAction slot_tracking(const OracleScene& s, const ControlWeights& w, const OracleParams& p) {
    const double behind = *s.goal.x - s.ego.x;
    const double target = s.targets.target_speed;
    if (behind > p.slot_tolerance) return DecisionAction::faster;
    if (behind < -p.slot_tolerance)
        return target > w.v_desired - p.max_slowdown + 1e-9 ? DecisionAction::slower : DecisionAction::idle;
    return target < w.v_desired - 1e-9 ? DecisionAction::faster : DecisionAction::idle;
}

// Adjacent-lane neighbours hold their relative order under the formation law; a bias is needed to swap.
std::optional<DecisionAction> resolve_ordering(const OracleScene& s, const ControlWeights& w, const OracleParams& p) {
    const auto listed = [](const std::vector<VehicleId>& ids, VehicleId id) {
        return std::find(ids.begin(), ids.end(), id) != ids.end();
    };
    bool pass = false;
    bool yield = false;
    for (SlotKind k : {SlotKind::front_left, SlotKind::front_right, SlotKind::back_left, SlotKind::back_right}) {
        const auto& n = s.perception.convoy_neighbors[k];
        if (!n) continue;
        const bool in_front = n->x >= s.ego.x;
        if (in_front && listed(s.goal.stay_ahead_of, n->id)) pass = true;
        if (!in_front && listed(s.goal.stay_behind, n->id)) yield = true;
    }
    if (pass == yield) return std::nullopt;
    const double target = s.targets.target_speed;
    if (pass) return DecisionAction::faster;
    return target > w.v_desired - p.max_slowdown + 1e-9 ? DecisionAction::slower : DecisionAction::idle;
}

DecisionAction cruise(const OracleScene& s, const ControlWeights& w) {
    const double target = s.targets.target_speed;
    if (target < w.v_desired - 1e-9) return DecisionAction::faster;
    if (target > w.v_desired + 1e-9) return DecisionAction::slower;
    return DecisionAction::idle;
}

}  // namespace

DecisionAction decide_oracle(const OracleScene& s, const ControlWeights& w, const OracleParams& params) {
    const OracleView view(s, w, params);
    const int lane = view.committed();
    const double ahead_of_goal = s.goal.x ? *s.goal.x - s.ego.x : 0.0;

    if (!view.settled()) {
        if (s.task == Task::join_convoy && ahead_of_goal > 2.0 * w.d_safe) return DecisionAction::faster;
        return DecisionAction::idle;
    }

    switch (s.task) {
        case Task::join_convoy: {
            const int goal_lane = s.goal.lane.value_or(lane);
            if (goal_lane != lane) {
                const int next = lane + (goal_lane > lane ? 1 : -1);
                if (view.gap_ok(next)) return toward(lane, goal_lane);
            }
            if (view.slower_ahead(lane, view.lookahead(), s.targets.target_speed)) return DecisionAction::idle;
            return ahead_of_goal > 2.0 * w.d_safe ? DecisionAction::faster : DecisionAction::idle;
        }
        case Task::leave_convoy: {
            if (lane < view.leftmost()) return view.gap_ok(lane + 1) ? DecisionAction::lane_left : DecisionAction::idle;
            return view.slower_ahead(lane, view.lookahead(), s.targets.target_speed) ? DecisionAction::slower
                                                                                      : DecisionAction::faster;
        }
        case Task::escort_switch:
        case Task::protected_vehicle: {
            const int goal_lane = s.goal.lane.value_or(lane);
            if (goal_lane != lane) {
                const int next = lane + (goal_lane > lane ? 1 : -1);
                return view.gap_ok(next) ? toward(lane, goal_lane) : DecisionAction::idle;
            }
            if (view.slower_ahead(lane, view.lookahead(), s.targets.target_speed)) return obstacle_rule(s, view, w);
            if (const auto a = resolve_ordering(s, w, params)) return *a;
            if (s.goal.x) return slot_tracking(s, w, params);
            return cruise(s, w);
        }
        case Task::none:
        case Task::avoid_obstacles: return obstacle_rule(s, view, w);
    }
    return DecisionAction::idle;
}

}  // namespace convoy
