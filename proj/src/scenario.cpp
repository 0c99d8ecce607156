#include "convoy/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

namespace convoy {

std::string_view to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::avoid_obstacles: return "avoid_obstacles";
        case ScenarioKind::join_convoy: return "join_convoy";
        case ScenarioKind::leave_convoy: return "leave_convoy";
        case ScenarioKind::escort_switch: return "escort_switch";
    }
    return "unknown";
}

std::string_view short_name(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::avoid_obstacles: return "avoid";
        case ScenarioKind::join_convoy: return "join";
        case ScenarioKind::leave_convoy: return "leave";
        case ScenarioKind::escort_switch: return "escort";
    }
    return "unknown";
}

std::optional<ScenarioKind> scenario_from_string(std::string_view s) {
    for (ScenarioKind k : kAllScenarios) {
        if (s == to_string(k) || s == short_name(k)) return k;
    }
    return std::nullopt;
}

Task scenario_task(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::avoid_obstacles: return Task::avoid_obstacles;
        case ScenarioKind::join_convoy: return Task::join_convoy;
        case ScenarioKind::leave_convoy: return Task::leave_convoy;
        case ScenarioKind::escort_switch: return Task::escort_switch;
    }
    return Task::none;
}

std::string_view to_string(FailureReason r) {
    switch (r) {
        case FailureReason::collision: return "collision";
        case FailureReason::timeout: return "timeout";
    }
    return "unknown";
}

void ScenarioConfig::validate() const {
    highway.validate();
    weights.validate();
    backend.validate();
    if (convoy_size < 2) throw PreconditionError("scenario: convoy_size must be >= 2");
    if (env_vehicle_count < 0) throw PreconditionError("scenario: env_vehicle_count must be >= 0");
    if (!(dt > 0)) throw PreconditionError("scenario: dt must be > 0");
    if (decision_period < dt) throw PreconditionError("scenario: decision_period must be >= dt");
    if (!(max_sim_time > 0)) throw PreconditionError("scenario: max_sim_time must be > 0");
    if (trace_stride < 1) throw PreconditionError("scenario: trace_stride must be >= 1");
    if (kind != ScenarioKind::avoid_obstacles && highway.lane_count < 2)
        throw PreconditionError("scenario: " + std::string(to_string(kind)) + " needs at least two lanes");
    if (kind == ScenarioKind::escort_switch && (convoy_size != 8 || highway.lane_count < 3))
        throw PreconditionError("scenario: escort_switch needs 8 convoy vehicles and at least three lanes");
}

ScenarioConfig default_scenario(ScenarioKind kind, std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.kind = kind;
    cfg.seed = seed;
    cfg.env_vehicle_count = kind == ScenarioKind::avoid_obstacles ? 20 : 0;
    return cfg;
}

std::vector<EscortSlot> escort_slot_pattern(const HighwayConfig& road, double d) {
    const int c = road.center_lane();
    const int left = c + 1;
    const int right = c - 1;
    return {{c, 0.0},          {c, d},           {c, -d},          {left, d / 2},
            {left, -d / 2},    {left, -1.5 * d}, {right, d / 2},   {right, -d / 2}};
}

namespace {

// A lane change counts as much as a D_safe longitudinal shift.
double slot_distance(const VehicleState& m, const EscortSlot& slot, double protected_x, const HighwayConfig& road,
                     double d_safe) {
    const double dx = std::abs(m.x - (protected_x + slot.offset));
    const double lanes = std::abs(m.y - lane_center(road, slot.lane)) / road.lane_width;
    return dx + d_safe * lanes;
}

}  // namespace

std::map<VehicleId, EscortSlot> assign_escort_slots(VehicleId protected_id, std::span<const VehicleState> members,
                                                    std::span<const EscortSlot> pattern, const HighwayConfig& road,
                                                    double d_safe) {
    if (members.size() != pattern.size())
        throw PreconditionError("assign_escort_slots: expected " + std::to_string(pattern.size()) + " members, got " +
                                std::to_string(members.size()));
    std::vector<const VehicleState*> others;
    const VehicleState* prot = nullptr;
    for (const auto& m : members) {
        if (m.id == protected_id) prot = &m;
        else others.push_back(&m);
    }
    if (!prot) throw PreconditionError("assign_escort_slots: protected vehicle is not a member");
    std::sort(others.begin(), others.end(), [](const auto* a, const auto* b) { return a->id < b->id; });

    const std::size_t n = others.size();
    std::vector<std::vector<double>> cost(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) cost[i][j] = slot_distance(*others[i], pattern[j + 1], prot->x, road, d_safe);
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::size_t> best = perm;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
        double c = 0.0;
        for (std::size_t i = 0; i < n && c < best_cost; ++i) c += cost[i][perm[i]];
        if (c < best_cost - 1e-12) {
            best_cost = c;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    std::map<VehicleId, EscortSlot> out;
    out[protected_id] = pattern[0];
    for (std::size_t i = 0; i < n; ++i) out[others[i]->id] = pattern[best[i] + 1];
    return out;
}

std::map<VehicleId, EscortSlot> assign_escort_slots(VehicleId protected_id, std::span<const VehicleState> members,
                                                    const HighwayConfig& road, double d_safe) {
    const auto pattern = escort_slot_pattern(road, d_safe);
    return assign_escort_slots(protected_id, members, pattern, road, d_safe);
}

double escort_displacement(const std::map<VehicleId, EscortSlot>& slots, VehicleId protected_id,
                           std::span<const VehicleState> members, const HighwayConfig& road, double d_safe) {
    const auto it = std::find_if(members.begin(), members.end(), [&](const auto& m) { return m.id == protected_id; });
    if (it == members.end()) throw PreconditionError("escort_displacement: protected vehicle is not a member");
    double total = 0.0;
    for (const auto& m : members) {
        if (m.id == protected_id) continue;
        total += slot_distance(m, slots.at(m.id), it->x, road, d_safe);
    }
    return total;
}

namespace {

constexpr std::uint64_t kJitterSalt = 0x9E3779B97F4A7C15ULL;
constexpr VehicleId kDesignatedVehicle = 1;
constexpr VehicleId kProtectedVehicle = 4;

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct SeatPosition {
    int lane;
    double x;
};

// Per-lane columns D_safe apart; odd lanes staggered back by D_safe / 2.
std::vector<SeatPosition> interlaced_seats(int count, int lane_count, double front_x, double d) {
    std::vector<SeatPosition> seats;
    for (int row = 0; static_cast<int>(seats.size()) < count + lane_count; ++row) {
        for (int lane = 0; lane < lane_count; ++lane) {
            const double stagger = (lane % 2 == 1 && lane_count > 1) ? d / 2.0 : 0.0;
            seats.push_back({lane, front_x - row * d - stagger});
        }
    }
    std::stable_sort(seats.begin(), seats.end(), [](const SeatPosition& a, const SeatPosition& b) {
        return a.x != b.x ? a.x > b.x : a.lane < b.lane;
    });
    seats.resize(static_cast<std::size_t>(count));
    return seats;
}

}  // namespace

WorldState init_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    const auto& road = cfg.highway;
    const auto& w = cfg.weights;
    WorldState world;
    world.highway = road;
    world.rng_seed = cfg.seed;

    std::mt19937_64 rng(cfg.seed ^ kJitterSalt);
    const auto seats = interlaced_seats(cfg.convoy_size, road.lane_count, cfg.convoy_front_x, w.d_safe);
    for (int i = 0; i < cfg.convoy_size; ++i) {
        VehicleState v;
        v.id = i + 1;
        v.role = Role::convoy;
        v.task = Task::avoid_obstacles;
        v.lane = seats[static_cast<std::size_t>(i)].lane;
        v.x = seats[static_cast<std::size_t>(i)].x + (2.0 * uniform01(rng) - 1.0) * cfg.initial_jitter;
        v.y = lane_center(road, v.lane);
        v.v = w.v_desired;
        v.desired_speed = w.v_desired;
        world.add_vehicle(v);
    }

    switch (cfg.kind) {
        case ScenarioKind::avoid_obstacles: break;
        case ScenarioKind::join_convoy: {
            double rear = std::numeric_limits<double>::infinity();
            for (const auto& v : world.vehicles) {
                if (v.id != kDesignatedVehicle) rear = std::min(rear, v.x);
            }
            auto& joiner = *world.find(kDesignatedVehicle);
            joiner.task = Task::join_convoy;
            joiner.lane = 0;
            joiner.y = lane_center(road, 0);
            joiner.x = rear - cfg.join_distance;
            break;
        }
        case ScenarioKind::leave_convoy: {
            // The leaver starts at the head of the column so its path to the leftmost lane ends in front.
            double front = -std::numeric_limits<double>::infinity();
            for (const auto& v : world.vehicles) {
                if (v.id != kDesignatedVehicle) front = std::max(front, v.x);
            }
            auto& leaver = *world.find(kDesignatedVehicle);
            leaver.task = Task::leave_convoy;
            leaver.x = std::max(leaver.x, front + 1.0);
            break;
        }
        case ScenarioKind::escort_switch:
            for (auto& v : world.vehicles) v.task = v.id == kProtectedVehicle ? Task::protected_vehicle : Task::escort_switch;
            break;
    }

    const auto env = spawn_environment_vehicles(road, cfg.env_vehicle_count, cfg.seed, cfg.convoy_size + 1);
    for (const auto& e : env) world.add_vehicle(e);
    if (!detect_collisions(world).empty())
        throw PlacementError("cannot seat the convoy without overlapping another vehicle");
    return world;
}

namespace {

using Clock = std::chrono::steady_clock;

struct QueryResult {
    DecisionAction action = DecisionAction::idle;
    double latency_s = 0.0;
    bool fallback = false;
};

QueryResult query_llm(const Prompt& prompt, const BackendConfig& backend) {
    const auto start = Clock::now();
    QueryResult r;
    try {
        auto decoded = decode_decision(decide_http(prompt, backend));
        if (!decoded) {
            Prompt retry = prompt;
            retry.user += "\n\n";
            retry.user += json_reminder();
            decoded = decode_decision(decide_http(retry, backend));
        }
        if (decoded) r.action = *decoded;
        else r.fallback = true;
    } catch (const std::exception&) {
        r.fallback = true;
    }
    r.latency_s = std::chrono::duration<double>(Clock::now() - start).count();
    return r;
}

class Run {
public:
    explicit Run(const ScenarioConfig& cfg) : cfg_(cfg), world_(init_scenario(cfg)) {
        const auto& road = cfg_.highway;
        std::vector<VehicleState> members;
        for (const auto& v : world_.vehicles) {
            if (v.role != Role::convoy) continue;
            members.push_back(v);
            convoy_ids_.push_back(v.id);
            targets_[v.id] = ActionTargets{v.lane, cfg_.weights.v_desired};
            decision_[v.id] = DecisionAction::idle;
            membership_.planning_lane[v.id] = v.lane;
            if (v.task == Task::join_convoy) {
                joiner_ = v.id;
                membership_.hidden.insert(v.id);
            }
            if (v.task == Task::leave_convoy) leaver_ = v.id;
            if (v.task == Task::protected_vehicle) protected_ = v.id;
        }
        if (protected_) slots_ = assign_escort_slots(*protected_, members, road, cfg_.weights.d_safe);
        decision_every_ = std::max<std::int64_t>(1, std::llround(cfg_.decision_period / cfg_.dt));
        summary_.scenario = cfg_.kind;
        summary_.seed = cfg_.seed;
        summary_.env_vehicle_count = cfg_.env_vehicle_count;
    }

    RunSummary execute() {
        const auto& w = cfg_.weights;
        double speed_sum = 0.0;
        std::int64_t speed_samples = 0;
        for (;;) {
            if (world_.step_index % decision_every_ == 0) decide();

            std::map<VehicleId, NeighborSet> nbrs;
            std::map<VehicleId, double> pe;
            for (VehicleId id : convoy_ids_) {
                const auto& v = world_.at(id);
                nbrs[id] = neighbors_in(world_.vehicles, v, membership_, cfg_.highway.comm_range);
                pe[id] = position_error(planning_state(v, membership_), nbrs[id], w.d_safe);
                summary_.pe_series[id].push_back(pe[id]);
                summary_.speed_series[id].push_back(v.v);
                speed_sum += v.v;
                ++speed_samples;
            }

            const bool done = evaluate(pe);
            record(pe, done);
            if (done) break;

            std::map<VehicleId, VelocityCommand> commands;
            for (VehicleId id : convoy_ids_) {
                const auto& v = world_.at(id);
                commands[id] = control_command(v, nbrs[id], w, steering_targets(v), decision_[id], cfg_.highway,
                                               cfg_.dt);
            }
            world_ = step_world(world_, commands, cfg_.dt, cfg_.traffic);
            update_membership();
        }

        summary_.avg_convoy_speed = speed_samples ? speed_sum / static_cast<double>(speed_samples) : 0.0;
        summary_.sim_time = world_.time;
        summary_.steps = world_.step_index;
        summary_.collisions = world_.collisions;
        const Outcome outcome = summary_.success ? Outcome::success
                                : summary_.failure_reason == FailureReason::collision ? Outcome::collision
                                                                                       : Outcome::timeout;
        for (auto& e : experiences_) e.outcome = outcome;
        summary_.experiences = std::move(experiences_);
        return std::move(summary_);
    }

private:
    // Lateral motion toward the committed lane starts only once the next lane is clear around ego.
    ActionTargets steering_targets(const VehicleState& v) const {
        ActionTargets t = targets_.at(v.id);
        if (t.target_lane == v.lane) return t;
        const int next = v.lane + (t.target_lane > v.lane ? 1 : -1);
        if (!lane_entry_clear(world_.vehicles, v, next, cfg_.lane_entry_clearance)) t.target_lane = v.lane;
        return t;
    }

    TaskGoal goal_for(const VehicleState& v) const {
        TaskGoal g;
        const auto& road = cfg_.highway;
        if (v.task == Task::join_convoy) {
            g.lane = road.center_lane();
            g.x = join_goal_x();
        } else if (v.task == Task::escort_switch || v.task == Task::protected_vehicle) {
            const auto& slot = slots_.at(v.id);
            g.lane = slot.lane;
            const auto& prot = world_.at(*protected_);
            if (v.task == Task::escort_switch && !settled_in(prot, slots_.at(prot.id).lane))
                g.x = prot.x + slot.offset;
            for (const auto& [id, other] : slots_) {
                if (id == v.id || std::abs(other.lane - slot.lane) > 1) continue;
                (other.offset < slot.offset ? g.stay_ahead_of : g.stay_behind).push_back(id);
            }
        }
        return g;
    }

    double join_goal_x() const {
        const int goal_lane = cfg_.highway.center_lane();
        double tail = std::numeric_limits<double>::infinity();
        double any = std::numeric_limits<double>::infinity();
        for (VehicleId id : convoy_ids_) {
            if (id == joiner_) continue;
            const auto& v = world_.at(id);
            any = std::min(any, v.x);
            if (membership_.lane_for(v) == goal_lane) tail = std::min(tail, v.x);
        }
        return (std::isfinite(tail) ? tail : any) - cfg_.weights.d_safe;
    }

    void decide() {
        const auto& w = cfg_.weights;
        const bool llm = cfg_.backend.kind == BackendKind::llm_http;
        struct Pending {
            VehicleId id;
            Task area;
            SceneDescription scene;
            std::future<QueryResult> reply;
            QueryResult result;
        };
        std::vector<Pending> pending;
        pending.reserve(convoy_ids_.size());
        for (VehicleId id : convoy_ids_) {
            const auto& ego = world_.at(id);
            const Perception p = sense(world_, id, membership_);
            const TaskGoal goal = goal_for(ego);
            Pending item{id, experience_area(ego.task), build_scene_description(p, ego, ego.task, {targets_[id], goal}),
                         {}, {}};
            if (llm) {
                std::vector<Experience> examples;
                if (cfg_.pool) {
                    for (auto& r : cfg_.pool->retrieve_similar(item.area, item.scene.features,
                                                               cfg_.reasoning.few_shot_k))
                        examples.push_back(std::move(r.experience));
                }
                Prompt prompt = generate_prompt(item.scene, examples, cfg_.reasoning.few_shot_k);
                while (!examples.empty() && prompt.text().size() > cfg_.reasoning.max_prompt_chars) {
                    examples.pop_back();
                    prompt = generate_prompt(item.scene, examples, cfg_.reasoning.few_shot_k);
                }
                item.reply = std::async(std::launch::async, query_llm, std::move(prompt), std::cref(cfg_.backend));
            } else {
                const OracleScene scene{p, ego, ego.task, targets_[id], goal};
                item.result.action = decide_oracle(scene, w, cfg_.oracle);
            }
            pending.push_back(std::move(item));
        }
        for (auto& item : pending) {
            if (item.reply.valid()) item.result = item.reply.get();
            const auto& ego = world_.at(item.id);
            const auto next = decode_action(item.result.action, ego, targets_[item.id], cfg_.highway, w,
                                            cfg_.reasoning.speed_step);
            targets_[item.id] = next;
            decision_[item.id] = item.result.action;
            membership_.planning_lane[item.id] = next.target_lane;
            summary_.decisions.push_back(
                {world_.step_index, item.id, item.result.action, item.result.latency_s, item.result.fallback});
            experiences_.push_back(Experience{item.area, std::move(item.scene.features), std::move(item.scene.text),
                                              item.result.action, Outcome::success, cfg_.seed, world_.step_index});
        }
    }

    bool settled_in(const VehicleState& v, int lane) const {
        return v.lane == lane && std::abs(v.y - lane_center(cfg_.highway, lane)) < 0.2;
    }

    void update_membership() {
        if (joiner_ && membership_.hidden.contains(*joiner_)) {
            const auto& j = world_.at(*joiner_);
            const int goal_lane = cfg_.highway.center_lane();
            if (membership_.lane_for(j) == goal_lane && settled_in(j, goal_lane) &&
                std::abs(j.x - join_goal_x()) <= cfg_.dock_tolerance)
                membership_.hidden.erase(*joiner_);
        }
        if (leaver_ && !membership_.detached.contains(*leaver_)) {
            const auto& l = world_.at(*leaver_);
            const int top = cfg_.highway.leftmost_lane();
            if (membership_.lane_for(l) == top && settled_in(l, top)) membership_.detached.insert(*leaver_);
        }
    }

    bool dwell(bool condition) {
        if (!condition) {
            held_since_.reset();
            return false;
        }
        if (!held_since_) held_since_ = world_.time;
        return world_.time - *held_since_ >= cfg_.settle_time - 1e-9;
    }

    bool success_now(const std::map<VehicleId, double>& pe) {
        const auto& w = cfg_.weights;
        const auto& road = cfg_.highway;
        const auto at_speed = [&](const VehicleState& v) { return std::abs(v.v - w.v_desired) < 0.5; };
        switch (cfg_.kind) {
            case ScenarioKind::avoid_obstacles:
                return std::all_of(convoy_ids_.begin(), convoy_ids_.end(),
                                   [&](VehicleId id) { return world_.at(id).x >= road.length; });
            case ScenarioKind::join_convoy: {
                const auto& j = world_.at(*joiner_);
                return dwell(!membership_.hidden.contains(j.id) && pe.at(j.id) < 1.0 && at_speed(j));
            }
            case ScenarioKind::leave_convoy: {
                if (!membership_.detached.contains(*leaver_)) return false;
                const auto& l = world_.at(*leaver_);
                for (VehicleId id : convoy_ids_) {
                    if (id == l.id) continue;
                    if (std::abs(world_.at(id).x - l.x) <= road.comm_range || pe.at(id) >= 0.5) return false;
                }
                return true;
            }
            case ScenarioKind::escort_switch: {
                const double px = world_.at(*protected_).x;
                bool ok = true;
                for (VehicleId id : convoy_ids_) {
                    const auto& v = world_.at(id);
                    const auto& slot = slots_.at(id);
                    ok = ok && settled_in(v, slot.lane) && std::abs(v.x - (px + slot.offset)) < 0.5 && at_speed(v);
                }
                return dwell(ok);
            }
        }
        return false;
    }

    bool evaluate(const std::map<VehicleId, double>& pe) {
        if (!world_.collisions.empty()) {
            summary_.failure_reason = FailureReason::collision;
        } else if (success_now(pe)) {
            summary_.success = true;
        } else if (world_.time >= cfg_.max_sim_time - 1e-9) {
            summary_.failure_reason = FailureReason::timeout;
        } else {
            return false;
        }
        double worst = 0.0;
        for (const auto& [id, value] : pe) {
            if (!membership_.detached.contains(id)) worst = std::max(worst, value);
        }
        summary_.final_pe = worst;
        return true;
    }

    void record(const std::map<VehicleId, double>& pe, bool final_step) {
        if (!cfg_.record_trace) return;
        if (!final_step && world_.step_index % cfg_.trace_stride != 0) return;
        for (const auto& v : world_.vehicles) {
            TraceRow row{world_.step_index, world_.time, v.id, v.role, v.task, v.lane, v.x, v.y, v.v, v.vy, {}, {}};
            if (v.role == Role::convoy) {
                row.decision = decision_.at(v.id);
                row.position_error = pe.at(v.id);
            }
            summary_.trace.push_back(row);
        }
    }

    const ScenarioConfig& cfg_;
    WorldState world_;
    std::vector<VehicleId> convoy_ids_;
    std::map<VehicleId, ActionTargets> targets_;
    std::map<VehicleId, DecisionAction> decision_;
    FormationMembership membership_;
    std::optional<VehicleId> joiner_;
    std::optional<VehicleId> leaver_;
    std::optional<VehicleId> protected_;
    std::map<VehicleId, EscortSlot> slots_;
    std::int64_t decision_every_ = 10;
    std::optional<double> held_since_;
    std::vector<Experience> experiences_;
    RunSummary summary_;
};

}  // namespace

RunSummary run_scenario(const ScenarioConfig& cfg) { return Run(cfg).execute(); }

std::vector<HistogramBin> speed_histogram(std::span<const RunSummary> runs, double max_speed, double bin_width) {
    if (!(bin_width > 0)) throw PreconditionError("speed_histogram: bin_width must be > 0");
    const int bins = std::max(1, static_cast<int>(std::ceil(max_speed / bin_width)));
    std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
    for (int i = 0; i < bins; ++i) out[static_cast<std::size_t>(i)] = {i * bin_width, (i + 1) * bin_width, 0};
    for (const auto& r : runs) {
        if (r.error) continue;
        const int b = std::clamp(static_cast<int>(std::floor(r.avg_convoy_speed / bin_width)), 0, bins - 1);
        ++out[static_cast<std::size_t>(b)].count;
    }
    return out;
}

BatchResult run_batch(const ScenarioConfig& base, std::span<const std::uint64_t> seeds, int workers,
                      const std::function<void(const RunSummary&)>& on_run) {
    if (seeds.empty()) throw PreconditionError("run_batch: seeds must be non-empty");
    BatchResult result;
    result.runs.resize(seeds.size());
    std::atomic<std::size_t> next{0};
    const auto work = [&] {
        for (std::size_t i = next++; i < seeds.size(); i = next++) {
            ScenarioConfig cfg = base;
            cfg.seed = seeds[i];
            RunSummary s;
            try {
                s = run_scenario(cfg);
            } catch (const std::exception& e) {
                s.scenario = cfg.kind;
                s.seed = cfg.seed;
                s.env_vehicle_count = cfg.env_vehicle_count;
                s.error = e.what();
            }
            if (on_run) {
                try {
                    on_run(s);
                } catch (const std::exception& e) {
                    s.error = std::string("output: ") + e.what();
                }
            }
            s.trace.clear();
            s.trace.shrink_to_fit();
            result.runs[i] = std::move(s);
        }
    };
    const int n = std::clamp(workers, 1, static_cast<int>(seeds.size()));
    if (n == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < n; ++t) pool.emplace_back(work);
    }
    for (const auto& r : result.runs) result.success_count += r.success ? 1 : 0;
    result.success_rate = static_cast<double>(result.success_count) / static_cast<double>(seeds.size());
    result.avg_speed_histogram = speed_histogram(result.runs, base.highway.max_speed);
    return result;
}

}  // namespace convoy
