#include <chrono>
#include <cstdlib>
#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <doctest.h>

#include "convoy/backend.hpp"
#include "mock_server.hpp"
#include "support.hpp"

using namespace convoy;
using convoy::testing::Gen;
using convoy::testing::MockLlmServer;

namespace {

const HighwayConfig kRoad{};

Perception empty_perception() {
    Perception p;
    p.lane_count = kRoad.lane_count;
    p.lane_width = kRoad.lane_width;
    p.max_speed = kRoad.max_speed;
    p.comm_range = kRoad.comm_range;
    return p;
}

VehicleState ego_in(int lane, double v = 25.0) {
    VehicleState e;
    e.id = 1;
    e.lane = lane;
    e.y = lane_center(kRoad, lane);
    e.v = v;
    return e;
}

DecisionAction decide(const Perception& p, const VehicleState& ego, Task task, double target_speed = 25.0,
                      TaskGoal goal = {}) {
    return decide_oracle(OracleScene{p, ego, task, ActionTargets{ego.lane, target_speed}, std::move(goal)},
                         ControlWeights{});
}

Prompt sample_prompt() { return Prompt{"system text", "user text"}; }

BackendConfig llm_config(const std::string& endpoint) {
    BackendConfig cfg;
    cfg.kind = BackendKind::llm_http;
    cfg.endpoint = endpoint;
    cfg.api_key_env = "CONVOY_TEST_UNSET_KEY";
    return cfg;
}

// A port that was free a moment ago; nothing listens on it.
int unused_port() {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    socklen_t len = sizeof addr;
    ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    ::close(fd);
    return ntohs(addr.sin_port);
}

double seconds_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

}  // namespace

TEST_SUITE("decision_backend") {

TEST_CASE("oracle keeps lane and speed on a clear road") {
    CHECK(decide(empty_perception(), ego_in(1), Task::avoid_obstacles) == DecisionAction::idle);
}

TEST_CASE("oracle overtakes a slow vehicle on the clear side") {
    auto p = empty_perception();
    p.env_vehicles.push_back({100, 1, 15.0, 15.0});
    p.env_vehicles.push_back({101, 0, 5.0, 25.0});
    CHECK(decide(p, ego_in(1), Task::avoid_obstacles) == DecisionAction::lane_left);

    p.env_vehicles[1].lane = 2;
    CHECK(decide(p, ego_in(1), Task::avoid_obstacles) == DecisionAction::lane_right);
}

TEST_CASE("oracle slows behind a blocker when both sides are taken") {
    auto p = empty_perception();
    p.env_vehicles.push_back({100, 1, 15.0, 15.0});
    p.env_vehicles.push_back({101, 0, 5.0, 25.0});
    p.env_vehicles.push_back({102, 2, -3.0, 25.0});
    CHECK(decide(p, ego_in(1), Task::avoid_obstacles) == DecisionAction::slower);
    CHECK(decide(p, ego_in(1), Task::avoid_obstacles, 15.0) == DecisionAction::idle);
}

TEST_CASE("oracle recovers the desired speed once the lane ahead is free") {
    CHECK(decide(empty_perception(), ego_in(1), Task::avoid_obstacles, 20.0) == DecisionAction::faster);
}

TEST_CASE("leaver moves left, then accelerates in the leftmost lane") {
    const auto p = empty_perception();
    CHECK(decide(p, ego_in(1), Task::leave_convoy) == DecisionAction::lane_left);
    CHECK(decide(p, ego_in(2), Task::leave_convoy) == DecisionAction::faster);

    auto blocked = p;
    blocked.env_vehicles.push_back({100, 2, 4.0, 25.0});
    CHECK(decide(blocked, ego_in(1), Task::leave_convoy) == DecisionAction::idle);
}

TEST_CASE("joiner heads for its goal lane and catches up") {
    const auto p = empty_perception();
    TaskGoal goal;
    goal.lane = 1;
    goal.x = 50.0;
    CHECK(decide(p, ego_in(0), Task::join_convoy, 25.0, goal) == DecisionAction::lane_left);
    CHECK(decide(p, ego_in(1), Task::join_convoy, 25.0, goal) == DecisionAction::faster);
    goal.x = 10.0;
    CHECK(decide(p, ego_in(1), Task::join_convoy, 25.0, goal) == DecisionAction::idle);
}

TEST_CASE("escort ordering goals bias speed to swap adjacent-lane neighbours") {
    auto p = empty_perception();
    const auto ego = ego_in(1);
    p.convoy_neighbors[SlotKind::front_left] = NeighborInfo{7, 8.0, 25.0, 2};
    TaskGoal goal;
    goal.lane = 1;
    goal.stay_ahead_of = {7};
    CHECK(decide(p, ego, Task::escort_switch, 25.0, goal) == DecisionAction::faster);

    p.convoy_neighbors[SlotKind::front_left].reset();
    p.convoy_neighbors[SlotKind::back_right] = NeighborInfo{8, -6.0, 25.0, 0};
    goal.stay_ahead_of.clear();
    goal.stay_behind = {8};
    CHECK(decide(p, ego, Task::escort_switch, 25.0, goal) == DecisionAction::slower);
    CHECK(decide(p, ego, Task::escort_switch, 20.0, goal) == DecisionAction::idle);

    goal.stay_behind.clear();
    CHECK(decide(p, ego, Task::escort_switch, 22.5, goal) == DecisionAction::faster);
}

TEST_CASE("escort slot tracking follows the goal position") {
    const auto p = empty_perception();
    TaskGoal goal;
    goal.lane = 1;
    goal.x = 5.0;
    CHECK(decide(p, ego_in(1), Task::escort_switch, 25.0, goal) == DecisionAction::faster);
    goal.x = -5.0;
    CHECK(decide(p, ego_in(1), Task::escort_switch, 25.0, goal) == DecisionAction::slower);
    goal.x = 0.5;
    CHECK(decide(p, ego_in(1), Task::escort_switch, 25.0, goal) == DecisionAction::idle);
}

TEST_CASE("oracle is total and pure over random scenes") {
    Gen g(404);
    const Task tasks[] = {Task::none, Task::avoid_obstacles, Task::join_convoy, Task::leave_convoy,
                          Task::escort_switch, Task::protected_vehicle};
    for (int trial = 0; trial < 2000; ++trial) {
        auto p = empty_perception();
        const int lane = g.integer(0, 2);
        auto ego = ego_in(lane, g.real(10.0, 30.0));
        ego.y += g.coin() ? g.real(-1.0, 1.0) : 0.0;
        const int n = g.integer(0, 12);
        for (int i = 0; i < n; ++i)
            p.env_vehicles.push_back({1000 + i, g.integer(0, 2), g.real(-100.0, 100.0), g.real(10.0, 30.0)});
        for (SlotKind s : kAllSlots) {
            if (g.coin()) p.convoy_neighbors[s] = NeighborInfo{10 + static_cast<int>(s), g.real(-30.0, 30.0), 25.0,
                                                               std::clamp(lane + g.integer(-1, 1), 0, 2)};
        }
        TaskGoal goal;
        if (g.coin()) goal.lane = g.integer(0, 2);
        if (g.coin()) goal.x = g.real(-60.0, 60.0);
        if (g.coin()) goal.stay_ahead_of = {10, 12};
        if (g.coin()) goal.stay_behind = {13, 15};
        const Task task = tasks[g.integer(0, 5)];
        const OracleScene scene{p, ego, task, ActionTargets{lane, g.real(15.0, 30.0)}, goal};

        const auto a = decide_oracle(scene, ControlWeights{});
        CHECK(decide_oracle(scene, ControlWeights{}) == a);
        if (a == DecisionAction::lane_left) CHECK(lane + 1 < kRoad.lane_count);
        if (a == DecisionAction::lane_right) CHECK(lane - 1 >= 0);
    }
}

TEST_CASE("chat request body carries model, both messages and temperature") {
    auto cfg = llm_config("http://127.0.0.1:1/v1/chat/completions");
    cfg.model = "m1";
    const auto body = nlohmann::json::parse(chat_request_body(sample_prompt(), cfg));
    CHECK(body["model"] == "m1");
    REQUIRE(body["messages"].size() == 2);
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][0]["content"] == "system text");
    CHECK(body["messages"][1]["role"] == "user");
    CHECK(body["messages"][1]["content"] == "user text");
    CHECK(body["temperature"] == 0.0);
}

TEST_CASE("chat response content is extracted or rejected as malformed") {
    CHECK(chat_response_content(MockLlmServer::reply("LANE_LEFT")) == "LANE_LEFT");
    for (const char* bad : {"not json", "{}", R"({"choices":[]})", R"({"choices":[{"message":{}}]})",
                            R"({"choices":[{"message":{"content":3}}]})"}) {
        try {
            chat_response_content(bad);
            FAIL("accepted " << bad);
        } catch (const BackendError& e) {
            CHECK(e.kind() == BackendError::Kind::malformed_response);
        }
    }
}

TEST_CASE("validate names the endpoint environment variable") {
    BackendConfig cfg;
    cfg.kind = BackendKind::llm_http;
    try {
        cfg.validate();
        FAIL("validate accepted a missing endpoint");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("CONVOY_LLM_ENDPOINT") != std::string::npos);
    }
    CHECK_NOTHROW(BackendConfig{}.validate());
}

TEST_CASE("environment fills endpoint and model") {
    ::setenv("CONVOY_LLM_ENDPOINT", "http://example.test/v1/chat/completions", 1);
    ::setenv("CONVOY_LLM_MODEL", "env-model", 1);
    const auto cfg = apply_backend_env(BackendConfig{});
    ::unsetenv("CONVOY_LLM_ENDPOINT");
    ::unsetenv("CONVOY_LLM_MODEL");
    CHECK(cfg.endpoint == "http://example.test/v1/chat/completions");
    CHECK(cfg.model == "env-model");
}

TEST_CASE("http backend returns the reply text verbatim") {
    const std::string reply = "  I would go left.\nDecision: LANE_LEFT  ";
    MockLlmServer server([&](const nlohmann::json&, int, httplib::Response& res) {
        res.set_content(MockLlmServer::reply(reply), "application/json");
    });
    auto cfg = llm_config(server.endpoint());
    cfg.model = "mock";
    CHECK(decide_http(sample_prompt(), cfg) == reply);
    const auto reqs = server.requests();
    REQUIRE(reqs.size() == 1);
    CHECK(reqs[0]["model"] == "mock");
    CHECK(reqs[0]["messages"][1]["content"] == "user text");
}

TEST_CASE("http backend retries server errors") {
    MockLlmServer server([](const nlohmann::json&, int n, httplib::Response& res) {
        if (n <= 2) {
            res.status = 500;
            return;
        }
        res.set_content(MockLlmServer::reply("FASTER"), "application/json");
    });
    auto cfg = llm_config(server.endpoint());
    cfg.backoff_base_s = 0.01;
    CHECK(decide_http(sample_prompt(), cfg) == "FASTER");
    CHECK(server.count() == 3);
}

TEST_CASE("http backend gives up on client errors without retrying") {
    MockLlmServer server([](const nlohmann::json&, int, httplib::Response& res) { res.status = 404; });
    auto cfg = llm_config(server.endpoint());
    cfg.backoff_base_s = 0.01;
    try {
        decide_http(sample_prompt(), cfg);
        FAIL("404 accepted");
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendError::Kind::http_error);
    }
    CHECK(server.count() == 1);
}

TEST_CASE("http backend flags a malformed body") {
    MockLlmServer server([](const nlohmann::json&, int, httplib::Response& res) {
        res.set_content(R"({"unexpected": true})", "application/json");
    });
    try {
        decide_http(sample_prompt(), llm_config(server.endpoint()));
        FAIL("malformed body accepted");
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendError::Kind::malformed_response);
    }
}

TEST_CASE("http backend times out within its budget") {
    MockLlmServer server([](const nlohmann::json&, int, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(1200));
        res.set_content(MockLlmServer::reply("IDLE"), "application/json");
    });
    auto cfg = llm_config(server.endpoint());
    cfg.timeout_s = 0.3;
    cfg.max_retries = 1;
    cfg.backoff_base_s = 0.05;
    const auto start = std::chrono::steady_clock::now();
    try {
        decide_http(sample_prompt(), cfg);
        FAIL("hanging server produced a reply");
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendError::Kind::timeout_exhausted);
    }
    CHECK(seconds_since(start) <= cfg.timeout_s * (cfg.max_retries + 1) + 0.25);
}

TEST_CASE("http backend reports an unreachable endpoint") {
    const int port = unused_port();
    auto cfg = llm_config("http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions");
    cfg.timeout_s = 1.0;
    cfg.backoff_base_s = 0.01;
    try {
        decide_http(sample_prompt(), cfg);
        FAIL("unreachable endpoint produced a reply");
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendError::Kind::network_unreachable);
    }
}

TEST_CASE("invalid endpoint URL is a config error") {
    CHECK_THROWS_AS(decide_http(sample_prompt(), llm_config("ftp://nowhere")), ConfigError);
}

}
