#pragma once

#include <string>
#include <string_view>

#include "convoy/reasoning.hpp"
#include "convoy/types.hpp"
#include "convoy/world.hpp"

namespace convoy {

enum class BackendKind { llm_http, oracle };

std::string_view to_string(BackendKind kind);
std::optional<BackendKind> backend_kind_from_string(std::string_view s);

inline constexpr std::string_view kEndpointEnv = "CONVOY_LLM_ENDPOINT";
inline constexpr std::string_view kModelEnv = "CONVOY_LLM_MODEL";
inline constexpr std::string_view kApiKeyEnv = "CONVOY_LLM_API_KEY";

struct BackendConfig {
    BackendKind kind = BackendKind::oracle;
    std::string endpoint;
    std::string model = "llama-3.3";
    // Name of the environment variable holding the API key; the key itself is never stored.
    std::string api_key_env = std::string(kApiKeyEnv);
    double timeout_s = 30.0;
    int max_retries = 2;
    double temperature = 0.0;
    double backoff_base_s = 0.25;

    /// Throws ConfigError when llm_http lacks an endpoint or model.
    void validate() const;
};

/// Fills endpoint and model from CONVOY_LLM_ENDPOINT / CONVOY_LLM_MODEL where they are set.
BackendConfig apply_backend_env(BackendConfig cfg);

class ConfigError : public Error {
public:
    using Error::Error;
};

class BackendError : public Error {
public:
    enum class Kind { network_unreachable, timeout_exhausted, malformed_response, http_error };

    BackendError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

std::string_view to_string(BackendError::Kind kind);

/// Builds the chat-completions request body {model, messages: [system, user], temperature}.
std::string chat_request_body(const Prompt& prompt, const BackendConfig& cfg);

/// Reads choices[0].message.content; throws BackendError(malformed_response).
std::string chat_response_content(std::string_view body);

/// Sends the prompt to an OpenAI-compatible endpoint and returns the raw reply text.
///
/// Timeouts, connection failures and 5xx replies are retried with exponential backoff up to
/// `max_retries` times; the whole call never takes longer than timeout * (max_retries + 1).
std::string decide_http(const Prompt& prompt, const BackendConfig& cfg);

struct OracleParams {
    double lookahead_factor = 2.0;   // slower vehicle ahead within this many D_safe
    double front_gap_factor = 2.0;   // free space ahead in the target lane, in D_safe
    double rear_gap_factor = 1.0;    // free space behind in the target lane, in D_safe
    double closing_horizon_s = 2.0;  // extra gap per m/s of closing speed
    double convoy_gap = 2.0;         // convoy members yield through the formation law
    double settle_tolerance = 0.4;   // lateral distance from the committed centerline counted as settled
    double slower_margin = 0.5;
    double slot_tolerance = 1.0;     // escort: longitudinal slot error tolerated before adjusting speed
    double max_slowdown = 5.0;       // escort: lowest target speed is v_desired minus this
};

struct OracleScene {
    const Perception& perception;
    const VehicleState& ego;
    Task task = Task::none;
    ActionTargets targets;
    TaskGoal goal;
};

/// Deterministic rule-based decision maker standing in for the language model.
DecisionAction decide_oracle(const OracleScene& scene, const ControlWeights& w, const OracleParams& params = {});

}  // namespace convoy
