#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "convoy/scenario.hpp"

namespace convoy {

inline constexpr std::string_view kTraceHeader = "step,time,id,role,task,lane,x,y,v,vy,decision,position_error";

class TraceFormatError : public Error {
public:
    TraceFormatError(std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

std::string trace_row_to_csv(const TraceRow& row);
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows);
void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& rows);

/// Parses a trace written by write_trace_csv. Values round-trip at the written precision.
std::vector<TraceRow> read_trace_csv(std::istream& in);
std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path);

/// {scenario, seed, success, failure_reason, avg_speed, final_PE, ...}
nlohmann::json summary_to_json(const RunSummary& s);

nlohmann::json batch_to_json(const ScenarioConfig& base, const BatchResult& batch);
void write_batch_csv(std::ostream& out, const BatchResult& batch);

struct ReplayStats {
    std::int64_t steps = 0;         // last recorded step index
    double sim_time = 0.0;
    int vehicles = 0;
    int convoy_vehicles = 0;
    double avg_convoy_speed = 0.0;  // over recorded rows
    double final_pe = 0.0;          // max over convoy rows of the last recorded step
    double max_convoy_speed = 0.0;
    std::map<std::string, int> final_decisions;
};

ReplayStats replay_stats(const std::vector<TraceRow>& rows);
nlohmann::json replay_to_json(const ReplayStats& stats);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace convoy
