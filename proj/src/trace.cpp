#include "convoy/trace.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "text_format.hpp"

namespace convoy {

using detail::fixed;

TraceFormatError::TraceFormatError(std::size_t line, const std::string& what)
    : Error("trace line " + std::to_string(line) + ": " + what), line_(line) {}

std::string trace_row_to_csv(const TraceRow& r) {
    std::string s;
    s.reserve(96);
    s += std::to_string(r.step);
    s += ',' + fixed(r.time, 3);
    s += ',' + std::to_string(r.id);
    s += ',' + std::string(to_string(r.role));
    s += ',' + std::string(to_string(r.task));
    s += ',' + std::to_string(r.lane);
    s += ',' + fixed(r.x, 6);
    s += ',' + fixed(r.y, 6);
    s += ',' + fixed(r.v, 6);
    s += ',' + fixed(r.vy, 6);
    s += ',';
    if (r.decision) s += to_string(*r.decision);
    s += ',';
    if (r.position_error) s += fixed(*r.position_error, 6);
    return s;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
    out << kTraceHeader << '\n';
    for (const auto& r : rows) out << trace_row_to_csv(r) << '\n';
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_trace_csv(out, rows);
    if (!out) throw IoError("failed writing " + path.string());
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char* name) {
    T value{};
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc() || ptr != field.data() + field.size())
        throw TraceFormatError(line, std::string("bad ") + name + " '" + std::string(field) + "'");
    return value;
}

}  // namespace

std::vector<TraceRow> read_trace_csv(std::istream& in) {
    std::vector<TraceRow> rows;
    std::string line;
    std::size_t n = 0;
    if (!std::getline(in, line)) throw TraceFormatError(1, "missing header");
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTraceHeader) throw TraceFormatError(1, "unexpected header '" + line + "'");
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 12) throw TraceFormatError(n, "expected 12 fields, got " + std::to_string(f.size()));
        TraceRow r;
        r.step = parse_number<std::int64_t>(f[0], n, "step");
        r.time = parse_number<double>(f[1], n, "time");
        r.id = parse_number<int>(f[2], n, "id");
        const auto role = role_from_string(f[3]);
        if (!role) throw TraceFormatError(n, "bad role '" + std::string(f[3]) + "'");
        r.role = *role;
        const auto task = task_from_string(f[4]);
        if (!task) throw TraceFormatError(n, "bad task '" + std::string(f[4]) + "'");
        r.task = *task;
        r.lane = parse_number<int>(f[5], n, "lane");
        r.x = parse_number<double>(f[6], n, "x");
        r.y = parse_number<double>(f[7], n, "y");
        r.v = parse_number<double>(f[8], n, "v");
        r.vy = parse_number<double>(f[9], n, "vy");
        if (!f[10].empty()) {
            r.decision = action_from_string(f[10]);
            if (!r.decision) throw TraceFormatError(n, "bad decision '" + std::string(f[10]) + "'");
        }
        if (!f[11].empty()) r.position_error = parse_number<double>(f[11], n, "position_error");
        rows.push_back(r);
    }
    return rows;
}

std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_trace_csv(in);
}

nlohmann::json summary_to_json(const RunSummary& s) {
    nlohmann::json j;
    j["scenario"] = to_string(s.scenario);
    j["seed"] = s.seed;
    j["env_vehicle_count"] = s.env_vehicle_count;
    j["success"] = s.success;
    j["failure_reason"] = s.failure_reason ? nlohmann::json(to_string(*s.failure_reason)) : nlohmann::json(nullptr);
    j["avg_speed"] = s.avg_convoy_speed;
    j["final_PE"] = s.final_pe;
    j["sim_time"] = s.sim_time;
    j["steps"] = s.steps;
    auto collisions = nlohmann::json::array();
    for (const auto& c : s.collisions) collisions.push_back({{"a", c.a}, {"b", c.b}, {"time", c.time}});
    j["collisions"] = std::move(collisions);
    int fallbacks = 0;
    for (const auto& d : s.decisions) fallbacks += d.fallback ? 1 : 0;
    j["decision_count"] = s.decisions.size();
    j["fallback_count"] = fallbacks;
    if (s.error) j["error"] = *s.error;
    return j;
}

nlohmann::json batch_to_json(const ScenarioConfig& base, const BatchResult& batch) {
    nlohmann::json j;
    j["scenario"] = to_string(base.kind);
    j["env_vehicle_count"] = base.env_vehicle_count;
    j["backend"] = to_string(base.backend.kind);
    j["count"] = batch.runs.size();
    j["success_count"] = batch.success_count;
    j["success_rate"] = batch.success_rate;

    std::vector<double> speeds;
    for (const auto& r : batch.runs) {
        if (!r.error) speeds.push_back(r.avg_convoy_speed);
    }
    std::sort(speeds.begin(), speeds.end());
    if (!speeds.empty()) {
        double sum = 0.0;
        for (double v : speeds) sum += v;
        const std::size_t m = speeds.size() / 2;
        j["avg_speed_mean"] = sum / static_cast<double>(speeds.size());
        j["avg_speed_median"] = speeds.size() % 2 ? speeds[m] : (speeds[m - 1] + speeds[m]) / 2.0;
    } else {
        j["avg_speed_mean"] = nullptr;
        j["avg_speed_median"] = nullptr;
    }
    auto hist = nlohmann::json::array();
    for (const auto& b : batch.avg_speed_histogram) hist.push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}});
    j["avg_speed_histogram"] = std::move(hist);
    auto runs = nlohmann::json::array();
    for (const auto& r : batch.runs) runs.push_back(summary_to_json(r));
    j["runs"] = std::move(runs);
    return j;
}

void write_batch_csv(std::ostream& out, const BatchResult& batch) {
    out << "seed,success,failure_reason,avg_speed,final_PE,sim_time,error\n";
    for (const auto& r : batch.runs) {
        std::string err = r.error.value_or("");
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        out << r.seed << ',' << (r.success ? 1 : 0) << ','
            << (r.failure_reason ? std::string(to_string(*r.failure_reason)) : std::string()) << ','
            << fixed(r.avg_convoy_speed, 6) << ',' << fixed(r.final_pe, 6) << ',' << fixed(r.sim_time, 3) << ','
            << err << '\n';
    }
}

ReplayStats replay_stats(const std::vector<TraceRow>& rows) {
    ReplayStats s;
    if (rows.empty()) return s;
    std::set<VehicleId> ids;
    std::set<VehicleId> convoy;
    double speed_sum = 0.0;
    std::size_t speed_n = 0;
    for (const auto& r : rows) {
        ids.insert(r.id);
        s.steps = std::max(s.steps, r.step);
        s.sim_time = std::max(s.sim_time, r.time);
        if (r.role != Role::convoy) continue;
        convoy.insert(r.id);
        speed_sum += r.v;
        ++speed_n;
        s.max_convoy_speed = std::max(s.max_convoy_speed, r.v);
    }
    s.vehicles = static_cast<int>(ids.size());
    s.convoy_vehicles = static_cast<int>(convoy.size());
    s.avg_convoy_speed = speed_n ? speed_sum / static_cast<double>(speed_n) : 0.0;
    for (const auto& r : rows) {
        if (r.step != s.steps || r.role != Role::convoy) continue;
        s.final_pe = std::max(s.final_pe, r.position_error.value_or(0.0));
        if (r.decision) ++s.final_decisions[std::string(to_string(*r.decision))];
    }
    return s;
}

nlohmann::json replay_to_json(const ReplayStats& s) {
    return {
        {"steps", s.steps},
        {"sim_time", s.sim_time},
        {"vehicles", s.vehicles},
        {"convoy_vehicles", s.convoy_vehicles},
        {"avg_speed", s.avg_convoy_speed},
        {"max_convoy_speed", s.max_convoy_speed},
        {"final_PE", s.final_pe},
        {"final_decisions", s.final_decisions},
    };
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace convoy
