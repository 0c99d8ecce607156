#include "convoy/memory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>

#include <nlohmann/json.hpp>

namespace convoy {

using nlohmann::json;

std::string_view to_string(Outcome outcome) {
    switch (outcome) {
        case Outcome::success: return "success";
        case Outcome::collision: return "collision";
        case Outcome::timeout: return "timeout";
    }
    return "unknown";
}

std::optional<Outcome> outcome_from_string(std::string_view s) {
    for (Outcome o : {Outcome::success, Outcome::collision, Outcome::timeout}) {
        if (to_string(o) == s) return o;
    }
    return std::nullopt;
}

Task experience_area(Task task) {
    switch (task) {
        case Task::join_convoy:
        case Task::leave_convoy:
        case Task::escort_switch: return task;
        case Task::protected_vehicle: return Task::escort_switch;
        default: return Task::avoid_obstacles;
    }
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = std::min(a.size(), b.size());
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

MalformedLineError::MalformedLineError(std::size_t line, const std::string& what)
    : Error("experience file line " + std::to_string(line) + ": " + what), line_(line) {}

ExperiencePool::ExperiencePool(const ExperiencePool& other) {
    std::shared_lock lock(other.mutex_);
    areas_ = other.areas_;
}

ExperiencePool& ExperiencePool::operator=(const ExperiencePool& other) {
    if (this == &other) return *this;
    std::array<std::vector<Experience>, 4> copy;
    {
        std::shared_lock lock(other.mutex_);
        copy = other.areas_;
    }
    std::unique_lock lock(mutex_);
    areas_ = std::move(copy);
    return *this;
}

std::size_t ExperiencePool::area_index(Task task) {
    for (std::size_t i = 0; i < std::size(kTaskAreas); ++i) {
        if (kTaskAreas[i] == task) return i;
    }
    throw PreconditionError("experience task must be one of the four task areas, got " +
                            std::string(to_string(task)));
}

void ExperiencePool::store(Experience e) {
    const std::size_t idx = area_index(e.task);
    if (e.features.size() != kFeatureDim)
        throw PreconditionError("experience features must have dimension " + std::to_string(kFeatureDim));
    std::unique_lock lock(mutex_);
    areas_[idx].push_back(std::move(e));
}

std::vector<RetrievedExperience> ExperiencePool::retrieve_similar(Task task, std::span<const double> query,
                                                                  std::size_t k) const {
    const std::size_t idx = area_index(experience_area(task));
    struct Scored {
        double sim;
        std::size_t pos;
    };
    std::vector<Scored> scored;
    std::shared_lock lock(mutex_);
    const auto& area = areas_[idx];
    for (std::size_t i = 0; i < area.size(); ++i) {
        if (area[i].outcome != Outcome::success) continue;
        scored.push_back({cosine_similarity(query, area[i].features), i});
    }
    const std::size_t n = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                      [](const Scored& a, const Scored& b) { return a.sim != b.sim ? a.sim > b.sim : a.pos > b.pos; });
    std::vector<RetrievedExperience> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back({area[scored[i].pos], scored[i].sim});
    return out;
}

std::vector<Experience> ExperiencePool::area(Task task) const {
    const std::size_t idx = area_index(task);
    std::shared_lock lock(mutex_);
    return areas_[idx];
}

std::size_t ExperiencePool::size(Task task) const {
    const std::size_t idx = area_index(task);
    std::shared_lock lock(mutex_);
    return areas_[idx].size();
}

std::size_t ExperiencePool::size() const {
    std::shared_lock lock(mutex_);
    std::size_t n = 0;
    for (const auto& a : areas_) n += a.size();
    return n;
}

bool ExperiencePool::operator==(const ExperiencePool& other) const {
    if (this == &other) return true;
    std::shared_lock a(mutex_);
    std::shared_lock b(other.mutex_);
    return areas_ == other.areas_;
}

std::string experience_to_json_line(const Experience& e) {
    json j = {{"task", to_string(e.task)},         {"features", e.features},
              {"scene_text", e.scene_text},        {"decision", to_string(e.decision)},
              {"outcome", to_string(e.outcome)},   {"run_seed", e.run_seed},
              {"step", e.step}};
    return j.dump();
}

Experience experience_from_json_line(const std::string& line) {
    const json j = json::parse(line);
    Experience e;
    const auto task = task_from_string(j.at("task").get<std::string>());
    if (!task) throw std::invalid_argument("unknown task");
    e.task = *task;
    e.features = j.at("features").get<std::vector<double>>();
    e.scene_text = j.at("scene_text").get<std::string>();
    const auto decision = action_from_string(j.at("decision").get<std::string>());
    if (!decision) throw std::invalid_argument("unknown decision");
    e.decision = *decision;
    const auto outcome = outcome_from_string(j.at("outcome").get<std::string>());
    if (!outcome) throw std::invalid_argument("unknown outcome");
    e.outcome = *outcome;
    e.run_seed = j.at("run_seed").get<std::uint64_t>();
    e.step = j.at("step").get<std::int64_t>();
    return e;
}

void ExperiencePool::persist(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    std::shared_lock lock(mutex_);
    for (const auto& area : areas_) {
        for (const auto& e : area) out << experience_to_json_line(e) << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

ExperiencePool ExperiencePool::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    ExperiencePool pool;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        Experience e;
        try {
            e = experience_from_json_line(line);
        } catch (const std::exception& ex) {
            throw MalformedLineError(lineno, ex.what());
        }
        try {
            pool.store(std::move(e));
        } catch (const PreconditionError& ex) {
            throw MalformedLineError(lineno, ex.what());
        }
    }
    return pool;
}

}  // namespace convoy
