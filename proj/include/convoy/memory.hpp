#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "convoy/types.hpp"

namespace convoy {

/// Dimension of the scene feature vector used for similarity search.
inline constexpr std::size_t kFeatureDim = 14;

enum class Outcome { success, collision, timeout };

std::string_view to_string(Outcome outcome);
std::optional<Outcome> outcome_from_string(std::string_view s);

/// The four task areas of the pool, in storage order.
inline constexpr Task kTaskAreas[] = {Task::avoid_obstacles, Task::join_convoy, Task::leave_convoy,
                                      Task::escort_switch};

/// Area an ego task reads from and writes to. Plain driving uses the obstacle area and the
/// protected vehicle shares the escort area.
Task experience_area(Task task);

struct Experience {
    Task task = Task::avoid_obstacles;
    std::vector<double> features;
    std::string scene_text;
    DecisionAction decision = DecisionAction::idle;
    Outcome outcome = Outcome::success;
    std::uint64_t run_seed = 0;
    std::int64_t step = 0;

    bool operator==(const Experience&) const = default;
};

struct RetrievedExperience {
    Experience experience;
    double similarity = 0.0;
};

/// Cosine similarity; 0 when either vector has zero norm.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

class MalformedLineError : public Error {
public:
    MalformedLineError(std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Task-oriented experience pool: four append-only areas, concurrent readers, serialized writers.
class ExperiencePool {
public:
    ExperiencePool() = default;
    ExperiencePool(const ExperiencePool& other);
    ExperiencePool& operator=(const ExperiencePool& other);

    /// Appends to the area of `e.task`. Throws PreconditionError for a malformed record.
    void store(Experience e);

    /// Top-k successful experiences of `task`'s area by cosine similarity, descending; ties go to
    /// the more recently stored record.
    std::vector<RetrievedExperience> retrieve_similar(Task task, std::span<const double> query, std::size_t k) const;

    std::vector<Experience> area(Task task) const;
    std::size_t size(Task task) const;
    std::size_t size() const;

    void persist(const std::filesystem::path& path) const;
    static ExperiencePool load(const std::filesystem::path& path);

    bool operator==(const ExperiencePool& other) const;

private:
    static std::size_t area_index(Task task);

    mutable std::shared_mutex mutex_;
    std::array<std::vector<Experience>, 4> areas_;
};

std::string experience_to_json_line(const Experience& e);
Experience experience_from_json_line(const std::string& line);

}  // namespace convoy
